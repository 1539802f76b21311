#!/usr/bin/env python3
"""Smoke test for the _crankep extension module.

Builds the cdylib with cargo, stages it as an importable module and runs a
handful of end-to-end checks against known values of the reference
configuration (omega_x = 3, omega_y = 2).
"""

import math
import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
STAGE = ROOT / "python" / "_build"


def build_extension() -> None:
    subprocess.run(
        ["cargo", "build", "-p", "crankep-py", "--release"],
        cwd=ROOT,
        check=True,
    )
    STAGE.mkdir(parents=True, exist_ok=True)
    built = ROOT / "target" / "release" / "lib_crankep.so"
    shutil.copy2(built, STAGE / "_crankep.so")


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main() -> int:
    build_extension()
    sys.path.insert(0, str(STAGE))
    import _crankep as ck

    # closed-form spectrum
    wp, wm = ck.eigenmodes(3.0, 2.0, 0.0)
    assert approx(wp, 3.0) and approx(wm, 2.0), (wp, wm)

    wp, wm = ck.eigenmodes(3.0, 2.0, 2.5)
    expected = math.sqrt((math.sqrt(675.0) - 25.5) / 2.0)
    assert wm.real == 0.0 and approx(wm.imag, expected, 1e-12), wm

    assert ck.instability_window(3.0, 2.0) == (2.0, 3.0)

    # critical points by bisection
    eps = ck.locate_eps(3.0, 2.0)
    assert approx(eps[0][0], 2.0) and approx(eps[1][0], 3.0), eps

    # closed form against the characteristic-polynomial route
    roots = ck.quartic_eigenvalues(ck.dynamical_matrix(3.0, 2.0, 1.0))
    wp, wm = ck.eigenmodes(3.0, 2.0, 1.0)
    for target in (-1j * wp, -1j * wm, 1j * wm, 1j * wp):
        assert min(abs(r - target) for r in roots) < 1e-10, (roots, target)

    # commutator breakdown inside the window
    stable = ck.commutators(3.0, 2.0, 1.0)
    assert stable["is_bosonic"] and approx(stable["c23"], 1.0, 1e-9)
    broken = ck.commutators(3.0, 2.0, 2.5)
    assert not broken["is_bosonic"] and broken["c23"].real < 0.0

    # transform identities: intact outside, broken inside
    t = ck.transform(3.0, 2.0, 1.0)
    assert t["case"] == "stable" and t["normalization_residual"] < 1e-8
    assert t["left_identity_deviation"] < 1e-8
    t = ck.transform(3.0, 2.0, 2.5)
    assert t["case"] == "inside_window" and t["left_identity_deviation"] > 1e-2

    # power laws at the lower critical point
    fit = ck.scaling_exponent(3.0, 2.0, 2.0, "component_norm")
    assert abs(fit["exponent"] + 0.25) < 0.02, fit
    fit = ck.scaling_exponent(3.0, 2.0, 2.0, "overlap")
    assert abs(fit["exponent"] - 0.5) < 0.02, fit

    # monodromy: one loop swaps the coalescing pair, two loops flip the sign
    one = ck.encircle(3.0, 2.0, 2.0, radius=0.05, loops=1)
    moved = [j for j, p in enumerate(one["permutation"]) if p != j]
    assert len(moved) == 2, one
    assert abs(one["phase_factor"] - 1j) < 0.2, one
    two = ck.encircle(3.0, 2.0, 2.0, radius=0.05, loops=2)
    assert two["permutation"] == [0, 1, 2, 3]
    assert abs(two["phase_factor"] + 1.0) < 0.2, two

    # diabolic merger keeps two eigenvectors, the critical point keeps one
    assert ck.diabolic_check(2.0, 2.0, 2.0)["n_independent_eigenvectors"] == 2
    assert ck.diabolic_check(3.0, 2.0, 2.0)["is_ep"]

    # evolution against the Runge-Kutta oracle, and the runaway rate
    s0 = (1.0, 0.0, 0.0, 0.0)
    s1, fell_back = ck.evolve(3.0, 2.0, 1.0, s0, 1.0)
    assert not fell_back
    s1_rk4 = ck.evolve_rk4(3.0, 2.0, 1.0, s0, 1.0, 1e-4)
    assert max(abs(a - b) for a, b in zip(s1, s1_rk4)) < 1e-6

    e0 = ck.routhian_energy(3.0, 2.0, 2.5, (1.0, 1.0, 1.0, 1.0))
    s5, _ = ck.evolve(3.0, 2.0, 2.5, (1.0, 1.0, 1.0, 1.0), 5.0)
    e5 = ck.routhian_energy(3.0, 2.0, 2.5, tuple(s5))
    assert abs(e5 - e0) < 1e-8 * max(abs(e0), 1.0), (e0, e5)

    growth = ck.growth_rate(3.0, 2.0, 2.5, (1.0, 1.0, 1.0, 1.0), 20.0 / expected)
    assert growth["in_window"] and abs(growth["slope"] - expected) < 0.01 * expected

    # coupling map reproduces the rotating-frame form
    c = ck.couplings(3.0, 2.0, 1.0)
    assert approx(c["g_1"], 5.0 / (2.0 * math.sqrt(6.0)), 1e-14)
    assert c["equivalence_residual"] < 1e-12

    rows = ck.spectrum(3.0, 2.0, 0.0, 4.0, 101)
    inside = [r for r in rows if 2.0 < r[0] < 3.0]
    assert inside and all(r[4] != 0.0 and r[3] == 0.0 for r in inside)

    print("smoke test OK:", len(rows), "sweep rows,",
          f"runaway rate {growth['slope']:.6f} vs |w-| {expected:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
