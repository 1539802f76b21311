//! Python bindings for the rotating-oscillator library: spectrum, transform
//! construction, commutators, exceptional-point diagnostics and classical
//! time evolution.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use crankep::bogoliubov::{
    build_transform, commutator_matrix, left_from_right, verify_normalization, ContinuationCase,
};
use crankep::dynamics::{evolve_detailed, evolve_rk4 as rk4, growth_rate as rate, PhaseState};
use crankep::ep_analysis::{
    alignment_measure, coalescence_overlap as overlap, coalescing_pair, diabolic_check as diabolic,
    encircle_ep, locate_eps as locate, scaling_exponent as fit_exponent, LoopDirection,
    ScalingQuantity,
};
use crankep::linalg::{char_poly_eigenvalues, ComplexMatrix4};
use crankep::model::{
    build_dynamical_matrix, build_quadratic_form, eigenmodes as modes, instability_interval,
    map_couplings, quadratic_form_from_couplings, routhian_energy as energy, CouplingSet,
    ModelParams,
};

fn value_err<E: std::fmt::Debug>(e: E) -> PyErr {
    PyValueError::new_err(format!("{e:?}"))
}

fn runtime_err<E: std::fmt::Debug>(e: E) -> PyErr {
    PyRuntimeError::new_err(format!("{e:?}"))
}

fn params(omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<ModelParams> {
    ModelParams::new(omega_x, omega_y, omega).map_err(value_err)
}

fn matrix_rows(m: &ComplexMatrix4) -> Vec<Vec<Complex64>> {
    m.0.iter().map(|row| row.to_vec()).collect()
}

fn state_from(s: [f64; 4]) -> PhaseState {
    PhaseState::new(s[0], s[1], s[2], s[3])
}

/// Eigenmode energies (omega_plus, omega_minus) of the rotating oscillator.
#[pyfunction]
#[pyo3(signature = (omega_x, omega_y, omega))]
fn eigenmodes(omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<(Complex64, Complex64)> {
    let e = modes(&params(omega_x, omega_y, omega)?);
    Ok((e.omega_plus, e.omega_minus))
}

/// Open interval of rotational frequencies with an unstable minus mode.
#[pyfunction]
fn instability_window(omega_x: f64, omega_y: f64) -> (f64, f64) {
    instability_interval(omega_x, omega_y)
}

/// Symmetric quadratic form of the Routhian on (p_x, p_y, x, y).
#[pyfunction]
fn quadratic_form(omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(matrix_rows(&build_quadratic_form(&params(omega_x, omega_y, omega)?).h))
}

/// First-order coefficient matrix of Hamilton's equations.
#[pyfunction]
fn dynamical_matrix(omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(matrix_rows(&build_dynamical_matrix(&params(omega_x, omega_y, omega)?).m))
}

/// Eigenvalues of an arbitrary complex 4x4 matrix through the expanded
/// characteristic quartic.
#[pyfunction]
fn quartic_eigenvalues(rows: Vec<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("expected a 4x4 matrix"));
    }
    let mut m = ComplexMatrix4::zeros();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m.0[i][j] = *v;
        }
    }
    Ok(char_poly_eigenvalues(&m).map_err(runtime_err)?.to_vec())
}

/// Strength constants of the bilinear boson Hamiltonian equivalent to the
/// rotating frame.
#[pyfunction]
fn couplings(py: Python<'_>, omega_1: f64, omega_2: f64, omega: f64) -> PyResult<Py<PyDict>> {
    let c = map_couplings(omega_1, omega_2, omega);
    let built = quadratic_form_from_couplings(&c);
    let direct = build_quadratic_form(&params(omega_1, omega_2, omega.into())?);
    let d = PyDict::new(py);
    d.set_item("omega_1", c.omega_1)?;
    d.set_item("omega_2", c.omega_2)?;
    d.set_item("g_1", c.g_1)?;
    d.set_item("g_2", c.g_2)?;
    d.set_item("equivalence_residual", built.h.sub(&direct.h).max_norm())?;
    Ok(d.into())
}

/// Quadratic form rebuilt from explicit coupling strengths.
#[pyfunction]
fn coupling_form(omega_1: f64, omega_2: f64, g_1: f64, g_2: f64) -> Vec<Vec<Complex64>> {
    matrix_rows(
        &quadratic_form_from_couplings(&CouplingSet {
            omega_1,
            omega_2,
            g_1,
            g_2,
        })
        .h,
    )
}

/// Routhian energy of a real phase-space state (p_x, p_y, x, y).
#[pyfunction]
fn routhian_energy(omega_x: f64, omega_y: f64, omega: f64, state: [f64; 4]) -> PyResult<f64> {
    let h = build_quadratic_form(&params(omega_x, omega_y, omega.into())?);
    Ok(energy(&state, &h))
}

/// Normalized eigenvector transform and its identity residuals.
#[pyfunction]
fn transform(py: Python<'_>, omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<Py<PyDict>> {
    let p = params(omega_x, omega_y, omega)?;
    let t = build_transform(&p).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("u", matrix_rows(&t.u))?;
    d.set_item("v", matrix_rows(&t.v))?;
    d.set_item("omega_plus", t.modes.omega_plus)?;
    d.set_item("omega_minus", t.modes.omega_minus)?;
    d.set_item(
        "case",
        match t.case {
            ContinuationCase::Stable => "stable",
            ContinuationCase::InsideWindow => "inside_window",
        },
    )?;
    d.set_item("normalization_residual", verify_normalization(&t))?;
    d.set_item(
        "inverse_residual",
        t.v.mul(&t.u).sub(&ComplexMatrix4::identity()).max_norm(),
    )?;
    d.set_item(
        "left_identity_deviation",
        left_from_right(&t.u).sub(&t.v).max_norm(),
    )?;
    Ok(d.into())
}

/// Quasi-boson commutator matrix and the boson check.
#[pyfunction]
fn commutators(py: Python<'_>, omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<Py<PyDict>> {
    let p = params(omega_x, omega_y, omega)?;
    let t = build_transform(&p).map_err(runtime_err)?;
    let c = commutator_matrix(&t).c;
    let check = crankep::bogoliubov::check_bosonic(&p).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("c", matrix_rows(&c))?;
    d.set_item("c23", c.0[1][2])?;
    d.set_item("c14", c.0[0][3])?;
    d.set_item("is_bosonic", check.is_bosonic)?;
    Ok(d.into())
}

/// Both critical rotational frequencies, located by bisection.
#[pyfunction]
fn locate_eps(omega_x: f64, omega_y: f64) -> PyResult<Vec<(f64, String, f64)>> {
    let eps = locate(omega_x, omega_y).map_err(runtime_err)?;
    Ok(eps
        .iter()
        .map(|e| {
            (
                e.omega_c,
                format!("{:?}", e.kind).to_lowercase(),
                e.residual,
            )
        })
        .collect())
}

/// Alignment measure (0 = parallel) of the two coalescing eigenvectors.
#[pyfunction]
fn coalescence_alignment(omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<f64> {
    let (v2, v3) = coalescing_pair(&params(omega_x, omega_y, omega)?).map_err(runtime_err)?;
    alignment_measure(&v2, &v3).map_err(runtime_err)
}

/// Symplectic bilinear of the unit-normalized coalescing eigenvectors.
#[pyfunction]
fn coalescence_overlap(omega_x: f64, omega_y: f64, omega: Complex64) -> PyResult<Complex64> {
    overlap(&params(omega_x, omega_y, omega)?).map_err(runtime_err)
}

/// Log-log power-law fit of a near-critical quantity
/// ("component_norm" or "overlap").
#[pyfunction]
#[pyo3(signature = (omega_x, omega_y, center, quantity, radii=None))]
fn scaling_exponent(
    py: Python<'_>,
    omega_x: f64,
    omega_y: f64,
    center: f64,
    quantity: &str,
    radii: Option<Vec<f64>>,
) -> PyResult<Py<PyDict>> {
    let q = match quantity {
        "component_norm" => ScalingQuantity::ComponentNorm,
        "overlap" => ScalingQuantity::Overlap,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown quantity {other:?}; expected 'component_norm' or 'overlap'"
            )))
        }
    };
    let radii = radii
        .unwrap_or_else(|| (0..7).map(|k| 1e-3 * 10f64.powf(-0.5 * k as f64)).collect());
    let fit = fit_exponent(omega_x, omega_y, center, q, &radii).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("exponent", fit.exponent)?;
    d.set_item("intercept", fit.intercept)?;
    d.set_item("r_squared", fit.r_squared)?;
    d.set_item("radii", fit.radii)?;
    Ok(d.into())
}

/// Walk a closed circle around a point in the complex rotational-frequency
/// plane; returns the branch permutation and the eigenvector phase factor.
#[pyfunction]
#[pyo3(signature = (omega_x, omega_y, center, radius=None, steps=256, direction="ccw", loops=1))]
#[allow(clippy::too_many_arguments)]
fn encircle(
    py: Python<'_>,
    omega_x: f64,
    omega_y: f64,
    center: f64,
    radius: Option<f64>,
    steps: usize,
    direction: &str,
    loops: usize,
) -> PyResult<Py<PyDict>> {
    let dir = match direction {
        "ccw" => LoopDirection::Ccw,
        "cw" => LoopDirection::Cw,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown direction {other:?}; expected 'ccw' or 'cw'"
            )))
        }
    };
    let radius = radius.unwrap_or(0.05 * (omega_x - omega_y).abs());
    let report =
        encircle_ep(omega_x, omega_y, center, radius, steps, dir, loops).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("permutation", report.eigenvalue_permutation.to_vec())?;
    d.set_item("phase_factor", report.phase_factor())?;
    d.set_item("min_gap", report.min_gap)?;
    d.set_item("gauge", report.gauge)?;
    Ok(d.into())
}

/// Eigenspace structure at the minus-mode eigenvalue: exceptional point
/// versus genuine degeneracy.
#[pyfunction]
fn diabolic_check(py: Python<'_>, omega_x: f64, omega_y: f64, omega: f64) -> PyResult<Py<PyDict>> {
    let report = diabolic(omega_x, omega_y, omega).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("omega_minus_abs", report.omega_minus_abs)?;
    d.set_item(
        "n_independent_eigenvectors",
        report.n_independent_eigenvectors,
    )?;
    d.set_item("is_ep", report.is_ep)?;
    Ok(d.into())
}

/// Evolve a phase-space state; returns the state and whether the
/// Runge-Kutta fallback was used.
#[pyfunction]
fn evolve(
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    state: [f64; 4],
    t: f64,
) -> PyResult<([f64; 4], bool)> {
    let p = params(omega_x, omega_y, omega.into())?;
    let (s, fell_back) = evolve_detailed(&p, &state_from(state), t).map_err(runtime_err)?;
    Ok((s.to_array(), fell_back))
}

/// Fourth-order Runge-Kutta evolution, the independent oracle.
#[pyfunction]
fn evolve_rk4(
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    state: [f64; 4],
    t: f64,
    dt: f64,
) -> PyResult<[f64; 4]> {
    let p = params(omega_x, omega_y, omega.into())?;
    Ok(rk4(&p, &state_from(state), t, dt)
        .map_err(runtime_err)?
        .to_array())
}

/// Fitted exponential growth rate of the state norm.
#[pyfunction]
fn growth_rate(
    py: Python<'_>,
    omega_x: f64,
    omega_y: f64,
    omega: f64,
    state: [f64; 4],
    t_max: f64,
) -> PyResult<Py<PyDict>> {
    let p = params(omega_x, omega_y, omega.into())?;
    let report = rate(&p, &state_from(state), t_max).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("slope", report.slope)?;
    d.set_item("in_window", report.in_window)?;
    Ok(d.into())
}

/// Sweep the rotational frequency; returns rows of
/// (omega, w+ re, w+ im, w- re, w- im).
#[pyfunction]
fn spectrum(
    omega_x: f64,
    omega_y: f64,
    omega_min: f64,
    omega_max: f64,
    steps: usize,
) -> PyResult<Vec<(f64, f64, f64, f64, f64)>> {
    if steps < 2 || omega_min >= omega_max {
        return Err(PyValueError::new_err(
            "need steps >= 2 and omega_min < omega_max",
        ));
    }
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let w = omega_min + (omega_max - omega_min) * k as f64 / (steps - 1) as f64;
        let e = modes(&params(omega_x, omega_y, w.into())?);
        rows.push((
            w,
            e.omega_plus.re,
            e.omega_plus.im,
            e.omega_minus.re,
            e.omega_minus.im,
        ));
    }
    Ok(rows)
}

#[pymodule]
fn _crankep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eigenmodes, m)?)?;
    m.add_function(wrap_pyfunction!(instability_window, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic_form, m)?)?;
    m.add_function(wrap_pyfunction!(dynamical_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(quartic_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(couplings, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_form, m)?)?;
    m.add_function(wrap_pyfunction!(routhian_energy, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(commutators, m)?)?;
    m.add_function(wrap_pyfunction!(locate_eps, m)?)?;
    m.add_function(wrap_pyfunction!(coalescence_alignment, m)?)?;
    m.add_function(wrap_pyfunction!(coalescence_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(encircle, m)?)?;
    m.add_function(wrap_pyfunction!(diabolic_check, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_rk4, m)?)?;
    m.add_function(wrap_pyfunction!(growth_rate, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    Ok(())
}
