//! Construction of the normalized right/left eigenvector pair of the
//! dynamical matrix, the quantum normalization check, and the quasi-boson
//! commutator matrix including its breakdown inside the instability window.
//!
//! Conventions. Columns of `u` are right eigenvectors ordered by eigenvalue
//! (-i w+, -i w-, +i w-, +i w+); `v` is always the numerical inverse of `u`.
//! Writing K2 for the canonical symplectic form on (p_x, p_y, x, y), the
//! Gram matrix T = u^T K2 u is block-anti-diagonal over the column pairs
//! (1,4) and (2,3), and every quantity checked here is a function of T:
//!
//!   * T = K1 (both pair bilinears equal to -i, K1 the anti-diagonal phase
//!     matrix below) is exactly the statement v = K1 u^T K2;
//!   * u^T h u = (1/2) T D, so T = K1 is also exactly the quantum-form
//!     normalization h_qm = u^T h u;
//!   * the commutator matrix is C = i T^(-1), so T = K1 gives canonical
//!     boson commutators.
//!
//! Outside the closed instability window the pair bilinears of the raw
//! conjugate-paired eigenvectors are purely imaginary, so a shared pair
//! scale reaches -i and all three identities hold at once. The raw bilinear
//! of the w- pair flips its intrinsic sign between the two stable regions;
//! above the window the scale is therefore imaginary and the conjugate
//! pairing of the w- columns holds up to an overall minus sign (the
//! creation/annihilation roles of that pair swap there). Strictly inside
//! the window the w- eigenvectors are real (real eigenvalues of a real
//! matrix) and their bilinear is real: no scaling reaches -i. The pair is
//! normalized to +i instead, the unique choice that keeps the commutator
//! real while breaking the inverse identity, reproducing the sign flip of
//! [q-, q-dag] reported for this parameter range.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{
    mat_inverse, null_space_vector, principal_sqrt, ComplexMatrix4, ComplexVector4,
    LinalgError,
};
use crate::model::{
    build_dynamical_matrix, build_quadratic_form, canonical_symplectic, eigenmodes,
    EigenmodePair, ModelParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BogoliubovError {
    #[error("too close to an exceptional point: |w-| = {omega_minus_abs:.3e} < {threshold:.3e}")]
    EPTooClose {
        omega_minus_abs: f64,
        threshold: f64,
    },
    #[error("degenerate modes: {reason}")]
    DegenerateModes { reason: String },
}

impl From<LinalgError> for BogoliubovError {
    fn from(e: LinalgError) -> Self {
        BogoliubovError::DegenerateModes {
            reason: e.to_string(),
        }
    }
}

/// Which continuation of the pair normalization was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContinuationCase {
    /// All eigenvalues purely imaginary; conjugate pairing and the -i pair
    /// bilinear hold for both pairs.
    Stable,
    /// Real rotational frequency strictly inside the instability window;
    /// the w- pair is real-mode continued with pair bilinear +i.
    InsideWindow,
}

/// Right/left eigenvector pair of the dynamical matrix with the symplectic
/// pair normalization applied, plus a snapshot of the inputs.
///
/// The residual per-pair phase (fixed here by making the leading column's
/// largest entry real positive) is a free convention: every physically
/// quoted quantity downstream - commutators, identity residuals, overlap
/// magnitudes, column norms - is invariant under it.
#[derive(Debug, Clone)]
pub struct TransformPair {
    pub u: ComplexMatrix4,
    pub v: ComplexMatrix4,
    pub params: ModelParams,
    pub modes: EigenmodePair,
    pub case: ContinuationCase,
}

/// Quantum form of the diagonalized Hamiltonian over (q+, q-, q-dag, q+dag):
/// (1/2) antidiag(w+, w-, w-, w+).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumFormMatrix {
    pub hqm: ComplexMatrix4,
}

/// Matrix of commutators `c[j][k] = [q_j, q_k]` over the ordered operator
/// vector (q+, q-, q-dag, q+dag).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorMatrix {
    pub c: ComplexMatrix4,
}

/// Report of the boson-commutator check at one parameter point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BosonCheck {
    pub is_bosonic: bool,
    pub c23_re: f64,
    pub c23_im: f64,
    pub c14_re: f64,
    pub c14_im: f64,
}

/// Anti-diagonal phase matrix antidiag(-i, -i, +i, +i) relating transposed
/// right eigenvectors to left eigenvectors. Squares to the identity.
pub fn left_right_phase() -> ComplexMatrix4 {
    let i = Complex64::I;
    ComplexMatrix4::anti_diagonal([-i, -i, i, i])
}

/// K1 u^T K2: the left eigenvector matrix predicted from the right one by
/// the special structure of the dynamical matrix. Valid as an inverse of u
/// only where the -i pair normalization is attainable (outside the closed
/// instability window).
pub fn left_from_right(u: &ComplexMatrix4) -> ComplexMatrix4 {
    left_right_phase().mul(&u.transpose()).mul(&canonical_symplectic())
}

/// (1/2) antidiag(w+, w-, w-, w+) with the closed-form eigenmode energies.
pub fn quantum_form_matrix(p: &ModelParams) -> QuantumFormMatrix {
    let e = eigenmodes(p);
    let hqm = ComplexMatrix4::anti_diagonal([
        e.omega_plus,
        e.omega_minus,
        e.omega_minus,
        e.omega_plus,
    ])
    .scale(Complex64::new(0.5, 0.0));
    QuantumFormMatrix { hqm }
}

const EXTRACTION_TOL: f64 = 1e-9;

/// Build the normalized transform pair at the given parameters.
///
/// Fails with `EPTooClose` when |w-| < 1e-8 (w_x + w_y) and with
/// `DegenerateModes` at w_x = w_y or when eigenvector extraction finds the
/// wrong rank.
pub fn build_transform(p: &ModelParams) -> Result<TransformPair, BogoliubovError> {
    let freq_scale = p.omega_x + p.omega_y;
    if (p.omega_x - p.omega_y).abs() < 1e-10 * freq_scale {
        return Err(BogoliubovError::DegenerateModes {
            reason: format!(
                "omega_x = {} and omega_y = {} coincide (diabolic exclusion)",
                p.omega_x, p.omega_y
            ),
        });
    }
    let modes = eigenmodes(p);
    let ep_threshold = 1e-8 * freq_scale;
    if modes.omega_minus.norm() < ep_threshold {
        return Err(BogoliubovError::EPTooClose {
            omega_minus_abs: modes.omega_minus.norm(),
            threshold: ep_threshold,
        });
    }

    let m = build_dynamical_matrix(p).m;
    let eigenvalues = modes.dynamical_eigenvalues();
    let wm2 = modes.omega_minus * modes.omega_minus;
    let inside_window = p.omega_is_real() && wm2.re < 0.0 && wm2.im == 0.0;

    let raw = |lambda: Complex64| -> Result<ComplexVector4, BogoliubovError> {
        let shifted = m.sub(&ComplexMatrix4::diagonal([lambda; 4]));
        Ok(null_space_vector(&shifted, EXTRACTION_TOL)?)
    };

    // raw unit eigenvectors; conjugate pairing is exact for purely imaginary
    // eigenvalues of the real dynamical matrix
    let r1 = raw(eigenvalues[0])?;
    let r4 = if p.omega_is_real() {
        r1.conj()
    } else {
        raw(eigenvalues[3])?
    };
    let r2 = raw(eigenvalues[1])?;
    let r3 = if p.omega_is_real() && !inside_window {
        r2.conj()
    } else {
        raw(eigenvalues[2])?
    };

    let k2 = canonical_symplectic();
    let pair_bilinear = |a: &ComplexVector4, b: &ComplexVector4| a.bilinear(&k2.mul_vec(b));

    // shared pair scale c with c^2 * (a^T K2 b) = target
    let scale_pair = |a: &ComplexVector4,
                      b: &ComplexVector4,
                      target: Complex64|
     -> Result<(ComplexVector4, ComplexVector4), BogoliubovError> {
        let t = pair_bilinear(a, b);
        if t.norm() < 1e-14 {
            return Err(BogoliubovError::DegenerateModes {
                reason: "vanishing pair bilinear (coalescing eigenvectors)".into(),
            });
        }
        let c = principal_sqrt(target / t);
        Ok((a.scale(c), b.scale(c)))
    };

    let minus_i = -Complex64::I;
    let (mut u1, mut u4) = scale_pair(&r1, &r4, minus_i)?;
    let minus_target = if inside_window { Complex64::I } else { minus_i };
    let (mut u2, mut u3) = scale_pair(&r2, &r3, minus_target)?;

    // residual pair phase: largest-magnitude entry of columns 1 and 2 made
    // real positive; the partner column takes the opposite phase so the pair
    // bilinear is untouched
    let fix_phase = |a: &mut ComplexVector4, b: &mut ComplexVector4| {
        let pivot = a.0[a.argmax_abs()];
        if pivot.norm() > 0.0 {
            let phase = pivot / pivot.norm();
            *a = a.scale(phase.conj());
            *b = b.scale(phase);
        }
    };
    fix_phase(&mut u1, &mut u4);
    fix_phase(&mut u2, &mut u3);

    let u = ComplexMatrix4::from_columns([u1, u2, u3, u4]);
    let v = mat_inverse(&u).map_err(|e| BogoliubovError::DegenerateModes {
        reason: format!("transform not invertible: {e}"),
    })?;

    Ok(TransformPair {
        u,
        v,
        params: *p,
        modes,
        case: if inside_window {
            ContinuationCase::InsideWindow
        } else {
            ContinuationCase::Stable
        },
    })
}

/// Max-norm residual of the quantum normalization identity
/// h = v^T h_qm v (equivalently h_qm = u^T h u). Contract: below 1e-8
/// whenever the rotational frequency lies outside the closed instability
/// window.
pub fn verify_normalization(t: &TransformPair) -> f64 {
    let h = build_quadratic_form(&t.params).h;
    let hqm = quantum_form_matrix(&t.params).hqm;
    t.v.transpose().mul(&hqm).mul(&t.v).sub(&h).max_norm()
}

/// C = v J v^T with J the commutator table of (p_x, p_y, x, y):
/// J = -i K2 from [x, p_x] = [y, p_y] = i.
pub fn commutator_matrix(t: &TransformPair) -> CommutatorMatrix {
    let j = canonical_symplectic().scale(-Complex64::I);
    CommutatorMatrix {
        c: t.v.mul(&j).mul(&t.v.transpose()),
    }
}

/// Boson check: both ladder commutators equal to one and every other
/// independent entry of C zero, all within 1e-6.
pub fn check_bosonic(p: &ModelParams) -> Result<BosonCheck, BogoliubovError> {
    let t = build_transform(p)?;
    let c = commutator_matrix(&t).c;
    let c23 = c.0[1][2];
    let c14 = c.0[0][3];
    let one = Complex64::ONE;
    let mut ok = (c23 - one).norm() <= 1e-6 && (c14 - one).norm() <= 1e-6;
    for (j, k) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        ok &= c.0[j][k].norm() <= 1e-6;
    }
    Ok(BosonCheck {
        is_bosonic: ok,
        c23_re: c23.re,
        c23_im: c23.im,
        c14_re: c14.re,
        c14_im: c14.im,
    })
}
