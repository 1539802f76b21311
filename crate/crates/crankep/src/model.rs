//! Model definition for the rotating two-dimensional harmonic oscillator:
//! parameters, the quadratic form of the Routhian, the dynamical matrix of
//! Hamilton's equations, the closed-form eigenmode energies, the instability
//! window and the bridge to the bilinear boson Hamiltonian.
//!
//! Phase-space ordering is (p_x, p_y, x, y) throughout; hbar = m = 1 and
//! zero-point constants are dropped from all matrix forms.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{principal_sqrt, ComplexMatrix4, ComplexVector4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("frequency {name} must be positive and finite, got {value}")]
    InvalidFrequency { name: &'static str, value: f64 },
    #[error("rotational frequency must be finite")]
    InvalidRotation,
}

/// The three model frequencies. The rotational frequency is kept complex so
/// the spectrum can be continued into the complex plane; physical runs have
/// `omega.im == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega: Complex64,
}

impl ModelParams {
    pub fn new(omega_x: f64, omega_y: f64, omega: Complex64) -> Result<Self, ModelError> {
        if !(omega_x.is_finite() && omega_x > 0.0) {
            return Err(ModelError::InvalidFrequency {
                name: "omega_x",
                value: omega_x,
            });
        }
        if !(omega_y.is_finite() && omega_y > 0.0) {
            return Err(ModelError::InvalidFrequency {
                name: "omega_y",
                value: omega_y,
            });
        }
        if !(omega.re.is_finite() && omega.im.is_finite()) {
            return Err(ModelError::InvalidRotation);
        }
        Ok(Self {
            omega_x,
            omega_y,
            omega,
        })
    }

    /// Physical parameters: real rotational frequency.
    pub fn real(omega_x: f64, omega_y: f64, omega: f64) -> Result<Self, ModelError> {
        Self::new(omega_x, omega_y, Complex64::new(omega, 0.0))
    }

    pub fn omega_is_real(&self) -> bool {
        self.omega.im == 0.0
    }

    /// True when the real rotational frequency lies strictly inside the
    /// instability window.
    pub fn in_instability_window(&self) -> bool {
        if !self.omega_is_real() {
            return false;
        }
        let (lo, hi) = instability_interval(self.omega_x, self.omega_y);
        self.omega.re > lo && self.omega.re < hi
    }
}

/// Symmetric quadratic form of the Routhian in (p_x, p_y, x, y), including
/// the overall factor 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub h: ComplexMatrix4,
}

/// First-order coefficient matrix of Hamilton's equations,
/// d/dt (p, r) = m (p, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicalMatrix {
    pub m: ComplexMatrix4,
}

/// The two eigenmode energies. `omega_minus` carries the minus sign of the
/// inner discriminant; for a real rotational frequency inside the open
/// instability window it is returned with positive imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenmodePair {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
}

impl EigenmodePair {
    /// Eigenvalues of the dynamical matrix in the fixed column order
    /// (-i w+, -i w-, +i w-, +i w+).
    pub fn dynamical_eigenvalues(&self) -> [Complex64; 4] {
        let i = Complex64::I;
        [
            -i * self.omega_plus,
            -i * self.omega_minus,
            i * self.omega_minus,
            i * self.omega_plus,
        ]
    }
}

/// Frequencies and strength constants of the bilinear two-boson Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSet {
    pub omega_1: f64,
    pub omega_2: f64,
    pub g_1: f64,
    pub g_2: f64,
}

/// The canonical symplectic form on (p_x, p_y, x, y):
/// [[0, I2], [-I2, 0]] as a complex matrix.
pub fn canonical_symplectic() -> ComplexMatrix4 {
    ComplexMatrix4::from_real([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ])
}

/// `1/2 * [[1,0,0,W],[0,1,-W,0],[0,-W,wx^2,0],[W,0,0,wy^2]]`.
pub fn build_quadratic_form(p: &ModelParams) -> QuadraticForm {
    let w = p.omega;
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    let wx2 = Complex64::new(p.omega_x * p.omega_x, 0.0);
    let wy2 = Complex64::new(p.omega_y * p.omega_y, 0.0);
    let h = ComplexMatrix4::new([
        [one, z, z, w],
        [z, one, -w, z],
        [z, -w, wx2, z],
        [w, z, z, wy2],
    ])
    .scale(Complex64::new(0.5, 0.0));
    QuadraticForm { h }
}

/// Dynamical matrix of Hamilton's equations: -J * (2 h) with J the canonical
/// symplectic form above. The factor 2 compensates the 1/2 inside the
/// quadratic form so that d/dt (p, r) = m (p, r) holds exactly.
pub fn build_dynamical_matrix(p: &ModelParams) -> DynamicalMatrix {
    let h2 = build_quadratic_form(p).h.scale(Complex64::new(2.0, 0.0));
    let j_tilde = canonical_symplectic().scale(Complex64::new(-1.0, 0.0));
    DynamicalMatrix {
        m: j_tilde.mul(&h2),
    }
}

/// Closed-form eigenmode energies:
/// w_pm^2 = (wx^2 + wy^2 + 2 W^2 +- sqrt((wx^2 - wy^2)^2
///           + 8 W^2 (wx^2 + wy^2))) / 2,
/// with principal square roots for both the inner discriminant and the outer
/// root. Branch continuity across cuts is the caller's business (the
/// encirclement machinery tracks branches explicitly).
pub fn eigenmodes(p: &ModelParams) -> EigenmodePair {
    let wx2 = Complex64::new(p.omega_x * p.omega_x, 0.0);
    let wy2 = Complex64::new(p.omega_y * p.omega_y, 0.0);
    let w2 = p.omega * p.omega;
    let sum = wx2 + wy2;
    let diff = wx2 - wy2;
    let disc = principal_sqrt(diff * diff + 8.0 * w2 * sum);
    let s = sum + 2.0 * w2;
    EigenmodePair {
        omega_plus: principal_sqrt(0.5 * (s + disc)),
        omega_minus: principal_sqrt(0.5 * (s - disc)),
    }
}

/// The open interval of rotational frequencies with omega_minus^2 < 0.
pub fn instability_interval(omega_x: f64, omega_y: f64) -> (f64, f64) {
    (omega_x.min(omega_y), omega_x.max(omega_y))
}

/// Strength constants that turn the bilinear boson Hamiltonian into the
/// rotating-frame oscillator:
/// g1 = W (w1 + w2) / (2 sqrt(w1 w2)), g2 = W (w2 - w1) / (2 sqrt(w1 w2)).
///
/// The mode correspondence is omega_1 -> omega_x (the x oscillator) and
/// omega_2 -> omega_y, established by the round-trip equivalence with the
/// directly built quadratic form (1e-12 over random parameters).
pub fn map_couplings(omega_1: f64, omega_2: f64, omega: f64) -> CouplingSet {
    let root = 2.0 * (omega_1 * omega_2).sqrt();
    CouplingSet {
        omega_1,
        omega_2,
        g_1: omega * (omega_1 + omega_2) / root,
        g_2: omega * (omega_2 - omega_1) / root,
    }
}

/// Coefficient vectors of the ladder operators over (p_x, p_y, x, y):
/// a_k = sqrt(w_k/2) x_k + i p_k / sqrt(2 w_k), with x_1 = x, x_2 = y.
fn ladder_vectors(omega_1: f64, omega_2: f64) -> [ComplexVector4; 4] {
    let z = Complex64::ZERO;
    let a1 = ComplexVector4::new([
        Complex64::new(0.0, 1.0 / (2.0 * omega_1).sqrt()),
        z,
        Complex64::new((omega_1 / 2.0).sqrt(), 0.0),
        z,
    ]);
    let a2 = ComplexVector4::new([
        z,
        Complex64::new(0.0, 1.0 / (2.0 * omega_2).sqrt()),
        z,
        Complex64::new((omega_2 / 2.0).sqrt(), 0.0),
    ]);
    [a1, a1.conj(), a2, a2.conj()]
}

/// Expand the bilinear boson Hamiltonian into a symmetric quadratic form on
/// (p_x, p_y, x, y) by substituting the ladder-operator definitions and
/// collecting terms. Operator-ordering constants (the zero-point terms) drop
/// out of the symmetrized product.
pub fn quadratic_form_from_couplings(c: &CouplingSet) -> QuadraticForm {
    let [a1, a1d, a2, a2d] = ladder_vectors(c.omega_1, c.omega_2);

    // symmetrized rank-one contribution of an operator product u * v
    let sym = |u: &ComplexVector4, v: &ComplexVector4| -> ComplexMatrix4 {
        let mut m = ComplexMatrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = 0.5 * (u.0[i] * v.0[j] + v.0[i] * u.0[j]);
            }
        }
        m
    };

    let i = Complex64::I;
    let w1 = Complex64::new(c.omega_1, 0.0);
    let w2 = Complex64::new(c.omega_2, 0.0);
    let g1 = Complex64::new(c.g_1, 0.0);
    let g2 = Complex64::new(c.g_2, 0.0);

    let mut h = sym(&a1d, &a1).scale(w1);
    h = h.add(&sym(&a2d, &a2).scale(w2));
    h = h.add(&sym(&a1d, &a2).sub(&sym(&a2d, &a1)).scale(i * g1));
    h = h.sub(&sym(&a1d, &a2d).sub(&sym(&a2, &a1)).scale(i * g2));
    QuadraticForm { h }
}

/// state^T h state for a real phase-space state (p_x, p_y, x, y).
pub fn routhian_energy(state: &[f64; 4], h: &QuadraticForm) -> f64 {
    let v = ComplexVector4::from_real(*state);
    let hv = h.h.mul_vec(&v);
    v.bilinear(&hv).re
}
