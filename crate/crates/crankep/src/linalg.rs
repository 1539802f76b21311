//! Self-contained dense complex 4x4 linear algebra: arithmetic, inversion,
//! null-space extraction, characteristic-polynomial eigenvalues and
//! diagonal-form propagators.
//!
//! Everything is specialized to dimension 4; no external solver is used so
//! that the eigenvalue route through the characteristic polynomial stays
//! independent of the closed-form spectrum used elsewhere in the crate.

use num_complex::Complex64;
use thiserror::Error;

pub const DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular matrix: pivot magnitude {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("rank at tolerance is {rank}, expected 3 (degenerate or non-deficient matrix)")]
    RankError { rank: usize },
    #[error("root finding did not converge: residual {residual:.3e} exceeds {limit:.3e}")]
    ConvergenceError { residual: f64, limit: f64 },
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
}

/// Principal square root with an exact branch on the real axis:
/// nonnegative reals map to nonnegative reals, negative reals to +i*sqrt(|x|).
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        }
    } else {
        z.sqrt()
    }
}

/// Complex 4-vector, fixed length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexVector4(pub [Complex64; DIM]);

impl ComplexVector4 {
    pub fn new(entries: [Complex64; DIM]) -> Self {
        for (i, e) in entries.iter().enumerate() {
            assert!(
                e.re.is_finite() && e.im.is_finite(),
                "non-finite vector entry at {i}"
            );
        }
        Self(entries)
    }

    pub fn zeros() -> Self {
        Self([Complex64::ZERO; DIM])
    }

    pub fn from_real(v: [f64; DIM]) -> Self {
        Self::new(v.map(|x| Complex64::new(x, 0.0)))
    }

    /// Hermitian (Euclidean) norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Conjugating inner product <self, other> = sum conj(self_i) * other_i.
    pub fn dot(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Plain bilinear product sum self_i * other_i (no conjugation).
    pub fn bilinear(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|e| e.conj()))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|e| e * s))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = [Complex64::ZERO; DIM];
        for i in 0..DIM {
            out[i] = self.0[i] - other.0[i];
        }
        Self(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Index of the largest-magnitude entry (first on ties).
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        let mut best_val = self.0[0].norm();
        for (i, e) in self.0.iter().enumerate().skip(1) {
            let v = e.norm();
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        best
    }

    /// Rescale so the Hermitian norm is 1 and the largest-magnitude entry is
    /// real and positive. Deterministic across platforms.
    pub fn normalized_deterministic(&self) -> Result<Self, LinalgError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(LinalgError::ZeroVector);
        }
        let pivot = self.0[self.argmax_abs()];
        let phase = pivot / pivot.norm();
        Ok(self.scale(phase.conj() / n))
    }
}

/// Complex 4x4 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix4(pub [[Complex64; DIM]; DIM]);

impl ComplexMatrix4 {
    pub fn new(entries: [[Complex64; DIM]; DIM]) -> Self {
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                assert!(
                    e.re.is_finite() && e.im.is_finite(),
                    "non-finite matrix entry at ({i},{j})"
                );
            }
        }
        Self(entries)
    }

    pub fn from_real(entries: [[f64; DIM]; DIM]) -> Self {
        Self::new(entries.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    pub fn zeros() -> Self {
        Self([[Complex64::ZERO; DIM]; DIM])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = Complex64::ONE;
        }
        m
    }

    pub fn diagonal(d: [Complex64; DIM]) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn anti_diagonal(d: [Complex64; DIM]) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][DIM - 1 - i] = d[i];
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|row| row.map(|e| e.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|row| row.map(|e| e * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = self.0[i][j] + other.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = self.0[i][j] - other.0[i][j];
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                let mut acc = Complex64::ZERO;
                for k in 0..DIM {
                    acc += self.0[i][k] * other.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &ComplexVector4) -> ComplexVector4 {
        let mut out = [Complex64::ZERO; DIM];
        for i in 0..DIM {
            let mut acc = Complex64::ZERO;
            for k in 0..DIM {
                acc += self.0[i][k] * v.0[k];
            }
            out[i] = acc;
        }
        ComplexVector4(out)
    }

    pub fn column(&self, j: usize) -> ComplexVector4 {
        let mut out = [Complex64::ZERO; DIM];
        for i in 0..DIM {
            out[i] = self.0[i][j];
        }
        ComplexVector4(out)
    }

    pub fn row(&self, i: usize) -> ComplexVector4 {
        ComplexVector4(self.0[i])
    }

    pub fn set_column(&mut self, j: usize, v: &ComplexVector4) {
        for i in 0..DIM {
            self.0[i][j] = v.0[i];
        }
    }

    pub fn from_columns(cols: [ComplexVector4; DIM]) -> Self {
        let mut m = Self::zeros();
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        m
    }

    /// Max-magnitude entry norm (the norm used by all tolerances here).
    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|e| e.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> [[f64; DIM]; DIM] {
        self.0.map(|row| row.map(|e| e.re))
    }

    pub fn trace(&self) -> Complex64 {
        (0..DIM).map(|i| self.0[i][i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|e| e.re.is_finite() && e.im.is_finite())
    }
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Fails with `SingularMatrix` when a pivot falls below
/// `1e-13 * max_norm(m)`.
pub fn mat_inverse(m: &ComplexMatrix4) -> Result<ComplexMatrix4, LinalgError> {
    let scale = m.max_norm();
    let threshold = 1e-13 * scale;
    let mut a = m.0;
    let mut inv = ComplexMatrix4::identity().0;

    for col in 0..DIM {
        // partial pivoting: largest magnitude in this column, rows col..
        let mut pivot_row = col;
        let mut pivot_val = a[col][col].norm();
        for r in (col + 1)..DIM {
            let v = a[r][col].norm();
            if v > pivot_val {
                pivot_row = r;
                pivot_val = v;
            }
        }
        if pivot_val <= threshold {
            return Err(LinalgError::SingularMatrix {
                pivot: pivot_val,
                threshold,
            });
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);

        let p = a[col][col];
        for j in 0..DIM {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..DIM {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f != Complex64::ZERO {
                for j in 0..DIM {
                    let ac = a[col][j];
                    let ic = inv[col][j];
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Ok(ComplexMatrix4(inv))
}

/// One-dimensional null-space extraction for a numerically rank-3 matrix.
///
/// Gaussian elimination with full pivoting; entries below `tol * max_norm(m)`
/// count as zero for the rank decision. The returned vector has Hermitian
/// norm 1 and its largest-magnitude entry made real and positive.
pub fn null_space_vector(
    m: &ComplexMatrix4,
    tol: f64,
) -> Result<ComplexVector4, LinalgError> {
    let scale = m.max_norm();
    if scale == 0.0 {
        return Err(LinalgError::RankError { rank: 0 });
    }
    let threshold = tol * scale;
    let mut a = m.0;
    // col_perm[k] = original column index sitting in slot k
    let mut col_perm = [0usize, 1, 2, 3];
    let mut rank = 0usize;

    for k in 0..DIM {
        // full pivoting over the trailing submatrix
        let mut best = (k, k);
        let mut best_val = 0.0;
        for r in k..DIM {
            for c in k..DIM {
                let v = a[r][c].norm();
                if v > best_val {
                    best = (r, c);
                    best_val = v;
                }
            }
        }
        if best_val <= threshold {
            break;
        }
        rank += 1;
        a.swap(k, best.0);
        if best.1 != k {
            for row in a.iter_mut() {
                row.swap(k, best.1);
            }
            col_perm.swap(k, best.1);
        }
        let p = a[k][k];
        for r in (k + 1)..DIM {
            let f = a[r][k] / p;
            if f != Complex64::ZERO {
                for c in k..DIM {
                    let akc = a[k][c];
                    a[r][c] -= f * akc;
                }
            }
        }
    }

    if rank != 3 {
        return Err(LinalgError::RankError { rank });
    }

    // back-substitute with the free (permuted) variable set to 1
    let mut x = [Complex64::ZERO; DIM];
    x[3] = Complex64::ONE;
    for k in (0..3).rev() {
        let mut s = Complex64::ZERO;
        for c in (k + 1)..DIM {
            s += a[k][c] * x[c];
        }
        x[k] = -s / a[k][k];
    }

    let mut v = [Complex64::ZERO; DIM];
    for k in 0..DIM {
        v[col_perm[k]] = x[k];
    }
    let v = ComplexVector4(v).normalized_deterministic()?;

    let residual = m.mul_vec(&v).norm();
    let limit = tol.max(1e-10) * scale;
    if residual > limit {
        return Err(LinalgError::ConvergenceError { residual, limit });
    }
    Ok(v)
}

/// Numerical rank by Gaussian elimination with full pivoting: pivots below
/// `tol * max_norm(m)` count as zero.
pub fn numerical_rank(m: &ComplexMatrix4, tol: f64) -> usize {
    let scale = m.max_norm();
    if scale == 0.0 {
        return 0;
    }
    let threshold = tol * scale;
    let mut a = m.0;
    let mut rank = 0;
    for k in 0..DIM {
        let mut best = (k, k);
        let mut best_val = 0.0;
        for r in k..DIM {
            for c in k..DIM {
                let v = a[r][c].norm();
                if v > best_val {
                    best = (r, c);
                    best_val = v;
                }
            }
        }
        if best_val <= threshold {
            break;
        }
        rank += 1;
        a.swap(k, best.0);
        if best.1 != k {
            for row in a.iter_mut() {
                row.swap(k, best.1);
            }
        }
        let p = a[k][k];
        for r in (k + 1)..DIM {
            let f = a[r][k] / p;
            if f != Complex64::ZERO {
                for c in k..DIM {
                    let akc = a[k][c];
                    a[r][c] -= f * akc;
                }
            }
        }
    }
    rank
}

/// Coefficients of det(m - lambda*I) = lambda^4 + c3 lambda^3 + c2 lambda^2
/// + c1 lambda + c0, via the trace power sums (Faddeev-LeVerrier form).
fn char_poly_coeffs(m: &ComplexMatrix4) -> [Complex64; 4] {
    let m2 = m.mul(m);
    let m3 = m2.mul(m);
    let m4 = m3.mul(m);
    let p1 = m.trace();
    let p2 = m2.trace();
    let p3 = m3.trace();
    let p4 = m4.trace();

    // Newton's identities for the elementary symmetric polynomials e1..e4
    let e1 = p1;
    let e2 = (e1 * p1 - p2) / 2.0;
    let e3 = (e2 * p1 - e1 * p2 + p3) / 3.0;
    let e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4.0;

    // det(m - xI) = x^4 - e1 x^3 + e2 x^2 - e3 x + e4
    [e4, -e3, e2, -e1]
}

fn poly_eval(coeffs: &[Complex64; 4], x: Complex64) -> Complex64 {
    // monic quartic: x^4 + c3 x^3 + c2 x^2 + c1 x + c0
    (((x + coeffs[3]) * x + coeffs[2]) * x + coeffs[1]) * x + coeffs[0]
}

fn poly_deriv(coeffs: &[Complex64; 4], x: Complex64) -> Complex64 {
    ((4.0 * x + 3.0 * coeffs[3]) * x + 2.0 * coeffs[2]) * x + coeffs[1]
}

/// All four eigenvalues of `m` as the roots of the explicitly expanded
/// characteristic quartic, found by Durand-Kerner simultaneous iteration and
/// polished with two Newton steps each. Returned sorted by (re, im).
///
/// This route is deliberately independent of any closed-form spectrum.
pub fn char_poly_eigenvalues(
    m: &ComplexMatrix4,
) -> Result<[Complex64; 4], LinalgError> {
    let coeffs = char_poly_coeffs(m);

    // Cauchy-style bound on root magnitudes keeps the iteration scaled.
    let bound = 1.0
        + coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);

    // deterministic non-symmetric starting configuration
    let seed = Complex64::new(0.4, 0.9);
    let mut roots = [Complex64::ZERO; 4];
    let mut acc = Complex64::ONE;
    for r in roots.iter_mut() {
        acc *= seed;
        *r = acc * bound;
    }

    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..4 {
            let mut denom = Complex64::ONE;
            for j in 0..4 {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom == Complex64::ZERO {
                // collided iterates: nudge deterministically
                roots[i] += Complex64::new(1e-8 * bound, 1e-8 * bound);
                continue;
            }
            let step = poly_eval(&coeffs, roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * bound {
            break;
        }
    }

    // two Newton polish steps per root
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = poly_deriv(&coeffs, *r);
            if d.norm() > 0.0 {
                *r -= poly_eval(&coeffs, *r) / d;
            }
        }
    }

    let limit = 1e-8 * (1.0 + m.max_norm().powi(4));
    for r in roots.iter() {
        let residual = poly_eval(&coeffs, *r).norm();
        if !residual.is_finite() || residual > limit {
            return Err(LinalgError::ConvergenceError { residual, limit });
        }
    }

    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(roots)
}

/// u * diag(exp(d_i t)) * v. Caller guarantees u and v are mutually inverse.
pub fn propagator_from_diagonal(
    u: &ComplexMatrix4,
    d: &[Complex64; 4],
    t: f64,
    v: &ComplexMatrix4,
) -> ComplexMatrix4 {
    let e = d.map(|di| (di * t).exp());
    let mut ud = *u;
    for j in 0..DIM {
        for i in 0..DIM {
            ud.0[i][j] *= e[j];
        }
    }
    ud.mul(v)
}
