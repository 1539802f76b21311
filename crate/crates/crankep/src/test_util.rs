//! Shared helpers for the unit tests.

use num_complex::Complex64;

/// Assert that two unordered sets of complex numbers agree as multisets,
/// using greedy one-to-one nearest matching. This avoids the discontinuity
/// of lexicographic sorting when real parts are pure rounding noise.
pub fn assert_multiset_close(got: &[Complex64], expected: &[Complex64], tol: f64) {
    assert_eq!(got.len(), expected.len());
    let mut used = vec![false; got.len()];
    for e in expected {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, g) in got.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = (g - e).norm();
            if d < best_d {
                best_d = d;
                best = Some(i);
            }
        }
        let i = best.expect("sets of equal size");
        assert!(
            best_d <= tol,
            "no match for {e} within {tol:.3e}: nearest {} at {best_d:.3e}",
            got[i]
        );
        used[i] = true;
    }
}
