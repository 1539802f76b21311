//! Classical time evolution of phase-space states: the exponentiated
//! dynamical matrix, an independent Runge-Kutta oracle, energy conservation
//! and the exponential runaway inside the instability window.

use serde::Serialize;
use thiserror::Error;

use crate::bogoliubov::{build_transform, BogoliubovError};
use crate::linalg::propagator_from_diagonal;
use crate::model::{build_dynamical_matrix, instability_interval, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Transform(#[from] BogoliubovError),
    #[error("step size {dt:.3e} exceeds the limit {limit:.3e}")]
    StepSizeError { dt: f64, limit: f64 },
    #[error("propagator of a real system must be real; imaginary residual {residual:.3e}")]
    ImaginaryResidual { residual: f64 },
    #[error("rotational frequency must be real for time evolution")]
    ComplexRotation,
}

/// A real phase-space point in the ordering (p_x, p_y, x, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub p_x: f64,
    pub p_y: f64,
    pub x: f64,
    pub y: f64,
}

impl PhaseState {
    pub fn new(p_x: f64, p_y: f64, x: f64, y: f64) -> Self {
        Self { p_x, p_y, x, y }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.p_x, self.p_y, self.x, self.y]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Sampled trajectory with strictly increasing times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub params: ModelParams,
}

/// Growth diagnostics of a trajectory inside or outside the instability
/// window. `in_window == false` flags that no exponential growth is expected
/// and the (near-zero) slope is reported as measured.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthReport {
    pub slope: f64,
    pub in_window: bool,
}

fn require_real(p: &ModelParams) -> Result<(), DynamicsError> {
    if p.omega_is_real() {
        Ok(())
    } else {
        Err(DynamicsError::ComplexRotation)
    }
}

fn mat_vec4(m: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3];
    }
    out
}

/// Real propagator exp(m t) through the diagonal form of the dynamical
/// matrix. The imaginary residual of the complex product is checked against
/// 1e-9 times the result magnitude rather than discarded silently.
pub fn propagator(p: &ModelParams, t: f64) -> Result<[[f64; 4]; 4], DynamicsError> {
    require_real(p)?;
    let transform = build_transform(p)?;
    let d = transform.modes.dynamical_eigenvalues();
    let prop = propagator_from_diagonal(&transform.u, &d, t, &transform.v);
    let scale = prop.max_norm().max(1.0);
    let residual = prop.max_imag();
    if residual > 1e-9 * scale {
        return Err(DynamicsError::ImaginaryResidual {
            residual: residual / scale,
        });
    }
    Ok(prop.real_part())
}

/// Evolve a state by the exponentiated dynamical matrix. At and very near
/// the exceptional points the diagonal form does not exist; evolution falls
/// back to the Runge-Kutta integrator there and reports it.
pub fn evolve_detailed(
    p: &ModelParams,
    s0: &PhaseState,
    t: f64,
) -> Result<(PhaseState, bool), DynamicsError> {
    match propagator(p, t) {
        Ok(prop) => Ok((
            PhaseState::from_array(mat_vec4(&prop, &s0.to_array())),
            false,
        )),
        Err(DynamicsError::Transform(BogoliubovError::EPTooClose { .. })) => {
            let dt = 0.5e-3 / p.omega_x.max(p.omega_y).max(1.0);
            Ok((evolve_rk4(p, s0, t, dt)?, true))
        }
        Err(e) => Err(e),
    }
}

/// Evolve a state by the exponentiated dynamical matrix.
pub fn evolve(p: &ModelParams, s0: &PhaseState, t: f64) -> Result<PhaseState, DynamicsError> {
    evolve_detailed(p, s0, t).map(|(s, _)| s)
}

/// Classic fourth-order Runge-Kutta on d/dt s = m s, the independent oracle
/// for the exponentiated solution. Requires dt <= 1e-3 min(1/w_x, 1/w_y).
pub fn evolve_rk4(
    p: &ModelParams,
    s0: &PhaseState,
    t: f64,
    dt: f64,
) -> Result<PhaseState, DynamicsError> {
    require_real(p)?;
    let limit = 1e-3 * (1.0 / p.omega_x).min(1.0 / p.omega_y);
    if !(dt > 0.0 && dt <= limit) {
        return Err(DynamicsError::StepSizeError { dt, limit });
    }
    let m = build_dynamical_matrix(p).m.real_part();
    let n = (t.abs() / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut s = s0.to_array();
    for _ in 0..n {
        let k1 = mat_vec4(&m, &s);
        let s2 = add_scaled(&s, &k1, h / 2.0);
        let k2 = mat_vec4(&m, &s2);
        let s3 = add_scaled(&s, &k2, h / 2.0);
        let k3 = mat_vec4(&m, &s3);
        let s4 = add_scaled(&s, &k3, h);
        let k4 = mat_vec4(&m, &s4);
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(PhaseState::from_array(s))
}

fn add_scaled(a: &[f64; 4], b: &[f64; 4], f: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = a[i] + f * b[i];
    }
    out
}

/// Sample the flow on a uniform grid.
pub fn sample_trajectory(
    p: &ModelParams,
    s0: &PhaseState,
    t_max: f64,
    n_samples: usize,
) -> Result<Trajectory, DynamicsError> {
    assert!(n_samples >= 2, "need at least two samples");
    let dt = t_max / (n_samples - 1) as f64;
    let step = propagator(p, dt)?;
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);
    let mut s = s0.to_array();
    for k in 0..n_samples {
        times.push(k as f64 * dt);
        states.push(PhaseState::from_array(s));
        s = mat_vec4(&step, &s);
    }
    Ok(Trajectory {
        times,
        states,
        params: *p,
    })
}

/// Least-squares slope of log |state(t)| over the second half of [0, t_max].
/// Inside the window this measures the runaway exponent |Im w-|; outside the
/// window the report is flagged and the slope is near zero.
pub fn growth_rate(
    p: &ModelParams,
    s0: &PhaseState,
    t_max: f64,
) -> Result<GrowthReport, DynamicsError> {
    require_real(p)?;
    let n = 400;
    let traj = sample_trajectory(p, s0, t_max, n)?;
    let half = n / 2;
    let pts: Vec<(f64, f64)> = traj.times[half..]
        .iter()
        .zip(traj.states[half..].iter())
        .map(|(t, s)| (*t, s.norm().max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n_f = pts.len() as f64;
    let mean_t = pts.iter().map(|(t, _)| t).sum::<f64>() / n_f;
    let mean_y = pts.iter().map(|(_, y)| y).sum::<f64>() / n_f;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in &pts {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    let slope = num / den;
    let (lo, hi) = instability_interval(p.omega_x, p.omega_y);
    let in_window = p.omega.re > lo && p.omega.re < hi;
    Ok(GrowthReport { slope, in_window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_quadratic_form, eigenmodes, routhian_energy};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn params(wx: f64, wy: f64, w: f64) -> ModelParams {
        ModelParams::real(wx, wy, w).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng) -> PhaseState {
        PhaseState::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        )
    }

    fn random_stable_params(rng: &mut ChaCha8Rng) -> ModelParams {
        loop {
            let wx: f64 = rng.random_range(0.3..6.0);
            let wy: f64 = rng.random_range(0.3..6.0);
            if (wx - wy).abs() < 0.1 {
                continue;
            }
            let (lo, hi) = instability_interval(wx, wy);
            let margin = 0.02 * (wx + wy);
            let w = if rng.random_bool(0.5) {
                rng.random_range(0.0..(lo - margin).max(1e-3))
            } else {
                rng.random_range((hi + margin)..(hi + margin + 4.0))
            };
            if w < lo - margin || w > hi + margin {
                return params(wx, wy, w);
            }
        }
    }

    #[test]
    fn propagator_zero_time() {
        let prop = propagator(&params(3.0, 2.0, 1.0), 0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prop[i][j] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn propagator_half_period_block() {
        // half period of the w = 2 mode is pi/2: rotation by pi on the
        // (p_y, y) block
        let prop = propagator(&params(3.0, 2.0, 0.0), std::f64::consts::PI / 2.0).unwrap();
        assert!((prop[1][1] + 1.0).abs() < 1e-9);
        assert!((prop[3][3] + 1.0).abs() < 1e-9);
        assert!(prop[1][3].abs() < 1e-9);
        assert!(prop[3][1].abs() < 1e-9);
        // and the block is decoupled
        assert!(prop[1][0].abs() < 1e-9 && prop[1][2].abs() < 1e-9);
    }

    #[test]
    fn propagator_spectral_radius_in_window() {
        let p = params(3.0, 2.0, 2.5);
        let t = 5.0;
        let prop = propagator(&p, t).unwrap();
        let radius = prop
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let expect = (eigenmodes(&p).omega_minus.im * t).exp();
        // the max entry tracks exp(|w-| t) up to an O(1) eigenvector factor
        assert!(radius > 0.05 * expect && radius < 20.0 * expect);
    }

    #[test]
    fn evolve_fixed_point() {
        let s = evolve(&params(3.0, 2.0, 1.0), &PhaseState::new(0.0, 0.0, 0.0, 0.0), 3.3).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn evolve_matches_rk4() {
        let p = params(3.0, 2.0, 1.0);
        let s0 = PhaseState::new(1.0, 0.0, 0.0, 0.0);
        let a = evolve(&p, &s0, 1.0).unwrap();
        let b = evolve_rk4(&p, &s0, 1.0, 1e-4).unwrap();
        let d = (a.to_array().iter().zip(b.to_array()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6);
    }

    #[test]
    fn evolve_matches_rk4_random_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..100 {
            let p = random_stable_params(&mut rng);
            let s0 = random_state(&mut rng);
            let dt = 0.5e-3 * (1.0 / p.omega_x).min(1.0 / p.omega_y);
            let a = evolve(&p, &s0, 1.0).unwrap();
            let b = evolve_rk4(&p, &s0, 1.0, dt).unwrap();
            let d = (a.to_array().iter().zip(b.to_array()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-6, "mismatch {d:.3e} at {p:?}");
        }
    }

    #[test]
    fn rk4_periodicity() {
        let p = params(3.0, 2.0, 0.0);
        let s0 = PhaseState::new(0.0, 0.0, 1.0, 0.0);
        let t = 2.0 * std::f64::consts::PI / 3.0;
        let s = evolve_rk4(&p, &s0, t, 1e-4).unwrap();
        let d = (s.to_array().iter().zip(s0.to_array()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6);
    }

    #[test]
    fn rk4_rejects_coarse_steps() {
        let p = params(3.0, 2.0, 0.0);
        let s0 = PhaseState::new(1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            evolve_rk4(&p, &s0, 1.0, 0.1),
            Err(DynamicsError::StepSizeError { .. })
        ));
    }

    #[test]
    fn rk4_zero_state() {
        let s = evolve_rk4(
            &params(3.0, 2.0, 1.0),
            &PhaseState::new(0.0, 0.0, 0.0, 0.0),
            2.0,
            1e-4,
        )
        .unwrap();
        assert!(s.norm() == 0.0);
    }

    #[test]
    fn energy_conserved_both_regimes() {
        for w in [1.0, 2.5, 3.5] {
            let p = params(3.0, 2.0, w);
            let h = build_quadratic_form(&p);
            let s0 = PhaseState::new(0.3, -0.7, 1.1, 0.4);
            let e0 = routhian_energy(&s0.to_array(), &h);
            for k in 1..=20 {
                let t = 0.5 * k as f64;
                let s = evolve(&p, &s0, t).unwrap();
                let e = routhian_energy(&s.to_array(), &h);
                assert!(
                    (e - e0).abs() <= 1e-8 * e0.abs().max(1.0),
                    "energy drift at W={w}, t={t}: {e} vs {e0}"
                );
            }
        }
    }

    #[test]
    fn group_property_and_reversibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..30 {
            let p = random_stable_params(&mut rng);
            let s0 = random_state(&mut rng);
            let t1: f64 = rng.random_range(-3.0..3.0);
            let t2: f64 = rng.random_range(-3.0..3.0);
            let step = evolve(&p, &evolve(&p, &s0, t1).unwrap(), t2).unwrap();
            let direct = evolve(&p, &s0, t1 + t2).unwrap();
            let d = (step.to_array().iter().zip(direct.to_array()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-8 * (1.0 + direct.norm()));

            let back = evolve(&p, &evolve(&p, &s0, t1).unwrap(), -t1).unwrap();
            let r = (back.to_array().iter().zip(s0.to_array()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(r < 1e-8);
        }
    }

    #[test]
    fn propagator_is_symplectic() {
        let j = crate::model::canonical_symplectic().real_part();
        for w in [0.5, 2.5, 4.0] {
            let p = params(3.0, 2.0, w);
            for t in [0.3, 2.0, 7.5] {
                let prop = propagator(&p, t).unwrap();
                // P^T J P = J
                let mut ptjp = [[0.0; 4]; 4];
                for i in 0..4 {
                    for jdx in 0..4 {
                        let mut acc = 0.0;
                        for a in 0..4 {
                            for b in 0..4 {
                                acc += prop[a][i] * j[a][b] * prop[b][jdx];
                            }
                        }
                        ptjp[i][jdx] = acc;
                    }
                }
                let mut err = 0.0f64;
                let mut scale = 1.0f64;
                for i in 0..4 {
                    for jdx in 0..4 {
                        err = err.max((ptjp[i][jdx] - j[i][jdx]).abs());
                        scale = scale.max(prop[i][jdx].abs());
                    }
                }
                assert!(err <= 1e-8 * scale * scale, "symplectic defect {err:.3e} at W={w}, t={t}");
            }
        }
    }

    #[test]
    fn growth_rate_inside_window() {
        let p = params(3.0, 2.0, 2.5);
        let expect = eigenmodes(&p).omega_minus.im;
        let t_max = 20.0 / expect;
        let report = growth_rate(&p, &PhaseState::new(1.0, 1.0, 1.0, 1.0), t_max).unwrap();
        assert!(report.in_window);
        assert!((report.slope - expect).abs() <= 0.01 * expect);
    }

    #[test]
    fn growth_rate_flags_stable_runs() {
        // bounded quasi-periodic orbit: the fitted slope decays like 1/t_max
        let p = params(3.0, 2.0, 1.0);
        let report = growth_rate(&p, &PhaseState::new(0.4, -0.2, 0.9, 0.1), 200.0).unwrap();
        assert!(!report.in_window);
        assert!(report.slope.abs() < 1e-3);
    }

    #[test]
    fn growth_rate_near_threshold() {
        let p = params(3.0, 2.0, 2.0 + 1e-4);
        let expect = eigenmodes(&p).omega_minus.im;
        let t_max = 20.0 / expect;
        let report = growth_rate(&p, &PhaseState::new(1.0, 1.0, 1.0, 1.0), t_max).unwrap();
        assert!(report.in_window);
        assert!((report.slope - expect).abs() <= 0.05 * expect);
    }

    #[test]
    fn evolve_falls_back_to_rk4_at_ep() {
        let p = params(3.0, 2.0, 2.0);
        let s0 = PhaseState::new(0.5, 0.5, 0.5, 0.5);
        let (state, fell_back) = evolve_detailed(&p, &s0, 1.0).unwrap();
        assert!(fell_back);
        // oracle agreement at the exceptional point itself
        let oracle = evolve_rk4(&p, &s0, 1.0, 1e-4).unwrap();
        let d = (state.to_array().iter().zip(oracle.to_array()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6);
    }
}
