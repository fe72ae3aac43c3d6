//! Adaptive random-walk Metropolis–Hastings.
//!
//! Starts with one-at-a-time updates whose log step sizes follow a
//! Robbins–Monro recursion towards a target acceptance rate. For
//! multivariate targets it switches, after a fixed number of iterations, to
//! joint proposals shaped by the running sample covariance with a single
//! adapted global scale. Adaptation stops after [`AdaptiveMhState::freeze`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::samplers::{cholesky_with_jitter, std_normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveMhConfig {
    pub target_univariate: f64,
    pub target_multivariate: f64,
    /// Iteration after which multivariate targets switch to joint proposals.
    pub switch_after: u64,
    /// Step-size sequence `gamma_t = t^-decay`.
    pub decay: f64,
    pub initial_log_scale: f64,
}

impl Default for AdaptiveMhConfig {
    fn default() -> Self {
        Self {
            target_univariate: 0.3,
            target_multivariate: 0.234,
            switch_after: 1000,
            decay: 0.6,
            initial_log_scale: -1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveMhState {
    config: AdaptiveMhConfig,
    log_scales: Vec<f64>,
    log_global_scale: f64,
    iteration: u64,
    adapting: bool,
    /// Running mean and scatter of the visited states (Welford).
    mean: Vec<f64>,
    scatter: Vec<f64>,
    accepted: u64,
    proposed: u64,
    /// Proposals whose log target was NaN; these are rejected.
    pub nan_rejections: u64,
}

impl AdaptiveMhState {
    pub fn new(dim: usize, config: AdaptiveMhConfig) -> Self {
        assert!(dim > 0, "adaptive MH needs at least one coordinate");
        Self {
            config,
            log_scales: vec![config.initial_log_scale; dim],
            log_global_scale: (2.38f64 * 2.38 / dim as f64).ln() / 2.0,
            iteration: 0,
            adapting: true,
            mean: vec![0.0; dim],
            scatter: vec![0.0; dim * dim],
            accepted: 0,
            proposed: 0,
            nan_rejections: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.log_scales.len()
    }

    pub fn freeze(&mut self) {
        self.adapting = false;
    }

    pub fn is_adapting(&self) -> bool {
        self.adapting
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Overall acceptance rate since the last [`reset_counts`](Self::reset_counts).
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn reset_counts(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    pub fn log_scales(&self) -> &[f64] {
        &self.log_scales
    }

    fn joint_mode(&self) -> bool {
        self.dim() > 1 && self.iteration > self.config.switch_after
    }

    /// Empirical covariance of the visited states.
    pub fn empirical_covariance(&self) -> DMatrix<f64> {
        let d = self.dim();
        let n = self.iteration.max(2) as f64;
        DMatrix::from_fn(d, d, |i, j| self.scatter[i * d + j] / (n - 1.0))
    }

    /// Covariance of the joint proposal used after the switch.
    pub fn proposal_covariance(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut c = self.empirical_covariance();
        let ridge = 1e-8 * (c.trace() / d as f64).max(1e-12);
        for i in 0..d {
            c[(i, i)] += ridge;
        }
        c * (2.0 * self.log_global_scale).exp()
    }

    fn gamma(&self) -> f64 {
        ((self.iteration + 1) as f64).powf(-self.config.decay)
    }

    /// One transition from `current`. Returns the new state.
    pub fn step<R, F>(&mut self, current: &[f64], mut log_target: F, rng: &mut R) -> Vec<f64>
    where
        R: Rng + ?Sized,
        F: FnMut(&[f64]) -> f64,
    {
        let d = self.dim();
        assert_eq!(current.len(), d, "state dimension");
        let mut x = current.to_vec();
        let mut lp = log_target(&x);
        if self.joint_mode() {
            let cov = self.proposal_covariance();
            let chol = cholesky_with_jitter(&cov).ok();
            let prop: Vec<f64> = match &chol {
                Some(c) => {
                    let z = DVector::from_fn(d, |_, _| std_normal(rng));
                    let dz = c.l() * z;
                    x.iter().zip(dz.iter()).map(|(a, b)| a + b).collect()
                }
                None => {
                    let s = self.log_global_scale.exp();
                    x.iter().map(|a| a + s * std_normal(rng)).collect()
                }
            };
            let acc = self.accept(&mut x, &mut lp, prop, &mut log_target, rng);
            if self.adapting {
                self.log_global_scale += self.gamma() * (acc - self.config.target_multivariate);
            }
        } else {
            for j in 0..d {
                let mut prop = x.clone();
                prop[j] += self.log_scales[j].exp() * std_normal(rng);
                let acc = self.accept(&mut x, &mut lp, prop, &mut log_target, rng);
                if self.adapting {
                    self.log_scales[j] += self.gamma() * (acc - self.config.target_univariate);
                }
            }
        }
        if self.adapting {
            self.iteration += 1;
            let n = self.iteration as f64;
            let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
            for (m, dl) in self.mean.iter_mut().zip(&delta) {
                *m += dl / n;
            }
            for i in 0..d {
                for k in 0..d {
                    self.scatter[i * d + k] += delta[i] * (x[k] - self.mean[k]);
                }
            }
        }
        x
    }

    /// Convenience wrapper for one-dimensional targets.
    pub fn step_scalar<R, F>(&mut self, current: f64, mut log_target: F, rng: &mut R) -> f64
    where
        R: Rng + ?Sized,
        F: FnMut(f64) -> f64,
    {
        self.step(&[current], |v| log_target(v[0]), rng)[0]
    }

    /// Metropolis accept/reject. Returns the acceptance probability used for
    /// adaptation.
    fn accept<R, F>(&mut self, x: &mut Vec<f64>, lp: &mut f64, prop: Vec<f64>, log_target: &mut F, rng: &mut R) -> f64
    where
        R: Rng + ?Sized,
        F: FnMut(&[f64]) -> f64,
    {
        self.proposed += 1;
        let lp_new = if prop.iter().all(|v| v.is_finite()) {
            log_target(&prop)
        } else {
            f64::NEG_INFINITY
        };
        if lp_new.is_nan() {
            self.nan_rejections += 1;
            return 0.0;
        }
        let log_ratio = lp_new - *lp;
        let prob = if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() };
        if rng.random::<f64>() < prob {
            *x = prop;
            *lp = lp_new;
            self.accepted += 1;
        }
        prob
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn univariate_acceptance_near_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut mh = AdaptiveMhState::new(1, AdaptiveMhConfig::default());
        let mut x = 0.0;
        for _ in 0..100_000 {
            x = mh.step_scalar(x, |v| -0.5 * v * v, &mut rng);
        }
        let rate = mh.acceptance_rate();
        assert!((0.25..=0.35).contains(&rate), "{rate}");
    }

    #[test]
    fn learns_correlation() {
        let rho: f64 = 0.9;
        let det = 1.0 - rho * rho;
        let lt = |v: &[f64]| -0.5 * (v[0] * v[0] - 2.0 * rho * v[0] * v[1] + v[1] * v[1]) / det;
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mut mh = AdaptiveMhState::new(2, AdaptiveMhConfig::default());
        let mut x = vec![0.0, 0.0];
        for _ in 0..50_000 {
            x = mh.step(&x, lt, &mut rng);
        }
        let c = mh.proposal_covariance();
        let r = c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt();
        assert!((r - rho).abs() < 0.1, "{r}");
    }

    #[test]
    fn frozen_state_does_not_adapt() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut mh = AdaptiveMhState::new(1, AdaptiveMhConfig::default());
        mh.freeze();
        let before = mh.log_scales().to_vec();
        let mut x = 0.0;
        for _ in 0..100 {
            x = mh.step_scalar(x, |v| -0.5 * v * v, &mut rng);
        }
        assert_eq!(before, mh.log_scales());
        assert_eq!(mh.iteration(), 0);
    }

    #[test]
    fn nan_targets_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut mh = AdaptiveMhState::new(1, AdaptiveMhConfig::default());
        let x = mh.step_scalar(1.0, |v| if v == 1.0 { 0.0 } else { f64::NAN }, &mut rng);
        assert_eq!(x, 1.0);
        assert_eq!(mh.nan_rejections, 1);
    }
}
