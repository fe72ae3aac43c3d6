use serde::{Deserialize, Serialize};

use crate::bernstein::{order_index, satisfies_shape, RbpCoefficientSet};
use crate::error::{Error, Result};
use crate::model::{Dataset, PriorConfig};

/// Full sampler state: every model parameter plus the latent scale-mixture
/// variables.
///
/// Per-athlete vectors are indexed by athlete, per-observation ones by
/// athlete then performance, in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    /// Population age polynomial coefficients, length `d + 1`.
    pub delta: Vec<f64>,
    /// Confounder effects.
    pub zeta: Vec<f64>,
    pub alpha: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu_mu: f64,
    pub nu_eta: f64,
    pub sigma2: Vec<f64>,
    pub sigma2_a: f64,
    pub sigma2_m: f64,
    pub sigma2_mu: f64,
    pub sigma2_eta: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub tau0: f64,
    pub tau1: f64,
    pub lambda2: Vec<f64>,
    pub tau2: Vec<f64>,
    pub c2: Vec<f64>,
    pub d2: Vec<f64>,
    pub sigma2_beta: Vec<f64>,
    /// Population within-season coefficients; shape constrained.
    pub beta: RbpCoefficientSet,
    pub beta_athlete: Vec<RbpCoefficientSet>,
    pub beta_season: Vec<Vec<RbpCoefficientSet>>,
    /// Season-start trend values `eta_{i,1..S_i+1}`.
    pub knots: Vec<Vec<f64>>,
    pub kappa: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub omega_mu: Vec<f64>,
    /// One per season increment, length `S_i`.
    pub omega_eta: Vec<Vec<f64>>,
}

/// Shape of a [`ParamState`] for a given dataset and prior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDims {
    pub degree: usize,
    pub max_order: usize,
    pub num_confounders: usize,
    pub seasons: Vec<usize>,
    pub performances: Vec<usize>,
}

impl StateDims {
    pub fn new(dataset: &Dataset, prior: &PriorConfig) -> Self {
        Self {
            degree: prior.degree,
            max_order: prior.max_order,
            num_confounders: dataset.num_confounders(),
            seasons: dataset.athletes.iter().map(|a| a.seasons).collect(),
            performances: dataset.athletes.iter().map(|a| a.len()).collect(),
        }
    }

    pub fn num_coeffs(&self) -> usize {
        crate::bernstein::num_coeffs(self.max_order)
    }

    pub fn num_athletes(&self) -> usize {
        self.seasons.len()
    }

    /// Flattened parameter names, optionally including per-observation
    /// latents, in the order used by [`ParamState::flatten`].
    pub fn names(&self, with_latents: bool) -> Vec<(String, &'static str)> {
        let g = self.num_coeffs();
        let coeff = |j: usize| {
            let (n, v) = order_index(j);
            format!("{n},{v}")
        };
        let mut out = Vec::new();
        for (name, group) in SCALARS {
            out.push((name.to_string(), group));
        }
        for k in 0..=self.degree {
            out.push((format!("delta[{k}]"), "delta"));
        }
        for k in 0..self.num_confounders {
            out.push((format!("zeta[{k}]"), "zeta"));
        }
        for j in 0..g {
            out.push((format!("c2[{}]", coeff(j)), "c2"));
        }
        for j in 0..g {
            out.push((format!("d2[{}]", coeff(j)), "d2"));
        }
        for j in 0..g {
            out.push((format!("sigma2_beta[{}]", coeff(j)), "sigma2_beta"));
        }
        for j in 0..g {
            out.push((format!("beta[{}]", coeff(j)), "beta"));
        }
        for i in 0..self.num_athletes() {
            let s = self.seasons[i];
            out.push((format!("sigma2[{i}]"), "sigma2_i"));
            out.push((format!("lambda2[{i}]"), "lambda2_i"));
            out.push((format!("tau2[{i}]"), "tau2_i"));
            out.push((format!("omega_mu[{i}]"), "omega_mu"));
            for j in 0..g {
                out.push((format!("beta_i[{i}][{}]", coeff(j)), "beta_i"));
            }
            for k in 0..=s {
                out.push((format!("eta[{i}][{}]", k + 1), "eta"));
            }
            for k in 0..s {
                out.push((format!("omega_eta[{i}][{}]", k + 1), "omega_eta"));
            }
            for season in 0..s {
                for j in 0..g {
                    out.push((
                        format!("beta_is[{i}][{}][{}]", season + 1, coeff(j)),
                        "beta_is",
                    ));
                }
            }
            if with_latents {
                for k in 0..self.performances[i] {
                    out.push((format!("kappa[{i}][{k}]"), "kappa"));
                }
                for k in 0..self.performances[i] {
                    out.push((format!("omega[{i}][{k}]"), "omega"));
                }
                for k in 0..self.performances[i] {
                    out.push((format!("phi[{i}][{k}]"), "phi"));
                }
            }
        }
        out
    }

    /// Offsets of each block in a flattened state.
    pub fn layout(&self, with_latents: bool) -> FlatLayout {
        let g = self.num_coeffs();
        let delta = SCALARS.len();
        let zeta = delta + self.degree + 1;
        let c2 = zeta + self.num_confounders;
        let d2 = c2 + g;
        let sigma2_beta = d2 + g;
        let beta = sigma2_beta + g;
        let mut pos = beta + g;
        let mut athletes = Vec::with_capacity(self.num_athletes());
        for i in 0..self.num_athletes() {
            let s = self.seasons[i];
            let start = pos;
            let beta_athlete = start + 4;
            let knots = beta_athlete + g;
            let omega_eta = knots + s + 1;
            let beta_season = omega_eta + s;
            pos = beta_season + s * g;
            let latents = if with_latents {
                let at = pos;
                pos += 3 * self.performances[i];
                Some(at)
            } else {
                None
            };
            athletes.push(AthleteOffsets {
                sigma2: start,
                lambda2: start + 1,
                tau2: start + 2,
                omega_mu: start + 3,
                beta_athlete,
                knots,
                omega_eta,
                beta_season,
                latents,
            });
        }
        FlatLayout {
            num_coeffs: g,
            delta,
            zeta,
            c2,
            d2,
            sigma2_beta,
            beta,
            athletes,
        }
    }

    pub fn flat_len(&self, with_latents: bool) -> usize {
        let g = self.num_coeffs();
        let mut len = SCALARS.len() + self.degree + 1 + self.num_confounders + 4 * g;
        for i in 0..self.num_athletes() {
            let s = self.seasons[i];
            len += 4 + g + (s + 1) + s + s * g;
            if with_latents {
                len += 3 * self.performances[i];
            }
        }
        len
    }
}

/// Start offsets of the blocks of a flattened [`ParamState`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatLayout {
    pub num_coeffs: usize,
    pub delta: usize,
    pub zeta: usize,
    pub c2: usize,
    pub d2: usize,
    pub sigma2_beta: usize,
    pub beta: usize,
    pub athletes: Vec<AthleteOffsets>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AthleteOffsets {
    pub sigma2: usize,
    pub lambda2: usize,
    pub tau2: usize,
    pub omega_mu: usize,
    pub beta_athlete: usize,
    pub knots: usize,
    pub omega_eta: usize,
    /// Season `s` starts at `beta_season + s * num_coeffs`.
    pub beta_season: usize,
    /// `kappa`, then `omega`, then `phi`, when recorded.
    pub latents: Option<usize>,
}

/// Names of the leading scalar block; `alpha` sits at offset 0.
pub const SCALAR_NAMES: [&str; 13] = [
    "alpha", "nu1", "nu2", "nu_mu", "nu_eta", "sigma2_a", "sigma2_m", "sigma2_mu", "sigma2_eta", "lambda0",
    "lambda1", "tau0", "tau1",
];

const SCALARS: [(&str, &str); 13] = [
    ("alpha", "alpha"),
    ("nu1", "nu1"),
    ("nu2", "nu2"),
    ("nu_mu", "nu_mu"),
    ("nu_eta", "nu_eta"),
    ("sigma2_a", "sigma2_a"),
    ("sigma2_m", "sigma2_m"),
    ("sigma2_mu", "sigma2_mu"),
    ("sigma2_eta", "sigma2_eta"),
    ("lambda0", "lambda0"),
    ("lambda1", "lambda1"),
    ("tau0", "tau0"),
    ("tau1", "tau1"),
];

impl ParamState {
    /// A valid state with zero locations, unit scales and `nu = 20`; the
    /// starting point for initialisation and for hand-built test states.
    pub fn baseline(dims: &StateDims) -> Self {
        let g = dims.num_coeffs();
        let m = dims.num_athletes();
        let zeros = RbpCoefficientSet::zeros(dims.max_order).expect("max_order >= 2");
        ParamState {
            delta: vec![0.0; dims.degree + 1],
            zeta: vec![0.0; dims.num_confounders],
            alpha: 0.0,
            nu1: 20.0,
            nu2: 20.0,
            nu_mu: 20.0,
            nu_eta: 20.0,
            sigma2: vec![1.0; m],
            sigma2_a: 2.0,
            sigma2_m: 1.0,
            sigma2_mu: 1.0,
            sigma2_eta: 1.0,
            lambda0: 1.0,
            lambda1: 1.0,
            tau0: 1.0,
            tau1: 1.0,
            lambda2: vec![1.0; m],
            tau2: vec![1.0; m],
            c2: vec![1.0; g],
            d2: vec![1.0; g],
            sigma2_beta: vec![1.0; g],
            beta: zeros.clone(),
            beta_athlete: vec![zeros.clone(); m],
            beta_season: dims.seasons.iter().map(|&s| vec![zeros.clone(); s]).collect(),
            knots: dims.seasons.iter().map(|&s| vec![0.0; s + 1]).collect(),
            kappa: dims.performances.iter().map(|&n| vec![0.0; n]).collect(),
            omega: dims.performances.iter().map(|&n| vec![1.0; n]).collect(),
            phi: dims.performances.iter().map(|&n| vec![1.0; n]).collect(),
            omega_mu: vec![1.0; m],
            omega_eta: dims.seasons.iter().map(|&s| vec![1.0; s]).collect(),
        }
    }

    pub fn dims(&self) -> StateDims {
        StateDims {
            degree: self.delta.len() - 1,
            max_order: self.beta.max_order(),
            num_confounders: self.zeta.len(),
            seasons: self.knots.iter().map(|k| k.len() - 1).collect(),
            performances: self.kappa.iter().map(Vec::len).collect(),
        }
    }

    pub fn num_athletes(&self) -> usize {
        self.sigma2.len()
    }

    /// `alpha / sqrt(1 + alpha^2)`, the loading of the skewing component.
    pub fn skew_loading(&self) -> f64 {
        skew_loading(self.alpha)
    }

    /// Whether per-observation latents are present (they are dropped from
    /// recorded draws unless requested).
    pub fn has_latents(&self) -> bool {
        self.kappa.iter().any(|k| !k.is_empty())
    }

    /// Remove per-observation latents, keeping the athlete structure.
    pub fn without_latents(&self) -> Self {
        let mut s = self.clone();
        for v in s.kappa.iter_mut().chain(s.omega.iter_mut()).chain(s.phi.iter_mut()) {
            v.clear();
        }
        s
    }

    pub fn flatten(&self, with_latents: bool) -> Vec<f64> {
        let mut out = vec![
            self.alpha,
            self.nu1,
            self.nu2,
            self.nu_mu,
            self.nu_eta,
            self.sigma2_a,
            self.sigma2_m,
            self.sigma2_mu,
            self.sigma2_eta,
            self.lambda0,
            self.lambda1,
            self.tau0,
            self.tau1,
        ];
        out.extend_from_slice(&self.delta);
        out.extend_from_slice(&self.zeta);
        out.extend_from_slice(&self.c2);
        out.extend_from_slice(&self.d2);
        out.extend_from_slice(&self.sigma2_beta);
        out.extend_from_slice(self.beta.as_slice());
        for i in 0..self.num_athletes() {
            out.push(self.sigma2[i]);
            out.push(self.lambda2[i]);
            out.push(self.tau2[i]);
            out.push(self.omega_mu[i]);
            out.extend_from_slice(self.beta_athlete[i].as_slice());
            out.extend_from_slice(&self.knots[i]);
            out.extend_from_slice(&self.omega_eta[i]);
            for b in &self.beta_season[i] {
                out.extend_from_slice(b.as_slice());
            }
            if with_latents {
                out.extend_from_slice(&self.kappa[i]);
                out.extend_from_slice(&self.omega[i]);
                out.extend_from_slice(&self.phi[i]);
            }
        }
        out
    }

    pub fn unflatten(dims: &StateDims, with_latents: bool, flat: &[f64]) -> Result<Self> {
        if flat.len() != dims.flat_len(with_latents) {
            return Err(Error::Integrity(format!(
                "flat state has {} values, layout needs {}",
                flat.len(),
                dims.flat_len(with_latents)
            )));
        }
        let g = dims.num_coeffs();
        let mut pos = 0;
        let mut take = |n: usize| {
            let s = &flat[pos..pos + n];
            pos += n;
            s.to_vec()
        };
        let scalars = take(SCALARS.len());
        let delta = take(dims.degree + 1);
        let zeta = take(dims.num_confounders);
        let c2 = take(g);
        let d2 = take(g);
        let sigma2_beta = take(g);
        let beta = RbpCoefficientSet::from_vec(dims.max_order, take(g))
            .map_err(|e| Error::Integrity(e.to_string()))?;
        let m = dims.num_athletes();
        let mut state = ParamState {
            delta,
            zeta,
            alpha: scalars[0],
            nu1: scalars[1],
            nu2: scalars[2],
            nu_mu: scalars[3],
            nu_eta: scalars[4],
            sigma2_a: scalars[5],
            sigma2_m: scalars[6],
            sigma2_mu: scalars[7],
            sigma2_eta: scalars[8],
            lambda0: scalars[9],
            lambda1: scalars[10],
            tau0: scalars[11],
            tau1: scalars[12],
            sigma2: Vec::with_capacity(m),
            lambda2: Vec::with_capacity(m),
            tau2: Vec::with_capacity(m),
            c2,
            d2,
            sigma2_beta,
            beta,
            beta_athlete: Vec::with_capacity(m),
            beta_season: Vec::with_capacity(m),
            knots: Vec::with_capacity(m),
            kappa: Vec::with_capacity(m),
            omega: Vec::with_capacity(m),
            phi: Vec::with_capacity(m),
            omega_mu: Vec::with_capacity(m),
            omega_eta: Vec::with_capacity(m),
        };
        let coeffs = |v: Vec<f64>| {
            RbpCoefficientSet::from_vec(dims.max_order, v).map_err(|e| Error::Integrity(e.to_string()))
        };
        for i in 0..m {
            let s = dims.seasons[i];
            let head = take(4);
            state.sigma2.push(head[0]);
            state.lambda2.push(head[1]);
            state.tau2.push(head[2]);
            state.omega_mu.push(head[3]);
            state.beta_athlete.push(coeffs(take(g))?);
            state.knots.push(take(s + 1));
            state.omega_eta.push(take(s));
            let mut seasons = Vec::with_capacity(s);
            for _ in 0..s {
                seasons.push(coeffs(take(g))?);
            }
            state.beta_season.push(seasons);
            if with_latents {
                let n = dims.performances[i];
                state.kappa.push(take(n));
                state.omega.push(take(n));
                state.phi.push(take(n));
            } else {
                state.kappa.push(Vec::new());
                state.omega.push(Vec::new());
                state.phi.push(Vec::new());
            }
        }
        Ok(state)
    }

    /// Check every structural and support invariant. Per-observation latents
    /// are only checked when present.
    pub fn validate(&self, prior: &PriorConfig) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        if !satisfies_shape(&self.beta, prior.direction) {
            return fail(format!(
                "population coefficients {:?} outside the shape cone",
                self.beta.as_slice()
            ));
        }
        let positive_scalars = [
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("nu_mu", self.nu_mu),
            ("nu_eta", self.nu_eta),
            ("sigma2_a", self.sigma2_a),
            ("sigma2_m", self.sigma2_m),
            ("sigma2_mu", self.sigma2_mu),
            ("sigma2_eta", self.sigma2_eta),
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("tau0", self.tau0),
            ("tau1", self.tau1),
        ];
        for (name, v) in positive_scalars {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} = {v} is not strictly positive"));
            }
        }
        let positive_vectors: [(&str, &[f64]); 8] = [
            ("sigma2", &self.sigma2),
            ("lambda2", &self.lambda2),
            ("tau2", &self.tau2),
            ("c2", &self.c2),
            ("d2", &self.d2),
            ("sigma2_beta", &self.sigma2_beta),
            ("omega_mu", &self.omega_mu),
            ("omega_eta", &self.omega_eta.concat()),
        ];
        for (name, v) in positive_vectors {
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return fail(format!("{name} contains non-positive value {bad}"));
            }
        }
        for (name, v) in [("omega", &self.omega), ("phi", &self.phi)] {
            if let Some(bad) = v.iter().flatten().find(|x| !(**x > 0.0 && x.is_finite())) {
                return fail(format!("{name} contains non-positive value {bad}"));
            }
        }
        if let Some(bad) = self.kappa.iter().flatten().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return fail(format!("kappa contains negative value {bad}"));
        }
        let finite = self.delta.iter().chain(&self.zeta).chain(self.knots.iter().flatten());
        if finite.into_iter().any(|x| !x.is_finite()) || !self.alpha.is_finite() {
            return fail("non-finite location parameter".into());
        }
        Ok(())
    }
}

#[inline]
pub fn skew_loading(alpha: f64) -> f64 {
    alpha / (1.0 + alpha * alpha).sqrt()
}
