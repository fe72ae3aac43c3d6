use std::collections::BTreeMap;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mcmc::PosteriorDraws;

/// Gelman–Rubin potential scale reduction factor over equal-length chains.
pub fn psrf(traces: &[Vec<f64>]) -> Result<f64> {
    let m = traces.len();
    if m < 2 {
        return Err(invalid("PSRF needs at least two chains"));
    }
    let n = traces[0].len();
    if n < 2 || traces.iter().any(|t| t.len() != n) {
        return Err(invalid("PSRF needs equal-length chains of at least two draws"));
    }
    let nf = n as f64;
    let means: Vec<f64> = traces.iter().map(|t| t.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let between = nf * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1) as f64;
    let within = traces
        .iter()
        .zip(&means)
        .map(|(t, mu)| t.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    if within == 0.0 {
        return Ok(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok((pooled / within).sqrt())
}

/// Autocorrelations at every lag, by FFT.
fn autocorrelation(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = xs
        .iter()
        .map(|x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if c0 <= 0.0 {
        return vec![1.0];
    }
    buf[..n].iter().map(|v| v.re / c0).collect()
}

/// Effective sample size of one trace: length over the integrated
/// autocorrelation time, truncated by Geyer's initial positive sequence.
/// Capped at the trace length; a constant trace counts as one draw.
pub fn ess(trace: &[f64]) -> f64 {
    let n = trace.len();
    if n < 4 {
        return n as f64;
    }
    let first = trace[0];
    if trace.iter().all(|x| *x == first) {
        return 1.0;
    }
    let rho = autocorrelation(trace);
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho[2 * k] + rho[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    let tau = 2.0 * sum - 1.0;
    if tau <= 0.0 {
        return n as f64;
    }
    (n as f64 / tau).min(n as f64)
}

/// Effective sample size summed over chains.
pub fn ess_chains(traces: &[Vec<f64>]) -> f64 {
    traces.iter().map(|t| ess(t)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub parameter: String,
    pub group: String,
    /// `None` with a single chain.
    pub psrf: Option<f64>,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub parameters: usize,
    pub max_psrf: Option<f64>,
    pub min_ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsTable {
    pub rows: Vec<DiagnosticRow>,
    pub groups: Vec<GroupSummary>,
}

impl DiagnosticsTable {
    pub fn row(&self, parameter: &str) -> Option<&DiagnosticRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }
}

/// PSRF and ESS of every recorded parameter, plus the worst value within
/// each parameter group.
pub fn diagnose(draws: &PosteriorDraws) -> Result<DiagnosticsTable> {
    if draws.draws_per_chain() < 2 {
        return Err(invalid("diagnostics need at least two draws per chain"));
    }
    let n = draws.draws_per_chain();
    let names = draws.dims.names(draws.with_latents);
    let mut rows = Vec::with_capacity(names.len());
    for (j, (name, group)) in names.iter().enumerate() {
        let traces: Vec<Vec<f64>> = draws.trace(j).into_iter().map(|mut t| {
            t.truncate(n);
            t
        }).collect();
        let r = if traces.len() > 1 { Some(psrf(&traces)?) } else { None };
        rows.push(DiagnosticRow {
            parameter: name.clone(),
            group: group.to_string(),
            psrf: r,
            ess: ess_chains(&traces),
        });
    }
    let mut by_group: BTreeMap<String, GroupSummary> = BTreeMap::new();
    let mut order = Vec::new();
    for r in &rows {
        let e = by_group.entry(r.group.clone()).or_insert_with(|| {
            order.push(r.group.clone());
            GroupSummary {
                group: r.group.clone(),
                parameters: 0,
                max_psrf: None,
                min_ess: f64::INFINITY,
            }
        });
        e.parameters += 1;
        e.min_ess = e.min_ess.min(r.ess);
        if let Some(p) = r.psrf {
            e.max_psrf = Some(e.max_psrf.map_or(p, |q: f64| q.max(p)));
        }
    }
    let groups = order.into_iter().map(|g| by_group.remove(&g).expect("group recorded")).collect();
    Ok(DiagnosticsTable { rows, groups })
}
