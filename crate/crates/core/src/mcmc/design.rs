//! Per-athlete design matrices for the linear-model form of the sampler.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::bernstein::{basis_row, num_coeffs};
use crate::error::{Error, Result};
use crate::model::{Dataset, PriorConfig};

/// Design matrices of one athlete. Rows follow the dataset's performance
/// order, so each season occupies a contiguous block of rows.
#[derive(Debug, Clone)]
pub struct AthleteDesign {
    pub response: DVector<f64>,
    /// Centred age powers `(a - mean_age)^k`, `k = 0..=d`.
    pub poly: DMatrix<f64>,
    pub confounders: DMatrix<f64>,
    /// Linear interpolation weights onto the `S + 1` knots; two nonzeros per
    /// row summing to one.
    pub interp: DMatrix<f64>,
    /// Basis values of every restricted Bernstein term at each row's season
    /// fraction (`n x G`). The full block design is [`Self::rbp_design`].
    pub rbp: DMatrix<f64>,
    pub season_rows: Vec<Range<usize>>,
    /// Random-walk difference matrix: `(rw F)_1 = F_1`,
    /// `(rw F)_j = F_j - F_{j-1}`.
    pub rw: DMatrix<f64>,
}

impl AthleteDesign {
    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn seasons(&self) -> usize {
        self.season_rows.len()
    }

    /// Sparse-by-block `n x S G` design mapping stacked season coefficients to
    /// the rows; each row is nonzero only in its own season's block.
    pub fn rbp_design(&self) -> DMatrix<f64> {
        let g = self.rbp.ncols();
        let mut c = DMatrix::zeros(self.len(), self.seasons() * g);
        for (s, rows) in self.season_rows.iter().enumerate() {
            for r in rows.clone() {
                for j in 0..g {
                    c[(r, s * g + j)] = self.rbp[(r, j)];
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct DesignCache {
    pub athletes: Vec<AthleteDesign>,
    pub degree: usize,
    pub num_confounders: usize,
    pub num_coeffs: usize,
}

impl DesignCache {
    pub fn num_athletes(&self) -> usize {
        self.athletes.len()
    }

    pub fn num_observations(&self) -> usize {
        self.athletes.iter().map(AthleteDesign::len).sum()
    }

    /// Width of the population block `(delta, zeta, beta)`.
    pub fn population_width(&self) -> usize {
        self.degree + 1 + self.num_confounders + self.num_coeffs
    }
}

/// Assemble every design matrix for `dataset` under `prior`.
pub fn build_design(dataset: &Dataset, prior: &PriorConfig) -> Result<DesignCache> {
    prior.validate()?;
    let d = prior.degree;
    let p = dataset.num_confounders();
    let g = num_coeffs(prior.max_order);
    let mut athletes = Vec::with_capacity(dataset.num_athletes());
    for a in &dataset.athletes {
        let n = a.len();
        let s_count = a.seasons;
        let mut poly = DMatrix::zeros(n, d + 1);
        let mut conf = DMatrix::zeros(n, p);
        let mut interp = DMatrix::zeros(n, s_count + 1);
        let mut rbp = DMatrix::zeros(n, g);
        let mut season_rows = vec![0..0; s_count];
        let mut response = DVector::zeros(n);
        for (r, perf) in a.performances.iter().enumerate() {
            let z = perf.season_fraction;
            if !(0.0..1.0).contains(&z) {
                return Err(Error::Data(format!(
                    "athlete {} performance {}: season fraction {z} outside [0, 1)",
                    a.id,
                    r + 1
                )));
            }
            if perf.season >= s_count || perf.confounders.len() != p {
                return Err(Error::Data(format!(
                    "athlete {} performance {}: inconsistent season or confounders",
                    a.id,
                    r + 1
                )));
            }
            response[r] = perf.value;
            let x = perf.age - prior.mean_age;
            let mut pw = 1.0;
            for k in 0..=d {
                poly[(r, k)] = pw;
                pw *= x;
            }
            for (j, v) in perf.confounders.iter().enumerate() {
                conf[(r, j)] = *v;
            }
            interp[(r, perf.season)] = 1.0 - z;
            interp[(r, perf.season + 1)] = z;
            for (j, b) in basis_row(prior.max_order, z).into_iter().enumerate() {
                rbp[(r, j)] = b;
            }
            let rows = &mut season_rows[perf.season];
            if rows.start == rows.end {
                *rows = r..r + 1;
            } else if rows.end == r {
                rows.end = r + 1;
            } else {
                return Err(Error::Data(format!(
                    "athlete {}: season {} rows are not contiguous",
                    a.id,
                    perf.season + 1
                )));
            }
        }
        // empty seasons get an empty range at the right position
        let mut next = 0;
        for rows in season_rows.iter_mut() {
            if rows.start == rows.end {
                *rows = next..next;
            }
            next = rows.end;
        }
        let rw = DMatrix::from_fn(s_count + 1, s_count + 1, |i, j| {
            if i == j {
                1.0
            } else if j + 1 == i {
                -1.0
            } else {
                0.0
            }
        });
        athletes.push(AthleteDesign {
            response,
            poly,
            confounders: conf,
            interp,
            rbp,
            season_rows,
            rw,
        });
    }
    Ok(DesignCache {
        athletes,
        degree: d,
        num_confounders: p,
        num_coeffs: g,
    })
}
