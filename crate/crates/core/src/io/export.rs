use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mcmc::PosteriorDraws;
use crate::model::Dataset;
use crate::summaries::{Band, DiagnosticsTable, ShrinkageRow};

/// Columns `grid_name, median, lower, upper`.
pub fn write_band_csv<W: Write>(writer: W, grid_name: &str, band: &Band) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([grid_name, "median", "lower", "upper"])?;
    for k in 0..band.grid.len() {
        w.write_record([band.grid[k], band.median[k], band.lower[k], band.upper[k]].map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_shrinkage_csv<W: Write>(writer: W, rows: &[ShrinkageRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per parameter, then one `group:<name>` row per parameter group
/// holding the group's largest PSRF and smallest ESS. PSRF is empty for a
/// single chain.
pub fn write_diagnostics_csv<W: Write>(writer: W, table: &DiagnosticsTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["parameter", "psrf", "ess"])?;
    let fmt = |p: Option<f64>| p.map_or(String::new(), |x| format!("{x:.4}"));
    for r in &table.rows {
        w.write_record([r.parameter.clone(), fmt(r.psrf), format!("{:.1}", r.ess)])?;
    }
    for g in &table.groups {
        w.write_record([format!("group:{}", g.group), fmt(g.max_psrf), format!("{:.1}", g.min_ess)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedRow {
    pub athlete_id: String,
    /// One-based.
    pub season: usize,
    pub season_fraction: f64,
    pub age: f64,
    pub performance: f64,
    pub adjusted: f64,
}

/// Every performance moved to the level coded 1 of `confounder` using the
/// posterior mean of its effect: `y + effect * (1 - x)`. With a 25/50 m
/// pool indicator this puts short-course swims on the long-course scale.
pub fn adjusted_performances(dataset: &Dataset, draws: &PosteriorDraws, confounder: &str) -> Result<Vec<AdjustedRow>> {
    let j = dataset
        .confounder_names
        .iter()
        .position(|c| c == confounder)
        .ok_or_else(|| Error::InvalidArgument(format!("no confounder named {confounder:?}")))?;
    if draws.total_draws() == 0 {
        return Err(Error::InvalidArgument("no posterior draws".into()));
    }
    if draws.dims.num_confounders != dataset.num_confounders() {
        return Err(Error::InvalidArgument("draws were fitted with different confounders".into()));
    }
    let idx = draws.dims.layout(draws.with_latents).zeta + j;
    let effect = draws.chains.iter().flat_map(|c| c.draws.iter().map(|d| d[idx])).sum::<f64>()
        / draws.total_draws() as f64;
    Ok(dataset
        .athletes
        .iter()
        .flat_map(|a| {
            a.performances.iter().map(move |p| AdjustedRow {
                athlete_id: a.id.clone(),
                season: p.season + 1,
                season_fraction: p.season_fraction,
                age: p.age,
                performance: p.value,
                adjusted: p.value + effect * (1.0 - p.confounders[j]),
            })
        })
        .collect())
}

pub fn write_adjusted_csv<W: Write>(writer: W, rows: &[AdjustedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::ChainDraws;
    use crate::model::{Athlete, ParamState, Performance, PriorConfig, StateDims};
    use crate::summaries::{DiagnosticRow, GroupSummary};

    #[test]
    fn band_csv_layout() {
        let band = Band {
            grid: vec![0.0, 1.0],
            median: vec![0.0, 0.0],
            lower: vec![-0.5, 0.0],
            upper: vec![0.5, 0.0],
        };
        let mut out = Vec::new();
        write_band_csv(&mut out, "z", &band).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "z,median,lower,upper\n0,0,-0.5,0.5\n1,0,0,0\n");
    }

    #[test]
    fn diagnostics_csv_has_group_rows() {
        let table = DiagnosticsTable {
            rows: vec![DiagnosticRow {
                parameter: "alpha".into(),
                group: "alpha".into(),
                psrf: Some(1.01),
                ess: 812.0,
            }],
            groups: vec![GroupSummary {
                group: "alpha".into(),
                parameters: 1,
                max_psrf: Some(1.01),
                min_ess: 812.0,
            }],
        };
        let mut out = Vec::new();
        write_diagnostics_csv(&mut out, &table).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("parameter,psrf,ess\nalpha,1.0100,812.0\ngroup:alpha,1.0100,812.0"));
    }

    #[test]
    fn pool_adjustment() {
        let perf = |x: f64, v: f64| Performance {
            value: v,
            age: 20.0,
            season: 0,
            season_fraction: 0.1,
            confounders: vec![x],
        };
        let ds = Dataset::new(
            vec![Athlete {
                id: "a".into(),
                seasons: 1,
                performances: vec![perf(0.0, 50.0), perf(1.0, 51.0)],
            }],
            1.0,
            vec!["pool".into()],
        )
        .unwrap();
        let dims = StateDims::new(&ds, &PriorConfig::default());
        let mut state = ParamState::baseline(&dims);
        let mut chain = Vec::new();
        for z in [0.8, 1.2] {
            state.zeta = vec![z];
            chain.push(state.flatten(false));
        }
        let draws = PosteriorDraws {
            prior: PriorConfig::default(),
            season_length: 1.0,
            athlete_ids: vec!["a".into()],
            start_ages: vec![19.9],
            dims,
            with_latents: false,
            chains: vec![ChainDraws {
                index: 0,
                draws: chain,
                acceptance: vec![],
            }],
        };
        let rows = adjusted_performances(&ds, &draws, "pool").unwrap();
        assert!((rows[0].adjusted - 51.0).abs() < 1e-12);
        assert_eq!(rows[1].adjusted, 51.0);
        assert!(adjusted_performances(&ds, &draws, "altitude").is_err());
    }
}
