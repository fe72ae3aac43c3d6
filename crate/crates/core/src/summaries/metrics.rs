use crate::error::{invalid, Error, Result};

/// Integrated squared error `int (estimate - truth)^2` over `grid`, by the
/// trapezoid rule. No square root is taken.
pub fn rmise(grid: &[f64], estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if grid.len() != estimate.len() || grid.len() != truth.len() {
        return Err(invalid(format!(
            "grid mismatch: {} grid points, {} estimates, {} truths",
            grid.len(),
            estimate.len(),
            truth.len()
        )));
    }
    if grid.len() < 2 {
        return Err(invalid("integration needs at least two grid points"));
    }
    let sq: Vec<f64> = estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).collect();
    Ok(grid
        .windows(2)
        .zip(sq.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum())
}

/// Mean squared error over matched knot values.
pub fn armse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(invalid(format!(
            "{} estimates for {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    if estimates.is_empty() {
        return Err(invalid("no knots to compare"));
    }
    Ok(estimates.iter().zip(truths).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / estimates.len() as f64)
}

/// Ranks starting at 1 with ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("spearman needs two equal-length vectors of length >= 2"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("spearman input contains non-finite values"));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn rmise_examples() {
        let g = grid(201);
        let truth: Vec<f64> = g.iter().map(|z| z.sin()).collect();
        assert_eq!(rmise(&g, &truth, &truth).unwrap(), 0.0);
        let off: Vec<f64> = truth.iter().map(|t| t + 0.3).collect();
        assert!((rmise(&g, &off, &truth).unwrap() - 0.09).abs() < 1e-12);
        let lin: Vec<f64> = truth.iter().zip(&g).map(|(t, z)| t + z).collect();
        assert!((rmise(&g, &lin, &truth).unwrap() - 1.0 / 3.0).abs() < 1e-4);
        assert!(rmise(&g, &truth[1..], &truth).is_err());
    }

    #[test]
    fn armse_examples() {
        assert_eq!(armse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(armse(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(armse(&[2.0, -2.0], &[0.0, 0.0]).unwrap(), 4.0);
        assert!(armse(&[1.0], &[]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(spearman(&a, &[1.0; 4]), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn ties_share_average_rank() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn spearman_bounded(xs in prop::collection::vec(-10.0f64..10.0, 3..30), seed in 0u64..1000) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| ((i as u64 * 7919 + seed) % 13) as f64 - x).collect();
            if let Ok(r) = spearman(&xs, &ys) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn metrics_nonnegative(e in prop::collection::vec(-5.0f64..5.0, 2..50)) {
            let t = vec![0.0; e.len()];
            let g = grid(e.len());
            prop_assert!(rmise(&g, &e, &t).unwrap() >= 0.0);
            prop_assert!(armse(&e, &t).unwrap() >= 0.0);
        }
    }
}
