//! Accuracy, confidence intervals, ROC AUC and histogram output.

use std::io::Write;

use crate::error::{Error, Result};

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Mean and 95% normal-approximation half-width `1.96 s / √n`, with `s` the
/// sample standard deviation. A single value has half-width 0.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

/// Probability that an in-distribution score beats an outlier score, ties
/// counting one half (the normalized Mann–Whitney U statistic).
pub fn auc_roc(in_scores: &[f64], out_scores: &[f64]) -> Result<f64> {
    if in_scores.is_empty() || out_scores.is_empty() {
        return Err(Error::InvalidParameter("AUC needs two nonempty score lists".into()));
    }
    let mut all: Vec<(f64, bool)> = in_scores
        .iter()
        .map(|&s| (s, true))
        .chain(out_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // rank sum of the in-distribution group, ties sharing their mean rank
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0.total_cmp(&all[i].0).is_eq() {
            j += 1;
        }
        let mean_rank = (i + j + 2) as f64 / 2.0;
        let n_in = all[i..=j].iter().filter(|x| x.1).count();
        rank_sum += mean_rank * n_in as f64;
        i = j + 1;
    }
    let (n1, n0) = (in_scores.len() as f64, out_scores.len() as f64);
    let u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    Ok(u / (n1 * n0))
}

/// Writes normalized histograms of several score groups on shared bin edges
/// as tab-separated `bin_center` plus one density column per group.
/// Non-finite scores are dropped and empty groups omitted, both with a
/// warning.
pub fn emit_histograms(groups: &[(String, Vec<f64>)], bins: usize, out: &mut impl Write) -> Result<()> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be >= 1".into()));
    }
    let mut kept: Vec<(&str, Vec<f64>)> = Vec::new();
    for (name, scores) in groups {
        let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
        if finite.len() < scores.len() {
            log::warn!("group {name}: dropped {} non-finite scores", scores.len() - finite.len());
        }
        if finite.is_empty() {
            log::warn!("group {name} is empty, omitted");
            continue;
        }
        kept.push((name, finite));
    }
    let io = |e| Error::io("<histogram>", e);
    write!(out, "bin_center").map_err(io)?;
    for (name, _) in &kept {
        write!(out, "\t{name}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    if kept.is_empty() {
        return Ok(());
    }
    let lo = kept.iter().flat_map(|g| g.1.iter()).copied().fold(f64::INFINITY, f64::min);
    let hi = kept.iter().flat_map(|g| g.1.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let densities: Vec<Vec<f64>> = kept
        .iter()
        .map(|(_, s)| {
            let mut counts = vec![0usize; bins];
            for &v in s {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
            counts.iter().map(|&c| c as f64 / (s.len() as f64 * width)).collect()
        })
        .collect();
    for b in 0..bins {
        write!(out, "{}", lo + (b as f64 + 0.5) * width).map_err(io)?;
        for d in &densities {
            write!(out, "\t{}", d[b]).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&[-1.0, -2.0], &[-5.0, -6.0]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[1.0, 2.0, 2.0], &[1.0, 2.0, 2.0]).unwrap(), 0.5);
        // pairs: (1,2) loss, (1,4) loss, (3,2) win, (3,4) loss
        assert_eq!(auc_roc(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.25);
        assert!(auc_roc(&[], &[1.0]).is_err());
    }

    #[test]
    fn ci_formula() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - 1.96 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_ci(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn single_bin_density() {
        let mut buf = Vec::new();
        emit_histograms(&[("a".into(), vec![1.0, 3.0])], 1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
        assert_eq!(row, vec!["2", "0.5"]);
    }

    #[test]
    fn empty_group_omitted() {
        let mut buf = Vec::new();
        let groups = vec![("in".to_string(), vec![0.0, 1.0]), ("none".to_string(), vec![]), ("out".to_string(), vec![2.0])];
        emit_histograms(&groups, 4, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "bin_center\tin\tout");
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().skip(1).all(|l| l.split('\t').count() == 3));
    }
}
