//! Utterance- and system-level MSE, Pearson (LCC) and Spearman (SRCC).

mod report;

pub use report::{evaluate, format_table, predict_dataset, MetricsReport, Prediction};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub utterance_id: String,
    pub system_id: Option<String>,
    pub predicted: f64,
    pub label: f64,
}

impl EvalPair {
    pub fn new(utterance_id: impl Into<String>, system_id: Option<&str>, predicted: f64, label: f64) -> Self {
        Self {
            utterance_id: utterance_id.into(),
            system_id: system_id.map(str::to_string),
            predicted,
            label,
        }
    }
}

fn check_pairs(pairs: &[EvalPair], min: usize) -> Result<()> {
    if pairs.len() < min {
        return Err(Error::InvalidInput(format!(
            "need at least {min} pairs, got {}",
            pairs.len()
        )));
    }
    if let Some(p) = pairs.iter().find(|p| !p.predicted.is_finite() || !p.label.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value for `{}`",
            p.utterance_id
        )));
    }
    Ok(())
}

pub fn mse(pairs: &[EvalPair]) -> Result<f64> {
    check_pairs(pairs, 1)?;
    let (x, y) = sides(pairs);
    Ok(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / pairs.len() as f64)
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        let side = if sxx == 0.0 { "predictions" } else { "labels" };
        return Err(Error::Degenerate(format!("{side} are constant")));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn lcc(pairs: &[EvalPair]) -> Result<f64> {
    check_pairs(pairs, 2)?;
    let (x, y) = sides(pairs);
    pearson(&x, &y)
}

pub fn srcc(pairs: &[EvalPair]) -> Result<f64> {
    check_pairs(pairs, 2)?;
    let (x, y) = sides(pairs);
    pearson(&average_ranks(&x), &average_ranks(&y))
}

/// Canonical order (by utterance id) so that every metric is exactly
/// invariant to the order pairs arrive in.
fn canonical(pairs: &[EvalPair]) -> Vec<&EvalPair> {
    let mut sorted: Vec<&EvalPair> = pairs.iter().collect();
    sorted.sort_by(|a, b| {
        a.utterance_id
            .cmp(&b.utterance_id)
            .then(a.predicted.total_cmp(&b.predicted))
            .then(a.label.total_cmp(&b.label))
    });
    sorted
}

fn sides(pairs: &[EvalPair]) -> (Vec<f64>, Vec<f64>) {
    canonical(pairs).iter().map(|p| (p.predicted, p.label)).unzip()
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// One pair per system holding the mean prediction and mean label, ordered
/// by system id.
pub fn system_aggregate(pairs: &[EvalPair]) -> Result<Vec<EvalPair>> {
    let mut groups: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for p in canonical(pairs) {
        let sys = p
            .system_id
            .as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("utterance `{}` has no system_id", p.utterance_id)))?;
        let g = groups.entry(sys).or_default();
        g.0 += p.predicted;
        g.1 += p.label;
        g.2 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|(sys, (pred, label, n))| EvalPair::new(sys, Some(sys), pred / n as f64, label / n as f64))
        .collect())
}
