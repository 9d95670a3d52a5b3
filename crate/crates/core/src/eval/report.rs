use serde::{Deserialize, Serialize};

use super::{lcc, mse, srcc, system_aggregate, EvalPair};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Network};

/// Per-utterance model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub utterance_id: String,
    pub system_id: Option<String>,
    pub mu: f64,
    pub sigma2: f64,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub utt_mse: f64,
    pub utt_lcc: Option<f64>,
    pub utt_srcc: Option<f64>,
    pub sys_mse: Option<f64>,
    pub sys_lcc: Option<f64>,
    pub sys_srcc: Option<f64>,
    pub n_utterances: usize,
    pub n_systems: usize,
    /// Metrics that could not be computed, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

fn correlation(
    name: &str,
    f: fn(&[EvalPair]) -> Result<f64>,
    pairs: &[EvalPair],
    notes: &mut Vec<String>,
) -> Result<Option<f64>> {
    match f(pairs) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Degenerate(why)) => {
            notes.push(format!("{name}: {why}"));
            Ok(None)
        }
        Err(Error::InvalidInput(why)) if pairs.len() < 2 => {
            notes.push(format!("{name}: {why}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

impl MetricsReport {
    /// System-level metrics are present only when every pair has a system id.
    pub fn from_pairs(pairs: &[EvalPair]) -> Result<Self> {
        let mut notes = Vec::new();
        let utt_mse = mse(pairs)?;
        let utt_lcc = correlation("utt_lcc", lcc, pairs, &mut notes)?;
        let utt_srcc = correlation("utt_srcc", srcc, pairs, &mut notes)?;

        let (mut sys_mse, mut sys_lcc, mut sys_srcc, mut n_systems) = (None, None, None, 0);
        if pairs.iter().all(|p| p.system_id.is_some()) {
            let sys = system_aggregate(pairs)?;
            n_systems = sys.len();
            sys_mse = Some(mse(&sys)?);
            sys_lcc = correlation("sys_lcc", lcc, &sys, &mut notes)?;
            sys_srcc = correlation("sys_srcc", srcc, &sys, &mut notes)?;
        }
        Ok(Self {
            utt_mse,
            utt_lcc,
            utt_srcc,
            sys_mse,
            sys_lcc,
            sys_srcc,
            n_utterances: pairs.len(),
            n_systems,
            degenerate: notes,
        })
    }
}

/// Plain-text table with one header row and one value row.
pub fn format_table(report: &MetricsReport) -> String {
    let cols = [
        ("UTT_MSE", Some(report.utt_mse)),
        ("UTT_LCC", report.utt_lcc),
        ("UTT_SRCC", report.utt_srcc),
        ("SYS_MSE", report.sys_mse),
        ("SYS_LCC", report.sys_lcc),
        ("SYS_SRCC", report.sys_srcc),
    ];
    let cells: Vec<(String, String)> = cols
        .iter()
        .map(|(h, v)| (h.to_string(), v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))))
        .collect();
    let widths: Vec<usize> = cells.iter().map(|(h, v)| h.len().max(v.len())).collect();
    let row = |pick: fn(&(String, String)) -> &String| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{:>w$}", pick(c), w = *w))
            .collect::<Vec<_>>()
            .join("  ")
    };
    format!("{}\n{}\n", row(|c| &c.0), row(|c| &c.1))
}

/// Model outputs for every sample, sorted by utterance id.
pub fn predict_dataset(params: &ModelParams, dataset: &Dataset) -> Result<Vec<Prediction>> {
    let net = Network::new(params)?;
    let outputs = net.predict(&dataset.inputs())?;
    let mut preds: Vec<Prediction> = dataset
        .samples
        .iter()
        .zip(outputs)
        .map(|(s, o)| Prediction {
            utterance_id: s.utterance_id.clone(),
            system_id: s.system_id.clone(),
            mu: o.mu,
            sigma2: o.sigma2,
            label: s.label,
        })
        .collect();
    preds.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    Ok(preds)
}

/// Score the predicted means against the dataset labels.
pub fn evaluate(params: &ModelParams, dataset: &Dataset) -> Result<(MetricsReport, Vec<Prediction>)> {
    let preds = predict_dataset(params, dataset)?;
    let pairs: Vec<EvalPair> = preds
        .iter()
        .map(|p| EvalPair::new(p.utterance_id.clone(), p.system_id.as_deref(), p.mu, p.label))
        .collect();
    Ok((MetricsReport::from_pairs(&pairs)?, preds))
}
