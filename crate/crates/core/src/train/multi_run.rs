use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::MetricsReport;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(values: &[f64]) -> Result<MeanStd> {
    if values.is_empty() {
        return Err(Error::InvalidInput("no values to aggregate".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(MeanStd { mean, std, n })
}

/// Mean ± std of every metric over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub seeds: Vec<u64>,
    pub runs: Vec<MetricsReport>,
    pub utt_mse: MeanStd,
    pub utt_lcc: Option<MeanStd>,
    pub utt_srcc: Option<MeanStd>,
    pub sys_mse: Option<MeanStd>,
    pub sys_lcc: Option<MeanStd>,
    pub sys_srcc: Option<MeanStd>,
}

impl AggregateReport {
    /// A metric is aggregated only when every run produced it.
    pub fn from_runs(seeds: Vec<u64>, runs: Vec<MetricsReport>) -> Result<Self> {
        let agg = |f: fn(&MetricsReport) -> Option<f64>| -> Result<Option<MeanStd>> {
            let vals: Option<Vec<f64>> = runs.iter().map(f).collect();
            vals.map(|v| mean_std(&v)).transpose()
        };
        Ok(Self {
            utt_mse: mean_std(&runs.iter().map(|r| r.utt_mse).collect::<Vec<_>>())?,
            utt_lcc: agg(|r| r.utt_lcc)?,
            utt_srcc: agg(|r| r.utt_srcc)?,
            sys_mse: agg(|r| r.sys_mse)?,
            sys_lcc: agg(|r| r.sys_lcc)?,
            sys_srcc: agg(|r| r.sys_srcc)?,
            seeds,
            runs,
        })
    }
}

/// Run `n_runs` independent experiments with seeds derived from `root_seed`
/// and aggregate their reports. Runs execute sequentially so that each one
/// has the whole thread pool.
pub fn multi_run<F>(n_runs: usize, root_seed: u64, mut run: F) -> Result<AggregateReport>
where
    F: FnMut(u64) -> Result<MetricsReport>,
{
    let seeds: Vec<u64> = (0..n_runs)
        .map(|i| derive_seed(root_seed, &format!("run/{i}")))
        .collect();
    let runs = seeds.iter().map(|&s| run(s)).collect::<Result<Vec<_>>>()?;
    AggregateReport::from_runs(seeds, runs)
}
