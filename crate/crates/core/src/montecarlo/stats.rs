use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::pairwise_sum;

use super::SampleSet;

/// Mean of `values` padded with zeros up to `total` entries, with its
/// delete-one jackknife standard error. For a plain mean the jackknife
/// reduces to `sd / √total`, which is what is computed.
pub fn jackknife_mean(values: &[f64], total: usize) -> (f64, f64) {
    assert!(total >= values.len() && total > 0);
    let r = total as f64;
    let mean = pairwise_sum(values) / r;
    if total < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let pad = (total - values.len()) as f64 * mean * mean;
    let var = (pairwise_sum(&sq) + pad) / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// `m_k = (1/n)·mean((log|G_n x| − n·center)^k)`, `k = 1, 2, 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCumulants {
    pub m: [f64; 3],
    pub stderr: [f64; 3],
}

pub fn sample_cumulants(set: &SampleSet, center: f64) -> Result<SampleCumulants> {
    if set.len() < 100 {
        return Err(Error::invalid("sample cumulants need at least 100 paths"));
    }
    let n = set.n as f64;
    let dev: Vec<f64> = set.log_norms.iter().map(|l| l - n * center).collect();
    let mut out = SampleCumulants { m: [0.0; 3], stderr: [0.0; 3] };
    for k in 0..3 {
        let v: Vec<f64> = dev.iter().map(|d| d.powi(k as i32 + 1) / n).collect();
        let (m, se) = jackknife_mean(&v, v.len());
        out.m[k] = m;
        out.stderr[k] = se;
    }
    Ok(out)
}
