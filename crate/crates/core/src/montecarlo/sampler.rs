use rand::Rng;

use crate::ensembles::{cumulative, pick, Ensemble};
use crate::error::{Error, Result};
use crate::geometry::{angle_of, apply_matrix, canonical_sign, Direction, NormKind, Space};
use crate::par::{map_chunks, Execution};
use crate::spectral::{Proposal, TiltedKernel};

use super::rng::stream_rng;
use super::{SampleSet, WeightedSampleSet, CHUNK, MAX_LOG_WEIGHT};

/// `R` independent paths of length `n` from `x0` under the ensemble's law.
pub fn simulate(ens: &Ensemble, x0: &Direction, n: usize, r: usize, seed: u64) -> Result<SampleSet> {
    simulate_with(Execution::default(), ens, x0, n, r, seed)
}

pub fn simulate_with(
    exec: Execution,
    ens: &Ensemble,
    x0: &Direction,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<SampleSet> {
    check_start(ens, x0)?;
    if n == 0 || r == 0 {
        return Err(Error::invalid("simulate needs n >= 1 and R >= 1"));
    }
    let walker = Walker::new(ens);
    let d = ens.dim();
    let chunks = map_chunks(exec, r, CHUNK, |range| {
        let mut logs = Vec::with_capacity(range.len());
        let mut ends = Vec::with_capacity(range.len() * d);
        let mut x = vec![0.0; d];
        let mut buf = vec![0.0; d];
        for k in range {
            let mut rng = stream_rng(seed, k as u64);
            x.copy_from_slice(x0.coords());
            logs.push(walker.run(&mut rng, &mut x, &mut buf, n));
            if ens.space() == Space::Projective {
                canonical_sign(&mut x);
            }
            ends.extend_from_slice(&x);
        }
        (logs, ends)
    });
    let mut log_norms = Vec::with_capacity(r);
    let mut endpoints = Vec::with_capacity(r * d);
    for (l, e) in chunks {
        log_norms.extend(l);
        endpoints.extend(e);
    }
    Ok(SampleSet { n, x0: x0.clone(), seed, log_norms, endpoints })
}

fn check_start(ens: &Ensemble, x0: &Direction) -> Result<()> {
    if x0.dim() != ens.dim() || x0.space() != ens.space() || x0.norm() != ens.norm() {
        return Err(Error::invalid("start point does not match the ensemble's dimension, space or norm"));
    }
    Ok(())
}

/// Untilted path stepper with fast paths for conformal laws and d = 2.
struct Walker<'a> {
    ens: &'a Ensemble,
    cum: Vec<f64>,
    log_scales: Option<Vec<f64>>,
    planar: Option<Vec<[f64; 4]>>,
    norm: NormKind,
}

impl<'a> Walker<'a> {
    fn new(ens: &'a Ensemble) -> Self {
        let planar = (ens.dim() == 2).then(|| {
            ens.atoms().iter().map(|a| [a.matrix[0], a.matrix[1], a.matrix[2], a.matrix[3]]).collect()
        });
        Walker {
            ens,
            cum: cumulative(ens),
            log_scales: ens.conformal_scales().map(|c| c.iter().map(|c| c.ln()).collect()),
            planar,
            norm: ens.norm(),
        }
    }

    /// Runs `n` steps from `x` in place and returns `log|G_n x|`.
    fn run<R: Rng>(&self, rng: &mut R, x: &mut [f64], buf: &mut [f64], n: usize) -> f64 {
        let mut log = 0.0;
        if let Some(ls) = &self.log_scales {
            for _ in 0..n {
                log += ls[pick(&self.cum, rng.gen())];
            }
            return log;
        }
        if let Some(mats) = &self.planar {
            let (mut a, mut b) = (x[0], x[1]);
            for _ in 0..n {
                let g = &mats[pick(&self.cum, rng.gen())];
                let (u, v) = (g[0] * a + g[1] * b, g[2] * a + g[3] * b);
                let len = match self.norm {
                    NormKind::Euclidean => (u * u + v * v).sqrt(),
                    NormKind::L1 => u.abs() + v.abs(),
                };
                log += len.ln();
                a = u / len;
                b = v / len;
            }
            x[0] = a;
            x[1] = b;
            return log;
        }
        for _ in 0..n {
            let g = &self.ens.atoms()[pick(&self.cum, rng.gen())].matrix;
            let len = apply_matrix(g, x, buf, self.norm);
            log += len.ln();
            for (xi, bi) in x.iter_mut().zip(buf.iter()) {
                *xi = bi / len;
            }
        }
        log
    }
}

/// Tilted paths from `x0` snapped to the nearest grid node.
pub fn tilted_simulate(
    ens: &Ensemble,
    kernel: &TiltedKernel,
    x0: &Direction,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<WeightedSampleSet> {
    tilted_simulate_with(Execution::default(), ens, kernel, Some(x0), n, r, seed)
}

/// Tilted paths with start nodes drawn from the tilted stationary weights.
pub fn tilted_simulate_stationary(
    ens: &Ensemble,
    kernel: &TiltedKernel,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<WeightedSampleSet> {
    tilted_simulate_with(Execution::default(), ens, kernel, None, n, r, seed)
}

/// Tilted simulation. Each step draws atom `i` with the proposal weight
/// `ŵᵢ(x)` and multiplies the path weight by `pᵢ/ŵᵢ(x)`; the product is the
/// exact likelihood ratio of the path under the original law.
pub fn tilted_simulate_with(
    exec: Execution,
    ens: &Ensemble,
    kernel: &TiltedKernel,
    x0: Option<&Direction>,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<WeightedSampleSet> {
    if n == 0 || r == 0 {
        return Err(Error::invalid("simulate needs n >= 1 and R >= 1"));
    }
    let probs: Vec<f64> = ens.atoms().iter().map(|a| a.prob).collect();
    if probs != kernel.probs() {
        return Err(Error::invalid("kernel was built for a different ensemble"));
    }
    let grid = *kernel.grid();
    let snapped = match x0 {
        Some(x) => {
            check_start(ens, x)?;
            Some(grid.nearest(angle_of(x.coords(), ens.space())))
        }
        None => None,
    };
    let stationary_cum = {
        let mut acc = 0.0;
        let mut c: Vec<f64> = kernel
            .stationary_weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(l) = c.last_mut() {
            *l = 1.0;
        }
        c
    };
    let uniform = kernel.uniform_weights().map(|w| {
        let ls: Vec<f64> = ens.conformal_scales().unwrap().iter().map(|c| c.ln()).collect();
        let ratios: Vec<f64> = probs.iter().zip(w).map(|(p, w)| (p / w).ln()).collect();
        let mut acc = 0.0;
        let mut cum: Vec<f64> = w
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        *cum.last_mut().unwrap() = 1.0;
        (cum, ls, ratios)
    });

    type PathOut = (f64, [f64; 2], f64, usize);
    let run_path = |k: usize, prop: &mut Proposal| -> Result<Option<PathOut>> {
        let mut rng = stream_rng(seed, k as u64);
        let start = match snapped {
            Some(j) => j,
            None => pick(&stationary_cum, rng.gen()),
        };
        let mut x = grid.point(start);
        let mut log = 0.0;
        let mut log_w = 0.0;
        if let Some((cum, ls, ratios)) = &uniform {
            for _ in 0..n {
                let i = pick(cum, rng.gen());
                log += ls[i];
                log_w += ratios[i];
            }
        } else {
            for _ in 0..n {
                kernel.proposal_at(&x, prop)?;
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut i = prop.weights.len() - 1;
                for (idx, w) in prop.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        i = idx;
                        break;
                    }
                }
                log += prop.log_gains[i];
                log_w += (probs[i] / prop.weights[i]).ln();
                x = prop.images[i];
            }
        }
        if log_w > MAX_LOG_WEIGHT {
            return Ok(None);
        }
        if ens.space() == Space::Projective {
            canonical_sign(&mut x);
        }
        Ok(Some((log, x, log_w, start)))
    };

    let chunks = map_chunks(exec, r, CHUNK, |range| -> Result<Vec<Option<PathOut>>> {
        let mut prop = Proposal::default();
        range.map(|k| run_path(k, &mut prop)).collect()
    });
    let mut log_norms = Vec::with_capacity(r);
    let mut endpoints = Vec::with_capacity(2 * r);
    let mut weights = Vec::with_capacity(r);
    let mut starts = Vec::new();
    let mut rejected = 0;
    for chunk in chunks {
        for path in chunk? {
            match path {
                Some((log, x, lw, start)) => {
                    log_norms.push(log);
                    endpoints.extend_from_slice(&x);
                    weights.push(lw.exp());
                    if snapped.is_none() {
                        starts.push(start);
                    }
                }
                None => rejected += 1,
            }
        }
    }
    if weights.is_empty() {
        return Err(Error::AllWeightsRejected);
    }
    let start_dir = grid.direction(snapped.unwrap_or(0));
    Ok(WeightedSampleSet {
        samples: SampleSet { n, x0: start_dir, seed, log_norms, endpoints },
        weights,
        s: kernel.s(),
        attempted: r,
        rejected,
        snapped_node: snapped,
        stationary_starts: snapped.is_none().then_some(starts),
    })
}
