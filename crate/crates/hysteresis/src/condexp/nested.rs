use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::grid::TimeGrid;
use crate::stats::{mean_se, MeanSe};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedConfig {
    pub inner: usize,
    pub seed: u64,
}

/// Generator for inner continuation `k` of outer path `path` at `node`.
pub fn inner_rng(seed: u64, path: u64, node: u64, k: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path.to_le_bytes());
    key[16..24].copy_from_slice(&node.to_le_bytes());
    key[24] = 0x6e;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(k);
    rng
}

/// Averages `future` over continuations of `prefix` (nodes `0..=i`) by fresh
/// Brownian increments on the same grid.
pub fn nested_mc(
    future: impl Fn(&[f64]) -> f64 + Sync,
    grid: &TimeGrid,
    prefix: &[f64],
    path_index: u64,
    cfg: NestedConfig,
) -> MeanSe {
    let i = prefix.len() - 1;
    let sd = grid.dt().sqrt();
    let values: Vec<f64> = (0..cfg.inner)
        .into_par_iter()
        .map(|k| {
            let mut rng = inner_rng(cfg.seed, path_index, i as u64, k as u64);
            let mut path = Vec::with_capacity(grid.len());
            path.extend_from_slice(prefix);
            for _ in i..grid.steps() {
                let z: f64 = StandardNormal.sample(&mut rng);
                path.push(path[path.len() - 1] + sd * z);
            }
            future(&path)
        })
        .collect();
    mean_se(&values)
}

/// Monte Carlo estimate of `∫_0^τ P(max_{[0,σ]} B < gap) dσ`.
///
/// Survival between inner nodes uses the Brownian-bridge crossing probability
/// `exp(-2 (gap - x)(gap - y) / h)`, so each node carries the exact
/// continuous-time survival given the sampled values; the time integral is a
/// trapezoid rule on a grid refined geometrically near `σ = 0`.
pub fn tipping_nested_mc(
    gap: f64,
    tau: f64,
    steps: usize,
    path_index: u64,
    node: u64,
    cfg: NestedConfig,
) -> MeanSe {
    if gap <= 0.0 || tau <= 0.0 {
        return MeanSe { mean: 0.0, se: 0.0 };
    }
    let times = inner_times(tau, steps.max(1));
    let values: Vec<f64> = (0..cfg.inner)
        .into_par_iter()
        .map(|k| {
            let mut rng = inner_rng(cfg.seed, path_index, node, k as u64);
            let (mut x, mut alive, mut integral) = (0.0, 1.0, 0.0);
            for s in times.windows(2) {
                let h = s[1] - s[0];
                let z: f64 = StandardNormal.sample(&mut rng);
                let y = x + h.sqrt() * z;
                let next = if y >= gap {
                    0.0
                } else {
                    alive * (1.0 - (-2.0 * (gap - x) * (gap - y) / h).exp())
                };
                integral += 0.5 * (alive + next) * h;
                if next == 0.0 {
                    break;
                }
                alive = next;
                x = y;
            }
            integral
        })
        .collect();
    mean_se(&values)
}

fn inner_times(tau: f64, steps: usize) -> Vec<f64> {
    let h = tau / steps as f64;
    let mut times = vec![0.0];
    let mut s = h * 1e-9;
    while s < h {
        times.push(s);
        s *= 1.5;
    }
    let head = *times.last().unwrap_or(&0.0);
    let rest = ((tau - head) / h).ceil().max(1.0) as usize;
    let step = (tau - head) / rest as f64;
    times.extend((1..=rest).map(|k| head + step * k as f64));
    times
}
