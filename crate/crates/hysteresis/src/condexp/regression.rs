use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::{batch_ranges, check_len, Basis, Conditioner};
use crate::error::{Error, Result};
use crate::grid::BrownianEnsemble;

/// Eigenvalues below this fraction of the largest are structural collinearity
/// and are dropped (minimum-norm solution).
const TRUNCATION: f64 = 1e-12;
/// Largest acceptable condition number over the retained eigenvalues.
const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConfig {
    pub basis: Basis,
    /// Independent batches, each fitted on its own paths only.
    pub batches: usize,
    /// Fit on one half of each batch and evaluate on the other, then swap.
    pub cross_fit: bool,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            basis: Basis::standard(),
            batches: 20,
            cross_fit: true,
        }
    }
}

/// Least-squares projection onto a polynomial basis of adapted features.
#[derive(Debug, Clone)]
pub struct RegressionConditioner {
    config: RegressionConfig,
    paths: usize,
    /// Standardised features per prepared node, row-major `paths × features`.
    features: BTreeMap<usize, Vec<f64>>,
}

/// Predictions and diagnostics of one node fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub predictions: Vec<f64>,
    /// Out-of-sample `R²` when cross-fitting.
    pub r2: f64,
    /// Worst retained condition number across the sub-fits.
    pub condition: f64,
    /// Coefficients of every sub-fit, in batch order.
    pub coefficients: Vec<Vec<f64>>,
}

impl RegressionConditioner {
    /// Prepares features at `nodes` only.
    pub fn new(
        ensemble: &BrownianEnsemble,
        nodes: &[usize],
        config: RegressionConfig,
    ) -> Result<Self> {
        let paths = ensemble.len();
        let p = config.basis.dimension();
        let smallest = batch_ranges(paths, config.batches)
            .iter()
            .map(|r| r.len())
            .min()
            .unwrap_or(0);
        let fit_size = if config.cross_fit {
            smallest / 2
        } else {
            smallest
        };
        if fit_size < 10 * p {
            return Err(Error::InsufficientPaths {
                paths: fit_size,
                dimension: p,
            });
        }
        let grid = *ensemble.grid();
        for &n in nodes {
            grid.check_node(n)?;
        }
        let nf = config.basis.features().len();
        let raw: Vec<Vec<f64>> = (0..paths)
            .into_par_iter()
            .map(|j| {
                let w = ensemble.path(j);
                let along: Vec<Vec<f64>> = config
                    .basis
                    .features()
                    .iter()
                    .map(|f| f.along(&grid, w))
                    .collect();
                nodes
                    .iter()
                    .flat_map(|&n| along.iter().map(move |a| a[n]))
                    .collect()
            })
            .collect();
        let mut features = BTreeMap::new();
        for (k, &n) in nodes.iter().enumerate() {
            let mut block = vec![0.0; paths * nf];
            for f in 0..nf {
                let col: Vec<f64> = raw.iter().map(|r| r[k * nf + f]).collect();
                let mean = col.iter().sum::<f64>() / paths as f64;
                let sd =
                    (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / paths as f64).sqrt();
                let scale = if sd > 1e-300 { 1.0 / sd } else { 0.0 };
                for (j, x) in col.iter().enumerate() {
                    block[j * nf + f] = (x - mean) * scale;
                }
            }
            features.insert(n, block);
        }
        Ok(Self {
            config,
            paths,
            features,
        })
    }

    pub fn config(&self) -> &RegressionConfig {
        &self.config
    }

    pub fn prepared_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.features.keys().copied()
    }

    pub fn fit(&self, node: usize, targets: &[f64]) -> Result<RegressionFit> {
        check_len(self.paths, targets)?;
        let x = self
            .features
            .get(&node)
            .ok_or(Error::NodeNotPrepared(node))?;
        let first = targets[0];
        if targets.iter().all(|t| *t == first) {
            return Ok(RegressionFit {
                predictions: targets.to_vec(),
                r2: 1.0,
                condition: 1.0,
                coefficients: Vec::new(),
            });
        }
        let design = Design {
            basis: &self.config.basis,
            x,
            nf: self.config.basis.features().len(),
        };
        let pieces: Vec<(Range<usize>, Range<usize>)> =
            batch_ranges(self.paths, self.config.batches)
                .into_iter()
                .flat_map(|b| {
                    if self.config.cross_fit {
                        let mid = b.start + b.len() / 2;
                        vec![(b.start..mid, mid..b.end), (mid..b.end, b.start..mid)]
                    } else {
                        vec![(b.clone(), b)]
                    }
                })
                .collect();
        let fits = pieces
            .par_iter()
            .map(|(fit, eval)| {
                let (beta, cond) = design.solve(fit.clone(), targets, node)?;
                let pred = design.predict(eval.clone(), &beta);
                Ok((beta, cond, pred))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut predictions = vec![0.0; self.paths];
        let mut condition: f64 = 1.0;
        let mut coefficients = Vec::with_capacity(fits.len());
        for ((_, eval), (beta, cond, pred)) in pieces.iter().zip(fits) {
            predictions[eval.clone()].copy_from_slice(&pred);
            condition = condition.max(cond);
            coefficients.push(beta.iter().copied().collect());
        }
        let mean = targets.iter().sum::<f64>() / self.paths as f64;
        let ss_tot: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
        let ss_res: f64 = targets
            .iter()
            .zip(&predictions)
            .map(|(t, p)| (t - p).powi(2))
            .sum();
        Ok(RegressionFit {
            predictions,
            r2: 1.0 - ss_res / ss_tot,
            condition,
            coefficients,
        })
    }
}

struct Design<'a> {
    basis: &'a Basis,
    x: &'a [f64],
    nf: usize,
}

impl Design<'_> {
    fn matrix(&self, rows: Range<usize>) -> DMatrix<f64> {
        let p = self.basis.dimension();
        let mut m = DMatrix::zeros(rows.len(), p);
        let mut buf = vec![0.0; p];
        for (r, j) in rows.enumerate() {
            self.basis
                .row(&self.x[j * self.nf..(j + 1) * self.nf], &mut buf);
            for (c, v) in buf.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        m
    }

    fn solve(
        &self,
        rows: Range<usize>,
        targets: &[f64],
        node: usize,
    ) -> Result<(DVector<f64>, f64)> {
        let a = self.matrix(rows.clone());
        let y = DVector::from_column_slice(&targets[rows]);
        let gram = a.tr_mul(&a);
        let rhs = a.tr_mul(&y);
        let eig = SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut beta = DVector::zeros(rhs.len());
        let mut lmin = lmax;
        for (k, l) in eig.eigenvalues.iter().enumerate() {
            if *l > TRUNCATION * lmax {
                let v = eig.eigenvectors.column(k);
                beta += v * (v.dot(&rhs) / l);
                lmin = lmin.min(*l);
            }
        }
        let condition = lmax / lmin;
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned { node, condition });
        }
        Ok((beta, condition))
    }

    fn predict(&self, rows: Range<usize>, beta: &DVector<f64>) -> Vec<f64> {
        (self.matrix(rows) * beta).iter().copied().collect()
    }
}

impl Conditioner for RegressionConditioner {
    fn paths(&self) -> usize {
        self.paths
    }

    fn condition(&self, node: usize, targets: &[f64]) -> Result<Vec<f64>> {
        Ok(self.fit(node, targets)?.predictions)
    }

    fn batches(&self) -> Vec<Range<usize>> {
        batch_ranges(self.paths, self.config.batches)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condexp::Feature;
    use crate::grid::TimeGrid;
    use crate::stats::mean_se;

    fn ensemble(m: usize, n: usize, seed: u64) -> BrownianEnsemble {
        BrownianEnsemble::sample(TimeGrid::new(1.0, n).unwrap(), m, seed).unwrap()
    }

    fn small() -> RegressionConfig {
        RegressionConfig {
            batches: 4,
            ..Default::default()
        }
    }

    #[test]
    fn terminal_value_projects_to_current_value() {
        let e = ensemble(20_000, 16, 3);
        let cfg = RegressionConfig {
            basis: Basis::new(vec![Feature::W], 1),
            ..Default::default()
        };
        let r = RegressionConditioner::new(&e, &[8], cfg).unwrap();
        let targets: Vec<f64> = (0..e.len()).map(|j| e.path(j)[16]).collect();
        let fit = r.fit(8, &targets).unwrap();
        // slope per sub-fit, one estimate per batch half
        let slopes: Vec<f64> = fit.coefficients.iter().map(|b| b[1]).collect();
        let sd_w = (0.5_f64).sqrt();
        let s = mean_se(&slopes.iter().map(|b| b / sd_w).collect::<Vec<_>>());
        assert!(s.within(1.0, 3.0, 0.0), "{s:?}");
    }

    #[test]
    fn future_integral_projects_to_remaining_time_times_state() {
        let e = ensemble(20_000, 32, 11);
        let cfg = RegressionConfig {
            basis: Basis::new(vec![Feature::W], 1),
            ..Default::default()
        };
        let i = 16;
        let r = RegressionConditioner::new(&e, &[i], cfg).unwrap();
        let dt = e.grid().dt();
        let targets: Vec<f64> = (0..e.len())
            .map(|j| e.path(j)[i..32].iter().sum::<f64>() * dt)
            .collect();
        let pred = r.condition(i, &targets).unwrap();
        let err: Vec<f64> = (0..e.len()).map(|j| pred[j] - 0.5 * e.path(j)[i]).collect();
        let rms = crate::stats::rms(&err);
        // coefficient noise per half-batch fit is about 0.013
        assert!(rms < 0.03, "{rms}");
    }

    #[test]
    fn constant_target_is_exact() {
        let e = ensemble(4000, 8, 1);
        let r = RegressionConditioner::new(&e, &[0, 4], small()).unwrap();
        assert!(r
            .condition(4, &vec![1.0; 4000])
            .unwrap()
            .iter()
            .all(|v| *v == 1.0));
    }

    #[test]
    fn degenerate_first_nodes_fall_back_to_constant() {
        let e = ensemble(4000, 8, 2);
        let r = RegressionConditioner::new(&e, &[0, 1], small()).unwrap();
        let targets: Vec<f64> = (0..4000).map(|j| e.path(j)[8]).collect();
        let at0 = r.fit(0, &targets).unwrap();
        assert!(at0.condition < 10.0);
        let at1 = r.fit(1, &targets).unwrap();
        assert!(at1.r2 > 0.0);
    }

    #[test]
    fn adapted_target_is_reproduced() {
        let e = ensemble(4000, 8, 4);
        let r = RegressionConditioner::new(&e, &[5], small()).unwrap();
        let targets: Vec<f64> = (0..4000)
            .map(|j| e.path(j)[5].powi(2) - e.path(j)[3])
            .collect();
        let pred = r.condition(5, &targets).unwrap();
        let worst = targets
            .iter()
            .zip(&pred)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst > 0.0);
        let exact = RegressionConditioner::new(
            &e,
            &[5],
            RegressionConfig {
                basis: Basis::new(vec![Feature::W], 2),
                ..small()
            },
        )
        .unwrap();
        let w2: Vec<f64> = (0..4000).map(|j| e.path(j)[5].powi(2)).collect();
        let p2 = exact.condition(5, &w2).unwrap();
        assert!(w2.iter().zip(&p2).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn too_few_paths_rejected() {
        let e = ensemble(500, 8, 5);
        let err = RegressionConditioner::new(&e, &[4], RegressionConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientPaths { .. }));
    }
}
