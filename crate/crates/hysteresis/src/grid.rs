//! Uniform time grids, sample paths and Brownian ensembles.
//!
//! Every derivative operator in the crate is assembled from three path
//! perturbations defined here:
//!
//! * [`SamplePath::bump`] adds `eps` at a single node (vertical bump),
//! * [`SamplePath::flat_extend`] freezes the path at its current value for
//!   `k` further steps (horizontal extension),
//! * [`SamplePath::perturb`] shifts the path by `eps * ∫_0^t z dr` with the
//!   integral taken by the left-endpoint rule (Cameron–Martin direction).
//!
//! Paths store node values, not increments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Uniform partition `t_i = i * T / N` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    /// Builds the grid; requires `T > 0` and `N >= 2`.
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 steps, got {steps}"
            )));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes `N + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of node `i`; exact at both ends.
    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }

    /// Remaining time `T - t_i`.
    pub fn remaining(&self, i: usize) -> f64 {
        self.horizon * (self.steps - i.min(self.steps)) as f64 / self.steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |i| self.time(i))
    }

    /// Node closest to `t`, ties resolved towards the lower node.
    pub fn nearest_node(&self, t: f64) -> usize {
        let x = (t / self.dt()).clamp(0.0, self.steps as f64);
        let lower = x.floor();
        let node = if x - lower > 0.5 { lower + 1.0 } else { lower };
        node as usize
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i > self.steps {
            Err(Error::NodeOutOfRange {
                index: i,
                steps: self.steps,
            })
        } else {
            Ok(())
        }
    }

    /// Same horizon with `factor` times as many steps.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument(
                "refinement factor must be positive".into(),
            ));
        }
        Self::new(self.horizon, self.steps * factor)
    }
}

/// Whether a path is a plain sample or the result of a single-node bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Continuous,
    Bumped,
}

/// Node values `v_0..v_N` of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    kind: PathKind,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "path has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            kind: PathKind::Continuous,
        })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
            kind: PathKind::Continuous,
        }
    }

    /// Path with `v_i = f(t_i)`.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.times().map(f).collect(),
            kind: PathKind::Continuous,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Adds `eps` to node `i` only.
    pub fn bump(&self, i: usize, eps: f64) -> Result<Self> {
        self.grid.check_node(i)?;
        let mut values = self.values.clone();
        values[i] += eps;
        Ok(Self {
            grid: self.grid,
            values,
            kind: PathKind::Bumped,
        })
    }

    /// Nodes `i+1..=i+k` take the value `v_i`; later nodes are left untouched.
    pub fn flat_extend(&self, i: usize, k: usize) -> Result<Self> {
        let mut values = self.values.clone();
        flat_extend_in_place(&mut values, i, k)?;
        Ok(Self {
            grid: self.grid,
            values,
            kind: self.kind,
        })
    }

    /// Node `i` becomes `v_i + eps * Σ_{j<i} z_j Δt`.
    pub fn perturb(&self, z: &SamplePath, eps: f64) -> Result<Self> {
        if z.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let dt = self.grid.dt();
        let mut acc = 0.0;
        let values = self
            .values
            .iter()
            .zip(&z.values)
            .map(|(v, zj)| {
                let shifted = v + eps * acc;
                acc += zj * dt;
                shifted
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            kind: self.kind,
        })
    }
}

pub(crate) fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn flat_extend_in_place(values: &mut [f64], i: usize, k: usize) -> Result<()> {
    let steps = values.len() - 1;
    if i + k > steps {
        return Err(Error::NodeOutOfRange {
            index: i + k,
            steps,
        });
    }
    let v = values[i];
    values[i + 1..=i + k].iter_mut().for_each(|x| *x = v);
    Ok(())
}

/// Shift produced by the ramp `z = (1/δ) 1_{[t_i, t_i + δ)}` with `δ = width` steps:
/// node `m` moves by `eps * min(m - i, width) / width` for `m > i`.
pub(crate) fn add_ramp(values: &mut [f64], i: usize, width: usize, eps: f64) {
    let w = width as f64;
    for (offset, v) in values.iter_mut().skip(i + 1).enumerate() {
        let steps_in = (offset + 1).min(width) as f64;
        *v += eps * steps_in / w;
    }
}

/// Row-major matrix of node values, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    grid: TimeGrid,
    rows: usize,
    data: Vec<f64>,
}

impl PathMatrix {
    pub fn zeros(grid: TimeGrid, rows: usize) -> Self {
        Self {
            grid,
            rows,
            data: vec![0.0; rows * grid.len()],
        }
    }

    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * grid.len());
        for row in rows {
            if row.len() != grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "row has {} values, grid has {} nodes",
                    row.len(),
                    grid.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self {
            grid,
            rows: n,
            data,
        })
    }

    /// Fills each row in parallel from `f(row_index, row)`.
    pub fn from_row_fn(grid: TimeGrid, rows: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Self {
        let mut m = Self::zeros(grid, rows);
        m.data
            .par_chunks_mut(grid.len())
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        m
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.len())
    }

    pub fn par_rows(&self) -> impl IndexedParallelIterator<Item = &[f64]> {
        self.data.par_chunks_exact(self.grid.len())
    }

    pub fn par_rows_mut(&mut self) -> impl IndexedParallelIterator<Item = &mut [f64]> {
        let n = self.grid.len();
        self.data.par_chunks_exact_mut(n)
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.grid.len() + i]
    }

    /// Values at node `i` across all paths.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[i]).collect()
    }

    pub fn path(&self, j: usize) -> SamplePath {
        SamplePath {
            grid: self.grid,
            values: self.row(j).to_vec(),
            kind: PathKind::Continuous,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `M` Brownian paths started at 0, reproducible from `(seed, path index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianEnsemble {
    paths: PathMatrix,
    seed: u64,
}

impl BrownianEnsemble {
    /// Samples `count` paths. Path `j` draws its increments from a ChaCha8
    /// stream keyed by `seed` with stream id `j`, so the result does not depend
    /// on how rows are scheduled across threads.
    pub fn sample(grid: TimeGrid, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument(
                "ensemble needs at least one path".into(),
            ));
        }
        let sd = grid.dt().sqrt();
        let paths = PathMatrix::from_row_fn(grid, count, |j, row| {
            let mut rng = path_rng(seed, j as u64);
            row[0] = 0.0;
            for i in 1..row.len() {
                let z: f64 = StandardNormal.sample(&mut rng);
                row[i] = row[i - 1] + sd * z;
            }
        });
        Ok(Self { paths, seed })
    }

    /// Wraps externally produced paths (e.g. tree leaves or an imported CSV).
    pub fn from_paths(paths: PathMatrix, seed: u64) -> Result<Self> {
        if paths.iter_rows().any(|r| r[0] != 0.0) {
            return Err(Error::InvalidArgument(
                "Brownian paths must start at 0".into(),
            ));
        }
        Ok(Self { paths, seed })
    }

    /// Keeps every `factor`-th node; the coarse paths are exact samples of the
    /// same trajectories.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid();
        if factor == 0 || !grid.steps().is_multiple_of(factor) {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen {} steps by {factor}",
                grid.steps()
            )));
        }
        let coarse = TimeGrid::new(grid.horizon(), grid.steps() / factor)?;
        let paths = PathMatrix::from_row_fn(coarse, self.len(), |j, row| {
            let fine = self.paths.row(j);
            row.iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v = fine[i * factor]);
        });
        Ok(Self {
            paths,
            seed: self.seed,
        })
    }

    /// Paths `range` as a new ensemble.
    pub fn subset(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.is_empty() {
            return Err(Error::InvalidArgument(
                "empty or out-of-range subset".into(),
            ));
        }
        let grid = *self.grid();
        let paths = PathMatrix::from_row_fn(grid, range.len(), |j, row| {
            row.copy_from_slice(self.paths.row(range.start + j))
        });
        Ok(Self {
            paths,
            seed: self.seed,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.paths.grid()
    }

    pub fn len(&self) -> usize {
        self.paths.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn paths(&self) -> &PathMatrix {
        &self.paths
    }

    pub fn path(&self, j: usize) -> &[f64] {
        self.paths.row(j)
    }

    /// Increment `w_{i+1} - w_i` of path `j`.
    pub fn increment(&self, j: usize, i: usize) -> f64 {
        let p = self.paths.row(j);
        p[i + 1] - p[i]
    }
}

/// Counter-based generator for stream `stream` of the master `seed`.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
