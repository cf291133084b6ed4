use nalgebra::{DMatrix, DVector};

use crate::condexp::ExactTreeConditioner;
use crate::error::{Error, Result};
use crate::functionals::{Functional, Paths};
use crate::grid::{BrownianEnsemble, PathMatrix, TimeGrid};
use crate::nodes::NodeMatrix;

/// Binomial Brownian approximation: each step moves `±√Δt` with probability
/// one half. Leaf `j` takes the up move at step `k` when bit `depth - 1 - k`
/// of `j` is set, so leaves sharing the first `i` moves are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    paths: PathMatrix,
}

impl ScenarioTree {
    pub const MAX_DEPTH: usize = 10;

    pub fn new(horizon: f64, depth: usize) -> Result<Self> {
        if !(2..=Self::MAX_DEPTH).contains(&depth) {
            return Err(Error::InvalidArgument(format!(
                "tree depth {depth} outside 2..={}",
                Self::MAX_DEPTH
            )));
        }
        let grid = TimeGrid::new(horizon, depth)?;
        let step = grid.dt().sqrt();
        let paths = PathMatrix::from_row_fn(grid, 1 << depth, |j, row| {
            row[0] = 0.0;
            for k in 0..depth {
                let up = (j >> (depth - 1 - k)) & 1 == 1;
                row[k + 1] = row[k] + if up { step } else { -step };
            }
        });
        Ok(Self { paths })
    }

    pub fn depth(&self) -> usize {
        self.grid().steps()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.paths.grid()
    }

    pub fn leaves(&self) -> usize {
        self.paths.rows()
    }

    pub fn leaf_probability(&self) -> f64 {
        1.0 / self.leaves() as f64
    }

    /// Leaf paths, one row per leaf.
    pub fn paths(&self) -> &PathMatrix {
        &self.paths
    }

    pub fn ensemble(&self) -> BrownianEnsemble {
        BrownianEnsemble::from_paths(self.paths.clone(), 0).expect("tree paths start at 0")
    }

    pub fn conditioner(&self) -> ExactTreeConditioner {
        ExactTreeConditioner::new(self.depth()).expect("depth checked on construction")
    }

    /// Number of adapted decision variables on nodes `0..depth`.
    pub fn vertex_count(&self) -> usize {
        (1 << self.depth()) - 1
    }

    /// Decision variable read by `leaf` at node `i < depth`.
    pub fn vertex(&self, i: usize, leaf: usize) -> usize {
        (1 << i) - 1 + (leaf >> (self.depth() - i))
    }
}

/// Exact maximiser of the tree objective on the decision nodes `0..depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePolicy {
    /// Per leaf and decision node.
    pub policy: NodeMatrix,
    /// Value of `E Σ_{m<N} (-(c_m - w_m)²/2 - ε h_m(c)) Δt` at the optimum.
    pub objective: f64,
}

/// `h_m(c) = base_m + Σ_{r<=m} slope[m][r] c_r` identified from evaluations.
struct LinearForm {
    base: Vec<f64>,
    slope: Vec<Vec<f64>>,
}

fn identify(h: &dyn Functional, grid: &TimeGrid, w: &[f64]) -> Result<LinearForm> {
    let n = grid.steps();
    let mut c = vec![0.0; n + 1];
    let base: Vec<f64> = (0..n).map(|m| h.eval(Paths::new(grid, &c, w), m)).collect();
    let mut slope = vec![vec![0.0; n]; n];
    for r in 0..n {
        c[r] = 1.0;
        for (m, row) in slope.iter_mut().enumerate().skip(r) {
            row[r] = h.eval(Paths::new(grid, &c, w), m) - base[m];
        }
        c[r] = 0.0;
    }
    let probe: Vec<f64> = (0..=n)
        .map(|r| ((r + 1) as f64 * 0.7).sin() + 0.3)
        .collect();
    for m in 0..n {
        let exact = h.eval(Paths::new(grid, &probe, w), m);
        let affine = base[m] + (0..=m).map(|r| slope[m][r] * probe[r]).sum::<f64>();
        if (exact - affine).abs() > 1e-9 * (1.0 + exact.abs()) {
            return Err(Error::InvalidArgument(format!(
                "{} is not linear in the policy (node {m}: {exact} vs {affine})",
                h.name()
            )));
        }
    }
    Ok(LinearForm { base, slope })
}

/// Solves `max_c E Σ_{m<N} (-(c_m - w_m)²/2 - ε h_m(c)) Δt` over adapted
/// policies on the tree.
///
/// `h` must be linear in `c`; the stationarity conditions then form a dense
/// symmetric positive definite system in the tree's vertices. The terminal
/// node carries no decision and is not reported.
pub fn tree_optimize(h: &dyn Functional, eps: f64, tree: &ScenarioTree) -> Result<TreePolicy> {
    let grid = *tree.grid();
    let n = grid.steps();
    let dt = grid.dt();
    let p = tree.leaf_probability();
    let size = tree.vertex_count();
    let mut q = DMatrix::<f64>::zeros(size, size);
    let mut b = DVector::<f64>::zeros(size);
    let mut constant = 0.0;
    for leaf in 0..tree.leaves() {
        let w = tree.paths().row(leaf);
        let form = identify(h, &grid, w)?;
        for r in 0..n {
            let v = tree.vertex(r, leaf);
            let future: f64 = (r..n).map(|m| form.slope[m][r]).sum();
            q[(v, v)] += p * dt;
            b[v] += p * dt * (w[r] - eps * future);
            constant += p * dt * (-0.5 * w[r] * w[r] - eps * form.base[r]);
        }
    }
    let chol = q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("tree stationarity system is singular".into()))?;
    let x = chol.solve(&b);
    let objective = constant + b.dot(&x) - 0.5 * x.dot(&(&q * &x));
    let nodes: Vec<usize> = (0..n).collect();
    let policy = NodeMatrix::from_row_fn(grid, nodes, tree.leaves(), |leaf, row| {
        row.iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = x[tree.vertex(i, leaf)])
    })?;
    Ok(TreePolicy { policy, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{Climate, EmissionKernel, PresentDamage};

    #[test]
    fn increments_match_brownian_moments() {
        let t = ScenarioTree::new(1.0, 5).unwrap();
        let p = t.leaf_probability();
        for i in 0..5 {
            let (mut m1, mut m2) = (0.0, 0.0);
            for j in 0..t.leaves() {
                let d = t.paths().get(j, i + 1) - t.paths().get(j, i);
                m1 += p * d;
                m2 += p * d * d;
            }
            assert!(m1.abs() < 1e-15);
            assert!((m2 - t.grid().dt()).abs() < 1e-15);
        }
    }

    #[test]
    fn vertices_follow_shared_prefixes() {
        let t = ScenarioTree::new(1.0, 3).unwrap();
        assert_eq!(t.vertex_count(), 7);
        assert_eq!(
            (0..8).map(|j| t.vertex(0, j)).collect::<Vec<_>>(),
            vec![0; 8]
        );
        assert_eq!(
            (0..8).map(|j| t.vertex(2, j)).collect::<Vec<_>>(),
            vec![3, 3, 4, 4, 5, 5, 6, 6]
        );
    }

    #[test]
    fn zero_eps_returns_state() {
        let t = ScenarioTree::new(1.0, 4).unwrap();
        let h = Climate::new(
            PresentDamage::OfState(crate::functionals::Smooth::Identity),
            EmissionKernel::Constant(1.0),
        );
        let sol = tree_optimize(&h, 0.0, &t).unwrap();
        for j in 0..t.leaves() {
            for i in 0..4 {
                assert!((sol.policy.get(j, i).unwrap() - t.paths().get(j, i)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unit_atom_shifts_by_eps() {
        let t = ScenarioTree::new(2.0, 5).unwrap();
        let h = Climate::new(PresentDamage::Constant(1.0), EmissionKernel::Zero);
        let sol = tree_optimize(&h, 0.3, &t).unwrap();
        for j in 0..t.leaves() {
            for i in 0..5 {
                assert!(
                    (sol.policy.get(j, i).unwrap() - (t.paths().get(j, i) - 0.3)).abs() < 1e-13
                );
            }
        }
    }

    #[test]
    fn nonlinear_functional_rejected() {
        let t = ScenarioTree::new(1.0, 2).unwrap();
        let h = crate::functionals::StateDependent::new(crate::functionals::Smooth::HalfSquare);
        assert!(matches!(
            tree_optimize(&h, 0.1, &t),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn depth_is_bounded() {
        assert!(ScenarioTree::new(1.0, 11).is_err());
        assert!(ScenarioTree::new(1.0, 1).is_err());
    }
}
