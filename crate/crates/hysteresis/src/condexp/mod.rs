//! Conditional expectations `E[· | F_t]`, with the filtration realised as
//! adapted features of the Brownian path up to the current node.

mod features;
mod nested;
mod regression;
mod tipping;
mod tree;

use std::ops::Range;

pub use features::{Basis, Feature};
pub use nested::{inner_rng, nested_mc, tipping_nested_mc, NestedConfig};
pub use regression::{RegressionConditioner, RegressionConfig, RegressionFit};
pub use tipping::{
    tipping_closed_form, tipping_gap_integral, tipping_gap_slope, tipping_quadrature,
};
pub use tree::ExactTreeConditioner;

use crate::error::{Error, Result};

/// Maps per-path targets at a node to their conditional expectation given `F_node`.
///
/// Implementations are linear in the targets.
pub trait Conditioner: Send + Sync {
    fn paths(&self) -> usize;

    fn condition(&self, node: usize, targets: &[f64]) -> Result<Vec<f64>>;

    /// Contiguous path ranges whose estimates are mutually independent.
    fn batches(&self) -> Vec<Range<usize>>;
}

/// `count` contiguous ranges covering `0..paths`, sizes differing by at most one.
pub fn batch_ranges(paths: usize, count: usize) -> Vec<Range<usize>> {
    let count = count.clamp(1, paths.max(1));
    (0..count)
        .map(|b| b * paths / count..(b + 1) * paths / count)
        .collect()
}

/// Identity conditioning for deterministic or already adapted targets.
#[derive(Debug, Clone)]
pub struct Deterministic {
    paths: usize,
    batches: usize,
}

impl Deterministic {
    pub fn new(paths: usize) -> Self {
        Self {
            paths,
            batches: paths.min(20),
        }
    }

    pub fn with_batches(paths: usize, batches: usize) -> Self {
        Self { paths, batches }
    }
}

impl Conditioner for Deterministic {
    fn paths(&self) -> usize {
        self.paths
    }

    fn condition(&self, _node: usize, targets: &[f64]) -> Result<Vec<f64>> {
        check_len(self.paths, targets)?;
        Ok(targets.to_vec())
    }

    fn batches(&self) -> Vec<Range<usize>> {
        batch_ranges(self.paths, self.batches)
    }
}

pub(crate) fn check_len(paths: usize, targets: &[f64]) -> Result<()> {
    if targets.len() != paths {
        return Err(Error::InvalidArgument(format!(
            "{} targets for {} paths",
            targets.len(),
            paths
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_paths() {
        let b = batch_ranges(10, 3);
        assert_eq!(b, vec![0..3, 3..6, 6..10]);
        assert_eq!(batch_ranges(2, 5).len(), 2);
    }
}
