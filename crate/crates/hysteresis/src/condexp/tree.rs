use std::ops::Range;

use super::{check_len, Conditioner};
use crate::error::{Error, Result};

/// Exact conditioning on a binomial tree whose `2^depth` leaves are the paths,
/// ordered so that the step-`k` move is bit `depth - 1 - k` of the leaf index.
#[derive(Debug, Clone, Copy)]
pub struct ExactTreeConditioner {
    depth: usize,
}

impl ExactTreeConditioner {
    pub fn new(depth: usize) -> Result<Self> {
        if !(1..=20).contains(&depth) {
            return Err(Error::InvalidArgument(format!(
                "tree depth {depth} outside 1..=20"
            )));
        }
        Ok(Self { depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

impl Conditioner for ExactTreeConditioner {
    fn paths(&self) -> usize {
        1 << self.depth
    }

    /// Leaves sharing the first `node` moves form one atom of `F_node`.
    fn condition(&self, node: usize, targets: &[f64]) -> Result<Vec<f64>> {
        check_len(self.paths(), targets)?;
        if node > self.depth {
            return Err(Error::NodeOutOfRange {
                index: node,
                steps: self.depth,
            });
        }
        let group = 1usize << (self.depth - node);
        Ok(targets
            .chunks(group)
            .flat_map(|c| {
                let m = c.iter().sum::<f64>() / group as f64;
                std::iter::repeat_n(m, group)
            })
            .collect())
    }

    fn batches(&self) -> Vec<Range<usize>> {
        vec![0..self.paths()]
    }
}
