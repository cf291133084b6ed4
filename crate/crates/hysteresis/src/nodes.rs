//! Per-path values on a selected subset of grid nodes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{PathMatrix, TimeGrid};

/// Column-major matrix: one column per selected node, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrix {
    grid: TimeGrid,
    nodes: Vec<usize>,
    rows: usize,
    data: Vec<f64>,
}

impl NodeMatrix {
    /// `nodes` must be strictly increasing and on the grid.
    pub fn zeros(grid: TimeGrid, nodes: Vec<usize>, rows: usize) -> Result<Self> {
        check_nodes(&grid, &nodes)?;
        let data = vec![0.0; rows * nodes.len()];
        Ok(Self {
            grid,
            nodes,
            rows,
            data,
        })
    }

    pub fn from_columns(grid: TimeGrid, nodes: Vec<usize>, columns: Vec<Vec<f64>>) -> Result<Self> {
        check_nodes(&grid, &nodes)?;
        if columns.len() != nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} columns for {} nodes",
                columns.len(),
                nodes.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidArgument("ragged node columns".into()));
        }
        Ok(Self {
            grid,
            nodes,
            rows,
            data: columns.concat(),
        })
    }

    /// Fills row `j` (all selected nodes of path `j`) with `f(j, row)`, in parallel.
    pub fn from_row_fn(
        grid: TimeGrid,
        nodes: Vec<usize>,
        rows: usize,
        f: impl Fn(usize, &mut [f64]) + Sync,
    ) -> Result<Self> {
        check_nodes(&grid, &nodes)?;
        let k = nodes.len();
        let mut by_row = vec![0.0; rows * k];
        by_row
            .par_chunks_mut(k.max(1))
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        let mut data = vec![0.0; rows * k];
        for j in 0..rows {
            for c in 0..k {
                data[c * rows + j] = by_row[j * k + c];
            }
        }
        Ok(Self {
            grid,
            nodes,
            rows,
            data,
        })
    }

    /// The columns `nodes` of a path matrix.
    pub fn select(paths: &PathMatrix, nodes: Vec<usize>) -> Result<Self> {
        let columns = nodes.iter().map(|&i| paths.column(i)).collect();
        Self::from_columns(*paths.grid(), nodes, columns)
    }

    /// Every node of the grid.
    pub fn all_nodes(grid: &TimeGrid) -> Vec<usize> {
        (0..grid.len()).collect()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn column(&self, node: usize) -> Result<&[f64]> {
        let c = self.position(node).ok_or(Error::NodeNotPrepared(node))?;
        Ok(&self.data[c * self.rows..(c + 1) * self.rows])
    }

    pub fn column_mut(&mut self, node: usize) -> Result<&mut [f64]> {
        let c = self.position(node).ok_or(Error::NodeNotPrepared(node))?;
        Ok(&mut self.data[c * self.rows..(c + 1) * self.rows])
    }

    pub fn columns(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.nodes
            .iter()
            .copied()
            .zip(self.data.chunks(self.rows.max(1)))
    }

    pub fn get(&self, path: usize, node: usize) -> Result<f64> {
        Ok(self.column(node)?[path])
    }

    /// Values of path `j` at the selected nodes.
    pub fn row(&self, j: usize) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|c| self.data[c * self.rows + j])
            .collect()
    }

    /// Elementwise `self - other` on a shared layout.
    pub fn sub(&self, other: &NodeMatrix) -> Result<NodeMatrix> {
        if self.nodes != other.nodes || self.rows != other.rows {
            return Err(Error::GridMismatch);
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(NodeMatrix {
            grid: self.grid,
            nodes: self.nodes.clone(),
            rows: self.rows,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> NodeMatrix {
        NodeMatrix {
            grid: self.grid,
            nodes: self.nodes.clone(),
            rows: self.rows,
            data: self.data.iter().map(|x| f(*x)).collect(),
        }
    }

    /// Node-wise means across paths.
    pub fn column_means(&self) -> Vec<f64> {
        self.columns()
            .map(|(_, c)| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

fn check_nodes(grid: &TimeGrid, nodes: &[usize]) -> Result<()> {
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "node list must be strictly increasing".into(),
        ));
    }
    if let Some(&last) = nodes.last() {
        grid.check_node(last)?;
    }
    Ok(())
}

/// Sorted union of the windows `center - half ..= center + half + extra`,
/// clipped to the grid.
pub fn window_nodes(grid: &TimeGrid, centers: &[usize], half: usize, extra: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = centers
        .iter()
        .flat_map(|&c| c.saturating_sub(half)..=(c + half + extra).min(grid.steps()))
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}
