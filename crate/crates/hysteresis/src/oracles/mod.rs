//! Independent ground truth: an exact scenario-tree solver for problems linear
//! in the policy, closed forms for the catalog examples, and the
//! martingale-extraction route for separable kernels.

mod closed_form;
mod martingale;
mod tree;

pub use closed_form::{
    oracle_cumulative, oracle_jump, oracle_state_dependent, oracle_tipping, ClosedFormOracle,
    CumulativeOracle, JumpOracle, OracleQuantity, StateDependentOracle, TippingOracle,
};
pub use martingale::{oracle_detemple_zapatero, DetempleZapatero, MartingaleExtraction};
pub use tree::{tree_optimize, ScenarioTree, TreePolicy};
