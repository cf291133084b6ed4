//! Pathwise ingredients of the elasticity and policy dynamics at one node.

use crate::dupire::vertical_derivative;
use crate::error::{Error, Result};
use crate::functionals::{ClassA, Dependence, Paths};
use crate::grid::flat_extend_in_place;
use crate::malliavin::{default_eps, directional_unchecked};

use super::{DerivativeSource, DynamicsOptions};

/// Unconditioned terms at node `i`. Vertical derivatives act on the path
/// named by the functional's dependence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NodeTerms {
    pub atom: f64,
    pub d1: f64,
    pub d2: f64,
    pub horizontal: f64,
    /// `δ_t h_t`
    pub diagonal: f64,
    pub future: f64,
    /// `Σ_{m>i} ∂_t δ_t h_{t_m} Δt`
    pub time_sum: f64,
    /// `Σ_{m>=i} D_t δ_t h_{t_m} Δt`
    pub malliavin_sum: f64,
}

/// How the Malliavin perturbation reaches the policy path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Along {
    /// `c = w`, perturbed together.
    Diagonal,
    /// `c` is held fixed while `w` moves.
    Separate,
}

pub(crate) fn node_terms<H: ClassA + ?Sized>(
    h: &H,
    p: Paths<'_>,
    nodes: &[usize],
    along: Along,
    opts: &DynamicsOptions,
) -> Result<Vec<NodeTerms>> {
    let analytic = opts.source == DerivativeSource::Analytic;
    let n = p.steps();
    let dt = p.dt();
    let dependence = h.dependence();
    let has_future = h.has_future();
    let future = if has_future {
        h.future_sums(p)
    } else {
        vec![0.0; n + 1]
    };
    let time_sums = if analytic && has_future {
        h.analytic_time_sums(p)
    } else {
        None
    };
    let malliavin_sums = if analytic && has_future {
        h.analytic_malliavin_sums(p)
    } else {
        None
    };
    if has_future && dependence == Dependence::Policy && along == Along::Separate {
        return Err(Error::InvalidArgument(format!(
            "{}: Malliavin derivative of a policy-dependent future term away from c = w is unsupported",
            h.name()
        )));
    }

    nodes
        .iter()
        .map(|&i| {
            if i >= n {
                return Err(Error::NodeOutOfRange {
                    index: i,
                    steps: n - 1,
                });
            }
            let atom_on = |c: &[f64], w: &[f64], j: usize| h.atom(Paths::new(p.grid, c, w), j);
            let vertical = |order: usize| -> Result<f64> {
                if analytic {
                    if let Some(v) = h.analytic_atom_vertical(p, i, order) {
                        return Ok(v);
                    }
                }
                match dependence {
                    Dependence::Policy => vertical_derivative(
                        |x| atom_on(x, p.w, i),
                        p.c,
                        i,
                        order,
                        opts.dupire.eps_for(p.c, order),
                    ),
                    Dependence::Noise => vertical_derivative(
                        |x| atom_on(p.c, x, i),
                        p.w,
                        i,
                        order,
                        opts.dupire.eps_for(p.w, order),
                    ),
                }
            };
            let horizontal = match analytic.then(|| h.analytic_atom_horizontal(p, i)).flatten() {
                Some(v) => v,
                None => {
                    let k = opts.dupire.extension.min(n - i).max(1);
                    let mut c = p.c.to_vec();
                    let mut w = p.w.to_vec();
                    flat_extend_in_place(&mut c, i, k)?;
                    flat_extend_in_place(&mut w, i, k)?;
                    (atom_on(&c, &w, i + k) - atom_on(p.c, p.w, i)) / (k as f64 * dt)
                }
            };
            let diagonal = if has_future { h.density(p, i, i) } else { 0.0 };
            let time_sum = match &time_sums {
                Some(t) => t[i],
                None if has_future => (future[i + 1] - future[i]) / dt + diagonal,
                None => 0.0,
            };
            let malliavin_sum = match &malliavin_sums {
                Some(d) => d[i],
                None if has_future => numeric_malliavin_sum(h, p, i, along, opts.ramp),
                None => 0.0,
            };
            Ok(NodeTerms {
                atom: h.atom(p, i),
                d1: vertical(1)?,
                d2: vertical(2)?,
                horizontal,
                diagonal,
                future: future[i],
                time_sum,
                malliavin_sum,
            })
        })
        .collect()
}

fn numeric_malliavin_sum<H: ClassA + ?Sized>(
    h: &H,
    p: Paths<'_>,
    i: usize,
    along: Along,
    ramp: usize,
) -> f64 {
    let width = ramp.min(p.steps() - i).max(1);
    let eps = default_eps(p.w);
    match along {
        Along::Diagonal => directional_unchecked(
            &|x: &[f64]| h.future_sums(Paths::diagonal(p.grid, x))[i],
            p.w,
            i,
            width,
            eps,
        ),
        Along::Separate => directional_unchecked(
            &|x: &[f64]| h.future_sums(Paths::new(p.grid, p.c, x))[i],
            p.w,
            i,
            width,
            eps,
        ),
    }
}
