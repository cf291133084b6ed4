use super::{FocProblem, Functional, Paths};

/// `h_t(c) = c_{t/2}`, read at the node nearest `t/2` (ties to the lower node).
///
/// Its Fréchet derivative is an interior atom, so it is not class A. The
/// first-order condition instead uses the exact discrete dual weight: node `i`
/// is read by every `h_{t_m}`, `m < N`, with `nearest(m/2) = i`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Midpoint;

impl Midpoint {
    pub fn node(i: usize) -> usize {
        i / 2
    }

    /// `#{m in [0, N-1] : nearest(m/2) = i}` for every node.
    pub fn dual_weights(steps: usize) -> Vec<f64> {
        let mut w = vec![0.0; steps + 1];
        for m in 0..steps {
            w[Self::node(m)] += 1.0;
        }
        w
    }
}

impl Functional for Midpoint {
    fn name(&self) -> &str {
        "midpoint"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        p.c[Self::node(i)]
    }
}

impl FocProblem for Midpoint {
    fn present_marginals(&self, p: Paths<'_>) -> Vec<f64> {
        vec![0.0; p.grid.len()]
    }

    fn future_marginals(&self, p: Paths<'_>) -> Vec<f64> {
        Self::dual_weights(p.steps())
    }

    fn policy_free(&self) -> bool {
        true
    }

    fn has_future(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn nearest_half_node() {
        let n = 10;
        let g = TimeGrid::new(1.0, n).unwrap();
        for i in 0..=n {
            assert_eq!(Midpoint::node(i), g.nearest_node(g.time(i) / 2.0));
        }
    }

    #[test]
    fn catalog_values() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let c: Vec<f64> = g.times().collect();
        assert_eq!(Midpoint.eval(Paths::diagonal(&g, &c), 8), 0.5);
        let k = vec![0.7; 9];
        assert_eq!(Midpoint.eval(Paths::diagonal(&g, &k), 5), 0.7);
        assert_eq!(Midpoint.eval(Paths::diagonal(&g, &c), 0), c[0]);
    }

    #[test]
    fn dual_weights_are_two_before_half() {
        let w = Midpoint::dual_weights(8);
        assert_eq!(w, vec![2.0, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
