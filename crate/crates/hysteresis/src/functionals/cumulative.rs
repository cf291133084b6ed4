use super::{future_integral, ClassA, Dependence, Functional, Paths};

/// `h_t(c) = c_t ∫_0^t c_s ds`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cumulative;

impl Cumulative {
    fn integral(p: Paths<'_>, i: usize) -> f64 {
        p.c[..=i].iter().sum::<f64>() * p.dt()
    }
}

impl Functional for Cumulative {
    fn name(&self) -> &str {
        "cumulative"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        p.c[i] * Self::integral(p, i)
    }
}

impl ClassA for Cumulative {
    fn dependence(&self) -> Dependence {
        Dependence::Policy
    }

    fn atom(&self, p: Paths<'_>, i: usize) -> f64 {
        Self::integral(p, i)
    }

    fn density(&self, p: Paths<'_>, _s: usize, t: usize) -> f64 {
        p.c[t]
    }

    fn atoms(&self, p: Paths<'_>) -> Vec<f64> {
        super::running_integral(p.c, p.dt())
    }

    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        future_integral(p.c, p.dt())
    }

    fn analytic_atom_vertical(&self, _p: Paths<'_>, _i: usize, order: usize) -> Option<f64> {
        (1..=2).contains(&order).then_some(0.0)
    }

    fn analytic_atom_horizontal(&self, p: Paths<'_>, i: usize) -> Option<f64> {
        Some(p.c[i])
    }

    fn analytic_time_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        Some(vec![0.0; p.grid.len()])
    }

    fn analytic_malliavin_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        Some((0..p.grid.len()).map(|i| p.grid.remaining(i)).collect())
    }
}
