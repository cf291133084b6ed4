use super::{ClassA, Dependence, Functional, Paths, Smooth};

/// `h_t(c) = f(c_t)`: no memory, so the density vanishes.
#[derive(Debug, Clone)]
pub struct StateDependent {
    f: Smooth,
}

impl StateDependent {
    pub fn new(f: Smooth) -> Self {
        Self { f }
    }

    pub fn f(&self) -> &Smooth {
        &self.f
    }
}

impl Functional for StateDependent {
    fn name(&self) -> &str {
        "state_dependent"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        self.f.value(p.c[i])
    }
}

impl ClassA for StateDependent {
    fn dependence(&self) -> Dependence {
        Dependence::Policy
    }

    fn atom(&self, p: Paths<'_>, i: usize) -> f64 {
        self.f.derivative(p.c[i], 1)
    }

    fn density(&self, _p: Paths<'_>, _s: usize, _t: usize) -> f64 {
        0.0
    }

    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        vec![0.0; p.grid.len()]
    }

    fn has_future(&self) -> bool {
        false
    }

    fn analytic_atom_vertical(&self, p: Paths<'_>, i: usize, order: usize) -> Option<f64> {
        (1..=2)
            .contains(&order)
            .then(|| self.f.derivative(p.c[i], order + 1))
    }

    fn analytic_atom_horizontal(&self, _p: Paths<'_>, _i: usize) -> Option<f64> {
        Some(0.0)
    }

    fn analytic_time_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        Some(vec![0.0; p.grid.len()])
    }

    fn analytic_malliavin_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        Some(vec![0.0; p.grid.len()])
    }
}
