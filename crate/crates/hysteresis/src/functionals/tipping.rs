use super::{ClassA, Dependence, Functional, Paths, Smooth};
use crate::error::{Error, Result};

/// Index of the first node attaining `max_{r<=i} w_r`, for every `i`.
pub fn running_argmax(w: &[f64]) -> Vec<usize> {
    let mut best = 0;
    w.iter()
        .enumerate()
        .map(|(i, v)| {
            if *v > w[best] {
                best = i;
            }
            best
        })
        .collect()
}

/// `h_t(c) = ∫_0^t f(s - θ_t) c_s ds` with `θ_t` the argmax of `w` on `[0, t]`.
#[derive(Debug, Clone)]
pub struct Tipping {
    f: Smooth,
}

impl Tipping {
    /// `f` must vanish on `(-∞, 0]`.
    pub fn new(f: Smooth) -> Result<Self> {
        if [0.0, -1e-9, -1.0, -100.0]
            .iter()
            .any(|x| f.value(*x) != 0.0)
        {
            return Err(Error::InvalidArgument(
                "tipping weight must vanish on nonpositive arguments".into(),
            ));
        }
        Ok(Self { f })
    }

    pub fn weight(&self) -> &Smooth {
        &self.f
    }
}

impl Functional for Tipping {
    fn name(&self) -> &str {
        "tipping"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        let theta = p.grid.time(running_argmax(&p.w[..=i])[i]);
        (0..=i)
            .map(|r| self.f.value(p.grid.time(r) - theta) * p.c[r])
            .sum::<f64>()
            * p.dt()
    }
}

impl ClassA for Tipping {
    fn dependence(&self) -> Dependence {
        Dependence::Noise
    }

    fn atom(&self, _p: Paths<'_>, _i: usize) -> f64 {
        0.0
    }

    fn density(&self, p: Paths<'_>, s: usize, t: usize) -> f64 {
        let theta = running_argmax(&p.w[..=t])[t];
        self.f.value(p.grid.time(s) - p.grid.time(theta))
    }

    fn atoms(&self, p: Paths<'_>) -> Vec<f64> {
        vec![0.0; p.grid.len()]
    }

    /// Only nodes `m >= i` that keep the argmax of node `i` contribute, since a
    /// later argmax puts the weight at a negative argument.
    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        let n = p.steps();
        let theta = running_argmax(p.w);
        let mut run = vec![0usize; n + 1];
        for i in (0..n).rev() {
            run[i] = if i + 1 < n && theta[i + 1] == theta[i] {
                run[i + 1] + 1
            } else {
                1
            };
        }
        (0..=n)
            .map(|i| self.f.value(p.grid.time(i) - p.grid.time(theta[i])) * run[i] as f64 * p.dt())
            .collect()
    }

    fn analytic_atom_vertical(&self, _p: Paths<'_>, _i: usize, order: usize) -> Option<f64> {
        (1..=2).contains(&order).then_some(0.0)
    }

    fn analytic_atom_horizontal(&self, _p: Paths<'_>, _i: usize) -> Option<f64> {
        Some(0.0)
    }
}
