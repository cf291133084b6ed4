use std::fmt;
use std::sync::Arc;

use super::{ClassA, Dependence, Functional, Paths};

/// Functional `g` applied to the smoothed path on `[0, t]`.
#[derive(Clone)]
pub enum Terminal {
    /// `g(R) = R_t`
    Value,
    /// `g(R) = ∫_0^t R ds`
    Integral,
    /// `g(R) = ½ ∫_0^t R² ds`
    SquareIntegral,
    /// `(R, dt) -> (g, ∂g/∂R_j)`.
    Custom(Arc<dyn Fn(&[f64], f64) -> (f64, Vec<f64>) + Send + Sync>),
}

impl fmt::Debug for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Value => write!(f, "Value"),
            Terminal::Integral => write!(f, "Integral"),
            Terminal::SquareIntegral => write!(f, "SquareIntegral"),
            Terminal::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Terminal {
    fn value_and_gradient(&self, r: &[f64], dt: f64) -> (f64, Vec<f64>) {
        match self {
            Terminal::Value => {
                let mut mu = vec![0.0; r.len()];
                mu[r.len() - 1] = 1.0;
                (r[r.len() - 1], mu)
            }
            Terminal::Integral => (r.iter().sum::<f64>() * dt, vec![dt; r.len()]),
            Terminal::SquareIntegral => (
                0.5 * r.iter().map(|x| x * x).sum::<f64>() * dt,
                r.iter().map(|x| x * dt).collect(),
            ),
            Terminal::Custom(g) => g(r, dt),
        }
    }
}

/// `h_t(c) = g(R^(n) c)` where the exponential smoother solves
/// `R_j = q R_{j+1} + (1 - q) c_j` backwards from `R_t = c_t`, `q = e^{-n Δt}`.
#[derive(Debug, Clone)]
pub struct SmoothApproximation {
    g: Terminal,
    rate: f64,
}

impl SmoothApproximation {
    pub fn new(g: Terminal, rate: f64) -> Self {
        Self { g, rate }
    }

    /// `R_0..R_i` for the prefix ending at node `i`.
    pub fn smoothed(&self, p: Paths<'_>, i: usize) -> Vec<f64> {
        let q = (-self.rate * p.dt()).exp();
        let mut r = vec![0.0; i + 1];
        r[i] = p.c[i];
        for j in (0..i).rev() {
            r[j] = q * r[j + 1] + (1.0 - q) * p.c[j];
        }
        r
    }

    /// Exact gradient of `h_i` with respect to `c_0..c_i`.
    pub fn gradient(&self, p: Paths<'_>, i: usize) -> Vec<f64> {
        let q = (-self.rate * p.dt()).exp();
        let (_, mu) = self.g.value_and_gradient(&self.smoothed(p, i), p.dt());
        let mut acc = 0.0;
        let mut grad: Vec<f64> = mu
            .iter()
            .map(|m| {
                acc = q * acc + m;
                (1.0 - q) * acc
            })
            .collect();
        grad[i] = acc;
        grad
    }

    fn split(grad: &[f64], dt: f64) -> (f64, Vec<f64>) {
        let i = grad.len() - 1;
        let mut density: Vec<f64> = grad.iter().map(|g| g / dt).collect();
        density[i] = if i > 0 { density[i - 1] } else { 0.0 };
        (grad[i] - density[i] * dt, density)
    }
}

impl Functional for SmoothApproximation {
    fn name(&self) -> &str {
        "smooth_approximation"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        self.g.value_and_gradient(&self.smoothed(p, i), p.dt()).0
    }
}

impl ClassA for SmoothApproximation {
    fn dependence(&self) -> Dependence {
        Dependence::Policy
    }

    fn atom(&self, p: Paths<'_>, i: usize) -> f64 {
        Self::split(&self.gradient(p, i), p.dt()).0
    }

    fn density(&self, p: Paths<'_>, s: usize, t: usize) -> f64 {
        Self::split(&self.gradient(p, t), p.dt()).1[s]
    }

    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        let n = p.steps();
        let dt = p.dt();
        let mut sums = vec![0.0; n + 1];
        for m in 0..n {
            let (_, density) = Self::split(&self.gradient(p, m), dt);
            for (s, d) in sums.iter_mut().zip(&density) {
                *s += d * dt;
            }
        }
        sums
    }
}
