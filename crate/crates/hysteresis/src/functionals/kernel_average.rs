use super::{ClassA, Dependence, Functional, Kernel, Paths, Smooth2};

/// `h_t(c) = h2(c_t, Y_t)` with `Y_t = ∫_0^t a(t, s) c_s ds`.
///
/// Exponential kernels use O(N) recursions; custom kernels fall back to
/// O(N^2) sums per path.
#[derive(Debug, Clone)]
pub struct KernelAverage {
    h2: Smooth2,
    kernel: Kernel,
}

impl KernelAverage {
    pub fn new(h2: Smooth2, kernel: Kernel) -> Self {
        Self { h2, kernel }
    }

    pub fn h2(&self) -> &Smooth2 {
        &self.h2
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    fn decay(&self, dt: f64) -> Option<(f64, f64)> {
        self.kernel
            .as_exponential()
            .map(|(scale, rate)| (scale, (-rate * dt).exp()))
    }

    /// `Y_i` at a single node.
    pub fn average(&self, p: Paths<'_>, i: usize) -> f64 {
        let ti = p.grid.time(i);
        (0..=i)
            .map(|r| self.kernel.value(ti, p.grid.time(r)) * p.c[r])
            .sum::<f64>()
            * p.dt()
    }

    /// `Y_i` at every node.
    pub fn averages(&self, p: Paths<'_>) -> Vec<f64> {
        let dt = p.dt();
        match self.decay(dt) {
            Some((scale, q)) => {
                let mut y = 0.0;
                p.c.iter()
                    .map(|c| {
                        y = q * y + scale * c * dt;
                        y
                    })
                    .collect()
            }
            None => (0..p.grid.len()).map(|i| self.average(p, i)).collect(),
        }
    }

    fn partials(&self, p: Paths<'_>, y: &[f64]) -> Vec<super::Partials2> {
        p.c.iter()
            .zip(y)
            .map(|(c, y)| self.h2.partials(*c, *y))
            .collect()
    }

    /// `Σ_{m=i}^{N-1} weight(m, i) u_m Δt` for every `i`.
    fn kernel_future(&self, p: Paths<'_>, u: &[f64], jet_index: usize) -> Vec<f64> {
        let n = p.steps();
        let dt = p.dt();
        (0..=n)
            .map(|i| {
                let ti = p.grid.time(i);
                (i..n)
                    .map(|m| self.kernel.jet(p.grid.time(m), ti)[jet_index] * u[m])
                    .sum::<f64>()
                    * dt
            })
            .collect()
    }
}

impl Functional for KernelAverage {
    fn name(&self) -> &str {
        "kernel_average"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        self.h2.partials(p.c[i], self.average(p, i)).v
    }
}

impl ClassA for KernelAverage {
    fn dependence(&self) -> Dependence {
        Dependence::Policy
    }

    fn atom(&self, p: Paths<'_>, i: usize) -> f64 {
        self.h2.partials(p.c[i], self.average(p, i)).x
    }

    fn density(&self, p: Paths<'_>, s: usize, t: usize) -> f64 {
        let a = self.kernel.value(p.grid.time(t), p.grid.time(s));
        a * self.h2.partials(p.c[t], self.average(p, t)).y
    }

    fn atoms(&self, p: Paths<'_>) -> Vec<f64> {
        let y = self.averages(p);
        self.partials(p, &y).iter().map(|d| d.x).collect()
    }

    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        let y = self.averages(p);
        let u: Vec<f64> = self.partials(p, &y).iter().map(|d| d.y).collect();
        let dt = p.dt();
        match self.decay(dt) {
            Some((scale, q)) => super::discounted_future(&u, dt, q)
                .into_iter()
                .map(|s| scale * s)
                .collect(),
            None => self.kernel_future(p, &u, 0),
        }
    }

    fn analytic_atom_vertical(&self, p: Paths<'_>, i: usize, order: usize) -> Option<f64> {
        let d = self.h2.partials(p.c[i], self.average(p, i));
        match order {
            1 => Some(d.xx),
            2 => Some(d.xxx),
            _ => None,
        }
    }

    fn analytic_atom_horizontal(&self, p: Paths<'_>, i: usize) -> Option<f64> {
        let ti = p.grid.time(i);
        let y = self.average(p, i);
        let dy = self.kernel.value(ti, ti) * p.c[i]
            + (0..=i)
                .map(|r| self.kernel.jet(ti, p.grid.time(r))[1] * p.c[r])
                .sum::<f64>()
                * p.dt();
        Some(self.h2.partials(p.c[i], y).xy * dy)
    }

    fn analytic_time_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        let y = self.averages(p);
        let u: Vec<f64> = self.partials(p, &y).iter().map(|d| d.y).collect();
        let dt = p.dt();
        Some(match self.kernel.as_exponential() {
            Some((scale, rate)) => {
                let q = (-rate * dt).exp();
                super::discounted_future(&u, dt, q)
                    .into_iter()
                    .map(|s| rate * scale * s)
                    .collect()
            }
            None => self.kernel_future(p, &u, 2),
        })
    }

    /// Along `c = w`, with `D_t c_s = 1` for `s >= t`.
    fn analytic_malliavin_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        let y = self.averages(p);
        let d = self.partials(p, &y);
        let n = p.steps();
        let dt = p.dt();
        let mut out = vec![0.0; n + 1];
        match self.decay(dt) {
            Some((scale, q)) => {
                let (mut t1, mut p2, mut q2) = (0.0, 0.0, 0.0);
                for i in (0..n).rev() {
                    t1 = d[i].xy * dt + q * t1;
                    q2 = d[i].yy * dt + q * q * q2;
                    p2 = q2 + q * p2;
                    out[i] = scale * t1 + scale * scale * dt * p2;
                }
            }
            None => {
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    let ti = p.grid.time(i);
                    *o = (i..n)
                        .map(|m| {
                            let tm = p.grid.time(m);
                            let dy: f64 = (i..=m)
                                .map(|r| self.kernel.value(tm, p.grid.time(r)))
                                .sum::<f64>()
                                * dt;
                            self.kernel.value(tm, ti) * (d[m].xy + d[m].yy * dy)
                        })
                        .sum::<f64>()
                        * dt;
                }
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::functionals::test_support::assert_adapted;
    use crate::functionals::{Cumulative, Smooth};
    use crate::grid::TimeGrid;

    fn wiggle(n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64)
            .collect()
    }

    fn as_custom(k: &Kernel) -> Kernel {
        let k = k.clone();
        Kernel::Custom(Arc::new(move |t, s| k.jet(t, s)))
    }

    #[test]
    fn pure_integral() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let c = wiggle(16);
        let p = Paths::diagonal(&g, &c);
        let h = KernelAverage::new(Smooth2::SecondArg, Kernel::constant(1.0));
        assert_eq!(h.atom(p, 7), 0.0);
        assert_eq!(h.density(p, 3, 7), 1.0);
    }

    #[test]
    fn product_with_unit_kernel_is_cumulative() {
        let g = TimeGrid::new(1.0, 20).unwrap();
        let c = wiggle(20);
        let p = Paths::diagonal(&g, &c);
        let h = KernelAverage::new(Smooth2::Product, Kernel::constant(1.0));
        for i in 0..=20 {
            assert!((h.eval(p, i) - Cumulative.eval(p, i)).abs() < 1e-13);
            assert!((h.atom(p, i) - Cumulative.atom(p, i)).abs() < 1e-13);
            assert!((h.density(p, i / 2, i) - Cumulative.density(p, i / 2, i)).abs() < 1e-13);
        }
        let (a, b) = (h.future_sums(p), Cumulative.future_sums(p));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn exponential_average_of_one() {
        let n = 2000;
        let g = TimeGrid::new(1.0, n).unwrap();
        let c = vec![1.0; n + 1];
        let h = KernelAverage::new(Smooth2::SecondArg, Kernel::exponential(1.0));
        let v = h.eval(Paths::diagonal(&g, &c), n);
        assert!((v - (1.0 - (-1.0_f64).exp())).abs() <= 2.0 * g.dt());
    }

    #[test]
    fn recursions_match_direct_sums() {
        let g = TimeGrid::new(1.3, 24).unwrap();
        let c = wiggle(24);
        let p = Paths::diagonal(&g, &c);
        let k = Kernel::Exponential {
            scale: 0.8,
            rate: 1.7,
        };
        for h2 in [
            Smooth2::Separable(Smooth::Sin, Smooth::SixthCube),
            Smooth2::Product,
        ] {
            check_recursions(
                p,
                KernelAverage::new(h2.clone(), k.clone()),
                KernelAverage::new(h2, as_custom(&k)),
            );
        }
    }

    fn check_recursions(p: Paths<'_>, fast: KernelAverage, slow: KernelAverage) {
        let (g, c) = (*p.grid, p.c);
        let pairs = [
            (fast.averages(p), slow.averages(p)),
            (fast.atoms(p), slow.atoms(p)),
            (fast.future_sums(p), slow.future_sums(p)),
            (
                fast.analytic_time_sums(p).unwrap(),
                slow.analytic_time_sums(p).unwrap(),
            ),
            (
                fast.analytic_malliavin_sums(p).unwrap(),
                slow.analytic_malliavin_sums(p).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
        let n = g.steps();
        let default_sums: Vec<f64> = (0..=n)
            .map(|i| (i..n).map(|m| fast.density(p, i, m)).sum::<f64>() * g.dt())
            .collect();
        for (x, y) in fast.future_sums(p).iter().zip(&default_sums) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_adapted(&fast, &g, c, c);
    }
}
