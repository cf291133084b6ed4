use crate::functionals::running_argmax;
use crate::grid::TimeGrid;

/// Adapted statistic of the Brownian path at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feature {
    /// `w_t`
    W,
    /// `t`
    Time,
    /// `∫_0^t w ds`
    IntW,
    /// `max_{s<=t} w_s`
    MaxW,
    /// time of the running argmax
    ArgMax,
    /// `∫_0^t e^{-rate (t - s)} w_s ds`
    ExpAvg(f64),
}

impl Feature {
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "w" => Feature::W,
            "time" => Feature::Time,
            "int_w" => Feature::IntW,
            "max_w" => Feature::MaxW,
            "argmax" => Feature::ArgMax,
            _ => {
                let rate = name.strip_prefix("exp_avg_")?.parse().ok()?;
                Feature::ExpAvg(rate)
            }
        })
    }

    /// Values at every node of one path.
    pub fn along(&self, grid: &TimeGrid, w: &[f64]) -> Vec<f64> {
        let dt = grid.dt();
        match *self {
            Feature::W => w.to_vec(),
            Feature::Time => grid.times().collect(),
            Feature::IntW => crate::functionals::running_integral(w, dt),
            Feature::MaxW => {
                let mut m = f64::NEG_INFINITY;
                w.iter()
                    .map(|v| {
                        m = m.max(*v);
                        m
                    })
                    .collect()
            }
            Feature::ArgMax => running_argmax(w)
                .into_iter()
                .map(|i| grid.time(i))
                .collect(),
            Feature::ExpAvg(rate) => {
                let q = (-rate * dt).exp();
                let mut acc = 0.0;
                w.iter()
                    .map(|v| {
                        acc = q * acc + v * dt;
                        acc
                    })
                    .collect()
            }
        }
    }
}

/// Monomials of total degree `<= degree` in the selected features.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    features: Vec<Feature>,
    degree: usize,
    exponents: Vec<Vec<u32>>,
}

impl Basis {
    pub fn new(features: Vec<Feature>, degree: usize) -> Self {
        let mut exponents = Vec::new();
        let mut current = vec![0u32; features.len()];
        enumerate(&mut current, 0, degree as u32, &mut exponents);
        exponents.sort_by_key(|e| e.iter().sum::<u32>());
        Self {
            features,
            degree,
            exponents,
        }
    }

    /// Polynomials of degree `<= 3` in `(w_t, ∫_0^t w ds, max_{s<=t} w_s)`.
    pub fn standard() -> Self {
        Self::new(vec![Feature::W, Feature::IntW, Feature::MaxW], 3)
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    /// Writes the basis row for standardised features `x` into `out`.
    pub fn row(&self, x: &[f64], out: &mut [f64]) {
        let d = self.degree;
        let mut powers = vec![1.0; x.len() * (d + 1)];
        for (f, xv) in x.iter().enumerate() {
            for k in 1..=d {
                powers[f * (d + 1) + k] = powers[f * (d + 1) + k - 1] * xv;
            }
        }
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = e
                .iter()
                .enumerate()
                .map(|(f, k)| powers[f * (d + 1) + *k as usize])
                .product();
        }
    }
}

fn enumerate(current: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for k in 0..=left {
        current[pos] = k;
        enumerate(current, pos + 1, left - k, out);
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_basis_has_twenty_terms() {
        let b = Basis::standard();
        assert_eq!(b.dimension(), 20);
        let mut row = vec![0.0; 20];
        b.row(&[2.0, 3.0, 5.0], &mut row);
        assert_eq!(row[0], 1.0);
        assert!(row.contains(&30.0));
        assert!(row.contains(&125.0));
    }

    #[test]
    fn features_are_adapted() {
        let g = TimeGrid::new(1.0, 6).unwrap();
        let w = [0.0, 0.5, -0.2, 0.9, 0.9, 0.1, 0.3];
        assert_eq!(Feature::MaxW.along(&g, &w)[4], 0.9);
        assert!((Feature::ArgMax.along(&g, &w)[5] - g.time(3)).abs() < 1e-15);
        let int = Feature::IntW.along(&g, &w);
        assert!((int[2] - 0.3 * g.dt()).abs() < 1e-15);
        let ex = Feature::ExpAvg(0.0).along(&g, &w);
        assert!((ex[6] - int[6]).abs() < 1e-15);
        assert_eq!(Feature::by_name("exp_avg_1.5"), Some(Feature::ExpAvg(1.5)));
    }
}
