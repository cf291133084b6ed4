//! Scalar building blocks: smooth functions with derivatives, bivariate
//! functions with partials, and deterministic kernels.

use std::fmt;
use std::sync::Arc;

/// Smooth `f: R -> R` with derivatives through order 3.
#[derive(Clone)]
pub enum Smooth {
    Zero,
    Constant(f64),
    /// `a * x`
    Linear(f64),
    Identity,
    /// `x^2 / 2`
    HalfSquare,
    /// `x^3 / 6`
    SixthCube,
    Sin,
    Cos,
    Exp,
    /// `max(x, 0)`; derivatives taken as the right limits away from 0.
    PositivePart,
    /// Returns `[f, f', f'', f''']`.
    Custom(Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>),
}

impl Smooth {
    /// `[f(x), f'(x), f''(x), f'''(x)]`
    pub fn jet(&self, x: f64) -> [f64; 4] {
        match self {
            Smooth::Zero => [0.0; 4],
            Smooth::Constant(c) => [*c, 0.0, 0.0, 0.0],
            Smooth::Linear(a) => [a * x, *a, 0.0, 0.0],
            Smooth::Identity => [x, 1.0, 0.0, 0.0],
            Smooth::HalfSquare => [0.5 * x * x, x, 1.0, 0.0],
            Smooth::SixthCube => [x * x * x / 6.0, 0.5 * x * x, x, 1.0],
            Smooth::Sin => [x.sin(), x.cos(), -x.sin(), -x.cos()],
            Smooth::Cos => [x.cos(), -x.sin(), -x.cos(), x.sin()],
            Smooth::Exp => [x.exp(); 4],
            Smooth::PositivePart => {
                if x > 0.0 {
                    [x, 1.0, 0.0, 0.0]
                } else {
                    [0.0; 4]
                }
            }
            Smooth::Custom(f) => f(x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        self.jet(x)[order.min(3)]
    }

    /// Looks up a catalog name used by the CLI.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "zero" => Smooth::Zero,
            "identity" => Smooth::Identity,
            "half_square" => Smooth::HalfSquare,
            "sixth_cube" => Smooth::SixthCube,
            "sin" => Smooth::Sin,
            "cos" => Smooth::Cos,
            "exp" => Smooth::Exp,
            "positive_part" => Smooth::PositivePart,
            _ => return None,
        })
    }
}

impl fmt::Debug for Smooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smooth::Custom(_) => write!(f, "Custom(..)"),
            Smooth::Constant(c) => write!(f, "Constant({c})"),
            Smooth::Linear(a) => write!(f, "Linear({a})"),
            other => write!(f, "{}", other.label()),
        }
    }
}

impl Smooth {
    fn label(&self) -> &'static str {
        match self {
            Smooth::Zero => "Zero",
            Smooth::Constant(_) => "Constant",
            Smooth::Linear(_) => "Linear",
            Smooth::Identity => "Identity",
            Smooth::HalfSquare => "HalfSquare",
            Smooth::SixthCube => "SixthCube",
            Smooth::Sin => "Sin",
            Smooth::Cos => "Cos",
            Smooth::Exp => "Exp",
            Smooth::PositivePart => "PositivePart",
            Smooth::Custom(_) => "Custom",
        }
    }
}

/// Partial derivatives of `h2(x, y)` through order 3.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Partials2 {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub xxx: f64,
    pub xxy: f64,
    pub xyy: f64,
    pub yyy: f64,
}

/// Smooth `h2: R^2 -> R`.
#[derive(Clone)]
pub enum Smooth2 {
    /// `x * y`
    Product,
    /// `y`
    SecondArg,
    /// `f(x) + g(y)`
    Separable(Smooth, Smooth),
    Custom(Arc<dyn Fn(f64, f64) -> Partials2 + Send + Sync>),
}

impl Smooth2 {
    pub fn partials(&self, x: f64, y: f64) -> Partials2 {
        match self {
            Smooth2::Product => Partials2 {
                v: x * y,
                x: y,
                y: x,
                xy: 1.0,
                ..Default::default()
            },
            Smooth2::SecondArg => Partials2 {
                v: y,
                y: 1.0,
                ..Default::default()
            },
            Smooth2::Separable(f, g) => {
                let (a, b) = (f.jet(x), g.jet(y));
                Partials2 {
                    v: a[0] + b[0],
                    x: a[1],
                    y: b[1],
                    xx: a[2],
                    yy: b[2],
                    xxx: a[3],
                    yyy: b[3],
                    ..Default::default()
                }
            }
            Smooth2::Custom(f) => f(x, y),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "product" => Smooth2::Product,
            "second" => Smooth2::SecondArg,
            _ => return None,
        })
    }
}

impl fmt::Debug for Smooth2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smooth2::Product => write!(f, "Product"),
            Smooth2::SecondArg => write!(f, "SecondArg"),
            Smooth2::Separable(a, b) => write!(f, "Separable({a:?}, {b:?})"),
            Smooth2::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Deterministic kernel `a(t, s)` for `s <= t` (`t` the later time).
#[derive(Clone)]
pub enum Kernel {
    /// `scale * exp(-rate (t - s))`; `rate = 0` gives a constant kernel.
    Exponential { scale: f64, rate: f64 },
    /// Returns `[a, ∂_t a, ∂_s a]`.
    Custom(Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>),
}

impl Kernel {
    pub fn constant(scale: f64) -> Self {
        Kernel::Exponential { scale, rate: 0.0 }
    }

    pub fn exponential(rate: f64) -> Self {
        Kernel::Exponential { scale: 1.0, rate }
    }

    /// `[a(t, s), ∂_t a(t, s), ∂_s a(t, s)]`
    pub fn jet(&self, t: f64, s: f64) -> [f64; 3] {
        match self {
            Kernel::Exponential { scale, rate } => {
                let a = scale * (-rate * (t - s)).exp();
                [a, -rate * a, rate * a]
            }
            Kernel::Custom(f) => f(t, s),
        }
    }

    pub fn value(&self, t: f64, s: f64) -> f64 {
        self.jet(t, s)[0]
    }

    /// `(scale, rate)` when the kernel is exponential, enabling O(N) recursions.
    pub fn as_exponential(&self) -> Option<(f64, f64)> {
        match self {
            Kernel::Exponential { scale, rate } => Some((*scale, *rate)),
            Kernel::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Exponential { scale, rate } => write!(f, "Exponential({scale}, {rate})"),
            Kernel::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_jet(f: &Smooth, x: f64) {
        let h = 1e-4;
        let j = f.jet(x);
        for k in 0..3 {
            let fd = (f.jet(x + h)[k] - f.jet(x - h)[k]) / (2.0 * h);
            assert!((fd - j[k + 1]).abs() < 1e-6, "{f:?} order {} at {x}", k + 1);
        }
    }

    #[test]
    fn smooth_jets_are_consistent() {
        for f in [
            Smooth::Identity,
            Smooth::HalfSquare,
            Smooth::SixthCube,
            Smooth::Sin,
            Smooth::Cos,
            Smooth::Exp,
            Smooth::Linear(2.5),
        ] {
            for x in [-1.3, 0.0, 0.7] {
                check_jet(&f, x);
            }
        }
        assert_eq!(Smooth::PositivePart.value(-0.5), 0.0);
        assert_eq!(Smooth::PositivePart.value(0.3), 0.3);
    }

    #[test]
    fn product_partials() {
        let p = Smooth2::Product.partials(2.0, 3.0);
        assert_eq!((p.v, p.x, p.y, p.xy), (6.0, 3.0, 2.0, 1.0));
        assert_eq!((p.xx, p.yy, p.xxx), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exponential_kernel_partials() {
        let k = Kernel::exponential(1.0);
        let [a, at, as_] = k.jet(1.0, 0.25);
        assert!((a - (-0.75_f64).exp()).abs() < 1e-15);
        assert!((at + a).abs() < 1e-15);
        assert!((as_ - a).abs() < 1e-15);
    }
}
