use std::fmt;
use std::sync::Arc;

use super::{VelocityLaw, VelocityModel};
use crate::error::{FtlError, Result};
use crate::registry::{no_argument, required_f64, Registry};

/// Smoothing width used for the C^2 stand-in of `|s - k|`.
pub const DEFAULT_SMOOTHING_WIDTH: f64 = 1e-3;

const FLUX_QUADRATURE_INTERVALS: usize = 2_000;
const DISSIPATION_QUADRATURE_INTERVALS: usize = 10_000;

/// A convex entropy `eta`.
pub trait Entropy: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn eta(&self, s: f64) -> f64;

    fn eta_prime(&self, s: f64) -> f64;

    /// `Some((k, left, right))` when `eta'` equals `left` below `k` and
    /// `right` above it; fluxes then have closed forms.
    fn kink(&self) -> Option<(f64, f64, f64)> {
        None
    }
}

/// `eta(s) = s^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl Entropy for Quadratic {
    fn name(&self) -> String {
        "square".into()
    }
    fn eta(&self, s: f64) -> f64 {
        s * s
    }
    fn eta_prime(&self, s: f64) -> f64 {
        2.0 * s
    }
}

/// `eta(s) = |s - k|` with `eta'(s) = sign(s - k)`.
#[derive(Debug, Clone, Copy)]
pub struct Kruzkov {
    pub k: f64,
}

impl Entropy for Kruzkov {
    fn name(&self) -> String {
        format!("kruzkov:{}", self.k)
    }
    fn eta(&self, s: f64) -> f64 {
        (s - self.k).abs()
    }
    fn eta_prime(&self, s: f64) -> f64 {
        sign(s - self.k)
    }
    fn kink(&self) -> Option<(f64, f64, f64)> {
        Some((self.k, -1.0, 1.0))
    }
}

/// `eta(s) = sqrt((s - k)^2 + w^2) - w`, a C^2 approximation of `|s - k|`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothKruzkov {
    pub k: f64,
    pub width: f64,
}

impl Entropy for SmoothKruzkov {
    fn name(&self) -> String {
        format!("smooth-kruzkov:{}", self.k)
    }
    fn eta(&self, s: f64) -> f64 {
        let d = s - self.k;
        (d * d + self.width * self.width).sqrt() - self.width
    }
    fn eta_prime(&self, s: f64) -> f64 {
        let d = s - self.k;
        d / (d * d + self.width * self.width).sqrt()
    }
}

/// `eta(s) = (s - k)^+`.
#[derive(Debug, Clone, Copy)]
pub struct PositivePart {
    pub k: f64,
}

impl Entropy for PositivePart {
    fn name(&self) -> String {
        format!("plus:{}", self.k)
    }
    fn eta(&self, s: f64) -> f64 {
        (s - self.k).max(0.0)
    }
    fn eta_prime(&self, s: f64) -> f64 {
        if s > self.k {
            1.0
        } else {
            0.0
        }
    }
    fn kink(&self) -> Option<(f64, f64, f64)> {
        Some((self.k, 0.0, 1.0))
    }
}

/// `eta(s) = (s - k)^-`.
#[derive(Debug, Clone, Copy)]
pub struct NegativePart {
    pub k: f64,
}

impl Entropy for NegativePart {
    fn name(&self) -> String {
        format!("minus:{}", self.k)
    }
    fn eta(&self, s: f64) -> f64 {
        (self.k - s).max(0.0)
    }
    fn eta_prime(&self, s: f64) -> f64 {
        if s < self.k {
            -1.0
        } else {
            0.0
        }
    }
    fn kink(&self) -> Option<(f64, f64, f64)> {
        Some((self.k, -1.0, 0.0))
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Composite Simpson rule with `n` (even) intervals.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// An entropy together with its Eulerian flux `q` (`q' = eta' f'`) and
/// Lagrangian flux `Q` (`Q' = eta' V'`).
#[derive(Debug, Clone)]
pub struct EntropyPair {
    entropy: Arc<dyn Entropy>,
    model: VelocityModel,
}

impl EntropyPair {
    pub fn new(entropy: Arc<dyn Entropy>, model: VelocityModel) -> Self {
        Self { entropy, model }
    }

    pub fn name(&self) -> String {
        self.entropy.name()
    }

    pub fn entropy(&self) -> &dyn Entropy {
        self.entropy.as_ref()
    }

    pub fn model(&self) -> &dyn VelocityLaw {
        self.model.as_ref()
    }

    pub fn eta(&self, s: f64) -> f64 {
        self.entropy.eta(s)
    }

    pub fn eta_prime(&self, s: f64) -> f64 {
        self.entropy.eta_prime(s)
    }

    /// Eulerian entropy flux `q(rho)`.
    pub fn q(&self, rho: f64) -> f64 {
        let m = self.model.as_ref();
        match self.entropy.kink() {
            Some(kink) => kinked_flux(kink, rho, |r| m.flux(r)),
            None => simpson(
                |s| self.entropy.eta_prime(s) * m.flux_deriv(s),
                0.0,
                rho,
                FLUX_QUADRATURE_INTERVALS,
            ),
        }
    }

    /// Lagrangian entropy flux `Q(y)`.
    pub fn big_q(&self, y: f64) -> f64 {
        let m = self.model.as_ref();
        match self.entropy.kink() {
            Some(kink) => kinked_flux(kink, y, |z| m.lagrangian(z)),
            None => simpson(
                |s| self.entropy.eta_prime(s) * m.lagrangian_deriv(s),
                1.0,
                y,
                FLUX_QUADRATURE_INTERVALS,
            ),
        }
    }
}

/// `int_k^s eta'(r) g'(r) dr` for piecewise-constant `eta'`.
fn kinked_flux((k, left, right): (f64, f64, f64), s: f64, g: impl Fn(f64) -> f64) -> f64 {
    let slope = if s > k {
        right
    } else if s < k {
        left
    } else {
        return 0.0;
    };
    slope * (g(s) - g(k))
}

/// Kruzkov pair `eta(s) = |s - k|` with the closed-form fluxes
/// `q(rho) = sign(rho - k)(f(rho) - f(k))` and `Q(y) = sign(y - k)(V(y) - V(k))`.
pub fn kruzkov_pair(m: &VelocityModel, k: f64) -> EntropyPair {
    EntropyPair::new(Arc::new(Kruzkov { k }), m.clone())
}

/// Dissipation kernel `H(a, b) = int_a^b (eta'(s) - eta'(a)) V'(s) ds`,
/// nonnegative for convex `eta` and non-decreasing `V`.
pub fn dissipation_h(pair: &EntropyPair, a: f64, b: f64) -> Result<f64> {
    if !(a >= 1.0) || !(b >= 1.0) {
        return Err(FtlError::Domain(format!(
            "Lagrangian arguments must be >= 1, got a = {a}, b = {b}"
        )));
    }
    let m = pair.model();
    let base = pair.eta_prime(a);
    Ok(simpson(
        |s| (pair.eta_prime(s) - base) * m.lagrangian_deriv(s),
        a,
        b,
        DISSIPATION_QUADRATURE_INTERVALS,
    ))
}

/// Entropies by name: `square`, `kruzkov:<k>`, `smooth-kruzkov:<k>`,
/// `plus:<k>`, `minus:<k>`.
pub fn entropy_registry() -> Registry<Arc<dyn Entropy>> {
    let mut reg: Registry<Arc<dyn Entropy>> = Registry::new("entropy");
    reg.register("square", |arg| {
        no_argument("square", arg)?;
        Ok(Arc::new(Quadratic))
    });
    reg.register("kruzkov", |arg| {
        Ok(Arc::new(Kruzkov {
            k: required_f64("kruzkov", arg)?,
        }))
    });
    reg.register("smooth-kruzkov", |arg| {
        Ok(Arc::new(SmoothKruzkov {
            k: required_f64("smooth-kruzkov", arg)?,
            width: DEFAULT_SMOOTHING_WIDTH,
        }))
    });
    reg.register("plus", |arg| {
        Ok(Arc::new(PositivePart {
            k: required_f64("plus", arg)?,
        }))
    });
    reg.register("minus", |arg| {
        Ok(Arc::new(NegativePart {
            k: required_f64("minus", arg)?,
        }))
    });
    reg
}
