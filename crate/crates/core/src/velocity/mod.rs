//! Velocity laws, their Lagrangian form `V(y) = v(1/y)`, the LWR flux,
//! anticipation weights and entropy/entropy-flux pairs.

mod entropy;
mod weights;

use std::fmt;
use std::sync::Arc;

pub use entropy::{
    dissipation_h, entropy_registry, kruzkov_pair, Entropy, EntropyPair, Kruzkov, NegativePart,
    PositivePart, Quadratic, SmoothKruzkov, DEFAULT_SMOOTHING_WIDTH,
};
pub use weights::{weight_registry, WeightProfile, WEIGHT_SUM_TOL};

use crate::error::{FtlError, Result};
use crate::registry::{no_argument, required_f64, Registry};

/// A Lipschitz, non-increasing velocity law `v: [0,1] -> [0,1]` with
/// `v(0) = 1` and `v(1) = 0`.
pub trait VelocityLaw: Send + Sync + fmt::Debug {
    /// Registry spec string that rebuilds this law.
    fn name(&self) -> String;

    fn eval(&self, rho: f64) -> f64;

    /// `v'(rho)`, one-sided at the endpoints.
    fn deriv(&self, rho: f64) -> f64;

    /// `sup |v'|`.
    fn lip(&self) -> f64;

    /// Location of the flux maximum when `rho v(rho)` is unimodal on `[0,1]`.
    /// `None` makes flux extrema fall back to golden-section search.
    fn flux_peak(&self) -> Option<f64> {
        None
    }

    /// Upper bound on `|f'|` over `[0,1]`, used for the CFL restriction.
    fn max_char_speed(&self) -> f64 {
        1.0 + self.lip()
    }

    /// `V(y) = v(1/y)` for `y >= 1`; no domain check.
    fn lagrangian(&self, y: f64) -> f64 {
        self.eval(1.0 / y)
    }

    /// `V'(y) = -v'(1/y) / y^2`.
    fn lagrangian_deriv(&self, y: f64) -> f64 {
        -self.deriv(1.0 / y) / (y * y)
    }

    /// `f(rho) = rho v(rho)`; no domain check.
    fn flux(&self, rho: f64) -> f64 {
        rho * self.eval(rho)
    }

    fn flux_deriv(&self, rho: f64) -> f64 {
        self.eval(rho) + rho * self.deriv(rho)
    }
}

/// Shared handle to a velocity law.
pub type VelocityModel = Arc<dyn VelocityLaw>;

/// `v(rho) = 1 - rho`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greenshields;

impl VelocityLaw for Greenshields {
    fn name(&self) -> String {
        "greenshields".into()
    }

    fn eval(&self, rho: f64) -> f64 {
        1.0 - rho
    }

    fn deriv(&self, _rho: f64) -> f64 {
        -1.0
    }

    fn lip(&self) -> f64 {
        1.0
    }

    fn flux_peak(&self) -> Option<f64> {
        Some(0.5)
    }

    fn max_char_speed(&self) -> f64 {
        1.0
    }
}

/// `v(rho) = (1 - rho)^p` with `p >= 1`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    exponent: f64,
}

impl PowerLaw {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0) || !exponent.is_finite() {
            return Err(FtlError::InvalidModel(format!(
                "power law exponent must be a finite number >= 1, got {exponent}"
            )));
        }
        Ok(Self { exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl VelocityLaw for PowerLaw {
    fn name(&self) -> String {
        format!("power:{}", self.exponent)
    }

    fn eval(&self, rho: f64) -> f64 {
        (1.0 - rho).max(0.0).powf(self.exponent)
    }

    fn deriv(&self, rho: f64) -> f64 {
        -self.exponent * (1.0 - rho).max(0.0).powf(self.exponent - 1.0)
    }

    fn lip(&self) -> f64 {
        self.exponent
    }

    fn flux_peak(&self) -> Option<f64> {
        Some(1.0 / (1.0 + self.exponent))
    }

    // |f'| peaks at rho = 0 with value 1; the interior minimum of f' is
    // -((p-1)/(p+1))^(p-1) >= -1.
    fn max_char_speed(&self) -> f64 {
        1.0
    }
}

pub fn greenshields() -> VelocityModel {
    Arc::new(Greenshields)
}

pub fn power_law(p: f64) -> Result<VelocityModel> {
    Ok(Arc::new(PowerLaw::new(p)?))
}

/// `V(y) = v(1/y)`; rejects `y < 1` (density above jam).
pub fn lagrangian_velocity(m: &dyn VelocityLaw, y: f64) -> Result<f64> {
    if !(y >= 1.0) {
        return Err(FtlError::Domain(format!(
            "spacing y = {y} is below 1 (density above jam)"
        )));
    }
    Ok(m.lagrangian(y))
}

/// `f(rho) = rho v(rho)` for `rho` in `[0,1]`.
pub fn flux(m: &dyn VelocityLaw, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(FtlError::Domain(format!("density {rho} outside [0,1]")));
    }
    Ok(m.flux(rho))
}

/// Spot-check the velocity-law axioms on a 1001-point grid.
pub fn check_axioms(m: &dyn VelocityLaw) -> Result<()> {
    let name = m.name();
    if (m.eval(0.0) - 1.0).abs() > 1e-12 {
        return Err(FtlError::InvalidModel(format!("{name}: v(0) = {} != 1", m.eval(0.0))));
    }
    if m.eval(1.0).abs() > 1e-12 {
        return Err(FtlError::InvalidModel(format!("{name}: v(1) = {} != 0", m.eval(1.0))));
    }
    let lip = m.lip();
    if !(lip > 0.0) || !lip.is_finite() {
        return Err(FtlError::InvalidModel(format!("{name}: Lipschitz constant {lip}")));
    }
    let n = 1000;
    for k in 0..n {
        let (r0, r1) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
        let (v0, v1) = (m.eval(r0), m.eval(r1));
        if v1 > v0 + 1e-15 {
            return Err(FtlError::InvalidModel(format!("{name}: increasing near rho = {r0}")));
        }
        if (v0 - v1).abs() > lip * (r1 - r0) * (1.0 + 1e-12) {
            return Err(FtlError::InvalidModel(format!(
                "{name}: Lipschitz bound {lip} violated near rho = {r0}"
            )));
        }
    }
    Ok(())
}

/// Velocity laws by name: `greenshields`, `power:<p>`.
pub fn velocity_registry() -> Registry<VelocityModel> {
    let mut reg = Registry::new("velocity model");
    reg.register("greenshields", |arg| {
        no_argument("greenshields", arg)?;
        Ok(greenshields())
    });
    reg.register("power", |arg| power_law(required_f64("power", arg)?));
    reg
}
