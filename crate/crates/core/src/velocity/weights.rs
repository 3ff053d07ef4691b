use crate::error::{FtlError, Result};
use crate::registry::{required_usize, Registry};

/// Tolerance on `sum_j c_j = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Anticipation weights `c_0..c_N` and rear-coupling strength `kappa`.
///
/// Invariants: `sum c_j = 1`, `c_0 >= c_1 >= ... >= c_{N-1} >= 0`,
/// `c_N = 0` exactly, `kappa >= 0`. `kappa = 0` is admitted so the
/// classical experiment without rear coupling can be reproduced.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    coeffs: Vec<f64>,
    kappa: f64,
}

impl WeightProfile {
    pub fn new(coeffs: Vec<f64>, kappa: f64) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(FtlError::InvalidWeights(format!(
                "need c_0..c_N with N >= 1, got {} coefficient(s)",
                coeffs.len()
            )));
        }
        if let Some(j) = coeffs.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(FtlError::InvalidWeights(format!(
                "c_{j} = {} must be finite and nonnegative",
                coeffs[j]
            )));
        }
        let n = coeffs.len() - 1;
        if coeffs[n] != 0.0 {
            return Err(FtlError::InvalidWeights(format!(
                "last weight c_{n} must be exactly 0, got {}",
                coeffs[n]
            )));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FtlError::InvalidWeights(format!(
                "weight-sum invariant violated: sum of c_j is {sum}, must be 1"
            )));
        }
        if let Some(j) = (1..coeffs.len()).find(|&j| coeffs[j] > coeffs[j - 1]) {
            return Err(FtlError::InvalidWeights(format!(
                "weights must be non-increasing: c_{j} = {} > c_{} = {}",
                coeffs[j],
                j - 1,
                coeffs[j - 1]
            )));
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(FtlError::InvalidWeights(format!(
                "kappa must be finite and nonnegative, got {kappa}"
            )));
        }
        Ok(Self { coeffs, kappa })
    }

    /// `c_j = 1/n` for `j < n`, `c_n = 0` (so `N = n`).
    pub fn uniform(n: usize, kappa: f64) -> Result<Self> {
        Self::new(uniform_coeffs(n)?, kappa)
    }

    /// The classical Follow-the-Leader weights `c = (1, 0)`.
    pub fn classical(kappa: f64) -> Result<Self> {
        Self::new(vec![1.0, 0.0], kappa)
    }

    /// Rescale `raw` to unit sum and pad with zeros up to `c_n`.
    pub fn renormalized(raw: &[f64], n: usize, kappa: f64) -> Result<Self> {
        if raw.len() > n {
            return Err(FtlError::InvalidWeights(format!(
                "{} raw weights do not fit below c_{n}",
                raw.len()
            )));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(FtlError::InvalidWeights("raw weights sum to zero".into()));
        }
        let mut coeffs: Vec<f64> = raw.iter().map(|c| c / total).collect();
        coeffs.resize(n + 1, 0.0);
        // Absorb the rounding residue in c_0 so the unit-sum check is exact.
        let residue = 1.0 - coeffs.iter().sum::<f64>();
        coeffs[0] += residue;
        Self::new(coeffs, kappa)
    }

    /// Build from a registry spec (`uniform:<n>`, `linear:<n>`) or an
    /// explicit comma-separated list.
    pub fn from_spec(spec: &str, kappa: f64) -> Result<Self> {
        let spec = spec.trim();
        if spec.contains(',') || spec.parse::<f64>().is_ok() {
            let coeffs = spec
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        FtlError::InvalidWeights(format!("cannot parse weight `{}`", s.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::new(coeffs, kappa);
        }
        Self::new(weight_registry().resolve(spec)?, kappa)
    }

    /// Stencil reach N (index of the last, zero, weight).
    pub fn n(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// No rear coupling: the setting of the oscillation experiment.
    pub fn is_experiment_mode(&self) -> bool {
        self.kappa == 0.0
    }

    /// Comma-separated coefficients, parseable by [`WeightProfile::from_spec`].
    pub fn to_spec(&self) -> String {
        self.coeffs
            .iter()
            .map(|c| format!("{c:?}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn uniform_coeffs(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(FtlError::InvalidWeights("uniform weights need n >= 1".into()));
    }
    let mut c = vec![1.0 / n as f64; n];
    c.push(0.0);
    Ok(c)
}

/// `c_j` proportional to `n - j` for `j < n`.
fn linear_coeffs(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(FtlError::InvalidWeights("linear weights need n >= 1".into()));
    }
    let total = (n * (n + 1) / 2) as f64;
    let mut c: Vec<f64> = (0..n).map(|j| (n - j) as f64 / total).collect();
    let residue = 1.0 - c.iter().sum::<f64>();
    c[0] += residue;
    c.push(0.0);
    Ok(c)
}

/// Weight schemes by name: `uniform:<n>`, `linear:<n>`.
pub fn weight_registry() -> Registry<Vec<f64>> {
    let mut reg = Registry::new("weight scheme");
    reg.register("uniform", |arg| uniform_coeffs(required_usize("uniform", arg)?));
    reg.register("linear", |arg| linear_coeffs(required_usize("linear", arg)?));
    reg
}
