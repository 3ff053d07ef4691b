//! Arithmetic on periodic sequences: shift differences, the weighted
//! look-ahead mean, total variation and weighted L1 distances.
//!
//! Every index is taken modulo the period with a nonnegative remainder, so
//! `a.at(-1)` is the last entry.

use crate::error::{FtlError, Result};
use crate::velocity::WeightProfile;

/// Reductions longer than this use compensated summation.
pub const COMPENSATED_SUM_THRESHOLD: usize = 1024;

/// Sum of a slice; compensated (Neumaier) above [`COMPENSATED_SUM_THRESHOLD`].
pub fn stable_sum(values: &[f64]) -> f64 {
    if values.len() <= COMPENSATED_SUM_THRESHOLD {
        return values.iter().sum();
    }
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// A finite real sequence extended periodically to all integer indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSeq {
    values: Vec<f64>,
}

impl PeriodicSeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FtlError::InvalidSequence("period must be at least 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FtlError::InvalidSequence(format!("entry {i} is not finite")));
        }
        Ok(Self { values })
    }

    /// Build without validation; callers guarantee a nonempty finite input.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self { values }
    }

    pub fn from_fn(period: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..period).map(f).collect())
    }

    pub fn constant(period: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; period])
    }

    /// The period M.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Entry at an arbitrary integer index.
    #[inline]
    pub fn at(&self, i: isize) -> f64 {
        let m = self.values.len() as isize;
        self.values[i.rem_euclid(m) as usize]
    }

    pub fn sum(&self) -> f64 {
        stable_sum(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicSeq {
        PeriodicSeq::from_vec(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Entrywise combination of two sequences of equal period.
    pub fn zip_with(&self, other: &PeriodicSeq, f: impl Fn(f64, f64) -> f64) -> Result<PeriodicSeq> {
        check_len(self.len(), other.len())?;
        Ok(PeriodicSeq::from_vec(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Cyclic shift: `result[i] = self[i + shift]`.
    pub fn shifted(&self, shift: isize) -> PeriodicSeq {
        let m = self.len();
        PeriodicSeq::from_vec((0..m).map(|i| self.at(i as isize + shift)).collect())
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(FtlError::LengthMismatch { left, right })
    }
}

/// Forward difference `a[i+1] - a[i]`.
pub fn delta_plus(a: &PeriodicSeq) -> PeriodicSeq {
    let m = a.len() as isize;
    PeriodicSeq::from_vec((0..m).map(|i| a.at(i + 1) - a.at(i)).collect())
}

/// Backward difference `a[i] - a[i-1]`.
pub fn delta_minus(a: &PeriodicSeq) -> PeriodicSeq {
    let m = a.len() as isize;
    PeriodicSeq::from_vec((0..m).map(|i| a.at(i) - a.at(i - 1)).collect())
}

/// Weighted look-ahead mean `sum_j c_j a[i+j]`.
pub fn bar(a: &PeriodicSeq, w: &WeightProfile) -> PeriodicSeq {
    let m = a.len() as isize;
    let c = w.coeffs();
    PeriodicSeq::from_vec(
        (0..m)
            .map(|i| {
                c.iter()
                    .enumerate()
                    .map(|(j, &cj)| cj * a.at(i + j as isize))
                    .sum()
            })
            .collect(),
    )
}

/// Total variation over one period, including the wrap-around jump.
pub fn tv_periodic(a: &PeriodicSeq) -> f64 {
    let m = a.len() as isize;
    let jumps: Vec<f64> = (0..m).map(|i| (a.at(i) - a.at(i - 1)).abs()).collect();
    stable_sum(&jumps)
}

/// `sum_i weights[i] * |a[i] - b[i]|`.
pub fn l1_weighted(a: &PeriodicSeq, b: &PeriodicSeq, weights: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    check_len(a.len(), weights.len())?;
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0)) {
        return Err(FtlError::Domain(format!("cell measure {i} is negative")));
    }
    let terms: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .zip(weights)
        .map(|((x, y), w)| w * (x - y).abs())
        .collect();
    Ok(stable_sum(&terms))
}
