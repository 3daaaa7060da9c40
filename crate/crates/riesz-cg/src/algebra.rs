//! The algebra of sampled functions on a finite measure space.
//!
//! A function is represented by one value per sample point; each sample
//! carries a nonnegative measure weight. "Almost everywhere" statements
//! become statements over the samples with positive weight: a sample with
//! zero weight is a null set and never affects order, equality, or
//! invertibility. All arithmetic is pointwise, so the discrete ring is an
//! exact model of the continuous one on its sample set.
//!
//! Order structure:
//! * `is_geq_zero`: nonnegative on every positive-weight sample.
//! * `is_strictly_positive`: above tolerance on every positive-weight sample;
//!   such elements are invertible.
//! * `in_s`: one-signed (strictly positive or strictly negative), the
//!   multiplicative set in which the solver's divisions are legal.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};

/// A finite set of sample points with nonnegative measure weights.
///
/// Shared by reference between all elements defined on it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    weights: Vec<f64>,
    labels: Option<Vec<String>>,
    positive: Vec<usize>,
    total: f64,
}

impl MeasureSpace {
    /// Builds a space from measure weights. At least one weight must be
    /// strictly positive and none may be negative or non-finite.
    pub fn new(weights: Vec<f64>, labels: Option<Vec<String>>) -> Result<Arc<Self>> {
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteValue { index, value: w });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, weight: w });
            }
        }
        let positive: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if positive.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let Some(ref l) = labels {
            if l.len() != weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: weights.len(),
                    got: l.len(),
                });
            }
        }
        let total = weights.iter().sum();
        Ok(Arc::new(Self {
            weights,
            labels,
            positive,
            total,
        }))
    }

    /// Uniform unit weights on `m` samples.
    pub fn uniform(m: usize) -> Result<Arc<Self>> {
        Self::new(vec![1.0; m], None)
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Indices of the samples with strictly positive weight.
    pub fn positive_indices(&self) -> &[usize] {
        &self.positive
    }

    /// Total measure of the space.
    pub fn total_measure(&self) -> f64 {
        self.total
    }
}

/// Two elements interoperate when their spaces are the same allocation or
/// carry identical weights.
pub(crate) fn same_space(a: &Arc<MeasureSpace>, b: &Arc<MeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || a.weights == b.weights
}

/// Tolerance policy for the almost-everywhere predicates.
///
/// The resolved cutoff is `tau_zero * max(1, max |value|)` over the operands
/// when `relative` is set, and plain `tau_zero` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub tau_zero: f64,
    pub relative: bool,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            tau_zero: 1e-12,
            relative: true,
        }
    }
}

impl ToleranceConfig {
    pub fn absolute(tau_zero: f64) -> Self {
        Self {
            tau_zero,
            relative: false,
        }
    }

    /// Cutoff for predicates over the given operands.
    pub fn resolve(&self, operands: &[&AlgebraElement]) -> f64 {
        if !self.relative {
            return self.tau_zero;
        }
        let mut scale = 1.0_f64;
        for e in operands {
            scale = scale.max(e.max_abs());
        }
        self.tau_zero * scale
    }
}

/// One sampled function: a value per sample point of a shared space.
///
/// Values are finite by construction and the element is immutable, so
/// sharing across threads is free.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    space: Arc<MeasureSpace>,
    values: Vec<f64>,
}

impl AlgebraElement {
    /// Wraps a value array. Length must match the space and every value must
    /// be finite.
    pub fn from_values(space: &Arc<MeasureSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index, value: v });
            }
        }
        Ok(Self {
            space: Arc::clone(space),
            values,
        })
    }

    /// The constant function embedding a real number.
    pub fn constant(space: &Arc<MeasureSpace>, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteValue { index: 0, value });
        }
        Ok(Self {
            space: Arc::clone(space),
            values: vec![value; space.len()],
        })
    }

    pub fn zero(space: &Arc<MeasureSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            values: vec![0.0; space.len()],
        }
    }

    pub fn one(space: &Arc<MeasureSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            values: vec![1.0; space.len()],
        }
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, sample: usize) -> f64 {
        self.values[sample]
    }

    /// Largest absolute value over all samples (null samples included; used
    /// for tolerance scaling, not for order decisions).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    fn unary(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: exec::map(ExecMode::Auto, &self.values, f),
        }
    }

    fn binary(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: Arc::clone(&self.space),
            values: exec::zip_map(ExecMode::Auto, &self.values, &other.values, f),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binary(other, |a, b| a * b)
    }

    pub fn neg(&self) -> Self {
        self.unary(|a| -a)
    }

    pub fn scalar_mul(&self, r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::NonFiniteValue { index: 0, value: r });
        }
        Ok(self.unary(|a| r * a))
    }

    /// Pointwise maximum.
    pub fn sup(&self, other: &Self) -> Result<Self> {
        self.binary(other, f64::max)
    }

    /// Pointwise minimum.
    pub fn inf(&self, other: &Self) -> Result<Self> {
        self.binary(other, f64::min)
    }

    /// Pointwise absolute value, the lattice element `sup(a, -a)`.
    pub fn abs(&self) -> Self {
        self.unary(f64::abs)
    }

    /// Nonnegative outside a null set.
    pub fn is_geq_zero(&self, tol: &ToleranceConfig) -> bool {
        let tau = tol.resolve(&[self]);
        self.space
            .positive_indices()
            .iter()
            .all(|&i| self.values[i] >= -tau)
    }

    /// Strictly positive outside a null set; such elements are invertible.
    pub fn is_strictly_positive(&self, tol: &ToleranceConfig) -> bool {
        let tau = tol.resolve(&[self]);
        self.space
            .positive_indices()
            .iter()
            .all(|&i| self.values[i] > tau)
    }

    /// Membership in the one-signed set: strictly positive or strictly
    /// negative almost everywhere.
    pub fn in_s(&self, tol: &ToleranceConfig) -> bool {
        self.s_violations(tol).is_empty()
    }

    /// Witness samples blocking one-signedness: empty iff `in_s` holds.
    ///
    /// Of the two sign options, reports the blockers of the option that is
    /// closer to holding, so the list is the smallest set of samples whose
    /// sign is at odds with the rest.
    pub fn s_violations(&self, tol: &ToleranceConfig) -> Vec<usize> {
        let tau = tol.resolve(&[self]);
        let mut blocks_positive = Vec::new();
        let mut blocks_negative = Vec::new();
        for &i in self.space.positive_indices() {
            if self.values[i] <= tau {
                blocks_positive.push(i);
            }
            if self.values[i] >= -tau {
                blocks_negative.push(i);
            }
        }
        if blocks_positive.is_empty() || blocks_negative.is_empty() {
            return Vec::new();
        }
        if blocks_positive.len() <= blocks_negative.len() {
            blocks_positive
        } else {
            blocks_negative
        }
    }

    /// Pointwise reciprocal of a one-signed element. Null samples are set to
    /// zero so the result stays a total function with a canonical
    /// representative.
    pub fn invert(&self, tol: &ToleranceConfig) -> Result<Self> {
        let witnesses = self.s_violations(tol);
        if !witnesses.is_empty() {
            return Err(Error::NotInvertible { samples: witnesses });
        }
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(self.space.weights())
            .map(|(&v, &w)| if w > 0.0 { 1.0 / v } else { 0.0 })
            .collect();
        Self::from_values(&self.space, values)
    }

    /// Pointwise square root of a strictly positive element. Null samples
    /// are clamped to zero before the root so the output is total.
    pub fn sqrt_strict(&self, tol: &ToleranceConfig) -> Result<Self> {
        let tau = tol.resolve(&[self]);
        let witnesses: Vec<usize> = self
            .space
            .positive_indices()
            .iter()
            .copied()
            .filter(|&i| self.values[i] <= tau)
            .collect();
        if !witnesses.is_empty() {
            return Err(Error::NotStrictlyPositive { samples: witnesses });
        }
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(self.space.weights())
            .map(|(&v, &w)| if w > 0.0 { v.sqrt() } else { v.max(0.0).sqrt() })
            .collect();
        Self::from_values(&self.space, values)
    }

    /// Equality outside a null set, up to tolerance.
    pub fn ae_equal(&self, other: &Self, tol: &ToleranceConfig) -> Result<bool> {
        self.check_space(other)?;
        let tau = tol.resolve(&[self, other]);
        Ok(self
            .space
            .positive_indices()
            .iter()
            .all(|&i| (self.values[i] - other.values[i]).abs() <= tau))
    }

    /// Zero outside a null set, up to tolerance.
    pub fn is_ae_zero(&self, tol: &ToleranceConfig) -> bool {
        let tau = tol.resolve(&[self]);
        self.space
            .positive_indices()
            .iter()
            .all(|&i| self.values[i].abs() <= tau)
    }

    /// Maximum value over the positive-weight samples.
    pub fn sup_over_space(&self) -> f64 {
        self.space
            .positive_indices()
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum value over the positive-weight samples.
    pub fn inf_over_space(&self) -> f64 {
        self.space
            .positive_indices()
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }
}
