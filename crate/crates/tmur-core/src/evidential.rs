//! Evidential opinion algebra.
//!
//! A non-negative evidence vector `e` over `K` classes induces a Dirichlet
//! distribution with concentration `alpha = e + 1` and Dirichlet strength
//! `S = sum(alpha)`. The associated subjective-logic opinion has beliefs
//! `b_k = e_k / S`, vacuity `u = K / S`, and expected class probabilities
//! `p_k = alpha_k / S`. Zero total evidence yields the vacuous opinion
//! (`u = 1`, uniform `p`); no epsilon flooring is applied anywhere.
//!
//! [`ScaleFamily`] models the one-parameter family `e(t) = t * r` obtained by
//! rescaling a fixed evidence pattern `r`. Scaling total evidence while
//! keeping the pattern fixed moves vacuity and expected probabilities in
//! closed form, which is what the theory checks in [`crate::theory`] verify.

use crate::error::{Result, TmurError};

/// Non-negative, finite evidence over `K >= 2` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceVector {
    values: Vec<f64>,
}

impl EvidenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(TmurError::domain(format!(
                "evidence needs at least 2 classes, got {}",
                values.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(TmurError::domain(format!(
                    "evidence[{k}] = {v} must be finite and non-negative"
                )));
            }
        }
        Ok(EvidenceVector { values })
    }

    pub fn num_classes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rescale every component by `t >= 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(TmurError::domain(format!(
                "scale factor must be finite and non-negative, got {t}"
            )));
        }
        EvidenceVector::new(self.values.iter().map(|&v| t * v).collect())
    }

    /// The Dirichlet opinion induced by this evidence.
    pub fn opinion(&self) -> DirichletOpinion {
        let k = self.values.len() as f64;
        let alpha: Vec<f64> = self.values.iter().map(|&e| e + 1.0).collect();
        let strength: f64 = alpha.iter().sum();
        DirichletOpinion {
            belief: self.values.iter().map(|&e| e / strength).collect(),
            uncertainty: k / strength,
            probabilities: alpha.iter().map(|&a| a / strength).collect(),
            alpha,
            strength,
        }
    }
}

/// A subjective-logic opinion backed by a Dirichlet distribution.
///
/// Invariant: `sum(belief) + uncertainty = 1` and `sum(probabilities) = 1`,
/// both up to floating-point rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletOpinion {
    pub belief: Vec<f64>,
    pub uncertainty: f64,
    pub probabilities: Vec<f64>,
    pub alpha: Vec<f64>,
    pub strength: f64,
}

impl DirichletOpinion {
    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Index of the most probable class; ties resolve to the lowest index.
    pub fn predicted_class(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = k;
            }
        }
        best
    }
}

/// One-parameter evidence family `e(t) = t * r` for a fixed pattern `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleFamily {
    pattern: Vec<f64>,
    total: f64,
}

impl ScaleFamily {
    /// `pattern` must be non-negative with a strictly positive sum.
    pub fn new(pattern: Vec<f64>) -> Result<Self> {
        let base = EvidenceVector::new(pattern)?;
        let total = base.total();
        if total <= 0.0 {
            return Err(TmurError::domain(
                "scale family pattern must have positive total evidence",
            ));
        }
        Ok(ScaleFamily {
            pattern: base.values,
            total,
        })
    }

    pub fn pattern(&self) -> &[f64] {
        &self.pattern
    }

    /// `R = sum_k r_k`.
    pub fn pattern_total(&self) -> f64 {
        self.total
    }

    pub fn num_classes(&self) -> usize {
        self.pattern.len()
    }

    pub fn evidence_at(&self, t: f64) -> Result<EvidenceVector> {
        self.check_t(t)?;
        EvidenceVector::new(self.pattern.iter().map(|&r| t * r).collect())
    }

    /// Vacuity along the family: `u(t) = K / (K + t R)`.
    pub fn uncertainty(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        let k = self.pattern.len() as f64;
        Ok(k / (k + t * self.total))
    }

    /// `du/dt = -K R / (K + t R)^2`, strictly negative for every `t > 0`.
    pub fn uncertainty_derivative(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        let k = self.pattern.len() as f64;
        let denom = k + t * self.total;
        Ok(-k * self.total / (denom * denom))
    }

    /// Expected probability of class `y` along the family:
    /// `p_y(t) = (1 + t r_y) / (K + t R)`.
    pub fn class_probability(&self, y: usize, t: f64) -> Result<f64> {
        self.check_class(y)?;
        self.check_t(t)?;
        let k = self.pattern.len() as f64;
        Ok((1.0 + t * self.pattern[y]) / (k + t * self.total))
    }

    /// `dp_y/dt = (K r_y - R) / (K + t R)^2`.
    ///
    /// The sign does not depend on `t`: scaling total evidence pushes `p_y`
    /// up exactly when `r_y > R / K`, i.e. when class `y` holds more than an
    /// average share of the pattern.
    pub fn class_probability_derivative(&self, y: usize, t: f64) -> Result<f64> {
        self.check_class(y)?;
        self.check_t(t)?;
        let k = self.pattern.len() as f64;
        let denom = k + t * self.total;
        Ok((k * self.pattern[y] - self.total) / (denom * denom))
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t <= 0.0 {
            return Err(TmurError::domain(format!(
                "family parameter t must be finite and positive, got {t}"
            )));
        }
        Ok(())
    }

    fn check_class(&self, y: usize) -> Result<()> {
        if y >= self.pattern.len() {
            return Err(TmurError::domain(format!(
                "class index {y} out of range for K={}",
                self.pattern.len()
            )));
        }
        Ok(())
    }
}
