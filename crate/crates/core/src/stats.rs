//! Correlation measures used as cross-map skill.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `1 - r²` a variable is treated as collinear with the control.
pub const COLLINEARITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub value: f64,
    pub n: usize,
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation on pre-validated input, returning NaN-free output.
fn raw_pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

fn check_aligned(a: &[f64], b: &[f64], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            name: "second argument".into(),
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < min {
        return Err(Error::InsufficientData {
            required: min,
            available: a.len(),
        });
    }
    Ok(())
}

/// Product-moment correlation of two equally long, nonconstant sequences.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<CorrelationResult> {
    check_aligned(a, b, 2)?;
    if is_constant(a) {
        return Err(Error::DegenerateVariance("first argument"));
    }
    if is_constant(b) {
        return Err(Error::DegenerateVariance("second argument"));
    }
    Ok(CorrelationResult {
        value: raw_pearson(a, b),
        n: a.len(),
    })
}

/// First-order partial correlation of `a` and `b` controlling for `c`:
/// `(r_ab - r_ac r_bc) / sqrt((1 - r_ac²)(1 - r_bc²))`.
pub fn partial_corr(a: &[f64], b: &[f64], c: &[f64]) -> Result<CorrelationResult> {
    check_aligned(a, b, 3)?;
    check_aligned(a, c, 3)?;
    if is_constant(c) {
        return Err(Error::ControlDegenerate);
    }
    if is_constant(a) {
        return Err(Error::DegenerateVariance("first argument"));
    }
    if is_constant(b) {
        return Err(Error::DegenerateVariance("second argument"));
    }
    let r_ab = raw_pearson(a, b);
    let r_ac = raw_pearson(a, c);
    let r_bc = raw_pearson(b, c);
    let ra = 1.0 - r_ac * r_ac;
    let rb = 1.0 - r_bc * r_bc;
    if ra < COLLINEARITY_EPS {
        return Err(Error::Collinearity("first argument"));
    }
    if rb < COLLINEARITY_EPS {
        return Err(Error::Collinearity("second argument"));
    }
    Ok(CorrelationResult {
        value: ((r_ab - r_ac * r_bc) / (ra * rb).sqrt()).clamp(-1.0, 1.0),
        n: a.len(),
    })
}

/// Cross-map skill: Pearson without a control, partial correlation given
/// the control otherwise.
pub fn skill(estimates: &[f64], actuals: &[f64], control: Option<&[f64]>) -> Result<CorrelationResult> {
    match control {
        None => pearson(actuals, estimates),
        Some(c) => partial_corr(actuals, estimates, c),
    }
}
