//! Symmetric memoryless quantizers.
//!
//! A quantizer is defined by its positive breakpoints 0 = d_0 < d_1 < ... <
//! d_M' and one representative value per positive subsection (d_{j-1}, d_j].
//! The negative side mirrors the positive side and q(0) = 0, so odd symmetry
//! q(-y) = -q(y) holds exactly. Inputs beyond d_M' clamp into the outermost
//! subsection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    /// d_0 = 0, d_1, ..., d_M' (positive half; symmetry implied)
    breakpoints: Vec<f64>,
    /// representative of (d_{j-1}, d_j] for j = 1..M'
    reps: Vec<f64>,
}

/// Which representative rule a constructor should apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepsRule {
    Midpoint,
    BiasFree,
}

impl Quantizer {
    pub fn new(breakpoints: Vec<f64>, reps: Vec<f64>) -> Result<Self> {
        validate_breakpoints(&breakpoints)?;
        if reps.len() + 1 != breakpoints.len() {
            return Err(Error::DimensionMismatch {
                expected: breakpoints.len() - 1,
                got: reps.len(),
            });
        }
        for (j, &r) in reps.iter().enumerate() {
            if !(r > breakpoints[j] && r <= breakpoints[j + 1]) {
                return Err(Error::RepresentativeOutsideCell { index: j + 1 });
            }
        }
        Ok(Quantizer { breakpoints, reps })
    }

    pub fn from_breakpoints(breakpoints: Vec<f64>, rule: RepsRule) -> Result<Self> {
        let reps = match rule {
            RepsRule::Midpoint => midpoint_reps(&breakpoints)?,
            RepsRule::BiasFree => bias_free_reps(&breakpoints)?,
        };
        Quantizer::new(breakpoints, reps)
    }

    /// Breakpoints of the positive half, starting at d_0 = 0.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn reps(&self) -> &[f64] {
        &self.reps
    }

    /// Number of positive subsections M'.
    pub fn m_prime(&self) -> usize {
        self.reps.len()
    }

    /// Outer boundary d_M'.
    pub fn outer_bound(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Largest subsection width.
    pub fn max_width(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// q(y): representative of the subsection containing y, clamped into the
    /// outermost subsection beyond d_M'; exactly odd.
    pub fn quantize(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        let s = y.abs();
        // first breakpoint >= s among d_1.. ; the cell (d_{j-1}, d_j] has index j-1 in reps
        let inner = &self.breakpoints[1..];
        let idx = inner.partition_point(|&d| d < s).min(self.reps.len() - 1);
        let rep = self.reps[idx];
        if y > 0.0 {
            rep
        } else {
            -rep
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("quantizer serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Quantizer = serde_json::from_str(s)
            .map_err(|e| Error::InvalidDensity(format!("quantizer JSON: {e}")))?;
        Quantizer::new(raw.breakpoints, raw.reps)
    }
}

fn validate_breakpoints(breakpoints: &[f64]) -> Result<()> {
    if breakpoints.len() < 2 || breakpoints[0] != 0.0 {
        return Err(Error::NonMonotoneBreakpoints);
    }
    if breakpoints
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite())
    {
        return Err(Error::NonMonotoneBreakpoints);
    }
    Ok(())
}

/// Cell budget M with its positive-side count M'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizerBudget {
    m: u32,
}

impl QuantizerBudget {
    pub fn new(m: u32) -> Result<Self> {
        if m >= 2 {
            Ok(QuantizerBudget { m })
        } else {
            Err(Error::DegenerateDesign(format!(
                "subsection budget M = {m} must be at least 2"
            )))
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// M' = M/2 for even M, (M-1)/2 for odd M (the zero cell absorbs the rest).
    pub fn m_prime(&self) -> u32 {
        if self.m.is_multiple_of(2) {
            self.m / 2
        } else {
            (self.m - 1) / 2
        }
    }
}

/// Representatives that put y' at the cell centers.
pub fn midpoint_reps(breakpoints: &[f64]) -> Result<Vec<f64>> {
    validate_breakpoints(breakpoints)?;
    Ok(breakpoints
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect())
}

/// Representatives that zero the cell-conditional correlation between the
/// input and the quantization error under a uniform density:
/// y' = (2/3) (a^2 + a b + b^2) / (a + b) for the cell (a, b].
///
/// Equivalently midpoint + h with h = (2/3) k^2 / (a + b), k = (b - a) / 2.
pub fn bias_free_reps(breakpoints: &[f64]) -> Result<Vec<f64>> {
    validate_breakpoints(breakpoints)?;
    Ok(breakpoints
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            (2.0 / 3.0) * (a * a + a * b + b * b) / (a + b)
        })
        .collect())
}

/// Uniform (equal-width) quantizer over [-kappa_y, kappa_y] with M cells and
/// bias-free representatives; the comparison baseline for the coarse designs.
pub fn uniform_quantizer(kappa_y: f64, m: u32) -> Result<Quantizer> {
    uniform_quantizer_with(kappa_y, m, RepsRule::BiasFree)
}

pub fn uniform_quantizer_with(kappa_y: f64, m: u32, rule: RepsRule) -> Result<Quantizer> {
    if m < 2 {
        return Err(Error::DegenerateDesign(format!("M = {m} too small")));
    }
    if !m.is_multiple_of(2) {
        return Err(Error::OddSubsectionCount(m));
    }
    if kappa_y <= 0.0 || kappa_y.is_nan() {
        return Err(Error::DegenerateDesign("kappa_y must be positive".into()));
    }
    let m_prime = (m / 2) as usize;
    let breakpoints: Vec<f64> = (0..=m_prime)
        .map(|j| kappa_y * j as f64 / m_prime as f64)
        .collect();
    Quantizer::from_breakpoints(breakpoints, rule)
}
