//! One-dimensional marginal densities, the conditional spread sigma^2, and
//! the quadrature/entropy plumbing used by the design modules.
//!
//! Coordinates on the transformed basis are treated as the primitive i.i.d.
//! variables, so the marginal of the quantizer-visible coordinate is the
//! per-coordinate source density and sigma^2(x) = x^2 + (n - 1) m2 with m2
//! the per-coordinate second moment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{power_law_core_density, SignalSource, POWER_LAW_TRUNCATION};

/// Width of the truncated support of a normal marginal, in standard
/// deviations. The discarded mass is below 1.3e-15, far under quadrature
/// tolerances.
pub const NORMAL_SUPPORT_SIGMAS: f64 = 8.0;

const MAX_DEPTH: u32 = 60;

/// Adaptive Simpson quadrature of `f` over [a, b] with absolute tolerance
/// `tol`. The interval is pre-split so symmetric integrands cannot fool the
/// error estimate.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b || a.is_nan() || b.is_nan() || tol <= 0.0 || tol.is_nan() {
        return Err(Error::Unsupported(format!(
            "bad quadrature interval [{a}, {b}]"
        )));
    }
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i == panels - 1 {
            b
        } else {
            a + (i + 1) as f64 * h
        };
        let fl = f(lo);
        let fm = f(0.5 * (lo + hi));
        let fh = f(hi);
        let whole = simpson(lo, hi, fl, fm, fh);
        total += adaptive(f, lo, hi, fl, fm, fh, whole, tol / panels as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            partial: 0.0,
            error_bound: f64::INFINITY,
        });
    }
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (b.abs() + a.abs() + 1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence {
            partial: left + right + delta / 15.0,
            error_bound: delta.abs() / 15.0,
        });
    }
    let l = adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Piecewise-linear density on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedDensity {
    xs: Vec<f64>,
    fs: Vec<f64>,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl<'de> Deserialize<'de> for TabulatedDensity {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            xs: Vec<f64>,
            fs: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        TabulatedDensity::new(raw.xs, raw.fs).map_err(serde::de::Error::custom)
    }
}

impl TabulatedDensity {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(Error::InvalidDensity(
                "grid needs at least two (x, f) pairs".into(),
            ));
        }
        if xs
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidDensity(
                "grid abscissae must strictly increase".into(),
            ));
        }
        if fs.iter().any(|&f| f < 0.0 || !f.is_finite()) {
            return Err(Error::InvalidDensity(
                "density values must be finite and >= 0".into(),
            ));
        }
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (fs[i - 1] + fs[i]) * (xs[i] - xs[i - 1]);
        }
        let total = *cdf.last().unwrap();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDensity(format!(
                "density integrates to {total:.8}, expected 1 within 1e-6"
            )));
        }
        Ok(TabulatedDensity { xs, fs, cdf })
    }

    /// Parse "x,density" lines; a non-numeric first line is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let x = parts.next().map(str::trim).unwrap_or("").parse::<f64>();
            let f = parts.next().map(str::trim).unwrap_or("").parse::<f64>();
            match (x, f) {
                (Ok(x), Ok(f)) => {
                    xs.push(x);
                    fs.push(f);
                }
                _ if i == 0 => continue, // header
                _ => {
                    return Err(Error::InvalidDensity(format!(
                        "CSV line {}: expected `value,density`",
                        i + 1
                    )))
                }
            }
        }
        TabulatedDensity::new(xs, fs)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.fs[i],
            Err(i) => i,
        };
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.fs[i - 1] * (1.0 - w) + self.fs[i] * w
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    /// Inverse-CDF sample for a uniform draw in [0, 1).
    pub fn sample(&self, u: f64) -> f64 {
        let cdf = &self.cdf;
        let total = *cdf.last().unwrap();
        let target = u.clamp(0.0, 1.0) * total;
        let i = cdf
            .partition_point(|&c| c < target)
            .clamp(1, self.xs.len() - 1);
        let (c0, x0, x1, f0, f1) = (
            cdf[i - 1],
            self.xs[i - 1],
            self.xs[i],
            self.fs[i - 1],
            self.fs[i],
        );
        let need = target - c0;
        let h = x1 - x0;
        let slope = (f1 - f0) / h;
        // solve f0 t + slope t^2 / 2 = need on t in [0, h]
        if slope.abs() < 1e-300 {
            if f0 <= 0.0 {
                return x1;
            }
            return x0 + need / f0;
        }
        let disc = (f0 * f0 + 2.0 * slope * need).max(0.0);
        let t = (disc.sqrt() - f0) / slope;
        x0 + t.clamp(0.0, h)
    }

    pub fn second_moment(&self) -> f64 {
        self.moment(2)
    }

    pub fn fourth_moment(&self) -> f64 {
        self.moment(4)
    }

    fn moment(&self, p: i32) -> f64 {
        let f = |x: f64| x.powi(p) * self.eval(x);
        let (lo, hi) = self.support();
        integrate(&f, lo, hi, 1e-10).unwrap_or(0.0)
    }
}

/// Marginal density of the quantizer-visible coordinate, with a finite
/// support for design purposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDensity {
    kind: SignalSource,
    support: (f64, f64),
}

impl MarginalDensity {
    pub fn from_source(source: &SignalSource) -> Result<Self> {
        let kind = source.clone();
        let support = match &kind {
            SignalSource::Uniform { kappa } => (-kappa, *kappa),
            SignalSource::Normal { sigma } => (
                -NORMAL_SUPPORT_SIGMAS * sigma,
                NORMAL_SUPPORT_SIGMAS * sigma,
            ),
            SignalSource::PowerLaw { core_width } => {
                let l = POWER_LAW_TRUNCATION * core_width;
                (-l, l)
            }
            SignalSource::Tabulated { density } => density.support(),
        };
        Ok(MarginalDensity { kind, support })
    }

    pub fn kind(&self) -> &SignalSource {
        &self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        self.eval_unclipped(x)
    }

    /// Analytic extension beyond the truncated support, used by the
    /// tail-feasibility diagnostic. Zero for kinds that are their own support.
    pub fn tail_eval(&self, x: f64) -> f64 {
        if x >= self.support.0 && x <= self.support.1 {
            return self.eval(x);
        }
        match &self.kind {
            SignalSource::Normal { .. } | SignalSource::PowerLaw { .. } => self.eval_unclipped(x),
            _ => 0.0,
        }
    }

    fn eval_unclipped(&self, x: f64) -> f64 {
        match &self.kind {
            SignalSource::Uniform { kappa } => 0.5 / kappa,
            SignalSource::Normal { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            SignalSource::PowerLaw { core_width } => {
                let c = power_law_core_density(*core_width);
                if x.abs() <= *core_width {
                    c
                } else {
                    c * (core_width / x).powi(2)
                }
            }
            SignalSource::Tabulated { density } => density.eval(x),
        }
    }

    /// Integral of the density over its support; 1 within 1e-6 by contract.
    pub fn normalization(&self) -> Result<f64> {
        integrate(&|x| self.eval(x), self.support.0, self.support.1, 1e-9)
    }

    /// Interior knots where the density is not smooth; quadrature over the
    /// support should split there.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            SignalSource::PowerLaw { core_width } => vec![-core_width, *core_width],
            SignalSource::Tabulated { density } => {
                density.knots()[1..density.knots().len() - 1].to_vec()
            }
            _ => Vec::new(),
        }
    }
}

/// sigma^2(x) = x^2 + (n - 1) m2: the conditional second moment of the whole
/// regressor row given its first transformed coordinate, for independent
/// coordinates with per-coordinate second moment m2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSpread {
    offset: f64,
}

impl ConditionalSpread {
    pub fn for_source(source: &SignalSource, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Unsupported("model order must be at least 1".into()));
        }
        Ok(ConditionalSpread {
            offset: (n as f64 - 1.0) * source.second_moment(),
        })
    }

    /// sigma^2(x) = x^2 + offset, for figure profiles given directly.
    pub fn with_offset(offset: f64) -> Result<Self> {
        if offset < 0.0 {
            return Err(Error::Unsupported("spread offset must be >= 0".into()));
        }
        Ok(ConditionalSpread { offset })
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn eval_sq(&self, x: f64) -> f64 {
        x * x + self.offset
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_sq(x).sqrt()
    }
}

/// Closed-form sigma^2(phi1) for a built-in source kind.
pub fn sigma_squared(source: &SignalSource, n: usize, phi1: f64) -> Result<f64> {
    Ok(ConditionalSpread::for_source(source, n)?.eval_sq(phi1))
}

/// Differential entropy of the marginal in nats. Zero-density regions
/// contribute nothing.
pub fn differential_entropy(f: &MarginalDensity) -> Result<f64> {
    let g = |x: f64| {
        let v = f.eval(x);
        if v > 0.0 {
            -v * v.ln()
        } else {
            0.0
        }
    };
    let (lo, hi) = f.support();
    let mut cuts = vec![lo];
    cuts.extend(f.kinks());
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += integrate(&g, w[0], w[1], 1e-9)?;
        }
    }
    Ok(total)
}
