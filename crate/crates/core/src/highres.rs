//! High-resolution optimal quantizer designs.
//!
//! Both designs minimize the asymptotic estimation-error functional
//!
//! ```text
//!   (1/12) theta_tilde_1^2 * int g(x)^-2 sigma^2(x) f(x) dx
//! ```
//!
//! over the subsection density g. Under a cell-count constraint
//! `int g = M` the optimum is g_f = K sigma^{2/3} f^{1/3}; under an entropy
//! constraint `H(f, g) = ln M` it is g_v = K M sigma. Concrete quantizers
//! come out of equal-mass inversion of the cumulative of g (companding).

use serde::Serialize;

use crate::density::{integrate, ConditionalSpread, MarginalDensity};
use crate::error::{Error, Result};
use crate::quantizer::{bias_free_reps, midpoint_reps, Quantizer, QuantizerBudget, RepsRule};

/// Which functional shape a designed density follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    FixedRate,
    VariableRate,
}

/// Density of the number of quantized subsections over the support of f.
#[derive(Debug, Clone)]
pub struct SubsectionDensity {
    f: MarginalDensity,
    sigma: ConditionalSpread,
    kind: DesignKind,
    scale: f64,
    support: (f64, f64),
    grid: Vec<f64>,
    cum: Vec<f64>,
}

const CUM_PANELS: usize = 16_384;

impl SubsectionDensity {
    fn build(f: &MarginalDensity, sigma: &ConditionalSpread, kind: DesignKind, scale: f64) -> Self {
        let support = f.support();
        let (lo, hi) = support;
        let h = (hi - lo) / CUM_PANELS as f64;
        let eval = |x: f64| match kind {
            DesignKind::FixedRate => {
                scale * sigma.eval_sq(x).powf(1.0 / 3.0) * f.eval(x).powf(1.0 / 3.0)
            }
            DesignKind::VariableRate => scale * sigma.eval(x),
        };
        let mut grid = Vec::with_capacity(CUM_PANELS + 1);
        let mut cum = Vec::with_capacity(CUM_PANELS + 1);
        let mut acc = 0.0;
        grid.push(lo);
        cum.push(0.0);
        let mut prev = eval(lo);
        for i in 1..=CUM_PANELS {
            let x = if i == CUM_PANELS {
                hi
            } else {
                lo + i as f64 * h
            };
            let xm = 0.5 * (grid[i - 1] + x);
            let fm = eval(xm);
            let fx = eval(x);
            acc += (x - grid[i - 1]) / 6.0 * (prev + 4.0 * fm + fx);
            grid.push(x);
            cum.push(acc);
            prev = fx;
        }
        SubsectionDensity {
            f: f.clone(),
            sigma: *sigma,
            kind,
            scale,
            support,
            grid,
            cum,
        }
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// g(x); zero outside the support of f.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        match self.kind {
            DesignKind::FixedRate => {
                self.scale * self.sigma.eval_sq(x).powf(1.0 / 3.0) * self.f.eval(x).powf(1.0 / 3.0)
            }
            DesignKind::VariableRate => self.scale * self.sigma.eval(x),
        }
    }

    /// G(x) = int_lo^x g.
    pub fn cumulative(&self, x: f64) -> f64 {
        let (lo, hi) = self.support;
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return *self.cum.last().unwrap();
        }
        let i = self
            .grid
            .partition_point(|&v| v < x)
            .clamp(1, self.grid.len() - 1);
        let x0 = self.grid[i - 1];
        // local Simpson from the node to x
        let fm = self.eval(0.5 * (x0 + x));
        self.cum[i - 1] + (x - x0) / 6.0 * (self.eval(x0) + 4.0 * fm + self.eval(x))
    }

    /// Total count int g: M for fixed rate, the expected count otherwise.
    pub fn total_count(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// x with G(x) = mass (safeguarded Newton on the stored cumulative).
    pub fn invert_cumulative(&self, mass: f64) -> Result<f64> {
        let total = self.total_count();
        if !(0.0..=total).contains(&mass) || total <= 0.0 {
            return Err(Error::NonInvertibleCumulative);
        }
        if mass == 0.0 {
            return Ok(self.support.0);
        }
        let i = self
            .cum
            .partition_point(|&c| c < mass)
            .clamp(1, self.grid.len() - 1);
        let (mut a, mut b) = (self.grid[i - 1], self.grid[i]);
        if !(self.cumulative(b) >= mass && self.cumulative(a) <= mass) {
            return Err(Error::NonInvertibleCumulative);
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..80 {
            let gx = self.cumulative(x) - mass;
            if gx.abs() < 1e-13 * total {
                break;
            }
            if gx > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.eval(x);
            let step = if d > 1e-300 { x - gx / d } else { f64::NAN };
            x = if step.is_finite() && step > a && step < b {
                step
            } else {
                0.5 * (a + b)
            };
        }
        Ok(x)
    }
}

/// Outcome of a high-resolution design.
#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    /// D = int sigma^{2/3} f^{1/3}
    pub d: f64,
    /// normalization constant of g (M/D for fixed rate, exp(L) for variable rate)
    pub k: f64,
    /// L = int f ln(f / sigma); only meaningful for the variable-rate design
    pub l: Option<f64>,
    /// value of the cost functional at the optimum
    pub predicted_cost: f64,
    /// H(f, g) of the designed density; variable rate only
    pub entropy_h: Option<f64>,
    pub m: u32,
    pub theta_tilde_1: f64,
    /// relative growth of D when the truncated support is doubled through the
    /// analytic tail; large values flag the marginal/infeasible tail regime
    pub tail_growth: f64,
    /// true when tail_growth exceeds 1%: the companding support is effectively
    /// unbounded and the design only exists on the truncated support
    pub tail_marginal: bool,
}

const QUAD_TOL: f64 = 1e-10;

fn d_constant(f: &MarginalDensity, sigma: &ConditionalSpread) -> Result<f64> {
    let (lo, hi) = f.support();
    let integrand = |x: f64| sigma.eval_sq(x).powf(1.0 / 3.0) * f.eval(x).powf(1.0 / 3.0);
    piecewise(&integrand, lo, hi, &f.kinks(), QUAD_TOL)
}

fn piecewise(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, kinks: &[f64], tol: f64) -> Result<f64> {
    let mut cuts = vec![lo];
    cuts.extend(kinks.iter().copied().filter(|&k| k > lo && k < hi));
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(g, w[0], w[1], tol / (cuts.len() - 1) as f64)?;
    }
    Ok(total)
}

/// Relative change of D when the support is doubled using the analytic tail
/// of f. Stable tails (normal) give ~0; an x^{-2} tail roughly doubles D.
fn tail_growth(f: &MarginalDensity, sigma: &ConditionalSpread, d: f64) -> f64 {
    let (lo, hi) = f.support();
    let integrand = |x: f64| sigma.eval_sq(x).powf(1.0 / 3.0) * f.tail_eval(x).powf(1.0 / 3.0);
    let right = integrate(&integrand, hi, 2.0 * hi, 1e-8).unwrap_or(0.0);
    let left = integrate(&integrand, 2.0 * lo, lo, 1e-8).unwrap_or(0.0);
    (right + left) / d
}

/// Fixed-rate optimum g_f = (M/D) sigma^{2/3} f^{1/3} with
/// predicted cost (1/12) theta_tilde_1^2 D^3 M^{-2}.
pub fn design_fixed_rate(
    f: &MarginalDensity,
    sigma: &ConditionalSpread,
    m: u32,
    theta_tilde_1: f64,
) -> Result<(SubsectionDensity, DesignReport)> {
    QuantizerBudget::new(m)?;
    let d = d_constant(f, sigma)?;
    if d < 1e-300 || d.is_nan() {
        return Err(Error::DegenerateDesign(
            "D = 0: sigma^2 f vanishes on the support".into(),
        ));
    }
    let k = m as f64 / d;
    let g = SubsectionDensity::build(f, sigma, DesignKind::FixedRate, k);
    let growth = tail_growth(f, sigma, d);
    let report = DesignReport {
        d,
        k,
        l: None,
        predicted_cost: theta_tilde_1 * theta_tilde_1 * d.powi(3) / (12.0 * (m as f64).powi(2)),
        entropy_h: None,
        m,
        theta_tilde_1,
        tail_growth: growth,
        tail_marginal: growth > 0.01,
    };
    Ok((g, report))
}

/// Variable-rate (entropy-constrained) optimum g_v = e^L M sigma with
/// predicted cost (1/12) theta_tilde_1^2 e^{-2L} M^{-2}; H(f, g_v) = ln M.
pub fn design_variable_rate(
    f: &MarginalDensity,
    sigma: &ConditionalSpread,
    m: u32,
    theta_tilde_1: f64,
) -> Result<(SubsectionDensity, DesignReport)> {
    QuantizerBudget::new(m)?;
    if sigma.offset() == 0.0 {
        // sigma(0) = 0 is a point zero, fine; a vanishing spread everywhere is not
        let (lo, hi) = f.support();
        if hi <= lo {
            return Err(Error::DegenerateDesign("empty support".into()));
        }
    }
    let l = integral_f_ln_f_over_sigma(f, sigma)?;
    let k = l.exp();
    let g = SubsectionDensity::build(f, sigma, DesignKind::VariableRate, k * m as f64);
    let d = d_constant(f, sigma)?;
    let growth = tail_growth(f, sigma, d);
    let entropy = entropy_of(f, &g)?;
    let report = DesignReport {
        d,
        k,
        l: Some(l),
        predicted_cost: theta_tilde_1 * theta_tilde_1 / (12.0 * k * k * (m as f64) * (m as f64)),
        entropy_h: Some(entropy),
        m,
        theta_tilde_1,
        tail_growth: growth,
        tail_marginal: growth > 0.01,
    };
    Ok((g, report))
}

/// L = int f ln(f / sigma). The sigma(0) = 0 case (first-order models) has an
/// integrable log singularity at the origin, handled by a local expansion.
fn integral_f_ln_f_over_sigma(f: &MarginalDensity, sigma: &ConditionalSpread) -> Result<f64> {
    let hd: f64 = crate::density::differential_entropy(f)?;
    let ln_sigma = integral_f_ln_sigma(f, sigma)?;
    Ok(-hd - ln_sigma)
}

fn integral_f_ln_sigma(f: &MarginalDensity, sigma: &ConditionalSpread) -> Result<f64> {
    let (lo, hi) = f.support();
    let integrand = |x: f64| {
        let fv = f.eval(x);
        if fv == 0.0 {
            return 0.0;
        }
        fv * sigma.eval(x).ln()
    };
    if sigma.offset() > 0.0 || lo >= 0.0 || hi <= 0.0 {
        return piecewise(&integrand, lo, hi, &f.kinks(), QUAD_TOL);
    }
    // sigma(x) = |x| near 0: int_{-d}^{d} f ln|x| ~ 2 f(0) (d ln d - d)
    let delta = 1e-7 * (hi - lo).max(1.0);
    let left = piecewise(&integrand, lo, -delta, &f.kinks(), QUAD_TOL)?;
    let right = piecewise(&integrand, delta, hi, &f.kinks(), QUAD_TOL)?;
    let local = 2.0 * f.eval(0.0) * (delta * delta.ln() - delta);
    Ok(left + right + local)
}

/// Asymptotic entropy H(f, g) = H_d(f) + int f ln g of the quantized symbol.
pub fn entropy_of(f: &MarginalDensity, g: &SubsectionDensity) -> Result<f64> {
    let hd = crate::density::differential_entropy(f)?;
    let (lo, hi) = f.support();
    let integrand = |x: f64| {
        let fv = f.eval(x);
        if fv == 0.0 {
            return 0.0;
        }
        let gv = g.eval(x);
        if gv <= 0.0 {
            return 0.0; // singular point, compensated below
        }
        fv * gv.ln()
    };
    let f_ln_g = if g.eval(0.0) > 0.0 || lo >= 0.0 || hi <= 0.0 {
        piecewise(&integrand, lo, hi, &f.kinks(), QUAD_TOL)?
    } else {
        // g ~ c |x|^p near the origin: add the local integral analytically
        let delta = 1e-7 * (hi - lo).max(1.0);
        let p = (g.eval(2.0 * delta) / g.eval(delta)).ln() / 2f64.ln();
        let c = g.eval(delta) / delta.powf(p);
        let left = piecewise(&integrand, lo, -delta, &f.kinks(), QUAD_TOL)?;
        let right = piecewise(&integrand, delta, hi, &f.kinks(), QUAD_TOL)?;
        let local = 2.0 * f.eval(0.0) * (delta * c.ln() + p * (delta * delta.ln() - delta));
        left + right + local
    };
    Ok(hd + f_ln_g)
}

/// The estimation-error functional (29) evaluated for an arbitrary positive
/// density g, e.g. a perturbed design.
pub fn cost_functional(
    f: &MarginalDensity,
    sigma: &ConditionalSpread,
    g: &dyn Fn(f64) -> f64,
    theta_tilde_1: f64,
) -> Result<f64> {
    let (lo, hi) = f.support();
    let integrand = |x: f64| {
        let fv = f.eval(x);
        if fv == 0.0 {
            return 0.0;
        }
        let gv = g(x);
        let num = sigma.eval_sq(x) * fv;
        if gv <= 0.0 {
            if num == 0.0 {
                return 0.0;
            }
            return f64::INFINITY;
        }
        num / (gv * gv)
    };
    let v = piecewise(&integrand, lo, hi, &f.kinks(), QUAD_TOL)?;
    Ok(theta_tilde_1 * theta_tilde_1 / 12.0 * v)
}

/// Build a concrete quantizer from a designed density by giving every cell an
/// equal share of the g-mass (inverse-CDF companding). The construction works
/// on the transformed coordinate; the returned quantizer lives on the output
/// scale via y = theta_tilde_1 * x.
pub fn companding_breakpoints(
    g: &SubsectionDensity,
    m: u32,
    reps_rule: RepsRule,
    theta_tilde_1: f64,
) -> Result<Quantizer> {
    let m_prime = QuantizerBudget::new(m)?.m_prime() as usize;
    if theta_tilde_1 <= 0.0 || theta_tilde_1.is_nan() {
        return Err(Error::DegenerateDesign(
            "theta_tilde_1 must be positive".into(),
        ));
    }
    let (lo, hi) = g.support();
    if (lo + hi).abs() > 1e-9 * (hi - lo) {
        return Err(Error::Unsupported(
            "companding requires a symmetric support (symmetric quantizers only)".into(),
        ));
    }
    let total = g.total_count();
    let zero_mass = g.cumulative(0.0);
    let positive_mass = total - zero_mass;
    if positive_mass <= 0.0 || positive_mass.is_nan() {
        return Err(Error::NonInvertibleCumulative);
    }
    let mut breakpoints = Vec::with_capacity(m_prime + 1);
    breakpoints.push(0.0);
    for j in 1..=m_prime {
        let x = if j == m_prime {
            hi
        } else {
            g.invert_cumulative(zero_mass + positive_mass * j as f64 / m_prime as f64)?
        };
        breakpoints.push(theta_tilde_1 * x);
    }
    if breakpoints
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::NonInvertibleCumulative);
    }
    let mut reps = match reps_rule {
        RepsRule::Midpoint => midpoint_reps(&breakpoints)?,
        RepsRule::BiasFree => bias_free_reps(&breakpoints)?,
    };
    // Overload correction: the outermost cell absorbs the clamp region, and
    // for light-tailed f it is stretched far beyond where its mass sits. Its
    // representative is the cost-weighted centroid instead of the rule value;
    // for compactly supported f the two nearly coincide.
    if m_prime >= 1 {
        let a = breakpoints[m_prime - 1] / theta_tilde_1;
        let b = breakpoints[m_prime] / theta_tilde_1;
        let weight = |x: f64| g.sigma.eval_sq(x) * g.f.eval(x);
        let mass = integrate(&weight, a, b, 1e-13).unwrap_or(0.0);
        if mass > 1e-300 {
            let first = integrate(&|x: f64| x * weight(x), a, b, 1e-13).unwrap_or(f64::NAN);
            let centroid = theta_tilde_1 * first / mass;
            if centroid.is_finite() {
                reps[m_prime - 1] = centroid.clamp(
                    breakpoints[m_prime - 1] * (1.0 + 1e-12),
                    breakpoints[m_prime],
                );
            }
        }
    }
    Quantizer::new(breakpoints, reps)
}

/// Exact asymptotic cost V[U^T E]/N of a concrete quantizer: the per-cell
/// quadrature of sigma^2(x) (y'_j - theta_tilde_1 x)^2 f(x). Inputs beyond
/// the outermost breakpoint clamp into the outer cell, so the outer cell
/// integral extends to the support edge.
pub fn exact_quantized_cost(
    f: &MarginalDensity,
    sigma: &ConditionalSpread,
    q: &Quantizer,
    theta_tilde_1: f64,
) -> Result<f64> {
    if theta_tilde_1 <= 0.0 || theta_tilde_1.is_nan() {
        return Err(Error::DegenerateDesign(
            "theta_tilde_1 must be positive".into(),
        ));
    }
    let (_, hi) = f.support();
    let bps = q.breakpoints();
    let reps = q.reps();
    let m_prime = reps.len();
    let mut total = 0.0;
    for j in 0..m_prime {
        let cell_lo = bps[j] / theta_tilde_1;
        let cell_hi = if j + 1 == m_prime {
            hi
        } else {
            (bps[j + 1] / theta_tilde_1).min(hi)
        };
        if cell_hi <= cell_lo {
            continue;
        }
        let rep = reps[j];
        let pos = |x: f64| sigma.eval_sq(x) * (rep - theta_tilde_1 * x).powi(2) * f.eval(x);
        let neg = |x: f64| sigma.eval_sq(x) * (-rep - theta_tilde_1 * x).powi(2) * f.eval(x);
        total += cell_quad(&pos, cell_lo, cell_hi)?;
        total += cell_quad(&neg, -cell_hi, -cell_lo)?;
    }
    Ok(total)
}

fn cell_quad(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let rough = (hi - lo) * g(0.5 * (lo + hi)).abs();
    let tol = (1e-9 * rough).max(1e-16);
    integrate(g, lo, hi, tol)
}

/// Sample grid of (x, f(x), g(x)) rows over the full support.
pub fn profile_grid(
    f: &MarginalDensity,
    g: &SubsectionDensity,
    points: usize,
) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = f.support();
    profile_grid_over(f, g, lo, hi, points)
}

/// Sample grid over an explicit window, for densities whose support is far
/// wider than the interesting plotting range.
pub fn profile_grid_over(
    f: &MarginalDensity,
    g: &SubsectionDensity,
    lo: f64,
    hi: f64,
    points: usize,
) -> Vec<(f64, f64, f64)> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (x, f.eval(x), g.eval(x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SignalSource;
    use std::f64::consts::PI;

    fn normal_f(sigma: f64) -> MarginalDensity {
        MarginalDensity::from_source(&SignalSource::normal(sigma).unwrap()).unwrap()
    }

    fn uniform_f(kappa: f64) -> MarginalDensity {
        MarginalDensity::from_source(&SignalSource::uniform(kappa).unwrap()).unwrap()
    }

    #[test]
    fn fixed_rate_count_matches_budget() {
        let f = normal_f(1.0);
        let sigma = ConditionalSpread::with_offset(1.0).unwrap();
        for m in [16u32, 128] {
            let (g, rep) = design_fixed_rate(&f, &sigma, m, 1.0).unwrap();
            assert!((g.total_count() - m as f64).abs() < 1e-6);
            assert!(rep.predicted_cost > 0.0);
            assert!((rep.k - m as f64 / rep.d).abs() < 1e-9 * rep.k);
        }
    }

    #[test]
    fn fixed_rate_large_n_normal_constant() {
        // sigma^2 ~ n sigma_o^2 constant: g_f ∝ f^{1/3} and the cost constant
        // approaches (1/12) (6 sqrt(3) pi) n sigma_o^4 M^{-2}
        let f = normal_f(1.0);
        let n = 4000usize;
        let sigma = ConditionalSpread::for_source(&SignalSource::normal(1.0).unwrap(), n).unwrap();
        let m = 256u32;
        let (_, rep) = design_fixed_rate(&f, &sigma, m, 1.0).unwrap();
        let expect = (6.0 * 3f64.sqrt() * PI) * n as f64 / (12.0 * (m as f64).powi(2));
        assert!(
            (rep.predicted_cost - expect).abs() < 0.01 * expect,
            "{} vs {expect}",
            rep.predicted_cost
        );
    }

    #[test]
    fn fixed_rate_n1_shape() {
        // n = 1: g_f ∝ x^{2/3} f^{1/3}
        let f = uniform_f(1.0);
        let sigma = ConditionalSpread::with_offset(0.0).unwrap();
        let (g, rep) = design_fixed_rate(&f, &sigma, 64, 1.0).unwrap();
        let ratio = g.eval(0.8) / g.eval(0.2);
        assert!(((ratio - 4f64.powf(2.0 / 3.0)) / ratio).abs() < 1e-9);
        assert!(rep.l.is_none());
    }

    #[test]
    fn fixed_rate_uniform_min_at_origin() {
        let f = uniform_f(4.0);
        let sigma = ConditionalSpread::with_offset(1.0).unwrap();
        let (g, _) = design_fixed_rate(&f, &sigma, 32, 1.0).unwrap();
        let g0 = g.eval(0.0);
        for x in [0.5, 1.0, 2.0, 3.0, 3.9] {
            assert!(g.eval(x) > g0);
            assert!((g.eval(x) - g.eval(-x)).abs() < 1e-12);
        }
    }

    #[test]
    fn power_law_tail_gives_constant_g_and_marginal_flag() {
        let f = MarginalDensity::from_source(&SignalSource::power_law(1.0).unwrap()).unwrap();
        let sigma = ConditionalSpread::with_offset(1.0).unwrap();
        let (g, rep) = design_fixed_rate(&f, &sigma, 64, 1.0).unwrap();
        // deep in the tail sigma^{2/3} f^{1/3} -> constant
        let g100 = g.eval(100.0);
        let g500 = g.eval(500.0);
        assert!((g100 - g500).abs() < 0.02 * g100, "{g100} vs {g500}");
        assert!(rep.tail_marginal, "tail growth {}", rep.tail_growth);

        let fn_ = normal_f(1.0);
        let (_, repn) = design_fixed_rate(&fn_, &sigma, 64, 1.0).unwrap();
        assert!(
            !repn.tail_marginal,
            "normal tail growth {}",
            repn.tail_growth
        );
    }

    #[test]
    fn variable_rate_entropy_equals_ln_m() {
        let sigma2 = ConditionalSpread::with_offset(1.0).unwrap();
        for (f, m) in [(normal_f(1.0), 16u32), (uniform_f(4.0), 256u32)] {
            let (_, rep) = design_variable_rate(&f, &sigma2, m, 1.0).unwrap();
            let h = rep.entropy_h.unwrap();
            assert!(
                (h - (m as f64).ln()).abs() < 1e-3,
                "H = {h} vs ln M = {}",
                (m as f64).ln()
            );
        }
    }

    #[test]
    fn variable_rate_large_n_matches_example() {
        let f = normal_f(1.0);
        let n = 4000usize;
        let sigma = ConditionalSpread::for_source(&SignalSource::normal(1.0).unwrap(), n).unwrap();
        let m = 256u32;
        let (g, rep) = design_variable_rate(&f, &sigma, m, 1.0).unwrap();
        // g_v ~ M exp(-H_d(f)) constant over the bulk
        let hd = crate::density::differential_entropy(&f).unwrap();
        let expect = m as f64 * (-hd).exp();
        let mid = g.eval(0.0);
        assert!((mid - expect).abs() < 0.02 * expect, "{mid} vs {expect}");
        // cost constant 2 e pi n sigma_o^4 / 12 M^2
        let cost_expect = 2.0 * std::f64::consts::E * PI * n as f64 / (12.0 * (m as f64).powi(2));
        assert!(
            (rep.predicted_cost - cost_expect).abs() < 0.01 * cost_expect,
            "{} vs {cost_expect}",
            rep.predicted_cost
        );
    }

    #[test]
    fn variable_over_fixed_cost_ratio_half() {
        let f = normal_f(1.0);
        let n = 4000usize;
        let sigma = ConditionalSpread::for_source(&SignalSource::normal(1.0).unwrap(), n).unwrap();
        let (_, rf) = design_fixed_rate(&f, &sigma, 128, 1.0).unwrap();
        let (_, rv) = design_variable_rate(&f, &sigma, 128, 1.0).unwrap();
        let ratio = rv.predicted_cost / rf.predicted_cost;
        let expect = 2.0 * std::f64::consts::E / (6.0 * 3f64.sqrt());
        assert!(
            (ratio - expect).abs() < 0.02 * expect,
            "{ratio} vs {expect}"
        );
    }

    #[test]
    fn companding_constant_density_is_uniform() {
        let f = uniform_f(2.0);
        // effectively constant sigma: g_f ∝ f^{1/3} constant on the support
        let sigma = ConditionalSpread::with_offset(1e12).unwrap();
        let (g, _) = design_fixed_rate(&f, &sigma, 8, 1.0).unwrap();
        let q = companding_breakpoints(&g, 8, RepsRule::BiasFree, 1.0).unwrap();
        let expect = [0.0, 0.5, 1.0, 1.5, 2.0];
        for (a, b) in q.breakpoints().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-8, "{:?}", q.breakpoints());
        }
    }

    #[test]
    fn companding_power_profile_breakpoints() {
        // g ∝ |x|^{2/3} on [-1, 1]: positive-side breakpoints (j/M')^{3/5}
        let f = uniform_f(1.0);
        let sigma = ConditionalSpread::with_offset(0.0).unwrap();
        let m = 16u32;
        let (g, _) = design_fixed_rate(&f, &sigma, m, 1.0).unwrap();
        let q = companding_breakpoints(&g, m, RepsRule::Midpoint, 1.0).unwrap();
        for (j, d) in q.breakpoints().iter().enumerate().skip(1) {
            let expect = (j as f64 / 8.0).powf(3.0 / 5.0);
            assert!((d - expect).abs() < 1e-6, "d_{j} = {d} vs {expect}");
        }
    }

    #[test]
    fn companding_widths_follow_inverse_density() {
        let f = normal_f(1.0);
        let sigma = ConditionalSpread::with_offset(1.0).unwrap();
        let m = 512u32;
        let (g, _) = design_fixed_rate(&f, &sigma, m, 1.0).unwrap();
        let q = companding_breakpoints(&g, m, RepsRule::Midpoint, 1.0).unwrap();
        // compare widths against 1/g at cell centers over the bulk
        let bps = q.breakpoints();
        let mut worst: f64 = 0.0;
        for w in bps.windows(2) {
            let center = 0.5 * (w[0] + w[1]);
            if center.abs() > 3.0 {
                continue;
            }
            let width = w[1] - w[0];
            let rel = (width * g.eval(center) - 1.0).abs();
            worst = worst.max(rel);
        }
        assert!(worst < 0.05, "max relative width error {worst}");
    }

    #[test]
    fn exact_cost_delta_squared_over_twelve() {
        // classical small-width law on a uniform density with midpoint reps
        let f = uniform_f(1.0);
        let sigma = ConditionalSpread::with_offset(0.0).unwrap();
        let m = 512u32;
        let q = crate::quantizer::uniform_quantizer_with(1.0, m, RepsRule::Midpoint).unwrap();
        let cost = exact_quantized_cost(&f, &sigma, &q, 1.0).unwrap();
        let delta = 2.0 / m as f64;
        // int x^2 f dx * Delta^2 / 12 = (1/3) Delta^2 / 12
        let expect = (1.0 / 3.0) * delta * delta / 12.0;
        assert!((cost - expect).abs() < 0.01 * expect, "{cost} vs {expect}");
    }

    #[test]
    fn exact_cost_vanishes_for_fine_quantizer() {
        let f = uniform_f(1.0);
        let sigma = ConditionalSpread::with_offset(0.0).unwrap();
        let coarse = crate::quantizer::uniform_quantizer(1.0, 8).unwrap();
        let fine = crate::quantizer::uniform_quantizer(1.0, 4096).unwrap();
        let c_coarse = exact_quantized_cost(&f, &sigma, &coarse, 1.0).unwrap();
        let c_fine = exact_quantized_cost(&f, &sigma, &fine, 1.0).unwrap();
        assert!(c_fine < 1e-5 * c_coarse);
    }

    #[test]
    fn companded_cost_tracks_prediction() {
        let f = normal_f(1.0);
        let sigma = ConditionalSpread::with_offset(1.0).unwrap();
        let m = 128u32;
        let (g, rep) = design_fixed_rate(&f, &sigma, m, 1.0).unwrap();
        let q = companding_breakpoints(&g, m, RepsRule::Midpoint, 1.0).unwrap();
        let cost = exact_quantized_cost(&f, &sigma, &q, 1.0).unwrap();
        assert!(
            (cost - rep.predicted_cost).abs() < 0.1 * rep.predicted_cost,
            "cost {cost} vs predicted {}",
            rep.predicted_cost
        );
    }
}
