//! High-probability bounds on the estimation error terms and the trade-off
//! between quantizer resolution M and data length N under a fixed bit budget.
//!
//! Both bounds are products of eps1, a Chebyshev bound on the Gram inverse,
//! and eps2, a Chebyshev bound on the correlation vector: with probability at
//! least 1 - beta1 - beta2 the max-norm of the error term stays below
//! eps1 * eps2. The quantization eps2 uses the fixed-rate design constant D.

use serde::Serialize;

use crate::density::{ConditionalSpread, MarginalDensity};
use crate::error::{Error, Result};
use crate::highres::{companding_breakpoints, design_fixed_rate};
use crate::linalg::Qr;
use crate::model::{generate_regressors, FirParameters, SignalSource};
use crate::quantizer::RepsRule;
use crate::rng::{run_trials, trial_rng};
use rand::Rng;
use rand_distr::Distribution;

/// Everything the closed-form bounds need.
#[derive(Debug, Clone, Serialize)]
pub struct BoundInputs {
    /// V[phi_tilde_1]
    pub sigma_phi1_sq: f64,
    /// V[phi_tilde_1^2]
    pub eta: f64,
    pub n: usize,
    pub n_data: usize,
    pub m: u32,
    pub beta1: f64,
    pub beta2: f64,
    pub theta_tilde_1: f64,
    /// fixed-rate design constant D
    pub d_const: f64,
    pub sigma_w: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let margin = 1.0 - self.beta1 - self.beta2;
        if self.beta1 <= 0.0 || self.beta2 <= 0.0 || margin <= 0.0 || margin.is_nan() {
            return Err(Error::InfeasibleBound(
                "reliability indices must satisfy 1 - beta1 - beta2 > 0".into(),
            ));
        }
        Ok(())
    }

    fn gram_denominator(&self) -> f64 {
        let n = self.n as f64;
        let nd = self.n_data as f64;
        self.sigma_phi1_sq * nd
            - n * (nd / self.beta1).sqrt() * (self.eta.sqrt() + (n - 1.0) * self.sigma_phi1_sq)
    }
}

/// eps1 = 1 / (sigma^2 N - n sqrt(N/beta1) (sqrt(eta) + (n-1) sigma^2)).
pub fn epsilon1(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let den = inputs.gram_denominator();
    if den <= 0.0 {
        return Err(Error::InfeasibleBound(format!(
            "N = {} too small for beta1 = {}",
            inputs.n_data, inputs.beta1
        )));
    }
    Ok(1.0 / den)
}

/// eps2 for the quantization term: (1/M) sqrt(theta_tilde_1^2 D^3 / 12) sqrt(n N / beta2).
pub fn epsilon2_quantization(inputs: &BoundInputs) -> f64 {
    let scale =
        (inputs.theta_tilde_1 * inputs.theta_tilde_1 * inputs.d_const.powi(3) / 12.0).sqrt();
    scale / inputs.m as f64 * (inputs.n as f64 * inputs.n_data as f64 / inputs.beta2).sqrt()
}

/// eps2 for the noise term: sigma_phi1 sigma_w sqrt(n N / beta2).
pub fn epsilon2_noise(inputs: &BoundInputs) -> f64 {
    inputs.sigma_phi1_sq.sqrt()
        * inputs.sigma_w
        * (inputs.n as f64 * inputs.n_data as f64 / inputs.beta2).sqrt()
}

/// One row of the information-budget trade-off table.
#[derive(Debug, Clone, Serialize)]
pub struct TradeoffRow {
    pub m: u32,
    pub n_data: usize,
    pub eps1: f64,
    pub eps2_quant: f64,
    pub eps2_noise: f64,
    pub prod_quant: f64,
    pub prod_noise: f64,
    pub feasible: bool,
}

/// For each candidate M spend the bit budget K on N = floor(K / log2 M) data
/// points and tabulate both bound products. The quantization product falls
/// with M while the noise product rises: the resolution/data trade-off.
pub fn budget_tradeoff(
    k_bits: f64,
    candidate_ms: &[u32],
    base: &BoundInputs,
) -> Result<Vec<TradeoffRow>> {
    if k_bits <= 0.0 || k_bits.is_nan() {
        return Err(Error::InfeasibleBound("bit budget must be positive".into()));
    }
    base.validate()?;
    let mut rows = Vec::with_capacity(candidate_ms.len());
    for &m in candidate_ms {
        if m < 2 {
            return Err(Error::InfeasibleBound(format!(
                "M = {m} has no code length"
            )));
        }
        let n_data = (k_bits / (m as f64).log2()).floor() as usize;
        let inputs = BoundInputs {
            m,
            n_data,
            ..base.clone()
        };
        match epsilon1(&inputs) {
            Ok(e1) => {
                let e2q = epsilon2_quantization(&inputs);
                let e2w = epsilon2_noise(&inputs);
                rows.push(TradeoffRow {
                    m,
                    n_data,
                    eps1: e1,
                    eps2_quant: e2q,
                    eps2_noise: e2w,
                    prod_quant: e1 * e2q,
                    prod_noise: e1 * e2w,
                    feasible: true,
                });
            }
            Err(Error::InfeasibleBound(_)) => {
                rows.push(TradeoffRow {
                    m,
                    n_data,
                    eps1: f64::NAN,
                    eps2_quant: f64::NAN,
                    eps2_noise: f64::NAN,
                    prod_quant: f64::NAN,
                    prod_noise: f64::NAN,
                    feasible: false,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Configuration of an empirical coverage run. The parameter vector must be
/// aligned with the first coordinate so that the marginal of the
/// quantizer-visible coordinate is the source density itself.
#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub source: SignalSource,
    /// theta = [theta_tilde_1, 0, ..., 0] of length n
    pub theta_tilde_1: f64,
    pub n: usize,
    pub n_data: usize,
    pub m: u32,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma_w: f64,
    pub use_quantizer: bool,
}

/// Empirical coverage of both bounds over full simulated pipelines.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub quant_fraction: f64,
    pub noise_fraction: f64,
    pub target: f64,
    pub trials: usize,
    pub eps1: f64,
    pub eps2_quant: f64,
    pub eps2_noise: f64,
}

pub fn coverage_test(
    cfg: &CoverageConfig,
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<CoverageReport> {
    if trials == 0 {
        return Err(Error::Unsupported("need at least one trial".into()));
    }
    let f = MarginalDensity::from_source(&cfg.source)?;
    let sigma = ConditionalSpread::for_source(&cfg.source, cfg.n)?;
    let (g, report) = design_fixed_rate(&f, &sigma, cfg.m, cfg.theta_tilde_1)?;
    let quantizer = if cfg.use_quantizer {
        Some(companding_breakpoints(
            &g,
            cfg.m,
            RepsRule::Midpoint,
            cfg.theta_tilde_1,
        )?)
    } else {
        None
    };
    let inputs = BoundInputs {
        sigma_phi1_sq: cfg.source.second_moment(),
        eta: cfg.source.variance_of_square(),
        n: cfg.n,
        n_data: cfg.n_data,
        m: cfg.m,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        theta_tilde_1: cfg.theta_tilde_1,
        d_const: report.d,
        sigma_w: cfg.sigma_w,
    };
    let eps1 = epsilon1(&inputs)?;
    let eps2_quant = epsilon2_quantization(&inputs);
    let eps2_noise = epsilon2_noise(&inputs);
    let bound_quant = eps1 * eps2_quant;
    let bound_noise = eps1 * eps2_noise;

    let mut theta = vec![0.0; cfg.n];
    theta[0] = cfg.theta_tilde_1;
    let params = FirParameters::new(theta)?;
    let noise = if cfg.sigma_w > 0.0 {
        Some(
            rand_distr::Normal::new(0.0, cfg.sigma_w)
                .map_err(|_| Error::Unsupported("bad noise spread".into()))?,
        )
    } else {
        None
    };

    let outcomes: Vec<Result<(bool, bool)>> = run_trials(trials, threads, |trial| {
        // theta is along e1, so the transform is the identity and the
        // regressors are already the transformed coordinates
        let data_seed = trial_rng(seed, trial as u64).random::<u64>();
        let u = generate_regressors(&cfg.source, cfg.n_data, cfg.n, data_seed)?;
        let mut rng = trial_rng(seed ^ 0x9e37_79b9, trial as u64);
        let e: Vec<f64> = (0..cfg.n_data)
            .map(|t| {
                let y = params.theta()[0] * u.row(t)[0];
                match &quantizer {
                    Some(q) => q.quantize(y) - y,
                    None => 0.0,
                }
            })
            .collect();
        let w: Vec<f64> = match &noise {
            Some(dist) => (0..cfg.n_data).map(|_| dist.sample(&mut rng)).collect(),
            None => vec![0.0; cfg.n_data],
        };
        let qr = Qr::new(u.mat())?;
        let de = qr.solve(&e)?;
        let dw = qr.solve(&w)?;
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        Ok((inf(&de) <= bound_quant, inf(&dw) <= bound_noise))
    });
    let outcomes: Vec<(bool, bool)> = outcomes.into_iter().collect::<Result<_>>()?;
    let quant_hits = outcomes.iter().filter(|o| o.0).count();
    let noise_hits = outcomes.iter().filter(|o| o.1).count();
    Ok(CoverageReport {
        quant_fraction: quant_hits as f64 / trials as f64,
        noise_fraction: noise_hits as f64 / trials as f64,
        target: 1.0 - cfg.beta1 - cfg.beta2,
        trials,
        eps1,
        eps2_quant,
        eps2_noise,
    })
}
