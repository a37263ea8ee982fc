//! Command dispatch: each subcommand reads the validated config, runs the
//! corresponding pipeline and writes its artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use quantid_core::coarse::{self, CoarseMode};
use quantid_core::highres;
use quantid_core::{
    budget_tradeoff, build_transform, generate_regressors, BoundInputs, ConditionalSpread,
    Error as CoreError, FirParameters, MarginalDensity, Quantizer, RepsRule, SignalSource,
};

use crate::config::{CommandKind, ExperimentConfig, QuantizerMode, QuantizerSpec, RepsRuleSpec};

pub enum CliError {
    /// exit code 2
    Config(String),
    /// exit code 3
    Infeasible(String),
    /// exit code 4
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible design: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::QuadratureNonConvergence { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::NonInvertibleCumulative => CliError::Numeric(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

pub struct Invocation {
    pub command: CommandKind,
    pub config_path: PathBuf,
    pub seed_override: Option<u64>,
    pub threads: usize,
    pub out_dir: PathBuf,
}

pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&inv.config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", inv.config_path.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate().map_err(CliError::Config)?;
    if cfg.command != inv.command {
        return Err(CliError::Config(format!(
            "config declares command `{}` but `{}` was invoked",
            cfg.command, inv.command
        )));
    }
    if let (Some(seed), Some(data)) = (inv.seed_override, cfg.data.as_mut()) {
        data.seed = seed;
    }
    std::fs::create_dir_all(&inv.out_dir)?;
    match cfg.command {
        CommandKind::Design => run_design(&cfg, inv),
        CommandKind::Simulate => run_simulate(&cfg, inv),
        CommandKind::Compare => run_compare(&cfg, inv),
        CommandKind::Bounds => run_bounds(&cfg, inv),
        CommandKind::Asymptotics => run_asymptotics(&cfg, inv),
    }
}

fn require<'a, T>(field: Option<&'a T>, name: &str, cmd: CommandKind) -> Result<&'a T, CliError> {
    field.ok_or_else(|| CliError::Config(format!("`{cmd}` requires the `{name}` section")))
}

struct BuiltQuantizer {
    quantizer: Quantizer,
    /// (x, f, g) grid for the high-resolution profiles
    profile: Option<Vec<(f64, f64, f64)>>,
    /// per-cell table for the coarse designs
    coarse_table: Option<Vec<CoarseRow>>,
    report_json: serde_json::Value,
}

struct CoarseRow {
    j: usize,
    ratio: Option<f64>,
    psi_min: Option<f64>,
    xi_min: Option<f64>,
    d: f64,
    rep: f64,
}

fn spread_for(
    spec: &QuantizerSpec,
    source: &SignalSource,
    n: usize,
) -> Result<ConditionalSpread, CliError> {
    Ok(match spec.sigma_offset {
        Some(c) => ConditionalSpread::with_offset(c)?,
        None => ConditionalSpread::for_source(source, n)?,
    })
}

fn build_quantizer(
    spec: &QuantizerSpec,
    source: &SignalSource,
    params: &FirParameters,
) -> Result<BuiltQuantizer, CliError> {
    let n = params.order();
    let basis = build_transform(params.theta())?;
    let theta1 = basis.theta_tilde_1();
    let m = spec.m;
    match spec.mode {
        QuantizerMode::FixedRate | QuantizerMode::VariableRate => {
            let f = MarginalDensity::from_source(source)?;
            let sigma = spread_for(spec, source, n)?;
            let (g, report) = match spec.mode {
                QuantizerMode::FixedRate => highres::design_fixed_rate(&f, &sigma, m, theta1)?,
                _ => highres::design_variable_rate(&f, &sigma, m, theta1)?,
            };
            let rule: RepsRule = spec.reps.unwrap_or(RepsRuleSpec::Midpoint).into();
            let quantizer = highres::companding_breakpoints(&g, m, rule, theta1)?;
            // the truncated power-law support is three decades wide; clip the
            // plot window to the first stretch of the constant-g tail
            let profile = match source {
                SignalSource::PowerLaw { core_width } => {
                    highres::profile_grid_over(&f, &g, -100.0 * core_width, 100.0 * core_width, 513)
                }
                _ => highres::profile_grid(&f, &g, 513),
            };
            Ok(BuiltQuantizer {
                quantizer,
                profile: Some(profile),
                coarse_table: None,
                report_json: serde_json::to_value(&report).expect("report serializes"),
            })
        }
        QuantizerMode::Uniform => {
            let kappa = uniform_kappa(source)?;
            let kappa_y = kappa * theta1;
            let rule: RepsRule = spec.reps.unwrap_or(RepsRuleSpec::BiasFree).into();
            let quantizer = quantid_core::quantizer::uniform_quantizer_with(kappa_y, m, rule)?;
            Ok(BuiltQuantizer {
                quantizer,
                profile: None,
                coarse_table: None,
                report_json: serde_json::json!({ "kappa_y": kappa_y, "m": m }),
            })
        }
        QuantizerMode::CoarseN1 | QuantizerMode::CoarseGeneral | QuantizerMode::CoarseNinf => {
            let kappa = uniform_kappa(source)?;
            let kappa_y = kappa * theta1;
            let m_prime = quantid_core::QuantizerBudget::new(m)?.m_prime() as usize;
            let (design, seq) = match spec.mode {
                QuantizerMode::CoarseN1 => {
                    let seq = coarse::solve_n1(m_prime);
                    let design =
                        coarse::build_coarse_quantizer(&seq, kappa_y, n, theta1, CoarseMode::N1)?;
                    (design, seq)
                }
                QuantizerMode::CoarseNinf => {
                    let seq = coarse::solve_ninf(m_prime);
                    let design =
                        coarse::build_coarse_quantizer(&seq, kappa_y, n, theta1, CoarseMode::NInf)?;
                    (design, seq)
                }
                _ => {
                    let design = coarse::solve_general(m_prime, n, kappa_y, theta1)?;
                    let seq = coarse::RatioSequence::along_path(design.ratios.clone());
                    (design, seq)
                }
            };
            let bps = design.quantizer.breakpoints();
            let reps = design.quantizer.reps();
            // row j: cell boundary d_j with its ratio r_j = d_j / d_{j+1} and
            // the recursion values psi_j, xi_j (both indexed as in seq)
            let table: Vec<CoarseRow> = (1..bps.len())
                .map(|j| CoarseRow {
                    j,
                    ratio: seq.ratios.get(j - 1).copied(),
                    psi_min: seq.psi_min.get(j).copied(),
                    xi_min: seq.xi_min.get(j).copied(),
                    d: bps[j],
                    rep: reps[j - 1],
                })
                .collect();
            let report_json = serde_json::json!({
                "mode": design.mode,
                "optimal_cost_per_sample": design.optimal_cost,
                "resolution_warning": design.resolution_warning,
                "kappa_y": kappa_y,
                "m_prime": m_prime,
            });
            Ok(BuiltQuantizer {
                quantizer: design.quantizer,
                profile: None,
                coarse_table: Some(table),
                report_json,
            })
        }
    }
}

fn uniform_kappa(source: &SignalSource) -> Result<f64, CliError> {
    match source {
        SignalSource::Uniform { kappa } => Ok(*kappa),
        _ => Err(CliError::Config(
            "this quantizer mode requires a uniform source".into(),
        )),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn run_design(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let source = require(cfg.source.as_ref(), "source", cfg.command)?;
    let model = require(cfg.model.as_ref(), "model", cfg.command)?;
    let spec = require(cfg.quantizer.as_ref(), "quantizer", cfg.command)?;
    let params = FirParameters::new(model.theta.clone())?;
    let built = build_quantizer(spec, source, &params)?;
    let stem = cfg.stem();
    let format = cfg.format();
    let mut written = Vec::new();

    if format.wants_json() {
        let qpath = inv.out_dir.join(format!("{stem}_quantizer.json"));
        write_file(&qpath, &built.quantizer.to_json())?;
        written.push(qpath);
        let rpath = inv.out_dir.join(format!("{stem}_report.json"));
        write_file(
            &rpath,
            &serde_json::to_string_pretty(&built.report_json).expect("report"),
        )?;
        written.push(rpath);
    }
    if format.wants_csv() {
        if let Some(profile) = &built.profile {
            let mut csv = String::from("phi1,f,g\n");
            for (x, fv, gv) in profile {
                let _ = writeln!(csv, "{x},{fv},{gv}");
            }
            let ppath = inv.out_dir.join(format!("{stem}_profile.csv"));
            write_file(&ppath, &csv)?;
            written.push(ppath);
        }
        if let Some(rows) = &built.coarse_table {
            let mut csv = String::from("j,ratio,psi_min,xi_min,d,rep\n");
            for r in rows {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    r.j,
                    opt(r.ratio),
                    opt(r.psi_min),
                    opt(r.xi_min),
                    r.d,
                    r.rep
                );
            }
            let tpath = inv.out_dir.join(format!("{stem}_table.csv"));
            write_file(&tpath, &csv)?;
            written.push(tpath);
        }
    }
    Ok(written)
}

fn run_simulate(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let source = require(cfg.source.as_ref(), "source", cfg.command)?;
    let model = require(cfg.model.as_ref(), "model", cfg.command)?;
    let data = require(cfg.data.as_ref(), "data", cfg.command)?;
    let params = FirParameters::new(model.theta.clone())?;
    let quantizer = match cfg.quantizer.as_ref() {
        Some(spec) => Some(build_quantizer(spec, source, &params)?.quantizer),
        None => None,
    };
    let u = generate_regressors(source, data.n_data, params.order(), data.seed)?;
    let result = quantid_core::sysid::estimate(
        &u,
        &params,
        quantizer.as_ref(),
        data.sigma_w.unwrap_or(0.0),
        data.seed ^ 0x5eed,
    )?;
    let stem = cfg.stem();
    let path = inv.out_dir.join(format!("{stem}_result.json"));
    let doc = serde_json::json!({
        "config": serde_json::to_value(cfg).expect("config"),
        "result": serde_json::to_value(&result).expect("result"),
    });
    write_file(&path, &serde_json::to_string_pretty(&doc).expect("doc"))?;
    Ok(vec![path])
}

fn run_compare(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let source = require(cfg.source.as_ref(), "source", cfg.command)?;
    let model = require(cfg.model.as_ref(), "model", cfg.command)?;
    let spec = require(cfg.quantizer.as_ref(), "quantizer", cfg.command)?;
    let data = require(cfg.data.as_ref(), "data", cfg.command)?;
    let kappa = uniform_kappa(source)?;
    let params = FirParameters::new(model.theta.clone())?;
    let baseline: RepsRule = spec.reps.unwrap_or(RepsRuleSpec::Midpoint).into();
    let table = quantid_core::run_comparison(
        &params,
        kappa,
        spec.m,
        data.n_data,
        data.trials.unwrap_or(50),
        data.seed,
        baseline,
        inv.threads,
    )?;
    let stem = cfg.stem();
    let format = cfg.format();
    let mut written = Vec::new();
    if format.wants_csv() {
        let mut csv =
            String::from("trial,bias_opt,bias_unif,err_opt,err_unif,bias_ratio,error_ratio\n");
        for (i, r) in table.per_trial.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                i,
                r.bias_opt,
                r.bias_unif,
                r.err_opt,
                r.err_unif,
                table.bias_ratio,
                table.error_ratio
            );
        }
        let path = inv.out_dir.join(format!("{stem}_table.csv"));
        write_file(&path, &csv)?;
        written.push(path);
    }
    if format.wants_json() {
        let doc = serde_json::json!({
            "config": serde_json::to_value(cfg).expect("config"),
            "bias_ratio": table.bias_ratio,
            "error_ratio": table.error_ratio,
            "trials": table.trials,
            "per_trial": serde_json::to_value(&table.per_trial).expect("trials"),
        });
        let path = inv.out_dir.join(format!("{stem}_result.json"));
        write_file(&path, &serde_json::to_string_pretty(&doc).expect("doc"))?;
        written.push(path);
    }
    Ok(written)
}

fn run_bounds(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let source = require(cfg.source.as_ref(), "source", cfg.command)?;
    let model = require(cfg.model.as_ref(), "model", cfg.command)?;
    let spec = require(cfg.bounds.as_ref(), "bounds", cfg.command)?;
    let params = FirParameters::new(model.theta.clone())?;
    let n = params.order();
    let basis = build_transform(params.theta())?;
    let f = MarginalDensity::from_source(source)?;
    let sigma = ConditionalSpread::for_source(source, n)?;
    // the design constant of the fixed-rate optimum, independent of M
    let (_, report) = highres::design_fixed_rate(&f, &sigma, 2, basis.theta_tilde_1())?;
    let base = BoundInputs {
        sigma_phi1_sq: source.second_moment(),
        eta: source.variance_of_square(),
        n,
        n_data: 0,
        m: 0,
        beta1: spec.beta1,
        beta2: spec.beta2,
        theta_tilde_1: basis.theta_tilde_1(),
        d_const: report.d,
        sigma_w: spec.sigma_w.unwrap_or(0.0),
    };
    let rows = budget_tradeoff(spec.k_bits, &spec.ms, &base)?;
    let mut csv =
        String::from("m,n_data,eps1,eps2_quant,eps2_noise,prod_quant,prod_noise,feasible\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.m,
            r.n_data,
            r.eps1,
            r.eps2_quant,
            r.eps2_noise,
            r.prod_quant,
            r.prod_noise,
            r.feasible
        );
    }
    let stem = cfg.stem();
    let path = inv.out_dir.join(format!("{stem}_tradeoff.csv"));
    write_file(&path, &csv)?;
    Ok(vec![path])
}

fn run_asymptotics(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let spec = require(cfg.asymptotics.as_ref(), "asymptotics", cfg.command)?;
    let seq = coarse::solve_n1(spec.m_prime_max + 1);
    let fit = coarse::asymptotic_fit(&seq.psi_min)?;
    let stem = cfg.stem();
    let format = cfg.format();
    let mut written = Vec::new();
    if format.wants_csv() {
        let mut csv = String::from("m_prime,psi_min,recurrence_coeff\n");
        for (m, &p) in seq.psi_min.iter().enumerate() {
            let coeff = if m == 0 {
                String::new()
            } else {
                coarse::recurrence_coefficient(seq.psi_min[m - 1], p).to_string()
            };
            let _ = writeln!(csv, "{m},{p},{coeff}");
        }
        let path = inv.out_dir.join(format!("{stem}_asymptotics.csv"));
        write_file(&path, &csv)?;
        written.push(path);
    }
    if format.wants_json() {
        let doc = serde_json::json!({
            "fit_c": fit.c,
            "fit_b": fit.b,
            "recurrence_max_rel_dev": fit.recurrence_max_rel_dev,
            "recurrence_coeff_theory": coarse::RECURRENCE_COEFF,
        });
        let path = inv.out_dir.join(format!("{stem}_fit.json"));
        write_file(&path, &serde_json::to_string_pretty(&doc).expect("doc"))?;
        written.push(path);
    }
    Ok(written)
}
