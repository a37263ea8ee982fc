//! FIR plant, input sources, regressor matrices and the orthogonal
//! coordinate transform that isolates the quantizer-visible direction.
//!
//! The plant is y_o(t) = q(y(t)) + w(t) with y(t) = phi(t) theta and
//! phi(t) the window of the last n inputs. All randomness is seeded.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::density::TabulatedDensity;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::quantizer::Quantizer;
use crate::rng::seeded_rng;

/// True system parameters theta of an order-n FIR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirParameters {
    theta: Vec<f64>,
}

impl FirParameters {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || linalg::norm2(&theta) == 0.0 {
            return Err(Error::DegenerateParameterVector);
        }
        Ok(FirParameters { theta })
    }

    pub fn order(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

/// Orthogonal change of coordinates T with T^{-1} theta = [theta_tilde_1, 0, ..., 0]^T.
///
/// The first column of T is theta / ||theta||; the rest is completed by a
/// Householder reflection, so T is deterministic and theta_tilde_1 = ||theta|| > 0.
#[derive(Debug, Clone)]
pub struct TransformedBasis {
    t: Mat,
    theta_tilde_1: f64,
}

impl TransformedBasis {
    pub fn t(&self) -> &Mat {
        &self.t
    }

    pub fn theta_tilde_1(&self) -> f64 {
        self.theta_tilde_1
    }

    /// T^{-1} v = T^T v.
    pub fn to_transformed(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.t.transpose_times(v)
    }
}

pub fn build_transform(theta: &[f64]) -> Result<TransformedBasis> {
    let norm = linalg::norm2(theta);
    if theta.is_empty() || norm == 0.0 {
        return Err(Error::DegenerateParameterVector);
    }
    let unit: Vec<f64> = theta.iter().map(|x| x / norm).collect();
    let t = linalg::orthogonal_with_first_column(&unit);
    Ok(TransformedBasis {
        t,
        theta_tilde_1: norm,
    })
}

/// An i.i.d. scalar input source u(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSource {
    /// Uniform on [-kappa, kappa].
    Uniform { kappa: f64 },
    /// Zero-mean normal with standard deviation sigma.
    Normal { sigma: f64 },
    /// Flat core of half-width `core_width`, tail density proportional to
    /// x^{-2}, truncated at 1000 * core_width.
    PowerLaw { core_width: f64 },
    /// Piecewise-linear density given on a grid.
    Tabulated { density: TabulatedDensity },
}

/// Truncation of the power-law tail, in units of the core width.
pub const POWER_LAW_TRUNCATION: f64 = 1e3;

impl SignalSource {
    pub fn uniform(kappa: f64) -> Result<Self> {
        if kappa > 0.0 {
            Ok(SignalSource::Uniform { kappa })
        } else {
            Err(Error::InvalidDensity(
                "uniform half-width must be positive".into(),
            ))
        }
    }

    pub fn normal(sigma: f64) -> Result<Self> {
        if sigma > 0.0 {
            Ok(SignalSource::Normal { sigma })
        } else {
            Err(Error::InvalidDensity(
                "normal spread must be positive".into(),
            ))
        }
    }

    pub fn power_law(core_width: f64) -> Result<Self> {
        if core_width > 0.0 {
            Ok(SignalSource::PowerLaw { core_width })
        } else {
            Err(Error::InvalidDensity(
                "power-law core width must be positive".into(),
            ))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SignalSource::Uniform { kappa } => rng.random_range(-kappa..*kappa),
            SignalSource::Normal { sigma } => Normal::new(0.0, *sigma)
                .expect("validated sigma")
                .sample(rng),
            SignalSource::PowerLaw { core_width } => {
                power_law_inverse_cdf(*core_width, rng.random::<f64>())
            }
            SignalSource::Tabulated { density } => density.sample(rng.random::<f64>()),
        }
    }

    /// Second moment E[u^2] of one coordinate.
    pub fn second_moment(&self) -> f64 {
        match self {
            SignalSource::Uniform { kappa } => kappa * kappa / 3.0,
            SignalSource::Normal { sigma } => sigma * sigma,
            SignalSource::PowerLaw { core_width } => {
                let w = *core_width;
                let l = POWER_LAW_TRUNCATION * w;
                let c = power_law_core_density(w);
                // 2c (w^3/3 + w^2 (L - w))
                2.0 * c * (w.powi(3) / 3.0 + w * w * (l - w))
            }
            SignalSource::Tabulated { density } => density.second_moment(),
        }
    }

    /// Variance of u^2, the eta of the reliability bounds.
    pub fn variance_of_square(&self) -> f64 {
        match self {
            SignalSource::Uniform { kappa } => 4.0 * kappa.powi(4) / 45.0,
            SignalSource::Normal { sigma } => 2.0 * sigma.powi(4),
            SignalSource::PowerLaw { core_width } => {
                let w = *core_width;
                let l = POWER_LAW_TRUNCATION * w;
                let c = power_law_core_density(w);
                let m4 = 2.0 * c * (w.powi(5) / 5.0 + w * w * (l.powi(3) - w.powi(3)) / 3.0);
                let m2 = self.second_moment();
                m4 - m2 * m2
            }
            SignalSource::Tabulated { density } => {
                let m2 = density.second_moment();
                density.fourth_moment() - m2 * m2
            }
        }
    }
}

pub(crate) fn power_law_core_density(core_width: f64) -> f64 {
    // normalization on [-L, L]: 2 c w + 2 c w^2 (1/w - 1/L) = 1
    let w = core_width;
    let l = POWER_LAW_TRUNCATION * w;
    1.0 / (2.0 * w + 2.0 * w * w * (1.0 / w - 1.0 / l))
}

fn power_law_inverse_cdf(core_width: f64, u: f64) -> f64 {
    let w = core_width;
    let c = power_law_core_density(w);
    let sign = if u >= 0.5 { 1.0 } else { -1.0 };
    let q = (2.0 * u - 1.0).abs() / 2.0; // mass on the positive half, in [0, 1/2]
    let core_mass = c * w;
    let x = if q <= core_mass {
        q / c
    } else {
        // q = c w + c w^2 (1/w - 1/x)
        c * w * w / (2.0 * c * w - q)
    };
    sign * x
}

/// N x n matrix of regressor rows phi(t) = [u(t), u(t-1), ..., u(t-n+1)].
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorMatrix {
    m: Mat,
}

impl RegressorMatrix {
    pub fn from_mat(m: Mat) -> Self {
        RegressorMatrix { m }
    }

    pub fn from_vec(n_data: usize, order: usize, data: Vec<f64>) -> Result<Self> {
        Ok(RegressorMatrix {
            m: Mat::from_vec(n_data, order, data)?,
        })
    }

    pub fn n_data(&self) -> usize {
        self.m.rows()
    }

    pub fn order(&self) -> usize {
        self.m.cols()
    }

    pub fn mat(&self) -> &Mat {
        &self.m
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.m.row(t)
    }
}

/// Shift-structured regressors: consecutive rows share n-1 input samples,
/// exactly as the FIR window slides over one i.i.d. input sequence.
pub fn generate_regressors(
    source: &SignalSource,
    n_data: usize,
    order: usize,
    seed: u64,
) -> Result<RegressorMatrix> {
    if n_data < order || order == 0 {
        return Err(Error::InsufficientDataLength { n_data, order });
    }
    let mut rng = seeded_rng(seed);
    let samples: Vec<f64> = (0..n_data + order - 1)
        .map(|_| source.sample(&mut rng))
        .collect();
    let mut data = Vec::with_capacity(n_data * order);
    // row t (0-based) column i holds u(t - i), i.e. samples[t - i + order - 1]
    for t in 0..n_data {
        for i in 0..order {
            data.push(samples[t + order - 1 - i]);
        }
    }
    RegressorMatrix::from_vec(n_data, order, data)
}

/// Fully independent rows: every entry is a fresh draw. Used to isolate the
/// cross-term identities from the sliding-window dependence.
pub fn generate_regressors_independent(
    source: &SignalSource,
    n_data: usize,
    order: usize,
    seed: u64,
) -> Result<RegressorMatrix> {
    if n_data < order || order == 0 {
        return Err(Error::InsufficientDataLength { n_data, order });
    }
    let mut rng = seeded_rng(seed);
    let data: Vec<f64> = (0..n_data * order)
        .map(|_| source.sample(&mut rng))
        .collect();
    RegressorMatrix::from_vec(n_data, order, data)
}

/// One simulated record of the plant.
#[derive(Debug, Clone, Serialize)]
pub struct SimulatedOutput {
    /// y = U theta
    pub y: Vec<f64>,
    /// y' = q(y) (equals y when no quantizer is given)
    pub y_q: Vec<f64>,
    /// observed y_o = y' + w
    pub y_o: Vec<f64>,
    /// quantization error e = y' - y
    pub e: Vec<f64>,
    /// noise record
    pub w: Vec<f64>,
}

pub fn simulate_output(
    u: &RegressorMatrix,
    params: &FirParameters,
    q: Option<&Quantizer>,
    sigma_w: f64,
    seed: u64,
) -> Result<SimulatedOutput> {
    if u.order() != params.order() {
        return Err(Error::DimensionMismatch {
            expected: params.order(),
            got: u.order(),
        });
    }
    let y = u.mat().times(params.theta())?;
    let y_q: Vec<f64> = match q {
        Some(q) => y.iter().map(|&v| q.quantize(v)).collect(),
        None => y.clone(),
    };
    let w: Vec<f64> = if sigma_w > 0.0 {
        let mut rng = seeded_rng(seed);
        let dist = Normal::new(0.0, sigma_w)
            .map_err(|_| Error::InvalidDensity("noise spread must be finite".into()))?;
        (0..y.len()).map(|_| dist.sample(&mut rng)).collect()
    } else {
        vec![0.0; y.len()]
    };
    let y_o: Vec<f64> = y_q.iter().zip(&w).map(|(a, b)| a + b).collect();
    let e: Vec<f64> = y_q.iter().zip(&y).map(|(a, b)| a - b).collect();
    Ok(SimulatedOutput { y, y_q, y_o, e, w })
}

/// U tilde = U T.
pub fn transform_regressors(
    u: &RegressorMatrix,
    basis: &TransformedBasis,
) -> Result<RegressorMatrix> {
    if u.order() != basis.t().rows() {
        return Err(Error::DimensionMismatch {
            expected: basis.t().rows(),
            got: u.order(),
        });
    }
    Ok(RegressorMatrix {
        m: u.mat().matmul(basis.t())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer;

    #[test]
    fn transform_identity_case() {
        let b = build_transform(&[1.0, 0.0]).unwrap();
        assert_eq!(b.theta_tilde_1(), 1.0);
        assert_eq!(b.t().at(0, 0), 1.0);
        assert_eq!(b.t().at(1, 1), 1.0);
        assert_eq!(b.t().at(0, 1), 0.0);
    }

    #[test]
    fn transform_example_4_1_parameters() {
        let b = build_transform(&[3f64.sqrt() / 2.0, 0.5]).unwrap();
        assert!((b.theta_tilde_1() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transform_three_four_five() {
        let theta = [3.0, 4.0];
        let b = build_transform(&theta).unwrap();
        assert!((b.theta_tilde_1() - 5.0).abs() < 1e-12);
        assert!((b.t().at(0, 0) - 0.6).abs() < 1e-12);
        assert!((b.t().at(1, 0) - 0.8).abs() < 1e-12);
        // T^{-1} theta = [5, 0]
        let tt = b.to_transformed(&theta).unwrap();
        assert!((tt[0] - 5.0).abs() < 1e-12);
        assert!(tt[1].abs() < 1e-12);
        // orthogonality
        let t = b.t();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += t.at(k, i) * t.at(k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_rejects_zero_vector() {
        assert!(matches!(
            build_transform(&[0.0, 0.0]),
            Err(Error::DegenerateParameterVector)
        ));
    }

    #[test]
    fn regressors_have_shift_structure_and_are_deterministic() {
        let src = SignalSource::uniform(4.0).unwrap();
        let u1 = generate_regressors(&src, 50, 3, 42).unwrap();
        let u2 = generate_regressors(&src, 50, 3, 42).unwrap();
        assert_eq!(u1, u2);
        for t in 0..49 {
            for i in 0..2 {
                assert_eq!(u1.row(t)[i], u1.row(t + 1)[i + 1]);
            }
        }
    }

    #[test]
    fn regressors_reject_short_records() {
        let src = SignalSource::uniform(1.0).unwrap();
        assert!(matches!(
            generate_regressors(&src, 1, 2, 0),
            Err(Error::InsufficientDataLength { .. })
        ));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn uniform_regressor_statistics() {
        let src = SignalSource::uniform(4.0).unwrap();
        let u = generate_regressors(&src, 10_000, 1, 7).unwrap();
        let mean: f64 = u.mat().data().iter().sum::<f64>() / 10_000.0;
        let three_se = 3.0 * (4.0 / 3f64.sqrt()) / (10_000f64).sqrt();
        assert!(mean.abs() < three_se, "mean {mean} vs 3se {three_se}");

        let u = generate_regressors(&src, 100_000, 2, 11).unwrap();
        let n = u.n_data() as f64;
        let mut cov = [[0.0f64; 2]; 2];
        for t in 0..u.n_data() {
            let r = u.row(t);
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += r[i] * r[j];
                }
            }
        }
        let target = 16.0 / 3.0;
        for i in 0..2 {
            for j in 0..2 {
                let c = cov[i][j] / n;
                let expect = if i == j { target } else { 0.0 };
                assert!((c - expect).abs() < 0.02 * target, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn simulate_without_quantizer_is_exact() {
        let src = SignalSource::normal(1.0).unwrap();
        let u = generate_regressors(&src, 100, 2, 3).unwrap();
        let p = FirParameters::new(vec![1.0, -0.5]).unwrap();
        let out = simulate_output(&u, &p, None, 0.0, 0).unwrap();
        assert!(out.e.iter().all(|&e| e == 0.0));
        assert_eq!(out.y, out.y_o);
    }

    #[test]
    fn simulate_constant_input_quantized() {
        // theta = 2, u = 1 everywhere, uniform mid-rise quantizer on [-8, 8], M = 10
        let u = RegressorMatrix::from_vec(4, 1, vec![1.0; 4]).unwrap();
        let p = FirParameters::new(vec![2.0]).unwrap();
        let q = quantizer::uniform_quantizer(8.0, 10).unwrap();
        let out = simulate_output(&u, &p, Some(&q), 0.0, 0).unwrap();
        assert!(out.y.iter().all(|&v| v == 2.0));
        // y = 2 falls in (1.6, 3.2]; bias-free representative of that cell
        let (a, b) = (1.6, 3.2);
        let rep = (2.0 / 3.0) * (a * a + a * b + b * b) / (a + b);
        for (yq, e) in out.y_q.iter().zip(&out.e) {
            assert!((yq - rep).abs() < 1e-12);
            assert!((e - (rep - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_bounded_output_for_unit_norm_theta() {
        let src = SignalSource::uniform(4.0).unwrap();
        let p = FirParameters::new(vec![3f64.sqrt() / 2.0, 0.5]).unwrap();
        // Assumption 4.1 data: coordinates on the transformed basis are the
        // primitive uniforms, so draw them directly and map back.
        let basis = build_transform(p.theta()).unwrap();
        let phit = generate_regressors_independent(&src, 5_000, 2, 9).unwrap();
        let mut data = Vec::with_capacity(5_000 * 2);
        for t in 0..phit.n_data() {
            let r = phit.row(t);
            for j in 0..2 {
                // phi = phi_tilde T^T -> phi_j = sum_k phi_tilde_k T[j][k]
                data.push(r[0] * basis.t().at(j, 0) + r[1] * basis.t().at(j, 1));
            }
        }
        let u = RegressorMatrix::from_vec(5_000, 2, data).unwrap();
        let out = simulate_output(&u, &p, None, 0.0, 0).unwrap();
        let kappa_y = 4.0 * basis.theta_tilde_1();
        assert!(out.y.iter().all(|&v| v.abs() <= kappa_y + 1e-9));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn transform_regressors_identity_and_norms() {
        let src = SignalSource::uniform(2.0).unwrap();
        let u = generate_regressors(&src, 200, 2, 5).unwrap();
        let b = build_transform(&[1.0, 0.0]).unwrap();
        let ut = transform_regressors(&u, &b).unwrap();
        assert_eq!(u, ut);

        let b = build_transform(&[3f64.sqrt() / 2.0, 0.5]).unwrap();
        let ut = transform_regressors(&u, &b).unwrap();
        for t in 0..u.n_data() {
            let n0 = linalg::norm2(u.row(t));
            let n1 = linalg::norm2(ut.row(t));
            assert!((n0 - n1).abs() < 1e-12);
        }
        // phi tilde_1 is the projection onto theta/||theta||
        let r = u.row(0);
        let expect = r[0] * 3f64.sqrt() / 2.0 + r[1] * 0.5;
        assert!((ut.row(0)[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn output_identity_under_transform() {
        // y = phi theta = phi_tilde theta_tilde per sample
        let src = SignalSource::normal(1.5).unwrap();
        let theta = vec![0.3, -1.2, 0.7];
        let b = build_transform(&theta).unwrap();
        let u = generate_regressors(&src, 300, 3, 21).unwrap();
        let ut = transform_regressors(&u, &b).unwrap();
        let y = u.mat().times(&theta).unwrap();
        for (t, yt) in y.iter().enumerate() {
            let y_tilde = ut.row(t)[0] * b.theta_tilde_1();
            assert!((yt - y_tilde).abs() < 1e-10);
        }
    }

    #[test]
    fn power_law_density_normalizes_and_samples_in_support() {
        let src = SignalSource::power_law(1.0).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..10_000 {
            let x = src.sample(&mut rng);
            assert!(x.abs() <= POWER_LAW_TRUNCATION);
        }
        // c * (2w + 2w(1 - 1/1000)) = 1
        let c = power_law_core_density(1.0);
        assert!((c * (2.0 + 2.0 * (1.0 - 1e-3)) - 1.0).abs() < 1e-12);
    }
}
