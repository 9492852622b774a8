//! Seeded synthetic data generators.
//!
//! Two generators cover the two model families: `Conjugate` draws worlds
//! from a conjugate pair's sampling process (parameter, private and shared
//! samples, event point) and attaches the exact Bayesian aggregate as an
//! oracle column; `Latent` draws jointly normal information states and
//! produces calibrated expert reports through the generalized-ensemble
//! marginals.
//!
//! All randomness flows from one seed through labeled counter-rng
//! substreams; rows are generated from per-row streams so blocks can run
//! concurrently with output order fixed by row index.

use rayon::prelude::*;
use serde::Deserialize;

use crate::conjugate::{self, ConjugatePair, ExpertReports, PairKind, SampleDesign};
use crate::distributions::{reg_inc_beta, reg_lower_gamma, ln_gamma, LinkFamily};
use crate::ensemble::{EnsembleWeights, InformationModel};
use crate::evaluation::LinkSpec;
use crate::fitting::TrainingSet;
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Largest probability strictly below 1 in f64.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// What to simulate.
#[derive(Debug, Clone)]
pub enum Generator {
    Conjugate { pair: ConjugatePair, design: SampleDesign },
    Latent { model: InformationModel, link: LinkFamily },
}

impl Generator {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Generator::Conjugate { .. } => "conjugate",
            Generator::Latent { .. } => "latent",
        }
    }
}

/// A full simulation request.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub generator: Generator,
    pub rows: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(generator: Generator, rows: usize, seed: u64) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Domain("row count must be at least 1".into()));
        }
        if let Generator::Conjugate { pair, design } = &generator {
            if design.shared() > 0
                && matches!(
                    pair.kind(),
                    PairKind::GammaPoisson { .. } | PairKind::GenGammaGumbel { .. }
                )
            {
                return Err(Error::UnsupportedVariant(format!(
                    "{} has no tractable shared-information aggregate; \
                     the oracle column cannot be produced",
                    pair.family_name()
                )));
            }
        }
        Ok(SimConfig { generator, rows, seed })
    }
}

/// Simulated data plus the per-row ground-truth aggregate when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub data: TrainingSet,
    pub oracle: Option<Vec<f64>>,
}

pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    match &config.generator {
        Generator::Conjugate { pair, design } => {
            simulate_conjugate(pair, design, config.rows, config.seed)
        }
        Generator::Latent { model, link } => {
            simulate_latent(model, link, config.rows, config.seed)
        }
    }
}

// ---------------------------------------------------------------------------
// Conjugate-pair generator.
// ---------------------------------------------------------------------------

/// Draw worlds from the pair's sampling process. Each row draws the
/// parameter from the prior, private and shared samples, computes every
/// expert's predictive report, draws the event point, and attaches the
/// exact Bayesian aggregate of the reports.
pub fn simulate_conjugate(
    pair: &ConjugatePair,
    design: &SampleDesign,
    rows: usize,
    seed: u64,
) -> Result<SimOutput> {
    let config = SimConfig::new(
        Generator::Conjugate { pair: *pair, design: design.clone() },
        rows,
        seed,
    )?;
    let (pair, design) = match &config.generator {
        Generator::Conjugate { pair, design } => (pair, design),
        _ => unreachable!(),
    };
    let root = CounterRng::new(seed).derive("simulate-conjugate");
    let k = design.k();
    let (_, tau1) = pair.natural_hyperparameters();

    let per_row: Vec<Result<(bool, Vec<f64>, f64)>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut rng = root.derive_index(r as u64);
            let theta = draw_parameter(pair, &mut rng)?;
            let t_shared = draw_statistic(pair, theta, design.shared(), &mut rng)?;
            let mut reports = Vec::with_capacity(k);
            for i in 0..k {
                let n_i = design.private_sizes()[i];
                let t_i = draw_statistic(pair, theta, n_i, &mut rng)?;
                let p = pair.predictive_prob(n_i + design.shared(), tau1 + t_i + t_shared)?;
                reports.push(p.clamp(f64::MIN_POSITIVE, BELOW_ONE));
            }
            let y = draw_event(pair, theta, &mut rng)?;
            let oracle = conjugate::aggregate(
                pair,
                design,
                &ExpertReports::with_clip(reports.clone(), 1e-12)?,
            )?;
            Ok((y, reports, oracle))
        })
        .collect();

    let mut outcomes = Vec::with_capacity(rows);
    let mut reports = Vec::with_capacity(rows * k);
    let mut oracle = Vec::with_capacity(rows);
    for row in per_row {
        let (y, ps, o) = row?;
        outcomes.push(y);
        reports.extend_from_slice(&ps);
        oracle.push(o);
    }
    let names = (1..=k).map(|i| format!("p_{i}")).collect();
    // Degenerate draws (all one class) are possible for tiny row counts;
    // surface the schema error as-is.
    let data = TrainingSet::new(names, outcomes, reports)?;
    Ok(SimOutput { data, oracle: Some(oracle) })
}

fn draw_parameter(pair: &ConjugatePair, rng: &mut CounterRng) -> Result<f64> {
    Ok(match pair.kind() {
        PairKind::BetaBernoulli { alpha, beta } => beta_quantile(alpha, beta, rng.next_f64())?,
        PairKind::GammaPoisson { alpha, beta } => {
            gamma_quantile(alpha, rng.next_f64())? / beta
        }
        PairKind::NormalNormal { prior_mean, prior_sd, .. } => {
            prior_mean + prior_sd * rng.next_normal()
        }
        PairKind::GenGammaGumbel { alpha, beta, scale } => {
            scale * (gamma_quantile(alpha, rng.next_f64())? / beta).ln()
        }
    })
}

/// Sum of h(x) over `n` fresh observations given the parameter.
fn draw_statistic(pair: &ConjugatePair, theta: f64, n: u32, rng: &mut CounterRng) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..n {
        total += match pair.kind() {
            PairKind::BetaBernoulli { .. } => f64::from(rng.next_f64() < theta),
            PairKind::GammaPoisson { .. } => poisson_draw(theta, rng) as f64,
            PairKind::NormalNormal { obs_sd, .. } => theta + obs_sd * rng.next_normal(),
            // Gumbel observations enter through h(x) = exp(−x/σ), which is
            // exp(−θ/σ) times a unit exponential.
            PairKind::GenGammaGumbel { scale, .. } => {
                (-theta / scale).exp() * -rng.next_f64().ln()
            }
        };
    }
    Ok(total)
}

fn draw_event(pair: &ConjugatePair, theta: f64, rng: &mut CounterRng) -> Result<bool> {
    Ok(match pair.kind() {
        PairKind::BetaBernoulli { .. } => rng.next_f64() < theta,
        PairKind::GammaPoisson { .. } => poisson_draw(theta, rng) == 0,
        PairKind::NormalNormal { obs_sd, .. } => theta + obs_sd * rng.next_normal() > 0.0,
        PairKind::GenGammaGumbel { scale, .. } => {
            let x = theta - scale * (-rng.next_f64().ln()).ln();
            x < 0.0
        }
    })
}

/// Poisson draw by cdf inversion; fine for the moderate rates a gamma
/// prior produces.
fn poisson_draw(rate: f64, rng: &mut CounterRng) -> u64 {
    let u = rng.next_f64();
    let mut pmf = (-rate).exp();
    let mut cdf = pmf;
    let mut value = 0u64;
    let cap = 1000u64.saturating_add((rate * 20.0) as u64);
    while u > cdf && value < cap {
        value += 1;
        pmf *= rate / value as f64;
        cdf += pmf;
    }
    value
}

/// Gamma(shape, 1) quantile by bracketed Newton on the regularized lower
/// incomplete gamma, seeded with the Wilson–Hilferty approximation.
fn gamma_quantile(shape: f64, p: f64) -> Result<f64> {
    let z = crate::distributions::normal_quantile(p)?;
    let wh = 1.0 - 1.0 / (9.0 * shape) + z * (1.0 / (9.0 * shape)).sqrt();
    let mut x = (shape * wh.powi(3)).max(1e-10);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let log_norm = ln_gamma(shape);
    for _ in 0..200 {
        let err = reg_lower_gamma(shape, x)? - p;
        if err == 0.0 {
            break;
        }
        if err > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let log_pdf = (shape - 1.0) * x.ln() - x - log_norm;
        let step = if log_pdf < -700.0 { f64::NAN } else { err / log_pdf.exp() };
        let next = if step.is_finite() { x - step } else { f64::NAN };
        let next = if next.is_finite() && next > lo && next < hi {
            next
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            (x * 2.0).max(1e-8)
        };
        let moved = (next - x).abs();
        x = next;
        if moved < 1e-12 * x.max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Beta(a, b) quantile by bracketed Newton on the regularized incomplete
/// beta.
fn beta_quantile(a: f64, b: f64, p: f64) -> Result<f64> {
    let mut x = (a / (a + b)).clamp(1e-12, 1.0 - 1e-12);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let log_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    for _ in 0..200 {
        let err = reg_inc_beta(a, b, x)? - p;
        if err == 0.0 {
            break;
        }
        if err > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let log_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() + log_norm;
        let step = if log_pdf < -700.0 { f64::NAN } else { err / log_pdf.exp() };
        let next = x - step;
        let next = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        let moved = (next - x).abs();
        x = next;
        if moved < 1e-13 || hi - lo < 1e-15 {
            break;
        }
    }
    Ok(x.clamp(f64::MIN_POSITIVE, BELOW_ONE))
}

// ---------------------------------------------------------------------------
// Latent information-state generator.
// ---------------------------------------------------------------------------

/// Prior-predictive event probability of the latent model under the
/// moment-matched link: F(m₀ / √(1 + v₀ / Var(F))).
pub fn latent_prior_predictive(model: &InformationModel, link: &LinkFamily) -> Result<f64> {
    let weights = model.derive_weights()?;
    link.cdf(weights.m0 / (1.0 + weights.v0 / link.variance()).sqrt())
}

/// Expert i's calibrated report given their information state, through the
/// moment-matched marginal of the generalized ensemble.
fn latent_report(
    weights: &EnsembleWeights,
    model: &InformationModel,
    link: &LinkFamily,
    link_var: f64,
    i: usize,
    x_i: f64,
) -> Result<f64> {
    let u = weights.m0
        + model.coefficients()[i] * (x_i - model.means()[i]) / weights.beta[i];
    link.cdf(u / (1.0 + weights.v[i] / link_var).sqrt())
}

/// Draw jointly normal information states, report each expert's calibrated
/// probability, and draw the event from the generalized linear model.
pub fn simulate_latent(
    model: &InformationModel,
    link: &LinkFamily,
    rows: usize,
    seed: u64,
) -> Result<SimOutput> {
    if rows == 0 {
        return Err(Error::Domain("row count must be at least 1".into()));
    }
    let k = model.k();
    let weights = model.derive_weights()?;
    let link_var = link.variance();
    let chol = model.cholesky_factor();
    let root = CounterRng::new(seed).derive("simulate-latent");

    let per_row: Vec<Result<(bool, Vec<f64>)>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut rng = root.derive_index(r as u64);
            let std: Vec<f64> = (0..k).map(|_| rng.next_normal()).collect();
            let mut states = vec![0.0; k];
            for i in 0..k {
                let mut acc = model.means()[i];
                for j in 0..=i {
                    acc += chol[i * k + j] * std[j];
                }
                states[i] = acc;
            }
            let mut reports = Vec::with_capacity(k);
            for i in 0..k {
                let p = latent_report(&weights, model, link, link_var, i, states[i])?;
                reports.push(p.clamp(f64::MIN_POSITIVE, BELOW_ONE));
            }
            let lin = model.intercept()
                + model.coefficients().iter().zip(&states).map(|(a, x)| a * x).sum::<f64>();
            let y = rng.next_f64() < link.cdf(lin)?;
            Ok((y, reports))
        })
        .collect();

    let mut outcomes = Vec::with_capacity(rows);
    let mut reports = Vec::with_capacity(rows * k);
    for row in per_row {
        let (y, ps) = row?;
        outcomes.push(y);
        reports.extend_from_slice(&ps);
    }
    let names = (1..=k).map(|i| format!("p_{i}")).collect();
    let data = TrainingSet::new(names, outcomes, reports)?;
    Ok(SimOutput { data, oracle: None })
}

// ---------------------------------------------------------------------------
// Config documents.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct ConfigDoc {
    generator: GeneratorDoc,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum GeneratorDoc {
    Conjugate { pair: PairDoc, design: DesignDoc },
    Latent { model: ModelDoc, link: LinkSpec },
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum PairDoc {
    BetaBernoulli { alpha: f64, beta: f64 },
    GammaPoisson { alpha: f64, beta: f64 },
    NormalNormal { prior_mean: f64, prior_sd: f64, obs_sd: f64 },
    GenGammaGumbel { alpha: f64, beta: f64, scale: f64 },
}

#[derive(Deserialize)]
struct DesignDoc {
    private: Vec<u32>,
    #[serde(default)]
    shared: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelDoc {
    Exchangeable {
        k: usize,
        #[serde(default)]
        mean: f64,
        variance: f64,
        rho: f64,
        #[serde(default)]
        alpha0: f64,
        alpha: f64,
    },
    General {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
        alpha0: f64,
        alpha: Vec<f64>,
    },
}

/// Parse a generator description from JSON:
///
/// ```json
/// { "generator": { "type": "conjugate",
///                  "pair": { "family": "beta_bernoulli", "alpha": 1, "beta": 1 },
///                  "design": { "private": [2, 2], "shared": 0 } } }
/// ```
///
/// or, for the latent generator, a `model` (exchangeable or general) plus a
/// `link`.
pub fn generator_from_json(text: &str) -> Result<Generator> {
    let doc: ConfigDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    match doc.generator {
        GeneratorDoc::Conjugate { pair, design } => {
            let pair = match pair {
                PairDoc::BetaBernoulli { alpha, beta } => {
                    ConjugatePair::beta_bernoulli(alpha, beta)?
                }
                PairDoc::GammaPoisson { alpha, beta } => {
                    ConjugatePair::gamma_poisson(alpha, beta)?
                }
                PairDoc::NormalNormal { prior_mean, prior_sd, obs_sd } => {
                    ConjugatePair::normal_normal(prior_mean, prior_sd, obs_sd)?
                }
                PairDoc::GenGammaGumbel { alpha, beta, scale } => {
                    ConjugatePair::gen_gamma_gumbel(alpha, beta, scale)?
                }
            };
            let design = SampleDesign::new(design.private, design.shared)?;
            Ok(Generator::Conjugate { pair, design })
        }
        GeneratorDoc::Latent { model, link } => {
            let model = match model {
                ModelDoc::Exchangeable { k, mean, variance, rho, alpha0, alpha } => {
                    InformationModel::exchangeable(k, mean, variance, rho, alpha0, alpha)?
                }
                ModelDoc::General { mu, sigma, alpha0, alpha } => {
                    let k = mu.len();
                    let mut flat = Vec::with_capacity(k * k);
                    for row in &sigma {
                        if row.len() != k {
                            return Err(Error::Schema(format!(
                                "covariance rows must have length {k}"
                            )));
                        }
                        flat.extend_from_slice(row);
                    }
                    InformationModel::new(mu, flat, alpha0, alpha)?
                }
            };
            Ok(Generator::Latent { model, link: link.to_link()? })
        }
    }
}
