//! Maximum-likelihood estimation of the fittable aggregators: the
//! generalized-link GLM, the power-parameter grid search, and the benchmark
//! pools' parameters.

mod optim;

use rayon::prelude::*;

use crate::distributions::{ln_gamma, reg_inc_beta, LinkFamily};
use crate::ensemble::FittedAggregator;
use crate::evaluation::FoldAssignment;
use crate::rng::CounterRng;
use crate::scoring::log_score;
use crate::{Error, Result};
use optim::{maximize, MaximizeOptions, Maximum};

/// Coefficient magnitude at which a fit is declared separated.
const SEPARATION_BOUND: f64 = 1e4;
/// Probability floor used when evaluating log-likelihoods.
const PROB_FLOOR: f64 = 1e-12;

/// Rows of (binary outcome, named expert probability vector); the
/// universal data interchange record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    names: Vec<String>,
    outcomes: Vec<bool>,
    /// n×k row-major report matrix.
    reports: Vec<f64>,
}

impl TrainingSet {
    pub fn new(names: Vec<String>, outcomes: Vec<bool>, reports: Vec<f64>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Schema("at least one expert column is required".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::Schema(format!("duplicate expert column name {a:?}")));
            }
        }
        if reports.len() != outcomes.len() * names.len() {
            return Err(Error::Schema(format!(
                "expected {} report values ({} rows x {} experts), got {}",
                outcomes.len() * names.len(),
                outcomes.len(),
                names.len(),
                reports.len()
            )));
        }
        if outcomes.is_empty() {
            return Err(Error::Schema("training set must be nonempty".into()));
        }
        if outcomes.iter().all(|&y| y) || outcomes.iter().all(|&y| !y) {
            return Err(Error::Schema(
                "training set must contain both outcome classes".into(),
            ));
        }
        for (i, &p) in reports.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Schema(format!(
                    "report value {p} at flat index {i} is not a probability in [0,1]"
                )));
            }
        }
        Ok(TrainingSet { names, outcomes, reports })
    }

    pub fn n(&self) -> usize {
        self.outcomes.len()
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.reports[r * self.k()..(r + 1) * self.k()]
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| {
            Error::Schema(format!("no expert column named {name:?}; have {:?}", self.names))
        })
    }

    /// Base rate ȳ of the outcomes.
    pub fn base_rate(&self) -> f64 {
        self.outcomes.iter().filter(|&&y| y).count() as f64 / self.n() as f64
    }

    /// Restriction to the given rows. Fails if the restriction loses an
    /// outcome class, since nothing can be fit to it.
    pub fn subset(&self, rows: &[usize]) -> Result<TrainingSet> {
        let mut outcomes = Vec::with_capacity(rows.len());
        let mut reports = Vec::with_capacity(rows.len() * self.k());
        for &r in rows {
            if r >= self.n() {
                return Err(Error::Schema(format!("row {r} out of range 0..{}", self.n())));
            }
            outcomes.push(self.outcomes[r]);
            reports.extend_from_slice(self.row(r));
        }
        TrainingSet::new(self.names.clone(), outcomes, reports)
    }
}

/// Optimizer controls shared by every fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Convergence threshold on the gradient infinity norm.
    pub grad_tol: f64,
    pub max_iter: u32,
    /// Number of starting points (deterministic starts first, then seeded
    /// random perturbations).
    pub restarts: u32,
    /// Probabilities are clamped to `[clip, 1-clip]` before any quantile
    /// transform; base models emit exact 0/1.
    pub clip_epsilon: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            grad_tol: 1e-8,
            max_iter: 500,
            restarts: 3,
            clip_epsilon: 1e-9,
            seed: 0,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain(format!(
                "gradient tolerance must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.restarts < 1 {
            return Err(Error::Domain("at least one start is required".into()));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 0.5) {
            return Err(Error::Domain(format!(
                "clip epsilon must lie in (0, 0.5), got {}",
                self.clip_epsilon
            )));
        }
        Ok(())
    }
}

/// Ordered grid of candidate exponential-power parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    etas: Vec<f64>,
}

impl Default for PowerGrid {
    fn default() -> Self {
        PowerGrid {
            etas: vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0, 12.0, 16.0, 25.0, 40.0, 64.0],
        }
    }
}

impl PowerGrid {
    pub fn new(etas: Vec<f64>) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::Domain("power grid must be nonempty".into()));
        }
        for (i, &e) in etas.iter().enumerate() {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::Domain(format!("grid powers must be positive, got {e}")));
            }
            if etas[i + 1..].contains(&e) {
                return Err(Error::Domain(format!("duplicate grid power {e}")));
            }
        }
        Ok(PowerGrid { etas })
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }
}

// ---------------------------------------------------------------------------
// Generalized linear model with a custom link.
// ---------------------------------------------------------------------------

/// Quantile-transform every report: z_rj = F⁻¹(clip(p_rj)).
fn transform_features(link: &LinkFamily, data: &TrainingSet, clip: f64) -> Result<Vec<f64>> {
    let mut z = Vec::with_capacity(data.reports.len());
    for &p in &data.reports {
        let q = link.quantile(p.clamp(clip, 1.0 - clip))?;
        if !q.is_finite() {
            return Err(Error::Domain(format!("transformed feature is not finite at p={p}")));
        }
        z.push(q);
    }
    Ok(z)
}

/// Mean log-likelihood and gradient of the GLM on pre-transformed
/// features, restricted to `rows`. Parameters are `[c, b_1, …, b_k]`.
fn glm_value_grad(
    link: &LinkFamily,
    z: &[f64],
    outcomes: &[bool],
    k: usize,
    rows: &[usize],
    params: &[f64],
) -> (f64, Vec<f64>) {
    let mut ll = 0.0;
    let mut grad = vec![0.0; k + 1];
    for &r in rows {
        let zr = &z[r * k..(r + 1) * k];
        let mut eta = params[0];
        for j in 0..k {
            eta += params[j + 1] * zr[j];
        }
        let fitted = link.cdf(eta).expect("finite linear predictor");
        let fitted = fitted.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        let dens = link.pdf(eta).expect("finite linear predictor");
        let y = outcomes[r];
        ll += if y { fitted.ln() } else { (1.0 - fitted).ln() };
        let resid =
            ((if y { 1.0 } else { 0.0 }) - fitted) * dens / (fitted * (1.0 - fitted));
        grad[0] += resid;
        for j in 0..k {
            grad[j + 1] += resid * zr[j];
        }
    }
    let inv_n = 1.0 / rows.len() as f64;
    for g in grad.iter_mut() {
        *g *= inv_n;
    }
    (ll * inv_n, grad)
}

/// Deterministic start list: all-zero, equal-weight, then seeded uniform
/// perturbations up to `restarts`.
fn starting_points(k: usize, opts: &FitOptions, label: &str) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![0.0; k + 1]];
    if opts.restarts >= 2 {
        let mut equal = vec![0.0; k + 1];
        for b in equal.iter_mut().skip(1) {
            *b = 1.0 / k as f64;
        }
        starts.push(equal);
    }
    let mut rng = CounterRng::new(opts.seed).derive(label);
    for _ in 2..opts.restarts {
        starts.push((0..=k).map(|_| rng.next_f64() - 0.5).collect());
    }
    starts
}

/// Run the maximizer from every start and keep the best converged result.
fn best_of_starts<F>(objective: F, starts: &[Vec<f64>], opts: &FitOptions) -> Result<Maximum>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mopts = MaximizeOptions {
        grad_tol: opts.grad_tol,
        max_iter: opts.max_iter,
        param_bound: SEPARATION_BOUND,
    };
    let mut best_converged: Option<Maximum> = None;
    let mut best_any: Option<Maximum> = None;
    for start in starts {
        let m = maximize(&objective, start, &mopts)?;
        if best_any.as_ref().is_none_or(|b| m.value > b.value) {
            best_any = Some(Maximum {
                x: m.x.clone(),
                value: m.value,
                grad_norm: m.grad_norm,
                converged: m.converged,
            });
        }
        if m.converged && best_converged.as_ref().is_none_or(|b| m.value > b.value) {
            best_converged = Some(m);
        }
    }
    match best_converged {
        Some(m) => Ok(m),
        None => {
            let best = best_any.expect("at least one start");
            Err(Error::Convergence {
                message: format!(
                    "no start converged within {} iterations (best gradient norm {:.3e})",
                    opts.max_iter, best.grad_norm
                ),
                best: best.x,
            })
        }
    }
}

/// Internal GLM fit on pre-transformed features over a row subset.
fn fit_glm_on_rows(
    link: &LinkFamily,
    z: &[f64],
    data: &TrainingSet,
    rows: &[usize],
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let k = data.k();
    let objective =
        |params: &[f64]| glm_value_grad(link, z, data.outcomes(), k, rows, params);
    let starts = starting_points(k, opts, "fit-glm");
    let m = best_of_starts(objective, &starts, opts)?;
    // Separated data flattens the likelihood before the coefficient bound
    // is reached, so probe the fitted ray: at an interior maximum, doubling
    // the parameters strictly lowers the likelihood.
    let doubled: Vec<f64> = m.x.iter().map(|v| 2.0 * v).collect();
    if objective(&doubled).0 > m.value {
        return Err(Error::Separation(format!(
            "likelihood still increases beyond the fitted coefficients \
             (magnitude {:.3}); the outcomes appear separated",
            m.x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
        )));
    }
    log::debug!(
        "glm fit on {} rows converged: ll={:.6}, grad={:.2e}",
        rows.len(),
        m.value,
        m.grad_norm
    );
    Ok(m.x)
}

/// Mean log-likelihood and analytic gradient of the GLM at parameters
/// `[c, b_1, …, b_k]`: the objective surface behind `fit_glm`, exposed for
/// diagnostics and gradient checks.
pub fn glm_objective(
    link: &LinkFamily,
    data: &TrainingSet,
    clip: f64,
    params: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if params.len() != data.k() + 1 {
        return Err(Error::Schema(format!(
            "expected {} parameters (intercept plus one per expert), got {}",
            data.k() + 1,
            params.len()
        )));
    }
    let z = transform_features(link, data, clip)?;
    let rows: Vec<usize> = (0..data.n()).collect();
    Ok(glm_value_grad(link, &z, data.outcomes(), data.k(), &rows, params))
}

/// Maximum-likelihood fit of the generalized linear model
/// y ~ F(c + Σ b_j F⁻¹(p_j)) with the given link family.
pub fn fit_glm(link: &LinkFamily, data: &TrainingSet, opts: &FitOptions) -> Result<FittedAggregator> {
    opts.validate()?;
    let z = transform_features(link, data, opts.clip_epsilon)?;
    let rows: Vec<usize> = (0..data.n()).collect();
    let params = fit_glm_on_rows(link, &z, data, &rows, opts)?;
    let coefficients = data
        .names()
        .iter()
        .cloned()
        .zip(params[1..].iter().copied())
        .collect();
    FittedAggregator::new(*link, params[0], coefficients, opts.clip_epsilon)
}

/// One grid point's out-of-fold result.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub eta: f64,
    /// Mean of per-fold mean log scores; `None` when the point failed.
    pub mean_oof_ls: Option<f64>,
    pub error: Option<String>,
}

/// Outcome of the power-parameter search.
#[derive(Debug, Clone)]
pub struct PowerSelection {
    pub eta_star: f64,
    /// Final model refit on the full data set at `eta_star`.
    pub model: FittedAggregator,
    pub grid: Vec<GridPoint>,
}

/// Cross-validated selection of the exponential-power parameter: fit each
/// grid power on every fold complement, score the held-out folds by mean
/// log score, pick the argmin (ties toward the smaller power), and refit
/// on the full data.
pub fn select_power(
    grid: &PowerGrid,
    data: &TrainingSet,
    folds: &FoldAssignment,
    opts: &FitOptions,
) -> Result<PowerSelection> {
    opts.validate()?;
    if folds.n() != data.n() {
        return Err(Error::Schema(format!(
            "fold assignment covers {} rows but the data has {}",
            folds.n(),
            data.n()
        )));
    }
    let points: Vec<GridPoint> = grid
        .etas()
        .par_iter()
        .map(|&eta| match oof_log_score_at(eta, data, folds, opts) {
            Ok(score) => GridPoint { eta, mean_oof_ls: Some(score), error: None },
            Err(e) => GridPoint { eta, mean_oof_ls: None, error: Some(e.to_string()) },
        })
        .collect();

    let mut best: Option<(f64, f64)> = None; // (eta, score)
    for p in &points {
        if let Some(score) = p.mean_oof_ls {
            let better = match best {
                None => true,
                Some((beta, bscore)) => {
                    score < bscore || (score == bscore && p.eta < beta)
                }
            };
            if better {
                best = Some((p.eta, score));
            }
        }
    }
    let Some((eta_star, _)) = best else {
        let reasons: Vec<String> = points
            .iter()
            .map(|p| format!("eta={}: {}", p.eta, p.error.as_deref().unwrap_or("?")))
            .collect();
        return Err(Error::Convergence {
            message: format!("every grid point failed: {}", reasons.join("; ")),
            best: vec![],
        });
    };
    let link = LinkFamily::exponential_power(eta_star)?;
    let model = fit_glm(&link, data, opts)?;
    Ok(PowerSelection { eta_star, model, grid: points })
}

/// Mean over folds of the held-out mean log score for one power.
fn oof_log_score_at(
    eta: f64,
    data: &TrainingSet,
    folds: &FoldAssignment,
    opts: &FitOptions,
) -> Result<f64> {
    let link = LinkFamily::exponential_power(eta)?;
    let z = transform_features(&link, data, opts.clip_epsilon)?;
    let k = data.k();
    let fold_scores: Vec<Result<f64>> = (0..folds.fold_count())
        .into_par_iter()
        .map(|fold| {
            let train = folds.rows_not_in(fold);
            let test = folds.rows_in(fold);
            let params = fit_glm_on_rows(&link, &z, data, &train, opts)?;
            let mut total = 0.0;
            for &r in &test {
                let zr = &z[r * k..(r + 1) * k];
                let mut lin = params[0];
                for j in 0..k {
                    lin += params[j + 1] * zr[j];
                }
                let p = link
                    .cdf(lin)?
                    .clamp(opts.clip_epsilon, 1.0 - opts.clip_epsilon);
                total += log_score(p, data.outcomes()[r])?;
            }
            Ok(total / test.len() as f64)
        })
        .collect();
    let mut mean = 0.0;
    for s in fold_scores {
        mean += s?;
    }
    Ok(mean / folds.fold_count() as f64)
}

// ---------------------------------------------------------------------------
// Benchmark pool fits.
// ---------------------------------------------------------------------------

fn softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let exps: Vec<f64> = s.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean log-likelihood and gradient of the linear opinion pool under a
/// softmax weight parameterization.
fn olop_value_grad(data: &TrainingSet, s: &[f64]) -> (f64, Vec<f64>) {
    let k = data.k();
    let w = softmax(s);
    let mut ll = 0.0;
    let mut grad_pool = vec![0.0; k];
    for r in 0..data.n() {
        let row = data.row(r);
        let pool: f64 = w.iter().zip(row).map(|(wi, pi)| wi * pi).sum();
        let pool = pool.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        let y = data.outcomes()[r];
        ll += if y { pool.ln() } else { (1.0 - pool).ln() };
        let dpool = ((if y { 1.0 } else { 0.0 }) - pool) / (pool * (1.0 - pool));
        for j in 0..k {
            grad_pool[j] += dpool * w[j] * (row[j] - pool);
        }
    }
    let inv_n = 1.0 / data.n() as f64;
    (ll * inv_n, grad_pool.iter().map(|g| g * inv_n).collect())
}

/// Weights on the probability simplex maximizing the likelihood of the
/// linear opinion pool (softmax reparameterization, quasi-Newton).
pub fn fit_olop(data: &TrainingSet, opts: &FitOptions) -> Result<Vec<f64>> {
    opts.validate()?;
    let k = data.k();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    // The all-zero start is exactly the equal-weight pool, so the fitted
    // likelihood can never fall below it.
    let mut starts = vec![vec![0.0; k]];
    let mut rng = CounterRng::new(opts.seed).derive("fit-olop");
    for _ in 1..opts.restarts {
        starts.push((0..k).map(|_| rng.next_f64() - 0.5).collect());
    }
    let m = best_of_starts(|s| olop_value_grad(data, s), &starts, opts)?;
    Ok(softmax(&m.x))
}

/// Fitted beta-transformed linear opinion pool.
#[derive(Debug, Clone, PartialEq)]
pub struct BlopFit {
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

/// Central difference of the regularized incomplete beta in a shape
/// parameter. The shape derivatives have no workable closed form, so the
/// gradient uses a tight numeric stencil here; the pool derivative stays
/// analytic.
fn inc_beta_shape_derivs(a: f64, b: f64, x: f64) -> (f64, f64) {
    let ha = 1e-5 * a.max(1.0);
    let hb = 1e-5 * b.max(1.0);
    let da = (reg_inc_beta(a + ha, b, x).unwrap_or(f64::NAN)
        - reg_inc_beta(a - ha, b, x).unwrap_or(f64::NAN))
        / (2.0 * ha);
    let db = (reg_inc_beta(a, b + hb, x).unwrap_or(f64::NAN)
        - reg_inc_beta(a, b - hb, x).unwrap_or(f64::NAN))
        / (2.0 * hb);
    (da, db)
}

fn blop_value_grad(data: &TrainingSet, params: &[f64]) -> (f64, Vec<f64>) {
    let k = data.k();
    let w = softmax(&params[..k]);
    let a = params[k].exp();
    let b = params[k + 1].exp();
    if !a.is_finite() || !b.is_finite() || a > 1e6 || b > 1e6 {
        return (f64::NEG_INFINITY, vec![0.0; k + 2]);
    }
    let log_beta_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let mut ll = 0.0;
    let mut grad = vec![0.0; k + 2];
    for r in 0..data.n() {
        let row = data.row(r);
        let pool: f64 = w.iter().zip(row).map(|(wi, pi)| wi * pi).sum();
        let pool = pool.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        let out = reg_inc_beta(a, b, pool).expect("validated parameters");
        let out = out.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        let y = data.outcomes()[r];
        ll += if y { out.ln() } else { (1.0 - out).ln() };
        let dout = ((if y { 1.0 } else { 0.0 }) - out) / (out * (1.0 - out));
        // Beta density: analytic derivative of the transform in the pool.
        let dens =
            ((a - 1.0) * pool.ln() + (b - 1.0) * (1.0 - pool).ln() + log_beta_norm).exp();
        for j in 0..k {
            grad[j] += dout * dens * w[j] * (row[j] - pool);
        }
        let (da, db) = inc_beta_shape_derivs(a, b, pool);
        grad[k] += dout * da * a;
        grad[k + 1] += dout * db * b;
    }
    let inv_n = 1.0 / data.n() as f64;
    (ll * inv_n, grad.iter().map(|g| g * inv_n).collect())
}

/// Joint maximum-likelihood fit of the beta-transformed linear opinion
/// pool: simplex weights plus the two positive shape parameters
/// (log-reparameterized, identity transform a = b = 1 as the start).
pub fn fit_blop(data: &TrainingSet, opts: &FitOptions) -> Result<BlopFit> {
    opts.validate()?;
    let k = data.k();
    let mut starts = vec![vec![0.0; k + 2]];
    let mut rng = CounterRng::new(opts.seed).derive("fit-blop");
    for _ in 1..opts.restarts {
        let mut s: Vec<f64> = (0..k).map(|_| rng.next_f64() - 0.5).collect();
        s.push(0.5 * (rng.next_f64() - 0.5));
        s.push(0.5 * (rng.next_f64() - 0.5));
        starts.push(s);
    }
    let m = best_of_starts(|p| blop_value_grad(data, p), &starts, opts)?;
    Ok(BlopFit {
        weights: softmax(&m.x[..k]),
        a: m.x[k].exp(),
        b: m.x[k + 1].exp(),
    })
}

/// Which one-parameter benchmark to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMethod {
    /// Karmarkar transform of the equal-weight pool.
    Klop,
    /// Logit aggregator with weight a/k per expert.
    Logit,
}

/// One-dimensional MLE of the scalar benchmark parameter by golden-section
/// bracketing and a Newton polish. Both methods reduce to a logistic
/// regression through the origin on a per-row statistic, so the likelihood
/// is concave in `a`.
pub fn fit_scalar(method: ScalarMethod, data: &TrainingSet, opts: &FitOptions) -> Result<f64> {
    opts.validate()?;
    let clip = opts.clip_epsilon;
    let k = data.k() as f64;
    let stats: Vec<f64> = (0..data.n())
        .map(|r| {
            let row = data.row(r);
            match method {
                ScalarMethod::Klop => {
                    let pool = (row.iter().sum::<f64>() / k).clamp(clip, 1.0 - clip);
                    (pool / (1.0 - pool)).ln()
                }
                ScalarMethod::Logit => {
                    row.iter()
                        .map(|&p| {
                            let p = p.clamp(clip, 1.0 - clip);
                            (p / (1.0 - p)).ln()
                        })
                        .sum::<f64>()
                        / k
                }
            }
        })
        .collect();
    let ll = |a: f64| -> f64 {
        let mut total = 0.0;
        for (s, &y) in stats.iter().zip(data.outcomes()) {
            let z = a * s;
            // log σ(z) and log(1−σ(z)) in the stable branch.
            let log_p = if z >= 0.0 { -(1.0 + (-z).exp()).ln() } else { z - (1.0 + z.exp()).ln() };
            let log_q = if z >= 0.0 { -z - (1.0 + (-z).exp()).ln() } else { -(1.0 + z.exp()).ln() };
            total += if y { log_p } else { log_q };
        }
        total / stats.len() as f64
    };

    // Golden-section bracketing on (0, 100].
    let (mut lo, mut hi) = (1e-4f64, 100.0f64);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = ll(x1);
    let mut f2 = ll(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = ll(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = ll(x1);
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    let mut a = 0.5 * (lo + hi);

    // Newton polish with analytic derivatives of the concave likelihood.
    for _ in 0..50 {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (s, &y) in stats.iter().zip(data.outcomes()) {
            let z = a * s;
            let sig = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
            d1 += ((if y { 1.0 } else { 0.0 }) - sig) * s;
            d2 -= sig * (1.0 - sig) * s * s;
        }
        if d2.abs() < 1e-300 {
            break;
        }
        let step = d1 / d2;
        let next = (a - step).clamp(1e-6, 100.0);
        let moved = (next - a).abs();
        a = next;
        if moved < 1e-10 {
            break;
        }
    }
    if !a.is_finite() {
        return Err(Error::Convergence {
            message: "scalar fit produced a non-finite parameter".into(),
            best: vec![a],
        });
    }
    Ok(a)
}

/// Mean in-sample log-likelihood of arbitrary per-row probabilities;
/// shared by the nesting tests and the harness.
pub fn mean_log_likelihood(probs: &[f64], outcomes: &[bool]) -> Result<f64> {
    if probs.len() != outcomes.len() || probs.is_empty() {
        return Err(Error::Schema(format!(
            "{} probabilities vs {} outcomes",
            probs.len(),
            outcomes.len()
        )));
    }
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(outcomes) {
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        total += if y { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total / probs.len() as f64)
}
