//! Conjugate prior/likelihood pairs and their closed-form Bayesian
//! aggregators.
//!
//! Each pair defines a predictive generating function `F_n(t)` mapping a
//! sample size and a sufficient statistic to an event probability. Experts
//! report probabilities computed from their private (and possibly shared)
//! samples; the aggregators invert those reports back into sufficient
//! statistics, combine them, and map the combination back to probability
//! space. With private information only the aggregate is
//!
//! ```text
//! F_{N_k}( -(k-1) F_0^{-1}(p_0) + Σ_i F_{n_i}^{-1}(p_i) )
//! ```
//!
//! With shared information the aggregate averages that form over the
//! posterior of the shared statistic: exactly (finite enumeration) for the
//! Bernoulli pair, in closed form and by quadrature for the normal pair.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::distributions::{normal_cdf, normal_quantile};
use crate::linalg;
use crate::{Error, Result};

/// One of the four supported conjugate prior/likelihood families, with its
/// fixed event-occurrence set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugatePair {
    kind: PairKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PairKind {
    /// Bernoulli likelihood, Beta(α, β) prior; the event is x = 1.
    BetaBernoulli { alpha: f64, beta: f64 },
    /// Poisson likelihood, Gamma(α, β) prior; the event is x = 0.
    GammaPoisson { alpha: f64, beta: f64 },
    /// Normal likelihood with known sd, normal prior; the event is x > 0.
    NormalNormal { prior_mean: f64, prior_sd: f64, obs_sd: f64 },
    /// Gumbel likelihood with known scale, generalized-gamma prior
    /// (exp(θ/σ) ~ Gamma(α, β)); the event is x < 0.
    GenGammaGumbel { alpha: f64, beta: f64, scale: f64 },
}

fn require_positive(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Domain(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

impl ConjugatePair {
    pub fn beta_bernoulli(alpha: f64, beta: f64) -> Result<Self> {
        require_positive(alpha, "alpha")?;
        require_positive(beta, "beta")?;
        Ok(ConjugatePair { kind: PairKind::BetaBernoulli { alpha, beta } })
    }

    pub fn gamma_poisson(alpha: f64, beta: f64) -> Result<Self> {
        require_positive(alpha, "alpha")?;
        require_positive(beta, "beta")?;
        Ok(ConjugatePair { kind: PairKind::GammaPoisson { alpha, beta } })
    }

    pub fn normal_normal(prior_mean: f64, prior_sd: f64, obs_sd: f64) -> Result<Self> {
        if !prior_mean.is_finite() {
            return Err(Error::Domain(format!("prior mean must be finite, got {prior_mean}")));
        }
        require_positive(prior_sd, "prior sd")?;
        require_positive(obs_sd, "observation sd")?;
        Ok(ConjugatePair { kind: PairKind::NormalNormal { prior_mean, prior_sd, obs_sd } })
    }

    pub fn gen_gamma_gumbel(alpha: f64, beta: f64, scale: f64) -> Result<Self> {
        require_positive(alpha, "alpha")?;
        require_positive(beta, "beta")?;
        require_positive(scale, "scale")?;
        Ok(ConjugatePair { kind: PairKind::GenGammaGumbel { alpha, beta, scale } })
    }

    pub(crate) fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind {
            PairKind::BetaBernoulli { .. } => "beta_bernoulli",
            PairKind::GammaPoisson { .. } => "gamma_poisson",
            PairKind::NormalNormal { .. } => "normal_normal",
            PairKind::GenGammaGumbel { .. } => "gen_gamma_gumbel",
        }
    }

    /// Natural hyperparameters (τ0, τ1) of the conjugate prior.
    pub fn natural_hyperparameters(&self) -> (f64, f64) {
        match self.kind {
            PairKind::BetaBernoulli { alpha, beta } => (alpha + beta - 2.0, alpha - 1.0),
            PairKind::GammaPoisson { alpha, beta } => (beta, alpha - 1.0),
            PairKind::NormalNormal { prior_mean, prior_sd, obs_sd } => {
                let ratio = obs_sd * obs_sd / (prior_sd * prior_sd);
                (ratio, ratio * prior_mean)
            }
            PairKind::GenGammaGumbel { alpha, beta, .. } => (alpha, beta),
        }
    }

    /// Everyone's prior-predictive event probability `p_0 = F_0(τ1)`.
    pub fn prior_predictive(&self) -> f64 {
        let (_, tau1) = self.natural_hyperparameters();
        self.predictive_prob(0, tau1)
            .expect("tau1 is always inside the prior-predictive domain")
    }

    /// Open domain of the sufficient statistic accepted by `F_n`.
    pub fn statistic_bounds(&self, n: u32) -> (f64, f64) {
        match self.kind {
            PairKind::BetaBernoulli { alpha, beta } => (-1.0, alpha + beta + n as f64 - 1.0),
            PairKind::GammaPoisson { .. } => (-1.0, f64::INFINITY),
            PairKind::NormalNormal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            PairKind::GenGammaGumbel { .. } => (0.0, f64::INFINITY),
        }
    }

    /// The predictive generating function `F_n(t)`.
    ///
    /// `t` is the full sufficient-statistic argument, i.e. τ1 plus the
    /// sample's statistic. Strictly monotone in `t` on its domain.
    pub fn predictive_prob(&self, n: u32, t: f64) -> Result<f64> {
        let (lo, hi) = self.statistic_bounds(n);
        if !t.is_finite() || t <= lo || t >= hi {
            return Err(Error::Domain(format!(
                "statistic {t} outside the open domain ({lo}, {hi}) of {} with n={n}",
                self.family_name()
            )));
        }
        Ok(match self.kind {
            PairKind::BetaBernoulli { alpha, beta } => (t + 1.0) / (alpha + beta + n as f64),
            PairKind::GammaPoisson { alpha: _, beta } => {
                let v = log_ratio(beta, n);
                (v * (t + 1.0)).exp()
            }
            PairKind::NormalNormal { .. } => normal_cdf(t / self.normal_vn(n).sqrt()),
            PairKind::GenGammaGumbel { alpha, .. } => {
                (t / (1.0 + t)).powf(alpha + n as f64)
            }
        })
    }

    /// Inverse of `predictive_prob` in `t`: recovers the sufficient
    /// statistic implied by a reported probability.
    pub fn predictive_inverse(&self, n: u32, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "predictive inverse requires p strictly inside (0,1), got {p}"
            )));
        }
        Ok(match self.kind {
            PairKind::BetaBernoulli { alpha, beta } => (alpha + beta + n as f64) * p - 1.0,
            PairKind::GammaPoisson { alpha: _, beta } => p.ln() / log_ratio(beta, n) - 1.0,
            PairKind::NormalNormal { .. } => self.normal_vn(n).sqrt() * normal_quantile(p)?,
            PairKind::GenGammaGumbel { alpha, .. } => {
                let r = p.powf(1.0 / (alpha + n as f64));
                r / (1.0 - r)
            }
        })
    }

    /// `v_n = (σ²/σ0² + n)(σ²/σ0² + n + 1)σ²` for the normal/normal pair.
    fn normal_vn(&self, n: u32) -> f64 {
        match self.kind {
            PairKind::NormalNormal { prior_sd, obs_sd, .. } => {
                let ratio = obs_sd * obs_sd / (prior_sd * prior_sd);
                (ratio + n as f64) * (ratio + n as f64 + 1.0) * obs_sd * obs_sd
            }
            _ => unreachable!("normal_vn is only defined for the normal/normal pair"),
        }
    }
}

/// `v_n = log((β+n)/(β+n+1))` for the gamma/Poisson pair (negative).
fn log_ratio(beta: f64, n: u32) -> f64 {
    ((beta + n as f64) / (beta + n as f64 + 1.0)).ln()
}

/// Sample sizes of the information structure: each expert's private sample
/// and the sample shared by all experts but unseen by the decision maker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleDesign {
    private: Vec<u32>,
    shared: u32,
}

impl SampleDesign {
    pub fn new(private: Vec<u32>, shared: u32) -> Result<Self> {
        if private.is_empty() {
            return Err(Error::Domain("at least one expert is required".into()));
        }
        if let Some(&bad) = private.iter().find(|&&n| n == 0) {
            return Err(Error::Domain(format!(
                "private sample sizes must be at least 1, got {bad}"
            )));
        }
        Ok(SampleDesign { private, shared })
    }

    pub fn k(&self) -> usize {
        self.private.len()
    }

    pub fn private_sizes(&self) -> &[u32] {
        &self.private
    }

    pub fn shared(&self) -> u32 {
        self.shared
    }

    /// Total private sample size N_k.
    pub fn total_private(&self) -> u32 {
        self.private.iter().sum()
    }
}

/// Expert probability reports, clipped strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertReports {
    probs: Vec<f64>,
}

impl ExpertReports {
    pub const DEFAULT_CLIP: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_clip(probs, Self::DEFAULT_CLIP)
    }

    /// Clip incoming probabilities to `[clip, 1 - clip]` before use; the
    /// predictive inverses diverge at the endpoints.
    pub fn with_clip(probs: Vec<f64>, clip: f64) -> Result<Self> {
        if !(clip > 0.0 && clip < 0.5) {
            return Err(Error::Domain(format!("clip must lie in (0, 0.5), got {clip}")));
        }
        if probs.is_empty() {
            return Err(Error::Domain("at least one report is required".into()));
        }
        let mut clipped = Vec::with_capacity(probs.len());
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "report {i} must be a probability in [0,1], got {p}"
                )));
            }
            clipped.push(p.clamp(clip, 1.0 - clip));
        }
        Ok(ExpertReports { probs: clipped })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The average forecast p̄.
    pub fn mean(&self) -> f64 {
        self.probs.iter().sum::<f64>() / self.probs.len() as f64
    }
}

/// What to do when a combined statistic exits the predictive function's
/// domain: reject (default) or clamp just inside the boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DomainPolicy {
    /// Raise `Error::InfeasibleReports`; out-of-domain reports contradict
    /// the declared information structure.
    #[default]
    Strict,
    /// Clamp the statistic to just inside the domain. Exploratory use only.
    ClampToEpsilon,
}

fn check_call(pair: &ConjugatePair, design: &SampleDesign, reports: &ExpertReports) -> Result<()> {
    let _ = pair;
    if design.k() != reports.len() {
        return Err(Error::Schema(format!(
            "design has {} experts but {} reports were supplied",
            design.k(),
            reports.len()
        )));
    }
    Ok(())
}

fn apply_domain(
    pair: &ConjugatePair,
    n: u32,
    stat: f64,
    policy: DomainPolicy,
) -> Result<f64> {
    let (lo, hi) = pair.statistic_bounds(n);
    if stat > lo && stat < hi {
        return Ok(stat);
    }
    match policy {
        DomainPolicy::Strict => Err(Error::InfeasibleReports(format!(
            "combined statistic {stat} violates the open bound ({lo}, {hi}) of {} with n={n}; \
             the reports are inconsistent with the declared information structure",
            pair.family_name()
        ))),
        DomainPolicy::ClampToEpsilon => {
            let span = if hi.is_finite() && lo.is_finite() { hi - lo } else { 1.0 };
            let eps = 1e-9 * span.max(1.0);
            Ok(stat.clamp(lo + eps, hi - eps))
        }
    }
}

/// Private-information-only Bayesian aggregate (strict domain policy).
pub fn aggregate_private(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<f64> {
    aggregate_private_with(pair, design, reports, DomainPolicy::Strict)
}

/// Private-information-only Bayesian aggregate with an explicit domain
/// policy.
pub fn aggregate_private_with(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
    policy: DomainPolicy,
) -> Result<f64> {
    check_call(pair, design, reports)?;
    if design.shared() != 0 {
        return Err(Error::Domain(
            "private-only aggregation requires a design with no shared sample".into(),
        ));
    }
    let k = design.k();
    if k == 1 {
        // A single calibrated expert's forecast is adopted unchanged.
        return Ok(reports.probs()[0]);
    }
    let (_, tau1) = pair.natural_hyperparameters();
    let mut inner = -((k - 1) as f64) * tau1;
    for (i, &p) in reports.probs().iter().enumerate() {
        inner += pair.predictive_inverse(design.private_sizes()[i], p)?;
    }
    let inner = apply_domain(pair, design.total_private(), inner, policy)?;
    pair.predictive_prob(design.total_private(), inner)
}

/// The aggregate conditional on a known shared-sample statistic `t_s`:
/// the integrand of the shared-information ensemble.
pub fn aggregate_given_shared(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
    shared_stat: f64,
) -> Result<f64> {
    aggregate_given_shared_with(pair, design, reports, shared_stat, DomainPolicy::Strict)
}

pub fn aggregate_given_shared_with(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
    shared_stat: f64,
    policy: DomainPolicy,
) -> Result<f64> {
    check_call(pair, design, reports)?;
    let k = design.k();
    let ns = design.shared();
    let (_, tau1) = pair.natural_hyperparameters();
    let mut inner = -((k - 1) as f64) * (tau1 + shared_stat);
    for (i, &p) in reports.probs().iter().enumerate() {
        inner += pair.predictive_inverse(design.private_sizes()[i] + ns, p)?;
    }
    let n_total = design.total_private() + ns;
    let inner = apply_domain(pair, n_total, inner, policy)?;
    pair.predictive_prob(n_total, inner)
}

/// Conditional mean and variance of the shared statistic given the
/// reports, for the normal/normal pair (partitioned-Gaussian identities).
struct SharedMoments {
    /// τ1 + Σ_i (t_i + t_s) — the linear statistic of the reports.
    linear: f64,
    mean: f64,
    variance: f64,
}

fn normal_shared_moments(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<SharedMoments> {
    let (theta0, sigma0, sigma) = match pair.kind() {
        PairKind::NormalNormal { prior_mean, prior_sd, obs_sd } => (prior_mean, prior_sd, obs_sd),
        _ => {
            return Err(Error::UnsupportedVariant(format!(
                "shared-information aggregation in closed form requires the normal/normal pair, \
                 got {}",
                pair.family_name()
            )))
        }
    };
    let k = design.k();
    let ns = design.shared() as f64;
    let (_, tau1) = pair.natural_hyperparameters();
    let s2 = sigma * sigma;
    let s02 = sigma0 * sigma0;

    // Observed statistics o_i = t_i + t_s deduced from the reports.
    let mut observed = Vec::with_capacity(k);
    for (i, &p) in reports.probs().iter().enumerate() {
        let full = pair.predictive_inverse(design.private_sizes()[i] + design.shared(), p)?;
        observed.push(full - tau1);
    }
    let linear = tau1 + observed.iter().sum::<f64>();

    if design.shared() == 0 {
        // Degenerate shared sample: point mass at zero.
        return Ok(SharedMoments { linear, mean: 0.0, variance: 0.0 });
    }

    // Moments of (t_s, t_1 + t_s, …, t_k + t_s).
    let m_s = ns * theta0;
    let m: Vec<f64> =
        (0..k).map(|i| (design.private_sizes()[i] as f64 + ns) * theta0).collect();
    let mut v22 = vec![0.0; k * k];
    for i in 0..k {
        let ni = design.private_sizes()[i] as f64;
        for j in 0..k {
            let nj = design.private_sizes()[j] as f64;
            v22[i * k + j] = if i == j {
                (ni + ns) * s2 + (ni + ns) * (ni + ns) * s02
            } else {
                ns * s2 + (ni * nj + ni * ns + ns * nj + ns * ns) * s02
            };
        }
    }
    let v12: Vec<f64> = (0..k)
        .map(|j| ns * s2 + (ns * design.private_sizes()[j] as f64 + ns * ns) * s02)
        .collect();
    let v11 = ns * s2 + ns * ns * s02;

    let chol = linalg::cholesky(&v22, k)?;
    let centered: Vec<f64> = (0..k).map(|i| observed[i] - m[i]).collect();
    let sol_obs = linalg::cholesky_solve(&chol, k, &centered);
    let sol_v12 = linalg::cholesky_solve(&chol, k, &v12);

    let mean = m_s + v12.iter().zip(&sol_obs).map(|(a, b)| a * b).sum::<f64>();
    let variance =
        (v11 - v12.iter().zip(&sol_v12).map(|(a, b)| a * b).sum::<f64>()).max(0.0);
    Ok(SharedMoments { linear, mean, variance })
}

/// Shared-information aggregate for the normal/normal pair, in closed form.
pub fn aggregate_shared_normal(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<f64> {
    check_call(pair, design, reports)?;
    let k = design.k();
    if k == 1 {
        if let PairKind::NormalNormal { .. } = pair.kind() {
            return Ok(reports.probs()[0]);
        }
    }
    let moments = normal_shared_moments(pair, design, reports)?;
    let v_total = pair.normal_vn(design.total_private() + design.shared());
    let km1 = (k - 1) as f64;
    let numer = moments.linear - km1 * moments.mean;
    let denom = (km1 * km1 * moments.variance + v_total).sqrt();
    Ok(normal_cdf(numer / denom))
}

/// Default Gauss–Hermite node count for the quadrature route.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Shared-information aggregate for the normal/normal pair by
/// Gauss–Hermite quadrature of the generic integrand against the Gaussian
/// conditional density of the shared statistic. Serves as the independent
/// numeric route against the closed form.
pub fn aggregate_shared_quadrature(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<f64> {
    aggregate_shared_quadrature_with(pair, design, reports, DEFAULT_QUADRATURE_NODES)
}

pub fn aggregate_shared_quadrature_with(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
    nodes: usize,
) -> Result<f64> {
    check_call(pair, design, reports)?;
    if nodes < 2 {
        return Err(Error::Domain(format!("quadrature needs at least 2 nodes, got {nodes}")));
    }
    let moments = normal_shared_moments(pair, design, reports)?;
    if moments.variance <= 1e-13 {
        // Point mass (n_s = 0 or perfectly pinned statistic).
        return aggregate_given_shared(pair, design, reports, moments.mean);
    }
    let (xs, ws) = gauss_hermite(nodes);
    let scale = (2.0 * moments.variance).sqrt();
    let mut acc = 0.0;
    for (&x, &w) in xs.iter().zip(&ws) {
        let t_s = moments.mean + scale * x;
        acc += w * aggregate_given_shared(pair, design, reports, t_s)?;
    }
    Ok(acc / std::f64::consts::PI.sqrt())
}

/// Gauss–Hermite nodes and weights for ∫ f(x) e^{−x²} dx ≈ Σ w_i f(x_i).
/// Newton refinement on the orthonormal Hermite recurrence.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let pi_m4 = std::f64::consts::PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt()
                - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * xs[0],
            3 => 1.91 * z - 0.91 * xs[1],
            _ => 2.0 * z - xs[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pi_m4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-14 {
                break;
            }
        }
        xs[i] = z;
        xs[n - 1 - i] = -z;
        ws[i] = 2.0 / (pp * pp);
        ws[n - 1 - i] = ws[i];
    }
    (xs, ws)
}

// ---------------------------------------------------------------------------
// Exact enumeration for the Bernoulli pair (rational arithmetic).
// ---------------------------------------------------------------------------

fn big_binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k {
        num *= BigInt::from(n - j);
        den *= BigInt::from(j + 1);
    }
    num / den
}

/// Marginal probability of one specific exchangeable Bernoulli sequence
/// with `s` successes and `f` failures under a Beta(α, β) prior:
/// Π_{j<s}(α+j) · Π_{j<f}(β+j) / Π_{j<s+f}(α+β+j).
fn sequence_prob(alpha: &BigRational, beta: &BigRational, s: u32, f: u32) -> BigRational {
    let mut value = BigRational::one();
    for j in 0..s {
        value *= alpha + BigRational::from(BigInt::from(j));
    }
    for j in 0..f {
        value *= beta + BigRational::from(BigInt::from(j));
    }
    let ab = alpha + beta;
    for j in 0..(s + f) {
        value /= &ab + BigRational::from(BigInt::from(j));
    }
    value
}

struct BernoulliSetup {
    alpha: BigRational,
    beta: BigRational,
    /// Deduced integer statistics o_i = t_i + t_s.
    observed: Vec<u32>,
}

fn bernoulli_setup(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<BernoulliSetup> {
    let (alpha_f, beta_f) = match pair.kind() {
        PairKind::BetaBernoulli { alpha, beta } => (alpha, beta),
        _ => {
            return Err(Error::UnsupportedVariant(format!(
                "exact enumeration requires the Bernoulli pair, got {}",
                pair.family_name()
            )))
        }
    };
    let ns = design.shared();
    let mut observed = Vec::with_capacity(design.k());
    for (i, &p) in reports.probs().iter().enumerate() {
        let n = design.private_sizes()[i] + ns;
        // o_i = (α + β + n) p − α.
        let raw = (alpha_f + beta_f + n as f64) * p - alpha_f;
        let rounded = raw.round();
        if (raw - rounded).abs() > 1e-9 {
            return Err(Error::InfeasibleReports(format!(
                "report {p} for expert {i} implies the non-integer statistic {raw}; \
                 no sample of size {n} can produce it"
            )));
        }
        if rounded < 0.0 || rounded > n as f64 {
            return Err(Error::InfeasibleReports(format!(
                "report {p} for expert {i} implies statistic {rounded}, outside 0..={n}"
            )));
        }
        observed.push(rounded as u32);
    }
    let alpha = BigRational::from_float(alpha_f)
        .ok_or_else(|| Error::Domain("alpha is not finite".into()))?;
    let beta = BigRational::from_float(beta_f)
        .ok_or_else(|| Error::Domain("beta is not finite".into()))?;
    Ok(BernoulliSetup { alpha, beta, observed })
}

/// Shared statistics consistent with expert `i`'s deduced value.
fn feasible_range(observed: u32, n_i: u32, ns: u32) -> (u32, u32) {
    let lo = observed.saturating_sub(n_i);
    let hi = observed.min(ns);
    (lo, hi)
}

/// Shared-information aggregate for the Bernoulli pair by exact
/// enumeration over the finite support of the shared statistic.
///
/// When the constraints deduced from all reports admit a common shared
/// statistic, the conditional is exact over that joint support. When they
/// are mutually exclusive (reports can be individually valid yet jointly
/// impossible), constraints are applied in expert order and a constraint
/// that would empty the support is dropped: expert 1's deduction pins the
/// shared statistic and later reports enter only through the linear
/// statistic, which is how the point-mass shared-information formula
/// extends to every report pair.
pub fn aggregate_shared_enumerate(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<f64> {
    check_call(pair, design, reports)?;
    if design.shared() == 0 {
        return aggregate_private(pair, design, reports);
    }
    let setup = bernoulli_setup(pair, design, reports)?;
    let ns = design.shared();
    let k = design.k();

    // Sequential intersection of per-expert feasibility intervals.
    let mut lo = 0u32;
    let mut hi = ns;
    let mut kept = Vec::with_capacity(k);
    for i in 0..k {
        let (l, h) = feasible_range(setup.observed[i], design.private_sizes()[i], ns);
        let nl = lo.max(l);
        let nh = hi.min(h);
        if nl <= nh {
            lo = nl;
            hi = nh;
            kept.push(i);
        }
    }

    let total: u32 = setup.observed.iter().sum();
    let n_all = design.total_private() + ns;
    let denom_pool = &setup.alpha + &setup.beta + BigRational::from(BigInt::from(n_all));

    let mut weight_sum = BigRational::zero();
    let mut value_sum = BigRational::zero();
    for v in lo..=hi {
        // Joint probability of (t_s = v, kept experts' statistics).
        let mut count = big_binomial(ns, v);
        let mut successes = v;
        let mut seen = ns;
        for &i in &kept {
            count *= big_binomial(design.private_sizes()[i], setup.observed[i] - v);
            successes += setup.observed[i] - v;
            seen += design.private_sizes()[i];
        }
        let weight = BigRational::from(count)
            * sequence_prob(&setup.alpha, &setup.beta, successes, seen - successes);
        if weight.is_zero() {
            continue;
        }
        // F_{N_k + n_s}(τ1 + Σ o_i − (k−1) v) = (α + Σ o_i − (k−1) v) / (α + β + N).
        let numer = &setup.alpha + BigRational::from(BigInt::from(total))
            - BigRational::from(BigInt::from((k as u32 - 1) * v));
        let value = numer / denom_pool.clone();
        if value <= BigRational::zero() || value >= BigRational::one() {
            return Err(Error::InfeasibleReports(format!(
                "aggregate statistic {} exits (0,1) for {} experts with shared statistic {v}",
                value.to_f64().unwrap_or(f64::NAN),
                k
            )));
        }
        value_sum += &weight * value;
        weight_sum += weight;
    }
    if weight_sum.is_zero() {
        return Err(Error::InfeasibleReports(
            "no shared statistic is consistent with any report".into(),
        ));
    }
    (value_sum / weight_sum)
        .to_f64()
        .ok_or_else(|| Error::Domain("rational result does not fit in f64".into()))
}

/// Enumeration bound for the exact oracle: total observed points.
pub const ORACLE_MAX_POINTS: u32 = 25;

/// Ground-truth posterior probability for the Bernoulli pair by direct
/// Bayes over every sample configuration of the information structure.
/// Exact rational arithmetic; independent of the predictive-function
/// aggregators it is used to check.
pub fn exact_posterior_oracle(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<f64> {
    check_call(pair, design, reports)?;
    let total_points = design.total_private() + design.shared();
    if total_points > ORACLE_MAX_POINTS {
        return Err(Error::EnumerationBound(format!(
            "oracle supports at most {ORACLE_MAX_POINTS} observed points, got {total_points}"
        )));
    }
    let setup = bernoulli_setup(pair, design, reports)?;
    let ns = design.shared();
    let k = design.k();

    // Joint support: shared statistics consistent with every expert.
    let mut lo = 0u32;
    let mut hi = ns;
    for i in 0..k {
        let (l, h) = feasible_range(setup.observed[i], design.private_sizes()[i], ns);
        lo = lo.max(l);
        hi = hi.min(h);
        if lo > hi {
            return Err(Error::InfeasibleReports(format!(
                "expert {i}'s deduced statistic {} is jointly impossible with earlier reports",
                setup.observed[i]
            )));
        }
    }

    let mut numer = BigRational::zero();
    let mut denom = BigRational::zero();
    for v in lo..=hi {
        let mut count = big_binomial(ns, v);
        let mut successes = v;
        for i in 0..k {
            count *= big_binomial(design.private_sizes()[i], setup.observed[i] - v);
            successes += setup.observed[i] - v;
        }
        if count.is_zero() {
            continue;
        }
        let failures = total_points - successes;
        let base = BigRational::from(count);
        // Observed sequence plus the event point as a success / in total.
        numer += &base * sequence_prob(&setup.alpha, &setup.beta, successes + 1, failures);
        denom += &base * sequence_prob(&setup.alpha, &setup.beta, successes, failures);
    }
    if denom.is_zero() {
        return Err(Error::InfeasibleReports(
            "reports have zero probability under the information structure".into(),
        ));
    }
    (numer / denom)
        .to_f64()
        .ok_or_else(|| Error::Domain("rational result does not fit in f64".into()))
}

/// Dispatch to the appropriate Bayesian aggregate for the design: the
/// private-only form when nothing is shared, otherwise the exact
/// enumeration (Bernoulli) or the closed normal form. Other pairs have no
/// tractable shared-information aggregate.
pub fn aggregate(
    pair: &ConjugatePair,
    design: &SampleDesign,
    reports: &ExpertReports,
) -> Result<f64> {
    if design.shared() == 0 {
        return aggregate_private(pair, design, reports);
    }
    match pair.kind() {
        PairKind::BetaBernoulli { .. } => aggregate_shared_enumerate(pair, design, reports),
        PairKind::NormalNormal { .. } => aggregate_shared_normal(pair, design, reports),
        _ => Err(Error::UnsupportedVariant(format!(
            "no tractable shared-information aggregate exists for {}",
            pair.family_name()
        ))),
    }
}
