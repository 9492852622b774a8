//! The generalized probit ensemble over latent Gaussian information states,
//! and the benchmark opinion pools it is compared against.
//!
//! The decision maker models the experts' information states as jointly
//! normal and the event probability as a generalized linear model of those
//! states. The optimal aggregate then transforms each report through the
//! inverse link, combines linearly with weights derived from the state
//! covariance, and maps back through the link:
//!
//! ```text
//! p̂ = F( β₀ √(1+v₀) F⁻¹(p₀) + Σ_i β_i √(1+v_i) F⁻¹(p_i) )
//! ```
//!
//! The normal link is exact. For the exponential-power link the inner
//! convolution has no closed form, so `√(1+v_i')` with `v_i' = v_i / Var(F)`
//! matches its first two moments (both means are zero by symmetry).
//!
//! Reports are assumed calibrated. A miscalibrated expert can be handled
//! upstream by mapping her report through a re-calibration function before
//! building [`ExpertReports`]; every result here then holds for the
//! re-calibrated probabilities.

use crate::conjugate::ExpertReports;
use crate::distributions::{reg_inc_beta, LinkFamily};
use crate::linalg;
use crate::{Error, Result};

/// Latent Gaussian model of the experts' information states: means,
/// covariance, and the coefficients of the generalized linear model tying
/// the states to the event.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationModel {
    mu: Vec<f64>,
    /// k×k covariance, row-major; validated symmetric positive definite.
    sigma: Vec<f64>,
    alpha0: f64,
    alpha: Vec<f64>,
}

impl InformationModel {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, alpha0: f64, alpha: Vec<f64>) -> Result<Self> {
        let k = mu.len();
        if k == 0 {
            return Err(Error::Domain("at least one expert is required".into()));
        }
        if sigma.len() != k * k {
            return Err(Error::Schema(format!(
                "covariance must be {k}x{k} row-major, got {} entries",
                sigma.len()
            )));
        }
        if alpha.len() != k {
            return Err(Error::Schema(format!(
                "expected {k} GLM coefficients, got {}",
                alpha.len()
            )));
        }
        if !alpha0.is_finite() || mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("means and intercept must be finite".into()));
        }
        for (i, &a) in alpha.iter().enumerate() {
            if a == 0.0 || !a.is_finite() {
                return Err(Error::Domain(format!(
                    "GLM coefficient {i} must be nonzero and finite, got {a}"
                )));
            }
        }
        linalg::check_symmetric(&sigma, k, 1e-12)?;
        linalg::cholesky(&sigma, k)?;
        Ok(InformationModel { mu, sigma, alpha0, alpha })
    }

    /// Exchangeable model: common mean, variance, pairwise correlation, and
    /// coefficient. Positive definiteness requires ρ > −1/(k−1).
    pub fn exchangeable(
        k: usize,
        mean: f64,
        variance: f64,
        rho: f64,
        alpha0: f64,
        alpha: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("at least one expert is required".into()));
        }
        if !(variance > 0.0) {
            return Err(Error::Domain(format!("variance must be positive, got {variance}")));
        }
        if k > 1 {
            let lower = -1.0 / (k as f64 - 1.0);
            if !(rho > lower && rho < 1.0) {
                return Err(Error::Domain(format!(
                    "exchangeable correlation must lie in ({lower}, 1) for k={k}, got {rho}"
                )));
            }
        }
        let mut sigma = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                sigma[i * k + j] = if i == j { variance } else { rho * variance };
            }
        }
        Self::new(vec![mean; k], sigma, alpha0, vec![alpha; k])
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.mu
    }

    pub fn covariance(&self) -> &[f64] {
        &self.sigma
    }

    pub fn intercept(&self) -> f64 {
        self.alpha0
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.alpha
    }

    pub(crate) fn cholesky_factor(&self) -> Vec<f64> {
        linalg::cholesky(&self.sigma, self.k()).expect("validated at construction")
    }

    /// Ensemble weights implied by this model.
    pub fn derive_weights(&self) -> Result<EnsembleWeights> {
        let k = self.k();
        let sig = |i: usize, j: usize| self.sigma[i * k + j];
        let mut beta = Vec::with_capacity(k);
        for i in 0..k {
            // β_i = α_i σ_ii / Σ_j α_j σ_ij (equivalently the correlation
            // form with √σ_ii factored out).
            let denom: f64 = (0..k).map(|j| self.alpha[j] * sig(i, j)).sum();
            let scale: f64 = (0..k).map(|j| (self.alpha[j] * sig(i, j)).abs()).sum();
            if denom.abs() <= 1e-12 * scale.max(1e-300) {
                return Err(Error::DegenerateModel(format!(
                    "weight denominator vanishes for expert {i}; \
                     the information model does not identify a weight"
                )));
            }
            beta.push(self.alpha[i] * sig(i, i) / denom);
        }
        let beta0 = 1.0 - beta.iter().sum::<f64>();
        let v0 = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| self.alpha[i] * self.alpha[j] * sig(i, j))
            .sum::<f64>();
        let mut v = Vec::with_capacity(k);
        for i in 0..k {
            let mut rest = 0.0;
            for j in 0..k {
                if j == i {
                    continue;
                }
                for jp in 0..k {
                    if jp == i {
                        continue;
                    }
                    rest += self.alpha[j] * self.alpha[jp] * sig(j, jp);
                }
            }
            let cross: f64 =
                (0..k).filter(|&j| j != i).map(|j| self.alpha[j] * sig(i, j)).sum();
            v.push((rest - cross * cross / sig(i, i)).max(0.0));
        }
        let m0 = self.alpha0
            + self.alpha.iter().zip(&self.mu).map(|(a, m)| a * m).sum::<f64>();
        Ok(EnsembleWeights { beta0, beta, v0, v, m0 })
    }
}

/// Weights and residual variances of the generalized probit ensemble.
///
/// `beta0 = 1 − Σ beta_i` always; `v0` is the variance of the full linear
/// combination of states and `v[i]` the conditional variance of the others
/// given expert i's state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWeights {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub v0: f64,
    pub v: Vec<f64>,
    pub m0: f64,
}

impl EnsembleWeights {
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    fn check_reports(&self, reports: &ExpertReports) -> Result<()> {
        if reports.len() != self.k() {
            return Err(Error::Schema(format!(
                "weights cover {} experts but {} reports were supplied",
                self.k(),
                reports.len()
            )));
        }
        Ok(())
    }

    /// Exact aggregate under the standard normal link.
    pub fn aggregate_normal_link(&self, p0: f64, reports: &ExpertReports) -> Result<f64> {
        self.check_reports(reports)?;
        let normal = LinkFamily::standard_normal();
        let p0 = clip_probability(p0)?;
        let mut arg = self.beta0 * (1.0 + self.v0).sqrt() * normal.quantile(p0)?;
        for i in 0..self.k() {
            arg += self.beta[i]
                * (1.0 + self.v[i]).sqrt()
                * normal.quantile(reports.probs()[i])?;
        }
        normal.cdf(arg)
    }

    /// Moment-matched aggregate under the exponential-power link with
    /// power `eta`; at η = 2 this is exactly the normal-link ensemble.
    pub fn aggregate_ep_link(&self, eta: f64, p0: f64, reports: &ExpertReports) -> Result<f64> {
        self.check_reports(reports)?;
        let family = LinkFamily::exponential_power(eta)?;
        let link_var = family.variance();
        let p0 = clip_probability(p0)?;
        let mut arg =
            self.beta0 * (1.0 + self.v0 / link_var).sqrt() * family.quantile(p0)?;
        for i in 0..self.k() {
            arg += self.beta[i]
                * (1.0 + self.v[i] / link_var).sqrt()
                * family.quantile(reports.probs()[i])?;
        }
        family.cdf(arg)
    }
}

fn clip_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("expected a probability, got {p}")));
    }
    Ok(p.clamp(ExpertReports::DEFAULT_CLIP, 1.0 - ExpertReports::DEFAULT_CLIP))
}

/// A deployable fitted aggregator: a link family, an intercept, and one
/// coefficient per named expert column. The prior-predictive term is
/// absorbed into the intercept at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedAggregator {
    link: LinkFamily,
    intercept: f64,
    names: Vec<String>,
    coefficients: Vec<f64>,
    clip_epsilon: f64,
}

impl FittedAggregator {
    pub fn new(
        link: LinkFamily,
        intercept: f64,
        coefficients: Vec<(String, f64)>,
        clip_epsilon: f64,
    ) -> Result<Self> {
        if !(clip_epsilon > 0.0 && clip_epsilon < 0.5) {
            return Err(Error::Domain(format!(
                "clip epsilon must lie in (0, 0.5), got {clip_epsilon}"
            )));
        }
        if coefficients.is_empty() {
            return Err(Error::Schema("at least one coefficient is required".into()));
        }
        if !intercept.is_finite() || coefficients.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        let (names, values): (Vec<_>, Vec<_>) = coefficients.into_iter().unzip();
        Ok(FittedAggregator { link, intercept, names, coefficients: values, clip_epsilon })
    }

    pub fn link(&self) -> &LinkFamily {
        &self.link
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn clip_epsilon(&self) -> f64 {
        self.clip_epsilon
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names.iter().map(|n| n.as_str()).zip(self.coefficients.iter().copied())
    }

    /// F(c + Σ b_i F⁻¹(clip(p_i))) for one report vector, positional.
    pub fn apply(&self, probs: &[f64]) -> Result<f64> {
        if probs.len() != self.coefficients.len() {
            return Err(Error::Schema(format!(
                "model has {} coefficients but {} reports were supplied",
                self.coefficients.len(),
                probs.len()
            )));
        }
        let mut arg = self.intercept;
        for (&b, &p) in self.coefficients.iter().zip(probs) {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("expected a probability, got {p}")));
            }
            let z = self
                .link
                .quantile(p.clamp(self.clip_epsilon, 1.0 - self.clip_epsilon))?;
            arg += b * z;
        }
        self.link.cdf(arg)
    }

    /// Check that a data set's expert columns line up with this model.
    pub fn validate_names(&self, names: &[String]) -> Result<()> {
        if names != self.names {
            return Err(Error::Schema(format!(
                "model columns {:?} do not match data columns {:?}",
                self.names, names
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Benchmark pools.
// ---------------------------------------------------------------------------

/// Linear opinion pool Σ w_i p_i over a weight simplex.
pub fn lop(weights: &[f64], probs: &[f64]) -> Result<f64> {
    if weights.len() != probs.len() || weights.is_empty() {
        return Err(Error::Schema(format!(
            "{} weights vs {} probabilities",
            weights.len(),
            probs.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "weights must be nonnegative and sum to 1 (sum = {total})"
        )));
    }
    Ok(weights.iter().zip(probs).map(|(w, p)| w * p).sum())
}

/// Karmarkar transform of a pooled probability: p^a / (p^a + (1−p)^a).
pub fn klop(a: f64, pool: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("karmarkar exponent must be positive, got {a}")));
    }
    if !(pool > 0.0 && pool < 1.0) {
        return Err(Error::Domain(format!(
            "karmarkar transform requires a pool strictly inside (0,1), got {pool}"
        )));
    }
    // Equivalent logistic form avoids overflow for large exponents.
    let z = a * (pool / (1.0 - pool)).ln();
    Ok(if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) })
}

/// Beta transform of a pooled probability: the Beta(a, b) cdf at the pool.
pub fn blop(a: f64, b: f64, pool: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pool) {
        return Err(Error::Domain(format!("pool must lie in [0,1], got {pool}")));
    }
    reg_inc_beta(a, b, pool)
}

/// Logit aggregator: logistic(Σ (a/k) logit(p_i)).
pub fn logit_pool(a: f64, probs: &[f64]) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("logit exponent must be positive, got {a}")));
    }
    let k = probs.len();
    if k == 0 {
        return Err(Error::Schema("at least one report is required".into()));
    }
    let w = vec![a / k as f64; k];
    logit_pool_weighted(&w, probs)
}

/// Per-expert-weight variant of the logit aggregator.
pub fn logit_pool_weighted(weights: &[f64], probs: &[f64]) -> Result<f64> {
    if weights.len() != probs.len() || weights.is_empty() {
        return Err(Error::Schema(format!(
            "{} weights vs {} probabilities",
            weights.len(),
            probs.len()
        )));
    }
    let logistic = LinkFamily::standard_logistic();
    let mut z = 0.0;
    for (&w, &p) in weights.iter().zip(probs) {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Domain(format!("logit weights must be nonnegative, got {w}")));
        }
        let p = p.clamp(1e-15, 1.0 - 1e-15);
        z += w * logistic.quantile(p)?;
    }
    logistic.cdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reports(ps: &[f64]) -> ExpertReports {
        ExpertReports::new(ps.to_vec()).unwrap()
    }

    #[test]
    fn information_model_validation() {
        assert!(InformationModel::new(vec![0.0], vec![1.0], 0.0, vec![0.0]).is_err());
        assert!(InformationModel::new(vec![0.0], vec![-1.0], 0.0, vec![1.0]).is_err());
        // Asymmetric covariance.
        assert!(InformationModel::new(
            vec![0.0, 0.0],
            vec![1.0, 0.2, 0.3, 1.0],
            0.0,
            vec![1.0, 1.0]
        )
        .is_err());
        // Exchangeable bound ρ > −1/(k−1).
        assert!(InformationModel::exchangeable(3, 0.0, 1.0, -0.5, 0.0, 1.0).is_err());
        assert!(InformationModel::exchangeable(3, 0.0, 1.0, -0.49, 0.0, 1.0).is_ok());
        assert!(InformationModel::exchangeable(2, 0.0, 1.0, 0.999, 0.0, 1.0).is_ok());
        assert!(InformationModel::exchangeable(2, 0.0, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exchangeable_weights_closed_form() {
        // k = 2, ρ = 3/4: β_i = 1/(1+ρ) = 4/7.
        let model = InformationModel::exchangeable(2, 0.0, 1.0, 0.75, 0.0, 1.0).unwrap();
        let w = model.derive_weights().unwrap();
        assert!((w.beta[0] - 4.0 / 7.0).abs() < 1e-12);
        assert!((w.beta[1] - 4.0 / 7.0).abs() < 1e-12);
        assert!((w.beta0 - (1.0 - 8.0 / 7.0)).abs() < 1e-12);
        // Independent experts: β_i = 1, β_0 = 1 − k.
        let model = InformationModel::exchangeable(2, 0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let w = model.derive_weights().unwrap();
        assert!((w.beta[0] - 1.0).abs() < 1e-14);
        assert!((w.beta0 + 1.0).abs() < 1e-14);
        assert!((w.v0 - 2.0).abs() < 1e-14);
        assert!((w.v[0] - 1.0).abs() < 1e-14);
        assert!((w.v[1] - 1.0).abs() < 1e-14);
        // Single expert: β_1 = 1, β_0 = 0, v_1 = 0.
        let model = InformationModel::exchangeable(1, 0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let w = model.derive_weights().unwrap();
        assert_eq!(w.beta, vec![1.0]);
        assert!(w.beta0.abs() < 1e-15);
        assert_eq!(w.v, vec![0.0]);
    }

    #[test]
    fn exchangeable_matches_general_formula() {
        use crate::rng::CounterRng;
        let mut rng = CounterRng::new(2).derive("weights");
        for _ in 0..50 {
            let k = 2 + rng.next_below(4) as usize;
            let lower = -1.0 / (k as f64 - 1.0);
            let rho = lower + (1.0 - lower) * (0.05 + 0.9 * rng.next_f64());
            let model = InformationModel::exchangeable(k, 0.3, 2.0, rho, 0.1, 0.7).unwrap();
            let w = model.derive_weights().unwrap();
            let closed = 1.0 / ((k as f64 - 1.0) * rho + 1.0);
            for i in 0..k {
                assert!((w.beta[i] - closed).abs() < 1e-10);
            }
            assert!((w.beta0 + w.beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_weight_denominator_is_an_error() {
        // Two perfectly useful experts with opposite coefficients and
        // strong correlation can zero a denominator.
        let sigma = vec![1.0, 0.5, 0.5, 1.0];
        let model = InformationModel::new(vec![0.0, 0.0], sigma, 0.0, vec![1.0, -2.0]).unwrap();
        let err = model.derive_weights().unwrap_err();
        assert!(matches!(err, Error::DegenerateModel(_)));
    }

    #[test]
    fn normal_link_checkpoints() {
        // Single expert: identity.
        let w = InformationModel::exchangeable(1, 0.0, 1.0, 0.0, 0.0, 1.0)
            .unwrap()
            .derive_weights()
            .unwrap();
        let got = w.aggregate_normal_link(0.37, &reports(&[0.642])).unwrap();
        assert!((got - 0.642).abs() < 1e-12);
        // Independent pair at Φ(1/√2) each: Φ(2).
        let w = InformationModel::exchangeable(2, 0.0, 1.0, 0.0, 0.0, 1.0)
            .unwrap()
            .derive_weights()
            .unwrap();
        let p = 0.760_249_938_906_523_3; // Φ(1/√2)
        let got = w.aggregate_normal_link(0.5, &reports(&[p, p])).unwrap();
        assert!((got - 0.977_249_868_051_820_8).abs() < 1e-10);
    }

    #[test]
    fn ep_link_reduces_to_normal_at_two() {
        let w = InformationModel::exchangeable(3, 0.0, 1.5, 0.4, 0.2, 0.8)
            .unwrap()
            .derive_weights()
            .unwrap();
        let r = reports(&[0.3, 0.55, 0.7]);
        for &p0 in &[0.2, 0.5, 0.8] {
            let a = w.aggregate_normal_link(p0, &r).unwrap();
            let b = w.aggregate_ep_link(2.0, p0, &r).unwrap();
            assert!((a - b).abs() < 1e-10, "p0={p0}: {a} vs {b}");
        }
        // Single expert under any power: identity.
        let w1 = InformationModel::exchangeable(1, 0.0, 1.0, 0.0, 0.0, 1.0)
            .unwrap()
            .derive_weights()
            .unwrap();
        for &eta in &[0.5, 1.0, 4.0, 40.0] {
            let got = w1.aggregate_ep_link(eta, 0.3, &reports(&[0.81])).unwrap();
            assert!((got - 0.81).abs() < 1e-12, "eta={eta}");
        }
    }

    #[test]
    fn large_power_approaches_linear_pool() {
        // η = 40 with moderate reports behaves like the linear combination
        // of probabilities.
        let model = InformationModel::exchangeable(2, 0.0, 0.0025, 0.75, 0.0, 1.0).unwrap();
        let w = model.derive_weights().unwrap();
        let p0 = 0.5;
        let mut p2 = 0.2;
        while p2 <= 0.8 {
            let got = w.aggregate_ep_link(40.0, p0, &reports(&[0.5, p2])).unwrap();
            let linear = w.beta0 * p0 + w.beta[0] * 0.5 + w.beta[1] * p2;
            assert!((got - linear).abs() < 1e-3, "p2={p2}: {got} vs {linear}");
            p2 += 0.05;
        }
    }

    #[test]
    fn monotone_in_each_report() {
        let w = InformationModel::exchangeable(2, 0.0, 1.0, 0.5, 0.0, 1.0)
            .unwrap()
            .derive_weights()
            .unwrap();
        let mut prev = 0.0;
        let mut p = 0.02;
        while p < 0.99 {
            let got = w.aggregate_normal_link(0.4, &reports(&[p, 0.6])).unwrap();
            assert!(got > prev);
            prev = got;
            p += 0.03;
        }
    }

    #[test]
    fn shape_flips_with_correlation_sign() {
        // Second differences of p2 ↦ aggregate with p1 = p0 = 1/2: negative
        // correlation gives an s-shape (+ then −), positive the reverse.
        let diff_signs = |rho: f64| {
            let w = InformationModel::exchangeable(2, 0.0, 1.0, rho, 0.0, 1.0)
                .unwrap()
                .derive_weights()
                .unwrap();
            let xs: Vec<f64> = (1..40).map(|i| i as f64 / 40.0).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|&p2| w.aggregate_normal_link(0.5, &reports(&[0.5, p2])).unwrap())
                .collect();
            let mut signs = vec![];
            for i in 1..ys.len() - 1 {
                let dd = ys[i + 1] - 2.0 * ys[i] + ys[i - 1];
                if dd.abs() > 1e-12 {
                    signs.push(dd > 0.0);
                }
            }
            signs.dedup();
            signs
        };
        assert_eq!(diff_signs(-0.5), vec![true, false], "s-shape for rho < 0");
        assert_eq!(diff_signs(0.75), vec![false, true], "inverse s-shape for rho > 0");
    }

    #[test]
    fn fitted_aggregator_basics() {
        let link = LinkFamily::exponential_power(2.0).unwrap();
        let ident =
            FittedAggregator::new(link, 0.0, vec![("p_a".into(), 1.0)], 1e-9).unwrap();
        assert!((ident.apply(&[0.42]).unwrap() - 0.42).abs() < 1e-12);
        let half = FittedAggregator::new(
            link,
            0.0,
            vec![("p_a".into(), 0.5), ("p_b".into(), 0.5)],
            1e-9,
        )
        .unwrap();
        let p = 0.760_249_938_906_523_3; // Φ(1/√2)
        let got = half.apply(&[p, p]).unwrap();
        assert!((got - p).abs() < 1e-12);
        assert!(half.apply(&[0.5]).is_err());
        assert!(half.validate_names(&["p_a".into(), "p_b".into()]).is_ok());
        assert!(half.validate_names(&["p_b".into(), "p_a".into()]).is_err());
        assert!(FittedAggregator::new(link, 0.0, vec![("x".into(), 1.0)], 0.7).is_err());
    }

    #[test]
    fn fitted_aggregator_regression_lock() {
        // Frozen output of a power-9 model with production-style
        // coefficients, pinned after the gradient and likelihood checks
        // validated the path.
        let model = FittedAggregator::new(
            LinkFamily::exponential_power(9.0).unwrap(),
            0.0653,
            vec![
                ("p_rlr".into(), -0.0281),
                ("p_rf".into(), 0.3864),
                ("p_xgb".into(), 0.7176),
            ],
            1e-9,
        )
        .unwrap();
        let got = model.apply(&[0.20, 0.30, 0.25]).unwrap();
        assert!((got - 0.278_751_173_556_148_8).abs() < 1e-12);
    }

    #[test]
    fn pool_arithmetic() {
        assert!((lop(&[0.5, 0.5], &[0.2, 0.4]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(lop(&[1.0, 0.0], &[0.9, 0.1]).unwrap(), 0.9);
        assert!((lop(&[0.25, 0.75], &[0.2, 0.6]).unwrap() - 0.5).abs() < 1e-15);
        assert!(lop(&[0.5, 0.6], &[0.2, 0.4]).is_err());
        assert!(lop(&[-0.5, 1.5], &[0.2, 0.4]).is_err());

        assert_eq!(klop(1.0, 0.37).unwrap(), 0.37);
        assert_eq!(klop(2.5, 0.5).unwrap(), 0.5);
        assert!((klop(2.0, 0.6).unwrap() - 0.36 / 0.52).abs() < 1e-12);
        assert!(klop(0.0, 0.5).is_err());
        assert!(klop(1.0, 1.0).is_err());

        assert!((blop(1.0, 1.0, 0.43).unwrap() - 0.43).abs() < 1e-13);
        assert!((blop(5.0, 5.0, 0.5).unwrap() - 0.5).abs() < 1e-13);
        assert!((blop(5.0, 5.0, 0.6).unwrap() - 0.733_432_32).abs() < 1e-7);

        assert!((logit_pool(1.0, &[0.37]).unwrap() - 0.37).abs() < 1e-12);
        assert_eq!(logit_pool(3.0, &[0.5, 0.5, 0.5]).unwrap(), 0.5);
        let got = logit_pool(2.0, &[0.6, 0.6]).unwrap();
        assert!((got - 0.36 / 0.52).abs() < 1e-12);
        // Equal-report identity with the karmarkar transform.
        for &a in &[0.5, 1.25, 3.0] {
            for &p in &[0.1, 0.37, 0.8] {
                let lhs = klop(a, p).unwrap();
                let rhs = logit_pool(a, &[p, p, p]).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
