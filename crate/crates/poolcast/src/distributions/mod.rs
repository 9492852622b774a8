//! Location-scale link families used throughout the crate.
//!
//! Only standard members are exposed (location 0, scale 1): any rescaling a
//! non-standard member would introduce is absorbed by fitted coefficients
//! downstream, so nothing is lost by fixing the scale.

mod special;

pub use special::{erf, erfc, ln_gamma, normal_cdf, normal_quantile, reg_inc_beta, reg_lower_gamma};

use crate::{Error, Result};

/// Largest accepted exponential-power parameter. The ensemble is already
/// visually linear around η = 40; beyond 64 the gamma-function terms start
/// to overflow.
pub const MAX_EP_POWER: f64 = 64.0;

/// A standard member of a symmetric location-scale family, used as the
/// inverse link of the generalized ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFamily {
    kind: LinkKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LinkKind {
    Normal,
    Logistic,
    /// Exponential-power (generalized Gaussian) with power parameter η:
    /// Laplace at η = 1, normal at η = 2, uniform in the limit η → ∞.
    ExponentialPower(f64),
}

impl LinkFamily {
    pub fn standard_normal() -> Self {
        LinkFamily { kind: LinkKind::Normal }
    }

    pub fn standard_logistic() -> Self {
        LinkFamily { kind: LinkKind::Logistic }
    }

    /// Exponential-power family with power `eta`; requires 0 < eta ≤ 64.
    pub fn exponential_power(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::Domain(format!(
                "exponential-power parameter must be positive, got {eta}"
            )));
        }
        if eta > MAX_EP_POWER {
            return Err(Error::Domain(format!(
                "exponential-power parameter {eta} exceeds the supported maximum {MAX_EP_POWER}"
            )));
        }
        Ok(LinkFamily { kind: LinkKind::ExponentialPower(eta) })
    }

    /// The power parameter, when this is an exponential-power family.
    pub fn power(&self) -> Option<f64> {
        match self.kind {
            LinkKind::ExponentialPower(eta) => Some(eta),
            _ => None,
        }
    }

    /// Short machine-readable family name ("normal", "logistic",
    /// "exponential_power").
    pub fn family_name(&self) -> &'static str {
        match self.kind {
            LinkKind::Normal => "normal",
            LinkKind::Logistic => "logistic",
            LinkKind::ExponentialPower(_) => "exponential_power",
        }
    }

    /// Cumulative distribution function of the standard member.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("link cdf requires finite z, got {z}")));
        }
        Ok(match self.kind {
            LinkKind::Normal => normal_cdf(z),
            LinkKind::Logistic => logistic_cdf(z),
            LinkKind::ExponentialPower(eta) => ep_cdf(eta, z)?,
        })
    }

    /// Density of the standard member.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("link pdf requires finite z, got {z}")));
        }
        Ok(match self.kind {
            LinkKind::Normal => {
                (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            LinkKind::Logistic => {
                let e = (-z.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkKind::ExponentialPower(eta) => ep_pdf(eta, z),
        })
    }

    /// Quantile (inverse cdf) of the standard member; requires p in (0,1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "link quantile requires p in (0,1), got {p}"
            )));
        }
        match self.kind {
            LinkKind::Normal => normal_quantile(p),
            LinkKind::Logistic => Ok((p / (1.0 - p)).ln()),
            LinkKind::ExponentialPower(eta) => ep_quantile(eta, p),
        }
    }

    /// Variance of the standard member.
    pub fn variance(&self) -> f64 {
        match self.kind {
            LinkKind::Normal => 1.0,
            LinkKind::Logistic => std::f64::consts::PI * std::f64::consts::PI / 3.0,
            // η^{2/η} Γ(3/η) / Γ(1/η)
            LinkKind::ExponentialPower(eta) => {
                ((2.0 / eta) * eta.ln() + ln_gamma(3.0 / eta) - ln_gamma(1.0 / eta)).exp()
            }
        }
    }
}

fn logistic_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Exponential-power cdf: the regularized lower incomplete gamma applied to
/// |z|^η/η with shape 1/η, reflected about 0.5 for z < 0.
fn ep_cdf(eta: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.5);
    }
    // |z|^η/η through logs so large η cannot overflow prematurely.
    let log_x = eta * z.abs().ln() - eta.ln();
    let half = if log_x > 700.0 {
        1.0
    } else {
        reg_lower_gamma(1.0 / eta, log_x.exp())?
    };
    Ok(0.5 + 0.5 * z.signum() * half)
}

fn ep_pdf(eta: f64, z: f64) -> f64 {
    let log_norm = (2.0f64).ln() + eta.ln() / eta + ln_gamma(1.0 + 1.0 / eta);
    let log_x = if z == 0.0 {
        f64::NEG_INFINITY
    } else {
        eta * z.abs().ln() - eta.ln()
    };
    if log_x > 700.0 {
        return 0.0;
    }
    (-log_x.exp() - log_norm).exp()
}

/// Exponential-power quantile by bracketed Newton iteration seeded at the
/// normal quantile rescaled to the family's standard deviation, with a
/// bisection fallback when the density underflows in the tails.
fn ep_quantile(eta: f64, p: f64) -> Result<f64> {
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the upper half by symmetry.
    let (target, sign) = if p > 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let family = LinkFamily { kind: LinkKind::ExponentialPower(eta) };
    let sd = family.variance().sqrt();
    let seed = (normal_quantile(target)? * sd).max(1e-8);

    let mut lo = 0.0f64;
    let mut hi = seed.max(1.0);
    let mut guard = 0;
    while ep_cdf(eta, hi)? < target {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Domain(format!(
                "exponential-power quantile bracket failed for eta={eta}, p={p}"
            )));
        }
    }

    let mut z = seed.clamp(lo, hi);
    for _ in 0..200 {
        let err = ep_cdf(eta, z)? - target;
        if err > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let dens = ep_pdf(eta, z);
        let step_ok = dens > 1e-300 && dens.is_finite();
        let next = if step_ok { z - err / dens } else { 0.5 * (lo + hi) };
        let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        let delta = (next - z).abs();
        z = next;
        if delta < 1e-12 || hi - lo < 1e-14 {
            break;
        }
    }
    Ok(sign * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_invariants() {
        assert!(LinkFamily::exponential_power(2.0).is_ok());
        assert!(LinkFamily::exponential_power(0.0).is_err());
        assert!(LinkFamily::exponential_power(-1.0).is_err());
        assert!(LinkFamily::exponential_power(64.5).is_err());
        assert!(LinkFamily::exponential_power(f64::NAN).is_err());
    }

    #[test]
    fn cdf_basics() {
        let ep2 = LinkFamily::exponential_power(2.0).unwrap();
        assert_eq!(ep2.cdf(0.0).unwrap(), 0.5);
        assert_eq!(LinkFamily::standard_logistic().cdf(0.0).unwrap(), 0.5);
        // EP(2) is the standard normal; 1.959964 is the 97.5% point.
        assert!((ep2.cdf(1.959_964).unwrap() - 0.975_000_000_903_557_7).abs() < 1e-10);
        assert!(
            (LinkFamily::standard_normal().cdf(-1.25 / 12f64.sqrt()).unwrap()
                - 0.359_108_064_766_993)
                .abs()
                < 1e-10
        );
        assert!(ep2.cdf(f64::INFINITY).is_err());
        assert!(ep2.cdf(f64::NAN).is_err());
    }

    #[test]
    fn ep2_matches_normal_on_grid() {
        let ep2 = LinkFamily::exponential_power(2.0).unwrap();
        let normal = LinkFamily::standard_normal();
        let mut z = -8.0;
        while z <= 8.0 {
            let a = ep2.cdf(z).unwrap();
            let b = normal.cdf(z).unwrap();
            assert!((a - b).abs() < 1e-10, "cdf mismatch at z={z}: {a} vs {b}");
            z += 0.05;
        }
        let mut p = 0.001;
        while p < 1.0 {
            let a = ep2.quantile(p).unwrap();
            let b = normal.quantile(p).unwrap();
            assert!((a - b).abs() < 1e-10, "quantile mismatch at p={p}");
            p += 0.013;
        }
    }

    #[test]
    fn quantile_checkpoints() {
        let lo = LinkFamily::standard_logistic();
        assert!((lo.quantile(0.75).unwrap() - 3.0f64.ln()).abs() < 1e-14);
        let ep2 = LinkFamily::exponential_power(2.0).unwrap();
        assert!((ep2.quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-10);
        for family in [lo, ep2, LinkFamily::standard_normal()] {
            assert_eq!(family.quantile(0.5).unwrap(), 0.0);
            assert!(family.quantile(0.0).is_err());
            assert!(family.quantile(1.0).is_err());
            assert!(family.quantile(-0.2).is_err());
        }
    }

    #[test]
    fn roundtrip_dense_grid() {
        for family in [
            LinkFamily::standard_normal(),
            LinkFamily::standard_logistic(),
            LinkFamily::exponential_power(0.5).unwrap(),
            LinkFamily::exponential_power(1.0).unwrap(),
            LinkFamily::exponential_power(2.0).unwrap(),
            LinkFamily::exponential_power(9.0).unwrap(),
            LinkFamily::exponential_power(40.0).unwrap(),
            LinkFamily::exponential_power(64.0).unwrap(),
        ] {
            let mut p = 1e-9;
            // Log-spaced near the edges, linear through the middle.
            let mut grid = vec![];
            while p < 1e-3 {
                grid.push(p);
                grid.push(1.0 - p);
                p *= 10.0;
            }
            let mut q = 0.001;
            while q < 0.9995 {
                grid.push(q);
                q += 0.0073;
            }
            for &p in &grid {
                let z = family.quantile(p).unwrap();
                let back = family.cdf(z).unwrap();
                assert!(
                    (back - p).abs() < 1e-10,
                    "{} roundtrip failed at p={p}: z={z}, back={back}",
                    family.family_name()
                );
            }
        }
    }

    #[test]
    fn cdf_nondecreasing() {
        for family in [
            LinkFamily::standard_normal(),
            LinkFamily::standard_logistic(),
            LinkFamily::exponential_power(0.7).unwrap(),
            LinkFamily::exponential_power(4.0).unwrap(),
            LinkFamily::exponential_power(40.0).unwrap(),
        ] {
            let mut prev = 0.0;
            let mut z = -20.0;
            while z <= 20.0 {
                let v = family.cdf(z).unwrap();
                assert!(v >= prev, "{} inversion at z={z}", family.family_name());
                assert!((0.0..=1.0).contains(&v));
                prev = v;
                z += 0.01;
            }
        }
    }

    #[test]
    fn variance_closed_forms() {
        assert_eq!(LinkFamily::standard_normal().variance(), 1.0);
        let logistic = LinkFamily::standard_logistic().variance();
        assert!((logistic - 3.289_868_133_696_453).abs() < 1e-12);
        // η = 2 reduces to the standard normal.
        let v2 = LinkFamily::exponential_power(2.0).unwrap().variance();
        assert!((v2 - 1.0).abs() < 1e-13);
        // η = 1 is Laplace: 1 · Γ(3)/Γ(1) = 2.
        let v1 = LinkFamily::exponential_power(1.0).unwrap().variance();
        assert!((v1 - 2.0).abs() < 1e-12);
        let v05 = LinkFamily::exponential_power(0.5).unwrap().variance();
        assert!((v05 - 7.5).abs() < 1e-11);
    }

    #[test]
    fn sampled_variance_matches_formula() {
        // Quantile-of-uniform sampling; the sample variance must sit within
        // 3 Monte-Carlo standard errors of the closed form.
        use crate::rng::CounterRng;
        for &eta in &[0.5, 1.0, 2.0, 4.0, 40.0] {
            let family = LinkFamily::exponential_power(eta).unwrap();
            let n = 1_000_000usize;
            let mut rng = CounterRng::new(0xEDC0FFEE).derive(&format!("var-{eta}"));
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let z = family.quantile(rng.next_f64()).unwrap();
                sum += z;
                sumsq += z * z;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            let truth = family.variance();
            // Var of the sample variance is (μ4 − σ⁴)/n.
            let mu4 = ((4.0 / eta) * eta.ln() + ln_gamma(5.0 / eta) - ln_gamma(1.0 / eta)).exp();
            let se = ((mu4 - truth * truth) / n as f64).sqrt();
            assert!(
                (var - truth).abs() < 3.0 * se,
                "eta={eta}: sample var {var} vs {truth} (se {se})"
            );
        }
    }
}
