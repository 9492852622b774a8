//! Quasi-Newton maximizer: BFGS inverse-Hessian updates with a
//! backtracking Armijo line search. Accepted iterates never decrease the
//! objective, so every fit satisfies the likelihood-monotonicity contract.

use crate::{Error, Result};

pub(crate) struct MaximizeOptions {
    pub grad_tol: f64,
    pub max_iter: u32,
    /// Infinity-norm bound on the parameters; crossing it signals a
    /// diverging fit (perfect separation in the GLM case).
    pub param_bound: f64,
}

#[derive(Debug)]
pub(crate) struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximize `objective` (value and gradient) from `x0`.
///
/// Returns with `converged = false` when the iteration budget runs out or
/// the line search stalls; the caller decides whether another start helps.
/// A parameter-bound crossing or a vanishing improvement with growing norm
/// is reported as `Error::Separation`.
pub(crate) fn maximize<F>(objective: F, x0: &[f64], opts: &MaximizeOptions) -> Result<Maximum>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let p = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = objective(&x);
    if !fx.is_finite() {
        return Err(Error::Convergence {
            message: format!("objective is not finite at the starting point ({fx})"),
            best: x,
        });
    }

    // Inverse Hessian approximation, row-major.
    let mut h: Vec<f64> = (0..p * p).map(|i| if i % (p + 1) == 0 { 1.0 } else { 0.0 }).collect();

    // Consecutive iterations whose improvement is below f64 resolution.
    let mut flat_steps = 0u32;

    for _iter in 0..opts.max_iter {
        let gnorm = inf_norm(&gx);
        if gnorm < opts.grad_tol {
            return Ok(Maximum { x, value: fx, grad_norm: gnorm, converged: true });
        }

        // Ascent direction d = H g; fall back to steepest ascent if the
        // approximation has lost positive definiteness.
        let mut d = vec![0.0; p];
        for i in 0..p {
            d[i] = dot(&h[i * p..(i + 1) * p], &gx);
        }
        let mut slope = dot(&gx, &d);
        if slope <= 0.0 || !slope.is_finite() {
            for v in h.iter_mut() {
                *v = 0.0;
            }
            for i in 0..p {
                h[i * p + i] = 1.0;
            }
            d.copy_from_slice(&gx);
            slope = dot(&gx, &d);
        }

        // Backtracking Armijo line search.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (fnew, gnew) = objective(&xn);
            if fnew.is_finite() && fnew >= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            // No representable improvement along an ascent direction: the
            // objective is flat to machine precision. Accept as converged
            // when the gradient is already small on the mean-likelihood
            // scale; otherwise report non-convergence for this start.
            return Ok(Maximum { x, value: fx, grad_norm: gnorm, converged: gnorm < 1e-4 });
        };

        if inf_norm(&xn) > opts.param_bound {
            return Err(Error::Separation(format!(
                "parameter magnitude exceeded {} during optimization; \
                 the likelihood appears unbounded",
                opts.param_bound
            )));
        }
        let improvement = fnew - fx;
        if improvement < 1e-12 && inf_norm(&xn) > inf_norm(&x) && inf_norm(&xn) > 10.0 {
            return Err(Error::Separation(
                "vanishing likelihood improvement with growing coefficients".into(),
            ));
        }
        // Flat links can feed the line search microscopic improvements for
        // hundreds of iterations; once progress sits below the objective's
        // floating-point resolution with a small gradient, the iterate is
        // at the numerical optimum.
        if improvement < 1e-12 * fx.abs().max(1.0) {
            flat_steps += 1;
        } else {
            flat_steps = 0;
        }
        if flat_steps >= 2 && inf_norm(&gnew) < 1e-4 {
            return Ok(Maximum {
                x: xn,
                value: fnew,
                grad_norm: inf_norm(&gnew),
                converged: true,
            });
        }

        // BFGS update in minimization convention: gradient of −f.
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gx.iter().zip(&gnew).map(|(old, new)| old - new).collect();
        let sy = dot(&s, &yv);
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; p];
            for i in 0..p {
                hy[i] = dot(&h[i * p..(i + 1) * p], &yv);
            }
            let yhy = dot(&yv, &hy);
            for i in 0..p {
                for j in 0..p {
                    h[i * p + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        x = xn;
        fx = fnew;
        gx = gnew;
    }
    Ok(Maximum { x: x.clone(), value: fx, grad_norm: inf_norm(&gx), converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> MaximizeOptions {
        MaximizeOptions { grad_tol: 1e-10, max_iter: 500, param_bound: 1e4 }
    }

    #[test]
    fn maximizes_concave_quadratic() {
        // f(x) = −(x−1)² − 2(y+3)².
        let obj = |x: &[f64]| {
            let f = -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 3.0).powi(2);
            (f, vec![-2.0 * (x[0] - 1.0), -4.0 * (x[1] + 3.0)])
        };
        let m = maximize(obj, &[10.0, 10.0], &opts()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-8);
        assert!((m.x[1] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn maximizes_rosenbrock_flipped() {
        let obj = |x: &[f64]| {
            let f = -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
            let g = vec![
                2.0 * (1.0 - x[0]) + 400.0 * x[0] * (x[1] - x[0] * x[0]),
                -200.0 * (x[1] - x[0] * x[0]),
            ];
            (f, g)
        };
        let m = maximize(obj, &[-1.2, 1.0], &opts()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn diverging_objective_reports_separation() {
        // A separated one-observation log-likelihood: log σ(x) increases
        // toward 0 as x → ∞, so the maximizer runs off and crosses the
        // parameter bound.
        let obj = |x: &[f64]| {
            let z = x[0];
            let f = if z >= 0.0 { -(1.0 + (-z).exp()).ln() } else { z - (1.0 + z.exp()).ln() };
            let g = if z >= 0.0 { (-z).exp() / (1.0 + (-z).exp()) } else { 1.0 / (1.0 + z.exp()) };
            (f, vec![g])
        };
        let bounded = MaximizeOptions { grad_tol: 1e-10, max_iter: 500, param_bound: 15.0 };
        let err = maximize(obj, &[0.0], &bounded).unwrap_err();
        assert!(matches!(err, Error::Separation(_)), "{err:?}");
    }

    #[test]
    fn iterates_never_decrease_value() {
        // Track accepted values through a wrapper.
        use std::cell::RefCell;
        let seen = RefCell::new(Vec::new());
        let obj = |x: &[f64]| {
            let f = -(x[0].powi(4) - 3.0 * x[0].powi(2) + x[0]);
            seen.borrow_mut().push(f);
            (f, vec![-(4.0 * x[0].powi(3) - 6.0 * x[0] + 1.0)])
        };
        let m = maximize(obj, &[2.0], &opts()).unwrap();
        assert!(m.converged);
        // The recorded sequence includes rejected trial points; the
        // accepted subsequence is recovered by scanning for improvements.
        let vals = seen.borrow();
        let mut best = f64::NEG_INFINITY;
        for &v in vals.iter() {
            if v > best {
                best = v;
            }
        }
        assert!((best - m.value).abs() < 1e-12);
    }
}
