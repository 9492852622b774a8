//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The criteria rest on exact oracles, closed-form checkpoints, and
//! property checks at pinned tolerances, plus a handful of independently
//! verifiable reference numbers.

use std::time::Instant;

use poolcast::conjugate::{
    aggregate_private, aggregate_shared_enumerate, aggregate_shared_normal,
    aggregate_shared_quadrature, exact_posterior_oracle, ConjugatePair, ExpertReports,
    SampleDesign,
};
use poolcast::distributions::LinkFamily;
use poolcast::ensemble::InformationModel;
use poolcast::evaluation::{
    cross_validate, read_training_data, render_report, split_folds, write_training_data,
    CvOptions, Method, ReportFormat,
};
use poolcast::fitting::{
    fit_glm, glm_objective, select_power, FitOptions, PowerGrid, TrainingSet,
};
use poolcast::rng::CounterRng;
use poolcast::scoring::{asym_log_score, auc, log_score, PredictionSet};
use poolcast::simulation::simulate_latent;

fn pass(id: u32, what: &str) {
    println!("[PASS] criterion {id:02}: {what}");
}

#[test]
fn criterion_01_exact_oracle_suite() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xC1).derive("oracle-suite");
    for case in 0..1_000 {
        let alpha = 1.0 + rng.next_below(5) as f64;
        let beta = 1.0 + rng.next_below(5) as f64;
        let pair = ConjugatePair::beta_bernoulli(alpha, beta).unwrap();
        let k = 1 + rng.next_below(4) as usize;
        let private: Vec<u32> = (0..k).map(|_| 1 + rng.next_below(5) as u32).collect();
        let shared = rng.next_below(4) as u32;
        let design = SampleDesign::new(private.clone(), shared).unwrap();
        let (_, tau1) = pair.natural_hyperparameters();
        let t_s = rng.next_below(shared as u64 + 1) as u32;
        let mut reports = Vec::with_capacity(k);
        for &n_i in &private {
            let t_i = rng.next_below(n_i as u64 + 1) as u32;
            let p = pair
                .predictive_prob(n_i + shared, tau1 + (t_i + t_s) as f64)
                .unwrap();
            reports.push(p);
        }
        let reports = ExpertReports::new(reports).unwrap();
        let truth = exact_posterior_oracle(&pair, &design, &reports).unwrap();
        let got = if shared == 0 {
            aggregate_private(&pair, &design, &reports).unwrap()
        } else {
            aggregate_shared_enumerate(&pair, &design, &reports).unwrap()
        };
        assert!(
            (got - truth).abs() < 1e-12,
            "case {case}: aggregator {got} vs oracle {truth}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    pass(1, &format!("1000 randomized configurations match the exact oracle within 1e-12 in {elapsed:.2?}"));
}

#[test]
fn criterion_02_shared_information_checkpoint() {
    let pair = ConjugatePair::beta_bernoulli(1.0, 1.0).unwrap();
    let design = SampleDesign::new(vec![1, 1], 1).unwrap();
    let a = aggregate_shared_enumerate(
        &pair,
        &design,
        &ExpertReports::new(vec![0.75, 0.25]).unwrap(),
    )
    .unwrap();
    assert_eq!(a, 0.4);
    let b = aggregate_shared_enumerate(
        &pair,
        &design,
        &ExpertReports::new(vec![0.75, 0.5]).unwrap(),
    )
    .unwrap();
    assert_eq!(b, 0.6);
    pass(2, "shared-information worked example yields (4p2+1)/5 exactly: 0.4 and 0.6");
}

#[test]
fn criterion_03_closed_form_vs_quadrature() {
    let mut rng = CounterRng::new(0xC3).derive("prop3-acceptance");
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = 1 + rng.next_below(3) as usize;
        let pair = ConjugatePair::normal_normal(
            -2.0 + 4.0 * rng.next_f64(),
            0.5 + 1.5 * rng.next_f64(),
            0.5 + 1.5 * rng.next_f64(),
        )
        .unwrap();
        let design = SampleDesign::new(
            (0..k).map(|_| 1 + rng.next_below(4) as u32).collect(),
            1 + rng.next_below(3) as u32,
        )
        .unwrap();
        let reports = ExpertReports::new(
            (0..k).map(|_| 0.02 + 0.96 * rng.next_f64()).collect(),
        )
        .unwrap();
        let closed = aggregate_shared_normal(&pair, &design, &reports).unwrap();
        let quad = aggregate_shared_quadrature(&pair, &design, &reports).unwrap();
        worst = worst.max((closed - quad).abs());
    }
    assert!(worst < 1e-6, "worst deviation {worst}");
    pass(3, &format!("100 shared-information configurations: closed form vs quadrature within 1e-6 (worst {worst:.2e})"));
}

#[test]
fn criterion_04_ensemble_bridge() {
    // The generalized probit ensemble instantiated from the normal/normal
    // sampling model reproduces the conjugate-pair aggregate.
    let mut rng = CounterRng::new(0xC4).derive("bridge");
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let theta0 = -2.0 + 4.0 * rng.next_f64();
        let sigma0 = 0.5 + 1.5 * rng.next_f64();
        let sigma = 0.5 + 1.5 * rng.next_f64();
        let pair = ConjugatePair::normal_normal(theta0, sigma0, sigma).unwrap();
        let k = 1 + rng.next_below(4) as usize;
        let sizes: Vec<u32> = (0..k).map(|_| 1 + rng.next_below(5) as u32).collect();
        let design = SampleDesign::new(sizes.clone(), 0).unwrap();
        let (_, tau1) = pair.natural_hyperparameters();
        let n_total: u32 = sizes.iter().sum();
        let ratio = sigma * sigma / (sigma0 * sigma0);
        let v_total =
            (ratio + n_total as f64) * (ratio + n_total as f64 + 1.0) * sigma * sigma;
        let s2 = sigma * sigma;
        let s02 = sigma0 * sigma0;
        let mut cov = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
                cov[i * k + j] =
                    if i == j { ni * s2 + ni * ni * s02 } else { ni * nj * s02 };
            }
        }
        let model = InformationModel::new(
            sizes.iter().map(|&n| n as f64 * theta0).collect(),
            cov,
            tau1 / v_total.sqrt(),
            vec![1.0 / v_total.sqrt(); k],
        )
        .unwrap();
        let weights = model.derive_weights().unwrap();
        let reports = ExpertReports::new(
            (0..k).map(|_| 0.02 + 0.96 * rng.next_f64()).collect(),
        )
        .unwrap();
        let gp = weights
            .aggregate_normal_link(pair.prior_predictive(), &reports)
            .unwrap();
        let cp = aggregate_private(&pair, &design, &reports).unwrap();
        worst = worst.max((gp - cp).abs());
    }
    assert!(worst < 1e-8, "worst deviation {worst}");
    pass(4, &format!("200 randomized cases: information-state ensemble equals the conjugate aggregate within 1e-8 (worst {worst:.2e})"));
}

#[test]
fn criterion_05_exchangeable_weights_checkpoint() {
    let w = InformationModel::exchangeable(2, 0.0, 1.0, 0.75, 0.0, 1.0)
        .unwrap()
        .derive_weights()
        .unwrap();
    for beta in &w.beta {
        assert!((beta - 0.5714).abs() <= 5e-4, "beta = {beta}");
        assert_eq!(format!("{beta:.2}"), "0.57");
    }
    let w0 = InformationModel::exchangeable(2, 0.0, 1.0, 0.0, 0.0, 1.0)
        .unwrap()
        .derive_weights()
        .unwrap();
    assert_eq!(w0.beta, vec![1.0, 1.0]);
    pass(5, "exchangeable weights: rho=0.75 gives 0.5714 (displays 0.57); rho=0 gives exactly 1");
}

#[test]
fn criterion_06_link_checkpoints() {
    let ep2 = LinkFamily::exponential_power(2.0).unwrap();
    let normal = LinkFamily::standard_normal();
    let mut z = -8.0;
    while z <= 8.0 {
        let d = (ep2.cdf(z).unwrap() - normal.cdf(z).unwrap()).abs();
        assert!(d < 1e-10, "cdf gap {d} at z={z}");
        z += 0.01;
    }
    let mut p = 0.0005;
    while p < 1.0 {
        let d = (ep2.quantile(p).unwrap() - normal.quantile(p).unwrap()).abs();
        assert!(d < 1e-10, "quantile gap {d} at p={p}");
        p += 0.0031;
    }
    // The exponential-power ensemble at power 2 equals the probit ensemble.
    let mut rng = CounterRng::new(0xC6).derive("links");
    for _ in 0..20 {
        let k = 1 + rng.next_below(4) as usize;
        let lower = if k > 1 { -1.0 / (k as f64 - 1.0) } else { -0.9 };
        let rho = lower + (1.0 - lower) * (0.05 + 0.9 * rng.next_f64());
        let w = InformationModel::exchangeable(
            k,
            rng.next_f64() - 0.5,
            0.5 + rng.next_f64(),
            rho,
            rng.next_f64() - 0.5,
            0.5 + rng.next_f64(),
        )
        .unwrap()
        .derive_weights()
        .unwrap();
        let reports = ExpertReports::new(
            (0..k).map(|_| 0.05 + 0.9 * rng.next_f64()).collect(),
        )
        .unwrap();
        let p0 = 0.05 + 0.9 * rng.next_f64();
        let a = w.aggregate_normal_link(p0, &reports).unwrap();
        let b = w.aggregate_ep_link(2.0, p0, &reports).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    // Predictive checkpoint: two observations at the prior mean.
    let pair = ConjugatePair::normal_normal(-1.25, 1.0, 1.0).unwrap();
    let f2 = pair.predictive_prob(2, -1.25).unwrap();
    assert!((f2 - 0.3591).abs() <= 5e-4, "F_2(-1.25) = {f2}");
    pass(6, "power-2 link matches the normal link within 1e-10; F_2(-1.25) = 0.3591 +/- 5e-4");
}

#[test]
fn criterion_07_extremizing_theorem() {
    let mut rng = CounterRng::new(0xC7).derive("extremize-acceptance");
    let mut checked = 0u32;
    let mut violations = 0u32;
    while checked < 10_000 {
        let alpha = 1.0 + rng.next_below(5) as f64;
        let beta = 1.0 + rng.next_below(5) as f64;
        let pair = ConjugatePair::beta_bernoulli(alpha, beta).unwrap();
        let k = 2 + rng.next_below(3) as usize;
        let n = 1 + rng.next_below(5) as u32;
        let design = SampleDesign::new(vec![n; k], 0).unwrap();
        let reports = ExpertReports::new(
            (0..k).map(|_| 0.01 + 0.98 * rng.next_f64()).collect(),
        )
        .unwrap();
        let Ok(agg) = aggregate_private(&pair, &design, &reports) else {
            continue; // outside the model's reachable report set
        };
        let p_bar = reports.mean();
        let p0 = pair.prior_predictive();
        if (p_bar - p0).abs() < 1e-12 {
            continue;
        }
        checked += 1;
        let extremized =
            if p_bar < p0 { agg < p_bar } else { agg > p_bar };
        if !extremized {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
    pass(7, "10000 exchangeable report vectors: zero violations of the always-extremizes inequality");
}

#[test]
fn criterion_08_glm_recovery_and_gradients() {
    let start = Instant::now();
    let link = LinkFamily::exponential_power(2.0).unwrap();
    let truth = (0.05, [0.4, 0.6]);
    let n = 50_000;
    let mut rng = CounterRng::new(0xC8).derive("recovery");
    let mut outcomes = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let z1 = rng.next_normal();
        let z2 = rng.next_normal();
        let p = link.cdf(truth.0 + truth.1[0] * z1 + truth.1[1] * z2).unwrap();
        outcomes.push(rng.next_f64() < p);
        reports.push(link.cdf(z1).unwrap());
        reports.push(link.cdf(z2).unwrap());
    }
    let data = TrainingSet::new(vec!["p_a".into(), "p_b".into()], outcomes, reports).unwrap();
    let fit = fit_glm(&link, &data, &FitOptions::default()).unwrap();
    assert!((fit.intercept() - truth.0).abs() < 0.05);
    assert!((fit.values()[0] - truth.1[0]).abs() < 0.05);
    assert!((fit.values()[1] - truth.1[1]).abs() < 0.05);

    // Analytic gradient vs central differences at 20 random points, on a
    // subsample so the finite differences stay clean.
    let small = data.subset(&(0..400).collect::<Vec<_>>()).unwrap();
    for family in [link, LinkFamily::standard_logistic(), LinkFamily::exponential_power(9.0).unwrap()] {
        for _ in 0..20 {
            let params: Vec<f64> = (0..3).map(|_| rng.next_f64() - 0.5).collect();
            let (_, grad) = glm_objective(&family, &small, 1e-9, &params).unwrap();
            for j in 0..3 {
                let h = 1e-6;
                let mut plus = params.clone();
                plus[j] += h;
                let mut minus = params.clone();
                minus[j] -= h;
                let fd = (glm_objective(&family, &small, 1e-9, &plus).unwrap().0
                    - glm_objective(&family, &small, 1e-9, &minus).unwrap().0)
                    / (2.0 * h);
                let rel = (grad[j] - fd).abs() / fd.abs().max(grad[j].abs()).max(1e-8);
                assert!(rel < 1e-6, "{}: param {j} rel err {rel}", family.family_name());
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(8, &format!("coefficients recovered within 0.05 and gradients verified, in {elapsed:.2?}"));
}

#[test]
fn criterion_09_power_selection() {
    // Data simulated under the normal link: the out-of-fold log score at
    // power 2 must sit within 0.002 of the grid minimum, for 5 seeds.
    let grid = PowerGrid::default();
    for seed in 0..5u64 {
        let model = InformationModel::exchangeable(2, 0.0, 1.0, 0.5, 0.0, 1.0).unwrap();
        let out = simulate_latent(&model, &LinkFamily::standard_normal(), 2_000, 100 + seed)
            .unwrap();
        let folds = split_folds(out.data.n(), 10, seed).unwrap();
        let opts = FitOptions { seed, ..FitOptions::default() };
        let selection = select_power(&grid, &out.data, &folds, &opts).unwrap();
        let at_two = selection
            .grid
            .iter()
            .find(|p| p.eta == 2.0)
            .and_then(|p| p.mean_oof_ls)
            .expect("power 2 is on the default grid");
        let minimum = selection
            .grid
            .iter()
            .filter_map(|p| p.mean_oof_ls)
            .fold(f64::INFINITY, f64::min);
        assert!(
            at_two - minimum <= 0.002,
            "seed {seed}: LS(2) = {at_two} vs minimum {minimum}"
        );
    }
    pass(9, "power selection: LS at power 2 within 0.002 of the grid minimum on 5 seeds");
}

#[test]
#[allow(clippy::approx_constant)] // 0.6931 is the pinned 4-decimal checkpoint
fn criterion_10_scoring_fixtures() {
    assert!((log_score(0.5, true).unwrap() - 0.6931).abs() < 1e-4);
    assert!((asym_log_score(0.9, true, 0.5).unwrap() - 0.8480).abs() < 1e-4);
    let preds = PredictionSet::new(
        vec![0.1, 0.4, 0.35, 0.8],
        vec![false, false, true, true],
    )
    .unwrap();
    assert_eq!(auc(&preds).unwrap(), 0.75);
    // Propriety: the expected log score over a forecast grid is minimized
    // at the true probability.
    let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    for &q in &grid {
        let mut best = (f64::INFINITY, 0.0);
        for &p in &grid {
            let e = q * log_score(p, true).unwrap() + (1.0 - q) * log_score(p, false).unwrap();
            if e < best.0 {
                best = (e, p);
            }
        }
        assert_eq!(best.1, q);
    }
    pass(10, "scoring fixtures: LS(0.5,1)=0.6931, ALS(0.9,1,0.5)=0.8480, AUC fixture 0.75, propriety grid");
}

#[test]
fn criterion_11_stacking_ordering() {
    // Three correlated synthetic base models simulated from the
    // exponential-power ensemble: the grid-searched ensemble beats the
    // plain average out of fold in at least 4 of 5 seeds.
    let mut wins = 0;
    for seed in 0..5u64 {
        let model = InformationModel::exchangeable(3, 0.0, 1.0, 0.5, -0.3, 0.7).unwrap();
        let link = LinkFamily::exponential_power(4.0).unwrap();
        let out = simulate_latent(&model, &link, 2_000, 500 + seed).unwrap();
        let folds = split_folds(out.data.n(), 5, seed).unwrap();
        let opts = CvOptions {
            fit: FitOptions { seed, ..FitOptions::default() },
            als_baseline: None,
        };
        let grid = PowerGrid::new(vec![1.0, 2.0, 4.0, 9.0, 16.0]).unwrap();
        let table = cross_validate(
            &out.data,
            &[Method::Average, Method::GlmGrid(grid)],
            &folds,
            &opts,
        )
        .unwrap();
        let avg = table.methods[0].mean_ls.unwrap();
        let glm = table.methods[1].mean_ls.unwrap();
        if glm <= avg {
            wins += 1;
        }
        println!("  seed {seed}: avg LS {avg:.4}, glm-grid LS {glm:.4}");
    }
    assert!(wins >= 4, "glm-grid won only {wins}/5 seeds");
    pass(11, &format!("grid-searched ensemble beat the average in {wins}/5 seeds"));
}

#[test]
fn criterion_12_cv_determinism() {
    let model = InformationModel::exchangeable(3, 0.0, 1.0, 0.5, -0.5, 0.8).unwrap();
    let out = simulate_latent(&model, &LinkFamily::standard_normal(), 400, 77).unwrap();
    let folds = split_folds(out.data.n(), 5, 3).unwrap();
    let methods = [
        Method::Average,
        Method::Olop,
        Method::GlmGrid(PowerGrid::new(vec![2.0, 9.0]).unwrap()),
    ];
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let table =
                cross_validate(&out.data, &methods, &folds, &CvOptions::default()).unwrap();
            render_report(&table, ReportFormat::Markdown).unwrap()
        })
    };
    let one = render(1);
    let four = render(4);
    let again = render(4);
    assert_eq!(one, four, "report depends on worker count");
    assert_eq!(four, again, "report not reproducible");
    pass(12, "cross-validation report is byte-identical across runs and worker counts");
}

#[test]
fn criterion_13_report_shape_for_supplied_base_models() {
    // A data file in the documented schema with the three standard base
    // model columns produces the full eight-row, three-metric report.
    let model = InformationModel::exchangeable(3, 0.0, 1.0, 0.5, -1.2, 0.8).unwrap();
    let out = simulate_latent(&model, &LinkFamily::standard_normal(), 600, 5).unwrap();
    let data = TrainingSet::new(
        vec!["p_rlr".into(), "p_rf".into(), "p_xgb".into()],
        out.data.outcomes().to_vec(),
        (0..out.data.n()).flat_map(|r| out.data.row(r).to_vec()).collect(),
    )
    .unwrap();
    let dir = std::env::temp_dir().join(format!("poolcast-acc13-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("base_models.csv");
    write_training_data(&path, &data, &[]).unwrap();
    let (loaded, _) = read_training_data(&path).unwrap();
    assert_eq!(loaded.names(), data.names());

    let folds = split_folds(loaded.n(), 5, 11).unwrap();
    let methods = [
        Method::PassThrough("p_rlr".into()),
        Method::PassThrough("p_rf".into()),
        Method::PassThrough("p_xgb".into()),
        Method::Average,
        Method::Olop,
        Method::Blop,
        Method::Logit,
        Method::GlmGrid(PowerGrid::new(vec![2.0, 9.0]).unwrap()),
    ];
    let table = cross_validate(&loaded, &methods, &folds, &CvOptions::default()).unwrap();
    let report = render_report(&table, ReportFormat::Markdown).unwrap();

    for row in ["p_rlr", "p_rf", "p_xgb", "avg", "olop", "blop", "logit", "glm-grid"] {
        assert!(report.contains(&format!("| {row} |")), "missing method row {row}");
    }
    assert!(report.contains("| Model | LS | ALS | AUC |"));
    for line in [
        "| Constant |",
        "| Coefficient p_rlr |",
        "| Coefficient p_rf |",
        "| Coefficient p_xgb |",
        "| Power parameter |",
        "| Extremizes average |",
        "| Base rate |",
        "| Observations |",
    ] {
        assert!(report.contains(line), "missing summary row {line}");
    }
    pass(13, "supplied base-model predictions produce the eight-row, three-metric report shape");
}
