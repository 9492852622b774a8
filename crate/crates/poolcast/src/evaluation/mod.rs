//! Cross-validated stacking harness: fold management, per-method fitting
//! and scoring on held-out folds, and report-shaped result tables.

mod io;
mod report;

pub use io::{
    read_predictions, read_training_data, write_predictions, write_training_data, GridEntry,
    LinkSpec, ModelFile, PredictionFile, TrainingMeta,
};
pub use report::{render_report, ReportFormat};

use rayon::prelude::*;

use crate::distributions::LinkFamily;
use crate::ensemble::{blop, logit_pool, lop, FittedAggregator};
use crate::fitting::{
    fit_blop, fit_glm, fit_olop, fit_scalar, select_power, FitOptions, GridPoint, PowerGrid,
    ScalarMethod, TrainingSet,
};
use crate::rng::CounterRng;
use crate::scoring::{
    auc, classify_extremizing, ExtremizingClass, ExtremizingRate, PredictionSet,
};
use crate::{Error, Result};

/// Deterministic assignment of rows to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    n: usize,
    folds: usize,
    seed: u64,
    map: Vec<u32>,
}

impl FoldAssignment {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fold_count(&self) -> usize {
        self.folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.map[row] as usize
    }

    pub fn rows_in(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&r| self.map[r] as usize == fold).collect()
    }

    pub fn rows_not_in(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&r| self.map[r] as usize != fold).collect()
    }
}

fn check_split_args(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Domain(format!("at least 2 folds are required, got {k}")));
    }
    if n < k {
        return Err(Error::Domain(format!("cannot split {n} rows into {k} folds")));
    }
    Ok(())
}

/// Seeded uniform shuffle followed by a block partition; fold sizes differ
/// by at most one.
pub fn split_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    check_split_args(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    CounterRng::new(seed).derive("folds").shuffle(&mut order);
    let base = n / k;
    let extra = n % k;
    let mut map = vec![0u32; n];
    let mut pos = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for _ in 0..size {
            map[order[pos]] = fold as u32;
            pos += 1;
        }
    }
    Ok(FoldAssignment { n, folds: k, seed, map })
}

/// Stratified variant: shuffles each outcome class separately and deals
/// rows round-robin, preserving the class ratio per fold within one row.
pub fn split_folds_stratified(outcomes: &[bool], k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = outcomes.len();
    check_split_args(n, k)?;
    let rng = CounterRng::new(seed).derive("folds-stratified");
    let mut map = vec![0u32; n];
    let mut next_fold = 0usize;
    for (label, class) in [(true, "pos"), (false, "neg")] {
        let mut rows: Vec<usize> =
            (0..n).filter(|&r| outcomes[r] == label).collect();
        rng.derive(class).shuffle(&mut rows);
        for row in rows {
            map[row] = next_fold as u32;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldAssignment { n, folds: k, seed, map })
}

/// An aggregation method evaluated by the harness.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Score one base model's own predictions.
    PassThrough(String),
    /// Equal-weight linear opinion pool.
    Average,
    /// Linear opinion pool with fitted weights.
    Olop,
    /// Beta-transformed linear opinion pool, jointly fitted.
    Blop,
    /// Karmarkar transform of the equal-weight pool, fitted exponent.
    Klop,
    /// Logit aggregator, fitted exponent.
    Logit,
    /// Generalized linear model with a fixed link.
    Glm(LinkFamily),
    /// Generalized linear model with the power picked by grid search.
    GlmGrid(PowerGrid),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::PassThrough(name) => name.clone(),
            Method::Average => "avg".into(),
            Method::Olop => "olop".into(),
            Method::Blop => "blop".into(),
            Method::Klop => "klop".into(),
            Method::Logit => "logit".into(),
            Method::Glm(link) => match link.power() {
                Some(eta) => format!("glm-ep{eta}"),
                None => format!("glm-{}", link.family_name()),
            },
            Method::GlmGrid(_) => "glm-grid".into(),
        }
    }
}

/// Harness options.
#[derive(Debug, Clone, Default)]
pub struct CvOptions {
    pub fit: FitOptions,
    /// Baseline for the asymmetric log score; defaults to each fold's
    /// training base rate.
    pub als_baseline: Option<f64>,
}

/// Scores of one method on one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScores {
    pub ls: f64,
    pub als: f64,
    /// Undefined when the held-out fold has a single outcome class.
    pub auc: Option<f64>,
}

/// Per-method results across folds.
#[derive(Debug, Clone)]
pub struct MethodScores {
    pub label: String,
    pub per_fold: Vec<std::result::Result<FoldScores, String>>,
    /// Averages over the folds that succeeded.
    pub mean_ls: Option<f64>,
    pub mean_als: Option<f64>,
    pub mean_auc: Option<f64>,
    pub extremizing: Option<ExtremizingRate>,
    /// Out-of-fold predictions in row order; `None` for failed folds.
    pub oof: Vec<Option<f64>>,
}

/// Summary of the grid-searched ensemble, shaped like a final-estimation
/// table: intercept, named coefficients, selected power, extremizing rate,
/// base rate, and observation count.
#[derive(Debug, Clone)]
pub struct GridSummary {
    pub eta_star: f64,
    pub model: FittedAggregator,
    pub grid: Vec<GridPoint>,
    pub base_rate: f64,
    pub n_obs: usize,
    pub extremizing: Option<ExtremizingRate>,
}

/// Methods × metrics table with per-fold detail.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub fold_count: usize,
    pub n_obs: usize,
    pub methods: Vec<MethodScores>,
    pub grid: Option<GridSummary>,
}

struct FoldContext {
    test: Vec<usize>,
    train_data: std::result::Result<TrainingSet, String>,
    baseline: f64,
}

/// Fit every method on each fold complement, score the held-out folds with
/// all three metrics, and average across folds. Failed method/fold pairs
/// are recorded with their reason; the harness continues.
pub fn cross_validate(
    data: &TrainingSet,
    methods: &[Method],
    folds: &FoldAssignment,
    opts: &CvOptions,
) -> Result<ScoreTable> {
    if methods.is_empty() {
        return Err(Error::Schema("at least one method is required".into()));
    }
    if folds.n() != data.n() {
        return Err(Error::Schema(format!(
            "fold assignment covers {} rows but the data has {}",
            folds.n(),
            data.n()
        )));
    }
    let contexts: Vec<FoldContext> = (0..folds.fold_count())
        .map(|fold| {
            let train = folds.rows_not_in(fold);
            let test = folds.rows_in(fold);
            let positives = train.iter().filter(|&&r| data.outcomes()[r]).count();
            let baseline = opts
                .als_baseline
                .unwrap_or(positives as f64 / train.len() as f64);
            let train_data = data.subset(&train).map_err(|e| e.to_string());
            FoldContext { test, train_data, baseline }
        })
        .collect();

    let mut table = ScoreTable {
        fold_count: folds.fold_count(),
        n_obs: data.n(),
        methods: Vec::with_capacity(methods.len()),
        grid: None,
    };
    for method in methods {
        let (scores, grid) = run_method(method, data, folds, &contexts, opts);
        if table.grid.is_none() {
            table.grid = grid;
        }
        table.methods.push(scores);
    }
    Ok(table)
}

type FoldPrediction = std::result::Result<Vec<f64>, String>;

fn run_method(
    method: &Method,
    data: &TrainingSet,
    folds: &FoldAssignment,
    contexts: &[FoldContext],
    opts: &CvOptions,
) -> (MethodScores, Option<GridSummary>) {
    let mut grid_summary = None;

    // Grid selection runs once over the shared fold assignment; the
    // per-fold models below are refit at the selected power.
    let grid_link: Option<std::result::Result<LinkFamily, String>> = match method {
        Method::GlmGrid(grid) => Some(match select_power(grid, data, folds, &opts.fit) {
            Ok(sel) => {
                let link = *sel.model.link();
                grid_summary = Some(GridSummary {
                    eta_star: sel.eta_star,
                    model: sel.model,
                    grid: sel.grid,
                    base_rate: data.base_rate(),
                    n_obs: data.n(),
                    extremizing: None,
                });
                Ok(link)
            }
            Err(e) => Err(e.to_string()),
        }),
        _ => None,
    };

    let fold_preds: Vec<FoldPrediction> = contexts
        .par_iter()
        .map(|ctx| predict_fold(method, data, ctx, opts, grid_link.as_ref()))
        .collect();

    let mut per_fold = Vec::with_capacity(contexts.len());
    let mut oof: Vec<Option<f64>> = vec![None; data.n()];
    let mut sums = (0.0f64, 0.0f64, 0.0f64);
    let mut counts = (0usize, 0usize, 0usize);
    let mut extremize = (0usize, 0usize, 0usize); // (yes, classified, excluded)

    for (ctx, preds) in contexts.iter().zip(&fold_preds) {
        match preds {
            Err(reason) => per_fold.push(Err(reason.clone())),
            Ok(preds) => {
                let outcomes: Vec<bool> =
                    ctx.test.iter().map(|&r| data.outcomes()[r]).collect();
                match score_fold(preds, &outcomes, ctx.baseline) {
                    Err(reason) => per_fold.push(Err(reason)),
                    Ok(scores) => {
                        for (&row, &p) in ctx.test.iter().zip(preds) {
                            oof[row] = Some(p);
                            let p_bar =
                                data.row(row).iter().sum::<f64>() / data.k() as f64;
                            match classify_extremizing(p, p_bar, ctx.baseline) {
                                Ok(ExtremizingClass::Extremizes) => {
                                    extremize.0 += 1;
                                    extremize.1 += 1;
                                }
                                Ok(ExtremizingClass::AntiExtremizes) => extremize.1 += 1,
                                Err(_) => extremize.2 += 1,
                            }
                        }
                        sums.0 += scores.ls;
                        counts.0 += 1;
                        sums.1 += scores.als;
                        counts.1 += 1;
                        if let Some(a) = scores.auc {
                            sums.2 += a;
                            counts.2 += 1;
                        }
                        per_fold.push(Ok(scores));
                    }
                }
            }
        }
    }

    let extremizing = (extremize.1 > 0).then(|| ExtremizingRate {
        rate: extremize.0 as f64 / extremize.1 as f64,
        classified: extremize.1,
        excluded: extremize.2,
    });
    if let Some(summary) = grid_summary.as_mut() {
        summary.extremizing = extremizing;
    }
    let scores = MethodScores {
        label: method.label(),
        per_fold,
        mean_ls: (counts.0 > 0).then(|| sums.0 / counts.0 as f64),
        mean_als: (counts.1 > 0).then(|| sums.1 / counts.1 as f64),
        mean_auc: (counts.2 > 0).then(|| sums.2 / counts.2 as f64),
        extremizing,
        oof,
    };
    (scores, grid_summary)
}

fn predict_fold(
    method: &Method,
    data: &TrainingSet,
    ctx: &FoldContext,
    opts: &CvOptions,
    grid_link: Option<&std::result::Result<LinkFamily, String>>,
) -> FoldPrediction {
    let clip = opts.fit.clip_epsilon;
    let test_rows = |f: &mut dyn FnMut(&[f64]) -> Result<f64>| -> FoldPrediction {
        let mut preds = Vec::with_capacity(ctx.test.len());
        for &r in &ctx.test {
            let p = f(data.row(r)).map_err(|e| e.to_string())?;
            preds.push(p.clamp(clip, 1.0 - clip));
        }
        Ok(preds)
    };

    match method {
        Method::PassThrough(name) => {
            let col = data.column_index(name).map_err(|e| e.to_string())?;
            test_rows(&mut |row| Ok(row[col]))
        }
        Method::Average => {
            test_rows(&mut |row| Ok(row.iter().sum::<f64>() / row.len() as f64))
        }
        Method::Olop => {
            let train = ctx.train_data.as_ref().map_err(Clone::clone)?;
            let w = fit_olop(train, &opts.fit).map_err(|e| e.to_string())?;
            test_rows(&mut |row| lop(&w, row))
        }
        Method::Blop => {
            let train = ctx.train_data.as_ref().map_err(Clone::clone)?;
            let fit = fit_blop(train, &opts.fit).map_err(|e| e.to_string())?;
            test_rows(&mut |row| {
                blop(fit.a, fit.b, lop(&fit.weights, row)?.clamp(clip, 1.0 - clip))
            })
        }
        Method::Klop => {
            let train = ctx.train_data.as_ref().map_err(Clone::clone)?;
            let a = fit_scalar(ScalarMethod::Klop, train, &opts.fit).map_err(|e| e.to_string())?;
            test_rows(&mut |row| {
                let pool = (row.iter().sum::<f64>() / row.len() as f64).clamp(clip, 1.0 - clip);
                crate::ensemble::klop(a, pool)
            })
        }
        Method::Logit => {
            let train = ctx.train_data.as_ref().map_err(Clone::clone)?;
            let a =
                fit_scalar(ScalarMethod::Logit, train, &opts.fit).map_err(|e| e.to_string())?;
            test_rows(&mut |row| logit_pool(a, row))
        }
        Method::Glm(link) => {
            let train = ctx.train_data.as_ref().map_err(Clone::clone)?;
            let model = fit_glm(link, train, &opts.fit).map_err(|e| e.to_string())?;
            test_rows(&mut |row| model.apply(row))
        }
        Method::GlmGrid(_) => {
            let link = match grid_link.expect("grid link computed for grid methods") {
                Ok(link) => *link,
                Err(reason) => return Err(reason.clone()),
            };
            let train = ctx.train_data.as_ref().map_err(Clone::clone)?;
            let model = fit_glm(&link, train, &opts.fit).map_err(|e| e.to_string())?;
            test_rows(&mut |row| model.apply(row))
        }
    }
}

fn score_fold(
    preds: &[f64],
    outcomes: &[bool],
    baseline: f64,
) -> std::result::Result<FoldScores, String> {
    if !(baseline > 0.0 && baseline < 1.0) {
        return Err(format!(
            "fold baseline {baseline} is degenerate; the training complement has one class"
        ));
    }
    let set = PredictionSet::new(preds.to_vec(), outcomes.to_vec()).map_err(|e| e.to_string())?;
    let ls = set.mean_log_score().map_err(|e| e.to_string())?;
    let als = set.mean_asym_log_score(baseline).map_err(|e| e.to_string())?;
    let auc_value = auc(&set).ok();
    Ok(FoldScores { ls, als, auc: auc_value })
}
