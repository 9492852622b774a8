//! `poolcast` — aggregate binary-event probability forecasts.
//!
//! Subcommands cover the full pipeline: simulate synthetic forecast data,
//! fit an ensemble (optionally grid-searching the link's power parameter),
//! predict with a saved model, run the cross-validated comparison harness,
//! score prediction files, measure extremizing rates, and emit the data
//! behind the standard diagnostic figures.
//!
//! Exit codes: 0 success, 2 usage, 3 data/schema, 4 numeric condition
//! (separation, non-convergence, infeasible reports).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poolcast::conjugate::{
    aggregate_given_shared, aggregate_private, aggregate_shared_normal, ConjugatePair,
    ExpertReports, SampleDesign,
};
use poolcast::distributions::LinkFamily;
use poolcast::ensemble::{blop, klop, logit_pool, InformationModel};
use poolcast::evaluation::{
    cross_validate, read_predictions, read_training_data, render_report, split_folds,
    split_folds_stratified, write_predictions, write_training_data, CvOptions, Method, ModelFile,
    PredictionFile, ReportFormat, TrainingMeta,
};
use poolcast::fitting::{fit_glm, select_power, FitOptions, PowerGrid};
use poolcast::scoring::{auc, extremizing_rate, PredictionSet};
use poolcast::simulation::{generator_from_json, latent_prior_predictive, simulate, SimConfig};
use poolcast::Error;

#[derive(Parser)]
#[command(
    name = "poolcast",
    version,
    about = "Aggregate binary-event probability forecasts with Bayesian ensembles"
)]
struct Cli {
    /// Cap the worker thread count (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic forecast data from a generator config.
    Simulate(SimulateArgs),
    /// Fit a generalized-link ensemble by maximum likelihood.
    Fit(FitArgs),
    /// Apply a saved model to a data file.
    Predict(PredictArgs),
    /// Cross-validated comparison of aggregation methods.
    Cv(CvArgs),
    /// Score a predictions file (log score, asymmetric log score, AUC).
    Score(ScoreArgs),
    /// Fraction of forecasts that extremize the average forecast.
    ExtremizeRate(ExtremizeArgs),
    /// Emit the (p_2, aggregate) grid behind a diagnostic figure.
    PlotData(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator kind: `conjugate` or `latent`; must match the config.
    #[arg(long = "gen")]
    generator: String,
    /// JSON generator description.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output data file (delimited; includes an oracle column when the
    /// generator provides one).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Link family: `normal`, `logistic`, or `ep` (requires --power).
    #[arg(long, default_value = "ep")]
    link: String,
    /// Exponential power parameter for --link ep.
    #[arg(long)]
    power: Option<f64>,
    /// Comma-separated power grid; selects the power by cross-validated
    /// log score instead of using --power.
    #[arg(long, value_delimiter = ',')]
    power_grid: Option<Vec<f64>>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output predictions file with columns p, y, p_bar.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated methods: avg, olop, blop, klop, logit, glm,
    /// glm-grid, or an expert column name (e.g. p_xgb) scored as-is.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Preserve the outcome ratio in every fold.
    #[arg(long)]
    stratified: bool,
    /// Link family for the `glm` method.
    #[arg(long, default_value = "ep")]
    link: String,
    /// Power for the `glm` method with an `ep` link.
    #[arg(long)]
    power: Option<f64>,
    /// Power grid for the `glm-grid` method (defaults to the standard grid).
    #[arg(long, value_delimiter = ',')]
    power_grid: Option<Vec<f64>>,
    /// Override the asymmetric-log-score baseline (defaults to each fold's
    /// training base rate).
    #[arg(long)]
    base_rate: Option<f64>,
    /// Report output path.
    #[arg(long)]
    report: PathBuf,
    /// Report format: `markdown` or `delimited`.
    #[arg(long, default_value = "markdown")]
    format: String,
}

#[derive(Args)]
struct ScoreArgs {
    /// Predictions file with columns p and y.
    #[arg(long)]
    preds: PathBuf,
    /// Baseline for the asymmetric log score (default: base rate of y).
    #[arg(long)]
    base_rate: Option<f64>,
}

#[derive(Args)]
struct ExtremizeArgs {
    /// Predictions file with columns p and p_bar.
    #[arg(long)]
    preds: PathBuf,
    /// Prior-predictive probability p0.
    #[arg(long)]
    prior: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// Figure id: 1a, 1b, 1c, 1d, 2a, 2b, 3a, or 3b.
    #[arg(long)]
    figure: String,
    #[arg(long)]
    out: PathBuf,
}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

/// Data-stage errors: anything wrong with a file or its schema is exit 3;
/// numeric conditions are exit 4.
fn data_err(e: Error) -> Failure {
    let code = if e.is_numeric() { EXIT_NUMERIC } else { EXIT_DATA };
    Failure { code, message: e.to_string() }
}

/// Computation-stage errors: numeric conditions are exit 4, contract
/// violations surface as usage errors.
fn num_err(e: Error) -> Failure {
    let code = if e.is_numeric() { EXIT_NUMERIC } else { EXIT_USAGE };
    Failure { code, message: e.to_string() }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("POOLCAST_LOG", "error"),
    )
    .init();
    let cli = Cli::parse();
    let run = || -> Result<(), Failure> {
        if let Some(jobs) = cli.jobs {
            if jobs == 0 {
                return Err(Failure::usage("--jobs must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Failure::usage(format!("cannot build thread pool: {e}")))?;
            return pool.install(|| dispatch(&cli.command));
        }
        dispatch(&cli.command)
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(args) => run_simulate(args),
        Command::Fit(args) => run_fit(args),
        Command::Predict(args) => run_predict(args),
        Command::Cv(args) => run_cv(args),
        Command::Score(args) => run_score(args),
        Command::ExtremizeRate(args) => run_extremize(args),
        Command::PlotData(args) => run_plot(args),
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| data_err(Error::Io(e)))?;
    let generator = generator_from_json(&text).map_err(data_err)?;
    if generator.kind_name() != args.generator {
        return Err(Failure::usage(format!(
            "--gen {} does not match the config's `{}` generator",
            args.generator,
            generator.kind_name()
        )));
    }
    let config = SimConfig::new(generator, args.rows, args.seed).map_err(num_err)?;
    let output = simulate(&config).map_err(num_err)?;
    let extras = match output.oracle {
        Some(oracle) => vec![("oracle_bayes".to_string(), oracle)],
        None => vec![],
    };
    write_training_data(&args.out, &output.data, &extras).map_err(data_err)?;
    log::info!("wrote {} rows to {}", output.data.n(), args.out.display());
    Ok(())
}

fn parse_link(link: &str, power: Option<f64>) -> Result<LinkFamily, Failure> {
    match link {
        "normal" => Ok(LinkFamily::standard_normal()),
        "logistic" => Ok(LinkFamily::standard_logistic()),
        "ep" => {
            let power = power
                .ok_or_else(|| Failure::usage("--link ep requires --power <eta>"))?;
            LinkFamily::exponential_power(power).map_err(num_err)
        }
        other => Err(Failure::usage(format!(
            "unknown link {other:?}; expected normal, logistic, or ep"
        ))),
    }
}

fn run_fit(args: &FitArgs) -> Result<(), Failure> {
    let (data, _) = read_training_data(&args.data).map_err(data_err)?;
    let opts = FitOptions { seed: args.seed, ..FitOptions::default() };
    let meta = TrainingMeta { n: data.n(), base_rate: data.base_rate(), seed: args.seed };
    let file = if let Some(grid) = &args.power_grid {
        let grid = PowerGrid::new(grid.clone()).map_err(num_err)?;
        let folds = split_folds(data.n(), args.folds, args.seed).map_err(num_err)?;
        let selection = select_power(&grid, &data, &folds, &opts).map_err(num_err)?;
        log::info!("selected power {}", selection.eta_star);
        ModelFile::from_parts(&selection.model, meta, &selection.grid)
    } else {
        let link = parse_link(&args.link, args.power)?;
        let model = fit_glm(&link, &data, &opts).map_err(num_err)?;
        ModelFile::from_parts(&model, meta, &[])
    };
    file.save(&args.out).map_err(data_err)?;
    Ok(())
}

fn run_predict(args: &PredictArgs) -> Result<(), Failure> {
    let file = ModelFile::load(&args.model).map_err(data_err)?;
    let (data, _) = read_training_data(&args.data).map_err(data_err)?;
    let model = file.to_aggregator(data.names()).map_err(data_err)?;
    let mut p = Vec::with_capacity(data.n());
    let mut p_bar = Vec::with_capacity(data.n());
    for r in 0..data.n() {
        let row = data.row(r);
        p.push(model.apply(row).map_err(num_err)?);
        p_bar.push(row.iter().sum::<f64>() / row.len() as f64);
    }
    let preds = PredictionFile { p, y: Some(data.outcomes().to_vec()), p_bar: Some(p_bar) };
    write_predictions(&args.out, &preds).map_err(data_err)?;
    Ok(())
}

fn parse_methods(args: &CvArgs) -> Result<Vec<Method>, Failure> {
    if args.methods.is_empty() {
        return Err(Failure::usage("--methods requires at least one method"));
    }
    let mut methods = Vec::with_capacity(args.methods.len());
    for token in &args.methods {
        let method = match token.as_str() {
            "avg" => Method::Average,
            "olop" => Method::Olop,
            "blop" => Method::Blop,
            "klop" => Method::Klop,
            "logit" => Method::Logit,
            "glm" => Method::Glm(parse_link(&args.link, args.power)?),
            "glm-grid" => {
                let grid = match &args.power_grid {
                    Some(etas) => PowerGrid::new(etas.clone()).map_err(num_err)?,
                    None => PowerGrid::default(),
                };
                Method::GlmGrid(grid)
            }
            name if name.starts_with("p_") => Method::PassThrough(name.to_string()),
            other => {
                return Err(Failure::usage(format!(
                    "unknown method {other:?}; expected avg, olop, blop, klop, logit, glm, \
                     glm-grid, or an expert column name starting with p_"
                )))
            }
        };
        methods.push(method);
    }
    Ok(methods)
}

fn run_cv(args: &CvArgs) -> Result<(), Failure> {
    let format = match args.format.as_str() {
        "markdown" | "md" => ReportFormat::Markdown,
        "delimited" | "csv" => ReportFormat::Delimited,
        other => {
            return Err(Failure::usage(format!(
                "unknown report format {other:?}; expected markdown or delimited"
            )))
        }
    };
    let methods = parse_methods(args)?;
    let (data, _) = read_training_data(&args.data).map_err(data_err)?;
    let folds = if args.stratified {
        split_folds_stratified(data.outcomes(), args.folds, args.seed)
    } else {
        split_folds(data.n(), args.folds, args.seed)
    }
    .map_err(num_err)?;
    let opts = CvOptions {
        fit: FitOptions { seed: args.seed, ..FitOptions::default() },
        als_baseline: args.base_rate,
    };
    let table = cross_validate(&data, &methods, &folds, &opts).map_err(num_err)?;
    let report = render_report(&table, format).map_err(num_err)?;
    std::fs::write(&args.report, report).map_err(|e| data_err(Error::Io(e)))?;
    log::info!("wrote report to {}", args.report.display());
    Ok(())
}

fn run_score(args: &ScoreArgs) -> Result<(), Failure> {
    let file = read_predictions(&args.preds).map_err(data_err)?;
    let Some(outcomes) = file.y else {
        return Err(Failure {
            code: EXIT_DATA,
            message: "scoring needs a `y` column in the predictions file".into(),
        });
    };
    let set = PredictionSet::new(file.p, outcomes).map_err(data_err)?;
    let baseline = match args.base_rate {
        Some(c) => c,
        None => set.base_rate(),
    };
    if !(baseline > 0.0 && baseline < 1.0) {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: format!("baseline {baseline} is degenerate; supply --base-rate in (0,1)"),
        });
    }
    println!("n {}", set.len());
    println!("base_rate {:.6}", set.base_rate());
    println!("mean_ls {:.6}", set.mean_log_score().map_err(num_err)?);
    println!("mean_als {:.6}", set.mean_asym_log_score(baseline).map_err(num_err)?);
    match auc(&set) {
        Ok(a) => println!("auc {a:.6}"),
        Err(_) => println!("auc n/a"),
    }
    Ok(())
}

fn run_extremize(args: &ExtremizeArgs) -> Result<(), Failure> {
    let file = read_predictions(&args.preds).map_err(data_err)?;
    let Some(p_bar) = file.p_bar else {
        return Err(Failure {
            code: EXIT_DATA,
            message: "extremize-rate needs a `p_bar` column in the predictions file".into(),
        });
    };
    if !(args.prior > 0.0 && args.prior < 1.0) {
        return Err(Failure::usage(format!(
            "--prior must lie strictly inside (0,1), got {}",
            args.prior
        )));
    }
    let n = file.p.len();
    let outcomes = file.y.unwrap_or_else(|| vec![false; n]);
    let set = PredictionSet::new(file.p, outcomes)
        .and_then(|s| s.with_averages(p_bar))
        .and_then(|s| s.with_prior(args.prior))
        .map_err(data_err)?;
    let rate = extremizing_rate(&set).map_err(num_err)?;
    println!("extremizing_rate {:.6}", rate.rate);
    println!("classified {}", rate.classified);
    println!("excluded {}", rate.excluded);
    Ok(())
}

fn p2_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

fn run_plot(args: &PlotArgs) -> Result<(), Failure> {
    let grid = p2_grid();
    let mut out = String::new();
    match args.figure.as_str() {
        // Bernoulli pair, two experts with two private points each,
        // expert 1 at 3/4.
        "1a" => {
            let pair = ConjugatePair::beta_bernoulli(1.0, 1.0).map_err(num_err)?;
            let design = SampleDesign::new(vec![2, 2], 0).map_err(num_err)?;
            out.push_str("p2,aggregate\n");
            for &p2 in &grid {
                let r = ExpertReports::new(vec![0.75, p2]).map_err(num_err)?;
                let v = aggregate_private(&pair, &design, &r).map_err(num_err)?;
                out.push_str(&format!("{p2:.2},{v:.6}\n"));
            }
        }
        // Same pair with one private point each plus one shared point;
        // expert 1's report pins the shared statistic at 1.
        "1b" => {
            let pair = ConjugatePair::beta_bernoulli(1.0, 1.0).map_err(num_err)?;
            let design = SampleDesign::new(vec![1, 1], 1).map_err(num_err)?;
            out.push_str("p2,aggregate\n");
            for &p2 in &grid {
                let r = ExpertReports::new(vec![0.75, p2]).map_err(num_err)?;
                let v = aggregate_given_shared(&pair, &design, &r, 1.0).map_err(num_err)?;
                out.push_str(&format!("{p2:.2},{v:.6}\n"));
            }
        }
        "1c" | "1d" => {
            let pair = ConjugatePair::normal_normal(-1.25, 1.0, 1.0).map_err(num_err)?;
            let design = if args.figure == "1c" {
                SampleDesign::new(vec![2, 2], 0)
            } else {
                SampleDesign::new(vec![1, 1], 1)
            }
            .map_err(num_err)?;
            let p1 = pair.predictive_prob(2, -1.25).map_err(num_err)?;
            out.push_str("p2,aggregate\n");
            for &p2 in &grid {
                let r = ExpertReports::new(vec![p1, p2]).map_err(num_err)?;
                let v = if args.figure == "1c" {
                    aggregate_private(&pair, &design, &r)
                } else {
                    aggregate_shared_normal(&pair, &design, &r)
                }
                .map_err(num_err)?;
                out.push_str(&format!("{p2:.2},{v:.6}\n"));
            }
        }
        // Karmarkar (a = 2.5) and beta (5, 5) transforms of the average
        // with p1 = 1/2: nearly indistinguishable s-shapes.
        "2a" => {
            out.push_str("p2,klop,blop\n");
            for &p2 in &grid {
                let pool = (0.5 + p2) / 2.0;
                let k = klop(2.5, pool).map_err(num_err)?;
                let b = blop(5.0, 5.0, pool).map_err(num_err)?;
                out.push_str(&format!("{p2:.2},{k:.6},{b:.6}\n"));
            }
        }
        // Probit ensemble with a flat prior next to the logit aggregator
        // with a = 1.25.
        "2b" => {
            let pair = ConjugatePair::normal_normal(0.0, 1.0, 1.0).map_err(num_err)?;
            let design = SampleDesign::new(vec![2, 2], 0).map_err(num_err)?;
            let p1 = pair.predictive_prob(2, 0.0).map_err(num_err)?;
            out.push_str("p2,probit,logit\n");
            for &p2 in &grid {
                let r = ExpertReports::new(vec![p1, p2]).map_err(num_err)?;
                let probit = aggregate_private(&pair, &design, &r).map_err(num_err)?;
                let logit = logit_pool(1.25, &[p1, p2]).map_err(num_err)?;
                out.push_str(&format!("{p2:.2},{probit:.6},{logit:.6}\n"));
            }
        }
        // Exchangeable pair with sd 1/20 and ρ = 3/4: the ensemble
        // straightens as the power grows.
        "3a" => {
            let model = InformationModel::exchangeable(2, 0.0, 0.0025, 0.75, 0.0, 1.0)
                .map_err(num_err)?;
            let weights = model.derive_weights().map_err(num_err)?;
            let etas = [1.0, 2.0, 4.0];
            let mut priors = Vec::new();
            for &eta in &etas {
                let link = LinkFamily::exponential_power(eta).map_err(num_err)?;
                priors.push(latent_prior_predictive(&model, &link).map_err(num_err)?);
            }
            out.push_str("p2,eta_1,eta_2,eta_4\n");
            for &p2 in &grid {
                let r = ExpertReports::new(vec![0.5, p2]).map_err(num_err)?;
                let mut cells = Vec::new();
                for (&eta, &p0) in etas.iter().zip(&priors) {
                    let v = weights.aggregate_ep_link(eta, p0, &r).map_err(num_err)?;
                    cells.push(format!("{v:.6}"));
                }
                out.push_str(&format!("{p2:.2},{}\n", cells.join(",")));
            }
        }
        // Correlation sign flips the ensemble's shape at η = 2.
        "3b" => {
            let pos = InformationModel::exchangeable(2, 0.0, 0.0025, 0.75, 0.0, 1.0)
                .map_err(num_err)?
                .derive_weights()
                .map_err(num_err)?;
            let neg = InformationModel::exchangeable(2, 0.0, 0.0025, -0.5, 0.0, 1.0)
                .map_err(num_err)?
                .derive_weights()
                .map_err(num_err)?;
            out.push_str("p2,rho_pos,rho_neg\n");
            for &p2 in &grid {
                let r = ExpertReports::new(vec![0.5, p2]).map_err(num_err)?;
                let a = pos.aggregate_ep_link(2.0, 0.5, &r).map_err(num_err)?;
                let b = neg.aggregate_ep_link(2.0, 0.5, &r).map_err(num_err)?;
                out.push_str(&format!("{p2:.2},{a:.6},{b:.6}\n"));
            }
        }
        other => {
            return Err(Failure::usage(format!(
                "unknown figure {other:?}; expected 1a, 1b, 1c, 1d, 2a, 2b, 3a, or 3b"
            )))
        }
    }
    std::fs::write(&args.out, out).map_err(|e| data_err(Error::Io(e)))?;
    Ok(())
}
