use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use croc::{
    evaluate_model, fit_method, load_cohort, run_experiment, run_sweep, simulate_replicate, Error, FitConfig, Method,
    PanelLayout, PredictionModel, Result, SimSpec, DEFAULT_ALPHA, DEFAULT_FOLDS, DEFAULT_MIN_GAIN,
    DEFAULT_RARE_THRESHOLD,
};

#[derive(Parser)]
#[command(name = "croc", version, about = "Likelihood-ratio ROC risk models on common and rare variants (FROC / CROC)")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Seed for fold shuffling, dropout sampling and (when given) simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Additive smoothing of likelihood-ratio cells.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,

    /// Variants with MAF strictly below this are rare.
    #[arg(long, global = true, default_value_t = DEFAULT_RARE_THRESHOLD)]
    rare_threshold: f64,

    /// Cross-validation folds used to pick model size.
    #[arg(long, global = true, default_value_t = DEFAULT_FOLDS)]
    folds: usize,

    /// Smallest AUC gain that still adds a locus or merges a rare variant.
    #[arg(long, global = true, default_value_t = DEFAULT_MIN_GAIN)]
    min_gain: f64,

    /// Largest model size (default: min(#candidates, 20)).
    #[arg(long, global = true)]
    max_k: Option<usize>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

impl GlobalOpts {
    fn fit_config(&self) -> FitConfig<f64> {
        FitConfig {
            alpha: self.alpha,
            min_gain: self.min_gain,
            max_k: self.max_k,
            folds: self.folds,
            seed: self.seed.unwrap_or(0),
            rare_threshold: self.rare_threshold,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Froc,
    Croc,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Froc => Method::Froc,
            MethodArg::Croc => Method::Croc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 209 cases / 488 controls, 133 common + 400 rare variants, planted effects.
    Gaw17,
    /// Same panel with no effects.
    Null,
}

#[derive(Args)]
struct SpecSource {
    /// Simulation spec JSON.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,

    /// Built-in simulation spec.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

impl SpecSource {
    fn load(&self, seed: Option<u64>) -> Result<SimSpec> {
        let mut spec = match (&self.spec, self.preset) {
            (Some(path), _) => SimSpec::load(path)?,
            (None, Some(Preset::Gaw17)) => PanelLayout::gaw17_like().build(0),
            (None, Some(Preset::Null)) => PanelLayout::null(209, 488).build(0),
            (None, None) => return Err(Error::Usage("--spec or --preset required".into())),
        };
        if let Some(s) = seed {
            spec.seed = s;
        }
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicate cohorts as genotype-TSV files plus a manifest.
    Simulate {
        #[command(flatten)]
        source: SpecSource,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit a FROC or CROC model on a training cohort.
    Fit {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on a test cohort and print its AUC.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Also write the ROC curve as TSV.
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Write the ROC curve of a model on a cohort (stdout unless --out).
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on replicates 0..N, test on later replicates; per-method AUC summary.
    Experiment {
        #[command(flatten)]
        source: SpecSource,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "froc,croc")]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = 20)]
        train_reps: usize,
        #[arg(long)]
        test_reps: Option<usize>,
        /// Output prefix: writes PREFIX.tsv, PREFIX.replicates.tsv, PREFIX.json.
        #[arg(long)]
        out: PathBuf,
        /// Record fit wall time in the report (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Common-variant dropout sweep with mean AUC and 95% CI per method.
    Sweep {
        #[command(flatten)]
        source: SpecSource,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0")]
        fractions: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "froc,croc")]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Output prefix: writes PREFIX.tsv and PREFIX.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_model(path: &Path) -> Result<PredictionModel<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    PredictionModel::from_json(&text)
}

#[derive(Serialize)]
struct ManifestEntry {
    index: usize,
    seed: u64,
    file: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a SimSpec,
    replicates: Vec<ManifestEntry>,
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Simulate { source, replicates, out_dir } => {
            let spec = source.load(g.seed)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::Io { path: out_dir.clone(), source: e })?;
            let mut entries = Vec::new();
            for i in 0..replicates {
                let cohort = simulate_replicate(&spec, i)?;
                let file = format!("replicate_{i:03}.tsv");
                cohort.write_tsv(&out_dir.join(&file))?;
                entries.push(ManifestEntry { index: i, seed: spec.for_replicate(i).seed, file });
            }
            let manifest = Manifest { spec: &spec, replicates: entries };
            let mut js = serde_json::to_string_pretty(&manifest)?;
            js.push('\n');
            write(&out_dir.join("manifest.json"), &js)?;
            println!("wrote {replicates} replicate(s) to {}", out_dir.display());
        }
        Command::Fit { method, input, out } => {
            let cohort = load_cohort(&input, g.rare_threshold)?;
            let model = fit_method(&cohort, method.into(), &g.fit_config())?;
            write(&out, &model.to_json()?)?;
            println!("train_auc\t{:.6}\tchosen_k\t{}", model.train_auc, model.chosen_k);
        }
        Command::Evaluate { model, input, roc } => {
            let model = load_model(&model)?;
            let cohort = load_cohort(&input, g.rare_threshold)?;
            let (auc, curve) = evaluate_model(&model, &cohort)?;
            if let Some(path) = roc {
                curve.write_tsv(&path)?;
            }
            println!("auc\t{auc:.6}");
        }
        Command::Roc { model, input, out } => {
            let model = load_model(&model)?;
            let cohort = load_cohort(&input, g.rare_threshold)?;
            let (auc, curve) = evaluate_model(&model, &cohort)?;
            match out {
                Some(path) => {
                    curve.write_tsv(&path)?;
                    println!("auc\t{auc:.6}");
                }
                None => print!("{}", curve.to_tsv()),
            }
        }
        Command::Experiment { source, methods, train_reps, test_reps, out, timing } => {
            let spec = source.load(g.seed)?;
            let methods: Vec<Method> = methods.into_iter().map(Into::into).collect();
            let output =
                run_experiment(&spec, &methods, train_reps, test_reps.unwrap_or(train_reps), &g.fit_config(), timing)?;
            write(&with_suffix(&out, ".tsv"), &output.summary_tsv())?;
            write(&with_suffix(&out, ".replicates.tsv"), &output.replicates_tsv())?;
            write(&with_suffix(&out, ".json"), &output.to_json()?)?;
            print!("{}", output.summary_tsv());
            if output.failed() {
                return Ok(false);
            }
        }
        Command::Sweep { source, fractions, methods, reps, out } => {
            let spec = source.load(g.seed)?;
            let methods: Vec<Method> = methods.into_iter().map(Into::into).collect();
            let output = run_sweep(&spec, &fractions, &methods, reps, &g.fit_config())?;
            write(&with_suffix(&out, ".tsv"), &output.to_tsv())?;
            write(&with_suffix(&out, ".json"), &output.to_json()?)?;
            print!("{}", output.to_tsv());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    info!("starting");
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more replicates failed (see report)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
