use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use survbenim::eval::run_experiment;
use survbenim::explain::{
    fit_survbenim_global, fit_survbenim_local, fit_survbex, fit_survlime, fit_survnam,
    fit_survnam_global, ExplanationResult, Method,
};
use survbenim::forest::{fit_rsf, RSFModel};
use survbenim::io::{
    canonical_json, load_dataset_csv, read_json, save_dataset_csv, EvaluateRunConfig,
    ExplainRunConfig, ExportCurvesRunConfig, GenerateRunConfig, GroundTruthFile, ReportFile,
    ResultFile, TrainRunConfig, FORMAT_VERSION,
};
use survbenim::survival::cindex_times;
use survbenim::synth::gen_clustered_dataset;
use survbenim::{Result, SurvError};

#[derive(Parser)]
#[command(
    name = "survbenim",
    about = "Survival black-box explanation toolkit: data generation, forest training, explanation and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed(s) in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the logical CPU count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and its ground truth.
    Generate,
    /// Train the random survival forest black box.
    TrainBlackbox,
    /// Explain anchors with a chosen method.
    Explain,
    /// Run the full generator -> forest -> explainers -> metrics pipeline.
    Evaluate,
    /// Dump a result's per-feature curves as CSV.
    ExportCurves,
}

/// Collects the files a command creates so they can be removed if the
/// command fails partway.
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new() -> Self {
        Self {
            written: Vec::new(),
        }
    }

    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn cleanup(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut outputs = Outputs::new();
    match run(&cli, &mut outputs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            outputs.cleanup();
            eprintln!("error: {e}");
            match e {
                SurvError::UnknownMethod(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn config_path(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| SurvError::InvalidConfig("--config is required".into()))
}

fn run(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Generate => generate(cli, outputs),
        Command::TrainBlackbox => train_blackbox(cli, outputs),
        Command::Explain => explain(cli, outputs),
        Command::Evaluate => evaluate(cli, outputs),
        Command::ExportCurves => export_curves(cli, outputs),
    }
}

fn generate(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    let mut cfg: GenerateRunConfig = read_json(config_path(cli)?)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let generator = cfg.resolve()?;
    let (dataset, truth) = gen_clustered_dataset(&generator)?;
    info!("generated {} records, {} features", dataset.len(), dataset.dim());
    let csv_path = cli.out.join("dataset.csv");
    save_dataset_csv(&csv_path, &dataset)?;
    outputs.written.push(csv_path);
    outputs.write(
        cli.out.join("ground_truth.json"),
        &canonical_json(&GroundTruthFile {
            format_version: FORMAT_VERSION,
            truth,
        })?,
    )?;
    outputs.written.clear();
    Ok(())
}

fn train_blackbox(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    let mut cfg: TrainRunConfig = read_json(config_path(cli)?)?;
    cfg.validate()?;
    if let Some(seed) = cli.seed {
        cfg.forest.seed = seed;
    }
    let dataset = load_dataset_csv(Path::new(&cfg.dataset))?;
    let forest = fit_rsf(&dataset, &cfg.forest)?;

    // Training concordance of the forest's expected event times.
    let mut preds = Vec::with_capacity(dataset.len());
    let mut times = Vec::with_capacity(dataset.len());
    let mut events = Vec::with_capacity(dataset.len());
    for r in dataset.records() {
        preds.push(forest.expected_time(&r.features)?);
        times.push(r.time);
        events.push(r.event);
    }
    match cindex_times(&times, &preds, &events) {
        Some(c) => println!("training_cindex {c:.6}"),
        None => println!("training_cindex undefined"),
    }

    outputs.write(cli.out.join("forest.json"), &forest.to_json_string()?)?;
    outputs.written.clear();
    Ok(())
}

fn explain(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    let mut cfg: ExplainRunConfig = read_json(config_path(cli)?)?;
    cfg.validate()?;
    if let Some(seed) = cli.seed {
        cfg.explain.seed = seed;
    }
    let method = Method::parse(&cfg.method)?;
    let dataset = load_dataset_csv(Path::new(&cfg.dataset))?;
    let forest = RSFModel::from_json_str(&fs::read_to_string(&cfg.blackbox)?)?;

    let mut anchors = cfg.anchors.clone();
    for &i in &cfg.anchor_indices {
        if i >= dataset.len() {
            return Err(SurvError::InvalidConfig(format!(
                "anchor index {i} out of range for {} records",
                dataset.len()
            )));
        }
        anchors.push(dataset.record(i).features.clone());
    }

    let results: Vec<ExplanationResult> = match method {
        Method::SurvbenimGlobal => {
            fit_survbenim_global(&forest, &dataset, &anchors, &cfg.explain)?
        }
        Method::SurvbenimLocal => anchors
            .iter()
            .map(|x| fit_survbenim_local(&forest, &dataset, x, &cfg.explain))
            .collect::<Result<_>>()?,
        Method::Survbex => anchors
            .iter()
            .map(|x| fit_survbex(&forest, &dataset, x, &cfg.explain))
            .collect::<Result<_>>()?,
        Method::Survlime => anchors
            .iter()
            .map(|x| fit_survlime(&forest, &dataset, x, &cfg.explain))
            .collect::<Result<_>>()?,
        Method::Survnam => {
            if anchors.len() == 1 {
                vec![fit_survnam(&forest, &dataset, &anchors[0], &cfg.explain)?]
            } else {
                fit_survnam_global(&forest, &dataset, &anchors, &cfg.explain)?
            }
        }
    };

    for (i, result) in results.into_iter().enumerate() {
        outputs.write(
            cli.out.join(format!("result_{i}.json")),
            &canonical_json(&ResultFile {
                format_version: FORMAT_VERSION,
                result,
            })?,
        )?;
    }
    outputs.written.clear();
    Ok(())
}

fn evaluate(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    let mut cfg: EvaluateRunConfig = read_json(config_path(cli)?)?;
    cfg.validate()?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
        cfg.experiment.generator.seed = seed;
        cfg.experiment.forest.seed = seed.wrapping_add(1);
        cfg.experiment.explain.seed = seed.wrapping_add(2);
    }
    let reports = run_experiment(&cfg.experiment)?;

    let mut table = String::from(
        "method,msd,msd_std,mkl,mkl_std,mci,mci_std,msfd,msfd_std,skipped\n",
    );
    for r in &reports {
        let cell = |a: &Option<survbenim::eval::Aggregate>, f: fn(&survbenim::eval::Aggregate) -> f64| {
            a.as_ref().map_or("".to_string(), |v| format!("{:.16e}", f(v)))
        };
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method.name(),
            cell(&r.msd, |a| a.mean),
            cell(&r.msd, |a| a.std_dev),
            cell(&r.mkl, |a| a.mean),
            cell(&r.mkl, |a| a.std_dev),
            cell(&r.mci, |a| a.mean),
            cell(&r.mci, |a| a.std_dev),
            cell(&r.msfd, |a| a.mean),
            cell(&r.msfd, |a| a.std_dev),
            r.skipped.len(),
        ));
    }

    outputs.write(
        cli.out.join("report.json"),
        &canonical_json(&ReportFile {
            format_version: FORMAT_VERSION,
            reports,
        })?,
    )?;
    outputs.write(cli.out.join("report.csv"), &table)?;
    outputs.written.clear();
    Ok(())
}

fn export_curves(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    let cfg: ExportCurvesRunConfig = read_json(config_path(cli)?)?;
    cfg.validate()?;
    let file: ResultFile = read_json(Path::new(&cfg.result))?;
    file.check()?;
    let curves = file.result.curves.as_ref().ok_or_else(|| {
        SurvError::InvalidConfig(format!(
            "method {} produces no curves",
            file.result.method.name()
        ))
    })?;
    let mut table = String::from("feature,grid_value,function_value\n");
    for c in curves {
        for (g, v) in c.grid.iter().zip(&c.values) {
            table.push_str(&format!("{},{g:.16e},{v:.16e}\n", c.feature));
        }
    }
    outputs.write(cli.out.join("curves.csv"), &table)?;
    outputs.written.clear();
    Ok(())
}
