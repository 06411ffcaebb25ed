//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use vinum_core::analysis::{correlation_matrix, rank_features, RankedFeature};
use vinum_core::data::{class_distribution, deduplicate, summarize, QUALITY_COLUMN};
use vinum_core::importance::{permutation_importance, ImportanceReport, DEFAULT_REPEATS};
use vinum_core::model::describe;
use vinum_core::tuning::TuneResult;
use vinum_core::{QualityClass, RawDataset};

use crate::config::ExperimentConfig;
use crate::dataio;
use crate::error::{Error, Result};
use crate::experiment::{self, Report};
use crate::persist::ModelFile;
use crate::render::{fixed, render, Format, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_STRICT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vinum", version, about = "Wine-quality classification experiments")]
pub struct Cli {
    /// Seed for commands with randomness; overrides a config file's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Treat solver convergence warnings as errors (exit code 3).
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-column mean, sd, min, max and median.
    Stats {
        csv: PathBuf,
        /// Summarize every row instead of removing exact duplicates first.
        #[arg(long)]
        keep_duplicates: bool,
    },
    /// Features ranked by absolute Pearson correlation with the target.
    Correlate {
        csv: PathBuf,
        #[arg(long, default_value = QUALITY_COLUMN)]
        target: String,
        /// Remove exact duplicate rows first.
        #[arg(long)]
        dedup: bool,
    },
    /// Row counts per quality class and per raw score.
    Distribution {
        csv: PathBuf,
        #[arg(long)]
        keep_duplicates: bool,
    },
    /// Run a full experiment and report every model.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Grid search every model without fixed hyperparameters and report the tables.
    Tune {
        #[arg(long)]
        config: PathBuf,
    },
    /// Permutation importance of a saved model on a labeled CSV.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
    },
    /// Predict quality classes with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
}

/// Parse `args` and run. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stderr) {
        Ok((text, warnings)) => {
            if let Err(e) = emit(&cli, &text, stdout) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_DATA;
            }
            for w in &warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            if cli.strict && !warnings.is_empty() {
                EXIT_STRICT
            } else {
                EXIT_OK
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DATA
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(path) => dataio::write_string(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

type Output = (String, Vec<String>);

fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<Output, Failure> {
    let f = cli.format;
    match &cli.command {
        Command::Stats { csv, keep_duplicates } => Ok((stats(&load(csv, !keep_duplicates)?, f)?, vec![])),
        Command::Correlate { csv, target, dedup } => Ok((correlate(&load(csv, *dedup)?, target, f)?, vec![])),
        Command::Distribution { csv, keep_duplicates } => {
            Ok((distribution(&load(csv, !keep_duplicates)?, f)?, vec![]))
        }
        Command::Compare { config } => {
            let cfg = load_config(config, cli.seed)?;
            let exp = experiment::run_experiment(&cfg, Path::new(""))?;
            for (stage, secs) in &exp.timings {
                let _ = writeln!(stderr, "time {stage}: {secs:.2}s");
            }
            if let Some(dir) = &cfg.model_dir {
                save_models(&exp, dir)?;
            }
            let text = report_text(&exp.report, f)?;
            if let (Some(path), None) = (&cfg.output, &cli.out) {
                dataio::write_string(path, &text)?;
            }
            let warnings = exp.report.warnings().map(String::from).collect();
            Ok((text, warnings))
        }
        Command::Tune { config } => {
            let mut cfg = load_config(config, cli.seed)?;
            // Models with fixed hyperparameters have nothing to search. Pin
            // seeds first so the rest keep the seeds `compare` gives them.
            let seeds: Vec<u64> = (0..cfg.models.len()).map(|i| experiment::model_seed(&cfg, i)).collect();
            for (m, s) in cfg.models.iter_mut().zip(seeds) {
                m.seed = Some(s);
            }
            cfg.models.retain(|m| m.hyperparameters.is_none());
            if cfg.models.is_empty() {
                return Err(Error::Config("every model has fixed hyperparameters; nothing to tune".into()).into());
            }
            let raw = experiment::load_input(&cfg, Path::new(""))?;
            let p = experiment::prepare(&cfg, &raw)?;
            let results = experiment::run_tuning(&p)?;
            Ok((tune_text(&results, f)?, vec![]))
        }
        Command::Importance { model, test, repeats } => {
            let seed = cli
                .seed
                .ok_or_else(|| Failure::Usage("`importance` shuffles columns and needs --seed".into()))?;
            let file = ModelFile::load(model)?;
            let ds = file.prepare_labeled(&dataio::read_csv(test)?)?;
            let r = permutation_importance(&file.model(), &ds, *repeats, seed).map_err(Error::from)?;
            Ok((importance_text(&r, f)?, vec![]))
        }
        Command::Predict { model, input } => {
            let file = ModelFile::load(model)?;
            let raw = dataio::read_csv(input)?;
            let x = file.prepare(&raw)?;
            let pred = file.model().predict_batch(&x).map_err(Error::from)?;
            Ok((predict_text(&raw, &pred, f)?, vec![]))
        }
    }
}

fn load(path: &Path, dedup: bool) -> Result<RawDataset> {
    let raw = dataio::read_csv(path)?;
    Ok(if dedup { deduplicate(&raw) } else { raw })
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json(&dataio::read_to_string(path)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn save_models(exp: &experiment::Experiment, dir: &Path) -> Result<()> {
    let files = exp.model_files();
    for (i, f) in files.iter().enumerate() {
        let repeated = files.iter().filter(|g| g.family == f.family).count() > 1;
        let name = if repeated {
            format!("{}-{i}.json", f.family)
        } else {
            format!("{}.json", f.family)
        };
        f.save(&dir.join(name))?;
    }
    Ok(())
}

pub fn stats(raw: &RawDataset, f: Format) -> Result<String> {
    let rows = summarize(raw)?;
    let mut t = Table::new(&format!("{} rows", raw.len()), &["feature", "mean", "sd", "min", "max", "median"]);
    for r in &rows {
        t.push(vec![
            r.name.clone(),
            fixed(r.mean, 4),
            fixed(r.sd, 4),
            fixed(r.min, 4),
            fixed(r.max, 4),
            fixed(r.median, 4),
        ]);
    }
    render(f, &rows, &[t])
}

pub fn correlate(raw: &RawDataset, target: &str, f: Format) -> Result<String> {
    let ranked: Vec<RankedFeature> = rank_features(&correlation_matrix(raw)?, target)?;
    let mut t = Table::new(&format!("correlation with {target}"), &["rank", "feature", "correlation"]);
    for r in &ranked {
        t.push(vec![r.rank.to_string(), r.name.clone(), fixed(r.correlation, 3)]);
    }
    render(f, &ranked, &[t])
}

pub fn distribution(raw: &RawDataset, f: Format) -> Result<String> {
    let d = class_distribution(raw)?;
    let mut classes = Table::new(&format!("{} rows", d.total()), &["class", "rows"]);
    for c in QualityClass::ALL {
        classes.push(vec![c.name().into(), d.by_class[c.index()].to_string()]);
    }
    let mut scores = Table::new("", &["score", "rows"]);
    for (s, &n) in d.by_score.iter().enumerate().filter(|(_, &n)| n > 0) {
        scores.push(vec![s.to_string(), n.to_string()]);
    }
    render(f, &d, &[classes, scores])
}

fn metrics_table(report: &Report) -> Table {
    let mut t = Table::new("test metrics", &["model", "class", "precision", "recall", "f1", "accuracy"]);
    for (i, m) in report.models.iter().enumerate() {
        let name = format!("{i}:{}", m.family);
        for c in &m.classes {
            t.push(vec![
                name.clone(),
                c.class.name().into(),
                fixed(c.precision, 4),
                fixed(c.recall, 4),
                fixed(c.f1, 4),
                fixed(m.accuracy, 4),
            ]);
        }
        t.push(vec![
            name,
            "macro".into(),
            fixed(m.macro_avg.precision, 4),
            fixed(m.macro_avg.recall, 4),
            fixed(m.macro_avg.f1, 4),
            fixed(m.accuracy, 4),
        ]);
    }
    t
}

pub fn report_text(report: &Report, f: Format) -> Result<String> {
    let d = &report.data;
    let mut data = Table::new(&format!("protocol {:?}; {}", report.config.protocol, report.leakage), &["item", "value"]);
    for (k, v) in [
        ("rows raw", d.rows_raw),
        ("rows after dedup", d.rows_deduplicated),
        ("synthetic rows", d.synthetic_rows),
        ("train rows", d.train_rows),
        ("test rows", d.test_rows),
    ] {
        data.push(vec![k.into(), v.to_string()]);
    }
    let mut chosen = Table::new("hyperparameters", &["model", "hyperparameters", "cv error"]);
    for (i, m) in report.models.iter().enumerate() {
        chosen.push(vec![
            format!("{i}:{}", m.family),
            describe(&m.hyperparameters),
            m.tuning.as_ref().map_or("-".into(), |t| fixed(t.best_error, 4)),
        ]);
    }
    let mut imp = importance_table(&report.importance.report);
    imp.title = format!(
        "permutation importance, model {}:{}",
        report.importance.model_index, report.importance.family
    );
    render(f, report, &[metrics_table(report), data, chosen, imp])
}

fn importance_table(r: &ImportanceReport) -> Table {
    let mut t = Table::new("permutation importance", &["feature", "mean_drop", "sd_drop", "rank"]);
    for fi in r.ranked() {
        t.push(vec![fi.feature.clone(), fixed(fi.mean_drop, 4), fixed(fi.sd_drop, 4), fi.rank.to_string()]);
    }
    t
}

pub fn importance_text(r: &ImportanceReport, f: Format) -> Result<String> {
    let t = importance_table(r);
    if f == Format::Csv {
        // Two columns, ready for a bar chart.
        let mut bars = Table::new("", &["feature", "mean_drop"]);
        for row in &t.rows {
            bars.push(vec![row[0].clone(), row[1].clone()]);
        }
        return bars.to_csv();
    }
    render(f, r, &[t])
}

pub fn tune_text(results: &[TuneResult], f: Format) -> Result<String> {
    let mut t = Table::new("grid search", &["model", "config", "cv error", "best"]);
    for r in results {
        for row in &r.table {
            let best = if row.config == r.best_config && row.error == r.best_error { "*" } else { "" };
            t.push(vec![r.model_family.to_string(), describe(&row.config), fixed(row.error, 4), best.into()]);
        }
    }
    render(f, &results, &[t])
}

#[derive(Serialize)]
struct Prediction {
    row: usize,
    class: QualityClass,
    name: &'static str,
}

pub fn predict_text(raw: &RawDataset, pred: &[QualityClass], f: Format) -> Result<String> {
    let _ = raw;
    let rows: Vec<Prediction> = pred
        .iter()
        .enumerate()
        .map(|(row, &c)| Prediction {
            row,
            class: c,
            name: c.name(),
        })
        .collect();
    let mut t = Table::new("", &["row", "class", "name"]);
    for p in &rows {
        t.push(vec![p.row.to_string(), p.class.index().to_string(), p.name.into()]);
    }
    render(f, &rows, &[t])
}
