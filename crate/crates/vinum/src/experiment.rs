//! The end-to-end experiment: load, clean, split, balance, fit or tune,
//! evaluate, and explain the best model.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use vinum_core::analysis::{correlation_matrix, rank_features, RankedFeature};
use vinum_core::data::{class_counts, deduplicate, encode_labels, summarize, StatsRow, QUALITY_COLUMN};
use vinum_core::importance::{permutation_importance, ImportanceReport};
use vinum_core::metrics::{all_class_metrics, confusion_matrix, macro_summary, ClassMetrics, ConfusionMatrix, MacroSummary};
use vinum_core::model::{self, default_hyperparameters, Hyperparameters, TrainConfig};
use vinum_core::preprocess::{fit_standardizer, select_features, stratified_split_indices, SplitSpec, Standardizer};
use vinum_core::rng::derive_seed;
use vinum_core::sampling::{resample, SamplerConfig};
use vinum_core::tuning::{default_grid, grid_search, GridSpec, TuneResult};
use vinum_core::{Dataset, ModelFamily, RawDataset, TrainedModel};

use crate::config::{ExperimentConfig, GridAxes, ModelSpec, SamplingOrder};
use crate::dataio;
use crate::error::{Error, Result, StageExt};
use crate::persist::ModelFile;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Features kept by default: all but the one least correlated with quality.
pub const DEFAULT_FEATURE_COUNT: usize = 10;

// Child-stream labels under the experiment seed.
const SPLIT_STREAM: u64 = 1;
const SAMPLER_STREAM: u64 = 2;
const IMPORTANCE_STREAM: u64 = 3;
const MODEL_STREAM: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSummary {
    pub rows_raw: usize,
    pub rows_deduplicated: usize,
    pub class_counts: [usize; 3],
    pub synthetic_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_class_counts: [usize; 3],
    pub test_class_counts: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelResult {
    pub family: ModelFamily,
    pub seed: u64,
    /// Resolved hyperparameters of the evaluated model.
    pub hyperparameters: Hyperparameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuneResult>,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub classes: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroSummary,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestModel {
    pub index: usize,
    pub family: ModelFamily,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceSection {
    pub model_index: usize,
    pub family: ModelFamily,
    #[serde(flatten)]
    pub report: ImportanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub toolkit_version: &'static str,
    /// The configuration with every default filled in; running it again
    /// reproduces this report.
    pub config: ExperimentConfig,
    pub leakage: &'static str,
    pub data: DataSummary,
    pub stats: Vec<StatsRow>,
    pub correlation: Vec<RankedFeature>,
    pub models: Vec<ModelResult>,
    pub best_model: BestModel,
    pub importance: ImportanceSection,
}

impl Report {
    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.models.iter().flat_map(|m| m.warnings.iter().map(String::as_str))
    }
}

/// Everything a run produced. Only `report` is meant for output; the rest
/// supports saving models and inspecting the run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: Report,
    pub models: Vec<TrainedModel>,
    pub standardizers: Vec<Standardizer>,
    /// Deduplicated row indices used for testing; `None` when resampling ran
    /// before the split, since test rows may then be synthetic.
    pub test_rows: Option<Vec<usize>>,
    pub timings: Vec<(String, f64)>,
}

impl Experiment {
    pub fn model_files(&self) -> Vec<ModelFile> {
        self.models.iter().map(|m| ModelFile::new(m, self.standardizers.clone())).collect()
    }
}

/// Training and test partitions ready for model fitting.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub rows_raw: usize,
    pub rows_deduplicated: usize,
    pub class_counts: [usize; 3],
    /// Standardized training rows. Under before-split they are already
    /// balanced; otherwise `sampler` still has to be applied.
    pub train: Dataset,
    pub test: Dataset,
    pub standardizers: Vec<Standardizer>,
    /// Sampler to apply to training data (and to CV training folds).
    pub sampler: Option<SamplerConfig>,
    pub synthetic_rows: usize,
    pub test_rows: Option<Vec<usize>>,
}

/// Default keep-list: the top features by |correlation with quality|, in file order.
pub fn default_features(raw: &RawDataset) -> Result<Vec<String>> {
    let ranked = rank_features(&correlation_matrix(raw)?, QUALITY_COLUMN)?;
    let top: Vec<&str> = ranked.iter().take(DEFAULT_FEATURE_COUNT).map(|r| r.name.as_str()).collect();
    Ok(raw
        .column_names()
        .iter()
        .filter(|n| top.contains(&n.as_str()))
        .cloned()
        .collect())
}

pub(crate) fn model_seed(cfg: &ExperimentConfig, i: usize) -> u64 {
    cfg.models[i].seed.unwrap_or_else(|| derive_seed(cfg.seed, &[MODEL_STREAM, i as u64]))
}

/// Fill in every default so the echoed config is self-describing.
pub fn resolve_config(cfg: &ExperimentConfig, raw: &RawDataset) -> Result<ExperimentConfig> {
    cfg.validate()?;
    let features = match &cfg.features {
        Some(f) => f.clone(),
        None => default_features(raw)?,
    };
    let tuned = cfg.effective_sampler().is_some();
    let models = cfg
        .models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let seed = Some(model_seed(cfg, i));
            if let Some(grid) = &m.grid {
                return Ok(ModelSpec {
                    grid: Some(grid.clone()),
                    seed,
                    ..ModelSpec::new(m.family)
                });
            }
            match &m.hyperparameters {
                Some(hp) => {
                    let (_, resolved) = model::resolve(m.family, hp, features.len())?;
                    Ok(ModelSpec {
                        hyperparameters: Some(resolved),
                        seed,
                        ..ModelSpec::new(m.family)
                    })
                }
                None if tuned => Ok(ModelSpec {
                    grid: Some(GridAxes(default_grid(m.family, 0).axes)),
                    seed,
                    ..ModelSpec::new(m.family)
                }),
                None => {
                    let (_, resolved) = model::resolve(m.family, &default_hyperparameters(m.family), features.len())?;
                    Ok(ModelSpec {
                        hyperparameters: Some(resolved),
                        seed,
                        ..ModelSpec::new(m.family)
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentConfig {
        sampler: cfg.effective_sampler(),
        features: Some(features),
        models,
        ..cfg.clone()
    })
}

/// Run the cleaning, splitting, scaling and (before-split) balancing stages.
pub fn prepare(cfg: &ExperimentConfig, raw: &RawDataset) -> Result<Prepared> {
    let config = resolve_config(cfg, raw).stage("configuration")?;
    let dedup = deduplicate(raw);
    let labeled = encode_labels(&dedup).stage("label encoding")?;
    let features = config.features.as_deref().unwrap_or_default();
    let ds = select_features(&labeled, features).stage("feature selection")?;
    let counts = ds.class_counts();
    let split_spec = SplitSpec {
        test_fraction: config.split.test_fraction,
        seed: derive_seed(config.seed, &[SPLIT_STREAM]),
    };
    let sampler = config
        .sampler
        .map(|s| s.with_seed(derive_seed(config.seed, &[SAMPLER_STREAM])));

    let mut standardizers = Vec::new();
    let (base, pre_sampled, synthetic_rows) = match (config.sampling_order, sampler) {
        (SamplingOrder::BeforeSplit, Some(s)) => {
            // Scale everything first so neighbour distances are
            // comparable across features, then balance, then split.
            let st = fit_standardizer(&ds).stage("standardization")?;
            let z = st.apply(&ds)?;
            standardizers.push(st);
            let balanced = resample(&z, &s).stage("resampling")?;
            let added = balanced.len().saturating_sub(z.len());
            (balanced, true, added)
        }
        _ => (ds, false, 0),
    };
    let idx = stratified_split_indices(base.labels(), &split_spec).stage("split")?;
    let (train, test) = (base.subset(&idx.train), base.subset(&idx.test));
    let st = fit_standardizer(&train).stage("standardization")?;
    let (train, test) = (st.apply(&train)?, st.apply(&test)?);
    standardizers.push(st);

    Ok(Prepared {
        rows_raw: raw.len(),
        rows_deduplicated: dedup.len(),
        class_counts: counts,
        train,
        test,
        standardizers,
        sampler: if pre_sampled { None } else { sampler },
        synthetic_rows,
        test_rows: (!pre_sampled).then_some(idx.test),
        config,
    })
}

fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<(ConfusionMatrix, Vec<ClassMetrics>, MacroSummary)> {
    let pred = model.predict_dataset(test)?;
    let cm = confusion_matrix(test.labels(), &pred)?;
    Ok((cm, all_class_metrics(&cm), macro_summary(&cm)?))
}

fn tune(p: &Prepared, i: usize, axes: &GridAxes) -> Result<TuneResult> {
    let spec = &p.config.models[i];
    let grid = GridSpec {
        model_family: spec.family,
        axes: axes.0.clone(),
        seed: spec.seed.unwrap_or_default(),
    };
    Ok(grid_search(&grid, &p.train, p.config.k_folds, p.sampler.as_ref())?)
}

/// Grid search every model on the prepared training data. Models with fixed
/// hyperparameters are searched over their family's default grid.
pub fn run_tuning(p: &Prepared) -> Result<Vec<TuneResult>> {
    (0..p.config.models.len())
        .map(|i| {
            let spec = &p.config.models[i];
            let axes = spec.grid.clone().unwrap_or_else(|| GridAxes(default_grid(spec.family, 0).axes));
            tune(p, i, &axes).stage("tuning")
        })
        .collect()
}

pub fn run_prepared(p: &Prepared) -> Result<Experiment> {
    let mut timings = Vec::new();
    let cfg = &p.config;
    let fit_set = match &p.sampler {
        Some(s) => resample(&p.train, s).stage("resampling")?,
        None => p.train.clone(),
    };

    let mut results = Vec::new();
    let mut models = Vec::new();
    for (i, spec) in cfg.models.iter().enumerate() {
        let clock = Instant::now();
        let seed = spec.seed.unwrap_or_default();
        let (hp, tuning) = match &spec.grid {
            Some(axes) => {
                let r = tune(p, i, axes).stage("tuning")?;
                (r.best_config.clone(), Some(r))
            }
            None => (spec.hyperparameters.clone().unwrap_or_default(), None),
        };
        let tc = TrainConfig {
            model_family: spec.family,
            hyperparameters: hp,
            seed,
        };
        let m = model::fit(&fit_set, &tc).stage("training")?;
        let (confusion, classes, macro_avg) = evaluate(&m, &p.test).stage("evaluation")?;
        timings.push((format!("{} #{i}", spec.family), clock.elapsed().as_secs_f64()));
        results.push(ModelResult {
            family: spec.family,
            seed,
            hyperparameters: m.hyperparameters.clone(),
            tuning,
            accuracy: macro_avg.accuracy,
            confusion,
            classes,
            macro_avg,
            warnings: m.warnings.clone(),
        });
        models.push(m);
    }

    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.accuracy > results[best].accuracy {
            best = i;
        }
    }
    let clock = Instant::now();
    let importance = permutation_importance(
        &models[best],
        &p.test,
        cfg.importance_repeats,
        derive_seed(cfg.seed, &[IMPORTANCE_STREAM]),
    )
    .stage("importance")?;
    timings.push(("importance".into(), clock.elapsed().as_secs_f64()));

    let report = Report {
        toolkit_version: TOOLKIT_VERSION,
        config: cfg.clone(),
        leakage: leakage_note(cfg),
        data: DataSummary {
            rows_raw: p.rows_raw,
            rows_deduplicated: p.rows_deduplicated,
            class_counts: p.class_counts,
            synthetic_rows: p.synthetic_rows + fit_set.len().saturating_sub(p.train.len()),
            train_rows: fit_set.len(),
            test_rows: p.test.len(),
            train_class_counts: class_counts(fit_set.labels()),
            test_class_counts: class_counts(p.test.labels()),
        },
        stats: Vec::new(),
        correlation: Vec::new(),
        best_model: BestModel {
            index: best,
            family: results[best].family,
            accuracy: results[best].accuracy,
        },
        importance: ImportanceSection {
            model_index: best,
            family: results[best].family,
            report: importance,
        },
        models: results,
    };
    Ok(Experiment {
        report,
        models,
        standardizers: p.standardizers.clone(),
        test_rows: p.test_rows.clone(),
        timings,
    })
}

fn leakage_note(cfg: &ExperimentConfig) -> &'static str {
    match (cfg.sampling_order, cfg.sampler.is_some()) {
        (SamplingOrder::BeforeSplit, _) => {
            "before-split: scaling and resampling saw every row before the split, so synthetic training rows \
             can be built from test neighbours and accuracy is optimistic"
        }
        (SamplingOrder::TrainOnly, true) => "train-only: test rows were never used for scaling, resampling, tuning or fitting",
        (SamplingOrder::TrainOnly, false) => "no resampling: test rows were never used for scaling, tuning or fitting",
    }
}

/// Run a full experiment on an already parsed table.
pub fn run_on(cfg: &ExperimentConfig, raw: &RawDataset) -> Result<Experiment> {
    let clock = Instant::now();
    let p = prepare(cfg, raw)?;
    let prep_time = clock.elapsed().as_secs_f64();
    let mut exp = run_prepared(&p)?;
    exp.timings.insert(0, ("prepare".into(), prep_time));
    exp.report.stats = summarize(&deduplicate(raw)).stage("statistics")?;
    exp.report.correlation =
        rank_features(&correlation_matrix(raw).stage("correlation")?, QUALITY_COLUMN).stage("correlation")?;
    Ok(exp)
}

/// Read `cfg.input` (relative to `base` when not absolute) and run.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<Experiment> {
    let raw = load_input(cfg, base)?;
    run_on(cfg, &raw)
}

pub fn load_input(cfg: &ExperimentConfig, base: &Path) -> Result<RawDataset> {
    let path = if cfg.input.is_absolute() {
        cfg.input.clone()
    } else {
        base.join(&cfg.input)
    };
    dataio::read_csv(&path).map_err(|e| Error::Stage {
        stage: "parse",
        source: Box::new(e),
    })
}
