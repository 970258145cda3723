use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, ensure, Context, Result};
use cliquesel::classical::{train_model_file, ModelFamily, ModelFile, DEFAULT_FOLDS, MODEL_FORMAT};
use cliquesel::dataset::corpus::{corpus_generate, save_corpus, CorpusSpec, GeneratorSpec};
use cliquesel::dataset::{
    build_dataset, group_outcomes, label_all, load_dataset, read_instances, save_dataset, write_instances,
    DatasetVariant, DropReason, LabelConfig, LabeledInstance, Manifest, DEFAULT_TIE_EPSILON, TRIVIAL_THRESHOLD,
};
use cliquesel::features::{extract_global, GlobalFeatures, FEATURE_NAMES};
use cliquesel::graph::{read_graph_file, Graph};
use cliquesel::metrics::{evaluate_variant, majority_baseline, plot_data, write_report_csv, Labels, VariantReport};
use cliquesel::nn::{
    gradcheck, sample_from, samples_from_dir, train, write_log, Ablation, GatModel, LossMode, ModelConfig,
    TrainConfig, CHECKPOINT_FORMAT,
};
use cliquesel::solvers::{read_outcomes, run_portfolio, write_outcomes, Budget, OutcomeRow, SolverId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{Cli, Command, Status};

const DEFAULT_BUDGET_S: f64 = 10.0;
const DEFAULT_RATIO: f64 = 0.8;
const GRAPH_EXTENSIONS: [&str; 5] = ["clq", "col", "txt", "edges", "el"];

/// Provenance written next to every output file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: String,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tie_epsilon_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    generator_specs: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, String>,
}

impl RunManifest {
    fn new(command: &str, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed,
            ..Self::default()
        }
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_sidecar(path: &Path, m: &RunManifest) -> Result<()> {
    write_json(&sidecar(path), m)
}

fn read_sidecar(path: &Path) -> Option<RunManifest> {
    let text = fs::read_to_string(sidecar(path)).ok()?;
    serde_json::from_str(&text).ok()
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: &'a RunConfig,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.cli.seed.or(self.cfg.seed).unwrap_or(0)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.cli
            .out
            .clone()
            .or_else(|| self.cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from(default))
    }

    fn inputs(&self, given: &[PathBuf]) -> Result<Vec<PathBuf>> {
        let roots: Vec<PathBuf> = if given.is_empty() {
            match &self.cfg.corpus_dir {
                Some(d) => vec![d.clone()],
                None => bail!("no inputs given and no corpus_dir configured"),
            }
        } else {
            given.to_vec()
        };
        let mut files = Vec::new();
        for r in roots {
            if r.is_dir() {
                let mut found: Vec<PathBuf> = fs::read_dir(&r)
                    .with_context(|| format!("listing {}", r.display()))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| {
                        p.is_file()
                            && p.extension()
                                .and_then(|e| e.to_str())
                                .is_some_and(|e| GRAPH_EXTENSIONS.contains(&e))
                    })
                    .collect();
                found.sort();
                files.extend(found);
            } else {
                files.push(r);
            }
        }
        if files.is_empty() {
            bail!("no inputs: no graph files found");
        }
        Ok(files)
    }
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parses every input, keyed by file stem. Unreadable files and repeated
/// stems are reported and skipped.
fn load_graphs(paths: &[PathBuf]) -> (Vec<(String, Graph)>, usize) {
    let parsed: Vec<(String, Result<Graph, String>)> = paths
        .par_iter()
        .map(|p| (instance_id(p), read_graph_file(p).map_err(|e| format!("{}: {e}", p.display()))))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut skipped = 0;
    for (id, g) in parsed {
        match g {
            Ok(_) if !seen.insert(id.clone()) => {
                log::warn!("skipping duplicate instance id {id}");
                skipped += 1;
            }
            Ok(g) => out.push((id, g)),
            Err(e) => {
                log::warn!("skipping {e}");
                skipped += 1;
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    (out, skipped)
}

pub fn run(cli: &Cli, cfg: &RunConfig) -> Result<Status> {
    let ctx = Ctx { cli, cfg };
    match &cli.command {
        Command::Features(a) => cmd_features(&ctx, &a.inputs),
        Command::Solve(a) => cmd_solve(&ctx, a),
        Command::Label(a) => cmd_label(&ctx, a),
        Command::Build(a) => cmd_build(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Predict(a) => cmd_predict(a),
        Command::Report(a) => cmd_report(&ctx, a),
        Command::GenCorpus(a) => cmd_gen_corpus(&ctx, a),
        Command::Gradcheck(a) => cmd_gradcheck(&ctx, a),
    }
}

fn status(skipped: usize) -> Status {
    if skipped == 0 {
        Status::Success
    } else {
        Status::Partial
    }
}

fn cmd_features(ctx: &Ctx, inputs: &[PathBuf]) -> Result<Status> {
    let paths = ctx.inputs(inputs)?;
    let (graphs, mut skipped) = load_graphs(&paths);
    let rows: Vec<(String, Result<GlobalFeatures<f64>, String>)> = graphs
        .par_iter()
        .map(|(id, g)| (id.clone(), extract_global(g).map_err(|e| e.to_string())))
        .collect();
    let out = ctx.out("features.csv");
    let mut table = Vec::new();
    for (id, f) in rows {
        match f {
            Ok(f) => table.push((id, f)),
            Err(e) => {
                log::warn!("skipping {id}: {e}");
                skipped += 1;
            }
        }
    }
    ensure!(!table.is_empty(), "no inputs: none of the {} graphs could be read", paths.len());
    ensure_parent(&out)?;
    let mut w = csv::Writer::from_path(&out)?;
    let mut header = vec!["instance_id"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for (id, f) in &table {
        let mut rec = vec![id.clone()];
        rec.extend(f.to_record());
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_sidecar(&out, &RunManifest::new("features", ctx.seed()))?;
    log::info!("wrote {} feature rows to {}", table.len(), out.display());
    Ok(status(skipped))
}

fn read_feature_table(path: &Path) -> Result<BTreeMap<String, GlobalFeatures<f64>>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let cells: Vec<&str> = rec.iter().collect();
        ensure!(cells.len() == 1 + FEATURE_NAMES.len(), "{}: malformed row {:?}", path.display(), cells);
        let f = GlobalFeatures::from_record(&cells[1..]).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        map.insert(cells[0].to_owned(), f);
    }
    Ok(map)
}

fn sort_rows(rows: &mut [OutcomeRow]) {
    rows.sort_by(|a, b| (&a.instance, a.outcome.solver).cmp(&(&b.instance, b.outcome.solver)));
}

fn save_outcomes(path: &Path, rows: &[OutcomeRow]) -> Result<()> {
    let tmp = path.with_extension("csv.partial");
    write_outcomes(fs::File::create(&tmp)?, rows)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_solve(ctx: &Ctx, a: &crate::SolveArgs) -> Result<Status> {
    let secs = a.time_limit.or(ctx.cfg.budget_s).unwrap_or(DEFAULT_BUDGET_S);
    let mut budget = Budget::seconds(secs)?;
    if let Some(n) = a.node_limit {
        budget = budget.with_node_limit(n);
    }
    let paths = ctx.inputs(&a.input.inputs)?;
    let out = ctx.out("outcomes.csv");
    ensure_parent(&out)?;
    let mut done: Vec<OutcomeRow> = Vec::new();
    let mut stale = false;
    if out.exists() {
        let existing = read_outcomes(fs::File::open(&out)?)?;
        let before = existing.len();
        let grouped = group_outcomes(&existing);
        for r in existing {
            if grouped[&r.instance].len() == SolverId::ALL.len() {
                done.push(r);
            }
        }
        stale = done.len() != before;
    }
    let complete: BTreeSet<String> = done.iter().map(|r| r.instance.clone()).collect();
    let pending: Vec<&PathBuf> = paths.iter().filter(|p| !complete.contains(&instance_id(p))).collect();
    log::info!("{} graphs already solved, {} to go", complete.len(), pending.len());
    let mut manifest = RunManifest::new("solve", ctx.seed());
    manifest.budget_s = Some(secs);
    if pending.is_empty() {
        if stale {
            sort_rows(&mut done);
            save_outcomes(&out, &done)?;
        }
        write_sidecar(&out, &manifest)?;
        return Ok(Status::Success);
    }
    let (graphs, mut skipped) = load_graphs(&pending.into_iter().cloned().collect::<Vec<_>>());
    let rows = Mutex::new(done);
    let failures: Vec<String> = graphs
        .par_iter()
        .filter_map(|(id, g)| match run_portfolio(g, &budget) {
            Ok(outs) => {
                let mut rows = rows.lock().expect("outcome table lock");
                rows.extend(outs.into_iter().map(|outcome| OutcomeRow {
                    instance: id.clone(),
                    outcome,
                }));
                sort_rows(&mut rows);
                if let Err(e) = save_outcomes(&out, &rows) {
                    return Some(format!("{id}: {e}"));
                }
                log::info!("solved {id}");
                None
            }
            Err(e) => Some(format!("{id}: {e}")),
        })
        .collect();
    for f in &failures {
        log::warn!("skipping {f}");
    }
    skipped += failures.len();
    let rows = rows.into_inner().expect("outcome table lock");
    save_outcomes(&out, &rows)?;
    write_sidecar(&out, &manifest)?;
    Ok(status(skipped))
}

fn label_config(ctx: &Ctx, tie_epsilon: Option<f64>, keep_trivial: bool) -> LabelConfig {
    LabelConfig {
        tie_epsilon: tie_epsilon.or(ctx.cfg.tie_epsilon).unwrap_or(DEFAULT_TIE_EPSILON),
        trivial_threshold: (!keep_trivial).then_some(TRIVIAL_THRESHOLD),
    }
}

/// Labels outcomes against features; returns the instances, the number of
/// instances lost to missing data, and the solve budget if recorded.
fn label_from(
    outcomes: &Path,
    features: &Path,
    cfg: &LabelConfig,
) -> Result<(Vec<LabeledInstance<f64>>, usize, Option<f64>)> {
    let rows = read_outcomes(fs::File::open(outcomes).with_context(|| format!("opening {}", outcomes.display()))?)?;
    let table = read_feature_table(features)?;
    let (instances, report) = label_all(&group_outcomes(&rows), &table, cfg);
    let mut missing = 0;
    for (id, why) in &report.dropped {
        match why {
            DropReason::MissingFeatures | DropReason::MissingOutcomes => {
                log::warn!("skipping {id}: {why:?}");
                missing += 1;
            }
            _ => log::info!("dropping {id}: {why:?}"),
        }
    }
    Ok((instances, missing, read_sidecar(outcomes).and_then(|m| m.budget_s)))
}

fn cmd_label(ctx: &Ctx, a: &crate::LabelArgs) -> Result<Status> {
    let lc = label_config(ctx, a.tie_epsilon, a.keep_trivial);
    let (instances, missing, budget) = label_from(&a.outcomes, &a.features, &lc)?;
    let out = ctx.out("labels.csv");
    ensure_parent(&out)?;
    write_instances(fs::File::create(&out)?, &instances)?;
    let mut m = RunManifest::new("label", ctx.seed());
    m.budget_s = budget;
    m.tie_epsilon_s = Some(lc.tie_epsilon);
    write_sidecar(&out, &m)?;
    log::info!("labeled {} instances", instances.len());
    Ok(status(missing))
}

fn corpus_manifest(dir: &Path) -> Option<RunManifest> {
    let text = fs::read_to_string(dir.join("manifest.json")).ok()?;
    serde_json::from_str(&text).ok()
}

fn cmd_build(ctx: &Ctx, a: &crate::BuildArgs) -> Result<Status> {
    let lc = label_config(ctx, a.source.tie_epsilon, a.source.keep_trivial);
    let (instances, missing, budget, tie) = match (&a.source.labels, &a.source.outcomes, &a.source.features) {
        (Some(l), _, _) => {
            let data = read_instances(fs::File::open(l).with_context(|| format!("opening {}", l.display()))?)?;
            let m = read_sidecar(l);
            let budget = m.as_ref().and_then(|m| m.budget_s);
            let tie = m.and_then(|m| m.tie_epsilon_s).unwrap_or(lc.tie_epsilon);
            (data, 0, budget, tie)
        }
        (None, Some(o), Some(f)) => {
            let (d, missing, budget) = label_from(o, f, &lc)?;
            (d, missing, budget, lc.tie_epsilon)
        }
        _ => bail!("build needs --labels or both --outcomes and --features"),
    };
    let variant: DatasetVariant = a
        .variant
        .as_deref()
        .or(ctx.cfg.variant.as_deref())
        .unwrap_or("m2")
        .parse()?;
    let graph_dir = a.graph_dir.clone().or_else(|| ctx.cfg.corpus_dir.clone());
    let specs = graph_dir
        .as_deref()
        .and_then(corpus_manifest)
        .map(|m| m.generator_specs)
        .unwrap_or_default();
    let manifest = Manifest {
        variant,
        seed: ctx.seed(),
        ratio: a.ratio.or(ctx.cfg.ratio).unwrap_or(DEFAULT_RATIO),
        budget_s: budget.or(ctx.cfg.budget_s).unwrap_or(DEFAULT_BUDGET_S),
        tie_epsilon_s: tie,
        generator_specs: specs,
        graph_dir,
    };
    let ds = build_dataset(&instances, manifest)?;
    let out = ctx.out("dataset");
    save_dataset(&out, &ds)?;
    log::info!(
        "{} dataset: {} train rows, {} test rows in {}",
        variant.short(),
        ds.train.len(),
        ds.test.len(),
        out.display()
    );
    Ok(status(missing))
}

fn parse_ablation(s: &str) -> Result<Ablation> {
    Ablation::ALL
        .into_iter()
        .find(|a| a.name().eq_ignore_ascii_case(s))
        .with_context(|| format!("unknown ablation {s:?}; expected mlp-only, gcn-only, gat-only or gat-mlp"))
}

fn graph_dir_for(given: &Option<PathBuf>, manifest: &Manifest) -> Result<PathBuf> {
    given
        .clone()
        .or_else(|| manifest.graph_dir.clone())
        .context("the neural selector needs graphs: pass --graph-dir or build with --graph-dir")
}

fn cmd_train(ctx: &Ctx, a: &crate::TrainArgs) -> Result<Status> {
    let ds = load_dataset::<f64>(&a.data).with_context(|| format!("loading dataset {}", a.data.display()))?;
    let variant = ds.manifest.variant;
    let family = a.model.as_deref().or(ctx.cfg.model.as_deref()).unwrap_or("rf");
    let out = ctx.out("model.json");
    ensure_parent(&out)?;
    let mut m = RunManifest::new("train", ctx.seed());
    m.budget_s = Some(ds.manifest.budget_s);
    m.extra.insert("model".into(), family.to_owned());
    m.extra.insert("variant".into(), variant.short().to_owned());
    let t = &ctx.cfg.train;
    if family == "gat" {
        let ablation = parse_ablation(&a.ablation)?;
        let dir = graph_dir_for(&a.graph_dir, &ds.manifest)?;
        let samples = samples_from_dir(&dir, &ds.train, variant)?;
        let base = ModelConfig {
            hidden: a.hidden.or(t.hidden).unwrap_or(ModelConfig::default().hidden),
            heads: t.heads.unwrap_or(ModelConfig::default().heads),
            dropout: t.dropout.unwrap_or(ModelConfig::default().dropout),
            loss: LossMode::for_variant(variant),
            ..ModelConfig::default()
        };
        let d = TrainConfig::default();
        let tc = TrainConfig {
            lr: a.lr.or(t.lr).unwrap_or(d.lr),
            weight_decay: t.weight_decay.unwrap_or(d.weight_decay),
            batch_size: a.batch_size.or(t.batch_size).unwrap_or(d.batch_size),
            epochs: a.epochs.or(t.epochs).unwrap_or(d.epochs),
            patience: a.patience.or(t.patience).unwrap_or(d.patience),
            val_fraction: t.val_fraction.unwrap_or(d.val_fraction),
            seed: ctx.seed(),
            model: ablation.apply(&base),
        };
        let (model, log) = train(&samples, &tc)?;
        fs::write(&out, model.to_json(Some(variant)))?;
        let log_path = out.with_extension("log.csv");
        write_log(fs::File::create(&log_path)?, &log)?;
        m.extra.insert("ablation".into(), ablation.name().to_owned());
        m.extra.insert("epochs_run".into(), log.len().to_string());
    } else {
        let fam: ModelFamily = family.parse()?;
        let folds = a.folds.or(t.folds).unwrap_or(DEFAULT_FOLDS);
        let (model, searches) = train_model_file(&ds.train, variant, fam, folds, ctx.seed())?;
        fs::write(&out, model.to_json() + "\n")?;
        write_json(&out.with_extension("cv.json"), &searches)?;
    }
    write_sidecar(&out, &m)?;
    log::info!("wrote {}", out.display());
    Ok(Status::Success)
}

enum LoadedModel {
    Classical(ModelFile<f64>),
    Neural(GatModel<f64>, Option<DatasetVariant>),
}

impl LoadedModel {
    fn name(&self) -> String {
        match self {
            Self::Classical(m) => m.family.name().to_owned(),
            Self::Neural(m, _) => Ablation::ALL
                .into_iter()
                .find(|a| a.apply(&m.config) == m.config)
                .map_or("gat", |a| a.name())
                .to_owned(),
        }
    }
}

fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    #[derive(Deserialize)]
    struct Probe {
        format: String,
    }
    let probe: Probe = serde_json::from_str(&text).with_context(|| format!("{} is not a model file", path.display()))?;
    match probe.format.as_str() {
        MODEL_FORMAT => Ok(LoadedModel::Classical(ModelFile::from_json(&text)?)),
        CHECKPOINT_FORMAT => {
            let (m, v) = GatModel::from_json(&text)?;
            Ok(LoadedModel::Neural(m, v))
        }
        other => bail!("unknown model format {other:?}"),
    }
}

/// Contents of a file written by `evaluate`.
#[derive(Debug, Serialize, Deserialize)]
struct Evaluation {
    report: VariantReport<f64>,
    /// Test accuracy of predicting the most frequent training class.
    majority_baseline: Option<f64>,
    test_rows: usize,
}

fn cmd_evaluate(ctx: &Ctx, a: &crate::EvaluateArgs) -> Result<Status> {
    let ds = load_dataset::<f64>(&a.data).with_context(|| format!("loading dataset {}", a.data.display()))?;
    let variant = ds.manifest.variant;
    ensure!(!ds.test.is_empty(), "dataset {} has an empty test split", a.data.display());
    let model = load_model(&a.model)?;
    let pred = match &model {
        LoadedModel::Classical(m) => {
            ensure!(m.variant == variant, "model was trained on {} but the dataset is {}", m.variant.short(), variant.short());
            m.predict_labels(&ds.test)
        }
        LoadedModel::Neural(m, v) => {
            if let Some(v) = v {
                ensure!(*v == variant, "model was trained on {} but the dataset is {}", v.short(), variant.short());
            }
            let dir = graph_dir_for(&a.graph_dir, &ds.manifest)?;
            m.predict_labels(&samples_from_dir(&dir, &ds.test, variant)?)
        }
    };
    let name = a.name.clone().unwrap_or_else(|| model.name());
    let truth = Labels::truth(&ds.test, variant);
    let report = evaluate_variant::<f64>(&name, variant, &truth, &pred)?;
    let baseline = match (&truth, variant) {
        (Labels::Single(t), DatasetVariant::Method1 | DatasetVariant::Method2) => {
            let train: Vec<usize> = ds.train.iter().map(|i| i.label().index()).collect();
            Some(majority_baseline::<f64>(&train, t, SolverId::ALL.len())?)
        }
        _ => None,
    };
    println!(
        "{name} {}: accuracy {:.4} macro_f1 {:.4} weighted_f1 {:.4}{}",
        variant.short(),
        report.accuracy,
        report.macro_f1,
        report.weighted_f1,
        baseline.map_or(String::new(), |b| format!(" (majority baseline {b:.4})"))
    );
    let out = ctx.out("report.json");
    ensure_parent(&out)?;
    write_json(
        &out,
        &Evaluation {
            report,
            majority_baseline: baseline,
            test_rows: ds.test.len(),
        },
    )?;
    let mut m = RunManifest::new("evaluate", ds.manifest.seed);
    m.budget_s = Some(ds.manifest.budget_s);
    write_sidecar(&out, &m)?;
    Ok(Status::Success)
}

fn cmd_predict(a: &crate::PredictArgs) -> Result<Status> {
    let g = read_graph_file(&a.graph).with_context(|| format!("reading {}", a.graph.display()))?;
    let f = extract_global::<f64>(&g)?;
    let set = match load_model(&a.model)? {
        LoadedModel::Classical(m) => m.predict_row(&f.to_vector()),
        LoadedModel::Neural(m, v) => {
            let inst = LabeledInstance {
                instance_id: instance_id(&a.graph),
                features: f,
                winners: vec![SolverId::ALL[0]],
            };
            let s = sample_from(&g, &inst, v.unwrap_or(DatasetVariant::Method2))?;
            match m.config.loss {
                LossMode::SoftmaxCe => {
                    let c = m.predict_class(&s.graph, &s.stats);
                    (0..SolverId::ALL.len()).map(|i| i == c).collect()
                }
                LossMode::SigmoidBce => m.predict_set(&s.graph, &s.stats),
            }
        }
    };
    let names: Vec<&str> = SolverId::ALL
        .iter()
        .zip(&set)
        .filter(|(_, &on)| on)
        .map(|(s, _)| s.name())
        .collect();
    println!("{}", names.join(";"));
    Ok(Status::Success)
}

fn cmd_report(ctx: &Ctx, a: &crate::ReportArgs) -> Result<Status> {
    let mut reports = Vec::new();
    for p in &a.reports {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let e: Evaluation = serde_json::from_str(&text).with_context(|| format!("{} is not an evaluation report", p.display()))?;
        reports.push(e.report);
    }
    let out = ctx.out("comparison.csv");
    ensure_parent(&out)?;
    write_report_csv(fs::File::create(&out)?, &reports)?;
    write_json(&out.with_extension("plot.json"), &plot_data(&reports))?;
    println!("{:<12} {:<8} {:>9} {:>9} {:>11}", "model", "variant", "accuracy", "macro_f1", "weighted_f1");
    for r in &reports {
        println!(
            "{:<12} {:<8} {:>9.4} {:>9.4} {:>11.4}",
            r.model,
            r.variant.short(),
            r.accuracy,
            r.macro_f1,
            r.weighted_f1
        );
    }
    write_sidecar(&out, &RunManifest::new("report", ctx.seed()))?;
    Ok(Status::Success)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    generators: Vec<GeneratorSpec>,
}

fn cmd_gen_corpus(ctx: &Ctx, a: &crate::GenCorpusArgs) -> Result<Status> {
    let spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let f: SpecFile = toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            CorpusSpec {
                generators: f.generators,
                seed: ctx.seed(),
            }
        }
        None => CorpusSpec::default_with_seed(ctx.seed()),
    };
    let graphs = corpus_generate(&spec)?;
    let out = ctx.out("corpus");
    save_corpus(&out, &graphs)?;
    let mut m = RunManifest::new("gen-corpus", spec.seed);
    m.generator_specs = spec.generators.clone();
    write_json(&out.join("manifest.json"), &m)?;
    log::info!("wrote {} graphs to {}", graphs.len(), out.display());
    Ok(Status::Success)
}

const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn cmd_gradcheck(ctx: &Ctx, a: &crate::GradcheckArgs) -> Result<Status> {
    let base = ModelConfig {
        hidden: a.hidden.unwrap_or(ModelConfig::default().hidden),
        heads: a.heads.unwrap_or(ModelConfig::default().heads),
        ..ModelConfig::default()
    };
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    for loss in [LossMode::SoftmaxCe, LossMode::SigmoidBce] {
        let cfg = ModelConfig { loss, ..base };
        for s in 0..a.seeds {
            let r = gradcheck(ctx.seed() + s, &cfg)?;
            worst = worst.max(r.max_rel_error());
            println!("{loss:?} seed {}: max relative error {:.3e}", r.seed, r.max_rel_error());
            reports.push(r);
        }
    }
    if let Some(out) = ctx.cli.out.clone().or_else(|| ctx.cfg.out.clone()) {
        ensure_parent(&out)?;
        write_json(&out, &reports)?;
    }
    ensure!(
        worst < GRADCHECK_TOLERANCE,
        "gradient check failed: max relative error {worst:.3e} >= {GRADCHECK_TOLERANCE:e}"
    );
    println!("gradient check passed: max relative error {worst:.3e}");
    Ok(Status::Success)
}
