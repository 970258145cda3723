//! Portfolio outcomes to labeled instances, the three multi-label handling
//! methods, seeded splits, and dataset persistence.

pub mod corpus;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{GlobalFeatures, FEATURE_COUNT, FEATURE_NAMES};
use crate::matrix::DenseMatrix;
use crate::solvers::{SolveOutcome, SolveStatus, SolverId};
use crate::Scalar;

use corpus::GeneratorSpec;

pub const DEFAULT_TIE_EPSILON: f64 = 0.05;
/// Instances where every solver finishes faster than this are dropped.
pub const TRIVIAL_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("instance {0}: no solver finished exactly")]
    AllUnsolved(String),
    #[error("no instances left after filtering")]
    EmptyResult,
    #[error("need at least {needed} instances, got {got}")]
    TooFewInstances { needed: usize, got: usize },
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetVariant {
    Method1,
    Method2,
    Method3,
}

impl DatasetVariant {
    pub const ALL: [DatasetVariant; 3] = [Self::Method1, Self::Method2, Self::Method3];

    pub fn short(self) -> &'static str {
        match self {
            Self::Method1 => "m1",
            Self::Method2 => "m2",
            Self::Method3 => "m3",
        }
    }
}

impl std::str::FromStr for DatasetVariant {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "method1" => Ok(Self::Method1),
            "m2" | "method2" => Ok(Self::Method2),
            "m3" | "method3" => Ok(Self::Method3),
            _ => Err(DatasetError::SchemaMismatch(format!("unknown variant {s:?}"))),
        }
    }
}

/// A graph with its features and the set of solvers that won on it. The
/// graph itself is located through the dataset's graph directory by
/// `instance_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance<T> {
    pub instance_id: String,
    pub features: GlobalFeatures<T>,
    /// Non-empty, ascending.
    pub winners: Vec<SolverId>,
}

impl<T: Scalar> LabeledInstance<T> {
    /// The label of a single-label row.
    pub fn label(&self) -> SolverId {
        self.winners[0]
    }

    pub fn is_multi_label(&self) -> bool {
        self.winners.len() > 1
    }
}

/// Winners among the four outcomes: the largest clique wins, an exact
/// solver beats a timed-out one of the same size, and all solvers within
/// `tie_epsilon` seconds of the fastest remaining one share the win.
///
/// Timed-out incumbents count only when some solver finished exactly;
/// otherwise the instance is unsolved.
pub fn label_instance(outcomes: &[SolveOutcome], tie_epsilon: f64) -> Result<Vec<SolverId>, DatasetError> {
    if !outcomes.iter().any(|o| o.status == SolveStatus::Exact) {
        return Err(DatasetError::AllUnsolved(String::new()));
    }
    let best = outcomes.iter().map(|o| o.size).max().unwrap_or(0);
    let top: Vec<&SolveOutcome> = outcomes.iter().filter(|o| o.size == best).collect();
    let exact: Vec<&SolveOutcome> = top.iter().copied().filter(|o| o.status == SolveStatus::Exact).collect();
    let pool = if exact.is_empty() { top } else { exact };
    let fastest = pool.iter().map(|o| o.wall_time).fold(f64::INFINITY, f64::min);
    let mut winners: Vec<SolverId> = pool
        .iter()
        .filter(|o| o.wall_time <= fastest + tie_epsilon)
        .map(|o| o.solver)
        .collect();
    winners.sort();
    winners.dedup();
    Ok(winners)
}

/// True when every solver finished below `threshold` seconds.
pub fn is_trivial(outcomes: &[SolveOutcome], threshold: f64) -> bool {
    outcomes.iter().all(|o| o.wall_time < threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub tie_epsilon: f64,
    /// `None` keeps trivial instances.
    pub trivial_threshold: Option<f64>,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            tie_epsilon: DEFAULT_TIE_EPSILON,
            trivial_threshold: Some(TRIVIAL_THRESHOLD),
        }
    }
}

/// Why an instance did not become a labeled instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Unsolved,
    Trivial,
    MissingFeatures,
    MissingOutcomes,
}

#[derive(Debug, Clone, Default)]
pub struct LabelReport {
    pub dropped: Vec<(String, DropReason)>,
}

/// Labels every instance that has both features and four outcomes.
/// Output follows `instance_id` order.
pub fn label_all<T: Scalar>(
    outcomes: &BTreeMap<String, Vec<SolveOutcome>>,
    features: &BTreeMap<String, GlobalFeatures<T>>,
    cfg: &LabelConfig,
) -> (Vec<LabeledInstance<T>>, LabelReport) {
    let mut out = Vec::new();
    let mut report = LabelReport::default();
    for (id, outs) in outcomes {
        let Some(f) = features.get(id) else {
            report.dropped.push((id.clone(), DropReason::MissingFeatures));
            continue;
        };
        if outs.len() != SolverId::ALL.len() {
            report.dropped.push((id.clone(), DropReason::MissingOutcomes));
            continue;
        }
        if cfg.trivial_threshold.is_some_and(|t| is_trivial(outs, t)) {
            report.dropped.push((id.clone(), DropReason::Trivial));
            continue;
        }
        match label_instance(outs, cfg.tie_epsilon) {
            Ok(winners) => out.push(LabeledInstance {
                instance_id: id.clone(),
                features: *f,
                winners,
            }),
            Err(_) => report.dropped.push((id.clone(), DropReason::Unsolved)),
        }
    }
    for id in features.keys().filter(|id| !outcomes.contains_key(*id)) {
        report.dropped.push((id.clone(), DropReason::MissingOutcomes));
    }
    (out, report)
}

/// Groups outcome rows by instance, keeping each instance's outcomes in
/// solver order.
pub fn group_outcomes(rows: &[crate::solvers::OutcomeRow]) -> BTreeMap<String, Vec<SolveOutcome>> {
    let mut map: BTreeMap<String, Vec<SolveOutcome>> = BTreeMap::new();
    for r in rows {
        map.entry(r.instance.clone()).or_default().push(r.outcome.clone());
    }
    for outs in map.values_mut() {
        outs.sort_by_key(|o| o.solver);
        outs.dedup_by_key(|o| o.solver);
    }
    map
}

/// One row per winner.
pub fn apply_method1<T: Scalar>(data: &[LabeledInstance<T>]) -> Vec<LabeledInstance<T>> {
    data.iter()
        .flat_map(|inst| {
            inst.winners.iter().map(move |&w| LabeledInstance {
                instance_id: inst.instance_id.clone(),
                features: inst.features,
                winners: vec![w],
            })
        })
        .collect()
}

/// Single-label instances only.
pub fn apply_method2<T: Scalar>(data: &[LabeledInstance<T>]) -> Result<Vec<LabeledInstance<T>>, DatasetError> {
    if data.is_empty() {
        return Ok(Vec::new());
    }
    let kept: Vec<_> = data.iter().filter(|i| !i.is_multi_label()).cloned().collect();
    if kept.is_empty() {
        return Err(DatasetError::EmptyResult);
    }
    Ok(kept)
}

/// One solver's yes/no dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset<T> {
    pub solver: SolverId,
    pub instance_ids: Vec<String>,
    pub features: DenseMatrix<T>,
    pub targets: Vec<bool>,
}

/// Four binary datasets over the same rows, target set iff the solver won.
pub fn apply_method3<T: Scalar>(data: &[LabeledInstance<T>]) -> [BinaryDataset<T>; 4] {
    let features = feature_matrix(data);
    let ids: Vec<String> = data.iter().map(|i| i.instance_id.clone()).collect();
    SolverId::ALL.map(|s| BinaryDataset {
        solver: s,
        instance_ids: ids.clone(),
        features: features.clone(),
        targets: data.iter().map(|i| i.winners.contains(&s)).collect(),
    })
}

/// Rows of the twelve global features.
pub fn feature_matrix<T: Scalar>(data: &[LabeledInstance<T>]) -> DenseMatrix<T> {
    let mut m = DenseMatrix::zeros(data.len(), FEATURE_COUNT);
    for (r, inst) in data.iter().enumerate() {
        m.row_mut(r).copy_from_slice(&inst.features.to_vector());
    }
    m
}

/// Class indices of single-label rows.
pub fn class_labels<T: Scalar>(data: &[LabeledInstance<T>]) -> Vec<usize> {
    data.iter().map(|i| i.label().index()).collect()
}

/// Winner sets as 4-bit membership rows.
pub fn label_sets<T: Scalar>(data: &[LabeledInstance<T>]) -> Vec<[bool; 4]> {
    data.iter()
        .map(|i| SolverId::ALL.map(|s| i.winners.contains(&s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<I> {
    pub train: Vec<I>,
    pub test: Vec<I>,
    pub seed: u64,
}

/// Seeded shuffle followed by a prefix cut of `floor(ratio * n)` training
/// items. Both sides must be non-empty.
pub fn train_test_split<I: Clone>(data: &[I], ratio: f64, seed: u64) -> Result<Split<I>, DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    if data.len() < 2 {
        return Err(DatasetError::TooFewInstances { needed: 2, got: data.len() });
    }
    let n_train = (ratio * data.len() as f64).floor() as usize;
    if n_train == 0 || n_train == data.len() {
        return Err(DatasetError::TooFewInstances {
            needed: if n_train == 0 { (1.0 / ratio).ceil() as usize } else { data.len() + 1 },
            got: data.len(),
        });
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |ix: &[usize]| ix.iter().map(|&i| data[i].clone()).collect();
    Ok(Split {
        train: pick(&idx[..n_train]),
        test: pick(&idx[n_train..]),
        seed,
    })
}

/// Provenance stored next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub variant: DatasetVariant,
    pub seed: u64,
    pub ratio: f64,
    pub budget_s: f64,
    pub tie_epsilon_s: f64,
    pub generator_specs: Vec<GeneratorSpec>,
    /// Directory holding `<instance_id>.clq` files, if the graphs were kept.
    #[serde(default)]
    pub graph_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub manifest: Manifest,
    pub train: Vec<LabeledInstance<T>>,
    pub test: Vec<LabeledInstance<T>>,
}

/// Splits the labeled instances and then applies the variant to each side,
/// so duplicated Method1 rows never straddle the split.
pub fn build_dataset<T: Scalar>(
    instances: &[LabeledInstance<T>],
    manifest: Manifest,
) -> Result<Dataset<T>, DatasetError> {
    let base: Vec<LabeledInstance<T>> = match manifest.variant {
        DatasetVariant::Method2 => apply_method2(instances)?,
        _ => instances.to_vec(),
    };
    let split = train_test_split(&base, manifest.ratio, manifest.seed)?;
    let (train, test) = match manifest.variant {
        DatasetVariant::Method1 => (apply_method1(&split.train), apply_method1(&split.test)),
        _ => (split.train, split.test),
    };
    Ok(Dataset { manifest, train, test })
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";

fn header() -> Vec<&'static str> {
    let mut h = vec!["instance_id"];
    h.extend(FEATURE_NAMES);
    h.push("winners");
    h
}

pub fn write_instances<T: Scalar, W: io::Write>(w: W, data: &[LabeledInstance<T>]) -> Result<(), DatasetError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header())?;
    for inst in data {
        let mut rec = vec![inst.instance_id.clone()];
        rec.extend(inst.features.to_record());
        rec.push(inst.winners.iter().map(|s| s.name()).collect::<Vec<_>>().join(";"));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_instances<T: Scalar, R: io::Read>(r: R) -> Result<Vec<LabeledInstance<T>>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(r);
    let expected = header();
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if got != expected {
        return Err(DatasetError::SchemaMismatch(format!("header {got:?}, expected {expected:?}")));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let cells: Vec<&str> = rec.iter().collect();
        let features = GlobalFeatures::from_record(&cells[1..1 + FEATURE_COUNT]).map_err(DatasetError::SchemaMismatch)?;
        let mut winners = cells[1 + FEATURE_COUNT]
            .split(';')
            .map(|s| s.parse::<SolverId>().map_err(|e| DatasetError::SchemaMismatch(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        winners.sort();
        winners.dedup();
        out.push(LabeledInstance {
            instance_id: cells[0].to_owned(),
            features,
            winners,
        });
    }
    Ok(out)
}

/// Writes the manifest, both CSV files, and for Method3 one binary target
/// table per solver.
pub fn save_dataset<T: Scalar>(dir: &Path, ds: &Dataset<T>) -> Result<(), DatasetError> {
    fs::create_dir_all(dir)?;
    let manifest = serde_json::to_string_pretty(&ds.manifest).map_err(|e| io::Error::other(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
    write_instances(fs::File::create(dir.join(TRAIN_FILE))?, &ds.train)?;
    write_instances(fs::File::create(dir.join(TEST_FILE))?, &ds.test)?;
    if ds.manifest.variant == DatasetVariant::Method3 {
        for s in SolverId::ALL {
            let mut out = csv::Writer::from_path(dir.join(format!("binary_{}.csv", s.name())))?;
            out.write_record(["instance_id", "split", "target"])?;
            for (split, rows) in [("train", &ds.train), ("test", &ds.test)] {
                for inst in rows.iter() {
                    let t = if inst.winners.contains(&s) { "1" } else { "0" };
                    out.write_record([inst.instance_id.as_str(), split, t])?;
                }
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, DatasetError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::SchemaMismatch(format!("manifest: {e}")))
}

pub fn load_dataset<T: Scalar>(dir: &Path) -> Result<Dataset<T>, DatasetError> {
    let manifest = load_manifest(dir)?;
    let train = read_instances(fs::File::open(dir.join(TRAIN_FILE))?)?;
    let test = read_instances(fs::File::open(dir.join(TEST_FILE))?)?;
    if manifest.variant != DatasetVariant::Method3 {
        if let Some(bad) = train.iter().chain(&test).find(|i| i.is_multi_label()) {
            return Err(DatasetError::SchemaMismatch(format!(
                "{} has several winners in a single-label dataset",
                bad.instance_id
            )));
        }
    }
    Ok(Dataset { manifest, train, test })
}
