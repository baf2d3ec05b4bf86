//! End-to-end runs: triples → classes → composite vectors → sampled k-NN
//! similarity → Laplacian spectrum → CSG, plus (M, k) sweeps and the
//! CSG-versus-MRR correlation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::embedding::{self, CompositeVector, EmbeddingStore};
use crate::error::{Error, Result};
use crate::kg::{self, ClassIndex, DatasetStats, TripleSet};
use crate::sampling::{self, SimilarityMatrix};
use crate::spectral::{self, Spectrum};

pub const DEFAULT_M: usize = 120;
pub const DEFAULT_K: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSource {
    File { path: PathBuf },
    Hash { dim: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Label used to join with metrics files; derived from the paths if unset.
    pub name: Option<String>,
    pub triples: Vec<PathBuf>,
    pub embeddings: EmbeddingSource,
    pub m: usize,
    pub k: usize,
    pub k_c: Option<usize>,
    pub seed: u64,
    pub normalize_embeddings: bool,
    pub include_self: bool,
    pub symmetrize: bool,
    pub min_pairs: usize,
    pub max_classes: Option<usize>,
}

impl RunConfig {
    pub fn new(triples: Vec<PathBuf>, embeddings: EmbeddingSource) -> Self {
        RunConfig {
            name: None,
            triples,
            embeddings,
            m: DEFAULT_M,
            k: DEFAULT_K,
            k_c: None,
            seed: 0,
            normalize_embeddings: false,
            include_self: false,
            symmetrize: true,
            min_pairs: 1,
            max_classes: None,
        }
    }

    pub fn dataset_name(&self) -> String {
        self.name
            .clone()
            .or_else(|| self.triples.first().map(|p| name_from_path(p)))
            .unwrap_or_else(|| "dataset".to_string())
    }

    pub fn params(&self) -> CsgParams {
        CsgParams {
            m: self.m,
            k: self.k,
            k_c: self.k_c,
            seed: self.seed,
            include_self: self.include_self,
            symmetrize: self.symmetrize,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::Config("M and k must be at least 1".into()));
        }
        if let EmbeddingSource::Hash { dim: 0, .. } = self.embeddings {
            return Err(Error::Config("hash embedding dimension must be at least 1".into()));
        }
        Ok(())
    }
}

/// `data/umls/train.txt` → `umls`; `nations.tsv` → `nations`.
fn name_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let is_split = matches!(stem.as_str(), "train" | "valid" | "test" | "dev");
    match path.parent().and_then(Path::file_name) {
        Some(parent) if is_split => parent.to_string_lossy().into_owned(),
        _ => stem,
    }
}

/// Parameters that vary per computation on an already prepared dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsgParams {
    pub m: usize,
    pub k: usize,
    pub k_c: Option<usize>,
    pub seed: u64,
    pub include_self: bool,
    pub symmetrize: bool,
}

impl CsgParams {
    /// Sampling stream for this (seed, M, k) cell.
    pub fn sampling_seed(&self) -> u64 {
        sampling::derive_seed(&[self.seed, self.m as u64, self.k as u64])
    }
}

/// Parsed, grouped and embedded dataset, shared across sweep cells.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub stats: DatasetStats,
    pub classes: ClassIndex,
    pub class_vectors: Vec<Vec<CompositeVector>>,
}

impl PreparedDataset {
    pub fn from_triples(
        name: &str,
        ts: &TripleSet,
        store: &EmbeddingStore,
        min_pairs: usize,
        max_classes: Option<usize>,
        normalize: bool,
    ) -> Result<Self> {
        let stats = kg::dataset_stats(ts);
        let grouped = kg::group_by_tail(ts);
        let classes = kg::filter_classes(&grouped, min_pairs, max_classes).map_err(|e| e.at("filter"))?;
        let mut class_vectors =
            embedding::materialize_class_vectors(store, &classes).map_err(|e| e.at("embed"))?;
        if normalize {
            class_vectors.iter_mut().flatten().for_each(CompositeVector::normalize);
        }
        Ok(PreparedDataset {
            name: name.to_string(),
            stats,
            classes,
            class_vectors,
        })
    }

    pub fn tails(&self) -> Vec<&str> {
        self.classes.tails()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.class_vectors.iter().map(Vec::len).collect()
    }
}

pub fn prepare(config: &RunConfig) -> Result<PreparedDataset> {
    config.validate()?;
    let ts = kg::read_triple_files(&config.triples).map_err(|e| e.at("parse"))?;
    let store = match &config.embeddings {
        EmbeddingSource::File { path } => {
            let file = File::open(path).map_err(|e| Error::File {
                path: path.clone(),
                source: Box::new(e.into()),
            });
            let file = file.map_err(|e| e.at("embed"))?;
            embedding::load_embeddings(BufReader::new(file)).map_err(|e| {
                Error::File {
                    path: path.clone(),
                    source: Box::new(e),
                }
                .at("embed")
            })?
        }
        EmbeddingSource::Hash { dim, seed } => {
            embedding::hash_embed(embedding::vocabulary(&ts), *dim, *seed)
        }
    };
    PreparedDataset::from_triples(
        &config.dataset_name(),
        &ts,
        &store,
        config.min_pairs,
        config.max_classes,
        config.normalize_embeddings,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParameters {
    pub triples: Vec<PathBuf>,
    pub embeddings: EmbeddingSource,
    pub m: usize,
    pub k: usize,
    pub k_c: Option<usize>,
    pub seed: u64,
    pub sampling_seed: u64,
    pub normalize_embeddings: bool,
    pub include_self: bool,
    pub symmetrize: bool,
    pub min_pairs: usize,
    pub max_classes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsgReport {
    pub dataset: String,
    pub stats: DatasetStats,
    /// Classes entering the similarity matrix (after filtering).
    pub classes: usize,
    pub pool_size: usize,
    pub csg_full: f64,
    pub csg_at: Vec<(usize, f64)>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Largest |Im λ|; only set on the non-symmetrized path.
    pub max_imag: Option<f64>,
    pub parameters: RunParameters,
}

/// A report together with the intermediate matrices, for dumping.
#[derive(Debug, Clone)]
pub struct CsgOutcome {
    pub report: CsgReport,
    pub similarity: SimilarityMatrix,
    pub spectrum: Spectrum,
}

/// Runs sampling through CSG on a prepared dataset. `config` only supplies
/// the provenance fields echoed into the report.
pub fn compute_csg(
    data: &PreparedDataset,
    params: &CsgParams,
    config: &RunConfig,
) -> Result<CsgOutcome> {
    let sizes = data.class_sizes();
    if sizes.len() < 2 {
        return Err(Error::TooFewClasses(sizes.len()).at("sample"));
    }
    if params.m == 0 || params.k == 0 {
        return Err(Error::Config("M and k must be at least 1".into()));
    }
    let pool_size = sampling::realized_pool_size(&sizes, params.m);
    let limit = if params.include_self { pool_size } else { pool_size - 1 };
    if params.k > limit {
        return Err(Error::KExceedsPool {
            k: params.k,
            pool_size,
        });
    }

    let seed = params.sampling_seed();
    let pool = sampling::sample_pool(&data.class_vectors, params.m, seed).map_err(|e| e.at("sample"))?;
    let neighbors =
        sampling::knn_search(&pool, params.k, params.include_self).map_err(|e| e.at("knn"))?;
    let s = sampling::build_similarity(&pool, &neighbors, params.k).map_err(|e| e.at("similarity"))?;

    let label = |e: Error| match e {
        Error::IsolatedClass { index, .. } => Error::IsolatedClass {
            index,
            class: data.classes.classes().get(index).map(|c| c.tail.clone()),
        },
        other => other,
    };
    let (spectrum, max_imag) = if params.symmetrize {
        let w = spectral::symmetrize(&s);
        let l = spectral::normalized_laplacian(&w).map_err(|e| label(e).at("laplacian"))?;
        (spectral::eigenvalues_symmetric(&l).map_err(|e| e.at("eigen"))?, None)
    } else {
        let l = spectral::laplacian_as_written(&s).map_err(|e| label(e).at("laplacian"))?;
        let g = spectral::eigenvalues_general(&l).map_err(|e| e.at("eigen"))?;
        (g.real, Some(g.max_imag))
    };
    let value = spectral::csg(&spectrum, params.k_c).map_err(|e| e.at("csg"))?;
    let eigs = spectrum.eigenvalues();

    let report = CsgReport {
        dataset: data.name.clone(),
        stats: data.stats,
        classes: sizes.len(),
        pool_size,
        csg_full: value.full,
        csg_at: value.at,
        lambda_min: eigs[0],
        lambda_max: eigs[eigs.len() - 1],
        max_imag,
        parameters: RunParameters {
            triples: config.triples.clone(),
            embeddings: config.embeddings.clone(),
            m: params.m,
            k: params.k,
            k_c: params.k_c,
            seed: params.seed,
            sampling_seed: seed,
            normalize_embeddings: config.normalize_embeddings,
            include_self: params.include_self,
            symmetrize: params.symmetrize,
            min_pairs: config.min_pairs,
            max_classes: config.max_classes,
        },
    };
    Ok(CsgOutcome {
        report,
        similarity: s,
        spectrum,
    })
}

pub fn run_csg(config: &RunConfig) -> Result<CsgReport> {
    run_csg_detailed(config).map(|o| o.report)
}

pub fn run_csg_detailed(config: &RunConfig) -> Result<CsgOutcome> {
    let data = prepare(config)?;
    compute_csg(&data, &config.params(), config)
}

pub const STATUS_OK: &str = "ok";
pub const STATUS_K_EXCEEDS_POOL: &str = "k exceeds pool";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub m: usize,
    pub k: usize,
    pub csg: Option<f64>,
    pub pool_size: usize,
    pub wall_ms: f64,
    pub status: String,
}

impl SweepCell {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub dataset: String,
    pub stats: DatasetStats,
    pub classes: usize,
    pub m_values: Vec<usize>,
    pub k_values: Vec<usize>,
    /// Row-major over (m, k).
    pub cells: Vec<SweepCell>,
    pub config: RunConfig,
}

impl SweepGrid {
    pub fn cell(&self, m: usize, k: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.m == m && c.k == k)
    }
}

fn sorted_grid_axis(values: &[usize], axis: &str) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::Config(format!("{axis} list is empty")));
    }
    if values.contains(&0) {
        return Err(Error::Config(format!("{axis} values must be at least 1")));
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

pub fn run_sweep(config: &RunConfig, m_values: &[usize], k_values: &[usize]) -> Result<SweepGrid> {
    let data = prepare(config)?;
    sweep_prepared(&data, config, m_values, k_values)
}

/// Sweep over an already prepared dataset. Infeasible cells are recorded
/// with a status instead of failing the grid.
pub fn sweep_prepared(
    data: &PreparedDataset,
    config: &RunConfig,
    m_values: &[usize],
    k_values: &[usize],
) -> Result<SweepGrid> {
    let m_values = sorted_grid_axis(m_values, "M")?;
    let k_values = sorted_grid_axis(k_values, "k")?;
    let sizes = data.class_sizes();
    let grid: Vec<(usize, usize)> = m_values
        .iter()
        .flat_map(|&m| k_values.iter().map(move |&k| (m, k)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(m, k)| {
            let params = CsgParams { m, k, ..config.params() };
            let started = Instant::now();
            let result = compute_csg(data, &params, config);
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let pool_size = sampling::realized_pool_size(&sizes, m);
            let (csg, status) = match result {
                Ok(o) => (Some(o.report.csg_full), STATUS_OK.to_string()),
                Err(e) => match e.root() {
                    Error::KExceedsPool { .. } => (None, STATUS_K_EXCEEDS_POOL.to_string()),
                    _ => (None, e.to_string()),
                },
            };
            SweepCell {
                m,
                k,
                csg,
                pool_size,
                wall_ms,
                status,
            }
        })
        .collect();
    Ok(SweepGrid {
        dataset: data.name.clone(),
        stats: data.stats,
        classes: sizes.len(),
        m_values,
        k_values,
        cells,
        config: config.clone(),
    })
}

/// A correlation coefficient, or an explicit marker when a variance is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Defined(f64),
    Undefined,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Defined(r) => Some(r),
            Correlation::Undefined => None,
        }
    }
}

impl std::fmt::Display for Correlation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Correlation::Defined(r) => write!(f, "{r}"),
            Correlation::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Correlation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Correlation::Defined(r) => serializer.serialize_f64(*r),
            Correlation::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

/// Pearson product-moment coefficient.
pub fn pearson(points: &[(f64, f64)]) -> Result<Correlation> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let constant = |sel: fn(&(f64, f64)) -> f64| points.iter().all(|p| sel(p) == sel(&points[0]));
    if constant(|p| p.0) || constant(|p| p.1) {
        return Ok(Correlation::Undefined);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = (sxx * syy).sqrt();
    if !(denom > 0.0) {
        return Ok(Correlation::Undefined);
    }
    Ok(Correlation::Defined((sxy / denom).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationPoint {
    pub dataset: String,
    pub model: String,
    pub csg: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCorrelation {
    pub label: String,
    pub n: usize,
    pub r: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub points: Vec<CorrelationPoint>,
    /// Per model, across datasets.
    pub per_model: Vec<GroupCorrelation>,
    /// Per dataset, across models.
    pub per_dataset: Vec<GroupCorrelation>,
    /// Mean of the defined per-model coefficients.
    pub mean_r: Correlation,
    /// All points in one sample.
    pub pooled_r: Correlation,
}

#[derive(Debug, Deserialize)]
struct MetricsRow {
    dataset: String,
    model: String,
    mrr: f64,
}

fn group_r(groups: BTreeMap<String, Vec<(f64, f64)>>) -> Vec<GroupCorrelation> {
    groups
        .into_iter()
        .map(|(label, pts)| GroupCorrelation {
            n: pts.len(),
            r: pearson(&pts).unwrap_or(Correlation::Undefined),
            label,
        })
        .collect()
}

/// Joins a `dataset,model,mrr` CSV against per-dataset CSG reports.
pub fn correlate_with_metrics<R: Read>(
    csg_reports: &[CsgReport],
    metrics_file: R,
) -> Result<CorrelationReport> {
    let mut by_name: HashMap<&str, f64> = HashMap::new();
    for r in csg_reports {
        if by_name.insert(r.dataset.as_str(), r.csg_full).is_some() {
            return Err(Error::Config(format!("two reports for dataset `{}`", r.dataset)));
        }
    }
    let mut known: Vec<String> = by_name.keys().map(|s| s.to_string()).collect();
    known.sort();

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(metrics_file);
    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for (idx, rec) in reader.deserialize::<MetricsRow>().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Metrics {
            row,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&rec.mrr) {
            return Err(Error::Metrics {
                row,
                message: format!("mrr {} outside [0, 1]", rec.mrr),
            });
        }
        let Some(&csg) = by_name.get(rec.dataset.as_str()) else {
            return Err(Error::UnknownDataset {
                row,
                name: rec.dataset,
                known,
            });
        };
        if !seen.insert((rec.dataset.clone(), rec.model.clone())) {
            return Err(Error::Metrics {
                row,
                message: format!("duplicate row for ({}, {})", rec.dataset, rec.model),
            });
        }
        points.push(CorrelationPoint {
            dataset: rec.dataset,
            model: rec.model,
            csg,
            mrr: rec.mrr,
        });
    }
    if points.is_empty() {
        return Err(Error::Metrics {
            row: 0,
            message: "no metric rows".into(),
        });
    }

    let mut models: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut datasets: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in &points {
        models.entry(p.model.clone()).or_default().push((p.csg, p.mrr));
        datasets.entry(p.dataset.clone()).or_default().push((p.csg, p.mrr));
    }
    let per_model = group_r(models);
    let per_dataset = group_r(datasets);
    let defined: Vec<f64> = per_model.iter().filter_map(|g| g.r.value()).collect();
    let mean_r = if defined.is_empty() {
        Correlation::Undefined
    } else {
        Correlation::Defined(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let all: Vec<(f64, f64)> = points.iter().map(|p| (p.csg, p.mrr)).collect();
    let pooled_r = pearson(&all).unwrap_or(Correlation::Undefined);
    Ok(CorrelationReport {
        points,
        per_model,
        per_dataset,
        mean_r,
        pooled_r,
    })
}
