//! Reconstruction classifier built on per-class embeddings.
//!
//! Every class gets its own low-distortion frame. A query is projected into
//! each class's reduced space, its nearest reduced training points are found,
//! and the mean of the corresponding *original* training points is taken as
//! that class's reconstruction of the query. The class with the smallest
//! Euclidean reconstruction residual wins.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::optimizer::{init_frame, minimize, SearchConfig};
use crate::secants::{build_secants, PointCloud};

pub type Label = u32;

/// Default number of neighbours averaged in a reconstruction.
pub const DEFAULT_NEIGHBORS: usize = 15;
/// Default reduced dimension for the digit experiment.
pub const DEFAULT_DIM: usize = 16;
/// Default number of shortest secants kept per point.
pub const DEFAULT_PRUNE: usize = 20;

/// Points with one label each. May be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    points: DMatrix<f64>,
    labels: Vec<Label>,
}

impl LabeledSet {
    /// `points` is `m×N`, one point per column.
    pub fn new(points: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if points.ncols() != labels.len() {
            return Err(Error::CountMismatch {
                images: points.ncols(),
                labels: labels.len(),
            });
        }
        Ok(LabeledSet { points, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.points.as_slice()[i * m..(i + 1) * m]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    fn select(&self, keep: &[usize]) -> LabeledSet {
        LabeledSet {
            points: self.points.select_columns(keep),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// The first `n` entries.
    pub fn take(&self, n: usize) -> LabeledSet {
        let keep: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&keep)
    }

    /// The first `n` entries of every label, in file order.
    pub fn take_per_class(&self, n: usize) -> LabeledSet {
        let mut seen: BTreeMap<Label, usize> = BTreeMap::new();
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| {
                let c = seen.entry(self.labels[i]).or_default();
                *c += 1;
                *c <= n
            })
            .collect();
        self.select(&keep)
    }

    /// Split into one point cloud per label.
    pub fn by_class(&self) -> Result<BTreeMap<Label, PointCloud>> {
        let mut idx: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            idx.entry(l).or_default().push(i);
        }
        idx.into_iter()
            .map(|(l, cols)| {
                PointCloud::from_columns(self.points.select_columns(&cols))
                    .map(|c| (l, c))
                    .map_err(|e| e.for_class(l))
            })
            .collect()
    }
}

/// Something that can reconstruct a query from one class's training data.
pub trait Reconstructor {
    fn label(&self) -> Label;

    /// Mean of the original training points nearest to `x` in this
    /// reconstructor's search space.
    fn reconstruct(&self, x: &[f64], neighbors: usize) -> Result<DVector<f64>>;
}

/// A fitted frame with the training points it was fit on.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    label: Label,
    frame: Frame,
    training: PointCloud,
    reduced: DMatrix<f64>,
    /// Objective at the initial (SVD) frame.
    pub initial_distortion: f64,
    /// Objective at the fitted frame.
    pub distortion: f64,
}

impl ClassModel {
    pub fn new(label: Label, frame: Frame, training: PointCloud) -> Result<Self> {
        if frame.ambient_dim() != training.dim() {
            return Err(Error::BadShape(format!(
                "frame ambient dimension {} does not match training dimension {}",
                frame.ambient_dim(),
                training.dim()
            )));
        }
        let reduced = frame.matrix().transpose() * training.matrix();
        Ok(ClassModel {
            label,
            frame,
            training,
            reduced,
            initial_distortion: f64::NAN,
            distortion: f64::NAN,
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn training(&self) -> &PointCloud {
        &self.training
    }

    /// `k×N` reduced training coordinates, one per column.
    pub fn reduced(&self) -> &DMatrix<f64> {
        &self.reduced
    }
}

impl Reconstructor for ClassModel {
    fn label(&self) -> Label {
        self.label
    }

    fn reconstruct(&self, x: &[f64], neighbors: usize) -> Result<DVector<f64>> {
        let q = self.frame.project(x)?;
        let nn = knn(q.as_slice(), &self.reduced, neighbors)?;
        Ok(mean_of(self.training.matrix(), &nn))
    }
}

/// Nearest neighbours searched directly in the ambient space; the baseline
/// the reduced models are compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct RawModel {
    label: Label,
    training: PointCloud,
}

impl RawModel {
    pub fn new(label: Label, training: PointCloud) -> Self {
        RawModel { label, training }
    }
}

impl Reconstructor for RawModel {
    fn label(&self) -> Label {
        self.label
    }

    fn reconstruct(&self, x: &[f64], neighbors: usize) -> Result<DVector<f64>> {
        if x.len() != self.training.dim() {
            return Err(Error::BadShape(format!(
                "query has length {}, training dimension is {}",
                x.len(),
                self.training.dim()
            )));
        }
        let nn = knn(x, self.training.matrix(), neighbors)?;
        Ok(mean_of(self.training.matrix(), &nn))
    }
}

fn mean_of(points: &DMatrix<f64>, cols: &[usize]) -> DVector<f64> {
    let mut sum = DVector::zeros(points.nrows());
    for &c in cols {
        sum += points.column(c);
    }
    sum / cols.len() as f64
}

/// Fit one model per class: pruned secants, SVD start, pattern search.
///
/// Classes are independent and fitted in parallel; the result is ordered by
/// label.
pub fn fit_class_models(
    per_class: &BTreeMap<Label, PointCloud>,
    k: usize,
    prune_count: usize,
    cfg: &SearchConfig,
) -> Result<Vec<ClassModel>> {
    cfg.validate()?;
    let classes: Vec<(&Label, &PointCloud)> = per_class.iter().collect();
    classes
        .into_par_iter()
        .map(|(&label, cloud)| fit_one(label, cloud, k, prune_count, cfg).map_err(|e| e.for_class(label)))
        .collect()
}

fn fit_one(
    label: Label,
    cloud: &PointCloud,
    k: usize,
    prune_count: usize,
    cfg: &SearchConfig,
) -> Result<ClassModel> {
    let secants = build_secants(cloud, Some(prune_count))?;
    let start = init_frame(&secants, k)?;
    let (frame, trace) = minimize(&secants, &start, cfg)?;
    log::info!(
        "class {label}: {} secants, distortion {:.6} -> {:.6} in {} iterations",
        secants.len(),
        trace.initial_value,
        trace.final_value(),
        trace.records.len()
    );
    let mut model = ClassModel::new(label, frame, cloud.clone())?;
    model.initial_distortion = trace.initial_value;
    model.distortion = trace.final_value();
    Ok(model)
}

/// Indices of the `count` columns of `points` closest to `query`, sorted by
/// (distance, index).
pub fn knn(query: &[f64], points: &DMatrix<f64>, count: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::InvalidArgument("neighbour count must be ≥ 1".into()));
    }
    if count > points.ncols() {
        return Err(Error::CountTooLarge {
            requested: count,
            max: points.ncols(),
        });
    }
    if query.len() != points.nrows() {
        return Err(Error::BadShape(format!(
            "query has length {}, points have dimension {}",
            query.len(),
            points.nrows()
        )));
    }
    let mut dist: Vec<(f64, usize)> = points
        .column_iter()
        .enumerate()
        .map(|(i, col)| {
            let d: f64 = col
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if count < dist.len() {
        dist.select_nth_unstable_by(count - 1, by);
        dist.truncate(count);
    }
    dist.sort_unstable_by(by);
    Ok(dist.into_iter().map(|(_, i)| i).collect())
}

/// Reconstruction of `x` by a fitted class model.
pub fn reconstruct(x: &[f64], model: &ClassModel, neighbors: usize) -> Result<DVector<f64>> {
    model.reconstruct(x, neighbors)
}

/// Label whose reconstruction of `x` has the smallest residual (ties go to
/// the smaller label), together with every class's residual.
pub fn classify<R: Reconstructor>(
    x: &[f64],
    models: &[R],
    neighbors: usize,
) -> Result<(Label, BTreeMap<Label, f64>)> {
    if models.is_empty() {
        return Err(Error::NoModels);
    }
    let target = DVector::from_column_slice(x);
    let mut residuals = BTreeMap::new();
    for model in models {
        let recon = model
            .reconstruct(x, neighbors)
            .map_err(|e| e.for_class(model.label()))?;
        residuals.insert(model.label(), (&target - recon).norm());
    }
    let mut best: Option<(Label, f64)> = None;
    for (&label, &r) in &residuals {
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((label, r));
        }
    }
    let (label, _) = best.expect("at least one model");
    Ok((label, residuals))
}

/// Classification results on a labeled test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub error_rate: f64,
    /// Rows are true labels, columns predicted labels, both in `labels` order.
    pub confusion: Vec<Vec<usize>>,
    pub per_class_errors: BTreeMap<Label, usize>,
    pub labels: Vec<Label>,
    pub total: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn misclassified(&self) -> usize {
        self.per_class_errors.values().sum()
    }
}

/// Classify every test point and tabulate the errors.
pub fn evaluate<R: Reconstructor + Sync>(
    models: &[R],
    test: &LabeledSet,
    neighbors: usize,
) -> Result<EvalReport> {
    if models.is_empty() {
        return Err(Error::NoModels);
    }
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let labels: Vec<Label> = models
        .iter()
        .map(Reconstructor::label)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let slot = |l: Label| labels.binary_search(&l).map_err(|_| Error::UnknownLabel(l));
    for &l in test.labels() {
        slot(l)?;
    }

    let predicted: Vec<Label> = (0..test.len())
        .into_par_iter()
        .map(|i| classify(test.point(i), models, neighbors).map(|(l, _)| l))
        .collect::<Result<_>>()?;

    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    let mut per_class_errors: BTreeMap<Label, usize> = labels.iter().map(|&l| (l, 0)).collect();
    for (&truth, &guess) in test.labels().iter().zip(&predicted) {
        confusion[slot(truth)?][slot(guess)?] += 1;
        if truth != guess {
            *per_class_errors.entry(truth).or_default() += 1;
        }
    }
    let wrong: usize = per_class_errors.values().sum();
    Ok(EvalReport {
        error_rate: wrong as f64 / test.len() as f64,
        confusion,
        per_class_errors,
        labels,
        total: test.len(),
    })
}
