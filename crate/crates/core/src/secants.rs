//! Point clouds, unit secant sets and the worst-case distortion objective.
//!
//! For a projection `p` and a unit secant `σ` the distortion is
//! `|1 − ‖pᵀσ‖²|`: zero when the projection keeps `σ` intact, one when it
//! collapses `σ` completely. The objective over a secant set is the largest
//! distortion of any member.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::linalg;

/// Two points closer than this are treated as the same sample.
pub const DUPLICATE_POINT_TOL: f64 = 1e-12;
/// Canonical secants whose difference has ∞-norm at or below this are merged.
pub const DEDUP_TOL: f64 = 1e-12;
/// Allowed deviation of `‖σ‖₂` from 1.
pub const UNIT_TOL: f64 = 1e-12;

/// `N ≥ 2` finite sample points in `ℝᵐ`, stored one point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
}

impl PointCloud {
    /// Wrap an `m×N` matrix whose columns are the points.
    pub fn from_columns(points: DMatrix<f64>) -> Result<Self> {
        if points.ncols() < 2 {
            return Err(Error::TooFewPoints(points.ncols()));
        }
        if points.nrows() == 0 {
            return Err(Error::BadShape("points must have at least one coordinate".into()));
        }
        if let Some(pos) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point {} has a non-finite coordinate",
                pos / points.nrows()
            )));
        }
        Ok(PointCloud { points })
    }

    /// Build from row vectors, one per point.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::BadShape(format!(
                "point {bad} has {} coordinates, expected {m}",
                rows[bad].len()
            )));
        }
        let points = DMatrix::from_fn(m, rows.len(), |i, j| rows[j][i]);
        Self::from_columns(points)
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.points.as_slice()[i * m..(i + 1) * m]
    }

    /// The `m×N` matrix of points.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }
}

/// Deduplicated unit secants in canonical sign form, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SecantSet {
    secants: DMatrix<f64>,
    sources: Vec<(usize, usize)>,
    duplicate_points: usize,
}

impl SecantSet {
    /// Wrap explicit secants (columns of `secants`): each is normalized,
    /// sign-canonicalized and deduplicated. Zero columns are rejected.
    pub fn from_vectors(secants: &DMatrix<f64>) -> Result<Self> {
        let mut acc = Dedup::new(secants.nrows());
        for (c, v) in secants.column_iter().enumerate() {
            let norm = v.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::ZeroVector);
            }
            let unit = canonical_sign(&(v / norm))?;
            acc.push(unit, (c, c));
        }
        acc.finish(0)
    }

    pub fn len(&self) -> usize {
        self.secants.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.secants.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.secants.nrows()
    }

    /// `m×|Σ|` matrix whose columns are the secants.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.secants
    }

    pub fn secant(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.secants.as_slice()[i * m..(i + 1) * m]
    }

    /// Point-index pair `(i, j)` each secant was formed from.
    pub fn sources(&self) -> &[(usize, usize)] {
        &self.sources
    }

    /// Number of point pairs skipped because the points coincided.
    pub fn duplicate_points(&self) -> usize {
        self.duplicate_points
    }

    /// One secant per line, comma separated, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for col in self.secants.column_iter() {
            let line: Vec<String> = col.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()
    }
}

/// `σ` or `−σ`, whichever has its first component above `1e-12` in
/// magnitude positive.
pub fn canonical_sign(v: &DVector<f64>) -> Result<DVector<f64>> {
    let sign = linalg::leading_sign(v.iter().copied());
    if sign == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(if sign < 0.0 { -v } else { v.clone() })
}

/// Accumulates canonical secants, dropping any within `DEDUP_TOL` (∞-norm)
/// of one already kept. Candidates are bucketed by a fixed linear key so only
/// secants with nearby keys are compared.
struct Dedup {
    weights: Vec<f64>,
    index: BTreeMap<OrdKey, Vec<usize>>,
    kept: Vec<DVector<f64>>,
    sources: Vec<(usize, usize)>,
    window: f64,
}

#[derive(Debug, Clone, Copy)]
struct OrdKey(f64);

impl PartialEq for OrdKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for OrdKey {}

impl PartialOrd for OrdKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Dedup {
    fn new(m: usize) -> Self {
        // Weights in [0.5, 1.5) from the golden-ratio sequence; any fixed
        // weights work, these just avoid structured collisions.
        let weights: Vec<f64> = (0..m)
            .map(|l| 0.5 + ((l as f64 + 1.0) * 0.618_033_988_749_895).fract())
            .collect();
        let l1: f64 = weights.iter().sum();
        Dedup {
            weights,
            index: BTreeMap::new(),
            kept: Vec::new(),
            sources: Vec::new(),
            window: 2.0 * l1 * DEDUP_TOL,
        }
    }

    fn push(&mut self, v: DVector<f64>, source: (usize, usize)) {
        let key = v.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>();
        let lo = OrdKey(key - self.window);
        let hi = OrdKey(key + self.window);
        let dup = self.index.range(lo..=hi).any(|(_, ids)| {
            ids.iter()
                .any(|&id| (&self.kept[id] - &v).amax() <= DEDUP_TOL)
        });
        if dup {
            return;
        }
        self.index.entry(OrdKey(key)).or_default().push(self.kept.len());
        self.kept.push(v);
        self.sources.push(source);
    }

    fn finish(self, duplicate_points: usize) -> Result<SecantSet> {
        if self.kept.is_empty() {
            return Err(Error::EmptySecantSet);
        }
        let m = self.weights.len();
        let secants = DMatrix::from_columns(&self.kept);
        debug_assert_eq!(secants.nrows(), m);
        Ok(SecantSet {
            secants,
            sources: self.sources,
            duplicate_points,
        })
    }
}

/// Build the unit secant set of a point cloud.
///
/// Without pruning every pair of distinct points contributes. With
/// `prune_count = Some(s)`, each point admits only its `s` nearest partners
/// (ties broken by smaller partner index) before the union is deduplicated.
/// Coincident points contribute nothing and are counted in
/// [`SecantSet::duplicate_points`].
pub fn build_secants(cloud: &PointCloud, prune_count: Option<usize>) -> Result<SecantSet> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    if prune_count == Some(0) {
        return Err(Error::InvalidArgument("prune count must be ≥ 1".into()));
    }
    let pts = cloud.matrix();
    let mut dedup = Dedup::new(cloud.dim());
    let mut duplicate_pairs = HashSet::new();
    let mut seen_pairs = HashSet::new();

    let mut admit = |i: usize, j: usize, dedup: &mut Dedup| {
        let key = (i.min(j), i.max(j));
        if !seen_pairs.insert(key) {
            return;
        }
        let diff = pts.column(i) - pts.column(j);
        let norm = diff.norm();
        let unit = diff / norm;
        // Nonzero difference normalized to unit length always has a component above 1e-12.
        if let Ok(unit) = canonical_sign(&unit) {
            dedup.push(unit, (i, j));
        }
    };

    match prune_count {
        None => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let dist = euclidean(cloud.point(i), cloud.point(j));
                    if dist <= DUPLICATE_POINT_TOL {
                        duplicate_pairs.insert((i, j));
                        continue;
                    }
                    admit(i, j, &mut dedup);
                }
            }
        }
        Some(s) => {
            let mut partners: Vec<(f64, usize)> = Vec::with_capacity(n);
            for i in 0..n {
                partners.clear();
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let dist = euclidean(cloud.point(i), cloud.point(j));
                    if dist <= DUPLICATE_POINT_TOL {
                        duplicate_pairs.insert((i.min(j), i.max(j)));
                        continue;
                    }
                    partners.push((dist, j));
                }
                let take = s.min(partners.len());
                if take == 0 {
                    continue;
                }
                let by_len = |a: &(f64, usize), b: &(f64, usize)| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                };
                if take < partners.len() {
                    partners.select_nth_unstable_by(take - 1, by_len);
                }
                let nearest = &mut partners[..take];
                nearest.sort_unstable_by(by_len);
                for &(_, j) in nearest.iter() {
                    admit(i, j, &mut dedup);
                }
            }
        }
    }

    if !duplicate_pairs.is_empty() {
        log::info!(
            "skipped {} coincident point pairs while building secants",
            duplicate_pairs.len()
        );
    }
    dedup.finish(duplicate_pairs.len())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `|1 − ‖pᵀσ‖²|` for a unit secant `σ`.
pub fn distortion(p: &Frame, sigma: &[f64]) -> Result<f64> {
    if sigma.len() != p.ambient_dim() {
        return Err(Error::BadShape(format!(
            "secant has length {}, frame ambient dimension is {}",
            sigma.len(),
            p.ambient_dim()
        )));
    }
    let sigma = DVector::from_column_slice(sigma);
    let norm = sigma.norm();
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::NotUnit { norm });
    }
    let proj = p.matrix().tr_mul(&sigma);
    Ok((1.0 - proj.norm_squared()).abs())
}

/// Largest distortion over the secant set and the index of the first
/// secant attaining it.
pub fn max_distortion(p: &Frame, secants: &SecantSet) -> Result<(f64, usize)> {
    if secants.is_empty() {
        return Err(Error::EmptySecantSet);
    }
    if secants.dim() != p.ambient_dim() {
        return Err(Error::BadShape(format!(
            "secants live in dimension {}, frame ambient dimension is {}",
            secants.dim(),
            p.ambient_dim()
        )));
    }
    let reduced = linalg::at_b(p.matrix(), secants.matrix());
    Ok(linalg::max_contraction(linalg::column_sq_norms(&reduced)))
}
