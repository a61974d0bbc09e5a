//! Minimizing the worst-case secant distortion over the Grassmannian.
//!
//! The objective `D(p) = max_σ |1 − ‖pᵀσ‖²|` is Lipschitz but not
//! differentiable, so the search is derivative free: a generating-set pattern
//! search run in the tangent space of the current frame. Each iteration polls
//! `Exp_p(±h·ω)` along a seeded set of orthonormal tangent directions `ω`,
//! moves to the first strict improvement and re-centres there, or halves `h`
//! when the whole poll fails.
//!
//! Poll directions have the form `u·e_jᵀ` with `u ⟂ span(p)`, so a poll point
//! only rotates column `j` of `p` toward `u`:
//!
//! ```text
//! Exp_p(t·u·e_jᵀ) = p + (p_j·(cos t − 1) + u·sin t)·e_jᵀ
//! ```
//!
//! The reduced secant coordinates `pᵀσ` of a poll point therefore differ from
//! the centre's in a single row, which makes screening a poll point `O(|Σ|)`.
//! A point that screens as an improvement is re-evaluated exactly through
//! [`exp_map`] and [`max_distortion`] before it is accepted, so the recorded
//! objective values are exact and monotone.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{exp_map, tangent_project, DirectionSet, Frame};
use crate::linalg::{self, leading_sign};
use crate::secants::{max_distortion, SecantSet};

/// Default cap on poll directions per iteration.
pub const MAX_DEFAULT_POLL: usize = 200;

/// Smallest allowed diagonal entry of the stretch factor.
const STRETCH_DIAG_FLOOR: f64 = 1e-8;
/// A stretch step is accepted only if it lowers the objective by at least
/// this times the squared step. Without it, rounding-level gains along a
/// direction the secants barely see keep the step from ever shrinking.
const STRETCH_SUFFICIENT_DECREASE: f64 = 1e-4;

/// Parameters of the pattern search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Initial (and maximal) tangent-space step length.
    pub initial_step: f64,
    /// Step multiplier after a failed poll, in `(0, 1)`.
    pub contraction: f64,
    /// Step multiplier after a successful poll, `≥ 1`.
    pub expansion: f64,
    /// The search stops once the step falls below this.
    pub step_tolerance: f64,
    pub max_iterations: usize,
    /// Poll directions per iteration. `None` means `min(2·k(m−k), 200)`.
    pub poll_directions: Option<usize>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            initial_step: 0.5,
            contraction: 0.5,
            expansion: 2.0,
            step_tolerance: 1e-6,
            max_iterations: 500,
            poll_directions: None,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return bad("contraction must lie in (0, 1)");
        }
        if !(self.expansion >= 1.0) || !self.expansion.is_finite() {
            return bad("expansion must be ≥ 1");
        }
        if !(self.step_tolerance > 0.0) {
            return bad("step tolerance must be positive");
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return bad("initial step must be positive");
        }
        if self.max_iterations < 1 {
            return bad("max iterations must be ≥ 1");
        }
        if self.poll_directions == Some(0) {
            return bad("poll directions must be ≥ 1");
        }
        Ok(())
    }

    /// Directions actually polled per iteration on `G(m, k)`.
    pub fn poll_count(&self, m: usize, k: usize) -> usize {
        let total = k * (m - k);
        self.poll_directions
            .unwrap_or_else(|| (2 * total).min(MAX_DEFAULT_POLL))
            .min(total)
    }
}

/// One iteration of a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Step length polled during this iteration.
    pub step: f64,
    /// Objective at the centre after this iteration.
    pub value: f64,
    pub accepted: bool,
    /// Index of a secant attaining `value`.
    pub argmax: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub initial_value: f64,
    pub records: Vec<TraceRecord>,
}

impl SearchTrace {
    /// Objective after the last iteration (or the initial value if none ran).
    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(self.initial_value, |r| r.value)
    }

    pub fn accepted_count(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    /// Initial value followed by the value after each accepted iteration.
    pub fn accepted_values(&self) -> Vec<f64> {
        std::iter::once(self.initial_value)
            .chain(self.records.iter().filter(|r| r.accepted).map(|r| r.value))
            .collect()
    }

    /// CSV with header `iteration,step,value,accepted,argmax_index`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,step,value,accepted,argmax_index")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{}",
                r.iteration,
                r.step,
                r.value,
                u8::from(r.accepted),
                r.argmax
            )?;
        }
        out.flush()
    }
}

/// Leading `k` left singular vectors of the `m×|Σ|` secant matrix.
///
/// Computed as the top eigenvectors of `S·Sᵀ`, which is `m×m` regardless of
/// the number of secants. Each vector's first significant entry is made
/// positive. A (near) tie between the `k`-th and `(k+1)`-th singular values
/// only logs a warning, since any leading subspace is a valid start.
pub fn init_frame(secants: &SecantSet, k: usize) -> Result<Frame> {
    let m = secants.dim();
    if k < 1 || k >= m {
        return Err(Error::BadShape(format!(
            "subspace dimension must satisfy 1 ≤ k < m, got m = {m}, k = {k}"
        )));
    }
    if secants.len() < k {
        return Err(Error::TooFewSecants {
            have: secants.len(),
            need: k,
        });
    }
    let s = secants.matrix();
    let gram = s * s.transpose();
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 100_000).ok_or(Error::SvdFailure)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let singular = |i: usize| eig.eigenvalues[order[i]].max(0.0).sqrt();
    if singular(k - 1) - singular(k) <= 1e-12 {
        log::warn!(
            "leading subspace is not unique: singular values {} and {} coincide",
            singular(k - 1),
            singular(k)
        );
    }
    let mut lead = DMatrix::zeros(m, k);
    for (c, &idx) in order[..k].iter().enumerate() {
        let mut v = eig.eigenvectors.column(idx).into_owned();
        if leading_sign(v.iter().copied()) < 0.0 {
            v.neg_mut();
        }
        lead.set_column(c, &v);
    }
    Frame::orthonormalized(lead)
}

/// Objective state at a search centre.
struct Center {
    frame: Frame,
    /// `pᵀS`, `k×|Σ|`.
    reduced: DMatrix<f64>,
    sq_norms: Vec<f64>,
    value: f64,
    argmax: usize,
}

impl Center {
    fn new(frame: Frame, secants: &SecantSet) -> Self {
        let reduced = linalg::at_b(frame.matrix(), secants.matrix());
        let sq_norms = linalg::column_sq_norms(&reduced);
        let (value, argmax) = linalg::max_contraction(sq_norms.iter().copied());
        Center {
            frame,
            reduced,
            sq_norms,
            value,
            argmax,
        }
    }

    /// Objective at `Exp_p(t·u·vᵀ)` given `uᵀσ` and `vᵀpᵀσ` for every
    /// secant, or `None` as soon as it provably cannot beat the centre.
    ///
    /// Only the `v` component of `pᵀσ` rotates toward `uᵀσ`, so each squared
    /// norm changes by `z² − y²`.
    fn screen(&self, along_u: &[f64], along_v: &[f64], t: f64) -> Option<f64> {
        let (sin, cos) = t.sin_cos();
        let mut worst = 0.0_f64;
        for (s, (&c, &y)) in along_u.iter().zip(along_v).enumerate() {
            let z = cos * y + sin * c;
            let d = (1.0 - (self.sq_norms[s] - y * y + z * z)).abs();
            if d >= self.value {
                return None;
            }
            worst = worst.max(d);
        }
        Some(worst)
    }
}

/// Pattern search for the frame minimizing the largest secant distortion.
///
/// The returned frame never has a larger objective than `start`, and the
/// trace is identical across runs with the same inputs.
pub fn minimize(
    secants: &SecantSet,
    start: &Frame,
    cfg: &SearchConfig,
) -> Result<(Frame, SearchTrace)> {
    cfg.validate()?;
    if secants.is_empty() {
        return Err(Error::EmptySecantSet);
    }
    if secants.dim() != start.ambient_dim() {
        return Err(Error::BadShape(format!(
            "secants live in dimension {}, frame ambient dimension is {}",
            secants.dim(),
            start.ambient_dim()
        )));
    }
    let (m, k) = (start.ambient_dim(), start.dim());
    let poll = cfg.poll_count(m, k);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut center = Center::new(start.clone(), secants);
    let mut trace = SearchTrace {
        initial_value: center.value,
        records: Vec::new(),
    };
    let mut step = cfg.initial_step;

    for iteration in 0..cfg.max_iterations {
        if step < cfg.step_tolerance || center.value == 0.0 {
            break;
        }
        let dirs = DirectionSet::draw(&center.frame, poll, &mut rng)?;
        // Column c of `along` holds u_cᵀσ for every secant σ, column j of
        // `turned` holds v_jᵀpᵀσ.
        let along = linalg::at_b(&dirs.complement, secants.matrix()).transpose();
        let turned = linalg::at_b(&center.reduced, &dirs.rotation);
        let mut moved = None;

        'poll: for (i, &(c, j)) in dirs.pairs.iter().enumerate() {
            let row = along.column(c);
            let row = row.as_slice();
            for t in [step, -step] {
                if center.screen(row, turned.column(j).as_slice(), t).is_none() {
                    continue;
                }
                let dir = dirs.direction(&center.frame, i);
                let w = tangent_project(&center.frame, &dir)?.scaled(t);
                let next = exp_map(&center.frame, &w)?;
                let cand = Center::new(next, secants);
                if cand.value < center.value {
                    moved = Some(cand);
                    break 'poll;
                }
            }
        }

        let accepted = moved.is_some();
        let polled = step;
        match moved {
            Some(next) => {
                center = next;
                step = (step * cfg.expansion).min(cfg.initial_step);
            }
            None => step *= cfg.contraction,
        }
        trace.records.push(TraceRecord {
            iteration,
            step: polled,
            value: center.value,
            accepted,
            argmax: center.argmax,
        });
    }

    debug_assert_eq!(max_distortion(&center.frame, secants)?.0, center.value);
    Ok((center.frame, trace))
}

/// Post-projection stretch `P` (symmetric positive-definite, `k×k`) reducing
/// `max_σ |1 − ‖P·p̂ᵀσ‖²|`.
///
/// `P = L·Lᵀ` with `L` lower triangular; the search runs over the
/// `k(k+1)/2` entries of `L` starting from the identity, with the diagonal
/// used as `max(|l_ii|, 1e-8)`. Returns `P` and the objective it attains,
/// which never exceeds the unstretched objective.
pub fn stretch_refine(
    frame: &Frame,
    secants: &SecantSet,
    cfg: &SearchConfig,
) -> Result<(DMatrix<f64>, f64)> {
    cfg.validate()?;
    if secants.is_empty() {
        return Err(Error::EmptySecantSet);
    }
    let (mut value, _) = max_distortion(frame, secants)?;
    let k = frame.dim();
    let reduced = linalg::at_b(frame.matrix(), secants.matrix());
    let slots: Vec<(usize, usize)> = (0..k).flat_map(|r| (0..=r).map(move |c| (r, c))).collect();

    let stretch_of = |params: &[f64]| {
        let mut l = DMatrix::<f64>::zeros(k, k);
        for (&(r, c), &x) in slots.iter().zip(params) {
            l[(r, c)] = if r == c { x.abs().max(STRETCH_DIAG_FLOOR) } else { x };
        }
        &l * l.transpose()
    };
    let objective = |params: &[f64]| {
        let stretched = stretch_of(params) * &reduced;
        linalg::max_contraction(linalg::column_sq_norms(&stretched)).0
    };

    let mut params: Vec<f64> = slots
        .iter()
        .map(|&(r, c)| if r == c { 1.0 } else { 0.0 })
        .collect();
    let mut best = DMatrix::identity(k, k);
    let mut step = cfg.initial_step;

    for _ in 0..cfg.max_iterations {
        if step < cfg.step_tolerance || value == 0.0 {
            break;
        }
        let mut improved = false;
        'poll: for idx in 0..params.len() {
            for t in [step, -step] {
                let mut trial = params.clone();
                trial[idx] += t;
                let v = objective(&trial);
                if v < value - STRETCH_SUFFICIENT_DECREASE * step * step {
                    value = v;
                    best = stretch_of(&trial);
                    params = trial;
                    improved = true;
                    break 'poll;
                }
            }
        }
        step = if improved {
            (step * cfg.expansion).min(cfg.initial_step)
        } else {
            step * cfg.contraction
        };
    }
    Ok((best, value))
}

/// Whitney's sufficient embedding dimension `2n + 1` for an `n`-manifold.
pub fn whitney_bound(n: i64) -> Result<u64> {
    if n < 0 {
        return Err(Error::NegativeDimension(n));
    }
    Ok(2 * n as u64 + 1)
}
