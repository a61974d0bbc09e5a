//! Geometry of the Grassmannian `G(m, k)`, the manifold of `k`-dimensional
//! linear subspaces of `ℝᵐ`.
//!
//! A point is represented by a [`Frame`]: an `m×k` matrix `p` with
//! orthonormal columns. Two frames describe the same subspace when they differ
//! by right multiplication with a `k×k` orthogonal matrix.
//!
//! The tangent space at `p` is `{ω : pᵀω = 0}` with the trace inner product
//! `⟨ω₁, ω₂⟩ = Tr(ω₁ᵀω₂)`. Geodesics have the closed form
//!
//! ```text
//! Exp_p(ω) = [p·V·cos(Θ) + U·sin(Θ)]·Vᵀ,   ω = U·Θ·Vᵀ (thin SVD)
//! ```
//!
//! Every exponential-map result is re-orthonormalized (QR, positive `R`
//! diagonal) so frames stay valid to `1e-10` over long searches.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, orthonormality_residual};

/// Default orthonormality / tangency tolerance.
pub const ORTHO_TOL: f64 = 1e-10;

/// An orthonormal `m×k` frame, `1 ≤ k < m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    basis: DMatrix<f64>,
}

impl Frame {
    /// Checks `‖MᵀM − I‖_F ≤ tol` and wraps `m` without modifying it.
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_shape(m.nrows(), m.ncols())?;
        let residual = orthonormality_residual(&m);
        // NaN residuals fail this comparison too.
        if !(residual <= tol) {
            return Err(Error::NotOrthonormal { residual, tol });
        }
        Ok(Frame { basis: m })
    }

    /// Orthonormal basis for the column span of `a` (QR with positive `R` diagonal).
    pub fn orthonormalized(a: DMatrix<f64>) -> Result<Self> {
        check_shape(a.nrows(), a.ncols())?;
        let q = linalg::orthonormalize(a).ok_or(Error::RankDeficient { ratio: 0.0 })?;
        Frame::new(q, ORTHO_TOL)
    }

    /// The coordinate frame `[I_k; 0]`.
    pub fn coordinate(m: usize, k: usize) -> Result<Self> {
        check_shape(m, k)?;
        Ok(Frame {
            basis: DMatrix::identity(m, k),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Dimension `k(m − k)` of the tangent space.
    pub fn tangent_dim(&self) -> usize {
        self.dim() * (self.ambient_dim() - self.dim())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.basis
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.basis)
    }

    /// Reduced coordinates `pᵀx` of an ambient vector.
    pub fn project(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::BadShape(format!(
                "vector has length {}, frame ambient dimension is {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        Ok(self.basis.tr_mul(&DVector::from_column_slice(x)))
    }

    /// The same subspace represented as `p·q` for a `k×k` orthogonal `q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.dim() || q.ncols() != self.dim() {
            return Err(Error::BadShape("rotation must be k×k".into()));
        }
        Frame::new(&self.basis * q, ORTHO_TOL)
    }
}

fn check_shape(m: usize, k: usize) -> Result<()> {
    if k < 1 || k >= m {
        return Err(Error::BadShape(format!(
            "frame must satisfy 1 ≤ k < m, got m = {m}, k = {k}"
        )));
    }
    Ok(())
}

/// Validate that `m` has orthonormal columns within `tol`.
pub fn validate_frame(m: DMatrix<f64>, tol: f64) -> Result<Frame> {
    Frame::new(m, tol)
}

/// A tangent vector `ω` at a base frame `p`, satisfying `pᵀω = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<'a> {
    base: &'a Frame,
    dir: DMatrix<f64>,
}

impl<'a> TangentVector<'a> {
    pub fn base(&self) -> &'a Frame {
        self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dir
    }

    pub fn norm(&self) -> f64 {
        self.dir.norm()
    }

    pub fn scaled(&self, t: f64) -> TangentVector<'a> {
        TangentVector {
            base: self.base,
            dir: &self.dir * t,
        }
    }

    /// Zero tangent vector at `p`.
    pub fn zero(p: &'a Frame) -> Self {
        TangentVector {
            base: p,
            dir: DMatrix::zeros(p.ambient_dim(), p.dim()),
        }
    }

    /// Sum of two tangents at the same base.
    pub fn add(&self, other: &TangentVector<'_>) -> Result<TangentVector<'a>> {
        same_base(self.base, other.base)?;
        Ok(TangentVector {
            base: self.base,
            dir: &self.dir + &other.dir,
        })
    }

    /// Residual `‖pᵀω‖_F`.
    pub fn tangency_residual(&self) -> f64 {
        self.base.basis.tr_mul(&self.dir).norm()
    }
}

fn same_base(a: &Frame, b: &Frame) -> Result<()> {
    if std::ptr::eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::BaseMismatch)
    }
}

/// Orthogonal projection `(I − ppᵀ)A` onto the tangent space at `p`.
pub fn tangent_project<'a>(p: &'a Frame, a: &DMatrix<f64>) -> Result<TangentVector<'a>> {
    if a.shape() != p.basis.shape() {
        return Err(Error::BadShape(format!(
            "expected {}×{} matrix, got {}×{}",
            p.ambient_dim(),
            p.dim(),
            a.nrows(),
            a.ncols()
        )));
    }
    let coeffs = p.basis.tr_mul(a);
    let dir = a - &p.basis * coeffs;
    Ok(TangentVector { base: p, dir })
}

/// Trace inner product `Tr(ω₁ᵀω₂)`.
pub fn metric(w1: &TangentVector<'_>, w2: &TangentVector<'_>) -> Result<f64> {
    same_base(w1.base, w2.base)?;
    Ok(w1.dir.dot(&w2.dir))
}

/// Exponential map: the endpoint of the geodesic leaving `p` with velocity `ω`.
pub fn exp_map(p: &Frame, w: &TangentVector<'_>) -> Result<Frame> {
    same_base(p, w.base)?;
    if w.dir.iter().all(|&x| x == 0.0) {
        return Ok(p.clone());
    }
    let (u, theta, v) = linalg::thin_svd(&w.dir)?;
    let cos = DMatrix::from_diagonal(&theta.map(f64::cos));
    let sin = DMatrix::from_diagonal(&theta.map(f64::sin));
    let end = (&p.basis * &v * cos + u * sin) * v.transpose();
    let q = linalg::orthonormalize(end).ok_or(Error::SvdFailure)?;
    Frame::new(q, ORTHO_TOL)
}

/// A set of tangent directions `u_c·v_jᵀ` at a frame, stored compactly.
///
/// `complement` holds orthonormal columns `u_c` orthogonal to the frame and
/// `rotation` is a random `k×k` orthogonal matrix with columns `v_j`; each
/// `(c, j)` pair names the direction that moves the frame's `v_j` combination
/// toward `u_c`. Distinct pairs are orthonormal under [`metric`].
#[derive(Debug, Clone)]
pub(crate) struct DirectionSet {
    pub complement: DMatrix<f64>,
    pub rotation: DMatrix<f64>,
    pub pairs: Vec<(usize, usize)>,
}

impl DirectionSet {
    /// Draws `count` distinct canonical directions at `p`.
    ///
    /// When `count` equals the full tangent dimension every pair is used, in
    /// complement-major order; otherwise a random subset is drawn. Only the
    /// complement columns the subset touches are materialized: `p` is completed
    /// by Gram-Schmidt against fresh Gaussian columns, which is the Q factor of
    /// `[p | G]` restricted to the columns in use.
    pub fn draw<R: Rng + ?Sized>(p: &Frame, count: usize, rng: &mut R) -> Result<Self> {
        let (m, k) = (p.ambient_dim(), p.dim());
        let total = p.tangent_dim();
        if count == 0 {
            return Err(Error::InvalidArgument("direction count must be ≥ 1".into()));
        }
        if count > total {
            return Err(Error::CountTooLarge {
                requested: count,
                max: total,
            });
        }
        let flat: Vec<usize> = if count == total {
            (0..total).collect()
        } else {
            index::sample(rng, total, count).into_vec()
        };

        let mut relabel = vec![usize::MAX; m - k];
        let mut used = 0;
        let pairs = flat
            .into_iter()
            .map(|f| {
                let (c, j) = (f / k, f % k);
                if relabel[c] == usize::MAX {
                    relabel[c] = used;
                    used += 1;
                }
                (relabel[c], j)
            })
            .collect();

        let complement = complete_basis(p, used, rng);
        let gauss = DMatrix::<f64>::from_fn(k, k, |_, _| rng.sample(StandardNormal));
        let rotation = linalg::orthonormalize(gauss).unwrap_or_else(|| DMatrix::identity(k, k));
        Ok(DirectionSet {
            complement,
            rotation,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Dense `m×k` matrix of direction `i`.
    pub fn direction(&self, p: &Frame, i: usize) -> DMatrix<f64> {
        let (c, j) = self.pairs[i];
        debug_assert_eq!(self.complement.nrows(), p.ambient_dim());
        self.complement.column(c) * self.rotation.column(j).transpose()
    }
}

/// `count` orthonormal vectors orthogonal to the columns of `p`, from
/// Gaussian draws orthogonalized by two passes of classical Gram-Schmidt.
fn complete_basis<R: Rng + ?Sized>(p: &Frame, count: usize, rng: &mut R) -> DMatrix<f64> {
    let m = p.ambient_dim();
    let mut out = DMatrix::<f64>::zeros(m, count);
    let mut c = 0;
    while c < count {
        let mut g = DVector::<f64>::from_fn(m, |_, _| rng.sample(StandardNormal));
        let start = g.norm();
        for _ in 0..2 {
            let along_p = p.basis.tr_mul(&g);
            g -= &p.basis * along_p;
            if c > 0 {
                let prev = out.columns(0, c);
                let along_prev = prev.tr_mul(&g);
                g -= prev * along_prev;
            }
        }
        let norm = g.norm();
        // Practically unreachable; a draw nearly inside the current span is redrawn.
        if norm <= 1e-8 * start {
            continue;
        }
        out.set_column(c, &(g / norm));
        c += 1;
    }
    out
}

/// `count` metric-orthonormal tangent vectors at `p`, deterministic in `seed`.
///
/// The vectors are rank-one directions `p⊥·e_i·v_jᵀ` for a completion `p⊥`
/// of `p` and a random orthogonal `V`; with `count = k(m − k)` they span the whole tangent space.
pub fn tangent_basis(p: &Frame, count: usize, seed: u64) -> Result<Vec<TangentVector<'_>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = DirectionSet::draw(p, count, &mut rng)?;
    Ok((0..set.len())
        .map(|i| TangentVector {
            base: p,
            dir: set.direction(p, i),
        })
        .collect())
}

/// Polar decomposition `A = U·P` with `U` orthonormal and `P` symmetric
/// positive-definite.
pub fn polar_decompose(a: &DMatrix<f64>) -> Result<(Frame, DMatrix<f64>)> {
    check_shape(a.nrows(), a.ncols())?;
    let (w, s, v) = linalg::thin_svd(a)?;
    let largest = s[0];
    let smallest = s[s.len() - 1];
    if !(largest > 0.0) || smallest < 1e-12 * largest {
        return Err(Error::RankDeficient {
            ratio: if largest > 0.0 { smallest / largest } else { 0.0 },
        });
    }
    let u = &w * v.transpose();
    let stretch = &v * DMatrix::from_diagonal(&s) * v.transpose();
    let stretch = (&stretch + stretch.transpose()) * 0.5;
    Ok((Frame::new(u, ORTHO_TOL)?, stretch))
}
