//! Small dense kernels shared by the geometry, objective and optimizer code.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Entries at or below this magnitude are treated as zero when fixing signs.
pub(crate) const SIGN_TOL: f64 = 1e-12;

const SVD_MAX_ITERS: usize = 10_000;

/// Thin SVD `a = u · diag(s) · vᵀ` of an `m×k` matrix with `m ≥ k`.
///
/// Singular values come back nonincreasing and every left singular vector
/// has its first entry of magnitude above `SIGN_TOL` positive (the matching
/// right singular vector is flipped with it).
pub(crate) fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailure)?;
    let mut u = svd.u.ok_or(Error::SvdFailure)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailure)?;
    let s = svd.singular_values;
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::SvdFailure);
    }
    let mut v = v_t.transpose();
    for c in 0..u.ncols() {
        if leading_sign(u.column(c).iter().copied()) < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    Ok((u, s, v))
}

/// Sign of the first entry whose magnitude exceeds `SIGN_TOL`, or 0 if none does.
pub(crate) fn leading_sign(entries: impl IntoIterator<Item = f64>) -> f64 {
    entries
        .into_iter()
        .find(|x| x.abs() > SIGN_TOL)
        .map_or(0.0, f64::signum)
}

/// Q factor of a thin QR with the sign convention that R has a positive
/// diagonal. Returns `None` when the columns are numerically dependent.
pub(crate) fn orthonormalize(x: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let ncols = x.ncols();
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let qr = x.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..ncols {
        let d = r[(c, c)];
        if d.abs() <= 1e-14 * scale || !d.is_finite() {
            return None;
        }
        if d < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    Some(q)
}

/// ‖aᵀa − I‖_F.
pub(crate) fn orthonormality_residual(a: &DMatrix<f64>) -> f64 {
    let mut gram = a.tr_mul(a);
    for i in 0..gram.nrows() {
        gram[(i, i)] -= 1.0;
    }
    gram.norm()
}

/// `aᵀ·b` through the blocked product kernel.
pub(crate) fn at_b(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * b
}

/// Column-wise squared Euclidean norms.
pub(crate) fn column_sq_norms(a: &DMatrix<f64>) -> Vec<f64> {
    a.column_iter().map(|c| c.norm_squared()).collect()
}

/// Max of `|1 − nᵢ|` over squared norms `nᵢ`, with the smallest index winning ties.
pub(crate) fn max_contraction(sq_norms: impl IntoIterator<Item = f64>) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, n) in sq_norms.into_iter().enumerate() {
        let d = (1.0 - n).abs();
        if d > best.0 {
            best = (d, i);
        }
    }
    best
}
