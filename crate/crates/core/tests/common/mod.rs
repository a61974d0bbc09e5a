//! Test-only oracles and fixtures. Nothing here calls into the optimizer; the
//! brute-force routines recompute everything from raw coordinates.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Orthonormal columns from a Gaussian matrix (Gram-Schmidt, twice).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut q = gaussian(rng, rows, cols);
    for c in 0..cols {
        for _ in 0..2 {
            for prev in 0..c {
                let d = q.column(prev).dot(&q.column(c));
                let p = q.column(prev).into_owned();
                q.column_mut(c).axpy(-d, &p, 1.0);
            }
        }
        let n = q.column(c).norm();
        q.column_mut(c).scale_mut(1.0 / n);
    }
    q
}

/// Random unit vector.
pub fn unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Random 3×3 rotation.
pub fn rotation3(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut q = random_orthonormal(rng, 3, 3);
    if q.determinant() < 0.0 {
        q.column_mut(2).neg_mut();
    }
    q
}

/// `n` points on a unit circle in the xy-plane, rotated by `rot`; one point per column.
pub fn rotated_circle(n: usize, rot: &DMatrix<f64>) -> DMatrix<f64> {
    let flat = DMatrix::from_fn(3, n, |i, j| {
        let t = j as f64 * std::f64::consts::TAU / n as f64;
        [t.cos(), t.sin(), 0.0][i]
    });
    rot * flat
}

/// Points `t·d + noise` for `t` on a uniform grid in `[-1, 1]`.
pub fn noisy_line(rng: &mut ChaCha8Rng, n: usize, noise: f64) -> DMatrix<f64> {
    let d = unit(rng, 3);
    DMatrix::from_fn(3, n, |i, j| {
        let t = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
        t * d[i] + noise * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Unit vectors on a 1° grid over the upper hemisphere (polar angle 0..=90°,
/// azimuth 0..360°).
pub fn hemisphere_grid() -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for polar in 0..=90 {
        let th = (polar as f64).to_radians();
        let azimuths = if polar == 0 { 1 } else { 360 };
        for az in 0..azimuths {
            let ph = (az as f64).to_radians();
            out.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
        }
    }
    out
}

/// Unit secants of every pair of points, without any deduplication.
pub fn all_unit_secants(points: &DMatrix<f64>) -> Vec<[f64; 3]> {
    let n = points.ncols();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points.column(i) - points.column(j);
            let len = d.norm();
            if len > 1e-12 {
                out.push([d[0] / len, d[1] / len, d[2] / len]);
            }
        }
    }
    out
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Grid minimum of the worst distortion over planes in ℝ³, each plane
/// given by its unit normal `n`: distortion of `σ` is `(n·σ)²`.
pub fn grid_min_planes(secants: &[[f64; 3]]) -> f64 {
    hemisphere_grid()
        .iter()
        .map(|n| secants.iter().map(|s| dot3(n, s).powi(2)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Grid minimum over lines in ℝ³ with direction `d`: distortion `1 − (d·σ)²`.
pub fn grid_min_lines(secants: &[[f64; 3]]) -> f64 {
    hemisphere_grid()
        .iter()
        .map(|d| {
            secants
                .iter()
                .map(|s| 1.0 - dot3(d, s).powi(2))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Sort columns lexicographically so sets of vectors can be compared.
pub fn sorted_columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = m.column_iter().map(|c| c.iter().copied().collect()).collect();
    cols.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    cols
}
