//! Minimal-distortion linear embeddings of sampled manifolds.
//!
//! Given sample points from a manifold in `ℝᵐ`, this crate looks for the
//! `k`-dimensional subspace whose orthogonal projection shrinks the worst
//! unit secant of the sample as little as possible. The search runs over the
//! Grassmannian `G(m, k)` with a derivative-free pattern search, since the
//! worst-case objective has no gradient.
//!
//! ```
//! use nalgebra::DMatrix;
//! use whitney::{build_secants, init_frame, max_distortion, minimize, PointCloud, SearchConfig};
//!
//! // A circle lying in the xy-plane of ℝ³.
//! let pts = DMatrix::from_fn(3, 40, |i, j| {
//!     let t = j as f64 * std::f64::consts::TAU / 40.0;
//!     [t.cos(), t.sin(), 0.0][i]
//! });
//! let cloud = PointCloud::from_columns(pts)?;
//! let secants = build_secants(&cloud, None)?;
//! let start = init_frame(&secants, 2)?;
//! let (frame, trace) = minimize(&secants, &start, &SearchConfig::default())?;
//! assert!(max_distortion(&frame, &secants)?.0 <= 1e-12);
//! assert!(trace.final_value() <= trace.initial_value);
//! # Ok::<(), whitney::Error>(())
//! ```
//!
//! The guide under `book/` walks through the geometry, the objective and the
//! classification pipeline; its code samples are compiled as doctests of
//! this crate.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod grassmann;
pub mod io;
mod linalg;
pub mod optimizer;
pub mod secants;

pub use classify::{
    classify, evaluate, fit_class_models, knn, reconstruct, ClassModel, EvalReport, Label,
    LabeledSet, RawModel, Reconstructor,
};
pub use error::{Error, ErrorKind, Result};
pub use grassmann::{
    exp_map, metric, polar_decompose, tangent_basis, tangent_project, validate_frame, Frame,
    TangentVector, ORTHO_TOL,
};
pub use optimizer::{
    init_frame, minimize, stretch_refine, whitney_bound, SearchConfig, SearchTrace, TraceRecord,
};
pub use secants::{build_secants, canonical_sign, distortion, max_distortion, PointCloud, SecantSet};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/grassmannian.md")]
    mod grassmannian {}
    #[doc = include_str!("../../../book/src/secants.md")]
    mod secants {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/stretch.md")]
    mod stretch {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
