//! Desk-scale digit experiment: per-class embeddings into ℝ¹⁶, classified by
//! nearest-neighbour mean reconstruction, compared with the same classifier
//! run in the original 784-dimensional space.
//!
//! ```text
//! cargo run --release -p whitney --example digits -- data/mnist [per_class] [test_count]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use whitney::classify::{DEFAULT_DIM, DEFAULT_NEIGHBORS, DEFAULT_PRUNE};
use whitney::{evaluate, fit_class_models, io, RawModel, Reconstructor, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist".into()));
    let per_class: usize = args.next().map_or(Ok(1000), |s| s.parse())?;
    let test_count: usize = args.next().map_or(Ok(1000), |s| s.parse())?;
    let max_iterations: usize = args.next().map_or(Ok(100), |s| s.parse())?;

    let train = io::load_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?
    .take_per_class(per_class);
    let test = io::load_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?
    .take(test_count);

    let cfg = SearchConfig {
        max_iterations,
        ..SearchConfig::default()
    };
    let start = Instant::now();
    let per_class_clouds = train.by_class()?;
    let models = fit_class_models(&per_class_clouds, DEFAULT_DIM, DEFAULT_PRUNE, &cfg)?;
    println!("fit: {:.1?}", start.elapsed());
    for m in &models {
        println!(
            "  class {}: distortion {:.6} -> {:.6}",
            m.label(),
            m.initial_distortion,
            m.distortion
        );
    }

    let start = Instant::now();
    let reduced = evaluate(&models, &test, DEFAULT_NEIGHBORS)?;
    println!(
        "reduced-space error: {:.2}% ({:.1?})",
        100.0 * reduced.error_rate,
        start.elapsed()
    );

    let start = Instant::now();
    let raw: Vec<RawModel> = per_class_clouds
        .into_iter()
        .map(|(label, cloud)| RawModel::new(label, cloud))
        .collect();
    let baseline = evaluate(&raw, &test, DEFAULT_NEIGHBORS)?;
    println!(
        "raw-space error: {:.2}% ({:.1?})",
        100.0 * baseline.error_rate,
        start.elapsed()
    );
    Ok(())
}
