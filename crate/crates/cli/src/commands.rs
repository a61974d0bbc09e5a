use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use whitney::io::{self, ConfigEcho, ModelFile};
use whitney::{
    build_secants, evaluate, fit_class_models, init_frame, minimize, stretch_refine, ClassModel,
    Error, LabeledSet, PointCloud, RawModel, Result, SearchConfig,
};

use crate::{ClassifyEvalArgs, ClassifyFitArgs, Command, FitArgs, SearchArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Secants {
            input,
            header,
            prune,
            output,
        } => secants(&input, header, prune, &output),
        Command::Fit(args) => fit(args),
        Command::Transform {
            model,
            input,
            header,
            apply_stretch,
            output,
        } => transform(&model, &input, header, apply_stretch, &output),
        Command::ClassifyFit(args) => classify_fit(args),
        Command::ClassifyEval(args) => classify_eval(args),
    }
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            initial_step: self.initial_step,
            step_tolerance: self.step_tol,
            max_iterations: self.max_iters,
            poll_directions: self.poll,
            seed: self.seed,
            ..SearchConfig::default()
        }
    }
}

fn secants(input: &Path, header: bool, prune: Option<usize>, output: &Path) -> Result<()> {
    let cloud = io::load_csv(input, header)?;
    let set = build_secants(&cloud, prune)?;
    let mut buf = Vec::new();
    set.write_csv(&mut buf).map_err(|e| io_error(output, e))?;
    io::write_atomic(output, &buf)?;
    println!("secants: {}", set.len());
    if set.duplicate_points() > 0 {
        println!("coincident point pairs skipped: {}", set.duplicate_points());
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let cfg = args.search.config();
    cfg.validate()?;
    let cloud = io::load_csv(&args.input, args.header)?;
    let secants = build_secants(&cloud, args.prune)?;
    let start = init_frame(&secants, args.dim)?;
    let (frame, trace) = minimize(&secants, &start, &cfg)?;

    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).map_err(|e| io_error(path, e))?;
        io::write_atomic(path, &buf)?;
    }

    let mut model = ModelFile::new(
        &frame,
        ConfigEcho {
            prune_count: args.prune,
            search: cfg.clone(),
        },
    );
    model.distortion = Some(trace.final_value());
    println!("secants: {}", secants.len());
    println!("initial distortion: {}", trace.initial_value);
    println!("final distortion: {}", trace.final_value());
    println!(
        "iterations: {} ({} accepted)",
        trace.records.len(),
        trace.accepted_count()
    );
    if args.stretch {
        let (stretch, value) = stretch_refine(&frame, &secants, &cfg)?;
        println!("stretched distortion: {value}");
        model = model.with_stretch(&stretch);
    }
    io::save_model(&args.output, &model)
}

fn transform(
    model_path: &Path,
    input: &Path,
    header: bool,
    apply_stretch: bool,
    output: &Path,
) -> Result<()> {
    let model = io::load_model(model_path)?;
    let frame = model.frame()?;
    let stretch = if apply_stretch { model.stretch()? } else { None };
    let file = fs::File::open(input).map_err(|e| io_error(input, e))?;
    let rows = io::read_csv(std::io::BufReader::new(file), header)?;
    let mut reduced = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let mut y: DVector<f64> = frame
            .project(row)
            .map_err(|e| Error::Format(format!("point {}: {e}", i + 1)))?;
        if let Some(p) = &stretch {
            y = p * y;
        }
        reduced.push(y.as_slice().to_vec());
    }
    let text = io::format_csv_rows(reduced.iter().map(Vec::as_slice));
    io::write_atomic(output, text.as_bytes())
}

fn model_path(dir: &Path, label: u32) -> PathBuf {
    dir.join(format!("class-{label}.json"))
}

fn training_path(dir: &Path, label: u32) -> PathBuf {
    dir.join(format!("class-{label}-train.idx"))
}

fn classify_fit(args: ClassifyFitArgs) -> Result<()> {
    let cfg = args.search.config();
    cfg.validate()?;
    let (shape, points) = io::load_idx_images(&args.train_images)?;
    let labels = io::load_idx_labels(&args.train_labels)?;
    let mut train = io::labeled_from_points(points, &labels)?;
    if let Some(n) = args.per_class {
        train = train.take_per_class(n);
    }
    let per_class = train.by_class()?;
    let models = fit_class_models(&per_class, args.dim, args.prune, &cfg)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| io_error(&args.out_dir, e))?;
    for model in &models {
        let label = whitney::Reconstructor::label(model);
        let mut file = ModelFile::new(
            model.frame(),
            ConfigEcho {
                prune_count: Some(args.prune),
                search: cfg.clone(),
            },
        );
        file.label = Some(label);
        file.distortion = Some(model.distortion);
        io::save_model(&model_path(&args.out_dir, label), &file)?;
        io::save_idx_images(
            &training_path(&args.out_dir, label),
            model.training().matrix(),
            shape.rows,
            shape.cols,
        )?;
        println!(
            "class {label}: {} points, distortion {:.6} -> {:.6}",
            model.training().len(),
            model.initial_distortion,
            model.distortion
        );
    }
    Ok(())
}

fn load_class_models(dir: &Path) -> Result<Vec<ClassModel>> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("class-") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    let mut models = Vec::with_capacity(paths.len());
    for path in paths {
        let file = io::load_model(&path)?;
        let label = file.label.ok_or_else(|| {
            Error::Format(format!("{} has no class label", path.display()))
        })?;
        let (_, points) = io::load_idx_images(&training_path(dir, label))?;
        let training = PointCloud::from_columns(points).map_err(|e| e.for_class(label))?;
        let mut model = ClassModel::new(label, file.frame()?, training)?;
        model.distortion = file.distortion.unwrap_or(f64::NAN);
        models.push(model);
    }
    if models.is_empty() {
        return Err(Error::NoModels);
    }
    models.sort_by_key(whitney::Reconstructor::label);
    Ok(models)
}

fn classify_eval(args: ClassifyEvalArgs) -> Result<()> {
    let models = load_class_models(&args.models_dir)?;
    let mut test: LabeledSet = io::load_idx(&args.test_images, &args.test_labels)?;
    if let Some(n) = args.limit {
        test = test.take(n);
    }
    let report = evaluate(&models, &test, args.neighbors)?;
    println!(
        "test error: {:.2}% ({} of {})",
        100.0 * report.error_rate,
        report.misclassified(),
        report.total
    );
    if args.raw_baseline {
        let raw: Vec<RawModel> = models
            .iter()
            .map(|m| RawModel::new(whitney::Reconstructor::label(m), m.training().clone()))
            .collect();
        let base = evaluate(&raw, &test, args.neighbors)?;
        println!("raw-space error: {:.2}%", 100.0 * base.error_rate);
    }
    if let Some(path) = &args.report {
        io::write_atomic(path, report.to_json()?.as_bytes())?;
    }
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
