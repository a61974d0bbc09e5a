//! File formats: CSV point clouds, IDX image/label pairs, JSON model files.
//!
//! Every writer goes through [`write_atomic`], so an interrupted run leaves
//! either the previous file or the complete new one.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classify::{Label, LabeledSet};
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::optimizer::SearchConfig;
use crate::secants::PointCloud;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Version tag written to and required from model files.
pub const MODEL_VERSION: &str = "whitney-model/1";
/// Orthonormality tolerance applied when a model file is loaded.
pub const MODEL_FRAME_TOL: f64 = 1e-8;

/// Write `bytes` to a temporary file next to `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Parse comma-separated reals, one point per row. Row and column numbers in
/// errors are 1-based and count the header line when there is one.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut width = None;
    for (n, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let row = record
            .position()
            .map_or(n + 1 + usize::from(has_header), |p| p.line() as usize);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                row,
                expected,
                found: record.len(),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    text: field.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok(rows)
}

/// Load a CSV point cloud.
pub fn load_csv(path: &Path, has_header: bool) -> Result<PointCloud> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_csv(std::io::BufReader::new(file), has_header)?;
    PointCloud::from_rows(&rows)
}

/// Format rows of reals as CSV with 17 significant digits.
pub fn format_csv_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        let fields: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

/// Raw contents of an IDX3 image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count·rows·cols` bytes, image-major, row-major within an image.
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("header ends at byte {}", bytes.len())))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::TruncatedFile(format!(
            "expected {need} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: body[..need].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::TruncatedFile(format!(
            "expected {count} label bytes, found {}",
            body.len()
        )));
    }
    Ok(body[..count].to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IDX_IMAGES_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// One column per image, pixels divided by 255.
fn scaled(images: &IdxImages) -> DMatrix<f64> {
    DMatrix::from_iterator(
        images.rows * images.cols,
        images.count,
        images.pixels.iter().map(|&b| f64::from(b) / 255.0),
    )
}

/// Combine parsed images and labels; pixels are scaled to `[0, 1]` by 1/255
/// and each image is flattened row-major.
pub fn labeled_from_idx(images: &IdxImages, labels: &[u8]) -> Result<LabeledSet> {
    labeled_from_points(scaled(images), labels)
}

/// Load an IDX image file and its label file.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledSet> {
    let images = parse_idx_images(&read_file(images_path)?)?;
    let labels = parse_idx_labels(&read_file(labels_path)?)?;
    labeled_from_idx(&images, &labels)
}

/// Load an IDX label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&read_file(path)?)
}

/// Attach IDX labels to already scaled points.
pub fn labeled_from_points(points: DMatrix<f64>, labels: &[u8]) -> Result<LabeledSet> {
    if points.ncols() != labels.len() {
        return Err(Error::CountMismatch {
            images: points.ncols(),
            labels: labels.len(),
        });
    }
    LabeledSet::new(points, labels.iter().map(|&l| Label::from(l)).collect())
}

/// Load an IDX image file without labels, scaled to `[0, 1]`.
pub fn load_idx_images(path: &Path) -> Result<(IdxImages, DMatrix<f64>)> {
    let images = parse_idx_images(&read_file(path)?)?;
    let points = scaled(&images);
    Ok((images, points))
}

/// Write points whose coordinates are multiples of 1/255 in `[0, 1]` as an
/// IDX image file. `rows·cols` must equal the point dimension.
pub fn save_idx_images(path: &Path, points: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != points.nrows() {
        return Err(Error::BadShape(format!(
            "{rows}×{cols} images cannot hold {}-dimensional points",
            points.nrows()
        )));
    }
    let pixels = points
        .iter()
        .map(|&x| {
            let level = (x * 255.0).round();
            if !(0.0..=255.0).contains(&level) || (level / 255.0 - x).abs() > 1e-12 {
                Err(Error::Format(format!("{x} is not a pixel intensity")))
            } else {
                Ok(level as u8)
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    let images = IdxImages {
        count: points.ncols(),
        rows,
        cols,
        pixels,
    };
    write_atomic(path, &encode_idx_images(&images))
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

/// Settings the model was fitted with, echoed into the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub prune_count: Option<usize>,
    pub search: SearchConfig,
}

/// On-disk form of a fitted projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub m: usize,
    pub k: usize,
    /// `m×k` frame, row-major.
    pub frame: Vec<f64>,
    /// Optional `k×k` stretch, row-major.
    #[serde(default)]
    pub stretch: Option<Vec<f64>>,
    #[serde(default)]
    pub label: Option<Label>,
    pub config: ConfigEcho,
    /// Worst-case distortion reached by the fit, if recorded.
    #[serde(default)]
    pub distortion: Option<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl ModelFile {
    pub fn new(frame: &Frame, config: ConfigEcho) -> Self {
        ModelFile {
            version: MODEL_VERSION.to_string(),
            m: frame.ambient_dim(),
            k: frame.dim(),
            frame: row_major(frame.matrix()),
            stretch: None,
            label: None,
            config,
            distortion: None,
        }
    }

    pub fn with_stretch(mut self, stretch: &DMatrix<f64>) -> Self {
        self.stretch = Some(row_major(stretch));
        self
    }

    /// The stored frame, re-validated at [`MODEL_FRAME_TOL`].
    pub fn frame(&self) -> Result<Frame> {
        if self.frame.len() != self.m * self.k {
            return Err(Error::CorruptFrame(Box::new(Error::BadShape(format!(
                "{} entries for a {}×{} frame",
                self.frame.len(),
                self.m,
                self.k
            )))));
        }
        let mat = DMatrix::from_row_slice(self.m, self.k, &self.frame);
        Frame::new(mat, MODEL_FRAME_TOL).map_err(|e| Error::CorruptFrame(Box::new(e)))
    }

    pub fn stretch(&self) -> Result<Option<DMatrix<f64>>> {
        match &self.stretch {
            None => Ok(None),
            Some(v) if v.len() == self.k * self.k => {
                Ok(Some(DMatrix::from_row_slice(self.k, self.k, v)))
            }
            Some(v) => Err(Error::Format(format!(
                "stretch has {} entries, expected {}",
                v.len(),
                self.k * self.k
            ))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate: version tag first, then the frame.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("version")
            .and_then(|v| v.as_str())
            .unwrap_or_default();
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                expected: MODEL_VERSION.to_string(),
                found: version.to_string(),
            });
        }
        let model: ModelFile = serde_json::from_value(value)?;
        model.frame()?;
        model.stretch()?;
        Ok(model)
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    write_atomic(path, model.to_json()?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&text)
}
