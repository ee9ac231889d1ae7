//! Multi-view datasets: manifest-driven loading, synthetic generation,
//! test-time perturbations, and per-view standardization.
//!
//! On disk a dataset is a plain-text manifest next to one headerless CSV per
//! view and a labels file with one integer per line:
//!
//! ```text
//! name handwritten
//! classes 10
//! samples 2000
//! labels labels.txt
//! view pixels 240 view_pixels.csv
//! view fourier 76 view_fourier.csv
//! ```
//!
//! Paths are relative to the manifest. Blank lines and `#` comments are
//! ignored. Loading then re-saving a dataset reproduces the files byte for
//! byte because numbers are written in canonical (shortest round-trip) form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::DenseArray;
use crate::error::{Result, TmurError};
use crate::seeding;

#[derive(Clone, Debug)]
pub struct ViewSpec {
    pub name: String,
    pub dim: usize,
    pub path: String,
}

#[derive(Clone, Debug)]
pub struct DatasetManifest {
    pub name: String,
    pub num_classes: usize,
    pub num_samples: usize,
    pub labels_path: String,
    pub views: Vec<ViewSpec>,
}

/// An in-memory multi-view classification dataset. Every view holds one row
/// per sample, in the same order as `labels`.
#[derive(Clone, Debug)]
pub struct MultiViewDataset {
    pub name: String,
    pub view_names: Vec<String>,
    pub views: Vec<DenseArray>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl MultiViewDataset {
    pub fn new(
        name: impl Into<String>,
        view_names: Vec<String>,
        views: Vec<DenseArray>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let ds = MultiViewDataset {
            name: name.into(),
            view_names,
            views,
            labels,
            num_classes,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.cols()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(TmurError::data("dataset has no views"));
        }
        if self.view_names.len() != self.views.len() {
            return Err(TmurError::data("view name count does not match view count"));
        }
        if self.num_classes < 2 {
            return Err(TmurError::data(format!(
                "dataset needs at least 2 classes, got {}",
                self.num_classes
            )));
        }
        let n = self.labels.len();
        for (name, view) in self.view_names.iter().zip(&self.views) {
            if view.rows() != n {
                return Err(TmurError::data(format!(
                    "view '{name}' has {} rows but there are {n} labels",
                    view.rows()
                )));
            }
            if !view.all_finite() {
                return Err(TmurError::data(format!(
                    "view '{name}' contains non-finite values"
                )));
            }
        }
        for (i, &y) in self.labels.iter().enumerate() {
            if y >= self.num_classes {
                return Err(TmurError::data(format!(
                    "label {y} at row {} out of range for {} classes",
                    i + 1,
                    self.num_classes
                )));
            }
        }
        Ok(())
    }

    /// Copy the given sample rows (in the given order) into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.num_samples();
        let mut views = Vec::with_capacity(self.views.len());
        for view in &self.views {
            let mut out = DenseArray::zeros(indices.len(), view.cols());
            for (r, &i) in indices.iter().enumerate() {
                if i >= n {
                    return Err(TmurError::data(format!(
                        "subset index {i} out of range for {n} samples"
                    )));
                }
                for c in 0..view.cols() {
                    out.set(r, c, view.get(i, c));
                }
            }
            views.push(out);
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        MultiViewDataset::new(
            self.name.clone(),
            self.view_names.clone(),
            views,
            labels,
            self.num_classes,
        )
    }
}

/// Load a dataset through its manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let path = path.as_ref();
    let manifest = parse_manifest(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));

    let labels = load_labels(
        &dir.join(&manifest.labels_path),
        manifest.num_samples,
        manifest.num_classes,
    )?;

    let mut views = Vec::new();
    let mut view_names = Vec::new();
    for spec in &manifest.views {
        let view = load_view_csv(&dir.join(&spec.path), spec, manifest.num_samples)?;
        views.push(view);
        view_names.push(spec.name.clone());
    }
    MultiViewDataset::new(
        manifest.name,
        view_names,
        views,
        labels,
        manifest.num_classes,
    )
}

fn parse_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| {
        TmurError::data(format!("cannot read manifest {}: {e}", path.display()))
    })?;
    let mut name = None;
    let mut classes = None;
    let mut samples = None;
    let mut labels = None;
    let mut views = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let lineno = idx + 1;
        match key {
            "name" => name = Some(rest.join(" ")),
            "classes" => {
                classes = Some(parse_count(rest.first(), "classes", path, lineno)?);
            }
            "samples" => {
                samples = Some(parse_count(rest.first(), "samples", path, lineno)?);
            }
            "labels" => {
                labels = Some(
                    rest.first()
                        .ok_or_else(|| manifest_err(path, lineno, "labels needs a path"))?
                        .to_string(),
                );
            }
            "view" => {
                if rest.len() != 3 {
                    return Err(manifest_err(
                        path,
                        lineno,
                        "view lines are 'view <name> <dim> <path>'",
                    ));
                }
                let dim = rest[1].parse::<usize>().map_err(|_| {
                    manifest_err(path, lineno, &format!("invalid view dim '{}'", rest[1]))
                })?;
                views.push(ViewSpec {
                    name: rest[0].to_string(),
                    dim,
                    path: rest[2].to_string(),
                });
            }
            other => {
                return Err(manifest_err(path, lineno, &format!("unknown key '{other}'")));
            }
        }
    }

    let missing = |what: &str| {
        TmurError::parse(format!("{}: missing '{what}' entry", path.display()))
    };
    let manifest = DatasetManifest {
        name: name.ok_or_else(|| missing("name"))?,
        num_classes: classes.ok_or_else(|| missing("classes"))?,
        num_samples: samples.ok_or_else(|| missing("samples"))?,
        labels_path: labels.ok_or_else(|| missing("labels"))?,
        views,
    };
    if manifest.views.is_empty() {
        return Err(missing("view"));
    }
    Ok(manifest)
}

fn parse_count(
    token: Option<&&str>,
    what: &str,
    path: &Path,
    lineno: usize,
) -> Result<usize> {
    token
        .ok_or_else(|| manifest_err(path, lineno, &format!("{what} needs a value")))?
        .parse::<usize>()
        .map_err(|_| manifest_err(path, lineno, &format!("invalid {what} value")))
}

fn manifest_err(path: &Path, lineno: usize, msg: &str) -> TmurError {
    TmurError::parse(format!("{}:{lineno}: {msg}", path.display()))
}

fn load_labels(path: &Path, expected: usize, num_classes: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)
        .map_err(|e| TmurError::data(format!("cannot read labels {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let y = line.parse::<usize>().map_err(|_| {
            TmurError::parse(format!(
                "{}: row {}: invalid label '{line}'",
                path.display(),
                idx + 1
            ))
        })?;
        if y >= num_classes {
            return Err(TmurError::data(format!(
                "{}: row {}: label {y} out of range for {num_classes} classes",
                path.display(),
                idx + 1
            )));
        }
        labels.push(y);
    }
    if labels.len() != expected {
        return Err(TmurError::data(format!(
            "{}: expected {expected} labels, found {}",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

fn load_view_csv(path: &Path, spec: &ViewSpec, expected_rows: usize) -> Result<DenseArray> {
    let text = fs::read_to_string(path).map_err(|e| {
        TmurError::data(format!(
            "view '{}': cannot read {}: {e}",
            spec.name,
            path.display()
        ))
    })?;
    let mut data = Vec::with_capacity(expected_rows * spec.dim);
    let mut rows = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.split(',').collect();
        if cells.len() != spec.dim {
            return Err(TmurError::data(format!(
                "view '{}': row {} has {} columns, expected {}",
                spec.name,
                idx + 1,
                cells.len(),
                spec.dim
            )));
        }
        for (c, cell) in cells.iter().enumerate() {
            let v = cell.trim().parse::<f64>().map_err(|_| {
                TmurError::parse(format!(
                    "view '{}' ({}): row {}, column {}: invalid number '{}'",
                    spec.name,
                    path.display(),
                    idx + 1,
                    c + 1,
                    cell.trim()
                ))
            })?;
            if !v.is_finite() {
                return Err(TmurError::data(format!(
                    "view '{}': row {}, column {}: non-finite value",
                    spec.name,
                    idx + 1,
                    c + 1
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows != expected_rows {
        return Err(TmurError::data(format!(
            "view '{}': found {rows} rows, manifest declares {expected_rows}",
            spec.name
        )));
    }
    DenseArray::from_vec(expected_rows, spec.dim, data)
}

/// Write `ds` into `dir` as `manifest.txt`, `labels.txt`, and one
/// `view_<name>.csv` per view, using canonical number formatting.
pub fn save_dataset(ds: &MultiViewDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "name {}", ds.name);
    let _ = writeln!(manifest, "classes {}", ds.num_classes);
    let _ = writeln!(manifest, "samples {}", ds.num_samples());
    let _ = writeln!(manifest, "labels labels.txt");
    for (name, view) in ds.view_names.iter().zip(&ds.views) {
        let _ = writeln!(manifest, "view {name} {} view_{name}.csv", view.cols());
    }
    fs::write(dir.join("manifest.txt"), manifest)?;

    let mut labels = String::new();
    for &y in &ds.labels {
        let _ = writeln!(labels, "{y}");
    }
    fs::write(dir.join("labels.txt"), labels)?;

    for (name, view) in ds.view_names.iter().zip(&ds.views) {
        let mut text = String::new();
        for r in 0..view.rows() {
            let row = view.row(r);
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    text.push(',');
                }
                let _ = write!(text, "{v}");
            }
            text.push('\n');
        }
        fs::write(dir.join(format!("view_{name}.csv")), text)?;
    }
    Ok(())
}

/// How reliability varies across samples in synthetic data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReliabilityMode {
    /// Every view keeps the same informativeness for all samples.
    Static,
    /// A latent context decides per sample which of two views carries the
    /// label; the context is a joint property of both views (the parity of
    /// their token bits), so no single view, and no per-view statistic,
    /// reveals which view to trust.
    SampleDependent,
}

/// Recipe for a synthetic dataset.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub num_samples: usize,
    pub num_views: usize,
    pub num_classes: usize,
    pub view_dims: Vec<usize>,
    /// Per view, fraction of coordinates carrying class signal.
    pub informative_fraction: Vec<f64>,
    /// Per view, noise standard deviation on the signal coordinates.
    pub noise_level: Vec<f64>,
    pub reliability: ReliabilityMode,
    pub seed: u64,
}

const SIGNAL_SCALE: f64 = 2.0;

/// Class-conditional Gaussian views. In static mode, view `v` devotes its
/// first `ceil(fraction * dim)` coordinates to the class centroid plus
/// `noise_level * N(0,1)`, with standard-normal distractors elsewhere; at
/// zero noise and full informativeness a nearest-centroid rule is exact.
///
/// In sample-dependent mode (two views), each view carries a token bit and a
/// candidate class; the view whose candidate equals the label is selected by
/// the XOR of the two token bits, and the other view shows a uniformly drawn
/// decoy class.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    validate_spec(spec)?;
    let labels = balanced_labels(spec);
    let views = match spec.reliability {
        ReliabilityMode::Static => generate_static_views(spec, &labels),
        ReliabilityMode::SampleDependent => generate_xor_views(spec, &labels)?,
    };
    let view_names = (0..spec.num_views).map(|v| format!("view{v}")).collect();
    MultiViewDataset::new("synthetic", view_names, views, labels, spec.num_classes)
}

fn validate_spec(spec: &SyntheticSpec) -> Result<()> {
    if spec.num_classes < 2 {
        return Err(TmurError::data("synthetic data needs at least 2 classes"));
    }
    if spec.num_samples < spec.num_classes {
        return Err(TmurError::data(format!(
            "cannot draw {} samples over {} classes",
            spec.num_samples, spec.num_classes
        )));
    }
    if spec.num_views == 0 {
        return Err(TmurError::data("synthetic data needs at least one view"));
    }
    if spec.view_dims.len() != spec.num_views
        || spec.informative_fraction.len() != spec.num_views
        || spec.noise_level.len() != spec.num_views
    {
        return Err(TmurError::data(
            "view_dims, informative_fraction, and noise_level must each have one entry per view",
        ));
    }
    for (v, &f) in spec.informative_fraction.iter().enumerate() {
        if !(0.0..=1.0).contains(&f) {
            return Err(TmurError::data(format!(
                "informative_fraction[{v}] = {f} outside [0, 1]"
            )));
        }
    }
    for (v, &s) in spec.noise_level.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return Err(TmurError::data(format!("noise_level[{v}] = {s} invalid")));
        }
    }
    if spec.reliability == ReliabilityMode::SampleDependent {
        if spec.num_views != 2 {
            return Err(TmurError::data(
                "sample-dependent reliability is defined for exactly two views",
            ));
        }
        for (v, &d) in spec.view_dims.iter().enumerate() {
            if d < 4 {
                return Err(TmurError::data(format!(
                    "sample-dependent views need dim >= 4 (token block + class block), view {v} has {d}"
                )));
            }
        }
    }
    Ok(())
}

fn balanced_labels(spec: &SyntheticSpec) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..spec.num_samples)
        .map(|i| i % spec.num_classes)
        .collect();
    labels.shuffle(&mut seeding::stream(spec.seed, "labels"));
    labels
}

fn class_centroids(spec: &SyntheticSpec, view: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = seeding::stream(spec.seed, &format!("centroids/v{view}"));
    (0..spec.num_classes)
        .map(|_| {
            (0..dim)
                .map(|_| SIGNAL_SCALE * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

fn generate_static_views(spec: &SyntheticSpec, labels: &[usize]) -> Vec<DenseArray> {
    let mut views = Vec::with_capacity(spec.num_views);
    for v in 0..spec.num_views {
        let dim = spec.view_dims[v];
        let informative = (spec.informative_fraction[v] * dim as f64).ceil() as usize;
        let centroids = class_centroids(spec, v, informative);
        let sigma = spec.noise_level[v];
        let mut rng = seeding::stream(spec.seed, &format!("features/v{v}"));
        let mut data = DenseArray::zeros(spec.num_samples, dim);
        for (r, &y) in labels.iter().enumerate() {
            for c in 0..dim {
                let value = if c < informative {
                    centroids[y][c] + sigma * rng.sample::<f64, _>(StandardNormal)
                } else {
                    rng.sample::<f64, _>(StandardNormal)
                };
                data.set(r, c, value);
            }
        }
        views.push(data);
    }
    views
}

/// Token block width of sample-dependent views.
const TOKEN_DIM: usize = 2;

fn generate_xor_views(spec: &SyntheticSpec, labels: &[usize]) -> Result<Vec<DenseArray>> {
    let n = spec.num_samples;
    let mut context = seeding::stream(spec.seed, "context");
    let tokens: Vec<[u8; 2]> = (0..n)
        .map(|_| [context.gen_range(0..2u8), context.gen_range(0..2u8)])
        .collect();
    let mut decoy_rng = seeding::stream(spec.seed, "decoy");
    let decoys: Vec<usize> = (0..n)
        .map(|_| decoy_rng.gen_range(0..spec.num_classes))
        .collect();

    let mut views = Vec::with_capacity(2);
    for v in 0..2 {
        let dim = spec.view_dims[v];
        let class_dim = class_block_dim(spec.informative_fraction[v], dim);
        let mut centroids = class_centroids(spec, v, class_dim);
        // With two classes, use antipodal patterns so neither class carries
        // a magnitude advantage and class identity is purely directional.
        if spec.num_classes == 2 {
            centroids[1] = centroids[0].iter().map(|c| -c).collect();
        }
        let sigma = spec.noise_level[v];
        let mut rng = seeding::stream(spec.seed, &format!("features/v{v}"));
        let mut data = DenseArray::zeros(n, dim);
        for r in 0..n {
            let t = tokens[r][v];
            let informative_view = (tokens[r][0] ^ tokens[r][1]) as usize;
            let candidate = if informative_view == v {
                labels[r]
            } else {
                decoys[r]
            };
            // Token block: +A,-A encodes bit 0 and -A,+A encodes bit 1.
            let sign = if t == 0 { 1.0 } else { -1.0 };
            data.set(r, 0, sign * SIGNAL_SCALE + sigma * rng.sample::<f64, _>(StandardNormal));
            data.set(r, 1, -sign * SIGNAL_SCALE + sigma * rng.sample::<f64, _>(StandardNormal));
            for c in 0..class_dim {
                let value =
                    centroids[candidate][c] + sigma * rng.sample::<f64, _>(StandardNormal);
                data.set(r, TOKEN_DIM + c, value);
            }
            for c in (TOKEN_DIM + class_dim)..dim {
                data.set(r, c, rng.sample::<f64, _>(StandardNormal));
            }
        }
        views.push(data);
    }
    Ok(views)
}

fn class_block_dim(fraction: f64, dim: usize) -> usize {
    let available = dim - TOKEN_DIM;
    ((fraction * available as f64).round() as usize).clamp(2, available)
}

/// Rescale each view by a positive factor, leaving labels and sample order
/// untouched.
pub fn perturb_view_strength(ds: &MultiViewDataset, factors: &[f64]) -> Result<MultiViewDataset> {
    if factors.len() != ds.num_views() {
        return Err(TmurError::data(format!(
            "{} factors for {} views",
            factors.len(),
            ds.num_views()
        )));
    }
    for (v, &f) in factors.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 {
            return Err(TmurError::domain(format!(
                "strength factor for view {v} must be finite and positive, got {f}"
            )));
        }
    }
    let views = ds
        .views
        .iter()
        .zip(factors)
        .map(|(view, &f)| view.map(|x| f * x))
        .collect();
    MultiViewDataset::new(
        ds.name.clone(),
        ds.view_names.clone(),
        views,
        ds.labels.clone(),
        ds.num_classes,
    )
}

/// Seeded per-view strength factors drawn uniformly from `[lo, hi]`.
pub fn random_strength_factors(num_views: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeding::stream(seed, "strength-factors");
    (0..num_views).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Add `sigma * N(0,1)` to every feature of every view. `sigma = 0` returns
/// the dataset bit-identically.
pub fn add_gaussian_noise(
    ds: &MultiViewDataset,
    sigma: f64,
    seed: u64,
) -> Result<MultiViewDataset> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(TmurError::domain(format!(
            "noise level must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(ds.clone());
    }
    let mut views = Vec::with_capacity(ds.num_views());
    for (v, view) in ds.views.iter().enumerate() {
        let mut rng = seeding::stream(seed, &format!("noise/v{v}"));
        let mut out = view.clone();
        for x in out.data_mut() {
            *x += sigma * rng.sample::<f64, _>(StandardNormal);
        }
        views.push(out);
    }
    MultiViewDataset::new(
        ds.name.clone(),
        ds.view_names.clone(),
        views,
        ds.labels.clone(),
        ds.num_classes,
    )
}

/// Per-view, per-coordinate standardization fitted on training data.
/// Coordinates whose standard deviation falls below 1e-12 are left unscaled.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
}

impl Scaler {
    pub fn fit(ds: &MultiViewDataset) -> Self {
        let n = ds.num_samples() as f64;
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for view in &ds.views {
            let mut mean = vec![0.0; view.cols()];
            for r in 0..view.rows() {
                for (c, m) in mean.iter_mut().enumerate() {
                    *m += view.get(r, c);
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            let mut var = vec![0.0; view.cols()];
            for r in 0..view.rows() {
                for (c, s) in var.iter_mut().enumerate() {
                    let d = view.get(r, c) - mean[c];
                    *s += d * d;
                }
            }
            let std: Vec<f64> = var
                .iter()
                .map(|&s| {
                    let sd = (s / n).sqrt();
                    if sd < 1e-12 {
                        1.0
                    } else {
                        sd
                    }
                })
                .collect();
            means.push(mean);
            stds.push(std);
        }
        Scaler { means, stds }
    }

    /// Identity transform for the given view dimensions.
    pub fn identity(view_dims: &[usize]) -> Self {
        Scaler {
            means: view_dims.iter().map(|&d| vec![0.0; d]).collect(),
            stds: view_dims.iter().map(|&d| vec![1.0; d]).collect(),
        }
    }

    pub fn apply(&self, ds: &MultiViewDataset) -> Result<MultiViewDataset> {
        if self.means.len() != ds.num_views() {
            return Err(TmurError::data(format!(
                "scaler fitted on {} views, dataset has {}",
                self.means.len(),
                ds.num_views()
            )));
        }
        let mut views = Vec::with_capacity(ds.num_views());
        for (v, view) in ds.views.iter().enumerate() {
            if self.means[v].len() != view.cols() {
                return Err(TmurError::data(format!(
                    "scaler view {v} has dim {}, dataset view has {}",
                    self.means[v].len(),
                    view.cols()
                )));
            }
            let mut out = DenseArray::zeros(view.rows(), view.cols());
            for r in 0..view.rows() {
                for c in 0..view.cols() {
                    out.set(r, c, (view.get(r, c) - self.means[v][c]) / self.stds[v][c]);
                }
            }
            views.push(out);
        }
        MultiViewDataset::new(
            ds.name.clone(),
            ds.view_names.clone(),
            views,
            ds.labels.clone(),
            ds.num_classes,
        )
    }
}
