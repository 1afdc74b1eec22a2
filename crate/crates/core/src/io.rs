//! File formats and serialization: dataset manifests, feature/pair CSVs,
//! model bundles with checksums, and the CSV report writers.
//!
//! Formats:
//! - feature CSV: `id,x0,...,x{d-1}`, one file per view per side;
//! - pair CSV: `left_id,right_id,label{1|0},fold` (fold 0 = unassigned);
//! - fold CSV (optional): `left_id,right_id,fold`, overrides pair folds;
//! - manifest: JSON naming the views (left/right file per view), the pair
//!   file, the optional fold file, and the shared view dimension;
//! - model bundle: a directory with a versioned JSON header, one CSV per
//!   matrix (shape header line, then rows), and a checksum file.
//!
//! Floats are written with Rust's shortest-roundtrip formatting, so a
//! write/read cycle reproduces every value bit-exactly. All writes are
//! atomic (temp file + rename).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::CvReport;
use crate::pairs::{Dataset, PairSet};
use crate::scoring::ScoredPair;
use crate::tensor::Tensor;
use crate::wccn::{Method, VerificationModel, WccnStack};

pub const BUNDLE_VERSION: u32 = 1;

/// One view of the dataset: a name and the two per-side feature files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewEntry {
    pub name: String,
    pub left: String,
    pub right: String,
}

/// Dataset manifest; file paths are relative to the manifest location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub view_dim: usize,
    pub views: Vec<ViewEntry>,
    pub pair_file: String,
    #[serde(default)]
    pub fold_file: Option<String>,
}

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    std::io::Write::write_all(&mut tmp.as_file(), bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses one feature CSV: returns ids and vectors in row order.
fn load_feature_file(path: &Path, dim: usize) -> Result<(Vec<String>, Vec<DVector<f64>>)> {
    let text = read_to_string(path)?;
    let mut ids = Vec::new();
    let mut seen = HashMap::new();
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields
            .next()
            .ok_or_else(|| parse_err(path, line_no, "empty row"))?
            .trim()
            .to_string();
        if id.is_empty() {
            return Err(parse_err(path, line_no, "empty sample id"));
        }
        if let Some(prev) = seen.insert(id.clone(), line_no) {
            return Err(parse_err(
                path,
                line_no,
                format!("duplicate id '{id}' (first seen on line {prev})"),
            ));
        }
        let mut values = Vec::with_capacity(dim);
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| {
                parse_err(path, line_no, format!("malformed float '{}'", f.trim()))
            })?;
            values.push(v);
        }
        if values.len() != dim {
            return Err(parse_err(
                path,
                line_no,
                format!("row has {} features, manifest says {dim}", values.len()),
            ));
        }
        ids.push(id);
        rows.push(DVector::from_vec(values));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "no samples"));
    }
    Ok((ids, rows))
}

/// Loads one side (all views) and stacks each sample into a d x V tensor,
/// view v in column v. Ids must agree across views in value and order.
fn load_side(
    base: &Path,
    manifest: &DatasetManifest,
    pick: impl Fn(&ViewEntry) -> &str,
) -> Result<(Vec<String>, Vec<Tensor>)> {
    let d = manifest.view_dim;
    let n_views = manifest.views.len();
    let mut ids: Option<Vec<String>> = None;
    let mut per_view = Vec::with_capacity(n_views);
    for view in &manifest.views {
        let path = base.join(pick(view));
        let (view_ids, rows) = load_feature_file(&path, d)?;
        match &ids {
            None => ids = Some(view_ids),
            Some(expected) => {
                if *expected != view_ids {
                    let first_bad = expected
                        .iter()
                        .zip(view_ids.iter())
                        .position(|(a, b)| a != b)
                        .map(|i| i + 1)
                        .unwrap_or(expected.len().min(view_ids.len()) + 1);
                    return Err(parse_err(
                        &path,
                        first_bad,
                        format!(
                            "sample ids disagree with view '{}'",
                            manifest.views[0].name
                        ),
                    ));
                }
            }
        }
        per_view.push(rows);
    }
    let ids = ids.unwrap();
    let mut tensors = Vec::with_capacity(ids.len());
    for i in 0..ids.len() {
        let mut data = Vec::with_capacity(d * n_views);
        for rows in &per_view {
            data.extend_from_slice(rows[i].as_slice());
        }
        tensors.push(Tensor::new(vec![d, n_views], data)?);
    }
    Ok((ids, tensors))
}

struct RawPair {
    left: usize,
    right: usize,
    label: bool,
    fold: u32,
}

fn load_pair_file(
    path: &Path,
    left_ids: &HashMap<String, usize>,
    right_ids: &HashMap<String, usize>,
) -> Result<Vec<RawPair>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected left_id,right_id,label,fold, got {} fields", fields.len()),
            ));
        }
        let left = *left_ids.get(fields[0]).ok_or_else(|| {
            parse_err(path, line_no, format!("unknown left id '{}'", fields[0]))
        })?;
        let right = *right_ids.get(fields[1]).ok_or_else(|| {
            parse_err(path, line_no, format!("unknown right id '{}'", fields[1]))
        })?;
        let label = match fields[2] {
            "1" => true,
            "0" => false,
            other => {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("label must be 1 or 0, got '{other}'"),
                ))
            }
        };
        let fold: u32 = fields[3]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("malformed fold '{}'", fields[3])))?;
        out.push(RawPair {
            left,
            right,
            label,
            fold,
        });
    }
    if out.is_empty() {
        return Err(parse_err(path, 0, "no pairs"));
    }
    Ok(out)
}

/// Loads a dataset and its pair set from a manifest file.
pub fn load_dataset(manifest_path: &Path) -> Result<(Dataset, PairSet)> {
    let text = read_to_string(manifest_path)?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| parse_err(manifest_path, e.line(), e.to_string()))?;
    if manifest.views.is_empty() {
        return Err(parse_err(manifest_path, 0, "manifest lists no views"));
    }
    if manifest.view_dim == 0 {
        return Err(parse_err(manifest_path, 0, "view_dim must be >= 1"));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let (left_ids, left) = load_side(base, &manifest, |v| &v.left)?;
    let (right_ids, right) = load_side(base, &manifest, |v| &v.right)?;
    if left.len() != right.len() {
        return Err(Error::ShapeMismatch(format!(
            "left side has {} samples, right side {}",
            left.len(),
            right.len()
        )));
    }
    let ds = Dataset::new(left, right)?;

    let index_of = |ids: &[String]| -> HashMap<String, usize> {
        ids.iter().cloned().zip(0..).collect()
    };
    let left_index = index_of(&left_ids);
    let right_index = index_of(&right_ids);
    let pair_path = base.join(&manifest.pair_file);
    let mut raw = load_pair_file(&pair_path, &left_index, &right_index)?;

    if let Some(fold_file) = &manifest.fold_file {
        let fold_path = base.join(fold_file);
        apply_fold_file(&fold_path, &left_index, &right_index, &mut raw)?;
    }

    let mut positives = Vec::new();
    let mut pos_folds = Vec::new();
    let mut negatives = Vec::new();
    let mut neg_folds = Vec::new();
    for p in raw {
        if p.label {
            positives.push((p.left, p.right));
            pos_folds.push(p.fold);
        } else {
            negatives.push((p.left, p.right));
            neg_folds.push(p.fold);
        }
    }
    pos_folds.extend(neg_folds);
    let pairs = PairSet::new(positives, negatives, Some(pos_folds), ds.len())?;
    Ok((ds, pairs))
}

fn apply_fold_file(
    path: &Path,
    left_ids: &HashMap<String, usize>,
    right_ids: &HashMap<String, usize>,
    raw: &mut [RawPair],
) -> Result<()> {
    let text = read_to_string(path)?;
    let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, p) in raw.iter().enumerate() {
        by_pair.entry((p.left, p.right)).or_default().push(i);
    }
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected left_id,right_id,fold, got {} fields", fields.len()),
            ));
        }
        let left = *left_ids.get(fields[0]).ok_or_else(|| {
            parse_err(path, line_no, format!("unknown left id '{}'", fields[0]))
        })?;
        let right = *right_ids.get(fields[1]).ok_or_else(|| {
            parse_err(path, line_no, format!("unknown right id '{}'", fields[1]))
        })?;
        let fold: u32 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("malformed fold '{}'", fields[2])))?;
        let hits = by_pair.get(&(left, right)).ok_or_else(|| {
            parse_err(
                path,
                line_no,
                format!("pair ({},{}) not in the pair list", fields[0], fields[1]),
            )
        })?;
        for &i in hits {
            raw[i].fold = fold;
        }
    }
    Ok(())
}

/// Writes the dataset as manifest + CSV files into `dir`. Left ids are
/// `p<i>`, right ids `c<i>`; pair rows list positives then negatives.
pub fn save_dataset(dir: &Path, ds: &Dataset, pairs: &PairSet) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (d, n_views) = match ds.shape() {
        [d] => (*d, 1usize),
        [d, v] => (*d, *v),
        other => {
            return Err(Error::InvalidArgument(format!(
                "can only save order-1 or order-2 sample tensors, got shape {other:?}"
            )))
        }
    };

    let view_col = |t: &Tensor, v: usize| -> Vec<f64> {
        // canonical layout: view v occupies the contiguous block [v*d, (v+1)*d)
        t.data()[v * d..(v + 1) * d].to_vec()
    };
    let mut views = Vec::with_capacity(n_views);
    for v in 0..n_views {
        let write_side = |samples: &[Tensor], prefix: &str, file: &str| -> Result<()> {
            let mut text = String::new();
            for (i, t) in samples.iter().enumerate() {
                write!(text, "{prefix}{i}").unwrap();
                for x in view_col(t, v) {
                    write!(text, ",{x}").unwrap();
                }
                text.push('\n');
            }
            write_atomic(&dir.join(file), text.as_bytes())
        };
        let left_file = format!("view_{v}_left.csv");
        let right_file = format!("view_{v}_right.csv");
        write_side(ds.left_samples(), "p", &left_file)?;
        write_side(ds.right_samples(), "c", &right_file)?;
        views.push(ViewEntry {
            name: format!("view_{v}"),
            left: left_file,
            right: right_file,
        });
    }

    let mut text = String::new();
    for (i, &(l, r)) in pairs.positives().iter().enumerate() {
        writeln!(text, "p{l},c{r},1,{}", pairs.fold_of(i)).unwrap();
    }
    let base = pairs.positives().len();
    for (j, &(l, r)) in pairs.negatives().iter().enumerate() {
        writeln!(text, "p{l},c{r},0,{}", pairs.fold_of(base + j)).unwrap();
    }
    write_atomic(&dir.join("pairs.csv"), text.as_bytes())?;

    let manifest = DatasetManifest {
        view_dim: d,
        views,
        pair_file: "pairs.csv".into(),
        fold_file: None,
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    write_atomic(&manifest_path, json.as_bytes())?;
    Ok(manifest_path)
}

// ---------------------------------------------------------------------------
// matrix CSV
// ---------------------------------------------------------------------------

fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut text = String::new();
    writeln!(text, "{},{}", m.nrows(), m.ncols()).unwrap();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                text.push(',');
            }
            write!(text, "{}", m[(i, j)]).unwrap();
        }
        text.push('\n');
    }
    text
}

fn matrix_from_csv(path: &Path, text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing shape header"))?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(parse_err(path, 1, "shape header must be rows,cols"));
    }
    let rows: usize = dims[0]
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, "malformed row count"))?;
    let cols: usize = dims[1]
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, "malformed column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        for f in line.split(',') {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(path, ln + 1, format!("malformed float '{f}'")))?;
            data.push(v);
        }
    }
    if data.len() != rows * cols {
        return Err(parse_err(
            path,
            0,
            format!("expected {} values, found {}", rows * cols, data.len()),
        ));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

// ---------------------------------------------------------------------------
// model bundle
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct BundleHeader {
    version: u32,
    method: String,
    input_shape: Vec<usize>,
    /// Number of projection matrices (0 for the raw-cosine method).
    modes: usize,
    wccn: bool,
}

const CHECKSUM_FILE: &str = "checksums.txt";
const HEADER_FILE: &str = "model.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Saves a fitted model as a bundle directory: versioned header, one CSV
/// per matrix, and a checksum file over everything else.
pub fn save_model(model: &VerificationModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = BundleHeader {
        version: BUNDLE_VERSION,
        method: model.method.name().to_string(),
        input_shape: model.input_shape.clone(),
        modes: model.projections.len(),
        wccn: model.wccn.is_some(),
    };
    let mut files: Vec<(String, String)> = Vec::new();
    files.push((
        HEADER_FILE.to_string(),
        serde_json::to_string_pretty(&header).map_err(|e| Error::InvalidArgument(e.to_string()))?,
    ));
    for (k, w) in model.projections.iter().enumerate() {
        files.push((format!("w_{k}.csv"), matrix_to_csv(w)));
    }
    if let Some(stack) = &model.wccn {
        for (k, g) in stack.g_per_mode.iter().enumerate() {
            files.push((format!("g_{k}.csv"), matrix_to_csv(g)));
        }
        for (k, c) in stack.c_per_mode.iter().enumerate() {
            files.push((format!("c_{k}.csv"), matrix_to_csv(c)));
        }
        for (k, d) in stack.d_per_mode.iter().enumerate() {
            files.push((format!("d_{k}.csv"), matrix_to_csv(d)));
        }
    }
    let mut checks = String::new();
    for (name, content) in &files {
        writeln!(checks, "{}  {}", sha256_hex(content.as_bytes()), name).unwrap();
        write_atomic(&dir.join(name), content.as_bytes())?;
    }
    write_atomic(&dir.join(CHECKSUM_FILE), checks.as_bytes())?;
    Ok(())
}

/// Loads a model bundle, verifying the checksum of every listed file.
pub fn load_model(dir: &Path) -> Result<VerificationModel> {
    let checks_path = dir.join(CHECKSUM_FILE);
    let checks = read_to_string(&checks_path)?;
    let mut contents: HashMap<String, String> = HashMap::new();
    for (ln, line) in checks.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (expected, name) = line.split_once("  ").ok_or_else(|| {
            parse_err(&checks_path, ln + 1, "malformed checksum line")
        })?;
        let path = dir.join(name);
        let content = read_to_string(&path)?;
        let actual = sha256_hex(content.as_bytes());
        if actual != expected {
            return Err(Error::Corrupted(format!(
                "checksum mismatch for {name}: expected {expected}, got {actual}"
            )));
        }
        contents.insert(name.to_string(), content);
    }

    let header_text = contents
        .get(HEADER_FILE)
        .ok_or_else(|| Error::Corrupted(format!("{HEADER_FILE} not covered by checksums")))?;
    let header: BundleHeader = serde_json::from_str(header_text)
        .map_err(|e| Error::Corrupted(format!("bad header: {e}")))?;
    if header.version != BUNDLE_VERSION {
        return Err(Error::VersionMismatch {
            found: header.version,
            expected: BUNDLE_VERSION,
        });
    }
    let method = Method::parse(&header.method)?;

    let get_matrix = |name: String| -> Result<DMatrix<f64>> {
        let content = contents
            .get(&name)
            .ok_or_else(|| Error::Corrupted(format!("{name} missing from bundle")))?;
        matrix_from_csv(&dir.join(&name), content)
    };
    let mut projections = Vec::with_capacity(header.modes);
    for k in 0..header.modes {
        projections.push(get_matrix(format!("w_{k}.csv"))?);
    }
    let wccn = if header.wccn {
        let mut g = Vec::new();
        let mut c = Vec::new();
        let mut d = Vec::new();
        for k in 0..header.modes {
            g.push(get_matrix(format!("g_{k}.csv"))?);
            c.push(get_matrix(format!("c_{k}.csv"))?);
            d.push(get_matrix(format!("d_{k}.csv"))?);
        }
        Some(WccnStack {
            g_per_mode: g,
            c_per_mode: c,
            d_per_mode: d,
        })
    } else {
        None
    };
    Ok(VerificationModel {
        method,
        input_shape: header.input_shape,
        projections,
        wccn,
    })
}

// ---------------------------------------------------------------------------
// report CSVs
// ---------------------------------------------------------------------------

/// Score dump: `pair_id,score,label,fold`.
pub fn scores_to_csv(scores: &[ScoredPair]) -> String {
    let mut text = String::from("pair_id,score,label,fold\n");
    for s in scores {
        writeln!(
            text,
            "{},{},{},{}",
            s.pair_id,
            s.score,
            if s.label { 1 } else { 0 },
            s.fold
        )
        .unwrap();
    }
    text
}

/// Cross-validation report: per-fold rows `method,fold,accuracy` followed
/// by one `method,mean,accuracy` summary row per method.
pub fn report_to_csv(reports: &[CvReport]) -> String {
    let mut text = String::from("method,fold,accuracy\n");
    for r in reports {
        for f in &r.folds {
            writeln!(text, "{},{},{}", r.method, f.fold, f.accuracy).unwrap();
        }
    }
    for r in reports {
        writeln!(text, "{},mean,{}", r.method, r.mean_accuracy).unwrap();
    }
    text
}

/// ROC dump: `threshold,fpr,tpr` rows in descending threshold order.
pub fn roc_to_csv(roc: &crate::evaluation::RocCurve) -> String {
    let mut text = String::from("threshold,fpr,tpr\n");
    for p in &roc.points {
        writeln!(text, "{},{},{}", p.threshold, p.fpr, p.tpr).unwrap();
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthConfig};
    use crate::wccn::{fit_pipeline, PipelineConfig};

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn matrix_csv_roundtrip_is_bit_exact() {
        let m = DMatrix::from_row_slice(
            2,
            3,
            &[1.0 / 3.0, -2.5e-17, 7.25, f64::MIN_POSITIVE, 1e300, -0.0],
        );
        let text = matrix_to_csv(&m);
        let back = matrix_from_csv(Path::new("x"), &text).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn dataset_save_load_roundtrip() {
        let dir = tmpdir();
        let cfg = SynthConfig {
            seed: 3,
            families: 6,
            views: 2,
            view_dim: 4,
            latent_dim: 2,
            kin_signal: 1.0,
            within_noise: 0.3,
            nuisance_noise: 0.1,
            pairs_per_relation: 6,
        };
        let (ds, mut pairs) = generate_synthetic(&cfg).unwrap();
        pairs.assign_folds(2, 9).unwrap();
        let manifest = save_dataset(dir.path(), &ds, &pairs).unwrap();
        let (ds2, pairs2) = load_dataset(&manifest).unwrap();
        assert_eq!(ds.len(), ds2.len());
        assert_eq!(pairs, pairs2);
        for i in 0..ds.len() {
            assert_eq!(ds.left(i), ds2.left(i));
            assert_eq!(ds.right(i), ds2.right(i));
        }
    }

    #[test]
    fn single_view_manifest_gives_vector_like_tensors() {
        let dir = tmpdir();
        let cfg = SynthConfig {
            seed: 5,
            families: 4,
            views: 1,
            view_dim: 3,
            latent_dim: 2,
            kin_signal: 1.0,
            within_noise: 0.1,
            nuisance_noise: 0.0,
            pairs_per_relation: 4,
        };
        let (ds, pairs) = generate_synthetic(&cfg).unwrap();
        let manifest = save_dataset(dir.path(), &ds, &pairs).unwrap();
        let (ds2, _) = load_dataset(&manifest).unwrap();
        assert_eq!(ds2.shape(), &[3, 1]);
    }

    #[test]
    fn hand_written_fixture_loads_field_by_field() {
        let dir = tmpdir();
        // 3 samples per side, 2 views, dim 2
        let files = [
            ("v0_left.csv", "a,1.0,2.0\nb,3.0,4.0\nd,5.0,6.0\n"),
            ("v1_left.csv", "a,10.0,20.0\nb,30.0,40.0\nd,50.0,60.0\n"),
            ("v0_right.csv", "x,-1.0,-2.0\ny,-3.0,-4.0\nz,-5.0,-6.0\n"),
            ("v1_right.csv", "x,-10.0,-20.0\ny,-30.0,-40.0\nz,-50.0,-60.0\n"),
            ("pairs.csv", "a,x,1,1\nb,y,1,2\na,y,0,1\nd,z,0,2\n"),
        ];
        for (name, content) in files {
            fs::write(dir.path().join(name), content).unwrap();
        }
        let manifest = DatasetManifest {
            view_dim: 2,
            views: vec![
                ViewEntry {
                    name: "v0".into(),
                    left: "v0_left.csv".into(),
                    right: "v0_right.csv".into(),
                },
                ViewEntry {
                    name: "v1".into(),
                    left: "v1_left.csv".into(),
                    right: "v1_right.csv".into(),
                },
            ],
            pair_file: "pairs.csv".into(),
            fold_file: None,
        };
        let mpath = dir.path().join("manifest.json");
        fs::write(&mpath, serde_json::to_string(&manifest).unwrap()).unwrap();
        let (ds, pairs) = load_dataset(&mpath).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.shape(), &[2, 2]);
        // sample 'b': view0 = (3,4), view1 = (30,40)
        assert_eq!(ds.left(1).get(&[0, 0]), 3.0);
        assert_eq!(ds.left(1).get(&[1, 0]), 4.0);
        assert_eq!(ds.left(1).get(&[0, 1]), 30.0);
        assert_eq!(ds.left(1).get(&[1, 1]), 40.0);
        assert_eq!(pairs.positives(), &[(0, 0), (1, 1)]);
        assert_eq!(pairs.negatives(), &[(0, 1), (2, 2)]);
        assert_eq!(pairs.folds(), &[1, 2, 1, 2]);
    }

    #[test]
    fn mismatched_view_dims_error_names_file_and_line() {
        let dir = tmpdir();
        fs::write(dir.path().join("v0_left.csv"), "a,1.0,2.0\n").unwrap();
        fs::write(dir.path().join("v1_left.csv"), "a,1.0\n").unwrap();
        fs::write(dir.path().join("v0_right.csv"), "x,1.0,2.0\n").unwrap();
        fs::write(dir.path().join("v1_right.csv"), "x,1.0,2.0\n").unwrap();
        fs::write(dir.path().join("pairs.csv"), "a,x,1,1\n").unwrap();
        let manifest = DatasetManifest {
            view_dim: 2,
            views: vec![
                ViewEntry {
                    name: "v0".into(),
                    left: "v0_left.csv".into(),
                    right: "v0_right.csv".into(),
                },
                ViewEntry {
                    name: "v1".into(),
                    left: "v1_left.csv".into(),
                    right: "v1_right.csv".into(),
                },
            ],
            pair_file: "pairs.csv".into(),
            fold_file: None,
        };
        let mpath = dir.path().join("manifest.json");
        fs::write(&mpath, serde_json::to_string(&manifest).unwrap()).unwrap();
        match load_dataset(&mpath) {
            Err(Error::Parse { file, line, msg }) => {
                assert!(file.to_string_lossy().contains("v1_left.csv"));
                assert_eq!(line, 1);
                assert!(msg.contains("manifest says 2"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tmpdir();
        fs::write(dir.path().join("v0_left.csv"), "a,1.0\na,2.0\n").unwrap();
        fs::write(dir.path().join("v0_right.csv"), "x,1.0\ny,2.0\n").unwrap();
        fs::write(dir.path().join("pairs.csv"), "a,x,1,1\n").unwrap();
        let manifest = DatasetManifest {
            view_dim: 1,
            views: vec![ViewEntry {
                name: "v0".into(),
                left: "v0_left.csv".into(),
                right: "v0_right.csv".into(),
            }],
            pair_file: "pairs.csv".into(),
            fold_file: None,
        };
        let mpath = dir.path().join("manifest.json");
        fs::write(&mpath, serde_json::to_string(&manifest).unwrap()).unwrap();
        match load_dataset(&mpath) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("duplicate id"), "{msg}");
            }
            other => panic!("expected duplicate-id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_reported() {
        let dir = tmpdir();
        assert!(matches!(
            load_dataset(&dir.path().join("manifest.json")),
            Err(Error::MissingFile(_))
        ));
    }

    fn small_fitted_model(method: Method) -> (Dataset, PairSet, VerificationModel) {
        let cfg = SynthConfig {
            seed: 11,
            families: 10,
            views: 2,
            view_dim: 5,
            latent_dim: 2,
            kin_signal: 1.0,
            within_noise: 0.5,
            nuisance_noise: 0.2,
            pairs_per_relation: 10,
        };
        let (ds, pairs) = generate_synthetic(&cfg).unwrap();
        let pcfg = PipelineConfig {
            dims: None,
            max_iterations: 5,
            epsilon: 1e-6,
            rho: 1e-3,
        };
        let model = fit_pipeline(
            method,
            &ds,
            &pairs.positives().to_vec(),
            &pairs.negatives().to_vec(),
            &pcfg,
        )
        .unwrap();
        (ds, pairs, model)
    }

    #[test]
    fn model_bundle_roundtrip_sild() {
        let dir = tmpdir();
        let (ds, pairs, model) = small_fitted_model(Method::Sild);
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        assert_eq!(loaded.method, model.method);
        let a = crate::scoring::score_pairs(&model, &ds, &pairs).unwrap();
        let b = crate::scoring::score_pairs(&loaded, &ds, &pairs).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.score.to_bits(), y.score.to_bits());
        }
    }

    #[test]
    fn model_bundle_roundtrip_msida_wccn() {
        let dir = tmpdir();
        let (ds, pairs, model) = small_fitted_model(Method::MsidaWccn);
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        assert!(loaded.wccn.is_some());
        let a = crate::scoring::score_pairs(&model, &ds, &pairs).unwrap();
        let b = crate::scoring::score_pairs(&loaded, &ds, &pairs).unwrap();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(b.iter()).take(20) {
            assert_eq!(x.score.to_bits(), y.score.to_bits());
        }
    }

    #[test]
    fn truncated_bundle_file_is_corruption() {
        let dir = tmpdir();
        let (_, _, model) = small_fitted_model(Method::Sild);
        save_model(&model, dir.path()).unwrap();
        // truncate a matrix file
        let victim = dir.path().join("w_0.csv");
        let text = fs::read_to_string(&victim).unwrap();
        fs::write(&victim, &text[..text.len() / 2]).unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::Corrupted(_))
        ));
    }

    #[test]
    fn version_mismatch_detected() {
        let dir = tmpdir();
        let (_, _, model) = small_fitted_model(Method::Ssc);
        save_model(&model, dir.path()).unwrap();
        // rewrite the header with a future version and a fresh checksum file
        let header = fs::read_to_string(dir.path().join(HEADER_FILE)).unwrap();
        let bumped = header.replace("\"version\": 1", "\"version\": 99");
        fs::write(dir.path().join(HEADER_FILE), &bumped).unwrap();
        let checks = format!("{}  {}\n", sha256_hex(bumped.as_bytes()), HEADER_FILE);
        fs::write(dir.path().join(CHECKSUM_FILE), checks).unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::VersionMismatch { found: 99, .. })
        ));
    }
}
