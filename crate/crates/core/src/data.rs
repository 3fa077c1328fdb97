//! Multi-view datasets and their on-disk format.
//!
//! A dataset is described by a TOML manifest:
//!
//! ```toml
//! version = 1
//! labels = "labels.txt"          # or an inline array: [1, -1, 1]
//! views = [{ path = "view1.svm", dim = 3 }, "view2.svm"]
//! ```
//!
//! Each view file holds one data point per line as space-separated
//! `index:value` pairs with 1-based indices. Manifest order defines the view
//! index. Paths are resolved relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::inference::LabelTuple;

pub const MANIFEST_VERSION: u32 = 1;

/// A sparse feature vector with dense semantics. Entries are sorted by index,
/// indices are unique, and stored values are non-zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Builds a row from 0-based `(index, value)` pairs. Zero values are dropped.
    pub fn new(mut entries: Vec<(usize, f64)>) -> std::result::Result<Self, usize> {
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(w[0].0);
        }
        entries.retain(|e| e.1 != 0.0);
        Ok(SparseRow { entries })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseRow {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|e| e.0)
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * w[i]).sum()
    }

    /// `out += scale * self`
    pub fn add_scaled_to(&self, out: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            out[i] += scale * v;
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.add_scaled_to(&mut out, 1.0);
        out
    }
}

/// One view: `n` rows in a `dim`-dimensional feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    dim: usize,
    rows: Vec<SparseRow>,
}

impl View {
    pub fn new(dim: usize, rows: Vec<SparseRow>) -> Self {
        View { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }
}

/// `n` labeled points observed through `m` views. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<View>,
    labels: LabelTuple,
}

impl MultiViewDataset {
    /// Validates and assembles a dataset. Labels must be `+1` or `-1`.
    pub fn new(views: Vec<View>, labels: Vec<i8>) -> Result<Self> {
        check_parts(&views, &labels)?;
        Ok(MultiViewDataset {
            views,
            labels: LabelTuple::new(labels)?,
        })
    }

    /// Dense constructor, `views[j][i]` is the feature vector of point `i` in
    /// view `j`. Dimensions come from the first row of each view.
    pub fn from_dense(views: Vec<Vec<Vec<f64>>>, labels: Vec<i8>) -> Result<Self> {
        let views = views
            .into_iter()
            .enumerate()
            .map(|(j, rows)| {
                let dim = rows.first().map_or(0, Vec::len);
                if let Some(i) = rows.iter().position(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "view {j} row {i} has length {}, expected {dim}",
                        rows[i].len()
                    )));
                }
                Ok(View::new(
                    dim,
                    rows.iter().map(|r| SparseRow::from_dense(r)).collect(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(views, labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(View::dim).collect()
    }

    pub fn dim(&self, j: usize) -> usize {
        self.views[j].dim
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn view(&self, j: usize) -> &View {
        &self.views[j]
    }

    pub fn labels(&self) -> &LabelTuple {
        &self.labels
    }

    pub fn num_positive(&self) -> usize {
        self.labels.count_positive()
    }

    /// Re-checks every dataset invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        check_parts(&self.views, self.labels.as_slice())
    }
}

fn check_parts(views: &[View], labels: &[i8]) -> Result<()> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidDataset("dataset has no points".into()));
    }
    if views.is_empty() {
        return Err(Error::InvalidDataset("dataset has no views".into()));
    }
    if let Some(row) = labels.iter().position(|&v| v != 1 && v != -1) {
        return Err(Error::InvalidLabel {
            row,
            value: labels[row].to_string(),
        });
    }
    for (j, view) in views.iter().enumerate() {
        if view.dim == 0 {
            return Err(Error::InvalidDataset(format!("view {j} has dimension 0")));
        }
        if view.rows.len() != n {
            return Err(Error::RowCountMismatch {
                view: j,
                expected: n,
                found: view.rows.len(),
            });
        }
        for (i, row) in view.rows.iter().enumerate() {
            if row.entries.iter().any(|e| !e.1.is_finite()) {
                return Err(Error::NonFinite { view: j, row: i });
            }
            if let Some(w) = row.entries.windows(2).find(|w| w[0].0 >= w[1].0) {
                return Err(Error::DuplicateIndex {
                    view: j,
                    row: i,
                    index: w[1].0 + 1,
                });
            }
            if let Some(max) = row.max_index() {
                if max >= view.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "view {j} row {i} uses index {} beyond dimension {}",
                        max + 1,
                        view.dim
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    version: u32,
    labels: LabelSource,
    views: Vec<ViewEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LabelSource {
    Path(String),
    Inline(Vec<i64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ViewEntry {
    Path(String),
    Spec { path: String, dim: Option<usize> },
}

impl ViewEntry {
    fn path(&self) -> &str {
        match self {
            ViewEntry::Path(p) | ViewEntry::Spec { path: p, .. } => p,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            ViewEntry::Path(_) => None,
            ViewEntry::Spec { dim, .. } => *dim,
        }
    }
}

/// Parsed manifest with paths resolved against the manifest directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub labels: ManifestLabels,
    pub views: Vec<ManifestView>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifestLabels {
    File(PathBuf),
    Inline(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestView {
    pub path: PathBuf,
    pub dim: Option<usize>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: ManifestFile = toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        if raw.version != MANIFEST_VERSION {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                msg: format!("unsupported version {}", raw.version),
            });
        }
        if raw.views.is_empty() {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                msg: "no views listed".into(),
            });
        }
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let labels = match raw.labels {
            LabelSource::Path(p) => ManifestLabels::File(base.join(p)),
            LabelSource::Inline(v) => ManifestLabels::Inline(v),
        };
        let views = raw
            .views
            .iter()
            .map(|v| ManifestView {
                path: base.join(v.path()),
                dim: v.dim(),
            })
            .collect();
        Ok(Manifest {
            version: raw.version,
            labels,
            views,
        })
    }
}

/// Reads a manifest and every file it references into a validated dataset.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let manifest = Manifest::read(path.as_ref())?;
    let labels = match &manifest.labels {
        ManifestLabels::File(p) => read_labels(p)?,
        ManifestLabels::Inline(v) => v
            .iter()
            .enumerate()
            .map(|(row, &l)| label_value(row, l, &l.to_string()))
            .collect::<Result<Vec<_>>>()?,
    };
    let mut views = Vec::with_capacity(manifest.views.len());
    for (j, mv) in manifest.views.iter().enumerate() {
        let (rows, max_index) = read_view_file(&mv.path, j)?;
        if rows.len() != labels.len() {
            return Err(Error::RowCountMismatch {
                view: j,
                expected: labels.len(),
                found: rows.len(),
            });
        }
        let dim = match mv.dim {
            Some(d) if d < max_index => {
                return Err(Error::Manifest {
                    path: path.as_ref().to_path_buf(),
                    msg: format!("view {j} declares dim {d} but uses index {max_index}"),
                })
            }
            Some(d) => d,
            None => max_index,
        };
        views.push(View::new(dim, rows));
    }
    MultiViewDataset::new(views, labels)
}

fn label_value(row: usize, v: i64, raw: &str) -> Result<i8> {
    match v {
        1 => Ok(1),
        -1 => Ok(-1),
        _ => Err(Error::InvalidLabel {
            row,
            value: raw.to_string(),
        }),
    }
}

/// One label per line, `+1`/`1` or `-1`.
pub fn read_labels(path: &Path) -> Result<Vec<i8>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(row, line)| {
            let t = line.trim();
            if t.is_empty() {
                return Err(Error::parse(path, row + 1, "blank line"));
            }
            let v: i64 = t.parse().map_err(|_| Error::InvalidLabel {
                row,
                value: t.to_string(),
            })?;
            label_value(row, v, t)
        })
        .collect()
}

/// Parses one view file. Returns the rows and the largest 1-based index seen
/// (explicit zeros included).
pub fn read_view_file(path: &Path, view: usize) -> Result<(Vec<SparseRow>, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut max_index = 0usize;
    for (row, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            return Err(Error::parse(path, row + 1, "blank line"));
        }
        let mut entries = Vec::new();
        for tok in line.split_ascii_whitespace() {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(path, row + 1, format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(path, row + 1, format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(Error::parse(path, row + 1, "indices are 1-based"));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| Error::parse(path, row + 1, format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(Error::NonFinite { view, row });
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        let parsed = SparseRow::new(entries).map_err(|dup| Error::DuplicateIndex {
            view,
            row,
            index: dup + 1,
        })?;
        rows.push(parsed);
    }
    Ok((rows, max_index))
}

/// Shortest decimal text that parses back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn view_line(row: &SparseRow) -> String {
    if row.entries.is_empty() {
        // blank lines are not allowed, so an all-zero row is written explicitly
        return "1:0".to_string();
    }
    let mut s = String::new();
    for (k, &(i, v)) in row.entries.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{}:{}", i + 1, fmt_f64(v));
    }
    s
}

/// Writes `manifest.toml`, `labels.txt` and `view{j}.svm` into `dir` and
/// returns the manifest path. Dimensions are declared explicitly so that
/// trailing all-zero features survive the round trip.
pub fn write_dataset(ds: &MultiViewDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut labels = String::new();
    for y in ds.labels().iter() {
        labels.push_str(if y > 0 { "+1\n" } else { "-1\n" });
    }
    let label_path = dir.join("labels.txt");
    fs::write(&label_path, labels).map_err(|e| Error::io(&label_path, e))?;

    let mut entries = Vec::new();
    for (j, view) in ds.views().iter().enumerate() {
        let name = format!("view{}.svm", j + 1);
        let mut text = String::new();
        for row in view.rows() {
            text.push_str(&view_line(row));
            text.push('\n');
        }
        let p = dir.join(&name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        entries.push(format!("{{ path = \"{name}\", dim = {} }}", view.dim()));
    }

    let manifest = format!(
        "version = {MANIFEST_VERSION}\nlabels = \"labels.txt\"\nviews = [\n  {},\n]\n",
        entries.join(",\n  ")
    );
    let mpath = dir.join("manifest.toml");
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    Ok(mpath)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn two_view_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.svm", "1:1 2:0.5\n2:1\n1:-1\n1:0.25 3:2\n");
        write(dir.path(), "b.svm", "1:1\n1:2\n2:1\n2:-3\n");
        dir
    }

    #[test]
    fn loads_two_views_with_inline_labels() {
        let dir = two_view_dir();
        write(
            dir.path(),
            "m.toml",
            "version = 1\nlabels = [1, 1, -1, -1]\nviews = [\"a.svm\", \"b.svm\"]\n",
        );
        let ds = load_manifest(dir.path().join("m.toml")).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.m(), 2);
        assert_eq!(ds.dims(), vec![3, 2]);
        assert_eq!(ds.labels().as_slice(), &[1, 1, -1, -1]);
        assert_eq!(ds.view(0).row(3).to_dense(3), vec![0.25, 0.0, 2.0]);
    }

    #[test]
    fn declared_dim_and_label_file() {
        let dir = two_view_dir();
        write(dir.path(), "labels.txt", "+1\n1\n-1\n-1\n");
        write(
            dir.path(),
            "m.toml",
            "version = 1\nlabels = \"labels.txt\"\nviews = [{ path = \"a.svm\", dim = 7 }, \"b.svm\"]\n",
        );
        let ds = load_manifest(dir.path().join("m.toml")).unwrap();
        assert_eq!(ds.dims(), vec![7, 2]);

        write(
            dir.path(),
            "bad.toml",
            "version = 1\nlabels = \"labels.txt\"\nviews = [{ path = \"a.svm\", dim = 2 }, \"b.svm\"]\n",
        );
        assert!(matches!(
            load_manifest(dir.path().join("bad.toml")),
            Err(Error::Manifest { .. })
        ));
    }

    #[test]
    fn row_count_mismatch() {
        let dir = two_view_dir();
        write(dir.path(), "b.svm", "1:1\n1:2\n2:1\n");
        write(
            dir.path(),
            "m.toml",
            "version = 1\nlabels = [1, 1, -1, -1]\nviews = [\"a.svm\", \"b.svm\"]\n",
        );
        assert!(matches!(
            load_manifest(dir.path().join("m.toml")),
            Err(Error::RowCountMismatch { view: 1, expected: 4, found: 3 })
        ));
    }

    #[test]
    fn duplicate_index() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.svm", "3:0.5 3:0.7\n");
        assert!(matches!(
            read_view_file(&dir.path().join("a.svm"), 0),
            Err(Error::DuplicateIndex { index: 3, row: 0, .. })
        ));
    }

    #[test]
    fn rejects_blank_lines_nan_and_zero_index() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.svm", "1:1\n\n1:2\n");
        assert!(matches!(
            read_view_file(&dir.path().join("a.svm"), 0),
            Err(Error::Parse { line: 2, .. })
        ));
        write(dir.path(), "b.svm", "1:NaN\n");
        assert!(matches!(
            read_view_file(&dir.path().join("b.svm"), 0),
            Err(Error::NonFinite { .. })
        ));
        write(dir.path(), "c.svm", "0:1\n");
        assert!(read_view_file(&dir.path().join("c.svm"), 0).is_err());
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "m.toml",
            "version = 1\nlabels = [1]\nviews = [\"nope.svm\"]\n",
        );
        assert!(matches!(
            load_manifest(dir.path().join("m.toml")),
            Err(Error::Io { .. })
        ));
        assert!(matches!(
            load_manifest(dir.path().join("absent.toml")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn bad_label_in_file() {
        let dir = two_view_dir();
        write(dir.path(), "labels.txt", "1\n1\n0\n-1\n");
        write(
            dir.path(),
            "m.toml",
            "version = 1\nlabels = \"labels.txt\"\nviews = [\"a.svm\", \"b.svm\"]\n",
        );
        assert!(matches!(
            load_manifest(dir.path().join("m.toml")),
            Err(Error::InvalidLabel { row: 2, .. })
        ));
    }

    #[test]
    fn inferred_dim_counts_explicit_zero() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.svm", "1:1 5:0\n2:1\n");
        let (rows, max) = read_view_file(&dir.path().join("a.svm"), 0).unwrap();
        assert_eq!(max, 5);
        assert_eq!(rows[0].entries(), &[(0, 1.0)]);
    }

    #[test]
    fn validate_reports_first_violation() {
        let good = MultiViewDataset::from_dense(
            vec![vec![vec![1.0], vec![2.0], vec![3.0]]],
            vec![1, -1, 1],
        )
        .unwrap();
        assert!(good.validate().is_ok());

        let bad = MultiViewDataset::from_dense(
            vec![vec![vec![1.0], vec![2.0], vec![3.0]]],
            vec![1, -1, 0],
        );
        assert!(matches!(bad, Err(Error::InvalidLabel { row: 2, .. })));

        let nan = MultiViewDataset::from_dense(
            vec![vec![vec![1.0], vec![f64::NAN]]],
            vec![1, -1],
        );
        assert!(matches!(nan, Err(Error::NonFinite { view: 0, row: 1 })));
    }

    #[test]
    fn round_trip_preserves_zero_rows() {
        let ds = MultiViewDataset::from_dense(
            vec![
                vec![vec![0.0, 0.0, 0.0], vec![1.5, 0.0, -1e-300]],
                vec![vec![0.1], vec![0.0]],
            ],
            vec![-1, 1],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(&ds, dir.path()).unwrap();
        let back = load_manifest(&m).unwrap();
        assert_eq!(back, ds);
    }
}
