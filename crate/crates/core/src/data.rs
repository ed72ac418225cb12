//! Datasets, class partitions and CSV ingestion.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::path::Path;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use crate::error::{CgcError, Result};

/// Smallest class size accepted when a dataset is built.
pub const MIN_CLASS_SIZE: usize = 2;

/// Partition of `n` observations into `K` classes.
///
/// Class ids are dense (`0..K`) and assigned in order of first appearance of
/// each label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassIndex {
    names: Vec<String>,
    assignments: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl ClassIndex {
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut assignments = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            let next = ids.len();
            let id = *ids.entry(label).or_insert_with(|| {
                names.push(label.to_string());
                next
            });
            assignments.push(id);
        }
        Self::from_assignments(assignments, names)
    }

    /// Build from precomputed class ids; `names[k]` labels class `k`.
    pub fn from_assignments(assignments: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let k = names.len();
        let mut members = vec![Vec::new(); k];
        for (i, &c) in assignments.iter().enumerate() {
            if c >= k {
                return Err(CgcError::invalid(format!(
                    "class id {c} at row {i} out of range for {k} classes"
                )));
            }
            members[c].push(i);
        }
        if k < 2 {
            return Err(CgcError::TooFewClasses(k));
        }
        for (c, m) in members.iter().enumerate() {
            if m.len() < MIN_CLASS_SIZE {
                return Err(CgcError::ClassTooSmall {
                    label: names[c].clone(),
                    size: m.len(),
                    min: MIN_CLASS_SIZE,
                });
            }
        }
        Ok(Self {
            names,
            assignments,
            members,
        })
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Class id of every row.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// `n_k / n` per class.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.members.iter().map(|m| m.len() as f64 / n).collect()
    }

    pub fn min_class_size(&self) -> usize {
        self.members.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// The label of each row, as strings.
    pub fn labels(&self) -> impl Iterator<Item = &str> + '_ {
        self.assignments.iter().map(|&c| self.names[c].as_str())
    }
}

fn check_finite(m: &ArrayView2<f64>, what: &str) -> Result<()> {
    if let Some(((r, c), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(CgcError::invalid(format!(
            "{what} entry ({r}, {c}) is not finite: {v}"
        )));
    }
    Ok(())
}

fn default_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("{prefix}{j}")).collect()
}

/// Numeric features with a categorical label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    classes: ClassIndex,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, classes: ClassIndex) -> Result<Self> {
        let names = default_names("f", features.ncols());
        Self::with_names(features, names, classes)
    }

    pub fn from_labels<S: AsRef<str>>(features: Array2<f64>, labels: &[S]) -> Result<Self> {
        Self::new(features, ClassIndex::from_labels(labels)?)
    }

    pub fn with_names(
        features: Array2<f64>,
        feature_names: Vec<String>,
        classes: ClassIndex,
    ) -> Result<Self> {
        if features.nrows() != classes.n() {
            return Err(CgcError::invalid(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                classes.n()
            )));
        }
        if features.ncols() == 0 {
            return Err(CgcError::invalid("at least one feature column is required"));
        }
        if feature_names.len() != features.ncols() {
            return Err(CgcError::invalid("feature name count does not match columns"));
        }
        check_finite(&features.view(), "feature")?;
        Ok(Self {
            features: features.as_standard_layout().into_owned(),
            feature_names,
            classes,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn classes(&self) -> &ClassIndex {
        &self.classes
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Two predictor groups `x` (n×p) and `y` (n×q) sharing one label vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    x: Array2<f64>,
    y: Array2<f64>,
    x_names: Vec<String>,
    y_names: Vec<String>,
    classes: ClassIndex,
}

impl PairedDataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>, classes: ClassIndex) -> Result<Self> {
        let xn = default_names("x", x.ncols());
        let yn = default_names("y", y.ncols());
        Self::with_names(x, y, xn, yn, classes)
    }

    pub fn with_names(
        x: Array2<f64>,
        y: Array2<f64>,
        x_names: Vec<String>,
        y_names: Vec<String>,
        classes: ClassIndex,
    ) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(CgcError::invalid("p must be >= 1 (no x columns)"));
        }
        if y.ncols() == 0 {
            return Err(CgcError::invalid("q must be >= 1 (no y columns)"));
        }
        if x.nrows() != classes.n() || y.nrows() != classes.n() {
            return Err(CgcError::invalid(format!(
                "row counts differ: x has {}, y has {}, labels {}",
                x.nrows(),
                y.nrows(),
                classes.n()
            )));
        }
        if x_names.len() != x.ncols() || y_names.len() != y.ncols() {
            return Err(CgcError::invalid("column name count does not match columns"));
        }
        check_finite(&x.view(), "x")?;
        check_finite(&y.view(), "y")?;
        Ok(Self {
            x: x.as_standard_layout().into_owned(),
            y: y.as_standard_layout().into_owned(),
            x_names,
            y_names,
            classes,
        })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn y_names(&self) -> &[String] {
        &self.y_names
    }

    pub fn classes(&self) -> &ClassIndex {
        &self.classes
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    /// Exchange the two groups.
    pub fn swapped(&self) -> PairedDataset {
        PairedDataset {
            x: self.y.clone(),
            y: self.x.clone(),
            x_names: self.y_names.clone(),
            y_names: self.x_names.clone(),
            classes: self.classes.clone(),
        }
    }

    pub fn x_dataset(&self) -> LabeledDataset {
        LabeledDataset {
            features: self.x.clone(),
            feature_names: self.x_names.clone(),
            classes: self.classes.clone(),
        }
    }

    pub fn y_dataset(&self) -> LabeledDataset {
        LabeledDataset {
            features: self.y.clone(),
            feature_names: self.y_names.clone(),
            classes: self.classes.clone(),
        }
    }
}

/// Column-wise concatenation `[x | y]` of a paired dataset.
pub fn concat_features(d: &PairedDataset) -> LabeledDataset {
    let features = concatenate(Axis(1), &[d.x.view(), d.y.view()])
        .expect("x and y share the row count");
    let mut names = d.x_names.clone();
    names.extend(d.y_names.iter().cloned());
    LabeledDataset {
        features,
        feature_names: names,
        classes: d.classes.clone(),
    }
}

/// Columns `start..end` of a labeled dataset.
pub fn slice_columns(d: &LabeledDataset, start: usize, end: usize) -> Result<LabeledDataset> {
    if start >= end || end > d.dim() {
        return Err(CgcError::invalid(format!(
            "column range {start}..{end} invalid for {} columns",
            d.dim()
        )));
    }
    Ok(LabeledDataset {
        features: d.features.slice(s![.., start..end]).to_owned(),
        feature_names: d.feature_names[start..end].to_vec(),
        classes: d.classes.clone(),
    })
}

/// A CSV column reference: header name or 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
    /// Inclusive 0-based index range.
    Range(usize, usize),
}

impl ColumnSelector {
    /// Parse one selector. Integers become indices, `a-b` an inclusive range,
    /// anything else a name. A header that literally matches still wins at
    /// resolution time.
    pub fn parse(s: &str) -> ColumnSelector {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            return ColumnSelector::Index(i);
        }
        if let Some((a, b)) = s.split_once('-') {
            if let (Ok(a), Ok(b)) = (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
                return ColumnSelector::Range(a, b);
            }
        }
        ColumnSelector::Name(s.to_string())
    }

    /// Comma-separated list of selectors; empty items are ignored.
    pub fn parse_list(s: &str) -> Vec<ColumnSelector> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(ColumnSelector::parse)
            .collect()
    }

    fn resolve(&self, header: &[String]) -> Result<Vec<usize>> {
        let raw = match self {
            ColumnSelector::Name(n) => n.clone(),
            ColumnSelector::Index(i) => i.to_string(),
            ColumnSelector::Range(a, b) => format!("{a}-{b}"),
        };
        if let Some(pos) = header.iter().position(|h| *h == raw) {
            return Ok(vec![pos]);
        }
        match *self {
            ColumnSelector::Name(_) => Err(CgcError::MissingColumn(raw)),
            ColumnSelector::Index(i) if i < header.len() => Ok(vec![i]),
            ColumnSelector::Range(a, b) if a <= b && b < header.len() => Ok((a..=b).collect()),
            _ => Err(CgcError::MissingColumn(raw)),
        }
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Name(n) => f.write_str(n),
            ColumnSelector::Index(i) => write!(f, "{i}"),
            ColumnSelector::Range(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

fn resolve_all(selectors: &[ColumnSelector], header: &[String]) -> Result<Vec<usize>> {
    let mut cols = Vec::new();
    for s in selectors {
        for c in s.resolve(header)? {
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
    }
    Ok(cols)
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|source| CgcError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let rows = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(RawTable { header, rows })
}

impl RawTable {
    fn matrix(&self, cols: &[usize]) -> Result<Array2<f64>> {
        let mut m = Array2::zeros((self.rows.len(), cols.len()));
        for (r, rec) in self.rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let cell = rec.get(c).unwrap_or("").trim();
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| CgcError::NonNumeric {
                        row: r + 1,
                        column: self.header[c].clone(),
                        value: cell.to_string(),
                    })?;
                m[[r, j]] = v;
            }
        }
        Ok(m)
    }

    fn labels(&self, col: usize) -> Result<Vec<String>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                let v = rec.get(col).unwrap_or("").trim();
                if v.is_empty() {
                    Err(CgcError::invalid(format!("missing label at row {}", r + 1)))
                } else {
                    Ok(v.to_string())
                }
            })
            .collect()
    }

    fn names(&self, cols: &[usize]) -> Vec<String> {
        cols.iter().map(|&c| self.header[c].clone()).collect()
    }

    fn label_column(&self, label: &ColumnSelector) -> Result<usize> {
        match label.resolve(&self.header)?.as_slice() {
            [c] => Ok(*c),
            _ => Err(CgcError::invalid(format!(
                "label selector `{label}` must name exactly one column"
            ))),
        }
    }
}

/// Load a single-group dataset. With no `feature_columns`, every column other
/// than the label is a feature.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &ColumnSelector,
    feature_columns: Option<&[ColumnSelector]>,
) -> Result<LabeledDataset> {
    let table = read_table(path.as_ref())?;
    let label = table.label_column(label_column)?;
    let cols = match feature_columns {
        Some(sel) => resolve_all(sel, &table.header)?,
        None => (0..table.header.len()).filter(|&c| c != label).collect(),
    };
    if cols.contains(&label) {
        return Err(CgcError::invalid("label column selected as a feature"));
    }
    let features = table.matrix(&cols)?;
    let classes = ClassIndex::from_labels(&table.labels(label)?)?;
    LabeledDataset::with_names(features, table.names(&cols), classes)
}

pub fn load_paired_csv(
    path: impl AsRef<Path>,
    label_column: &ColumnSelector,
    x_columns: &[ColumnSelector],
    y_columns: &[ColumnSelector],
) -> Result<PairedDataset> {
    let table = read_table(path.as_ref())?;
    let label = table.label_column(label_column)?;
    let xc = resolve_all(x_columns, &table.header)?;
    let yc = resolve_all(y_columns, &table.header)?;
    if xc.is_empty() {
        return Err(CgcError::invalid("p must be >= 1 (no x columns)"));
    }
    if yc.is_empty() {
        return Err(CgcError::invalid("q must be >= 1 (no y columns)"));
    }
    if let Some(c) = xc.iter().find(|c| yc.contains(c)) {
        return Err(CgcError::invalid(format!(
            "column `{}` selected in both x and y",
            table.header[*c]
        )));
    }
    if xc.contains(&label) || yc.contains(&label) {
        return Err(CgcError::invalid("label column selected as a feature"));
    }
    let x = table.matrix(&xc)?;
    let y = table.matrix(&yc)?;
    let classes = ClassIndex::from_labels(&table.labels(label)?)?;
    PairedDataset::with_names(x, y, table.names(&xc), table.names(&yc), classes)
}

fn write_rows(
    path: &Path,
    header: Vec<String>,
    labels: Vec<&str>,
    columns: &[ArrayView2<f64>],
) -> Result<()> {
    let file = File::create(path).map_err(|source| CgcError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.to_string()];
        for m in columns {
            rec.extend(m.row(i).iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| CgcError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `label,<features...>`. Values use shortest round-trip formatting, so
/// reloading reproduces them bit-exactly.
pub fn write_csv(d: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut header = vec!["label".to_string()];
    header.extend(d.feature_names.iter().cloned());
    write_rows(
        path.as_ref(),
        header,
        d.classes.labels().collect(),
        &[d.features.view()],
    )
}

/// Write `label,<x...>,<y...>`.
pub fn write_paired_csv(d: &PairedDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut header = vec!["label".to_string()];
    header.extend(d.x_names.iter().cloned());
    header.extend(d.y_names.iter().cloned());
    write_rows(
        path.as_ref(),
        header,
        d.classes.labels().collect(),
        &[d.x.view(), d.y.view()],
    )
}
