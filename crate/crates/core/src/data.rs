use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Target attached to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Class(u32),
    Real(f64),
}

impl Label {
    pub fn class(&self) -> Option<u32> {
        match *self {
            Label::Class(c) => Some(c),
            Label::Real(_) => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Label::Class(c) => c as f64,
            Label::Real(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    None,
    Categorical { n_classes: u32 },
    Real,
}

impl LabelKind {
    pub fn n_classes(&self) -> Option<u32> {
        match *self {
            LabelKind::Categorical { n_classes } => Some(n_classes),
            _ => None,
        }
    }
}

/// A single point `z`: dense features, an optional label and an id that is
/// stable within its dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: Option<Label>,
}

impl DataPoint {
    pub fn new(id: u64, features: Vec<f64>, label: Option<Label>) -> Self {
        Self { id, features, label }
    }

    pub fn dimension(&self) -> usize {
        self.features.len()
    }

    pub fn class(&self) -> Option<u32> {
        self.label.and_then(|l| l.class())
    }

    pub fn distance_sq(&self, other: &DataPoint) -> f64 {
        squared_distance(&self.features, &other.features)
    }

    /// Total order on point contents, used to canonicalize multisets.
    /// Points that compare equal are interchangeable.
    pub fn content_cmp(&self, other: &DataPoint) -> Ordering {
        self.id
            .cmp(&other.id)
            .then_with(|| {
                for (a, b) in self.features.iter().zip(&other.features) {
                    match a.total_cmp(b) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                self.features.len().cmp(&other.features.len())
            })
            .then_with(|| match (self.label, other.label) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(a), Some(b)) => a.as_f64().total_cmp(&b.as_f64()),
            })
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// An ordered collection of points sharing dimension and label kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<DataPoint>,
    dimension: usize,
    label_kind: LabelKind,
}

impl Dataset {
    /// Validates dimension, finiteness, label kind and id uniqueness.
    pub fn new(dimension: usize, label_kind: LabelKind, points: Vec<DataPoint>) -> Result<Self> {
        let mut ids = std::collections::HashSet::with_capacity(points.len());
        for p in &points {
            if p.features.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: p.features.len(),
                });
            }
            if p.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("non-finite feature in point {}", p.id)));
            }
            check_label(p, label_kind)?;
            if !ids.insert(p.id) {
                return Err(Error::InvalidData(format!("duplicate id {}", p.id)));
            }
        }
        Ok(Self {
            points,
            dimension,
            label_kind,
        })
    }

    /// Builds a dataset from rows, assigning ids `0..n`.
    pub fn from_rows(
        dimension: usize,
        label_kind: LabelKind,
        rows: impl IntoIterator<Item = (Vec<f64>, Option<Label>)>,
    ) -> Result<Self> {
        let points = rows
            .into_iter()
            .enumerate()
            .map(|(i, (f, l))| DataPoint::new(i as u64, f, l))
            .collect();
        Self::new(dimension, label_kind, points)
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<DataPoint> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn label_kind(&self) -> LabelKind {
        self.label_kind
    }

    pub fn get(&self, index: usize) -> Option<&DataPoint> {
        self.points.get(index)
    }

    pub fn find(&self, id: u64) -> Option<&DataPoint> {
        self.points.iter().find(|p| p.id == id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DataPoint> {
        self.points.iter()
    }

    pub fn refs(&self) -> Vec<&DataPoint> {
        self.points.iter().collect()
    }

    /// A dataset with the same schema holding a subset (or reordering) of
    /// points. Ids are kept.
    pub fn with_points(&self, points: Vec<DataPoint>) -> Result<Self> {
        Self::new(self.dimension, self.label_kind, points)
    }

    /// Same points with ids renumbered from `offset`.
    pub fn renumbered(&self, offset: u64) -> Self {
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| DataPoint::new(offset + i as u64, p.features.clone(), p.label))
            .collect();
        Self {
            points,
            dimension: self.dimension,
            label_kind: self.label_kind,
        }
    }

    /// Concatenation; ids must stay unique.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if other.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: other.dimension,
            });
        }
        let kind = merge_label_kinds(self.label_kind, other.label_kind)?;
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Self::new(self.dimension, kind, points)
    }

    /// Reads the dataset CSV format: header `f0,..,f{d-1}[,label]`.
    pub fn read_csv<R: Read>(reader: R, hint: LabelHint) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().map(str::trim).collect();
        let has_label = names.last() == Some(&"label");
        let dimension = names.len() - usize::from(has_label);
        for (j, name) in names.iter().take(dimension).enumerate() {
            if *name != format!("f{j}") {
                return Err(Error::InvalidData(format!(
                    "bad header column {j}: expected f{j}, found {name:?}"
                )));
            }
        }
        let mut rows = Vec::new();
        let mut raw_labels = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != names.len() {
                return Err(Error::InvalidData(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    record.len(),
                    names.len()
                )));
            }
            let features = record
                .iter()
                .take(dimension)
                .map(|v| parse_f64(v, line))
                .collect::<Result<Vec<f64>>>()?;
            if has_label {
                raw_labels.push(record.get(dimension).unwrap_or("").trim().to_string());
            }
            rows.push(features);
        }
        let (kind, labels) = if has_label {
            resolve_labels(&raw_labels, hint)?
        } else {
            (LabelKind::None, vec![None; rows.len()])
        };
        Self::from_rows(dimension, kind, rows.into_iter().zip(labels))
    }

    pub fn read_csv_path(path: impl AsRef<Path>, hint: LabelHint) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(std::io::BufReader::new(file), hint)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header: Vec<String> = (0..self.dimension).map(|j| format!("f{j}")).collect();
        let has_label = self.label_kind != LabelKind::None;
        if has_label {
            header.push("label".into());
        }
        wtr.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = p.features.iter().map(|v| v.to_string()).collect();
            if has_label {
                row.push(match p.label {
                    Some(Label::Class(c)) => c.to_string(),
                    Some(Label::Real(v)) => v.to_string(),
                    None => String::new(),
                });
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a DataPoint;
    type IntoIter = std::slice::Iter<'a, DataPoint>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// How to interpret the `label` column of a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelHint {
    /// Categorical if every label is a non-negative integer, else real.
    #[default]
    Auto,
    Categorical,
    Real,
}

fn parse_f64(v: &str, line: usize) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("row {}: cannot parse {v:?}", line + 1)))?;
    if !x.is_finite() {
        return Err(Error::InvalidData(format!("row {}: non-finite value", line + 1)));
    }
    Ok(x)
}

fn resolve_labels(raw: &[String], hint: LabelHint) -> Result<(LabelKind, Vec<Option<Label>>)> {
    let as_classes: Option<Vec<u32>> = raw.iter().map(|s| s.parse::<u32>().ok()).collect();
    let categorical = match hint {
        LabelHint::Categorical => true,
        LabelHint::Real => false,
        LabelHint::Auto => as_classes.is_some(),
    };
    if categorical {
        let classes =
            as_classes.ok_or_else(|| Error::InvalidData("categorical labels must be non-negative integers".into()))?;
        let n_classes = classes.iter().max().map_or(0, |&c| c + 1);
        let labels = classes.into_iter().map(|c| Some(Label::Class(c))).collect();
        Ok((LabelKind::Categorical { n_classes }, labels))
    } else {
        let labels = raw
            .iter()
            .enumerate()
            .map(|(i, s)| parse_f64(s, i).map(|v| Some(Label::Real(v))))
            .collect::<Result<Vec<_>>>()?;
        Ok((LabelKind::Real, labels))
    }
}

fn check_label(p: &DataPoint, kind: LabelKind) -> Result<()> {
    let ok = match (kind, p.label) {
        (LabelKind::None, None) => true,
        (LabelKind::Categorical { n_classes }, Some(Label::Class(c))) => c < n_classes,
        (LabelKind::Real, Some(Label::Real(v))) => v.is_finite(),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidData(format!(
            "label of point {} does not match label kind {kind:?}",
            p.id
        )))
    }
}

fn merge_label_kinds(a: LabelKind, b: LabelKind) -> Result<LabelKind> {
    match (a, b) {
        (LabelKind::Categorical { n_classes: x }, LabelKind::Categorical { n_classes: y }) => {
            Ok(LabelKind::Categorical { n_classes: x.max(y) })
        }
        (x, y) if x == y => Ok(x),
        (x, y) => Err(Error::InvalidData(format!("label kinds differ: {x:?} vs {y:?}"))),
    }
}

/// Per-feature affine transform `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population (1/N) statistics; zero-variance columns get scale 1.
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a [f64]>, dimension: usize) -> Result<Self> {
        let rows: Vec<&[f64]> = points.into_iter().collect();
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dimension];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dimension];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let points = data
            .points
            .iter()
            .map(|p| DataPoint::new(p.id, self.transform(&p.features), p.label))
            .collect();
        Dataset {
            points,
            dimension: data.dimension,
            label_kind: data.label_kind,
        }
    }
}

/// Standardizes every feature column to mean 0 and population stddev 1.
/// Returns the transform so held-out data can be mapped identically.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardizer)> {
    let transform = Standardizer::fit(data.iter().map(|p| p.features.as_slice()), data.dimension)?;
    Ok((transform.apply(data), transform))
}

/// `k` i.i.d. uniform draws with replacement from `db`.
pub fn sample_subset<'a>(db: &'a Dataset, k: usize, rng: &mut Stream) -> Result<Vec<&'a DataPoint>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if db.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((0..k).map(|_| &db.points[rng.uniform_index(db.len())]).collect())
}
