use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Labelled feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_bound: f64,
}

impl DataSet {
    /// `labels[i]` is a class id; class names default to the ids.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let names = (0..classes).map(|c| c.to_string()).collect();
        Self::with_class_names(points, labels, names)
    }

    pub fn with_class_names(points: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let d = points.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::invalid("data set needs at least one point with one feature"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::ShapeMismatch {
                    expected: format!("{d} features"),
                    got: format!("{} features in row {i}", p.len()),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite feature in row {i}")));
            }
        }
        if labels.iter().any(|&l| l >= class_names.len()) {
            return Err(Error::invalid("label id without a class name"));
        }
        let mut present: Vec<usize> = labels.clone();
        present.sort_unstable();
        present.dedup();
        if present.len() < 2 {
            return Err(Error::invalid("data set needs at least two classes"));
        }
        let feature_bound = points
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(DataSet {
            points,
            labels,
            class_names,
            feature_bound,
        })
    }

    /// Reads a headed CSV; every column except `label_col` is a feature.
    pub fn from_csv(path: impl AsRef<Path>, label_col: &str) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let label_idx = headers
            .iter()
            .position(|h| h == label_col)
            .ok_or_else(|| Error::config(format!("no column '{label_col}' in {}", path.display())))?;
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let mut features = Vec::with_capacity(record.len().saturating_sub(1));
            for (col, field) in record.iter().enumerate() {
                if col == label_idx {
                    continue;
                }
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::invalid(format!("row {}: '{field}' in column '{}' is not a number", row + 1, &headers[col]))
                })?;
                features.push(v);
            }
            let name = record[label_idx].trim().to_string();
            let next = ids.len();
            let id = *ids.entry(name.clone()).or_insert_with(|| {
                class_names.push(name);
                next
            });
            points.push(features);
            labels.push(id);
        }
        Self::with_class_names(points, labels, class_names)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// `R = max_i ||x_i||`.
    pub fn feature_bound(&self) -> f64 {
        self.feature_bound
    }

    /// Number of points carrying each class id.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_names.len()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn bound_is_computed() {
        let data = DataSet::new(vec![vec![3.0, 4.0], vec![1.0, 0.0]], vec![0, 1]).unwrap();
        assert_eq!(data.feature_bound(), 5.0);
        assert_eq!(data.class_sizes(), vec![1, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DataSet::new(vec![vec![1.0], vec![2.0]], vec![0, 0]).is_err());
        assert!(DataSet::new(vec![vec![1.0], vec![f64::NAN]], vec![0, 1]).is_err());
        assert!(DataSet::new(vec![vec![1.0], vec![2.0, 3.0]], vec![0, 1]).is_err());
        assert!(DataSet::new(vec![vec![1.0]], vec![0, 1]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "f1,species,f2\n0.5,cat,1\n-1,dog,2.5\n3,cat,0").unwrap();
        let data = DataSet::from_csv(file.path(), "species").unwrap();
        assert_eq!(data.dim(), 2);
        assert_eq!(data.point(1), &[-1.0, 2.5]);
        assert_eq!(data.labels(), &[0, 1, 0]);
        assert_eq!(data.class_names(), &["cat".to_string(), "dog".to_string()]);
        assert!(DataSet::from_csv(file.path(), "nope").unwrap_err().is_config());
    }

    #[test]
    fn csv_rejects_non_numeric_and_non_finite() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "x,y\nabc,a\n1,b").unwrap();
        assert!(DataSet::from_csv(file.path(), "y").is_err());
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "x,y\ninf,a\n1,b").unwrap();
        assert!(DataSet::from_csv(file.path(), "y").is_err());
    }
}
