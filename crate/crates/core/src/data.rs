//! Datasets, read-only views and stratified splitting.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::chromosome::Chromosome;
use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Immutable labelled instance matrix.
///
/// Values are stored column-major since tree induction scans one feature at a
/// time.
#[derive(Debug, Clone)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<usize>,
    n_samples: usize,
    n_features: usize,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    class_counts: Vec<usize>,
    dropped_rows: usize,
}

impl Dataset {
    /// Builds a dataset from row vectors and dense class indices.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        let feature_names = (0..n_features).map(|j| format!("f{j}")).collect();
        Self::build(rows, labels, class_names, feature_names, 0)
    }

    fn build(
        rows: &[Vec<f64>],
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
        dropped_rows: usize,
    ) -> Result<Self> {
        let n_samples = rows.len();
        if n_samples == 0 {
            return Err(Error::Dataset("no usable rows".into()));
        }
        if labels.len() != n_samples {
            return Err(Error::LengthMismatch {
                expected: n_samples,
                actual: labels.len(),
            });
        }
        let n_features = rows[0].len();
        if n_features == 0 {
            return Err(Error::Dataset("dataset has no feature columns".into()));
        }
        let class_count = class_names.len();
        let mut class_counts = vec![0usize; class_count];
        for &y in &labels {
            if y >= class_count {
                return Err(Error::Dataset(format!(
                    "label {y} outside 0..{class_count}"
                )));
            }
            class_counts[y] += 1;
        }
        if class_count < 2 {
            return Err(Error::Dataset(format!(
                "need at least two classes, found {class_count}"
            )));
        }
        for (c, &n) in class_counts.iter().enumerate() {
            if n < 2 {
                return Err(Error::ClassTooSmall {
                    label: class_names[c].clone(),
                    count: n,
                    required: 2,
                });
            }
        }
        let mut values = vec![0.0; n_samples * n_features];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::LengthMismatch {
                    expected: n_features,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Dataset(format!(
                        "non-finite value at row {i}, column {j}"
                    )));
                }
                values[j * n_samples + i] = v;
            }
        }
        Ok(Self {
            values,
            labels,
            n_samples,
            n_features,
            class_names,
            feature_names,
            class_counts,
            dropped_rows,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::LengthMismatch {
                expected: self.n_features,
                actual: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Original label strings, indexed by dense class index.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Rows excluded at load time because they had missing values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[feature * self.n_samples + row]
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.values[feature * self.n_samples..(feature + 1) * self.n_samples]
    }

    /// A view over every row and column.
    pub fn view(&self) -> DataView<'_> {
        DataView {
            data: self,
            rows: (0..self.n_samples).collect(),
            cols: (0..self.n_features).collect(),
        }
    }
}

/// Selects the class label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    #[default]
    #[serde(skip)]
    Last,
    Index(usize),
    Name(String),
}

fn is_missing(cell: &str) -> bool {
    let cell = cell.trim();
    cell.is_empty() || cell == "?"
}

/// Loads a headed UTF-8 CSV. Rows with an empty or `?` cell are dropped and
/// counted; class labels are mapped to dense indices in order of first
/// appearance.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(csv_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::Dataset(
            "CSV needs a label column and at least one feature column".into(),
        ));
    }
    let label_idx = match label {
        LabelColumn::Last => headers.len() - 1,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::Dataset(format!(
                "label column index {i} out of range ({} columns)",
                headers.len()
            )))
        }
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Dataset(format!("no column named {name:?}")))?,
    };

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut dropped = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Dataset(format!(
                    "row {}: column {:?} value {cell:?} is not a number",
                    line + 2,
                    headers[j]
                ))
            })?;
            row.push(v);
        }
        let name = record[label_idx].trim().to_string();
        let next = class_names.len();
        let y = *class_index.entry(name.clone()).or_insert_with(|| {
            class_names.push(name);
            next
        });
        rows.push(row);
        labels.push(y);
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} rows with missing values", path.display());
    }
    let feature_names = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::build(&rows, labels, class_names, feature_names, dropped)
}

/// Read-only window onto a [`Dataset`]: a subset of rows and an ordered subset
/// of columns. Indices passed to accessors are local to the view.
#[derive(Debug, Clone)]
pub struct DataView<'a> {
    data: &'a Dataset,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl<'a> DataView<'a> {
    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    /// Parent row indices, ascending.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Parent column indices, ascending.
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn class_count(&self) -> usize {
        self.data.class_count()
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data.value(self.rows[row], self.cols[col])
    }

    #[inline]
    pub fn label(&self, row: usize) -> usize {
        self.data.labels[self.rows[row]]
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|&r| self.data.labels[r]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &r in &self.rows {
            counts[self.data.labels[r]] += 1;
        }
        counts
    }

    /// Values of local column `col` for every row of the view.
    pub fn column_values(&self, col: usize) -> Vec<f64> {
        let column = self.data.column(self.cols[col]);
        self.rows.iter().map(|&r| column[r]).collect()
    }

    /// Dense row-major copy of the view.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows.len() * self.cols.len());
        for &r in &self.rows {
            for &c in &self.cols {
                out.push(self.data.value(r, c));
            }
        }
        out
    }

    /// Keeps the columns whose bit in `mask` is set; `mask` is indexed by the
    /// view's local columns.
    pub fn project(&self, mask: &Chromosome) -> Result<DataView<'a>> {
        if mask.len() != self.cols.len() {
            return Err(Error::LengthMismatch {
                expected: self.cols.len(),
                actual: mask.len(),
            });
        }
        if !mask.any() {
            return Err(Error::EmptyMask);
        }
        Ok(DataView {
            data: self.data,
            rows: self.rows.clone(),
            cols: mask.active_indices().into_iter().map(|i| self.cols[i]).collect(),
        })
    }

    /// Restricts to the given parent rows, which must be sorted.
    pub(crate) fn with_rows(&self, rows: Vec<usize>) -> DataView<'a> {
        DataView {
            data: self.data,
            rows,
            cols: self.cols.clone(),
        }
    }
}

/// Parameters of a stratified train/validation partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(validation_fraction: f64, seed: u64) -> Self {
        Self {
            validation_fraction,
            seed,
            stratified: true,
        }
    }

    /// Validation share of a class with `n` members.
    pub fn validation_count(&self, n: usize) -> usize {
        let v = (self.validation_fraction * n as f64).round() as usize;
        v.clamp(1, n.saturating_sub(1))
    }

    fn validate(&self) -> Result<()> {
        let f = self.validation_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::config(
                "validation_fraction",
                format!("must lie in (0, 1), got {f}"),
            ));
        }
        Ok(())
    }
}

/// Splits `view` into (train, validation). For each class the validation
/// count is `round(fraction * n_c)` clamped to `[1, n_c - 1]`; which members
/// go where is a seeded shuffle.
pub fn stratified_split<'a>(
    view: &DataView<'a>,
    spec: &SplitSpec,
) -> Result<(DataView<'a>, DataView<'a>)> {
    spec.validate()?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); view.class_count()];
    for &r in &view.rows {
        by_class[view.data.labels[r]].push(r);
    }
    let mut rng = rng_from(spec.seed, &[crate::seed::tag::SPLIT]);
    let mut train = Vec::with_capacity(view.n_rows());
    let mut validation = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: view.data.class_names[c].clone(),
                count: members.len(),
                required: 2,
            });
        }
        let n_val = spec.validation_count(members.len());
        members.shuffle(&mut rng);
        validation.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok((view.with_rows(train), view.with_rows(validation)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn two_class(counts: [usize; 2]) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                rows.push(vec![i as f64, c as f64, (i * 7 % 5) as f64]);
                labels.push(c);
            }
        }
        Dataset::from_rows(&rows, labels).unwrap()
    }

    fn write_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_csv() {
        let f = write_csv("x,y,class\n1,2,a\n3,4,a\n5,6,b\n7,8,b\n");
        let d = load_csv(f.path(), &LabelColumn::Last).unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.class_count(), 2);
        assert_eq!(d.class_counts(), &[2, 2]);
        assert_eq!(d.class_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.value(2, 1), 6.0);
    }

    #[test]
    fn label_column_by_name_and_index() {
        let f = write_csv("class,x\nb,1\nb,2\na,3\na,4\n");
        let by_name = load_csv(f.path(), &LabelColumn::Name("class".into())).unwrap();
        let by_idx = load_csv(f.path(), &LabelColumn::Index(0)).unwrap();
        assert_eq!(by_name.labels(), by_idx.labels());
        // first-appearance order
        assert_eq!(by_name.class_names()[0], "b");
        assert_eq!(by_name.feature_names(), &["x".to_string()]);
    }

    #[test]
    fn drops_rows_with_missing_cells() {
        let f = write_csv("x,y,c\n1,?,a\n1,2,a\n,3,b\n3,4,a\n5,6,b\n7,8,b\n");
        let d = load_csv(f.path(), &LabelColumn::Last).unwrap();
        assert_eq!(d.n_samples(), 4);
        assert_eq!(d.dropped_rows(), 2);
    }

    #[test]
    fn single_class_csv_is_rejected() {
        let f = write_csv("x,c\n1,a\n2,a\n3,a\n");
        assert!(load_csv(f.path(), &LabelColumn::Last).is_err());
    }

    #[test]
    fn singleton_class_is_rejected() {
        let f = write_csv("x,c\n1,a\n2,a\n3,b\n");
        assert!(matches!(
            load_csv(f.path(), &LabelColumn::Last),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn unreadable_file_is_an_error() {
        assert!(load_csv("/nonexistent/data.csv", &LabelColumn::Last).is_err());
    }

    #[test]
    fn split_of_ten_samples() {
        let d = two_class([5, 5]);
        for seed in 0..20 {
            let (train, val) = stratified_split(&d.view(), &SplitSpec::new(0.3, seed)).unwrap();
            for c in val.class_counts() {
                assert!((1..=2).contains(&c));
            }
            assert_eq!(train.n_rows() + val.n_rows(), 10);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let d = two_class([5, 5]);
        let spec = SplitSpec::new(0.3, 99);
        let (a, b) = stratified_split(&d.view(), &spec).unwrap();
        let (c, e) = stratified_split(&d.view(), &spec).unwrap();
        assert_eq!(a.rows(), c.rows());
        assert_eq!(b.rows(), e.rows());
    }

    #[test]
    fn split_counts_follow_rounding_rule() {
        // Reference: enumerate class indices, shuffle, take round(0.3 * n_c).
        let d = two_class([70, 30]);
        let (train, val) = stratified_split(&d.view(), &SplitSpec::new(0.3, 5)).unwrap();
        assert_eq!(val.class_counts(), vec![21, 9]);
        assert_eq!(train.class_counts(), vec![49, 21]);
    }

    #[test]
    fn project_selects_columns() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..5).map(|j| (i * 10 + j) as f64).collect()).collect();
        let d = Dataset::from_rows(&rows, vec![0, 0, 1, 1]).unwrap();
        let v = d.view().project(&Chromosome::from_bit_str("10100").unwrap()).unwrap();
        assert_eq!(v.cols(), &[0, 2]);
        assert_eq!(v.value(3, 1), 32.0);
        let all = d.view().project(&Chromosome::ones(5)).unwrap();
        assert_eq!(all.to_row_major(), d.view().to_row_major());
        assert!(matches!(
            d.view().project(&Chromosome::zeros(5)),
            Err(Error::EmptyMask)
        ));
    }

    proptest! {
        #[test]
        fn split_partitions_rows(seed in any::<u64>(), frac in 0.05f64..0.95, a in 2usize..40, b in 2usize..40) {
            let d = two_class([a, b]);
            let (train, val) = stratified_split(&d.view(), &SplitSpec::new(frac, seed)).unwrap();
            let mut all: Vec<usize> = train.rows().iter().chain(val.rows()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..a + b).collect::<Vec<_>>());
            for (c, &n) in [a, b].iter().enumerate() {
                let v = val.class_counts()[c];
                prop_assert!(v >= 1 && v < n);
                prop_assert!((v as f64 - frac * n as f64).abs() < 1.0 || v == 1 || v == n - 1);
            }
        }

        #[test]
        fn projection_composes(m1 in proptest::collection::vec(any::<bool>(), 6), m2 in proptest::collection::vec(any::<bool>(), 6)) {
            let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..6).map(|j| (i * 6 + j) as f64).collect()).collect();
            let d = Dataset::from_rows(&rows, vec![0, 1, 0, 1]).unwrap();
            let c1 = Chromosome::from_bools(&m1);
            let c2 = Chromosome::from_bools(&m2);
            let both = c1.and(&c2);
            prop_assume!(c1.any() && both.any());
            let outer = d.view().project(&c1).unwrap();
            // restrict m2 to the columns kept by m1
            let restricted: Vec<bool> = c1.active_indices().iter().map(|&i| m2[i]).collect();
            let composed = outer.project(&Chromosome::from_bools(&restricted)).unwrap();
            let direct = d.view().project(&both).unwrap();
            prop_assert_eq!(composed.cols(), direct.cols());
            prop_assert_eq!(composed.to_row_major(), direct.to_row_major());
        }
    }
}
