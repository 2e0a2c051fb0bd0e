//! Labeled multivariate data: validation, synthesis, normalization, cluster
//! centers, the coordinate-wise network encoding, and file formats.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `m` points of dimension `n` with dense class labels in `1..=K`.
///
/// Values are interpreted in raw units until [`DataSet::normalize`] is
/// applied; the glyph and RadViz pipelines require values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "DataSetMeta::is_empty")]
    meta: DataSetMeta,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSetMeta {
    /// Original label strings by class id (index k-1), when ingested from CSV.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_names: Vec<String>,
}

impl DataSetMeta {
    fn is_empty(&self) -> bool {
        self.label_names.is_empty() && self.feature_names.is_empty()
    }
}

impl DataSet {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let d = DataSet {
            points,
            labels,
            meta: DataSetMeta::default(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_meta(mut self, meta: DataSetMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.points.len();
        if m < 2 {
            return Err(Error::invalid_argument("a dataset needs at least 2 points"));
        }
        let n = self.points[0].len();
        if n < 2 {
            return Err(Error::invalid_argument(
                "a dataset needs at least 2 coordinates",
            ));
        }
        if self.labels.len() != m {
            return Err(Error::invalid_argument(format!(
                "{} labels for {} points",
                self.labels.len(),
                m
            )));
        }
        for (i, row) in self.points.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid_argument(format!(
                    "row {i} has {} values, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid_argument(format!(
                    "non-finite value at row {i}, coordinate {j}"
                )));
            }
        }
        let k = self.class_count();
        if k == 0 {
            return Err(Error::invalid_argument("labels must be at least 1"));
        }
        let mut present = vec![false; k];
        for &label in &self.labels {
            if label == 0 || label > k {
                return Err(Error::invalid_argument(format!(
                    "label {label} outside 1..={k}"
                )));
            }
            present[label - 1] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::invalid_argument(format!(
                "class {} has no points; labels must be dense in 1..=K",
                missing + 1
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.points.len()
    }

    pub fn cols(&self) -> usize {
        self.points[0].len()
    }

    /// Number of classes K (labels are dense `1..=K`).
    pub fn class_count(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, row: usize) -> &[f64] {
        &self.points[row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn meta(&self) -> &DataSetMeta {
        &self.meta
    }

    pub fn column(&self, coord: usize) -> Vec<f64> {
        self.points.iter().map(|row| row[coord]).collect()
    }

    /// True when every value already lies inside `[0, 1]`.
    pub fn is_unit_range(&self) -> bool {
        self.points
            .iter()
            .flatten()
            .all(|&v| (0.0..=1.0).contains(&v))
    }

    /// Independent min-max scaling of each column to `[0, 1]`.
    /// Constant columns map to 0.5 so that glyph radii stay non-degenerate.
    pub fn normalize(&self) -> DataSet {
        let n = self.cols();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for row in &self.points {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let points = self
            .points
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let span = hi[j] - lo[j];
                        if span == 0.0 {
                            0.5
                        } else {
                            (v - lo[j]) / span
                        }
                    })
                    .collect()
            })
            .collect();
        DataSet {
            points,
            labels: self.labels.clone(),
            meta: self.meta.clone(),
        }
    }
}

/// Per-class arithmetic means with the point-to-center assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterCenters {
    /// K rows of dimension n; row `k-1` is the mean of class `k`.
    pub centers: Vec<Vec<f64>>,
    /// Center row index (0-based) for each point.
    pub assignment: Vec<usize>,
}

pub fn compute_cluster_centers(d: &DataSet) -> ClusterCenters {
    let k = d.class_count();
    let n = d.cols();
    let mut sums = vec![vec![0.0; n]; k];
    let mut counts = vec![0usize; k];
    for (row, &label) in d.points().iter().zip(d.labels()) {
        counts[label - 1] += 1;
        for (j, &v) in row.iter().enumerate() {
            sums[label - 1][j] += v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        for v in sum.iter_mut() {
            *v /= count as f64;
        }
    }
    ClusterCenters {
        centers: sums,
        assignment: d.labels().iter().map(|&l| l - 1).collect(),
    }
}

/// Coordinate-wise input tokens for the networks: `tokens[i][j]` holds the
/// j-th point's value on coordinate i and the matching cluster-center value.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateEncoding {
    pub tokens: Vec<Vec<[f64; 2]>>,
}

impl CoordinateEncoding {
    pub fn coordinates(&self) -> usize {
        self.tokens.len()
    }

    pub fn points(&self) -> usize {
        self.tokens[0].len()
    }
}

pub fn encode_coordinates(d: &DataSet, centers: &ClusterCenters) -> Result<CoordinateEncoding> {
    if !d.is_unit_range() {
        return Err(Error::invalid_argument(
            "coordinate encoding expects a normalized dataset",
        ));
    }
    if centers.assignment.len() != d.rows() {
        return Err(Error::invalid_argument(
            "cluster assignment length does not match dataset",
        ));
    }
    let n = d.cols();
    let m = d.rows();
    let mut tokens = vec![vec![[0.0; 2]; m]; n];
    for j in 0..m {
        let center = &centers.centers[centers.assignment[j]];
        for (i, token_row) in tokens.iter_mut().enumerate() {
            token_row[j] = [d.point(j)[i], center[i]];
        }
    }
    Ok(CoordinateEncoding { tokens })
}

/// Synthetic generation parameters. Class `k` draws its mean uniformly from
/// `mean_range` per coordinate and a shared standard deviation from
/// `sigma_range`; points are i.i.d. Gaussian around the class mean.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rows: usize,
    pub cols: usize,
    pub classes: usize,
    pub sigma_range: (f64, f64),
    pub mean_range: (f64, f64),
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(rows: usize, cols: usize, classes: usize, seed: u64) -> Self {
        SynthConfig {
            rows,
            cols,
            classes,
            sigma_range: (0.1, 0.3),
            mean_range: (10.0, 100.0),
            seed,
        }
    }
}

pub fn synth_dataset(cfg: &SynthConfig) -> Result<DataSet> {
    if cfg.rows < cfg.classes {
        return Err(Error::invalid_argument(format!(
            "{} points cannot cover {} classes",
            cfg.rows, cfg.classes
        )));
    }
    if cfg.classes == 0 {
        return Err(Error::invalid_argument("need at least one class"));
    }
    for (name, (lo, hi)) in [
        ("sigma_range", cfg.sigma_range),
        ("mean_range", cfg.mean_range),
    ] {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid_argument(format!("empty {name}")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = cfg.rows / cfg.classes;
    let extra = cfg.rows % cfg.classes;
    let mut points = Vec::with_capacity(cfg.rows);
    let mut labels = Vec::with_capacity(cfg.rows);
    for class in 1..=cfg.classes {
        let size = base + usize::from(class <= extra);
        let mean: Vec<f64> = (0..cfg.cols)
            .map(|_| uniform_in(&mut rng, cfg.mean_range))
            .collect();
        let sigma = uniform_in(&mut rng, cfg.sigma_range);
        for _ in 0..size {
            let row = mean
                .iter()
                .map(|&mu| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + sigma * z
                })
                .collect();
            points.push(row);
            labels.push(class);
        }
    }
    DataSet::new(points, labels)
}

fn uniform_in(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Reads a CSV with a header row; every column except `label_column` must be
/// numeric. Labels are remapped to dense `1..=K` in first-appearance order
/// and the raw strings are kept in the metadata.
pub fn load_csv(path: &Path, label_column: &str) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Parse {
            row: 1,
            column: label_column.to_string(),
            message: "label column not found in header".to_string(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    for (rec_index, record) in reader.records().enumerate() {
        let row_number = rec_index + 2; // 1-based, counting the header line
        let record = record.map_err(|e| Error::Parse {
            row: row_number,
            column: "<record>".to_string(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                row: row_number,
                column: headers[i].to_string(),
                message: format!("expected a number, found {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_number,
                    column: headers[i].to_string(),
                    message: "non-finite value".to_string(),
                });
            }
            row.push(value);
        }
        let raw = record[label_idx].trim().to_string();
        let label = match label_names.iter().position(|l| *l == raw) {
            Some(pos) => pos + 1,
            None => {
                label_names.push(raw);
                label_names.len()
            }
        };
        points.push(row);
        labels.push(label);
    }
    let meta = DataSetMeta {
        label_names,
        feature_names,
    };
    Ok(DataSet::new(points, labels)?.with_meta(meta))
}

pub fn save_json(d: &DataSet, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &JsonDataSet::from(d))?;
    Ok(())
}

pub fn load_json(path: &Path) -> Result<DataSet> {
    let file = std::fs::File::open(path)?;
    let raw: JsonDataSet = serde_json::from_reader(BufReader::new(file))?;
    raw.into_dataset()
}

/// Writes one compact JSON dataset per line.
pub fn save_jsonl(sets: &[DataSet], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = BufWriter::new(file);
    for d in sets {
        serde_json::to_writer(&mut writer, &JsonDataSet::from(d))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_jsonl(path: &Path) -> Result<Vec<DataSet>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut sets = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonDataSet = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row: i + 1,
            column: "<line>".to_string(),
            message: e.to_string(),
        })?;
        sets.push(raw.into_dataset()?);
    }
    if sets.is_empty() {
        return Err(Error::invalid_argument(format!(
            "no datasets in {}",
            path.display()
        )));
    }
    Ok(sets)
}

/// On-disk dataset schema: `{"points": [[...]], "labels": [...], "meta": {...}}`.
#[derive(Serialize, Deserialize)]
struct JsonDataSet {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "DataSetMeta::is_empty")]
    meta: DataSetMeta,
}

impl From<&DataSet> for JsonDataSet {
    fn from(d: &DataSet) -> Self {
        JsonDataSet {
            points: d.points.clone(),
            labels: d.labels.clone(),
            meta: d.meta.clone(),
        }
    }
}

impl JsonDataSet {
    fn into_dataset(self) -> Result<DataSet> {
        Ok(DataSet::new(self.points, self.labels)?.with_meta(self.meta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synth_even_split_and_mean_bounds() {
        let cfg = SynthConfig::new(8, 16, 2, 7);
        let d = synth_dataset(&cfg).unwrap();
        assert_eq!(d.rows(), 8);
        assert_eq!(d.cols(), 16);
        let per_class = d.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(per_class, 4);
        // Sigma is at most 0.3 so every value stays well inside [8, 102].
        for row in d.points() {
            for &v in row {
                assert!((8.0..=102.0).contains(&v), "value {v} outside envelope");
            }
        }
    }

    #[test]
    fn synth_zero_variance_returns_class_means() {
        let cfg = SynthConfig {
            sigma_range: (0.0, 0.0),
            ..SynthConfig::new(2, 2, 2, 0)
        };
        let d = synth_dataset(&cfg).unwrap();
        // Each class holds exactly one point equal to its own mean, so the
        // two rows of each class must be bit-identical to the class mean.
        let centers = compute_cluster_centers(&d);
        for (row, &assignment) in d.points().iter().zip(&centers.assignment) {
            assert_eq!(row, &centers.centers[assignment]);
        }
    }

    #[test]
    fn synth_is_deterministic() {
        let cfg = SynthConfig::new(8, 8, 2, 42);
        let a = synth_dataset(&cfg).unwrap();
        let b = synth_dataset(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synth_rejects_more_classes_than_points() {
        assert!(matches!(
            synth_dataset(&SynthConfig::new(2, 4, 3, 0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn normalize_affine_and_constant_columns() {
        let d = DataSet::new(
            vec![vec![10.0, 5.0], vec![20.0, 5.0], vec![30.0, 5.0]],
            vec![1, 1, 2],
        )
        .unwrap();
        let n = d.normalize();
        assert_eq!(n.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.column(1), vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let d = synth_dataset(&SynthConfig::new(6, 4, 2, 3)).unwrap();
        let once = d.normalize();
        let twice = once.normalize();
        for (a, b) in once.points().iter().flatten().zip(twice.points().iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_range_column_unchanged() {
        let d = DataSet::new(vec![vec![0.0, 0.25], vec![1.0, 0.75]], vec![1, 2]).unwrap();
        // Column 0 spans [0,1] exactly; column 1 rescales.
        let n = d.normalize();
        assert_eq!(n.column(0), vec![0.0, 1.0]);
        assert_eq!(n.column(1), vec![0.0, 1.0]);
    }

    #[test]
    fn centers_of_singleton_classes_are_the_points() {
        let d = DataSet::new(vec![vec![0.1, 0.9], vec![0.4, 0.2]], vec![1, 2]).unwrap();
        let c = compute_cluster_centers(&d);
        assert_eq!(c.centers[0], vec![0.1, 0.9]);
        assert_eq!(c.centers[1], vec![0.4, 0.2]);
        assert_eq!(c.assignment, vec![0, 1]);
    }

    #[test]
    fn center_is_midpoint_of_two_rows() {
        let d = DataSet::new(
            vec![vec![0.0, 0.0], vec![2.0, 2.0], vec![5.0, 7.0]],
            vec![1, 1, 2],
        )
        .unwrap();
        let c = compute_cluster_centers(&d);
        assert_eq!(c.centers[0], vec![1.0, 1.0]);
    }

    #[test]
    fn centers_match_direct_resummation() {
        let d = synth_dataset(&SynthConfig::new(8, 4, 3, 11)).unwrap();
        let c = compute_cluster_centers(&d);
        for k in 1..=3 {
            let members: Vec<&Vec<f64>> = d
                .points()
                .iter()
                .zip(d.labels())
                .filter(|(_, &l)| l == k)
                .map(|(p, _)| p)
                .collect();
            for j in 0..4 {
                let mean: f64 =
                    members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
                assert!((c.centers[k - 1][j] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn centers_commute_with_row_permutation() {
        let d = synth_dataset(&SynthConfig::new(7, 3, 2, 5)).unwrap();
        let mut rows: Vec<(Vec<f64>, usize)> = d
            .points()
            .iter()
            .cloned()
            .zip(d.labels().iter().copied())
            .collect();
        rows.reverse();
        let (points, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let shuffled = DataSet::new(points, labels).unwrap();
        let a = compute_cluster_centers(&d);
        let b = compute_cluster_centers(&shuffled);
        for (ca, cb) in a.centers.iter().zip(&b.centers) {
            for (x, y) in ca.iter().zip(cb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn encoding_pairs_points_with_their_centers() {
        let d = DataSet::new(vec![vec![0.2, 0.8], vec![0.6, 0.4]], vec![1, 2]).unwrap();
        let c = compute_cluster_centers(&d);
        let enc = encode_coordinates(&d, &c).unwrap();
        assert_eq!(enc.tokens[0], vec![[0.2, 0.2], [0.6, 0.6]]);
        assert_eq!(enc.tokens[1], vec![[0.8, 0.8], [0.4, 0.4]]);
    }

    #[test]
    fn encoding_single_class_uses_global_mean() {
        let d = DataSet::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1, 1]).unwrap();
        let c = compute_cluster_centers(&d);
        let enc = encode_coordinates(&d, &c).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(enc.tokens[i][j][1], 0.5);
            }
        }
    }

    #[test]
    fn encoding_channel_zero_is_the_transpose() {
        let d = synth_dataset(&SynthConfig::new(4, 3, 2, 9)).unwrap().normalize();
        let c = compute_cluster_centers(&d);
        let enc = encode_coordinates(&d, &c).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(enc.tokens[i][j][0], d.point(j)[i]);
                assert_eq!(enc.tokens[i][j][1], c.centers[c.assignment[j]][i]);
            }
        }
    }

    #[test]
    fn csv_first_appearance_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "f1,f2,cls\n1,2,a\n3,4,b\n5,6,a\n").unwrap();
        let d = load_csv(&path, "cls").unwrap();
        assert_eq!(d.labels(), &[1, 2, 1]);
        assert_eq!(d.class_count(), 2);
        assert_eq!(d.meta().label_names, vec!["a", "b"]);
        assert_eq!(d.meta().feature_names, vec!["f1", "f2"]);
    }

    #[test]
    fn csv_reports_bad_cell_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "f1,f2,cls\n1,2,a\n3,oops,b\n").unwrap();
        match load_csv(&path, "cls") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "f2");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_missing_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "f1,f2\n1,2\n").unwrap();
        assert!(matches!(
            load_csv(&path, "cls"),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn csv_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "f1,f2,cls\n1,2,a\n3,4\n5,6,b\n").unwrap();
        assert!(matches!(load_csv(&path, "cls"), Err(Error::Parse { .. })));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let d = synth_dataset(&SynthConfig::new(6, 5, 2, 123)).unwrap();
        save_json(&d, &path).unwrap();
        let back = load_json(&path).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sets.jsonl");
        let sets: Vec<DataSet> = (0..3)
            .map(|s| synth_dataset(&SynthConfig::new(4, 3, 2, s)).unwrap())
            .collect();
        save_jsonl(&sets, &path).unwrap();
        let back = load_jsonl(&path).unwrap();
        assert_eq!(back, sets);
    }

    proptest! {
        #[test]
        fn synth_class_sizes_differ_by_at_most_one(
            m in 2usize..40, k in 1usize..6, seed in 0u64..500
        ) {
            prop_assume!(m >= k);
            let d = synth_dataset(&SynthConfig::new(m, 3, k, seed)).unwrap();
            let mut counts = vec![0usize; k];
            for &l in d.labels() {
                counts[l - 1] += 1;
            }
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            prop_assert!(max - min <= 1);
        }

        #[test]
        fn normalize_idempotent_prop(seed in 0u64..200) {
            let d = synth_dataset(&SynthConfig::new(5, 4, 2, seed)).unwrap();
            let once = d.normalize();
            let twice = once.normalize();
            for (a, b) in once.points().iter().flatten().zip(twice.points().iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
