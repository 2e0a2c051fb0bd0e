//! Class-separation scoring: silhouette values over a glyph distance matrix,
//! the RadViz projection, and the Davies-Bouldin ratio objective.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axis_order::AxisOrder;
use crate::dataset::DataSet;
use crate::distnet::DistNet;
use crate::error::{Error, Result};
use crate::geometry::{
    build_polygon, sample_contour, shape_context, shape_distance, ContourSamples, StarGlyph,
};

/// Symmetric pairwise distances with zero diagonal, entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        let mut values = vec![0.0; size * size];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::invalid_argument("distance matrix must be square"));
            }
            for (j, &v) in row.iter().enumerate() {
                values[i * size + j] = v;
            }
        }
        let dm = DistanceMatrix { size, values };
        dm.validate()?;
        Ok(dm)
    }

    /// Builds from the strict upper triangle, mirroring it.
    pub fn from_upper(size: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let v = entry(i, j);
                values[i * size + j] = v;
                values[j * size + i] = v;
            }
        }
        let dm = DistanceMatrix { size, values };
        dm.validate()?;
        Ok(dm)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.size {
            if self.get(i, i) != 0.0 {
                return Err(Error::invalid_argument("distance matrix diagonal not zero"));
            }
            for j in 0..self.size {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid_argument(format!(
                        "distance {v} at ({i},{j}) outside [0, 1]"
                    )));
                }
                if (v - self.get(j, i)).abs() > 1e-12 {
                    return Err(Error::invalid_argument("distance matrix not symmetric"));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }
}

/// Per-point silhouette values with per-class means and the coefficient
/// (the maximum class mean).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// Silhouette value of each point, in `[-1, 1]`.
    pub values: Vec<f64>,
    /// Mean distance of each point to its own class (0 for singletons).
    pub cohesion: Vec<f64>,
    /// Smallest mean distance of each point to another class.
    pub nearest_other: Vec<f64>,
    /// Mean silhouette value per class.
    pub class_means: Vec<f64>,
    /// Maximum class mean.
    pub coefficient: f64,
}

/// Computes silhouette values. Conventions: a singleton cluster scores 0,
/// and a point with `max(a, b) = 0` scores 0.
pub fn silhouette_values(dm: &DistanceMatrix, labels: &[usize]) -> Result<SilhouetteReport> {
    let m = dm.size();
    if labels.len() != m {
        return Err(Error::invalid_argument(format!(
            "{} labels for a {m}x{m} distance matrix",
            labels.len()
        )));
    }
    let k = labels.iter().copied().max().unwrap_or(0);
    if k < 2 {
        return Err(Error::invalid_argument(
            "silhouette needs at least two classes",
        ));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &label) in labels.iter().enumerate() {
        if label == 0 || label > k {
            return Err(Error::invalid_argument(format!(
                "label {label} outside 1..={k}"
            )));
        }
        members[label - 1].push(i);
    }
    if let Some(empty) = members.iter().position(|ms| ms.is_empty()) {
        return Err(Error::invalid_argument(format!(
            "class {} has no members",
            empty + 1
        )));
    }

    let mut values = vec![0.0; m];
    let mut cohesion = vec![0.0; m];
    let mut nearest = vec![0.0; m];
    for i in 0..m {
        let own = labels[i] - 1;
        let own_size = members[own].len();
        let a = if own_size > 1 {
            members[own]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| dm.get(i, j))
                .sum::<f64>()
                / (own_size - 1) as f64
        } else {
            0.0
        };
        let b = members
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != own)
            .map(|(_, ms)| ms.iter().map(|&j| dm.get(i, j)).sum::<f64>() / ms.len() as f64)
            .fold(f64::INFINITY, f64::min);
        cohesion[i] = a;
        nearest[i] = b;
        values[i] = if own_size == 1 {
            0.0
        } else {
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        };
    }

    let class_means: Vec<f64> = members
        .iter()
        .map(|ms| ms.iter().map(|&i| values[i]).sum::<f64>() / ms.len() as f64)
        .collect();
    let coefficient = class_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SilhouetteReport {
        values,
        cohesion,
        nearest_other: nearest,
        class_means,
        coefficient,
    })
}

/// The scalar separation score: the maximum per-class mean silhouette value.
pub fn silhouette_coefficient(report: &SilhouetteReport) -> f64 {
    report
        .class_means
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// How pairwise glyph distances are produced.
pub enum DistanceOracle<'a> {
    /// Full descriptor pipeline at the given contour sample count.
    Exact { contour_samples: usize },
    /// Learned approximation; uses the network's own sample count.
    Net(&'a DistNet),
}

impl DistanceOracle<'_> {
    pub fn contour_samples(&self) -> usize {
        match self {
            DistanceOracle::Exact { contour_samples } => *contour_samples,
            DistanceOracle::Net(net) => net.config().contour_samples,
        }
    }

    /// Pairwise distances between pre-sampled glyph contours.
    pub fn matrix(&self, contours: &[ContourSamples]) -> Result<DistanceMatrix> {
        match self {
            DistanceOracle::Exact { .. } => {
                let descriptors: Vec<_> = contours
                    .par_iter()
                    .map(shape_context)
                    .collect::<Result<_>>()?;
                let m = descriptors.len();
                let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
                for i in 0..m {
                    for j in (i + 1)..m {
                        pairs.push((i, j));
                    }
                }
                let distances: Vec<f64> = pairs
                    .par_iter()
                    .map(|&(i, j)| shape_distance(&descriptors[i], &descriptors[j]))
                    .collect::<Result<_>>()?;
                let mut lookup = vec![vec![0.0; m]; m];
                for (&(i, j), &d) in pairs.iter().zip(&distances) {
                    lookup[i][j] = d;
                    lookup[j][i] = d;
                }
                DistanceMatrix::from_rows(lookup)
            }
            DistanceOracle::Net(net) => net.distance_matrix(contours),
        }
    }
}

/// Builds one glyph contour per data row under the given order.
pub fn glyph_contours(
    d: &DataSet,
    order: &AxisOrder,
    contour_samples: usize,
) -> Result<Vec<ContourSamples>> {
    d.points()
        .iter()
        .map(|row| {
            let glyph = StarGlyph::new(row.clone(), order.clone())?;
            sample_contour(&build_polygon(&glyph), contour_samples)
        })
        .collect()
}

/// Silhouette coefficient of the glyph set drawn under `order`.
pub fn sc_of_ordering(d: &DataSet, order: &AxisOrder, oracle: &DistanceOracle) -> Result<f64> {
    if order.len() != d.cols() {
        return Err(Error::invalid_argument(format!(
            "order of length {} for {} coordinates",
            order.len(),
            d.cols()
        )));
    }
    let contours = glyph_contours(d, order, oracle.contour_samples())?;
    let dm = oracle.matrix(&contours)?;
    Ok(silhouette_values(&dm, d.labels())?.coefficient)
}

/// RadViz circle layout: anchors on the unit circle, points at the
/// normalized anchor-weighted mean of their values.
#[derive(Clone, Debug, PartialEq)]
pub struct RadVizLayout {
    pub anchors: Vec<[f64; 2]>,
    pub projected: Vec<[f64; 2]>,
}

pub fn radviz_project(d: &DataSet, order: &AxisOrder) -> Result<RadVizLayout> {
    if !d.is_unit_range() {
        return Err(Error::invalid_argument(
            "RadViz projection expects a normalized dataset",
        ));
    }
    if order.len() != d.cols() {
        return Err(Error::invalid_argument(format!(
            "order of length {} for {} coordinates",
            order.len(),
            d.cols()
        )));
    }
    let n = d.cols();
    let anchors: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let angle = TAU * i as f64 / n as f64;
            [angle.cos(), angle.sin()]
        })
        .collect();
    let projected = d
        .points()
        .iter()
        .map(|row| {
            let mut x = 0.0;
            let mut y = 0.0;
            let mut total = 0.0;
            for (pos, anchor) in anchors.iter().enumerate() {
                let w = row[order.coordinate_at(pos)];
                x += w * anchor[0];
                y += w * anchor[1];
                total += w;
            }
            if total == 0.0 {
                [0.0, 0.0]
            } else {
                [x / total, y / total]
            }
        })
        .collect();
    Ok(RadVizLayout { anchors, projected })
}

/// Davies-Bouldin index over points of any dimension: the mean over clusters
/// of the worst (sigma_k + sigma_l) / centroid-distance ratio. Coincident
/// centroids yield +infinity.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::invalid_argument("one label per point"));
    }
    let k = labels.iter().copied().max().unwrap_or(0);
    if k < 2 {
        return Err(Error::invalid_argument(
            "Davies-Bouldin needs at least two classes",
        ));
    }
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &label) in points.iter().zip(labels) {
        if label == 0 || label > k {
            return Err(Error::invalid_argument(format!(
                "label {label} outside 1..={k}"
            )));
        }
        counts[label - 1] += 1;
        for (j, &v) in p.iter().enumerate() {
            centroids[label - 1][j] += v;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid_argument(format!(
            "class {} has no members",
            empty + 1
        )));
    }
    for (c, &count) in centroids.iter_mut().zip(&counts) {
        for v in c.iter_mut() {
            *v /= count as f64;
        }
    }
    let mut spread = vec![0.0; k];
    for (p, &label) in points.iter().zip(labels) {
        spread[label - 1] += euclidean(p, &centroids[label - 1]);
    }
    for (s, &count) in spread.iter_mut().zip(&counts) {
        *s /= count as f64;
    }

    let mut total = 0.0;
    for a in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for b in 0..k {
            if a == b {
                continue;
            }
            let gap = euclidean(&centroids[a], &centroids[b]);
            let ratio = if gap == 0.0 {
                f64::INFINITY
            } else {
                (spread[a] + spread[b]) / gap
            };
            worst = worst.max(ratio);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Ratio of the Davies-Bouldin index in the original space to the index of
/// the 2-D RadViz projection under `order`; higher is better. An infinite
/// projection index (coincident projected centroids) scores 0; an infinite
/// original-space index is a degenerate input.
pub fn db_ratio(d: &DataSet, order: &AxisOrder) -> Result<f64> {
    let original = davies_bouldin(d.points(), d.labels())?;
    if !original.is_finite() {
        return Err(Error::degenerate(
            "coincident class centroids in the original space",
        ));
    }
    let layout = radviz_project(d, order)?;
    let projected: Vec<Vec<f64>> = layout.projected.iter().map(|p| p.to_vec()).collect();
    let plane = davies_bouldin(&projected, d.labels())?;
    if plane.is_infinite() {
        return Ok(0.0);
    }
    if plane == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(original / plane)
}

/// Which separation score an optimizer maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Silhouette coefficient over glyph shape distances.
    Sc,
    /// Davies-Bouldin ratio of the RadViz projection.
    DbRatio,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Sc => write!(f, "sc"),
            Objective::DbRatio => write!(f, "db-ratio"),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sc" => Ok(Objective::Sc),
            "db-ratio" | "dbratio" => Ok(Objective::DbRatio),
            other => Err(Error::invalid_argument(format!(
                "unknown objective {other:?}; expected sc or db-ratio"
            ))),
        }
    }
}

/// A dataset paired with an objective and distance oracle; scores orders.
pub struct ObjectiveEval<'a> {
    pub data: &'a DataSet,
    pub objective: Objective,
    pub oracle: DistanceOracle<'a>,
}

impl ObjectiveEval<'_> {
    pub fn value(&self, order: &AxisOrder) -> Result<f64> {
        match self.objective {
            Objective::Sc => sc_of_ordering(self.data, order, &self.oracle),
            Objective::DbRatio => db_ratio(self.data, order),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
