//! Deterministic SVG output for glyph grids and RadViz plots.
//!
//! Coordinates are printed with three decimal places so identical inputs
//! produce identical bytes on every platform.

use std::fmt::Write as _;

use crate::axis_order::AxisOrder;
use crate::dataset::DataSet;
use crate::error::{Error, Result};
use crate::geometry::{build_polygon, StarGlyph};
use crate::separation::{radviz_project, sc_of_ordering, db_ratio, DistanceOracle};

/// Eight-color categorical palette (Tableau-style), indexed by class id.
pub const DEFAULT_PALETTE: [&str; 8] = [
    "#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1", "#76b7b2", "#edc948", "#9c755f",
];

#[derive(Clone, Debug)]
pub struct RenderStyle {
    /// Glyph circumradius in pixels.
    pub glyph_radius: f64,
    /// Grid columns; 0 picks a near-square layout.
    pub columns: usize,
    pub palette: Vec<String>,
    pub stroke_width: f64,
    /// Annotate the figure with its objective value.
    pub annotate: bool,
    /// Contour samples used when computing the annotation value.
    pub annotation_contour_samples: usize,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            glyph_radius: 60.0,
            columns: 0,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            stroke_width: 1.5,
            annotate: false,
            annotation_contour_samples: 80,
        }
    }
}

impl RenderStyle {
    fn check_palette(&self, classes: usize) -> Result<()> {
        if self.palette.len() < classes {
            return Err(Error::invalid_argument(format!(
                "palette has {} colors for {classes} classes",
                self.palette.len()
            )));
        }
        Ok(())
    }

    fn color(&self, label: usize) -> &str {
        &self.palette[(label - 1) % self.palette.len()]
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Grid of star glyphs, one per data row, drawn under the given order.
/// Row j always occupies grid cell j, so the same data point sits at the
/// same position across renders with different orders.
pub fn render_glyph_grid(d: &DataSet, order: &AxisOrder, style: &RenderStyle) -> Result<String> {
    if !d.is_unit_range() {
        return Err(Error::invalid_argument(
            "rendering expects a normalized dataset",
        ));
    }
    style.check_palette(d.class_count())?;
    let m = d.rows();
    let columns = if style.columns > 0 {
        style.columns
    } else {
        (m as f64).sqrt().ceil() as usize
    };
    let rows = m.div_ceil(columns);
    let pad = 8.0;
    let cell = 2.0 * style.glyph_radius + 2.0 * pad;
    let annotation_height = if style.annotate { 24.0 } else { 0.0 };
    let width = columns as f64 * cell;
    let height = rows as f64 * cell + annotation_height;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(width),
        h = fmt(height)
    );
    let _ = writeln!(svg, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##, w = fmt(width), h = fmt(height));
    for (j, row) in d.points().iter().enumerate() {
        let glyph = StarGlyph::new(row.clone(), order.clone())?;
        let polygon = build_polygon(&glyph);
        let cx = (j % columns) as f64 * cell + cell / 2.0;
        let cy = (j / columns) as f64 * cell + cell / 2.0;
        let points: Vec<String> = polygon
            .vertices()
            .iter()
            .map(|v| {
                format!(
                    "{},{}",
                    fmt(cx + style.glyph_radius * v[0]),
                    fmt(cy - style.glyph_radius * v[1])
                )
            })
            .collect();
        let color = style.color(d.label(j));
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.55" stroke="{color}" stroke-width="{}"/>"#,
            points.join(" "),
            fmt(style.stroke_width)
        );
    }
    if style.annotate {
        let sc = sc_of_ordering(
            d,
            order,
            &DistanceOracle::Exact {
                contour_samples: style.annotation_contour_samples,
            },
        )?;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">SC = {}</text>"#,
            fmt(width / 2.0),
            fmt(height - 8.0),
            fmt(sc)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// RadViz plot: unit circle, labeled anchors, one dot per data row.
pub fn render_radviz(d: &DataSet, order: &AxisOrder, style: &RenderStyle) -> Result<String> {
    style.check_palette(d.class_count())?;
    let layout = radviz_project(d, order)?;
    let radius = 180.0;
    let pad = 40.0;
    let annotation_height = if style.annotate { 24.0 } else { 0.0 };
    let size = 2.0 * (radius + pad);
    let height = size + annotation_height;
    let cx = size / 2.0;
    let cy = size / 2.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(size),
        h = fmt(height)
    );
    let _ = writeln!(svg, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##, w = fmt(size), h = fmt(height));
    let _ = writeln!(
        svg,
        r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#888888" stroke-width="1"/>"##,
        fmt(cx),
        fmt(cy),
        fmt(radius)
    );
    for (pos, anchor) in layout.anchors.iter().enumerate() {
        let ax = cx + radius * anchor[0];
        let ay = cy - radius * anchor[1];
        let _ = writeln!(
            svg,
            r##"<circle cx="{}" cy="{}" r="3" fill="#444444"/>"##,
            fmt(ax),
            fmt(ay)
        );
        let coordinate = order.coordinate_at(pos);
        let label = d
            .meta()
            .feature_names
            .get(coordinate)
            .cloned()
            .unwrap_or_else(|| format!("c{coordinate}"));
        let lx = cx + (radius + 16.0) * anchor[0];
        let ly = cy - (radius + 16.0) * anchor[1];
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            fmt(lx),
            fmt(ly),
            escape_text(&label)
        );
    }
    for (j, point) in layout.projected.iter().enumerate() {
        let px = cx + radius * point[0];
        let py = cy - radius * point[1];
        let _ = writeln!(
            svg,
            r#"<circle cx="{}" cy="{}" r="3.5" fill="{}" fill-opacity="0.8"/>"#,
            fmt(px),
            fmt(py),
            style.color(d.label(j))
        );
    }
    if style.annotate {
        let ratio = db_ratio(d, order)?;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">DB ratio = {}</text>"#,
            fmt(size / 2.0),
            fmt(height - 8.0),
            fmt(ratio)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, SynthConfig};

    /// Minimal well-formedness check: tags balance and attributes are quoted.
    fn assert_well_formed_xml(text: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unclosed tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().expect("closing tag without opener");
                assert_eq!(open, name, "mismatched tag");
            } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
                let name = tag.split_whitespace().next().unwrap().to_string();
                stack.push(name);
            }
            // Attribute values must be double-quoted in pairs.
            assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes in {tag}");
        }
        assert!(stack.is_empty(), "unclosed tags remain: {stack:?}");
    }

    fn sample_set() -> DataSet {
        synth_dataset(&SynthConfig::new(6, 5, 2, 77)).unwrap().normalize()
    }

    #[test]
    fn glyph_grid_has_one_polygon_per_row() {
        let d = sample_set();
        let svg = render_glyph_grid(&d, &AxisOrder::identity(5), &RenderStyle::default()).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 6);
        assert_well_formed_xml(&svg);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let d = sample_set();
        let style = RenderStyle {
            annotate: true,
            annotation_contour_samples: 24,
            ..Default::default()
        };
        let a = render_glyph_grid(&d, &AxisOrder::identity(5), &style).unwrap();
        let b = render_glyph_grid(&d, &AxisOrder::identity(5), &style).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn same_class_rows_share_fill_color() {
        let d = sample_set();
        let svg = render_glyph_grid(&d, &AxisOrder::identity(5), &RenderStyle::default()).unwrap();
        let fills: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<polygon"))
            .map(|l| {
                let start = l.find("fill=\"").unwrap() + 6;
                &l[start..start + 7]
            })
            .collect();
        for (i, &label) in d.labels().iter().enumerate() {
            for (j, &other) in d.labels().iter().enumerate() {
                if label == other {
                    assert_eq!(fills[i], fills[j]);
                }
            }
        }
    }

    #[test]
    fn radviz_has_dots_and_anchor_labels() {
        let d = sample_set();
        let svg = render_radviz(&d, &AxisOrder::identity(5), &RenderStyle::default()).unwrap();
        assert_well_formed_xml(&svg);
        // 5 anchor markers + 6 data dots.
        assert_eq!(svg.matches("<circle").count(), 1 + 5 + 6);
        assert_eq!(svg.matches("<text").count(), 5);
    }

    #[test]
    fn equal_value_rows_render_at_center() {
        let d = DataSet::new(
            vec![vec![0.6, 0.6, 0.6], vec![1.0, 0.0, 0.0]],
            vec![1, 2],
        )
        .unwrap();
        let svg = render_radviz(&d, &AxisOrder::identity(3), &RenderStyle::default()).unwrap();
        // The uniform row projects to the origin, i.e. the circle center.
        assert!(svg.contains(r#"<circle cx="220.000" cy="220.000" r="3.5""#));
    }

    #[test]
    fn palette_must_cover_classes() {
        let d = sample_set();
        let style = RenderStyle {
            palette: vec!["#000000".to_string()],
            ..Default::default()
        };
        // Two classes, one color.
        assert!(render_glyph_grid(&d, &AxisOrder::identity(5), &style).is_err());
    }

    #[test]
    fn golden_glyph_grid_snapshot() {
        let d = synth_dataset(&SynthConfig::new(4, 6, 2, 2024)).unwrap().normalize();
        let style = RenderStyle {
            annotate: true,
            annotation_contour_samples: 40,
            ..Default::default()
        };
        let svg = render_glyph_grid(&d, &AxisOrder::identity(6), &style).unwrap();
        let golden = include_str!("../tests/golden/glyph_grid_seed2024.svg");
        assert_eq!(svg, golden, "glyph grid drifted from golden snapshot");
    }

    #[test]
    fn golden_radviz_snapshot() {
        let d = synth_dataset(&SynthConfig::new(5, 4, 2, 2025)).unwrap().normalize();
        let style = RenderStyle {
            annotate: true,
            ..Default::default()
        };
        let svg = render_radviz(&d, &AxisOrder::identity(4), &style).unwrap();
        let golden = include_str!("../tests/golden/radviz_seed2025.svg");
        assert_eq!(svg, golden, "RadViz drifted from golden snapshot");
    }
}
