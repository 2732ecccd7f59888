//! Self-contained vector images. All coordinates are printed with a fixed
//! number of decimals so repeated runs give identical files.

use std::fmt::Write;

use crate::analysis::{Boundary, Lattice, RadiusField};
use crate::mechanisms::MechanismId;

const PLOT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const WIDTH: f64 = PLOT + 2.0 * MARGIN + 90.0;
const HEIGHT: f64 = PLOT + 2.0 * MARGIN;

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let k = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub fn mechanism_colour(id: MechanismId) -> &'static str {
    match id {
        MechanismId::Cohen => "#1f5fbf",
        MechanismId::Li => "#d62728",
        MechanismId::Lecuyer => "#8c8c8c",
        MechanismId::ImprovedDp => "#2ca02c",
    }
}

fn field_colour(f: RadiusField) -> &'static str {
    match f {
        RadiusField::Mechanism(id) => mechanism_colour(id),
        RadiusField::Ensemble => "#000000",
    }
}

fn x_of(v: f64) -> f64 {
    MARGIN + v * PLOT
}

fn y_of(v: f64) -> f64 {
    MARGIN + (1.0 - v) * PLOT
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN + PLOT / 2.0,
            MARGIN / 2.0,
            escape(title)
        );
        Canvas { body }
    }

    fn axes(&mut self, x_label: &str, y_label: &str, x_max: f64, y_max: f64) {
        let b = &mut self.body;
        let _ = writeln!(
            b,
            r##"<rect x="{MARGIN:.2}" y="{MARGIN:.2}" width="{PLOT:.2}" height="{PLOT:.2}" fill="none" stroke="#000000"/>"##
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let _ = writeln!(
                b,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x_of(t),
                MARGIN + PLOT + 16.0,
                tick(t * x_max)
            );
            let _ = writeln!(
                b,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN - 6.0,
                y_of(t) + 4.0,
                tick(t * y_max)
            );
        }
        let _ = writeln!(
            b,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN + PLOT / 2.0,
            MARGIN + PLOT + 36.0,
            escape(x_label)
        );
        let _ = writeln!(
            b,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            MARGIN - 40.0,
            MARGIN + PLOT / 2.0,
            MARGIN - 40.0,
            MARGIN + PLOT / 2.0,
            escape(y_label)
        );
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        for (k, (name, colour)) in entries.iter().enumerate() {
            let y = MARGIN + 10.0 + 20.0 * k as f64;
            let x = MARGIN + PLOT + 14.0;
            let _ = writeln!(
                self.body,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{colour}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 10.0,
                x + 18.0,
                y,
                escape(name)
            );
        }
    }

    fn boundaries(&mut self, boundaries: &[Boundary]) {
        for b in boundaries {
            let pts: Vec<String> = b
                .points
                .iter()
                .map(|&(e0, e1)| format!("{:.2},{:.2}", x_of(e0), y_of(e1)))
                .collect();
            let _ = writeln!(
                self.body,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                pts.join(" "),
                mechanism_colour(b.between.0)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cell_rect(body: &mut String, res: usize, i: usize, j: usize, fill: &str) {
    let step = PLOT / (res - 1) as f64;
    let _ = writeln!(
        body,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
        x_of(i as f64 / (res - 1) as f64) - step / 2.0,
        y_of(j as f64 / (res - 1) as f64) - step / 2.0,
        step,
        step
    );
}

/// Continuous heatmap of a lattice over `(e0, e1)`, with optional region
/// borders drawn on top.
pub fn heatmap(title: &str, lattice: &Lattice<f64>, boundaries: &[Boundary]) -> String {
    let mut c = Canvas::new(title);
    let (lo, hi) = lattice
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, &v)| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let res = lattice.resolution();
    for (i, j, &v) in lattice.iter() {
        cell_rect(&mut c.body, res, i, j, &ramp((v - lo) / span));
    }
    c.boundaries(boundaries);
    c.axes("E0", "E1", 1.0, 1.0);
    if lo.is_finite() {
        let x = MARGIN + PLOT + 20.0;
        for k in 0..50 {
            let t = k as f64 / 49.0;
            let _ = writeln!(
                c.body,
                r#"<rect x="{x:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                y_of(t) - PLOT / 98.0,
                PLOT / 49.0,
                ramp(t)
            );
        }
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{:.2}">{}</text><text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 20.0,
            y_of(1.0) + 4.0,
            super::files::fmt_sig(hi, 4),
            x + 20.0,
            y_of(0.0) + 4.0,
            super::files::fmt_sig(lo, 4)
        );
    }
    c.finish()
}

/// Categorical map of winning mechanisms.
pub fn region_map(title: &str, labels: &Lattice<MechanismId>, boundaries: &[Boundary]) -> String {
    let mut c = Canvas::new(title);
    let res = labels.resolution();
    let mut seen: Vec<MechanismId> = Vec::new();
    for (i, j, &id) in labels.iter() {
        cell_rect(&mut c.body, res, i, j, mechanism_colour(id));
        if !seen.contains(&id) {
            seen.push(id);
        }
    }
    seen.sort();
    c.boundaries(boundaries);
    c.axes("E0", "E1", 1.0, 1.0);
    c.legend(&seen.iter().map(|id| (id.to_string(), mechanism_colour(*id))).collect::<Vec<_>>());
    c.finish()
}

/// Certified-accuracy curves.
pub fn curves(title: &str, fields: &[RadiusField], curves: &[Vec<(f64, f64)>]) -> String {
    let mut c = Canvas::new(title);
    let r_max = curves
        .iter()
        .flat_map(|cv| cv.iter().map(|p| p.0))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for (f, cv) in fields.iter().zip(curves) {
        let pts: Vec<String> = cv
            .iter()
            .map(|&(r, a)| format!("{:.2},{:.2}", x_of(r / r_max), y_of(a)))
            .collect();
        let dash = if *f == RadiusField::Ensemble { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            c.body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            pts.join(" "),
            field_colour(*f)
        );
    }
    c.axes("radius", "certified accuracy", r_max, 1.0);
    c.legend(&fields.iter().map(|f| (f.to_string(), field_colour(*f))).collect::<Vec<_>>());
    c.finish()
}

/// Samples placed at their `(e0, e1)` bounds, coloured by winning
/// mechanism, over the region borders of the analytic sweep.
pub fn scatter(title: &str, points: &[(f64, f64, Option<MechanismId>)], boundaries: &[Boundary]) -> String {
    let mut c = Canvas::new(title);
    c.boundaries(boundaries);
    for &(e0, e1, w) in points {
        let fill = w.map(mechanism_colour).unwrap_or("#ffffff");
        let _ = writeln!(
            c.body,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{fill}" stroke="#000000" stroke-width="0.4"/>"##,
            x_of(e0.clamp(0.0, 1.0)),
            y_of(e1.clamp(0.0, 1.0))
        );
    }
    c.axes("E0", "E1", 1.0, 1.0);
    let mut entries: Vec<(String, &str)> = MechanismId::ALL
        .iter()
        .filter(|id| points.iter().any(|p| p.2 == Some(**id)))
        .map(|id| (id.to_string(), mechanism_colour(*id)))
        .collect();
    if points.iter().any(|p| p.2.is_none()) {
        entries.push(("abstain".to_string(), "#ffffff"));
    }
    c.legend(&entries);
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
        assert_eq!(ramp(-3.0), ramp(0.0));
    }

    #[test]
    fn curve_image_is_well_formed() {
        let svg = curves(
            "c",
            &[RadiusField::Ensemble],
            &[vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b&c>"), "a&lt;b&amp;c&gt;");
    }
}
