//! CSV and SVG output.
//!
//! Numbers use Rust's shortest round-trip `Debug` formatting (`0.5`, `1e-20`),
//! so files are locale independent, lossless and identical across runs.

use crate::analysis::{SensitivityPoint, SweepCurve};
use std::fmt::Write as _;

pub const SWEEP_HEADER: &str = "phi1,R,T,dT_dphi1";
pub const SENSITIVITY_HEADER: &str = "phi2,max_slope_gm,max_slope_michelson,argmax_phi1";

pub fn sweep_csv(curve: &SweepCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.samples.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for s in &curve.samples {
        let _ = writeln!(out, "{:?},{:?},{:?},{:?}", s.phi1, s.reflectance, s.transmittance, s.slope);
    }
    out
}

/// Rows pair Grover-Michelson and Michelson results at the same φ₂;
/// `argmax_phi1` belongs to the Grover-Michelson.
pub fn sensitivity_csv(gm: &[SensitivityPoint], michelson: &[SensitivityPoint]) -> String {
    let mut out = String::new();
    out.push_str(SENSITIVITY_HEADER);
    out.push('\n');
    for (g, m) in gm.iter().zip(michelson) {
        let _ = writeln!(out, "{:?},{:?},{:?},{:?}", g.phi2, g.max_abs_slope, m.max_abs_slope, g.argmax_phi1);
    }
    out
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Five evenly spaced ticks over `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

impl LinePlot {
    fn y_transform(&self, y: f64) -> f64 {
        if self.log_y {
            y.max(f64::MIN_POSITIVE).log10()
        } else {
            y
        }
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for &(x, y) in pts {
            if !x.is_finite() || !y.is_finite() || (self.log_y && y <= 0.0) {
                continue;
            }
            let ty = self.y_transform(y);
            b = Some(match b {
                None => (x, x, ty, ty),
                Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(ty), y1.max(ty)),
            });
        }
        b.map(|(x0, x1, mut y0, mut y1)| {
            if self.log_y {
                y0 = y0.floor();
                y1 = y1.ceil();
            }
            let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
            let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 0.5, y1 + 0.5) };
            (x0, x1, y0, y1)
        })
    }

    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            out.push_str("</svg>\n");
            return out;
        };
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |ty: f64| TOP + ph - (ty - y0) / (y1 - y0) * ph;

        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in linear_ticks(x0, x1) {
            let px = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick_label(t)
            );
        }
        let y_ticks: Vec<f64> = if self.log_y {
            let step = ((y1 - y0) / 8.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut e = y0;
            while e <= y1 + 1e-9 {
                v.push(e);
                e += step;
            }
            v
        } else {
            linear_ticks(y0, y1)
        };
        for t in y_ticks {
            let py = sy(t);
            let label = if self.log_y { format!("1e{}", t as i64) } else { tick_label(t) };
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let mut pts = String::new();
            for &(x, y) in &s.points {
                if !x.is_finite() || !y.is_finite() || (self.log_y && y <= 0.0) {
                    continue;
                }
                let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(self.y_transform(y)));
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                pts.trim_end()
            );
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let lx = LEFT + pw - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
                lx + 20.0,
                s.color,
                lx + 26.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

pub fn sweep_svg(curve: &SweepCurve) -> String {
    LinePlot {
        title: format!("{}: T vs phi1 at phi2 = {}", curve.device_id, curve.phi2),
        x_label: "phi1 (rad)".into(),
        y_label: "T".into(),
        log_y: false,
        series: vec![Series {
            name: "T".into(),
            color: "#1f77b4".into(),
            points: curve.samples.iter().map(|s| (s.phi1, s.transmittance)).collect(),
        }],
    }
    .to_svg()
}

pub fn sensitivity_svg(gm: &[SensitivityPoint], michelson: &[SensitivityPoint]) -> String {
    let series = |name: &str, color: &str, pts: &[SensitivityPoint]| Series {
        name: name.into(),
        color: color.into(),
        points: pts.iter().map(|p| (p.phi2, p.max_abs_slope)).collect(),
    };
    LinePlot {
        title: "maximum sensitivity vs phi2".into(),
        x_label: "phi2 (rad)".into(),
        y_label: "max |dT/dphi1|".into(),
        log_y: true,
        series: vec![
            series("grover-michelson", "#d62728", gm),
            series("michelson", "#1f77b4", michelson),
        ],
    }
    .to_svg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SweepSample;

    fn curve() -> SweepCurve {
        SweepCurve {
            device_id: "michelson".into(),
            phi2: 0.0,
            samples: vec![
                SweepSample {
                    phi1: 0.0,
                    reflectance: 1.0,
                    transmittance: 0.0,
                    slope: 0.0,
                },
                SweepSample {
                    phi1: 0.5,
                    reflectance: 0.25,
                    transmittance: 0.75,
                    slope: -1e-20,
                },
            ],
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sweep_csv(&curve());
        assert_eq!(csv, "phi1,R,T,dT_dphi1\n0.0,1.0,0.0,0.0\n0.5,0.25,0.75,-1e-20\n");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn sensitivity_layout() {
        let p = |phi2: f64, s: f64, a: f64| SensitivityPoint {
            phi2,
            max_abs_slope: s,
            argmax_phi1: a,
        };
        let csv = sensitivity_csv(&[p(0.5, 3.0, 6.0)], &[p(0.5, 0.5, 2.0)]);
        assert_eq!(csv, "phi2,max_slope_gm,max_slope_michelson,argmax_phi1\n0.5,3.0,0.5,6.0\n");
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = sweep_svg(&curve());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let empty = LinePlot {
            title: "a < b".into(),
            x_label: String::new(),
            y_label: String::new(),
            log_y: true,
            series: vec![],
        }
        .to_svg();
        assert!(empty.contains("a &lt; b"));
    }

    #[test]
    fn log_plot_skips_nonpositive() {
        let svg = LinePlot {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            log_y: true,
            series: vec![Series {
                name: "s".into(),
                color: "red".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1000.0)],
            }],
        }
        .to_svg();
        assert!(svg.contains("1e3"));
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(poly.matches(',').count(), 2);
    }
}
