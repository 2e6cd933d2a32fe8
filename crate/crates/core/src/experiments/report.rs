use std::fmt::Write as _;

use serde::Serialize;

use super::{Method, TrialRecord};

pub const CSV_HEADER: &str = "s,method,trials,successes,success_rate,mean_iterations,mean_wall_ms";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: usize,
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Aggregates records cell by cell, keeping cells in order of first
    /// appearance.
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut rows: Vec<SweepRow> = Vec::new();
        let mut sums: Vec<(f64, f64)> = Vec::new();
        for rec in records {
            let key = (rec.spec.s, rec.spec.method);
            let idx = match rows.iter().position(|r| (r.s, r.method) == key) {
                Some(i) => i,
                None => {
                    rows.push(SweepRow {
                        s: key.0,
                        method: key.1,
                        trials: 0,
                        successes: 0,
                        success_rate: 0.0,
                        mean_iterations: 0.0,
                        mean_wall_ms: 0.0,
                    });
                    sums.push((0.0, 0.0));
                    rows.len() - 1
                }
            };
            rows[idx].trials += 1;
            rows[idx].successes += rec.success as usize;
            sums[idx].0 += rec.iterations as f64;
            sums[idx].1 += rec.wall_ms;
        }
        for (row, (iters, wall)) in rows.iter_mut().zip(sums) {
            let t = row.trials as f64;
            row.success_rate = row.successes as f64 / t;
            row.mean_iterations = iters / t;
            row.mean_wall_ms = wall / t;
        }
        Self { rows }
    }

    pub fn row(&self, s: usize, method: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.s == s && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.s,
                r.method,
                r.trials,
                r.successes,
                format_sig6(r.success_rate),
                format_sig6(r.mean_iterations),
                format_sig6(r.mean_wall_ms)
            );
        }
        out
    }

    /// Static line chart of success rate against `s`, one polyline per
    /// method.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 140.0;
        const TOP: f64 = 20.0;
        const BOTTOM: f64 = 50.0;
        const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

        let (lo, hi) = self
            .rows
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), r| (lo.min(r.s), hi.max(r.s)));
        let (lo, hi) = if self.rows.is_empty() { (0.0, 1.0) } else { (lo as f64, hi as f64) };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let px = |s: f64| LEFT + (s - lo) / span * (W - LEFT - RIGHT);
        let py = |rate: f64| H - BOTTOM - rate * (H - TOP - BOTTOM);

        let mut svg = String::new();
        let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, py(0.0), py(1.0));
        let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
        let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
        for tick in [0.0, 0.5, 1.0] {
            let y = py(tick);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{tick:.1}</text>"#,
                x0 - 6.0,
                y + 4.0
            );
        }
        let mut ticks: Vec<usize> = self.rows.iter().map(|r| r.s).collect();
        ticks.dedup();
        for s in ticks {
            let x = px(s as f64);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{s}</text>"#,
                y0 + 16.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">sparsity s</text>"#,
            (x0 + x1) / 2.0,
            H - 10.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">success rate</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        );

        let mut methods: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for (k, method) in methods.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let points: Vec<String> = self
                .rows
                .iter()
                .filter(|r| r.method == *method)
                .map(|r| format!("{:.2},{:.2}", px(r.s as f64), py(r.success_rate)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            );
            let ly = TOP + 20.0 * (k as f64 + 1.0);
            let lx = W - RIGHT + 15.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="12">{method}</text>"#,
                lx + 26.0,
                ly + 4.0
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// `printf("%g")`: six significant digits, trailing zeros removed, exponent
/// form outside `[1e-4, 1e6)`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::TrialSpec;

    #[test]
    fn sig6_matches_printf() {
        // expected strings from C printf("%g")
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (0.875, "0.875"),
            (1.0 / 3.0, "0.333333"),
            (2.0 / 3.0, "0.666667"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (999999.5, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-42.125, "-42.125"),
            (339.25, "339.25"),
            (17.0 / 7.0, "2.42857"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig6(x), want, "{x}");
        }
    }

    fn record(s: usize, method: Method, success: bool, iterations: usize) -> TrialRecord {
        TrialRecord {
            spec: TrialSpec::new(4, 8, s, method, 0),
            success,
            relative_error: if success { 0.0 } else { 1.0 },
            iterations,
            wall_ms: 0.0,
            error: None,
        }
    }

    #[test]
    fn csv_layout() {
        let recs = vec![
            record(2, Method::Bp, true, 10),
            record(2, Method::Bp, false, 20),
            record(2, Method::TailMin, true, 7),
            record(3, Method::Bp, false, 1),
        ];
        let csv = SweepTable::from_records(&recs).to_csv();
        assert_eq!(
            csv,
            "s,method,trials,successes,success_rate,mean_iterations,mean_wall_ms\n\
             2,bp,2,1,0.5,15,0\n\
             2,tailmin,1,1,1,7,0\n\
             3,bp,1,0,0,1,0\n"
        );
    }

    #[test]
    fn svg_has_one_curve_per_method() {
        let recs = vec![
            record(2, Method::Bp, true, 1),
            record(2, Method::TailMin, true, 1),
            record(4, Method::Bp, false, 1),
            record(4, Method::TailMin, true, 1),
        ];
        let svg = SweepTable::from_records(&recs).to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">tailmin</text>"));
        assert_eq!(svg, SweepTable::from_records(&recs).to_svg());
        assert!(SweepTable::default().to_svg().contains("</svg>"));
    }
}
