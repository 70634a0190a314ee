//! Test-set scoring, prediction tables, and SVG figures (predicted-vs-actual
//! density heatmaps and RFE curves).

use std::fmt::Write as _;
use std::path::Path;

use crate::cohort::CohortKind;
use crate::error::{Error, Result};
use crate::selection::EliminationTrace;

/// `1 - SS_res / SS_tot`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::InvalidArgument("R² needs at least two values".into()));
    }
    let first = actual[0];
    if actual.iter().all(|&v| v == first) {
        return Err(Error::UndefinedRSquared);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Label of the aging-curve baseline in reports.
pub const DELTA_LABEL: &str = "delta";

/// Test-set actuals and every predictor's output for one target year.
#[derive(Clone, Debug, PartialEq)]
pub struct YearPredictions {
    pub target_year: u32,
    pub player_ids: Vec<String>,
    pub actual: Vec<f64>,
    /// `(label, predictions)` in report order.
    pub predicted: Vec<(String, Vec<f64>)>,
    /// Players whose baseline started from an imputed season-6 WAR.
    pub imputed_base: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationEntry {
    pub cohort: CohortKind,
    pub model: String,
    pub target_year: u32,
    pub r2: f64,
    pub n_test: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluationReport {
    pub seed: u64,
    pub config_digest: String,
    pub entries: Vec<EvaluationEntry>,
}

impl EvaluationReport {
    pub fn get(&self, cohort: CohortKind, model: &str, target_year: u32) -> Option<&EvaluationEntry> {
        self.entries
            .iter()
            .find(|e| e.cohort == cohort && e.model == model && e.target_year == target_year)
    }

    pub fn csv_header() -> &'static str {
        "cohort,model,target_year,r2,n_test,seed,config_digest"
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::csv_header());
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.cohort, e.model, e.target_year, e.r2, e.n_test, self.seed, self.config_digest
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::write(path, e))
    }

    /// Fixed-width table for terminals.
    pub fn pretty(&self) -> String {
        let mut s = format!("{:<9} {:<7} {:>4} {:>8} {:>6}\n", "cohort", "model", "year", "R²", "n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<9} {:<7} {:>4} {:>8.4} {:>6}",
                e.cohort.as_str(),
                e.model,
                e.target_year,
                e.r2,
                e.n_test
            );
        }
        s
    }
}

/// One entry per (predictor, year). Fails on an empty test set or when a
/// prediction vector's length differs from the actuals.
pub fn evaluate(cohort: CohortKind, years: &[YearPredictions]) -> Result<Vec<EvaluationEntry>> {
    let mut entries = Vec::new();
    for y in years {
        if y.actual.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{cohort} year {}: empty test set",
                y.target_year
            )));
        }
        for (label, pred) in &y.predicted {
            entries.push(EvaluationEntry {
                cohort,
                model: label.clone(),
                target_year: y.target_year,
                r2: r_squared(&y.actual, pred)?,
                n_test: y.actual.len(),
            });
        }
    }
    Ok(entries)
}

/// `player_id,year,actual,<label>...,imputed_base`, years in input order.
pub fn prediction_table_csv(years: &[YearPredictions]) -> String {
    let labels: Vec<&str> = years
        .first()
        .map(|y| y.predicted.iter().map(|(l, _)| l.as_str()).collect())
        .unwrap_or_default();
    let mut s = String::from("player_id,year,actual");
    for l in &labels {
        s.push(',');
        s.push_str(l);
    }
    s.push_str(",imputed_base\n");
    for y in years {
        for (i, id) in y.player_ids.iter().enumerate() {
            let _ = write!(s, "{id},{},{}", y.target_year, y.actual[i]);
            for (_, p) in &y.predicted {
                let _ = write!(s, ",{}", p[i]);
            }
            let _ = writeln!(s, ",{}", u8::from(y.imputed_base.get(i).copied().unwrap_or(false)));
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatmapSpec {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            bins: 40,
            lo: -2.0,
            hi: 10.0,
        }
    }
}

impl HeatmapSpec {
    /// Bin of `v`; values outside `[lo, hi]` land in the edge bins.
    pub fn bin(&self, v: f64) -> usize {
        let t = ((v - self.lo) / (self.hi - self.lo) * self.bins as f64).floor();
        if t < 0.0 {
            0
        } else {
            (t as usize).min(self.bins - 1)
        }
    }
}

/// `counts[i][j]`: points with actual in bin `i` and predicted in bin `j`.
pub fn histogram2d(actual: &[f64], predicted: &[f64], spec: &HeatmapSpec) -> Result<Vec<Vec<u64>>> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension(
            "heatmap needs paired actual and predicted values".into(),
        ));
    }
    if spec.bins == 0 || !(spec.hi > spec.lo) {
        return Err(Error::InvalidArgument("heatmap needs bins >= 1 and hi > lo".into()));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("heatmap input contains NaN or infinity".into()));
    }
    let mut counts = vec![vec![0u64; spec.bins]; spec.bins];
    for (&a, &p) in actual.iter().zip(predicted) {
        counts[spec.bin(a)][spec.bin(p)] += 1;
    }
    Ok(counts)
}

const PLOT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const DARK: [u8; 3] = [0x10, 0x12, 0x30];
const LIGHT: [u8; 3] = [0xff, 0xf4, 0xb8];

fn shade(t: f64) -> String {
    let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(DARK[0], LIGHT[0]),
        mix(DARK[1], LIGHT[1]),
        mix(DARK[2], LIGHT[2])
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Square SVG 2D histogram of predicted (vertical) against actual
/// (horizontal) with the `y = x` line in red. The most frequent cell is
/// lightest; sparse cells fade to the dark background.
pub fn render_heatmap(actual: &[f64], predicted: &[f64], spec: &HeatmapSpec, title: &str) -> Result<String> {
    let counts = histogram2d(actual, predicted, spec)?;
    let max = counts.iter().flatten().copied().max().unwrap_or(0);
    let cell = PLOT / spec.bins as f64;
    let size = PLOT + 2.0 * MARGIN;
    let to_px = |v: f64| (v - spec.lo) / (spec.hi - spec.lo) * PLOT;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        s,
        "<!-- heatmap: {b}x{b} bins over [{lo}, {hi}] on both axes; x = actual WAR, y = predicted WAR; \
         out-of-range values clamped into edge bins; points = {n}; max cell count = {max}; \
         color = linear in count/max from {dark} (count 0) to {light} (max); nonzero cells as actual_bin,predicted_bin,count: {cells} -->",
        b = spec.bins,
        lo = spec.lo,
        hi = spec.hi,
        n = actual.len(),
        dark = shade(0.0),
        light = shade(1.0),
        cells = counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(j, c)| format!("{i},{j},{c}")))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        size / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r#"<g transform="translate({MARGIN},{MARGIN})">"#);
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{PLOT}" height="{PLOT}" fill="{}"/>"#,
        shade(0.0)
    );
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"><title>{c}</title></rect>"#,
                i as f64 * cell,
                PLOT - (j + 1) as f64 * cell,
                shade(c as f64 / max as f64)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<line x1="0" y1="{PLOT}" x2="{PLOT}" y2="0" stroke="red" stroke-width="2"/>"#
    );
    let mut tick = spec.lo.ceil();
    while tick <= spec.hi {
        if (tick as i64) % 2 == 0 {
            let px = to_px(tick);
            let _ = writeln!(
                s,
                r#"<text x="{px:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{tick}</text>"#,
                PLOT + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="-8" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{tick}</text>"#,
                PLOT - px + 4.0
            );
        }
        tick += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">actual WAR</text>"#,
        PLOT / 2.0,
        PLOT + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="-40" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 -40 {})">predicted WAR</text>"#,
        PLOT / 2.0,
        PLOT / 2.0
    );
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

pub fn write_heatmap(path: &Path, actual: &[f64], predicted: &[f64], spec: &HeatmapSpec, title: &str) -> Result<()> {
    let svg = render_heatmap(actual, predicted, spec, title)?;
    std::fs::write(path, svg).map_err(|e| Error::write(path, e))
}

/// One row per elimination step: `step,removed,retained,cv_r2,all_features_cv_r2`.
pub fn rfe_curve_csv(trace: &EliminationTrace) -> String {
    let n = trace.feature_names.len();
    let mut s = String::from("step,removed,retained,cv_r2,all_features_cv_r2\n");
    for (i, (name, score)) in trace.elimination_order.iter().zip(&trace.scores).enumerate() {
        let _ = writeln!(s, "{},{},{},{},{}", i + 1, name, n - i - 1, score, trace.full_score);
    }
    s
}

/// Line chart of CV R² against the number of retained features.
pub fn rfe_curve_svg(trace: &EliminationTrace, title: &str) -> String {
    let curve = trace.curve();
    let n = trace.feature_names.len().max(2) as f64;
    let finite: Vec<f64> = curve.iter().map(|&(_, r)| r).filter(|r| r.is_finite()).collect();
    let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let hi = finite
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(lo + 1e-9)
        .min(1.0)
        .max(lo + 1e-9);
    let (w, h) = (PLOT, PLOT * 0.6);
    let px = |k: usize| (k as f64 - 1.0) / (n - 1.0) * w;
    let py = |r: f64| h - (r.clamp(lo, hi) - lo) / (hi - lo) * h;
    let points: Vec<String> = curve
        .iter()
        .map(|&(k, r)| format!("{:.2},{:.2}", px(k), py(r)))
        .collect();

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let (tw, th) = (w + 2.0 * MARGIN, h + 2.0 * MARGIN);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{tw}" height="{th}" viewBox="0 0 {tw} {th}">"#
    );
    let _ = writeln!(
        s,
        "<!-- RFE curve: x = retained features (1..{n}), y = mean 3-fold CV R² of the ranking ridge, \
         axis range [{lo:.4}, {hi:.4}]; all-features score {full} -->",
        n = trace.feature_names.len(),
        full = trace.full_score
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{tw}" height="{th}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        tw / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r#"<g transform="translate({MARGIN},{MARGIN})">"#);
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">features retained</text>"#,
        w / 2.0,
        h + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="-8" y="4" font-family="sans-serif" font-size="11" text-anchor="end">{hi:.2}</text>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="-8" y="{h}" font-family="sans-serif" font-size="11" text-anchor="end">{lo:.2}</text>"#
    );
    s.push_str("</g>\n</svg>\n");
    s
}

/// Writes `<stem>.csv` and `<stem>.svg`.
pub fn rfe_curve_report(trace: &EliminationTrace, dir: &Path, stem: &str, title: &str) -> Result<()> {
    let csv = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv, rfe_curve_csv(trace)).map_err(|e| Error::write(&csv, e))?;
    let svg = dir.join(format!("{stem}.svg"));
    std::fs::write(&svg, rfe_curve_svg(trace, title)).map_err(|e| Error::write(&svg, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_reference_values() {
        let a = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        assert_eq!(r_squared(&a, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&a, &[0.0, 1.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(
            r_squared(&[3.0, 3.0], &[1.0, 2.0]),
            Err(Error::UndefinedRSquared)
        ));
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn binning_clamps_to_edges() {
        let s = HeatmapSpec::default();
        assert_eq!(s.bin(-50.0), 0);
        assert_eq!(s.bin(-2.0), 0);
        assert_eq!(s.bin(10.0), 39);
        assert_eq!(s.bin(99.0), 39);
        assert_eq!(s.bin(-1.7), 1);
    }

    #[test]
    fn rfe_csv_has_one_row_per_step() {
        let t = EliminationTrace {
            feature_names: (0..6).map(|i| format!("f{i}")).collect(),
            elimination_order: vec!["f3".into(), "f0".into(), "f5".into()],
            scores: vec![0.9, 0.8, 0.7],
            full_score: 0.95,
        };
        assert_eq!(rfe_curve_csv(&t).lines().count() - 1, 6 - 3);
    }
}
