//! Report emission: confusion tables and heatmaps, qualitative bar charts,
//! CSV/JSON metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use mipw_core::{aggregate_qualitative, consensus, AggregateReport, BinaryConfusion, Ratio};
use serde::Serialize;

use crate::records::{latest_per_key, load_log};
use crate::run::{self, read_items, read_manifest, trofi_scores, TrofiScores};

/// Rows are true classes, columns predicted, Nonliteral first.
pub fn confusion_text(cm: &BinaryConfusion) -> String {
    let rows = cm.as_rows();
    let mut s = String::new();
    let _ = writeln!(s, "{:<18}{:>22}{:>20}{:>8}", "", "predicted Nonliteral", "predicted Literal", "total");
    for (label, row) in ["true Nonliteral", "true Literal"].iter().zip(rows) {
        let _ = writeln!(s, "{:<18}{:>22}{:>20}{:>8}", label, row[0], row[1], row[0] + row[1]);
    }
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// 2x2 heatmap, true classes down the side, predictions across the top.
pub fn confusion_svg(cm: &BinaryConfusion, title: &str) -> String {
    let rows = cm.as_rows();
    let max = rows.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let (cell, left, top) = (120.0, 130.0, 70.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="13">"#,
        left + 2.0 * cell + 20.0,
        top + 2.0 * cell + 40.0
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="15">{}</text>"#, esc(title));
    let classes = ["Nonliteral", "Literal"];
    for (j, c) in classes.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">pred. {c}</text>"#,
            left + cell * (j as f64 + 0.5),
            top - 10.0
        );
    }
    for (i, c) in classes.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">true {c}</text>"#,
            left - 8.0,
            top + cell * (i as f64 + 0.5) + 4.0
        );
        for (j, v) in rows[i].iter().enumerate() {
            let shade = 245 - ((*v as f64 / max) * 190.0).round() as i64;
            let ink = if shade < 140 { "#fff" } else { "#000" };
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#333"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}" font-size="18">{v}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 6.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

const MAIN_BARS: [(&str, &str); 3] = [
    ("lj_identified", "L&J identified"),
    ("lj_basic_correct", "L&J basic meaning correct"),
    ("additional", "additional annotations"),
];
const SUB_BARS: [(&str, &str); 2] = [
    ("additional_metaphorical", "additional: metaphorical"),
    ("additional_basic_correct", "additional: basic meaning correct"),
];
const COLORS: [&str; 5] = ["#4e79a7", "#f28e2b", "#59a14f", "#8cd17d", "#b6992d"];

fn main_ratios(r: &AggregateReport) -> [Ratio; 3] {
    [r.pct_lj_identified, r.pct_lj_basic_correct, r.pct_additional]
}

fn sub_ratios(r: &AggregateReport) -> [Ratio; 2] {
    [r.pct_additional_metaphorical, r.pct_additional_basic_correct]
}

/// One group per model with three bars; the additional bar carries two
/// narrower sub-bars whose denominator is the additional = true records.
pub fn qualitative_svg(reports: &BTreeMap<String, AggregateReport>) -> String {
    let (bar, sub, gap, plot_h, left, top) = (34.0, 14.0, 40.0, 240.0, 60.0, 40.0);
    let group_w = 3.0 * bar + gap;
    let width = left + group_w * reports.len().max(1) as f64 + 260.0;
    let height = top + plot_h + 90.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">Qualitative evaluation (% of records)</text>"#);
    let base = top + plot_h;
    for tick in 0..=4 {
        let y = base - plot_h * tick as f64 / 4.0;
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, width - 260.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, tick * 25);
    }
    let h = |r: &Ratio| r.value().unwrap_or(0.0) * plot_h;
    for (g, (model, report)) in reports.iter().enumerate() {
        let gx = left + gap / 2.0 + g as f64 * group_w;
        for (i, r) in main_ratios(report).iter().enumerate() {
            let x = gx + i as f64 * bar;
            let bh = h(r);
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-metric="{}" x="{x}" y="{}" width="{}" height="{bh}" fill="{}"><title>{}: {}</title></rect>"#,
                MAIN_BARS[i].0,
                base - bh,
                bar - 4.0,
                COLORS[i],
                esc(MAIN_BARS[i].1),
                r.percent()
            );
        }
        let ax = gx + 2.0 * bar;
        for (k, r) in sub_ratios(report).iter().enumerate() {
            let x = ax + 1.0 + k as f64 * sub;
            let bh = h(r);
            let _ = writeln!(
                s,
                r##"<rect class="sub-bar" data-metric="{}" x="{x}" y="{}" width="{}" height="{bh}" fill="{}" stroke="#333" stroke-width="0.5"><title>{}: {}</title></rect>"##,
                SUB_BARS[k].0,
                base - bh,
                sub - 2.0,
                COLORS[3 + k],
                esc(SUB_BARS[k].1),
                r.percent()
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{} (n={})</text>"#,
            gx + 1.5 * bar,
            base + 18.0,
            esc(model),
            report.n
        );
    }
    let lx = width - 250.0;
    for (i, (_, label)) in MAIN_BARS.iter().chain(SUB_BARS.iter()).enumerate() {
        let y = top + 10.0 + i as f64 * 20.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}"/>"#, y - 10.0, COLORS[i]);
        let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, lx + 18.0, esc(label));
    }
    let _ = writeln!(
        s,
        r#"<text x="10" y="{}" font-size="11">Sub-bars: share of {}.</text>"#,
        height - 12.0,
        AggregateReport::SUB_BAR_DENOMINATOR
    );
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct QualitativeSummary {
    pub model: String,
    pub report: AggregateReport,
    pub conflicts: usize,
    pub sub_bar_denominator: &'static str,
}

pub fn qualitative_csv(rows: &[QualitativeSummary]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model",
        "n",
        "lj_identified",
        "lj_basic_correct",
        "additional",
        "additional_records",
        "additional_metaphorical",
        "additional_basic_correct",
        "conflicts_excluded",
    ])?;
    for q in rows {
        let r = &q.report;
        w.write_record([
            q.model.clone(),
            r.n.to_string(),
            r.pct_lj_identified.percent(),
            r.pct_lj_basic_correct.percent(),
            r.pct_additional.percent(),
            r.pct_additional_metaphorical.denominator.to_string(),
            r.pct_additional_metaphorical.percent(),
            r.pct_additional_basic_correct.percent(),
            q.conflicts.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

#[derive(Debug, Default)]
pub struct ReportFiles {
    pub written: Vec<PathBuf>,
}

/// Writes every report the given runs support into `out`.
pub fn emit_report(runs: &[PathBuf], out: &Path) -> Result<ReportFiles> {
    if runs.is_empty() {
        bail!("no runs given");
    }
    fs::create_dir_all(out)?;
    let mut files = ReportFiles::default();
    let mut write = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = out.join(name);
        fs::write(&p, bytes)?;
        files.written.push(p);
        Ok(())
    };

    let mut scores: Vec<TrofiScores> = Vec::new();
    let mut qualitative: BTreeMap<String, Vec<mipw_core::QualitativeRecord>> = BTreeMap::new();
    for dir in runs {
        let manifest = read_manifest(dir)?;
        let items = read_items(dir)?;
        if let Some(s) = trofi_scores(&items, &manifest.model.model_id, manifest.mapping)? {
            let stem = format!("{}_confusion", manifest.run_id);
            write(&format!("{stem}.txt"), confusion_text(&s.confusion).as_bytes())?;
            write(
                &format!("{stem}.svg"),
                confusion_svg(&s.confusion, &format!("{} ({})", s.model, s.mapping.as_str())).as_bytes(),
            )?;
            scores.push(s);
        }
        let log = load_log(&dir.join(run::RECORD_LOG))?;
        for r in latest_per_key(&log.entries) {
            qualitative.entry(r.model_id.clone()).or_default().push(r);
        }
    }

    let mut nothing = true;
    if !scores.is_empty() {
        let refs: Vec<&TrofiScores> = scores.iter().collect();
        write("metrics.csv", &run::metrics_csv(&refs)?)?;
        write("metrics.json", &serde_json::to_vec_pretty(&scores)?)?;
        nothing = false;
    }
    if !qualitative.is_empty() {
        let mut summaries = Vec::new();
        let mut reports = BTreeMap::new();
        for (model, records) in &qualitative {
            let outcome = consensus(records);
            let report = aggregate_qualitative(&outcome.merged)?;
            reports.insert(model.clone(), report);
            summaries.push(QualitativeSummary {
                model: model.clone(),
                report,
                conflicts: outcome.conflicts.len(),
                sub_bar_denominator: AggregateReport::SUB_BAR_DENOMINATOR,
            });
        }
        write("qualitative.svg", qualitative_svg(&reports).as_bytes())?;
        write("qualitative.csv", &qualitative_csv(&summaries)?)?;
        write("qualitative.json", &serde_json::to_vec_pretty(&summaries)?)?;
        nothing = false;
    }
    if nothing {
        bail!("nothing to report: no scored TroFi items and no qualitative records");
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_are_true_classes() {
        let text = confusion_text(&BinaryConfusion { tp: 2, fp: 1, fn_: 0, tn: 3 });
        let sums: Vec<u64> = text
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
            .collect();
        assert_eq!(sums, vec![2, 4]);
        assert!(text.lines().nth(1).unwrap().starts_with("true Nonliteral"));
    }

    #[test]
    fn heatmap_has_four_cells() {
        let svg = confusion_svg(&BinaryConfusion { tp: 2, fp: 1, fn_: 0, tn: 3 }, "m");
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains("true Nonliteral") && svg.contains("pred. Literal"));
    }

    #[test]
    fn bars_include_sub_bars() {
        let report = AggregateReport {
            n: 10,
            pct_lj_identified: Ratio::new(6, 10),
            pct_lj_basic_correct: Ratio::new(3, 10),
            pct_additional: Ratio::new(5, 10),
            pct_additional_metaphorical: Ratio::new(2, 5),
            pct_additional_basic_correct: Ratio::new(0, 5),
        };
        let mut m = BTreeMap::new();
        m.insert("gpt-4o".to_string(), report);
        m.insert("gpt-4-turbo".to_string(), report);
        let svg = qualitative_svg(&m);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 6);
        assert_eq!(svg.matches(r#"class="sub-bar""#).count(), 4);
        assert!(svg.contains("additional = true"));
        assert!(svg.contains("40.00"));
    }
}
