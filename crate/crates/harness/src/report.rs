//! CSV tables, the trend series, and a plain-text report.
//!
//! Files written into the results directory:
//!
//! - `table_<strategy>.csv`: one row per checkpoint, an (auroc, f1) column
//!   pair per test set, rounded to 4 fractional digits with a `.` decimal.
//! - `table_<strategy>_full.csv`: the same grid at full precision.
//! - `table_delta.csv` and `table_delta_full.csv`: final-checkpoint gaps,
//!   joint minus strategy, present only when a joint run is.
//! - `trend.csv`: the union-test series, one row per sampled epoch and
//!   strategy, full precision.
//! - `report.txt`: everything above rendered as text.
//!
//! An undefined AUROC cell (a test set missing a class entirely) is left
//! empty in the CSVs and shown as `-` in the text report.

use std::fs;
use std::path::Path;

use driftbench_core::metrics::{delta_vs_joint, DeltaReport, EvalMatrix};
use driftbench_core::strategies::StrategyKind;

use crate::error::{HarnessError, Result};
use crate::record::StrategyRecord;

/// Writes every report artifact for the given records. `expected` names the
/// strategies the run was supposed to produce; each one without a record
/// yields a warning and the report covers the rest. Returns the file names
/// written and the warnings raised.
pub fn write_report(
    out_dir: &Path,
    records: &[StrategyRecord],
    expected: &[StrategyKind],
) -> Result<(Vec<String>, Vec<String>)> {
    if records.is_empty() {
        return Err(HarnessError::Runtime("no strategy results to report".into()));
    }
    let warnings: Vec<String> = expected
        .iter()
        .filter(|kind| records.iter().all(|r| r.strategy != **kind))
        .map(|kind| format!("results for {kind} are missing; the report skips it"))
        .collect();

    let joint = records.iter().find(|r| r.strategy == StrategyKind::Joint);
    let mut deltas: Vec<(StrategyKind, DeltaReport)> = Vec::new();
    if let Some(joint) = joint {
        for record in records.iter().filter(|r| r.strategy != StrategyKind::Joint) {
            deltas.push((record.strategy, delta_vs_joint(&record.matrix, &joint.matrix)?));
        }
    }

    let mut artifacts = Vec::new();
    let mut write = |name: String, content: String| -> Result<()> {
        fs::write(out_dir.join(&name), content)?;
        artifacts.push(name);
        Ok(())
    };

    for record in records {
        write(format!("table_{}.csv", record.strategy), table_csv(&record.matrix, fmt4, opt4))?;
        write(
            format!("table_{}_full.csv", record.strategy),
            table_csv(&record.matrix, fmt_full, opt_full),
        )?;
    }
    if !deltas.is_empty() {
        write("table_delta.csv".into(), delta_csv(&deltas, fmt4, opt4))?;
        write("table_delta_full.csv".into(), delta_csv(&deltas, fmt_full, opt_full))?;
    }
    write("trend.csv".into(), trend_csv(records))?;
    write("report.txt".into(), render_text(records, &deltas, &warnings))?;
    Ok((artifacts, warnings))
}

/// Rebuilds the report from the results files already in a directory.
/// The expected strategy set comes from `manifest.json` when present, so a
/// regenerated report is byte-identical to the one the run wrote.
pub fn emit_report(results_dir: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let expected = match crate::manifest::RunManifest::load(&results_dir.join("manifest.json")) {
        Ok(manifest) => manifest.strategies.iter().map(|s| s.strategy).collect(),
        Err(_) => vec![StrategyKind::Naive, StrategyKind::Lfl, StrategyKind::Joint],
    };
    let mut records = Vec::new();
    for kind in &expected {
        let path = results_dir.join(StrategyRecord::file_name(*kind));
        if path.exists() {
            records.push(StrategyRecord::load(&path)?);
        }
    }
    if records.is_empty() {
        return Err(HarnessError::Runtime(format!(
            "no results files found in {}",
            results_dir.display()
        )));
    }
    write_report(results_dir, &records, &expected)
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_full(v: f64) -> String {
    format!("{v}")
}

fn opt4(v: Option<f64>) -> String {
    v.map(fmt4).unwrap_or_default()
}

fn opt_full(v: Option<f64>) -> String {
    v.map(fmt_full).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn table_csv(
    matrix: &EvalMatrix,
    fmt: fn(f64) -> String,
    opt: fn(Option<f64>) -> String,
) -> String {
    let mut out = String::from("stage");
    for set in &matrix.test_sets {
        out.push_str(&format!(",{},{}", csv_field(&format!("{set}_auroc")), csv_field(&format!("{set}_f1"))));
    }
    out.push('\n');
    for row in &matrix.rows {
        out.push_str(&csv_field(&row.label));
        for cell in &row.cells {
            out.push_str(&format!(",{},{}", opt(cell.auroc), fmt(cell.f1)));
        }
        out.push('\n');
    }
    out
}

fn delta_csv(
    deltas: &[(StrategyKind, DeltaReport)],
    fmt: fn(f64) -> String,
    opt: fn(Option<f64>) -> String,
) -> String {
    let mut out = String::from("strategy");
    for set in &deltas[0].1.test_sets {
        out.push_str(&format!(
            ",{},{}",
            csv_field(&format!("{set}_delta_auroc")),
            csv_field(&format!("{set}_delta_f1"))
        ));
    }
    out.push('\n');
    for (kind, delta) in deltas {
        out.push_str(kind.name());
        for (da, df) in delta.d_auroc.iter().zip(&delta.d_f1) {
            out.push_str(&format!(",{},{}", opt(*da), fmt(*df)));
        }
        out.push('\n');
    }
    out
}

fn trend_csv(records: &[StrategyRecord]) -> String {
    let mut out = String::from("epoch,strategy,auroc,f1,experience_boundary\n");
    for record in records {
        for point in &record.trend {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                point.epoch,
                record.strategy,
                opt_full(point.auroc),
                fmt_full(point.f1),
                point.experience_boundary
            ));
        }
    }
    out
}

/// Pads `cells` into aligned columns, two spaces apart, first column
/// left-aligned and the rest right-aligned.
fn align(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            if i == 0 {
                line.push_str(&format!("{:<width$}", cell, width = widths[i]));
            } else {
                line.push_str(&format!("{:>width$}", cell, width = widths[i]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn pair_text(auroc: Option<f64>, f1: f64) -> String {
    let a = auroc.map(fmt4).unwrap_or_else(|| "-".into());
    format!("{a}/{}", fmt4(f1))
}

fn signed_pair_text(auroc: Option<f64>, f1: f64) -> String {
    let a = auroc.map(|v| format!("{v:+.4}")).unwrap_or_else(|| "-".into());
    format!("{a}/{f1:+.4}")
}

fn render_text(
    records: &[StrategyRecord],
    deltas: &[(StrategyKind, DeltaReport)],
    warnings: &[String],
) -> String {
    let mut out = String::from("driftbench report\n");
    for warning in warnings {
        out.push_str(&format!("warning: {warning}\n"));
    }
    for record in records {
        out.push_str(&format!(
            "\n{}: {} checkpoint(s), {} epochs, {} training samples\n",
            record.strategy,
            record.matrix.rows.len(),
            record.log.epochs.len(),
            record.log.total_samples()
        ));
        let mut rows = Vec::new();
        let mut header = vec!["stage (auroc/f1)".to_string()];
        header.extend(record.matrix.test_sets.iter().cloned());
        rows.push(header);
        for row in &record.matrix.rows {
            let mut line = vec![row.label.clone()];
            line.extend(row.cells.iter().map(|c| pair_text(c.auroc, c.f1)));
            rows.push(line);
        }
        out.push_str(&align(&rows));
    }
    if !deltas.is_empty() {
        out.push_str("\nfinal-checkpoint gap, joint minus strategy (positive favors joint)\n");
        let mut rows = Vec::new();
        let mut header = vec!["strategy (auroc/f1)".to_string()];
        header.extend(deltas[0].1.test_sets.iter().cloned());
        rows.push(header);
        for (kind, delta) in deltas {
            let mut line = vec![kind.name().to_string()];
            line.extend(
                delta
                    .d_auroc
                    .iter()
                    .zip(&delta.d_f1)
                    .map(|(da, df)| signed_pair_text(*da, *df)),
            );
            rows.push(line);
        }
        out.push_str(&align(&rows));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use driftbench_core::metrics::{Cell, EvalRow, TrendPoint};
    use driftbench_core::strategies::TrainLog;

    fn record(kind: StrategyKind, rows: &[(&str, &[(Option<f64>, f64)])]) -> StrategyRecord {
        let sets = (0..rows[0].1.len()).map(|i| format!("dom{i}")).collect();
        let mut matrix = EvalMatrix::new(sets);
        for (label, cells) in rows {
            matrix
                .push_row(EvalRow {
                    label: label.to_string(),
                    cells: cells.iter().map(|&(auroc, f1)| Cell { auroc, f1 }).collect(),
                })
                .unwrap();
        }
        StrategyRecord {
            strategy: kind,
            stage_labels: rows.iter().map(|(l, _)| l.to_string()).collect(),
            matrix,
            trend: vec![TrendPoint {
                epoch: 1,
                auroc: Some(0.625),
                f1: 0.5,
                experience_boundary: false,
            }],
            log: TrainLog::default(),
        }
    }

    #[test]
    fn table_csv_rounds_and_leaves_undefined_cells_empty() {
        let r = record(
            StrategyKind::Naive,
            &[
                ("after a", &[(Some(2.0 / 3.0), 0.5), (None, 0.25)]),
                ("after a->b", &[(Some(1.0), 1.0), (Some(0.5), 0.0)]),
            ],
        );
        let csv = table_csv(&r.matrix, fmt4, opt4);
        assert_eq!(
            csv,
            "stage,dom0_auroc,dom0_f1,dom1_auroc,dom1_f1\n\
             after a,0.6667,0.5000,,0.2500\n\
             after a->b,1.0000,1.0000,0.5000,0.0000\n"
        );
        let full = table_csv(&r.matrix, fmt_full, opt_full);
        assert!(full.contains("0.6666666666666666"), "{full}");
    }

    #[test]
    fn csv_fields_with_commas_or_quotes_are_escaped() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn trend_rows_follow_record_order_with_boolean_flags() {
        let mut a = record(StrategyKind::Naive, &[("after a", &[(Some(0.5), 0.5)])]);
        a.trend = vec![
            TrendPoint { epoch: 1, auroc: Some(0.5), f1: 0.5, experience_boundary: false },
            TrendPoint { epoch: 2, auroc: None, f1: 0.25, experience_boundary: true },
        ];
        let mut b = record(StrategyKind::Joint, &[("joint", &[(Some(0.75), 0.5)])]);
        b.trend = vec![TrendPoint { epoch: 1, auroc: Some(0.75), f1: 0.5, experience_boundary: false }];
        let csv = trend_csv(&[a, b]);
        assert_eq!(
            csv,
            "epoch,strategy,auroc,f1,experience_boundary\n\
             1,naive,0.5,0.5,false\n\
             2,naive,,0.25,true\n\
             1,joint,0.75,0.5,false\n"
        );
    }

    #[test]
    fn delta_tables_appear_only_with_a_joint_run() {
        let dir = tempfile::tempdir().unwrap();
        let naive = record(StrategyKind::Naive, &[("after a", &[(Some(0.6), 0.5)])]);
        let (artifacts, warnings) =
            write_report(dir.path(), &[naive.clone()], &[StrategyKind::Naive]).unwrap();
        assert!(warnings.is_empty());
        assert!(!artifacts.iter().any(|a| a.contains("delta")));
        assert!(dir.path().join("table_naive.csv").exists());
        assert!(!dir.path().join("table_delta.csv").exists());

        let joint = record(StrategyKind::Joint, &[("joint", &[(Some(0.9), 0.75)])]);
        let (artifacts, _) = write_report(
            dir.path(),
            &[naive, joint],
            &[StrategyKind::Naive, StrategyKind::Joint],
        )
        .unwrap();
        assert!(artifacts.iter().any(|a| a == "table_delta.csv"));
        let delta = fs::read_to_string(dir.path().join("table_delta.csv")).unwrap();
        assert_eq!(
            delta,
            "strategy,dom0_delta_auroc,dom0_delta_f1\nnaive,0.3000,0.2500\n"
        );
    }

    #[test]
    fn missing_expected_strategies_produce_a_partial_report_with_warnings() {
        let dir = tempfile::tempdir().unwrap();
        let naive = record(StrategyKind::Naive, &[("after a", &[(Some(0.6), 0.5)])]);
        let (_, warnings) = write_report(
            dir.path(),
            &[naive],
            &[StrategyKind::Naive, StrategyKind::Lfl, StrategyKind::Joint],
        )
        .unwrap();
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("lfl"), "{warnings:?}");
        let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(text.contains("warning: results for lfl are missing"), "{text}");
        assert!(text.contains("naive"), "{text}");
    }

    #[test]
    fn text_report_shows_dashes_for_undefined_cells() {
        let r = record(StrategyKind::Naive, &[("after a", &[(None, 0.5)])]);
        let text = render_text(&[r], &[], &[]);
        assert!(text.contains("-/0.5000"), "{text}");
    }
}
