//! Tabular outputs and gnuplot material for PLV summaries and experiments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cfm_core::experiment::{CalibrationBin, ExperimentReport, NoiseKind};
use cfm_core::PlvSummary;
use serde::Serialize;

use crate::error::{CfmError, Result};
use crate::io::write_json;

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CfmError::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CfmError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| CfmError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    for row in rows {
        w.serialize(row).map_err(fail)?;
    }
    w.flush().map_err(|e| CfmError::io(path, e))
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `k,kprime,plv_mean,ci_low,ci_high,p_exceed,edge`, one row per pair.
pub fn write_edges_csv(path: impl AsRef<Path>, summary: &PlvSummary) -> Result<()> {
    write_rows(path.as_ref(), &summary.pairs)
}

#[derive(Serialize)]
struct CurveRow {
    kind: &'static str,
    level: f64,
    method: &'static str,
    mean: f64,
    q05: f64,
    q95: f64,
}

#[derive(Serialize)]
struct CalibrationRow {
    kind: &'static str,
    /// Empty for the row pooled over levels.
    level: String,
    bin_lower: f64,
    bin_upper: f64,
    count: usize,
    mean_probability: String,
    empirical_frequency: String,
}

#[derive(Serialize)]
struct TableRow {
    kind: &'static str,
    level: f64,
    naive_tpr: String,
    naive_f1: String,
    model_tpr: String,
    model_f1: String,
    naive_mae: f64,
    model_mae: f64,
}

fn kinds(report: &ExperimentReport) -> Vec<NoiseKind> {
    let mut kinds: Vec<NoiseKind> = Vec::new();
    for c in &report.cells {
        if !kinds.contains(&c.noise.kind) {
            kinds.push(c.noise.kind);
        }
    }
    kinds
}

fn calibration_rows(kind: NoiseKind, level: String, bins: &[CalibrationBin]) -> Vec<CalibrationRow> {
    bins.iter()
        .map(|b| CalibrationRow {
            kind: kind.name(),
            level: level.clone(),
            bin_lower: b.lower,
            bin_upper: b.upper,
            count: b.count,
            mean_probability: na(b.mean_probability),
            empirical_frequency: na(b.empirical_frequency),
        })
        .collect()
}

/// `report.json`, `curves.csv`, `calibration.csv` and `table.csv` in `dir`.
pub fn write_experiment(dir: impl AsRef<Path>, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| CfmError::io(dir, e))?;
    let paths: Vec<PathBuf> = ["report.json", "curves.csv", "calibration.csv", "table.csv"]
        .iter()
        .map(|n| dir.join(n))
        .collect();

    write_json(&paths[0], report)?;

    let curves = report.cells.iter().flat_map(|c| {
        [("naive", c.naive.error), ("model", c.model.error)].map(|(method, e)| CurveRow {
            kind: c.noise.kind.name(),
            level: c.noise.level,
            method,
            mean: e.mean,
            q05: e.q05,
            q95: e.q95,
        })
    });
    write_rows(&paths[1], curves)?;

    let mut calibration = Vec::new();
    for c in &report.cells {
        calibration.extend(calibration_rows(
            c.noise.kind,
            c.noise.level.to_string(),
            &c.calibration,
        ));
    }
    for kind in kinds(report) {
        calibration.extend(calibration_rows(kind, String::new(), &report.pooled_calibration(kind)));
    }
    write_rows(&paths[2], calibration)?;

    let table = report.cells.iter().map(|c| TableRow {
        kind: c.noise.kind.name(),
        level: c.noise.level,
        naive_tpr: na(c.naive.metrics.tpr),
        naive_f1: na(c.naive.metrics.f1),
        model_tpr: na(c.model.metrics.tpr),
        model_f1: na(c.model.metrics.f1),
        naive_mae: c.naive.error.mean,
        model_mae: c.model.error.mean,
    });
    write_rows(&paths[3], table)?;
    Ok(paths)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CfmError::io(path, e))
}

/// Gnuplot data files and scripts: per noise kind, the error curves of both
/// methods with their 5%/95% bands, and the calibration scatter against the
/// diagonal. Returns the paths written.
pub fn emit_gnuplot(dir: impl AsRef<Path>, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| CfmError::io(dir, e))?;
    let mut written = Vec::new();
    for kind in kinds(report) {
        let name = kind.name();
        for model in [false, true] {
            let method = if model { "model" } else { "naive" };
            let mut text = String::from("# level mean q05 q95\n");
            for p in report.curve(kind, model) {
                let _ = writeln!(text, "{} {} {} {}", p.level, p.error.mean, p.error.q05, p.error.q95);
            }
            let path = dir.join(format!("error_{name}_{method}.dat"));
            write_text(&path, &text)?;
            written.push(path);
        }

        let mut text = String::from("# mean_probability empirical_frequency count\n");
        for b in report.pooled_calibration(kind) {
            if let (Some(p), Some(f)) = (b.mean_probability, b.empirical_frequency) {
                let _ = writeln!(text, "{p} {f} {}", b.count);
            }
        }
        let path = dir.join(format!("calibration_{name}.dat"));
        write_text(&path, &text)?;
        written.push(path);

        let script = format!(
            "set terminal pngcairo size 800,600\n\
             set output 'error_{name}.png'\n\
             set xlabel 'noise level b'\n\
             set ylabel 'absolute PLV error'\n\
             set key top left\n\
             plot 'error_{name}_naive.dat' using 1:3:4 with filledcurves fs transparent solid 0.2 lc rgb '#d62728' notitle, \\\n\
             \x20    'error_{name}_naive.dat' using 1:2 with linespoints lc rgb '#d62728' title 'naive', \\\n\
             \x20    'error_{name}_model.dat' using 1:3:4 with filledcurves fs transparent solid 0.2 lc rgb '#1f77b4' notitle, \\\n\
             \x20    'error_{name}_model.dat' using 1:2 with linespoints lc rgb '#1f77b4' title 'model'\n"
        );
        let path = dir.join(format!("error_{name}.gp"));
        write_text(&path, &script)?;
        written.push(path);

        let script = format!(
            "set terminal pngcairo size 600,600\n\
             set output 'calibration_{name}.png'\n\
             set xlabel 'mean posterior probability'\n\
             set ylabel 'empirical frequency'\n\
             set xrange [0:1]\n\
             set yrange [0:1]\n\
             set size square\n\
             plot x with lines dt 2 lc rgb 'gray' notitle, \\\n\
             \x20    'calibration_{name}.dat' using 1:2 with points pt 7 ps 1.5 title 'bins'\n"
        );
        let path = dir.join(format!("calibration_{name}.gp"));
        write_text(&path, &script)?;
        written.push(path);
    }
    Ok(written)
}
