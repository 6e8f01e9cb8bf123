//! Command implementations: scenario loading, dispatch and result
//! emission. Output files are written atomically (temp file + rename).

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::audit::{audit_conservation, born_residual_sweep, AuditReport, AuditRun};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Floats are printed with 17 significant digits so trajectories
/// round-trip bit-exactly through the CSV.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let pid = std::process::id();
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".{pid}.{nanos}.tmp"));
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Propagate the scenario and write the trajectory CSV. The header is
/// `t` followed by `<name>_exp`, `<name>_current`, `<name>_diss_rhs`
/// per observable, plus `<name>_diss_lhs` when the exact oracle runs.
pub fn cmd_run(scenario_path: &Path, out_path: &Path) -> Result<()> {
    let scn = Scenario::load(scenario_path)?;
    let run = audit_conservation(&scn)?;
    let has_lhs = run.reports.iter().all(|r| r.lhs_series.is_some());

    let mut header = vec!["t".to_string()];
    for report in &run.reports {
        header.push(format!("{}_exp", report.observable));
        header.push(format!("{}_current", report.observable));
        header.push(format!("{}_diss_rhs", report.observable));
        if has_lhs {
            header.push(format!("{}_diss_lhs", report.observable));
        }
    }

    let times = &run.reports[0].times;
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (idx, t) in times.iter().enumerate() {
        let mut row = vec![fmt_float(*t)];
        for report in &run.reports {
            row.push(fmt_float(report.expectation_series[idx]));
            row.push(fmt_float(report.current_series[idx]));
            row.push(fmt_float(report.rhs_series[idx]));
            if has_lhs {
                row.push(fmt_float(report.lhs_series.as_ref().unwrap()[idx]));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(out_path, out.as_bytes())
}

#[derive(Serialize)]
struct ThresholdsJson {
    pointwise: f64,
    integral: f64,
}

#[derive(Serialize)]
struct SeriesJson {
    times: Vec<f64>,
    expectation: Vec<f64>,
    current: Vec<f64>,
    diss_rhs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diss_lhs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct ReportJson {
    observable: String,
    commuting: bool,
    verdict: crate::audit::Verdict,
    max_abs_rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_residual: Option<f64>,
    integrated_current: f64,
    observable_change: f64,
    integral_gap: f64,
    thresholds: ThresholdsJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<SeriesJson>,
}

fn report_json(report: &AuditReport, include_series: bool) -> ReportJson {
    ReportJson {
        observable: report.observable.clone(),
        commuting: report.commuting,
        verdict: report.verdict,
        max_abs_rhs: report.max_abs_rhs,
        max_abs_residual: report.max_abs_residual,
        integrated_current: report.integrated_current,
        observable_change: report.observable_change,
        integral_gap: report.integral_gap,
        thresholds: ThresholdsJson {
            pointwise: report.pointwise_threshold,
            integral: report.integral_threshold,
        },
        series: include_series.then(|| SeriesJson {
            times: report.times.clone(),
            expectation: report.expectation_series.clone(),
            current: report.current_series.clone(),
            diss_rhs: report.rhs_series.clone(),
            diss_lhs: report.lhs_series.clone(),
            residual: report.residual_series.clone(),
        }),
    }
}

/// Audit every observable of the scenario. Returns the audit run so the
/// caller can map the verdicts onto the process exit code.
pub fn cmd_audit(scenario_path: &Path, out_path: &Path, include_series: bool) -> Result<AuditRun> {
    let scn = Scenario::load(scenario_path)?;
    let run = audit_conservation(&scn)?;
    let reports: Vec<ReportJson> = run
        .reports
        .iter()
        .map(|r| report_json(r, include_series))
        .collect();
    let mut text = serde_json::to_string_pretty(&reports)?;
    text.push('\n');
    write_atomic(out_path, text.as_bytes())?;
    Ok(run)
}

/// Number of worker threads for the sweep: OCCUR_THREADS when set,
/// otherwise the available parallelism.
pub fn sweep_threads() -> usize {
    match std::env::var("OCCUR_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

/// Interaction-strength sweep; writes a `g,max_residual` CSV. Residuals
/// are audited for the first observable of the scenario.
pub fn cmd_sweep(scenario_path: &Path, param: &str, values: &str, out_path: &Path) -> Result<()> {
    if param != "coupling" {
        return Err(Error::Usage(format!(
            "unsupported sweep parameter '{param}' (only 'coupling')"
        )));
    }
    let parsed: Vec<f64> = values
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Usage(format!("cannot parse sweep value '{s}'")))
        })
        .collect::<Result<_>>()?;
    if parsed.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }

    let scn = Scenario::load(scenario_path)?;
    let g = scn.observables.first().ok_or_else(|| {
        Error::validation("observables", "need at least one observable")
    })?;
    let rows = born_residual_sweep(&scn, g, &parsed, sweep_threads())?;

    let mut out = String::from("g,max_residual\n");
    for (g_val, residual) in rows {
        out.push_str(&format!("{},{}\n", fmt_float(g_val), fmt_float(residual)));
    }
    write_atomic(out_path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        let s = fmt_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("occur-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sweep_rejects_bad_values() {
        let err = cmd_sweep(
            Path::new("/nonexistent.json"),
            "coupling",
            "
            ",
            Path::new("/tmp/x.csv"),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let err = cmd_sweep(
            Path::new("/nonexistent.json"),
            "temperature",
            "0.1",
            Path::new("/tmp/x.csv"),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
