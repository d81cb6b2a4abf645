use std::io::Write;
use std::path::{Path, PathBuf};

use super::experiments::{ExperimentKind, ExperimentReport, SummaryRow};
use crate::error::Result;
use crate::io::{create, fmt_f64, write_comment};

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer<W: Write>(mut w: W, comment: Option<&str>) -> Result<csv::Writer<W>> {
    write_comment(&mut w, comment)?;
    Ok(csv::Writer::from_writer(w))
}

/// `run,<setting>,method,lambda_policy,lambda,error,path_failed,note`.
pub fn write_errors<W: Write>(w: W, report: &ExperimentReport, comment: Option<&str>) -> Result<()> {
    let mut wr = csv_writer(w, comment)?;
    wr.write_record([
        "run",
        report.kind.setting_name(),
        "method",
        "lambda_policy",
        "lambda",
        "error",
        "path_failed",
        "note",
    ])?;
    for r in &report.errors {
        wr.write_record([
            &r.run.to_string(),
            &fmt_f64(r.setting),
            r.method.name(),
            &r.policy.to_string(),
            &opt(r.lambda),
            &opt(r.error),
            &(if r.path_failed { "1" } else { "0" }).to_string(),
            &r.note,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `run,<setting>,method,lambda,l1_norm,inf_residual,l2_residual,support,error`.
pub fn write_paths<W: Write>(w: W, report: &ExperimentReport, comment: Option<&str>) -> Result<()> {
    let mut wr = csv_writer(w, comment)?;
    wr.write_record([
        "run",
        report.kind.setting_name(),
        "method",
        "lambda",
        "l1_norm",
        "inf_residual",
        "l2_residual",
        "support",
        "error",
    ])?;
    for r in &report.paths {
        wr.write_record([
            &r.run.to_string(),
            &fmt_f64(r.setting),
            r.method.name(),
            &fmt_f64(r.lambda),
            &opt(r.l1_norm),
            &opt(r.inf_residual),
            &opt(r.l2_residual),
            &r.support.map(|s| s.to_string()).unwrap_or_default(),
            &opt(r.error),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `alpha,run,method,lambda,weighted_error`; the zero predictor appears as
/// method `zero` with an empty run.
pub fn write_offpolicy<W: Write>(w: W, report: &ExperimentReport, comment: Option<&str>) -> Result<()> {
    let mut wr = csv_writer(w, comment)?;
    wr.write_record(["alpha", "run", "method", "lambda", "weighted_error"])?;
    for &(alpha, z) in &report.zero_reference {
        wr.write_record([&fmt_f64(alpha), "", "zero", "", &fmt_f64(z)])?;
    }
    for r in &report.errors {
        wr.write_record([
            &fmt_f64(r.setting),
            &r.run.to_string(),
            r.method.name(),
            &opt(r.lambda),
            &opt(r.error),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `<setting>,method,lambda_policy,mean,std,successes,failures,path_failures`.
pub fn write_summary<W: Write>(w: W, kind: ExperimentKind, rows: &[SummaryRow], comment: Option<&str>) -> Result<()> {
    let mut wr = csv_writer(w, comment)?;
    wr.write_record([
        kind.setting_name(),
        "method",
        "lambda_policy",
        "mean",
        "std",
        "successes",
        "failures",
        "path_failures",
    ])?;
    for r in rows {
        wr.write_record([
            &fmt_f64(r.setting),
            r.method.name(),
            &r.policy.to_string(),
            &opt(r.mean),
            &opt(r.std),
            &r.successes.to_string(),
            &r.failures.to_string(),
            &r.path_failures.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Write every CSV of a report into `dir`; returns the paths written.
pub fn write_report(dir: &Path, report: &ExperimentReport, comment: Option<&str>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut dyn Write) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        written.push(path.clone());
        let mut file = create(&path)?;
        f(&mut file)?;
        file.flush()?;
        Ok(())
    };
    if report.kind == ExperimentKind::OffPolicy {
        emit("offpolicy.csv", &|w| write_offpolicy(w, report, comment))?;
    } else {
        emit("errors.csv", &|w| write_errors(w, report, comment))?;
    }
    emit("paths.csv", &|w| write_paths(w, report, comment))?;
    emit("summary.csv", &|w| write_summary(w, report.kind, &report.summary(), comment))?;
    Ok(written)
}

/// Two-column `setting mean` files, one per `(method, policy)` curve, plus
/// the zero predictor for off-policy reports.
pub fn write_gnuplot(dir: &Path, report: &ExperimentReport, comment: Option<&str>) -> Result<Vec<PathBuf>> {
    let summary = report.summary();
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &summary {
        let name = format!("{}_{}", r.method.name(), r.policy);
        let Some(mean) = r.mean else { continue };
        match curves.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.push((r.setting, mean)),
            None => curves.push((name, vec![(r.setting, mean)])),
        }
    }
    if !report.zero_reference.is_empty() {
        curves.push(("zero".into(), report.zero_reference.clone()));
    }
    let mut written = Vec::new();
    for (name, pts) in curves {
        let path = dir.join(format!("{name}.dat"));
        let mut f = create(&path)?;
        write_comment(&mut f, comment)?;
        writeln!(f, "# {} mean_{}", report.kind.setting_name(), report.metric)?;
        for (x, y) in pts {
            writeln!(f, "{} {}", fmt_f64(x), fmt_f64(y))?;
        }
        f.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{run_off_policy, run_on_policy, CorruptedChainSpec, ExperimentConfig, LambdaPolicy};
    use crate::estimators::Method;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            chain: CorruptedChainSpec { s_bar: 2, ..Default::default() },
            n: 100,
            runs: 2,
            grid: vec![1.0, 0.1, 0.01],
            test_points: 50,
            ..Default::default()
        }
    }

    #[test]
    fn report_files_carry_header_and_rows() {
        let rep = run_on_policy(&cfg(), &[2], &[Method::Ridge, Method::Dantzig], LambdaPolicy::Oracle).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(dir.path(), &rep, Some("seed 0")).unwrap();
        let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["errors.csv", "paths.csv", "summary.csv"]);
        let errors = std::fs::read_to_string(&files[0]).unwrap();
        let mut lines = errors.lines();
        assert_eq!(lines.next(), Some("# seed 0"));
        assert_eq!(lines.next(), Some("run,s_bar,method,lambda_policy,lambda,error,path_failed,note"));
        assert_eq!(lines.count(), 4);
        let paths = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(paths.lines().count(), 2 + 2 * 2 * 3);
        let summary = std::fs::read_to_string(&files[2]).unwrap();
        assert_eq!(summary.lines().count(), 2 + 2);
    }

    #[test]
    fn gnuplot_curves() {
        let rep = run_off_policy(&cfg(), &[0.0, 0.5], &[Method::Ridge]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(dir.path(), &rep, None).unwrap();
        assert!(files[0].ends_with("offpolicy.csv"));
        let off = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(off.lines().filter(|l| l.contains(",zero,")).count(), 2);
        let curves = write_gnuplot(dir.path(), &rep, Some("c")).unwrap();
        assert_eq!(curves.len(), 2);
        let ridge = std::fs::read_to_string(&curves[0]).unwrap();
        let data: Vec<&str> = ridge.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert!(data[0].starts_with("0.0 "));
    }
}
