use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{Context, Result};
use dlstd_core::benchmarks::{
    analytic_dantzig_path_1d, run_cv_experiment, run_off_policy, run_on_policy, two_state_system, write_gnuplot,
    write_report, AnalyticPath1d, ExperimentReport, LambdaPolicy, MuMode, TwoStateSpec,
};
use dlstd_core::estimators::{fit_grid, Method};
use dlstd_core::io::{fmt_f64, write_comment};
use dlstd_core::verification::run_suite;

use crate::config::{ChainKind, CommandKind, RunConfig};
use crate::output::Staging;

fn analytic(path: &AnalyticPath1d, method: Method, lambda: f64) -> Option<f64> {
    match method {
        Method::Lstd => Some(path.b / path.a),
        Method::Ridge => path.ridge(lambda),
        Method::Dantzig => Some(path.dantzig(lambda)),
        Method::L1Lstd => Some(path.l1_lstd(lambda)),
        Method::LassoTd => path.lasso_td(lambda),
    }
}

/// `two_state_paths.csv`: one row per `(mode, lambda)` with, for every
/// method, the fitted coefficient, a status and the closed-form value.
pub fn two_state(cfg: &RunConfig) -> Result<bool> {
    let out = cfg.out.as_ref().expect("resolved");
    let header = cfg.describe();
    let mut grid = cfg.grid.values()?;
    grid.push(0.0);
    let mut rows = Vec::new();
    for &mode in &cfg.modes {
        let sys = two_state_system(&TwoStateSpec { gamma: cfg.gamma, mu_mode: mode })?;
        let path = analytic_dantzig_path_1d(sys.a[(0, 0)], sys.b[0])?;
        println!("{mode} gamma={}: a={:.6} b={:.6} knot={:.6}", cfg.gamma, path.a, path.b, path.knot());
        let mut fitted = Vec::new();
        for &m in &cfg.methods {
            let p = fit_grid(m, &sys, &grid, &cfg.fit()).with_context(|| format!("{m} path ({mode})"))?;
            let failures = p.points.iter().filter(|pt| pt.outcome.is_err()).count();
            match p.points.iter().find_map(|pt| pt.outcome.as_ref().err().map(|e| (pt.lambda, e))) {
                Some((lambda, e)) => {
                    println!("  {m}: fails at {failures}/{} grid points, first at lambda={lambda}", grid.len());
                    eprintln!("  {m} ({mode}): {e}");
                }
                None => println!("  {m}: ok"),
            }
            fitted.push((m, p));
        }
        rows.push((mode, path, fitted));
    }

    let stage = Staging::new(out)?;
    let file = stage.path().join("two_state_paths.csv");
    let mut w = BufWriter::new(File::create(&file)?);
    write_comment(&mut w, Some(&header))?;
    let mut cols = vec!["mode".to_string(), "gamma".into(), "lambda".into()];
    for &m in &cfg.methods {
        cols.extend([m.to_string(), format!("{m}_status"), format!("{m}_analytic")]);
    }
    writeln!(w, "{}", cols.join(","))?;
    for (mode, path, fitted) in &rows {
        for (i, &lambda) in grid.iter().enumerate() {
            let mut fields = vec![mode_name(*mode).to_string(), fmt_f64(cfg.gamma), fmt_f64(lambda)];
            for (m, p) in fitted {
                let (value, status) = match &p.points[i].outcome {
                    Ok(e) => (fmt_f64(e.theta[0]), "ok"),
                    Err(_) => (String::new(), "failed"),
                };
                fields.extend([value, status.to_string(), analytic(path, *m, lambda).map(fmt_f64).unwrap_or_default()]);
            }
            writeln!(w, "{}", fields.join(","))?;
        }
    }
    w.flush()?;
    drop(w);
    for f in stage.commit()? {
        eprintln!("wrote {}", f.display());
    }
    Ok(true)
}

fn mode_name(mode: MuMode) -> &'static str {
    match mode {
        MuMode::OnPolicy => "on-policy",
        MuMode::OffPolicyUniform => "off-policy",
    }
}

fn print_summary(report: &ExperimentReport) {
    println!(
        "{:>8} {:<10} {:<7} {:>10} {:>10} {:>5} {:>5}",
        report.kind.setting_name(),
        "method",
        "policy",
        format!("mean_{}", report.metric),
        "std",
        "ok",
        "fail"
    );
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    for r in report.summary() {
        println!(
            "{:>8} {:<10} {:<7} {:>10} {:>10} {:>5} {:>5}",
            r.setting,
            r.method.name(),
            r.policy.to_string(),
            cell(r.mean),
            cell(r.std),
            r.successes,
            r.failures
        );
    }
    for &(alpha, z) in &report.zero_reference {
        println!("{alpha:>8} {:<10} {:<7} {:>10.4}", "zero", "-", z);
    }
}

pub fn chain(cfg: &RunConfig, kind: ChainKind) -> Result<bool> {
    let out = cfg.out.as_ref().expect("resolved");
    let header = cfg.describe();
    let exp = cfg.experiment(cfg.s_bars[0])?;
    eprintln!("running {header}");
    let report = match kind {
        ChainKind::OnPolicy => {
            let policy = cfg.rows.first().map(|r| r.1).unwrap_or(LambdaPolicy::Oracle);
            run_on_policy(&exp, &cfg.s_bars, &cfg.methods, policy)?
        }
        ChainKind::OffPolicy => run_off_policy(&exp, &cfg.alphas, &cfg.methods)?,
        ChainKind::Cv => run_cv_experiment(&exp, &cfg.rows)?,
    };
    let stage = Staging::new(out)?;
    write_report(stage.path(), &report, Some(&header))?;
    if cfg.emit_gnuplot {
        write_gnuplot(stage.path(), &report, Some(&header))?;
    }
    print_summary(&report);
    for f in stage.commit()? {
        eprintln!("wrote {}", f.display());
    }
    Ok(true)
}

pub fn verify(cfg: &RunConfig) -> Result<bool> {
    let vcfg = cfg.verify();
    let mut results = Vec::new();
    for &suite in &cfg.suites {
        let r = run_suite(suite, &vcfg)?;
        println!("{r}");
        for f in &r.failures {
            eprintln!("  {suite}: {f}");
        }
        results.push(r);
    }
    if let Some(out) = &cfg.out {
        let stage = Staging::new(out)?;
        let mut w = BufWriter::new(File::create(stage.path().join("verify.csv"))?);
        write_comment(&mut w, Some(&cfg.describe()))?;
        writeln!(w, "suite,passed,failed,skipped,worst")?;
        for r in &results {
            writeln!(w, "{},{},{},{},{}", r.suite, r.passed, r.failed, r.skipped, fmt_f64(r.worst))?;
        }
        w.flush()?;
        drop(w);
        stage.commit()?;
    }
    Ok(results.iter().all(|r| r.all_passed()))
}

pub fn run(cfg: &RunConfig) -> Result<bool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build_global()
        .context("starting the worker pool")?;
    match cfg.command {
        CommandKind::TwoState => two_state(cfg),
        CommandKind::Chain(kind) => chain(cfg, kind),
        CommandKind::Verify => verify(cfg),
    }
}
