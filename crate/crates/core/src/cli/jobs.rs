//! Job execution: every job writes its files into the output directory and
//! returns a short report for standard output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::config::{JobKind, JobSpec, SweepAxis};
use crate::analytics::{
    growth_rate, optimal_tax, GrowthMethod, GrowthResult, OptimalTax, SearchWindow,
};
use crate::error::{Error, Result};
use crate::model::{classify, derive, ModelParams, RegimeKind};
use crate::sim::estimators::{estimate_growth_agents, estimate_growth_drift};
use crate::sim::export::{write_file, write_path, write_public, write_snapshots};
use crate::sim::{
    default_hill_k, estimate_growth, estimate_growth_public, hill_tail_exponent, sample_gini,
    simulate_agents, simulate_two_sector, GrowthEstimate,
};

/// Bootstrap resamples behind the Hill standard errors in agent summaries.
const HILL_BOOTSTRAP: usize = 200;

#[derive(Debug, Clone, Default)]
pub struct JobOutput {
    pub files: Vec<PathBuf>,
    /// Human- or machine-readable report (single-line JSON for `classify`).
    pub report: String,
}

pub fn run(job: &JobSpec, out_dir: &Path) -> Result<JobOutput> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut out = JobOutput::default();
    match job.kind {
        JobKind::Analytic => analytic(job, out_dir, &mut out)?,
        JobKind::Sweep => sweep(job, out_dir, &mut out)?,
        JobKind::OptimalTax => single_optimum(job, out_dir, &mut out)?,
        JobKind::Classify => classify_job(job, out_dir, &mut out)?,
        JobKind::Simulate => simulate(job, out_dir, &mut out)?,
        JobKind::Agents => agents(job, out_dir, &mut out)?,
    }
    Ok(out)
}

fn emit(
    out: &mut JobOutput,
    path: PathBuf,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    write_file(&path, |w| body(w))?;
    out.files.push(path);
    Ok(())
}

/// Points of the configured sweep, or the single configured model.
fn model_points(job: &JobSpec) -> Result<Vec<(f64, ModelParams)>> {
    match &job.config.sweep {
        Some(axis) => axis
            .values()
            .into_iter()
            .map(|v| Ok((v, axis.apply(&job.config.model, v)?)))
            .collect(),
        None => Ok(vec![(f64::NAN, job.config.model.clone())]),
    }
}

struct GrowthRow {
    phi: f64,
    f: f64,
    nu: f64,
    closed: GrowthResult,
    quadrature: Option<f64>,
    flags: Vec<String>,
}

fn growth_row(p: &ModelParams) -> Result<GrowthRow> {
    let d = derive(p)?;
    let closed = growth_rate(&d, GrowthMethod::ClosedForm)?;
    let mut flags = vec![closed.method.as_str().to_string()];
    if d.f == 0.0 || d.phi == 0.0 {
        flags.push("decoupled_limit".into());
    }
    if closed.note.is_some() {
        flags.push("gibbs_validity_questionable".into());
    }
    let quadrature = match growth_rate(&d, GrowthMethod::Quadrature) {
        Ok(r) => Some(r.g),
        Err(_) => {
            flags.push("quadrature_failed".into());
            None
        }
    };
    Ok(GrowthRow {
        phi: d.phi,
        f: d.f,
        nu: d.nu,
        closed,
        quadrature,
        flags,
    })
}

fn analytic(job: &JobSpec, dir: &Path, out: &mut JobOutput) -> Result<()> {
    let points = model_points(job)?;
    let rows: Vec<GrowthRow> = points
        .par_iter()
        .map(|(_, p)| growth_row(p))
        .collect::<Result<_>>()?;
    emit(out, dir.join("growth.csv"), |w| {
        writeln!(w, "phi,f,nu,g_closed,g_quadrature,method_flags")?;
        for r in &rows {
            let quad = r.quadrature.map(|g| g.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.phi,
                r.f,
                r.nu,
                r.closed.g,
                quad,
                r.flags.join("|")
            )?;
        }
        Ok(())
    })?;
    let _ = write!(
        out.report,
        "analytic: {} row(s) written to growth.csv",
        rows.len()
    );
    Ok(())
}

fn window_for(job: &JobSpec, p: &ModelParams) -> Result<SearchWindow> {
    let default = SearchWindow::default_for(&derive(p)?);
    Ok(SearchWindow {
        phi_min: job.config.search.phi_min.unwrap_or(default.phi_min),
        phi_max: job.config.search.phi_max.unwrap_or(default.phi_max),
    })
}

enum PhasePoint {
    Finite {
        regime: RegimeKind,
        gap: f64,
        opt: OptimalTax,
    },
    Infinite {
        gap: f64,
        g_limit: f64,
    },
}

fn phase_point(job: &JobSpec, p: &ModelParams) -> Result<PhasePoint> {
    let d = derive(p)?;
    let regime = classify(&d)?;
    if regime.kind == RegimeKind::FullTax {
        // growth rises monotonically towards mu_tilde as phi -> infinity
        return Ok(PhasePoint::Infinite {
            gap: regime.gap,
            g_limit: d.mu_tilde,
        });
    }
    let opt = optimal_tax(p, Some(window_for(job, p)?), job.config.search.hold)?;
    Ok(PhasePoint::Finite {
        regime: regime.kind,
        gap: regime.gap,
        opt,
    })
}

fn sweep(job: &JobSpec, dir: &Path, out: &mut JobOutput) -> Result<()> {
    let axis: &SweepAxis = job.config.sweep.as_ref().ok_or_else(|| Error::Config {
        line: None,
        msg: "the sweep job needs a [sweep] section".into(),
    })?;
    let points = model_points(job)?;
    let results: Vec<PhasePoint> = points
        .par_iter()
        .map(|(_, p)| phase_point(job, p))
        .collect::<Result<_>>()?;
    let by_gap = axis.param == "gap";
    let name = if by_gap { "phase.csv" } else { "sweep.csv" };
    let mut warnings = 0;
    emit(out, dir.join(name), |w| {
        if by_gap {
            writeln!(w, "gap,phi_star,g_star,regime")?;
        } else {
            writeln!(w, "{},gap,phi_star,g_star,regime", axis.param)?;
        }
        for ((value, _), r) in points.iter().zip(&results) {
            if !by_gap {
                write!(w, "{value},")?;
            }
            match r {
                PhasePoint::Finite { regime, gap, opt } => {
                    if opt.non_unimodal {
                        warnings += 1;
                    }
                    writeln!(w, "{},{},{},{}", gap, opt.phi_star, opt.g_star, regime)?;
                }
                PhasePoint::Infinite { gap, g_limit } => {
                    writeln!(w, "{},inf,{},{}", gap, g_limit, RegimeKind::FullTax)?;
                }
            }
        }
        Ok(())
    })?;
    let _ = write!(
        out.report,
        "sweep: {} point(s) over `{}` written to {name}",
        points.len(),
        axis.param
    );
    if warnings > 0 {
        let _ = write!(
            out.report,
            "\nwarning: {warnings} point(s) have a non-unimodal growth profile; grid maximum reported"
        );
    }
    Ok(())
}

fn single_optimum(job: &JobSpec, dir: &Path, out: &mut JobOutput) -> Result<()> {
    let p = &job.config.model;
    let opt = optimal_tax(p, Some(window_for(job, p)?), job.config.search.hold)?;
    let (root_phi, root_valid) = match opt.root {
        Some(r) => (r.phi.to_string(), r.valid.to_string()),
        None => (String::new(), String::new()),
    };
    emit(out, dir.join("optimal_tax.csv"), |w| {
        writeln!(
            w,
            "phi_star,g_star,excess,phi_root,root_valid,non_unimodal,hold"
        )?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            opt.phi_star,
            opt.g_star,
            opt.excess,
            root_phi,
            root_valid,
            opt.non_unimodal,
            serde_json::to_value(opt.hold)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default()
        )
    })?;
    out.report = serde_json::to_string(&opt).map_err(|e| Error::Numerical(e.to_string()))?;
    if opt.non_unimodal {
        out.report
            .push_str("\nwarning: non-unimodal growth profile; grid maximum reported");
    }
    Ok(())
}

fn classify_job(job: &JobSpec, dir: &Path, out: &mut JobOutput) -> Result<()> {
    let d = derive(&job.config.model)?;
    let r = classify(&d)?;
    let line = json!({
        "regime": r.kind.as_str(),
        "regime_number": r.kind.number(),
        "gap": r.gap,
        "theta_plus": r.theta_plus,
        "theta_minus": r.theta_minus,
        "nu": d.nu,
    })
    .to_string();
    emit(out, dir.join("classify.json"), |w| writeln!(w, "{line}"))?;
    out.report = line;
    Ok(())
}

fn write_estimates(
    out: &mut JobOutput,
    dir: &Path,
    rows: &[(&str, GrowthEstimate)],
    theory: Option<f64>,
) -> Result<()> {
    emit(out, dir.join("estimates.csv"), |w| {
        writeln!(w, "estimator,g_hat,std_error,n_paths,span")?;
        for (name, e) in rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                name, e.g_hat, e.std_error, e.n_paths, e.span
            )?;
        }
        Ok(())
    })?;
    for (name, e) in rows {
        let _ = write!(
            out.report,
            "\n{name}: g_hat = {:.6} +- {:.6}",
            e.g_hat, e.std_error
        );
        if let Some(g) = theory {
            let _ = write!(
                out.report,
                " ({:.2} s.e. from the stationary prediction)",
                e.z_score(g)
            );
        }
    }
    Ok(())
}

fn simulate(job: &JobSpec, dir: &Path, out: &mut JobOutput) -> Result<()> {
    let (p, c) = (&job.config.model, &job.config.sim);
    let paths = simulate_two_sector(p, c)?;
    for path in &paths {
        emit(out, dir.join(format!("path_{:04}.csv", path.index)), |w| {
            write_path(w, &path.points)
        })?;
    }
    let d = derive(p)?;
    let theory = growth_rate(&d, GrowthMethod::ClosedForm).ok().map(|r| r.g);
    let _ = write!(
        out.report,
        "simulate: {} path(s), {} mode",
        paths.len(),
        c.mode.as_str()
    );
    if let Some(g) = theory {
        let _ = write!(out.report, "\nstationary prediction: g = {g:.6}");
    }
    if paths.len() >= 2 {
        let rows = [
            ("h_endpoint", estimate_growth(&paths)?),
            ("H_endpoint", estimate_growth_public(&paths)?),
            ("private_drift", estimate_growth_drift(&paths, &d, false)?),
            ("public_drift", estimate_growth_drift(&paths, &d, true)?),
        ];
        write_estimates(out, dir, &rows, theory)?;
    } else {
        out.report
            .push_str("\nsingle path: no standard errors, estimates.csv not written");
    }
    Ok(())
}

fn agents(job: &JobSpec, dir: &Path, out: &mut JobOutput) -> Result<()> {
    let (p, c) = (&job.config.model, &job.config.sim);
    let runs = simulate_agents(p, c)?;
    let n = p.n_agents;
    let hill_ok = n >= 100;
    let k = default_hill_k(n);
    let mut summary = String::from("path,time,alpha_hat,alpha_se,k,gini\n");
    for run in &runs {
        let tag = format!("{:04}", run.index);
        emit(out, dir.join(format!("snapshots_{tag}.csv")), |w| {
            write_snapshots(w, &run.snapshots)
        })?;
        emit(out, dir.join(format!("public_{tag}.csv")), |w| {
            write_public(w, &run.snapshots)
        })?;
        for (i, s) in run.snapshots.iter().enumerate() {
            let gini = sample_gini(&s.wealth)?;
            let (alpha, se) = if hill_ok {
                let seed = c.seed ^ ((run.index as u64) << 32) ^ i as u64;
                let h = hill_tail_exponent(&s.wealth, k, HILL_BOOTSTRAP, seed)?;
                (h.alpha.to_string(), h.std_error.to_string())
            } else {
                (String::new(), String::new())
            };
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{}",
                run.index,
                s.time,
                alpha,
                se,
                if hill_ok { k } else { 0 },
                gini
            );
        }
    }
    emit(out, dir.join("agents_summary.csv"), |w| {
        w.write_all(summary.as_bytes())
    })?;
    let _ = write!(out.report, "agents: {} path(s) of {n} agents", runs.len());
    if let Ok(alpha) = crate::model::pareto_alpha(p) {
        let _ = write!(out.report, "\nmean-field tail exponent: alpha = {alpha:.4}");
    }
    if runs.len() >= 2 {
        let theory = growth_rate(&derive(p)?, GrowthMethod::ClosedForm)
            .ok()
            .map(|r| r.g);
        write_estimates(
            out,
            dir,
            &[("private_aggregate", estimate_growth_agents(&runs)?)],
            theory,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    const MODEL: &str = "[model]\nm = 0.03\ns = 0.10\nrho = 0.2\ntau = 4\nmu_tilde = 0.03\nsigma = 0.05\nphi = 0.005\nf = 0.02\n";

    fn spec(kind: JobKind, extra: &str) -> JobSpec {
        JobSpec {
            kind,
            config: parse_config(&format!("{MODEL}{extra}")).unwrap(),
        }
    }

    #[test]
    fn classify_reports_no_tax() {
        // gap 0.03 against theta_plus 0.00225
        let text = MODEL.replace("mu_tilde = 0.03", "mu_tilde = 0.004");
        let job = JobSpec {
            kind: JobKind::Classify,
            config: parse_config(&text).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        let out = run(&job, dir.path()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.report).unwrap();
        assert_eq!(v["regime"], "NoTax");
        assert!((v["gap"].as_f64().unwrap() - 0.03).abs() < 1e-15);
        assert!(!out.report.contains('\n'));
    }

    #[test]
    fn analytic_columns_agree() {
        let job = spec(
            JobKind::Analytic,
            "[sweep]\nparam = phi\nmin = 0.0\nmax = 0.05\npoints = 6\n",
        );
        let dir = tempfile::tempdir().unwrap();
        run(&job, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("growth.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("phi,f,nu,g_closed,g_quadrature,method_flags")
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 6);
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            let (a, b): (f64, f64) = (cols[3].parse().unwrap(), cols[4].parse().unwrap());
            assert!(((a - b) / a).abs() < 1e-6, "{row}");
        }
    }

    #[test]
    fn optimal_tax_at_half_order() {
        // nu = 1/2 at phi = f/4 needs mu_tilde = m_tilde + 3f/4 - Sigma^2/4
        let text = MODEL.replace("mu_tilde = 0.03", "mu_tilde = 0.047875");
        let job = JobSpec {
            kind: JobKind::OptimalTax,
            config: parse_config(&format!("{text}[search]\nhold = nu\n")).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        run(&job, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("optimal_tax.csv")).unwrap();
        let phi: f64 = text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!((phi - 0.005).abs() < 1e-8, "{phi}");
    }

    #[test]
    fn sweep_without_axis_is_a_config_error() {
        let job = spec(JobKind::Sweep, "");
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run(&job, dir.path()), Err(Error::Config { .. })));
    }
}
