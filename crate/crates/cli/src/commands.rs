//! Subcommand implementations. Each returns the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use ks1d::verifier::{identity_study, refinement_runs, report_from_runs};
use ks1d::{ConvergenceReport, DiffusionModel, RunStatus, Scenario, Selector, TestProfile};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;
use crate::output::{number, write_file, write_json, write_run};

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_config(&text)
}

/// Exit code for a finished run: breakdown of the stepper is the only
/// failure, detected blowup is a successful outcome.
pub fn status_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Completed | RunStatus::BlowupDetected => 0,
        RunStatus::StepFailure => 1,
    }
}

pub fn run(config_path: &Path, out: Option<PathBuf>) -> Result<i32, CliError> {
    let config = load_config(config_path)?;
    let dir = out.unwrap_or_else(|| config.output.clone());
    let outcome = config.scenario().run().map_err(|e| CliError::Run(e.to_string()))?;
    let summary = write_run(&dir, &outcome)?;
    println!(
        "status={} t_final={} max_sup_u={} out={}",
        summary.status,
        summary.t_final,
        summary.max_sup_u,
        dir.display()
    );
    Ok(status_code(outcome.status))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub p: f64,
    pub mass: f64,
    pub status: String,
    pub t_final: f64,
    pub max_sup_u: f64,
    pub accepted_steps: usize,
    pub message: String,
}

fn cell_dir(out: &Path, p: f64, mass: f64) -> PathBuf {
    out.join("cells").join(format!("p{p}_M{mass}"))
}

fn run_cell(base: &RunConfig, out: &Path, p: f64, mass: f64) -> Result<SweepCell, CliError> {
    let failed = |status: &str, message: String| SweepCell {
        p,
        mass,
        status: status.into(),
        t_final: f64::NAN,
        max_sup_u: f64::NAN,
        accepted_steps: 0,
        message,
    };
    let config = base.with_cell(p, mass);
    if let Err(e) = config.validate() {
        return Ok(failed("invalid", e.to_string()));
    }
    let outcome = match config.scenario().run() {
        Ok(o) => o,
        Err(e) => return Ok(failed("error", e.to_string())),
    };
    let summary = write_run(&cell_dir(out, p, mass), &outcome)?;
    Ok(SweepCell {
        p,
        mass,
        status: summary.status,
        t_final: summary.t_final,
        max_sup_u: summary.max_sup_u,
        accepted_steps: summary.accepted_steps,
        message: String::new(),
    })
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = String::from("p,mass,status,t_final,max_sup_u,accepted_steps,message\n");
    for c in cells {
        s.push_str(&format!(
            "{},{},{},{},{},{},\"{}\"\n",
            number(c.p),
            number(c.mass),
            c.status,
            number(c.t_final),
            number(c.max_sup_u),
            c.accepted_steps,
            c.message.replace('"', "'")
        ));
    }
    s
}

/// Rows are exponents, columns masses; entries `status:max_sup_u`.
pub fn sweep_matrix(ps: &[f64], masses: &[f64], cells: &[SweepCell]) -> String {
    let mut s = String::from("p");
    for m in masses {
        s.push_str(&format!(",M={m}"));
    }
    s.push('\n');
    for (i, p) in ps.iter().enumerate() {
        s.push_str(&p.to_string());
        for j in 0..masses.len() {
            let c = &cells[i * masses.len() + j];
            s.push_str(&format!(",{}:{}", c.status, number(c.max_sup_u)));
        }
        s.push('\n');
    }
    s
}

pub fn sweep(config_path: &Path, ps: &[f64], masses: &[f64], out: Option<PathBuf>) -> Result<i32, CliError> {
    if ps.is_empty() || masses.is_empty() {
        return Err(CliError::Usage("--p and --mass need at least one value each".into()));
    }
    let base = load_config(config_path)?;
    let dir = out.unwrap_or_else(|| base.output.clone());
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let grid: Vec<(f64, f64)> = ps.iter().flat_map(|&p| masses.iter().map(move |&m| (p, m))).collect();
    let cells = grid
        .par_iter()
        .map(|&(p, m)| run_cell(&base, &dir, p, m))
        .collect::<Result<Vec<_>, _>>()?;
    write_file(&dir.join("sweep.csv"), &sweep_csv(&cells))?;
    let matrix = sweep_matrix(ps, masses, &cells);
    write_file(&dir.join("sweep_matrix.csv"), &matrix)?;
    print!("{matrix}");
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityEntry {
    pub profile: &'static str,
    pub p: f64,
    pub report: ConvergenceReport<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyEntry {
    pub selector: &'static str,
    pub report: ConvergenceReport<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub levels: Vec<usize>,
    pub identity: Vec<IdentityEntry>,
    pub scenario: Option<String>,
    pub trajectory: Vec<StudyEntry>,
    pub pass: bool,
}

pub fn verify_scenario(name: &str, base_cells: usize) -> Result<Option<Scenario<f64>>, CliError> {
    match name {
        "none" => Ok(None),
        "critical_cosine" => Ok(Some(Scenario::critical_cosine_resolved(base_cells))),
        "steady" => Ok(Some(Scenario::steady(base_cells, 0.1, 0.01))),
        other => Err(CliError::Usage(format!(
            "unknown scenario `{other}` (expected critical_cosine, steady or none)"
        ))),
    }
}

pub fn verify_report(
    levels: &[usize],
    family: &str,
    exponents: &[f64],
    scenario: &str,
) -> Result<VerifyReport, CliError> {
    if levels.len() < 3 {
        return Err(CliError::Usage(format!(
            "verify needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let profiles = if family == "all" {
        TestProfile::<f64>::bundled()
    } else {
        vec![TestProfile::from_name(family).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown family `{family}` (expected all, constant, cos_pi, cos_2pi or quadratic)"
            ))
        })?]
    };
    let usage = |e: ks1d::Error| CliError::Usage(e.to_string());
    let mut identity = Vec::new();
    for profile in &profiles {
        for &p in exponents {
            let model = DiffusionModel::with_exponent(p).map_err(usage)?;
            let report = identity_study(profile, &model, levels).map_err(usage)?;
            identity.push(IdentityEntry {
                profile: profile.name(),
                p,
                report,
            });
        }
    }
    let mut trajectory = Vec::new();
    let chosen = verify_scenario(scenario, levels[0])?;
    if let Some(s) = &chosen {
        let runs = refinement_runs(s, levels).map_err(|e| CliError::Run(e.to_string()))?;
        for sel in Selector::ALL {
            trajectory.push(StudyEntry {
                selector: sel.name(),
                report: report_from_runs(levels, &runs, sel).map_err(usage)?,
            });
        }
    }
    let pass = identity.iter().all(|e| e.report.pass) && trajectory.iter().all(|e| e.report.pass);
    Ok(VerifyReport {
        levels: levels.to_vec(),
        identity,
        scenario: chosen.map(|_| scenario.to_string()),
        trajectory,
        pass,
    })
}

pub fn verify(
    levels: &[usize],
    family: &str,
    exponents: &[f64],
    scenario: &str,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let report = verify_report(levels, family, exponents, scenario)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Run(e.to_string()))?;
    println!("{text}");
    if let Some(path) = out {
        write_json(&path, &report)?;
    }
    Ok(if report.pass { 0 } else { 1 })
}
