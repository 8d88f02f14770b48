//! CSV and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ks1d::series::{aligned_residuals, growth_envelopes, residual_maxima, LinearEnvelope, ResidualMaxima};
use ks1d::{FunctionalSnapshot, RunOutcome};
use serde::Serialize;

use crate::error::CliError;

pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub const COLUMNS: [&str; 22] = [
    "t",
    "dt",
    "mass",
    "sup_u",
    "min_u",
    "entropy",
    "G",
    "L",
    "L_dissipation",
    "F_general",
    "F_critical",
    "D",
    "R",
    "F_identity_residual",
    "L_identity_residual",
    "prop41_gap",
    "regest3_gap",
    "cube_norm",
    "v_L2",
    "vt_L2",
    "cumulative_vt2",
    "vacuum_flag",
];

/// Full-precision scientific notation, independent of locale.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn snapshot_csv(snapshots: &[FunctionalSnapshot<f64>]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    let residuals = aligned_residuals(snapshots);
    for (s, (f_res, l_res)) in snapshots.iter().zip(residuals) {
        let nan = f64::NAN;
        let row = [
            s.t,
            s.dt_current,
            s.mass,
            s.sup_u,
            s.min_u,
            s.entropy,
            s.grad_weight,
            s.l_classical,
            s.l_dissipation,
            s.f_general,
            s.f_critical.unwrap_or(nan),
            s.d_dissipation,
            s.r_rate,
            f_res,
            l_res,
            s.prop41_gap.unwrap_or(nan),
            s.regest3_gap.unwrap_or(nan),
            s.cube_norm,
            s.v_l2,
            s.vt_l2,
            s.cumulative_vt2,
        ];
        for x in row {
            out.push_str(&number(x));
            out.push(',');
        }
        let _ = writeln!(out, "{}", u8::from(s.vacuum_flag));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FittedEnvelopes {
    /// `C` in `∫₀ᵗ R ≤ C (t + 1)`.
    #[serde(rename = "R_cumulative")]
    pub r_cumulative: f64,
    #[serde(rename = "entropy_plus_G")]
    pub entropy_plus_g: Option<LinearEnvelope<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: String,
    pub t_final: f64,
    pub max_sup_u: f64,
    pub blowup_time_estimate: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub fitted_linear_envelopes: FittedEnvelopes,
    pub residual_maxima: ResidualMaxima<f64>,
}

impl Summary {
    pub fn new(outcome: &RunOutcome<f64>) -> Self {
        let env = growth_envelopes(&outcome.snapshots);
        Self {
            status: outcome.status.to_string(),
            t_final: outcome.final_state.t,
            max_sup_u: outcome.max_sup_u(),
            blowup_time_estimate: outcome.blowup_time_estimate,
            accepted_steps: outcome.accepted_steps,
            rejected_steps: outcome.rejected_steps,
            fitted_linear_envelopes: FittedEnvelopes {
                r_cumulative: env.r_cumulative,
                entropy_plus_g: env.entropy_plus_g,
            },
            residual_maxima: residual_maxima(&outcome.snapshots),
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io(path))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

/// Writes `snapshots.csv` and `summary.json` into `dir`, creating it.
pub fn write_run(dir: &Path, outcome: &RunOutcome<f64>) -> Result<Summary, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    write_file(&dir.join(SNAPSHOT_FILE), &snapshot_csv(&outcome.snapshots))?;
    let summary = Summary::new(outcome);
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}
