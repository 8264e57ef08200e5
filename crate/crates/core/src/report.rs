//! Machine-readable reports. JSON output preserves struct field order and
//! uses shortest-roundtrip float formatting, so identical runs produce
//! byte-identical files.

use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::sim::BenchmarkRow;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// The averaged-kappa surface over the tuning grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCurve {
    pub lambda_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    /// Indexed `s_hat[lambda][v]`.
    pub s_hat: Vec<Vec<f64>>,
}

/// Report emitted by the `fit`, `tune`, and `select` subcommands. Fields
/// not produced by a mode are omitted from the JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub n: usize,
    pub p: usize,
    pub loss: Loss,
    pub bandwidth: f64,
    pub chosen_lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_v: Option<f64>,
    /// Raw empirical squared gradient norms, one per predictor.
    pub scores: Vec<f64>,
    /// Scores divided by the maximum score, for readability.
    pub scores_normalized: Vec<f64>,
    /// One-based selected coordinates, sorted ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_curve: Option<StabilityCurve>,
    pub warnings: Vec<String>,
}

impl SelectionReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::ReportWrite(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Plot-ready CSV: one row per coordinate with its scores and selection
    /// flag, or the stability surface when no scores were computed (`tune`).
    pub fn to_csv(&self) -> String {
        if !self.scores.is_empty() {
            let mut out = String::from("coordinate,score,score_normalized,selected\n");
            for (i, (s, sn)) in self
                .scores
                .iter()
                .zip(self.scores_normalized.iter())
                .enumerate()
            {
                let selected = self
                    .active_set
                    .as_ref()
                    .map(|a| a.binary_search(&(i + 1)).is_ok())
                    .unwrap_or(false);
                out.push_str(&format!("{},{},{},{}\n", i + 1, s, sn, u8::from(selected)));
            }
            out
        } else if let Some(curve) = &self.stability_curve {
            let mut out = String::from("lambda,v,s_hat\n");
            for (li, lambda) in curve.lambda_grid.iter().enumerate() {
                for (vi, v) in curve.v_grid.iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", lambda, v, curve.s_hat[li][vi]));
                }
            }
            out
        } else {
            String::from("coordinate,score,score_normalized,selected\n")
        }
    }
}

/// Report emitted by the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub seed: u64,
    pub row: BenchmarkRow,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::ReportWrite(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        let r = &self.row;
        let mut out = String::from("example,n,p,eta,loss,reps,size,tp,fp,c,u,o,failed\n");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            match r.example {
                crate::sim::Example::Regression1 => "regression1",
                crate::sim::Example::Classification2 => "classification2",
            },
            r.n,
            r.p,
            r.eta,
            loss_descriptor(&r.loss),
            r.reps,
            r.size_avg,
            r.tp_avg,
            r.fp_avg,
            r.c,
            r.u,
            r.o,
            r.failed
        ));
        out
    }
}

/// Compact loss descriptor for CSV cells.
pub fn loss_descriptor(loss: &Loss) -> String {
    match loss {
        Loss::Square => "square".into(),
        Loss::Check { tau } => format!("check(tau={tau})"),
        Loss::EpsInsensitive { epsilon } => format!("eps(epsilon={epsilon})"),
        Loss::Logistic => "logistic".into(),
        Loss::Hinge => "hinge".into(),
    }
}
