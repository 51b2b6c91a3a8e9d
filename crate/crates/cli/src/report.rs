//! Run reports: deterministic JSON with a stability hash.
//!
//! Keys are emitted in sorted order and floats in shortest round-trip form,
//! so identical inputs give identical bytes. The optional `timing` field is
//! excluded from the hash.

use std::path::{Path, PathBuf};

use cohesive_core::tol;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::commands::{Outcome, Status};
use crate::instance::Instance;
use crate::CliError;

/// Thresholds for the pass/fail checks a command runs on its own output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile {
    pub name: &'static str,
    pub flatness: f64,
    pub closed: f64,
    pub residual: f64,
    pub homotopy: f64,
    pub harmonic: f64,
    /// Agreement between two computations of the same quantity.
    pub agreement: f64,
}

impl Profile {
    pub const DEFAULT: Profile = Profile {
        name: "default",
        flatness: tol::FLATNESS,
        closed: tol::CLOSED,
        residual: tol::RESIDUAL,
        homotopy: tol::HOMOTOPY,
        harmonic: tol::HARMONIC,
        agreement: tol::EXACT,
    };

    /// Every threshold a hundred times tighter.
    pub const STRICT: Profile = Profile {
        name: "strict",
        flatness: tol::FLATNESS * 1e-2,
        closed: tol::CLOSED * 1e-2,
        residual: tol::RESIDUAL * 1e-2,
        homotopy: tol::HOMOTOPY * 1e-2,
        harmonic: tol::HARMONIC * 1e-2,
        agreement: tol::EXACT * 1e-2,
    };

    pub fn by_name(name: &str) -> Option<Profile> {
        match name {
            "default" => Some(Self::DEFAULT),
            "strict" => Some(Self::STRICT),
            _ => None,
        }
    }

    fn to_json(self) -> Value {
        json!({
            "name": self.name,
            "flatness": self.flatness,
            "closed": self.closed,
            "residual": self.residual,
            "homotopy": self.homotopy,
            "harmonic": self.harmonic,
            "agreement": self.agreement,
        })
    }
}

fn core_tolerances() -> Value {
    json!({
        "prune": tol::PRUNE,
        "exact": tol::EXACT,
        "axiom": tol::AXIOM,
        "flatness": tol::FLATNESS,
        "closed": tol::CLOSED,
        "residual": tol::RESIDUAL,
        "homotopy": tol::HOMOTOPY,
        "harmonic": tol::HARMONIC,
        "rank_relative": tol::RANK_RELATIVE,
        "spectral_relative": tol::SPECTRAL_RELATIVE,
    })
}

/// The full report body, `stability_hash` included; `timing_ms` is added last
/// and only when requested.
pub fn build_report(instance: &Instance, outcome: &Outcome, profile: Profile, timing_ms: Option<f64>) -> Value {
    let mut body = Map::new();
    body.insert("tool".into(), json!({ "name": "cohesive", "version": env!("CARGO_PKG_VERSION") }));
    body.insert("command".into(), json!(outcome.command.name()));
    body.insert("instance".into(), json!({ "file": instance.file_name, "sha256": instance.digest }));
    body.insert("tolerances".into(), json!({ "core": core_tolerances(), "profile": profile.to_json() }));
    body.insert("status".into(), status_json(&outcome.status));
    body.insert("results".into(), outcome.results.clone());
    let hash = hex::encode(Sha256::digest(serde_json::to_vec(&Value::Object(body.clone())).expect("serializable")));
    body.insert("stability_hash".into(), json!(hash));
    if let Some(ms) = timing_ms {
        body.insert("timing".into(), json!({ "elapsed_ms": ms }));
    }
    Value::Object(body)
}

fn status_json(status: &Status) -> Value {
    match status {
        Status::Ok => json!({ "ok": true }),
        Status::ToleranceFailure { check, residual, index, threshold } => json!({
            "ok": false,
            "failed_check": check,
            "worst_residual": residual,
            "multi_index": index,
            "threshold": threshold,
        }),
    }
}

pub fn report_path(instance: &Instance, outcome: &Outcome, input: &Path, out_dir: Option<&Path>) -> PathBuf {
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    dir.join(format!("{}.{}.report.json", instance.stem, outcome.command.file_tag()))
}

pub fn write_report(path: &Path, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("serializable");
    text.push('\n');
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}
