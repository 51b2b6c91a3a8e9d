//! The five commands. Each returns an [`Outcome`]: a JSON results block plus
//! the status of the self-checks it ran, judged against a [`Profile`].

use std::collections::BTreeMap;

use cohesive_core::transfer::lift;
use cohesive_core::{
    build_hodge, dgla_of, is_homotopy_equivalence, kuranishi_map, mc_eval, mc_residual, regularize, solve_kuranishi,
    strongify, transfer_mc, AlgebraElement, Error, FamilyAlgebra, HodgePackage, HomotopyData, Series,
};
use serde_json::{json, Value};

use crate::instance::{terms_of, Instance};
use crate::report::Profile;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Cohomology,
    Solve { seed: String, order: u32 },
    Transfer { series: String },
    Regularize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Cohomology => "cohomology",
            Command::Solve { .. } => "solve",
            Command::Transfer { .. } => "transfer",
            Command::Regularize => "regularize",
        }
    }

    /// Distinguishes report files of the same command on different inputs.
    pub fn file_tag(&self) -> String {
        match self {
            Command::Solve { seed, .. } => format!("solve-{seed}"),
            Command::Transfer { series } => format!("transfer-{series}"),
            c => c.name().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Ok,
    ToleranceFailure { check: String, residual: f64, threshold: f64, index: Option<Vec<u32>> },
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub results: Value,
    pub status: Status,
}

/// Named residual checks; the failure reported is the one furthest over its threshold.
#[derive(Default)]
struct Checks {
    rows: Vec<Value>,
    worst: Option<(f64, Status)>,
}

impl Checks {
    fn add(&mut self, name: &str, residual: f64, threshold: f64, index: Option<Vec<u32>>) {
        let passed = residual <= threshold;
        self.rows.push(json!({ "name": name, "value": residual, "threshold": threshold, "passed": passed }));
        if !passed {
            let ratio = if threshold > 0.0 { residual / threshold } else { f64::INFINITY };
            if self.worst.as_ref().map_or(true, |(r, _)| ratio > *r) {
                let status = Status::ToleranceFailure { check: name.into(), residual, threshold, index };
                self.worst = Some((ratio, status));
            }
        }
    }

    fn finish(self, command: Command, mut results: Value) -> Outcome {
        results["checks"] = Value::Array(self.rows);
        let status = self.worst.map_or(Status::Ok, |(_, s)| s);
        Outcome { command, results, status }
    }
}

fn validation(path: impl Into<String>, source: Error) -> CliError {
    CliError::Validation { path: path.into(), source }
}

fn series_json(s: &Series, family: Option<&FamilyAlgebra>) -> Value {
    let coefficients: Vec<Value> = s
        .iter()
        .map(|(i, x)| json!({ "index": i.exponents(), "norm": x.norm(), "terms": terms_of(x, family) }))
        .collect();
    json!({ "vars": s.vars(), "order": s.order(), "coefficients": coefficients })
}

fn element_json(x: &AlgebraElement, family: Option<&FamilyAlgebra>) -> Value {
    json!({ "norm": x.norm(), "terms": terms_of(x, family) })
}

/// Largest coefficient norm and where it occurs.
fn worst(s: &Series) -> (f64, Option<Vec<u32>>) {
    let (n, i) = s.max_norm();
    (n, i.map(|i| i.exponents().to_vec()))
}

/// Max coefficient norm for each total order |I| = 1..=N.
fn by_order(s: &Series) -> Vec<Value> {
    let mut per: BTreeMap<u32, (f64, Vec<u32>)> = BTreeMap::new();
    for (i, x) in s.iter() {
        let n = x.norm();
        let e = per.entry(i.total()).or_insert((0.0, i.exponents().to_vec()));
        if n > e.0 {
            *e = (n, i.exponents().to_vec());
        }
    }
    (1..=s.order())
        .map(|w| {
            let (n, i) = per.get(&w).cloned().unwrap_or((0.0, Vec::new()));
            json!({ "order": w, "max_norm": n, "worst_index": i })
        })
        .collect()
}

fn hodge(instance: &Instance) -> Result<HodgePackage, CliError> {
    build_hodge(&instance.model, &instance.metric).map_err(|e| validation("metric", e))
}

fn space_json(instance: &Instance) -> Value {
    Value::Array(instance.model.space().components().iter().map(|(d, n)| json!({ "degree": d, "dim": n })).collect())
}

fn equivalence_json(data: &HomotopyData) -> Result<Value, CliError> {
    let cert = is_homotopy_equivalence(data.phi()).map_err(|e| validation("homotopy.phi", e))?;
    let degrees: Vec<Value> = cert
        .degrees
        .iter()
        .map(|d| {
            json!({
                "degree": d.degree,
                "source_cohomology": d.source_cohomology,
                "target_cohomology": d.target_cohomology,
                "induced_rank": d.induced_rank,
            })
        })
        .collect();
    Ok(json!({ "is_equivalence": cert.is_equivalence, "degrees": degrees }))
}

pub fn cmd_check(instance: &Instance, profile: Profile) -> Result<Outcome, CliError> {
    let mut checks = Checks::default();
    let base = instance.base();
    let axioms: Vec<Value> = base
        .validate()
        .checks
        .iter()
        .map(|c| {
            checks.add(&format!("base.{}", c.axiom.name()), c.worst, cohesive_core::tol::AXIOM, None);
            json!({ "axiom": c.axiom.name(), "worst": c.worst })
        })
        .collect();
    let curvature = instance.model.curvature_norm();
    checks.add("flatness", curvature, profile.flatness, None);
    let mut results = json!({
        "base": { "dim": base.dim(), "labels": base.basis().iter().map(|b| b.label.clone()).collect::<Vec<_>>(), "axioms": axioms },
        "model": { "space": space_json(instance), "curvature_norm": curvature },
        "metric": { "standard": instance.file.metric.is_none(), "positive": true },
    });

    if instance.file.homotopy.is_some() {
        let data = instance.homotopy()?;
        checks.add("homotopy", data.residual(), profile.homotopy, None);
        results["homotopy"] = json!({ "residual": data.residual(), "equivalence": equivalence_json(&data)? });
    }
    if !instance.file.seeds.is_empty() {
        let hp = hodge(instance)?;
        let mut seeds = serde_json::Map::new();
        for name in instance.seed_names() {
            let beta = instance.seed(name, 1)?;
            let distance = beta.iter().map(|(_, x)| hp.harmonic_distance(x)).fold(0.0, f64::max);
            checks.add(&format!("seeds.{name}.harmonic"), distance, profile.harmonic, None);
            seeds.insert(name.into(), json!({ "directions": beta.vars(), "harmonic_distance": distance }));
        }
        results["seeds"] = Value::Object(seeds);
    }
    if !instance.file.series.is_empty() {
        let dgla = dgla_of(&instance.model);
        let mut out = serde_json::Map::new();
        for name in instance.series_names() {
            let s = instance.series(name)?;
            let (r, index) = worst(&mc_residual(&dgla, &s).map_err(|e| validation(format!("series.{name}"), e))?);
            checks.add(&format!("series.{name}.maurer_cartan"), r, profile.residual, index);
            out.insert(name.into(), json!({ "mc_residual": r }));
        }
        results["series"] = Value::Object(out);
    }
    if instance.file.family.is_some() {
        let fam = instance.family()?;
        let c = fam.model().curvature_norm();
        checks.add("family.flatness", c, profile.flatness, None);
        results["family"] = json!({ "curvature_norm": c, "dtbar_residual": fam.dtbar_residual(), "regular": fam.is_regular() });
    }
    Ok(checks.finish(Command::Check, results))
}

pub fn cmd_cohomology(instance: &Instance, profile: Profile) -> Result<Outcome, CliError> {
    let mut checks = Checks::default();
    let hp = hodge(instance)?;
    let ranks = hp.dgla().cohomology_dims();
    let (lo, hi) = hp.degree_range();
    let mut degrees = Vec::new();
    let mut basis = serde_json::Map::new();
    for k in lo..=hi {
        let harmonic = hp.harmonic_dim(k);
        let rank = ranks.get(&k).copied().unwrap_or(0);
        checks.add(&format!("dimension.{k}"), harmonic.abs_diff(rank) as f64, 0.0, None);
        degrees.push(json!({ "degree": k, "harmonic_dim": harmonic, "rank_nullity_dim": rank }));
        let reps: Vec<Value> = hp.harmonic_basis(k).iter().map(|x| element_json(x, None)).collect();
        basis.insert(k.to_string(), Value::Array(reps));
    }
    let id = hp.identity_residuals();
    checks.add("hodge_identities", id.max(), profile.harmonic, None);
    let results = json!({
        "space": space_json(instance),
        "degree_range": [lo, hi],
        "spectral_gap_threshold": hp.tau(),
        "degrees": degrees,
        "identity_residuals": {
            "decomposition": id.decomposition,
            "green_d": id.green_d,
            "green_dstar": id.green_dstar,
            "green_laplacian": id.green_laplacian,
            "harmonic_green": id.harmonic_green,
            "projector": id.projector,
        },
        "harmonic_basis": basis,
    });
    Ok(checks.finish(Command::Cohomology, results))
}

pub fn cmd_solve(instance: &Instance, seed: Option<&str>, order: Option<u32>, profile: Profile) -> Result<Outcome, CliError> {
    let seed = match seed {
        Some(s) => s.to_string(),
        None => instance.seed_names().first().map(|s| s.to_string()).ok_or_else(|| CliError::Schema {
            path: "seeds".into(),
            message: "instance has no seeds".into(),
        })?,
    };
    let order = order.unwrap_or_else(|| instance.default_order());
    let mut checks = Checks::default();
    let hp = hodge(instance)?;
    let beta = instance.seed(&seed, order)?;
    let sol = solve_kuranishi(&hp, &beta).map_err(|e| validation(format!("seeds.{seed}"), e))?;
    let residual = mc_residual(hp.dgla(), &sol.alpha).map_err(|e| validation("solve", e))?;
    let ku = kuranishi_map(&hp, &sol.alpha).and_then(|k| k.minus(&beta)).map_err(|e| validation("solve", e))?;
    let (ku_err, ku_index) = worst(&ku);
    checks.add("kuranishi_map", ku_err, profile.agreement, ku_index);

    // Below the first obstruction the series must be Maurer–Cartan.
    let limit = sol.obstructions.first_obstructed_order().unwrap_or(order + 1);
    let (r, index) = worst(&residual.truncated(limit - 1));
    checks.add("maurer_cartan_below_obstruction", r, profile.residual, index);

    let obstructions: Vec<Value> = sol
        .obstructions
        .entries()
        .map(|(i, x, n)| {
            let str_norm = x.supertrace().map(|s| s.iter().map(|z| z.norm()).fold(0.0, f64::max)).unwrap_or(f64::NAN);
            let mut row = json!({ "index": i.exponents(), "norm": n, "supertrace_norm": str_norm });
            if n > cohesive_core::tol::RESIDUAL {
                row["terms"] = json!(terms_of(x, None));
            }
            row
        })
        .collect();
    let results = json!({
        "seed": seed,
        "order": order,
        "vars": beta.vars(),
        "verdict": sol.obstructions.verdict(),
        "solved": sol.solved,
        "first_obstructed_order": sol.obstructions.first_obstructed_order(),
        "max_obstruction_norm": sol.obstructions.max_norm(),
        "obstructions": obstructions,
        "residual_by_order": by_order(&residual),
        "max_residual": residual.max_norm().0,
        "mc_coefficients": series_json(&sol.alpha, None),
    });
    Ok(checks.finish(Command::Solve { seed, order }, results))
}

pub fn cmd_transfer(instance: &Instance, series: Option<&str>, profile: Profile) -> Result<Outcome, CliError> {
    let name = match series {
        Some(s) => s.to_string(),
        None => instance.series_names().first().map(|s| s.to_string()).ok_or_else(|| CliError::Schema {
            path: "series".into(),
            message: "instance has no series".into(),
        })?,
    };
    let mut checks = Checks::default();
    let data = instance.homotopy()?;
    let eta = instance.series(&name)?;
    let at = format!("series.{name}");
    let eta_residual = mc_residual(&dgla_of(data.big()), &eta).map_err(|e| validation(&at, e))?.max_norm().0;
    if eta_residual > profile.residual {
        return Err(validation(at, Error::FlatnessViolation { residual: eta_residual }));
    }
    let out = transfer_mc(&eta, &data).map_err(|e| validation("transfer", e))?;
    let eval = mc_eval(&data, &eta).map_err(|e| validation("transfer", e))?;
    let (agree, agree_index) = worst(&eval.minus(&out.epsilon).map_err(|e| validation("transfer", e))?);
    let (eps_r, eps_index) = worst(&mc_residual(&dgla_of(data.small()), &out.epsilon).map_err(|e| validation("transfer", e))?);
    let inter = cohesive_core::transfer::intertwining_residual(&data, &eta, &out).map_err(|e| validation("transfer", e))?;
    let (inter_r, inter_index) = worst(&inter);
    checks.add("epsilon_maurer_cartan", eps_r, profile.residual, eps_index);
    checks.add("intertwining", inter_r, profile.residual, inter_index);
    checks.add("mc_eval_agreement", agree, profile.agreement, agree_index);
    let results = json!({
        "series": name,
        "eta_residual": eta_residual,
        "homotopy_residual": data.residual(),
        "epsilon": series_json(&out.epsilon, None),
        "mc_eval": series_json(&eval, None),
        "phi_t": series_json(&out.phi_t, None),
    });
    Ok(checks.finish(Command::Transfer { series: name }, results))
}

pub fn cmd_regularize(instance: &Instance, profile: Profile) -> Result<Outcome, CliError> {
    let mut checks = Checks::default();
    let fam = instance.family()?;
    let family = fam.family().clone();
    let reg = regularize(&fam).map_err(|e| validation("family", e))?;
    let after = reg.family.dtbar_residual();
    checks.add("dtbar_residual", after, profile.residual, None);
    checks.add("conjugation", reg.conjugation_residual, profile.residual, None);
    let a0 = lift(&family, instance.model.connection());
    let mut results = json!({
        "vars": family.params().vars(),
        "order": family.params().order(),
        "dtbar_residual_before": fam.dtbar_residual(),
        "dtbar_residual_after": after,
        "conjugation_residual": reg.conjugation_residual,
        "gauge": element_json(&reg.j, Some(&family)),
        "regularized_deformation": element_json(&(reg.family.connection() - &a0), Some(&family)),
    });
    let spec = instance.file.family.as_ref().expect("family() succeeded");
    if spec.strongify {
        let data = if instance.file.homotopy.is_some() { instance.homotopy()? } else { HomotopyData::identity(&instance.model) };
        let out = strongify(&reg.family, &data).map_err(|e| validation("family", e))?;
        let (r, index) = worst(&mc_residual(&dgla_of(data.small()), &out.epsilon).map_err(|e| validation("family", e))?);
        checks.add("strongified_maurer_cartan", r, profile.residual, index);
        results["strongified"] = json!({ "epsilon": series_json(&out.epsilon, None), "mc_residual": r });
    }
    Ok(checks.finish(Command::Regularize, results))
}
