//! Instance files: the JSON schema and its translation into core objects.
//!
//! Complex numbers are `[re, im]`, matrices are row-major lists of rows,
//! multi-indices and monomial exponents are integer arrays. A connection or
//! element is a list of terms `ω ⊗ (blocks of an End-degree-k map)`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use cohesive_core::base::{BasisElement, Monomial};
use cohesive_core::cohesive::{make_model, Morphism};
use cohesive_core::graded::{c64, GradedMap};
use cohesive_core::transfer::lift;
use cohesive_core::{
    AlgebraElement, BaseAlgebra, CMatrix, CohesiveModel, FamilyAlgebra, FamilyConnection, GradedSpace, HomotopyData,
    MetricData, MultiIndex, ParameterAlgebra, Series, C64,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub type Complex = [f64; 2];
pub type Rows = Vec<Vec<Complex>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub base: BaseSpec,
    pub space: Vec<Component>,
    #[serde(default)]
    pub connection: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<ParametersSpec>,
    /// Named seeds; each is one degree-1 harmonic element per parameter direction.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub seeds: BTreeMap<String, Vec<Vec<TermSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homotopy: Option<HomotopySpec>,
    /// Named Maurer–Cartan series on this model, for transfer.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, SeriesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "lowercase", deny_unknown_fields)]
pub enum BaseSpec {
    Point,
    Exterior {
        generators: usize,
    },
    Explicit {
        basis: Vec<BasisSpec>,
        unit: String,
        products: Vec<ProductSpec>,
        #[serde(default)]
        differential: Vec<DifferentialSpec>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub label: String,
    pub degree: i32,
}

/// ω_left · ω_right ∋ coefficient · ω_result.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSpec {
    pub left: String,
    pub right: String,
    pub result: String,
    pub coefficient: Complex,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentialSpec {
    pub source: String,
    pub target: String,
    pub coefficient: Complex,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub degree: i32,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub basis: String,
    /// Only for family elements: the parameter monomial multiplying `basis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monomial: Option<MonomialSpec>,
    pub end_degree: i32,
    pub blocks: Vec<BlockSpec>,
}

/// Exponent vectors; `dtbar` entries are 0 or 1.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub t: Vec<u32>,
    pub tbar: Vec<u32>,
    pub dtbar: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub source_degree: i32,
    pub rows: Rows,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default)]
    pub fiber: Vec<MetricBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Rows>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricBlock {
    pub degree: i32,
    pub rows: Rows,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersSpec {
    pub vars: usize,
    pub order: u32,
}

/// φ: F → E, ψ: E → F, h: F → F where F is the instance model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomotopySpec {
    pub small: SmallModelSpec,
    pub phi: Vec<TermSpec>,
    pub psi: Vec<TermSpec>,
    #[serde(default)]
    pub h: Vec<TermSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallModelSpec {
    pub space: Vec<Component>,
    #[serde(default)]
    pub connection: Vec<TermSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub vars: usize,
    pub order: u32,
    pub coefficients: Vec<CoefficientSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub index: Vec<u32>,
    pub terms: Vec<TermSpec>,
}

/// A family A + B(t, t̄) over Ω ⊗ P(m, N); `connection` lists the terms of
/// B, which are added to the lifted instance connection.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub vars: usize,
    pub order: usize,
    pub connection: Vec<TermSpec>,
    #[serde(default)]
    pub strongify: bool,
}

/// A parsed and validated instance.
pub struct Instance {
    pub file: InstanceFile,
    pub file_name: String,
    pub stem: String,
    pub digest: String,
    pub model: Arc<CohesiveModel>,
    pub metric: MetricData,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), message: message.into() }
}

fn validation(path: impl Into<String>, source: cohesive_core::Error) -> CliError {
    CliError::Validation { path: path.into(), source }
}

fn complex(z: &Complex) -> C64 {
    c64(z[0], z[1])
}

pub fn matrix(rows: &Rows, path: &str) -> Result<CMatrix, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != m) {
        return Err(schema(format!("{path}[{i}]"), format!("row has {} entries, expected {m}", rows[i].len())));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| complex(&rows[i][j])))
}

pub fn rows_of(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn space(components: &[Component], path: &str) -> Result<Arc<GradedSpace>, CliError> {
    GradedSpace::new(components.iter().map(|c| (c.degree, c.dim)))
        .map(Arc::new)
        .map_err(|e| validation(path, e))
}

fn build_base(spec: &BaseSpec) -> Result<BaseAlgebra, CliError> {
    match spec {
        BaseSpec::Point => Ok(BaseAlgebra::point()),
        BaseSpec::Exterior { generators } => {
            BaseAlgebra::exterior(*generators).map_err(|e| validation("base.generators", e))
        }
        BaseSpec::Explicit { basis, unit, products, differential } => {
            let index: BTreeMap<&str, usize> = basis.iter().enumerate().map(|(i, b)| (b.label.as_str(), i)).collect();
            let find = |label: &str, path: String| index.get(label).copied().ok_or_else(|| schema(path, format!("unknown basis label {label:?}")));
            let unit = find(unit, "base.unit".into())?;
            let mut prods = Vec::new();
            for (i, p) in products.iter().enumerate() {
                let at = |f: &str| format!("base.products[{i}].{f}");
                prods.push((find(&p.left, at("left"))?, find(&p.right, at("right"))?, find(&p.result, at("result"))?, complex(&p.coefficient)));
            }
            let mut diff = Vec::new();
            for (i, d) in differential.iter().enumerate() {
                let at = |f: &str| format!("base.differential[{i}].{f}");
                diff.push((find(&d.source, at("source"))?, find(&d.target, at("target"))?, complex(&d.coefficient)));
            }
            let basis = basis.iter().map(|b| BasisElement { label: b.label.clone(), degree: b.degree }).collect();
            BaseAlgebra::new(basis, unit, prods, diff).map_err(|e| validation("base", e))
        }
    }
}

fn monomial(spec: &MonomialSpec, vars: usize, path: &str) -> Result<Monomial, CliError> {
    if spec.t.len() != vars || spec.tbar.len() != vars || spec.dtbar.len() != vars {
        return Err(schema(path, format!("exponent vectors must have length {vars}")));
    }
    if spec.dtbar.iter().any(|&e| e > 1) {
        return Err(schema(format!("{path}.dtbar"), "dt̄ exponents are 0 or 1"));
    }
    let dtbar = spec.dtbar.iter().enumerate().fold(0u32, |mask, (i, &e)| mask | (e << i));
    Ok(Monomial { t: spec.t.clone(), tbar: spec.tbar.clone(), dtbar })
}

pub fn monomial_spec(m: &Monomial) -> MonomialSpec {
    MonomialSpec { t: m.t.clone(), tbar: m.tbar.clone(), dtbar: (0..m.t.len()).map(|i| (m.dtbar >> i) & 1).collect() }
}

/// Resolves a term's base label, and its monomial when a family algebra is given.
fn term_index(term: &TermSpec, base: &BaseAlgebra, family: Option<&FamilyAlgebra>, path: &str) -> Result<usize, CliError> {
    match family {
        None => {
            if term.monomial.is_some() {
                return Err(schema(format!("{path}.monomial"), "monomials are only allowed in the family block"));
            }
            base.index_of(&term.basis).ok_or_else(|| schema(format!("{path}.basis"), format!("unknown basis label {:?}", term.basis)))
        }
        Some(f) => {
            let r = f.omega().index_of(&term.basis).ok_or_else(|| schema(format!("{path}.basis"), format!("unknown basis label {:?}", term.basis)))?;
            let spec = term.monomial.as_ref().ok_or_else(|| schema(format!("{path}.monomial"), "family terms need a monomial"))?;
            let m = monomial(spec, f.params().vars(), &format!("{path}.monomial"))?;
            let p = f.params().index_of(&m).ok_or_else(|| schema(format!("{path}.monomial"), "monomial exceeds the truncation order"))?;
            Ok(f.index(r, p))
        }
    }
}

pub fn element(
    terms: &[TermSpec],
    base: &Arc<BaseAlgebra>,
    family: Option<&FamilyAlgebra>,
    source: &Arc<GradedSpace>,
    target: &Arc<GradedSpace>,
    path: &str,
) -> Result<AlgebraElement, CliError> {
    let mut x = AlgebraElement::zero(base.clone(), source.clone(), target.clone());
    for (i, term) in terms.iter().enumerate() {
        let at = format!("{path}[{i}]");
        let r = term_index(term, base, family, &at)?;
        let mut blocks = Vec::new();
        for (j, b) in term.blocks.iter().enumerate() {
            blocks.push((b.source_degree, matrix(&b.rows, &format!("{at}.blocks[{j}].rows"))?));
        }
        let map = GradedMap::from_blocks(source.clone(), target.clone(), term.end_degree, blocks).map_err(|e| validation(format!("{at}.blocks"), e))?;
        x.add_term(r, &map).map_err(|e| validation(&at, e))?;
    }
    Ok(x)
}

/// Inverse of [`element`]: nonzero blocks only, terms in base-index order.
pub fn terms_of(x: &AlgebraElement, family: Option<&FamilyAlgebra>) -> Vec<TermSpec> {
    let mut out = Vec::new();
    for (r, k, m) in x.terms() {
        let map = x.coefficient(r, k).expect("term exists");
        let blocks: Vec<BlockSpec> = x
            .source()
            .degrees()
            .filter_map(|i| map.block(i).map(|b| (i, b)))
            .filter(|(_, b)| b.iter().any(|z| z.norm() > 0.0))
            .map(|(i, b)| BlockSpec { source_degree: i, rows: rows_of(&b) })
            .collect();
        debug_assert!(m.iter().any(|z| z.norm() > 0.0) || blocks.is_empty());
        let (basis, monomial) = match family {
            None => (x.base().label(r).to_string(), None),
            Some(f) => {
                let (w, _) = f.split(r);
                (f.omega().label(w).to_string(), Some(monomial_spec(f.monomial(r))))
            }
        };
        out.push(TermSpec { basis, monomial, end_degree: k, blocks });
    }
    out
}

fn metric(spec: &MetricSpec) -> Result<MetricData, CliError> {
    let mut fiber = BTreeMap::new();
    for (i, b) in spec.fiber.iter().enumerate() {
        fiber.insert(b.degree, matrix(&b.rows, &format!("metric.fiber[{i}].rows"))?);
    }
    let base = spec.base.as_ref().map(|rows| matrix(rows, "metric.base")).transpose()?;
    Ok(MetricData::new(fiber, base))
}

pub fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = std::str::from_utf8(&bytes).map_err(|e| schema("", format!("not UTF-8: {e}")))?;
    let file: InstanceFile = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(text))
        .map_err(|e| schema(e.path().to_string(), e.inner().to_string()))?;
    let file_name = path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let stem = path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned());
    Instance::from_file(file, file_name, stem, digest)
}

impl Instance {
    pub fn from_file(file: InstanceFile, file_name: String, stem: String, digest: String) -> Result<Self, CliError> {
        let base = Arc::new(build_base(&file.base)?);
        let axioms = base.validate();
        if let Some(worst) = axioms.failures(cohesive_core::tol::AXIOM).first() {
            return Err(CliError::Axiom { axiom: worst.axiom.name().into(), worst: worst.worst });
        }
        let space = space(&file.space, "space")?;
        let conn = element(&file.connection, &base, None, &space, &space, "connection")?;
        let model = Arc::new(make_model(base, space, conn).map_err(|e| validation("connection", e))?);
        let metric = match &file.metric {
            Some(m) => metric(m)?,
            None => MetricData::standard(),
        };
        metric.validate(model.space(), model.base()).map_err(|e| validation("metric", e))?;
        Ok(Self { file, file_name, stem, digest, model, metric })
    }

    pub fn base(&self) -> &Arc<BaseAlgebra> {
        self.model.base()
    }

    pub fn seed_names(&self) -> Vec<&str> {
        self.file.seeds.keys().map(String::as_str).collect()
    }

    /// Σ t_i β_i for the named seed, truncated at `order`.
    pub fn seed(&self, name: &str, order: u32) -> Result<Series, CliError> {
        let dirs = self.file.seeds.get(name).ok_or_else(|| schema("seeds", format!("no seed named {name:?}")))?;
        if let Some(p) = self.file.parameters {
            if p.vars != dirs.len() {
                return Err(schema(format!("seeds.{name}"), format!("{} directions but parameters.vars = {}", dirs.len(), p.vars)));
            }
        }
        let space = self.model.space();
        let mut xs = Vec::new();
        for (i, d) in dirs.iter().enumerate() {
            xs.push(element(d, self.base(), None, space, space, &format!("seeds.{name}[{i}]"))?);
        }
        Series::linear(order, &xs).map_err(|e| validation(format!("seeds.{name}"), e))
    }

    pub fn default_order(&self) -> u32 {
        self.file.parameters.map_or(4, |p| p.order)
    }

    pub fn homotopy(&self) -> Result<HomotopyData, CliError> {
        let spec = self.file.homotopy.as_ref().ok_or_else(|| schema("homotopy", "instance has no homotopy block"))?;
        let base = self.base();
        let small_space = space(&spec.small.space, "homotopy.small.space")?;
        let conn = element(&spec.small.connection, base, None, &small_space, &small_space, "homotopy.small.connection")?;
        let small = Arc::new(make_model(base.clone(), small_space.clone(), conn).map_err(|e| validation("homotopy.small.connection", e))?);
        let big = &self.model;
        let morphism = |terms: &[TermSpec], src: &Arc<CohesiveModel>, tgt: &Arc<CohesiveModel>, k: i32, name: &str| {
            let body = element(terms, base, None, src.space(), tgt.space(), &format!("homotopy.{name}"))?;
            Morphism::new(src.clone(), tgt.clone(), k, body).map_err(|e| validation(format!("homotopy.{name}"), e))
        };
        let phi = morphism(&spec.phi, big, &small, 0, "phi")?;
        let psi = morphism(&spec.psi, &small, big, 0, "psi")?;
        let h = morphism(&spec.h, big, big, -1, "h")?;
        HomotopyData::new(phi, psi, h).map_err(|e| validation("homotopy", e))
    }

    pub fn series_names(&self) -> Vec<&str> {
        self.file.series.keys().map(String::as_str).collect()
    }

    pub fn series(&self, name: &str) -> Result<Series, CliError> {
        let spec = self.file.series.get(name).ok_or_else(|| schema("series", format!("no series named {name:?}")))?;
        let space = self.model.space();
        let mut s = Series::new(spec.vars, spec.order, self.model.zero_endo());
        for (i, c) in spec.coefficients.iter().enumerate() {
            let at = format!("series.{name}.coefficients[{i}]");
            if c.index.len() != spec.vars {
                return Err(schema(format!("{at}.index"), format!("multi-index must have length {}", spec.vars)));
            }
            let x = element(&c.terms, self.base(), None, space, space, &format!("{at}.terms"))?;
            s.set(MultiIndex::new(c.index.clone()), x).map_err(|e| validation(&at, e))?;
        }
        Ok(s)
    }

    pub fn family(&self) -> Result<FamilyConnection, CliError> {
        let spec = self.file.family.as_ref().ok_or_else(|| schema("family", "instance has no family block"))?;
        let params = ParameterAlgebra::new(spec.vars, spec.order, true).map_err(|e| validation("family", e))?;
        let family = Arc::new(FamilyAlgebra::new(self.base().clone(), Arc::new(params)));
        let space = self.model.space();
        let b = element(&spec.connection, family.total(), Some(&family), space, space, "family.connection")?;
        let conn = &lift(&family, self.model.connection()) + &b;
        FamilyConnection::new(family, space.clone(), conn).map_err(|e| validation("family.connection", e))
    }
}
