//! Finite graded-commutative differential algebras: the base algebra standing
//! in for antiholomorphic forms, and the truncated Dolbeault algebra of the
//! formal parameter disk with its ∂̄-contraction.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graded::{c64, C64};
use crate::tol;

pub type BaseElement = DVector<C64>;
pub(crate) type Sparse = Vec<(usize, C64)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisElement {
    pub label: String,
    pub degree: i32,
}

/// Basis, unit, structure constants `ω_r ω_s = Σ_u c_{rs}^u ω_u` and a
/// degree +1 differential, all stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseAlgebra {
    basis: Vec<BasisElement>,
    unit: usize,
    products: Vec<Sparse>,
    differential: Vec<Sparse>,
}

fn merge(entries: impl IntoIterator<Item = (usize, C64)>) -> Sparse {
    let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
    for (u, c) in entries {
        *acc.entry(u).or_insert(c64(0.0, 0.0)) += c;
    }
    acc.into_iter().filter(|(_, c)| c.norm() > 0.0).collect()
}

impl BaseAlgebra {
    /// `products` are (r, s, u, c_{rs}^u) and `differential` entries are
    /// (r, u, coefficient of ω_u in dω_r). Only shape and degree homogeneity
    /// are checked here; the algebra axioms are reported by [`validate`].
    ///
    /// [`validate`]: BaseAlgebra::validate
    pub fn new(
        basis: Vec<BasisElement>,
        unit: usize,
        products: impl IntoIterator<Item = (usize, usize, usize, C64)>,
        differential: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let n = basis.len();
        if n == 0 || unit >= n {
            return Err(Error::InvalidBase("unit index out of range".into()));
        }
        if basis[unit].degree != 0 {
            return Err(Error::InvalidBase("unit must have degree 0".into()));
        }
        let mut seen = HashMap::new();
        for (i, b) in basis.iter().enumerate() {
            if b.degree < 0 {
                return Err(Error::InvalidBase(format!("basis element {} has negative degree", b.label)));
            }
            if seen.insert(b.label.clone(), i).is_some() {
                return Err(Error::InvalidBase(format!("duplicate label {}", b.label)));
            }
        }
        let mut prod_raw: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n * n];
        for (r, s, u, c) in products {
            if r >= n || s >= n || u >= n {
                return Err(Error::InvalidBase(format!("product index ({r},{s},{u}) out of range")));
            }
            if c.norm() > 0.0 && basis[u].degree != basis[r].degree + basis[s].degree {
                return Err(Error::InvalidBase(format!(
                    "product {}·{} → {} is not degree-homogeneous",
                    basis[r].label, basis[s].label, basis[u].label
                )));
            }
            prod_raw[r * n + s].push((u, c));
        }
        let mut diff_raw: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for (r, u, c) in differential {
            if r >= n || u >= n {
                return Err(Error::InvalidBase(format!("differential index ({r},{u}) out of range")));
            }
            if c.norm() > 0.0 && basis[u].degree != basis[r].degree + 1 {
                return Err(Error::InvalidBase(format!(
                    "d({}) → {} does not raise degree by one",
                    basis[r].label, basis[u].label
                )));
            }
            diff_raw[r].push((u, c));
        }
        Ok(Self {
            basis,
            unit,
            products: prod_raw.into_iter().map(merge).collect(),
            differential: diff_raw.into_iter().map(merge).collect(),
        })
    }

    /// The one-dimensional algebra ℂ.
    pub fn point() -> Self {
        let basis = vec![BasisElement { label: "1".into(), degree: 0 }];
        Self::new(basis, 0, [(0, 0, 0, c64(1.0, 0.0))], []).unwrap()
    }

    /// Λ(θ₁..θ_g) with zero differential; basis ordered by degree, then
    /// lexicographically in the generator indices.
    pub fn exterior(g: usize) -> Result<Self> {
        if !(1..=8).contains(&g) {
            return Err(Error::GeneratorsOutOfRange(g));
        }
        let mut masks: Vec<u32> = (0..(1u32 << g)).collect();
        masks.sort_by_key(|&m| (m.count_ones(), bits(m)));
        let index: HashMap<u32, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let basis = masks
            .iter()
            .map(|&m| BasisElement {
                label: if m == 0 {
                    "1".into()
                } else {
                    bits(m).iter().map(|i| format!("th{}", i + 1)).collect()
                },
                degree: m.count_ones() as i32,
            })
            .collect();
        let mut products = Vec::new();
        for (r, &a) in masks.iter().enumerate() {
            for (s, &b) in masks.iter().enumerate() {
                if a & b == 0 {
                    products.push((r, s, index[&(a | b)], c64(wedge_sign(a, b), 0.0)));
                }
            }
        }
        Self::new(basis, 0, products, [])
    }

    /// Graded tensor product: (a⊗b)(a'⊗b') = (−1)^{|b||a'|} aa'⊗bb' and
    /// d(a⊗b) = da⊗b + (−1)^{|a|} a⊗db. Basis index is `r·dim(b) + s`.
    pub fn tensor(a: &BaseAlgebra, b: &BaseAlgebra) -> Self {
        let (na, nb) = (a.dim(), b.dim());
        let idx = |r: usize, s: usize| r * nb + s;
        // Second-factor labels that also occur in the first factor get a prime.
        let a_labels: std::collections::HashSet<&str> = a.basis.iter().map(|e| e.label.as_str()).collect();
        let b_label = |s: usize| {
            let l = &b.basis[s].label;
            if l != "1" && a_labels.contains(l.as_str()) { format!("{l}'") } else { l.clone() }
        };
        let basis = (0..na)
            .flat_map(|r| (0..nb).map(move |s| (r, s)))
            .map(|(r, s)| {
                let (la, lb) = (&a.basis[r].label, b_label(s));
                let label = match (la.as_str(), lb.as_str()) {
                    ("1", _) => lb,
                    (_, "1") => la.clone(),
                    _ => format!("{la}*{lb}"),
                };
                BasisElement { label, degree: a.basis[r].degree + b.basis[s].degree }
            })
            .collect();
        let mut products = Vec::new();
        for r in 0..na {
            for s in 0..nb {
                for r2 in 0..na {
                    let pa = a.product(r, r2);
                    if pa.is_empty() {
                        continue;
                    }
                    let sign = if (b.basis[s].degree * a.basis[r2].degree) % 2 == 0 { 1.0 } else { -1.0 };
                    for s2 in 0..nb {
                        for &(u, ca) in pa {
                            for &(v, cb) in b.product(s, s2) {
                                products.push((idx(r, s), idx(r2, s2), idx(u, v), ca * cb * sign));
                            }
                        }
                    }
                }
            }
        }
        let mut differential = Vec::new();
        for r in 0..na {
            let sign = if a.basis[r].degree % 2 == 0 { 1.0 } else { -1.0 };
            for s in 0..nb {
                for &(u, c) in a.differential_of(r) {
                    differential.push((idx(r, s), idx(u, s), c));
                }
                for &(v, c) in b.differential_of(s) {
                    differential.push((idx(r, s), idx(r, v), c * sign));
                }
            }
        }
        let basis_vec: Vec<BasisElement> = basis;
        Self::new(basis_vec, idx(a.unit, b.unit), products, differential)
            .expect("tensor product of valid algebras is well-formed")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn degree(&self, r: usize) -> i32 {
        self.basis[r].degree
    }

    pub fn label(&self, r: usize) -> &str {
        &self.basis[r].label
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b.label == label)
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn max_degree(&self) -> i32 {
        self.basis.iter().map(|b| b.degree).max().unwrap_or(0)
    }

    pub fn product(&self, r: usize, s: usize) -> &[(usize, C64)] {
        &self.products[r * self.dim() + s]
    }

    pub fn differential_of(&self, r: usize) -> &[(usize, C64)] {
        &self.differential[r]
    }

    pub fn has_zero_differential(&self) -> bool {
        self.differential.iter().all(|d| d.is_empty())
    }

    pub fn basis_vector(&self, r: usize) -> BaseElement {
        let mut v = BaseElement::zeros(self.dim());
        v[r] = c64(1.0, 0.0);
        v
    }

    pub fn mul(&self, a: &BaseElement, b: &BaseElement) -> BaseElement {
        let mut out = BaseElement::zeros(self.dim());
        for (r, x) in a.iter().enumerate().filter(|(_, x)| x.norm() > 0.0) {
            for (s, y) in b.iter().enumerate().filter(|(_, y)| y.norm() > 0.0) {
                for &(u, c) in self.product(r, s) {
                    out[u] += x * y * c;
                }
            }
        }
        out
    }

    pub fn d(&self, a: &BaseElement) -> BaseElement {
        let mut out = BaseElement::zeros(self.dim());
        for (r, x) in a.iter().enumerate() {
            for &(u, c) in self.differential_of(r) {
                out[u] += x * c;
            }
        }
        out
    }

    fn mul_sparse(&self, a: &[(usize, C64)], b: &[(usize, C64)]) -> BTreeMap<usize, C64> {
        let mut out = BTreeMap::new();
        for &(r, x) in a {
            for &(s, y) in b {
                for &(u, c) in self.product(r, s) {
                    *out.entry(u).or_insert(c64(0.0, 0.0)) += x * y * c;
                }
            }
        }
        out
    }

    fn d_sparse(&self, a: &[(usize, C64)]) -> BTreeMap<usize, C64> {
        let mut out = BTreeMap::new();
        for &(r, x) in a {
            for &(u, c) in self.differential_of(r) {
                *out.entry(u).or_insert(c64(0.0, 0.0)) += x * c;
            }
        }
        out
    }

    /// Checks graded commutativity, associativity, both unit laws, the
    /// Leibniz rule and d² = 0 on all basis tuples. The witness of a check is
    /// the worst basis triple: (r, s, u) with u the offending output
    /// coordinate for the binary axioms, (r, s, t) for associativity, and
    /// (r, r, u) for the unary ones.
    pub fn validate(&self) -> AxiomReport {
        let n = self.dim();
        let one = c64(1.0, 0.0);
        let mut checks = Vec::new();
        let mut track = |axiom: Axiom, diffs: &mut dyn Iterator<Item = (f64, (usize, usize, usize))>| {
            let mut worst = 0.0;
            let mut witness = None;
            for (err, w) in diffs {
                if err > worst {
                    worst = err;
                    witness = Some(w);
                }
            }
            checks.push(AxiomCheck { axiom, worst, witness });
        };
        let sub_max = |a: BTreeMap<usize, C64>, b: BTreeMap<usize, C64>| -> (f64, usize) {
            let mut worst = (0.0, 0);
            for k in a.keys().chain(b.keys()) {
                let e = (a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default()).norm();
                if e > worst.0 {
                    worst = (e, *k);
                }
            }
            worst
        };

        let mut comm = Vec::new();
        for r in 0..n {
            for s in 0..n {
                let sign = if (self.degree(r) * self.degree(s)) % 2 == 0 { 1.0 } else { -1.0 };
                let lhs = self.mul_sparse(&[(r, one)], &[(s, one)]);
                let rhs = self.mul_sparse(&[(s, one * sign)], &[(r, one)]);
                let (e, u) = sub_max(lhs, rhs);
                comm.push((e, (r, s, u)));
            }
        }
        track(Axiom::GradedCommutativity, &mut comm.into_iter());

        let mut assoc = Vec::new();
        for r in 0..n {
            for s in 0..n {
                let rs: Sparse = self.mul_sparse(&[(r, one)], &[(s, one)]).into_iter().collect();
                for t in 0..n {
                    let st: Sparse = self.mul_sparse(&[(s, one)], &[(t, one)]).into_iter().collect();
                    let lhs = self.mul_sparse(&rs, &[(t, one)]);
                    let rhs = self.mul_sparse(&[(r, one)], &st);
                    assoc.push((sub_max(lhs, rhs).0, (r, s, t)));
                }
            }
        }
        track(Axiom::Associativity, &mut assoc.into_iter());

        let unit = self.unit;
        let mut left = Vec::new();
        let mut right = Vec::new();
        for r in 0..n {
            let e: BTreeMap<usize, C64> = [(r, one)].into_iter().collect();
            let (el, ul) = sub_max(self.mul_sparse(&[(unit, one)], &[(r, one)]), e.clone());
            left.push((el, (unit, r, ul)));
            let (er, ur) = sub_max(self.mul_sparse(&[(r, one)], &[(unit, one)]), e);
            right.push((er, (r, unit, ur)));
        }
        track(Axiom::LeftUnit, &mut left.into_iter());
        track(Axiom::RightUnit, &mut right.into_iter());

        let mut leib = Vec::new();
        for r in 0..n {
            let dr: Sparse = self.d_sparse(&[(r, one)]).into_iter().collect();
            let sign = if self.degree(r) % 2 == 0 { 1.0 } else { -1.0 };
            for s in 0..n {
                let rs: Sparse = self.mul_sparse(&[(r, one)], &[(s, one)]).into_iter().collect();
                let lhs = self.d_sparse(&rs);
                let ds: Sparse = self.d_sparse(&[(s, one)]).into_iter().collect();
                let mut rhs = self.mul_sparse(&dr, &[(s, one)]);
                for (u, c) in self.mul_sparse(&[(r, one * sign)], &ds) {
                    *rhs.entry(u).or_insert(c64(0.0, 0.0)) += c;
                }
                let (e, u) = sub_max(lhs, rhs);
                leib.push((e, (r, s, u)));
            }
        }
        track(Axiom::Leibniz, &mut leib.into_iter());

        let mut dd = Vec::new();
        for r in 0..n {
            let dr: Sparse = self.d_sparse(&[(r, one)]).into_iter().collect();
            let (e, u) = sub_max(self.d_sparse(&dr), BTreeMap::new());
            dd.push((e, (r, r, u)));
        }
        track(Axiom::DifferentialSquared, &mut dd.into_iter());

        AxiomReport { checks }
    }
}

fn bits(m: u32) -> Vec<u32> {
    (0..32).filter(|i| m >> i & 1 == 1).collect()
}

/// Sign of θ_A ∧ θ_B against the sorted monomial θ_{A∪B}.
pub(crate) fn wedge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0;
    for i in bits(a) {
        inversions += (b & ((1u32 << i) - 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    GradedCommutativity,
    Associativity,
    LeftUnit,
    RightUnit,
    Leibniz,
    DifferentialSquared,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::GradedCommutativity => "graded commutativity",
            Axiom::Associativity => "associativity",
            Axiom::LeftUnit => "left unit",
            Axiom::RightUnit => "right unit",
            Axiom::Leibniz => "Leibniz rule",
            Axiom::DifferentialSquared => "d squared",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub worst: f64,
    pub witness: Option<(usize, usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures(tol::AXIOM).is_empty()
    }

    pub fn failures(&self, tolerance: f64) -> Vec<&AxiomCheck> {
        self.checks.iter().filter(|c| c.worst > tolerance).collect()
    }

    pub fn check(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks.iter().find(|c| c.axiom == axiom).expect("all axioms are checked")
    }
}

/// Monomial t^I t̄^J dt̄_K; `dtbar` is a bitmask with generators sorted by index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub t: Vec<u32>,
    pub tbar: Vec<u32>,
    pub dtbar: u32,
}

impl Monomial {
    pub fn one(vars: usize) -> Self {
        Self { t: vec![0; vars], tbar: vec![0; vars], dtbar: 0 }
    }

    pub fn holomorphic(t: Vec<u32>) -> Self {
        let m = t.len();
        Self { t, tbar: vec![0; m], dtbar: 0 }
    }

    /// Joint degree |I| + |J| + |K|; the dt̄ count is included so that ∂̄
    /// preserves it and truncation yields a differential quotient.
    pub fn weight(&self) -> u32 {
        self.t.iter().sum::<u32>() + self.antiholomorphic_weight()
    }

    /// |J| + |K|, the Euler weight the contraction divides by.
    pub fn antiholomorphic_weight(&self) -> u32 {
        self.tbar.iter().sum::<u32>() + self.dtbar.count_ones()
    }

    pub fn form_degree(&self) -> i32 {
        self.dtbar.count_ones() as i32
    }

    pub fn is_holomorphic(&self) -> bool {
        self.antiholomorphic_weight() == 0
    }

    fn label(&self) -> String {
        let mut parts = Vec::new();
        let pow = |name: &str, i: usize, e: u32| {
            if e == 1 {
                format!("{name}{}", i + 1)
            } else {
                format!("{name}{}^{e}", i + 1)
            }
        };
        for (i, &e) in self.t.iter().enumerate().filter(|(_, e)| **e > 0) {
            parts.push(pow("t", i, e));
        }
        for (i, &e) in self.tbar.iter().enumerate().filter(|(_, e)| **e > 0) {
            parts.push(pow("tb", i, e));
        }
        for i in bits(self.dtbar) {
            parts.push(format!("dtb{}", i + 1));
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// Truncated polynomials in t (and, when antiholomorphic, t̄ and dt̄) with the
/// differential ∂̄ = Σ dt̄_i ∂/∂t̄_i.
#[derive(Clone, Debug)]
pub struct ParameterAlgebra {
    vars: usize,
    order: usize,
    antiholomorphic: bool,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    kappa: Vec<Sparse>,
    base: Arc<BaseAlgebra>,
}

fn exponent_vectors(vars: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..vars {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                let used: u32 = v.iter().sum();
                (0..=max - used).map(move |e| {
                    let mut w = v.clone();
                    w.push(e);
                    w
                })
            })
            .collect();
    }
    out
}

impl ParameterAlgebra {
    pub fn new(vars: usize, order: usize, antiholomorphic: bool) -> Result<Self> {
        if vars == 0 || vars > 8 {
            return Err(Error::ParameterMismatch(format!("{vars} parameter variables (1..=8)")));
        }
        let n = order as u32;
        let mut monomials = Vec::new();
        for t in exponent_vectors(vars, n) {
            if !antiholomorphic {
                monomials.push(Monomial::holomorphic(t));
                continue;
            }
            for tbar in exponent_vectors(vars, n) {
                for mask in 0..(1u32 << vars) {
                    let m = Monomial { t: t.clone(), tbar: tbar.clone(), dtbar: mask };
                    if m.weight() <= n {
                        monomials.push(m);
                    }
                }
            }
        }
        monomials.sort_by(|a, b| {
            (a.weight(), a.form_degree(), &a.t, &a.tbar, a.dtbar)
                .cmp(&(b.weight(), b.form_degree(), &b.t, &b.tbar, b.dtbar))
        });
        let index: HashMap<Monomial, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();

        let mut products = Vec::new();
        for (r, a) in monomials.iter().enumerate() {
            for (s, b) in monomials.iter().enumerate() {
                if a.dtbar & b.dtbar != 0 || a.weight() + b.weight() > n {
                    continue;
                }
                let m = Monomial {
                    t: a.t.iter().zip(&b.t).map(|(x, y)| x + y).collect(),
                    tbar: a.tbar.iter().zip(&b.tbar).map(|(x, y)| x + y).collect(),
                    dtbar: a.dtbar | b.dtbar,
                };
                products.push((r, s, index[&m], c64(wedge_sign(a.dtbar, b.dtbar), 0.0)));
            }
        }
        let mut differential = Vec::new();
        let mut kappa = vec![Vec::new(); monomials.len()];
        for (r, a) in monomials.iter().enumerate() {
            for i in 0..vars {
                let bit = 1u32 << i;
                // ∂̄: t̄_i^{J_i} → J_i t̄_i^{J_i−1} dt̄_i, dt̄_i moved into sorted position.
                if a.tbar[i] > 0 && a.dtbar & bit == 0 {
                    let mut m = a.clone();
                    m.tbar[i] -= 1;
                    m.dtbar |= bit;
                    let c = a.tbar[i] as f64 * wedge_sign(bit, a.dtbar);
                    differential.push((r, index[&m], c64(c, 0.0)));
                }
                // κ: contract dt̄_i against the Euler field t̄_i, divided by the weight.
                if a.dtbar & bit != 0 {
                    let mut m = a.clone();
                    m.dtbar &= !bit;
                    m.tbar[i] += 1;
                    let w = a.antiholomorphic_weight() as f64;
                    let c = wedge_sign(bit, m.dtbar) / w;
                    kappa[r].push((index[&m], c64(c, 0.0)));
                }
            }
        }
        let basis = monomials
            .iter()
            .map(|m| BasisElement { label: m.label(), degree: m.form_degree() })
            .collect();
        let base = Arc::new(BaseAlgebra::new(basis, 0, products, differential)?);
        Ok(Self { vars, order, antiholomorphic, monomials, index, kappa, base })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn antiholomorphic(&self) -> bool {
        self.antiholomorphic
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn monomial(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn base(&self) -> &Arc<BaseAlgebra> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn dbar(&self, x: &BaseElement) -> BaseElement {
        self.base.d(x)
    }

    pub(crate) fn kappa_of(&self, r: usize) -> &[(usize, C64)] {
        &self.kappa[r]
    }

    /// The contraction κ with ∂̄κ + κ∂̄ = id − P₀.
    pub fn dbar_homotopy(&self, x: &BaseElement) -> Result<BaseElement> {
        if !self.antiholomorphic {
            return Err(Error::HolomorphicOnly);
        }
        let mut out = BaseElement::zeros(self.dim());
        for (r, v) in x.iter().enumerate() {
            for &(u, c) in &self.kappa[r] {
                out[u] += v * c;
            }
        }
        Ok(out)
    }

    /// P₀: keeps the t̄-free, dt̄-free part.
    pub fn holomorphic_part(&self, x: &BaseElement) -> BaseElement {
        BaseElement::from_iterator(
            self.dim(),
            x.iter().zip(&self.monomials).map(|(v, m)| if m.is_holomorphic() { *v } else { c64(0.0, 0.0) }),
        )
    }
}

/// Ω ⊗̂ P for a base algebra Ω and a parameter algebra P, with index
/// bookkeeping for the operations that act on one factor only.
#[derive(Clone, Debug)]
pub struct FamilyAlgebra {
    omega: Arc<BaseAlgebra>,
    params: Arc<ParameterAlgebra>,
    total: Arc<BaseAlgebra>,
}

impl FamilyAlgebra {
    pub fn new(omega: Arc<BaseAlgebra>, params: Arc<ParameterAlgebra>) -> Self {
        let total = Arc::new(BaseAlgebra::tensor(&omega, params.base()));
        Self { omega, params, total }
    }

    pub fn omega(&self) -> &Arc<BaseAlgebra> {
        &self.omega
    }

    pub fn params(&self) -> &Arc<ParameterAlgebra> {
        &self.params
    }

    pub fn total(&self) -> &Arc<BaseAlgebra> {
        &self.total
    }

    pub fn index(&self, r: usize, p: usize) -> usize {
        r * self.params.dim() + p
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.params.dim(), idx % self.params.dim())
    }

    pub fn monomial(&self, idx: usize) -> &Monomial {
        self.params.monomial(self.split(idx).1)
    }

    /// d_Ω ⊗ 1 on a basis element.
    pub fn omega_differential(&self, idx: usize) -> Sparse {
        let (r, p) = self.split(idx);
        self.omega.differential_of(r).iter().map(|&(u, c)| (self.index(u, p), c)).collect()
    }

    /// (−1)^{|ω|} ω ⊗ ∂̄p on a basis element ω ⊗ p.
    pub fn dbar(&self, idx: usize) -> Sparse {
        let (r, p) = self.split(idx);
        let sign = if self.omega.degree(r) % 2 == 0 { 1.0 } else { -1.0 };
        self.params.base().differential_of(p).iter().map(|&(v, c)| (self.index(r, v), c * sign)).collect()
    }

    /// (−1)^{|ω|} ω ⊗ κp, the contraction lifted with the sign that makes it
    /// a homotopy for the lifted ∂̄.
    pub fn kappa(&self, idx: usize) -> Sparse {
        let (r, p) = self.split(idx);
        let sign = if self.omega.degree(r) % 2 == 0 { 1.0 } else { -1.0 };
        self.params.kappa_of(p).iter().map(|&(v, c)| (self.index(r, v), c * sign)).collect()
    }

    /// Evaluation at the origin: keeps ω ⊗ 1 and drops everything else.
    pub fn at_origin(&self, idx: usize) -> Sparse {
        let (r, p) = self.split(idx);
        if p == self.params.base().unit() {
            vec![(r, c64(1.0, 0.0))]
        } else {
            Vec::new()
        }
    }

    /// ω ↦ ω ⊗ 1.
    pub fn embed(&self, r: usize) -> Sparse {
        vec![(self.index(r, self.params.base().unit()), c64(1.0, 0.0))]
    }

    /// ω ⊗ p ↦ ω ⊗ (p·m) for a monomial index m.
    pub fn times_monomial(&self, idx: usize, m: usize) -> Sparse {
        let (r, p) = self.split(idx);
        self.params.base().product(p, m).iter().map(|&(v, c)| (self.index(r, v), c)).collect()
    }
}
