//! Independent oracles for the integration and acceptance tests.
//!
//! An element ω⊗M of Ω ⊗ Hom(E, F) acts on Ω ⊗ E by
//! (ω⊗M)(η⊗e) = (−1)^{|M||η|} ωη ⊗ Me. The representation is faithful, so
//! composition, brackets, the differential, gauge conjugation and Maurer–Cartan
//! residuals all reduce to dense matrix products with no Koszul bookkeeping
//! beyond this single rule. Nothing here calls the library's composition,
//! bracket or differential.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cohesive_core::graded::{c64, GradedMap};
use cohesive_core::{AlgebraElement, BaseAlgebra, CMatrix, CohesiveModel, GradedSpace, MultiIndex, Series, C64};

pub fn parity(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Left multiplication by x on Ω ⊗ E, indexed by (basis index)·dim + fiber index.
pub fn operator(x: &AlgebraElement) -> CMatrix {
    let base = x.base();
    let (ns, nt, nb) = (x.source().total_dim(), x.target().total_dim(), base.dim());
    let mut op = CMatrix::zeros(nb * nt, nb * ns);
    for (r, k, m) in x.terms() {
        for s in 0..nb {
            let sg = parity(k * base.degree(s));
            for &(u, c) in base.product(r, s) {
                let mut block = op.view_mut((u * nt, s * ns), (nt, ns));
                block += m * (c * sg);
            }
        }
    }
    op
}

/// d_Ω ⊗ 1 on Ω ⊗ E.
pub fn base_d_operator(base: &BaseAlgebra, space: &GradedSpace) -> CMatrix {
    let (n, nb) = (space.total_dim(), base.dim());
    let mut op = CMatrix::zeros(nb * n, nb * n);
    for s in 0..nb {
        for &(u, c) in base.differential_of(s) {
            for i in 0..n {
                op[(u * n + i, s * n + i)] += c;
            }
        }
    }
    op
}

/// d_Ω + A acting on Ω ⊗ E; it squares to zero exactly when A is flat.
pub fn total_operator(model: &CohesiveModel) -> CMatrix {
    base_d_operator(model.base(), model.space()) + operator(model.connection())
}

pub fn graded_commutator(x: &CMatrix, dx: i32, y: &CMatrix, dy: i32) -> CMatrix {
    x * y - y * x * c64(parity(dx * dy), 0.0)
}

/// D_F X − (−1)^k X D_E for X of degree k from `source` to `target`.
pub fn hom_differential_operator(target: &CohesiveModel, source: &CohesiveModel, x: &CMatrix, k: i32) -> CMatrix {
    total_operator(target) * x - x * total_operator(source) * c64(parity(k), 0.0)
}

/// Operator on Ω ⊗ E back to an element: the action on 1 ⊗ E determines it.
pub fn element_from_operator(
    base: &std::sync::Arc<BaseAlgebra>,
    source: &std::sync::Arc<GradedSpace>,
    target: &std::sync::Arc<GradedSpace>,
    op: &CMatrix,
) -> AlgebraElement {
    let (ns, nt) = (source.total_dim(), target.total_dim());
    let unit = base.unit();
    let mut out = AlgebraElement::zero(base.clone(), source.clone(), target.clone());
    for r in 0..base.dim() {
        let block = op.view((r * nt, unit * ns), (nt, ns)).clone_owned();
        // Split by End-degree: entry (i, j) has degree deg(i) − deg(j).
        let mut by_degree: BTreeMap<i32, CMatrix> = BTreeMap::new();
        for i in 0..nt {
            for j in 0..ns {
                if block[(i, j)] != c64(0.0, 0.0) {
                    let k = target.degree_of(i) - source.degree_of(j);
                    by_degree.entry(k).or_insert_with(|| CMatrix::zeros(nt, ns))[(i, j)] = block[(i, j)];
                }
            }
        }
        for (k, m) in by_degree {
            let map = GradedMap::from_matrix(source.clone(), target.clone(), k, m).expect("degree-k support");
            out.add_term(r, &map).expect("shapes match");
        }
    }
    out
}

/// ω_r ⊗ E_{ij} for every (r, i, j) of total degree k.
pub fn elementary_basis(base: &std::sync::Arc<BaseAlgebra>, space: &std::sync::Arc<GradedSpace>, k: i32) -> Vec<AlgebraElement> {
    let n = space.total_dim();
    let mut out = Vec::new();
    for r in 0..base.dim() {
        for i in 0..n {
            for j in 0..n {
                let end = space.degree_of(i) - space.degree_of(j);
                if base.degree(r) + end != k {
                    continue;
                }
                let mut m = CMatrix::zeros(n, n);
                m[(i, j)] = c64(1.0, 0.0);
                let map = GradedMap::from_matrix(space.clone(), space.clone(), end, m).unwrap();
                out.push(AlgebraElement::from_map(base.clone(), r, &map).unwrap());
            }
        }
    }
    out
}

/// Rank with singular values above 1e−8 times the largest.
pub fn numerical_rank(m: &CMatrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top <= 1e-14 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * top).count()
}

fn unit_column_vector(base: &BaseAlgebra, n: usize, op: &CMatrix) -> Vec<C64> {
    let unit = base.unit();
    op.view((0, unit * n), (op.nrows(), n)).iter().cloned().collect()
}

/// Rank of the endomorphism-complex differential L^k → L^{k+1}, computed on
/// operators.
pub fn differential_rank(model: &CohesiveModel, k: i32) -> usize {
    let basis = elementary_basis(model.base(), model.space(), k);
    if basis.is_empty() {
        return 0;
    }
    let n = model.space().total_dim();
    let cols: Vec<Vec<C64>> = basis
        .iter()
        .map(|b| unit_column_vector(model.base(), n, &hom_differential_operator(model, model, &operator(b), k)))
        .collect();
    let m = CMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    numerical_rank(&m)
}

/// dim H^k(Ω ⊗ End E) by rank–nullity.
pub fn cohomology_dim(model: &CohesiveModel, k: i32) -> usize {
    let dim = elementary_basis(model.base(), model.space(), k).len();
    dim - differential_rank(model, k) - differential_rank(model, k - 1)
}

/// Power series with operator coefficients, including the constant term.
pub type OpSeries = BTreeMap<MultiIndex, CMatrix>;

pub fn op_series(s: &Series) -> OpSeries {
    s.iter().map(|(i, x)| (i.clone(), operator(x))).collect()
}

pub fn op_constant(vars: usize, m: CMatrix) -> OpSeries {
    BTreeMap::from([(MultiIndex::zero(vars), m)])
}

pub fn op_add(a: &OpSeries, b: &OpSeries, cb: f64) -> OpSeries {
    let mut out = a.clone();
    for (i, m) in b {
        let e = out.entry(i.clone()).or_insert_with(|| CMatrix::zeros(m.nrows(), m.ncols()));
        *e += m * c64(cb, 0.0);
    }
    out
}

pub fn op_mul(a: &OpSeries, b: &OpSeries, order: u32) -> OpSeries {
    let mut out: OpSeries = BTreeMap::new();
    for (i, x) in a {
        for (j, y) in b {
            let k = i.add(j);
            if k.total() > order {
                continue;
            }
            let p = x * y;
            match out.get_mut(&k) {
                Some(e) => *e += p,
                None => {
                    out.insert(k, p);
                }
            }
        }
    }
    out
}

/// Σ_k (c·u)^k / k! for u without constant term.
pub fn op_exp(u: &OpSeries, c: f64, vars: usize, dim: usize, order: u32) -> OpSeries {
    let scaled: OpSeries = u.iter().map(|(i, m)| (i.clone(), m * c64(c, 0.0))).collect();
    let mut out = op_constant(vars, CMatrix::identity(dim, dim));
    let mut power = out.clone();
    for k in 1..=order {
        power = op_mul(&power, &scaled, order);
        out = op_add(&out, &power, 1.0 / factorial(k));
    }
    out
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Largest coefficient distance, over constant and non-constant indices.
pub fn op_distance(a: &OpSeries, b: &OpSeries) -> f64 {
    let diff = op_add(a, b, -1.0);
    diff.values().map(|m| m.norm()).fold(0.0, f64::max)
}

/// Coefficients of (D + α)², i.e. the Maurer–Cartan residual of α.
pub fn mc_residual_oracle(model: &CohesiveModel, alpha: &Series) -> OpSeries {
    let d = op_constant(alpha.vars(), total_operator(model));
    let total = op_add(&d, &op_series(alpha), 1.0);
    op_mul(&total, &total, alpha.order())
}

/// e^u (D + α) e^{−u} − D.
pub fn gauge_oracle(model: &CohesiveModel, u: &Series, alpha: &Series) -> OpSeries {
    let (vars, order) = (alpha.vars(), alpha.order());
    let dim = model.base().dim() * model.space().total_dim();
    let ou = op_series(u);
    let d = op_constant(vars, total_operator(model));
    let conj = op_mul(
        &op_mul(&op_exp(&ou, 1.0, vars, dim, order), &op_add(&d, &op_series(alpha), 1.0), order),
        &op_exp(&ou, -1.0, vars, dim, order),
        order,
    );
    op_add(&conj, &d, -1.0)
}
