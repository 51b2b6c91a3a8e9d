//! Finite-dimensional Hodge theory for the endomorphism DGLA and for the base
//! algebra: adjoint, Laplacian, harmonic projector and Green operator per
//! degree, computed by Hermitian eigendecomposition in orthonormal coordinates.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::base::{BaseAlgebra, BaseElement};
use crate::cohesive::{dgla_of, CohesiveModel, Dgla};
use crate::element::{AlgebraElement, Layout};
use crate::error::{Error, Result};
use crate::graded::{c64, CMatrix, GradedSpace, C64};
use crate::linalg;
use crate::tol;

/// Graded Hermitian metric on E (one positive-definite block per degree,
/// identity where absent) and a Hermitian inner product on the base algebra
/// (identity when absent).
#[derive(Clone, Debug, Default)]
pub struct MetricData {
    fiber: BTreeMap<i32, CMatrix>,
    base: Option<CMatrix>,
}

fn check_positive(m: &CMatrix, location: String) -> Result<()> {
    let scale = linalg::spectral_norm(m).max(1.0);
    let min = linalg::min_hermitian_eigenvalue(m);
    if linalg::hermitian_defect(m) > tol::EXACT * scale || !(min > 0.0) {
        return Err(Error::MetricNotPositive { location, min_eigenvalue: min });
    }
    Ok(())
}

impl MetricData {
    /// Identity metrics everywhere.
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn new(fiber: BTreeMap<i32, CMatrix>, base: Option<CMatrix>) -> Self {
        Self { fiber, base }
    }

    pub fn fiber_block(&self, degree: i32) -> Option<&CMatrix> {
        self.fiber.get(&degree)
    }

    pub fn base_gram(&self) -> Option<&CMatrix> {
        self.base.as_ref()
    }

    pub fn validate(&self, space: &GradedSpace, base: &BaseAlgebra) -> Result<()> {
        for (&d, m) in &self.fiber {
            let n = space.dim(d);
            if m.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "metric block in degree {d} must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_positive(m, format!("fiber degree {d}"))?;
        }
        if let Some(g) = &self.base {
            let n = base.dim();
            if g.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!("base metric must be {n}x{n}")));
            }
            for r in 0..n {
                for s in 0..n {
                    if base.degree(r) != base.degree(s) && g[(r, s)].norm() > 0.0 {
                        return Err(Error::MetricNotPositive {
                            location: format!("base metric pairs degrees {} and {}", base.degree(r), base.degree(s)),
                            min_eigenvalue: f64::NAN,
                        });
                    }
                }
            }
            check_positive(g, "base algebra".into())?;
        }
        Ok(())
    }

    /// Block-diagonal metric on the flattened space.
    pub fn fiber_matrix(&self, space: &GradedSpace) -> CMatrix {
        let n = space.total_dim();
        let mut h = CMatrix::identity(n, n);
        for &(d, k) in space.components() {
            if let Some(b) = self.fiber.get(&d) {
                let start = space.range(d).unwrap().start;
                h.view_mut((start, start), (k, k)).copy_from(b);
            }
        }
        h
    }

    pub fn base_matrix(&self, base: &BaseAlgebra) -> CMatrix {
        self.base.clone().unwrap_or_else(|| CMatrix::identity(base.dim(), base.dim()))
    }
}

/// Hodge data of one degree of a finite cochain complex with a chosen inner
/// product. Matrices suffixed `_on` act on orthonormal coordinates y = L*x
/// where the Gram matrix is L L*; the others act on the original coordinates.
#[derive(Clone, Debug)]
struct DegreeHodge {
    dim: usize,
    gram: CMatrix,
    l_adj: CMatrix,
    l_adj_inv: CMatrix,
    d_on: CMatrix,
    dstar_on: CMatrix,
    lap_on: CMatrix,
    harmonic_on: CMatrix,
    green_on: CMatrix,
    eigenvalues: Vec<f64>,
    harmonic_basis_on: CMatrix,
}

impl DegreeHodge {
    fn to_original(&self, m_on: &CMatrix, target: &DegreeHodge) -> CMatrix {
        &target.l_adj_inv * m_on * &self.l_adj
    }
}

/// Hodge theory of a finite complex (C^k, d_k) with Gram matrices.
#[derive(Clone, Debug)]
struct ComplexHodge {
    lo: i32,
    hi: i32,
    degrees: BTreeMap<i32, DegreeHodge>,
    tau: f64,
}

impl ComplexHodge {
    /// `dims`, `grams` and `diffs` are indexed by degree over lo..=hi; diffs[k]
    /// maps degree k to k+1 (dims[k+1] × dims[k], empty shapes at the ends).
    fn build(lo: i32, hi: i32, grams: &BTreeMap<i32, CMatrix>, diffs: &BTreeMap<i32, CMatrix>) -> Result<Self> {
        let mut chol = BTreeMap::new();
        for k in lo..=hi {
            let g = &grams[&k];
            let l = linalg::cholesky_lower(g).ok_or_else(|| Error::MetricNotPositive {
                location: format!("Gram matrix in degree {k}"),
                min_eigenvalue: linalg::min_hermitian_eigenvalue(g),
            })?;
            let l_adj = l.adjoint();
            let l_adj_inv = linalg::inverse(&l_adj).expect("Cholesky factor is invertible");
            chol.insert(k, (l_adj, l_adj_inv));
        }
        let dim = |k: i32| grams.get(&k).map_or(0, |g| g.nrows());
        let d_on = |k: i32| -> CMatrix {
            if k < lo || k >= hi {
                return CMatrix::zeros(dim(k + 1), dim(k));
            }
            &chol[&(k + 1)].0 * &diffs[&k] * &chol[&k].1
        };
        let mut degrees = BTreeMap::new();
        let mut top = 0.0f64;
        let mut raw = BTreeMap::new();
        for k in lo..=hi {
            let dk = d_on(k);
            let dprev = d_on(k - 1);
            let lap = dk.adjoint() * &dk + &dprev * dprev.adjoint();
            let (vals, vecs) = linalg::hermitian_eigen(&lap);
            top = vals.iter().copied().fold(top, f64::max);
            raw.insert(k, (dk, dprev.adjoint(), lap, vals, vecs));
        }
        let tau = tol::SPECTRAL_RELATIVE * if top > tol::PRUNE { top } else { 1.0 };
        for (k, (dk, dstar, lap, vals, vecs)) in raw {
            let n = vals.len();
            let mut harmonic = CMatrix::zeros(n, n);
            let mut green = CMatrix::zeros(n, n);
            let mut basis = Vec::new();
            for (i, &lambda) in vals.iter().enumerate() {
                let v = vecs.column(i);
                let p = &v * v.adjoint();
                if lambda <= tau {
                    harmonic += p;
                    basis.push(v.into_owned());
                } else {
                    green += p * c64(1.0 / lambda, 0.0);
                }
            }
            let harmonic_basis_on = if basis.is_empty() { CMatrix::zeros(n, 0) } else { CMatrix::from_columns(&basis) };
            let (l_adj, l_adj_inv) = chol.remove(&k).unwrap();
            degrees.insert(
                k,
                DegreeHodge {
                    dim: n,
                    gram: grams[&k].clone(),
                    l_adj,
                    l_adj_inv,
                    d_on: dk,
                    dstar_on: dstar,
                    lap_on: lap,
                    harmonic_on: harmonic,
                    green_on: green,
                    eigenvalues: vals,
                    harmonic_basis_on,
                },
            );
        }
        Ok(Self { lo, hi, degrees, tau })
    }

    fn get(&self, k: i32) -> Option<&DegreeHodge> {
        self.degrees.get(&k)
    }

    /// Applies an operator of degree `shift` given by `pick` in orthonormal
    /// coordinates to a coordinate vector in degree k.
    fn apply(&self, k: i32, shift: i32, x: &DVector<C64>, pick: impl Fn(&DegreeHodge) -> &CMatrix) -> Option<DVector<C64>> {
        let src = self.get(k)?;
        let tgt = self.get(k + shift)?;
        let y = &src.l_adj * x;
        Some(&tgt.l_adj_inv * (pick(src) * y))
    }

    fn residuals(&self) -> IdentityResiduals {
        let mut r = IdentityResiduals::default();
        let norm = linalg::spectral_norm;
        let zeros = |a: usize, b: usize| CMatrix::zeros(a, b);
        for k in self.lo..=self.hi {
            let s = &self.degrees[&k];
            let n = s.dim;
            let id = CMatrix::identity(n, n);
            r.decomposition = r.decomposition.max(norm(&(&id - &s.harmonic_on - &s.lap_on * &s.green_on)));
            r.green_laplacian = r.green_laplacian.max(norm(&(&s.lap_on * &s.green_on - &s.green_on * &s.lap_on)));
            r.harmonic_green = r
                .harmonic_green
                .max(norm(&(&s.harmonic_on * &s.green_on)))
                .max(norm(&(&s.green_on * &s.harmonic_on)));
            r.projector = r
                .projector
                .max(norm(&(&s.harmonic_on * &s.harmonic_on - &s.harmonic_on)))
                .max(norm(&(&s.harmonic_on - s.harmonic_on.adjoint())));
            let next_green = self.get(k + 1).map_or_else(|| zeros(0, 0), |t| t.green_on.clone());
            if let Some(_t) = self.get(k + 1) {
                r.green_d = r.green_d.max(norm(&(&next_green * &s.d_on - &s.d_on * &s.green_on)));
            }
            if let Some(p) = self.get(k - 1) {
                r.green_dstar = r.green_dstar.max(norm(&(&p.green_on * &s.dstar_on - &s.dstar_on * &s.green_on)));
            }
        }
        r
    }
}

/// Worst operator-norm defects of the Hodge identities over all degrees:
/// id = H + □G, Gd = dG, Gd* = d*G, □G = G□, HG = GH = 0, H² = H = H*.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    pub decomposition: f64,
    pub green_d: f64,
    pub green_dstar: f64,
    pub green_laplacian: f64,
    pub harmonic_green: f64,
    pub projector: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [self.decomposition, self.green_d, self.green_dstar, self.green_laplacian, self.harmonic_green, self.projector]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// x = d(d*Gx) + d*(dGx) + Hx.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub exact: AlgebraElement,
    pub coexact: AlgebraElement,
    pub harmonic: AlgebraElement,
}

/// Hodge package of the endomorphism DGLA of a model.
#[derive(Clone, Debug)]
pub struct HodgePackage {
    dgla: Dgla,
    metric: MetricData,
    layouts: BTreeMap<i32, Layout>,
    complex: ComplexHodge,
}

/// Gram matrix of (x, y) = Σ g_Ω(ω_r, ω_s) tr(X^* h Y h^{-1}) in layout coordinates.
fn endo_gram(layout: &Layout, g_base: &CMatrix, h: &CMatrix, h_inv: &CMatrix) -> CMatrix {
    let coords: Vec<_> = layout.coordinates().collect();
    let n = coords.len();
    let mut g = CMatrix::zeros(n, n);
    for (i, a) in coords.iter().enumerate() {
        for (j, b) in coords.iter().enumerate() {
            let gb = g_base[(a.r, b.r)];
            if gb.norm() == 0.0 {
                continue;
            }
            g[(i, j)] = gb * h[(a.row, b.row)] * h_inv[(b.col, a.col)];
        }
    }
    g
}

pub fn build_hodge(model: &Arc<CohesiveModel>, metric: &MetricData) -> Result<HodgePackage> {
    metric.validate(model.space(), model.base())?;
    let dgla = dgla_of(model);
    let (lo, hi) = dgla.degree_range();
    let (lo, hi) = (lo - 1, hi + 1);
    let h = metric.fiber_matrix(model.space());
    let h_inv = linalg::inverse(&h).expect("positive-definite metric");
    let g_base = metric.base_matrix(model.base());
    let layouts: BTreeMap<i32, Layout> = (lo..=hi + 1).map(|k| (k, dgla.layout(k))).collect();
    let grams = (lo..=hi).map(|k| (k, endo_gram(&layouts[&k], &g_base, &h, &h_inv))).collect();
    let diffs = (lo..hi).map(|k| (k, dgla.differential_matrix(k))).collect();
    let complex = ComplexHodge::build(lo, hi, &grams, &diffs)?;
    let mut layouts = layouts;
    layouts.remove(&(hi + 1));
    Ok(HodgePackage { dgla, metric: metric.clone(), layouts, complex })
}

impl HodgePackage {
    pub fn model(&self) -> &Arc<CohesiveModel> {
        self.dgla.model()
    }

    pub fn dgla(&self) -> &Dgla {
        &self.dgla
    }

    pub fn metric(&self) -> &MetricData {
        &self.metric
    }

    /// Degrees carrying stored data.
    pub fn degree_range(&self) -> (i32, i32) {
        (self.complex.lo, self.complex.hi)
    }

    pub fn tau(&self) -> f64 {
        self.complex.tau
    }

    pub fn layout(&self, k: i32) -> Option<&Layout> {
        self.layouts.get(&k)
    }

    pub fn eigenvalues(&self, k: i32) -> &[f64] {
        self.complex.get(k).map_or(&[], |d| &d.eigenvalues)
    }

    pub fn harmonic_dim(&self, k: i32) -> usize {
        self.complex.get(k).map_or(0, |d| d.harmonic_basis_on.ncols())
    }

    pub fn harmonic_dims(&self) -> BTreeMap<i32, usize> {
        (self.complex.lo..=self.complex.hi).map(|k| (k, self.harmonic_dim(k))).collect()
    }

    /// Orthonormal basis of 𝐇L^k.
    pub fn harmonic_basis(&self, k: i32) -> Vec<AlgebraElement> {
        let (Some(d), Some(layout)) = (self.complex.get(k), self.layouts.get(&k)) else { return Vec::new() };
        (0..d.harmonic_basis_on.ncols())
            .map(|i| layout.from_vector(&(&d.l_adj_inv * d.harmonic_basis_on.column(i))))
            .collect()
    }

    fn apply(&self, x: &AlgebraElement, shift: i32, pick: impl Fn(&DegreeHodge) -> &CMatrix) -> AlgebraElement {
        let mut out = x.zero_like();
        for k in x.degrees() {
            let (Some(src), Some(tgt)) = (self.layouts.get(&k), self.layouts.get(&(k + shift))) else {
                continue;
            };
            let v = src.to_vector(x);
            if let Some(w) = self.complex.apply(k, shift, &v, &pick) {
                out += &tgt.from_vector(&w);
            }
        }
        out
    }

    pub fn harmonic_project(&self, x: &AlgebraElement) -> AlgebraElement {
        self.apply(x, 0, |d| &d.harmonic_on)
    }

    pub fn green(&self, x: &AlgebraElement) -> AlgebraElement {
        self.apply(x, 0, |d| &d.green_on)
    }

    pub fn laplacian(&self, x: &AlgebraElement) -> AlgebraElement {
        self.apply(x, 0, |d| &d.lap_on)
    }

    pub fn codifferential(&self, x: &AlgebraElement) -> AlgebraElement {
        self.apply(x, -1, |d| &d.dstar_on)
    }

    pub fn differential(&self, x: &AlgebraElement) -> AlgebraElement {
        self.dgla.differential(x).expect("element of this model's DGLA")
    }

    /// Pairing (x, y)_h of the homogeneous degree-k parts.
    pub fn inner(&self, k: i32, x: &AlgebraElement, y: &AlgebraElement) -> C64 {
        let (Some(layout), Some(d)) = (self.layouts.get(&k), self.complex.get(k)) else { return c64(0.0, 0.0) };
        let (a, b) = (layout.to_vector(x), layout.to_vector(y));
        (a.adjoint() * &d.gram * b)[(0, 0)]
    }

    pub fn decompose(&self, x: &AlgebraElement) -> Decomposition {
        let gx = self.green(x);
        Decomposition {
            exact: self.differential(&self.codifferential(&gx)),
            coexact: self.codifferential(&self.differential(&gx)),
            harmonic: self.harmonic_project(x),
        }
    }

    /// Distance of x from its harmonic projection.
    pub fn harmonic_distance(&self, x: &AlgebraElement) -> f64 {
        (x - &self.harmonic_project(x)).norm()
    }

    pub fn identity_residuals(&self) -> IdentityResiduals {
        self.complex.residuals()
    }

    /// d, d*, □, H, G of degree k in the original coordinates of the degree-k layout.
    pub fn operator_matrices(&self, k: i32) -> Option<OperatorMatrices> {
        let s = self.complex.get(k)?;
        let next = self.complex.get(k + 1);
        let prev = self.complex.get(k - 1);
        Some(OperatorMatrices {
            d: next.map(|t| s.to_original(&s.d_on, t)),
            dstar: prev.map(|p| s.to_original(&s.dstar_on, p)),
            laplacian: s.to_original(&s.lap_on, s),
            harmonic: s.to_original(&s.harmonic_on, s),
            green: s.to_original(&s.green_on, s),
            gram: s.gram.clone(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrices {
    pub d: Option<CMatrix>,
    pub dstar: Option<CMatrix>,
    pub laplacian: CMatrix,
    pub harmonic: CMatrix,
    pub green: CMatrix,
    pub gram: CMatrix,
}

/// Harmonic projector of the base algebra (Ω, d_Ω) with its own inner product.
#[derive(Clone, Debug)]
pub struct BaseHodge {
    base: Arc<BaseAlgebra>,
    by_degree: BTreeMap<i32, Vec<usize>>,
    complex: ComplexHodge,
}

impl BaseHodge {
    pub fn new(base: Arc<BaseAlgebra>, metric: &MetricData) -> Result<Self> {
        let g = metric.base_matrix(&base);
        let mut by_degree: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for r in 0..base.dim() {
            by_degree.entry(base.degree(r)).or_default().push(r);
        }
        let lo = 0;
        let hi = base.max_degree();
        for k in lo..=hi {
            by_degree.entry(k).or_default();
        }
        let grams = by_degree
            .iter()
            .map(|(&k, idx)| (k, CMatrix::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])])))
            .collect();
        let mut diffs = BTreeMap::new();
        for k in lo..hi {
            let (src, tgt) = (&by_degree[&k], &by_degree[&(k + 1)]);
            let mut m = CMatrix::zeros(tgt.len(), src.len());
            for (j, &r) in src.iter().enumerate() {
                for &(u, c) in base.differential_of(r) {
                    let i = tgt.iter().position(|&t| t == u).expect("differential raises degree by one");
                    m[(i, j)] += c;
                }
            }
            diffs.insert(k, m);
        }
        let complex = ComplexHodge::build(lo, hi, &grams, &diffs)?;
        Ok(Self { base, by_degree, complex })
    }

    pub fn project(&self, x: &BaseElement) -> BaseElement {
        let mut out = BaseElement::zeros(self.base.dim());
        for (&k, idx) in &self.by_degree {
            if idx.is_empty() {
                continue;
            }
            let v = DVector::from_iterator(idx.len(), idx.iter().map(|&r| x[r]));
            let w = self.complex.apply(k, 0, &v, |d| &d.harmonic_on).unwrap();
            for (i, &r) in idx.iter().enumerate() {
                out[r] = w[i];
            }
        }
        out
    }

    pub fn harmonic_dims(&self) -> BTreeMap<i32, usize> {
        self.complex.degrees.iter().map(|(&k, d)| (k, d.harmonic_basis_on.ncols())).collect()
    }
}
