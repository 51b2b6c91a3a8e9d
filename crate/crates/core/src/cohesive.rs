//! Flat superconnections (cohesive models), morphisms and their Hom
//! differential, cone and shift, the quasi-isomorphism test on base-point
//! components, the endomorphism DGLA, and homotopy data.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::base::{BaseAlgebra, FamilyAlgebra};
use crate::element::{compose, same_base, same_space, sign, supercommutator, AlgebraElement, Layout};
use crate::error::{Error, Result};
use crate::graded::{CMatrix, GradedSpace};
use crate::linalg;
use crate::tol;

/// Curvature d_Ω(A) + A∘A.
pub fn curvature(connection: &AlgebraElement) -> Result<AlgebraElement> {
    Ok(connection.base_differential() + compose(connection, connection)?)
}

/// A graded space E with a flat connection A of total degree 1 over a base
/// algebra. The total operator on Ω ⊗ E is d_Ω + A.
#[derive(Clone, Debug)]
pub struct CohesiveModel {
    base: Arc<BaseAlgebra>,
    space: Arc<GradedSpace>,
    connection: AlgebraElement,
    curvature_norm: f64,
}

pub fn make_model(
    base: Arc<BaseAlgebra>,
    space: Arc<GradedSpace>,
    connection: AlgebraElement,
) -> Result<CohesiveModel> {
    if !same_base(&base, connection.base()) {
        return Err(Error::BaseMismatch);
    }
    if !same_space(connection.source(), &space) || !same_space(connection.target(), &space) {
        return Err(Error::ShapeMismatch("connection must be an endomorphism of the space".into()));
    }
    if !connection.is_homogeneous(1) {
        return Err(Error::NotHomogeneous { expected: 1 });
    }
    let curvature_norm = curvature(&connection)?.norm();
    if curvature_norm > tol::FLATNESS {
        return Err(Error::FlatnessViolation { residual: curvature_norm });
    }
    Ok(CohesiveModel { base, space, connection, curvature_norm })
}

impl CohesiveModel {
    /// The model with zero connection.
    pub fn trivial(base: Arc<BaseAlgebra>, space: Arc<GradedSpace>) -> Self {
        let connection = AlgebraElement::endo_zero(base.clone(), space.clone());
        Self { base, space, connection, curvature_norm: 0.0 }
    }

    pub fn base(&self) -> &Arc<BaseAlgebra> {
        &self.base
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn connection(&self) -> &AlgebraElement {
        &self.connection
    }

    pub fn curvature_norm(&self) -> f64 {
        self.curvature_norm
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement::identity(self.base.clone(), self.space.clone())
    }

    pub fn zero_endo(&self) -> AlgebraElement {
        AlgebraElement::endo_zero(self.base.clone(), self.space.clone())
    }

    /// The base-point differential v₀: the End-degree-1 coefficient of the unit.
    pub fn fiber_differential(&self) -> CMatrix {
        self.connection
            .coefficient(self.base.unit(), 1)
            .map(|m| m.into_matrix())
            .unwrap_or_else(|| CMatrix::zeros(self.space.total_dim(), self.space.total_dim()))
    }

    pub fn same_as(&self, other: &CohesiveModel) -> bool {
        same_base(&self.base, &other.base)
            && same_space(&self.space, &other.space)
            && (&self.connection - &other.connection).is_zero()
    }
}

/// dφ = d_Ω(φ) + A_F φ − (−1)^k φ A_E, applied degree by degree.
pub fn hom_differential_element(
    target_connection: &AlgebraElement,
    source_connection: &AlgebraElement,
    x: &AlgebraElement,
) -> Result<AlgebraElement> {
    let mut out = x.base_differential();
    for k in x.degrees() {
        let xk = x.degree_part(k);
        out += &compose(target_connection, &xk)?;
        let right = compose(&xk, source_connection)?;
        if sign(k) > 0.0 {
            out -= &right;
        } else {
            out += &right;
        }
    }
    Ok(out)
}

/// A homogeneous element of Ω ⊗ Hom(E, F) between two models.
#[derive(Clone, Debug)]
pub struct Morphism {
    source: Arc<CohesiveModel>,
    target: Arc<CohesiveModel>,
    degree: i32,
    body: AlgebraElement,
}

impl Morphism {
    pub fn new(
        source: Arc<CohesiveModel>,
        target: Arc<CohesiveModel>,
        degree: i32,
        body: AlgebraElement,
    ) -> Result<Self> {
        if !same_base(&source.base, &target.base) || !same_base(&source.base, body.base()) {
            return Err(Error::BaseMismatch);
        }
        if !same_space(body.source(), &source.space) || !same_space(body.target(), &target.space) {
            return Err(Error::ShapeMismatch("morphism body does not map source to target".into()));
        }
        if !body.is_homogeneous(degree) {
            return Err(Error::NotHomogeneous { expected: degree });
        }
        Ok(Self { source, target, degree, body })
    }

    pub fn identity(model: &Arc<CohesiveModel>) -> Self {
        Self { source: model.clone(), target: model.clone(), degree: 0, body: model.identity() }
    }

    pub fn zero(source: Arc<CohesiveModel>, target: Arc<CohesiveModel>, degree: i32) -> Self {
        let body = AlgebraElement::zero(source.base.clone(), source.space.clone(), target.space.clone());
        Self { source, target, degree, body }
    }

    pub fn source(&self) -> &Arc<CohesiveModel> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CohesiveModel> {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn body(&self) -> &AlgebraElement {
        &self.body
    }

    /// `self ∘ f`.
    pub fn compose(&self, f: &Morphism) -> Result<Morphism> {
        if !f.target.same_as(&self.source) {
            return Err(Error::ChainMismatch("target model of f differs from source of g".into()));
        }
        Morphism::new(f.source.clone(), self.target.clone(), self.degree + f.degree, compose(&self.body, &f.body)?)
    }

    pub fn differential(&self) -> Morphism {
        hom_differential(self)
    }

    /// ‖dφ‖.
    pub fn closedness(&self) -> f64 {
        self.differential().body.norm()
    }

    pub fn plus(&self, other: &Morphism) -> Result<Morphism> {
        if other.degree != self.degree {
            return Err(Error::NotHomogeneous { expected: self.degree });
        }
        Morphism::new(self.source.clone(), self.target.clone(), self.degree, self.body.checked_add(&other.body)?)
    }
}

pub fn hom_differential(phi: &Morphism) -> Morphism {
    let body = hom_differential_element(&phi.target.connection, &phi.source.connection, &phi.body)
        .expect("morphism shapes were validated at construction");
    Morphism { source: phi.source.clone(), target: phi.target.clone(), degree: phi.degree + 1, body }
}

/// Negates terms of odd End-degree. Under the Koszul identification of
/// Ω ⊗ E[1] with the shifted module this is the connection of E[1].
fn parity_twist(x: &AlgebraElement) -> AlgebraElement {
    x.map_matrices(|_, k, m| if k % 2 == 0 { m.clone() } else { -m })
}

/// E[1] with E[1]^n = E^{n+1}.
pub fn shift(model: &CohesiveModel) -> CohesiveModel {
    let space = Arc::new(model.space.shift(1));
    let ids: Vec<Option<usize>> = (0..space.total_dim()).map(Some).collect();
    let connection = parity_twist(&model.connection).reindex(space.clone(), space.clone(), &ids, &ids, 0);
    make_model(model.base.clone(), space, connection).expect("the shift of a flat connection is flat")
}

/// Cone of a closed degree-0 morphism φ: E → F, on C^n = E^{n+1} ⊕ F^n, with
/// connection [[A_{E[1]}, 0], [φ, A_F]].
pub fn cone(phi: &Morphism) -> Result<CohesiveModel> {
    if phi.degree != 0 {
        return Err(Error::NotHomogeneous { expected: 0 });
    }
    let closed = phi.closedness();
    if closed > tol::CLOSED {
        return Err(Error::NotClosed { residual: closed });
    }
    let e = &phi.source;
    let f = &phi.target;
    let e1 = e.space.shift(1);
    let (sum, pe, pf) = GradedSpace::direct_sum(&e1, &f.space);
    let sum = Arc::new(sum);
    let pe: Vec<Option<usize>> = pe.into_iter().map(Some).collect();
    let pf: Vec<Option<usize>> = pf.into_iter().map(Some).collect();
    let mut connection = parity_twist(&e.connection).reindex(sum.clone(), sum.clone(), &pe, &pe, 0);
    connection += &f.connection.reindex(sum.clone(), sum.clone(), &pf, &pf, 0);
    connection += &phi.body.reindex(sum.clone(), sum.clone(), &pe, &pf, 1);
    make_model(e.base.clone(), sum, connection)
}

fn block(m: &CMatrix, source: &GradedSpace, target: &GradedSpace, i: i32, j: i32) -> CMatrix {
    match (source.range(i), target.range(j)) {
        (Some(c), Some(r)) => m.view((r.start, c.start), (r.len(), c.len())).into_owned(),
        _ => CMatrix::zeros(target.dim(j), source.dim(i)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeCertificate {
    pub degree: i32,
    pub source_cohomology: usize,
    pub target_cohomology: usize,
    pub induced_rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceCertificate {
    pub degrees: Vec<DegreeCertificate>,
    pub is_equivalence: bool,
}

/// Tests whether the base-point component φ₀: (E, v₀) → (F, u₀) is a
/// quasi-isomorphism of finite complexes.
pub fn is_homotopy_equivalence(phi: &Morphism) -> Result<EquivalenceCertificate> {
    if phi.degree != 0 {
        return Err(Error::NotHomogeneous { expected: 0 });
    }
    let closed = phi.closedness();
    if closed > tol::CLOSED {
        return Err(Error::NotClosed { residual: closed });
    }
    let (e, f) = (&phi.source.space, &phi.target.space);
    let v0 = phi.source.fiber_differential();
    let u0 = phi.target.fiber_differential();
    let unit = phi.source.base.unit();
    let phi0 = phi
        .body
        .coefficient(unit, 0)
        .map(|m| m.into_matrix())
        .unwrap_or_else(|| CMatrix::zeros(f.total_dim(), e.total_dim()));
    let mut degrees: Vec<i32> = e.degrees().chain(f.degrees()).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let rank = linalg::default_rank;
    let mut certs = Vec::new();
    for d in degrees {
        let de = block(&v0, e, e, d, d + 1);
        let de_prev = block(&v0, e, e, d - 1, d);
        let df = block(&u0, f, f, d, d + 1);
        let df_prev = block(&u0, f, f, d - 1, d);
        let z_e = linalg::kernel(&de, tol::RANK_RELATIVE);
        let h_e = z_e.ncols() - rank(&de_prev);
        let h_f = f.dim(d) - rank(&df) - rank(&df_prev);
        let image = &block(&phi0, e, f, d, d) * &z_e;
        let b_f = df_prev;
        let mut joined = CMatrix::zeros(f.dim(d), image.ncols() + b_f.ncols());
        joined.view_mut((0, 0), (f.dim(d), image.ncols())).copy_from(&image);
        joined.view_mut((0, image.ncols()), (f.dim(d), b_f.ncols())).copy_from(&b_f);
        let induced = rank(&joined) - rank(&b_f);
        certs.push(DegreeCertificate { degree: d, source_cohomology: h_e, target_cohomology: h_f, induced_rank: induced });
    }
    let is_equivalence =
        certs.iter().all(|c| c.source_cohomology == c.target_cohomology && c.induced_rank == c.source_cohomology);
    Ok(EquivalenceCertificate { degrees: certs, is_equivalence })
}

/// The DGLA Ω ⊗ End•(E) with d(x) = d_Ω x + [A, x].
#[derive(Clone, Debug)]
pub struct Dgla {
    model: Arc<CohesiveModel>,
}

pub fn dgla_of(model: &Arc<CohesiveModel>) -> Dgla {
    Dgla { model: model.clone() }
}

impl Dgla {
    pub fn model(&self) -> &Arc<CohesiveModel> {
        &self.model
    }

    pub fn differential(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        Ok(x.base_differential() + supercommutator(&self.model.connection, x)?)
    }

    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        supercommutator(x, y)
    }

    /// Smallest and largest total degree with a nonzero piece.
    pub fn degree_range(&self) -> (i32, i32) {
        let e = &self.model.space;
        match (e.min_degree(), e.max_degree()) {
            (Some(lo), Some(hi)) => (lo - hi, hi - lo + self.model.base.max_degree()),
            _ => (0, 0),
        }
    }

    pub fn layout(&self, k: i32) -> Layout {
        Layout::endo(self.model.base.clone(), self.model.space.clone(), k)
    }

    /// Matrix of d: L^k → L^{k+1} in layout coordinates.
    pub fn differential_matrix(&self, k: i32) -> CMatrix {
        let (src, tgt) = (self.layout(k), self.layout(k + 1));
        let mut m = CMatrix::zeros(tgt.dim(), src.dim());
        for i in 0..src.dim() {
            let dx = self.differential(&src.basis_element(i)).expect("same model");
            m.set_column(i, &tgt.to_vector(&dx));
        }
        m
    }

    /// dim H^k(L) = dim L^k − rank d_k − rank d_{k−1}, by numerical rank.
    pub fn cohomology_dims(&self) -> BTreeMap<i32, usize> {
        let (lo, hi) = self.degree_range();
        let ranks: BTreeMap<i32, usize> =
            (lo - 1..=hi).map(|k| (k, linalg::default_rank(&self.differential_matrix(k)))).collect();
        (lo..=hi).map(|k| (k, self.layout(k).dim() - ranks[&k] - ranks[&(k - 1)])).collect()
    }
}

/// φ: F → E and ψ: E → F closed of degree 0 with ψφ − id_F = d(h) for
/// h: F → F of degree −1. No side conditions are imposed.
#[derive(Clone, Debug)]
pub struct HomotopyData {
    phi: Morphism,
    psi: Morphism,
    h: Morphism,
    residual: f64,
}

impl HomotopyData {
    pub fn new(phi: Morphism, psi: Morphism, h: Morphism) -> Result<Self> {
        let big = phi.source.clone();
        let small = phi.target.clone();
        if !psi.source.same_as(&small) || !psi.target.same_as(&big) {
            return Err(Error::InvalidHomotopyData("ψ must map E to F".into()));
        }
        if !h.source.same_as(&big) || !h.target.same_as(&big) {
            return Err(Error::InvalidHomotopyData("h must be an endomorphism of F".into()));
        }
        if phi.degree != 0 || psi.degree != 0 || h.degree != -1 {
            return Err(Error::InvalidHomotopyData("degrees must be φ: 0, ψ: 0, h: −1".into()));
        }
        for (name, m) in [("φ", &phi), ("ψ", &psi)] {
            let c = m.closedness();
            if c > tol::HOMOTOPY {
                return Err(Error::InvalidHomotopyData(format!("{name} is not closed: |d{name}| = {c:.3e}")));
            }
        }
        let lhs = compose(&psi.body, &phi.body)? - big.identity();
        let residual = (&lhs - &h.differential().body).norm();
        if residual > tol::HOMOTOPY {
            return Err(Error::InvalidHomotopyData(format!("|ψφ − id − d(h)| = {residual:.3e}")));
        }
        Ok(Self { phi, psi, h, residual })
    }

    /// (id, id, 0) on a single model.
    pub fn identity(model: &Arc<CohesiveModel>) -> Self {
        let id = Morphism::identity(model);
        let h = Morphism::zero(model.clone(), model.clone(), -1);
        Self { phi: id.clone(), psi: id, h, residual: 0.0 }
    }

    pub fn phi(&self) -> &Morphism {
        &self.phi
    }

    pub fn psi(&self) -> &Morphism {
        &self.psi
    }

    pub fn h(&self) -> &Morphism {
        &self.h
    }

    /// The model F that φ starts from.
    pub fn big(&self) -> &Arc<CohesiveModel> {
        &self.phi.source
    }

    /// The model E that φ lands in.
    pub fn small(&self) -> &Arc<CohesiveModel> {
        &self.phi.target
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Evaluation of a family element at the origin of the parameter disk.
pub fn restrict_to_origin(family: &FamilyAlgebra, x: &AlgebraElement) -> AlgebraElement {
    x.map_base(family.omega().clone(), |idx| family.at_origin(idx))
}

/// Fiber at the origin of a model over Ω ⊗ P.
pub fn restrict_model_to_origin(family: &FamilyAlgebra, model: &CohesiveModel) -> Result<CohesiveModel> {
    make_model(family.omega().clone(), model.space.clone(), restrict_to_origin(family, &model.connection))
}
