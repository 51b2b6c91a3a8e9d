//! Model builders shared by tests, the acceptance suite and the CLI: the
//! gl₂ model over Λ(θ₁, θ₂), direct sums of lines and acyclic pairs,
//! random gauge conjugates, unobstructed models and random homotopy data.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::base::{BaseAlgebra, FamilyAlgebra, ParameterAlgebra};
use crate::cohesive::{make_model, CohesiveModel, HomotopyData, Morphism};
use crate::deform::{gauge_act, solve_kuranishi};
use crate::element::{compose, AlgebraElement, Layout};
use crate::error::Result;
use crate::graded::{c64, CMatrix, GradedMap, GradedSpace, C64};
use crate::hodge::{build_hodge, HodgePackage, MetricData};
use crate::series::{MultiIndex, Series};
use crate::transfer::FamilyConnection;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut SampleRng) -> C64 {
    c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut SampleRng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng) * scale)
}

/// A random homogeneous element of total degree k in Ω ⊗ Hom(source, target).
pub fn random_element(
    rng: &mut SampleRng,
    base: &Arc<BaseAlgebra>,
    source: &Arc<GradedSpace>,
    target: &Arc<GradedSpace>,
    degree: i32,
    scale: f64,
) -> AlgebraElement {
    let layout = Layout::new(base.clone(), source.clone(), target.clone(), degree);
    let v = nalgebra::DVector::from_fn(layout.dim(), |_, _| random_complex(rng) * scale);
    layout.from_vector(&v)
}

pub fn random_endo(rng: &mut SampleRng, model: &CohesiveModel, degree: i32, scale: f64) -> AlgebraElement {
    random_element(rng, model.base(), model.space(), model.space(), degree, scale)
}

fn term(base: &Arc<BaseAlgebra>, src: &Arc<GradedSpace>, tgt: &Arc<GradedSpace>, r: usize, k: i32, blocks: Vec<(i32, CMatrix)>) -> AlgebraElement {
    let map = GradedMap::from_blocks(src.clone(), tgt.clone(), k, blocks).expect("block shapes");
    AlgebraElement::from_map(base.clone(), r, &map).expect("shapes")
}

/// E = ℂ² in degree 0 over Λ(θ₁, θ₂) with zero connection.
pub fn gl2_model() -> Arc<CohesiveModel> {
    let base = Arc::new(BaseAlgebra::exterior(2).expect("two generators"));
    let e = Arc::new(GradedSpace::new([(0, 2)]).unwrap());
    Arc::new(CohesiveModel::trivial(base, e))
}

/// θ₁ ⊗ a + θ₂ ⊗ b on a model whose space is concentrated in degree 0.
pub fn gl2_seed(model: &CohesiveModel, a: &CMatrix, b: &CMatrix) -> AlgebraElement {
    let base = model.base();
    let e = model.space();
    let t1 = base.index_of("th1").expect("θ₁");
    let t2 = base.index_of("th2").expect("θ₂");
    &term(base, e, e, t1, 0, vec![(0, a.clone())]) + &term(base, e, e, t2, 0, vec![(0, b.clone())])
}

fn real2(z: [f64; 4]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &z.map(|v| c64(v, 0.0)))
}

/// Elementary matrices E₁₂, E₂₁ with [a, b] = diag(1, −1).
pub fn noncommuting_pair() -> (CMatrix, CMatrix) {
    (real2([0.0, 1.0, 0.0, 0.0]), real2([0.0, 0.0, 1.0, 0.0]))
}

/// Two diagonal matrices.
pub fn commuting_pair() -> (CMatrix, CMatrix) {
    (real2([1.0, 0.0, 0.0, -1.0]), real2([2.0, 0.0, 0.0, 0.5]))
}

/// Building blocks of seed models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Summand {
    /// ℂ in one degree.
    Line(i32),
    /// ℂ → ℂ in degrees d, d+1 with the given nonzero differential.
    Pair(i32, C64),
}

impl Summand {
    fn degrees(&self) -> Vec<i32> {
        match *self {
            Summand::Line(d) => vec![d],
            Summand::Pair(d, _) => vec![d, d + 1],
        }
    }
}

/// Space and global indices of each summand's basis vectors.
fn layout_summands(summands: &[Summand]) -> (Arc<GradedSpace>, Vec<Vec<usize>>) {
    let mut dims = std::collections::BTreeMap::new();
    for s in summands {
        for d in s.degrees() {
            *dims.entry(d).or_insert(0usize) += 1;
        }
    }
    let space = GradedSpace::new(dims.iter().map(|(&d, &n)| (d, n))).unwrap();
    let mut used = std::collections::BTreeMap::new();
    let positions = summands
        .iter()
        .map(|s| {
            s.degrees()
                .into_iter()
                .map(|d| {
                    let c = used.entry(d).or_insert(0usize);
                    let idx = space.range(d).unwrap().start + *c;
                    *c += 1;
                    idx
                })
                .collect()
        })
        .collect();
    (Arc::new(space), positions)
}

/// Block-diagonal flat connection v₀ + Σ_j θ_j ⊗ λ_j with λ_j a scalar on
/// each summand; flat because the scalars commute with v₀ and with each other.
pub fn seed_model(base: &Arc<BaseAlgebra>, summands: &[Summand], theta_scalars: &[Vec<C64>]) -> CohesiveModel {
    let (space, positions) = layout_summands(summands);
    let n = space.total_dim();
    let unit = base.unit();
    let mut v0 = CMatrix::zeros(n, n);
    for (s, pos) in summands.iter().zip(&positions) {
        if let Summand::Pair(_, c) = *s {
            v0[(pos[1], pos[0])] = c;
        }
    }
    let mut conn = AlgebraElement::endo_zero(base.clone(), space.clone());
    conn += &AlgebraElement::from_map(base.clone(), unit, &GradedMap::from_matrix(space.clone(), space.clone(), 1, v0).unwrap()).unwrap();
    for (j, scalars) in theta_scalars.iter().enumerate() {
        let Some(r) = base.index_of(&format!("th{}", j + 1)) else { continue };
        let mut m = CMatrix::zeros(n, n);
        for (pos, &lambda) in positions.iter().zip(scalars) {
            for &i in pos {
                m[(i, i)] = lambda;
            }
        }
        let map = GradedMap::from_matrix(space.clone(), space.clone(), 0, m).unwrap();
        conn += &AlgebraElement::from_map(base.clone(), r, &map).unwrap();
    }
    make_model(base.clone(), space, conn).expect("seed connections are flat")
}

fn generators(base: &BaseAlgebra) -> usize {
    (1..=8).take_while(|j| base.index_of(&format!("th{j}")).is_some()).count()
}

fn random_theta_scalars(rng: &mut SampleRng, base: &BaseAlgebra, count: usize) -> Vec<Vec<C64>> {
    (0..generators(base)).map(|_| (0..count).map(|_| random_complex(rng)).collect()).collect()
}

/// Invertible degree-0 g = g₀ + (higher form degree), with g₀ = id + small
/// random blocks.
pub fn random_gauge(rng: &mut SampleRng, base: &Arc<BaseAlgebra>, space: &Arc<GradedSpace>, scale: f64) -> AlgebraElement {
    let mut g = AlgebraElement::identity(base.clone(), space.clone());
    g += &random_element(rng, base, space, space, 0, scale);
    g
}

/// Inverse of a degree-0 element whose unit coefficient g₀ is invertible:
/// g⁻¹ = Σ_k (−N)^k g₀⁻¹ with N = g₀⁻¹(g − g₀) nilpotent.
pub fn invert(g: &AlgebraElement) -> Option<AlgebraElement> {
    let base = g.base().clone();
    let space = g.source().clone();
    let g0 = g.coefficient(base.unit(), 0).map(|m| m.into_matrix())?;
    let g0_inv = crate::linalg::inverse(&g0)?;
    let g0_inv_el = AlgebraElement::from_map(
        base.clone(),
        base.unit(),
        &GradedMap::from_matrix(space.clone(), space.clone(), 0, g0_inv).ok()?,
    )
    .ok()?;
    let g0_el = AlgebraElement::from_map(base.clone(), base.unit(), &GradedMap::from_matrix(space.clone(), space.clone(), 0, g0).ok()?).ok()?;
    let n = compose(&g0_inv_el, &(g - &g0_el)).ok()?;
    let id = AlgebraElement::identity(base.clone(), space);
    let mut sum = id.clone();
    let mut power = id;
    for _ in 0..=base.max_degree() {
        power = -compose(&n, &power).ok()?;
        sum += &power;
    }
    compose(&sum, &g0_inv_el).ok()
}

/// g(d + A)g⁻¹ − d on a model over a base with zero differential.
pub fn conjugate_model(model: &CohesiveModel, g: &AlgebraElement) -> Result<CohesiveModel> {
    let g_inv = invert(g).expect("invertible gauge");
    let a = compose(g, &compose(model.connection(), &g_inv)?)? - compose(&g.base_differential(), &g_inv)?;
    make_model(model.base().clone(), model.space().clone(), a)
}

fn random_base(rng: &mut SampleRng) -> Arc<BaseAlgebra> {
    match rng.gen_range(0..4) {
        0 => Arc::new(BaseAlgebra::point()),
        g => Arc::new(BaseAlgebra::exterior(g).unwrap()),
    }
}

fn random_summands(rng: &mut SampleRng, max_dim: usize) -> Vec<Summand> {
    let target = rng.gen_range(2..=max_dim);
    let mut out = Vec::new();
    let mut dim = 0;
    while dim < target {
        if target - dim >= 2 && rng.gen_bool(0.5) {
            let c = random_complex(rng) + c64(1.5, 0.0);
            out.push(Summand::Pair(rng.gen_range(-1..=0), c));
            dim += 2;
        } else {
            out.push(Summand::Line(rng.gen_range(-1..=1)));
            dim += 1;
        }
    }
    out
}

/// A random flat model: a seed of lines and acyclic pairs over a point or
/// Λ(θ₁..θ_g), g ≤ 3, total dimension ≤ 6, conjugated by a random gauge.
pub fn random_flat_model(rng: &mut SampleRng) -> Arc<CohesiveModel> {
    let base = random_base(rng);
    let summands = random_summands(rng, 6);
    let scalars = random_theta_scalars(rng, &base, summands.len());
    let seed = seed_model(&base, &summands, &scalars);
    let g = random_gauge(rng, &base, seed.space(), 0.4);
    Arc::new(conjugate_model(&seed, &g).expect("conjugates of flat connections are flat"))
}

/// A random model with 𝐇L² = 0: either a complex over the point with
/// cohomology in degrees 0 and 1, or a model over Λ(θ) with cohomology in
/// degree 0 only, plus acyclic pairs, conjugated by a random gauge.
pub fn random_unobstructed_model(rng: &mut SampleRng) -> (Arc<CohesiveModel>, HodgePackage) {
    loop {
        let (base, mut summands) = if rng.gen_bool(0.5) {
            let base = Arc::new(BaseAlgebra::point());
            let mut s = vec![Summand::Line(0); rng.gen_range(1..=2)];
            s.extend(vec![Summand::Line(1); rng.gen_range(1..=2)]);
            (base, s)
        } else {
            let base = Arc::new(BaseAlgebra::exterior(1).unwrap());
            (base, vec![Summand::Line(0); rng.gen_range(1..=3)])
        };
        let dim: usize = summands.iter().map(|s| s.degrees().len()).sum();
        if dim + 2 <= 6 && rng.gen_bool(0.7) {
            summands.push(Summand::Pair(rng.gen_range(-1..=0), random_complex(rng) + c64(1.5, 0.0)));
        }
        let scalars = random_theta_scalars(rng, &base, summands.len());
        let seed = seed_model(&base, &summands, &scalars);
        let g = random_gauge(rng, &base, seed.space(), 0.4);
        let model = Arc::new(conjugate_model(&seed, &g).expect("flat"));
        let hp = build_hodge(&model, &MetricData::standard()).expect("standard metric");
        if hp.harmonic_dim(2) == 0 && hp.harmonic_dim(1) > 0 {
            return (model, hp);
        }
    }
}

/// Σ_i t_i β_i with random harmonic β_i, plus random harmonic coefficients
/// at |I| ≥ 2 when `higher` is set.
pub fn random_harmonic_seed(rng: &mut SampleRng, hp: &HodgePackage, vars: usize, order: u32, higher: bool) -> Series {
    let basis = hp.harmonic_basis(1);
    let mut s = Series::new(vars, order, hp.model().zero_endo());
    let draw = |rng: &mut SampleRng, scale: f64| {
        let mut x = hp.model().zero_endo();
        for b in &basis {
            x += &b.scaled(random_complex(rng) * scale);
        }
        x
    };
    for i in MultiIndex::all_up_to(vars, order) {
        if i.total() == 1 {
            s.set(i, draw(rng, 1.0)).unwrap();
        } else if higher && rng.gen_bool(0.3) {
            s.set(i, draw(rng, 0.3)).unwrap();
        }
    }
    s
}

/// Random degree-0 gauge series with coefficients of the given scale.
pub fn random_gauge_series(rng: &mut SampleRng, model: &CohesiveModel, vars: usize, order: u32, scale: f64) -> Series {
    let mut u = Series::new(vars, order, model.zero_endo());
    for i in MultiIndex::all_up_to(vars, order) {
        let s = scale / (i.total() as f64);
        u.set(i, random_endo(rng, model, 0, s)).unwrap();
    }
    u
}

/// Direct sum of two models with inclusions and projections.
pub struct DirectSum {
    pub model: Arc<CohesiveModel>,
    pub include_a: AlgebraElement,
    pub include_b: AlgebraElement,
    pub project_a: AlgebraElement,
    pub project_b: AlgebraElement,
}

pub fn direct_sum(a: &CohesiveModel, b: &CohesiveModel) -> Result<DirectSum> {
    let base = a.base().clone();
    let (sum, pa, pb) = GradedSpace::direct_sum(a.space(), b.space());
    let sum = Arc::new(sum);
    let some = |v: &[usize]| v.iter().map(|&i| Some(i)).collect::<Vec<_>>();
    let ids = |n: usize| (0..n).map(Some).collect::<Vec<_>>();
    let (pa_s, pb_s) = (some(&pa), some(&pb));
    let conn = a.connection().reindex(sum.clone(), sum.clone(), &pa_s, &pa_s, 0)
        + b.connection().reindex(sum.clone(), sum.clone(), &pb_s, &pb_s, 0);
    let model = Arc::new(make_model(base.clone(), sum.clone(), conn)?);
    let id_a = a.identity();
    let id_b = b.identity();
    Ok(DirectSum {
        include_a: id_a.reindex(a.space().clone(), sum.clone(), &ids(pa.len()), &pa_s, 0),
        include_b: id_b.reindex(b.space().clone(), sum.clone(), &ids(pb.len()), &pb_s, 0),
        project_a: id_a.reindex(sum.clone(), a.space().clone(), &pa_s, &ids(pa.len()), 0),
        project_b: id_b.reindex(sum.clone(), b.space().clone(), &pb_s, &ids(pb.len()), 0),
        model,
    })
}

/// Contracting homotopy s of a seed built only from acyclic pairs:
/// s = 1/c on each pair's top degree, so that d(s) = id.
fn pair_contraction(base: &Arc<BaseAlgebra>, summands: &[Summand]) -> AlgebraElement {
    let (space, positions) = layout_summands(summands);
    let n = space.total_dim();
    let mut m = CMatrix::zeros(n, n);
    for (s, pos) in summands.iter().zip(&positions) {
        if let Summand::Pair(_, c) = *s {
            m[(pos[0], pos[1])] = c.inv();
        }
    }
    let map = GradedMap::from_matrix(space.clone(), space, -1, m).unwrap();
    AlgebraElement::from_map(base.clone(), base.unit(), &map).unwrap()
}

/// The E ⊕ (ℂ → ℂ) example over the point: E has zero differential with
/// dims (a, b) in degrees 0, 1; the acyclic pair has v = 1 and h = −1 on it.
/// Returns the homotopy data F = E ⊕ pair → E together with η = t(p + q)
/// for p: E⁰ → pair¹ (1 × a) and q: pair⁰ → E¹ (b × 1).
pub fn sum_with_acyclic(p: &CMatrix, q: &CMatrix, order: u32) -> Result<(HomotopyData, Series)> {
    let base = Arc::new(BaseAlgebra::point());
    let (a, b) = (p.ncols(), q.nrows());
    let e_space = Arc::new(GradedSpace::new([(0, a), (1, b)]).unwrap());
    let e = Arc::new(CohesiveModel::trivial(base.clone(), e_space));
    let pair = seed_model(&base, &[Summand::Pair(0, c64(1.0, 0.0))], &[]);
    let sum = direct_sum(&e, &pair)?;
    let f = sum.model.clone();
    let h_pair = pair_contraction(&base, &[Summand::Pair(0, c64(1.0, 0.0))]).scaled_re(-1.0);
    let h = compose(&sum.include_b, &compose(&h_pair, &sum.project_b)?)?;
    let phi = Morphism::new(f.clone(), e.clone(), 0, sum.project_a.clone())?;
    let psi = Morphism::new(e.clone(), f.clone(), 0, sum.include_a.clone())?;
    let h = Morphism::new(f.clone(), f.clone(), -1, h)?;
    let data = HomotopyData::new(phi, psi, h)?;

    let pair_space = pair.space().clone();
    let p_el = term(&base, e.space(), &pair_space, 0, 1, vec![(0, p.clone())]);
    let q_el = term(&base, &pair_space, e.space(), 0, 1, vec![(0, q.clone())]);
    let eta1 = compose(&sum.include_b, &compose(&p_el, &sum.project_a)?)?
        + compose(&sum.include_a, &compose(&q_el, &sum.project_b)?)?;
    Ok((data, Series::linear(order, &[eta1])?))
}

/// Random homotopy data between F = g(E ⊕ C)g⁻¹ and E′ = kEk⁻¹ for an
/// unobstructed E and a contractible C, optionally with ψ moved by a
/// coboundary, together with a Maurer–Cartan series η on F obtained by
/// pushing a solved series on E into F and gauging it randomly.
pub fn random_homotopy_instance(rng: &mut SampleRng, vars: usize, order: u32, perturb_psi: bool) -> Result<(HomotopyData, Series)> {
    let (e, e_hp) = random_unobstructed_model(rng);
    let base = e.base().clone();
    let pairs: Vec<Summand> = (0..rng.gen_range(1..=2))
        .map(|_| Summand::Pair(rng.gen_range(-1..=0), random_complex(rng) + c64(1.5, 0.0)))
        .collect();
    let scalars = random_theta_scalars(rng, &base, pairs.len());
    let c = seed_model(&base, &pairs, &scalars);
    let s = pair_contraction(&base, &pairs);
    let sum = direct_sum(&e, &c)?;

    let g = random_gauge(rng, &base, sum.model.space(), 0.3);
    let g_inv = invert(&g).expect("invertible");
    let k = random_gauge(rng, &base, e.space(), 0.3);
    let k_inv = invert(&k).expect("invertible");
    let f = Arc::new(conjugate_model(&sum.model, &g)?);
    let e2 = Arc::new(conjugate_model(&e, &k)?);

    let phi = compose(&k, &compose(&sum.project_a, &g_inv)?)?;
    let mut psi = compose(&g, &compose(&sum.include_a, &k_inv)?)?;
    let h_sum = compose(&sum.include_b, &compose(&s.scaled_re(-1.0), &sum.project_b)?)?;
    let mut h = compose(&g, &compose(&h_sum, &g_inv)?)?;
    if perturb_psi {
        let gamma = random_element(rng, &base, e2.space(), f.space(), -1, 0.3);
        let gm = Morphism::new(e2.clone(), f.clone(), -1, gamma.clone())?;
        psi += gm.differential().body();
        h += &compose(&gamma, &phi)?;
    }
    let data = HomotopyData::new(
        Morphism::new(f.clone(), e2.clone(), 0, phi)?,
        Morphism::new(e2.clone(), f.clone(), 0, psi)?,
        Morphism::new(f.clone(), f.clone(), -1, h)?,
    )?;

    let beta = random_harmonic_seed(rng, &e_hp, vars, order, false).scaled(c64(0.5, 0.0));
    let alpha = solve_kuranishi(&e_hp, &beta)?.alpha;
    let pushed = alpha.try_map(|x| compose(&g, &compose(&sum.include_a, &compose(&compose(x, &sum.project_a)?, &g_inv)?)?))?;
    let u = random_gauge_series(rng, &f, vars, order, 0.2);
    let eta = gauge_act(&crate::cohesive::dgla_of(&f), &u, &pushed)?;
    Ok((data, eta))
}

/// Regular family A + α(t) over Ω ⊗ P for a Maurer–Cartan series α, and its
/// conjugate by a random gauge g(t, t̄) ≡ id at the origin.
pub fn conjugated_family(
    rng: &mut SampleRng,
    model: &CohesiveModel,
    alpha: &Series,
    params: Arc<ParameterAlgebra>,
    scale: f64,
) -> Result<(FamilyConnection, FamilyConnection, AlgebraElement)> {
    let family = Arc::new(FamilyAlgebra::new(model.base().clone(), params));
    let regular = FamilyConnection::from_series(family.clone(), model, alpha)?;
    let total = family.total().clone();
    let space = model.space().clone();
    let mut g = AlgebraElement::identity(total.clone(), space.clone());
    let noise = random_element(rng, &total, &space, &space, 0, scale);
    // Keep only dt̄-free components of positive weight.
    g += &noise.map_base(total.clone(), |idx| {
        let m = family.monomial(idx);
        if m.weight() > 0 && m.dtbar == 0 {
            vec![(idx, c64(1.0, 0.0))]
        } else {
            Vec::new()
        }
    });
    let conjugated = regular.conjugate(&g)?;
    Ok((regular, conjugated, g))
}
