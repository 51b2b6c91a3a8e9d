//! Homotopy transfer of Maurer–Cartan series along homotopy data, the L∞
//! pushforward terms, and normalization of families over the formal
//! parameter disk.

use std::sync::Arc;

use crate::base::{FamilyAlgebra, Monomial};
use crate::cohesive::{hom_differential_element, make_model, CohesiveModel, HomotopyData};
use crate::element::{compose, sign, supercommutator, AlgebraElement};
use crate::error::{Error, Result};
use crate::graded::{c64, GradedSpace};
use crate::series::{McSeries, MultiIndex, Series};
use crate::tol;

/// Result of transferring η on F to E.
#[derive(Clone, Debug)]
pub struct Transferred {
    /// ε = φ(id − ηh)^{-1}ηψ.
    pub epsilon: McSeries,
    /// φ(t) = φ + φ(id − ηh)^{-1}ηh, with constant term φ.
    pub phi_t: Series,
}

fn constant_compose_left(left: &AlgebraElement, s: &Series) -> Result<Series> {
    s.try_map(|x| compose(left, x))
}

fn constant_compose_right(s: &Series, right: &AlgebraElement) -> Result<Series> {
    s.try_map(|x| compose(x, right))
}

/// Q = (id − ηh)^{-1}η = η + ηhη + …, truncated at the series order.
fn perturbation_series(eta: &Series, h: &AlgebraElement) -> Result<Series> {
    let eta_h = constant_compose_right(eta, h)?;
    let mut q = eta.clone();
    for _ in 1..eta.order() {
        q = eta.plus(&eta_h.convolve(&q, compose)?)?;
    }
    Ok(q)
}

pub fn transfer_mc(eta: &McSeries, data: &HomotopyData) -> Result<Transferred> {
    let big = data.big();
    if !eta.zero_coefficient().is_endomorphism() || eta.zero_coefficient().source() != big.space() {
        return Err(Error::ModelMismatch("η must be a series on the source model of φ".into()));
    }
    eta.check_mc_shape(1)?;
    let (phi, psi, h) = (data.phi().body(), data.psi().body(), data.h().body());
    let q = perturbation_series(eta, h)?;
    let epsilon = constant_compose_right(&constant_compose_left(phi, &q)?, psi)?;
    let correction = constant_compose_right(&constant_compose_left(phi, &q)?, h)?;
    let phi_t = Series::constant(eta.vars(), eta.order(), phi.clone()).plus(&correction)?;
    Ok(Transferred { epsilon, phi_t })
}

/// d_Ω(φt) + (A_E + ε)φt − φt(A_F + η), coefficientwise.
pub fn intertwining_residual(data: &HomotopyData, eta: &McSeries, out: &Transferred) -> Result<Series> {
    let (vars, order) = (eta.vars(), eta.order());
    let a_e = Series::constant(vars, order, data.small().connection().clone()).plus(&out.epsilon)?;
    let a_f = Series::constant(vars, order, data.big().connection().clone()).plus(eta)?;
    let d = out.phi_t.map(|x| x.base_differential());
    d.plus(&a_e.convolve(&out.phi_t, compose)?)?.minus(&out.phi_t.convolve(&a_f, compose)?)
}

/// Largest arity evaluated by the generic permutation sum.
pub const MAX_GENERIC_ARITY: usize = 4;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// sgn(σ) times the Koszul sign of reordering homogeneous arguments of the
/// given degrees into the order σ(0), σ(1), ….
fn permutation_sign(sigma: &[usize], degrees: &[i32]) -> f64 {
    let mut s = 1.0;
    for a in 0..sigma.len() {
        for b in a + 1..sigma.len() {
            if sigma[a] > sigma[b] {
                s *= -sign(degrees[sigma[a]] * degrees[sigma[b]]);
            }
        }
    }
    s
}

fn homogeneous_linfty(data: &HomotopyData, xs: &[AlgebraElement], degrees: &[i32]) -> Result<AlgebraElement> {
    let (phi, psi, h) = (data.phi().body(), data.psi().body(), data.h().body());
    let mut out = data.small().zero_endo();
    for sigma in permutations(xs.len()) {
        let (&last, rest) = sigma.split_last().expect("arity at least one");
        let mut chain = compose(&xs[last], psi)?;
        for &i in rest.iter().rev() {
            chain = compose(&xs[i], &compose(h, &chain)?)?;
        }
        let term = compose(phi, &chain)?;
        out += &term.scaled_re(permutation_sign(&sigma, degrees));
    }
    Ok(out)
}

/// Φ_n(x₁, …, x_n) = Σ_σ ±φ x_σ(1) h x_σ(2) h … h x_σ(n) ψ with sign
/// sgn(σ)·(Koszul sign), extended multilinearly over homogeneous parts.
pub fn linfty_term(data: &HomotopyData, xs: &[AlgebraElement]) -> Result<AlgebraElement> {
    if xs.is_empty() || xs.len() > MAX_GENERIC_ARITY {
        return Err(Error::ArityOverflow { got: xs.len(), max: MAX_GENERIC_ARITY });
    }
    for x in xs {
        if !x.is_endomorphism() || x.source() != data.big().space() {
            return Err(Error::ModelMismatch("L∞ arguments must be endomorphisms of F".into()));
        }
    }
    let parts: Vec<Vec<(i32, AlgebraElement)>> =
        xs.iter().map(|x| x.degrees().into_iter().map(|k| (k, x.degree_part(k))).collect()).collect();
    let mut out = data.small().zero_endo();
    let mut choice = vec![0usize; xs.len()];
    if parts.iter().any(|p| p.is_empty()) {
        return Ok(out);
    }
    loop {
        let args: Vec<AlgebraElement> = choice.iter().enumerate().map(|(i, &c)| parts[i][c].1.clone()).collect();
        let degrees: Vec<i32> = choice.iter().enumerate().map(|(i, &c)| parts[i][c].0).collect();
        out += &homogeneous_linfty(data, &args, &degrees)?;
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < parts[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Tuples of nonzero indices (I₁, …, I_n) present in `s` with Σ|I| ≤ order.
fn index_tuples(s: &Series, n: usize) -> Vec<Vec<MultiIndex>> {
    let keys: Vec<MultiIndex> = s.iter().map(|(i, _)| i.clone()).collect();
    let mut out = vec![(Vec::new(), 0u32)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|(v, used)| {
                keys.iter()
                    .filter(move |k| used + k.total() <= s.order())
                    .map(|k| {
                        let mut w = v.clone();
                        w.push(k.clone());
                        (w, used + k.total())
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out.into_iter().map(|(v, _)| v).collect()
}

/// Σ_{n≥1} Φ_n(η, …, η)/n!, expanded over coefficient tuples. Arity ≤ 4 uses
/// the permutation sum; higher arities use the equal-argument chain
/// φ η h η … h η ψ, to which the permutation sum collapses for degree-1 inputs.
pub fn mc_eval(data: &HomotopyData, eta: &McSeries) -> Result<McSeries> {
    eta.check_mc_shape(1)?;
    let mut out = Series::new(eta.vars(), eta.order(), data.small().zero_endo());
    let (phi, psi, h) = (data.phi().body(), data.psi().body(), data.h().body());
    let eta_h = constant_compose_right(eta, h)?;
    let mut chain = eta.clone();
    let mut factorial = 1.0;
    for n in 1..=eta.order() as usize {
        factorial *= n as f64;
        if n > 1 {
            chain = eta_h.convolve(&chain, compose)?;
        }
        if n <= MAX_GENERIC_ARITY {
            for tuple in index_tuples(eta, n) {
                let args: Vec<AlgebraElement> = tuple.iter().map(|i| eta.coefficient(i)).collect();
                let total = tuple.iter().skip(1).fold(tuple[0].clone(), |a, b| a.add(b));
                out.add_at(&total, &linfty_term(data, &args)?.scaled_re(1.0 / factorial));
            }
        } else {
            let term = constant_compose_right(&constant_compose_left(phi, &chain)?, psi)?;
            out = out.plus(&term)?;
        }
    }
    Ok(out)
}

/// A flat connection over Ω ⊗ P for an antiholomorphic parameter algebra P;
/// the total differential includes ∂̄ on the parameter factor.
#[derive(Clone, Debug)]
pub struct FamilyConnection {
    family: Arc<FamilyAlgebra>,
    model: Arc<CohesiveModel>,
}

impl FamilyConnection {
    pub fn new(family: Arc<FamilyAlgebra>, space: Arc<GradedSpace>, connection: AlgebraElement) -> Result<Self> {
        if !family.params().antiholomorphic() {
            return Err(Error::HolomorphicOnly);
        }
        let model = make_model(family.total().clone(), space, connection)?;
        Ok(Self { family, model: Arc::new(model) })
    }

    /// The regular family A + η(t) for a series η on a model over Ω.
    pub fn from_series(family: Arc<FamilyAlgebra>, fiber: &CohesiveModel, eta: &Series) -> Result<Self> {
        let a0 = lift(&family, fiber.connection());
        let connection = &a0 + &series_to_family(&family, eta)?;
        Self::new(family, fiber.space().clone(), connection)
    }

    pub fn family(&self) -> &Arc<FamilyAlgebra> {
        &self.family
    }

    pub fn model(&self) -> &Arc<CohesiveModel> {
        &self.model
    }

    pub fn connection(&self) -> &AlgebraElement {
        self.model.connection()
    }

    /// χ_j: the part of the connection with j factors dt̄.
    pub fn dtbar_part(&self, j: i32) -> AlgebraElement {
        dtbar_part(&self.family, self.connection(), j)
    }

    pub fn max_dtbar_degree(&self) -> i32 {
        max_dtbar_degree(&self.family, self.connection())
    }

    /// Norm of all components with at least one dt̄.
    pub fn dtbar_residual(&self) -> f64 {
        (1..=self.family.params().vars() as i32).map(|j| self.dtbar_part(j).norm()).fold(0.0, f64::max)
    }

    pub fn is_regular(&self) -> bool {
        self.dtbar_residual() <= tol::RESIDUAL
    }

    /// The model at the origin of the disk.
    pub fn fiber(&self) -> Result<CohesiveModel> {
        crate::cohesive::restrict_model_to_origin(&self.family, &self.model)
    }

    /// J^{-1}(d + B)J for an invertible degree-0 J.
    pub fn conjugate(&self, j: &AlgebraElement) -> Result<Self> {
        let j_inv = unipotent_inverse(&self.family, j)?;
        let b = compose(&j_inv, &(j.base_differential() + compose(self.connection(), j)?))?;
        Self::new(self.family.clone(), self.model.space().clone(), b)
    }
}

fn filter_base(x: &AlgebraElement, family: &FamilyAlgebra, keep: impl Fn(&Monomial) -> bool) -> AlgebraElement {
    x.map_base(family.total().clone(), |idx| if keep(family.monomial(idx)) { vec![(idx, c64(1.0, 0.0))] } else { Vec::new() })
}

pub fn dtbar_part(family: &FamilyAlgebra, x: &AlgebraElement, j: i32) -> AlgebraElement {
    filter_base(x, family, |m| m.form_degree() == j)
}

pub fn weight_part(family: &FamilyAlgebra, x: &AlgebraElement, w: u32) -> AlgebraElement {
    filter_base(x, family, |m| m.weight() == w)
}

fn max_dtbar_degree(family: &FamilyAlgebra, x: &AlgebraElement) -> i32 {
    x.terms().map(|(idx, _, _)| family.monomial(idx).form_degree()).max().unwrap_or(0)
}

/// ω ↦ ω ⊗ 1.
pub fn lift(family: &FamilyAlgebra, x: &AlgebraElement) -> AlgebraElement {
    x.map_base(family.total().clone(), |r| family.embed(r))
}

/// Σ_I x_I ⊗ t^I over Ω ⊗ P.
pub fn series_to_family(family: &FamilyAlgebra, s: &Series) -> Result<AlgebraElement> {
    let params = family.params();
    if s.vars() != params.vars() || s.order() as usize > params.order() {
        return Err(Error::ParameterMismatch("series does not fit the parameter algebra".into()));
    }
    let mut out = lift(family, s.zero_coefficient());
    for (i, x) in s.iter() {
        let m = params.index_of(&Monomial::holomorphic(i.exponents().to_vec())).expect("holomorphic monomial in range");
        out += &lift(family, x).map_base(family.total().clone(), |idx| family.times_monomial(idx, m));
    }
    Ok(out)
}

/// Inverse of `series_to_family` for elements depending on t only.
pub fn family_to_series(family: &FamilyAlgebra, x: &AlgebraElement, zero: &AlgebraElement) -> Result<Series> {
    let params = family.params();
    let mut out = Series::new(params.vars(), params.order() as u32, zero.clone());
    let offending = filter_base(x, family, |m| !m.tbar.iter().all(|&e| e == 0) || m.dtbar != 0).norm();
    if offending > tol::RESIDUAL {
        return Err(Error::NotRegular { residual: offending });
    }
    for k in 0..params.dim() {
        let m = params.monomial(k);
        if !m.is_holomorphic() {
            continue;
        }
        let part = filter_base(x, family, |n| n == m);
        if part.is_zero() {
            continue;
        }
        let coeff = part.map_base(family.omega().clone(), |idx| {
            let (r, _) = family.split(idx);
            vec![(r, c64(1.0, 0.0))]
        });
        out.set(MultiIndex::new(m.t.clone()), coeff)?;
    }
    Ok(out)
}

/// (1 + N)^{-1} = Σ (−N)^k for an element whose constant part is the identity
/// and whose remainder N has positive parameter weight.
pub fn unipotent_inverse(family: &FamilyAlgebra, j: &AlgebraElement) -> Result<AlgebraElement> {
    let id = AlgebraElement::identity(family.total().clone(), j.source().clone());
    let n = j - &id;
    let origin = weight_part(family, &n, 0);
    if origin.norm() > tol::EXACT {
        return Err(Error::NotRegular { residual: origin.norm() });
    }
    let mut out = id.clone();
    let mut power = id;
    for _ in 0..family.params().order() {
        power = -compose(&n, &power)?;
        if power.is_zero() {
            break;
        }
        out += &power;
    }
    Ok(out)
}

/// Result of eliminating the dt̄ components of a family.
#[derive(Clone, Debug)]
pub struct Regularized {
    /// Invertible gauge with J ≡ id at the origin.
    pub j: AlgebraElement,
    pub family: FamilyConnection,
    /// ‖d(J) + BJ − JB′‖.
    pub conjugation_residual: f64,
}

fn kappa(family: &FamilyAlgebra, x: &AlgebraElement) -> AlgebraElement {
    x.map_base(family.total().clone(), |idx| family.kappa(idx))
}

fn omega_d(family: &FamilyAlgebra, x: &AlgebraElement) -> AlgebraElement {
    x.map_base(family.total().clone(), |idx| family.omega_differential(idx))
}

/// Conjugates the family by J built weight by weight so that the result has
/// no dt̄ components. At each weight w the correction K solves
/// (X + δ₀K + ∂̄K)^{(j)} = 0 for j ≥ 1, top dt̄-degree first, with
/// K^{(j−1)} = −κ(X^{(j)} + δ₀K^{(j)}) and δ₀ = d_Ω + [A₀, ·].
pub fn regularize(fam: &FamilyConnection) -> Result<Regularized> {
    let family = fam.family();
    let space = fam.model().space().clone();
    let b = fam.connection();
    let a0 = weight_part(family, b, 0);
    let id = AlgebraElement::identity(family.total().clone(), space.clone());
    let mut j = id.clone();
    let delta0 = |k: &AlgebraElement| -> Result<AlgebraElement> { Ok(omega_d(family, k) + supercommutator(&a0, k)?) };
    for w in 1..=family.params().order() as u32 {
        let j_inv = unipotent_inverse(family, &j)?;
        let transformed = compose(&j_inv, &(j.base_differential() + compose(b, &j)?))?;
        let x = weight_part(family, &transformed, w);
        let top = max_dtbar_degree(family, &x);
        let mut k_total = id.zero_like();
        let mut k_above = id.zero_like();
        for deg in (1..=top).rev() {
            let y = dtbar_part(family, &x, deg) + delta0(&k_above)?;
            let k = -kappa(family, &y);
            k_total += &k;
            k_above = k;
        }
        if !k_total.is_zero() {
            j = compose(&j, &(&id + &k_total))?;
        }
    }
    let j_inv = unipotent_inverse(family, &j)?;
    let new_b = compose(&j_inv, &(j.base_differential() + compose(b, &j)?))?;
    let regular = FamilyConnection::new(family.clone(), space, new_b)?;
    let conjugation_residual = (j.base_differential() + compose(b, &j)? - compose(&j, regular.connection())?).norm();
    let residual = regular.dtbar_residual();
    if residual > tol::RESIDUAL {
        return Err(Error::NotRegular { residual });
    }
    Ok(Regularized { j, family: regular, conjugation_residual })
}

/// Result of removing the dt̄ components of a closed morphism.
#[derive(Clone, Debug)]
pub struct RegularizedMorphism {
    pub theta: AlgebraElement,
    /// γ with θ̃ − θ = d(γ).
    pub gamma: AlgebraElement,
}

/// Kills dt̄ components of a closed degree-0 θ: source → target from the top
/// dt̄-degree down, replacing θ by θ − d(κθ^{(top)}) at each step.
pub fn regularize_morphism(
    source: &FamilyConnection,
    target: &FamilyConnection,
    theta: &AlgebraElement,
) -> Result<RegularizedMorphism> {
    let family = source.family();
    let d = |x: &AlgebraElement| hom_differential_element(target.connection(), source.connection(), x);
    if !theta.is_homogeneous(0) {
        return Err(Error::NotHomogeneous { expected: 0 });
    }
    let closed = d(theta)?.norm();
    if closed > tol::CLOSED {
        return Err(Error::NotClosed { residual: closed });
    }
    let mut current = theta.clone();
    let mut gamma = theta.zero_like();
    loop {
        let top = max_dtbar_degree(family, &current);
        if top == 0 {
            break;
        }
        let step = kappa(family, &dtbar_part(family, &current, top));
        current -= &d(&step)?;
        gamma -= &step;
        if max_dtbar_degree(family, &current) >= top {
            let residual = dtbar_part(family, &current, top).norm();
            if residual > tol::RESIDUAL {
                return Err(Error::NotRegular { residual });
            }
            current = &current - &dtbar_part(family, &current, top);
        }
    }
    Ok(RegularizedMorphism { theta: current, gamma })
}

/// For a regular family whose fiber at the origin is the source of `data`,
/// transfers η(t) = A_t − A_0 along the data.
pub fn strongify(fam: &FamilyConnection, data: &HomotopyData) -> Result<Transferred> {
    let residual = fam.dtbar_residual();
    if residual > tol::RESIDUAL {
        return Err(Error::NotRegular { residual });
    }
    let fiber = fam.fiber()?;
    if !fiber.same_as(data.big()) {
        return Err(Error::ModelMismatch("family fiber differs from the source of the homotopy data".into()));
    }
    let family = fam.family();
    let a0 = lift(family, fiber.connection());
    let eta = family_to_series(family, &(fam.connection() - &a0), &data.big().zero_endo())?;
    transfer_mc(&eta, data)
}

/// log(1 + N) = Σ_k (−1)^{k+1} N^k / k for a series with constant term id.
pub fn unipotent_log(s: &Series) -> Result<Series> {
    let constant = s.constant_term();
    let id = AlgebraElement::identity(constant.base().clone(), constant.source().clone());
    if (&constant - &id).norm() > tol::EXACT {
        return Err(Error::ParameterMismatch("constant term must be the identity".into()));
    }
    let mut n = s.clone();
    n.set(MultiIndex::zero(s.vars()), id.zero_like())?;
    let mut out = n.empty_like();
    let mut power = n.clone();
    for k in 1..=s.order() {
        out = out.plus(&power.scaled(c64(sign(k as i32 + 1) / k as f64, 0.0)))?;
        power = power.convolve(&n, compose)?;
        if power.is_zero() {
            break;
        }
    }
    Ok(out)
}
