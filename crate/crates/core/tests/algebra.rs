mod common;

use std::sync::Arc;

use cohesive_core::cohesive::hom_differential_element;
use cohesive_core::graded::{c64, GradedMap};
use cohesive_core::samples::{self, random_element, random_endo, random_flat_model, SampleRng};
use cohesive_core::{
    cone, dgla_of, is_homotopy_equivalence, AlgebraElement, BaseAlgebra, CMatrix, CohesiveModel, GradedSpace,
    Morphism,
};
use common::*;
use proptest::prelude::*;

fn base_of(g: usize) -> Arc<BaseAlgebra> {
    Arc::new(if g == 0 { BaseAlgebra::point() } else { BaseAlgebra::exterior(g).unwrap() })
}

fn space(c: &[(i32, usize)]) -> Arc<GradedSpace> {
    Arc::new(GradedSpace::new(c.iter().copied()).unwrap())
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn composition_matches_operator_product() {
    let mut rng = samples::rng(1);
    for g in 0..=3 {
        let base = base_of(g);
        let e = space(&[(-1, 1), (0, 2), (1, 1)]);
        let f = space(&[(0, 1), (1, 2)]);
        let h = space(&[(0, 2), (2, 1)]);
        for (kf, kg) in [(0, 0), (1, -1), (1, 1), (-1, 2)] {
            let x = random_element(&mut rng, &base, &e, &f, kf, 1.0);
            let y = random_element(&mut rng, &base, &f, &h, kg, 1.0);
            let lhs = operator(&y.compose(&x).unwrap());
            let rhs = operator(&y) * operator(&x);
            assert!(max_abs(&(lhs - rhs)) < 1e-12, "g={g}, degrees ({kf}, {kg})");
        }
    }
}

#[test]
fn wedge_composition_example() {
    // Over Λ(θ₁, θ₂) with E = ℂ in degree 0: (θ₁⊗a)(θ₂⊗b) = θ₁θ₂ ⊗ ab.
    let base = Arc::new(BaseAlgebra::exterior(2).unwrap());
    let e = space(&[(0, 1)]);
    let scalar = |r: usize, z: f64| {
        let m = GradedMap::from_matrix(e.clone(), e.clone(), 0, CMatrix::from_element(1, 1, c64(z, 0.0))).unwrap();
        AlgebraElement::from_map(base.clone(), r, &m).unwrap()
    };
    let (t1, t2, t12) = (base.index_of("th1").unwrap(), base.index_of("th2").unwrap(), base.index_of("th1th2").unwrap());
    let prod = scalar(t1, 3.0).compose(&scalar(t2, 5.0)).unwrap();
    assert_eq!(prod.term_count(), 1);
    let c = prod.coefficient(t12, 0).unwrap().into_matrix();
    assert!((c[(0, 0)] - c64(15.0, 0.0)).norm() < 1e-14);
    // θ ⊗ M composed with itself vanishes.
    assert!(scalar(t1, 2.0).compose(&scalar(t1, 7.0)).unwrap().is_zero());
}

#[test]
fn bracket_matches_graded_commutator_of_operators() {
    let mut rng = samples::rng(2);
    for _ in 0..10 {
        let model = random_flat_model(&mut rng);
        for (a, b) in [(0, 1), (1, 1), (-1, 2), (1, 2)] {
            let x = random_endo(&mut rng, &model, a, 1.0);
            let y = random_endo(&mut rng, &model, b, 1.0);
            let lhs = operator(&x.bracket(&y).unwrap());
            let rhs = graded_commutator(&operator(&x), a, &operator(&y), b);
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }
}

#[test]
fn bracket_examples() {
    // E = ℂ ⊕ ℂ[−1], a: E⁰ → E¹ and b: E¹ → E⁰ elementary: [a, b] = id.
    let base = Arc::new(BaseAlgebra::point());
    let e = space(&[(0, 1), (1, 1)]);
    let elem = |i: usize, j: usize, k: i32| {
        let mut m = CMatrix::zeros(2, 2);
        m[(i, j)] = c64(1.0, 0.0);
        AlgebraElement::from_map(base.clone(), 0, &GradedMap::from_matrix(e.clone(), e.clone(), k, m).unwrap()).unwrap()
    };
    let (a, b) = (elem(1, 0, 1), elem(0, 1, -1));
    let id = AlgebraElement::identity(base.clone(), e.clone());
    assert!((a.bracket(&b).unwrap() - id.clone()).norm() < 1e-14);
    assert!(id.bracket(&a).unwrap().is_zero());
    // Odd x: [x, x] = 2x∘x.
    let mut rng = samples::rng(3);
    let model = random_flat_model(&mut rng);
    let x = random_endo(&mut rng, &model, 1, 1.0);
    let xx = x.compose(&x).unwrap().scaled_re(2.0);
    assert!((x.bracket(&x).unwrap() - xx).norm() < 1e-12);
}

#[test]
fn differential_matches_operator_commutator() {
    let mut rng = samples::rng(4);
    for _ in 0..15 {
        let model = random_flat_model(&mut rng);
        let dgla = dgla_of(&model);
        let d = total_operator(&model);
        assert!(max_abs(&(&d * &d)) < 1e-10, "D² = 0 for flat models");
        for k in -1..=2 {
            let x = random_endo(&mut rng, &model, k, 1.0);
            let lhs = operator(&dgla.differential(&x).unwrap());
            let rhs = hom_differential_operator(&model, &model, &operator(&x), k);
            assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }
    }
}

#[test]
fn hom_differential_between_models_matches_operators() {
    let mut rng = samples::rng(5);
    for _ in 0..10 {
        let (m1, m2) = (random_flat_model(&mut rng), random_flat_model(&mut rng));
        if m1.base().dim() != m2.base().dim() {
            continue;
        }
        let base = m1.base().clone();
        let m2 = Arc::new(cohesive_core::make_model(base.clone(), m2.space().clone(), m2.connection().map_base(base.clone(), |r| vec![(r, c64(1.0, 0.0))])).unwrap());
        let x = random_element(&mut rng, &base, m1.space(), m2.space(), 0, 1.0);
        let lhs = operator(&hom_differential_element(m2.connection(), m1.connection(), &x).unwrap());
        let rhs = hom_differential_operator(&m2, &m1, &operator(&x), 0);
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }
}

#[test]
fn supertrace_matches_operator_trace() {
    let mut rng = samples::rng(6);
    for _ in 0..10 {
        let model = random_flat_model(&mut rng);
        let x = random_endo(&mut rng, &model, 0, 1.0) + random_endo(&mut rng, &model, 1, 1.0);
        let st = x.supertrace().unwrap();
        let n = model.space().total_dim();
        let op = operator(&x);
        let unit = model.base().unit();
        for u in 0..model.base().dim() {
            let block = op.view((u * n, unit * n), (n, n));
            let oracle: cohesive_core::C64 =
                (0..n).map(|i| block[(i, i)] * parity(model.space().degree_of(i))).sum();
            assert!((st[u] - oracle).norm() < 1e-12);
        }
    }
    let base = Arc::new(BaseAlgebra::point());
    let id = AlgebraElement::identity(base, space(&[(0, 2), (1, 3)]));
    assert!((id.supertrace().unwrap()[0] - c64(-1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn cohomology_dims_match_rank_oracle() {
    let mut rng = samples::rng(7);
    for _ in 0..10 {
        let model = random_flat_model(&mut rng);
        for (k, dim) in dgla_of(&model).cohomology_dims() {
            assert_eq!(dim, cohomology_dim(&model, k), "degree {k}");
        }
    }
}

#[test]
fn equivalence_is_invariant_under_homotopy() {
    let mut rng = samples::rng(8);
    for _ in 0..6 {
        let model = random_flat_model(&mut rng);
        let id = Morphism::identity(&model);
        let gamma = Morphism::new(model.clone(), model.clone(), -1, random_endo(&mut rng, &model, -1, 0.3)).unwrap();
        let shifted = id.plus(&gamma.differential()).unwrap();
        let a = is_homotopy_equivalence(&id).unwrap();
        let b = is_homotopy_equivalence(&shifted).unwrap();
        assert!(a.is_equivalence);
        assert_eq!(a.is_equivalence, b.is_equivalence);
        // The cone of the identity is contractible.
        let c = Arc::new(cone(&id).unwrap());
        assert!(c.curvature_norm() < 1e-9);
        assert!(dgla_of(&c).cohomology_dims().values().all(|&d| d == 0));
    }
}

fn model_and_rng(seed: u64) -> (Arc<CohesiveModel>, SampleRng) {
    let mut rng = samples::rng(seed);
    (random_flat_model(&mut rng), rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn koszul_associativity(seed in any::<u64>(), a in -1i32..=2, b in -1i32..=2, c in -1i32..=2) {
        let (model, mut rng) = model_and_rng(seed);
        let x = random_endo(&mut rng, &model, a, 1.0);
        let y = random_endo(&mut rng, &model, b, 1.0);
        let z = random_endo(&mut rng, &model, c, 1.0);
        let left = x.compose(&y.compose(&z).unwrap()).unwrap();
        let right = x.compose(&y).unwrap().compose(&z).unwrap();
        prop_assert!((left - right).norm() < 1e-10);
    }

    #[test]
    fn graded_jacobi(seed in any::<u64>(), a in -1i32..=2, b in -1i32..=2, c in -1i32..=2) {
        let (model, mut rng) = model_and_rng(seed);
        let x = random_endo(&mut rng, &model, a, 1.0);
        let y = random_endo(&mut rng, &model, b, 1.0);
        let z = random_endo(&mut rng, &model, c, 1.0);
        let lhs = x.bracket(&y.bracket(&z).unwrap()).unwrap();
        let rhs = x.bracket(&y).unwrap().bracket(&z).unwrap()
            + y.bracket(&x.bracket(&z).unwrap()).unwrap().scaled_re(parity(a * b));
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn graded_antisymmetry(seed in any::<u64>(), a in -1i32..=2, b in -1i32..=2) {
        let (model, mut rng) = model_and_rng(seed);
        let x = random_endo(&mut rng, &model, a, 1.0);
        let y = random_endo(&mut rng, &model, b, 1.0);
        let sum = x.bracket(&y).unwrap() + y.bracket(&x).unwrap().scaled_re(parity(a * b));
        prop_assert!(sum.norm() < 1e-12);
    }

    #[test]
    fn leibniz_and_square_zero(seed in any::<u64>(), a in -1i32..=2, b in -1i32..=2) {
        let (model, mut rng) = model_and_rng(seed);
        let dgla = dgla_of(&model);
        let x = random_endo(&mut rng, &model, a, 1.0);
        let y = random_endo(&mut rng, &model, b, 1.0);
        let d = |v: &AlgebraElement| dgla.differential(v).unwrap();
        let lhs = d(&x.bracket(&y).unwrap());
        let rhs = d(&x).bracket(&y).unwrap() + x.bracket(&d(&y)).unwrap().scaled_re(parity(a));
        prop_assert!((lhs - rhs).norm() < 1e-10);
        prop_assert!(d(&d(&x)).norm() < 1e-10);
    }

    #[test]
    fn supertrace_kills_brackets(seed in any::<u64>(), a in -1i32..=2) {
        let (model, mut rng) = model_and_rng(seed);
        let x = random_endo(&mut rng, &model, a, 1.0);
        let y = random_endo(&mut rng, &model, -a, 1.0) + random_endo(&mut rng, &model, 1 - a, 1.0);
        let st = x.bracket(&y).unwrap().supertrace().unwrap();
        prop_assert!(st.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn composition_is_faithful_to_operators(seed in any::<u64>(), a in -1i32..=1, b in -1i32..=1) {
        let (model, mut rng) = model_and_rng(seed);
        let x = random_endo(&mut rng, &model, a, 1.0);
        let y = random_endo(&mut rng, &model, b, 1.0);
        let back = element_from_operator(model.base(), model.space(), model.space(), &(operator(&x) * operator(&y)));
        prop_assert!((back - x.compose(&y).unwrap()).norm() < 1e-12);
    }
}
