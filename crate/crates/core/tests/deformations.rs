mod common;

use std::sync::Arc;

use cohesive_core::base::BasisElement;
use cohesive_core::deform::mc_split;
use cohesive_core::graded::{c64, GradedMap};
use cohesive_core::samples::{self, random_endo, random_flat_model, random_gauge_series, random_harmonic_seed, SampleRng};
use cohesive_core::{
    build_hodge, dgla_of, gauge_act, kodaira_spencer, kuranishi_map, mc_residual, slice_normalize, solve_kuranishi,
    AlgebraElement, BaseAlgebra, CMatrix, CohesiveModel, GradedSpace, HodgePackage, MetricData, MultiIndex, Series,
};
use common::*;
use proptest::prelude::*;

fn series_norm(s: &Series) -> f64 {
    s.max_norm().0
}

fn random_series(rng: &mut SampleRng, model: &CohesiveModel, vars: usize, order: u32, degree: i32, scale: f64) -> Series {
    let mut s = Series::new(vars, order, model.zero_endo());
    for i in MultiIndex::all_up_to(vars, order) {
        s.set(i, random_endo(rng, model, degree, scale)).unwrap();
    }
    s
}

/// Operator series of a library series minus an oracle, ignoring the constant term.
fn distance_from_oracle(s: &Series, oracle: &OpSeries) -> f64 {
    let mut oracle = oracle.clone();
    oracle.remove(&MultiIndex::zero(s.vars()));
    op_distance(&op_series(s), &oracle)
}

fn obstructed_or_not(rng: &mut SampleRng) -> (Arc<CohesiveModel>, HodgePackage) {
    let model = random_flat_model(rng);
    let hp = build_hodge(&model, &MetricData::standard()).unwrap();
    (model, hp)
}

#[test]
fn mc_residual_matches_operator_square() {
    let mut rng = samples::rng(41);
    for _ in 0..10 {
        let model = random_flat_model(&mut rng);
        let alpha = random_series(&mut rng, &model, 2, 3, 1, 0.5);
        let res = mc_residual(&dgla_of(&model), &alpha).unwrap();
        assert!(distance_from_oracle(&res, &mc_residual_oracle(&model, &alpha)) < 1e-10);
    }
}

#[test]
fn gl2_residual_is_the_wedge_commutator() {
    let model = samples::gl2_model();
    let (a, b) = samples::noncommuting_pair();
    let alpha = Series::linear(4, &[samples::gl2_seed(&model, &a, &b)]).unwrap();
    let res = mc_residual(&dgla_of(&model), &alpha).unwrap();
    // ½[α, α] = (θ₁a + θ₂b)² = θ₁θ₂ ab + θ₂θ₁ ba = θ₁θ₂ ⊗ [a, b].
    let t12 = model.base().index_of("th1th2").unwrap();
    let expected_matrix = &a * &b - &b * &a;
    let got = res.coefficient(&MultiIndex::new(vec![2]));
    assert_eq!(got.term_count(), 1);
    let m = got.coefficient(t12, 0).unwrap().into_matrix();
    assert!((m - expected_matrix).norm() < 1e-14);
    assert!(distance_from_oracle(&res, &mc_residual_oracle(&model, &alpha)) < 1e-12);
}

#[test]
fn gauge_action_matches_operator_conjugation() {
    let mut rng = samples::rng(42);
    for i in 0..10 {
        let model = random_flat_model(&mut rng);
        let vars = 1 + i % 2;
        let alpha = random_series(&mut rng, &model, vars, 4, 1, 0.5);
        let u = random_gauge_series(&mut rng, &model, vars, 4, 0.5);
        let out = gauge_act(&dgla_of(&model), &u, &alpha).unwrap();
        assert!(distance_from_oracle(&out, &gauge_oracle(&model, &u, &alpha)) < 1e-8);
    }
}

#[test]
fn pure_gauge_series() {
    // α = 0, u = t·w: α′ = −t·dw − (t²/2)[w, dw] − (t³/6)[w, [w, dw]] − …
    let mut rng = samples::rng(43);
    let model = random_flat_model(&mut rng);
    let dgla = dgla_of(&model);
    let w = random_endo(&mut rng, &model, 0, 0.5);
    let u = Series::linear(3, &[w.clone()]).unwrap();
    let zero = Series::new(1, 3, model.zero_endo());
    let out = gauge_act(&dgla, &u, &zero).unwrap();
    let dw = dgla.differential(&w).unwrap();
    let first = -dw.clone();
    let second = w.bracket(&dw).unwrap().scaled_re(-0.5);
    let third = w.bracket(&w.bracket(&dw).unwrap()).unwrap().scaled_re(-1.0 / 6.0);
    for (k, expected) in [(1, first), (2, second), (3, third)] {
        assert!((out.coefficient(&MultiIndex::new(vec![k])) - expected).norm() < 1e-12);
    }
    assert!(distance_from_oracle(&out, &gauge_oracle(&model, &u, &zero)) < 1e-10);
    // u = 0 leaves α alone.
    let alpha = random_series(&mut rng, &model, 1, 3, 1, 0.5);
    let same = gauge_act(&dgla, &Series::new(1, 3, model.zero_endo()), &alpha).unwrap();
    assert!(series_norm(&same.minus(&alpha).unwrap()) == 0.0);
}

#[test]
fn kuranishi_contract_on_random_models() {
    let mut rng = samples::rng(44);
    for i in 0..12 {
        let (model, hp) = obstructed_or_not(&mut rng);
        if hp.harmonic_dim(1) == 0 {
            continue;
        }
        let vars = 1 + i % 2;
        let beta = random_harmonic_seed(&mut rng, &hp, vars, 6, i % 3 == 0).scaled(c64(0.5, 0.0));
        let sol = solve_kuranishi(&hp, &beta).unwrap();
        let ku = kuranishi_map(&hp, &sol.alpha).unwrap();
        assert!(series_norm(&ku.minus(&beta).unwrap()) < 1e-10);
        assert!(series_norm(&sol.alpha.map(|x| hp.codifferential(x))) < 1e-10);
        // Solved exactly when unobstructed.
        let res = series_norm(&mc_residual(&dgla_of(&model), &sol.alpha).unwrap());
        assert_eq!(sol.solved, res < 1e-9, "residual {res}");
    }
}

#[test]
fn maurer_cartan_splits_into_three_orthogonal_pieces() {
    let mut rng = samples::rng(45);
    for _ in 0..10 {
        let (model, hp) = obstructed_or_not(&mut rng);
        let dgla = dgla_of(&model);
        let alpha = random_series(&mut rng, &model, 1, 4, 1, 0.5);
        let split = mc_split(&hp, &alpha).unwrap();
        let res = mc_residual(&dgla, &alpha).unwrap();
        let recomposed =
            split.closed_part.plus(&split.harmonic_part.scaled(c64(0.5, 0.0))).unwrap().plus(&split.coexact_part.scaled(c64(0.5, 0.0))).unwrap();
        assert!(series_norm(&res.minus(&recomposed).unwrap()) < 1e-9);
    }
}

#[test]
fn three_way_equivalence_in_both_directions() {
    let mut rng = samples::rng(46);
    let mut solved_seen = 0;
    let mut corrupted_seen = 0;
    for _ in 0..20 {
        let (model, hp) = obstructed_or_not(&mut rng);
        if hp.harmonic_dim(1) == 0 {
            continue;
        }
        let dgla = dgla_of(&model);
        let beta = random_harmonic_seed(&mut rng, &hp, 1, 5, false).scaled(c64(0.5, 0.0));
        let sol = solve_kuranishi(&hp, &beta).unwrap();
        let candidates = [
            sol.alpha.clone(),
            sol.alpha.plus(&random_series(&mut rng, &model, 1, 5, 1, 0.1)).unwrap(),
        ];
        for alpha in candidates {
            let mc = series_norm(&mc_residual(&dgla, &alpha).unwrap()) <= 1e-9;
            let split = mc_split(&hp, &alpha).unwrap().all_vanish(1e-9);
            assert_eq!(mc, split);
            if mc {
                solved_seen += 1;
            } else {
                corrupted_seen += 1;
            }
        }
    }
    assert!(solved_seen > 0 && corrupted_seen > 0);
}

#[test]
fn gl2_obstruction_matches_bracket() {
    let model = samples::gl2_model();
    let hp = build_hodge(&model, &MetricData::standard()).unwrap();
    let (a, b) = samples::noncommuting_pair();
    let beta = Series::linear(4, &[samples::gl2_seed(&model, &a, &b)]).unwrap();
    let sol = solve_kuranishi(&hp, &beta).unwrap();
    assert!(!sol.solved);
    assert_eq!(sol.obstructions.verdict(), "obstructed at |I|=2");
    // H[α, α] at t² is [β, β] = 2 θ₁θ₂ ⊗ [a, b] since G = 0 and H = id here.
    let t12 = model.base().index_of("th1th2").unwrap();
    let ob = sol.obstructions.get(&MultiIndex::new(vec![2])).unwrap();
    let m = ob.coefficient(t12, 0).unwrap().into_matrix();
    assert!((m - (&a * &b - &b * &a) * c64(2.0, 0.0)).norm() < 1e-10);
    assert!(sol.obstructions.norm(&MultiIndex::new(vec![2])) > 0.1);

    let (a, b) = samples::commuting_pair();
    let beta = Series::linear(6, &[samples::gl2_seed(&model, &a, &b)]).unwrap();
    let sol = solve_kuranishi(&hp, &beta).unwrap();
    assert!(sol.solved);
    assert_eq!(sol.obstructions.verdict(), "unobstructed through order 6");
    assert!(series_norm(&sol.alpha.minus(&beta).unwrap()) == 0.0);
    assert!(series_norm(&mc_residual(&dgla_of(&model), &sol.alpha).unwrap()) == 0.0);
}

#[test]
fn unobstructed_models_solve_to_all_orders() {
    let mut rng = samples::rng(47);
    for i in 0..8 {
        let (model, hp) = samples::random_unobstructed_model(&mut rng);
        let beta = random_harmonic_seed(&mut rng, &hp, 1 + i % 2, 6, true).scaled(c64(0.5, 0.0));
        let sol = solve_kuranishi(&hp, &beta).unwrap();
        assert!(sol.solved);
        assert!(sol.obstructions.max_norm() < 1e-9);
        assert!(series_norm(&mc_residual(&dgla_of(&model), &sol.alpha).unwrap()) < 1e-9);
        // Order-by-order equations: the first-order part is closed.
        let dgla = dgla_of(&model);
        for (i, x) in sol.alpha.iter() {
            if i.total() == 1 {
                assert!(dgla.differential(x).unwrap().norm() < 1e-9);
            }
        }
    }
}

#[test]
fn non_harmonic_seed_is_rejected() {
    let mut rng = samples::rng(48);
    let base = Arc::new(BaseAlgebra::point());
    let model = Arc::new(samples::seed_model(&base, &[samples::Summand::Line(0), samples::Summand::Pair(0, c64(1.0, 0.0))], &[]));
    let hp = build_hodge(&model, &MetricData::standard()).unwrap();
    let y = random_endo(&mut rng, &model, 0, 1.0);
    let exact = dgla_of(&model).differential(&y).unwrap();
    assert!(exact.norm() > 0.1);
    let beta = Series::linear(3, &[exact]).unwrap();
    assert!(matches!(solve_kuranishi(&hp, &beta), Err(cohesive_core::Error::NotHarmonic { .. })));
}

#[test]
fn slice_normalization_round_trip() {
    let mut rng = samples::rng(49);
    for i in 0..8 {
        let (model, hp) = samples::random_unobstructed_model(&mut rng);
        let dgla = dgla_of(&model);
        let vars = 1 + i % 2;
        let beta = random_harmonic_seed(&mut rng, &hp, vars, 4, false).scaled(c64(0.5, 0.0));
        let slice = solve_kuranishi(&hp, &beta).unwrap().alpha;
        // Already in the slice: nothing to do.
        let (u0, same) = slice_normalize(&hp, &slice).unwrap();
        assert!(series_norm(&u0) < 1e-10);
        assert!(series_norm(&same.minus(&slice).unwrap()) < 1e-10);

        let u = random_gauge_series(&mut rng, &model, vars, 4, 0.3);
        let moved = gauge_act(&dgla, &u, &slice).unwrap();
        let (v, back) = slice_normalize(&hp, &moved).unwrap();
        assert!(series_norm(&back.map(|x| hp.codifferential(x))) < 1e-8);
        assert!(series_norm(&back.minus(&gauge_act(&dgla, &v, &moved).unwrap()).unwrap()) < 1e-12);
        assert!(series_norm(&mc_residual(&dgla, &back).unwrap()) < 1e-8);
        // A solved series in the slice has harmonic Kuranishi image.
        let kb = kuranishi_map(&hp, &back).unwrap();
        assert!(kb.iter().all(|(_, x)| hp.harmonic_distance(x) < 1e-8));
    }
}

/// Ω = span{1, e, x} with |e| = 0, |x| = 1, de = x and all products of e, x zero.
fn abelian_base() -> Arc<BaseAlgebra> {
    let basis = vec![
        BasisElement { label: "1".into(), degree: 0 },
        BasisElement { label: "e".into(), degree: 0 },
        BasisElement { label: "x".into(), degree: 1 },
    ];
    let one = c64(1.0, 0.0);
    let products = [(0, 0, 0, one), (0, 1, 1, one), (1, 0, 1, one), (0, 2, 2, one), (2, 0, 2, one)];
    let base = BaseAlgebra::new(basis, 0, products, [(1, 2, one)]).unwrap();
    assert!(base.validate().passed());
    Arc::new(base)
}

#[test]
fn abelian_slice_first_order() {
    // With a zero bracket the gauge action is α ↦ α − du, and the slice
    // condition at first order gives α′ = α − d(G d*α) = 0 for α = t·(c x).
    let base = abelian_base();
    let space = Arc::new(GradedSpace::new([(0, 1)]).unwrap());
    let model = Arc::new(CohesiveModel::trivial(base.clone(), space.clone()));
    let hp = build_hodge(&model, &MetricData::standard()).unwrap();
    let map = GradedMap::from_matrix(space.clone(), space.clone(), 0, CMatrix::from_element(1, 1, c64(0.7, -0.2))).unwrap();
    let x = AlgebraElement::from_map(base.clone(), 2, &map).unwrap();
    let alpha = Series::linear(3, &[x.clone()]).unwrap();
    let (u, out) = slice_normalize(&hp, &alpha).unwrap();
    let expected = &x - &hp.differential(&hp.green(&hp.codifferential(&x)));
    assert!(expected.norm() < 1e-12);
    assert!(series_norm(&out) < 1e-12);
    // u₁ = G d* α₁ = c·e.
    let e = AlgebraElement::from_map(base, 1, &map).unwrap();
    assert!((u.coefficient(&MultiIndex::new(vec![1])) - e).norm() < 1e-12);
}

#[test]
fn kodaira_spencer_class() {
    let mut rng = samples::rng(50);
    for _ in 0..6 {
        let (model, hp) = samples::random_unobstructed_model(&mut rng);
        let dgla = dgla_of(&model);
        let beta = random_harmonic_seed(&mut rng, &hp, 2, 4, false).scaled(c64(0.5, 0.0));
        let alpha = solve_kuranishi(&hp, &beta).unwrap().alpha;
        let v = [samples::random_complex(&mut rng), samples::random_complex(&mut rng)];
        let ks = kodaira_spencer(&hp, &alpha, &v).unwrap();
        let expected = &beta.coefficient(&MultiIndex::unit(2, 0)).scaled(v[0]) + &beta.coefficient(&MultiIndex::unit(2, 1)).scaled(v[1]);
        assert!((&ks - &expected).norm() < 1e-12);
        let u = random_gauge_series(&mut rng, &model, 2, 4, 0.3);
        let moved = gauge_act(&dgla, &u, &alpha).unwrap();
        assert!((kodaira_spencer(&hp, &moved, &v).unwrap() - ks).norm() < 1e-9);
    }
    let (model, hp) = samples::random_unobstructed_model(&mut rng);
    let zero = Series::new(1, 3, model.zero_endo());
    assert!(kodaira_spencer(&hp, &zero, &[c64(1.0, 0.0)]).unwrap().is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gauge_preserves_solutions(seed in any::<u64>(), vars in 1usize..=2) {
        let mut rng = samples::rng(seed);
        let (model, hp) = samples::random_unobstructed_model(&mut rng);
        let dgla = dgla_of(&model);
        let beta = random_harmonic_seed(&mut rng, &hp, vars, 5, false).scaled(c64(0.5, 0.0));
        let alpha = solve_kuranishi(&hp, &beta).unwrap().alpha;
        let u = random_gauge_series(&mut rng, &model, vars, 5, 0.3);
        let moved = gauge_act(&dgla, &u, &alpha).unwrap();
        prop_assert!(series_norm(&mc_residual(&dgla, &moved).unwrap()) < 1e-8);
    }
}
