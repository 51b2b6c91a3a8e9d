use cohesive_core::base::{Axiom, BasisElement};
use cohesive_core::graded::c64;
use cohesive_core::samples;
use cohesive_core::{BaseAlgebra, Monomial, ParameterAlgebra, C64};
use proptest::prelude::*;
use rand::Rng;

type Vector = nalgebra::DVector<C64>;

fn distance(a: &Vector, b: &Vector) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ∂̄κ + κ∂̄ + P₀ applied to x.
fn homotopy_sum(p: &ParameterAlgebra, x: &Vector) -> Vector {
    let kx = p.dbar_homotopy(x).unwrap();
    p.dbar(&kx) + p.dbar_homotopy(&p.dbar(x)).unwrap() + p.holomorphic_part(x)
}

#[test]
fn homotopy_identity_on_every_monomial() {
    for vars in 1..=2 {
        for order in 1..=4 {
            let p = ParameterAlgebra::new(vars, order, true).unwrap();
            assert!(p.base().validate().passed());
            for r in 0..p.dim() {
                let e = p.base().basis_vector(r);
                assert!(distance(&homotopy_sum(&p, &e), &e) < 1e-12, "m={vars}, N={order}, monomial {r}");
            }
        }
    }
}

#[test]
fn contraction_integrates_in_one_variable() {
    // κ(t^b t̄^a dt̄) = t^b t̄^{a+1}/(a+1), the integral of s^a ds from 0 to t̄.
    let p = ParameterAlgebra::new(1, 4, true).unwrap();
    let index = |t: u32, tb: u32, dt: u32| p.index_of(&Monomial { t: vec![t], tbar: vec![tb], dtbar: dt });
    for b in 0..4u32 {
        for a in 0..4u32 {
            let Some(src) = index(b, a, 1) else { continue };
            let out = p.dbar_homotopy(&p.base().basis_vector(src)).unwrap();
            let mut expected = Vector::zeros(p.dim());
            if let Some(tgt) = index(b, a + 1, 0) {
                expected[tgt] = c64(1.0 / (a as f64 + 1.0), 0.0);
            }
            assert!(distance(&out, &expected) < 1e-15, "t^{b} t̄^{a} dt̄");
        }
    }
}

#[test]
fn holomorphic_subalgebra_is_the_dbar_kernel_on_t_only_monomials() {
    let p = ParameterAlgebra::new(2, 3, true).unwrap();
    for r in 0..p.dim() {
        let m = p.monomial(r).clone();
        let e = p.base().basis_vector(r);
        let closed = p.dbar(&e).iter().all(|z| z.norm() == 0.0);
        if m.dtbar == 0 && m.tbar.iter().all(|&x| x == 0) {
            assert!(closed);
        }
        if m.dtbar == 0 && m.tbar.iter().any(|&x| x > 0) {
            assert!(!closed);
        }
    }
}

#[test]
fn perturbed_tables_fail_associativity() {
    let mut rng = samples::rng(21);
    let good = BaseAlgebra::exterior(3).unwrap();
    for _ in 0..10 {
        let n = good.dim();
        let mut products = Vec::new();
        for r in 0..n {
            for s in 0..n {
                for &(u, c) in good.product(r, s) {
                    let noise = if r != good.unit() && s != good.unit() { rng.gen_range(-1e-3..1e-3) } else { 0.0 };
                    products.push((r, s, u, c * (1.0 + noise)));
                }
            }
        }
        let basis: Vec<BasisElement> = good.basis().to_vec();
        let bad = BaseAlgebra::new(basis, good.unit(), products, []).unwrap();
        let report = bad.validate();
        assert!(!report.passed());
        let assoc = report.check(Axiom::Associativity);
        assert!(assoc.worst > 1e-6, "worst {}", assoc.worst);
        assert!(assoc.witness.is_some());
    }
}

#[test]
fn tensor_products_satisfy_all_axioms() {
    let a = BaseAlgebra::exterior(2).unwrap();
    let p = ParameterAlgebra::new(1, 3, true).unwrap();
    let t = BaseAlgebra::tensor(&a, p.base());
    assert_eq!(t.dim(), a.dim() * p.dim());
    assert!(t.validate().passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homotopy_identity_on_random_elements(seed in any::<u64>(), vars in 1usize..=2, order in 1usize..=4) {
        let p = ParameterAlgebra::new(vars, order, true).unwrap();
        let mut rng = samples::rng(seed);
        let x = Vector::from_fn(p.dim(), |_, _| samples::random_complex(&mut rng));
        prop_assert!(distance(&homotopy_sum(&p, &x), &x) < 1e-12);
        prop_assert!(distance(&p.dbar(&p.dbar(&x)), &Vector::zeros(p.dim())) < 1e-12);
    }

    #[test]
    fn exterior_algebras_pass_all_axioms(g in 1usize..=5) {
        prop_assert!(BaseAlgebra::exterior(g).unwrap().validate().passed());
    }
}
