//! Property-based invariants: the algebraic layer holds exactly under random
//! inputs, the potential layer obeys its homogeneity/monotonicity laws to 1e-10.

use ballkit::poly::{rat, ratq, MultiIndex, Polynomial};
use ballkit::potential::{
    cauchy_potential, energy, riesz_potential, wolff_exact, Atom, AtomicMeasure,
};
use ballkit::quad::SphereGrid;
use ballkit::spectral::OpAlgebra;
use ballkit::{C64, Coeff, Rat};
use proptest::prelude::*;

fn arb_rat() -> impl Strategy<Value = Rat> {
    (-9i64..=9, 1i64..=4).prop_map(|(p, q)| ratq(p, q))
}

fn arb_coeff() -> impl Strategy<Value = Coeff> {
    (arb_rat(), arb_rat()).prop_map(|(re, im)| Coeff::new(re, im))
}

fn arb_poly(n: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(
        (
            prop::collection::vec(0u32..=max_deg, n),
            arb_coeff(),
        ),
        1..=max_terms,
    )
    .prop_map(move |terms| {
        let mut p = Polynomial::zero(n);
        for (expo, c) in terms {
            let mut e = expo;
            // trim the total degree instead of rejecting
            while e.iter().sum::<u32>() > max_deg {
                let j = e.iter().position(|&v| v > 0).unwrap();
                e[j] -= 1;
            }
            p.add_term(MultiIndex(e), c);
        }
        p
    })
}

fn arb_measure(n: usize) -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec(
        (
            prop::collection::vec(-0.45f64..0.45, 2 * n),
            0.1f64..2.0,
        ),
        1..=4,
    )
    .prop_map(move |atoms| {
        AtomicMeasure::new(
            atoms
                .into_iter()
                .map(|(flat, mass)| Atom {
                    point: flat.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
                    mass,
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogeneous_parts_resum_exactly(f in arb_poly(4, 12, 10)) {
        let mut acc = Polynomial::zero(4);
        for (_, part) in f.homogeneous_parts() {
            acc = acc.add(&part).unwrap();
        }
        prop_assert_eq!(acc, f);
    }

    #[test]
    fn radial_derivative_is_a_derivation(
        f in arb_poly(3, 8, 8),
        g in arb_poly(3, 8, 8),
    ) {
        let lhs = f.multiply(&g).unwrap().radial_derivative();
        let rhs = f
            .multiply(&g.radial_derivative())
            .unwrap()
            .add(&g.multiply(&f.radial_derivative()).unwrap())
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn inverse_round_trips_exactly(
        f in arb_poly(2, 10, 8),
        nv in 1i64..=6,
        mv in 1i64..=6,
    ) {
        let alg = OpAlgebra::new(2);
        let p = alg.bergman(rat(nv), rat(mv)).unwrap();
        let t = alg.inverse_operator(rat(nv), rat(mv)).unwrap();
        let tp = alg.apply(&t, &alg.apply(&p, &f).unwrap()).unwrap();
        let pt = alg.apply(&p, &alg.apply(&t, &f).unwrap()).unwrap();
        prop_assert_eq!(&tp, &f);
        prop_assert_eq!(&pt, &f);
    }

    #[test]
    fn diagonal_action_commutes_with_homogeneous_parts(
        f in arb_poly(2, 9, 8),
        nv in 1i64..=4,
        mv in 1i64..=4,
    ) {
        let alg = OpAlgebra::new(2);
        let op = alg.bergman(rat(nv), rat(mv)).unwrap();
        let whole = alg.apply(&op, &f).unwrap();
        let mut acc = Polynomial::zero(2);
        for (_, part) in f.homogeneous_parts() {
            acc = acc.add(&alg.apply(&op, &part).unwrap()).unwrap();
        }
        prop_assert_eq!(acc, whole);
    }

    #[test]
    fn polynomial_json_round_trip(f in arb_poly(3, 7, 8)) {
        let text = serde_json::to_string(&f).unwrap();
        let back: Polynomial = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn potential_homogeneity_and_domination(mu in arb_measure(2), c in 0.5f64..4.0) {
        let z = vec![C64::new(0.35, 0.15), C64::new(-0.2, 0.1)];
        let i1 = riesz_potential(&mu, 2, 0.5, &z, None);
        let ic = riesz_potential(&mu.scale(c), 2, 0.5, &z, None);
        prop_assert!((ic - c * i1).abs() <= 1e-10 * ic.abs().max(1.0));

        // |C_s(μ)| ≤ I_s(μ) pointwise
        let cs = cauchy_potential(&mu, 2, 0.5, &z);
        prop_assert!(cs.norm() <= i1 * (1.0 + 1e-12));

        // W(cμ) = c^{p'−1} W(μ) with p = 2 away from the atoms
        let eta = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let w1 = wolff_exact(&mu, 2, 0.5, 2.0, &eta, None, 0.0, None);
        let wc = wolff_exact(&mu.scale(c), 2, 0.5, 2.0, &eta, None, 0.0, None);
        if w1.is_finite() {
            prop_assert!((wc - c * w1).abs() <= 1e-10 * wc.abs().max(1.0));
        }
    }

    #[test]
    fn potential_monotonicity_in_the_measure(mu in arb_measure(2), extra in 0.1f64..1.5) {
        // enlarge one atom: every functional grows
        let mut bigger = mu.clone();
        bigger.atoms[0].mass += extra;
        let z = vec![C64::new(0.25, -0.3), C64::new(0.1, 0.2)];
        prop_assert!(
            riesz_potential(&bigger, 2, 0.5, &z, None)
                >= riesz_potential(&mu, 2, 0.5, &z, None)
        );
        let eta = vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0)];
        prop_assert!(mu.ball_mass(&eta, 0.7) <= bigger.ball_mass(&eta, 0.7));
        let w_small = wolff_exact(&mu, 2, 0.5, 2.0, &eta, None, 0.0, None);
        let w_big = wolff_exact(&bigger, 2, 0.5, 2.0, &eta, None, 0.0, None);
        if w_small.is_finite() && w_big.is_finite() {
            prop_assert!(w_big + 1e-12 >= w_small);
        }
    }
}

#[test]
fn energy_scaling_on_a_grid() {
    // kept outside proptest: grid construction dominates the runtime
    let grid = SphereGrid::build(2, 8).unwrap();
    let mu = AtomicMeasure::new(vec![Atom {
        point: vec![C64::new(0.9, 0.0), C64::new(0.0, 0.3)],
        mass: 1.3,
    }])
    .unwrap();
    let e1 = energy(&mu, 2, 0.5, 2.0, &grid, Some(0.05));
    let e2 = energy(&mu.scale(2.0), 2, 0.5, 2.0, &grid, Some(0.05));
    assert!((e2 - 4.0 * e1).abs() < 1e-10 * e2);
}
