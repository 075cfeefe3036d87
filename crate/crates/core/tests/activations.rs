mod common;

use lipcert::activations::{
    builtin, catalog, certify_averagedness, certify_vector_averagedness, check_prox_representable,
    estimate_averagedness, gaussian_alpha, geman_mcclure_mu, prox_of_potential,
    verify_prox_representation, AlphaEstimate, ProjectionSet, SamplingPlan, VectorActivation,
};
use lipcert::rng;
use lipcert::{LipError, Matrix};
use proptest::prelude::*;

fn wide_plan(seed: u64) -> SamplingPlan {
    SamplingPlan::new(-20.0, 20.0, 10_000, seed)
}

#[test]
fn every_catalog_entry_certifies_at_its_declared_alpha() {
    for act in catalog() {
        for seed in [0, 1, 2] {
            let rep = certify_averagedness(&act, act.alpha(), &wide_plan(seed)).unwrap();
            assert!(rep.pass, "{} at α={}: {rep:?}", act.name(), act.alpha());
            assert_eq!(rep.seed, seed);
        }
    }
}

#[test]
fn every_potential_reproduces_its_activation() {
    let mut seen = 0;
    for act in catalog() {
        if act.potential().is_none() {
            continue;
        }
        seen += 1;
        let rep = verify_prox_representation(&act, &SamplingPlan::new(-5.0, 5.0, 2001, 0)).unwrap();
        assert!(
            rep.pass && rep.max_abs_gap <= 1e-6,
            "{}: {rep:?}",
            act.name()
        );
    }
    assert!(seen >= 8);
}

#[test]
fn estimates_never_exceed_declared_constants() {
    let fine = SamplingPlan::new(-20.0, 20.0, 200_000, 3);
    for act in catalog() {
        match estimate_averagedness(&act, &fine).unwrap() {
            AlphaEstimate::Averaged(a) => {
                assert!(
                    a <= act.alpha() + 0.02,
                    "{}: {a} > {}",
                    act.name(),
                    act.alpha()
                );
                if matches!(act.name(), "swish" | "elish" | "gaussian") {
                    // Rounded constants must still dominate the estimate.
                    assert!(a <= act.alpha(), "{}: {a} > {}", act.name(), act.alpha());
                }
            }
            other => panic!("{} is nonexpansive, got {other:?}", act.name()),
        }
    }
}

#[test]
fn smooth_constants_are_nearly_tight() {
    let fine = SamplingPlan::new(-20.0, 20.0, 200_000, 4);
    for (name, declared) in [
        ("swish", 0.546),
        ("elish", 0.536),
        ("gaussian", gaussian_alpha()),
    ] {
        let act = builtin(name, &[]).unwrap();
        assert_eq!(act.alpha(), declared);
        let AlphaEstimate::Averaged(a) = estimate_averagedness(&act, &fine).unwrap() else {
            panic!("{name} flagged expansive");
        };
        assert!(
            declared - a < 2e-3,
            "{name}: estimate {a} far below {declared}"
        );
    }
}

#[test]
fn gaussian_constant_matches_closed_form() {
    let want = (1.0 + (2.0 / std::f64::consts::E).sqrt()) / 2.0;
    assert!((gaussian_alpha() - want).abs() < 1e-15);
    assert!((want - 0.928_882).abs() < 1e-6);
}

#[test]
fn prox_representable_flags_agree_with_sampling() {
    let plan = wide_plan(7);
    for act in catalog() {
        assert_eq!(
            check_prox_representable(&act, &plan).unwrap(),
            act.prox_representable(),
            "{}",
            act.name()
        );
    }
}

#[test]
fn capped_relu_prox_is_a_clamp() {
    let beta = 2.0;
    let phi = |u: f64| {
        if (0.0..=beta).contains(&u) {
            0.0
        } else {
            f64::INFINITY
        }
    };
    for x in [-3.0, -0.0, 0.7, 1.999, 2.0, 5.0, 1e6] {
        let p = prox_of_potential(phi, (0.0, beta), x).unwrap();
        assert!((p - x.clamp(0.0, beta)).abs() <= 1e-10, "{x}: {p}");
    }
}

#[test]
fn geman_mcclure_potential_is_convex_on_its_domain() {
    let pot = builtin("geman_mcclure", &[]).unwrap().potential().unwrap();
    let (lo, hi) = pot.domain();
    let n = 400;
    let pts: Vec<f64> = (1..n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    for w in pts.windows(3) {
        let mid = pot.value(w[1]);
        let chord = (pot.value(w[0]) + pot.value(w[2])) / 2.0;
        assert!(mid <= chord + 1e-12, "not convex near {}", w[1]);
    }
}

#[test]
fn squashing_matches_closed_form() {
    let mu = geman_mcclure_mu();
    let act = VectorActivation::squashing(mu, 2).unwrap();
    let y = act.eval(&[1.0, 0.0]).unwrap();
    assert!((y[0] - 0.769_800_358_919_501).abs() < 1e-12);
    assert_eq!(y[1], 0.0);
    // Radial profile equals the Geman–McClure scalar.
    let gm = builtin("geman_mcclure", &[]).unwrap();
    for r in [0.1, 0.5, 2.0, 7.0] {
        let y = act.eval(&[0.6 * r, -0.8 * r]).unwrap();
        let norm = (y[0] * y[0] + y[1] * y[1]).sqrt();
        assert!((norm - gm.eval(r)).abs() < 1e-12);
    }
}

#[test]
fn vector_examples_certify() {
    let sort = VectorActivation::sort_mix(1.0, ProjectionSet::Mean, 5).unwrap();
    assert!(
        certify_vector_averagedness(&sort, 1.0, 2000, 0)
            .unwrap()
            .pass
    );
    let sq = VectorActivation::squashing(geman_mcclure_mu(), 4).unwrap();
    assert!(certify_vector_averagedness(&sq, 0.5, 2000, 0).unwrap().pass);
    let med = VectorActivation::median(vec![0.5, 0.5], 0.0).unwrap();
    assert_eq!(med.alpha(), 0.75);
    assert!(
        certify_vector_averagedness(&med, 0.75, 2000, 0)
            .unwrap()
            .pass
    );
}

#[test]
fn vector_certification_catches_understated_alpha() {
    let sort = VectorActivation::sort_mix(1.0, ProjectionSet::Mean, 3).unwrap();
    assert!(
        !certify_vector_averagedness(&sort, 0.6, 2000, 0)
            .unwrap()
            .pass
    );
    let relu = VectorActivation::separable(builtin("relu", &[]).unwrap(), 3).unwrap();
    assert!(
        !certify_vector_averagedness(&relu, 0.3, 2000, 0)
            .unwrap()
            .pass
    );
}

#[test]
fn alpha_zero_only_fits_identity() {
    let id = VectorActivation::identity(3);
    assert!(certify_vector_averagedness(&id, 0.0, 50, 0).unwrap().pass);
    let relu = VectorActivation::separable(builtin("relu", &[]).unwrap(), 3).unwrap();
    assert!(matches!(
        certify_vector_averagedness(&relu, 0.0, 50, 0),
        Err(LipError::InvalidInput(_))
    ));
}

#[test]
fn every_catalog_vector_kind_certifies_at_its_alpha() {
    let mut r = common::gen(11, 0);
    for _ in 0..60 {
        let n = common::int(&mut r, 1, 6);
        let act = common::random_activation(&mut r, n, false);
        let rep = certify_vector_averagedness(&act, act.alpha().max(1e-3), 600, 5).unwrap();
        assert!(rep.pass, "{act:?}: {rep:?}");
    }
}

#[test]
fn conjugated_activation_keeps_alpha() {
    let (c, s) = (0.6, 0.8);
    let u = Matrix::new(2, 2, vec![c, -s, s, c]).unwrap();
    let inner = VectorActivation::separable(builtin("tanh", &[]).unwrap(), 2).unwrap();
    let act = VectorActivation::conjugated(u, inner).unwrap();
    assert!(!act.is_separable());
    assert_eq!(act.alpha(), 0.5);
    assert!(
        certify_vector_averagedness(&act, 0.5, 2000, 1)
            .unwrap()
            .pass
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn separable_eval_commutes_with_permutations(seed in any::<u64>(), n in 1usize..9) {
        let mut r = common::gen(seed, 0);
        let act = VectorActivation::separable(common::random_scalar(&mut r), n).unwrap();
        let x: Vec<f64> = rng::normal_vec(&mut r, n).iter().map(|v| 3.0 * v).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, common::int(&mut r, 0, i));
        }
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let y = act.eval(&x).unwrap();
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        prop_assert_eq!(act.eval(&px).unwrap(), py);
    }

    /// Coordinatewise difference quotients of a separable averaged map lie in
    /// `[1 − 2α, 1]`, so `Rx − Ry = Λ(x − y)` with such a diagonal `Λ`.
    #[test]
    fn differences_factor_through_a_bounded_diagonal(seed in any::<u64>(), n in 1usize..7) {
        let mut r = common::gen(seed, 1);
        let act = common::random_activation(&mut r, n, true);
        let comps = act.components().unwrap().to_vec();
        let x: Vec<f64> = rng::normal_vec(&mut r, n).iter().map(|v| 4.0 * v).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng::normal(&mut r)).collect();
        let (rx, ry) = (act.eval(&x).unwrap(), act.eval(&y).unwrap());
        for k in 0..n {
            if x[k] == y[k] {
                continue;
            }
            let a = comps[k].alpha();
            let lam = (rx[k] - ry[k]) / (x[k] - y[k]);
            prop_assert!(lam >= 1.0 - 2.0 * a - 1e-9 && lam <= 1.0 + 1e-9, "{} λ={lam}", comps[k].name());
            let rebuilt = ry[k] + lam * (x[k] - y[k]);
            prop_assert!((rebuilt - rx[k]).abs() <= 1e-9 * (1.0 + rx[k].abs()));
        }
    }

    #[test]
    fn sort_mix_extremes(seed in any::<u64>(), n in 1usize..9) {
        let mut r = common::gen(seed, 2);
        let x: Vec<f64> = rng::normal_vec(&mut r, n);
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        for set in [ProjectionSet::Mean, ProjectionSet::Box] {
            prop_assert_eq!(VectorActivation::sort_mix(1.0, set, n).unwrap().eval(&x).unwrap(), sorted.clone());
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        let avg = VectorActivation::sort_mix(0.0, ProjectionSet::Mean, n).unwrap().eval(&x).unwrap();
        for v in avg {
            prop_assert!((v - mean).abs() <= 1e-15 * (1.0 + mean.abs()));
        }
        let boxed = VectorActivation::sort_mix(0.0, ProjectionSet::Box, n).unwrap().eval(&x).unwrap();
        let clamped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        prop_assert_eq!(boxed, clamped);
    }

    #[test]
    fn geman_mcclure_closed_form(x in -50.0f64..50.0) {
        let mu = 8.0 / (3.0 * 3f64.sqrt());
        let want = mu * x.signum() * x * x / (1.0 + x * x);
        let got = builtin("geman_mcclure", &[]).unwrap().eval(x);
        prop_assert!((got - want).abs() <= 1e-14 * (1.0 + want.abs()));
    }

    #[test]
    fn elu_prox_tracks_eval(x in -8.0f64..8.0, beta in 0.05f64..=1.0) {
        let act = builtin("elu", &[("beta".to_string(), beta)]).unwrap();
        let p = act.potential().unwrap().relaxed_prox(x).unwrap();
        prop_assert!((p - act.eval(x)).abs() <= 1e-6);
    }
}
