use oscex_core::exact1d::{exact_step, exact_step_damped, recurrence_step};
use oscex_core::exactnd::{nd_exact_step, nd_forced_step};
use oscex_core::geofamily::{
    check_reversibility, det2, family_matrix, mat2_mul, quadratic_invariant, FamilyParams,
    FamilyRule,
};
use oscex_core::locexact::{discrete_gradient_step, local_delta, DeltaPolicy, Potential};
use oscex_core::phasefun::phase_functions;
use oscex_core::{Forcing, Osc1DSpec, OscNDSpec, Phase1D, PhaseND, SquareMatrix};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn state_close(a: &Phase1D, b: &Phase1D, tol: f64) -> bool {
    close(a.x, b.x, tol) && close(a.v, b.v, tol)
}

fn nd_close(a: &PhaseND, b: &PhaseND, tol: f64) -> bool {
    a.x.iter().zip(&b.x).all(|(p, q)| close(*p, *q, tol))
        && a.v.iter().zip(&b.v).all(|(p, q)| close(*p, *q, tol))
}

prop_compose! {
    fn phase()(x in -2.0..2.0f64, v in -2.0..2.0f64) -> Phase1D {
        Phase1D::new(x, v, 0.0)
    }
}

prop_compose! {
    fn nonzero_step()(mag in 0.01..1.5f64, neg in any::<bool>()) -> f64 {
        if neg { -mag } else { mag }
    }
}

/// Square matrix `B Bᵀ/n + 0.1 I` from `n*n` entries in `[−1, 1]`.
fn spd(n: usize) -> impl Strategy<Value = SquareMatrix> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |b| {
        SquareMatrix::from_fn(n, |i, j| {
            let s: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
            s / n as f64 + if i == j { 0.1 } else { 0.0 }
        })
    })
}

fn nd_case(max_n: usize) -> impl Strategy<Value = (SquareMatrix, Vec<f64>, PhaseND)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            spd(n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
        )
            .prop_map(|(a, f, x, v)| (a, f, PhaseND::new(x, v, 0.0).unwrap()))
    })
}

proptest! {
    #[test]
    fn exact_maps_compose(s in phase(), w in 0.1..3.0f64, g in -1.0..1.0f64,
                          e1 in nonzero_step(), e2 in nonzero_step()) {
        prop_assume!((e1 + e2).abs() > 1e-6);
        for spec in [Osc1DSpec::free(w), Osc1DSpec::driven(w, g)] {
            let two = exact_step(exact_step(s, &spec, e1).unwrap(), &spec, e2).unwrap();
            let one = exact_step(s, &spec, e1 + e2).unwrap();
            prop_assert!(state_close(&two, &one, 1e-12));
        }
    }

    #[test]
    fn exact_maps_reverse(s in phase(), w in 0.1..3.0f64, g in -1.0..1.0f64, e in nonzero_step()) {
        let spec = Osc1DSpec::driven(w, g);
        let back = exact_step(exact_step(s, &spec, e).unwrap(), &spec, -e).unwrap();
        prop_assert!(state_close(&back, &s, 1e-12));
        let damped = Osc1DSpec::damped(w, 0.3 * w, g);
        let back = exact_step_damped(exact_step_damped(s, &damped, e).unwrap(), &damped, -e).unwrap();
        prop_assert!(state_close(&back, &s, 1e-12));
    }

    #[test]
    fn damped_maps_compose(s in phase(), w in 0.5..3.0f64, frac in 0.0..0.9f64, g in -1.0..1.0f64,
                           e1 in nonzero_step(), e2 in nonzero_step()) {
        prop_assume!((e1 + e2).abs() > 1e-6);
        let spec = Osc1DSpec::damped(w, frac * w, g);
        let two = exact_step_damped(exact_step_damped(s, &spec, e1).unwrap(), &spec, e2).unwrap();
        let one = exact_step_damped(s, &spec, e1 + e2).unwrap();
        prop_assert!(state_close(&two, &one, 1e-12));
    }

    #[test]
    fn recurrence_reproduces_exact_positions(s in phase(), w in 0.2..3.0f64, g in -1.0..1.0f64,
                                             e in 0.05..0.9f64) {
        let spec = Osc1DSpec::driven(w, g);
        let mut orbit = vec![s, exact_step(s, &spec, e).unwrap()];
        for k in 1..30 {
            orbit.push(exact_step(orbit[k], &spec, e).unwrap());
        }
        let (mut prev, mut cur) = (orbit[0].x, orbit[1].x);
        for exact in &orbit[2..] {
            let next = recurrence_step(cur, prev, &spec, e).unwrap();
            prop_assert!(close(next, exact.x, 1e-12));
            prev = cur;
            cur = next;
        }
    }

    #[test]
    fn nd_maps_compose_and_reverse((a, f, s) in nd_case(6), e1 in nonzero_step(), e2 in nonzero_step()) {
        prop_assume!((e1 + e2).abs() > 1e-6);
        let spec = OscNDSpec::constant(a, f).unwrap();
        let two = nd_exact_step(&nd_exact_step(&s, &spec, e1).unwrap(), &spec, e2).unwrap();
        let one = nd_exact_step(&s, &spec, e1 + e2).unwrap();
        prop_assert!(nd_close(&two, &one, 1e-11));
        let back = nd_exact_step(&nd_exact_step(&s, &spec, e1).unwrap(), &spec, -e1).unwrap();
        prop_assert!(nd_close(&back, &s, 1e-11));
    }

    #[test]
    fn forced_nd_maps_compose((a, f, s) in nd_case(4), alpha in -0.5..0.5f64,
                              e1 in nonzero_step(), e2 in nonzero_step()) {
        prop_assume!((e1 + e2).abs() > 1e-6);
        let forcing = Forcing::Exponential { f0: f, alpha };
        let spec = OscNDSpec::new(a, forcing).unwrap();
        let two = nd_forced_step(&nd_forced_step(&s, &spec, e1).unwrap(), &spec, e2).unwrap();
        let one = nd_forced_step(&s, &spec, e1 + e2).unwrap();
        prop_assert!(nd_close(&two, &one, 1e-11));
    }

    #[test]
    fn diagonal_nd_decouples(ws in prop::collection::vec(0.2..2.5f64, 1..5), e in nonzero_step(),
                             seed in prop::collection::vec(-1.0..1.0f64, 8)) {
        let n = ws.len();
        let a = SquareMatrix::diag(&ws.iter().map(|w| w * w).collect::<Vec<_>>());
        let f: Vec<f64> = (0..n).map(|i| seed[i]).collect();
        let s = PhaseND::new(seed[..n].to_vec(), seed[4..4 + n].to_vec(), 0.0).unwrap();
        let out = nd_exact_step(&s, &OscNDSpec::constant(a, f.clone()).unwrap(), e).unwrap();
        for i in 0..n {
            let one = exact_step(Phase1D::new(s.x[i], s.v[i], 0.0), &Osc1DSpec::driven(ws[i], f[i]), e).unwrap();
            prop_assert!(close(out.x[i], one.x, 1e-12) && close(out.v[i], one.v, 1e-12));
        }
    }

    #[test]
    fn phase_functions_parity((a, _, _) in nd_case(4), e in nonzero_step()) {
        let fwd = phase_functions(&a, e).unwrap();
        let back = phase_functions(&a, -e).unwrap();
        prop_assert!(fwd.c.max_abs_diff(&back.c) < 1e-13);
        prop_assert!(fwd.vers.max_abs_diff(&back.vers) < 1e-13);
        prop_assert!(fwd.s.max_abs_diff(&back.s.scale(-1.0)) < 1e-13);
    }

    #[test]
    fn family_determinant_is_one(alpha in 0.2..3.0f64, neg in any::<bool>(),
                                 beta in -3.0..3.0f64, gamma in -3.0..3.0f64) {
        let alpha = if neg { -alpha } else { alpha };
        let p = FamilyParams { alpha, beta, gamma, eps: 0.1 };
        let m = family_matrix(&p).unwrap();
        let size = m.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
        prop_assert!((det2(&m) - 1.0).abs() <= 4.0 * f64::EPSILON * size * size);
    }

    #[test]
    fn family_orbits_keep_quadratic_form(alpha in 0.5..2.0f64, beta in -1.0..1.0f64,
                                         gamma in -1.9..1.9f64, x in -1.0..1.0f64, p in -1.0..1.0f64) {
        // |γ| < 2 keeps orbits bounded
        let params = FamilyParams { alpha, beta, gamma, eps: 0.1 };
        let a = family_matrix(&params).unwrap();
        let (mut x0, mut p0) = (x, p);
        let mut x1 = a[0][0] * x0 + a[0][1] * p0;
        let q0 = quadratic_invariant(x0, x1, gamma);
        for _ in 0..1000 {
            let p1 = a[1][0] * x0 + a[1][1] * p0;
            x0 = x1;
            p0 = p1;
            x1 = a[0][0] * x0 + a[0][1] * p0;
            prop_assert!((quadratic_invariant(x0, x1, gamma) - q0).abs() < 1e-11);
        }
    }

    #[test]
    fn reversible_rules_invert(m in 0.2..3.0f64, w in 0.2..3.0f64, e in 0.05..0.9f64) {
        for rule in [FamilyRule::exact(m, w), FamilyRule::symmetric_euler(m, w)] {
            let rep = check_reversibility(&rule, e).unwrap();
            prop_assert!(rep.reversible);
            let prod = mat2_mul(&family_matrix(&rule.params(-e)).unwrap(),
                                &family_matrix(&rule.params(e)).unwrap());
            let size = family_matrix(&rule.params(e)).unwrap().iter().flatten()
                .fold(1.0f64, |s, v| s.max(v.abs()));
            prop_assert!((prod[0][0] - 1.0).abs() < 1e-12 * size * size);
            prop_assert!(prod[0][1].abs() < 1e-12 * size * size);
            prop_assert!(prod[1][0].abs() < 1e-12 * size * size);
            prop_assert!((prod[1][1] - 1.0).abs() < 1e-12 * size * size);
        }
    }

    #[test]
    fn midpoint_discrete_gradient_reverses(x in -2.0..2.0f64, v in -1.0..1.0f64, e in 0.02..0.4f64) {
        let pot = Potential::pendulum(1.0);
        let s = Phase1D::new(x, v, 0.0);
        let fwd = discrete_gradient_step(s, &pot, e, DeltaPolicy::LocalAtMidpoint).unwrap();
        let back = discrete_gradient_step(fwd, &pot, -e, DeltaPolicy::LocalAtMidpoint).unwrap();
        prop_assert!(state_close(&back, &s, 1e-10));
    }

    #[test]
    fn discrete_gradient_conserves_energy(x in -2.5..2.5f64, v in -1.0..1.0f64,
                                          kappa in 0.0..1.0f64, e in 0.02..0.3f64) {
        for pot in [Potential::pendulum(1.0), Potential::quartic(1.0, kappa)] {
            for policy in [DeltaPolicy::StandardEps, DeltaPolicy::LocalAtXn, DeltaPolicy::LocalAtMidpoint] {
                let mut s = Phase1D::new(x, v, 0.0);
                let e0 = pot.energy(&s);
                for _ in 0..200 {
                    s = discrete_gradient_step(s, &pot, e, policy).unwrap();
                }
                prop_assert!((pot.energy(&s) - e0).abs() < 1e-12 * e0.abs().max(1.0));
            }
        }
    }

    #[test]
    fn local_delta_is_consistent(w2 in -4.0..4.0f64, xbar in -1.0..1.0f64) {
        let pot = Potential::quadratic(w2, 0.3);
        // δ(ε)/ε = 1 + O(ε²): Richardson over ε and ε/2 removes the ε² term
        let r = |e: f64| local_delta(&pot, xbar, e).unwrap() / e;
        let (e1, e2) = (1e-2, 5e-3);
        let limit = (4.0 * r(e2) - r(e1)) / 3.0;
        prop_assert!((limit - 1.0).abs() < 1e-8);
    }
}
