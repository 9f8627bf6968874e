use oscex_core::harness::{
    compare, parse, run, serialize, write_trajectory, GeoRule, OutputFormat, Reference, RunConfig,
    StepSpec, StepperKind,
};
use oscex_core::locexact::DeltaPolicy;
use oscex_core::OscError;
use serde_json::json;

fn steppers() -> Vec<StepperKind> {
    let mut out = vec![
        StepperKind::ExactFree,
        StepperKind::ExactDriven,
        StepperKind::ExactDamped,
        StepperKind::ExactND,
        StepperKind::TrapezoidForm,
        StepperKind::Recurrence,
        StepperKind::GeoFamily {
            rule: GeoRule::Exact,
        },
        StepperKind::GeoFamily {
            rule: GeoRule::SymmetricEuler,
        },
        StepperKind::Gautschi,
        StepperKind::LawsonExplicit,
        StepperKind::LawsonImplicit,
        StepperKind::ExponentialEuler,
        StepperKind::SymmetricEuler,
    ];
    for policy in [
        DeltaPolicy::StandardEps,
        DeltaPolicy::LocalAtXn,
        DeltaPolicy::LocalAtMidpoint,
    ] {
        out.push(StepperKind::DiscreteGradient { policy });
    }
    out
}

fn problems() -> Vec<(&'static str, serde_json::Value, Option<serde_json::Value>)> {
    vec![
        (
            "osc1d",
            json!({"omega": 1.3}),
            Some(json!({"x": 0.5, "v": -0.2})),
        ),
        (
            "osc1d",
            json!({"omega": 1.3, "g": 0.4}),
            Some(json!({"x": 0.5, "v": -0.2})),
        ),
        (
            "damped1d",
            json!({"omega": 2.0, "gamma": 0.5, "g": 1.0}),
            Some(json!({"x": 0.3, "v": 0.2})),
        ),
        (
            "osc_nd",
            json!({"a": [[2.0, 0.3], [0.3, 1.0]], "forcing": {"type": "constant", "a": [0.1, -0.2]}}),
            None,
        ),
        (
            "osc_nd",
            json!({"a": [[1.0, 0.0], [0.0, 5.0]], "forcing": {"type": "sinusoidal", "f0": [1.0, 0.0], "omega_f": 2.0}}),
            None,
        ),
        (
            "kepler",
            json!({"m": 1.0, "k": 1.0, "l": 1.0, "u0": 1.5, "du0": 0.0}),
            None,
        ),
        (
            "wave",
            json!({"a": 0.5, "modes": [{"k": 1.0, "u0": [1.0, 0.0], "udot0": [0.0, 0.3]}]}),
            None,
        ),
        (
            "nonlinear1d",
            json!({"potential": {"type": "pendulum"}}),
            Some(json!({"x": 0.8, "v": 0.0})),
        ),
        (
            "nonlinear1d",
            json!({"potential": {"type": "quartic", "omega2": 4.0, "kappa": 0.5}}),
            Some(json!({"x": 0.4, "v": 0.1})),
        ),
    ]
}

fn config(
    problem: &str,
    spec: &serde_json::Value,
    init: &Option<serde_json::Value>,
    stepper: StepperKind,
) -> RunConfig {
    let mut value = json!({
        "problem": problem,
        "spec": spec,
        "stepper": serde_json::to_value(stepper).unwrap(),
        "eps": 0.05,
        "steps": 40,
        "seed": 9,
    });
    if let Some(init) = init {
        value["initial"] = init.clone();
    }
    RunConfig::from_json(&value.to_string()).unwrap()
}

#[test]
fn every_pairing_validates_or_runs() {
    for (problem, spec, init) in problems() {
        let mut ran = 0;
        for stepper in steppers() {
            let c = config(problem, &spec, &init, stepper);
            match c.validate() {
                Ok(()) => {
                    let out =
                        run(&c).unwrap_or_else(|e| panic!("{problem} / {}: {e}", stepper.label()));
                    assert_eq!(out.trajectory.len(), 41, "{problem} / {}", stepper.label());
                    assert!(out.trajectory.rows.iter().all(|r| r
                        .x
                        .iter()
                        .chain(&r.v)
                        .all(|c| c.is_finite())));
                    ran += 1;
                }
                Err(e) => {
                    assert!(
                        matches!(e, OscError::Config(_)),
                        "{problem} / {}: {e}",
                        stepper.label()
                    );
                    assert!(run(&c).is_err());
                }
            }
        }
        assert!(ran > 0, "{problem} has no applicable stepper");
    }
}

#[test]
fn runs_are_deterministic() {
    for (problem, spec, _) in problems() {
        for stepper in steppers() {
            let c = config(problem, &spec, &None, stepper);
            if c.validate().is_err() || matches!(problem, "kepler" | "wave") {
                continue;
            }
            let a = run(&c).unwrap();
            let b = run(&c).unwrap();
            assert_eq!(
                serialize(&a.trajectory, OutputFormat::Csv),
                serialize(&b.trajectory, OutputFormat::Csv),
                "{problem} / {}",
                stepper.label()
            );
        }
    }
}

#[test]
fn written_trajectories_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let (problem, spec, init) = &problems()[3];
    let out = run(&config(problem, spec, init, StepperKind::ExactND)).unwrap();
    for (format, name) in [
        (OutputFormat::Csv, "t.csv"),
        (OutputFormat::JsonLines, "t.jsonl"),
    ] {
        let path = dir.path().join(name);
        write_trajectory(&out.trajectory, format, &path).unwrap();
        let back = parse(&std::fs::read_to_string(&path).unwrap(), format).unwrap();
        assert_eq!(back, out.trajectory);
    }
    let missing = dir.path().join("no/such/dir/t.csv");
    let err = write_trajectory(&out.trajectory, OutputFormat::Csv, &missing).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn comparison_orders_the_schemes() {
    let (problem, spec, init) = &problems()[1];
    let configs: Vec<RunConfig> = [
        StepperKind::ExactDriven,
        StepperKind::SymmetricEuler,
        StepperKind::LawsonExplicit,
    ]
    .into_iter()
    .map(|s| {
        let mut c = config(problem, spec, init, s);
        c.eps = StepSpec::Constant(0.1);
        c.steps = 20;
        c
    })
    .collect();
    let sweep = [0.1, 0.05, 0.025, 0.0125, 0.00625];
    let table = compare(&configs, Reference::Analytic, Some(&sweep)).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(table.rows[0].error < 1e-12);
    let order = |i: usize| table.rows[i].order.unwrap();
    assert!((order(1) - 2.0).abs() < 0.15, "{}", order(1));
    assert!((order(2) - 1.0).abs() < 0.15, "{}", order(2));
    assert!(table
        .to_csv()
        .starts_with("stepper,steps,error,energy_drift,order\n"));
}
