use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::apps::{KeplerSpec, WaveSpec};
use crate::error::{OscError, Result};
use crate::exact1d::Osc1DSpec;
use crate::exactnd::OscNDSpec;
use crate::locexact::{DeltaPolicy, PotentialSpec};

/// Default tolerance for the energy-conservation flag in run summaries.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Diagnostic tolerance, overridable with the `OSCEX_TOL` environment
/// variable.
pub fn diagnostic_tolerance() -> Result<f64> {
    match std::env::var("OSCEX_TOL") {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| {
                OscError::Config(format!("OSCEX_TOL must be a positive number, got {s:?}"))
            }),
        Err(_) => Ok(DEFAULT_TOL),
    }
}

/// Problem name as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "osc1d")]
    Osc1d,
    #[serde(rename = "damped1d")]
    Damped1d,
    #[serde(rename = "oscNd", alias = "osc_nd")]
    OscNd,
    #[serde(rename = "kepler")]
    Kepler,
    #[serde(rename = "wave")]
    Wave,
    #[serde(rename = "nonlinear1d")]
    Nonlinear1d,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Osc1d => "osc1d",
            ProblemKind::Damped1d => "damped1d",
            ProblemKind::OscNd => "oscNd",
            ProblemKind::Kepler => "kepler",
            ProblemKind::Wave => "wave",
            ProblemKind::Nonlinear1d => "nonlinear1d",
        }
    }
}

/// `ẍ = −Φ′(x)` for one of the built-in potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinear1DSpec {
    pub potential: PotentialSpec,
}

/// Problem definition matching [`ProblemKind`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Osc1d(Osc1DSpec),
    Damped1d(Osc1DSpec),
    OscNd(OscNDSpec),
    Kepler(KeplerSpec),
    Wave(WaveSpec),
    Nonlinear1d(Nonlinear1DSpec),
}

impl ProblemSpec {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemSpec::Osc1d(_) => ProblemKind::Osc1d,
            ProblemSpec::Damped1d(_) => ProblemKind::Damped1d,
            ProblemSpec::OscNd(_) => ProblemKind::OscNd,
            ProblemSpec::Kepler(_) => ProblemKind::Kepler,
            ProblemSpec::Wave(_) => ProblemKind::Wave,
            ProblemSpec::Nonlinear1d(_) => ProblemKind::Nonlinear1d,
        }
    }

    fn parse(kind: ProblemKind, value: Value) -> Result<Self> {
        fn de<T: serde::de::DeserializeOwned>(kind: ProblemKind, v: Value) -> Result<T> {
            serde_json::from_value(v)
                .map_err(|e| OscError::Config(format!("invalid {} spec: {e}", kind.name())))
        }
        Ok(match kind {
            ProblemKind::Osc1d => ProblemSpec::Osc1d(de(kind, value)?),
            ProblemKind::Damped1d => ProblemSpec::Damped1d(de(kind, value)?),
            ProblemKind::OscNd => ProblemSpec::OscNd(de(kind, value)?),
            ProblemKind::Kepler => ProblemSpec::Kepler(de(kind, with_run_defaults(value, "dphi"))?),
            ProblemKind::Wave => ProblemSpec::Wave(de(kind, with_run_defaults(value, "dt"))?),
            ProblemKind::Nonlinear1d => ProblemSpec::Nonlinear1d(de(kind, value)?),
        })
    }

    fn to_value(&self) -> Value {
        let v = match self {
            ProblemSpec::Osc1d(s) | ProblemSpec::Damped1d(s) => serde_json::to_value(s),
            ProblemSpec::OscNd(s) => serde_json::to_value(s),
            ProblemSpec::Kepler(s) => serde_json::to_value(s),
            ProblemSpec::Wave(s) => serde_json::to_value(s),
            ProblemSpec::Nonlinear1d(s) => serde_json::to_value(s),
        };
        v.expect("spec types serialize infallibly")
    }

    /// State dimension `n` of the rows of a trajectory.
    pub fn state_dim(&self) -> usize {
        match self {
            ProblemSpec::OscNd(s) => s.dim(),
            ProblemSpec::Wave(s) => 2 * s.modes.len(),
            _ => 1,
        }
    }
}

/// The step size and count of Kepler and wave specs come from the run
/// config, so they may be omitted from the spec object.
fn with_run_defaults(mut value: Value, step_field: &str) -> Value {
    if let Value::Object(map) = &mut value {
        map.entry(step_field).or_insert(Value::from(0.0));
        map.entry("steps").or_insert(Value::from(0u64));
    }
    value
}

/// Named member of the symplectic map family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoRule {
    Exact,
    SymmetricEuler,
}

/// Which scheme advances the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepperKind {
    ExactFree,
    ExactDriven,
    ExactDamped,
    #[serde(rename = "exact_nd")]
    ExactND,
    TrapezoidForm,
    Recurrence,
    GeoFamily {
        rule: GeoRule,
    },
    Gautschi,
    LawsonExplicit,
    LawsonImplicit,
    ExponentialEuler,
    SymmetricEuler,
    DiscreteGradient {
        policy: DeltaPolicy,
    },
}

impl StepperKind {
    /// Short label used in tables.
    pub fn label(&self) -> String {
        match self {
            StepperKind::ExactFree => "exact_free".into(),
            StepperKind::ExactDriven => "exact_driven".into(),
            StepperKind::ExactDamped => "exact_damped".into(),
            StepperKind::ExactND => "exact_nd".into(),
            StepperKind::TrapezoidForm => "trapezoid_form".into(),
            StepperKind::Recurrence => "recurrence".into(),
            StepperKind::GeoFamily { rule } => format!("geo_family({rule:?})").to_lowercase(),
            StepperKind::Gautschi => "gautschi".into(),
            StepperKind::LawsonExplicit => "lawson_explicit".into(),
            StepperKind::LawsonImplicit => "lawson_implicit".into(),
            StepperKind::ExponentialEuler => "exponential_euler".into(),
            StepperKind::SymmetricEuler => "symmetric_euler".into(),
            StepperKind::DiscreteGradient { policy } => {
                let p = match policy {
                    DeltaPolicy::StandardEps => "standard_eps",
                    DeltaPolicy::LocalAtXn => "local_at_xn",
                    DeltaPolicy::LocalAtMidpoint => "local_at_midpoint",
                };
                format!("discrete_gradient({p})")
            }
        }
    }

    /// Two-step schemes that need a constant step.
    pub fn is_two_step(&self) -> bool {
        matches!(
            self,
            StepperKind::Recurrence | StepperKind::Gautschi | StepperKind::SymmetricEuler
        )
    }

    /// Exact one-step maps accept negative steps.
    pub fn allows_negative_step(&self) -> bool {
        matches!(
            self,
            StepperKind::ExactFree
                | StepperKind::ExactDriven
                | StepperKind::ExactDamped
                | StepperKind::ExactND
                | StepperKind::TrapezoidForm
        )
    }

    /// Whether the stepper can run on `problem` at all.
    pub fn supports(&self, problem: ProblemKind) -> bool {
        use ProblemKind as P;
        use StepperKind as S;
        match (self, problem) {
            (S::ExactFree | S::ExactDriven | S::TrapezoidForm | S::GeoFamily { .. }, P::Osc1d) => {
                true
            }
            (S::Recurrence | S::Gautschi | S::SymmetricEuler, P::Osc1d) => true,
            (S::DiscreteGradient { .. }, P::Osc1d | P::Nonlinear1d) => true,
            (
                S::LawsonExplicit | S::LawsonImplicit | S::ExponentialEuler,
                P::Osc1d | P::Damped1d | P::OscNd | P::Nonlinear1d,
            ) => true,
            (S::ExactDamped, P::Damped1d) => true,
            (S::ExactND | S::TrapezoidForm | S::Recurrence, P::OscNd) => true,
            (S::ExactDriven, P::Kepler) => true,
            (S::Recurrence, P::Wave) => true,
            (S::Gautschi, P::Nonlinear1d) => true,
            _ => false,
        }
    }
}

/// Constant step or an explicit per-step sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl StepSpec {
    /// Step used to leave node `n`; the last step is reused past the end.
    pub fn at(&self, n: usize) -> f64 {
        match self {
            StepSpec::Constant(e) => *e,
            StepSpec::Sequence(v) => v[n.min(v.len() - 1)],
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            StepSpec::Constant(e) => Some(*e),
            StepSpec::Sequence(v) => {
                let first = *v.first()?;
                v.iter().all(|&e| e == first).then_some(first)
            }
        }
    }

    /// `Σ εₙ` over the first `steps` steps.
    pub fn horizon(&self, steps: usize) -> f64 {
        (0..steps).map(|n| self.at(n)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Trajectory,
    Energies,
    Summary,
}

/// Scalar or vector state components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Components {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Components {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Components::Scalar(x) => vec![*x],
            Components::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub x: Components,
    pub v: Components,
    #[serde(default)]
    pub t: f64,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![
        OutputKind::Trajectory,
        OutputKind::Energies,
        OutputKind::Summary,
    ]
}

/// On-disk representation of [`RunConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    problem: ProblemKind,
    spec: Value,
    stepper: Value,
    eps: StepSpec,
    steps: usize,
    #[serde(default = "default_outputs")]
    outputs: Vec<OutputKind>,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<InitialState>,
}

/// A single run: problem, stepper, step sizes and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRunConfig", into = "RawRunConfig")]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub stepper: StepperKind,
    pub eps: StepSpec,
    pub steps: usize,
    pub outputs: Vec<OutputKind>,
    /// Seeds the random initial state when `initial` is absent.
    pub seed: u64,
    pub initial: Option<InitialState>,
}

impl TryFrom<RawRunConfig> for RunConfig {
    type Error = OscError;

    fn try_from(raw: RawRunConfig) -> Result<Self> {
        let problem = ProblemSpec::parse(raw.problem, raw.spec)?;
        // a bare string names a parameterless stepper
        let stepper_value = match raw.stepper {
            Value::String(s) => serde_json::json!({ "kind": s }),
            v => v,
        };
        let stepper: StepperKind = serde_json::from_value(stepper_value)
            .map_err(|e| OscError::Config(format!("invalid stepper: {e}")))?;
        Ok(RunConfig {
            problem,
            stepper,
            eps: raw.eps,
            steps: raw.steps,
            outputs: raw.outputs,
            seed: raw.seed,
            initial: raw.initial,
        })
    }
}

impl From<RunConfig> for RawRunConfig {
    fn from(c: RunConfig) -> Self {
        RawRunConfig {
            problem: c.problem.kind(),
            spec: c.problem.to_value(),
            stepper: serde_json::to_value(c.stepper).expect("stepper serializes"),
            eps: c.eps,
            steps: c.steps,
            outputs: c.outputs,
            seed: c.seed,
            initial: c.initial,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| OscError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, out: OutputKind) -> bool {
        self.outputs.contains(&out)
    }

    /// Checks everything that can be checked before stepping.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(OscError::Config(msg));
        if self.steps == 0 {
            return cfg("steps must be at least 1".into());
        }
        let kind = self.problem.kind();
        if !self.stepper.supports(kind) {
            return cfg(format!(
                "stepper {} is not applicable to problem {}",
                self.stepper.label(),
                kind.name()
            ));
        }
        match &self.eps {
            StepSpec::Sequence(v) if v.len() != self.steps => {
                return cfg(format!(
                    "eps sequence has {} entries but steps = {}",
                    v.len(),
                    self.steps
                ));
            }
            StepSpec::Sequence(v) if v.is_empty() => return cfg("eps sequence is empty".into()),
            _ => {}
        }
        for n in 0..self.steps {
            let e = self.eps.at(n);
            if !e.is_finite() || e == 0.0 {
                return cfg(format!("eps[{n}] = {e} must be finite and nonzero"));
            }
            if e < 0.0 && !self.stepper.allows_negative_step() {
                return cfg(format!(
                    "eps[{n}] = {e} is negative; only exact maps accept negative steps"
                ));
            }
        }
        let needs_constant =
            self.stepper.is_two_step() || matches!(kind, ProblemKind::Kepler | ProblemKind::Wave);
        if needs_constant && self.eps.constant().is_none() {
            return cfg(format!(
                "{} on {} requires a constant step",
                self.stepper.label(),
                kind.name()
            ));
        }
        self.validate_problem()?;
        if let Some(init) = &self.initial {
            let n = self.problem.state_dim();
            let (x, v) = (init.x.to_vec(), init.v.to_vec());
            if matches!(kind, ProblemKind::Kepler | ProblemKind::Wave) {
                return cfg(format!(
                    "{} takes its initial data from the spec",
                    kind.name()
                ));
            }
            if x.len() != n || v.len() != n {
                return Err(OscError::DimensionMismatch {
                    expected: n,
                    got: if x.len() != n { x.len() } else { v.len() },
                });
            }
            if x.iter().chain(&v).any(|c| !c.is_finite()) || !init.t.is_finite() {
                return cfg("initial state must be finite".into());
            }
        }
        Ok(())
    }

    fn validate_problem(&self) -> Result<()> {
        let cfg = |msg: String| Err(OscError::Config(msg));
        match (&self.problem, self.stepper) {
            (ProblemSpec::Osc1d(s), st) => {
                s.validate()?;
                if s.gamma != 0.0 {
                    return cfg("osc1d has no damping; use damped1d".into());
                }
                if s.g != 0.0
                    && matches!(st, StepperKind::ExactFree | StepperKind::GeoFamily { .. })
                {
                    return cfg(format!("{} needs g = 0", st.label()));
                }
            }
            (ProblemSpec::Damped1d(s), _) => {
                s.validate()?;
                let disc = s.omega * s.omega - s.gamma * s.gamma;
                if disc <= 0.0 {
                    return Err(OscError::NotUnderdamped { discriminant: disc });
                }
            }
            (ProblemSpec::OscNd(s), st) => {
                s.validate()?;
                let constant_only = matches!(
                    st,
                    StepperKind::TrapezoidForm
                        | StepperKind::LawsonExplicit
                        | StepperKind::LawsonImplicit
                        | StepperKind::ExponentialEuler
                );
                if constant_only && !s.forcing.is_constant() {
                    return cfg(format!(
                        "{} supports only none or constant forcing",
                        st.label()
                    ));
                }
            }
            (ProblemSpec::Kepler(s), _) => {
                let mut s = *s;
                s.dphi = self.eps.at(0);
                s.validate()?;
            }
            (ProblemSpec::Wave(s), _) => s.validate()?,
            (ProblemSpec::Nonlinear1d(s), st) => {
                s.potential.validate()?;
                if matches!(
                    st,
                    StepperKind::Gautschi
                        | StepperKind::LawsonExplicit
                        | StepperKind::LawsonImplicit
                        | StepperKind::ExponentialEuler
                ) {
                    s.potential.linear_split()?;
                }
            }
        }
        Ok(())
    }

    /// Initial `(t, x, v)`: from `initial` if given, else drawn uniformly
    /// from `[−1, 1]` with the configured seed.
    pub fn initial_state(&self) -> (f64, Vec<f64>, Vec<f64>) {
        if let Some(init) = &self.initial {
            return (init.t, init.x.to_vec(), init.v.to_vec());
        }
        let n = self.problem.state_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let x = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let v = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        (0.0, x, v)
    }
}
