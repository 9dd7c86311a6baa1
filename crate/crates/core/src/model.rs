//! Declarative scenario description: per-spin field schedules ω_k(t), the
//! three coupling schedules γ_x/γ_y/γ_z(t), time grid, initial state, and
//! assembly of the full Hamiltonian
//!
//! H(t) = Σ_k ω_k(t) Z_k + γ_x(t) X^⊗N + γ_y(t) Y^⊗N + γ_z(t) Z^⊗N
//!
//! with ħ = 1: all ω are angular frequencies, all γ are energies.

use crate::error::{Error, Result};
use crate::pauli::{OperatorSum, PauliLetter, PauliString};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A named time-dependent real parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Driver {
    Constant { value: f64 },
    Cosine { amplitude: f64, angular_frequency: f64, phase: f64 },
    Sine { amplitude: f64, angular_frequency: f64, phase: f64 },
    LinearRamp { slope: f64, offset: f64 },
    SechPulse { amplitude: f64, width: f64, center: f64 },
    Tabulated { points: Vec<(f64, f64)> },
}

impl Driver {
    pub fn constant(value: f64) -> Self {
        Driver::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Driver::SechPulse { width, .. } if *width <= 0.0 => Err(Error::Parse(
                format!("sech-pulse width must be positive, got {width}"),
            )),
            Driver::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::Parse(
                        "tabulated driver needs at least two points".into(),
                    ));
                }
                for pair in points.windows(2) {
                    if pair[1].0 <= pair[0].0 {
                        return Err(Error::Parse(format!(
                            "tabulated grid must be strictly increasing, got {} then {}",
                            pair[0].0, pair[1].0
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Closed-form evaluation; linear interpolation for tabulated drivers.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Driver::Constant { value } => Ok(*value),
            Driver::Cosine { amplitude, angular_frequency, phase } => {
                Ok(amplitude * (angular_frequency * t + phase).cos())
            }
            Driver::Sine { amplitude, angular_frequency, phase } => {
                Ok(amplitude * (angular_frequency * t + phase).sin())
            }
            Driver::LinearRamp { slope, offset } => Ok(slope * t + offset),
            Driver::SechPulse { amplitude, width, center } => {
                Ok(amplitude / ((t - center) / width).cosh())
            }
            Driver::Tabulated { points } => {
                let first = points.first().expect("validated");
                let last = points.last().expect("validated");
                if t < first.0 || t > last.0 {
                    return Err(Error::Domain(format!(
                        "time {t} outside tabulated range [{}, {}]",
                        first.0, last.0
                    )));
                }
                let idx = points
                    .partition_point(|p| p.0 <= t)
                    .min(points.len() - 1)
                    .max(1);
                let (t0, v0) = points[idx - 1];
                let (t1, v1) = points[idx];
                Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
            }
        }
    }

    /// The value when the driver is constant for all times.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Driver::Constant { value } => Some(*value),
            Driver::LinearRamp { slope, offset } if *slope == 0.0 => Some(*offset),
            _ => None,
        }
    }

    /// Magnitude bound over [t0, t1] (energy scale contribution).
    fn amplitude_bound(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Driver::Constant { value } => value.abs(),
            Driver::Cosine { amplitude, .. } | Driver::Sine { amplitude, .. } => {
                amplitude.abs()
            }
            Driver::LinearRamp { slope, offset } => {
                (slope * t0 + offset).abs().max((slope * t1 + offset).abs())
            }
            Driver::SechPulse { amplitude, .. } => amplitude.abs(),
            Driver::Tabulated { points } => points
                .iter()
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max),
        }
    }

    /// Intrinsic time-variation rate (angular-frequency scale).
    fn variation_rate(&self) -> f64 {
        match self {
            Driver::Constant { .. } => 0.0,
            Driver::Cosine { angular_frequency, .. }
            | Driver::Sine { angular_frequency, .. } => angular_frequency.abs(),
            Driver::LinearRamp { .. } => 0.0,
            Driver::SechPulse { width, .. } => 1.0 / width,
            Driver::Tabulated { points } => {
                // finest knot spacing sets the resolution requirement
                points
                    .windows(2)
                    .map(|p| 1.0 / (p[1].0 - p[0].0))
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Per-spin drivers for ω_k, k = 1..=N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldSchedule {
    drivers: Vec<Driver>,
}

impl FieldSchedule {
    pub fn new(drivers: Vec<Driver>) -> Self {
        FieldSchedule { drivers }
    }

    pub fn uniform_constant(n: usize, value: f64) -> Self {
        FieldSchedule { drivers: vec![Driver::constant(value); n] }
    }

    pub fn from_constants(values: &[f64]) -> Self {
        FieldSchedule {
            drivers: values.iter().map(|&v| Driver::constant(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.drivers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drivers.is_empty()
    }

    pub fn drivers(&self) -> &[Driver] {
        &self.drivers
    }

    /// ω_k(t) for 1-based spin k.
    pub fn omega(&self, k: usize, t: f64) -> Result<f64> {
        self.drivers
            .get(k - 1)
            .ok_or_else(|| Error::Usage(format!("spin {k} out of range")))?
            .eval(t)
    }
}

/// Drivers for γ_x(t), γ_y(t), γ_z(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSchedule {
    pub x: Driver,
    pub y: Driver,
    pub z: Driver,
}

impl CouplingSchedule {
    pub fn constant(gx: f64, gy: f64, gz: f64) -> Self {
        CouplingSchedule {
            x: Driver::constant(gx),
            y: Driver::constant(gy),
            z: Driver::constant(gz),
        }
    }

    pub fn zero() -> Self {
        CouplingSchedule::constant(0.0, 0.0, 0.0)
    }
}

/// Output grid: `steps` uniform intervals over [t0, t1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Self {
        TimeGrid { t0, t1, steps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Parse("time grid needs at least one step".into()));
        }
        if !(self.t1 >= self.t0) {
            return Err(Error::Parse(format!(
                "time grid must have t1 >= t0, got [{}, {}]",
                self.t0, self.t1
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let h = (self.t1 - self.t0) / self.steps as f64;
        (0..=self.steps).map(|i| self.t0 + h * i as f64).collect()
    }
}

/// One weighted computational-basis component of a diagonal mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureTerm {
    pub index: usize,
    pub weight: f64,
}

/// Initial state descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// A single computational-basis state.
    Basis { index: usize },
    /// (|b> + e^{i phase} |~b>)/√2 over a basis index and its global flip.
    GhzPair {
        index: usize,
        #[serde(default)]
        phase: f64,
    },
    /// Diagonal mixture over computational-basis states.
    Mixture { terms: Vec<MixtureTerm> },
}

impl InitialState {
    pub fn validate(&self, n: usize) -> Result<()> {
        let dim = 1usize << n;
        match self {
            InitialState::Basis { index } | InitialState::GhzPair { index, .. } => {
                if *index >= dim {
                    return Err(Error::Parse(format!(
                        "basis index {index} out of range for {n} spins"
                    )));
                }
                Ok(())
            }
            InitialState::Mixture { terms } => {
                if terms.is_empty() {
                    return Err(Error::Parse("mixture needs at least one term".into()));
                }
                let mut total = 0.0;
                for term in terms {
                    if term.index >= dim {
                        return Err(Error::Parse(format!(
                            "mixture index {} out of range for {n} spins",
                            term.index
                        )));
                    }
                    if term.weight < 0.0 {
                        return Err(Error::Parse(format!(
                            "mixture weight {} is negative",
                            term.weight
                        )));
                    }
                    total += term.weight;
                }
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::Parse(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// State vector for the pure descriptors; None for mixtures.
    pub fn state_vector(&self, n: usize) -> Option<Vec<C64>> {
        let dim = 1usize << n;
        match self {
            InitialState::Basis { index } => {
                let mut psi = vec![C64::new(0.0, 0.0); dim];
                psi[*index] = C64::new(1.0, 0.0);
                Some(psi)
            }
            InitialState::GhzPair { index, phase } => {
                let mut psi = vec![C64::new(0.0, 0.0); dim];
                let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                psi[*index] = amp;
                psi[!index & (dim - 1)] = amp * C64::new(0.0, *phase).exp();
                Some(psi)
            }
            InitialState::Mixture { .. } => None,
        }
    }
}

/// Full description of a physical run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub fields: FieldSchedule,
    pub couplings: CouplingSchedule,
    pub time: TimeGrid,
    pub initial: InitialState,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Parse(format!(
                "system needs at least 2 spins, got {}",
                self.n
            )));
        }
        if self.fields.len() != self.n {
            return Err(Error::Parse(format!(
                "expected {} field drivers, got {}",
                self.n,
                self.fields.len()
            )));
        }
        for d in self.fields.drivers() {
            d.validate()?;
        }
        for d in [&self.couplings.x, &self.couplings.y, &self.couplings.z] {
            d.validate()?;
        }
        self.time.validate()?;
        self.initial.validate(self.n)?;
        Ok(())
    }

    /// Angular-frequency bound governing the shortest dynamical period:
    /// level splittings (twice the summed energy scales) plus the fastest
    /// explicit drive rate.
    pub fn dynamical_frequency_bound(&self) -> f64 {
        let (t0, t1) = (self.time.t0, self.time.t1);
        let mut energy = 0.0;
        let mut rate = 0.0f64;
        for d in self.fields.drivers() {
            energy += d.amplitude_bound(t0, t1);
            rate = rate.max(d.variation_rate());
        }
        for d in [&self.couplings.x, &self.couplings.y, &self.couplings.z] {
            energy += d.amplitude_bound(t0, t1);
            rate = rate.max(d.variation_rate());
        }
        2.0 * energy + rate
    }
}

/// Driver evaluation as a free function, mirroring the schedule accessors.
pub fn evaluate_driver(d: &Driver, t: f64) -> Result<f64> {
    d.eval(t)
}

/// H(t) as a symbolic Pauli sum: N field terms plus the three uniform
/// couplings, canonicalized (zero couplings drop out).
pub fn build_full_hamiltonian(cfg: &ScenarioConfig, t: f64) -> Result<OperatorSum> {
    let n = cfg.n;
    let mut terms = Vec::with_capacity(n + 3);
    for k in 1..=n {
        terms.push((
            C64::new(cfg.fields.omega(k, t)?, 0.0),
            PauliString::single(n, k, PauliLetter::Z)?,
        ));
    }
    terms.push((
        C64::new(cfg.couplings.x.eval(t)?, 0.0),
        PauliString::uniform(n, PauliLetter::X),
    ));
    terms.push((
        C64::new(cfg.couplings.y.eval(t)?, 0.0),
        PauliString::uniform(n, PauliLetter::Y),
    ));
    terms.push((
        C64::new(cfg.couplings.z.eval(t)?, 0.0),
        PauliString::uniform(n, PauliLetter::Z),
    ));
    OperatorSum::from_terms(n, terms)
}
