//! Scenario files: a strict TOML document with sections `system`, `time`,
//! and either the generic triplet `fields`/`couplings`/`initial` or a
//! `protocol` table. Unknown keys are errors; every derived default is
//! materialized into the echoed form so reports are self-contained and
//! `parse(emit(echo))` round-trips.

use crate::error::{Error, Result};
use crate::model::{
    CouplingSchedule, Driver, FieldSchedule, InitialState, ScenarioConfig, TimeGrid,
};
use crate::protocols::{
    CoolingScenario, GhzScenario, GhzTarget, ParityMode, DEFAULT_OUTPUT_STEPS,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolSection {
    Ghz {
        gamma_x: f64,
        omega1: Driver,
        target: GhzTarget,
    },
    Cooling {
        omegas: Vec<f64>,
        gamma: f64,
        nu: f64,
        weights: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        pulse_duration: Option<f64>,
        parity: ParityMode,
    },
}

/// On-disk scenario shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<Driver>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<CouplingSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
}

/// Parsed protocol payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    Ghz(GhzScenario),
    Cooling(CoolingScenario),
}

/// Fully validated scenario: the engine config, the optional protocol
/// payload, and the normalized echo.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub config: ScenarioConfig,
    pub protocol: Option<Protocol>,
    pub echo: ScenarioFile,
}

pub fn parse_scenario(path: &Path) -> Result<ParsedScenario> {
    let contents = std::fs::read_to_string(path)?;
    parse_scenario_str(&contents)
}

pub fn parse_scenario_str(contents: &str) -> Result<ParsedScenario> {
    let file: ScenarioFile =
        toml::from_str(contents).map_err(|e| Error::Parse(e.to_string()))?;
    resolve(file)
}

/// Serialize a scenario back to its file form.
pub fn emit_scenario(file: &ScenarioFile) -> Result<String> {
    toml::to_string_pretty(file).map_err(|e| Error::Parse(e.to_string()))
}

fn resolve(file: ScenarioFile) -> Result<ParsedScenario> {
    let n = file.system.n;
    if n < 2 {
        return Err(Error::Parse(format!(
            "system needs at least 2 spins, got {n}"
        )));
    }
    match (&file.protocol, &file.fields, &file.couplings, &file.initial) {
        (Some(_), None, None, None) => resolve_protocol(file),
        (None, Some(_), Some(_), Some(_)) => resolve_generic(file),
        (Some(_), _, _, _) => Err(Error::Parse(
            "a protocol scenario derives fields/couplings/initial; remove those sections"
                .into(),
        )),
        (None, f, c, i) => {
            let missing = [
                (f.is_none(), "fields"),
                (c.is_none(), "couplings"),
                (i.is_none(), "initial"),
            ]
            .iter()
            .filter(|(m, _)| *m)
            .map(|(_, name)| *name)
            .collect::<Vec<_>>()
            .join(", ");
            Err(Error::Parse(format!(
                "missing section(s): {missing} (or give a [protocol] table)"
            )))
        }
    }
}

fn resolve_generic(file: ScenarioFile) -> Result<ParsedScenario> {
    let time = file
        .time
        .ok_or_else(|| Error::Parse("missing section(s): time".into()))?;
    let config = ScenarioConfig {
        n: file.system.n,
        fields: FieldSchedule::new(file.fields.clone().expect("checked")),
        couplings: file.couplings.clone().expect("checked"),
        time,
        initial: file.initial.clone().expect("checked"),
    };
    config.validate()?;
    let echo = ScenarioFile { time: Some(time), ..file };
    Ok(ParsedScenario { config, protocol: None, echo })
}

fn resolve_protocol(file: ScenarioFile) -> Result<ParsedScenario> {
    let n = file.system.n;
    let section = file.protocol.clone().expect("checked");
    match section {
        ProtocolSection::Ghz { gamma_x, omega1, target } => {
            let time = match file.time {
                Some(t) => t,
                None => TimeGrid::new(
                    0.0,
                    GhzScenario::target_duration(gamma_x, target)?,
                    DEFAULT_OUTPUT_STEPS,
                ),
            };
            let scenario = GhzScenario { n, gamma_x, omega1, target, time };
            scenario.validate()?;
            let config = scenario.engine_config();
            config.validate()?;
            let echo = ScenarioFile {
                system: SystemSection { n },
                time: Some(time),
                fields: None,
                couplings: None,
                initial: None,
                protocol: Some(ProtocolSection::Ghz {
                    gamma_x,
                    omega1: scenario.omega1.clone(),
                    target,
                }),
            };
            Ok(ParsedScenario {
                config,
                protocol: Some(Protocol::Ghz(scenario)),
                echo,
            })
        }
        ProtocolSection::Cooling {
            omegas,
            gamma,
            nu,
            weights,
            pulse_duration,
            parity,
        } => {
            let mut scenario = CoolingScenario {
                n,
                omegas,
                gamma,
                nu,
                weights,
                pulse_duration,
                parity,
            };
            scenario.validate()?;
            let pulse = scenario.pulse()?;
            let time = match file.time {
                Some(t) => {
                    if t.t0 != 0.0 {
                        return Err(Error::Parse(
                            "cooling pulses start at t0 = 0".into(),
                        ));
                    }
                    t.validate()?;
                    scenario.pulse_duration = Some(t.t1);
                    t
                }
                None => {
                    scenario.pulse_duration = Some(pulse);
                    TimeGrid::new(0.0, pulse, DEFAULT_OUTPUT_STEPS)
                }
            };
            let config = scenario.engine_config(time);
            config.validate()?;
            let echo = ScenarioFile {
                system: SystemSection { n },
                time: Some(time),
                fields: None,
                couplings: None,
                initial: None,
                protocol: Some(ProtocolSection::Cooling {
                    omegas: scenario.omegas.clone(),
                    gamma: scenario.gamma,
                    nu: scenario.nu,
                    weights: scenario.weights.clone(),
                    pulse_duration: scenario.pulse_duration,
                    parity: scenario.parity,
                }),
            };
            Ok(ParsedScenario {
                config,
                protocol: Some(Protocol::Cooling(scenario)),
                echo,
            })
        }
    }
}
