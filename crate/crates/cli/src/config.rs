//! Run configuration: one JSON document with a `command` field. Command-line
//! flags are merged over it with [`RunConfig::overlay`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sphere_robin::expr::parse_real;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BallEig,
    VerifyThm1,
    VerifyThm2,
    Profile,
    SteinerCheck,
    AfCheck,
    HypWitness,
    Mesh,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BallEig => "ball-eig",
            Command::VerifyThm1 => "verify-thm1",
            Command::VerifyThm2 => "verify-thm2",
            Command::Profile => "profile",
            Command::SteinerCheck => "steiner-check",
            Command::AfCheck => "af-check",
            Command::HypWitness => "hyp-witness",
            Command::Mesh => "mesh",
        }
    }

    /// Parameters the command reads; anything else set is an input error.
    fn accepts(self) -> &'static [&'static str] {
        match self {
            Command::BallEig => &["n", "r", "beta", "steps", "json", "csv"],
            Command::VerifyThm1 | Command::VerifyThm2 => {
                &["body", "random", "beta", "steps", "fem_level", "json", "csv"]
            }
            Command::Profile => &["body", "random", "steps", "json", "csv"],
            Command::SteinerCheck => &["body", "random", "s", "samples", "seed", "json", "csv"],
            Command::AfCheck => &["body", "random", "json", "csv"],
            Command::HypWitness => &["delta", "dim", "pairs", "seed", "json", "csv"],
            Command::Mesh => &["body", "random", "level", "out"],
        }
    }
}

/// A real parameter given either as a JSON number or as an expression
/// string such as `"tan(0.8)"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Expr(String),
}

impl Real {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Real::Number(x) if x.is_finite() => Ok(*x),
            Real::Number(x) => Err(CliError::Input(format!("{x} is not finite"))),
            Real::Expr(s) => parse_real(s).map_err(|e| CliError::Input(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBodies {
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomBodies>,
    /// Profile grid size, or the number of samples for `ball-eig`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fem_level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! each_param {
    ($m:ident) => {
        $m!(n, r, beta, body, random, steps, fem_level, s, samples, seed, delta, dim, pairs, level, json, csv, out)
    };
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        macro_rules! empty {
            ($($f:ident),*) => { RunConfig { command, $($f: None),* } };
        }
        each_param!(empty)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    /// Fields set in `flags` replace those of `self`.
    pub fn overlay(self, flags: RunConfig) -> Result<Self, CliError> {
        if flags.command != self.command {
            return Err(CliError::Input(format!(
                "config is for '{}' but the command line asks for '{}'",
                self.command.name(),
                flags.command.name()
            )));
        }
        macro_rules! merge {
            ($($f:ident),*) => { RunConfig { command: self.command, $($f: flags.$f.or(self.$f)),* } };
        }
        Ok(each_param!(merge))
    }

    pub fn set_fields(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! collect {
            ($($f:ident),*) => { $( if self.$f.is_some() { v.push(stringify!($f)); } )* };
        }
        each_param!(collect);
        v
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let accepted = self.command.accepts();
        let extra: Vec<&str> = self.set_fields().into_iter().filter(|f| !accepted.contains(f)).collect();
        if !extra.is_empty() {
            return Err(CliError::Input(format!(
                "'{}' does not take: {}",
                self.command.name(),
                extra.join(", ")
            )));
        }
        if accepted.contains(&"body") && self.body.is_some() == self.random.is_some() {
            return Err(CliError::Input("give exactly one of a body file or --random SEED COUNT".into()));
        }
        Ok(())
    }
}

pub fn reals(list: &[Real]) -> Result<Vec<f64>, CliError> {
    list.iter().map(Real::value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numbers_and_expressions() {
        let c = RunConfig::from_json(r#"{"command":"ball-eig","n":2,"r":"0.8","beta":["tan(0.8)", -1]}"#).unwrap();
        assert_eq!(c.command, Command::BallEig);
        assert_eq!(reals(c.beta.as_ref().unwrap()).unwrap(), vec![0.8f64.tan(), -1.0]);
        assert_eq!(c.r.unwrap().value().unwrap(), 0.8);
    }

    #[test]
    fn rejects_unknown_fields_and_commands() {
        assert!(RunConfig::from_json(r#"{"command":"ball-eig","radius":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command":"fly"}"#).is_err());
        assert!(RunConfig::from_json(r#"{"n":2}"#).is_err());
    }

    #[test]
    fn flags_override_config() {
        let mut file = RunConfig::new(Command::BallEig);
        file.n = Some(3);
        file.r = Some(Real::Number(0.5));
        let mut flags = RunConfig::new(Command::BallEig);
        flags.r = Some(Real::Number(0.7));
        let merged = file.overlay(flags).unwrap();
        assert_eq!(merged.n, Some(3));
        assert_eq!(merged.r, Some(Real::Number(0.7)));
        assert!(RunConfig::new(Command::Mesh).overlay(RunConfig::new(Command::Profile)).is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new(Command::AfCheck);
        assert!(c.validate().is_err());
        c.random = Some(RandomBodies { seed: 1, count: 2 });
        c.validate().unwrap();
        c.beta = Some(vec![Real::Number(-1.0)]);
        assert!(c.validate().is_err());
    }
}
