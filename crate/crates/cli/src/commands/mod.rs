pub mod diagnose;
pub mod distance;
pub mod extend;
pub mod lens;
pub mod prescribe;

use std::fmt;

use anosov::par::Execution;

use crate::config::{ConfigError, Loaded};
use crate::output::Outputs;

pub struct Context {
    pub loaded: Loaded,
    pub out: Outputs,
    pub seed: u64,
    pub exec: Execution,
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Compute(String),
    Io(std::io::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Compute(_) | Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => e.fmt(f),
            Failure::Compute(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<anosov::Error> for Failure {
    fn from(e: anosov::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

pub fn bool_flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}
