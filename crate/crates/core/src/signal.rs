use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Component channel of a robot signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    /// Animation on the robot's screen.
    Visual,
    /// Sound clip.
    Auditory,
    /// Head motion.
    Kinetic,
}

/// The four robot states a user designs a signal for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalType {
    /// Repeats while the robot waits for a command.
    Idle,
    /// Repeats while the robot looks for an object.
    Searching,
    /// Played once when the robot carries the requested item.
    HasItem,
    /// Played once when the robot found an item it cannot bring.
    HasInformation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{value}`")]
pub struct ParseEnumError {
    pub(crate) kind: &'static str,
    pub(crate) value: String,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Visual, Modality::Auditory, Modality::Kinetic];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Auditory => "auditory",
            Modality::Kinetic => "kinetic",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl SignalType {
    pub const ALL: [SignalType; 4] =
        [SignalType::Idle, SignalType::Searching, SignalType::HasItem, SignalType::HasInformation];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalType::Idle => "idle",
            SignalType::Searching => "searching",
            SignalType::HasItem => "has_item",
            SignalType::HasInformation => "has_information",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for SignalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ParseEnumError { kind: "modality", value: s.to_owned() })
    }
}

impl FromStr for SignalType {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SignalType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ParseEnumError { kind: "signal type", value: s.to_owned() })
    }
}
