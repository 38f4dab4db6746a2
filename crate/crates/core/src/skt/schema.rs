use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::SktError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WordKind {
    Float32,
    Int32,
}

/// Plant input a variable feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Target {
    Insolation,
    Temperature,
    Ignored,
}

impl std::str::FromStr for Target {
    type Err = SktError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "INSOLATION" => Ok(Target::Insolation),
            "TEMPERATURE" => Ok(Target::Temperature),
            "IGNORED" => Ok(Target::Ignored),
            other => Err(SktError::Schema(format!("unknown target {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    #[default]
    Big,
    Little,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SktVariable {
    pub name: String,
    pub kind: WordKind,
    pub target: Target,
}

impl SktVariable {
    pub fn new(name: impl Into<String>, kind: WordKind, target: Target) -> Self {
        Self { name: name.into(), kind, target }
    }
}

/// Ordered variables of one frame. A frame is exactly four bytes per variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct SktVariableSchema {
    variables: Vec<SktVariable>,
    byte_order: ByteOrder,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    #[serde(default)]
    byte_order: ByteOrder,
    variables: Vec<SktVariable>,
}

impl TryFrom<RawSchema> for SktVariableSchema {
    type Error = SktError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        Self::new(raw.variables, raw.byte_order)
    }
}

impl From<SktVariableSchema> for RawSchema {
    fn from(s: SktVariableSchema) -> Self {
        RawSchema { byte_order: s.byte_order, variables: s.variables }
    }
}

impl Default for SktVariableSchema {
    /// Two floats: `i_python1` carries insolation, `f_python1` temperature.
    fn default() -> Self {
        Self {
            variables: vec![
                SktVariable::new("i_python1", WordKind::Float32, Target::Insolation),
                SktVariable::new("f_python1", WordKind::Float32, Target::Temperature),
            ],
            byte_order: ByteOrder::Big,
        }
    }
}

impl SktVariableSchema {
    pub fn new(variables: Vec<SktVariable>, byte_order: ByteOrder) -> Result<Self, SktError> {
        if variables.is_empty() {
            return Err(SktError::Schema("schema needs at least one variable".into()));
        }
        let mut names = HashSet::new();
        let mut targets = HashSet::new();
        for v in &variables {
            if !names.insert(v.name.as_str()) {
                return Err(SktError::Schema(format!("duplicate variable name {:?}", v.name)));
            }
            if v.target != Target::Ignored && !targets.insert(v.target) {
                return Err(SktError::Schema(format!("more than one variable maps to {:?}", v.target)));
            }
        }
        Ok(Self { variables, byte_order })
    }

    pub fn single(name: &str, kind: WordKind, target: Target) -> Self {
        Self::new(vec![SktVariable::new(name, kind, target)], ByteOrder::Big).expect("single variable schema")
    }

    pub fn with_byte_order(mut self, byte_order: ByteOrder) -> Self {
        self.byte_order = byte_order;
        self
    }

    pub fn variables(&self) -> &[SktVariable] {
        &self.variables
    }

    pub fn byte_order(&self) -> ByteOrder {
        self.byte_order
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn frame_len(&self) -> usize {
        4 * self.variables.len()
    }

    pub fn index_of(&self, target: Target) -> Option<usize> {
        if target == Target::Ignored {
            return None;
        }
        self.variables.iter().position(|v| v.target == target)
    }
}
