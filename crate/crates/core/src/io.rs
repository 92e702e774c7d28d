//! Constraint files and per-barrier diagnostics.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smc::{BarrierDiagnostics, ConstraintSet};

pub const CONSTRAINTS_VERSION: u32 = 1;

fn default_version() -> u32 {
    CONSTRAINTS_VERSION
}

/// Coordinates of `z` in a constraint file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Times in (0, 1].
    #[default]
    Unit,
    /// Unrolled music codes, rescaled against a tick horizon before sampling.
    Unrolled,
}

/// `{"version": 1, "domain": "unit", "z": [...], "b": [...]}`. `version`
/// and `domain` may be omitted. Code-domain files may record the `a_max`
/// of the vocabulary the codes were computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFile {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max: Option<u32>,
    pub z: Vec<f64>,
    pub b: Vec<bool>,
}

impl ConstraintFile {
    pub fn unit(set: &ConstraintSet) -> Self {
        Self {
            version: CONSTRAINTS_VERSION,
            domain: Domain::Unit,
            a_max: None,
            z: set.times().to_vec(),
            b: set.flags().to_vec(),
        }
    }

    pub fn unrolled(codes: &[u64], b: Vec<bool>, a_max: u32) -> Self {
        Self {
            version: CONSTRAINTS_VERSION,
            domain: Domain::Unrolled,
            a_max: Some(a_max),
            z: codes.iter().map(|&c| c as f64).collect(),
            b,
        }
    }

    /// `z` as integer codes; fails outside the unrolled domain.
    pub fn codes(&self) -> Result<Vec<u64>> {
        if self.domain != Domain::Unrolled {
            return Err(Error::InvalidConstraints(
                "constraint file is not in code units".into(),
            ));
        }
        self.z
            .iter()
            .map(|&z| {
                if z.fract() == 0.0 && z >= 1.0 && z < 2f64.powi(53) {
                    Ok(z as u64)
                } else {
                    Err(Error::InvalidConstraints(format!(
                        "{z} is not an unrolled code"
                    )))
                }
            })
            .collect()
    }

    /// The constraint set in unit time; fails for code-domain files.
    pub fn to_unit(&self) -> Result<ConstraintSet> {
        if self.domain != Domain::Unit {
            return Err(Error::InvalidConstraints(
                "code-domain constraints need a horizon to map onto (0, 1]".into(),
            ));
        }
        ConstraintSet::new(self.z.clone(), self.b.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.version != CONSTRAINTS_VERSION {
            return Err(Error::Format(format!(
                "unsupported constraint file version {}",
                file.version
            )));
        }
        if file.z.len() != file.b.len() {
            return Err(Error::InvalidConstraints(format!(
                "{} times but {} flags",
                file.z.len(),
                file.b.len()
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// One JSON object per barrier.
pub fn write_diagnostics<W: Write>(mut out: W, diagnostics: &[BarrierDiagnostics]) -> Result<()> {
    for d in diagnostics {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_minimal_file() {
        let f = ConstraintFile::from_json(r#"{"z": [0.25, 0.5], "b": [true, false]}"#).unwrap();
        assert_eq!(f.version, 1);
        assert_eq!(f.domain, Domain::Unit);
        let c = f.to_unit().unwrap();
        assert_eq!(c.times(), &[0.25, 0.5]);
        assert_eq!(c.flags(), &[true, false]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ConstraintFile::from_json(r#"{"version": 2, "z": [], "b": []}"#).is_err());
        assert!(ConstraintFile::from_json(r#"{"z": [0.5], "b": []}"#).is_err());
        let f = ConstraintFile::from_json(r#"{"z": [0.5, 0.2], "b": [true, true]}"#).unwrap();
        assert!(f.to_unit().is_err());
        let f = ConstraintFile::from_json(r#"{"domain": "unrolled", "z": [3.5], "b": [true]}"#)
            .unwrap();
        assert!(f.codes().is_err());
        assert!(f.to_unit().is_err());
    }

    #[test]
    fn codes_roundtrip() {
        let f = ConstraintFile::unrolled(&[257, 1000], vec![true, true], 256);
        let back = ConstraintFile::from_json(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back.codes().unwrap(), vec![257, 1000]);
        assert_eq!(back.a_max, Some(256));
    }
}
