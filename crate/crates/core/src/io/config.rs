//! TOML run configurations.
//!
//! ```toml
//! gamma = 0.5
//! strict_gauss = true          # optional, default true
//!
//! [[vortices]]
//! position = [0.0, 0.0, 1.0]
//! strength = 1.0
//!
//! [[vortices]]
//! position = [0.0, 0.0, -1.0]
//! strength = -1.0
//!
//! [blob]                       # optional
//! eps = 0.1
//! particles_per_blob = 200
//! beta = 0.4
//! layout = "uniform"           # or "fibonacci"
//! ```

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dynamics::VortexConfig;
use crate::error::{Error, Result};
use crate::experiments::BlobLayout;
use crate::geometry::{UnitVector3, Vec3};

/// Positions farther than this from the unit sphere are renormalized with a warning.
pub const POSITION_TOL: f64 = 1e-6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    gamma: f64,
    #[serde(default = "default_strict")]
    strict_gauss: bool,
    vortices: Vec<VortexEntry>,
    blob: Option<BlobSpec>,
}

fn default_strict() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VortexEntry {
    position: [f64; 3],
    strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub eps: f64,
    pub particles_per_blob: usize,
    pub beta: f64,
    #[serde(default)]
    pub layout: BlobLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub vortices: VortexConfig,
    pub blob: Option<BlobSpec>,
}

fn schema_error(origin: &str, field: impl std::fmt::Display, message: impl Into<String>) -> Error {
    Error::Config {
        path: format!("{origin}: {field}"),
        message: message.into(),
    }
}

/// Parses a configuration document; `origin` names it in error messages.
///
/// `strict_gauss` overrides the document's own setting when given.
pub fn parse_config(text: &str, origin: &str, strict_gauss: Option<bool>) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| schema_error(origin, "document", e.message().to_string()))?;
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema_error(origin, path, e.into_inner().message().to_string())
    })?;
    let mut points = Vec::with_capacity(doc.vortices.len());
    let mut strengths = Vec::with_capacity(doc.vortices.len());
    for (i, v) in doc.vortices.iter().enumerate() {
        let p = Vec3::from(v.position);
        let norm = p.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(schema_error(
                origin,
                format!("vortices[{i}].position"),
                "must be a finite nonzero vector",
            ));
        }
        if (norm - 1.0).abs() > POSITION_TOL {
            warn!("{origin}: vortices[{i}].position has norm {norm}; renormalized onto the sphere");
        }
        points.push(UnitVector3::new_normalize(p)?);
        if !(v.strength.is_finite() && v.strength != 0.0) {
            return Err(schema_error(
                origin,
                format!("vortices[{i}].strength"),
                "must be finite and nonzero",
            ));
        }
        strengths.push(v.strength);
    }
    let strict = strict_gauss.unwrap_or(doc.strict_gauss);
    let vortices = VortexConfig::build(points, strengths, doc.gamma, strict)?;
    Ok(RunConfig {
        vortices,
        blob: doc.blob,
    })
}

pub fn read_config(path: &Path, strict_gauss: Option<bool>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string(), strict_gauss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::polar_pair;

    const POLAR: &str = "gamma = 0.7\n\
        [[vortices]]\nposition = [0, 0, 1]\nstrength = 2.0\n\
        [[vortices]]\nposition = [0, 0, -1]\nstrength = -2.0\n";

    #[test]
    fn polar_document_round_trip() {
        let cfg = parse_config(POLAR, "polar.toml", None).unwrap();
        assert_eq!(cfg.vortices, polar_pair(2.0, 0.7).unwrap());
        assert!(cfg.blob.is_none());
    }

    #[test]
    fn gauss_violation_names_the_sum() {
        let doc = POLAR.replace("-2.0", "-1.5");
        let err = parse_config(&doc, "x.toml", None).unwrap_err();
        assert!(matches!(err, Error::GaussViolation { sum, .. } if sum == 0.5));
        assert!(err.to_string().contains("5e-1"));
        let relaxed = parse_config(&doc, "x.toml", Some(false)).unwrap();
        assert_eq!(relaxed.vortices.gauss_sum(), 0.5);
    }

    #[test]
    fn off_sphere_positions_are_renormalized() {
        let doc = POLAR.replace("[0, 0, 1]", "[0, 0, 1.01]");
        let cfg = parse_config(&doc, "x.toml", None).unwrap();
        assert_eq!(cfg.vortices.points()[0], UnitVector3::e3());
    }

    #[test]
    fn schema_errors_carry_field_paths() {
        let doc = POLAR.replace("strength = -2.0", "strength = \"big\"");
        let msg = parse_config(&doc, "x.toml", None).unwrap_err().to_string();
        assert!(msg.contains("vortices[1].strength"), "{msg}");
        let doc = POLAR.replace("[0, 0, -1]", "[0, 0]");
        let msg = parse_config(&doc, "x.toml", None).unwrap_err().to_string();
        assert!(msg.contains("vortices[1].position"), "{msg}");
        let doc = POLAR.replace("strength = 2.0", "strength = 0.0");
        let msg = parse_config(&doc, "x.toml", None).unwrap_err().to_string();
        assert!(msg.contains("vortices[0].strength"), "{msg}");
        let msg = parse_config("gamma = 1\nvortices = []\nextra = 2\n", "x.toml", None)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("extra"), "{msg}");
    }

    #[test]
    fn blob_block() {
        let doc = format!("{POLAR}[blob]\neps = 0.1\nparticles_per_blob = 50\nbeta = 0.4\nlayout = \"fibonacci\"\n");
        let spec = parse_config(&doc, "x.toml", None).unwrap().blob.unwrap();
        assert_eq!(spec.particles_per_blob, 50);
        assert_eq!(spec.layout, BlobLayout::Fibonacci);
    }
}
