//! Scenario configuration files.
//!
//! A scenario is one JSON object whose `kind` field selects the variant.
//! Unknown fields are rejected. Parse errors carry serde's line and column;
//! validation errors are anchored to the first line naming the field. The
//! body is read directly from the text once `kind` is known, since
//! buffering through a tagged enum would drop the positions.

use std::f64::consts::PI;

use std::marker::PhantomData;

use serde::de::value::{MapAccessDeserializer, StringDeserializer};
use serde::de::{DeserializeOwned, DeserializeSeed, IgnoredAny, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geom::{PlaneSupport, TrihedralConfig, WedgeConfig};
use crate::mesh::Support;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ScenarioConfig {
    Classify(ClassifyConfig),
    WedgeCap(WedgeCapConfig),
    TrihedralCap(TrihedralCapConfig),
    CylinderCap(CylinderCapConfig),
    #[serde(rename = "RectanglePDE")]
    RectanglePde(RectangleConfig),
    Evolve(EvolveConfig),
    Verify(VerifyConfig),
}

/// Sweep of the contact-angle square at one wedge half-opening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub alpha: f64,
    /// Samples per angle axis over `[0, pi]`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Boundary band in radians.
    #[serde(default)]
    pub band: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeCapConfig {
    pub alpha: f64,
    pub gammas: [f64; 2],
    pub h: f64,
    #[serde(default = "default_mesh_level")]
    pub refinement: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrihedralCapConfig {
    pub support: ApexSpec,
    pub h: f64,
    #[serde(default = "default_mesh_level")]
    pub refinement: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderCapConfig {
    pub support: PrismSpec,
    #[serde(default = "default_mesh_level")]
    pub refinement: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleConfig {
    pub a: f64,
    pub b: f64,
    /// Contact angles on the bottom, right, top and left walls.
    pub gammas: [f64; 4],
    /// Mean curvature; the compatibility value when absent.
    #[serde(default)]
    pub h: Option<f64>,
    /// Cells per unit length.
    pub grid_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub support: SupportSpec,
    /// Enclosed volume; exactly one of `volume` and `pressure` is given.
    #[serde(default)]
    pub volume: Option<f64>,
    /// Fixed multiplier `2H` for free-volume runs.
    #[serde(default)]
    pub pressure: Option<f64>,
    /// Volume of the seed before a free-volume run.
    #[serde(default)]
    pub seed_volume: Option<f64>,
    pub refinement: usize,
    #[serde(default)]
    pub corner_levels: usize,
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default)]
    pub smoothing: f64,
    #[serde(default)]
    pub full_gradient: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    /// Normal pointing into the region available to the drop.
    pub normal: [f64; 3],
    pub offset: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ApexSpec {
    /// Coordinate planes bounding the positive octant.
    Octant { gammas: [f64; 3] },
    Planes { planes: [PlaneSpec; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrismSpec {
    /// Equilateral prism around the z axis, closed below at `z = base`.
    Equilateral { inradius: f64, gammas: [f64; 3], base: f64 },
    Planes { planes: [PlaneSpec; 3], base: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SupportSpec {
    /// Canonical wedge of half-opening `alpha` around the z axis.
    Wedge { alpha: f64, gammas: [f64; 2] },
    Octant { gammas: [f64; 3] },
    Apex { planes: [PlaneSpec; 3] },
    Prism { inradius: f64, gammas: [f64; 3], base: f64 },
    Cylinder { planes: [PlaneSpec; 3], base: f64 },
}

fn default_grid() -> usize {
    181
}

fn default_mesh_level() -> usize {
    3
}

fn default_max_iters() -> usize {
    2000
}

fn default_grad_tol() -> f64 {
    1e-6
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

fn check_angle(field: &str, g: f64) -> Result<()> {
    if !(0.0..=PI).contains(&g) {
        return Err(invalid(field, format!("angle {g} outside [0, pi]")));
    }
    Ok(())
}

fn check_positive(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid(field, format!("{x} must be positive")));
    }
    Ok(())
}

fn check_finite(field: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(invalid(field, format!("{x} must be finite")));
    }
    Ok(())
}

impl PlaneSpec {
    fn build(&self) -> Result<PlaneSupport> {
        check_angle("gamma", self.gamma)?;
        check_finite("offset", self.offset)?;
        PlaneSupport::new(Vec3::from(self.normal), self.offset, self.gamma)
    }
}

fn planes3(specs: &[PlaneSpec; 3]) -> Result<[PlaneSupport; 3]> {
    Ok([specs[0].build()?, specs[1].build()?, specs[2].build()?])
}

impl ApexSpec {
    pub fn build(&self) -> Result<TrihedralConfig> {
        match self {
            ApexSpec::Octant { gammas } => {
                gammas.iter().try_for_each(|&g| check_angle("gammas", g))?;
                TrihedralConfig::orthogonal_octant(*gammas)
            }
            ApexSpec::Planes { planes } => TrihedralConfig::apex(planes3(planes)?),
        }
    }
}

impl PrismSpec {
    pub fn build(&self) -> Result<TrihedralConfig> {
        match self {
            PrismSpec::Equilateral { inradius, gammas, base } => {
                check_positive("inradius", *inradius)?;
                check_finite("base", *base)?;
                gammas.iter().try_for_each(|&g| check_angle("gammas", g))?;
                TrihedralConfig::equilateral_prism(*inradius, *gammas, *base)
            }
            PrismSpec::Planes { planes, base } => {
                check_finite("base", *base)?;
                TrihedralConfig::cylinder(planes3(planes)?, *base)
            }
        }
    }
}

impl SupportSpec {
    pub fn build(&self) -> Result<Support> {
        Ok(match self {
            SupportSpec::Wedge { alpha, gammas } => {
                gammas.iter().try_for_each(|&g| check_angle("gammas", g))?;
                if !(*alpha > 0.0 && *alpha < 0.5 * PI) {
                    return Err(invalid("alpha", format!("{alpha} outside (0, pi/2)")));
                }
                Support::Wedge(WedgeConfig::canonical(*alpha, gammas[0], gammas[1])?)
            }
            SupportSpec::Octant { gammas } => Support::Trihedral(ApexSpec::Octant { gammas: *gammas }.build()?),
            SupportSpec::Apex { planes } => Support::Trihedral(ApexSpec::Planes { planes: *planes }.build()?),
            SupportSpec::Prism { inradius, gammas, base } => Support::Trihedral(
                PrismSpec::Equilateral { inradius: *inradius, gammas: *gammas, base: *base }.build()?,
            ),
            SupportSpec::Cylinder { planes, base } => {
                Support::Trihedral(PrismSpec::Planes { planes: *planes, base: *base }.build()?)
            }
        })
    }
}

impl ScenarioConfig {
    /// Parses and validates a configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let json = |e: serde_json::Error| Error::Config(e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(json)?;
        let kind = value
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::Config("field `kind`: missing or not a string".into()))
            .map_err(|e| anchor(text, e))?;
        let cfg = match kind {
            "Classify" => ScenarioConfig::Classify(variant(text).map_err(json)?),
            "WedgeCap" => ScenarioConfig::WedgeCap(variant(text).map_err(json)?),
            "TrihedralCap" => ScenarioConfig::TrihedralCap(variant(text).map_err(json)?),
            "CylinderCap" => ScenarioConfig::CylinderCap(variant(text).map_err(json)?),
            "RectanglePDE" => ScenarioConfig::RectanglePde(variant(text).map_err(json)?),
            "Evolve" => ScenarioConfig::Evolve(variant(text).map_err(json)?),
            "Verify" => ScenarioConfig::Verify(variant(text).map_err(json)?),
            other => return Err(anchor(text, invalid("kind", format!("unknown kind `{other}`")))),
        };
        cfg.validate().map_err(|e| anchor(text, e))?;
        Ok(cfg)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::Classify(_) => "Classify",
            ScenarioConfig::WedgeCap(_) => "WedgeCap",
            ScenarioConfig::TrihedralCap(_) => "TrihedralCap",
            ScenarioConfig::CylinderCap(_) => "CylinderCap",
            ScenarioConfig::RectanglePde(_) => "RectanglePDE",
            ScenarioConfig::Evolve(_) => "Evolve",
            ScenarioConfig::Verify(_) => "Verify",
        }
    }

    /// Checks ranges that the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioConfig::Classify(c) => {
                if !(c.alpha > 0.0 && c.alpha < 0.5 * PI) {
                    return Err(invalid("alpha", format!("{} outside (0, pi/2)", c.alpha)));
                }
                if c.grid < 2 {
                    return Err(invalid("grid", "needs at least 2 samples"));
                }
                if let Some(b) = c.band {
                    if !(b >= 0.0 && b.is_finite()) {
                        return Err(invalid("band", format!("{b} must be nonnegative")));
                    }
                }
            }
            ScenarioConfig::WedgeCap(c) => {
                SupportSpec::Wedge { alpha: c.alpha, gammas: c.gammas }.build()?;
                check_finite("h", c.h)?;
            }
            ScenarioConfig::TrihedralCap(c) => {
                c.support.build()?;
                check_finite("h", c.h)?;
            }
            ScenarioConfig::CylinderCap(c) => {
                c.support.build()?;
            }
            ScenarioConfig::RectanglePde(c) => {
                check_positive("a", c.a)?;
                check_positive("b", c.b)?;
                c.gammas.iter().try_for_each(|&g| check_angle("gammas", g))?;
                if let Some(h) = c.h {
                    check_finite("h", h)?;
                }
                if c.grid_n == 0 {
                    return Err(invalid("grid_n", "must be positive"));
                }
            }
            ScenarioConfig::Evolve(c) => {
                c.support.build()?;
                match (c.volume, c.pressure) {
                    (Some(v), None) => check_positive("volume", v)?,
                    (None, Some(p)) => check_finite("pressure", p)?,
                    _ => return Err(invalid("volume", "give exactly one of `volume` and `pressure`")),
                }
                if let Some(v) = c.seed_volume {
                    check_positive("seed_volume", v)?;
                }
                if !(c.perturbation >= 0.0 && c.perturbation < 0.5) {
                    return Err(invalid("perturbation", format!("{} outside [0, 0.5)", c.perturbation)));
                }
                check_positive("grad_tol", c.grad_tol)?;
                if !(c.smoothing >= 0.0 && c.smoothing <= 1.0) {
                    return Err(invalid("smoothing", format!("{} outside [0, 1]", c.smoothing)));
                }
            }
            ScenarioConfig::Verify(c) => {
                if !super::verify::SUITES.contains(&c.suite.as_str()) {
                    return Err(invalid("suite", format!("unknown suite `{}`", c.suite)));
                }
            }
        }
        Ok(())
    }
}

/// Deserializes the body of a scenario straight from the text, skipping
/// its `kind` key, so type errors keep their line and column.
fn variant<T: DeserializeOwned>(text: &str) -> serde_json::Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let out = de.deserialize_map(SkipKindVisitor(PhantomData))?;
    de.end()?;
    Ok(out)
}

struct SkipKindVisitor<T>(PhantomData<T>);

impl<'de, T: Deserialize<'de>> Visitor<'de> for SkipKindVisitor<T> {
    type Value = T;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a scenario object")
    }

    fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<T, A::Error> {
        T::deserialize(MapAccessDeserializer::new(SkipKind(map)))
    }
}

struct SkipKind<A>(A);

impl<'de, A: MapAccess<'de>> MapAccess<'de> for SkipKind<A> {
    type Error = A::Error;

    fn next_key_seed<K: DeserializeSeed<'de>>(&mut self, seed: K) -> std::result::Result<Option<K::Value>, A::Error> {
        while let Some(key) = self.0.next_key::<String>()? {
            if key == "kind" {
                self.0.next_value::<IgnoredAny>()?;
            } else {
                return seed.deserialize(StringDeserializer::<A::Error>::new(key)).map(Some);
            }
        }
        Ok(None)
    }

    fn next_value_seed<V: DeserializeSeed<'de>>(&mut self, seed: V) -> std::result::Result<V::Value, A::Error> {
        self.0.next_value_seed(seed)
    }
}

/// Prefixes a validation error with the line of the field it names.
fn anchor(text: &str, err: Error) -> Error {
    let msg = err.to_string();
    let line = msg
        .split('`')
        .nth(1)
        .and_then(|field| text.lines().position(|l| l.contains(&format!("\"{field}\""))))
        .map(|k| k + 1);
    match line {
        Some(k) => Error::Config(format!("line {k}: {msg}")),
        None => Error::Config(msg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_evolve_scenario() {
        let text = r#"{
  "kind": "Evolve",
  "support": {"type": "wedge", "alpha": 0.7853981633974483, "gammas": [2.0943951023931957, 2.0943951023931957]},
  "volume": 1.0,
  "refinement": 2,
  "perturbation": 0.01
}"#;
        let cfg = ScenarioConfig::parse(text).unwrap();
        match cfg {
            ScenarioConfig::Evolve(e) => {
                assert_eq!(e.refinement, 2);
                assert_eq!(e.max_iters, 2000);
                assert!(matches!(e.support.build().unwrap(), Support::Wedge(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_kinds() {
        assert!(ScenarioConfig::parse(r#"{"kind": "Classify", "alpha": 0.5, "colour": 1}"#).is_err());
        assert!(ScenarioConfig::parse(r#"{"kind": "Juggle"}"#).is_err());
        assert!(ScenarioConfig::parse(r#"{"kind": "Verify", "suite": "nonsense"}"#).is_err());
    }

    #[test]
    fn validation_errors_name_the_line() {
        let text = "{\n  \"kind\": \"WedgeCap\",\n  \"alpha\": 0.5,\n  \"gammas\": [1.0, 4.0],\n  \"h\": 1.0\n}";
        let msg = ScenarioConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("line 4"), "{msg}");
        let msg = ScenarioConfig::parse("{\n  \"kind\": \"Classify\",\n  \"alpha\": \"x\"\n}").unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }
}
