//! Scene files: the set K, optional pole set P, measure and tolerances.

use std::path::Path;

use logpot::geometry::{set_distance, CompactSetSpec, SetDiscretization};
use logpot::measures::{realize, DiscreteMeasure, MeasureSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_resolution() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Regularity tolerance for Green functions on K.
    pub green: f64,
    /// Λ* pass threshold, relative to cap(K).
    pub lambda_pass: f64,
    /// Λ* fail threshold, relative to cap(K).
    pub lambda_fail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { green: logpot::potential::DEFAULT_TOL, lambda_pass: 0.02, lambda_fail: 0.10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub set: CompactSetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<CompactSetSpec>,
    /// Defaults to arc length on K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Discretized scene.
pub struct Loaded {
    pub scene: Scene,
    pub k: SetDiscretization,
    pub p: Option<SetDiscretization>,
    pub mu: DiscreteMeasure,
}

impl Loaded {
    pub fn poles(&self) -> Result<&SetDiscretization, CliError> {
        self.p.as_ref().ok_or_else(|| CliError::Precondition("this command needs a pole set: add \"poles\" to the scene".into()))
    }
}

fn reseed(spec: &mut MeasureSpec, seed: u64) {
    match spec {
        MeasureSpec::MuC { seed: s, .. } => *s = seed,
        MeasureSpec::Mixture { parts } => parts.iter_mut().for_each(|p| reseed(&mut p.spec, seed)),
        _ => {}
    }
}

/// Global flags that override scene values.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
}

impl Scene {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rfind(" at line ").map_or(msg.as_str(), |i| &msg[..i]);
            CliError::Precondition(format!("{origin}:{}:{}: malformed scene: {msg}", e.line(), e.column()))
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Precondition(format!("{}: cannot read scene: {e}", path.display())))?;
        Scene::parse(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            if let Some(m) = self.measure.as_mut() {
                reseed(m, seed);
            }
        }
        if let Some(r) = o.resolution {
            self.resolution = r;
        }
        if let Some(t) = o.tol {
            self.tolerances.green = t;
        }
    }

    /// Discretize K and P, realize μ and check that K and P are disjoint.
    pub fn load(self) -> Result<Loaded, CliError> {
        let at = |field: &str, e: logpot::Error| CliError::Precondition(format!("scene field \"{field}\": {e}"));
        if self.resolution < 16 {
            return Err(CliError::Precondition(format!("scene field \"resolution\": must be at least 16, got {}", self.resolution)));
        }
        let t = &self.tolerances;
        if !(t.green > 0.0 && t.lambda_pass > 0.0 && t.lambda_fail >= t.lambda_pass) {
            return Err(CliError::Precondition(
                "scene field \"tolerances\": need green > 0 and 0 < lambda_pass <= lambda_fail".into(),
            ));
        }
        self.set.validate().map_err(|e| at("set", e))?;
        let k = SetDiscretization::discretize(&self.set, self.resolution).map_err(|e| at("set", e))?;
        let p = match &self.poles {
            Some(spec) => {
                spec.validate().map_err(|e| at("poles", e))?;
                let p = SetDiscretization::discretize(spec, self.resolution).map_err(|e| at("poles", e))?;
                if set_distance(&k, &p) < 0.5 * k.h.min(p.h) {
                    return Err(CliError::Precondition("scene fields \"set\" and \"poles\": K and P overlap".into()));
                }
                Some(p)
            }
            None => None,
        };
        let spec = self.measure.clone().unwrap_or_else(|| MeasureSpec::arclength(None, 1.0));
        let mu = realize(&spec, &k).map_err(|e| at("measure", e))?;
        Ok(Loaded { scene: self, k, p, mu })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_unknown_fields_rejected() {
        let err = |s: &str| match Scene::parse(s, "s.json") {
            Err(CliError::Precondition(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(err("").starts_with("s.json:1:0:"));
        assert!(err("{}").contains("missing field `set`"));
        let m = err("{\n  \"set\": {\"kind\": \"circle\", \"center\": [0, 0], \"radius\": 1},\n  \"colour\": 3\n}");
        assert!(m.starts_with("s.json:3:"), "{m}");
        assert!(m.contains("colour"));
    }

    #[test]
    fn defaults_and_overrides() {
        let mut s = Scene::parse(r#"{"set": {"kind": "circle", "center": [0, 0], "radius": 1}, "measure": {"kind": "mu_c", "atoms": 4}}"#, "s").unwrap();
        assert_eq!(s.resolution, 256);
        assert_eq!(s.tolerances, Tolerances::default());
        s.apply(&Overrides { seed: Some(9), resolution: Some(64), tol: Some(0.05) });
        assert_eq!(s.measure, Some(MeasureSpec::MuC { seed: 9, atoms: 4 }));
        assert_eq!((s.resolution, s.tolerances.green), (64, 0.05));
    }

    #[test]
    fn overlap_and_degenerate_sets_rejected() {
        let overlap = Scene::parse(
            r#"{"set": {"kind": "circle", "center": [0, 0], "radius": 1}, "poles": {"kind": "points", "points": [[1, 0]]}}"#,
            "s",
        )
        .unwrap();
        assert!(matches!(overlap.load(), Err(CliError::Precondition(m)) if m.contains("overlap")));
        let zero = Scene::parse(r#"{"set": {"kind": "circle", "center": [0, 0], "radius": 0}}"#, "s").unwrap();
        assert!(matches!(zero.load(), Err(CliError::Precondition(m)) if m.contains("\"set\"")));
        let ok = Scene::parse(
            r#"{"set": {"kind": "annulus", "center": [0, 0], "r_in": 0.5, "r_out": 1.0, "boundary_only": true}, "poles": {"kind": "points", "points": [[0, 0]]}}"#,
            "s",
        )
        .unwrap()
        .load()
        .unwrap();
        assert_eq!(ok.k.len(), 512);
        assert!(ok.poles().is_ok());
    }
}
