//! Pre-registered experiment recipes and the protocols that run them.
//!
//! A recipe names a protocol and carries its parameters as JSON. Protocols
//! are trait objects looked up by name, so new ones can be registered without
//! touching [`run_recipe`].

mod lv;
mod protocols;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::systems::SystemSpec;

pub use lv::{check_lv_orbit, lv_hlevel_sampler, LvOrbitCheck, LvTolerances};
pub use protocols::{
    BohrSommerfeldParams, BohrSommerfeldProtocol, DiffSpecParams, DiffSpecProtocol, LvHLevelParams,
    LvHLevelProtocol, SurveyProtocol, SurveyProtocolParams,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecipe {
    pub name: String,
    /// Required by the survey and lv-hlevel protocols; spectral protocols
    /// read their potentials from `parameters`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    pub protocol: String,
    #[serde(default)]
    pub parameters: Value,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentRecipe {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub(crate) fn require_system(&self) -> Result<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Config(format!("protocol `{}` needs a system", self.protocol)))
    }

    pub(crate) fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        let v = if self.parameters.is_null() { json!({}) } else { self.parameters.clone() };
        serde_json::from_value(v)
            .map_err(|e| Error::Config(format!("{} parameters: {e}", self.protocol)))
    }
}

/// Everything a protocol produces for a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutput {
    pub verdict: String,
    pub tolerances: Value,
    pub results: Value,
    pub summary_csv: String,
}

pub trait Protocol: Send + Sync {
    fn name(&self) -> &'static str;
    /// Checks the recipe against the protocol schema without running it.
    fn validate(&self, recipe: &ExperimentRecipe) -> Result<()>;
    fn run(&self, recipe: &ExperimentRecipe) -> Result<ProtocolOutput>;
}

pub struct ProtocolRegistry {
    protocols: BTreeMap<String, Box<dyn Protocol>>,
}

impl ProtocolRegistry {
    pub fn builtin() -> Self {
        let mut r = Self {
            protocols: BTreeMap::new(),
        };
        r.register(Box::new(SurveyProtocol));
        r.register(Box::new(LvHLevelProtocol));
        r.register(Box::new(DiffSpecProtocol));
        r.register(Box::new(BohrSommerfeldProtocol));
        r
    }

    pub fn register(&mut self, p: Box<dyn Protocol>) {
        self.protocols.insert(p.name().to_string(), p);
    }

    pub fn names(&self) -> Vec<&str> {
        self.protocols.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Protocol> {
        self.protocols
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unknown {
                kind: "protocol",
                name: name.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub recipe: ExperimentRecipe,
    pub tolerances: Value,
    pub verdict: String,
    pub results: Value,
    #[serde(skip)]
    pub summary_csv: String,
}

impl ReportDocument {
    pub fn file_stem(&self) -> String {
        format!("{}-{}", self.recipe.name, self.recipe.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<recipe>-<seed>.report.json` and `<recipe>-<seed>.summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("{}.report.json", self.file_stem()));
        let csv_path = dir.join(format!("{}.summary.csv", self.file_stem()));
        std::fs::write(&json_path, self.to_json()?)?;
        std::fs::write(&csv_path, &self.summary_csv)?;
        Ok((json_path, csv_path))
    }
}

pub fn run_recipe(recipe: &ExperimentRecipe) -> Result<ReportDocument> {
    run_recipe_with(&ProtocolRegistry::builtin(), recipe)
}

pub fn run_recipe_with(registry: &ProtocolRegistry, recipe: &ExperimentRecipe) -> Result<ReportDocument> {
    let ctx = format!("recipe `{}`", recipe.name);
    let protocol = registry.get(&recipe.protocol).map_err(|e| e.with_context(ctx.clone()))?;
    protocol.validate(recipe).map_err(|e| e.with_context(ctx.clone()))?;
    let out = protocol.run(recipe).map_err(|e| e.with_context(ctx))?;
    Ok(ReportDocument {
        schema_version: SCHEMA_VERSION,
        tool_version: crate::VERSION.to_string(),
        recipe: recipe.clone(),
        tolerances: out.tolerances,
        verdict: out.verdict,
        results: out.results,
        summary_csv: out.summary_csv,
    })
}

/// Named recipes shipped with the library.
pub struct RecipeRegistry {
    recipes: BTreeMap<String, ExperimentRecipe>,
}

impl RecipeRegistry {
    pub fn builtin() -> Self {
        let lv_system = SystemSpec::new(
            "lotka-volterra",
            json!({"eps": [1.0, -1.0], "A": [[0.0, -1.0], [1.0, 0.0]]}),
        );
        let list = [
            ExperimentRecipe {
                name: "ho-survey".into(),
                system: Some(SystemSpec::new("harmonic-oscillator", json!({"m": 1.0, "k": 1.0, "dof": 2}))),
                protocol: "survey".into(),
                parameters: json!({"energy": 1.0, "count": 64, "h": 1e-3, "tol_rel": 1e-6}),
                seed: 7,
            },
            ExperimentRecipe {
                name: "kepler-iso-energy".into(),
                system: Some(SystemSpec::new(
                    "kepler",
                    json!({"G": 1.0, "M": 1.0, "m": 1.0, "dim": 2, "min_perihelion_frac": 0.2}),
                )),
                protocol: "survey".into(),
                parameters: json!({"energy": -0.5, "count": 16, "h": 2.5e-5, "tol_rel": 1e-6}),
                seed: 7,
            },
            ExperimentRecipe {
                name: "lv-hlevel".into(),
                system: Some(lv_system),
                protocol: "lv-hlevel".into(),
                parameters: json!({"levels": [-2.5, -3.0, -4.0], "count_per_level": 20}),
                seed: 7,
            },
            ExperimentRecipe {
                name: "x2-lattice".into(),
                system: None,
                protocol: "diffspec".into(),
                parameters: json!({
                    "potential": "x^2", "energy": 1.0, "hbars": [0.1, 0.05, 0.02],
                    "c": 1.0, "delta": 0.25, "expect": "LATTICE",
                }),
                seed: 0,
            },
            ExperimentRecipe {
                name: "aniso-dense".into(),
                system: None,
                protocol: "diffspec".into(),
                parameters: json!({
                    "separable": ["x^2", "2y^2"], "energy": 5.0, "hbars": [0.05, 0.02, 0.01],
                    "c": 2.0, "delta": 0.25, "expect": "DENSE",
                }),
                seed: 0,
            },
            ExperimentRecipe {
                name: "x4-bohr-sommerfeld".into(),
                system: Some(SystemSpec::new("potential-1d", json!({"V": "x^4", "c": 1.0}))),
                protocol: "bohr-sommerfeld".into(),
                parameters: json!({"energy": 1.0, "hbar": 0.02, "c": 1.0, "delta": 0.25, "half_width": 2.0}),
                seed: 0,
            },
        ];
        Self {
            recipes: list.into_iter().map(|r| (r.name.clone(), r)).collect(),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.recipes.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<ExperimentRecipe> {
        self.recipes.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "recipe",
            name: name.to_string(),
        })
    }

    pub fn register(&mut self, recipe: ExperimentRecipe) {
        self.recipes.insert(recipe.name.clone(), recipe);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_recipes_validate() {
        let recipes = RecipeRegistry::builtin();
        let protocols = ProtocolRegistry::builtin();
        assert_eq!(protocols.names(), vec!["bohr-sommerfeld", "diffspec", "lv-hlevel", "survey"]);
        for name in recipes.names() {
            let r = recipes.get(name).unwrap();
            protocols.get(&r.protocol).unwrap().validate(&r).unwrap();
        }
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(RecipeRegistry::builtin().get("nope"), Err(Error::Unknown { .. })));
        let mut r = RecipeRegistry::builtin().get("ho-survey").unwrap();
        r.protocol = "nope".into();
        let err = run_recipe(&r).unwrap_err();
        assert!(err.to_string().contains("ho-survey"), "{err}");
    }

    #[test]
    fn schema_violations_are_config_errors() {
        let mut r = RecipeRegistry::builtin().get("ho-survey").unwrap();
        r.parameters = json!({"energy": 1.0, "count": 4, "bogus": 1});
        let err = run_recipe(&r).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let mut r = RecipeRegistry::builtin().get("lv-hlevel").unwrap();
        r.system = None;
        assert!(run_recipe(&r).is_err());
    }

    #[test]
    fn survey_report_is_complete_and_repeatable() {
        let mut r = RecipeRegistry::builtin().get("ho-survey").unwrap();
        r.parameters["count"] = json!(8);
        let a = run_recipe(&r).unwrap();
        let b = run_recipe(&r).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.verdict, "SAME-PERIOD");
        assert_eq!(a.schema_version, SCHEMA_VERSION);
        assert_eq!(a.file_stem(), "ho-survey-7");
        let doc: Value = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(doc["recipe"]["name"], "ho-survey");
        assert!(doc["tolerances"]["tol_rel"].is_number());
        assert!(doc["tool_version"].is_string());
        assert!(a.summary_csv.starts_with("sample,verdict,T,residual"));
    }

    #[test]
    fn recipe_json_round_trip() {
        let r = RecipeRegistry::builtin().get("aniso-dense").unwrap();
        let back = ExperimentRecipe::from_json(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
    }
}
