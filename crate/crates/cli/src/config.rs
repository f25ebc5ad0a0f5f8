//! Run configuration. A config is one JSON document; command-line overrides
//! are applied to the raw document before it is typed, so `--set` can reach
//! any field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use ssusy_core::grid::Grid;
use ssusy_core::models::{CprsChoice, IsotonicChoice};
use ssusy_core::ssusy::QuasiSpec;

use crate::error::CliError;

pub const BUILTIN_MODELS: &[&str] = &["cprs", "isotonic"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    /// Empty means every check that applies to the model.
    #[serde(default)]
    pub checks: Vec<String>,
    /// Per-check threshold overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    /// Empty means every formula of the model.
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Builtin {
        name: String,
        #[serde(default)]
        params: Value,
    },
    Custom(CustomModel),
}

/// A Swanson model `{omega, alpha, beta, a, b}`, a factor pair
/// `{b1, b2, quasi}` (with `a_tilde`, defaulting to the model's), or both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub a_tilde: Option<String>,
    pub b1: Option<String>,
    pub b2: Option<String>,
    pub quasi: Option<QuasiSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.x_min, self.x_max, self.n)?)
    }

    pub fn from_grid(g: &Grid) -> GridConfig {
        GridConfig { x_min: g.x_min(), x_max: g.x_max(), n: g.n() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub k: usize,
    /// Empty means the model's default operators.
    pub operators: Vec<String>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { k: 5, operators: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub n: Vec<usize>,
    pub k: usize,
    /// `None` means the model's first default operator.
    pub operator: Option<String>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig { n: vec![1000, 2000, 4000], k: 5, operator: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub formulas: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    pub path: Option<String>,
}

pub fn read_document(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Replaces the model by the named builtin unless it already is that builtin.
pub fn select_model(doc: &mut Value, name: &str) -> Result<(), CliError> {
    let obj = as_object(doc)?;
    let same = obj
        .get("model")
        .map(|m| m.get("kind") == Some(&Value::from("builtin")) && m.get("name") == Some(&Value::from(name)))
        .unwrap_or(false);
    if !same {
        obj.insert("model".into(), serde_json::json!({ "kind": "builtin", "name": name }));
    }
    Ok(())
}

/// Applies `key.path=value`. The value is read as JSON when it parses and as
/// a plain string otherwise; missing intermediate objects are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("override key `{key}` is not a dotted path")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::from(raw));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let obj = as_object(cur)?;
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    as_object(cur)?.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn as_object(v: &mut Value) -> Result<&mut Map<String, Value>, CliError> {
    if v.is_null() {
        *v = Value::Object(Map::new());
    }
    v.as_object_mut().ok_or_else(|| CliError::Config("expected a JSON object".into()))
}

/// Grid used when a builtin model's config has none: the symmetric box for
/// `κ = 0`, otherwise `(x_min, 10]` standing ten cells off the origin.
pub fn default_grid(model: &ModelConfig) -> Result<Option<Grid>, CliError> {
    match model {
        ModelConfig::Builtin { name, params } => match name.as_str() {
            "cprs" => {
                let ch = cprs_choice(params)?;
                Ok(Some(if ch.kappa == 0.0 { Grid::new(-10.0, 10.0, 4000)? } else { Grid::standoff(10.0, 4000)? }))
            }
            "isotonic" => Ok(Some(Grid::standoff(10.0, 2000)?)),
            other => Err(unknown_model(other)),
        },
        ModelConfig::Custom(_) => Ok(None),
    }
}

fn unknown_model(name: &str) -> CliError {
    CliError::Config(format!("unknown builtin model `{name}`; expected one of {}", BUILTIN_MODELS.join(", ")))
}

fn params_or_default<T: for<'de> Deserialize<'de> + Default>(params: &Value, what: &str) -> Result<T, CliError> {
    if params.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(params.clone()).map_err(|e| CliError::Config(format!("{what} parameters: {e}")))
}

pub fn cprs_choice(params: &Value) -> Result<CprsChoice, CliError> {
    let ch: CprsChoice = params_or_default(params, "cprs")?;
    ch.validate()?;
    Ok(ch)
}

pub fn isotonic_choice(params: &Value) -> Result<IsotonicChoice, CliError> {
    let ch: IsotonicChoice = params_or_default(params, "isotonic")?;
    ch.constants()?;
    Ok(ch)
}

/// Loads, overrides, fills builtin defaults and types the document.
pub fn resolve(mut doc: Value, model: Option<&str>, sets: &[String]) -> Result<RunConfig, CliError> {
    if let Some(name) = model {
        select_model(&mut doc, name)?;
    }
    for s in sets {
        apply_override(&mut doc, s)?;
    }
    let obj = as_object(&mut doc)?;
    let model_value = obj.get("model").cloned().ok_or_else(|| CliError::Config("missing `model` block".into()))?;
    let model: ModelConfig =
        serde_json::from_value(model_value).map_err(|e| CliError::Config(format!("model: {e}")))?;
    // Fields a builtin's grid block leaves out come from its default grid.
    match (obj.get_mut("grid"), default_grid(&model)?) {
        (None, None) => return Err(CliError::Config("missing `grid` block (required for custom models)".into())),
        (Some(_), None) => {}
        (slot, Some(g)) => {
            let defaults = serde_json::to_value(GridConfig::from_grid(&g)).expect("grid serializes");
            let Value::Object(defaults) = defaults else { unreachable!("grid serializes to an object") };
            let grid = match slot {
                Some(v) => as_object(v)?,
                None => as_object(obj.entry("grid").or_insert(Value::Null))?,
            };
            for (k, v) in defaults {
                grid.entry(k).or_insert(v);
            }
        }
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.grid.grid()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_reach_nested_fields() {
        let mut doc = json!({ "grid": { "n": 10 } });
        apply_override(&mut doc, "grid.n=2000").unwrap();
        apply_override(&mut doc, "model.params.kappa=0.5").unwrap();
        apply_override(&mut doc, "model.name=cprs").unwrap();
        assert_eq!(doc["grid"]["n"], json!(2000));
        assert_eq!(doc["model"]["params"]["kappa"], json!(0.5));
        assert_eq!(doc["model"]["name"], json!("cprs"));
        assert!(apply_override(&mut doc, "grid.n").is_err());
        assert!(apply_override(&mut doc, "grid..n=1").is_err());
    }

    #[test]
    fn builtin_models_get_default_grids() {
        let cfg = resolve(Value::Null, Some("cprs"), &[]).unwrap();
        assert_eq!(cfg.grid, GridConfig { x_min: -10.0, x_max: 10.0, n: 4000 });
        let cfg = resolve(Value::Null, Some("cprs"), &["model.params.kappa=0.5".into()]).unwrap();
        assert!(cfg.grid.x_min > 0.0);
        let cfg = resolve(Value::Null, Some("cprs"), &["grid.x_min=0".into()]).unwrap();
        assert_eq!(cfg.grid, GridConfig { x_min: 0.0, x_max: 10.0, n: 4000 });
        assert!(resolve(Value::Null, Some("nonesuch"), &[]).is_err());
    }

    #[test]
    fn custom_models_require_a_grid() {
        let doc = json!({ "model": { "kind": "custom", "b1": "x", "b2": "x", "a_tilde": "1",
                                     "quasi": { "kind": "split_c", "c": -2.0 } } });
        assert!(matches!(resolve(doc.clone(), None, &[]), Err(CliError::Config(_))));
        let cfg = resolve(doc, None, &["grid={\"x_min\":-10,\"x_max\":10,\"n\":100}".into()]).unwrap();
        assert_eq!(cfg.grid.n, 100);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(resolve(Value::Null, Some("cprs"), &["model.params.kapa=0.5".into()]).is_err());
        assert!(resolve(Value::Null, Some("cprs"), &["colour=red".into()]).is_err());
    }
}
