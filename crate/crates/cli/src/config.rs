//! Flat run configuration: a JSON object of scalar keys, layered from a
//! preset, a file and `--set` overrides, in that order.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use privmkt::{
    CertifyRequest, DistributionKind, InitialRisks, OracleGrid, Params, RiskDistribution, SolverConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub type Layer = Map<String, Value>;

/// Starting risks as written in a config: a rule name or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Rule(String),
    Explicit(Vec<f64>),
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Rule("spread".into())
    }
}

fn d_c() -> f64 {
    0.5
}
fn d_lambda() -> f64 {
    0.75
}
fn d_r() -> f64 {
    0.7
}
fn d_p() -> Vec<f64> {
    vec![0.4, 0.8]
}
fn d_sigma() -> f64 {
    1.0
}
fn d_max_iters() -> usize {
    200
}
fn d_br_grid() -> usize {
    512
}
fn d_br_refine_tol() -> f64 {
    1e-8
}
fn d_cycle_window() -> usize {
    50
}
fn d_true() -> bool {
    true
}
fn d_points() -> usize {
    400
}
fn d_cert_tol() -> f64 {
    privmkt::oracle::DEFAULT_CERT_TOL
}

/// Every knob of a run. Market coefficients default to the reference
/// example; `t` and `eps_bar` have no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    #[serde(default = "d_r")]
    pub r: f64,
    #[serde(default = "d_p")]
    pub p: Vec<f64>,
    pub t: Option<f64>,
    pub eps_bar: Option<f64>,
    #[serde(default)]
    pub distribution: DistributionKind,
    /// Standard deviation of the truncated normal, in risk units.
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub eps_tol: Option<f64>,
    #[serde(default = "d_max_iters")]
    pub max_iters: usize,
    #[serde(default = "d_br_grid")]
    pub br_grid: usize,
    #[serde(default = "d_br_refine_tol")]
    pub br_refine_tol: f64,
    #[serde(default = "d_cycle_window")]
    pub cycle_window: usize,
    #[serde(default = "d_true")]
    pub stop_on_cycle: bool,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default = "d_points")]
    pub eps_points: usize,
    #[serde(default = "d_points")]
    pub v_points: usize,
    #[serde(default = "d_cert_tol")]
    pub cert_tol: f64,
}

impl RunConfig {
    pub fn from_layer(layer: &Layer) -> Result<Self> {
        serde_json::from_value(Value::Object(layer.clone())).context("invalid configuration")
    }

    pub fn market(&self) -> Result<(Params, RiskDistribution<f64>)> {
        let t = self.t.ok_or_else(|| anyhow!("missing required parameter `t`"))?;
        let eps_bar = self
            .eps_bar
            .ok_or_else(|| anyhow!("missing required parameter `eps_bar`"))?;
        let params = Params::new(self.c, self.lambda, self.r, t, eps_bar, self.p.clone())?;
        let sigma = (self.distribution == DistributionKind::TruncatedNormal).then_some(self.sigma);
        let dist = RiskDistribution::from_kind(self.distribution, eps_bar, sigma)?;
        Ok((params, dist))
    }

    pub fn solver(&self) -> Result<SolverConfig<f64>> {
        let initial = match &self.initial {
            InitialSpec::Rule(rule) => match rule.as_str() {
                "spread" => InitialRisks::Spread,
                "staggered" => InitialRisks::Staggered,
                other => bail!("unknown initial rule `{other}` (expected spread, staggered or a list)"),
            },
            InitialSpec::Explicit(eps) => InitialRisks::Explicit(eps.clone()),
        };
        let cfg = SolverConfig {
            eps_tol: self.eps_tol,
            max_iters: self.max_iters,
            br_grid: self.br_grid,
            br_refine_tol: self.br_refine_tol,
            cycle_window: self.cycle_window,
            stop_on_cycle: self.stop_on_cycle,
            damping: self.damping,
            initial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn certify_request(&self) -> CertifyRequest<f64> {
        CertifyRequest {
            grid: OracleGrid::new(self.eps_points, self.v_points),
            cert_tol: self.cert_tol,
        }
    }
}

/// Reads a config file; it must hold a single JSON object.
pub fn read_layer(path: &Path) -> Result<Layer> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))? {
        Value::Object(map) => Ok(map),
        _ => bail!("{}: expected a JSON object", path.display()),
    }
}

/// Parses `name=value`. The value is read as JSON when it parses, as a
/// plain string otherwise.
pub fn parse_assignment(arg: &str) -> Result<(String, Value)> {
    let (name, raw) = arg
        .split_once('=')
        .ok_or_else(|| anyhow!("expected name=value, got `{arg}`"))?;
    let name = name.trim();
    if name.is_empty() {
        bail!("empty parameter name in `{arg}`");
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    Ok((name.to_string(), value))
}

/// `p1`, `p2`, ... address single entries of `p` (1-based).
fn p_index(name: &str) -> Option<usize> {
    let k: usize = name.strip_prefix('p')?.parse().ok()?;
    (k >= 1).then(|| k - 1)
}

/// Sets one key, routing `pN` into the `p` array.
pub fn assign(layer: &mut Layer, name: &str, value: Value) -> Result<()> {
    if let Some(k) = p_index(name) {
        let mut p = match layer.get("p") {
            Some(existing) => serde_json::from_value::<Vec<f64>>(existing.clone()).context("`p` must be a list")?,
            None => d_p(),
        };
        let x = value
            .as_f64()
            .ok_or_else(|| anyhow!("`{name}` must be a number"))?;
        if k >= p.len() {
            bail!("`{name}` addresses SP {} but only {} revenues are set", k + 1, p.len());
        }
        p[k] = x;
        layer.insert("p".into(), serde_json::to_value(p)?);
    } else {
        layer.insert(name.to_string(), value);
    }
    Ok(())
}

pub fn merge(base: &mut Layer, top: Layer) -> Result<()> {
    for (k, v) in top {
        assign(base, &k, v)?;
    }
    Ok(())
}

/// Names a sweep axis may use.
pub fn is_numeric_param(name: &str) -> bool {
    matches!(name, "c" | "lambda" | "r" | "t" | "eps_bar" | "sigma") || p_index(name).is_some()
}

/// Three-SP best-response runs with the middle SP's fixed revenue at
/// 0.75, 0.60 or 0.45.
pub const TRACE_PRESETS: [(&str, f64); 3] = [("p2-0.75", 0.75), ("p2-0.60", 0.60), ("p2-0.45", 0.45)];

pub fn preset(name: &str) -> Result<Layer> {
    let (_, p2) = TRACE_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            let names: Vec<_> = TRACE_PRESETS.iter().map(|(n, _)| *n).collect();
            anyhow!("unknown preset `{name}` (known: {})", names.join(", "))
        })?;
    let value = serde_json::json!({
        "p": [0.4, p2, 0.8],
        "t": 0.7,
        "eps_bar": 5.0,
        "initial": "staggered",
        "max_iters": 100,
        "stop_on_cycle": false,
    });
    match value {
        Value::Object(map) => Ok(map),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_parsing() {
        assert_eq!(parse_assignment("t=0.7").unwrap(), ("t".into(), Value::from(0.7)));
        assert_eq!(
            parse_assignment("initial=staggered").unwrap().1,
            Value::String("staggered".into())
        );
        assert!(parse_assignment("t").is_err());
        assert!(parse_assignment("=1").is_err());
    }

    #[test]
    fn revenue_entries() {
        let mut layer = Layer::new();
        assign(&mut layer, "p2", Value::from(0.6)).unwrap();
        assert_eq!(layer["p"], serde_json::json!([0.4, 0.6]));
        assert!(assign(&mut layer, "p3", Value::from(0.6)).is_err());
        assign(&mut layer, "p", serde_json::json!([0.1, 0.2, 0.3])).unwrap();
        assign(&mut layer, "p3", Value::from(0.9)).unwrap();
        assert_eq!(layer["p"], serde_json::json!([0.1, 0.2, 0.9]));
    }

    #[test]
    fn missing_eps_bar() {
        let mut layer = Layer::new();
        assign(&mut layer, "t", Value::from(0.7)).unwrap();
        let cfg = RunConfig::from_layer(&layer).unwrap();
        let err = cfg.market().unwrap_err().to_string();
        assert!(err.contains("eps_bar"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let mut layer = Layer::new();
        layer.insert("epsbar".into(), Value::from(5.0));
        assert!(RunConfig::from_layer(&layer).is_err());
    }

    #[test]
    fn presets_resolve() {
        for (name, p2) in TRACE_PRESETS {
            let cfg = RunConfig::from_layer(&preset(name).unwrap()).unwrap();
            assert_eq!(cfg.p, vec![0.4, p2, 0.8]);
            assert!(cfg.market().is_ok());
        }
        assert!(preset("nope").is_err());
    }
}
