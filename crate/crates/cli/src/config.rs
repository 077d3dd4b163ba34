//! Campaign configuration: a TOML file of `key = value` lines, optionally
//! grouped under `[problem]`, `[domains]`, `[tolerances]`, `[campaign]` and
//! `[output]`. Every key has a default, so an empty file is valid.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use nls_spectral::eigen::EigenOptions;
use nls_spectral::index::IndexOptions;
use nls_spectral::model::{Dimension, ProblemSpec};
use nls_spectral::products::ProductOptions;
use nls_spectral::verdict::{PipelineOptions, Quantity, DEFAULT_DEGENERACY_REL};
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Nls1d,
    Nls3d,
    Cqnls,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Nls1d => "nls1d",
            Problem::Nls3d => "nls3d",
            Problem::Cqnls => "cqnls",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Problem::Nls1d => Dimension::One,
            _ => Dimension::Three,
        }
    }

    pub fn default_parameter(self) -> f64 {
        match self {
            Problem::Nls1d => 3.0,
            Problem::Nls3d => 1.0,
            Problem::Cqnls => 0.005,
        }
    }

    pub fn spec(self, parameter: f64) -> Result<ProblemSpec, nls_spectral::model::ModelError> {
        match self {
            Problem::Nls1d => ProblemSpec::nls1d(parameter),
            Problem::Nls3d => ProblemSpec::nls3d(parameter),
            Problem::Cqnls => ProblemSpec::cqnls(parameter),
        }
    }

    /// Sweep grid of the campaign: `(lo, hi, points)`.
    pub fn default_grid(self) -> Grid {
        match self {
            Problem::Nls1d => Grid { lo: 2.3, hi: 6.3, points: 41 },
            Problem::Nls3d => Grid { lo: 0.8, hi: 1.2, points: 41 },
            Problem::Cqnls => Grid { lo: 0.0, hi: 0.012, points: 25 },
        }
    }

    /// Bracket known to contain the sign change of `q`, if the quantity has
    /// one for this problem.
    pub fn default_bracket(self, q: Quantity) -> Option<(f64, f64)> {
        use Quantity::*;
        match (self, q) {
            (Problem::Nls3d, J1_0 | Jratio0) => Some((0.8, 0.9)),
            (Problem::Nls3d, K1_1) => Some((1.05, 1.2)),
            (Problem::Nls3d, Slope) => Some((0.5, 0.9)),
            (Problem::Cqnls, J1_0 | Jratio0) => Some((0.005, 0.012)),
            (Problem::Cqnls, Slope) => Some((0.0, 0.05)),
            (Problem::Nls1d, K1e) => Some((3.0, 4.0)),
            (Problem::Nls1d, J1e | Jratioe) => Some((2.3, 2.7)),
            (Problem::Nls1d, K1o) => Some((5.5, 6.3)),
            (Problem::Nls1d, Slope) => Some((1.5, 2.5)),
            _ => None,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Problem::from_str_insensitive(s)
    }
}

impl Problem {
    fn from_str_insensitive(s: &str) -> Result<Self, String> {
        <Problem as ValueEnum>::from_str(s, true).map_err(|_| format!("unknown problem {s:?} (nls1d, nls3d, cqnls)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        nls_spectral::verdict::uniform_grid(self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub problem: Problem,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub delta0: Vec<f64>,
    pub r_max_soliton: f64,
    pub r_max_index_3d: f64,
    pub r_max_index_1d: f64,
    pub tol_soliton_3d: f64,
    pub tol_soliton_1d: f64,
    pub tol_eigen: f64,
    pub tol_index: f64,
    pub tol_products_3d: f64,
    pub tol_products_1d: f64,
    pub abs_tol_products_1d: f64,
    pub tol_threshold: f64,
    pub degeneracy_rel: f64,
    pub grid: Option<Grid>,
    pub bracket: Option<(f64, f64)>,
    pub quantity: Option<String>,
    pub scan: Option<(f64, f64)>,
    pub out: PathBuf,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let p3 = ProductOptions::for_dimension(Dimension::Three);
        let p1 = ProductOptions::for_dimension(Dimension::One);
        let index = IndexOptions::default();
        CampaignConfig {
            problem: Problem::Nls3d,
            sigma: None,
            gamma: None,
            delta0: vec![0.0],
            r_max_soliton: 100.0,
            r_max_index_3d: index.span_for(Dimension::Three),
            r_max_index_1d: index.span_for(Dimension::One),
            tol_soliton_3d: 1e-12,
            tol_soliton_1d: 1e-10,
            tol_eigen: EigenOptions::default().tol,
            tol_index: index.tol,
            tol_products_3d: p3.tol,
            tol_products_1d: p1.tol,
            abs_tol_products_1d: p1.abs_tol,
            tol_threshold: 1e-10,
            degeneracy_rel: DEFAULT_DEGENERACY_REL,
            grid: None,
            bracket: None,
            quantity: None,
            scan: None,
            out: PathBuf::from("out"),
        }
    }
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("problem", &["problem", "sigma", "gamma", "delta0"]),
    ("domains", &["r_max_soliton", "r_max_index_3d", "r_max_index_1d"]),
    (
        "tolerances",
        &[
            "tol_soliton_3d",
            "tol_soliton_1d",
            "tol_eigen",
            "tol_index",
            "tol_products_3d",
            "tol_products_1d",
            "abs_tol_products_1d",
            "tol_threshold",
            "degeneracy_rel",
        ],
    ),
    ("campaign", &["grid", "bracket", "quantity", "scan"]),
    ("output", &["out"]),
];

fn known_key(key: &str) -> bool {
    SECTIONS.iter().any(|(_, keys)| keys.contains(&key))
}

/// 1-based line of the first `key =` assignment at or after `from`.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn number(field: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(field, "expected a number")),
    }
}

fn numbers(field: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(a) => a.iter().map(|x| number(field, x)).collect(),
        other => Ok(vec![number(field, other)?]),
    }
}

fn pair(field: &str, v: &Value) -> Result<(f64, f64), ConfigError> {
    match numbers(field, v)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(invalid(field, "expected [lo, hi]")),
    }
}

pub fn parse_config(path: &Path) -> Result<CampaignConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<CampaignConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        line: e.span().map_or(0, |s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut entries: Vec<(String, Value)> = Vec::new();
    for (key, value) in table {
        match value {
            Value::Table(inner) => {
                let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == key) else {
                    return Err(ConfigError::Parse {
                        line: text.lines().position(|l| l.trim() == format!("[{key}]")).map_or(0, |i| i + 1),
                        message: format!("unknown section [{key}]"),
                    });
                };
                for (k, v) in inner {
                    if !keys.contains(&k.as_str()) {
                        return Err(ConfigError::Parse {
                            line: line_of_key(text, &k),
                            message: format!("unknown key {k:?} in [{key}]"),
                        });
                    }
                    entries.push((k, v));
                }
            }
            v => {
                if !known_key(&key) {
                    return Err(ConfigError::Parse {
                        line: line_of_key(text, &key),
                        message: format!("unknown key {key:?}"),
                    });
                }
                entries.push((key, v));
            }
        }
    }
    let mut c = CampaignConfig::default();
    for (key, v) in &entries {
        let k = key.as_str();
        match k {
            "problem" => {
                let s = v.as_str().ok_or_else(|| invalid(k, "expected a string"))?;
                c.problem = Problem::from_str_insensitive(s).map_err(|m| invalid(k, m))?;
            }
            "sigma" => c.sigma = Some(number(k, v)?),
            "gamma" => c.gamma = Some(number(k, v)?),
            "delta0" => c.delta0 = numbers(k, v)?,
            "r_max_soliton" => c.r_max_soliton = number(k, v)?,
            "r_max_index_3d" => c.r_max_index_3d = number(k, v)?,
            "r_max_index_1d" => c.r_max_index_1d = number(k, v)?,
            "tol_soliton_3d" => c.tol_soliton_3d = number(k, v)?,
            "tol_soliton_1d" => c.tol_soliton_1d = number(k, v)?,
            "tol_eigen" => c.tol_eigen = number(k, v)?,
            "tol_index" => c.tol_index = number(k, v)?,
            "tol_products_3d" => c.tol_products_3d = number(k, v)?,
            "tol_products_1d" => c.tol_products_1d = number(k, v)?,
            "abs_tol_products_1d" => c.abs_tol_products_1d = number(k, v)?,
            "tol_threshold" => c.tol_threshold = number(k, v)?,
            "degeneracy_rel" => c.degeneracy_rel = number(k, v)?,
            "grid" => match numbers(k, v)?.as_slice() {
                &[lo, hi, n] if n >= 1.0 && n.fract() == 0.0 => {
                    c.grid = Some(Grid { lo, hi, points: n as usize })
                }
                _ => return Err(invalid(k, "expected [lo, hi, points] with a positive integer point count")),
            },
            "bracket" => c.bracket = Some(pair(k, v)?),
            "scan" => c.scan = Some(pair(k, v)?),
            "quantity" => c.quantity = Some(v.as_str().ok_or_else(|| invalid(k, "expected a string"))?.to_string()),
            "out" => c.out = PathBuf::from(v.as_str().ok_or_else(|| invalid(k, "expected a path string"))?),
            _ => unreachable!("key checked above"),
        }
    }
    c.validate()?;
    Ok(c)
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("r_max_soliton", self.r_max_soliton),
            ("r_max_index_3d", self.r_max_index_3d),
            ("r_max_index_1d", self.r_max_index_1d),
            ("tol_soliton_3d", self.tol_soliton_3d),
            ("tol_soliton_1d", self.tol_soliton_1d),
            ("tol_eigen", self.tol_eigen),
            ("tol_index", self.tol_index),
            ("tol_products_3d", self.tol_products_3d),
            ("tol_products_1d", self.tol_products_1d),
            ("tol_threshold", self.tol_threshold),
            ("degeneracy_rel", self.degeneracy_rel),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.abs_tol_products_1d.is_finite() && self.abs_tol_products_1d >= 0.0) {
            return Err(invalid("abs_tol_products_1d", "must be non-negative"));
        }
        if self.delta0.is_empty() {
            return Err(invalid("delta0", "needs at least one value"));
        }
        if self.delta0.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid("delta0", "values must be non-negative"));
        }
        if self.delta0.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("delta0", "values must be strictly increasing"));
        }
        if let Some(g) = self.grid {
            if !(g.lo.is_finite() && g.hi.is_finite() && (g.lo < g.hi || (g.points == 1 && g.lo == g.hi))) {
                return Err(invalid("grid", "needs lo < hi"));
            }
        }
        for (field, b) in [("bracket", self.bracket), ("scan", self.scan)] {
            if let Some((lo, hi)) = b {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid(field, "needs lo < hi"));
                }
            }
        }
        if let Some(q) = &self.quantity {
            q.parse::<Quantity>().map_err(|e| invalid("quantity", e.to_string()))?;
        }
        match self.problem {
            Problem::Cqnls if self.sigma.is_some() => return Err(invalid("sigma", "cqnls is parametrized by gamma")),
            Problem::Nls1d | Problem::Nls3d if self.gamma.is_some() => {
                return Err(invalid("gamma", format!("{} is parametrized by sigma", self.problem)))
            }
            _ => {}
        }
        if let Some(s) = self.sigma {
            self.problem.spec(s).map_err(|e| invalid("sigma", e.to_string()))?;
        }
        if let Some(g) = self.gamma {
            Problem::Cqnls.spec(g).map_err(|e| invalid("gamma", e.to_string()))?;
        }
        Ok(())
    }

    pub fn parameter(&self) -> f64 {
        self.sigma.or(self.gamma).unwrap_or_else(|| self.problem.default_parameter())
    }

    pub fn spec(&self) -> Result<ProblemSpec, ConfigError> {
        let field = if self.problem == Problem::Cqnls { "gamma" } else { "sigma" };
        self.problem.spec(self.parameter()).map_err(|e| invalid(field, e.to_string()))
    }

    pub fn index_options(&self, dimension: Dimension) -> IndexOptions {
        IndexOptions {
            tol: self.tol_index,
            span: Some(match dimension {
                Dimension::Three => self.r_max_index_3d,
                Dimension::One => self.r_max_index_1d,
            }),
            ..Default::default()
        }
    }

    pub fn product_options(&self, dimension: Dimension) -> ProductOptions {
        let base = ProductOptions::for_dimension(dimension);
        match dimension {
            Dimension::Three => ProductOptions { tol: self.tol_products_3d, ..base },
            Dimension::One => ProductOptions {
                tol: self.tol_products_1d,
                abs_tol: self.abs_tol_products_1d,
                ..base
            },
        }
    }

    pub fn pipeline_options(&self, dimension: Dimension) -> PipelineOptions {
        PipelineOptions {
            r_max: Some(self.r_max_soliton),
            soliton_tol: Some(match dimension {
                Dimension::Three => self.tol_soliton_3d,
                Dimension::One => self.tol_soliton_1d,
            }),
            eigen: EigenOptions {
                tol: self.tol_eigen,
                ..Default::default()
            },
            index: self.index_options(dimension),
            products: Some(self.product_options(dimension)),
            degeneracy_rel: self.degeneracy_rel,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config_str("").unwrap(), CampaignConfig::default());
        assert_eq!(parse_config_str("# nothing\n\n").unwrap(), CampaignConfig::default());
    }

    #[test]
    fn defaults_match_the_library() {
        let c = CampaignConfig::default();
        for d in [Dimension::One, Dimension::Three] {
            let spec = if d == Dimension::One { ProblemSpec::nls1d(3.0) } else { ProblemSpec::nls3d(1.0) }.unwrap();
            let ours = c.pipeline_options(d);
            let lib = PipelineOptions::default();
            assert_eq!(ours.soliton_options(&spec), lib.soliton_options(&spec));
            assert_eq!(ours.product_options(&spec), lib.product_options(&spec));
            assert_eq!(ours.index.span_for(d), lib.index.span_for(d));
            assert_eq!(ours.index.tol, lib.index.tol);
            assert_eq!(ours.eigen, lib.eigen);
        }
    }

    #[test]
    fn override_applied_flat_or_in_section() {
        let c = parse_config_str("r_max_index_3d = 400\n").unwrap();
        assert_eq!(c.r_max_index_3d, 400.0);
        let c = parse_config_str("[domains]\nr_max_index_3d = 400.0\n[problem]\nproblem = \"cqnls\"\ngamma = 0.01\n")
            .unwrap();
        assert_eq!(c.r_max_index_3d, 400.0);
        assert_eq!(c.problem, Problem::Cqnls);
        assert_eq!(c.parameter(), 0.01);
        let c = parse_config_str("delta0 = [0, 1e-4]\ngrid = [0.8, 1.2, 5]\n").unwrap();
        assert_eq!(c.delta0, [0.0, 1e-4]);
        assert_eq!(c.grid.unwrap().values().len(), 5);
    }

    #[test]
    fn gamma_beyond_existence_bound() {
        let e = parse_config_str("problem = \"cqnls\"\ngamma = 0.2\n").unwrap_err();
        assert!(matches!(&e, ConfigError::Validation { field, .. } if field == "gamma"), "{e}");
    }

    #[test]
    fn unknown_keys_and_bad_syntax_carry_lines() {
        let e = parse_config_str("sigma = 1.0\nfoo = 3\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }), "{e}");
        let e = parse_config_str("[domains]\nsigma = 1.0\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }), "{e}");
        let e = parse_config_str("[nowhere]\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 1, .. }), "{e}");
        let e = parse_config_str("sigma = 1.0\n\nproblem = nls3d\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn validation_names_the_field() {
        for (text, field) in [
            ("tol_index = 0", "tol_index"),
            ("tol_eigen = -1e-3", "tol_eigen"),
            ("grid = [1.2, 0.8, 41]", "grid"),
            ("grid = [0.8, 1.2, 2.5]", "grid"),
            ("bracket = [0.9, 0.8]", "bracket"),
            ("delta0 = [1e-4, 0]", "delta0"),
            ("quantity = \"K9\"", "quantity"),
            ("sigma = -1", "sigma"),
            ("gamma = 0.01", "gamma"),
            ("problem = \"nls2d\"", "problem"),
        ] {
            match parse_config_str(text) {
                Err(ConfigError::Validation { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
