//! On-disk game description: a small JSON schema shared by every subcommand.
//!
//! ```json
//! {
//!   "states": ["0", "1"],
//!   "generator": [[-1.0, 1.0], [2.0, -2.0]],
//!   "beta": "1/5",
//!   "psi": [4, 7],
//!   "phi": [5, 10],
//!   "init": "strict",
//!   "arithmetic": "rational"
//! }
//! ```
//!
//! Every numeric cell may be a JSON number or a string; strings admit
//! both decimal and "p/q" notation so exact-rational data can round-trip
//! without binary rounding. `init` and `arithmetic` are optional defaults
//! that the command-line flags override.

use std::path::Path;
use std::str::FromStr;

use dynkin::{GameSpec, GeneratorMatrix, InitMode, StateSpace};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scalar_ext::{parse_cells, CliScalar};

/// One numeric entry of a spec file: a JSON number or a numeric string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    /// Plain JSON number.
    Number(f64),
    /// String form: decimal ("0.25") or fraction ("1/4").
    Text(String),
}

impl From<f64> for CellValue {
    fn from(v: f64) -> Self {
        CellValue::Number(v)
    }
}

impl From<&str> for CellValue {
    fn from(s: &str) -> Self {
        CellValue::Text(s.to_owned())
    }
}

/// The JSON document describing one stopping game.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    /// State labels, one per row of the generator.
    pub states: Vec<String>,
    /// Square rate matrix, row-major.
    pub generator: Vec<Vec<CellValue>>,
    /// Discount rate, strictly positive.
    pub beta: CellValue,
    /// Lower payoff, one entry per state.
    pub psi: Vec<CellValue>,
    /// Upper payoff, one entry per state.
    pub phi: Vec<CellValue>,
    /// Optional default initialization mode ("strict" | "weak").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    /// Optional default arithmetic ("float" | "rational").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<String>,
}

impl SpecFile {
    /// Read and deserialize a spec file.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(&path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(&path.display().to_string(), e))
    }

    /// Serialize as pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec files serialize");
        s.push('\n');
        s
    }

    /// Build a validated game description in the requested arithmetic.
    pub fn build<S: CliScalar>(&self) -> Result<GameSpec<S>, CliError> {
        let states = StateSpace::new(self.states.clone())
            .map_err(|e| CliError::Invalid(format!("states: {e}")))?;
        let n = states.len();
        if self.generator.len() != n {
            return Err(CliError::Invalid(format!(
                "generator has {} rows but there are {n} states",
                self.generator.len()
            )));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, row) in self.generator.iter().enumerate() {
            rows.push(parse_cells::<S>(row, &format!("generator[{i}]"))?);
        }
        let generator =
            GeneratorMatrix::from_rows(rows).map_err(|e| CliError::Invalid(format!("generator: {e}")))?;
        let beta = S::parse_cell(&self.beta, "beta")?;
        let psi = parse_cells::<S>(&self.psi, "psi")?;
        let phi = parse_cells::<S>(&self.phi, "phi")?;
        GameSpec::new(states, generator, beta, psi, phi)
            .map_err(|e| CliError::Invalid(e.to_string()))
    }

    /// Initialization mode: flag beats file field beats strict default.
    pub fn resolve_mode(&self, flag: Option<InitMode>) -> Result<InitMode, CliError> {
        if let Some(m) = flag {
            return Ok(m);
        }
        match &self.init {
            None => Ok(InitMode::Strict),
            Some(s) => InitMode::from_str(s)
                .map_err(|e| CliError::Invalid(format!("init: {e}"))),
        }
    }

    /// Arithmetic: flag beats file field beats float default.
    pub fn resolve_arithmetic(&self, flag: Option<Arithmetic>) -> Result<Arithmetic, CliError> {
        if let Some(a) = flag {
            return Ok(a);
        }
        match &self.arithmetic {
            None => Ok(Arithmetic::Float),
            Some(s) => Arithmetic::from_str(s),
        }
    }
}

/// Which scalar type a run computes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    /// IEEE double precision.
    Float,
    /// Arbitrary-precision rationals.
    Rational,
}

impl Arithmetic {
    /// Parse "float" | "rational" (case-insensitive).
    pub fn from_str(s: &str) -> Result<Self, CliError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("float") {
            Ok(Arithmetic::Float)
        } else if t.eq_ignore_ascii_case("rational") {
            Ok(Arithmetic::Rational)
        } else {
            Err(CliError::Invalid(format!(
                "arithmetic must be \"float\" or \"rational\", got {s:?}"
            )))
        }
    }

    /// The canonical name written into report metadata.
    pub fn name(self) -> &'static str {
        match self {
            Arithmetic::Float => "float",
            Arithmetic::Rational => "rational",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipes;

    fn tiny_spec_json() -> &'static str {
        r#"{
            "states": ["a", "b"],
            "generator": [[-1.0, 1.0], ["2", -2.0]],
            "beta": "1/5",
            "psi": [4, 0],
            "phi": [5, "60/11"]
        }"#
    }

    #[test]
    fn cells_deserialize_untagged() {
        let file: SpecFile = serde_json::from_str(tiny_spec_json()).unwrap();
        assert!(matches!(file.generator[0][0], CellValue::Number(v) if v == -1.0));
        assert!(matches!(&file.generator[1][0], CellValue::Text(s) if s == "2"));
        assert!(matches!(&file.beta, CellValue::Text(s) if s == "1/5"));
    }

    #[test]
    fn build_works_in_both_arithmetics() {
        let file: SpecFile = serde_json::from_str(tiny_spec_json()).unwrap();
        let float = file.build::<f64>().unwrap();
        assert_eq!(float.dim(), 2);
        assert_eq!(float.phi()[1], 60.0 / 11.0);
        let exact = file.build::<dynkin::Rational>().unwrap();
        assert_eq!(exact.beta().to_string(), "1/5");
        assert_eq!(exact.phi()[1].to_string(), "60/11");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"states":["a"],"generator":[[0]],"beta":1,"psi":[0],"phi":[0],"extra":1}"#;
        assert!(serde_json::from_str::<SpecFile>(text).is_err());
    }

    #[test]
    fn row_count_mismatch_is_a_validation_error() {
        let mut file: SpecFile = serde_json::from_str(tiny_spec_json()).unwrap();
        file.generator.pop();
        let err = file.build::<f64>().unwrap_err();
        assert_eq!(err.code(), crate::error::exit::VALIDATION);
        assert!(err.to_string().contains("generator"), "{err}");
    }

    #[test]
    fn json_round_trip_preserves_built_games() {
        let file = recipes::four_state_neq();
        let text = file.to_json_string();
        let back: SpecFile = serde_json::from_str(&text).unwrap();
        let a = file.build::<f64>().unwrap();
        let b = back.build::<f64>().unwrap();
        assert_eq!(a.psi(), b.psi());
        assert_eq!(a.phi(), b.phi());
        assert_eq!(a.beta(), b.beta());
    }

    #[test]
    fn mode_resolution_prefers_flag_then_field_then_strict() {
        let mut file: SpecFile = serde_json::from_str(tiny_spec_json()).unwrap();
        assert_eq!(file.resolve_mode(None).unwrap(), InitMode::Strict);
        file.init = Some("weak".to_owned());
        assert_eq!(file.resolve_mode(None).unwrap(), InitMode::Weak);
        assert_eq!(
            file.resolve_mode(Some(InitMode::Strict)).unwrap(),
            InitMode::Strict
        );
        file.init = Some("sideways".to_owned());
        assert!(file.resolve_mode(None).is_err());
    }

    #[test]
    fn arithmetic_resolution_prefers_flag_then_field_then_float() {
        let mut file: SpecFile = serde_json::from_str(tiny_spec_json()).unwrap();
        assert_eq!(file.resolve_arithmetic(None).unwrap(), Arithmetic::Float);
        file.arithmetic = Some("Rational".to_owned());
        assert_eq!(file.resolve_arithmetic(None).unwrap(), Arithmetic::Rational);
        assert_eq!(
            file.resolve_arithmetic(Some(Arithmetic::Float)).unwrap(),
            Arithmetic::Float
        );
        file.arithmetic = Some("decimal".to_owned());
        assert!(file.resolve_arithmetic(None).is_err());
    }

    #[test]
    fn arithmetic_names_round_trip() {
        for a in [Arithmetic::Float, Arithmetic::Rational] {
            assert_eq!(Arithmetic::from_str(a.name()).unwrap(), a);
        }
        assert!(Arithmetic::from_str("fixed").is_err());
    }
}
