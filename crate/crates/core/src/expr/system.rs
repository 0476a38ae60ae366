use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{parse, Bindings, Expression};
use crate::error::{Error, Result};
use crate::jets::{seed, Jet};

/// Descriptive tag only; never changes behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialClass {
    Fundamental,
    Legendre,
    Diffeomorphic,
}

impl FromStr for PotentialClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fundamental" => Ok(PotentialClass::Fundamental),
            "legendre" => Ok(PotentialClass::Legendre),
            "diffeomorphic" => Ok(PotentialClass::Diffeomorphic),
            other => Err(Error::Catalog(format!("unknown potential class `{other}`"))),
        }
    }
}

impl fmt::Display for PotentialClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PotentialClass::Fundamental => "fundamental",
            PotentialClass::Legendre => "legendre",
            PotentialClass::Diffeomorphic => "diffeomorphic",
        })
    }
}

/// A strict inequality `lhs > rhs` (or `lhs < rhs`), stored as `margin > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub text: String,
    pub margin: Expression,
}

impl Constraint {
    pub fn parse(text: &str) -> Result<Constraint> {
        let (pos, greater) = match (text.find('>'), text.find('<')) {
            (Some(p), None) => (p, true),
            (None, Some(p)) => (p, false),
            _ => {
                return Err(Error::Catalog(format!(
                    "domain constraint `{text}` must contain exactly one of `>` or `<`"
                )))
            }
        };
        let lhs = parse(&text[..pos])?;
        let rhs = parse(&text[pos + 1..])?;
        let margin = if greater { lhs.sub(rhs) } else { rhs.sub(lhs) };
        Ok(Constraint {
            text: text.trim().to_string(),
            margin,
        })
    }
}

/// A fundamental equation `potential = equation(variables)` with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDefinition {
    pub name: String,
    pub potential: String,
    pub variables: Vec<String>,
    pub equation: Expression,
    pub domain: Vec<Constraint>,
    pub class: PotentialClass,
    /// Optional interior state used as a default evaluation point.
    pub reference: Option<Vec<f64>>,
}

impl SystemDefinition {
    pub fn new(
        name: impl Into<String>,
        potential: impl Into<String>,
        variables: Vec<String>,
        equation: Expression,
        domain: Vec<Constraint>,
    ) -> Result<Self> {
        let system = SystemDefinition {
            name: name.into(),
            potential: potential.into(),
            variables,
            equation,
            domain,
            class: PotentialClass::Fundamental,
            reference: None,
        };
        system.validate()?;
        Ok(system)
    }

    fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Catalog(format!("system `{}` has no variables", self.name)));
        }
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].contains(v) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        let check_vars = |e: &Expression, what: &str| -> Result<()> {
            for v in e.variables() {
                if !self.variables.contains(&v) {
                    return Err(Error::Catalog(format!(
                        "{what} references undeclared variable `{v}`"
                    )));
                }
            }
            Ok(())
        };
        check_vars(&self.equation, "equation")?;
        for c in &self.domain {
            check_vars(&c.margin, &format!("constraint `{}`", c.text))?;
        }
        if let Some(r) = &self.reference {
            if r.len() != self.n() {
                return Err(Error::Catalog(format!(
                    "reference point has {} entries, expected {}",
                    r.len(),
                    self.n()
                )));
            }
            self.check_domain(r)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn check_domain(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, system `{}` has {}",
                point.len(),
                self.name,
                self.n()
            )));
        }
        for c in &self.domain {
            let m = c.margin.eval_f64(&self.variables, point)?;
            if !(m > 0.0) {
                return Err(Error::Domain(format!(
                    "constraint `{}` violated at {}",
                    c.text,
                    format_point(&self.variables, point)
                )));
            }
        }
        Ok(())
    }

    pub fn potential_at(&self, point: &[f64]) -> Result<f64> {
        self.check_domain(point)?;
        self.equation.eval_f64(&self.variables, point)
    }

    /// The potential as a jet of the given order centred at `point`.
    pub fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet> {
        self.check_domain(point)?;
        let vars = seed(point, order)?;
        self.equation.evaluate(&Bindings::new(&self.variables, &vars))
    }

    /// Intensive variables `I_a = dPhi/dE^a`.
    pub fn gradient(&self, point: &[f64]) -> Result<DVector<f64>> {
        let jet = self.jet_at(point, 1)?;
        let n = self.n();
        Ok(DVector::from_fn(n, |a, _| {
            jet.partial_along(&[a]).expect("order-1 jet")
        }))
    }

    pub fn hessian(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let jet = self.jet_at(point, 2)?;
        let n = self.n();
        Ok(DMatrix::from_fn(n, n, |a, b| {
            jet.partial_along(&[a, b]).expect("order-2 jet")
        }))
    }
}

pub(crate) fn format_point(names: &[String], point: &[f64]) -> String {
    names
        .iter()
        .zip(point)
        .map(|(n, x)| format!("{n}={x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn required<'a>(table: &'a toml::Table, key: &str) -> Result<&'a toml::Value> {
    table.get(key).ok_or_else(|| Error::MissingField(key.to_string()))
}

fn as_str<'a>(value: &'a toml::Value, key: &str) -> Result<&'a str> {
    value
        .as_str()
        .ok_or_else(|| Error::Catalog(format!("field `{key}` must be a string")))
}

fn as_str_list(value: &toml::Value, key: &str) -> Result<Vec<String>> {
    let array = value
        .as_array()
        .ok_or_else(|| Error::Catalog(format!("field `{key}` must be an array of strings")))?;
    array
        .iter()
        .map(|v| as_str(v, key).map(str::to_string))
        .collect()
}

/// Parses a catalog file:
///
/// ```text
/// name = "ideal_gas"
/// potential = "S"
/// variables = ["U", "V"]
/// equation = "3/2*ln(U) + ln(V)"
/// domain = ["U > 0", "V > 0"]
/// class = "fundamental"
/// reference = [1.0, 1.0]
/// ```
///
/// `domain`, `class` (default `fundamental`) and `reference` are optional.
pub fn load_system(bytes: &[u8]) -> Result<SystemDefinition> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Catalog(format!("catalog file is not UTF-8: {e}")))?;
    let table: toml::Table =
        toml::from_str(text).map_err(|e| Error::Catalog(e.to_string().trim().to_string()))?;

    let name = as_str(required(&table, "name")?, "name")?.to_string();
    let potential = as_str(required(&table, "potential")?, "potential")?.to_string();
    let variables = as_str_list(required(&table, "variables")?, "variables")?;
    let equation = parse(as_str(required(&table, "equation")?, "equation")?)?;
    let domain = match table.get("domain") {
        Some(v) => as_str_list(v, "domain")?
            .iter()
            .map(|c| Constraint::parse(c))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let class = match table.get("class") {
        Some(v) => as_str(v, "class")?.parse()?,
        None => PotentialClass::Fundamental,
    };
    let reference = match table.get("reference") {
        Some(v) => {
            let array = v
                .as_array()
                .ok_or_else(|| Error::Catalog("field `reference` must be an array".into()))?;
            Some(
                array
                    .iter()
                    .map(|x| {
                        x.as_float()
                            .or_else(|| x.as_integer().map(|i| i as f64))
                            .ok_or_else(|| Error::Catalog("reference entries must be numbers".into()))
                    })
                    .collect::<Result<Vec<f64>>>()?,
            )
        }
        None => None,
    };
    for key in table.keys() {
        if !matches!(
            key.as_str(),
            "name" | "potential" | "variables" | "equation" | "domain" | "class" | "reference"
        ) {
            return Err(Error::Catalog(format!("unknown field `{key}`")));
        }
    }

    let system = SystemDefinition {
        name,
        potential,
        variables,
        equation,
        domain,
        class,
        reference,
    };
    system.validate()?;
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDEAL: &str = r#"
name = "ideal_gas"
potential = "S"
variables = ["U", "V"]
equation = "3/2*ln(U)+ln(V)"
domain = ["U > 0", "V > 0"]
"#;

    #[test]
    fn loads_ideal_gas() {
        let s = load_system(IDEAL.as_bytes()).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.potential, "S");
        assert_eq!(s.class, PotentialClass::Fundamental);
        assert_eq!(s.potential_at(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_variable_rejected() {
        let text = IDEAL.replace(r#"["U", "V"]"#, r#"["U", "U"]"#);
        assert_eq!(
            load_system(text.as_bytes()),
            Err(Error::DuplicateVariable("U".into()))
        );
    }

    #[test]
    fn missing_field_rejected() {
        let text = IDEAL.replace("equation = \"3/2*ln(U)+ln(V)\"\n", "");
        assert_eq!(
            load_system(text.as_bytes()),
            Err(Error::MissingField("equation".into()))
        );
    }

    #[test]
    fn parse_error_propagates() {
        let text = IDEAL.replace("3/2*ln(U)+ln(V)", "3/2*ln(U");
        assert!(matches!(
            load_system(text.as_bytes()),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn undeclared_variable_rejected() {
        let text = IDEAL.replace("ln(V)", "ln(W)");
        assert!(matches!(load_system(text.as_bytes()), Err(Error::Catalog(_))));
    }

    #[test]
    fn domain_is_enforced() {
        let s = load_system(IDEAL.as_bytes()).unwrap();
        let err = s.potential_at(&[1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("V > 0")), "{err}");
    }

    #[test]
    fn less_than_constraints() {
        let c = Constraint::parse("Q^2 < S").unwrap();
        let names = vec!["S".to_string(), "Q".to_string()];
        assert_eq!(c.margin.eval_f64(&names, &[2.0, 1.0]).unwrap(), 1.0);
        assert!(Constraint::parse("x").is_err());
    }

    #[test]
    fn hessian_of_ideal_gas() {
        let s = load_system(IDEAL.as_bytes()).unwrap();
        let h = s.hessian(&[1.0, 1.0]).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[-1.5, 0.0, 0.0, -1.0]));
        let g = s.gradient(&[2.0, 0.5]).unwrap();
        assert_eq!(g.as_slice(), &[0.75, 2.0]);
    }
}
