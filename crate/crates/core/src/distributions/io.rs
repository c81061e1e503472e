//! PMF text format.
//!
//! ```json
//! {
//!   "shape": [3, 3],
//!   "backing": "rational",
//!   "mass": ["1/10000", "9997/60000", "..."]
//! }
//! ```
//!
//! Masses are strings holding either a decimal or an exact fraction `a/b`.
//! With `"backing": "rational"` every mass is parsed exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Backing, FinitePmf, Shape};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PmfDocument {
    shape: Vec<usize>,
    backing: Backing,
    mass: Vec<String>,
}

pub fn parse_pmf(text: &str) -> Result<FinitePmf> {
    let doc: PmfDocument =
        serde_json::from_str(text).map_err(|e| Error::parse("document", e.to_string()))?;
    let shape = Shape::from_dims(&doc.shape).map_err(|e| Error::parse("shape", e.to_string()))?;
    if doc.mass.len() != shape.len() {
        return Err(Error::parse(
            "mass",
            format!(
                "shape {shape} needs {} entries, found {}",
                shape.len(),
                doc.mass.len()
            ),
        ));
    }
    let field = |i: usize| format!("mass[{i}]");
    match doc.backing {
        Backing::Rational => {
            let masses = doc
                .mass
                .iter()
                .enumerate()
                .map(|(i, s)| parse_rational(s).map_err(|e| Error::parse(field(i), e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            FinitePmf::from_rationals(shape, masses)
                .map_err(|e| Error::parse("mass", e.to_string()))
        }
        Backing::Float => {
            let probs = doc
                .mass
                .iter()
                .enumerate()
                .map(|(i, s)| parse_float(s).map_err(|e| Error::parse(field(i), e)))
                .collect::<Result<Vec<_>>>()?;
            FinitePmf::from_floats(shape, probs).map_err(|e| Error::parse("mass", e.to_string()))
        }
    }
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in `{s}`"))?;
        let b: f64 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in `{s}`"))?;
        return Ok(a / b);
    }
    s.trim().parse().map_err(|_| format!("not a number: `{s}`"))
}

pub fn format_pmf(pmf: &FinitePmf) -> String {
    let mass = match pmf.exact() {
        Some(exact) => exact.iter().map(format_rational).collect(),
        None => pmf.probs().iter().map(|p| format!("{p:?}")).collect(),
    };
    let doc = PmfDocument {
        shape: pmf.shape().dims(),
        backing: pmf.backing(),
        mass,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

pub fn read_pmf(path: impl AsRef<Path>) -> Result<FinitePmf> {
    parse_pmf(&std::fs::read_to_string(path)?)
}

pub fn write_pmf(path: impl AsRef<Path>, pmf: &FinitePmf) -> Result<()> {
    std::fs::write(path, format_pmf(pmf))?;
    Ok(())
}
