//! JSON input documents: chain specs, symmetric kernels, geometry triples.

use std::path::Path;

use ergogap_core::cheeger::SymmetricKernel;
use ergogap_core::geometry::GeometrySpec;
use ergogap_core::{ChainSpec, Rates, RateExpr, StateBound};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RateInput {
    Expr(String),
    Values(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StatesInput {
    Count(usize),
    Word(String),
}

/// `{"birth": expr | [..], "death": expr | [..], "states": count | "inf"}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    birth: RateInput,
    death: RateInput,
    states: StatesInput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelFile {
    pi: Vec<f64>,
    #[serde(rename = "J")]
    j: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryEntry {
    dimension: f64,
    diameter: f64,
    curvature: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GeometryFile {
    One(GeometryEntry),
    Many(Vec<GeometryEntry>),
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_value(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))
}

fn rates(r: RateInput, which: &str) -> Result<Rates, CliError> {
    Ok(match r {
        RateInput::Expr(s) => {
            Rates::Expr(RateExpr::parse(&s).map_err(|e| CliError::Input(format!("{which} expression: {e}")))?)
        }
        RateInput::Values(v) => Rates::Values(v),
    })
}

pub fn parse_chain(text: &str) -> Result<ChainSpec, CliError> {
    let file: ChainFile = serde_json::from_value(parse_value(text)?)
        .map_err(|e| CliError::Input(format!("chain spec: {e}")))?;
    let bound = match file.states {
        StatesInput::Count(n) if n >= 2 => StateBound::Finite(n - 1),
        StatesInput::Count(n) => return Err(CliError::Input(format!("states must be at least 2, got {n}"))),
        StatesInput::Word(w) if w == "inf" => StateBound::Infinite,
        StatesInput::Word(w) => return Err(CliError::Input(format!("states must be an integer or \"inf\", got {w:?}"))),
    };
    Ok(ChainSpec::new(rates(file.birth, "birth")?, rates(file.death, "death")?, bound)?)
}

/// A kernel document or, failing that, a chain spec.
pub enum KernelSource {
    Kernel(SymmetricKernel),
    Chain(ChainSpec),
}

pub fn parse_kernel_or_chain(text: &str) -> Result<KernelSource, CliError> {
    let value = parse_value(text)?;
    if value.get("pi").is_some() || value.get("J").is_some() {
        let k: KernelFile = serde_json::from_value(value).map_err(|e| CliError::Input(format!("kernel: {e}")))?;
        Ok(KernelSource::Kernel(SymmetricKernel::new(k.pi, k.j)?))
    } else {
        Ok(KernelSource::Chain(parse_chain(text)?))
    }
}

/// One `{"dimension", "diameter", "curvature"}` object or an array of them.
pub fn parse_geometry(text: &str) -> Result<Vec<GeometrySpec>, CliError> {
    let file: GeometryFile = serde_json::from_value(parse_value(text)?)
        .map_err(|e| CliError::Input(format!("geometry: {e}")))?;
    let entries = match file {
        GeometryFile::One(e) => vec![e],
        GeometryFile::Many(v) => v,
    };
    entries
        .into_iter()
        .map(|e| GeometrySpec::new(e.dimension, e.diameter, e.curvature).map_err(CliError::from))
        .collect()
}
