use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use cpa::model::ModelSpec;
use cpa::sample;

pub const PAPER_EXAMPLE: &str = "paper-example";
pub const EXAMPLE_SIZE: usize = 1000;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorSpec {
    generator: String,
}

/// Reads a model from `source`: the literal generator name, or a path to a
/// JSON file holding either a model or `{"generator": ...}`.
pub fn load_model(source: &str) -> Result<ModelSpec<f64>> {
    if source == PAPER_EXAMPLE {
        return Ok(ModelSpec::banded_example(EXAMPLE_SIZE));
    }
    let text = fs::read_to_string(Path::new(source)).with_context(|| format!("reading {source}"))?;
    parse_model(&text).with_context(|| format!("in {source}"))
}

pub fn parse_model(text: &str) -> Result<ModelSpec<f64>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("generator").is_some() {
        let g: GeneratorSpec = serde_json::from_value(value)?;
        if g.generator != PAPER_EXAMPLE {
            bail!("field `generator`: unknown generator `{}` (expected `{PAPER_EXAMPLE}`)", g.generator);
        }
        return Ok(ModelSpec::banded_example(EXAMPLE_SIZE));
    }
    // parse from text again so that errors carry line and column
    Ok(serde_json::from_str(text)?)
}

pub fn random_model(n: usize, d: usize, seed: u64) -> Result<ModelSpec<f64>> {
    if n == 0 || d == 0 {
        bail!("--n and --d must be positive");
    }
    Ok(sample::random_model(&mut sample::rng(seed), n, d))
}
