use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ReductionModel;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "ect-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'a str,
    version: u32,
    model: &'a ReductionModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct OwnedEnvelope {
    model: ReductionModel,
}

pub fn model_to_json(model: &ReductionModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        format: MODEL_FORMAT,
        version: MODEL_FORMAT_VERSION,
        model,
    })?)
}

pub fn model_from_json(text: &str) -> Result<ReductionModel> {
    let header: Header = serde_json::from_str(text).map_err(|e| Error::Format(format!("not a model file: {e}")))?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unexpected format '{}'", header.format)));
    }
    if header.version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
            header.version
        )));
    }
    let env: OwnedEnvelope = serde_json::from_str(text)?;
    let model = env.model;
    if let Some(tree) = &model.tree {
        tree.validate()?;
        if tree.k() != model.k {
            return Err(Error::Format("tree and model disagree on k".into()));
        }
    }
    Ok(model)
}

pub fn save_model(model: &ReductionModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ReductionModel> {
    model_from_json(&fs::read_to_string(path)?)
}
