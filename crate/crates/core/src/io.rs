//! JSON tensor files: `{"order": n, "field": "real"|"complex", "data": [...]}`.
//! Real scalars are plain numbers, complex scalars are `[re, im]` pairs, and
//! `data` follows the flat offset order of [`Tensor`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HtrError, Result};
use crate::field::{Field, Scalar};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarRepr {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorFile {
    pub order: usize,
    pub field: Field,
    pub data: Vec<ScalarRepr>,
}

impl From<&Tensor> for TensorFile {
    fn from(t: &Tensor) -> Self {
        let data = t
            .data()
            .iter()
            .map(|z| match t.field() {
                Field::Real => ScalarRepr::Real(z.re),
                Field::Complex => ScalarRepr::Complex([z.re, z.im]),
            })
            .collect();
        TensorFile {
            order: t.order(),
            field: t.field(),
            data,
        }
    }
}

impl TryFrom<TensorFile> for Tensor {
    type Error = HtrError;

    fn try_from(f: TensorFile) -> Result<Tensor> {
        let data = f
            .data
            .into_iter()
            .map(|s| match s {
                ScalarRepr::Real(x) => Scalar::new(x, 0.0),
                ScalarRepr::Complex([a, b]) => Scalar::new(a, b),
            })
            .collect();
        Tensor::from_data(f.order, f.field, data)
    }
}

pub fn tensor_to_json(t: &Tensor) -> serde_json::Value {
    serde_json::to_value(TensorFile::from(t)).expect("tensor file is always serializable")
}

pub fn tensor_from_json(v: serde_json::Value) -> Result<Tensor> {
    Tensor::try_from(serde_json::from_value::<TensorFile>(v)?)
}

pub fn parse_tensor(text: &str) -> Result<Tensor> {
    Tensor::try_from(serde_json::from_str::<TensorFile>(text)?)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&TensorFile::from(t))?)?;
    Ok(())
}
