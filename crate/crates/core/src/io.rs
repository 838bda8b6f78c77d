//! On-disk formats: model directories (six Matrix Market files plus a JSON
//! manifest) and reduced-model JSON files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bt::DenseFirstOrderSystem;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::mm::{read_matrix_market_file, write_matrix_market_file};
use crate::model::{ReducedSecondOrderModel, SecondOrderIndex3System};

pub const MODEL_SCHEMA: &str = "somor-manifest-v1";
pub const ROM_SCHEMA: &str = "somor-rom-v1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFiles {
    pub m: String,
    pub d: String,
    pub k: String,
    pub g: String,
    pub f: String,
    pub l: String,
}

impl Default for ModelFiles {
    fn default() -> Self {
        Self {
            m: "M.mtx".into(),
            d: "D.mtx".into(),
            k: "K.mtx".into(),
            g: "G.mtx".into(),
            f: "F.mtx".into(),
            l: "L.mtx".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub schema: String,
    pub model: String,
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub q: usize,
    pub files: ModelFiles,
    /// Generator parameters, when the model was generated.
    #[serde(default)]
    pub params: serde_json::Value,
}

pub fn save_model(
    dir: impl AsRef<Path>,
    sys: &SecondOrderIndex3System,
    model: &str,
    params: serde_json::Value,
) -> Result<ModelManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = ModelFiles::default();
    for (name, mat) in [
        (&files.m, &sys.m),
        (&files.d, &sys.d),
        (&files.k, &sys.k),
        (&files.g, &sys.g),
        (&files.f, &sys.f),
        (&files.l, &sys.l),
    ] {
        write_matrix_market_file(dir.join(name), mat)?;
    }
    let manifest = ModelManifest {
        schema: MODEL_SCHEMA.into(),
        model: model.into(),
        n1: sys.n1(),
        n2: sys.n2(),
        m: sys.inputs(),
        q: sys.outputs(),
        files,
        params,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<ModelManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    let manifest: ModelManifest = serde_json::from_str(&text)?;
    if manifest.schema != MODEL_SCHEMA {
        return Err(Error::Manifest(format!("unknown schema {:?}", manifest.schema)));
    }
    Ok(manifest)
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<(SecondOrderIndex3System, ModelManifest)> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    let read = |name: &str| read_matrix_market_file(dir.join(name));
    let f = &manifest.files;
    let sys = SecondOrderIndex3System::new(read(&f.m)?, read(&f.d)?, read(&f.k)?, read(&f.g)?, read(&f.f)?, read(&f.l)?)?;
    let dims = (sys.n1(), sys.n2(), sys.inputs(), sys.outputs());
    if dims != (manifest.n1, manifest.n2, manifest.m, manifest.q) {
        return Err(Error::Manifest(format!(
            "matrix dimensions {dims:?} disagree with manifest ({}, {}, {}, {})",
            manifest.n1, manifest.n2, manifest.m, manifest.q
        )));
    }
    Ok((sys, manifest))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn manifest_hash(dir: impl AsRef<Path>) -> Result<String> {
    sha256_file(dir.as_ref().join(MANIFEST_FILE))
}

/// Dense block stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseBlock {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseBlock {
    pub fn from_matrix(a: &DMatrix<f64>) -> Self {
        let data = (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)])).collect();
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "block of {}x{} holds {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RomKind {
    SecondOrder,
    FirstOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedModelFile {
    pub schema: String,
    pub kind: RomKind,
    pub method: String,
    pub r: usize,
    pub m: usize,
    pub q: usize,
    pub source_manifest_sha256: Option<String>,
    pub blocks: BTreeMap<String, DenseBlock>,
}

/// A reduced model of either structure.
#[derive(Clone, Debug)]
pub enum ReducedModel {
    SecondOrder(ReducedSecondOrderModel),
    FirstOrder(DenseFirstOrderSystem),
}

impl ReducedModel {
    pub fn order(&self) -> usize {
        match self {
            Self::SecondOrder(r) => r.order(),
            Self::FirstOrder(s) => s.order(),
        }
    }

    pub fn transfer(&self, s: Complex64) -> Result<CMatrix> {
        match self {
            Self::SecondOrder(r) => r.transfer(s),
            Self::FirstOrder(f) => f.transfer(s),
        }
    }
}

impl ReducedModelFile {
    pub fn new(model: &ReducedModel, method: &str, source_manifest_sha256: Option<String>) -> Self {
        let mut blocks = BTreeMap::new();
        let (kind, m, q) = match model {
            ReducedModel::SecondOrder(rom) => {
                for (name, a) in [("M", &rom.mr), ("D", &rom.dr), ("K", &rom.kr), ("F", &rom.fr), ("L", &rom.lr)] {
                    blocks.insert(name.to_string(), DenseBlock::from_matrix(a));
                }
                (RomKind::SecondOrder, rom.inputs(), rom.outputs())
            }
            ReducedModel::FirstOrder(s) => {
                for (name, a) in [("E", &s.e), ("A", &s.a), ("B", &s.b), ("C", &s.c)] {
                    blocks.insert(name.to_string(), DenseBlock::from_matrix(a));
                }
                (RomKind::FirstOrder, s.b.ncols(), s.c.nrows())
            }
        };
        Self {
            schema: ROM_SCHEMA.into(),
            kind,
            method: method.into(),
            r: model.order(),
            m,
            q,
            source_manifest_sha256,
            blocks,
        }
    }

    fn block(&self, name: &str) -> Result<DMatrix<f64>> {
        self.blocks
            .get(name)
            .ok_or_else(|| Error::Manifest(format!("reduced model lacks block {name}")))?
            .to_matrix()
    }

    pub fn to_model(&self) -> Result<ReducedModel> {
        if self.schema != ROM_SCHEMA {
            return Err(Error::Manifest(format!("unknown schema {:?}", self.schema)));
        }
        let model = match self.kind {
            RomKind::SecondOrder => ReducedModel::SecondOrder(ReducedSecondOrderModel::new(
                self.block("M")?,
                self.block("D")?,
                self.block("K")?,
                self.block("F")?,
                self.block("L")?,
            )?),
            RomKind::FirstOrder => ReducedModel::FirstOrder(DenseFirstOrderSystem::new(
                self.block("E")?,
                self.block("A")?,
                self.block("B")?,
                self.block("C")?,
            )?),
        };
        if model.order() != self.r {
            return Err(Error::Manifest(format!("declared order {} but blocks have order {}", self.r, model.order())));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn model_paths(dir: &Path, manifest: &ModelManifest) -> Vec<PathBuf> {
    let f = &manifest.files;
    [&f.m, &f.d, &f.k, &f.g, &f.f, &f.l].iter().map(|n| dir.join(n)).collect()
}
