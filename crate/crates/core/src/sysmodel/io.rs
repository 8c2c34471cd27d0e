use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{StateMatrix, StateSpaceModel, StorageKind};
use crate::numkit::mmio::{self, MarketMatrix};
use crate::numkit::SparseMatrix;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// `manifest.json` stored next to `A.mtx`, `B.mtx`, `C.mtx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub storage: StorageKind,
}

/// Writes the model as a directory of Matrix Market files plus a manifest.
///
/// Sparse models use coordinate files for all three matrices, dense models
/// use array files.
pub fn save_model(model: &StateSpaceModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    match model.a() {
        StateMatrix::Sparse(a) => {
            mmio::write_sparse(dir.join("A.mtx"), a)?;
            mmio::write_sparse(dir.join("B.mtx"), &SparseMatrix::from_dense(model.b())?)?;
            mmio::write_sparse(dir.join("C.mtx"), &SparseMatrix::from_dense(model.c())?)?;
        }
        StateMatrix::Dense(a) => {
            mmio::write_dense(dir.join("A.mtx"), a)?;
            mmio::write_dense(dir.join("B.mtx"), model.b())?;
            mmio::write_dense(dir.join("C.mtx"), model.c())?;
        }
    }
    let manifest =
        ModelManifest { n: model.n(), m: model.m(), p: model.p(), storage: model.storage() };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Reads a model written by [`save_model`]. The manifest is optional; when
/// present its dimensions and storage kind are enforced.
pub fn load_model(dir: impl AsRef<Path>) -> Result<StateSpaceModel> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Option<ModelManifest> = if manifest_path.exists() {
        Some(serde_json::from_str(&fs::read_to_string(manifest_path)?)?)
    } else {
        None
    };
    let a = mmio::read(dir.join("A.mtx"))?;
    let b = mmio::read(dir.join("B.mtx"))?.to_dense();
    let c = mmio::read(dir.join("C.mtx"))?.to_dense();
    let storage = manifest.map(|m| m.storage).unwrap_or(match a {
        MarketMatrix::Sparse(_) => StorageKind::Sparse,
        MarketMatrix::Dense(_) => StorageKind::Dense,
    });
    let a = match storage {
        StorageKind::Sparse => StateMatrix::Sparse(a.into_sparse()?),
        StorageKind::Dense => StateMatrix::Dense(a.to_dense()),
    };
    let model = StateSpaceModel::new(a, b, c)?;
    if let Some(m) = manifest {
        for (what, want, got) in
            [("manifest n", m.n, model.n()), ("manifest m", m.m, model.m()), ("manifest p", m.p, model.p())]
        {
            if want != got {
                return Err(Error::mismatch(what, want, got));
            }
        }
    }
    Ok(model)
}
