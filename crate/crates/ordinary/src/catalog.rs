//! Group catalog files (TOML).
//!
//! ```toml
//! format_version = 1
//!
//! [[group]]
//! id = "u1xu1-c2"
//! kind = "U1xU1"            # USP4 | SU2xSU2 | SU2_DIAG | U1xU1 | SU2xU1 | U1_DIAG
//! realizable = true
//! root_of_unity_order = 1   # z = exp(2 pi i / n) in entries
//! coset_reps = [            # 4x4 string matrices, identity first
//!   [["1","0","0","0"], ["0","1","0","0"], ["0","0","1","0"], ["0","0","0","1"]],
//! ]
//! [group.metadata]          # free-form string labels
//! K = "Q"
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use ordinary_core::groups::{ExactMatrix, GroupEntry, GroupError, IdentityComponentKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CATALOG_FORMAT_VERSION: u32 = 1;

/// The catalog shipped with the crate.
pub const SHIPPED_CATALOG: &str = include_str!("../data/catalog.toml");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("reading catalog {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("catalog syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("catalog format_version {found}, expected {CATALOG_FORMAT_VERSION}")]
    Version { found: u32 },
    #[error("group `{id}`: {source}")]
    Entry { id: String, source: GroupError },
    #[error("group `{id}`: root_of_unity_order must be positive")]
    ZeroOrder { id: String },
    #[error("duplicate group id `{0}`")]
    DuplicateId(String),
    #[error("no group `{0}` in catalog")]
    UnknownGroup(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    format_version: u32,
    #[serde(default)]
    group: Vec<RawEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    kind: String,
    realizable: bool,
    root_of_unity_order: u32,
    coset_reps: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub entries: Vec<GroupEntry>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let file: CatalogFile = toml::from_str(text)?;
        if file.format_version != CATALOG_FORMAT_VERSION {
            return Err(CatalogError::Version { found: file.format_version });
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(file.group.len());
        for raw in file.group {
            if !seen.insert(raw.id.clone()) {
                return Err(CatalogError::DuplicateId(raw.id));
            }
            entries.push(entry_from_raw(raw)?);
        }
        Ok(Catalog { entries })
    }

    pub fn load(path: &Path) -> Result<Catalog, CatalogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        Catalog::parse(&text)
    }

    pub fn shipped() -> Catalog {
        Catalog::parse(SHIPPED_CATALOG).expect("shipped catalog parses")
    }

    pub fn get(&self, id: &str) -> Result<&GroupEntry, CatalogError> {
        self.entries.iter().find(|e| e.id == id).ok_or_else(|| CatalogError::UnknownGroup(id.into()))
    }

    /// Canonical TOML; parsing it gives back an equal catalog.
    pub fn to_toml(&self) -> String {
        let file = CatalogFile {
            format_version: CATALOG_FORMAT_VERSION,
            group: self.entries.iter().map(raw_from_entry).collect(),
        };
        toml::to_string(&file).expect("catalog serializes")
    }
}

fn entry_from_raw(raw: RawEntry) -> Result<GroupEntry, CatalogError> {
    let id = raw.id;
    let wrap = |source| CatalogError::Entry { id: id.clone(), source };
    if raw.root_of_unity_order == 0 {
        return Err(CatalogError::ZeroOrder { id });
    }
    let kind: IdentityComponentKind = raw.kind.parse().map_err(wrap)?;
    let coset_reps = raw
        .coset_reps
        .iter()
        .map(|rows| ExactMatrix::parse(rows, raw.root_of_unity_order))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wrap)?;
    Ok(GroupEntry {
        id,
        kind,
        realizable: raw.realizable,
        root_of_unity_order: raw.root_of_unity_order,
        coset_reps,
        metadata: raw.metadata,
    })
}

fn raw_from_entry(entry: &GroupEntry) -> RawEntry {
    RawEntry {
        id: entry.id.clone(),
        kind: entry.kind.as_str().into(),
        realizable: entry.realizable,
        root_of_unity_order: entry.root_of_unity_order,
        coset_reps: entry.coset_reps.iter().map(|m| m.to_strings().map(Vec::from).to_vec()).collect(),
        metadata: entry.metadata.clone(),
    }
}
