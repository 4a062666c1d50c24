//! Canonical, backend-agnostic archives of opponent models, so a model
//! built by one agent can be loaded by another without retraining.
//!
//! Format: a one-line magic header, then canonical JSON (keys sorted,
//! UTF-8, insertion order carried as explicit indices inside the graph).
//! Identical models serialize to identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::som::OpponentModel;
use crate::error::StoreError;
use crate::scm::{CausalGraph, ExamplePool};

/// First line of every archive. The trailing integer is the format version.
pub const MAGIC: &str = "#som-archive/1";
pub const FORMAT_VERSION: u32 = 1;
/// Conventional file extension for archives.
pub const EXTENSION: &str = "som";

/// Where a model came from. The transfer protocol moves models across
/// backends, so reports need attribution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub builder_agent: String,
    pub backend: String,
    pub game: String,
    /// Logical creation stamp supplied by the caller; never wall-clock, so
    /// archives stay byte-reproducible.
    pub created: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format_version: u32,
    pub graph: CausalGraph,
    pub pools: BTreeMap<String, ExamplePool>,
    pub provenance: Provenance,
}

/// Optional exclusions for the transfer protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaveOptions {
    pub exclude_pools: bool,
    pub exclude_graph_intermediates: bool,
}

pub fn archive_model(
    model: &OpponentModel,
    provenance: Provenance,
    options: SaveOptions,
) -> ModelArchive {
    let mut graph = model.graph.clone();
    if options.exclude_graph_intermediates {
        graph.prune_top_k(0);
    }
    ModelArchive {
        format_version: FORMAT_VERSION,
        graph,
        pools: if options.exclude_pools {
            BTreeMap::new()
        } else {
            model.pools.clone()
        },
        provenance,
    }
}

/// Canonical serialization: magic line + sorted-key JSON. Two saves of one
/// model are byte-identical.
pub fn save_model(archive: &ModelArchive) -> Vec<u8> {
    let value = serde_json::to_value(archive).expect("archive serializes");
    let mut out = String::with_capacity(1024);
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&serde_json::to_string_pretty(&value).expect("canonical json"));
    out.push('\n');
    out.into_bytes()
}

/// Parse and validate an archive. Every graph invariant violation embedded
/// in the payload is rejected with the violated invariant named.
pub fn load_model(bytes: &[u8]) -> Result<OpponentModel, StoreError> {
    let (archive, _) = load_archive(bytes)?;
    Ok(OpponentModel {
        graph: archive.graph,
        pools: archive.pools,
        pending: BTreeMap::new(),
    })
}

pub fn load_archive(bytes: &[u8]) -> Result<(ModelArchive, Provenance), StoreError> {
    let text = std::str::from_utf8(bytes).map_err(|_| StoreError::BadHeader)?;
    let Some((header, body)) = text.split_once('\n') else {
        return Err(StoreError::BadHeader);
    };
    if !header.starts_with("#som-archive/") {
        return Err(StoreError::BadHeader);
    }
    let version: u32 = header
        .trim_start_matches("#som-archive/")
        .parse()
        .map_err(|_| StoreError::BadHeader)?;
    if version != FORMAT_VERSION {
        return Err(StoreError::Version(version));
    }
    let archive: ModelArchive =
        serde_json::from_str(body).map_err(|e| StoreError::Malformed(e.to_string()))?;
    if archive.format_version != FORMAT_VERSION {
        return Err(StoreError::Version(archive.format_version));
    }
    archive
        .graph
        .check_invariants()
        .map_err(StoreError::Invariant)?;
    let provenance = archive.provenance.clone();
    Ok((archive, provenance))
}

pub fn save_to_file(archive: &ModelArchive, path: &std::path::Path) -> Result<(), StoreError> {
    Ok(std::fs::write(path, save_model(archive))?)
}

pub fn load_from_file(path: &std::path::Path) -> Result<(ModelArchive, Provenance), StoreError> {
    let bytes = std::fs::read(path)?;
    load_archive(&bytes)
}
