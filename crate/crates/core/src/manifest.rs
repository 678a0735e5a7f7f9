//! Rule manifest: which published result each classifier rule implements, with
//! the corrections applied to its hypotheses.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::classifier::RULE_IDS;
use crate::error::{Error, Result};

/// The manifest shipped with the crate.
pub const MANIFEST_JSON: &str = include_str!("../rules/manifest.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleManifestEntry {
    pub rule_id: String,
    /// Key of the result in `results`; `null` for fallback rules.
    pub result: Option<String>,
    pub hypothesis: String,
    pub machine: serde_json::Value,
    pub conclusion: String,
    pub erratum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub results: Vec<String>,
    pub out_of_scope: Vec<String>,
    pub rules: Vec<RuleManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestReport {
    pub rules: usize,
    pub results_covered: usize,
    pub out_of_scope: usize,
}

pub fn load_manifest(text: &str) -> Result<Manifest> {
    serde_json::from_str(text).map_err(|e| Error::ManifestMismatch(format!("unreadable manifest: {e}")))
}

/// Checks the shipped manifest against the classifier's rule list.
pub fn manifest_check() -> Result<ManifestReport> {
    check_against(&load_manifest(MANIFEST_JSON)?, &RULE_IDS)
}

/// Checks that rule ids and manifest entries are in bijection and every result
/// is covered by a rule or listed as out of scope.
pub fn check_against(manifest: &Manifest, rule_ids: &[&str]) -> Result<ManifestReport> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &manifest.rules {
        *counts.entry(e.rule_id.as_str()).or_default() += 1;
    }
    if let Some((id, _)) = counts.iter().find(|(_, &n)| n > 1) {
        return Err(Error::ManifestMismatch(format!("rule {id} listed more than once")));
    }
    let implemented: BTreeSet<&str> = rule_ids.iter().copied().collect();
    for id in &implemented {
        if !counts.contains_key(id) {
            return Err(Error::ManifestMismatch(format!("rule {id} has no manifest entry")));
        }
    }
    for id in counts.keys() {
        if !implemented.contains(id) {
            return Err(Error::ManifestMismatch(format!("manifest entry {id} has no classifier rule")));
        }
    }
    let known: BTreeSet<&str> = manifest.results.iter().map(String::as_str).collect();
    let mut covered = BTreeSet::new();
    for e in &manifest.rules {
        if let Some(r) = &e.result {
            if !known.contains(r.as_str()) {
                return Err(Error::ManifestMismatch(format!("rule {} cites unknown result {r}", e.rule_id)));
            }
            covered.insert(r.as_str());
        }
    }
    let excluded: BTreeSet<&str> = manifest.out_of_scope.iter().map(String::as_str).collect();
    for r in &known {
        if !covered.contains(r) && !excluded.contains(r) {
            return Err(Error::ManifestMismatch(format!("result {r} is neither implemented nor out of scope")));
        }
    }
    Ok(ManifestReport { rules: manifest.rules.len(), results_covered: covered.len(), out_of_scope: excluded.len() })
}
