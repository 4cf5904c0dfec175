//! Resolution of command-line inputs: file paths, inline JSON, inline
//! formulas and bundled fixture names.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use preskit_core::logic::{load_type, parse_formula};
use preskit_core::sigstruct::{load_partition, load_property, load_structure_with_limit};
use preskit_core::{
    fixtures, BlockType, Error, FiniteStructure, NamedPartition, Property, Result, Signature, Tuple,
};

/// Reads `arg` as a file relative to `base` when such a file exists.
fn read_file(arg: &str, base: &Path) -> Result<Option<String>> {
    let path = base.join(arg);
    if path.is_file() {
        return fs::read_to_string(&path)
            .map(Some)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())));
    }
    Ok(None)
}

fn looks_like_json(arg: &str) -> bool {
    let t = arg.trim_start();
    t.starts_with('{') || t.starts_with('[')
}

fn missing(kind: &str, arg: &str) -> Error {
    Error::InvalidInput(format!(
        "no {kind} file, inline JSON or fixture named `{arg}`"
    ))
}

pub fn structure(arg: &str, base: &Path, max_universe: usize) -> Result<FiniteStructure> {
    if let Some(text) = read_file(arg, base)? {
        return load_structure_with_limit(&text, max_universe);
    }
    if looks_like_json(arg) {
        return load_structure_with_limit(arg, max_universe);
    }
    fixtures::structure_by_name(arg).ok_or_else(|| missing("structure", arg))
}

pub fn property(arg: &str, base: &Path, n: usize) -> Result<Property> {
    if let Some(text) = read_file(arg, base)? {
        return load_property(&text, Some(n));
    }
    if looks_like_json(arg) {
        return load_property(arg, Some(n));
    }
    let p = fixtures::property_by_name(arg).ok_or_else(|| missing("property", arg))?;
    p.check_within(n)?;
    Ok(p)
}

/// A comma-separated list of properties, a JSON array of properties, or one inline property.
pub fn properties(arg: &str, base: &Path, n: usize) -> Result<Vec<Property>> {
    if arg.trim().is_empty() {
        return Ok(Vec::new());
    }
    if arg.trim_start().starts_with('[') {
        let values: Vec<serde_json::Value> = serde_json::from_str(arg)?;
        return values
            .iter()
            .map(|v| load_property(&v.to_string(), Some(n)))
            .collect();
    }
    if looks_like_json(arg) {
        return Ok(vec![load_property(arg, Some(n))?]);
    }
    arg.split(',')
        .map(|a| property(a.trim(), base, n))
        .collect()
}

pub fn partition(arg: &str, base: &Path, n: usize) -> Result<NamedPartition> {
    if let Some(text) = read_file(arg, base)? {
        return load_partition(&text, n);
    }
    if looks_like_json(arg) {
        return load_partition(arg, n);
    }
    Err(missing("partition", arg))
}

pub fn text(arg: &str, base: &Path) -> Result<String> {
    Ok(read_file(arg, base)?.unwrap_or_else(|| arg.to_string()))
}

/// Parses `"0;1,2"` into the tuples `(0)` and `(1,2)`. The empty string is no tuples.
pub fn params(arg: &str) -> Result<Vec<Tuple>> {
    if arg.trim().is_empty() {
        return Ok(Vec::new());
    }
    arg.split(';')
        .map(|block| {
            block
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidInput(format!("`{s}` is not an element")))
                })
                .collect()
        })
        .collect()
}

/// Parses `"x;u,v"` into the blocks `[x]` and `[u,v]`.
fn blocks(arg: &str) -> Vec<Vec<String>> {
    if arg.trim().is_empty() {
        return Vec::new();
    }
    arg.split(';')
        .map(|b| {
            b.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .collect()
}

/// Block overrides for inline types.
#[derive(Debug, Default, Clone)]
pub struct TypeLayout<'a> {
    pub result: Option<&'a str>,
    pub blocks: Option<&'a str>,
}

/// A type file, inline type JSON, or `;`-separated formulas. Inline formulas
/// take their result block from the free variables starting with `y` and
/// one parameter block per remaining free variable, both sorted by name.
pub fn block_type(
    arg: &str,
    base: &Path,
    signature: &Signature,
    layout: &TypeLayout<'_>,
) -> Result<BlockType> {
    if let Some(text) = read_file(arg, base)? {
        return load_type(&text, signature);
    }
    if looks_like_json(arg) {
        return load_type(arg, signature);
    }
    let formulas = arg
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_formula(s, signature))
        .collect::<Result<Vec<_>>>()?;
    let free: BTreeSet<String> = formulas.iter().flat_map(|f| f.free_vars()).collect();
    let result: Vec<String> = match layout.result {
        Some(r) => r.split(',').map(|s| s.trim().to_string()).collect(),
        None => free
            .iter()
            .filter(|v| v.starts_with('y'))
            .cloned()
            .collect(),
    };
    let params = match layout.blocks {
        Some(b) => blocks(b),
        None => free
            .iter()
            .filter(|v| !result.contains(v))
            .map(|v| vec![v.clone()])
            .collect(),
    };
    BlockType::new(params, result, formulas)
}
