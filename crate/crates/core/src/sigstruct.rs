//! Signatures, finite structures, properties and partitions, plus their JSON
//! file formats.
//!
//! The universe of a structure is always `{0, …, n-1}`. Constants are
//! arity-0 function symbols. All collections are ordered so that every
//! serialization is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::budget::DEFAULT_MAX_UNIVERSE;
use crate::error::{Error, Result};

pub type Element = usize;
pub type Tuple = Vec<Element>;

const KEYWORDS: [&str; 4] = ["forall", "exists", "true", "false"];

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&name)
}

/// Function and relation symbols with their arities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    functions: BTreeMap<String, usize>,
    relations: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Result<Self> {
        self.add_function(name, arity)?;
        Ok(self)
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Result<Self> {
        self.add_relation(name, arity)?;
        Ok(self)
    }

    fn check_fresh(&self, name: &str) -> Result<()> {
        if !is_identifier(name) {
            return Err(Error::validation(name, "not a valid identifier"));
        }
        if self.functions.contains_key(name) || self.relations.contains_key(name) {
            return Err(Error::validation(name, "symbol declared twice"));
        }
        Ok(())
    }

    pub fn add_function(&mut self, name: &str, arity: usize) -> Result<()> {
        self.check_fresh(name)?;
        self.functions.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<()> {
        self.check_fresh(name)?;
        if arity == 0 {
            return Err(Error::validation(name, "relation arity must be at least 1"));
        }
        self.relations.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, usize)> {
        self.functions.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.functions
            .iter()
            .filter(|(_, a)| **a == 0)
            .map(|(k, _)| k.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name) || self.relations.contains_key(name)
    }
}

/// Lexicographic enumeration of `{0..n-1}^k`.
#[derive(Debug, Clone)]
pub struct Tuples {
    n: usize,
    current: Option<Tuple>,
}

impl Tuples {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k > 0 && n == 0 {
            None
        } else {
            Some(vec![0; k])
        };
        Tuples { n, current }
    }
}

impl Iterator for Tuples {
    type Item = Tuple;

    fn next(&mut self) -> Option<Tuple> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < self.n {
                self.current = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    }
}

/// Position of `tuple` in the lexicographic order of `{0..n-1}^k`.
pub fn tuple_rank(n: usize, tuple: &[Element]) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * n + e)
}

/// Inverse of [`tuple_rank`].
pub fn tuple_unrank(n: usize, k: usize, mut rank: usize) -> Tuple {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = rank % n;
        rank /= n;
    }
    out
}

/// A total function table; `table` lists outputs in lexicographic order of inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    arity: usize,
    table: Vec<Element>,
}

impl FunctionTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[Element] {
        &self.table
    }

    pub fn apply(&self, n: usize, args: &[Element]) -> Element {
        self.table[tuple_rank(n, args)]
    }
}

/// A finite structure over `{0..n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    signature: Signature,
    size: usize,
    functions: BTreeMap<String, FunctionTable>,
    relations: BTreeMap<String, BTreeSet<Tuple>>,
}

impl FiniteStructure {
    pub fn builder(size: usize) -> StructureBuilder {
        StructureBuilder {
            size,
            signature: Signature::new(),
            functions: BTreeMap::new(),
            relations: BTreeMap::new(),
            error: None,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn function(&self, name: &str) -> Option<&FunctionTable> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, &FunctionTable)> {
        self.functions.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &BTreeSet<Tuple>)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn apply(&self, name: &str, args: &[Element]) -> Option<Element> {
        self.functions.get(name).map(|f| f.apply(self.size, args))
    }

    pub fn constant(&self, name: &str) -> Option<Element> {
        self.functions
            .get(name)
            .filter(|f| f.arity == 0)
            .map(|f| f.table[0])
    }

    pub fn universe(&self) -> Property {
        Property::full(self.size, 1)
    }

    /// Returns a copy extended by one relation symbol.
    pub fn with_relation(&self, name: &str, arity: usize, tuples: BTreeSet<Tuple>) -> Result<Self> {
        let mut b = StructureBuilder {
            size: self.size,
            signature: self.signature.clone(),
            functions: self.functions.clone(),
            relations: self.relations.clone(),
            error: None,
        };
        b = b.relation(name, arity, tuples);
        b.build()
    }

    /// A relation name not used by the signature, derived from `base`.
    pub fn fresh_symbol(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.signature.contains(&name) {
            name.push('_');
        }
        name
    }

    pub fn to_json_string(&self) -> String {
        let file = StructureFile::from(self);
        let mut s = serde_json::to_string_pretty(&file).expect("structure serializes");
        s.push('\n');
        s
    }
}

pub struct StructureBuilder {
    size: usize,
    signature: Signature,
    functions: BTreeMap<String, FunctionTable>,
    relations: BTreeMap<String, BTreeSet<Tuple>>,
    error: Option<Error>,
}

impl StructureBuilder {
    pub fn function(mut self, name: &str, arity: usize, table: Vec<Element>) -> Self {
        if self.error.is_none() {
            if let Err(e) = self.signature.add_function(name, arity) {
                self.error = Some(e);
            } else {
                self.functions
                    .insert(name.to_string(), FunctionTable { arity, table });
            }
        }
        self
    }

    pub fn function_fn(self, name: &str, arity: usize, f: impl Fn(&[Element]) -> Element) -> Self {
        let n = self.size;
        let table = Tuples::new(n, arity).map(|t| f(&t)).collect();
        self.function(name, arity, table)
    }

    pub fn constant(self, name: &str, value: Element) -> Self {
        self.function(name, 0, vec![value])
    }

    pub fn relation(
        mut self,
        name: &str,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Self {
        if self.error.is_none() {
            if let Err(e) = self.signature.add_relation(name, arity) {
                self.error = Some(e);
            } else {
                self.relations
                    .insert(name.to_string(), tuples.into_iter().collect());
            }
        }
        self
    }

    pub fn build(self) -> Result<FiniteStructure> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let n = self.size;
        if n == 0 {
            return Err(Error::validation("universe", "universe must be nonempty"));
        }
        for (name, f) in &self.functions {
            let expected = n
                .checked_pow(f.arity as u32)
                .ok_or_else(|| Error::validation(name, "function table too large"))?;
            if f.table.len() != expected {
                return Err(Error::validation(
                    name,
                    format!(
                        "table is not total: expected {expected} entries, found {}",
                        f.table.len()
                    ),
                ));
            }
            if let Some(bad) = f.table.iter().find(|&&v| v >= n) {
                return Err(Error::validation(
                    name,
                    format!("table entry {bad} outside the universe"),
                ));
            }
        }
        for (name, tuples) in &self.relations {
            let arity = self.signature.relation_arity(name).unwrap_or(0);
            for t in tuples {
                if t.len() != arity {
                    return Err(Error::validation(
                        name,
                        format!("tuple {t:?} does not have arity {arity}"),
                    ));
                }
                if t.iter().any(|&e| e >= n) {
                    return Err(Error::validation(
                        name,
                        format!("tuple {t:?} has an entry outside the universe"),
                    ));
                }
            }
        }
        Ok(FiniteStructure {
            signature: self.signature,
            size: n,
            functions: self.functions,
            relations: self.relations,
        })
    }
}

/// An arity-`k` subset of `M^k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Property {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

impl Property {
    pub fn new(arity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Result<Self> {
        let tuples: BTreeSet<Tuple> = tuples.into_iter().collect();
        if let Some(t) = tuples.iter().find(|t| t.len() != arity) {
            return Err(Error::ArityMismatch(format!(
                "tuple {t:?} in a property of arity {arity}"
            )));
        }
        Ok(Property { arity, tuples })
    }

    pub fn empty(arity: usize) -> Self {
        Property {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn full(n: usize, arity: usize) -> Self {
        Property {
            arity,
            tuples: Tuples::new(n, arity).collect(),
        }
    }

    /// A unary property from a set of elements.
    pub fn unary(elements: impl IntoIterator<Item = Element>) -> Self {
        Property {
            arity: 1,
            tuples: elements.into_iter().map(|e| vec![e]).collect(),
        }
    }

    pub fn singleton(tuple: Tuple) -> Self {
        Property {
            arity: tuple.len(),
            tuples: std::iter::once(tuple).collect(),
        }
    }

    pub(crate) fn from_set(arity: usize, tuples: BTreeSet<Tuple>) -> Self {
        debug_assert!(tuples.iter().all(|t| t.len() == arity));
        Property { arity, tuples }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    pub fn into_tuples(self) -> BTreeSet<Tuple> {
        self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Element]) -> bool {
        self.tuples.contains(t)
    }

    /// Elements of a unary property.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.tuples.iter().filter_map(|t| t.first().copied())
    }

    pub fn is_subset(&self, other: &Property) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    pub fn intersects(&self, other: &Property) -> bool {
        if self.len() <= other.len() {
            self.tuples.iter().any(|t| other.tuples.contains(t))
        } else {
            other.tuples.iter().any(|t| self.tuples.contains(t))
        }
    }

    pub fn union(&self, other: &Property) -> Property {
        Property {
            arity: self.arity,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        }
    }

    pub fn intersection(&self, other: &Property) -> Property {
        Property {
            arity: self.arity,
            tuples: self.tuples.intersection(&other.tuples).cloned().collect(),
        }
    }

    pub fn insert(&mut self, t: Tuple) {
        debug_assert_eq!(t.len(), self.arity);
        self.tuples.insert(t);
    }

    /// Checks that every entry lies in `{0..n-1}`.
    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.tuples.iter().find(|t| t.iter().any(|&e| e >= n)) {
            Some(t) => Err(Error::ArityMismatch(format!(
                "tuple {t:?} lies outside a universe of size {n}"
            ))),
            None => Ok(()),
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&PropertyFile::from(self)).expect("serializes");
        s.push('\n');
        s
    }
}

impl Serialize for Property {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PropertyFile::from(self).serialize(s)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.tuples.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if self.arity == 1 {
                write!(f, "{}", t[0])?;
            } else {
                let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                write!(f, "({})", parts.join(","))?;
            }
        }
        write!(f, "}}")
    }
}

/// `M^k \ P`.
pub fn complement_property(m: &FiniteStructure, p: &Property) -> Result<Property> {
    p.check_within(m.size())?;
    Ok(Property {
        arity: p.arity,
        tuples: Tuples::new(m.size(), p.arity)
            .filter(|t| !p.tuples.contains(t))
            .collect(),
    })
}

/// Concatenations `a1ˆ…ˆan` with `ai ∈ Pi`. The empty product is `{()}`.
pub fn cartesian_product(factors: &[Property]) -> Property {
    let arity = factors.iter().map(|p| p.arity).sum();
    let mut acc: Vec<Tuple> = vec![Vec::new()];
    for p in factors {
        let mut next = Vec::with_capacity(acc.len() * p.len());
        for prefix in &acc {
            for t in &p.tuples {
                let mut v = prefix.clone();
                v.extend_from_slice(t);
                next.push(v);
            }
        }
        acc = next;
    }
    Property {
        arity,
        tuples: acc.into_iter().collect(),
    }
}

/// A partition of the universe into nonempty unary blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedPartition {
    blocks: Vec<BTreeSet<Element>>,
}

impl NamedPartition {
    pub fn new(n: usize, blocks: Vec<Vec<Element>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.into_iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidInput(format!("partition block {i} is empty")));
            }
            let mut set = BTreeSet::new();
            for e in b {
                if e >= n {
                    return Err(Error::InvalidInput(format!(
                        "partition block {i} contains {e}, outside the universe"
                    )));
                }
                if seen[e] {
                    return Err(Error::InvalidInput(format!(
                        "element {e} appears in more than one partition block"
                    )));
                }
                seen[e] = true;
                set.insert(e);
            }
            out.push(set);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "element {missing} is not covered by the partition"
            )));
        }
        Ok(NamedPartition { blocks: out })
    }

    /// Partition induced by a class-label vector; blocks are ordered by least element.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut by_label: BTreeMap<usize, BTreeSet<Element>> = BTreeMap::new();
        for (e, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().insert(e);
        }
        let mut blocks: Vec<BTreeSet<Element>> = by_label.into_values().collect();
        blocks.sort_by_key(|b| *b.iter().next().expect("nonempty"));
        NamedPartition { blocks }
    }

    pub fn blocks(&self) -> &[BTreeSet<Element>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_property(&self, i: usize) -> Property {
        Property::unary(self.blocks[i].iter().copied())
    }

    /// Block index of each element.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut labels = vec![0; n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &e in b {
                labels[e] = i;
            }
        }
        labels
    }

    pub fn to_json_string(&self) -> String {
        let file = PartitionFile {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|&e| e as i64).collect())
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializes");
        s.push('\n');
        s
    }
}

// ---------------------------------------------------------------------------
// File formats

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionEntry {
    arity: i64,
    table: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationEntry {
    arity: i64,
    tuples: Vec<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    universe: i64,
    #[serde(default)]
    functions: BTreeMap<String, FunctionEntry>,
    #[serde(default)]
    relations: BTreeMap<String, RelationEntry>,
    #[serde(default)]
    constants: BTreeMap<String, i64>,
}

impl From<&FiniteStructure> for StructureFile {
    fn from(m: &FiniteStructure) -> Self {
        let mut functions = BTreeMap::new();
        let mut constants = BTreeMap::new();
        for (name, f) in &m.functions {
            if f.arity == 0 {
                constants.insert(name.clone(), f.table[0] as i64);
            } else {
                functions.insert(
                    name.clone(),
                    FunctionEntry {
                        arity: f.arity as i64,
                        table: f.table.iter().map(|&v| v as i64).collect(),
                    },
                );
            }
        }
        let relations = m
            .relations
            .iter()
            .map(|(name, tuples)| {
                let arity = m.signature.relation_arity(name).unwrap_or(0) as i64;
                let tuples = tuples
                    .iter()
                    .map(|t| t.iter().map(|&e| e as i64).collect())
                    .collect();
                (name.clone(), RelationEntry { arity, tuples })
            })
            .collect();
        StructureFile {
            universe: m.size as i64,
            functions,
            relations,
            constants,
        }
    }
}

fn to_element(symbol: &str, v: i64, n: usize) -> Result<Element> {
    if v < 0 || v as u64 >= n as u64 {
        Err(Error::validation(
            symbol,
            format!("entry {v} outside the universe of size {n}"),
        ))
    } else {
        Ok(v as usize)
    }
}

fn to_arity(symbol: &str, v: i64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::validation(symbol, format!("negative arity {v}")))
}

/// Parses and validates a structure file with the default universe bound.
pub fn load_structure(text: &str) -> Result<FiniteStructure> {
    load_structure_with_limit(text, DEFAULT_MAX_UNIVERSE)
}

pub fn load_structure_with_limit(text: &str, max_universe: usize) -> Result<FiniteStructure> {
    let file: StructureFile = serde_json::from_str(text)?;
    if file.universe <= 0 {
        return Err(Error::validation("universe", "universe must be positive"));
    }
    let n = file.universe as usize;
    if n > max_universe {
        return Err(Error::UniverseTooLarge {
            size: n,
            max: max_universe,
        });
    }
    let mut b = FiniteStructure::builder(n);
    for (name, f) in &file.functions {
        let arity = to_arity(name, f.arity)?;
        let expected = n.checked_pow(arity as u32).unwrap_or(usize::MAX);
        if f.table.len() != expected {
            return Err(Error::validation(
                name,
                format!(
                    "table is not total: expected {expected} entries, found {}",
                    f.table.len()
                ),
            ));
        }
        let table = f
            .table
            .iter()
            .map(|&v| to_element(name, v, n))
            .collect::<Result<Vec<_>>>()?;
        b = b.function(name, arity, table);
    }
    for (name, r) in &file.relations {
        let arity = to_arity(name, r.arity)?;
        let mut tuples = Vec::with_capacity(r.tuples.len());
        for t in &r.tuples {
            if t.len() != arity {
                return Err(Error::validation(
                    name,
                    format!("tuple {t:?} does not have arity {arity}"),
                ));
            }
            tuples.push(
                t.iter()
                    .map(|&v| to_element(name, v, n))
                    .collect::<Result<Tuple>>()?,
            );
        }
        b = b.relation(name, arity, tuples);
    }
    for (name, &v) in &file.constants {
        b = b.constant(name, to_element(name, v, n)?);
    }
    b.build()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyFile {
    arity: i64,
    tuples: Vec<Vec<i64>>,
}

impl From<&Property> for PropertyFile {
    fn from(p: &Property) -> Self {
        PropertyFile {
            arity: p.arity as i64,
            tuples: p
                .tuples
                .iter()
                .map(|t| t.iter().map(|&e| e as i64).collect())
                .collect(),
        }
    }
}

/// Parses a property file. Entries are checked against `n` when given.
pub fn load_property(text: &str, n: Option<usize>) -> Result<Property> {
    let file: PropertyFile = serde_json::from_str(text)?;
    let arity = to_arity("property", file.arity)?;
    let mut tuples = BTreeSet::new();
    for t in file.tuples {
        if t.len() != arity {
            return Err(Error::ArityMismatch(format!(
                "tuple {t:?} in a property of arity {arity}"
            )));
        }
        let mut out = Vec::with_capacity(arity);
        for v in t {
            if v < 0 {
                return Err(Error::InvalidInput(format!("negative element {v}")));
            }
            out.push(v as usize);
        }
        tuples.insert(out);
    }
    let p = Property { arity, tuples };
    if let Some(n) = n {
        p.check_within(n)?;
    }
    Ok(p)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionFile {
    blocks: Vec<Vec<i64>>,
}

pub fn load_partition(text: &str, n: usize) -> Result<NamedPartition> {
    let file: PartitionFile = serde_json::from_str(text)?;
    let mut blocks = Vec::with_capacity(file.blocks.len());
    for b in file.blocks {
        let mut out = Vec::with_capacity(b.len());
        for v in b {
            if v < 0 {
                return Err(Error::InvalidInput(format!("negative element {v}")));
            }
            out.push(v as usize);
        }
        blocks.push(out);
    }
    NamedPartition::new(n, blocks)
}
