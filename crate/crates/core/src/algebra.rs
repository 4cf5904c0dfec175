//! Subuniverses, congruences and graded partitions, each decided twice:
//! once through preservation and once by a direct algebraic scan.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::budget::{pow_sat, Budget};
use crate::error::{Error, Result};
use crate::logic::{BlockType, Formula, Term};
use crate::preserve::{check_preservation, PreservationMode};
use crate::sigstruct::{Element, FiniteStructure, NamedPartition, Property, Tuple, Tuples};

/// An equivalence relation on `{0..n-1}`, stored as canonical class labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EquivalenceRelation {
    labels: Vec<usize>,
}

impl EquivalenceRelation {
    pub fn new(n: usize, pairs: &Property) -> Result<Self> {
        if pairs.arity() != 2 {
            return Err(Error::NotEquivalence(format!(
                "arity {} instead of 2",
                pairs.arity()
            )));
        }
        pairs
            .check_within(n)
            .map_err(|e| Error::NotEquivalence(e.to_string()))?;
        if let Some(a) = (0..n).find(|&a| !pairs.contains(&[a, a])) {
            return Err(Error::NotEquivalence(format!("not reflexive at {a}")));
        }
        for t in pairs.tuples() {
            if !pairs.contains(&[t[1], t[0]]) {
                return Err(Error::NotEquivalence(format!(
                    "not symmetric at ({},{})",
                    t[0], t[1]
                )));
            }
        }
        let mut labels = vec![usize::MAX; n];
        for a in 0..n {
            if labels[a] == usize::MAX {
                labels[a] = a;
                for b in a + 1..n {
                    if pairs.contains(&[a, b]) {
                        labels[b] = a;
                    }
                }
            }
        }
        let rel = EquivalenceRelation::from_labels(&labels);
        if rel.len_pairs() != pairs.len() {
            let t = pairs
                .tuples()
                .iter()
                .find(|t| !rel.related(t[0], t[1]))
                .expect("some pair breaks transitivity");
            return Err(Error::NotEquivalence(format!(
                "not transitive at ({},{})",
                t[0], t[1]
            )));
        }
        Ok(rel)
    }

    pub fn from_labels(labels: &[usize]) -> Self {
        let mut renumber = BTreeMap::new();
        let labels = labels
            .iter()
            .map(|l| {
                let next = renumber.len();
                *renumber.entry(*l).or_insert(next)
            })
            .collect();
        EquivalenceRelation { labels }
    }

    pub fn from_partition(n: usize, partition: &NamedPartition) -> Self {
        EquivalenceRelation::from_labels(&partition.labels(n))
    }

    pub fn identity(n: usize) -> Self {
        EquivalenceRelation {
            labels: (0..n).collect(),
        }
    }

    pub fn full(n: usize) -> Self {
        EquivalenceRelation { labels: vec![0; n] }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn related(&self, a: Element, b: Element) -> bool {
        self.labels[a] == self.labels[b]
    }

    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn classes(&self) -> Vec<Vec<Element>> {
        let mut out = vec![Vec::new(); self.class_count()];
        for (e, &l) in self.labels.iter().enumerate() {
            out[l].push(e);
        }
        out
    }

    fn len_pairs(&self) -> usize {
        self.classes().iter().map(|c| c.len() * c.len()).sum()
    }

    pub fn to_property(&self) -> Property {
        let n = self.size();
        let mut p = Property::empty(2);
        for a in 0..n {
            for b in 0..n {
                if self.related(a, b) {
                    p.insert(vec![a, b]);
                }
            }
        }
        p
    }

    pub fn to_partition(&self) -> NamedPartition {
        NamedPartition::from_labels(&self.labels)
    }

    /// The least equivalence relation containing both.
    pub fn join(&self, other: &EquivalenceRelation) -> EquivalenceRelation {
        let n = self.size();
        let mut uf = UnionFind::new(n);
        for rel in [self, other] {
            let classes = rel.classes();
            for e in 0..n {
                uf.union(e, classes[rel.labels[e]][0]);
            }
        }
        EquivalenceRelation::from_labels(&uf.labels())
    }
}

impl Serialize for EquivalenceRelation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(1))?;
        map.serialize_entry("blocks", &self.classes())?;
        map.end()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|e| self.find(e)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DualVerdict {
    pub via_preservation: bool,
    pub via_direct: bool,
}

impl DualVerdict {
    pub fn agree(&self) -> bool {
        self.via_preservation == self.via_direct
    }
}

fn x(i: usize) -> Term {
    Term::Var(format!("x{i}"))
}

/// `f(x1,…,xk) = y` with singleton parameter blocks.
fn graph_type(name: &str, k: usize) -> Result<BlockType> {
    let f = Formula::eq(Term::app(name, (1..=k).map(x).collect()), Term::var("y"));
    let params: Vec<Vec<String>> = (1..=k).map(|i| vec![format!("x{i}")]).collect();
    BlockType::new(params, vec!["y".into()], vec![f])
}

/// Closure of a nonempty unary property under every function, constants included.
pub fn is_subuniverse(m: &FiniteStructure, p: &Property, budget: &Budget) -> Result<DualVerdict> {
    if p.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "expected a unary property, found arity {}",
            p.arity()
        )));
    }
    p.check_within(m.size())?;
    if p.is_empty() {
        return Err(Error::EmptyProperty(
            "a subuniverse must be nonempty".into(),
        ));
    }
    let mut via_preservation = true;
    let mut via_direct = true;
    for (name, f) in m.functions() {
        let k = f.arity();
        let ty = graph_type(name, k)?;
        let ps = vec![p.clone(); k];
        via_preservation &=
            check_preservation(m, &ty, &ps, p, PreservationMode::TotallyPreserved, budget)?;
        budget.admit(pow_sat(p.len(), k))?;
        via_direct &= Tuples::new(p.len(), k).all(|idx| {
            let elems: Vec<Element> = p.elements().collect();
            let args: Tuple = idx.iter().map(|&i| elems[i]).collect();
            p.contains(&[f.apply(m.size(), &args)])
        });
    }
    Ok(DualVerdict {
        via_preservation,
        via_direct,
    })
}

fn compatibility_cost(m: &FiniteStructure, e: &EquivalenceRelation) -> u128 {
    let per_position: u128 = e
        .classes()
        .iter()
        .map(|c| (c.len() * c.len()) as u128)
        .sum();
    m.functions()
        .map(|(_, f)| (0..f.arity()).fold(1u128, |acc, _| acc.saturating_mul(per_position)))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Whether `f(ā¹) E f(ā²)` whenever `a¹_i E a²_i` for every argument position.
pub fn is_compatible(
    m: &FiniteStructure,
    e: &EquivalenceRelation,
    budget: &Budget,
) -> Result<bool> {
    budget.admit(compatibility_cost(m, e))?;
    let n = m.size();
    let classes = e.classes();
    for (_, f) in m.functions() {
        let k = f.arity();
        for a in Tuples::new(n, k) {
            let pools: Vec<Property> = a
                .iter()
                .map(|&ai| Property::unary(classes[e.labels[ai]].iter().copied()))
                .collect();
            let image = f.apply(n, &a);
            for b in crate::preserve::ParameterProduct::new(&pools) {
                let b: Tuple = b.into_iter().flatten().collect();
                if !e.related(image, f.apply(n, &b)) {
                    return Ok(false);
                }
            }
        }
    }
    budget.charge(compatibility_cost(m, e).min(u64::MAX as u128) as u64);
    Ok(true)
}

/// Congruence test. The preservation side evaluates
/// `E(y¹,y²) ∧ f(x̄¹)=y¹ ∧ f(x̄²)=y²` over pairs `(x¹_i,x²_i)` ranging over `E`
/// and asks that every parameter tuple meets `E`.
pub fn is_congruence(
    m: &FiniteStructure,
    e: &EquivalenceRelation,
    budget: &Budget,
) -> Result<DualVerdict> {
    if e.size() != m.size() {
        return Err(Error::NotEquivalence(format!(
            "relation on {} elements for a universe of {}",
            e.size(),
            m.size()
        )));
    }
    let rel = m.fresh_symbol("E");
    let pairs = e.to_property();
    let extended = m.with_relation(&rel, 2, pairs.tuples().clone())?;
    let mut via_preservation = true;
    for (name, f) in m.functions() {
        let k = f.arity();
        let xa = |i: usize| format!("xa{i}");
        let xb = |i: usize| format!("xb{i}");
        let formula = Formula::conj([
            Formula::atom(&rel, vec![Term::var("ya"), Term::var("yb")]),
            Formula::eq(
                Term::app(name, (1..=k).map(|i| Term::Var(xa(i))).collect()),
                Term::var("ya"),
            ),
            Formula::eq(
                Term::app(name, (1..=k).map(|i| Term::Var(xb(i))).collect()),
                Term::var("yb"),
            ),
        ]);
        let params = (1..=k).map(|i| vec![xa(i), xb(i)]).collect();
        let ty = BlockType::new(params, vec!["ya".into(), "yb".into()], vec![formula])?;
        let ps = vec![pairs.clone(); k];
        via_preservation &= check_preservation(
            &extended,
            &ty,
            &ps,
            &pairs,
            PreservationMode::ForallPartiallyPreserved,
            budget,
        )?;
    }
    Ok(DualVerdict {
        via_preservation,
        via_direct: is_compatible(m, e, budget)?,
    })
}

/// The least congruence identifying `a` and `b`.
pub fn principal_congruence(m: &FiniteStructure, a: Element, b: Element) -> EquivalenceRelation {
    let n = m.size();
    let mut uf = UnionFind::new(n);
    uf.union(a, b);
    let tables: Vec<_> = m
        .functions()
        .filter(|(_, f)| f.arity() > 0)
        .map(|(_, f)| f)
        .collect();
    loop {
        let mut changed = false;
        for f in &tables {
            let k = f.arity();
            for t in Tuples::new(n, k) {
                let image = f.apply(n, &t);
                for i in 0..k {
                    let mut u = t.clone();
                    u[i] = uf.find(t[i]);
                    if u[i] != t[i] {
                        let other = f.apply(n, &u);
                        changed |= uf.union(image, other);
                    }
                }
            }
        }
        if !changed {
            return EquivalenceRelation::from_labels(&uf.labels());
        }
    }
}

/// Every congruence, from the identity (finest) to the full relation.
pub fn enumerate_congruences(
    m: &FiniteStructure,
    budget: &Budget,
) -> Result<Vec<EquivalenceRelation>> {
    if m.signature().functions().next().is_none() {
        return Err(Error::NoFunctions);
    }
    let n = m.size();
    let sweep: u128 = m
        .functions()
        .map(|(_, f)| pow_sat(n, f.arity()).saturating_mul(f.arity() as u128))
        .sum();
    budget.admit(
        pow_sat(n, 2)
            .saturating_mul(sweep)
            .saturating_mul(n as u128),
    )?;
    let mut principals = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            principals.insert(principal_congruence(m, a, b));
        }
    }
    let principals: Vec<EquivalenceRelation> = principals.into_iter().collect();
    let mut found = BTreeSet::from([EquivalenceRelation::identity(n)]);
    let mut frontier = vec![EquivalenceRelation::identity(n)];
    let mut joins: u64 = 0;
    while let Some(c) = frontier.pop() {
        for p in &principals {
            joins += 1;
            budget.admit((joins as u128).saturating_mul((n * n) as u128))?;
            let j = c.join(p);
            if found.insert(j.clone()) {
                frontier.push(j);
            }
        }
    }
    budget.charge(joins.saturating_mul((n * n) as u64));
    let mut out: Vec<EquivalenceRelation> = found.into_iter().collect();
    out.sort_by(|a, b| b.class_count().cmp(&a.class_count()).then_with(|| a.cmp(b)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradeEntry {
    pub blocks: Vec<usize>,
    pub grade: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradedPartition {
    pub ok: bool,
    pub grade_map: Vec<GradeEntry>,
    /// Whether the preservation reading gives the same grade for every block tuple.
    pub preservation_agrees: bool,
}

impl GradedPartition {
    pub fn grade(&self, blocks: &[usize]) -> Option<usize> {
        self.grade_map
            .iter()
            .find(|e| e.blocks == blocks)
            .and_then(|e| e.grade)
    }
}

/// Checks `f(X_i1,…,X_ik) ⊆ X_j` for a single `j` per block tuple.
pub fn check_graded_partition(
    m: &FiniteStructure,
    op: &str,
    partition: &NamedPartition,
    budget: &Budget,
) -> Result<GradedPartition> {
    let f = m
        .function(op)
        .ok_or_else(|| Error::UnknownSymbol(op.to_string()))?;
    let k = f.arity();
    if k == 0 {
        return Err(Error::Arity {
            symbol: op.to_string(),
            expected: 2,
            found: 0,
        });
    }
    let n = m.size();
    let labels = partition.labels(n);
    if partition.blocks().iter().flatten().any(|&e| e >= n) || labels.len() != n {
        return Err(Error::InvalidInput(
            "partition does not match the universe".into(),
        ));
    }
    let blocks: Vec<Property> = (0..partition.len())
        .map(|i| partition.block_property(i))
        .collect();
    budget.admit(pow_sat(n, k).saturating_add(pow_sat(blocks.len(), k + 1)))?;
    let ty = graph_type(op, k)?;
    let mut grade_map = Vec::new();
    let mut preservation_agrees = true;
    for idx in Tuples::new(blocks.len(), k) {
        let factors: Vec<Property> = idx.iter().map(|&i| blocks[i].clone()).collect();
        let images: BTreeSet<usize> = crate::preserve::ParameterProduct::new(&factors)
            .map(|a| labels[f.apply(n, &a.into_iter().flatten().collect::<Vec<_>>())])
            .collect();
        let grade = if images.len() == 1 {
            images.into_iter().next()
        } else {
            None
        };
        let mut preserved = Vec::new();
        for (j, target) in blocks.iter().enumerate() {
            if check_preservation(
                m,
                &ty,
                &factors,
                target,
                PreservationMode::TotallyPreserved,
                budget,
            )? {
                preserved.push(j);
            }
        }
        preservation_agrees &= preserved == grade.into_iter().collect::<Vec<_>>();
        grade_map.push(GradeEntry { blocks: idx, grade });
    }
    Ok(GradedPartition {
        ok: grade_map.iter().all(|e| e.grade.is_some()),
        grade_map,
        preservation_agrees,
    })
}
