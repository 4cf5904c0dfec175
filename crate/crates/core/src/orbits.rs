//! Automorphism groups, tuple orbits and type traces.
//!
//! In a finite structure the realization set of a complete type over the
//! empty set is exactly an orbit of the automorphism group, so traces are
//! computed extensionally from orbits.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::rc::Rc;

use num_bigint::BigUint;
use serde::Serialize;

use crate::budget::{pow_sat, Budget};
use crate::error::{Error, Result};
use crate::eval::{solution_set_with, TypeEvaluator};
use crate::logic::{build_superposition_type, BlockType, Formula, Term};
use crate::preserve::{product_size, ParameterProduct};
use crate::sigstruct::{tuple_rank, tuple_unrank, Element, FiniteStructure, Property, Tuple};

pub type Permutation = Vec<Element>;

const PARTITION_LIMIT: u128 = 1 << 22;
const DEFINING_FORMULA_MAX: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutomorphismGroup {
    pub generators: Vec<Permutation>,
    #[serde(serialize_with = "serialize_biguint")]
    pub order: BigUint,
    pub base: Vec<Element>,
    pub basic_orbit_sizes: Vec<usize>,
}

fn serialize_biguint<S: serde::Serializer>(
    v: &BigUint,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match u64::try_from(v) {
        Ok(small) => s.serialize_u64(small),
        Err(_) => s.serialize_str(&v.to_string()),
    }
}

impl AutomorphismGroup {
    pub fn order(&self) -> &BigUint {
        &self.order
    }
}

pub fn apply(perm: &[Element], t: &[Element]) -> Tuple {
    t.iter().map(|&e| perm[e]).collect()
}

/// Whether `perm` is an automorphism of `m`.
pub fn is_automorphism(m: &FiniteStructure, perm: &[Element]) -> bool {
    let n = m.size();
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &e in perm {
        if e >= n || seen[e] {
            return false;
        }
        seen[e] = true;
    }
    for (_, tuples) in m.relations() {
        if !tuples.iter().all(|t| tuples.contains(&apply(perm, t))) {
            return false;
        }
    }
    for (_, f) in m.functions() {
        let k = f.arity();
        for (rank, &out) in f.table().iter().enumerate() {
            let args = tuple_unrank(n, k, rank);
            if f.apply(n, &apply(perm, &args)) != perm[out] {
                return false;
            }
        }
    }
    true
}

enum Check {
    Rel(usize, Vec<Element>),
    Fun(usize, Vec<Element>, Element),
}

enum Lookup {
    Dense(Vec<u64>),
    Sparse(HashSet<Tuple>),
}

struct Searcher<'a> {
    n: usize,
    m: &'a FiniteStructure,
    rels: Vec<Lookup>,
    funs: Vec<&'a [Element]>,
    colors: Vec<usize>,
    base: Vec<Element>,
    triggers: Vec<Vec<Check>>,
    steps: u64,
    limit: u64,
}

/// One round-stable, isomorphism-invariant colouring of the universe.
fn refine_colors(m: &FiniteStructure) -> Vec<usize> {
    let n = m.size();
    // Each hyperedge: (symbol id, element list). Functions contribute their graphs.
    let mut edges: Vec<(usize, Vec<Element>)> = Vec::new();
    let mut sym = 0;
    for (_, tuples) in m.relations() {
        for t in tuples {
            edges.push((sym, t.clone()));
        }
        sym += 1;
    }
    for (_, f) in m.functions() {
        for (rank, &out) in f.table().iter().enumerate() {
            let mut t = tuple_unrank(n, f.arity(), rank);
            t.push(out);
            edges.push((sym, t));
        }
        sym += 1;
    }
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, (_, t)) in edges.iter().enumerate() {
        for (pos, &e) in t.iter().enumerate() {
            incident[e].push((id, pos));
        }
    }
    let mut colors = vec![0usize; n];
    let mut classes = 1;
    loop {
        let sigs: Vec<(usize, Vec<(usize, usize, Vec<usize>)>)> = (0..n)
            .map(|v| {
                let mut s: Vec<(usize, usize, Vec<usize>)> = incident[v]
                    .iter()
                    .map(|&(id, pos)| {
                        let (sym, t) = &edges[id];
                        (*sym, pos, t.iter().map(|&e| colors[e]).collect())
                    })
                    .collect();
                s.sort();
                (colors[v], s)
            })
            .collect();
        let distinct: BTreeSet<&(usize, Vec<(usize, usize, Vec<usize>)>)> = sigs.iter().collect();
        let index: BTreeMap<_, usize> = distinct
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let next: Vec<usize> = sigs.iter().map(|s| index[s]).collect();
        let count = index.len();
        colors = next;
        if count == classes {
            return colors;
        }
        classes = count;
    }
}

impl<'a> Searcher<'a> {
    fn new(m: &'a FiniteStructure, limit: u64) -> Self {
        let n = m.size();
        let colors = refine_colors(m);
        let mut rels = Vec::new();
        let mut checks: Vec<Check> = Vec::new();
        for (i, (_, tuples)) in m.relations().enumerate() {
            let k = tuples.iter().next().map_or(0, Vec::len);
            let lookup = if pow_sat(n, k) <= 1 << 24 {
                let mut bits = vec![0u64; (n.pow(k as u32)).div_ceil(64)];
                for t in tuples {
                    let r = tuple_rank(n, t);
                    bits[r / 64] |= 1 << (r % 64);
                }
                Lookup::Dense(bits)
            } else {
                Lookup::Sparse(tuples.iter().cloned().collect())
            };
            rels.push(lookup);
            for t in tuples {
                checks.push(Check::Rel(i, t.clone()));
            }
        }
        let mut funs = Vec::new();
        for (i, (_, f)) in m.functions().enumerate() {
            funs.push(f.table());
            for (rank, &out) in f.table().iter().enumerate() {
                checks.push(Check::Fun(i, tuple_unrank(n, f.arity(), rank), out));
            }
        }

        let elements = |c: &Check| -> Vec<Element> {
            match c {
                Check::Rel(_, t) => t.clone(),
                Check::Fun(_, a, o) => {
                    let mut v = a.clone();
                    v.push(*o);
                    v
                }
            }
        };
        let mut links = vec![vec![0u32; n]; n];
        for c in &checks {
            let es = elements(c);
            for &a in &es {
                for &b in &es {
                    if a != b {
                        links[a][b] += 1;
                    }
                }
            }
        }
        let mut class_size = vec![0usize; n];
        for &c in &colors {
            class_size[c] += 1;
        }
        let mut chosen = vec![false; n];
        let mut weight = vec![0u64; n];
        let mut base = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| !chosen[v])
                .max_by(|&a, &b| {
                    let ka = (
                        class_size[colors[a]] == 1,
                        weight[a],
                        std::cmp::Reverse(class_size[colors[a]]),
                        std::cmp::Reverse(a),
                    );
                    let kb = (
                        class_size[colors[b]] == 1,
                        weight[b],
                        std::cmp::Reverse(class_size[colors[b]]),
                        std::cmp::Reverse(b),
                    );
                    ka.cmp(&kb)
                })
                .expect("unchosen vertex");
            chosen[v] = true;
            base.push(v);
            for u in 0..n {
                weight[u] += links[v][u] as u64;
            }
        }
        let mut position = vec![0; n];
        for (i, &v) in base.iter().enumerate() {
            position[v] = i;
        }
        let mut triggers: Vec<Vec<Check>> = (0..n).map(|_| Vec::new()).collect();
        for c in checks {
            let p = elements(&c).iter().map(|&e| position[e]).max().unwrap_or(0);
            triggers[p].push(c);
        }
        Searcher {
            n,
            m,
            rels,
            funs,
            colors,
            base,
            triggers,
            steps: 0,
            limit,
        }
    }

    fn consistent(&self, pos: usize, img: &[usize]) -> bool {
        let n = self.n;
        self.triggers[pos].iter().all(|c| match c {
            Check::Rel(r, t) => match &self.rels[*r] {
                Lookup::Dense(bits) => {
                    let rank = t.iter().fold(0, |acc, &e| acc * n + img[e]);
                    bits[rank / 64] >> (rank % 64) & 1 == 1
                }
                Lookup::Sparse(set) => set.contains(&apply(img, t)),
            },
            Check::Fun(f, args, out) => {
                let rank = args.iter().fold(0, |acc, &e| acc * n + img[e]);
                self.funs[*f][rank] == img[*out]
            }
        })
    }

    /// Extends a partial map that is fixed on `base[..pos]`.
    fn extend(&mut self, pos: usize, img: &mut Vec<usize>, used: &mut Vec<bool>) -> Result<bool> {
        if pos == self.n {
            return Ok(true);
        }
        let v = self.base[pos];
        for u in 0..self.n {
            if used[u] || self.colors[u] != self.colors[v] {
                continue;
            }
            self.steps += 1;
            if self.steps > self.limit {
                return Err(Error::BudgetExceeded {
                    estimate: self.steps as u128,
                    limit: self.limit,
                });
            }
            img[v] = u;
            used[u] = true;
            if self.consistent(pos, img) && self.extend(pos + 1, img, used)? {
                return Ok(true);
            }
            used[u] = false;
        }
        img[v] = usize::MAX;
        Ok(false)
    }

    /// An automorphism fixing `base[..level]` and sending `base[level]` to `target`.
    fn find(&mut self, level: usize, target: Element) -> Result<Option<Permutation>> {
        let mut img = vec![usize::MAX; self.n];
        let mut used = vec![false; self.n];
        for i in 0..level {
            let b = self.base[i];
            img[b] = b;
            used[b] = true;
            if !self.consistent(i, &img) {
                return Ok(None);
            }
        }
        let b = self.base[level];
        if used[target] || self.colors[target] != self.colors[b] {
            return Ok(None);
        }
        img[b] = target;
        used[target] = true;
        if !self.consistent(level, &img) {
            return Ok(None);
        }
        if self.extend(level + 1, &mut img, &mut used)? {
            debug_assert!(is_automorphism(self.m, &img));
            Ok(Some(img))
        } else {
            Ok(None)
        }
    }
}

fn point_orbit(start: Element, gens: &[&Permutation]) -> BTreeSet<Element> {
    let mut orbit = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = g[x];
            if orbit.insert(y) {
                queue.push_back(y);
            }
        }
    }
    orbit
}

/// Generators and exact order of `Aut(M)` by a stabilizer-chain search.
pub fn compute_automorphisms(m: &FiniteStructure, budget: &Budget) -> Result<AutomorphismGroup> {
    let n = m.size();
    let limit = budget.limit().saturating_sub(budget.spent());
    let mut s = Searcher::new(m, limit);
    let mut gens: Vec<(usize, Permutation)> = Vec::new();
    let mut sizes = vec![1usize; n];
    for level in (0..n).rev() {
        let b = s.base[level];
        let candidates: Vec<Element> = (0..n)
            .filter(|&c| s.colors[c] == s.colors[b] && c != b)
            .collect();
        let mut orbit = {
            let g: Vec<&Permutation> = gens.iter().map(|(_, p)| p).collect();
            point_orbit(b, &g)
        };
        for c in candidates {
            if orbit.contains(&c) {
                continue;
            }
            if let Some(p) = s.find(level, c)? {
                gens.push((level, p));
                let g: Vec<&Permutation> = gens.iter().map(|(_, p)| p).collect();
                orbit = point_orbit(b, &g);
            }
        }
        sizes[level] = orbit.len();
    }
    budget.charge(s.steps);
    let order = sizes
        .iter()
        .fold(BigUint::from(1u32), |acc, &k| acc * BigUint::from(k));
    let mut generators: Vec<Permutation> = gens.into_iter().map(|(_, p)| p).collect();
    generators.reverse();
    Ok(AutomorphismGroup {
        generators,
        order,
        base: s.base,
        basic_orbit_sizes: sizes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Orbit {
    pub arity: usize,
    /// The lexicographically least member.
    pub representative: Tuple,
    pub members: Property,
}

#[derive(Debug)]
pub struct OrbitPartition {
    pub arity: usize,
    labels: Vec<u32>,
    pub orbits: Vec<Orbit>,
}

impl OrbitPartition {
    pub fn label(&self, n: usize, t: &[Element]) -> usize {
        self.labels[tuple_rank(n, t)] as usize
    }
}

fn tuple_orbit(n: usize, start: &[Element], gens: &[Permutation]) -> BTreeSet<Tuple> {
    let mut seen = BTreeSet::from([start.to_vec()]);
    let mut queue = VecDeque::from([start.to_vec()]);
    let _ = n;
    while let Some(t) = queue.pop_front() {
        for g in gens {
            let u = apply(g, &t);
            if !seen.contains(&u) {
                seen.insert(u.clone());
                queue.push_back(u);
            }
        }
    }
    seen
}

/// A structure together with its automorphism group and cached orbit partitions.
pub struct Symmetry<'m> {
    m: &'m FiniteStructure,
    group: AutomorphismGroup,
    partitions: RefCell<BTreeMap<usize, Rc<OrbitPartition>>>,
    budget: &'m Budget,
}

impl<'m> Symmetry<'m> {
    pub fn new(m: &'m FiniteStructure, budget: &'m Budget) -> Result<Self> {
        let group = compute_automorphisms(m, budget)?;
        Ok(Symmetry {
            m,
            group,
            partitions: RefCell::new(BTreeMap::new()),
            budget,
        })
    }

    pub fn structure(&self) -> &'m FiniteStructure {
        self.m
    }

    pub fn budget(&self) -> &'m Budget {
        self.budget
    }

    pub fn group(&self) -> &AutomorphismGroup {
        &self.group
    }

    pub fn partition(&self, k: usize) -> Result<Rc<OrbitPartition>> {
        if let Some(p) = self.partitions.borrow().get(&k) {
            return Ok(p.clone());
        }
        let n = self.m.size();
        let total = pow_sat(n, k);
        if total > PARTITION_LIMIT {
            return Err(Error::BudgetExceeded {
                estimate: total,
                limit: PARTITION_LIMIT as u64,
            });
        }
        self.budget
            .admit(total.saturating_mul(self.group.generators.len().max(1) as u128))?;
        let total = total as usize;
        let mut labels = vec![u32::MAX; total];
        let mut orbits = Vec::new();
        for rank in 0..total {
            if labels[rank] != u32::MAX {
                continue;
            }
            let start = tuple_unrank(n, k, rank);
            let members = tuple_orbit(n, &start, &self.group.generators);
            let id = orbits.len() as u32;
            for t in &members {
                labels[tuple_rank(n, t)] = id;
            }
            orbits.push(Orbit {
                arity: k,
                representative: start,
                members: Property::from_set(k, members),
            });
        }
        self.budget.charge(total as u64);
        let part = Rc::new(OrbitPartition {
            arity: k,
            labels,
            orbits,
        });
        self.partitions.borrow_mut().insert(k, part.clone());
        Ok(part)
    }

    pub fn orbits(&self, k: usize) -> Result<Vec<Orbit>> {
        Ok(self.partition(k)?.orbits.clone())
    }

    pub fn orbit_of_tuple(&self, t: &[Element]) -> Result<Orbit> {
        let n = self.m.size();
        if let Some(e) = t.iter().find(|&&e| e >= n) {
            return Err(Error::InvalidInput(format!(
                "element {e} lies outside the universe"
            )));
        }
        if pow_sat(n, t.len()) <= PARTITION_LIMIT {
            let part = self.partition(t.len())?;
            return Ok(part.orbits[part.label(n, t)].clone());
        }
        let members = tuple_orbit(n, t, &self.group.generators);
        let representative = members.iter().next().expect("nonempty orbit").clone();
        Ok(Orbit {
            arity: t.len(),
            representative,
            members: Property::from_set(t.len(), members),
        })
    }

    pub fn same_orbit(&self, a: &[Element], b: &[Element]) -> Result<bool> {
        if a.len() != b.len() {
            return Ok(false);
        }
        Ok(self.orbit_of_tuple(a)?.members.contains(b))
    }

    /// Errors unless `p` is exactly one orbit.
    pub fn require_orbit(&self, p: &Property) -> Result<Orbit> {
        let first = p
            .tuples()
            .iter()
            .next()
            .ok_or_else(|| Error::NotAnOrbit("the property is empty".into()))?;
        let orbit = self.orbit_of_tuple(first)?;
        if orbit.members != *p {
            return Err(Error::NotAnOrbit(format!(
                "{p} is not the orbit {} of {:?}",
                orbit.members, orbit.representative
            )));
        }
        Ok(orbit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceMember {
    pub representative: Tuple,
    pub members: Property,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub family: Vec<TraceMember>,
    pub disjoint: bool,
}

impl Trace {
    fn from_orbits(orbits: BTreeMap<Tuple, Property>) -> Trace {
        Trace {
            family: orbits
                .into_iter()
                .map(|(representative, members)| TraceMember {
                    representative,
                    members,
                })
                .collect(),
            disjoint: true,
        }
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    pub fn representatives(&self) -> Vec<&Tuple> {
        self.family.iter().map(|m| &m.representative).collect()
    }

    pub fn sets(&self) -> BTreeSet<&Property> {
        self.family.iter().map(|m| &m.members).collect()
    }

    pub fn union(&self, arity: usize) -> Property {
        self.family
            .iter()
            .fold(Property::empty(arity), |acc, m| acc.union(&m.members))
    }
}

fn orbits_meeting(
    sym: &Symmetry<'_>,
    sol: &Property,
    into: &mut BTreeMap<Tuple, Property>,
) -> Result<()> {
    let n = sym.m.size();
    let part = sym.partition(sol.arity())?;
    for t in sol.tuples() {
        let o = &part.orbits[part.label(n, t)];
        into.entry(o.representative.clone())
            .or_insert_with(|| o.members.clone());
    }
    Ok(())
}

/// The orbits of arity `m` that meet the solution set at `params`.
pub fn canonical_trace(sym: &Symmetry<'_>, ty: &BlockType, params: &[Tuple]) -> Result<Trace> {
    let sol = solution_set_with(sym.m, ty, params, sym.budget)?;
    let mut orbits = BTreeMap::new();
    orbits_meeting(sym, &sol, &mut orbits)?;
    let trace = Trace::from_orbits(orbits);
    #[cfg(debug_assertions)]
    verify_trace(sym, ty, params, &sol, &trace)?;
    Ok(trace)
}

#[cfg(debug_assertions)]
fn verify_trace(
    sym: &Symmetry<'_>,
    ty: &BlockType,
    params: &[Tuple],
    sol: &Property,
    trace: &Trace,
) -> Result<()> {
    use crate::preserve::{check_preservation, PreservationMode};
    let singletons: Vec<Property> = params.iter().cloned().map(Property::singleton).collect();
    assert!(
        sol.is_subset(&trace.union(ty.m())),
        "trace must cover the solution set"
    );
    for (i, a) in trace.family.iter().enumerate() {
        for b in &trace.family[i + 1..] {
            assert!(
                !a.members.intersects(&b.members),
                "trace members must be disjoint"
            );
        }
        assert!(
            check_preservation(
                sym.m,
                ty,
                &singletons,
                &a.members,
                PreservationMode::ExistsPartiallyPreserved,
                sym.budget,
            )?,
            "every trace member must be met"
        );
    }
    Ok(())
}

/// `[Φ]_(P1,…,Pn)`: the union of canonical traces over the parameter product.
pub fn trace_over_properties(sym: &Symmetry<'_>, ty: &BlockType, ps: &[Property]) -> Result<Trace> {
    if ps.len() != ty.n() {
        return Err(Error::ArityMismatch(format!(
            "the type has {} parameter blocks but {} properties were given",
            ty.n(),
            ps.len()
        )));
    }
    let mut ev = TypeEvaluator::new(sym.m, ty, sym.budget)?;
    ev.admit(product_size(ps))?;
    let mut orbits = BTreeMap::new();
    for params in ParameterProduct::new(ps) {
        let sol = ev.solution_set(&params)?;
        orbits_meeting(sym, &sol, &mut orbits)?;
    }
    Ok(Trace::from_orbits(orbits))
}

/// Whether `O1×…×On` is a single orbit of `n`-tuples.
pub fn is_weakly_orthogonal(sym: &Symmetry<'_>, orbits: &[Property]) -> Result<bool> {
    let mut start = Vec::with_capacity(orbits.len());
    for o in orbits {
        if o.arity() != 1 {
            return Err(Error::NotAnOrbit(format!("{o} is not a set of elements")));
        }
        sym.require_orbit(o)?;
        start.push(o.elements().next().expect("orbits are nonempty"));
    }
    if orbits.is_empty() {
        return Ok(true);
    }
    let joint = sym.orbit_of_tuple(&start)?;
    Ok(joint.members.len() as u128 == product_size(orbits))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuperpositionCheck {
    pub lhs: Trace,
    pub rhs: Trace,
    pub equal: bool,
    pub only_lhs: Vec<Tuple>,
    pub only_rhs: Vec<Tuple>,
}

/// Compares the trace of `S(Φ1,…,Φm,Ψ)` at `params` with the orbits of
/// solutions of `Ψ` over joint witnesses `b̄i ∈ Φi(params)`.
pub fn superposition_trace_check(
    sym: &Symmetry<'_>,
    phis: &[BlockType],
    psi: &BlockType,
    params: &[Tuple],
) -> Result<SuperpositionCheck> {
    let sup = build_superposition_type(phis, psi)?;
    let lhs = canonical_trace(sym, &sup, params)?;
    let inner: Vec<Property> = phis
        .iter()
        .map(|phi| solution_set_with(sym.m, phi, params, sym.budget))
        .collect::<Result<_>>()?;
    let mut ev = TypeEvaluator::new(sym.m, psi, sym.budget)?;
    ev.admit(product_size(&inner))?;
    let mut orbits = BTreeMap::new();
    for bs in ParameterProduct::new(&inner) {
        let sol = ev.solution_set(&bs)?;
        orbits_meeting(sym, &sol, &mut orbits)?;
    }
    let rhs = Trace::from_orbits(orbits);
    let l: BTreeSet<&Tuple> = lhs.representatives().into_iter().collect();
    let r: BTreeSet<&Tuple> = rhs.representatives().into_iter().collect();
    let only_lhs: Vec<Tuple> = l.difference(&r).map(|t| (*t).clone()).collect();
    let only_rhs: Vec<Tuple> = r.difference(&l).map(|t| (*t).clone()).collect();
    Ok(SuperpositionCheck {
        equal: only_lhs.is_empty() && only_rhs.is_empty(),
        lhs,
        rhs,
        only_lhs,
        only_rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceCardinality {
    pub count: usize,
    pub is_singleton: bool,
    /// Membership predicate of each orbit in the trace, as its member set.
    pub predicates: Vec<TraceMember>,
}

pub fn trace_cardinality(
    sym: &Symmetry<'_>,
    ty: &BlockType,
    params: &[Tuple],
) -> Result<TraceCardinality> {
    let trace = canonical_trace(sym, ty, params)?;
    Ok(TraceCardinality {
        count: trace.len(),
        is_singleton: trace.len() == 1,
        predicates: trace.family,
    })
}

/// A formula in `y1…yk` whose solution set is the orbit of `representative`:
/// the full atomic diagram of the structure with `ys` placed at the
/// representative's positions. Only offered for universes of at most six elements.
pub fn orbit_defining_formula(m: &FiniteStructure, representative: &[Element]) -> Result<Formula> {
    let n = m.size();
    if n > DEFINING_FORMULA_MAX {
        return Err(Error::InvalidInput(format!(
            "defining formulas are only built for universes of at most {DEFINING_FORMULA_MAX} elements"
        )));
    }
    let w = |i: usize| Term::Var(format!("w{i}"));
    let mut layers: Vec<Vec<Formula>> = vec![Vec::new(); n];
    for (name, tuples) in m.relations() {
        let k = m.signature().relation_arity(name).unwrap_or(0);
        for t in crate::sigstruct::Tuples::new(n, k) {
            let atom = Formula::atom(name, t.iter().map(|&e| w(e)).collect());
            let lit = if tuples.contains(&t) {
                atom
            } else {
                atom.not()
            };
            layers[t.iter().copied().max().unwrap_or(0)].push(lit);
        }
    }
    for (name, f) in m.functions() {
        for (rank, &out) in f.table().iter().enumerate() {
            let args = tuple_unrank(n, f.arity(), rank);
            let top = args.iter().copied().chain([out]).max().unwrap_or(0);
            layers[top].push(Formula::eq(
                Term::app(name, args.iter().map(|&e| w(e)).collect()),
                w(out),
            ));
        }
    }
    for (i, layer) in layers.iter_mut().enumerate() {
        for j in 0..i {
            layer.insert(0, Formula::neq(w(j), w(i)));
        }
    }
    let cover = Formula::forall(
        "v",
        Formula::disj((0..n).map(|i| Formula::eq(Term::var("v"), w(i)))),
    );
    let placement = Formula::conj(
        representative
            .iter()
            .enumerate()
            .map(|(j, &e)| Formula::eq(Term::Var(format!("y{}", j + 1)), w(e))),
    );
    let mut body = cover.and(placement);
    for i in (0..n).rev() {
        let layer = std::mem::take(&mut layers[i]);
        body = Formula::exists(
            &format!("w{i}"),
            Formula::conj(layer.into_iter().chain([body])),
        );
    }
    Ok(body)
}

/// Checks that the emitted defining formula of each orbit of arity `k` defines it.
pub fn check_orbit_definability(sym: &Symmetry<'_>, k: usize) -> Result<bool> {
    let result: Vec<String> = (1..=k).map(|j| format!("y{j}")).collect();
    for orbit in sym.orbits(k)? {
        let f = orbit_defining_formula(sym.m, &orbit.representative)?;
        let ty = BlockType::new(Vec::new(), result.clone(), vec![f])?;
        if solution_set_with(sym.m, &ty, &[], sym.budget)? != orbit.members {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn automorphisms(m: &FiniteStructure, budget: &Budget) -> Result<AutomorphismGroup> {
    compute_automorphisms(m, budget)
}

pub fn orbit_of_tuple(m: &FiniteStructure, t: &[Element], budget: &Budget) -> Result<Orbit> {
    Symmetry::new(m, budget)?.orbit_of_tuple(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;

    fn permutations(n: usize) -> Vec<Permutation> {
        fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
            let n = used.len();
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for i in 0..n {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    go(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        go(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    /// Oracle: every permutation filtered by the automorphism test.
    fn brute_group(m: &FiniteStructure) -> Vec<Permutation> {
        permutations(m.size())
            .into_iter()
            .filter(|p| is_automorphism(m, p))
            .collect()
    }

    #[test]
    fn group_orders() {
        let b = Budget::default();
        assert_eq!(
            automorphisms(&fixtures::fix2(), &b).unwrap().order,
            BigUint::from(8u32)
        );
        assert_eq!(brute_group(&fixtures::fix2()).len(), 8);
        assert_eq!(
            automorphisms(&fixtures::fix3(), &b).unwrap().order,
            BigUint::from(2u32)
        );
        assert_eq!(brute_group(&fixtures::fix3()).len(), 2);
        let one = FiniteStructure::builder(1).build().unwrap();
        let g = automorphisms(&one, &b).unwrap();
        assert_eq!(g.order, BigUint::from(1u32));
        assert!(g.generators.is_empty());
    }

    #[test]
    fn large_symmetric_group_order() {
        let m = FiniteStructure::builder(30).build().unwrap();
        let g = automorphisms(&m, &Budget::default()).unwrap();
        let fact: BigUint = (1..=30u32).map(BigUint::from).product();
        assert_eq!(g.order, fact);
    }

    #[test]
    fn orders_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let m = crate::random::structure(&mut rng, 1..=6);
            let brute = brute_group(&m);
            let g = automorphisms(&m, &Budget::default()).unwrap();
            assert_eq!(
                g.order,
                BigUint::from(brute.len()),
                "{}",
                m.to_json_string()
            );
            for p in &g.generators {
                assert!(is_automorphism(&m, p));
            }
        }
    }

    #[test]
    fn orbit_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let s3 = Symmetry::new(&m3, &b).unwrap();
        assert_eq!(
            s3.orbit_of_tuple(&[1]).unwrap().members,
            Property::unary([1])
        );
        assert_eq!(
            s3.orbit_of_tuple(&[0]).unwrap().members,
            Property::unary([0, 2])
        );
        let m2 = fixtures::fix2();
        let s2 = Symmetry::new(&m2, &b).unwrap();
        let edges = s2.orbit_of_tuple(&[0, 1]).unwrap().members;
        assert_eq!(edges.tuples(), m2.relation("R").unwrap());
    }

    #[test]
    fn orbit_partition_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let m = crate::random::structure(&mut rng, 1..=5);
            let b = Budget::default();
            let sym = Symmetry::new(&m, &b).unwrap();
            let group = brute_group(&m);
            for k in 1..=2 {
                let part = sym.partition(k).unwrap();
                let total: usize = part.orbits.iter().map(|o| o.members.len()).sum();
                assert_eq!(total, m.size().pow(k as u32));
                for a in crate::sigstruct::Tuples::new(m.size(), k) {
                    for c in crate::sigstruct::Tuples::new(m.size(), k) {
                        let oracle = group.iter().any(|g| apply(g, &a) == c);
                        assert_eq!(part.label(m.size(), &a) == part.label(m.size(), &c), oracle);
                    }
                }
            }
        }
    }

    fn fx(m: &FiniteStructure, text: &str) -> BlockType {
        BlockType::parse(&[&["x"]], &["y"], &[text], m.signature()).unwrap()
    }

    #[test]
    fn canonical_trace_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let s3 = Symmetry::new(&m3, &b).unwrap();
        let phi = fx(&m3, "R(x,y)");
        let t = canonical_trace(&s3, &phi, &[vec![1]]).unwrap();
        assert_eq!(t.sets(), BTreeSet::from([&Property::unary([0, 2])]));
        let t = canonical_trace(&s3, &phi, &[vec![0]]).unwrap();
        assert_eq!(t.sets(), BTreeSet::from([&Property::unary([1])]));
        let m2 = fixtures::fix2();
        let s2 = Symmetry::new(&m2, &b).unwrap();
        let t = canonical_trace(&s2, &fx(&m2, "R(x,y)"), &[vec![0]]).unwrap();
        assert_eq!(t.sets(), BTreeSet::from([&Property::unary(0..4)]));
        let t = canonical_trace(&s2, &fx(&m2, "false"), &[vec![0]]).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn trace_over_properties_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let s3 = Symmetry::new(&m3, &b).unwrap();
        let phi = fx(&m3, "R(x,y)");
        let t = trace_over_properties(&s3, &phi, &[Property::unary([0, 1])]).unwrap();
        assert_eq!(
            t.sets(),
            BTreeSet::from([&Property::unary([1]), &Property::unary([0, 2])])
        );
        let single = trace_over_properties(&s3, &phi, &[Property::unary([1])]).unwrap();
        assert_eq!(single, canonical_trace(&s3, &phi, &[vec![1]]).unwrap());
        assert!(trace_over_properties(&s3, &phi, &[Property::empty(1)])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn weak_orthogonality_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let s3 = Symmetry::new(&m3, &b).unwrap();
        assert!(is_weakly_orthogonal(&s3, &[Property::unary([0, 2])]).unwrap());
        assert!(
            is_weakly_orthogonal(&s3, &[Property::unary([1]), Property::unary([0, 2])]).unwrap()
        );
        let m2 = fixtures::fix2();
        let s2 = Symmetry::new(&m2, &b).unwrap();
        let all = Property::unary(0..4);
        assert!(!is_weakly_orthogonal(&s2, &[all.clone(), all]).unwrap());
        assert!(matches!(
            is_weakly_orthogonal(&s3, &[Property::unary([0])]),
            Err(Error::NotAnOrbit(_))
        ));
    }

    #[test]
    fn superposition_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let s3 = Symmetry::new(&m3, &b).unwrap();
        let phi = fx(&m3, "R(x,y)");
        let psi = BlockType::parse(&[&["y"]], &["z"], &["R(y,z)"], m3.signature()).unwrap();
        let r = superposition_trace_check(&s3, &[phi], &psi, &[vec![0]]).unwrap();
        assert!(r.equal);
        assert_eq!(r.lhs.sets(), BTreeSet::from([&Property::unary([0, 2])]));

        let f = fx(&m3, "false");
        let r = superposition_trace_check(&s3, &[f], &psi, &[vec![0]]).unwrap();
        assert!(r.equal && r.lhs.is_empty() && r.rhs.is_empty());
    }

    #[test]
    fn superposition_of_operations_on_z4() {
        let b = Budget::default();
        let m = fixtures::fix4();
        let sym = Symmetry::new(&m, &b).unwrap();
        let sig = m.signature();
        let f1 = BlockType::parse(&[&["x1"], &["x2"]], &["y1"], &["add(x1,x2) = y1"], sig).unwrap();
        let f2 = BlockType::parse(&[&["x1"], &["x2"]], &["y2"], &["add(x1,x1) = y2"], sig).unwrap();
        let g = BlockType::parse(&[&["y1"], &["y2"]], &["z"], &["add(y1,y2) = z"], sig).unwrap();
        for a in 0..4 {
            for c in 0..4 {
                let r = superposition_trace_check(
                    &sym,
                    &[f1.clone(), f2.clone()],
                    &g,
                    &[vec![a], vec![c]],
                )
                .unwrap();
                assert!(r.equal);
                // oracle: compose the tables by modular arithmetic
                let value = ((a + c) + (a + a)) % 4;
                let sup = build_superposition_type(&[f1.clone(), f2.clone()], &g).unwrap();
                let sol = crate::eval::solution_set(&m, &sup, &[vec![a], vec![c]]).unwrap();
                assert_eq!(sol, Property::unary([value]));
                assert_eq!(r.lhs.len(), 1);
                assert!(r.lhs.family[0].members.contains(&[value]));
            }
        }
    }

    #[test]
    fn superposition_needs_conjunction_closed_types() {
        // y = x and y != x each have a witness separately but never jointly.
        let b = Budget::default();
        let m = fixtures::fix3();
        let sym = Symmetry::new(&m, &b).unwrap();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["y = x", "y != x"], m.signature()).unwrap();
        let psi = BlockType::parse(&[&["y"]], &["z"], &["z = z"], m.signature()).unwrap();
        let r = superposition_trace_check(&sym, &[phi], &psi, &[vec![0]]).unwrap();
        assert!(!r.equal);
        assert!(r.rhs.is_empty());
        assert!(!r.only_lhs.is_empty());
    }

    #[test]
    fn cardinality_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let s3 = Symmetry::new(&m3, &b).unwrap();
        let c = trace_cardinality(&s3, &fx(&m3, "R(x,y)"), &[vec![1]]).unwrap();
        assert_eq!((c.count, c.is_singleton), (1, true));
        let t = BlockType::parse(&[], &["y"], &["y = y"], m3.signature()).unwrap();
        let c = trace_cardinality(&s3, &t, &[]).unwrap();
        assert_eq!((c.count, c.is_singleton), (2, false));
        let c = trace_cardinality(&s3, &fx(&m3, "false"), &[vec![0]]).unwrap();
        assert_eq!((c.count, c.is_singleton), (0, false));
    }

    #[test]
    fn orbits_are_definable() {
        let b = Budget::default();
        for m in fixtures::all_structures() {
            let sym = Symmetry::new(&m, &b).unwrap();
            assert!(check_orbit_definability(&sym, 1).unwrap());
            assert!(check_orbit_definability(&sym, 2).unwrap());
        }
    }

    /// One vertex `a` with neighbours {2}, one vertex `b` with neighbour {3}
    /// where only 3 carries a loop: equal-type test fails.
    #[test]
    fn traces_of_different_types() {
        let b = Budget::default();
        let loops = FiniteStructure::builder(4)
            .relation("R", 2, vec![vec![0, 2], vec![1, 3], vec![3, 3]])
            .build()
            .unwrap();
        let sym = Symmetry::new(&loops, &b).unwrap();
        let phi = fx(&loops, "R(x,y)");
        let ta = canonical_trace(&sym, &phi, &[vec![0]]).unwrap();
        let tb = canonical_trace(&sym, &phi, &[vec![1]]).unwrap();
        assert!(!sym.same_orbit(&[0], &[1]).unwrap());
        assert_ne!(ta.sets(), tb.sets());

        // a and b share their single neighbour d: traces coincide.
        let shared = FiniteStructure::builder(4)
            .relation("R", 2, vec![vec![0, 2], vec![1, 2], vec![1, 3]])
            .build()
            .unwrap();
        let sym = Symmetry::new(&shared, &b).unwrap();
        let phi = BlockType::parse(
            &[&["x"]],
            &["y"],
            &["R(x,y) & exists u. (R(u,y) & u != x)"],
            shared.signature(),
        )
        .unwrap();
        let ta = canonical_trace(&sym, &phi, &[vec![0]]).unwrap();
        let tb = canonical_trace(&sym, &phi, &[vec![1]]).unwrap();
        assert!(!sym.same_orbit(&[0], &[1]).unwrap());
        assert_eq!(ta.len(), 1);
        assert_eq!(ta.sets(), tb.sets());
    }
}
