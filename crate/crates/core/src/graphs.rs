//! Graph properties read off preservation: partitions into independent sets,
//! emptiness, components, subdivisions and distances.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::eval::TypeEvaluator;
use crate::logic::{BlockType, Formula, Term};
use crate::preserve::{check_preservation, PreservationMode};
use crate::sigstruct::{complement_property, Element, FiniteStructure, NamedPartition, Property};

pub const MAX_PATH_LENGTH: usize = 64;
const EDGE: &str = "R";

/// A structure over one binary relation `R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    structure: FiniteStructure,
    directed: bool,
}

impl Graph {
    pub fn new(structure: FiniteStructure, directed: bool) -> Result<Self> {
        let sig = structure.signature();
        if sig.relation_arity(EDGE) != Some(2) {
            return Err(Error::InvalidGraph("expected a binary relation `R`".into()));
        }
        if sig.functions().next().is_some() || sig.relations().count() != 1 {
            return Err(Error::InvalidGraph(
                "the signature must consist of `R` alone".into(),
            ));
        }
        let r = structure.relation(EDGE).expect("checked");
        if !directed {
            if let Some(t) = r.iter().find(|t| !r.contains(&vec![t[1], t[0]])) {
                return Err(Error::InvalidGraph(format!(
                    "undirected graph with arc ({},{}) but not ({},{})",
                    t[0], t[1], t[1], t[0]
                )));
            }
        }
        Ok(Graph {
            structure,
            directed,
        })
    }

    pub fn undirected(n: usize, edges: &[(Element, Element)]) -> Result<Self> {
        let tuples = edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]);
        Graph::new(
            FiniteStructure::builder(n)
                .relation(EDGE, 2, tuples)
                .build()?,
            false,
        )
    }

    pub fn directed(n: usize, arcs: &[(Element, Element)]) -> Result<Self> {
        let tuples = arcs.iter().map(|&(a, b)| vec![a, b]);
        Graph::new(
            FiniteStructure::builder(n)
                .relation(EDGE, 2, tuples)
                .build()?,
            true,
        )
    }

    pub fn structure(&self) -> &FiniteStructure {
        &self.structure
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn size(&self) -> usize {
        self.structure.size()
    }

    pub fn has_arc(&self, a: Element, b: Element) -> bool {
        self.arcs().contains(&vec![a, b])
    }

    fn arcs(&self) -> &BTreeSet<Vec<Element>> {
        self.structure.relation(EDGE).expect("graph relation")
    }

    /// Neighbours in either direction.
    pub fn adjacent(&self, a: Element) -> BTreeSet<Element> {
        self.arcs()
            .iter()
            .filter_map(|t| {
                if t[0] == a {
                    Some(t[1])
                } else if t[1] == a {
                    Some(t[0])
                } else {
                    None
                }
            })
            .collect()
    }

    fn successors(&self) -> Vec<Vec<Element>> {
        let mut out = vec![Vec::new(); self.size()];
        for t in self.arcs() {
            out[t[0]].push(t[1]);
        }
        out
    }

    pub fn has_loops(&self) -> bool {
        self.arcs().iter().any(|t| t[0] == t[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PathVariant {
    WalkExact,
    PathExact,
    AtMost,
    DistExact,
}

impl std::str::FromStr for PathVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "walkExact" | "walk-exact" | "walk" => Ok(PathVariant::WalkExact),
            "pathExact" | "path-exact" | "path" => Ok(PathVariant::PathExact),
            "atMost" | "at-most" => Ok(PathVariant::AtMost),
            "distExact" | "dist-exact" | "dist" => Ok(PathVariant::DistExact),
            _ => Err(Error::InvalidInput(format!("unknown path variant `{s}`"))),
        }
    }
}

fn step(u: &Term, v: &Term, directed: bool) -> Formula {
    let forward = Formula::atom(EDGE, vec![u.clone(), v.clone()]);
    if directed {
        forward
    } else {
        forward.or(Formula::atom(EDGE, vec![v.clone(), u.clone()]))
    }
}

fn chain(n: usize, directed: bool, distinct: bool) -> Formula {
    let x = Term::var("x");
    let y = Term::var("y");
    let z = |i: usize| Term::Var(format!("z{i}"));
    let node = |i: usize| if i == 0 { x.clone() } else { z(i) };
    let mut body = step(&node(n - 1), &y, directed);
    for i in (1..n).rev() {
        let mut parts = Vec::new();
        if distinct {
            parts.push(Formula::neq(z(i), x.clone()));
            parts.extend((1..i).map(|j| Formula::neq(z(i), z(j))));
            parts.push(Formula::neq(z(i), y.clone()));
        }
        parts.push(step(&node(i - 1), &z(i), directed));
        parts.push(body);
        body = Formula::exists(&format!("z{i}"), Formula::conj(parts));
    }
    if distinct && n >= 1 {
        body = Formula::neq(x, y).and(body);
    }
    body
}

fn at_most(n: usize, directed: bool) -> Formula {
    if n == 0 {
        return Formula::eq(Term::var("x"), Term::var("y"));
    }
    Formula::disj((1..=n).map(|m| chain(m, directed, false)))
}

/// A formula in `x`, `y` expressing a walk, simple path or distance condition of length `n`.
pub fn path_formula(n: usize, variant: PathVariant, directed: bool) -> Result<Formula> {
    if n == 0 || n > MAX_PATH_LENGTH {
        return Err(Error::InvalidInput(format!(
            "path length must lie in 1..={MAX_PATH_LENGTH}, found {n}"
        )));
    }
    Ok(match variant {
        PathVariant::WalkExact => chain(n, directed, false),
        PathVariant::PathExact => chain(n, directed, true),
        PathVariant::AtMost => at_most(n, directed),
        PathVariant::DistExact => {
            let within = if n == 1 {
                at_most(0, directed)
            } else {
                at_most(0, directed).or(at_most(n - 1, directed))
            };
            at_most(n, directed).and(within.not())
        }
    })
}

fn binary_type(f: Formula) -> BlockType {
    BlockType::new(vec![vec!["x".into()]], vec!["y".into()], vec![f]).expect("x,y type")
}

fn symmetric_step_type() -> BlockType {
    binary_type(step(&Term::var("x"), &Term::var("y"), false))
}

/// `R(x,y)` is `(P_i, complement P_i)`-totally-preserving for every block.
pub fn check_partition(graph: &Graph, partition: &NamedPartition, budget: &Budget) -> Result<bool> {
    let m = graph.structure();
    let ty = binary_type(Formula::atom(EDGE, vec![Term::var("x"), Term::var("y")]));
    for i in 0..partition.len() {
        let p = partition.block_property(i);
        p.check_within(m.size())?;
        let q = complement_property(m, &p)?;
        if !check_preservation(m, &ty, &[p], &q, PreservationMode::TotallyPreserved, budget)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Direct oracle: no arc joins two vertices of one block.
pub fn blocks_independent(graph: &Graph, partition: &NamedPartition) -> bool {
    let labels = partition.labels(graph.size());
    graph.arcs().iter().all(|t| labels[t[0]] != labels[t[1]])
}

/// A partition into at most `k` independent blocks, by exact backtracking.
pub fn find_k_partition(
    graph: &Graph,
    k: usize,
    budget: &Budget,
) -> Result<Option<NamedPartition>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if graph.has_loops() {
        return Ok(None);
    }
    let n = graph.size();
    let adj: Vec<BTreeSet<Element>> = (0..n).map(|v| graph.adjacent(v)).collect();
    let mut order: Vec<Element> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(adj[v].len()), v));
    let mut colors = vec![usize::MAX; n];
    let mut steps = 0u64;
    let limit = budget.limit().saturating_sub(budget.spent());

    fn go(
        i: usize,
        used: usize,
        k: usize,
        order: &[Element],
        adj: &[BTreeSet<Element>],
        colors: &mut [usize],
        steps: &mut u64,
        limit: u64,
    ) -> Result<bool> {
        if i == order.len() {
            return Ok(true);
        }
        let v = order[i];
        for c in 0..k.min(used + 1) {
            *steps += 1;
            if *steps > limit {
                return Err(Error::BudgetExceeded {
                    estimate: *steps as u128,
                    limit,
                });
            }
            if adj[v].iter().all(|&u| colors[u] != c) {
                colors[v] = c;
                if go(i + 1, used.max(c + 1), k, order, adj, colors, steps, limit)? {
                    return Ok(true);
                }
                colors[v] = usize::MAX;
            }
        }
        Ok(false)
    }

    let found = go(0, 0, k, &order, &adj, &mut colors, &mut steps, limit)?;
    budget.charge(steps);
    Ok(found.then(|| NamedPartition::from_labels(&colors)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Empty,
    Complete,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmptinessReport {
    pub verdict: Density,
    pub direct: Density,
    pub via_total: Density,
    pub via_disjoint: Density,
}

impl EmptinessReport {
    pub fn agree(&self) -> bool {
        self.direct == self.verdict
            && self.via_total == self.verdict
            && self.via_disjoint == self.verdict
    }
}

pub fn emptiness_completeness(graph: &Graph, budget: &Budget) -> Result<EmptinessReport> {
    let m = graph.structure();
    let n = m.size();
    let classify = |empty: bool, complete: bool| match (empty, complete) {
        (true, _) => Density::Empty,
        (_, true) => Density::Complete,
        _ => Density::Neither,
    };
    let arcs = graph.arcs().len();
    let direct = classify(arcs == 0, arcs == n * n);
    let r = Formula::atom(EDGE, vec![Term::var("x"), Term::var("y")]);
    let has = binary_type(r.clone());
    let lacks = binary_type(r.not());
    let all = [m.universe()];
    let none = Property::empty(1);
    let whole = m.universe();
    let total = |ty: &BlockType| {
        check_preservation(
            m,
            ty,
            &all,
            &none,
            PreservationMode::TotallyPreserved,
            budget,
        )
    };
    let disjoint = |ty: &BlockType| {
        check_preservation(
            m,
            ty,
            &all,
            &whole,
            PreservationMode::TotallyDisjoint,
            budget,
        )
    };
    let via_total = classify(total(&has)?, total(&lacks)?);
    let via_disjoint = classify(disjoint(&has)?, disjoint(&lacks)?);
    Ok(EmptinessReport {
        verdict: direct,
        direct,
        via_total,
        via_disjoint,
    })
}

/// Weakly connected components, ordered by least vertex.
pub fn components(graph: &Graph) -> Vec<Property> {
    let n = graph.size();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = BTreeSet::from([s]);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for u in graph.adjacent(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.insert(u);
                    queue.push_back(u);
                }
            }
        }
        out.push(Property::unary(comp));
    }
    out
}

pub fn is_connected(graph: &Graph) -> bool {
    components(graph).len() == 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentVerdict {
    pub is_union_of_components: bool,
    pub via_preservation: bool,
    /// Total preservation under `ψ_n(x,y) ∨ ψ_n(y,x)` for the listed `n`.
    pub via_bounded_paths: BTreeMap<usize, bool>,
}

impl ComponentVerdict {
    pub fn agree(&self) -> bool {
        self.is_union_of_components == self.via_preservation
            && self
                .via_bounded_paths
                .values()
                .all(|&v| v == self.is_union_of_components)
    }
}

fn swap_xy(f: &Formula) -> Formula {
    let map = BTreeMap::from([
        ("x".to_string(), Term::var("y")),
        ("y".to_string(), Term::var("x")),
    ]);
    f.substitute(&map)
}

/// Total preservation of `P` under `ψ_n(x,y) ∨ ψ_n(y,x)`.
pub fn preserved_under_bounded_paths(
    graph: &Graph,
    p: &Property,
    n: usize,
    budget: &Budget,
) -> Result<bool> {
    let psi = path_formula(n, PathVariant::AtMost, graph.is_directed())?;
    let ty = binary_type(psi.clone().or(swap_xy(&psi)));
    check_preservation(
        graph.structure(),
        &ty,
        &[p.clone()],
        p,
        PreservationMode::TotallyPreserved,
        budget,
    )
}

pub fn component_analysis(
    graph: &Graph,
    p: &Property,
    budget: &Budget,
) -> Result<ComponentVerdict> {
    let m = graph.structure();
    if p.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "expected a unary property, found arity {}",
            p.arity()
        )));
    }
    p.check_within(m.size())?;
    if p.is_empty() {
        return Err(Error::EmptyProperty(
            "component analysis needs a nonempty property".into(),
        ));
    }
    let is_union_of_components = graph
        .arcs()
        .iter()
        .all(|t| p.contains(&[t[0]]) == p.contains(&[t[1]]));
    let ty = symmetric_step_type();
    let via_preservation = check_preservation(
        m,
        &ty,
        &[p.clone()],
        p,
        PreservationMode::TotallyPreserved,
        budget,
    )?;
    let mut via_bounded_paths = BTreeMap::new();
    for n in [1, 2, m.size()] {
        if n >= 1 && n <= MAX_PATH_LENGTH && !via_bounded_paths.contains_key(&n) {
            via_bounded_paths.insert(n, preserved_under_bounded_paths(graph, p, n, budget)?);
        }
    }
    Ok(ComponentVerdict {
        is_union_of_components,
        via_preservation,
        via_bounded_paths,
    })
}

/// Least superset of `seeds` closed under the solution sets of `ty` at its own elements.
fn closure(
    m: &FiniteStructure,
    ty: &BlockType,
    seeds: &[Element],
    budget: &Budget,
) -> Result<Property> {
    let mut ev = TypeEvaluator::new(m, ty, budget)?;
    ev.admit(m.size() as u128)?;
    let mut set: BTreeSet<Element> = seeds.iter().copied().collect();
    let mut queue: VecDeque<Element> = set.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for e in ev.solution_set(&[vec![v]])?.elements() {
            if set.insert(e) {
                queue.push_back(e);
            }
        }
    }
    Ok(Property::unary(set))
}

/// Minimal nonempty sets totally preserved under `R(x,y) ∨ R(y,x)`: the
/// preserved closures of single vertices.
pub fn minimal_preserved_sets(graph: &Graph, budget: &Budget) -> Result<Vec<Property>> {
    let m = graph.structure();
    let ty = symmetric_step_type();
    let mut covered = vec![false; m.size()];
    let mut out = Vec::new();
    for v in 0..m.size() {
        if covered[v] {
            continue;
        }
        let c = closure(m, &ty, &[v], budget)?;
        for e in c.elements() {
            covered[e] = true;
        }
        out.push(c);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subdivision {
    pub graph: Graph,
    /// The original vertices followed by the intermediate layers `M_1,…,M_{n-1}`.
    pub layers: Vec<Property>,
    pub layers_preserved: bool,
}

/// Replaces every edge by a fresh simple path of `n` edges. `M_d` holds the
/// intermediates at distance `d` from one endpoint of their path.
pub fn subdivide(graph: &Graph, n: usize, budget: &Budget) -> Result<Subdivision> {
    if graph.is_directed() {
        return Err(Error::InvalidGraph(
            "subdivision needs an undirected graph".into(),
        ));
    }
    if graph.has_loops() {
        return Err(Error::InvalidGraph(
            "subdivision needs a loopless graph".into(),
        ));
    }
    if !(2..=MAX_PATH_LENGTH).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "subdivision length must lie in 2..={MAX_PATH_LENGTH}, found {n}"
        )));
    }
    let size = graph.size();
    let edges: Vec<(Element, Element)> = graph
        .arcs()
        .iter()
        .filter(|t| t[0] < t[1])
        .map(|t| (t[0], t[1]))
        .collect();
    let mut next = size;
    let mut new_edges = Vec::new();
    let mut layers: Vec<BTreeSet<Element>> = vec![BTreeSet::new(); n];
    layers[0] = (0..size).collect();
    for &(a, b) in &edges {
        let mut prev = a;
        for d in 1..n {
            let v = next;
            next += 1;
            new_edges.push((prev, v));
            layers[d].insert(v);
            layers[n - d].insert(v);
            prev = v;
        }
        new_edges.push((prev, b));
    }
    if edges.is_empty() {
        layers.truncate(1);
    }
    let sub = Graph::undirected(next, &new_edges)?;
    let layers: Vec<Property> = layers.into_iter().map(Property::unary).collect();
    let ty = binary_type(path_formula(n, PathVariant::PathExact, false)?);
    let mut layers_preserved = true;
    for l in &layers {
        layers_preserved &= check_preservation(
            sub.structure(),
            &ty,
            &[l.clone()],
            l,
            PreservationMode::TotallyPreserved,
            budget,
        )?;
    }
    Ok(Subdivision {
        graph: sub,
        layers,
        layers_preserved,
    })
}

/// Closure of each seed under the solutions of the length-`n` simple-path formula.
pub fn reconstruct_components(
    graph: &Graph,
    seeds: &[Element],
    n: usize,
    budget: &Budget,
) -> Result<Vec<Property>> {
    if let Some(s) = seeds.iter().find(|&&s| s >= graph.size()) {
        return Err(Error::InvalidInput(format!(
            "seed {s} lies outside the universe"
        )));
    }
    let ty = binary_type(path_formula(n, PathVariant::PathExact, false)?);
    seeds
        .iter()
        .map(|&s| closure(graph.structure(), &ty, &[s], budget))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceReport {
    /// For each `n` in `1..=|M|`, the least vertex with some vertex at distance exactly `n`.
    pub witnesses: BTreeMap<usize, Option<Element>>,
    pub diameter: usize,
    pub diameter_from_witnesses: usize,
}

fn bfs_distances(graph: &Graph, source: Element) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.size()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("visited");
        for u in graph.adjacent(v) {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Largest shortest-path distance, or `None` for a disconnected graph.
pub fn diameter(graph: &Graph) -> Option<usize> {
    let mut best = 0;
    for s in 0..graph.size() {
        for d in bfs_distances(graph, s) {
            best = best.max(d?);
        }
    }
    Some(best)
}

pub fn distance_witnesses(graph: &Graph, budget: &Budget) -> Result<DistanceReport> {
    let diameter = diameter(graph).ok_or(Error::Disconnected)?;
    let m = graph.structure();
    let all = m.universe();
    let mut witnesses = BTreeMap::new();
    for n in 1..=m.size().min(MAX_PATH_LENGTH) {
        let ty = binary_type(path_formula(n, PathVariant::DistExact, false)?);
        let mut ev = TypeEvaluator::new(m, &ty, budget)?;
        ev.admit(m.size() as u128)?;
        let mut found = None;
        for a in 0..m.size() {
            if ev.solution_set(&[vec![a]])?.intersects(&all) {
                found = Some(a);
                break;
            }
        }
        witnesses.insert(n, found);
    }
    let diameter_from_witnesses = witnesses
        .iter()
        .filter(|(_, w)| w.is_some())
        .map(|(&n, _)| n)
        .max()
        .unwrap_or(0);
    Ok(DistanceReport {
        witnesses,
        diameter,
        diameter_from_witnesses,
    })
}

/// Endpoints of walks of length exactly `n` from `a`, stepping along arcs in either direction.
pub fn neighbourhood(graph: &Graph, a: Element, n: usize) -> Result<Property> {
    if a >= graph.size() {
        return Err(Error::InvalidInput(format!(
            "vertex {a} lies outside the universe"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput(
            "neighbourhood length must be at least 1".into(),
        ));
    }
    let mut frontier = BTreeSet::from([a]);
    for _ in 0..n {
        frontier = frontier.iter().flat_map(|&v| graph.adjacent(v)).collect();
    }
    Ok(Property::unary(frontier))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathReach {
    pub partial_via_preservation: bool,
    pub partial_via_reach: bool,
    pub total_via_preservation: bool,
    pub total_via_reach: bool,
}

impl PathReach {
    pub fn agree(&self) -> bool {
        self.partial_via_preservation == self.partial_via_reach
            && self.total_via_preservation == self.total_via_reach
    }
}

/// `ψ_n` preservation from `{a}` into `P` against the vertices reached in `1..=n` steps.
pub fn path_reach(
    graph: &Graph,
    a: Element,
    p: &Property,
    n: usize,
    budget: &Budget,
) -> Result<PathReach> {
    let m = graph.structure();
    let ty = binary_type(path_formula(n, PathVariant::AtMost, false)?);
    let single = [Property::unary([a])];
    let mut reached = Property::empty(1);
    for k in 1..=n {
        reached = reached.union(&neighbourhood(graph, a, k)?);
    }
    Ok(PathReach {
        partial_via_preservation: check_preservation(
            m,
            &ty,
            &single,
            p,
            PreservationMode::ExistsPartiallyPreserved,
            budget,
        )?,
        partial_via_reach: reached.intersects(p),
        total_via_preservation: check_preservation(
            m,
            &ty,
            &single,
            p,
            PreservationMode::TotallyPreserved,
            budget,
        )?,
        total_via_reach: reached.is_subset(p),
    })
}

/// Strongly connected components by Tarjan's algorithm, ordered by least vertex.
pub fn strong_components(graph: &Graph) -> Vec<Property> {
    struct Tarjan<'a> {
        succ: &'a [Vec<Element>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<Element>,
        next: usize,
        out: Vec<BTreeSet<Element>>,
    }

    impl Tarjan<'_> {
        fn visit(&mut self, v: Element) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for i in 0..self.succ[v].len() {
                let u = self.succ[v][i];
                match self.index[u] {
                    None => {
                        self.visit(u);
                        self.low[v] = self.low[v].min(self.low[u]);
                    }
                    Some(iu) if self.on_stack[u] => self.low[v] = self.low[v].min(iu),
                    _ => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut comp = BTreeSet::new();
                loop {
                    let u = self.stack.pop().expect("nonempty stack");
                    self.on_stack[u] = false;
                    comp.insert(u);
                    if u == v {
                        break;
                    }
                }
                self.out.push(comp);
            }
        }
    }

    let succ = graph.successors();
    let n = graph.size();
    let mut t = Tarjan {
        succ: &succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    let mut out: Vec<Property> = t.out.into_iter().map(Property::unary).collect();
    out.sort_by_key(|p| p.elements().next());
    out
}

/// Minimal nonempty sets totally preserved under `ψ_n(x,y) ∧ ψ_n(y,x)` with directed steps.
pub fn mutual_reach_sets(graph: &Graph, n: usize, budget: &Budget) -> Result<Vec<Property>> {
    let psi = path_formula(n, PathVariant::AtMost, true)?;
    let ty = binary_type(psi.clone().and(swap_xy(&psi)));
    let m = graph.structure();
    let mut covered = vec![false; m.size()];
    let mut out = Vec::new();
    for v in 0..m.size() {
        if !covered[v] {
            let c = closure(m, &ty, &[v], budget)?;
            for e in c.elements() {
                covered[e] = true;
            }
            out.push(c);
        }
    }
    Ok(out)
}
