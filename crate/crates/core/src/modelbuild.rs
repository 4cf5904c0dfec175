//! Canonical models of finite ground Henkin theories and the Tarski-Vaught
//! test over explicit formula suites.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::is_subuniverse;
use crate::budget::{pow_sat, Budget};
use crate::error::{Error, Result};
use crate::eval::{eval_formula_with, Assignment, TypeEvaluator};
use crate::logic::{parse_formula_inferring, BlockType, Formula, FormulaSuite, Term};
use crate::preserve::{check_preservation, product_size, ParameterProduct, PreservationMode};
use crate::sigstruct::{
    is_identifier, Element, FiniteStructure, Property, Signature, Tuple, Tuples,
};

/// A finite set of sentences over constants `C` and a finite signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTheory {
    signature: Signature,
    constants: Vec<String>,
    sentences: Vec<Formula>,
    depth: usize,
}

impl GroundTheory {
    pub fn new(
        signature: Signature,
        constants: Vec<String>,
        sentences: Vec<Formula>,
        depth: usize,
    ) -> Result<Self> {
        if constants.is_empty() {
            return Err(Error::InvalidInput(
                "a ground theory needs at least one constant".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for c in &constants {
            if !seen.insert(c) {
                return Err(Error::validation(c, "constant declared twice"));
            }
            if signature.function_arity(c) != Some(0) {
                return Err(Error::validation(c, "constant missing from the signature"));
            }
        }
        if let Some(c) = signature
            .constants()
            .find(|c| !seen.contains(&c.to_string()))
        {
            return Err(Error::validation(
                c,
                "constant symbol not declared as a theory constant",
            ));
        }
        for s in &sentences {
            if let Some(v) = s.free_vars().into_iter().next() {
                return Err(Error::InvalidInput(format!(
                    "sentence `{s}` has the free variable `{v}`"
                )));
            }
            if ground_term_depth(s) > depth {
                return Err(Error::InvalidInput(format!(
                    "sentence `{s}` uses terms deeper than the declared depth {depth}"
                )));
            }
        }
        Ok(GroundTheory {
            signature,
            constants,
            sentences,
            depth,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn sentences(&self) -> &[Formula] {
        &self.sentences
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn to_json_string(&self) -> String {
        let file = TheoryFile {
            constants: self.constants.clone(),
            sentences: self.sentences.iter().map(Formula::to_string).collect(),
            depth: self.depth,
            functions: self
                .signature
                .functions()
                .filter(|(_, k)| *k > 0)
                .map(|(f, k)| (f.to_string(), k))
                .collect(),
            relations: self
                .signature
                .relations()
                .map(|(r, k)| (r.to_string(), k))
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializes");
        s.push('\n');
        s
    }
}

fn ground_term_depth(f: &Formula) -> usize {
    let mut depth = 0;
    f.visit(&mut |g| match g {
        Formula::Atom(_, ts) => depth = ts.iter().map(Term::depth).fold(depth, usize::max),
        Formula::Eq(a, b) => depth = depth.max(a.depth()).max(b.depth()),
        _ => {}
    });
    depth
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TheoryFile {
    constants: Vec<String>,
    sentences: Vec<String>,
    #[serde(default = "default_depth")]
    depth: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    functions: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    relations: BTreeMap<String, usize>,
}

fn default_depth() -> usize {
    1
}

/// Reads `{"constants": […], "sentences": […], "depth": d}`; symbols not
/// declared under `functions`/`relations` are inferred from their use.
pub fn load_theory(text: &str) -> Result<GroundTheory> {
    let file: TheoryFile = serde_json::from_str(text)?;
    let mut sig = Signature::new();
    for c in &file.constants {
        if !is_identifier(c) {
            return Err(Error::validation(c, "not a valid identifier"));
        }
        sig.add_function(c, 0)?;
    }
    for (f, &k) in &file.functions {
        if k == 0 {
            return Err(Error::validation(f, "declare constants under `constants`"));
        }
        sig.add_function(f, k)?;
    }
    for (r, &k) in &file.relations {
        sig.add_relation(r, k)?;
    }
    let constants: BTreeSet<String> = file.constants.iter().cloned().collect();
    let sentences = file
        .sentences
        .iter()
        .map(|s| parse_formula_inferring(s, &constants, &mut sig))
        .collect::<Result<Vec<_>>>()?;
    GroundTheory::new(sig, file.constants, sentences, file.depth)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalModel {
    pub structure: FiniteStructure,
    /// The element `[c]` of every constant.
    pub class_map: BTreeMap<String, Element>,
    pub classes: Vec<Vec<String>>,
    /// Existential sentences of the theory paired with a constant witnessing them inside it.
    pub henkin_witnesses: Vec<(String, Option<String>)>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn conjuncts(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        Formula::True => {}
        _ => out.push(f.clone()),
    }
}

struct Diagram {
    equalities: Vec<(usize, usize)>,
    disequalities: Vec<(usize, usize)>,
    equations: Vec<(String, Vec<usize>, usize)>,
    positive: Vec<(String, Vec<usize>)>,
    negative: Vec<(String, Vec<usize>)>,
}

/// The canonical model: constants modulo the equations of `T`, with functions
/// and relations read off the flat ground literals.
pub fn build_canonical_model(t: &GroundTheory, budget: &Budget) -> Result<CanonicalModel> {
    let index: BTreeMap<&str, usize> = t
        .constants
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let constant = |term: &Term| match term {
        Term::App(c, args) if args.is_empty() => index.get(c.as_str()).copied(),
        _ => None,
    };
    let flat_args = |args: &[Term]| args.iter().map(constant).collect::<Option<Vec<usize>>>();

    let mut literals = Vec::new();
    for s in &t.sentences {
        conjuncts(s, &mut literals);
    }
    let mut d = Diagram {
        equalities: Vec::new(),
        disequalities: Vec::new(),
        equations: Vec::new(),
        positive: Vec::new(),
        negative: Vec::new(),
    };
    for lit in &literals {
        match lit {
            Formula::Eq(a, b) => match (constant(a), constant(b), a, b) {
                (Some(x), Some(y), _, _) => d.equalities.push((x, y)),
                (_, Some(y), Term::App(f, args), _) | (Some(y), _, _, Term::App(f, args)) => {
                    if let Some(cs) = flat_args(args) {
                        d.equations.push((f.clone(), cs, y));
                    }
                }
                _ => {}
            },
            Formula::Atom(r, args) => {
                if let Some(cs) = flat_args(args) {
                    d.positive.push((r.clone(), cs));
                }
            }
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Eq(a, b) => {
                    if let (Some(x), Some(y)) = (constant(a), constant(b)) {
                        d.disequalities.push((x, y));
                    }
                }
                Formula::Atom(r, args) => {
                    if let Some(cs) = flat_args(args) {
                        d.negative.push((r.clone(), cs));
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }

    let k = t.constants.len();
    let mut uf = UnionFind((0..k).collect());
    for &(a, b) in &d.equalities {
        uf.union(a, b);
    }
    loop {
        let mut changed = false;
        let mut values: BTreeMap<(String, Vec<usize>), usize> = BTreeMap::new();
        for (f, args, v) in &d.equations {
            let key = (f.clone(), args.iter().map(|&a| uf.find(a)).collect());
            match values.get(&key) {
                Some(&w) => changed |= uf.union(w, *v),
                None => {
                    values.insert(key, *v);
                }
            }
        }
        if !changed {
            break;
        }
    }
    for &(a, b) in &d.disequalities {
        if uf.find(a) == uf.find(b) {
            return Err(Error::Inconsistent(format!(
                "`{} != {}` contradicts the equations",
                t.constants[a], t.constants[b]
            )));
        }
    }

    // Classes are numbered by their first constant in declaration order.
    let mut class_of_root = BTreeMap::new();
    let mut classes: Vec<Vec<String>> = Vec::new();
    let mut element = vec![0; k];
    for c in 0..k {
        let root = uf.find(c);
        let id = *class_of_root.entry(root).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[id].push(t.constants[c].clone());
        element[c] = id;
    }
    let n = classes.len();
    let name = |e: Element| classes[e][0].clone();
    let render = |f: &str, args: &[Element]| {
        if args.is_empty() {
            f.to_string()
        } else {
            format!(
                "{f}({})",
                args.iter().map(|&a| name(a)).collect::<Vec<_>>().join(",")
            )
        }
    };

    for a in 0..n {
        for b in a + 1..n {
            let decided = d.disequalities.iter().any(|&(x, y)| {
                (element[x], element[y]) == (a, b) || (element[x], element[y]) == (b, a)
            });
            if !decided {
                return Err(Error::NotHenkinComplete(format!(
                    "{} = {}",
                    name(a),
                    name(b)
                )));
            }
        }
    }

    let work: u128 = t
        .signature
        .functions()
        .map(|(_, ar)| pow_sat(n, ar))
        .chain(t.signature.relations().map(|(_, ar)| pow_sat(n, ar)))
        .fold(0u128, |a, b| a.saturating_add(b));
    budget.admit(work)?;

    let mut builder = FiniteStructure::builder(n);
    for (f, ar) in t.signature.functions() {
        if ar == 0 {
            builder = builder.constant(f, element[index[f]]);
            continue;
        }
        let mut table_map: BTreeMap<Vec<Element>, Element> = BTreeMap::new();
        for (g, args, v) in &d.equations {
            if g == f && args.len() == ar {
                let key: Vec<Element> = args.iter().map(|&a| element[a]).collect();
                table_map.insert(key, element[*v]);
            }
        }
        let mut table = Vec::with_capacity(n.pow(ar as u32));
        for args in Tuples::new(n, ar) {
            match table_map.get(&args) {
                Some(&v) => table.push(v),
                None => return Err(Error::NotHenkinComplete(render(f, &args))),
            }
        }
        builder = builder.function(f, ar, table);
    }
    for (r, ar) in t.signature.relations() {
        let lift = |lits: &[(String, Vec<usize>)]| -> BTreeSet<Tuple> {
            lits.iter()
                .filter(|(s, args)| s == r && args.len() == ar)
                .map(|(_, args)| args.iter().map(|&a| element[a]).collect())
                .collect()
        };
        let pos = lift(&d.positive);
        let neg = lift(&d.negative);
        if let Some(tp) = pos.intersection(&neg).next() {
            return Err(Error::Inconsistent(format!(
                "both {} and its negation hold",
                render(r, tp)
            )));
        }
        if let Some(tp) = Tuples::new(n, ar).find(|tp| !pos.contains(tp) && !neg.contains(tp)) {
            return Err(Error::NotHenkinComplete(render(r, &tp)));
        }
        builder = builder.relation(r, ar, pos);
    }
    let structure = builder.build()?;
    budget.charge(work.min(u64::MAX as u128) as u64);

    for s in &t.sentences {
        if !eval_formula_with(&structure, s, &Assignment::new(), budget)? {
            return Err(Error::Inconsistent(format!(
                "the canonical model refutes `{s}`"
            )));
        }
    }

    let literal_set: BTreeSet<&Formula> = literals.iter().collect();
    let mut henkin_witnesses = Vec::new();
    for s in &literals {
        if let Formula::Exists(v, body) = s {
            let witness = t.constants.iter().find(|c| {
                let map = BTreeMap::from([(v.clone(), Term::constant(c))]);
                let mut parts = Vec::new();
                conjuncts(&body.substitute(&map), &mut parts);
                parts.iter().all(|p| literal_set.contains(p))
            });
            henkin_witnesses.push((s.to_string(), witness.cloned()));
        }
    }

    let class_map = t
        .constants
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), element[i]))
        .collect();
    Ok(CanonicalModel {
        structure,
        class_map,
        classes,
        henkin_witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreservingInstance {
    pub formula: usize,
    pub constants: Vec<String>,
    /// The class of a constant satisfying the formula at these parameters.
    pub witness: Option<String>,
    pub preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreservingReport {
    pub instances: Vec<PreservingInstance>,
    pub skipped: usize,
    pub violations: usize,
}

/// For every suite formula and constant tuple with `M ⊨ ∃x φ([c̄],x)`, checks
/// that `φ` is ∃-partially `({[c1]},…,{[cn]},M)`-preserving and names a witnessing constant.
pub fn check_preserving_condition(
    model: &CanonicalModel,
    theory: &GroundTheory,
    suite: &FormulaSuite,
    budget: &Budget,
) -> Result<PreservingReport> {
    let m = &model.structure;
    let consts = theory.constants();
    let everything = m.universe();
    let mut instances = Vec::new();
    let mut skipped = 0;
    for (fi, ty) in suite.entries().iter().enumerate() {
        let width = ty.parameter_vars().len();
        budget.admit(pow_sat(consts.len(), width))?;
        let mut ev = TypeEvaluator::new(m, ty, budget)?;
        ev.admit(pow_sat(consts.len(), width))?;
        for choice in Tuples::new(consts.len(), width) {
            let flat: Vec<Element> = choice
                .iter()
                .map(|&i| model.class_map[&consts[i]])
                .collect();
            let sol = ev.solution_set_flat(&flat);
            if sol.is_empty() {
                skipped += 1;
                continue;
            }
            let mut params = Vec::new();
            let mut rest = flat.as_slice();
            for len in ty.block_lengths() {
                let (head, tail) = rest.split_at(len);
                params.push(Property::singleton(head.to_vec()));
                rest = tail;
            }
            let preserved = check_preservation(
                m,
                ty,
                &params,
                &everything,
                PreservationMode::ExistsPartiallyPreserved,
                budget,
            )?;
            let witness = consts
                .iter()
                .find(|c| sol.contains(&[model.class_map[*c]]))
                .cloned();
            instances.push(PreservingInstance {
                formula: fi,
                constants: choice.iter().map(|&i| consts[i].clone()).collect(),
                preserved: preserved && witness.is_some(),
                witness,
            });
        }
    }
    let violations = instances.iter().filter(|i| !i.preserved).count();
    Ok(PreservingReport {
        instances,
        skipped,
        violations,
    })
}

/// Atomic formulas `R(…,x,…)` and `f(x1,…,xk) = x` plus `x = x1`, with parameters `x1,…`.
pub fn default_henkin_suite(signature: &Signature) -> Result<FormulaSuite> {
    let xi = |i: usize| Term::Var(format!("x{i}"));
    let x = Term::var("x");
    let mut entries = Vec::new();
    let single =
        |k: usize| -> Vec<Vec<String>> { (1..=k).map(|i| vec![format!("x{i}")]).collect() };
    for (r, k) in signature.relations() {
        for pos in 0..k {
            let args = (0..k)
                .map(|j| match j.cmp(&pos) {
                    std::cmp::Ordering::Less => xi(j + 1),
                    std::cmp::Ordering::Equal => x.clone(),
                    std::cmp::Ordering::Greater => xi(j),
                })
                .collect();
            entries.push(BlockType::new(
                single(k - 1),
                vec!["x".into()],
                vec![Formula::atom(r, args)],
            )?);
        }
    }
    for (f, k) in signature.functions().filter(|(_, k)| *k > 0) {
        let lhs = Term::app(f, (1..=k).map(xi).collect());
        entries.push(BlockType::new(
            single(k),
            vec!["x".into()],
            vec![Formula::eq(lhs, x.clone())],
        )?);
    }
    entries.push(BlockType::new(
        single(1),
        vec!["x".into()],
        vec![Formula::eq(x.clone(), xi(1))],
    )?);
    entries.push(BlockType::new(
        single(1),
        vec!["x".into()],
        vec![Formula::neq(x, xi(1))],
    )?);
    FormulaSuite::new(entries)
}

/// A subuniverse `N` of `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstructureEmbedding {
    big: FiniteStructure,
    small: Property,
}

impl SubstructureEmbedding {
    pub fn new(big: FiniteStructure, small: Property, budget: &Budget) -> Result<Self> {
        let verdict = is_subuniverse(&big, &small, budget).map_err(|e| match e {
            Error::EmptyProperty(_) => {
                Error::NotSubstructure("the substructure universe is empty".into())
            }
            other => other,
        })?;
        if !verdict.via_direct {
            return Err(Error::NotSubstructure(format!(
                "{small} is not closed under the functions and constants"
            )));
        }
        Ok(SubstructureEmbedding { big, small })
    }

    pub fn big(&self) -> &FiniteStructure {
        &self.big
    }

    pub fn small(&self) -> &Property {
        &self.small
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TvVerdict {
    Disjoint,
    Preserving,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TvInstance {
    pub formula: usize,
    pub params: Vec<Tuple>,
    pub verdict: TvVerdict,
    /// Exactly one of the three classes held.
    pub exclusive: bool,
    /// The single-conjunction form of the entry got the same verdict.
    pub conjunction_agrees: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TvSummary {
    pub disjoint: usize,
    pub preserving: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TvReport {
    pub instances: Vec<TvInstance>,
    pub per_formula: Vec<TvSummary>,
    pub pass: bool,
    pub exclusive: bool,
    pub conjunction_coherent: bool,
}

fn classify(
    m: &FiniteStructure,
    ty: &BlockType,
    params: &[Tuple],
    n: &Property,
    budget: &Budget,
) -> Result<(TvVerdict, bool)> {
    let singles: Vec<Property> = params.iter().cloned().map(Property::singleton).collect();
    let disjoint = check_preservation(
        m,
        ty,
        &singles,
        &m.universe(),
        PreservationMode::ExistentiallyDisjoint,
        budget,
    )?;
    let preserving = check_preservation(
        m,
        ty,
        &singles,
        n,
        PreservationMode::ExistsPartiallyPreserved,
        budget,
    )?;
    let somewhere = check_preservation(
        m,
        ty,
        &singles,
        &m.universe(),
        PreservationMode::ExistsPartiallyPreserved,
        budget,
    )?;
    let fail = somewhere && !preserving;
    let verdict = match (disjoint, preserving) {
        (true, _) => TvVerdict::Disjoint,
        (_, true) => TvVerdict::Preserving,
        _ => TvVerdict::Fail,
    };
    let held = [disjoint, preserving, fail].iter().filter(|&&b| b).count();
    Ok((verdict, held == 1))
}

/// Classifies every suite formula at every parameter tuple from `N`,
/// evaluating in `M`.
pub fn tarski_vaught_test(
    e: &SubstructureEmbedding,
    suite: &FormulaSuite,
    budget: &Budget,
) -> Result<TvReport> {
    let m = &e.big;
    let small: Vec<Element> = e.small.elements().collect();
    let mut instances = Vec::new();
    let mut per_formula = Vec::new();
    for (fi, ty) in suite.entries().iter().enumerate() {
        let pools: Vec<Property> = ty
            .block_lengths()
            .into_iter()
            .map(|len| {
                let tuples = Tuples::new(small.len(), len)
                    .map(|idx| idx.iter().map(|&i| small[i]).collect());
                Property::new(len, tuples).expect("uniform arity")
            })
            .collect();
        let count = product_size(&pools);
        TypeEvaluator::new(m, ty, budget)?.admit(count.saturating_mul(6))?;
        let conj = ty.conjunction();
        let mut summary = TvSummary::default();
        for params in ParameterProduct::new(&pools) {
            let (verdict, exclusive) = classify(m, ty, &params, &e.small, budget)?;
            let conjunction_agrees = if ty.formulas().len() > 1 {
                classify(m, &conj, &params, &e.small, budget)?.0 == verdict
            } else {
                true
            };
            match verdict {
                TvVerdict::Disjoint => summary.disjoint += 1,
                TvVerdict::Preserving => summary.preserving += 1,
                TvVerdict::Fail => summary.fail += 1,
            }
            instances.push(TvInstance {
                formula: fi,
                params,
                verdict,
                exclusive,
                conjunction_agrees,
            });
        }
        per_formula.push(summary);
    }
    Ok(TvReport {
        pass: per_formula.iter().all(|s| s.fail == 0),
        exclusive: instances.iter().all(|i| i.exclusive),
        conjunction_coherent: instances.iter().all(|i| i.conjunction_agrees),
        instances,
        per_formula,
    })
}

/// `φ_j(x1,…,xj,y) = ⋀_{i≤j} y ≠ x_i` for `j = 1…k`.
pub fn counting_suite(k: usize) -> Result<FormulaSuite> {
    if k == 0 {
        return Err(Error::InvalidInput("the counting suite needs k ≥ 1".into()));
    }
    let entries = (1..=k)
        .map(|j| {
            let f = Formula::conj(
                (1..=j).map(|i| Formula::neq(Term::var("y"), Term::Var(format!("x{i}")))),
            );
            let params = (1..=j).map(|i| vec![format!("x{i}")]).collect();
            BlockType::new(params, vec!["y".into()], vec![f])
        })
        .collect::<Result<Vec<_>>>()?;
    FormulaSuite::new(entries)
}

/// Every quantifier-free formula over `vars` (at most two) built from atoms
/// by at most `depth` (at most two) rounds of `¬`, `∧`, `∨`. Atoms use
/// variables, constants and one function application.
pub fn quantifier_free_formulas(
    signature: &Signature,
    vars: &[&str],
    depth: usize,
) -> Result<Vec<Formula>> {
    if vars.len() > 2 || depth > 2 {
        return Err(Error::InvalidInput(
            "quantifier-free enumeration is limited to two variables and depth two".into(),
        ));
    }
    let mut base: Vec<Term> = vars.iter().map(|v| Term::var(v)).collect();
    base.extend(signature.constants().map(Term::constant));
    let mut terms = base.clone();
    for (f, k) in signature.functions().filter(|(_, k)| *k > 0) {
        for args in Tuples::new(base.len(), k) {
            terms.push(Term::app(
                f,
                args.iter().map(|&i| base[i].clone()).collect(),
            ));
        }
    }
    let mut atoms = BTreeSet::new();
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            atoms.insert(Formula::eq(terms[i].clone(), terms[j].clone()));
        }
    }
    for (r, k) in signature.relations() {
        for args in Tuples::new(base.len(), k) {
            atoms.insert(Formula::atom(
                r,
                args.iter().map(|&i| base[i].clone()).collect(),
            ));
        }
    }
    let mut level: BTreeSet<Formula> = atoms;
    for _ in 0..depth {
        let prev: Vec<Formula> = level.iter().cloned().collect();
        for a in &prev {
            level.insert(a.clone().not());
            for b in &prev {
                level.insert(a.clone().and(b.clone()));
                level.insert(a.clone().or(b.clone()));
            }
        }
    }
    Ok(level.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;

    fn theory(constants: &[&str], sentences: &[&str]) -> Result<GroundTheory> {
        let file = serde_json::json!({ "constants": constants, "sentences": sentences });
        load_theory(&file.to_string())
    }

    #[test]
    fn canonical_model_examples() {
        let b = Budget::default();
        let t = theory(
            &["a", "b"],
            &["a != b", "R(a,b)", "!R(b,a)", "!R(a,a)", "!R(b,b)"],
        )
        .unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        assert_eq!(cm.structure.size(), 2);
        assert_eq!(
            cm.structure.relation("R").unwrap(),
            &BTreeSet::from([vec![0, 1]])
        );
        assert_eq!(
            cm.class_map,
            BTreeMap::from([("a".into(), 0), ("b".into(), 1)])
        );

        let t = theory(&["a", "b"], &["a = b", "R(a,b)"]).unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        assert_eq!(cm.structure.size(), 1);
        assert_eq!(
            cm.structure.relation("R").unwrap(),
            &BTreeSet::from([vec![0, 0]])
        );
        assert_eq!(cm.classes, vec![vec!["a".to_string(), "b".to_string()]]);

        let t = theory(
            &["a", "b", "c"],
            &[
                "f(a) = b", "f(b) = c", "f(c) = a", "a != b", "a != c", "b != c",
            ],
        )
        .unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        assert_eq!(cm.structure.function("f").unwrap().table(), &[1, 2, 0]);
    }

    #[test]
    fn canonical_model_errors() {
        let b = Budget::default();
        let t = theory(&["a", "b"], &["a != b", "f(a) = b"]).unwrap();
        assert_eq!(
            build_canonical_model(&t, &b),
            Err(Error::NotHenkinComplete("f(b)".into()))
        );
        let t = theory(&["a", "b"], &["a = b", "a != b"]).unwrap();
        assert!(matches!(
            build_canonical_model(&t, &b),
            Err(Error::Inconsistent(_))
        ));
        let t = theory(
            &["a", "b", "c"],
            &[
                "f(a) = b", "f(a) = c", "a != c", "b != c", "a != b", "f(b)=a", "f(c)=a",
            ],
        )
        .unwrap();
        assert!(matches!(
            build_canonical_model(&t, &b),
            Err(Error::Inconsistent(_))
        ));
        let t = theory(&["a", "b"], &["a != b", "R(a)"]).unwrap();
        assert_eq!(
            build_canonical_model(&t, &b),
            Err(Error::NotHenkinComplete("R(b)".into()))
        );
        let t = theory(&["a"], &["R(a)", "forall x. !R(x)"]).unwrap();
        assert!(matches!(
            build_canonical_model(&t, &b),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            theory(&["a"], &["R(x)"]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            theory(&["a"], &["f(f(a)) = a", "f(a) = a"]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn congruence_closure_merges_values() {
        let b = Budget::default();
        let t = theory(
            &["a", "b", "c"],
            &["a = b", "f(a) = a", "f(b) = c", "f(c) = c"],
        )
        .unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        assert_eq!(cm.structure.size(), 1);
    }

    #[test]
    fn henkin_witnesses_are_found() {
        let b = Budget::default();
        let t = theory(
            &["a", "b"],
            &[
                "a != b",
                "R(a,b)",
                "!R(b,a)",
                "!R(a,a)",
                "!R(b,b)",
                "exists y. R(a,y)",
            ],
        )
        .unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        assert_eq!(
            cm.henkin_witnesses,
            vec![("exists y. R(a,y)".into(), Some("b".into()))]
        );
    }

    #[test]
    fn preserving_condition_examples() {
        let b = Budget::default();
        let t = theory(
            &["a", "b"],
            &["a != b", "R(a,b)", "!R(b,a)", "!R(a,a)", "!R(b,b)"],
        )
        .unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        let suite = crate::logic::load_suite(
            r#"[{"parameterBlocks":[["x1"]],"resultBlock":["x"],"formulas":["R(x1,x)"]}]"#,
            cm.structure.signature(),
        )
        .unwrap();
        let r = check_preserving_condition(&cm, &t, &suite, &b).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.instances.len(), 1);
        assert_eq!(r.instances[0].witness.as_deref(), Some("b"));
        assert_eq!(r.skipped, 1);

        let t = theory(&["a", "b"], &["a = b", "R(a,b)"]).unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        let suite = crate::logic::load_suite(
            r#"[{"parameterBlocks":[["x1"]],"resultBlock":["x"],"formulas":["!(x = x1)"]}]"#,
            cm.structure.signature(),
        )
        .unwrap();
        let r = check_preserving_condition(&cm, &t, &suite, &b).unwrap();
        assert!(r.instances.is_empty());
        assert_eq!(r.skipped, 2);

        let t = theory(
            &["a", "b", "c"],
            &[
                "f(a) = b", "f(b) = c", "f(c) = a", "a != b", "a != c", "b != c",
            ],
        )
        .unwrap();
        let cm = build_canonical_model(&t, &b).unwrap();
        let suite = default_henkin_suite(cm.structure.signature()).unwrap();
        let r = check_preserving_condition(&cm, &t, &suite, &b).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r
            .instances
            .iter()
            .any(|i| i.constants == ["a"] && i.witness.as_deref() == Some("b")));
    }

    #[test]
    fn random_theories_have_canonical_models() {
        let b = Budget::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let (t, hidden) = crate::random::henkin_theory(&mut rng, 5);
            let cm = build_canonical_model(&t, &b).unwrap();
            assert_eq!(cm.structure.size(), hidden.size());
            for (c, &e) in &cm.class_map {
                for (d, &f) in &cm.class_map {
                    assert_eq!(e == f, hidden.constant(c) == hidden.constant(d));
                }
            }
            let suite = default_henkin_suite(cm.structure.signature()).unwrap();
            assert_eq!(
                check_preserving_condition(&cm, &t, &suite, &b)
                    .unwrap()
                    .violations,
                0
            );
            let text = t.to_json_string();
            assert_eq!(load_theory(&text).unwrap(), t);
        }
    }

    #[test]
    fn tv_examples() {
        let b = Budget::default();
        let m = FiniteStructure::builder(3).build().unwrap();
        let e = SubstructureEmbedding::new(m.clone(), Property::unary([0, 1]), &b).unwrap();
        let ty = BlockType::parse(
            &[&["x1"], &["x2"]],
            &["y"],
            &["y != x1 & y != x2"],
            m.signature(),
        )
        .unwrap();
        let suite = FormulaSuite::new(vec![ty]).unwrap();
        let r = tarski_vaught_test(&e, &suite, &b).unwrap();
        let at = |p: &[Tuple]| r.instances.iter().find(|i| i.params == p).unwrap().verdict;
        assert_eq!(at(&[vec![0], vec![1]]), TvVerdict::Fail);
        assert!(!r.pass && r.exclusive);

        let e = SubstructureEmbedding::new(m.clone(), m.universe(), &b).unwrap();
        let r = tarski_vaught_test(&e, &counting_suite(3).unwrap(), &b).unwrap();
        assert!(r.pass && r.exclusive);
        assert!(r.instances.iter().all(|i| i.verdict != TvVerdict::Fail));

        let z4 = fixtures::fix4();
        let e = SubstructureEmbedding::new(z4.clone(), Property::unary([0, 2]), &b).unwrap();
        let ty = BlockType::parse(
            &[&["x1"], &["x2"]],
            &["y"],
            &["add(x1,x2) = y"],
            z4.signature(),
        )
        .unwrap();
        let r = tarski_vaught_test(&e, &FormulaSuite::new(vec![ty]).unwrap(), &b).unwrap();
        assert!(r
            .instances
            .iter()
            .all(|i| i.verdict == TvVerdict::Preserving));
        assert_eq!(r.instances.len(), 4);

        assert!(matches!(
            SubstructureEmbedding::new(z4, Property::unary([0, 1]), &b),
            Err(Error::NotSubstructure(_))
        ));
    }

    #[test]
    fn counting_suite_shape() {
        let s = counting_suite(1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.entries()[0].formulas()[0].to_string(), "y != x1");
        assert_eq!(counting_suite(2).unwrap().len(), 2);
        assert!(counting_suite(0).is_err());
    }

    #[test]
    fn counting_suite_rejects_proper_substructures() {
        let b = Budget::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        for _ in 0..15 {
            let m = crate::random::structure(&mut rng, 1..=5);
            let n = m.size();
            for mask in 1u32..(1 << n) - 1 {
                let p = Property::unary((0..n).filter(|i| mask >> i & 1 == 1));
                let Ok(e) = SubstructureEmbedding::new(m.clone(), p.clone(), &b) else {
                    continue;
                };
                let r = tarski_vaught_test(&e, &counting_suite(p.len()).unwrap(), &b).unwrap();
                assert!(!r.pass && r.exclusive);
                assert!(r.per_formula[p.len() - 1].fail > 0);
            }
        }
    }

    #[test]
    fn multi_formula_entries_agree_with_conjunction() {
        let b = Budget::default();
        let m = fixtures::fix3();
        let e = SubstructureEmbedding::new(m.clone(), Property::unary([0, 1]), &b).unwrap();
        let ty =
            BlockType::parse(&[&["x1"]], &["y"], &["R(x1,y)", "y != x1"], m.signature()).unwrap();
        let r = tarski_vaught_test(&e, &FormulaSuite::new(vec![ty]).unwrap(), &b).unwrap();
        assert!(r.conjunction_coherent && r.exclusive);
        let at = |a: usize| {
            r.instances
                .iter()
                .find(|i| i.params == [vec![a]])
                .unwrap()
                .verdict
        };
        assert_eq!(at(0), TvVerdict::Preserving);
        assert_eq!(at(1), TvVerdict::Preserving);
    }

    #[test]
    fn quantifier_free_enumeration() {
        let sig = fixtures::fix3().signature().clone();
        let depth0 = quantifier_free_formulas(&sig, &["x", "y"], 0).unwrap();
        assert_eq!(depth0.len(), 1 + 4);
        let depth1 = quantifier_free_formulas(&sig, &["x", "y"], 1).unwrap();
        assert_eq!(depth1.len(), 5 + 5 + 2 * 25);
        assert!(depth1.iter().all(|f| f.is_quantifier_free()));
        assert!(quantifier_free_formulas(&sig, &["x", "y", "z"], 1).is_err());
    }

    #[test]
    fn tv_on_quantifier_free_suites() {
        let b = Budget::default();
        let m = fixtures::fix3();
        let e = SubstructureEmbedding::new(m.clone(), Property::unary([0, 1]), &b).unwrap();
        let formulas = quantifier_free_formulas(m.signature(), &["x1", "y"], 2).unwrap();
        let entries = formulas
            .into_iter()
            .filter(|f| f.free_vars().contains("y"))
            .map(|f| BlockType::new(vec![vec!["x1".into()]], vec!["y".into()], vec![f]))
            .collect::<Result<Vec<_>>>()
            .unwrap();
        let r = tarski_vaught_test(&e, &FormulaSuite::new(entries).unwrap(), &b).unwrap();
        assert!(r.exclusive);
        assert!(!r.pass);
    }
}
