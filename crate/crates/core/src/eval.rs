//! Brute-force evaluation of formulas and types over finite structures.
//!
//! Formulas are compiled into a small arena where every variable occupies a
//! slot of a flat environment. Quantifier nodes cache their verdict keyed by
//! the values of their free variables, so nested existential chains stay
//! polynomial.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::budget::{pow_sat, Budget};
use crate::error::{Error, Result};
use crate::logic::{BlockType, Formula, Term};
use crate::sigstruct::{tuple_rank, Element, FiniteStructure, Property, Tuple, Tuples};

pub type Assignment = BTreeMap<String, Element>;

const DENSE_LIMIT: u128 = 1 << 24;
const MEMO_LIMIT: u128 = 1 << 20;

enum RelRep {
    Dense(Vec<u64>),
    Sparse(HashSet<Tuple>),
}

enum CTerm {
    Slot(usize),
    App(usize, Vec<CTerm>),
}

enum Node {
    True,
    False,
    Atom(usize, Vec<CTerm>),
    Eq(CTerm, CTerm),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Iff(usize, usize),
    Quant {
        exists: bool,
        slot: usize,
        body: usize,
        free: Vec<usize>,
        memo: bool,
    },
}

struct Program<'m> {
    n: usize,
    tables: Vec<&'m [Element]>,
    relations: Vec<RelRep>,
    nodes: Vec<Node>,
    slots: usize,
}

struct Compiler<'m, 'p> {
    m: &'m FiniteStructure,
    prog: &'p mut Program<'m>,
    fn_index: BTreeMap<String, usize>,
    rel_index: BTreeMap<String, usize>,
}

impl<'m> Compiler<'m, '_> {
    fn function(&mut self, name: &str) -> Result<usize> {
        if let Some(&i) = self.fn_index.get(name) {
            return Ok(i);
        }
        let table = self
            .m
            .function(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        let i = self.prog.tables.len();
        self.prog.tables.push(table.table());
        self.fn_index.insert(name.to_string(), i);
        Ok(i)
    }

    fn relation(&mut self, name: &str, arity: usize) -> Result<usize> {
        if let Some(&i) = self.rel_index.get(name) {
            return Ok(i);
        }
        let declared = self
            .m
            .signature()
            .relation_arity(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        if declared != arity {
            return Err(Error::Arity {
                symbol: name.to_string(),
                expected: declared,
                found: arity,
            });
        }
        let tuples = self.m.relation(name).expect("declared relation");
        let n = self.m.size();
        let rep = if pow_sat(n, arity) <= DENSE_LIMIT {
            let mut bits = vec![0u64; n.pow(arity as u32).div_ceil(64)];
            for t in tuples {
                let r = tuple_rank(n, t);
                bits[r / 64] |= 1 << (r % 64);
            }
            RelRep::Dense(bits)
        } else {
            RelRep::Sparse(tuples.iter().cloned().collect())
        };
        let i = self.prog.relations.len();
        self.prog.relations.push(rep);
        self.rel_index.insert(name.to_string(), i);
        Ok(i)
    }

    fn lookup(scope: &[(String, usize)], name: &str) -> Result<usize> {
        scope
            .iter()
            .rev()
            .find(|(v, _)| v == name)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::MissingAssignment(name.to_string()))
    }

    fn term(
        &mut self,
        t: &Term,
        scope: &[(String, usize)],
        used: &mut BTreeSet<usize>,
    ) -> Result<CTerm> {
        match t {
            Term::Var(v) => {
                let s = Self::lookup(scope, v)?;
                used.insert(s);
                Ok(CTerm::Slot(s))
            }
            Term::App(f, args) => {
                let i = self.function(f)?;
                let expected = self.m.function(f).map(|t| t.arity()).unwrap_or(0);
                if expected != args.len() {
                    return Err(Error::Arity {
                        symbol: f.clone(),
                        expected,
                        found: args.len(),
                    });
                }
                let args = args
                    .iter()
                    .map(|a| self.term(a, scope, used))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CTerm::App(i, args))
            }
        }
    }

    fn push(&mut self, node: Node) -> usize {
        self.prog.nodes.push(node);
        self.prog.nodes.len() - 1
    }

    fn formula(
        &mut self,
        f: &Formula,
        scope: &mut Vec<(String, usize)>,
        used: &mut BTreeSet<usize>,
    ) -> Result<usize> {
        let node = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(r, args) => {
                let i = self.relation(r, args.len())?;
                let args = args
                    .iter()
                    .map(|a| self.term(a, scope, used))
                    .collect::<Result<Vec<_>>>()?;
                Node::Atom(i, args)
            }
            Formula::Eq(a, b) => Node::Eq(self.term(a, scope, used)?, self.term(b, scope, used)?),
            Formula::Not(a) => Node::Not(self.formula(a, scope, used)?),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                let l = self.formula(a, scope, used)?;
                let r = self.formula(b, scope, used)?;
                match f {
                    Formula::And(..) => Node::And(l, r),
                    Formula::Or(..) => Node::Or(l, r),
                    Formula::Implies(..) => Node::Implies(l, r),
                    _ => Node::Iff(l, r),
                }
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let slot = self.prog.slots;
                self.prog.slots += 1;
                scope.push((v.clone(), slot));
                let mut inner = BTreeSet::new();
                let body = self.formula(body, scope, &mut inner);
                scope.pop();
                let body = body?;
                inner.remove(&slot);
                let free: Vec<usize> = inner.iter().copied().collect();
                used.extend(inner);
                let memo = pow_sat(self.prog.n, free.len()) <= MEMO_LIMIT;
                Node::Quant {
                    exists: matches!(f, Formula::Exists(..)),
                    slot,
                    body,
                    free,
                    memo,
                }
            }
        };
        Ok(self.push(node))
    }
}

struct State {
    memos: HashMap<usize, HashMap<u64, bool>>,
    steps: u64,
}

impl Program<'_> {
    fn term(&self, t: &CTerm, env: &[usize]) -> usize {
        match t {
            CTerm::Slot(s) => env[*s],
            CTerm::App(f, args) => {
                let rank = args
                    .iter()
                    .fold(0, |acc, a| acc * self.n + self.term(a, env));
                self.tables[*f][rank]
            }
        }
    }

    fn eval(&self, st: &mut State, id: usize, env: &mut [usize]) -> bool {
        st.steps += 1;
        match &self.nodes[id] {
            Node::True => true,
            Node::False => false,
            Node::Atom(r, args) => match &self.relations[*r] {
                RelRep::Dense(bits) => {
                    let rank = args
                        .iter()
                        .fold(0, |acc, a| acc * self.n + self.term(a, env));
                    bits[rank / 64] >> (rank % 64) & 1 == 1
                }
                RelRep::Sparse(set) => {
                    let t: Tuple = args.iter().map(|a| self.term(a, env)).collect();
                    set.contains(&t)
                }
            },
            Node::Eq(a, b) => self.term(a, env) == self.term(b, env),
            Node::Not(a) => !self.eval(st, *a, env),
            Node::And(a, b) => self.eval(st, *a, env) && self.eval(st, *b, env),
            Node::Or(a, b) => self.eval(st, *a, env) || self.eval(st, *b, env),
            Node::Implies(a, b) => !self.eval(st, *a, env) || self.eval(st, *b, env),
            Node::Iff(a, b) => self.eval(st, *a, env) == self.eval(st, *b, env),
            Node::Quant {
                exists,
                slot,
                body,
                free,
                memo,
            } => {
                let key = if *memo {
                    let key = free
                        .iter()
                        .fold(0u64, |acc, &s| acc * self.n as u64 + env[s] as u64);
                    if let Some(&v) = st.memos.get(&id).and_then(|m| m.get(&key)) {
                        return v;
                    }
                    Some(key)
                } else {
                    None
                };
                let saved = env[*slot];
                let mut result = !*exists;
                for v in 0..self.n {
                    env[*slot] = v;
                    if self.eval(st, *body, env) == *exists {
                        result = *exists;
                        break;
                    }
                }
                env[*slot] = saved;
                if let Some(key) = key {
                    st.memos.entry(id).or_default().insert(key, result);
                }
                result
            }
        }
    }

    fn term_cost(t: &CTerm) -> u128 {
        match t {
            CTerm::Slot(_) => 1,
            CTerm::App(_, args) => 1 + args.iter().map(Self::term_cost).sum::<u128>(),
        }
    }

    /// Upper bound on node visits when `id` is entered `calls` times.
    fn estimate(&self, id: usize, calls: u128) -> u128 {
        let child = |c: usize, k: u128| self.estimate(c, k);
        match &self.nodes[id] {
            Node::True | Node::False => calls,
            Node::Atom(_, args) => {
                calls.saturating_mul(1 + args.iter().map(Self::term_cost).sum::<u128>())
            }
            Node::Eq(a, b) => calls.saturating_mul(1 + Self::term_cost(a) + Self::term_cost(b)),
            Node::Not(a) => calls.saturating_add(child(*a, calls)),
            Node::And(a, b) | Node::Or(a, b) | Node::Implies(a, b) | Node::Iff(a, b) => calls
                .saturating_add(child(*a, calls))
                .saturating_add(child(*b, calls)),
            Node::Quant {
                body, free, memo, ..
            } => {
                let distinct = if *memo {
                    calls.min(pow_sat(self.n, free.len()))
                } else {
                    calls
                };
                calls.saturating_add(child(*body, distinct.saturating_mul(self.n as u128)))
            }
        }
    }
}

/// A compiled block type ready for repeated solution-set queries.
pub struct TypeEvaluator<'m> {
    m: &'m FiniteStructure,
    ty: BlockType,
    prog: Program<'m>,
    roots: Vec<usize>,
    state: State,
    env: Vec<usize>,
    budget: &'m Budget,
    charged: u64,
}

impl<'m> TypeEvaluator<'m> {
    pub fn new(m: &'m FiniteStructure, ty: &BlockType, budget: &'m Budget) -> Result<Self> {
        let vars = ty.block_vars();
        let (prog, roots) = compile(m, ty.formulas(), &vars)?;
        let env = vec![0; prog.slots];
        Ok(TypeEvaluator {
            m,
            ty: ty.clone(),
            prog,
            roots,
            state: State {
                memos: HashMap::new(),
                steps: 0,
            },
            env,
            budget,
            charged: 0,
        })
    }

    pub fn block_type(&self) -> &BlockType {
        &self.ty
    }

    pub fn structure(&self) -> &FiniteStructure {
        self.m
    }

    /// Estimated work for `tuples` parameter tuples, each sweeping `M^m`.
    pub fn estimate(&self, tuples: u128) -> u128 {
        let calls = tuples.saturating_mul(pow_sat(self.m.size(), self.ty.m()));
        self.roots.iter().fold(calls, |acc, &r| {
            acc.saturating_add(self.prog.estimate(r, calls))
        })
    }

    /// Refuses to proceed when the estimate for `tuples` parameter tuples is over budget.
    pub fn admit(&self, tuples: u128) -> Result<()> {
        self.budget.admit(self.estimate(tuples))
    }

    pub fn steps(&self) -> u64 {
        self.state.steps
    }

    fn settle(&mut self) {
        let delta = self.state.steps - self.charged;
        self.budget.charge(delta);
        self.charged = self.state.steps;
    }

    /// Checks block lengths and ranges and returns the flattened parameters.
    pub fn flatten_params(&self, params: &[Tuple]) -> Result<Vec<Element>> {
        let lengths = self.ty.block_lengths();
        if params.len() != lengths.len() {
            return Err(Error::BlockMismatch(format!(
                "expected {} parameter blocks, found {}",
                lengths.len(),
                params.len()
            )));
        }
        for (i, (p, &k)) in params.iter().zip(&lengths).enumerate() {
            if p.len() != k {
                return Err(Error::BlockMismatch(format!(
                    "parameter block {i} has length {k}, found a tuple of length {}",
                    p.len()
                )));
            }
        }
        let flat: Vec<Element> = params.iter().flatten().copied().collect();
        if let Some(e) = flat.iter().find(|&&e| e >= self.m.size()) {
            return Err(Error::InvalidInput(format!(
                "parameter {e} lies outside the universe"
            )));
        }
        Ok(flat)
    }

    /// Whether every formula holds at the flattened parameters and result tuple.
    pub fn holds_flat(&mut self, flat: &[Element], result: &[Element]) -> bool {
        let p = flat.len();
        self.env[..p].copy_from_slice(flat);
        self.env[p..p + result.len()].copy_from_slice(result);
        let ok = self
            .roots
            .iter()
            .all(|&r| self.prog.eval(&mut self.state, r, &mut self.env));
        self.settle();
        ok
    }

    pub fn solution_set_flat(&mut self, flat: &[Element]) -> Property {
        let p = flat.len();
        let m = self.ty.m();
        self.env[..p].copy_from_slice(flat);
        let mut out = BTreeSet::new();
        for b in Tuples::new(self.m.size(), m) {
            self.env[p..p + m].copy_from_slice(&b);
            let ok = self
                .roots
                .iter()
                .all(|&r| self.prog.eval(&mut self.state, r, &mut self.env));
            if ok {
                out.insert(b);
            }
        }
        self.settle();
        Property::from_set(m, out)
    }

    pub fn solution_set(&mut self, params: &[Tuple]) -> Result<Property> {
        let flat = self.flatten_params(params)?;
        Ok(self.solution_set_flat(&flat))
    }
}

fn compile<'m>(
    m: &'m FiniteStructure,
    formulas: &[Formula],
    vars: &[String],
) -> Result<(Program<'m>, Vec<usize>)> {
    let mut prog = Program {
        n: m.size(),
        tables: Vec::new(),
        relations: Vec::new(),
        nodes: Vec::new(),
        slots: vars.len(),
    };
    let mut compiler = Compiler {
        m,
        prog: &mut prog,
        fn_index: BTreeMap::new(),
        rel_index: BTreeMap::new(),
    };
    let mut roots = Vec::with_capacity(formulas.len());
    for f in formulas {
        let mut scope: Vec<(String, usize)> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        roots.push(compiler.formula(f, &mut scope, &mut BTreeSet::new())?);
    }
    Ok((prog, roots))
}

/// Tarski semantics with the default budget. `a` may assign extra variables.
pub fn eval_formula(m: &FiniteStructure, phi: &Formula, a: &Assignment) -> Result<bool> {
    eval_formula_with(m, phi, a, &Budget::default())
}

pub fn eval_formula_with(
    m: &FiniteStructure,
    phi: &Formula,
    a: &Assignment,
    budget: &Budget,
) -> Result<bool> {
    let free: Vec<String> = phi.free_vars().into_iter().collect();
    let mut values = Vec::with_capacity(free.len());
    for v in &free {
        let e = *a
            .get(v)
            .ok_or_else(|| Error::MissingAssignment(v.clone()))?;
        if e >= m.size() {
            return Err(Error::InvalidInput(format!(
                "`{v}` is assigned {e}, outside the universe"
            )));
        }
        values.push(e);
    }
    let (prog, roots) = compile(m, std::slice::from_ref(phi), &free)?;
    budget.admit(prog.estimate(roots[0], 1))?;
    let mut env = vec![0; prog.slots];
    env[..values.len()].copy_from_slice(&values);
    let mut st = State {
        memos: HashMap::new(),
        steps: 0,
    };
    let out = prog.eval(&mut st, roots[0], &mut env);
    budget.charge(st.steps);
    Ok(out)
}

/// `{ b̄ ∈ M^m : M ⊨ φ(ā1,…,ān,b̄) for all φ ∈ Φ }` with the default budget.
pub fn solution_set(m: &FiniteStructure, ty: &BlockType, params: &[Tuple]) -> Result<Property> {
    solution_set_with(m, ty, params, &Budget::default())
}

pub fn solution_set_with(
    m: &FiniteStructure,
    ty: &BlockType,
    params: &[Tuple],
    budget: &Budget,
) -> Result<Property> {
    let mut ev = TypeEvaluator::new(m, ty, budget)?;
    let flat = ev.flatten_params(params)?;
    ev.admit(1)?;
    Ok(ev.solution_set_flat(&flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::logic::parse_formula;

    fn assign(pairs: &[(&str, Element)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn edge_lookup() {
        let m = fixtures::fix2();
        let f = parse_formula("R(x,y)", m.signature()).unwrap();
        assert!(eval_formula(&m, &f, &assign(&[("x", 0), ("y", 1)])).unwrap());
        assert!(!eval_formula(&m, &f, &assign(&[("x", 0), ("y", 2)])).unwrap());
    }

    #[test]
    fn every_vertex_has_a_neighbour() {
        let m = fixtures::fix2();
        let f = parse_formula("forall x. exists y. R(x,y)", m.signature()).unwrap();
        assert!(eval_formula(&m, &f, &Assignment::new()).unwrap());
        let m5 = fixtures::fix5();
        assert!(!eval_formula(&m5, &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn truth_constant() {
        for m in fixtures::all_structures() {
            assert!(eval_formula(&m, &Formula::True, &Assignment::new()).unwrap());
        }
    }

    #[test]
    fn missing_assignment() {
        let m = fixtures::fix2();
        let f = parse_formula("R(x,y)", m.signature()).unwrap();
        assert!(matches!(
            eval_formula(&m, &f, &assign(&[("x", 0)])),
            Err(Error::MissingAssignment(v)) if v == "y"
        ));
    }

    #[test]
    fn solution_set_examples() {
        let m1 = fixtures::fix1();
        let t = BlockType::parse(&[&["x"]], &["y"], &["f(x) = y"], m1.signature()).unwrap();
        // oracle: f table lookup
        let f0 = m1.apply("f", &[0]).unwrap();
        assert_eq!(
            solution_set(&m1, &t, &[vec![0]]).unwrap(),
            Property::unary([f0])
        );

        let m2 = fixtures::fix2();
        let t = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], m2.signature()).unwrap();
        let adj: Vec<usize> = (0..4)
            .filter(|&b| m2.relation("R").unwrap().contains(&vec![0, b]))
            .collect();
        assert_eq!(
            solution_set(&m2, &t, &[vec![0]]).unwrap(),
            Property::unary(adj)
        );
        assert_eq!(
            solution_set(&m2, &t, &[vec![0]]).unwrap(),
            Property::unary([1, 3])
        );

        let f = BlockType::parse(&[&["x"]], &["y"], &["false"], m2.signature()).unwrap();
        assert!(solution_set(&m2, &f, &[vec![2]]).unwrap().is_empty());
    }

    #[test]
    fn block_length_mismatch() {
        let m = fixtures::fix2();
        let t = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], m.signature()).unwrap();
        assert!(matches!(
            solution_set(&m, &t, &[vec![0, 1]]),
            Err(Error::BlockMismatch(_))
        ));
        assert!(matches!(
            solution_set(&m, &t, &[]),
            Err(Error::BlockMismatch(_))
        ));
    }

    #[test]
    fn budget_refusal() {
        let m = fixtures::fix2();
        let f = parse_formula(
            "forall a. forall b. forall c. R(a,b) | R(b,c)",
            m.signature(),
        )
        .unwrap();
        let tiny = Budget::new(10);
        assert!(matches!(
            eval_formula_with(&m, &f, &Assignment::new(), &tiny),
            Err(Error::BudgetExceeded { .. })
        ));
        let b = Budget::default();
        eval_formula_with(&m, &f, &Assignment::new(), &b).unwrap();
        assert!(b.spent() > 0);
    }

    #[test]
    fn memo_keeps_estimate_polynomial() {
        // a chain of 12 nested existentials over 20 elements
        let mut text = String::from("R(z12,y)");
        for i in (1..=12).rev() {
            let prev = if i == 1 {
                "x".to_string()
            } else {
                format!("z{}", i - 1)
            };
            text = format!("exists z{i}. (R({prev},z{i}) & {text})");
        }
        let n = 20;
        let m = FiniteStructure::builder(n)
            .relation("R", 2, (0..n).map(|i| vec![i, (i + 1) % n]))
            .build()
            .unwrap();
        let t = BlockType::parse(&[&["x"]], &["y"], &[&text], m.signature()).unwrap();
        let b = Budget::default();
        let sol = solution_set_with(&m, &t, &[vec![0]], &b).unwrap();
        assert_eq!(sol, Property::unary([13]));
        assert!(b.spent() < 1_000_000);
    }

    /// Oracle for quantifier-free formulas: direct structural recursion.
    fn naive(m: &FiniteStructure, f: &Formula, a: &Assignment) -> bool {
        fn term(m: &FiniteStructure, t: &Term, a: &Assignment) -> Element {
            match t {
                Term::Var(v) => a[v],
                Term::App(f, args) => {
                    let vals: Vec<Element> = args.iter().map(|x| term(m, x, a)).collect();
                    m.apply(f, &vals).unwrap()
                }
            }
        }
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(r, args) => {
                let t: Tuple = args.iter().map(|x| term(m, x, a)).collect();
                m.relation(r).unwrap().contains(&t)
            }
            Formula::Eq(x, y) => term(m, x, a) == term(m, y, a),
            Formula::Not(x) => !naive(m, x, a),
            Formula::And(x, y) => naive(m, x, a) && naive(m, y, a),
            Formula::Or(x, y) => naive(m, x, a) || naive(m, y, a),
            Formula::Implies(x, y) => !naive(m, x, a) || naive(m, y, a),
            Formula::Iff(x, y) => naive(m, x, a) == naive(m, y, a),
            Formula::Exists(v, body) => (0..m.size()).any(|e| {
                let mut b = a.clone();
                b.insert(v.clone(), e);
                naive(m, body, &b)
            }),
            Formula::Forall(v, body) => (0..m.size()).all(|e| {
                let mut b = a.clone();
                b.insert(v.clone(), e);
                naive(m, body, &b)
            }),
        }
    }

    #[test]
    fn agrees_with_naive_recursion() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = crate::random::structure(&mut rng, 1..=5);
            let vars = ["x", "y"];
            let f = crate::random::formula(&mut rng, m.signature(), &vars, 3);
            for x in 0..m.size() {
                for y in 0..m.size() {
                    let a = assign(&[("x", x), ("y", y)]);
                    assert_eq!(eval_formula(&m, &f, &a).unwrap(), naive(&m, &f, &a), "{f}");
                }
            }
        }
    }

    #[test]
    fn adding_formulas_never_enlarges() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = crate::random::structure(&mut rng, 1..=5);
            let f1 = crate::random::formula(&mut rng, m.signature(), &["x", "y"], 2);
            let f2 = crate::random::formula(&mut rng, m.signature(), &["x", "y"], 2);
            let one = BlockType::from_names(&[&["x"]], &["y"], vec![f1.clone()]).unwrap();
            let two = BlockType::from_names(&[&["x"]], &["y"], vec![f1, f2]).unwrap();
            for a in 0..m.size() {
                let s1 = solution_set(&m, &one, &[vec![a]]).unwrap();
                let s2 = solution_set(&m, &two, &[vec![a]]).unwrap();
                assert!(s2.is_subset(&s1));
            }
        }
    }
}
