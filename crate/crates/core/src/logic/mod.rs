//! First-order terms and formulas with equality, the formula parser, and
//! finite block types.

mod block;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use block::{
    build_superposition_type, load_suite, load_type, type_conjunction, type_disjunction, BlockType,
    FormulaSuite, TypeFile,
};
pub use parser::{parse_formula, parse_formula_inferring};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(symbol: &str, args: Vec<Term>) -> Term {
        Term::App(symbol.to_string(), args)
    }

    pub fn constant(symbol: &str) -> Term {
        Term::App(symbol.to_string(), Vec::new())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Nesting depth of function applications; variables and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) if args.is_empty() => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(s, args) if args.is_empty() => write!(f, "{s}"),
            Term::App(s, args) => {
                write!(f, "{s}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn atom(relation: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(relation.to_string(), args)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Formula {
        Formula::Not(Box::new(Formula::Eq(a, b)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Formula {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    pub fn exists(var: &str, body: Formula) -> Formula {
        Formula::Exists(var.to_string(), Box::new(body))
    }

    pub fn forall(var: &str, body: Formula) -> Formula {
        Formula::Forall(var.to_string(), Box::new(body))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::False)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let term = |t: &Term, bound: &Vec<String>, out: &mut BTreeSet<String>| {
            for v in t.vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(_, args) => args.iter().for_each(|a| term(a, bound, out)),
            Formula::Eq(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable name occurring anywhere, free or bound.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom(_, args) => args.iter().for_each(|a| a.collect_vars(&mut out)),
            Formula::Eq(a, b) => {
                a.collect_vars(&mut out);
                b.collect_vars(&mut out);
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                out.insert(v.clone());
            }
            _ => {}
        });
        out
    }

    pub fn bound_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Exists(v, _) | Formula::Forall(v, _) = f {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => a.visit(f),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => 0,
            Formula::Not(a) => a.quantifier_depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Formula::Exists(_, a) | Formula::Forall(_, a) => 1 + a.quantifier_depth(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.quantifier_depth() == 0
    }

    /// Capture-avoiding simultaneous substitution of terms for free variables.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(r, args) => {
                Formula::Atom(r.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
            Formula::Eq(a, b) => Formula::Eq(a.substitute(map), b.substitute(map)),
            Formula::Not(a) => a.substitute(map).not(),
            Formula::And(a, b) => a.substitute(map).and(b.substitute(map)),
            Formula::Or(a, b) => a.substitute(map).or(b.substitute(map)),
            Formula::Implies(a, b) => a.substitute(map).implies(b.substitute(map)),
            Formula::Iff(a, b) => a.substitute(map).iff(b.substitute(map)),
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let mut inner = map.clone();
                inner.remove(v);
                let body_free = body.free_vars();
                inner.retain(|k, _| body_free.contains(k));
                let captured = inner.values().any(|t| t.vars().contains(v));
                let (var, body) = if captured {
                    let mut avoid = body.all_vars();
                    for t in inner.values() {
                        t.collect_vars(&mut avoid);
                    }
                    avoid.extend(inner.keys().cloned());
                    let fresh = fresh_name(v, &avoid);
                    let mut rename = BTreeMap::new();
                    rename.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh, body.substitute(&rename))
                } else {
                    (v.clone(), (**body).clone())
                };
                let body = body.substitute(&inner);
                match self {
                    Formula::Exists(..) => Formula::exists(&var, body),
                    _ => Formula::forall(&var, body),
                }
            }
        }
    }

    /// Renames bound variables that appear in `avoid` to fresh names.
    pub fn rename_bound_apart(&self, avoid: &BTreeSet<String>) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => self.clone(),
            Formula::Not(a) => a.rename_bound_apart(avoid).not(),
            Formula::And(a, b) => a.rename_bound_apart(avoid).and(b.rename_bound_apart(avoid)),
            Formula::Or(a, b) => a.rename_bound_apart(avoid).or(b.rename_bound_apart(avoid)),
            Formula::Implies(a, b) => a
                .rename_bound_apart(avoid)
                .implies(b.rename_bound_apart(avoid)),
            Formula::Iff(a, b) => a.rename_bound_apart(avoid).iff(b.rename_bound_apart(avoid)),
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let body = body.rename_bound_apart(avoid);
                let (var, body) = if avoid.contains(v) {
                    let mut used = body.all_vars();
                    used.extend(avoid.iter().cloned());
                    let fresh = fresh_name(v, &used);
                    let mut rename = BTreeMap::new();
                    rename.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh.clone(), body.substitute(&rename))
                } else {
                    (v.clone(), body)
                };
                match self {
                    Formula::Exists(..) => Formula::exists(&var, body),
                    _ => Formula::forall(&var, body),
                }
            }
        }
    }

    pub fn unparse(&self) -> String {
        self.to_string()
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(inner) if !matches!(**inner, Formula::Eq(..)) => 5,
            Formula::Exists(..) | Formula::Forall(..) => 5,
            _ => 6,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8, tail: bool) -> fmt::Result {
        let quant = matches!(self, Formula::Exists(..) | Formula::Forall(..));
        if self.precedence() < min_prec || (quant && !tail) {
            write!(f, "(")?;
            self.write(f, 0, true)?;
            return write!(f, ")");
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(r, args) => {
                write!(f, "{r}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(inner) => match &**inner {
                Formula::Eq(a, b) => write!(f, "{a} != {b}"),
                other => {
                    write!(f, "!")?;
                    other.write(f, 5, tail)
                }
            },
            Formula::Iff(a, b) => {
                a.write(f, 1, false)?;
                write!(f, " <-> ")?;
                b.write(f, 2, tail)
            }
            Formula::Implies(a, b) => {
                a.write(f, 3, false)?;
                write!(f, " -> ")?;
                b.write(f, 2, tail)
            }
            Formula::Or(a, b) => {
                a.write(f, 3, false)?;
                write!(f, " | ")?;
                b.write(f, 4, tail)
            }
            Formula::And(a, b) => {
                a.write(f, 4, false)?;
                write!(f, " & ")?;
                b.write(f, 5, tail)
            }
            Formula::Exists(v, body) => {
                write!(f, "exists {v}. ")?;
                body.write(f, 0, tail)
            }
            Formula::Forall(v, body) => {
                write!(f, "forall {v}. ")?;
                body.write(f, 0, tail)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0, true)
    }
}

/// `base` itself when unused, otherwise the first unused `base_i`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|c| !used.contains(c))
        .expect("unbounded supply of names")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    #[test]
    fn free_and_bound_variables() {
        let f = Formula::exists(
            "z",
            Formula::atom("R", vec![v("x"), v("z")]).and(Formula::atom("R", vec![v("z"), v("y")])),
        );
        let free: Vec<String> = f.free_vars().into_iter().collect();
        assert_eq!(free, vec!["x", "y"]);
        assert!(f.bound_vars().contains("z"));
        assert_eq!(f.quantifier_depth(), 1);
    }

    #[test]
    fn substitution_avoids_capture() {
        // exists y. R(x,y)  with x := y  must not become exists y. R(y,y)
        let f = Formula::exists("y", Formula::atom("R", vec![v("x"), v("y")]));
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), v("y"));
        let g = f.substitute(&map);
        match &g {
            Formula::Exists(b, body) => {
                assert_ne!(b, "y");
                assert_eq!(**body, Formula::atom("R", vec![v("y"), v(b)]));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(g.free_vars().into_iter().collect::<Vec<_>>(), vec!["y"]);
    }

    #[test]
    fn conj_and_disj_of_empty() {
        assert_eq!(Formula::conj(vec![]), Formula::True);
        assert_eq!(Formula::disj(vec![]), Formula::False);
    }

    #[test]
    fn unparse_minimal_parentheses() {
        let r = |a: &str, b: &str| Formula::atom("R", vec![v(a), v(b)]);
        let f = r("x", "y").and(r("y", "x").not());
        assert_eq!(f.to_string(), "R(x,y) & !R(y,x)");
        let g = r("x", "y").or(r("y", "x")).and(r("x", "x"));
        assert_eq!(g.to_string(), "(R(x,y) | R(y,x)) & R(x,x)");
        let q = Formula::exists("z", r("x", "z")).and(r("x", "y"));
        assert_eq!(q.to_string(), "(exists z. R(x,z)) & R(x,y)");
        let tail = r("x", "y").and(Formula::exists("z", r("x", "z")));
        assert_eq!(tail.to_string(), "R(x,y) & exists z. R(x,z)");
        assert_eq!(Formula::neq(v("x"), v("y")).to_string(), "x != y");
        let imp = r("x", "y").implies(r("y", "x")).implies(r("x", "x"));
        assert_eq!(imp.to_string(), "(R(x,y) -> R(y,x)) -> R(x,x)");
    }

    #[test]
    fn rename_bound_apart_keeps_meaning_shape() {
        let f = Formula::forall("x", Formula::atom("R", vec![v("x"), v("y")]));
        let avoid: BTreeSet<String> = ["x".to_string()].into_iter().collect();
        let g = f.rename_bound_apart(&avoid);
        assert!(!g.bound_vars().contains("x"));
        assert_eq!(g.free_vars(), f.free_vars());
    }
}
