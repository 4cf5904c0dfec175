//! Seeded generators for randomized tests.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::eval::{eval_formula, Assignment};
use crate::logic::{Formula, Term};
use crate::modelbuild::GroundTheory;
use crate::sigstruct::{Element, FiniteStructure, Property, Signature, Tuple, Tuples};

/// A structure of random size over a random sub-signature of
/// `{R/2, P/1, f/1, c/0}`. At least one symbol is always present.
pub fn structure<R: Rng>(rng: &mut R, sizes: RangeInclusive<usize>) -> FiniteStructure {
    let n = rng.gen_range(sizes);
    let mut b = FiniteStructure::builder(n);
    let mut any = false;
    if rng.gen_bool(0.8) {
        let density = rng.gen_range(0.1..0.6);
        b = b.relation("R", 2, random_tuples(rng, n, 2, density));
        any = true;
    }
    if rng.gen_bool(0.4) {
        b = b.relation("P", 1, random_tuples(rng, n, 1, 0.5));
        any = true;
    }
    if rng.gen_bool(0.4) || !any {
        let table = (0..n).map(|_| rng.gen_range(0..n)).collect();
        b = b.function("f", 1, table);
    }
    if rng.gen_bool(0.3) {
        b = b.constant("c", rng.gen_range(0..n));
    }
    b.build().expect("generated structure is valid")
}

/// A structure with a single binary operation `op`.
pub fn magma<R: Rng>(rng: &mut R, n: usize) -> FiniteStructure {
    let table = (0..n * n).map(|_| rng.gen_range(0..n)).collect();
    FiniteStructure::builder(n)
        .function("op", 2, table)
        .build()
        .expect("valid magma")
}

fn random_tuples<R: Rng>(rng: &mut R, n: usize, k: usize, p: f64) -> Vec<Tuple> {
    Tuples::new(n, k).filter(|_| rng.gen_bool(p)).collect()
}

/// An undirected loopless graph `G(n, p)` on relation `R`.
pub fn graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> FiniteStructure {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push(vec![a, b]);
                edges.push(vec![b, a]);
            }
        }
    }
    FiniteStructure::builder(n)
        .relation("R", 2, edges)
        .build()
        .expect("valid graph")
}

/// A connected undirected graph: a random spanning tree plus `G(n, p)` edges.
pub fn connected_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> FiniteStructure {
    let mut order: Vec<Element> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        edges.insert(vec![order[i], parent]);
        edges.insert(vec![parent, order[i]]);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.insert(vec![a, b]);
                edges.insert(vec![b, a]);
            }
        }
    }
    FiniteStructure::builder(n)
        .relation("R", 2, edges)
        .build()
        .expect("valid graph")
}

pub fn property<R: Rng>(rng: &mut R, n: usize, k: usize, p: f64) -> Property {
    Property::new(k, random_tuples(rng, n, k, p)).expect("arity is consistent")
}

pub fn nonempty_property<R: Rng>(rng: &mut R, n: usize, k: usize, p: f64) -> Property {
    let mut out = property(rng, n, k, p);
    if out.is_empty() {
        let t: Tuple = (0..k).map(|_| rng.gen_range(0..n)).collect();
        out.insert(t);
    }
    out
}

/// A random subset of `p`.
pub fn subproperty<R: Rng>(rng: &mut R, p: &Property) -> Property {
    Property::new(
        p.arity(),
        p.tuples().iter().filter(|_| rng.gen_bool(0.6)).cloned(),
    )
    .expect("arity is consistent")
}

/// A random superset of `q` inside `M^k`.
pub fn superproperty<R: Rng>(rng: &mut R, n: usize, q: &Property) -> Property {
    let extra = random_tuples(rng, n, q.arity(), 0.3);
    q.union(&Property::new(q.arity(), extra).expect("arity is consistent"))
}

fn term<R: Rng>(rng: &mut R, sig: &Signature, vars: &[String]) -> Term {
    let unary: Vec<&str> = sig
        .functions()
        .filter(|(_, a)| *a == 1)
        .map(|(f, _)| f)
        .collect();
    let binary: Vec<&str> = sig
        .functions()
        .filter(|(_, a)| *a == 2)
        .map(|(f, _)| f)
        .collect();
    let constants: Vec<&str> = sig.constants().collect();
    let var = |rng: &mut R| Term::Var(vars.choose(rng).expect("some variable").clone());
    match rng.gen_range(0..10) {
        0..=5 => var(rng),
        6 | 7 if !unary.is_empty() => {
            Term::App(unary.choose(rng).unwrap().to_string(), vec![var(rng)])
        }
        8 if !binary.is_empty() => Term::App(
            binary.choose(rng).unwrap().to_string(),
            vec![var(rng), var(rng)],
        ),
        9 if !constants.is_empty() => Term::constant(constants.choose(rng).unwrap()),
        _ => var(rng),
    }
}

fn atom<R: Rng>(rng: &mut R, sig: &Signature, vars: &[String]) -> Formula {
    let relations: Vec<(&str, usize)> = sig.relations().collect();
    if !relations.is_empty() && rng.gen_bool(0.65) {
        let (r, k) = *relations.choose(rng).unwrap();
        let args = (0..k).map(|_| term(rng, sig, vars)).collect();
        Formula::atom(r, args)
    } else {
        Formula::eq(term(rng, sig, vars), term(rng, sig, vars))
    }
}

/// A random formula whose free variables lie in `vars`. Bound variables are
/// named `z0, z1, …` by nesting depth, so they never clash with `vars`
/// as long as those avoid that pattern.
pub fn formula<R: Rng>(rng: &mut R, sig: &Signature, vars: &[&str], depth: usize) -> Formula {
    let pool: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
    gen(rng, sig, &pool, depth, 0)
}

fn gen<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    pool: &[String],
    depth: usize,
    bound: usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..20) {
            0 => Formula::True,
            1 => Formula::False,
            _ => atom(rng, sig, pool),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => gen(rng, sig, pool, d, bound).not(),
        1 | 2 => gen(rng, sig, pool, d, bound).and(gen(rng, sig, pool, d, bound)),
        3 => gen(rng, sig, pool, d, bound).or(gen(rng, sig, pool, d, bound)),
        4 => gen(rng, sig, pool, d, bound).implies(gen(rng, sig, pool, d, bound)),
        5 => gen(rng, sig, pool, d, bound).iff(gen(rng, sig, pool, d, bound)),
        q => {
            let v = format!("z{bound}");
            let mut inner = pool.to_vec();
            inner.push(v.clone());
            let body = gen(rng, sig, &inner, d, bound + 1);
            if q == 6 {
                Formula::exists(&v, body)
            } else {
                Formula::forall(&v, body)
            }
        }
    }
}

/// A complete flat ground theory of a random hidden model whose elements are
/// all named by some of `1..=max_constants` constants, with Henkin sentences
/// and a few true quantified sentences. Returns the theory and the model.
pub fn henkin_theory<R: Rng>(rng: &mut R, max_constants: usize) -> (GroundTheory, FiniteStructure) {
    let k = rng.gen_range(1..=max_constants.max(1));
    let n = rng.gen_range(1..=k);
    let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
    let mut value: Vec<Element> = (0..k)
        .map(|i| if i < n { i } else { rng.gen_range(0..n) })
        .collect();
    value.shuffle(rng);
    let mut b = FiniteStructure::builder(n);
    for (c, &v) in names.iter().zip(&value) {
        b = b.constant(c, v);
    }
    if rng.gen_bool(0.6) {
        b = b.function("f", 1, (0..n).map(|_| rng.gen_range(0..n)).collect());
    }
    if rng.gen_bool(0.8) {
        let density = rng.gen_range(0.2..0.7);
        b = b.relation("R", 2, random_tuples(rng, n, 2, density));
    }
    if rng.gen_bool(0.4) {
        b = b.relation("P", 1, random_tuples(rng, n, 1, 0.5));
    }
    let hidden = b.build().expect("generated model is valid");

    let c = |i: usize| Term::constant(&names[i]);
    let mut sentences = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let eq = Formula::eq(c(i), c(j));
            sentences.push(if value[i] == value[j] { eq } else { eq.not() });
        }
    }
    if let Some(f) = hidden.function("f") {
        for i in 0..k {
            let target = f.apply(n, &[value[i]]);
            let named: Vec<usize> = (0..k).filter(|&j| value[j] == target).collect();
            let d = *named.choose(rng).expect("every element is named");
            sentences.push(Formula::eq(Term::app("f", vec![c(i)]), c(d)));
        }
    }
    for (r, tuples) in hidden.relations() {
        let ar = hidden.signature().relation_arity(r).unwrap_or(1);
        for idx in Tuples::new(k, ar) {
            let atom = Formula::atom(r, idx.iter().map(|&i| c(i)).collect());
            let t: Tuple = idx.iter().map(|&i| value[i]).collect();
            sentences.push(if tuples.contains(&t) {
                atom
            } else {
                atom.not()
            });
        }
    }
    let empty = Assignment::new();
    let truth = |f: &Formula| eval_formula(&hidden, f, &empty).expect("closed sentence");
    if hidden.relation("R").is_some() {
        for i in 0..k {
            let ex = Formula::exists("y", Formula::atom("R", vec![c(i), Term::var("y")]));
            if truth(&ex) {
                sentences.push(ex);
            }
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        let body = formula(rng, hidden.signature(), &["w"], 2);
        let q = if rng.gen_bool(0.5) {
            Formula::exists("w", body)
        } else {
            Formula::forall("w", body)
        };
        sentences.push(if truth(&q) { q } else { q.not() });
    }
    let theory = GroundTheory::new(hidden.signature().clone(), names, sentences, 1)
        .expect("generated theory is well formed");
    (theory, hidden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = structure(&mut rng, 1..=6);
            assert!((1..=6).contains(&m.size()));
            let f = formula(&mut rng, m.signature(), &["x", "y"], 3);
            assert!(f.free_vars().iter().all(|v| v == "x" || v == "y"));
            let g = connected_graph(&mut rng, 6, 0.2);
            assert_eq!(g.size(), 6);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = structure(&mut ChaCha8Rng::seed_from_u64(9), 1..=6);
        let b = structure(&mut ChaCha8Rng::seed_from_u64(9), 1..=6);
        assert_eq!(a, b);
    }
}
