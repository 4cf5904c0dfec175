//! The eight preservation and disjointness modes, full verdict reports, and
//! derived constructions built on them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::eval::TypeEvaluator;
use crate::logic::BlockType;
use crate::orbits::Symmetry;
use crate::sigstruct::{
    cartesian_product, complement_property, FiniteStructure, Property, Tuple, Tuples,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PreservationMode {
    TotallyPreserved,
    ExistentiallyPreserved,
    ForallPartiallyPreserved,
    ExistsPartiallyPreserved,
    ExistsPartiallyNonPreserved,
    /// Also called totally non-preserved.
    ForallPartiallyNonPreserved,
    ExistentiallyDisjoint,
    TotallyDisjoint,
}

/// Alias for [`PreservationMode::ForallPartiallyNonPreserved`].
pub const TOTALLY_NON_PRESERVED: PreservationMode = PreservationMode::ForallPartiallyNonPreserved;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Condition {
    Inside,
    Meets,
    Escapes,
    Avoids,
}

impl PreservationMode {
    pub const ALL: [PreservationMode; 8] = [
        PreservationMode::TotallyPreserved,
        PreservationMode::ExistentiallyPreserved,
        PreservationMode::ForallPartiallyPreserved,
        PreservationMode::ExistsPartiallyPreserved,
        PreservationMode::ExistsPartiallyNonPreserved,
        PreservationMode::ForallPartiallyNonPreserved,
        PreservationMode::ExistentiallyDisjoint,
        PreservationMode::TotallyDisjoint,
    ];

    /// Whether the per-tuple condition is required of every parameter tuple.
    pub fn is_universal(self) -> bool {
        use PreservationMode::*;
        matches!(
            self,
            TotallyPreserved
                | ForallPartiallyPreserved
                | ForallPartiallyNonPreserved
                | TotallyDisjoint
        )
    }

    fn condition(self) -> Condition {
        use PreservationMode::*;
        match self {
            TotallyPreserved | ExistentiallyPreserved => Condition::Inside,
            ForallPartiallyPreserved | ExistsPartiallyPreserved => Condition::Meets,
            ExistsPartiallyNonPreserved | ForallPartiallyNonPreserved => Condition::Escapes,
            ExistentiallyDisjoint | TotallyDisjoint => Condition::Avoids,
        }
    }

    pub fn name(self) -> &'static str {
        use PreservationMode::*;
        match self {
            TotallyPreserved => "totally-preserved",
            ExistentiallyPreserved => "existentially-preserved",
            ForallPartiallyPreserved => "forall-partially-preserved",
            ExistsPartiallyPreserved => "exists-partially-preserved",
            ExistsPartiallyNonPreserved => "exists-partially-non-preserved",
            ForallPartiallyNonPreserved => "forall-partially-non-preserved",
            ExistentiallyDisjoint => "existentially-disjoint",
            TotallyDisjoint => "totally-disjoint",
        }
    }

    /// The per-tuple condition on a solution set.
    pub fn tuple_condition(self, sol: &Property, q: &Property) -> bool {
        match self.condition() {
            Condition::Inside => sol.is_subset(q),
            Condition::Meets => sol.intersects(q),
            Condition::Escapes => !sol.is_subset(q),
            Condition::Avoids => !sol.intersects(q),
        }
    }
}

impl fmt::Display for PreservationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreservationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "totally-non-preserved" {
            return Ok(TOTALLY_NON_PRESERVED);
        }
        PreservationMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown preservation mode `{s}`")))
    }
}

/// Lexicographic enumeration of `P1×…×Pn` as lists of block tuples.
pub struct ParameterProduct<'a> {
    factors: Vec<Vec<&'a Tuple>>,
    index: Option<Vec<usize>>,
}

impl<'a> ParameterProduct<'a> {
    pub fn new(ps: &'a [Property]) -> Self {
        let factors: Vec<Vec<&Tuple>> = ps.iter().map(|p| p.tuples().iter().collect()).collect();
        let index = if factors.iter().any(Vec::is_empty) {
            None
        } else {
            Some(vec![0; factors.len()])
        };
        ParameterProduct { factors, index }
    }
}

impl Iterator for ParameterProduct<'_> {
    type Item = Vec<Tuple>;

    fn next(&mut self) -> Option<Vec<Tuple>> {
        let idx = self.index.as_mut()?;
        let out: Vec<Tuple> = idx
            .iter()
            .zip(&self.factors)
            .map(|(&i, f)| f[i].clone())
            .collect();
        let mut k = idx.len();
        loop {
            if k == 0 {
                self.index = None;
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < self.factors[k].len() {
                break;
            }
            idx[k] = 0;
        }
        Some(out)
    }
}

pub fn product_size(ps: &[Property]) -> u128 {
    ps.iter()
        .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
}

fn validate(m: &FiniteStructure, ty: &BlockType, ps: &[Property], q: &Property) -> Result<()> {
    let lengths = ty.block_lengths();
    if ps.len() != lengths.len() {
        return Err(Error::ArityMismatch(format!(
            "the type has {} parameter blocks but {} properties were given",
            lengths.len(),
            ps.len()
        )));
    }
    for (i, (p, &k)) in ps.iter().zip(&lengths).enumerate() {
        if p.arity() != k {
            return Err(Error::ArityMismatch(format!(
                "property {i} has arity {} but parameter block {i} has length {k}",
                p.arity()
            )));
        }
        p.check_within(m.size())?;
    }
    if q.arity() != ty.m() {
        return Err(Error::ArityMismatch(format!(
            "target has arity {} but the result block has length {}",
            q.arity(),
            ty.m()
        )));
    }
    q.check_within(m.size())
}

/// Decides one mode, stopping at the first decisive parameter tuple.
pub fn check_preservation(
    m: &FiniteStructure,
    ty: &BlockType,
    ps: &[Property],
    q: &Property,
    mode: PreservationMode,
    budget: &Budget,
) -> Result<bool> {
    validate(m, ty, ps, q)?;
    let mut ev = TypeEvaluator::new(m, ty, budget)?;
    ev.admit(product_size(ps))?;
    let universal = mode.is_universal();
    for params in ParameterProduct::new(ps) {
        let flat: Vec<usize> = params.iter().flatten().copied().collect();
        let sol = ev.solution_set_flat(&flat);
        if mode.tuple_condition(&sol, q) != universal {
            return Ok(!universal);
        }
    }
    Ok(universal)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeVerdict {
    pub mode: String,
    pub holds: bool,
    /// A satisfying tuple for a true ∃-mode or a violating tuple for a false ∀-mode.
    pub witness: Option<Vec<Tuple>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreservationReport {
    pub verdicts: Vec<ModeVerdict>,
    pub empty_product: bool,
    pub empty_solutions: Vec<Vec<Tuple>>,
    pub tuples_checked: usize,
}

impl PreservationReport {
    fn entry(&self, mode: PreservationMode) -> &ModeVerdict {
        let i = PreservationMode::ALL
            .iter()
            .position(|m| *m == mode)
            .expect("mode listed");
        &self.verdicts[i]
    }

    pub fn holds(&self, mode: PreservationMode) -> bool {
        self.entry(mode).holds
    }

    pub fn witness(&self, mode: PreservationMode) -> Option<&Vec<Tuple>> {
        self.entry(mode).witness.as_ref()
    }
}

/// All eight verdicts from one sweep over the parameter product.
pub fn full_report(
    m: &FiniteStructure,
    ty: &BlockType,
    ps: &[Property],
    q: &Property,
    budget: &Budget,
) -> Result<PreservationReport> {
    validate(m, ty, ps, q)?;
    let mut ev = TypeEvaluator::new(m, ty, budget)?;
    ev.admit(product_size(ps))?;
    let mut holds: Vec<bool> = PreservationMode::ALL
        .iter()
        .map(|m| m.is_universal())
        .collect();
    let mut witness: Vec<Option<Vec<Tuple>>> = vec![None; 8];
    let mut empty_solutions = Vec::new();
    let mut count = 0;
    for params in ParameterProduct::new(ps) {
        count += 1;
        let flat: Vec<usize> = params.iter().flatten().copied().collect();
        let sol = ev.solution_set_flat(&flat);
        if sol.is_empty() {
            empty_solutions.push(params.clone());
        }
        for (i, mode) in PreservationMode::ALL.iter().enumerate() {
            let c = mode.tuple_condition(&sol, q);
            if witness[i].is_none() && c != mode.is_universal() {
                holds[i] = !mode.is_universal();
                witness[i] = Some(params.clone());
            }
        }
    }
    let verdicts = PreservationMode::ALL
        .iter()
        .zip(holds)
        .zip(witness)
        .map(|((mode, holds), witness)| ModeVerdict {
            mode: mode.name().to_string(),
            holds,
            witness,
        })
        .collect();
    Ok(PreservationReport {
        verdicts,
        empty_product: count == 0,
        empty_solutions,
        tuples_checked: count,
    })
}

/// Merges all parameter blocks into one and the properties into their product.
pub fn reduce_to_product(ty: &BlockType, ps: &[Property]) -> (BlockType, Property) {
    (ty.merged_parameters(), cartesian_product(ps))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeDefinedSet {
    pub set: Property,
    pub totally_preserving: bool,
    pub not_partially_into_complement: bool,
    pub singleton_representation: bool,
}

impl TypeDefinedSet {
    pub fn checks(&self) -> bool {
        self.totally_preserving
            && self.not_partially_into_complement
            && self.singleton_representation
    }
}

/// The solution set `Q` at `params` and its characterization through
/// preservation by singleton parameter properties.
pub fn type_defined_set_characterization(
    m: &FiniteStructure,
    ty: &BlockType,
    params: &[Tuple],
    budget: &Budget,
) -> Result<TypeDefinedSet> {
    let mut ev = TypeEvaluator::new(m, ty, budget)?;
    let flat = ev.flatten_params(params)?;
    ev.admit(1)?;
    let set = ev.solution_set_flat(&flat);
    let singletons: Vec<Property> = params.iter().cloned().map(Property::singleton).collect();
    let totally_preserving = check_preservation(
        m,
        ty,
        &singletons,
        &set,
        PreservationMode::TotallyPreserved,
        budget,
    )?;
    let complement = complement_property(m, &set)?;
    let not_partially_into_complement = !check_preservation(
        m,
        ty,
        &singletons,
        &complement,
        PreservationMode::ExistsPartiallyPreserved,
        budget,
    )?;
    let mut represented = BTreeSet::new();
    for b in Tuples::new(m.size(), ty.m()) {
        let target = Property::singleton(b.clone());
        if check_preservation(
            m,
            ty,
            &singletons,
            &target,
            PreservationMode::ExistsPartiallyPreserved,
            budget,
        )? {
            represented.insert(b);
        }
    }
    let singleton_representation = &represented == set.tuples();
    Ok(TypeDefinedSet {
        set,
        totally_preserving,
        not_partially_into_complement,
        singleton_representation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PqVerdict {
    pub existential: bool,
    pub total: bool,
}

/// `(p,q)`-preservation of a one-block type for two automorphism orbits,
/// where a preserving tuple must have a nonempty solution set inside `q`.
pub fn pq_preservation(
    m: &FiniteStructure,
    ty: &BlockType,
    p_orbit: &Property,
    q_orbit: &Property,
    budget: &Budget,
) -> Result<PqVerdict> {
    if ty.n() != 1 {
        return Err(Error::BlockMismatch(format!(
            "expected a single parameter block, found {}",
            ty.n()
        )));
    }
    let sym = Symmetry::new(m, budget)?;
    sym.require_orbit(p_orbit)?;
    sym.require_orbit(q_orbit)?;
    validate(m, ty, std::slice::from_ref(p_orbit), q_orbit)?;
    let mut ev = TypeEvaluator::new(m, ty, budget)?;
    ev.admit(p_orbit.len() as u128)?;
    let mut any = false;
    let mut all = true;
    for a in p_orbit.tuples() {
        let sol = ev.solution_set_flat(a);
        let good = !sol.is_empty() && sol.is_subset(q_orbit);
        any |= good;
        all &= good;
    }
    Ok(PqVerdict {
        existential: any,
        total: all,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SublatticeMember {
    /// Indices of the formulas forming the sub-list.
    pub formulas: Vec<usize>,
    pub set: Property,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sublattice {
    pub members: Vec<SublatticeMember>,
    /// Distinct solution-set unions, in increasing order.
    pub family: Vec<Property>,
    pub least: Property,
    pub least_is_minimum: bool,
    pub closed_under_intersection: bool,
    pub closed_under_union: bool,
    pub maximal: Vec<Property>,
}

pub const MAX_SUBLATTICE_FORMULAS: usize = 16;

/// All totally preserving nonempty sub-lists of `Φ` and the family of their
/// solution-set unions over `P1×…×Pn`.
pub fn preserving_sublattice(
    m: &FiniteStructure,
    ty: &BlockType,
    ps: &[Property],
    q: &Property,
    budget: &Budget,
) -> Result<Sublattice> {
    let k = ty.formulas().len();
    if k > MAX_SUBLATTICE_FORMULAS {
        return Err(Error::BudgetExceeded {
            estimate: 1u128 << k,
            limit: 1 << MAX_SUBLATTICE_FORMULAS,
        });
    }
    if !check_preservation(m, ty, ps, q, PreservationMode::TotallyPreserved, budget)? {
        return Err(Error::NotPreserving(
            "the type is not totally preserving for the given properties".into(),
        ));
    }
    let union_of = |sub: &BlockType| -> Result<Property> {
        let mut ev = TypeEvaluator::new(m, sub, budget)?;
        ev.admit(product_size(ps))?;
        let mut acc = Property::empty(sub.m());
        for params in ParameterProduct::new(ps) {
            let flat: Vec<usize> = params.iter().flatten().copied().collect();
            acc = acc.union(&ev.solution_set_flat(&flat));
        }
        Ok(acc)
    };
    let mut members = Vec::new();
    for mask in 1u64..(1 << k) {
        let sub = ty.sublist(mask).expect("nonempty mask");
        if check_preservation(m, &sub, ps, q, PreservationMode::TotallyPreserved, budget)? {
            members.push(SublatticeMember {
                formulas: (0..k).filter(|i| mask >> i & 1 == 1).collect(),
                set: union_of(&sub)?,
            });
        }
    }
    let least = union_of(ty)?;
    let family: BTreeSet<Property> = members.iter().map(|s| s.set.clone()).collect();
    let least_is_minimum = family.contains(&least) && family.iter().all(|s| least.is_subset(s));
    let closed_under_intersection = family
        .iter()
        .all(|a| family.iter().all(|b| family.contains(&a.intersection(b))));
    let closed_under_union = family
        .iter()
        .all(|a| family.iter().all(|b| family.contains(&a.union(b))));
    let maximal = family
        .iter()
        .filter(|a| !family.iter().any(|b| b != *a && a.is_subset(b)))
        .cloned()
        .collect();
    let mut family: Vec<Property> = family.into_iter().collect();
    family.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(Sublattice {
        members,
        family,
        least,
        least_is_minimum,
        closed_under_intersection,
        closed_under_union,
        maximal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use PreservationMode::*;

    fn fx(m: &FiniteStructure, text: &str) -> BlockType {
        BlockType::parse(&[&["x"]], &["y"], &[text], m.signature()).unwrap()
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in PreservationMode::ALL {
            assert_eq!(mode.name().parse::<PreservationMode>().unwrap(), mode);
        }
        assert_eq!(
            "totally-non-preserved".parse::<PreservationMode>().unwrap(),
            ForallPartiallyNonPreserved
        );
        assert!("sideways".parse::<PreservationMode>().is_err());
    }

    #[test]
    fn split_map_examples() {
        let m = fixtures::fix1();
        let phi = fx(&m, "f(x) = y");
        let b = Budget::default();
        let q = fixtures::fix1_q();
        let p1 = fixtures::fix1_p1();
        let p2 = fixtures::fix1_p2();
        assert!(check_preservation(&m, &phi, &[p1.clone()], &q, TotallyPreserved, &b).unwrap());
        let both = p1.union(&p2);
        assert!(
            check_preservation(&m, &phi, &[both.clone()], &q, ExistentiallyPreserved, &b).unwrap()
        );
        assert!(!check_preservation(&m, &phi, &[both], &q, TotallyPreserved, &b).unwrap());
        assert!(check_preservation(&m, &phi, &[p2], &q, TotallyDisjoint, &b).unwrap());
    }

    #[test]
    fn full_report_single_tuple() {
        let m = fixtures::fix1();
        let phi = fx(&m, "f(x) = y");
        let r = full_report(
            &m,
            &phi,
            &[Property::unary([0])],
            &Property::unary([1]),
            &Budget::default(),
        )
        .unwrap();
        for mode in [
            TotallyPreserved,
            ExistentiallyPreserved,
            ForallPartiallyPreserved,
            ExistsPartiallyPreserved,
        ] {
            assert!(r.holds(mode), "{mode}");
        }
        for mode in [
            ExistsPartiallyNonPreserved,
            ForallPartiallyNonPreserved,
            ExistentiallyDisjoint,
            TotallyDisjoint,
        ] {
            assert!(!r.holds(mode), "{mode}");
        }
        assert!(!r.empty_product);
        assert!(r.empty_solutions.is_empty());
    }

    #[test]
    fn full_report_empty_product() {
        let m = fixtures::fix1();
        let phi = fx(&m, "f(x) = y");
        let r = full_report(
            &m,
            &phi,
            &[Property::empty(1)],
            &Property::unary([1]),
            &Budget::default(),
        )
        .unwrap();
        assert!(r.empty_product);
        for mode in PreservationMode::ALL {
            assert_eq!(r.holds(mode), mode.is_universal(), "{mode}");
        }
    }

    #[test]
    fn full_report_witnesses_on_c4() {
        let m = fixtures::fix2();
        let phi = fx(&m, "R(x,y)");
        let r = full_report(
            &m,
            &phi,
            &[Property::unary([0, 1])],
            &Property::unary([1]),
            &Budget::default(),
        )
        .unwrap();
        assert!(!r.holds(ForallPartiallyPreserved));
        assert_eq!(r.witness(ForallPartiallyPreserved), Some(&vec![vec![1]]));
        assert!(r.holds(ExistsPartiallyPreserved));
        assert_eq!(r.witness(ExistsPartiallyPreserved), Some(&vec![vec![0]]));
    }

    #[test]
    fn empty_solutions_count_for_both_sides() {
        let m = fixtures::fix2();
        let phi = fx(&m, "false");
        let q = Property::unary([1]);
        let r = full_report(&m, &phi, &[Property::unary([0, 1])], &q, &Budget::default()).unwrap();
        assert!(r.holds(TotallyPreserved));
        assert!(r.holds(TotallyDisjoint));
        assert_eq!(r.empty_solutions.len(), 2);
    }

    #[test]
    fn arity_mismatch_rejected() {
        let m = fixtures::fix2();
        let phi = fx(&m, "R(x,y)");
        let b = Budget::default();
        assert!(matches!(
            check_preservation(
                &m,
                &phi,
                &[Property::full(4, 2)],
                &Property::unary([1]),
                TotallyPreserved,
                &b
            ),
            Err(Error::ArityMismatch(_))
        ));
        assert!(matches!(
            check_preservation(&m, &phi, &[], &Property::unary([1]), TotallyPreserved, &b),
            Err(Error::ArityMismatch(_))
        ));
        assert!(matches!(
            check_preservation(
                &m,
                &phi,
                &[Property::unary([0])],
                &Property::full(4, 2),
                TotallyPreserved,
                &b
            ),
            Err(Error::ArityMismatch(_))
        ));
    }

    #[test]
    fn reduce_examples() {
        let m = fixtures::fix4();
        let phi = BlockType::parse(
            &[&["x1"], &["x2"]],
            &["y"],
            &["add(x1,x2) = y"],
            m.signature(),
        )
        .unwrap();
        let ps = [Property::unary([0, 2]), Property::unary([0, 2])];
        let (merged, prod) = reduce_to_product(&phi, &ps);
        assert_eq!(
            merged.parameter_blocks(),
            &[vec!["x1".to_string(), "x2".to_string()]]
        );
        let expected = Property::new(2, [vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2]]).unwrap();
        assert_eq!(prod, expected);
        let b = Budget::default();
        let q = Property::unary([0, 2]);
        for mode in PreservationMode::ALL {
            assert_eq!(
                check_preservation(&m, &phi, &ps, &q, mode, &b).unwrap(),
                check_preservation(&m, &merged, &[prod.clone()], &q, mode, &b).unwrap()
            );
        }

        let one = fx(&m, "add(x,x) = y");
        let (same, p) = reduce_to_product(&one, &[Property::unary([1])]);
        assert_eq!(same, one);
        assert_eq!(p, Property::unary([1]));

        let zero = BlockType::parse(&[], &["y"], &["add(y,y) = y"], m.signature()).unwrap();
        let (z, unit) = reduce_to_product(&zero, &[]);
        assert_eq!(z.formulas(), zero.formulas());
        assert_eq!(unit.len(), 1);
        assert_eq!(unit.arity(), 0);
        let q = Property::unary([0]);
        for mode in PreservationMode::ALL {
            assert_eq!(
                check_preservation(&m, &zero, &[], &q, mode, &b).unwrap(),
                check_preservation(&m, &z, &[unit.clone()], &q, mode, &b).unwrap()
            );
        }
    }

    #[test]
    fn type_defined_sets() {
        let b = Budget::default();
        let m2 = fixtures::fix2();
        let r = type_defined_set_characterization(&m2, &fx(&m2, "R(x,y)"), &[vec![0]], &b).unwrap();
        assert_eq!(r.set, Property::unary([1, 3]));
        assert!(r.checks());
        let r = type_defined_set_characterization(&m2, &fx(&m2, "false"), &[vec![0]], &b).unwrap();
        assert!(r.set.is_empty());
        assert!(r.checks());
        let m1 = fixtures::fix1();
        let r =
            type_defined_set_characterization(&m1, &fx(&m1, "f(x) = y"), &[vec![0]], &b).unwrap();
        assert_eq!(r.set, Property::unary([1]));
        assert!(r.checks());
    }

    #[test]
    fn pq_examples() {
        let b = Budget::default();
        let m3 = fixtures::fix3();
        let phi = fx(&m3, "R(x,y)");
        let v = pq_preservation(
            &m3,
            &phi,
            &Property::unary([1]),
            &Property::unary([0, 2]),
            &b,
        )
        .unwrap();
        assert_eq!(
            v,
            PqVerdict {
                existential: true,
                total: true
            }
        );
        let v = pq_preservation(
            &m3,
            &phi,
            &Property::unary([0, 2]),
            &Property::unary([1]),
            &b,
        )
        .unwrap();
        assert_eq!(
            v,
            PqVerdict {
                existential: true,
                total: true
            }
        );
        let m2 = fixtures::fix2();
        let all = Property::unary(0..4);
        let v = pq_preservation(&m2, &fx(&m2, "R(x,y)"), &all, &all, &b).unwrap();
        assert_eq!(
            v,
            PqVerdict {
                existential: true,
                total: true
            }
        );
        assert!(matches!(
            pq_preservation(&m3, &phi, &Property::unary([0]), &Property::unary([1]), &b),
            Err(Error::NotAnOrbit(_))
        ));
    }

    #[test]
    fn sublattice_examples() {
        let b = Budget::default();
        let m = fixtures::fix2();
        let t = BlockType::parse(&[], &["y"], &["true"], m.signature()).unwrap();
        let s = preserving_sublattice(&m, &t, &[], &Property::unary(0..4), &b).unwrap();
        assert_eq!(s.family, vec![Property::unary(0..4)]);

        let m = FiniteStructure::builder(4)
            .relation("R", 2, m.relation("R").unwrap().iter().cloned())
            .constant("a", 1)
            .constant("b", 2)
            .build()
            .unwrap();
        let t = BlockType::parse(&[], &["y"], &["y != a", "y != b"], m.signature()).unwrap();
        let s = preserving_sublattice(&m, &t, &[], &Property::unary([0, 3]), &b).unwrap();
        assert_eq!(s.family, vec![Property::unary([0, 3])]);
        assert_eq!(s.members.len(), 1);
        assert!(s.least_is_minimum);

        // Two preserving formulas over the whole universe: distinct sets, but
        // their union is not a solution set of any sub-list.
        let s = preserving_sublattice(&m, &t, &[], &Property::unary(0..4), &b).unwrap();
        assert_eq!(
            s.family,
            vec![
                Property::unary([0, 3]),
                Property::unary([0, 1, 3]),
                Property::unary([0, 2, 3])
            ]
        );
        assert!(s.closed_under_intersection);
        assert!(!s.closed_under_union);
        assert_eq!(s.maximal.len(), 2);

        assert!(matches!(
            preserving_sublattice(&m, &t, &[], &Property::unary([0]), &b),
            Err(Error::NotPreserving(_))
        ));
    }
}
