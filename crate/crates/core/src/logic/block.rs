use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{fresh_name, parse_formula, Formula, Term};
use crate::error::{Error, Result};
use crate::sigstruct::Signature;

/// A finite list of formulas over parameter blocks `x̄1,…,x̄n` and a result block `ȳ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockType {
    parameter_blocks: Vec<Vec<String>>,
    result_block: Vec<String>,
    formulas: Vec<Formula>,
}

impl BlockType {
    pub fn new(
        parameter_blocks: Vec<Vec<String>>,
        result_block: Vec<String>,
        formulas: Vec<Formula>,
    ) -> Result<Self> {
        if result_block.is_empty() {
            return Err(Error::BlockMismatch("result block must be nonempty".into()));
        }
        if formulas.is_empty() {
            return Err(Error::BlockMismatch(
                "a type needs at least one formula".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for name in parameter_blocks.iter().flatten().chain(&result_block) {
            if !seen.insert(name.clone()) {
                return Err(Error::VariableCollision(format!(
                    "variable `{name}` appears in more than one block position"
                )));
            }
        }
        let params: BTreeSet<&String> = parameter_blocks.iter().flatten().collect();
        for f in &formulas {
            if let Some(v) = f.free_vars().into_iter().find(|v| !seen.contains(v)) {
                return Err(Error::BlockMismatch(format!(
                    "free variable `{v}` of `{f}` is not in any block"
                )));
            }
            if let Some(v) = f.bound_vars().into_iter().find(|v| params.contains(v)) {
                return Err(Error::VariableCollision(format!(
                    "bound variable `{v}` in `{f}` shadows a parameter variable"
                )));
            }
        }
        Ok(BlockType {
            parameter_blocks,
            result_block,
            formulas,
        })
    }

    /// Convenience constructor from string slices.
    pub fn from_names(params: &[&[&str]], result: &[&str], formulas: Vec<Formula>) -> Result<Self> {
        let own = |b: &[&str]| b.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        BlockType::new(
            params.iter().map(|b| own(b)).collect(),
            own(result),
            formulas,
        )
    }

    /// Parses each formula text against `signature`.
    pub fn parse(
        params: &[&[&str]],
        result: &[&str],
        formulas: &[&str],
        signature: &Signature,
    ) -> Result<Self> {
        let parsed = formulas
            .iter()
            .map(|t| parse_formula(t, signature))
            .collect::<Result<Vec<_>>>()?;
        BlockType::from_names(params, result, parsed)
    }

    pub fn parameter_blocks(&self) -> &[Vec<String>] {
        &self.parameter_blocks
    }

    pub fn result_block(&self) -> &[String] {
        &self.result_block
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    /// Number of parameter blocks.
    pub fn n(&self) -> usize {
        self.parameter_blocks.len()
    }

    /// Length of the result block.
    pub fn m(&self) -> usize {
        self.result_block.len()
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        self.parameter_blocks.iter().map(Vec::len).collect()
    }

    pub fn parameter_vars(&self) -> Vec<String> {
        self.parameter_blocks.iter().flatten().cloned().collect()
    }

    /// All block variables: parameters first, then the result block.
    pub fn block_vars(&self) -> Vec<String> {
        let mut out = self.parameter_vars();
        out.extend(self.result_block.iter().cloned());
        out
    }

    pub fn same_blocks(&self, other: &BlockType) -> bool {
        self.parameter_blocks == other.parameter_blocks && self.result_block == other.result_block
    }

    /// The same type with a different formula list.
    pub fn with_formulas(&self, formulas: Vec<Formula>) -> Result<BlockType> {
        BlockType::new(
            self.parameter_blocks.clone(),
            self.result_block.clone(),
            formulas,
        )
    }

    /// The single-formula type `⋀Φ`.
    pub fn conjunction(&self) -> BlockType {
        BlockType {
            parameter_blocks: self.parameter_blocks.clone(),
            result_block: self.result_block.clone(),
            formulas: vec![Formula::conj(self.formulas.iter().cloned())],
        }
    }

    /// The sub-list selected by a bitmask over formula positions.
    pub fn sublist(&self, mask: u64) -> Option<BlockType> {
        let formulas: Vec<Formula> = self
            .formulas
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, f)| f.clone())
            .collect();
        if formulas.is_empty() {
            return None;
        }
        Some(BlockType {
            parameter_blocks: self.parameter_blocks.clone(),
            result_block: self.result_block.clone(),
            formulas,
        })
    }

    /// Merges all parameter blocks into one.
    pub fn merged_parameters(&self) -> BlockType {
        BlockType {
            parameter_blocks: vec![self.parameter_vars()],
            result_block: self.result_block.clone(),
            formulas: self.formulas.clone(),
        }
    }

    pub fn to_file(&self) -> TypeFile {
        TypeFile {
            parameter_blocks: self.parameter_blocks.clone(),
            result_block: self.result_block.clone(),
            formulas: self.formulas.iter().map(Formula::unparse).collect(),
        }
    }
}

/// Serialized form of a [`BlockType`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct TypeFile {
    #[serde(default)]
    pub parameter_blocks: Vec<Vec<String>>,
    pub result_block: Vec<String>,
    pub formulas: Vec<String>,
}

impl TypeFile {
    pub fn resolve(&self, signature: &Signature) -> Result<BlockType> {
        let formulas = self
            .formulas
            .iter()
            .map(|t| parse_formula(t, signature))
            .collect::<Result<Vec<_>>>()?;
        BlockType::new(
            self.parameter_blocks.clone(),
            self.result_block.clone(),
            formulas,
        )
    }
}

pub fn load_type(text: &str, signature: &Signature) -> Result<BlockType> {
    let file: TypeFile = serde_json::from_str(text)?;
    file.resolve(signature)
}

/// An ordered list of types, each with a one-variable result block.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormulaSuite {
    entries: Vec<BlockType>,
}

impl FormulaSuite {
    pub fn new(entries: Vec<BlockType>) -> Result<Self> {
        if let Some(t) = entries.iter().find(|t| t.m() != 1) {
            return Err(Error::BlockMismatch(format!(
                "suite entries need a single result variable, found {:?}",
                t.result_block()
            )));
        }
        Ok(FormulaSuite { entries })
    }

    pub fn entries(&self) -> &[BlockType] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        let files: Vec<TypeFile> = self.entries.iter().map(BlockType::to_file).collect();
        let mut s = serde_json::to_string_pretty(&files).expect("serializes");
        s.push('\n');
        s
    }
}

/// Parses a JSON array of type objects.
pub fn load_suite(text: &str, signature: &Signature) -> Result<FormulaSuite> {
    let files: Vec<TypeFile> = serde_json::from_str(text)?;
    let entries = files
        .iter()
        .map(|f| f.resolve(signature))
        .collect::<Result<Vec<_>>>()?;
    FormulaSuite::new(entries)
}

fn check_same_blocks(phi: &BlockType, psi: &BlockType) -> Result<()> {
    if !phi.same_blocks(psi) {
        return Err(Error::BlockMismatch(format!(
            "blocks {:?}/{:?} differ from {:?}/{:?}",
            phi.parameter_blocks, phi.result_block, psi.parameter_blocks, psi.result_block
        )));
    }
    Ok(())
}

/// `{φ∨ψ | φ∈Φ, ψ∈Ψ}`.
pub fn type_disjunction(phi: &BlockType, psi: &BlockType) -> Result<BlockType> {
    check_same_blocks(phi, psi)?;
    let formulas = phi
        .formulas
        .iter()
        .flat_map(|a| psi.formulas.iter().map(move |b| a.clone().or(b.clone())))
        .collect();
    phi.with_formulas(formulas)
}

/// `Φ∪Ψ`, keeping first occurrences.
pub fn type_conjunction(phi: &BlockType, psi: &BlockType) -> Result<BlockType> {
    check_same_blocks(phi, psi)?;
    let mut formulas = phi.formulas.clone();
    for f in &psi.formulas {
        if !formulas.contains(f) {
            formulas.push(f.clone());
        }
    }
    phi.with_formulas(formulas)
}

/// The superposition type `S(Φ1,…,Φm,Ψ)`: every formula
/// `∃ȳ1…ȳm (φ1 ∧ … ∧ φm ∧ ψ)` with `φi ∈ Φi` and `ψ ∈ Ψ`.
///
/// Result blocks are renamed apart where they clash with each other or with
/// the result block of `Ψ`.
pub fn build_superposition_type(phis: &[BlockType], psi: &BlockType) -> Result<BlockType> {
    let first = phis.first().ok_or_else(|| {
        Error::BlockMismatch("superposition needs at least one inner type".into())
    })?;
    let xs = first.parameter_blocks.clone();
    let x_vars: BTreeSet<String> = xs.iter().flatten().cloned().collect();
    for phi in phis {
        if phi.parameter_blocks != xs {
            return Err(Error::BlockMismatch(format!(
                "inner types disagree on parameter blocks: {:?} vs {:?}",
                phi.parameter_blocks, xs
            )));
        }
        if let Some(y) = phi.result_block.iter().find(|y| x_vars.contains(*y)) {
            return Err(Error::VariableCollision(format!(
                "result variable `{y}` coincides with a parameter variable"
            )));
        }
    }
    if psi.n() != phis.len() {
        return Err(Error::BlockMismatch(format!(
            "outer type has {} parameter blocks but {} inner types were given",
            psi.n(),
            phis.len()
        )));
    }
    for (i, (block, phi)) in psi.parameter_blocks.iter().zip(phis).enumerate() {
        if block.len() != phi.m() {
            return Err(Error::BlockMismatch(format!(
                "outer parameter block {i} has length {} but inner result block has length {}",
                block.len(),
                phi.m()
            )));
        }
    }
    let zs = psi.result_block.clone();
    if let Some(z) = zs.iter().find(|z| x_vars.contains(*z)) {
        return Err(Error::VariableCollision(format!(
            "outer result variable `{z}` coincides with a parameter variable"
        )));
    }

    let mut used: BTreeSet<String> = x_vars.iter().chain(&zs).cloned().collect();
    for t in phis.iter().chain(std::iter::once(psi)) {
        for f in &t.formulas {
            used.extend(f.all_vars());
        }
    }
    let mut taken: BTreeSet<String> = x_vars.iter().chain(&zs).cloned().collect();
    let mut targets: Vec<Vec<String>> = Vec::with_capacity(phis.len());
    for phi in phis {
        let mut block = Vec::with_capacity(phi.m());
        for y in &phi.result_block {
            let name = if taken.contains(y) {
                let fresh = fresh_name(y, &used);
                used.insert(fresh.clone());
                fresh
            } else {
                y.clone()
            };
            taken.insert(name.clone());
            block.push(name);
        }
        targets.push(block);
    }

    let mut inner_renamed: Vec<Vec<Formula>> = Vec::with_capacity(phis.len());
    for (phi, target) in phis.iter().zip(&targets) {
        let map: BTreeMap<String, Term> = phi
            .result_block
            .iter()
            .zip(target)
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.clone(), Term::Var(b.clone())))
            .collect();
        inner_renamed.push(phi.formulas.iter().map(|f| f.substitute(&map)).collect());
    }
    let outer_map: BTreeMap<String, Term> = psi
        .parameter_blocks
        .iter()
        .flatten()
        .zip(targets.iter().flatten())
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.clone(), Term::Var(b.clone())))
        .collect();
    let outer: Vec<Formula> = psi
        .formulas
        .iter()
        .map(|f| f.rename_bound_apart(&x_vars).substitute(&outer_map))
        .collect();

    let binders: Vec<String> = targets.iter().flatten().cloned().collect();
    let mut formulas = Vec::new();
    let mut choice = vec![0usize; phis.len()];
    loop {
        for psi_f in &outer {
            let mut parts: Vec<Formula> = choice
                .iter()
                .zip(&inner_renamed)
                .map(|(&c, fs)| fs[c].clone())
                .collect();
            parts.push(psi_f.clone());
            let body = Formula::conj(parts);
            let closed = binders
                .iter()
                .rev()
                .fold(body, |acc, y| Formula::exists(y, acc));
            formulas.push(closed);
        }
        let mut i = choice.len();
        loop {
            if i == 0 {
                return BlockType::new(xs, zs, formulas);
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < inner_renamed[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sig2() -> Signature {
        fixtures::fix2().signature().clone()
    }

    #[test]
    fn invariants_enforced() {
        let s = sig2();
        assert!(BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], &s).is_ok());
        assert!(matches!(
            BlockType::parse(&[&["x"]], &["y"], &["R(x,z)"], &s),
            Err(Error::BlockMismatch(_))
        ));
        assert!(matches!(
            BlockType::parse(&[&["x"]], &["x"], &["R(x,x)"], &s),
            Err(Error::VariableCollision(_))
        ));
        assert!(matches!(
            BlockType::parse(&[&["x"]], &["y"], &["exists x. R(x,y)"], &s),
            Err(Error::VariableCollision(_))
        ));
        assert!(BlockType::parse(&[], &["y"], &[], &s).is_err());
        assert!(BlockType::parse(&[], &["y"], &["R(y,y)"], &s).is_ok());
    }

    #[test]
    fn disjunction_examples() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], &s).unwrap();
        let psi = BlockType::parse(&[&["x"]], &["y"], &["R(y,x)"], &s).unwrap();
        let d = type_disjunction(&phi, &psi).unwrap();
        assert_eq!(d.formulas().len(), 1);
        assert_eq!(d.formulas()[0].to_string(), "R(x,y) | R(y,x)");

        let phi2 = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)", "x = y"], &s).unwrap();
        let d2 = type_disjunction(&phi2, &psi).unwrap();
        let texts: Vec<String> = d2.formulas().iter().map(|f| f.to_string()).collect();
        assert_eq!(texts, vec!["R(x,y) | R(y,x)", "x = y | R(y,x)"]);

        let other = BlockType::parse(&[&["w"]], &["y"], &["R(w,y)"], &s).unwrap();
        assert!(matches!(
            type_disjunction(&phi, &other),
            Err(Error::BlockMismatch(_))
        ));
    }

    #[test]
    fn conjunction_examples() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], &s).unwrap();
        assert_eq!(type_conjunction(&phi, &phi).unwrap(), phi);
        let psi = BlockType::parse(&[&["x"]], &["y"], &["!R(y,x)"], &s).unwrap();
        let c = type_conjunction(&phi, &psi).unwrap();
        assert_eq!(c.formulas().len(), 2);
    }

    #[test]
    fn superposition_single() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], &s).unwrap();
        let psi = BlockType::parse(&[&["y"]], &["z"], &["R(y,z)"], &s).unwrap();
        let sup = build_superposition_type(&[phi], &psi).unwrap();
        assert_eq!(sup.formulas().len(), 1);
        assert_eq!(sup.formulas()[0].to_string(), "exists y. R(x,y) & R(y,z)");
        assert_eq!(sup.parameter_blocks(), &[vec!["x".to_string()]]);
        assert_eq!(sup.result_block(), &["z".to_string()]);
    }

    #[test]
    fn superposition_counts_formulas() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)", "x = y"], &s).unwrap();
        let psi = BlockType::parse(&[&["y"]], &["z"], &["R(y,z)", "y = z", "true"], &s).unwrap();
        let sup = build_superposition_type(&[phi], &psi).unwrap();
        assert_eq!(sup.formulas().len(), 6);
    }

    #[test]
    fn superposition_renames_clashing_result_blocks() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], &s).unwrap();
        let psi = BlockType::parse(&[&["u"], &["v"]], &["y"], &["R(u,y) & R(v,y)"], &s).unwrap();
        let sup = build_superposition_type(&[phi.clone(), phi], &psi).unwrap();
        let f = &sup.formulas()[0];
        assert_eq!(
            f.free_vars().into_iter().collect::<Vec<_>>(),
            vec!["x", "y"]
        );
        let bound = f.bound_vars();
        assert_eq!(bound.len(), 2);
        assert!(!bound.contains("y"));
    }

    #[test]
    fn superposition_errors() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y)"], &s).unwrap();
        let psi2 = BlockType::parse(&[&["a", "b"]], &["z"], &["R(a,z)"], &s).unwrap();
        assert!(matches!(
            build_superposition_type(&[phi.clone()], &psi2),
            Err(Error::BlockMismatch(_))
        ));
        let psi_x = BlockType::parse(&[&["y"]], &["x"], &["R(y,x)"], &s).unwrap();
        assert!(matches!(
            build_superposition_type(&[phi], &psi_x),
            Err(Error::VariableCollision(_))
        ));
    }

    #[test]
    fn type_file_round_trip() {
        let s = sig2();
        let phi = BlockType::parse(&[&["x"]], &["y"], &["R(x,y) & !R(y,x)"], &s).unwrap();
        let text = serde_json::to_string(&phi.to_file()).unwrap();
        assert_eq!(load_type(&text, &s).unwrap(), phi);
        let suite_text =
            r#"[{"parameterBlocks": [["x1"]], "resultBlock": ["y"], "formulas": ["R(x1,y)"]}]"#;
        let suite = load_suite(suite_text, &s).unwrap();
        assert_eq!(suite.len(), 1);
        let bad = r#"[{"parameterBlocks": [], "resultBlock": ["y","z"], "formulas": ["R(z,y)"]}]"#;
        assert!(load_suite(bad, &s).is_err());
    }
}
