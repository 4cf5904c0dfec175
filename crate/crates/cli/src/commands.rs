use std::collections::BTreeMap;
use std::path::Path;

use preskit_core::algebra::{
    check_graded_partition, enumerate_congruences, is_congruence, is_subuniverse,
    EquivalenceRelation,
};
use preskit_core::eval::{eval_formula, solution_set_with, Assignment};
use preskit_core::graphs::{
    blocks_independent, check_partition, component_analysis, components, distance_witnesses,
    find_k_partition, minimal_preserved_sets, reconstruct_components, subdivide, Graph,
};
use preskit_core::logic::{load_suite, parse_formula};
use preskit_core::modelbuild::{
    build_canonical_model, check_preserving_condition, counting_suite, default_henkin_suite,
    load_theory, tarski_vaught_test, SubstructureEmbedding,
};
use preskit_core::orbits::{canonical_trace, trace_over_properties, Symmetry};
use preskit_core::preserve::{full_report, PreservationMode};
use preskit_core::sigstruct::{load_partition, load_property};
use preskit_core::{Budget, Error, FiniteStructure, FormulaSuite, Property, Result};
use serde_json::{json, Value};

use crate::input::{self, TypeLayout};
use crate::{corpus, AlgebraCommand, Cli, Command, GraphArgs, GraphCommand, Outcome, TypeArgs};

mod laws;

fn layout(t: &TypeArgs) -> TypeLayout<'_> {
    TypeLayout {
        result: t.result.as_deref(),
        blocks: t.blocks.as_deref(),
    }
}

fn structure_value(m: &FiniteStructure) -> Value {
    serde_json::from_str(&m.to_json_string()).expect("structure JSON parses")
}

fn assignment(arg: &str) -> Result<Assignment> {
    let mut out = Assignment::new();
    for part in arg.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (var, val) = part.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("expected `var=element`, found `{part}`"))
        })?;
        let val = val
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("`{val}` is not an element")))?;
        out.insert(var.trim().to_string(), val);
    }
    Ok(out)
}

fn graph(g: &GraphArgs, base: &Path, max: usize) -> Result<Graph> {
    Graph::new(input::structure(&g.structure, base, max)?, g.directed)
}

/// Reads `--equiv` as a binary property or, failing that, a partition.
fn equivalence(arg: &str, base: &Path, n: usize) -> Result<EquivalenceRelation> {
    let text = input::text(arg, base)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("blocks").is_some() {
        Ok(EquivalenceRelation::from_partition(
            n,
            &load_partition(&text, n)?,
        ))
    } else {
        EquivalenceRelation::new(n, &load_property(&text, Some(n))?)
    }
}

pub fn run(cli: &Cli, base: &Path, budget: &Budget) -> Result<Outcome> {
    let max = cli.max_universe;
    match &cli.command {
        Command::Eval {
            structure,
            formula,
            assign,
            ty,
            result,
            blocks,
            params,
        } => {
            let m = input::structure(structure, base, max)?;
            if let Some(f) = formula {
                let phi = parse_formula(&input::text(f, base)?, m.signature())?;
                let value = eval_formula(&m, &phi, &assignment(assign)?)?;
                return Ok(Outcome::new(
                    &json!({ "formula": phi.unparse(), "value": value }),
                    value,
                ));
            }
            let ty = ty
                .as_deref()
                .ok_or_else(|| Error::InvalidInput("eval needs --formula or --type".into()))?;
            let layout = TypeLayout {
                result: result.as_deref(),
                blocks: blocks.as_deref(),
            };
            let ty = input::block_type(ty, base, m.signature(), &layout)?;
            let sol = solution_set_with(&m, &ty, &input::params(params)?, budget)?;
            Ok(Outcome::new(
                &json!({ "type": ty.to_file(), "size": sol.len(), "solution_set": sol }),
                true,
            ))
        }
        Command::Check {
            structure,
            ty,
            props,
            target,
            mode,
        } => {
            let m = input::structure(structure, base, max)?;
            let t = input::block_type(&ty.ty, base, m.signature(), &layout(ty))?;
            let ps = input::properties(props, base, m.size())?;
            let q = input::property(target, base, m.size())?;
            let mode: Option<PreservationMode> = mode.as_deref().map(str::parse).transpose()?;
            let report = full_report(&m, &t, &ps, &q, budget)?;
            let holds = mode.map_or(true, |md| report.holds(md));
            Ok(Outcome::new(
                &json!({ "mode": mode.map(|md| md.name()), "holds": mode.map(|_| holds), "report": report }),
                holds,
            ))
        }
        Command::Trace {
            structure,
            ty,
            params,
            props,
        } => {
            let m = input::structure(structure, base, max)?;
            let t = input::block_type(&ty.ty, base, m.signature(), &layout(ty))?;
            let sym = Symmetry::new(&m, budget)?;
            let trace = match props {
                Some(p) => trace_over_properties(&sym, &t, &input::properties(p, base, m.size())?)?,
                None => canonical_trace(&sym, &t, &input::params(params)?)?,
            };
            Ok(Outcome::new(
                &json!({ "count": trace.len(), "is_singleton": trace.len() == 1, "trace": trace }),
                true,
            ))
        }
        Command::Aut {
            structure,
            orbits,
            tuple,
        } => {
            let m = input::structure(structure, base, max)?;
            let sym = Symmetry::new(&m, budget)?;
            let mut body = json!({ "group": sym.group() });
            if let Some(k) = orbits {
                body["orbits"] = serde_json::to_value(sym.orbits(*k)?)?;
            }
            if let Some(t) = tuple {
                let t = input::params(t)?.concat();
                body["orbit"] = serde_json::to_value(sym.orbit_of_tuple(&t)?)?;
            }
            Ok(Outcome::new(&body, true))
        }
        Command::Algebra(cmd) => algebra(cmd, base, max, budget),
        Command::Graph(cmd) => graph_command(cmd, base, max, budget),
        Command::Henkin { theory, suite } => {
            let t = load_theory(&input::text(theory, base)?)?;
            let model = build_canonical_model(&t, budget)?;
            let sig = model.structure.signature().clone();
            let suite = match suite {
                Some(s) => load_suite(&input::text(s, base)?, &sig)?,
                None => default_henkin_suite(&sig)?,
            };
            let report = check_preserving_condition(&model, &t, &suite, budget)?;
            let witnesses: Vec<Value> = model
                .henkin_witnesses
                .iter()
                .map(|(s, w)| json!({ "sentence": s, "witness": w }))
                .collect();
            let holds = report.violations == 0;
            Ok(Outcome::new(
                &json!({
                    "model": structure_value(&model.structure),
                    "class_map": model.class_map,
                    "classes": model.classes,
                    "henkin_witnesses": witnesses,
                    "preserving": report,
                }),
                holds,
            ))
        }
        Command::Tv {
            structure,
            sub,
            suite,
            counting,
        } => {
            let m = input::structure(structure, base, max)?;
            let n = input::property(sub, base, m.size())?;
            let mut entries = match suite {
                Some(s) => load_suite(&input::text(s, base)?, m.signature())?
                    .entries()
                    .to_vec(),
                None => Vec::new(),
            };
            if let Some(k) = counting {
                entries.extend(counting_suite(*k)?.entries().iter().cloned());
            }
            if entries.is_empty() {
                return Err(Error::InvalidInput("tv needs --suite or --counting".into()));
            }
            let suite = FormulaSuite::new(entries)?;
            let e = SubstructureEmbedding::new(m, n, budget)?;
            let report = tarski_vaught_test(&e, &suite, budget)?;
            let holds = report.pass;
            Ok(Outcome::new(&report, holds))
        }
        Command::Corpus { dir, update } => {
            let summary = corpus::run_corpus(&base.join(dir), *update)?;
            let holds = summary.failed.is_empty();
            Ok(Outcome::new(&summary, holds))
        }
        Command::Laws { trials } => {
            let report = laws::mode_laws(cli.seed, *trials, max.min(6), budget)?;
            let holds = report.violations.is_empty();
            Ok(Outcome::new(&report, holds))
        }
    }
}

fn algebra(cmd: &AlgebraCommand, base: &Path, max: usize, budget: &Budget) -> Result<Outcome> {
    match cmd {
        AlgebraCommand::Sub { structure, prop } => {
            let m = input::structure(structure, base, max)?;
            let p = input::property(prop, base, m.size())?;
            let v = is_subuniverse(&m, &p, budget)?;
            Ok(Outcome::new(
                &json!({ "verdict": v, "agree": v.agree() }),
                v.via_direct,
            ))
        }
        AlgebraCommand::Cong { structure, equiv } => {
            let m = input::structure(structure, base, max)?;
            let e = equivalence(equiv, base, m.size())?;
            let v = is_congruence(&m, &e, budget)?;
            Ok(Outcome::new(
                &json!({ "equivalence": e, "verdict": v, "agree": v.agree() }),
                v.via_direct,
            ))
        }
        AlgebraCommand::Congs { structure } => {
            let m = input::structure(structure, base, max)?;
            let all = enumerate_congruences(&m, budget)?;
            Ok(Outcome::new(
                &json!({ "count": all.len(), "congruences": all }),
                true,
            ))
        }
        AlgebraCommand::Graded {
            structure,
            partition,
            op,
        } => {
            let m = input::structure(structure, base, max)?;
            let b = input::partition(partition, base, m.size())?;
            let g = check_graded_partition(&m, op, &b, budget)?;
            let holds = g.ok;
            Ok(Outcome::new(&g, holds))
        }
    }
}

fn graph_command(cmd: &GraphCommand, base: &Path, max: usize, budget: &Budget) -> Result<Outcome> {
    match cmd {
        GraphCommand::Partite { g, k, partition } => {
            let g = graph(g, base, max)?;
            if let Some(b) = partition {
                let b = input::partition(b, base, g.size())?;
                let via = check_partition(&g, &b, budget)?;
                let direct = blocks_independent(&g, &b);
                return Ok(Outcome::new(
                    &json!({ "blocks": b.len(), "via_preservation": via, "via_direct": direct }),
                    via,
                ));
            }
            let k =
                k.ok_or_else(|| Error::InvalidInput("partite needs --k or --partition".into()))?;
            let found = find_k_partition(&g, k, budget)?;
            let body = json!({
                "k": k,
                "found": found.is_some(),
                "partition": found.as_ref().map(|p| p.blocks().to_vec()),
            });
            Ok(Outcome::new(&body, found.is_some()))
        }
        GraphCommand::Components { g, prop } => {
            let g = graph(g, base, max)?;
            match prop {
                Some(p) => {
                    let p = input::property(p, base, g.size())?;
                    let v = component_analysis(&g, &p, budget)?;
                    let holds = v.is_union_of_components;
                    Ok(Outcome::new(
                        &json!({ "verdict": v, "agree": v.agree() }),
                        holds,
                    ))
                }
                None => {
                    let comps = components(&g);
                    let minimal = minimal_preserved_sets(&g, budget)?;
                    let agree = {
                        let mut a: Vec<&Property> = comps.iter().collect();
                        let mut b: Vec<&Property> = minimal.iter().collect();
                        a.sort();
                        b.sort();
                        a == b
                    };
                    Ok(Outcome::new(
                        &json!({ "components": comps, "minimal_preserved_sets": minimal, "agree": agree }),
                        true,
                    ))
                }
            }
        }
        GraphCommand::Diameter { g } => {
            let g = graph(g, base, max)?;
            let report = distance_witnesses(&g, budget)?;
            let holds = report.diameter == report.diameter_from_witnesses;
            Ok(Outcome::new(&report, holds))
        }
        GraphCommand::Subdivide { g, n } => {
            let g = graph(g, base, max)?;
            let s = subdivide(&g, *n, budget)?;
            let seeds: Vec<usize> = (0..g.size()).collect();
            let rebuilt = reconstruct_components(&s.graph, &seeds, *n, budget)?;
            let restricted: BTreeMap<usize, Property> = seeds
                .iter()
                .zip(&rebuilt)
                .map(|(&v, p)| (v, Property::unary(p.elements().filter(|&e| e < g.size()))))
                .collect();
            let original = components(&g);
            let recovered = restricted
                .iter()
                .all(|(v, p)| original.iter().any(|c| c.contains(&[*v]) && c == p));
            let holds = s.layers_preserved && recovered;
            Ok(Outcome::new(
                &json!({
                    "graph": structure_value(s.graph.structure()),
                    "layers": s.layers,
                    "layers_preserved": s.layers_preserved,
                    "reconstructed": restricted,
                    "components_recovered": recovered,
                }),
                holds,
            ))
        }
    }
}
