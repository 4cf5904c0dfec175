//! Seeded random instances of the mode laws: implication lattice, duality
//! under complement and invariance under product reduction.

use preskit_core::preserve::{full_report, reduce_to_product, PreservationMode};
use preskit_core::sigstruct::complement_property;
use preskit_core::{random, BlockType, Budget, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use PreservationMode::*;

#[derive(Debug, Clone, Serialize)]
pub struct LawsReport {
    pub seed: u64,
    pub trials: usize,
    pub nonempty_products: usize,
    pub violations: Vec<String>,
}

const IMPLICATIONS: [(PreservationMode, PreservationMode); 4] = [
    (TotallyPreserved, ExistentiallyPreserved),
    (ForallPartiallyPreserved, ExistsPartiallyPreserved),
    (ForallPartiallyNonPreserved, ExistsPartiallyNonPreserved),
    (TotallyDisjoint, ExistentiallyDisjoint),
];

pub fn mode_laws(seed: u64, trials: usize, max_n: usize, budget: &Budget) -> Result<LawsReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LawsReport {
        seed,
        trials,
        nonempty_products: 0,
        violations: Vec::new(),
    };
    for trial in 0..trials {
        let m = random::structure(&mut rng, 1..=max_n.max(1));
        let n = m.size();
        let blocks = rng.gen_range(0..=2);
        let names: Vec<String> = (1..=blocks).map(|i| format!("x{i}")).collect();
        let mut vars: Vec<&str> = names.iter().map(String::as_str).collect();
        vars.push("y");
        let formulas = (0..rng.gen_range(1..=3))
            .map(|_| random::formula(&mut rng, m.signature(), &vars, 2))
            .collect();
        let ty = BlockType::new(
            names.iter().map(|v| vec![v.clone()]).collect(),
            vec!["y".into()],
            formulas,
        )?;
        let ps: Vec<_> = (0..blocks)
            .map(|_| random::property(&mut rng, n, 1, 0.5))
            .collect();
        let q = random::property(&mut rng, n, 1, 0.5);

        let r = full_report(&m, &ty, &ps, &q, budget)?;
        let mut fail = |law: &str| report.violations.push(format!("trial {trial}: {law}"));
        if !r.empty_product {
            for (a, b) in IMPLICATIONS {
                if r.holds(a) && !r.holds(b) {
                    fail(&format!("{a} without {b}"));
                }
            }
        }
        let dual = full_report(&m, &ty, &ps, &complement_property(&m, &q)?, budget)?;
        if r.holds(TotallyPreserved) != dual.holds(TotallyDisjoint) {
            fail("total duality");
        }
        if r.holds(ExistentiallyPreserved) != dual.holds(ExistentiallyDisjoint) {
            fail("existential duality");
        }
        let (merged, product) = reduce_to_product(&ty, &ps);
        let reduced = full_report(&m, &merged, &[product], &q, budget)?;
        for mode in PreservationMode::ALL {
            if r.holds(mode) != reduced.holds(mode) {
                fail(&format!("product reduction changes {mode}"));
            }
        }
        if !r.empty_product {
            report.nonempty_products += 1;
        }
    }
    Ok(report)
}
