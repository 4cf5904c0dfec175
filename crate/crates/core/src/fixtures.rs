//! The bundled example structures and properties.

use crate::sigstruct::{load_property, load_structure, FiniteStructure, Property};

pub const FIX1_TEXT: &str = include_str!("../fixtures/fix1.json");
pub const FIX1_P1_TEXT: &str = include_str!("../fixtures/fix1_P1.json");
pub const FIX1_P2_TEXT: &str = include_str!("../fixtures/fix1_P2.json");
pub const FIX1_Q_TEXT: &str = include_str!("../fixtures/fix1_Q.json");
pub const FIX2_TEXT: &str = include_str!("../fixtures/fix2.json");
pub const FIX3_TEXT: &str = include_str!("../fixtures/fix3.json");
pub const FIX4_TEXT: &str = include_str!("../fixtures/fix4.json");
pub const FIX5_TEXT: &str = include_str!("../fixtures/fix5.json");

/// Universe 4 with the unary map `f = [1,1,3,3]`.
pub fn fix1() -> FiniteStructure {
    load_structure(FIX1_TEXT).expect("bundled fixture")
}

pub fn fix1_p1() -> Property {
    load_property(FIX1_P1_TEXT, Some(4)).expect("bundled fixture")
}

pub fn fix1_p2() -> Property {
    load_property(FIX1_P2_TEXT, Some(4)).expect("bundled fixture")
}

pub fn fix1_q() -> Property {
    load_property(FIX1_Q_TEXT, Some(4)).expect("bundled fixture")
}

/// The 4-cycle.
pub fn fix2() -> FiniteStructure {
    load_structure(FIX2_TEXT).expect("bundled fixture")
}

/// The path 0-1-2.
pub fn fix3() -> FiniteStructure {
    load_structure(FIX3_TEXT).expect("bundled fixture")
}

/// Addition modulo 4.
pub fn fix4() -> FiniteStructure {
    load_structure(FIX4_TEXT).expect("bundled fixture")
}

/// A single edge 0-1 plus the isolated vertex 2.
pub fn fix5() -> FiniteStructure {
    load_structure(FIX5_TEXT).expect("bundled fixture")
}

pub fn structure_by_name(name: &str) -> Option<FiniteStructure> {
    match name.to_ascii_uppercase().as_str() {
        "FIX1" => Some(fix1()),
        "FIX2" => Some(fix2()),
        "FIX3" => Some(fix3()),
        "FIX4" => Some(fix4()),
        "FIX5" => Some(fix5()),
        _ => None,
    }
}

pub fn property_by_name(name: &str) -> Option<Property> {
    match name.to_ascii_uppercase().as_str() {
        "P1" => Some(fix1_p1()),
        "P2" => Some(fix1_p2()),
        "Q" => Some(fix1_q()),
        _ => None,
    }
}

pub fn all_structures() -> Vec<FiniteStructure> {
    vec![fix1(), fix2(), fix3(), fix4(), fix5()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        assert_eq!(fix1().apply("f", &[2]), Some(3));
        assert_eq!(fix2().relation("R").unwrap().len(), 8);
        assert_eq!(fix3().relation("R").unwrap().len(), 4);
        assert_eq!(fix5().relation("R").unwrap().len(), 2);
        assert_eq!(fix1_p1(), Property::unary([0]));
        assert_eq!(fix1_p2(), Property::unary([2]));
        assert_eq!(fix1_q(), Property::unary([1]));
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(structure_by_name("fix3"), Some(fix3()));
        assert!(structure_by_name("FIX9").is_none());
        assert_eq!(property_by_name("Q"), Some(fix1_q()));
    }
}
