//! Embedded isotope table and physical constants.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::Serialize;

/// CODATA 2018 values, SI units.
pub mod constants {
    /// Vacuum permeability, N A⁻².
    pub const MU0: f64 = 1.256_637_062_12e-6;
    /// Planck constant, J s (exact).
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsotopeRecord {
    pub symbol: String,
    /// Twice the spin quantum number.
    pub spin_x2: u32,
    /// Gyromagnetic ratio, rad s⁻¹ T⁻¹.
    pub gamma: f64,
}

impl IsotopeRecord {
    pub fn spin(&self) -> f64 {
        f64::from(self.spin_x2) / 2.0
    }

    pub fn is_magnetic(&self) -> bool {
        self.spin_x2 > 0 && self.gamma != 0.0
    }

    pub fn is_electron(&self) -> bool {
        self.symbol == ELECTRON
    }
}

pub const ELECTRON: &str = "E";

const DATA: &str = include_str!("../data/isotopes.csv");

fn parse_spin(s: &str) -> u32 {
    match s.split_once('/') {
        Some((n, "2")) => n.parse().expect("isotope table spin"),
        _ => 2 * s.parse::<u32>().expect("isotope table spin"),
    }
}

fn table() -> &'static HashMap<String, IsotopeRecord> {
    static TABLE: OnceLock<HashMap<String, IsotopeRecord>> = OnceLock::new();
    TABLE.get_or_init(|| {
        DATA.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                let rec = IsotopeRecord {
                    symbol: f[0].to_owned(),
                    spin_x2: parse_spin(f[1]),
                    gamma: f[2].parse().expect("isotope table gamma"),
                };
                (rec.symbol.clone(), rec)
            })
            .collect()
    })
}

pub fn lookup(symbol: &str) -> Option<&'static IsotopeRecord> {
    table().get(symbol)
}

/// All records, sorted by symbol.
pub fn all() -> Vec<&'static IsotopeRecord> {
    let mut v: Vec<_> = table().values().collect();
    v.sort_by(|a, b| a.symbol.cmp(&b.symbol));
    v
}

pub fn is_electron(symbol: &str) -> bool {
    symbol == ELECTRON
}

/// Element part of an isotope string: `"13C"` → `"C"`. Electrons map to `"E"`.
pub fn element_of(symbol: &str) -> &str {
    symbol.trim_start_matches(|c: char| c.is_ascii_digit())
}

/// Isotope guessed for an element symbol by the XYZ importer: the most
/// abundant natural isotope.
pub fn most_abundant(element: &str) -> Option<&'static str> {
    Some(match element {
        "H" => "1H",
        "Li" => "7Li",
        "B" => "11B",
        "C" => "12C",
        "N" => "14N",
        "O" => "16O",
        "F" => "19F",
        "Na" => "23Na",
        "Al" => "27Al",
        "Si" => "28Si",
        "P" => "31P",
        "S" => "32S",
        "Cl" => "35Cl",
        _ => return None,
    })
}

/// Most abundant magnetic isotope of an element, used where an importer reports
/// magnetic properties for an atom.
pub fn magnetic_guess(element: &str) -> Option<&'static str> {
    Some(match element {
        "C" => "13C",
        "O" => "17O",
        "Si" => "29Si",
        "S" => "33S",
        other => return most_abundant(other),
    })
}

/// Normalizes element symbol capitalization: `"CL"` → `"Cl"`.
pub fn normalize_element(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for (i, c) in raw.chars().enumerate() {
        if i == 0 {
            out.extend(c.to_uppercase());
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Element symbol from an atomic number.
pub fn element_from_number(z: u32) -> Option<&'static str> {
    const SYMBOLS: [&str; 18] = [
        "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
        "Ar",
    ];
    SYMBOLS.get((z as usize).checked_sub(1)?).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn required_entries_present() {
        for s in ["1H", "2H", "13C", "14N", "15N", "17O", "19F", "31P", "E"] {
            assert!(lookup(s).unwrap().is_magnetic(), "{s}");
        }
        assert!(!lookup("16O").unwrap().is_magnetic());
        assert_eq!(lookup("17O").unwrap().spin(), 2.5);
        assert!(lookup("E").unwrap().is_electron());
        assert!(lookup("99Xx").is_none());
    }

    #[test]
    fn proton_to_carbon_ratio() {
        // Ratio of resonance frequencies at fixed field, 1H : 13C ≈ 3.976.
        let r = lookup("1H").unwrap().gamma / lookup("13C").unwrap().gamma;
        assert!((r - 3.976).abs() < 1e-3);
    }

    #[test]
    fn element_helpers() {
        assert_eq!(element_of("13C"), "C");
        assert_eq!(element_of("E"), "E");
        assert_eq!(normalize_element("CL"), "Cl");
        assert_eq!(element_from_number(8), Some("O"));
        assert_eq!(element_from_number(0), None);
        assert_eq!(most_abundant("C"), Some("12C"));
        assert_eq!(magnetic_guess("C"), Some("13C"));
        assert_eq!(magnetic_guess("H"), Some("1H"));
    }

    #[test]
    fn hbar_consistent_with_planck() {
        let h = constants::HBAR * 2.0 * std::f64::consts::PI;
        assert!((h / constants::PLANCK - 1.0).abs() < 1e-9);
    }
}
