//! Numeric tolerances shared by all modules.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericSettings {
    /// Backward-error tolerance accepted for a computed root.
    pub root_tol: f64,
    pub root_max_iter: usize,
    /// Computed roots closer than this (relative to the root scale) are merged
    /// into one root of higher multiplicity.
    pub multiplicity_cluster: f64,
    /// Two listed distinct poles must be at least this far apart.
    pub pole_separation: f64,
    /// Relative tolerance when validating a root list against a denominator.
    pub root_validation: f64,
    /// Residues below this magnitude (relative to the rational function scale)
    /// are treated as absent.
    pub residue_floor: f64,
    /// Scaled threshold under which a polynomial counts as zero.
    pub zero_poly: f64,
    /// Relative remainder tolerance for exact polynomial division.
    pub division: f64,
    /// Minimum distance from the arrangement.
    pub arrangement_separation: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self {
            root_tol: 1e-10,
            root_max_iter: 500,
            multiplicity_cluster: 1e-6,
            pole_separation: 1e-8,
            root_validation: 1e-8,
            residue_floor: 1e-12,
            zero_poly: 1e-9,
            division: 1e-8,
            arrangement_separation: 1e-10,
        }
    }
}
