//! Residual checks of the exact operator identities, inequalities and counting bounds of the model.
//!
//! Every check is registered in [`REGISTRY`]; a run reports one [`IdentityReport`] per
//! registered identity and parameter tuple.

mod algebra;
mod battery;
mod counts;
mod decoupling;

pub use algebra::{check_appendix_a, check_positivity_and_spectrum, check_resolvent_identities};
pub use battery::{
    default_geometries, identity_battery, run_all, BatteryConfig, BatteryOutcome, IdentitySummary,
};
pub use counts::{check_trace_counts, cluster_census_formula};
pub use decoupling::{check_decoupling, DecouplingGeometry};

use serde::{Deserialize, Serialize};

/// Absolute tolerance for identities without a resolvent.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance multiplier applied to the condition number for resolvent identities.
pub const CONDITION_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Algebra,
    Positivity,
    Resolvent,
    Decoupling,
    Counting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Pass or fail against the tolerance.
    Check,
    /// Printed for information; the residual is measured against the computed convention.
    Info,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityInfo {
    pub id: &'static str,
    pub group: Group,
    pub kind: Kind,
    pub statement: &'static str,
}

const fn check(id: &'static str, group: Group, statement: &'static str) -> IdentityInfo {
    IdentityInfo {
        id,
        group,
        kind: Kind::Check,
        statement,
    }
}

pub const REGISTRY: &[IdentityInfo] = &[
    check("pminus_single_site", Group::Algebra, "P-^{i} = N_i"),
    check("pminus_pair", Group::Algebra, "P-^{i,j} = N_i + N_j - N_i N_j = P+^{j} N_i + N_j"),
    IdentityInfo {
        id: "bond_spectrum",
        group: Group::Algebra,
        kind: Kind::Info,
        statement: "eigenvalues of the bond term are -1, 0, +-1/(2 delta)",
    },
    check("bond_norm_one", Group::Algebra, "||h_{i,i+1}|| = 1"),
    check("bond_kills_empty_pair", Group::Algebra, "h P+^{i,i+1} = P+^{i,i+1} h = 0"),
    check("bond_edge_norm", Group::Algebra, "||P+^{i} h|| = ||P+^{i+1} h|| = 1/(2 delta)"),
    check("bond_edge_compression_zero", Group::Algebra, "P+^{i} h P+^{i} = P+^{i+1} h P+^{i+1} = 0"),
    check("bond_double_occupation", Group::Algebra, "h N_i N_{i+1} = N_i N_{i+1} h = N_i N_{i+1} h N_i N_{i+1}"),
    check("bond_pminus_support", Group::Algebra, "h = h P-^{i,i+1} = P-^{i,i+1} h = P-^{i,i+1} h P-^{i,i+1}"),
    check("crossing_boundary_support", Group::Algebra, "Gamma^K = P-^{dK} Gamma^K P-^{dK}"),
    check("crossing_edge_bound", Group::Algebra, "||P+^K Gamma^K||, ||P+^{K^c} Gamma^K|| <= 1/delta for connected K"),
    check("resolution_exterior", Group::Algebra, "P-^{[M]_inf} P+^M = sum_{q>=0} P+^{[M]_q} P-^{]M[_q} = sum_{q>=0} P+^{[M]_q} P-^{d_ex [M]_q}"),
    check("resolution_interior", Group::Algebra, "P-^M = sum_{q<0} P+^{[M]_q} P-^{]M[_q} = sum_{q<0} P+^{[M]_q} P-^{d_in [M]_{q+1}}"),
    check("resolution_component", Group::Algebra, "P-^{[M]_inf} = sum_{q=-|M|}^{|L|} P+^{[M]_q} P-^{]M[_q}"),
    check("two_site_positivity", Group::Positivity, "(N_i + N_{i+1})/2 - N_i N_{i+1} -+ (hopping)/2 >= 0"),
    check("cluster_hopping_bound", Group::Positivity, "W +- (hopping)/2 >= 0"),
    check("free_energy_cluster_sandwich", Group::Positivity, "(1 - 1/delta) W <= H0 <= (1 + 1/delta) W and (1 - 1/delta) W <= H"),
    check("dressed_energy_floor", Group::Positivity, "H_k lifted >= (k + 1)(1 - 1/delta) for k <= 3"),
    check("spectral_gap", Group::Positivity, "spectrum of H inside {0} u [1 - 1/delta, inf)"),
    check("vacuum_ground_state", Group::Positivity, "H vacuum = 0 and the vacuum is the unique ground state"),
    check("diagonal_commutation", Group::Positivity, "W, N, V, Q_B and P+- commute pairwise"),
    check("number_conservation", Group::Positivity, "[H, N] = 0 on the Kronecker-built full space"),
    check("kron_route_agreement", Group::Positivity, "sector-blocked and Kronecker-built H coincide"),
    check("component_projector_commutation", Group::Positivity, "[H, P+-^{[M]_inf}] = 0"),
    check("resolvent_identity_left", Group::Resolvent, "R = R_k + k g R Q_k R_k"),
    check("resolvent_identity_right", Group::Resolvent, "R = R_k + k g R_k Q_k R"),
    check("resolvent_second_order", Group::Resolvent, "R = R_k + k g R_k Q_k R_k + (k g)^2 R_k Q_k R Q_k R_k"),
    check("decoupling_geometric", Group::Decoupling, "first-order resolvent expansion across the boundary of K"),
    check("decoupling_boundary_insert", Group::Decoupling, "boundary projections inserted around Gamma^K"),
    check("decoupling_outer", Group::Decoupling, "expansion across the boundary of [K]_1"),
    check("decoupling_formula", Group::Decoupling, "two-sided decoupling formula"),
    check("decoupling_independence", Group::Decoupling, "outer factors unchanged when the field on d_ex K is redrawn"),
    check("cluster_projector_hs_bound", Group::Counting, "||Q_{<=k}||_HS <= sqrt(k) |L|^k"),
    check("low_energy_count_bound", Group::Counting, "tr chi_{(-inf,(k+1)g)}(H) <= k |L|^{2k} + 1"),
    check("cluster_count_closed_form", Group::Counting, "configuration counts by cluster number match the closed form"),
];

pub fn info(id: &str) -> Option<&'static IdentityInfo> {
    REGISTRY.iter().find(|i| i.id == id)
}

/// Residual of one identity at one parameter tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub id: String,
    pub params: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub info: bool,
    pub notes: String,
}

impl IdentityReport {
    pub(crate) fn new(
        id: &str,
        params: &str,
        residual: f64,
        tol: f64,
        notes: impl Into<String>,
    ) -> Self {
        let entry = info(id).unwrap_or_else(|| panic!("identity {id} is not registered"));
        IdentityReport {
            id: id.to_string(),
            params: params.to_string(),
            residual,
            tol,
            pass: residual < tol,
            info: entry.kind == Kind::Info,
            notes: notes.into(),
        }
    }
}

/// Effective tolerance for an identity involving solves with the given condition number.
pub fn resolvent_tol(tol: f64, condition: f64) -> f64 {
    if condition.is_finite() {
        tol.max(CONDITION_TOL * condition)
    } else {
        tol
    }
}
