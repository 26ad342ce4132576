//! Closed-form signaling and contextuality measures of a [`CyclicSystem`].
//!
//! Notation: `A_ij` is `a_i` recorded in context `(i,j)` and `B_ji` is `b_j`
//! recorded in the same context. Signaling of `a_i` compares its mean across
//! contexts `(i,1)` and `(i,2)`; signaling of `b_j` compares contexts `(1,j)`
//! and `(2,j)`.

use serde::{Deserialize, Serialize};

use crate::types::{ContextLabel, CyclicSystem, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalingProfile {
    /// `δ(a_i) = E[A_i1] - E[A_i2]` for `i = 1, 2`.
    pub delta_a: [f64; 2],
    /// `δ(b_j) = E[B_j1] - E[B_j2]` for `j = 1, 2`.
    pub delta_b: [f64; 2],
    /// Half the sum of absolute deltas.
    pub delta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshProfile {
    /// `|c11 + c12 + c21 + c22 - 2 c_ij|`, indexed by the subtracted context.
    pub expressions: [f64; 4],
    pub s_max: f64,
    /// `(s_max - 2) / 2`, negative when the CHSH bound has slack.
    pub delta_chsh: f64,
}

impl ChshProfile {
    pub fn satisfied(&self) -> bool {
        self.s_max <= 2.0 + DEFAULT_TOL
    }
}

fn ctx(i: i64, j: i64) -> ContextLabel {
    ContextLabel::new(i, j).expect("static context")
}

pub fn signaling_profile(system: &CyclicSystem) -> SignalingProfile {
    let m_a = |i, j| system.stats(ctx(i, j)).m_a;
    let m_b = |i, j| system.stats(ctx(i, j)).m_b;
    let delta_a = [m_a(1, 1) - m_a(1, 2), m_a(2, 1) - m_a(2, 2)];
    let delta_b = [m_b(1, 1) - m_b(2, 1), m_b(1, 2) - m_b(2, 2)];
    let delta0 = 0.5 * delta_a.iter().chain(&delta_b).map(|d| d.abs()).sum::<f64>();
    SignalingProfile {
        delta_a,
        delta_b,
        delta0,
    }
}

pub fn chsh_profile(system: &CyclicSystem) -> ChshProfile {
    chsh_from_covs(system.covs())
}

/// CHSH expressions from covariances in canonical context order.
pub fn chsh_from_covs(covs: [f64; 4]) -> ChshProfile {
    let total: f64 = covs.iter().sum();
    let expressions = covs.map(|c| (total - 2.0 * c).abs());
    let s_max = expressions
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    ChshProfile {
        expressions,
        s_max,
        delta_chsh: 0.5 * (s_max - 2.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalConsistency {
    pub a_consistent: [bool; 2],
    pub b_consistent: [bool; 2],
    pub delta_a: [f64; 2],
    pub delta_b: [f64; 2],
    pub no_signaling: bool,
}

/// Per-observable no-signaling check; an observable passes when its mean
/// shift across contexts is at most `tol`.
pub fn marginal_consistency(system: &CyclicSystem, tol: f64) -> MarginalConsistency {
    let sp = signaling_profile(system);
    let ok = |d: f64| d.abs() <= tol;
    let a_consistent = sp.delta_a.map(ok);
    let b_consistent = sp.delta_b.map(ok);
    MarginalConsistency {
        a_consistent,
        b_consistent,
        delta_a: sp.delta_a,
        delta_b: sp.delta_b,
        no_signaling: a_consistent.iter().chain(&b_consistent).all(|&c| c),
    }
}

/// `max(Δ₀, Δ_CHSH)`.
pub fn closed_form_delta_min(system: &CyclicSystem) -> f64 {
    signaling_profile(system)
        .delta0
        .max(chsh_profile(system).delta_chsh)
}

/// Signaling-corrected CHSH test: `s_max - 2 Δ₀ <= 2`.
pub fn bdk_check(system: &CyclicSystem) -> bool {
    let s = chsh_profile(system).s_max;
    let d0 = signaling_profile(system).delta0;
    s - 2.0 * d0 <= 2.0 + DEFAULT_TOL
}

/// Contextuality in excess of what signaling forces: `Δ_min - Δ₀`.
pub fn genuine_contextuality(system: &CyclicSystem, delta_min: f64) -> f64 {
    delta_min - signaling_profile(system).delta0
}
