//! Domain types for a CHSH-type (cyclic rank 4) system of ±1 observables.
//!
//! Two observables `a_1, a_2` on one side and `b_1, b_2` on the other are
//! measured pairwise in four contexts `(a_i, b_j)`. Each context yields a 2×2
//! joint table over the outcomes; the four tables together form a
//! [`CyclicSystem`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the normalization of a table at construction.
pub const BUILD_TOL: f64 = 1e-12;

/// Default comparison tolerance for verdicts.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Slack allowed on the nonnegativity of a table reconstructed from moments.
pub const STATS_TOL: f64 = 4e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Outcome {
    Minus,
    Plus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i64 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.value() as f64
    }

    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl TryFrom<i64> for Outcome {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::InvalidOutcome(other)),
        }
    }
}

impl From<Outcome> for i64 {
    fn from(o: Outcome) -> i64 {
        o.value()
    }
}

/// A measurement context `(a_i, b_j)` with `i, j ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextLabel {
    i: u8,
    j: u8,
}

impl ContextLabel {
    /// All four contexts in canonical order `11, 12, 21, 22`.
    pub const ALL: [ContextLabel; 4] = [
        ContextLabel { i: 1, j: 1 },
        ContextLabel { i: 1, j: 2 },
        ContextLabel { i: 2, j: 1 },
        ContextLabel { i: 2, j: 2 },
    ];

    pub fn new(i: i64, j: i64) -> Result<Self> {
        match (i, j) {
            (1 | 2, 1 | 2) => Ok(ContextLabel {
                i: i as u8,
                j: j as u8,
            }),
            _ => Err(Error::InvalidContext(i, j)),
        }
    }

    /// Index of the `a` observable (1 or 2).
    pub fn i(self) -> usize {
        self.i as usize
    }

    /// Index of the `b` observable (1 or 2).
    pub fn j(self) -> usize {
        self.j as usize
    }

    /// Position in [`ContextLabel::ALL`].
    pub fn index(self) -> usize {
        2 * (self.i as usize - 1) + (self.j as usize - 1)
    }

    /// Two-character key such as `"12"`.
    pub fn key(self) -> String {
        format!("{}{}", self.i, self.j)
    }

    pub fn from_key(key: &str) -> Result<Self> {
        let mut chars = key.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => {
                let i = a.to_digit(10).map_or(0, i64::from);
                let j = b.to_digit(10).map_or(0, i64::from);
                ContextLabel::new(i, j)
            }
            _ => Err(Error::SystemFormat(format!("bad context key {key:?}"))),
        }
    }
}

impl fmt::Display for ContextLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Cell names in storage order: `(+,+), (+,-), (-,+), (-,-)` for `(a, b)`.
pub const CELL_NAMES: [&str; 4] = ["pp", "pm", "mp", "mm"];

fn cell_index(a: Outcome, b: Outcome) -> usize {
    match (a, b) {
        (Outcome::Plus, Outcome::Plus) => 0,
        (Outcome::Plus, Outcome::Minus) => 1,
        (Outcome::Minus, Outcome::Plus) => 2,
        (Outcome::Minus, Outcome::Minus) => 3,
    }
}

/// Outcome pair stored at each cell index.
pub const CELLS: [(Outcome, Outcome); 4] = [
    (Outcome::Plus, Outcome::Plus),
    (Outcome::Plus, Outcome::Minus),
    (Outcome::Minus, Outcome::Plus),
    (Outcome::Minus, Outcome::Minus),
];

/// Joint distribution of `(a_i, b_j)` in one context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairJoint {
    context: ContextLabel,
    p: [f64; 4],
}

impl PairJoint {
    /// Builds a table from cells ordered `pp, pm, mp, mm`.
    pub fn new(context: ContextLabel, p: [f64; 4]) -> Result<Self> {
        for &v in &p {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability { context, value: v });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > BUILD_TOL {
            return Err(Error::NotNormalized { context, sum });
        }
        Ok(PairJoint { context, p })
    }

    pub fn uniform(context: ContextLabel) -> Self {
        PairJoint {
            context,
            p: [0.25; 4],
        }
    }

    pub fn context(&self) -> ContextLabel {
        self.context
    }

    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[cell_index(a, b)]
    }

    /// Cells in `pp, pm, mp, mm` order.
    pub fn probs(&self) -> [f64; 4] {
        self.p
    }

    pub fn stats(&self) -> PairStats {
        pair_stats(self)
    }
}

/// First and second moments of a ±1 pair: `E[A]`, `E[B]`, `E[AB]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub m_a: f64,
    pub m_b: f64,
    pub cov: f64,
}

impl PairStats {
    pub fn new(m_a: f64, m_b: f64, cov: f64) -> Self {
        PairStats { m_a, m_b, cov }
    }

    /// Smallest entry of the table these moments reconstruct.
    pub fn min_cell(&self) -> f64 {
        (0..4).map(|k| self.cell(k)).fold(f64::INFINITY, f64::min)
    }

    fn cell(&self, k: usize) -> f64 {
        let (a, b) = CELLS[k];
        let (sa, sb) = (a.sign(), b.sign());
        (1.0 + sa * self.m_a + sb * self.m_b + sa * sb * self.cov) / 4.0
    }

    /// True when the moments are bounded and describe a nonnegative table.
    pub fn is_realizable(&self) -> bool {
        let finite = self.m_a.is_finite() && self.m_b.is_finite() && self.cov.is_finite();
        finite
            && self.m_a.abs() <= 1.0 + STATS_TOL
            && self.m_b.abs() <= 1.0 + STATS_TOL
            && self.cov.abs() <= 1.0 + STATS_TOL
            && 4.0 * self.min_cell() >= -STATS_TOL
    }
}

/// Means and product expectation of a context table.
pub fn pair_stats(joint: &PairJoint) -> PairStats {
    let mut s = PairStats::new(0.0, 0.0, 0.0);
    for (k, &(a, b)) in CELLS.iter().enumerate() {
        let p = joint.p[k];
        s.m_a += a.sign() * p;
        s.m_b += b.sign() * p;
        s.cov += a.sign() * b.sign() * p;
    }
    s
}

/// Inverse of [`pair_stats`]: `p(α,β) = (1 + α m_a + β m_b + αβ cov) / 4`.
pub fn joint_from_stats(stats: PairStats, context: ContextLabel) -> Result<PairJoint> {
    let mut p = [0.0; 4];
    for (k, cell) in p.iter_mut().enumerate() {
        let v = stats.cell(k);
        if !v.is_finite() || v < -BUILD_TOL {
            return Err(Error::InfeasibleStats {
                context,
                cell: CELL_NAMES[k],
                value: v,
            });
        }
        *cell = v.max(0.0);
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > BUILD_TOL || p.iter().any(|&v| v > 1.0 + BUILD_TOL) {
        return Err(Error::InfeasibleStats {
            context,
            cell: "sum",
            value: sum,
        });
    }
    PairJoint::new(context, p.map(|v| v.min(1.0)))
}

/// The four context tables of a CHSH-type system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicSystem {
    joints: [PairJoint; 4],
}

impl CyclicSystem {
    /// Accepts the four tables in any order; each context must appear once.
    pub fn from_joints<I: IntoIterator<Item = PairJoint>>(joints: I) -> Result<Self> {
        let mut slots: [Option<PairJoint>; 4] = [None; 4];
        for joint in joints {
            let slot = &mut slots[joint.context.index()];
            if slot.is_some() {
                return Err(Error::DuplicateContext(joint.context));
            }
            *slot = Some(joint);
        }
        let mut out = [PairJoint::uniform(ContextLabel::ALL[0]); 4];
        for (k, slot) in slots.into_iter().enumerate() {
            out[k] = slot.ok_or(Error::MissingContext(ContextLabel::ALL[k]))?;
        }
        Ok(CyclicSystem { joints: out })
    }

    /// Builds from moments given in canonical context order.
    pub fn from_stats(stats: [PairStats; 4]) -> Result<Self> {
        let mut joints = [PairJoint::uniform(ContextLabel::ALL[0]); 4];
        for (k, ctx) in ContextLabel::ALL.into_iter().enumerate() {
            joints[k] = joint_from_stats(stats[k], ctx)?;
        }
        Ok(CyclicSystem { joints })
    }

    /// Builds from cell arrays (`pp, pm, mp, mm`) in canonical context order.
    pub fn from_tables(tables: [[f64; 4]; 4]) -> Result<Self> {
        let mut joints = [PairJoint::uniform(ContextLabel::ALL[0]); 4];
        for (k, ctx) in ContextLabel::ALL.into_iter().enumerate() {
            joints[k] = PairJoint::new(ctx, tables[k])?;
        }
        Ok(CyclicSystem { joints })
    }

    pub fn uniform() -> Self {
        CyclicSystem {
            joints: ContextLabel::ALL.map(PairJoint::uniform),
        }
    }

    pub fn joint(&self, ctx: ContextLabel) -> &PairJoint {
        &self.joints[ctx.index()]
    }

    pub fn joints(&self) -> &[PairJoint; 4] {
        &self.joints
    }

    pub fn stats(&self, ctx: ContextLabel) -> PairStats {
        self.joint(ctx).stats()
    }

    /// Moments of all contexts in canonical order.
    pub fn all_stats(&self) -> [PairStats; 4] {
        self.joints.map(|j| j.stats())
    }

    /// Covariances `c11, c12, c21, c22`.
    pub fn covs(&self) -> [f64; 4] {
        self.all_stats().map(|s| s.cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(i: i64, j: i64) -> ContextLabel {
        ContextLabel::new(i, j).unwrap()
    }

    #[test]
    fn outcome_accepts_only_pm_one() {
        assert_eq!(Outcome::try_from(1).unwrap(), Outcome::Plus);
        assert_eq!(Outcome::try_from(-1).unwrap(), Outcome::Minus);
        assert!(matches!(
            Outcome::try_from(0),
            Err(Error::InvalidOutcome(0))
        ));
        assert!(Outcome::try_from(2).is_err());
    }

    #[test]
    fn context_labels() {
        assert!(ContextLabel::new(0, 1).is_err());
        assert!(ContextLabel::new(1, 3).is_err());
        for (k, c) in ContextLabel::ALL.iter().enumerate() {
            assert_eq!(c.index(), k);
            assert_eq!(ContextLabel::from_key(&c.key()).unwrap(), *c);
        }
        assert!(ContextLabel::from_key("1").is_err());
        assert!(ContextLabel::from_key("13").is_err());
    }

    #[test]
    fn pair_stats_examples() {
        let s = PairJoint::uniform(ctx(1, 1)).stats();
        assert_eq!((s.m_a, s.m_b, s.cov), (0.0, 0.0, 0.0));

        let s = PairJoint::new(ctx(1, 1), [0.5, 0.0, 0.0, 0.5])
            .unwrap()
            .stats();
        assert_eq!((s.m_a, s.m_b, s.cov), (0.0, 0.0, 1.0));

        // m_a = 0.5 - 0.5, m_b = 0.4 - 0.1 + 0.2 - 0.3, cov = 0.4 - 0.1 - 0.2 + 0.3
        let s = PairJoint::new(ctx(2, 1), [0.4, 0.1, 0.2, 0.3])
            .unwrap()
            .stats();
        assert!(s.m_a.abs() < 1e-15);
        assert!((s.m_b - 0.2).abs() < 1e-15);
        assert!((s.cov - 0.4).abs() < 1e-15);
    }

    #[test]
    fn joint_from_stats_examples() {
        let j = joint_from_stats(PairStats::new(0.0, 0.0, 0.0), ctx(1, 2)).unwrap();
        assert_eq!(j.probs(), [0.25; 4]);
        let j = joint_from_stats(PairStats::new(0.0, 0.0, 1.0), ctx(1, 2)).unwrap();
        assert_eq!(j.probs(), [0.5, 0.0, 0.0, 0.5]);
        let err = joint_from_stats(PairStats::new(1.0, 1.0, 0.0), ctx(1, 2)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleStats { .. }));
        assert!(!PairStats::new(1.0, 1.0, 0.0).is_realizable());
    }

    #[test]
    fn pair_joint_rejects_bad_tables() {
        assert!(matches!(
            PairJoint::new(ctx(1, 1), [0.5, 0.5, 0.5, -0.5]),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            PairJoint::new(ctx(1, 1), [0.25, 0.25, 0.25, 0.2]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(PairJoint::new(ctx(1, 1), [f64::NAN, 0.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn system_requires_each_context_once() {
        let j = PairJoint::uniform(ctx(1, 1));
        assert!(matches!(
            CyclicSystem::from_joints([
                j,
                j,
                PairJoint::uniform(ctx(2, 1)),
                PairJoint::uniform(ctx(2, 2))
            ]),
            Err(Error::DuplicateContext(_))
        ));
        assert!(matches!(
            CyclicSystem::from_joints([j]),
            Err(Error::MissingContext(_))
        ));
        let shuffled = [ctx(2, 2), ctx(1, 1), ctx(2, 1), ctx(1, 2)].map(PairJoint::uniform);
        let sys = CyclicSystem::from_joints(shuffled).unwrap();
        assert_eq!(sys, CyclicSystem::uniform());
    }
}
