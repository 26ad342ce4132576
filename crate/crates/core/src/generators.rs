//! Reference and randomized systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TrialRecord;
use crate::types::{ContextLabel, CyclicSystem, PairStats, CELLS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Zero means, covariances `(1, 1, 1, -1)`.
    PrBox,
    /// Zero means, covariances `(r, r, r, -r)` with `r = 1/√2`.
    Tsirelson,
    /// Every variable is identically `+1`.
    ClassicalDeterministic,
    /// Moments drawn uniformly from the realizable region of each context.
    /// With `no_signaling`, the four observable means are drawn once and
    /// shared, and each covariance is uniform on its feasible interval.
    Random {
        seed: u64,
        #[serde(default)]
        no_signaling: bool,
    },
    /// Shifts means of a base system (uniform when absent) so that
    /// `δ(a_i)` and `δ(b_j)` grow by the given amounts.
    SignalingInjection {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<GeneratorSpec>>,
        #[serde(default)]
        delta_a: [f64; 2],
        #[serde(default)]
        delta_b: [f64; 2],
    },
}

impl GeneratorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::PrBox => "pr_box",
            GeneratorSpec::Tsirelson => "tsirelson",
            GeneratorSpec::ClassicalDeterministic => "classical_deterministic",
            GeneratorSpec::Random { .. } => "random",
            GeneratorSpec::SignalingInjection { .. } => "signaling_injection",
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<CyclicSystem> {
    match spec {
        GeneratorSpec::PrBox => from_covs([1.0, 1.0, 1.0, -1.0]),
        GeneratorSpec::Tsirelson => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            from_covs([r, r, r, -r])
        }
        GeneratorSpec::ClassicalDeterministic => {
            CyclicSystem::from_stats([PairStats::new(1.0, 1.0, 1.0); 4])
        }
        GeneratorSpec::Random { seed, no_signaling } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(random_system(&mut rng, *no_signaling))
        }
        GeneratorSpec::SignalingInjection {
            base,
            delta_a,
            delta_b,
        } => {
            let base = match base {
                Some(b) => generate(b)?,
                None => CyclicSystem::uniform(),
            };
            inject_signaling(&base, *delta_a, *delta_b)
        }
    }
}

fn from_covs(covs: [f64; 4]) -> Result<CyclicSystem> {
    CyclicSystem::from_stats(covs.map(|c| PairStats::new(0.0, 0.0, c)))
}

/// Adds `δ(a_i)/2` to the `a_i` mean in context `(i,1)` and subtracts it in
/// `(i,2)`; likewise `δ(b_j)/2` across contexts `(1,j)` and `(2,j)`.
/// Covariances are left unchanged.
pub fn inject_signaling(
    base: &CyclicSystem,
    delta_a: [f64; 2],
    delta_b: [f64; 2],
) -> Result<CyclicSystem> {
    for d in delta_a.iter().chain(&delta_b) {
        if !d.is_finite() || d.abs() > 2.0 {
            return Err(Error::InvalidGenerator(format!(
                "injection magnitude {d} outside [-2, 2]"
            )));
        }
    }
    let mut stats = base.all_stats();
    for ctx in ContextLabel::ALL {
        let s = &mut stats[ctx.index()];
        let side = |k: usize| if k == 1 { 0.5 } else { -0.5 };
        s.m_a += side(ctx.j()) * delta_a[ctx.i() - 1];
        s.m_b += side(ctx.i()) * delta_b[ctx.j() - 1];
        if !s.is_realizable() {
            return Err(Error::InfeasibleInjection(format!(
                "context {ctx} would need m_a = {}, m_b = {}, cov = {}",
                s.m_a, s.m_b, s.cov
            )));
        }
    }
    CyclicSystem::from_stats(stats).map_err(|e| Error::InfeasibleInjection(e.to_string()))
}

/// Uniform draw from the realizable `(m_a, m_b, cov)` tetrahedron by
/// rejection from the cube `[-1, 1]³`.
pub fn random_stats<R: Rng + ?Sized>(rng: &mut R) -> PairStats {
    loop {
        let s = PairStats::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if s.min_cell() >= 0.0 {
            return s;
        }
    }
}

/// Covariance interval compatible with the given means.
pub fn cov_bounds(m_a: f64, m_b: f64) -> (f64, f64) {
    ((m_a + m_b).abs() - 1.0, 1.0 - (m_a - m_b).abs())
}

pub fn random_system<R: Rng + ?Sized>(rng: &mut R, no_signaling: bool) -> CyclicSystem {
    let stats = if no_signaling {
        let a: [f64; 2] = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let b: [f64; 2] = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        ContextLabel::ALL.map(|ctx| {
            let (m_a, m_b) = (a[ctx.i() - 1], b[ctx.j() - 1]);
            let (lo, hi) = cov_bounds(m_a, m_b);
            let cov = if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            PairStats::new(m_a, m_b, cov)
        })
    } else {
        [(); 4].map(|_| random_stats(rng))
    };
    CyclicSystem::from_stats(stats).expect("sampled moments are realizable")
}

/// Draws `per_context` trials from every context table, context by context.
pub fn sample_trials(system: &CyclicSystem, per_context: usize, seed: u64) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(4 * per_context);
    for joint in system.joints() {
        let p = joint.probs();
        for _ in 0..per_context {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut cell = p.iter().rposition(|&pk| pk > 0.0).unwrap_or(3);
            for (k, &pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    cell = k;
                    break;
                }
            }
            let (a, b) = CELLS[cell];
            out.push(TrialRecord::new(joint.context(), a, b));
        }
    }
    out
}
