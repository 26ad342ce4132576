//! Couplings of the eight context-indexed variables and the mismatch LP.
//!
//! The octuple is ordered `(A11, B11, A12, B21, A21, B12, A22, B22)`, so the
//! two variables recorded in context `k` (canonical order `11, 12, 21, 22`)
//! sit at positions `2k` and `2k + 1`. An atom `ω ∈ 0..256` assigns `+1` to
//! variable `v` when bit `v` is set and `-1` otherwise.
//!
//! The same-content pairs ("connections") are `A11~A12`, `A21~A22`,
//! `B11~B12`, `B21~B22`. The mismatch of a coupling is the expected number of
//! connections whose two variables disagree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::simplex::{solve_with, LinearProgram, LpSolution, LpStatus, SimplexOptions};
use crate::types::{ContextLabel, CyclicSystem, CELLS};

pub const NUM_VARIABLES: usize = 8;
pub const NUM_ATOMS: usize = 1 << NUM_VARIABLES;

pub const VARIABLE_NAMES: [&str; NUM_VARIABLES] =
    ["A11", "B11", "A12", "B21", "A21", "B12", "A22", "B22"];

/// Variable positions of the connections for `a_1, a_2, b_1, b_2`.
pub const CONNECTIONS: [(usize, usize); 4] = [(0, 2), (4, 6), (1, 5), (3, 7)];

/// Optimality tolerance on `Δ_min`.
pub const OPTIMALITY_TOL: f64 = 1e-7;
/// Weight difference that counts as a distinct optimal coupling.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Phase-1 residual accepted when deciding whether a joint distribution exists.
pub const JPD_FEASIBILITY_TOL: f64 = 1e-8;

const DEGENERACY_SEED: u64 = 0x5eed_c0de;

pub fn atom_value(omega: usize, var: usize) -> f64 {
    if omega >> var & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Number of connections violated at atom `omega`.
pub fn mismatch_count(omega: usize) -> u32 {
    CONNECTIONS
        .iter()
        .filter(|&&(x, y)| (omega >> x & 1) != (omega >> y & 1))
        .count() as u32
}

fn context_vars(ctx: ContextLabel) -> (usize, usize) {
    (2 * ctx.index(), 2 * ctx.index() + 1)
}

/// A probability distribution over the 256 atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    weights: Vec<f64>,
}

impl Coupling {
    /// Clips tiny negative weights left by the solver.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), NUM_ATOMS, "coupling needs 256 weights");
        Coupling {
            weights: weights.into_iter().map(|w| w.max(0.0)).collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Induced table of `(A_ij, B_ji)` in `pp, pm, mp, mm` order.
    pub fn context_table(&self, ctx: ContextLabel) -> [f64; 4] {
        let (va, vb) = context_vars(ctx);
        let mut table = [0.0; 4];
        for (omega, &w) in self.weights.iter().enumerate() {
            let a = atom_value(omega, va);
            let b = atom_value(omega, vb);
            let cell = CELLS
                .iter()
                .position(|&(x, y)| x.sign() == a && y.sign() == b)
                .expect("cell");
            table[cell] += w;
        }
        table
    }

    /// `P(X ≠ Y)` for each connection in `a_1, a_2, b_1, b_2` order.
    pub fn connection_mismatch(&self) -> [f64; 4] {
        CONNECTIONS.map(|(x, y)| {
            self.weights
                .iter()
                .enumerate()
                .filter(|&(omega, _)| (omega >> x & 1) != (omega >> y & 1))
                .map(|(_, &w)| w)
                .sum()
        })
    }

    /// Total mismatch `Δ(P)`.
    pub fn mismatch(&self) -> f64 {
        self.connection_mismatch().iter().sum()
    }

    /// Largest deviation of an induced context table from the system.
    pub fn max_table_error(&self, system: &CyclicSystem) -> f64 {
        ContextLabel::ALL
            .iter()
            .flat_map(|&ctx| {
                let target = system.joint(ctx).probs();
                let got = self.context_table(ctx);
                (0..4).map(move |k| (got[k] - target[k]).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Mismatch LP over the 256 atom weights: normalization plus the mean,
/// mean and product-moment rows of each context.
pub fn build_coupling_lp(system: &CyclicSystem) -> LinearProgram {
    let objective = (0..NUM_ATOMS).map(|w| mismatch_count(w) as f64).collect();
    let mut lp = LinearProgram::new(objective).expect("finite objective");
    lp.add_equality(vec![1.0; NUM_ATOMS], 1.0)
        .expect("row width");
    for ctx in ContextLabel::ALL {
        let (va, vb) = context_vars(ctx);
        let s = system.stats(ctx);
        let col = |f: &dyn Fn(usize) -> f64| (0..NUM_ATOMS).map(f).collect::<Vec<_>>();
        lp.add_equality(col(&|w| atom_value(w, va)), s.m_a)
            .expect("row width");
        lp.add_equality(col(&|w| atom_value(w, vb)), s.m_b)
            .expect("row width");
        lp.add_equality(col(&|w| atom_value(w, va) * atom_value(w, vb)), s.cov)
            .expect("row width");
    }
    lp
}

#[derive(Debug, Clone)]
pub struct MismatchSolution {
    pub delta_min: f64,
    pub witness: Coupling,
    /// Whether a second optimal coupling differing by more than
    /// [`DEGENERACY_TOL`] in some weight was found.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Minimizes `Δ(P)` and returns the optimum with one optimal coupling,
/// without probing for other optima.
pub fn optimal_coupling(system: &CyclicSystem) -> Result<(f64, Coupling)> {
    let (_, sol) = solve_coupling_lp(system)?;
    let witness = Coupling::from_weights(sol.x);
    Ok((witness.mismatch(), witness))
}

fn solve_coupling_lp(system: &CyclicSystem) -> Result<(LinearProgram, LpSolution)> {
    let opts = SimplexOptions::default();
    let lp = build_coupling_lp(system);
    let sol = solve_with(&lp, opts).check_cap(opts.max_iterations)?;
    // Couplings always exist for valid systems; anything else is a numerical
    // breakdown and is reported like a cap hit.
    if sol.status != LpStatus::Optimal {
        return Err(crate::Error::SolverFailure {
            cap: opts.max_iterations,
            objective: sol.objective,
        });
    }
    Ok((lp, sol))
}

/// Minimizes `Δ(P)` over all couplings of the system and checks whether
/// the optimum is attained by more than one coupling.
pub fn minimize_mismatch(system: &CyclicSystem) -> Result<MismatchSolution> {
    let opts = SimplexOptions::default();
    let (lp, sol) = solve_coupling_lp(system)?;
    let mut iterations = sol.iterations;
    let witness = Coupling::from_weights(sol.x);
    let delta_min = witness.mismatch();

    // Degeneracy probe: restrict to the optimal face and push a random
    // secondary objective in both directions.
    let mut face = lp.clone();
    face.add_equality(lp.objective().to_vec(), sol.objective)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEGENERACY_SEED);
    let secondary: Vec<f64> = (0..NUM_ATOMS)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut probes = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        face.set_objective(secondary.iter().map(|r| sign * r).collect())?;
        let probe = solve_with(&face, opts).check_cap(opts.max_iterations)?;
        iterations += probe.iterations;
        if probe.is_optimal() {
            probes.push(probe.x);
        }
    }
    let differs = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .any(|(p, q)| (p.max(0.0) - q.max(0.0)).abs() > DEGENERACY_TOL)
    };
    let degenerate = probes.iter().any(|x| differs(x, witness.weights()))
        || (probes.len() == 2 && differs(&probes[0], &probes[1]));

    Ok(MismatchSolution {
        delta_min,
        witness,
        degenerate,
        iterations,
    })
}

pub const JPD_ATOMS: usize = 16;

/// Value of `a_1, a_2, b_1, b_2` (positions 0..4) at a 16-atom index.
pub fn jpd_value(atom: usize, var: usize) -> f64 {
    atom_value(atom, var)
}

#[derive(Debug, Clone)]
pub struct JpdResult {
    pub exists: bool,
    /// Weights over `(a_1, a_2, b_1, b_2)` atoms when a distribution exists.
    pub witness: Option<[f64; JPD_ATOMS]>,
    pub infeasibility: f64,
}

/// Decides whether a single distribution of `(a_1, a_2, b_1, b_2)`
/// reproduces all four context tables.
pub fn jpd_feasibility(system: &CyclicSystem) -> Result<JpdResult> {
    let mut lp = LinearProgram::new(vec![0.0; JPD_ATOMS])?;
    lp.add_equality(vec![1.0; JPD_ATOMS], 1.0)?;
    for ctx in ContextLabel::ALL {
        let (va, vb) = (ctx.i() - 1, 2 + ctx.j() - 1);
        let table = system.joint(ctx).probs();
        for (k, &(a, b)) in CELLS.iter().enumerate() {
            let row = (0..JPD_ATOMS)
                .map(|q| {
                    let hit = jpd_value(q, va) == a.sign() && jpd_value(q, vb) == b.sign();
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            lp.add_equality(row, table[k])?;
        }
    }
    let opts = SimplexOptions {
        feasibility_tol: JPD_FEASIBILITY_TOL,
        ..Default::default()
    };
    let sol = solve_with(&lp, opts).check_cap(opts.max_iterations)?;
    let exists = sol.status == LpStatus::Optimal;
    let witness = exists.then(|| {
        let mut w = [0.0; JPD_ATOMS];
        for (dst, &v) in w.iter_mut().zip(&sol.x) {
            *dst = v.max(0.0);
        }
        w
    });
    Ok(JpdResult {
        exists,
        witness,
        infeasibility: sol.infeasibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::closed_form_delta_min;
    use crate::simplex::simplex_solve;
    use crate::types::PairStats;

    fn from_covs(covs: [f64; 4]) -> CyclicSystem {
        CyclicSystem::from_stats(covs.map(|c| PairStats::new(0.0, 0.0, c))).unwrap()
    }

    #[test]
    fn lp_shape() {
        let lp = build_coupling_lp(&CyclicSystem::uniform());
        assert_eq!(lp.num_vars(), 256);
        assert_eq!(lp.num_rows(), 13);
        assert_eq!(mismatch_count(0), 0);
        assert_eq!(mismatch_count(0b0000_0001), 1); // A11 alone flipped
        assert_eq!(mismatch_count(0b0101_0101), 0); // all A variables +1
    }

    #[test]
    fn uniform_system_has_zero_mismatch_point() {
        // A_i1 = A_i2 and B_j1 = B_j2, four i.i.d. fair coins.
        let weights: Vec<f64> = (0..NUM_ATOMS)
            .map(|w| {
                if mismatch_count(w) == 0 {
                    1.0 / 16.0
                } else {
                    0.0
                }
            })
            .collect();
        let lp = build_coupling_lp(&CyclicSystem::uniform());
        assert!(lp.residual(&weights) < 1e-15);
        assert_eq!(lp.evaluate(&weights), 0.0);
        let sol = minimize_mismatch(&CyclicSystem::uniform()).unwrap();
        assert!(sol.delta_min.abs() < 1e-12, "{}", sol.delta_min);
    }

    #[test]
    fn pr_box_needs_one_mismatch() {
        let sys = from_covs([1.0, 1.0, 1.0, -1.0]);
        let sol = minimize_mismatch(&sys).unwrap();
        assert!((sol.delta_min - 1.0).abs() < 1e-9);
        assert!(sol.degenerate);
        assert!(sol.witness.max_table_error(&sys) < 1e-9);
    }

    #[test]
    fn deterministic_system_is_not_degenerate() {
        let sys = CyclicSystem::from_stats([PairStats::new(1.0, 1.0, 1.0); 4]).unwrap();
        let sol = minimize_mismatch(&sys).unwrap();
        assert!(sol.delta_min.abs() < 1e-12);
        assert!(!sol.degenerate);
        assert!((sol.witness.weights()[255] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_rows_match_table_rows() {
        // Same optimum when each context is pinned by its four cells.
        let systems = [
            from_covs([1.0, 1.0, 1.0, -1.0]),
            from_covs([0.5, -0.2, 0.7, 0.1]),
            CyclicSystem::from_stats([
                PairStats::new(0.4, -0.2, 0.1),
                PairStats::new(-0.3, 0.5, -0.2),
                PairStats::new(0.1, 0.0, 0.6),
                PairStats::new(0.2, 0.3, -0.5),
            ])
            .unwrap(),
        ];
        for sys in systems {
            let moments = simplex_solve(&build_coupling_lp(&sys));
            let objective = (0..NUM_ATOMS).map(|w| mismatch_count(w) as f64).collect();
            let mut tables = LinearProgram::new(objective).unwrap();
            for ctx in ContextLabel::ALL {
                let (va, vb) = context_vars(ctx);
                let target = sys.joint(ctx).probs();
                for (k, &(a, b)) in CELLS.iter().enumerate() {
                    let row = (0..NUM_ATOMS)
                        .map(|w| {
                            let hit =
                                atom_value(w, va) == a.sign() && atom_value(w, vb) == b.sign();
                            f64::from(u8::from(hit))
                        })
                        .collect();
                    tables.add_equality(row, target[k]).unwrap();
                }
            }
            let by_table = simplex_solve(&tables);
            assert!(moments.is_optimal() && by_table.is_optimal());
            assert!((moments.objective - by_table.objective).abs() < 1e-9);
            assert!((moments.objective - closed_form_delta_min(&sys)).abs() < 1e-9);
        }
    }

    #[test]
    fn jpd_examples() {
        let res = jpd_feasibility(&from_covs([1.0; 4])).unwrap();
        assert!(res.exists);
        let w = res.witness.unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert!(
            !jpd_feasibility(&from_covs([1.0, 1.0, 1.0, -1.0]))
                .unwrap()
                .exists
        );

        let signaling = CyclicSystem::from_stats([
            PairStats::new(0.2, 0.0, 0.0),
            PairStats::new(0.0, 0.0, 0.0),
            PairStats::new(0.0, 0.0, 0.0),
            PairStats::new(0.0, 0.0, 0.0),
        ])
        .unwrap();
        assert!(!jpd_feasibility(&signaling).unwrap().exists);
    }

    #[test]
    fn perfect_correlation_witness_is_two_point() {
        // all covs 1 with zero means: only the all-equal atoms can carry mass
        let w = jpd_feasibility(&from_covs([1.0; 4]))
            .unwrap()
            .witness
            .unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[15] - 0.5).abs() < 1e-12);
    }
}
