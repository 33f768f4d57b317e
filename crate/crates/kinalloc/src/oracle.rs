//! Brute-force ground truth at desk scale.
//!
//! The grid functions exhaustively enumerate lattice allocations, so they are
//! slow, exact up to the lattice spacing, and entirely independent of the
//! analytic water-filling path. They exist to validate the solver and are
//! deliberately capped: instances whose lattice exceeds [`MAX_GRID_POINTS`]
//! are refused rather than silently subsampled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::fitness::{FitnessFunction, FitnessKind};
use crate::game::{AllocationProfile, FamilyGame};

/// Hard bound on lattice size for one best-response scan.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

/// Lattice spacing and the slack allowed before a deviation counts as
/// improving.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Lattice step in effort units; must be positive.
    pub step: f64,
    /// Improvement threshold in fitness units; must be positive.
    pub epsilon: f64,
}

/// Maximizer found by exhaustive lattice search, with its objective value.
#[derive(Debug, Clone)]
pub struct GridBestResponse {
    pub allocation: Vec<f64>,
    pub value: f64,
}

/// Outcome of checking every player's lattice deviations against a profile.
#[derive(Debug, Clone)]
pub struct GridNashCheck {
    /// True when no player improves by more than `epsilon`.
    pub pass: bool,
    /// Largest improvement found (may be ≤ 0 when nothing improves).
    pub worst_improvement: f64,
    /// Player with the largest improvement.
    pub worst_source: usize,
    /// The deviation realizing it.
    pub worst_allocation: Vec<f64>,
}

/// Number of lattice points on the simplex `{k ∈ ℕ^n : Σk = total}`,
/// saturating instead of overflowing.
fn lattice_points(total: u64, n: usize) -> u128 {
    // C(total + n - 1, n - 1), built incrementally so every prefix is exact
    let mut count: u128 = 1;
    for i in 1..n as u128 {
        count = match count.checked_mul(total as u128 + i) {
            Some(c) => c / i,
            None => return u128::MAX,
        };
    }
    count
}

/// Exhaustively maximizes source `s`'s payoff over the budget lattice,
/// holding `external` (everyone else's incoming investment) fixed.
///
/// Enumeration is lexicographic and ties keep the first maximizer found, so
/// the result is the lowest-lexicographic argmax. The whole budget is placed
/// on the lattice: the grid spends `floor(budget/step)` chunks.
pub fn grid_best_response(
    game: &FamilyGame,
    s: usize,
    external: &[f64],
    spec: &GridSpec,
) -> Result<GridBestResponse, Error> {
    assert!(spec.step > 0.0, "grid step must be positive");
    assert_eq!(
        external.len(),
        game.len(),
        "external vector size must match the game"
    );
    let n = game.len();
    let h = spec.step;
    // The 1e-9 slack absorbs quotient round-off when budget/step is integral.
    let chunks = (game.budget(s) / h + 1e-9).floor() as u64;

    let points = lattice_points(chunks, n);
    if points > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge {
            points,
            limit: MAX_GRID_POINTS,
        });
    }

    // Per-target payoff table: row t, column k holds the weighted fitness of
    // target t after k extra chunks. Inner enumeration is pure table lookups.
    let table: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let r = game.relatedness(s, t);
            let f = game.fitness(t);
            (0..=chunks)
                .map(|k| r * f.value(external[t] + k as f64 * h))
                .collect()
        })
        .collect();

    let mut best_value = f64::NEG_INFINITY;
    let mut best = vec![0u64; n];
    let mut current = vec![0u64; n];
    search(
        &table,
        0,
        chunks,
        0.0,
        &mut current,
        &mut best,
        &mut best_value,
    );

    Ok(GridBestResponse {
        allocation: best.iter().map(|&k| k as f64 * h).collect(),
        value: best_value,
    })
}

fn search(
    table: &[Vec<f64>],
    t: usize,
    remaining: u64,
    prefix: f64,
    current: &mut Vec<u64>,
    best: &mut Vec<u64>,
    best_value: &mut f64,
) {
    if t == table.len() - 1 {
        let value = prefix + table[t][remaining as usize];
        if value > *best_value {
            *best_value = value;
            current[t] = remaining;
            best.copy_from_slice(current);
        }
        return;
    }
    for k in 0..=remaining {
        current[t] = k;
        search(
            table,
            t + 1,
            remaining - k,
            prefix + table[t][k as usize],
            current,
            best,
            best_value,
        );
    }
}

/// Compares every player's payoff against her exhaustive lattice best
/// response. Passes when nobody improves by more than `spec.epsilon`.
pub fn grid_nash_check(
    game: &FamilyGame,
    x: &AllocationProfile,
    spec: &GridSpec,
) -> Result<GridNashCheck, Error> {
    assert!(spec.epsilon > 0.0, "epsilon must be positive");
    let n = game.len();
    assert_eq!(x.len(), n, "profile size must match the game");
    let incoming = x.incoming_investment();

    let mut worst_improvement = f64::NEG_INFINITY;
    let mut worst_source = 0;
    let mut worst_allocation = Vec::new();
    for s in 0..n {
        let external: Vec<f64> = (0..n).map(|t| incoming[t] - x.get(s, t)).collect();
        let br = grid_best_response(game, s, &external, spec)?;
        let improvement = br.value - game.inclusive_fitness(x, s);
        if improvement > worst_improvement {
            worst_improvement = improvement;
            worst_source = s;
            worst_allocation = br.allocation;
        }
    }
    Ok(GridNashCheck {
        pass: worst_improvement <= spec.epsilon,
        worst_improvement,
        worst_source,
        worst_allocation,
    })
}

/// How off-diagonal relatedness entries are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelatednessModel {
    /// Independent uniform draws in `[0, 1)`; generally asymmetric.
    Uniform,
    /// Uniform draws mirrored across the diagonal.
    SymmetricUniform,
}

/// Shape of a randomly generated instance.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub n: usize,
    /// Fitness families to draw from, uniformly.
    pub kinds: Vec<FitnessKind>,
    /// Budgets are uniform in this closed range.
    pub budget_range: (f64, f64),
    pub relatedness: RelatednessModel,
}

// Parameter ranges that keep every family well conditioned.
const WEIGHT_RANGE: (f64, f64) = (0.1, 10.0);
const SCALE_RANGE: (f64, f64) = (0.1, 5.0);
const EXPONENT_RANGE: (f64, f64) = (0.2, 0.8);

/// Generates a valid game, deterministically in `seed`.
pub fn random_instance(seed: u64, spec: &InstanceSpec) -> FamilyGame {
    assert!(spec.n >= 1, "an instance needs at least one individual");
    assert!(
        !spec.kinds.is_empty(),
        "at least one fitness kind is required"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;

    let ids = (0..n).map(|i| format!("i{i}")).collect();
    let budgets: Vec<f64> = (0..n)
        .map(|_| rng.random_range(spec.budget_range.0..=spec.budget_range.1))
        .collect();

    let mut relatedness = vec![vec![1.0; n]; n];
    #[allow(clippy::needless_range_loop)] // the symmetric case mirrors earlier rows
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            if spec.relatedness == RelatednessModel::SymmetricUniform && t < s {
                relatedness[s][t] = relatedness[t][s];
            } else {
                relatedness[s][t] = rng.random::<f64>();
            }
        }
    }

    let fitness = (0..n)
        .map(|_| {
            let kind = spec.kinds[rng.random_range(0..spec.kinds.len())];
            let weight = rng.random_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1);
            match kind {
                FitnessKind::Log => {
                    FitnessFunction::log(weight, rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1))
                }
                FitnessKind::Power => FitnessFunction::power(
                    weight,
                    rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1),
                    rng.random_range(EXPONENT_RANGE.0..=EXPONENT_RANGE.1),
                ),
                FitnessKind::SatExp => FitnessFunction::sat_exp(
                    weight,
                    rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1),
                ),
                FitnessKind::Linear => FitnessFunction::linear(weight),
            }
        })
        .collect();

    FamilyGame::new(ids, budgets, relatedness, fitness).expect("generated shapes are consistent")
}

/// All four fitness kinds.
pub fn all_kinds() -> Vec<FitnessKind> {
    vec![
        FitnessKind::Log,
        FitnessKind::Power,
        FitnessKind::SatExp,
        FitnessKind::Linear,
    ]
}

/// The strictly concave kinds (no linear plateaus).
pub fn strictly_concave_kinds() -> Vec<FitnessKind> {
    vec![FitnessKind::Log, FitnessKind::Power, FitnessKind::SatExp]
}
