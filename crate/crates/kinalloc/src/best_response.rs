//! One player's exact best response.
//!
//! Holding everyone else fixed, a source maximizes a separable concave
//! payoff over her budget simplex. At the optimum all funded targets share a
//! common adjusted-marginal level and no target sits above it, so the
//! problem reduces to finding that level: demand per target is the
//! generalized inverse of its weighted derivative, total demand is
//! nonincreasing in the level, and bisection pins down where it meets the
//! budget. Linear targets add flat plateaus where demand is set-valued; the
//! residual budget at the plateau is split evenly across the top targets.

use crate::fitness::{FitnessKind, Marginal};
use crate::game::FamilyGame;

/// Bisection tolerance on the budget mismatch, and the band within which the
/// active-set marginals are guaranteed to agree with the multiplier.
pub const BR_TOL: f64 = 1e-10;

const MAX_BISECTION_STEPS: usize = 200;

/// Result of a single-source water-filling solve.
#[derive(Debug, Clone)]
pub struct BestResponse {
    /// The source's optimal row, one entry per target.
    pub allocation: Vec<f64>,
    /// Common adjusted-marginal level of the funded targets.
    pub multiplier: f64,
    /// Targets receiving strictly positive investment, ascending.
    pub active_set: Vec<usize>,
    /// Set when every adjusted marginal vanishes over the feasible range; the
    /// payoff is flat, and the budget is parked on the source herself.
    pub degenerate: bool,
}

/// The marginal inclusive-fitness gain to `s` from one more unit invested in
/// each target: relatedness times the target's fitness derivative at its
/// current incoming investment. Zero relatedness annihilates even an
/// unbounded derivative.
pub fn adjusted_marginal(game: &FamilyGame, s: usize, incoming: &[f64]) -> Vec<Marginal> {
    assert_eq!(
        incoming.len(),
        game.len(),
        "incoming vector size must match the game"
    );
    (0..game.len())
        .map(|t| {
            game.fitness(t)
                .marginal(incoming[t])
                .scaled(game.relatedness(s, t))
        })
        .collect()
}

/// Total investment source `s` demands at multiplier `level`, on top of the
/// `external` investment the targets already receive from others. Targets
/// with zero relatedness contribute nothing. Returns `None` when some linear
/// target's adjusted slope exceeds `level`, making demand unbounded; callers
/// must treat that as +∞. Panics unless `level > 0`.
pub fn spend_at_multiplier(
    game: &FamilyGame,
    s: usize,
    external: &[f64],
    level: f64,
) -> Option<f64> {
    assert!(
        level > 0.0,
        "spend_at_multiplier requires a positive level, got {level}"
    );
    assert_eq!(
        external.len(),
        game.len(),
        "external vector size must match the game"
    );
    let mut total = 0.0;
    for (t, &already_incoming) in external.iter().enumerate() {
        let r = game.relatedness(s, t);
        if r == 0.0 {
            continue;
        }
        let filled = game.fitness(t).marginal_inverse(level / r)?;
        total += (filled - already_incoming).max(0.0);
    }
    Some(total)
}

/// Per-target demand of the curved targets at `level`; linear targets are
/// held at zero. For `level` at or above the linear plateau this is the
/// lower selection of the demand correspondence: linear demand is zero above
/// the plateau and set-valued at it, where the caller assigns the residual.
fn curved_demands(game: &FamilyGame, s: usize, external: &[f64], level: f64) -> Vec<f64> {
    (0..game.len())
        .map(|t| {
            let r = game.relatedness(s, t);
            if r == 0.0 || game.fitness(t).kind() == FitnessKind::Linear {
                return 0.0;
            }
            let filled = game
                .fitness(t)
                .marginal_inverse(level / r)
                .expect("curved inverses are always finite");
            (filled - external[t]).max(0.0)
        })
        .collect()
}

fn curved_spend(game: &FamilyGame, s: usize, external: &[f64], level: f64) -> f64 {
    curved_demands(game, s, external, level).iter().sum()
}

/// Exact maximizer of `Σ_t r_{s,t}·f_t(external_t + x_t)` over
/// `{x ≥ 0, Σ x = budget}`, by bisection on the common marginal level.
///
/// The returned allocation sums to the budget within [`BR_TOL`], funded
/// targets share the multiplier within [`BR_TOL`], and unfunded targets sit
/// at or below it. Targets with an unbounded marginal at their current
/// investment always end up funded: any finite level assigns them positive
/// demand.
pub fn water_fill(game: &FamilyGame, s: usize, external: &[f64]) -> BestResponse {
    let n = game.len();
    assert_eq!(
        external.len(),
        n,
        "external vector size must match the game"
    );
    assert!(
        external.iter().all(|&e| e >= 0.0),
        "external investment must be nonnegative"
    );
    let budget = game.budget(s);
    assert!(budget > 0.0, "water_fill requires a positive budget");

    // Adjusted marginals before the source invests anything.
    let start = adjusted_marginal(game, s, external);
    let ceiling = start
        .iter()
        .copied()
        .fold(Marginal::Finite(0.0), Marginal::max);

    // Flat payoff: nothing the source does changes anything. Spend the budget
    // on self to keep the budget identity and flag the case.
    if ceiling == Marginal::Finite(0.0) {
        let mut allocation = vec![0.0; n];
        allocation[s] = budget;
        return BestResponse {
            allocation,
            multiplier: 0.0,
            active_set: vec![s],
            degenerate: true,
        };
    }

    // Highest linear slope; demand below this level is unbounded.
    let plateau = (0..n)
        .filter(|&t| game.fitness(t).kind() == FitnessKind::Linear && game.relatedness(s, t) > 0.0)
        .map(|t| {
            let Marginal::Finite(slope) =
                game.fitness(t).marginal(0.0).scaled(game.relatedness(s, t))
            else {
                unreachable!("linear marginals are finite")
            };
            slope
        })
        .fold(0.0f64, f64::max);

    // If the curved targets cannot absorb the budget at the plateau level,
    // the multiplier is the plateau itself and the top linear targets split
    // the rest evenly (lowest indices first, in index order).
    if plateau > 0.0 {
        let at_plateau = curved_demands(game, s, external, plateau);
        let spent: f64 = at_plateau.iter().sum();
        if spent <= budget {
            let mut allocation = at_plateau;
            let winners: Vec<usize> = (0..n)
                .filter(|&t| {
                    game.fitness(t).kind() == FitnessKind::Linear
                        && game.relatedness(s, t) > 0.0
                        && game.relatedness(s, t) * game.fitness(t).marginal(0.0).to_f64()
                            == plateau
                })
                .collect();
            let share = (budget - spent) / winners.len() as f64;
            for &t in &winners {
                allocation[t] += share;
            }
            let active_set = (0..n).filter(|&t| allocation[t] > 0.0).collect();
            return BestResponse {
                allocation,
                multiplier: plateau,
                active_set,
                degenerate: false,
            };
        }
    }

    // Bracket the level: spending exceeds the budget at `lo` and is at most
    // the budget at `hi`. At the ceiling nothing is demanded; when the
    // ceiling is unbounded, double upward until demand fits.
    let lo0 = plateau;
    let hi0 = match ceiling {
        Marginal::Finite(v) => v,
        Marginal::Infinite => {
            let finite_max = start
                .iter()
                .filter_map(|m| m.finite())
                .fold(0.0f64, f64::max);
            let mut hi = finite_max.max(plateau).max(1.0);
            while curved_spend(game, s, external, hi) > budget {
                hi *= 2.0;
            }
            hi
        }
    };

    let mut lo = lo0;
    let mut hi = hi0;
    let mut best_level = hi0;
    let mut best_miss = curved_spend(game, s, external, hi0) - budget;
    for _ in 0..MAX_BISECTION_STEPS {
        if best_miss.abs() <= BR_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at float resolution
        }
        let miss = curved_spend(game, s, external, mid) - budget;
        if miss.abs() < best_miss.abs() {
            best_level = mid;
            best_miss = miss;
        }
        if miss > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let allocation = curved_demands(game, s, external, best_level);
    let active_set = (0..n).filter(|&t| allocation[t] > 0.0).collect();
    BestResponse {
        allocation,
        multiplier: best_level,
        active_set,
        degenerate: false,
    }
}

/// Payoff of the source's row against fixed external investment:
/// `Σ_t r_{s,t}·f_t(external_t + allocation_t)`.
pub fn objective_value(game: &FamilyGame, s: usize, external: &[f64], allocation: &[f64]) -> f64 {
    assert_eq!(external.len(), game.len());
    assert_eq!(allocation.len(), game.len());
    (0..game.len())
        .map(|t| game.relatedness(s, t) * game.fitness(t).value(external[t] + allocation[t]))
        .sum()
}
