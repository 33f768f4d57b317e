//! Game instances and allocation profiles.
//!
//! A [`FamilyGame`] fixes the players, their effort budgets, the relatedness
//! matrix and the personal fitness curves. An [`AllocationProfile`] is one
//! joint choice of investments, row `s` holding what source `s` sends to each
//! target. Both are plain data; construction only enforces shape, while
//! semantic rules are reported by the `validate` methods as [`Violation`]
//! values so callers can surface every problem at once.

use crate::error::Error;
use crate::fitness::FitnessFunction;

/// Absolute slack allowed on budget feasibility checks; solver output carries
/// float round-off of roughly this size.
pub const FEAS_TOL: f64 = 1e-9;

/// One broken semantic rule, carrying the offending indices.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("budget must be positive: individual {individual} has budget {value}")]
    NonPositiveBudget { individual: usize, value: f64 },

    #[error("relatedness out of [0, 1]: r[{from}][{to}] = {value}")]
    RelatednessOutOfRange { from: usize, to: usize, value: f64 },

    #[error("diagonal relatedness must equal 1: r[{individual}][{individual}] = {value}")]
    DiagonalNotOne { individual: usize, value: f64 },

    #[error("invalid fitness for individual {individual}: {detail}")]
    BadFitness { individual: usize, detail: String },

    #[error("negative investment: x[{from}][{to}] = {value}")]
    NegativeInvestment { from: usize, to: usize, value: f64 },

    #[error("budget exceeded: row {individual} sums to {row_sum}, budget is {budget}")]
    BudgetExceeded {
        individual: usize,
        row_sum: f64,
        budget: f64,
    },
}

/// An immutable game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGame {
    ids: Vec<String>,
    budgets: Vec<f64>,
    relatedness: Vec<Vec<f64>>,
    fitness: Vec<FitnessFunction>,
}

impl FamilyGame {
    /// Builds a game, checking shapes and identifier uniqueness only.
    /// Semantic rules (positive budgets, relatedness bounds, fitness
    /// parameters) are left to [`FamilyGame::validate`].
    pub fn new(
        ids: Vec<String>,
        budgets: Vec<f64>,
        relatedness: Vec<Vec<f64>>,
        fitness: Vec<FitnessFunction>,
    ) -> Result<Self, Error> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyGame);
        }
        for (k, id) in ids.iter().enumerate() {
            if ids[..k].contains(id) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        if budgets.len() != n {
            return Err(Error::Shape {
                what: "budget vector",
                expected: n,
                got: budgets.len(),
            });
        }
        if fitness.len() != n {
            return Err(Error::Shape {
                what: "fitness vector",
                expected: n,
                got: fitness.len(),
            });
        }
        if relatedness.len() != n {
            return Err(Error::Shape {
                what: "relatedness rows",
                expected: n,
                got: relatedness.len(),
            });
        }
        for row in &relatedness {
            if row.len() != n {
                return Err(Error::Shape {
                    what: "relatedness columns",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        Ok(FamilyGame {
            ids,
            budgets,
            relatedness,
            fitness,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one individual
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn budget(&self, s: usize) -> f64 {
        self.budgets[s]
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn relatedness(&self, s: usize, t: usize) -> f64 {
        self.relatedness[s][t]
    }

    pub fn relatedness_row(&self, s: usize) -> &[f64] {
        &self.relatedness[s]
    }

    pub fn relatedness_rows(&self) -> &[Vec<f64>] {
        &self.relatedness
    }

    pub fn fitness(&self, t: usize) -> &FitnessFunction {
        &self.fitness[t]
    }

    pub fn fitness_all(&self) -> &[FitnessFunction] {
        &self.fitness
    }

    /// Every broken game-level rule: positive budgets, relatedness within
    /// `[0, 1]` with unit diagonal, and well-formed fitness parameters.
    /// Asymmetric relatedness is deliberately allowed.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.len();
        let mut out = Vec::new();
        for (s, &b) in self.budgets.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                out.push(Violation::NonPositiveBudget {
                    individual: s,
                    value: b,
                });
            }
        }
        for s in 0..n {
            for t in 0..n {
                let r = self.relatedness[s][t];
                if s == t {
                    if r != 1.0 {
                        out.push(Violation::DiagonalNotOne {
                            individual: s,
                            value: r,
                        });
                    }
                } else if !(0.0..=1.0).contains(&r) {
                    out.push(Violation::RelatednessOutOfRange {
                        from: s,
                        to: t,
                        value: r,
                    });
                }
            }
        }
        for (t, f) in self.fitness.iter().enumerate() {
            for detail in f.parameter_issues() {
                out.push(Violation::BadFitness {
                    individual: t,
                    detail,
                });
            }
        }
        out
    }

    /// Checks a profile against this game: entries nonnegative, row sums
    /// within `FEAS_TOL` of the budgets. Dimension mismatch is a hard error.
    pub fn validate_profile(&self, x: &AllocationProfile) -> Result<Vec<Violation>, Error> {
        let n = self.len();
        if x.len() != n {
            return Err(Error::Shape {
                what: "profile rows",
                expected: n,
                got: x.len(),
            });
        }
        let mut out = Vec::new();
        for s in 0..n {
            for t in 0..n {
                let v = x.get(s, t);
                // NaN entries are violations too
                if v.is_nan() || v < 0.0 {
                    out.push(Violation::NegativeInvestment {
                        from: s,
                        to: t,
                        value: v,
                    });
                }
            }
            let row_sum = x.row(s).iter().sum::<f64>();
            if row_sum > self.budgets[s] + FEAS_TOL {
                out.push(Violation::BudgetExceeded {
                    individual: s,
                    row_sum,
                    budget: self.budgets[s],
                });
            }
        }
        Ok(out)
    }

    /// Inclusive fitness of individual `i`: personal fitnesses of all
    /// targets at their incoming investments, weighted by `i`'s relatedness
    /// row. Panics if `i` is out of range or the profile shape disagrees.
    pub fn inclusive_fitness(&self, x: &AllocationProfile, i: usize) -> f64 {
        assert_eq!(x.len(), self.len(), "profile size does not match the game");
        assert!(i < self.len(), "unknown individual index {i}");
        let incoming = x.incoming_investment();
        self.relatedness[i]
            .iter()
            .zip(&self.fitness)
            .zip(&incoming)
            .map(|((&r, f), &inflow)| r * f.value(inflow))
            .sum()
    }
}

/// A joint investment matrix; row = source, column = target.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProfile {
    rows: Vec<Vec<f64>>,
}

impl AllocationProfile {
    pub fn zeros(n: usize) -> Self {
        AllocationProfile {
            rows: vec![vec![0.0; n]; n],
        }
    }

    /// The profile in which everyone spends the whole budget on herself.
    pub fn spend_on_self(game: &FamilyGame) -> Self {
        let n = game.len();
        let mut p = AllocationProfile::zeros(n);
        for s in 0..n {
            p.rows[s][s] = game.budget(s);
        }
        p
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, Error> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(Error::Shape {
                    what: "profile columns",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        Ok(AllocationProfile { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.rows[s][t]
    }

    pub fn set(&mut self, s: usize, t: usize, v: f64) {
        self.rows[s][t] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.rows[s]
    }

    pub fn set_row(&mut self, s: usize, row: &[f64]) {
        assert_eq!(
            row.len(),
            self.rows.len(),
            "row length must equal the profile size"
        );
        self.rows[s].copy_from_slice(row);
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Column sums: total investment flowing into each target.
    pub fn incoming_investment(&self) -> Vec<f64> {
        let n = self.rows.len();
        let mut incoming = vec![0.0; n];
        for row in &self.rows {
            for (t, &v) in row.iter().enumerate() {
                incoming[t] += v;
            }
        }
        incoming
    }
}
