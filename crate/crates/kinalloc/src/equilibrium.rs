//! Equilibrium computation, certification and classification.
//!
//! A profile is a Nash equilibrium exactly when, for every source, funded
//! targets attain her maximal adjusted marginal and every row exhausts its
//! budget. [`kkt_verify`] turns that equivalence into an executable
//! certificate: multipliers are reconstructed from the profile alone and the
//! residuals measure how far each first-order condition is from holding, so
//! certification is a property of the profile, not of the solver that
//! produced it. [`solve_nash`] iterates water-filling best responses from the
//! spend-on-self profile until the certificate passes, and reports honestly
//! when it does not.

use std::collections::BTreeSet;

use crate::best_response::water_fill;
use crate::error::Error;
use crate::fitness::Marginal;
use crate::game::{AllocationProfile, FamilyGame};

/// Default certification tolerance on every residual.
pub const KKT_TOL: f64 = 1e-8;

/// Investments at or below this absolute level do not count as support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Relative slack when deciding membership in a highest-marginal set.
pub const ARGMAX_TOL: f64 = 1e-7;

/// How best responses are applied while iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// All sources respond to the same profile; the step is damped.
    Simultaneous,
    /// Sources are updated one at a time in index order, undamped.
    RoundRobin,
}

impl std::fmt::Display for SolveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveMode::Simultaneous => write!(f, "simultaneous"),
            SolveMode::RoundRobin => write!(f, "round_robin"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: SolveMode,
    /// Step size in `(0, 1]` for simultaneous mode; halved whenever the
    /// complementarity residual rises between iterations.
    pub damping: f64,
    pub max_iter: usize,
    pub kkt_tol: f64,
}

impl Default for SolveOptions {
    /// Round-robin with exact responses: supports come out exactly zero or
    /// meaningfully positive, where damped steps would leave slowly decaying
    /// tails above [`SUPPORT_TOL`]. Damping defaults to 1/2 for callers who
    /// switch to simultaneous mode.
    fn default() -> Self {
        SolveOptions {
            mode: SolveMode::RoundRobin,
            damping: 0.5,
            max_iter: 10_000,
            kkt_tol: KKT_TOL,
        }
    }
}

/// Worst-case violation of each first-order condition, all nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KktResiduals {
    /// `|adjusted marginal − λ + μ|`, zero by construction up to float error.
    pub stationarity: f64,
    /// `(λ_s − adjusted marginal) · investment`, per source/target pair.
    pub complementarity: f64,
    /// `|row sum − budget|`, per source.
    pub budget: f64,
    /// Magnitude of the most negative investment, if any.
    pub nonnegativity: f64,
    /// Magnitude of the most negative multiplier `μ`, if any.
    pub mu_sign: f64,
}

impl KktResiduals {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.complementarity)
            .max(self.budget)
            .max(self.nonnegativity)
            .max(self.mu_sign)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Multipliers and residuals witnessing (or refuting) equilibrium.
///
/// `lambda[s]` is the source's maximal adjusted marginal at the profile's
/// incoming investments and `mu[s][t] = lambda[s] − adjusted marginal`, so
/// both are reconstructed from the profile alone. Entries may be IEEE +∞
/// when a target with zero incoming investment has an unbounded derivative;
/// such profiles never certify, and no `∞ − ∞` is ever formed.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct KktCertificate {
    pub lambda: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub residuals: KktResiduals,
    /// Tolerance the certificate was judged against.
    pub tol: f64,
    /// True when every residual is at most `tol`.
    pub certified: bool,
}

fn gap(level: Marginal, adjusted: Marginal) -> f64 {
    match (level, adjusted) {
        (Marginal::Finite(l), Marginal::Finite(a)) => l - a,
        (Marginal::Infinite, Marginal::Finite(_)) => f64::INFINITY,
        // the level is the max of the adjusted marginals, so both infinite
        // means this target attains it
        (Marginal::Infinite, Marginal::Infinite) => 0.0,
        (Marginal::Finite(_), Marginal::Infinite) => unreachable!("level is the row maximum"),
    }
}

fn build_certificate(game: &FamilyGame, x: &AllocationProfile, tol: f64) -> KktCertificate {
    let n = game.len();
    let incoming = x.incoming_investment();
    let plain: Vec<Marginal> = (0..n)
        .map(|t| game.fitness(t).marginal(incoming[t]))
        .collect();

    let mut lambda = vec![0.0; n];
    let mut mu = vec![vec![0.0; n]; n];
    let mut residuals = KktResiduals {
        stationarity: 0.0,
        complementarity: 0.0,
        budget: 0.0,
        nonnegativity: 0.0,
        mu_sign: 0.0,
    };

    for s in 0..n {
        let adjusted: Vec<Marginal> = (0..n)
            .map(|t| plain[t].scaled(game.relatedness(s, t)))
            .collect();
        let level = adjusted
            .iter()
            .copied()
            .fold(Marginal::Finite(0.0), Marginal::max);
        lambda[s] = level.to_f64();

        let mut row_sum = 0.0;
        for t in 0..n {
            let g = gap(level, adjusted[t]);
            mu[s][t] = g;
            if g < 0.0 {
                residuals.mu_sign = residuals.mu_sign.max(-g);
            }

            let invested = x.get(s, t);
            row_sum += invested;
            if invested < 0.0 {
                residuals.nonnegativity = residuals.nonnegativity.max(-invested);
            }
            if invested != 0.0 {
                residuals.complementarity = residuals.complementarity.max(g * invested.abs());
            }
            if let (Marginal::Finite(l), Marginal::Finite(a)) = (level, adjusted[t]) {
                residuals.stationarity = residuals.stationarity.max((a - l + mu[s][t]).abs());
            }
        }
        residuals.budget = residuals.budget.max((row_sum - game.budget(s)).abs());
    }

    let certified = residuals.within(tol);
    KktCertificate {
        lambda,
        mu,
        residuals,
        tol,
        certified,
    }
}

/// Builds the first-order certificate for a feasible profile. Passing at
/// tolerance `tol` is equivalent to being a Nash equilibrium up to that
/// tolerance. Infeasible profiles (negative entries or over-budget rows) are
/// a hard error; slack rows are allowed and simply show up as a budget
/// residual.
pub fn kkt_verify(
    game: &FamilyGame,
    x: &AllocationProfile,
    tol: f64,
) -> Result<KktCertificate, Error> {
    assert!(tol > 0.0, "certification tolerance must be positive");
    let violations = game.validate_profile(x)?;
    if !violations.is_empty() {
        return Err(Error::InfeasibleProfile(violations));
    }
    Ok(build_certificate(game, x, tol))
}

/// Who invests in whom at a profile, and who sits at the top of the marginal
/// orderings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    /// Targets each source funds above `support_tol`.
    pub beneficiaries: Vec<BTreeSet<usize>>,
    /// Sources funding nobody but themselves.
    pub selfish: BTreeSet<usize>,
    /// Sources funding someone else.
    pub altruistic: BTreeSet<usize>,
    /// Sources investing nothing in themselves.
    pub totally_altruistic: BTreeSet<usize>,
    /// Per source: targets within relative `argmax_tol` of her best adjusted
    /// marginal.
    pub highest_adjusted_marginal: Vec<BTreeSet<usize>>,
    /// Individuals within relative `argmax_tol` of the best plain marginal.
    pub highest_plain_marginal: BTreeSet<usize>,
}

fn argmax_set(values: &[Marginal], rel_tol: f64) -> BTreeSet<usize> {
    let top = values
        .iter()
        .copied()
        .fold(Marginal::Finite(0.0), Marginal::max);
    match top {
        Marginal::Infinite => values
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_infinite())
            .map(|(i, _)| i)
            .collect(),
        Marginal::Finite(m) => {
            let threshold = m - rel_tol * m;
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| matches!(v, Marginal::Finite(a) if *a >= threshold))
                .map(|(i, _)| i)
                .collect()
        }
    }
}

/// Computes the support and marginal-ordering sets at a profile.
pub fn classify(
    game: &FamilyGame,
    x: &AllocationProfile,
    support_tol: f64,
    argmax_tol: f64,
) -> Classification {
    let n = game.len();
    assert_eq!(x.len(), n, "profile size must match the game");
    let incoming = x.incoming_investment();
    let plain: Vec<Marginal> = (0..n)
        .map(|t| game.fitness(t).marginal(incoming[t]))
        .collect();

    let beneficiaries: Vec<BTreeSet<usize>> = (0..n)
        .map(|s| (0..n).filter(|&t| x.get(s, t) > support_tol).collect())
        .collect();
    let selfish: BTreeSet<usize> = (0..n)
        .filter(|&s| beneficiaries[s].iter().all(|&t| t == s))
        .collect();
    let altruistic: BTreeSet<usize> = (0..n).filter(|s| !selfish.contains(s)).collect();
    let totally_altruistic: BTreeSet<usize> =
        (0..n).filter(|&s| x.get(s, s) <= support_tol).collect();

    let highest_adjusted_marginal: Vec<BTreeSet<usize>> = (0..n)
        .map(|s| {
            let adjusted: Vec<Marginal> = (0..n)
                .map(|t| plain[t].scaled(game.relatedness(s, t)))
                .collect();
            argmax_set(&adjusted, argmax_tol)
        })
        .collect();
    let highest_plain_marginal = argmax_set(&plain, argmax_tol);

    Classification {
        beneficiaries,
        selfish,
        altruistic,
        totally_altruistic,
        highest_adjusted_marginal,
        highest_plain_marginal,
    }
}

/// Solver bookkeeping attached to a report.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveDiagnostics {
    pub mode: SolveMode,
    /// Iterations actually performed.
    pub iterations: usize,
    /// Final damping factor (1 for round-robin, which never damps).
    pub damping: f64,
    /// Largest entry-wise distance between the last profile and its best
    /// response.
    pub displacement: f64,
    pub converged: bool,
}

/// A solved (or honestly unsolved) instance: final profile, its certificate,
/// the classification sets, and solver diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub profile: AllocationProfile,
    pub certificate: KktCertificate,
    pub classification: Classification,
    pub diagnostics: SolveDiagnostics,
}

/// Iterates best responses from the spend-on-self profile until the
/// complementarity and budget residuals fall below `opts.kkt_tol`, or
/// `opts.max_iter` is reached. Never fails: non-convergence is reported
/// through the diagnostics and the certificate. Panics if the game itself is
/// invalid or the options are out of range.
pub fn solve_nash(game: &FamilyGame, opts: &SolveOptions) -> EquilibriumReport {
    let violations = game.validate();
    assert!(
        violations.is_empty(),
        "solve_nash requires a valid game: {}",
        violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    );
    assert!(
        opts.damping > 0.0 && opts.damping <= 1.0,
        "damping must lie in (0, 1], got {}",
        opts.damping
    );
    assert!(opts.kkt_tol > 0.0, "kkt_tol must be positive");

    let n = game.len();
    let mut x = AllocationProfile::spend_on_self(game);
    let mut gamma = opts.damping;
    let mut previous_complementarity = f64::INFINITY;
    let mut displacement = 0.0_f64;
    let mut iterations = 0;
    let mut certificate = build_certificate(game, &x, opts.kkt_tol);

    while iterations < opts.max_iter {
        if certificate.residuals.complementarity <= opts.kkt_tol
            && certificate.residuals.budget <= opts.kkt_tol
        {
            break;
        }
        iterations += 1;
        displacement = 0.0;

        match opts.mode {
            SolveMode::Simultaneous => {
                let incoming = x.incoming_investment();
                let responses: Vec<Vec<f64>> = (0..n)
                    .map(|s| {
                        let external: Vec<f64> =
                            (0..n).map(|t| incoming[t] - x.get(s, t)).collect();
                        water_fill(game, s, &external).allocation
                    })
                    .collect();
                for (s, response) in responses.iter().enumerate() {
                    for (t, &target_amount) in response.iter().enumerate() {
                        let current = x.get(s, t);
                        displacement = displacement.max((target_amount - current).abs());
                        x.set(s, t, (1.0 - gamma) * current + gamma * target_amount);
                    }
                }
            }
            SolveMode::RoundRobin => {
                for s in 0..n {
                    let incoming = x.incoming_investment();
                    let external: Vec<f64> = (0..n).map(|t| incoming[t] - x.get(s, t)).collect();
                    let response = water_fill(game, s, &external).allocation;
                    for (t, &target_amount) in response.iter().enumerate() {
                        displacement = displacement.max((target_amount - x.get(s, t)).abs());
                    }
                    x.set_row(s, &response);
                }
            }
        }

        let next = build_certificate(game, &x, opts.kkt_tol);
        if opts.mode == SolveMode::Simultaneous
            && next.residuals.complementarity > previous_complementarity
        {
            gamma *= 0.5;
        }
        previous_complementarity = next.residuals.complementarity;
        certificate = next;
    }

    let converged = certificate.certified;
    let classification = classify(game, &x, SUPPORT_TOL, ARGMAX_TOL);
    EquilibriumReport {
        profile: x,
        certificate,
        classification,
        diagnostics: SolveDiagnostics {
            mode: opts.mode,
            iterations,
            damping: if opts.mode == SolveMode::RoundRobin {
                1.0
            } else {
                gamma
            },
            displacement,
            converged,
        },
    }
}

/// Support inclusions that must hold at any certified profile: beneficiaries
/// lie in the top adjusted-marginal set, and — when marginals are strictly
/// positive and everyone is strictly more related to herself than to anyone
/// else — the top plain-marginal individuals are selfish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportInclusions {
    /// `(source, beneficiary)` pairs outside the source's top set.
    pub beneficiary_violations: Vec<(usize, usize)>,
    /// Whether the strict-relatedness/positive-marginal hypothesis held.
    pub selfish_hypothesis_met: bool,
    /// Why the hypothesis failed, when it did.
    pub hypothesis_note: Option<String>,
    /// Top plain-marginal individuals that are not selfish (only checked
    /// when the hypothesis holds).
    pub selfish_violations: Vec<usize>,
}

impl SupportInclusions {
    pub fn beneficiaries_within_argmax(&self) -> bool {
        self.beneficiary_violations.is_empty()
    }

    /// True when the selfishness claim holds, or was not applicable.
    pub fn top_marginal_selfish_holds(&self) -> bool {
        self.selfish_violations.is_empty()
    }
}

/// Checks both support inclusions at a certified report. Errors when the
/// report is not certified: the inclusions are only guaranteed at
/// equilibrium.
pub fn check_support_inclusions(
    game: &FamilyGame,
    report: &EquilibriumReport,
) -> Result<SupportInclusions, Error> {
    if !report.certificate.certified {
        return Err(Error::NotCertified);
    }
    let n = game.len();
    let classification = &report.classification;

    let mut beneficiary_violations = Vec::new();
    for s in 0..n {
        for &t in &classification.beneficiaries[s] {
            if !classification.highest_adjusted_marginal[s].contains(&t) {
                beneficiary_violations.push((s, t));
            }
        }
    }

    let incoming = report.profile.incoming_investment();
    let flat_marginal = (0..n).find(|&t| !game.fitness(t).marginal(incoming[t]).is_positive());
    let weak_diagonal = (0..n)
        .find(|&i| (0..n).any(|t| t != i && game.relatedness(i, t) >= game.relatedness(i, i)));

    let (selfish_hypothesis_met, hypothesis_note) = match (flat_marginal, weak_diagonal) {
        (Some(t), _) => (false, Some(format!("hypothesis not met: marginal of individual {t} is not strictly positive"))),
        (None, Some(i)) => (false, Some(format!("hypothesis not met: individual {i} is not strictly more related to herself than to everyone else"))),
        (None, None) => (true, None),
    };

    let selfish_violations = if selfish_hypothesis_met {
        classification
            .highest_plain_marginal
            .iter()
            .copied()
            .filter(|i| !classification.selfish.contains(i))
            .collect()
    } else {
        Vec::new()
    };

    Ok(SupportInclusions {
        beneficiary_violations,
        selfish_hypothesis_met,
        hypothesis_note,
        selfish_violations,
    })
}
