//! JSON document types: game configs, profiles, reports.
//!
//! Documents are the boundary between files and domain types. Parsing returns
//! either a validated [`FamilyGame`] or an error that names the offending
//! individual or carries the parser's line/column context; validation
//! problems are surfaced verbatim.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{Classification, EquilibriumReport, KktCertificate, SolveDiagnostics};
use crate::error::Error;
use crate::fitness::{FitnessFunction, FitnessKind};
use crate::game::{AllocationProfile, FamilyGame};
use crate::oracle::{GridNashCheck, GridSpec};
use crate::pedigree::Pedigree;

/// Fitness entry of a game document. `w` is the weight, `c` the scale or
/// offset (unused by `linear`), `p` the exponent (used only by `power`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessConfig {
    pub kind: FitnessKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualConfig {
    pub id: String,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub fitness: Option<FitnessConfig>,
}

/// Where the relatedness matrix comes from: inline (keyed by the order of
/// `individuals`) or derived from a pedigree file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelatednessSpec {
    Matrix(Vec<Vec<f64>>),
    FromPedigree { from_pedigree: String },
}

/// A game document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub individuals: Vec<IndividualConfig>,
    pub relatedness: RelatednessSpec,
}

fn build_fitness(id: &str, config: &FitnessConfig) -> Result<FitnessFunction, Error> {
    let id = id.to_string();
    let require = |field: Option<f64>, name: &'static str| {
        field.ok_or(Error::MissingField {
            id: id.clone(),
            field: name,
        })
    };
    let forbid = |field: Option<f64>, name: &'static str, kind: &'static str| {
        if field.is_some() {
            Err(Error::UnusedParameter {
                id: id.clone(),
                param: name,
                kind,
            })
        } else {
            Ok(())
        }
    };
    match config.kind {
        FitnessKind::Log => {
            forbid(config.p, "p", "log")?;
            Ok(FitnessFunction::log(
                require(config.w, "w")?,
                require(config.c, "c")?,
            ))
        }
        FitnessKind::Power => Ok(FitnessFunction::power(
            require(config.w, "w")?,
            require(config.c, "c")?,
            require(config.p, "p")?,
        )),
        FitnessKind::SatExp => {
            forbid(config.p, "p", "sat_exp")?;
            Ok(FitnessFunction::sat_exp(
                require(config.w, "w")?,
                require(config.c, "c")?,
            ))
        }
        FitnessKind::Linear => {
            forbid(config.c, "c", "linear")?;
            forbid(config.p, "p", "linear")?;
            Ok(FitnessFunction::linear(require(config.w, "w")?))
        }
    }
}

fn fitness_to_config(f: &FitnessFunction) -> FitnessConfig {
    match *f {
        FitnessFunction::Log { weight, scale } => FitnessConfig {
            kind: FitnessKind::Log,
            w: Some(weight),
            c: Some(scale),
            p: None,
        },
        FitnessFunction::Power {
            weight,
            offset,
            exponent,
        } => FitnessConfig {
            kind: FitnessKind::Power,
            w: Some(weight),
            c: Some(offset),
            p: Some(exponent),
        },
        FitnessFunction::SatExp { weight, scale } => FitnessConfig {
            kind: FitnessKind::SatExp,
            w: Some(weight),
            c: Some(scale),
            p: None,
        },
        FitnessFunction::Linear { weight } => FitnessConfig {
            kind: FitnessKind::Linear,
            w: Some(weight),
            c: None,
            p: None,
        },
    }
}

impl GameConfig {
    /// Builds and validates the game. A pedigree must be supplied when the
    /// document references one; its ids are matched to the individuals by
    /// name, in any order.
    pub fn to_game(&self, pedigree: Option<&Pedigree>) -> Result<FamilyGame, Error> {
        let mut ids = Vec::with_capacity(self.individuals.len());
        let mut budgets = Vec::with_capacity(self.individuals.len());
        let mut fitness = Vec::with_capacity(self.individuals.len());
        for ind in &self.individuals {
            let budget = ind.budget.ok_or_else(|| Error::MissingField {
                id: ind.id.clone(),
                field: "budget",
            })?;
            let f = ind.fitness.as_ref().ok_or_else(|| Error::MissingField {
                id: ind.id.clone(),
                field: "fitness",
            })?;
            ids.push(ind.id.clone());
            budgets.push(budget);
            fitness.push(build_fitness(&ind.id, f)?);
        }

        let relatedness = match &self.relatedness {
            RelatednessSpec::Matrix(m) => m.clone(),
            RelatednessSpec::FromPedigree { .. } => {
                let ped = pedigree.ok_or(Error::PedigreeRequired)?;
                let matrix = ped.relatedness()?;
                let indices: Vec<usize> = ids
                    .iter()
                    .map(|id| {
                        matrix
                            .ids
                            .iter()
                            .position(|pid| pid == id)
                            .ok_or_else(|| Error::MissingFromPedigree { id: id.clone() })
                    })
                    .collect::<Result<_, _>>()?;
                indices
                    .iter()
                    .map(|&s| indices.iter().map(|&t| matrix.values[s][t]).collect())
                    .collect()
            }
        };

        let game = FamilyGame::new(ids, budgets, relatedness, fitness)?;
        let violations = game.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidGame(violations));
        }
        Ok(game)
    }

    /// The pedigree path referenced by this document, if any.
    pub fn pedigree_path(&self) -> Option<&str> {
        match &self.relatedness {
            RelatednessSpec::FromPedigree { from_pedigree } => Some(from_pedigree),
            RelatednessSpec::Matrix(_) => None,
        }
    }
}

/// Parses a game document; `pedigree` is only consulted when the document
/// references one.
pub fn parse_game_config(text: &str, pedigree: Option<&Pedigree>) -> Result<FamilyGame, Error> {
    let config: GameConfig = serde_json::from_str(text)?;
    config.to_game(pedigree)
}

/// The inline-matrix document reproducing a game exactly.
pub fn game_to_config(game: &FamilyGame) -> GameConfig {
    GameConfig {
        individuals: game
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| IndividualConfig {
                id: id.clone(),
                budget: Some(game.budget(i)),
                fitness: Some(fitness_to_config(game.fitness(i))),
            })
            .collect(),
        relatedness: RelatednessSpec::Matrix(game.relatedness_rows().to_vec()),
    }
}

/// An allocation profile document; row order matches the game's individuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub investments: Vec<Vec<f64>>,
}

pub fn parse_profile(text: &str) -> Result<AllocationProfile, Error> {
    let doc: ProfileDoc = serde_json::from_str(text)?;
    AllocationProfile::from_rows(doc.investments)
}

pub fn profile_to_doc(profile: &AllocationProfile) -> ProfileDoc {
    ProfileDoc {
        investments: profile.rows().to_vec(),
    }
}

/// Classification sets, spelled with individual ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDoc {
    pub beneficiaries: BTreeMap<String, Vec<String>>,
    pub selfish: Vec<String>,
    pub altruistic: Vec<String>,
    pub totally_altruistic: Vec<String>,
    pub highest_adjusted_marginal: BTreeMap<String, Vec<String>>,
    pub highest_plain_marginal: Vec<String>,
}

pub fn classification_to_doc(game: &FamilyGame, c: &Classification) -> ClassificationDoc {
    let name = |i: &usize| game.ids()[*i].clone();
    let names = |set: &std::collections::BTreeSet<usize>| set.iter().map(name).collect::<Vec<_>>();
    ClassificationDoc {
        beneficiaries: game
            .ids()
            .iter()
            .enumerate()
            .map(|(s, id)| (id.clone(), names(&c.beneficiaries[s])))
            .collect(),
        selfish: names(&c.selfish),
        altruistic: names(&c.altruistic),
        totally_altruistic: names(&c.totally_altruistic),
        highest_adjusted_marginal: game
            .ids()
            .iter()
            .enumerate()
            .map(|(s, id)| (id.clone(), names(&c.highest_adjusted_marginal[s])))
            .collect(),
        highest_plain_marginal: names(&c.highest_plain_marginal),
    }
}

/// The full solver report document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDoc {
    pub individuals: Vec<String>,
    pub profile: Vec<Vec<f64>>,
    pub incoming: Vec<f64>,
    pub inclusive_fitness: Vec<f64>,
    pub certificate: KktCertificate,
    pub classification: ClassificationDoc,
    pub diagnostics: SolveDiagnostics,
}

pub fn report_to_doc(game: &FamilyGame, report: &EquilibriumReport) -> ReportDoc {
    let n = game.len();
    ReportDoc {
        individuals: game.ids().to_vec(),
        profile: report.profile.rows().to_vec(),
        incoming: report.profile.incoming_investment(),
        inclusive_fitness: (0..n)
            .map(|i| game.inclusive_fitness(&report.profile, i))
            .collect(),
        certificate: report.certificate.clone(),
        classification: classification_to_doc(game, &report.classification),
        diagnostics: report.diagnostics.clone(),
    }
}

/// Outcome document of an exhaustive deviation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCheckDoc {
    pub pass: bool,
    pub step: f64,
    pub epsilon: f64,
    pub worst_source: String,
    pub worst_improvement: f64,
    pub worst_allocation: Vec<f64>,
}

pub fn oracle_check_to_doc(
    game: &FamilyGame,
    spec: &GridSpec,
    check: &GridNashCheck,
) -> OracleCheckDoc {
    OracleCheckDoc {
        pass: check.pass,
        step: spec.step,
        epsilon: spec.epsilon,
        worst_source: game.ids()[check.worst_source].clone(),
        worst_improvement: check.worst_improvement,
        worst_allocation: check.worst_allocation.clone(),
    }
}
