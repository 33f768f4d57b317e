//! Command-line driver: solve, verify, classify, oracle-check, pedigree and
//! sweep workflows over JSON game documents.
//!
//! Exit codes: 0 success (and certified, where that applies), 1 usage error,
//! 2 input or validation error, 3 the computation ran but did not certify.
//! Data goes to `-o` files or stdout; diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use kinalloc::formats::{
    classification_to_doc, oracle_check_to_doc, parse_profile, report_to_doc, GameConfig,
};
use kinalloc::{
    classify, grid_nash_check, kkt_verify, solve_nash, AllocationProfile, FamilyGame,
    FitnessFunction, GridSpec, Pedigree, SolveMode, SolveOptions,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CERTIFIED: u8 = 3;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] kinalloc::Error),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        }
    }
}

fn require_positive(value: f64, flag: &str) -> Result<(), CliError> {
    if value.is_nan() || value <= 0.0 {
        return Err(CliError::Usage(format!(
            "{flag} must be positive, got {value}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Exact best responses, sources updated in index order.
    #[value(name = "round_robin")]
    RoundRobin,
    /// Damped simultaneous best responses.
    #[value(name = "simultaneous")]
    Simultaneous,
}

impl From<ModeArg> for SolveMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::RoundRobin => SolveMode::RoundRobin,
            ModeArg::Simultaneous => SolveMode::Simultaneous,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kinalloc",
    version,
    about = "Nash equilibria of family resource-allocation games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct SolverFlags {
    /// Iteration scheme.
    #[arg(long, value_enum, default_value_t = ModeArg::RoundRobin)]
    mode: ModeArg,
    /// Damping factor in (0, 1] for simultaneous mode.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Certification tolerance on every first-order residual.
    #[arg(long, default_value_t = 1e-8)]
    kkt_tol: f64,
}

impl SolverFlags {
    fn to_options(&self) -> Result<SolveOptions, CliError> {
        if self.gamma.is_nan() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return Err(CliError::Usage(format!(
                "--gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        require_positive(self.kkt_tol, "--kkt-tol")?;
        Ok(SolveOptions {
            mode: self.mode.into(),
            damping: self.gamma,
            max_iter: self.max_iter,
            kkt_tol: self.kkt_tol,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a Nash equilibrium and write the full report.
    Solve {
        /// Game document (JSON).
        game: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Report destination; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a profile's first-order certificate.
    Verify {
        game: PathBuf,
        /// Profile document (JSON).
        profile: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        kkt_tol: f64,
    },
    /// Report beneficiaries, selfish/altruistic sets and marginal orderings.
    Classify {
        game: PathBuf,
        profile: PathBuf,
        /// Investments at or below this level do not count as support.
        #[arg(long, default_value_t = 1e-9)]
        support_tol: f64,
        /// Relative slack for top-marginal set membership.
        #[arg(long, default_value_t = 1e-7)]
        argmax_tol: f64,
    },
    /// Exhaustively search lattice deviations against a profile.
    OracleCheck {
        game: PathBuf,
        profile: PathBuf,
        /// Lattice spacing in effort units.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Largest tolerated payoff improvement.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Compute relatedness coefficients from a pedigree.
    Pedigree {
        pedigree: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-solve across one scalar parameter and emit a CSV of equilibria.
    Sweep {
        game: PathBuf,
        /// Parameter path: budget/<id>, relatedness/<src>/<tgt>, or
        /// fitness/<id>/<w|c|p>.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of rows, endpoints included.
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        solver: SolverFlags,
        /// CSV destination; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Solve {
            game,
            solver,
            output,
        } => cmd_solve(&game, &solver, output.as_deref()),
        Command::Verify {
            game,
            profile,
            kkt_tol,
        } => cmd_verify(&game, &profile, kkt_tol),
        Command::Classify {
            game,
            profile,
            support_tol,
            argmax_tol,
        } => cmd_classify(&game, &profile, support_tol, argmax_tol),
        Command::OracleCheck {
            game,
            profile,
            step,
            epsilon,
        } => cmd_oracle_check(&game, &profile, step, epsilon),
        Command::Pedigree { pedigree, output } => cmd_pedigree(&pedigree, output.as_deref()),
        Command::Sweep {
            game,
            param,
            from,
            to,
            steps,
            solver,
            output,
        } => cmd_sweep(&game, &param, from, to, steps, &solver, output.as_deref()),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_pedigree(path: &Path) -> Result<Pedigree, CliError> {
    let text = read_file(path)?;
    Ok(serde_json::from_str(&text).map_err(kinalloc::Error::from)?)
}

/// Loads a game document; a referenced pedigree file is resolved relative to
/// the game file's directory.
fn load_game(path: &Path) -> Result<FamilyGame, CliError> {
    let text = read_file(path)?;
    let config: GameConfig = serde_json::from_str(&text).map_err(kinalloc::Error::from)?;
    let pedigree = match config.pedigree_path() {
        Some(reference) => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            Some(load_pedigree(&base.join(reference))?)
        }
        None => None,
    };
    Ok(config.to_game(pedigree.as_ref())?)
}

fn load_profile_for(game: &FamilyGame, path: &Path) -> Result<AllocationProfile, CliError> {
    let profile = parse_profile(&read_file(path)?)?;
    let violations = game.validate_profile(&profile)?;
    if !violations.is_empty() {
        return Err(kinalloc::Error::InfeasibleProfile(violations).into());
    }
    Ok(profile)
}

fn write_document<D: serde::Serialize>(doc: &D, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(kinalloc::Error::from)?;
    text.push('\n');
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(
    game_path: &Path,
    solver: &SolverFlags,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let game = load_game(game_path)?;
    let options = solver.to_options()?;
    let report = solve_nash(&game, &options);
    write_document(&report_to_doc(&game, &report), output)?;
    if report.diagnostics.converged {
        Ok(EXIT_OK)
    } else {
        let residuals = &report.certificate.residuals;
        eprintln!(
            "did not certify after {} iterations: complementarity {:.3e}, budget {:.3e}",
            report.diagnostics.iterations, residuals.complementarity, residuals.budget
        );
        Ok(EXIT_NOT_CERTIFIED)
    }
}

fn cmd_verify(game_path: &Path, profile_path: &Path, kkt_tol: f64) -> Result<u8, CliError> {
    require_positive(kkt_tol, "--kkt-tol")?;
    let game = load_game(game_path)?;
    let profile = parse_profile(&read_file(profile_path)?)?;
    let certificate = kkt_verify(&game, &profile, kkt_tol)?;
    let certified = certificate.certified;
    write_document(&certificate, None)?;
    if certified {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "not certified: worst residual {:.3e}",
            certificate.residuals.max_residual()
        );
        Ok(EXIT_NOT_CERTIFIED)
    }
}

fn cmd_classify(
    game_path: &Path,
    profile_path: &Path,
    support_tol: f64,
    argmax_tol: f64,
) -> Result<u8, CliError> {
    let game = load_game(game_path)?;
    let profile = load_profile_for(&game, profile_path)?;
    let classification = classify(&game, &profile, support_tol, argmax_tol);
    write_document(&classification_to_doc(&game, &classification), None)?;
    Ok(EXIT_OK)
}

fn cmd_oracle_check(
    game_path: &Path,
    profile_path: &Path,
    step: f64,
    epsilon: f64,
) -> Result<u8, CliError> {
    require_positive(step, "--step")?;
    require_positive(epsilon, "--epsilon")?;
    let game = load_game(game_path)?;
    let profile = load_profile_for(&game, profile_path)?;
    let spec = GridSpec { step, epsilon };
    let check = grid_nash_check(&game, &profile, &spec)?;
    let pass = check.pass;
    write_document(&oracle_check_to_doc(&game, &spec, &check), None)?;
    if pass {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "deviation found: {} improves by {:.3e}",
            game.ids()[check.worst_source],
            check.worst_improvement
        );
        Ok(EXIT_NOT_CERTIFIED)
    }
}

fn cmd_pedigree(pedigree_path: &Path, output: Option<&Path>) -> Result<u8, CliError> {
    let pedigree = load_pedigree(pedigree_path)?;
    let matrix = pedigree.relatedness()?;
    write_document(&matrix, output)?;
    Ok(EXIT_OK)
}

/// A scalar location inside a game, addressable from the command line.
#[derive(Debug, Clone, Copy)]
enum ParamPath {
    Budget(usize),
    Relatedness(usize, usize),
    FitnessWeight(usize),
    FitnessScale(usize),
    FitnessExponent(usize),
}

fn parse_param_path(game: &FamilyGame, path: &str) -> Result<ParamPath, CliError> {
    let lookup = |id: &str| {
        game.index_of(id)
            .ok_or_else(|| CliError::Input(format!("unknown individual {id:?} in --param")))
    };
    let parts: Vec<&str> = path.split('/').collect();
    match parts.as_slice() {
        ["budget", id] => Ok(ParamPath::Budget(lookup(id)?)),
        ["relatedness", src, tgt] => Ok(ParamPath::Relatedness(lookup(src)?, lookup(tgt)?)),
        ["fitness", id, "w"] => Ok(ParamPath::FitnessWeight(lookup(id)?)),
        ["fitness", id, "c"] => Ok(ParamPath::FitnessScale(lookup(id)?)),
        ["fitness", id, "p"] => Ok(ParamPath::FitnessExponent(lookup(id)?)),
        _ => Err(CliError::Usage(format!(
            "--param must be budget/<id>, relatedness/<src>/<tgt> or fitness/<id>/<w|c|p>, got {path:?}"
        ))),
    }
}

fn apply_param(game: &FamilyGame, path: ParamPath, value: f64) -> Result<FamilyGame, CliError> {
    let mut budgets = game.budgets().to_vec();
    let mut relatedness = game.relatedness_rows().to_vec();
    let mut fitness = game.fitness_all().to_vec();
    match path {
        ParamPath::Budget(i) => budgets[i] = value,
        ParamPath::Relatedness(s, t) => relatedness[s][t] = value,
        ParamPath::FitnessWeight(i) => match &mut fitness[i] {
            FitnessFunction::Log { weight, .. }
            | FitnessFunction::Power { weight, .. }
            | FitnessFunction::SatExp { weight, .. }
            | FitnessFunction::Linear { weight } => *weight = value,
        },
        ParamPath::FitnessScale(i) => match &mut fitness[i] {
            FitnessFunction::Log { scale, .. } | FitnessFunction::SatExp { scale, .. } => {
                *scale = value
            }
            FitnessFunction::Power { offset, .. } => *offset = value,
            FitnessFunction::Linear { .. } => {
                return Err(CliError::Input(format!(
                    "individual {:?} has a linear curve with no scale parameter",
                    game.ids()[i]
                )))
            }
        },
        ParamPath::FitnessExponent(i) => match &mut fitness[i] {
            FitnessFunction::Power { exponent, .. } => *exponent = value,
            _ => {
                return Err(CliError::Input(format!(
                    "individual {:?} does not have a power curve",
                    game.ids()[i]
                )))
            }
        },
    }
    let modified = FamilyGame::new(game.ids().to_vec(), budgets, relatedness, fitness)?;
    let violations = modified.validate();
    if !violations.is_empty() {
        return Err(kinalloc::Error::InvalidGame(violations).into());
    }
    Ok(modified)
}

/// 17 significant digits: enough for a lossless f64 round trip.
fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn cmd_sweep(
    game_path: &Path,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    solver: &SolverFlags,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let base = load_game(game_path)?;
    let path = parse_param_path(&base, param)?;
    let options = solver.to_options()?;
    let n = base.len();
    let ids = base.ids();

    let mut header = vec!["param".to_string(), "converged".to_string()];
    for s in 0..n {
        for t in 0..n {
            header.push(format!("x[{}->{}]", ids[s], ids[t]));
        }
    }
    for id in ids {
        header.push(format!("fitness[{id}]"));
    }
    for id in ids {
        header.push(format!("selfish[{id}]"));
    }
    for id in ids {
        header.push(format!("totally_altruistic[{id}]"));
    }

    let mut rows: Vec<Vec<String>> = Vec::with_capacity(steps);
    let mut all_converged = true;
    for k in 0..steps {
        let value = if steps == 1 {
            from
        } else {
            from + (to - from) * k as f64 / (steps - 1) as f64
        };
        let game = apply_param(&base, path, value)?;
        let report = solve_nash(&game, &options);
        if !report.diagnostics.converged {
            all_converged = false;
            eprintln!("step {k} (param {value}): did not certify");
        }

        let mut row = vec![fmt_f64(value), report.diagnostics.converged.to_string()];
        for s in 0..n {
            for t in 0..n {
                row.push(fmt_f64(report.profile.get(s, t)));
            }
        }
        for i in 0..n {
            row.push(fmt_f64(game.inclusive_fitness(&report.profile, i)));
        }
        for i in 0..n {
            row.push(report.classification.selfish.contains(&i).to_string());
        }
        for i in 0..n {
            row.push(
                report
                    .classification
                    .totally_altruistic
                    .contains(&i)
                    .to_string(),
            );
        }
        rows.push(row);
    }

    let mut writer: csv::Writer<Box<dyn Write>> = match output {
        Some(path) => {
            let file = fs::File::create(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            csv::Writer::from_writer(Box::new(file))
        }
        None => csv::Writer::from_writer(Box::new(std::io::stdout())),
    };
    let io_error = |source: csv::Error| CliError::Input(format!("csv output failed: {source}"));
    writer.write_record(&header).map_err(io_error)?;
    for row in &rows {
        writer.write_record(row).map_err(io_error)?;
    }
    writer
        .flush()
        .map_err(|source| CliError::Input(format!("csv output failed: {source}")))?;

    Ok(if all_converged {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    })
}
