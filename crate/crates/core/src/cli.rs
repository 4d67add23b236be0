//! `kantgap` command line.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when an infeasible request
//! is reported as JSON data (`--format json` only).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::dual::{dual_value, relaxed_dual_value, verify_feasible};
use crate::error::{Error, Result};
use crate::flow::{evaluate_profile, optimal_coupling_at, optimal_partial_at, solve_profile};
use crate::io::{
    cell_set_json, coupling_json, dual_certificate_json, extended_json, parse_cell_set, parse_problem,
    problem_json, profile_csv, scalar_json, sweep_csv, to_pretty,
};
use crate::kellerer::{capacity_value, cover_value, kellerer_decompose, max_mass_on, CellSet, Decomposition};
use crate::measure::{ExtendedCost, Problem};
use crate::oracle::{brute_cover, brute_primal_many};
use crate::primal::{primal_value, refinement_study, relaxed_value, study_csv, truncation_sweep_const, EpsilonSpec};
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::scenarios::{closed_inf_band, example_diagonal, random_instance, Family, MarginalKind};

#[derive(Debug, Parser)]
#[command(name = "kantgap", version, about = "Finite-space transport duality laboratory")]
pub struct Cli {
    /// Exact rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "float")]
    pub exact: bool,
    /// Binary floating point with absolute tolerance 1e-9.
    #[arg(long, global = true)]
    pub float: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated problem.
    Gen(GenArgs),
    /// Primal and dual values with their gap.
    Solve(SolveArgs),
    /// Breakpoints of the cost-versus-mass profile.
    Profile(ProfileArgs),
    /// Optimal dual certificate.
    Dual(DualArgs),
    /// Truncated values `P_{c∧M}` over a grid of levels.
    Sweep(SweepArgs),
    /// Cover, capacity, maximum mass and null-set decomposition of a cell set.
    Covers(CoversArgs),
    /// Refinement table over a scenario family.
    Study(StudyArgs),
    /// Brute-force reference values for tiny instances.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Diagonal,
    Band,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarginalArg {
    Uniform,
    Random,
}

impl From<MarginalArg> for MarginalKind {
    fn from(m: MarginalArg) -> Self {
        match m {
            MarginalArg::Uniform => MarginalKind::Uniform,
            MarginalArg::Random => MarginalKind::Random,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 1)]
    pub bandwidth: usize,
    #[arg(long, default_value_t = 0.2)]
    pub inf_density: f64,
    #[arg(long, value_enum, default_value_t = MarginalArg::Uniform)]
    pub marginals: MarginalArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long)]
    pub n: usize,
    /// Column count for random instances (defaults to `n`).
    #[arg(long)]
    pub ny: Option<usize>,
    #[command(flatten)]
    pub params: ScenarioArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    /// Write `<PREFIX>.coupling.json` and `<PREFIX>.dual.json`.
    #[arg(long, value_name = "PREFIX")]
    pub witness: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub problem: PathBuf,
    /// Also return an optimal partial coupling of this mass.
    #[arg(long)]
    pub at: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DualArgs {
    pub problem: PathBuf,
    /// Report the relaxed dual over the chargeable set instead.
    #[arg(long)]
    pub relaxed: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub problem: PathBuf,
    /// Comma-separated nondecreasing truncation levels.
    #[arg(long)]
    pub m_grid: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoversArgs {
    pub problem: PathBuf,
    /// Cell set JSON; defaults to the infinite cells of the cost.
    #[arg(long)]
    pub cells: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long, value_enum)]
    pub family: Scenario,
    /// Sizes, e.g. `3,4,5` or `3-10`.
    #[arg(long)]
    pub n_list: String,
    /// Epsilons; a `/n` suffix scales by `1/n`, e.g. `1/n,1/4`.
    #[arg(long)]
    pub eps_grid: String,
    #[arg(long)]
    pub m_grid: String,
    #[command(flatten)]
    pub params: ScenarioArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub problem: PathBuf,
    /// Masses for the brute-force partial value.
    #[arg(long, default_value = "1")]
    pub masses: String,
    /// Evaluate the brute-force cover of this cell set instead.
    #[arg(long)]
    pub cells: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_with_args<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            code
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = if cli.float {
        execute::<f64>(cli)
    } else {
        execute::<Rational>(cli)
    };
    match result.and_then(|report| report.deliver(out)) {
        Ok(()) => 0,
        Err(e) if cli.format == Some(Format::Json) && reportable(&e) => {
            let body = json!({ "error": e.to_string(), "infeasible": true });
            let _ = out.write_all(to_pretty(&body).as_bytes());
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn reportable(e: &Error) -> bool {
    matches!(e, Error::InfeasibleMass { .. } | Error::NotApplicable(_))
}

/// Rendered output and where it goes.
struct Report {
    body: String,
    file: Option<PathBuf>,
}

impl Report {
    fn stdout(body: String) -> Self {
        Self { body, file: None }
    }

    fn to(body: String, file: &Option<PathBuf>) -> Self {
        Self {
            body,
            file: file.clone(),
        }
    }

    fn deliver(self, out: &mut dyn Write) -> Result<()> {
        match self.file {
            Some(path) => write_file(&path, &self.body),
            None => out
                .write_all(self.body.as_bytes())
                .map_err(|e| Error::Parse(format!("stdout: {e}"))),
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load<T: Scalar>(path: &Path) -> Result<Problem<T>> {
    parse_problem(&read_file(path)?)
}

fn format_or(cli: &Cli, default: Format, allowed: &[Format], command: &str) -> Result<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Error::Parse(format!("`{command}` does not support --format {f:?}").to_lowercase()))
    }
}

fn parse_grid(text: &str) -> Result<Vec<Rational>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_rational)
        .collect()
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let number = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("invalid size `{t}`")))
    };
    let mut sizes = Vec::new();
    for part in text.split(',').filter(|t| !t.trim().is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => sizes.extend(number(a)?..=number(b)?),
            None => sizes.push(number(part)?),
        }
    }
    Ok(sizes)
}

fn family(kind: Scenario, params: &ScenarioArgs) -> Family {
    match kind {
        Scenario::Diagonal => Family::Diagonal,
        Scenario::Band => Family::Band {
            bandwidth: params.bandwidth,
        },
        Scenario::Random => Family::Random {
            inf_density: params.inf_density,
            kind: params.marginals.into(),
            seed: params.seed,
        },
    }
}

fn text_lines(pairs: &[(&str, String)]) -> String {
    let mut s = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    s.push('\n');
    s
}

fn execute<T: Scalar>(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Gen(a) => gen::<T>(cli, a),
        Command::Solve(a) => solve::<T>(cli, a),
        Command::Profile(a) => profile::<T>(cli, a),
        Command::Dual(a) => dual::<T>(cli, a),
        Command::Sweep(a) => sweep::<T>(cli, a),
        Command::Covers(a) => covers::<T>(cli, a),
        Command::Study(a) => study::<T>(cli, a),
        Command::Oracle(a) => oracle(cli, a),
    }
}

fn gen<T: Scalar>(cli: &Cli, a: &GenArgs) -> Result<Report> {
    format_or(cli, Format::Json, &[Format::Json], "gen")?;
    let problem = match a.scenario {
        Scenario::Diagonal => example_diagonal(a.n)?,
        Scenario::Band => closed_inf_band(a.n, a.params.bandwidth)?,
        Scenario::Random => random_instance(
            a.n,
            a.ny.unwrap_or(a.n),
            a.params.inf_density,
            a.params.marginals.into(),
            a.params.seed,
        )?,
    };
    let problem: Problem<T> = problem.map(T::from_rational);
    Ok(Report::to(to_pretty(&problem_json(&problem)), &a.output))
}

fn solve<T: Scalar>(cli: &Cli, a: &SolveArgs) -> Result<Report> {
    let format = format_or(cli, Format::Text, &[Format::Text, Format::Json], "solve")?;
    let Problem { cost, mu, nu } = load::<T>(&a.problem)?;
    let p = primal_value(&cost, &mu, &nu)?;
    let d = dual_value(&cost, &mu, &nu)?;
    let gap = match (&p, &d.value) {
        (ExtendedCost::Finite(x), ExtendedCost::Finite(y)) => {
            let g = x.clone() - y.clone();
            Some(if g.is_negligible() { T::zero() } else { g })
        }
        (ExtendedCost::Infinite, ExtendedCost::Infinite) => None,
        _ => {
            return Err(Error::PostconditionViolated(format!(
                "primal {p} and dual {} disagree on finiteness",
                d.value
            )))
        }
    };
    if let Some(g) = &gap {
        if !g.is_zero() {
            return Err(Error::PostconditionViolated(format!("duality gap {}", g.render())));
        }
    }

    let mut witness_paths = Vec::new();
    if let Some(prefix) = &a.witness {
        let stem = prefix.display().to_string();
        if p.is_finite() {
            let pi = optimal_coupling_at(&cost, &mu, &nu, &T::one())?;
            let path = PathBuf::from(format!("{stem}.coupling.json"));
            write_file(&path, &to_pretty(&coupling_json(&pi)))?;
            witness_paths.push(("coupling", path));
        }
        let feasible = verify_feasible(&d.pair, &cost).feasible;
        let path = PathBuf::from(format!("{stem}.dual.json"));
        write_file(&path, &to_pretty(&dual_certificate_json(&d.pair, feasible)))?;
        witness_paths.push(("dual", path));
    }

    let body = match format {
        Format::Json => {
            let mut obj = json!({ "P": extended_json(&p), "D": extended_json(&d.value) });
            if let Some(g) = &gap {
                obj["gap"] = scalar_json(g);
            }
            for (k, path) in &witness_paths {
                obj[*k] = Value::String(path.display().to_string());
            }
            to_pretty(&obj)
        }
        _ => {
            let mut fields = vec![("P", p.render()), ("D", d.value.render())];
            fields.push(("gap", gap.map_or_else(|| "0".to_string(), |g| g.render())));
            let mut s = text_lines(&fields);
            for (k, path) in &witness_paths {
                s.push_str(&format!("{k}: {}\n", path.display()));
            }
            s
        }
    };
    Ok(Report::stdout(body))
}

fn profile<T: Scalar>(cli: &Cli, a: &ProfileArgs) -> Result<Report> {
    let format = format_or(cli, Format::Csv, &[Format::Csv, Format::Json, Format::Text], "profile")?;
    let Problem { cost, mu, nu } = load::<T>(&a.problem)?;
    let prof = solve_profile(&cost, &mu, &nu)?;
    let partial = match &a.at {
        Some(m) => {
            let m = T::from_rational(&parse_rational(m)?);
            Some((m.clone(), optimal_partial_at(&cost, &mu, &nu, &m)?))
        }
        None => None,
    };
    let body = match format {
        Format::Json => {
            let mut obj = json!({
                "breakpoints": prof
                    .breakpoints()
                    .iter()
                    .map(|(m, c)| json!([scalar_json(m), scalar_json(c)]))
                    .collect::<Vec<_>>(),
                "max_mass": scalar_json(prof.max_mass()),
            });
            if let Some((m, opt)) = &partial {
                obj["at"] = json!({
                    "mass": scalar_json(m),
                    "cost": extended_json(&evaluate_profile(&prof, m)?),
                    "coupling": coupling_json(&opt.coupling),
                });
            }
            to_pretty(&obj)
        }
        _ => {
            let mut s = profile_csv(&prof);
            if let Some((m, _)) = &partial {
                if format == Format::Text {
                    s.push_str(&text_lines(&[
                        ("mass", m.render()),
                        ("cost", evaluate_profile(&prof, m)?.render()),
                    ]));
                }
            }
            s
        }
    };
    Ok(Report::to(body, &a.output))
}

fn dual<T: Scalar>(cli: &Cli, a: &DualArgs) -> Result<Report> {
    let format = format_or(cli, Format::Json, &[Format::Json, Format::Text], "dual")?;
    let Problem { cost, mu, nu } = load::<T>(&a.problem)?;
    if a.relaxed {
        let rel = relaxed_dual_value(&cost, &mu, &nu)?;
        let feasible = verify_feasible(&rel.pair, &rel_cost(&cost, &rel.chargeable)).feasible;
        let body = match format {
            Format::Json => {
                let mut obj = dual_certificate_json(&rel.pair, feasible);
                obj["value"] = scalar_json(&rel.value);
                obj["chargeable"] = cell_set_json(&rel.chargeable)["pairs"].clone();
                to_pretty(&obj)
            }
            _ => text_lines(&[("D_rel", rel.value.render()), ("chargeable", rel.chargeable.len().to_string())]),
        };
        return Ok(Report::to(body, &a.output));
    }
    let sol = dual_value(&cost, &mu, &nu)?;
    let feasible = verify_feasible(&sol.pair, &cost).feasible;
    let body = match format {
        Format::Json => {
            let mut obj = dual_certificate_json(&sol.pair, feasible);
            obj["value"] = extended_json(&sol.value);
            if let Some(ray) = &sol.ray {
                obj["ray"] = json!({ "rows": ray.rows, "cols": ray.cols, "rate": scalar_json(&ray.rate) });
            }
            to_pretty(&obj)
        }
        _ => {
            let render = |v: &[crate::dual::Potential<T>]| v.iter().map(|p| p.render()).collect::<Vec<_>>().join(",");
            text_lines(&[
                ("D", sol.value.render()),
                ("phi", render(&sol.pair.phi)),
                ("psi", render(&sol.pair.psi)),
                ("feasible", feasible.to_string()),
            ])
        }
    };
    Ok(Report::to(body, &a.output))
}

/// The cost restricted to chargeable cells.
fn rel_cost<T: Scalar>(c: &crate::measure::CostMatrix<T>, s: &CellSet) -> crate::measure::CostMatrix<T> {
    c.restricted(|i, j| s.contains(i, j))
}

fn sweep<T: Scalar>(cli: &Cli, a: &SweepArgs) -> Result<Report> {
    let format = format_or(cli, Format::Csv, &[Format::Csv, Format::Json], "sweep")?;
    let Problem { cost, mu, nu } = load::<T>(&a.problem)?;
    let levels: Vec<T> = parse_grid(&a.m_grid)?.iter().map(T::from_rational).collect();
    let values: Vec<ExtendedCost<T>> = truncation_sweep_const(&cost, &mu, &nu, &levels)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let body = match format {
        Format::Json => to_pretty(&json!({
            "levels": levels.iter().map(scalar_json).collect::<Vec<_>>(),
            "values": values.iter().map(extended_json).collect::<Vec<_>>(),
            "relaxed": extended_json(&relaxed_value(&cost, &mu, &nu)?),
        })),
        _ => sweep_csv(&levels, &values),
    };
    Ok(Report::to(body, &a.output))
}

fn covers<T: Scalar>(cli: &Cli, a: &CoversArgs) -> Result<Report> {
    let format = format_or(cli, Format::Json, &[Format::Json, Format::Text], "covers")?;
    let Problem { cost, mu, nu } = load::<T>(&a.problem)?;
    let l = match &a.cells {
        Some(path) => parse_cell_set(&read_file(path)?, cost.nx(), cost.ny())?,
        None => CellSet::infinite_cells(&cost),
    };
    let (m, cover) = cover_value(&l, &mu, &nu)?;
    let (mass, _) = max_mass_on(&l, &mu, &nu)?;
    let gamma = if cost.nx() == cost.ny() && mu == nu {
        Some(capacity_value(&l, &mu)?.0)
    } else {
        None
    };
    let decomposition = kellerer_decompose(&l, &mu, &nu)?;
    let body = match format {
        Format::Json => {
            let decomposition = match &decomposition {
                Decomposition::NullCover { rows, cols } => json!({ "null_cover": { "rows": rows, "cols": cols } }),
                Decomposition::Witness(pi) => json!({ "witness": coupling_json(pi) }),
            };
            to_pretty(&json!({
                "cells": cell_set_json(&l)["pairs"].clone(),
                "m": scalar_json(&m),
                "cover": { "rows": cover.rows, "cols": cover.cols },
                "max_mass": scalar_json(&mass),
                "gamma": gamma.as_ref().map_or(Value::Null, scalar_json),
                "decomposition": decomposition,
            }))
        }
        _ => text_lines(&[
            ("m", m.render()),
            ("max_mass", mass.render()),
            ("gamma", gamma.map_or_else(|| "n/a".to_string(), |g| g.render())),
            (
                "decomposition",
                match decomposition {
                    Decomposition::NullCover { .. } => "null".to_string(),
                    Decomposition::Witness(_) => "witness".to_string(),
                },
            ),
        ]),
    };
    Ok(Report::to(body, &a.output))
}

fn study<T: Scalar>(cli: &Cli, a: &StudyArgs) -> Result<Report> {
    let format = format_or(cli, Format::Csv, &[Format::Csv, Format::Json], "study")?;
    let sizes = parse_sizes(&a.n_list)?;
    let eps = a
        .eps_grid
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(EpsilonSpec::parse)
        .collect::<Result<Vec<_>>>()?;
    let levels = parse_grid(&a.m_grid)?;
    let rows = refinement_study::<T>(&family(a.family, &a.params), &sizes, &eps, &levels)?;
    let body = match format {
        Format::Json => to_pretty(&Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "epsilon": scalar_json(&r.epsilon),
                        "M": scalar_json(&r.level),
                        "P": extended_json(&r.primal),
                        "P_eps": extended_json(&r.partial),
                        "P_trunc": extended_json(&r.truncated),
                        "D": extended_json(&r.dual),
                    })
                })
                .collect(),
        )),
        _ => study_csv(&rows),
    };
    Ok(Report::to(body, &a.output))
}

fn oracle(cli: &Cli, a: &OracleArgs) -> Result<Report> {
    if cli.float {
        return Err(Error::NotApplicable("the oracle runs in exact mode only".into()));
    }
    let format = format_or(cli, Format::Text, &[Format::Text, Format::Json], "oracle")?;
    let Problem { cost, mu, nu } = load::<Rational>(&a.problem)?;
    if let Some(path) = &a.cells {
        let l = parse_cell_set(&read_file(path)?, cost.nx(), cost.ny())?;
        let m = brute_cover(&l, &mu, &nu)?;
        let body = match format {
            Format::Json => to_pretty(&json!({ "m": scalar_json(&m) })),
            _ => text_lines(&[("m", m.render())]),
        };
        return Ok(Report::stdout(body));
    }
    let masses = parse_grid(&a.masses)?;
    let values = brute_primal_many(&cost, &mu, &nu, &masses)?;
    let body = match format {
        Format::Json => to_pretty(&Value::Array(
            masses
                .iter()
                .zip(&values)
                .map(|(m, v)| json!({ "mass": scalar_json(m), "cost": extended_json(v) }))
                .collect(),
        )),
        _ => masses
            .iter()
            .zip(&values)
            .map(|(m, v)| text_lines(&[("mass", m.render()), ("cost", v.render())]))
            .collect(),
    };
    Ok(Report::stdout(body))
}
