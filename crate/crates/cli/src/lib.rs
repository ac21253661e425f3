//! The `evbet` command-line tool: games, confidence sequences, validity
//! checks and e-process audits over seeded, reproducible inputs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use evbet_core::betting::StrategySpec;
use evbet_core::confseq::{mu_grid, run_cs, DEFAULT_MU_GRID};
use evbet_core::evariables::{beta_interval, check_evariable};
use evbet_core::game::{compare_schedule, run_game, AlphaSchedule};
use evbet_core::iid::{check_iid_bruteforce, check_iid_closed_form, xi_stats, XiStats};
use evbet_core::io;
use evbet_core::multiround::{audit_eprocess, dominate_t2, EProcess, T2Outcome};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] evbet_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// The input was refuted and `--strict` was given.
    #[error("refuted: {0}")]
    Refuted(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Refuted(_) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "evbet", version, about = "Anytime-valid mean testing by coin betting")]
pub struct Cli {
    /// Master seed for all sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Encoding of tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Exit with code 3 when the input is refuted.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one testing-by-betting game and write its ledger.
    Simulate(SimulateArgs),
    /// Build a confidence sequence over a grid of candidate means.
    Cs(CsArgs),
    /// Compare a Hoeffding-class game with its dominating coin-bet shadow.
    Compare(CompareArgs),
    /// Check a tabulated single-round e-variable.
    Check(TableArgs),
    /// Audit a tabulated e-process over two-point trees.
    Audit(AuditArgs),
    /// Check a two-round table on {0, 1/2, 1} against the i.i.d. hypothesis.
    IidCheck(IidArgs),
    /// Find a dominating coin-bet for a tabulated e-variable.
    Dominate(DominateArgs),
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Data law: bernoulli:p, point:v, uniform-grid:k or table:path.csv.
    #[arg(long)]
    pub dist: String,
    /// Number of rounds.
    #[arg(long = "n", visible_alias = "horizon", default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub mu: f64,
    #[command(flatten)]
    pub stream: StreamArgs,
    /// constant:<lambda>, up or up:<K>.
    #[arg(long, default_value = "up")]
    pub strategy: String,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Use the uncentred universal-portfolio factor 1 + lambda x.
    #[arg(long)]
    pub up_raw: bool,
}

#[derive(Debug, Args)]
pub struct CsArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[arg(long, default_value = "up")]
    pub strategy: String,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Number of candidate means i/(grid+1).
    #[arg(long, default_value_t = DEFAULT_MU_GRID)]
    pub grid: usize,
    /// Report the running intersection of the confidence sets.
    #[arg(long)]
    pub running_intersect: bool,
    #[arg(long)]
    pub up_raw: bool,
    /// Also write the full membership matrix here.
    #[arg(long)]
    pub membership: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub mu: f64,
    #[command(flatten)]
    pub stream: StreamArgs,
    /// A constant alpha, or a CSV file with an `alpha` column (one row per round).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// CSV with columns point,value.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// CSV with columns depth,path,value.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub mu: f64,
    /// Stopping-time horizon; defaults to the table depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Comma-separated pair grid for the exhaustive search; defaults to the table grid.
    #[arg(long, value_delimiter = ',')]
    pub coarse_grid: Option<Vec<f64>>,
    /// Number of random trees.
    #[arg(long, default_value_t = 1000)]
    pub random: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct IidInput {
    /// Nine-row CSV with columns x1,x2,value.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// xi0,xi1,xi2.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub xi: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct IidArgs {
    #[command(flatten)]
    pub input: IidInput,
    /// Steps of the q-grid for the brute-force check.
    #[arg(long, default_value_t = 10_000)]
    pub q_steps: usize,
}

#[derive(Debug, Args)]
pub struct DominateArgs {
    /// point,value for one round; x1,x2,value with --t2.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub mu: f64,
    /// Treat the table as a two-round e-variable.
    #[arg(long)]
    pub t2: bool,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("--mu must lie in (0, 1), got {mu}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("--delta must lie in (0, 1), got {delta}")))
    }
}

fn sample(stream: &StreamArgs, seed: u64) -> Result<Vec<f64>> {
    if stream.n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let dist = io::parse_distribution(&stream.dist).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(dist.sample_stream(stream.n, seed))
}

fn strategy(literal: &str, raw: bool) -> Result<StrategySpec> {
    StrategySpec::parse(literal)
        .map(|s| s.with_raw(raw))
        .map_err(|e| CliError::Config(e.to_string()))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Sends `bytes` to `--out` if given, else to `stdout`.
fn deliver(cli: &Cli, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match &cli.out {
        Some(path) => {
            let mut f = File::create(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            f.write_all(bytes)?;
            f.flush()?;
        }
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(v)?;
    buf.push(b'\n');
    Ok(buf)
}

fn table_bytes<T: Serialize>(format: Format, rows: &[T]) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_csv(&mut buf, rows)?;
            Ok(buf)
        }
        Format::Json => json_bytes(&rows),
    }
}

fn verdict(cli: &Cli, stdout: &mut dyn Write, v: &Value, refuted: Option<String>) -> Result<()> {
    deliver(cli, stdout, &json_bytes(v)?)?;
    match refuted {
        Some(why) if cli.strict => Err(CliError::Refuted(why)),
        _ => Ok(()),
    }
}

/// Runs one command, writing its main output to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a, stdout),
        Command::Cs(a) => cmd_cs(cli, a, stdout),
        Command::Compare(a) => cmd_compare(cli, a, stdout),
        Command::Check(a) => cmd_check(cli, a, stdout),
        Command::Audit(a) => cmd_audit(cli, a, stdout),
        Command::IidCheck(a) => cmd_iid(cli, a, stdout),
        Command::Dominate(a) => cmd_dominate(cli, a, stdout),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub rejected_at: Option<usize>,
    pub final_log_wealth: f64,
    pub threshold: f64,
}

/// Ledger goes to `--out` (or stdout). With `--out` the summary is printed on
/// stdout; in JSON mode both are emitted as one object.
pub fn cmd_simulate(cli: &Cli, a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    check_mu(a.mu)?;
    check_delta(a.delta)?;
    let spec = strategy(&a.strategy, a.up_raw)?;
    let xs = sample(&a.stream, cli.seed)?;
    let mut player = spec.build(a.mu).map_err(|e| CliError::Config(e.to_string()))?;
    let ledger = run_game(a.mu, a.delta, &mut player, &xs);
    let summary = SimulateSummary {
        rejected_at: ledger.rejected_at(),
        final_log_wealth: ledger.log_wealth(),
        threshold: ledger.threshold(),
    };
    match cli.format {
        Format::Json => deliver(cli, stdout, &json_bytes(&json!({ "summary": summary, "ledger": ledger.rows() }))?),
        Format::Csv => {
            deliver(cli, stdout, &table_bytes(Format::Csv, ledger.rows())?)?;
            if cli.out.is_some() {
                stdout.write_all(&json_bytes(&summary)?)?;
            }
            Ok(())
        }
    }
}

pub fn cmd_cs(cli: &Cli, a: &CsArgs, stdout: &mut dyn Write) -> Result<()> {
    check_delta(a.delta)?;
    if a.grid == 0 {
        return Err(CliError::Config("--grid must be at least 1".into()));
    }
    let spec = strategy(&a.strategy, a.up_raw)?;
    let xs = sample(&a.stream, cli.seed)?;
    let state = run_cs(&xs, mu_grid(a.grid), a.delta, &spec, a.running_intersect)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = &a.membership {
        let bytes = table_bytes(cli.format, &state.membership_rows())?;
        File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    deliver(cli, stdout, &table_bytes(cli.format, &state.intervals())?)
}

fn alpha_schedule(lit: &str) -> Result<AlphaSchedule> {
    if let Ok(a) = lit.trim().parse::<f64>() {
        return Ok(AlphaSchedule::Constant(a));
    }
    let alphas = io::read_alphas(open(Path::new(lit))?).map_err(|e| CliError::Config(e.to_string()))?;
    if alphas.is_empty() {
        return Err(CliError::Config(format!("{lit}: no alpha values")));
    }
    Ok(AlphaSchedule::Sequence(alphas))
}

pub fn cmd_compare(cli: &Cli, a: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    check_mu(a.mu)?;
    let schedule = alpha_schedule(&a.alpha)?;
    let xs = sample(&a.stream, cli.seed)?;
    let rows = compare_schedule(a.mu, &xs, &schedule);
    deliver(cli, stdout, &table_bytes(cli.format, &rows)?)
}

pub fn cmd_check(cli: &Cli, a: &TableArgs, stdout: &mut dyn Write) -> Result<()> {
    check_mu(a.mu)?;
    let e = io::read_evariable(open(&a.table)?, a.mu)?;
    let report = check_evariable(&e);
    let certificate = if report.valid { Some(beta_interval(&e)?) } else { None };
    let v = json!({
        "valid": report.valid,
        "max_expectation": report.max_expectation,
        "witness": report.witness,
        "certificate": certificate,
    });
    let refuted = (!report.valid).then(|| format!("expectation {} under {:?}", report.max_expectation, report.witness));
    verdict(cli, stdout, &v, refuted)
}

pub fn cmd_audit(cli: &Cli, a: &AuditArgs, stdout: &mut dyn Write) -> Result<()> {
    check_mu(a.mu)?;
    let p = io::read_process(open(&a.table)?, a.mu)?;
    let depth = a.depth.unwrap_or(p.max_depth());
    let coarse = match &a.coarse_grid {
        Some(g) => g.clone(),
        None => p.space().points().to_vec(),
    };
    let report = audit_eprocess(&p, depth, &coarse, a.random, cli.seed)?;
    let refuted = (!report.pass).then(|| format!("stopped expectation {}", report.max));
    verdict(cli, stdout, &serde_json::to_value(&report)?, refuted)
}

pub fn cmd_iid(cli: &Cli, a: &IidArgs, stdout: &mut dyn Write) -> Result<()> {
    let (xi, conditional) = match (&a.input.table, &a.input.xi) {
        (Some(path), _) => {
            let table = io::read_pair_table(open(path)?, 0.5)?;
            let conditional = match dominate_t2(&table) {
                T2Outcome::Dominated(_) => json!({ "valid": true }),
                T2Outcome::Refuted(r) => json!({ "valid": false, "witness": r }),
            };
            (xi_stats(&table)?, Some(conditional))
        }
        (None, Some(v)) if v.len() == 3 => (XiStats::new(v[0], v[1], v[2]), None),
        _ => return Err(CliError::Config("--xi takes exactly three values".into())),
    };
    let closed = check_iid_closed_form(&xi);
    let brute = check_iid_bruteforce(&xi, a.q_steps);
    let v = json!({
        "xi": xi,
        "iid_valid": closed,
        "closed_form": closed,
        "bruteforce": brute,
        "conditional_valid": conditional.as_ref().map(|c| c["valid"].clone()),
        "conditional": conditional,
    });
    let refuted = (!closed).then(|| format!("i.i.d. maximum {} at q = {}", brute.max_expectation, brute.argmax_q));
    verdict(cli, stdout, &v, refuted)
}

pub fn cmd_dominate(cli: &Cli, a: &DominateArgs, stdout: &mut dyn Write) -> Result<()> {
    check_mu(a.mu)?;
    if !a.t2 {
        let e = io::read_evariable(open(&a.table)?, a.mu)?;
        return match beta_interval(&e) {
            Ok(c) => verdict(cli, stdout, &json!({ "dominated": true, "certificate": c }), None),
            Err(evbet_core::Error::NotAnEVariable { witness, expectation }) => verdict(
                cli,
                stdout,
                &json!({ "dominated": false, "witness": witness, "expectation": expectation }),
                Some(format!("expectation {expectation} under {witness:?}")),
            ),
            Err(e) => Err(e.into()),
        };
    }
    let table = io::read_pair_table(open(&a.table)?, a.mu)?;
    match dominate_t2(&table) {
        T2Outcome::Dominated(cb) => {
            let lambda2: Vec<Value> = table
                .space()
                .points()
                .iter()
                .zip(&cb.lambdas()[1])
                .map(|(x, l)| json!({ "x": x, "lambda": l }))
                .collect();
            let v = json!({ "dominated": true, "lambda1": cb.lambdas()[0][0], "lambda2": lambda2 });
            verdict(cli, stdout, &v, None)
        }
        T2Outcome::Refuted(r) => {
            let why = format!("stopped expectation {}", r.expectation);
            let v = json!({ "dominated": false, "refutation": r });
            verdict(cli, stdout, &v, Some(why))
        }
    }
}

/// Parses `args` (without the program name) and runs the command, capturing
/// stdout.
pub fn run_args<I, S>(args: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(std::iter::once("evbet".into()).chain(args.into_iter().map(Into::into)))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = Vec::new();
    run(&cli, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn alpha_literal_or_file() {
        assert_eq!(alpha_schedule("1.5").unwrap(), AlphaSchedule::Constant(1.5));
        assert_eq!(alpha_schedule("-2").unwrap(), AlphaSchedule::Constant(-2.0));
        assert!(alpha_schedule("/no/such/file.csv").is_err());
    }

    #[test]
    fn config_errors_exit_with_two() {
        let e = run_args(["simulate", "--mu", "1.5", "--dist", "point:0.5"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run_args(["cs", "--dist", "point:0.5", "--delta", "0"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run_args(["simulate", "--mu", "0.5", "--dist", "point:0.5", "--n", "0"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run_args(["simulate", "--mu", "0.5", "--dist", "beta:1"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run_args(["simulate", "--mu", "0.5", "--dist", "point:0.5", "--strategy", "kelly"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn simulate_without_out_prints_the_ledger() {
        let out = run_args(["simulate", "--mu", "0.1", "--dist", "point:1", "--strategy", "constant:10", "--n", "3"])
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(2).unwrap().ends_with(",1"));
    }
}
