//! Command-line interface. `run` parses arguments, dispatches, and returns
//! the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::closed_form::{
    k_ignorance_dictator, l1_optimal, l1_regret_expression, l1_threshold, l2_adversarial,
    l2_regret_expression,
};
use crate::error::{Error, Result};
use crate::format::sig15;
use crate::general::{sensitive_parameter, OptTable, TableGame};
use crate::model::{Aggregator, LossKind, Params};
use crate::oracle::{brute_force_max_regret, brute_force_minimax, DEFAULT_DELTA};
use crate::simulation::{
    builtin_aggregators, estimate_params, evaluate, ingest_csv, run_experiment, write_csv,
    Evaluation, ExperimentConfig,
};
use crate::solver::solve_l2_nonadversarial;
use crate::worst_case::{worst_structure_l1, worst_structure_l2};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "robagg", version, about = "Robust aggregation of binary forecasts with adversarial experts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Loss {
    L1,
    L2,
}

impl From<Loss> for LossKind {
    fn from(l: Loss) -> Self {
        match l {
            Loss::L1 => LossKind::L1,
            Loss::L2 => LossKind::L2,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Instance {
    /// Total number of experts.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Number of adversarial experts.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Prior probability of state 1.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Pr[H | state 1].
    #[arg(long, default_value_t = 0.8)]
    a: f64,
    /// Pr[H | state 0].
    #[arg(long, default_value_t = 0.1)]
    b: f64,
}

impl Instance {
    fn params(&self) -> Result<Params> {
        Params::new(self.n, self.k, self.mu, self.a, self.b).map_err(usage)
    }
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal aggregator table. CSV columns: x,f (or one column per curve with --compare).
    Optimal {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, value_enum, default_value_t = Loss::L2)]
        loss: Loss,
        /// Emit the four reference curves: L1/L2 with and without adversaries.
        #[arg(long)]
        compare: bool,
        /// Solver tolerance for the L2 case without adversaries.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form regret against the adversary count. CSV columns: k,gamma,regret,formula,valid.
    RegretCurve {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, value_enum, default_value_t = Loss::L1)]
        loss: Loss,
        /// Largest adversary count; defaults to the largest k with 2k < n.
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Vote simulation. CSV columns: aggregator,mean_loss,mean_regret,stderr.
    Simulate {
        /// Truthful voters per item.
        #[arg(long, default_value_t = 100)]
        voters: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long, default_value_t = 0.85)]
        a: f64,
        #[arg(long, default_value_t = 0.15)]
        b: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// extreme, random or best-response.
        #[arg(long, default_value = "extreme")]
        strategy: String,
        #[arg(long, value_enum, default_value_t = Loss::L2)]
        loss: Loss,
        /// Evaluate a vote CSV (item,truth,v1..vn[,adv_mask]) instead of synthesizing.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also write the simulated votes to this CSV file.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Epsilon-optimal L2 aggregator without adversaries, as JSON.
    Solve {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Compare closed forms with the brute-force oracle; JSON report, exit 1 on mismatch.
    Verify {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, value_enum, default_value_t = Loss::L1)]
        loss: Loss,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Worst-case structure and strategy, as JSON.
    Worst {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, value_enum, default_value_t = Loss::L2)]
        loss: Loss,
        /// Support points x1,x2,x3,x4 for the L1 construction; defaults to k,n-k,k,n-k.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        x: Option<Vec<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Sensitivity report for a benchmark table (JSON), with optional exact regret.
    Sense {
        /// Table JSON: {"structures":[{"id","entries":[{"reports","opt","prob"}]}]}.
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Also compute the exact minimax regret bracket.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: Output,
    },
}

fn usage(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Usage(m),
        other => Error::Usage(other.to_string()),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        Error::Domain(_) | Error::Unsupported(_) => EXIT_DOMAIN,
        Error::Resource { .. } => EXIT_RESOURCE,
        Error::Io(_) | Error::Json(_) | Error::Parse { .. } | Error::Schema(_) => EXIT_IO,
    }
}

/// Runs the CLI on `args` (including the program name), writing results to
/// `stdout` unless `--out` is given and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(output: &Output, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",") + "\n";
    for r in rows {
        out += &r.join(",");
        out.push('\n');
    }
    out
}

fn aggregator_rows(f: &Aggregator) -> Vec<Vec<String>> {
    f.values()
        .iter()
        .enumerate()
        .map(|(x, v)| vec![x.to_string(), sig15(*v)])
        .collect()
}

fn optimal_aggregator(p: &Params, loss: LossKind, eps: f64) -> Result<Aggregator> {
    let r = match (loss, p.k()) {
        (LossKind::L2, 0) => return Ok(solve_l2_nonadversarial(p, eps)?.aggregator),
        (LossKind::L1, _) => l1_optimal(p)?,
        (LossKind::L2, _) => l2_adversarial(p)?,
    };
    if !r.valid {
        return Err(Error::Domain(format!(
            "no closed form at gamma={} for {loss}: valid up to {}",
            p.gamma(),
            r.threshold
        )));
    }
    Ok(r.aggregator)
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Optimal {
            inst,
            loss,
            compare,
            eps,
            format,
            output,
        } => {
            let p = inst.params()?;
            if compare {
                if p.k() == 0 {
                    return Err(Error::Usage("--compare needs k >= 1".into()));
                }
                let p0 = p.with_k(0)?;
                let curves = [
                    ("l1_nonadversarial", k_ignorance_dictator(p.n(), 0)?),
                    ("l1_adversarial", k_ignorance_dictator(p.n(), p.k())?),
                    ("l2_adversarial", optimal_aggregator(&p, LossKind::L2, eps)?),
                    ("l2_nonadversarial", solve_l2_nonadversarial(&p0, eps)?.aggregator),
                ];
                let text = match format {
                    Format::Csv => {
                        let mut header = vec!["x"];
                        header.extend(curves.iter().map(|c| c.0));
                        let rows: Vec<Vec<String>> = (0..=p.n())
                            .map(|x| {
                                std::iter::once(x.to_string())
                                    .chain(curves.iter().map(|c| sig15(c.1.value(x))))
                                    .collect()
                            })
                            .collect();
                        csv_table(&header, &rows)
                    }
                    Format::Json => to_json(
                        &curves
                            .iter()
                            .map(|(name, f)| (name.to_string(), f.values().to_vec()))
                            .collect::<std::collections::BTreeMap<_, _>>(),
                    )?,
                };
                emit(&output, &text, stdout)?;
            } else {
                let f = optimal_aggregator(&p, loss.into(), eps)?;
                let text = match format {
                    Format::Csv => csv_table(&["x", "f"], &aggregator_rows(&f)),
                    Format::Json => to_json(&json!({"values": f.values()}))?,
                };
                emit(&output, &text, stdout)?;
            }
            Ok(EXIT_OK)
        }
        Command::RegretCurve {
            inst,
            loss,
            k_max,
            format,
            output,
        } => {
            let p = inst.params()?;
            let n = p.n();
            let top = (n - 1) / 2;
            let k_max = k_max.unwrap_or(top);
            if k_max > top {
                return Err(Error::Usage(format!("--k-max must be at most {top}")));
            }
            let mut rows = Vec::new();
            for k in 0..=k_max {
                let q = p.with_k(k)?;
                let g = q.gamma();
                let (formula, valid) = match loss {
                    Loss::L1 => (
                        Some(l1_regret_expression(q.mu(), q.a(), q.b(), g)),
                        g <= l1_threshold(&q),
                    ),
                    Loss::L2 => (
                        l2_regret_expression(q.mu(), q.a(), q.b(), g).ok(),
                        l2_adversarial(&q)?.valid,
                    ),
                };
                rows.push((k, g, formula, valid));
            }
            let text = match format {
                Format::Csv => csv_table(
                    &["k", "gamma", "regret", "formula", "valid"],
                    &rows
                        .iter()
                        .map(|(k, g, f, v)| {
                            let f = f.map(sig15).unwrap_or_default();
                            vec![
                                k.to_string(),
                                sig15(*g),
                                if *v { f.clone() } else { String::new() },
                                f,
                                v.to_string(),
                            ]
                        })
                        .collect::<Vec<_>>(),
                ),
                Format::Json => to_json(
                    &rows
                        .iter()
                        .map(|(k, g, f, v)| json!({"k": k, "gamma": g, "regret": if *v { *f } else { None }, "formula": f, "valid": v}))
                        .collect::<Vec<_>>(),
                )?,
            };
            emit(&output, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Simulate {
            voters,
            k,
            mu,
            a,
            b,
            trials,
            seed,
            strategy,
            loss,
            input,
            dump,
            format,
            output,
        } => {
            let kind: LossKind = loss.into();
            let (ds, eval) = match input {
                Some(path) => {
                    let ds = ingest_csv(path)?;
                    let est = estimate_params(&ds)?;
                    let aggs = builtin_aggregators(&est, ds.n(), ds.k, kind)?;
                    let eval = evaluate(&ds, &aggs, kind, &est)?;
                    (ds, eval)
                }
                None => {
                    if voters == 0 || trials == 0 {
                        return Err(Error::Usage("--voters and --trials must be positive".into()));
                    }
                    Params::new(voters + k, k, mu, a, b).map_err(usage)?;
                    if !matches!(strategy.as_str(), "extreme" | "random" | "best-response" | "best_response") {
                        return Err(Error::Usage(format!("unknown strategy '{strategy}'")));
                    }
                    run_experiment(&ExperimentConfig {
                        voters,
                        k,
                        mu,
                        a,
                        b,
                        trials,
                        seed,
                        kind,
                        strategy,
                    })?
                }
            };
            if let Some(path) = dump {
                write_csv(&ds, std::fs::File::create(path)?)?;
            }
            emit(&output, &render_evaluation(&eval, format)?, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Solve { inst, eps, output } => {
            if inst.k != 0 {
                return Err(Error::Usage("solve handles k = 0 only".into()));
            }
            if !(eps > 0.0) {
                return Err(Error::Usage("--eps must be positive".into()));
            }
            let r = solve_l2_nonadversarial(&inst.params()?, eps)?;
            emit(&output, &to_json(&r)?, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            inst,
            loss,
            delta,
            output,
        } => {
            let p = inst.params()?;
            let report = verify_report(&p, loss.into(), delta)?;
            emit(&output, &to_json(&report)?, stdout)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Worst {
            inst,
            loss,
            x,
            output,
        } => {
            let p = inst.params()?;
            let wc = match loss {
                Loss::L2 => worst_structure_l2(&p)?,
                Loss::L1 => {
                    let (n, k) = (p.n(), p.k());
                    let x = x.unwrap_or_else(|| vec![k, n - k, k, n - k]);
                    worst_structure_l1(&p, [x[0], x[1], x[2], x[3]])?
                }
            };
            emit(&output, &to_json(&wc)?, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Sense {
            table,
            k,
            exact,
            output,
        } => {
            let text = std::fs::read_to_string(table)?;
            let t = OptTable::from_json(&text)?;
            let mut report = sensitive_parameter(&t, k)?;
            if exact {
                let sol = TableGame::new(&t, k)?.solve(1e-10);
                report.exact = Some((sol.lower, sol.upper));
            }
            emit(&output, &to_json(&report)?, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

fn render_evaluation(eval: &Evaluation, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => csv_table(
            &["aggregator", "mean_loss", "mean_regret", "stderr"],
            &eval
                .summary
                .iter()
                .map(|r| vec![r.name.clone(), sig15(r.mean_loss), sig15(r.mean_regret), sig15(r.stderr)])
                .collect::<Vec<_>>(),
        ),
        Format::Json => to_json(eval)?,
    })
}

/// Predicted-versus-oracle comparison for one instance.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub params: Params,
    pub loss: LossKind,
    pub delta: f64,
    /// Whether the closed form applies at this adversary ratio.
    pub predicted_valid: bool,
    pub predicted_regret: Option<f64>,
    pub predicted_values: Vec<f64>,
    /// Exact worst-case regret of the predicted aggregator over all two-point structures.
    pub oracle_regret_of_predicted: f64,
    pub oracle_minimax_regret: f64,
    pub oracle_minimax_values: Vec<f64>,
    pub max_pointwise_gap: f64,
    pub checks: Vec<VerifyCheck>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &str, gap: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.into(),
        gap,
        tolerance,
        pass: gap <= tolerance,
    }
}

pub fn verify_report(p: &Params, loss: LossKind, delta: f64) -> Result<VerifyReport> {
    let solver_eps = 1e-6;
    let (f, valid, predicted) = match (loss, p.k()) {
        (LossKind::L1, _) => {
            let r = l1_optimal(p)?;
            (r.aggregator, r.valid, r.regret)
        }
        (LossKind::L2, 0) => {
            let r = solve_l2_nonadversarial(p, solver_eps)?;
            (r.aggregator, true, Some(r.regret))
        }
        (LossKind::L2, _) => {
            let r = l2_adversarial(p)?;
            (r.aggregator, r.valid, r.regret)
        }
    };
    let (oracle_of_f, _) = brute_force_max_regret(&f, p, loss)?;
    let mm = brute_force_minimax(p, loss, delta)?;
    let max_pointwise_gap = f
        .values()
        .iter()
        .zip(mm.aggregator.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut checks = Vec::new();
    if let Some(r) = predicted {
        checks.push(check("minimax regret", (mm.regret - r).abs(), 2.0 * delta + solver_eps));
        if !(loss == LossKind::L2 && p.k() == 0) {
            checks.push(check("worst-case regret of closed form", (oracle_of_f - r).abs(), 1e-6));
        }
        if loss == LossKind::L1 {
            checks.push(check("pointwise aggregator", max_pointwise_gap, 2.0 * delta));
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        params: *p,
        loss,
        delta,
        predicted_valid: valid,
        predicted_regret: predicted,
        predicted_values: f.values().to_vec(),
        oracle_regret_of_predicted: oracle_of_f,
        oracle_minimax_regret: mm.regret,
        oracle_minimax_values: mm.aggregator.values().to_vec(),
        max_pointwise_gap,
        checks,
        pass,
    })
}
