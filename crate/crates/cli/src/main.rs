use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use zenotrap::scenario::{
    compare, eval_expression, headline_numbers, kappa_grid, parse_config, preset, resolve_out_dir, run_scenario,
    sweep_kappa, write_sweep, ComparisonReport, ScenarioConfig, ScenarioError, HEADLINE_PRESET, OUT_DIR_ENV, PRESETS,
};

#[derive(Parser)]
#[command(name = "zenotrap", version, about = "Measured trapped-ion dynamics: runs, κ sweeps, presets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario file and compare it with the closed form.
    Run {
        config: PathBuf,
        #[arg(long, help = out_help())]
        out: Option<PathBuf>,
    },
    /// Repeat a scenario over a κ grid.
    Sweep {
        config: PathBuf,
        /// start:stop:steps[:log]; each bound may be an expression such as `0.25` or `2pi*1e5`.
        #[arg(long)]
        kappa: String,
        #[arg(long, value_enum, default_value_t = KappaUnit::PerSecond)]
        kappa_unit: KappaUnit,
        #[arg(long, help = out_help())]
        out: Option<PathBuf>,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Compare two series JSON files channel by channel; the first is the reference.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Run {
        name: String,
        #[arg(long, help = out_help())]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaUnit {
    #[value(name = "1/s")]
    PerSecond,
    /// Multiples of 4|Ω| of the reference manifold.
    #[value(name = "kappa_crit")]
    KappaCrit,
    /// Multiples of Ω₀.
    #[value(name = "omega0")]
    Omega0,
}

fn out_help() -> String {
    format!("Output directory [default: ${OUT_DIR_ENV}, else ./zenotrap-out]")
}

enum Failure {
    Verdict,
    Error(ScenarioError),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if let ScenarioError::Run { written, .. } = &e {
                for p in written {
                    eprintln!("partial output: {}", p.display());
                }
            }
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, out } => run(&parse_config(&config)?, out.as_deref()),
        Command::Sweep {
            config,
            kappa,
            kappa_unit,
            out,
        } => sweep(&parse_config(&config)?, &kappa, kappa_unit, out.as_deref()),
        Command::Presets { action: PresetAction::List } => {
            for p in PRESETS {
                println!("{:<18} {}", p.name, p.description);
            }
            println!("{HEADLINE_PRESET:<18} arithmetic behind the published lifetime and coupling ratio");
            Ok(())
        }
        Command::Presets {
            action: PresetAction::Run { name, out },
        } => {
            if name == HEADLINE_PRESET {
                let h = headline_numbers();
                print!("{}", h.render());
                let path = h.write(&resolve_out_dir(out.as_deref()))?;
                println!("wrote {}", path.display());
                return Ok(());
            }
            run(&preset(&name)?, out.as_deref())
        }
        Command::Compare { a, b, tol } => {
            let r = compare(&a, &b, tol)?;
            print!("{}", r.to_json());
            verdict(r.pass)
        }
    }
}

fn verdict(pass: bool) -> Result<(), Failure> {
    if pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn run(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(), Failure> {
    let dir = resolve_out_dir(out);
    let outcome = run_scenario(cfg, &dir)?;
    summarize(&outcome.report);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    verdict(outcome.report.pass)
}

fn summarize(r: &ComparisonReport) {
    println!("scenario {}", r.scenario);
    for c in &r.channels {
        println!(
            "  {:<16} max |dev| {:.3e} at t = {:.6e} s (tol {:.1e}) {}",
            c.name,
            c.max_abs_deviation,
            c.time_of_max,
            c.tolerance,
            pass_word(c.pass)
        );
    }
    for c in &r.checks {
        println!("  {:<16} {:.6e} vs {:.6e} {}", c.name, c.value, c.limit, pass_word(c.pass));
    }
    if let Some(f) = &r.envelope_fit {
        let expected = r.expected_envelope_rate.unwrap_or(f64::NAN);
        println!(
            "  envelope rate    {:.6e} 1/s [{:.6e}, {:.6e}] (kappa/4 = {:.6e})",
            f.rate, f.ci_low, f.ci_high, expected
        );
    }
    println!("{}", if r.pass { "PASS" } else { "FAIL" });
}

fn pass_word(p: bool) -> &'static str {
    if p {
        "ok"
    } else {
        "FAIL"
    }
}

fn sweep(cfg: &ScenarioConfig, spec: &str, unit: KappaUnit, out: Option<&Path>) -> Result<(), Failure> {
    let scale = match unit {
        KappaUnit::PerSecond => 1.0,
        KappaUnit::KappaCrit => 4.0 * cfg.reference_rabi().map_err(ScenarioError::from)?.abs(),
        KappaUnit::Omega0 => cfg.trap.omega0,
    };
    let grid: Vec<f64> = parse_grid(spec)?.into_iter().map(|k| k * scale).collect();
    let table = sweep_kappa(cfg, &grid)?;
    println!("{:>14} {:>10} {:<12} {:>14} {:>9}", "kappa[1/s]", "k/k_crit", "branch", "rate[1/s]", "crossings");
    for r in &table.rows {
        println!(
            "{:>14.6e} {:>10.4} {:<12} {:>14} {:>9}",
            r.kappa,
            r.kappa_over_crit,
            format!("{:?}", r.branch).to_lowercase(),
            r.fit.map(|f| format!("{:.6e}", f.rate)).unwrap_or_else(|| "-".into()),
            r.crossings.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
        );
        if let Some(e) = &r.error {
            eprintln!("row kappa = {:.6e}: {e}", r.kappa);
        }
    }
    if let (Some(flip), Some(frozen)) = (table.branch_flip(), table.frozen_from()) {
        println!("branch flips at row {flip}; no crossings from row {frozen}");
    }
    for f in write_sweep(&table, &resolve_out_dir(out))? {
        println!("wrote {}", f.display());
    }
    verdict(table.rows.iter().all(|r| r.error.is_none()))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, ScenarioError> {
    let bad = |m: String| ScenarioError::Input(format!("--kappa `{spec}`: {m}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3] == "log" => true,
        4 if parts[3] == "lin" => false,
        4 => return Err(bad(format!("fourth field must be `log` or `lin`, got `{}`", parts[3]))),
        _ => return Err(bad("expected start:stop:steps[:log]".into())),
    };
    let start = eval_expression(parts[0]).map_err(|m| bad(format!("start: {m}")))?;
    let stop = eval_expression(parts[1]).map_err(|m| bad(format!("stop: {m}")))?;
    let steps: usize = parts[2].parse().map_err(|_| bad(format!("steps must be an integer, got `{}`", parts[2])))?;
    kappa_grid(start, stop, steps, log)
}
