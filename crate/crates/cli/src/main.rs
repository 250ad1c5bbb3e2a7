//! `lorentz-lab`: runs the SO(n,1) experiments and writes CSV/JSON transcripts.
//!
//! Exit codes: 0 all checks pass, 2 checks ran and at least one failed,
//! 1 configuration or usage error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use lorentz_lab::renorm::{Convention, Strategy};
use lorentz_lab::shearing::Direction;

use report::Report;

#[derive(Parser, Debug)]
#[command(name = "lorentz-lab", version, about = "Numerical experiments on SO(n,1) and its unitary representations")]
struct Cli {
    /// Directory receiving <command>.csv and <command>.json.
    #[arg(long, global = true, env = "LORENTZ_LAB_OUT", default_value = "lorentz-lab-out")]
    out_dir: PathBuf,
    /// What to print on stdout (both files are always written).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized runs; recorded in every manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Conv {
    Contraction,
    Expansion,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check the so(n,1) structure identities.
    ///
    /// CSV columns: identity, residual, tolerance, pass.
    LieCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Branching sums Σ_m ‖Res_{m,l}‖² over l = 0..l_max, at the cutoff and twice the cutoff.
    ///
    /// Requires rho_flat = (n−2)/2 < nu < rho = (n−1)/2.
    ///
    /// CSV columns: l, partial_sum, tail_bound, total, total_doubled_cutoff, relative_change.
    Branching {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 30)]
        l_max: usize,
        #[arg(long, default_value_t = 200)]
        m_cutoff: usize,
    },
    /// U-invariant distributions of the n = 2 complementary series (0 < nu < 1/2).
    ///
    /// CSV columns: index, yn_eigenvalue, predicted, abs_error, residual.
    Invdist {
        #[arg(long)]
        nu: f64,
        /// Truncation degree.
        #[arg(long, default_value_t = 128)]
        modes: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        /// Sobolev order of the test space.
        #[arg(long, default_value_t = 0.0)]
        s: f64,
    },
    /// Extremal displacement shearing experiment over a geometric λ grid.
    ///
    /// CSV columns: lambda, s_lambda, delta, abs_b, abs_a_minus_d, abs_c,
    /// abs_v0, abs_v1, abs_v2 (first ς = 2 string; blank for n = 2),
    /// fitted_exponent, predicted_exponent (log-log fit for the chosen direction).
    Shearing {
        #[arg(long)]
        n: usize,
        /// b, a-d, v0 or flow.
        #[arg(long)]
        dir: String,
        /// Initial guess for the displacement magnitude.
        #[arg(long)]
        mag: f64,
        /// λ range as LO:HI.
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 13)]
        points: usize,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Gap exponent ρ.
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 2.0)]
        slack: f64,
    },
    /// Renormalization cascade c(l+1) = A c(l) + r(l) on both branches.
    ///
    /// CSV columns: l, c_plus, c_minus, remainder_bound, pure_plus, pure_minus
    /// (c0·A^l), upper_plus, upper_minus (majorant).
    Renorm {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        sigma: f64,
        /// Initial time T.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        /// zero, saturating, alternating, random-sign, uniform or opposing.
        #[arg(long, default_value = "saturating")]
        strategy: String,
        #[arg(long, default_value_t = 1.0)]
        remainder_c: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        #[arg(long, value_enum, default_value_t = Conv::Contraction)]
        convention: Conv,
        /// Random adversarial cascades checked against the majorant.
        #[arg(long, default_value_t = 1000)]
        cascades: usize,
    },
    /// Time change of a flow described by a TOML config.
    ///
    /// CSV columns: t, xi, z, inverse_residual, and with a [transfer] table
    /// also state_distance, clock_defect.
    Timechange {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: &Cli) -> Result<Report> {
    Ok(match &cli.cmd {
        Cmd::LieCheck { n, tolerance } => commands::lie_check(*n, *tolerance)?,
        Cmd::Branching { n, nu, s, l_max, m_cutoff } => commands::branching(*n, *nu, *s, *l_max, *m_cutoff)?,
        Cmd::Invdist { nu, modes, tolerance, s } => commands::invdist(*nu, *modes, *tolerance, *s)?,
        Cmd::Shearing { n, dir, mag, lambda, points, eta, rho, eps, slack } => {
            let dir: Direction = dir.parse()?;
            commands::shearing(&commands::ShearingArgs {
                n: *n,
                dir,
                mag: *mag,
                lambda: commands::parse_range(lambda)?,
                points: *points,
                eta: *eta,
                rho: *rho,
                eps: *eps,
                slack: *slack,
            })?
        }
        Cmd::Renorm { nu, sigma, t, steps, strategy, remainder_c, c0, convention, cascades } => {
            let strategy: Strategy = strategy.parse()?;
            commands::renorm(&commands::RenormArgs {
                nu: *nu,
                sigma: *sigma,
                t: *t,
                steps: *steps,
                strategy,
                remainder_c: *remainder_c,
                c0: *c0,
                convention: match convention {
                    Conv::Contraction => Convention::Contraction,
                    Conv::Expansion => Convention::Expansion,
                },
                cascades: *cascades,
                seed: cli.seed,
            })?
        }
        Cmd::Timechange { config } => {
            let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let c = commands::parse_timechange_config(&text).with_context(|| format!("parsing {}", config.display()))?;
            commands::timechange_cmd(&config.display().to_string(), &c, cli.seed)?
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let stdout = match cli.format {
        Format::Csv => report.csv_body(),
        Format::Json => report.json_text(),
    };
    let written = stdout.and_then(|s| {
        print!("{s}");
        report.write(&cli.out_dir)
    });
    let (csv_path, json_path) = match written {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
    for c in &failed {
        eprintln!("FAIL {}: {} (bound {})", c.name, c.value, c.bound);
    }
    eprintln!(
        "{}: {}/{} checks passed; wrote {} and {}",
        report.command,
        report.checks.len() - failed.len(),
        report.checks.len(),
        csv_path.display(),
        json_path.display()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
