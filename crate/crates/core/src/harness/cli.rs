//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on validation failure (bad flags, bad input
//! files, a tableau that fails its order conditions), 2 on numerical failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dyadic_steps, emit_csv, run_convergence, ConvergenceConfig, Reference};
use crate::error::{Error, Result};
use crate::integrator::integrate;
use crate::problems::{
    boundedness_probe, build_advection_diffusion, random_operator, random_spd,
    AdvectionDiffusionSpec, Norm,
};
use crate::tableau::file::load_tableau;
use crate::tableau::{builtin, check_order_conditions, MethodTableau, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "exprk", version, about = "Exponential Runge-Kutta convergence and order-condition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Erk43,
    Etd3rk,
    ExpEuler,
}

impl MethodArg {
    fn tableau(self) -> MethodTableau {
        let name = match self {
            MethodArg::Erk43 => "erk43",
            MethodArg::Etd3rk => "etd3rk",
            MethodArg::ExpEuler => "exp-euler",
        };
        builtin(name).expect("every CLI method is a builtin")
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReferenceArg {
    Expm,
    Rk4,
}

#[derive(Debug, clap::Args)]
struct ProblemArgs {
    /// Interior grid points.
    #[arg(long, default_value_t = 199)]
    n: usize,
    /// Diffusion coefficient.
    #[arg(long, default_value_t = 0.2)]
    nu: f64,
    /// Final time.
    #[arg(long = "t-final", default_value_t = 1.0)]
    t_final: f64,
}

impl ProblemArgs {
    fn spec(&self) -> AdvectionDiffusionSpec {
        AdvectionDiffusionSpec {
            nu: self.nu,
            n: self.n,
            t_final: self.t_final,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Error-versus-step-size sweep on the advection-diffusion problem.
    Converge {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Coarsest step is T * 2^-k_min.
        #[arg(long = "k-min", default_value_t = 3)]
        k_min: i32,
        /// Finest step is T * 2^-k_max.
        #[arg(long = "k-max", default_value_t = 9)]
        k_max: i32,
        #[arg(long, value_enum, default_value = "expm")]
        reference: ReferenceArg,
        /// RK4 reference step is T * 2^-rk4_k.
        #[arg(long = "rk4-k", default_value_t = 14)]
        rk4_k: i32,
        /// Comma-separated subset of l1,l2,linf; empty for none.
        #[arg(long, default_value = "l1,l2,linf")]
        norms: String,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the stiff order conditions of a tableau file on random SPD operators.
    CheckTableau {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of random J operators for the weak condition.
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Integrate the advection-diffusion problem and write the final state.
    Solve {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        tau: f64,
        /// Output file with columns x,u.
        #[arg(long)]
        out: PathBuf,
    },
    /// Norms of B A^-gamma, A^-gamma B and B across resolutions.
    Probe {
        #[arg(long)]
        gamma: f64,
        /// Comma-separated grid sizes.
        #[arg(long = "n-list", default_value = "25,50,100,200")]
        n_list: String,
        #[arg(long, default_value_t = 0.2)]
        nu: f64,
    },
}

fn parse_norms(s: &str) -> Result<Vec<Norm>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad grid size `{p}`")))
        })
        .collect()
}

enum Outcome {
    Ok,
    Rejected,
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<Outcome> {
    let w = |e: std::io::Error| Error::io("<stdout>", e);
    match cmd {
        Command::Converge {
            method,
            problem,
            k_min,
            k_max,
            reference,
            rk4_k,
            norms,
            out: path,
        } => {
            if k_min > k_max {
                return Err(Error::Config(format!("k-min {k_min} exceeds k-max {k_max}")));
            }
            let spec = problem.spec();
            let mut cfg = ConvergenceConfig::new(method.tableau(), spec);
            cfg.taus = dyadic_steps(spec.t_final, k_min, k_max);
            cfg.norms = parse_norms(&norms)?;
            cfg.reference = match reference {
                ReferenceArg::Expm => Reference::Expm,
                ReferenceArg::Rk4 => Reference::Rk4 {
                    tau: spec.t_final * 2f64.powi(-rk4_k),
                },
            };
            let report = run_convergence(&cfg)?;
            writeln!(out, "{report}").map_err(w)?;
            if let Some(path) = path {
                emit_csv(&report, &path)?;
                writeln!(out, "wrote {}", path.display()).map_err(w)?;
            }
            Ok(Outcome::Ok)
        }
        Command::CheckTableau {
            file,
            tau,
            dim,
            seed,
            samples,
            tol,
        } => {
            if dim == 0 || samples == 0 {
                return Err(Error::InvalidArgument("dim and samples must be positive".into()));
            }
            let tab = load_tableau(&file)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(dim, &mut rng);
            let js: Vec<_> = (0..samples).map(|_| random_operator(dim, &mut rng)).collect();
            let report = check_order_conditions(&tab, tau, &a, &js, tol)?;
            writeln!(out, "{report}").map_err(w)?;
            Ok(if report.passes() {
                Outcome::Ok
            } else {
                Outcome::Rejected
            })
        }
        Command::Solve {
            method,
            problem,
            tau,
            out: path,
        } => {
            let prob = build_advection_diffusion(&problem.spec())?;
            let u = integrate(&method.tableau(), &prob, tau)?;
            let grid = prob.grid().expect("grid attached");
            let mut wtr = csv::Writer::from_path(&path)
                .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
            let io = |e: csv::Error| Error::io(&path, std::io::Error::other(e));
            wtr.write_record(["x", "u"]).map_err(io)?;
            for (x, v) in grid.nodes().zip(u.iter()) {
                wtr.write_record([format!("{x:.16e}"), format!("{v:.16e}")])
                    .map_err(io)?;
            }
            wtr.flush().map_err(|e| Error::io(&path, e))?;
            writeln!(out, "wrote {} values to {}", u.len(), path.display()).map_err(w)?;
            Ok(Outcome::Ok)
        }
        Command::Probe { gamma, n_list, nu } => {
            let sizes = parse_sizes(&n_list)?;
            let spec = AdvectionDiffusionSpec {
                nu,
                ..Default::default()
            };
            let table = boundedness_probe(&spec, gamma, &sizes)?;
            write!(out, "{table}").map_err(w)?;
            Ok(Outcome::Ok)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Rejected) => EXIT_VALIDATION,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_VALIDATION
            }
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("exprk").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn bundled(name: &str) -> String {
        format!("{}/tableaus/{name}.toml", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_capture(&["converge", "--method", "erk43", "--bogus"]);
        assert_eq!(code, EXIT_VALIDATION);
        assert!(err.contains("Usage"), "{err}");
        let (code, _, _) = run_capture(&["converge", "--method", "rk45"]);
        assert_eq!(code, EXIT_VALIDATION);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("check-tableau"));
    }

    #[test]
    fn check_tableau_exit_codes() {
        let (code, out, _) = run_capture(&["check-tableau", "--file", &bundled("erk43")]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("strong form: pass"));
        let (code, out, _) = run_capture(&["check-tableau", "--file", &bundled("etd3rk")]);
        assert_eq!(code, EXIT_VALIDATION);
        assert!(out.contains("strong form: FAIL"));
        let (code, _, err) = run_capture(&["check-tableau", "--file", "/nonexistent.toml"]);
        assert_eq!(code, EXIT_VALIDATION);
        assert!(err.contains("/nonexistent.toml"));
    }

    #[test]
    fn non_dividing_step_is_validation_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let (code, _, err) = run_capture(&[
            "solve", "--method", "erk43", "--n", "9", "--tau", "0.3", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_VALIDATION, "{err}");
    }

    #[test]
    fn solve_writes_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let (code, _, err) = run_capture(&[
            "solve", "--method", "exp-euler", "--n", "9", "--tau", "0.125", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert_eq!(text.lines().next(), Some("x,u"));
    }

    #[test]
    fn probe_prints_table() {
        let (code, out, _) = run_capture(&["probe", "--gamma", "0.5", "--n-list", "10,20"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 3);
        let (code, _, _) = run_capture(&["probe", "--gamma", "0.5", "--n-list", "10,x"]);
        assert_eq!(code, EXIT_VALIDATION);
    }

    #[test]
    fn unstable_rk4_reference_is_numerical_failure() {
        let (code, _, err) = run_capture(&[
            "converge", "--method", "exp-euler", "--n", "199", "--k-min", "3", "--k-max", "5",
            "--reference", "rk4", "--rk4-k", "4",
        ]);
        assert_eq!(code, EXIT_NUMERICAL, "{err}");
        assert!(err.contains("unstable"));
    }
}
