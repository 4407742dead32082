//! `invkit`: batch front end for viability, synthesis, polar and plotting.
//!
//! Exit codes: 0 success, 1 other errors, 2 empty polyhedron, 3 complexity
//! budget exceeded, 4 infeasible program, 5 numerical failure, 6 plotting a
//! set that is not planar.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use invkit::conic::{InteriorPointSolver, IpmSettings};
use invkit::io::{
    self, CheckJson, HRepJson, ProblemFile, PwseJson, ReportJson, SynthesisJson, ViabilityJson,
    ViolationJson,
};
use invkit::systems::{check_switched_invariance, switched_viability_kernel};
use invkit::Error;
use serde::Serialize;

use crate::plot::Curve;

#[derive(Parser)]
#[command(
    name = "invkit",
    version,
    about = "Control invariant sets with piecewise semi-ellipsoids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the viability map on the system's state constraint set.
    Viability {
        file: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        /// Containment tolerance of the fixed-point test.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the synthesis program and verify the resulting set.
    Synthesize {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Invariance check samples (overrides the problem file).
        #[arg(long)]
        samples: Option<usize>,
        /// Viability steps spent computing the kernel embedded for plotting.
        #[arg(long, default_value_t = 20)]
        kernel_max_iter: usize,
    },
    /// Polar of a piecewise semi-ellipsoid.
    Polar {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a set for invariance against the system of a problem file.
    Check {
        file: PathBuf,
        /// Set to check; defaults to the problem file's "set".
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample set boundaries for plotting.
    Plot {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Svg)]
        format: Format,
        #[arg(long, default_value_t = 360)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Svg,
    Json,
}

/// Raised by `plot` for sets that are not planar.
#[derive(Debug)]
struct NotPlanar(usize);

impl std::fmt::Display for NotPlanar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "plotting needs a planar set, got dimension {}", self.0)
    }
}

impl std::error::Error for NotPlanar {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NotPlanar>().is_some() {
        return 6;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::EmptyPolyhedron) => 2,
        Some(Error::ComplexityBudgetExceeded { .. }) => 3,
        Some(Error::Infeasible) => 4,
        Some(Error::NumericalFailure(_)) => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("invkit: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(v: &T, out: Option<&Path>) -> anyhow::Result<()> {
    emit(&io::to_string(v), out)
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Viability {
            file,
            max_iter,
            tol,
            out,
        } => {
            let problem = ProblemFile::parse(&read(&file)?)?;
            let sys = problem.system.to_system()?;
            let res = switched_viability_kernel(&sys, max_iter, tol)?;
            if !res.converged {
                eprintln!("invkit: no fixed point after {max_iter} steps");
            }
            emit_json(&ViabilityJson::from(&res), out.as_deref())
        }
        Command::Synthesize {
            file,
            out,
            samples,
            kernel_max_iter,
        } => {
            let problem = ProblemFile::parse(&read(&file)?)?;
            let prob = problem.synthesis_problem()?;
            let mut opts = problem.synthesis_options();
            if let Some(s) = samples {
                opts.check_samples = s;
            }
            let solver = solver_from(&problem);
            let res = invkit::synth::solve_with(&prob, &solver, &opts)?;
            let kernel = switched_viability_kernel(&prob.system, kernel_max_iter.max(1), 1e-8)
                .ok()
                .filter(|k| k.converged)
                .map(|k| k.kernel);
            if !res.report.passed() || !res.violations.is_empty() {
                eprintln!("invkit: the synthesized set failed verification; see the report");
            }
            let doc = SynthesisJson::new(&res, &prob.system.x, kernel.as_ref());
            emit_json(&doc, out.as_deref())
        }
        Command::Polar { file, out } => {
            let set: PwseJson = io::from_str(&read(&file)?)?;
            let polar = set.to_pwse()?.polar()?;
            emit_json(&PwseJson::from(&polar), out.as_deref())
        }
        Command::Check {
            file,
            set,
            samples,
            out,
        } => {
            let problem = ProblemFile::parse(&read(&file)?)?;
            let sys = problem.system.to_system()?;
            let set_json = match set {
                Some(p) => io::from_str::<PwseJson>(&read(&p)?)?,
                None => match problem.set {
                    Some(s) => s,
                    None => bail!("no set to check: pass --set or add \"set\" to the problem file"),
                },
            };
            let s = set_json.to_pwse()?;
            let report = check_switched_invariance(&sys, &s, samples)?;
            let doc = CheckJson {
                schema: io::SCHEMA.into(),
                kind: "check".into(),
                report: ReportJson::from(&report),
                violations: s.validate().iter().map(ViolationJson::from).collect(),
            };
            emit_json(&doc, out.as_deref())
        }
        Command::Plot {
            file,
            format,
            samples,
            out,
        } => {
            let curves = curves_of(&read(&file)?, samples)?;
            match format {
                Format::Json => emit_json(
                    &serde_json::json!({ "schema": io::SCHEMA, "kind": "plot", "curves": curves }),
                    out.as_deref(),
                ),
                Format::Svg => emit(&plot::to_svg(&curves), out.as_deref()),
            }
        }
    }
}

fn solver_from(problem: &ProblemFile) -> InteriorPointSolver {
    let mut st = IpmSettings::default();
    if let Some(o) = &problem.solver {
        if let Some(m) = o.max_iter {
            st.max_iter = m;
        }
        if let Some(t) = o.tol_feas {
            st.tol_feas = t;
        }
        if let Some(t) = o.tol_gap {
            st.tol_gap_abs = t;
            st.tol_gap_rel = t;
        }
    }
    InteriorPointSolver::new(st)
}

/// Curves for every set found in a document: a bare set, a synthesis result
/// (safe set, kernel, invariant set), a viability result or a problem file.
fn curves_of(text: &str, samples: usize) -> anyhow::Result<Vec<Curve>> {
    let value: serde_json::Value = io::from_str(text)?;
    let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or("");
    let mut curves = Vec::new();
    let mut polytope = |label: &str, h: &HRepJson| -> anyhow::Result<()> {
        planar(h.dim)?;
        curves.push(Curve {
            label: label.into(),
            points: plot::polytope_points(&h.to_polyhedron()?, samples)?,
        });
        Ok(())
    };
    match kind {
        "synthesis" => {
            let doc: SynthesisJson = serde_json::from_value(value)?;
            polytope("safe set", &doc.safe_set)?;
            if let Some(k) = &doc.kernel {
                polytope("viability kernel", k)?;
            }
            planar(doc.set.dim)?;
            curves.push(Curve {
                label: "invariant set".into(),
                points: plot::boundary_points(&doc.set.to_pwse()?, samples)?,
            });
        }
        "viability" => {
            let doc: ViabilityJson = serde_json::from_value(value)?;
            if let Some(x) = doc.iterates.first() {
                polytope("safe set", x)?;
            }
            polytope("viability kernel", &doc.kernel)?;
        }
        _ if value.get("Q").is_some() => {
            let doc: PwseJson = serde_json::from_value(value)?;
            planar(doc.dim)?;
            curves.push(Curve {
                label: "set".into(),
                points: plot::boundary_points(&doc.to_pwse()?, samples)?,
            });
        }
        _ if value.get("system").is_some() => {
            let doc = ProblemFile::parse(text)?;
            polytope("safe set", &doc.system.x)?;
        }
        _ => bail!("nothing to plot in this document"),
    }
    Ok(curves)
}

fn planar(dim: usize) -> anyhow::Result<()> {
    if dim != 2 {
        return Err(NotPlanar(dim).into());
    }
    Ok(())
}
