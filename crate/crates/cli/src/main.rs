//! `momsos`: preprocess, certify, climb the hierarchy and optionally cross-check
//! against the brute-force oracle.
//!
//! Exit codes: 0 when a certified minimizer is found (or, with `--order`, when
//! that order solves), 2 when nothing is certified up to the last order tried,
//! 1 on input or solver errors.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use momsos::certify::{run_hierarchy, HierarchyOptions};
use momsos::conic::{SolveStatus, SolverSettings};
use momsos::instance_file::InstanceFile;
use momsos::oracle::{brute_force_min, OracleSettings, DEFAULT_SAMPLES, DEFAULT_SEED};
use momsos::relax::build_relaxation;

use report::{InstanceInfo, OracleSummary, RunReport, RunSettings};

/// Orders tried past `n_min` when neither `--order` nor `--max-order` is given.
const DEFAULT_EXTRA_ORDERS: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "momsos", version, about = "Moment-SOS hierarchy with SOS-convexity certificates")]
struct Args {
    /// Instance file (JSON).
    #[arg(long)]
    instance: PathBuf,

    /// Solve this single relaxation order.
    #[arg(long, conflicts_with = "max_order")]
    order: Option<usize>,

    /// Highest order to try [default: n_min + 3].
    #[arg(long)]
    max_order: Option<usize>,

    /// Exactness tolerance for the extracted minimizer.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    /// Interior-point stopping tolerance for the relaxations.
    #[arg(long, default_value_t = SolverSettings::default().tolerance)]
    solver_tol: f64,

    /// Search for a convexity certificate first and start at its predicted order.
    #[arg(long)]
    certify: bool,

    /// Cross-check against the brute-force oracle.
    #[arg(long)]
    oracle: bool,

    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    oracle_samples: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Write the structured report here.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Write every attempted relaxation as sparse triplets here.
    #[arg(long)]
    dump_sdp: Option<PathBuf>,

    /// Print the interior-point trace to stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn instance_name(file: &InstanceFile, path: &Path) -> String {
    file.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
    })
}

fn run(args: &Args) -> Result<u8> {
    let t_total = Instant::now();
    if !(args.tol > 0.0 && args.solver_tol > 0.0) {
        bail!("--tol and --solver-tol must be positive");
    }

    let t = Instant::now();
    let text = fs::read_to_string(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let file = InstanceFile::parse(&text).with_context(|| format!("parsing {}", args.instance.display()))?;
    let original = file.instance()?;
    let instance = original.preprocess()?;
    let parse_seconds = t.elapsed().as_secs_f64();

    let n_min = instance.n_min()?;
    let (min_order, max_order) = match (args.order, args.max_order) {
        (Some(n), _) if n < n_min => bail!("order {n} is below the minimal order {n_min}"),
        (Some(n), _) => (n, n),
        (None, Some(m)) if m < n_min => bail!("max order {m} is below the minimal order {n_min}"),
        (None, Some(m)) => (n_min, m),
        (None, None) => (n_min, n_min + DEFAULT_EXTRA_ORDERS),
    };

    let mut options = HierarchyOptions::new(max_order);
    options.min_order = min_order;
    options.tol = args.tol;
    options.certify_first = args.certify;
    options.start_at_prediction = args.order.is_none();
    options.solver.tolerance = args.solver_tol;
    options.solver.verbose = args.verbose;
    options.certificate_solver.verbose = args.verbose;

    let t = Instant::now();
    let hierarchy = run_hierarchy(&instance, &options)?;
    let hierarchy_seconds = t.elapsed().as_secs_f64();

    if let Some(path) = &args.dump_sdp {
        dump_sdp(path, &instance, hierarchy.orders.iter().map(|o| o.order))?;
    }

    let info = InstanceInfo {
        path: args.instance.display().to_string(),
        name: instance_name(&file, &args.instance),
        dimension: original.dimension(),
        radius: original.radius(),
        num_constraints: original.constraints().len(),
    };
    let settings = RunSettings {
        min_order,
        max_order,
        single_order: args.order.is_some(),
        tol: args.tol,
        solver_tol: args.solver_tol,
        certify: args.certify,
        oracle: args.oracle,
    };
    let mut report = RunReport::new(info, settings, hierarchy);
    report.timings.parse_seconds = parse_seconds;
    report.timings.hierarchy_seconds = hierarchy_seconds;
    report.timings.certificate_seconds = report.certificate_attempts.iter().map(|a| a.seconds).sum();

    if args.oracle {
        let t = Instant::now();
        let settings = OracleSettings {
            samples: args.oracle_samples,
            seed: args.seed,
            ..Default::default()
        };
        let result = brute_force_min(&instance, &settings).context("oracle")?;
        report.timings.oracle_seconds = t.elapsed().as_secs_f64();
        // the certified order's bound, else the best bound reached
        let reference = if report.certified {
            report.orders.last().and_then(|o| o.bound)
        } else {
            report.best_bound
        };
        report.oracle = Some(OracleSummary::new(result, reference));
    }

    let any_solved = report.orders.iter().any(|o| o.status == SolveStatus::Optimal);
    let code: u8 = if args.order.is_some() {
        if any_solved {
            0
        } else {
            1
        }
    } else if report.certified {
        0
    } else if any_solved {
        2
    } else {
        1
    };
    report.exit_code = code.into();
    report.timings.total_seconds = t_total.elapsed().as_secs_f64();

    if let Some(path) = &args.report {
        fs::write(path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", report.summary());
    if code == 1 {
        eprintln!("error: no relaxation order solved to optimality");
    }
    Ok(code)
}

fn dump_sdp(path: &Path, instance: &momsos::Instance, orders: impl Iterator<Item = usize>) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for n in orders {
        writeln!(out, "# order {n}")?;
        build_relaxation(instance, n)?.problem().write_triplets(&mut out)?;
    }
    out.flush()?;
    Ok(())
}
