//! `alfvenlab`: batch driver for the Alfvén wave scattering laboratory.
//!
//! Exit status: 0 on success, 1 on runtime or verification failure, 2 on
//! usage errors (bad flags, unreadable or invalid plan).

mod manifest;
mod modes;
mod plan;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use plan::{Mode, Plan};

#[derive(Debug, Parser)]
#[command(name = "alfvenlab", version, about = "Simulate, scatter and invert small Alfvén waves")]
struct Args {
    /// Experiment plan (TOML).
    #[arg(long, value_name = "PATH")]
    plan: PathBuf,
    /// Output directory; overrides the plan and the output root.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output root used when neither --out nor plan.output is given.
    #[arg(long, env = "ALFVENLAB_OUT", value_name = "DIR")]
    out_root: Option<PathBuf>,
    /// Seed for the initial data; overrides the plan.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let plan = match Plan::load(&args.plan, args.seed) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("alfvenlab: invalid plan: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("alfvenlab: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("alfvenlab: {e}");
            return ExitCode::from(1);
        }
    }
    let out = plan.output_dir(args.out.as_deref(), args.out_root.as_deref());
    match execute(&plan, &out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("alfvenlab: {e}");
            ExitCode::from(1)
        }
    }
}

/// Runs the plan; `Ok(false)` means a verification check failed.
fn execute(plan: &Plan, out: &std::path::Path) -> Result<bool, String> {
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    std::fs::write(out.join("plan.toml"), &plan.source).map_err(|e| e.to_string())?;
    let mut ok = true;
    let files = match plan.mode {
        Mode::Simulate => modes::simulate(plan, out),
        Mode::Scatter => modes::scatter(plan, out),
        Mode::Invert => modes::invert(plan, out),
        Mode::Sweep => modes::sweep(plan, out),
        Mode::Verify => modes::verify(plan, out).map(|(files, checks)| {
            for c in &checks {
                println!("{c}");
            }
            ok = checks.iter().all(|c| c.passed());
            files
        }),
    }
    .map_err(|e| e.to_string())?;
    let manifest = manifest::write_manifest(out).map_err(|e| e.to_string())?;
    if plan.mode != Mode::Verify {
        println!("{} artifacts listed in {}", files.len(), manifest.display());
    }
    Ok(ok)
}
