//! Command-line entry point: plan construction, design verification, full
//! shuffle simulation, and the comparative load sweeps, all deterministic
//! given flags and seed.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cdc_core::designs::{cyclic_blocks, verify_t_design};
use cdc_core::engine::run_simulation;
use cdc_core::finite_field::FieldSpec;
use cdc_core::metrics::{
    fig2_row, fig3_row, lemma31_check, table1_loads, to_sig_digits, write_fig2_csv,
    write_fig3_csv, write_lemma31_csv, write_load_reports_csv, FamilyParams, Table1Row,
};
use cdc_core::scheme::{build_scheme, communication_load, signal_expression, SchemePlan};

#[derive(Parser)]
#[command(
    name = "cdc-forge",
    about = "Cascaded coded distributed computing from cyclic 1-designs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct PlanArgs {
    /// Number of nodes, files, and functions (K = N = Q = n)
    #[arg(long)]
    n: u32,
    /// Computation load and replication (r = s = t)
    #[arg(long)]
    t: u32,
    /// Field width T of GF(2^T)
    #[arg(long = "field-T", default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..=16))]
    field_t: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scheme plan and print its parameters and predicted load
    Build {
        #[command(flatten)]
        plan: PlanArgs,
        /// Write the plan document (JSON, schema_version 1) here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run map, shuffle, and reduce end to end and verify every output
    Simulate {
        #[command(flatten)]
        plan: PlanArgs,
        /// Seed for file contents and the map PRF
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Size of each input file in bytes
        #[arg(long = "file-bytes", default_value_t = 64)]
        file_bytes: usize,
        /// Write the shuffle transcript here as JSON lines
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check whether the cyclic blocks form a t'-design
    VerifyDesign {
        /// Number of points
        #[arg(long)]
        n: u32,
        /// Block size
        #[arg(long)]
        t: u32,
        /// The t' to verify
        #[arg(long)]
        check: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare L_Our with L_Jiang over prime-power parameters b (CSV)
    SweepFig2 {
        #[arg(long = "b-min", default_value_t = 3)]
        b_min: u64,
        #[arg(long = "b-max", default_value_t = 19)]
        b_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare with the optimal-load scheme at K = p^4 + p^2 + p + 1 (CSV)
    SweepFig3 {
        #[arg(long = "p-min", default_value_t = 2)]
        p_min: u64,
        #[arg(long = "p-max", default_value_t = 7)]
        p_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the asymptotic inequality and its bounds with exact integers
    CheckLemma31 {
        #[arg(long = "p-min", default_value_t = 3)]
        p_min: u64,
        #[arg(long = "p-max", default_value_t = 50)]
        p_max: u64,
        /// Exponent w of p^w
        #[arg(long, default_value_t = 2)]
        w: u32,
        /// Comma-separated exponents v_i defining y = sum p^{v_i}
        #[arg(long, default_value = "1,0", value_delimiter = ',')]
        vs: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Sweeps honor CDC_FORGE_THREADS as a parallelism cap.
fn sweep_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("CDC_FORGE_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| anyhow!("CDC_FORGE_THREADS must be a positive integer, got {raw:?}"))?;
        if threads == 0 {
            bail!("CDC_FORGE_THREADS must be a positive integer, got 0");
        }
        builder = builder.num_threads(threads);
    }
    Ok(builder.build()?)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn build_plan(args: &PlanArgs) -> Result<SchemePlan> {
    let field = FieldSpec::with_width(args.field_t)?;
    Ok(build_scheme(args.n, args.t, field)?)
}

fn rational_cell(r: &num::BigRational) -> String {
    format!("{}/{} ({})", r.numer(), r.denom(), to_sig_digits(r, 12))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Build { plan, out, format } => cmd_build(&plan, out, format),
        Command::Simulate {
            plan,
            seed,
            file_bytes,
            out,
            format,
        } => cmd_simulate(&plan, seed, file_bytes, out, format),
        Command::VerifyDesign {
            n,
            t,
            check,
            format,
        } => cmd_verify_design(n, t, check, format),
        Command::SweepFig2 { b_min, b_max, out } => cmd_sweep_fig2(b_min, b_max, out),
        Command::SweepFig3 { p_min, p_max, out } => cmd_sweep_fig3(p_min, p_max, out),
        Command::CheckLemma31 {
            p_min,
            p_max,
            w,
            vs,
            format,
            out,
        } => cmd_check_lemma31(p_min, p_max, w, vs, format, out),
    }
}

fn cmd_build(args: &PlanArgs, out: Option<PathBuf>, format: Format) -> Result<()> {
    let plan = build_plan(args)?;
    let load = communication_load(&plan);
    if let Some(path) = &out {
        fs::write(path, plan.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    match format {
        Format::Text => {
            let n = plan.n();
            println!("K (nodes)     {n}");
            println!("N (files)     {n}");
            println!("Q (functions) {n}");
            println!("r = s         {}", plan.t());
            println!("field         GF(2^{})", plan.field().width_bits());
            println!(
                "coefficients  {}",
                plan.coeffs()
                    .iter()
                    .map(|c| c.value().to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!("predicted L   {}", rational_cell(&load));
            if let Some(path) = &out {
                println!("plan written to {}", path.display());
            }
        }
        Format::Json => println!("{}", plan.to_json()),
        Format::Csv => {
            let mut params = std::collections::BTreeMap::new();
            params.insert("K".to_string(), u64::from(plan.n()));
            params.insert("r".to_string(), u64::from(plan.t()));
            let report = table1_loads(Table1Row::New, &params)?;
            let mut buf = Vec::new();
            write_load_reports_csv(&mut buf, &[report])?;
            print!("{}", String::from_utf8(buf)?);
        }
    }
    Ok(())
}

fn cmd_simulate(
    args: &PlanArgs,
    seed: u64,
    file_bytes: usize,
    out: Option<PathBuf>,
    format: Format,
) -> Result<()> {
    let plan = build_plan(args)?;
    let outcome = run_simulation(plan, file_bytes, seed)?;
    let plan = outcome.world.plan();
    if let Some(path) = &out {
        let mut buf = Vec::new();
        outcome.transcript.write_jsonl(&mut buf)?;
        fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    }
    let pass = outcome.report.pass();
    let exact = outcome.load_matches();
    match format {
        Format::Text => {
            let n = plan.n();
            println!(
                "plan: n = {n}, t = {}, field GF(2^{}), seed {seed}",
                plan.t(),
                plan.field().width_bits()
            );
            println!("placement Z_c = B_c:");
            for c in 0..n {
                println!("  node {c}: {:?}", plan.placement(c));
            }
            println!("reduce assignment Q_c = B_c:");
            for c in 0..n {
                println!("  node {c}: {:?}", plan.assignment(c));
            }
            if n <= 12 {
                println!("coded signals:");
                for sig in &outcome.transcript.signals {
                    println!(
                        "  node {} file {} slot {}: {}",
                        sig.sender,
                        sig.file,
                        sig.slot,
                        signal_expression(plan, sig.sender, sig.file)?
                    );
                }
            }
            println!(
                "shuffle: {} signals, {} bits total",
                outcome.transcript.signals.len(),
                outcome.transcript.total_bits()
            );
            println!("measured L  = {}", rational_cell(&outcome.measured_load));
            println!("predicted L = {}", rational_cell(&outcome.predicted_load));
            println!(
                "load identity: {}",
                if exact { "exact match" } else { "MISMATCH" }
            );
            println!(
                "verification: {} (each function computed by {} nodes)",
                if pass { "PASS" } else { "FAIL" },
                plan.t()
            );
            if !pass {
                for miss in outcome.report.mismatches() {
                    println!(
                        "  mismatch at node {}, function {}: expected {}, got {}",
                        miss.node, miss.q, miss.expected, miss.actual
                    );
                }
            }
        }
        Format::Json => {
            let doc = serde_json::json!({
                "n": plan.n(),
                "t": plan.t(),
                "field_width": plan.field().width_bits(),
                "seed": seed,
                "signals": outcome.transcript.signals.len(),
                "total_bits": outcome.transcript.total_bits(),
                "measured_load": {
                    "num": outcome.measured_load.numer().to_string(),
                    "den": outcome.measured_load.denom().to_string(),
                    "float": to_sig_digits(&outcome.measured_load, 12),
                },
                "predicted_load": {
                    "num": outcome.predicted_load.numer().to_string(),
                    "den": outcome.predicted_load.denom().to_string(),
                    "float": to_sig_digits(&outcome.predicted_load, 12),
                },
                "load_identity": exact,
                "verification_pass": pass,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => bail!("simulate has no csv output; use text or json"),
    }
    if !pass {
        bail!("verification failed");
    }
    if !exact {
        bail!("measured load does not equal (n-t)/n");
    }
    Ok(())
}

fn cmd_verify_design(n: u32, t: u32, check: u32, format: Format) -> Result<()> {
    if check < 1 {
        bail!("--check must be at least 1");
    }
    let design = cyclic_blocks(n, t)?;
    let verdict = verify_t_design(&design, check)?;
    match format {
        Format::Text => {
            if verdict.is_t_design {
                println!(
                    "{check}-({n},{t},{}) design",
                    verdict.lambda.expect("lambda present on success")
                );
            } else {
                println!("not a {check}-design");
                let w = verdict.counterexample.as_ref().expect("witness on failure");
                println!(
                    "witness: {:?} covered by {} blocks; {:?} covered by {} blocks",
                    w.subset_a, w.count_a, w.subset_b, w.count_b
                );
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&verdict)?),
        Format::Csv => bail!("verify-design has no csv output; use text or json"),
    }
    Ok(())
}

fn cmd_sweep_fig2(b_min: u64, b_max: u64, out: Option<PathBuf>) -> Result<()> {
    if b_min < 3 {
        bail!("--b-min must be at least 3 (the 3t >= 2n constraint fails below)");
    }
    if b_max < b_min {
        bail!("--b-max must be at least --b-min");
    }
    let pool = sweep_pool()?;
    let mut rows = pool.install(|| {
        (b_min..=b_max)
            .into_par_iter()
            .map(fig2_row)
            .collect::<Result<Vec<_>, _>>()
    })?;
    rows.sort_by_key(|r| r.b);
    let mut buf = Vec::new();
    write_fig2_csv(&mut buf, &rows)?;
    emit(&out, &buf)
}

fn cmd_sweep_fig3(p_min: u64, p_max: u64, out: Option<PathBuf>) -> Result<()> {
    if p_min < 2 {
        bail!("--p-min must be at least 2");
    }
    if p_max < p_min {
        bail!("--p-max must be at least --p-min");
    }
    let pool = sweep_pool()?;
    let mut rows = pool.install(|| {
        (p_min..=p_max)
            .into_par_iter()
            .map(fig3_row)
            .collect::<Result<Vec<_>, _>>()
    })?;
    rows.sort_by_key(|r| r.p);
    let mut buf = Vec::new();
    write_fig3_csv(&mut buf, &rows)?;
    emit(&out, &buf)
}

fn cmd_check_lemma31(
    p_min: u64,
    p_max: u64,
    w: u32,
    vs: Vec<u32>,
    format: Format,
    out: Option<PathBuf>,
) -> Result<()> {
    if p_max < p_min {
        bail!("--p-max must be at least --p-min");
    }
    let pool = sweep_pool()?;
    let mut reports = pool.install(|| {
        (p_min..=p_max)
            .into_par_iter()
            .map(|p| FamilyParams::new(p, w, vs.clone()).map(|fp| lemma31_check(&fp)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    reports.sort_by_key(|r| r.p);
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_lemma31_csv(&mut buf, &reports)?;
            emit(&out, &buf)?;
        }
        _ => {
            let mut text = String::new();
            for rep in &reports {
                text.push_str(&rep.summary());
                text.push('\n');
            }
            emit(&out, text.as_bytes())?;
        }
    }
    Ok(())
}
