// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dmm_core::accountant::{
    default_delta, plan_parameters, report, AccountantInputs, AccountantReport, PlanInputs, PlannedParameters,
};
use dmm_core::cost::{CostReport, Mechanism, Preset};
use dmm_core::factorization::{load_factorization, FactorizationPlan, DEFAULT_RESIDUAL_TOLERANCE};
use dmm_core::simulator::{
    attack_ledger, fnv1a, plaintext_oracle, run_training, GradientProvider, Layout, LinearRegression,
    MeanEstimation, SimConfig,
};

#[derive(Parser)]
#[command(name = "dmm", version, about = "Distributed matrix mechanism tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-client communication for the preset model sizes.
    Costs(CostsArgs),
    /// Privacy of a configuration, or parameters for a target epsilon.
    Accountant(AccountantArgs),
    /// Run the committee protocol end to end.
    Simulate(SimulateArgs),
    /// Write or check factorization files.
    #[command(subcommand)]
    Factorization(FactorizationCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    So,
    Femnist,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Honaker,
    Optimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
    /// Text table followed by CSV.
    Both,
}

#[derive(Args)]
struct CostsArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long, value_enum, default_value = "honaker")]
    mechanism: MechanismArg,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
    /// Also write the CSV here.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct AccountantArgs {
    /// Simulator config providing n, d, sigma, gamma, beta and the plan.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sensitivity: Option<f64>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    granularity: Option<f64>,
    #[arg(long)]
    rounding_bias: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Defaults to one over the number of participating clients.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    dishonest_fraction: f64,
    /// Plan (gamma, beta, sigma) for this target instead of reporting.
    #[arg(long)]
    target_epsilon: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Mean,
    Regression,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// One JSON object per iteration.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mean")]
    task: Task,
    /// Seed for the synthetic client data.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Compare against the plaintext oracle and the attack ledger.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum FactorizationCommand {
    /// Write the binary-tree factorization for `iterations` steps.
    Export {
        #[arg(long)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        min_sep: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a factorization against the prefix workload and print its
    /// sensitivity and loss.
    Verify {
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOLERANCE)]
        tolerance: f64,
        /// Print the squared-sensitivity loss.
        #[arg(long)]
        squared: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Costs(a) => costs(a),
        Command::Accountant(a) => accountant(a),
        Command::Simulate(a) => simulate(a),
        Command::Factorization(c) => factorization(c),
    }
}

fn costs(a: CostsArgs) -> Result<()> {
    let preset = match a.preset {
        PresetArg::So => Preset::So,
        PresetArg::Femnist => Preset::Femnist,
    };
    let mechanism = match a.mechanism {
        MechanismArg::Honaker => Mechanism::Honaker,
        MechanismArg::Optimal => Mechanism::Optimal,
    };
    let r = CostReport::new(preset, mechanism);
    let csv = format!("{}\n{}\n", CostReport::csv_header(), r.to_csv_row());
    let mut out = std::io::stdout().lock();
    match a.format {
        Format::Text => write!(out, "{}", r.to_text())?,
        Format::Csv => write!(out, "{csv}")?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?,
        Format::Both => write!(out, "{}\n{csv}", r.to_text())?,
    }
    if let Some(p) = a.csv_out {
        std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AccountantOutput {
    inputs: AccountantInputs,
    report: AccountantReport,
}

#[derive(Serialize)]
struct PlanOutput {
    inputs: PlanInputs,
    planned: PlannedParameters,
    epsilon_adp: f64,
    delta: f64,
}

fn accountant(a: AccountantArgs) -> Result<()> {
    let (cfg, plan) = match &a.config {
        Some(p) => {
            let cfg = SimConfig::load(p).with_context(|| format!("reading {}", p.display()))?;
            let plan = cfg.plan()?;
            (Some(cfg), Some(plan))
        }
        None => (None, None),
    };
    let need = |v: Option<f64>, from_cfg: Option<f64>, name: &str| -> Result<f64> {
        v.or(from_cfg).with_context(|| format!("--{name} is required without --config"))
    };
    let sensitivity = need(a.sensitivity, plan.as_ref().map(|p| p.sensitivity()), "sensitivity")?;
    let clip_norm = need(a.clip_norm, cfg.as_ref().map(|c| c.clip_norm), "clip-norm")?;
    let n = a.n.or(cfg.as_ref().map(|c| c.n)).context("--n is required without --config")?;
    let dimension = a
        .dimension
        .or(cfg.as_ref().map(|c| c.discretization().flatten_spec().padded))
        .context("--dimension is required without --config")?;
    let iterations = a.iterations.or(cfg.as_ref().map(|c| c.iterations));
    let delta = match (a.delta, iterations) {
        (Some(d), _) => d,
        (None, Some(t)) => default_delta(n * t),
        (None, None) => bail!("--delta or --iterations is required"),
    };

    if let Some(target) = a.target_epsilon {
        let iterations = iterations.context("--iterations is required for planning")?;
        let (a_norm, b_norm) = match &plan {
            Some(p) => (p.max_a_row_norm(), p.max_b_row_norm()),
            None => {
                let p = FactorizationPlan::honaker(iterations, 1)?;
                (p.max_a_row_norm(), p.max_b_row_norm())
            }
        };
        let inputs = PlanInputs {
            n,
            dimension,
            iterations,
            clip_norm,
            epsilon_target: target,
            workload_row_norm: a_norm,
            decoder_row_norm: b_norm,
            sensitivity,
            modulus: cfg.as_ref().map(|c| c.field.modulus()).unwrap_or(dmm_core::field::DEFAULT_MODULUS),
            dishonest_fraction: a.dishonest_fraction,
        };
        let planned = plan_parameters(&inputs)?;
        let epsilon_adp = dmm_core::accountant::cdp_to_adp(planned.epsilon_cdp, delta)?;
        let out = PlanOutput {
            inputs,
            planned,
            epsilon_adp,
            delta,
        };
        if a.json {
            println!("{}", serde_json::to_string_pretty(&out)?);
        } else {
            println!("{:<12} {:>14}", "quantity", "value");
            for (k, v) in [
                ("sigma", planned.sigma),
                ("gamma", planned.gamma),
                ("beta", planned.beta),
                ("eps_cdp", planned.epsilon_cdp),
                ("eps_adp", epsilon_adp),
                ("delta", delta),
            ] {
                println!("{k:<12} {v:>14.6e}");
            }
        }
        return Ok(());
    }

    let inputs = AccountantInputs {
        sensitivity,
        clip_norm,
        granularity: need(a.granularity, cfg.as_ref().map(|c| c.granularity), "granularity")?,
        rounding_bias: need(a.rounding_bias, cfg.as_ref().map(|c| c.rounding_bias), "rounding-bias")?,
        sigma: need(a.sigma, cfg.as_ref().map(|c| c.sigma), "sigma")?,
        n,
        dimension,
        delta,
        dishonest_fraction: a.dishonest_fraction,
    };
    let r = report(&inputs)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&AccountantOutput { inputs, report: r })?);
    } else {
        println!("{:<12} {:>14}", "quantity", "value");
        for (k, v) in [
            ("sigma", r.sigma),
            ("gamma", r.gamma),
            ("beta", r.beta),
            ("tau", r.tau),
            ("c_hat", r.c_hat),
            ("eps_cdp", r.epsilon_cdp),
            ("eps_adp", r.epsilon_adp),
            ("delta", r.delta),
        ] {
            println!("{k:<12} {v:>14.6e}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    iterations: usize,
    committee_size: usize,
    packing: usize,
    batches: usize,
    dropouts: usize,
    injections: usize,
    final_release: Vec<f64>,
    final_digest: String,
    max_client_reshare_bytes: u64,
    total_reshare_bytes: u64,
    oracle_match: Option<bool>,
    ledger_match: Option<bool>,
    model_error: Option<f64>,
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = SimConfig::load(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let layout = Layout::new(cfg.clone())?;
    let d = cfg.dimension;
    let mut mean = MeanEstimation {
        center: vec![0.5 / (d as f64).sqrt(); d],
        spread: 0.2 / (d as f64).sqrt(),
        seed: a.data_seed,
    };
    let truth: Vec<f64> = (0..d).map(|j| if j % 2 == 0 { 0.3 } else { -0.2 }).collect();
    let mut regression = LinearRegression::new(truth, 0.3, cfg.n as f64, a.data_seed);
    let provider: &mut dyn GradientProvider = match a.task {
        Task::Mean => &mut mean,
        Task::Regression => &mut regression,
    };
    let mut file = match &a.transcript {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let run = run_training(layout.clone(), provider, file.as_mut().map(|f| f as &mut dyn Write))?;
    if let Some(f) = file.as_mut() {
        f.flush()?;
    }

    let (mut oracle_match, mut ledger_match) = (None, None);
    if a.check {
        let oracle = plaintext_oracle(&layout, &run.gradients)?;
        let chi = attack_ledger(&layout)?;
        let f = layout.field;
        let shifted: Vec<Vec<_>> = oracle
            .iter()
            .zip(&chi)
            .map(|(o, c)| o.iter().zip(c).map(|(x, y)| f.add(*x, *y)).collect())
            .collect();
        oracle_match = Some(oracle == run.field_outputs);
        ledger_match = Some(shifted == run.field_outputs);
    }
    let summary = SimulateSummary {
        iterations: cfg.iterations,
        committee_size: cfg.n,
        packing: layout.k,
        batches: layout.batches,
        dropouts: layout.drops.iter().map(|d| d.all().len()).sum(),
        injections: cfg.adversary.injections.len(),
        final_release: run.outputs.last().cloned().unwrap_or_default(),
        final_digest: run.field_outputs.last().map(|v| fnv1a(v)).unwrap_or_default(),
        max_client_reshare_bytes: run.max_client_reshare_bytes(),
        total_reshare_bytes: run.transcripts.iter().map(|t| t.reshare_payload_bytes).sum(),
        oracle_match,
        ledger_match,
        model_error: matches!(a.task, Task::Regression).then(|| regression.error()),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }
    println!(
        "iterations {}  n {}  k {}  batches {}  dropouts {}  injections {}",
        summary.iterations, summary.committee_size, summary.packing, summary.batches, summary.dropouts, summary.injections
    );
    println!(
        "reshare bytes: max per client {}  total {}",
        summary.max_client_reshare_bytes, summary.total_reshare_bytes
    );
    println!("final digest {}", summary.final_digest);
    let head: Vec<String> = summary.final_release.iter().take(8).map(|v| format!("{v:.4}")).collect();
    println!("final release (first {}): [{}]", head.len(), head.join(", "));
    if let Some(e) = summary.model_error {
        println!("model squared error {e:.6}");
    }
    if let (Some(o), Some(l)) = (oracle_match, ledger_match) {
        println!("oracle match {o}  ledger match {l}");
        if !l {
            bail!("protocol output disagrees with oracle plus ledger");
        }
    }
    Ok(())
}

fn factorization(c: FactorizationCommand) -> Result<()> {
    match c {
        FactorizationCommand::Export { iterations, min_sep, out } => {
            let plan = FactorizationPlan::honaker(iterations, min_sep)?;
            plan.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} ({} x {} decoder)", out.display(), iterations, plan.rank());
        }
        FactorizationCommand::Verify { path, tolerance, squared } => {
            let plan = load_factorization(&path, None, tolerance)?;
            println!("iterations {}", plan.t_star);
            println!("rank {}", plan.rank());
            println!("min separation {}", plan.min_sep);
            println!("sensitivity {:.9}", plan.sensitivity());
            println!("max decoder row norm {:.9}", plan.max_b_row_norm());
            println!("live noise (optimized) {}", plan.delta_schedule().max_live());
            println!("loss{} {:.9}", if squared { " (squared)" } else { "" }, plan.loss(squared));
        }
    }
    Ok(())
}
