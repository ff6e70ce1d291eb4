//! `rc` — command-line tools for the ReviewCoin economy.
//!
//! Exit codes: 0 on success, 1 when a domain operation fails (bad
//! ledger, infeasible scenario, invalid schedule), 2 on usage errors.

use clap::{Args, Parser, Subcommand};
use rc_core::{
    compute_sigma, compute_tau, plan_bootstrap, read_jsonl, replay, reports_to_csv, round_tau,
    run_scenario, submission_cost, summarize, total_outlay, verify_chain, AccountId, Amount,
    BootstrapHistory, PricingParams, ScenarioConfig, TaxSchedule,
};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rc", version, about = "ReviewCoin peer-review economy tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price submissions from a tax schedule.
    Tax(TaxArgs),
    /// Run a simulation scenario and write its reports.
    Simulate(SimulateArgs),
    /// Inspect or verify a ledger log.
    Ledger {
        #[command(subcommand)]
        command: LedgerCommand,
    },
    /// Plan the startup supply.
    Bootstrap {
        #[command(subcommand)]
        command: BootstrapCommand,
    },
}

#[derive(Args)]
struct TaxArgs {
    /// Tax schedule JSON file.
    #[arg(long)]
    schedule: PathBuf,
    /// Reviews required per paper.
    #[arg(long, default_value_t = 3)]
    rho: u32,
    /// Expected submissions.
    #[arg(long, default_value_t = 0)]
    n: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for report.json and cycles.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Check the hash chain, conservation, and balance bounds.
    Verify { file: PathBuf },
    /// Show final balances (or one account's balance) from a log.
    Show {
        file: PathBuf,
        #[arg(long)]
        account: Option<String>,
    },
}

#[derive(Subcommand)]
enum BootstrapCommand {
    /// Compute sigma and the two-phase grant plan from work histories.
    Plan {
        /// Work-history JSON file.
        #[arg(long)]
        history: PathBuf,
        /// Expected submissions at the first priced conference.
        #[arg(long)]
        n: u64,
        /// Reviews required per paper.
        #[arg(long)]
        rho: u32,
        /// Per-paper tax in millicoins.
        #[arg(long)]
        tau: i64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Tax(args) => cmd_tax(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Ledger { command } => match command {
            LedgerCommand::Verify { file } => cmd_ledger_verify(file),
            LedgerCommand::Show { file, account } => cmd_ledger_show(file, account),
        },
        Command::Bootstrap { command } => match command {
            BootstrapCommand::Plan { history, n, rho, tau } => {
                cmd_bootstrap_plan(history, n, rho, tau)
            }
        },
    }
}

fn cmd_tax(args: TaxArgs) -> Result<(), String> {
    let text = fs::read_to_string(&args.schedule)
        .map_err(|e| format!("cannot read {}: {e}", args.schedule.display()))?;
    let schedule: TaxSchedule =
        serde_json::from_str(&text).map_err(|e| format!("invalid schedule: {e}"))?;
    if !schedule.is_valid() {
        return Err("invalid schedule: rates must be positive".into());
    }
    let tau = compute_tau(&schedule);
    let rounded = round_tau(tau);
    let params = PricingParams::new(args.rho, tau, args.n);
    if !params.is_valid() {
        return Err("rho must be at least 1".into());
    }
    println!("tau_exact_rc {}", tau.display_rc());
    println!("tau_rounded_rc {}", rounded.display_rc());
    println!("submission_cost_rc {}", submission_cost(&params).display_rc());
    if args.n > 0 {
        println!("total_outlay_rc {}", total_outlay(&params).display_rc());
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), String> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| format!("cannot read {}: {e}", args.scenario.display()))?;
    let mut config: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| format!("invalid scenario: {e}"))?;
    if let Ok(seed) = std::env::var("RC_SEED") {
        config.rng_seed = seed
            .parse()
            .map_err(|_| format!("RC_SEED must be a u64, got {seed:?}"))?;
    }
    let run = run_scenario(&config).map_err(|e| e.to_string())?;
    let summary = summarize(&run.reports, run.ledger.log());

    fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    let report = serde_json::json!({
        "scenario": config,
        "summary": summary,
        "cycles": run.reports,
    });
    let json_path = args.out.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| format!("cannot write {}: {e}", json_path.display()))?;
    let csv_path = args.out.join("cycles.csv");
    fs::write(&csv_path, reports_to_csv(&run.reports))
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;

    println!(
        "simulated {} cycles: final treasury {} RC, supply {} RC, mean gini {:.4}",
        summary.cycles,
        summary.final_treasury_mrc.display_rc(),
        summary.final_supply_mrc.display_rc(),
        summary.gini.mean,
    );
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    if !summary.chain_verified || !summary.supply_conserved {
        return Err("final-state audit failed".into());
    }
    Ok(())
}

fn load_log(file: &PathBuf) -> Result<Vec<rc_core::Transaction>, String> {
    let text = fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    read_jsonl(&text).map_err(|e| format!("invalid log: {e}"))
}

fn cmd_ledger_verify(file: PathBuf) -> Result<(), String> {
    let log = load_log(&file)?;
    match verify_chain(&log) {
        rc_core::VerifyOutcome::Ok { transactions } => {
            let state = replay(&log).map_err(|e| e.to_string())?;
            println!(
                "ok: {} transactions, {} accounts, supply {} RC",
                transactions,
                state.balances.len(),
                state.total_minted.display_rc()
            );
            Ok(())
        }
        rc_core::VerifyOutcome::Failed(fault) => {
            Err(format!("chain invalid at {fault}"))
        }
    }
}

fn cmd_ledger_show(file: PathBuf, account: Option<String>) -> Result<(), String> {
    let log = load_log(&file)?;
    let state = replay(&log).map_err(|e| format!("chain invalid: {e}"))?;
    match account {
        Some(id) => {
            let id = AccountId::new(id);
            let balance = state
                .balances
                .get(&id)
                .copied()
                .ok_or_else(|| format!("unknown account {id}"))?;
            println!("{id} {}", balance.display_rc());
        }
        None => {
            for (id, balance) in &state.balances {
                println!("{id} {}", balance.display_rc());
            }
            println!("total_supply {}", state.total_minted.display_rc());
        }
    }
    Ok(())
}

fn cmd_bootstrap_plan(history: PathBuf, n: u64, rho: u32, tau: i64) -> Result<(), String> {
    if tau < 0 {
        return Err("tau must be non-negative".into());
    }
    let text = fs::read_to_string(&history)
        .map_err(|e| format!("cannot read {}: {e}", history.display()))?;
    let history: BootstrapHistory =
        serde_json::from_str(&text).map_err(|e| format!("invalid history: {e}"))?;
    let sigma = compute_sigma(n, rho, Amount::mrc(tau));
    let plan = plan_bootstrap(&history, sigma).map_err(|e| e.to_string())?;
    println!("sigma_rc {}", plan.sigma.display_rc());
    println!("phase1_total_rc {}", plan.phase1_total().display_rc());
    println!("phase2_total_rc {}", plan.phase2_total().display_rc());
    println!("top_up_mint_rc {}", plan.top_up_mint.display_rc());
    for grant in &plan.phase1_grants {
        println!("phase1 {} {}", grant.account, grant.value.display_rc());
    }
    for grant in &plan.phase2_grants {
        println!("phase2 {} {}", grant.account, grant.value.display_rc());
    }
    Ok(())
}
