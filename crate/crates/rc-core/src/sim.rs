//! Deterministic agent-based simulation of the economy over many
//! conference cycles.
//!
//! A scenario is a pure function of its config: all randomness comes
//! from one 64-bit seed, split into independent ChaCha8 streams keyed
//! by (cycle, purpose) or (cycle, agent index) via SplitMix64, so the
//! schedule of draws cannot depend on execution order or parallelism.
//!
//! Two exception regimes are supported. In the default stochastic
//! regime every agent draws its own submissions, no-shows, and
//! defaults from its profile. With `rate_matched_exceptions` the
//! per-cycle exception counts are derived from the tax schedule's
//! modeled rates (extra reviews and the default-loss budget), which is
//! how the tax model's steady-state claim is checked: realized
//! exception costs equal the modeled components exactly.

use crate::amount::Amount;
use crate::bootstrap::{execute_bootstrap, plan_bootstrap, BootstrapHistory, WorkRecord};
use crate::conference::{
    Conference, ConferenceConfig, ConferenceError, PaperId, PaperStatus,
};
use crate::ledger::{
    replay, verify_chain, AccountId, AccountRole, Ledger, LedgerError, Memo, Transaction,
};
use crate::tax::TaxSchedule;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    /// Expected papers per cycle.
    pub submission_rate: f64,
    /// Probability a submitted review is approved on the first pass.
    pub review_accept_prob: f64,
    /// Probability an assigned review is actually delivered.
    pub review_completion_prob: f64,
    /// Probability a loan-funded author defaults.
    pub default_prob: f64,
    /// Share of cycle income transferred to the sponsor account.
    pub sponsor_transfer_fraction: f64,
}

impl AgentProfile {
    pub fn honest() -> AgentProfile {
        AgentProfile {
            submission_rate: 1.0,
            review_accept_prob: 1.0,
            review_completion_prob: 1.0,
            default_prob: 0.0,
            sponsor_transfer_fraction: 0.0,
        }
    }

    fn is_valid(&self) -> bool {
        let probs = [
            self.review_accept_prob,
            self.review_completion_prob,
            self.default_prob,
            self.sponsor_transfer_fraction,
        ];
        self.submission_rate >= 0.0 && probs.iter().all(|p| (0.0..=1.0).contains(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationGroup {
    pub count: u32,
    pub profile: AgentProfile,
}

/// Conference parameters replicated every cycle. Role rosters are
/// filled with the first `size` agents per role so the tax pool stays
/// inside the simulated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConferenceTemplate {
    pub rho: u32,
    pub tau: Amount,
    pub tax_schedule: TaxSchedule,
    pub loans_enabled: bool,
    #[serde(default)]
    pub roster_sizes: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub population: Vec<PopulationGroup>,
    pub cycles: u32,
    pub conference: ConferenceTemplate,
    /// Seed the economy with a two-phase sigma disbursement before cycle 1.
    #[serde(default)]
    pub bootstrap: bool,
    pub rng_seed: u64,
    /// Direct treasury mint when not bootstrapping (loan capital,
    /// payroll top-ups).
    #[serde(default)]
    pub initial_treasury_mrc: Amount,
    /// Direct per-agent grant when not bootstrapping.
    #[serde(default)]
    pub initial_agent_grant_mrc: Amount,
    /// Derive exception counts from the schedule's modeled rates.
    #[serde(default)]
    pub rate_matched_exceptions: bool,
    /// Probability a decided paper's author files a 1-review challenge.
    #[serde(default)]
    pub challenge_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: u32,
    pub submissions: u64,
    pub blocked_submissions: u64,
    pub reviews_paid: u64,
    pub challenges_filed: u64,
    pub challenges_upheld: u64,
    pub defaults: u64,
    pub treasury_mrc: Amount,
    pub escrow_mrc: Amount,
    pub supply_mrc: Amount,
    pub gini: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl MetricSummary {
    fn over(values: impl Iterator<Item = f64>) -> MetricSummary {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n = 0u64;
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        MetricSummary {
            min,
            max,
            mean: sum / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub cycles: u32,
    pub submissions: MetricSummary,
    pub blocked_submissions: MetricSummary,
    pub reviews_paid: MetricSummary,
    pub defaults: MetricSummary,
    pub treasury_mrc: MetricSummary,
    pub supply_mrc: MetricSummary,
    pub gini: MetricSummary,
    /// Per-cycle treasury balance change, the stability headline.
    pub treasury_drift_mrc: MetricSummary,
    pub final_treasury_mrc: Amount,
    pub final_supply_mrc: Amount,
    pub supply_conserved: bool,
    pub chain_verified: bool,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error("population is empty")]
    EmptyPopulation,
    #[error(transparent)]
    Conference(#[from] ConferenceError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Bootstrap(#[from] crate::bootstrap::BootstrapError),
}

/// Completed scenario: the per-cycle reports plus the full ledger for
/// auditing.
#[derive(Debug)]
pub struct ScenarioRun {
    pub reports: Vec<CycleReport>,
    pub ledger: Ledger,
}

/// Standard Gini coefficient of non-negative holdings; 0 for perfect
/// equality, (n-1)/n for a single point mass.
pub fn compute_gini(balances: &[Amount]) -> Result<f64, SimError> {
    if balances.is_empty() {
        return Err(SimError::EmptyPopulation);
    }
    let mut values: Vec<i128> = balances.iter().map(|a| a.millicoins() as i128).collect();
    values.sort_unstable();
    let n = values.len() as i128;
    let sum: i128 = values.iter().sum();
    if sum == 0 {
        return Ok(0.0);
    }
    // G = 2 * sum(i * x_i) / (n * sum) - (n + 1) / n, with 1-based ranks.
    let weighted: i128 = values
        .iter()
        .enumerate()
        .map(|(i, &x)| (i as i128 + 1) * x)
        .sum();
    Ok(2.0 * weighted as f64 / (n as f64 * sum as f64) - (n as f64 + 1.0) / n as f64)
}

/// Aggregate cycle reports and audit the final ledger state.
pub fn summarize(reports: &[CycleReport], log: &[Transaction]) -> SimulationReport {
    assert!(!reports.is_empty(), "cannot summarize an empty run");
    let chain_verified = verify_chain(log).is_ok();
    let supply_conserved = match replay(log) {
        Ok(state) => {
            let total: Amount = state.balances.values().copied().sum();
            total == state.total_minted
                && reports.last().map(|r| r.supply_mrc) == Some(state.total_minted)
        }
        Err(_) => false,
    };
    let drift = |i: usize| {
        let now = reports[i].treasury_mrc.millicoins();
        let before = if i == 0 { now } else { reports[i - 1].treasury_mrc.millicoins() };
        (now - before) as f64
    };
    SimulationReport {
        cycles: reports.len() as u32,
        submissions: MetricSummary::over(reports.iter().map(|r| r.submissions as f64)),
        blocked_submissions: MetricSummary::over(
            reports.iter().map(|r| r.blocked_submissions as f64),
        ),
        reviews_paid: MetricSummary::over(reports.iter().map(|r| r.reviews_paid as f64)),
        defaults: MetricSummary::over(reports.iter().map(|r| r.defaults as f64)),
        treasury_mrc: MetricSummary::over(
            reports.iter().map(|r| r.treasury_mrc.millicoins() as f64),
        ),
        supply_mrc: MetricSummary::over(
            reports.iter().map(|r| r.supply_mrc.millicoins() as f64),
        ),
        gini: MetricSummary::over(reports.iter().map(|r| r.gini)),
        treasury_drift_mrc: MetricSummary::over((0..reports.len()).map(drift)),
        final_treasury_mrc: reports.last().unwrap().treasury_mrc,
        final_supply_mrc: reports.last().unwrap().supply_mrc,
        supply_conserved,
        chain_verified,
    }
}

/// Per-cycle CSV rows (header included).
pub fn reports_to_csv(reports: &[CycleReport]) -> String {
    let mut out = String::from(
        "cycle,submissions,blocked,reviews_paid,challenges_upheld,defaults,treasury_mRC,supply_mRC,gini\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.cycle,
            r.submissions,
            r.blocked_submissions,
            r.reviews_paid,
            r.challenges_upheld,
            r.defaults,
            r.treasury_mrc.millicoins(),
            r.supply_mrc.millicoins(),
            r.gini,
        ));
    }
    out
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent stream for one (cycle, purpose) pair.
fn stream(seed: u64, cycle: u32, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(
        seed ^ splitmix64(cycle as u64) ^ splitmix64(tag.wrapping_mul(0x517c_c1b7_2722_0a95)),
    ))
}

/// Independent stream for one (cycle, agent) pair.
fn agent_stream(seed: u64, cycle: u32, agent: usize) -> ChaCha8Rng {
    stream(seed, cycle, 0x1000_0000 + agent as u64)
}

struct Agent {
    account: AccountId,
    profile: AgentProfile,
}

struct Simulation<'a> {
    config: &'a ScenarioConfig,
    agents: Vec<Agent>,
    treasury: AccountId,
    escrow: AccountId,
    sponsor: Option<AccountId>,
    rosters: BTreeMap<String, Vec<AccountId>>,
}

/// Run a scenario to completion. Deterministic in the config: rerunning
/// with the same seed yields identical reports and an identical ledger.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, SimError> {
    validate(config)?;
    let mut ledger = Ledger::new();

    let mut agents = Vec::new();
    for (g, group) in config.population.iter().enumerate() {
        for i in 0..group.count {
            let account = ledger.create_account(
                format!("agent-{}-{}", g, i),
                AccountRole::Researcher,
            )?;
            agents.push(Agent {
                account,
                profile: group.profile,
            });
        }
    }
    let treasury = ledger.create_account(
        format!("{}:treasury", config.name),
        AccountRole::ConferenceTreasury,
    )?;
    let escrow = ledger.create_account(
        format!("{}:escrow", config.name),
        AccountRole::ConferenceEscrow,
    )?;
    let sponsor = if agents.iter().any(|a| a.profile.sponsor_transfer_fraction > 0.0) {
        Some(ledger.create_account(format!("{}:sponsor", config.name), AccountRole::Sponsor)?)
    } else {
        None
    };

    // Initial funding.
    let n_estimate: f64 = agents.iter().map(|a| a.profile.submission_rate).sum();
    if config.bootstrap {
        let n_est = n_estimate.round().max(1.0) as u64;
        let sigma = crate::bootstrap::compute_sigma(n_est, config.conference.rho, config.conference.tau);
        // Synthetic history: every agent carries an equal share of the
        // prior conference's work and of the free conference's reviews.
        let review_value =
            Amount::rc(config.conference.rho as i64) * n_est as i64;
        let per_agent = Amount::mrc(review_value.millicoins() / agents.len() as i64);
        let history = BootstrapHistory {
            prior_work: agents
                .iter()
                .map(|a| WorkRecord::new(a.account.clone(), Amount::rc(1)))
                .collect(),
            free_conference_work: agents
                .iter()
                .map(|a| WorkRecord::new(a.account.clone(), per_agent))
                .collect(),
            free_conference_id: format!("{}-free", config.name),
        };
        let plan = plan_bootstrap(&history, sigma)?;
        execute_bootstrap(&plan, &treasury, &mut ledger)?;
    } else {
        let grants = config.initial_agent_grant_mrc * agents.len() as i64;
        let to_mint = config.initial_treasury_mrc + grants;
        if to_mint > Amount::ZERO {
            ledger.mint(treasury.clone(), to_mint, Memo::default())?;
        }
        if config.initial_agent_grant_mrc > Amount::ZERO {
            for agent in &agents {
                ledger.transfer(
                    treasury.clone(),
                    agent.account.clone(),
                    config.initial_agent_grant_mrc,
                    Memo::default(),
                )?;
            }
        }
    }

    let mut rosters = BTreeMap::new();
    for (role, size) in &config.conference.roster_sizes {
        let members: Vec<AccountId> = agents
            .iter()
            .take(*size as usize)
            .map(|a| a.account.clone())
            .collect();
        rosters.insert(role.clone(), members);
    }

    let sim = Simulation {
        config,
        agents,
        treasury,
        escrow,
        sponsor,
        rosters,
    };

    let mut reports = Vec::with_capacity(config.cycles as usize);
    for cycle in 0..config.cycles {
        let report = sim.run_cycle(cycle, &mut ledger)?;
        reports.push(report);
    }
    debug_assert!(verify_chain(ledger.log()).is_ok());
    Ok(ScenarioRun { reports, ledger })
}

fn validate(config: &ScenarioConfig) -> Result<(), SimError> {
    if config.population.is_empty()
        || config.population.iter().map(|g| g.count).sum::<u32>() == 0
    {
        return Err(SimError::ConfigInvalid("population is empty".into()));
    }
    if config.cycles < 1 {
        return Err(SimError::ConfigInvalid("cycles must be at least 1".into()));
    }
    if !config.population.iter().all(|g| g.profile.is_valid()) {
        return Err(SimError::ConfigInvalid(
            "agent probabilities must lie in [0, 1]".into(),
        ));
    }
    let total: u32 = config.population.iter().map(|g| g.count).sum();
    if total <= config.conference.rho {
        return Err(SimError::ConfigInvalid(format!(
            "need more than rho={} agents to staff reviews",
            config.conference.rho
        )));
    }
    if !(0.0..=1.0).contains(&config.challenge_rate) {
        return Err(SimError::ConfigInvalid("challenge_rate must lie in [0, 1]".into()));
    }
    Ok(())
}

impl Simulation<'_> {
    fn conference_config(&self, cycle: u32) -> ConferenceConfig {
        ConferenceConfig {
            conference_id: format!("{}-c{}", self.config.name, cycle),
            rho: self.config.conference.rho,
            tau: self.config.conference.tau,
            tax_schedule: self.config.conference.tax_schedule.clone(),
            loans_enabled: self.config.conference.loans_enabled,
            role_rosters: self.rosters.clone(),
        }
    }

    fn run_cycle(&self, cycle: u32, ledger: &mut Ledger) -> Result<CycleReport, SimError> {
        let seed = self.config.rng_seed;
        let tmpl = &self.config.conference;
        let rate_matched = self.config.rate_matched_exceptions;
        let mut conf = Conference::with_accounts(
            self.conference_config(cycle),
            self.treasury.clone(),
            self.escrow.clone(),
            ledger,
        )?;
        let cost = conf.config().submission_cost();
        let log_start = ledger.len();

        // Submission intents.
        let mut intents: Vec<usize> = Vec::new();
        for (idx, agent) in self.agents.iter().enumerate() {
            let mut rng = agent_stream(seed, cycle, idx);
            let rate = agent.profile.submission_rate;
            let mut papers = rate.floor() as u32;
            if rng.random_bool(rate.fract()) {
                papers += 1;
            }
            for _ in 0..papers {
                intents.push(idx);
            }
        }
        let n_planned = intents.len();

        // Exception plan.
        let mut defaulter_intents: BTreeMap<usize, u32> = BTreeMap::new(); // intent -> paid slots
        let mut extra_review_budget = 0u64;
        if rate_matched && n_planned > 0 {
            let schedule = &tmpl.tax_schedule;
            extra_review_budget =
                (schedule.extra_review_rate.millicoins() as u64 * n_planned as u64) / 1000;
            let loss_budget = schedule.default_reserve_rate.millicoins() * n_planned as i64;
            let tau = tmpl.tau.millicoins();
            if tmpl.loans_enabled && tau > 0 && loss_budget >= tau {
                let defaults = (loss_budget / tau) as usize;
                let mut rng = stream(seed, cycle, 1);
                let chosen = sample(&mut rng, n_planned, defaults.min(n_planned));
                let mut remainder = loss_budget - (chosen.len() as i64) * tau;
                for intent in chosen.iter() {
                    // Spread the remaining loss budget as paid review slots
                    // on defaulted papers, one coin at a time.
                    let mut slots = 0u32;
                    while remainder >= 1000 && slots < tmpl.rho {
                        slots += 1;
                        remainder -= 1000;
                    }
                    defaulter_intents.insert(intent, slots);
                }
            }
        }

        // Submissions.
        conf.open_submissions()?;
        let mut blocked = 0u64;
        let mut papers: Vec<(PaperId, usize)> = Vec::new(); // paper, author idx
        let mut defaulted_papers: Vec<(PaperId, usize, u32)> = Vec::new(); // paper, author, paid slots
        let mut delinquent: Vec<bool> = vec![false; self.agents.len()];
        for (intent_idx, &agent_idx) in intents.iter().enumerate() {
            let agent = &self.agents[agent_idx];
            let balance = ledger.balance(&agent.account)?;
            let (use_loan, will_default) = if rate_matched {
                match defaulter_intents.get(&intent_idx) {
                    Some(_) => (true, true),
                    None => (balance < cost && tmpl.loans_enabled, false),
                }
            } else {
                let use_loan = balance < cost && tmpl.loans_enabled;
                let will_default = use_loan && {
                    let mut rng = stream(seed, cycle, 2 + intent_idx as u64);
                    rng.random_bool(agent.profile.default_prob)
                };
                (use_loan, will_default)
            };
            match conf.submit_paper(ledger, agent.account.clone(), use_loan) {
                Ok(paper) => {
                    if will_default {
                        let slots = defaulter_intents.get(&intent_idx).copied().unwrap_or(tmpl.rho);
                        defaulted_papers.push((paper, agent_idx, slots));
                        delinquent[agent_idx] = true;
                    } else {
                        papers.push((paper, agent_idx));
                    }
                }
                Err(ConferenceError::Ledger(LedgerError::InsufficientFunds { .. }))
                | Err(ConferenceError::LoansDisabled) => blocked += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let submissions = (papers.len() + defaulted_papers.len()) as u64;

        // Reviewer assignment.
        let mut assign_rng = stream(seed, cycle, 3);
        let all_papers: Vec<(PaperId, usize)> = papers
            .iter()
            .copied()
            .chain(defaulted_papers.iter().map(|&(p, a, _)| (p, a)))
            .collect();
        for &(paper, author_idx) in &all_papers {
            let eligible: Vec<usize> = (0..self.agents.len())
                .filter(|&i| i != author_idx && !delinquent[i])
                .collect();
            if eligible.len() < tmpl.rho as usize {
                return Err(SimError::ConfigInvalid(
                    "not enough eligible reviewers".into(),
                ));
            }
            let picks = sample(&mut assign_rng, eligible.len(), tmpl.rho as usize);
            let reviewers: Vec<AccountId> = picks
                .iter()
                .map(|i| self.agents[eligible[i]].account.clone())
                .collect();
            conf.assign_reviewers(paper, reviewers)?;
        }
        conf.close_submissions()?;

        // Review delivery and approval.
        let mut reviews_paid = 0u64;
        let mut replacements = 0u64;
        let mut delivery_rng = stream(seed, cycle, 4);
        for &(paper, author_idx) in &papers {
            let assigned = conf.paper(paper)?.assigned_reviewers.clone();
            for reviewer in assigned {
                let reviewer_idx = self.agent_index(&reviewer);
                let delivers = rate_matched
                    || delivery_rng
                        .random_bool(self.agents[reviewer_idx].profile.review_completion_prob);
                let (actor, is_replacement) = if delivers {
                    (reviewer, false)
                } else {
                    // No-show: hire a replacement, paid from the
                    // extra-review component.
                    match self.pick_substitute(
                        &conf, paper, author_idx, &delinquent, &mut delivery_rng,
                    ) {
                        Some(idx) => (self.agents[idx].account.clone(), true),
                        None => continue, // slot stays unpaid
                    }
                };
                if is_replacement {
                    conf.solicit_extra_review(paper, actor.clone(), None)?;
                    replacements += 1;
                }
                let review = conf.submit_review(actor.clone(), paper)?;
                let accepted = {
                    let idx = self.agent_index(&actor);
                    rate_matched
                        || delivery_rng.random_bool(self.agents[idx].profile.review_accept_prob)
                };
                if !accepted {
                    // One revision round, then approval.
                    conf.request_revision(review)?;
                    conf.submit_review(actor, paper)?;
                }
                conf.approve_review(ledger, review)?;
                reviews_paid += 1;
            }
        }
        // Defaulted papers: only the planned slots are ever delivered.
        for &(paper, _, slots) in &defaulted_papers {
            let assigned = conf.paper(paper)?.assigned_reviewers.clone();
            for reviewer in assigned.into_iter().take(slots as usize) {
                let review = conf.submit_review(reviewer, paper)?;
                conf.approve_review(ledger, review)?;
                reviews_paid += 1;
            }
            conf.withdraw_on_default(ledger, paper)?;
        }
        let defaults = defaulted_papers.len() as u64;

        // Extra reviews on hard papers, beyond what replacements used.
        let mut extra_rng = stream(seed, cycle, 5);
        let extras_wanted = if rate_matched {
            extra_review_budget.saturating_sub(replacements)
        } else {
            let rate = tmpl.tax_schedule.extra_review_rate.millicoins() as f64 / 1000.0;
            papers
                .iter()
                .filter(|_| extra_rng.random_bool(rate.clamp(0.0, 1.0)))
                .count() as u64
        };
        let mut extras_done = 0u64;
        let mut extra_pick_rng = stream(seed, cycle, 6);
        'outer: for _ in 0..extras_wanted {
            if papers.is_empty() {
                break;
            }
            for _attempt in 0..20 {
                let (paper, author_idx) = papers[extra_pick_rng.random_range(0..papers.len())];
                if let Some(idx) = self.pick_substitute(
                    &conf, paper, author_idx, &delinquent, &mut extra_pick_rng,
                ) {
                    let actor = self.agents[idx].account.clone();
                    conf.solicit_extra_review(paper, actor.clone(), None)?;
                    let review = conf.submit_review(actor, paper)?;
                    conf.approve_review(ledger, review)?;
                    reviews_paid += 1;
                    extras_done += 1;
                    continue 'outer;
                }
            }
            break; // no paper has a free substitute left
        }
        let _ = extras_done;

        // Decisions and challenges.
        conf.begin_decisions()?;
        let mut challenges_filed = 0u64;
        let mut challenges_upheld = 0u64;
        let mut challenge_rng = stream(seed, cycle, 7);
        for &(paper, author_idx) in &papers {
            conf.decide_paper(paper, "decided")?;
            if self.config.challenge_rate > 0.0
                && challenge_rng.random_bool(self.config.challenge_rate)
            {
                let author = self.agents[author_idx].account.clone();
                let target = conf
                    .reviews()
                    .iter()
                    .find(|r| r.paper == paper && !r.is_extra)
                    .map(|r| r.id);
                let stake = Amount::rc(1);
                if let Some(target) = target {
                    if ledger.balance(&author)? < stake {
                        continue;
                    }
                    let challenge = conf.file_challenge(ledger, author, paper, vec![target])?;
                    challenges_filed += 1;
                    if let Some(idx) = self.pick_substitute(
                        &conf, paper, author_idx, &delinquent, &mut challenge_rng,
                    ) {
                        let actor = self.agents[idx].account.clone();
                        conf.solicit_extra_review(paper, actor.clone(), Some(challenge))?;
                        let review = conf.submit_review(actor, paper)?;
                        conf.approve_review(ledger, review)?;
                        reviews_paid += 1;
                        let upheld = challenge_rng.random_bool(0.5);
                        match conf.resolve_challenge(ledger, challenge, upheld) {
                            Ok(_) => {
                                if upheld {
                                    challenges_upheld += 1;
                                }
                            }
                            // A broke challenged reviewer with an unfunded
                            // treasury: rule the challenge denied instead.
                            Err(ConferenceError::ReviewerInsolvent(_)) => {
                                conf.resolve_challenge(ledger, challenge, false)?;
                            }
                            Err(e) => return Err(e.into()),
                        }
                    } else {
                        conf.resolve_challenge(ledger, challenge, false)?;
                    }
                }
            }
        }

        conf.begin_settlement()?;
        conf.settle(ledger)?;

        // Sponsors skim a share of what their researchers earned.
        if let Some(sponsor) = &self.sponsor {
            for agent in &self.agents {
                let fraction = agent.profile.sponsor_transfer_fraction;
                if fraction <= 0.0 {
                    continue;
                }
                let income: Amount = ledger.log()[log_start..]
                    .iter()
                    .flat_map(|tx| &tx.entries)
                    .filter(|e| e.account == agent.account && e.delta > Amount::ZERO)
                    .map(|e| e.delta)
                    .sum();
                let skim = Amount::mrc((income.millicoins() as f64 * fraction) as i64);
                let skim = skim.min(ledger.balance(&agent.account)?);
                if skim > Amount::ZERO {
                    ledger.transfer(agent.account.clone(), sponsor.clone(), skim, Memo::default())?;
                }
            }
        }

        let balances: Vec<Amount> = self
            .agents
            .iter()
            .map(|a| ledger.balance(&a.account))
            .collect::<Result<_, _>>()?;
        Ok(CycleReport {
            cycle,
            submissions,
            blocked_submissions: blocked,
            reviews_paid,
            challenges_filed,
            challenges_upheld,
            defaults,
            treasury_mrc: ledger.balance(&self.treasury)?,
            escrow_mrc: ledger.balance(&self.escrow)?,
            supply_mrc: ledger.total_minted(),
            gini: compute_gini(&balances)?,
        })
    }

    fn agent_index(&self, account: &AccountId) -> usize {
        self.agents
            .iter()
            .position(|a| &a.account == account)
            .expect("account belongs to the population")
    }

    /// An eligible reviewer with no prior involvement on the paper.
    fn pick_substitute(
        &self,
        conf: &Conference,
        paper: PaperId,
        author_idx: usize,
        delinquent: &[bool],
        rng: &mut ChaCha8Rng,
    ) -> Option<usize> {
        let record = conf.paper(paper).ok()?;
        if record.status == PaperStatus::Withdrawn {
            return None;
        }
        let taken: Vec<&AccountId> = record
            .assigned_reviewers
            .iter()
            .chain(
                conf.reviews()
                    .iter()
                    .filter(|r| r.paper == paper)
                    .map(|r| &r.reviewer),
            )
            .collect();
        let eligible: Vec<usize> = (0..self.agents.len())
            .filter(|&i| {
                i != author_idx && !delinquent[i] && !taken.contains(&&self.agents[i].account)
            })
            .collect();
        if eligible.is_empty() {
            None
        } else {
            Some(eligible[rng.random_range(0..eligible.len())])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tax::compute_tau;

    fn honest_scenario(agents: u32, cycles: u32) -> ScenarioConfig {
        let schedule = TaxSchedule::neurips_db_2024();
        let tau = compute_tau(&schedule);
        ScenarioConfig {
            name: "test".into(),
            population: vec![PopulationGroup {
                count: agents,
                profile: AgentProfile::honest(),
            }],
            cycles,
            conference: ConferenceTemplate {
                rho: 3,
                tau,
                tax_schedule: schedule,
                loans_enabled: false,
                roster_sizes: BTreeMap::new(),
            },
            bootstrap: true,
            rng_seed: 7,
            initial_treasury_mrc: Amount::ZERO,
            initial_agent_grant_mrc: Amount::ZERO,
            rate_matched_exceptions: false,
            challenge_rate: 0.0,
        }
    }

    #[test]
    fn gini_equal_holdings() {
        assert_eq!(
            compute_gini(&[Amount::mrc(100); 3]).unwrap(),
            0.0
        );
    }

    #[test]
    fn gini_point_mass() {
        let g = compute_gini(&[Amount::ZERO, Amount::ZERO, Amount::mrc(300)]).unwrap();
        assert!((g - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gini_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let balances: Vec<Amount> =
                (0..10).map(|_| Amount::mrc(rng.random_range(0..10_000))).collect();
            let g = compute_gini(&balances).unwrap();
            // O(n^2) mean absolute difference oracle.
            let n = balances.len() as f64;
            let sum: f64 = balances.iter().map(|a| a.millicoins() as f64).sum();
            let mut diff = 0.0;
            for a in &balances {
                for b in &balances {
                    diff += (a.millicoins() - b.millicoins()).abs() as f64;
                }
            }
            let oracle = if sum == 0.0 { 0.0 } else { diff / (2.0 * n * sum) };
            assert!((g - oracle).abs() < 1e-12, "{g} vs {oracle}");
        }
    }

    #[test]
    fn gini_empty_population() {
        assert!(matches!(compute_gini(&[]), Err(SimError::EmptyPopulation)));
    }

    #[test]
    fn empty_population_invalid() {
        let mut config = honest_scenario(0, 1);
        config.population.clear();
        assert!(matches!(
            run_scenario(&config),
            Err(SimError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn honest_single_cycle_clears() {
        let run = run_scenario(&honest_scenario(21, 1)).unwrap();
        let report = &run.reports[0];
        assert_eq!(report.blocked_submissions, 0);
        assert_eq!(report.escrow_mrc, Amount::ZERO);
        assert_eq!(report.submissions, 21);
        assert!(verify_chain(run.ledger.log()).is_ok());
    }

    #[test]
    fn same_seed_same_reports() {
        let a = run_scenario(&honest_scenario(15, 3)).unwrap();
        let b = run_scenario(&honest_scenario(15, 3)).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.ledger.log(), b.ledger.log());
    }

    #[test]
    fn starvation_without_bootstrap_or_loans() {
        let mut config = honest_scenario(10, 1);
        config.bootstrap = false;
        let run = run_scenario(&config).unwrap();
        assert_eq!(run.reports[0].submissions, 0);
        assert_eq!(run.reports[0].blocked_submissions, 10);
    }

    #[test]
    fn loans_unblock_starved_authors() {
        let mut config = honest_scenario(10, 1);
        config.bootstrap = false;
        config.conference.loans_enabled = true;
        config.initial_treasury_mrc = Amount::rc(1000);
        let run = run_scenario(&config).unwrap();
        assert_eq!(run.reports[0].blocked_submissions, 0);
        assert_eq!(run.reports[0].submissions, 10);
    }

    #[test]
    fn summary_of_single_cycle_equals_cycle() {
        let run = run_scenario(&honest_scenario(12, 1)).unwrap();
        let summary = summarize(&run.reports, run.ledger.log());
        assert_eq!(summary.cycles, 1);
        assert_eq!(summary.submissions.min, summary.submissions.max);
        assert!(summary.supply_conserved);
        assert!(summary.chain_verified);
    }

    #[test]
    fn tampered_log_fails_audit() {
        let run = run_scenario(&honest_scenario(12, 1)).unwrap();
        let mut log = run.ledger.log().to_vec();
        let mid = log.len() / 2;
        log[mid].entries[0].delta += Amount::mrc(1);
        let summary = summarize(&run.reports, &log);
        assert!(!summary.chain_verified);
        assert!(!summary.supply_conserved);
    }

    #[test]
    fn sponsor_skim_accumulates() {
        let mut config = honest_scenario(12, 2);
        config.population[0].profile.sponsor_transfer_fraction = 0.5;
        let run = run_scenario(&config).unwrap();
        let sponsor = AccountId::new("test:sponsor");
        assert!(run.ledger.balance(&sponsor).unwrap() > Amount::ZERO);
        // Hoarding is visible in the inequality metric.
        assert!(run.reports.last().unwrap().gini >= 0.0);
    }
}
