//! Core library for the ReviewCoin peer-review economy: an auditable
//! hash-chained ledger, the submission tax model, the conference
//! lifecycle state machine, bootstrap supply planning, and a
//! deterministic agent-based simulator.

pub mod amount;
pub mod apportion;
pub mod bootstrap;
pub mod conference;
pub mod ledger;
pub mod sim;
pub mod tax;

pub use amount::{Amount, MRC_PER_RC};
pub use apportion::{apportion, split_evenly, Apportionment};
pub use bootstrap::{
    compute_sigma, execute_bootstrap, plan_bootstrap, BootstrapError, BootstrapHistory,
    BootstrapPlan, WorkRecord,
};
pub use conference::{
    Challenge, ChallengeId, ChallengeOutcome, Conference, ConferenceConfig, ConferenceError,
    Disbursement, Loan, LoanId, LoanStatus, Paper, PaperId, PaperStatus, Phase, Review, ReviewId,
    ReviewStatus, SettlementReport,
};
pub use ledger::{
    read_jsonl, replay, verify_chain, write_jsonl, AccountId, AccountRole, ChainFault, Entry,
    Ledger, LedgerError, LedgerState, Memo, Transaction, TxKind, TxRequest, VerifyOutcome,
};
pub use sim::{
    compute_gini, reports_to_csv, run_scenario, summarize, AgentProfile, ConferenceTemplate,
    CycleReport, MetricSummary, PopulationGroup, ScenarioConfig, ScenarioRun, SimError,
    SimulationReport,
};
pub use tax::{
    compute_tau, round_tau, submission_cost, total_outlay, PricingParams, RoleRate, TaxSchedule,
};
