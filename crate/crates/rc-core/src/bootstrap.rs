//! Startup supply and the two-phase disbursement that seeds the economy.
//!
//! The initial supply is sigma = 2 x n x (rho + tau): double the expected
//! cost of one conference. Half is granted pro-rata to the volunteers of
//! the most recent conference; the other half pays the reviewers and
//! volunteers of one final free-submission conference at face value,
//! minting a top-up if their work exceeds what is left.

use crate::amount::Amount;
use crate::apportion::apportion;
use crate::ledger::{AccountId, AccountRole, Ledger, LedgerError, Memo};
use crate::tax::{submission_cost, PricingParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Work performed by one volunteer, priced in mRC (1 review = 1000,
/// role work at the tax-schedule rates).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub account: AccountId,
    pub value: Amount,
}

impl WorkRecord {
    pub fn new(account: impl Into<AccountId>, value: Amount) -> WorkRecord {
        WorkRecord {
            account: account.into(),
            value,
        }
    }
}

/// Priced work histories feeding the two disbursement phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapHistory {
    /// Volunteers of the most recent (pre-coin) conference.
    pub prior_work: Vec<WorkRecord>,
    /// Approved work actually done at the free-submission conference.
    pub free_conference_work: Vec<WorkRecord>,
    pub free_conference_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub sigma: Amount,
    /// Pro-rata grants capped at floor(sigma / 2); the residue stays
    /// with the treasury.
    pub phase1_grants: Vec<WorkRecord>,
    /// Face-value grants for the free conference's approved work.
    pub phase2_grants: Vec<WorkRecord>,
    pub free_conference_id: String,
    /// Extra mint needed when phase 2 exceeds the remaining half.
    pub top_up_mint: Amount,
}

impl BootstrapPlan {
    pub fn phase1_total(&self) -> Amount {
        self.phase1_grants.iter().map(|g| g.value).sum()
    }
    pub fn phase2_total(&self) -> Amount {
        self.phase2_grants.iter().map(|g| g.value).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BootstrapError {
    #[error("no volunteer history to disburse against")]
    EmptyHistory,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// sigma = 2 x n x (rho + tau), in mRC.
pub fn compute_sigma(n: u64, rho: u32, tau: Amount) -> Amount {
    submission_cost(&PricingParams::new(rho, tau, n)) * 2 * n as i64
}

/// Turn work histories into the two-phase grant plan.
pub fn plan_bootstrap(
    history: &BootstrapHistory,
    sigma: Amount,
) -> Result<BootstrapPlan, BootstrapError> {
    if history.prior_work.is_empty() {
        return Err(BootstrapError::EmptyHistory);
    }
    let half = Amount::mrc(sigma.millicoins() / 2);
    let weights: Vec<u64> = history
        .prior_work
        .iter()
        .map(|w| w.value.millicoins().max(0) as u64)
        .collect();
    let split = apportion(half, &weights);
    let phase1_grants: Vec<WorkRecord> = history
        .prior_work
        .iter()
        .zip(&split.shares)
        .filter(|(_, share)| **share > Amount::ZERO)
        .map(|(w, share)| WorkRecord::new(w.account.clone(), *share))
        .collect();
    let phase1_total: Amount = phase1_grants.iter().map(|g| g.value).sum();

    let phase2_grants: Vec<WorkRecord> = history
        .free_conference_work
        .iter()
        .filter(|w| w.value > Amount::ZERO)
        .cloned()
        .collect();
    let phase2_total: Amount = phase2_grants.iter().map(|g| g.value).sum();

    let remaining = sigma - phase1_total;
    let top_up_mint = if phase2_total > remaining {
        phase2_total - remaining
    } else {
        Amount::ZERO
    };

    Ok(BootstrapPlan {
        sigma,
        phase1_grants,
        phase2_grants,
        free_conference_id: history.free_conference_id.clone(),
        top_up_mint,
    })
}

/// Mint sigma (plus any top-up) into the treasury and pay out both
/// grant phases. Whatever is not granted stays in the treasury.
pub fn execute_bootstrap(
    plan: &BootstrapPlan,
    treasury: &AccountId,
    ledger: &mut Ledger,
) -> Result<(), BootstrapError> {
    if ledger.role(treasury).is_none() {
        ledger.create_account(treasury.clone(), AccountRole::ConferenceTreasury)?;
    }
    let memo = Memo::conference(plan.free_conference_id.clone());
    let to_mint = plan.sigma + plan.top_up_mint;
    if to_mint > Amount::ZERO {
        ledger.mint(treasury.clone(), to_mint, memo.clone())?;
    }
    for grant in plan.phase1_grants.iter().chain(&plan.phase2_grants) {
        if ledger.role(&grant.account).is_none() {
            ledger.create_account(grant.account.clone(), AccountRole::Researcher)?;
        }
        ledger.transfer(treasury.clone(), grant.account.clone(), grant.value, memo.clone())?;
    }
    Ok(())
}
