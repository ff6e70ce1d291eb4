//! Submission pricing: the per-paper tax, the price of a submission,
//! and a conference's total outlay.
//!
//! The tax is a sum of per-paper components: one per paid role in the
//! review hierarchy, one funding extra reviews, and one reserving for
//! loan defaults. It is kept exact in millicoins; rounding to a whole
//! coin is a separate, explicit policy step.

use crate::amount::{Amount, MRC_PER_RC};
use serde::{Deserialize, Serialize};

/// Pay rate for one conference role, accrued per submitted paper and
/// shared by `split_ways` people.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRate {
    pub role_name: String,
    /// mRC accrued per submitted paper, pooled across the role.
    pub per_paper_rate: Amount,
    pub split_ways: u32,
}

impl RoleRate {
    pub fn new(role_name: impl Into<String>, per_paper_rate: Amount, split_ways: u32) -> RoleRate {
        RoleRate {
            role_name: role_name.into(),
            per_paper_rate,
            split_ways,
        }
    }
}

/// The full per-paper tax decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaxSchedule {
    pub roles: Vec<RoleRate>,
    /// mRC per paper reserved for extra reviews (hard papers, challenges,
    /// no-show replacements).
    pub extra_review_rate: Amount,
    /// mRC per paper reserved against loan defaults.
    pub default_reserve_rate: Amount,
}

impl TaxSchedule {
    /// The worked 2800-paper dataset-track schedule: ACs 0.5, SACs 0.25,
    /// TCs 0.125 (pooled across 3), extra reviews 0.2, defaults 0.05.
    pub fn neurips_db_2024() -> TaxSchedule {
        TaxSchedule {
            roles: vec![
                RoleRate::new("area-chair", Amount::mrc(500), 1),
                RoleRate::new("senior-area-chair", Amount::mrc(250), 1),
                RoleRate::new("track-chair", Amount::mrc(125), 3),
            ],
            extra_review_rate: Amount::mrc(200),
            default_reserve_rate: Amount::mrc(50),
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.extra_review_rate.is_negative()
            && !self.default_reserve_rate.is_negative()
            && self
                .roles
                .iter()
                .all(|r| r.per_paper_rate > Amount::ZERO && r.split_ways >= 1)
    }
}

/// ρ, τ, and n for one conference cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricingParams {
    /// Reviews required per paper.
    pub rho: u32,
    /// Per-paper tax in mRC.
    pub tau: Amount,
    /// Papers submitted.
    pub n: u64,
}

impl PricingParams {
    pub fn new(rho: u32, tau: Amount, n: u64) -> PricingParams {
        PricingParams { rho, tau, n }
    }

    pub fn is_valid(&self) -> bool {
        self.rho >= 1 && !self.tau.is_negative()
    }
}

/// Exact per-paper tax: the sum of every schedule component.
pub fn compute_tau(schedule: &TaxSchedule) -> Amount {
    let roles: Amount = schedule.roles.iter().map(|r| r.per_paper_rate).sum();
    roles + schedule.extra_review_rate + schedule.default_reserve_rate
}

/// Round an exact tax to the nearest whole coin, ties to even.
pub fn round_tau(tau_exact: Amount) -> Amount {
    debug_assert!(!tau_exact.is_negative());
    let q = tau_exact.millicoins() / MRC_PER_RC;
    let r = tau_exact.millicoins() % MRC_PER_RC;
    let rounded = match r.cmp(&(MRC_PER_RC / 2)) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    };
    Amount::rc(rounded)
}

/// Price of one submission: ρ review coins plus the tax.
pub fn submission_cost(params: &PricingParams) -> Amount {
    Amount::rc(params.rho as i64) + params.tau
}

/// What all n submissions cost their authors in total.
pub fn total_outlay(params: &PricingParams) -> Amount {
    submission_cost(params) * params.n as i64
}
