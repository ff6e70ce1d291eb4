//! Quota apportionment of an exact millicoin total among recipients.
//!
//! Shares are floored proportional quotas; the sub-millicoin residue is
//! not handed out (equal claimants would otherwise receive unequal
//! coins) and is returned to the caller, which credits it to the
//! treasury. Residue is always smaller than the number of recipients.

use crate::amount::Amount;

/// Result of splitting a total by weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Apportionment {
    pub shares: Vec<Amount>,
    pub residue: Amount,
}

/// Split `total` across `weights` proportionally, floored per share.
///
/// Zero-weight recipients get nothing. Panics if all weights are zero
/// while `total` is positive, or if `total` is negative.
pub fn apportion(total: Amount, weights: &[u64]) -> Apportionment {
    assert!(!total.is_negative(), "cannot apportion a negative total");
    let weight_sum: u64 = weights.iter().sum();
    if total == Amount::ZERO || weights.is_empty() {
        return Apportionment {
            shares: vec![Amount::ZERO; weights.len()],
            residue: total,
        };
    }
    assert!(weight_sum > 0, "cannot apportion over all-zero weights");
    let total_mrc = total.millicoins() as i128;
    let shares: Vec<Amount> = weights
        .iter()
        .map(|&w| Amount::mrc((total_mrc * w as i128 / weight_sum as i128) as i64))
        .collect();
    let handed_out: Amount = shares.iter().copied().sum();
    Apportionment {
        shares,
        residue: total - handed_out,
    }
}

/// Even split among `ways` recipients.
pub fn split_evenly(total: Amount, ways: u32) -> Apportionment {
    apportion(total, &vec![1u64; ways as usize])
}
