//! Property-based invariants over the ledger, apportionment, pricing,
//! and inequality metrics.

use proptest::prelude::*;
use rc_core::*;

#[derive(Debug, Clone)]
enum Op {
    Mint(i64),
    Transfer { from: u8, to: u8, amount: i64 },
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (1i64..1_000_000).prop_map(Op::Mint),
        (0u8..10, 0u8..10, 1i64..500_000).prop_map(|(from, to, amount)| Op::Transfer {
            from,
            to,
            amount
        }),
    ]
}

fn apply_ops(ops: &[Op]) -> Ledger {
    let mut ledger = Ledger::new();
    let treasury = ledger
        .create_account("prop:treasury", AccountRole::ConferenceTreasury)
        .unwrap();
    let accounts: Vec<AccountId> = (0..10)
        .map(|i| {
            ledger
                .create_account(format!("prop:agent-{i}"), AccountRole::Researcher)
                .unwrap()
        })
        .collect();
    for op in ops {
        match op {
            Op::Mint(amount) => {
                ledger
                    .mint(treasury.clone(), Amount::mrc(*amount), Memo::default())
                    .unwrap();
            }
            Op::Transfer { from, to, amount } => {
                let from = if *from == 0 {
                    treasury.clone()
                } else {
                    accounts[*from as usize % accounts.len()].clone()
                };
                let to = accounts[*to as usize % accounts.len()].clone();
                if from == to {
                    continue;
                }
                // Overdrafts must be rejected atomically; success must conserve.
                let _ = ledger.transfer(from, to, Amount::mrc(*amount), Memo::default());
            }
        }
    }
    ledger
}

proptest! {
    #[test]
    fn conservation_under_random_ops(ops in proptest::collection::vec(op_strategy(), 1..200)) {
        let ledger = apply_ops(&ops);
        let total: Amount = ledger.state().balances.values().copied().sum();
        prop_assert_eq!(total, ledger.total_minted());
        prop_assert!(ledger.state().balances.values().all(|b| !b.is_negative()));
    }

    #[test]
    fn replay_of_serialized_log_is_identity(ops in proptest::collection::vec(op_strategy(), 1..100)) {
        let ledger = apply_ops(&ops);
        let mut wire = Vec::new();
        write_jsonl(ledger.log(), &mut wire).unwrap();
        let parsed = read_jsonl(&String::from_utf8(wire).unwrap()).unwrap();
        prop_assert_eq!(&parsed[..], ledger.log());
        prop_assert!(verify_chain(&parsed).is_ok());
        let replayed = replay(&parsed).unwrap();
        // Account creation is not a logged event, so replay knows only the
        // accounts that moved money; those must match the live state exactly.
        prop_assert_eq!(replayed.total_minted, ledger.total_minted());
        prop_assert_eq!(replayed.head_hash, ledger.state().head_hash);
        for (account, balance) in &replayed.balances {
            prop_assert_eq!(Some(balance), ledger.state().balances.get(account));
        }
        for (account, balance) in &ledger.state().balances {
            if *balance != Amount::ZERO {
                prop_assert_eq!(Some(balance), replayed.balances.get(account));
            }
        }
    }

    #[test]
    fn apportion_conserves_and_bounds_residue(
        total in 0i64..10_000_000,
        weights in proptest::collection::vec(0u64..1000, 1..50),
    ) {
        prop_assume!(weights.iter().sum::<u64>() > 0);
        let split = apportion(Amount::mrc(total), &weights);
        let handed_out: Amount = split.shares.iter().copied().sum();
        prop_assert_eq!(handed_out + split.residue, Amount::mrc(total));
        prop_assert!(!split.residue.is_negative());
        prop_assert!(split.residue.millicoins() <= weights.len() as i64);
        for (share, weight) in split.shares.iter().zip(&weights) {
            prop_assert!(!share.is_negative());
            if *weight == 0 {
                prop_assert_eq!(*share, Amount::ZERO);
            }
        }
    }

    #[test]
    fn round_tau_is_within_half_a_coin(tau in 0i64..10_000_000) {
        let rounded = round_tau(Amount::mrc(tau));
        prop_assert_eq!(rounded.millicoins() % 1000, 0);
        prop_assert!((rounded.millicoins() - tau).abs() <= 500);
    }

    #[test]
    fn gini_is_bounded(balances in proptest::collection::vec(0i64..1_000_000, 1..100)) {
        let balances: Vec<Amount> = balances.into_iter().map(Amount::mrc).collect();
        let g = compute_gini(&balances).unwrap();
        let n = balances.len() as f64;
        prop_assert!(g >= -1e-12);
        prop_assert!(g <= (n - 1.0) / n + 1e-12);
    }

    #[test]
    fn submission_cost_scales_linearly(rho in 1u32..20, tau in 0i64..10_000, n in 0u64..10_000) {
        let params = PricingParams::new(rho, Amount::mrc(tau), n);
        prop_assert_eq!(
            total_outlay(&params),
            submission_cost(&params) * n as i64
        );
        prop_assert_eq!(
            submission_cost(&params),
            Amount::rc(rho as i64) + Amount::mrc(tau)
        );
    }
}
