//! Append-only, hash-chained, double-entry transaction log.
//!
//! Every value movement in the economy is a [`Transaction`]: a list of
//! per-account deltas that must sum to zero (except [`TxKind::Mint`],
//! which creates supply and may only credit treasuries). Transactions
//! are chained by SHA-256 over a canonical byte encoding, so any
//! mutation of a sealed record is detectable by [`verify_chain`].
//!
//! Persistence is one JSON object per line with a fixed field order
//! (`seq`, `kind`, `entries`, `memo`, `prev_hash`, `hash`), hashes
//! hex-encoded lowercase.

use crate::amount::Amount;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Digest of the canonical transaction bytes.
pub type Hash = [u8; 32];

/// prev_hash of the first transaction in a chain.
pub const GENESIS_HASH: Hash = [0u8; 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccountRole {
    Researcher,
    ConferenceTreasury,
    ConferenceEscrow,
    Sponsor,
}

/// Opaque account identifier, unique within a ledger.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> AccountId {
        AccountId(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    fn from(s: &str) -> AccountId {
        AccountId(s.to_string())
    }
}

impl From<String> for AccountId {
    fn from(s: String) -> AccountId {
        AccountId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TxKind {
    Mint,
    Transfer,
    SubmissionCharge,
    ReviewPayment,
    TaxDisbursement,
    ChallengeStake,
    ChallengeRefund,
    ChallengePenalty,
    LoanIssue,
    LoanRepayment,
    DefaultWriteOff,
}

impl TxKind {
    /// Tag byte used in the canonical hash input.
    pub fn tag(self) -> u8 {
        match self {
            TxKind::Mint => 0,
            TxKind::Transfer => 1,
            TxKind::SubmissionCharge => 2,
            TxKind::ReviewPayment => 3,
            TxKind::TaxDisbursement => 4,
            TxKind::ChallengeStake => 5,
            TxKind::ChallengeRefund => 6,
            TxKind::ChallengePenalty => 7,
            TxKind::LoanIssue => 8,
            TxKind::LoanRepayment => 9,
            TxKind::DefaultWriteOff => 10,
        }
    }
}

/// Optional workflow references attached to a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Memo {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub review: Option<String>,
}

impl Memo {
    pub fn conference(id: impl Into<String>) -> Memo {
        Memo {
            conference: Some(id.into()),
            ..Memo::default()
        }
    }

    pub fn paper(conf: impl Into<String>, paper: impl Into<String>) -> Memo {
        Memo {
            conference: Some(conf.into()),
            paper: Some(paper.into()),
            ..Memo::default()
        }
    }

    pub fn review(
        conf: impl Into<String>,
        paper: impl Into<String>,
        review: impl Into<String>,
    ) -> Memo {
        Memo {
            conference: Some(conf.into()),
            paper: Some(paper.into()),
            review: Some(review.into()),
        }
    }

    /// Canonical byte rendering hashed into the chain.
    fn canonical_bytes(&self) -> Vec<u8> {
        let mut parts = Vec::new();
        if let Some(c) = &self.conference {
            parts.push(format!("c={c}"));
        }
        if let Some(p) = &self.paper {
            parts.push(format!("p={p}"));
        }
        if let Some(r) = &self.review {
            parts.push(format!("r={r}"));
        }
        parts.join("|").into_bytes()
    }
}

/// One signed per-account delta inside a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub account: AccountId,
    pub delta: Amount,
}

impl Entry {
    pub fn new(account: impl Into<AccountId>, delta: Amount) -> Entry {
        Entry {
            account: account.into(),
            delta,
        }
    }
}

fn serialize_hash<S: serde::Serializer>(h: &Hash, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(h))
}

fn deserialize_hash<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Hash, D::Error> {
    let s = String::deserialize(d)?;
    // Lowercase-only: the wire form is canonical, so a case change is
    // tampering, not an alternate spelling.
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(serde::de::Error::custom("digest must be lowercase hex"));
    }
    let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
    bytes
        .try_into()
        .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
}

/// A sealed ledger record. Field order here is the wire order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub seq: u64,
    pub kind: TxKind,
    pub entries: Vec<Entry>,
    pub memo: Memo,
    #[serde(serialize_with = "serialize_hash", deserialize_with = "deserialize_hash")]
    pub prev_hash: Hash,
    #[serde(serialize_with = "serialize_hash", deserialize_with = "deserialize_hash")]
    pub hash: Hash,
}

impl Transaction {
    /// Canonical hash input:
    /// `seq ‖ kind-tag ‖ count ‖ (id-len, id-bytes, delta i64 BE)* ‖ memo-len ‖ memo ‖ prev_hash`,
    /// lengths and counts as u32 BE, seq as u64 BE.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64 + self.entries.len() * 32);
        buf.extend_from_slice(&self.seq.to_be_bytes());
        buf.push(self.kind.tag());
        buf.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        for e in &self.entries {
            let id = e.account.as_str().as_bytes();
            buf.extend_from_slice(&(id.len() as u32).to_be_bytes());
            buf.extend_from_slice(id);
            buf.extend_from_slice(&e.delta.millicoins().to_be_bytes());
        }
        let memo = self.memo.canonical_bytes();
        buf.extend_from_slice(&(memo.len() as u32).to_be_bytes());
        buf.extend_from_slice(&memo);
        buf.extend_from_slice(&self.prev_hash);
        buf
    }

    pub fn compute_hash(&self) -> Hash {
        Sha256::digest(self.canonical_bytes()).into()
    }

    /// Net delta summed over all entries (zero for every non-mint kind).
    pub fn net(&self) -> Amount {
        self.entries.iter().map(|e| e.delta).sum()
    }
}

/// Unsealed transaction data handed to [`Ledger::append`].
#[derive(Debug, Clone)]
pub struct TxRequest {
    pub kind: TxKind,
    pub entries: Vec<Entry>,
    pub memo: Memo,
}

impl TxRequest {
    pub fn new(kind: TxKind, entries: Vec<Entry>, memo: Memo) -> TxRequest {
        TxRequest {
            kind,
            entries,
            memo,
        }
    }

    /// Two-entry request moving `amount` from one account to another.
    pub fn movement(
        kind: TxKind,
        from: impl Into<AccountId>,
        to: impl Into<AccountId>,
        amount: Amount,
        memo: Memo,
    ) -> TxRequest {
        TxRequest::new(
            kind,
            vec![Entry::new(from, -amount), Entry::new(to, amount)],
            memo,
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("unknown account {0}")]
    UnknownAccount(AccountId),
    #[error("account {0} already exists")]
    DuplicateAccount(AccountId),
    #[error("{kind:?} entries must sum to zero, got {net}")]
    NonZeroSum { kind: TxKind, net: Amount },
    #[error("mint must create a positive amount")]
    NonPositiveMint,
    #[error("mint may only credit treasury accounts, {0} is not one")]
    MintToNonTreasury(AccountId),
    #[error("insufficient funds: {account} would drop to {resulting}")]
    InsufficientFunds {
        account: AccountId,
        resulting: Amount,
    },
    #[error("log failed verification: {0}")]
    InvalidLog(ChainFault),
}

/// Why a chain failed verification, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainFault {
    pub seq: u64,
    pub reason: String,
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seq {}: {}", self.seq, self.reason)
    }
}

/// Outcome of [`verify_chain`]; failures are values, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Ok { transactions: u64 },
    Failed(ChainFault),
}

impl VerifyOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, VerifyOutcome::Ok { .. })
    }
}

/// Balances and supply derived from a log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerState {
    pub balances: BTreeMap<AccountId, Amount>,
    #[serde(serialize_with = "serialize_hash", deserialize_with = "deserialize_hash")]
    pub head_hash: Hash,
    pub total_minted: Amount,
}

impl Default for LedgerState {
    fn default() -> LedgerState {
        LedgerState {
            balances: BTreeMap::new(),
            head_hash: GENESIS_HASH,
            total_minted: Amount::ZERO,
        }
    }
}

/// Single-writer ledger: account registry, live balances, and the sealed log.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    roles: BTreeMap<AccountId, AccountRole>,
    state: LedgerState,
    log: Vec<Transaction>,
}

impl Ledger {
    pub fn new() -> Ledger {
        Ledger::default()
    }

    pub fn create_account(
        &mut self,
        id: impl Into<AccountId>,
        role: AccountRole,
    ) -> Result<AccountId, LedgerError> {
        let id = id.into();
        if self.roles.contains_key(&id) {
            return Err(LedgerError::DuplicateAccount(id));
        }
        self.roles.insert(id.clone(), role);
        self.state.balances.insert(id.clone(), Amount::ZERO);
        Ok(id)
    }

    pub fn role(&self, id: &AccountId) -> Option<AccountRole> {
        self.roles.get(id).copied()
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&AccountId, AccountRole)> {
        self.roles.iter().map(|(id, r)| (id, *r))
    }

    pub fn balance(&self, id: &AccountId) -> Result<Amount, LedgerError> {
        self.state
            .balances
            .get(id)
            .copied()
            .ok_or_else(|| LedgerError::UnknownAccount(id.clone()))
    }

    pub fn total_minted(&self) -> Amount {
        self.state.total_minted
    }

    pub fn head_hash(&self) -> Hash {
        self.state.head_hash
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn log(&self) -> &[Transaction] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// Validate, seal, and apply one transaction. Rejected requests leave
    /// the ledger untouched.
    pub fn append(&mut self, req: TxRequest) -> Result<&Transaction, LedgerError> {
        for e in &req.entries {
            if !self.roles.contains_key(&e.account) {
                return Err(LedgerError::UnknownAccount(e.account.clone()));
            }
        }
        let net: Amount = req.entries.iter().map(|e| e.delta).sum();
        match req.kind {
            TxKind::Mint => {
                if net <= Amount::ZERO {
                    return Err(LedgerError::NonPositiveMint);
                }
                for e in &req.entries {
                    if self.roles[&e.account] != AccountRole::ConferenceTreasury {
                        return Err(LedgerError::MintToNonTreasury(e.account.clone()));
                    }
                }
            }
            _ => {
                if net != Amount::ZERO {
                    return Err(LedgerError::NonZeroSum {
                        kind: req.kind,
                        net,
                    });
                }
            }
        }
        // Net effect per account must leave the balance non-negative.
        let mut net_by_account: BTreeMap<&AccountId, Amount> = BTreeMap::new();
        for e in &req.entries {
            *net_by_account.entry(&e.account).or_default() += e.delta;
        }
        for (account, delta) in &net_by_account {
            let resulting = self.state.balances[*account] + *delta;
            if resulting.is_negative() {
                return Err(LedgerError::InsufficientFunds {
                    account: (*account).clone(),
                    resulting,
                });
            }
        }

        let mut tx = Transaction {
            seq: self.log.len() as u64,
            kind: req.kind,
            entries: req.entries,
            memo: req.memo,
            prev_hash: self.state.head_hash,
            hash: GENESIS_HASH,
        };
        tx.hash = tx.compute_hash();

        for e in &tx.entries {
            *self.state.balances.get_mut(&e.account).unwrap() += e.delta;
        }
        if tx.kind == TxKind::Mint {
            self.state.total_minted += net;
        }
        self.state.head_hash = tx.hash;
        self.log.push(tx);
        Ok(self.log.last().unwrap())
    }

    /// Mint new supply into a treasury account.
    pub fn mint(
        &mut self,
        treasury: impl Into<AccountId>,
        amount: Amount,
        memo: Memo,
    ) -> Result<&Transaction, LedgerError> {
        let treasury = treasury.into();
        self.append(TxRequest::new(
            TxKind::Mint,
            vec![Entry::new(treasury, amount)],
            memo,
        ))
    }

    pub fn transfer(
        &mut self,
        from: impl Into<AccountId>,
        to: impl Into<AccountId>,
        amount: Amount,
        memo: Memo,
    ) -> Result<&Transaction, LedgerError> {
        self.append(TxRequest::movement(TxKind::Transfer, from, to, amount, memo))
    }
}

/// Check hash chain integrity, seq continuity, per-kind conservation,
/// and balance non-negativity over a standalone log.
pub fn verify_chain(log: &[Transaction]) -> VerifyOutcome {
    let mut prev = GENESIS_HASH;
    let mut balances: BTreeMap<&AccountId, Amount> = BTreeMap::new();
    for (i, tx) in log.iter().enumerate() {
        let fail = |reason: String| VerifyOutcome::Failed(ChainFault { seq: tx.seq, reason });
        if tx.seq != i as u64 {
            return fail(format!("expected seq {i}, found {}", tx.seq));
        }
        if tx.prev_hash != prev {
            return fail("prev_hash does not match preceding transaction".into());
        }
        if tx.hash != tx.compute_hash() {
            return fail("stored hash does not match canonical recomputation".into());
        }
        let net = tx.net();
        match tx.kind {
            TxKind::Mint => {
                if net <= Amount::ZERO {
                    return fail("mint must create a positive amount".into());
                }
            }
            _ => {
                if net != Amount::ZERO {
                    return fail(format!("non-mint entries sum to {net}"));
                }
            }
        }
        for e in &tx.entries {
            *balances.entry(&e.account).or_default() += e.delta;
        }
        for (account, bal) in &balances {
            if bal.is_negative() {
                return fail(format!("balance of {account} drops to {bal}"));
            }
        }
        prev = tx.hash;
    }
    VerifyOutcome::Ok {
        transactions: log.len() as u64,
    }
}

/// Deterministically rebuild [`LedgerState`] from a verified log.
pub fn replay(log: &[Transaction]) -> Result<LedgerState, LedgerError> {
    match verify_chain(log) {
        VerifyOutcome::Ok { .. } => {}
        VerifyOutcome::Failed(fault) => return Err(LedgerError::InvalidLog(fault)),
    }
    let mut state = LedgerState::default();
    for tx in log {
        for e in &tx.entries {
            *state.balances.entry(e.account.clone()).or_default() += e.delta;
        }
        if tx.kind == TxKind::Mint {
            state.total_minted += tx.net();
        }
        state.head_hash = tx.hash;
    }
    Ok(state)
}

/// Serialize a log as line-delimited JSON (one transaction per line).
pub fn write_jsonl<W: std::io::Write>(log: &[Transaction], mut out: W) -> std::io::Result<()> {
    for tx in log {
        serde_json::to_writer(&mut out, tx)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a line-delimited JSON log. The chain is not verified here.
pub fn read_jsonl(input: &str) -> Result<Vec<Transaction>, serde_json::Error> {
    input
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
