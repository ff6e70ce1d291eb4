//! Conference lifecycle state machine.
//!
//! A conference turns review-process events into ledger transactions:
//! submission charges into escrow, 1 RC per approved review out of
//! escrow, challenge stakes and penalties, loans against a promise to
//! review, and the end-of-cycle settlement that disburses the tax pool
//! and closes escrow to zero.
//!
//! Money flow summary for one paper priced at ρ + τ:
//!   author -> escrow (charge), escrow -> reviewer (ρ payments of 1 RC),
//!   escrow -> role rosters and treasury (settlement of the τ pool).
//! Loan-funded papers route treasury -> author -> escrow at submission
//! and redirect the borrower's own review pay escrow -> treasury until
//! the loan is repaid. Withdrawn loan papers return their unspent
//! review budget to the treasury; the unrecoverable remainder is
//! written off against the default-reserve component of τ.

use crate::amount::Amount;
use crate::apportion::split_evenly;
use crate::ledger::{
    AccountId, AccountRole, Entry, Ledger, LedgerError, Memo, TxKind, TxRequest,
};
use crate::tax::{submission_cost, PricingParams, TaxSchedule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "-{}"), self.0)
            }
        }
    };
}

id_type!(PaperId, "paper");
id_type!(ReviewId, "review");
id_type!(ChallengeId, "challenge");
id_type!(LoanId, "loan");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Announced,
    SubmissionsOpen,
    ReviewInProgress,
    DecisionAndChallenge,
    Settlement,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PaperStatus {
    Submitted,
    UnderReview,
    Decided,
    Challenged,
    Withdrawn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReviewStatus {
    PendingApproval,
    RevisionRequested,
    Approved,
    Paid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChallengeOutcome {
    Pending,
    Upheld,
    Denied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoanStatus {
    Open,
    Repaid,
    Defaulted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: PaperId,
    pub corresponding_author: AccountId,
    pub status: PaperStatus,
    pub assigned_reviewers: Vec<AccountId>,
    pub funded_by_loan: Option<LoanId>,
    pub decision: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: ReviewId,
    pub paper: PaperId,
    pub reviewer: AccountId,
    pub status: ReviewStatus,
    pub revision_count: u32,
    /// Solicited beyond the paper's ρ slots (hard paper, challenge, or
    /// no-show replacement); paid from the extra-review tax component.
    pub is_extra: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub id: ChallengeId,
    pub paper: PaperId,
    pub challenger: AccountId,
    pub challenged_reviews: Vec<ReviewId>,
    pub stake: Amount,
    pub extra_reviews: Vec<ReviewId>,
    pub outcome: ChallengeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loan {
    pub id: LoanId,
    pub borrower: AccountId,
    pub principal: Amount,
    pub outstanding: Amount,
    pub status: LoanStatus,
    /// Unrecoverable remainder charged to the default reserve.
    pub written_off: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConferenceConfig {
    pub conference_id: String,
    pub rho: u32,
    /// Per-paper tax in mRC (exact or rounded, the conference's choice).
    pub tau: Amount,
    pub tax_schedule: TaxSchedule,
    pub loans_enabled: bool,
    /// Accounts paid for each schedule role at settlement.
    pub role_rosters: BTreeMap<String, Vec<AccountId>>,
}

impl ConferenceConfig {
    /// Strictly fewer than ρ reviews are challengeable.
    pub fn max_challenge_count(&self) -> u32 {
        (self.rho - 1).min(self.rho / 2 + 1)
    }

    pub fn submission_cost(&self) -> Amount {
        submission_cost(&PricingParams::new(self.rho, self.tau, 0))
    }

    fn validate(&self) -> Result<()> {
        if self.rho < 1 {
            return Err(ConferenceError::InvalidConfig("rho must be at least 1".into()));
        }
        if self.tau.is_negative() {
            return Err(ConferenceError::InvalidConfig("tau must be non-negative".into()));
        }
        if !self.tax_schedule.is_valid() {
            return Err(ConferenceError::InvalidConfig("invalid tax schedule".into()));
        }
        Ok(())
    }
}

/// One settlement payout line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disbursement {
    pub role: String,
    pub recipient: AccountId,
    pub amount: Amount,
}

/// Human-readable record of how the τ pool was closed out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub conference_id: String,
    pub papers_submitted: u64,
    pub tau: Amount,
    pub escrow_at_settlement: Amount,
    pub disbursements: Vec<Disbursement>,
    /// Drawn from the treasury when the collected tax fell short of the
    /// role payroll (under-priced τ).
    pub treasury_topup: Amount,
    /// Reserves, residues, and forfeited stakes returned to the treasury.
    pub treasury_sweep: Amount,
    pub default_losses: Amount,
    pub default_reserve_accrued: Amount,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConferenceError {
    #[error("operation not allowed in phase {actual:?} (requires {expected:?})")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("invalid conference config: {0}")]
    InvalidConfig(String),
    #[error("loans are disabled for this conference")]
    LoansDisabled,
    #[error("reviewer set includes an author of the paper")]
    ConflictOfInterest,
    #[error("expected {expected} reviewers, got {got}")]
    WrongCount { expected: u32, got: u32 },
    #[error("account is not assigned to review this paper")]
    NotAssigned,
    #[error("review was already approved")]
    AlreadyApproved,
    #[error("record is not in the required status for this operation")]
    WrongStatus,
    #[error("escrow holds {held}, cannot cover {needed}")]
    EscrowShort { held: Amount, needed: Amount },
    #[error("cannot challenge {got} reviews, maximum is {max}")]
    TooManyChallenged { max: u32, got: u32 },
    #[error("challenged reviewer {0} cannot cover the penalty and no loan could be issued")]
    ReviewerInsolvent(AccountId),
    #[error("paper was not funded by a loan")]
    NotLoanFunded,
    #[error("{0} reviews or challenges are still unresolved")]
    UnresolvedReviews(usize),
    #[error("escrow holds {actual} but records explain {expected}")]
    EscrowMismatch { expected: Amount, actual: Amount },
    #[error("unknown paper {0}")]
    UnknownPaper(PaperId),
    #[error("unknown review {0}")]
    UnknownReview(ReviewId),
    #[error("unknown challenge {0}")]
    UnknownChallenge(ChallengeId),
    #[error("unknown loan {0}")]
    UnknownLoan(LoanId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

type Result<T> = std::result::Result<T, ConferenceError>;

/// Extra-review solicitation not yet delivered.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ExtraAssignment {
    paper: PaperId,
    reviewer: AccountId,
    challenge: Option<ChallengeId>,
}

/// One conference cycle bound to a shared ledger.
///
/// All mutations are single-threaded; every monetary effect goes
/// through the ledger's serialized appender.
#[derive(Debug, Clone)]
pub struct Conference {
    config: ConferenceConfig,
    phase: Phase,
    escrow: AccountId,
    treasury: AccountId,
    papers: Vec<Paper>,
    reviews: Vec<Review>,
    challenges: Vec<Challenge>,
    loans: Vec<Loan>,
    extra_assignments: Vec<ExtraAssignment>,
    // Settlement bookkeeping.
    extra_paid: Amount,
    denied_stakes: Amount,
    upheld_penalties: Amount,
    default_losses: Amount,
}

impl Conference {
    /// Bind a conference to the ledger, creating (or reusing) its escrow
    /// and treasury accounts.
    pub fn new(config: ConferenceConfig, ledger: &mut Ledger) -> Result<Conference> {
        config.validate()?;
        let escrow = AccountId::new(format!("{}:escrow", config.conference_id));
        let treasury = AccountId::new(format!("{}:treasury", config.conference_id));
        Self::with_accounts(config, treasury, escrow, ledger)
    }

    /// Bind to explicit treasury/escrow accounts (shared across cycles).
    pub fn with_accounts(
        config: ConferenceConfig,
        treasury: AccountId,
        escrow: AccountId,
        ledger: &mut Ledger,
    ) -> Result<Conference> {
        config.validate()?;
        ensure_account(ledger, &treasury, AccountRole::ConferenceTreasury)?;
        ensure_account(ledger, &escrow, AccountRole::ConferenceEscrow)?;
        Ok(Conference {
            config,
            phase: Phase::Announced,
            escrow,
            treasury,
            papers: Vec::new(),
            reviews: Vec::new(),
            challenges: Vec::new(),
            loans: Vec::new(),
            extra_assignments: Vec::new(),
            extra_paid: Amount::ZERO,
            denied_stakes: Amount::ZERO,
            upheld_penalties: Amount::ZERO,
            default_losses: Amount::ZERO,
        })
    }

    pub fn config(&self) -> &ConferenceConfig {
        &self.config
    }
    pub fn phase(&self) -> Phase {
        self.phase
    }
    pub fn escrow_account(&self) -> &AccountId {
        &self.escrow
    }
    pub fn treasury_account(&self) -> &AccountId {
        &self.treasury
    }
    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }
    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }
    pub fn challenges(&self) -> &[Challenge] {
        &self.challenges
    }
    pub fn loans(&self) -> &[Loan] {
        &self.loans
    }
    pub fn submission_count(&self) -> u64 {
        self.papers.len() as u64
    }

    pub fn paper(&self, id: PaperId) -> Result<&Paper> {
        self.papers
            .get(id.0 as usize)
            .ok_or(ConferenceError::UnknownPaper(id))
    }
    pub fn review(&self, id: ReviewId) -> Result<&Review> {
        self.reviews
            .get(id.0 as usize)
            .ok_or(ConferenceError::UnknownReview(id))
    }
    pub fn challenge(&self, id: ChallengeId) -> Result<&Challenge> {
        self.challenges
            .get(id.0 as usize)
            .ok_or(ConferenceError::UnknownChallenge(id))
    }
    pub fn loan(&self, id: LoanId) -> Result<&Loan> {
        self.loans
            .get(id.0 as usize)
            .ok_or(ConferenceError::UnknownLoan(id))
    }

    fn require_phase(&self, expected: Phase) -> Result<()> {
        if self.phase != expected {
            return Err(ConferenceError::WrongPhase {
                expected,
                actual: self.phase,
            });
        }
        Ok(())
    }

    fn require_phase_in(&self, allowed: &[Phase]) -> Result<()> {
        if !allowed.contains(&self.phase) {
            return Err(ConferenceError::WrongPhase {
                expected: allowed[0],
                actual: self.phase,
            });
        }
        Ok(())
    }

    // ---- Phase transitions (strictly forward) ----

    pub fn open_submissions(&mut self) -> Result<()> {
        self.require_phase(Phase::Announced)?;
        self.phase = Phase::SubmissionsOpen;
        Ok(())
    }

    pub fn close_submissions(&mut self) -> Result<()> {
        self.require_phase(Phase::SubmissionsOpen)?;
        self.phase = Phase::ReviewInProgress;
        Ok(())
    }

    pub fn begin_decisions(&mut self) -> Result<()> {
        self.require_phase(Phase::ReviewInProgress)?;
        self.phase = Phase::DecisionAndChallenge;
        Ok(())
    }

    pub fn begin_settlement(&mut self) -> Result<()> {
        self.require_phase(Phase::DecisionAndChallenge)?;
        self.phase = Phase::Settlement;
        Ok(())
    }

    // ---- Submission ----

    /// Charge the corresponding author ρ + τ into escrow, optionally
    /// funded by a loan from the treasury.
    pub fn submit_paper(
        &mut self,
        ledger: &mut Ledger,
        author: AccountId,
        use_loan: bool,
    ) -> Result<PaperId> {
        self.require_phase(Phase::SubmissionsOpen)?;
        let cost = self.config.submission_cost();
        let paper_id = PaperId(self.papers.len() as u32);
        let memo = Memo::paper(self.config.conference_id.clone(), paper_id.to_string());

        let loan_id = if use_loan {
            if !self.config.loans_enabled {
                return Err(ConferenceError::LoansDisabled);
            }
            let loan_id = LoanId(self.loans.len() as u32);
            ledger.append(TxRequest::movement(
                TxKind::LoanIssue,
                self.treasury.clone(),
                author.clone(),
                cost,
                memo.clone(),
            ))?;
            self.loans.push(Loan {
                id: loan_id,
                borrower: author.clone(),
                principal: cost,
                outstanding: cost,
                status: LoanStatus::Open,
                written_off: Amount::ZERO,
            });
            Some(loan_id)
        } else {
            None
        };

        ledger.append(TxRequest::movement(
            TxKind::SubmissionCharge,
            author.clone(),
            self.escrow.clone(),
            cost,
            memo,
        ))?;

        self.papers.push(Paper {
            id: paper_id,
            corresponding_author: author,
            status: PaperStatus::Submitted,
            assigned_reviewers: Vec::new(),
            funded_by_loan: loan_id,
            decision: None,
        });
        Ok(paper_id)
    }

    /// Collaborators sharing the submission cost: a plain transfer.
    pub fn transfer_contribution(
        &self,
        ledger: &mut Ledger,
        from: AccountId,
        to: AccountId,
        amount: Amount,
    ) -> Result<u64> {
        let memo = Memo::conference(self.config.conference_id.clone());
        let tx = ledger.transfer(from, to, amount, memo)?;
        Ok(tx.seq)
    }

    // ---- Reviewing ----

    /// Hire exactly ρ distinct reviewers, none of them the author.
    pub fn assign_reviewers(
        &mut self,
        paper_id: PaperId,
        reviewers: Vec<AccountId>,
    ) -> Result<()> {
        self.require_phase_in(&[Phase::SubmissionsOpen, Phase::ReviewInProgress])?;
        let rho = self.config.rho;
        let paper = self
            .papers
            .get_mut(paper_id.0 as usize)
            .ok_or(ConferenceError::UnknownPaper(paper_id))?;
        let mut distinct = reviewers.clone();
        distinct.sort();
        distinct.dedup();
        if distinct.len() != rho as usize {
            return Err(ConferenceError::WrongCount {
                expected: rho,
                got: distinct.len() as u32,
            });
        }
        if reviewers.contains(&paper.corresponding_author) {
            return Err(ConferenceError::ConflictOfInterest);
        }
        paper.assigned_reviewers = reviewers;
        paper.status = PaperStatus::UnderReview;
        Ok(())
    }

    /// Solicit one review beyond the paper's ρ slots (hard paper, challenge
    /// follow-up, or a no-show replacement).
    pub fn solicit_extra_review(
        &mut self,
        paper_id: PaperId,
        reviewer: AccountId,
        challenge: Option<ChallengeId>,
    ) -> Result<()> {
        self.require_phase_in(&[Phase::ReviewInProgress, Phase::DecisionAndChallenge])?;
        let paper = self.paper(paper_id)?;
        if reviewer == paper.corresponding_author {
            return Err(ConferenceError::ConflictOfInterest);
        }
        if let Some(ch) = challenge {
            self.challenge(ch)?;
        }
        self.extra_assignments.push(ExtraAssignment {
            paper: paper_id,
            reviewer,
            challenge,
        });
        Ok(())
    }

    /// A hired reviewer delivers a review (or a revision of one).
    pub fn submit_review(&mut self, reviewer: AccountId, paper_id: PaperId) -> Result<ReviewId> {
        self.require_phase_in(&[Phase::ReviewInProgress, Phase::DecisionAndChallenge])?;
        let paper = self.paper(paper_id)?;
        let slot_assigned = paper.assigned_reviewers.contains(&reviewer);
        let extra_slot = self
            .extra_assignments
            .iter()
            .position(|a| a.paper == paper_id && a.reviewer == reviewer);
        if !slot_assigned && extra_slot.is_none() {
            return Err(ConferenceError::NotAssigned);
        }

        if let Some(existing) = self
            .reviews
            .iter_mut()
            .find(|r| r.paper == paper_id && r.reviewer == reviewer)
        {
            return match existing.status {
                ReviewStatus::RevisionRequested => {
                    existing.revision_count += 1;
                    existing.status = ReviewStatus::PendingApproval;
                    Ok(existing.id)
                }
                ReviewStatus::Approved | ReviewStatus::Paid => {
                    Err(ConferenceError::AlreadyApproved)
                }
                ReviewStatus::PendingApproval => Err(ConferenceError::WrongStatus),
            };
        }

        let is_extra = !slot_assigned;
        let review_id = ReviewId(self.reviews.len() as u32);
        if let Some(idx) = extra_slot {
            if !slot_assigned {
                if let Some(ch) = self.extra_assignments[idx].challenge {
                    self.challenges[ch.0 as usize].extra_reviews.push(review_id);
                }
            }
        }
        self.reviews.push(Review {
            id: review_id,
            paper: paper_id,
            reviewer,
            status: ReviewStatus::PendingApproval,
            revision_count: 0,
            is_extra,
        });
        Ok(review_id)
    }

    /// Editor sends a review back; no payment is made.
    pub fn request_revision(&mut self, review_id: ReviewId) -> Result<()> {
        let review = self
            .reviews
            .get_mut(review_id.0 as usize)
            .ok_or(ConferenceError::UnknownReview(review_id))?;
        if review.status != ReviewStatus::PendingApproval {
            return Err(ConferenceError::WrongStatus);
        }
        review.status = ReviewStatus::RevisionRequested;
        Ok(())
    }

    /// Approve a review and pay 1 RC from escrow. If the reviewer has an
    /// open loan, the payment is redirected to the treasury instead.
    pub fn approve_review(
        &mut self,
        ledger: &mut Ledger,
        review_id: ReviewId,
    ) -> Result<Vec<u64>> {
        self.require_phase_in(&[Phase::ReviewInProgress, Phase::DecisionAndChallenge])?;
        let review = self.review(review_id)?;
        if review.status != ReviewStatus::PendingApproval {
            return Err(ConferenceError::WrongStatus);
        }
        let pay = Amount::rc(1);
        let held = ledger.balance(&self.escrow)?;
        if held < pay {
            return Err(ConferenceError::EscrowShort { held, needed: pay });
        }
        let reviewer = review.reviewer.clone();
        let open_loan = self
            .loans
            .iter()
            .find(|l| l.borrower == reviewer && l.status == LoanStatus::Open)
            .map(|l| l.id);

        self.reviews[review_id.0 as usize].status = ReviewStatus::Approved;
        if let Some(loan_id) = open_loan {
            self.repay_loan_via_review(ledger, review_id, loan_id)
        } else {
            let review = &self.reviews[review_id.0 as usize];
            let memo = Memo::review(
                self.config.conference_id.clone(),
                review.paper.to_string(),
                review_id.to_string(),
            );
            let tx = ledger.append(TxRequest::movement(
                TxKind::ReviewPayment,
                self.escrow.clone(),
                reviewer,
                pay,
                memo,
            ))?;
            let seq = tx.seq;
            if review.is_extra {
                self.extra_paid += pay;
            }
            self.reviews[review_id.0 as usize].status = ReviewStatus::Paid;
            Ok(vec![seq])
        }
    }

    /// Redirect an approved review's 1 RC toward an open loan, splitting
    /// with the reviewer once less than a full coin is outstanding.
    pub fn repay_loan_via_review(
        &mut self,
        ledger: &mut Ledger,
        review_id: ReviewId,
        loan_id: LoanId,
    ) -> Result<Vec<u64>> {
        let review = self.review(review_id)?.clone();
        let loan = self.loan(loan_id)?.clone();
        if review.status != ReviewStatus::Approved
            || loan.status != LoanStatus::Open
            || loan.borrower != review.reviewer
        {
            return Err(ConferenceError::WrongStatus);
        }
        let pay = Amount::rc(1);
        let held = ledger.balance(&self.escrow)?;
        if held < pay {
            return Err(ConferenceError::EscrowShort { held, needed: pay });
        }
        let to_treasury = pay.min(loan.outstanding);
        let to_reviewer = pay - to_treasury;
        let memo = Memo::review(
            self.config.conference_id.clone(),
            review.paper.to_string(),
            review_id.to_string(),
        );
        let mut seqs = Vec::new();
        if to_treasury > Amount::ZERO {
            let tx = ledger.append(TxRequest::movement(
                TxKind::LoanRepayment,
                self.escrow.clone(),
                self.treasury.clone(),
                to_treasury,
                memo.clone(),
            ))?;
            seqs.push(tx.seq);
        }
        if to_reviewer > Amount::ZERO {
            let tx = ledger.append(TxRequest::movement(
                TxKind::ReviewPayment,
                self.escrow.clone(),
                review.reviewer.clone(),
                to_reviewer,
                memo,
            ))?;
            seqs.push(tx.seq);
        }
        if review.is_extra {
            self.extra_paid += pay;
        }
        let loan = &mut self.loans[loan_id.0 as usize];
        loan.outstanding -= to_treasury;
        if loan.outstanding == Amount::ZERO {
            loan.status = LoanStatus::Repaid;
        }
        self.reviews[review_id.0 as usize].status = ReviewStatus::Paid;
        Ok(seqs)
    }

    // ---- Decisions and challenges ----

    /// Record the (opaque) decision label for a paper.
    pub fn decide_paper(&mut self, paper_id: PaperId, decision: impl Into<String>) -> Result<()> {
        self.require_phase(Phase::DecisionAndChallenge)?;
        let paper = self
            .papers
            .get_mut(paper_id.0 as usize)
            .ok_or(ConferenceError::UnknownPaper(paper_id))?;
        if paper.status == PaperStatus::Withdrawn {
            return Err(ConferenceError::WrongStatus);
        }
        paper.status = PaperStatus::Decided;
        paper.decision = Some(decision.into());
        Ok(())
    }

    /// The author stakes 1 RC per challenged review.
    pub fn file_challenge(
        &mut self,
        ledger: &mut Ledger,
        challenger: AccountId,
        paper_id: PaperId,
        challenged_reviews: Vec<ReviewId>,
    ) -> Result<ChallengeId> {
        self.require_phase(Phase::DecisionAndChallenge)?;
        let max = self.config.max_challenge_count();
        let count = challenged_reviews.len() as u32;
        if count == 0 || count > max {
            return Err(ConferenceError::TooManyChallenged { max, got: count });
        }
        for &rid in &challenged_reviews {
            let review = self.review(rid)?;
            if review.paper != paper_id || review.status != ReviewStatus::Paid {
                return Err(ConferenceError::WrongStatus);
            }
        }
        let stake = Amount::rc(count as i64);
        let challenge_id = ChallengeId(self.challenges.len() as u32);
        let memo = Memo::paper(self.config.conference_id.clone(), paper_id.to_string());
        ledger.append(TxRequest::movement(
            TxKind::ChallengeStake,
            challenger.clone(),
            self.escrow.clone(),
            stake,
            memo,
        ))?;
        self.papers[paper_id.0 as usize].status = PaperStatus::Challenged;
        self.challenges.push(Challenge {
            id: challenge_id,
            paper: paper_id,
            challenger,
            challenged_reviews,
            stake,
            extra_reviews: Vec::new(),
            outcome: ChallengeOutcome::Pending,
        });
        Ok(challenge_id)
    }

    /// Upheld: refund the stake and deduct 1 RC from each challenged
    /// reviewer (as a penalty loan if they cannot pay). Denied: the stake
    /// stays in escrow and is swept to the treasury at settlement.
    pub fn resolve_challenge(
        &mut self,
        ledger: &mut Ledger,
        challenge_id: ChallengeId,
        upheld: bool,
    ) -> Result<Vec<u64>> {
        self.require_phase(Phase::DecisionAndChallenge)?;
        let challenge = self.challenge(challenge_id)?.clone();
        if challenge.outcome != ChallengeOutcome::Pending {
            return Err(ConferenceError::WrongStatus);
        }
        // Extra reviews must have been delivered and paid before ruling.
        if challenge.extra_reviews.is_empty()
            || !challenge
                .extra_reviews
                .iter()
                .all(|&rid| self.reviews[rid.0 as usize].status == ReviewStatus::Paid)
        {
            return Err(ConferenceError::WrongStatus);
        }

        let memo = Memo::paper(self.config.conference_id.clone(), challenge.paper.to_string());
        let mut seqs = Vec::new();
        if upheld {
            let tx = ledger.append(TxRequest::movement(
                TxKind::ChallengeRefund,
                self.escrow.clone(),
                challenge.challenger.clone(),
                challenge.stake,
                memo.clone(),
            ))?;
            seqs.push(tx.seq);
            let penalty = Amount::rc(1);
            for &rid in &challenge.challenged_reviews {
                let reviewer = self.reviews[rid.0 as usize].reviewer.clone();
                if ledger.balance(&reviewer)? < penalty {
                    // Penalty loan keeps the reviewer's balance non-negative.
                    let loan_id = LoanId(self.loans.len() as u32);
                    ledger
                        .append(TxRequest::movement(
                            TxKind::LoanIssue,
                            self.treasury.clone(),
                            reviewer.clone(),
                            penalty,
                            memo.clone(),
                        ))
                        .map_err(|e| match e {
                            LedgerError::InsufficientFunds { .. } => {
                                ConferenceError::ReviewerInsolvent(reviewer.clone())
                            }
                            other => ConferenceError::Ledger(other),
                        })?;
                    self.loans.push(Loan {
                        id: loan_id,
                        borrower: reviewer.clone(),
                        principal: penalty,
                        outstanding: penalty,
                        status: LoanStatus::Open,
                        written_off: Amount::ZERO,
                    });
                }
                let tx = ledger.append(TxRequest::movement(
                    TxKind::ChallengePenalty,
                    reviewer,
                    self.escrow.clone(),
                    penalty,
                    memo.clone(),
                ))?;
                seqs.push(tx.seq);
                self.upheld_penalties += penalty;
            }
            self.challenges[challenge_id.0 as usize].outcome = ChallengeOutcome::Upheld;
        } else {
            self.denied_stakes += challenge.stake;
            self.challenges[challenge_id.0 as usize].outcome = ChallengeOutcome::Denied;
        }
        self.papers[challenge.paper.0 as usize].status = PaperStatus::Decided;
        Ok(seqs)
    }

    // ---- Loans and defaults ----

    /// Withdraw a delinquent borrower's paper. The unspent review budget
    /// returns to the treasury; whatever the treasury cannot recover is
    /// written off against the default reserve. Already-paid reviews stay
    /// paid.
    pub fn withdraw_on_default(
        &mut self,
        ledger: &mut Ledger,
        paper_id: PaperId,
    ) -> Result<Vec<u64>> {
        self.require_phase_in(&[Phase::ReviewInProgress, Phase::DecisionAndChallenge])?;
        let paper = self.paper(paper_id)?;
        if paper.status == PaperStatus::Withdrawn {
            return Err(ConferenceError::WrongStatus);
        }
        let loan_id = paper.funded_by_loan.ok_or(ConferenceError::NotLoanFunded)?;

        let paid_slots = self
            .reviews
            .iter()
            .filter(|r| r.paper == paper_id && !r.is_extra && r.status == ReviewStatus::Paid)
            .count() as i64;
        let recovery = Amount::rc(self.config.rho as i64 - paid_slots);
        let memo = Memo::paper(self.config.conference_id.clone(), paper_id.to_string());
        let mut seqs = Vec::new();
        if recovery > Amount::ZERO {
            let tx = ledger.append(TxRequest::movement(
                TxKind::DefaultWriteOff,
                self.escrow.clone(),
                self.treasury.clone(),
                recovery,
                memo,
            ))?;
            seqs.push(tx.seq);
        }
        let loan = &mut self.loans[loan_id.0 as usize];
        let recovered = recovery.min(loan.outstanding);
        loan.outstanding -= recovered;
        loan.written_off = loan.outstanding;
        loan.outstanding = Amount::ZERO;
        loan.status = LoanStatus::Defaulted;
        self.default_losses += loan.written_off;
        self.papers[paper_id.0 as usize].status = PaperStatus::Withdrawn;
        Ok(seqs)
    }

    // ---- Settlement ----

    /// Expected escrow balance at settlement, reconstructed from the
    /// conference's own records. The τ pool plus challenge income, minus
    /// extra-review spend, plus budget for slots that were never paid.
    fn expected_escrow(&self) -> Amount {
        let n = self.submission_count() as i64;
        let unpaid_slots: i64 = self
            .papers
            .iter()
            .filter(|p| p.status != PaperStatus::Withdrawn)
            .map(|p| {
                let paid = self
                    .reviews
                    .iter()
                    .filter(|r| {
                        r.paper == p.id && !r.is_extra && r.status == ReviewStatus::Paid
                    })
                    .count() as i64;
                self.config.rho as i64 - paid
            })
            .sum();
        self.config.tau * n + self.denied_stakes + self.upheld_penalties - self.extra_paid
            + Amount::rc(unpaid_slots)
    }

    /// Disburse the τ pool: pay every role roster per_paper_rate × n
    /// (split evenly, floored, residue to treasury), draw a treasury
    /// top-up if the collected tax cannot cover payroll, then sweep the
    /// remaining reserves into the treasury and close.
    pub fn settle(&mut self, ledger: &mut Ledger) -> Result<SettlementReport> {
        self.require_phase(Phase::Settlement)?;

        let unresolved = self
            .reviews
            .iter()
            .filter(|r| {
                self.papers[r.paper.0 as usize].status != PaperStatus::Withdrawn
                    && matches!(
                        r.status,
                        ReviewStatus::PendingApproval
                            | ReviewStatus::RevisionRequested
                            | ReviewStatus::Approved
                    )
            })
            .count()
            + self
                .challenges
                .iter()
                .filter(|c| c.outcome == ChallengeOutcome::Pending)
                .count();
        if unresolved > 0 {
            return Err(ConferenceError::UnresolvedReviews(unresolved));
        }

        let n = self.submission_count() as i64;
        let escrow_balance = ledger.balance(&self.escrow)?;
        let expected = self.expected_escrow();
        if escrow_balance != expected {
            return Err(ConferenceError::EscrowMismatch {
                expected,
                actual: escrow_balance,
            });
        }
        let reserve_accrued = self.config.tax_schedule.default_reserve_rate * n;
        if self.default_losses > reserve_accrued {
            return Err(ConferenceError::EscrowMismatch {
                expected: reserve_accrued,
                actual: self.default_losses,
            });
        }

        let memo = Memo::conference(self.config.conference_id.clone());
        let payroll: Amount = self
            .config
            .tax_schedule
            .roles
            .iter()
            .filter(|r| {
                self.config
                    .role_rosters
                    .get(&r.role_name)
                    .is_some_and(|roster| !roster.is_empty())
            })
            .map(|r| r.per_paper_rate * n)
            .sum();

        // Under-priced τ surfaces here as a treasury draw.
        let mut treasury_topup = Amount::ZERO;
        if escrow_balance < payroll {
            treasury_topup = payroll - escrow_balance;
            ledger.transfer(
                self.treasury.clone(),
                self.escrow.clone(),
                treasury_topup,
                memo.clone(),
            )?;
        }

        let mut disbursements = Vec::new();
        for role in &self.config.tax_schedule.roles {
            let roster = match self.config.role_rosters.get(&role.role_name) {
                Some(roster) if !roster.is_empty() => roster.clone(),
                _ => continue, // no roster: the pool stays for the sweep
            };
            let pool = role.per_paper_rate * n;
            if pool == Amount::ZERO {
                continue;
            }
            let split = split_evenly(pool, roster.len() as u32);
            let paid_out = pool - split.residue;
            if paid_out == Amount::ZERO {
                continue;
            }
            let mut entries = vec![Entry::new(self.escrow.clone(), -paid_out)];
            for (member, share) in roster.iter().zip(&split.shares) {
                if *share > Amount::ZERO {
                    entries.push(Entry::new(member.clone(), *share));
                    disbursements.push(Disbursement {
                        role: role.role_name.clone(),
                        recipient: member.clone(),
                        amount: *share,
                    });
                }
            }
            ledger.append(TxRequest::new(TxKind::TaxDisbursement, entries, memo.clone()))?;
        }

        // Reserves, residues, and forfeited stakes go home to the treasury.
        let remainder = ledger.balance(&self.escrow)?;
        if remainder > Amount::ZERO {
            ledger.append(TxRequest::movement(
                TxKind::TaxDisbursement,
                self.escrow.clone(),
                self.treasury.clone(),
                remainder,
                memo,
            ))?;
        }
        debug_assert_eq!(ledger.balance(&self.escrow)?, Amount::ZERO);

        self.phase = Phase::Closed;
        Ok(SettlementReport {
            conference_id: self.config.conference_id.clone(),
            papers_submitted: n as u64,
            tau: self.config.tau,
            escrow_at_settlement: escrow_balance,
            disbursements,
            treasury_topup,
            treasury_sweep: remainder,
            default_losses: self.default_losses,
            default_reserve_accrued: reserve_accrued,
        })
    }
}

fn ensure_account(
    ledger: &mut Ledger,
    id: &AccountId,
    role: AccountRole,
) -> Result<()> {
    match ledger.role(id) {
        Some(existing) if existing == role => Ok(()),
        Some(_) => Err(ConferenceError::InvalidConfig(format!(
            "account {id} exists with a different role"
        ))),
        None => {
            ledger.create_account(id.clone(), role)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tax::compute_tau;

    fn test_config(rho: u32, tau: Amount) -> ConferenceConfig {
        ConferenceConfig {
            conference_id: "conf".into(),
            rho,
            tau,
            tax_schedule: TaxSchedule::neurips_db_2024(),
            loans_enabled: true,
            role_rosters: BTreeMap::new(),
        }
    }

    fn funded_researcher(ledger: &mut Ledger, id: &str, amount: Amount) -> AccountId {
        let acct = ledger.create_account(id, AccountRole::Researcher).unwrap();
        if amount > Amount::ZERO {
            ledger
                .transfer("faucet:treasury", acct.clone(), amount, Memo::default())
                .unwrap();
        }
        acct
    }

    fn setup(rho: u32, tau: Amount) -> (Ledger, Conference) {
        let mut ledger = Ledger::new();
        ledger
            .create_account("faucet:treasury", AccountRole::ConferenceTreasury)
            .unwrap();
        ledger
            .mint("faucet:treasury", Amount::rc(1_000_000), Memo::default())
            .unwrap();
        let conf = Conference::new(test_config(rho, tau), &mut ledger).unwrap();
        (ledger, conf)
    }

    #[test]
    fn phase_machine_is_forward_only() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        assert_eq!(conf.phase(), Phase::Announced);
        conf.open_submissions().unwrap();
        assert!(matches!(
            conf.open_submissions(),
            Err(ConferenceError::WrongPhase { .. })
        ));
        conf.close_submissions().unwrap();
        conf.begin_decisions().unwrap();
        conf.begin_settlement().unwrap();
        conf.settle(&mut ledger).unwrap();
        assert_eq!(conf.phase(), Phase::Closed);
        assert!(matches!(
            conf.open_submissions(),
            Err(ConferenceError::WrongPhase { .. })
        ));
    }

    #[test]
    fn zero_rho_config_rejected() {
        let mut ledger = Ledger::new();
        assert!(matches!(
            Conference::new(test_config(0, Amount::rc(1)), &mut ledger),
            Err(ConferenceError::InvalidConfig(_))
        ));
    }

    #[test]
    fn submission_charges_author() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        conf.open_submissions().unwrap();
        conf.submit_paper(&mut ledger, author.clone(), false).unwrap();
        assert_eq!(ledger.balance(&author).unwrap(), Amount::ZERO);
        assert_eq!(
            ledger.balance(conf.escrow_account()).unwrap(),
            Amount::mrc(4000)
        );
    }

    #[test]
    fn broke_author_without_loan_rejected() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(3999));
        conf.open_submissions().unwrap();
        let before = ledger.len();
        assert!(matches!(
            conf.submit_paper(&mut ledger, author, false),
            Err(ConferenceError::Ledger(LedgerError::InsufficientFunds { .. }))
        ));
        assert_eq!(ledger.len(), before);
        assert!(conf.papers().is_empty());
    }

    #[test]
    fn loan_funded_submission() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        ledger
            .transfer(
                "faucet:treasury",
                conf.treasury_account().clone(),
                Amount::rc(100),
                Memo::default(),
            )
            .unwrap();
        let author = funded_researcher(&mut ledger, "alice", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), true).unwrap();
        assert_eq!(ledger.balance(&author).unwrap(), Amount::ZERO);
        assert_eq!(
            ledger.balance(conf.escrow_account()).unwrap(),
            Amount::mrc(4000)
        );
        let loan = conf.loan(conf.paper(paper).unwrap().funded_by_loan.unwrap()).unwrap();
        assert_eq!(loan.outstanding, Amount::mrc(4000));
        assert_eq!(loan.status, LoanStatus::Open);
    }

    #[test]
    fn loans_disabled() {
        let (mut ledger, conf) = setup(3, Amount::rc(1));
        let mut config = test_config(3, Amount::rc(1));
        config.conference_id = "conf2".into();
        config.loans_enabled = false;
        let mut conf2 = Conference::new(config, &mut ledger).unwrap();
        conf2.open_submissions().unwrap();
        let author = funded_researcher(&mut ledger, "alice", Amount::ZERO);
        assert!(matches!(
            conf2.submit_paper(&mut ledger, author, true),
            Err(ConferenceError::LoansDisabled)
        ));
        let _ = conf.phase();
    }

    #[test]
    fn reviewer_assignment_rules() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), false).unwrap();

        assert!(matches!(
            conf.assign_reviewers(paper, vec![r1.clone(), r2.clone()]),
            Err(ConferenceError::WrongCount { expected: 3, got: 2 })
        ));
        assert!(matches!(
            conf.assign_reviewers(paper, vec![r1.clone(), r2.clone(), author.clone()]),
            Err(ConferenceError::ConflictOfInterest)
        ));
        conf.assign_reviewers(paper, vec![r1, r2, r3]).unwrap();
        assert_eq!(conf.paper(paper).unwrap().status, PaperStatus::UnderReview);
    }

    #[test]
    fn review_approval_pays_once() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2, r3]).unwrap();
        conf.close_submissions().unwrap();

        let review = conf.submit_review(r1.clone(), paper).unwrap();
        conf.approve_review(&mut ledger, review).unwrap();
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::rc(1));
        assert!(matches!(
            conf.approve_review(&mut ledger, review),
            Err(ConferenceError::WrongStatus)
        ));
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::rc(1));
    }

    #[test]
    fn unassigned_reviewer_rejected() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        let outsider = funded_researcher(&mut ledger, "outsider", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
        conf.close_submissions().unwrap();
        assert!(matches!(
            conf.submit_review(outsider, paper),
            Err(ConferenceError::NotAssigned)
        ));
    }

    #[test]
    fn revision_then_single_payment() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2, r3]).unwrap();
        conf.close_submissions().unwrap();

        let review = conf.submit_review(r1.clone(), paper).unwrap();
        conf.request_revision(review).unwrap();
        assert_eq!(conf.review(review).unwrap().status, ReviewStatus::RevisionRequested);
        let resubmitted = conf.submit_review(r1.clone(), paper).unwrap();
        assert_eq!(resubmitted, review);
        assert_eq!(conf.review(review).unwrap().revision_count, 1);
        conf.approve_review(&mut ledger, review).unwrap();
        assert!(matches!(
            conf.request_revision(review),
            Err(ConferenceError::WrongStatus)
        ));

        // Exactly one payment in the log references this review.
        let payments: Vec<_> = ledger
            .log()
            .iter()
            .filter(|tx| {
                tx.kind == TxKind::ReviewPayment
                    && tx.memo.review.as_deref() == Some(&review.to_string())
            })
            .collect();
        assert_eq!(payments.len(), 1);
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::rc(1));
    }

    #[test]
    fn escrow_short_boundary() {
        let (mut ledger, mut conf) = setup(1, Amount::ZERO);
        // Price a 1-review, zero-tax paper but drain escrow to 999.
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(1000));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone()]).unwrap();
        conf.close_submissions().unwrap();
        // Pull 1 mRC out through a second conference's disbursement path is
        // overkill; fake the shortfall with a direct escrow transfer.
        ledger
            .transfer(conf.escrow_account().clone(), author, Amount::mrc(1), Memo::default())
            .unwrap();
        let review = conf.submit_review(r1, paper).unwrap();
        assert!(matches!(
            conf.approve_review(&mut ledger, review),
            Err(ConferenceError::EscrowShort { held, .. }) if held == Amount::mrc(999)
        ));
    }

    #[test]
    fn challenge_stake_and_bounds() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        assert_eq!(conf.config().max_challenge_count(), 2);
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(7000));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2.clone(), r3.clone()])
            .unwrap();
        conf.close_submissions().unwrap();
        let mut reviews = Vec::new();
        for r in [&r1, &r2, &r3] {
            let rid = conf.submit_review(r.clone(), paper).unwrap();
            conf.approve_review(&mut ledger, rid).unwrap();
            reviews.push(rid);
        }
        conf.begin_decisions().unwrap();
        conf.decide_paper(paper, "reject").unwrap();

        assert!(matches!(
            conf.file_challenge(&mut ledger, author.clone(), paper, reviews.clone()),
            Err(ConferenceError::TooManyChallenged { max: 2, got: 3 })
        ));
        let author_before = ledger.balance(&author).unwrap();
        conf.file_challenge(&mut ledger, author.clone(), paper, reviews[..2].to_vec())
            .unwrap();
        assert_eq!(
            ledger.balance(&author).unwrap(),
            author_before - Amount::rc(2)
        );
    }

    #[test]
    fn upheld_challenge_flow() {
        let (mut ledger, mut conf) = setup(3, Amount::mrc(1125));
        let cost = Amount::mrc(4125);
        let author = funded_researcher(&mut ledger, "alice", cost + Amount::rc(2));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        let extra = funded_researcher(&mut ledger, "extra", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2.clone(), r3.clone()])
            .unwrap();
        conf.close_submissions().unwrap();
        let mut reviews = Vec::new();
        for r in [&r1, &r2, &r3] {
            let rid = conf.submit_review(r.clone(), paper).unwrap();
            conf.approve_review(&mut ledger, rid).unwrap();
            reviews.push(rid);
        }
        conf.begin_decisions().unwrap();
        conf.decide_paper(paper, "reject").unwrap();

        let author_before = ledger.balance(&author).unwrap();
        let challenge = conf
            .file_challenge(&mut ledger, author.clone(), paper, reviews[..2].to_vec())
            .unwrap();

        // Ruling before extra reviews arrive is rejected.
        assert!(matches!(
            conf.resolve_challenge(&mut ledger, challenge, true),
            Err(ConferenceError::WrongStatus)
        ));
        conf.solicit_extra_review(paper, extra.clone(), Some(challenge)).unwrap();
        let extra_review = conf.submit_review(extra.clone(), paper).unwrap();
        conf.approve_review(&mut ledger, extra_review).unwrap();
        assert_eq!(ledger.balance(&extra).unwrap(), Amount::rc(1));

        conf.resolve_challenge(&mut ledger, challenge, true).unwrap();
        // Author made whole; each challenged reviewer docked one coin.
        assert_eq!(ledger.balance(&author).unwrap(), author_before);
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::ZERO);
        assert_eq!(ledger.balance(&r2).unwrap(), Amount::ZERO);
        assert_eq!(ledger.balance(&r3).unwrap(), Amount::rc(1));
    }

    #[test]
    fn denied_challenge_forfeits_stake() {
        let (mut ledger, mut conf) = setup(3, Amount::mrc(1125));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4125) + Amount::rc(1));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        let extra = funded_researcher(&mut ledger, "extra", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2.clone(), r3.clone()])
            .unwrap();
        conf.close_submissions().unwrap();
        let first = conf.submit_review(r1.clone(), paper).unwrap();
        conf.approve_review(&mut ledger, first).unwrap();
        for r in [&r2, &r3] {
            let rid = conf.submit_review(r.clone(), paper).unwrap();
            conf.approve_review(&mut ledger, rid).unwrap();
        }
        conf.begin_decisions().unwrap();
        conf.decide_paper(paper, "reject").unwrap();
        let challenge = conf
            .file_challenge(&mut ledger, author.clone(), paper, vec![first])
            .unwrap();
        conf.solicit_extra_review(paper, extra.clone(), Some(challenge)).unwrap();
        let extra_review = conf.submit_review(extra, paper).unwrap();
        conf.approve_review(&mut ledger, extra_review).unwrap();

        conf.resolve_challenge(&mut ledger, challenge, false).unwrap();
        // Stake gone, challenged reviewer untouched.
        assert_eq!(ledger.balance(&author).unwrap(), Amount::ZERO);
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::rc(1));
    }

    #[test]
    fn insolvent_reviewer_gets_penalty_loan() {
        let (mut ledger, mut conf) = setup(3, Amount::mrc(1125));
        ledger
            .transfer(
                "faucet:treasury",
                conf.treasury_account().clone(),
                Amount::rc(10),
                Memo::default(),
            )
            .unwrap();
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4125) + Amount::rc(1));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        let extra = funded_researcher(&mut ledger, "extra", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author.clone(), false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2.clone(), r3.clone()])
            .unwrap();
        conf.close_submissions().unwrap();
        let first = conf.submit_review(r1.clone(), paper).unwrap();
        conf.approve_review(&mut ledger, first).unwrap();
        for r in [&r2, &r3] {
            let rid = conf.submit_review(r.clone(), paper).unwrap();
            conf.approve_review(&mut ledger, rid).unwrap();
        }
        // r1 spends their earnings elsewhere and cannot pay the penalty.
        ledger
            .transfer(r1.clone(), "faucet:treasury", Amount::rc(1), Memo::default())
            .unwrap();
        conf.begin_decisions().unwrap();
        conf.decide_paper(paper, "reject").unwrap();
        let challenge = conf
            .file_challenge(&mut ledger, author.clone(), paper, vec![first])
            .unwrap();
        conf.solicit_extra_review(paper, extra.clone(), Some(challenge)).unwrap();
        let extra_review = conf.submit_review(extra, paper).unwrap();
        conf.approve_review(&mut ledger, extra_review).unwrap();

        let loans_before = conf.loans().len();
        conf.resolve_challenge(&mut ledger, challenge, true).unwrap();
        assert_eq!(conf.loans().len(), loans_before + 1);
        let penalty_loan = conf.loans().last().unwrap();
        assert_eq!(penalty_loan.borrower, r1);
        assert_eq!(penalty_loan.outstanding, Amount::rc(1));
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::ZERO);
        // Conservation held throughout.
        let total: Amount = ledger.state().balances.values().copied().sum();
        assert_eq!(total, ledger.total_minted());
    }

    #[test]
    fn loan_repaid_by_four_reviews() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        ledger
            .transfer(
                "faucet:treasury",
                conf.treasury_account().clone(),
                Amount::rc(100),
                Memo::default(),
            )
            .unwrap();
        let borrower = funded_researcher(&mut ledger, "borrower", Amount::ZERO);
        conf.open_submissions().unwrap();
        let own_paper = conf.submit_paper(&mut ledger, borrower.clone(), true).unwrap();
        let loan_id = conf.paper(own_paper).unwrap().funded_by_loan.unwrap();

        // Four other papers the borrower reviews.
        let mut reviewers = vec![borrower.clone()];
        for i in 0..2 {
            reviewers.push(funded_researcher(&mut ledger, &format!("peer{i}"), Amount::ZERO));
        }
        let mut review_ids = Vec::new();
        for i in 0..4 {
            let author =
                funded_researcher(&mut ledger, &format!("author{i}"), Amount::mrc(4000));
            let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
            conf.assign_reviewers(paper, reviewers.clone()).unwrap();
            review_ids.push((paper, borrower.clone()));
        }
        conf.close_submissions().unwrap();
        for (paper, reviewer) in review_ids {
            let rid = conf.submit_review(reviewer, paper).unwrap();
            conf.approve_review(&mut ledger, rid).unwrap();
        }
        assert_eq!(conf.loan(loan_id).unwrap().status, LoanStatus::Repaid);
        assert_eq!(conf.loan(loan_id).unwrap().outstanding, Amount::ZERO);
        // All four review coins went to the loan; the borrower netted zero.
        assert_eq!(ledger.balance(&borrower).unwrap(), Amount::ZERO);
    }

    #[test]
    fn split_repayment_when_outstanding_below_one_coin() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        ledger
            .transfer(
                "faucet:treasury",
                conf.treasury_account().clone(),
                Amount::rc(100),
                Memo::default(),
            )
            .unwrap();
        let borrower = funded_researcher(&mut ledger, "borrower", Amount::mrc(3500));
        conf.open_submissions().unwrap();
        // Cost 4000, borrower covers 3500 up front by repaying right after.
        conf.submit_paper(&mut ledger, borrower.clone(), true).unwrap();
        let loan_id = conf.loans()[0].id;
        // Manual partial repayment to bring outstanding to 500.
        ledger
            .transfer(borrower.clone(), conf.treasury_account().clone(), Amount::mrc(3500), Memo::default())
            .unwrap();
        {
            let loan = &mut conf.loans[loan_id.0 as usize];
            loan.outstanding = Amount::mrc(500);
        }

        let reviewer2 = funded_researcher(&mut ledger, "peer0", Amount::ZERO);
        let reviewer3 = funded_researcher(&mut ledger, "peer1", Amount::ZERO);
        let author = funded_researcher(&mut ledger, "author", Amount::mrc(4000));
        let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
        conf.assign_reviewers(paper, vec![borrower.clone(), reviewer2, reviewer3])
            .unwrap();
        conf.close_submissions().unwrap();
        let treasury_before = ledger.balance(conf.treasury_account()).unwrap();
        let rid = conf.submit_review(borrower.clone(), paper).unwrap();
        conf.approve_review(&mut ledger, rid).unwrap();
        assert_eq!(ledger.balance(&borrower).unwrap(), Amount::mrc(500));
        assert_eq!(
            ledger.balance(conf.treasury_account()).unwrap(),
            treasury_before + Amount::mrc(500)
        );
        assert_eq!(conf.loan(loan_id).unwrap().status, LoanStatus::Repaid);
        // A repaid loan cannot absorb another review.
        let rid2 = ReviewId(rid.0);
        assert!(matches!(
            conf.repay_loan_via_review(&mut ledger, rid2, loan_id),
            Err(ConferenceError::WrongStatus)
        ));
    }

    #[test]
    fn default_withdrawal_keeps_reviews_paid() {
        let (mut ledger, mut conf) = setup(3, Amount::mrc(1125));
        ledger
            .transfer(
                "faucet:treasury",
                conf.treasury_account().clone(),
                Amount::rc(100),
                Memo::default(),
            )
            .unwrap();
        let borrower = funded_researcher(&mut ledger, "borrower", Amount::ZERO);
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, borrower.clone(), true).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2.clone(), r3]).unwrap();
        conf.close_submissions().unwrap();
        for r in [&r1, &r2] {
            let rid = conf.submit_review(r.clone(), paper).unwrap();
            conf.approve_review(&mut ledger, rid).unwrap();
        }
        let treasury_before = ledger.balance(conf.treasury_account()).unwrap();
        conf.withdraw_on_default(&mut ledger, paper).unwrap();
        assert_eq!(conf.paper(paper).unwrap().status, PaperStatus::Withdrawn);
        let loan = conf.loans()[0].clone();
        assert_eq!(loan.status, LoanStatus::Defaulted);
        // One unpaid slot of the three returns to the treasury; the two
        // paid reviews plus the fronted tax are written off.
        assert_eq!(
            ledger.balance(conf.treasury_account()).unwrap(),
            treasury_before + Amount::rc(1)
        );
        assert_eq!(loan.written_off, Amount::mrc(2000 + 1125));
        assert_eq!(ledger.balance(&r1).unwrap(), Amount::rc(1));
        assert_eq!(ledger.balance(&r2).unwrap(), Amount::rc(1));
    }

    #[test]
    fn cash_funded_paper_cannot_default() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
        conf.close_submissions().unwrap();
        assert!(matches!(
            conf.withdraw_on_default(&mut ledger, paper),
            Err(ConferenceError::NotLoanFunded)
        ));
    }

    #[test]
    fn default_before_any_review_writes_off_only_tax() {
        let (mut ledger, mut conf) = setup(3, Amount::mrc(1125));
        ledger
            .transfer(
                "faucet:treasury",
                conf.treasury_account().clone(),
                Amount::rc(100),
                Memo::default(),
            )
            .unwrap();
        let borrower = funded_researcher(&mut ledger, "borrower", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, borrower, true).unwrap();
        conf.close_submissions().unwrap();
        conf.withdraw_on_default(&mut ledger, paper).unwrap();
        // No review payments existed, so nothing payable is written off
        // beyond the fronted tax; the whole review budget came back.
        assert_eq!(conf.loans()[0].written_off, Amount::mrc(1125));
        assert_eq!(conf.paper(paper).unwrap().status, PaperStatus::Withdrawn);
    }

    #[test]
    fn settlement_no_exceptions_surplus_is_tau_n() {
        let mut ledger = Ledger::new();
        ledger
            .create_account("faucet:treasury", AccountRole::ConferenceTreasury)
            .unwrap();
        ledger
            .mint("faucet:treasury", Amount::rc(100_000), Memo::default())
            .unwrap();
        let schedule = TaxSchedule::neurips_db_2024();
        let tau = compute_tau(&schedule);
        let ac: Vec<AccountId> = (0..10)
            .map(|i| funded_researcher(&mut ledger, &format!("ac{i}"), Amount::ZERO))
            .collect();
        let mut rosters = BTreeMap::new();
        rosters.insert("area-chair".to_string(), ac);
        let config = ConferenceConfig {
            conference_id: "conf".into(),
            rho: 3,
            tau,
            tax_schedule: schedule,
            loans_enabled: false,
            role_rosters: rosters,
        };
        let mut conf = Conference::new(config, &mut ledger).unwrap();
        conf.open_submissions().unwrap();

        let n = 100u32;
        let reviewers: Vec<AccountId> = (0..4)
            .map(|i| funded_researcher(&mut ledger, &format!("rev{i}"), Amount::ZERO))
            .collect();
        for i in 0..n {
            let author =
                funded_researcher(&mut ledger, &format!("author{i}"), Amount::mrc(4125));
            let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
            conf.assign_reviewers(paper, reviewers[..3].to_vec()).unwrap();
        }
        conf.close_submissions().unwrap();
        for paper in 0..n {
            for r in &reviewers[..3] {
                let rid = conf.submit_review(r.clone(), PaperId(paper)).unwrap();
                conf.approve_review(&mut ledger, rid).unwrap();
            }
        }
        conf.begin_decisions().unwrap();
        conf.begin_settlement().unwrap();
        assert_eq!(
            ledger.balance(conf.escrow_account()).unwrap(),
            Amount::mrc(1125) * n as i64
        );
        let report = conf.settle(&mut ledger).unwrap();
        assert_eq!(ledger.balance(conf.escrow_account()).unwrap(), Amount::ZERO);
        // AC pool is 500 mRC x 100 papers over 10 chairs: 5000 each.
        let ac_total: Amount = report
            .disbursements
            .iter()
            .filter(|d| d.role == "area-chair")
            .map(|d| d.amount)
            .sum();
        assert_eq!(ac_total, Amount::mrc(50_000));
        assert!(report
            .disbursements
            .iter()
            .filter(|d| d.role == "area-chair")
            .all(|d| d.amount == Amount::mrc(5000)));
        // Everything disbursed or swept adds up to tau x n.
        let disbursed: Amount = report.disbursements.iter().map(|d| d.amount).sum();
        assert_eq!(disbursed + report.treasury_sweep, Amount::mrc(112_500));
        assert_eq!(report.treasury_topup, Amount::ZERO);
    }

    #[test]
    fn settle_with_unresolved_review_rejected() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        let author = funded_researcher(&mut ledger, "alice", Amount::mrc(4000));
        let r1 = funded_researcher(&mut ledger, "r1", Amount::ZERO);
        let r2 = funded_researcher(&mut ledger, "r2", Amount::ZERO);
        let r3 = funded_researcher(&mut ledger, "r3", Amount::ZERO);
        conf.open_submissions().unwrap();
        let paper = conf.submit_paper(&mut ledger, author, false).unwrap();
        conf.assign_reviewers(paper, vec![r1.clone(), r2, r3]).unwrap();
        conf.close_submissions().unwrap();
        conf.submit_review(r1, paper).unwrap();
        conf.begin_decisions().unwrap();
        conf.begin_settlement().unwrap();
        assert!(matches!(
            conf.settle(&mut ledger),
            Err(ConferenceError::UnresolvedReviews(1))
        ));
    }

    #[test]
    fn settle_empty_conference() {
        let (mut ledger, mut conf) = setup(3, Amount::rc(1));
        conf.open_submissions().unwrap();
        conf.close_submissions().unwrap();
        conf.begin_decisions().unwrap();
        conf.begin_settlement().unwrap();
        let report = conf.settle(&mut ledger).unwrap();
        assert!(report.disbursements.is_empty());
        assert_eq!(report.treasury_sweep, Amount::ZERO);
        assert_eq!(ledger.balance(conf.escrow_account()).unwrap(), Amount::ZERO);
    }
}
