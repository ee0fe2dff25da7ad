//! Deterministic protocol simulation, transcript replay and operation-count
//! reporting.

pub mod codec;
mod efficiency;
mod run;
mod scenario;
mod transcript;

pub use efficiency::{
    report_efficiency, signing_cost, EfficiencyReport, EfficiencyRow, ReferenceCost,
};
pub use run::{
    bidder_identity, derive_rng, run_scenario, run_scenario_with_params, AuctionResult,
    EvictionRecord, HarnessError, OpCountReport, RejectedBid, ScenarioRun, SigningSample,
    WinnerInfo,
};
pub use scenario::{RingPolicy, ScenarioConfig, Scheduler, Strategy};
pub use transcript::{
    verify_board, verify_transcript, TranscriptError, TranscriptSummary, VerifiedWinner,
};
