//! Countable-armed bandit algorithms and their reference bounds.

pub mod alg;
pub mod bounds;
pub mod etc;
pub mod paired;
pub mod record;

pub use alg::{
    check_lemma1_equality, check_lemma1_streams, run_alg, run_epoch, EpochEnd, Lemma1Check, LiveArm,
    RecordedStream, RewardStream,
};
pub use bounds::{
    alg_regret_bound, c1, etc_regret_bound, generic_ucb_tail_bound, lower_bound_curve, ucb1_tail_bound, EtcBound,
    TailBound, LOWER_BOUND_PRESET_C,
};
pub use etc::{exploration_length, exploration_test, run_etc, ExplorationTest};
pub use paired::{diff_prefix_sums, paired_test, TestOutcome};
pub use record::{default_checkpoints, AlgoParams, EpochTrace, EpochVerdict, RegretTrajectory, RunRecord};
