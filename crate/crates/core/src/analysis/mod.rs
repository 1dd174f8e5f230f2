//! Static analyses over programs.

pub mod completion;
pub mod complexity;
pub mod critical;
pub mod equivalence;
pub(crate) mod linear;
pub mod ranking;

pub use completion::{complete, Completion, CompletionError};
pub use complexity::{complexity_bound, ComplexityBound};
pub use critical::{
    check_confluence, critical_pairs, joinable, minimal_instances, minimal_state, Confluence, ConfluenceReport,
    CriticalPair, Joinability, MinimalState,
};
pub use equivalence::{
    check_operational_equivalence, find_redundant_rules, structurally_equal, Equivalence, EquivalenceError,
    EquivalenceReport,
};
pub use ranking::{verify_ranking, RankingReport, RankingSpec, RankingVerdict, RankingWitness};
