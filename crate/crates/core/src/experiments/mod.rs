//! Experiment drivers that assemble the library primitives into the studies
//! shipped by the command-line tool: the Hoelder counterexample family and
//! its divergence table, the type-p embedding bound, martingale-average
//! approximation, the square-function equivalence, and the domination
//! campaign. Each driver returns a serializable report and enforces its own
//! built-in sanity assertions (reported as `Error::AssertionFailed`).

pub mod approximation;
pub mod corpus;
pub mod counterexample;
pub mod divergence;
pub mod domination;
pub mod embedding;
pub mod equivalence;
pub mod frozen;

pub use approximation::{approximation_builtin, approximation_experiment, ApproxRow, ApproxTable};
pub use counterexample::{
    build_psi, psi_exact_moment, psi_grid_holder_norm, psi_holder_constant, psi_sup_bound,
    PsiMoment, PsiSpec,
};
pub use divergence::{divergence_experiment, DivergenceRow, DivergenceTable};
pub use domination::{domination_campaign, DominationCampaign, DominationRow};
pub use embedding::{embedding_bound, embedding_campaign, EmbeddingCampaign, EmbeddingReport};
pub use equivalence::{equivalence_experiment, EquivalenceReport, EquivalenceRow};
pub use frozen::{frozen_set, FrozenSet, FROZEN_VERSION};
