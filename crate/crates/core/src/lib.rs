//! Bipartite correlation boxes with binary inputs and outputs.
//!
//! Every box is a conditional probability table `P(a,b|x,y)` ([`BoxTable`]).
//! Constructors cover the PR-box, the 16 deterministic local strategies,
//! a deterministic hidden-variable model averaged over `λ`, and projective
//! spin measurements on the two-qubit singlet. Analyzers report
//! no-signaling, parameter and outcome independence, Bell factorizability,
//! and the CHSH combination; the sampler produces seeded empirical tables.
//!
//! ```
//! use nlbox::{chsh, locality, table, Tolerance};
//!
//! let pr = table::pr_box();
//! assert_eq!(chsh::chsh_value(&pr).s, 4.0);
//!
//! let report = locality::analyze(&pr, Tolerance::default());
//! assert!(report.no_signaling.holds());
//! assert!(report.outcome_independence.is_violated());
//! ```

// Tables are indexed [x][y][a][b]; explicit index loops read closest to the math.
#![allow(clippy::needless_range_loop)]

pub mod chsh;
pub mod error;
pub mod exec;
pub mod hidden_variable;
pub mod locality;
pub mod quantum;
pub mod sampler;
pub mod table;

pub use chsh::ChshResult;
pub use error::{Error, Result};
pub use exec::Execution;
pub use hidden_variable::{HvModel, LambdaDist};
pub use locality::{LocalityReport, Verdict, Witness};
pub use quantum::MeasurementAngles;
pub use sampler::EmpiricalTable;
pub use table::{BoxTable, Outcome, Setting, Tolerance};
