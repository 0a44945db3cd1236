//! Restricted block relocation: yard model, lower bounds, greedy policies,
//! bounded beam search, an exact branch and bound, instance files and batch
//! benchmarking.

pub mod beam;
pub mod bench;
pub mod bounds;
pub mod exact;
pub mod instance;
pub mod policies;
pub mod yard;

pub use beam::{solve_bbs, BeamConfig, Beta, Solution, SolutionStatus, UbPolicy};
pub use bounds::{lower_bound, BoundBreakdown, BoundError, LbKind};
pub use exact::{solve_exact, ExactResult, ExactStatus};
pub use instance::{generate, read_instance, write_instance, InstanceMeta, ParseError};
pub use policies::{playout, Playout, PolicyId};
pub use yard::{Move, Priority, RetrievalStep, Yard, YardError};
