pub mod format;
pub mod session;
pub mod stats;

pub use format::{format_value, FormatError};
pub use session::{Reply, Session};
pub use stats::StatsReport;
