//! Library side of the `periodpoly` command: input resolution, the
//! verification pipeline, report records and exit-code classification.

pub mod commands;
pub mod error;
pub mod pipeline;
pub mod record;
pub mod source;

pub use error::{exit_code_help, CliError, Exit};
pub use pipeline::{verify, Verification, VerifyOptions};
pub use record::{Report, VerificationRecord};
pub use source::{Input, Resolver, Source};
