//! Library surface of the `compgen` binary: subcommand implementations,
//! HTTP clients, and shared file plumbing, exposed for integration tests.

pub mod cmd;
pub mod http_client;
pub mod io_util;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_OPERATIONAL: i32 = 3;
