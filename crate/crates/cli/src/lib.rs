//! Library half of the `fsg` command line tool: config and manifest
//! formats, raster file I/O, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod imageio;
pub mod manifest;

use std::fmt;

/// A user input failed validation (exit code 3).
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_PROTOCOL: i32 = 5;

/// Maps an error chain to the documented exit codes.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fsg_core::Error>() {
            return match e.root() {
                fsg_core::Error::Io(_) => EXIT_IO,
                fsg_core::Error::Convergence(_) => EXIT_CONVERGENCE,
                fsg_core::Error::Protocol(_) | fsg_core::Error::Peer(_) => EXIT_PROTOCOL,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.is::<Invalid>() {
            return EXIT_VALIDATION;
        }
        if cause.is::<std::io::Error>() || cause.is::<image::ImageError>() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}

#[cfg(test)]
mod tests {
    use super::*;
    use fsg_core::poisson::{Method, SolverReport};

    #[test]
    fn exit_codes() {
        let io = anyhow::Error::new(std::io::Error::new(std::io::ErrorKind::NotFound, "x"));
        assert_eq!(exit_code(&io), EXIT_IO);
        let conv = fsg_core::Error::Convergence(SolverReport {
            iterations: 1,
            residual: 1.0,
            method: Method::Direct,
            free_pixels: 1,
        });
        assert_eq!(
            exit_code(&anyhow::Error::new(conv.at_stage("blending")).context("frame 0")),
            EXIT_CONVERGENCE
        );
        let proto = fsg_core::Error::Protocol(fsg_core::ProtocolError::Timeout);
        assert_eq!(exit_code(&anyhow::Error::new(proto)), EXIT_PROTOCOL);
        assert_eq!(
            exit_code(&anyhow::Error::new(Invalid("bad".into()))),
            EXIT_VALIDATION
        );
        assert_eq!(
            exit_code(&anyhow::Error::new(fsg_core::Error::NoView)),
            EXIT_VALIDATION
        );
    }
}
