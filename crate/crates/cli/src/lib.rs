//! File formats shared between the `oci` binary and its tests.

pub mod files;
