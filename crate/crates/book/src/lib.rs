//! The guide in `book/` is plain mdbook, which cannot link listings against
//! workspace crates. Each chapter is included here as module docs instead, so
//! `cargo test --doc -p fgarch-book` compiles and runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/function-space.md")]
pub mod function_space {}
#[doc = include_str!("../../../book/src/bases.md")]
pub mod bases {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}
#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}
#[doc = include_str!("../../../book/src/ingest.md")]
pub mod ingest {}
#[doc = include_str!("../../../book/src/replication.md")]
pub mod replication {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
