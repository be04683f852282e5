// The guide in `book/` is plain mdbook Markdown. mdbook cannot run Rust
// listings against a workspace crate, so each chapter is included here as
// the documentation of an empty module and `cargo test --doc` runs its code
// blocks. One module per chapter keeps failures traceable to a chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/eigenfunctions.md")]
pub mod eigenfunctions {}
#[doc = include_str!("../../../book/src/contours.md")]
pub mod contours {}
#[doc = include_str!("../../../book/src/envelope.md")]
pub mod envelope {}
#[doc = include_str!("../../../book/src/hankel.md")]
pub mod hankel {}
#[doc = include_str!("../../../book/src/strichartz.md")]
pub mod strichartz {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
