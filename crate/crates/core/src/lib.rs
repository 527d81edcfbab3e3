//! Rate-distortion analysis of deductive sources: stored facts under a
//! Datalog program, reconstructed up to their closure.
//!
//! See the guide in `book/` for a walkthrough.

pub mod consequences;
pub mod datalog;
pub mod distortion;
pub mod format;
pub mod generators;
pub mod info;
pub mod rates;
pub mod source;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sources.md")]
    mod sources {}
    #[doc = include_str!("../../../book/src/distortion.md")]
    mod distortion {}
    #[doc = include_str!("../../../book/src/zero-rate.md")]
    mod zero_rate {}
    #[doc = include_str!("../../../book/src/rate-distortion.md")]
    mod rate_distortion {}
    #[doc = include_str!("../../../book/src/depth.md")]
    mod depth {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
