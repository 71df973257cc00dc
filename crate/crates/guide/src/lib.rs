//! Book chapters compiled as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/penalty.md")]
pub mod penalty {}
#[doc = include_str!("../../../book/src/schedule.md")]
pub mod schedule {}
#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}
#[doc = include_str!("../../../book/src/psd.md")]
pub mod psd {}
#[doc = include_str!("../../../book/src/prox.md")]
pub mod prox {}
#[doc = include_str!("../../../book/src/lmnn.md")]
pub mod lmnn {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
