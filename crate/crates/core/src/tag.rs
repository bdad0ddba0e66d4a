//! Nesting-level identifiers.
//!
//! Every invocation of a differentiation operator draws a fresh [`Tag`] and
//! attaches it to the perturbations (forward) or tape nodes (reverse) it
//! introduces. Tags are issued from one process-wide counter, so an inner
//! invocation always holds a larger tag than the invocation enclosing it.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_TAG: AtomicU64 = AtomicU64::new(0);

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag(u64);

impl Tag {
    /// Issues a tag strictly greater than every tag issued before it.
    pub fn fresh() -> Tag {
        let id = NEXT_TAG.fetch_add(1, Ordering::Relaxed);
        if id == u64::MAX {
            // Unreachable in practice; wrapping would break the ordering invariant.
            std::process::abort();
        }
        Tag(id)
    }

    pub fn id(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
