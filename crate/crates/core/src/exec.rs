//! Order-preserving data-parallel map, with a sequential fallback when the
//! `parallel` feature is off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batches of independent jobs are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Applies `f` to every item. Output order follows input order whatever
    /// the schedule.
    pub fn map<I, O, F>(self, items: &[I], f: F) -> Vec<O>
    where
        I: Sync,
        O: Send,
        F: Fn(&I) -> O + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Whether `pred` holds for some item.
    pub fn any<I, F>(self, items: &[I], pred: F) -> bool
    where
        I: Sync,
        F: Fn(&I) -> bool + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().any(pred),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().any(pred),
        }
    }
}
