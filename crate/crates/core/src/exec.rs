//! Serial/parallel execution switch for data-parallel loops.

use serde::{Deserialize, Serialize};

/// How independent work items (client updates, replicates, sweep cells) are run.
///
/// `Parallel` silently degrades to `Serial` when the crate is built without
/// the `parallel` feature. Output order always follows input order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, returning results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let items: Vec<u64> = (0..1000).collect();
        let serial = Execution::Serial.map(&items, |x| x * x);
        let parallel = Execution::Parallel.map(&items, |x| x * x);
        assert_eq!(serial, parallel);
        assert_eq!(serial[999], 998_001);
    }
}
