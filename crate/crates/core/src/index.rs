use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Position `k` in chain `l`, both counted from 1.
///
/// The derived order is lexicographic: `(p, q) < (l, k)` iff `p < l`, or
/// `p == l` and `q < k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainIndex {
    pub chain: usize,
    pub position: usize,
}

impl ChainIndex {
    pub fn new(chain: usize, position: usize) -> Self {
        debug_assert!(chain >= 1 && position >= 1);
        ChainIndex { chain, position }
    }

    /// `(l, k-1)`, defined only for `k > 1`.
    pub fn immediate_predecessor(self) -> Option<ChainIndex> {
        (self.position > 1).then(|| ChainIndex::new(self.chain, self.position - 1))
    }
}

impl fmt::Display for ChainIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.chain, self.position)
    }
}

pub fn lex_compare(a: ChainIndex, b: ChainIndex) -> Ordering {
    a.cmp(&b)
}

pub fn immediate_predecessor(a: ChainIndex) -> Option<ChainIndex> {
    a.immediate_predecessor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ix(l: usize, k: usize) -> ChainIndex {
        ChainIndex::new(l, k)
    }

    #[test]
    fn lexicographic_examples() {
        assert_eq!(lex_compare(ix(1, 3), ix(2, 1)), Ordering::Less);
        assert_eq!(lex_compare(ix(3, 4), ix(3, 4)), Ordering::Equal);
        assert_eq!(lex_compare(ix(2, 5), ix(2, 2)), Ordering::Greater);
    }

    #[test]
    fn predecessors() {
        assert_eq!(immediate_predecessor(ix(2, 5)), Some(ix(2, 4)));
        assert_eq!(immediate_predecessor(ix(3, 1)), None);
        assert_eq!(immediate_predecessor(ix(1, 2)), Some(ix(1, 1)));
    }

    fn arb_index() -> impl Strategy<Value = ChainIndex> {
        (1usize..6, 1usize..6).prop_map(|(l, k)| ix(l, k))
    }

    fn reference(a: ChainIndex, b: ChainIndex) -> Ordering {
        if a.chain < b.chain || (a.chain == b.chain && a.position < b.position) {
            Ordering::Less
        } else if a == b {
            Ordering::Equal
        } else {
            Ordering::Greater
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn total_order(a in arb_index(), b in arb_index(), c in arb_index()) {
            let ab = lex_compare(a, b);
            prop_assert_eq!(ab, reference(a, b));
            prop_assert_eq!(ab, lex_compare(b, a).reverse());
            prop_assert_eq!(ab == Ordering::Equal, a == b);
            if ab != Ordering::Greater && lex_compare(b, c) != Ordering::Greater {
                prop_assert_ne!(lex_compare(a, c), Ordering::Greater);
            }
        }
    }
}
