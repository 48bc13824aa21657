use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-index `nu` in `(N u {0})^dim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|nu|`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `nu!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&n| (1..=n).map(f64::from).product::<f64>())
            .product()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }

    /// Componentwise partial order `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Every index `omega <= self`, `omega != self`, in graded lexicographic order.
    pub fn strict_lower_set(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut current = vec![0u32; self.0.len()];
        loop {
            if current != self.0 {
                out.push(MultiIndex(current.clone()));
            }
            let mut axis = self.0.len();
            loop {
                if axis == 0 {
                    out.sort_by(graded_lex);
                    return out;
                }
                axis -= 1;
                if current[axis] < self.0[axis] {
                    current[axis] += 1;
                    for later in current.iter_mut().skip(axis + 1) {
                        *later = 0;
                    }
                    break;
                }
            }
        }
    }

    /// All multi-indices of dimension `dim` with `|nu| <= max_order`, graded
    /// lexicographic: by total order, then lexicographically descending in the
    /// leading axis (`2-0, 1-1, 0-2`).
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut block = Vec::new();
            compositions(dim, order, &mut Vec::with_capacity(dim), &mut block);
            out.extend(block);
        }
        out
    }
}

fn compositions(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        prefix.push(first);
        compositions(dim, remaining - first, prefix, out);
        prefix.pop();
    }
}

/// Graded lexicographic comparison used for every enumeration in the crate.
pub fn graded_lex(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.order().cmp(&b.order()).then_with(|| b.0.cmp(&a.0))
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join("-"))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('-')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("multi-index `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_factorial_and_partial_order() {
        let nu = MultiIndex::new(vec![2, 3]);
        assert_eq!(nu.order(), 5);
        assert_eq!(nu.factorial(), 12.0);
        assert!(MultiIndex::new(vec![1, 3]).le(&nu));
        assert!(!MultiIndex::new(vec![3, 0]).le(&nu));
        assert!(MultiIndex::zero(2).is_zero());
    }

    #[test]
    fn enumeration_is_graded_lexicographic() {
        let all: Vec<String> = MultiIndex::all_up_to(2, 2).iter().map(ToString::to_string).collect();
        assert_eq!(all, ["0-0", "1-0", "0-1", "2-0", "1-1", "0-2"]);
        assert_eq!(MultiIndex::all_up_to(1, 3).len(), 4);
        assert_eq!(MultiIndex::all_up_to(3, 2).len(), 10);
    }

    #[test]
    fn strict_lower_set_excludes_self() {
        let nu = MultiIndex::new(vec![1, 2]);
        let lower: Vec<String> = nu.strict_lower_set().iter().map(ToString::to_string).collect();
        assert_eq!(lower, ["0-0", "1-0", "0-1", "1-1", "0-2"]);
        assert!(MultiIndex::zero(3).strict_lower_set().is_empty());
    }

    #[test]
    fn dash_joined_text_round_trips() {
        let nu: MultiIndex = "2-0".parse().unwrap();
        assert_eq!(nu, MultiIndex::new(vec![2, 0]));
        assert_eq!(nu.to_string(), "2-0");
        assert!("2-x".parse::<MultiIndex>().is_err());
    }
}
