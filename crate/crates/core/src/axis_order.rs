//! Permutations of coordinate axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A permutation of the coordinate indices `0..n-1`.
///
/// Position `i` of the order names the coordinate drawn at angular position
/// `i` of a star glyph (or anchor `i` of a RadViz circle).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxisOrder(Vec<usize>);

impl AxisOrder {
    /// Validates that `positions` is a permutation of `0..n-1`.
    pub fn new(positions: Vec<usize>) -> Result<Self> {
        let n = positions.len();
        let mut seen = vec![false; n];
        for &p in &positions {
            if p >= n {
                return Err(Error::invalid_argument(format!(
                    "axis index {p} out of range for {n} coordinates"
                )));
            }
            if seen[p] {
                return Err(Error::invalid_argument(format!(
                    "axis index {p} appears more than once"
                )));
            }
            seen[p] = true;
        }
        Ok(AxisOrder(positions))
    }

    pub fn identity(n: usize) -> Self {
        AxisOrder((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Coordinate index placed at angular position `pos`.
    pub fn coordinate_at(&self, pos: usize) -> usize {
        self.0[pos]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Swaps the coordinates at two angular positions.
    pub fn swap_positions(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl std::fmt::Display for AxisOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Visits every permutation of `0..n-1` in lexicographic order.
///
/// The callback returns `false` to stop early.
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if !visit(&perm) {
            return;
        }
        if !next_permutation(&mut perm) {
            return;
        }
    }
}

/// Advances `perm` to its lexicographic successor; returns false at the last one.
pub fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// n! as usize; callers guard n so this cannot overflow.
pub fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_permutations() {
        assert!(AxisOrder::new(vec![0, 2]).is_err());
        assert!(AxisOrder::new(vec![1, 1]).is_err());
        assert!(AxisOrder::new(vec![0, 1, 2]).is_ok());
    }

    #[test]
    fn identity_round_trip() {
        let o = AxisOrder::identity(4);
        assert_eq!(o.as_slice(), &[0, 1, 2, 3]);
        let json = serde_json::to_string(&o).unwrap();
        assert_eq!(json, "[0,1,2,3]");
        let back: AxisOrder = serde_json::from_str(&json).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn permutation_enumeration_is_lexicographic_and_complete() {
        let mut seen = Vec::new();
        for_each_permutation(3, |p| {
            seen.push(p.to_vec());
            true
        });
        assert_eq!(
            seen,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0],
            ]
        );
        let mut count = 0usize;
        for_each_permutation(6, |_| {
            count += 1;
            true
        });
        assert_eq!(count, factorial(6));
    }
}
