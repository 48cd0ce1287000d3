//! Permutations of photon labels, detector combinations and the counting
//! results for split-state density matrices.
//!
//! Lexicographic order is the one canonical order in this crate: permutations
//! index density-matrix columns, combinations index correlation rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest photon number for which permutations are enumerated (8! = 40320).
pub const MAX_ENUMERATED: usize = 8;

/// A bijection on `{0..n-1}`, stored as its image tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::Argument(format!("{image:?} is not a permutation")));
            }
            seen[v] = true;
        }
        Ok(Self(image))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_involution(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| self.0[v] == i)
    }

    pub fn invert(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different size");
        Self(other.0.iter().map(|&j| self.0[j]).collect())
    }

    /// Position of this permutation in `permutations_lex(self.len())`.
    pub fn lex_rank(&self) -> usize {
        let n = self.0.len();
        let mut rank = 0;
        for i in 0..n {
            let smaller_later = self.0[i + 1..].iter().filter(|&&v| v < self.0[i]).count();
            rank = rank * (n - i) + smaller_later;
        }
        rank
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

pub fn invert(p: &Permutation) -> Permutation {
    p.invert()
}

/// All `n!` permutations in strict lexicographic order of their images.
pub fn permutations_lex(n: usize) -> Result<Vec<Permutation>> {
    if n == 0 || n > MAX_ENUMERATED {
        return Err(Error::SizeLimit(format!(
            "photon count {n} outside 1..={MAX_ENUMERATED}"
        )));
    }
    let mut out = Vec::with_capacity(factorial(n) as usize);
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation(cur.clone()));
        if !next_permutation(&mut cur) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All strictly increasing `n`-tuples from `{0..m-1}`, lexicographically.
pub fn combinations_lex(m: usize, n: usize) -> Result<Vec<Vec<usize>>> {
    if n > m {
        return Err(Error::Argument(format!("cannot choose {n} of {m} ports")));
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // rightmost slot that can still advance
        let Some(i) = (0..n).rev().find(|&i| cur[i] < m - n + i) else {
            break;
        };
        cur[i] += 1;
        for j in i + 1..n {
            cur[j] = cur[j - 1] + 1;
        }
    }
    Ok(out)
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Number of involutions in `S_n`, via `A_n = A_{n-1} + (n-1) A_{n-2}`.
///
/// `A_0 = 1` is used internally so the recurrence also reproduces `A_2 = 2`.
pub fn involution_count(n: usize) -> u128 {
    let (mut prev, mut cur) = (1u128, 1u128);
    for k in 2..=n {
        let next = cur + (k as u128 - 1) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCounts {
    pub total: u128,
    pub real: u128,
    pub imag: u128,
}

/// Total, real and imaginary independent parameters of an `n`-photon split
/// state. Exact up to `n = 33`; larger `n` overflows 128 bits.
pub fn free_parameter_counts(n: usize) -> Result<ParameterCounts> {
    if n == 0 {
        return Err(Error::Argument("photon count must be at least 1".into()));
    }
    if n > 33 {
        return Err(Error::SizeLimit(format!("{n}! does not fit in 128 bits")));
    }
    let total = factorial(n);
    let inv = involution_count(n);
    Ok(ParameterCounts {
        total,
        real: (total + inv) / 2,
        imag: (total - inv) / 2,
    })
}

/// Whether `C(m, n) >= threshold`, without overflowing.
fn binomial_at_least(m: usize, n: usize, threshold: u128) -> bool {
    if n > m {
        return threshold == 0;
    }
    let k = n.min(m - n);
    let mut c: u128 = 1;
    for i in 1..=k {
        // c * (m - k + i) / i stays exact at every step
        match c.checked_mul((m - k + i) as u128) {
            Some(p) => c = p / i as u128,
            None => return true,
        }
    }
    c >= threshold
}

/// Smallest port count `m` with `C(m, n) >= n!`.
pub fn min_output_ports(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Argument("photon count must be at least 1".into()));
    }
    if n > 33 {
        return Err(Error::SizeLimit(format!("{n}! does not fit in 128 bits")));
    }
    let target = factorial(n);
    Ok((n..)
        .find(|&m| binomial_at_least(m, n, target))
        .expect("search is unbounded"))
}

pub fn binomial(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    let k = n.min(m - n);
    (1..=k).fold(1u128, |c, i| c * (m - k + i) as u128 / i as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn lex_permutations_small() {
        let p2: Vec<Vec<usize>> = permutations_lex(2).unwrap().into_iter().map(Into::into).collect();
        assert_eq!(p2, vec![vec![0, 1], vec![1, 0]]);

        let p3: Vec<Vec<usize>> = permutations_lex(3).unwrap().into_iter().map(Into::into).collect();
        assert_eq!(
            p3,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );

        let p4 = permutations_lex(4).unwrap();
        assert_eq!(p4.len(), 24);
        assert_eq!(p4[0], perm(&[0, 1, 2, 3]));
        assert_eq!(p4[23], perm(&[3, 2, 1, 0]));
        assert!(p4.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_bounds() {
        assert!(matches!(permutations_lex(0), Err(Error::SizeLimit(_))));
        assert!(matches!(permutations_lex(9), Err(Error::SizeLimit(_))));
        assert_eq!(permutations_lex(8).unwrap().len(), 40320);
    }

    #[test]
    fn lex_rank_matches_enumeration() {
        for n in 1..=5 {
            for (i, p) in permutations_lex(n).unwrap().iter().enumerate() {
                assert_eq!(p.lex_rank(), i);
            }
        }
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(invert(&perm(&[0, 1, 2])), perm(&[0, 1, 2]));
        assert_eq!(invert(&perm(&[1, 2, 0])), perm(&[2, 0, 1]));
        assert_eq!(invert(&perm(&[1, 0, 3, 2])), perm(&[1, 0, 3, 2]));
        let p = perm(&[2, 0, 3, 1]);
        assert!(p.compose(&p.invert()).is_identity());
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(serde_json::from_str::<Permutation>("[1,1,0]").is_err());
    }

    #[test]
    fn involution_counts() {
        assert_eq!(involution_count(1), 1);
        assert_eq!(involution_count(2), 2);
        assert_eq!(involution_count(3), 4);
        assert_eq!(involution_count(4), 10);
        for n in 1..=7 {
            let brute = permutations_lex(n)
                .unwrap()
                .iter()
                .filter(|p| p.is_involution())
                .count();
            assert_eq!(involution_count(n), brute as u128, "n = {n}");
        }
    }

    #[test]
    fn parameter_counts() {
        let c = |n| {
            let p = free_parameter_counts(n).unwrap();
            (p.total, p.real, p.imag)
        };
        assert_eq!(c(2), (2, 2, 0));
        assert_eq!(c(3), (6, 5, 1));
        assert_eq!(c(4), (24, 17, 7));
        assert!(free_parameter_counts(0).is_err());
    }

    #[test]
    fn output_ports() {
        let expect = [(1, 1), (2, 3), (3, 5), (4, 7), (5, 9), (6, 12)];
        for (n, m) in expect {
            assert_eq!(min_output_ports(n).unwrap(), m, "n = {n}");
        }
        assert!(binomial(11, 6) < 720 && binomial(12, 6) >= 720);
    }

    #[test]
    fn combinations() {
        assert_eq!(
            combinations_lex(3, 2).unwrap(),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        let c = combinations_lex(5, 3).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], vec![0, 1, 2]);
        assert_eq!(c[9], vec![2, 3, 4]);
        assert_eq!(combinations_lex(7, 4).unwrap().len(), 35);
        assert_eq!(combinations_lex(4, 0).unwrap(), vec![Vec::<usize>::new()]);
        assert!(matches!(combinations_lex(2, 3), Err(Error::Argument(_))));
    }
}
