//! Matrix permanents.
//!
//! Two independent routes are kept: direct summation over `S_n` and Ryser's
//! inclusion-exclusion formula walked in Gray-code order. [`permanent`] picks
//! the direct sum below 4×4 and Ryser from there on.

use num_complex::Complex64;

use crate::combinatorics::{permutations_lex, MAX_ENUMERATED};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Argument(format!(
            "permanent of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() > MAX_ENUMERATED {
        return Err(Error::SizeLimit(format!(
            "permanent of order {} exceeds {MAX_ENUMERATED}",
            a.nrows()
        )));
    }
    Ok(a.nrows())
}

pub fn permanent(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    Ok(if n < 4 { naive(a, n) } else { ryser(a, n) })
}

/// `Σ_τ ∏_k a[τ(k), k]` by enumeration.
pub fn permanent_naive(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    Ok(naive(a, n))
}

pub fn permanent_ryser(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    Ok(ryser(a, n))
}

fn naive(a: &CMatrix, n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    permutations_lex(n)
        .expect("order checked")
        .iter()
        .map(|t| (0..n).map(|k| a[(t.apply(k), k)]).product::<Complex64>())
        .sum()
}

/// `perm(A) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} ∏_i Σ_{j∈S} a_ij`, visiting the
/// subsets in Gray-code order so each step adds or removes one column.
fn ryser(a: &CMatrix, n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut in_set = vec![false; n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut size = 0usize;
    for k in 1u32..(1u32 << n) {
        let j = k.trailing_zeros() as usize;
        if in_set[j] {
            for i in 0..n {
                row_sums[i] -= a[(i, j)];
            }
            size -= 1;
        } else {
            for i in 0..n {
                row_sums[i] += a[(i, j)];
            }
            size += 1;
        }
        in_set[j] = !in_set[j];
        let prod: Complex64 = row_sums.iter().product();
        if (n - size) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}
