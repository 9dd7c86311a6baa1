//! The chain of controlled-flip pair unitaries that block-diagonalizes the
//! uniform N-wise Hamiltonian.
//!
//! Each pair operator U_{jk} = ½[1 + Z_j + X_k − Z_j X_k] flips spin k iff
//! spin j is |−>. The full chain U = U_{N−1,N} ∘ ... ∘ U_{2,3} ∘ U_{1,2}
//! therefore maps a basis index to its bitwise prefix-XOR (spin 1 first),
//! i.e. the Gray-code decode map, and acts as a pure basis permutation with
//! no phases.

use crate::error::{Error, Result};
use crate::pauli::{DenseOperator, DENSE_SITE_CAP};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Permutations are cached as a flat array up to this size and computed per
/// index above it.
pub const PERMUTATION_CACHE_CAP: usize = 24;

/// Prefix-XOR of the top `n` bits, most significant first (Gray decode).
#[inline]
pub fn prefix_xor(index: usize, n: usize) -> usize {
    let mut g = index;
    let mut shift = 1usize;
    while shift < n {
        g ^= g >> shift;
        shift <<= 1;
    }
    g & ((1usize << n) - 1)
}

/// Inverse of [`prefix_xor`] (Gray encode).
#[inline]
pub fn prefix_xor_inverse(index: usize, n: usize) -> usize {
    (index ^ (index >> 1)) & ((1usize << n) - 1)
}

/// Controlled flip on 1-based sites (j control-on-|−>, k target), embedded in
/// an n-site dense operator.
pub fn pair_unitary(j: usize, k: usize, n: usize) -> Result<DenseOperator> {
    if j == 0 || j > n || k == 0 || k > n {
        return Err(Error::Usage(format!(
            "pair sites ({j}, {k}) out of range 1..={n}"
        )));
    }
    if j == k {
        return Err(Error::Usage(format!("pair sites must differ, got ({j}, {j})")));
    }
    if n > DENSE_SITE_CAP {
        return Err(Error::Capacity(format!(
            "dense pair unitary limited to {DENSE_SITE_CAP} sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let jbit = 1usize << (n - j);
    let kbit = 1usize << (n - k);
    let mut entries = Array2::zeros((dim, dim));
    for col in 0..dim {
        let row = if col & jbit != 0 { col ^ kbit } else { col };
        entries[[row, col]] = C64::new(1.0, 0.0);
    }
    DenseOperator::new(n, entries)
}

/// The total chain transformation, stored as a basis permutation plus an
/// optional dense form for small systems.
#[derive(Debug, Clone)]
pub struct ChainUnitary {
    n: usize,
    permutation: Option<Vec<u32>>,
    dense: Option<DenseOperator>,
}

/// Build the chain for `n` spins. The unitary is independent of the
/// Hamiltonian parameters and of time, so one instance serves a whole run.
pub fn chain_unitary(n: usize) -> Result<ChainUnitary> {
    if n < 2 {
        return Err(Error::Usage(format!("chain needs at least 2 spins, got {n}")));
    }
    let permutation = if n <= PERMUTATION_CACHE_CAP {
        Some((0..1usize << n).map(|c| prefix_xor(c, n) as u32).collect())
    } else {
        None
    };
    let dense = if n <= DENSE_SITE_CAP {
        let dim = 1usize << n;
        let mut entries = Array2::zeros((dim, dim));
        for col in 0..dim {
            entries[[prefix_xor(col, n), col]] = C64::new(1.0, 0.0);
        }
        Some(DenseOperator::new(n, entries)?)
    } else {
        None
    };
    Ok(ChainUnitary { n, permutation, dense })
}

impl ChainUnitary {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn dense(&self) -> Option<&DenseOperator> {
        self.dense.as_ref()
    }

    /// Image of a basis index under U: U|b> = |permute_index(b)>.
    #[inline]
    pub fn permute_index(&self, b: usize) -> Result<usize> {
        if b >= self.dim() {
            return Err(Error::Usage(format!(
                "basis index {b} out of range for {} spins",
                self.n
            )));
        }
        Ok(self.image(b))
    }

    #[inline]
    fn image(&self, b: usize) -> usize {
        match &self.permutation {
            Some(p) => p[b] as usize,
            None => prefix_xor(b, self.n),
        }
    }

    /// Image under U†: U†|b> = |inverse_index(b)>.
    #[inline]
    pub fn inverse_index(&self, b: usize) -> Result<usize> {
        if b >= self.dim() {
            return Err(Error::Usage(format!(
                "basis index {b} out of range for {} spins",
                self.n
            )));
        }
        Ok(prefix_xor_inverse(b, self.n))
    }

    /// out = U psi.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        debug_assert_eq!(psi.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (c, amp) in psi.iter().enumerate() {
            out[self.image(c)] = *amp;
        }
    }

    /// out = U† psi.
    pub fn apply_dagger(&self, psi: &[C64], out: &mut [C64]) {
        debug_assert_eq!(psi.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (c, slot) in out.iter_mut().enumerate() {
            *slot = psi[self.image(c)];
        }
    }

    /// Entries of U†AU without matrix products: (U†AU)[r,c] = A[π(r), π(c)].
    pub fn conjugate_dense(&self, a: &DenseOperator) -> Result<DenseOperator> {
        if a.sites() != self.n {
            return Err(Error::Usage(format!(
                "operator on {} sites does not match chain on {}",
                a.sites(),
                self.n
            )));
        }
        let dim = self.dim();
        let mut out = Array2::zeros((dim, dim));
        for r in 0..dim {
            let pr = self.image(r);
            for c in 0..dim {
                out[[r, c]] = a.entries()[[pr, self.image(c)]];
            }
        }
        DenseOperator::new(self.n, out)
    }
}

/// Reverse-order chain U_{1,2} ∘ ... ∘ U_{N−1,N}, kept as a falsification
/// control: it does *not* block-diagonalize the Hamiltonian.
pub fn reversed_chain_permutation(n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Usage(format!("chain needs at least 2 spins, got {n}")));
    }
    let dim = 1usize << n;
    let mut perm: Vec<usize> = (0..dim).collect();
    // apply pairs from (N−1, N) down to (1, 2); target bit ^= control bit
    for (idx, slot) in perm.iter_mut().enumerate() {
        let mut b = idx;
        for j in (1..n).rev() {
            let jbit = 1usize << (n - j);
            let kbit = jbit >> 1;
            if b & jbit != 0 {
                b ^= kbit;
            }
        }
        *slot = b;
    }
    let _ = dim;
    Ok(perm)
}
