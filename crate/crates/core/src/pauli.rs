//! Exact symbolic and dense Pauli-string algebra.
//!
//! Strings carry a unit phase from {1, i, −1, −i} stored as a power of i, so
//! products and commutators stay exact; dense forms are built only below
//! [`DENSE_SITE_CAP`] sites.

use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Dense operators are capped at 2^12 dimensions; the decomposed engine has no
/// such cap.
pub const DENSE_SITE_CAP: usize = 12;

/// Coefficients below this magnitude are dropped during canonicalization.
pub const COEFF_EPS: f64 = 1e-15;

/// Single-site Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    /// Product of two letters: `(power of i, letter)` with `a·b = i^pow · letter`.
    pub fn multiply(self, rhs: PauliLetter) -> (u8, PauliLetter) {
        use PauliLetter::*;
        match (self, rhs) {
            (I, b) => (0, b),
            (a, I) => (0, a),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    /// 2x2 matrix in the basis { |+>, |-> } with sigma^z |±> = ±|±>.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            PauliLetter::I => [[l, o], [o, l]],
            PauliLetter::X => [[o, l], [l, o]],
            PauliLetter::Y => [[o, -i], [i, o]],
            PauliLetter::Z => [[l, o], [o, -l]],
        }
    }
}

/// Phase unit i^pow for pow in 0..4.
fn phase_unit(pow: u8) -> C64 {
    match pow % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// An N-site Pauli product with a unit phase from {±1, ±i}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase_pow: u8,
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { phase_pow: 0, letters: vec![PauliLetter::I; n] }
    }

    /// Single non-identity letter at 1-based `site`.
    pub fn single(n: usize, site: usize, letter: PauliLetter) -> Result<Self> {
        if site == 0 || site > n {
            return Err(Error::Usage(format!("site {site} out of range 1..={n}")));
        }
        let mut letters = vec![PauliLetter::I; n];
        letters[site - 1] = letter;
        Ok(PauliString { phase_pow: 0, letters })
    }

    /// The same letter on every site, e.g. X^⊗N.
    pub fn uniform(n: usize, letter: PauliLetter) -> Self {
        PauliString { phase_pow: 0, letters: vec![letter; n] }
    }

    pub fn from_letters(letters: Vec<PauliLetter>) -> Self {
        PauliString { phase_pow: 0, letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn phase(&self) -> C64 {
        phase_unit(self.phase_pow)
    }

    pub fn phase_pow(&self) -> u8 {
        self.phase_pow
    }

    pub fn with_phase_pow(mut self, pow: u8) -> Self {
        self.phase_pow = pow % 4;
        self
    }

    /// Site-wise product with accumulated phase.
    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.len() != rhs.len() {
            return Err(Error::Usage(format!(
                "length mismatch: {} vs {}",
                self.len(),
                rhs.len()
            )));
        }
        let mut pow = (self.phase_pow + rhs.phase_pow) % 4;
        let mut letters = Vec::with_capacity(self.len());
        for (&a, &b) in self.letters.iter().zip(rhs.letters.iter()) {
            let (p, l) = a.multiply(b);
            pow = (pow + p) % 4;
            letters.push(l);
        }
        Ok(PauliString { phase_pow: pow, letters })
    }

    /// Strip the phase into a coefficient factor; used by canonicalization.
    fn split_phase(&self) -> (C64, PauliString) {
        (
            self.phase(),
            PauliString { phase_pow: 0, letters: self.letters.clone() },
        )
    }

    /// Action on a computational-basis index: `string |b> = factor(b) |b ^ flip_mask>`.
    ///
    /// Bit k (1-based site, spin 1 most significant) flips under X/Y; Y and Z
    /// contribute (−1)^bit, and each Y contributes a global i.
    pub fn basis_action(&self) -> StringAction {
        let n = self.len();
        let mut flip_mask = 0usize;
        let mut sign_mask = 0usize;
        let mut global = self.phase();
        for (idx, &l) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - idx);
            match l {
                PauliLetter::I => {}
                PauliLetter::X => flip_mask |= bit,
                PauliLetter::Y => {
                    flip_mask |= bit;
                    sign_mask |= bit;
                    global *= C64::new(0.0, 1.0);
                }
                PauliLetter::Z => sign_mask |= bit,
            }
        }
        StringAction { flip_mask, sign_mask, global }
    }

    /// Dense matrix of this single string (with its phase).
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let n = self.len();
        if n > DENSE_SITE_CAP {
            return Err(Error::Capacity(format!(
                "dense form limited to {DENSE_SITE_CAP} sites, got {n}"
            )));
        }
        let dim = 1usize << n;
        let mut entries = Array2::zeros((dim, dim));
        let action = self.basis_action();
        for col in 0..dim {
            let row = col ^ action.flip_mask;
            entries[[row, col]] = action.factor(col);
        }
        Ok(DenseOperator { sites: n, entries })
    }
}

/// Precomputed basis-index action of a Pauli string.
#[derive(Debug, Clone, Copy)]
pub struct StringAction {
    pub flip_mask: usize,
    pub sign_mask: usize,
    pub global: C64,
}

impl StringAction {
    #[inline]
    pub fn factor(&self, col: usize) -> C64 {
        if (col & self.sign_mask).count_ones() % 2 == 1 {
            -self.global
        } else {
            self.global
        }
    }
}

/// Product of single-site Pauli letters `a · b` as strings.
pub fn pauli_multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.multiply(b)
}

/// Weighted sum of Pauli strings over a fixed site count, kept canonical:
/// phases folded into coefficients, duplicate strings merged, coefficients
/// below [`COEFF_EPS`] dropped, terms sorted for deterministic iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    sites: usize,
    terms: Vec<(C64, PauliString)>,
}

impl OperatorSum {
    pub fn zero(sites: usize) -> Self {
        OperatorSum { sites, terms: Vec::new() }
    }

    pub fn from_terms<I>(sites: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C64, PauliString)>,
    {
        let mut sum = OperatorSum::zero(sites);
        for (c, s) in terms {
            sum.push(c, s)?;
        }
        sum.canonicalize();
        Ok(sum)
    }

    fn push(&mut self, coeff: C64, string: PauliString) -> Result<()> {
        if string.len() != self.sites {
            return Err(Error::Usage(format!(
                "string length {} does not match operator size {}",
                string.len(),
                self.sites
            )));
        }
        let (phase, bare) = string.split_phase();
        self.terms.push((coeff * phase, bare));
        Ok(())
    }

    pub fn add_term(&mut self, coeff: C64, string: PauliString) -> Result<()> {
        self.push(coeff, string)?;
        self.canonicalize();
        Ok(())
    }

    fn canonicalize(&mut self) {
        self.terms.sort_by(|a, b| a.1.letters.cmp(&b.1.letters));
        let mut merged: Vec<(C64, PauliString)> = Vec::with_capacity(self.terms.len());
        for (c, s) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((mc, ms)) if ms.letters == s.letters => *mc += c,
                _ => merged.push((c, s)),
            }
        }
        merged.retain(|(c, _)| c.norm() >= COEFF_EPS);
        self.terms = merged;
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn terms(&self) -> &[(C64, PauliString)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Upper bound on the spectral norm: sum of |coefficients| (each string is
    /// unitary).
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm()).sum()
    }

    pub fn scale(&self, factor: C64) -> OperatorSum {
        OperatorSum {
            sites: self.sites,
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| (c * factor).norm() >= COEFF_EPS)
                .map(|(c, s)| (c * factor, s.clone()))
                .collect(),
        }
    }

    pub fn add(&self, rhs: &OperatorSum) -> Result<OperatorSum> {
        if self.sites != rhs.sites {
            return Err(Error::Usage(format!(
                "length mismatch: {} vs {}",
                self.sites, rhs.sites
            )));
        }
        OperatorSum::from_terms(
            self.sites,
            self.terms.iter().chain(rhs.terms.iter()).cloned(),
        )
    }

    pub fn product(&self, rhs: &OperatorSum) -> Result<OperatorSum> {
        if self.sites != rhs.sites {
            return Err(Error::Usage(format!(
                "length mismatch: {} vs {}",
                self.sites, rhs.sites
            )));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ca, sa) in &self.terms {
            for (cb, sb) in &rhs.terms {
                terms.push((ca * cb, sa.multiply(sb)?));
            }
        }
        OperatorSum::from_terms(self.sites, terms)
    }

    /// Symbolic commutator [self, rhs].
    pub fn commutator(&self, rhs: &OperatorSum) -> Result<OperatorSum> {
        let ab = self.product(rhs)?;
        let ba = rhs.product(self)?;
        ab.add(&ba.scale(C64::new(-1.0, 0.0)))
    }

    /// True iff the symbolic commutator cancels exactly.
    pub fn commutes(&self, rhs: &OperatorSum) -> Result<bool> {
        Ok(self.commutator(rhs)?.is_zero())
    }

    /// Apply to a state vector: `out += sum |psi>`. Lengths must be 2^sites.
    pub fn apply_to(&self, psi: &[C64], out: &mut [C64]) {
        debug_assert_eq!(psi.len(), 1usize << self.sites);
        debug_assert_eq!(out.len(), psi.len());
        for (coeff, string) in &self.terms {
            let action = string.basis_action();
            for (col, amp) in psi.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                out[col ^ action.flip_mask] += coeff * action.factor(col) * amp;
            }
        }
    }

    /// Dense matrix under the declared basis ordering.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        if self.sites > DENSE_SITE_CAP {
            return Err(Error::Capacity(format!(
                "dense form limited to {DENSE_SITE_CAP} sites, got {}",
                self.sites
            )));
        }
        let dim = 1usize << self.sites;
        let mut entries = Array2::zeros((dim, dim));
        for (coeff, string) in &self.terms {
            let action = string.basis_action();
            for col in 0..dim {
                entries[[col ^ action.flip_mask, col]] += coeff * action.factor(col);
            }
        }
        Ok(DenseOperator { sites: self.sites, entries })
    }
}

/// Dense complex matrix on 2^sites dimensions, row-major, basis index
/// b = Σ bit_k 2^{N−k} with bit_k = 0 ↔ |+>_k and spin 1 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    sites: usize,
    entries: Array2<C64>,
}

impl DenseOperator {
    pub fn new(sites: usize, entries: Array2<C64>) -> Result<Self> {
        if sites > DENSE_SITE_CAP {
            return Err(Error::Capacity(format!(
                "dense form limited to {DENSE_SITE_CAP} sites, got {sites}"
            )));
        }
        let dim = 1usize << sites;
        if entries.dim() != (dim, dim) {
            return Err(Error::Usage(format!(
                "matrix shape {:?} does not match 2^{sites}",
                entries.dim()
            )));
        }
        Ok(DenseOperator { sites, entries })
    }

    pub fn identity(sites: usize) -> Result<Self> {
        let dim = 1usize << sites;
        let mut entries = Array2::zeros((dim, dim));
        for i in 0..dim {
            entries[[i, i]] = C64::new(1.0, 0.0);
        }
        DenseOperator::new(sites, entries)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn matmul(&self, rhs: &DenseOperator) -> DenseOperator {
        let dim = self.dim();
        let mut out = Array2::zeros((dim, dim));
        for r in 0..dim {
            for k in 0..dim {
                let a = self.entries[[r, k]];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..dim {
                    out[[r, c]] += a * rhs.entries[[k, c]];
                }
            }
        }
        DenseOperator { sites: self.sites, entries: out }
    }

    pub fn dagger(&self) -> DenseOperator {
        let mut t = self.entries.t().to_owned();
        t.mapv_inplace(|z| z.conj());
        DenseOperator { sites: self.sites, entries: t }
    }

    pub fn max_abs_diff(&self, rhs: &DenseOperator) -> f64 {
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        for r in 0..dim {
            for c in r..dim {
                if (self.entries[[r, c]] - self.entries[[c, r]].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// max |U†U − 1|, zero for unitary matrices.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.dagger().matmul(self);
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let expect = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((prod.entries[[r, c]] - expect).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PauliLetter::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn single_site_products() {
        // X·Y = iZ
        let x = PauliString::single(1, 1, X).unwrap();
        let y = PauliString::single(1, 1, Y).unwrap();
        let xy = pauli_multiply(&x, &y).unwrap();
        assert_eq!(xy.letters(), &[Z]);
        assert_eq!(xy.phase(), c(0.0, 1.0));
    }

    #[test]
    fn identity_leaves_string_unchanged() {
        let s = PauliString::from_letters(vec![X, Y, Z, I]);
        let id = PauliString::identity(4);
        assert_eq!(pauli_multiply(&id, &s).unwrap(), s);
        assert_eq!(pauli_multiply(&s, &id).unwrap(), s);
    }

    #[test]
    fn xx_times_yy_is_minus_zz() {
        // (XX)·(YY) = (iZ)(iZ) = −ZZ, verified against the dense 4x4 product.
        let xx = PauliString::uniform(2, X);
        let yy = PauliString::uniform(2, Y);
        let product = pauli_multiply(&xx, &yy).unwrap();
        assert_eq!(product.letters(), &[Z, Z]);
        assert_eq!(product.phase(), c(-1.0, 0.0));

        let dense_prod = xx.to_dense().unwrap().matmul(&yy.to_dense().unwrap());
        assert!(dense_prod.max_abs_diff(&product.to_dense().unwrap()) < 1e-12);
    }

    #[test]
    fn length_mismatch_is_usage_error() {
        let a = PauliString::identity(2);
        let b = PauliString::identity(3);
        assert!(matches!(pauli_multiply(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn dense_single_z() {
        let z = OperatorSum::from_terms(
            1,
            [(c(1.0, 0.0), PauliString::single(1, 1, Z).unwrap())],
        )
        .unwrap();
        let d = z.to_dense().unwrap();
        assert_eq!(d.entries()[[0, 0]], c(1.0, 0.0));
        assert_eq!(d.entries()[[1, 1]], c(-1.0, 0.0));
        assert_eq!(d.entries()[[0, 1]], c(0.0, 0.0));
    }

    #[test]
    fn dense_gamma_xx_matches_hand_kronecker() {
        // γ·XX is γ times the anti-diagonal flip matrix, built here by hand.
        let g = 0.37;
        let sum = OperatorSum::from_terms(
            2,
            [(c(g, 0.0), PauliString::uniform(2, X))],
        )
        .unwrap();
        let d = sum.to_dense().unwrap();
        let mut expect = Array2::zeros((4, 4));
        // kron(X, X) has ones on the anti-diagonal
        for (r, col) in [(0usize, 3usize), (1, 2), (2, 1), (3, 0)] {
            expect[[r, col]] = c(g, 0.0);
        }
        assert!(d.max_abs_diff(&DenseOperator::new(2, expect).unwrap()) < 1e-15);
    }

    #[test]
    fn dense_zero_sum_is_zero_matrix() {
        let zero = OperatorSum::zero(3);
        let d = zero.to_dense().unwrap();
        assert!(d.entries().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn dense_cap_enforced() {
        let sum = OperatorSum::zero(DENSE_SITE_CAP + 1);
        assert!(matches!(sum.to_dense(), Err(Error::Capacity(_))));
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let x = PauliString::single(2, 1, X).unwrap();
        let sum = OperatorSum::from_terms(
            2,
            [
                (c(1.0, 0.0), x.clone()),
                (c(-1.0, 0.0), x.clone()),
                (c(0.5, 0.0), PauliString::single(2, 2, Z).unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(sum.terms().len(), 1);
    }

    #[test]
    fn anticommuting_pair_detected() {
        let x = OperatorSum::from_terms(
            1,
            [(c(1.0, 0.0), PauliString::single(1, 1, X).unwrap())],
        )
        .unwrap();
        let z = OperatorSum::from_terms(
            1,
            [(c(1.0, 0.0), PauliString::single(1, 1, Z).unwrap())],
        )
        .unwrap();
        assert!(!x.commutes(&z).unwrap());
        assert!(x.commutes(&x).unwrap());
    }

    #[test]
    fn phase_folds_into_coefficient() {
        // i·(X with phase −i) == X
        let s = PauliString::single(1, 1, X).unwrap().with_phase_pow(3);
        let sum = OperatorSum::from_terms(1, [(c(0.0, 1.0), s)]).unwrap();
        assert_eq!(sum.terms().len(), 1);
        let (coeff, string) = &sum.terms()[0];
        assert!((coeff - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(string.phase_pow(), 0);
    }
}
