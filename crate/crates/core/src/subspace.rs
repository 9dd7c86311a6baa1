//! Enumeration of the 2^{N−1} invariant subspaces, the effective two-level
//! Hamiltonian of each, and embedding of subspace-frame states back into the
//! original N-spin frame.
//!
//! A label is the tuple (ε_2, ..., ε_N) of transformed-frame σ_k^z
//! eigenvalues. In the original frame the corresponding invariant plane is
//! spanned by one computational-basis state and its global spin flip.

use crate::error::{Error, Result};
use crate::model::{CouplingSchedule, FieldSchedule, ScenarioConfig};
use crate::transform::{prefix_xor, prefix_xor_inverse};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const NORM_TOL: f64 = 1e-12;
const DEGENERACY_EPS: f64 = 1e-300;

/// One invariant subspace: ε_k = ±1 for k = 2..=N.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubspaceLabel {
    eps: Vec<i8>,
}

impl SubspaceLabel {
    pub fn new(eps: Vec<i8>) -> Result<Self> {
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::Usage("label entries must be ±1".into()));
        }
        if eps.is_empty() {
            return Err(Error::Usage("label needs at least one entry".into()));
        }
        Ok(SubspaceLabel { eps })
    }

    /// Label from its packed bit form: bit 0 ↔ ε=+1, ε_2 most significant.
    pub fn from_bits(n: usize, bits: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Usage(format!("need at least 2 spins, got {n}")));
        }
        if bits >= 1usize << (n - 1) {
            return Err(Error::Usage(format!(
                "label bits {bits} out of range for {n} spins"
            )));
        }
        let eps = (0..n - 1)
            .map(|i| if bits >> (n - 2 - i) & 1 == 0 { 1 } else { -1 })
            .collect();
        Ok(SubspaceLabel { eps })
    }

    /// All ε = +1 (the subspace holding |+>^⊗N and |−>^⊗N).
    pub fn all_plus(n: usize) -> Result<Self> {
        SubspaceLabel::from_bits(n, 0)
    }

    /// Packed bit form, inverse of [`SubspaceLabel::from_bits`].
    pub fn bits(&self) -> usize {
        self.eps.iter().fold(0usize, |acc, &e| {
            (acc << 1) | if e == 1 { 0 } else { 1 }
        })
    }

    /// ε_k for 1-based spin k in 2..=N.
    pub fn eps(&self, k: usize) -> Result<i8> {
        self.eps
            .get(k.checked_sub(2).ok_or_else(|| {
                Error::Usage(format!("label index starts at spin 2, got {k}"))
            })?)
            .copied()
            .ok_or_else(|| Error::Usage(format!("label has no entry for spin {k}")))
    }

    pub fn entries(&self) -> &[i8] {
        &self.eps
    }

    /// N, the number of spins this label belongs to.
    pub fn system_size(&self) -> usize {
        self.eps.len() + 1
    }

    /// Product of ε over odd sites 3, 5, ..., N (odd N).
    pub fn odd_site_product(&self) -> f64 {
        let n = self.system_size();
        (3..=n)
            .step_by(2)
            .map(|k| self.eps[k - 2] as f64)
            .product()
    }

    /// Product of ε over even sites 2, 4, ..., N (even N).
    pub fn even_site_product(&self) -> f64 {
        let n = self.system_size();
        (2..=n)
            .step_by(2)
            .map(|k| self.eps[k - 2] as f64)
            .product()
    }
}

impl std::fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.eps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if *e == 1 { "+" } else { "-" })?;
        }
        write!(f, ")")
    }
}

/// All 2^{n−1} labels in binary-counting order (ε_2 most significant,
/// +1 ↔ bit 0).
pub fn enumerate_labels(n: usize) -> Result<Vec<SubspaceLabel>> {
    if n < 2 {
        return Err(Error::Usage(format!("need at least 2 spins, got {n}")));
    }
    (0..1usize << (n - 1))
        .map(|bits| SubspaceLabel::from_bits(n, bits))
        .collect()
}

/// The 2×2 block governing one subspace:
/// H_eff = longitudinal·σ^z + transverse_x·σ^x + transverse_y·σ^y + offset·1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    pub longitudinal: f64,
    pub transverse_x: f64,
    pub transverse_y: f64,
    pub offset: f64,
}

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (o, bx, by, c) = (
            self.longitudinal,
            self.transverse_x,
            self.transverse_y,
            self.offset,
        );
        [
            [C64::new(c + o, 0.0), C64::new(bx, -by)],
            [C64::new(bx, by), C64::new(c - o, 0.0)],
        ]
    }

    /// |(Ω, b_x, b_y)|, half the level splitting.
    pub fn field_norm(&self) -> f64 {
        (self.longitudinal * self.longitudinal
            + self.transverse_x * self.transverse_x
            + self.transverse_y * self.transverse_y)
            .sqrt()
    }

    /// Eigenpairs ((E−, v−), (E+, v+)). Fully degenerate blocks return the
    /// convention vectors (1,0), (0,1).
    pub fn eigensystem(&self) -> ((f64, [C64; 2]), (f64, [C64; 2])) {
        let r = self.field_norm();
        let c = self.offset;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        if r < DEGENERACY_EPS {
            return ((c, [one, zero]), (c, [zero, one]));
        }
        let omega = self.longitudinal;
        let trans = C64::new(self.transverse_x, self.transverse_y);
        if trans.norm() < 1e-15 * r {
            // pure longitudinal: eigenvectors are the basis states
            return if omega > 0.0 {
                ((c - r, [zero, one]), (c + r, [one, zero]))
            } else {
                ((c - r, [one, zero]), (c + r, [zero, one]))
            };
        }
        // v+ = (b_x − i b_y, r − Ω), v− = (Ω − r, b_x + i b_y)
        let vp = [trans.conj(), C64::new(r - omega, 0.0)];
        let vm = [C64::new(omega - r, 0.0), trans];
        let np = (vp[0].norm_sqr() + vp[1].norm_sqr()).sqrt();
        let nm = (vm[0].norm_sqr() + vm[1].norm_sqr()).sqrt();
        (
            (c - r, [vm[0] / nm, vm[1] / nm]),
            (c + r, [vp[0] / np, vp[1] / np]),
        )
    }
}

/// Effective two-level Hamiltonian of one subspace at time t.
///
/// Longitudinal part: ω_1 + Σ_{k≥2} ω_k · Π_{k'=2..k} ε_{k'} (cumulative
/// products, O(N)). Odd N adds γ_z·Π_odd to the longitudinal part and gives
/// the σ^y coefficient (−1)^{(N−1)/2}·Π_odd·γ_y; even N folds γ_y into σ^x
/// with sign (−1)^{N/2}·Π_even and turns γ_z·Π_even into a scalar offset.
pub fn effective_field(
    label: &SubspaceLabel,
    fields: &FieldSchedule,
    couplings: &CouplingSchedule,
    t: f64,
) -> Result<EffectiveHamiltonian> {
    let n = label.system_size();
    if fields.len() != n {
        return Err(Error::Usage(format!(
            "label for {n} spins does not match {} field drivers",
            fields.len()
        )));
    }
    let mut omega = fields.omega(1, t)?;
    let mut cumulative = 1.0f64;
    for k in 2..=n {
        cumulative *= label.eps(k)? as f64;
        omega += fields.omega(k, t)? * cumulative;
    }
    let gx = couplings.x.eval(t)?;
    let gy = couplings.y.eval(t)?;
    let gz = couplings.z.eval(t)?;
    if n % 2 == 1 {
        let pi_odd = label.odd_site_product();
        let sign_y = if ((n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(EffectiveHamiltonian {
            longitudinal: omega + gz * pi_odd,
            transverse_x: gx,
            transverse_y: sign_y * pi_odd * gy,
            offset: 0.0,
        })
    } else {
        let pi_even = label.even_site_product();
        let sign_y = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(EffectiveHamiltonian {
            longitudinal: omega,
            transverse_x: gx + sign_y * pi_even * gy,
            transverse_y: 0.0,
            offset: gz * pi_even,
        })
    }
}

/// Original-frame basis pair spanning the invariant plane of a label; the
/// second index is the bitwise complement of the first.
pub fn subspace_basis_pair(label: &SubspaceLabel) -> (usize, usize) {
    let n = label.system_size();
    let rest = label.bits();
    let up = prefix_xor(rest, n);
    let down = prefix_xor(rest | 1usize << (n - 1), n);
    debug_assert_eq!(down, !up & ((1 << n) - 1));
    (up, down)
}

/// Map a normalized two-level amplitude pair into the original N-spin frame:
/// U · (chi ⊗ |ε_2...ε_N>).
pub fn embed(label: &SubspaceLabel, chi: (C64, C64)) -> Result<Vec<C64>> {
    let norm = (chi.0.norm_sqr() + chi.1.norm_sqr()).sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Usage(format!(
            "two-level amplitudes must be normalized, got norm {norm}"
        )));
    }
    let n = label.system_size();
    let (up, down) = subspace_basis_pair(label);
    let mut psi = vec![C64::new(0.0, 0.0); 1usize << n];
    psi[up] = chi.0;
    psi[down] = chi.1;
    Ok(psi)
}

/// Transformed-frame index of the (chi-up, label) basis state; the chi-down
/// partner sits 2^{N−1} above it.
pub fn transformed_index(label: &SubspaceLabel, excited: bool) -> usize {
    let n = label.system_size();
    let rest = label.bits();
    if excited {
        rest | 1usize << (n - 1)
    } else {
        rest
    }
}

/// Which label and effective level a transformed-frame index belongs to.
pub fn label_of_transformed_index(n: usize, index: usize) -> Result<(SubspaceLabel, bool)> {
    let half = 1usize << (n - 1);
    let excited = index & half != 0;
    Ok((SubspaceLabel::from_bits(n, index & (half - 1))?, excited))
}

/// Which label an original-frame basis index belongs to.
pub fn label_of_basis_index(n: usize, index: usize) -> Result<(SubspaceLabel, bool)> {
    label_of_transformed_index(n, prefix_xor_inverse(index, n))
}

/// All 2^N eigenpairs of the static Hamiltonian at time `t`, assembled from
/// the per-label 2×2 diagonalizations. Order: label binary counting, lower
/// eigenvalue first within each label.
pub fn static_spectrum(cfg: &ScenarioConfig, t: f64) -> Result<Vec<(f64, Vec<C64>)>> {
    cfg.validate()?;
    let labels = enumerate_labels(cfg.n)?;
    let mut out = Vec::with_capacity(1usize << cfg.n);
    for label in &labels {
        let eff = effective_field(label, &cfg.fields, &cfg.couplings, t)?;
        let ((e_lo, v_lo), (e_hi, v_hi)) = eff.eigensystem();
        out.push((e_lo, embed(label, (v_lo[0], v_lo[1]))?));
        out.push((e_hi, embed(label, (v_hi[0], v_hi[1]))?));
    }
    Ok(out)
}

/// Compact eigenpair: every eigenvector lives in one invariant plane, so two
/// amplitudes over the label's basis pair describe it fully.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub label_bits: usize,
    pub label: String,
    pub eigenvalue: f64,
    pub basis_up: usize,
    pub basis_down: usize,
    pub amp_up: (f64, f64),
    pub amp_down: (f64, f64),
}

/// The spectrum in the compact per-label form, same order as
/// [`static_spectrum`].
pub fn spectrum_entries(cfg: &ScenarioConfig, t: f64) -> Result<Vec<SpectrumEntry>> {
    cfg.validate()?;
    let labels = enumerate_labels(cfg.n)?;
    let mut out = Vec::with_capacity(1usize << cfg.n);
    for label in &labels {
        let eff = effective_field(label, &cfg.fields, &cfg.couplings, t)?;
        let (up, down) = subspace_basis_pair(label);
        for (e, v) in [eff.eigensystem().0, eff.eigensystem().1] {
            out.push(SpectrumEntry {
                label_bits: label.bits(),
                label: label.to_string(),
                eigenvalue: e,
                basis_up: up,
                basis_down: down,
                amp_up: (v[0].re, v[0].im),
                amp_down: (v[1].re, v[1].im),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CouplingSchedule, FieldSchedule};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn label_enumeration_counts() {
        assert_eq!(enumerate_labels(2).unwrap().len(), 2);
        assert_eq!(
            enumerate_labels(2).unwrap()[0],
            SubspaceLabel::new(vec![1]).unwrap()
        );
        assert_eq!(
            enumerate_labels(2).unwrap()[1],
            SubspaceLabel::new(vec![-1]).unwrap()
        );
        assert_eq!(enumerate_labels(3).unwrap().len(), 4);
        let six = enumerate_labels(6).unwrap();
        assert_eq!(six.len(), 32);
        let distinct: std::collections::HashSet<_> = six.iter().collect();
        assert_eq!(distinct.len(), 32);
    }

    #[test]
    fn label_bits_roundtrip() {
        for n in 2..=7usize {
            for bits in 0..1usize << (n - 1) {
                let label = SubspaceLabel::from_bits(n, bits).unwrap();
                assert_eq!(label.bits(), bits);
                assert_eq!(label.system_size(), n);
            }
        }
    }

    #[test]
    fn three_spin_all_plus_effective_field() {
        // N=3, all ε=+1: Ω = ω1+ω2+ω3+γz, b_x = γx, b_y = −γy
        let label = SubspaceLabel::all_plus(3).unwrap();
        let fields = FieldSchedule::from_constants(&[0.9, 0.5, 0.3]);
        let couplings = CouplingSchedule::constant(0.11, 0.07, 0.05);
        let eff = effective_field(&label, &fields, &couplings, 0.0).unwrap();
        assert!((eff.longitudinal - (0.9 + 0.5 + 0.3 + 0.05)).abs() < 1e-15);
        assert!((eff.transverse_x - 0.11).abs() < 1e-15);
        assert!((eff.transverse_y - (-0.07)).abs() < 1e-15);
        assert_eq!(eff.offset, 0.0);
    }

    #[test]
    fn two_spin_effective_field_matches_pair_form() {
        // N=2: Ω = ω1 + ω2 ε2, b_x = γx − γy ε2, offset = γz ε2
        for (bits, eps) in [(0usize, 1.0f64), (1, -1.0)] {
            let label = SubspaceLabel::from_bits(2, bits).unwrap();
            let fields = FieldSchedule::from_constants(&[1.3, 0.4]);
            let couplings = CouplingSchedule::constant(0.2, 0.1, 0.6);
            let eff = effective_field(&label, &fields, &couplings, 0.0).unwrap();
            assert!((eff.longitudinal - (1.3 + 0.4 * eps)).abs() < 1e-15);
            assert!((eff.transverse_x - (0.2 - 0.1 * eps)).abs() < 1e-15);
            assert_eq!(eff.transverse_y, 0.0);
            assert!((eff.offset - 0.6 * eps).abs() < 1e-15);
        }
    }

    #[test]
    fn free_limit_is_purely_longitudinal() {
        for n in 2..=6usize {
            for label in enumerate_labels(n).unwrap() {
                let fields = FieldSchedule::uniform_constant(n, 0.7);
                let eff = effective_field(
                    &label,
                    &fields,
                    &CouplingSchedule::zero(),
                    0.0,
                )
                .unwrap();
                assert_eq!(eff.transverse_x, 0.0);
                assert_eq!(eff.transverse_y, 0.0);
                assert_eq!(eff.offset, 0.0);
            }
        }
    }

    #[test]
    fn parity_structure() {
        // even N: b_y = 0 for every label; odd N: offset = 0 for every label
        let fields4 = FieldSchedule::from_constants(&[0.9, 0.5, 0.3, 0.2]);
        let fields5 = FieldSchedule::from_constants(&[0.9, 0.5, 0.3, 0.2, 0.1]);
        let couplings = CouplingSchedule::constant(0.3, 0.2, 0.1);
        for label in enumerate_labels(4).unwrap() {
            let eff = effective_field(&label, &fields4, &couplings, 0.0).unwrap();
            assert_eq!(eff.transverse_y, 0.0);
        }
        for label in enumerate_labels(5).unwrap() {
            let eff = effective_field(&label, &fields5, &couplings, 0.0).unwrap();
            assert_eq!(eff.offset, 0.0);
        }
    }

    #[test]
    fn embed_all_plus_subspace() {
        let label = SubspaceLabel::all_plus(4).unwrap();
        let psi = embed(&label, (c(1.0, 0.0), c(0.0, 0.0))).unwrap();
        assert_eq!(psi[0], c(1.0, 0.0));
        assert!(psi[1..].iter().all(|z| z.norm() == 0.0));

        let psi = embed(&label, (c(0.0, 0.0), c(1.0, 0.0))).unwrap();
        assert_eq!(psi[15], c(1.0, 0.0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ghz = embed(&label, (c(s, 0.0), c(s, 0.0))).unwrap();
        assert!((ghz[0].re - s).abs() < 1e-15);
        assert!((ghz[15].re - s).abs() < 1e-15);
    }

    #[test]
    fn embed_rejects_unnormalized() {
        let label = SubspaceLabel::all_plus(3).unwrap();
        assert!(matches!(
            embed(&label, (c(1.0, 0.0), c(0.5, 0.0))),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn basis_pairs_partition_all_indices() {
        for n in 2..=8usize {
            let mut seen = vec![false; 1usize << n];
            for label in enumerate_labels(n).unwrap() {
                let (up, down) = subspace_basis_pair(&label);
                assert_eq!(down, !up & ((1 << n) - 1));
                assert!(!seen[up] && !seen[down]);
                seen[up] = true;
                seen[down] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn all_plus_label_holds_extreme_states() {
        for n in 2..=8usize {
            let label = SubspaceLabel::all_plus(n).unwrap();
            let (up, down) = subspace_basis_pair(&label);
            assert_eq!(up, 0);
            assert_eq!(down, (1usize << n) - 1);
        }
    }

    #[test]
    fn eigensystem_degenerate_convention() {
        let eff = EffectiveHamiltonian {
            longitudinal: 0.0,
            transverse_x: 0.0,
            transverse_y: 0.0,
            offset: 0.4,
        };
        let ((e0, v0), (e1, v1)) = eff.eigensystem();
        assert_eq!(e0, 0.4);
        assert_eq!(e1, 0.4);
        assert_eq!(v0, [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(v1, [c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn eigensystem_matches_matrix() {
        let eff = EffectiveHamiltonian {
            longitudinal: 0.35,
            transverse_x: -0.2,
            transverse_y: 0.7,
            offset: 0.1,
        };
        let m = eff.matrix();
        for (e, v) in [eff.eigensystem().0, eff.eigensystem().1] {
            let hv0 = m[0][0] * v[0] + m[0][1] * v[1];
            let hv1 = m[1][0] * v[0] + m[1][1] * v[1];
            assert!((hv0 - v[0] * e).norm() < 1e-12);
            assert!((hv1 - v[1] * e).norm() < 1e-12);
        }
    }
}
