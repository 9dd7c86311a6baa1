//! Time-dependent propagation: per-subspace two-level integration, the full
//! sparse N-spin propagator assembled from 2^{N−1} independent 2×2 blocks,
//! density-matrix evolution, projective measurement, and the analytic
//! Rabi/detuning formulas for rotating couplings.

use crate::error::{Error, Result};
use crate::model::{FieldSchedule, ScenarioConfig};
use crate::pauli::DenseOperator;
use crate::subspace::{
    effective_field, enumerate_labels, EffectiveHamiltonian, SubspaceLabel,
};
use crate::transform::{chain_unitary, ChainUnitary};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const DENSITY_SITE_CAP: usize = 8;
pub const BLOCK_UNITARITY_TOL: f64 = 1e-10;
pub const IMPOSSIBLE_OUTCOME_EPS: f64 = 1e-14;

/// Two-level amplitudes (chi_up, chi_down) of one subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub up: C64,
    pub down: C64,
}

impl TwoLevelState {
    pub fn up() -> Self {
        TwoLevelState { up: C64::new(1.0, 0.0), down: C64::new(0.0, 0.0) }
    }

    pub fn down() -> Self {
        TwoLevelState { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// Population of the flipped level.
    pub fn transition_probability(&self) -> f64 {
        self.down.norm_sqr()
    }
}

/// Integration scheme for the two-level problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact exponential of the midpoint-sampled Hamiltonian per step;
    /// unitary by construction.
    MidpointExponential,
    /// Classic fourth-order Runge–Kutta, retained for cross-validation.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    pub method: Method,
    /// Substeps per shortest dynamical period (2π over the scenario's
    /// frequency bound).
    pub steps_per_period: u32,
    pub norm_tolerance: f64,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            method: Method::MidpointExponential,
            steps_per_period: 256,
            norm_tolerance: 1e-8,
        }
    }
}

impl PropagatorOptions {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period == 0 {
            return Err(Error::Usage("steps per period must be positive".into()));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::Usage("norm tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Substep count for one integration interval, derived from the scenario's
/// dynamical frequency bound. The decomposed engine and the dense oracle use
/// this same rule so their step grids coincide.
pub fn substeps_for(
    cfg: &ScenarioConfig,
    opts: &PropagatorOptions,
    t0: f64,
    t1: f64,
) -> usize {
    let span = t1 - t0;
    if span <= 0.0 {
        return 1;
    }
    let freq = cfg.dynamical_frequency_bound();
    if freq <= 0.0 {
        return 1;
    }
    let h = TAU / freq / opts.steps_per_period as f64;
    (span / h).ceil().max(1.0) as usize
}

/// 2×2 complex block, row major.
pub type Block2 = [[C64; 2]; 2];

pub const BLOCK_IDENTITY: Block2 = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
];

pub fn block_mul(a: &Block2, b: &Block2) -> Block2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn block_apply(b: &Block2, s: &TwoLevelState) -> TwoLevelState {
    TwoLevelState {
        up: b[0][0] * s.up + b[0][1] * s.down,
        down: b[1][0] * s.up + b[1][1] * s.down,
    }
}

/// max |B†B − 1|.
pub fn block_unitarity_defect(b: &Block2) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                acc += b[k][r].conj() * b[k][c];
            }
            let expect = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

/// exp(−i h H) for H = offset·1 + Ω σ^z + b_x σ^x + b_y σ^y, exactly.
pub fn block_exponential(eff: &EffectiveHamiltonian, h: f64) -> Block2 {
    let r = eff.field_norm();
    let phase = C64::new(0.0, -eff.offset * h).exp();
    if r == 0.0 {
        return [
            [phase, C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), phase],
        ];
    }
    let (s, c) = (r * h).sin_cos();
    let sinc = s / r;
    let i = C64::new(0.0, 1.0);
    let omega = eff.longitudinal;
    let trans = C64::new(eff.transverse_x, eff.transverse_y);
    [
        [
            phase * (C64::new(c, 0.0) - i * sinc * omega),
            phase * (-i * sinc * trans.conj()),
        ],
        [
            phase * (-i * sinc * trans),
            phase * (C64::new(c, 0.0) + i * sinc * omega),
        ],
    ]
}

fn rk4_step<F>(f: &mut F, t: f64, h: f64, s: &TwoLevelState) -> Result<TwoLevelState>
where
    F: FnMut(f64) -> Result<EffectiveHamiltonian>,
{
    let deriv = |eff: &EffectiveHamiltonian, s: &TwoLevelState| {
        let m = eff.matrix();
        let i = C64::new(0.0, 1.0);
        TwoLevelState {
            up: -i * (m[0][0] * s.up + m[0][1] * s.down),
            down: -i * (m[1][0] * s.up + m[1][1] * s.down),
        }
    };
    let add = |a: &TwoLevelState, b: &TwoLevelState, w: f64| TwoLevelState {
        up: a.up + b.up * w,
        down: a.down + b.down * w,
    };
    let h0 = f(t)?;
    let hm = f(t + 0.5 * h)?;
    let h1 = f(t + h)?;
    let k1 = deriv(&h0, s);
    let k2 = deriv(&hm, &add(s, &k1, 0.5 * h));
    let k3 = deriv(&hm, &add(s, &k2, 0.5 * h));
    let k4 = deriv(&h1, &add(s, &k3, h));
    Ok(TwoLevelState {
        up: s.up + (k1.up + (k2.up + k3.up) * 2.0 + k4.up) * (h / 6.0),
        down: s.down + (k1.down + (k2.down + k3.down) * 2.0 + k4.down) * (h / 6.0),
    })
}

/// Propagator block for an arbitrary time-dependent 2×2 Hamiltonian over
/// [t0, t1] with a fixed substep count.
pub fn block_propagator<F>(
    mut h_of_t: F,
    t0: f64,
    t1: f64,
    substeps: usize,
    method: Method,
) -> Result<Block2>
where
    F: FnMut(f64) -> Result<EffectiveHamiltonian>,
{
    let m = substeps.max(1);
    let h = (t1 - t0) / m as f64;
    let mut u = BLOCK_IDENTITY;
    match method {
        Method::MidpointExponential => {
            for s in 0..m {
                let tm = t0 + (s as f64 + 0.5) * h;
                let step = block_exponential(&h_of_t(tm)?, h);
                u = block_mul(&step, &u);
            }
        }
        Method::Rk4 => {
            // integrate both basis columns
            let mut c0 = TwoLevelState::up();
            let mut c1 = TwoLevelState::down();
            for s in 0..m {
                let t = t0 + s as f64 * h;
                c0 = rk4_step(&mut h_of_t, t, h, &c0)?;
                c1 = rk4_step(&mut h_of_t, t, h, &c1)?;
            }
            u = [[c0.up, c1.up], [c0.down, c1.down]];
        }
    }
    Ok(u)
}

/// Solve i d/dt chi = H_eff(t) chi inside one subspace over the scenario's
/// output grid; returns the state at every grid point.
pub fn propagate_two_level(
    label: &SubspaceLabel,
    cfg: &ScenarioConfig,
    psi0: &TwoLevelState,
    opts: &PropagatorOptions,
) -> Result<Vec<(f64, TwoLevelState)>> {
    opts.validate()?;
    if (psi0.norm_sqr().sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::Usage(format!(
            "initial two-level state must be normalized, got norm {}",
            psi0.norm_sqr().sqrt()
        )));
    }
    let times = cfg.time.times();
    let mut out = Vec::with_capacity(times.len());
    let mut state = *psi0;
    let mut max_drift = 0.0f64;
    out.push((times[0], state));
    for pair in times.windows(2) {
        let substeps = substeps_for(cfg, opts, pair[0], pair[1]);
        let block = block_propagator(
            |t| effective_field(label, &cfg.fields, &cfg.couplings, t),
            pair[0],
            pair[1],
            substeps,
            opts.method,
        )?;
        state = block_apply(&block, &state);
        max_drift = max_drift.max((state.norm_sqr() - 1.0).abs());
        out.push((pair[1], state));
    }
    if max_drift > opts.norm_tolerance {
        return Err(Error::Numerical(format!(
            "norm drift {max_drift:.3e} exceeds tolerance {:.3e} in subspace {label}",
            opts.norm_tolerance
        )));
    }
    Ok(out)
}

/// Transition probability of the standard Rabi problem:
/// P(t) = γ²/(γ²+Δ²) · sin²(ω_R t / 2), ω_R = √(Δ²+γ²), ħ = 1.
pub fn rabi_probability(gamma: f64, delta: f64, t: f64) -> f64 {
    let w2 = gamma * gamma + delta * delta;
    if w2 == 0.0 {
        return 0.0;
    }
    let s = (0.5 * w2.sqrt() * t).sin();
    gamma * gamma / w2 * s * s
}

/// Detuning of one subspace under couplings rotating at ν (odd N, static
/// fields): Δ = Ω_label + s·ν, with s the co-rotation sense of the effective
/// transverse field (opposite to the σ^y coefficient sign of the subspace).
/// The selected subspace is the one with Δ = 0.
pub fn detuning(
    label: &SubspaceLabel,
    fields: &FieldSchedule,
    nu: f64,
    n: usize,
) -> Result<f64> {
    if n % 2 == 0 {
        return Err(Error::Usage(
            "detuning is defined for odd spin counts; the even case has no \
             rotating effective field"
                .into(),
        ));
    }
    if label.system_size() != n || fields.len() != n {
        return Err(Error::Usage("label/fields size mismatch".into()));
    }
    let mut omega = constant_of(fields, 1)?;
    let mut cumulative = 1.0f64;
    for k in 2..=n {
        cumulative *= label.eps(k)? as f64;
        omega += constant_of(fields, k)? * cumulative;
    }
    let sign_y = if ((n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let sense = -sign_y * label.odd_site_product();
    Ok(omega + sense * nu)
}

fn constant_of(fields: &FieldSchedule, k: usize) -> Result<f64> {
    fields.drivers()[k - 1].constant_value().ok_or_else(|| {
        Error::Usage(format!(
            "detuning analysis requires constant fields; spin {k} is time-dependent"
        ))
    })
}

/// V = U · (⊕_label v_label) · U†: one 2×2 unitary per subspace plus the
/// chain permutation; exactly two nonzero entries per row.
#[derive(Debug, Clone)]
pub struct SparsePropagator {
    n: usize,
    blocks: Vec<Block2>,
    chain: ChainUnitary,
}

impl SparsePropagator {
    pub fn identity(n: usize) -> Result<Self> {
        Ok(SparsePropagator {
            n,
            blocks: vec![BLOCK_IDENTITY; 1usize << (n - 1)],
            chain: chain_unitary(n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block2] {
        &self.blocks
    }

    pub fn block(&self, label: &SubspaceLabel) -> &Block2 {
        &self.blocks[label.bits()]
    }

    /// Apply to an original-frame state vector.
    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        let dim = 1usize << self.n;
        if psi.len() != dim {
            return Err(Error::Usage(format!(
                "state length {} does not match {} spins",
                psi.len(),
                self.n
            )));
        }
        let mut work = vec![C64::new(0.0, 0.0); dim];
        self.chain.apply_dagger(psi, &mut work);
        let half = dim / 2;
        for rest in 0..half {
            let b = &self.blocks[rest];
            let (a, d) = (work[rest], work[rest + half]);
            work[rest] = b[0][0] * a + b[0][1] * d;
            work[rest + half] = b[1][0] * a + b[1][1] * d;
        }
        let mut out = vec![C64::new(0.0, 0.0); dim];
        self.chain.apply(&work, &mut out);
        Ok(out)
    }

    /// Composition self ∘ earlier (earlier acts first).
    pub fn compose(&self, earlier: &SparsePropagator) -> Result<SparsePropagator> {
        if self.n != earlier.n {
            return Err(Error::Usage("propagator size mismatch".into()));
        }
        Ok(SparsePropagator {
            n: self.n,
            blocks: self
                .blocks
                .iter()
                .zip(earlier.blocks.iter())
                .map(|(a, b)| block_mul(a, b))
                .collect(),
            chain: self.chain.clone(),
        })
    }

    /// Dense form, for verification at small N.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let dim = 1usize << self.n;
        let mut entries = Array2::zeros((dim, dim));
        for col in 0..dim {
            let mut basis = vec![C64::new(0.0, 0.0); dim];
            basis[col] = C64::new(1.0, 0.0);
            for (row, amp) in self.apply(&basis)?.into_iter().enumerate() {
                entries[[row, col]] = amp;
            }
        }
        DenseOperator::new(self.n, entries)
    }
}

/// Integrate every subspace over [t0, t1] and assemble the sparse N-spin
/// propagator. Blocks are independent and integrated in parallel; the result
/// is identical to sequential evaluation.
pub fn assemble_propagator(
    cfg: &ScenarioConfig,
    t0: f64,
    t1: f64,
    opts: &PropagatorOptions,
) -> Result<SparsePropagator> {
    cfg.validate()?;
    opts.validate()?;
    if t1 < t0 {
        return Err(Error::Usage(format!(
            "propagation interval must have t1 >= t0, got [{t0}, {t1}]"
        )));
    }
    let labels = enumerate_labels(cfg.n)?;
    let substeps = substeps_for(cfg, opts, t0, t1);
    let blocks: Vec<Block2> = labels
        .par_iter()
        .map(|label| -> Result<Block2> {
            let block = block_propagator(
                |t| effective_field(label, &cfg.fields, &cfg.couplings, t),
                t0,
                t1,
                substeps,
                opts.method,
            )
            .map_err(|e| {
                Error::Numerical(format!("subspace {label}: {e}"))
            })?;
            let defect = block_unitarity_defect(&block);
            if defect > BLOCK_UNITARITY_TOL {
                return Err(Error::Numerical(format!(
                    "subspace {label}: block unitarity defect {defect:.3e} exceeds {BLOCK_UNITARITY_TOL:.1e}"
                )));
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparsePropagator { n: cfg.n, blocks, chain: chain_unitary(cfg.n)? })
}

/// 2^N Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    entries: Array2<C64>,
}

pub const DENSITY_TRACE_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn new(n: usize, entries: Array2<C64>) -> Result<Self> {
        if n > DENSITY_SITE_CAP {
            return Err(Error::Capacity(format!(
                "dense density matrices limited to {DENSITY_SITE_CAP} sites, got {n}"
            )));
        }
        let dim = 1usize << n;
        if entries.dim() != (dim, dim) {
            return Err(Error::Usage(format!(
                "density matrix shape {:?} does not match 2^{n}",
                entries.dim()
            )));
        }
        let rho = DensityMatrix { n, entries };
        rho.check()?;
        Ok(rho)
    }

    fn check(&self) -> Result<()> {
        let dim = self.dim();
        let mut trace = 0.0;
        for i in 0..dim {
            let d = self.entries[[i, i]];
            if d.im.abs() > DENSITY_TRACE_TOL || d.re < -DENSITY_TRACE_TOL {
                return Err(Error::Numerical(format!(
                    "density diagonal entry {i} is {d}, not a probability"
                )));
            }
            trace += d.re;
            for j in (i + 1)..dim {
                if (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm() > 1e-9 {
                    return Err(Error::Numerical(
                        "density matrix is not Hermitian".into(),
                    ));
                }
            }
        }
        if (trace - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::Numerical(format!(
                "density trace {trace} deviates from 1"
            )));
        }
        Ok(())
    }

    /// Pure-state projector |psi><psi|.
    pub fn pure(n: usize, psi: &[C64]) -> Result<Self> {
        let dim = 1usize << n;
        if psi.len() != dim {
            return Err(Error::Usage("state length mismatch".into()));
        }
        let mut entries = Array2::zeros((dim, dim));
        for r in 0..dim {
            for c in 0..dim {
                entries[[r, c]] = psi[r] * psi[c].conj();
            }
        }
        DensityMatrix::new(n, entries)
    }

    /// Diagonal mixture over computational-basis states.
    pub fn diagonal_mixture(n: usize, weights: &[(usize, f64)]) -> Result<Self> {
        let dim = 1usize << n;
        let mut entries = Array2::zeros((dim, dim));
        for &(index, w) in weights {
            if index >= dim {
                return Err(Error::Usage(format!("mixture index {index} out of range")));
            }
            entries[[index, index]] += C64::new(w, 0.0);
        }
        DensityMatrix::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[[i, i]].re).sum()
    }

    /// Diagonal element, the population of one basis state.
    pub fn population(&self, index: usize) -> f64 {
        self.entries[[index, index]].re
    }
}

/// ρ(t1) = V ρ(t0) V† through the sparse propagator structure.
pub fn evolve_density(rho0: &DensityMatrix, prop: &SparsePropagator) -> Result<DensityMatrix> {
    if rho0.n() != prop.n() {
        return Err(Error::Usage("density/propagator size mismatch".into()));
    }
    let dim = rho0.dim();
    let half = dim / 2;
    let chain = &prop.chain;
    // transformed frame: rho_t[r, c] = rho[perm(r), perm(c)]
    let mut work = Array2::zeros((dim, dim));
    let perm: Vec<usize> = (0..dim)
        .map(|i| chain.permute_index(i).expect("index in range"))
        .collect();
    for r in 0..dim {
        for c in 0..dim {
            work[[r, c]] = rho0.entries()[[perm[r], perm[c]]];
        }
    }
    // left-multiply by the block diagonal
    for rest in 0..half {
        let b = &prop.blocks[rest];
        for c in 0..dim {
            let (x, y) = (work[[rest, c]], work[[rest + half, c]]);
            work[[rest, c]] = b[0][0] * x + b[0][1] * y;
            work[[rest + half, c]] = b[1][0] * x + b[1][1] * y;
        }
    }
    // right-multiply by the adjoint
    for rest in 0..half {
        let b = &prop.blocks[rest];
        for r in 0..dim {
            let (x, y) = (work[[r, rest]], work[[r, rest + half]]);
            work[[r, rest]] = x * b[0][0].conj() + y * b[0][1].conj();
            work[[r, rest + half]] = x * b[1][0].conj() + y * b[1][1].conj();
        }
    }
    // back to the original frame
    let mut out = Array2::zeros((dim, dim));
    for r in 0..dim {
        for c in 0..dim {
            out[[perm[r], perm[c]]] = work[[r, c]];
        }
    }
    DensityMatrix::new(rho0.n(), out).map_err(|e| {
        Error::Numerical(format!("density evolution broke an invariant: {e}"))
    })
}

/// Projectively measure σ^z of one spin (1-based). Returns the outcome
/// probability and the renormalized post-measurement state; outcomes with
/// probability below 1e-14 signal `ImpossibleOutcome` instead of dividing.
pub fn measure_and_project(
    rho: &DensityMatrix,
    spin: usize,
    outcome: i8,
) -> Result<(f64, DensityMatrix)> {
    let n = rho.n();
    if spin == 0 || spin > n {
        return Err(Error::Usage(format!("spin {spin} out of range 1..={n}")));
    }
    if outcome != 1 && outcome != -1 {
        return Err(Error::Usage(format!("outcome must be ±1, got {outcome}")));
    }
    let dim = rho.dim();
    let bit = 1usize << (n - spin);
    let want = if outcome == 1 { 0 } else { bit };
    let matches = |i: usize| i & bit == want;
    let probability: f64 = (0..dim)
        .filter(|&i| matches(i))
        .map(|i| rho.entries()[[i, i]].re)
        .sum();
    if probability < IMPOSSIBLE_OUTCOME_EPS {
        return Err(Error::ImpossibleOutcome { probability });
    }
    let mut entries = Array2::zeros((dim, dim));
    let scale = C64::new(1.0 / probability, 0.0);
    for r in (0..dim).filter(|&r| matches(r)) {
        for c in (0..dim).filter(|&c| matches(c)) {
            entries[[r, c]] = rho.entries()[[r, c]] * scale;
        }
    }
    Ok((probability, DensityMatrix::new(n, entries)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        CouplingSchedule, Driver, FieldSchedule, InitialState, TimeGrid,
    };
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scenario(
        n: usize,
        fields: FieldSchedule,
        couplings: CouplingSchedule,
        t1: f64,
        steps: usize,
    ) -> ScenarioConfig {
        ScenarioConfig {
            n,
            fields,
            couplings,
            time: TimeGrid::new(0.0, t1, steps),
            initial: InitialState::Basis { index: 0 },
        }
    }

    #[test]
    fn stationary_state_stays_put() {
        // H_eff = Ω σ^z, chi0 = (1,0): amplitude e^{−iΩt}, no transition.
        let omega = 1.37;
        let cfg = scenario(
            3,
            FieldSchedule::from_constants(&[omega, 0.0, 0.0]),
            CouplingSchedule::zero(),
            2.0,
            16,
        );
        let label = SubspaceLabel::all_plus(3).unwrap();
        let traj = propagate_two_level(
            &label,
            &cfg,
            &TwoLevelState::up(),
            &PropagatorOptions::default(),
        )
        .unwrap();
        for (t, s) in &traj {
            assert!(s.transition_probability() < 1e-28);
            let expect = c(0.0, -omega * t).exp();
            assert!((s.up - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn transverse_drive_inverts_at_quarter_period() {
        // H_eff = γ σ^x: P(t) = sin²(γ t), inversion at t = π/(2γ).
        let gamma = 0.8;
        let t_inv = PI / (2.0 * gamma);
        let cfg = scenario(
            2,
            FieldSchedule::from_constants(&[0.0, 0.0]),
            CouplingSchedule::constant(gamma, 0.0, 0.0),
            t_inv,
            32,
        );
        let label = SubspaceLabel::all_plus(2).unwrap();
        let traj = propagate_two_level(
            &label,
            &cfg,
            &TwoLevelState::up(),
            &PropagatorOptions::default(),
        )
        .unwrap();
        for (t, s) in &traj {
            let expect = (gamma * t).sin().powi(2);
            assert!((s.transition_probability() - expect).abs() < 1e-10);
        }
        assert!((traj.last().unwrap().1.transition_probability() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rk4_agrees_with_midpoint() {
        let cfg = scenario(
            2,
            FieldSchedule::new(vec![
                Driver::Cosine { amplitude: 0.9, angular_frequency: 2.0, phase: 0.1 },
                Driver::constant(0.4),
            ]),
            CouplingSchedule::constant(0.5, 0.2, 0.1),
            3.0,
            8,
        );
        let label = SubspaceLabel::from_bits(2, 1).unwrap();
        let mut opts = PropagatorOptions {
            steps_per_period: 1024,
            ..PropagatorOptions::default()
        };
        let a = propagate_two_level(&label, &cfg, &TwoLevelState::up(), &opts).unwrap();
        opts.method = Method::Rk4;
        let b = propagate_two_level(&label, &cfg, &TwoLevelState::up(), &opts).unwrap();
        for ((_, sa), (_, sb)) in a.iter().zip(b.iter()) {
            assert!((sa.up - sb.up).norm() < 1e-6);
            assert!((sa.down - sb.down).norm() < 1e-6);
        }
    }

    #[test]
    fn rabi_formula_values() {
        let gamma = 0.7;
        assert_eq!(rabi_probability(gamma, 0.0, 0.0), 0.0);
        assert!((rabi_probability(gamma, 0.0, PI / gamma) - 1.0).abs() < 1e-12);
        // Δ = γ, t = π/(√2 γ): P = 1/2 · sin²(π/2) = 1/2
        let t = PI / (2.0f64.sqrt() * gamma);
        assert!((rabi_probability(gamma, gamma, t) - 0.5).abs() < 1e-12);
        assert_eq!(rabi_probability(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn rabi_matches_rotating_drive_propagation() {
        // H(t) = (ω0/2) σ^z + (γ/2)(cos νt σ^x + sin νt σ^y) propagated
        // numerically must match the closed form with Δ = ω0 − ν.
        let gamma: f64 = 1.0;
        let omega0 = 2.0 * gamma;
        for delta in [0.0, gamma, 3.0 * gamma] {
            let nu = omega0 - delta;
            let wr = (delta * delta + gamma * gamma).sqrt();
            let t_end = 4.0 * PI / wr;
            let substeps = 400_000;
            let block = block_propagator(
                |t| {
                    Ok(EffectiveHamiltonian {
                        longitudinal: omega0 / 2.0,
                        transverse_x: gamma / 2.0 * (nu * t).cos(),
                        transverse_y: gamma / 2.0 * (nu * t).sin(),
                        offset: 0.0,
                    })
                },
                0.0,
                t_end,
                substeps,
                Method::MidpointExponential,
            )
            .unwrap();
            let final_p = block_apply(&block, &TwoLevelState::up()).transition_probability();
            let expect = rabi_probability(gamma, delta, t_end);
            assert!(
                (final_p - expect).abs() < 1e-6,
                "delta={delta}: {final_p} vs {expect}"
            );
        }
    }

    #[test]
    fn detuning_resonance_and_signs() {
        let n = 3;
        let fields = FieldSchedule::from_constants(&[5.0, 4.0, 3.0]);
        let total: f64 = 12.0;
        let all_plus = SubspaceLabel::all_plus(n).unwrap();
        // paper's prescription for three spins: ν = −Σω selects the all-plus
        // subspace
        let d = detuning(&all_plus, &fields, -total, n).unwrap();
        assert!(d.abs() < 1e-12);
        // ν = 0 leaves the bare splitting
        let d0 = detuning(&all_plus, &fields, 0.0, n).unwrap();
        assert!((d0 - total).abs() < 1e-12);
        // every other label is detuned
        for label in enumerate_labels(n).unwrap().iter().skip(1) {
            let dk = detuning(label, &fields, -total, n).unwrap();
            assert!(dk.abs() > 1.0, "label {label} unexpectedly resonant");
        }
    }

    #[test]
    fn detuning_rejects_even_n() {
        let fields = FieldSchedule::from_constants(&[1.0, 2.0, 3.0, 4.0]);
        let label = SubspaceLabel::all_plus(4).unwrap();
        assert!(matches!(
            detuning(&label, &fields, 1.0, 4),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn zero_hamiltonian_gives_identity_propagator() {
        let cfg = scenario(
            3,
            FieldSchedule::from_constants(&[0.0, 0.0, 0.0]),
            CouplingSchedule::zero(),
            1.0,
            4,
        );
        let prop = assemble_propagator(&cfg, 0.0, 1.0, &PropagatorOptions::default())
            .unwrap();
        let ident = SparsePropagator::identity(3).unwrap();
        assert!(
            prop.to_dense()
                .unwrap()
                .max_abs_diff(&ident.to_dense().unwrap())
                < 1e-14
        );
    }

    #[test]
    fn propagator_rows_have_two_nonzeros() {
        let cfg = scenario(
            3,
            FieldSchedule::from_constants(&[0.9, 0.5, 0.3]),
            CouplingSchedule::constant(0.4, 0.2, 0.1),
            1.5,
            4,
        );
        let prop = assemble_propagator(&cfg, 0.0, 1.5, &PropagatorOptions::default())
            .unwrap();
        let dense = prop.to_dense().unwrap();
        for r in 0..8 {
            let nonzeros = (0..8)
                .filter(|&c| dense.entries()[[r, c]].norm() > 1e-15)
                .count();
            assert!(nonzeros <= 2);
        }
        assert!(dense.unitarity_defect() < 1e-12);
    }

    #[test]
    fn propagator_composition_group_property() {
        let cfg = scenario(
            3,
            FieldSchedule::new(vec![
                Driver::Cosine { amplitude: 1.0, angular_frequency: 3.0, phase: 0.0 },
                Driver::constant(0.5),
                Driver::constant(0.3),
            ]),
            CouplingSchedule::constant(0.4, 0.0, 0.2),
            2.0,
            4,
        );
        let opts = PropagatorOptions::default();
        let full = assemble_propagator(&cfg, 0.0, 2.0, &opts).unwrap();
        let first = assemble_propagator(&cfg, 0.0, 1.0, &opts).unwrap();
        let second = assemble_propagator(&cfg, 1.0, 2.0, &opts).unwrap();
        let composed = second.compose(&first).unwrap();
        assert!(
            composed
                .to_dense()
                .unwrap()
                .max_abs_diff(&full.to_dense().unwrap())
                < 1e-8
        );
    }

    #[test]
    fn frozen_subspace_bound() {
        // |Δ| = 12γ ≥ 10γ: observed max transition stays below 1.1 × ceiling.
        let gamma = 0.5;
        let delta_rot = 6.0 * gamma; // rotating-frame detuning
        let nu = 8.0 * gamma;
        let omega = delta_rot + nu / 2.0;
        let ceiling = gamma * gamma / (gamma * gamma + delta_rot * delta_rot);
        let t_end = 6.0 * PI / gamma;
        let steps = 4000;
        let mut state = TwoLevelState::up();
        let mut max_p = 0.0f64;
        let h = t_end / steps as f64;
        for s in 0..steps {
            let tm = (s as f64 + 0.5) * h;
            let eff = EffectiveHamiltonian {
                longitudinal: omega,
                transverse_x: gamma * (nu * tm).cos(),
                transverse_y: gamma * (nu * tm).sin(),
                offset: 0.0,
            };
            state = block_apply(&block_exponential(&eff, h), &state);
            max_p = max_p.max(state.transition_probability());
        }
        assert!(max_p <= 1.1 * ceiling, "{max_p} vs ceiling {ceiling}");
        assert!(max_p > 0.1 * ceiling);
    }

    #[test]
    fn density_mixture_and_measurement() {
        let rho = DensityMatrix::diagonal_mixture(
            3,
            &[(0, 0.4), (1, 0.3), (2, 0.2), (3, 0.1)],
        )
        .unwrap();
        // spin 1 is |+> in all four components
        let (p_plus, post) = measure_and_project(&rho, 1, 1).unwrap();
        assert!((p_plus - 1.0).abs() < 1e-12);
        assert!((post.trace() - 1.0).abs() < 1e-12);
        assert!(matches!(
            measure_and_project(&rho, 1, -1),
            Err(Error::ImpossibleOutcome { .. })
        ));
        // spin 3 outcomes split 0.6/0.4
        let (p3p, _) = measure_and_project(&rho, 3, 1).unwrap();
        let (p3m, _) = measure_and_project(&rho, 3, -1).unwrap();
        assert!((p3p - 0.6).abs() < 1e-12);
        assert!((p3p + p3m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_state_measurement_is_projective() {
        let all_minus = 7usize;
        let mut psi = vec![c(0.0, 0.0); 8];
        psi[all_minus] = c(1.0, 0.0);
        let rho = DensityMatrix::pure(3, &psi).unwrap();
        let (p, post) = measure_and_project(&rho, 1, -1).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(post.entries()[[7, 7]].re > 1.0 - 1e-12);
    }

    #[test]
    fn identity_propagator_preserves_density() {
        let rho = DensityMatrix::diagonal_mixture(2, &[(0, 0.7), (3, 0.3)]).unwrap();
        let ident = SparsePropagator::identity(2).unwrap();
        let evolved = evolve_density(&rho, &ident).unwrap();
        assert!(evolved
            .entries()
            .iter()
            .zip(rho.entries().iter())
            .all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn density_evolution_matches_pure_state_evolution() {
        let cfg = scenario(
            2,
            FieldSchedule::from_constants(&[0.9, 0.4]),
            CouplingSchedule::constant(0.5, 0.1, 0.2),
            1.2,
            4,
        );
        let prop = assemble_propagator(&cfg, 0.0, 1.2, &PropagatorOptions::default())
            .unwrap();
        let mut psi = vec![c(0.0, 0.0); 4];
        psi[1] = c(1.0, 0.0);
        let rho = DensityMatrix::pure(2, &psi).unwrap();
        let evolved_rho = evolve_density(&rho, &prop).unwrap();
        let evolved_psi = prop.apply(&psi).unwrap();
        let expect = DensityMatrix::pure(2, &evolved_psi).unwrap();
        assert!(evolved_rho
            .entries()
            .iter()
            .zip(expect.entries().iter())
            .all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
