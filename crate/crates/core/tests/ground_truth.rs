//! Small-case ground truth: the transformed two- and three-spin Hamiltonians
//! against independently hand-built matrices, dense block extraction against
//! the per-subspace effective fields, and the permutation against dense
//! columns. The builders here use their own Kronecker products and never
//! touch the library's dense-assembly path.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selspin_core::model::{
    CouplingSchedule, FieldSchedule, InitialState, ScenarioConfig, TimeGrid,
};
use selspin_core::oracle::random_constant_draw;
use selspin_core::pauli::DenseOperator;
use selspin_core::subspace::{effective_field, enumerate_labels};
use selspin_core::transform::chain_unitary;
use selspin_core::{build_full_hamiltonian, Driver};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn eye() -> Array2<C64> {
    Array2::from_shape_vec((2, 2), vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap()
}

fn sx() -> Array2<C64> {
    Array2::from_shape_vec((2, 2), vec![c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap()
}

fn sy() -> Array2<C64> {
    Array2::from_shape_vec(
        (2, 2),
        vec![c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)],
    )
    .unwrap()
}

fn sz() -> Array2<C64> {
    Array2::from_shape_vec((2, 2), vec![c(1.0), c(0.0), c(0.0), c(-1.0)]).unwrap()
}

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

fn kron_chain(ms: &[&Array2<C64>]) -> Array2<C64> {
    let mut out = ms[0].clone();
    for m in &ms[1..] {
        out = kron(&out, m);
    }
    out
}

fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

struct Draw {
    omegas: Vec<f64>,
    gx: f64,
    gy: f64,
    gz: f64,
}

fn draw(n: usize, rng: &mut ChaCha8Rng) -> Draw {
    Draw {
        omegas: (0..n).map(|_| rng.random_range(-1.5..1.5)).collect(),
        gx: rng.random_range(-1.0..1.0),
        gy: rng.random_range(-1.0..1.0),
        gz: rng.random_range(-1.0..1.0),
    }
}

fn scenario_of(d: &Draw) -> ScenarioConfig {
    ScenarioConfig {
        n: d.omegas.len(),
        fields: FieldSchedule::from_constants(&d.omegas),
        couplings: CouplingSchedule::constant(d.gx, d.gy, d.gz),
        time: TimeGrid::new(0.0, 1.0, 1),
        initial: InitialState::Basis { index: 0 },
    }
}

fn transformed(cfg: &ScenarioConfig) -> DenseOperator {
    let chain = chain_unitary(cfg.n).unwrap();
    let h = build_full_hamiltonian(cfg, 0.0).unwrap().to_dense().unwrap();
    chain.conjugate_dense(&h).unwrap()
}

#[test]
fn two_spin_transformed_hamiltonian_is_exact() {
    // H̃₂ = (ω₁ + ω₂ Z₂) Z₁ + γx X₁ − γy Z₂ X₁ + γz Z₂, entrywise.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let d = draw(2, &mut rng);
        let got = transformed(&scenario_of(&d));
        let i2 = eye();
        let expect = kron_chain(&[&sz(), &i2]).mapv(|v| v * d.omegas[0])
            + kron_chain(&[&sz(), &sz()]).mapv(|v| v * d.omegas[1])
            + kron_chain(&[&sx(), &i2]).mapv(|v| v * d.gx)
            + kron_chain(&[&sx(), &sz()]).mapv(|v| v * -d.gy)
            + kron_chain(&[&i2, &sz()]).mapv(|v| v * d.gz);
        assert!(max_diff(got.entries(), &expect) < 1e-12);
    }
}

#[test]
fn three_spin_transformed_hamiltonian_is_exact() {
    // H̃̃₃ = (ω₁ + ω₂ Z₂ + ω₃ Z₂Z₃) Z₁ + γx X₁ − γy Z₃ Y₁ + γz Z₃ Z₁.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..10 {
        let d = draw(3, &mut rng);
        let got = transformed(&scenario_of(&d));
        let i2 = eye();
        let expect = kron_chain(&[&sz(), &i2, &i2]).mapv(|v| v * d.omegas[0])
            + kron_chain(&[&sz(), &sz(), &i2]).mapv(|v| v * d.omegas[1])
            + kron_chain(&[&sz(), &sz(), &sz()]).mapv(|v| v * d.omegas[2])
            + kron_chain(&[&sx(), &i2, &i2]).mapv(|v| v * d.gx)
            + kron_chain(&[&sy(), &i2, &sz()]).mapv(|v| v * -d.gy)
            + kron_chain(&[&sz(), &i2, &sz()]).mapv(|v| v * d.gz);
        assert!(max_diff(got.entries(), &expect) < 1e-12);
    }
}

#[test]
fn effective_field_matches_dense_blocks() {
    // n = 4, 5: every 2×2 block of U†HU equals effective_field, entrywise.
    let mut worst = 0.0f64;
    for n in [4usize, 5] {
        for draw_idx in 0..20u64 {
            let cfg = random_constant_draw(n, 0xb10c, draw_idx);
            let transformed = transformed(&cfg);
            let half = 1usize << (n - 1);
            for label in enumerate_labels(n).unwrap() {
                let rest = label.bits();
                let eff =
                    effective_field(&label, &cfg.fields, &cfg.couplings, 0.0).unwrap();
                let expect = eff.matrix();
                for i in 0..2 {
                    for j in 0..2 {
                        let got =
                            transformed.entries()[[i * half + rest, j * half + rest]];
                        worst = worst.max((got - expect[i][j]).norm());
                    }
                }
            }
        }
    }
    assert!(worst < 1e-10, "worst block deviation {worst}");
}

#[test]
fn full_hamiltonian_matches_hand_assembled_kronecker() {
    // three random parameter sets on three spins, independent dense build
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..3 {
        let d = draw(3, &mut rng);
        let dense = build_full_hamiltonian(&scenario_of(&d), 0.0)
            .unwrap()
            .to_dense()
            .unwrap();
        let i2 = eye();
        let expect = kron_chain(&[&sz(), &i2, &i2]).mapv(|v| v * d.omegas[0])
            + kron_chain(&[&i2, &sz(), &i2]).mapv(|v| v * d.omegas[1])
            + kron_chain(&[&i2, &i2, &sz()]).mapv(|v| v * d.omegas[2])
            + kron_chain(&[&sx(), &sx(), &sx()]).mapv(|v| v * d.gx)
            + kron_chain(&[&sy(), &sy(), &sy()]).mapv(|v| v * d.gy)
            + kron_chain(&[&sz(), &sz(), &sz()]).mapv(|v| v * d.gz);
        assert!(max_diff(dense.entries(), &expect) < 1e-13);
    }
}

#[test]
fn pair_unitary_matches_its_pauli_form() {
    // ½[1 + Z_j + X_k − Z_j X_k] built by hand equals the controlled flip
    let u = selspin_core::pair_unitary(1, 2, 2).unwrap();
    let i2 = eye();
    let expect = (kron(&i2, &i2)
        + kron(&sz(), &i2)
        + kron(&i2, &sx())
        - kron(&sz(), &sx()))
    .mapv(|v| v * 0.5);
    assert!(max_diff(u.entries(), &expect) < 1e-15);
}

#[test]
fn chain_conjugation_preserves_spectrum_symmetrically() {
    // sanity: conjugation by a permutation leaves the trace intact
    let cfg = random_constant_draw(5, 0x7ace, 1);
    let h = build_full_hamiltonian(&cfg, 0.0).unwrap().to_dense().unwrap();
    let transformed = chain_unitary(5).unwrap().conjugate_dense(&h).unwrap();
    let tr = |m: &Array2<C64>| -> C64 { (0..32).map(|i| m[[i, i]]).sum() };
    assert!((tr(h.entries()) - tr(transformed.entries())).norm() < 1e-12);
}

#[test]
fn tabulated_driver_scenario_runs_through_engine_and_oracle() {
    let cfg = ScenarioConfig {
        n: 3,
        fields: FieldSchedule::new(vec![
            Driver::Tabulated {
                points: vec![(0.0, 0.4), (0.5, 0.9), (1.0, 0.2), (2.0, 0.0)],
            },
            Driver::constant(0.5),
            Driver::constant(0.3),
        ]),
        couplings: CouplingSchedule::constant(0.4, 0.1, 0.2),
        time: TimeGrid::new(0.0, 2.0, 8),
        initial: InitialState::Basis { index: 2 },
    };
    let report = selspin_core::compare(
        &cfg,
        &cfg.initial.clone(),
        &selspin_core::PropagatorOptions::default(),
        1e-7,
    )
    .unwrap();
    assert!(report.max_gap < 1e-8, "{}", report.max_gap);
}

#[test]
fn rk4_norm_drift_is_diagnosed_on_coarse_grids() {
    use selspin_core::{Method, PropagatorOptions, SubspaceLabel, TwoLevelState};
    let cfg = ScenarioConfig {
        n: 2,
        fields: FieldSchedule::from_constants(&[2.0, 1.0]),
        couplings: CouplingSchedule::constant(0.8, 0.3, 0.1),
        time: TimeGrid::new(0.0, 200.0, 10),
        initial: InitialState::Basis { index: 0 },
    };
    let opts = PropagatorOptions {
        method: Method::Rk4,
        steps_per_period: 16,
        norm_tolerance: 1e-10,
    };
    let err = selspin_core::propagate_two_level(
        &SubspaceLabel::all_plus(2).unwrap(),
        &cfg,
        &TwoLevelState::up(),
        &opts,
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("norm drift"), "{msg}");
}
