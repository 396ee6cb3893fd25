//! Cross-checks of the propagator path against fixed-step integration.

mod common;

use common::{random_generator, rk4_cycle_ledger, rk4_evolve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qhe_core::liouville::LiouvilleVector;
use qhe_core::model::EngineModel;
use qhe_core::protocol::{schedule_for, EngineKind, PropagationMode};
use qhe_core::thermo::{cycle_ledger, steady_state_at, CycleAnchor};

#[test]
fn propagator_agrees_with_thousand_step_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10 {
        let g = random_generator(&mut rng, 4, 0.4);
        let t: f64 = rng.gen_range(0.1..2.0);
        let k = g.propagator(t).unwrap();
        let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
            num_complex::Complex64::new(0.1 * (i + 1) as f64, 0.05 * j as f64)
        });
        let rho = {
            let p = &m * m.adjoint();
            let tr: num_complex::Complex64 = (0..4).map(|k| p[(k, k)]).sum();
            qhe_core::liouville::vectorize_matrix(&(p / tr))
        };
        let direct = k.apply(&rho);
        let integrated = rk4_evolve(g.matrix(), rho.as_vector(), t, 1000);
        let err = (direct.as_vector() - &integrated).norm();
        assert!(err <= 1e-8, "propagator vs integrator differ by {err:.3e}");
    }
}

#[test]
fn cycle_ledgers_match_the_integration_oracle_for_every_engine_type() {
    let model = EngineModel::default();
    let gens = model.generators().unwrap();
    let tau = model.cycle_time(1.0);
    for kind in [
        EngineKind::Continuous,
        EngineKind::TwoStroke,
        EngineKind::FourStroke,
        EngineKind::TwoField,
    ] {
        let sched = schedule_for(kind, tau).unwrap();
        let ss = steady_state_at(&sched, &gens, PropagationMode::Coherent, CycleAnchor::Start)
            .unwrap();
        let (ledger, _) = cycle_ledger(&sched, &gens, &ss.rho, PropagationMode::Coherent).unwrap();
        let (oracle, _) = rk4_cycle_ledger(&sched, &gens, &ss.rho, 10_000);
        let scale = ledger.work.abs() + ledger.heat_cold.abs() + ledger.heat_hot.abs();
        for (name, a, b) in [
            ("work", ledger.work, oracle.work),
            ("heat_cold", ledger.heat_cold, oracle.heat_cold),
            ("heat_hot", ledger.heat_hot, oracle.heat_hot),
        ] {
            assert!(
                (a - b).abs() <= 1e-8 * scale,
                "{kind}/{name}: ledger {a:.12e} vs oracle {b:.12e}"
            );
        }
    }
}
