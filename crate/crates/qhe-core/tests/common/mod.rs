//! Shared test support: an integration oracle independent of the matrix
//! exponential path, plus deterministic model samplers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qhe_core::liouville::{vectorize, HilbertOperator, LiouvilleVector, SuperOperator};
use qhe_core::model::{EngineModel, GeneratorSet};
use qhe_core::protocol::Schedule;
use qhe_core::thermo::Agent;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Classic fixed-step fourth-order integration of `d|rho>/dt = -i G |rho>`.
pub fn rk4_evolve(g: &CMat, rho0: &CVec, t: f64, steps: usize) -> CVec {
    let minus_i = C64::new(0.0, -1.0);
    let h = C64::new(t / steps as f64, 0.0);
    let rhs = |v: &CVec| -> CVec { (g * v) * minus_i };
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&(&rho + &k1 * (h * 0.5)));
        let k3 = rhs(&(&rho + &k2 * (h * 0.5)));
        let k4 = rhs(&(&rho + &k3 * h));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / 6.0);
    }
    rho
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleLedger {
    pub work: f64,
    pub heat_cold: f64,
    pub heat_hot: f64,
}

/// One engine cycle integrated with RK4 at a fixed total step budget,
/// attributing energy per agent by integrating the currents over the
/// stored trajectory (composite Simpson). Completely independent of the
/// propagator path.
pub fn rk4_cycle_ledger(
    schedule: &Schedule,
    gens: &GeneratorSet,
    rho0: &LiouvilleVector,
    steps_per_cycle: usize,
) -> (OracleLedger, LiouvilleVector) {
    let minus_i = C64::new(0.0, -1.0);
    let h0_vec = vectorize(&gens.h0);
    let mut ledger = OracleLedger::default();
    let mut rho = rho0.as_vector().clone();
    for seg in schedule.segments() {
        let g = seg.generator(gens).expect("segment generator");
        let mut agents: Vec<(Agent, CMat)> = Vec::new();
        if seg.weights.cold != 0.0 {
            agents.push((Agent::Cold, gens.l_cold.matrix() * C64::new(seg.weights.cold, 0.0)));
        }
        if seg.weights.hot != 0.0 {
            agents.push((Agent::Hot, gens.l_hot.matrix() * C64::new(seg.weights.hot, 0.0)));
        }
        let nn = gens.dim() * gens.dim();
        let mut drive = CMat::zeros(nn, nn);
        let mut used = false;
        if seg.weights.drive != 0.0 {
            drive += gens.hw_half.matrix() * C64::new(seg.weights.drive, 0.0);
            used = true;
        }
        for (i, &pw) in seg.weights.drive_pairs.iter().enumerate() {
            if pw != 0.0 {
                drive += gens.hw_pair_halves[i].matrix() * C64::new(pw, 0.0);
                used = true;
            }
        }
        if used {
            agents.push((Agent::Drive, drive));
        }

        // even step count proportional to the segment share of the cycle
        let mut steps =
            ((steps_per_cycle as f64) * seg.duration / schedule.tau_cyc()).round() as usize;
        steps = steps.max(2);
        if steps % 2 == 1 {
            steps += 1;
        }
        let h = seg.duration / steps as f64;
        let rhs = |v: &CVec| -> CVec { (g.matrix() * v) * minus_i };
        let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); agents.len()];
        for k in 0..=steps {
            for (a, (_, w)) in agents.iter().enumerate() {
                let j = (minus_i * h0_vec.as_vector().dotc(&(w * &rho))).re;
                samples[a].push(j);
            }
            if k < steps {
                let hh = C64::new(h, 0.0);
                let k1 = rhs(&rho);
                let k2 = rhs(&(&rho + &k1 * (hh * 0.5)));
                let k3 = rhs(&(&rho + &k2 * (hh * 0.5)));
                let k4 = rhs(&(&rho + &k3 * hh));
                rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (hh / 6.0);
            }
        }
        for ((agent, _), vals) in agents.iter().zip(&samples) {
            let n = vals.len() - 1;
            let mut acc = vals[0] + vals[n];
            for (k, v) in vals.iter().enumerate().take(n).skip(1) {
                acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let integral = acc * h / 3.0;
            match agent {
                Agent::Cold => ledger.heat_cold += integral,
                Agent::Hot => ledger.heat_hot += integral,
                Agent::Drive => ledger.work += integral,
            }
        }
    }
    (
        ledger,
        LiouvilleVector::from_vector(rho).expect("square length"),
    )
}

/// Random 4-level model with wide but physical parameter ranges.
pub fn random_model(rng: &mut ChaCha8Rng) -> EngineModel {
    let de_hot: f64 = rng.gen_range(2.0..8.0);
    let de_cold: f64 = rng.gen_range(0.3..0.8) * de_hot;
    let t_cold: f64 = rng.gen_range(0.5..2.0);
    let t_hot: f64 = t_cold * rng.gen_range(2.0..10.0);
    let gamma_hot: f64 = 10f64.powf(rng.gen_range(-5.0..-2.0));
    let gamma_cold: f64 = 10f64.powf(rng.gen_range(-5.0..-2.0));
    let epsilon: f64 = 10f64.powf(rng.gen_range(-5.0..-2.5));
    EngineModel::from_gaps(de_hot, de_cold, t_hot, t_cold, gamma_hot, gamma_cold, epsilon)
        .expect("random parameters are valid")
}

/// Random Liouville generator (Hermitian part plus one random jump channel).
pub fn random_generator(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SuperOperator {
    let m = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = HilbertOperator::hermitian((&m + m.adjoint()) * C64::new(0.5 * scale, 0.0)).unwrap();
    let hs = SuperOperator::hamiltonian(&h).unwrap();
    let j = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }) * C64::new(scale.sqrt(), 0.0);
    let l = SuperOperator::dissipator(n, &[HilbertOperator::new(j).unwrap()]).unwrap();
    SuperOperator::linear_combination(&[(1.0, &hs), (1.0, &l)]).unwrap()
}
