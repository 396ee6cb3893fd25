//! The driven multilevel working medium: fixed energy levels split into a
//! cold and a hot manifold, one thermal bath per manifold, and a resonant
//! drive coupling level pairs to the work repository.
//!
//! The standard instance is the four-level system with levels
//! (-2, -0.5, 0.5, 2), hot manifold {1,4}, cold manifold {2,3} (1-based),
//! bath temperatures 5 and 1, and drive pairs 1-2 and 3-4 at frequency 1.5.
//! Generalized level layouts are accepted, but only the default carries
//! regression-tested values.

use num_complex::Complex64 as C64;

use crate::liouville::{CMat, CVec, HilbertOperator, LiouvilleVector, SuperOperator};
use crate::{Error, Result};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Which bath to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bath {
    Hot,
    Cold,
}

/// Engine description: levels, manifolds, temperatures, rates, drive.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineModel {
    pub levels: Vec<f64>,
    /// Level indices (0-based) coupled to the hot bath.
    pub hot_manifold: Vec<usize>,
    /// Level indices (0-based) coupled to the cold bath.
    pub cold_manifold: Vec<usize>,
    /// Level pairs (lower, upper) coupled by the drive.
    pub drive_pairs: Vec<(usize, usize)>,
    pub t_hot: f64,
    pub t_cold: f64,
    pub gamma_hot: f64,
    pub gamma_cold: f64,
    /// Drive amplitude.
    pub epsilon: f64,
    /// Drive frequency; for the default model (dE_hot - dE_cold)/2.
    pub omega: f64,
}

impl Default for EngineModel {
    fn default() -> Self {
        Self::from_gaps(4.0, 1.0, 5.0, 1.0, 5e-4, 5e-4, 5e-4).unwrap()
    }
}

impl EngineModel {
    /// Four-level model parametrized by the two gaps. Levels come out as
    /// (-dE_h/2, -dE_c/2, +dE_c/2, +dE_h/2) with hot manifold {1,4} and cold
    /// manifold {2,3} in 1-based labels, and omega = (dE_h - dE_c)/2.
    pub fn from_gaps(
        de_hot: f64,
        de_cold: f64,
        t_hot: f64,
        t_cold: f64,
        gamma_hot: f64,
        gamma_cold: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let levels = vec![-de_hot / 2.0, -de_cold / 2.0, de_cold / 2.0, de_hot / 2.0];
        Self::new(
            levels,
            vec![0, 3],
            vec![1, 2],
            vec![(0, 1), (2, 3)],
            t_hot,
            t_cold,
            gamma_hot,
            gamma_cold,
            epsilon,
            (de_hot - de_cold) / 2.0,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        levels: Vec<f64>,
        hot_manifold: Vec<usize>,
        cold_manifold: Vec<usize>,
        drive_pairs: Vec<(usize, usize)>,
        t_hot: f64,
        t_cold: f64,
        gamma_hot: f64,
        gamma_cold: f64,
        epsilon: f64,
        omega: f64,
    ) -> Result<Self> {
        let n = levels.len();
        if n < 2 {
            return Err(Error::InvalidModel("need at least two levels".into()));
        }
        if levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("level energies".into()));
        }
        if !(t_hot > t_cold && t_cold > 0.0) {
            return Err(Error::InvalidModel(format!(
                "temperatures must satisfy T_hot > T_cold > 0, got {t_hot} and {t_cold}"
            )));
        }
        if gamma_hot < 0.0 || gamma_cold < 0.0 || epsilon < 0.0 {
            return Err(Error::InvalidModel(
                "rates and drive amplitude must be nonnegative".into(),
            ));
        }
        for &k in hot_manifold.iter().chain(&cold_manifold) {
            if k >= n {
                return Err(Error::InvalidModel(format!(
                    "manifold level index {k} out of range for {n} levels"
                )));
            }
        }
        for &(a, b) in &drive_pairs {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidModel(format!(
                    "invalid drive pair ({a}, {b})"
                )));
            }
        }
        let overlap = hot_manifold
            .iter()
            .filter(|k| cold_manifold.contains(k))
            .count();
        if overlap > 1 {
            return Err(Error::InvalidModel(format!(
                "manifolds may share at most one level, found {overlap}"
            )));
        }
        Ok(Self {
            levels,
            hot_manifold,
            cold_manifold,
            drive_pairs,
            t_hot,
            t_cold,
            gamma_hot,
            gamma_cold,
            epsilon,
            omega,
        })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn manifolds_disjoint(&self) -> bool {
        !self
            .hot_manifold
            .iter()
            .any(|k| self.cold_manifold.contains(k))
    }

    /// Period of one drive oscillation, 2 pi / omega.
    pub fn drive_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Cycle time of the unit cell containing 6m drive periods.
    pub fn cycle_time(&self, m: f64) -> f64 {
        6.0 * m * self.drive_period()
    }

    /// The static Hamiltonian: diag(levels).
    pub fn build_h0(&self) -> HilbertOperator {
        HilbertOperator::from_diagonal(&self.levels).expect("validated levels")
    }

    /// Drive Hamiltonian eps * sum_pairs (|a><b| + h.c.), all pairs.
    pub fn build_drive(&self) -> HilbertOperator {
        self.build_drive_subset(&self.drive_pairs)
    }

    /// Drive Hamiltonian restricted to one pair.
    pub fn build_drive_pair(&self, pair_index: usize) -> HilbertOperator {
        self.build_drive_subset(&self.drive_pairs[pair_index..=pair_index])
    }

    fn build_drive_subset(&self, pairs: &[(usize, usize)]) -> HilbertOperator {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for &(a, b) in pairs {
            m[(a, b)] += c(self.epsilon);
            m[(b, a)] += c(self.epsilon);
        }
        HilbertOperator::hermitian(m).expect("drive is Hermitian by construction")
    }

    /// Superoperator of half the drive Hamiltonian, i.e. the constant
    /// generator the drive contributes after moving to the rotating frame
    /// and dropping counter-rotating terms. The single resonant frequency
    /// requires all drive pairs to share one gap; unequal gaps need the
    /// split per-pair drive instead and are rejected here.
    pub fn build_drive_rwa(&self) -> Result<SuperOperator> {
        if self.epsilon > 0.0 && !self.drive_gaps_equal() {
            return Err(Error::Unsupported(
                "single-field drive requires equal gaps on all drive pairs; \
                 use the per-pair drive generators instead"
                    .into(),
            ));
        }
        Ok(self.drive_rwa_unchecked())
    }

    fn drive_rwa_unchecked(&self) -> SuperOperator {
        let hw = self.build_drive();
        SuperOperator::hamiltonian(&hw)
            .expect("drive is Hermitian")
            .scale(0.5)
    }

    /// Per-pair half-drive superoperators (for the split-drive engine).
    pub fn build_drive_rwa_pairs(&self) -> Vec<SuperOperator> {
        (0..self.drive_pairs.len())
            .map(|k| {
                SuperOperator::hamiltonian(&self.build_drive_pair(k))
                    .expect("drive pair is Hermitian")
                    .scale(0.5)
            })
            .collect()
    }

    fn drive_gaps_equal(&self) -> bool {
        let gaps: Vec<f64> = self
            .drive_pairs
            .iter()
            .map(|&(a, b)| (self.levels[b] - self.levels[a]).abs())
            .collect();
        gaps.windows(2)
            .all(|w| (w[0] - w[1]).abs() <= 1e-12 * w[0].abs().max(1.0))
    }

    /// Jump operators of one bath: for every level pair {a, b} in its
    /// manifold with E_a < E_b, a decay operator sqrt(g)|a><b| and an
    /// excitation operator sqrt(g) e^{-(E_b - E_a)/(2T)}|b><a|. For the
    /// two-level manifolds of the default model this is exactly the
    /// standard set; the pairwise Boltzmann factors make the manifold Gibbs
    /// state the fixed point in general.
    pub fn jump_operators(&self, which: Bath) -> Vec<HilbertOperator> {
        let (manifold, gamma, temp) = match which {
            Bath::Hot => (&self.hot_manifold, self.gamma_hot, self.t_hot),
            Bath::Cold => (&self.cold_manifold, self.gamma_cold, self.t_cold),
        };
        let n = self.dim();
        let mut ops = Vec::new();
        if gamma == 0.0 {
            return ops;
        }
        for (idx, &a) in manifold.iter().enumerate() {
            for &b in &manifold[idx + 1..] {
                let (lo, hi) = if self.levels[a] <= self.levels[b] {
                    (a, b)
                } else {
                    (b, a)
                };
                let gap = self.levels[hi] - self.levels[lo];
                let mut down = CMat::zeros(n, n);
                down[(lo, hi)] = c(gamma.sqrt());
                let mut up = CMat::zeros(n, n);
                up[(hi, lo)] = c(gamma.sqrt() * (-gap / (2.0 * temp)).exp());
                ops.push(HilbertOperator::new(down).unwrap());
                ops.push(HilbertOperator::new(up).unwrap());
            }
        }
        ops
    }

    /// Dissipative generator of one bath.
    pub fn build_bath(&self, which: Bath) -> SuperOperator {
        SuperOperator::dissipator(self.dim(), &self.jump_operators(which))
            .expect("jump operators share the model dimension")
    }

    /// All generators needed to schedule this engine, with cached norms.
    pub fn generators(&self) -> Result<GeneratorSet> {
        GeneratorSet::build(self)
    }
}

/// Boltzmann-weighted diagonal density vector supported on `support`.
pub fn gibbs_state(levels: &[f64], temperature: f64, support: &[usize]) -> Result<LiouvilleVector> {
    if temperature <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "Gibbs state needs T > 0, got {temperature}"
        )));
    }
    if support.is_empty() {
        return Err(Error::InvalidModel("empty Gibbs support".into()));
    }
    let n = levels.len();
    // Shift by the minimum supported energy for numerical stability.
    let e_min = support
        .iter()
        .map(|&k| levels[k])
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = support
        .iter()
        .map(|&k| (-(levels[k] - e_min) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut v = CVec::zeros(n * n);
    for (&k, w) in support.iter().zip(weights) {
        v[k + n * k] = c(w / z);
    }
    LiouvilleVector::from_vector(v)
}

/// Generators of one engine, with spectral norms cached for action sums.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub h0: HilbertOperator,
    pub h0_super: SuperOperator,
    pub l_cold: SuperOperator,
    pub l_hot: SuperOperator,
    /// Half-drive superoperator (all pairs together).
    pub hw_half: SuperOperator,
    /// Half-drive superoperator of each drive pair separately.
    pub hw_pair_halves: Vec<SuperOperator>,
    /// Pure-dephasing generator and its rate, when enabled.
    pub l_dephase: Option<(f64, SuperOperator)>,
    pub norm_cold: f64,
    pub norm_hot: f64,
    pub norm_drive: f64,
    pub norm_pairs: Vec<f64>,
    pub norm_dephase: f64,
}

impl GeneratorSet {
    pub fn build(model: &EngineModel) -> Result<Self> {
        let h0 = model.build_h0();
        let h0_super = SuperOperator::hamiltonian(&h0)?;
        let l_cold = model.build_bath(Bath::Cold);
        let l_hot = model.build_bath(Bath::Hot);
        let hw_half = model.build_drive_rwa()?;
        let hw_pair_halves = model.build_drive_rwa_pairs();
        let norm_cold = l_cold.spectral_norm();
        let norm_hot = l_hot.spectral_norm();
        let norm_drive = hw_half.spectral_norm();
        let norm_pairs = hw_pair_halves.iter().map(|g| g.spectral_norm()).collect();
        Ok(Self {
            h0,
            h0_super,
            l_cold,
            l_hot,
            hw_half,
            hw_pair_halves,
            l_dephase: None,
            norm_cold,
            norm_hot,
            norm_drive,
            norm_pairs,
            norm_dephase: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Adds a uniform pure-dephasing generator at the given rate.
    pub fn with_dephasing(mut self, rate: f64) -> Result<Self> {
        let l = crate::thermo::build_dephasing(self.dim(), rate)?;
        self.norm_dephase = l.spectral_norm();
        self.l_dephase = Some((rate, l));
        Ok(self)
    }
}

/// One violated validity inequality, with the offending ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeWarning {
    /// Drive amplitude not small against the bath rates (local-bath form).
    DriveVsBathRate { ratio: f64 },
    /// Drive amplitude not small against the drive frequency (rotating-wave
    /// approximation).
    DriveVsFrequency { ratio: f64 },
    /// Too few drive periods per cycle for the secular approximation:
    /// m must be large against omega / min(gap).
    Secular { m: f64, required: f64 },
    /// Cycle time is not an integer number of 6-drive-period unit cells.
    NonIntegerUnitCells { m: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::DriveVsBathRate { ratio } => write!(
                f,
                "drive amplitude is not small against the bath rates (epsilon/gamma = {ratio:.3e})"
            ),
            RegimeWarning::DriveVsFrequency { ratio } => write!(
                f,
                "drive amplitude is not small against the drive frequency (epsilon/omega = {ratio:.3e})"
            ),
            RegimeWarning::Secular { m, required } => write!(
                f,
                "m = {m} drive periods per sixth-cycle is not large against {required:.3} (secular approximation)"
            ),
            RegimeWarning::NonIntegerUnitCells { m } => {
                write!(f, "cycle time corresponds to a non-integer m = {m:.6}")
            }
        }
    }
}

/// Scheduling parameters relevant to regime validity.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleParams {
    /// Drive periods per sixth of the cycle (tau_cyc = 6 m tau_d).
    pub m: f64,
}

/// Checks the smallness conditions behind the local-bath, rotating-wave, and
/// secular approximations. Violations are reported, never fatal: running
/// outside the strict regime is a legitimate (and often intended) use.
///
/// "Much smaller" is implemented as a factor of ten.
pub fn validate_regime(model: &EngineModel, params: &ScheduleParams) -> Vec<RegimeWarning> {
    const MARGIN: f64 = 10.0;
    let mut warnings = Vec::new();
    let gamma_min = model.gamma_hot.min(model.gamma_cold);
    if model.epsilon > 0.0 {
        if gamma_min <= 0.0 || model.epsilon * MARGIN > gamma_min {
            warnings.push(RegimeWarning::DriveVsBathRate {
                ratio: if gamma_min > 0.0 {
                    model.epsilon / gamma_min
                } else {
                    f64::INFINITY
                },
            });
        }
        if model.omega <= 0.0 || model.epsilon * MARGIN > model.omega {
            warnings.push(RegimeWarning::DriveVsFrequency {
                ratio: if model.omega > 0.0 {
                    model.epsilon / model.omega
                } else {
                    f64::INFINITY
                },
            });
        }
    }
    let min_gap = min_manifold_gap(model);
    if min_gap > 0.0 && model.omega > 0.0 {
        let required = model.omega / min_gap;
        if params.m < MARGIN * required {
            warnings.push(RegimeWarning::Secular {
                m: params.m,
                required,
            });
        }
    }
    if (params.m - params.m.round()).abs() > 1e-9 || params.m <= 0.0 {
        warnings.push(RegimeWarning::NonIntegerUnitCells { m: params.m });
    }
    warnings
}

fn min_manifold_gap(model: &EngineModel) -> f64 {
    let gap_of = |manifold: &[usize]| -> f64 {
        let mut gap = f64::INFINITY;
        for (i, &a) in manifold.iter().enumerate() {
            for &b in &manifold[i + 1..] {
                gap = gap.min((model.levels[a] - model.levels[b]).abs());
            }
        }
        gap
    };
    let g = gap_of(&model.hot_manifold).min(gap_of(&model.cold_manifold));
    if g.is_finite() {
        g
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::TOL_STRUCT;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_model_reproduces_standard_parameters() {
        let m = EngineModel::default();
        assert_eq!(m.levels, vec![-2.0, -0.5, 0.5, 2.0]);
        assert_eq!(m.hot_manifold, vec![0, 3]);
        assert_eq!(m.cold_manifold, vec![1, 2]);
        assert_abs_diff_eq!(m.omega, 1.5);
        assert_abs_diff_eq!(m.t_hot, 5.0);
        assert_abs_diff_eq!(m.t_cold, 1.0);
        let h0 = m.build_h0();
        let tr: C64 = (0..4).map(|k| h0.matrix()[(k, k)]).sum();
        assert_abs_diff_eq!(tr.re, 0.0);
    }

    #[test]
    fn degenerate_gaps_build_but_warn() {
        let m = EngineModel::from_gaps(1.0, 1.0, 5.0, 1.0, 1e-4, 1e-4, 1e-4).unwrap();
        assert_abs_diff_eq!(m.omega, 0.0);
        let warnings = validate_regime(&m, &ScheduleParams { m: 10.0 });
        assert!(warnings
            .iter()
            .any(|w| matches!(w, RegimeWarning::DriveVsFrequency { .. })));
    }

    #[test]
    fn invalid_temperatures_are_rejected() {
        assert!(EngineModel::from_gaps(4.0, 1.0, 1.0, 5.0, 0.0, 0.0, 0.0).is_err());
        assert!(EngineModel::from_gaps(4.0, 1.0, 5.0, -1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn drive_spectrum_and_norm() {
        let mut m = EngineModel::default();
        m.epsilon = 5e-4;
        let hw = m.build_drive();
        let eigs = hw.eigenvalues().unwrap();
        assert_abs_diff_eq!(eigs[0], -5e-4, epsilon = 1e-16);
        assert_abs_diff_eq!(eigs[1], -5e-4, epsilon = 1e-16);
        assert_abs_diff_eq!(eigs[2], 5e-4, epsilon = 1e-16);
        assert_abs_diff_eq!(eigs[3], 5e-4, epsilon = 1e-16);
        // ||1/2 Hw_super|| = epsilon: the superoperator spectrum is the set
        // of eigenvalue differences, so the half-drive norm equals epsilon.
        let half = m.build_drive_rwa().unwrap();
        assert_abs_diff_eq!(half.spectral_norm(), m.epsilon, epsilon = 1e-12);
    }

    #[test]
    fn zero_drive_gives_zero_generator() {
        let mut m = EngineModel::default();
        m.epsilon = 0.0;
        assert_eq!(m.build_drive_rwa().unwrap().matrix().norm(), 0.0);
    }

    #[test]
    fn drive_pairs_sum_to_full_drive() {
        let m = EngineModel::default();
        let full = m.build_drive_rwa().unwrap();
        let pairs = m.build_drive_rwa_pairs();
        let summed = SuperOperator::linear_combination(&[(1.0, &pairs[0]), (1.0, &pairs[1])]).unwrap();
        assert!((full.matrix() - summed.matrix()).norm() <= 1e-15);
    }

    #[test]
    fn bath_fixed_points_obey_detailed_balance() {
        let m = EngineModel::default();
        // Evolve past many bath lifetimes and read the population ratios.
        let t_long = 1e6 / m.gamma_hot;
        let hot = m.build_bath(Bath::Hot);
        let from_ground = hot
            .propagator(t_long)
            .unwrap()
            .apply(&LiouvilleVector::basis_state(4, 0));
        let p = from_ground.populations();
        assert_abs_diff_eq!(p[3] / p[0], (-4.0f64 / 5.0).exp(), epsilon = 1e-8);

        let cold = m.build_bath(Bath::Cold);
        let from_two = cold
            .propagator(1e6 / m.gamma_cold)
            .unwrap()
            .apply(&LiouvilleVector::basis_state(4, 1));
        let q = from_two.populations();
        assert_abs_diff_eq!(q[2] / q[1], (-1.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn bath_fixed_point_matches_manifold_gibbs_state() {
        let m = EngineModel::default();
        let cold = m.build_bath(Bath::Cold);
        let evolved = cold
            .propagator(1e7 / m.gamma_cold)
            .unwrap()
            .apply(&LiouvilleVector::basis_state(4, 2));
        let gibbs = gibbs_state(&m.levels, m.t_cold, &m.cold_manifold).unwrap();
        let tv: f64 = evolved
            .populations()
            .iter()
            .zip(gibbs.populations())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 1e-8, "total variation {tv:.3e}");
    }

    #[test]
    fn zero_rate_bath_is_zero() {
        let mut m = EngineModel::default();
        m.gamma_hot = 0.0;
        assert_eq!(m.build_bath(Bath::Hot).matrix().norm(), 0.0);
    }

    #[test]
    fn gibbs_state_limits() {
        let levels = [-2.0, -0.5, 0.5, 2.0];
        let hot_support = [0usize, 3];
        let uniform = gibbs_state(&levels, 1e12, &hot_support).unwrap();
        let p = uniform.populations();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-10);

        let cold = gibbs_state(&levels, 1.0, &[1, 2]).unwrap();
        let q = cold.populations();
        let expect_low = 1.0 / (1.0 + (-1.0f64).exp());
        assert_abs_diff_eq!(q[1], expect_low, epsilon = 1e-12);
        assert_abs_diff_eq!(q[2], 1.0 - expect_low, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.73106, epsilon = 1e-5);
        assert_abs_diff_eq!(q[2], 0.26894, epsilon = 1e-5);

        let single = gibbs_state(&levels, 2.0, &[2]).unwrap();
        assert_abs_diff_eq!(single.populations()[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn regime_warnings_fire_on_the_documented_cases() {
        let mut m = EngineModel::default();
        m.epsilon = 1e-4;
        m.gamma_hot = 1e-4;
        m.gamma_cold = 1e-4;
        let w = validate_regime(&m, &ScheduleParams { m: 600.0 });
        assert!(w
            .iter()
            .any(|x| matches!(x, RegimeWarning::DriveVsBathRate { ratio } if (*ratio - 1.0).abs() < 1e-12)));

        m.epsilon = 1e-6;
        m.gamma_hot = 1e-3;
        m.gamma_cold = 1e-3;
        let w = validate_regime(&m, &ScheduleParams { m: 600.0 });
        assert!(!w
            .iter()
            .any(|x| matches!(x, RegimeWarning::DriveVsBathRate { .. })));
        assert!(!w
            .iter()
            .any(|x| matches!(x, RegimeWarning::DriveVsFrequency { .. })));

        // m = 1 against omega/min-gap = 1.5 must trigger the secular warning.
        let w = validate_regime(&EngineModel::default(), &ScheduleParams { m: 1.0 });
        assert!(w
            .iter()
            .any(|x| matches!(x, RegimeWarning::Secular { required, .. } if (*required - 1.5).abs() < 1e-12)));
    }

    #[test]
    fn thermal_generators_commute_for_disjoint_manifolds() {
        let g = EngineModel::default().generators().unwrap();
        let comm = g.l_cold.matrix() * g.l_hot.matrix() - g.l_hot.matrix() * g.l_cold.matrix();
        assert!(comm.norm() <= TOL_STRUCT);
        // The static-Hamiltonian superoperator commutes with both baths.
        for bath in [&g.l_cold, &g.l_hot] {
            let c1 = g.h0_super.matrix() * bath.matrix() - bath.matrix() * g.h0_super.matrix();
            assert!(c1.norm() <= TOL_STRUCT * bath.matrix().norm().max(1.0));
        }
    }

    #[test]
    fn no_drive_means_no_transport() {
        // With epsilon = 0 and disjoint manifolds each bath holds its own
        // manifold in a Gibbs state; both heat currents vanish.
        let mut m = EngineModel::default();
        m.epsilon = 0.0;
        let g = m.generators().unwrap();
        let rho_c = gibbs_state(&m.levels, m.t_cold, &m.cold_manifold).unwrap();
        let rho_h = gibbs_state(&m.levels, m.t_hot, &m.hot_manifold).unwrap();
        let mixed = LiouvilleVector::from_vector(
            rho_c.as_vector() * c(0.5) + rho_h.as_vector() * c(0.5),
        )
        .unwrap();
        let h0_vec = crate::liouville::vectorize(&g.h0);
        for bath in [&g.l_cold, &g.l_hot] {
            let drho = bath.apply(&mixed);
            let j = (C64::new(0.0, -1.0) * crate::liouville::inner(&h0_vec, &drho)).re;
            assert!(j.abs() <= 1e-12, "residual current {j:.3e}");
        }
    }
}
