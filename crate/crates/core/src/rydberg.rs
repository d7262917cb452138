//! Pulse-level simulation of the certification protocol on a Rydberg-atom
//! chain.
//!
//! The chain Hamiltonian (angular-frequency units, i.e. including the 2*pi
//! factor) is
//!
//! ```text
//! H = 2*pi * [ (Omega/2) * sum_i X_i  -  Delta * sum_i n_i
//!              + sum_{i<j} C6 * n_i * n_j / |i-j|^6 ]
//! ```
//!
//! with `n = (1 - Z)/2` the excitation projector and site distances measured
//! in lattice units, so the nearest-neighbour interaction strength is `C6`.
//! States evolve under `exp(-i * H * t)`.
//!
//! Everything the protocol needs is built from four pulse schedules, all
//! parameterized by a single detuning scale `h`:
//!
//! * `prepare`: a global pi rotation about (x+z)/sqrt(2) (`Omega = Delta = h`
//!   for `1/(2*sqrt(2)*h)`) maps `|g...g>` to `|+...+>` up to a global phase,
//!   then an interaction hold (`Omega = Delta = 0` for `1/2`) imprints a pi
//!   phase on every adjacent excited pair. With interactions truncated to
//!   nearest neighbours, the hold is exactly the entangling layer of the path
//!   graph state and no local phase correction is required; the residual
//!   errors are the interaction tails (1/64 at distance two) and rotations of
//!   finite duration, both of which vanish as `h` grows.
//! * `measure_x`: the same pi rotation, which exchanges X and Z, so a
//!   Z readout afterwards samples the X basis.
//! * `measure_xz_plus` / `measure_xz_minus`: a pi/2 rotation about x
//!   (`Omega = h, Delta = 0` for `1/(4*h)`), a pi/4 rotation about z
//!   (`Omega = 0, Delta = +/-h` for `1/(8*h)`), then the pi rotation. The
//!   composite maps `(X +/- Z)/sqrt(2)` to Z, the two tilted bases the
//!   certification estimators consume.
//!
//! [`measure_observables`] runs the full protocol in the infinite-shot limit:
//! it prepares the state, applies each measurement schedule (or the ideal
//! instantaneous rotation, depending on [`RotationMode`]), and assembles the
//! per-site stabilizer estimates plus the symmetry-operator estimate from the
//! exact post-rotation readout distributions.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{self, CertifyError, EstimationPlan};
use crate::stabilizer::{GraphSpec, StabilizerError};
use crate::statevector::{StateVector, StateVectorError};

/// Largest chain the dense simulator accepts.
pub const MAX_CHAIN_SITES: usize = 14;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum RydbergError {
    #[error("chain must have an odd number of sites, got {0}")]
    EvenSiteCount(usize),
    #[error("chain must have between 1 and {MAX_CHAIN_SITES} sites, got {0}")]
    SiteCountOutOfRange(usize),
    #[error("detuning scale h must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("interaction coefficient c6 must be positive and finite, got {0}")]
    InvalidInteraction(f64),
    #[error("interaction cutoff must be at least 1, got 0")]
    ZeroCutoff,
    #[error("pulse segment duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("pulse amplitude and detuning must be finite, got ({omega}, {delta})")]
    NonFinitePulse { omega: f64, delta: f64 },
    #[error("schedule acts on {schedule} sites but the state has {state}")]
    SiteCountMismatch { schedule: usize, state: usize },
    #[error("no pulse schedule realizes a readout at polar angle {0} rad")]
    UnsupportedBasis(f64),
    #[error("eigendecomposition failed: {0}")]
    Linalg(String),
    #[error(transparent)]
    State(#[from] StateVectorError),
    #[error(transparent)]
    Graph(#[from] StabilizerError),
    #[error(transparent)]
    Estimation(#[from] CertifyError),
}

/// Static description of the simulated chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RydbergChainConfig {
    /// Number of atoms in the chain; must be odd so the certified graph
    /// state has the bipartition the protocol expects.
    pub n_sites: usize,
    /// Detuning scale that sets every pulse amplitude and duration.
    pub h: f64,
    /// Van der Waals coefficient in lattice units (nearest-neighbour
    /// interaction strength).
    pub c6: f64,
    /// Keep only interactions between sites at most this far apart;
    /// `None` retains the full 1/r^6 tail.
    pub interaction_cutoff: Option<usize>,
}

impl RydbergChainConfig {
    pub fn new(n_sites: usize, h: f64) -> Result<Self, RydbergError> {
        let cfg = RydbergChainConfig {
            n_sites,
            h,
            c6: 1.0,
            interaction_cutoff: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_interaction_cutoff(mut self, cutoff: Option<usize>) -> Result<Self, RydbergError> {
        self.interaction_cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), RydbergError> {
        if self.n_sites == 0 || self.n_sites > MAX_CHAIN_SITES {
            return Err(RydbergError::SiteCountOutOfRange(self.n_sites));
        }
        if self.n_sites % 2 == 0 {
            return Err(RydbergError::EvenSiteCount(self.n_sites));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(RydbergError::InvalidScale(self.h));
        }
        if !(self.c6.is_finite() && self.c6 > 0.0) {
            return Err(RydbergError::InvalidInteraction(self.c6));
        }
        if self.interaction_cutoff == Some(0) {
            return Err(RydbergError::ZeroCutoff);
        }
        Ok(())
    }

    /// Interaction coefficient between two sites, honouring the cutoff.
    fn pair_coefficient(&self, distance: usize) -> f64 {
        debug_assert!(distance >= 1);
        if let Some(cutoff) = self.interaction_cutoff {
            if distance > cutoff {
                return 0.0;
            }
        }
        self.c6 / (distance as f64).powi(6)
    }
}

/// One constant-parameter pulse: evolve under `H(omega, delta)` for
/// `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub omega: f64,
    pub delta: f64,
    pub duration: f64,
}

impl PulseSegment {
    pub fn new(omega: f64, delta: f64, duration: f64) -> Result<Self, RydbergError> {
        if !(omega.is_finite() && delta.is_finite()) {
            return Err(RydbergError::NonFinitePulse { omega, delta });
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(RydbergError::InvalidDuration(duration));
        }
        Ok(PulseSegment {
            omega,
            delta,
            duration,
        })
    }
}

/// Which role a schedule plays in the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleLabel {
    Prepare,
    MeasureX,
    MeasureXzPlus,
    MeasureXzMinus,
}

impl fmt::Display for ScheduleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScheduleLabel::Prepare => "prepare",
            ScheduleLabel::MeasureX => "measure_x",
            ScheduleLabel::MeasureXzPlus => "measure_xz_plus",
            ScheduleLabel::MeasureXzMinus => "measure_xz_minus",
        };
        f.write_str(name)
    }
}

/// An ordered list of pulse segments with a protocol role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    label: ScheduleLabel,
    segments: Vec<PulseSegment>,
}

impl PulseSchedule {
    pub fn new(label: ScheduleLabel, segments: Vec<PulseSegment>) -> Self {
        PulseSchedule { label, segments }
    }

    /// The standard schedule for `label` at detuning scale `h`.
    ///
    /// Durations: the pi rotation about (x+z)/sqrt(2) takes
    /// `1/(2*sqrt(2)*h)`, the interaction hold `1/2`, the pi/2 rotation
    /// about x `1/(4*h)`, and the pi/4 rotation about z `1/(8*h)`.
    pub fn builtin(label: ScheduleLabel, h: f64) -> Result<Self, RydbergError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(RydbergError::InvalidScale(h));
        }
        let pi_about_xz = PulseSegment::new(h, h, 1.0 / (2.0 * SQRT_2 * h))?;
        let hold = PulseSegment::new(0.0, 0.0, 0.5)?;
        let half_pi_about_x = PulseSegment::new(h, 0.0, 1.0 / (4.0 * h))?;
        let quarter_pi_about_z = |sign: f64| PulseSegment::new(0.0, sign * h, 1.0 / (8.0 * h));
        let segments = match label {
            ScheduleLabel::Prepare => vec![pi_about_xz, hold],
            ScheduleLabel::MeasureX => vec![pi_about_xz],
            ScheduleLabel::MeasureXzPlus => {
                vec![half_pi_about_x, quarter_pi_about_z(1.0)?, pi_about_xz]
            }
            ScheduleLabel::MeasureXzMinus => {
                vec![half_pi_about_x, quarter_pi_about_z(-1.0)?, pi_about_xz]
            }
        };
        Ok(PulseSchedule::new(label, segments))
    }

    pub fn label(&self) -> ScheduleLabel {
        self.label
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

/// Dense chain Hamiltonian at fixed pulse parameters, in angular-frequency
/// units (the 2*pi factor is included), over the computational basis used by
/// [`StateVector`]: site `q` is read from bit `n_sites - 1 - q`, with bit
/// value 1 meaning the excited state `|r>`.
pub fn hamiltonian_matrix(cfg: &RydbergChainConfig, omega: f64, delta: f64) -> Array2<f64> {
    let n = cfg.n_sites;
    let dim = 1usize << n;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for b in 0..dim {
        let mut diag = -delta * f64::from((b as u64).count_ones());
        for i in 0..n {
            if b >> (n - 1 - i) & 1 == 0 {
                continue;
            }
            for j in (i + 1)..n {
                if b >> (n - 1 - j) & 1 == 1 {
                    diag += cfg.pair_coefficient(j - i);
                }
            }
        }
        h[[b, b]] = TWO_PI * diag;
        let coupling = TWO_PI * omega / 2.0;
        if coupling != 0.0 {
            for q in 0..n {
                let flipped = b ^ (1usize << (n - 1 - q));
                if flipped > b {
                    h[[b, flipped]] = coupling;
                    h[[flipped, b]] = coupling;
                }
            }
        }
    }
    h
}

/// Evolves states under pulse schedules for one chain, caching the
/// eigendecomposition of each distinct `(omega, delta)` Hamiltonian.
pub struct ChainSimulator {
    cfg: RydbergChainConfig,
    eigensystems: HashMap<(u64, u64), (Array1<f64>, Array2<f64>)>,
}

impl ChainSimulator {
    pub fn new(cfg: RydbergChainConfig) -> Result<Self, RydbergError> {
        cfg.validate()?;
        Ok(ChainSimulator {
            cfg,
            eigensystems: HashMap::new(),
        })
    }

    pub fn config(&self) -> &RydbergChainConfig {
        &self.cfg
    }

    /// Applies every segment of `schedule` in order. An empty schedule is
    /// the identity.
    pub fn evolve(
        &mut self,
        state: &StateVector,
        schedule: &PulseSchedule,
    ) -> Result<StateVector, RydbergError> {
        if state.n_qubits() != self.cfg.n_sites {
            return Err(RydbergError::SiteCountMismatch {
                schedule: self.cfg.n_sites,
                state: state.n_qubits(),
            });
        }
        let mut amps = state.amplitudes().to_vec();
        for segment in schedule.segments() {
            self.apply_segment(&mut amps, segment)?;
        }
        Ok(StateVector::from_amplitudes(self.cfg.n_sites, amps)?)
    }

    fn apply_segment(
        &mut self,
        amps: &mut [Complex64],
        segment: &PulseSegment,
    ) -> Result<(), RydbergError> {
        if segment.omega == 0.0 {
            // The Hamiltonian is diagonal: apply the phases exactly.
            let diag = self.diagonal(segment.delta);
            for (a, d) in amps.iter_mut().zip(diag.iter()) {
                let phase = -d * segment.duration;
                *a *= Complex64::from_polar(1.0, phase);
            }
            return Ok(());
        }
        let (eigenvalues, eigenvectors) = self.eigensystem(segment.omega, segment.delta)?;
        let dim = amps.len();
        let re = Array1::from_iter(amps.iter().map(|a| a.re));
        let im = Array1::from_iter(amps.iter().map(|a| a.im));
        let basis_t = eigenvectors.t();
        let xr = basis_t.dot(&re);
        let xi = basis_t.dot(&im);
        let mut cr = Array1::<f64>::zeros(dim);
        let mut ci = Array1::<f64>::zeros(dim);
        for k in 0..dim {
            let (sin, cos) = (eigenvalues[k] * segment.duration).sin_cos();
            cr[k] = xr[k] * cos + xi[k] * sin;
            ci[k] = xi[k] * cos - xr[k] * sin;
        }
        let yr = eigenvectors.dot(&cr);
        let yi = eigenvectors.dot(&ci);
        for (b, a) in amps.iter_mut().enumerate() {
            *a = Complex64::new(yr[b], yi[b]);
        }
        Ok(())
    }

    fn diagonal(&self, delta: f64) -> Vec<f64> {
        let n = self.cfg.n_sites;
        let dim = 1usize << n;
        (0..dim)
            .map(|b| {
                let mut d = -delta * f64::from((b as u64).count_ones());
                for i in 0..n {
                    if b >> (n - 1 - i) & 1 == 0 {
                        continue;
                    }
                    for j in (i + 1)..n {
                        if b >> (n - 1 - j) & 1 == 1 {
                            d += self.cfg.pair_coefficient(j - i);
                        }
                    }
                }
                TWO_PI * d
            })
            .collect()
    }

    fn eigensystem(
        &mut self,
        omega: f64,
        delta: f64,
    ) -> Result<&(Array1<f64>, Array2<f64>), RydbergError> {
        let key = (omega.to_bits(), delta.to_bits());
        if !self.eigensystems.contains_key(&key) {
            let matrix = hamiltonian_matrix(&self.cfg, omega, delta);
            let decomposition = matrix
                .eigh(UPLO::Lower)
                .map_err(|e| RydbergError::Linalg(e.to_string()))?;
            self.eigensystems.insert(key, decomposition);
        }
        Ok(&self.eigensystems[&key])
    }
}

/// How the single-qubit rotations of the protocol are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMode {
    /// Rotations are finite-duration pulses evolved under the full chain
    /// Hamiltonian (interactions stay on during the rotation).
    FinitePulse,
    /// Rotations are ideal instantaneous single-qubit unitaries; only the
    /// interaction hold evolves under the chain Hamiltonian.
    Instantaneous,
}

/// Where the certified state comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreparationMode {
    /// Run the prepare schedule on `|g...g>`.
    Pulses,
    /// Skip preparation and measure the exact path graph state.
    IdealState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub rotations: RotationMode,
    pub preparation: PreparationMode,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            rotations: RotationMode::FinitePulse,
            preparation: PreparationMode::Pulses,
        }
    }
}

/// Ideal instantaneous version of the pi rotation about (x+z)/sqrt(2):
/// `-i*(X+Z)/sqrt(2)`, a Hadamard up to global phase.
fn pi_rotation_about_xz() -> [[Complex64; 2]; 2] {
    let c = Complex64::new(0.0, -1.0 / SQRT_2);
    [[c, c], [c, -c]]
}

/// Outcome of one infinite-shot protocol simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RydbergRun {
    pub n_sites: usize,
    pub h: f64,
    pub c6: f64,
    pub interaction_cutoff: Option<usize>,
    pub rotations: RotationMode,
    pub preparation: PreparationMode,
    /// Per-site stabilizer estimates `M_1..M_N` followed by the symmetry
    /// estimate `<U_X>`; length `n_sites + 1`.
    pub m_values: Vec<f64>,
    /// Overlap of the prepared state with the exact path graph state.
    pub fidelity: f64,
    /// The four pulse schedules at this `h`, whether or not the run used
    /// them (instantaneous-rotation runs document what they idealize).
    pub schedules: Vec<PulseSchedule>,
}

impl RydbergRun {
    /// `M_i` for 1-indexed site `i`.
    pub fn site_value(&self, i: usize) -> Option<f64> {
        if i == 0 || i > self.n_sites {
            return None;
        }
        Some(self.m_values[i - 1])
    }

    /// The symmetry-operator estimate (last entry of `m_values`).
    pub fn symmetry_value(&self) -> f64 {
        self.m_values[self.n_sites]
    }
}

fn measurement_label_for_angle(theta: f64) -> Result<ScheduleLabel, RydbergError> {
    let candidates = [
        (PI / 4.0, ScheduleLabel::MeasureXzPlus),
        (PI / 2.0, ScheduleLabel::MeasureX),
        (3.0 * PI / 4.0, ScheduleLabel::MeasureXzMinus),
    ];
    for (angle, label) in candidates {
        if (theta - angle).abs() < 1e-9 {
            return Ok(label);
        }
    }
    Err(RydbergError::UnsupportedBasis(theta))
}

/// Prepares the chain's graph state according to `rotations`.
pub fn prepare_graph_state(
    sim: &mut ChainSimulator,
    rotations: RotationMode,
) -> Result<StateVector, RydbergError> {
    let cfg = sim.config().clone();
    let ground = StateVector::zero_state(cfg.n_sites)?;
    match rotations {
        RotationMode::FinitePulse => {
            let schedule = PulseSchedule::builtin(ScheduleLabel::Prepare, cfg.h)?;
            sim.evolve(&ground, &schedule)
        }
        RotationMode::Instantaneous => {
            let mut state = ground;
            state.apply_uniform_unitary(&pi_rotation_about_xz());
            let hold = PulseSchedule::new(
                ScheduleLabel::Prepare,
                vec![PulseSegment::new(0.0, 0.0, 0.5)?],
            );
            sim.evolve(&state, &hold)
        }
    }
}

/// Runs the full protocol in the infinite-shot limit and reports every
/// estimate the certification step would consume.
pub fn measure_observables(
    cfg: &RydbergChainConfig,
    opts: &SimOptions,
) -> Result<RydbergRun, RydbergError> {
    cfg.validate()?;
    let graph = GraphSpec::path(cfg.n_sites)?;
    let plan = EstimationPlan::for_graph(&graph)?;
    let target = StateVector::graph_state(&graph)?;
    let mut sim = ChainSimulator::new(cfg.clone())?;

    let prepared = match opts.preparation {
        PreparationMode::IdealState => target.clone(),
        PreparationMode::Pulses => prepare_graph_state(&mut sim, opts.rotations)?,
    };
    let fidelity = prepared.fidelity(&target)?;

    let mut distributions = Vec::with_capacity(plan.schedule().len());
    for (k, direction) in plan.schedule().directions().iter().enumerate() {
        let readout = match opts.rotations {
            RotationMode::Instantaneous => {
                let mut rotated = prepared.clone();
                rotated.apply_uniform_unitary(&direction.rotation_to_z());
                rotated
            }
            RotationMode::FinitePulse => {
                let label = measurement_label_for_angle(plan.schedule().angles()[k])?;
                let schedule = PulseSchedule::builtin(label, cfg.h)?;
                sim.evolve(&prepared, &schedule)?
            }
        };
        distributions.push(readout.amplitudes().iter().map(|a| a.norm_sqr()).collect());
    }
    let estimates = certify::estimate_from_distributions(&plan, &distributions)?;
    let mut m_values = estimates.m_hat;
    m_values.push(estimates.u_hat);

    let schedules = [
        ScheduleLabel::Prepare,
        ScheduleLabel::MeasureX,
        ScheduleLabel::MeasureXzPlus,
        ScheduleLabel::MeasureXzMinus,
    ]
    .into_iter()
    .map(|label| PulseSchedule::builtin(label, cfg.h))
    .collect::<Result<Vec<_>, _>>()?;

    Ok(RydbergRun {
        n_sites: cfg.n_sites,
        h: cfg.h,
        c6: cfg.c6,
        interaction_cutoff: cfg.interaction_cutoff,
        rotations: opts.rotations,
        preparation: opts.preparation,
        m_values,
        fidelity,
        schedules,
    })
}
