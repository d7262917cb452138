//! The certification protocol: estimators, thresholds, verdicts, analytic
//! bounds and a Monte Carlo validation harness.
//!
//! The protocol certifies graph states whose graph is bipartite with one
//! all-even-degree side A. Measuring every qubit along the same direction in
//! the x-z plane gives access to the fully symmetric operator combinations
//! on each closed neighborhood; inverting that decomposition recovers, for
//! each vertex, the sum M_v of all single-X placements over the closed
//! neighborhood, whose ideal expectation is 1. A preliminary x-basis check
//! estimates the global spin-flip symmetry <U_X>, U_X = prod_{v in B} X_v.
//!
//! For the 1D odd-length path the whole schedule collapses to three fixed
//! bases (polar angles pi/4, 3pi/4, pi/2) with estimator weights
//! [sqrt(2), sqrt(2), -1] on interior triples and [1, -1, 0] on boundary
//! pairs. The weights are not hard-coded: they are re-derived at runtime by
//! least squares from the measurement decomposition and checked against
//! those constants (the boundary coefficient verifies to exactly 1).

use ndarray::{Array1, Array2};
use ndarray_linalg::least_squares::LeastSquaresSvd;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{self, PauliError, PauliString};
use crate::seeding;
use crate::stabilizer::{GraphSpec, StabilizerError};
use crate::statevector::{
    sample_uniform_outcome_counts, uniform_outcome_distribution, MeasurementDirection,
    MeasurementRecord, MixedStateEnsemble, StateVectorError,
};

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("graph is not uniformly certifiable: vertex {} {reason}", .vertex + 1)]
    NotCertifiable { vertex: usize, reason: String },
    #[error("epsilon must lie in (0, {max}), got {epsilon} (N = {n_qubits})")]
    EpsilonOutOfRange { epsilon: f64, max: f64, n_qubits: usize },
    #[error("sampler acts on {got} qubits but the target graph has {expected}")]
    QubitCountMismatch { expected: usize, got: usize },
    #[error("no record matches scheduled basis at polar angle {0} rad")]
    MissingBasis(f64),
    #[error("expected {expected} per-basis histograms, got {got}")]
    BasisCountMismatch { expected: usize, got: usize },
    #[error("records disagree on shot counts: {0} vs {1}")]
    ShotCountMismatch(usize, usize),
    #[error("histogram for basis {basis} sums to {got} shots, expected {expected}")]
    HistogramMismatch { basis: usize, expected: u64, got: u64 },
    #[error("estimator weights for support size {m} not recoverable: residual {residual}")]
    WeightsNotRecoverable { m: usize, residual: f64 },
    #[error("derived estimator weights deviate from the verified constants: {0}")]
    SelfTestFailed(String),
    #[error("trials per point must be at least 100, got {0}")]
    TooFewTrials(u64),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
    #[error(transparent)]
    StateVector(#[from] StateVectorError),
    #[error("least-squares solve failed: {0}")]
    Linalg(String),
}

/// The global spin-flip symmetry U_X = prod_{v in B} X_v, where B is the
/// complement of the all-even-degree partition side.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOperator {
    sites: Vec<usize>,
    operator: PauliString,
}

impl SymmetryOperator {
    pub fn for_graph(g: &GraphSpec) -> Result<Self, CertifyError> {
        let (_, b) = certifiable_partition(g)?;
        let mut operator = PauliString::identity(g.n_vertices())?;
        for &v in &b {
            operator.set_axis(v, Some(crate::pauli::Axis::X))?;
        }
        Ok(Self { sites: b, operator })
    }

    /// The qubits carrying an X factor.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn operator(&self) -> &PauliString {
        &self.operator
    }
}

/// Splits the graph into (A, B) with every vertex of A of even degree, or
/// explains which vertex obstructs the split.
pub fn certifiable_partition(g: &GraphSpec) -> Result<(Vec<usize>, Vec<usize>), CertifyError> {
    if let Some(partition) = g.even_partition() {
        return Ok(partition);
    }
    // Diagnose: either an odd cycle or odd-degree vertices on both sides.
    match g.bipartition() {
        None => {
            // Find a conflicting edge by redoing a 2-coloring greedily.
            let mut color = vec![None::<bool>; g.n_vertices()];
            for start in 0..g.n_vertices() {
                if color[start].is_some() {
                    continue;
                }
                color[start] = Some(false);
                let mut stack = vec![start];
                while let Some(v) = stack.pop() {
                    let cv = color[v].unwrap();
                    for w in g.neighbors(v) {
                        match color[w] {
                            None => {
                                color[w] = Some(!cv);
                                stack.push(w);
                            }
                            Some(cw) if cw == cv => {
                                return Err(CertifyError::NotCertifiable {
                                    vertex: w,
                                    reason: "lies on an odd cycle".into(),
                                });
                            }
                            _ => {}
                        }
                    }
                }
            }
            unreachable!("bipartition() returned None but no odd cycle found");
        }
        Some(_) => {
            // Bipartite, but some component has odd-degree vertices in both
            // color classes; report the smallest odd-degree vertex.
            let witness = (0..g.n_vertices())
                .find(|&v| g.degree(v) % 2 == 1)
                .unwrap_or(0);
            Err(CertifyError::NotCertifiable {
                vertex: witness,
                reason: "has odd degree while the opposite color class also \
                         contains an odd-degree vertex in the same component"
                    .into(),
            })
        }
    }
}

/// The measurable stand-in for vertex v's stabilizer: the sum of all
/// single-X placements over the closed neighborhood,
/// M_v = sum_{u in V'(v)} X_u prod_{w in V'(v) \ {u}} Z_w.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerCombination {
    vertex: usize,
    support: Vec<usize>,
    terms: Vec<PauliString>,
}

impl StabilizerCombination {
    pub fn vertex(&self) -> usize {
        self.vertex
    }

    /// The closed neighborhood, sorted.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }
}

/// One combination per vertex, in vertex order. Errors when the graph lacks
/// the bipartite/even-degree structure the symmetry argument needs.
pub fn stabilizer_combinations(g: &GraphSpec) -> Result<Vec<StabilizerCombination>, CertifyError> {
    certifiable_partition(g)?;
    let n = g.n_vertices();
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let support = g.closed_neighborhood(v);
        let m = support.len();
        let set = pauli::symmetric_operators(n, &support, pauli::AxisPair::default())?;
        // alpha counts Z letters; one X among m sites means alpha = m - 1.
        let terms = set.alpha_terms(m - 1).expect("alpha in 0..=m").to_vec();
        out.push(StabilizerCombination { vertex: v, support, terms });
    }
    Ok(out)
}

/// The list of uniform-measurement bases (polar angles in the x-z plane) a
/// certification run needs, plus the index of the pure-x basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSchedule {
    angles: Vec<f64>,
    directions: Vec<MeasurementDirection>,
    x_basis_index: usize,
}

impl BasisSchedule {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn directions(&self) -> &[MeasurementDirection] {
        &self.directions
    }

    pub fn x_basis_index(&self) -> usize {
        self.x_basis_index
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    fn from_angles(mut angles: Vec<f64>) -> Self {
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let x_basis_index = angles
            .iter()
            .position(|&t| (t - std::f64::consts::FRAC_PI_2).abs() < 1e-12)
            .expect("schedules always include the x basis");
        let directions = angles.iter().map(|&t| MeasurementDirection::from_polar_angle(t)).collect();
        Self { angles, directions, x_basis_index }
    }
}

/// Everything needed to turn per-basis outcome histograms into (u_hat,
/// m_hat): the basis schedule, the per-vertex combinations, the inversion
/// weights and the symmetry operator.
#[derive(Debug, Clone)]
pub struct EstimationPlan {
    n_qubits: usize,
    schedule: BasisSchedule,
    combinations: Vec<StabilizerCombination>,
    /// weights[v][k]: coefficient of basis k's product moment in m_hat_v.
    weights: Vec<Vec<f64>>,
    symmetry: SymmetryOperator,
    path_mode: bool,
}

impl EstimationPlan {
    /// Builds the schedule and inversion weights for a graph, running the
    /// fixed-constant self-test when the three-basis fast path applies.
    pub fn for_graph(g: &GraphSpec) -> Result<Self, CertifyError> {
        let symmetry = SymmetryOperator::for_graph(g)?;
        let combinations = stabilizer_combinations(g)?;
        let max_m = combinations.iter().map(|c| c.support.len()).max().unwrap_or(1);
        // Max closed neighborhood of 3 (paths, even cycles): the three fixed
        // bases invert every needed coefficient. Larger neighborhoods get a
        // theta grid of m+1 angles per distinct support size.
        let path_mode = max_m <= 3;
        let angles = if path_mode {
            vec![
                std::f64::consts::FRAC_PI_4,
                std::f64::consts::FRAC_PI_2,
                3.0 * std::f64::consts::FRAC_PI_4,
            ]
        } else {
            let mut angles = vec![std::f64::consts::FRAC_PI_2];
            let mut sizes: Vec<usize> = combinations.iter().map(|c| c.support.len()).collect();
            sizes.sort_unstable();
            sizes.dedup();
            for m in sizes {
                angles.extend(pauli::theta_grid(m));
            }
            angles
        };
        let schedule = BasisSchedule::from_angles(angles);
        let mut weights = Vec::with_capacity(combinations.len());
        for c in &combinations {
            let m = c.support.len();
            weights.push(inversion_weights(schedule.angles(), m, m - 1)?);
        }
        let plan =
            Self { n_qubits: g.n_vertices(), schedule, combinations, weights, symmetry, path_mode };
        if path_mode {
            plan.verify_path_constants()?;
        }
        Ok(plan)
    }

    /// Compares the derived weights against the protocol's closed-form
    /// constants: [sqrt(2), -1, sqrt(2)] over angles (pi/4, pi/2, 3pi/4) for
    /// size-3 supports and [1, 0, -1] for size-2 supports (boundary
    /// coefficient verified to be exactly 1).
    fn verify_path_constants(&self) -> Result<(), CertifyError> {
        let sqrt2 = std::f64::consts::SQRT_2;
        for (c, w) in self.combinations.iter().zip(&self.weights) {
            let expected: &[f64] = match c.support.len() {
                3 => &[sqrt2, -1.0, sqrt2],
                2 => &[1.0, 0.0, -1.0],
                1 => continue, // isolated vertex; no fixed constant to pin
                m => {
                    return Err(CertifyError::SelfTestFailed(format!(
                        "unexpected support size {m} in three-basis mode"
                    )))
                }
            };
            if w.len() != expected.len()
                || w.iter().zip(expected).any(|(a, b)| (a - b).abs() > 1e-9)
            {
                return Err(CertifyError::SelfTestFailed(format!(
                    "vertex {}: derived {w:?}, expected {expected:?}",
                    c.vertex + 1
                )));
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn schedule(&self) -> &BasisSchedule {
        &self.schedule
    }

    pub fn combinations(&self) -> &[StabilizerCombination] {
        &self.combinations
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn symmetry(&self) -> &SymmetryOperator {
        &self.symmetry
    }

    /// True when the fixed three-basis schedule is in use.
    pub fn path_mode(&self) -> bool {
        self.path_mode
    }

    /// The largest possible |m_hat_v| contribution of a single shot tuple:
    /// sum_k |w_k| (2 sqrt(2) + 1 in three-basis mode).
    pub fn estimator_range(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Least-squares weights w with sum_k w_k cos^a(t_k) sin^(m-a)(t_k) =
/// [a == alpha] for a = 0..m, verified to reproduce the target exactly.
fn inversion_weights(angles: &[f64], m: usize, alpha: usize) -> Result<Vec<f64>, CertifyError> {
    let rows = m + 1;
    let cols = angles.len();
    let mut a = Array2::<f64>::zeros((rows, cols));
    for (k, &theta) in angles.iter().enumerate() {
        for r in 0..rows {
            a[[r, k]] = theta.cos().powi(r as i32) * theta.sin().powi((m - r) as i32);
        }
    }
    let mut rhs = Array1::<f64>::zeros(rows);
    rhs[alpha] = 1.0;
    let solution = a
        .least_squares(&rhs)
        .map_err(|e| CertifyError::Linalg(e.to_string()))?
        .solution;
    let residual = (a.dot(&solution) - &rhs)
        .iter()
        .fold(0.0f64, |acc, r| acc.max(r.abs()));
    if residual > 1e-9 {
        return Err(CertifyError::WeightsNotRecoverable { m, residual });
    }
    Ok(solution.to_vec())
}

/// Mean of the outcome product over `support` under an outcome histogram
/// (index bit n-1-q set means qubit q read -1).
pub fn product_moment(counts: &[u64], n_qubits: usize, support: &[usize]) -> f64 {
    let mask: usize = support.iter().map(|&q| 1usize << (n_qubits - 1 - q)).sum();
    let mut signed = 0i128;
    let mut total = 0u64;
    for (b, &c) in counts.iter().enumerate() {
        total += c;
        if (b & mask).count_ones() % 2 == 1 {
            signed -= c as i128;
        } else {
            signed += c as i128;
        }
    }
    signed as f64 / total as f64
}

/// Same moment from an exact probability vector.
pub fn product_moment_exact(probs: &[f64], n_qubits: usize, support: &[usize]) -> f64 {
    let mask: usize = support.iter().map(|&q| 1usize << (n_qubits - 1 - q)).sum();
    probs
        .iter()
        .enumerate()
        .map(|(b, &p)| if (b & mask).count_ones() % 2 == 1 { -p } else { p })
        .sum()
}

/// The two protocol statistics: u_hat estimates <U_X>; m_hat[v] estimates
/// <M_v> for each vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEstimates {
    pub u_hat: f64,
    pub m_hat: Vec<f64>,
}

fn estimates_from_moments(
    plan: &EstimationPlan,
    moment: impl Fn(usize, &[usize]) -> f64,
) -> ProtocolEstimates {
    let u_hat = moment(plan.schedule.x_basis_index(), plan.symmetry.sites());
    let m_hat = plan
        .combinations
        .iter()
        .zip(&plan.weights)
        .map(|(c, w)| {
            w.iter()
                .enumerate()
                .filter(|(_, &wk)| wk.abs() > 1e-12)
                .map(|(k, &wk)| wk * moment(k, &c.support))
                .sum()
        })
        .collect();
    ProtocolEstimates { u_hat, m_hat }
}

/// Estimates from per-basis outcome histograms ordered like the plan's
/// schedule. All bases must carry the same number of shots.
pub fn estimate_from_counts(
    plan: &EstimationPlan,
    counts_per_basis: &[Vec<u64>],
) -> Result<ProtocolEstimates, CertifyError> {
    if counts_per_basis.len() != plan.schedule.len() {
        return Err(CertifyError::BasisCountMismatch {
            expected: plan.schedule.len(),
            got: counts_per_basis.len(),
        });
    }
    let dim = 1usize << plan.n_qubits;
    let mut totals = Vec::with_capacity(counts_per_basis.len());
    for (k, counts) in counts_per_basis.iter().enumerate() {
        if counts.len() != dim {
            return Err(CertifyError::HistogramMismatch {
                basis: k,
                expected: dim as u64,
                got: counts.len() as u64,
            });
        }
        totals.push(counts.iter().sum::<u64>());
    }
    if let Some(&odd) = totals.iter().find(|&&t| t == 0 || t != totals[0]) {
        return Err(CertifyError::ShotCountMismatch(totals[0] as usize, odd as usize));
    }
    Ok(estimates_from_moments(plan, |k, support| {
        product_moment(&counts_per_basis[k], plan.n_qubits, support)
    }))
}

/// Estimates from raw measurement records. Records are matched to scheduled
/// bases by direction; a record taken along the exact opposite direction is
/// accepted with all outcomes flipped (same measurement axis, reversed
/// orientation).
pub fn estimate_from_records(
    plan: &EstimationPlan,
    records: &[&MeasurementRecord],
) -> Result<ProtocolEstimates, CertifyError> {
    let dim = 1usize << plan.n_qubits;
    let mut counts_per_basis = Vec::with_capacity(plan.schedule.len());
    let mut shots_seen: Option<usize> = None;
    for (&angle, dir) in plan.schedule.angles().iter().zip(plan.schedule.directions()) {
        let (dx, dy, dz) = dir.components();
        let mut matched = None;
        for r in records {
            let (rx, ry, rz) = r.direction().components();
            let same = (rx - dx).abs() < 1e-9 && (ry - dy).abs() < 1e-9 && (rz - dz).abs() < 1e-9;
            let opposite =
                (rx + dx).abs() < 1e-9 && (ry + dy).abs() < 1e-9 && (rz + dz).abs() < 1e-9;
            if same || opposite {
                matched = Some((*r, opposite));
                break;
            }
        }
        let (record, flipped) = matched.ok_or(CertifyError::MissingBasis(angle))?;
        if record.n_qubits() != plan.n_qubits {
            return Err(CertifyError::QubitCountMismatch {
                expected: plan.n_qubits,
                got: record.n_qubits(),
            });
        }
        match shots_seen {
            None => shots_seen = Some(record.n_shots()),
            Some(t) if t != record.n_shots() => {
                return Err(CertifyError::ShotCountMismatch(t, record.n_shots()))
            }
            _ => {}
        }
        let mut counts = record.to_outcome_counts();
        if flipped {
            let mut flipped_counts = vec![0u64; dim];
            for (b, &c) in counts.iter().enumerate() {
                flipped_counts[b ^ (dim - 1)] = c;
            }
            counts = flipped_counts;
        }
        counts_per_basis.push(counts);
    }
    estimate_from_counts(plan, &counts_per_basis)
}

/// Infinite-shot estimates from exact per-basis outcome distributions,
/// ordered like the plan's schedule.
pub fn estimate_from_distributions(
    plan: &EstimationPlan,
    probs_per_basis: &[Vec<f64>],
) -> Result<ProtocolEstimates, CertifyError> {
    if probs_per_basis.len() != plan.schedule.len() {
        return Err(CertifyError::BasisCountMismatch {
            expected: plan.schedule.len(),
            got: probs_per_basis.len(),
        });
    }
    let dim = 1usize << plan.n_qubits;
    for (k, probs) in probs_per_basis.iter().enumerate() {
        if probs.len() != dim {
            return Err(CertifyError::HistogramMismatch {
                basis: k,
                expected: dim as u64,
                got: probs.len() as u64,
            });
        }
    }
    Ok(estimates_from_moments(plan, |k, support| {
        product_moment_exact(&probs_per_basis[k], plan.n_qubits, support)
    }))
}

/// Infinite-shot estimates: product moments computed from the exact Born
/// distribution of each scheduled basis (not from the operator
/// decomposition, so comparing against direct <M_v> expectations is a real
/// identity check).
pub fn estimate_exact(
    plan: &EstimationPlan,
    ensemble: &MixedStateEnsemble,
) -> Result<ProtocolEstimates, CertifyError> {
    if ensemble.n_qubits() != plan.n_qubits {
        return Err(CertifyError::QubitCountMismatch {
            expected: plan.n_qubits,
            got: ensemble.n_qubits(),
        });
    }
    let distributions: Vec<Vec<f64>> = plan
        .schedule
        .directions()
        .iter()
        .map(|d| uniform_outcome_distribution(ensemble, d))
        .collect();
    estimate_from_distributions(plan, &distributions)
}

/// Number of shots per basis guaranteeing the advertised error probability:
/// ceil(32 ln(12) / (25 epsilon^2)).
pub fn default_shot_count(epsilon: f64) -> Result<u64, CertifyError> {
    if !(epsilon > 0.0) {
        return Err(CertifyError::EpsilonOutOfRange {
            epsilon,
            max: f64::INFINITY,
            n_qubits: 0,
        });
    }
    Ok((32.0 * 12.0f64.ln() / (25.0 * epsilon * epsilon)).ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    Failed,
}

/// Algorithm thresholds, exactly as specified: fail when u_hat < 1 - 13e/4
/// (strict), certify when every m_hat_v > 1 - 9 sqrt(e) (strict). Ties
/// therefore pass the symmetry step and fail the stabilizer step.
pub fn decide(u_hat: f64, m_hat: &[f64], epsilon: f64) -> Verdict {
    if u_hat < u_threshold(epsilon) {
        return Verdict::Failed;
    }
    if m_hat.iter().all(|&m| m > m_threshold(epsilon)) {
        Verdict::Certified
    } else {
        Verdict::Failed
    }
}

pub fn u_threshold(epsilon: f64) -> f64 {
    1.0 - 13.0 * epsilon / 4.0
}

pub fn m_threshold(epsilon: f64) -> f64 {
    1.0 - 9.0 * epsilon.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationConfig {
    pub target: GraphSpec,
    pub epsilon: f64,
    /// Overrides the default shot count; the report flags any override.
    pub shots_per_basis: Option<u64>,
    pub seed: u64,
}

impl CertificationConfig {
    pub fn validate(&self) -> Result<(), CertifyError> {
        let n = self.target.n_vertices();
        let max = 1.0 / (64.0 * (n * n) as f64);
        if !(self.epsilon > 0.0 && self.epsilon < max) {
            return Err(CertifyError::EpsilonOutOfRange { epsilon: self.epsilon, max, n_qubits: n });
        }
        Ok(())
    }

    pub fn resolved_shots(&self) -> Result<u64, CertifyError> {
        match self.shots_per_basis {
            Some(t) => Ok(t),
            None => default_shot_count(self.epsilon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub u_min: f64,
    pub m_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub verdict: Verdict,
    pub u_hat: f64,
    pub m_hat: Vec<f64>,
    pub epsilon: f64,
    pub thresholds: Thresholds,
    pub shots_per_basis: u64,
    pub shots_overridden: bool,
    pub seed: u64,
    pub n_qubits: usize,
    /// Polar angles (x-z plane) of the measured bases, in schedule order.
    pub basis_polar_angles: Vec<f64>,
    pub graph: GraphSpec,
}

impl CertificationReport {
    fn assemble(
        config: &CertificationConfig,
        estimates: ProtocolEstimates,
        plan: &EstimationPlan,
        shots_per_basis: u64,
    ) -> Self {
        let verdict = decide(estimates.u_hat, &estimates.m_hat, config.epsilon);
        Self {
            verdict,
            u_hat: estimates.u_hat,
            m_hat: estimates.m_hat,
            epsilon: config.epsilon,
            thresholds: Thresholds {
                u_min: u_threshold(config.epsilon),
                m_min: m_threshold(config.epsilon),
            },
            shots_per_basis,
            shots_overridden: config.shots_per_basis.is_some(),
            seed: config.seed,
            n_qubits: plan.n_qubits(),
            basis_polar_angles: plan.schedule().angles().to_vec(),
            graph: config.target.clone(),
        }
    }
}

/// Anything that can produce outcome histograms of uniform measurements:
/// the simulation backend of [`certify`].
pub trait UniformShotSource {
    fn n_qubits(&self) -> usize;
    fn sample_counts(
        &mut self,
        direction: &MeasurementDirection,
        shots: u64,
        seed: u64,
    ) -> Result<Vec<u64>, StateVectorError>;
}

/// Samples from a fixed mixed-state ensemble.
pub struct EnsembleSampler {
    pub ensemble: MixedStateEnsemble,
}

impl UniformShotSource for EnsembleSampler {
    fn n_qubits(&self) -> usize {
        self.ensemble.n_qubits()
    }

    fn sample_counts(
        &mut self,
        direction: &MeasurementDirection,
        shots: u64,
        seed: u64,
    ) -> Result<Vec<u64>, StateVectorError> {
        sample_uniform_outcome_counts(&self.ensemble, direction, shots, seed)
    }
}

/// Runs the full protocol: samples T shots per scheduled basis from the
/// source (sub-seeded per basis), computes the estimates and applies the
/// thresholds.
pub fn certify<S: UniformShotSource + ?Sized>(
    source: &mut S,
    config: &CertificationConfig,
) -> Result<CertificationReport, CertifyError> {
    config.validate()?;
    if source.n_qubits() != config.target.n_vertices() {
        return Err(CertifyError::QubitCountMismatch {
            expected: config.target.n_vertices(),
            got: source.n_qubits(),
        });
    }
    let plan = EstimationPlan::for_graph(&config.target)?;
    let shots = config.resolved_shots()?;
    let mut counts_per_basis = Vec::with_capacity(plan.schedule().len());
    for (k, dir) in plan.schedule().directions().iter().enumerate() {
        let basis_seed = seeding::derive_seed(config.seed, "certify-basis", k as u64);
        counts_per_basis.push(source.sample_counts(dir, shots, basis_seed)?);
    }
    let estimates = estimate_from_counts(&plan, &counts_per_basis)?;
    Ok(CertificationReport::assemble(config, estimates, &plan, shots))
}

/// Applies the thresholds to pre-recorded measurement data.
pub fn certify_records(
    config: &CertificationConfig,
    records: &[&MeasurementRecord],
) -> Result<CertificationReport, CertifyError> {
    config.validate()?;
    let plan = EstimationPlan::for_graph(&config.target)?;
    let estimates = estimate_from_records(&plan, records)?;
    let shots = records.first().map_or(0, |r| r.n_shots() as u64);
    let mut report = CertificationReport::assemble(config, estimates, &plan, shots);
    // Shot counts came from the data, not the formula.
    report.shots_overridden = shots != config.resolved_shots().unwrap_or(0);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Analytic bounds.
// ---------------------------------------------------------------------------

/// If <U_X> >= 1 - e, any observable anticommuting with U_X has
/// |expectation| <= sqrt(2 e). Returns that bound, sqrt(2 (1 - u)).
pub fn corollary1_bound(u_expect: f64) -> f64 {
    (2.0 * (1.0 - u_expect).max(0.0)).sqrt()
}

/// Fidelity with the stabilizer state is at least
/// 1 - sum_i (1 - <g_i>) / 2 over the N generator expectations.
pub fn lemma2_fidelity_lower_bound(generator_expectations: &[f64]) -> f64 {
    1.0 - generator_expectations.iter().map(|e| (1.0 - e) / 2.0).sum::<f64>()
}

/// When fidelity >= 1 - e, every stabilizer group element has expectation
/// at least 1 - 2 sqrt(e).
pub fn lemma2_group_element_lower_bound(fidelity: f64) -> f64 {
    1.0 - 2.0 * (1.0 - fidelity).max(0.0).sqrt()
}

/// Fidelity upper bound from the symmetry expectation:
/// F <= 1 - (1 - <U_X>)/2, so <U_X> < 1 - e forces F < 1 - e/2.
pub fn lemma3_symmetry_bound(u_expect: f64) -> f64 {
    1.0 - (1.0 - u_expect) / 2.0
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

// ---------------------------------------------------------------------------
// Monte Carlo validation harness.
// ---------------------------------------------------------------------------

/// Which side of the guarantee a grid point probes: High prepares the exact
/// graph state; Low mixes in an orthogonal state down to fidelity
/// 1 - 8 N sqrt(e) - 0.01, just inside the rejection regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FidelityRegime {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPoint {
    pub n_qubits: usize,
    pub epsilon: f64,
    pub regime: FidelityRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub n_qubits: usize,
    pub epsilon: f64,
    pub regime: FidelityRegime,
    pub target_fidelity: f64,
    pub trials: u64,
    pub certified: u64,
    pub certified_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub shots_per_basis: u64,
}

impl MonteCarloRow {
    /// The one-sided check the guarantee implies: certified rate at least
    /// 2/3 (high regime) or at most 1/3 (low regime), each relaxed by the
    /// Wilson 95% halfwidth.
    pub fn theorem_consistent(&self) -> bool {
        let half = (self.wilson_high - self.wilson_low) / 2.0;
        match self.regime {
            FidelityRegime::High => self.certified_rate >= 2.0 / 3.0 - half,
            FidelityRegime::Low => self.certified_rate <= 1.0 / 3.0 + half,
        }
    }
}

/// Repeated seeded certification runs per grid point, reporting Certified
/// rates with Wilson 95% intervals. Trials are independently sub-seeded, so
/// the table is identical regardless of evaluation order.
pub fn monte_carlo_validation(
    points: &[MonteCarloPoint],
    trials_per_point: u64,
    base_seed: u64,
) -> Result<Vec<MonteCarloRow>, CertifyError> {
    if trials_per_point < 100 {
        return Err(CertifyError::TooFewTrials(trials_per_point));
    }
    let mut rows = Vec::with_capacity(points.len());
    for (pi, point) in points.iter().enumerate() {
        let graph = GraphSpec::path(point.n_qubits)?;
        let ideal = crate::statevector::StateVector::graph_state(&graph)?;
        let (ensemble, target_fidelity) = match point.regime {
            FidelityRegime::High => (MixedStateEnsemble::pure(ideal), 1.0),
            FidelityRegime::Low => {
                let p = 8.0 * point.n_qubits as f64 * point.epsilon.sqrt() + 0.01;
                if p >= 1.0 {
                    return Err(CertifyError::EpsilonOutOfRange {
                        epsilon: point.epsilon,
                        max: 1.0 / (64.0 * (point.n_qubits * point.n_qubits) as f64),
                        n_qubits: point.n_qubits,
                    });
                }
                let noisy = MixedStateEnsemble::pure(ideal)
                    .apply_noise(&crate::statevector::NoiseModel::ReplaceWithOrthogonal { p })?;
                (noisy, 1.0 - p)
            }
        };
        let mut sampler = EnsembleSampler { ensemble };
        let mut certified = 0u64;
        for t in 0..trials_per_point {
            let seed =
                seeding::derive_seed(base_seed, "mc-trial", (pi as u64) << 32 | t);
            let config = CertificationConfig {
                target: graph.clone(),
                epsilon: point.epsilon,
                shots_per_basis: None,
                seed,
            };
            let report = certify(&mut sampler, &config)?;
            if report.verdict == Verdict::Certified {
                certified += 1;
            }
        }
        let rate = certified as f64 / trials_per_point as f64;
        let (lo, hi) = wilson_interval(certified, trials_per_point, WILSON_Z_95);
        rows.push(MonteCarloRow {
            n_qubits: point.n_qubits,
            epsilon: point.epsilon,
            regime: point.regime,
            target_fidelity,
            trials: trials_per_point,
            certified,
            certified_rate: rate,
            wilson_low: lo,
            wilson_high: hi,
            shots_per_basis: default_shot_count(point.epsilon)?,
        });
    }
    Ok(rows)
}
