//! Dense state vectors, uniform single-qubit measurements, noise ensembles
//! and seeded samplers.
//!
//! Basis-index convention: qubit `q` (0-indexed) occupies bit `n - 1 - q` of
//! the basis index, so qubit 0 is the most significant bit and the index read
//! in binary matches the ket left to right.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::PauliString;
use crate::seeding;
use crate::stabilizer::{StabilizerError, StabilizerTableau};

/// Dense simulation stores 2^N amplitudes; past this it will not fit.
pub const MAX_DENSE_QUBITS: usize = 24;

#[derive(Debug, Error)]
pub enum StateVectorError {
    #[error("dense simulation supports 1..={MAX_DENSE_QUBITS} qubits, got {0}")]
    QubitCountOutOfRange(usize),
    #[error("expected {expected} amplitudes, got {got}")]
    WrongAmplitudeCount { expected: usize, got: usize },
    #[error("state has (near-)zero norm")]
    ZeroNorm,
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, n_qubits: usize },
    #[error("operator acts on {0} qubits but state has {1}")]
    QubitCountMismatch(usize, usize),
    #[error("measurement direction must be a unit vector, |n| = {0}")]
    NotAUnitVector(f64),
    #[error("ensemble weights must be nonnegative and sum to 1, got sum {0}")]
    BadWeights(f64),
    #[error("ensemble needs at least one member")]
    EmptyEnsemble,
    #[error("ensemble members act on different qubit counts")]
    MixedQubitCounts,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("cannot parse measurement record: {0}")]
    RecordParse(String),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
}

/// Pure state of `n` qubits as 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>.
    pub fn zero_state(n_qubits: usize) -> Result<Self, StateVectorError> {
        check_qubit_count(n_qubits)?;
        let mut amplitudes = vec![Complex64::ZERO; 1 << n_qubits];
        amplitudes[0] = Complex64::ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// |+...+>.
    pub fn plus_state(n_qubits: usize) -> Result<Self, StateVectorError> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self { n_qubits, amplitudes: vec![amp; dim] })
    }

    /// The computational basis state |index>.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self, StateVectorError> {
        check_qubit_count(n_qubits)?;
        if index >= 1 << n_qubits {
            return Err(StateVectorError::WrongAmplitudeCount {
                expected: 1 << n_qubits,
                got: index,
            });
        }
        let mut amplitudes = vec![Complex64::ZERO; 1 << n_qubits];
        amplitudes[index] = Complex64::ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(
        n_qubits: usize,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, StateVectorError> {
        check_qubit_count(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(StateVectorError::WrongAmplitudeCount {
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Graph state: |+>^n with a controlled-Z across every edge.
    pub fn graph_state(graph: &crate::stabilizer::GraphSpec) -> Result<Self, StateVectorError> {
        let mut state = Self::plus_state(graph.n_vertices())?;
        for &(a, b) in graph.edges() {
            state.apply_cz(a, b)?;
        }
        Ok(state)
    }

    /// The unique +1 eigenstate of all tableau generators, built by applying
    /// the group projector to a basis state chosen from the state's support.
    pub fn from_stabilizer(tableau: &StabilizerTableau) -> Result<Self, StateVectorError> {
        let n = tableau.n_qubits();
        check_qubit_count(n)?;
        let seed_index = stabilizer_support_index(tableau);
        let mut state = Self::basis_state(n, seed_index)?;
        for gen in tableau.generators() {
            let mut rotated = state.clone();
            rotated.apply_pauli(gen)?;
            for (a, b) in state.amplitudes.iter_mut().zip(rotated.amplitudes) {
                *a = (*a + b) * 0.5;
            }
        }
        state.normalize()?;
        Ok(state)
    }

    /// Haar-ish random pure state: i.i.d. complex Gaussian amplitudes,
    /// normalized. Deterministic in the seed.
    pub fn random_pure_state(n_qubits: usize, seed: u64) -> Result<Self, StateVectorError> {
        check_qubit_count(n_qubits)?;
        let mut rng = seeding::rng_from_seed(seed);
        let amplitudes: Vec<Complex64> = (0..1usize << n_qubits)
            .map(|_| {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let mut state = Self { n_qubits, amplitudes };
        state.normalize()?;
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<(), StateVectorError> {
        let norm = self.norm();
        if norm < 1e-12 {
            return Err(StateVectorError::ZeroNorm);
        }
        for a in &mut self.amplitudes {
            *a /= norm;
        }
        Ok(())
    }

    pub fn inner_product(&self, other: &Self) -> Result<Complex64, StateVectorError> {
        if self.n_qubits != other.n_qubits {
            return Err(StateVectorError::QubitCountMismatch(other.n_qubits, self.n_qubits));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> Result<f64, StateVectorError> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// In-place P|psi> for a signed Pauli string.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<(), StateVectorError> {
        if p.n_qubits() != self.n_qubits {
            return Err(StateVectorError::QubitCountMismatch(p.n_qubits(), self.n_qubits));
        }
        let x_mask = qubit_mask_to_index_mask(p.x_bits(), self.n_qubits);
        let z_mask = qubit_mask_to_index_mask(p.z_bits(), self.n_qubits);
        let n_y = (p.x_bits() & p.z_bits()).count_ones();
        let mut global = Complex64::new(f64::from(p.sign()), 0.0);
        global *= Complex64::i().powu(n_y);
        let dim = self.amplitudes.len();
        let mut out = vec![Complex64::ZERO; dim];
        for (b, &amp) in self.amplitudes.iter().enumerate() {
            let parity = (b as u64 & z_mask).count_ones() & 1;
            let sign = if parity == 1 { -global } else { global };
            out[b ^ x_mask as usize] = sign * amp;
        }
        self.amplitudes = out;
        Ok(())
    }

    /// <psi| P |psi> (real because P is Hermitian).
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64, StateVectorError> {
        if p.n_qubits() != self.n_qubits {
            return Err(StateVectorError::QubitCountMismatch(p.n_qubits(), self.n_qubits));
        }
        let x_mask = qubit_mask_to_index_mask(p.x_bits(), self.n_qubits) as usize;
        let z_mask = qubit_mask_to_index_mask(p.z_bits(), self.n_qubits);
        let n_y = (p.x_bits() & p.z_bits()).count_ones();
        let global = Complex64::new(f64::from(p.sign()), 0.0) * Complex64::i().powu(n_y);
        let mut acc = Complex64::ZERO;
        for (b, &amp) in self.amplitudes.iter().enumerate() {
            let parity = (b as u64 & z_mask).count_ones() & 1;
            let sign = if parity == 1 { -global } else { global };
            acc += self.amplitudes[b ^ x_mask].conj() * sign * amp;
        }
        debug_assert!(acc.im.abs() < 1e-9, "Hermitian expectation should be real");
        Ok(acc.re)
    }

    /// In-place 2x2 unitary on one qubit; `u` is row-major [[u00,u01],[u10,u11]].
    pub fn apply_single_qubit_unitary(
        &mut self,
        qubit: usize,
        u: &[[Complex64; 2]; 2],
    ) -> Result<(), StateVectorError> {
        if qubit >= self.n_qubits {
            return Err(StateVectorError::QubitIndexOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let bit = 1usize << (self.n_qubits - 1 - qubit);
        for b in 0..self.amplitudes.len() {
            if b & bit != 0 {
                continue;
            }
            let a0 = self.amplitudes[b];
            let a1 = self.amplitudes[b | bit];
            self.amplitudes[b] = u[0][0] * a0 + u[0][1] * a1;
            self.amplitudes[b | bit] = u[1][0] * a0 + u[1][1] * a1;
        }
        Ok(())
    }

    /// The same 2x2 unitary on every qubit.
    pub fn apply_uniform_unitary(&mut self, u: &[[Complex64; 2]; 2]) {
        for q in 0..self.n_qubits {
            self.apply_single_qubit_unitary(q, u).expect("qubit in range");
        }
    }

    /// Controlled-Z between two qubits.
    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<(), StateVectorError> {
        for &q in &[a, b] {
            if q >= self.n_qubits {
                return Err(StateVectorError::QubitIndexOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let mask = (1usize << (self.n_qubits - 1 - a)) | (1usize << (self.n_qubits - 1 - b));
        for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }
}

/// The probe direction of a uniform measurement: each qubit is measured along
/// the Bloch vector `n`, i.e. the observable n.sigma is read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDirection {
    x: f64,
    y: f64,
    z: f64,
}

impl MeasurementDirection {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, StateVectorError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(StateVectorError::NotAUnitVector(norm));
        }
        Ok(Self { x, y, z })
    }

    /// Direction (sin t, 0, cos t) in the x-z plane.
    pub fn from_polar_angle(theta: f64) -> Self {
        Self { x: theta.sin(), y: 0.0, z: theta.cos() }
    }

    pub fn x_axis() -> Self {
        Self { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn z_axis() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn components(&self) -> (f64, f64, f64) {
        (self.x, self.y, self.z)
    }

    /// Unitary `U` with `U (n.sigma) U^dagger = Z`: rotates this direction to
    /// the z-axis so a computational readout measures n.sigma.
    pub fn rotation_to_z(&self) -> [[Complex64; 2]; 2] {
        let (nx, ny, nz) = (self.x, self.y, self.z);
        // Rotation axis a = (n x z)/|n x z|, angle phi = arccos(n_z).
        let (ax, ay) = (ny, -nx);
        let cross_norm = (ax * ax + ay * ay).sqrt();
        if cross_norm < 1e-12 {
            if nz > 0.0 {
                return [[Complex64::ONE, Complex64::ZERO], [Complex64::ZERO, Complex64::ONE]];
            }
            // n = -z: rotate by pi about y.
            return [
                [Complex64::ZERO, -Complex64::ONE],
                [Complex64::ONE, Complex64::ZERO],
            ];
        }
        let (ax, ay) = (ax / cross_norm, ay / cross_norm);
        let phi = nz.clamp(-1.0, 1.0).acos();
        // exp(-i phi (a.sigma)/2) = cos(phi/2) I - i sin(phi/2) (ax X + ay Y).
        let c = Complex64::new((phi / 2.0).cos(), 0.0);
        let s = (phi / 2.0).sin();
        let off01 = Complex64::new(-ay * s, -ax * s);
        let off10 = Complex64::new(ay * s, -ax * s);
        [[c, off01], [off10, c]]
    }
}

/// Convex mixture of pure states; the density matrix sum_i w_i |psi_i><psi_i|.
#[derive(Debug, Clone)]
pub struct MixedStateEnsemble {
    members: Vec<StateVector>,
    weights: Vec<f64>,
}

impl MixedStateEnsemble {
    pub fn pure(state: StateVector) -> Self {
        Self { members: vec![state], weights: vec![1.0] }
    }

    /// I/2^N as an equal-weight mixture of the computational basis states.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self, StateVectorError> {
        let dim = 1usize << n_qubits;
        let members: Result<Vec<_>, _> =
            (0..dim).map(|b| StateVector::basis_state(n_qubits, b)).collect();
        Self::new(members?, vec![1.0 / dim as f64; dim])
    }

    pub fn new(members: Vec<StateVector>, weights: Vec<f64>) -> Result<Self, StateVectorError> {
        if members.is_empty() {
            return Err(StateVectorError::EmptyEnsemble);
        }
        if members.len() != weights.len() {
            return Err(StateVectorError::BadWeights(f64::NAN));
        }
        let n = members[0].n_qubits();
        if members.iter().any(|m| m.n_qubits() != n) {
            return Err(StateVectorError::MixedQubitCounts);
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(StateVectorError::BadWeights(sum));
        }
        Ok(Self { members, weights })
    }

    pub fn n_qubits(&self) -> usize {
        self.members[0].n_qubits()
    }

    pub fn members(&self) -> &[StateVector] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// tr(rho P).
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64, StateVectorError> {
        let mut acc = 0.0;
        for (m, &w) in self.members.iter().zip(&self.weights) {
            if w > 0.0 {
                acc += w * m.pauli_expectation(p)?;
            }
        }
        Ok(acc)
    }

    /// <phi| rho |phi>: overlap fidelity with a pure reference state.
    pub fn fidelity_with_pure(&self, reference: &StateVector) -> Result<f64, StateVectorError> {
        let mut acc = 0.0;
        for (m, &w) in self.members.iter().zip(&self.weights) {
            if w > 0.0 {
                acc += w * reference.fidelity(m)?;
            }
        }
        Ok(acc)
    }

    /// Applies a noise channel, growing the mixture as needed.
    pub fn apply_noise(&self, noise: &NoiseModel) -> Result<Self, StateVectorError> {
        let n = self.n_qubits();
        match *noise {
            NoiseModel::Depolarizing { p } => {
                check_probability(p)?;
                let dim = 1usize << n;
                let mut members = self.members.clone();
                let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - p)).collect();
                for b in 0..dim {
                    members.push(StateVector::basis_state(n, b)?);
                    weights.push(p / dim as f64);
                }
                Self::new(members, weights)
            }
            NoiseModel::UniformZRotation { p, angle } => {
                check_probability(p)?;
                let half = angle / 2.0;
                let u = [
                    [Complex64::from_polar(1.0, -half), Complex64::ZERO],
                    [Complex64::ZERO, Complex64::from_polar(1.0, half)],
                ];
                let mut members = self.members.clone();
                let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - p)).collect();
                for (m, &w) in self.members.iter().zip(&self.weights) {
                    let mut rotated = m.clone();
                    rotated.apply_uniform_unitary(&u);
                    members.push(rotated);
                    weights.push(w * p);
                }
                Self::new(members, weights)
            }
            NoiseModel::ReplaceWithOrthogonal { p } => {
                check_probability(p)?;
                let mut members = Vec::with_capacity(2 * self.members.len());
                let mut weights = Vec::with_capacity(2 * self.members.len());
                for (m, &w) in self.members.iter().zip(&self.weights) {
                    members.push(m.clone());
                    weights.push(w * (1.0 - p));
                    members.push(orthogonal_partner(m)?);
                    weights.push(w * p);
                }
                Self::new(members, weights)
            }
        }
    }
}

/// Noise channels for validation sweeps. All three leave the state's qubit
/// count unchanged and are deterministic (the randomness lives in the
/// measurement sampling, not the channel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// rho -> (1-p) rho + p I/2^N.
    Depolarizing { p: f64 },
    /// With probability p, the same exp(-i angle Z/2) on every qubit.
    UniformZRotation { p: f64, angle: f64 },
    /// With probability p, replace the state by a fixed orthogonal partner;
    /// the fidelity with the original pure state is exactly 1 - p.
    ReplaceWithOrthogonal { p: f64 },
}

/// Deterministic orthogonal companion: the basis state of largest amplitude,
/// Gram-Schmidt-orthogonalized against `state`.
fn orthogonal_partner(state: &StateVector) -> Result<StateVector, StateVectorError> {
    let amps = state.amplitudes();
    let (best, _) = amps
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .expect("nonempty amplitudes");
    let mut partner = StateVector::basis_state(state.n_qubits(), best)?;
    let overlap = state.inner_product(&partner)?;
    for (p, s) in partner.amplitudes.iter_mut().zip(amps) {
        *p -= overlap * s;
    }
    partner.normalize()?;
    Ok(partner)
}

/// Per-member Born distributions of a uniform measurement along `direction`,
/// plus the mixture distribution. Outcome index bit n-1-q holds qubit q
/// (0 = outcome +1, 1 = outcome -1).
pub fn uniform_outcome_distribution(
    ensemble: &MixedStateEnsemble,
    direction: &MeasurementDirection,
) -> Vec<f64> {
    let u = direction.rotation_to_z();
    let dim = 1usize << ensemble.n_qubits();
    let mut probs = vec![0.0; dim];
    for (m, &w) in ensemble.members().iter().zip(ensemble.weights()) {
        if w == 0.0 {
            continue;
        }
        let mut rotated = m.clone();
        rotated.apply_uniform_unitary(&u);
        for (p, a) in probs.iter_mut().zip(rotated.amplitudes()) {
            *p += w * a.norm_sqr();
        }
    }
    probs
}

/// One uniform-measurement dataset: T shots by N qubits of +-1 outcomes,
/// remembering the probe direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    n_qubits: usize,
    direction: MeasurementDirection,
    /// Row-major, shot-by-shot; entries are +1 or -1.
    outcomes: Vec<i8>,
}

impl MeasurementRecord {
    pub fn new(
        n_qubits: usize,
        direction: MeasurementDirection,
        outcomes: Vec<i8>,
    ) -> Result<Self, StateVectorError> {
        if n_qubits == 0 || outcomes.is_empty() || outcomes.len() % n_qubits != 0 {
            return Err(StateVectorError::RecordParse(format!(
                "{} outcomes do not form whole {n_qubits}-qubit shots",
                outcomes.len()
            )));
        }
        if outcomes.iter().any(|&o| o != 1 && o != -1) {
            return Err(StateVectorError::RecordParse("outcomes must be +-1".into()));
        }
        Ok(Self { n_qubits, direction, outcomes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_shots(&self) -> usize {
        self.outcomes.len() / self.n_qubits
    }

    pub fn direction(&self) -> &MeasurementDirection {
        &self.direction
    }

    pub fn shot(&self, t: usize) -> &[i8] {
        &self.outcomes[t * self.n_qubits..(t + 1) * self.n_qubits]
    }

    /// Histogram over outcome bit patterns (bit n-1-q set when qubit q read -1).
    pub fn to_outcome_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; 1 << self.n_qubits];
        for t in 0..self.n_shots() {
            let mut idx = 0usize;
            for (q, &o) in self.shot(t).iter().enumerate() {
                if o == -1 {
                    idx |= 1 << (self.n_qubits - 1 - q);
                }
            }
            counts[idx] += 1;
        }
        counts
    }

    /// CSV: one shot per row, comma-separated +-1 values, no header.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.outcomes.len() * 3);
        for t in 0..self.n_shots() {
            let row: Vec<String> = self.shot(t).iter().map(|o| o.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(
        text: &str,
        direction: MeasurementDirection,
    ) -> Result<Self, StateVectorError> {
        let mut outcomes = Vec::new();
        let mut n_qubits = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<i8>, _> = line.split(',').map(|f| f.trim().parse::<i8>()).collect();
            let row = row.map_err(|e| {
                StateVectorError::RecordParse(format!("line {}: {e}", lineno + 1))
            })?;
            match n_qubits {
                None => n_qubits = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(StateVectorError::RecordParse(format!(
                        "line {}: expected {n} fields, got {}",
                        lineno + 1,
                        row.len()
                    )));
                }
                _ => {}
            }
            outcomes.extend(row);
        }
        let n_qubits =
            n_qubits.ok_or_else(|| StateVectorError::RecordParse("empty record".into()))?;
        Self::new(n_qubits, direction, outcomes)
    }

    /// Compact binary layout: u32 qubit count, u64 shot count, three f64
    /// direction components (all little-endian), then the outcome matrix as
    /// packed bits, LSB first, row-major, bit set = outcome +1.
    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let shots = self.n_shots();
        let mut out = Vec::with_capacity(4 + 8 + 24 + self.outcomes.len() / 8 + 1);
        out.extend_from_slice(&(self.n_qubits as u32).to_le_bytes());
        out.extend_from_slice(&(shots as u64).to_le_bytes());
        let (x, y, z) = self.direction.components();
        for c in [x, y, z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        let mut byte = 0u8;
        for (i, &o) in self.outcomes.iter().enumerate() {
            if o == 1 {
                byte |= 1 << (i % 8);
            }
            if i % 8 == 7 {
                out.push(byte);
                byte = 0;
            }
        }
        if !self.outcomes.len().is_multiple_of(8) {
            out.push(byte);
        }
        out
    }

    pub fn from_binary_bytes(bytes: &[u8]) -> Result<Self, StateVectorError> {
        let parse_err = |msg: &str| StateVectorError::RecordParse(msg.into());
        if bytes.len() < 36 {
            return Err(parse_err("truncated header"));
        }
        let n_qubits = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let shots = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let mut comps = [0.0f64; 3];
        for (i, c) in comps.iter_mut().enumerate() {
            *c = f64::from_le_bytes(bytes[12 + 8 * i..20 + 8 * i].try_into().unwrap());
        }
        let direction = MeasurementDirection::new(comps[0], comps[1], comps[2])?;
        let n_values = n_qubits
            .checked_mul(shots)
            .ok_or_else(|| parse_err("outcome matrix size overflows"))?;
        let n_bytes = n_values.div_ceil(8);
        if bytes.len() != 36 + n_bytes {
            return Err(parse_err("payload length does not match header"));
        }
        let mut outcomes = Vec::with_capacity(n_values);
        for i in 0..n_values {
            let bit = bytes[36 + i / 8] >> (i % 8) & 1;
            outcomes.push(if bit == 1 { 1 } else { -1 });
        }
        Self::new(n_qubits, direction, outcomes)
    }
}

/// Draws `shots` uniform-measurement shots one by one, returning the full
/// outcome matrix. Memory scales with shots x qubits; for estimators that
/// only need outcome frequencies use [`sample_uniform_outcome_counts`].
pub fn sample_uniform_measurement(
    ensemble: &MixedStateEnsemble,
    direction: &MeasurementDirection,
    shots: usize,
    seed: u64,
) -> Result<MeasurementRecord, StateVectorError> {
    if shots == 0 {
        return Err(StateVectorError::ZeroShots);
    }
    let n = ensemble.n_qubits();
    let u = direction.rotation_to_z();
    // Per-member cumulative outcome distributions.
    let mut member_cdfs = Vec::with_capacity(ensemble.members().len());
    for m in ensemble.members() {
        let mut rotated = m.clone();
        rotated.apply_uniform_unitary(&u);
        let mut acc = 0.0;
        let cdf: Vec<f64> = rotated
            .amplitudes()
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        member_cdfs.push(cdf);
    }
    let weight_cdf: Vec<f64> = ensemble
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let mut rng = seeding::rng_from_seed(seed);
    let mut outcomes = Vec::with_capacity(shots * n);
    for _ in 0..shots {
        let member = cdf_sample(&weight_cdf, rng.random::<f64>());
        let index = cdf_sample(&member_cdfs[member], rng.random::<f64>());
        for q in 0..n {
            let bit = index >> (n - 1 - q) & 1;
            outcomes.push(if bit == 0 { 1 } else { -1 });
        }
    }
    MeasurementRecord::new(n, *direction, outcomes)
}

/// Multinomial outcome counts for `shots` uniform-measurement shots, drawn
/// from the exact mixture distribution without materializing per-shot rows.
/// The histogram is distributed identically to
/// [`sample_uniform_measurement`]'s (both are multinomial over the same Born
/// probabilities), so symmetric estimators can run on it unchanged at any
/// shot count.
pub fn sample_uniform_outcome_counts(
    ensemble: &MixedStateEnsemble,
    direction: &MeasurementDirection,
    shots: u64,
    seed: u64,
) -> Result<Vec<u64>, StateVectorError> {
    if shots == 0 {
        return Err(StateVectorError::ZeroShots);
    }
    let probs = uniform_outcome_distribution(ensemble, direction);
    let mut rng = seeding::rng_from_seed(seed);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    for (b, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if b == probs.len() - 1 {
            counts[b] = remaining;
            break;
        }
        let ratio = if mass_left > 1e-15 { (p / mass_left).clamp(0.0, 1.0) } else { 1.0 };
        let k = if ratio >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, ratio).expect("ratio in [0,1]").sample(&mut rng)
        };
        counts[b] = k;
        remaining -= k;
        mass_left -= p;
    }
    Ok(counts)
}

fn cdf_sample(cdf: &[f64], r: f64) -> usize {
    // partition_point returns the first index with cdf > r; the trailing
    // entries can fall fractionally short of 1.0, hence the min.
    cdf.partition_point(|&c| c <= r).min(cdf.len() - 1)
}

fn check_qubit_count(n: usize) -> Result<(), StateVectorError> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(StateVectorError::QubitCountOutOfRange(n));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<(), StateVectorError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StateVectorError::BadProbability(p));
    }
    Ok(())
}

/// Maps a qubit-indexed bit mask (bit q = qubit q) to a basis-index mask
/// (bit n-1-q = qubit q).
fn qubit_mask_to_index_mask(mask: u64, n_qubits: usize) -> u64 {
    let mut out = 0u64;
    for q in 0..n_qubits {
        if mask >> q & 1 == 1 {
            out |= 1 << (n_qubits - 1 - q);
        }
    }
    out
}

/// A basis index inside the support of the stabilizer state: solves the
/// parity constraints imposed by the Z-only subgroup, found by eliminating
/// the X-parts of the generators.
fn stabilizer_support_index(tableau: &StabilizerTableau) -> usize {
    let n = tableau.n_qubits();
    // Eliminate X-parts; rows that become X-free are Z-only group elements.
    let mut x_rows: Vec<(u64, PauliString)> = Vec::new();
    let mut z_constraints: Vec<(u64, bool)> = Vec::new();
    for g in tableau.generators() {
        let mut elem = g.clone();
        loop {
            if elem.x_bits() == 0 {
                if !elem.is_identity() {
                    // parity(z & b) must be 0 for sign +, 1 for sign -.
                    z_constraints.push((elem.z_bits(), elem.sign() < 0));
                }
                break;
            }
            let lead = 63 - elem.x_bits().leading_zeros() as usize;
            match x_rows.iter().find(|(l, _)| *l == lead as u64) {
                Some((_, row)) => elem = elem.try_multiply(row).expect("abelian group"),
                None => {
                    x_rows.push((lead as u64, elem));
                    break;
                }
            }
        }
    }
    // Solve parity(z_mask & b) = s over GF(2) for b (qubit-indexed bits).
    let mut pivots: Vec<(usize, u64, bool)> = Vec::new(); // (pivot bit, mask, rhs)
    for (mut mask, mut rhs) in z_constraints {
        for &(p, m, r) in &pivots {
            if mask >> p & 1 == 1 {
                mask ^= m;
                rhs ^= r;
            }
        }
        if mask == 0 {
            debug_assert!(!rhs, "inconsistent stabilizer constraints");
            continue;
        }
        let p = 63 - mask.leading_zeros() as usize;
        pivots.push((p, mask, rhs));
    }
    let mut b_qubit_mask = 0u64;
    // Back-substitute with free variables set to 0 (pivots are in
    // decreasing order, so later rows never touch earlier pivot bits).
    for &(p, mask, rhs) in pivots.iter().rev() {
        let parity = (mask & b_qubit_mask).count_ones() & 1 == 1;
        if parity != rhs {
            b_qubit_mask ^= 1 << p;
        }
    }
    qubit_mask_to_index_mask(b_qubit_mask, n) as usize
}
