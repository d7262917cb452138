//! Signed Pauli strings and symmetrized Pauli operator families.
//!
//! A uniform measurement — the same rotation applied to every qubit followed
//! by a computational-basis readout — cannot distinguish *where* inside a
//! support a given letter sits. What it resolves instead are the symmetrized
//! sums `E(alpha; I)`: over a support `I`, the sum of all placements of
//! `alpha` letters of one axis and `|I| - alpha` letters of another. This
//! module provides the string type itself plus the combinatorics
//! ([`symmetric_operators`], [`count_independent_operators`]) and the small
//! linear systems ([`decomposition_coefficients`],
//! [`recover_symmetric_expectations`]) that connect measured products of
//! outcomes back to those sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of qubits a [`PauliString`] can carry (bitmask-backed).
pub const MAX_QUBITS: usize = 64;

/// Tolerance used by [`lemma1_bound_check`] and the angle-grid solvers.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PauliError {
    #[error("qubit count {0} out of range 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, n_qubits: usize },
    #[error("operands act on different qubit counts ({0} vs {1})")]
    QubitCountMismatch(usize, usize),
    #[error("product of anticommuting strings is not a signed Pauli string")]
    AnticommutingProduct,
    #[error("empty support")]
    EmptySupport,
    #[error("support contains duplicate qubit {0}")]
    DuplicateSupportIndex(usize),
    #[error("axis pair must name two distinct axes")]
    DegenerateAxisPair,
    #[error("cannot parse Pauli string from {0:?}")]
    Parse(String),
    #[error("expectation value {0} lies outside [-1, 1]")]
    ExpectationOutOfRange(f64),
    #[error("angle grid must contain {expected} distinct angles, got {got}")]
    BadAngleCount { expected: usize, got: usize },
    #[error("angle system is singular or nearly singular")]
    SingularSystem,
}

/// One of the three Pauli axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn bits(self) -> (bool, bool) {
        // (x bit, z bit)
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Ordered pair of distinct axes used to build a symmetrized family:
/// `alpha` letters of `first`, the rest of `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPair {
    pub first: Axis,
    pub second: Axis,
}

impl AxisPair {
    pub fn new(first: Axis, second: Axis) -> Result<Self, PauliError> {
        if first == second {
            return Err(PauliError::DegenerateAxisPair);
        }
        Ok(Self { first, second })
    }
}

impl Default for AxisPair {
    /// `(Z, X)`: the pair probed by rotations in the x–z plane.
    fn default() -> Self {
        Self { first: Axis::Z, second: Axis::X }
    }
}

/// A Hermitian signed Pauli string `sign * prod_i (i^{x_i z_i} X^{x_i} Z^{z_i})`,
/// i.e. an explicit +/- sign times a tensor product of I, X, Y, Z letters.
///
/// Stored in symplectic form: one X bitmask, one Z bitmask (`x & z` marks the
/// Y sites) plus the sign. Qubit `q` (0-indexed) is bit `q` of each mask; the
/// text form prints qubit 0 first, so `"+XIZ"` is X on qubit 0 and Z on
/// qubit 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_bits: u64,
    z_bits: u64,
    negative: bool,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self, PauliError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(PauliError::QubitCountOutOfRange(n_qubits));
        }
        Ok(Self { n_qubits, x_bits: 0, z_bits: 0, negative: false })
    }

    /// Build from raw symplectic masks (bits above `n_qubits` must be clear).
    pub fn from_masks(
        n_qubits: usize,
        x_bits: u64,
        z_bits: u64,
        negative: bool,
    ) -> Result<Self, PauliError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(PauliError::QubitCountOutOfRange(n_qubits));
        }
        let mask = mask_for(n_qubits);
        if x_bits & !mask != 0 || z_bits & !mask != 0 {
            let bad = 63 - ((x_bits | z_bits) & !mask).leading_zeros() as usize;
            return Err(PauliError::QubitIndexOutOfRange { index: bad, n_qubits });
        }
        Ok(Self { n_qubits, x_bits, z_bits, negative })
    }

    /// A single letter on one site, positive sign.
    pub fn single(n_qubits: usize, qubit: usize, axis: Axis) -> Result<Self, PauliError> {
        let mut p = Self::identity(n_qubits)?;
        p.set_axis(qubit, Some(axis))?;
        Ok(p)
    }

    /// Place `axis` (or identity for `None`) on `qubit`, keeping the sign.
    pub fn set_axis(&mut self, qubit: usize, axis: Option<Axis>) -> Result<(), PauliError> {
        if qubit >= self.n_qubits {
            return Err(PauliError::QubitIndexOutOfRange { index: qubit, n_qubits: self.n_qubits });
        }
        let bit = 1u64 << qubit;
        let (x, z) = axis.map_or((false, false), Axis::bits);
        self.x_bits = if x { self.x_bits | bit } else { self.x_bits & !bit };
        self.z_bits = if z { self.z_bits | bit } else { self.z_bits & !bit };
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bits(&self) -> u64 {
        self.x_bits
    }

    pub fn z_bits(&self) -> u64 {
        self.z_bits
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn negate(&self) -> Self {
        let mut p = self.clone();
        p.negative = !p.negative;
        p
    }

    pub fn with_sign(&self, negative: bool) -> Self {
        let mut p = self.clone();
        p.negative = negative;
        p
    }

    pub fn is_identity(&self) -> bool {
        self.x_bits == 0 && self.z_bits == 0
    }

    /// The letter on `qubit`, or `None` for identity.
    pub fn axis_at(&self, qubit: usize) -> Option<Axis> {
        let bit = 1u64 << qubit;
        match (self.x_bits & bit != 0, self.z_bits & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        (self.x_bits | self.z_bits).count_ones() as usize
    }

    /// Sorted list of non-identity sites.
    pub fn support(&self) -> Vec<usize> {
        let occupied = self.x_bits | self.z_bits;
        (0..self.n_qubits).filter(|&q| occupied >> q & 1 == 1).collect()
    }

    /// Symplectic test: true iff the strings anticommute.
    pub fn anticommutes(&self, other: &Self) -> Result<bool, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::QubitCountMismatch(self.n_qubits, other.n_qubits));
        }
        let cross = (self.x_bits & other.z_bits).count_ones()
            + (self.z_bits & other.x_bits).count_ones();
        Ok(cross % 2 == 1)
    }

    /// Product of two commuting strings (which is again Hermitian with a
    /// definite +/- sign). Anticommuting operands are rejected: their product
    /// carries a factor of i.
    pub fn try_multiply(&self, other: &Self) -> Result<Self, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::QubitCountMismatch(self.n_qubits, other.n_qubits));
        }
        // Work in "i^k * X^x Z^z" form: k = 2*negative + (#Y) mod 4, and
        // commuting Z's of the left factor past X's of the right one
        // contributes (-1)^{|z1 & x2|}.
        let k1 = 2 * u32::from(self.negative) + (self.x_bits & self.z_bits).count_ones();
        let k2 = 2 * u32::from(other.negative) + (other.x_bits & other.z_bits).count_ones();
        let swap = 2 * (self.z_bits & other.x_bits).count_ones();
        let x = self.x_bits ^ other.x_bits;
        let z = self.z_bits ^ other.z_bits;
        let y_count = (x & z).count_ones();
        let residual = (k1 + k2 + swap + 8 - (y_count % 4)) % 4;
        match residual {
            0 => Ok(Self { n_qubits: self.n_qubits, x_bits: x, z_bits: z, negative: false }),
            2 => Ok(Self { n_qubits: self.n_qubits, x_bits: x, z_bits: z, negative: true }),
            _ => Err(PauliError::AnticommutingProduct),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for q in 0..self.n_qubits {
            write!(f, "{}", self.axis_at(q).map_or('I', Axis::letter))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Parses `"+XIZ"`, `"-ZZX"` or `"XIZ"` (implicit positive sign).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PauliError::Parse(s.to_string());
        let trimmed = s.trim();
        let (negative, letters) = match trimmed.strip_prefix(['+', '-']) {
            Some(rest) => (trimmed.starts_with('-'), rest),
            None => (false, trimmed),
        };
        if letters.is_empty() || letters.len() > MAX_QUBITS {
            return Err(err());
        }
        let mut p = Self::identity(letters.len()).map_err(|_| err())?;
        p.negative = negative;
        for (q, c) in letters.chars().enumerate() {
            let axis = match c {
                'I' | 'i' => None,
                'X' | 'x' => Some(Axis::X),
                'Y' | 'y' => Some(Axis::Y),
                'Z' | 'z' => Some(Axis::Z),
                _ => return Err(err()),
            };
            p.set_axis(q, axis).map_err(|_| err())?;
        }
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn mask_for(n_qubits: usize) -> u64 {
    if n_qubits == 64 {
        u64::MAX
    } else {
        (1u64 << n_qubits) - 1
    }
}

/// All placements of `alpha` first-axis letters and `|I| - alpha` second-axis
/// letters on a support `I`, for every `alpha`.
#[derive(Debug, Clone)]
pub struct SymmetricOperatorSet {
    support: Vec<usize>,
    axes: AxisPair,
    /// `terms[alpha]` lists the C(|I|, alpha) strings of that stratum.
    terms: Vec<Vec<PauliString>>,
}

impl SymmetricOperatorSet {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn axes(&self) -> AxisPair {
        self.axes
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Strings carrying exactly `alpha` first-axis letters.
    pub fn alpha_terms(&self, alpha: usize) -> Option<&[PauliString]> {
        self.terms.get(alpha).map(Vec::as_slice)
    }

    pub fn strata(&self) -> &[Vec<PauliString>] {
        &self.terms
    }
}

/// Builds the symmetrized family on `support` within an `n_qubits` register.
///
/// For each `alpha` in `0..=|support|`, the stratum contains one string per
/// subset `J` of the support with `|J| = alpha`: first-axis letters on `J`,
/// second-axis letters on the complement. All signs are positive.
pub fn symmetric_operators(
    n_qubits: usize,
    support: &[usize],
    axes: AxisPair,
) -> Result<SymmetricOperatorSet, PauliError> {
    if support.is_empty() {
        return Err(PauliError::EmptySupport);
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(PauliError::DuplicateSupportIndex(w[0]));
        }
    }
    if let Some(&max) = sorted.last() {
        if max >= n_qubits {
            return Err(PauliError::QubitIndexOutOfRange { index: max, n_qubits });
        }
    }
    let m = sorted.len();
    let mut terms = vec![Vec::new(); m + 1];
    // Subsets of the support in binary-counter order; popcount picks the stratum.
    for subset in 0u64..(1u64 << m) {
        let alpha = subset.count_ones() as usize;
        let mut p = PauliString::identity(n_qubits)?;
        for (pos, &q) in sorted.iter().enumerate() {
            let axis = if subset >> pos & 1 == 1 { axes.first } else { axes.second };
            p.set_axis(q, Some(axis))?;
        }
        terms[alpha].push(p);
    }
    Ok(SymmetricOperatorSet { support: sorted, axes, terms })
}

/// Number of linearly independent operators a uniform measurement family can
/// resolve on `n_qubits` qubits: `sum_{k=1..N} C(N,k) * C(k+2,2)`.
///
/// Evaluated as the exact binomial sum; the closed form
/// `2^{N-3} (N^2 + 7N + 8) - 1` only makes sense for `N >= 3` and is checked
/// against this sum in the tests.
pub fn count_independent_operators(n_qubits: usize) -> Result<u128, PauliError> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(PauliError::QubitCountOutOfRange(n_qubits));
    }
    let mut total: u128 = 0;
    let mut choose: u128 = 1; // C(n, k), starting at k = 0
    for k in 1..=n_qubits {
        choose = choose * (n_qubits - k + 1) as u128 / k as u128;
        let strata = ((k + 2) * (k + 1) / 2) as u128; // C(k+2, 2)
        total += choose * strata;
    }
    Ok(total)
}

/// Coefficients `cos^alpha(theta) * sin^{m-alpha}(theta)` tying the measured
/// product of outcomes on an `m`-site support to the symmetrized expectations:
/// measuring every qubit along `cos(theta) Z + sin(theta) X` gives
/// `<prod outcomes> = sum_alpha coeff[alpha] * E(alpha; I)`.
pub fn decomposition_coefficients(support_size: usize, theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    (0..=support_size)
        .map(|alpha| c.powi(alpha as i32) * s.powi((support_size - alpha) as i32))
        .collect()
}

/// The measurement-angle grid used for an `m`-site support:
/// `theta_k = pi (k + 1/2) / (m + 1)` for `k = 0..=m`. The midpoint offset
/// keeps every `sin(theta_k)` nonzero so the resulting linear system stays
/// well conditioned.
pub fn theta_grid(support_size: usize) -> Vec<f64> {
    let m1 = (support_size + 1) as f64;
    (0..=support_size)
        .map(|k| std::f64::consts::PI * (k as f64 + 0.5) / m1)
        .collect()
}

/// Recovers all `E(alpha; I)` from measured outcome products at `m + 1`
/// distinct angles by solving the square linear system built from
/// [`decomposition_coefficients`].
pub fn recover_symmetric_expectations(
    thetas: &[f64],
    products: &[f64],
    support_size: usize,
) -> Result<Vec<f64>, PauliError> {
    let m = support_size;
    if thetas.len() != m + 1 {
        return Err(PauliError::BadAngleCount { expected: m + 1, got: thetas.len() });
    }
    if products.len() != m + 1 {
        return Err(PauliError::BadAngleCount { expected: m + 1, got: products.len() });
    }
    let rows: Vec<Vec<f64>> = thetas.iter().map(|&t| decomposition_coefficients(m, t)).collect();
    solve_square(rows, products.to_vec()).ok_or(PauliError::SingularSystem)
}

/// Uncertainty-relation check for a pair of anticommuting Pauli observables:
/// their expectation values must satisfy `e1^2 + e2^2 <= 1`.
///
/// Returns whether the bound holds within [`UNCERTAINTY_TOL`]; inputs outside
/// `[-1, 1]` (beyond the same tolerance) are rejected as invalid expectations.
pub fn lemma1_bound_check(e1: f64, e2: f64) -> Result<bool, PauliError> {
    for &e in &[e1, e2] {
        if !e.is_finite() || e.abs() > 1.0 + UNCERTAINTY_TOL {
            return Err(PauliError::ExpectationOutOfRange(e));
        }
    }
    Ok(e1 * e1 + e2 * e2 <= 1.0 + UNCERTAINTY_TOL)
}

/// Gaussian elimination with partial pivoting; `None` on (near-)singular input.
pub(crate) fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite pivots")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
