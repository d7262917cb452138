//! Graphs, stabilizer tableaus and state-family classification.
//!
//! A tableau here is nothing more than `N` independent, pairwise commuting
//! signed Pauli strings on `N` qubits — the generator description of a pure
//! stabilizer state. Membership queries ([`StabilizerTableau::pauli_expectation`])
//! run GF(2) elimination on the symplectic bit vectors while multiplying the
//! actual signed strings along, so signs come out exact.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{PauliError, PauliString};
use crate::seeding;

/// Supports at most this many qubits for full group enumeration (2^N terms).
pub const MAX_GROUP_ENUMERATION_QUBITS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum StabilizerError {
    #[error("graph needs at least one vertex")]
    EmptyGraph,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("cannot parse graph: {0}")]
    GraphParse(String),
    #[error("tableau needs at least one generator")]
    NoGenerators,
    #[error("generator {0} acts on {1} qubits, expected {2}")]
    GeneratorLengthMismatch(usize, usize, usize),
    #[error("expected {expected} generators for {expected} qubits, got {got}")]
    WrongGeneratorCount { expected: usize, got: usize },
    #[error("generators {0} and {1} anticommute")]
    NonCommutingGenerators(usize, usize),
    #[error("generator {0} is a product of the others")]
    DependentGenerator(usize),
    #[error("group enumeration supports at most {MAX_GROUP_ENUMERATION_QUBITS} qubits, got {0}")]
    TooManyQubitsForEnumeration(usize),
    #[error("cannot parse generator list: {0}")]
    GeneratorParse(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// An undirected simple graph; vertices are qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    n_vertices: usize,
    /// Sorted, deduplicated, each stored as (min, max).
    edges: Vec<(usize, usize)>,
}

impl GraphSpec {
    pub fn new(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self, StabilizerError> {
        if n_vertices == 0 {
            return Err(StabilizerError::EmptyGraph);
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(StabilizerError::SelfLoop(a, b));
            }
            if a >= n_vertices || b >= n_vertices {
                return Err(StabilizerError::EdgeOutOfRange(a, b, n_vertices));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Self { n_vertices, edges: normalized })
    }

    /// The 1D path 0 - 1 - ... - (n-1).
    pub fn path(n_vertices: usize) -> Result<Self, StabilizerError> {
        let edges: Vec<_> = (1..n_vertices).map(|v| (v - 1, v)).collect();
        Self::new(n_vertices, &edges)
    }

    /// The n-cycle (n >= 3).
    pub fn cycle(n_vertices: usize) -> Result<Self, StabilizerError> {
        if n_vertices < 3 {
            return Err(StabilizerError::GraphParse(format!(
                "cycle needs at least 3 vertices, got {n_vertices}"
            )));
        }
        let mut edges: Vec<_> = (1..n_vertices).map(|v| (v - 1, v)).collect();
        edges.push((0, n_vertices - 1));
        Self::new(n_vertices, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// The closed neighborhood {v} ∪ N(v), sorted.
    pub fn closed_neighborhood(&self, v: usize) -> Vec<usize> {
        let mut out = self.neighbors(v);
        out.push(v);
        out.sort_unstable();
        out
    }

    /// Two-colors each component; `None` if an odd cycle exists. The returned
    /// vector maps vertex -> color (false/true), with the smallest vertex of
    /// each component colored `false`.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let mut color: Vec<Option<bool>> = vec![None; self.n_vertices];
        let mut queue = VecDeque::new();
        for start in 0..self.n_vertices {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                let cv = color[v].unwrap();
                for w in self.neighbors(v) {
                    match color[w] {
                        None => {
                            color[w] = Some(!cv);
                            queue.push_back(w);
                        }
                        Some(cw) if cw == cv => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(|c| c.unwrap()).collect())
    }

    /// Splits the vertices into (A, B) where A has all-even degrees and B is
    /// its complement, if such a bipartition exists.
    ///
    /// Per connected component the 2-coloring is unique up to a swap; a
    /// component contributes its all-even side to A (when both sides qualify,
    /// the side containing the component's smallest vertex). Returns `None`
    /// when the graph is not bipartite or some component has odd-degree
    /// vertices on both sides.
    pub fn even_partition(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let color = self.bipartition()?;
        let mut component = vec![usize::MAX; self.n_vertices];
        let mut n_components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n_vertices {
            if component[start] != usize::MAX {
                continue;
            }
            component[start] = n_components;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for w in self.neighbors(v) {
                    if component[w] == usize::MAX {
                        component[w] = n_components;
                        queue.push_back(w);
                    }
                }
            }
            n_components += 1;
        }
        // For each component, decide which color class joins A.
        let mut a_color: Vec<Option<bool>> = vec![None; n_components];
        for comp in 0..n_components {
            let all_even = |side: bool| {
                (0..self.n_vertices)
                    .filter(|&v| component[v] == comp && color[v] == side)
                    .all(|v| self.degree(v) % 2 == 0)
            };
            let smallest = (0..self.n_vertices).find(|&v| component[v] == comp).unwrap();
            a_color[comp] = match (all_even(false), all_even(true)) {
                (true, true) => Some(color[smallest]),
                (true, false) => Some(false),
                (false, true) => Some(true),
                (false, false) => return None,
            };
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        for v in 0..self.n_vertices {
            if color[v] == a_color[component[v]].unwrap() {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        Some((a, b))
    }

    /// Parses the edge-list format: first significant line is the vertex
    /// count, then one `u v` pair per line, 1-indexed. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self, StabilizerError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| StabilizerError::GraphParse("empty input".into()))?
            .parse()
            .map_err(|_| StabilizerError::GraphParse("vertex count must be an integer".into()))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let (u, v) = (it.next(), it.next());
            let trailing = it.next();
            let (u, v) = match (u, v, trailing) {
                (Some(u), Some(v), None) => (u, v),
                _ => {
                    return Err(StabilizerError::GraphParse(format!(
                        "expected 'u v' on line {line:?}"
                    )))
                }
            };
            let parse = |s: &str| -> Result<usize, StabilizerError> {
                let val: usize = s
                    .parse()
                    .map_err(|_| StabilizerError::GraphParse(format!("bad vertex {s:?}")))?;
                if val == 0 {
                    return Err(StabilizerError::GraphParse(
                        "vertices are 1-indexed in edge lists".into(),
                    ));
                }
                Ok(val - 1)
            };
            edges.push((parse(u)?, parse(v)?));
        }
        Self::new(n, &edges)
    }

    /// Renders the same 1-indexed edge-list format accepted by
    /// [`GraphSpec::parse_edge_list`].
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n_vertices);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{} {}", a + 1, b + 1);
        }
        out
    }
}

/// Which structured family a stabilizer state falls into; variants are
/// ordered by specificity and [`StabilizerTableau::classify`] returns the
/// first match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateClass {
    /// A tensor product of single-qubit stabilizer states.
    Product,
    /// Admits a generating set of X-only and Z-only strings.
    Css,
    /// Graph state of a bipartite graph with an all-even-degree side.
    BipartiteEvenDegreeGraph,
    GeneralStabilizer,
}

/// N independent, pairwise commuting signed Pauli strings on N qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerTableau {
    n_qubits: usize,
    generators: Vec<PauliString>,
    /// Echelonized group elements (true signed strings) and their pivot bits.
    echelon: Vec<(u128, PauliString)>,
}

impl StabilizerTableau {
    pub fn new(generators: Vec<PauliString>) -> Result<Self, StabilizerError> {
        let n_qubits = generators.first().ok_or(StabilizerError::NoGenerators)?.n_qubits();
        for (i, g) in generators.iter().enumerate() {
            if g.n_qubits() != n_qubits {
                return Err(StabilizerError::GeneratorLengthMismatch(i, g.n_qubits(), n_qubits));
            }
        }
        if generators.len() != n_qubits {
            return Err(StabilizerError::WrongGeneratorCount {
                expected: n_qubits,
                got: generators.len(),
            });
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                if generators[i].anticommutes(&generators[j])? {
                    return Err(StabilizerError::NonCommutingGenerators(i, j));
                }
            }
        }
        let echelon = build_echelon(&generators)?;
        Ok(Self { n_qubits, generators, echelon })
    }

    /// Generators of the graph state of `g`: for each vertex `v`, X on `v`
    /// and Z on every neighbor, positive sign.
    pub fn graph_state(g: &GraphSpec) -> Result<Self, StabilizerError> {
        let n = g.n_vertices();
        let mut gens = Vec::with_capacity(n);
        for v in 0..n {
            let mut p = PauliString::single(n, v, crate::pauli::Axis::X)?;
            for w in g.neighbors(v) {
                p.set_axis(w, Some(crate::pauli::Axis::Z))?;
            }
            gens.push(p);
        }
        Self::new(gens)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// Exact expectation of a signed Pauli string in this state: +1 or -1 if
    /// the string (up to its sign) belongs to the stabilizer group, else 0.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<i8, StabilizerError> {
        if p.n_qubits() != self.n_qubits {
            return Err(PauliError::QubitCountMismatch(p.n_qubits(), self.n_qubits).into());
        }
        if p.is_identity() {
            return Ok(p.sign());
        }
        let mut residual = symplectic_bits(p);
        let mut acc: Option<PauliString> = None;
        for (pivot, element) in &self.echelon {
            let pivot_bit = 1u128 << (127 - pivot.leading_zeros());
            if residual & pivot_bit != 0 {
                residual ^= pivot;
                acc = Some(match acc {
                    None => element.clone(),
                    // Group elements commute, so the product stays Hermitian.
                    Some(a) => a.try_multiply(element).expect("abelian group"),
                });
            }
        }
        if residual != 0 {
            return Ok(0);
        }
        let acc = acc.expect("non-identity string with zero residual");
        debug_assert_eq!(symplectic_bits(&acc), symplectic_bits(p));
        Ok(if acc.sign() == p.sign() { 1 } else { -1 })
    }

    /// All 2^N group elements (identity included), built by Gray-code walks
    /// so each step is a single generator multiplication.
    pub fn group_elements(&self) -> Result<Vec<PauliString>, StabilizerError> {
        if self.n_qubits > MAX_GROUP_ENUMERATION_QUBITS {
            return Err(StabilizerError::TooManyQubitsForEnumeration(self.n_qubits));
        }
        let n = self.generators.len();
        let mut out = Vec::with_capacity(1 << n);
        let mut current = PauliString::identity(self.n_qubits)?;
        out.push(current.clone());
        for k in 1u64..(1 << n) {
            let flipped = (k ^ (k >> 1)) ^ ((k - 1) ^ ((k - 1) >> 1));
            let idx = flipped.trailing_zeros() as usize;
            current = current.try_multiply(&self.generators[idx]).expect("abelian group");
            out.push(current.clone());
        }
        Ok(out)
    }

    /// Classifies the state, most specific family first: product, then CSS,
    /// then bipartite-even-degree graph state (only checkable when the graph
    /// description `g` is supplied and is taken on trust), else general.
    pub fn classify(&self, g: Option<&GraphSpec>) -> StateClass {
        if self.is_product() {
            return StateClass::Product;
        }
        if self.is_css() {
            return StateClass::Css;
        }
        if let Some(graph) = g {
            if graph.n_vertices() == self.n_qubits && graph.even_partition().is_some() {
                return StateClass::BipartiteEvenDegreeGraph;
            }
        }
        StateClass::GeneralStabilizer
    }

    /// True iff the group contains a single-qubit element on every qubit
    /// (equivalently: some generating set is all weight-1 strings).
    fn is_product(&self) -> bool {
        use crate::pauli::Axis;
        (0..self.n_qubits).all(|q| {
            [Axis::X, Axis::Y, Axis::Z].iter().any(|&axis| {
                let p = PauliString::single(self.n_qubits, q, axis).expect("valid index");
                self.contains_up_to_sign(&p)
            })
        })
    }

    fn contains_up_to_sign(&self, p: &PauliString) -> bool {
        let mut residual = symplectic_bits(p);
        for (pivot, _) in &self.echelon {
            let pivot_bit = 1u128 << (127 - pivot.leading_zeros());
            if residual & pivot_bit != 0 {
                residual ^= pivot;
            }
        }
        residual == 0
    }

    /// CSS test on the group: some regenerating set splits into X-only and
    /// Z-only strings iff rank of the X-parts plus rank of the Z-parts
    /// equals N.
    fn is_css(&self) -> bool {
        let rank_x = gf2_rank(self.generators.iter().map(|g| g.x_bits()));
        let rank_z = gf2_rank(self.generators.iter().map(|g| g.z_bits()));
        rank_x + rank_z == self.n_qubits
    }

    /// Parses a generator list: one signed Pauli string per line (`+XZI`),
    /// `#` comments and blank lines allowed.
    pub fn parse_generator_list(text: &str) -> Result<Self, StabilizerError> {
        let mut gens = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let p: PauliString = line
                .parse()
                .map_err(|e: PauliError| StabilizerError::GeneratorParse(e.to_string()))?;
            gens.push(p);
        }
        Self::new(gens)
    }

    pub fn to_generator_list_string(&self) -> String {
        let mut out = String::new();
        for g in &self.generators {
            let _ = writeln!(out, "{g}");
        }
        out
    }
}

/// Average of all group-element expectations: the fidelity between this
/// stabilizer state and whatever state the `expectation` oracle describes,
/// `F = 2^{-N} sum_{P in group} <P>`.
pub fn fidelity_with_stabilizer_state<F>(
    tableau: &StabilizerTableau,
    mut expectation: F,
) -> Result<f64, StabilizerError>
where
    F: FnMut(&PauliString) -> f64,
{
    let elements = tableau.group_elements()?;
    let sum: f64 = elements.iter().map(|p| expectation(p)).sum();
    Ok(sum / elements.len() as f64)
}

/// A pseudorandom stabilizer state: conjugates the computational-basis
/// tableau {+Z_q} through a random H/S/CZ circuit. Intended for tests and
/// validation sweeps, not cryptographic-quality uniformity.
pub fn random_stabilizer_tableau(n_qubits: usize, seed: u64) -> StabilizerTableau {
    let mut rng = seeding::rng_from_seed(seed);
    let mut gens: Vec<PauliString> = (0..n_qubits)
        .map(|q| PauliString::single(n_qubits, q, crate::pauli::Axis::Z).expect("valid index"))
        .collect();
    let steps = 20 * n_qubits * n_qubits + 40;
    for _ in 0..steps {
        match rng.random_range(0..3u8) {
            0 => conjugate_h(&mut gens, rng.random_range(0..n_qubits)),
            1 => conjugate_s(&mut gens, rng.random_range(0..n_qubits)),
            _ => {
                if n_qubits > 1 {
                    let a = rng.random_range(0..n_qubits);
                    let mut b = rng.random_range(0..n_qubits - 1);
                    if b >= a {
                        b += 1;
                    }
                    conjugate_cz(&mut gens, a, b);
                }
            }
        }
    }
    // Random generator signs: flip by declaring -P a stabilizer instead of P.
    for g in &mut gens {
        if rng.random::<bool>() {
            *g = g.negate();
        }
    }
    StabilizerTableau::new(gens).expect("conjugation preserves tableau validity")
}

fn conjugate_h(gens: &mut [PauliString], q: usize) {
    for g in gens {
        let n = g.n_qubits();
        let (x, z) = (g.x_bits() >> q & 1 == 1, g.z_bits() >> q & 1 == 1);
        let negative = (g.sign() < 0) ^ (x && z);
        let bit = 1u64 << q;
        let xb = if z { g.x_bits() | bit } else { g.x_bits() & !bit };
        let zb = if x { g.z_bits() | bit } else { g.z_bits() & !bit };
        *g = PauliString::from_masks(n, xb, zb, negative).expect("masks in range");
    }
}

fn conjugate_s(gens: &mut [PauliString], q: usize) {
    for g in gens {
        let n = g.n_qubits();
        let (x, z) = (g.x_bits() >> q & 1 == 1, g.z_bits() >> q & 1 == 1);
        let negative = (g.sign() < 0) ^ (x && z);
        let bit = 1u64 << q;
        let zb = if x { g.z_bits() ^ bit } else { g.z_bits() };
        *g = PauliString::from_masks(n, g.x_bits(), zb, negative).expect("masks in range");
    }
}

fn conjugate_cz(gens: &mut [PauliString], a: usize, b: usize) {
    for g in gens {
        let n = g.n_qubits();
        let (xa, za) = (g.x_bits() >> a & 1 == 1, g.z_bits() >> a & 1 == 1);
        let (xb, zb) = (g.x_bits() >> b & 1 == 1, g.z_bits() >> b & 1 == 1);
        let negative = (g.sign() < 0) ^ (xa && xb && (za != zb));
        let mut zbits = g.z_bits();
        if xb {
            zbits ^= 1 << a;
        }
        if xa {
            zbits ^= 1 << b;
        }
        *g = PauliString::from_masks(n, g.x_bits(), zbits, negative).expect("masks in range");
    }
}

fn symplectic_bits(p: &PauliString) -> u128 {
    (p.x_bits() as u128) | ((p.z_bits() as u128) << 64)
}

/// Row-reduces the generators over GF(2), keeping each echelon row as a true
/// signed group element. Errors if some generator is dependent.
fn build_echelon(generators: &[PauliString]) -> Result<Vec<(u128, PauliString)>, StabilizerError> {
    let mut echelon: Vec<(u128, PauliString)> = Vec::with_capacity(generators.len());
    for (i, g) in generators.iter().enumerate() {
        let mut bits = symplectic_bits(g);
        let mut element = g.clone();
        for (pivot, row) in &echelon {
            let pivot_bit = 1u128 << (127 - pivot.leading_zeros());
            if bits & pivot_bit != 0 {
                bits ^= pivot;
                element = element.try_multiply(row).expect("abelian group");
            }
        }
        if bits == 0 {
            return Err(StabilizerError::DependentGenerator(i));
        }
        echelon.push((bits, element));
        // Keep echelon sorted by pivot for stable reduction order.
        echelon.sort_by_key(|(bits, _)| std::cmp::Reverse(*bits));
    }
    Ok(echelon)
}

fn gf2_rank(rows: impl Iterator<Item = u64>) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for mut row in rows {
        for &b in &basis {
            row = row.min(row ^ b);
        }
        if row != 0 {
            basis.push(row);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}
