//! Hilbert-space indexing and pure-state storage for the walk basis |xcs⟩.
//!
//! A basis ket is labeled by the particle position `x ∈ [0, N)`, its color
//! `c ∈ [0, d_x)`, and the spin configuration `s ∈ [0, 2^N)`, where the spin
//! of node `x` is bit `x` of `s` (least significant first), `0` = up, `1` =
//! down.
//!
//! Two layouts coexist:
//! * the *padded tensor* `(x, c, s)` with the color axis padded to the
//!   maximum degree `d`, used for fast structured stepping;
//! * the *packed vector* of dimension `(Σ_x d_x)·2^N` enumerating only valid
//!   colors, used for the dense evolution operator. The packed index of
//!   `(x, c, s)` is `(sD[x] + c)·2^N + s`.
//!
//! Conversion between the layouts is exact amplitude copying.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// Memory guards for allocations that grow exponentially with the node count.
///
/// All sizes are inclusive upper bounds; requests strictly above them are
/// refused with an explicit error rather than attempted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Guards {
    /// Largest node count for which a state tensor may be allocated.
    pub max_state_nodes: usize,
    /// Largest node count for which the 2^N x 2^N spin density matrix may be
    /// built (256 MiB of complex entries at N = 12).
    pub max_spin_density_nodes: usize,
    /// Largest packed dimension for which a dense evolution operator may be
    /// built.
    pub max_packed_dim: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            max_state_nodes: 16,
            max_spin_density_nodes: 12,
            max_packed_dim: 20000,
        }
    }
}

/// A refused allocation or dimension request.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GuardError {
    #[error("state allocation refused: {n} nodes exceeds the guard of {max} (2^N spin configurations)")]
    StateNodes { n: usize, max: usize },
    #[error("spin density matrix refused: {n} nodes exceeds the guard of {max} (matrix would be 2^{n} x 2^{n})")]
    SpinDensity { n: usize, max: usize },
    #[error("dense operator refused: packed dimension {dim} exceeds the guard of {max}")]
    PackedDim { dim: usize, max: usize },
}

/// Errors from state construction and indexing.
#[derive(Debug, Error)]
pub enum StateError {
    #[error("{0}")]
    Guard(#[from] GuardError),
    #[error("ket ({x}, {c}, {s}): node {x} out of range for {n_nodes} nodes")]
    KetNodeOutOfRange { x: usize, c: usize, s: usize, n_nodes: usize },
    #[error("ket ({x}, {c}, {s}): color {c} invalid at node of degree {degree}")]
    KetColorOutOfRange { x: usize, c: usize, s: usize, degree: usize },
    #[error("ket ({x}, {c}, {s}): spin configuration {s} out of range for {n_nodes} nodes")]
    KetSpinOutOfRange { x: usize, c: usize, s: usize, n_nodes: usize },
    #[error("duplicate ket ({x}, {c}, {s})")]
    DuplicateKet { x: usize, c: usize, s: usize },
    #[error("empty ket list")]
    EmptyKets,
    #[error("amplitude vector has length {got}, expected {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    /// Particle position, N x N.
    Position,
    /// Coin color, d x d.
    Color,
    /// Spin register, 2^N x 2^N.
    Spin,
}

/// Spin value of node `x` in configuration `s`: +1 for up (bit 0), -1 for
/// down (bit 1).
#[inline]
pub fn spin_sign(s: usize, x: usize) -> f64 {
    if (s >> x) & 1 == 1 { -1.0 } else { 1.0 }
}

/// Packed dimension `(Σ_x d_x)·2^N` of the dense basis.
pub fn packed_dim(graph: &Graph) -> usize {
    graph.total_degree() << graph.n_nodes()
}

/// Packed index `(sD[x] + c)·2^N + s` of a valid basis ket.
pub fn pack_index(graph: &Graph, x: usize, c: usize, s: usize) -> Result<usize, StateError> {
    let n_nodes = graph.n_nodes();
    if x >= n_nodes {
        return Err(StateError::KetNodeOutOfRange { x, c, s, n_nodes });
    }
    if c >= graph.degree(x) {
        return Err(StateError::KetColorOutOfRange { x, c, s, degree: graph.degree(x) });
    }
    if s >= (1usize << n_nodes) {
        return Err(StateError::KetSpinOutOfRange { x, c, s, n_nodes });
    }
    Ok(((graph.offset(x) + c) << n_nodes) | s)
}

/// Inverse of [`pack_index`]. Panics if `index` is out of range.
pub fn unpack_index(graph: &Graph, index: usize) -> (usize, usize, usize) {
    assert!(index < packed_dim(graph), "packed index {index} out of range");
    let n = graph.n_nodes();
    let s = index & ((1 << n) - 1);
    let slot = index >> n;
    let x = graph.node_of_slot(slot);
    let c = slot - graph.offset(x);
    (x, c, s)
}

/// One amplitude of a state snapshot, for debug serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub x: usize,
    pub c: usize,
    pub s: usize,
    pub re: f64,
    pub im: f64,
}

/// Pure state over the padded tensor layout `(x, c, s)`.
///
/// Value-like: cheap to clone relative to the evolution cost, safe to move
/// across threads, and all gate applications preserve the invariant that
/// padding colors `c >= d_x` hold exactly zero.
#[derive(Debug, Clone)]
pub struct PureState {
    graph: Arc<Graph>,
    amps: Vec<Complex64>,
}

impl PureState {
    /// All-zero amplitude tensor (not a valid quantum state until filled).
    pub fn zeros(graph: Arc<Graph>, guards: &Guards) -> Result<Self, StateError> {
        let n = graph.n_nodes();
        if n > guards.max_state_nodes {
            return Err(GuardError::StateNodes { n, max: guards.max_state_nodes }.into());
        }
        let len = n * graph.max_degree() * (1usize << n);
        Ok(Self { graph, amps: vec![Complex64::ZERO; len] })
    }

    /// Equal-weight superposition `1/√K` over the given K basis kets.
    pub fn from_kets(
        graph: Arc<Graph>,
        kets: &[(usize, usize, usize)],
        guards: &Guards,
    ) -> Result<Self, StateError> {
        if kets.is_empty() {
            return Err(StateError::EmptyKets);
        }
        let mut state = Self::zeros(graph, guards)?;
        let weight = Complex64::new(1.0 / (kets.len() as f64).sqrt(), 0.0);
        for &(x, c, s) in kets {
            // pack_index performs full ket validation.
            pack_index(&state.graph, x, c, s)?;
            let idx = state.flat_index(x, c, s);
            if state.amps[idx] != Complex64::ZERO {
                return Err(StateError::DuplicateKet { x, c, s });
            }
            state.amps[idx] = weight;
        }
        Ok(state)
    }

    /// Unit-norm state with independent uniform random amplitudes on every
    /// valid ket; useful for property tests of gate identities.
    pub fn random(graph: Arc<Graph>, rng: &mut impl Rng, guards: &Guards) -> Result<Self, StateError> {
        let mut state = Self::zeros(graph, guards)?;
        let n_spin = state.n_spin();
        for x in 0..state.graph.n_nodes() {
            for c in 0..state.graph.degree(x) {
                for s in 0..n_spin {
                    let idx = state.flat_index(x, c, s);
                    state.amps[idx] = Complex64::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                }
            }
        }
        let norm = state.norm();
        for a in &mut state.amps {
            *a /= norm;
        }
        Ok(state)
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    /// Number of spin configurations 2^N.
    pub fn n_spin(&self) -> usize {
        1 << self.graph.n_nodes()
    }

    /// Padded color dimension d = max degree.
    pub fn padded_colors(&self) -> usize {
        self.graph.max_degree()
    }

    #[inline]
    pub(crate) fn flat_index(&self, x: usize, c: usize, s: usize) -> usize {
        (x * self.graph.max_degree() + c) * self.n_spin() + s
    }

    /// Amplitude ψ_{xcs} (also defined on padding colors, where it is zero).
    #[inline]
    pub fn amp(&self, x: usize, c: usize, s: usize) -> Complex64 {
        self.amps[self.flat_index(x, c, s)]
    }

    #[inline]
    pub(crate) fn amp_mut(&mut self, x: usize, c: usize, s: usize) -> &mut Complex64 {
        let idx = self.flat_index(x, c, s);
        &mut self.amps[idx]
    }

    /// Flat view of the padded tensor, index `(x·d + c)·2^N + s`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Euclidean norm of the amplitude tensor.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Exact total probability weight sitting on padding colors `c >= d_x`;
    /// the stepping invariant keeps this identically zero.
    pub fn padding_weight(&self) -> f64 {
        let mut total = 0.0;
        for x in 0..self.graph.n_nodes() {
            for c in self.graph.degree(x)..self.graph.max_degree() {
                for s in 0..self.n_spin() {
                    total += self.amp(x, c, s).norm_sqr();
                }
            }
        }
        total
    }

    /// Copies the valid amplitudes into a packed vector of dimension
    /// `(Σ d_x)·2^N`.
    pub fn to_packed(&self) -> Vec<Complex64> {
        let n = self.graph.n_nodes();
        let n_spin = self.n_spin();
        let mut packed = vec![Complex64::ZERO; packed_dim(&self.graph)];
        for x in 0..n {
            for c in 0..self.graph.degree(x) {
                let base = (self.graph.offset(x) + c) << n;
                for s in 0..n_spin {
                    packed[base + s] = self.amp(x, c, s);
                }
            }
        }
        packed
    }

    /// Rebuilds the padded tensor from a packed vector.
    pub fn from_packed(
        graph: Arc<Graph>,
        packed: &[Complex64],
        guards: &Guards,
    ) -> Result<Self, StateError> {
        let want = packed_dim(&graph);
        if packed.len() != want {
            return Err(StateError::LengthMismatch { got: packed.len(), want });
        }
        let mut state = Self::zeros(graph, guards)?;
        let n = state.graph.n_nodes();
        for x in 0..n {
            for c in 0..state.graph.degree(x) {
                let base = (state.graph.offset(x) + c) << n;
                for s in 0..state.n_spin() {
                    *state.amp_mut(x, c, s) = packed[base + s];
                }
            }
        }
        Ok(state)
    }

    /// Nonzero amplitudes as `(x, c, s, re, im)` records for debugging.
    pub fn snapshot_records(&self) -> Vec<SnapshotRecord> {
        let mut records = Vec::new();
        for x in 0..self.graph.n_nodes() {
            for c in 0..self.graph.degree(x) {
                for s in 0..self.n_spin() {
                    let a = self.amp(x, c, s);
                    if a != Complex64::ZERO {
                        records.push(SnapshotRecord { x, c, s, re: a.re, im: a.im });
                    }
                }
            }
        }
        records
    }

    /// JSON form of [`Self::snapshot_records`].
    pub fn snapshot_json(&self) -> String {
        serde_json::to_string_pretty(&self.snapshot_records()).expect("plain records serialize")
    }
}

/// Reduced density matrix ρ(part) = Tr_complement |ψ⟩⟨ψ|.
///
/// Sizes are N x N (position), d x d (color), 2^N x 2^N (spin); the spin part
/// is refused above the configured guard.
pub fn reduced_density(
    state: &PureState,
    part: Part,
    guards: &Guards,
) -> Result<Mat<Complex64>, GuardError> {
    let graph = state.graph();
    let n = graph.n_nodes();
    let d = graph.max_degree();
    let n_spin = state.n_spin();
    match part {
        Part::Position => {
            let mut rho = Mat::<Complex64>::zeros(n, n);
            for xa in 0..n {
                for xb in 0..n {
                    let mut acc = Complex64::ZERO;
                    // Padding colors hold exact zeros, so summing c < min(d_a, d_b)
                    // suffices.
                    for c in 0..graph.degree(xa).min(graph.degree(xb)) {
                        for s in 0..n_spin {
                            acc += state.amp(xa, c, s) * state.amp(xb, c, s).conj();
                        }
                    }
                    rho[(xa, xb)] = acc;
                }
            }
            Ok(rho)
        }
        Part::Color => {
            let mut rho = Mat::<Complex64>::zeros(d, d);
            for ca in 0..d {
                for cb in 0..d {
                    let mut acc = Complex64::ZERO;
                    for x in 0..n {
                        if ca >= graph.degree(x) || cb >= graph.degree(x) {
                            continue;
                        }
                        for s in 0..n_spin {
                            acc += state.amp(x, ca, s) * state.amp(x, cb, s).conj();
                        }
                    }
                    rho[(ca, cb)] = acc;
                }
            }
            Ok(rho)
        }
        Part::Spin => {
            if n > guards.max_spin_density_nodes {
                return Err(GuardError::SpinDensity { n, max: guards.max_spin_density_nodes });
            }
            let mut rho = Mat::<Complex64>::zeros(n_spin, n_spin);
            for x in 0..n {
                for c in 0..graph.degree(x) {
                    for sa in 0..n_spin {
                        let a = state.amp(x, c, sa);
                        if a == Complex64::ZERO {
                            continue;
                        }
                        for sb in 0..n_spin {
                            rho[(sa, sb)] += a * state.amp(x, c, sb).conj();
                        }
                    }
                }
            }
            Ok(rho)
        }
    }
}

/// Reduced density matrix of the joint (position, color) factor over the
/// packed slot basis (dimension Σ d_x) — the complement side of the spin
/// split, used to cross-check entropy symmetry.
pub fn reduced_density_position_color(state: &PureState) -> Mat<Complex64> {
    let graph = state.graph();
    let slots = graph.total_degree();
    let n_spin = state.n_spin();
    let mut rho = Mat::<Complex64>::zeros(slots, slots);
    for slot_a in 0..slots {
        let xa = graph.node_of_slot(slot_a);
        let ca = slot_a - graph.offset(xa);
        for slot_b in 0..slots {
            let xb = graph.node_of_slot(slot_b);
            let cb = slot_b - graph.offset(xb);
            let mut acc = Complex64::ZERO;
            for s in 0..n_spin {
                acc += state.amp(xa, ca, s) * state.amp(xb, cb, s).conj();
            }
            rho[(slot_a, slot_b)] = acc;
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn bull() -> Arc<Graph> {
        Arc::new(generate(&Family::Bull).unwrap())
    }

    #[test]
    fn first_basis_ket_packs_to_zero() {
        let g = bull();
        assert_eq!(pack_index(&g, 0, 0, 0).unwrap(), 0);
    }

    #[test]
    fn bull_pack_example() {
        // sD = [0, 3, 4, 5, 7], so (3, 1, 5) -> (5 + 1)*32 + 5 = 197.
        let g = bull();
        assert_eq!(pack_index(&g, 3, 1, 5).unwrap(), 197);
    }

    #[test]
    fn cube_packed_dimension() {
        let g = generate(&Family::CircularLadder { rungs: 4 }).unwrap();
        assert_eq!(packed_dim(&g), 24 * 256);
        assert_eq!(packed_dim(&g), 6144);
    }

    #[test]
    fn pack_rejects_invalid_kets() {
        let g = bull();
        assert!(matches!(
            pack_index(&g, 1, 1, 0),
            Err(StateError::KetColorOutOfRange { .. })
        ));
        assert!(matches!(
            pack_index(&g, 5, 0, 0),
            Err(StateError::KetNodeOutOfRange { .. })
        ));
        assert!(matches!(
            pack_index(&g, 0, 0, 32),
            Err(StateError::KetSpinOutOfRange { .. })
        ));
    }

    #[test]
    fn pack_unpack_bijective_exhaustively() {
        for fam in [
            Family::Bull,
            Family::Cycle { n: 6 },
            Family::Path { n: 5 },
            Family::Complete { n: 4 },
        ] {
            let g = generate(&fam).unwrap();
            let dim = packed_dim(&g);
            let mut seen = vec![false; dim];
            for x in 0..g.n_nodes() {
                for c in 0..g.degree(x) {
                    for s in 0..1 << g.n_nodes() {
                        let k = pack_index(&g, x, c, s).unwrap();
                        assert!(!seen[k], "index collision at {k}");
                        seen[k] = true;
                        assert_eq!(unpack_index(&g, k), (x, c, s));
                    }
                }
            }
            assert!(seen.iter().all(|&b| b), "packed enumeration not onto");
        }
    }

    #[test]
    fn initial_state_single_ket() {
        let g = bull();
        let psi = PureState::from_kets(g, &[(0, 0, 0)], &Guards::default()).unwrap();
        assert_eq!(psi.amp(0, 0, 0), Complex64::ONE);
        assert_relative_eq!(psi.norm(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn initial_state_superposition_weights() {
        let g = Arc::new(generate(&Family::Cycle { n: 9 }).unwrap());
        let psi = PureState::from_kets(g, &[(0, 0, 0), (0, 0, 1)], &Guards::default()).unwrap();
        let w = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(psi.amp(0, 0, 0).re, w, max_relative = 1e-15);
        assert_relative_eq!(psi.amp(0, 0, 1).re, w, max_relative = 1e-15);
        assert_relative_eq!(psi.norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn initial_state_rejects_bad_input() {
        let g = bull();
        assert!(matches!(
            PureState::from_kets(g.clone(), &[], &Guards::default()),
            Err(StateError::EmptyKets)
        ));
        assert!(matches!(
            PureState::from_kets(g.clone(), &[(0, 0, 0), (0, 0, 0)], &Guards::default()),
            Err(StateError::DuplicateKet { .. })
        ));
        assert!(matches!(
            PureState::from_kets(g, &[(1, 1, 0)], &Guards::default()),
            Err(StateError::KetColorOutOfRange { .. })
        ));
    }

    #[test]
    fn state_allocation_guard() {
        let g = Arc::new(generate(&Family::Path { n: 17 }).unwrap());
        let err = PureState::zeros(g, &Guards::default()).unwrap_err();
        assert!(matches!(
            err,
            StateError::Guard(GuardError::StateNodes { n: 17, max: 16 })
        ));
    }

    #[test]
    fn spin_density_guard() {
        let g = Arc::new(generate(&Family::Path { n: 13 }).unwrap());
        let psi = PureState::from_kets(g, &[(0, 0, 0)], &Guards::default()).unwrap();
        let err = reduced_density(&psi, Part::Spin, &Guards::default()).unwrap_err();
        assert_eq!(err, GuardError::SpinDensity { n: 13, max: 12 });
    }

    #[test]
    fn packed_round_trip_is_exact() {
        let g = bull();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let psi = PureState::random(g.clone(), &mut rng, &Guards::default()).unwrap();
        let packed = psi.to_packed();
        assert_eq!(packed.len(), 320);
        let back = PureState::from_packed(g, &packed, &Guards::default()).unwrap();
        assert_eq!(psi.as_slice(), back.as_slice());
    }

    #[test]
    fn from_packed_rejects_wrong_length() {
        let g = bull();
        let err = PureState::from_packed(g, &[Complex64::ZERO; 3], &Guards::default()).unwrap_err();
        assert!(matches!(
            err,
            StateError::LengthMismatch { got: 3, want: 320 }
        ));
    }

    #[test]
    fn product_ket_position_density() {
        let g = bull();
        let psi = PureState::from_kets(g, &[(0, 0, 0)], &Guards::default()).unwrap();
        let rho = reduced_density(&psi, Part::Position, &Guards::default()).unwrap();
        assert_eq!(rho.nrows(), 5);
        assert_relative_eq!(rho[(0, 0)].re, 1.0, max_relative = 1e-15);
        let trace: Complex64 = (0..5).map(|i| rho[(i, i)]).sum();
        assert_relative_eq!(trace.re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn two_term_spin_density_is_pure() {
        // (|000⟩ + |001⟩)/√2 shares (x, c) = (0, 0) between both kets, so the
        // spin factor is in the pure state (|0…0⟩ + |0…01⟩)/√2: eigenvalues
        // {1, 0} and zero entanglement entropy across the (s | x,c) split.
        let g = Arc::new(generate(&Family::Cycle { n: 9 }).unwrap());
        let psi = PureState::from_kets(g, &[(0, 0, 0), (0, 0, 1)], &Guards::default()).unwrap();
        let rho = reduced_density(&psi, Part::Spin, &Guards::default()).unwrap();
        assert_eq!(rho.nrows(), 512);
        for (sa, sb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_relative_eq!(rho[(sa, sb)].re, 0.5, max_relative = 1e-14);
        }
        // ρ² = ρ for a pure reduced state.
        let rho2 = &rho * &rho;
        let mut max_diff = 0.0f64;
        for i in 0..rho.nrows() {
            for j in 0..rho.ncols() {
                max_diff = max_diff.max((rho2[(i, j)] - rho[(i, j)]).norm());
            }
        }
        assert!(max_diff < 1e-12, "two-term reduced matrix not pure: {max_diff}");
    }

    #[test]
    fn reduced_matrices_hermitian_and_unit_trace() {
        let g = bull();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let psi = PureState::random(g, &mut rng, &Guards::default()).unwrap();
        for part in [Part::Position, Part::Color, Part::Spin] {
            let rho = reduced_density(&psi, part, &Guards::default()).unwrap();
            let mut max_asym = 0.0f64;
            let mut trace = Complex64::ZERO;
            for i in 0..rho.nrows() {
                trace += rho[(i, i)];
                for j in 0..rho.ncols() {
                    max_asym = max_asym.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
                }
            }
            assert!(max_asym < 1e-12, "{part:?} not Hermitian: {max_asym}");
            assert_relative_eq!(trace.re, 1.0, max_relative = 1e-10);
            assert!(trace.im.abs() < 1e-12);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let g = bull();
        let psi = PureState::from_kets(g, &[(0, 0, 0), (4, 2, 31)], &Guards::default()).unwrap();
        let records = psi.snapshot_records();
        assert_eq!(records.len(), 2);
        let json = psi.snapshot_json();
        let parsed: Vec<SnapshotRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!((parsed[1].x, parsed[1].c, parsed[1].s), (4, 2, 31));
    }

    #[test]
    fn spin_sign_convention() {
        assert_eq!(spin_sign(0b000, 0), 1.0);
        assert_eq!(spin_sign(0b001, 0), -1.0);
        assert_eq!(spin_sign(0b100, 2), -1.0);
        assert_eq!(spin_sign(0b100, 1), 1.0);
    }
}
