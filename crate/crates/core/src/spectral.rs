//! Exact diagonalization of the evolution operator and everything built on
//! it: quasienergies, degeneracy structure, eigenvector entropies, level
//! spacing statistics, thermalization checks, the effective Hamiltonian, and
//! the U-network.
//!
//! # Diagonalization strategy
//!
//! The evolution operator is unitary, hence normal, but general-purpose
//! nonsymmetric eigensolvers neither exploit that nor return an orthonormal
//! eigenbasis in the presence of degeneracies — and this spectrum is heavily
//! degenerate. Instead we diagonalize the commuting Hermitian pair
//! A = (U + U†)/2 and B = (U − U†)/(2i):
//!
//! 1. a self-adjoint eigensolve of A gives an orthonormal basis V grouped by
//!    cos E;
//! 2. within each cluster of (numerically) equal A-eigenvalues, the projected
//!    B is diagonalized to split the ±E partners, rotating the cluster
//!    columns of V (and of W = U·V, kept in sync) by the small unitary;
//! 3. eigenvalues follow as Rayleigh quotients λ_k = v_k†(U v_k) from the
//!    same W, so the expensive U·V product is formed exactly once.
//!
//! The result is an orthonormal eigenbasis with per-column residuals
//! ‖U v_k − λ_k v_k‖∞ that are checked and stored.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::observables::{position_time_average, spin_time_average, ObservablesError, Trajectory};
use crate::ops::{Coin, CzMode, EvolutionOperator};
use crate::state::{packed_dim, spin_sign, GuardError, Guards, PureState};
use crate::stats::{self, Histogram, StatsError};

/// Quasienergies closer than this are one degeneracy class.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Default magnitude threshold for the U-network adjacency.
pub const DEFAULT_U_NETWORK_THRESHOLD: f64 = 1e-12;

/// A-eigenvalues (cos E) closer than this are refined together in stage 2.
/// Solver noise sits near 1e-12; distinct cosines this close only occur in
/// the flat band edges, where the B refinement separates them anyway.
const CLUSTER_TOL: f64 = 1e-7;

/// Largest tolerated deviation of an eigenvalue modulus from 1.
const UNITARITY_TOL: f64 = 1e-6;

/// Residual ceiling for building the effective Hamiltonian.
const HAMILTONIAN_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix must be square, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("{0}")]
    Guard(#[from] GuardError),
    #[error("eigendecomposition did not converge")]
    EigenFailed,
    #[error("input is not unitary: an eigenvalue modulus deviates from 1 by {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("need at least 3 levels after filtering, got {0}")]
    TooFewLevels(usize),
    #[error("no samples")]
    NoSamples,
    #[error("spectral data carries no operator metadata; diagonalize an evolution operator")]
    NoMeta,
    #[error("graph mismatch between spectral data, trajectory, and initial state")]
    GraphMismatch,
    #[error("residual {residual:.3e} exceeds {HAMILTONIAN_RESIDUAL_TOL:.0e}; refusing to build the effective Hamiltonian")]
    ResidualTooLarge { residual: f64 },
    #[error("{0}")]
    Observables(#[from] ObservablesError),
}

/// Which operator a [`SpectralData`] came from.
#[derive(Debug, Clone)]
pub struct OperatorMeta {
    pub graph: Arc<Graph>,
    pub coin: Coin,
    pub cz_mode: CzMode,
}

/// Eigendecomposition of an evolution operator.
#[derive(Debug, Clone)]
pub struct SpectralData {
    quasienergies: Vec<f64>,
    vectors: Mat<Complex64>,
    entropies: Vec<f64>,
    classes: Vec<Vec<usize>>,
    class_ids: Vec<usize>,
    max_residual: f64,
    unitarity_deviation: f64,
    meta: Option<OperatorMeta>,
}

impl SpectralData {
    /// Quasienergies E_n = −arg λ_n, ascending in (−π, π].
    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    /// Orthonormal eigenvectors over the packed basis, column n ↔ E_n.
    pub fn vectors(&self) -> MatRef<'_, Complex64> {
        self.vectors.as_ref()
    }

    /// Copy of eigenvector n.
    pub fn vector(&self, n: usize) -> Vec<Complex64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, n)]).collect()
    }

    /// Shannon entropy (bits) of each eigenvector.
    pub fn entropies(&self) -> &[f64] {
        &self.entropies
    }

    /// Groups of level indices equal within [`DEGENERACY_TOL`].
    pub fn degeneracy_classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Class index of each level.
    pub fn class_ids(&self) -> &[usize] {
        &self.class_ids
    }

    /// Largest per-eigenpair residual ‖U v − λ v‖∞.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Largest observed | |λ| − 1 |.
    pub fn unitarity_deviation(&self) -> f64 {
        self.unitarity_deviation
    }

    pub fn meta(&self) -> Option<&OperatorMeta> {
        self.meta.as_ref()
    }

    /// Index of the maximum-entropy eigenvector (ties → lowest index).
    pub fn argmax_entropy(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.entropies.iter().enumerate() {
            if s > self.entropies[best] {
                best = i;
            }
        }
        best
    }

    /// Drops the eigenvector matrix, keeping scalar per-level data. Frees the
    /// dominant allocation when only energies/entropies are needed further.
    pub fn drop_vectors(&mut self) {
        self.vectors = Mat::zeros(0, 0);
    }
}

/// Diagonalizes an evolution operator, recording which graph, coin, and
/// interaction mode produced it so downstream reports can cross-check.
pub fn diagonalize(
    op: &EvolutionOperator,
    guards: &Guards,
) -> Result<SpectralData, SpectralError> {
    let mut data = diagonalize_unitary(op.matrix().as_ref(), guards)?;
    data.meta = Some(OperatorMeta {
        graph: op.graph().clone(),
        coin: op.coin(),
        cz_mode: op.cz_mode(),
    });
    Ok(data)
}

/// Diagonalizes a unitary matrix over its own index space (no metadata).
pub fn diagonalize_unitary(
    u: MatRef<'_, Complex64>,
    guards: &Guards,
) -> Result<SpectralData, SpectralError> {
    let n = u.nrows();
    if n == 0 {
        return Err(SpectralError::EmptyMatrix);
    }
    if n != u.ncols() {
        return Err(SpectralError::NotSquare { rows: n, cols: u.ncols() });
    }
    if n > guards.max_packed_dim {
        return Err(GuardError::PackedDim { dim: n, max: guards.max_packed_dim }.into());
    }

    // Stage 1: orthonormal eigenbasis of the Hermitian part A = (U + U†)/2.
    let (avals, mut v) = {
        let a = Mat::from_fn(n, n, |i, j| (u[(i, j)] + u[(j, i)].conj()) * 0.5);
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| SpectralError::EigenFailed)?;
        let avals: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
        (avals, evd.U().to_owned())
    };

    // W = U·V, kept in sync with V through every cluster rotation so that
    // eigenvalues and residuals come for free afterwards.
    let mut w: Mat<Complex64> = u * v.as_ref();

    // Stage 2: split each cos-degenerate cluster with the projected
    // anti-Hermitian part B = (P − P†)/(2i), P = V_c† U V_c.
    let mut start = 0;
    for end in 1..=n {
        if end != n && avals[end] - avals[end - 1] <= CLUSTER_TOL {
            continue;
        }
        let k = end - start;
        if k > 1 {
            let p: Mat<Complex64> = v.subcols(start, k).adjoint() * w.subcols(start, k);
            let b = Mat::from_fn(k, k, |i, j| {
                (p[(i, j)] - p[(j, i)].conj()) * Complex64::new(0.0, -0.5)
            });
            let r = b
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| SpectralError::EigenFailed)?
                .U()
                .to_owned();
            let vt: Mat<Complex64> = v.subcols(start, k) * r.as_ref();
            v.subcols_mut(start, k).copy_from(&vt);
            let wt: Mat<Complex64> = w.subcols(start, k) * r.as_ref();
            w.subcols_mut(start, k).copy_from(&wt);
        }
        start = end;
    }

    // Rayleigh quotients, unitarity check, residuals.
    let mut lambdas = vec![Complex64::ZERO; n];
    for k in 0..n {
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            acc += v[(i, k)].conj() * w[(i, k)];
        }
        lambdas[k] = acc;
    }
    let unitarity_deviation = lambdas
        .iter()
        .map(|l| (l.norm() - 1.0).abs())
        .fold(0.0f64, f64::max);
    if unitarity_deviation > UNITARITY_TOL {
        return Err(SpectralError::NotUnitary { deviation: unitarity_deviation });
    }
    let mut max_residual = 0.0f64;
    for k in 0..n {
        let mut r = 0.0f64;
        for i in 0..n {
            r = r.max((w[(i, k)] - lambdas[k] * v[(i, k)]).norm());
        }
        max_residual = max_residual.max(r);
    }
    drop(w);

    // Quasienergies on the principal branch, ascending.
    let energies_unsorted: Vec<f64> = lambdas
        .iter()
        .map(|l| {
            let mut e = -l.arg();
            if e <= -PI {
                e = PI;
            }
            e
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| energies_unsorted[a].total_cmp(&energies_unsorted[b]));
    let quasienergies: Vec<f64> = order.iter().map(|&i| energies_unsorted[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    drop(v);

    let entropies: Vec<f64> = (0..n).map(|k| column_entropy(vectors.as_ref(), k)).collect();
    let (classes, class_ids) = group_degenerate(&quasienergies);

    Ok(SpectralData {
        quasienergies,
        vectors,
        entropies,
        classes,
        class_ids,
        max_residual,
        unitarity_deviation,
        meta: None,
    })
}

fn column_entropy(m: MatRef<'_, Complex64>, k: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        let p = m[(i, k)].norm_sqr();
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    s
}

/// Shannon entropy (bits) of a unit-norm vector: −Σ |v_i|² log2 |v_i|²,
/// zero terms dropped.
///
/// # Panics
/// If the vector norm is not 1 within 1e-6 (this also rejects zero vectors).
pub fn shannon_entropy(v: &[Complex64]) -> f64 {
    let norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    assert!(
        (norm_sq.sqrt() - 1.0).abs() < 1e-6,
        "shannon_entropy needs a unit-norm vector, got norm {}",
        norm_sq.sqrt()
    );
    let mut s = 0.0;
    for z in v {
        let p = z.norm_sqr();
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    s
}

fn group_degenerate(sorted: &[f64]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, &e) in sorted.iter().enumerate() {
        match classes.last_mut() {
            Some(c) if e - sorted[*c.last().expect("class nonempty")] <= DEGENERACY_TOL => {
                c.push(i);
            }
            _ => classes.push(vec![i]),
        }
    }
    let mut ids = vec![0usize; sorted.len()];
    for (cid, c) in classes.iter().enumerate() {
        for &i in c {
            ids[i] = cid;
        }
    }
    (classes, ids)
}

/// Merges ascending levels that chain within `tol` into their mean.
/// Idempotent: merged representatives are separated by more than `tol`.
pub fn merge_degenerate_levels(sorted: &[f64], tol: f64) -> Vec<f64> {
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "levels must be ascending");
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] - sorted[j - 1] <= tol {
            j += 1;
        }
        out.push(sorted[i..j].iter().sum::<f64>() / (j - i) as f64);
        i = j;
    }
    out
}

/// Consecutive level spacings normalized to unit mean, computed on the sorted
/// band without circular wrap. With `filter_degeneracy`, levels within
/// [`DEGENERACY_TOL`] are first merged to one representative.
pub fn level_spacings(
    spectral: &SpectralData,
    filter_degeneracy: bool,
) -> Result<Vec<f64>, SpectralError> {
    let levels: Vec<f64> = if filter_degeneracy {
        merge_degenerate_levels(&spectral.quasienergies, DEGENERACY_TOL)
    } else {
        spectral.quasienergies.clone()
    };
    if levels.len() < 3 {
        return Err(SpectralError::TooFewLevels(levels.len()));
    }
    let diffs: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    Ok(diffs.iter().map(|d| d / mean).collect())
}

/// Wigner surmise for the Gaussian unitary ensemble:
/// p_W(s) = (32 s²/π²) e^{−4s²/π}.
///
/// # Panics
/// If `s` is negative.
pub fn wigner_surmise_pdf(s: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    32.0 * s * s / (PI * PI) * (-4.0 * s * s / PI).exp()
}

/// Closed form of ∫₀ˢ p_W: erf(2s/√π) − (4s/π) e^{−4s²/π}.
pub fn wigner_surmise_cdf(s: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    libm::erf(2.0 * s / PI.sqrt()) - (4.0 * s / PI) * (-4.0 * s * s / PI).exp()
}

/// Poisson spacing density e^{−s} of uncorrelated levels.
///
/// # Panics
/// If `s` is negative.
pub fn poisson_pdf(s: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    (-s).exp()
}

/// Poisson spacing CDF 1 − e^{−s}.
pub fn poisson_cdf(s: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    1.0 - (-s).exp()
}

/// Two-sided Kolmogorov–Smirnov statistic between samples and a model CDF.
pub fn ks_distance(
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
) -> Result<f64, SpectralError> {
    if samples.is_empty() {
        return Err(SpectralError::NoSamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Microcanonical node distribution p_M(x) = d_x / Σ d_x.
pub fn microcanonical_distribution(graph: &Graph) -> Vec<f64> {
    let total = graph.total_degree() as f64;
    graph.degrees().iter().map(|&d| d as f64 / total).collect()
}

/// Position marginal Σ_{c,s} |v(x,c,s)|² of a packed-basis vector.
pub fn packed_position_distribution(graph: &Graph, v: &[Complex64]) -> Vec<f64> {
    assert_eq!(v.len(), packed_dim(graph), "vector is not over the packed basis");
    let n_spin = 1usize << graph.n_nodes();
    let mut p = vec![0.0; graph.n_nodes()];
    for (x, slot) in p.iter_mut().enumerate() {
        let base = graph.offset(x) * n_spin;
        for k in 0..graph.degree(x) * n_spin {
            *slot += v[base + k].norm_sqr();
        }
    }
    p
}

/// Magnetization ⟨σ_z(x)⟩ per node of a packed-basis vector.
pub fn packed_magnetization(graph: &Graph, v: &[Complex64]) -> Vec<f64> {
    assert_eq!(v.len(), packed_dim(graph), "vector is not over the packed basis");
    let n = graph.n_nodes();
    let n_spin = 1usize << n;
    let mut m = vec![0.0; n];
    for (k, z) in v.iter().enumerate() {
        let weight = z.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        let s = k & (n_spin - 1);
        for (x, slot) in m.iter_mut().enumerate() {
            *slot += weight * spin_sign(s, x);
        }
    }
    m
}

/// Comparison of the maximum-entropy eigenvector, a stationary trajectory
/// window, and the microcanonical ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct ThermalizationReport {
    /// Index of the maximum-entropy eigenvector v⋆.
    pub argmax_entropy_index: usize,
    /// Shannon entropy of v⋆ (bits) and its ceiling log2(dim).
    pub max_entropy: f64,
    pub entropy_ceiling: f64,
    /// Node distributions: eigenvector marginal, time average, microcanonical.
    pub p_eig: Vec<f64>,
    pub p_time: Vec<f64>,
    pub p_micro: Vec<f64>,
    /// Site-mean spin from the same three sources; the microcanonical
    /// ensemble weighs every spin configuration equally, so its mean is 0.
    pub spin_eig: f64,
    pub spin_time: f64,
    pub spin_micro: f64,
    /// Pairwise L1 distances between the node distributions.
    pub l1_eig_time: f64,
    pub l1_eig_micro: f64,
    pub l1_time_micro: f64,
    /// Pairwise max-abs distances between the node distributions.
    pub max_eig_time: f64,
    pub max_eig_micro: f64,
    pub max_time_micro: f64,
    /// |⟨n|ψ(0)⟩|² for every eigenvector, in quasienergy order.
    pub overlaps: Vec<f64>,
    /// Exponential fit of the rescaled intensities |v⋆_i|²·dim: MLE rate and
    /// KS distance to Exp(rate).
    pub amplitude_exp_rate: f64,
    pub amplitude_ks: f64,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Builds a [`ThermalizationReport`] from spectral data, a trajectory window
/// [t0, t1], and the trajectory's initial state.
pub fn thermalization_report(
    spectral: &SpectralData,
    traj: &Trajectory,
    window: (usize, usize),
    initial: &PureState,
) -> Result<ThermalizationReport, SpectralError> {
    let meta = spectral.meta.as_ref().ok_or(SpectralError::NoMeta)?;
    if **traj.graph() != *meta.graph || **initial.graph() != *meta.graph {
        return Err(SpectralError::GraphMismatch);
    }
    let graph = &meta.graph;
    let (t0, t1) = window;

    let star = spectral.argmax_entropy();
    let v_star = spectral.vector(star);
    let p_eig = packed_position_distribution(graph, &v_star);
    let p_time = position_time_average(traj, t0, t1)?;
    let p_micro = microcanonical_distribution(graph);

    let spin_eig_nodes = packed_magnetization(graph, &v_star);
    let spin_eig = spin_eig_nodes.iter().sum::<f64>() / graph.n_nodes() as f64;
    let spin_time = spin_time_average(traj, t0, t1)?.site_mean;

    let dim = packed_dim(graph);
    let psi0 = initial.to_packed();
    let vectors = spectral.vectors();
    let mut overlaps = vec![0.0; dim];
    for (k, o) in overlaps.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for i in 0..dim {
            acc += vectors[(i, k)].conj() * psi0[i];
        }
        *o = acc.norm_sqr();
    }

    // Rescaled intensities of v⋆; exact zeros are legitimate samples of an
    // exponential, so the rate comes from the plain mean.
    let intensities: Vec<f64> = v_star.iter().map(|z| z.norm_sqr() * dim as f64).collect();
    let mean = intensities.iter().sum::<f64>() / dim as f64;
    let amplitude_exp_rate = 1.0 / mean;
    let amplitude_ks = ks_distance(&intensities, |x| 1.0 - (-amplitude_exp_rate * x).exp())?;

    Ok(ThermalizationReport {
        argmax_entropy_index: star,
        max_entropy: spectral.entropies[star],
        entropy_ceiling: (dim as f64).log2(),
        l1_eig_time: l1(&p_eig, &p_time),
        l1_eig_micro: l1(&p_eig, &p_micro),
        l1_time_micro: l1(&p_time, &p_micro),
        max_eig_time: linf(&p_eig, &p_time),
        max_eig_micro: linf(&p_eig, &p_micro),
        max_time_micro: linf(&p_time, &p_micro),
        p_eig,
        p_time,
        p_micro,
        spin_eig,
        spin_time,
        spin_micro: 0.0,
        overlaps,
        amplitude_exp_rate,
        amplitude_ks,
    })
}

/// The Hermitian generator H = Σ_n E_n |n⟩⟨n| on the principal branch.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub matrix: Mat<Complex64>,
    /// True when levels sit within 1e-10 of both band edges ±π: the branch
    /// cut then splits one physical degeneracy class, and H is not a
    /// continuous function of U there (e^{−iH} still reproduces U).
    pub branch_cut_warning: bool,
}

/// Builds the effective Hamiltonian with E_n ∈ (−π, π], so e^{−iH} = U.
pub fn effective_hamiltonian(
    spectral: &SpectralData,
) -> Result<EffectiveHamiltonian, SpectralError> {
    if spectral.max_residual > HAMILTONIAN_RESIDUAL_TOL {
        return Err(SpectralError::ResidualTooLarge { residual: spectral.max_residual });
    }
    let n = spectral.quasienergies.len();
    let v = spectral.vectors();
    let scaled = Mat::from_fn(n, n, |i, k| v[(i, k)] * spectral.quasienergies[k]);
    let matrix: Mat<Complex64> = scaled * v.adjoint();
    let near_plus = spectral.quasienergies.iter().any(|&e| e >= PI - 1e-10);
    let near_minus = spectral.quasienergies.iter().any(|&e| e <= -PI + 1e-10);
    Ok(EffectiveHamiltonian { matrix, branch_cut_warning: near_plus && near_minus })
}

/// Undirected support graph of a unitary: i ~ j iff i ≠ j and
/// |U_ij| or |U_ji| exceeds the threshold.
#[derive(Debug, Clone, Serialize)]
pub struct UNetwork {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl UNetwork {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Sorted distinct vertex degrees.
    pub fn degree_set(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self.degrees.clone();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// DOT rendering with vertices colored by degree class.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write as _;
        const PALETTE: [&str; 8] = [
            "lightblue", "salmon", "palegreen", "gold", "orchid", "lightgray", "cyan", "pink",
        ];
        let degree_set = self.degree_set();
        let color_of = |d: usize| {
            let class = degree_set.iter().position(|&x| x == d).expect("degree in set");
            PALETTE[class % PALETTE.len()]
        };
        let mut out = String::from("graph u_network {\n  node [style=filled];\n");
        for (v, &d) in self.degrees.iter().enumerate() {
            let _ = writeln!(out, "  {v} [fillcolor=\"{}\", degree={d}];", color_of(d));
        }
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "  {i} -- {j};");
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the U-network of a dense unitary.
///
/// # Panics
/// If the matrix is not square or the threshold is not positive.
pub fn u_network(u: MatRef<'_, Complex64>, threshold: f64) -> UNetwork {
    assert_eq!(u.nrows(), u.ncols(), "U-network needs a square matrix");
    assert!(threshold > 0.0, "threshold must be positive, got {threshold}");
    let n = u.nrows();
    let mut edges = Vec::new();
    let mut degrees = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if u[(i, j)].norm() > threshold || u[(j, i)].norm() > threshold {
                edges.push((i, j));
                degrees[i] += 1;
                degrees[j] += 1;
            }
        }
    }
    UNetwork { n_vertices: n, edges, degrees }
}

/// Histogram of the quasienergies over the band (−π, π].
pub fn quasienergy_histogram(
    spectral: &SpectralData,
    bins: usize,
) -> Result<Histogram, StatsError> {
    stats::histogram(&spectral.quasienergies, bins, (-PI, PI))
}

/// CSV rendering: `n, quasienergy, entropy, degeneracy_class` per level.
pub fn spectrum_to_csv(spectral: &SpectralData) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("n,quasienergy,entropy,degeneracy_class\n");
    for n in 0..spectral.quasienergies.len() {
        let _ = writeln!(
            out,
            "{n},{},{},{}",
            stats::fmt_g17(spectral.quasienergies[n]),
            stats::fmt_g17(spectral.entropies[n]),
            spectral.class_ids[n]
        );
    }
    out
}

/// CSV rendering of scalar samples under a named column.
pub fn samples_to_csv(name: &str, samples: &[f64]) -> String {
    use std::fmt::Write as _;
    let mut out = format!("n,{name}\n");
    for (i, s) in samples.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", stats::fmt_g17(*s));
    }
    out
}
