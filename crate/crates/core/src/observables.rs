//! Per-step macroscopic quantities: position density, magnetization, time
//! averages and fluctuations over a trajectory, and entanglement entropies.

use std::sync::Arc;

use faer::{MatRef, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::ops::{step, Coin, CzMode};
use crate::state::{
    reduced_density, reduced_density_position_color, spin_sign, GuardError, Guards, Part,
    PureState,
};

/// Eigenvalues below this are treated as exact zeros of a reduced density
/// matrix (numerical PSD noise floor).
pub const ENTROPY_EIGENVALUE_CLAMP: f64 = 1e-12;

/// Errors from trajectory windows and guarded entropy evaluations.
#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error("{0}")]
    Guard(#[from] GuardError),
    #[error("window [{t0}, {t1}] invalid for a trajectory recording steps 0..={last}")]
    BadWindow { t0: usize, t1: usize, last: usize },
    #[error("window [{t0}, {t1}] too short: fluctuations need at least 2 records")]
    WindowTooShort { t0: usize, t1: usize },
    #[error("record at step {step} has {got} nodes, trajectory graph has {want}")]
    RecordShape { step: usize, got: usize, want: usize },
}

/// Position probability distribution p(x) = Σ_{c,s} |ψ_{xcs}|².
pub fn position_distribution(state: &PureState) -> Vec<f64> {
    let graph = state.graph();
    let mut p = vec![0.0; graph.n_nodes()];
    for (x, slot) in p.iter_mut().enumerate() {
        for c in 0..graph.degree(x) {
            for s in 0..state.n_spin() {
                *slot += state.amp(x, c, s).norm_sqr();
            }
        }
    }
    p
}

/// Magnetization s(x) = ⟨σ_z(x)⟩ per node, up = +1.
pub fn magnetization(state: &PureState) -> Vec<f64> {
    let graph = state.graph();
    let n = graph.n_nodes();
    let mut m = vec![0.0; n];
    for y in 0..n {
        for c in 0..graph.degree(y) {
            for s in 0..state.n_spin() {
                let w = state.amp(y, c, s).norm_sqr();
                if w == 0.0 {
                    continue;
                }
                for (x, slot) in m.iter_mut().enumerate() {
                    *slot += w * spin_sign(s, x);
                }
            }
        }
    }
    m
}

/// Von Neumann entropy (bits) of a density matrix: −Σ λ log2 λ with
/// eigenvalues below [`ENTROPY_EIGENVALUE_CLAMP`] dropped.
pub(crate) fn density_entropy(rho: MatRef<'_, Complex64>) -> f64 {
    let evd = rho
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigendecomposition of a density matrix converges");
    let mut entropy = 0.0;
    for i in 0..rho.nrows() {
        let lambda = evd.S().column_vector()[i].re;
        debug_assert!(lambda > -1e-10, "density eigenvalue {lambda} below PSD floor");
        if lambda > ENTROPY_EIGENVALUE_CLAMP {
            entropy -= lambda * lambda.log2();
        }
    }
    entropy
}

/// Entanglement entropy S_l (bits) of the reduced state of `part`.
///
/// For the spin part the entropy is evaluated on the complementary
/// position–color block: a pure state's two reduced densities share their
/// nonzero spectrum, and the (Σ d_x)-dimensional block is far smaller than
/// the 2^N spin density. The spin-density guard still applies so that spin
/// entropies stay within the same configured limits everywhere.
pub fn entanglement_entropy(
    state: &PureState,
    part: Part,
    guards: &Guards,
) -> Result<f64, GuardError> {
    if part == Part::Spin {
        let n = state.graph().n_nodes();
        if n > guards.max_spin_density_nodes {
            return Err(GuardError::SpinDensity { n, max: guards.max_spin_density_nodes });
        }
        let rho = reduced_density_position_color(state);
        return Ok(density_entropy(rho.as_ref()));
    }
    let rho = reduced_density(state, part, guards)?;
    Ok(density_entropy(rho.as_ref()))
}

/// Observables of one time step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    /// p(x, t), length N, sums to 1.
    pub position: Vec<f64>,
    /// s(x, t) ∈ [−1, 1], length N.
    pub spin: Vec<f64>,
    /// S_x(t), bits.
    pub entropy_position: f64,
    /// S_c(t), bits.
    pub entropy_color: f64,
    /// S_s(t), bits.
    pub entropy_spin: f64,
}

/// A recorded evolution: one [`TrajectoryRecord`] per step, including step 0.
#[derive(Debug, Clone)]
pub struct Trajectory {
    graph: Arc<Graph>,
    records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    /// Assembles a trajectory from records, validating their shape.
    pub fn from_records(
        graph: Arc<Graph>,
        records: Vec<TrajectoryRecord>,
    ) -> Result<Self, ObservablesError> {
        let want = graph.n_nodes();
        for r in &records {
            if r.position.len() != want || r.spin.len() != want {
                return Err(ObservablesError::RecordShape {
                    step: r.step,
                    got: r.position.len().min(r.spin.len()),
                    want,
                });
            }
        }
        Ok(Self { graph, records })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    /// Last recorded step number.
    pub fn last_step(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    fn window(&self, t0: usize, t1: usize) -> Result<&[TrajectoryRecord], ObservablesError> {
        if t0 > t1 || t1 >= self.records.len() {
            return Err(ObservablesError::BadWindow { t0, t1, last: self.last_step() });
        }
        Ok(&self.records[t0..=t1])
    }
}

/// Observes the state: one [`TrajectoryRecord`] snapshot.
pub fn observe(state: &PureState, step_no: usize, guards: &Guards) -> Result<TrajectoryRecord, GuardError> {
    Ok(TrajectoryRecord {
        step: step_no,
        position: position_distribution(state),
        spin: magnetization(state),
        entropy_position: entanglement_entropy(state, Part::Position, guards)?,
        entropy_color: entanglement_entropy(state, Part::Color, guards)?,
        entropy_spin: entanglement_entropy(state, Part::Spin, guards)?,
    })
}

/// Evolves `initial` for `steps` steps, recording observables at every step
/// (including step 0). Also returns the final state.
pub fn run_trajectory(
    initial: &PureState,
    coin: Coin,
    cz_mode: CzMode,
    steps: usize,
    guards: &Guards,
) -> Result<(Trajectory, PureState), GuardError> {
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(steps + 1);
    records.push(observe(&state, 0, guards)?);
    for t in 1..=steps {
        step(&mut state, coin, cz_mode);
        records.push(observe(&state, t, guards)?);
    }
    let traj = Trajectory { graph: state.graph().clone(), records };
    Ok((traj, state))
}

/// Per-node time average and its site mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeAverage {
    /// Time mean per node over the window.
    pub per_node: Vec<f64>,
    /// Site mean of the per-node averages (the scalar s̄ for spin input).
    pub site_mean: f64,
}

fn window_mean(
    rows: &[TrajectoryRecord],
    pick: impl Fn(&TrajectoryRecord) -> &[f64],
    n: usize,
) -> TimeAverage {
    let mut per_node = vec![0.0; n];
    for r in rows {
        for (acc, v) in per_node.iter_mut().zip(pick(r)) {
            *acc += v;
        }
    }
    let len = rows.len() as f64;
    for acc in &mut per_node {
        *acc /= len;
    }
    let site_mean = per_node.iter().sum::<f64>() / n as f64;
    TimeAverage { per_node, site_mean }
}

/// Time-averaged magnetization over steps [t0, t1]: per-node means and the
/// overall s̄ (site mean of the node means).
pub fn spin_time_average(
    traj: &Trajectory,
    t0: usize,
    t1: usize,
) -> Result<TimeAverage, ObservablesError> {
    let rows = traj.window(t0, t1)?;
    Ok(window_mean(rows, |r| &r.spin, traj.graph.n_nodes()))
}

/// Time-averaged position distribution over steps [t0, t1].
pub fn position_time_average(
    traj: &Trajectory,
    t0: usize,
    t1: usize,
) -> Result<Vec<f64>, ObservablesError> {
    let rows = traj.window(t0, t1)?;
    Ok(window_mean(rows, |r| &r.position, traj.graph.n_nodes()).per_node)
}

/// Time-averaged entanglement entropy of one part over steps [t0, t1].
pub fn entropy_time_average(
    traj: &Trajectory,
    part: Part,
    t0: usize,
    t1: usize,
) -> Result<f64, ObservablesError> {
    let rows = traj.window(t0, t1)?;
    let pick = |r: &TrajectoryRecord| match part {
        Part::Position => r.entropy_position,
        Part::Color => r.entropy_color,
        Part::Spin => r.entropy_spin,
    };
    Ok(rows.iter().map(pick).sum::<f64>() / rows.len() as f64)
}

/// Spin standard deviation per node over the window:
/// Δs(x) = sqrt(mean_t (s(x,t) − s̄)²), with s̄ the overall (site and time)
/// mean.
pub fn spin_fluctuation(
    traj: &Trajectory,
    t0: usize,
    t1: usize,
) -> Result<Vec<f64>, ObservablesError> {
    let rows = traj.window(t0, t1)?;
    if rows.len() < 2 {
        return Err(ObservablesError::WindowTooShort { t0, t1 });
    }
    let s_bar = window_mean(rows, |r| &r.spin, traj.graph.n_nodes()).site_mean;
    let n = traj.graph.n_nodes();
    let mut out = vec![0.0; n];
    for r in rows {
        for (acc, v) in out.iter_mut().zip(&r.spin) {
            *acc += (v - s_bar) * (v - s_bar);
        }
    }
    for acc in &mut out {
        *acc = (*acc / rows.len() as f64).sqrt();
    }
    Ok(out)
}

/// The default stationary window [T/2, T] used when none is configured.
pub fn default_window(steps: usize) -> (usize, usize) {
    (steps / 2, steps)
}

/// CSV rendering of a trajectory: header then one row per step,
/// `t, p(0..N), s(0..N), S_x, S_c, S_s`, floats with 17 significant digits.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    use crate::stats::fmt_g17;
    use std::fmt::Write as _;

    let n = traj.graph.n_nodes();
    let mut out = String::new();
    let mut header = String::from("t");
    for x in 0..n {
        let _ = write!(header, ",p{x}");
    }
    for x in 0..n {
        let _ = write!(header, ",s{x}");
    }
    header.push_str(",entropy_x,entropy_c,entropy_s\n");
    out.push_str(&header);
    for r in &traj.records {
        let _ = write!(out, "{}", r.step);
        for v in &r.position {
            let _ = write!(out, ",{}", fmt_g17(*v));
        }
        for v in &r.spin {
            let _ = write!(out, ",{}", fmt_g17(*v));
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            fmt_g17(r.entropy_position),
            fmt_g17(r.entropy_color),
            fmt_g17(r.entropy_spin)
        );
    }
    out
}
