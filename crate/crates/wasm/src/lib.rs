//! Browser bindings for the interactive demo page.
//!
//! Every export takes a JSON request string and returns a JSON response
//! string, so the page needs nothing beyond wasm-bindgen's generated loader.
//! The `*_json` functions hold the actual logic and are plain Rust, which
//! keeps them testable on the host; the `#[wasm_bindgen]` wrappers only
//! translate errors.
//!
//! Guards are fixed at browser-friendly sizes: walks up to 12 nodes, dense
//! spectra up to dimension 1536 (the bull, cycles up to C_6, paths up to P_7,
//! Möbius ladders up to 6 nodes — small enough to diagonalize in seconds of
//! single-threaded wasm).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use spinwalk::graph::Family;
use spinwalk::observables::{run_trajectory, TrajectoryRecord};
use spinwalk::ops::{build_unitary, Coin, CzMode};
use spinwalk::spectral::{
    diagonalize, ks_distance, level_spacings, poisson_cdf, wigner_surmise_cdf,
};
use spinwalk::{generate, Guards, PureState};

fn browser_guards() -> Guards {
    Guards {
        max_state_nodes: 12,
        max_spin_density_nodes: 10,
        max_packed_dim: 1536,
    }
}

fn default_coin() -> Coin {
    Coin::Grover
}

fn default_steps() -> usize {
    100
}

fn default_kets() -> Vec<(usize, usize, usize)> {
    vec![(0, 0, 0)]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRequest {
    graph: Family,
}

#[derive(Serialize)]
struct GraphResponse {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    dot: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkRequest {
    graph: Family,
    #[serde(default = "default_coin")]
    coin: Coin,
    #[serde(default)]
    cz_mode: CzMode,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_kets")]
    initial_kets: Vec<(usize, usize, usize)>,
}

#[derive(Serialize)]
struct WalkResponse {
    nodes: usize,
    steps: usize,
    records: Vec<TrajectoryRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumRequest {
    graph: Family,
    #[serde(default = "default_coin")]
    coin: Coin,
    #[serde(default)]
    cz_mode: CzMode,
}

#[derive(Serialize)]
struct SpectrumResponse {
    dim: usize,
    quasienergies: Vec<f64>,
    entropies: Vec<f64>,
    /// Unit-mean spacings with degenerate levels merged.
    spacings: Vec<f64>,
    ks_wigner: f64,
    ks_poisson: f64,
    max_residual: f64,
}

fn parse<'a, T: Deserialize<'a>>(request: &'a str) -> Result<T, String> {
    serde_json::from_str(request).map_err(|e| format!("invalid request: {e}"))
}

fn respond<T: Serialize>(response: &T) -> Result<String, String> {
    serde_json::to_string(response).map_err(|e| format!("cannot serialize response: {e}"))
}

/// Builds the requested graph and describes it for drawing.
pub fn graph_preview_json(request: &str) -> Result<String, String> {
    let req: GraphRequest = parse(request)?;
    let graph = generate(&req.graph).map_err(|e| e.to_string())?;
    respond(&GraphResponse {
        nodes: graph.n_nodes(),
        edges: graph.edges().to_vec(),
        degrees: graph.degrees().to_vec(),
        dot: graph.to_dot(),
    })
}

/// Runs the walk and returns every per-step observable record.
pub fn walk_json(request: &str) -> Result<String, String> {
    let req: WalkRequest = parse(request)?;
    let guards = browser_guards();
    let graph = Arc::new(generate(&req.graph).map_err(|e| e.to_string())?);
    let psi0 = PureState::from_kets(graph, &req.initial_kets, &guards)
        .map_err(|e| e.to_string())?;
    let (traj, _) = run_trajectory(&psi0, req.coin, req.cz_mode, req.steps, &guards)
        .map_err(|e| e.to_string())?;
    respond(&WalkResponse {
        nodes: traj.graph().n_nodes(),
        steps: req.steps,
        records: traj.records().to_vec(),
    })
}

/// Diagonalizes the one-step operator and returns quasienergies, eigenvector
/// entropies, and level-spacing statistics against both reference ensembles.
pub fn spectrum_json(request: &str) -> Result<String, String> {
    let req: SpectrumRequest = parse(request)?;
    let guards = browser_guards();
    let graph = Arc::new(generate(&req.graph).map_err(|e| e.to_string())?);
    let op =
        build_unitary(&graph, req.coin, req.cz_mode, &guards).map_err(|e| e.to_string())?;
    let spectral = diagonalize(&op, &guards).map_err(|e| e.to_string())?;
    drop(op);
    let spacings = level_spacings(&spectral, true).map_err(|e| e.to_string())?;
    let ks_wigner = ks_distance(&spacings, wigner_surmise_cdf).map_err(|e| e.to_string())?;
    let ks_poisson = ks_distance(&spacings, poisson_cdf).map_err(|e| e.to_string())?;
    respond(&SpectrumResponse {
        dim: spectral.quasienergies().len(),
        quasienergies: spectral.quasienergies().to_vec(),
        entropies: spectral.entropies().to_vec(),
        spacings,
        ks_wigner,
        ks_poisson,
        max_residual: spectral.max_residual(),
    })
}

#[wasm_bindgen]
pub fn graph_preview(request: &str) -> Result<String, JsValue> {
    graph_preview_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn walk(request: &str) -> Result<String, JsValue> {
    walk_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum(request: &str) -> Result<String, JsValue> {
    spectrum_json(request).map_err(|e| JsValue::from_str(&e))
}
