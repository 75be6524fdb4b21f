//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scanfield::attention::suprathreshold_regions;
use scanfield::field::Cell;
use scanfield::{FieldGrid, GazeState, Scene, SimConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(n: usize, rng: &mut impl Rng) -> FieldGrid {
    FieldGrid::from_fn(n, |_, _| rng.gen::<f64>())
}

/// `amp · exp(-|x - c|² / w²)` on an `n × n` grid.
pub fn gaussian_bump(n: usize, c: (f64, f64), amp: f64, w: f64) -> FieldGrid {
    FieldGrid::from_fn(n, |x, y| {
        let dx = x as f64 - c.0;
        let dy = y as f64 - c.1;
        amp * (-(dx * dx + dy * dy) / (w * w)).exp()
    })
}

/// Centroid of the connected plateau around the maximum: handles maps
/// clamped flat at the top.
pub fn plateau_peak(grid: &FieldGrid) -> Cell {
    let top = grid.max();
    let at = grid.argmax();
    let region = suprathreshold_regions(grid, top - 1e-9)
        .into_iter()
        .find(|r| r.cells.contains(&at))
        .expect("argmax lies in a plateau region");
    region.centroid(grid)
}

pub fn gaze0(cfg: &SimConfig) -> GazeState {
    GazeState::new((0.0, 0.0), cfg.cell_size_deg)
}

pub fn scene(cfg: &SimConfig, stimuli: &[(f64, f64)]) -> Scene {
    Scene::new(stimuli.to_vec(), cfg.stimulus_amplitude, cfg.stimulus_width_deg).unwrap()
}

pub fn canonical_scene(cfg: &SimConfig) -> Scene {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenes/three.scene");
    Scene::load(path.as_ref(), cfg.stimulus_amplitude, cfg.stimulus_width_deg).unwrap()
}

/// World position (degrees) of a retinal cell seen from the origin.
pub fn cell_to_world(cfg: &SimConfig, c: Cell) -> (f64, f64) {
    let mid = (cfg.n / 2) as f64;
    (
        (c.x as f64 - mid) * cfg.cell_size_deg,
        (c.y as f64 - mid) * cfg.cell_size_deg,
    )
}
