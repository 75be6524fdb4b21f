//! Synthetic scene and retina: identical Gaussian stimuli in world
//! coordinates, seen through a gaze-centered grid.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Cell, FieldGrid, U_MAX};

/// Identical stimuli at world positions, in degrees of visual angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub stimuli: Vec<(f64, f64)>,
    pub amplitude: f64,
    pub width_deg: f64,
}

impl Scene {
    pub fn new(stimuli: Vec<(f64, f64)>, amplitude: f64, width_deg: f64) -> Result<Self> {
        let scene = Scene {
            stimuli,
            amplitude,
            width_deg,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config("stimulus amplitude must be positive"));
        }
        if !(self.width_deg > 0.0 && self.width_deg.is_finite()) {
            return Err(Error::config("stimulus width must be positive"));
        }
        for (i, &(x, y)) in self.stimuli.iter().enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::config(format!("stimulus {i} has a non-finite position")));
            }
            if self.stimuli[..i].contains(&(x, y)) {
                return Err(Error::config(format!("stimulus {i} duplicates an earlier position")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    /// Parse the scene text format: one `x_deg y_deg` pair per line, `#`
    /// starts a comment.
    pub fn parse(text: &str, origin: &str, amplitude: f64, width_deg: f64) -> Result<Self> {
        let mut stimuli = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_string(),
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(err(format!("expected `x_deg y_deg`, found {:?}", line)));
            }
            let mut coords = [0.0; 2];
            for (slot, f) in coords.iter_mut().zip(&fields) {
                *slot = f
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad number {:?}: {e}", f)))?;
                if !slot.is_finite() {
                    return Err(err(format!("non-finite coordinate {:?}", f)));
                }
            }
            if stimuli.contains(&(coords[0], coords[1])) {
                return Err(err("duplicate stimulus position".to_string()));
            }
            stimuli.push((coords[0], coords[1]));
        }
        Scene::new(stimuli, amplitude, width_deg)
    }

    pub fn load(path: &Path, amplitude: f64, width_deg: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scene::parse(&text, &path.display().to_string(), amplitude, width_deg)
    }
}

/// Where the eye is pointing and how big a grid cell is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeState {
    pub gaze: (f64, f64),
    pub cell_size_deg: f64,
}

impl GazeState {
    pub fn new(gaze: (f64, f64), cell_size_deg: f64) -> Self {
        GazeState {
            gaze,
            cell_size_deg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaze.0.is_finite() && self.gaze.1.is_finite()) {
            return Err(Error::config("gaze must be finite"));
        }
        if !(self.cell_size_deg > 0.0 && self.cell_size_deg.is_finite()) {
            return Err(Error::config("cell_size_deg must be positive"));
        }
        Ok(())
    }

    /// Continuous retinal coordinates (in cells) of a world point.
    pub fn retinal_coords(&self, p: (f64, f64), n: usize) -> (f64, f64) {
        let c = (n / 2) as f64;
        (
            c + (p.0 - self.gaze.0) / self.cell_size_deg,
            c + (p.1 - self.gaze.1) / self.cell_size_deg,
        )
    }

    pub fn shifted(&self, by: (f64, f64)) -> Self {
        GazeState {
            gaze: (self.gaze.0 + by.0, self.gaze.1 + by.1),
            ..*self
        }
    }
}

/// Nearest cell to a world point, `None` when it falls off the grid.
pub fn world_to_retina(p: (f64, f64), gaze: &GazeState, n: usize) -> Option<Cell> {
    let (x, y) = gaze.retinal_coords(p, n);
    let (x, y) = (x.round(), y.round());
    let limit = n as f64;
    if x >= 0.0 && x < limit && y >= 0.0 && y < limit {
        Some(Cell::new(x as usize, y as usize))
    } else {
        None
    }
}

/// Saliency image: a Gaussian bump per stimulus, summed and clamped.
pub fn render_saliency(scene: &Scene, gaze: &GazeState, n: usize) -> FieldGrid {
    let w = scene.width_deg / gaze.cell_size_deg;
    let centers: Vec<(f64, f64)> = scene
        .stimuli
        .iter()
        .map(|&p| gaze.retinal_coords(p, n))
        .collect();
    FieldGrid::from_fn(n, |x, y| {
        let v: f64 = centers
            .iter()
            .map(|&(cx, cy)| {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                scene.amplitude * (-(dx * dx + dy * dy) / (w * w)).exp()
            })
            .sum();
        v.min(U_MAX)
    })
}

/// What the retina sees mid-saccade.
pub fn blank_saliency(n: usize) -> FieldGrid {
    FieldGrid::zeros(n)
}
