//! Focus readout and the switch that releases the current target.

use crate::field::{Cell, FieldGrid};
use crate::network::Network;
use crate::perception::GazeState;

/// A 4-connected group of cells at or above a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub cells: Vec<Cell>,
    pub peak: f64,
    /// Sum of activities over the region.
    pub mass: f64,
}

impl Region {
    pub fn area(&self) -> usize {
        self.cells.len()
    }

    /// Activity-weighted centroid, rounded to the nearest cell.
    pub fn centroid(&self, grid: &FieldGrid) -> Cell {
        let (mut sx, mut sy) = (0.0, 0.0);
        for &c in &self.cells {
            let w = grid.get(c);
            sx += w * c.x as f64;
            sy += w * c.y as f64;
        }
        Cell::new(
            (sx / self.mass).round() as usize,
            (sy / self.mass).round() as usize,
        )
    }
}

/// Suprathreshold regions in row-major order of their first cell.
pub fn suprathreshold_regions(grid: &FieldGrid, threshold: f64) -> Vec<Region> {
    let n = grid.n();
    let mut seen = vec![false; n * n];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n * n {
        if seen[start] || grid.as_slice()[start] < threshold {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut region = Region {
            cells: Vec::new(),
            peak: f64::NEG_INFINITY,
            mass: 0.0,
        };
        while let Some(i) = stack.pop() {
            let v = grid.as_slice()[i];
            let (x, y) = (i % n, i / n);
            region.cells.push(Cell::new(x, y));
            region.peak = region.peak.max(v);
            region.mass += v;
            let mut visit = |j: usize| {
                if !seen[j] && grid.as_slice()[j] >= threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < n {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - n);
            }
            if y + 1 < n {
                visit(i + n);
            }
        }
        region.cells.sort_unstable_by_key(|c| (c.y, c.x));
        regions.push(region);
    }
    regions
}

pub fn count_bumps(grid: &FieldGrid, threshold: f64) -> usize {
    suprathreshold_regions(grid, threshold).len()
}

/// Centroid and peak of the largest suprathreshold region, if any.
///
/// Equal areas are resolved by larger mass, then by scan order.
pub fn detect_bump(grid: &FieldGrid, threshold: f64) -> Option<(Cell, f64)> {
    let regions = suprathreshold_regions(grid, threshold);
    let mut best: Option<&Region> = None;
    for r in &regions {
        best = match best {
            Some(b) if (b.area(), b.mass) >= (r.area(), r.mass) => Some(b),
            _ => Some(r),
        };
    }
    best.map(|r| (r.centroid(grid), r.peak))
}

/// A saccade decoded from the focus map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaccadePlan {
    /// Gaze displacement in degrees, world frame.
    pub displacement: (f64, f64),
    pub target_cell: Cell,
}

impl SaccadePlan {
    pub fn is_refixation(&self) -> bool {
        self.displacement == (0.0, 0.0)
    }
}

/// Saccade that centers the focus bump on the fovea.
pub fn decode_saccade(focus: &FieldGrid, gaze: &GazeState, threshold: f64) -> Option<SaccadePlan> {
    let (cell, _) = detect_bump(focus, threshold)?;
    let (dx, dy) = cell.offset_from(focus.center());
    Some(SaccadePlan {
        displacement: (
            dx as f64 * gaze.cell_size_deg,
            dy as f64 * gaze.cell_size_deg,
        ),
        target_cell: cell,
    })
}

/// Fire the switch: the switch map is held at its plateau for
/// `duration_ticks` ticks and then relaxes under its own dynamics.
pub fn trigger_switch(net: &mut Network, duration_ticks: u32) {
    net.hold_switch(duration_ticks);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(n: usize, at: Cell, peak: f64, width: f64) -> FieldGrid {
        FieldGrid::from_fn(n, |x, y| {
            let dx = x as f64 - at.x as f64;
            let dy = y as f64 - at.y as f64;
            peak * (-(dx * dx + dy * dy) / (width * width)).exp()
        })
    }

    #[test]
    fn no_bump_in_zero_grid() {
        assert_eq!(detect_bump(&FieldGrid::zeros(41), 0.3), None);
    }

    #[test]
    fn symmetric_bump_centroid() {
        let g = bump(41, Cell::new(30, 20), 0.8, 2.0);
        let (cell, peak) = detect_bump(&g, 0.3).unwrap();
        assert_eq!(cell, Cell::new(30, 20));
        assert!((peak - 0.8).abs() < 1e-12);
    }

    #[test]
    fn largest_region_wins() {
        // 12-cell block (4×3) and 5-cell plus shape.
        let mut g = FieldGrid::zeros(21);
        for y in 2..5 {
            for x in 3..7 {
                g.set(Cell::new(x, y), 0.5);
            }
        }
        for c in [(15, 15), (14, 15), (16, 15), (15, 14), (15, 16)] {
            g.set(Cell::new(c.0, c.1), 0.9);
        }
        let regions = suprathreshold_regions(&g, 0.3);
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].area(), 12);
        assert_eq!(regions[1].area(), 5);
        let (cell, peak) = detect_bump(&g, 0.3).unwrap();
        // centroid (4.5, 3) rounds to (5, 3)
        assert_eq!(cell, Cell::new(5, 3));
        assert_eq!(peak, 0.5);
    }

    #[test]
    fn diagonal_cells_are_separate_regions() {
        let mut g = FieldGrid::zeros(5);
        g.set(Cell::new(1, 1), 1.0);
        g.set(Cell::new(2, 2), 1.0);
        assert_eq!(count_bumps(&g, 0.5), 2);
    }

    #[test]
    fn decode_examples() {
        let gaze = GazeState::new((0.0, 0.0), 0.5);
        let c = 20;
        let centered = bump(41, Cell::new(c, c), 1.0, 2.0);
        let plan = decode_saccade(&centered, &gaze, 0.3).unwrap();
        assert_eq!(plan.displacement, (0.0, 0.0));
        assert!(plan.is_refixation());

        let off = bump(41, Cell::new(c + 6, c - 4), 1.0, 2.0);
        let plan = decode_saccade(&off, &gaze, 0.3).unwrap();
        assert_eq!(plan.displacement, (3.0, -2.0));
        assert_eq!(plan.target_cell, Cell::new(26, 16));

        let faint = bump(41, Cell::new(c, c), 0.2, 2.0);
        assert_eq!(decode_saccade(&faint, &gaze, 0.3), None);
    }
}
