//! Readouts over the working-memory pair (`wm`, `thal_wm`).

use crate::attention::count_bumps;
use crate::field::Cell;
use crate::network::{MapId, Network};

/// Radius (cells) searched around a location by [`memorize_check`].
pub const MEMORY_RADIUS: usize = 2;

/// Whether `cell` is held in working memory: some wm unit within
/// [`MEMORY_RADIUS`] cells reaches `theta_bump`.
pub fn memorize_check(net: &Network, cell: Cell, theta_bump: f64) -> bool {
    let wm = net.map(MapId::Wm);
    let n = wm.n();
    assert!(wm.contains(cell), "cell outside the grid");
    let r = MEMORY_RADIUS as i64;
    let mut best = f64::NEG_INFINITY;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let (x, y) = (cell.x as i64 + dx, cell.y as i64 + dy);
            if x < 0 || y < 0 || x >= n as i64 || y >= n as i64 {
                continue;
            }
            best = best.max(wm.get(Cell::new(x as usize, y as usize)));
        }
    }
    best >= theta_bump
}

/// Number of separate memorized locations.
pub fn count_memory_bumps(net: &Network, theta_bump: f64) -> usize {
    count_bumps(net.map(MapId::Wm), theta_bump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::field::FieldGrid;
    use crate::network::build_network;

    #[test]
    fn fresh_network_remembers_nothing() {
        let net = build_network(&SimConfig::default()).unwrap();
        assert_eq!(count_memory_bumps(&net, 0.3), 0);
        assert!(!memorize_check(&net, Cell::new(20, 20), 0.3));
    }

    #[test]
    fn check_looks_within_radius() {
        let mut net = build_network(&SimConfig::default()).unwrap();
        net.set_map(MapId::Wm, FieldGrid::delta(41, Cell::new(10, 10), 0.9))
            .unwrap();
        assert!(memorize_check(&net, Cell::new(12, 10), 0.3));
        assert!(memorize_check(&net, Cell::new(11, 11), 0.3));
        assert!(!memorize_check(&net, Cell::new(12, 12), 0.3));
        assert!(!memorize_check(&net, Cell::new(13, 10), 0.3));
        assert_eq!(count_memory_bumps(&net, 0.3), 1);
    }
}
