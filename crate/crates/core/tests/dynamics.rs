//! Focus competition and working-memory behaviour of the default network.

mod common;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use scanfield::attention::{count_bumps, detect_bump, trigger_switch};
use scanfield::field::Cell;
use scanfield::memory::{count_memory_bumps, memorize_check};
use scanfield::perception::{blank_saliency, render_saliency, world_to_retina};
use scanfield::{FieldGrid, MapId, Network, SettleCriterion, SimConfig};

fn saliency_of(cfg: &SimConfig, stimuli: &[(f64, f64)]) -> FieldGrid {
    render_saliency(&common::scene(cfg, stimuli), &common::gaze0(cfg), cfg.n)
}

fn cell_of(cfg: &SimConfig, p: (f64, f64)) -> Cell {
    world_to_retina(p, &common::gaze0(cfg), cfg.n).unwrap()
}

/// Focus bump, then let it settle.
fn settle_focus(net: &mut Network, sal: &FieldGrid, rng: &mut ChaCha8Rng) {
    let out = net.settle(sal, 1000, SettleCriterion::FocusBump, rng).unwrap();
    assert!(out.converged(), "no focus bump after {} ticks", out.ticks());
    for _ in 0..150 {
        net.tick(sal, rng).unwrap();
    }
}

/// Tick with `clamp` applied after every step.
fn run_clamped(
    net: &mut Network,
    sal: &FieldGrid,
    ticks: usize,
    rng: &mut ChaCha8Rng,
    mut clamp: impl FnMut(&mut Network),
) {
    clamp(net);
    for _ in 0..ticks {
        net.tick(sal, rng).unwrap();
        clamp(net);
    }
}

fn zero(net: &mut Network, id: MapId) {
    let n = net.n();
    net.set_map(id, FieldGrid::zeros(n)).unwrap();
}

/// Random stimulus layouts on whole cells, pairwise ≥ `min_sep` cells apart.
fn layout(rng: &mut ChaCha8Rng, k: usize, min_sep: f64, cfg: &SimConfig) -> Vec<(f64, f64)> {
    loop {
        let cells: Vec<(i64, i64)> = (0..k)
            .map(|_| (rng.gen_range(-14..=14), rng.gen_range(-14..=14)))
            .collect();
        let ok = cells.iter().enumerate().all(|(i, a)| {
            cells[i + 1..].iter().all(|b| {
                let (dx, dy) = ((a.0 - b.0) as f64, (a.1 - b.1) as f64);
                (dx * dx + dy * dy).sqrt() >= min_sep
            })
        });
        if ok {
            let cs = cfg.cell_size_deg;
            return cells.iter().map(|&(x, y)| (x as f64 * cs, y as f64 * cs)).collect();
        }
    }
}

#[test]
fn one_winner_among_equal_stimuli() {
    let cfg = SimConfig::default();
    // stimulus width in cells
    let b = cfg.stimulus_width_deg / cfg.cell_size_deg;
    for seed in 0..100u64 {
        let mut rng = common::rng(seed);
        let k = 2 + (seed % 3) as usize;
        let stimuli = layout(&mut rng, k, 3.0 * b, &cfg);
        let sal = saliency_of(&cfg, &stimuli);
        let mut net = Network::new(cfg.clone()).unwrap();
        settle_focus(&mut net, &sal, &mut rng);
        let focus = net.map(MapId::Focus);
        assert_eq!(count_bumps(focus, cfg.theta_bump), 1, "seed {seed}, stimuli {stimuli:?}");
        let (c, _) = detect_bump(focus, cfg.theta_bump).unwrap();
        assert!(
            stimuli.iter().any(|&p| cell_of(&cfg, p).chebyshev(c) <= 1),
            "seed {seed}: winner {c:?} is not on a stimulus"
        );
    }
}

#[test]
fn ties_are_broken_fairly() {
    let cfg = SimConfig::default();
    let sal = saliency_of(&cfg, &[(-3.0, 0.0), (3.0, 0.0)]);
    let mid = cfg.n / 2;
    let mut left = 0;
    for seed in 0..200u64 {
        let mut rng = common::rng(seed);
        let mut net = Network::new(cfg.clone()).unwrap();
        settle_focus(&mut net, &sal, &mut rng);
        let focus = net.map(MapId::Focus);
        assert_eq!(count_bumps(focus, cfg.theta_bump), 1);
        if detect_bump(focus, cfg.theta_bump).unwrap().0.x < mid {
            left += 1;
        }
    }
    let freq = left as f64 / 200.0;
    assert!((0.3..=0.7).contains(&freq), "left won {left} of 200");
}

#[test]
fn same_seed_same_state() {
    let cfg = SimConfig::default();
    let sal = saliency_of(&cfg, &[(-3.0, 2.0), (2.5, 3.0)]);
    let run = |seed| {
        let mut rng = common::rng(seed);
        let mut net = Network::new(cfg.clone()).unwrap();
        for _ in 0..300 {
            net.tick(&sal, &mut rng).unwrap();
        }
        MapId::ALL.map(|id| net.map(id).clone())
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn saliency_alone_does_not_enter_memory() {
    let cfg = SimConfig::default();
    let sal = saliency_of(&cfg, &[(2.0, -1.5)]);
    let mut net = Network::new(cfg.clone()).unwrap();
    let mut rng = common::rng(1);
    run_clamped(&mut net, &sal, 500, &mut rng, |net| {
        zero(net, MapId::Focus);
        zero(net, MapId::Anticipation);
    });
    assert!(net.max_activity(MapId::Wm) < cfg.theta_off);
    run_clamped(&mut net, &sal, 500, &mut rng, |net| {
        zero(net, MapId::Focus);
        zero(net, MapId::Anticipation);
    });
    assert_eq!(count_memory_bumps(&net, cfg.theta_bump), 0);
}

#[test]
fn focus_alone_does_not_enter_memory() {
    let cfg = SimConfig::default();
    let c = cell_of(&cfg, (2.0, -1.5));
    let focus = common::gaussian_bump(cfg.n, (c.x as f64, c.y as f64), 1.0, 2.0);
    let mut net = Network::new(cfg.clone()).unwrap();
    let mut rng = common::rng(1);
    run_clamped(&mut net, &blank_saliency(cfg.n), 1000, &mut rng, |net| {
        net.set_map(MapId::Focus, focus.clone()).unwrap();
    });
    assert_eq!(count_memory_bumps(&net, cfg.theta_bump), 0);
    assert!(net.max_activity(MapId::Wm) < cfg.theta_off);
}

#[test]
fn prediction_alone_does_not_enter_memory() {
    let cfg = SimConfig::default();
    let c = cell_of(&cfg, (2.0, -1.5));
    let ant = common::gaussian_bump(cfg.n, (c.x as f64, c.y as f64), 1.0, 2.0);
    let mut net = Network::new(cfg.clone()).unwrap();
    let mut rng = common::rng(1);
    run_clamped(&mut net, &blank_saliency(cfg.n), 1000, &mut rng, |net| {
        net.set_map(MapId::Anticipation, ant.clone()).unwrap();
    });
    assert_eq!(count_memory_bumps(&net, cfg.theta_bump), 0);
}

/// Focus on one of two stimuli until it is memorized, then switch away.
fn memorize_then_switch(cfg: &SimConfig, stimuli: &[(f64, f64)], seed: u64) -> (Network, ChaCha8Rng, Cell, Cell) {
    let sal = saliency_of(cfg, stimuli);
    let mut net = Network::new(cfg.clone()).unwrap();
    let mut rng = common::rng(seed);
    settle_focus(&mut net, &sal, &mut rng);
    let (won, _) = detect_bump(net.map(MapId::Focus), cfg.theta_bump).unwrap();
    let cells: Vec<Cell> = stimuli.iter().map(|&p| cell_of(cfg, p)).collect();
    let first = *cells.iter().find(|c| c.chebyshev(won) <= 1).unwrap();
    let other = *cells.iter().find(|&&c| c != first).unwrap();
    assert!(memorize_check(&net, first, cfg.theta_bump), "target not memorized");
    trigger_switch(&mut net, cfg.switch_duration);
    for _ in 0..cfg.switch_duration + 300 {
        net.tick(&sal, &mut rng).unwrap();
    }
    (net, rng, first, other)
}

#[test]
fn memorized_location_is_not_refocused() {
    let cfg = SimConfig::default();
    for seed in 0..10 {
        let (net, _, first, other) = memorize_then_switch(&cfg, &[(-3.0, 0.0), (3.0, 0.0)], seed);
        let focus = net.map(MapId::Focus);
        assert!(focus.get(first) < cfg.theta_off, "seed {seed}: {}", focus.get(first));
        assert!(focus.get(other) >= cfg.theta_bump, "seed {seed}: {}", focus.get(other));
    }
}

#[test]
fn memory_outlives_the_focus() {
    let cfg = SimConfig::default();
    let stimuli = [(-3.0, 2.0), (2.5, 3.0)];
    let sal = saliency_of(&cfg, &stimuli);
    let (mut net, mut rng, first, _) = memorize_then_switch(&cfg, &stimuli, 2);
    assert!(net.map(MapId::Focus).get(first) < cfg.theta_off);
    for t in 0..2000 {
        net.tick(&sal, &mut rng).unwrap();
        assert!(memorize_check(&net, first, cfg.theta_bump), "lost at tick {t}");
    }
}

#[test]
fn memory_loop_cannot_sustain_itself() {
    let cfg = SimConfig::default();
    let stimuli = [(-3.0, 2.0), (2.5, 3.0)];
    let (mut net, mut rng, first, _) = memorize_then_switch(&cfg, &stimuli, 3);
    assert!(memorize_check(&net, first, cfg.theta_bump));
    let blank = blank_saliency(cfg.n);
    zero(&mut net, MapId::ThalWm);
    let mut gone = None;
    for t in 1..=1500 {
        net.tick(&blank, &mut rng).unwrap();
        zero(&mut net, MapId::ThalWm);
        if net.max_activity(MapId::Wm) < cfg.theta_off {
            gone = Some(t);
            break;
        }
    }
    assert!(gone.is_some(), "wm still at {}", net.max_activity(MapId::Wm));
}

#[test]
fn three_memories_coexist() {
    let cfg = SimConfig::default();
    let stimuli = [(-3.0, 2.0), (2.5, 3.0), (1.0, -3.5)];
    let sal = saliency_of(&cfg, &stimuli);
    let cells: Vec<Cell> = stimuli.iter().map(|&p| cell_of(&cfg, p)).collect();
    let mut net = Network::new(cfg.clone()).unwrap();
    let mut rng = common::rng(4);
    for round in 1..=3 {
        settle_focus(&mut net, &sal, &mut rng);
        assert_eq!(count_memory_bumps(&net, cfg.theta_bump), round);
        if round < 3 {
            trigger_switch(&mut net, cfg.switch_duration);
            for _ in 0..cfg.switch_duration {
                net.tick(&sal, &mut rng).unwrap();
            }
        }
    }
    for _ in 0..500 {
        net.tick(&sal, &mut rng).unwrap();
    }
    assert_eq!(count_memory_bumps(&net, cfg.theta_bump), 3);
    for c in &cells {
        assert!(memorize_check(&net, *c, cfg.theta_bump));
    }
}

#[test]
fn prediction_survives_the_blank() {
    let cfg = SimConfig::default();
    let stimuli = [(-3.0, 2.0), (2.5, 3.0)];
    let sal = saliency_of(&cfg, &stimuli);
    let mut net = Network::new(cfg.clone()).unwrap();
    let mut rng = common::rng(8);
    settle_focus(&mut net, &sal, &mut rng);
    for _ in 0..600 {
        net.tick(&sal, &mut rng).unwrap();
    }
    assert!(net.max_activity(MapId::Anticipation) >= cfg.theta_bump);
    let blank = blank_saliency(cfg.n);
    for _ in 0..cfg.trial.blank_ticks {
        net.tick(&blank, &mut rng).unwrap();
    }
    for id in [MapId::Saliency, MapId::Focus, MapId::Wm, MapId::ThalWm] {
        assert!(net.max_activity(id) < cfg.theta_off, "{id} = {}", net.max_activity(id));
    }
    assert!(net.max_activity(MapId::Anticipation) >= cfg.theta_bump);
}
