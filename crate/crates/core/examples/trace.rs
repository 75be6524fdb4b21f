//! Print per-phase map statistics for one trial.
//!
//! cargo run --example trace -- [config.toml] [scene] [seed]

use scanfield::attention::{count_bumps, detect_bump};
use scanfield::scan::{run_trial_observed, Fixation, TrialObserver, TrialPhase};
use scanfield::{GazeState, MapId, Network, Scene, SimConfig};

struct Printer(u64);

fn regions(m: &scanfield::FieldGrid, theta: f64) -> String {
    scanfield::attention::suprathreshold_regions(m, theta)
        .iter()
        .map(|r| { let c = r.centroid(m); format!("({},{}){:.2}", c.x, c.y, r.peak) })
        .collect::<Vec<_>>()
        .join("")
}

impl TrialObserver for Printer {
    fn on_tick(&mut self, tick: u64, phase: &TrialPhase, _gaze: &GazeState, net: &Network) -> scanfield::Result<()> {
        if self.0 > 0 && tick.is_multiple_of(self.0) {
            let mut line = format!("  t{tick:>5} {:<13}", phase.name());
            for id in MapId::ALL {
                line.push_str(&format!(" {}:{}", &id.name()[..2], regions(net.map(id), 0.1)));
            }
            println!("{line}");
        }
        Ok(())
    }

    fn on_phase_end(&mut self, tick: u64, phase: &TrialPhase, gaze: &GazeState, net: &Network) -> scanfield::Result<()> {
        let theta = net.config().theta_bump;
        let mut line = format!("{tick:>6} {:<13} gaze=({:>5.1},{:>5.1})", phase.name(), gaze.gaze.0, gaze.gaze.1);
        for id in MapId::ALL {
            let m = net.map(id);
            let peak = detect_bump(m, theta).map(|(c, _)| format!("@{},{}", c.x, c.y)).unwrap_or_default();
            line.push_str(&format!(" {}={:.2}/{}{}", &id.name()[..id.name().len().min(3)], m.max(), count_bumps(m, theta), peak));
        }
        println!("{line}");
        Ok(())
    }

    fn on_fixation(&mut self, f: &Fixation, plan: &scanfield::attention::SaccadePlan) -> scanfield::Result<()> {
        println!("   fixation stimulus={} tick={} shift={:?}", f.stimulus, f.tick, plan.displacement);
        Ok(())
    }
}

fn main() -> scanfield::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let cfg = match args.get(1) {
        Some(p) if p != "-" => SimConfig::load(p.as_ref())?,
        _ => SimConfig::default(),
    };
    let scene_path = args.get(2).map(String::as_str).unwrap_or("crates/core/scenes/three.scene");
    let seed = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let scene = Scene::load(scene_path.as_ref(), cfg.stimulus_amplitude, cfg.stimulus_width_deg)?;
    let m = run_trial_observed(&scene, &cfg, seed, &mut Printer(std::env::var("TRACE_EVERY").ok().and_then(|v| v.parse().ok()).unwrap_or(0)))?;
    println!("{}", m.summary_line());
    Ok(())
}
