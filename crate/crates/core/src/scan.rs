//! The scan experiment: settle on a target, anticipate, saccade through a
//! perceptual blank, rebuild memory from prediction plus new input, release
//! the target, repeat.

use std::cell::RefCell;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::attention::{count_bumps, decode_saccade, suprathreshold_regions, trigger_switch, SaccadePlan};
use crate::config::SimConfig;
use crate::dump::{write_csv, write_pgm};
use crate::error::{Error, Result};
use crate::field::FieldGrid;
use crate::network::{build_network, MapId, Network, SettleOutcome};
use crate::perception::{blank_saliency, render_saliency, GazeState, Scene};

/// Per-tick change below which the focus counts as settled on a target.
const FOCUS_SETTLE_TOLERANCE: f64 = 1e-3;
/// Per-tick anticipation change below which the prediction has stopped
/// building (it may never reach [`ANTICIPATION_READY`], e.g. with the
/// pathway disabled).
const ANTICIPATION_STABLE: f64 = 1e-6;
/// Fraction of its converged value every anticipation bump must reach
/// before the saccade is launched.
const ANTICIPATION_READY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialPhase {
    Settling,
    PreSaccade,
    SaccadeBlank,
    PostSaccade,
    Switching,
    Done,
    Failed(String),
}

impl TrialPhase {
    pub fn name(&self) -> &'static str {
        match self {
            TrialPhase::Settling => "settling",
            TrialPhase::PreSaccade => "pre_saccade",
            TrialPhase::SaccadeBlank => "saccade_blank",
            TrialPhase::PostSaccade => "post_saccade",
            TrialPhase::Switching => "switching",
            TrialPhase::Done => "done",
            TrialPhase::Failed(_) => "failed",
        }
    }

    pub fn can_transition_to(&self, next: &TrialPhase) -> bool {
        use TrialPhase::*;
        match (self, next) {
            (Done, _) | (Failed(_), _) => false,
            (_, Done) | (_, Failed(_)) => true,
            (Settling, PreSaccade)
            | (PreSaccade, SaccadeBlank)
            | (SaccadeBlank, PostSaccade)
            | (PostSaccade, Switching)
            | (Switching, Settling) => true,
            _ => false,
        }
    }
}

impl fmt::Display for TrialPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    AllScannedOnce,
    /// First stimulus fixated a second time.
    Refixation(usize),
    MissedStimuli(Vec<usize>),
    NonConvergence,
    /// Nothing to scan.
    Done,
    Failed(String),
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::AllScannedOnce => "AllScannedOnce",
            Outcome::Refixation(_) => "Refixation",
            Outcome::MissedStimuli(_) => "MissedStimuli",
            Outcome::NonConvergence => "NonConvergence",
            Outcome::Done => "Done",
            Outcome::Failed(_) => "Failed",
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::AllScannedOnce | Outcome::Done)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixation {
    pub stimulus: usize,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanMetrics {
    pub fixations: Vec<Fixation>,
    pub per_stimulus_counts: Vec<u32>,
    pub total_ticks: u64,
    pub outcome: Outcome,
}

impl ScanMetrics {
    pub fn summary_line(&self) -> String {
        format!(
            "outcome={} fixations={} ticks={}",
            self.outcome.name(),
            self.fixations.len(),
            self.total_ticks
        )
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let order: Vec<String> = self.fixations.iter().map(|f| f.stimulus.to_string()).collect();
        let ticks: Vec<String> = self.fixations.iter().map(|f| f.tick.to_string()).collect();
        let counts: Vec<String> = self.per_stimulus_counts.iter().map(|c| c.to_string()).collect();
        let detail = match &self.outcome {
            Outcome::Refixation(i) => i.to_string(),
            Outcome::MissedStimuli(v) => v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
            Outcome::Failed(r) => r.clone(),
            _ => String::new(),
        };
        format!(
            "outcome={}\noutcome_detail={}\nfixations={}\nfixation_order={}\nfixation_ticks={}\nper_stimulus_counts={}\ntotal_ticks={}\n",
            self.outcome.name(),
            detail,
            self.fixations.len(),
            order.join(","),
            ticks.join(","),
            counts.join(","),
            self.total_ticks
        )
    }
}

fn classify(counts: &[u32], fixations: &[Fixation]) -> Outcome {
    if counts.is_empty() {
        return Outcome::Done;
    }
    let mut seen = vec![0u32; counts.len()];
    for f in fixations {
        seen[f.stimulus] += 1;
        if seen[f.stimulus] > 1 {
            return Outcome::Refixation(f.stimulus);
        }
    }
    let missed: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] == 0).collect();
    if missed.is_empty() {
        Outcome::AllScannedOnce
    } else {
        Outcome::MissedStimuli(missed)
    }
}

/// Hooks into a running trial.
pub trait TrialObserver {
    /// Called once before the first tick (tick 0) and after every tick.
    fn on_tick(&mut self, _tick: u64, _phase: &TrialPhase, _gaze: &GazeState, _net: &Network) -> Result<()> {
        Ok(())
    }

    /// Called when a phase ends, with the state at its last tick.
    fn on_phase_end(&mut self, _tick: u64, _phase: &TrialPhase, _gaze: &GazeState, _net: &Network) -> Result<()> {
        Ok(())
    }

    /// Called when a fixation target is decoded.
    fn on_fixation(&mut self, _fixation: &Fixation, _plan: &SaccadePlan) -> Result<()> {
        Ok(())
    }
}

/// Observer that does nothing.
pub struct NoObserver;

impl TrialObserver for NoObserver {}

struct Trial<'a> {
    scene: &'a Scene,
    config: &'a SimConfig,
    net: Network,
    rng: ChaCha8Rng,
    gaze: GazeState,
    phase: TrialPhase,
    observer: &'a mut dyn TrialObserver,
}

enum Halt {
    Outcome(Outcome),
    Error(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Halt::Error(e)
    }
}

impl<'a> Trial<'a> {
    fn enter(&mut self, next: TrialPhase) -> Result<()> {
        debug_assert!(
            self.phase.can_transition_to(&next),
            "illegal transition {} -> {}",
            self.phase,
            next
        );
        let tick = self.net.ticks();
        self.observer.on_phase_end(tick, &self.phase, &self.gaze, &self.net)?;
        self.phase = next;
        Ok(())
    }

    fn budget_left(&self) -> u64 {
        self.config.trial.max_total_ticks.saturating_sub(self.net.ticks())
    }

    fn tick(&mut self, afferent: &FieldGrid) -> Result<()> {
        self.net.tick(afferent, &mut self.rng)?;
        if !self.net.is_finite() {
            return Err(Error::NonFinite { tick: self.net.ticks() });
        }
        self.observer
            .on_tick(self.net.ticks(), &self.phase, &self.gaze, &self.net)
    }

    /// Tick until `done` holds, up to `limit` ticks (clipped to the trial budget).
    fn run_until(
        &mut self,
        afferent: &FieldGrid,
        limit: u32,
        mut done: impl FnMut(&Network) -> bool,
    ) -> Result<SettleOutcome> {
        let limit = (limit as u64).min(self.budget_left()) as u32;
        for t in 1..=limit {
            self.tick(afferent)?;
            if done(&self.net) {
                return Ok(SettleOutcome::Converged { ticks: t });
            }
        }
        Ok(SettleOutcome::NonConvergence { ticks: limit })
    }

    fn run_for(&mut self, afferent: &FieldGrid, ticks: u32) -> Result<()> {
        let ticks = (ticks as u64).min(self.budget_left());
        for _ in 0..ticks {
            self.tick(afferent)?;
        }
        Ok(())
    }

    fn saliency(&self) -> FieldGrid {
        render_saliency(self.scene, &self.gaze, self.config.n)
    }

    /// Nearest stimulus to a decoded target, within tolerance.
    fn attribute(&self, plan: &SaccadePlan) -> Option<usize> {
        let n = self.config.n;
        let tol = self.config.trial.fixation_tolerance_cells as f64;
        let (tx, ty) = (plan.target_cell.x as f64, plan.target_cell.y as f64);
        self.scene
            .stimuli
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (x, y) = self.gaze.retinal_coords(p, n);
                (i, (x - tx).abs().max((y - ty).abs()))
            })
            .filter(|&(_, d)| d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    fn run(&mut self, metrics: &mut ScanMetrics) -> std::result::Result<(), Halt> {
        let cfg = self.config;
        let theta = cfg.theta_bump;
        let max_fixations = 2 * self.scene.len();
        self.observer
            .on_tick(0, &self.phase, &self.gaze, &self.net)?;
        loop {
            // (a) competition until one target holds the focus
            let saliency = self.saliency();
            let previous: RefCell<Option<FieldGrid>> = RefCell::new(None);
            let settled = self.run_until(&saliency, cfg.trial.settle_max_ticks, |net| {
                let focus = net.map(MapId::Focus);
                let mut prev = previous.borrow_mut();
                let still = prev
                    .as_ref()
                    .map(|p| p.max_abs_diff(focus) < FOCUS_SETTLE_TOLERANCE)
                    .unwrap_or(false);
                *prev = Some(focus.clone());
                still && count_bumps(focus, theta) == 1
            })?;
            if !settled.converged() {
                let outcome = if self.budget_left() == 0 {
                    Outcome::NonConvergence
                } else {
                    classify(&metrics.per_stimulus_counts, &metrics.fixations)
                };
                return Err(Halt::Outcome(outcome));
            }
            let plan = decode_saccade(self.net.map(MapId::Focus), &self.gaze, theta)
                .expect("settled focus has a bump");
            let Some(stimulus) = self.attribute(&plan) else {
                let reason = format!(
                    "target cell ({}, {}) is not within {} cells of any stimulus",
                    plan.target_cell.x, plan.target_cell.y, cfg.trial.fixation_tolerance_cells
                );
                self.enter(TrialPhase::Failed(reason.clone()))?;
                return Err(Halt::Outcome(Outcome::Failed(reason)));
            };
            let fixation = Fixation {
                stimulus,
                tick: self.net.ticks(),
            };
            self.observer.on_fixation(&fixation, &plan)?;
            metrics.fixations.push(fixation);
            metrics.per_stimulus_counts[stimulus] += 1;
            if metrics.per_stimulus_counts.iter().all(|&c| c > 0)
                || metrics.fixations.len() >= max_fixations
            {
                return Err(Halt::Outcome(classify(
                    &metrics.per_stimulus_counts,
                    &metrics.fixations,
                )));
            }

            // (b) let the prediction build
            self.enter(TrialPhase::PreSaccade)?;
            let previous: RefCell<Option<FieldGrid>> = RefCell::new(None);
            let ready = self.run_until(&saliency, cfg.trial.settle_max_ticks, |net| {
                let ant = net.map(MapId::Anticipation);
                let mut prev = previous.borrow_mut();
                let still = prev
                    .as_ref()
                    .map(|p| p.max_abs_diff(ant) < ANTICIPATION_STABLE)
                    .unwrap_or(false);
                *prev = Some(ant.clone());
                still || anticipation_ready(net)
            })?;
            if !ready.converged() {
                return Err(Halt::Outcome(Outcome::NonConvergence));
            }

            // (c) the eye moves: no input
            self.enter(TrialPhase::SaccadeBlank)?;
            self.run_for(&blank_saliency(cfg.n), cfg.trial.blank_ticks)?;
            let mut shift = plan.displacement;
            if cfg.trial.motor_noise_deg > 0.0 {
                let normal = Normal::new(0.0, cfg.trial.motor_noise_deg).expect("finite sd");
                shift.0 += normal.sample(&mut self.rng);
                shift.1 += normal.sample(&mut self.rng);
            }

            // (d) new view; the switch pulse holds focus silent while memory
            // rebuilds from prediction and saliency
            self.enter(TrialPhase::PostSaccade)?;
            self.gaze = self.gaze.shifted(shift);
            let saliency = self.saliency();
            trigger_switch(&mut self.net, cfg.switch_duration);
            self.run_for(&saliency, cfg.switch_duration)?;

            // (e) switch releases
            self.enter(TrialPhase::Switching)?;
            let theta_off = cfg.theta_off;
            self.run_until(&saliency, cfg.trial.settle_max_ticks, |net| {
                net.max_activity(MapId::SwitchInhibition) < theta_off
            })?;
            if self.budget_left() == 0 {
                return Err(Halt::Outcome(Outcome::NonConvergence));
            }
            self.enter(TrialPhase::Settling)?;
        }
    }
}

/// Anticipation holds one bump per memorized location, each near its
/// converged height.
fn anticipation_ready(net: &Network) -> bool {
    let theta = net.config().theta_bump;
    let memory = count_bumps(net.map(MapId::Wm), theta);
    if memory == 0 {
        return false;
    }
    let regions = suprathreshold_regions(net.map(MapId::Anticipation), theta);
    regions.len() == memory && regions.iter().all(|r| r.peak >= ANTICIPATION_READY)
}

/// Run one scan trial.
pub fn run_trial(scene: &Scene, config: &SimConfig, seed: u64) -> Result<ScanMetrics> {
    run_trial_observed(scene, config, seed, &mut NoObserver)
}

pub fn run_trial_observed(
    scene: &Scene,
    config: &SimConfig,
    seed: u64,
    observer: &mut dyn TrialObserver,
) -> Result<ScanMetrics> {
    scene.validate()?;
    let net = build_network(config)?;
    let mut trial = Trial {
        scene,
        config,
        net,
        rng: ChaCha8Rng::seed_from_u64(seed),
        gaze: GazeState::new((0.0, 0.0), config.cell_size_deg),
        phase: TrialPhase::Settling,
        observer,
    };
    let mut metrics = ScanMetrics {
        fixations: Vec::new(),
        per_stimulus_counts: vec![0; scene.len()],
        total_ticks: 0,
        outcome: Outcome::Done,
    };
    let outcome = match trial.run(&mut metrics) {
        Ok(()) => unreachable!("trial loop only exits through Halt"),
        Err(Halt::Error(e @ Error::NonFinite { .. })) => {
            let reason = e.to_string();
            trial.enter(TrialPhase::Failed(reason.clone()))?;
            Outcome::Failed(reason)
        }
        Err(Halt::Error(e)) => return Err(e),
        Err(Halt::Outcome(o)) => o,
    };
    if !matches!(trial.phase, TrialPhase::Failed(_)) {
        trial.enter(TrialPhase::Done)?;
    }
    metrics.total_ticks = trial.net.ticks();
    metrics.outcome = outcome;
    Ok(metrics)
}

/// Aggregate over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_fixations: f64,
    pub mean_ticks: f64,
    pub metrics: Vec<(u64, ScanMetrics)>,
}

impl BatchSummary {
    pub fn summary_line(&self) -> String {
        format!(
            "trials={} success_rate={:.3} mean_fixations={:.3} mean_ticks={:.1}",
            self.trials, self.success_rate, self.mean_fixations, self.mean_ticks
        )
    }
}

/// Run one trial per seed. Trials are independent; `jobs > 1` runs them on
/// a thread pool, with results in seed order either way.
pub fn run_batch(scene: &Scene, config: &SimConfig, seeds: &[u64], jobs: usize) -> Result<BatchSummary> {
    if seeds.is_empty() {
        return Err(Error::config("empty seed list"));
    }
    let run = |&seed: &u64| run_trial(scene, config, seed).map(|m| (seed, m));
    let results: Vec<(u64, ScanMetrics)> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(run).collect::<Result<_>>())?
    } else {
        seeds.iter().map(run).collect::<Result<_>>()?
    };
    let trials = results.len();
    let successes = results
        .iter()
        .filter(|(_, m)| m.outcome == Outcome::AllScannedOnce)
        .count();
    let mean_fixations =
        results.iter().map(|(_, m)| m.fixations.len() as f64).sum::<f64>() / trials as f64;
    let mean_ticks = results.iter().map(|(_, m)| m.total_ticks as f64).sum::<f64>() / trials as f64;
    Ok(BatchSummary {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        mean_fixations,
        mean_ticks,
        metrics: results,
    })
}

/// Writes per-map frames every `every` ticks plus a manifest.
pub struct FrameDumper {
    dir: PathBuf,
    every: u64,
    pgm: bool,
    manifest: BufWriter<File>,
    frames: usize,
    phase_ends: bool,
    last_written: Option<u64>,
}

impl FrameDumper {
    pub fn new(dir: &Path, every: u64, pgm: bool) -> Result<Self> {
        assert!(every > 0, "sampling interval must be positive");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("manifest.txt");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut manifest = BufWriter::new(file);
        writeln!(
            manifest,
            "# tick phase gaze_x gaze_y {}",
            MapId::ALL.map(|m| m.name()).join(" ")
        )
        .map_err(|e| Error::io(&path, e))?;
        Ok(FrameDumper {
            dir: dir.to_path_buf(),
            every,
            pgm,
            manifest,
            frames: 0,
            phase_ends: false,
            last_written: None,
        })
    }

    /// Also write a frame at the last tick of every phase, labelled with the
    /// phase that just ended.
    pub fn with_phase_ends(mut self) -> Self {
        self.phase_ends = true;
        self
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    fn write_frame(&mut self, tick: u64, phase: &TrialPhase, gaze: &GazeState, net: &Network) -> Result<()> {
        let mut line = format!("{tick} {} {} {}", phase.name(), gaze.gaze.0, gaze.gaze.1);
        for id in MapId::ALL {
            let name = format!("t{tick:06}_{}.csv", id.name());
            write_csv(net.map(id), &self.dir.join(&name))?;
            if self.pgm {
                let pgm = format!("t{tick:06}_{}.pgm", id.name());
                write_pgm(net.map(id), &self.dir.join(pgm))?;
            }
            line.push(' ');
            line.push_str(&name);
        }
        let path = self.dir.join("manifest.txt");
        writeln!(self.manifest, "{line}").map_err(|e| Error::io(&path, e))?;
        self.frames += 1;
        self.last_written = Some(tick);
        Ok(())
    }

    pub fn finish(mut self) -> Result<usize> {
        let path = self.dir.join("manifest.txt");
        self.manifest.flush().map_err(|e| Error::io(&path, e))?;
        Ok(self.frames)
    }
}

impl TrialObserver for FrameDumper {
    fn on_tick(&mut self, tick: u64, phase: &TrialPhase, gaze: &GazeState, net: &Network) -> Result<()> {
        if tick.is_multiple_of(self.every) {
            self.write_frame(tick, phase, gaze, net)?;
        }
        Ok(())
    }

    fn on_phase_end(&mut self, tick: u64, phase: &TrialPhase, gaze: &GazeState, net: &Network) -> Result<()> {
        if self.phase_ends && self.last_written != Some(tick) {
            self.write_frame(tick, phase, gaze, net)?;
        }
        Ok(())
    }
}

/// Run a trial and dump frames every `every_k_ticks` ticks into `dir`.
pub fn dump_frames(
    scene: &Scene,
    config: &SimConfig,
    seed: u64,
    dir: &Path,
    every_k_ticks: u64,
    pgm: bool,
) -> Result<(ScanMetrics, usize)> {
    let mut dumper = FrameDumper::new(dir, every_k_ticks, pgm)?;
    let metrics = run_trial_observed(scene, config, seed, &mut dumper)?;
    let frames = dumper.finish()?;
    Ok((metrics, frames))
}
