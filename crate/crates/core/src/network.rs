//! The six-map graph and its synchronous update.
//!
//! Every tick first computes all projection inputs from the previous
//! activities, then steps each map once. Map enumeration order therefore
//! has no effect on the result.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anticipation::Correlator;
use crate::attention::detect_bump;
use crate::config::SimConfig;
use crate::error::Result;
use crate::field::{euler_in_place, separable_accumulate, ConvPath, FieldGrid, StepParams, Taps, U_MAX};
use crate::{anticipation, field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapId {
    Saliency,
    Focus,
    Wm,
    ThalWm,
    Anticipation,
    SwitchInhibition,
}

impl MapId {
    pub const ALL: [MapId; 6] = [
        MapId::Saliency,
        MapId::Focus,
        MapId::Wm,
        MapId::ThalWm,
        MapId::Anticipation,
        MapId::SwitchInhibition,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MapId::Saliency => "saliency",
            MapId::Focus => "focus",
            MapId::Wm => "wm",
            MapId::ThalWm => "thal_wm",
            MapId::Anticipation => "anticipation",
            MapId::SwitchInhibition => "switch_inhibition",
        }
    }
}

impl std::fmt::Display for MapId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A Gaussian filter ready to apply: either separable taps or the kernel
/// for the naive loop.
#[derive(Debug, Clone)]
struct Filter {
    kernel: field::GaussianKernel,
    taps: Taps,
}

impl Filter {
    fn new(kernel: field::GaussianKernel, n: usize) -> Self {
        Filter {
            kernel,
            taps: Taps::new(&kernel, n),
        }
    }

    fn accumulate(
        &self,
        input: &[f64],
        n: usize,
        factor: f64,
        path: ConvPath,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) {
        match path {
            ConvPath::Fast => separable_accumulate(
                input,
                n,
                &self.taps,
                factor * self.kernel.amplitude,
                scratch,
                out,
            ),
            ConvPath::Naive => {
                let grid = FieldGrid::from_vec(n, input.to_vec()).expect("square input");
                let filtered = field::gaussian_filter_naive(&grid, &self.kernel);
                for (o, v) in out.iter_mut().zip(filtered.as_slice()) {
                    *o += factor * v;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Wire {
    Lateral {
        map: MapId,
        kernel: field::DoGKernel,
        excite: Filter,
        inhibit: Filter,
    },
    Sigma {
        source: MapId,
        target: MapId,
        sign: f64,
        filter: Filter,
    },
    Gated {
        a: MapId,
        b: MapId,
        target: MapId,
        weight: f64,
        filter: Filter,
    },
    Convolution {
        memory: MapId,
        focus: MapId,
        target: MapId,
    },
}

/// The running model: six maps plus the switch timer.
#[derive(Debug, Clone)]
pub struct Network {
    config: SimConfig,
    maps: Vec<FieldGrid>,
    params: Vec<StepParams>,
    wires: Vec<Wire>,
    correlator: Correlator,
    switch_hold: u32,
    ticks: u64,
    inputs: Vec<Vec<f64>>,
    scratch: Vec<f64>,
    product: Vec<f64>,
}

/// Result of [`Network::settle`]; the network itself holds the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettleOutcome {
    Converged { ticks: u32 },
    NonConvergence { ticks: u32 },
}

impl SettleOutcome {
    pub fn ticks(self) -> u32 {
        match self {
            SettleOutcome::Converged { ticks } | SettleOutcome::NonConvergence { ticks } => ticks,
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, SettleOutcome::Converged { .. })
    }
}

/// When [`Network::settle`] may stop.
pub enum SettleCriterion<'a> {
    /// Largest per-tick activity change over all maps is below the bound.
    Stable(f64),
    /// The focus map holds a suprathreshold bump.
    FocusBump,
    /// Any predicate over the state after a tick.
    Predicate(&'a dyn Fn(&Network) -> bool),
}

/// Build a network with every map at rest.
pub fn build_network(cfg: &SimConfig) -> Result<Network> {
    Network::new(cfg.clone())
}

impl Network {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let mut wires = Vec::new();
        for id in MapId::ALL {
            if let Some(k) = config.map(id).lateral {
                wires.push(Wire::Lateral {
                    map: id,
                    kernel: k,
                    excite: Filter::new(k.excitatory(), n),
                    inhibit: Filter::new(k.inhibitory(), n),
                });
            }
        }
        for p in &config.sigma {
            wires.push(Wire::Sigma {
                source: p.source,
                target: p.target,
                sign: p.sign as f64,
                filter: Filter::new(p.kernel, n),
            });
        }
        for p in &config.gated {
            wires.push(Wire::Gated {
                a: p.source_a,
                b: p.source_b,
                target: p.target,
                weight: p.weight,
                filter: Filter::new(p.spread, n),
            });
        }
        for p in &config.convolution {
            wires.push(Wire::Convolution {
                memory: p.memory,
                focus: p.focus,
                target: p.target,
            });
        }
        let params = MapId::ALL.iter().map(|&id| config.step_params(id)).collect();
        Ok(Network {
            maps: vec![FieldGrid::zeros(n); MapId::ALL.len()],
            params,
            wires,
            correlator: Correlator::new(n),
            switch_hold: 0,
            ticks: 0,
            inputs: vec![vec![0.0; n * n]; MapId::ALL.len()],
            scratch: Vec::with_capacity(n * n),
            product: vec![0.0; n * n],
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn map(&self, id: MapId) -> &FieldGrid {
        &self.maps[id.index()]
    }

    /// Overwrite one map's activities (test and tooling hook).
    pub fn set_map(&mut self, id: MapId, grid: FieldGrid) -> Result<()> {
        grid.check_size(self.n())?;
        self.maps[id.index()] = grid;
        Ok(())
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn switch_hold(&self) -> u32 {
        self.switch_hold
    }

    pub(crate) fn hold_switch(&mut self, duration_ticks: u32) {
        assert!(duration_ticks > 0, "switch duration must be positive");
        self.switch_hold = duration_ticks;
        let level = self.config.switch_amplitude.min(U_MAX);
        self.maps[MapId::SwitchInhibition.index()].fill(level);
    }

    pub fn max_activity(&self, id: MapId) -> f64 {
        self.map(id).max()
    }

    pub fn is_finite(&self) -> bool {
        self.maps.iter().all(FieldGrid::is_finite)
    }

    /// The summed input each map would receive from the current state, before
    /// noise and baseline.
    pub fn projection_inputs(&mut self, afferent_saliency: &FieldGrid) -> Result<Vec<FieldGrid>> {
        self.compute_inputs(afferent_saliency)?;
        let n = self.n();
        Ok(self
            .inputs
            .iter()
            .map(|v| FieldGrid::from_vec(n, v.clone()).expect("square input"))
            .collect())
    }

    fn compute_inputs(&mut self, afferent: &FieldGrid) -> Result<()> {
        let n = self.n();
        afferent.check_size(n)?;
        let path = self.config.conv_path;
        for inp in &mut self.inputs {
            inp.iter_mut().for_each(|v| *v = 0.0);
        }
        self.inputs[MapId::Saliency.index()].copy_from_slice(afferent.as_slice());
        for wire in &self.wires {
            match wire {
                Wire::Lateral {
                    map,
                    kernel,
                    excite,
                    inhibit,
                } => {
                    let src = self.maps[map.index()].as_slice();
                    let out = &mut self.inputs[map.index()];
                    match path {
                        ConvPath::Fast => {
                            excite.accumulate(src, n, 1.0, path, &mut self.scratch, out);
                            inhibit.accumulate(src, n, -1.0, path, &mut self.scratch, out);
                        }
                        ConvPath::Naive => {
                            let lat = field::lateral_input_naive(&self.maps[map.index()], kernel);
                            for (o, v) in out.iter_mut().zip(lat.as_slice()) {
                                *o += v;
                            }
                        }
                    }
                }
                Wire::Sigma {
                    source,
                    target,
                    sign,
                    filter,
                } => {
                    let src = self.maps[source.index()].as_slice();
                    filter.accumulate(
                        src,
                        n,
                        *sign,
                        path,
                        &mut self.scratch,
                        &mut self.inputs[target.index()],
                    );
                }
                Wire::Gated {
                    a,
                    b,
                    target,
                    weight,
                    filter,
                } => {
                    let ua = self.maps[a.index()].as_slice();
                    let ub = self.maps[b.index()].as_slice();
                    for ((p, &x), &y) in self.product.iter_mut().zip(ua).zip(ub) {
                        *p = x * y;
                    }
                    filter.accumulate(
                        &self.product,
                        n,
                        *weight,
                        path,
                        &mut self.scratch,
                        &mut self.inputs[target.index()],
                    );
                }
                Wire::Convolution {
                    memory,
                    focus,
                    target,
                } => {
                    let beta = self.config.beta;
                    if beta == 0.0 {
                        continue;
                    }
                    match path {
                        ConvPath::Fast => self.correlator.accumulate(
                            self.maps[memory.index()].as_slice(),
                            self.maps[focus.index()].as_slice(),
                            beta,
                            &mut self.inputs[target.index()],
                        ),
                        ConvPath::Naive => {
                            let g = anticipation::anticipation_input_naive(
                                &self.maps[memory.index()],
                                &self.maps[focus.index()],
                                beta,
                            );
                            for (o, v) in self.inputs[target.index()].iter_mut().zip(g.as_slice()) {
                                *o += v;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Advance every map by one Euler step.
    pub fn tick<R: Rng + ?Sized>(&mut self, afferent_saliency: &FieldGrid, rng: &mut R) -> Result<()> {
        self.compute_inputs(afferent_saliency)?;
        let amp = self.config.noise_amplitude;
        if amp > 0.0 {
            for v in &mut self.inputs[MapId::Focus.index()] {
                *v += rng.gen::<f64>() * amp;
            }
        }
        for id in MapId::ALL {
            let i = id.index();
            euler_in_place(self.maps[i].as_mut_slice(), &self.inputs[i], &self.params[i]);
        }
        if self.switch_hold > 0 {
            self.switch_hold -= 1;
            let level = self.config.switch_amplitude.min(U_MAX);
            self.maps[MapId::SwitchInhibition.index()].fill(level);
        }
        self.ticks += 1;
        Ok(())
    }

    /// Tick until `criterion` holds or `max_ticks` is reached.
    pub fn settle<R: Rng + ?Sized>(
        &mut self,
        afferent: &FieldGrid,
        max_ticks: u32,
        criterion: SettleCriterion<'_>,
        rng: &mut R,
    ) -> Result<SettleOutcome> {
        assert!(max_ticks > 0, "max_ticks must be positive");
        for t in 1..=max_ticks {
            let before = match criterion {
                SettleCriterion::Stable(_) => Some(self.maps.clone()),
                _ => None,
            };
            self.tick(afferent, rng)?;
            let done = match &criterion {
                SettleCriterion::Stable(tol) => {
                    let before = before.expect("snapshot taken");
                    self.maps
                        .iter()
                        .zip(&before)
                        .all(|(now, then)| now.max_abs_diff(then) < *tol)
                }
                SettleCriterion::FocusBump => {
                    detect_bump(self.map(MapId::Focus), self.config.theta_bump).is_some()
                }
                SettleCriterion::Predicate(p) => p(self),
            };
            if done {
                return Ok(SettleOutcome::Converged { ticks: t });
            }
        }
        Ok(SettleOutcome::NonConvergence { ticks: max_ticks })
    }
}
