use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scanfield::anticipation::{anticipation_input_naive, anticipation_input_with};
use scanfield::dump::{grid_to_csv, write_csv, write_pgm};
use scanfield::field::{lateral_input_naive, lateral_input_with};
use scanfield::oracle::{brute_force_anticipation, brute_force_lateral};
use scanfield::perception::render_saliency;
use scanfield::scan::{run_trial_observed, FrameDumper};
use scanfield::{run_batch, run_trial, ConvPath, Error, FieldGrid, GazeState, Outcome, Scene, ScanMetrics, SimConfig};

/// Oracle agreement required by `verify`.
const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "scanfield", version, about = "Anticipatory visual search with dynamic neural fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Simulation config (TOML); the built-in default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> scanfield::Result<SimConfig> {
        match &self.config {
            Some(p) => SimConfig::load(p),
            None => Ok(SimConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scan trial.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Trial seed; the config's rng_seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-map CSV frames and a manifest into this directory.
        #[arg(long)]
        dump_frames: Option<PathBuf>,
        /// Frame interval in ticks.
        #[arg(long, default_value_t = 10, requires = "dump_frames")]
        every: u64,
        /// Also write PGM images next to the CSV frames.
        #[arg(long, requires = "dump_frames")]
        pgm: bool,
        /// Also dump a frame at the last tick of every phase.
        #[arg(long, requires = "dump_frames")]
        phase_frames: bool,
        /// Write key=value metrics here.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Run one trial per seed.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Seeds rng_seed .. rng_seed + N.
        #[arg(long, conflicts_with = "seed_list", required_unless_present = "seed_list")]
        seeds: Option<u64>,
        /// Comma-separated explicit seeds.
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Compare the optimized convolutions with the brute-force references.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Random grids per operation.
        #[arg(long, default_value_t = 20)]
        grids: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the saliency map for a scene seen from a gaze position.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Horizontal gaze position in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gaze_x: f64,
        /// Vertical gaze position in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gaze_y: f64,
        /// Output file (.pgm for an image, CSV otherwise); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_scene(path: &Path, cfg: &SimConfig) -> scanfield::Result<Scene> {
    Scene::load(path, cfg.stimulus_amplitude, cfg.stimulus_width_deg)
}

fn write_text(path: &Path, text: &str) -> scanfield::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Exit status for a finished trial: only an aborted trial is an error.
fn trial_status(m: &ScanMetrics) -> ExitCode {
    match &m.outcome {
        Outcome::Failed(reason) => {
            eprintln!("trial failed: {reason}");
            ExitCode::from(2)
        }
        Outcome::NonConvergence => {
            eprintln!("trial did not converge within its tick budget");
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    }
}

fn execute(command: Command) -> scanfield::Result<ExitCode> {
    match command {
        Command::Run {
            common,
            scene,
            seed,
            dump_frames: dir,
            every,
            pgm,
            phase_frames,
            metrics,
        } => {
            let cfg = common.load()?;
            let scene = load_scene(&scene, &cfg)?;
            let seed = seed.unwrap_or(cfg.rng_seed);
            if every == 0 {
                return Err(Error::config("--every must be positive"));
            }
            let m = match dir {
                Some(dir) => {
                    let mut dumper = FrameDumper::new(&dir, every, pgm)?;
                    if phase_frames {
                        dumper = dumper.with_phase_ends();
                    }
                    let m = run_trial_observed(&scene, &cfg, seed, &mut dumper)?;
                    dumper.finish()?;
                    m
                }
                None => run_trial(&scene, &cfg, seed)?,
            };
            println!("{}", m.summary_line());
            if let Some(path) = metrics {
                write_text(&path, &format!("seed={seed}\n{}", m.to_key_values()))?;
            }
            Ok(trial_status(&m))
        }
        Command::Batch {
            common,
            scene,
            seeds,
            seed_list,
            jobs,
            metrics,
        } => {
            let cfg = common.load()?;
            let scene = load_scene(&scene, &cfg)?;
            let seeds: Vec<u64> = match (seeds, seed_list) {
                (_, Some(list)) => list,
                (Some(n), None) => (0..n).map(|i| cfg.rng_seed.wrapping_add(i)).collect(),
                (None, None) => unreachable!("clap requires one of the seed options"),
            };
            let summary = run_batch(&scene, &cfg, &seeds, jobs.max(1))?;
            let mut report = String::new();
            for (seed, m) in &summary.metrics {
                println!("seed={seed} {}", m.summary_line());
                report.push_str(&format!("seed={seed} {}\n", m.summary_line()));
            }
            println!("{}", summary.summary_line());
            if let Some(path) = metrics {
                report.push_str(&format!(
                    "trials={}\nsuccesses={}\nsuccess_rate={}\nmean_fixations={}\nmean_ticks={}\n",
                    summary.trials, summary.successes, summary.success_rate, summary.mean_fixations, summary.mean_ticks
                ));
                write_text(&path, &report)?;
            }
            let aborted = summary
                .metrics
                .iter()
                .filter(|(_, m)| matches!(m.outcome, Outcome::Failed(_) | Outcome::NonConvergence))
                .count();
            if aborted > 0 {
                eprintln!("{aborted} trial(s) failed or did not converge");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common, grids, seed } => {
            let cfg = common.load()?;
            verify(&cfg, grids, seed)
        }
        Command::Render {
            common,
            scene,
            gaze_x,
            gaze_y,
            out,
        } => {
            let cfg = common.load()?;
            let scene = load_scene(&scene, &cfg)?;
            let gaze = GazeState::new((gaze_x, gaze_y), cfg.cell_size_deg);
            gaze.validate()?;
            let grid = render_saliency(&scene, &gaze, cfg.n);
            match out {
                Some(p) if p.extension().is_some_and(|e| e == "pgm") => write_pgm(&grid, &p)?,
                Some(p) => write_csv(&grid, &p)?,
                None => print!("{}", grid_to_csv(&grid)),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn random_grid(n: usize, rng: &mut ChaCha8Rng) -> FieldGrid {
    FieldGrid::from_fn(n, |_, _| rng.gen::<f64>())
}

fn verify(cfg: &SimConfig, grids: usize, seed: u64) -> scanfield::Result<ExitCode> {
    if grids == 0 {
        return Err(Error::config("--grids must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n;
    let kernels: Vec<_> = scanfield::MapId::ALL
        .iter()
        .filter_map(|&id| cfg.map(id).lateral)
        .collect();
    let (mut lat_fast, mut lat_naive) = (0.0f64, 0.0f64);
    let (mut ant_fast, mut ant_naive) = (0.0f64, 0.0f64);
    for _ in 0..grids {
        let u = random_grid(n, &mut rng);
        for k in &kernels {
            let oracle = brute_force_lateral(&u, k);
            lat_fast = lat_fast.max(lateral_input_with(&u, k, ConvPath::Fast).max_abs_diff(&oracle));
            lat_naive = lat_naive.max(lateral_input_naive(&u, k).max_abs_diff(&oracle));
        }
        let wm = random_grid(n, &mut rng);
        let focus = random_grid(n, &mut rng);
        let oracle = brute_force_anticipation(&wm, &focus, cfg.beta);
        ant_fast = ant_fast.max(anticipation_input_with(&wm, &focus, cfg.beta, ConvPath::Fast)?.max_abs_diff(&oracle));
        ant_naive = ant_naive.max(anticipation_input_naive(&wm, &focus, cfg.beta).max_abs_diff(&oracle));
    }
    println!("lateral_input      fast={lat_fast:.3e} naive={lat_naive:.3e}");
    println!("anticipation_input fast={ant_fast:.3e} naive={ant_naive:.3e}");
    let ok = lat_fast < VERIFY_TOLERANCE && ant_fast < VERIFY_TOLERANCE && lat_naive == 0.0 && ant_naive == 0.0;
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("optimized kernels disagree with the references (tolerance {VERIFY_TOLERANCE:e}, naive must be exact)");
        Ok(ExitCode::FAILURE)
    }
}
