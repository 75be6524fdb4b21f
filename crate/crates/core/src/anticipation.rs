//! Sigma-pi anticipation map.
//!
//! Each unit receives `β·Σ_y wm(y)·f(c + y - x)`: the working memory
//! correlated with the focus map, where the focus index is read relative to
//! the grid center `c`. For a focus bump at offset `s` from the center, the
//! result is the memory translated by `-s`, i.e. where every memorized
//! location will land on the retina once the saccade to `s` is made.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::attention::detect_bump;
use crate::error::Result;
use crate::field::{euler_in_place, ConvPath, FieldGrid, StepParams};
use crate::network::{MapId, Network};

/// Frequency-domain evaluation of the anticipation sum, zero-padded to
/// `2n - 1` per axis so the circular correlation equals the linear one.
#[derive(Clone)]
pub struct Correlator {
    n: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    a: Vec<Complex<f64>>,
    b: Vec<Complex<f64>>,
    column: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator")
            .field("n", &self.n)
            .field("size", &self.size)
            .finish()
    }
}

impl Correlator {
    pub fn new(n: usize) -> Self {
        let size = 2 * n - 1;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let zero = Complex::new(0.0, 0.0);
        Correlator {
            n,
            size,
            forward,
            inverse,
            a: vec![zero; size * size],
            b: vec![zero; size * size],
            column: vec![zero; size],
            scratch: vec![zero; scratch_len],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&mut self, which: bool, inverse: bool) {
        let size = self.size;
        let plan = if inverse {
            Arc::clone(&self.inverse)
        } else {
            Arc::clone(&self.forward)
        };
        let buf = if which { &mut self.a } else { &mut self.b };
        for row in buf.chunks_exact_mut(size) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        for col in 0..size {
            for r in 0..size {
                self.column[r] = buf[r * size + col];
            }
            plan.process_with_scratch(&mut self.column, &mut self.scratch);
            for r in 0..size {
                buf[r * size + col] = self.column[r];
            }
        }
    }

    /// `out += β·Σ_y wm(y)·f(c + y - x)`.
    pub fn accumulate(&mut self, wm: &[f64], focus: &[f64], beta: f64, out: &mut [f64]) {
        let n = self.n;
        let size = self.size;
        if beta == 0.0 || wm.iter().all(|&v| v == 0.0) || focus.iter().all(|&v| v == 0.0) {
            return;
        }
        let zero = Complex::new(0.0, 0.0);
        self.a.iter_mut().for_each(|v| *v = zero);
        self.b.iter_mut().for_each(|v| *v = zero);
        for y in 0..n {
            for x in 0..n {
                self.a[y * size + x].re = wm[y * n + x];
                self.b[y * size + x].re = focus[y * n + x];
            }
        }
        self.transform(true, false);
        self.transform(false, false);
        for (p, q) in self.a.iter_mut().zip(&self.b) {
            *p *= q.conj();
        }
        self.transform(true, true);
        // a now holds g(k) = Σ_j wm(k + j)·f(j) at index k mod size (unnormalised).
        let c = (n / 2) as i64;
        let norm = beta / (size * size) as f64;
        let wrap = |k: i64| -> usize { k.rem_euclid(size as i64) as usize };
        for x1 in 0..n {
            let k1 = wrap(x1 as i64 - c);
            for x0 in 0..n {
                let k0 = wrap(x0 as i64 - c);
                out[x1 * n + x0] += norm * self.a[k1 * size + k0].re;
            }
        }
    }
}

/// Anticipation input through the transform path.
pub fn anticipation_input(wm: &FieldGrid, focus: &FieldGrid, beta: f64) -> Result<FieldGrid> {
    anticipation_input_with(wm, focus, beta, ConvPath::Fast)
}

pub fn anticipation_input_with(
    wm: &FieldGrid,
    focus: &FieldGrid,
    beta: f64,
    path: ConvPath,
) -> Result<FieldGrid> {
    focus.check_size(wm.n())?;
    Ok(match path {
        ConvPath::Naive => anticipation_input_naive(wm, focus, beta),
        ConvPath::Fast => {
            let mut out = FieldGrid::zeros(wm.n());
            Correlator::new(wm.n()).accumulate(
                wm.as_slice(),
                focus.as_slice(),
                beta,
                out.as_mut_slice(),
            );
            out
        }
    })
}

/// Literal double sum, same loop order as the reference oracle.
pub fn anticipation_input_naive(wm: &FieldGrid, focus: &FieldGrid, beta: f64) -> FieldGrid {
    let n = wm.n();
    let ni = n as i64;
    let c = (n / 2) as i64;
    let m = wm.as_slice();
    let f = focus.as_slice();
    FieldGrid::from_fn(n, |x0, x1| {
        let (x0, x1) = (x0 as i64, x1 as i64);
        let mut acc = 0.0;
        for y1 in 0..ni {
            let j1 = c + y1 - x1;
            if !(0..ni).contains(&j1) {
                continue;
            }
            for y0 in 0..ni {
                let j0 = c + y0 - x0;
                if !(0..ni).contains(&j0) {
                    continue;
                }
                acc += m[(y1 * ni + y0) as usize] * f[(j1 * ni + j0) as usize];
            }
        }
        beta * acc
    })
}

/// Euler step with no lateral term, clamped to `[0, 1]`.
pub fn step_anticipation(u: &FieldGrid, input: &FieldGrid, p: &StepParams) -> Result<FieldGrid> {
    p.validate()?;
    input.check_size(u.n())?;
    let mut next = u.clone();
    euler_in_place(next.as_mut_slice(), input.as_slice(), p);
    Ok(next)
}

/// The current anticipation map, provided the focus holds a target.
pub fn predict_postsaccadic_memory(net: &Network) -> Option<FieldGrid> {
    detect_bump(net.map(MapId::Focus), net.config().theta_bump)?;
    Some(net.map(MapId::Anticipation).clone())
}
