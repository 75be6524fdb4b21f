//! Lattice primitives: activity grids, weight kernels and the explicit Euler
//! update shared by every map.
//!
//! Positions on a grid are read as displacements from the center cell
//! `(c, c)` with `c = n / 2`, which is the fovea. Kernels use the usual
//! negative exponent, `C·exp(-|d|²/c²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper clamp applied after every step.
pub const U_MAX: f64 = 1.0;

/// Kernel taps whose relative weight falls below this value are dropped by
/// the separable path. Keeps the truncation error far below 1e-9 on the grid
/// sizes the simulator uses.
const TAP_EPSILON: f64 = 1e-14;

/// A lattice position, `x` is the column and `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// Offset from `other` in cells, `self - other`.
    pub fn offset_from(self, other: Cell) -> (i64, i64) {
        (
            self.x as i64 - other.x as i64,
            self.y as i64 - other.y as i64,
        )
    }

    /// Chebyshev distance.
    pub fn chebyshev(self, other: Cell) -> usize {
        let (dx, dy) = self.offset_from(other);
        dx.unsigned_abs().max(dy.unsigned_abs()) as usize
    }
}

/// One `n × n` map of unit activities, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    n: usize,
    data: Vec<f64>,
}

impl FieldGrid {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "grid side must be positive");
        FieldGrid {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Build a grid by evaluating `f(x, y)` at every cell.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut grid = FieldGrid::zeros(n);
        for y in 0..n {
            for x in 0..n {
                grid.data[y * n + x] = f(x, y);
            }
        }
        grid
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::config(format!(
                "grid data has {} values, expected {}",
                data.len(),
                n * n
            )));
        }
        Ok(FieldGrid { n, data })
    }

    /// Zero grid with a single unit set to `value`.
    pub fn delta(n: usize, cell: Cell, value: f64) -> Self {
        let mut grid = FieldGrid::zeros(n);
        grid.set(cell, value);
        grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> Cell {
        center_cell(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.data[cell.y * self.n + cell.x]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        self.data[cell.y * self.n + cell.x] = value;
    }

    /// Value at a signed position, `None` when outside the lattice.
    pub fn get_signed(&self, x: i64, y: i64) -> Option<f64> {
        let n = self.n as i64;
        if (0..n).contains(&x) && (0..n).contains(&y) {
            Some(self.data[(y * n + x) as usize])
        } else {
            None
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.n && cell.y < self.n
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// First cell holding the maximum value (row-major scan order).
    pub fn argmax(&self) -> Cell {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        Cell::new(best % self.n, best / self.n)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> FieldGrid {
        FieldGrid {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// Copy shifted by `(dx, dy)` cells; cells shifted in from outside are zero.
    pub fn translated(&self, dx: i64, dy: i64) -> FieldGrid {
        FieldGrid::from_fn(self.n, |x, y| {
            self.get_signed(x as i64 - dx, y as i64 - dy)
                .unwrap_or(0.0)
        })
    }

    /// Largest absolute difference to another grid of the same size.
    pub fn max_abs_diff(&self, other: &FieldGrid) -> f64 {
        assert_eq!(self.n, other.n, "grid sizes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.n,
            });
        }
        Ok(())
    }
}

/// The fovea cell of an `n × n` grid.
pub fn center_cell(n: usize) -> Cell {
    Cell::new(n / 2, n / 2)
}

/// Isotropic Gaussian weight profile `C·exp(-|d|²/c²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianKernel {
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianKernel {
    pub fn new(amplitude: f64, width: f64) -> Self {
        GaussianKernel { amplitude, width }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config("gaussian amplitude must be positive"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::config("gaussian width must be positive"));
        }
        Ok(())
    }

    pub fn value(&self, dx: f64, dy: f64) -> f64 {
        self.value_sq(dx * dx + dy * dy)
    }

    pub fn value_sq(&self, d2: f64) -> f64 {
        self.amplitude * (-d2 / (self.width * self.width)).exp()
    }
}

/// Difference of Gaussians `A·exp(-|d|²/a²) - B·exp(-|d|²/b²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoGKernel {
    pub excite: f64,
    pub excite_width: f64,
    pub inhibit: f64,
    pub inhibit_width: f64,
}

impl DoGKernel {
    pub fn new(excite: f64, excite_width: f64, inhibit: f64, inhibit_width: f64) -> Self {
        DoGKernel {
            excite,
            excite_width,
            inhibit,
            inhibit_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("excite", self.excite),
            ("excite_width", self.excite_width),
            ("inhibit", self.inhibit),
            ("inhibit_width", self.inhibit_width),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("dog {name} must be positive")));
            }
        }
        Ok(())
    }

    /// Extra check for competition maps: local excitation, wide inhibition.
    pub fn validate_competitive(&self) -> Result<()> {
        self.validate()?;
        if self.excite_width >= self.inhibit_width {
            return Err(Error::config(
                "competition kernel needs excite_width < inhibit_width",
            ));
        }
        Ok(())
    }

    pub fn value(&self, dx: f64, dy: f64) -> f64 {
        self.value_sq(dx * dx + dy * dy)
    }

    pub fn value_sq(&self, d2: f64) -> f64 {
        self.excite * (-d2 / (self.excite_width * self.excite_width)).exp()
            - self.inhibit * (-d2 / (self.inhibit_width * self.inhibit_width)).exp()
    }

    pub fn excitatory(&self) -> GaussianKernel {
        GaussianKernel::new(self.excite, self.excite_width)
    }

    pub fn inhibitory(&self) -> GaussianKernel {
        GaussianKernel::new(self.inhibit, self.inhibit_width)
    }
}

pub fn evaluate_gaussian(kernel: &GaussianKernel, dx: f64, dy: f64) -> f64 {
    kernel.value(dx, dy)
}

pub fn evaluate_dog(kernel: &DoGKernel, dx: f64, dy: f64) -> f64 {
    kernel.value(dx, dy)
}

/// Integration parameters for one map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepParams {
    pub tau: f64,
    pub dt: f64,
    #[serde(default)]
    pub baseline: f64,
}

impl StepParams {
    pub fn new(tau: f64, dt: f64) -> Self {
        StepParams {
            tau,
            dt,
            baseline: 0.0,
        }
    }

    pub fn with_baseline(mut self, baseline: f64) -> Self {
        self.baseline = baseline;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config("tau must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= self.tau) {
            return Err(Error::config("dt must satisfy 0 < dt <= tau"));
        }
        if !self.baseline.is_finite() {
            return Err(Error::config("baseline must be finite"));
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        self.dt / self.tau
    }
}

/// Which implementation of the lattice sums to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvPath {
    /// Literal double sum over the lattice.
    Naive,
    /// Separable / frequency-domain evaluation.
    #[default]
    Fast,
}

/// One-dimensional Gaussian taps `exp(-k²/w²)` for `k ∈ [-radius, radius]`.
#[derive(Debug, Clone)]
pub(crate) struct Taps {
    radius: usize,
    values: Vec<f64>,
}

impl Taps {
    pub(crate) fn new(kernel: &GaussianKernel, n: usize) -> Self {
        let w = kernel.width;
        let cutoff = (kernel.amplitude.max(1.0) / TAP_EPSILON).ln().sqrt() * w;
        let radius = (cutoff.ceil() as usize).min(n.saturating_sub(1));
        let values = (-(radius as i64)..=radius as i64)
            .map(|k| {
                let k = k as f64;
                (-(k * k) / (w * w)).exp()
            })
            .collect();
        Taps { radius, values }
    }
}

/// Separable Gaussian filter, `out += factor · Σ_y g(x-y)·u(y)` where the
/// 2D kernel is `g(d) = exp(-|d|²/w²)`; the amplitude goes into `factor`.
pub(crate) fn separable_accumulate(
    input: &[f64],
    n: usize,
    taps: &Taps,
    factor: f64,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) {
    debug_assert_eq!(input.len(), n * n);
    debug_assert_eq!(out.len(), n * n);
    let r = taps.radius as i64;
    let ni = n as i64;
    let mut live_rows = vec![false; n];
    for (y, live) in live_rows.iter_mut().enumerate() {
        *live = input[y * n..(y + 1) * n].iter().any(|&v| v != 0.0);
    }
    if !live_rows.iter().any(|&l| l) {
        return;
    }
    scratch.clear();
    scratch.resize(n * n, 0.0);
    // rows
    for y in 0..n {
        if !live_rows[y] {
            continue;
        }
        let row = &input[y * n..(y + 1) * n];
        let dst = &mut scratch[y * n..(y + 1) * n];
        for (x, d) in dst.iter_mut().enumerate() {
            let xi = x as i64;
            let lo = (-r).max(-xi);
            let hi = r.min(ni - 1 - xi);
            let mut acc = 0.0;
            for k in lo..=hi {
                acc += taps.values[(k + r) as usize] * row[(xi + k) as usize];
            }
            *d = acc;
        }
    }
    // columns
    for y in 0..n {
        let yi = y as i64;
        let lo = (-r).max(-yi);
        let hi = r.min(ni - 1 - yi);
        let dst = &mut out[y * n..(y + 1) * n];
        for k in lo..=hi {
            let src_row = (yi + k) as usize;
            if !live_rows[src_row] {
                continue;
            }
            let w = factor * taps.values[(k + r) as usize];
            let src = &scratch[src_row * n..(src_row + 1) * n];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
}

/// Gaussian-weighted sum `Σ_y s(x-y)·u(y)` by the literal double loop.
pub fn gaussian_filter_naive(grid: &FieldGrid, kernel: &GaussianKernel) -> FieldGrid {
    let n = grid.n();
    let u = grid.as_slice();
    FieldGrid::from_fn(n, |x, y| {
        let mut acc = 0.0;
        for yy in 0..n {
            for xx in 0..n {
                let dx = x as i64 - xx as i64;
                let dy = y as i64 - yy as i64;
                let d2 = (dx * dx + dy * dy) as f64;
                acc += kernel.value_sq(d2) * u[yy * n + xx];
            }
        }
        acc
    })
}

/// Gaussian-weighted sum via two one-dimensional passes.
pub fn gaussian_filter(grid: &FieldGrid, kernel: &GaussianKernel) -> FieldGrid {
    let n = grid.n();
    let mut out = FieldGrid::zeros(n);
    let taps = Taps::new(kernel, n);
    let mut scratch = Vec::new();
    separable_accumulate(
        grid.as_slice(),
        n,
        &taps,
        kernel.amplitude,
        &mut scratch,
        out.as_mut_slice(),
    );
    out
}

/// Lateral interaction `Σ_x' w(x-x')·u(x')` over the whole lattice,
/// zero-padded outside it.
pub fn lateral_input(grid: &FieldGrid, kernel: &DoGKernel) -> FieldGrid {
    lateral_input_with(grid, kernel, ConvPath::Fast)
}

pub fn lateral_input_with(grid: &FieldGrid, kernel: &DoGKernel, path: ConvPath) -> FieldGrid {
    match path {
        ConvPath::Naive => lateral_input_naive(grid, kernel),
        ConvPath::Fast => {
            let n = grid.n();
            let mut out = FieldGrid::zeros(n);
            let mut scratch = Vec::new();
            let exc = Taps::new(&kernel.excitatory(), n);
            let inh = Taps::new(&kernel.inhibitory(), n);
            separable_accumulate(
                grid.as_slice(),
                n,
                &exc,
                kernel.excite,
                &mut scratch,
                out.as_mut_slice(),
            );
            separable_accumulate(
                grid.as_slice(),
                n,
                &inh,
                -kernel.inhibit,
                &mut scratch,
                out.as_mut_slice(),
            );
            out
        }
    }
}

/// Literal quadruple loop over output and input cells.
pub fn lateral_input_naive(grid: &FieldGrid, kernel: &DoGKernel) -> FieldGrid {
    let n = grid.n();
    let u = grid.as_slice();
    FieldGrid::from_fn(n, |x, y| {
        let mut acc = 0.0;
        for yy in 0..n {
            for xx in 0..n {
                let dx = x as i64 - xx as i64;
                let dy = y as i64 - yy as i64;
                let d2 = (dx * dx + dy * dy) as f64;
                acc += kernel.value_sq(d2) * u[yy * n + xx];
            }
        }
        acc
    })
}

/// In-place clamped Euler update `u += dt/τ·(-u + input + baseline)`.
pub(crate) fn euler_in_place(u: &mut [f64], input: &[f64], p: &StepParams) {
    let rate = p.rate();
    for (ui, &ii) in u.iter_mut().zip(input) {
        let next = *ui + rate * (-*ui + ii + p.baseline);
        *ui = next.clamp(0.0, U_MAX);
    }
}

/// One Euler step of a sigma map: lateral plus afferent input.
pub fn sigma_step(
    u: &FieldGrid,
    lateral: &FieldGrid,
    afferent: &FieldGrid,
    p: &StepParams,
) -> Result<FieldGrid> {
    p.validate()?;
    lateral.check_size(u.n())?;
    afferent.check_size(u.n())?;
    let input: Vec<f64> = lateral
        .as_slice()
        .iter()
        .zip(afferent.as_slice())
        .map(|(l, a)| l + a)
        .collect();
    let mut next = u.clone();
    euler_in_place(next.as_mut_slice(), &input, p);
    Ok(next)
}

/// One Euler step of a sigma-pi map; `product_input` already holds the
/// summed products of the gating sources.
pub fn sigmapi_step(
    u: &FieldGrid,
    lateral: &FieldGrid,
    product_input: &FieldGrid,
    p: &StepParams,
) -> Result<FieldGrid> {
    sigma_step(u, lateral, product_input, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dog() -> DoGKernel {
        DoGKernel::new(1.25, 2.0, 0.7, 10.0)
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(GaussianKernel::new(1.0, 2.0).value(0.0, 0.0), 1.0);
        let g = GaussianKernel::new(1.0, 1.0).value(1.0, 0.0);
        assert!((g - (-1.0f64).exp()).abs() < 1e-15);
        let g = GaussianKernel::new(0.5, 3.0).value(3.0, 0.0);
        assert!((g - 0.183_939_720_585_721_2).abs() < 1e-12);
    }

    #[test]
    fn dog_values() {
        let k = dog();
        assert!((k.value(0.0, 0.0) - (1.25 - 0.7)).abs() < 1e-15);
        let k = DoGKernel::new(1.0, 1.0, 0.5, 2.0);
        // e^-1 - 0.5 e^-1/4, evaluated independently
        assert!((k.value(1.0, 0.0) - (-0.021_520_950_364_260_105)).abs() < 1e-15);
        let k = DoGKernel::new(1.0, 1.5, 1.0, 1.5);
        assert_eq!(k.value(2.0, -1.0), 0.0);
    }

    #[test]
    fn kernel_validation() {
        assert!(GaussianKernel::new(0.0, 1.0).validate().is_err());
        assert!(GaussianKernel::new(1.0, -1.0).validate().is_err());
        assert!(DoGKernel::new(1.0, 3.0, 0.5, 2.0).validate().is_ok());
        assert!(DoGKernel::new(1.0, 3.0, 0.5, 2.0)
            .validate_competitive()
            .is_err());
        assert!(StepParams::new(1.0, 2.0).validate().is_err());
    }

    #[test]
    fn lateral_of_zero_is_zero() {
        let g = FieldGrid::zeros(9);
        assert!(lateral_input(&g, &dog()).is_zero());
        assert!(lateral_input_naive(&g, &dog()).is_zero());
    }

    #[test]
    fn lateral_of_delta_is_kernel_image() {
        let n = 11;
        let src = Cell::new(3, 7);
        let out = lateral_input_naive(&FieldGrid::delta(n, src, 1.0), &dog());
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = Cell::new(x, y).offset_from(src);
                assert_eq!(out.get(Cell::new(x, y)), dog().value(dx as f64, dy as f64));
            }
        }
        let fast = lateral_input(&FieldGrid::delta(n, src, 1.0), &dog());
        assert!(fast.max_abs_diff(&out) < 1e-12);
    }

    #[test]
    fn separable_gaussian_matches_naive() {
        let g = FieldGrid::from_fn(13, |x, y| ((x * 7 + y * 3) % 5) as f64 / 5.0);
        let k = GaussianKernel::new(0.8, 1.7);
        let diff = gaussian_filter(&g, &k).max_abs_diff(&gaussian_filter_naive(&g, &k));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn sigma_step_examples() {
        let p = StepParams::new(10.0, 1.0);
        let z = FieldGrid::zeros(5);
        assert!(sigma_step(&z, &z, &z, &p).unwrap().is_zero());

        let half = FieldGrid::from_fn(5, |_, _| 0.5);
        let next = sigma_step(&half, &half, &z, &p).unwrap();
        assert_eq!(next, half);

        let one = FieldGrid::from_fn(5, |_, _| 1.0);
        let p = StepParams::new(1.0, 1.0);
        let next = sigma_step(&z, &z, &one, &p).unwrap();
        assert!(next.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn step_clamps_to_unit_interval() {
        let p = StepParams::new(1.0, 1.0);
        let z = FieldGrid::zeros(3);
        let big = FieldGrid::from_fn(3, |_, _| 5.0);
        assert_eq!(sigma_step(&z, &z, &big, &p).unwrap().max(), U_MAX);
        let neg = big.scaled(-1.0);
        assert_eq!(sigma_step(&z, &z, &neg, &p).unwrap().min(), 0.0);
    }

    #[test]
    fn step_rejects_mismatched_sizes() {
        let p = StepParams::new(10.0, 1.0);
        let err = sigma_step(&FieldGrid::zeros(5), &FieldGrid::zeros(7), &FieldGrid::zeros(5), &p);
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn sigmapi_matches_sigma() {
        let p = StepParams::new(4.0, 1.0).with_baseline(0.1);
        let u = FieldGrid::from_fn(5, |x, y| (x + y) as f64 / 10.0);
        let lat = FieldGrid::from_fn(5, |x, _| x as f64 / 7.0);
        let inp = FieldGrid::from_fn(5, |_, y| y as f64 / 3.0);
        assert_eq!(
            sigma_step(&u, &lat, &inp, &p).unwrap(),
            sigmapi_step(&u, &lat, &inp, &p).unwrap()
        );
        let z = FieldGrid::zeros(5);
        let decayed = sigmapi_step(&u, &z, &z, &StepParams::new(4.0, 1.0)).unwrap();
        assert!(decayed.max() < u.max());
    }

    #[test]
    fn translated_shifts_content() {
        let g = FieldGrid::delta(7, Cell::new(2, 3), 1.0);
        let t = g.translated(2, -1);
        assert_eq!(t.get(Cell::new(4, 2)), 1.0);
        assert_eq!(t.sum(), 1.0);
        assert_eq!(g.translated(10, 0).sum(), 0.0);
    }
}
