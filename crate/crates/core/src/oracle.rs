//! Brute-force reference sums.
//!
//! Deliberately naive and self-contained: no kernel types' helpers, no
//! separable passes, no transforms. Loop order is fixed (output row-major,
//! then input row-major) so results are reproducible bit for bit.

use crate::field::{DoGKernel, FieldGrid};

/// Literal `Σ_x' w(x-x')·u(x')` with zero padding outside the lattice.
pub fn brute_force_lateral(grid: &FieldGrid, kernel: &DoGKernel) -> FieldGrid {
    let n = grid.n();
    let u = grid.as_slice();
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let mut acc = 0.0;
            for yy in 0..n {
                for xx in 0..n {
                    let dx = x as i64 - xx as i64;
                    let dy = y as i64 - yy as i64;
                    let d2 = (dx * dx + dy * dy) as f64;
                    let w = kernel.excite
                        * (-d2 / (kernel.excite_width * kernel.excite_width)).exp()
                        - kernel.inhibit
                            * (-d2 / (kernel.inhibit_width * kernel.inhibit_width)).exp();
                    acc += w * u[yy * n + xx];
                }
            }
            out[y * n + x] = acc;
        }
    }
    FieldGrid::from_vec(n, out).expect("square output")
}

/// Literal `β·Σ_y wm(y)·f(c + y - x)`; terms whose focus index leaves the
/// lattice are dropped.
pub fn brute_force_anticipation(wm: &FieldGrid, focus: &FieldGrid, beta: f64) -> FieldGrid {
    let n = wm.n();
    assert_eq!(n, focus.n(), "grid sizes differ");
    let c = (n / 2) as i64;
    let ni = n as i64;
    let m = wm.as_slice();
    let f = focus.as_slice();
    let mut out = vec![0.0; n * n];
    for x1 in 0..ni {
        for x0 in 0..ni {
            let mut acc = 0.0;
            for y1 in 0..ni {
                for y0 in 0..ni {
                    let j0 = c + y0 - x0;
                    let j1 = c + y1 - x1;
                    if j0 < 0 || j0 >= ni || j1 < 0 || j1 >= ni {
                        continue;
                    }
                    acc += m[(y1 * ni + y0) as usize] * f[(j1 * ni + j0) as usize];
                }
            }
            out[(x1 * ni + x0) as usize] = beta * acc;
        }
    }
    FieldGrid::from_vec(n, out).expect("square output")
}
