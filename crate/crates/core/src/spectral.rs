//! Separable FFT utilities on periodic lattices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalized FFT along every axis of a row-major `mᵈ` array.
pub fn fft_nd(data: &mut [Complex64], m: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        let block = stride * m;
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[start + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }
}

/// Signed integer wavenumber of FFT bin `k` (Nyquist bin reported as `−m/2`).
#[inline]
pub fn signed_mode(k: usize, m: usize) -> i64 {
    if k >= m / 2 {
        k as i64 - m as i64
    } else {
        k as i64
    }
}

/// Cardinal function of trigonometric interpolation on `m` (even) periodic
/// nodes with spacing `h`, evaluated at offset `y` from its node. The
/// Nyquist mode is split symmetrically so the interpolant of real data is
/// real.
pub fn periodic_cardinal(y: f64, m: usize, h: f64) -> f64 {
    let period = m as f64 * h;
    let y = y - period * (y / period).round();
    if y.abs() < 1e-14 * h {
        return 1.0;
    }
    let a = PI * y / h;
    let b = PI * y / period;
    a.sin() / (m as f64 * b.tan())
}

/// Zeroes every mode with `|k_a| > m/3` on some axis (a grid-scale low-pass).
pub fn low_pass(data: &mut [Complex64], m: usize, d: usize) {
    fft_nd(data, m, d, false);
    let cut = (m / 3) as i64;
    let n = data.len();
    for (flat, v) in data.iter_mut().enumerate() {
        let mut rest = flat;
        let mut keep = true;
        for _ in 0..d {
            let k = rest % m;
            rest /= m;
            if signed_mode(k, m).abs() > cut {
                keep = false;
                break;
            }
        }
        if !keep {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_nd(data, m, d, true);
    let scale = 1.0 / n as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}
