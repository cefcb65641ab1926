//! STFT, phase vocoder, windowed-sinc resampling and FFT convolution.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub const N_FFT: usize = 2048;
pub const HOP: usize = 512;

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (TAU * i as f64 / n as f64).cos()).collect()
}

fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= len as isize {
        j = period - j;
    }
    j as usize
}

/// Centered STFT with reflect padding; returns frames of `n_fft/2 + 1` bins.
pub fn stft(signal: &[f32], n_fft: usize, hop: usize) -> Vec<Vec<Complex64>> {
    let pad = n_fft / 2;
    let padded: Vec<f64> = (0..signal.len() + 2 * pad)
        .map(|i| signal[reflect_index(i as isize - pad as isize, signal.len())] as f64)
        .collect();
    let window = hann(n_fft);
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let n_frames = 1 + (padded.len() - n_fft) / hop;
    let bins = n_fft / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    (0..n_frames)
        .map(|f| {
            let start = f * hop;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(padded[start + k] * window[k], 0.0);
            }
            fft.process(&mut buf);
            buf[..bins].to_vec()
        })
        .collect()
}

/// Inverse of [`stft`] by weighted overlap-add, trimmed or zero-padded to
/// `length` samples.
pub fn istft(frames: &[Vec<Complex64>], n_fft: usize, hop: usize, length: usize) -> Vec<f32> {
    let pad = n_fft / 2;
    let window = hann(n_fft);
    let ifft = FftPlanner::new().plan_fft_inverse(n_fft);
    let total = n_fft + hop * frames.len().saturating_sub(1);
    let mut out = vec![0.0f64; total];
    let mut norm = vec![0.0f64; total];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (f, frame) in frames.iter().enumerate() {
        buf[..frame.len()].copy_from_slice(frame);
        // Hermitian completion for a real signal.
        for k in 1..n_fft - frame.len() + 1 {
            buf[n_fft - k] = frame[k].conj();
        }
        ifft.process(&mut buf);
        let start = f * hop;
        for k in 0..n_fft {
            out[start + k] += buf[k].re / n_fft as f64 * window[k];
            norm[start + k] += window[k] * window[k];
        }
    }
    (0..length)
        .map(|i| {
            let j = i + pad;
            if j < total && norm[j] > 1e-10 {
                (out[j] / norm[j]) as f32
            } else {
                0.0
            }
        })
        .collect()
}

/// Stretches STFT frames in time by `rate` (>1 is faster), interpolating
/// magnitudes and propagating phase advances.
pub fn phase_vocoder(frames: &[Vec<Complex64>], rate: f64, hop: usize, n_fft: usize) -> Vec<Vec<Complex64>> {
    let n_frames = frames.len();
    let bins = frames.first().map_or(0, Vec::len);
    let expected_advance: Vec<f64> = (0..bins).map(|k| TAU * hop as f64 * k as f64 / n_fft as f64).collect();
    let zero = vec![Complex64::new(0.0, 0.0); bins];
    let column = |i: usize| if i < n_frames { &frames[i] } else { &zero };

    let mut phase: Vec<f64> = frames[0].iter().map(|c| c.arg()).collect();
    let mut out = Vec::new();
    let mut step = 0.0f64;
    while step < n_frames as f64 {
        let i = step.floor() as usize;
        let alpha = step - i as f64;
        let (c0, c1) = (column(i), column(i + 1));
        let frame = (0..bins)
            .map(|k| {
                let mag = (1.0 - alpha) * c0[k].norm() + alpha * c1[k].norm();
                Complex64::from_polar(mag, phase[k])
            })
            .collect();
        out.push(frame);
        for k in 0..bins {
            let mut delta = c1[k].arg() - c0[k].arg() - expected_advance[k];
            delta -= TAU * (delta / TAU).round();
            phase[k] += expected_advance[k] + delta;
        }
        step += rate;
    }
    out
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited resampling by `ratio` = output rate / input rate, using a
/// Hann-windowed sinc with 16 zero crossings per side.
pub fn resample(signal: &[f32], ratio: f64) -> Vec<f32> {
    const ZEROS: f64 = 16.0;
    let out_len = (signal.len() as f64 * ratio).round() as usize;
    let cutoff = ratio.min(1.0);
    let half_width = ZEROS / cutoff;
    (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = ((t - half_width).ceil().max(0.0)) as usize;
            let hi = ((t + half_width).floor() as usize).min(signal.len().saturating_sub(1));
            let mut acc = 0.0;
            for k in lo..=hi {
                let x = t - k as f64;
                let w = 0.5 + 0.5 * (PI * x / half_width).cos();
                acc += signal[k] as f64 * cutoff * sinc(cutoff * x) * w;
            }
            acc as f32
        })
        .collect()
}

/// Linear convolution via FFT, truncated to `signal.len()` samples.
pub fn convolve_truncated(signal: &[f32], kernel: &[f32]) -> Vec<f32> {
    let full = signal.len() + kernel.len() - 1;
    let n = full.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |xs: &[f32]| {
        let mut v: Vec<Complex64> = xs.iter().map(|x| Complex64::new(*x as f64, 0.0)).collect();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let mut a = lift(signal);
    let mut b = lift(kernel);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    a[..signal.len()].iter().map(|c| (c.re / n as f64) as f32).collect()
}
