//! Discrete Fourier transform, `X[k] = sum_t x[t] exp(-2 pi i k t / N)`.
//!
//! Power-of-two lengths use an iterative radix-2 Cooley-Tukey pass. Other
//! composite lengths split on their smallest prime factor recursively; prime
//! lengths fall back to the direct sum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn fft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    check(x)?;
    Ok(transform(x))
}

/// Inverse transform, normalized by `1/N`.
pub fn ifft(spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    check(spectrum)?;
    let n = spectrum.len() as f64;
    let conj: Vec<Complex64> = spectrum.iter().map(|z| z.conj()).collect();
    Ok(transform(&conj).into_iter().map(|z| z.conj() / n).collect())
}

/// Transform of a real signal.
pub fn fft_real(x: &[f64]) -> Result<Vec<Complex64>> {
    let c: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&c)
}

fn check(x: &[Complex64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Parameter("FFT length must be at least 1".into()));
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("FFT input".into()));
    }
    Ok(())
}

/// `exp(-2 pi i e / n)` for `e` in `0..n`.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|e| {
            let (s, c) = (-2.0 * PI * e as f64 / n as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

fn transform(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 1 {
        return x.to_vec();
    }
    if n.is_power_of_two() {
        return radix2(x);
    }
    let p = smallest_factor(n);
    if p == n {
        return direct(x);
    }
    let m = n / p;
    let subs: Vec<Vec<Complex64>> = (0..p)
        .map(|r| {
            let part: Vec<Complex64> = (0..m).map(|j| x[j * p + r]).collect();
            transform(&part)
        })
        .collect();
    let tw = twiddles(n);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for q in 0..p {
        for k in 0..m {
            let idx = k + q * m;
            let mut acc = subs[0][k];
            for (r, sub) in subs.iter().enumerate().skip(1) {
                acc += tw[(r * idx) % n] * sub[k];
            }
            out[idx] = acc;
        }
    }
    out
}

fn radix2(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let bits = n.trailing_zeros();
    let mut a: Vec<Complex64> = (0..n)
        .map(|i| x[i.reverse_bits() >> (usize::BITS - bits)])
        .collect();
    let tw = twiddles(n);
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..len / 2 {
                let w = tw[j * stride];
                let u = a[start + j];
                let v = a[start + j + len / 2] * w;
                a[start + j] = u + v;
                a[start + j + len / 2] = u - v;
            }
        }
        len *= 2;
    }
    a
}

fn direct(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let tw = twiddles(n);
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * tw[(k * t) % n])
                .sum()
        })
        .collect()
}

fn smallest_factor(n: usize) -> usize {
    (2..)
        .take_while(|f| f * f <= n)
        .find(|f| n.is_multiple_of(*f))
        .unwrap_or(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        x[0] = Complex64::new(1.0, 0.0);
        for z in fft(&x).unwrap() {
            assert_eq!(z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn constant_is_pure_dc() {
        let c = 1.7;
        let spec = fft_real(&[c; 24]).unwrap();
        assert!((spec[0].re - 24.0 * c).abs() < 1e-9);
        assert!(spec[0].im.abs() < 1e-9);
        for z in &spec[1..] {
            assert!(z.norm() < 1e-9);
        }
    }

    #[test]
    fn prime_and_odd_lengths_round_trip() {
        for n in [1, 3, 5, 7, 9, 12, 15, 24, 30] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let back = ifft(&fft(&x).unwrap()).unwrap();
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).norm() < 1e-12, "n = {n}");
            }
        }
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(fft(&[]).is_err());
        assert!(fft(&[Complex64::new(f64::NAN, 0.0)]).is_err());
    }
}
