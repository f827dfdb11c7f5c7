//! Dominant-frequency descriptors of a daily cycle plus noise.
//!
//! ```text
//! cargo run --release --example spectral_features
//! ```

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use tempocast::features::{dominant_bin, fft_real, spectral_features, RETRO_ROWS};
use tempocast::matrix::Matrix;

fn main() -> tempocast::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    // Two cycles across the 24-row window, i.e. a 12 hour period.
    let signal: Vec<f64> = (0..RETRO_ROWS)
        .map(|t| {
            4.0 + 2.0 * (2.0 * PI * 2.0 * t as f64 / RETRO_ROWS as f64 + 0.5).cos()
                + rng.gen_range(-0.2..0.2)
        })
        .collect();

    let spectrum = fft_real(&signal)?;
    for (k, z) in spectrum.iter().enumerate().take(RETRO_ROWS / 2 + 1) {
        println!("bin {k:>2}: |X| = {:8.3}", z.norm());
    }
    let d = dominant_bin(&signal)?;
    println!(
        "dominant bin {} magnitude {:.3} phase {:.3} rad",
        d.bin, d.magnitude, d.phase
    );

    let window = Matrix::from_fn(RETRO_ROWS, 8, |r, c| signal[r] * (c + 1) as f64);
    let desc = spectral_features(&window)?;
    println!(
        "per-channel (magnitude, phase): {:?}",
        desc.chunks(2).collect::<Vec<_>>()
    );
    Ok(())
}
