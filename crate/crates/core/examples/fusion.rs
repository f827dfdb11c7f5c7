//! Fits late-fusion weights on two noisy forecasters and checks that the
//! fused forecast is no worse in-sample than either input or the mean.
//!
//! ```text
//! cargo run --release --example fusion
//! ```

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use tempocast::ensemble::{dominance, FusionWeights};
use tempocast::matrix::Matrix;

fn main() -> tempocast::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let (horizons, n) = (3, 400);
    let truth = Matrix::from_fn(horizons, n, |_, i| 5.0 + 2.0 * (i as f64 / 20.0).sin());
    let noisy = |sd: f64, bias: f64, rng: &mut rand_chacha::ChaCha8Rng| {
        let d = Normal::new(0.0, sd).unwrap();
        Matrix::from_fn(horizons, n, |h, i| {
            truth.get(h, i) * 0.9 + bias + d.sample(rng) * (h + 1) as f64
        })
    };
    let p_fft = noisy(0.6, 0.3, &mut rng);
    let p_rp = noisy(0.4, -0.2, &mut rng);

    let weights = FusionWeights::fit(&p_fft, &p_rp, &truth)?;
    for (h, (w, d)) in weights
        .horizons
        .iter()
        .zip(dominance(&weights, &p_fft, &p_rp, &truth)?)
        .enumerate()
    {
        println!(
            "step {}: w_fft {:.3} w_rp {:.3} b {:.3} | MSE fused {:.4} fft {:.4} rp {:.4} mean {:.4} | holds {}",
            h + 1,
            w.w_fft,
            w.w_rp,
            w.intercept,
            d.fused_mse,
            d.fft_mse,
            d.rp_mse,
            d.mean_mse,
            d.holds()
        );
    }
    Ok(())
}
