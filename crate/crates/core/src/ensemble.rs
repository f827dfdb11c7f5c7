//! Per-horizon least-squares fusion of two branch forecasts.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `w_fft * p_fft + w_rp * p_rp + intercept` for one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonWeights {
    pub w_fft: f64,
    pub w_rp: f64,
    pub intercept: f64,
}

impl HorizonWeights {
    pub fn predict(&self, p_fft: f64, p_rp: f64) -> f64 {
        (self.w_fft * p_fft + self.w_rp * p_rp + self.intercept).max(0.0)
    }
}

/// One set of weights per horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionWeights {
    pub horizons: Vec<HorizonWeights>,
}

/// Minimum-norm least-squares solution of `a w ~ y` via one-sided Jacobi SVD.
/// Singular values below `max(rows, cols) * eps * sigma_max` are dropped.
pub fn lstsq_min_norm(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = a.shape();
    if y.len() != n {
        return Err(Error::Shape(format!(
            "design has {n} rows, target {}",
            y.len()
        )));
    }
    if !a.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares inputs".into()));
    }
    // Column-major working copy.
    let mut u: Vec<Vec<f64>> = (0..k).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|c| (0..k).map(|r| f64::from(u8::from(r == c))).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut u, &mut v] {
                    let (lo, hi) = cols.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (a, b) = (*xp, *xq);
                        *xp = c * a - s * b;
                        *xq = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = u.iter().map(|c| dot(c, c).sqrt()).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let tol = n.max(k) as f64 * f64::EPSILON * smax;
    let mut w = vec![0.0; k];
    for j in 0..k {
        if sigma[j] > tol {
            let coef = dot(&u[j], y) / (sigma[j] * sigma[j]);
            for (wi, vi) in w.iter_mut().zip(&v[j]) {
                *wi += coef * vi;
            }
        }
    }
    Ok(w)
}

fn check_lengths(p_fft: &[f64], p_rp: &[f64], y: Option<&[f64]>) -> Result<()> {
    if p_fft.len() != p_rp.len() || y.is_some_and(|y| y.len() != p_fft.len()) {
        return Err(Error::Shape("fusion inputs differ in length".into()));
    }
    Ok(())
}

/// Fits one horizon's weights on `[p_fft, p_rp, 1]`.
pub fn fit_fusion(p_fft: &[f64], p_rp: &[f64], y: &[f64]) -> Result<HorizonWeights> {
    check_lengths(p_fft, p_rp, Some(y))?;
    if y.len() < 3 {
        return Err(Error::EmptyDataset(format!(
            "fusion needs at least 3 samples, got {}",
            y.len()
        )));
    }
    let mut a = Matrix::zeros(y.len(), 3);
    for i in 0..y.len() {
        a.row_mut(i).copy_from_slice(&[p_fft[i], p_rp[i], 1.0]);
    }
    let w = lstsq_min_norm(&a, y)?;
    Ok(HorizonWeights {
        w_fft: w[0],
        w_rp: w[1],
        intercept: w[2],
    })
}

/// Fused forecast, clamped at zero.
pub fn fuse(weights: &HorizonWeights, p_fft: &[f64], p_rp: &[f64]) -> Result<Vec<f64>> {
    check_lengths(p_fft, p_rp, None)?;
    Ok(p_fft
        .iter()
        .zip(p_rp)
        .map(|(&a, &b)| weights.predict(a, b))
        .collect())
}

impl FusionWeights {
    /// Fits each horizon independently; inputs are `horizons x samples`.
    pub fn fit(p_fft: &Matrix, p_rp: &Matrix, y: &Matrix) -> Result<Self> {
        if p_fft.shape() != p_rp.shape() || p_fft.shape() != y.shape() {
            return Err(Error::Shape("fusion matrices differ in shape".into()));
        }
        let horizons = (0..y.rows())
            .map(|h| fit_fusion(p_fft.row(h), p_rp.row(h), y.row(h)))
            .collect::<Result<_>>()?;
        Ok(Self { horizons })
    }

    pub fn apply(&self, p_fft: &Matrix, p_rp: &Matrix) -> Result<Matrix> {
        if p_fft.shape() != p_rp.shape() || p_fft.rows() != self.horizons.len() {
            return Err(Error::Shape(format!(
                "fusion has {} horizons, branch forecasts are {}x{} and {}x{}",
                self.horizons.len(),
                p_fft.rows(),
                p_fft.cols(),
                p_rp.rows(),
                p_rp.cols()
            )));
        }
        let mut out = Matrix::zeros(p_fft.rows(), p_fft.cols());
        for (h, w) in self.horizons.iter().enumerate() {
            out.row_mut(h)
                .copy_from_slice(&fuse(w, p_fft.row(h), p_rp.row(h))?);
        }
        Ok(out)
    }
}

/// In-sample errors on the fit block for one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dominance {
    pub fused_mse: f64,
    pub fft_mse: f64,
    pub rp_mse: f64,
    pub mean_mse: f64,
}

impl Dominance {
    pub fn best_alternative(&self) -> f64 {
        self.fft_mse.min(self.rp_mse).min(self.mean_mse)
    }

    /// The fused error is no larger than every alternative, up to rounding.
    pub fn holds(&self) -> bool {
        self.fused_mse <= self.best_alternative() + 1e-12
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Compares the fused forecast against each branch and the constant mean on
/// the block the weights were fitted on.
pub fn dominance(
    weights: &FusionWeights,
    p_fft: &Matrix,
    p_rp: &Matrix,
    y: &Matrix,
) -> Result<Vec<Dominance>> {
    let fused = weights.apply(p_fft, p_rp)?;
    Ok((0..y.rows())
        .map(|h| {
            let t = y.row(h);
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            Dominance {
                fused_mse: mse(fused.row(h), t),
                fft_mse: mse(p_fft.row(h), t),
                rp_mse: mse(p_rp.row(h), t),
                mean_mse: t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t.len() as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_regressor_is_recovered() {
        let p_fft = [1.0, 2.5, 3.0, 4.2, 0.7];
        let p_rp = [0.3, -0.1, 0.8, 0.2, 0.5];
        let w = fit_fusion(&p_fft, &p_rp, &p_fft).unwrap();
        for (got, want) in fuse(&w, &p_fft, &p_rp).unwrap().iter().zip(&p_fft) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_branches_share_weight() {
        let p = [1.0, 2.0, 4.0, 3.0];
        let y = [1.1, 2.3, 3.9, 3.2];
        let w = fit_fusion(&p, &p, &y).unwrap();
        assert!((w.w_fft - w.w_rp).abs() < 1e-9);
        let single = fit_fusion(&p, &[0.0; 4], &y).unwrap();
        assert!((w.w_fft + w.w_rp - single.w_fft).abs() < 1e-9);
        assert!((w.intercept - single.intercept).abs() < 1e-9);
    }

    #[test]
    fn fuse_applies_weights() {
        let w = HorizonWeights {
            w_fft: 1.0,
            w_rp: 0.0,
            intercept: 0.0,
        };
        assert_eq!(fuse(&w, &[1.0, 2.0], &[5.0, 6.0]).unwrap(), vec![1.0, 2.0]);
        let half = HorizonWeights {
            w_fft: 0.5,
            w_rp: 0.5,
            intercept: 0.0,
        };
        assert_eq!(fuse(&half, &[3.0], &[3.0]).unwrap(), vec![3.0]);
        assert_eq!(fuse(&w, &[-1.0], &[0.0]).unwrap(), vec![0.0]);
        assert!(fuse(&w, &[1.0], &[]).is_err());
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_fusion(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]).is_err());
    }
}
