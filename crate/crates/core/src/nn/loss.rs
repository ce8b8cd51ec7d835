use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x) = -softplus(-x)`, stable for large `|x|`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Batch-averaged cross-entropy GAN losses on raw logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanLosses {
    /// `-mean log σ(real) - mean log(1 - σ(fake))`
    pub disc: f64,
    /// `-mean log σ(fake)` (non-saturating generator loss)
    pub gen: f64,
}

pub fn gan_losses(d_real: &[f64], d_fake: &[f64]) -> Result<GanLosses> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::Data("GAN losses need non-empty batches".into()));
    }
    if d_real.iter().chain(d_fake).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite discriminator logit".into()));
    }
    let mean = |v: &[f64], f: fn(f64) -> f64| v.iter().map(|&x| f(x)).sum::<f64>() / v.len() as f64;
    // log(1 - σ(x)) = log σ(-x)
    let disc = -mean(d_real, log_sigmoid) - mean(d_fake, |x| log_sigmoid(-x));
    let gen = -mean(d_fake, log_sigmoid);
    Ok(GanLosses { disc, gen })
}

/// Gradients of the discriminator loss with respect to the real and fake logits.
pub fn disc_loss_grads(d_real: &[f64], d_fake: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let br = d_real.len() as f64;
    let bf = d_fake.len() as f64;
    (
        d_real.iter().map(|&x| (sigmoid(x) - 1.0) / br).collect(),
        d_fake.iter().map(|&x| sigmoid(x) / bf).collect(),
    )
}

/// Gradient of the generator loss with respect to the fake logits.
pub fn gen_loss_grad(d_fake: &[f64]) -> Vec<f64> {
    let b = d_fake.len() as f64;
    d_fake.iter().map(|&x| (sigmoid(x) - 1.0) / b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn zero_logits() {
        let l = gan_losses(&[0.0, 0.0], &[0.0]).unwrap();
        assert!((l.disc - 2.0 * LN_2).abs() < 1e-15);
        assert!((l.gen - LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_discriminator_limit() {
        let l = gan_losses(&[800.0], &[-800.0]).unwrap();
        assert_eq!(l.disc, 0.0);
        assert!((l.gen - 800.0).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_formula() {
        let real = [0.3, -1.2, 2.5, 0.01];
        let fake = [-0.7, 1.9, -3.1];
        let naive_sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let disc = -real.iter().map(|&x| naive_sig(x).ln()).sum::<f64>() / 4.0
            - fake.iter().map(|&x| (1.0 - naive_sig(x)).ln()).sum::<f64>() / 3.0;
        let gen = -fake.iter().map(|&x| naive_sig(x).ln()).sum::<f64>() / 3.0;
        let l = gan_losses(&real, &fake).unwrap();
        assert!((l.disc - disc).abs() < 1e-10);
        assert!((l.gen - gen).abs() < 1e-10);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let real = [0.3, -1.2];
        let fake = [-0.7, 1.9, 0.4];
        let (gr, gf) = disc_loss_grads(&real, &fake);
        let gg = gen_loss_grad(&fake);
        let h = 1e-6;
        for i in 0..real.len() {
            let mut p = real;
            p[i] += h;
            let mut m = real;
            m[i] -= h;
            let fd = (gan_losses(&p, &fake).unwrap().disc - gan_losses(&m, &fake).unwrap().disc) / (2.0 * h);
            assert!((fd - gr[i]).abs() < 1e-8);
        }
        for i in 0..fake.len() {
            let mut p = fake;
            p[i] += h;
            let mut m = fake;
            m[i] -= h;
            let lp = gan_losses(&real, &p).unwrap();
            let lm = gan_losses(&real, &m).unwrap();
            assert!(((lp.disc - lm.disc) / (2.0 * h) - gf[i]).abs() < 1e-8);
            assert!(((lp.gen - lm.gen) / (2.0 * h) - gg[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(gan_losses(&[f64::NAN], &[0.0]).is_err());
        assert!(gan_losses(&[], &[0.0]).is_err());
    }
}
