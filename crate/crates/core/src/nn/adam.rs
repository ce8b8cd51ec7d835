use super::{Gradients, Mlp};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    /// `lr = 1e-3`, `β1 = 0.5`, `β2 = 0.999`, `ε = 1e-8`.
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for one network, with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: usize,
    first_moment: Vec<(Matrix, Vec<f64>)>,
    second_moment: Vec<(Matrix, Vec<f64>)>,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let zeros: Vec<(Matrix, Vec<f64>)> = net
            .layers()
            .iter()
            .map(|l| {
                (
                    Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    vec![0.0; l.bias.len()],
                )
            })
            .collect();
        Self {
            config,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    /// Applies one update in place. Non-finite gradients (or parameters after
    /// the update) abort with [`Error::Divergence`].
    pub fn update(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != self.first_moment.len()
            || grads
                .layers
                .iter()
                .zip(&self.first_moment)
                .any(|(g, (m, b))| g.weights.shape() != m.shape() || g.bias.len() != b.len())
        {
            return Err(Error::Shape("gradients do not match the optimizer state".into()));
        }
        if !grads.all_finite() {
            return Err(Error::Divergence {
                iteration: self.step,
                what: "non-finite gradient".into(),
            });
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let apply = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        for (((layer, g), (mw, mb)), (vw, vb)) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            apply(
                layer.weights.as_mut_slice(),
                g.weights.as_slice(),
                mw.as_mut_slice(),
                vw.as_mut_slice(),
            );
            apply(&mut layer.bias, &g.bias, mb, vb);
        }
        if !net.params_finite() {
            return Err(Error::Divergence {
                iteration: self.step,
                what: "non-finite parameters after update".into(),
            });
        }
        Ok(())
    }
}
