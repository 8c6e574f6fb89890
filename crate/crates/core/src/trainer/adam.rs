use crate::error::{Error, Result};
use crate::mlp::MlpParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one vector per parameter tensor in
/// checkpoint order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn matches(&self, params: &MlpParams) -> bool {
        let t = params.tensors();
        self.m.len() == t.len()
            && self.v.len() == t.len()
            && t.iter()
                .zip(self.m.iter().zip(&self.v))
                .all(|(p, (m, v))| p.len() == m.len() && p.len() == v.len())
    }

    /// One bias-corrected Adam update.
    pub fn update(&mut self, params: &mut MlpParams, grads: &[Vec<f64>], cfg: &AdamConfig) -> Result<()> {
        if !self.matches(params) || grads.len() != self.m.len() {
            return Err(Error::Architecture(
                "optimizer state does not match parameter shapes".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            if g.len() != p.len() {
                return Err(Error::Architecture("gradient shape does not match parameters".into()));
            }
            for (((pk, &gk), mk), vk) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mk = cfg.beta1 * *mk + (1.0 - cfg.beta1) * gk;
                *vk = cfg.beta2 * *vk + (1.0 - cfg.beta2) * gk * gk;
                let m_hat = *mk / bc1;
                let v_hat = *vk / bc2;
                *pk -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}
