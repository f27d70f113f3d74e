//! AdamW with decoupled weight decay.

use crate::error::{CatError, Result};
use crate::params::{ParamMut, ParamRef};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Default for AdamWState {
    fn default() -> Self {
        Self::new(0.9, 0.999, 1e-8)
    }
}

impl AdamWState {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }
}

/// One AdamW update.
///
/// Decay multiplies each decayed weight by `1 - lr * weight_decay` before the
/// adaptive step; it never enters the moment estimates.
pub fn adamw_step(
    params: &mut [ParamMut<'_>],
    grads: &[ParamRef<'_>],
    state: &mut AdamWState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(CatError::Shape(format!(
            "{} parameter arrays but {} gradient arrays",
            params.len(),
            grads.len()
        )));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.values.len() != g.values.len() {
            return Err(CatError::Shape(format!(
                "gradient for {} has length {}, expected {}",
                p.name,
                g.values.len(),
                p.values.len()
            )));
        }
        if let Some(i) = g.values.iter().position(|v| !v.is_finite()) {
            return Err(CatError::NonFinite(format!("gradient of {}[{i}]", p.name)));
        }
    }
    if state.first.is_empty() {
        state.first = params.iter().map(|p| vec![0.0; p.values.len()]).collect();
        state.second = state.first.clone();
    } else if state.first.len() != params.len()
        || state.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.values.len())
    {
        return Err(CatError::Shape("optimizer state does not match parameters".into()));
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);

    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first[i];
        let v = &mut state.second[i];
        let decay = if p.decay { 1.0 - lr * weight_decay } else { 1.0 };
        for (((w, &gi), mi), vi) in p.values.iter_mut().zip(g.values).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *w = *w * decay - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(w: &mut Vec<f64>, g: &[f64], state: &mut AdamWState, lr: f64, wd: f64, decay: bool) -> Result<()> {
        let mut params = vec![ParamMut {
            name: "w".into(),
            values: w.as_mut_slice(),
            decay,
        }];
        let grads = vec![ParamRef {
            name: "w".into(),
            values: g,
        }];
        adamw_step(&mut params, &grads, state, lr, wd)
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut w = vec![0.5, -1.5];
        let mut st = AdamWState::default();
        step(&mut w, &[0.0, 0.0], &mut st, 0.1, 0.0, true).unwrap();
        assert_eq!(w, vec![0.5, -1.5]);
        assert!(st.first_moments()[0].iter().all(|&m| m == 0.0));
        assert!(st.second_moments()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = vec![1.0];
        let mut st = AdamWState::default();
        step(&mut w, &[1.0], &mut st, 0.1, 0.0, true).unwrap();
        // m_hat / (sqrt(v_hat) + eps) = 1 / (1 + 1e-8)
        assert!((w[0] - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15);
        assert!((w[0] - 0.9).abs() < 1e-8);
    }

    #[test]
    fn decay_only_scales_weights() {
        let mut w = vec![2.0];
        let mut st = AdamWState::default();
        step(&mut w, &[0.0], &mut st, 0.1, 0.5, true).unwrap();
        assert_eq!(w[0], 2.0 * (1.0 - 0.1 * 0.5));

        let mut b = vec![2.0];
        let mut st = AdamWState::default();
        step(&mut b, &[0.0], &mut st, 0.1, 0.5, false).unwrap();
        assert_eq!(b[0], 2.0);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut w = vec![0.3, 0.7];
        let mut st = AdamWState::default();
        for _ in 0..3 {
            step(&mut w, &[0.9, -4.0], &mut st, 0.0, 0.0, true).unwrap();
        }
        assert_eq!(w, vec![0.3, 0.7]);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut w = vec![1.0, 2.0];
        let mut st = AdamWState::default();
        let err = step(&mut w, &[0.0, f64::NAN], &mut st, 0.1, 0.0, true).unwrap_err();
        assert!(err.to_string().contains("w[1]"), "{err}");
        assert_eq!(w, vec![1.0, 2.0]);
    }

    #[test]
    fn repeated_steps_descend_a_quadratic() {
        let mut w = vec![3.0];
        let mut st = AdamWState::default();
        for _ in 0..2000 {
            let g = [2.0 * (w[0] - 1.0)];
            step(&mut w, &g, &mut st, 0.01, 0.0, true).unwrap();
        }
        assert!((w[0] - 1.0).abs() < 1e-2);
    }
}
