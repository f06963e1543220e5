use super::{Activation, Dense};
use crate::error::{Error, Result};
use crate::ndmath::{sigmoid, Grads, ParamStore, Rng};

/// ReLU MLP followed by a logistic output: `σ(W_p · relu(W₁ h + b₁) + b_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Head {
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

#[derive(Clone, Debug)]
pub struct HeadCache {
    pub input: Vec<f64>,
    pub activations: Vec<Vec<f64>>,
    pub logit: f64,
    pub probability: f64,
}

impl Head {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        width: usize,
        layers: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut hidden = Vec::with_capacity(layers);
        let mut fan_in = input;
        for l in 0..layers {
            hidden.push(Dense::new(
                store,
                &format!("{name}.l{l}"),
                fan_in,
                width,
                Activation::Relu,
                rng,
            )?);
            fan_in = width;
        }
        let output = Dense::new(store, &format!("{name}.out"), fan_in, 1, Activation::Identity, rng)?;
        Ok(Self { hidden, output })
    }

    pub fn num_params(input: usize, width: usize, layers: usize) -> usize {
        super::Attention::num_params(input, width, layers)
    }

    pub fn input(&self) -> usize {
        self.hidden.first().unwrap_or(&self.output).input
    }

    pub fn forward(&self, store: &ParamStore, h: &[f64]) -> Result<HeadCache> {
        if h.len() != self.input() {
            return Err(Error::shape("head", &[self.input()], &[h.len()]));
        }
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let x = activations.last().map_or(h, Vec::as_slice);
            activations.push(layer.forward(store, x)?);
        }
        let x = activations.last().map_or(h, Vec::as_slice);
        let logit = self.output.forward(store, x)?[0];
        Ok(HeadCache {
            input: h.to_vec(),
            activations,
            logit,
            probability: sigmoid(logit),
        })
    }

    /// Backward from the gradient with respect to the logit; returns the
    /// gradient with respect to the head input.
    pub fn backward(&self, store: &ParamStore, grads: &mut Grads, cache: &HeadCache, d_logit: f64) -> Result<Vec<f64>> {
        if cache.activations.len() != self.hidden.len() {
            return Err(Error::State("head backward: cache from a different head".into()));
        }
        let x = cache.activations.last().unwrap_or(&cache.input);
        let mut upstream = vec![0.0; self.output.input];
        self.output
            .backward(store, grads, x, &[cache.logit], &[d_logit], &mut upstream)?;
        for (l, layer) in self.hidden.iter().enumerate().rev() {
            let x = if l == 0 {
                &cache.input
            } else {
                &cache.activations[l - 1]
            };
            let mut dx = vec![0.0; layer.input];
            layer.backward(store, grads, x, &cache.activations[l], &upstream, &mut dx)?;
            upstream = dx;
        }
        Ok(upstream)
    }
}
