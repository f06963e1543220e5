use super::{Activation, Dense};
use crate::error::{Error, Result};
use crate::ndmath::{Grads, ParamStore, Rng, Tensor};

/// Classification-specific attention: an MLP scores every hidden state, the
/// scores are softmax-normalised into weights, and the context is the
/// weighted sum of states. There is no query; the MLP alone decides which
/// positions carry evidence for its category.
#[derive(Clone, Debug, PartialEq)]
pub struct Attention {
    pub hidden: Vec<Dense>,
    pub score: Dense,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    /// Per hidden layer, its `k × width` activations.
    pub activations: Vec<Tensor>,
    pub scores: Vec<f64>,
    pub alphas: Vec<f64>,
    pub h_sum: Vec<f64>,
}

impl Attention {
    /// `layers` tanh layers of width `width`, then a scalar scoring layer.
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
                Activation::Tanh,
                rng,
            )?);
            fan_in = width;
        }
        let score = Dense::new(store, &format!("{name}.score"), fan_in, 1, Activation::Identity, rng)?;
        Ok(Self { hidden, score })
    }

    pub fn input(&self) -> usize {
        self.hidden.first().unwrap_or(&self.score).input
    }

    pub fn num_params(input: usize, width: usize, layers: usize) -> usize {
        let mut n = 0;
        let mut fan_in = input;
        for _ in 0..layers {
            n += width * fan_in + width;
            fan_in = width;
        }
        n + fan_in + 1
    }

    pub fn forward(&self, store: &ParamStore, states: &Tensor) -> Result<AttentionCache> {
        if states.shape().len() != 2 || states.cols() != self.input() {
            return Err(Error::shape("attention", &[self.input()], states.shape()));
        }
        let k = states.rows();
        if k == 0 {
            return Err(Error::Input("attention needs at least one state".into()));
        }
        let mut activations: Vec<Tensor> = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let y = layer.forward_seq(store, activations.last().unwrap_or(states))?;
            activations.push(y);
        }
        let scores = self
            .score
            .forward_seq(store, activations.last().unwrap_or(states))?
            .into_data();
        let alphas = softmax(&scores);
        let mut h_sum = vec![0.0; states.cols()];
        for (t, &a) in alphas.iter().enumerate() {
            for (s, h) in h_sum.iter_mut().zip(states.row(t)) {
                *s += a * h;
            }
        }
        Ok(AttentionCache {
            activations,
            scores,
            alphas,
            h_sum,
        })
    }

    /// Returns the gradient with respect to `states`.
    pub fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Grads,
        states: &Tensor,
        cache: &AttentionCache,
        d_sum: &[f64],
    ) -> Result<Tensor> {
        let k = states.rows();
        if cache.alphas.len() != k || d_sum.len() != states.cols() {
            return Err(Error::State(
                "attention backward: gradient does not match forward cache".into(),
            ));
        }
        let mut d_states = Tensor::zeros(states.shape());
        let d_alpha: Vec<f64> = (0..k)
            .map(|t| states.row(t).iter().zip(d_sum).map(|(h, g)| h * g).sum())
            .collect();
        let mean: f64 = cache.alphas.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
        let mut d_scores = Tensor::zeros(&[k, 1]);
        for t in 0..k {
            let alpha = cache.alphas[t];
            for (d, g) in d_states.row_mut(t).iter_mut().zip(d_sum) {
                *d += alpha * g;
            }
            d_scores.data_mut()[t] = alpha * (d_alpha[t] - mean);
        }
        let scores = Tensor::matrix(k, 1, cache.scores.clone())?;
        let mut upstream = Tensor::zeros(&[k, self.score.input]);
        let score_in = cache.activations.last().unwrap_or(states);
        self.score
            .backward_seq(store, grads, score_in, &scores, &d_scores, &mut upstream)?;
        for (l, layer) in self.hidden.iter().enumerate().rev() {
            let x = if l == 0 { states } else { &cache.activations[l - 1] };
            let mut dx = Tensor::zeros(x.shape());
            layer.backward_seq(store, grads, x, &cache.activations[l], &upstream, &mut dx)?;
            upstream = dx;
        }
        for (d, u) in d_states.data_mut().iter_mut().zip(upstream.data()) {
            *d += u;
        }
        Ok(d_states)
    }
}

/// Max-subtracted softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
