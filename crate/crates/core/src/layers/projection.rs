use super::{Activation, Dense};
use crate::error::{Error, Result};
use crate::ndmath::{Grads, ParamStore, Rng, Tensor};

/// Per-position `tanh(W x_t + b)` mapping embeddings into the task space.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub dense: Dense,
}

#[derive(Clone, Debug)]
pub struct ProjectionCache {
    pub input: Tensor,
    pub output: Tensor,
}

impl Projection {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, width: usize, rng: &mut Rng) -> Result<Self> {
        Ok(Self {
            dense: Dense::new(store, name, input, width, Activation::Tanh, rng)?,
        })
    }

    pub fn width(&self) -> usize {
        self.dense.output
    }

    pub fn forward(&self, store: &ParamStore, seq: &Tensor) -> Result<ProjectionCache> {
        if seq.shape().len() != 2 || seq.cols() != self.dense.input {
            return Err(Error::shape(
                "projection",
                &[self.dense.output, self.dense.input],
                seq.shape(),
            ));
        }
        Ok(ProjectionCache {
            input: seq.clone(),
            output: self.dense.forward_seq(store, seq)?,
        })
    }

    pub fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Grads,
        cache: &ProjectionCache,
        d_out: &Tensor,
    ) -> Result<Tensor> {
        if d_out.shape() != cache.output.shape() {
            return Err(Error::State(
                "projection backward: gradient does not match cache".into(),
            ));
        }
        let mut d_in = Tensor::zeros(cache.input.shape());
        self.dense
            .backward_seq(store, grads, &cache.input, &cache.output, d_out, &mut d_in)?;
        Ok(d_in)
    }
}
