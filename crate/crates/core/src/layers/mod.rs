//! Forward and backward passes for every block of the classifier.
//!
//! Layers hold [`ParamId`] handles into a shared [`ParamStore`]; forward
//! passes return a cache that the matching backward pass consumes, and
//! backward passes accumulate into a [`Grads`] buffer.

mod attention;
mod dropout;
mod gru;
mod head;
mod projection;

pub use attention::{softmax, Attention, AttentionCache};
pub use dropout::{spatial_dropout, DropoutMask};
pub use gru::{Gru, GruCache, GruStep};
pub use head::{Head, HeadCache};
pub use projection::{Projection, ProjectionCache};

use crate::error::{Error, Result};
use crate::ndmath::{
    gemm_nn_acc, gemm_nt_acc, gemm_tn_acc, gemv_acc, gemv_t_acc, init, outer_acc, sigmoid, Grads, Init, ParamId,
    ParamStore, Rng, Tensor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// Fully connected layer `y = act(W x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub act: Activation,
    pub input: usize,
    pub output: usize,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        act: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input == 0 || output == 0 {
            return Err(Error::Config(format!("{name}: layer widths must be positive")));
        }
        let w = store.add(format!("{name}.w"), init(&[output, input], Init::Glorot, rng)?)?;
        let b = store.add(format!("{name}.b"), Tensor::zeros(&[output]))?;
        Ok(Self {
            w,
            b,
            act,
            input,
            output,
        })
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input {
            return Err(Error::shape("dense forward", &[self.output, self.input], &[x.len()]));
        }
        let mut y = store.value(self.b).data().to_vec();
        gemv_acc(store.value(self.w).data(), self.input, x, &mut y);
        for v in &mut y {
            *v = self.act.apply(*v);
        }
        Ok(y)
    }

    /// Accumulates parameter gradients and adds `Wᵀ·δ` into `dx`.
    pub fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Grads,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        dx: &mut [f64],
    ) -> Result<()> {
        if x.len() != self.input || y.len() != self.output || dy.len() != self.output || dx.len() != self.input {
            return Err(Error::State(format!(
                "dense backward: cache shapes ({}, {}) do not match layer {}x{}",
                x.len(),
                y.len(),
                self.output,
                self.input
            )));
        }
        let delta: Vec<f64> = dy
            .iter()
            .zip(y)
            .map(|(&g, &out)| g * self.act.derivative_from_output(out))
            .collect();
        outer_acc(grads.get_mut(self.w).data_mut(), &delta, x);
        for (b, d) in grads.get_mut(self.b).data_mut().iter_mut().zip(&delta) {
            *b += d;
        }
        gemv_t_acc(store.value(self.w).data(), self.input, &delta, dx);
        Ok(())
    }

    /// Applies the layer to every row of a `k × input` sequence.
    pub fn forward_seq(&self, store: &ParamStore, x: &Tensor) -> Result<Tensor> {
        if x.shape().len() != 2 || x.cols() != self.input {
            return Err(Error::shape("dense forward", &[self.output, self.input], x.shape()));
        }
        let b = store.value(self.b).data();
        let mut y = Tensor::zeros(&[x.rows(), self.output]);
        for t in 0..x.rows() {
            y.row_mut(t).copy_from_slice(b);
        }
        gemm_nt_acc(store.value(self.w).data(), self.input, x.data(), y.data_mut());
        for v in y.data_mut() {
            *v = self.act.apply(*v);
        }
        Ok(y)
    }

    /// Sequence form of [`Dense::backward`]; adds into `dx` (`k × input`).
    pub fn backward_seq(
        &self,
        store: &ParamStore,
        grads: &mut Grads,
        x: &Tensor,
        y: &Tensor,
        dy: &Tensor,
        dx: &mut Tensor,
    ) -> Result<()> {
        let k = x.rows();
        if x.shape() != [k, self.input]
            || y.shape() != [k, self.output]
            || dy.shape() != y.shape()
            || dx.shape() != x.shape()
        {
            return Err(Error::State(format!(
                "dense backward: cache shapes {:?}, {:?} do not match layer {}x{}",
                x.shape(),
                y.shape(),
                self.output,
                self.input
            )));
        }
        let delta: Vec<f64> = dy
            .data()
            .iter()
            .zip(y.data())
            .map(|(&g, &out)| g * self.act.derivative_from_output(out))
            .collect();
        gemm_tn_acc(grads.get_mut(self.w).data_mut(), self.input, &delta, x.data());
        let db = grads.get_mut(self.b).data_mut();
        for row in delta.chunks_exact(self.output) {
            for (b, d) in db.iter_mut().zip(row) {
                *b += d;
            }
        }
        gemm_nn_acc(store.value(self.w).data(), self.input, &delta, dx.data_mut());
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::ndmath::{Rng, Tensor};

    pub fn random_tensor(shape: &[usize], scale: f64, rng: &mut Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform(-scale, scale)).collect()).unwrap()
    }

    pub fn weighted_sum(t: &Tensor, weights: &Tensor) -> f64 {
        t.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
    }
}
