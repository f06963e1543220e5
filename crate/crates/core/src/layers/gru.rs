use crate::error::{Error, Result};
use crate::ndmath::{
    gemm_nn_acc, gemm_nt_acc, gemm_tn_acc, gemv_acc, init, sigmoid, Grads, Init, ParamId, ParamStore, Rng, Tensor,
};

/// Single-layer unidirectional GRU:
///
/// ```text
/// z_t  = σ(W_z x_t + U_z h_{t-1} + b_z)
/// r_t  = σ(W_r x_t + U_r h_{t-1} + b_r)
/// h'_t = tanh(W_h x_t + U_h (r_t ⊙ h_{t-1}) + b_h)
/// h_t  = (1 − z_t) ⊙ h_{t-1} + z_t ⊙ h'_t
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct Gru {
    pub w_z: ParamId,
    pub u_z: ParamId,
    pub b_z: ParamId,
    pub w_r: ParamId,
    pub u_r: ParamId,
    pub b_r: ParamId,
    pub w_h: ParamId,
    pub u_h: ParamId,
    pub b_h: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Values of one step needed by the backward pass.
#[derive(Clone, Debug)]
pub struct GruStep {
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub candidate: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GruCache {
    pub input: Tensor,
    pub steps: Vec<GruStep>,
    /// `k × m`, row t is h_{t+1}.
    pub states: Tensor,
}

impl Gru {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::Config(format!("{name}: GRU sizes must be positive")));
        }
        let w = |store: &mut ParamStore, gate: &str, rng: &mut Rng| -> Result<[ParamId; 3]> {
            Ok([
                store.add(format!("{name}.w_{gate}"), init(&[hidden, input], Init::Glorot, rng)?)?,
                store.add(format!("{name}.u_{gate}"), init(&[hidden, hidden], Init::Glorot, rng)?)?,
                store.add(format!("{name}.b_{gate}"), Tensor::zeros(&[hidden]))?,
            ])
        };
        let [w_z, u_z, b_z] = w(store, "z", rng)?;
        let [w_r, u_r, b_r] = w(store, "r", rng)?;
        let [w_h, u_h, b_h] = w(store, "h", rng)?;
        Ok(Self {
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
            input,
            hidden,
        })
    }

    /// Parameter count: `3·(m·d_in + m·m + m)`.
    pub fn num_params(input: usize, hidden: usize) -> usize {
        3 * (hidden * input + hidden * hidden + hidden)
    }

    /// `b + W x` for every row of `seq`.
    fn input_part(&self, store: &ParamStore, w: ParamId, b: ParamId, seq: &[f64]) -> Vec<f64> {
        let bias = store.value(b).data();
        let mut a: Vec<f64> = seq
            .chunks_exact(self.input)
            .flat_map(|_| bias.iter().copied())
            .collect();
        gemm_nt_acc(store.value(w).data(), self.input, seq, &mut a);
        a
    }

    /// One step given the input contributions `b + W x` of each gate.
    fn step(&self, store: &ParamStore, xz: &[f64], xr: &[f64], xh: &[f64], h_prev: &[f64]) -> (Vec<f64>, GruStep) {
        let m = self.hidden;
        let mut z = xz.to_vec();
        gemv_acc(store.value(self.u_z).data(), m, h_prev, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut r = xr.to_vec();
        gemv_acc(store.value(self.u_r).data(), m, h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let reset: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut candidate = xh.to_vec();
        gemv_acc(store.value(self.u_h).data(), m, &reset, &mut candidate);
        candidate.iter_mut().for_each(|v| *v = v.tanh());
        let h: Vec<f64> = (0..m).map(|i| (1.0 - z[i]) * h_prev[i] + z[i] * candidate[i]).collect();
        (
            h,
            GruStep {
                h_prev: h_prev.to_vec(),
                z,
                r,
                candidate,
            },
        )
    }

    pub fn cell(&self, store: &ParamStore, x: &[f64], h_prev: &[f64]) -> Result<(Vec<f64>, GruStep)> {
        if x.len() != self.input || h_prev.len() != self.hidden {
            return Err(Error::shape(
                "gru cell",
                &[self.input, self.hidden],
                &[x.len(), h_prev.len()],
            ));
        }
        let xz = self.input_part(store, self.w_z, self.b_z, x);
        let xr = self.input_part(store, self.w_r, self.b_r, x);
        let xh = self.input_part(store, self.w_h, self.b_h, x);
        Ok(self.step(store, &xz, &xr, &xh, h_prev))
    }

    /// Runs all `k` steps from `h0` (zeros when `None`).
    pub fn forward(&self, store: &ParamStore, seq: &Tensor, h0: Option<&[f64]>) -> Result<GruCache> {
        if seq.shape().len() != 2 || seq.cols() != self.input {
            return Err(Error::shape("gru forward", &[self.hidden, self.input], seq.shape()));
        }
        let k = seq.rows();
        if k == 0 {
            return Err(Error::Input("GRU needs at least one time step".into()));
        }
        let mut h = match h0 {
            Some(h0) if h0.len() != self.hidden => {
                return Err(Error::shape("gru h0", &[self.hidden], &[h0.len()]));
            }
            Some(h0) => h0.to_vec(),
            None => vec![0.0; self.hidden],
        };
        let m = self.hidden;
        let xz = self.input_part(store, self.w_z, self.b_z, seq.data());
        let xr = self.input_part(store, self.w_r, self.b_r, seq.data());
        let xh = self.input_part(store, self.w_h, self.b_h, seq.data());
        let mut states = Tensor::zeros(&[k, m]);
        let mut steps = Vec::with_capacity(k);
        for t in 0..k {
            let span = t * m..(t + 1) * m;
            let (next, step) = self.step(store, &xz[span.clone()], &xr[span.clone()], &xh[span], &h);
            states.row_mut(t).copy_from_slice(&next);
            steps.push(step);
            h = next;
        }
        Ok(GruCache {
            input: seq.clone(),
            steps,
            states,
        })
    }

    /// Backpropagation through time. `d_states` holds the loss gradient with
    /// respect to each emitted state. Returns gradients for the input
    /// sequence and for `h0`.
    pub fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Grads,
        cache: &GruCache,
        d_states: &Tensor,
    ) -> Result<(Tensor, Vec<f64>)> {
        if d_states.shape() != cache.states.shape() || cache.steps.len() != cache.states.rows() {
            return Err(Error::State(
                "gru backward: gradient does not match forward cache".into(),
            ));
        }
        let m = self.hidden;
        let d_in = self.input;
        let k = cache.steps.len();
        // Transposed recurrent weights turn each per-step `Uᵀδ` into dot products.
        let transpose = |id: ParamId| {
            let u = store.value(id).data();
            let mut t = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    t[j * m + i] = u[i * m + j];
                }
            }
            t
        };
        let (ut_z, ut_r, ut_h) = (transpose(self.u_z), transpose(self.u_r), transpose(self.u_h));
        // Per-step gate deltas and the vectors they multiply, batched into
        // weight gradients after the recurrence.
        let mut da_z = vec![0.0; k * m];
        let mut da_r = vec![0.0; k * m];
        let mut da_h = vec![0.0; k * m];
        let mut resets = vec![0.0; k * m];
        let mut h_prevs = vec![0.0; k * m];
        let mut dh_next = vec![0.0; m];
        for t in (0..k).rev() {
            let step = &cache.steps[t];
            let hp = &step.h_prev;
            let span = t * m..(t + 1) * m;
            let (dz, dh_) = (&mut da_z[span.clone()], &mut da_h[span.clone()]);
            let mut dhp = vec![0.0; m];
            for i in 0..m {
                let dh = d_states.row(t)[i] + dh_next[i];
                let (z, c) = (step.z[i], step.candidate[i]);
                dz[i] = dh * (c - hp[i]) * z * (1.0 - z);
                dh_[i] = dh * z * (1.0 - c * c);
                dhp[i] = dh * (1.0 - z);
                resets[t * m + i] = step.r[i] * hp[i];
            }
            h_prevs[span.clone()].copy_from_slice(hp);
            let mut d_reset = vec![0.0; m];
            gemv_acc(&ut_h, m, dh_, &mut d_reset);
            let dr = &mut da_r[span];
            for i in 0..m {
                let r = step.r[i];
                dr[i] = d_reset[i] * hp[i] * r * (1.0 - r);
                dhp[i] += d_reset[i] * r;
            }
            gemv_acc(&ut_z, m, dz, &mut dhp);
            gemv_acc(&ut_r, m, dr, &mut dhp);
            dh_next = dhp;
        }
        let x = cache.input.data();
        let mut dx_seq = Tensor::zeros(&[k, d_in]);
        for (w, u, b, delta, rec) in [
            (self.w_h, self.u_h, self.b_h, &da_h, &resets),
            (self.w_z, self.u_z, self.b_z, &da_z, &h_prevs),
            (self.w_r, self.u_r, self.b_r, &da_r, &h_prevs),
        ] {
            gemm_tn_acc(grads.get_mut(w).data_mut(), d_in, delta, x);
            gemm_tn_acc(grads.get_mut(u).data_mut(), m, delta, rec);
            let db = grads.get_mut(b).data_mut();
            for row in delta.chunks_exact(m) {
                add_into(db, row);
            }
            gemm_nn_acc(store.value(w).data(), d_in, delta, dx_seq.data_mut());
        }
        Ok((dx_seq, dh_next))
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
