//! The eight classifier variants, end-to-end scoring, the decision rule and
//! checkpoint (de)serialization.
//!
//! Every variant runs
//! `embedding → spatial dropout → [projection] → GRU → pooling → 4 heads`
//! and differs only in the optional projection and in the pooling step.
//!
//! Parameter count for vocabulary size `V` (defaults in brackets):
//!
//! ```text
//! embedding   V·d                                  [d = 200]
//! projection  p·d + p           projected only     [p = 128]
//! gru         3·(m·g + m·m + m) g = p if projected else d, [m = 128]
//! attention   A·(a·m + a + a + 1)  A = 0, 1 or 4   [a = 128, one hidden layer]
//! heads       4·(w·m + w + w + 1)                  [w = 128, one hidden layer]
//! ```

mod checkpoint;
mod decide;
mod variant;

pub use checkpoint::{load, save, FORMAT_VERSION, MAGIC};
pub use decide::{decide, ScoreVector, DEFAULT_THRESHOLD, TYPE_PRIORITY};
pub use variant::{Pooling, VariantId};

use serde::{Deserialize, Serialize};

use crate::dataset::Category;
use crate::embeddings::{self, EmbeddingMatrix, Vocab};
use crate::error::{Error, Result};
use crate::layers::{
    spatial_dropout, Attention, AttentionCache, DropoutMask, Gru, GruCache, Head, HeadCache, Projection,
    ProjectionCache,
};
use crate::ndmath::{Grads, ParamId, ParamStore, Rng, Tensor};
use crate::textprep::{self, CleanConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: VariantId,
    /// Embedding width `d`.
    pub embed_dim: usize,
    /// GRU state size `m`.
    pub hidden: usize,
    pub proj_width: usize,
    pub head_width: usize,
    pub head_layers: usize,
    pub attn_hidden: usize,
    pub attn_layers: usize,
    pub dropout_rate: f64,
    pub max_len: usize,
    pub seed: u64,
    pub freeze_embeddings: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: VariantId::MultiProjectedAttentionRNN,
            embed_dim: embeddings::DEFAULT_DIM,
            hidden: 128,
            proj_width: 128,
            head_width: 128,
            head_layers: 1,
            attn_hidden: 128,
            attn_layers: 1,
            dropout_rate: 0.2,
            max_len: embeddings::DEFAULT_MAX_LEN,
            seed: 1,
            freeze_embeddings: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("hidden", self.hidden),
            ("proj_width", self.proj_width),
            ("head_width", self.head_width),
            ("attn_hidden", self.attn_hidden),
            ("max_len", self.max_len),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Width of the GRU input.
    pub fn gru_input(&self) -> usize {
        if self.variant.projected() {
            self.proj_width
        } else {
            self.embed_dim
        }
    }

    /// Closed-form parameter count for a vocabulary of `vocab_size` tokens.
    pub fn param_count(&self, vocab_size: usize) -> usize {
        let projection = if self.variant.projected() {
            self.proj_width * self.embed_dim + self.proj_width
        } else {
            0
        };
        vocab_size * self.embed_dim
            + projection
            + Gru::num_params(self.gru_input(), self.hidden)
            + self.variant.attention_blocks() * Attention::num_params(self.hidden, self.attn_hidden, self.attn_layers)
            + 4 * Head::num_params(self.hidden, self.head_width, self.head_layers)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    embedding: ParamId,
    projection: Option<Projection>,
    gru: Gru,
    attention: Vec<Attention>,
    heads: Vec<Head>,
}

/// A built classifier: configuration, vocabulary and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    vocab: Vocab,
    params: ParamStore,
    layout: Layout,
}

#[derive(Clone, Debug)]
enum PoolCache {
    LastState,
    Average,
    Attention(Vec<AttentionCache>),
}

/// Everything a training forward pass keeps for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    ids: Vec<usize>,
    mask: DropoutMask,
    projection: Option<ProjectionCache>,
    gru: GruCache,
    pool: PoolCache,
    heads: Vec<HeadCache>,
}

impl ForwardCache {
    pub fn scores(&self) -> ScoreVector {
        ScoreVector::from_array(std::array::from_fn(|i| self.heads[i].probability))
    }

    pub fn logits(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.heads[i].logit)
    }

    /// Attention weights per attention block (empty for pooling variants).
    pub fn alphas(&self) -> Vec<Vec<f64>> {
        match &self.pool {
            PoolCache::Attention(caches) => caches.iter().map(|c| c.alphas.clone()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn states(&self) -> &Tensor {
        &self.gru.states
    }

    /// Per-head caches in head order.
    pub fn heads(&self) -> &[HeadCache] {
        &self.heads
    }
}

impl Model {
    /// Wires the configured variant. Initialisation draws from the
    /// `init` stream of `config.seed`.
    pub fn build(config: ModelConfig, embeddings: &EmbeddingMatrix) -> Result<Self> {
        config.validate()?;
        if embeddings.dim() != config.embed_dim {
            return Err(Error::Config(format!(
                "embedding width {} does not match embed_dim {}",
                embeddings.dim(),
                config.embed_dim
            )));
        }
        if embeddings.matrix.rows() != embeddings.vocab.len() {
            return Err(Error::Config("embedding rows do not match the vocabulary".into()));
        }
        let mut rng = Rng::new(config.seed).derive("init");
        let mut params = ParamStore::new();
        let embedding = params.add("embedding", embeddings.matrix.clone())?;
        params.set_trainable(embedding, !config.freeze_embeddings);
        let projection = if config.variant.projected() {
            Some(Projection::new(
                &mut params,
                "projection",
                config.embed_dim,
                config.proj_width,
                &mut rng,
            )?)
        } else {
            None
        };
        let gru = Gru::new(&mut params, "gru", config.gru_input(), config.hidden, &mut rng)?;
        let attention_names: &[&str] = match config.variant.pooling() {
            Pooling::SharedAttention => &["shared"],
            Pooling::MultiAttention => &["harassment", "indirect", "sexual", "physical"],
            _ => &[],
        };
        let attention = attention_names
            .iter()
            .map(|n| {
                Attention::new(
                    &mut params,
                    &format!("attention.{n}"),
                    config.hidden,
                    config.attn_hidden,
                    config.attn_layers,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let heads = Category::ALL
            .iter()
            .map(|c| {
                Head::new(
                    &mut params,
                    &format!("head.{}", c.name()),
                    config.hidden,
                    config.head_width,
                    config.head_layers,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            vocab: embeddings.vocab.clone(),
            params,
            layout: Layout {
                embedding,
                projection,
                gru,
                attention,
                heads,
            },
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.num_scalars()
    }

    pub fn attention_blocks(&self) -> usize {
        self.layout.attention.len()
    }

    pub fn embedding_id(&self) -> ParamId {
        self.layout.embedding
    }

    /// Replaces the parameters with `params`, which must have the same names
    /// and shapes in the same order.
    pub fn set_params(&mut self, params: ParamStore) -> Result<()> {
        let same = params.len() == self.params.len()
            && params
                .iter()
                .zip(self.params.iter())
                .all(|((n1, t1), (n2, t2))| n1 == n2 && t1.shape() == t2.shape());
        if !same {
            return Err(Error::State("parameter layout does not match the model".into()));
        }
        self.params = params;
        Ok(())
    }

    /// Encodes a raw text with the default cleaning rules.
    pub fn encode_text(&self, text: &str) -> Vec<usize> {
        let tokens = textprep::preprocess(text, &CleanConfig::default());
        embeddings::encode(&tokens, &self.vocab, self.config.max_len)
    }

    /// Inference-mode probabilities for one index sequence.
    pub fn score(&self, ids: &[usize]) -> Result<ScoreVector> {
        Ok(self.forward_with(&self.params, ids, None)?.scores())
    }

    pub fn score_text(&self, text: &str) -> Result<ScoreVector> {
        self.score(&self.encode_text(text))
    }

    /// Forward pass with cache. Dropout is active iff `dropout_rng` is given.
    pub fn forward(&self, ids: &[usize], dropout_rng: Option<&mut Rng>) -> Result<ForwardCache> {
        self.forward_with(&self.params, ids, dropout_rng)
    }

    /// Forward pass reading parameters from `store` instead of the model's
    /// own, which lets a gradient checker perturb a copy.
    pub fn forward_with(
        &self,
        store: &ParamStore,
        ids: &[usize],
        dropout_rng: Option<&mut Rng>,
    ) -> Result<ForwardCache> {
        if ids.is_empty() {
            return Err(Error::Input("cannot score an empty index sequence".into()));
        }
        if ids.len() > self.config.max_len {
            return Err(Error::Input(format!(
                "sequence length {} exceeds max_len {}",
                ids.len(),
                self.config.max_len
            )));
        }
        let table = store.value(self.layout.embedding);
        let d = self.config.embed_dim;
        let mut seq = Tensor::zeros(&[ids.len(), d]);
        for (t, &id) in ids.iter().enumerate() {
            if id >= table.rows() {
                return Err(Error::Input(format!(
                    "token index {id} outside vocabulary of {}",
                    table.rows()
                )));
            }
            seq.row_mut(t).copy_from_slice(table.row(id));
        }
        let (seq, mask) = match dropout_rng {
            Some(rng) => spatial_dropout(&seq, self.config.dropout_rate, rng, true)?,
            None => (seq, DropoutMask(None)),
        };
        let (gru_in, projection) = match &self.layout.projection {
            Some(p) => {
                let cache = p.forward(store, &seq)?;
                (cache.output.clone(), Some(cache))
            }
            None => (seq, None),
        };
        let gru = self.layout.gru.forward(store, &gru_in, None)?;
        let states = &gru.states;
        let k = states.rows();
        let (pool, contexts): (PoolCache, Vec<Vec<f64>>) = match self.config.variant.pooling() {
            Pooling::LastState => (PoolCache::LastState, vec![states.row(k - 1).to_vec()]),
            Pooling::Average => {
                let mut mean = vec![0.0; states.cols()];
                for t in 0..k {
                    for (m, v) in mean.iter_mut().zip(states.row(t)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= k as f64);
                (PoolCache::Average, vec![mean])
            }
            Pooling::SharedAttention | Pooling::MultiAttention => {
                let caches = self
                    .layout
                    .attention
                    .iter()
                    .map(|a| a.forward(store, states))
                    .collect::<Result<Vec<_>>>()?;
                let contexts = caches.iter().map(|c| c.h_sum.clone()).collect();
                (PoolCache::Attention(caches), contexts)
            }
        };
        let heads = self
            .layout
            .heads
            .iter()
            .enumerate()
            .map(|(i, h)| h.forward(store, &contexts[i.min(contexts.len() - 1)]))
            .collect::<Result<Vec<_>>>()?;
        Ok(ForwardCache {
            ids: ids.to_vec(),
            mask,
            projection,
            gru,
            pool,
            heads,
        })
    }

    /// Accumulates parameter gradients given the loss gradient with respect
    /// to each head's logit (head order: harassment, indirect, sexual,
    /// physical).
    pub fn backward(&self, cache: &ForwardCache, d_logits: [f64; 4], grads: &mut Grads) -> Result<()> {
        self.backward_with(&self.params, cache, d_logits, grads)
    }

    pub fn backward_with(
        &self,
        store: &ParamStore,
        cache: &ForwardCache,
        d_logits: [f64; 4],
        grads: &mut Grads,
    ) -> Result<()> {
        if cache.heads.len() != 4 || grads.len() != store.len() {
            return Err(Error::State(
                "backward called with a foreign cache or gradient buffer".into(),
            ));
        }
        let m = self.config.hidden;
        let mut d_contexts: Vec<Vec<f64>> = Vec::with_capacity(4);
        for (i, head) in self.layout.heads.iter().enumerate() {
            d_contexts.push(head.backward(store, grads, &cache.heads[i], d_logits[i])?);
        }
        let states = &cache.gru.states;
        let k = states.rows();
        let mut d_states = Tensor::zeros(&[k, m]);
        match &cache.pool {
            PoolCache::LastState | PoolCache::Average => {
                let mut d_pooled = vec![0.0; m];
                for d in &d_contexts {
                    for (a, b) in d_pooled.iter_mut().zip(d) {
                        *a += b;
                    }
                }
                if matches!(cache.pool, PoolCache::LastState) {
                    d_states.row_mut(k - 1).copy_from_slice(&d_pooled);
                } else {
                    let inv = 1.0 / k as f64;
                    for t in 0..k {
                        for (a, b) in d_states.row_mut(t).iter_mut().zip(&d_pooled) {
                            *a = b * inv;
                        }
                    }
                }
            }
            PoolCache::Attention(caches) => {
                let attention = &self.layout.attention;
                if caches.len() != attention.len() {
                    return Err(Error::State("attention cache count does not match the model".into()));
                }
                if attention.len() == 1 {
                    let mut d_sum = vec![0.0; m];
                    for d in &d_contexts {
                        for (a, b) in d_sum.iter_mut().zip(d) {
                            *a += b;
                        }
                    }
                    d_states = attention[0].backward(store, grads, states, &caches[0], &d_sum)?;
                } else {
                    for (i, a) in attention.iter().enumerate() {
                        let d = a.backward(store, grads, states, &caches[i], &d_contexts[i])?;
                        for (x, y) in d_states.data_mut().iter_mut().zip(d.data()) {
                            *x += y;
                        }
                    }
                }
            }
        }
        let (d_gru_in, _) = self.layout.gru.backward(store, grads, &cache.gru, &d_states)?;
        let d_dropped = match (&self.layout.projection, &cache.projection) {
            (Some(p), Some(pc)) => p.backward(store, grads, pc, &d_gru_in)?,
            (None, None) => d_gru_in,
            _ => return Err(Error::State("projection cache does not match the model".into())),
        };
        if store.is_trainable(self.layout.embedding) {
            let d_emb = cache.mask.backward(&d_dropped)?;
            let table = grads.get_mut(self.layout.embedding);
            for (t, &id) in cache.ids.iter().enumerate() {
                for (g, v) in table.row_mut(id).iter_mut().zip(d_emb.row(t)) {
                    *g += v;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_embeddings(vocab_size: usize, dim: usize) -> EmbeddingMatrix {
        let vocab = Vocab::from_tokens((0..vocab_size - 2).map(|i| format!("w{i}"))).unwrap();
        EmbeddingMatrix::random(vocab, dim, &mut Rng::new(99))
    }

    fn small(variant: VariantId) -> ModelConfig {
        ModelConfig {
            variant,
            embed_dim: 6,
            hidden: 5,
            proj_width: 4,
            head_width: 3,
            attn_hidden: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn param_count_formula_matches_every_variant() {
        let emb = tiny_embeddings(12, 6);
        for v in VariantId::ALL {
            let cfg = small(v);
            let model = Model::build(cfg.clone(), &emb).unwrap();
            assert_eq!(model.num_params(), cfg.param_count(12), "{v}");
        }
    }

    #[test]
    fn attention_block_counts() {
        let emb = tiny_embeddings(12, 6);
        let m = Model::build(small(VariantId::MultiAttentionRNN), &emb).unwrap();
        assert_eq!(m.attention_blocks(), 4);
        let m = Model::build(small(VariantId::AttentionRNN), &emb).unwrap();
        assert_eq!(m.attention_blocks(), 1);
        let m = Model::build(small(VariantId::AvgRNN), &emb).unwrap();
        assert_eq!(m.attention_blocks(), 0);
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        let emb = tiny_embeddings(12, 6);
        let a = Model::build(small(VariantId::MultiProjectedAttentionRNN), &emb).unwrap();
        let b = Model::build(small(VariantId::MultiProjectedAttentionRNN), &emb).unwrap();
        assert_eq!(a.params(), b.params());
        let mut cfg = small(VariantId::MultiProjectedAttentionRNN);
        cfg.seed = 2;
        let c = Model::build(cfg, &emb).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn embedding_width_mismatch_is_config_error() {
        let emb = tiny_embeddings(12, 7);
        assert!(matches!(
            Model::build(small(VariantId::AvgRNN), &emb),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zeroed_output_layers_score_one_half() {
        let emb = tiny_embeddings(12, 6);
        for v in VariantId::ALL {
            let mut m = Model::build(small(v), &emb).unwrap();
            for c in Category::ALL {
                for suffix in ["out.w", "out.b"] {
                    m.params_mut()
                        .get_mut(&format!("head.{}.{suffix}", c.name()))
                        .unwrap()
                        .fill(0.0);
                }
            }
            let s = m.score(&[2, 3, 4]).unwrap();
            assert_eq!(s.as_array(), [0.5; 4]);
        }
    }

    #[test]
    fn scoring_is_deterministic_and_rejects_bad_input() {
        let emb = tiny_embeddings(12, 6);
        let m = Model::build(small(VariantId::ProjectedAttentionRNN), &emb).unwrap();
        assert_eq!(m.score(&[5, 1, 7]).unwrap(), m.score(&[5, 1, 7]).unwrap());
        assert!(m.score(&[]).is_err());
        assert!(m.score(&[12]).is_err());
        assert!(m.score(&vec![2; 71]).is_err());
    }

    #[test]
    fn frozen_embeddings_get_no_gradient() {
        let emb = tiny_embeddings(12, 6);
        let mut cfg = small(VariantId::AvgRNN);
        cfg.freeze_embeddings = true;
        let m = Model::build(cfg, &emb).unwrap();
        let cache = m.forward(&[2, 3], None).unwrap();
        let mut grads = m.params().zero_grads();
        m.backward(&cache, [1.0, 0.5, -0.5, 0.2], &mut grads).unwrap();
        assert!(grads.get(m.embedding_id()).data().iter().all(|&v| v == 0.0));
        assert!(!grads.is_zero());
    }

    #[test]
    fn scalar_model_matches_layer_by_layer_trace() {
        // m = d = every width = 1, LastStateRNN with hand-set weights
        let vocab = Vocab::from_tokens(["a"]).unwrap();
        let mut matrix = Tensor::zeros(&[3, 1]);
        matrix.row_mut(2)[0] = 0.8;
        let emb = EmbeddingMatrix {
            vocab,
            matrix,
            found: 1,
        };
        let cfg = ModelConfig {
            variant: VariantId::LastStateRNN,
            embed_dim: 1,
            hidden: 1,
            proj_width: 1,
            head_width: 1,
            attn_hidden: 1,
            ..ModelConfig::default()
        };
        let mut m = Model::build(cfg, &emb).unwrap();
        let set = |m: &mut Model, name: &str, v: f64| m.params_mut().get_mut(name).unwrap().fill(v);
        for (name, v) in [
            ("gru.w_z", 0.5),
            ("gru.u_z", -0.3),
            ("gru.b_z", 0.1),
            ("gru.w_r", 0.7),
            ("gru.u_r", 0.2),
            ("gru.b_r", -0.1),
            ("gru.w_h", 1.2),
            ("gru.u_h", 0.9),
            ("gru.b_h", 0.05),
        ] {
            set(&mut m, name, v);
        }
        for (i, c) in Category::ALL.iter().enumerate() {
            set(&mut m, &format!("head.{}.l0.w", c.name()), 1.0 + i as f64);
            set(&mut m, &format!("head.{}.l0.b", c.name()), 0.1);
            set(&mut m, &format!("head.{}.out.w", c.name()), 2.0 - i as f64);
            set(&mut m, &format!("head.{}.out.b", c.name()), -0.2);
        }
        let scores = m.score(&[2, 2]).unwrap();

        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut h = 0.0f64;
        for _ in 0..2 {
            let x = 0.8;
            let z = sig(0.5 * x - 0.3 * h + 0.1);
            let r = sig(0.7 * x + 0.2 * h - 0.1);
            let c = (1.2 * x + 0.9 * r * h + 0.05).tanh();
            h = (1.0 - z) * h + z * c;
        }
        for i in 0..4 {
            let hidden = ((1.0 + i as f64) * h + 0.1).max(0.0);
            let p = sig((2.0 - i as f64) * hidden - 0.2);
            assert!((scores.as_array()[i] - p).abs() < 1e-14, "head {i}");
        }
    }
}
