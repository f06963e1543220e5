//! Compares backpropagated gradients with central differences for a small
//! model of each variant.

use harassnet::dataset::LabelVector;
use harassnet::embeddings::{EmbeddingMatrix, Vocab};
use harassnet::ndmath::{grad_check, ParamStore};
use harassnet::training::example_loss;
use harassnet::{Model, ModelConfig, Rng, VariantId};

fn main() -> harassnet::Result<()> {
    let vocab = Vocab::from_tokens((0..18).map(|i| format!("w{i}")))?;
    let emb = EmbeddingMatrix::random(vocab, 8, &mut Rng::new(3));
    let ids = [2usize, 5, 7, 11, 3];
    let labels = LabelVector::new(true, false, false, true);

    for variant in VariantId::ALL {
        let cfg = ModelConfig {
            variant,
            embed_dim: 8,
            hidden: 8,
            proj_width: 8,
            head_width: 8,
            attn_hidden: 8,
            ..ModelConfig::default()
        };
        let model = Model::build(cfg, &emb)?;
        let cache = model.forward(&ids, None)?;
        let (_, d_logits) = example_loss(&cache.scores(), &labels);
        let mut grads = model.params().zero_grads();
        model.backward(&cache, d_logits, &mut grads)?;

        let loss = |s: &ParamStore| Ok(example_loss(&model.forward_with(s, &ids, None)?.scores(), &labels).0);
        let report = grad_check(loss, &mut model.params().clone(), &grads, 1e-4)?;
        println!(
            "{:<28} {:>5} scalars  max rel error {:.2e}",
            variant.name(),
            report.checked,
            report.max_rel_error
        );
    }
    Ok(())
}
