//! Scores one tweet with every variant (untrained weights) and prints the
//! attention weights of the attentive ones.

use harassnet::embeddings::{build_vocab, EmbeddingMatrix};
use harassnet::{decide, Model, ModelConfig, Rng, VariantId};

fn main() -> harassnet::Result<()> {
    let text = "i will find you and slap you so hard";
    let vocab = build_vocab(&[text.split(' ').collect::<Vec<_>>()], 1)?;
    let emb = EmbeddingMatrix::random(vocab, 50, &mut Rng::new(7));

    for variant in VariantId::ALL {
        let cfg = ModelConfig {
            variant,
            embed_dim: 50,
            hidden: 32,
            proj_width: 32,
            head_width: 32,
            attn_hidden: 32,
            ..ModelConfig::default()
        };
        let model = Model::build(cfg, &emb)?;
        let ids = model.encode_text(text);
        let cache = model.forward(&ids, None)?;
        let s = cache.scores();
        println!(
            "{:<28} params {:>6}  scores [{:.3} {:.3} {:.3} {:.3}]  labels {:?}",
            variant.name(),
            model.num_params(),
            s.harassment,
            s.indirect,
            s.sexual,
            s.physical,
            decide(&s, 0.33).as_array()
        );
        for (i, alphas) in cache.alphas().iter().enumerate() {
            let shown: Vec<String> = alphas.iter().map(|a| format!("{a:.3}")).collect();
            println!("    attention {i}: {}", shown.join(" "));
        }
    }
    Ok(())
}
