use crate::error::{Error, Result};
use crate::ndmath::{Rng, Tensor};

/// Per-dimension multipliers drawn by [`spatial_dropout`]; `None` when the
/// pass was an identity.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask(pub Option<Vec<f64>>);

impl DropoutMask {
    pub fn backward(&self, upstream: &Tensor) -> Result<Tensor> {
        let Some(mask) = &self.0 else {
            return Ok(upstream.clone());
        };
        if upstream.cols() != mask.len() {
            return Err(Error::State(format!(
                "dropout mask has width {} but upstream gradient has {}",
                mask.len(),
                upstream.cols()
            )));
        }
        let mut out = upstream.clone();
        apply(&mut out, mask);
        Ok(out)
    }
}

fn apply(seq: &mut Tensor, mask: &[f64]) {
    for t in 0..seq.rows() {
        for (v, m) in seq.row_mut(t).iter_mut().zip(mask) {
            *v *= m;
        }
    }
}

/// Drops whole embedding dimensions: one Bernoulli(1−rate) mask over the `d`
/// columns is shared by every position, and survivors are scaled by
/// `1/(1−rate)`. Identity when not training or when `rate == 0`.
pub fn spatial_dropout(seq: &Tensor, rate: f64, rng: &mut Rng, training: bool) -> Result<(Tensor, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if !training || rate == 0.0 {
        return Ok((seq.clone(), DropoutMask(None)));
    }
    let keep = 1.0 - rate;
    let mask: Vec<f64> = (0..seq.cols())
        .map(|_| if rng.bernoulli(keep) { 1.0 / keep } else { 0.0 })
        .collect();
    let mut out = seq.clone();
    apply(&mut out, &mask);
    Ok((out, DropoutMask(Some(mask))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::testutil::random_tensor;

    #[test]
    fn inference_and_zero_rate_are_identity() {
        let mut rng = Rng::new(1);
        let x = random_tensor(&[5, 7], 1.0, &mut rng);
        let (y, m) = spatial_dropout(&x, 0.5, &mut rng, false).unwrap();
        assert_eq!(y, x);
        assert_eq!(m, DropoutMask(None));
        let (y, _) = spatial_dropout(&x, 0.0, &mut rng, true).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn rate_out_of_range_is_config_error() {
        let x = Tensor::zeros(&[1, 2]);
        assert!(matches!(
            spatial_dropout(&x, 1.0, &mut Rng::new(0), true),
            Err(Error::Config(_))
        ));
        assert!(spatial_dropout(&x, -0.1, &mut Rng::new(0), true).is_err());
    }

    #[test]
    fn dropped_columns_are_zero_at_every_position() {
        let mut rng = Rng::new(3);
        for _ in 0..50 {
            let x = Tensor::filled(&[6, 16], 1.0);
            let (y, mask) = spatial_dropout(&x, 0.5, &mut rng, true).unwrap();
            let mask = mask.0.unwrap();
            for j in 0..16 {
                let col: Vec<f64> = (0..6).map(|t| y.row(t)[j]).collect();
                assert!(col.iter().all(|&v| v == col[0]));
                assert_eq!(col[0], mask[j]);
                assert!(col[0] == 0.0 || col[0] == 2.0);
            }
        }
    }

    #[test]
    fn expectation_is_preserved() {
        // Monte-Carlo: E[mask_j] = 1, so the mean output matches the input mean.
        let mut rng = Rng::new(17);
        let x = random_tensor(&[4, 8], 1.0, &mut rng);
        let x = Tensor::new(x.shape().to_vec(), x.data().iter().map(|v| v.abs() + 0.5).collect()).unwrap();
        let input_mean: f64 = x.data().iter().sum::<f64>() / x.len() as f64;
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let (y, _) = spatial_dropout(&x, 0.5, &mut rng, true).unwrap();
            acc += y.data().iter().sum::<f64>() / y.len() as f64;
        }
        let mean = acc / trials as f64;
        assert!((mean - input_mean).abs() / input_mean < 0.02, "{mean} vs {input_mean}");
    }

    #[test]
    fn backward_applies_the_same_mask() {
        let mut rng = Rng::new(5);
        let x = Tensor::filled(&[3, 10], 1.0);
        let (y, mask) = spatial_dropout(&x, 0.3, &mut rng, true).unwrap();
        assert_eq!(mask.backward(&x).unwrap(), y);
        assert!(mask.backward(&Tensor::zeros(&[3, 4])).is_err());
    }
}
