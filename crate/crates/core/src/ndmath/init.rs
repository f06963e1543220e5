use super::{Rng, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Uniform {
        low: f64,
        high: f64,
    },
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)).
    Glorot,
    Zeros,
}

pub fn init(shape: &[usize], scheme: Init, rng: &mut Rng) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let (low, high) = match scheme {
        Init::Zeros => return Ok(Tensor::zeros(shape)),
        Init::Uniform { low, high } => {
            if !(low < high) {
                return Err(Error::Config(format!(
                    "uniform init needs low < high, got [{low}, {high}]"
                )));
            }
            (low, high)
        }
        Init::Glorot => {
            let bound = glorot_bound(shape);
            (-bound, bound)
        }
    };
    let data = (0..n).map(|_| rng.uniform(low, high)).collect();
    Tensor::new(shape.to_vec(), data)
}

pub(crate) fn glorot_bound(shape: &[usize]) -> f64 {
    let (fan_out, fan_in) = match shape {
        [r, c] => (*r, *c),
        [n] => (*n, *n),
        _ => {
            let n: usize = shape.iter().product();
            (n, n)
        }
    };
    (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
}
