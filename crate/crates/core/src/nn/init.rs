use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::tensor::Tensor;

/// Xavier/Glorot uniform weights for a `[fan_out, fan_in]` matrix, drawn from
/// `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<R: Rng + ?Sized>(fan_out: usize, fan_in: usize, rng: &mut R) -> Tensor {
    let bound = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    let data: Vec<f64> = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::from_vec(fan_out, fan_in, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn bounds_and_variance() {
        let mut rng = substream(3, Stream::Init);
        let (fan_out, fan_in) = (250, 400);
        let w = xavier_uniform(fan_out, fan_in, &mut rng);
        let bound = math::sqrt(6.0 / 650.0);
        assert!(w.data().iter().all(|x| x.abs() <= bound));
        let mean = w.sum() / w.len() as f64;
        let var = w.data().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / w.len() as f64;
        let expected = 2.0 / 650.0;
        assert!((var - expected).abs() < 0.1 * expected, "var {var} vs {expected}");
    }

    #[test]
    fn reproducible() {
        let a = xavier_uniform(4, 5, &mut substream(9, Stream::Init));
        let b = xavier_uniform(4, 5, &mut substream(9, Stream::Init));
        assert_eq!(a, b);
    }
}
