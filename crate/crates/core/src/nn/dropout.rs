//! Inverted dropout: kept units are rescaled by `1/(1-rate)` during training
//! so inference is the identity.

use rand::Rng;

use super::NnError;

pub fn check_rate(rate: f64) -> Result<(), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::Config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Mask of `0` or `1/(1-rate)` entries. A zero rate yields all ones without
/// touching the generator.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    if rate <= 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub fn dropout<R: Rng + ?Sized>(input: &[f64], rate: f64, training: bool, rng: &mut R) -> Result<Vec<f64>, NnError> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(input.to_vec());
    }
    let mask = dropout_mask(input.len(), rate, rng);
    Ok(input.iter().zip(&mask).map(|(x, m)| x * m).collect())
}
