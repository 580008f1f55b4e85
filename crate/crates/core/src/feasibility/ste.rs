//! Straight-through pairing of hard decisions with soft surrogates.
//!
//! No gradients are computed here. The forward value is the hard decision;
//! a derivative consumer reads the soft array and its local slopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::logits::{sigmoid, softmax};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteOutput {
    /// Value used in the forward pass: `hard + (soft - soft)`.
    pub forward: Vec<f64>,
    /// Soft surrogate handed to derivative consumers.
    pub soft: Vec<f64>,
}

pub fn ste_wrap(hard: &[f64], soft: &[f64]) -> Result<SteOutput> {
    if hard.len() != soft.len() {
        return Err(Error::Dimension(format!("hard has {} values, soft has {}", hard.len(), soft.len())));
    }
    let forward = hard.iter().zip(soft).map(|(&h, &g)| h + (g - g)).collect();
    Ok(SteOutput { forward, soft: soft.to_vec() })
}

/// Slope of the sigmoid.
pub fn sigmoid_slope(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}

/// Soft synchronization channel: elementwise sigmoid.
pub fn soft_sync(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&x| sigmoid(x)).collect()
}

/// Soft root channel: softmax over each row of `r` logits.
pub fn soft_root(z: &[f64], r: usize) -> Vec<f64> {
    z.chunks(r.max(1)).flat_map(softmax).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_is_hard() {
        let z = [-3.0, -0.1, 0.0, 0.4, 7.0];
        let hard: Vec<f64> = z.iter().map(|&x| (x > 0.0) as i32 as f64).collect();
        let out = ste_wrap(&hard, &soft_sync(&z)).unwrap();
        assert_eq!(out.forward, hard);
        let same = ste_wrap(&hard, &hard).unwrap();
        assert_eq!(same.forward, hard);
    }

    #[test]
    fn slope_matches_finite_difference() {
        for z in [-4.0, -1.0, 0.0, 0.3, 2.5] {
            let h = 1e-5;
            let fd = (sigmoid(z + h) - sigmoid(z - h)) / (2.0 * h);
            assert!((fd - sigmoid_slope(z)).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_shapes_fail() {
        assert!(ste_wrap(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn soft_root_rows_sum_to_one() {
        let s = soft_root(&[0.0, 1.0, 2.0, 5.0, 5.0, 5.0], 3);
        assert!((s[..3].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((s[3] - 1.0 / 3.0).abs() < 1e-15);
    }
}
