use super::layers::softmax;
use super::Tensor;
use crate::{Error, Result};

/// Cross-entropy of `softmax(logits)` against `label`, and its gradient with
/// respect to the logits (`softmax − onehot`).
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    let n = logits.len();
    if label >= n {
        return Err(Error::Argument(format!("label {label} out of range for {n} classes")));
    }
    let max = logits.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.data().iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let loss = -(logits.data()[label] - max - log_sum);
    let mut grad = softmax(logits);
    grad.data_mut()[label] -= 1.0;
    Ok((loss.max(0.0), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits_give_ln_classes() {
        let (loss, grad) = softmax_cross_entropy(&Tensor::zeros(&[10]), 3).unwrap();
        assert_abs_diff_eq!(loss, 10f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(loss, std::f64::consts::LN_10, epsilon = 1e-12);
        assert!(grad.data().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn label_out_of_range() {
        assert!(matches!(
            softmax_cross_entropy(&Tensor::zeros(&[3]), 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let logits = Tensor::from_vec(vec![1000.0, -1000.0, 0.0]);
        let (loss, grad) = softmax_cross_entropy(&logits, 0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.is_finite());
        let (loss, _) = softmax_cross_entropy(&logits, 1).unwrap();
        assert_abs_diff_eq!(loss, 2000.0, epsilon = 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = 1e-5;
        for label in 0..6 {
            let z = Tensor::uniform(&[6], 3.0, &mut rng);
            let (loss, g) = softmax_cross_entropy(&z, label).unwrap();
            assert!(loss >= 0.0);
            assert!(g.data().iter().sum::<f64>().abs() < 1e-12);
            for i in 0..6 {
                let (mut p, mut m) = (z.clone(), z.clone());
                p.data_mut()[i] += h;
                m.data_mut()[i] -= h;
                let fd = (softmax_cross_entropy(&p, label).unwrap().0
                    - softmax_cross_entropy(&m, label).unwrap().0)
                    / (2.0 * h);
                assert!((fd - g.data()[i]).abs() < 1e-7);
            }
        }
    }
}
