//! Elementwise activations and loss functions with hand-written gradients.

use super::Scalar;

/// Numerically stable softmax of one row, in place.
pub fn softmax_in_place<S: Scalar>(xs: &mut [S]) {
    let max = xs.iter().cloned().fold(S::neg_infinity(), S::max);
    let mut sum = S::zero();
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax<S: Scalar>(xs: &[S]) -> Vec<S> {
    let mut out = xs.to_vec();
    softmax_in_place(&mut out);
    out
}

/// Smooth GELU (tanh form). Chosen over a kinked activation so central
/// differences see a differentiable function everywhere.
pub fn gelu<S: Scalar>(x: S) -> S {
    let c = S::from_f64(0.7978845608028654); // sqrt(2/pi)
    let k = S::from_f64(0.044715);
    let half = S::from_f64(0.5);
    let t = (c * (x + k * x * x * x)).tanh();
    half * x * (S::one() + t)
}

/// Derivative of [`gelu`].
pub fn gelu_grad<S: Scalar>(x: S) -> S {
    let c = S::from_f64(0.7978845608028654);
    let k = S::from_f64(0.044715);
    let half = S::from_f64(0.5);
    let three = S::from_f64(3.0);
    let inner = c * (x + k * x * x * x);
    let t = inner.tanh();
    let sech2 = S::one() - t * t;
    half * (S::one() + t) + half * x * sech2 * c * (S::one() + three * k * x * x)
}

pub fn gelu_forward<S: Scalar>(xs: &[S]) -> Vec<S> {
    xs.iter().map(|&x| gelu(x)).collect()
}

/// dL/dx given the pre-activation inputs and dL/dy.
pub fn gelu_backward<S: Scalar>(xs: &[S], dy: &[S]) -> Vec<S> {
    debug_assert_eq!(xs.len(), dy.len());
    xs.iter()
        .zip(dy)
        .map(|(&x, &d)| d * gelu_grad(x))
        .collect()
}

/// Outcome of a cross-entropy evaluation over a batch of logit rows.
pub struct CrossEntropy<S> {
    /// Mean negative log-likelihood over the batch.
    pub loss: S,
    /// Gradient with respect to the logits, already divided by the batch.
    pub dlogits: Vec<S>,
    /// True when any target probability had to be clamped before the log.
    pub clamped: bool,
}

/// Floor applied to target probabilities before taking the log.
pub const CE_PROB_FLOOR: f64 = 1e-12;

/// Mean cross-entropy of `rows` logit rows of width `classes` against
/// integer targets, with the softmax/log fused for stability.
pub fn cross_entropy<S: Scalar>(
    logits: &[S],
    rows: usize,
    classes: usize,
    targets: &[u8],
) -> CrossEntropy<S> {
    debug_assert_eq!(logits.len(), rows * classes);
    debug_assert_eq!(targets.len(), rows);
    let floor = S::from_f64(CE_PROB_FLOOR);
    let inv_rows = S::one() / S::from_f64(rows as f64);
    let mut loss = S::zero();
    let mut dlogits = vec![S::zero(); rows * classes];
    let mut clamped = false;
    for r in 0..rows {
        let row = &logits[r * classes..(r + 1) * classes];
        let target = targets[r] as usize;
        debug_assert!(target < classes);
        let probs = softmax(row);
        let p = probs[target];
        let p_safe = if p < floor {
            clamped = true;
            floor
        } else {
            p
        };
        loss += -(p_safe.ln());
        let drow = &mut dlogits[r * classes..(r + 1) * classes];
        for c in 0..classes {
            let indicator = if c == target { S::one() } else { S::zero() };
            drow[c] = (probs[c] - indicator) * inv_rows;
        }
    }
    CrossEntropy {
        loss: loss * inv_rows,
        dlogits,
        clamped,
    }
}

/// Mean squared error and its gradient with respect to the predictions.
pub fn mse<S: Scalar>(pred: &[S], target: &[S]) -> (S, Vec<S>) {
    debug_assert_eq!(pred.len(), target.len());
    debug_assert!(!pred.is_empty());
    let inv = S::one() / S::from_f64(pred.len() as f64);
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); pred.len()];
    for i in 0..pred.len() {
        let diff = pred[i] - target[i];
        loss += diff * diff;
        grad[i] = S::from_f64(2.0) * diff * inv;
    }
    (loss * inv, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_known_row() {
        let p = softmax(&[1.0f64, 2.0, 3.0]);
        let expected = [
            0.09003057317038046,
            0.24472847105479767,
            0.6652409557748219,
        ];
        for (a, b) in p.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_is_shift_invariant_and_stable() {
        let a = softmax(&[1.0f64, 2.0, 3.0]);
        let b = softmax(&[1001.0f64, 1002.0, 1003.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let c = softmax(&[-1e30f32, 0.0]);
        assert_eq!(c, vec![0.0, 1.0]);
    }

    #[test]
    fn gelu_satisfies_odd_identity() {
        // gelu(x) - gelu(-x) == x for the tanh form.
        for &x in &[0.0f64, 0.1, 0.5, 1.0, 2.5, 7.0] {
            assert!((gelu(x) - gelu(-x) - x).abs() < 1e-12, "x={x}");
        }
        assert_eq!(gelu(0.0f64), 0.0);
        assert!((gelu(10.0f64) - 10.0).abs() < 1e-9);
        assert!(gelu(-10.0f64).abs() < 1e-9);
    }

    #[test]
    fn gelu_grad_matches_central_differences() {
        let h = 1e-6f64;
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((gelu_grad(x) - fd).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn cross_entropy_of_uniform_logits_is_ln_classes() {
        let ce = cross_entropy(&[0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0], 2, 3, &[0, 2]);
        assert!((ce.loss - 3.0f64.ln()).abs() < 1e-15);
        assert!(!ce.clamped);
        // Gradient: (1/3 - onehot) / batch.
        let third = 1.0 / 3.0;
        let expected = [
            (third - 1.0) / 2.0,
            third / 2.0,
            third / 2.0,
            third / 2.0,
            third / 2.0,
            (third - 1.0) / 2.0,
        ];
        for (a, b) in ce.dlogits.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_entropy_gradient_matches_central_differences() {
        let logits = [0.3f64, -1.2, 0.7, 2.0, 0.0, -0.5];
        let targets = [1u8, 0];
        let ce = cross_entropy(&logits, 2, 3, &targets);
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits;
            plus[i] += h;
            let mut minus = logits;
            minus[i] -= h;
            let fd = (cross_entropy(&plus, 2, 3, &targets).loss
                - cross_entropy(&minus, 2, 3, &targets).loss)
                / (2.0 * h);
            assert!((ce.dlogits[i] - fd).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn cross_entropy_flags_clamped_probabilities() {
        // A 60-logit gap drives the target probability far below the floor.
        let ce = cross_entropy(&[60.0f64, 0.0], 1, 2, &[1]);
        assert!(ce.clamped);
        assert!(ce.loss.is_finite());
        assert!((ce.loss - (-CE_PROB_FLOOR.ln())).abs() < 1e-6);
    }

    #[test]
    fn mse_matches_hand_computation() {
        let (loss, grad) = mse(&[1.0f64, 2.0, 3.0], &[0.0, 2.0, 5.0]);
        // ((1)^2 + 0 + (-2)^2) / 3
        assert!((loss - 5.0 / 3.0).abs() < 1e-15);
        let expected = [2.0 / 3.0, 0.0, -4.0 / 3.0];
        for (a, b) in grad.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
