/// Probabilities are clamped to `[LOSS_EPS, 1 - LOSS_EPS]` before taking logarithms.
pub const LOSS_EPS: f64 = 1e-7;

/// Binary cross entropy `-[y ln d + (1 - y) ln(1 - d)]`.
pub fn bce_loss(d_out: f64, label: f64) -> f64 {
    let d = d_out.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    -(label * d.ln() + (1.0 - label) * (1.0 - d).ln())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;

    #[test]
    fn reference_values() {
        let expected = 0.9 * (1.0f64 / 0.9).ln() + 0.1 * (1.0f64 / 0.1).ln();
        assert!((bce_loss(0.9, 0.9) - expected).abs() < 1e-15);
        assert!((bce_loss(0.9, 0.9) - 0.3251).abs() < 5e-5);
        for label in [0.1, 0.5, 0.9] {
            assert!((bce_loss(0.5, label) - LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn minimum_at_label() {
        let at = bce_loss(0.5, 0.5);
        for d in [0.1, 0.3, 0.49, 0.51, 0.7, 0.99] {
            assert!(bce_loss(d, 0.5) > at);
        }
    }

    #[test]
    fn clamps_extremes() {
        assert!(bce_loss(0.0, 0.9).is_finite());
        assert!(bce_loss(1.0, 0.1).is_finite());
    }

    #[test]
    fn decreasing_towards_label_from_below() {
        let losses: Vec<f64> = (0..=9)
            .map(|i| bce_loss(0.45 + 0.05 * i as f64, 0.9))
            .collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]));
    }
}
