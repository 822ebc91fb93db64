//! Scalar helpers shared across filtering, activation and training code.

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of `softplus` for positive arguments.
#[inline]
pub fn inverse_softplus(y: f64) -> f64 {
    y.exp_m1().ln()
}

#[inline]
pub fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Derivative mask of `clamp01`: 1 inside the open interval, 0 at and beyond the bounds.
#[inline]
pub fn clamp01_grad_mask(pre_clamp: f64) -> f64 {
    if pre_clamp > 0.0 && pre_clamp < 1.0 {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn softplus_at_zero_is_ln_two() {
        assert_eq!(softplus(0.0), 2.0_f64.ln());
    }

    #[test]
    fn softplus_roundtrip() {
        for &y in &[1e-6, 0.01, 0.5, 3.0, 40.0] {
            assert_relative_eq!(softplus(inverse_softplus(y)), y, max_relative = 1e-12);
        }
    }

    #[test]
    fn sigmoid_is_softplus_slope() {
        let h = 1e-6;
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let fd = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
            assert_relative_eq!(sigmoid(x), fd, max_relative = 1e-8);
        }
    }

    #[test]
    fn logit_inverts_sigmoid() {
        for &p in &[1e-4, 0.3, 0.5, 0.99] {
            assert_relative_eq!(sigmoid(logit(p)), p, max_relative = 1e-12);
        }
    }

    #[test]
    fn clamp_mask_matches_boundaries() {
        assert_eq!(clamp01_grad_mask(-0.1), 0.0);
        assert_eq!(clamp01_grad_mask(0.0), 0.0);
        assert_eq!(clamp01_grad_mask(0.5), 1.0);
        assert_eq!(clamp01_grad_mask(1.0), 0.0);
        assert_eq!(clamp01_grad_mask(1.1), 0.0);
    }
}
