//! Effective diffusion time for the weight `t^β`:
//! `τ(t; t_0) = (t^{β+1} - t_0^{β+1}) / (β+1)`.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWeight {
    beta: f64,
}

impl TimeWeight {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("must be nonnegative, got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `∫_{t0}^{t} s^β ds`.
    pub fn tau(&self, t: f64, t0: f64) -> Result<f64> {
        if !(t0 >= 0.0) || t < t0 {
            return Err(invalid("t", format!("need 0 <= t0 <= t, got t0 = {t0}, t = {t}")));
        }
        let q = self.beta + 1.0;
        if t0 == 0.0 {
            return Ok(t.powf(q) / q);
        }
        // t^q - t0^q without cancellation.
        Ok(t0.powf(q) * (q * ((t - t0) / t0).ln_1p()).exp_m1() / q)
    }

    /// Time `t ≥ t0` with `tau(t, t0) = sigma`.
    pub fn tau_inverse(&self, sigma: f64, t0: f64) -> Result<f64> {
        if !(sigma >= 0.0) || !(t0 >= 0.0) {
            return Err(invalid(
                "sigma",
                format!("need sigma >= 0 and t0 >= 0, got sigma = {sigma}, t0 = {t0}"),
            ));
        }
        let q = self.beta + 1.0;
        if t0 == 0.0 {
            return Ok((q * sigma).powf(1.0 / q));
        }
        let base = t0.powf(q);
        Ok(t0 * ((q * sigma / base).ln_1p() / q).exp())
    }
}

pub fn tau(t: f64, t0: f64, beta: f64) -> Result<f64> {
    TimeWeight::new(beta)?.tau(t, t0)
}

pub fn tau_inverse(sigma: f64, t0: f64, beta: f64) -> Result<f64> {
    TimeWeight::new(beta)?.tau_inverse(sigma, t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(tau(3.7, 0.0, 0.0).unwrap(), 3.7);
        assert_relative_eq!(tau(1.0, 0.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(tau(2.0, 1.0, 1.0).unwrap(), 1.5, epsilon = 1e-15);
        assert_eq!(tau(2.0, 2.0, 1.3).unwrap(), 0.0);
        assert_eq!(tau_inverse(0.0, 1.7, 2.0).unwrap(), 1.7);
        assert_relative_eq!(tau_inverse(2.5, 1.0, 0.0).unwrap(), 3.5, epsilon = 1e-15);
        assert_relative_eq!(tau_inverse(0.5, 0.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(tau(1.0, 2.0, 0.0).is_err());
        assert!(tau(1.0, 0.0, -0.5).is_err());
        assert!(tau_inverse(-1.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn inverse_round_trip(d in 0.0f64..20.0, t0 in 0.0f64..10.0, beta in 0.0f64..4.0) {
            let w = TimeWeight::new(beta).unwrap();
            let t = t0 + d;
            let back = w.tau_inverse(w.tau(t, t0).unwrap(), t0).unwrap();
            prop_assert!((back - t).abs() <= 1e-12 * t.max(1e-300), "{} vs {}", back, t);
        }

        #[test]
        fn additivity(a in 0.0f64..5.0, b in 0.0f64..5.0, c in 0.0f64..5.0, beta in 0.0f64..3.0) {
            let mut v = [a, b, c];
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let [t0, t1, t] = v;
            let w = TimeWeight::new(beta).unwrap();
            let whole = w.tau(t, t0).unwrap();
            let parts = w.tau(t, t1).unwrap() + w.tau(t1, t0).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
        }

        #[test]
        fn strictly_increasing(t0 in 0.0f64..5.0, d in 1e-6f64..5.0, e in 1e-6f64..5.0, beta in 0.0f64..3.0) {
            let w = TimeWeight::new(beta).unwrap();
            prop_assert!(w.tau(t0 + d + e, t0).unwrap() > w.tau(t0 + d, t0).unwrap());
        }
    }
}
