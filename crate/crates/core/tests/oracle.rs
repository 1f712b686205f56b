use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use spider_hjb::verify::{mean_local_time, reflected_bm_oracle};

/// `E|x + sigma W_s|` in closed form.
fn folded_mean(x: f64, s: f64, sigma: f64) -> f64 {
    let sd = sigma * s.sqrt();
    let std = Normal::new(0.0, 1.0).unwrap();
    let z = x / sd;
    sd * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * z * z).exp() + x * (1.0 - 2.0 * std.cdf(-z))
}

proptest! {
    #[test]
    fn quadrature_matches_closed_form(x in 0.0..5.0f64, s in 1e-3..4.0f64, sigma in 0.2..2.0f64) {
        let (mean, local) = reflected_bm_oracle(x, s, sigma).unwrap();
        let exact = folded_mean(x, s, sigma);
        prop_assert!((mean - exact).abs() <= 1e-10 * exact.max(1.0), "{} vs {}", mean, exact);
        prop_assert!((local - (exact - x).max(0.0)).abs() <= 1e-10 * exact.max(1.0));
        prop_assert_eq!(mean_local_time(x, s, sigma).unwrap(), local);
    }
}

#[test]
fn known_values() {
    let (m, l) = reflected_bm_oracle(0.0, 1.0, 1.0).unwrap();
    assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-13);
    assert_eq!(m, l);
    // Far from the vertex the reflection is invisible.
    let (m, l) = reflected_bm_oracle(30.0, 1.0, 1.0).unwrap();
    assert_eq!(m, 30.0);
    assert_eq!(l, 0.0);
    assert!(reflected_bm_oracle(-1.0, 1.0, 1.0).is_err());
    assert!(reflected_bm_oracle(1.0, 0.0, 1.0).is_err());
}
