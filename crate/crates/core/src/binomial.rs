//! Big-integer binomial coefficients and their log10 estimates.

use num::{BigUint, One, Zero};

/// C(n, k) as an exact big integer. Returns 0 when k > n.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    // Multiply before dividing; the running product is always divisible.
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// log10 of C(n, k) by summing term logs; approximate but cheap for any size.
pub fn log10_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64).log10() - (i as f64).log10())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(0, 0), BigUint::one());
        assert_eq!(binomial(4, 7), BigUint::zero());
        assert_eq!(binomial(23, 16), BigUint::from(245157u32));
    }

    #[test]
    fn symmetric() {
        assert_eq!(binomial(40, 27), binomial(40, 13));
    }

    #[test]
    fn log10_matches_exact_for_moderate_sizes() {
        let exact = binomial(100, 40).to_string().len() as f64 - 1.0;
        let approx = log10_binomial(100, 40);
        assert!((approx - exact).abs() < 1.0, "{approx} vs {exact}");
    }
}
