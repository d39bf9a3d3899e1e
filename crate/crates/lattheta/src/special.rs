//! Special functions.

pub use statrs::function::gamma::gamma;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integers_and_half() {
        let mut f = 1.0;
        for n in 1..15 {
            assert!((gamma(n as f64) - f).abs() <= 1e-13 * f);
            f *= n as f64;
        }
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
    }
}
