//! Decimal formatting shared by every text output.

/// Formats a value with nine significant digits in scientific notation.
///
/// This is the canonical text form for relative losses, shares and metrics
/// in CSV files and HTTP responses, so identical inputs produce
/// byte-identical output across the CLI and the server.
pub fn sig9(value: f64) -> String {
    if value == 0.0 {
        // normalise -0.0
        return "0.00000000e0".to_owned();
    }
    format!("{value:.8e}")
}

/// Lossless shortest round-trip representation, used for raw amounts.
pub fn exact(value: f64) -> String {
    format!("{value:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.2), "2.00000000e-1");
        assert_eq!(sig9(0.625), "6.25000000e-1");
        assert_eq!(sig9(1.0), "1.00000000e0");
        assert_eq!(sig9(-0.0), "0.00000000e0");
        assert_eq!(sig9(1.0 / 3.0), "3.33333333e-1");
    }

    #[test]
    fn exact_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789] {
            assert_eq!(exact(v).parse::<f64>().unwrap(), v);
        }
    }
}
