use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use foodnet_core::format::sig9;

/// A float serialized as a JSON number with nine significant digits, the
/// same text the CSV writers produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig9(pub f64);

impl Serialize for Sig9 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(sig9(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_plain_number_text() {
        assert_eq!(serde_json::to_string(&Sig9(0.25)).unwrap(), "2.50000000e-1");
        assert_eq!(serde_json::to_string(&[Sig9(0.0)]).unwrap(), "[0.00000000e0]");
        let back: f64 = serde_json::from_str(&serde_json::to_string(&Sig9(1.0 / 3.0)).unwrap()).unwrap();
        assert_eq!(back, 0.333333333);
    }
}
