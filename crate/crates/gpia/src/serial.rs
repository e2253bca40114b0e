//! Dense matrices in JSON with every number written at 17 significant
//! digits, so `f64` values survive a round trip exactly.

use ndarray::{Array1, Array2};
use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

fn digits17<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut out = String::with_capacity(values.len() * 24 + 2);
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(S::Error::custom(format!("cannot serialize non-finite value {v}")));
        }
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("{v:.16e}"));
    }
    out.push(']');
    RawValue::from_string(out).map_err(S::Error::custom)?.serialize(s)
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    #[serde(serialize_with = "ser_vec")]
    data: Vec<f64>,
}

fn ser_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    digits17(v, s)
}

/// Serde adapter for `Array2<f64>` (row-major).
pub(crate) mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().copied().collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        Array2::from_shape_vec((r.rows, r.cols), r.data).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Array1<f64>`.
pub(crate) mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
        digits17(&v.to_vec(), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array1<f64>, D::Error> {
        Ok(Array1::from(Vec::<f64>::deserialize(d)?))
    }
}

/// Serde adapter for `Option<Array1<f64>>`.
pub(crate) mod opt_vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Array1<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::vector::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Array1<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(Array1::from))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "matrix")]
        m: Array2<f64>,
    }

    #[test]
    fn writes_seventeen_significant_digits() {
        let h = Holder { m: Array2::from_elem((1, 1), 0.1) };
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
    }

    #[test]
    fn rejects_non_finite() {
        let h = Holder { m: Array2::from_elem((1, 1), f64::NAN) };
        assert!(serde_json::to_string(&h).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(vals in proptest::collection::vec(-1e300f64..1e300, 6)) {
            let h = Holder { m: Array2::from_shape_vec((2, 3), vals).unwrap() };
            let s = serde_json::to_string_pretty(&h).unwrap();
            let back: Holder = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, h);
        }
    }
}
