//! Matrix wire format: `{"n": <int>, "entries": [[re, im], ...]}`, row-major,
//! with every number written to 17 significant digits.

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{validate_square, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// A real number that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exact(pub f64);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self { n, entries }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        if self.entries.len() != self.n * self.n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", self.n * self.n),
                found: format!("{} entries", self.entries.len()),
            });
        }
        let m = ComplexMatrix::from_fn(self.n, self.n, |i, j| {
            let [re, im] = self.entries[i * self.n + j];
            Complex64::new(re, im)
        });
        validate_square(&m)?;
        Ok(m)
    }
}

impl Serialize for MatrixJson {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<[Exact; 2]> = self
            .entries
            .iter()
            .map(|&[re, im]| [Exact(re), Exact(im)])
            .collect();
        let mut st = serializer.serialize_struct("MatrixJson", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

pub fn to_json_string(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("matrix serialization is infallible")
}

pub fn from_json_str(s: &str) -> Result<ComplexMatrix> {
    let parsed: MatrixJson =
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("matrix JSON: {e}")))?;
    parsed.to_matrix()
}

/// `#[serde(with = "serde_matrix")]` adapter for complex matrix fields.
pub mod serde_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &ComplexMatrix,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(m).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<ComplexMatrix, D::Error> {
        MatrixJson::deserialize(deserializer)?
            .to_matrix()
            .map_err(D::Error::custom)
    }
}

/// Optional-field variant of [`serde_matrix`].
pub mod serde_matrix_opt {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &Option<ComplexMatrix>,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixJson::from_matrix).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Option<ComplexMatrix>, D::Error> {
        Option::<MatrixJson>::deserialize(deserializer)?
            .map(|m| m.to_matrix().map_err(D::Error::custom))
            .transpose()
    }
}

/// Real matrices as nested row arrays at 17 significant digits.
pub mod serde_real_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &RealMatrix,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Exact>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| Exact(m[(i, j)])).collect())
            .collect();
        rows.serialize(serializer)
    }
}

/// Real vectors as arrays at 17 significant digits.
pub mod serde_real_vector {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &nalgebra::DVector<f64>,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<Exact> = v.iter().map(|&x| Exact(x)).collect();
        items.serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_seventeen_significant_digits() {
        let m = ComplexMatrix::from_row_slice(
            1,
            1,
            &[Complex64::new(0.1, -2.5e-7)],
        );
        let s = to_json_string(&m);
        assert_eq!(
            s,
            r#"{"n":1,"entries":[[1.0000000000000001e-1,-2.4999999999999999e-7]]}"#
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            Complex64::new((i as f64 + 0.1).sqrt() / 3.0, -(j as f64 * 1.7).sin())
        });
        let back = from_json_str(&to_json_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_wrong_entry_count() {
        let err = from_json_str(r#"{"n":2,"entries":[[1,0],[0,0],[0,0]]}"#).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(from_json_str(r#"{"n":0,"entries":[]}"#).is_err());
    }
}
