//! Floating-point scalar abstraction shared by the ROC, likelihood-ratio and
//! selection code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for likelihood ratios, AUC values and gains.
///
/// Implemented for `f32` and `f64`. Counts are converted through
/// [`Scalar::from_count`], which is exact for `f64` up to 2^53.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as float")
    }

    fn from_real(x: f64) -> Self {
        Self::from_f64(x).expect("real representable as float")
    }

    fn half() -> Self {
        Self::from_real(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Serializes a possibly infinite scalar as a JSON number, or the string
/// `"inf"` for the positive-infinity sentinel.
pub(crate) mod extended {
    use super::Scalar;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Scalar, Ser: Serializer>(v: &S, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        if v.is_infinite() && v.is_sign_positive() {
            ser.serialize_str("inf")
        } else {
            v.serialize(ser)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr<S> {
        Num(S),
        Str(String),
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<S, D::Error> {
        match Repr::<S>::deserialize(de)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(S::infinity()),
            Repr::Str(s) => Err(D::Error::custom(format!("invalid scalar {s:?}"))),
        }
    }
}
