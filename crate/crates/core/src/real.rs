use drvsl_solver::Scalar;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar type the traffic models and formulations are generic over.
pub trait Real: Scalar + Serialize + DeserializeOwned {}

impl<T: Scalar + Serialize + DeserializeOwned> Real for T {}

#[inline]
pub(crate) fn lit<T: Real>(v: f64) -> T {
    T::of(v)
}

#[inline]
pub(crate) fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64_lossy()
}
