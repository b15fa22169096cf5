//! Upper tail of the chi-square distribution.

use statrs::function::gamma::checked_gamma_ur;

use crate::scalar::Real;

/// `P(X >= x)` for `X ~ chi-square(df)`, via the regularized upper
/// incomplete gamma function `Q(df/2, x/2)`.
///
/// Returns 1 for `x <= 0`, 0 for `x = +inf`, and NaN for `df = 0` or NaN
/// input.
pub fn chi_square_sf<T: Real>(x: T, df: u32) -> T {
    if df == 0 || x.is_nan() {
        return T::nan();
    }
    if x <= T::zero() {
        return T::one();
    }
    if x.is_infinite() {
        return T::zero();
    }
    let a = f64::from(df) / 2.0;
    let q = checked_gamma_ur(a, x.to_f64_lossy() / 2.0).unwrap_or(f64::NAN);
    T::from_f64_lossy(q.clamp(0.0, 1.0))
}
