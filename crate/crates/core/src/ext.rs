//! Extended-real arithmetic.
//!
//! Values are plain `f64`, with `±INFINITY` as the extended points. Any
//! operation that IEEE arithmetic leaves undefined (`∞ − ∞`, `0 · ∞`, `0/0`)
//! resolves to `−∞`, the pessimistic convention used throughout the crate.

pub const POS_INF: f64 = f64::INFINITY;
pub const NEG_INF: f64 = f64::NEG_INFINITY;

#[inline]
fn fix(x: f64) -> f64 {
    if x.is_nan() {
        NEG_INF
    } else {
        x
    }
}

#[inline]
pub fn add(a: f64, b: f64) -> f64 {
    fix(a + b)
}

#[inline]
pub fn sub(a: f64, b: f64) -> f64 {
    fix(a - b)
}

#[inline]
pub fn mul(a: f64, b: f64) -> f64 {
    fix(a * b)
}

/// Division with a sign-of-numerator rule at zero: `x/0` is `+∞` for
/// `x > 0` and `−∞` otherwise (including `0/0`).
#[inline]
pub fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a > 0.0 {
            POS_INF
        } else {
            NEG_INF
        }
    } else {
        fix(a / b)
    }
}

#[inline]
pub fn pow(a: f64, b: f64) -> f64 {
    fix(a.powf(b))
}

#[inline]
pub fn exp(a: f64) -> f64 {
    fix(a.exp())
}

/// Absolute gap between two extended reals. Equal infinities are at
/// distance zero; anything else involving an infinity is infinitely far.
pub fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a.is_infinite() || b.is_infinite() {
        POS_INF
    } else {
        (a - b).abs()
    }
}

/// Weighted sum `Σ wᵢ xᵢ` over strictly positive weights, computed as
/// `E[x⁺] − E[x⁻]` and returning `−∞` when both parts are infinite.
/// Terms with zero weight are never read.
pub fn weighted_sum<I>(terms: I) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (w, x) in terms {
        if w <= 0.0 {
            continue;
        }
        if x > 0.0 {
            pos += w * x;
        } else if x < 0.0 {
            neg += w * (-x);
        }
    }
    if pos.is_infinite() && neg.is_infinite() {
        NEG_INF
    } else {
        pos - neg
    }
}

/// Serializes an extended real for JSON output: finite values as numbers,
/// infinities as the strings `"inf"` / `"-inf"`.
pub mod serde_ext {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_forms_are_negative_infinity() {
        assert_eq!(sub(POS_INF, POS_INF), NEG_INF);
        assert_eq!(add(POS_INF, NEG_INF), NEG_INF);
        assert_eq!(mul(0.0, POS_INF), NEG_INF);
        assert_eq!(div(0.0, 0.0), NEG_INF);
    }

    #[test]
    fn division_by_zero_follows_numerator_sign() {
        assert_eq!(div(1.0, 0.0), POS_INF);
        assert_eq!(div(-1.0, 0.0), NEG_INF);
        assert_eq!(div(1.0, -0.0), POS_INF);
    }

    #[test]
    fn weighted_sum_conventions() {
        assert_eq!(weighted_sum([(0.5, 1.0), (0.5, -1.0)]), 0.0);
        assert_eq!(weighted_sum([(0.5, POS_INF), (0.5, NEG_INF)]), NEG_INF);
        assert_eq!(weighted_sum([(0.5, POS_INF), (0.5, 3.0)]), POS_INF);
        // zero weight hides an infinity
        assert_eq!(weighted_sum([(0.0, NEG_INF), (1.0, 2.0)]), 2.0);
    }

    #[test]
    fn gap_handles_infinities() {
        assert_eq!(gap(POS_INF, POS_INF), 0.0);
        assert_eq!(gap(POS_INF, 1.0), POS_INF);
        assert_eq!(gap(1.0, 1.5), 0.5);
    }
}
