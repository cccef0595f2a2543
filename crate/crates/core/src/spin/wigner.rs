//! Wigner 3-j / 6-j symbols and Clebsch–Gordan coefficients.
//!
//! Racah's single-sum formulas are evaluated in exact big-rational arithmetic;
//! the only rounding is the final square root of `prefactor × sum²`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

use super::HalfInt;

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    (2..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Integer value of a sum of half-integers known to be integral.
fn int_of(doubled: i32) -> i32 {
    debug_assert!(doubled % 2 == 0);
    doubled / 2
}

fn check_j(j: HalfInt) -> Result<()> {
    if j.doubled() < 0 {
        return Err(invalid(format!("angular momentum {j} is negative")));
    }
    Ok(())
}

fn check_jm(j: HalfInt, m: HalfInt) -> Result<()> {
    check_j(j)?;
    if m.abs() > j {
        return Err(invalid(format!("|m| = {} exceeds j = {j}", m.abs())));
    }
    if (j - m).doubled() % 2 != 0 {
        return Err(invalid(format!("j = {j} and m = {m} differ by a non-integer")));
    }
    Ok(())
}

fn triangle_ok(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.doubled(), b.doubled(), c.doubled());
    (a + b + c) % 2 == 0 && c <= a + b && c >= (a - b).abs()
}

/// Triangle coefficient `Δ(abc)` as an exact rational.
fn triangle_coeff(a: HalfInt, b: HalfInt, c: HalfInt) -> BigRational {
    let (a, b, c) = (a.doubled(), b.doubled(), c.doubled());
    let num = factorial(int_of(a + b - c)) * factorial(int_of(a - b + c)) * factorial(int_of(-a + b + c));
    let den = factorial(int_of(a + b + c) + 1);
    BigRational::new(num, den)
}

fn sign_of(parity: i32) -> f64 {
    if parity.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sign · sqrt(prefactor · sum²) · sign(sum)` rounded once.
fn finish(phase: f64, prefactor: &BigRational, sum: &BigRational) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let squared = prefactor * sum * sum;
    let magnitude = squared.to_f64().unwrap_or(f64::NAN).sqrt();
    let s = if sum.is_negative() { -1.0 } else { 1.0 };
    phase * s * magnitude
}

/// Wigner 3-j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns 0 when the m-sum or triangle conditions fail; malformed quantum
/// numbers (negative j, |m| > j, j − m non-integral) are an error.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j3, m3)?;
    if (m1 + m2 + m3).doubled() != 0 || !triangle_ok(j1, j2, j3) {
        return Ok(0.0);
    }

    let (j1d, j2d, j3d) = (j1.doubled(), j2.doubled(), j3.doubled());
    let (m1d, m2d, m3d) = (m1.doubled(), m2.doubled(), m3.doubled());

    let mut prefactor = triangle_coeff(j1, j2, j3);
    for (j, m) in [(j1d, m1d), (j2d, m2d), (j3d, m3d)] {
        prefactor *= BigRational::from_integer(factorial(int_of(j + m)) * factorial(int_of(j - m)));
    }

    let k_min = 0.max(int_of(j2d - j3d - m1d)).max(int_of(j1d - j3d + m2d));
    let k_max = int_of(j1d + j2d - j3d).min(int_of(j1d - m1d)).min(int_of(j2d + m2d));
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(int_of(j3d - j2d + m1d) + k)
            * factorial(int_of(j3d - j1d - m2d) + k)
            * factorial(int_of(j1d + j2d - j3d) - k)
            * factorial(int_of(j1d - m1d) - k)
            * factorial(int_of(j2d + m2d) - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    let phase = sign_of(int_of(j1d - j2d - m3d));
    Ok(finish(phase, &prefactor, &sum))
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}`; 0 when any triad violates the
/// triangle rule.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64> {
    for j in [j1, j2, j3, j4, j5, j6] {
        check_j(j)?;
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if triads.iter().any(|&(a, b, c)| !triangle_ok(a, b, c)) {
        return Ok(0.0);
    }

    let prefactor = triads
        .iter()
        .fold(BigRational::one(), |acc, &(a, b, c)| acc * triangle_coeff(a, b, c));

    let alphas: Vec<i32> = triads
        .iter()
        .map(|&(a, b, c)| int_of((a + b + c).doubled()))
        .collect();
    let betas = [
        int_of((j1 + j2 + j4 + j5).doubled()),
        int_of((j2 + j3 + j5 + j6).doubled()),
        int_of((j3 + j1 + j6 + j4).doubled()),
    ];
    let t_min = *alphas.iter().max().expect("four triads");
    let t_max = *betas.iter().min().expect("three sums");

    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let mut den = BigInt::one();
        for &a in &alphas {
            den *= factorial(t - a);
        }
        for &b in &betas {
            den *= factorial(b - t);
        }
        let term = BigRational::new(factorial(t + 1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(finish(1.0, &prefactor, &sum))
}

/// Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | J M⟩` (Condon–Shortley phases),
/// via `(−1)^(j1−j2+M) √(2J+1) (j1 j2 J; m1 m2 −M)`.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64> {
    let three_j = wigner_3j(j1, j2, j, m1, m2, -m)?;
    let phase = sign_of(int_of((j1 - j2 + m).doubled()));
    Ok(phase * ((j.doubled() + 1) as f64).sqrt() * three_j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_doubled(twice)
    }

    #[test]
    fn trivial_values() {
        let z = HalfInt::ZERO;
        assert_eq!(wigner_3j(z, z, z, z, z, z).unwrap(), 1.0);
        // m-sum violated
        assert_eq!(wigner_3j(h(2), h(2), h(2), h(2), h(2), h(0)).unwrap(), 0.0);
        // triangle violated
        assert_eq!(wigner_3j(h(2), h(2), h(6), h(0), h(0), h(0)).unwrap(), 0.0);
        assert_eq!(wigner_6j(h(2), h(2), h(6), h(2), h(2), h(2)).unwrap(), 0.0);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(wigner_3j(h(2), h(2), h(2), h(4), h(-4), h(0)).is_err());
        assert!(wigner_3j(h(2), h(2), h(2), h(1), h(-1), h(0)).is_err());
        assert!(wigner_6j(h(-2), h(2), h(2), h(2), h(2), h(2)).is_err());
        assert!(clebsch_gordan(h(1), h(3), h(1), h(-1), h(2), h(0)).is_err());
    }

    #[test]
    fn clebsch_gordan_selection_and_stretched() {
        assert_eq!(clebsch_gordan(h(1), h(1), h(1), h(1), h(0), h(0)).unwrap(), 0.0);
        for twice in 1..=9 {
            let j = h(twice);
            let v = clebsch_gordan(j, j, j, j, j + j, j + j).unwrap();
            assert!((v - 1.0).abs() < 1e-15, "stretched j={j}: {v}");
        }
    }

    #[test]
    fn six_j_zero_column_closed_form() {
        for a in 0..=9 {
            for b in 0..=9 {
                for c in 0..=9 {
                    let (j1, j2, j3) = (h(a), h(b), h(c));
                    if !triangle_ok(j1, j2, j3) {
                        continue;
                    }
                    let v = wigner_6j(j1, j2, j3, HalfInt::ZERO, j3, j2).unwrap();
                    let closed = sign_of(int_of(a + b + c))
                        / (((b + 1) * (c + 1)) as f64).sqrt();
                    assert!((v - closed).abs() < 1e-14, "{a} {b} {c}: {v} vs {closed}");
                }
            }
        }
    }
}
