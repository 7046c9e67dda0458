//! Error function and its inverse.
//!
//! The `erf`/`erfc` kernels use the rational approximations of FreeBSD msun
//! `s_erf.c`, which carries the following notice:
//!
//! ```text
//! Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//!
//! Developed at SunPro, a Sun Microsystems, Inc. business.
//! Permission to use, copy, modify, and distribute this
//! software is freely granted, provided that this notice
//! is preserved.
//! ```

use crate::{Error, Real, Result};

const ERX: f64 = 8.45062911510467529297e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `erf` on `[0, 0.84375)`: `x + x*R(x^2)`.
#[inline]
fn erf_small(x: f64) -> f64 {
    let z = x * x;
    let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
    let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
    x + x * (r / s)
}

/// `erfc(ax)` for `ax >= 0.84375`.
#[inline]
fn erfc_tail(ax: f64) -> f64 {
    if ax < 1.25 {
        let s = ax - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return 1.0 - ERX - p / q;
    }
    if ax >= 28.0 {
        return 0.0;
    }
    let s = 1.0 / (ax * ax);
    let (r, big_s) = if ax < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2
                        + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // z is ax with the low 32 bits cleared so that z*z is exact.
    let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / big_s).exp() / ax
}

/// Error function in double precision.
pub fn erf_f64(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    if ax < 0.84375 {
        if ax < 3.725_290_298_461_914e-9 {
            return 0.125 * (8.0 * x + EFX8 * x);
        }
        return erf_small(x);
    }
    let y = if ax < 6.0 {
        1.0 - erfc_tail(ax)
    } else {
        1.0 - f64::MIN_POSITIVE
    };
    y.copysign(x)
}

/// Complementary error function in double precision.
pub fn erfc_f64(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    if ax < 0.84375 {
        let e = erf_small(x);
        if x < 0.25 {
            return 1.0 - e;
        }
        return 0.5 - (x - 0.5 + (e - x));
    }
    let t = erfc_tail(ax);
    if x > 0.0 {
        t
    } else {
        2.0 - t
    }
}

/// Error function, applied entry-wise as the hidden-layer activation.
#[inline]
pub fn erf<T: Real>(x: T) -> T {
    T::lit(erf_f64(x.as_f64()))
}

/// Inverse error function on the open interval `(-1, 1)`.
///
/// Fails with [`Error::Domain`] for `|p| >= 1` or NaN; callers clamp first.
pub fn erf_inv<T: Real>(p: T) -> Result<T> {
    erf_inv_f64(p.as_f64()).map(T::lit)
}

/// Double-precision inverse error function.
pub fn erf_inv_f64(p: f64) -> Result<f64> {
    if p.is_nan() || p.abs() >= 1.0 {
        return Err(Error::Domain(format!("erf_inv requires |p| < 1, got {p}")));
    }
    if p == 0.0 {
        return Ok(p);
    }
    let a = p.abs();
    let mut x = initial_erf_inv(a);
    // Newton on erf for the body, on erfc in the tail where 1 - a is exact.
    let tail = a > 0.5;
    let q = 1.0 - a;
    for _ in 0..8 {
        // erf(x) - a == q - erfc(x)
        let resid = if tail { q - erfc_f64(x) } else { erf_f64(x) - a };
        let deriv = TWO_OVER_SQRT_PI * (-x * x).exp();
        if deriv == 0.0 {
            break;
        }
        // Halley correction: erf'' = -2x erf'.
        let newton = resid / deriv;
        let step = newton / (1.0 + x * newton);
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(x.copysign(p))
}

/// Single-precision quality starting point for `a` in `(0, 1)`.
fn initial_erf_inv(a: f64) -> f64 {
    let w = -((1.0 - a) * (1.0 + a)).ln();
    if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        p = 1.501_409_41 + p * w;
        p * a
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        p = 2.832_976_82 + p * w;
        p * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series, summed with enough terms for |x| <= 1.
    fn erf_series(x: f64, terms: usize) -> f64 {
        let mut sum = 0.0;
        let mut term = x; // (-1)^n x^(2n+1) / n!
        for n in 0..terms {
            sum += term / (2 * n + 1) as f64;
            term *= -x * x / (n + 1) as f64;
        }
        TWO_OVER_SQRT_PI * sum
    }

    #[test]
    fn erf_zero_and_odd() {
        assert_eq!(erf_f64(0.0), 0.0);
        for x in [0.3, 1.7, 4.0] {
            assert_eq!(erf_f64(x), -erf_f64(-x));
        }
    }

    #[test]
    fn erf_half_matches_series() {
        let oracle = erf_series(0.5, 50);
        assert!((erf_f64(0.5) - oracle).abs() <= 1e-13);
    }

    #[test]
    fn erf_matches_series_on_grid() {
        for i in 0..=100 {
            let x = -1.0 + 0.02 * i as f64;
            assert!((erf_f64(x) - erf_series(x, 60)).abs() <= 1e-14, "x = {x}");
        }
    }

    #[test]
    fn erf_matches_high_precision_references() {
        // 30-digit references rounded to double.
        let refs = [
            (0.1, 0.1124629160182849),
            (0.9, 0.7969082124228322),
            (1.0, 0.8427007929497149),
            (1.3, 0.9340079449406524),
            (2.0, 0.9953222650189527),
            (2.5, 0.999593047982555),
            (3.0, 0.9999779095030014),
            (4.0, 0.9999999845827421),
            (5.5, 0.9999999999999927),
        ];
        for (x, want) in refs {
            assert!((erf_f64(x) - want).abs() <= 1e-15, "x = {x}");
        }
    }

    #[test]
    fn erf_monotone_and_bounded() {
        let mut prev = -1.0;
        for i in 0..4000 {
            let x = -6.0 + 0.003 * i as f64;
            let v = erf_f64(x);
            // Beyond |x| ~ 5.9 the true value rounds to ±1 in double precision.
            assert!(v.abs() <= 1.0);
            if x.abs() < 5.5 {
                assert!(v.abs() < 1.0);
            }
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn erfc_complements_erf() {
        for i in 0..200 {
            let x = -5.0 + 0.05 * i as f64;
            assert!((erfc_f64(x) + erf_f64(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn erf_inv_zero() {
        assert_eq!(erf_inv_f64(0.0).unwrap(), 0.0);
    }

    #[test]
    fn erf_inv_round_trip() {
        assert!((erf_f64(erf_inv_f64(erf_f64(0.7)).unwrap()) - erf_f64(0.7)).abs() <= 1e-10);
        assert!((erf_inv_f64(erf_f64(0.7)).unwrap() - 0.7).abs() <= 1e-10);
        for i in 1..2000 {
            let p = -1.0 + i as f64 / 1000.0;
            let x = erf_inv_f64(p).unwrap();
            assert!((erf_f64(x) - p).abs() <= 1e-10, "p = {p}");
        }
    }

    #[test]
    fn erf_inv_references() {
        let refs = [
            (0.1, 0.08885599049425769),
            (0.5, 0.4769362762044699),
            (0.9, 1.1630871536766743),
            (0.999, 2.3267537655135246),
            (0.999999999, 4.320005388105362),
        ];
        for (p, want) in refs {
            let got = erf_inv_f64(p).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "p = {p}");
            assert_eq!(erf_inv_f64(-p).unwrap(), -got);
        }
    }

    #[test]
    fn erf_inv_near_boundary() {
        let p = 1.0 - 1e-12;
        let x = erf_inv_f64(p).unwrap();
        assert!((erf_f64(x) - p).abs() <= 1e-10);
    }

    #[test]
    fn erf_inv_domain() {
        assert!(matches!(erf_inv_f64(1.0), Err(Error::Domain(_))));
        assert!(matches!(erf_inv_f64(-1.0), Err(Error::Domain(_))));
        assert!(erf_inv_f64(f64::NAN).is_err());
    }

    #[test]
    fn generic_f32() {
        let v: f32 = erf(0.5f32);
        assert!((v - 0.520_499_9).abs() < 1e-6);
        let x: f32 = erf_inv(v).unwrap();
        assert!((x - 0.5).abs() < 1e-6);
    }
}
