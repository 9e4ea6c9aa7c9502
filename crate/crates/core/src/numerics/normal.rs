//! Standard normal distribution function and its log tail.
//!
//! `std_normal_cdf` goes through `erfc`, which keeps full relative accuracy
//! in the lower tail until the result underflows. `std_normal_log_tail`
//! switches to the continued fraction of the Mills ratio above
//! [`LOG_TAIL_SWITCH`], so tail ratios stay finite far beyond the underflow
//! point of `Φ` itself.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Above this argument the log tail is computed from the Mills ratio.
pub const LOG_TAIL_SWITCH: f64 = 8.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MILLS_CF_DEPTH: usize = 160;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`, the standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("normal cdf argument {x} is not finite")));
    }
    Ok(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
}

/// `ln Φ(-x)` for `x >= 0`.
pub fn std_normal_log_tail(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!(
            "log tail argument must be finite and nonnegative, got {x}"
        )));
    }
    if x <= LOG_TAIL_SWITCH {
        return Ok((0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln());
    }
    Ok(-0.5 * x * x - LN_SQRT_2PI + mills_ratio_cf(x).ln())
}

/// Logs of the Gaussian tail bounds `x/(1+x²)·φ(x) ≤ Φ(-x) ≤ φ(x)/x`, `x > 0`.
pub fn mills_log_bounds(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("Mills bounds need finite x > 0, got {x}")));
    }
    let log_pdf = -0.5 * x * x - LN_SQRT_2PI;
    Ok((x.ln() - x.mul_add(x, 1.0).ln() + log_pdf, log_pdf - x.ln()))
}

/// Mills ratio `Φ(-x)/φ(x)` by backward evaluation of
/// `1/(x + 1/(x + 2/(x + 3/(x + ...))))`. Accurate for `x` above a few units.
fn mills_ratio_cf(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=MILLS_CF_DEPTH).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}

#[cfg(test)]
mod tests {
    use super::*;

    // 50-digit reference values (mpmath ncdf / log ncdf).
    const CDF_REF: &[(f64, f64)] = &[
        (-1.0, 0.158_655_253_931_457_05),
        (-1.8808, 0.029_999_565_088_752_158),
        (1.3, 0.903_199_515_414_389_7),
        (-5.0, 2.866_515_718_791_939e-7),
        (-7.5, 3.190_891_672_910_896_3e-14),
        (2.5, 0.993_790_334_674_224),
        (-0.03, 0.488_033_526_585_887_36),
    ];

    const LOG_TAIL_REF: &[(f64, f64)] = &[
        (1.0, -1.841_021_645_009_263_5),
        (5.0, -15.064_998_393_988_726),
        (8.0, -35.013_437_159_914_55),
        (8.5, -39.197_396_428_217_67),
        (10.0, -53.231_285_150_512_47),
        (20.0, -203.917_155_371_097_26),
        (30.0, -454.321_243_956_343_2),
        (40.0, -804.608_442_013_753_8),
    ];

    #[test]
    fn cdf_matches_high_precision_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        for &(x, want) in CDF_REF {
            let got = std_normal_cdf(x).unwrap();
            assert!((got - want).abs() <= 1e-14, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn log_tail_matches_high_precision_values() {
        assert!((std_normal_log_tail(0.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        for &(x, want) in LOG_TAIL_REF {
            let got = std_normal_log_tail(x).unwrap();
            assert!(((got - want) / want).abs() <= 1e-13, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn log_tail_is_continuous_across_the_switch() {
        let below = std_normal_log_tail(LOG_TAIL_SWITCH).unwrap();
        let above = std_normal_log_tail(LOG_TAIL_SWITCH + 1e-12).unwrap();
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
        assert!(std_normal_log_tail(-0.1).is_err());
        assert!(std_normal_log_tail(f64::NAN).is_err());
    }

    #[test]
    fn symmetry_on_a_grid() {
        for i in 0..=400 {
            let x = -10.0 + 0.05 * i as f64;
            let s = std_normal_cdf(x).unwrap() + std_normal_cdf(-x).unwrap();
            assert!((s - 1.0).abs() <= 1e-14, "x={x}");
        }
    }
}
