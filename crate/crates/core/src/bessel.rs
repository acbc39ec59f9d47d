//! Modified Bessel functions of the first kind, `I_k(x)` for complex `x`.
//!
//! Two independent routes produce the sequence `I_0(x) .. I_kmax(x)`:
//!
//! * [`bessel_sequence`] runs the three-term recurrence
//!   `I_{k-1} = (2k/x) I_k + I_{k+1}` downward from a start index well above
//!   both `kmax` and `|x|`, then normalizes with `exp(x) = I_0 + 2 sum I_k`.
//!   `I_k` is the minimal solution of the recurrence, so the downward sweep is
//!   stable and every order keeps full relative precision, including orders
//!   far below `exp(|x|)`.
//! * [`bessel_sequence_trapezoid`] samples `exp(x cos t)` on a uniform grid of
//!   the full period and reads every order off one FFT (the periodic
//!   trapezoidal rule applied to the integral form). The point count doubles
//!   until two successive sequences agree. Accuracy is absolute with respect to
//!   `exp(|Re x|)`, which is exactly what block exponentials need.
//!
//! For `|Re x|` large both routes work with `exp(-|Re x|) I_k(x)` internally and
//! only rescale when the caller asks for unscaled values.

use crate::{Error, Result, C64};
use rustfft::FftPlanner;

/// Values `I_0(x) .. I_kmax(x)` for one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselSequence {
    argument: C64,
    values: Vec<C64>,
}

impl BesselSequence {
    pub fn argument(&self) -> C64 {
        self.argument
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Largest order held.
    pub fn kmax(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<C64> {
        self.values.get(k).copied()
    }
}

/// `exp(-|Re x|) I_k(x)` for `k = 0..=kmax`, together with the exponent that was
/// factored out.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledBesselSequence {
    pub argument: C64,
    /// `|Re x|`; multiply each value by `exp(log_scale)` to unscale.
    pub log_scale: f64,
    pub values: Vec<C64>,
}

impl ScaledBesselSequence {
    /// Multiplies the scale back in, failing if any value leaves the
    /// representable range.
    pub fn unscale(self) -> Result<BesselSequence> {
        let ScaledBesselSequence {
            argument,
            log_scale,
            mut values,
        } = self;
        if log_scale > 0.0 {
            // two half factors so that exp() itself does not overflow first
            let half = (0.5 * log_scale).exp();
            for v in values.iter_mut() {
                *v = *v * half * half;
            }
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::overflow(format!(
                "I_{k}({argument}) is not representable in double precision"
            )));
        }
        Ok(BesselSequence { argument, values })
    }
}

/// `I_order(x)`.
pub fn bessel_i(order: usize, x: C64) -> Result<C64> {
    let seq = bessel_sequence(order, x)?;
    Ok(seq.values[order])
}

/// `I_0(x) .. I_kmax(x)` in `O(kmax + |x|)` work.
pub fn bessel_sequence(kmax: usize, x: C64) -> Result<BesselSequence> {
    bessel_sequence_scaled(kmax, x)?.unscale()
}

/// `exp(-|Re x|) I_k(x)` for `k = 0..=kmax`; never overflows.
pub fn bessel_sequence_scaled(kmax: usize, x: C64) -> Result<ScaledBesselSequence> {
    check_argument(x)?;
    let log_scale = x.re.abs();
    if x == C64::new(0.0, 0.0) {
        let mut values = vec![C64::new(0.0, 0.0); kmax + 1];
        values[0] = C64::new(1.0, 0.0);
        return Ok(ScaledBesselSequence {
            argument: x,
            log_scale,
            values,
        });
    }
    // I_k(-x) = (-1)^k I_k(x): keep the normalization sum free of cancellation.
    let reflect = x.re < 0.0;
    let w = if reflect { -x } else { x };
    let mut values = downward_recurrence(kmax, w);
    if reflect {
        for v in values.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
    }
    Ok(ScaledBesselSequence {
        argument: x,
        log_scale,
        values,
    })
}

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Start order for the downward sweep, rounded up to a multiple of 64 so that
/// nearby `kmax` values run the identical recurrence.
fn start_index(kmax: usize, modulus: f64) -> usize {
    let base = modulus.ceil() as usize + 60 + (4.0 * modulus.sqrt()).ceil() as usize;
    base.max(kmax + 40).next_multiple_of(64)
}

/// Miller's algorithm for `Re w >= 0`, `w != 0`. Returns `exp(-Re w) I_k(w)`.
fn downward_recurrence(kmax: usize, w: C64) -> Vec<C64> {
    let start = start_index(kmax, w.norm());
    let inv_w = w.inv();
    let mut values = vec![C64::new(0.0, 0.0); kmax + 1];

    // y_{start+1} = 0, y_start = 1
    let mut upper = C64::new(0.0, 0.0);
    let mut current = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut k = start;
    loop {
        if k <= kmax {
            values[k] = current;
        }
        if k == 0 {
            sum += current;
            break;
        }
        sum += current * 2.0;
        let lower = current * (2.0 * k as f64) * inv_w + upper;
        upper = current;
        current = lower;
        k -= 1;
        if current.norm() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            upper *= RESCALE_BY;
            sum *= RESCALE_BY;
            // only orders k.. are stored so far
            for v in values.iter_mut().skip(k.min(kmax + 1)) {
                *v *= RESCALE_BY;
            }
        }
    }

    // exp(w) = sum, so exp(-Re w) I_k = exp(i Im w) y_k / sum
    let factor = C64::new(0.0, w.im).exp() * reciprocal(sum);
    for v in values.iter_mut() {
        *v *= factor;
    }
    values
}

/// `1/z` without forming `|z|^2`, which overflows long before `z` does.
fn reciprocal(z: C64) -> C64 {
    let m = z.norm();
    (z / m).conj() / m
}

/// Periodic trapezoidal rule for `I_k(x) = (1/pi) int_0^pi exp(x cos t) cos(kt) dt`.
///
/// Starts at 64 points on the full period (or the next power of two above
/// `2 kmax + 2`) and doubles until two successive sequences differ by less
/// than `1e-14` relative to the largest scaled value.
pub fn bessel_sequence_trapezoid(kmax: usize, x: C64) -> Result<BesselSequence> {
    bessel_sequence_trapezoid_scaled(kmax, x)?.unscale()
}

/// Scaled variant of [`bessel_sequence_trapezoid`].
pub fn bessel_sequence_trapezoid_scaled(kmax: usize, x: C64) -> Result<ScaledBesselSequence> {
    const REL_TOL: f64 = 1e-14;
    const MAX_POINTS: usize = 1 << 24;
    check_argument(x)?;
    let log_scale = x.re.abs();
    let mut points = 64usize.max((2 * kmax + 2).next_power_of_two());
    let mut planner = FftPlanner::<f64>::new();
    let mut previous = trapezoid_pass(&mut planner, kmax, x, log_scale, points);
    loop {
        points *= 2;
        if points > MAX_POINTS {
            return Err(Error::invalid(format!(
                "trapezoidal rule for I_k({x}) did not converge within {MAX_POINTS} points"
            )));
        }
        let next = trapezoid_pass(&mut planner, kmax, x, log_scale, points);
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = next
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        previous = next;
        if diff <= REL_TOL * scale.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(ScaledBesselSequence {
        argument: x,
        log_scale,
        values: previous,
    })
}

fn trapezoid_pass(
    planner: &mut FftPlanner<f64>,
    kmax: usize,
    x: C64,
    log_scale: f64,
    points: usize,
) -> Vec<C64> {
    let step = std::f64::consts::TAU / points as f64;
    let mut buffer: Vec<C64> = (0..points)
        .map(|j| (x * (step * j as f64).cos() - log_scale).exp())
        .collect();
    planner.plan_fft_forward(points).process(&mut buffer);
    let inv = 1.0 / points as f64;
    buffer.truncate(kmax + 1);
    for v in buffer.iter_mut() {
        *v *= inv;
    }
    buffer
}

fn check_argument(x: C64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("Bessel argument must be finite, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    /// Power series `sum (x/2)^{n+2s} / (s! (n+s)!)`, the independent oracle.
    fn series(n: usize, x: C64, terms: usize) -> C64 {
        let half = x * 0.5;
        let mut term = C64::new(1.0, 0.0);
        for j in 1..=n {
            term = term * half / j as f64;
        }
        let mut sum = term;
        let q = half * half;
        for s in 0..terms {
            term = term * q / (((s + 1) * (n + s + 1)) as f64);
            sum += term;
        }
        sum
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn trivial_values_at_zero() {
        assert_eq!(bessel_i(0, c64(0.0, 0.0)).unwrap(), c64(1.0, 0.0));
        assert_eq!(bessel_i(3, c64(0.0, 0.0)).unwrap(), c64(0.0, 0.0));
        let seq = bessel_sequence(2, c64(0.0, 0.0)).unwrap();
        assert_eq!(seq.values(), &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
    }

    #[test]
    fn i0_of_one_matches_series() {
        let oracle = series(0, c64(1.0, 0.0), 30);
        assert!((oracle.re - 1.266_065_877_752_008_4).abs() < 1e-15);
        let v = bessel_i(0, c64(1.0, 0.0)).unwrap();
        assert!(rel(v, oracle) < 4.0 * f64::EPSILON);
    }

    #[test]
    fn first_two_orders_at_two() {
        let seq = bessel_sequence(1, c64(2.0, 0.0)).unwrap();
        let o0 = series(0, c64(2.0, 0.0), 40);
        let o1 = series(1, c64(2.0, 0.0), 40);
        assert!((o0.re - 2.279_585_302_336_067).abs() < 1e-14);
        assert!((o1.re - 1.590_636_854_637_329).abs() < 1e-14);
        assert!(rel(seq.values()[0], o0) < 4.0 * f64::EPSILON);
        assert!(rel(seq.values()[1], o1) < 4.0 * f64::EPSILON);
    }

    #[test]
    fn strictly_decreasing_for_positive_argument() {
        let seq = bessel_sequence(60, c64(2.0, 0.0)).unwrap();
        let v = seq.values();
        assert!(v[60].re < v[0].re);
        for k in 0..60 {
            assert!(v[k + 1].re < v[k].re, "k = {k}");
            assert!(v[k].re > 0.0 && v[k].im == 0.0);
        }
        // I_60(2) from a 40-digit reference
        assert!(rel(v[60], c64(1.221_641_538_764_092_8e-82, 0.0)) < 1e-13);
    }

    #[test]
    fn high_precision_reference_values() {
        // 40-digit values, computed independently
        let cases = [
            (5, c64(10.0, 0.0), c64(777.188_286_403_259_96, 0.0)),
            (10, c64(50.0, 0.0), c64(1.071_597_159_477_637e20, 0.0)),
            (3, c64(50.0, 0.0), c64(2.677_764_138_883_941_3e20, 0.0)),
            (0, c64(50.0, 0.0), c64(2.932_553_783_849_336_3e20, 0.0)),
            (20, c64(20.0, 0.0), c64(3188.750_328_853_614_8, 0.0)),
        ];
        for (k, x, want) in cases {
            let got = bessel_i(k, x).unwrap();
            assert!(
                rel(got, want) <= 10.0 * f64::EPSILON,
                "I_{k}({x}) = {got}, want {want}, rel {}",
                rel(got, want)
            );
        }
        let complex_cases = [
            (7, c64(3.0, 4.0), c64(0.056_459_062_617_877_166, 0.082_983_612_356_033_955)),
            (2, c64(-20.0, 1.0), c64(21_892_051.106_351_915, -32_635_604.746_242_34)),
            (4, c64(1.5, -0.5), c64(0.003_748_606_039_659_763_7, -0.017_585_982_412_258_488)),
            (0, c64(0.0, 100.0), c64(0.019_985_850_304_223_122, 0.0)),
            (37, c64(0.0, 100.0), c64(0.0, -0.051_711_347_233_423_795)),
        ];
        for (k, x, want) in complex_cases {
            let got = bessel_i(k, x).unwrap();
            assert!(rel(got, want) < 1e-13, "I_{k}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn oscillatory_region_of_large_imaginary_argument() {
        let x = c64(0.0, 2000.0);
        let seq = bessel_sequence(2001, x).unwrap();
        let want_101 = c64(0.0, -0.009_646_040_463_139_91);
        let want_1999 = c64(0.0, -0.038_087_430_624_360_076);
        assert!((seq.values()[101] - want_101).norm() < 1e-12);
        assert!((seq.values()[1999] - want_1999).norm() < 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        let err = bessel_sequence(3, c64(800.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
        // the scaled form is always available
        let scaled = bessel_sequence_scaled(3, c64(800.0, 0.0)).unwrap();
        assert!(scaled.values.iter().all(|v| v.is_finite() && v.re > 0.0));
        // large but representable
        let v = bessel_i(0, c64(300.0, 0.0)).unwrap();
        assert!(rel(v, c64(4.475_847_367_935_052e128, 0.0)) < 1e-13);
    }

    #[test]
    fn non_finite_argument_is_rejected() {
        assert!(matches!(
            bessel_i(0, c64(f64::NAN, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            bessel_sequence_trapezoid(2, c64(0.0, f64::INFINITY)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sequence_agrees_with_single_evaluations() {
        for x in [c64(2.0, 0.0), c64(0.3, -1.7), c64(-4.0, 2.5), c64(12.0, 0.0)] {
            let seq = bessel_sequence(30, x).unwrap();
            for k in 0..=30 {
                let single = bessel_i(k, x).unwrap();
                let v = seq.values()[k];
                assert!(
                    (v - single).norm() <= 2.0 * f64::EPSILON * single.norm(),
                    "k = {k}, x = {x}"
                );
            }
        }
    }

    #[test]
    fn normalization_identity() {
        for i in 0..=40 {
            let x = -5.0 + 0.25 * i as f64;
            let seq = bessel_sequence(60, c64(x, 0.0)).unwrap();
            let v = seq.values();
            let sum: f64 = v[0].re + 2.0 * v[1..].iter().map(|c| c.re).sum::<f64>();
            assert!((sum - x.exp()).abs() <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn upper_bound_by_power_times_exponential() {
        for i in 1..=40 {
            let x = 0.25 * i as f64;
            let seq = bessel_sequence(20, c64(x, 0.0)).unwrap();
            let mut pow_over_fact = 1.0;
            for n in 0..=20 {
                if n > 0 {
                    pow_over_fact *= x / (2.0 * n as f64);
                }
                assert!(seq.values()[n].re < pow_over_fact * x.exp(), "n = {n}, x = {x}");
            }
        }
    }

    #[test]
    fn recurrence_matches_series_and_quadrature() {
        let args = [
            c64(1.0, 0.0),
            c64(7.5, 0.0),
            c64(20.0, 0.0),
            c64(3.0, 4.0),
            c64(-2.0, 9.0),
            c64(0.0, -15.0),
            c64(-12.0, -3.0),
        ];
        for x in args {
            let rec = bessel_sequence(12, x).unwrap();
            let quad = bessel_sequence_trapezoid(12, x).unwrap();
            for k in 0..=12 {
                let s = series(k, x, 120);
                let r = rec.values()[k];
                let q = quad.values()[k];
                // absolute scale of the series terms
                let scale = series(k, c64(x.norm(), 0.0), 120).re;
                assert!((r - s).norm() <= 1e-12 * scale, "rec k={k} x={x}");
                assert!((q - r).norm() <= 1e-12 * x.re.abs().exp(), "quad k={k} x={x}");
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        for x in [c64(3.0, 4.0), c64(-1.0, 0.5), c64(0.2, -30.0)] {
            let a = bessel_sequence(25, x).unwrap();
            let b = bessel_sequence(25, x.conj()).unwrap();
            for k in 0..=25 {
                let lhs = b.values()[k];
                let rhs = a.values()[k].conj();
                assert!((lhs - rhs).norm() <= 4.0 * f64::EPSILON * rhs.norm() + f64::MIN_POSITIVE);
            }
        }
    }

    #[test]
    fn reflection_in_argument() {
        let x = c64(1.3, 0.7);
        let p = bessel_sequence(10, x).unwrap();
        let m = bessel_sequence(10, -x).unwrap();
        for k in 0..=10 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((m.values()[k] - p.values()[k] * sign).norm() < 1e-15 * p.values()[0].norm());
        }
    }
}
