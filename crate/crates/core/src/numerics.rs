//! Scalar special functions and adaptive quadrature.
//!
//! Only the functions the performance formulas actually need: the Gaussian
//! tail probability and its inverse, the exponential integral
//! `Γ(0,x) = E₁(x)`, and a general-purpose adaptive Gauss-Kronrod
//! integrator with semi-infinite support.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

const SQRT_PI: f64 = 1.772453850905516;
const SQRT_2PI: f64 = 2.5066282746310002;
const EULER_GAMMA: f64 = 0.5772156649015329;

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Relative tolerance on the integral estimate.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Interval-split budget before giving up.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }
}

/// Errors from the numeric routines.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// Argument outside the mathematical domain of the function.
    Domain { what: &'static str, value: f64 },
    /// Adaptive quadrature exhausted its subdivision budget.
    NonConvergence { what: &'static str },
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericsError::Domain { what, value } => {
                write!(f, "domain error: {what} = {value}")
            }
            NumericsError::NonConvergence { what } => {
                write!(f, "quadrature did not converge: {what}")
            }
        }
    }
}

impl std::error::Error for NumericsError {}

/// Gaussian tail probability `Q(y) = (1/sqrt(2*pi)) * integral_y^inf exp(-z^2/2) dz`.
///
/// Strictly decreasing, range `(0, 1)`; saturates to exactly 0 or 1 in the
/// extreme tails where the result underflows f64.
pub fn q_function(y: f64) -> f64 {
    0.5 * erfc(y * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density, the derivative magnitude of [`q_function`].
fn normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / SQRT_2PI
}

/// Complementary error function via the regularized incomplete gamma pair
/// `erf(x) = P(1/2, x^2)`, series for small arguments and a Lentz continued
/// fraction for large ones.
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let z = x * x;
    if z < 1.5 {
        1.0 - gamma_p_half_series(z, x)
    } else {
        gamma_q_half_cf(z, x)
    }
}

/// `P(1/2, z)` by power series; `x = sqrt(z)` passed to avoid re-rooting.
fn gamma_p_half_series(z: f64, x: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let mut ap = 0.5;
    let mut term = 2.0; // 1/a
    let mut sum = term;
    for _ in 0..200 {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * x * (-z).exp() / SQRT_PI
}

/// `Q(1/2, z)` by modified Lentz continued fraction.
fn gamma_q_half_cf(z: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-290;
    let a = 0.5;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..300 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    // x * exp(-z) underflows to 0 beyond z ~ 745, which is the documented
    // tail saturation.
    x * (-z).exp() * h / SQRT_PI
}

/// Functional inverse of [`q_function`] on `(0, 1)`.
///
/// Newton iteration (the derivative is the normal density) with a bisection
/// bracket as safeguard; monotonicity makes the combination globally
/// convergent.
pub fn q_inverse(p: f64) -> Result<f64, NumericsError> {
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(NumericsError::Domain {
            what: "q_inverse probability",
            value: p,
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-q_inverse(1.0 - p)?);
    }
    // Root lies in (0, 45): q_function(45) underflows below the smallest
    // positive f64.
    let mut lo = 0.0_f64;
    let mut hi = 45.0_f64;
    let mut y = (-2.0 * (2.0 * p).ln()).max(0.0).sqrt().min(hi - 1.0);
    for _ in 0..200 {
        let f = q_function(y) - p;
        if f > 0.0 {
            lo = y; // q decreasing: estimate still left of the root
        } else if f < 0.0 {
            hi = y;
        } else {
            return Ok(y);
        }
        let mut next = y + f / normal_pdf(y);
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y.abs().max(1.0) {
            return Ok(next);
        }
        y = next;
    }
    Ok(y)
}

/// Upper incomplete gamma function at zero order,
/// `Γ(0, x) = integral_x^inf exp(-q)/q dq` (the exponential integral `E₁`).
///
/// Power series for `x <= 1`, continued fraction for `x > 1`.
pub fn upper_incomplete_gamma0(x: f64) -> Result<f64, NumericsError> {
    if x.is_nan() || x <= 0.0 {
        return Err(NumericsError::Domain {
            what: "upper_incomplete_gamma0 argument",
            value: x,
        });
    }
    if x <= 1.0 {
        // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
        let mut sum = 0.0;
        let mut term = 1.0; // x^k / k!
        let mut sign = 1.0;
        for k in 1..=60 {
            term *= x / k as f64;
            let contrib = sign * term / k as f64;
            sum += contrib;
            if contrib.abs() < sum.abs() * 1e-17 {
                break;
            }
            sign = -sign;
        }
        Ok(-EULER_GAMMA - x.ln() + sum)
    } else {
        // E1(x) = exp(-x) / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
        const FPMIN: f64 = 1e-290;
        let mut b = x + 1.0;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300 {
            let an = -(i as f64) * (i as f64);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok((-x).exp() * h)
    }
}

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss-Kronrod 15(7) panel with the QUADPACK-style error rescale.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0_f64; 14];
    for j in 0..7 {
        let abscissa = half * XGK[j];
        let f1 = f(center - abscissa);
        let f2 = f(center + abscissa);
        fv[j] = f1;
        fv[j + 7] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }
    res_gauss += WG[3] * f_center;

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[j + 7] - mean).abs());
    }

    let mut err = ((res_kronrod - res_gauss) * half).abs();
    res_asc *= half.abs();
    res_abs *= half.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    Segment {
        a,
        b,
        value: res_kronrod * half,
        error: err,
    }
}

/// Adaptive quadrature of `f` over `[lower, upper]`; `upper` may be
/// `f64::INFINITY`, in which case the range is mapped onto `[0, 1)` via
/// `z = lower + t/(1-t)` (the integrand must decay, which every integrand in
/// this crate does exponentially).
///
/// Returns an estimate within `max(abs_tol, rel_tol * |result|)` for smooth
/// decaying integrands, or [`NumericsError::NonConvergence`] once the
/// subdivision budget is spent.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    if upper.is_infinite() {
        let g = move |t: f64| {
            let u = 1.0 - t;
            let v = f(lower + t / u) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        return adaptive(&g, 0.0, 1.0, spec);
    }
    adaptive(&f, lower, upper, spec)
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(0.0);
    }
    let first = gk15(f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let mut splits = 0;
    while total_err > spec.abs_tol.max(spec.rel_tol * total.abs()) {
        if splits >= spec.max_subdivisions {
            return Err(NumericsError::NonConvergence {
                what: "max_subdivisions exhausted",
            });
        }
        let worst = heap.pop().expect("heap cannot be empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer splittable in f64; accept what we have.
            heap.push(worst);
            break;
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    /// Independent oracle: the Gaussian tail by direct quadrature of the
    /// density, never touching the erfc path.
    fn q_oracle(y: f64) -> f64 {
        integrate(|z| (-0.5 * z * z).exp() / SQRT_2PI, y, f64::INFINITY, &spec()).unwrap()
    }

    #[test]
    fn q_function_at_zero_is_half() {
        assert_eq!(q_function(0.0), 0.5);
    }

    #[test]
    fn q_function_far_tail_saturates() {
        assert!(q_function(40.0) <= 1e-300);
        assert!(q_function(-40.0) >= 1.0 - 1e-15);
    }

    #[test]
    fn q_function_at_one() {
        // Frozen from the quadrature oracle.
        let expected = 0.158655253931457;
        assert!((q_function(1.0) - expected).abs() < 1e-13);
        assert!((q_function(1.0) - q_oracle(1.0)).abs() < 1e-12);
    }

    #[test]
    fn q_function_matches_quadrature_oracle_on_grid() {
        for &y in &[-3.0, -1.7, -0.4, 0.3, 1.0, 2.5, 4.0, 6.0] {
            let q = q_function(y);
            let o = q_oracle(y);
            assert!(
                (q - o).abs() <= 1e-12 * o.abs().max(1e-12),
                "y={y}: {q} vs oracle {o}"
            );
        }
    }

    #[test]
    fn q_function_deep_tail_value() {
        // Q(10), needed at this magnitude by the sensing formulas.
        let q = q_function(10.0);
        assert!((q - 7.61985302416047e-24).abs() < 1e-36);
    }

    #[test]
    fn q_symmetry() {
        for i in 0..200 {
            let y = -8.0 + i as f64 * 0.08;
            let s = q_function(y) + q_function(-y);
            assert!((s - 1.0).abs() < 1e-12, "y={y}: {s}");
        }
    }

    #[test]
    fn q_strictly_decreasing_where_representable() {
        // Outside |y| ~ 8 the result saturates to 0/1 in f64.
        let mut prev = 1.0;
        for i in 0..=160 {
            let y = -8.0 + 0.1 * i as f64;
            let q = q_function(y);
            assert!(q < prev, "y={y}");
            prev = q;
        }
    }

    #[test]
    fn q_inverse_median() {
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
    }

    #[test]
    fn q_inverse_at_one_tenth() {
        // Frozen from a bisection oracle against q_function.
        let y = q_inverse(0.1).unwrap();
        assert!((y - 1.2815515655446004).abs() < 1e-10);

        // Independent coarse bisection oracle.
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid) > 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((y - 0.5 * (lo + hi)).abs() < 1e-10);
    }

    #[test]
    fn q_inverse_round_trip_example() {
        let y = q_inverse(q_function(2.3)).unwrap();
        assert!((y - 2.3).abs() < 1e-10);
    }

    #[test]
    fn q_inverse_is_functional_inverse_on_grid() {
        let mut p = 1e-10;
        while p < 1.0 - 1e-10 {
            let y = q_inverse(p).unwrap();
            let back = q_function(y);
            assert!(
                (back - p).abs() <= 1e-9 * p.max(1e-10),
                "p={p}: back={back}"
            );
            p *= 1.9;
            if p > 0.5 && p < 0.6 {
                p = 0.97; // also probe the upper branch
            }
        }
        let y = q_inverse(1.0 - 1e-10).unwrap();
        assert!((q_function(y) - (1.0 - 1e-10)).abs() < 1e-9);
    }

    #[test]
    fn q_inverse_domain_errors() {
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
        assert!(q_inverse(-0.2).is_err());
        assert!(q_inverse(f64::NAN).is_err());
    }

    #[test]
    fn gamma0_at_one() {
        // Frozen from adaptive quadrature of exp(-q)/q on [1, inf).
        let g = upper_incomplete_gamma0(1.0).unwrap();
        assert!((g - 0.21938393439552029).abs() < 1e-14);
        let oracle = integrate(|q| (-q).exp() / q, 1.0, f64::INFINITY, &spec()).unwrap();
        assert!((g - oracle).abs() < 1e-12);
    }

    #[test]
    fn gamma0_at_ten() {
        let g = upper_incomplete_gamma0(10.0).unwrap();
        assert!((g - 4.156968929685325e-6).abs() < 1e-16);
        let oracle = integrate(|q| (-q).exp() / q, 10.0, f64::INFINITY, &spec()).unwrap();
        assert!((g - oracle).abs() < 1e-14 + 1e-10 * oracle);
    }

    #[test]
    fn gamma0_monotone_decreasing() {
        assert!(
            upper_incomplete_gamma0(0.5).unwrap() > upper_incomplete_gamma0(1.0).unwrap()
        );
        let mut prev = f64::INFINITY;
        for i in 1..60 {
            let x = i as f64 * 0.25;
            let g = upper_incomplete_gamma0(x).unwrap();
            assert!(g > 0.0 && g < prev, "x={x}");
            prev = g;
        }
    }

    #[test]
    fn gamma0_scaled_by_exp_is_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..80 {
            let x = 0.05 * i as f64 * i as f64;
            let v = upper_incomplete_gamma0(x).unwrap() * x.exp();
            assert!(v < prev, "x={x}: {v} !< {prev}");
            prev = v;
        }
    }

    #[test]
    fn gamma0_domain_errors() {
        assert!(upper_incomplete_gamma0(0.0).is_err());
        assert!(upper_incomplete_gamma0(-1.0).is_err());
    }

    #[test]
    fn integrate_exponential_tail() {
        let v = integrate(|z| (-z).exp(), 0.0, f64::INFINITY, &spec()).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn integrate_zero_integrand() {
        let v = integrate(|_| 0.0, 0.0, 1.0, &spec()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn integrate_consistent_with_gamma0() {
        // integral_0^inf exp(-z)/(1+z) dz = e * Gamma(0, 1)
        let v = integrate(|z| (-z).exp() / (1.0 + z), 0.0, f64::INFINITY, &spec()).unwrap();
        let expected = std::f64::consts::E * upper_incomplete_gamma0(1.0).unwrap();
        assert!((v - 0.5963473623231946).abs() < 1e-10);
        assert!((v - expected).abs() < 1e-10);
    }

    #[test]
    fn integrate_finite_interval() {
        let v = integrate(|z| z * z, 0.0, 3.0, &spec()).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_reports_non_convergence() {
        let tight = QuadratureSpec {
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            max_subdivisions: 3,
        };
        let r = integrate(|z| (1000.0 * z).sin().abs(), 0.0, 1.0, &tight);
        assert!(matches!(r, Err(NumericsError::NonConvergence { .. })));
    }
}
