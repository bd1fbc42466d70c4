//! Log-domain scalar kernels for the vMF objective: f(z) = 2 sinh(z)/z, its
//! logarithm, the vMF normalizer, and the global scale subtracted from all
//! log-weights of a rotational problem instance.

const LOG_4PI: f64 = 2.5310242469692907; // ln(4 pi)

/// f(z) = 2 sinh(z) / z = (e^z - e^-z) / z, continuous at 0 with value 2.
/// Switches to a 4-term Taylor series below z = 1e-4.
pub fn f_rot(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 1e-4 {
        let z2 = z * z;
        2.0 * (1.0 + z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0)
    } else {
        (z.exp() - (-z).exp()) / z
    }
}

/// log f(z) = z + log(1 - e^-2z) - log z, stable for z up to 1e4 and beyond.
pub fn log_f_rot(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 1e-4 {
        f_rot(z).ln()
    } else {
        z + (-(-2.0 * z).exp_m1()).ln() - z.ln()
    }
}

/// log C(tau) with C(tau) = tau / (4 pi sinh tau).
pub fn log_vmf_const(tau: f64) -> f64 {
    debug_assert!(tau > 0.0);
    if tau < 1e-8 {
        // sinh tau ~ tau
        -LOG_4PI
    } else {
        tau.ln() - LOG_4PI - tau - ((-(-2.0 * tau).exp_m1()) / 2.0).ln()
    }
}

/// log(e^a - e^b) for a >= b; returns -inf when both are -inf.
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b);
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// A single global scale Z subtracted from all log-weights of one problem
/// instance. A constant positive scale e^-Z multiplies every objective,
/// lower, and upper bound alike, leaving all comparisons invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScale {
    pub log_factor: f64,
}

impl LogScale {
    pub fn new(log_factor: f64) -> Self {
        LogScale { log_factor }
    }

    pub fn none() -> Self {
        LogScale { log_factor: 0.0 }
    }

    /// Apply the scale to a log-domain weight.
    pub fn apply(&self, log_w: f64) -> f64 {
        log_w - self.log_factor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_rot_limit_at_zero() {
        assert!((f_rot(0.0) - 2.0).abs() < 1e-15);
        assert!((f_rot(1e-9) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn f_rot_at_one() {
        // 2 sinh(1) = e - 1/e
        let want = std::f64::consts::E - 1.0 / std::f64::consts::E;
        assert!((f_rot(1.0) - want).abs() < 1e-14);
        assert!((f_rot(1.0) - 2.3504024).abs() < 1e-7);
    }

    #[test]
    fn log_f_rot_large_argument() {
        let z = 700.0;
        let v = log_f_rot(z);
        assert!(v.is_finite());
        assert!((v - (700.0 - 700.0f64.ln())).abs() < 1e-12);
        assert!(log_f_rot(1e4).is_finite());
    }

    #[test]
    fn log_f_rot_matches_direct() {
        for &z in &[1e-6, 1e-3, 0.1, 1.0, 5.0, 50.0, 300.0] {
            let direct = f_rot(z).ln();
            assert!(
                (log_f_rot(z) - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                "z={z}"
            );
        }
    }

    #[test]
    fn f_rot_sqrt_convex() {
        // finite-difference second derivative of g(y) = f(sqrt(y)) on a log
        // grid; the step is floored so roundoff in g stays below the slack
        let g = |t: f64| f_rot(t.sqrt());
        let mut y = 1e-6_f64;
        while y < 1e2 {
            let h = (y * 1e-3).max(5e-3);
            let second = (g(y + 2.0 * h) - 2.0 * g(y + h) + g(y)) / (h * h);
            assert!(second >= -1e-9, "nonconvex at y={y}: {second}");
            y *= 1.7;
        }
    }

    #[test]
    fn vmf_const_limits() {
        // tau -> 0: uniform density 1/(4 pi)
        assert!((log_vmf_const(1e-10) - (1.0 / (4.0 * std::f64::consts::PI)).ln()).abs() < 1e-8);
        // tau = 1: direct evaluation
        let want = (1.0 / (4.0 * std::f64::consts::PI * 1.0f64.sinh())).ln();
        assert!((log_vmf_const(1.0) - want).abs() < 1e-12);
        assert!((log_vmf_const(1.0) - 0.0677f64.ln()).abs() < 1e-3);
        // tau = 1000: asymptotic form log tau - log 4pi - tau + log 2
        let v = log_vmf_const(1000.0);
        let asym = 1000.0f64.ln() - LOG_4PI - 1000.0 + 2.0f64.ln();
        assert!(v.is_finite());
        assert!((v - asym).abs() < 1e-12);
    }

    #[test]
    fn vmf_const_monotone_decreasing() {
        let mut prev = log_vmf_const(1e-3);
        let mut tau = 2e-3;
        while tau < 1e4 {
            let cur = log_vmf_const(tau);
            assert!(cur < prev);
            prev = cur;
            tau *= 1.8;
        }
    }

    #[test]
    fn log_diff_exp_agrees() {
        let cases: [(f64, f64); 4] =
            [(0.0, -1.0), (5.0, 4.9), (-3.0, -30.0), (2.0, f64::NEG_INFINITY)];
        for (a, b) in cases {
            let direct = (a.exp() - b.exp()).ln();
            assert!((log_diff_exp(a, b) - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }
}
