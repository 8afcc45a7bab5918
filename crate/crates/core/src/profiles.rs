//! Named families of initial field profiles.
//!
//! Profiles provide analytic first and second derivatives when they have
//! them; anything else falls back to 4th-order central differences with step
//! `1e-4 *` support width.

/// A scalar profile of position with (at least approximate) compact support.
pub trait Profile: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// Interval outside which the profile is (numerically) zero.
    fn support(&self) -> (f64, f64);

    fn deriv(&self, x: f64) -> f64 {
        let h = self.fd_step();
        (-self.value(x + 2.0 * h) + 8.0 * self.value(x + h) - 8.0 * self.value(x - h)
            + self.value(x - 2.0 * h))
            / (12.0 * h)
    }

    fn deriv2(&self, x: f64) -> f64 {
        let h = self.fd_step();
        (-self.value(x + 2.0 * h) + 16.0 * self.value(x + h) - 30.0 * self.value(x)
            + 16.0 * self.value(x - h)
            - self.value(x - 2.0 * h))
            / (12.0 * h * h)
    }

    fn fd_step(&self) -> f64 {
        let (lo, hi) = self.support();
        let width = (hi - lo).abs();
        if width > 0.0 {
            1e-4 * width
        } else {
            1e-4
        }
    }
}

/// `amplitude * exp(-(x - center)^2 / (2 width^2))`.
///
/// Not compactly supported; the nominal support is six widths either side.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Profile for Gaussian {
    fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        self.amplitude * (-0.5 * u * u).exp()
    }

    fn support(&self) -> (f64, f64) {
        (self.center - 6.0 * self.width, self.center + 6.0 * self.width)
    }

    fn deriv(&self, x: f64) -> f64 {
        let d = x - self.center;
        -d / (self.width * self.width) * self.value(x)
    }

    fn deriv2(&self, x: f64) -> f64 {
        let w2 = self.width * self.width;
        let d = x - self.center;
        (d * d / (w2 * w2) - 1.0 / w2) * self.value(x)
    }
}

/// C^2 polynomial bump `amplitude * (1 - u^2)^3` on `|u| <= 1`,
/// `u = (x - center) / width`; identically zero outside.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    fn u(&self, x: f64) -> f64 {
        (x - self.center) / self.width
    }
}

impl Profile for Bump {
    fn value(&self, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - u * u;
            self.amplitude * q * q * q
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    fn deriv(&self, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - u * u;
            -6.0 * self.amplitude * u * q * q / self.width
        }
    }

    fn deriv2(&self, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - u * u;
            6.0 * self.amplitude * q * (5.0 * u * u - 1.0) / (self.width * self.width)
        }
    }
}

/// The zero profile.
#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Profile for Zero {
    fn value(&self, _x: f64) -> f64 {
        0.0
    }

    fn support(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn deriv(&self, _x: f64) -> f64 {
        0.0
    }

    fn deriv2(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Profile defined by a value closure only; derivatives via finite
/// differences. Mostly for tests and custom experiments.
pub struct FnProfile<F: Fn(f64) -> f64 + Send + Sync> {
    pub f: F,
    pub support: (f64, f64),
}

impl<F: Fn(f64) -> f64 + Send + Sync> Profile for FnProfile<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_c2_at_the_edge() {
        let b = Bump {
            center: 0.0,
            width: 1.0,
            amplitude: 2.0,
        };
        assert_eq!(b.value(1.0), 0.0);
        assert_eq!(b.deriv(1.0), 0.0);
        assert_eq!(b.deriv2(1.0), 0.0);
        assert_eq!(b.value(0.0), 2.0);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let g = Gaussian {
            center: 0.3,
            width: 0.7,
            amplitude: 1.5,
        };
        let b = Bump {
            center: -1.0,
            width: 2.0,
            amplitude: 0.8,
        };
        let fd_g = FnProfile {
            f: |x| g.value(x),
            support: g.support(),
        };
        let fd_b = FnProfile {
            f: |x| b.value(x),
            support: b.support(),
        };
        for &x in &[-2.0, -0.5, 0.0, 0.31, 1.2] {
            assert!((g.deriv(x) - fd_g.deriv(x)).abs() < 1e-8);
            assert!((g.deriv2(x) - fd_g.deriv2(x)).abs() < 1e-6);
            assert!((b.deriv(x) - fd_b.deriv(x)).abs() < 1e-8);
            assert!((b.deriv2(x) - fd_b.deriv2(x)).abs() < 1e-6);
        }
    }
}
