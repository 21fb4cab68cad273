//! Compensated summation and shared numeric constants.

use num_complex::Complex64;

/// Euler–Mascheroni constant, 20 decimal digits.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.57721566490153286061;

/// Neumaier-compensated accumulator. The running error term is carried
/// separately, so sums are accurate to ~2 ulp of the sum of absolute
/// values regardless of term count or ordering within a fixed schedule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Componentwise compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_lost_low_bits() {
        let mut s = Kahan::new();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-18);
        }
        // Naive summation would return exactly 1.0 here.
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-16);
    }

    #[test]
    fn kahan_handles_sign_cancellation() {
        let mut s = Kahan::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}
