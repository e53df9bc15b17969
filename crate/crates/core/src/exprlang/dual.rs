use std::ops::{Add, Div, Mul, Neg, Sub};

/// A first-order dual number `value + derivative·ε` with `ε² = 0`.
///
/// The derivative is taken with respect to a single seed variable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualValue {
    pub value: f64,
    pub derivative: f64,
}

impl DualValue {
    pub const fn new(value: f64, derivative: f64) -> Self {
        DualValue { value, derivative }
    }

    pub const fn constant(value: f64) -> Self {
        DualValue { value, derivative: 0.0 }
    }

    pub const fn variable(value: f64) -> Self {
        DualValue { value, derivative: 1.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.derivative.is_finite()
    }

    /// Square root. The derivative term is skipped when the tangent is zero,
    /// so `sqrt` of a constant zero stays finite.
    pub fn sqrt(self) -> Self {
        let v = self.value.sqrt();
        let d = if self.derivative == 0.0 { 0.0 } else { self.derivative / (2.0 * v) };
        DualValue::new(v, d)
    }

    pub fn sin(self) -> Self {
        DualValue::new(self.value.sin(), self.derivative * self.value.cos())
    }

    pub fn cos(self) -> Self {
        DualValue::new(self.value.cos(), -self.derivative * self.value.sin())
    }

    pub fn ln(self) -> Self {
        DualValue::new(self.value.ln(), self.derivative / self.value)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        DualValue::new(e, self.derivative * e)
    }

    /// `self^rhs` for a positive base or an integer-valued constant exponent.
    pub fn pow(self, rhs: Self) -> Self {
        let value = real_pow(self.value, rhs.value);
        let mut derivative = 0.0;
        if self.derivative != 0.0 {
            derivative += rhs.value * real_pow(self.value, rhs.value - 1.0) * self.derivative;
        }
        if rhs.derivative != 0.0 && self.value != 0.0 {
            derivative += value * self.value.ln() * rhs.derivative;
        }
        DualValue::new(value, derivative)
    }
}

/// `base^exponent` using exact repeated multiplication for integer exponents.
pub(crate) fn real_pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl Add for DualValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        DualValue::new(self.value + rhs.value, self.derivative + rhs.derivative)
    }
}

impl Sub for DualValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        DualValue::new(self.value - rhs.value, self.derivative - rhs.derivative)
    }
}

impl Mul for DualValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        DualValue::new(
            self.value * rhs.value,
            self.derivative * rhs.value + self.value * rhs.derivative,
        )
    }
}

impl Div for DualValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        DualValue::new(
            self.value / rhs.value,
            (self.derivative * rhs.value - self.value * rhs.derivative) / (rhs.value * rhs.value),
        )
    }
}

impl Neg for DualValue {
    type Output = Self;
    fn neg(self) -> Self {
        DualValue::new(-self.value, -self.derivative)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = DualValue::variable(3.0);
        let c = DualValue::constant(2.0);
        assert_eq!(x * x, DualValue::new(9.0, 6.0));
        assert_eq!(c / x, DualValue::new(2.0 / 3.0, -2.0 / 9.0));
        assert_eq!(-(x - c), DualValue::new(-1.0, -1.0));
    }

    #[test]
    fn elementary_functions() {
        let x = DualValue::variable(0.5);
        assert!((x.sin().derivative - 0.5f64.cos()).abs() < 1e-15);
        assert!((x.cos().derivative + 0.5f64.sin()).abs() < 1e-15);
        assert!((x.ln().derivative - 2.0).abs() < 1e-15);
        assert!((x.exp().derivative - 0.5f64.exp()).abs() < 1e-15);
        assert!((x.sqrt().derivative - 0.5 / 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pow_with_variable_exponent() {
        // d/dx x^x = x^x (ln x + 1)
        let x = DualValue::variable(2.0);
        let p = x.pow(x);
        assert_eq!(p.value, 4.0);
        assert!((p.derivative - 4.0 * (2f64.ln() + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn sqrt_of_constant_zero_is_finite() {
        assert!(DualValue::constant(0.0).sqrt().is_finite());
        assert!(!DualValue::variable(0.0).sqrt().is_finite());
    }
}
