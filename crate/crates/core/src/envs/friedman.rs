//! Friedman benchmark functions on the unit cube.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// `10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5` on the first five coordinates.
pub fn friedman1(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

fn rescaled(x: &[f64]) -> (f64, f64, f64, f64) {
    (
        100.0 * x[0],
        40.0 * PI + 520.0 * PI * x[1],
        x[2],
        1.0 + 10.0 * x[3],
    )
}

/// Friedman #2 after rescaling the first four coordinates from `[0, 1]`.
pub fn friedman2(x: &[f64]) -> f64 {
    let (x1, x2, x3, x4) = rescaled(x);
    let inner = x2 * x3 - 1.0 / (x2 * x4);
    (x1 * x1 + inner * inner).sqrt() / 125.0
}

/// Friedman #3 after rescaling. At `x1' = 0` the arctangent takes its
/// limit `sign(numerator) * pi / 2` (zero when the numerator vanishes).
pub fn friedman3(x: &[f64]) -> f64 {
    let (x1, x2, x3, x4) = rescaled(x);
    let num = x2 * x3 - 1.0 / (x2 * x4);
    let angle = if x1 == 0.0 {
        if num > 0.0 {
            FRAC_PI_2
        } else if num < 0.0 {
            -FRAC_PI_2
        } else {
            0.0
        }
    } else {
        (num / x1).atan()
    };
    angle / 0.1
}

/// How the second arm's mean relates to the first in the Friedman scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm2Variant {
    /// Friedman #1 plus `5 sin(pi x1 x2)`.
    Shared,
    /// Friedman #1 on the reversed feature vector.
    Disjoint,
}

/// Mean reward of the second arm. Both variants build on Friedman #1.
pub fn arm2_mean(variant: Arm2Variant, x: &[f64]) -> f64 {
    match variant {
        Arm2Variant::Shared => friedman1(x) + 5.0 * (PI * x[0] * x[1]).sin(),
        Arm2Variant::Disjoint => {
            let reversed: Vec<f64> = x.iter().rev().take(5).copied().collect();
            friedman1(&reversed)
        }
    }
}
