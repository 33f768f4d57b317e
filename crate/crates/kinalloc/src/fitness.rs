//! Personal fitness curves.
//!
//! Every curve maps total incoming investment to personal fitness. All four
//! families are nondecreasing and concave on `[0, ∞)` with `f(0) = 0`, so the
//! zero profile always has zero fitness and marginal returns never increase.

/// Tag identifying a fitness family, used by config files and generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessKind {
    Log,
    Power,
    SatExp,
    Linear,
}

/// A parametric personal-fitness curve.
///
/// * `Log`: `w·ln(1 + x/c)`, `c > 0`
/// * `Power`: `w·((x + c)^p − c^p)`, `c ≥ 0`, `p ∈ (0, 1)`
/// * `SatExp`: `w·(1 − e^(−x/c))`, `c > 0`
/// * `Linear`: `w·x`
///
/// `Power` with `offset == 0` has an unbounded marginal at zero; that case is
/// reported through [`Marginal::Infinite`], never as a garbage float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitnessFunction {
    Log {
        weight: f64,
        scale: f64,
    },
    Power {
        weight: f64,
        offset: f64,
        exponent: f64,
    },
    SatExp {
        weight: f64,
        scale: f64,
    },
    Linear {
        weight: f64,
    },
}

/// Value of a fitness derivative: finite, or +∞ at the zero-investment
/// singularity of `Power` with zero offset.
///
/// Ordering treats `Infinite` as greater than every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Marginal {
    Finite(f64),
    Infinite,
}

impl Marginal {
    pub fn is_infinite(self) -> bool {
        matches!(self, Marginal::Infinite)
    }

    /// Finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Marginal::Finite(v) => Some(v),
            Marginal::Infinite => None,
        }
    }

    /// Collapse to `f64`, mapping `Infinite` to IEEE +∞. Only for reporting;
    /// keep arithmetic on [`Marginal`] itself to avoid `∞ − ∞`.
    pub fn to_f64(self) -> f64 {
        match self {
            Marginal::Finite(v) => v,
            Marginal::Infinite => f64::INFINITY,
        }
    }

    /// Scale by a nonnegative relatedness coefficient, with `0 · ∞ = 0`: a
    /// target the source is unrelated to contributes nothing, however steep
    /// its fitness curve.
    pub fn scaled(self, factor: f64) -> Marginal {
        debug_assert!(factor >= 0.0);
        match self {
            Marginal::Finite(v) => Marginal::Finite(factor * v),
            Marginal::Infinite if factor == 0.0 => Marginal::Finite(0.0),
            Marginal::Infinite => Marginal::Infinite,
        }
    }

    pub fn max(self, other: Marginal) -> Marginal {
        match (self, other) {
            (Marginal::Infinite, _) | (_, Marginal::Infinite) => Marginal::Infinite,
            (Marginal::Finite(a), Marginal::Finite(b)) => Marginal::Finite(a.max(b)),
        }
    }

    /// True when the marginal is strictly positive (`Infinite` counts).
    pub fn is_positive(self) -> bool {
        match self {
            Marginal::Finite(v) => v > 0.0,
            Marginal::Infinite => true,
        }
    }
}

impl FitnessFunction {
    pub fn log(weight: f64, scale: f64) -> Self {
        FitnessFunction::Log { weight, scale }
    }

    pub fn power(weight: f64, offset: f64, exponent: f64) -> Self {
        FitnessFunction::Power {
            weight,
            offset,
            exponent,
        }
    }

    pub fn sat_exp(weight: f64, scale: f64) -> Self {
        FitnessFunction::SatExp { weight, scale }
    }

    pub fn linear(weight: f64) -> Self {
        FitnessFunction::Linear { weight }
    }

    pub fn kind(&self) -> FitnessKind {
        match self {
            FitnessFunction::Log { .. } => FitnessKind::Log,
            FitnessFunction::Power { .. } => FitnessKind::Power,
            FitnessFunction::SatExp { .. } => FitnessKind::SatExp,
            FitnessFunction::Linear { .. } => FitnessKind::Linear,
        }
    }

    /// Fitness at investment `x ≥ 0`. Panics on negative input.
    pub fn value(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "fitness evaluated at negative investment {x}");
        match *self {
            FitnessFunction::Log { weight, scale } => weight * (x / scale).ln_1p(),
            FitnessFunction::Power {
                weight,
                offset,
                exponent,
            } => weight * ((x + offset).powf(exponent) - offset.powf(exponent)),
            FitnessFunction::SatExp { weight, scale } => -weight * (-x / scale).exp_m1(),
            FitnessFunction::Linear { weight } => weight * x,
        }
    }

    /// Derivative `f'(x)` at `x ≥ 0`. Panics on negative input.
    pub fn marginal(&self, x: f64) -> Marginal {
        assert!(x >= 0.0, "marginal evaluated at negative investment {x}");
        match *self {
            FitnessFunction::Log { weight, scale } => Marginal::Finite(weight / (scale + x)),
            FitnessFunction::Power {
                weight,
                offset,
                exponent,
            } => {
                if x + offset == 0.0 {
                    Marginal::Infinite
                } else {
                    Marginal::Finite(weight * exponent * (x + offset).powf(exponent - 1.0))
                }
            }
            FitnessFunction::SatExp { weight, scale } => {
                Marginal::Finite(weight / scale * (-x / scale).exp())
            }
            FitnessFunction::Linear { weight } => Marginal::Finite(weight),
        }
    }

    /// Generalized inverse of the derivative: the smallest `x ≥ 0` with
    /// `f'(x) ≤ level`. Returns `None` for a `Linear` curve whose slope
    /// exceeds `level` (demand is unbounded there). Panics unless `level > 0`.
    pub fn marginal_inverse(&self, level: f64) -> Option<f64> {
        assert!(
            level > 0.0,
            "marginal_inverse requires a positive level, got {level}"
        );
        match *self {
            FitnessFunction::Log { weight, scale } => Some((weight / level - scale).max(0.0)),
            FitnessFunction::Power {
                weight,
                offset,
                exponent,
            } => {
                let filled = (weight * exponent / level).powf(1.0 / (1.0 - exponent));
                Some((filled - offset).max(0.0))
            }
            FitnessFunction::SatExp { weight, scale } => {
                Some((scale * (weight / (scale * level)).ln()).max(0.0))
            }
            FitnessFunction::Linear { weight } => {
                if level >= weight {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }

    /// Parameter problems, if any, phrased for validation reports.
    pub fn parameter_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let weight = match *self {
            FitnessFunction::Log { weight, .. }
            | FitnessFunction::Power { weight, .. }
            | FitnessFunction::SatExp { weight, .. }
            | FitnessFunction::Linear { weight } => weight,
        };
        if !(weight > 0.0 && weight.is_finite()) {
            issues.push(format!(
                "weight must be a positive finite number, got {weight}"
            ));
        }
        match *self {
            FitnessFunction::Log { scale, .. } | FitnessFunction::SatExp { scale, .. } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    issues.push(format!(
                        "scale must be a positive finite number, got {scale}"
                    ));
                }
            }
            FitnessFunction::Power {
                offset, exponent, ..
            } => {
                if !(offset >= 0.0 && offset.is_finite()) {
                    issues.push(format!(
                        "offset must be a nonnegative finite number, got {offset}"
                    ));
                }
                if !(exponent > 0.0 && exponent < 1.0) {
                    issues.push(format!(
                        "exponent must lie strictly between 0 and 1, got {exponent}"
                    ));
                }
            }
            FitnessFunction::Linear { .. } => {}
        }
        issues
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn every_kind_is_zero_at_zero() {
        let curves = [
            FitnessFunction::log(1.0, 1.0),
            FitnessFunction::power(2.0, 0.5, 0.3),
            FitnessFunction::power(1.0, 0.0, 0.5),
            FitnessFunction::sat_exp(3.0, 2.0),
            FitnessFunction::linear(0.7),
        ];
        for f in curves {
            assert_eq!(f.value(0.0), 0.0, "{f:?} must vanish at zero");
        }
    }

    #[test]
    fn log_marginal_is_inverse_shifted() {
        // f'(x) = 1/(1+x) for w = c = 1
        let f = FitnessFunction::log(1.0, 1.0);
        assert_eq!(f.marginal(1.0), Marginal::Finite(0.5));
        assert_eq!(f.marginal(0.0), Marginal::Finite(1.0));
    }

    #[test]
    fn linear_marginal_is_constant() {
        let f = FitnessFunction::linear(2.0);
        for x in [0.0, 0.3, 7.0, 1e6] {
            assert_eq!(f.marginal(x), Marginal::Finite(2.0));
        }
    }

    #[test]
    fn sat_exp_marginal_at_zero() {
        // f'(x) = e^{-x} for w = c = 1
        let f = FitnessFunction::sat_exp(1.0, 1.0);
        assert_eq!(f.marginal(0.0), Marginal::Finite(1.0));
        let Marginal::Finite(m) = f.marginal(1.0) else {
            panic!()
        };
        assert!((m - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn power_without_offset_has_infinite_marginal_at_zero() {
        let f = FitnessFunction::power(1.0, 0.0, 0.5);
        assert!(f.marginal(0.0).is_infinite());
        let Marginal::Finite(m) = f.marginal(4.0) else {
            panic!()
        };
        assert!((m - 0.25).abs() < 1e-15, "0.5 * 4^-0.5 = 0.25, got {m}");
    }

    #[test]
    fn marginal_inverse_examples() {
        let log = FitnessFunction::log(1.0, 1.0);
        assert_eq!(log.marginal_inverse(0.5), Some(1.0));
        // level at or above f'(0) hits the boundary of the generalized inverse
        assert_eq!(log.marginal_inverse(1.0), Some(0.0));
        assert_eq!(log.marginal_inverse(3.0), Some(0.0));

        let root = FitnessFunction::power(1.0, 0.0, 0.5);
        let x = root.marginal_inverse(0.5).unwrap();
        assert!(
            (x - 1.0).abs() < 1e-12,
            "inverting 0.5·x^-0.5 = 0.5 gives 1, got {x}"
        );

        let flat = FitnessFunction::linear(2.0);
        assert_eq!(flat.marginal_inverse(2.0), Some(0.0));
        assert_eq!(flat.marginal_inverse(2.5), Some(0.0));
        assert_eq!(flat.marginal_inverse(1.9), None);
    }

    #[test]
    #[should_panic(expected = "negative investment")]
    fn value_rejects_negative_input() {
        FitnessFunction::log(1.0, 1.0).value(-0.1);
    }

    #[test]
    #[should_panic(expected = "negative investment")]
    fn marginal_rejects_negative_input() {
        FitnessFunction::linear(1.0).marginal(-1e-9);
    }

    #[test]
    #[should_panic(expected = "positive level")]
    fn marginal_inverse_rejects_nonpositive_level() {
        FitnessFunction::log(1.0, 1.0).marginal_inverse(0.0);
    }

    #[test]
    fn unrelated_infinite_marginal_scales_to_zero() {
        assert_eq!(Marginal::Infinite.scaled(0.0), Marginal::Finite(0.0));
        assert_eq!(Marginal::Infinite.scaled(0.5), Marginal::Infinite);
        assert_eq!(Marginal::Finite(2.0).scaled(0.5), Marginal::Finite(1.0));
    }

    #[test]
    fn parameter_issues_catch_bad_shapes() {
        assert!(FitnessFunction::log(1.0, 1.0).parameter_issues().is_empty());
        assert!(!FitnessFunction::log(0.0, 1.0).parameter_issues().is_empty());
        assert!(!FitnessFunction::log(1.0, 0.0).parameter_issues().is_empty());
        assert!(!FitnessFunction::power(1.0, -0.1, 0.5)
            .parameter_issues()
            .is_empty());
        assert!(!FitnessFunction::power(1.0, 1.0, 1.0)
            .parameter_issues()
            .is_empty());
        assert!(!FitnessFunction::sat_exp(1.0, f64::NAN)
            .parameter_issues()
            .is_empty());
        assert!(!FitnessFunction::linear(-2.0).parameter_issues().is_empty());
    }

    /// Central finite difference of `value` at `x`, step scaled to `x`.
    fn central_difference(f: &FitnessFunction, x: f64) -> f64 {
        let h = 1e-6 * x.max(1.0);
        (f.value(x + h) - f.value(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let curves = [
            FitnessFunction::log(2.5, 0.8),
            FitnessFunction::power(1.7, 0.6, 0.35),
            FitnessFunction::power(1.0, 0.0, 0.5),
            FitnessFunction::sat_exp(3.0, 2.2),
            FitnessFunction::linear(2.0),
        ];
        for f in &curves {
            for i in 0..100 {
                let x = 0.05 + 0.1 * i as f64;
                let m = f.marginal(x).finite().expect("finite away from zero");
                let fd = central_difference(f, x);
                assert!(
                    (m - fd).abs() <= 1e-6 * m.abs().max(1.0),
                    "{f:?} at {x}: analytic {m} vs central difference {fd}"
                );
            }
        }
    }

    fn sample_curves(weight: f64, scale: f64, exponent: f64) -> Vec<FitnessFunction> {
        vec![
            FitnessFunction::log(weight, scale),
            FitnessFunction::power(weight, scale, exponent),
            FitnessFunction::power(weight, 0.0, exponent),
            FitnessFunction::sat_exp(weight, scale),
            FitnessFunction::linear(weight),
        ]
    }

    proptest! {
        #[test]
        fn values_nondecreasing_marginals_nonincreasing(
            weight in 0.1f64..10.0,
            scale in 0.1f64..5.0,
            exponent in 0.2f64..0.8,
            a in 0.0f64..20.0,
            gap in 1e-6f64..20.0,
        ) {
            let b = a + gap;
            for f in sample_curves(weight, scale, exponent) {
                prop_assert!(f.value(a) <= f.value(b) + 1e-12, "{f:?} value decreased");
                let ma = f.marginal(a);
                let mb = f.marginal(b);
                match (ma, mb) {
                    (Marginal::Infinite, _) => {}
                    (Marginal::Finite(ma), Marginal::Finite(mb)) => {
                        prop_assert!(ma >= mb - 1e-12 * ma.abs().max(1.0), "{f:?} marginal increased: {ma} < {mb}");
                    }
                    (Marginal::Finite(_), Marginal::Infinite) => prop_assert!(false, "marginal blew up away from zero"),
                }
            }
        }

        /// Inverting the derivative and re-applying it round-trips on the
        /// strictly decreasing families.
        #[test]
        fn marginal_inverse_round_trip(
            weight in 0.1f64..10.0,
            scale in 0.1f64..5.0,
            exponent in 0.2f64..0.8,
            x in 1e-3f64..100.0,
        ) {
            let strict = [
                FitnessFunction::log(weight, scale),
                FitnessFunction::power(weight, scale, exponent),
                FitnessFunction::sat_exp(weight, scale),
            ];
            for f in strict {
                let level = f.marginal(x).finite().unwrap();
                // saturating curves underflow far out relative to the scale;
                // below the normal range the level itself has too few bits
                // for the inverse to be meaningful
                if level < f64::MIN_POSITIVE {
                    continue;
                }
                let back = f.marginal_inverse(level).unwrap();
                prop_assert!(
                    (back - x).abs() <= 1e-10 * x,
                    "{f:?}: inverse(marginal({x})) = {back}"
                );
            }
        }
    }
}
