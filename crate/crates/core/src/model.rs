//! Problem data for the two equation families:
//!
//! * unidirectional: `u_tx + f'(u) u_xx + lambda f''(u) u_x^2 = 0` on the quarter plane,
//! * wave: `u_tt - c(u)^2 u_xx - 2 lambda c(u) c'(u) u_x^2 = 0` on the line.
//!
//! Analytic assumptions on the data are spot-checked on a uniform
//! validation lattice.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{Func1, Velocity};
use crate::math;

/// Number of samples in every validation lattice.
pub const VALIDATION_SAMPLES: usize = 4096;

/// Absolute tolerance for recognising `lambda = 1/2`.
pub const HALF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// lambda in (0, 1/3]
    Holder13,
    /// lambda = 1/2
    Half,
    /// lambda in (1/3, 1/2)
    Sobolev12,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParam {
    value: f64,
    regime: Regime,
}

impl LambdaParam {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::InvalidInput(format!("lambda = {value} must lie in (0, 1]")));
        }
        Ok(LambdaParam {
            value,
            regime: Self::classify(value),
        })
    }

    pub fn classify(value: f64) -> Regime {
        if (value - 0.5).abs() <= HALF_TOL {
            Regime::Half
        } else if value > 0.0 && value <= 1.0 / 3.0 + HALF_TOL {
            Regime::Holder13
        } else if value > 1.0 / 3.0 && value < 0.5 {
            Regime::Sobolev12
        } else {
            Regime::Unsupported
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Regime label for the second-order equation, where only `(0, 1/3]` is
    /// covered by the boundedness experiments.
    pub fn wave_regime(&self) -> Regime {
        match self.regime {
            Regime::Holder13 => Regime::Holder13,
            _ => Regime::Unsupported,
        }
    }

    /// Exponent `1/(2 lambda) - 1` of `cos^2` in the semi-linear systems.
    #[inline]
    pub fn cos_exponent(&self) -> f64 {
        0.5 / self.value - 1.0
    }

    /// Whether the auxiliary `S` system is Lipschitz (lambda in (0,1/3] or 1/2).
    pub fn has_s_system(&self) -> bool {
        matches!(self.regime, Regime::Holder13 | Regime::Half)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxModel {
    pub f: Func1,
    /// Sampled Lipschitz constant of `f''`.
    pub lipschitz_l: f64,
    /// Sampled bound on `|f''|`.
    pub f2_sup: f64,
}

impl FluxModel {
    /// Measures the Lipschitz constant of `f''` and the bound on `|f''|`
    /// over `u_range`.
    pub fn measure(f: Func1, u_range: (f64, f64)) -> Result<Self> {
        let mut l: f64 = 0.0;
        let mut sup: f64 = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for u in lattice(u_range) {
            let d2 = f.d2(u);
            if !d2.is_finite() {
                return Err(Error::NumericalDomain {
                    what: String::from("f''"),
                    at: u,
                });
            }
            sup = sup.max(d2.abs());
            if let Some((pu, pd)) = prev {
                l = l.max((d2 - pd).abs() / (u - pu));
            }
            prev = Some((u, d2));
        }
        Ok(FluxModel {
            f,
            lipschitz_l: l,
            f2_sup: sup,
        })
    }

    #[inline]
    pub fn d1(&self, u: f64) -> f64 {
        self.f.d1(u)
    }

    #[inline]
    pub fn d2(&self, u: f64) -> f64 {
        self.f.d2(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedModel {
    pub c: Func1,
    pub c_min: f64,
    pub c_max: f64,
    /// Sampled bound on `|c'|`.
    pub dc_sup: f64,
}

impl SpeedModel {
    pub fn measure(c: Func1, u_range: (f64, f64)) -> Result<Self> {
        let mut c_min = f64::INFINITY;
        let mut c_max = f64::NEG_INFINITY;
        let mut dc_sup: f64 = 0.0;
        for u in lattice(u_range) {
            let j = c.jet(u);
            if !(j.value.is_finite() && j.d1.is_finite()) {
                return Err(Error::NumericalDomain {
                    what: String::from("c"),
                    at: u,
                });
            }
            if j.value <= 0.0 {
                return Err(Error::SpeedPositivity { u, c: j.value });
            }
            c_min = c_min.min(j.value);
            c_max = c_max.max(j.value);
            dc_sup = dc_sup.max(j.d1.abs());
        }
        Ok(SpeedModel {
            c,
            c_min,
            c_max,
            dc_sup,
        })
    }

    /// `(c, c')` at `u`.
    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64) {
        let j = self.c.jet(u);
        (j.value, j.d1)
    }
}

/// Unidirectional problem on `x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec1 {
    pub lambda: LambdaParam,
    pub flux: FluxModel,
    pub u0: Func1,
    /// Spatial domain on which the data are validated.
    pub x_domain: (f64, f64),
}

impl ModelSpec1 {
    /// Builds the spec and measures the flux constants over the state range
    /// of the data padded by one unit on each side.
    pub fn new(lambda: f64, flux: Func1, u0: Func1, x_max: f64) -> Result<Self> {
        let lambda = LambdaParam::new(lambda)?;
        if lambda.value() > 0.5 + HALF_TOL {
            return Err(Error::UnsupportedRegime {
                lambda: lambda.value(),
                context: "the unidirectional equation (requires lambda <= 1/2)",
            });
        }
        let x_domain = (0.0, x_max);
        let u_range = state_range(&u0, x_domain)?;
        Ok(ModelSpec1 {
            lambda,
            flux: FluxModel::measure(flux, u_range)?,
            u0,
            x_domain,
        })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    /// Same model with initial data `u0 + eps * eta`, where `eta` is the
    /// profile `u^2 e^{-u}` normalised to unit C^1 norm.
    pub fn perturbed(&self, eps: f64) -> Result<Self> {
        let Func1::SqExp { amplitude } = self.u0 else {
            return Err(Error::NotApplicable(String::from(
                "C^1 perturbation is defined for u^2 e^{-u} profiles",
            )));
        };
        // sup|u^2 e^-u| = 4 e^-2 dominates sup|(2u - u^2) e^-u|.
        let norm = 4.0 * (-2.0f64).exp();
        Ok(ModelSpec1 {
            u0: Func1::SqExp {
                amplitude: amplitude + eps / norm,
            },
            ..self.clone()
        })
    }
}

/// Second-order problem on the whole line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec2 {
    pub lambda: LambdaParam,
    pub speed: SpeedModel,
    pub u0: Func1,
    pub u1: Velocity,
    pub x_domain: (f64, f64),
}

impl ModelSpec2 {
    pub fn new(lambda: f64, speed: Func1, u0: Func1, u1: Velocity, half_width: f64) -> Result<Self> {
        let lambda = LambdaParam::new(lambda)?;
        let x_domain = (-half_width, half_width);
        let (lo, hi) = state_range(&u0, x_domain)?;
        Ok(ModelSpec2 {
            lambda,
            speed: SpeedModel::measure(speed, (lo, hi))?,
            u0,
            u1,
            x_domain,
        })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    /// Riemann invariants `(R0, S0) = (u1 + c u0', u1 - c u0')` at `x`.
    pub fn riemann_data(&self, x: f64) -> (f64, f64) {
        let j = self.u0.jet(x);
        let (c, _) = self.speed.eval(j.value);
        let ut = self.u1.value(&self.u0, x);
        (ut + c * j.d1, ut - c * j.d1)
    }
}

/// Either equation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "equation", rename_all = "kebab-case")]
pub enum Model {
    Unidirectional(ModelSpec1),
    Wave(ModelSpec2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub conditions: Vec<Condition>,
    pub regime: Regime,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, measured: f64) {
        self.conditions.push(Condition {
            name: String::from(name),
            passed,
            measured,
        });
    }
}

pub(crate) fn lattice(range: (f64, f64)) -> impl Iterator<Item = f64> {
    let (a, b) = range;
    let h = (b - a) / (VALIDATION_SAMPLES - 1) as f64;
    (0..VALIDATION_SAMPLES).map(move |k| a + h * k as f64)
}

/// Range of `u0` over `x_domain`, padded by one unit on each side.
pub(crate) fn state_range(u0: &Func1, x_domain: (f64, f64)) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in lattice(x_domain) {
        let v = u0.value(x);
        if !v.is_finite() {
            return Err(Error::NumericalDomain {
                what: String::from("u0"),
                at: x,
            });
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo - 1.0, hi + 1.0))
}

const COMPAT_TOL: f64 = 1e-12;

pub fn validate_model1(spec: &ModelSpec1) -> Result<ValidationReport> {
    let lam = spec.lambda();
    let mut rep = ValidationReport {
        conditions: Vec::new(),
        regime: spec.lambda.regime(),
        warnings: Vec::new(),
    };
    let u_range = state_range(&spec.u0, spec.x_domain)?;
    let f0 = spec.flux.d1(0.0);
    if !f0.is_finite() {
        return Err(Error::NumericalDomain {
            what: String::from("f'"),
            at: 0.0,
        });
    }
    rep.push("f'(0) >= 0", f0 >= 0.0, f0);

    let measured = FluxModel::measure(spec.flux.f.clone(), u_range)?;
    rep.push(
        "f'' Lipschitz",
        measured.lipschitz_l <= spec.flux.lipschitz_l * (1.0 + 1e-12) + 1e-15,
        measured.lipschitz_l,
    );
    rep.push(
        "|f''| bounded",
        measured.f2_sup <= spec.flux.f2_sup * (1.0 + 1e-12) + 1e-15,
        measured.f2_sup,
    );

    let j0 = spec.u0.jet(0.0);
    if !(j0.value.is_finite() && j0.d1.is_finite()) {
        return Err(Error::NumericalDomain {
            what: String::from("u0"),
            at: 0.0,
        });
    }
    rep.push("u0(0) = 0", j0.value.abs() <= COMPAT_TOL, j0.value);
    rep.push("u0'(0) = 0", j0.d1.abs() <= COMPAT_TOL, j0.d1);

    let p = 1.0 / lam;
    let u0 = &spec.u0;
    let sob = math::integrate(
        |x| u0.d1(x).abs().powf(p),
        spec.x_domain.0,
        spec.x_domain.1,
        1e-10,
        1e-10,
    )?;
    rep.push("u0' in L^(1/lambda)", sob.is_finite(), sob);

    if spec.lambda.regime() == Regime::Sobolev12 {
        rep.warnings.push(format!(
            "lambda = {lam}: Sobolev regularity only; Holder continuity in t is not covered"
        ));
    }
    Ok(rep)
}

pub fn validate_model2(spec: &ModelSpec2) -> Result<ValidationReport> {
    let u_range = state_range(&spec.u0, spec.x_domain)?;
    let measured = SpeedModel::measure(spec.speed.c.clone(), u_range)?;
    let regime = spec.lambda.wave_regime();
    let mut rep = ValidationReport {
        conditions: Vec::new(),
        regime,
        warnings: Vec::new(),
    };
    rep.push("c_min > 0", measured.c_min > 0.0, measured.c_min);
    rep.push("c_max < inf", measured.c_max.is_finite(), measured.c_max);

    let mut worst: f64 = 0.0;
    for x in lattice(spec.x_domain) {
        let (r, s) = spec.riemann_data(x);
        if !(r.is_finite() && s.is_finite()) {
            return Err(Error::NumericalDomain {
                what: String::from("Riemann data"),
                at: x,
            });
        }
        worst = worst.max(r.abs()).max(s.abs());
    }
    rep.push("Riemann data finite", true, worst);

    if regime == Regime::Unsupported {
        rep.warnings.push(format!(
            "lambda = {} is outside (0, 1/3]: unsupported regime, results are exploratory",
            spec.lambda()
        ));
    }
    Ok(rep)
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "paper-fig",
    "burgers-flux",
    "riccati-dip",
    "linear-transport",
    "constant-speed",
    "symmetric-wave",
];

/// Registered models. Each is returned with its default lambda.
pub fn builtin_model(name: &str) -> Result<Model> {
    let burgers = || Func1::Poly(alloc::vec![0.0, 0.0, 0.5]);
    let sech = Func1::Sech {
        amplitude: 1.0,
        width: 1.0,
    };
    match name {
        "paper-fig" => Ok(Model::Wave(ModelSpec2::new(
            0.25,
            Func1::CosSpeed,
            sech,
            Velocity::SlopeOfDisplacement,
            20.0,
        )?)),
        "constant-speed" => Ok(Model::Wave(ModelSpec2::new(
            0.25,
            Func1::constant(1.0),
            sech,
            Velocity::SlopeOfDisplacement,
            20.0,
        )?)),
        "symmetric-wave" => Ok(Model::Wave(ModelSpec2::new(
            0.25,
            Func1::CosSpeed,
            Func1::constant(0.5),
            Velocity::Profile(Func1::Sech {
                amplitude: 0.5,
                width: 1.0,
            }),
            20.0,
        )?)),
        "burgers-flux" => Ok(Model::Unidirectional(ModelSpec1::new(
            0.5,
            burgers(),
            Func1::SqExp { amplitude: 1.0 },
            20.0,
        )?)),
        "riccati-dip" => Ok(Model::Unidirectional(ModelSpec1::new(
            0.25,
            burgers(),
            Func1::dip(-1.0),
            20.0,
        )?)),
        "linear-transport" => Ok(Model::Unidirectional(ModelSpec1::new(
            0.25,
            Func1::Poly(alloc::vec![0.0, 1.0]),
            Func1::SqExp { amplitude: 1.0 },
            20.0,
        )?)),
        _ => Err(Error::UnknownModel {
            name: String::from(name),
            available: BUILTIN_NAMES.to_vec(),
        }),
    }
}

impl Model {
    /// Replaces lambda, re-checking the family's admissible range.
    pub fn with_lambda(self, lambda: f64) -> Result<Model> {
        let lam = LambdaParam::new(lambda)?;
        Ok(match self {
            Model::Unidirectional(mut s) => {
                if lambda > 0.5 + HALF_TOL {
                    return Err(Error::UnsupportedRegime {
                        lambda,
                        context: "the unidirectional equation (requires lambda <= 1/2)",
                    });
                }
                s.lambda = lam;
                Model::Unidirectional(s)
            }
            Model::Wave(mut s) => {
                s.lambda = lam;
                Model::Wave(s)
            }
        })
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        match self {
            Model::Unidirectional(s) => validate_model1(s),
            Model::Wave(s) => validate_model2(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, SQRT_2};
    use proptest::prelude::*;

    #[test]
    fn regime_classification() {
        assert_eq!(LambdaParam::classify(0.25), Regime::Holder13);
        assert_eq!(LambdaParam::classify(1.0 / 3.0), Regime::Holder13);
        assert_eq!(LambdaParam::classify(0.4), Regime::Sobolev12);
        assert_eq!(LambdaParam::classify(0.5 + 1e-13), Regime::Half);
        assert_eq!(LambdaParam::classify(0.75), Regime::Unsupported);
        assert!(LambdaParam::new(0.0).is_err());
        assert!(LambdaParam::new(1.5).is_err());
    }

    #[test]
    fn burgers_with_sq_exp_passes() {
        let Model::Unidirectional(spec) = builtin_model("burgers-flux").unwrap() else {
            panic!()
        };
        let rep = validate_model1(&spec).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.condition("f'(0) >= 0").unwrap().measured, 0.0);
        assert!(rep.condition("f'' Lipschitz").unwrap().measured.abs() < 1e-9);
        assert_relative_eq!(spec.flux.f2_sup, 1.0);
    }

    #[test]
    fn negative_boundary_speed_fails() {
        let spec = ModelSpec1::new(0.5, Func1::Poly(alloc::vec![0.0, -1.0]), Func1::SqExp { amplitude: 1.0 }, 10.0)
            .unwrap();
        let rep = validate_model1(&spec).unwrap();
        assert!(!rep.condition("f'(0) >= 0").unwrap().passed);
        assert_eq!(rep.condition("f'(0) >= 0").unwrap().measured, -1.0);
    }

    #[test]
    fn incompatible_data_fails() {
        let spec = ModelSpec1::new(
            0.5,
            Func1::Poly(alloc::vec![0.0, 0.0, 0.5]),
            Func1::Poly(alloc::vec![0.0, 1.0]),
            10.0,
        )
        .unwrap();
        let rep = validate_model1(&spec).unwrap();
        assert!(rep.condition("u0(0) = 0").unwrap().passed);
        assert!(!rep.condition("u0'(0) = 0").unwrap().passed);
        assert!(!rep.passed());
    }

    #[test]
    fn unidirectional_rejects_large_lambda() {
        let err = ModelSpec1::new(0.75, Func1::Poly(alloc::vec![0.0, 0.0, 0.5]), Func1::constant(0.0), 10.0);
        assert!(matches!(err, Err(Error::UnsupportedRegime { .. })));
    }

    #[test]
    fn cos_speed_bounds() {
        let Model::Wave(spec) = builtin_model("paper-fig").unwrap() else {
            panic!()
        };
        let rep = validate_model2(&spec).unwrap();
        assert!(rep.passed());
        assert_relative_eq!(spec.speed.c_min, 1.0, epsilon = 1e-6);
        assert_relative_eq!(spec.speed.c_max, SQRT_2, epsilon = 1e-9);
        assert_relative_eq!(spec.speed.c.value(0.0), SQRT_2);
        assert_eq!(rep.regime, Regime::Holder13);
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn vanishing_speed_is_rejected() {
        let err = ModelSpec2::new(
            0.25,
            Func1::Trig(alloc::vec![0.0, 1.0]),
            Func1::Sech { amplitude: 1.0, width: 1.0 },
            Velocity::Zero,
            10.0,
        );
        assert!(matches!(err, Err(Error::SpeedPositivity { .. })), "{err:?}");
        let _ = FRAC_PI_2;
    }

    #[test]
    fn unsupported_wave_lambda_warns() {
        let m = builtin_model("paper-fig").unwrap().with_lambda(0.4).unwrap();
        let rep = m.validate().unwrap();
        assert!(rep.passed());
        assert_eq!(rep.regime, Regime::Unsupported);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn riemann_data_examples() {
        let Model::Wave(spec) = builtin_model("paper-fig").unwrap() else {
            panic!()
        };
        let (r, s) = spec.riemann_data(0.0);
        assert_eq!((r, s), (0.0, 0.0));
        // sech'(1) = -sech(1) tanh(1); u1 = u0' so S0 vanishes only when c = 1.
        let sech1 = 1.0 / 1f64.cosh();
        let d = -sech1 * 1f64.tanh();
        let c = (sech1.cos().powi(2) + 1.0).sqrt();
        let (r, s) = spec.riemann_data(1.0);
        assert_relative_eq!(r, d + c * d, epsilon = 1e-15);
        assert_relative_eq!(s, d - c * d, epsilon = 1e-15);

        let flat = ModelSpec2::new(0.25, Func1::constant(2.0), Func1::Poly(alloc::vec![0.0, 0.3]), Velocity::Zero, 5.0)
            .unwrap();
        let (r, s) = flat.riemann_data(1.3);
        assert_relative_eq!(r, 0.6);
        assert_relative_eq!(s, -0.6);
    }

    #[test]
    fn unknown_model_lists_names() {
        match builtin_model("nonexistent") {
            Err(Error::UnknownModel { available, .. }) => assert!(available.contains(&"paper-fig")),
            other => panic!("{other:?}"),
        }
        let Model::Unidirectional(b) = builtin_model("burgers-flux").unwrap() else {
            panic!()
        };
        assert_eq!(b.flux.d2(0.3), 1.0);
    }

    #[test]
    fn registered_models_validate() {
        for name in BUILTIN_NAMES {
            let m = builtin_model(name).unwrap();
            assert!(m.validate().unwrap().passed(), "{name}");
        }
    }

    proptest! {
        #[test]
        fn riemann_identities(x in -6.0f64..6.0) {
            let Model::Wave(spec) = builtin_model("paper-fig").unwrap() else { panic!() };
            let (r, s) = spec.riemann_data(x);
            let j = spec.u0.jet(x);
            let c = spec.speed.c.value(j.value);
            let u1 = spec.u1.value(&spec.u0, x);
            prop_assert!((r - s - 2.0 * c * j.d1).abs() <= 1e-14);
            prop_assert!((r + s - 2.0 * u1).abs() <= 1e-14);
        }
    }
}
