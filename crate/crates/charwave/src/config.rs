//! Strict JSON run configuration. Every rejection names the offending value
//! by its JSON pointer.

use serde::Serialize;
use serde_json::{Map, Value};

use charwave_core::func::{Func1, Velocity};
use charwave_core::{builtin_model, Model, ModelSpec1, ModelSpec2};

use crate::error::CliError;

pub const DEFAULT_EXTENT: f64 = 20.0;
pub const MAX_TOL: f64 = 1e-4;
pub const MIN_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    Sweep,
    Verify,
    ReproduceFigQuarter,
    ReproduceFigThird,
}

impl Experiment {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => Experiment::Solve,
            "sweep" => Experiment::Sweep,
            "verify" => Experiment::Verify,
            "reproduce-fig-quarter" => Experiment::ReproduceFigQuarter,
            "reproduce-fig-third" => Experiment::ReproduceFigThird,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: Model,
    pub r: f64,
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// `None` is "auto".
    pub kappa: Option<f64>,
    pub outputs: String,
    pub experiment: Experiment,
    pub lambdas: Vec<f64>,
    pub holder_pairs: usize,
}

impl RunConfig {
    pub fn lambda(&self) -> f64 {
        match &self.model {
            Model::Unidirectional(s) => s.lambda(),
            Model::Wave(s) => s.lambda(),
        }
    }
}

fn err(pointer: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

/// Fields of one JSON object, consumed key by key so that leftovers can be
/// reported as unknown.
struct Fields {
    path: String,
    map: Map<String, Value>,
}

impl Fields {
    fn new(path: &str, v: &Value) -> Result<Self, CliError> {
        match v {
            Value::Object(m) => Ok(Fields {
                path: path.to_string(),
                map: m.clone(),
            }),
            _ => Err(err(if path.is_empty() { "/" } else { path }, "expected an object")),
        }
    }

    fn at(&self, key: &str) -> String {
        format!("{}/{}", self.path, escape(key))
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(_) => Err(err(self.at(key), "expected a number")),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(|v| Some(v as usize))
                .ok_or_else(|| err(self.at(key), "expected a non-negative integer")),
            Some(_) => Err(err(self.at(key), "expected a non-negative integer")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(err(self.at(key), "expected a string")),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.map.keys().next() {
            Some(k) => Err(err(self.at(k), "unknown key")),
            None => Ok(()),
        }
    }
}

/// `{"builtin": name}`, `{"poly": [...]}`, `{"trig": [...]}`,
/// `{"sech": {"amplitude", "width"}}`, `{"sq-exp": {"amplitude"}}` or
/// `{"dip": min_slope}`.
fn parse_func(path: &str, v: &Value) -> Result<Func1, CliError> {
    let mut f = Fields::new(path, v)?;
    if f.map.len() != 1 {
        return Err(err(path, "expected exactly one of builtin, poly, trig, sech, sq-exp, dip"));
    }
    let (key, val) = f.map.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
    f.take(&key);
    let at = f.at(&key);
    let coeffs = |v: &Value| -> Result<Vec<f64>, CliError> {
        let Value::Array(a) = v else {
            return Err(err(&at, "expected an array of numbers"));
        };
        if a.is_empty() {
            return Err(err(&at, "needs at least one coefficient"));
        }
        a.iter()
            .enumerate()
            .map(|(i, x)| x.as_f64().ok_or_else(|| err(format!("{at}/{i}"), "expected a number")))
            .collect()
    };
    let func = match key.as_str() {
        "builtin" => match val.as_str() {
            Some("sech") => Func1::Sech {
                amplitude: 1.0,
                width: 1.0,
            },
            Some("sq-exp") => Func1::SqExp { amplitude: 1.0 },
            Some("dip") => Func1::dip(-1.0),
            Some("zero") => Func1::constant(0.0),
            Some("burgers") => Func1::Poly(vec![0.0, 0.0, 0.5]),
            Some("linear") => Func1::Poly(vec![0.0, 1.0]),
            Some("cos-speed") => Func1::CosSpeed,
            Some("unit") => Func1::constant(1.0),
            _ => {
                return Err(err(
                    at,
                    "expected one of sech, sq-exp, dip, zero, burgers, linear, cos-speed, unit",
                ))
            }
        },
        "poly" => Func1::Poly(coeffs(&val)?),
        "trig" => {
            let c = coeffs(&val)?;
            if c.len() % 2 == 0 {
                return Err(err(at, "expected [a0, a1, b1, a2, b2, ...] (odd length)"));
            }
            Func1::Trig(c)
        }
        "sech" => {
            let mut g = Fields::new(&at, &val)?;
            let amplitude = g.number("amplitude")?.unwrap_or(1.0);
            let width = g.number("width")?.unwrap_or(1.0);
            if !(width > 0.0) {
                return Err(err(g.at("width"), "must be positive"));
            }
            g.finish()?;
            Func1::Sech { amplitude, width }
        }
        "sq-exp" => {
            let mut g = Fields::new(&at, &val)?;
            let amplitude = g.number("amplitude")?.unwrap_or(1.0);
            g.finish()?;
            Func1::SqExp { amplitude }
        }
        "dip" => Func1::dip(val.as_f64().ok_or_else(|| err(&at, "expected the minimum slope"))?),
        _ => return Err(err(at, "unknown function form")),
    };
    Ok(func)
}

fn parse_velocity(path: &str, v: &Value) -> Result<Velocity, CliError> {
    match v {
        Value::String(s) if s == "zero" => Ok(Velocity::Zero),
        Value::String(s) if s == "slope-of-displacement" => Ok(Velocity::SlopeOfDisplacement),
        Value::Object(_) => {
            let mut f = Fields::new(path, v)?;
            let p = f.take("profile").ok_or_else(|| err(path, "expected {\"profile\": function}"))?;
            let func = parse_func(&f.at("profile"), &p)?;
            f.finish()?;
            Ok(Velocity::Profile(func))
        }
        _ => Err(err(path, "expected \"zero\", \"slope-of-displacement\" or {\"profile\": ...}")),
    }
}

fn check_lambda(pointer: &str, lambda: f64, unidirectional: bool) -> Result<(), CliError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(err(pointer, format!("lambda = {lambda} must lie in (0, 1]")));
    }
    if unidirectional && lambda > 0.5 + charwave_core::model::HALF_TOL {
        return Err(err(pointer, format!("lambda = {lambda}: the unidirectional equation needs lambda <= 1/2")));
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &[u8]) -> Result<RunConfig, CliError> {
    let text = std::str::from_utf8(text).map_err(|e| err("", format!("not UTF-8: {e}")))?;
    let doc: Value = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    let mut f = Fields::new("", &doc)?;

    let experiment = match f.string("experiment")? {
        None => Experiment::Solve,
        Some(s) => Experiment::parse(&s).ok_or_else(|| {
            err(
                "/experiment",
                "expected solve, sweep, verify, reproduce-fig-quarter or reproduce-fig-third",
            )
        })?,
    };
    let builtin = f.string("model")?;
    let equation = f.string("equation")?;
    let lambda = f.number("lambda")?;
    let flux = f.take("flux");
    let speed = f.take("speed");
    let initial = f.take("initial");
    let velocity = f.take("velocity");
    let extent = f.number("extent")?;

    let base = match &builtin {
        Some(name) => Some(builtin_model(name).map_err(|e| err("/model", e.to_string()))?),
        None => None,
    };
    let unidirectional = match (equation.as_deref(), &base) {
        (Some("unidirectional"), _) => true,
        (Some("wave"), _) => false,
        (Some(_), _) => return Err(err("/equation", "expected \"unidirectional\" or \"wave\"")),
        (None, Some(m)) => matches!(m, Model::Unidirectional(_)),
        (None, None) => return Err(err("/equation", "required unless a builtin model is named")),
    };
    if let Some(m) = &base {
        if matches!(m, Model::Unidirectional(_)) != unidirectional {
            return Err(err("/equation", "does not match the named builtin model"));
        }
    }
    if let Some(l) = lambda {
        check_lambda("/lambda", l, unidirectional)?;
    }
    if let Some(x) = extent {
        if !(x > 0.0) {
            return Err(err("/extent", "must be positive"));
        }
    }

    let model = if unidirectional {
        if speed.is_some() {
            return Err(err("/speed", "only for the wave equation"));
        }
        if velocity.is_some() {
            return Err(err("/velocity", "only for the wave equation"));
        }
        let b = match &base {
            Some(Model::Unidirectional(s)) => Some(s),
            _ => None,
        };
        let lam = lambda.or(b.map(|s| s.lambda())).ok_or_else(|| err("/lambda", "required"))?;
        let fl = match &flux {
            Some(v) => parse_func("/flux", v)?,
            None => b.map(|s| s.flux.f.clone()).ok_or_else(|| err("/flux", "required"))?,
        };
        let u0 = match &initial {
            Some(v) => parse_func("/initial", v)?,
            None => b.map(|s| s.u0.clone()).ok_or_else(|| err("/initial", "required"))?,
        };
        let x_max = extent.or(b.map(|s| s.x_domain.1)).unwrap_or(DEFAULT_EXTENT);
        Model::Unidirectional(ModelSpec1::new(lam, fl, u0, x_max).map_err(|e| err("", e.to_string()))?)
    } else {
        if flux.is_some() {
            return Err(err("/flux", "only for the unidirectional equation"));
        }
        let b = match &base {
            Some(Model::Wave(s)) => Some(s),
            _ => None,
        };
        let lam = lambda.or(b.map(|s| s.lambda())).ok_or_else(|| err("/lambda", "required"))?;
        let c = match &speed {
            Some(v) => parse_func("/speed", v)?,
            None => b.map(|s| s.speed.c.clone()).ok_or_else(|| err("/speed", "required"))?,
        };
        let u0 = match &initial {
            Some(v) => parse_func("/initial", v)?,
            None => b.map(|s| s.u0.clone()).ok_or_else(|| err("/initial", "required"))?,
        };
        let u1 = match &velocity {
            Some(v) => parse_velocity("/velocity", v)?,
            None => b.map(|s| s.u1.clone()).unwrap_or(Velocity::Zero),
        };
        let hw = extent.or(b.map(|s| s.x_domain.1)).unwrap_or(DEFAULT_EXTENT);
        let spec = ModelSpec2::new(lam, c, u0, u1, hw).map_err(|e| match e {
            charwave_core::Error::SpeedPositivity { .. } => err("/speed", e.to_string()),
            _ => err("", e.to_string()),
        })?;
        Model::Wave(spec)
    };

    let r = f.number("r")?.unwrap_or(if unidirectional { 5.0 } else { 3.0 });
    if !(r > 0.0 && r.is_finite()) {
        return Err(err("/r", "must be positive"));
    }
    let n = f.count("n")?.unwrap_or(512);
    if n < MIN_N {
        return Err(err("/n", format!("must be at least {MIN_N}")));
    }
    let tol = f.number("tol")?.unwrap_or(1e-10);
    if !(tol > 0.0 && tol <= MAX_TOL) {
        return Err(err("/tol", format!("must lie in (0, {MAX_TOL:e}]")));
    }
    let max_iter = f.count("max_iter")?.unwrap_or(200);
    if max_iter == 0 {
        return Err(err("/max_iter", "must be positive"));
    }
    let kappa = match f.take("kappa") {
        None => None,
        Some(Value::String(s)) if s == "auto" => None,
        Some(Value::Number(k)) => match k.as_f64() {
            Some(k) if k >= 0.0 => Some(k),
            _ => return Err(err("/kappa", "must be non-negative")),
        },
        Some(_) => return Err(err("/kappa", "expected a number or \"auto\"")),
    };
    let outputs = f.string("outputs")?.unwrap_or_else(|| "out".to_string());
    let lambdas = match f.take("lambdas") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = format!("/lambdas/{i}");
                let l = v.as_f64().ok_or_else(|| err(&p, "expected a number"))?;
                check_lambda(&p, l, unidirectional)?;
                Ok(l)
            })
            .collect::<Result<_, CliError>>()?,
        Some(_) => return Err(err("/lambdas", "expected an array of numbers")),
    };
    let holder_pairs = f.count("holder_pairs")?.unwrap_or(4000);
    if holder_pairs == 0 {
        return Err(err("/holder_pairs", "must be positive"));
    }
    f.finish()?;

    Ok(RunConfig {
        model,
        r,
        n,
        tol,
        max_iter,
        kappa,
        outputs,
        experiment,
        lambdas,
        holder_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pointer(text: &str) -> String {
        match parse_config(text.as_bytes()) {
            Err(CliError::Config { pointer, .. }) => pointer,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_wave_config() {
        let c = parse_config(br#"{"model": "paper-fig", "lambda": 0.25}"#).unwrap();
        assert!(matches!(c.model, Model::Wave(_)));
        assert_eq!((c.r, c.n, c.tol, c.max_iter), (3.0, 512, 1e-10, 200));
        assert_eq!(c.experiment, Experiment::Solve);
    }

    #[test]
    fn rejections_carry_pointers() {
        assert_eq!(pointer(r#"{"model": "paper-fig", "lambda": 1.5}"#), "/lambda");
        assert_eq!(pointer(r#"{"model": "paper-fig", "foo": 1}"#), "/foo");
        assert_eq!(pointer(r#"{"model": "burgers-flux", "lambda": 0.75}"#), "/lambda");
        assert_eq!(pointer(r#"{"model": "paper-fig", "n": 8}"#), "/n");
        assert_eq!(pointer(r#"{"model": "paper-fig", "tol": 0.1}"#), "/tol");
        assert_eq!(pointer(r#"{"model": "nope"}"#), "/model");
        assert_eq!(pointer(r#"{"equation": "wave", "lambda": 0.25, "speed": {"poly": [1, "a"]}, "initial": {"builtin": "sech"}}"#), "/speed/poly/1");
        assert_eq!(pointer(r#"{"equation": "wave", "lambda": 0.25, "speed": {"builtin": "cos-speed"}, "initial": {"sech": {"amplitude": 1, "wdth": 2}}}"#), "/initial/sech/wdth");
        assert_eq!(pointer(r#"{"model": "paper-fig", "lambdas": [0.2, 0]}"#), "/lambdas/1");
        assert_eq!(pointer(r#"[1]"#), "/");
    }

    #[test]
    fn explicit_unidirectional_model() {
        let c = parse_config(
            br#"{"equation": "unidirectional", "lambda": 0.5, "flux": {"builtin": "burgers"},
                 "initial": {"sq-exp": {"amplitude": 1}}, "r": 4, "n": 64, "kappa": "auto"}"#,
        )
        .unwrap();
        let Model::Unidirectional(s) = &c.model else { panic!() };
        assert_eq!(s.flux.f2_sup, 1.0);
        assert_eq!(c.kappa, None);
    }

    #[test]
    fn nonpositive_speed_points_at_speed() {
        assert_eq!(
            pointer(r#"{"equation": "wave", "lambda": 0.25, "speed": {"poly": [0.5, 1]}, "initial": {"builtin": "sech"}}"#),
            "/speed"
        );
    }
}
