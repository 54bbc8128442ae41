//! Flat `key = value` experiment configuration with strict key checking.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::fields::{trace_fn, Trace};
use crate::geometry::{Domain2D, Point, Superellipse};
use crate::moving_planes::SweepConfig;
use crate::nonlinearity::{CoupledRhs, DerivativeMode, SamplingBox};
use crate::solver::{InitStrategy, SolveConfig, MANUFACTURED_CASES};

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Sweep,
    Barrier,
    Check,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Barrier => "barrier",
            Command::Check => "check",
            Command::Validate => "validate",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "solve" => Ok(Command::Solve),
            "sweep" => Ok(Command::Sweep),
            "barrier" => Ok(Command::Barrier),
            "check" => Ok(Command::Check),
            "validate" => Ok(Command::Validate),
            other => Err(CliError::Config(format!("unknown command '{other}'"))),
        }
    }
}

/// Dirichlet data shared by `u` and `v` unless overridden.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundarySpec {
    /// `|x|^2 / 2`
    Quadratic,
    Constant(f64),
    /// `exp(|x|^2 / 2)`
    ExpRadial,
}

impl BoundarySpec {
    pub fn trace(self) -> Trace {
        match self {
            BoundarySpec::Quadratic => trace_fn(|p: Point| 0.5 * p.norm_sq()),
            BoundarySpec::Constant(c) => trace_fn(move |_| c),
            BoundarySpec::ExpRadial => trace_fn(|p: Point| (0.5 * p.norm_sq()).exp()),
        }
    }

    pub fn label(self) -> String {
        match self {
            BoundarySpec::Quadratic => "quadratic".into(),
            BoundarySpec::Constant(c) => format!("constant:{c}"),
            BoundarySpec::ExpRadial => "exp-radial".into(),
        }
    }
}

impl FromStr for BoundarySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "quadratic" => Ok(BoundarySpec::Quadratic),
            "exp-radial" => Ok(BoundarySpec::ExpRadial),
            "zero" => Ok(BoundarySpec::Constant(0.0)),
            _ => match s.strip_prefix("constant:") {
                Some(c) => Ok(BoundarySpec::Constant(parse_f64("boundary", c)?)),
                None => Err(CliError::Config(format!("boundary: unknown spec '{s}'"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Injection {
    None,
    /// The anti-monotone field `x1`.
    X1,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RhsSpec {
    Named(String),
    Coefficients([f64; 5]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierGrid {
    pub m: Vec<f64>,
    pub c0: Vec<f64>,
    pub g_max: Vec<f64>,
    pub f_max: Vec<f64>,
    pub verify_points: usize,
}

impl Default for BarrierGrid {
    fn default() -> Self {
        Self { m: vec![1.0], c0: vec![1.0], g_max: vec![1.0], f_max: vec![1.0], verify_points: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub domain_name: String,
    pub superellipse: Superellipse,
    pub rhs: RhsSpec,
    pub fd_step: Option<f64>,
    pub case: Option<String>,
    pub grid_h: f64,
    pub boundary_u: BoundarySpec,
    pub boundary_v: BoundarySpec,
    pub solve: SolveConfig,
    pub sweep: SweepConfig,
    pub inject_u: Injection,
    pub inject_v: Injection,
    pub heatmaps: bool,
    pub load_u: Option<PathBuf>,
    pub load_v: Option<PathBuf>,
    pub barrier: BarrierGrid,
    pub check_samples: usize,
    pub check_box: SamplingBox,
    pub validate_cases: Vec<String>,
    pub validate_h: Vec<f64>,
    pub validate_order: (f64, f64),
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            domain_name: "disk".into(),
            superellipse: Superellipse::default(),
            rhs: RhsSpec::Named("linear".into()),
            fd_step: None,
            case: None,
            grid_h: 1.0 / 64.0,
            boundary_u: BoundarySpec::Quadratic,
            boundary_v: BoundarySpec::Quadratic,
            solve: SolveConfig::default(),
            sweep: SweepConfig::default(),
            inject_u: Injection::None,
            inject_v: Injection::None,
            heatmaps: true,
            load_u: None,
            load_v: None,
            barrier: BarrierGrid::default(),
            check_samples: 4096,
            check_box: SamplingBox::default(),
            validate_cases: MANUFACTURED_CASES.iter().map(|s| s.to_string()).collect(),
            validate_h: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            validate_order: (1.8, 2.2),
            output_dir: None,
            seed: 1,
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| CliError::Config(format!("{key}: bad number '{s}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| CliError::Config(format!("{key}: bad number '{s}'")))?;
            a / b
        }
        None => s.parse().map_err(|_| CliError::Config(format!("{key}: bad number '{s}'")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{key}: non-finite value '{s}'")))
    }
}

fn parse_usize(key: &str, s: &str) -> Result<usize, CliError> {
    s.trim().parse().map_err(|_| CliError::Config(format!("{key}: expected a nonnegative integer, got '{s}'")))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let out = s.split(',').map(|t| parse_f64(key, t)).collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    Ok(out)
}

fn parse_pair(key: &str, s: &str) -> Result<(f64, f64), CliError> {
    match parse_list(key, s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::Config(format!("{key}: expected two comma-separated numbers"))),
    }
}

fn parse_bool(key: &str, s: &str) -> Result<bool, CliError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true or false, got '{s}'"))),
    }
}

fn parse_injection(key: &str, s: &str) -> Result<Injection, CliError> {
    match s {
        "none" => Ok(Injection::None),
        "x1" => Ok(Injection::X1),
        _ => Err(CliError::Config(format!("{key}: expected none or x1, got '{s}'"))),
    }
}

/// Split the text into `key -> value`, rejecting malformed and repeated keys.
fn key_values(text: &str) -> Result<BTreeMap<String, (usize, String)>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", lineno + 1)));
        }
        if out.insert(k.clone(), (lineno + 1, v)).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = ExperimentConfig::default();
        let mut rhs_coefficients = None;
        for (key, (line, value)) in key_values(text)? {
            let k = key.as_str();
            let v = value.as_str();
            match k {
                "command" => c.command = Some(v.parse()?),
                "domain" => c.domain_name = v.to_string(),
                "domain.center" => {
                    let (a, b) = parse_pair(k, v)?;
                    c.superellipse.center = Point::new(a, b);
                }
                "domain.semi_axes" => c.superellipse.semi_axes = parse_pair(k, v)?,
                "domain.exponent" => c.superellipse.exponent = parse_f64(k, v)?,
                "domain.skew" => c.superellipse.skew = parse_f64(k, v)?,
                "rhs" => c.rhs = RhsSpec::Named(v.to_string()),
                "rhs.coefficients" => {
                    let l = parse_list(k, v)?;
                    let arr: [f64; 5] =
                        l.try_into().map_err(|_| CliError::Config(format!("{k}: expected five coefficients")))?;
                    rhs_coefficients = Some(arr);
                }
                "rhs.fd_step" => c.fd_step = Some(parse_f64(k, v)?),
                "case" => c.case = Some(v.to_string()),
                "grid.h" => c.grid_h = parse_f64(k, v)?,
                "boundary" => {
                    c.boundary_u = v.parse()?;
                    c.boundary_v = c.boundary_u;
                }
                "boundary.u" => c.boundary_u = v.parse()?,
                "boundary.v" => c.boundary_v = v.parse()?,
                "solve.newton_tol" => c.solve.newton_tol = parse_f64(k, v)?,
                "solve.max_iters" => c.solve.max_iters = parse_usize(k, v)?,
                "solve.beta" => c.solve.beta = parse_f64(k, v)?,
                "solve.min_step" => c.solve.min_step = parse_f64(k, v)?,
                "solve.init" => {
                    c.solve.init = match v {
                        "quadratic" => InitStrategy::Quadratic,
                        "poisson" => InitStrategy::Poisson,
                        _ => return Err(CliError::Config(format!("{k}: expected quadratic or poisson"))),
                    }
                }
                "solve.linear_tol" => c.solve.linear_tol = parse_f64(k, v)?,
                "solve.linear_max_iters" => c.solve.linear_max_iters = parse_usize(k, v)?,
                "sweep.lambda_count" => c.sweep.lambda_count = parse_usize(k, v)?,
                "sweep.sign_tol" => c.sweep.sign_tol = Some(parse_f64(k, v)?),
                "sweep.interior_margin" => c.sweep.interior_margin = parse_f64(k, v)?,
                "sweep.inject_u" => c.inject_u = parse_injection(k, v)?,
                "sweep.inject_v" => c.inject_v = parse_injection(k, v)?,
                "sweep.heatmaps" => c.heatmaps = parse_bool(k, v)?,
                "sweep.load_u" => c.load_u = Some(PathBuf::from(v)),
                "sweep.load_v" => c.load_v = Some(PathBuf::from(v)),
                "barrier.m" => c.barrier.m = parse_list(k, v)?,
                "barrier.c0" => c.barrier.c0 = parse_list(k, v)?,
                "barrier.g_max" => c.barrier.g_max = parse_list(k, v)?,
                "barrier.f_max" => c.barrier.f_max = parse_list(k, v)?,
                "barrier.verify_points" => c.barrier.verify_points = parse_usize(k, v)?,
                "check.samples" => c.check_samples = parse_usize(k, v)?,
                "check.box.u" => c.check_box.u = parse_pair(k, v)?,
                "check.box.v" => c.check_box.v = parse_pair(k, v)?,
                "check.box.p1" => c.check_box.p1 = parse_pair(k, v)?,
                "check.box.p2" => c.check_box.p2 = parse_pair(k, v)?,
                "validate.cases" => c.validate_cases = v.split(',').map(|s| s.trim().to_string()).collect(),
                "validate.h" => c.validate_h = parse_list(k, v)?,
                "validate.order_min" => c.validate_order.0 = parse_f64(k, v)?,
                "validate.order_max" => c.validate_order.1 = parse_f64(k, v)?,
                "output_dir" => c.output_dir = Some(PathBuf::from(v)),
                "seed" => c.seed = v.parse().map_err(|_| CliError::Config(format!("{k}: expected a 64-bit integer")))?,
                _ => return Err(CliError::Config(format!("line {line}: unknown key '{k}'"))),
            }
        }
        if let Some(coeffs) = rhs_coefficients {
            match &c.rhs {
                RhsSpec::Named(n) if n == "coefficients" => c.rhs = RhsSpec::Coefficients(coeffs),
                _ => return Err(CliError::Config("rhs.coefficients requires rhs = coefficients".into())),
            }
        } else if c.rhs == RhsSpec::Named("coefficients".into()) {
            return Err(CliError::Config("rhs = coefficients requires rhs.coefficients".into()));
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.grid_h > 0.0) {
            return Err(CliError::Config("grid.h must be positive".into()));
        }
        self.solve.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.sweep.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.check_samples == 0 {
            return Err(CliError::Config("check.samples must be positive".into()));
        }
        if self.validate_h.iter().any(|&h| !(h > 0.0)) {
            return Err(CliError::Config("validate.h entries must be positive".into()));
        }
        if self.validate_cases.is_empty() {
            return Err(CliError::Config("validate.cases must not be empty".into()));
        }
        if self.barrier.verify_points == 0 {
            return Err(CliError::Config("barrier.verify_points must be positive".into()));
        }
        self.domain()?;
        self.coupling()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain2D, CliError> {
        let d = if self.domain_name == "superellipse" {
            Domain2D::superellipse(self.superellipse)
        } else {
            Domain2D::builtin(&self.domain_name)
        };
        d.map_err(|e| CliError::Config(format!("domain: {e}")))
    }

    pub fn coupling(&self) -> Result<CoupledRhs, CliError> {
        let rhs = match &self.rhs {
            RhsSpec::Named(n) => CoupledRhs::builtin(n).map_err(|e| CliError::Config(format!("rhs: {e}")))?,
            RhsSpec::Coefficients(c) => CoupledRhs::from_coefficients(*c),
        };
        Ok(match self.fd_step {
            Some(s) if s > 0.0 => rhs.with_mode(DerivativeMode::FiniteDifference(s)),
            Some(_) => return Err(CliError::Config("rhs.fd_step must be positive".into())),
            None => rhs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys_and_fractions() {
        let c = ExperimentConfig::parse(
            "# comment\ndomain = egg\nrhs = linear\ngrid.h = 1/32\nsolve.newton_tol = 1e-10\nsweep.lambda_count = 16\nboundary = constant:0\n",
        )
        .unwrap();
        assert_eq!(c.domain_name, "egg");
        assert_eq!(c.grid_h, 1.0 / 32.0);
        assert_eq!(c.solve.newton_tol, 1e-10);
        assert_eq!(c.sweep.lambda_count, 16);
        assert_eq!(c.boundary_v, BoundarySpec::Constant(0.0));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::parse("grid.hh = 0.1\n"), Err(CliError::Config(_))));
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(ExperimentConfig::parse("just text\n").is_err());
        assert!(ExperimentConfig::parse("solve.beta = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("rhs = nope\n").is_err());
        assert!(ExperimentConfig::parse("domain = crescent\n").is_ok());
    }

    #[test]
    fn coefficient_rhs() {
        let c = ExperimentConfig::parse("rhs = coefficients\nrhs.coefficients = -1, -1, 1, 0, 0\n").unwrap();
        assert_eq!(c.rhs, RhsSpec::Coefficients([-1.0, -1.0, 1.0, 0.0, 0.0]));
        assert!(ExperimentConfig::parse("rhs.coefficients = 1,2,3\nrhs = coefficients\n").is_err());
    }
}
