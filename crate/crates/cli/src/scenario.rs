//! Scenario files: a flat TOML document with one section per command.

use credit_growth::{Interval, ModelParams, Mobility, ParamBox, ParamField, PropositionId, Tolerances, Variant};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntax or type error; the message carries line and column.
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Steady,
    Sweep,
    Simulate,
    Shock,
    Verify,
    Labor,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
            Command::Shock => "shock",
            Command::Verify => "verify",
            Command::Labor => "labor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// The model primitives. The variant is a top-level key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub a: f64,
    pub alpha: f64,
    pub eps: f64,
    pub eta: f64,
    pub delta: f64,
    pub theta: f64,
    pub theta_x: f64,
    pub mu: f64,
}

impl ParamsSection {
    pub fn to_params(self, variant: Variant) -> ModelParams<f64> {
        ModelParams {
            a: self.a,
            alpha: self.alpha,
            eps: self.eps,
            eta: self.eta,
            delta: self.delta,
            theta: self.theta,
            theta_x: self.theta_x,
            mu: self.mu,
            variant,
        }
    }

    pub fn from_params(p: &ModelParams<f64>) -> Self {
        Self {
            a: p.a,
            alpha: p.alpha,
            eps: p.eps,
            eta: p.eta,
            delta: p.delta,
            theta: p.theta,
            theta_x: p.theta_x,
            mu: p.mu,
        }
    }
}

/// A fixed value or a closed range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalSpec {
    Point(f64),
    Range([f64; 2]),
}

impl IntervalSpec {
    pub fn interval(self) -> Interval<f64> {
        match self {
            IntervalSpec::Point(x) => Interval::point(x),
            IntervalSpec::Range([lo, hi]) => Interval::new(lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    pub a: IntervalSpec,
    pub alpha: IntervalSpec,
    pub eps: IntervalSpec,
    pub eta: IntervalSpec,
    pub delta: IntervalSpec,
    pub theta: IntervalSpec,
    pub theta_x: IntervalSpec,
    pub mu: IntervalSpec,
}

impl BoxSection {
    pub fn to_box(self, variant: Variant) -> ParamBox<f64> {
        ParamBox {
            a: self.a.interval(),
            alpha: self.alpha.interval(),
            eps: self.eps.interval(),
            eta: self.eta.interval(),
            delta: self.delta.interval(),
            theta: self.theta.interval(),
            theta_x: self.theta_x.interval(),
            mu: self.mu.interval(),
            variant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesSection {
    pub residual: f64,
    pub identity: f64,
    pub fixed_point: f64,
    pub noise: f64,
    pub degeneracy: f64,
    pub eps_regime: f64,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        let t = Tolerances::<f64>::standard();
        Self {
            residual: t.residual,
            identity: t.identity,
            fixed_point: t.fixed_point,
            noise: t.noise,
            degeneracy: t.degeneracy,
            eps_regime: t.eps_regime,
        }
    }
}

impl TolerancesSection {
    pub fn to_tolerances(self) -> Tolerances<f64> {
        Tolerances {
            residual: self.residual,
            identity: self.identity,
            fixed_point: self.fixed_point,
            noise: self.noise,
            degeneracy: self.degeneracy,
            eps_regime: self.eps_regime,
        }
    }
}

/// One parameter varied over a grid: either `values` or `start`/`stop`/`steps`.
/// Resolution expands the latter into `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl SweepSection {
    pub fn field(&self) -> Option<ParamField> {
        ParamField::from_name(&self.axis)
    }

    pub fn grid(&self) -> &[f64] {
        self.values.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: usize,
    pub k0: f64,
    pub m0: f64,
    /// Initial land-to-capital value ratio; the steady state when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    /// Initial gross interest rate; the steady state when absent. Ignored by O3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Identify states within rounding of the steady state with it.
    pub snap: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            horizon: 50,
            k0: 1.0,
            m0: 1.0,
            phi0: None,
            r0: None,
            snap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSection {
    pub eps_new: f64,
    #[serde(default = "default_shock_period")]
    pub period: usize,
    #[serde(default = "default_shock_horizon")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub k0: f64,
    #[serde(default = "one")]
    pub m0: f64,
}

fn default_shock_period() -> usize {
    5
}

fn default_shock_horizon() -> usize {
    40
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Admissible points per proposition; 1 for a `params` point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Every proposition when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub props: Option<Vec<PropositionId>>,
    pub witness_cap: usize,
    pub allow_nonpositive_mu: bool,
    pub eps_probe: f64,
    pub limit_rel_tol: f64,
    pub max_draws: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            n: None,
            props: None,
            witness_cap: 10,
            allow_nonpositive_mu: false,
            eps_probe: 1e-6,
            limit_rel_tol: 1e-3,
            max_draws: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaborSection {
    pub rho: f64,
    #[serde(default = "default_mobility")]
    pub mobility: Mobility,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx_fixed: Option<f64>,
}

fn default_mobility() -> Mobility {
    Mobility::Mobile
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub format: Format,
    /// Also write the plot-data file for commands that have one.
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
            format: Format::Csv,
            plot: true,
        }
    }
}

/// A scenario. `C` is `Command` once resolved; files may leave it out when the
/// command is given on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario<C> {
    pub command: C,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
    /// Years per model period; adds annualized rate columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years_per_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<BoxSection>,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock: Option<ShockSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labor: Option<LaborSection>,
    #[serde(default)]
    pub output: OutputSection,
}

pub type ScenarioConfig = Scenario<Command>;
type RawScenario = Scenario<Option<Command>>;

impl ScenarioConfig {
    /// The point parameters with the variant applied.
    pub fn model_params(&self) -> Option<ModelParams<f64>> {
        self.params.map(|s| s.to_params(self.variant))
    }

    pub fn param_box(&self) -> Option<ParamBox<f64>> {
        self.sample_box.map(|b| b.to_box(self.variant))
    }

    pub fn tolerances(&self) -> Tolerances<f64> {
        self.tolerances.to_tolerances()
    }
}

/// Parses and resolves a scenario whose file names its command.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_scenario_for(text, None)
}

/// Parses and resolves a scenario. `command` comes from the command line; a
/// file that also names one must agree with it.
pub fn parse_scenario_for(text: &str, command: Option<Command>) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let command = match (raw.command, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(field_err(
                "command",
                format!("file says `{}` but `{}` was requested", a.name(), b.name()),
            ))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(field_err("command", "missing")),
    };
    let cfg = Scenario {
        command,
        variant: raw.variant,
        seed: raw.seed,
        years_per_period: raw.years_per_period,
        params: raw.params,
        sample_box: raw.sample_box,
        tolerances: raw.tolerances,
        sweep: raw.sweep,
        simulate: raw.simulate,
        shock: raw.shock,
        verify: raw.verify,
        labor: raw.labor,
        output: raw.output,
    };
    resolve(cfg)
}

/// Renders a resolved scenario; parsing the result gives it back.
pub fn print_scenario(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario serializes to TOML")
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    /// Replaces the residual tolerance.
    pub tol: Option<f64>,
}

pub fn apply_overrides(mut cfg: ScenarioConfig, o: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    if let Some(dir) = &o.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = o.format {
        cfg.output.format = f;
    }
    if let Some(s) = o.seed {
        // TOML integers are signed 64-bit, so larger seeds could not be written back
        if s > i64::MAX as u64 {
            return Err(ConfigError::Field {
                field: "seed".into(),
                message: format!("{s} exceeds {}", i64::MAX),
            });
        }
        cfg.seed = s;
    }
    if let Some(t) = o.tol {
        cfg.tolerances.residual = t;
    }
    resolve(cfg)
}

fn present(cfg: &ScenarioConfig) -> Vec<&'static str> {
    let mut v = Vec::new();
    if cfg.sweep.is_some() {
        v.push("sweep");
    }
    if cfg.simulate.is_some() {
        v.push("simulate");
    }
    if cfg.shock.is_some() {
        v.push("shock");
    }
    if cfg.verify.is_some() {
        v.push("verify");
    }
    if cfg.labor.is_some() {
        v.push("labor");
    }
    v
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be a positive number, got {x}")))
    }
}

fn model_err(prefix: &str, e: credit_growth::ModelError) -> ConfigError {
    match e {
        credit_growth::ModelError::Domain { field, value, reason } => {
            field_err(format!("{prefix}.{field}"), format!("{value} {reason}"))
        }
        other => field_err(prefix, other.to_string()),
    }
}

fn resolve(mut cfg: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let cmd = cfg.command;
    for section in present(&cfg) {
        if section != cmd.name() {
            return Err(field_err(
                section,
                format!("section is not used by command `{}`", cmd.name()),
            ));
        }
    }
    match (&cfg.params, &cfg.sample_box) {
        (Some(_), Some(_)) => return Err(field_err("box", "`params` and `box` are mutually exclusive")),
        (None, None) => return Err(field_err("params", "missing")),
        (None, Some(_)) if cmd != Command::Verify => {
            return Err(field_err("box", format!("command `{}` takes `params`, not `box`", cmd.name())))
        }
        _ => {}
    }
    if let Some(p) = cfg.model_params() {
        p.validate().map_err(|e| model_err("params", e))?;
    }
    if let Some(b) = cfg.param_box() {
        b.validate().map_err(|e| model_err("box", e))?;
    }
    let t = cfg.tolerances;
    for (name, v) in [
        ("tolerances.residual", t.residual),
        ("tolerances.identity", t.identity),
        ("tolerances.fixed_point", t.fixed_point),
        ("tolerances.noise", t.noise),
        ("tolerances.degeneracy", t.degeneracy),
        ("tolerances.eps_regime", t.eps_regime),
    ] {
        positive(name, v)?;
    }
    if let Some(y) = cfg.years_per_period {
        positive("years_per_period", y)?;
    }
    if cfg.output.dir.is_empty() {
        return Err(field_err("output.dir", "must not be empty"));
    }
    match cmd {
        Command::Steady => {}
        Command::Sweep => {
            let s = cfg.sweep.as_mut().ok_or_else(|| field_err("sweep", "missing"))?;
            if s.field().is_none() {
                return Err(field_err(
                    "sweep.axis",
                    format!(
                        "unknown parameter `{}`; expected one of {}",
                        s.axis,
                        ParamField::ALL.map(|f| f.name()).join(", ")
                    ),
                ));
            }
            let ranged = s.start.is_some() || s.stop.is_some() || s.steps.is_some();
            match (&s.values, ranged) {
                (Some(_), true) => {
                    return Err(field_err(
                        "sweep.values",
                        "give either `values` or `start`/`stop`/`steps`, not both",
                    ))
                }
                (None, false) => return Err(field_err("sweep.values", "missing")),
                (None, true) => {
                    let (Some(a), Some(b), Some(n)) = (s.start, s.stop, s.steps) else {
                        return Err(field_err("sweep.steps", "`start`, `stop` and `steps` go together"));
                    };
                    if n < 2 {
                        return Err(field_err("sweep.steps", "must be at least 2"));
                    }
                    let h = (b - a) / (n - 1) as f64;
                    let mut v: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
                    v[n - 1] = b;
                    s.values = Some(v);
                    s.start = None;
                    s.stop = None;
                    s.steps = None;
                }
                (Some(_), false) => {}
            }
            let v = s.grid();
            if v.is_empty() {
                return Err(field_err("sweep.values", "must not be empty"));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(field_err("sweep.values", format!("non-finite value {x}")));
            }
        }
        Command::Simulate => {
            let s = cfg.simulate.get_or_insert_with(SimulateSection::default);
            if s.horizon == 0 {
                return Err(field_err("simulate.horizon", "must be at least 1"));
            }
            positive("simulate.k0", s.k0)?;
            positive("simulate.m0", s.m0)?;
            if let Some(x) = s.phi0 {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(field_err("simulate.phi0", format!("must be >= 0, got {x}")));
                }
            }
            if let Some(x) = s.r0 {
                positive("simulate.r0", x)?;
            }
        }
        Command::Shock => {
            let s = cfg.shock.as_ref().ok_or_else(|| field_err("shock", "missing"))?;
            let eps = cfg.params.map(|p| p.eps).unwrap_or(0.0);
            if !(s.eps_new.is_finite() && s.eps_new >= eps) {
                return Err(field_err("shock.eps_new", format!("must be >= params.eps = {eps}")));
            }
            if s.horizon == 0 || s.period >= s.horizon {
                return Err(field_err("shock.period", "must lie inside the horizon"));
            }
            if cfg.variant != Variant::Main {
                return Err(field_err("variant", "the shock experiment runs on the main variant"));
            }
            positive("shock.k0", s.k0)?;
            positive("shock.m0", s.m0)?;
        }
        Command::Verify => {
            let point = cfg.params.is_some();
            let v = cfg.verify.get_or_insert_with(VerifySection::default);
            let n = *v.n.get_or_insert(if point { 1 } else { 100 });
            if n == 0 {
                return Err(field_err("verify.n", "must be at least 1"));
            }
            v.props.get_or_insert_with(|| PropositionId::ALL.to_vec());
            positive("verify.eps_probe", v.eps_probe)?;
            positive("verify.limit_rel_tol", v.limit_rel_tol)?;
            if v.max_draws == 0 {
                return Err(field_err("verify.max_draws", "must be at least 1"));
            }
        }
        Command::Labor => {
            let l = cfg.labor.as_ref().ok_or_else(|| field_err("labor", "missing"))?;
            if !(l.rho > 0.0 && l.rho < 1.0) {
                return Err(field_err("labor.rho", format!("must lie in (0, 1), got {}", l.rho)));
            }
            if let Some(n) = l.nx_fixed {
                if !(0.0..=1.0).contains(&n) {
                    return Err(field_err("labor.nx_fixed", format!("must lie in [0, 1], got {n}")));
                }
            }
        }
    }
    Ok(cfg)
}
