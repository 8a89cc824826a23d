//! Derivatives of steady-state objects and sign certification of the propositions.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{check_assumptions, derive_constants, ModelParams, ParamField, Variant};
use crate::sampling::{describe_box, sample_parameters_with, ParamBox, SampleOptions};
use crate::scalar::{lit, rel_diff, to_f64, Scalar};
use crate::steady::{self, diagnostics};
use crate::tolerances::Tolerances;

/// Halvings allowed when `x +/- h` leaves the admissible region.
const MAX_SHRINK: usize = 40;

/// A central-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative<T> {
    /// `(f(x + h) - f(x - h)) / 2h`.
    pub value: T,
    /// Richardson extrapolation of the `h` and `h/2` estimates.
    pub refined: T,
    /// `|D(h) - D(h/2)| / 3`, the leading-order error of `value`.
    pub error: T,
    /// Step actually used (after any shrinking).
    pub h: T,
}

/// `1e-6 max(1, |x|)` in `f64`; `cbrt(machine eps)` relative in lower precision.
pub fn default_step<T: Scalar>(x: T) -> T {
    let rel = if T::epsilon() > lit(1e-10) {
        T::epsilon().cbrt()
    } else {
        lit(1e-6)
    };
    rel * x.abs().max(T::one())
}

/// Central difference of `f` at `x`, halving `h` until both `x +/- h` (and
/// `x +/- h/2`) evaluate. Never falls back to a one-sided difference.
pub fn central_diff<T, F>(mut f: F, x: T, h: T) -> Result<Derivative<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let two = lit::<T>(2.0);
    let mut h = h;
    for _ in 0..MAX_SHRINK {
        let wide = f(x + h).and_then(|a| f(x - h).map(|b| (a - b) / (two * h)));
        let half = h / two;
        let narrow = f(x + half).and_then(|a| f(x - half).map(|b| (a - b) / (two * half)));
        if let (Ok(d1), Ok(d2)) = (wide, narrow) {
            if d1.is_finite() && d2.is_finite() {
                let three = lit::<T>(3.0);
                return Ok(Derivative {
                    value: d1,
                    refined: (lit::<T>(4.0) * d2 - d1) / three,
                    error: (d1 - d2).abs() / three,
                    h,
                });
            }
        }
        h = half;
    }
    Err(ModelError::NoAdmissibleStep { x: to_f64(x) })
}

/// Steady-state quantity to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Phi,
    Growth,
    Rate,
    CreditGdp,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Output::Phi => "phi",
            Output::Growth => "g_gross",
            Output::Rate => "r_gross",
            Output::CreditGdp => "credit_gdp",
        }
    }
}

/// `out` at the steady state of `p` (variant-dispatched solver).
pub fn steady_output<T: Scalar>(p: &ModelParams<T>, out: Output, tol: &Tolerances<T>) -> Result<T> {
    let sol = steady::solve_with(p, tol)?;
    Ok(match out {
        Output::Phi => sol.phi_star,
        Output::Growth => sol.g_gross,
        Output::Rate => sol.r_gross,
        Output::CreditGdp => diagnostics(&sol, p)?.credit_gdp,
    })
}

/// `d out / d field` at `p` by central differences on the steady-state solver.
pub fn partial<T: Scalar>(p: &ModelParams<T>, field: ParamField, out: Output, tol: &Tolerances<T>) -> Result<Derivative<T>> {
    let x = p.get(field);
    central_diff(|v| steady_output(&p.with(field, v), out, tol), x, default_step(x))
}

/// `d(1 + g*)/d mu` from the `eps = 0` closed form.
pub fn dg_dmu_closed_form<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    let c = derive_constants(p)?;
    Ok(-c.capital_return * (p.theta_x - p.theta) / (T::one() - p.theta_x))
}

/// `d(1 + g*)/d theta_x` from the `eps = 0` closed form.
pub fn dg_dtheta_x_closed_form<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    let c = derive_constants(p)?;
    let one = T::one();
    let m1 = one + p.mu;
    let tx = one - p.theta_x;
    Ok(c.capital_return * (-m1 * tx + (one - p.theta - (p.theta_x - p.theta) * m1)) / (tx * tx))
}

/// Limits of the steady-state derivatives as `eps -> 0` (main model).
///
/// `*_dland` are per unit of the land term `eps a^alpha`; `*_deps` multiply by
/// `a^alpha` to give derivatives per unit of `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsLimits<T> {
    pub dphi_dland: T,
    pub dg_dland: T,
    pub land_per_eps: T,
    pub dphi_deps: T,
    pub dg_deps: T,
    /// `phi*` at `eps = 0`.
    pub phi0: T,
}

pub fn eps_limits<T: Scalar>(p: &ModelParams<T>) -> Result<EpsLimits<T>> {
    let p0 = ModelParams { eps: T::zero(), ..*p };
    let sol = steady::solve_eps_zero(&p0)?;
    let c = derive_constants(&p0)?;
    let one = T::one();
    let big_a = c.productivity;
    let rc = c.capital_return;
    let m1 = one + p.mu;
    let k = one - p.theta_x * m1;
    let b0 = rc * (one - p.theta) / (one - p.theta_x);
    let wage = p.eta * (one - p.alpha);
    let dphi_dland = (b0 * k * k + big_a * p.theta_x * m1 * wage) / (k * (wage * big_a - b0 * k));
    let dg_dland = -rc * (one - p.theta) / ((one - p.theta_x) * sol.phi_star);
    let land_per_eps = p.a.powf(p.alpha);
    Ok(EpsLimits {
        dphi_dland,
        dg_dland,
        land_per_eps,
        dphi_deps: dphi_dland * land_per_eps,
        dg_deps: dg_dland * land_per_eps,
        phi0: sol.phi_star,
    })
}

/// Right-hand side of `1 + g* = R^x*` as a function of the gross rate (limit `eps -> 0`).
pub fn growth_of_rate<T: Scalar>(p: &ModelParams<T>, r_gross: T) -> Result<T> {
    let c = derive_constants(p)?;
    let one = T::one();
    let rc = c.capital_return;
    Ok(rc * (one - p.theta) * r_gross / ((one - p.theta_x) * r_gross + rc * (p.theta_x - p.theta)))
}

/// Propositions with a checkable sign or ordering claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PropositionId {
    P2i,
    P2ii,
    P3,
    P4,
    P7,
    P8,
    PA1,
    PA3i,
    PA3ii,
    PA3iii,
    L1,
}

impl PropositionId {
    pub const ALL: [PropositionId; 11] = [
        PropositionId::P2i,
        PropositionId::P2ii,
        PropositionId::P3,
        PropositionId::P4,
        PropositionId::P7,
        PropositionId::P8,
        PropositionId::PA1,
        PropositionId::PA3i,
        PropositionId::PA3ii,
        PropositionId::PA3iii,
        PropositionId::L1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropositionId::P2i => "P2i",
            PropositionId::P2ii => "P2ii",
            PropositionId::P3 => "P3",
            PropositionId::P4 => "P4",
            PropositionId::P7 => "P7",
            PropositionId::P8 => "P8",
            PropositionId::PA1 => "PA1",
            PropositionId::PA3i => "PA3i",
            PropositionId::PA3ii => "PA3ii",
            PropositionId::PA3iii => "PA3iii",
            PropositionId::L1 => "L1",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }

    /// The model variant the claim is about.
    pub fn variant(self) -> Variant {
        match self {
            PropositionId::P4 => Variant::Landless,
            PropositionId::PA3i | PropositionId::PA3ii | PropositionId::PA3iii => Variant::O3,
            _ => Variant::Main,
        }
    }

    /// Claims proved only for "eps sufficiently small".
    pub fn needs_small_eps(self) -> bool {
        matches!(
            self,
            PropositionId::P2i | PropositionId::P2ii | PropositionId::P3 | PropositionId::L1 | PropositionId::PA1 | PropositionId::P7
        )
    }

    /// Claims whose sign is `sign(theta - theta_x)` and so degenerate at `theta = theta_x`.
    pub fn sign_depends_on_spread(self) -> bool {
        matches!(self, PropositionId::P3 | PropositionId::PA3ii | PropositionId::L1)
    }

    pub fn claim(self) -> Claim {
        match self {
            PropositionId::P2i | PropositionId::PA3i => Claim::Negative,
            PropositionId::P2ii | PropositionId::PA3iii | PropositionId::P4 | PropositionId::PA1 => Claim::Positive,
            PropositionId::P3 | PropositionId::PA3ii => Claim::SignThetaMinusThetaX,
            PropositionId::L1 => Claim::SignThetaXMinusTheta,
            PropositionId::P7 => Claim::Mixed,
            PropositionId::P8 => Claim::Ordering,
        }
    }
}

impl fmt::Display for PropositionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Headline claim of a proposition (its growth derivative, or the ordering).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Positive,
    Negative,
    SignThetaMinusThetaX,
    SignThetaXMinusTheta,
    /// Several components with their own signs.
    Mixed,
    Ordering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    OutOfRegime,
    Degenerate,
}

/// One checked derivative (or inequality) inside a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component<T> {
    pub name: String,
    /// +1 or -1; 0 for inequality checks where `estimate` is a margin that must be positive.
    pub claimed_sign: i8,
    pub estimate: T,
    pub error: T,
    /// Value of the differentiated function at the point (scales the noise floor).
    pub level: T,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionVerdict<T> {
    pub prop_id: PropositionId,
    /// The point as evaluated (variant set to the proposition's own variant).
    pub point: ModelParams<T>,
    pub claimed_sign: Claim,
    pub components: Vec<Component<T>>,
    pub status: Status,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions<T> {
    pub tol: Tolerances<T>,
    /// Certify at `mu <= 0` too.
    pub allow_nonpositive_mu: bool,
    /// `eps` at which the `eps -> 0` limits are compared with central differences.
    pub eps_probe: T,
    /// Relative agreement required between those limits and the differences.
    pub limit_rel_tol: T,
}

impl<T: Scalar> Default for VerifyOptions<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::standard(),
            allow_nonpositive_mu: false,
            eps_probe: lit(1e-6),
            limit_rel_tol: lit(1e-3),
        }
    }
}

fn sign_component<T: Scalar>(name: &str, sign: i8, d: Derivative<T>, level: T, noise: T) -> Component<T> {
    let floor = noise * level.abs().max(T::one());
    let ok = d.value.abs() > floor && ((d.value > T::zero()) == (sign > 0));
    Component {
        name: name.to_string(),
        claimed_sign: sign,
        estimate: d.value,
        error: d.error,
        level,
        ok,
    }
}

fn margin_component<T: Scalar>(name: &str, margin: T) -> Component<T> {
    Component {
        name: name.to_string(),
        claimed_sign: 0,
        estimate: margin,
        error: T::zero(),
        level: T::zero(),
        ok: margin > T::zero(),
    }
}

fn verdict<T: Scalar>(
    prop_id: PropositionId,
    point: ModelParams<T>,
    status: Status,
    components: Vec<Component<T>>,
    note: Option<String>,
) -> PropositionVerdict<T> {
    PropositionVerdict {
        prop_id,
        point,
        claimed_sign: prop_id.claim(),
        components,
        pass: status == Status::Pass,
        status,
        note,
    }
}

/// Checks one proposition at one point. Points outside the proposition's
/// stated regime are reported as such, never as failures.
pub fn verify_proposition<T: Scalar>(p: &ModelParams<T>, prop_id: PropositionId) -> Result<PropositionVerdict<T>> {
    verify_proposition_with(p, prop_id, &VerifyOptions::default())
}

pub fn verify_proposition_with<T: Scalar>(
    p: &ModelParams<T>,
    prop_id: PropositionId,
    opts: &VerifyOptions<T>,
) -> Result<PropositionVerdict<T>> {
    let mut point = p.with_variant(prop_id.variant());
    if point.variant == Variant::Landless {
        point.eps = T::zero();
    }
    point.validate()?;
    let tol = &opts.tol;
    let out = |note: String| Ok(verdict(prop_id, point, Status::OutOfRegime, Vec::new(), Some(note)));

    let report = check_assumptions(&point)?;
    if let Some(g) = report.first_failure() {
        return out(format!("assumption {} fails (margin {:e})", g.id.name(), to_f64(g.margin)));
    }
    if !opts.allow_nonpositive_mu && !(point.mu > T::zero()) {
        return out("mu <= 0".into());
    }
    if prop_id.needs_small_eps() && point.eps > tol.eps_regime {
        return out(format!("eps = {} above the small-eps threshold", to_f64(point.eps)));
    }
    let spread = point.theta - point.theta_x;
    if prop_id.sign_depends_on_spread() && spread.abs() < tol.degeneracy {
        return Ok(verdict(
            prop_id,
            point,
            Status::Degenerate,
            Vec::new(),
            Some("theta and theta_x coincide within the degeneracy floor".into()),
        ));
    }
    match prop_id {
        PropositionId::P8 if !(point.theta_x > point.theta) => return out("requires theta_x > theta".into()),
        PropositionId::P4 if !(point.theta > T::zero()) => return out("requires theta > 0".into()),
        _ => {}
    }

    let sol = steady::solve_with(&point, tol)?;
    let level = |o: Output| -> Result<T> {
        Ok(match o {
            Output::Phi => sol.phi_star,
            Output::Growth => sol.g_gross,
            Output::Rate => sol.r_gross,
            Output::CreditGdp => diagnostics(&sol, &point)?.credit_gdp,
        })
    };
    let mut components = Vec::new();
    let mut note = None;
    let check = |field: ParamField, o: Output, sign: i8, components: &mut Vec<Component<T>>| -> Result<()> {
        let d = partial(&point, field, o, tol)?;
        let name = format!("d{}/d{}", o.name(), field.name());
        components.push(sign_component(&name, sign, d, level(o)?, tol.noise));
        Ok(())
    };
    let s_spread: i8 = if spread > T::zero() { 1 } else { -1 };

    let run = (|| -> Result<()> {
        match prop_id {
            PropositionId::P2i | PropositionId::PA3i => {
                check(ParamField::ThetaX, Output::Growth, -1, &mut components)?;
                check(ParamField::ThetaX, Output::Phi, 1, &mut components)?;
                check(ParamField::ThetaX, Output::Rate, -1, &mut components)?;
            }
            PropositionId::P2ii | PropositionId::PA3iii => {
                check(ParamField::Theta, Output::Growth, 1, &mut components)?;
                check(ParamField::Theta, Output::Phi, 1, &mut components)?;
                check(ParamField::Theta, Output::Rate, 1, &mut components)?;
            }
            PropositionId::P3 => {
                check(ParamField::Mu, Output::Growth, s_spread, &mut components)?;
            }
            PropositionId::PA3ii => {
                check(ParamField::Mu, Output::Growth, s_spread, &mut components)?;
                check(ParamField::Mu, Output::Phi, -s_spread, &mut components)?;
                check(ParamField::Mu, Output::Rate, -1, &mut components)?;
            }
            PropositionId::P4 => {
                check(ParamField::Mu, Output::Growth, 1, &mut components)?;
                check(ParamField::Mu, Output::Rate, -1, &mut components)?;
            }
            PropositionId::PA1 => {
                check(ParamField::Theta, Output::CreditGdp, 1, &mut components)?;
                check(ParamField::ThetaX, Output::CreditGdp, 1, &mut components)?;
                check(ParamField::Mu, Output::CreditGdp, 1, &mut components)?;
            }
            PropositionId::L1 => {
                let r = sol.r_gross;
                let d = central_diff(|x| growth_of_rate(&point, x), r, default_step(r))?;
                let lvl = growth_of_rate(&point, r)?;
                components.push(sign_component("dg_of_rate/dr", -s_spread, d, lvl, tol.noise));
            }
            PropositionId::P8 => {
                let c = derive_constants(&point)?;
                components.push(margin_component("Rc - Rx*", c.capital_return - sol.rx_star));
                let land = Component {
                    ok: sol.rx_star >= sol.g_gross,
                    ..margin_component("Rx* - (1+g*)", sol.rx_star - sol.g_gross)
                };
                components.push(land);
                components.push(margin_component("(1+g*) - (1+r*)", sol.g_gross - sol.r_gross));
            }
            PropositionId::P7 => {
                // probe at eps > 0 so that eps - h stays admissible
                let probe = ModelParams {
                    eps: point.eps.max(opts.eps_probe),
                    ..point
                };
                let x = probe.eps;
                let h = default_step(x).min(x);
                let dphi = central_diff(|v| steady_output(&probe.with(ParamField::Eps, v), Output::Phi, tol), x, h)?;
                let dg = central_diff(|v| steady_output(&probe.with(ParamField::Eps, v), Output::Growth, tol), x, h)?;
                components.push(sign_component("dphi/deps", 1, dphi, sol.phi_star, tol.noise));
                components.push(sign_component("dg_gross/deps", -1, dg, sol.g_gross, tol.noise));
                // limits at eps -> 0, compared at the fixed probe
                let lim = eps_limits(&point)?;
                let at = ModelParams { eps: opts.eps_probe, ..point };
                let x0 = at.eps;
                let h0 = default_step(x0).min(x0);
                let fphi = central_diff(|v| steady_output(&at.with(ParamField::Eps, v), Output::Phi, tol), x0, h0)?;
                let fg = central_diff(|v| steady_output(&at.with(ParamField::Eps, v), Output::Growth, tol), x0, h0)?;
                let gap_phi = rel_diff(fphi.value, lim.dphi_deps);
                let gap_g = rel_diff(fg.value, lim.dg_deps);
                components.push(Component {
                    name: "dphi/deps vs eps->0 limit (rel gap)".into(),
                    claimed_sign: 0,
                    estimate: gap_phi,
                    error: fphi.error,
                    level: lim.dphi_deps,
                    ok: gap_phi <= opts.limit_rel_tol,
                });
                components.push(Component {
                    name: "dg_gross/deps vs eps->0 limit (rel gap)".into(),
                    claimed_sign: 0,
                    estimate: gap_g,
                    error: fg.error,
                    level: lim.dg_deps,
                    ok: gap_g <= opts.limit_rel_tol,
                });
            }
        }
        Ok(())
    })();

    if let Err(e) = run {
        note = Some(format!("evaluation failed: {e}"));
    }
    let pass = note.is_none() && !components.is_empty() && components.iter().all(|c| c.ok);
    let status = if pass { Status::Pass } else { Status::Fail };
    Ok(verdict(prop_id, point, status, components, note))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub out_of_regime: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.pass + self.fail + self.out_of_regime
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary<T> {
    pub seed: u64,
    pub n: usize,
    pub box_description: String,
    pub rejection_rate: f64,
    pub counts: BTreeMap<PropositionId, Counts>,
    /// First failing verdicts per proposition, in sample order.
    pub failures: Vec<PropositionVerdict<T>>,
    pub failures_cap: usize,
}

impl<T: Scalar> VerdictSummary<T> {
    pub fn any_failure(&self) -> bool {
        self.counts.values().any(|c| c.fail > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOptions<T> {
    pub verify: VerifyOptions<T>,
    pub sample: SampleOptions,
    /// Failing witnesses stored per proposition.
    pub failures_cap: usize,
}

impl<T: Scalar> Default for BatchOptions<T> {
    fn default() -> Self {
        Self {
            verify: VerifyOptions::default(),
            sample: SampleOptions::default(),
            failures_cap: 10,
        }
    }
}

/// Samples `n` admissible points from `bx` and checks each requested proposition
/// at each point. Results are ordered by sample index, so the summary does not
/// depend on thread scheduling.
pub fn batch_verify<T: Scalar>(bx: &ParamBox<T>, n: usize, seed: u64, props: &[PropositionId]) -> Result<VerdictSummary<T>> {
    batch_verify_with(bx, n, seed, props, &BatchOptions::default())
}

pub fn batch_verify_with<T: Scalar>(
    bx: &ParamBox<T>,
    n: usize,
    seed: u64,
    props: &[PropositionId],
    opts: &BatchOptions<T>,
) -> Result<VerdictSummary<T>> {
    let mut summary = VerdictSummary {
        seed,
        n,
        box_description: describe_box(bx),
        rejection_rate: 0.0,
        counts: BTreeMap::new(),
        failures: Vec::new(),
        failures_cap: opts.failures_cap,
    };
    if props.is_empty() {
        return Ok(summary);
    }
    let sample = sample_parameters_with(bx, n, seed, opts.sample)?;
    summary.rejection_rate = sample.rejection_rate;
    let verdicts: Vec<Vec<PropositionVerdict<T>>> = sample
        .points
        .par_iter()
        .map(|p| props.iter().map(|&id| verify_proposition_with(p, id, &opts.verify)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    for &id in props {
        summary.counts.entry(id).or_default();
    }
    for row in verdicts {
        for v in row {
            let c = summary.counts.entry(v.prop_id).or_default();
            match v.status {
                Status::Pass => c.pass += 1,
                Status::Fail => {
                    c.fail += 1;
                    let stored = summary.failures.iter().filter(|f| f.prop_id == v.prop_id).count();
                    if stored < opts.failures_cap {
                        summary.failures.push(v);
                    }
                }
                Status::OutOfRegime | Status::Degenerate => c.out_of_regime += 1,
            }
        }
    }
    Ok(summary)
}
