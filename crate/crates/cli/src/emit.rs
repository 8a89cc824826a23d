//! Tables, CSV/JSON files and plot data.
//!
//! Numbers go out with 17 significant digits and a '.' decimal point, so a
//! file read back reproduces the run bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use credit_growth::{FullParticipation, LevelRow, PriceRent};
use thiserror::Error;

use crate::run::{Annualized, Results, RunReport};
use crate::scenario::Format;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("plot kind `{kind}` needs a {wanted} report, got {found}")]
    Mismatch {
        kind: &'static str,
        wanted: &'static str,
        found: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SweepCurve,
    Trajectory,
    ShockComparison,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::SweepCurve => "sweep-curve",
            PlotKind::Trajectory => "trajectory",
            PlotKind::ShockComparison => "shock-comparison",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::SweepCurve => "sweep_curve.dat",
            PlotKind::Trajectory => "trajectory.dat",
            PlotKind::ShockComparison => "shock_comparison.dat",
        }
    }

    /// The plot that belongs to a payload, if any.
    pub fn for_results(r: &Results) -> Option<Self> {
        match r {
            Results::Sweep(_) => Some(PlotKind::SweepCurve),
            Results::Simulate(_) => Some(PlotKind::Trajectory),
            Results::Shock(_) => Some(PlotKind::ShockComparison),
            _ => None,
        }
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Comment line naming the tool and every resolved input.
pub fn provenance(report: &RunReport) -> String {
    let cfg = &report.config;
    let mut s = format!(
        "# {} {} command={} variant={} seed={}",
        report.tool,
        report.version,
        cfg.command.name(),
        cfg.variant,
        cfg.seed
    );
    if let Some(p) = &cfg.params {
        let _ = write!(
            s,
            " a={} alpha={} eps={} eta={} delta={} theta={} theta_x={} mu={}",
            p.a, p.alpha, p.eps, p.eta, p.delta, p.theta, p.theta_x, p.mu
        );
    }
    if let Some(b) = cfg.param_box() {
        let _ = write!(s, " box={}", credit_growth::sampling::describe_box(&b));
    }
    if let Some(y) = cfg.years_per_period {
        let _ = write!(s, " years_per_period={y}");
    }
    s
}

fn csv_text(header_line: &str, columns: &[String], rows: Vec<Vec<String>>) -> Result<String, EmitError> {
    let mut out = Vec::new();
    out.extend_from_slice(header_line.as_bytes());
    out.push(b'\n');
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("ascii output"))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn annual_cells(a: Option<Annualized>, years: Option<f64>) -> Vec<String> {
    match (a, years) {
        (Some(a), _) => vec![num(a.growth), num(a.rate)],
        (None, Some(_)) => vec![num(f64::NAN), num(f64::NAN)],
        (None, None) => Vec::new(),
    }
}

fn price_rent(x: &PriceRent<f64>) -> f64 {
    match x {
        PriceRent::Finite(v) => *v,
        PriceRent::Infinite => f64::INFINITY,
    }
}

fn full_participation(x: &FullParticipation<f64>) -> f64 {
    match x {
        FullParticipation::Finite(v) => *v,
        FullParticipation::NoEquilibrium => f64::NAN,
    }
}

const LEVEL_COLUMNS: [&str; 16] = [
    "phi", "r_gross", "k", "k_next", "p", "q", "m", "qm", "w", "y", "d", "transfer", "transfer_per_saver",
    "c_budget", "c_goods", "g",
];

fn level_cells(r: &LevelRow<f64>) -> Vec<String> {
    [
        r.phi,
        r.r_gross,
        r.k,
        r.k_next,
        r.p,
        r.q,
        r.m,
        r.qm,
        r.w,
        r.y,
        r.d,
        r.transfer,
        r.transfer_per_saver,
        r.c_budget,
        r.c_goods,
        r.g,
    ]
    .into_iter()
    .map(num)
    .collect()
}

/// `(quantity, value)` pairs for the single-point commands.
pub fn key_values(report: &RunReport) -> Vec<(String, f64)> {
    let mut kv: Vec<(String, f64)> = Vec::new();
    let mut push = |k: &str, v: f64| kv.push((k.to_string(), v));
    match &report.results {
        Some(Results::Steady(s)) => {
            let (sol, d) = (&s.solution, &s.diagnostics);
            push("phi_star", sol.phi_star);
            push("g_gross", sol.g_gross);
            push("r_gross", sol.r_gross);
            push("rx_star", sol.rx_star);
            push("lambda_star", sol.lambda_star);
            push("lev_capital", sol.lev_capital);
            push("downpayment_land", sol.downpayment_land);
            push("residual", sol.residual);
            push("companion_root", sol.companion_root.unwrap_or(f64::NAN));
            push("credit_gdp", d.credit_gdp);
            push("money_share", d.money_share);
            push("price_rent_model", price_rent(&d.price_rent_model));
            push("price_rent_full_participation", full_participation(&d.price_rent_full_participation));
            push("ordering_ok", if d.ordering_ok { 1.0 } else { 0.0 });
            push("multiplier", d.multiplier);
            push("multiplier_land", d.multiplier_land.unwrap_or(f64::NAN));
            if let Some(a) = s.annualized {
                push("g_annual", a.growth);
                push("r_annual", a.rate);
            }
        }
        Some(Results::Labor(l)) => {
            push("rho", l.rho);
            push("nx", l.nx);
            push("wage_capital", l.wage_capital);
            push("wage_land", l.wage_land);
            push("income_coefficient", l.income_coefficient);
            push("coefficient_without_land_labor", l.coefficient_without_land_labor);
            if let Some(s) = &l.steady {
                push("phi_star", s.phi_star);
                push("g_gross", s.g_gross);
                push("r_gross", s.r_gross);
            }
        }
        _ => {}
    }
    kv
}

/// The command's table as CSV text, or `None` when the report has no payload.
pub fn csv_table(report: &RunReport) -> Result<Option<(String, String)>, EmitError> {
    let head = provenance(report);
    let years = report.config.years_per_period;
    let annual_cols = if years.is_some() {
        strings(&["g_annual", "r_annual"])
    } else {
        Vec::new()
    };
    let Some(results) = &report.results else {
        return Ok(None);
    };
    let (name, text) = match results {
        Results::Steady(_) | Results::Labor(_) => {
            let rows = key_values(report).into_iter().map(|(k, v)| vec![k, num(v)]).collect();
            (
                format!("{}.csv", results.kind()),
                csv_text(&head, &strings(&["quantity", "value"]), rows)?,
            )
        }
        Results::Sweep(s) => {
            let mut cols = vec![s.axis.clone()];
            cols.extend(strings(&[
                "phi_star",
                "g_gross",
                "r_gross",
                "credit_gdp",
                "money_share",
                "ordering_ok",
                "status",
            ]));
            cols.extend(annual_cols);
            let rows = s
                .rows
                .iter()
                .map(|r| {
                    let mut c = vec![
                        num(r.value),
                        num(r.phi_star),
                        num(r.g_gross),
                        num(r.r_gross),
                        num(r.credit_gdp),
                        num(r.money_share),
                        r.ordering_ok.to_string(),
                        r.status.clone(),
                    ];
                    c.extend(annual_cells(r.annualized, years));
                    c
                })
                .collect();
            ("sweep.csv".to_string(), csv_text(&head, &cols, rows)?)
        }
        Results::Simulate(s) => {
            let mut cols = vec!["t".to_string()];
            cols.extend(strings(&LEVEL_COLUMNS));
            cols.extend(annual_cols);
            let rows = s
                .levels
                .rows
                .iter()
                .map(|r| {
                    let mut c = vec![r.t.to_string()];
                    c.extend(level_cells(r));
                    c.extend(annual_cells(Annualized::from_years(years, r.g, r.r_gross), years));
                    c
                })
                .collect();
            ("trajectory.csv".to_string(), csv_text(&head, &cols, rows)?)
        }
        Results::Shock(s) => {
            let mut cols = vec!["t".to_string()];
            for side in ["baseline", "shocked"] {
                cols.extend(LEVEL_COLUMNS.iter().map(|c| format!("{side}_{c}")));
            }
            let rows = s
                .baseline
                .rows
                .iter()
                .zip(&s.shocked.rows)
                .map(|(b, x)| {
                    let mut c = vec![b.t.to_string()];
                    c.extend(level_cells(b));
                    c.extend(level_cells(x));
                    c
                })
                .collect();
            ("shock.csv".to_string(), csv_text(&head, &cols, rows)?)
        }
        Results::Verify(v) => {
            let rows = v
                .counts
                .iter()
                .map(|(id, c)| {
                    vec![
                        id.name().to_string(),
                        c.pass.to_string(),
                        c.fail.to_string(),
                        c.out_of_regime.to_string(),
                    ]
                })
                .collect();
            (
                "verify.csv".to_string(),
                csv_text(&head, &strings(&["proposition", "pass", "fail", "out_of_regime"]), rows)?,
            )
        }
    };
    Ok(Some((name, text)))
}

/// Plot-ready text for `kind`: a one-line header naming units, then
/// whitespace-separated numeric columns.
pub fn emit_plot_data(report: &RunReport, kind: PlotKind) -> Result<String, EmitError> {
    let found = report.results.as_ref().map_or("empty".to_string(), |r| r.kind().to_string());
    let mismatch = |wanted| EmitError::Mismatch {
        kind: kind.name(),
        wanted,
        found: found.clone(),
    };
    let mut out = String::new();
    match (kind, &report.results) {
        (PlotKind::SweepCurve, Some(Results::Sweep(s))) => {
            let _ = writeln!(out, "# {} [parameter value]  g_gross [gross growth factor per generation]", s.axis);
            for r in &s.rows {
                let _ = writeln!(out, "{} {}", num(r.value), num(r.g_gross));
            }
        }
        (PlotKind::SweepCurve, _) => return Err(mismatch("sweep")),
        (PlotKind::Trajectory, Some(Results::Simulate(s))) => {
            let _ = writeln!(
                out,
                "# t [generation]  series  value [phi: land value / capital; r_gross, g: gross factor per generation]"
            );
            for r in &s.levels.rows {
                for (name, v) in [("phi", r.phi), ("r_gross", r.r_gross), ("g", r.g)] {
                    let _ = writeln!(out, "{} {name} {}", r.t, num(v));
                }
            }
        }
        (PlotKind::Trajectory, _) => return Err(mismatch("simulate")),
        (PlotKind::ShockComparison, Some(Results::Shock(s))) => {
            let _ = writeln!(
                out,
                "# t [generation]  series  baseline  shocked [k, p, y: units of initial capital; g: gross factor]"
            );
            for (b, x) in s.baseline.rows.iter().zip(&s.shocked.rows) {
                for (name, vb, vx) in [("k", b.k, x.k), ("p", b.p, x.p), ("y", b.y, x.y), ("g", b.g, x.g)] {
                    let _ = writeln!(out, "{} {name} {} {}", b.t, num(vb), num(vx));
                }
            }
        }
        (PlotKind::ShockComparison, _) => return Err(mismatch("shock")),
    }
    Ok(out)
}

pub fn report_json(report: &RunReport) -> Result<String, EmitError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Writes `report.json`, the command's table in the chosen format and its plot
/// data, and returns the paths written.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<(), EmitError> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put("report.json", &report_json(report)?)?;
    if let Some(results) = &report.results {
        match report.config.output.format {
            Format::Csv => {
                if let Some((name, text)) = csv_table(report)? {
                    put(&name, &text)?;
                }
            }
            Format::Json => {
                let mut s = serde_json::to_string_pretty(results)?;
                s.push('\n');
                put(&format!("{}.json", results.kind()), &s)?;
            }
        }
        if let Results::Verify(v) = results {
            let mut s = serde_json::to_string_pretty(v)?;
            s.push('\n');
            put("verdicts.json", &s)?;
        }
        if report.config.output.plot {
            if let Some(kind) = PlotKind::for_results(results) {
                put(kind.file_name(), &emit_plot_data(report, kind)?)?;
            }
        }
    }
    Ok(written)
}

/// Short human-readable summary for the terminal.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", provenance(report));
    match &report.results {
        Some(Results::Steady(_)) | Some(Results::Labor(_)) => {
            for (k, v) in key_values(report) {
                let _ = writeln!(out, "{k:<32} {v:>24.12}");
            }
        }
        Some(Results::Sweep(s)) => {
            let _ = writeln!(
                out,
                "{:>14} {:>14} {:>14} {:>14} {:>12} {:>12} {:>8}  status",
                s.axis, "phi*", "1+g*", "1+r*", "credit/GDP", "money", "order"
            );
            for r in &s.rows {
                let _ = writeln!(
                    out,
                    "{:>14.8} {:>14.10} {:>14.10} {:>14.10} {:>12.8} {:>12.8} {:>8}  {}",
                    r.value, r.phi_star, r.g_gross, r.r_gross, r.credit_gdp, r.money_share, r.ordering_ok, r.status
                );
            }
        }
        Some(Results::Simulate(s)) => {
            let _ = writeln!(
                out,
                "outcome {:?} after {} periods ({} snaps)",
                s.outcome,
                s.levels.rows.len(),
                s.snaps
            );
            if let Some(e) = &s.exit {
                let _ = writeln!(out, "exit: {e}");
            }
            let _ = writeln!(out, "{:>4} {:>14} {:>14} {:>14} {:>14}", "t", "phi", "1+r", "1+g", "K");
            for r in &s.levels.rows {
                let _ = writeln!(out, "{:>4} {:>14.10} {:>14.10} {:>14.10} {:>14.6e}", r.t, r.phi, r.r_gross, r.g, r.k);
            }
        }
        Some(Results::Shock(s)) => {
            let c = &s.checks;
            let _ = writeln!(out, "eps {} -> {} at t = {}", s.eps_old, s.eps_new, s.shock_period);
            let _ = writeln!(out, "land price jumps   {}", c.land_price_jumps);
            let _ = writeln!(out, "output jumps       {}", c.output_jumps);
            let _ = writeln!(out, "growth falls       {}", c.growth_falls);
            let _ = writeln!(out, "capital crossover  {:?}", c.capital_crossover);
            let _ = writeln!(out, "output crossover   {:?}", c.output_crossover);
            let _ = writeln!(out, "long-run growth    {:.12} (new steady state {:.12})", c.long_run_growth, c.new_steady_growth);
        }
        Some(Results::Verify(v)) => {
            let _ = writeln!(out, "{:<8} {:>6} {:>6} {:>8}", "prop", "pass", "fail", "regime");
            for (id, c) in &v.counts {
                let _ = writeln!(out, "{:<8} {:>6} {:>6} {:>8}", id.name(), c.pass, c.fail, c.out_of_regime);
            }
            if !v.failures.is_empty() {
                let _ = writeln!(out, "{} witness(es) in verdicts.json", v.failures.len());
            }
        }
        None => {}
    }
    for c in report.checks.iter().filter(|c| !c.ok) {
        let _ = writeln!(out, "VIOLATED {}: {:e} (bound {:e})", c.name, c.value, c.bound);
    }
    let _ = writeln!(
        out,
        "status {} ({:?}){}",
        report.status.code,
        report.status.kind,
        report.status.message.as_ref().map(|m| format!(": {m}")).unwrap_or_default()
    );
    out
}
