//! Shared pieces of the acceptance run: the sampling boxes and a small
//! pass/fail ledger that prints one line per criterion.

use credit_growth::{Interval, ModelParams, ParamBox, ParamField, Variant};

/// The reference point: alpha = 0.3, A = 10, eps = 0, eta = 0.5, delta = 1,
/// theta = 0.1, theta_x = 0.2, mu = 0.1.
pub fn reference() -> ModelParams<f64> {
    ModelParams::reference()
}

/// Reference point +/- 10% with `delta` in `[0.9, 1]` and `eps` in `[0, eps_hi]`.
pub fn reference_box(variant: Variant, eps_hi: f64) -> ParamBox<f64> {
    let mut b = ParamBox::around(&reference(), 0.1).with(ParamField::Eps, Interval::new(0.0, eps_hi));
    b.variant = variant;
    b
}

/// The reference box with the two collateral fractions swapped (theta > theta_x).
pub fn mirror_box(variant: Variant, eps_hi: f64) -> ParamBox<f64> {
    let b = reference_box(variant, eps_hi);
    let (theta, theta_x) = (b.theta, b.theta_x);
    b.with(ParamField::Theta, theta_x).with(ParamField::ThetaX, theta)
}

/// Reference box with a lower wage share, where the landless economy's
/// collateral constraint binds (`1 + r* < Rc`).
pub fn landless_box() -> ParamBox<f64> {
    reference_box(Variant::Landless, 0.0).with(ParamField::Eta, Interval::new(0.27, 0.33))
}

/// Wide prototype box: both collateral fractions in `[0.05, 0.3]`.
pub fn wide_box(eps_hi: f64) -> ParamBox<f64> {
    reference_box(Variant::Main, eps_hi)
        .with(ParamField::Theta, Interval::new(0.05, 0.3))
        .with(ParamField::ThetaX, Interval::new(0.05, 0.3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub details: Vec<String>,
}

impl Outcome {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            pass: true,
            details: Vec::new(),
        }
    }

    /// Records a sub-check; any failing sub-check fails the criterion.
    pub fn check(&mut self, ok: bool, what: impl AsRef<str>) -> bool {
        self.pass &= ok;
        self.details
            .push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, what.as_ref()));
        ok
    }

    /// Descriptive line that does not affect the verdict.
    pub fn info(&mut self, what: impl AsRef<str>) {
        self.details.push(format!("info {}", what.as_ref()));
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title
        )
    }
}

#[derive(Debug, Default)]
pub struct Ledger {
    pub outcomes: Vec<Outcome>,
}

impl Ledger {
    pub fn push(&mut self, o: Outcome) {
        println!("{}", o.line());
        for d in &o.details {
            println!("    {d}");
        }
        self.outcomes.push(o);
    }

    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self.outcomes.iter().filter(|o| !o.pass).map(|o| o.id.as_str()).collect();
        if failed.is_empty() {
            format!("acceptance: all {} criteria pass", self.outcomes.len())
        } else {
            format!(
                "acceptance: {} of {} criteria pass; failing: {}",
                self.outcomes.len() - failed.len(),
                self.outcomes.len(),
                failed.join(", ")
            )
        }
    }
}
