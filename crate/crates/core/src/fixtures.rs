//! The six worked systems with pinned parameters, the closed forms of
//! their integrals and a perturbed negative control for each.

use crate::classify::{CaseTag, OdeSystem};
use crate::error::Result;
use crate::expr::{ParamBinding, SampleDomain};
use crate::field::Anchor;
use crate::odesolve::InitialCondition;

/// A worked system together with everything needed to verify it.
#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub title: &'static str,
    pub f: &'static str,
    pub g: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub y_range: (f64, f64),
    pub anchor: (f64, f64, f64),
    pub ic: (f64, f64, f64),
    pub span: f64,
    pub expected: CaseTag,
    /// Published `A`.
    pub a: &'static str,
    /// Published `B`, up to an additive constant.
    pub b: &'static str,
    /// Perturbed `(f, g)` that must lose the integral.
    pub control: (&'static str, &'static str),
}

impl Fixture {
    pub fn param_binding(&self) -> ParamBinding {
        self.params.iter().copied().collect()
    }

    pub fn domain(&self) -> SampleDomain {
        SampleDomain::new((0.1, 2.0), self.y_range)
    }

    pub fn anchor(&self) -> Anchor {
        Anchor::new(self.anchor.0, self.anchor.1, self.anchor.2)
    }

    /// Anchor used for the negative control: the initial point, which is
    /// admissible for the perturbed system even where the published anchor
    /// sits on a singular curve of the candidate integral.
    pub fn control_anchor(&self) -> Anchor {
        Anchor::new(self.ic.0, self.ic.1, 0.0)
    }

    pub fn ic(&self) -> InitialCondition {
        InitialCondition::new(self.ic.0, self.ic.1, self.ic.2)
    }

    pub fn system(&self) -> Result<OdeSystem> {
        OdeSystem::parse(self.f, self.g, self.param_binding(), self.domain())
    }

    pub fn control_system(&self) -> Result<OdeSystem> {
        OdeSystem::parse(
            self.control.0,
            self.control.1,
            self.param_binding(),
            self.domain(),
        )
    }
}

pub const CORPUS: [Fixture; 6] = [
    Fixture {
        name: "ex1",
        title: "anharmonic oscillator with nonlinear friction",
        f: "beta*y/(y^2+1)^2",
        g: "alpha*(y^2+1)",
        params: &[("alpha", 1.0), ("beta", 1.0)],
        y_range: (0.1, 2.0),
        anchor: (0.0, 0.0, 0.0),
        ic: (0.0, -3.75, 6.5),
        span: 5.0,
        expected: CaseTag::LienardAutonomous,
        a: "-beta/(2*(y^2+1))",
        b: "(2*alpha/3)*y^3 + 2*alpha*y - alpha*beta*z",
        control: ("beta*y/(y^2+1)^2", "alpha*(1.03*y^2+1)"),
    },
    Fixture {
        name: "ex2",
        title: "non-autonomous friction with a polynomial integral",
        f: "z/(2*y+z)^2",
        g: "alpha^2*(2*y^3+3*z*y^2+z^2*y) - y/(2*y+z)^2",
        params: &[("alpha", 1.0)],
        y_range: (0.1, 2.0),
        anchor: (0.0, 0.0, 0.0),
        ic: (0.5, 1.0, 0.0),
        span: 5.0,
        expected: CaseTag::Generic,
        a: "y/(2*y+z)",
        b: "alpha^2*y^2*(y+z)^2",
        control: (
            "z/(2*y+z)^2",
            "alpha^2*(2*y^3+3*z*y^2+z^2*y) - 1.03*y/(2*y+z)^2",
        ),
    },
    Fixture {
        name: "ex3",
        title: "generalized harmonic oscillator",
        f: "exp(-alpha*z)/(y+delta)^2",
        g: "alpha*exp(-alpha*z)/(y+delta) + y + delta",
        params: &[("alpha", 1.0), ("delta", 1.0)],
        y_range: (0.1, 2.0),
        anchor: (0.0, 0.0, 0.0),
        ic: (0.0, 1.0, 0.0),
        span: 5.0,
        expected: CaseTag::PyZero,
        a: "-exp(-alpha*z)/(y+delta)",
        b: "y^2 + 2*delta*y + (2/alpha)*exp(-alpha*z)",
        control: (
            "1.03*exp(-alpha*z)/(y+delta)^2",
            "alpha*exp(-alpha*z)/(y+delta) + y + delta",
        ),
    },
    Fixture {
        name: "ex4",
        title: "non-autonomous Van der Pol type oscillator",
        f: "-alpha*(1-y^2)",
        g: "beta*y*exp(-2*alpha*z)/(y^2-3)^2",
        params: &[("alpha", 1.0), ("beta", -1.0)],
        y_range: (2.0, 3.0),
        anchor: (0.0, 2.0, 0.0),
        ic: (0.0, 2.0, 0.0),
        span: 5.0,
        expected: CaseTag::Generic,
        a: "alpha*y*(y^2-3)/3",
        b: "-beta*y^2*exp(-2*alpha*z)/(3*(y^2-3))",
        control: ("-alpha*(1-1.03*y^2)", "beta*y*exp(-2*alpha*z)/(y^2-3)^2"),
    },
    Fixture {
        name: "ex5",
        title: "Van der Pol friction with a rational restoring force",
        f: "-alpha*(1-y^2)",
        g: "3*beta/(y*(y^2-3))",
        params: &[("alpha", 1.0), ("beta", 1.0)],
        y_range: (2.0, 3.0),
        anchor: (0.0, 2.0, 0.0),
        ic: (0.0, 3.0, 0.0),
        span: 5.0,
        expected: CaseTag::LienardAutonomous,
        a: "-alpha*y*(1-y^2/3)",
        b: "2*alpha*beta*z - beta*ln(y^2/(y^2-3))",
        control: ("-alpha*(1-y^2)", "3*beta/(y*(y^2-3)^1.03)"),
    },
    Fixture {
        name: "ex6",
        title: "Duffing oscillator with nonlinear friction",
        f: "-nu*(3*y^2+alpha)/(y^3+alpha*y+beta)^2",
        g: "y^3+alpha*y+beta",
        params: &[("alpha", 1.0), ("beta", 0.1), ("nu", 0.05)],
        y_range: (0.1, 2.0),
        anchor: (0.0, 0.0, 0.0),
        ic: (0.0, 0.5, 0.0),
        span: -5.0,
        expected: CaseTag::LienardAutonomous,
        a: "nu/(y^3+alpha*y+beta)",
        b: "y^4/2 + alpha*y^2 + 2*beta*y + 2*nu*z",
        control: (
            "-nu*(3*y^2+alpha)/(y^3+alpha*y+beta)^2",
            "y^3+1.03*alpha*y+beta",
        ),
    },
];

/// Looks a fixture up by name.
pub fn fixture(name: &str) -> Option<&'static Fixture> {
    CORPUS.iter().find(|f| f.name == name)
}
