//! Identity testing by seeded random sampling.
//!
//! An expression is declared identically zero on a rectangle when its
//! scaled residual `|e| / (1 + scale)` stays below the tolerance at every
//! admissible sample, where `scale` is the largest magnitude reached by any
//! subterm at that point. Points violating the evaluation guard are
//! rejected and redrawn; a long run of rejections means the rectangle does
//! not actually contain the admissible region and is reported as an error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{BoundTape, EvalError, ParamBinding, Tape, DEFAULT_GUARD};
use super::Expr;

/// Rectangle of the `(z, y)` plane together with sampling settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub z: (f64, f64),
    pub y: (f64, f64),
    pub guard: f64,
    pub count: usize,
    pub seed: u64,
}

impl Default for SampleDomain {
    fn default() -> Self {
        SampleDomain {
            z: (0.1, 2.0),
            y: (0.1, 2.0),
            guard: DEFAULT_GUARD,
            count: 64,
            seed: crate::DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CoverageError {
    #[error("invalid sampling domain: {0}")]
    InvalidDomain(String),
    #[error(
        "only {accepted} of {wanted} admissible points found; {rejected} consecutive rejections, last: {last}"
    )]
    Insufficient {
        accepted: usize,
        wanted: usize,
        rejected: usize,
        last: String,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Largest scaled residual observed and where it occurred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub max: f64,
    pub at: (f64, f64),
    pub samples: usize,
}

impl SampleDomain {
    pub fn new(z: (f64, f64), y: (f64, f64)) -> Self {
        SampleDomain {
            z,
            y,
            ..SampleDomain::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.z) || !ok(self.y) {
            return Err(CoverageError::InvalidDomain(format!(
                "need finite zmin < zmax and ymin < ymax, got z {:?}, y {:?}",
                self.z, self.y
            )));
        }
        if self.count == 0 || self.guard.is_nan() || self.guard < 0.0 {
            return Err(CoverageError::InvalidDomain(
                "count must be positive and guard non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, z: f64, y: f64) -> bool {
        z >= self.z.0 && z <= self.z.1 && y >= self.y.0 && y <= self.y.1
    }

    /// Draws `count` points accepted by `admit`. The stream depends only on
    /// the seed, so repeated calls see the same candidates.
    pub fn sample<T, E, F>(&self, mut admit: F) -> Result<Vec<T>, CoverageError>
    where
        F: FnMut(f64, f64) -> Result<T, E>,
        E: std::fmt::Display,
    {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.count);
        let mut rejected = 0;
        while out.len() < self.count {
            let z = rng.gen_range(self.z.0..=self.z.1);
            let y = rng.gen_range(self.y.0..=self.y.1);
            match admit(z, y) {
                Ok(v) => {
                    out.push(v);
                    rejected = 0;
                }
                Err(e) => {
                    rejected += 1;
                    if rejected >= self.count {
                        return Err(CoverageError::Insufficient {
                            accepted: out.len(),
                            wanted: self.count,
                            rejected,
                            last: e.to_string(),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sample points alone, with no admissibility filter.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.sample(|z, y| Ok::<_, EvalError>((z, y)))
            .expect("unfiltered sampling cannot be rejected")
    }
}

fn bound(e: &Expr, params: &ParamBinding) -> Result<BoundTape, CoverageError> {
    Ok(Tape::compile(e).bind(params)?)
}

/// Largest scaled residual of `e` over the admissible sample.
pub fn max_residual(
    e: &Expr,
    dom: &SampleDomain,
    params: &ParamBinding,
) -> Result<Residual, CoverageError> {
    let tape = bound(e, params)?;
    let values = dom.sample(|z, y| {
        tape.eval_scaled(z, y, dom.guard)
            .map(|(v, s)| (v.abs() / (1.0 + s), (z, y)))
    })?;
    let mut best = Residual {
        max: 0.0,
        at: values[0].1,
        samples: values.len(),
    };
    for (r, at) in values {
        if r > best.max {
            best.max = r;
            best.at = at;
        }
    }
    Ok(best)
}

/// Probabilistic identity test: true when every admissible sample has a
/// scaled residual at most `tol`.
pub fn is_identically_zero(
    e: &Expr,
    dom: &SampleDomain,
    params: &ParamBinding,
    tol: f64,
) -> Result<bool, CoverageError> {
    if e.is_zero_const() {
        return Ok(true);
    }
    Ok(max_residual(e, dom, params)?.max <= tol)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn zero(src: &str) -> bool {
        let p = ParamBinding::new().with("alpha", 1.3);
        is_identically_zero(&parse(src).unwrap(), &SampleDomain::default(), &p, 1e-9).unwrap()
    }

    #[test]
    fn recognises_identities() {
        assert!(zero("(y+z)^2 - y^2 - 2*y*z - z^2"));
        assert!(zero("exp(ln(y)) - y"));
        assert!(zero("sqrt(y)^2 - y"));
        assert!(zero("alpha*(y^2+1) - alpha*y^2 - alpha"));
        assert!(!zero("(y+z)^2 - y^2 - z^2"));
        assert!(!zero("1 + 0*y"));
    }

    #[test]
    fn coverage_failure_is_an_error() {
        let dom = SampleDomain::new((0.1, 2.0), (-2.0, -0.1));
        let err = is_identically_zero(&parse("ln(y)").unwrap(), &dom, &ParamBinding::new(), 1e-9);
        assert!(matches!(err, Err(CoverageError::Insufficient { .. })));
    }

    #[test]
    fn unbound_parameter_is_not_a_coverage_problem() {
        let err = is_identically_zero(
            &parse("beta*y").unwrap(),
            &SampleDomain::default(),
            &ParamBinding::new(),
            1e-9,
        );
        assert!(matches!(
            err,
            Err(CoverageError::Eval(EvalError::UnboundParameter(_)))
        ));
    }
}
