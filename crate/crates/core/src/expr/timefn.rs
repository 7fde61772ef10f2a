use super::{parse_expression, Expr};
use crate::error::{Error, Result};

/// A scalar function of time with exact derivatives through third order,
/// valid on a closed interval.
#[derive(Clone, Debug)]
pub struct TimeFunction {
    value: Expr,
    derivs: [Expr; 3],
    domain: (f64, f64),
}

impl TimeFunction {
    pub fn new(value: Expr, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 <= domain.1) {
            return Err(Error::Invalid(format!("bad domain {domain:?}")));
        }
        if value.depends_on(super::Var::X) || value.depends_on(super::Var::Xdot) {
            return Err(Error::Invalid(format!(
                "`{value}` is not a function of t alone"
            )));
        }
        let d1 = value.differentiate();
        let d2 = d1.differentiate();
        let d3 = d2.differentiate();
        Ok(TimeFunction {
            value,
            derivs: [d1, d2, d3],
            domain,
        })
    }

    pub fn parse(text: &str, domain: (f64, f64)) -> Result<Self> {
        TimeFunction::new(parse_expression(text)?, domain)
    }

    pub fn constant(c: f64, domain: (f64, f64)) -> Result<Self> {
        TimeFunction::new(Expr::Const(c), domain)
    }

    pub fn expr(&self) -> &Expr {
        &self.value
    }

    /// Expression of the derivative of the given order (0..=3).
    pub fn derivative_expr(&self, order: usize) -> &Expr {
        match order {
            0 => &self.value,
            1..=3 => &self.derivs[order - 1],
            _ => panic!("derivative order {order} not available"),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn with_domain(&self, domain: (f64, f64)) -> Result<Self> {
        TimeFunction::new(self.value.clone(), domain)
    }

    fn check(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        // integrator stage times can overshoot the end point by an ulp or two
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        if t >= lo - slack && t <= hi + slack {
            Ok(())
        } else {
            Err(Error::OutOfRange { t, lo, hi })
        }
    }

    /// Value of the `order`-th derivative at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(Error::Invalid(format!("derivative order {order} > 3")));
        }
        self.check(t)?;
        self.derivative_expr(order).eval_t(t)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.eval(t, 0)
    }

    /// Value and first three derivatives.
    pub fn jet(&self, t: f64) -> Result<[f64; 4]> {
        self.check(t)?;
        Ok([
            self.value.eval_t(t)?,
            self.derivs[0].eval_t(t)?,
            self.derivs[1].eval_t(t)?,
            self.derivs[2].eval_t(t)?,
        ])
    }
}
