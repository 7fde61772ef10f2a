use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};

use super::{ExprField, PointSymmetry};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// `[X, Y] = (Xτ₂ − Yτ₁)∂t + (Xξ₂ − Yξ₁)∂x`, computed symbolically.
pub fn lie_bracket(a: &ExprField, b: &ExprField) -> ExprField {
    let tau = Expr::sub(a.apply(b.tau()), b.apply(a.tau()));
    let xi = Expr::sub(a.apply(b.xi()), b.apply(a.xi()));
    ExprField::new(tau, xi).expect("bracket of (t, x) fields stays in (t, x)")
}

/// Components of `[s1, s2]` at a point, from first partials only.
pub fn bracket_at(
    s1: &dyn PointSymmetry,
    s2: &dyn PointSymmetry,
    t: f64,
    x: f64,
) -> Result<(f64, f64)> {
    let (a, b) = (s1.jet(t, x)?, s2.jet(t, x)?);
    let tau = a.tau.v * b.tau.t + a.xi.v * b.tau.x - (b.tau.v * a.tau.t + b.xi.v * a.tau.x);
    let xi = a.tau.v * b.xi.t + a.xi.v * b.xi.x - (b.tau.v * a.xi.t + b.xi.v * a.xi.x);
    Ok((tau, xi))
}

/// `[[a,b],c] + [[b,c],a] + [[c,a],b]`, max-norm over the points.
pub fn jacobi_residual(
    a: &ExprField,
    b: &ExprField,
    c: &ExprField,
    points: &[(f64, f64)],
) -> Result<f64> {
    let terms = [
        lie_bracket(&lie_bracket(a, b), c),
        lie_bracket(&lie_bracket(b, c), a),
        lie_bracket(&lie_bracket(c, a), b),
    ];
    let mut worst: f64 = 0.0;
    for &(t, x) in points {
        let (mut tau, mut xi) = (0.0, 0.0);
        for f in &terms {
            let (u, v) = f.components(t, x)?;
            tau += u;
            xi += v;
        }
        worst = worst.max(tau.abs()).max(xi.abs());
    }
    Ok(worst)
}

// smallest admissible ratio of extreme singular values of a fit basis
const RANK_TOL: f64 = 1e-9;

/// Least-squares coefficients of `target` in the span of `basis`, with the
/// max-norm of the fit residual.
pub fn fit_onto<F>(
    basis: &[&dyn PointSymmetry],
    target: F,
    points: &[(f64, f64)],
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(f64, f64) -> Result<(f64, f64)>,
{
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (rows, cols) = (2 * points.len(), basis.len());
    let mut m = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    for (i, &(t, x)) in points.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let (tau, xi) = b.components(t, x)?;
            m[(2 * i, j)] = tau;
            m[(2 * i + 1, j)] = xi;
        }
        let (tau, xi) = target(t, x)?;
        rhs[2 * i] = tau;
        rhs[2 * i + 1] = xi;
    }
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if rows < cols || ratio < RANK_TOL {
        return Err(Error::RankDeficient(ratio));
    }
    let coeffs = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let resid = (&m * &coeffs - &rhs).amax();
    Ok((coeffs.iter().copied().collect(), resid))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KillingSignature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl KillingSignature {
    /// Nondegenerate with one eigenvalue sign differing from the other two.
    pub fn is_sl2(&self) -> bool {
        self.zero == 0
            && (self.positive, self.negative) != (3, 0)
            && (self.positive, self.negative) != (0, 3)
    }
}

/// `c[i][j][k]`: coefficient of `e_k` in `[e_i, e_j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub c: [[[f64; 3]; 3]; 3],
    pub fit_residual: f64,
}

impl StructureConstants {
    pub fn bracket(&self, i: usize, j: usize) -> [f64; 3] {
        self.c[i][j]
    }

    /// `K_ij = Σ_{k,l} c_ik^l c_jl^k`.
    pub fn killing_form(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += self.c[i][k][l] * self.c[j][l][k];
                }
            }
            s
        })
    }

    pub fn killing_signature(&self) -> KillingSignature {
        let eig = SymmetricEigen::new(self.killing_form()).eigenvalues;
        let scale = eig.amax().max(f64::MIN_POSITIVE);
        let mut sig = KillingSignature {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for &e in eig.iter() {
            if e.abs() <= 1e-8 * scale {
                sig.zero += 1;
            } else if e > 0.0 {
                sig.positive += 1;
            } else {
                sig.negative += 1;
            }
        }
        sig
    }

    /// Largest violation of the Jacobi identity among the constants.
    pub fn jacobi_residual(&self) -> f64 {
        let c = &self.c;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut s = 0.0;
                        #[allow(clippy::needless_range_loop)]
                        for m in 0..3 {
                            s += c[i][j][m] * c[m][k][l]
                                + c[j][k][m] * c[m][i][l]
                                + c[k][i][m] * c[m][j][l];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Fits every bracket `[e_i, e_j]` onto the basis at the points.
pub fn structure_constants(
    basis: [&dyn PointSymmetry; 3],
    points: &[(f64, f64)],
) -> Result<StructureConstants> {
    let mut c = [[[0.0; 3]; 3]; 3];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let (coeffs, r) =
                fit_onto(&basis, |t, x| bracket_at(basis[i], basis[j], t, x), points)?;
            worst = worst.max(r);
            for k in 0..3 {
                c[i][j][k] = coeffs[k];
                c[j][i][k] = -coeffs[k];
            }
        }
    }
    Ok(StructureConstants {
        c,
        fit_residual: worst,
    })
}
