//! Projection matrices, the order-`1/n` Edgeworth coefficients of the score
//! statistic's null distribution, and the Bartlett-type corrections built
//! from them.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::cumulants::AlphaConstants;
use crate::error::{domain, Error, Result};
use crate::model::leverages;
use crate::specfun::chi2_quantile;

/// `Z = X(X'X)^{-1}X'`, `Z2` the projector onto the nuisance columns
/// `X2` (zero when every coefficient is tested) and
/// `R = X1 - Z2·X1`.
#[derive(Clone, Debug)]
pub struct ProjectionPair {
    pub z: DMatrix<f64>,
    pub z2: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

fn chol(m: DMatrix<f64>, cols: usize) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m).ok_or(Error::RankDeficient { rank: cols.saturating_sub(1), cols })
}

fn check_partition(x: &DMatrix<f64>, q: usize) -> Result<()> {
    let (n, p) = x.shape();
    if q == 0 || q > p {
        return Err(domain(format!("need 1 <= q <= p, got q = {q}, p = {p}")));
    }
    if n <= p {
        return Err(Error::Dimension(format!("need n > p, got n = {n}, p = {p}")));
    }
    let rank = crate::model::numerical_rank(x);
    if rank < p {
        return Err(Error::RankDeficient { rank, cols: p });
    }
    Ok(())
}

fn projector(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = chol(x.transpose() * x, x.ncols())?;
    Ok(x * c.solve(&x.transpose()))
}

/// Builds the projection pair for the partition `X = [X1 X2]` with `X1` the
/// leading `q` columns.
pub fn projections(x: &DMatrix<f64>, q: usize) -> Result<ProjectionPair> {
    check_partition(x, q)?;
    let (n, p) = x.shape();
    let z = projector(x)?;
    let x1 = x.columns(0, q).into_owned();
    if q == p {
        return Ok(ProjectionPair { z, z2: DMatrix::zeros(n, n), r: x1 });
    }
    let z2 = projector(&x.columns(q, p - q).into_owned())?;
    let r = &x1 - &z2 * &x1;
    Ok(ProjectionPair { z, z2, r })
}

/// The two design traces entering the known-shape coefficients:
/// `t1 = sum_i (z_ii - z2_ii) z2_ii` and `t2 = sum_i (z_ii - z2_ii)²`.
///
/// Only the diagonals of the projectors are needed, so this costs
/// `O(n p²)` and never forms an `n x n` matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignTraces {
    pub t1: f64,
    pub t2: f64,
}

impl DesignTraces {
    pub fn new(x: &DMatrix<f64>, q: usize) -> Result<Self> {
        check_partition(x, q)?;
        let (n, p) = x.shape();
        let z = leverages(x, &chol(x.transpose() * x, p)?);
        let z2 = if q == p {
            DVector::zeros(n)
        } else {
            let x2 = x.columns(q, p - q).into_owned();
            let c = chol(x2.transpose() * &x2, p - q)?;
            leverages(&x2, &c)
        };
        Ok(Self::from_diagonals(&z, &z2))
    }

    pub fn from_diagonals(z: &DVector<f64>, z2: &DVector<f64>) -> Self {
        let mut t1 = 0.0;
        let mut t2 = 0.0;
        for (a, b) in z.iter().zip(z2.iter()) {
            let d = a - b;
            t1 += d * b;
            t2 += d * d;
        }
        Self { t1, t2 }
    }

    pub fn from_projections(pp: &ProjectionPair) -> Self {
        Self::from_diagonals(&pp.z.diagonal(), &pp.z2.diagonal())
    }
}

/// Edgeworth coefficients, split into the known-shape part (`beta`) and
/// the contribution of estimating the shape (`beta_alpha`). For the shape
/// hypothesis everything sits in `beta`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ACoefficients {
    pub beta: [f64; 3],
    pub beta_alpha: [f64; 3],
}

impl ACoefficients {
    pub fn a1(&self) -> f64 {
        self.beta[0] + self.beta_alpha[0]
    }

    pub fn a2(&self) -> f64 {
        self.beta[1] + self.beta_alpha[1]
    }

    pub fn a3(&self) -> f64 {
        self.beta[2] + self.beta_alpha[2]
    }

    pub fn total(&self) -> [f64; 3] {
        [self.a1(), self.a2(), self.a3()]
    }
}

/// Known-shape coefficients `(A1β, A2β, A3β)`.
pub fn a_beta(traces: &DesignTraces, c: &AlphaConstants) -> [f64; 3] {
    [c.g1 * traces.t1, c.g2 * traces.t2, 0.0]
}

/// Shape-estimation contributions `(A1βα, A2βα, A3βα)`; these depend on the
/// design only through `n`, `p` and `q`.
pub fn a_beta_alpha(c: &AlphaConstants, n: usize, q: usize, p: usize) -> Result<[f64; 3]> {
    if q == 0 || q > p || p >= n {
        return Err(domain(format!("need 1 <= q <= p < n, got q = {q}, p = {p}, n = {n}")));
    }
    let (nf, qf, pf) = (n as f64, q as f64, p as f64);
    let a1 = 12.0 * qf / nf * ((pf - qf) * c.g4 + c.g5 + c.g6);
    let a2 = qf * (qf + 2.0) * c.g3 / nf;
    Ok([a1, a2, 0.0])
}

/// All coefficients for `H0: beta_1 = beta_1^(0)`.
pub fn a_beta_hypothesis(traces: &DesignTraces, c: &AlphaConstants, n: usize, q: usize, p: usize) -> Result<ACoefficients> {
    Ok(ACoefficients { beta: a_beta(traces, c), beta_alpha: a_beta_alpha(c, n, q, p)? })
}

/// Coefficients for `H0: alpha = alpha^(0)`, to be evaluated at `alpha^(0)`.
pub fn a_alpha_test(c: &AlphaConstants, n: usize, p: usize) -> Result<ACoefficients> {
    if n == 0 || p == 0 {
        return Err(domain("need n, p >= 1"));
    }
    let (nf, pf) = (n as f64, p as f64);
    let al = c.alpha;
    let a2s = al * al;
    let k = 2.0 + a2s;
    let a1 = 24.0 * pf / (nf * a2s * a2s * c.a1 * c.a1)
        * (k * k * (pf + 6.0) - 4.0 * al * a2s * k * c.a3 - a2s * (4.0 + 5.0 * a2s) * c.a1);
    let a2 = 12.0 / nf * (3.0 - 4.0 * k * pf / (a2s * c.a1));
    let a3 = 40.0 / nf;
    Ok(ACoefficients { beta: [a1, a2, a3], beta_alpha: [0.0; 3] })
}

/// Weights of the correction polynomial.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThetaCoefficients {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub q: usize,
}

impl ThetaCoefficients {
    pub fn new(a: &ACoefficients, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(domain("degrees of freedom must be positive"));
        }
        let [a1, a2, a3] = a.total();
        let qf = q as f64;
        Ok(Self {
            v1: (a1 - a2 + a3) / (12.0 * qf),
            v2: (a2 - 2.0 * a3) / (12.0 * qf * (qf + 2.0)),
            v3: a3 / (12.0 * qf * (qf + 2.0) * (qf + 4.0)),
            q,
        })
    }

    /// `v1 + v2·s + v3·s²`.
    pub fn poly(&self, s: f64) -> f64 {
        self.v1 + s * (self.v2 + s * self.v3)
    }
}

/// `S* = S(1 - v1 - v2·S - v3·S²)`. Not monotone in `S` in general and not
/// clamped.
pub fn corrected_statistic(s: f64, v: &ThetaCoefficients) -> f64 {
    s * (1.0 - v.poly(s))
}

/// Critical value for the uncorrected statistic at level `gamma`:
/// `c(1 + v1 + v2·c + v3·c²)` with `c` the chi-square `1 - gamma` quantile.
pub fn corrected_critical_value(gamma: f64, v: &ThetaCoefficients) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("level must lie in (0, 1), got {gamma}")));
    }
    let c = chi2_quantile(1.0 - gamma, v.q as u32)?;
    Ok(c * (1.0 + v.poly(c)))
}
