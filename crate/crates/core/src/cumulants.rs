//! Scalar functions of the shape parameter and the joint cumulants of
//! log-likelihood derivatives of the Birnbaum–Saunders regression model.
//!
//! Every cumulant is a coefficient depending on `alpha` alone, multiplied by
//! either `n` (pure `alpha` families) or a contraction
//! `sum_i x_ir x_is (x_it x_iu)` of the design (families with `beta`
//! indices). Any cumulant with an odd number of `beta` derivatives vanishes
//! because the error law is symmetric.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::specfun::erfcx;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Below this shape `a0` is taken from its small-`alpha` expansion.
pub const A0_SERIES_THRESHOLD: f64 = 0.5;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("shape parameter must be positive, got {alpha}")))
    }
}

/// `a0(alpha) = {1 - erf(√2/alpha)}·exp(2/alpha²)`.
///
/// For `alpha >= 0.5` this is the scaled complementary error function at
/// `√2/alpha`; below, the three-term expansion
/// `(alpha/√(2π))(1 - alpha²/4 + 3alpha⁴/16)`.
pub fn a0(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha < A0_SERIES_THRESHOLD {
        let a2 = alpha * alpha;
        Ok(alpha / SQRT_2PI * (1.0 - a2 / 4.0 + 3.0 * a2 * a2 / 16.0))
    } else {
        Ok(erfcx(SQRT_2 / alpha))
    }
}

/// `a1(alpha) = 2 + 4/alpha² - a0·√(2π)/alpha`; `(a1/4)·X'X` is the
/// information for `beta`.
pub fn a1(alpha: f64) -> Result<f64> {
    let a0 = a0(alpha)?;
    Ok(2.0 + 4.0 / (alpha * alpha) - a0 * SQRT_2PI / alpha)
}

/// All scalar constants entering the cumulants and the correction
/// coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaConstants {
    pub alpha: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5: f64,
    pub g6: f64,
}

impl AlphaConstants {
    pub fn new(alpha: f64) -> Result<Self> {
        let a0 = a0(alpha)?;
        let al = alpha;
        let al2 = al * al;
        let al3 = al2 * al;
        let al4 = al2 * al2;

        let a1 = 2.0 + 4.0 / al2 - a0 * SQRT_2PI / al;
        let a2 = -(2.0 + 7.0 / al2 - a0 * SQRT_PI * (1.0 / (2.0 * al) + 6.0 / al3) / SQRT_2) / 4.0;
        let s0 = 12.0 + 2.0 / al2 + 16.0 / al4 + a0 * SQRT_PI * (1.0 / al + 12.0 / al3) / SQRT_2;
        let s1 = -2.0 * a2 + (s0 - a1 * a1) / 8.0;
        let a3 = 3.0 / al3 - a0 * SQRT_2PI * (1.0 / (4.0 * al2) + 1.0 / al4);
        let s2 = 6.0 + 8.0 * a0 * SQRT_PI / (al3 * SQRT_2);
        let a4 = -10.0 / al4 - 4.0 / (al4 * al2)
            + a0 * SQRT_PI * (al4 + 10.0 * al2 + 8.0) / (al4 * al3 * SQRT_2);
        let s3 = 2.0 * (2.0 + al2) / al3 - a3;
        let s4 = -(4.0 * (1.0 - 2.0 * al2) / al4 + a4);

        let a1sq = a1 * a1;
        let g1 = -96.0 * s1 / a1sq;
        let g2 = 72.0 * s1 / a1sq;
        let g3 = -24.0 * al2 * s3 * s3 / a1sq;
        // One power of alpha in the denominator: this is what the
        // general cumulant sums reduce to (see the summation oracle in the
        // test suite).
        let g4 = 4.0 * (2.0 + al2) * s3 / (al * a1sq);
        let g5 = al * s3 / a1;
        let g6 = -al2 * s4 / a1;

        Ok(Self { alpha, a0, a1, a2, a3, a4, s0, s1, s2, s3, s4, g1, g2, g3, g4, g5, g6 })
    }

    /// `a1 > 0`, required for a positive definite information matrix.
    pub fn check_information(&self) -> Result<()> {
        if self.a1 > 0.0 && self.a1.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "a1({}) = {} is not positive; information is not positive definite",
                self.alpha, self.a1
            )))
        }
    }
}

/// One derivative group in cumulant notation: the number of `beta`
/// derivatives (with their coordinates) and of `alpha` derivatives.
///
/// `kappa_{rs,alpha}` is written as
/// `[Group::beta(&[r, s]), Group::alpha(1)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub beta: Vec<usize>,
    pub alpha: usize,
}

impl Group {
    pub fn beta(idx: &[usize]) -> Self {
        Self { beta: idx.to_vec(), alpha: 0 }
    }

    pub fn alpha(k: usize) -> Self {
        Self { beta: Vec::new(), alpha: k }
    }

    pub fn mixed(idx: &[usize], k: usize) -> Self {
        Self { beta: idx.to_vec(), alpha: k }
    }

    fn order(&self) -> usize {
        self.beta.len() + self.alpha
    }
}

/// Index-addressable catalog of the joint cumulants at `(alpha, X)`.
///
/// Stores the constants and the Gram matrix; fourth-order design
/// contractions are formed on demand.
#[derive(Clone, Debug)]
pub struct CumulantSet {
    consts: AlphaConstants,
    x: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl CumulantSet {
    pub fn new(alpha: f64, x: &DMatrix<f64>) -> Result<Self> {
        let consts = AlphaConstants::new(alpha)?;
        Ok(Self { consts, gram: x.transpose() * x, x: x.clone() })
    }

    pub fn constants(&self) -> &AlphaConstants {
        &self.consts
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn contraction(&self, idx: &[usize]) -> f64 {
        match idx {
            [r, s] => self.gram[(*r, *s)],
            _ => (0..self.x.nrows())
                .map(|i| idx.iter().map(|&j| self.x[(i, j)]).product::<f64>())
                .sum(),
        }
    }

    /// Joint cumulant of the derivative groups, e.g. `kappa_{r,s,alpha}`.
    ///
    /// Returns an error for families outside the catalog (orders above four
    /// or even-`beta` fourth-order families not needed by the correction).
    pub fn kappa(&self, groups: &[Group]) -> Result<f64> {
        let nb: usize = groups.iter().map(|g| g.beta.len()).sum();
        let order: usize = groups.iter().map(Group::order).sum();
        for g in groups {
            if g.beta.iter().any(|&j| j >= self.p()) || g.order() == 0 {
                return Err(domain("cumulant index out of range"));
            }
        }
        if nb % 2 == 1 {
            return Ok(0.0);
        }
        let c = &self.consts;
        let al = c.alpha;
        let al2 = al * al;
        let al3 = al2 * al;
        let al4 = al2 * al2;
        let n = self.n() as f64;
        let idx: Vec<usize> = groups.iter().flat_map(|g| g.beta.iter().copied()).collect();

        // Shape of the cumulant: for each group, (beta count, alpha count),
        // sorted so that the catalog match is order-free.
        let mut shape: Vec<(usize, usize)> =
            groups.iter().map(|g| (g.beta.len(), g.alpha)).collect();
        shape.sort_unstable();

        let coef = match (order, shape.as_slice()) {
            // second order
            (2, [(0, 2)]) => return Ok(-2.0 * n / al2),
            (2, [(0, 1), (0, 1)]) => return Ok(2.0 * n / al2),
            (2, [(2, 0)]) => -c.a1 / 4.0,
            (2, [(1, 0), (1, 0)]) => c.a1 / 4.0,
            // third order, pure alpha
            (3, [(0, 3)]) => return Ok(10.0 * n / al3),
            (3, [(0, 1), (0, 2)]) => return Ok(-6.0 * n / al3),
            (3, [(0, 1), (0, 1), (0, 1)]) => return Ok(8.0 * n / al3),
            // third order, two beta and one alpha
            (3, [(2, 1)]) => (2.0 + al2) / al3,
            (3, [(1, 0), (1, 1)]) => -(2.0 + al2) / al3,
            (3, [(0, 1), (2, 0)]) => c.a3 - (2.0 + al2) / al3,
            (3, [(0, 1), (1, 0), (1, 0)]) => c.s3,
            // fourth order
            (4, [(0, 1), (0, 1), (0, 1), (0, 1)]) => return Ok(48.0 * n / al4),
            (4, [(0, 2), (1, 0), (1, 0)]) => {
                -3.0 / al2 * ((2.0 + al2) / al2 + (c.s2 - c.a1) / 4.0)
            }
            (4, [(0, 1), (0, 1), (1, 0), (1, 0)]) => {
                (2.0 + 11.0 * al2) / al4 + 3.0 * (c.s2 - c.a1) / (4.0 * al2) - c.a4
            }
            (4, [(1, 0), (1, 0), (2, 0)]) => -c.s1 / 2.0,
            (4, [(1, 0), (1, 0), (1, 0), (1, 0)]) => 1.5 * c.s1,
            _ => {
                return Err(domain(format!("cumulant family {shape:?} is not in the catalog")));
            }
        };
        Ok(coef * self.contraction(&idx))
    }
}
