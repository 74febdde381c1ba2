//! The log-linear Birnbaum–Saunders regression model
//! `y_i = x_i'beta + e_i`, `e_i ~ SN(alpha, 0, 2)`: data, likelihood,
//! score, expected information and maximum-likelihood fitting.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::cumulants;
use crate::error::{domain, Error, Result};
use crate::sinh_normal::ln_cosh;

/// Relative pivot threshold of the rank check.
pub const RANK_TOL: f64 = 1e-10;
/// Convergence tolerance on parameter change and score norm.
pub const FIT_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 20;

/// A full-rank `n x p` model matrix with its Gram factorization.
#[derive(Clone, Debug)]
pub struct Design {
    x: DMatrix<f64>,
    gram_chol: Cholesky<f64, Dyn>,
}

impl Design {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 || n <= p {
            return Err(Error::Dimension(format!("need n > p >= 1, got n = {n}, p = {p}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain("design matrix has non-finite entries"));
        }
        let rank = numerical_rank(&x);
        if rank < p {
            return Err(Error::RankDeficient { rank, cols: p });
        }
        let gram_chol = Cholesky::new(x.transpose() * &x)
            .ok_or(Error::RankDeficient { rank: p - 1, cols: p })?;
        Ok(Self { x, gram_chol })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.x.transpose() * &self.x
    }

    /// Least-squares coefficients of `v` on the columns.
    pub fn least_squares(&self, v: &DVector<f64>) -> DVector<f64> {
        self.gram_chol.solve(&(self.x.transpose() * v))
    }

    pub(crate) fn gram_chol(&self) -> &Cholesky<f64, Dyn> {
        &self.gram_chol
    }

    /// Diagonal of the hat matrix `X(X'X)^{-1}X'`.
    pub fn leverages(&self) -> DVector<f64> {
        leverages(&self.x, &self.gram_chol)
    }
}

pub(crate) fn leverages(x: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>) -> DVector<f64> {
    // z_ii = |L^{-1} x_i|^2
    let l = chol.l();
    let w = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor is nonsingular");
    DVector::from_iterator(x.nrows(), w.column_iter().map(|c| c.norm_squared()))
}

/// Rank from column-pivoted QR with a relative pivot threshold.
pub fn numerical_rank(x: &DMatrix<f64>) -> usize {
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let d = r.nrows().min(r.ncols());
    let lead = r[(0, 0)].abs();
    if lead == 0.0 {
        return 0;
    }
    (0..d).filter(|&i| r[(i, i)].abs() > RANK_TOL * lead).count()
}

/// Responses (log-lifetimes) on a shared design.
#[derive(Clone, Debug)]
pub struct Dataset {
    y: DVector<f64>,
    design: Arc<Design>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        Self::with_design(y, Arc::new(Design::new(x)?))
    }

    pub fn with_design(y: DVector<f64>, design: Arc<Design>) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::Dimension(format!(
                "response has {} rows, design has {}",
                y.len(),
                design.n()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(domain("response has non-finite entries"));
        }
        Ok(Self { y, design })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.design.x()
    }

    pub fn design(&self) -> &Arc<Design> {
        &self.design
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    /// Reads a dataset from CSV: first column the response, remaining
    /// columns covariates. A first row that does not parse as numbers is
    /// taken as a header.
    pub fn from_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Input(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_str(&text, opts)
    }

    pub fn from_csv_str(text: &str, opts: &CsvOptions) -> Result<(Self, Vec<String>)> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(v),
                Err(_) if line == 0 => header = Some(rec.iter().map(str::to_string).collect()),
                Err(e) => return Err(Error::Input(format!("row {}: {e}", line + 1))),
            }
        }
        if rows.is_empty() {
            return Err(Error::Input("no data rows".into()));
        }
        let width = rows[0].len();
        if width < 1 + usize::from(!opts.intercept) {
            return Err(Error::Input("need a response and at least one covariate".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::Input(format!("row {} has a different number of fields", bad + 1)));
        }
        let n = rows.len();
        let y = DVector::from_iterator(
            n,
            rows.iter().map(|r| if opts.take_logs { r[0].ln() } else { r[0] }),
        );
        if opts.take_logs && rows.iter().any(|r| !(r[0] > 0.0)) {
            return Err(Error::Input("lifetimes must be positive to take logs".into()));
        }
        let offset = usize::from(opts.intercept);
        let p = width - 1 + offset;
        let x = DMatrix::from_fn(n, p, |i, j| {
            if opts.intercept && j == 0 {
                1.0
            } else {
                rows[i][j + 1 - offset]
            }
        });
        let mut names: Vec<String> = match header {
            Some(h) if h.len() == width => h[1..].to_vec(),
            _ => (1..width).map(|j| format!("x{j}")).collect(),
        };
        if opts.intercept {
            names.insert(0, "intercept".into());
        }
        Ok((Dataset::new(y, x)?, names))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CsvOptions {
    /// The first column holds lifetimes; use their logarithms.
    pub take_logs: bool,
    /// Prepend a column of ones.
    pub intercept: bool,
}

/// Regression coefficients and shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    pub beta: DVector<f64>,
    pub alpha: f64,
}

impl ParamVector {
    pub fn new(beta: DVector<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { beta, alpha })
    }

    fn check(&self, d: &Dataset) -> Result<()> {
        if self.beta.len() != d.p() {
            return Err(Error::Dimension(format!(
                "beta has {} entries, design has {} columns",
                self.beta.len(),
                d.p()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// `xi1 = (2/alpha)cosh(r/2)`, `xi2 = (2/alpha)sinh(r/2)` and
/// `s = xi1·xi2 - xi2/xi1` at the residuals `r = y - X beta`.
#[derive(Clone, Debug)]
pub struct XiVectors {
    pub xi1: DVector<f64>,
    pub xi2: DVector<f64>,
    pub s: DVector<f64>,
}

pub fn residuals(theta: &ParamVector, d: &Dataset) -> Result<DVector<f64>> {
    theta.check(d)?;
    Ok(d.y() - d.x() * &theta.beta)
}

pub fn xi(theta: &ParamVector, d: &Dataset) -> Result<XiVectors> {
    let r = residuals(theta, d)?;
    let c = 2.0 / theta.alpha;
    let xi1 = r.map(|v| c * (0.5 * v).cosh());
    let xi2 = r.map(|v| c * (0.5 * v).sinh());
    let s = xi1.zip_map(&xi2, |a, b| a * b - b / a);
    Ok(XiVectors { xi1, xi2, s })
}

/// Log-likelihood up to an additive constant:
/// `sum log(xi1) - (1/2) sum xi2²`.
pub fn loglik(theta: &ParamVector, d: &Dataset) -> Result<f64> {
    let r = residuals(theta, d)?;
    Ok(loglik_from_residuals(r.as_slice(), theta.alpha))
}

fn loglik_from_residuals(r: &[f64], alpha: f64) -> f64 {
    let lc = (2.0 / alpha).ln();
    let c2 = 2.0 / (alpha * alpha);
    r.iter()
        .map(|&v| {
            let sh = (0.5 * v).sinh();
            lc + ln_cosh(0.5 * v) - c2 * sh * sh
        })
        .sum()
}

/// `s_i = (2/alpha²) sinh(r_i) - tanh(r_i/2)`.
#[inline]
fn s_elem(r: f64, inv_alpha_sq: f64) -> f64 {
    2.0 * inv_alpha_sq * r.sinh() - (0.5 * r).tanh()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub beta: DVector<f64>,
    pub alpha: f64,
}

/// `U_beta = (1/2) X's`, `U_alpha = -n/alpha + (1/alpha) sum xi2²`.
pub fn score(theta: &ParamVector, d: &Dataset) -> Result<Score> {
    let xv = xi(theta, d)?;
    let beta = 0.5 * d.x().transpose() * &xv.s;
    let alpha = (-(d.n() as f64) + xv.xi2.norm_squared()) / theta.alpha;
    Ok(Score { beta, alpha })
}

/// Expected (Fisher) information; the `beta`–`alpha` block is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedInfo {
    pub beta: DMatrix<f64>,
    pub alpha: f64,
}

pub fn expected_info(theta: &ParamVector, d: &Dataset) -> Result<ExpectedInfo> {
    theta.check(d)?;
    let a1 = cumulants::a1(theta.alpha)?;
    if !(a1 > 0.0) {
        return Err(domain(format!("a1({}) = {a1} is not positive", theta.alpha)));
    }
    Ok(ExpectedInfo {
        beta: d.design().gram() * (a1 / 4.0),
        alpha: 2.0 * d.n() as f64 / (theta.alpha * theta.alpha),
    })
}

/// Outcome of a (possibly restricted) maximum-likelihood fit.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub theta: ParamVector,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the score over the free parameters at `theta`.
    pub score_norm: f64,
    /// Set when the iteration hit a non-finite likelihood or a degenerate
    /// state.
    pub failure: Option<String>,
}

impl FitResult {
    pub fn ok(&self) -> bool {
        self.converged && self.failure.is_none()
    }

    /// Turns a non-converged or failed fit into [`Error::Fit`].
    pub fn require(self) -> Result<Self> {
        if let Some(f) = &self.failure {
            return Err(Error::Fit(f.clone()));
        }
        if !self.converged {
            return Err(Error::Fit(format!(
                "no convergence after {} iterations (score norm {:.3e})",
                self.iterations, self.score_norm
            )));
        }
        Ok(self)
    }
}

/// Columns whose coefficients are estimated, with their Gram factorization.
#[derive(Clone, Debug)]
pub(crate) struct FreeBlock {
    pub cols: DMatrix<f64>,
    pub chol: Cholesky<f64, Dyn>,
}

impl FreeBlock {
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(cols.transpose() * &cols).ok_or(Error::RankDeficient {
            rank: cols.ncols().saturating_sub(1),
            cols: cols.ncols(),
        })?;
        Ok(Self { cols, chol })
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Shape {
    Free,
    Fixed(f64),
}

/// Block ascent for the likelihood.
///
/// The `beta` block takes a Newton step with the observed information when
/// that is positive definite and the Fisher-scoring step
/// `(2/a1)(F'F)^{-1} F's` otherwise, with step halving in both cases.
/// Scoring alone converges only linearly and stalls when `alpha` is held
/// away from the residual scale. The `alpha` block is set to its exact conditional maximizer
/// `sqrt((4/n) sum sinh²(r/2))`, which is the fixed point of the scoring
/// update for `log alpha` and keeps `alpha > 0`.
pub(crate) fn scoring(
    y: &[f64],
    offset: &[f64],
    free: Option<&FreeBlock>,
    mut b: DVector<f64>,
    shape: Shape,
    alpha_init: f64,
) -> (DVector<f64>, f64, f64, usize, bool, f64, Option<String>) {
    let n = y.len();
    let nf = n as f64;
    let mut r = vec![0.0; n];
    let resid = |b: &DVector<f64>, r: &mut [f64]| {
        for i in 0..n {
            r[i] = y[i] - offset[i];
        }
        if let Some(fb) = free {
            for (j, col) in fb.cols.column_iter().enumerate() {
                let bj = b[j];
                for (ri, &xij) in r.iter_mut().zip(col.iter()) {
                    *ri -= xij * bj;
                }
            }
        }
    };
    let profile_alpha = |r: &[f64]| {
        let ss: f64 = r.iter().map(|&v| (0.5 * v).sinh().powi(2)).sum();
        (4.0 * ss / nf).sqrt()
    };

    let mut alpha = match shape {
        Shape::Fixed(a) => a,
        Shape::Free => alpha_init,
    };
    let mut last_delta = f64::INFINITY;
    let mut iterations = 0;
    let mut s = DVector::zeros(n);
    loop {
        resid(&b, &mut r);
        if let Shape::Free = shape {
            let a_new = profile_alpha(&r);
            if iterations > 0 {
                last_delta = last_delta.max((a_new - alpha).abs());
            }
            alpha = a_new;
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return (b, alpha, f64::NAN, iterations, false, f64::NAN, Some(format!("degenerate shape estimate {alpha}")));
        }
        let ll = loglik_from_residuals(&r, alpha);
        if !ll.is_finite() {
            return (b, alpha, ll, iterations, false, f64::NAN, Some("non-finite log-likelihood".into()));
        }
        let inv_a2 = 1.0 / (alpha * alpha);
        for i in 0..n {
            s[i] = s_elem(r[i], inv_a2);
        }
        let grad = free.map(|fb| fb.cols.transpose() * &s);
        let mut score_norm = grad.as_ref().map_or(0.0, |g| 0.5 * g.amax());
        if let Shape::Free = shape {
            let xi2sq: f64 = r.iter().map(|&v| 4.0 * inv_a2 * (0.5 * v).sinh().powi(2)).sum();
            score_norm = score_norm.max(((xi2sq - nf) / alpha).abs());
        }
        if score_norm < FIT_TOL && last_delta < FIT_TOL {
            return (b, alpha, ll, iterations, true, score_norm, None);
        }
        let (Some(fb), Some(g)) = (free, grad) else {
            // nothing left to update
            let converged = score_norm < FIT_TOL;
            return (b, alpha, ll, iterations, converged, score_norm, None);
        };
        if iterations >= MAX_ITER {
            return (b, alpha, ll, iterations, false, score_norm, None);
        }
        iterations += 1;

        let a1 = match cumulants::a1(alpha) {
            Ok(v) if v > 0.0 => v,
            _ => {
                return (b, alpha, ll, iterations, false, score_norm, Some(format!("a1 not positive at alpha = {alpha}")));
            }
        };
        let profile = matches!(shape, Shape::Free);
        let step = newton_step(fb, &r, inv_a2, &g, profile).unwrap_or_else(|| fb.chol.solve(&g) * (2.0 / a1));
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = &b + &step * t;
            resid(&cand, &mut r);
            let ll_new = loglik_from_residuals(&r, if profile { profile_alpha(&r) } else { alpha });
            if ll_new.is_finite() && ll_new >= ll - 1e-12 * ll.abs().max(1.0) {
                b = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        last_delta = if accepted { (&step * t).amax() } else { 0.0 };
        if !accepted {
            // No ascent along the scoring direction: report where we are.
            resid(&b, &mut r);
            return (b, alpha, ll, iterations, score_norm < FIT_TOL, score_norm, None);
        }
    }
}

/// Newton direction for the `beta` block: solves `J·step = F's` with
/// `J = F'WF`, `W = diag(ds/dr)`, twice the observed information for `beta`.
/// With `profile = true` the shape is profiled out and `J` loses the rank-one
/// coupling term `(4/(n·alpha⁴))·vv'`, `v = F' sinh(r)`, which makes the
/// alternating update quadratically convergent. `None` unless `J` is positive
/// definite (`W` can have negative entries once `alpha > 2`).
fn newton_step(fb: &FreeBlock, r: &[f64], inv_a2: f64, g: &DVector<f64>, profile: bool) -> Option<DVector<f64>> {
    let mut weighted = fb.cols.clone();
    for (i, &v) in r.iter().enumerate() {
        let sech = 1.0 / (0.5 * v).cosh();
        let w = 2.0 * inv_a2 * v.cosh() - 0.5 * sech * sech;
        if !w.is_finite() {
            return None;
        }
        weighted.row_mut(i).scale_mut(w);
    }
    let mut info = fb.cols.transpose() * weighted;
    if profile {
        let sh = DVector::from_iterator(r.len(), r.iter().map(|v| v.sinh()));
        let v = fb.cols.transpose() * sh;
        info -= &v * v.transpose() * (4.0 * inv_a2 * inv_a2 / r.len() as f64);
    }
    Cholesky::new(info).map(|c| c.solve(g))
}

fn initial_alpha(r: &[f64]) -> f64 {
    let ss: f64 = r.iter().map(|&v| (0.5 * v).sinh().powi(2)).sum();
    (4.0 * ss / r.len() as f64).sqrt()
}

fn check_init(init: Option<&ParamVector>, d: &Dataset) -> Result<()> {
    if let Some(t) = init {
        t.check(d)?;
    }
    Ok(())
}

/// Unrestricted maximum-likelihood fit.
///
/// Starts from least squares for `beta` unless `init` is given.
pub fn fit(d: &Dataset, init: Option<&ParamVector>) -> Result<FitResult> {
    check_init(init, d)?;
    let b0 = match init {
        Some(t) => t.beta.clone(),
        None => d.design().least_squares(d.y()),
    };
    let r0 = d.y() - d.x() * &b0;
    let block = FreeBlock { cols: d.x().clone(), chol: d.design().gram_chol().clone() };
    let offset = vec![0.0; d.n()];
    let (beta, alpha, ll, it, conv, sn, fail) =
        scoring(d.y().as_slice(), &offset, Some(&block), b0, Shape::Free, initial_alpha(r0.as_slice()));
    Ok(FitResult { theta: ParamVector { beta, alpha }, loglik: ll, iterations: it, converged: conv && fail.is_none(), score_norm: sn, failure: fail })
}

/// Maximum likelihood under `beta_1 = beta1_0`, where `beta_1` is the
/// leading `q = beta1_0.len()` coordinates.
pub fn fit_restricted_beta(
    d: &Dataset,
    beta1_0: &DVector<f64>,
    init: Option<&ParamVector>,
) -> Result<FitResult> {
    check_init(init, d)?;
    let ctx = RestrictedBeta::new(d.design(), beta1_0)?;
    ctx.fit(d.y(), init)
}

/// Reusable pieces of a `beta_1 = beta1_0` restricted fit on one design.
#[derive(Clone, Debug)]
pub(crate) struct RestrictedBeta {
    q: usize,
    p: usize,
    beta1_0: DVector<f64>,
    offset: DVector<f64>,
    free: Option<FreeBlock>,
}

impl RestrictedBeta {
    pub fn new(design: &Design, beta1_0: &DVector<f64>) -> Result<Self> {
        let (p, q) = (design.p(), beta1_0.len());
        if q == 0 || q > p {
            return Err(domain(format!("need 1 <= q <= p, got q = {q}, p = {p}")));
        }
        let x = design.x();
        let offset = x.columns(0, q) * beta1_0;
        let free = if q < p { Some(FreeBlock::new(x.columns(q, p - q).into_owned())?) } else { None };
        Ok(Self { q, p, beta1_0: beta1_0.clone(), offset, free })
    }

    pub fn fit(&self, y: &DVector<f64>, init: Option<&ParamVector>) -> Result<FitResult> {
        let q = self.q;
        let b0 = match (&self.free, init) {
            (None, _) => DVector::zeros(0),
            (Some(_), Some(t)) => t.beta.rows(q, self.p - q).into_owned(),
            (Some(fb), None) => fb.chol.solve(&(fb.cols.transpose() * (y - &self.offset))),
        };
        let mut r0 = y - &self.offset;
        if let Some(fb) = &self.free {
            r0 -= &fb.cols * &b0;
        }
        let (b2, alpha, ll, it, conv, sn, fail) = scoring(
            y.as_slice(),
            self.offset.as_slice(),
            self.free.as_ref(),
            b0,
            Shape::Free,
            initial_alpha(r0.as_slice()),
        );
        let mut beta = DVector::zeros(self.p);
        beta.rows_mut(0, q).copy_from(&self.beta1_0);
        beta.rows_mut(q, self.p - q).copy_from(&b2);
        Ok(FitResult { theta: ParamVector { beta, alpha }, loglik: ll, iterations: it, converged: conv && fail.is_none(), score_norm: sn, failure: fail })
    }
}

/// Maximum likelihood over `beta` with `alpha = alpha0` held fixed.
///
/// The zero of the `beta` score depends on `alpha` (the two terms of `s`
/// scale differently), so this is a genuine optimization.
pub fn fit_restricted_alpha(d: &Dataset, alpha0: f64, init: Option<&ParamVector>) -> Result<FitResult> {
    check_init(init, d)?;
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(domain(format!("alpha0 must be positive, got {alpha0}")));
    }
    let b0 = match init {
        Some(t) => t.beta.clone(),
        None => d.design().least_squares(d.y()),
    };
    let block = FreeBlock { cols: d.x().clone(), chol: d.design().gram_chol().clone() };
    let offset = vec![0.0; d.n()];
    let (beta, alpha, ll, it, conv, sn, fail) =
        scoring(d.y().as_slice(), &offset, Some(&block), b0, Shape::Fixed(alpha0), alpha0);
    Ok(FitResult { theta: ParamVector { beta, alpha }, loglik: ll, iterations: it, converged: conv && fail.is_none(), score_norm: sn, failure: fail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinh_normal::SinhNormalParams;
    use crate::specfun::RngStream;

    fn random_design(n: usize, p: usize, rng: &mut RngStream) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.uniform() })
    }

    fn simulate(x: &DMatrix<f64>, beta: &DVector<f64>, alpha: f64, rng: &mut RngStream) -> DVector<f64> {
        let err = SinhNormalParams::regression_error(alpha).unwrap();
        x * beta + DVector::from_fn(x.nrows(), |_, _| err.sample(rng))
    }

    #[test]
    fn xi_examples() {
        let x = DMatrix::from_fn(4, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let beta = DVector::from_vec(vec![0.3, -0.2]);
        let y = &x * &beta;
        let d = Dataset::new(y, x.clone()).unwrap();
        let t = ParamVector::new(beta.clone(), 0.8).unwrap();
        let v = xi(&t, &d).unwrap();
        for i in 0..4 {
            assert!((v.xi1[i] - 2.5).abs() < 1e-15);
            assert_eq!(v.xi2[i], 0.0);
            assert_eq!(v.s[i], 0.0);
        }

        let y = &x * &beta + DVector::from_element(4, 2.0);
        let d = Dataset::new(y, x).unwrap();
        let v = xi(&ParamVector::new(beta, 1.0).unwrap(), &d).unwrap();
        assert!((v.xi1[0] - 3.086_161_269_630_488).abs() < 1e-12);
        assert!((v.xi2[0] - 2.350_402_387_287_603).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_identity() {
        let mut rng = RngStream::new(3, 0);
        let x = random_design(30, 3, &mut rng);
        let y = DVector::from_fn(30, |_, _| 4.0 * rng.uniform() - 2.0);
        let d = Dataset::new(y, x).unwrap();
        for &alpha in &[0.3, 1.0, 2.5] {
            let t = ParamVector::new(DVector::from_vec(vec![0.1, 0.2, -0.3]), alpha).unwrap();
            let v = xi(&t, &d).unwrap();
            for i in 0..30 {
                assert!(v.xi1[i] > 0.0);
                let lhs = v.xi1[i].powi(2) - v.xi2[i].powi(2);
                assert!((lhs - 4.0 / (alpha * alpha)).abs() < 1e-12 * v.xi1[i].powi(2).max(1.0));
                assert!((v.s[i] - (v.xi1[i] * v.xi2[i] - v.xi2[i] / v.xi1[i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn loglik_at_zero_residuals() {
        let x = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { (i * i) as f64 });
        let beta = DVector::from_vec(vec![1.0, 0.1]);
        let d = Dataset::new(&x * &beta, x).unwrap();
        assert!(loglik(&ParamVector::new(beta.clone(), 2.0).unwrap(), &d).unwrap().abs() < 1e-14);
        let l = loglik(&ParamVector::new(beta.clone(), 0.5).unwrap(), &d).unwrap();
        assert!((l - 10.0 * 4f64.ln()).abs() < 1e-12);
        let u = score(&ParamVector::new(beta, 0.5).unwrap(), &d).unwrap();
        assert_eq!(u.beta.amax(), 0.0);
        assert!((u.alpha + 10.0 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn score_matches_finite_differences() {
        let mut rng = RngStream::new(17, 1);
        let x = random_design(40, 3, &mut rng);
        let beta = DVector::from_vec(vec![1.0, -0.5, 0.7]);
        let y = simulate(&x, &beta, 0.8, &mut rng);
        let d = Dataset::new(y, x).unwrap();
        for trial in 0..5 {
            let tb = DVector::from_fn(3, |_, _| 2.0 * rng.uniform() - 1.0);
            let t = ParamVector::new(tb, 0.3 + 1.5 * rng.uniform()).unwrap();
            let u = score(&t, &d).unwrap();
            let h = 1e-6;
            for j in 0..3 {
                let mut tp = t.clone();
                let mut tm = t.clone();
                tp.beta[j] += h;
                tm.beta[j] -= h;
                let fd = (loglik(&tp, &d).unwrap() - loglik(&tm, &d).unwrap()) / (2.0 * h);
                assert!((fd - u.beta[j]).abs() < 1e-6 * u.beta[j].abs().max(1.0), "trial {trial} j {j}");
            }
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp.alpha += h;
            tm.alpha -= h;
            let fd = (loglik(&tp, &d).unwrap() - loglik(&tm, &d).unwrap()) / (2.0 * h);
            assert!((fd - u.alpha).abs() < 1e-6 * u.alpha.abs().max(1.0));
        }
    }

    #[test]
    fn expected_info_examples() {
        let x = DMatrix::from_element(25, 1, 1.0);
        let d = Dataset::new(DVector::from_fn(25, |i, _| i as f64 * 0.01), x).unwrap();
        let k = expected_info(&ParamVector::new(DVector::zeros(1), 1.0).unwrap(), &d).unwrap();
        assert!((k.alpha - 50.0).abs() < 1e-12);

        let mut rng = RngStream::new(8, 8);
        let x = random_design(30, 4, &mut rng);
        let d = Dataset::new(DVector::zeros(30), x).unwrap();
        for &alpha in &[0.1, 0.5, 1.0, 5.0] {
            let k = expected_info(&ParamVector::new(DVector::zeros(4), alpha).unwrap(), &d).unwrap();
            let eig = k.beta.symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
        }
    }

    #[test]
    fn rank_deficiency_is_detected() {
        let x = DMatrix::from_fn(10, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 + 3.0 * i as f64,
        });
        assert!(matches!(Design::new(x), Err(Error::RankDeficient { rank: 2, cols: 3 })));
        assert!(matches!(Design::new(DMatrix::zeros(3, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn fit_is_consistent_and_stationary() {
        let mut rng = RngStream::new(21, 0);
        let x = random_design(200, 2, &mut rng);
        let beta = DVector::from_vec(vec![1.0, 1.0]);
        let y = simulate(&x, &beta, 0.5, &mut rng);
        let d = Dataset::new(y, x).unwrap();
        let f = fit(&d, None).unwrap();
        assert!(f.ok());
        assert!(f.score_norm < 1e-6);
        let k = expected_info(&f.theta, &d).unwrap();
        let cov = k.beta.try_inverse().unwrap();
        for j in 0..2 {
            assert!((f.theta.beta[j] - beta[j]).abs() < 3.0 * cov[(j, j)].sqrt());
        }
        assert!((f.theta.alpha - 0.5).abs() < 3.0 * (1.0 / k.alpha).sqrt());

        let again = fit(&d, Some(&f.theta)).unwrap();
        assert!(again.ok());
        assert!(again.iterations <= 2, "refit took {}", again.iterations);
    }

    #[test]
    fn restricted_fits() {
        let mut rng = RngStream::new(33, 0);
        let x = random_design(500, 3, &mut rng);
        let beta = DVector::from_vec(vec![0.5, 1.0, -1.0]);
        let y = simulate(&x, &beta, 0.7, &mut rng);
        let d = Dataset::new(y, x).unwrap();
        let full = fit(&d, None).unwrap();

        let all = fit_restricted_beta(&d, &beta, None).unwrap();
        assert!(all.ok());
        assert_eq!(all.theta.beta, beta);
        assert!(all.loglik <= full.loglik);

        let b1 = DVector::from_vec(vec![0.5, 1.0]);
        let part = fit_restricted_beta(&d, &b1, None).unwrap();
        assert!(part.ok());
        assert_eq!(part.theta.beta.rows(0, 2), b1.rows(0, 2));
        assert!(part.loglik <= full.loglik);
        let se = (1.0 / (2.0 * 500.0 / 0.49_f64)).sqrt();
        assert!((part.theta.alpha - 0.7).abs() < 3.0 * se);

        assert!(fit_restricted_beta(&d, &DVector::zeros(0), None).is_err());
        assert!(fit_restricted_beta(&d, &DVector::zeros(4), None).is_err());
    }

    #[test]
    fn restricted_alpha_fit() {
        let mut rng = RngStream::new(34, 0);
        let x = random_design(60, 3, &mut rng);
        let y = simulate(&x, &DVector::from_vec(vec![1.0, 2.0, 0.0]), 1.2, &mut rng);
        let d = Dataset::new(y, x).unwrap();
        let full = fit(&d, None).unwrap();
        let r = fit_restricted_alpha(&d, 0.9, None).unwrap();
        assert!(r.ok());
        assert_eq!(r.theta.alpha, 0.9);
        assert!(r.loglik <= full.loglik);
        let u = score(&r.theta, &d).unwrap();
        assert!(u.beta.amax() < 1e-6);
        // At the unrestricted shape the restricted fit reproduces beta-hat.
        let same = fit_restricted_alpha(&d, full.theta.alpha, None).unwrap();
        assert!((&same.theta.beta - &full.theta.beta).amax() < 1e-8);
    }

    #[test]
    fn location_equivariance() {
        let mut rng = RngStream::new(4, 4);
        let x = random_design(20, 3, &mut rng);
        let y = DVector::from_fn(20, |_, _| rng.normal());
        let d = Dataset::new(y.clone(), x.clone()).unwrap();
        let shifted = Dataset::new(y.add_scalar(1.75), x).unwrap();
        let t = ParamVector::new(DVector::from_vec(vec![0.2, 0.4, -0.1]), 0.9).unwrap();
        let mut ts = t.clone();
        ts.beta[0] += 1.75;
        assert!((loglik(&t, &d).unwrap() - loglik(&ts, &shifted).unwrap()).abs() < 1e-12);
        let (u, us) = (score(&t, &d).unwrap(), score(&ts, &shifted).unwrap());
        assert!((&u.beta - &us.beta).amax() < 1e-12);
        assert!((u.alpha - us.alpha).abs() < 1e-12);
    }

    #[test]
    fn reparameterization_invariance() {
        let mut rng = RngStream::new(6, 6);
        let x = random_design(20, 3, &mut rng);
        let y = DVector::from_fn(20, |_, _| rng.normal());
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 2.0, 0.3, 0.1, 0.0, 1.0]);
        let d = Dataset::new(y.clone(), x.clone()).unwrap();
        let dm = Dataset::new(y, &x * &m).unwrap();
        let t = ParamVector::new(DVector::from_vec(vec![0.2, 0.4, -0.1]), 0.9).unwrap();
        let tm = ParamVector::new(m.clone().try_inverse().unwrap() * &t.beta, 0.9).unwrap();
        assert!((loglik(&t, &d).unwrap() - loglik(&tm, &dm).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn csv_ingestion() {
        let text = "life,load,temp\n10.0,1.0,2.0\n20.0,2.0,1.0\n15.0,3.0,5.0\n40.0,4.0,3.0\n";
        let (d, names) = Dataset::from_csv_str(text, &CsvOptions { take_logs: true, intercept: true }).unwrap();
        assert_eq!(names, vec!["intercept", "load", "temp"]);
        assert_eq!(d.p(), 3);
        assert!((d.y()[1] - 20f64.ln()).abs() < 1e-15);
        assert_eq!(d.x()[(2, 0)], 1.0);
        assert_eq!(d.x()[(2, 2)], 5.0);

        let bad = "1,2\n3\n";
        assert!(Dataset::from_csv_str(bad, &CsvOptions::default()).is_err());
        let neg = "-1,1\n2,2\n3,4\n";
        assert!(Dataset::from_csv_str(neg, &CsvOptions { take_logs: true, intercept: false }).is_err());
    }
}
