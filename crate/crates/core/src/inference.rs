//! Score, corrected score, corrected-critical-value, bootstrap and
//! likelihood-ratio tests for `H0: beta_1 = beta_1^(0)` and
//! `H0: alpha = alpha^(0)`.
//!
//! For coefficient hypotheses the tested coordinates are the leading `q`
//! columns of the design; [`reorder_for_subset`] moves arbitrary columns
//! there.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::corrections::{
    a_alpha_test, a_beta_hypothesis, corrected_critical_value, corrected_statistic, ACoefficients,
    DesignTraces, ThetaCoefficients,
};
use crate::cumulants::{self, AlphaConstants};
use crate::error::{domain, Error, Result};
use crate::model::{self, Dataset, Design, FitResult, ParamVector, RestrictedBeta};
use crate::specfun::{chi2_sf, RngStream};

/// Likelihood-ratio values in `[-LR_CLAMP, 0)` are optimizer noise.
pub const LR_CLAMP: f64 = 1e-8;
/// Largest tolerated share of failed bootstrap fits.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    /// `beta_1 = beta1_0` on the leading `beta1_0.len()` coefficients.
    BetaSubset { beta1_0: DVector<f64> },
    /// `alpha = alpha0`.
    AlphaValue { alpha0: f64 },
}

impl Hypothesis {
    pub fn beta_subset(beta1_0: DVector<f64>) -> Self {
        Hypothesis::BetaSubset { beta1_0 }
    }

    pub fn alpha_value(alpha0: f64) -> Self {
        Hypothesis::AlphaValue { alpha0 }
    }

    pub fn df(&self) -> usize {
        match self {
            Hypothesis::BetaSubset { beta1_0 } => beta1_0.len(),
            Hypothesis::AlphaValue { .. } => 1,
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        match self {
            Hypothesis::BetaSubset { beta1_0 } => {
                let q = beta1_0.len();
                if q == 0 || q > p {
                    return Err(domain(format!("need 1 <= q <= p, got q = {q}, p = {p}")));
                }
                if beta1_0.iter().any(|v| !v.is_finite()) {
                    return Err(domain("hypothesized coefficients must be finite"));
                }
            }
            Hypothesis::AlphaValue { alpha0 } => {
                if !(*alpha0 > 0.0 && alpha0.is_finite()) {
                    return Err(domain(format!("alpha0 must be positive, got {alpha0}")));
                }
            }
        }
        Ok(())
    }
}

/// Moves the `tested` columns to the front, keeping the relative order of
/// the rest. Returns the reordered dataset and the permutation (`perm[k]` is
/// the original index of new column `k`).
pub fn reorder_for_subset(d: &Dataset, tested: &[usize]) -> Result<(Dataset, Vec<usize>)> {
    let p = d.p();
    let mut seen = vec![false; p];
    for &j in tested {
        if j >= p || seen[j] {
            return Err(Error::Input(format!("invalid or repeated coefficient index {j}")));
        }
        seen[j] = true;
    }
    let perm: Vec<usize> = tested.iter().copied().chain((0..p).filter(|j| !seen[*j])).collect();
    let x = d.x().select_columns(perm.iter());
    Ok((Dataset::new(d.y().clone(), x)?, perm))
}

/// Undoes [`reorder_for_subset`] on a coefficient vector.
pub fn restore_order(beta: &DVector<f64>, perm: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(beta.len());
    for (k, &j) in perm.iter().enumerate() {
        out[j] = beta[k];
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Lr,
    Sr,
    SrStar,
    Sh,
    Boot,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lr, Method::Sr, Method::SrStar, Method::Sh, Method::Boot];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "LR",
            Method::Sr => "SR",
            Method::SrStar => "SR*",
            Method::Sh => "SH",
            Method::Boot => "Sboot",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" => Ok(Method::Lr),
            "sr" => Ok(Method::Sr),
            "sr-star" | "sr*" | "srstar" => Ok(Method::SrStar),
            "sh" => Ok(Method::Sh),
            "boot" | "sboot" => Ok(Method::Boot),
            other => Err(Error::Input(format!("unknown test method '{other}'"))),
        }
    }
}

/// Outcome of one test on one dataset.
#[derive(Clone, Debug)]
pub struct TestResult {
    pub method: Method,
    /// The uncorrected statistic (`S_R`, or `LR`).
    pub statistic: f64,
    /// `S_R*` for the corrected score test.
    pub corrected: Option<f64>,
    pub df: usize,
    pub p_value: f64,
    /// `(level, critical value)` for the uncorrected statistic.
    pub critical_values: Vec<(f64, f64)>,
    /// `(level, reject)`.
    pub decisions: Vec<(f64, bool)>,
    pub a: ACoefficients,
    pub theta_restricted: ParamVector,
    pub diagnostics: Vec<String>,
}

impl TestResult {
    pub fn rejects(&self, level: f64) -> Option<bool> {
        self.decisions.iter().find(|(l, _)| *l == level).map(|(_, r)| *r)
    }
}

/// Per-design precomputation for repeated testing of one hypothesis.
///
/// Everything that depends only on `X` and the hypothesis is built once;
/// [`PreparedTest::score`] and friends then cost one or two fits each.
#[derive(Clone, Debug)]
pub struct PreparedTest {
    design: Arc<Design>,
    hypothesis: Hypothesis,
    kind: Prepared,
}

#[derive(Clone, Debug)]
enum Prepared {
    Beta {
        restricted: Box<RestrictedBeta>,
        x1: DMatrix<f64>,
        rtr: Cholesky<f64, Dyn>,
        traces: DesignTraces,
    },
    Alpha {
        coefficients: ACoefficients,
    },
}

/// The restricted fit with the score statistic evaluated there.
#[derive(Clone, Debug)]
pub struct ScoreOutcome {
    pub statistic: f64,
    pub fit: FitResult,
}

impl PreparedTest {
    pub fn new(design: Arc<Design>, hypothesis: Hypothesis) -> Result<Self> {
        hypothesis.check(design.p())?;
        let kind = match &hypothesis {
            Hypothesis::BetaSubset { beta1_0 } => {
                let (p, q) = (design.p(), beta1_0.len());
                let x = design.x();
                let x1 = x.columns(0, q).into_owned();
                let r = if q == p {
                    x1.clone()
                } else {
                    let x2 = x.columns(q, p - q).into_owned();
                    let c2 = Cholesky::new(x2.transpose() * &x2)
                        .ok_or(Error::RankDeficient { rank: p - q - 1, cols: p - q })?;
                    &x1 - &x2 * c2.solve(&(x2.transpose() * &x1))
                };
                let rtr = Cholesky::new(r.transpose() * &r)
                    .ok_or(Error::RankDeficient { rank: p - 1, cols: p })?;
                Prepared::Beta {
                    restricted: Box::new(RestrictedBeta::new(&design, beta1_0)?),
                    x1,
                    rtr,
                    traces: DesignTraces::new(x, q)?,
                }
            }
            Hypothesis::AlphaValue { alpha0 } => {
                let c = AlphaConstants::new(*alpha0)?;
                Prepared::Alpha { coefficients: a_alpha_test(&c, design.n(), design.p())? }
            }
        };
        Ok(Self { design, hypothesis, kind })
    }

    pub fn design(&self) -> &Arc<Design> {
        &self.design
    }

    pub fn hypothesis(&self) -> &Hypothesis {
        &self.hypothesis
    }

    pub fn df(&self) -> usize {
        self.hypothesis.df()
    }

    fn check_y(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.design.n() {
            return Err(Error::Dimension(format!(
                "response has {} rows, design has {}",
                y.len(),
                self.design.n()
            )));
        }
        Ok(())
    }

    /// Maximum likelihood under the null hypothesis.
    pub fn restricted_fit(&self, y: &DVector<f64>, init: Option<&ParamVector>) -> Result<FitResult> {
        self.check_y(y)?;
        match (&self.kind, &self.hypothesis) {
            (Prepared::Beta { restricted, .. }, _) => restricted.fit(y, init)?.require(),
            (Prepared::Alpha { .. }, Hypothesis::AlphaValue { alpha0 }) => {
                let d = Dataset::with_design(y.clone(), self.design.clone())?;
                model::fit_restricted_alpha(&d, *alpha0, init)?.require()
            }
            _ => unreachable!("hypothesis and preparation agree"),
        }
    }

    /// The score statistic at a given restricted fit.
    pub fn score_at(&self, y: &DVector<f64>, fit: &FitResult) -> Result<f64> {
        self.check_y(y)?;
        let theta = &fit.theta;
        let r = y - self.design.x() * &theta.beta;
        match &self.kind {
            Prepared::Beta { x1, rtr, .. } => {
                let inv_a2 = 1.0 / (theta.alpha * theta.alpha);
                let s = r.map(|v| 2.0 * inv_a2 * v.sinh() - (0.5 * v).tanh());
                let u = x1.transpose() * s;
                let a1 = cumulants::a1(theta.alpha)?;
                Ok(u.dot(&rtr.solve(&u)) / a1)
            }
            Prepared::Alpha { .. } => {
                let n = r.len() as f64;
                let c = 4.0 / (theta.alpha * theta.alpha);
                let mean = r.iter().map(|&v| c * (0.5 * v).sinh().powi(2)).sum::<f64>() / n;
                Ok(0.5 * n * (mean - 1.0).powi(2))
            }
        }
    }

    pub fn score(&self, y: &DVector<f64>, init: Option<&ParamVector>) -> Result<ScoreOutcome> {
        let fit = self.restricted_fit(y, init)?;
        let statistic = self.score_at(y, &fit)?;
        Ok(ScoreOutcome { statistic, fit })
    }

    /// Edgeworth coefficients: at the restricted shape estimate for
    /// coefficient hypotheses, at `alpha0` for the shape hypothesis.
    pub fn coefficients(&self, fit: &FitResult) -> Result<ACoefficients> {
        match &self.kind {
            Prepared::Beta { traces, .. } => {
                let c = AlphaConstants::new(fit.theta.alpha)?;
                a_beta_hypothesis(traces, &c, self.design.n(), self.df(), self.design.p())
            }
            Prepared::Alpha { coefficients } => Ok(*coefficients),
        }
    }

    /// `2{l(theta-hat) - l(theta-tilde)}` with the clamp for tiny negatives.
    /// The second value is a diagnostic when the statistic was negative.
    pub fn lr(&self, y: &DVector<f64>, restricted: &FitResult, init: Option<&ParamVector>) -> Result<(f64, Option<String>)> {
        let d = Dataset::with_design(y.clone(), self.design.clone())?;
        let full = model::fit(&d, init)?.require()?;
        Ok(clamp_lr(2.0 * (full.loglik - restricted.loglik)))
    }

    /// Score statistics of `b` pseudo-samples from the fitted null model,
    /// sorted ascending, with the number of failed fits.
    pub fn bootstrap(&self, fit: &FitResult, b: usize, rng: &RngStream) -> Result<BootstrapDistribution> {
        if b < 100 {
            return Err(domain(format!("bootstrap needs B >= 100, got {b}")));
        }
        let theta = &fit.theta;
        let mean = self.design.x() * &theta.beta;
        let err = crate::sinh_normal::SinhNormalParams::regression_error(theta.alpha)?;
        let draws: Vec<Option<f64>> = (0..b)
            .into_par_iter()
            .map(|k| {
                let mut r = rng.derive(k as u64);
                let y = DVector::from_fn(mean.len(), |i, _| mean[i] + err.sample(&mut r));
                self.score(&y, Some(theta)).ok().map(|o| o.statistic)
            })
            .collect();
        let mut stats: Vec<f64> = draws.iter().flatten().copied().collect();
        let failed = b - stats.len();
        if failed as f64 > MAX_FAILURE_SHARE * b as f64 {
            return Err(Error::FailureRate { failed, total: b });
        }
        stats.sort_by(f64::total_cmp);
        Ok(BootstrapDistribution { stats, failed })
    }
}

pub(crate) fn clamp_lr(lr: f64) -> (f64, Option<String>) {
    if lr >= 0.0 {
        (lr, None)
    } else if lr >= -LR_CLAMP {
        (0.0, None)
    } else {
        (0.0, Some(format!("likelihood ratio {lr:.3e} is negative; a fit is suspect")))
    }
}

#[derive(Clone, Debug)]
pub struct BootstrapDistribution {
    pub stats: Vec<f64>,
    pub failed: usize,
}

impl BootstrapDistribution {
    /// The order statistic of rank `ceil((1 - gamma)·B)`.
    pub fn critical_value(&self, gamma: f64) -> f64 {
        let b = self.stats.len();
        let rank = (((1.0 - gamma) * b as f64) - 1e-9).ceil().max(1.0) as usize;
        self.stats[rank.min(b) - 1]
    }

    /// Share of pseudo-statistics at least as large as `s`.
    pub fn p_value(&self, s: f64) -> f64 {
        let below = self.stats.partition_point(|&v| v < s);
        (self.stats.len() - below) as f64 / self.stats.len() as f64
    }
}

/// Inverts `c ↦ c(1 + v1 + v2 c + v3 c²)` at `s` and returns the chi-square
/// tail probability of the root, so that `p < gamma` exactly when `s`
/// exceeds the corrected critical value (where that map is increasing).
pub fn critical_value_p_value(s: f64, v: &ThetaCoefficients) -> Result<f64> {
    if !(s > 0.0) {
        return Ok(1.0);
    }
    let h = |c: f64| c * (1.0 + v.poly(c));
    let mut hi = s.max(1.0);
    while h(hi) < s {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(0.0);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    chi2_sf(0.5 * (lo + hi), v.q as u32)
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(domain(format!("level must lie in (0, 1), got {l}")));
    }
    Ok(())
}

fn chi2_decisions(stat: f64, df: usize, levels: &[f64]) -> Result<(f64, Vec<(f64, f64)>, Vec<(f64, bool)>)> {
    let p = chi2_sf(stat.max(0.0), df as u32)?;
    let mut crit = Vec::with_capacity(levels.len());
    let mut dec = Vec::with_capacity(levels.len());
    for &g in levels {
        crit.push((g, crate::specfun::chi2_quantile(1.0 - g, df as u32)?));
        dec.push((g, p < g));
    }
    Ok((p, crit, dec))
}

/// Options for [`run_test`].
#[derive(Clone, Debug)]
pub struct TestOptions {
    pub levels: Vec<f64>,
    pub bootstrap_b: usize,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self { levels: vec![0.10, 0.05], bootstrap_b: 600, seed: 0 }
    }
}

/// Runs one test procedure on one dataset.
pub fn run_test(d: &Dataset, h: &Hypothesis, method: Method, opts: &TestOptions) -> Result<TestResult> {
    check_levels(&opts.levels)?;
    let prep = PreparedTest::new(d.design().clone(), h.clone())?;
    let out = prep.score(d.y(), None)?;
    let a = prep.coefficients(&out.fit)?;
    evaluate(&prep, d.y(), &out, a, method, opts)
}

/// Evaluates `method` given a restricted fit and its coefficients; the
/// coefficients are explicit so that callers can override them.
pub fn evaluate(
    prep: &PreparedTest,
    y: &DVector<f64>,
    out: &ScoreOutcome,
    a: ACoefficients,
    method: Method,
    opts: &TestOptions,
) -> Result<TestResult> {
    check_levels(&opts.levels)?;
    let df = prep.df();
    let s = out.statistic;
    let v = ThetaCoefficients::new(&a, df)?;
    let mut diagnostics = Vec::new();
    let mut corrected = None;
    let (statistic, p_value, critical_values, decisions) = match method {
        Method::Sr => {
            let (p, c, d) = chi2_decisions(s, df, &opts.levels)?;
            (s, p, c, d)
        }
        Method::SrStar => {
            let ss = corrected_statistic(s, &v);
            if ss < 0.0 {
                diagnostics.push(format!("corrected statistic is negative ({ss:.4})"));
            }
            corrected = Some(ss);
            let (p, c, d) = chi2_decisions(ss, df, &opts.levels)?;
            let (_, _, plain) = chi2_decisions(s, df, &opts.levels)?;
            if plain != d {
                diagnostics.push("correction changes the decision".into());
            }
            (s, p, c, d)
        }
        Method::Sh => {
            let mut c = Vec::new();
            let mut d = Vec::new();
            for &g in &opts.levels {
                let q = corrected_critical_value(g, &v)?;
                c.push((g, q));
                d.push((g, s > q));
            }
            (s, critical_value_p_value(s, &v)?, c, d)
        }
        Method::Boot => {
            let rng = RngStream::new(opts.seed, 0x626f_6f74);
            let dist = prep.bootstrap(&out.fit, opts.bootstrap_b, &rng)?;
            if dist.failed > 0 {
                diagnostics.push(format!("{} bootstrap fits failed and were skipped", dist.failed));
            }
            let mut c = Vec::new();
            let mut d = Vec::new();
            for &g in &opts.levels {
                let q = dist.critical_value(g);
                c.push((g, q));
                d.push((g, s > q));
            }
            (s, dist.p_value(s), c, d)
        }
        Method::Lr => {
            let (lr, diag) = prep.lr(y, &out.fit, None)?;
            diagnostics.extend(diag);
            let (p, c, d) = chi2_decisions(lr, df, &opts.levels)?;
            (lr, p, c, d)
        }
    };
    Ok(TestResult {
        method,
        statistic,
        corrected,
        df,
        p_value,
        critical_values,
        decisions,
        a,
        theta_restricted: out.fit.theta.clone(),
        diagnostics,
    })
}

/// `S_R` for `H0: beta_1 = beta1_0` with the restricted estimate.
pub fn score_stat_beta(d: &Dataset, beta1_0: &DVector<f64>) -> Result<(f64, ParamVector)> {
    let prep = PreparedTest::new(d.design().clone(), Hypothesis::beta_subset(beta1_0.clone()))?;
    let out = prep.score(d.y(), None)?;
    Ok((out.statistic, out.fit.theta))
}

/// `S_R = (n/2)(mean(xi2²) - 1)²` for `H0: alpha = alpha0`.
pub fn score_stat_alpha(d: &Dataset, alpha0: f64) -> Result<(f64, ParamVector)> {
    let prep = PreparedTest::new(d.design().clone(), Hypothesis::alpha_value(alpha0))?;
    let out = prep.score(d.y(), None)?;
    Ok((out.statistic, out.fit.theta))
}

/// The likelihood-ratio statistic, clamped at zero within optimizer
/// tolerance.
pub fn lr_stat(d: &Dataset, h: &Hypothesis) -> Result<f64> {
    let prep = PreparedTest::new(d.design().clone(), h.clone())?;
    let fit = prep.restricted_fit(d.y(), None)?;
    Ok(prep.lr(d.y(), &fit, None)?.0)
}

pub fn corrected_score_test(d: &Dataset, h: &Hypothesis, levels: &[f64]) -> Result<TestResult> {
    run_test(d, h, Method::SrStar, &TestOptions { levels: levels.to_vec(), ..Default::default() })
}

pub fn critical_value_score_test(d: &Dataset, h: &Hypothesis, levels: &[f64]) -> Result<TestResult> {
    run_test(d, h, Method::Sh, &TestOptions { levels: levels.to_vec(), ..Default::default() })
}

pub fn bootstrap_score_test(d: &Dataset, h: &Hypothesis, b: usize, levels: &[f64], seed: u64) -> Result<TestResult> {
    run_test(d, h, Method::Boot, &TestOptions { levels: levels.to_vec(), bootstrap_b: b, seed })
}

/// A null hypothesis stated on the original column order.
#[derive(Clone, Debug, PartialEq)]
pub enum NullSpec {
    /// `beta[tested[k]] = values[k]` (zero-based columns).
    Beta { tested: Vec<usize>, values: Vec<f64> },
    Alpha(f64),
}

/// Parses `"b3=0,b4=0"` (one-based coefficient numbers, or column names
/// from `names`) or `"alpha=1.0"`.
pub fn parse_null(spec: &str, names: &[String]) -> Result<NullSpec> {
    let bad = |msg: String| Error::Input(format!("null hypothesis '{spec}': {msg}"));
    let mut tested = Vec::new();
    let mut values = Vec::new();
    let mut alpha = None;
    for term in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (lhs, rhs) = term.split_once('=').ok_or_else(|| bad(format!("expected name=value in '{term}'")))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        let value: f64 = rhs.parse().map_err(|_| bad(format!("'{rhs}' is not a number")))?;
        if lhs.eq_ignore_ascii_case("alpha") {
            if alpha.replace(value).is_some() {
                return Err(bad("alpha given twice".into()));
            }
            continue;
        }
        let by_number = lhs
            .strip_prefix(['b', 'B'])
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1 && k <= names.len())
            .map(|k| k - 1);
        let col = match names.iter().position(|n| n == lhs) {
            Some(j) => j,
            None => by_number.ok_or_else(|| bad(format!("unknown coefficient '{lhs}'")))?,
        };
        if tested.contains(&col) {
            return Err(bad(format!("coefficient '{lhs}' given twice")));
        }
        tested.push(col);
        values.push(value);
    }
    match (alpha, tested.is_empty()) {
        (Some(a), true) => Ok(NullSpec::Alpha(a)),
        (None, false) => Ok(NullSpec::Beta { tested, values }),
        (Some(_), false) => Err(bad("joint hypotheses on alpha and beta are not supported".into())),
        (None, true) => Err(bad("no restrictions given".into())),
    }
}

/// Runs `method` for a null stated on the original columns. The restricted
/// estimate in the result is reported in the original column order.
pub fn test_null(d: &Dataset, null: &NullSpec, method: Method, opts: &TestOptions) -> Result<TestResult> {
    match null {
        NullSpec::Alpha(a0) => run_test(d, &Hypothesis::alpha_value(*a0), method, opts),
        NullSpec::Beta { tested, values } => {
            let (dr, perm) = reorder_for_subset(d, tested)?;
            let h = Hypothesis::beta_subset(DVector::from_column_slice(values));
            let mut res = run_test(&dr, &h, method, opts)?;
            res.theta_restricted.beta = restore_order(&res.theta_restricted.beta, &perm);
            Ok(res)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinh_normal::SinhNormalParams;

    fn data(n: usize, p: usize, beta: &[f64], alpha: f64, seed: u64) -> Dataset {
        let mut rng = RngStream::new(seed, 0);
        let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.uniform() });
        let err = SinhNormalParams::regression_error(alpha).unwrap();
        let y = &x * DVector::from_row_slice(beta) + DVector::from_fn(n, |_, _| err.sample(&mut rng));
        Dataset::new(y, x).unwrap()
    }

    #[test]
    fn score_equals_quadratic_form_of_the_score_vector() {
        let d = data(40, 4, &[0.0, 0.0, 1.0, 1.0], 0.6, 1);
        let b0 = DVector::from_vec(vec![0.1, -0.2]);
        let (s, theta) = score_stat_beta(&d, &b0).unwrap();
        let u = model::score(&theta, &d).unwrap();
        let k = model::expected_info(&theta, &d).unwrap();
        let kinv = k.beta.try_inverse().unwrap();
        let u1 = u.beta.rows(0, 2);
        let direct = (u1.transpose() * kinv.view((0, 0), (2, 2)) * u1)[(0, 0)];
        assert!((s - direct).abs() < 1e-10 * direct.max(1.0));
        assert!(u.beta.rows(2, 2).amax() < 1e-6);
    }

    #[test]
    fn score_vanishes_when_orthogonal() {
        // s-tilde = 0 when the responses sit on the null mean.
        let mut rng = RngStream::new(2, 0);
        let x = DMatrix::from_fn(20, 3, |_, j| if j == 0 { 1.0 } else { rng.uniform() });
        let d = Dataset::new(DVector::from_fn(20, |_, _| rng.normal()), x).unwrap();
        let prep = PreparedTest::new(d.design().clone(), Hypothesis::beta_subset(DVector::zeros(1))).unwrap();
        let out = prep.score(d.y(), None).unwrap();
        assert!(out.statistic > 0.0);
        let on_mean = d.x() * &out.fit.theta.beta;
        assert_eq!(prep.score_at(&on_mean, &out.fit).unwrap(), 0.0);
    }

    #[test]
    fn nuisance_basis_change_leaves_score_unchanged() {
        let d = data(30, 4, &[0.0, 0.0, 1.0, 1.0], 0.5, 3);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -1.0, 1.5]);
        let mut x = d.x().clone();
        let x2 = x.columns(2, 2) * &m;
        x.columns_mut(2, 2).copy_from(&x2);
        let d2 = Dataset::new(d.y().clone(), x).unwrap();
        let b0 = DVector::zeros(2);
        let (a, _) = score_stat_beta(&d, &b0).unwrap();
        let (b, _) = score_stat_beta(&d2, &b0).unwrap();
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn alpha_score_examples() {
        let d = data(30, 4, &[1.0; 4], 1.0, 4);
        let (s, theta) = score_stat_alpha(&d, 1.0).unwrap();
        assert!(s >= 0.0);
        assert_eq!(theta.alpha, 1.0);
        // At the unrestricted shape estimate mean(xi2²) = 1 exactly.
        let full = model::fit(&d, None).unwrap();
        let (s0, _) = score_stat_alpha(&d, full.theta.alpha).unwrap();
        assert!(s0 < 1e-12);
    }

    #[test]
    fn lr_is_nonnegative_and_zero_at_the_estimate() {
        for seed in 0..50 {
            let d = data(20, 3, &[1.0, 0.0, 0.0], 0.8, 100 + seed);
            let lr = lr_stat(&d, &Hypothesis::beta_subset(DVector::zeros(2))).unwrap();
            assert!(lr >= 0.0);
        }
        let d = data(25, 3, &[1.0, 0.5, 0.5], 0.8, 9);
        let full = model::fit(&d, None).unwrap();
        let h = Hypothesis::alpha_value(full.theta.alpha);
        assert!(lr_stat(&d, &h).unwrap() < 1e-9);
        assert_eq!(clamp_lr(-1e-9).0, 0.0);
        assert!(clamp_lr(-1e-3).1.is_some());
    }

    #[test]
    fn zero_coefficients_reduce_to_plain_tests() {
        let d = data(25, 5, &[0.0, 0.0, 1.0, 1.0, 1.0], 0.5, 12);
        let prep = PreparedTest::new(d.design().clone(), Hypothesis::beta_subset(DVector::zeros(2))).unwrap();
        let out = prep.score(d.y(), None).unwrap();
        let opts = TestOptions::default();
        let plain = evaluate(&prep, d.y(), &out, ACoefficients::default(), Method::Sr, &opts).unwrap();
        for m in [Method::SrStar, Method::Sh] {
            let r = evaluate(&prep, d.y(), &out, ACoefficients::default(), m, &opts).unwrap();
            assert_eq!(r.decisions, plain.decisions);
            assert!((r.p_value - plain.p_value).abs() < 1e-10);
        }
    }

    #[test]
    fn p_values_agree_with_decisions() {
        for seed in 0..20 {
            let d = data(25, 7, &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0], 0.5, 200 + seed);
            let h = Hypothesis::beta_subset(DVector::zeros(2));
            let opts = TestOptions { levels: vec![0.10, 0.05, 0.01], ..Default::default() };
            for m in [Method::Sr, Method::SrStar, Method::Sh, Method::Lr] {
                let r = run_test(&d, &h, m, &opts).unwrap();
                assert!((0.0..=1.0).contains(&r.p_value));
                for &(g, rej) in &r.decisions {
                    if (r.p_value - g).abs() > 1e-9 {
                        assert_eq!(rej, r.p_value < g, "{m} seed {seed} level {g}");
                    }
                }
            }
        }
    }

    #[test]
    fn bootstrap_order_statistic() {
        let dist = BootstrapDistribution { stats: (1..=600).map(f64::from).collect(), failed: 0 };
        assert_eq!(dist.critical_value(0.10), 540.0);
        assert_eq!(dist.critical_value(0.05), 570.0);
        // every pseudo-statistic above S_R: never reject
        assert!(!(0.5 > dist.critical_value(0.10)));
        assert_eq!(dist.p_value(0.5), 1.0);
        assert_eq!(dist.p_value(601.0), 0.0);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let d = data(30, 4, &[0.0, 0.0, 1.0, 1.0], 1.5, 5);
        let h = Hypothesis::beta_subset(DVector::zeros(2));
        let a = bootstrap_score_test(&d, &h, 200, &[0.1], 42).unwrap();
        let b = bootstrap_score_test(&d, &h, 200, &[0.1], 42).unwrap();
        assert_eq!(a.critical_values, b.critical_values);
        assert!(bootstrap_score_test(&d, &h, 50, &[0.1], 42).is_err());
    }

    #[test]
    fn reorder_round_trip() {
        let d = data(20, 4, &[1.0, 2.0, 3.0, 4.0], 0.5, 6);
        let (r, perm) = reorder_for_subset(&d, &[2, 3]).unwrap();
        assert_eq!(perm, vec![2, 3, 0, 1]);
        assert_eq!(r.x().column(0), d.x().column(2));
        let b = DVector::from_vec(vec![30.0, 40.0, 10.0, 20.0]);
        assert_eq!(restore_order(&b, &perm), DVector::from_vec(vec![10.0, 20.0, 30.0, 40.0]));
        assert!(reorder_for_subset(&d, &[1, 1]).is_err());
        assert!(reorder_for_subset(&d, &[4]).is_err());
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            let s = match m {
                Method::SrStar => "sr-star",
                Method::Boot => "boot",
                other => other.name(),
            };
            assert_eq!(s.parse::<Method>().unwrap(), m);
        }
        assert!("wald".parse::<Method>().is_err());
    }

    #[test]
    fn null_parsing() {
        let names: Vec<String> = ["intercept", "x1", "x2", "dose"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            parse_null("b3=0, b4=0.5", &names).unwrap(),
            NullSpec::Beta { tested: vec![2, 3], values: vec![0.0, 0.5] }
        );
        assert_eq!(parse_null("dose=1", &names).unwrap(), NullSpec::Beta { tested: vec![3], values: vec![1.0] });
        assert_eq!(parse_null("alpha=1.0", &names).unwrap(), NullSpec::Alpha(1.0));
        for bad in ["", "b5=0", "b0=0", "b2=0,b2=1", "alpha=1,b2=0", "b2", "b2=x"] {
            assert!(matches!(parse_null(bad, &names), Err(Error::Input(_))), "{bad}");
        }
    }

    #[test]
    fn test_null_matches_manual_reordering() {
        let d = data(30, 4, &[1.0, 0.0, 1.0, 0.0], 0.7, 5);
        let null = NullSpec::Beta { tested: vec![3, 1], values: vec![0.0, 0.0] };
        let opts = TestOptions::default();
        let res = test_null(&d, &null, Method::SrStar, &opts).unwrap();
        let (dr, perm) = reorder_for_subset(&d, &[3, 1]).unwrap();
        let manual = run_test(&dr, &Hypothesis::beta_subset(DVector::zeros(2)), Method::SrStar, &opts).unwrap();
        assert_eq!(res.statistic, manual.statistic);
        assert_eq!(res.theta_restricted.beta, restore_order(&manual.theta_restricted.beta, &perm));
        assert_eq!(res.theta_restricted.beta[1], 0.0);
        assert_eq!(res.theta_restricted.beta[3], 0.0);
    }
}
