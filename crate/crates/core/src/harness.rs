//! Seed-reproducible Monte Carlo size, power and moment studies.
//!
//! Each replication draws its errors from its own [`RngStream`], keyed by
//! the seed, a hash of the cell and the replication index, and the
//! per-replication outcomes are reduced in index order. Results are
//! therefore identical for any number of worker threads.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::corrections::{corrected_critical_value, corrected_statistic, ThetaCoefficients};
use crate::error::{domain, Error, Result};
use crate::inference::{clamp_lr, Hypothesis, Method, PreparedTest, MAX_FAILURE_SHARE};
use crate::model::Design;
use crate::sinh_normal::SinhNormalParams;
use crate::specfun::{chi2_quantile, mix64, RngStream};

pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const QUICK_REPLICATIONS: usize = 2_000;
pub const DEFAULT_BOOTSTRAP_B: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovariatePolicy {
    /// One design per cell, held fixed over replications.
    Fixed,
    /// A fresh design in every replication.
    Redrawn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypothesisKind {
    /// The last `q` coefficients are zero.
    Beta,
    /// The shape equals its true value.
    Alpha,
}

/// One simulation cell.
///
/// Coefficients are indexed as in the model `y = b1 + b2 x2 + ... + bp xp`
/// with the tested block at the end; the harness moves it to the front
/// internally.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    /// Defaults to ones for the untested coefficients and `delta` for the
    /// tested ones.
    pub beta_true: Option<Vec<f64>>,
    pub delta: f64,
    pub levels: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub tests: Vec<Method>,
    pub bootstrap_b: usize,
    pub covariates: CovariatePolicy,
    pub hypothesis: HypothesisKind,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 25,
            p: 3,
            q: 2,
            alpha: 0.5,
            beta_true: None,
            delta: 0.0,
            levels: vec![0.10, 0.05],
            replications: DEFAULT_REPLICATIONS,
            seed: 2010,
            tests: vec![Method::Lr, Method::Sr, Method::SrStar],
            bootstrap_b: DEFAULT_BOOTSTRAP_B,
            covariates: CovariatePolicy::Fixed,
            hypothesis: HypothesisKind::Beta,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p >= self.n {
            return Err(Error::Input(format!("need 1 <= p < n, got p = {}, n = {}", self.p, self.n)));
        }
        if self.hypothesis == HypothesisKind::Beta && (self.q == 0 || self.q > self.p) {
            return Err(Error::Input(format!("need 1 <= q <= p, got q = {}", self.q)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Input(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.replications == 0 {
            return Err(Error::Input("replications must be positive".into()));
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::Input(format!("level must lie in (0, 1), got {l}")));
        }
        if let Some(b) = &self.beta_true {
            if b.len() != self.p {
                return Err(Error::Input(format!("beta_true has {} entries, p = {}", b.len(), self.p)));
            }
        }
        if self.tests.is_empty() {
            return Err(Error::Input("no tests configured".into()));
        }
        if self.tests.contains(&Method::Boot) && self.bootstrap_b < 100 {
            return Err(Error::Input("bootstrap_b must be at least 100".into()));
        }
        Ok(())
    }

    /// Degrees of freedom of the tested hypothesis.
    pub fn df(&self) -> usize {
        match self.hypothesis {
            HypothesisKind::Beta => self.q,
            HypothesisKind::Alpha => 1,
        }
    }

    /// True coefficients in model order.
    pub fn beta_model_order(&self) -> Vec<f64> {
        if let Some(b) = &self.beta_true {
            return b.clone();
        }
        let tested = match self.hypothesis {
            HypothesisKind::Beta => self.q,
            HypothesisKind::Alpha => 0,
        };
        (0..self.p).map(|j| if j >= self.p - tested { self.delta } else { 1.0 }).collect()
    }

    /// Column order used internally: tested block first.
    fn column_order(&self) -> Vec<usize> {
        match self.hypothesis {
            HypothesisKind::Beta => ((self.p - self.q)..self.p).chain(0..(self.p - self.q)).collect(),
            HypothesisKind::Alpha => (0..self.p).collect(),
        }
    }

    fn cell_hash(&self) -> u64 {
        let fields = [
            self.n as u64,
            self.p as u64,
            self.q as u64,
            self.alpha.to_bits(),
            self.delta.to_bits(),
            self.hypothesis as u64,
            self.covariates as u64,
        ];
        fields.iter().fold(0x6273_7265_67u64, |h, &f| mix64(h ^ f))
    }

    fn cell_seed(&self) -> u64 {
        mix64(self.seed ^ self.cell_hash())
    }

    fn hypothesis_value(&self) -> Hypothesis {
        match self.hypothesis {
            HypothesisKind::Beta => Hypothesis::beta_subset(DVector::zeros(self.q)),
            HypothesisKind::Alpha => Hypothesis::alpha_value(self.alpha),
        }
    }

    pub fn describe(&self) -> String {
        let h = match self.hypothesis {
            HypothesisKind::Beta => format!("q={}", self.q),
            HypothesisKind::Alpha => "H0:alpha".into(),
        };
        let mut s = format!("n={} p={} {} alpha={}", self.n, self.p, h, self.alpha);
        if self.delta != 0.0 {
            let _ = write!(s, " delta={}", self.delta);
        }
        s
    }
}

/// Draws `[1, U(0,1), ..., U(0,1)]` rows in model order.
fn draw_design(n: usize, p: usize, rng: &mut RngStream) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.uniform() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Standardized fourth moment (3 for the normal law).
    pub kurtosis: f64,
}

impl Moments {
    /// Moments with divisor `N`; `None` for fewer than two values.
    pub fn from_sample(xs: &[f64]) -> Option<Self> {
        if xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        Some(Self { mean, variance: m2, skewness: m3 / m2.powf(1.5), kurtosis: m4 / (m2 * m2) })
    }

    /// Moments of the chi-square law with `k` degrees of freedom.
    pub fn chi2(k: usize) -> Self {
        let k = k as f64;
        Self { mean: k, variance: 2.0 * k, skewness: (8.0 / k).sqrt(), kurtosis: 3.0 + 12.0 / k }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate {
    pub method: Method,
    pub level: f64,
    /// Rejection frequency in `[0, 1]`.
    pub rate: f64,
    /// `sqrt(rate (1 - rate) / reps)`.
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub config: ExperimentConfig,
    /// Replications that produced statistics.
    pub replications: usize,
    pub failed: usize,
    pub rates: Vec<Rate>,
    pub moments: Vec<(Method, Moments)>,
}

impl CellResult {
    pub fn rate(&self, method: Method, level: f64) -> Option<&Rate> {
        self.rates.iter().find(|r| r.method == method && r.level == level)
    }

    pub fn moments_of(&self, method: Method) -> Option<&Moments> {
        self.moments.iter().find(|(m, _)| *m == method).map(|(_, v)| v)
    }
}

pub fn mc_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// One replication: per configured test, the statistic (if it has one)
/// and the decision at each level.
struct RepOutcome {
    stats: Vec<Option<f64>>,
    rejects: Vec<Vec<bool>>,
}

struct Cell<'a> {
    cfg: &'a ExperimentConfig,
    order: Vec<usize>,
    beta: DVector<f64>,
    err: SinhNormalParams,
    chi2_crit: Vec<f64>,
    fixed: Option<PreparedTest>,
    cell_seed: u64,
}

const STREAM_DESIGN: u64 = 0x6465_7369_676e;
const STREAM_BOOT: u64 = 0x626f_6f74;

impl<'a> Cell<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let order = cfg.column_order();
        let beta_model = cfg.beta_model_order();
        let beta = DVector::from_iterator(cfg.p, order.iter().map(|&j| beta_model[j]));
        let cell_seed = cfg.cell_seed();
        let chi2_crit = cfg
            .levels
            .iter()
            .map(|&g| chi2_quantile(1.0 - g, cfg.df() as u32))
            .collect::<Result<Vec<_>>>()?;
        let mut cell = Self {
            cfg,
            order,
            beta,
            err: SinhNormalParams::regression_error(cfg.alpha)?,
            chi2_crit,
            fixed: None,
            cell_seed,
        };
        if cfg.covariates == CovariatePolicy::Fixed {
            let mut rng = RngStream::new(cell_seed, STREAM_DESIGN);
            cell.fixed = Some(cell.prepare(&mut rng)?);
        }
        Ok(cell)
    }

    fn prepare(&self, rng: &mut RngStream) -> Result<PreparedTest> {
        let x = draw_design(self.cfg.n, self.cfg.p, rng).select_columns(self.order.iter());
        PreparedTest::new(Arc::new(Design::new(x)?), self.cfg.hypothesis_value())
    }

    fn replicate(&self, rep: usize) -> Option<RepOutcome> {
        let cfg = self.cfg;
        let mut rng = RngStream::new(self.cell_seed, rep as u64);
        let owned;
        let prep = match &self.fixed {
            Some(p) => p,
            None => {
                owned = self.prepare(&mut rng).ok()?;
                &owned
            }
        };
        let x = prep.design().x();
        let y = x * &self.beta + DVector::from_fn(cfg.n, |_, _| self.err.sample(&mut rng));
        let out = prep.score(&y, None).ok()?;
        let s = out.statistic;
        let v = ThetaCoefficients::new(&prep.coefficients(&out.fit).ok()?, cfg.df()).ok()?;

        let mut stats = Vec::with_capacity(cfg.tests.len());
        let mut rejects = Vec::with_capacity(cfg.tests.len());
        for &m in &cfg.tests {
            let (stat, rej): (Option<f64>, Vec<bool>) = match m {
                Method::Sr => (Some(s), self.chi2_crit.iter().map(|&c| s > c).collect()),
                Method::SrStar => {
                    let ss = corrected_statistic(s, &v);
                    (Some(ss), self.chi2_crit.iter().map(|&c| ss > c).collect())
                }
                Method::Sh => {
                    let rej = cfg
                        .levels
                        .iter()
                        .map(|&g| corrected_critical_value(g, &v).map(|c| s > c))
                        .collect::<Result<Vec<_>>>()
                        .ok()?;
                    (None, rej)
                }
                Method::Lr => {
                    let (lr, _) = prep.lr(&y, &out.fit, None).ok()?;
                    let lr = clamp_lr(lr).0;
                    (Some(lr), self.chi2_crit.iter().map(|&c| lr > c).collect())
                }
                Method::Boot => {
                    let boot = RngStream::new(mix64(self.cell_seed ^ STREAM_BOOT), rep as u64);
                    let dist = prep.bootstrap(&out.fit, cfg.bootstrap_b, &boot).ok()?;
                    (None, cfg.levels.iter().map(|&g| s > dist.critical_value(g)).collect())
                }
            };
            stats.push(stat);
            rejects.push(rej);
        }
        Some(RepOutcome { stats, rejects })
    }
}

/// Runs every replication of a cell and tabulates rejection rates and
/// statistic moments.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CellResult> {
    let cell = Cell::new(cfg)?;
    let outcomes: Vec<Option<RepOutcome>> =
        (0..cfg.replications).into_par_iter().map(|r| cell.replicate(r)).collect();

    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    if failed as f64 > MAX_FAILURE_SHARE * cfg.replications as f64 {
        return Err(Error::FailureRate { failed, total: cfg.replications });
    }
    let ok: Vec<&RepOutcome> = outcomes.iter().flatten().collect();
    let reps = ok.len();
    let mut rates = Vec::new();
    let mut moments = Vec::new();
    for (t, &m) in cfg.tests.iter().enumerate() {
        for (l, &g) in cfg.levels.iter().enumerate() {
            let hits = ok.iter().filter(|o| o.rejects[t][l]).count();
            let rate = hits as f64 / reps as f64;
            rates.push(Rate { method: m, level: g, rate, se: mc_se(rate, reps) });
        }
        let xs: Vec<f64> = ok.iter().filter_map(|o| o.stats[t]).collect();
        if xs.len() == reps {
            if let Some(mo) = Moments::from_sample(&xs) {
                moments.push((m, mo));
            }
        }
    }
    Ok(CellResult { config: cfg.clone(), replications: reps, failed, rates, moments })
}

/// Null rejection rates for a coefficient hypothesis.
pub fn run_size_experiment(cfg: &ExperimentConfig) -> Result<CellResult> {
    if cfg.delta != 0.0 || cfg.hypothesis != HypothesisKind::Beta {
        return Err(domain("size experiments need delta = 0 and a coefficient hypothesis"));
    }
    run_experiment(cfg)
}

/// Non-null rejection rates with the tested coefficients set to `delta`.
pub fn run_power_experiment(cfg: &ExperimentConfig) -> Result<CellResult> {
    if !(cfg.delta > 0.0) || cfg.hypothesis != HypothesisKind::Beta {
        return Err(domain("power experiments need delta > 0 and a coefficient hypothesis"));
    }
    run_experiment(cfg)
}

/// Moments of the statistics under the null.
pub fn run_moment_study(cfg: &ExperimentConfig) -> Result<CellResult> {
    if cfg.delta != 0.0 {
        return Err(domain("moment studies run under the null (delta = 0)"));
    }
    run_experiment(cfg)
}

/// Null rejection rates for `H0: alpha = alpha0`.
pub fn run_alpha_size_experiment(cfg: &ExperimentConfig) -> Result<CellResult> {
    if cfg.hypothesis != HypothesisKind::Alpha {
        return Err(domain("shape-size experiments need the shape hypothesis"));
    }
    run_experiment(cfg)
}

// ---------------------------------------------------------------------------
// Table presets

/// A published rejection rate (percent) with its tolerance (percentage
/// points).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReference {
    pub cell: usize,
    pub method: Method,
    pub level: f64,
    pub percent: f64,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentKind {
    Mean,
    Variance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentReference {
    pub cell: usize,
    pub method: Method,
    pub kind: MomentKind,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct TablePreset {
    pub name: String,
    pub cells: Vec<ExperimentConfig>,
    pub rates: Vec<RateReference>,
    pub moments: Vec<MomentReference>,
}

const TOL_PLAIN: f64 = 1.5;
const TOL_CORRECTED: f64 = 1.0;

fn tol_for(m: Method) -> f64 {
    if m == Method::SrStar {
        TOL_CORRECTED
    } else {
        TOL_PLAIN
    }
}

/// Adds `(LR, SR, SR*)` references at 10% and 5% for one cell.
fn push_three(refs: &mut Vec<RateReference>, cell: usize, row: [f64; 6]) {
    let methods = [Method::Lr, Method::Sr, Method::SrStar];
    for (k, &m) in methods.iter().enumerate() {
        for (l, &level) in [0.10, 0.05].iter().enumerate() {
            refs.push(RateReference { cell, method: m, level, percent: row[3 * l + k], tolerance: tol_for(m) });
        }
    }
}

/// The simulation designs behind the published tables, with their
/// reference values. `"alpha"` is the shape-hypothesis cell.
pub fn table_preset(table: &str, replications: usize, seed: u64) -> Result<TablePreset> {
    let base = ExperimentConfig { replications, seed, ..Default::default() };
    let mut cells = Vec::new();
    let mut rates = Vec::new();
    let mut moments = Vec::new();
    match table {
        "1" => {
            // (LR, SR, SR*) at 10% then 5%
            let rows: [(f64, [[f64; 6]; 8]); 2] = [
                (
                    0.5,
                    [
                        [12.96, 9.89, 9.55, 6.96, 4.66, 4.91],
                        [14.26, 11.35, 10.17, 7.80, 5.17, 4.81],
                        [15.63, 12.57, 9.93, 8.79, 5.89, 4.87],
                        [17.04, 13.74, 10.24, 10.10, 7.12, 5.11],
                        [19.02, 15.38, 10.54, 11.40, 7.83, 5.38],
                        [20.73, 17.21, 10.83, 12.93, 9.54, 5.43],
                        [22.76, 18.77, 10.84, 14.41, 10.59, 5.22],
                        [24.83, 21.19, 11.40, 16.46, 12.41, 5.98],
                    ],
                ),
                (
                    1.0,
                    [
                        [12.82, 9.00, 9.77, 6.79, 4.11, 4.91],
                        [14.00, 9.88, 10.02, 7.67, 4.27, 4.77],
                        [15.41, 10.92, 10.17, 8.49, 5.06, 5.17],
                        [16.76, 12.27, 10.53, 9.76, 5.82, 5.23],
                        [18.41, 13.52, 11.08, 10.93, 6.54, 5.51],
                        [20.65, 15.60, 10.92, 12.68, 8.01, 5.65],
                        [22.18, 17.00, 11.35, 14.36, 8.90, 5.41],
                        [24.65, 19.43, 11.85, 16.09, 10.93, 6.23],
                    ],
                ),
            ];
            for (alpha, table) in rows {
                for (k, row) in table.iter().enumerate() {
                    let c = cells.len();
                    cells.push(ExperimentConfig { p: 3 + k, alpha, ..base.clone() });
                    push_three(&mut rates, c, *row);
                }
            }
        }
        "2" => {
            let rows = [
                (15, [27.93, 21.27, 12.96, 19.22, 12.01, 7.32]),
                (20, [21.93, 17.29, 11.10, 13.87, 9.15, 5.62]),
                (30, [17.28, 14.53, 10.56, 10.13, 7.51, 5.16]),
                (40, [15.26, 13.19, 10.45, 8.59, 6.78, 5.18]),
                (50, [14.10, 12.74, 10.75, 8.18, 6.64, 5.34]),
                (100, [11.55, 10.81, 9.87, 6.03, 5.48, 5.00]),
            ];
            for (n, row) in rows {
                let c = cells.len();
                cells.push(ExperimentConfig { n, p: 7, ..base.clone() });
                push_three(&mut rates, c, row);
            }
        }
        "3" => {
            let rows = [
                (30, 0.1, 12.47, 6.62),
                (30, 0.3, 31.29, 20.30),
                (30, 0.5, 63.64, 49.26),
                (30, 0.7, 88.26, 79.68),
                (50, 0.1, 14.76, 7.97),
                (50, 0.3, 48.65, 34.88),
                (50, 0.5, 86.70, 78.17),
                (50, 0.7, 99.05, 97.50),
            ];
            for (n, delta, r10, r5) in rows {
                let c = cells.len();
                cells.push(ExperimentConfig { n, p: 3, delta, tests: vec![Method::SrStar], ..base.clone() });
                for (level, percent) in [(0.10, r10), (0.05, r5)] {
                    rates.push(RateReference { cell: c, method: Method::SrStar, level, percent, tolerance: 2.0 });
                }
            }
        }
        "4" | "5" => {
            let tests = if table == "4" {
                vec![Method::Lr, Method::Sr, Method::SrStar, Method::Sh, Method::Boot]
            } else {
                vec![Method::Lr, Method::Sr, Method::SrStar]
            };
            cells.push(ExperimentConfig { n: 30, p: 9, alpha: 1.5, tests, ..base.clone() });
            if table == "4" {
                for (m, r10, r5) in [
                    (Method::Lr, 19.36, 11.71),
                    (Method::Sr, 14.79, 7.62),
                    (Method::SrStar, 11.25, 5.66),
                    (Method::Sh, 11.42, 5.64),
                    (Method::Boot, 9.53, 4.71),
                ] {
                    for (level, percent) in [(0.10, r10), (0.05, r5)] {
                        rates.push(RateReference { cell: 0, method: m, level, percent, tolerance: TOL_PLAIN });
                    }
                }
            } else {
                let mom = |method, kind, value, tolerance| MomentReference { cell: 0, method, kind, value, tolerance };
                moments.push(mom(Method::SrStar, MomentKind::Mean, 2.10, 0.05));
                moments.push(mom(Method::SrStar, MomentKind::Variance, 4.32, 0.25));
                moments.push(mom(Method::Sr, MomentKind::Mean, 2.41, 0.05));
            }
        }
        "alpha" => {
            cells.push(ExperimentConfig {
                n: 30,
                p: 4,
                alpha: 1.0,
                hypothesis: HypothesisKind::Alpha,
                ..base.clone()
            });
            for (m, percent) in [(Method::Lr, 19.86), (Method::Sr, 13.77), (Method::SrStar, 9.89)] {
                rates.push(RateReference { cell: 0, method: m, level: 0.10, percent, tolerance: tol_for(m) });
            }
        }
        other => return Err(Error::Input(format!("unknown table '{other}' (expected 1-5 or alpha)"))),
    }
    Ok(TablePreset { name: table.to_string(), cells, rates, moments })
}

/// One comparison of a simulated value with its reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares simulated cells with the preset's references.
pub fn verify(preset: &TablePreset, results: &[CellResult]) -> Vec<Check> {
    let mut out = Vec::new();
    for r in &preset.rates {
        let cell = &results[r.cell];
        let observed = cell.rate(r.method, r.level).map_or(f64::NAN, |x| 100.0 * x.rate);
        out.push(Check {
            label: format!("{} {} @{}%", cell.config.describe(), r.method, 100.0 * r.level),
            expected: r.percent,
            observed,
            tolerance: r.tolerance,
            pass: (observed - r.percent).abs() <= r.tolerance,
        });
    }
    for r in &preset.moments {
        let cell = &results[r.cell];
        let m = cell.moments_of(r.method);
        let (name, observed) = match r.kind {
            MomentKind::Mean => ("mean", m.map_or(f64::NAN, |m| m.mean)),
            MomentKind::Variance => ("variance", m.map_or(f64::NAN, |m| m.variance)),
        };
        out.push(Check {
            label: format!("{} {} {}", cell.config.describe(), r.method, name),
            expected: r.value,
            observed,
            tolerance: r.tolerance,
            pass: (observed - r.value).abs() <= r.tolerance,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Output

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

pub const CSV_HEADER: &str = "n,p,q,alpha,delta,hypothesis,test,level,rate,mc_se,reps,seed";

fn hypothesis_name(h: HypothesisKind) -> &'static str {
    match h {
        HypothesisKind::Beta => "beta",
        HypothesisKind::Alpha => "alpha",
    }
}

/// Renders rejection rates. CSV rates and standard errors are fractions
/// written in shortest round-trip form; the text table shows percentages.
pub fn emit_table(results: &[CellResult], format: TableFormat) -> String {
    let mut s = String::new();
    match format {
        TableFormat::Csv => {
            s.push_str(CSV_HEADER);
            s.push('\n');
            for cell in results {
                let c = &cell.config;
                for r in &cell.rates {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        c.n,
                        c.p,
                        c.q,
                        c.alpha,
                        c.delta,
                        hypothesis_name(c.hypothesis),
                        r.method,
                        r.level,
                        r.rate,
                        r.se,
                        cell.replications,
                        c.seed
                    );
                }
            }
        }
        TableFormat::Text => {
            let _ = writeln!(
                s,
                "{:<34} {:>6} {:>6} {:>8} {:>7} {:>6}",
                "cell", "test", "level", "rate(%)", "se(%)", "reps"
            );
            for cell in results {
                for r in &cell.rates {
                    let _ = writeln!(
                        s,
                        "{:<34} {:>6} {:>6} {:>8.2} {:>7.2} {:>6}",
                        cell.config.describe(),
                        r.method.name(),
                        format!("{}%", 100.0 * r.level),
                        100.0 * r.rate,
                        100.0 * r.se,
                        cell.replications
                    );
                }
                for (m, mo) in &cell.moments {
                    let _ = writeln!(
                        s,
                        "{:<34} {:>6} mean {:.3} var {:.3} skew {:.3} kurt {:.3}",
                        cell.config.describe(),
                        m.name(),
                        mo.mean,
                        mo.variance,
                        mo.skewness,
                        mo.kurtosis
                    );
                }
            }
        }
    }
    s
}

/// A parsed CSV row of [`emit_table`] output.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRate {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    pub delta: f64,
    pub test: String,
    pub level: f64,
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
    pub seed: u64,
}

pub fn parse_table_csv(text: &str) -> Result<Vec<CsvRate>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |e: &dyn std::fmt::Display| Error::Input(format!("bad table row: {e}"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(&e))?;
        let f = |i: usize| rec.get(i).ok_or_else(|| Error::Input("short table row".into()));
        let num = |i: usize| -> Result<f64> { f(i)?.parse::<f64>().map_err(|e| bad(&e)) };
        let int = |i: usize| -> Result<u64> { f(i)?.parse::<u64>().map_err(|e| bad(&e)) };
        out.push(CsvRate {
            n: int(0)? as usize,
            p: int(1)? as usize,
            q: int(2)? as usize,
            alpha: num(3)?,
            delta: num(4)?,
            test: f(6)?.to_string(),
            level: num(7)?,
            rate: num(8)?,
            se: num(9)?,
            reps: int(10)? as usize,
            seed: int(11)?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Config files

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, T::Err> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(T::from_str).collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Input(format!("invalid {what} '{value}'"));
        let v = value.trim();
        match key.trim() {
            "n" => self.n = v.parse().map_err(|_| bad("n"))?,
            "p" => self.p = v.parse().map_err(|_| bad("p"))?,
            "q" => self.q = v.parse().map_err(|_| bad("q"))?,
            "alpha" => self.alpha = v.parse().map_err(|_| bad("alpha"))?,
            "beta_true" => {
                self.beta_true = if v.is_empty() { None } else { Some(parse_list(v).map_err(|_| bad("beta_true"))?) }
            }
            "delta" => self.delta = v.parse().map_err(|_| bad("delta"))?,
            "levels" => self.levels = parse_list(v).map_err(|_| bad("levels"))?,
            "replications" => self.replications = v.parse().map_err(|_| bad("replications"))?,
            "seed" => self.seed = v.parse().map_err(|_| bad("seed"))?,
            "tests" => self.tests = parse_list(v)?,
            "bootstrap_b" => self.bootstrap_b = v.parse().map_err(|_| bad("bootstrap_b"))?,
            "covariates" => {
                self.covariates = match v {
                    "fixed" => CovariatePolicy::Fixed,
                    "redrawn" => CovariatePolicy::Redrawn,
                    _ => return Err(bad("covariates")),
                }
            }
            "hypothesis" => {
                self.hypothesis = match v {
                    "beta" => HypothesisKind::Beta,
                    "alpha" => HypothesisKind::Alpha,
                    _ => return Err(bad("hypothesis")),
                }
            }
            other => return Err(Error::Input(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file over the defaults. `#` starts a
    /// comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_config_str(text)?;
        Ok(cfg)
    }

    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Renders the configuration in the config-file format.
    pub fn to_config_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        if let Some(b) = &self.beta_true {
            let _ = writeln!(s, "beta_true = {}", join(b));
        }
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "levels = {}", join(&self.levels));
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "seed = {}", self.seed);
        let tests: Vec<_> = self.tests.iter().map(|m| m.name().to_ascii_lowercase()).collect();
        let _ = writeln!(s, "tests = {}", tests.join(","));
        let _ = writeln!(s, "bootstrap_b = {}", self.bootstrap_b);
        let cov = match self.covariates {
            CovariatePolicy::Fixed => "fixed",
            CovariatePolicy::Redrawn => "redrawn",
        };
        let _ = writeln!(s, "covariates = {cov}");
        let _ = writeln!(s, "hypothesis = {}", hypothesis_name(self.hypothesis));
        s
    }
}
