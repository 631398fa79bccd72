//! Random-intercept linear mixed model fitted by REML.
//!
//! Model: y = Xβ + Zb + ε with b ~ N(0, σ_b² I) per group and
//! ε ~ N(0, σ_e² I). With λ = σ_b²/σ_e² each group's covariance is
//! σ_e²(I + λ11ᵀ), whose inverse and determinant are closed-form, so the
//! restricted likelihood is profiled over λ alone:
//!
//!   crit(λ) = (N − p)·ln σ̂²(λ) + Σ_g ln(1 + λ n_g) + ln det(XᵀV⁻¹X)
//!
//! where σ̂²(λ) is the GLS residual quadratic form over N − p.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::session::{Group, MetricsTable, Sex};
use crate::task::TaskKind;

use super::AnalyticsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedEffect {
    Intercept,
    /// 1 for novices, 0 for experts.
    Expertise,
    /// Years.
    Age,
    /// 1 for male, 0 for female.
    Sex,
    RunIndex,
}

impl FixedEffect {
    pub const ALL: [FixedEffect; 5] =
        [FixedEffect::Intercept, FixedEffect::Expertise, FixedEffect::Age, FixedEffect::Sex, FixedEffect::RunIndex];

    pub fn as_str(self) -> &'static str {
        match self {
            FixedEffect::Intercept => "intercept",
            FixedEffect::Expertise => "expertise",
            FixedEffect::Age => "age",
            FixedEffect::Sex => "sex",
            FixedEffect::RunIndex => "run_index",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmmSpec {
    pub module: TaskKind,
    pub response: String,
    pub fixed: Vec<FixedEffect>,
}

impl LmmSpec {
    /// Intercept, expertise, age, sex and run, grouped by participant.
    pub fn full(module: TaskKind, response: &str) -> Self {
        Self { module, response: response.to_string(), fixed: FixedEffect::ALL.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmmFit {
    pub terms: Vec<FixedEffect>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub p_value: Vec<f64>,
    pub sigma_b2: f64,
    pub sigma_e2: f64,
    pub lambda: f64,
    pub reml_criterion: f64,
    pub converged: bool,
    pub n_obs: usize,
    pub n_groups: usize,
}

impl LmmFit {
    pub fn coef(&self, term: FixedEffect) -> Option<(f64, f64, f64)> {
        let i = self.terms.iter().position(|&t| t == term)?;
        Some((self.beta[i], self.se[i], self.p_value[i]))
    }
}

/// Per-group sufficient statistics for the profiled criterion.
#[derive(Clone, Debug)]
struct GroupStats {
    n: f64,
    xtx: DMatrix<f64>,
    xt1: DVector<f64>,
    xty: DVector<f64>,
    sum_y: f64,
    yty: f64,
}

/// Design prepared for repeated criterion evaluation.
#[derive(Clone, Debug)]
pub struct LmmData {
    p: usize,
    n_obs: usize,
    groups: Vec<GroupStats>,
}

struct GlsSolution {
    beta: DVector<f64>,
    xtvx_inv: DMatrix<f64>,
    sigma2: f64,
    criterion: f64,
}

/// Upper end of the variance-ratio search.
const LAMBDA_MAX: f64 = 1e4;
const GOLDEN_TOL: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 400;
const GRID_POINTS: usize = 400;

impl LmmData {
    /// `x` is row-major with `p` columns; `groups[i]` labels row `i`.
    pub fn new(y: &[f64], x: &[f64], p: usize, groups: &[usize]) -> Result<Self, AnalyticsError> {
        let n = y.len();
        if p == 0 || x.len() != n * p || groups.len() != n {
            return Err(AnalyticsError::InsufficientData("design dimensions disagree".into()));
        }
        if n <= p {
            return Err(AnalyticsError::InsufficientData(format!("{n} observations for {p} fixed effects")));
        }
        if y.iter().chain(x).any(|v| !v.is_finite()) {
            return Err(AnalyticsError::NonFinite);
        }
        let mut by_group: BTreeMap<usize, GroupStats> = BTreeMap::new();
        for i in 0..n {
            let row = DVector::from_row_slice(&x[i * p..(i + 1) * p]);
            let g = by_group.entry(groups[i]).or_insert_with(|| GroupStats {
                n: 0.0,
                xtx: DMatrix::zeros(p, p),
                xt1: DVector::zeros(p),
                xty: DVector::zeros(p),
                sum_y: 0.0,
                yty: 0.0,
            });
            g.n += 1.0;
            g.xtx += &row * row.transpose();
            g.xt1 += &row;
            g.xty += &row * y[i];
            g.sum_y += y[i];
            g.yty += y[i] * y[i];
        }
        let data = Self { p, n_obs: n, groups: by_group.into_values().collect() };

        // Full column rank of X itself.
        let xtx = data.groups.iter().fold(DMatrix::zeros(p, p), |acc, g| acc + &g.xtx);
        let scale: Vec<f64> = (0..p).map(|j| xtx[(j, j)].sqrt()).collect();
        if scale.iter().any(|&s| s == 0.0) {
            return Err(AnalyticsError::SingularDesign);
        }
        let norm = DMatrix::from_fn(p, p, |i, j| xtx[(i, j)] / (scale[i] * scale[j]));
        let sv = norm.singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if lo <= 1e-12 * hi {
            return Err(AnalyticsError::SingularDesign);
        }
        Ok(data)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    fn solve(&self, lambda: f64) -> Option<GlsSolution> {
        let p = self.p;
        let mut xtvx = DMatrix::<f64>::zeros(p, p);
        let mut xtvy = DVector::<f64>::zeros(p);
        let mut ytvy = 0.0;
        let mut logdet_v = 0.0;
        for g in &self.groups {
            let c = lambda / (1.0 + lambda * g.n);
            xtvx += &g.xtx - (&g.xt1 * g.xt1.transpose()) * c;
            xtvy += &g.xty - &g.xt1 * (c * g.sum_y);
            ytvy += g.yty - c * g.sum_y * g.sum_y;
            logdet_v += (lambda * g.n).ln_1p();
        }
        let chol = xtvx.clone().cholesky()?;
        let beta = chol.solve(&xtvy);
        let rss = ytvy - beta.dot(&xtvy);
        let dof = (self.n_obs - p) as f64;
        let sigma2 = rss.max(0.0) / dof;
        if sigma2 <= 0.0 || !sigma2.is_finite() {
            return None;
        }
        let logdet_xtvx = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let criterion = dof * sigma2.ln() + logdet_v + logdet_xtvx;
        Some(GlsSolution { beta, xtvx_inv: chol.inverse(), sigma2, criterion })
    }

    /// Profiled REML criterion (−2 × restricted log-likelihood up to a
    /// constant). Infinite where undefined.
    pub fn criterion(&self, lambda: f64) -> f64 {
        if !(lambda >= 0.0) {
            return f64::INFINITY;
        }
        self.solve(lambda).map_or(f64::INFINITY, |s| s.criterion)
    }

    /// Minimizes the criterion over λ ∈ [0, 1e4]: log-spaced scan, then
    /// golden-section refinement inside the best bracket.
    pub fn optimize_lambda(&self) -> Result<(f64, f64), AnalyticsError> {
        let mut grid = Vec::with_capacity(GRID_POINTS + 1);
        grid.push(0.0);
        let (lo, hi) = (1e-6f64.ln(), LAMBDA_MAX.ln());
        for i in 0..GRID_POINTS {
            grid.push((lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).exp());
        }
        let vals: Vec<f64> = grid.iter().map(|&l| self.criterion(l)).collect();
        let best = (0..grid.len())
            .filter(|&i| vals[i].is_finite())
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .ok_or_else(|| AnalyticsError::NonConvergence("criterion undefined on the whole grid".into()))?;
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(grid.len() - 1)];

        let (lam, f) = golden_section(|l| self.criterion(l), a, b)?;
        Ok(if f <= vals[best] { (lam, f) } else { (grid[best], vals[best]) })
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Result<(f64, f64), AnalyticsError> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iter = 0;
    while (b - a) > GOLDEN_TOL {
        iter += 1;
        if iter > GOLDEN_MAX_ITER {
            return Err(AnalyticsError::NonConvergence(format!("golden section stalled on [{a}, {b}]")));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    let best = candidates.into_iter().filter(|(_, v)| v.is_finite()).min_by(|x, y| x.1.total_cmp(&y.1));
    best.ok_or_else(|| AnalyticsError::NonConvergence("criterion not finite in bracket".into()))
}

/// Fits the model to raw arrays. `terms` names the columns of `x`.
pub fn fit_random_intercept(
    y: &[f64],
    x: &[f64],
    terms: &[FixedEffect],
    groups: &[usize],
) -> Result<LmmFit, AnalyticsError> {
    let data = LmmData::new(y, x, terms.len(), groups)?;
    let (lambda, criterion) = data.optimize_lambda()?;
    let sol = data
        .solve(lambda)
        .ok_or_else(|| AnalyticsError::NonConvergence(format!("GLS failed at lambda {lambda}")))?;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let se: Vec<f64> = (0..terms.len()).map(|j| (sol.sigma2 * sol.xtvx_inv[(j, j)]).sqrt()).collect();
    let p_value = sol
        .beta
        .iter()
        .zip(&se)
        .map(|(b, s)| (2.0 * normal.sf((b / s).abs())).clamp(0.0, 1.0))
        .collect();
    Ok(LmmFit {
        terms: terms.to_vec(),
        beta: sol.beta.iter().copied().collect(),
        se,
        p_value,
        sigma_b2: lambda * sol.sigma2,
        sigma_e2: sol.sigma2,
        lambda,
        reml_criterion: criterion,
        converged: true,
        n_obs: data.n_obs(),
        n_groups: data.n_groups(),
    })
}

/// Covariate value of one term for a row.
fn covariate(term: FixedEffect, group: Group, age: f64, sex: Sex, run: u32) -> f64 {
    match term {
        FixedEffect::Intercept => 1.0,
        FixedEffect::Expertise => f64::from(u8::from(group == Group::Novice)),
        FixedEffect::Age => age,
        FixedEffect::Sex => f64::from(u8::from(sex == Sex::Male)),
        FixedEffect::RunIndex => f64::from(run),
    }
}

/// Fits `spec` to the rows of `table` for its module and response metric.
pub fn fit_lmm(spec: &LmmSpec, table: &MetricsTable) -> Result<LmmFit, AnalyticsError> {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut y, mut x, mut groups) = (Vec::new(), Vec::new(), Vec::new());
    for r in table.select(spec.module, &spec.response) {
        let next = ids.len();
        groups.push(*ids.entry(r.participant_id.as_str()).or_insert(next));
        y.push(r.value);
        x.extend(spec.fixed.iter().map(|&t| covariate(t, r.group, r.age, r.sex, r.run_index)));
    }
    if y.is_empty() {
        return Err(AnalyticsError::InsufficientData(format!("no rows for {} / {}", spec.module, spec.response)));
    }
    fit_random_intercept(&y, &x, &spec.fixed, &groups)
}
