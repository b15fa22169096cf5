//! Maximum likelihood fits of log-linear models by iterative proportional
//! scaling, and likelihood-ratio (G²) statistics.
//!
//! The fitter cycles through the 0/1 columns of the model matrix and
//! rescales the fitted counts on each column's support so that the fitted
//! sufficient statistic matches the observed one. Columns with a zero
//! observed statistic force their whole support to zero (extended MLE).

use serde::Serialize;

use crate::chisq::chi_square_sf;
use crate::error::{Error, Result};
use crate::model::ModelMatrix;
use crate::scalar::Real;

/// Stopping rule for the proportional-scaling sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T> {
    /// Converged when every column's relative discrepancy is below this.
    pub rel_tol: T,
    /// ... or when every absolute discrepancy is below this.
    pub abs_tol: T,
    pub max_sweeps: usize,
}

impl<T: Real> Default for FitConfig<T> {
    fn default() -> Self {
        // f32 cannot resolve 1e-10; stay a few ulps above machine precision.
        let floor = T::epsilon() * T::from_f64_lossy(64.0);
        Self {
            rel_tol: T::from_f64_lossy(1e-10).max(floor),
            abs_tol: T::from_f64_lossy(1e-12).max(floor),
            max_sweeps: 50_000,
        }
    }
}

/// Fitted cell means and convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub fitted: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute gap between fitted and observed column statistics.
    pub max_discrepancy: T,
    /// Cells pinned to zero by a zero column statistic.
    pub forced_zero: Vec<bool>,
    /// Exact rank of the model matrix.
    pub model_rank: usize,
}

/// A likelihood-ratio statistic with its degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Report<T> {
    /// `+inf` on the boundary (positive count with zero fitted mean).
    pub statistic: T,
    pub df: usize,
    pub p_asymptotic: Option<T>,
    pub boundary: bool,
}

impl<T: Real> G2Report<T> {
    fn new(statistic: T, df: usize) -> Self {
        let boundary = statistic.is_infinite();
        let p_asymptotic = if boundary {
            Some(T::zero())
        } else if df > 0 {
            Some(chi_square_sf(statistic.max(T::zero()), df as u32))
        } else {
            None
        };
        Self {
            statistic,
            df,
            p_asymptotic,
            boundary,
        }
    }
}

/// Reusable fitter for one model matrix; caches column supports and rank.
#[derive(Debug, Clone)]
pub struct Fitter {
    cells: usize,
    supports: Vec<Vec<usize>>,
    rank: usize,
}

impl Fitter {
    pub fn new(a: &ModelMatrix) -> Result<Self> {
        if !a.is_zero_one() {
            return Err(Error::Unsupported(
                "proportional scaling needs a 0/1 model matrix".into(),
            ));
        }
        Ok(Self {
            cells: a.rows(),
            supports: (0..a.cols()).map(|c| a.support(c)).collect(),
            rank: a.rank(),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Observed column statistics.
    fn targets(&self, observed: &[u64]) -> Vec<u64> {
        self.supports
            .iter()
            .map(|s| s.iter().map(|&k| observed[k]).sum())
            .collect()
    }

    pub fn fit<T: Real>(&self, observed: &[u64], cfg: &FitConfig<T>) -> Result<FitResult<T>> {
        if observed.len() != self.cells {
            return Err(Error::DimensionMismatch {
                expected: self.cells,
                got: observed.len(),
            });
        }
        let targets = self.targets(observed);

        let mut forced_zero = vec![false; self.cells];
        for (s, &b) in self.supports.iter().zip(&targets) {
            if b == 0 {
                for &k in s {
                    forced_zero[k] = true;
                }
            }
        }
        let free = forced_zero.iter().filter(|z| !**z).count();
        let total: u64 = observed.iter().sum();
        let start = if free == 0 {
            T::zero()
        } else {
            T::from_count(total) / T::from_count(free as u64)
        };
        let mut fitted: Vec<T> = forced_zero
            .iter()
            .map(|&z| if z { T::zero() } else { start })
            .collect();
        let targets_t: Vec<T> = targets.iter().map(|&b| T::from_count(b)).collect();

        let active: Vec<usize> = (0..self.supports.len())
            .filter(|&c| targets[c] > 0)
            .collect();

        let mut iterations = 0;
        let mut converged = false;
        let mut max_abs = T::zero();
        while iterations < cfg.max_sweeps {
            let (abs_gap, rel_gap) = self.discrepancy(&fitted, &targets_t, &active);
            max_abs = abs_gap;
            if rel_gap < cfg.rel_tol || abs_gap < cfg.abs_tol {
                converged = true;
                break;
            }
            iterations += 1;
            for &c in &active {
                let support = &self.supports[c];
                let current: T = support.iter().map(|&k| fitted[k]).sum();
                if current > T::zero() {
                    let factor = targets_t[c] / current;
                    for &k in support {
                        fitted[k] *= factor;
                    }
                }
            }
        }
        if !converged {
            max_abs = self.discrepancy(&fitted, &targets_t, &active).0;
        }

        Ok(FitResult {
            fitted,
            converged,
            iterations,
            max_discrepancy: max_abs,
            forced_zero,
            model_rank: self.rank,
        })
    }

    fn discrepancy<T: Real>(&self, fitted: &[T], targets: &[T], active: &[usize]) -> (T, T) {
        let mut max_abs = T::zero();
        let mut max_rel = T::zero();
        for &c in active {
            let current: T = self.supports[c].iter().map(|&k| fitted[k]).sum();
            let gap = (current - targets[c]).abs();
            max_abs = max_abs.max(gap);
            max_rel = max_rel.max(gap / targets[c]);
        }
        (max_abs, max_rel)
    }
}

/// Fits the model with matrix `a` to `observed` with default tolerances.
pub fn fit<T: Real>(a: &ModelMatrix, observed: &[u64]) -> Result<FitResult<T>> {
    Fitter::new(a)?.fit(observed, &FitConfig::default())
}

/// `2 Σ f log(f / f̂)` over cells with `f > 0`; `+inf` if such a cell has
/// `f̂ = 0`.
pub fn g2_statistic<T: Real>(observed: &[u64], fitted: &[T]) -> T {
    let mut g2 = T::zero();
    for (&f, &m) in observed.iter().zip(fitted) {
        if f == 0 {
            continue;
        }
        if m <= T::zero() {
            return T::infinity();
        }
        let f = T::from_count(f);
        g2 += f * (f / m).ln();
    }
    g2 + g2
}

/// `2 Σ f log(f̂₁ / f̂₀)`, the nonnegative orientation of the nested
/// likelihood-ratio statistic.
pub fn g2_nested_statistic<T: Real>(observed: &[u64], fitted0: &[T], fitted1: &[T]) -> T {
    let mut g2 = T::zero();
    for ((&f, &m0), &m1) in observed.iter().zip(fitted0).zip(fitted1) {
        if f == 0 {
            continue;
        }
        if m0 <= T::zero() || m1 <= T::zero() {
            return T::infinity();
        }
        g2 += T::from_count(f) * (m1 / m0).ln();
    }
    g2 + g2
}

/// Goodness of fit against the saturated model; `df = cells - rank(A)`.
pub fn g2_gof<T: Real>(observed: &[u64], fit: &FitResult<T>) -> Result<G2Report<T>> {
    if observed.len() != fit.fitted.len() {
        return Err(Error::DimensionMismatch {
            expected: fit.fitted.len(),
            got: observed.len(),
        });
    }
    let df = fit.fitted.len() - fit.model_rank;
    Ok(G2Report::new(g2_statistic(observed, &fit.fitted), df))
}

/// Nested comparison of model 0 inside model 1; `df = rank(A1) - rank(A0)`.
pub fn g2_nested<T: Real>(
    observed: &[u64],
    fit0: &FitResult<T>,
    fit1: &FitResult<T>,
) -> Result<G2Report<T>> {
    if observed.len() != fit0.fitted.len() || observed.len() != fit1.fitted.len() {
        return Err(Error::DimensionMismatch {
            expected: observed.len(),
            got: fit0.fitted.len().min(fit1.fitted.len()),
        });
    }
    let df = fit1
        .model_rank
        .checked_sub(fit0.model_rank)
        .ok_or_else(|| Error::NotNested("null model has larger rank".into()))?;
    Ok(G2Report::new(
        g2_nested_statistic(observed, &fit0.fitted, &fit1.fitted),
        df,
    ))
}
