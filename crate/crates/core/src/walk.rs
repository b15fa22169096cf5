//! Metropolis walk over a fiber and Monte Carlo exact p-values.
//!
//! At each step a basis move and a sign are drawn uniformly; the candidate
//! table is rejected if it has a negative entry and otherwise accepted with
//! probability `min(1, H(f + m) / H(f))`, where `H ∝ 1 / Π f_k!` is the
//! hypergeometric distribution on the fiber.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::basis::{base_markov_basis, m0_basis, MarkovBasis, Move};
use crate::chisq::chi_square_sf;
use crate::error::{Error, Result};
use crate::fiber::at_least;
use crate::fit::{g2_nested_statistic, g2_statistic, FitConfig, Fitter};
use crate::model::{nested_df_matrices, BaseModel, ModelMatrix, ModelSpec, Stacking};
use crate::scalar::Real;
use crate::table::{SquareTable, StackedTable};

/// Chain length and sampling schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub burn_in: u64,
    /// Steps between recorded tables.
    pub thinning: u64,
    /// Recorded tables, summed over chains.
    pub samples: usize,
    pub seed: u64,
    /// Independent chains; chain `c` uses stream `c` of the seeded generator.
    pub chains: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            burn_in: 50_000,
            thinning: 50,
            samples: 10_000,
            seed: 0,
            chains: 1,
        }
    }
}

impl WalkConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.thinning == 0 || self.samples == 0 || self.chains == 0 {
            return Err(Error::InvalidInput(
                "thinning, samples and chains must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Generator for chain `chain`.
    pub fn rng(&self, chain: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chain as u64);
        rng
    }
}

/// Outcome of a Monte Carlo exact test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_exact: f64,
    pub mc_se: f64,
    pub p_asymptotic: f64,
    pub acceptance_rate: f64,
    pub samples: usize,
    pub seed: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub chains: usize,
    /// Smallest, median and largest finite sampled statistic.
    pub sampled_min: f64,
    pub sampled_median: f64,
    pub sampled_max: f64,
    /// Sampled tables on the boundary of the alternative (infinite G²).
    pub boundary_samples: usize,
    /// Sampled tables whose alternative fit hit the sweep limit.
    pub unconverged_fits: usize,
}

/// Alternative hypothesis of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// Every table is its own fit: a goodness-of-fit test.
    Saturated,
    Model(ModelSpec),
}

/// `log[H(f + m) / H(f)] = Σ_k [ln f_k! - ln (f_k + m_k)!]` over the move's
/// support.
pub fn log_hypergeometric_ratio<T: Real>(f: &[u64], m: &Move) -> Result<T> {
    if f.len() != m.entries().len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: m.entries().len(),
        });
    }
    let support = m.support();
    if support.iter().any(|&(k, v)| (f[k] as i64) + v < 0) {
        return Err(Error::InvalidInput(
            "candidate table has a negative entry".into(),
        ));
    }
    Ok(T::from_f64_lossy(sparse_log_ratio(f, &support, 1)))
}

fn sparse_log_ratio(f: &[u64], support: &[(usize, i64)], sign: i64) -> f64 {
    let mut acc = 0.0;
    for &(k, v) in support {
        let before = f[k];
        let after = (before as i64 + sign * v) as u64;
        acc += match sign * v {
            1 => -((after) as f64).ln(),
            -1 => (before as f64).ln(),
            _ => ln_factorial(before) - ln_factorial(after),
        };
    }
    acc
}

/// Moves in sparse form, ready for sampling.
#[derive(Debug, Clone)]
pub struct SparseMoves {
    supports: Vec<Vec<(usize, i64)>>,
}

impl SparseMoves {
    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }
}

impl From<&MarkovBasis> for SparseMoves {
    fn from(basis: &MarkovBasis) -> Self {
        Self {
            supports: basis.moves().iter().map(Move::support).collect(),
        }
    }
}

/// Current table of a chain plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    table: Vec<u64>,
    /// `-Σ ln f_k!`, the unnormalized log hypergeometric weight.
    log_weight: f64,
    steps: u64,
    accepted: u64,
}

impl ChainState {
    pub fn new(table: &StackedTable) -> Self {
        let counts = table.counts().to_vec();
        let log_weight = -counts.iter().map(|&f| ln_factorial(f)).sum::<f64>();
        Self {
            table: counts,
            log_weight,
            steps: 0,
            accepted: 0,
        }
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }
}

/// One Metropolis step. Returns whether the chain moved.
pub fn mh_step<R: Rng + ?Sized>(state: &mut ChainState, moves: &SparseMoves, rng: &mut R) -> bool {
    state.steps += 1;
    if moves.supports.is_empty() {
        return false;
    }
    let support = &moves.supports[rng.random_range(0..moves.supports.len())];
    let sign = if rng.random::<bool>() { 1 } else { -1 };
    let u: f64 = rng.random();
    if support
        .iter()
        .any(|&(k, v)| (state.table[k] as i64) + sign * v < 0)
    {
        return false;
    }
    let log_ratio = sparse_log_ratio(&state.table, support, sign);
    if log_ratio < 0.0 && u >= log_ratio.exp() {
        return false;
    }
    for &(k, v) in support {
        state.table[k] = (state.table[k] as i64 + sign * v) as u64;
    }
    state.log_weight += log_ratio;
    state.accepted += 1;
    true
}

struct ChainOutput {
    tables: Vec<Vec<u64>>,
    steps: u64,
    accepted: u64,
}

fn run_chain(
    start: &StackedTable,
    moves: &SparseMoves,
    null: &ModelMatrix,
    cfg: &WalkConfig,
    chain: usize,
    samples: usize,
) -> ChainOutput {
    let mut rng = cfg.rng(chain);
    let mut state = ChainState::new(start);
    let initial = if cfg!(debug_assertions) {
        null.count_statistic(start.counts()).ok()
    } else {
        None
    };
    let mut advance = |state: &mut ChainState, n: u64| {
        for _ in 0..n {
            mh_step(state, moves, &mut rng);
            if let Some(b) = &initial {
                if state.steps % 1_000 == 0 {
                    let now = null.count_statistic(&state.table).expect("shape fixed");
                    assert_eq!(&now, b, "chain left its fiber");
                }
            }
        }
    };
    advance(&mut state, cfg.burn_in);
    let mut tables = Vec::with_capacity(samples);
    for _ in 0..samples {
        advance(&mut state, cfg.thinning);
        tables.push(state.table.clone());
    }
    ChainOutput {
        tables,
        steps: state.steps,
        accepted: state.accepted,
    }
}

fn check_shape(table: &StackedTable, spec: &ModelSpec) -> Result<()> {
    if table.size() != spec.size || table.layers() != spec.layers {
        return Err(Error::InvalidInput(format!(
            "table is I={}, H={} but the model is {spec}",
            table.size(),
            table.layers()
        )));
    }
    Ok(())
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// Monte Carlo exact test of `null` against `alt` by a Metropolis walk on
/// the fiber of `table` under `null`, driven by `basis`.
///
/// The null fit depends only on the sufficient statistic, so it is computed
/// once and shared by every sampled table. Boundary tables (infinite G²)
/// count as at least as extreme as the observed table.
pub fn exact_pvalue(
    table: &StackedTable,
    null: &ModelSpec,
    alt: Alternative,
    basis: &MarkovBasis,
    cfg: &WalkConfig,
) -> Result<TestResult> {
    cfg.validate()?;
    check_shape(table, null)?;
    let a0 = null.matrix()?;
    if basis.spec().cell_count() != null.cell_count() {
        return Err(Error::DimensionMismatch {
            expected: null.cell_count(),
            got: basis.spec().cell_count(),
        });
    }
    basis.verify(&a0)?;

    let fit_cfg = FitConfig::<f64>::default();
    let fitter0 = Fitter::new(&a0)?;
    let fit0 = fitter0.fit::<f64>(table.counts(), &fit_cfg)?;

    let fitter1 = match alt {
        Alternative::Saturated => None,
        Alternative::Model(spec1) => {
            check_shape(table, &spec1)?;
            Some(Fitter::new(&spec1.matrix()?)?)
        }
    };
    let df = match alt {
        Alternative::Saturated => null.cell_count() - fitter0.rank(),
        Alternative::Model(spec1) => nested_df_matrices(&a0, &spec1.matrix()?)?,
    };

    // (statistic, converged)
    let evaluate = |counts: &[u64]| -> Result<(f64, bool)> {
        match &fitter1 {
            None => Ok((g2_statistic(counts, &fit0.fitted), true)),
            Some(f1) => {
                let fit1 = f1.fit::<f64>(counts, &fit_cfg)?;
                Ok((
                    g2_nested_statistic(counts, &fit0.fitted, &fit1.fitted),
                    fit1.converged,
                ))
            }
        }
    };
    let (observed, _) = evaluate(table.counts())?;

    let moves = SparseMoves::from(basis);
    let per_chain: Vec<usize> = (0..cfg.chains)
        .map(|c| cfg.samples / cfg.chains + usize::from(c < cfg.samples % cfg.chains))
        .collect();
    let outputs: Vec<ChainOutput> = per_chain
        .par_iter()
        .enumerate()
        .map(|(c, &n)| run_chain(table, &moves, &a0, cfg, c, n))
        .collect();

    let tables: Vec<&Vec<u64>> = outputs.iter().flat_map(|o| &o.tables).collect();
    let values: Vec<(f64, bool)> = tables
        .par_iter()
        .map(|t| evaluate(t))
        .collect::<Result<_>>()?;

    let n = values.len();
    let extreme = values.iter().filter(|(v, _)| at_least(*v, observed)).count();
    let p = extreme as f64 / n as f64;
    let steps: u64 = outputs.iter().map(|o| o.steps).sum();
    let accepted: u64 = outputs.iter().map(|o| o.accepted).sum();

    let mut finite: Vec<f64> = values
        .iter()
        .map(|(v, _)| *v)
        .filter(|v| v.is_finite())
        .collect();
    finite.sort_by(f64::total_cmp);

    Ok(TestResult {
        statistic: observed,
        df,
        p_exact: p,
        mc_se: (p * (1.0 - p) / n as f64).sqrt(),
        p_asymptotic: if df > 0 {
            chi_square_sf(observed.max(0.0), df as u32)
        } else {
            f64::NAN
        },
        acceptance_rate: if steps == 0 {
            0.0
        } else {
            accepted as f64 / steps as f64
        },
        samples: n,
        seed: cfg.seed,
        burn_in: cfg.burn_in,
        thinning: cfg.thinning,
        chains: cfg.chains,
        sampled_min: finite.first().copied().unwrap_or(f64::NAN),
        sampled_median: median(&finite),
        sampled_max: finite.last().copied().unwrap_or(f64::NAN),
        boundary_samples: n - finite.len(),
        unconverged_fits: values.iter().filter(|(_, ok)| !ok).count(),
    })
}

/// Goodness of fit of a single table under a base model.
pub fn gof_test(table: &SquareTable, base: BaseModel, cfg: &WalkConfig) -> Result<TestResult> {
    let spec = ModelSpec::single(base, table.size())?;
    let basis = base_markov_basis(base, table.size())?;
    exact_pvalue(
        &table.clone().into_stacked(),
        &spec,
        Alternative::Saturated,
        &basis,
        cfg,
    )
}

/// Test of a common base model across layers (M0) against separate
/// per-layer models (M1).
pub fn common_model_test(
    table: &StackedTable,
    base: BaseModel,
    cfg: &WalkConfig,
) -> Result<TestResult> {
    let null = ModelSpec::new(base, Stacking::M0, table.size(), table.layers())?;
    let alt = ModelSpec::new(base, Stacking::M1, table.size(), table.layers())?;
    let basis = m0_basis(&base_markov_basis(base, table.size())?, table.layers())?;
    exact_pvalue(table, &null, Alternative::Model(alt), &basis, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::qs_markov_basis;

    #[test]
    fn zero_move_has_zero_log_ratio() {
        let m = Move::new(2, 1, vec![0; 4]).unwrap();
        let r: f64 = log_hypergeometric_ratio(&[1, 2, 3, 4], &m).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn log_ratio_examples() {
        let m = Move::new(2, 1, vec![1, 1, -1, -1]).unwrap();
        let r: f64 = log_hypergeometric_ratio(&[2, 0, 3, 1], &m).unwrap();
        // (2!·0!·3!·1!) / (3!·1!·2!·0!) = 1
        assert!(r.abs() < 1e-12);
        let m = Move::new(2, 1, vec![-1, 1, 0, 0]).unwrap();
        let r: f64 = log_hypergeometric_ratio(&[5, 0, 0, 0], &m).unwrap();
        assert!((r.exp() - 5.0).abs() < 1e-12);
        let big = Move::new(2, 1, vec![-2, 2, 0, 0]).unwrap();
        let r: f64 = log_hypergeometric_ratio(&[5, 0, 0, 0], &big).unwrap();
        // 5!·0! / (3!·2!) = 10
        assert!((r.exp() - 10.0).abs() < 1e-10);
        assert!(log_hypergeometric_ratio::<f64>(&[0, 0, 0, 0], &m).is_err());
    }

    #[test]
    fn all_zero_table_never_moves() {
        let basis = qs_markov_basis(3).unwrap();
        let moves = SparseMoves::from(&basis);
        let t = StackedTable::new(3, 1, vec![0; 9]).unwrap();
        let mut state = ChainState::new(&t);
        let mut rng = WalkConfig::default().rng(0);
        for _ in 0..1_000 {
            assert!(!mh_step(&mut state, &moves, &mut rng));
        }
        assert_eq!(state.steps(), 1_000);
        assert_eq!(state.table(), t.counts());
    }

    #[test]
    fn equal_weight_candidates_always_accepted() {
        // both members of this fiber have weight 1 (all entries 0 or 1)
        let basis = qs_markov_basis(3).unwrap();
        let moves = SparseMoves::from(&basis);
        let t = StackedTable::new(3, 1, vec![0, 1, 0, 0, 0, 1, 1, 0, 0]).unwrap();
        let mut state = ChainState::new(&t);
        let mut rng = WalkConfig::default().rng(7);
        let mut moved = 0;
        for _ in 0..2_000 {
            let before = state.table().to_vec();
            if mh_step(&mut state, &moves, &mut rng) {
                moved += 1;
                assert_ne!(before, state.table());
            }
        }
        // exactly one of the two signs is feasible at each state
        assert!(moved > 900 && moved < 1_100, "{moved}");
    }

    #[test]
    fn log_weight_tracks_table() {
        let basis = qs_markov_basis(4).unwrap();
        let moves = SparseMoves::from(&basis);
        let t = StackedTable::new(4, 1, vec![3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9, 3]).unwrap();
        let mut state = ChainState::new(&t);
        let mut rng = WalkConfig::default().rng(1);
        for _ in 0..5_000 {
            mh_step(&mut state, &moves, &mut rng);
        }
        let fresh = ChainState::new(&StackedTable::new(4, 1, state.table().to_vec()).unwrap());
        assert!((fresh.log_weight() - state.log_weight()).abs() < 1e-8);
    }

    #[test]
    fn symmetric_table_has_p_one() {
        let t = SquareTable::from_rows(&[vec![3, 2, 1], vec![2, 4, 5], vec![1, 5, 2]]).unwrap();
        let cfg = WalkConfig {
            burn_in: 1_000,
            thinning: 5,
            samples: 500,
            seed: 3,
            chains: 1,
        };
        let r = gof_test(&t, BaseModel::QuasiSymmetry, &cfg).unwrap();
        assert!(r.statistic.abs() < 1e-9);
        assert_eq!(r.p_exact, 1.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let t = SquareTable::from_rows(&[
            vec![4, 2, 1, 0],
            vec![1, 3, 2, 2],
            vec![3, 0, 5, 1],
            vec![0, 2, 1, 6],
        ])
        .unwrap();
        let cfg = WalkConfig {
            burn_in: 500,
            thinning: 3,
            samples: 300,
            seed: 11,
            chains: 3,
        };
        let a = gof_test(&t, BaseModel::QuasiSymmetry, &cfg).unwrap();
        let b = gof_test(&t, BaseModel::QuasiSymmetry, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples, 300);
    }

    #[test]
    fn refuses_mismatched_basis() {
        let t = StackedTable::new(3, 1, vec![1; 9]).unwrap();
        let spec = ModelSpec::single(BaseModel::Independence, 3).unwrap();
        let qs4 = qs_markov_basis(4).unwrap();
        assert!(exact_pvalue(&t, &spec, Alternative::Saturated, &qs4, &WalkConfig::default()).is_err());
    }

    #[test]
    fn refuses_move_outside_kernel() {
        let t = StackedTable::new(3, 1, vec![1; 9]).unwrap();
        let basis = crate::basis::independence_markov_basis(3).unwrap();
        let qs = ModelSpec::single(BaseModel::QuasiSymmetry, 3).unwrap();
        let err = exact_pvalue(&t, &qs, Alternative::Saturated, &basis, &WalkConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::BasisMismatch { .. }));
    }
}
