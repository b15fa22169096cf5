//! Brute-force fibers: exhaustive enumeration of all tables sharing a
//! sufficient statistic, Markov-basis connectivity, and exact p-values.

use std::collections::{HashMap, VecDeque};

use statrs::function::factorial::ln_factorial;

use crate::basis::MarkovBasis;
use crate::error::{Error, Result};
use crate::model::ModelMatrix;
use crate::scalar::Real;
use crate::table::StackedTable;

/// Default node budget for [`enumerate_fiber`].
pub const DEFAULT_NODE_CAP: u64 = 1_000_000;

/// Statistics within this relative distance of the observed value count as
/// ties.
pub const STATISTIC_TIE_TOLERANCE: f64 = 1e-9;

/// Every nonnegative table with the same sufficient statistic as the
/// observed one, with normalized hypergeometric weights.
#[derive(Debug, Clone)]
pub struct Fiber<T> {
    size: usize,
    layers: usize,
    statistic: Vec<i64>,
    members: Vec<Vec<u64>>,
    weights: Vec<T>,
    observed: usize,
    nodes: u64,
}

impl<T: Real> Fiber<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Shared value of `Aᵗ f`.
    pub fn statistic(&self) -> &[i64] {
        &self.statistic
    }

    pub fn members(&self) -> &[Vec<u64>] {
        &self.members
    }

    pub fn member(&self, i: usize) -> Result<StackedTable> {
        StackedTable::new(self.size, self.layers, self.members[i].clone())
    }

    /// Hypergeometric weights `∝ 1 / Π f_k!`, summing to one.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Index of the observed table among the members.
    pub fn observed_index(&self) -> usize {
        self.observed
    }

    /// Search nodes visited during enumeration.
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn index_of(&self, counts: &[u64]) -> Option<usize> {
        self.members.iter().position(|m| m.as_slice() == counts)
    }
}

struct Search<'a> {
    cell_columns: &'a [Vec<usize>],
    closing: &'a [Vec<usize>],
    remaining: Vec<i64>,
    current: Vec<u64>,
    out: Vec<Vec<u64>>,
    nodes: u64,
    cap: u64,
}

impl Search<'_> {
    fn run(&mut self, k: usize) -> Result<()> {
        if k == self.current.len() {
            if self.remaining.iter().all(|&r| r == 0) {
                self.out.push(self.current.clone());
            }
            return Ok(());
        }
        let upper = self.cell_columns[k]
            .iter()
            .map(|&c| self.remaining[c])
            .min()
            .unwrap_or(0);
        for v in 0..=upper {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::CapExceeded { cap: self.cap });
            }
            for &c in &self.cell_columns[k] {
                self.remaining[c] -= v;
            }
            self.current[k] = v as u64;
            if self.closing[k].iter().all(|&c| self.remaining[c] == 0) {
                self.run(k + 1)?;
            }
            for &c in &self.cell_columns[k] {
                self.remaining[c] += v;
            }
        }
        self.current[k] = 0;
        Ok(())
    }
}

/// Enumerates the fiber of `table` under the 0/1 model matrix `a` by
/// depth-first search over cells in global order.
///
/// A branch is cut as soon as a column statistic would go negative, or a
/// column whose last cell has just been assigned is left short.
pub fn enumerate_fiber<T: Real>(a: &ModelMatrix, table: &StackedTable, cap: u64) -> Result<Fiber<T>> {
    let n = table.cell_count();
    if a.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: n,
        });
    }
    if a.cols() > 0 && !a.is_zero_one() {
        return Err(Error::Unsupported("fiber enumeration needs a 0/1 model matrix".into()));
    }
    let cell_columns: Vec<Vec<usize>> = (0..n)
        .map(|k| (0..a.cols()).filter(|&c| a.get(k, c) != 0).collect())
        .collect();
    if let Some(k) = cell_columns.iter().position(Vec::is_empty) {
        return Err(Error::InvalidInput(format!(
            "cell {k} is not covered by any column; the fiber is infinite"
        )));
    }
    let mut closing = vec![Vec::new(); n];
    for c in 0..a.cols() {
        if let Some(last) = (0..n).rev().find(|&k| a.get(k, c) != 0) {
            closing[last].push(c);
        }
    }
    let statistic = a.count_statistic(table.counts())?;

    let mut search = Search {
        cell_columns: &cell_columns,
        closing: &closing,
        remaining: statistic.clone(),
        current: vec![0; n],
        out: Vec::new(),
        nodes: 0,
        cap,
    };
    search.run(0)?;
    let members = search.out;
    let nodes = search.nodes;

    let log_w: Vec<f64> = members
        .iter()
        .map(|m| -m.iter().map(|&f| ln_factorial(f)).sum::<f64>())
        .collect();
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let norm: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| T::from_f64_lossy(w / norm)).collect();

    let observed = members
        .iter()
        .position(|m| m.as_slice() == table.counts())
        .ok_or_else(|| Error::InvalidInput("observed table missing from its fiber".into()))?;

    Ok(Fiber {
        size: table.size(),
        layers: table.layers(),
        statistic,
        members,
        weights,
        observed,
        nodes,
    })
}

/// Whether the moves of `basis` (both signs) connect every member of the
/// fiber through nonnegative tables.
pub fn check_connectivity<T: Real>(fiber: &Fiber<T>, basis: &MarkovBasis) -> bool {
    if fiber.len() <= 1 {
        return true;
    }
    let index: HashMap<&[u64], usize> = fiber
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_slice(), i))
        .collect();
    let supports: Vec<Vec<(usize, i64)>> = basis.moves().iter().map(|m| m.support()).collect();

    let mut seen = vec![false; fiber.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    let mut next = Vec::new();
    while let Some(i) = queue.pop_front() {
        let here = &fiber.members[i];
        for support in &supports {
            for sign in [1, -1] {
                next.clear();
                next.extend_from_slice(here);
                let ok = support.iter().all(|&(k, v)| {
                    let x = next[k] as i64 + sign * v;
                    next[k] = x.max(0) as u64;
                    x >= 0
                });
                if !ok {
                    continue;
                }
                if let Some(&j) = index.get(next.as_slice()) {
                    if !seen[j] {
                        seen[j] = true;
                        reached += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    reached == fiber.len()
}

/// Exact p-value: total weight of members whose statistic is at least the
/// observed one.
pub fn exact_pvalue_enumeration<T, F>(fiber: &Fiber<T>, statistic: F) -> T
where
    T: Real,
    F: Fn(&[u64]) -> T,
{
    let values: Vec<T> = fiber.members.iter().map(|m| statistic(m)).collect();
    let observed = values[fiber.observed];
    let mut p = T::zero();
    for (v, w) in values.iter().zip(&fiber.weights) {
        if at_least(*v, observed) {
            p += *w;
        }
    }
    p.min(T::one())
}

/// `value >= observed`, with ties within [`STATISTIC_TIE_TOLERANCE`].
pub fn at_least<T: Real>(value: T, observed: T) -> bool {
    if observed.is_infinite() {
        return value.is_infinite();
    }
    let tol = T::from_f64_lossy(STATISTIC_TIE_TOLERANCE) * observed.abs().max(T::one());
    value >= observed - tol
}
