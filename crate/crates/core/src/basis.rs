//! Moves, loops and Markov bases built by direct combinatorial construction.
//!
//! Every basis is verified against its model matrix when it is built: a
//! move that leaves the sufficient statistic unchanged is the only kind a
//! [`MarkovBasis`] will hold.

use std::collections::HashSet;
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::model::{independence_matrix, BaseModel, ModelMatrix, ModelSpec, Stacking};
use crate::table::MAX_TABLE_SIZE;

/// Largest table side for which every loop of every degree is enumerated.
pub const MAX_LOOP_ENUMERATION_SIZE: usize = 7;

/// An integer table in the kernel of a model's sufficient statistic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Move {
    size: usize,
    layers: usize,
    entries: Vec<i64>,
}

impl Move {
    pub fn new(size: usize, layers: usize, entries: Vec<i64>) -> Result<Self> {
        let expected = size * size * layers;
        if entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: entries.len(),
            });
        }
        Ok(Self {
            size,
            layers,
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// Nonzero entries as `(cell, value)` pairs.
    pub fn support(&self) -> Vec<(usize, i64)> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(k, &v)| (k, v))
            .collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            size: self.size,
            layers: self.layers,
            entries: self.entries.iter().map(|v| -v).collect(),
        }
    }

    /// Entries with the sign chosen so the first nonzero entry is positive.
    pub fn sign_normalized(&self) -> Vec<i64> {
        match self.entries.iter().find(|&&v| v != 0) {
            Some(&v) if v < 0 => self.entries.iter().map(|v| -v).collect(),
            _ => self.entries.clone(),
        }
    }

    /// Entries of layer `h` (0-based).
    pub fn layer(&self, h: usize) -> &[i64] {
        let per = self.size * self.size;
        &self.entries[h * per..(h + 1) * per]
    }

    /// Layers (0-based) carrying a nonzero entry.
    pub fn active_layers(&self) -> Vec<usize> {
        (0..self.layers)
            .filter(|&h| self.layer(h).iter().any(|&v| v != 0))
            .collect()
    }

    pub fn degree(&self) -> i64 {
        self.entries.iter().filter(|&&v| v > 0).sum()
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields: Vec<String> = self.entries.iter().map(i64::to_string).collect();
        f.write_str(&fields.join(" "))
    }
}

/// True iff every column of `a` has zero inner product with `m`.
pub fn verify_move(a: &ModelMatrix, m: &Move) -> Result<bool> {
    Ok(a.statistic(m.entries())?.iter().all(|&v| v == 0))
}

/// A loop of degree `r`: `+1` at `(i_s, j_s)`, `-1` at `(i_s, j_{s+1})`.
///
/// Indices are 1-based; rows are pairwise distinct, as are columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Loop {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Loop {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.len() != cols.len() || rows.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a loop needs equal row and column lists of length >= 2, got {} and {}",
                rows.len(),
                cols.len()
            )));
        }
        if !rows.iter().all_unique() || !cols.iter().all_unique() {
            return Err(Error::InvalidInput(
                "loop row and column indices must be distinct".into(),
            ));
        }
        if rows.iter().chain(&cols).any(|&v| v == 0) {
            return Err(Error::IndexOutOfRange("loop indices are 1-based".into()));
        }
        Ok(Self { rows, cols })
    }

    pub fn degree(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Signed cells `(i, j, ±1)`, 1-based.
    pub fn cells(&self) -> Vec<(usize, usize, i64)> {
        let r = self.degree();
        let mut out = Vec::with_capacity(2 * r);
        for s in 0..r {
            out.push((self.rows[s], self.cols[s], 1));
            out.push((self.rows[s], self.cols[(s + 1) % r], -1));
        }
        out
    }

    pub fn to_move(&self, size: usize) -> Result<Move> {
        if self.rows.iter().chain(&self.cols).any(|&v| v > size) {
            return Err(Error::IndexOutOfRange(format!(
                "loop index exceeds table size {size}"
            )));
        }
        let mut entries = vec![0; size * size];
        for (i, j, v) in self.cells() {
            entries[(i - 1) * size + (j - 1)] = v;
        }
        Move::new(size, 1, entries)
    }
}

/// Move of the loop with the given rows and columns (1-based).
pub fn loop_move(rows: &[usize], cols: &[usize], size: usize) -> Result<Move> {
    Loop::new(rows.to_vec(), cols.to_vec())?.to_move(size)
}

/// Move of a directed cycle `c_1 → c_2 → … → c_r → c_1` on the categories:
/// `+1` at `(c_s, c_{s+1})` and `-1` at `(c_{s+1}, c_s)`.
///
/// These antisymmetric moves are the symmetric loops used for
/// quasi-symmetry; for `r = 3` this is the loop with rows `c` and columns
/// `c` shifted by one.
pub fn symmetric_cycle_move(cycle: &[usize], size: usize) -> Result<Move> {
    if cycle.len() < 3 || !cycle.iter().all_unique() {
        return Err(Error::InvalidInput(
            "a symmetric cycle needs at least 3 distinct categories".into(),
        ));
    }
    if cycle.iter().any(|&c| c == 0 || c > size) {
        return Err(Error::IndexOutOfRange(format!(
            "cycle category outside 1..={size}"
        )));
    }
    let mut entries = vec![0; size * size];
    let r = cycle.len();
    for s in 0..r {
        let (a, b) = (cycle[s] - 1, cycle[(s + 1) % r] - 1);
        entries[a * size + b] = 1;
        entries[b * size + a] = -1;
    }
    Move::new(size, 1, entries)
}

/// A set of cells of an `I × I` table held fixed (structural zeros).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedCells {
    size: usize,
    mask: Vec<bool>,
}

impl FixedCells {
    pub fn none(size: usize) -> Self {
        Self {
            size,
            mask: vec![false; size * size],
        }
    }

    pub fn diagonal(size: usize) -> Self {
        let mask = (0..size * size).map(|k| k / size == k % size).collect();
        Self { size, mask }
    }

    /// Fixed set from 1-based `(i, j)` cells.
    pub fn from_cells(size: usize, cells: &[(usize, usize)]) -> Result<Self> {
        let mut mask = vec![false; size * size];
        for &(i, j) in cells {
            if !(1..=size).contains(&i) || !(1..=size).contains(&j) {
                return Err(Error::IndexOutOfRange(format!(
                    "cell ({i}, {j}) outside I={size}"
                )));
            }
            mask[(i - 1) * size + (j - 1)] = true;
        }
        Ok(Self { size, mask })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Whether 1-based `(i, j)` is fixed.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[(i - 1) * self.size + (j - 1)]
    }

    pub fn is_diagonal(&self) -> bool {
        *self == Self::diagonal(self.size)
    }

    /// Independence columns plus one indicator per fixed cell.
    pub fn model_matrix(&self) -> Result<ModelMatrix> {
        let ind = independence_matrix(self.size)?;
        let n = self.size * self.size;
        let extra: Vec<(String, Vec<i64>)> = (0..n)
            .filter(|&k| self.mask[k])
            .map(|k| {
                let col = (0..n).map(|c| i64::from(c == k)).collect();
                (
                    format!("fixed{},{}", k / self.size + 1, k % self.size + 1),
                    col,
                )
            })
            .collect();
        if extra.is_empty() {
            return Ok(ind);
        }
        ind.hconcat(&ModelMatrix::from_columns(n, extra)?)
    }
}

/// Whether a loop is df 1 relative to the fixed cells.
///
/// The loop spans the subtable on its rows and columns; it is df 1 when no
/// other loop fits in that subtable off the fixed cells. The loop's cells
/// form a Hamiltonian cycle of the bipartite row/column graph of the
/// subtable, so any further free cell is a chord that closes a second,
/// shorter loop, and conversely. Hence: df 1 iff the subtable has exactly
/// `2r` free cells.
pub fn is_df1(lp: &Loop, fixed: &FixedCells) -> bool {
    let free = lp
        .rows()
        .iter()
        .cartesian_product(lp.cols())
        .filter(|&(&i, &j)| !fixed.contains(i, j))
        .count();
    free == 2 * lp.degree()
}

/// All loops of degree `min_degree..=max_degree` with every cell off the
/// fixed set, each listed once up to sign.
pub fn loops_off(fixed: &FixedCells, min_degree: usize, max_degree: usize) -> Vec<Loop> {
    let size = fixed.size();
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for i1 in 1..=size {
        rows.clear();
        rows.push(i1);
        for j1 in 1..=size {
            if fixed.contains(i1, j1) {
                continue;
            }
            cols.clear();
            cols.push(j1);
            extend_loops(fixed, min_degree, max_degree, &mut rows, &mut cols, &mut out);
        }
    }
    out
}

// Depth-first search over alternating row/column sequences. `rows[0]` is the
// smallest row of the loop; `cols[0] < cols[1]` picks one of its two
// orientations.
fn extend_loops(
    fixed: &FixedCells,
    min_degree: usize,
    max_degree: usize,
    rows: &mut Vec<usize>,
    cols: &mut Vec<usize>,
    out: &mut Vec<Loop>,
) {
    let size = fixed.size();
    let s = rows.len();
    let last_row = rows[s - 1];
    // close: -1 at (i_s, j_1)
    if s >= 2.max(min_degree) && !fixed.contains(last_row, cols[0]) {
        out.push(Loop {
            rows: rows.clone(),
            cols: cols.clone(),
        });
    }
    if s == max_degree {
        return;
    }
    for jn in 1..=size {
        if cols.contains(&jn) || fixed.contains(last_row, jn) {
            continue;
        }
        if s == 1 && jn < cols[0] {
            continue;
        }
        for inext in rows[0] + 1..=size {
            if rows.contains(&inext) || fixed.contains(inext, jn) {
                continue;
            }
            cols.push(jn);
            rows.push(inext);
            extend_loops(fixed, min_degree, max_degree, rows, cols, out);
            rows.pop();
            cols.pop();
        }
    }
}

/// Finite set of moves, each stored once up to sign, all verified against
/// the model matrix of `spec`.
#[derive(Debug, Clone)]
pub struct MarkovBasis {
    spec: ModelSpec,
    moves: Vec<Move>,
}

impl MarkovBasis {
    /// Deduplicates up to sign and verifies every move against `matrix`.
    pub fn new(spec: ModelSpec, moves: Vec<Move>, matrix: &ModelMatrix) -> Result<Self> {
        let mut seen = HashSet::with_capacity(moves.len());
        let mut kept = Vec::with_capacity(moves.len());
        for m in moves {
            if m.entries().iter().all(|&v| v == 0) {
                continue;
            }
            if seen.insert(m.sign_normalized()) {
                kept.push(m);
            }
        }
        for (index, m) in kept.iter().enumerate() {
            if !verify_move(matrix, m)? {
                return Err(Error::BasisMismatch { index });
            }
        }
        Ok(Self { spec, moves: kept })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Checks every move against `a`; returns the first failing index.
    pub fn verify(&self, a: &ModelMatrix) -> Result<()> {
        for (index, m) in self.moves.iter().enumerate() {
            if !verify_move(a, m)? {
                return Err(Error::BasisMismatch { index });
            }
        }
        Ok(())
    }

    /// Whether `other` holds every move of `self` (up to sign).
    pub fn is_subset_of(&self, other: &MarkovBasis) -> bool {
        let keys: HashSet<Vec<i64>> = other.moves.iter().map(Move::sign_normalized).collect();
        self.moves.iter().all(|m| keys.contains(&m.sign_normalized()))
    }

    /// Same move set up to sign and order.
    pub fn same_moves(&self, other: &MarkovBasis) -> bool {
        self.len() == other.len() && self.is_subset_of(other)
    }

    /// One move per line, entries in global cell order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.moves {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }

    /// Integer matrix with one move per row, preceded by `rows cols`.
    pub fn to_matrix_text(&self) -> String {
        let width = self.spec.cell_count();
        format!("{} {}\n{}", self.moves.len(), width, self.to_text())
    }
}

fn single_spec(base: BaseModel, size: usize) -> Result<ModelSpec> {
    ModelSpec::single(base, size)
}

/// All basic moves (degree-2 loops); a Markov basis for independence.
pub fn independence_markov_basis(size: usize) -> Result<MarkovBasis> {
    let spec = single_spec(BaseModel::Independence, size)?;
    let moves = loops_off(&FixedCells::none(size), 2, 2)
        .iter()
        .map(|l| l.to_move(size))
        .collect::<Result<Vec<_>>>()?;
    MarkovBasis::new(spec, moves, &spec.matrix()?)
}

/// All loops of every degree; the Graver basis of independence.
pub fn independence_graver_basis(size: usize) -> Result<MarkovBasis> {
    check_enumerable(size)?;
    let spec = single_spec(BaseModel::Independence, size)?;
    let moves = loops_off(&FixedCells::none(size), 2, size)
        .iter()
        .map(|l| l.to_move(size))
        .collect::<Result<Vec<_>>>()?;
    MarkovBasis::new(spec, moves, &spec.matrix()?)
}

fn check_enumerable(size: usize) -> Result<()> {
    if size > MAX_LOOP_ENUMERATION_SIZE {
        return Err(Error::Unsupported(format!(
            "enumerating loops of every degree is limited to I <= {MAX_LOOP_ENUMERATION_SIZE}"
        )));
    }
    Ok(())
}

/// The df-1 loops off the fixed cells: the minimal Markov basis of
/// quasi-independence.
///
/// With the diagonal fixed only degrees 2 and 3 can be df 1, so the search
/// stops there; otherwise loops of degree `2..=I` are searched.
pub fn qi_markov_basis(size: usize, fixed: &FixedCells) -> Result<MarkovBasis> {
    if fixed.size() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: fixed.size(),
        });
    }
    let spec = single_spec(BaseModel::QuasiIndependence, size)?;
    let max_degree = if fixed.is_diagonal() {
        3
    } else {
        check_enumerable(size)?;
        size
    };
    let moves = loops_off(fixed, 2, max_degree)
        .iter()
        .filter(|l| is_df1(l, fixed))
        .map(|l| l.to_move(size))
        .collect::<Result<Vec<_>>>()?;
    MarkovBasis::new(spec, moves, &fixed.model_matrix()?)
}

/// Every loop of degree `2..=I` off the fixed cells: the circuits of the
/// quasi-independence lattice, which form its Graver basis.
pub fn qi_graver_basis(size: usize, fixed: &FixedCells) -> Result<MarkovBasis> {
    if fixed.size() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: fixed.size(),
        });
    }
    check_enumerable(size)?;
    let spec = single_spec(BaseModel::QuasiIndependence, size)?;
    let moves = loops_off(fixed, 2, size)
        .iter()
        .map(|l| l.to_move(size))
        .collect::<Result<Vec<_>>>()?;
    MarkovBasis::new(spec, moves, &fixed.model_matrix()?)
}

/// Symmetric loops of degree `3..=I` off the diagonal: the Markov (and
/// Graver) basis of quasi-symmetry.
///
/// For each `r`-subset the `(r-1)!/2` cycles are listed in canonical form:
/// smallest category first, second entry smaller than the last.
pub fn qs_markov_basis(size: usize) -> Result<MarkovBasis> {
    let spec = single_spec(BaseModel::QuasiSymmetry, size)?;
    let mut moves = Vec::new();
    for r in 3..=size {
        for subset in (1..=size).combinations(r) {
            let first = subset[0];
            for rest in subset[1..].iter().copied().permutations(r - 1) {
                if rest[0] > rest[r - 2] {
                    continue;
                }
                let mut cycle = Vec::with_capacity(r);
                cycle.push(first);
                cycle.extend(rest);
                moves.push(symmetric_cycle_move(&cycle, size)?);
            }
        }
    }
    MarkovBasis::new(spec, moves, &spec.matrix()?)
}

fn pair_move(size: usize, layers: usize, k1: usize, k2: usize, h1: usize, h2: usize) -> Move {
    let per = size * size;
    let mut entries = vec![0; per * layers];
    entries[h1 * per + k1] = 1;
    entries[h1 * per + k2] = -1;
    entries[h2 * per + k1] = -1;
    entries[h2 * per + k2] = 1;
    Move {
        size,
        layers,
        entries,
    }
}

/// Swaps of two distinct cells between two layers: `+1/-1` on the cells in
/// one layer, the opposite signs in the other. `C(I², 2)·C(H, 2)` moves.
pub fn type2_moves(size: usize, layers: usize) -> Result<Vec<Move>> {
    if layers < 2 {
        return Err(Error::InvalidInput(format!(
            "type-2 moves need H >= 2, got {layers}"
        )));
    }
    let per = size * size;
    let mut out = Vec::with_capacity(per * (per - 1) / 2 * layers * (layers - 1) / 2);
    for (k1, k2) in (0..per).tuple_combinations() {
        for (h1, h2) in (0..layers).tuple_combinations() {
            out.push(pair_move(size, layers, k1, k2, h1, h2));
        }
    }
    Ok(out)
}

/// Every way of sending each nonzero row of a single-layer move to one of
/// `layers` layers (`H^r` splits for `r` nonzero rows).
pub fn split_move(m: &Move, layers: usize) -> Vec<Move> {
    let size = m.size();
    let per = size * size;
    let active_rows: Vec<usize> = (0..size)
        .filter(|&i| m.entries()[i * size..(i + 1) * size].iter().any(|&v| v != 0))
        .collect();
    let mut out = Vec::new();
    for assignment in (0..active_rows.len())
        .map(|_| 0..layers)
        .multi_cartesian_product()
    {
        let mut entries = vec![0; per * layers];
        for (&row, &h) in active_rows.iter().zip(&assignment) {
            for j in 0..size {
                entries[h * per + row * size + j] = m.entries()[row * size + j];
            }
        }
        out.push(Move {
            size,
            layers,
            entries,
        });
    }
    out
}

fn stacked_spec(base: &MarkovBasis, stacking: Stacking, layers: usize) -> Result<ModelSpec> {
    let s = base.spec();
    if s.stacking != Stacking::Single {
        return Err(Error::InvalidInput(
            "stacked bases are built from a single-table basis".into(),
        ));
    }
    ModelSpec::new(s.base, stacking, s.size, layers)
}

/// Markov basis of the common-model stacking: all row-wise layer splits of
/// the base moves plus all two-cell, two-layer swaps.
pub fn m0_basis(base: &MarkovBasis, layers: usize) -> Result<MarkovBasis> {
    let spec = stacked_spec(base, Stacking::M0, layers)?;
    let mut moves: Vec<Move> = base
        .moves()
        .iter()
        .flat_map(|m| split_move(m, layers))
        .collect();
    moves.extend(type2_moves(spec.size, layers)?);
    MarkovBasis::new(spec, moves, &spec.matrix()?)
}

/// Markov basis of the per-layer stacking: each base move placed in each
/// single layer.
pub fn m1_basis(base: &MarkovBasis, layers: usize) -> Result<MarkovBasis> {
    let spec = stacked_spec(base, Stacking::M1, layers)?;
    let per = spec.size * spec.size;
    let mut moves = Vec::with_capacity(base.len() * layers);
    for h in 0..layers {
        for m in base.moves() {
            let mut entries = vec![0; per * layers];
            entries[h * per..(h + 1) * per].copy_from_slice(m.entries());
            moves.push(Move::new(spec.size, layers, entries)?);
        }
    }
    MarkovBasis::new(spec, moves, &spec.matrix()?)
}

/// Graver basis of the two-layer Lawrence lifting: `(m, -m)` for each
/// Graver element `m` of the base model.
pub fn m2_basis_two_layers(graver: &MarkovBasis) -> Result<MarkovBasis> {
    let spec = stacked_spec(graver, Stacking::M2, 2)?;
    let moves = graver
        .moves()
        .iter()
        .map(|m| {
            let entries: Vec<i64> = m
                .entries()
                .iter()
                .copied()
                .chain(m.entries().iter().map(|v| -v))
                .collect();
            Move::new(spec.size, 2, entries)
        })
        .collect::<Result<Vec<_>>>()?;
    MarkovBasis::new(spec, moves, &spec.matrix()?)
}

/// Single-table Markov basis of a base model (diagonal fixed for QI).
pub fn base_markov_basis(base: BaseModel, size: usize) -> Result<MarkovBasis> {
    match base {
        BaseModel::Independence => independence_markov_basis(size),
        BaseModel::QuasiIndependence => qi_markov_basis(size, &FixedCells::diagonal(size)),
        BaseModel::QuasiSymmetry => qs_markov_basis(size),
    }
}

/// Single-table Graver basis of a base model (diagonal fixed for QI).
pub fn base_graver_basis(base: BaseModel, size: usize) -> Result<MarkovBasis> {
    match base {
        BaseModel::Independence => independence_graver_basis(size),
        BaseModel::QuasiIndependence => qi_graver_basis(size, &FixedCells::diagonal(size)),
        BaseModel::QuasiSymmetry => qs_markov_basis(size),
    }
}

/// Markov basis for any supported model specification.
pub fn markov_basis(spec: &ModelSpec) -> Result<MarkovBasis> {
    if spec.size > MAX_TABLE_SIZE {
        return Err(Error::Unsupported(format!(
            "table size {} exceeds the maximum of {MAX_TABLE_SIZE}",
            spec.size
        )));
    }
    match spec.stacking {
        Stacking::Single => base_markov_basis(spec.base, spec.size),
        Stacking::M0 => m0_basis(&base_markov_basis(spec.base, spec.size)?, spec.layers),
        Stacking::M1 => m1_basis(&base_markov_basis(spec.base, spec.size)?, spec.layers),
        Stacking::M2 if spec.layers == 2 => {
            m2_basis_two_layers(&base_graver_basis(spec.base, spec.size)?)
        }
        Stacking::M2 => Err(Error::Unsupported(format!(
            "H>2 Lawrence lifting (M2 with H={}) has no closed-form basis here",
            spec.layers
        ))),
    }
}
