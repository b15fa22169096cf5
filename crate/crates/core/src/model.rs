//! Model matrices for independence, quasi-independence and quasi-symmetry,
//! and their stacked versions for comparing several layers.
//!
//! A [`ModelMatrix`] has one row per cell (global cell order) and one column
//! per log-linear parameter. Parametrizations are deliberately overcomplete;
//! everything downstream depends only on the column space.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rank;
use crate::table::MAX_TABLE_SIZE;

/// Integer model matrix with labelled columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i64>,
    labels: Vec<String>,
}

impl ModelMatrix {
    /// Builds a matrix from its columns (each of length `rows`).
    pub fn from_columns(rows: usize, columns: Vec<(String, Vec<i64>)>) -> Result<Self> {
        let cols = columns.len();
        let mut entries = vec![0; rows * cols];
        let mut labels = Vec::with_capacity(cols);
        for (c, (label, col)) in columns.into_iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: col.len(),
                });
            }
            for (r, v) in col.into_iter().enumerate() {
                entries[r * cols + c] = v;
            }
            labels.push(label);
        }
        Ok(Self {
            rows,
            cols,
            entries,
            labels,
        })
    }

    /// Builds a matrix from row-major rows, labelling columns `c1..cd`.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.concat(),
            labels: (1..=cols).map(|c| format!("c{c}")).collect(),
        })
    }

    /// Number of cells.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of parameters.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero_one(&self) -> bool {
        self.entries.iter().all(|&v| v == 0 || v == 1)
    }

    /// Cell indices where column `col` is nonzero.
    pub fn support(&self, col: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, col) != 0).collect()
    }

    /// `Aᵗ x` for an integer vector over the cells.
    pub fn statistic(&self, x: &[i64]) -> Result<Vec<i64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: x.len(),
            });
        }
        let mut out = vec![0; self.cols];
        for (r, &v) in x.iter().enumerate() {
            if v != 0 {
                for (o, &a) in out.iter_mut().zip(self.row(r)) {
                    *o += a * v;
                }
            }
        }
        Ok(out)
    }

    /// Same as [`ModelMatrix::statistic`] for nonnegative counts.
    pub fn count_statistic(&self, counts: &[u64]) -> Result<Vec<i64>> {
        let x: Vec<i64> = counts.iter().map(|&c| c as i64).collect();
        self.statistic(&x)
    }

    /// Exact rank over the rationals.
    pub fn rank(&self) -> usize {
        rank::rank(&self.row_vecs())
    }

    /// Side-by-side concatenation `[self | other]`.
    pub fn hconcat(&self, other: &ModelMatrix) -> Result<ModelMatrix> {
        if other.rows != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: other.rows,
            });
        }
        let rows: Vec<Vec<i64>> = (0..self.rows)
            .map(|r| [self.row(r), other.row(r)].concat())
            .collect();
        let mut m = ModelMatrix::from_rows(&rows)?;
        m.labels = self.labels.iter().chain(&other.labels).cloned().collect();
        Ok(m)
    }

    /// Whether the column space of `self` lies inside that of `other`.
    pub fn column_space_within(&self, other: &ModelMatrix) -> Result<bool> {
        Ok(other.hconcat(self)?.rank() == other.rank())
    }

    /// Plain-text export: `n d`, then `n` lines of `d` integers.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let fields: Vec<String> = self.row(r).iter().map(i64::to_string).collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Two-way base model for a single `I × I` table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseModel {
    Independence,
    QuasiIndependence,
    QuasiSymmetry,
}

impl BaseModel {
    pub fn min_size(self) -> usize {
        match self {
            BaseModel::Independence => 2,
            BaseModel::QuasiIndependence | BaseModel::QuasiSymmetry => 3,
        }
    }

    pub fn matrix(self, size: usize) -> Result<ModelMatrix> {
        match self {
            BaseModel::Independence => independence_matrix(size),
            BaseModel::QuasiIndependence => quasi_independence_matrix(size),
            BaseModel::QuasiSymmetry => quasi_symmetry_matrix(size),
        }
    }
}

impl fmt::Display for BaseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseModel::Independence => "ind",
            BaseModel::QuasiIndependence => "qi",
            BaseModel::QuasiSymmetry => "qs",
        })
    }
}

impl FromStr for BaseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ind" | "independence" => Ok(BaseModel::Independence),
            "qi" | "quasi-independence" => Ok(BaseModel::QuasiIndependence),
            "qs" | "quasi-symmetry" => Ok(BaseModel::QuasiSymmetry),
            other => Err(Error::InvalidInput(format!("unknown base model `{other}`"))),
        }
    }
}

/// How layers of a stacked table share parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stacking {
    /// One table, no stacking.
    Single,
    /// Common base model across layers plus a layer total per layer.
    M0,
    /// Independent copy of the base model per layer.
    M1,
    /// Per-layer copies plus fixed cell sums across layers (Lawrence lifting).
    M2,
}

impl fmt::Display for Stacking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stacking::Single => "single",
            Stacking::M0 => "m0",
            Stacking::M1 => "m1",
            Stacking::M2 => "m2",
        })
    }
}

impl FromStr for Stacking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Stacking::Single),
            "m0" => Ok(Stacking::M0),
            "m1" => Ok(Stacking::M1),
            "m2" => Ok(Stacking::M2),
            other => Err(Error::InvalidInput(format!("unknown stacking `{other}`"))),
        }
    }
}

/// A fully specified model: base model, stacking, table size and layer count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub base: BaseModel,
    pub stacking: Stacking,
    pub size: usize,
    pub layers: usize,
}

impl ModelSpec {
    pub fn new(base: BaseModel, stacking: Stacking, size: usize, layers: usize) -> Result<Self> {
        if size < base.min_size() {
            return Err(Error::InvalidInput(format!(
                "{base} needs I >= {}, got {size}",
                base.min_size()
            )));
        }
        if size > MAX_TABLE_SIZE {
            return Err(Error::Unsupported(format!(
                "table size {size} exceeds the maximum of {MAX_TABLE_SIZE}"
            )));
        }
        match stacking {
            Stacking::Single if layers != 1 => Err(Error::InvalidInput(format!(
                "single-table model requires H = 1, got {layers}"
            ))),
            Stacking::M0 | Stacking::M1 | Stacking::M2 if layers < 2 => Err(Error::InvalidInput(
                format!("stacked model {stacking} requires H >= 2, got {layers}"),
            )),
            _ => Ok(Self {
                base,
                stacking,
                size,
                layers,
            }),
        }
    }

    pub fn single(base: BaseModel, size: usize) -> Result<Self> {
        Self::new(base, Stacking::Single, size, 1)
    }

    pub fn cell_count(&self) -> usize {
        self.layers * self.size * self.size
    }

    pub fn matrix(&self) -> Result<ModelMatrix> {
        let a = self.base.matrix(self.size)?;
        match self.stacking {
            Stacking::Single => Ok(a),
            s => stack(&a, self.layers, s),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} (I={}, H={})",
            self.base, self.stacking, self.size, self.layers
        )
    }
}

fn check_min(size: usize, min: usize, name: &str) -> Result<()> {
    if size < min {
        return Err(Error::InvalidInput(format!(
            "{name} model needs I >= {min}, got {size}"
        )));
    }
    if size > MAX_TABLE_SIZE {
        return Err(Error::Unsupported(format!(
            "table size {size} exceeds the maximum of {MAX_TABLE_SIZE}"
        )));
    }
    Ok(())
}

fn indicator(n: usize, hit: impl Fn(usize) -> bool) -> Vec<i64> {
    (0..n).map(|k| i64::from(hit(k))).collect()
}

fn independence_columns(size: usize) -> Vec<(String, Vec<i64>)> {
    let n = size * size;
    let mut cols = vec![("mu".to_string(), vec![1; n])];
    for i in 0..size {
        cols.push((format!("alpha{}", i + 1), indicator(n, |k| k / size == i)));
    }
    for j in 0..size {
        cols.push((format!("beta{}", j + 1), indicator(n, |k| k % size == j)));
    }
    cols
}

/// Overall mean, row effects and column effects; rank `2I - 1`.
pub fn independence_matrix(size: usize) -> Result<ModelMatrix> {
    check_min(size, 2, "independence")?;
    ModelMatrix::from_columns(size * size, independence_columns(size))
}

/// Independence columns plus one indicator per diagonal cell.
pub fn quasi_independence_matrix(size: usize) -> Result<ModelMatrix> {
    check_min(size, 3, "quasi-independence")?;
    let n = size * size;
    let mut cols = independence_columns(size);
    for i in 0..size {
        cols.push((
            format!("gamma{}", i + 1),
            indicator(n, |k| k == i * size + i),
        ));
    }
    ModelMatrix::from_columns(n, cols)
}

/// Independence columns plus one indicator per unordered pair `{i, j}`
/// (including `i = j`), shared by cells `(i, j)` and `(j, i)`.
pub fn quasi_symmetry_matrix(size: usize) -> Result<ModelMatrix> {
    check_min(size, 3, "quasi-symmetry")?;
    let n = size * size;
    let mut cols = independence_columns(size);
    for i in 0..size {
        for j in i..size {
            cols.push((
                format!("gamma{},{}", i + 1, j + 1),
                indicator(n, |k| {
                    let (r, c) = (k / size, k % size);
                    (r, c) == (i, j) || (r, c) == (j, i)
                }),
            ));
        }
    }
    ModelMatrix::from_columns(n, cols)
}

/// Stacks a per-layer model matrix over `layers` layers.
///
/// * `M0`: the columns of `a` repeated down every layer, plus one layer
///   indicator column per layer.
/// * `M1`: block-diagonal copies of `a`.
/// * `M2`: block-diagonal copies plus one column per cell of a layer that
///   hits that cell in every layer.
pub fn stack(a: &ModelMatrix, layers: usize, mode: Stacking) -> Result<ModelMatrix> {
    if layers < 2 {
        return Err(Error::InvalidInput(format!(
            "stacking needs H >= 2, got {layers}"
        )));
    }
    let k = a.rows();
    let n = k * layers;
    let mut cols: Vec<(String, Vec<i64>)> = Vec::new();
    match mode {
        Stacking::Single => {
            return Err(Error::InvalidInput("`single` is not a stacking mode".into()))
        }
        Stacking::M0 => {
            for c in 0..a.cols() {
                let col = a.column(c);
                cols.push((a.labels[c].clone(), (0..n).map(|r| col[r % k]).collect()));
            }
            for h in 0..layers {
                cols.push((format!("layer{}", h + 1), indicator(n, |r| r / k == h)));
            }
        }
        Stacking::M1 | Stacking::M2 => {
            for h in 0..layers {
                for c in 0..a.cols() {
                    let col = a.column(c);
                    cols.push((
                        format!("{}[{}]", a.labels[c], h + 1),
                        (0..n)
                            .map(|r| if r / k == h { col[r % k] } else { 0 })
                            .collect(),
                    ));
                }
            }
            if mode == Stacking::M2 {
                for cell in 0..k {
                    cols.push((format!("cell{}", cell + 1), indicator(n, |r| r % k == cell)));
                }
            }
        }
    }
    ModelMatrix::from_columns(n, cols)
}

/// Degrees of freedom between nested models: `rank(A1) - rank(A0)`.
pub fn nested_df(null: &ModelSpec, alt: &ModelSpec) -> Result<usize> {
    let a0 = null.matrix()?;
    let a1 = alt.matrix()?;
    nested_df_matrices(&a0, &a1)
}

pub fn nested_df_matrices(a0: &ModelMatrix, a1: &ModelMatrix) -> Result<usize> {
    if a0.rows() != a1.rows() {
        return Err(Error::DimensionMismatch {
            expected: a0.rows(),
            got: a1.rows(),
        });
    }
    let r0 = a0.rank();
    let r1 = a1.rank();
    if a1.hconcat(a0)?.rank() != r1 {
        return Err(Error::NotNested(
            "column space of the null model is not contained in the alternative".into(),
        ));
    }
    Ok(r1 - r0)
}

/// Residual degrees of freedom against the saturated model.
pub fn residual_df(a: &ModelMatrix) -> usize {
    a.rows() - a.rank()
}
