//! Helpers shared by the integration tests: fixture loading and model
//! matrices built straight from the cell definitions, independent of the
//! library builders.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stacktab::{BaseModel, StackedTable};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn fixture(name: &str) -> StackedTable {
    let text = std::fs::read_to_string(data_path(name)).expect("fixture readable");
    StackedTable::parse_csv(&text).expect("fixture parses")
}

/// Rows are cells `(i, j)` in row-major order, columns are parameters.
pub fn oracle_base(base: BaseModel, n: usize) -> Vec<Vec<i64>> {
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut r = vec![1];
            r.extend((0..n).map(|a| i64::from(a == i)));
            r.extend((0..n).map(|b| i64::from(b == j)));
            match base {
                BaseModel::Independence => {}
                BaseModel::QuasiIndependence => r.extend((0..n).map(|d| i64::from(i == j && d == i))),
                BaseModel::QuasiSymmetry => {
                    for a in 0..n {
                        for b in a..n {
                            r.push(i64::from((i, j) == (a, b) || (j, i) == (a, b)));
                        }
                    }
                }
            }
            rows.push(r);
        }
    }
    rows
}

/// `Aᵗ m` for an oracle row matrix.
pub fn apply_transpose(rows: &[Vec<i64>], m: &[i64]) -> Vec<i64> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut out = vec![0; cols];
    for (r, &v) in rows.iter().zip(m) {
        for (o, &a) in out.iter_mut().zip(r) {
            *o += a * v;
        }
    }
    out
}

/// Common model (`mode = 0`), per-layer (`1`) or per-layer plus cell sums
/// over layers (`2`).
pub fn oracle_stacked(base: BaseModel, n: usize, layers: usize, mode: u8) -> Vec<Vec<i64>> {
    let a = oracle_base(base, n);
    let p = a[0].len();
    let k = n * n;
    let mut rows = Vec::new();
    for h in 0..layers {
        for (cell, r) in a.iter().enumerate() {
            let mut row = Vec::new();
            if mode == 0 {
                row.extend(r);
                row.extend((0..layers).map(|g| i64::from(g == h)));
            } else {
                for g in 0..layers {
                    if g == h {
                        row.extend(r);
                    } else {
                        row.extend(std::iter::repeat_n(0, p));
                    }
                }
                if mode == 2 {
                    row.extend((0..k).map(|c| i64::from(c == cell)));
                }
            }
            rows.push(row);
        }
    }
    rows
}

/// A random table with `total` counts spread uniformly over the cells.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize, layers: usize, total: u64) -> StackedTable {
    let cells = n * n * layers;
    let mut counts = vec![0u64; cells];
    for _ in 0..total {
        counts[rng.random_range(0..cells)] += 1;
    }
    StackedTable::new(n, layers, counts).expect("valid table")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
