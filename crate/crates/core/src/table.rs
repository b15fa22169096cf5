//! Square and stacked contingency tables.
//!
//! Cells are stored layer-major, then row-major, then column-minor. Every
//! model matrix row and every move entry in this crate uses that order.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported table side `I`.
pub const MAX_TABLE_SIZE: usize = 12;

/// A 1-based cell coordinate `(i, j, h)` in a stacked table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
    pub h: usize,
}

impl CellIndex {
    pub fn new(i: usize, j: usize, h: usize) -> Self {
        Self { i, j, h }
    }
}

/// Maps a 1-based cell to its position `(h-1)·I² + (i-1)·I + (j-1)`.
pub fn linearize(c: CellIndex, size: usize, layers: usize) -> Result<usize> {
    let in_range = |v: usize, hi: usize| (1..=hi).contains(&v);
    if !in_range(c.i, size) || !in_range(c.j, size) || !in_range(c.h, layers) {
        return Err(Error::IndexOutOfRange(format!(
            "cell ({}, {}, {}) outside I={size}, H={layers}",
            c.i, c.j, c.h
        )));
    }
    Ok((c.h - 1) * size * size + (c.i - 1) * size + (c.j - 1))
}

/// Inverse of [`linearize`].
pub fn delinearize(k: usize, size: usize, layers: usize) -> Result<CellIndex> {
    let per_layer = size * size;
    if size == 0 || k >= per_layer * layers {
        return Err(Error::IndexOutOfRange(format!(
            "linear index {k} outside I={size}, H={layers}"
        )));
    }
    let h = k / per_layer;
    let rem = k % per_layer;
    Ok(CellIndex::new(rem / size + 1, rem % size + 1, h + 1))
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::InvalidInput("table size must be positive".into()));
    }
    if size > MAX_TABLE_SIZE {
        return Err(Error::Unsupported(format!(
            "table size {size} exceeds the maximum of {MAX_TABLE_SIZE}"
        )));
    }
    Ok(())
}

/// An `I × I` table of nonnegative counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SquareTable {
    size: usize,
    counts: Vec<u64>,
}

impl SquareTable {
    pub fn new(size: usize, counts: Vec<u64>) -> Result<Self> {
        check_size(size)?;
        if counts.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: counts.len(),
            });
        }
        Ok(Self { size, counts })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let size = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != size) {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: bad.len(),
            });
        }
        Self::new(size, rows.concat())
    }

    pub fn zeros(size: usize) -> Result<Self> {
        Self::new(size, vec![0; size * size])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Count at 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Result<u64> {
        let k = linearize(CellIndex::new(i, j, 1), self.size, 1)?;
        Ok(self.counts[k])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row sums and column sums.
    pub fn margins(&self) -> (Vec<u64>, Vec<u64>) {
        let n = self.size;
        let mut rows = vec![0; n];
        let mut cols = vec![0; n];
        for (k, &c) in self.counts.iter().enumerate() {
            rows[k / n] += c;
            cols[k % n] += c;
        }
        (rows, cols)
    }

    pub fn transpose(&self) -> Self {
        let n = self.size;
        let counts = (0..n * n).map(|k| self.counts[(k % n) * n + k / n]).collect();
        Self { size: n, counts }
    }

    pub fn into_stacked(self) -> StackedTable {
        StackedTable {
            size: self.size,
            layers: 1,
            counts: self.counts,
        }
    }
}

/// `H` layers of `I × I` counts. `H = 1` is the single-table case.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StackedTable {
    size: usize,
    layers: usize,
    counts: Vec<u64>,
}

impl StackedTable {
    pub fn new(size: usize, layers: usize, counts: Vec<u64>) -> Result<Self> {
        check_size(size)?;
        if layers == 0 {
            return Err(Error::InvalidInput("layer count must be positive".into()));
        }
        let expected = layers * size * size;
        if counts.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: counts.len(),
            });
        }
        Ok(Self {
            size,
            layers,
            counts,
        })
    }

    pub fn from_layers(layers: &[SquareTable]) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidInput("no layers given".into()))?;
        if let Some(bad) = layers.iter().find(|t| t.size != first.size) {
            return Err(Error::DimensionMismatch {
                expected: first.size,
                got: bad.size,
            });
        }
        let counts = layers.iter().flat_map(|t| t.counts.iter().copied()).collect();
        Self::new(first.size, layers.len(), counts)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn cell_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, c: CellIndex) -> Result<u64> {
        Ok(self.counts[linearize(c, self.size, self.layers)?])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Layer `h` (1-based) as a standalone table.
    pub fn layer(&self, h: usize) -> Result<SquareTable> {
        if !(1..=self.layers).contains(&h) {
            return Err(Error::IndexOutOfRange(format!(
                "layer {h} outside 1..={}",
                self.layers
            )));
        }
        let per = self.size * self.size;
        let start = (h - 1) * per;
        Ok(SquareTable {
            size: self.size,
            counts: self.counts[start..start + per].to_vec(),
        })
    }

    pub fn layer_total(&self, h: usize) -> Result<u64> {
        Ok(self.layer(h)?.total())
    }

    /// Cell-wise sum over layers.
    pub fn collapse(&self) -> SquareTable {
        let per = self.size * self.size;
        let mut counts = vec![0; per];
        for (k, &c) in self.counts.iter().enumerate() {
            counts[k % per] += c;
        }
        SquareTable {
            size: self.size,
            counts,
        }
    }

    /// Returns `self + m`, or `None` if any entry would become negative.
    pub fn try_add(&self, delta: &[i64]) -> Result<Option<Self>> {
        if delta.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.counts.len(),
                got: delta.len(),
            });
        }
        let mut counts = Vec::with_capacity(self.counts.len());
        for (&c, &d) in self.counts.iter().zip(delta) {
            let v = c as i64 + d;
            if v < 0 {
                return Ok(None);
            }
            counts.push(v as u64);
        }
        Ok(Some(Self {
            size: self.size,
            layers: self.layers,
            counts,
        }))
    }

    /// Parses the `I,H` header followed by `H·I` rows of `I` counts.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let dims = parse_fields(hline, header)?;
        let (size, layers) = match dims[..] {
            [i, h] => (i as usize, h as usize),
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    message: format!("header must be `I,H`, found {} fields", dims.len()),
                })
            }
        };
        if size < 1 || layers < 1 {
            return Err(Error::Parse {
                line: hline,
                message: "I and H must be positive".into(),
            });
        }
        if size > MAX_TABLE_SIZE {
            return Err(Error::Unsupported(format!(
                "table size {size} exceeds the maximum of {MAX_TABLE_SIZE}"
            )));
        }

        let mut counts = Vec::with_capacity(layers * size * size);
        let mut rows_read = 0;
        for (n, line) in lines {
            if rows_read == layers * size {
                return Err(Error::Parse {
                    line: n,
                    message: format!("expected {} data rows, found more", layers * size),
                });
            }
            let row = parse_fields(n, line)?;
            if row.len() != size {
                return Err(Error::Parse {
                    line: n,
                    message: format!("expected {size} counts, found {}", row.len()),
                });
            }
            counts.extend(row);
            rows_read += 1;
        }
        if rows_read != layers * size {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: format!("expected {} data rows, found {rows_read}", layers * size),
            });
        }
        Self::new(size, layers, counts)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.size, self.layers);
        for row in self.counts.chunks(self.size) {
            let fields: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn parse_fields(line: usize, text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<u64>().map_err(|_| Error::Parse {
                line,
                message: format!("`{f}` is not a nonnegative integer"),
            })
        })
        .collect()
}

impl fmt::Display for StackedTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (h, layer) in self.counts.chunks(self.size * self.size).enumerate() {
            if self.layers > 1 {
                writeln!(f, "layer {}", h + 1)?;
            }
            for row in layer.chunks(self.size) {
                let fields: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
                writeln!(f, "{}", fields.join(""))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linearize_examples() {
        assert_eq!(linearize(CellIndex::new(1, 1, 1), 3, 2).unwrap(), 0);
        assert_eq!(linearize(CellIndex::new(3, 3, 2), 3, 2).unwrap(), 17);
        assert_eq!(linearize(CellIndex::new(2, 3, 1), 5, 2).unwrap(), 7);
    }

    #[test]
    fn linearize_rejects_out_of_range() {
        assert!(linearize(CellIndex::new(0, 1, 1), 3, 1).is_err());
        assert!(linearize(CellIndex::new(1, 4, 1), 3, 1).is_err());
        assert!(linearize(CellIndex::new(1, 1, 3), 3, 2).is_err());
        assert!(delinearize(18, 3, 2).is_err());
    }

    #[test]
    fn linearize_round_trips_exhaustively() {
        for size in 1..=8 {
            for layers in 1..=4 {
                for k in 0..size * size * layers {
                    let c = delinearize(k, size, layers).unwrap();
                    assert_eq!(linearize(c, size, layers).unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn margins_examples() {
        let t = SquareTable::from_rows(&[vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(t.margins(), (vec![3, 7], vec![4, 6]));
        let d = SquareTable::from_rows(&[vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 5]]).unwrap();
        assert_eq!(d.margins(), (vec![5, 5, 5], vec![5, 5, 5]));
    }

    #[test]
    fn zero_layer_total() {
        let t = StackedTable::new(3, 2, vec![0; 18]).unwrap();
        assert_eq!(t.layer_total(1).unwrap(), 0);
        assert!(t.layer_total(3).is_err());
    }

    #[test]
    fn rejects_oversized_tables() {
        assert!(matches!(
            SquareTable::zeros(MAX_TABLE_SIZE + 1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn csv_parses_with_whitespace_and_blank_lines() {
        let t = StackedTable::parse_csv("2, 2\n\n1,2\n 3 ,4\n\n5,6\n7,8\n").unwrap();
        assert_eq!(t.size(), 2);
        assert_eq!(t.layers(), 2);
        assert_eq!(t.counts(), &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(StackedTable::parse_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = StackedTable::parse_csv("2,1\n1,2\n3,x\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "`x` is not a nonnegative integer".into()
            }
        );
        let err = StackedTable::parse_csv("2,1\n1,2,3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(StackedTable::parse_csv("2,1\n1,2\n").is_err());
        assert!(StackedTable::parse_csv("2,1\n1,2\n3,4\n5,6\n").is_err());
        assert!(StackedTable::parse_csv("1,-2\n").is_err());
    }

    #[test]
    fn try_add_refuses_negative_entries() {
        let t = StackedTable::new(2, 1, vec![1, 0, 0, 1]).unwrap();
        assert!(t.try_add(&[-1, 1, 1, -1]).unwrap().is_some());
        assert!(t.try_add(&[1, -1, -1, 1]).unwrap().is_none());
        assert!(t.try_add(&[1]).is_err());
    }

    proptest! {
        #[test]
        fn layer_totals_sum_to_total(size in 1usize..5, layers in 1usize..4, seed in proptest::collection::vec(0u64..20, 64)) {
            let n = size * size * layers;
            let counts: Vec<u64> = seed.iter().cycle().take(n).copied().collect();
            let t = StackedTable::new(size, layers, counts).unwrap();
            let sum: u64 = (1..=layers).map(|h| t.layer_total(h).unwrap()).sum();
            prop_assert_eq!(sum, t.total());
        }

        #[test]
        fn transpose_swaps_margins(size in 1usize..6, seed in proptest::collection::vec(0u64..50, 36)) {
            let counts: Vec<u64> = seed.into_iter().take(size * size).collect();
            let t = SquareTable::new(size, counts).unwrap();
            let (r, c) = t.margins();
            let (rt, ct) = t.transpose().margins();
            prop_assert_eq!(r, ct);
            prop_assert_eq!(c, rt);
        }
    }
}
