//! Exact rank by fraction-free (Bareiss) elimination.

use num_bigint::BigInt;

use crate::scalar::ExactInt;

/// Rank over the rationals of an integer matrix given as rows.
///
/// Entries are lifted into `T`; every intermediate value is a minor of the
/// input, so the division at each step is exact.
pub fn rank_exact<T: ExactInt>(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<T>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| T::from_i64(v).expect("i64 lifts into the exact ring"))
                .collect()
        })
        .collect();
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);

    let mut prev_pivot = T::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for r in rank + 1..nrows {
            let lead = m[r][col].clone();
            for c in col..ncols {
                let v = pivot.clone() * m[r][c].clone() - lead.clone() * m[rank][c].clone();
                m[r][c] = v / prev_pivot.clone();
            }
        }
        // Columns left of `col` in rows below the pivot are already zero and
        // stay zero; only the trailing block is updated.
        prev_pivot = pivot;
        rank += 1;
    }
    rank
}

/// Exact rank with arbitrary-precision integers.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    rank_exact::<BigInt>(rows)
}
