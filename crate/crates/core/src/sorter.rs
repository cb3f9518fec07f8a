//! Functional and latency models of the sorting hardware: bitonic networks,
//! the W x W two-dimensional sorter and the merge-sorter reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortReport<T> {
    pub sorted: Vec<T>,
    pub phases: usize,
    /// Compare-exchange stages of one network pass.
    pub stages: usize,
    pub cycles: u64,
}

fn log2_exact(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros() as usize)
}

fn ceil_log2(n: usize) -> u64 {
    n.next_power_of_two().trailing_zeros() as u64
}

#[inline]
fn compare_exchange<T: PartialOrd + Copy>(v: &mut [T], i: usize, j: usize, ascending: bool) {
    if (v[i] > v[j]) == ascending && v[i] != v[j] {
        v.swap(i, j);
    }
}

fn bitonic_in_place<T: PartialOrd + Copy>(v: &mut [T], dir: Direction) {
    let n = v.len();
    let up = dir == Direction::Ascending;
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..n {
                let l = i ^ j;
                if l > i {
                    compare_exchange(v, i, l, (i & k == 0) == up);
                }
            }
            j /= 2;
        }
        k *= 2;
    }
}

/// Stages of a bitonic network on `2^m` inputs: `m(m+1)/2`.
pub fn bitonic_stages(len: usize) -> Result<usize> {
    let m = log2_exact(len)?;
    Ok(m * (m + 1) / 2)
}

/// Sorts with a classic bitonic compare-exchange network. The latency is
/// the pipeline depth `log2(len)` of the bi-mode network.
pub fn bitonic_sort<T: PartialOrd + Copy>(v: &[T], dir: Direction) -> Result<SortReport<T>> {
    let stages = bitonic_stages(v.len())?;
    let mut sorted = v.to_vec();
    bitonic_in_place(&mut sorted, dir);
    Ok(SortReport { sorted, phases: 1, stages, cycles: log2_exact(v.len())? as u64 })
}

/// Phases the 2D sorter runs for width `w`: six up to `w = 32`, `log2(w) + 1` beyond.
pub fn sort2d_phases(w: usize) -> usize {
    (ceil_log2(w) as usize + 1).max(6)
}

/// Latency of the 2D sorter: each phase streams `w` rows through a `log2(w)`-deep pipeline.
pub fn sort2d_cycles(w: usize) -> u64 {
    sort2d_phases(w) as u64 * (w as u64 + ceil_log2(w))
}

/// Matrix width used to sort `k` values: `ceil(sqrt(k))`.
pub fn sort2d_width(k: usize) -> usize {
    let mut w = (k as f64).sqrt().floor() as usize;
    while w * w < k {
        w += 1;
    }
    while w > 0 && (w - 1) * (w - 1) >= k {
        w -= 1;
    }
    w
}

/// Sorts `W*W` values into ascending snake (boustrophedon) row-major order.
///
/// One phase sorts every row (even rows ascending, odd rows descending) and
/// then every column ascending.
pub fn sort2d<T: PartialOrd + Copy>(values: &[T]) -> Result<SortReport<T>> {
    let w = sort2d_width(values.len());
    if w * w != values.len() {
        return Err(Error::Length { expected: w * w, actual: values.len() });
    }
    log2_exact(w)?;
    let phases = sort2d_phases(w);
    let mut m = values.to_vec();
    let mut col = vec![values[0]; w];
    for _ in 0..phases {
        for (r, row) in m.chunks_mut(w).enumerate() {
            bitonic_in_place(row, if r % 2 == 0 { Direction::Ascending } else { Direction::Descending });
        }
        for c in 0..w {
            for r in 0..w {
                col[r] = m[r * w + c];
            }
            bitonic_in_place(&mut col, Direction::Ascending);
            for r in 0..w {
                m[r * w + c] = col[r];
            }
        }
    }
    Ok(SortReport { sorted: m, phases, stages: bitonic_stages(w)?, cycles: sort2d_cycles(w) })
}

/// Reads a snake-ordered matrix back into a linear sequence.
pub fn snake_to_linear<T: Copy>(m: &[T], w: usize) -> Vec<T> {
    m.chunks(w)
        .enumerate()
        .flat_map(|(r, row)| {
            let mut row = row.to_vec();
            if r % 2 == 1 {
                row.reverse();
            }
            row
        })
        .collect()
}

/// Parallel merge-sorter reference latency: `k * log10(k)`, rounded half up.
pub fn merge_sort_latency(k: usize) -> Result<u64> {
    if k < 2 {
        return Err(Error::DecoderConfig(format!("merge sorter needs at least 2 elements, got {k}")));
    }
    let x = k as f64 * (k as f64).log10();
    Ok((x + 0.5).floor() as u64)
}
