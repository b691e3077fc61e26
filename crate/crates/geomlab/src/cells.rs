//! Dense uniform cell grid used to accelerate neighbourhood and nearest-point
//! queries under an arbitrary norm.
//!
//! Queries only rely on the coordinate bound `|v_k| ≤ b·‖v‖` of the space, so
//! the grid works for every norm the crate supports.

use std::collections::HashMap;

use crate::error::{Error, Result};

const EMPTY: u32 = u32::MAX;
const MAX_CELLS: usize = 50_000_000;

#[derive(Debug, Clone)]
pub(crate) struct CellGrid {
    origin: Vec<f64>,
    cell: f64,
    counts: Vec<i64>,
    strides: Vec<usize>,
    head: Vec<u32>,
    next: Vec<u32>,
}

impl CellGrid {
    /// Grid over the box `[lo, hi]` (padded by one cell on each side).
    pub(crate) fn new(lo: &[f64], hi: &[f64], cell: f64) -> Result<Self> {
        assert!(cell > 0.0 && cell.is_finite());
        let dim = lo.len();
        let origin: Vec<f64> = lo.iter().map(|&l| l - cell).collect();
        let mut counts = Vec::with_capacity(dim);
        let mut total: usize = 1;
        for k in 0..dim {
            let c = ((hi[k] + cell - origin[k]) / cell).floor() as i64 + 1;
            let c = c.max(1);
            total = total
                .checked_mul(c as usize)
                .filter(|&t| t <= MAX_CELLS)
                .ok_or_else(|| {
                    Error::BudgetExceeded(format!("cell grid would exceed {MAX_CELLS} cells"))
                })?;
            counts.push(c);
        }
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1] as usize;
        }
        Ok(Self {
            origin,
            cell,
            counts,
            strides,
            head: vec![EMPTY; total],
            next: Vec::new(),
        })
    }

    pub(crate) fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Unclamped integer cell coordinates of `p`.
    pub(crate) fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(&self.origin)
            .map(|(&x, &o)| ((x - o) / self.cell).floor() as i64)
            .collect()
    }

    fn flat(&self, c: &[i64]) -> usize {
        c.iter()
            .zip(&self.strides)
            .map(|(&ci, &s)| ci as usize * s)
            .sum()
    }

    /// Insert item `id` (ids must be inserted as 0, 1, 2, …).
    pub(crate) fn insert(&mut self, id: u32, p: &[f64]) {
        debug_assert_eq!(id as usize, self.next.len());
        let c: Vec<i64> = self
            .cell_of(p)
            .into_iter()
            .zip(&self.counts)
            .map(|(ci, &n)| ci.clamp(0, n - 1))
            .collect();
        let f = self.flat(&c);
        self.next.push(self.head[f]);
        self.head[f] = id;
    }

    /// Visit every item in cells of the box `[lo, hi]` (inclusive, clamped),
    /// skipping cells whose Chebyshev distance to `center` is below `min_ring`.
    pub(crate) fn visit_box<F: FnMut(u32)>(
        &self,
        center: &[i64],
        radius: i64,
        min_ring: i64,
        mut f: F,
    ) {
        let dim = center.len();
        let lo: Vec<i64> = (0..dim).map(|k| (center[k] - radius).max(0)).collect();
        let hi: Vec<i64> = (0..dim)
            .map(|k| (center[k] + radius).min(self.counts[k] - 1))
            .collect();
        if (0..dim).any(|k| lo[k] > hi[k]) {
            return;
        }
        let mut cur = lo.clone();
        loop {
            let ring = (0..dim).map(|k| (cur[k] - center[k]).abs()).max().unwrap_or(0);
            if ring >= min_ring {
                let mut id = self.head[self.flat(&cur)];
                while id != EMPTY {
                    f(id);
                    id = self.next[id as usize];
                }
            }
            // odometer increment
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if cur[k] < hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo[k];
            }
        }
    }

    /// Smallest Chebyshev ring around `center` that touches the grid, and the
    /// ring beyond which no cell of the grid lies.
    pub(crate) fn ring_span(&self, center: &[i64]) -> (i64, i64) {
        let mut first = 0;
        let mut last = 0;
        for (k, &c) in center.iter().enumerate() {
            let n = self.counts[k];
            let gap = if c < 0 {
                -c
            } else if c >= n {
                c - n + 1
            } else {
                0
            };
            first = first.max(gap);
            last = last.max((c).abs().max((n - 1 - c).abs()));
        }
        (first, last)
    }
}

/// Hashed cell grid for unbounded or sparse point sets: only occupied cells
/// are stored. Neighbourhood queries visit the `3^d` cells around a point.
#[derive(Debug, Clone, Default)]
pub(crate) struct SparseGrid {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl SparseGrid {
    pub(crate) fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|x| (x / self.cell).floor() as i64).collect()
    }

    pub(crate) fn insert(&mut self, id: u32, p: &[f64]) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }

    /// Visit every item in the cells adjacent to (or containing) `p`.
    pub(crate) fn visit_near<F: FnMut(u32)>(&self, p: &[f64], mut f: F) {
        let base = self.key(p);
        let dim = base.len();
        let mut off = vec![-1i64; dim];
        let mut key = base.clone();
        loop {
            for k in 0..dim {
                key[k] = base[k] + off[k];
            }
            if let Some(ids) = self.cells.get(&key) {
                ids.iter().for_each(|&id| f(id));
            }
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if off[k] < 1 {
                    off[k] += 1;
                    break;
                }
                off[k] = -1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_visit_finds_inserted_items() {
        let mut g = CellGrid::new(&[0.0, 0.0], &[10.0, 10.0], 1.0).unwrap();
        g.insert(0, &[0.5, 0.5]);
        g.insert(1, &[5.5, 5.5]);
        g.insert(2, &[5.2, 5.9]);
        let c = g.cell_of(&[5.0, 5.0]);
        let mut seen = vec![];
        g.visit_box(&c, 1, 0, |id| seen.push(id));
        seen.sort();
        assert_eq!(seen, vec![1, 2]);
        let mut all = vec![];
        g.visit_box(&c, 100, 0, |id| all.push(id));
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn sparse_grid_finds_neighbours() {
        let mut g = SparseGrid::new(1.0);
        g.insert(0, &[0.5, 0.5]);
        g.insert(1, &[1e6, -1e6]);
        g.insert(2, &[-0.2, 1.3]);
        let mut seen = vec![];
        g.visit_near(&[0.1, 0.9], |id| seen.push(id));
        seen.sort();
        assert_eq!(seen, vec![0, 2]);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        assert!(CellGrid::new(&[0.0; 3], &[1e4; 3], 1.0).is_err());
    }
}
