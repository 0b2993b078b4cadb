//! Grid feedback plans: one commanded heading per cell, excluded cells and
//! the region of interest `W*`.
//!
//! Rows grow upward: cell `(row, col)` covers
//! `[col·d, (col+1)·d] × [row·d, (row+1)·d]`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Angle, Border, Point2};
use crate::kinematics::{Configuration, VehicleParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("grid must have at least one row and one column")]
    EmptyGrid,
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("region of interest is empty")]
    EmptyRegion,
    #[error("cell ({row}, {col}) is outside the {n_rows}x{n_cols} grid")]
    OutOfRange { row: usize, col: usize, n_rows: usize, n_cols: usize },
    #[error("region-of-interest cell ({row}, {col}) is excluded")]
    ExcludedTarget { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        CellIndex { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Command(Angle),
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<Cell>,
    targets: BTreeSet<CellIndex>,
    params: VehicleParams,
}

impl GridPlan {
    /// `cells` is row-major with row 0 at the bottom.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        cells: Vec<Cell>,
        targets: impl IntoIterator<Item = CellIndex>,
        params: VehicleParams,
    ) -> Result<Self, PlanError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(PlanError::EmptyGrid);
        }
        if cells.len() != n_rows * n_cols {
            return Err(PlanError::CellCount { expected: n_rows * n_cols, got: cells.len() });
        }
        let targets: BTreeSet<CellIndex> = targets.into_iter().collect();
        if targets.is_empty() {
            return Err(PlanError::EmptyRegion);
        }
        for t in &targets {
            if t.row >= n_rows || t.col >= n_cols {
                return Err(PlanError::OutOfRange { row: t.row, col: t.col, n_rows, n_cols });
            }
            if cells[t.row * n_cols + t.col] == Cell::Excluded {
                return Err(PlanError::ExcludedTarget { row: t.row, col: t.col });
            }
        }
        Ok(GridPlan { n_rows, n_cols, cells, targets, params })
    }

    /// Every cell commands the same heading.
    pub fn uniform(
        n_rows: usize,
        n_cols: usize,
        theta_c: Angle,
        targets: impl IntoIterator<Item = CellIndex>,
        params: VehicleParams,
    ) -> Result<Self, PlanError> {
        Self::new(n_rows, n_cols, vec![Cell::Command(theta_c); n_rows * n_cols], targets, params)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    pub fn targets(&self) -> &BTreeSet<CellIndex> {
        &self.targets
    }

    pub fn cell(&self, c: CellIndex) -> Cell {
        self.cells[c.row * self.n_cols + c.col]
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellIndex, Cell)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, &cell)| (CellIndex::new(i / self.n_cols, i % self.n_cols), cell))
    }

    pub fn is_target(&self, c: CellIndex) -> bool {
        self.targets.contains(&c)
    }

    pub fn is_excluded(&self, c: CellIndex) -> bool {
        self.cell(c) == Cell::Excluded
    }

    /// Commanded heading; excluded cells report zero and are never simulated.
    pub fn command(&self, c: CellIndex) -> Angle {
        match self.cell(c) {
            Cell::Command(a) => a,
            Cell::Excluded => Angle::ZERO,
        }
    }

    pub fn neighbor(&self, c: CellIndex, border: Border) -> Option<CellIndex> {
        match border {
            Border::Bottom => c.row.checked_sub(1).map(|r| CellIndex::new(r, c.col)),
            Border::Top => (c.row + 1 < self.n_rows).then(|| CellIndex::new(c.row + 1, c.col)),
            Border::Left => c.col.checked_sub(1).map(|k| CellIndex::new(c.row, k)),
            Border::Right => (c.col + 1 < self.n_cols).then(|| CellIndex::new(c.row, c.col + 1)),
        }
    }

    pub fn origin(&self, c: CellIndex) -> Point2 {
        Point2::new(c.col as f64 * self.params.d, c.row as f64 * self.params.d)
    }

    /// Cell containing a world point; points on the top/right map edge
    /// belong to the last row/column.
    pub fn cell_containing(&self, p: Point2) -> Option<CellIndex> {
        let d = self.params.d;
        let locate = |v: f64, n: usize| -> Option<usize> {
            let k = (v / d).floor();
            if !(v >= 0.0) || !k.is_finite() {
                return None;
            }
            let k = k as usize;
            if k < n {
                Some(k)
            } else if v <= n as f64 * d {
                Some(n - 1)
            } else {
                None
            }
        };
        Some(CellIndex::new(locate(p.y, self.n_rows)?, locate(p.x, self.n_cols)?))
    }

    pub fn to_cell_local(&self, c: CellIndex, q: Configuration) -> Configuration {
        let o = self.origin(c);
        Configuration { x: q.x - o.x, y: q.y - o.y, theta: q.theta }
    }

    pub fn to_world(&self, c: CellIndex, q: Configuration) -> Configuration {
        let o = self.origin(c);
        Configuration { x: q.x + o.x, y: q.y + o.y, theta: q.theta }
    }

    /// Default cell-crossing budget for [`crate::kinematics::simulate_plan`].
    pub fn default_budget(&self) -> usize {
        4 * self.n_rows * self.n_cols
    }

    /// The plan rotated counter-clockwise by `k` quarter turns about the map
    /// center. Only square grids can be rotated by odd `k`.
    pub fn rotated(&self, k: u8) -> GridPlan {
        let k = k % 4;
        let (nr, nc) = if k % 2 == 1 { (self.n_cols, self.n_rows) } else { (self.n_rows, self.n_cols) };
        let map = |c: CellIndex| rotate_cell(c, k, self.n_rows, self.n_cols);
        let mut cells = vec![Cell::Excluded; nr * nc];
        for (idx, cell) in self.cells() {
            let m = map(idx);
            cells[m.row * nc + m.col] = match cell {
                Cell::Command(a) => Cell::Command(a.rotated(k as f64 * std::f64::consts::FRAC_PI_2)),
                Cell::Excluded => Cell::Excluded,
            };
        }
        GridPlan {
            n_rows: nr,
            n_cols: nc,
            cells,
            targets: self.targets.iter().map(|&t| map(t)).collect(),
            params: self.params,
        }
    }

    /// The plan mirrored across the vertical midline (`x → W − x`, `θ → π − θ`).
    pub fn mirrored(&self) -> GridPlan {
        let map = |c: CellIndex| CellIndex::new(c.row, self.n_cols - 1 - c.col);
        let mut cells = vec![Cell::Excluded; self.cells.len()];
        for (idx, cell) in self.cells() {
            let m = map(idx);
            cells[m.row * self.n_cols + m.col] = match cell {
                Cell::Command(a) => Cell::Command(Angle::new(std::f64::consts::PI - a.value())),
                Cell::Excluded => Cell::Excluded,
            };
        }
        GridPlan {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            cells,
            targets: self.targets.iter().map(|&t| map(t)).collect(),
            params: self.params,
        }
    }
}

/// Index of cell `c` after rotating an `n_rows × n_cols` grid by `k` quarter
/// turns counter-clockwise.
pub fn rotate_cell(c: CellIndex, k: u8, n_rows: usize, n_cols: usize) -> CellIndex {
    match k % 4 {
        0 => c,
        // (x, y) -> (H - y, x): new col = n_rows-1-row, new row = col
        1 => CellIndex::new(c.col, n_rows - 1 - c.row),
        2 => CellIndex::new(n_rows - 1 - c.row, n_cols - 1 - c.col),
        _ => CellIndex::new(n_cols - 1 - c.col, c.row),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VehicleParams {
        VehicleParams::unit_speed(1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_bad_plans() {
        let p = params();
        assert_eq!(
            GridPlan::uniform(2, 2, Angle::ZERO, [], p).unwrap_err(),
            PlanError::EmptyRegion
        );
        assert!(matches!(
            GridPlan::uniform(2, 2, Angle::ZERO, [CellIndex::new(2, 0)], p),
            Err(PlanError::OutOfRange { .. })
        ));
        let cells = vec![Cell::Excluded, Cell::Command(Angle::ZERO)];
        assert!(matches!(
            GridPlan::new(1, 2, cells, [CellIndex::new(0, 0)], p),
            Err(PlanError::ExcludedTarget { .. })
        ));
    }

    #[test]
    fn locate_cells() {
        let plan = GridPlan::uniform(3, 4, Angle::ZERO, [CellIndex::new(0, 0)], params()).unwrap();
        assert_eq!(plan.cell_containing(Point2::new(0.5, 2.5)), Some(CellIndex::new(2, 0)));
        assert_eq!(plan.cell_containing(Point2::new(4.0, 3.0)), Some(CellIndex::new(2, 3)));
        assert_eq!(plan.cell_containing(Point2::new(-0.1, 1.0)), None);
        assert_eq!(plan.neighbor(CellIndex::new(0, 0), Border::Bottom), None);
        assert_eq!(plan.neighbor(CellIndex::new(0, 0), Border::Top), Some(CellIndex::new(1, 0)));
    }

    #[test]
    fn four_rotations_are_identity() {
        let mut cells = Vec::new();
        for i in 0..12 {
            cells.push(if i == 5 { Cell::Excluded } else { Cell::Command(Angle::new(i as f64 * 0.3)) });
        }
        let plan = GridPlan::new(3, 4, cells, [CellIndex::new(2, 1)], params()).unwrap();
        let back = plan.rotated(1).rotated(1).rotated(1).rotated(1);
        assert_eq!(back.targets, plan.targets);
        for (c, cell) in plan.cells() {
            match (cell, back.cell(c)) {
                (Cell::Command(a), Cell::Command(b)) => assert!((a.value() - b.value()).abs() < 1e-12),
                (x, y) => assert_eq!(x, y),
            }
        }
    }
}
