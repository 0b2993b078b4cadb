//! Border bitmaps and the global backward fixed point.
//!
//! Every interior border of the grid carries an `m × m` bitmap over
//! (position along the border, heading in `[0, 2π)`). Borders next to a
//! region-of-interest cell start fully set; the expansion then propagates
//! sets through ordinary cells until a sweep adds nothing.
//!
//! Each (target border, via cell) pair is evaluated in a canonical frame in
//! which the target is the bottom border of the via cell. Bin indices are
//! mapped into that frame with integer arithmetic and the command is
//! quantized, so rotating a plan by quarter turns permutes the bitmaps
//! bit-exactly.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellular_backward::{theta_border_restricted, AngleIntervalSet};
use crate::geometry::{wrap_2pi, Angle, Border, CellFrame};
use crate::kinematics::{cell_exit_map, enters_cell, Configuration, KinematicsError};
use crate::plan::{CellIndex, GridPlan};

/// Dilation of the Θ prefilter, so the prefilter never rejects a bit the
/// exit map would accept.
pub const PREFILTER_DILATION: f64 = 1e-6;

/// Grid on which canonical commands are quantized (radians).
const COMMAND_QUANTUM: f64 = 1e-9;

const CRBM_MAGIC: &[u8; 4] = b"CRBM";
const CRBM_VERSION: u16 = 1;
const CRBM_HEADER: usize = 16;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("configuration ({x}, {y}) is outside the map")]
    OutsideMap { x: f64, y: f64 },
    #[error("border {0} does not exist in this grid")]
    UnknownBorder(BorderId),
    #[error("bitmap format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// An interior edge of the grid.
///
/// `Horizontal { row, col }` lies at `y = row·d` between cells
/// `(row − 1, col)` and `(row, col)`; `Vertical { row, col }` lies at
/// `x = col·d` between `(row, col − 1)` and `(row, col)`. Positions run
/// along +x (horizontal) or +y (vertical) from the edge's start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BorderId {
    pub orientation: Orientation,
    pub row: usize,
    pub col: usize,
}

impl std::fmt::Display for BorderId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let o = match self.orientation {
            Orientation::Horizontal => 'h',
            Orientation::Vertical => 'v',
        };
        write!(f, "{o}_{}_{}", self.row, self.col)
    }
}

impl BorderId {
    pub const fn horizontal(row: usize, col: usize) -> Self {
        BorderId { orientation: Orientation::Horizontal, row, col }
    }

    pub const fn vertical(row: usize, col: usize) -> Self {
        BorderId { orientation: Orientation::Vertical, row, col }
    }

    /// The interior border on side `side` of `cell`, if there is one.
    pub fn of_cell(cell: CellIndex, side: Border, n_rows: usize, n_cols: usize) -> Option<BorderId> {
        let (r, c) = (cell.row, cell.col);
        match side {
            Border::Bottom => (r >= 1).then(|| BorderId::horizontal(r, c)),
            Border::Top => (r + 1 < n_rows).then(|| BorderId::horizontal(r + 1, c)),
            Border::Left => (c >= 1).then(|| BorderId::vertical(r, c)),
            Border::Right => (c + 1 < n_cols).then(|| BorderId::vertical(r, c + 1)),
        }
    }

    /// The two cells sharing this border: (below, above) or (left, right).
    pub fn cells(&self) -> (CellIndex, CellIndex) {
        match self.orientation {
            Orientation::Horizontal => (CellIndex::new(self.row - 1, self.col), CellIndex::new(self.row, self.col)),
            Orientation::Vertical => (CellIndex::new(self.row, self.col - 1), CellIndex::new(self.row, self.col)),
        }
    }

    /// Side of `cell` on which this border lies.
    pub fn side_in(&self, cell: CellIndex) -> Option<Border> {
        let (a, b) = self.cells();
        match self.orientation {
            Orientation::Horizontal if cell == a => Some(Border::Top),
            Orientation::Horizontal if cell == b => Some(Border::Bottom),
            Orientation::Vertical if cell == a => Some(Border::Right),
            Orientation::Vertical if cell == b => Some(Border::Left),
            _ => None,
        }
    }

    pub fn file_name(&self) -> String {
        format!("b_{self}.crbm")
    }

    /// Image under a CCW quarter turn of an `n_rows × n_cols` grid, and
    /// whether the position axis is reversed.
    fn rotated_once(&self, n_rows: usize) -> (BorderId, bool) {
        match self.orientation {
            Orientation::Horizontal => (BorderId::vertical(self.col, n_rows - self.row), false),
            Orientation::Vertical => (BorderId::horizontal(self.col, n_rows - 1 - self.row), true),
        }
    }

    /// Image under `k` CCW quarter turns, and whether positions reverse.
    pub fn rotated(&self, k: u8, n_rows: usize, n_cols: usize) -> (BorderId, bool) {
        let (mut b, mut rev, mut nr, mut nc) = (*self, false, n_rows, n_cols);
        for _ in 0..k % 4 {
            let (nb, r) = b.rotated_once(nr);
            b = nb;
            rev ^= r;
            std::mem::swap(&mut nr, &mut nc);
        }
        (b, rev)
    }

    /// Image under the mirror `x → W − x`, and whether positions reverse.
    pub fn mirrored(&self, n_cols: usize) -> (BorderId, bool) {
        match self.orientation {
            Orientation::Horizontal => (BorderId::horizontal(self.row, n_cols - 1 - self.col), true),
            Orientation::Vertical => (BorderId::vertical(self.row, n_cols - self.col), false),
        }
    }
}

/// Interior borders of a grid in a fixed order: horizontal ones row by row,
/// then vertical ones.
pub fn interior_borders(n_rows: usize, n_cols: usize) -> Vec<BorderId> {
    let mut v = Vec::with_capacity(2 * n_rows * n_cols);
    for row in 1..n_rows {
        for col in 0..n_cols {
            v.push(BorderId::horizontal(row, col));
        }
    }
    for row in 0..n_rows {
        for col in 1..n_cols {
            v.push(BorderId::vertical(row, col));
        }
    }
    v
}

fn border_index(b: BorderId, n_rows: usize, n_cols: usize) -> Option<usize> {
    match b.orientation {
        Orientation::Horizontal => {
            (b.row >= 1 && b.row < n_rows && b.col < n_cols).then(|| (b.row - 1) * n_cols + b.col)
        }
        Orientation::Vertical => (b.row < n_rows && b.col >= 1 && b.col < n_cols)
            .then(|| (n_rows - 1) * n_cols + b.row * (n_cols - 1) + b.col - 1),
    }
}

/// `m_pos × m_theta` bit grid. Bit `(i, j)` covers position bin `i` and
/// heading bin `j` of `[0, 2π)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BorderBitmap {
    m_pos: usize,
    m_theta: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BorderBitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BorderBitmap({}x{}, {} set)", self.m_pos, self.m_theta, self.count_ones())
    }
}

impl BorderBitmap {
    pub fn empty(m_pos: usize, m_theta: usize) -> Self {
        let words_per_row = m_theta.div_ceil(64);
        BorderBitmap { m_pos, m_theta, words_per_row, words: vec![0; words_per_row * m_pos] }
    }

    pub fn full(m_pos: usize, m_theta: usize) -> Self {
        let mut b = Self::empty(m_pos, m_theta);
        for i in 0..m_pos {
            for j in 0..m_theta {
                b.set(i, j);
            }
        }
        b
    }

    pub fn m_pos(&self) -> usize {
        self.m_pos
    }

    pub fn m_theta(&self) -> usize {
        self.m_theta
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.words[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.words[i * self.words_per_row + j / 64] |= 1 << (j % 64);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count_ones() == (self.m_pos * self.m_theta) as u64
    }

    /// Every bit set here is also set in `other`.
    pub fn is_subset_of(&self, other: &BorderBitmap) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &BorderBitmap) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Whether any bit within one bin of `(i, j)` differs from it. Headings
    /// wrap; positions do not.
    pub fn near_boundary(&self, i: usize, j: usize) -> bool {
        let v = self.get(i, j);
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.m_pos - 1);
        (lo..=hi).any(|ii| {
            [self.m_theta - 1, 0, 1].iter().any(|&dj| self.get(ii, (j + dj) % self.m_theta) != v)
        })
    }

    /// Bitmap with bits moved by index maps (used for symmetry checks).
    pub fn permuted(&self, pos: impl Fn(usize) -> usize, head: impl Fn(usize) -> usize) -> BorderBitmap {
        let mut out = BorderBitmap::empty(self.m_pos, self.m_theta);
        for i in 0..self.m_pos {
            for j in 0..self.m_theta {
                if self.get(i, j) {
                    out.set(pos(i), head(j));
                }
            }
        }
        out
    }

    /// Serialized `.crbm` bytes: 16-byte header then rows packed MSB-first,
    /// each row padded to a whole byte.
    pub fn to_crbm(&self) -> Vec<u8> {
        let row_bytes = self.m_theta.div_ceil(8);
        let mut out = Vec::with_capacity(CRBM_HEADER + row_bytes * self.m_pos);
        out.extend_from_slice(CRBM_MAGIC);
        out.extend_from_slice(&CRBM_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.m_pos as u32).to_le_bytes());
        out.extend_from_slice(&(self.m_theta as u32).to_le_bytes());
        out.extend_from_slice(&[0, 0]);
        for i in 0..self.m_pos {
            let mut row = vec![0u8; row_bytes];
            for j in 0..self.m_theta {
                if self.get(i, j) {
                    row[j / 8] |= 0x80 >> (j % 8);
                }
            }
            out.extend_from_slice(&row);
        }
        out
    }

    pub fn from_crbm(bytes: &[u8]) -> Result<BorderBitmap, PropagationError> {
        if bytes.len() < CRBM_HEADER || &bytes[..4] != CRBM_MAGIC {
            return Err(PropagationError::Format("missing CRBM header".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != CRBM_VERSION {
            return Err(PropagationError::Format(format!("unsupported version {version}")));
        }
        let m_pos = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let m_theta = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let row_bytes = m_theta.div_ceil(8);
        let body = &bytes[CRBM_HEADER..];
        if body.len() != row_bytes * m_pos {
            return Err(PropagationError::Format(format!(
                "expected {} payload bytes, found {}",
                row_bytes * m_pos,
                body.len()
            )));
        }
        let mut b = BorderBitmap::empty(m_pos, m_theta);
        for i in 0..m_pos {
            for j in 0..m_theta {
                if body[i * row_bytes + j / 8] & (0x80 >> (j % 8)) != 0 {
                    b.set(i, j);
                }
            }
        }
        Ok(b)
    }

    pub fn write_crbm(&self, path: &Path) -> Result<(), PropagationError> {
        std::fs::File::create(path)?.write_all(&self.to_crbm())?;
        Ok(())
    }

    pub fn read_crbm(path: &Path) -> Result<BorderBitmap, PropagationError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_crbm(&bytes)
    }
}

/// Bitmaps of every interior border plus run statistics.
#[derive(Debug, Clone)]
pub struct ReachabilityResult {
    pub m: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    pub borders: Vec<BorderId>,
    pub bitmaps: Vec<BorderBitmap>,
    /// Completed sweeps, including the final one that added nothing.
    pub iterations: usize,
    pub marked_bits: u64,
    /// Marked bits after initialization and after every sweep.
    pub history: Vec<u64>,
    pub wall_time: Duration,
}

impl ReachabilityResult {
    pub fn index_of(&self, b: BorderId) -> Option<usize> {
        border_index(b, self.n_rows, self.n_cols)
    }

    pub fn bitmap(&self, b: BorderId) -> Option<&BorderBitmap> {
        self.index_of(b).map(|i| &self.bitmaps[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (BorderId, &BorderBitmap)> {
        self.borders.iter().copied().zip(&self.bitmaps)
    }

    /// The result expected for the plan rotated by `k` CCW quarter turns.
    /// Requires `m` divisible by 4 so heading bins map onto heading bins.
    pub fn rotated(&self, k: u8) -> ReachabilityResult {
        assert!(self.m.is_multiple_of(4), "rotation needs m divisible by 4");
        let (nr, nc) = if k % 2 == 1 { (self.n_cols, self.n_rows) } else { (self.n_rows, self.n_cols) };
        let m = self.m;
        let shift = (k as usize % 4) * m / 4;
        self.remapped(nr, nc, |b| b.rotated(k, self.n_rows, self.n_cols), move |j| (j + shift) % m)
    }

    /// The result expected for the plan mirrored by `x → W − x`. Requires
    /// even `m`.
    pub fn mirrored(&self) -> ReachabilityResult {
        assert!(self.m.is_multiple_of(2), "mirroring needs even m");
        let m = self.m;
        self.remapped(self.n_rows, self.n_cols, |b| b.mirrored(self.n_cols), move |j| (m + m / 2 - 1 - j) % m)
    }

    fn remapped(
        &self,
        nr: usize,
        nc: usize,
        map: impl Fn(&BorderId) -> (BorderId, bool),
        head: impl Fn(usize) -> usize + Copy,
    ) -> ReachabilityResult {
        let m = self.m;
        let borders = interior_borders(nr, nc);
        let mut bitmaps = vec![BorderBitmap::empty(m, m); borders.len()];
        for (b, bm) in self.iter() {
            let (nb, rev) = map(&b);
            let idx = border_index(nb, nr, nc).expect("mapped border is interior");
            bitmaps[idx] = bm.permuted(|i| if rev { m - 1 - i } else { i }, head);
        }
        ReachabilityResult { n_rows: nr, n_cols: nc, borders, bitmaps, ..self.clone() }
    }
}

/// Bit counts `(border encoding, dense 3-D grid)` for an `n × n` map at
/// resolution `m`.
pub fn storage_bits(n: u64, m: u64) -> (u128, u128) {
    let (n, m) = (n as u128, m as u128);
    (m * m * 2 * n * n.saturating_sub(1), m * m * m * n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    /// Skip bits outside the dilated Θ set before running the exit map.
    pub prefilter: bool,
    /// Shuffle the order in which (target, via cell) pairs are visited.
    pub order_seed: Option<u64>,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { threads: None, prefilter: true, order_seed: None }
    }
}

fn check_resolution(m: usize) -> Result<(), PropagationError> {
    if m < 2 {
        return Err(PropagationError::InvalidPlan(format!("resolution m = {m} must be at least 2")));
    }
    Ok(())
}

fn touches_target(b: BorderId, plan: &GridPlan) -> bool {
    let (a, c) = b.cells();
    plan.is_target(a) || plan.is_target(c)
}

/// Iteration-0 state: borders adjacent to a region-of-interest cell are
/// fully set, all others empty.
pub fn init_from_region(plan: &GridPlan, m: usize) -> Result<ReachabilityResult, PropagationError> {
    check_resolution(m)?;
    if plan.targets().is_empty() {
        return Err(PropagationError::InvalidPlan("region of interest is empty".into()));
    }
    let borders = interior_borders(plan.n_rows(), plan.n_cols());
    let bitmaps: Vec<BorderBitmap> = borders
        .iter()
        .map(|&b| if touches_target(b, plan) { BorderBitmap::full(m, m) } else { BorderBitmap::empty(m, m) })
        .collect();
    let marked: u64 = bitmaps.iter().map(BorderBitmap::count_ones).sum();
    Ok(ReachabilityResult {
        m,
        n_rows: plan.n_rows(),
        n_cols: plan.n_cols(),
        borders,
        bitmaps,
        iterations: 0,
        marked_bits: marked,
        history: vec![marked],
        wall_time: Duration::ZERO,
    })
}

fn usable_via(cell: CellIndex, plan: &GridPlan) -> bool {
    !plan.is_excluded(cell) && !plan.is_target(cell)
}

/// The `(target, via cell)` pairs a border's set propagates to: the other
/// three borders of each adjacent cell. Via cells that are excluded or in
/// the region of interest are skipped, as are targets on the map edge or
/// next to the region of interest.
pub fn six_neighbors(border: BorderId, plan: &GridPlan) -> Vec<(BorderId, CellIndex)> {
    let (a, b) = border.cells();
    let mut out = Vec::with_capacity(6);
    for cell in [a, b] {
        if !usable_via(cell, plan) {
            continue;
        }
        for side in Border::ALL {
            let Some(t) = BorderId::of_cell(cell, side, plan.n_rows(), plan.n_cols()) else { continue };
            if t != border && !touches_target(t, plan) {
                out.push((t, cell));
            }
        }
    }
    out
}

/// Maps between world bins of a border seen from a cell and the canonical
/// frame in which the target border is the cell's bottom.
#[derive(Debug, Clone, Copy)]
struct Canonical {
    frame: CellFrame,
    m: usize,
    d: f64,
}

impl Canonical {
    fn new(target_side: Border, m: usize, d: f64) -> Self {
        let k = (target_side.quarter_turns_to_top() + 2) % 4;
        Canonical { frame: CellFrame::new(d, k), m, d }
    }

    fn k(&self) -> u8 {
        self.frame.quarter_turns()
    }

    /// Whether the canonical coordinate along local border `local` runs
    /// against the world coordinate of the same edge.
    fn reversed(&self, local: Border) -> bool {
        let world = self.frame.border_to_world(local);
        let a = self.frame.point_to_local(world.point_at(0.0, self.d));
        let b = self.frame.point_to_local(world.point_at(self.d, self.d));
        local.coordinate_of(b) < local.coordinate_of(a)
    }

    fn pos_to_canonical(&self, i: usize, local: Border) -> usize {
        if self.reversed(local) { self.m - 1 - i } else { i }
    }

    fn heading_to_canonical(&self, j: usize) -> f64 {
        let m = self.m;
        if m.is_multiple_of(4) {
            let jc = (j + self.k() as usize * m / 4) % m;
            (jc as f64 + 0.5) * TAU / m as f64
        } else {
            self.frame.angle_to_local(heading_center(j, m))
        }
    }

    fn heading_to_world(&self, theta: f64) -> usize {
        let m = self.m;
        if m.is_multiple_of(4) {
            let jc = heading_bin(theta, m);
            (jc + m - self.k() as usize * m / 4) % m
        } else {
            heading_bin(self.frame.angle_to_world(theta), m)
        }
    }

    fn command(&self, theta_c: Angle) -> Angle {
        let a = self.frame.angle_to_local(theta_c.value());
        Angle::new((a / COMMAND_QUANTUM).round() * COMMAND_QUANTUM)
    }
}

fn heading_center(j: usize, m: usize) -> f64 {
    (j as f64 + 0.5) * TAU / m as f64
}

/// Half-open heading bin of an angle in `[0, 2π)`.
pub fn heading_bin(theta: f64, m: usize) -> usize {
    ((wrap_2pi(theta) / TAU * m as f64).floor() as usize).min(m - 1)
}

/// Half-open position bin along a border of length `d`, last bin closed.
pub fn position_bin(s: f64, d: f64, m: usize) -> usize {
    ((s / d * m as f64).floor().max(0.0) as usize).min(m - 1)
}

/// Computes which unset bits of `target` (entering `via`) become set. When
/// `only_source` is given, exits through any other border are ignored.
fn propagate_pair(
    target: BorderId,
    via: CellIndex,
    snapshot: &ReachabilityResult,
    plan: &GridPlan,
    only_source: Option<BorderId>,
    prefilter: bool,
) -> Vec<(usize, usize)> {
    let params = plan.params();
    let (d, m) = (params.d, snapshot.m);
    let Some(target_side) = target.side_in(via) else { return Vec::new() };
    let Some(ti) = snapshot.index_of(target) else { return Vec::new() };
    let canon = Canonical::new(target_side, m, d);
    let theta_c = canon.command(plan.command(via));
    let current = &snapshot.bitmaps[ti];

    // canonical exit border -> bitmap index, when it can contribute
    let mut sources: [Option<usize>; 4] = [None; 4];
    // the bottom slot is the target itself: trajectories that turn around
    // inside the via cell and leave through the border they entered
    for (slot, local) in Border::ALL.iter().enumerate() {
        let world = canon.frame.border_to_world(*local);
        let Some(b) = BorderId::of_cell(via, world, plan.n_rows(), plan.n_cols()) else { continue };
        if only_source.is_some_and(|s| s != b) {
            continue;
        }
        if let Some(idx) = snapshot.index_of(b) {
            if !snapshot.bitmaps[idx].is_empty() {
                sources[slot] = Some(idx);
            }
        }
    }
    if sources.iter().all(Option::is_none) {
        return Vec::new();
    }
    let reversed: [bool; 4] = Border::ALL.map(|b| canon.reversed(b));

    let mut out = Vec::new();
    for i in 0..m {
        let ic = canon.pos_to_canonical(i, Border::Bottom);
        let s = (ic as f64 + 0.5) * d / m as f64;
        let filters: Option<Vec<AngleIntervalSet>> = prefilter.then(|| {
            Border::ALL
                .iter()
                .zip(&sources)
                .filter(|(_, src)| src.is_some())
                .map(|(local, _)| {
                    theta_border_restricted(s, Border::Bottom, *local, theta_c, params)
                        .unwrap_or_else(|_| AngleIntervalSet::full())
                })
                .collect()
        });
        for j in 0..m {
            if current.get(i, j) {
                continue;
            }
            let theta = canon.heading_to_canonical(j);
            if let Some(f) = &filters {
                if !f.iter().any(|set| set.contains_dilated(theta, PREFILTER_DILATION)) {
                    continue;
                }
            }
            if !enters_cell(Border::Bottom, Angle::new(theta), theta_c) {
                continue;
            }
            let Ok(exit) = cell_exit_map(Configuration::new(s, 0.0, theta), theta_c, params) else { continue };
            let slot = exit.exit_border as usize;
            let Some(src) = sources[slot] else { continue };
            let sc = exit.exit_border.coordinate_of(exit.exit_config.position());
            let mut si = position_bin(sc, d, m);
            if reversed[slot] {
                si = m - 1 - si;
            }
            let sj = canon.heading_to_world(exit.exit_config.theta.value());
            if snapshot.bitmaps[src].get(si, sj) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Propagates the set of `source` to `target` through `via_cell`, returning
/// the updated target bitmap. Bits are only ever added. `source == target`
/// covers trajectories that turn around inside `via_cell`.
pub fn propagate_border(
    source: BorderId,
    target: BorderId,
    via_cell: CellIndex,
    state: &ReachabilityResult,
    plan: &GridPlan,
    prefilter: bool,
) -> Result<BorderBitmap, PropagationError> {
    let ti = state.index_of(target).ok_or(PropagationError::UnknownBorder(target))?;
    state.index_of(source).ok_or(PropagationError::UnknownBorder(source))?;
    let mut out = state.bitmaps[ti].clone();
    for (i, j) in propagate_pair(target, via_cell, state, plan, Some(source), prefilter) {
        out.set(i, j);
    }
    Ok(out)
}

/// Runs Algorithm-1 style sweeps until a fixed point. Every sweep reads a
/// frozen snapshot of the previous one (Jacobi), so the result does not
/// depend on visit order or thread schedule. Besides the six-neighbor pairs,
/// each border also propagates to itself through both adjacent cells.
pub fn iterative_border_expansion(
    plan: &GridPlan,
    m: usize,
    options: ExpansionOptions,
) -> Result<ReachabilityResult, PropagationError> {
    let start = Instant::now();
    let mut state = init_from_region(plan, m)?;
    let pool = match options.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| PropagationError::InvalidPlan(format!("thread pool: {e}")))?,
        ),
        None => None,
    };

    // (target, via) pairs; each is revisited when a border of its via cell changed
    let mut pairs: BTreeSet<(BorderId, CellIndex)> = BTreeSet::new();
    for &b in &state.borders {
        for p in six_neighbors(b, plan) {
            pairs.insert(p);
        }
        if !touches_target(b, plan) {
            let (a, c) = b.cells();
            pairs.extend([a, c].into_iter().filter(|&v| usable_via(v, plan)).map(|v| (b, v)));
        }
    }
    let mut rng = options.order_seed.map(ChaCha8Rng::seed_from_u64);
    let mut changed: BTreeSet<BorderId> = state.iter().filter(|(_, bm)| !bm.is_empty()).map(|(b, _)| b).collect();

    loop {
        let mut work: Vec<(BorderId, CellIndex)> = pairs
            .iter()
            .copied()
            .filter(|&(_, via)| {
                Border::ALL.iter().any(|&side| {
                    BorderId::of_cell(via, side, plan.n_rows(), plan.n_cols()).is_some_and(|b| changed.contains(&b))
                })
            })
            .collect();
        if let Some(rng) = rng.as_mut() {
            work.shuffle(rng);
        }
        let snapshot = &state;
        let run = || -> Vec<(BorderId, Vec<(usize, usize)>)> {
            work.par_iter()
                .map(|&(t, via)| (t, propagate_pair(t, via, snapshot, plan, None, options.prefilter)))
                .collect()
        };
        let results = match &pool {
            Some(p) => p.install(run),
            None => run(),
        };
        let mut next = state.bitmaps.clone();
        let mut now_changed = BTreeSet::new();
        for (t, bits) in results {
            if bits.is_empty() {
                continue;
            }
            let idx = state.index_of(t).expect("target is interior");
            for (i, j) in bits {
                next[idx].set(i, j);
            }
            now_changed.insert(t);
        }
        state.bitmaps = next;
        state.iterations += 1;
        let marked: u64 = state.bitmaps.iter().map(BorderBitmap::count_ones).sum();
        state.history.push(marked);
        log::debug!("sweep {}: {} bits marked, {} borders grew", state.iterations, marked, now_changed.len());
        let grew = marked > state.marked_bits;
        state.marked_bits = marked;
        if !grew {
            break;
        }
        changed = now_changed;
    }
    state.wall_time = start.elapsed();
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Reachable,
    NotReachableAtResolution,
}

/// Where a queried trajectory leaves its cell and how it was decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QueryBasis {
    InsideRegion,
    EntersRegion,
    LeavesMap,
    ExcludedCell,
    Bit { border: BorderId, pos_bin: usize, heading_bin: usize, near_boundary: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub verdict: Verdict,
    pub cell: CellIndex,
    pub basis: QueryBasis,
}

/// Classifies a world configuration with the border bitmaps: one exit-map
/// evaluation in its cell, then a bit lookup.
pub fn query_configuration(
    q: Configuration,
    result: &ReachabilityResult,
    plan: &GridPlan,
) -> Result<QueryOutcome, PropagationError> {
    let cell = plan.cell_containing(q.position()).ok_or(PropagationError::OutsideMap { x: q.x, y: q.y })?;
    let done = |verdict, basis| Ok(QueryOutcome { verdict, cell, basis });
    if plan.is_target(cell) {
        return done(Verdict::Reachable, QueryBasis::InsideRegion);
    }
    if plan.is_excluded(cell) {
        return done(Verdict::NotReachableAtResolution, QueryBasis::ExcludedCell);
    }
    let params = plan.params();
    let exit = cell_exit_map(plan.to_cell_local(cell, q), plan.command(cell), params)?;
    let Some(next) = plan.neighbor(cell, exit.exit_border) else {
        return done(Verdict::NotReachableAtResolution, QueryBasis::LeavesMap);
    };
    if plan.is_target(next) {
        return done(Verdict::Reachable, QueryBasis::EntersRegion);
    }
    let border = BorderId::of_cell(cell, exit.exit_border, plan.n_rows(), plan.n_cols())
        .expect("a border with a neighbor is interior");
    let bm = result.bitmap(border).ok_or(PropagationError::UnknownBorder(border))?;
    let s = exit.exit_border.coordinate_of(exit.exit_config.position());
    let pos_bin = position_bin(s, params.d, result.m);
    let hb = heading_bin(exit.exit_config.theta.value(), result.m);
    let verdict = if bm.get(pos_bin, hb) { Verdict::Reachable } else { Verdict::NotReachableAtResolution };
    done(verdict, QueryBasis::Bit { border, pos_bin, heading_bin: hb, near_boundary: bm.near_boundary(pos_bin, hb) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::VehicleParams;
    use std::f64::consts::FRAC_PI_2;

    fn corridor(n: usize) -> GridPlan {
        let p = VehicleParams::unit_speed(1.0, 2.0).unwrap();
        let targets: Vec<CellIndex> = (0..n).map(|c| CellIndex::new(n - 1, c)).collect();
        GridPlan::uniform(n, n, Angle::new(FRAC_PI_2), targets, p).unwrap()
    }

    #[test]
    fn border_counts_and_indices() {
        let b = interior_borders(5, 5);
        assert_eq!(b.len(), 40);
        for (k, id) in b.iter().enumerate() {
            assert_eq!(border_index(*id, 5, 5), Some(k));
        }
        let b = interior_borders(3, 4);
        for (k, id) in b.iter().enumerate() {
            assert_eq!(border_index(*id, 3, 4), Some(k));
        }
    }

    #[test]
    fn storage_model() {
        assert_eq!(storage_bits(20, 200), (30_400_000, 3_200_000_000));
        assert_eq!(storage_bits(1, 7), (0, 343));
        assert_eq!(storage_bits(6, 1), (60, 36));
    }

    #[test]
    fn crbm_round_trip() {
        let mut b = BorderBitmap::empty(5, 13);
        b.set(0, 0);
        b.set(4, 12);
        b.set(2, 7);
        let bytes = b.to_crbm();
        assert_eq!(bytes.len(), 16 + 5 * 2);
        assert_eq!(&bytes[..4], b"CRBM");
        assert_eq!(BorderBitmap::from_crbm(&bytes).unwrap(), b);
        assert!(BorderBitmap::from_crbm(&bytes[..20]).is_err());
    }

    #[test]
    fn single_target_sets_four_borders() {
        let p = VehicleParams::unit_speed(1.0, 2.0).unwrap();
        let plan = GridPlan::uniform(3, 3, Angle::ZERO, [CellIndex::new(1, 1)], p).unwrap();
        let r = init_from_region(&plan, 8).unwrap();
        assert_eq!(r.bitmaps.iter().filter(|b| b.is_full()).count(), 4);
        assert_eq!(r.marked_bits, 4 * 64);
    }

    #[test]
    fn neighbor_counts() {
        let p = VehicleParams::unit_speed(1.0, 2.0).unwrap();
        let plan = GridPlan::uniform(5, 5, Angle::ZERO, [CellIndex::new(4, 4)], p).unwrap();
        assert_eq!(six_neighbors(BorderId::horizontal(2, 2), &plan).len(), 6);
        // bottom-row border: the map edge removes the bottom borders of both cells
        assert_eq!(six_neighbors(BorderId::vertical(0, 1), &plan).len(), 3);
        // next to the target: its cell contributes nothing
        let n = six_neighbors(BorderId::horizontal(4, 4), &plan);
        assert_eq!(n.len(), 2);
        assert!(n.iter().all(|&(_, c)| c == CellIndex::new(3, 4)));
    }

    #[test]
    fn corridor_chains_straight_paths() {
        let plan = corridor(4);
        // m = 18 puts π/2 at a bin center
        let r = iterative_border_expansion(&plan, 18, ExpansionOptions::default()).unwrap();
        let j = heading_bin(FRAC_PI_2, 18);
        assert_eq!(j, 4);
        for row in 1..3 {
            for col in 0..4 {
                let bm = r.bitmap(BorderId::horizontal(row, col)).unwrap();
                for i in 0..18 {
                    assert!(bm.get(i, j), "h_{row}_{col} bit ({i}, {j})");
                }
            }
        }
        assert!(r.history.windows(2).all(|w| w[0] <= w[1]));
    }
}
