//! Plan files, verification artifacts, renderings and the oracle
//! cross-check behind the `curvereach` binary.
//!
//! Plan file format (line based, `#` starts a comment):
//!
//! ```text
//! d 1.0
//! r 2.0
//! v 1.0            # optional, defaults to 1
//! grid 5 5         # rows cols
//! m 200            # optional default resolution
//! target 4 2       # one line per region-of-interest cell (row col)
//! cells            # then one line per row, top row first
//! 90 90 90 90 90
//! 90 X  90 90 90   # headings in degrees, X marks an excluded cell
//! ...
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Angle;
use crate::kinematics::{simulate_plan, Configuration, KinematicsError, PlanOutcome, VehicleParams};
use crate::plan::{Cell, CellIndex, GridPlan, PlanError};
use crate::propagation::{
    interior_borders, iterative_border_expansion, query_configuration, BorderBitmap, BorderId, ExpansionOptions,
    Orientation, PropagationError, QueryBasis, QueryOutcome, ReachabilityResult, Verdict,
};

/// Name of the plan copy written next to the bitmaps.
pub const PLAN_COPY: &str = "plan.txt";
pub const SUMMARY_FILE: &str = "summary.json";
/// Slice supersampling per cell.
pub const DEFAULT_SLICE_K: usize = 16;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{col}: {msg}")]
    Parse { path: String, line: usize, col: usize, msg: String },
    #[error("invalid plan: {0}")]
    Invariant(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("{0}")]
    Usage(String),
    #[error("oracle agreement {agreement:.4} is below the threshold {threshold:.4}")]
    Threshold { agreement: f64, threshold: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::MissingArtifact(_) | CliError::Usage(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Threshold { .. } => 4,
            CliError::Io(_) | CliError::Propagation(_) => 1,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::Invariant(e.to_string())
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        CliError::Invariant(e.to_string())
    }
}

/// Parsed plan file. Headings are degrees in `[0, 360)`, row-major with
/// row 0 at the bottom; `None` marks an excluded cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanFile {
    pub d: f64,
    pub r: f64,
    pub v: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub m: Option<usize>,
    pub targets: Vec<CellIndex>,
    pub headings: Vec<Option<f64>>,
}

struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(line: &str) -> Vec<Tok<'_>> {
    let line = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Tok { text: &line[s..i], col: line[..s].chars().count() + 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &line[s..], col: line[..s].chars().count() + 1 });
    }
    out
}

fn normalize_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w == 360.0 { 0.0 } else { w }
}

impl PlanFile {
    pub fn parse(text: &str, path: &str) -> Result<PlanFile, CliError> {
        let err = |line: usize, col: usize, msg: String| CliError::Parse { path: path.to_string(), line, col, msg };
        let (mut d, mut r, mut v, mut grid, mut m) = (None, None, None, None, None);
        let mut targets = Vec::new();
        let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
        let mut in_cells = false;
        let mut last_line = 0;

        fn num<T: std::str::FromStr>(t: &Tok, what: &str, line: usize, path: &str) -> Result<T, CliError> {
            t.text.parse().map_err(|_| CliError::Parse {
                path: path.to_string(),
                line,
                col: t.col,
                msg: format!("expected {what}, found `{}`", t.text),
            })
        }

        for (ln, raw) in text.lines().enumerate() {
            let ln = ln + 1;
            last_line = ln;
            let toks = tokens(raw);
            let Some(first) = toks.first() else { continue };
            if in_cells {
                let Some((_, n_cols)) = grid else { unreachable!("cells block requires grid") };
                if toks.len() != n_cols {
                    return Err(err(ln, first.col, format!("expected {n_cols} cells in this row, found {}", toks.len())));
                }
                let mut row = Vec::with_capacity(n_cols);
                for t in &toks {
                    if t.text.eq_ignore_ascii_case("x") {
                        row.push(None);
                    } else {
                        let deg: f64 = num(t, "a heading in degrees or X", ln, path)?;
                        if !deg.is_finite() {
                            return Err(err(ln, t.col, "heading must be finite".into()));
                        }
                        row.push(Some(normalize_degrees(deg)));
                    }
                }
                rows.push(row);
                if rows.len() == grid.unwrap().0 {
                    in_cells = false;
                }
                continue;
            }
            let args = &toks[1..];
            let want = |n: usize| -> Result<(), CliError> {
                if args.len() != n {
                    let col = args.get(n).map_or(first.col, |t| t.col);
                    return Err(err(ln, col, format!("`{}` takes {n} value(s), found {}", first.text, args.len())));
                }
                Ok(())
            };
            match first.text {
                "d" | "r" | "v" => {
                    want(1)?;
                    let x: f64 = num(&args[0], "a number", ln, path)?;
                    if !(x.is_finite() && x > 0.0) {
                        return Err(err(ln, args[0].col, format!("`{}` must be positive", first.text)));
                    }
                    *match first.text {
                        "d" => &mut d,
                        "r" => &mut r,
                        _ => &mut v,
                    } = Some(x);
                }
                "grid" => {
                    want(2)?;
                    let nr: usize = num(&args[0], "a row count", ln, path)?;
                    let nc: usize = num(&args[1], "a column count", ln, path)?;
                    if nr == 0 || nc == 0 {
                        return Err(err(ln, args[0].col, "grid dimensions must be positive".into()));
                    }
                    grid = Some((nr, nc));
                }
                "m" => {
                    want(1)?;
                    m = Some(num(&args[0], "a resolution", ln, path)?);
                }
                "target" => {
                    want(2)?;
                    let row = num(&args[0], "a row index", ln, path)?;
                    let col = num(&args[1], "a column index", ln, path)?;
                    targets.push(CellIndex::new(row, col));
                }
                "cells" => {
                    want(0)?;
                    if grid.is_none() {
                        return Err(err(ln, first.col, "`grid` must come before `cells`".into()));
                    }
                    if !rows.is_empty() {
                        return Err(err(ln, first.col, "duplicate `cells` block".into()));
                    }
                    in_cells = true;
                }
                other => return Err(err(ln, first.col, format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| err(last_line.max(1), 1, format!("missing `{what}`"));
        let (n_rows, n_cols) = grid.ok_or_else(|| missing("grid"))?;
        if rows.len() != n_rows {
            return Err(err(last_line.max(1), 1, format!("expected {n_rows} cell rows, found {}", rows.len())));
        }
        // file lists the top row first
        let headings = rows.into_iter().rev().flatten().collect();
        Ok(PlanFile {
            d: d.ok_or_else(|| missing("d"))?,
            r: r.ok_or_else(|| missing("r"))?,
            v: v.unwrap_or(1.0),
            n_rows,
            n_cols,
            m,
            targets,
            headings,
        })
    }

    pub fn read(path: &Path) -> Result<PlanFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_plan(&self) -> Result<GridPlan, CliError> {
        let params = VehicleParams::new(self.d, self.r, self.v)?;
        let cells = self
            .headings
            .iter()
            .map(|h| h.map_or(Cell::Excluded, |deg| Cell::Command(Angle::from_degrees(deg))))
            .collect();
        Ok(GridPlan::new(self.n_rows, self.n_cols, cells, self.targets.iter().copied(), params)?)
    }

    pub fn from_plan(plan: &GridPlan, m: Option<usize>) -> PlanFile {
        let p = plan.params();
        PlanFile {
            d: p.d,
            r: p.r,
            v: p.v,
            n_rows: plan.n_rows(),
            n_cols: plan.n_cols(),
            m,
            targets: plan.targets().iter().copied().collect(),
            headings: plan
                .cells()
                .map(|(_, c)| match c {
                    Cell::Command(a) => Some(normalize_degrees(a.degrees())),
                    Cell::Excluded => None,
                })
                .collect(),
        }
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "d {}\nr {}\nv {}\ngrid {} {}", self.d, self.r, self.v, self.n_rows, self.n_cols);
        if let Some(m) = self.m {
            let _ = writeln!(s, "m {m}");
        }
        let mut targets = self.targets.clone();
        targets.sort();
        targets.dedup();
        for t in targets {
            let _ = writeln!(s, "target {} {}", t.row, t.col);
        }
        s.push_str("cells\n");
        for row in (0..self.n_rows).rev() {
            let line: Vec<String> = self.headings[row * self.n_cols..(row + 1) * self.n_cols]
                .iter()
                .map(|h| h.map_or_else(|| "X".to_string(), |deg| format!("{deg}")))
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderSummary {
    pub border: String,
    pub marked_bits: u64,
    pub coverage: f64,
}

/// Result of a verification run. The wall time is reported separately from
/// the written summary so that reruns produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub d: f64,
    pub r: f64,
    pub v: f64,
    pub omega: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub m: usize,
    pub iterations: usize,
    pub marked_bits: u64,
    pub history: Vec<u64>,
    pub coverage: f64,
    pub borders: Vec<BorderSummary>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunSummary {
    pub fn new(plan: &GridPlan, result: &ReachabilityResult) -> Self {
        let p = plan.params();
        let per = (result.m * result.m) as f64;
        let borders: Vec<BorderSummary> = result
            .iter()
            .map(|(b, bm)| {
                let n = bm.count_ones();
                BorderSummary { border: b.to_string(), marked_bits: n, coverage: n as f64 / per }
            })
            .collect();
        let total = per * borders.len() as f64;
        RunSummary {
            d: p.d,
            r: p.r,
            v: p.v,
            omega: p.omega,
            n_rows: plan.n_rows(),
            n_cols: plan.n_cols(),
            m: result.m,
            iterations: result.iterations,
            marked_bits: result.marked_bits,
            history: result.history.clone(),
            coverage: if total > 0.0 { result.marked_bits as f64 / total } else { 0.0 },
            borders,
            wall_time: result.wall_time,
        }
    }
}

fn resolution(cli_m: Option<usize>, file: &PlanFile) -> Result<usize, CliError> {
    let m = cli_m.or(file.m).unwrap_or(200);
    if m < 2 {
        return Err(CliError::Usage(format!("resolution m = {m} must be at least 2")));
    }
    Ok(m)
}

/// Runs the expansion and writes one `.crbm` per interior border, the
/// summary and a copy of the plan into `out_dir`.
pub fn cmd_verify(plan_path: &Path, out_dir: &Path, m: Option<usize>, threads: Option<usize>) -> Result<RunSummary, CliError> {
    let file = PlanFile::read(plan_path)?;
    let plan = file.to_plan()?;
    let m = resolution(m, &file)?;
    let result = iterative_border_expansion(&plan, m, ExpansionOptions { threads, ..Default::default() })?;
    std::fs::create_dir_all(out_dir)?;
    for (b, bm) in result.iter() {
        bm.write_crbm(&out_dir.join(b.file_name()))?;
    }
    let summary = RunSummary::new(&plan, &result);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.into()))?;
    std::fs::write(out_dir.join(SUMMARY_FILE), json + "\n")?;
    std::fs::write(out_dir.join(PLAN_COPY), PlanFile::from_plan(&plan, Some(m)).serialize())?;
    log::info!("verified {} borders in {:?}", result.borders.len(), result.wall_time);
    Ok(summary)
}

/// Plan stored with the artifacts, or the explicit override.
fn artifact_plan(out_dir: &Path, plan_path: Option<&Path>) -> Result<GridPlan, CliError> {
    let path: PathBuf = plan_path.map_or_else(|| out_dir.join(PLAN_COPY), Path::to_path_buf);
    PlanFile::read(&path)?.to_plan()
}

/// Loads the bitmaps written by [`cmd_verify`].
pub fn load_artifacts(out_dir: &Path, plan: &GridPlan) -> Result<ReachabilityResult, CliError> {
    let borders = interior_borders(plan.n_rows(), plan.n_cols());
    let mut bitmaps = Vec::with_capacity(borders.len());
    let mut m = None;
    for b in &borders {
        let path = out_dir.join(b.file_name());
        if !path.exists() {
            return Err(CliError::MissingArtifact(path.display().to_string()));
        }
        let bm = BorderBitmap::read_crbm(&path)?;
        if bm.m_pos() != bm.m_theta() || m.is_some_and(|m| m != bm.m_pos()) {
            return Err(CliError::MissingArtifact(format!("{}: inconsistent resolution", path.display())));
        }
        m = Some(bm.m_pos());
        bitmaps.push(bm);
    }
    let marked = bitmaps.iter().map(BorderBitmap::count_ones).sum();
    Ok(ReachabilityResult {
        m: m.unwrap_or(2),
        n_rows: plan.n_rows(),
        n_cols: plan.n_cols(),
        borders,
        bitmaps,
        iterations: 1,
        marked_bits: marked,
        history: vec![marked],
        wall_time: Duration::ZERO,
    })
}

pub fn describe_query(out: &QueryOutcome) -> String {
    let verdict = match out.verdict {
        Verdict::Reachable => "reachable",
        Verdict::NotReachableAtResolution => "not_reachable_at_resolution",
    };
    let basis = match out.basis {
        QueryBasis::InsideRegion => "inside region of interest".to_string(),
        QueryBasis::EntersRegion => "exit enters region of interest".to_string(),
        QueryBasis::LeavesMap => "exit leaves the map".to_string(),
        QueryBasis::ExcludedCell => "start cell is excluded".to_string(),
        QueryBasis::Bit { border, pos_bin, heading_bin, near_boundary } => format!(
            "border {border} bin ({pos_bin}, {heading_bin}){}",
            if near_boundary { " near set boundary" } else { "" }
        ),
    };
    format!("{verdict} (cell {} {}; {basis})", out.cell.row, out.cell.col)
}

pub fn cmd_query(out_dir: &Path, plan_path: Option<&Path>, x: f64, y: f64, theta_deg: f64) -> Result<QueryOutcome, CliError> {
    let plan = artifact_plan(out_dir, plan_path)?;
    let result = load_artifacts(out_dir, &plan)?;
    let q = Configuration::new(x, y, Angle::from_degrees(theta_deg));
    query_configuration(q, &result, &plan).map_err(|e| match e {
        PropagationError::OutsideMap { .. } => CliError::Usage(e.to_string()),
        other => other.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Svg,
    Pgm,
}

impl std::str::FromStr for ImageFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "svg" => Ok(ImageFormat::Svg),
            "pgm" => Ok(ImageFormat::Pgm),
            _ => Err(format!("unknown format `{s}` (svg or pgm)")),
        }
    }
}

/// Gray raster, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub const SET: u8 = 0;
pub const UNSET: u8 = 255;
pub const EXCLUDED: u8 = 128;

impl Raster {
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// One rectangle per horizontal run of equal non-white pixels.
    pub fn to_svg(&self, title: &str) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" shape-rendering=\"crispEdges\">\n<title>{title}</title>\n<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
            w = self.width,
            h = self.height
        );
        for y in 0..self.height {
            let row = &self.pixels[y * self.width..(y + 1) * self.width];
            let mut x = 0;
            while x < self.width {
                let v = row[x];
                let mut e = x + 1;
                while e < self.width && row[e] == v {
                    e += 1;
                }
                if v != UNSET {
                    let _ = writeln!(s, "<rect x=\"{x}\" y=\"{y}\" width=\"{}\" height=\"1\" fill=\"#{v:02x}{v:02x}{v:02x}\"/>", e - x);
                }
                x = e;
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Border bitmap as an image: position to the right, heading upward.
pub fn render_border(bm: &BorderBitmap) -> Raster {
    let (w, h) = (bm.m_pos(), bm.m_theta());
    let mut pixels = vec![UNSET; w * h];
    for i in 0..w {
        for j in 0..h {
            if bm.get(i, j) {
                pixels[(h - 1 - j) * w + i] = SET;
            }
        }
    }
    Raster { width: w, height: h, pixels }
}

/// Membership at fixed heading over the whole map, `k` samples per cell side.
pub fn render_slice(result: &ReachabilityResult, plan: &GridPlan, theta: Angle, k: usize) -> Raster {
    let d = plan.params().d;
    let (w, h) = (plan.n_cols() * k, plan.n_rows() * k);
    let mut pixels = vec![UNSET; w * h];
    for py in 0..h {
        for px in 0..w {
            let x = (px as f64 + 0.5) * d / k as f64;
            let y = (h as f64 - py as f64 - 0.5) * d / k as f64;
            let q = Configuration::new(x, y, theta);
            pixels[py * w + px] = match query_configuration(q, result, plan) {
                Ok(QueryOutcome { basis: QueryBasis::ExcludedCell, .. }) => EXCLUDED,
                Ok(QueryOutcome { verdict: Verdict::Reachable, .. }) => SET,
                _ => UNSET,
            };
        }
    }
    Raster { width: w, height: h, pixels }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenderTarget {
    Border(BorderId),
    Slice { theta_deg: f64 },
}

pub fn parse_border_id(s: &str) -> Result<BorderId, CliError> {
    let bad = || CliError::Usage(format!("border id `{s}` must look like h_<row>_<col> or v_<row>_<col>"));
    let s = s.trim_start_matches("b_").trim_end_matches(".crbm");
    let mut parts = s.split('_');
    let orientation = match parts.next() {
        Some("h") => Orientation::Horizontal,
        Some("v") => Orientation::Vertical,
        _ => return Err(bad()),
    };
    let row = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    let col = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(BorderId { orientation, row, col })
}

/// Renders a border bitmap or a heading slice into `out_dir`; returns the
/// written path.
pub fn cmd_render(
    out_dir: &Path,
    plan_path: Option<&Path>,
    what: &RenderTarget,
    fmt: ImageFormat,
    k: usize,
) -> Result<PathBuf, CliError> {
    let plan = artifact_plan(out_dir, plan_path)?;
    let (raster, stem) = match what {
        RenderTarget::Border(b) => {
            let path = out_dir.join(b.file_name());
            if !path.exists() {
                return Err(CliError::MissingArtifact(path.display().to_string()));
            }
            (render_border(&BorderBitmap::read_crbm(&path)?), format!("render_border_{b}"))
        }
        RenderTarget::Slice { theta_deg } => {
            let result = load_artifacts(out_dir, &plan)?;
            let raster = render_slice(&result, &plan, Angle::from_degrees(*theta_deg), k.max(1));
            (raster, format!("render_slice_{}", normalize_degrees(*theta_deg)))
        }
    };
    let path = match fmt {
        ImageFormat::Pgm => {
            let p = out_dir.join(format!("{stem}.pgm"));
            std::fs::write(&p, raster.to_pgm())?;
            p
        }
        ImageFormat::Svg => {
            let p = out_dir.join(format!("{stem}.svg"));
            std::fs::write(&p, raster.to_svg(&stem))?;
            p
        }
    };
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub simulated: String,
    pub queried: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub samples: usize,
    pub seed: u64,
    pub m: usize,
    pub compared: usize,
    pub agreeing: usize,
    pub boundary_excluded: usize,
    pub agreement: f64,
    pub threshold: f64,
    pub exemplars: Vec<Disagreement>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.agreement >= self.threshold
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let pct = |n: usize| if self.samples == 0 { 0.0 } else { 100.0 * n as f64 / self.samples as f64 };
        let _ = writeln!(s, "samples {} seed {} m {}", self.samples, self.seed, self.m);
        if self.samples == 0 {
            let _ = writeln!(s, "warning: no samples, check passes vacuously");
        }
        let _ = writeln!(s, "agreement {:.4}% ({} of {} compared)", 100.0 * self.agreement, self.agreeing, self.compared);
        let _ = writeln!(s, "boundary-excluded {:.4}% ({})", pct(self.boundary_excluded), self.boundary_excluded);
        for e in &self.exemplars {
            let _ = writeln!(
                s,
                "disagreement x {:.6} y {:.6} theta {:.6}: simulated {}, queried {}",
                e.x, e.y, e.theta, e.simulated, e.queried
            );
        }
        let _ = writeln!(s, "{}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Compares bitmap queries against direct simulation on seeded random
/// configurations, skipping those whose exit bin touches a set boundary.
pub fn oracle_check(result: &ReachabilityResult, plan: &GridPlan, samples: usize, seed: u64, threshold: f64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = plan.params().d;
    let (w, h) = (plan.n_cols() as f64 * d, plan.n_rows() as f64 * d);
    let (mut compared, mut agreeing, mut excluded) = (0, 0, 0);
    let mut exemplars = Vec::new();
    for _ in 0..samples {
        let q = Configuration::new(rng.gen::<f64>() * w, rng.gen::<f64>() * h, rng.gen::<f64>() * std::f64::consts::TAU);
        let Ok(out) = query_configuration(q, result, plan) else { continue };
        if matches!(out.basis, QueryBasis::Bit { near_boundary: true, .. }) {
            excluded += 1;
            continue;
        }
        let sim = simulate_plan(q, plan, plan.default_budget()).map(|s| s.outcome);
        let reached = matches!(sim, Ok(PlanOutcome::ReachedTarget));
        compared += 1;
        if reached == (out.verdict == Verdict::Reachable) {
            agreeing += 1;
        } else if exemplars.len() < 5 {
            exemplars.push(Disagreement {
                x: q.x,
                y: q.y,
                theta: q.theta.value(),
                simulated: format!("{sim:?}"),
                queried: describe_query(&out),
            });
        }
    }
    OracleReport {
        samples,
        seed,
        m: result.m,
        compared,
        agreeing,
        boundary_excluded: excluded,
        agreement: if compared == 0 { 1.0 } else { agreeing as f64 / compared as f64 },
        threshold,
        exemplars,
    }
}

pub fn cmd_oracle_check(
    plan_path: &Path,
    samples: usize,
    seed: u64,
    m: Option<usize>,
    threads: Option<usize>,
    threshold: f64,
) -> Result<OracleReport, CliError> {
    let file = PlanFile::read(plan_path)?;
    let plan = file.to_plan()?;
    let m = resolution(m, &file)?;
    let result = iterative_border_expansion(&plan, m, ExpansionOptions { threads, ..Default::default() })?;
    Ok(oracle_check(&result, &plan, samples, seed, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = "# demo\nd 1\nr 2\ngrid 2 3\nm 8\ntarget 1 2\ncells\n90 X 45\n0 -90 370.5\n";

    #[test]
    fn parses_top_row_first() {
        let f = PlanFile::parse(DEMO, "demo").unwrap();
        assert_eq!(f.headings, vec![Some(0.0), Some(270.0), Some(10.5), Some(90.0), None, Some(45.0)]);
        assert_eq!(f.v, 1.0);
        assert_eq!(f.m, Some(8));
        let plan = f.to_plan().unwrap();
        assert!(plan.is_excluded(CellIndex::new(1, 1)));
    }

    #[test]
    fn round_trip() {
        let f = PlanFile::parse(DEMO, "demo").unwrap();
        let g = PlanFile::parse(&f.serialize(), "again").unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn errors_carry_positions() {
        let text = "d 1\nr 2\ngrid 1 2\ntarget 0 0\ncells\n90 nope\n";
        match PlanFile::parse(text, "p") {
            Err(CliError::Parse { line, col, .. }) => assert_eq!((line, col), (6, 4)),
            other => panic!("{other:?}"),
        }
        match PlanFile::parse("d 1\n  bogus 3\n", "p") {
            Err(CliError::Parse { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn d_not_below_r_is_an_invariant_error() {
        let text = "d 2\nr 2\ngrid 1 1\ntarget 0 0\ncells\n0\n";
        let e = PlanFile::parse(text, "p").unwrap().to_plan().unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("d < r") || e.to_string().contains("smaller"), "{e}");
    }

    #[test]
    fn border_ids_parse() {
        assert_eq!(parse_border_id("h_1_2").unwrap(), BorderId::horizontal(1, 2));
        assert_eq!(parse_border_id("b_v_0_3.crbm").unwrap(), BorderId::vertical(0, 3));
        assert!(parse_border_id("q_1_1").is_err());
    }
}
