//! Skyline extraction as a minimum-cost path through a multi-stage graph.
//!
//! Every image column is a stage and every row a node. A path picks one row
//! per column, adjacent rows may differ by at most `delta`, and each jump of
//! `d` rows costs `jump_weight * d`. The node cost depends on the variant:
//!
//! * [`Variant::Dcsi`]: `1 - score(r, c)` on a horizon score map.
//! * [`Variant::Energy`]: the region data term `D(c, r)` (sky above `r`,
//!   non-sky from `r` down, negative log-likelihoods of a clamped sky
//!   probability) minus `edge_weight * |grad|(r, c)`.
//!
//! The minimizer is computed backwards (suffix costs) and read off forwards,
//! so among equal-cost paths the lexicographically smallest row sequence wins.

use crate::classifier::ScoreMap;
use crate::error::{Error, Result};
use crate::raster::{GradientField, Skyline};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Dcsi,
    Energy,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dcsi" => Ok(Variant::Dcsi),
            "energy" => Ok(Variant::Energy),
            other => Err(Error::config(format!(
                "unknown variant `{other}` (expected dcsi|energy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpConfig {
    pub variant: Variant,
    /// Largest allowed row change between adjacent columns.
    pub delta: usize,
    /// Cost per row of vertical jump.
    pub jump_weight: f64,
    /// Reward per unit of gradient magnitude on the path (energy only).
    pub edge_weight: f64,
    /// Probabilities are clamped to `[floor, 1 - floor]` before taking logs.
    pub likelihood_floor: f64,
}

impl DpConfig {
    pub fn dcsi() -> Self {
        Self {
            variant: Variant::Dcsi,
            delta: 40,
            jump_weight: 0.05,
            edge_weight: 0.0,
            likelihood_floor: 1e-6,
        }
    }

    /// The data term sums log-likelihoods over a whole column, so the edge
    /// reward at a single pixel needs a weight on the same scale. 200 sits
    /// on the plateau of a sweep over the synthetic training scenes.
    pub fn energy() -> Self {
        Self {
            variant: Variant::Energy,
            edge_weight: 200.0,
            ..Self::dcsi()
        }
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Dcsi => Self::dcsi(),
            Variant::Energy => Self::energy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta == 0 {
            return Err(Error::config("delta must be at least 1"));
        }
        if !(self.jump_weight >= 0.0 && self.jump_weight.is_finite()) {
            return Err(Error::config("jump weight must be a non-negative number"));
        }
        if !(self.edge_weight >= 0.0 && self.edge_weight.is_finite()) {
            return Err(Error::config("edge weight must be a non-negative number"));
        }
        if !(self.likelihood_floor > 0.0 && self.likelihood_floor < 0.5) {
            return Err(Error::config("likelihood floor must lie in (0, 0.5)"));
        }
        Ok(())
    }

    fn expect_variant(&self, variant: Variant) -> Result<()> {
        self.validate()?;
        if self.variant != variant {
            return Err(Error::config(format!(
                "configuration is for {:?}, extractor is {variant:?}",
                self.variant
            )));
        }
        Ok(())
    }
}

impl Default for DpConfig {
    fn default() -> Self {
        Self::dcsi()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub skyline: Skyline,
    pub total_cost: f64,
}

/// Inputs of either variant, for the shared evaluator and the oracle.
#[derive(Debug, Clone, Copy)]
pub enum DpInput<'a> {
    Dcsi(&'a ScoreMap),
    Energy {
        sky_prob: &'a ScoreMap,
        grad: &'a GradientField,
    },
}

impl DpInput<'_> {
    fn dims(&self) -> (usize, usize) {
        match self {
            DpInput::Dcsi(s) => (s.rows(), s.cols()),
            DpInput::Energy { sky_prob, .. } => (sky_prob.rows(), sky_prob.cols()),
        }
    }

    fn variant(&self) -> Variant {
        match self {
            DpInput::Dcsi(_) => Variant::Dcsi,
            DpInput::Energy { .. } => Variant::Energy,
        }
    }

    fn check(&self, cfg: &DpConfig) -> Result<()> {
        cfg.expect_variant(self.variant())?;
        if let DpInput::Energy { sky_prob, grad } = self {
            check_same_shape(sky_prob, grad)?;
        }
        Ok(())
    }
}

fn check_same_shape(sky_prob: &ScoreMap, grad: &GradientField) -> Result<()> {
    if (sky_prob.rows(), sky_prob.cols()) != (grad.rows(), grad.cols()) {
        return Err(Error::data(format!(
            "sky probabilities are {}x{}, gradients {}x{}",
            sky_prob.rows(),
            sky_prob.cols(),
            grad.rows(),
            grad.cols()
        )));
    }
    Ok(())
}

/// Horizon extraction over a dense horizon-probability map.
pub fn extract_dcsi(scores: &ScoreMap, cfg: &DpConfig) -> Result<PathResult> {
    cfg.expect_variant(Variant::Dcsi)?;
    let (rows, cols) = (scores.rows(), scores.cols());
    let mut node = vec![0.0; rows * cols];
    for c in 0..cols {
        for r in 0..rows {
            node[c * rows + r] = 1.0 - scores.get(r, c);
        }
    }
    Ok(shortest_path(&node, rows, cols, cfg))
}

/// Horizon extraction minimizing the region data term plus smoothness.
pub fn extract_energy(
    sky_prob: &ScoreMap,
    grad: &GradientField,
    cfg: &DpConfig,
) -> Result<PathResult> {
    cfg.expect_variant(Variant::Energy)?;
    check_same_shape(sky_prob, grad)?;
    let (rows, cols) = (sky_prob.rows(), sky_prob.cols());
    let mut node = vec![0.0; rows * cols];
    for c in 0..cols {
        let data = data_term_column(sky_prob, c, cfg.likelihood_floor);
        for r in 0..rows {
            node[c * rows + r] = data[r] - cfg.edge_weight * grad.magnitude_at(r, c);
        }
    }
    Ok(shortest_path(&node, rows, cols, cfg))
}

/// `D(col, r)` for every candidate row `r`, via prefix sums over the column.
pub fn data_term_column(sky_prob: &ScoreMap, col: usize, floor: f64) -> Vec<f64> {
    let rows = sky_prob.rows();
    // above[r] = sum_{y < r} -ln p(y)
    let mut above = vec![0.0; rows + 1];
    // below[r] = sum_{y >= r} -ln(1 - p(y))
    let mut below = vec![0.0; rows + 1];
    for y in 0..rows {
        let p = clamp_prob(sky_prob.get(y, col), floor);
        above[y + 1] = above[y] - p.ln();
    }
    for y in (0..rows).rev() {
        let p = clamp_prob(sky_prob.get(y, col), floor);
        below[y] = below[y + 1] - (1.0 - p).ln();
    }
    (0..rows).map(|r| above[r] + below[r]).collect()
}

#[inline]
fn clamp_prob(p: f64, floor: f64) -> f64 {
    p.clamp(floor, 1.0 - floor)
}

/// Backward suffix-cost relaxation and forward lexicographic read-off.
/// `node` is column-major: `node[c * rows + r]`.
fn shortest_path(node: &[f64], rows: usize, cols: usize, cfg: &DpConfig) -> PathResult {
    let delta = cfg.delta.min(rows.saturating_sub(1));
    let lambda = cfg.jump_weight;
    // suffix[c * rows + r]: cheapest cost of columns c.. given row r at column c.
    let mut suffix = vec![0.0; rows * cols];
    let last = (cols - 1) * rows;
    suffix[last..last + rows].copy_from_slice(&node[last..last + rows]);
    for c in (0..cols - 1).rev() {
        let (head, tail) = suffix.split_at_mut((c + 1) * rows);
        let next = &tail[..rows];
        let here = &mut head[c * rows..];
        for r in 0..rows {
            let (best, _) = best_successor(next, r, delta, lambda);
            here[r] = node[c * rows + r] + best;
        }
    }

    let mut rows_at = Vec::with_capacity(cols);
    let (mut total_cost, mut row) = (f64::INFINITY, 0);
    for (r, &v) in suffix[..rows].iter().enumerate() {
        if v < total_cost {
            total_cost = v;
            row = r;
        }
    }
    rows_at.push(row);
    for c in 1..cols {
        let (_, r) = best_successor(&suffix[c * rows..(c + 1) * rows], row, delta, lambda);
        row = r;
        rows_at.push(row);
    }
    PathResult {
        skyline: Skyline::new(rows_at).expect("at least one column"),
        total_cost,
    }
}

/// Smallest `lambda * |r' - r| + next[r']` over the jump window; the lowest
/// row wins ties.
#[inline]
fn best_successor(next: &[f64], r: usize, delta: usize, lambda: f64) -> (f64, usize) {
    let lo = r.saturating_sub(delta);
    let hi = (r + delta).min(next.len() - 1);
    let mut best = (f64::INFINITY, lo);
    for (rr, &v) in next.iter().enumerate().take(hi + 1).skip(lo) {
        let cost = lambda * rr.abs_diff(r) as f64 + v;
        if cost < best.0 {
            best = (cost, rr);
        }
    }
    best
}

/// Node cost of the energy variant by direct summation over the column.
pub fn energy_node_cost_naive(
    sky_prob: &ScoreMap,
    grad: &GradientField,
    col: usize,
    row: usize,
    cfg: &DpConfig,
) -> f64 {
    let mut data = 0.0;
    for y in 0..sky_prob.rows() {
        let p = clamp_prob(sky_prob.get(y, col), cfg.likelihood_floor);
        data += if y < row { -p.ln() } else { -(1.0 - p).ln() };
    }
    data - cfg.edge_weight * grad.magnitude_at(row, col)
}

fn naive_node_costs(input: &DpInput<'_>, cfg: &DpConfig) -> Vec<f64> {
    let (rows, cols) = input.dims();
    let mut node = vec![0.0; rows * cols];
    for c in 0..cols {
        for r in 0..rows {
            node[c * rows + r] = match input {
                DpInput::Dcsi(s) => 1.0 - s.get(r, c),
                DpInput::Energy { sky_prob, grad } => {
                    energy_node_cost_naive(sky_prob, grad, c, r, cfg)
                }
            };
        }
    }
    node
}

/// Evaluates the cost functional on a given skyline, summing columns left to
/// right with data terms computed by direct summation. Fails if the skyline
/// does not fit the input or violates the jump window.
pub fn path_cost(input: &DpInput<'_>, skyline: &Skyline, cfg: &DpConfig) -> Result<f64> {
    input.check(cfg)?;
    let (rows, cols) = input.dims();
    if skyline.cols() != cols {
        return Err(Error::data(format!(
            "skyline has {} columns, input has {cols}",
            skyline.cols()
        )));
    }
    let path = skyline.rows_at();
    if path.iter().any(|&r| r >= rows) {
        return Err(Error::data("skyline leaves the image"));
    }
    if path.windows(2).any(|w| w[0].abs_diff(w[1]) > cfg.delta) {
        return Err(Error::data("skyline jumps farther than delta"));
    }
    let node = naive_node_costs(input, cfg);
    let mut cost = node[path[0]];
    for c in 1..cols {
        cost = cost
            + cfg.jump_weight * path[c].abs_diff(path[c - 1]) as f64
            + node[c * rows + path[c]];
    }
    Ok(cost)
}

/// Largest grid the exhaustive oracle accepts in either dimension.
pub const BRUTE_FORCE_MAX_DIM: usize = 8;

/// Exhaustive search over every admissible row sequence. Returns the
/// lexicographically smallest minimizer; its cost is accumulated in the same
/// order as [`path_cost`].
pub fn brute_force_extract(input: &DpInput<'_>, cfg: &DpConfig) -> Result<PathResult> {
    input.check(cfg)?;
    let (rows, cols) = input.dims();
    if rows > BRUTE_FORCE_MAX_DIM || cols > BRUTE_FORCE_MAX_DIM {
        return Err(Error::config(format!(
            "{rows}x{cols} is too large for exhaustive search (max {BRUTE_FORCE_MAX_DIM}x{BRUTE_FORCE_MAX_DIM})"
        )));
    }
    let node = naive_node_costs(input, cfg);

    struct Search<'a> {
        node: &'a [f64],
        rows: usize,
        cols: usize,
        delta: usize,
        lambda: f64,
        path: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, col: usize, cost: f64) {
            if col == self.cols {
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.path.clone()));
                }
                return;
            }
            for r in 0..self.rows {
                let step = if col == 0 {
                    self.node[r]
                } else {
                    let prev = self.path[col - 1];
                    if prev.abs_diff(r) > self.delta {
                        continue;
                    }
                    self.lambda * prev.abs_diff(r) as f64 + self.node[col * self.rows + r]
                };
                self.path.push(r);
                self.visit(col + 1, if col == 0 { step } else { cost + step });
                self.path.pop();
            }
        }
    }

    let mut search = Search {
        node: &node,
        rows,
        cols,
        delta: cfg.delta,
        lambda: cfg.jump_weight,
        path: Vec::with_capacity(cols),
        best: None,
    };
    search.visit(0, 0.0);
    let (total_cost, rows_at) = search.best.expect("at least one admissible path");
    Ok(PathResult {
        skyline: Skyline::new(rows_at)?,
        total_cost,
    })
}
