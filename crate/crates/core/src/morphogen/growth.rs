//! Deterministic 2D differential growth on a closed loop of cells.
//!
//! Per step, in this order:
//!
//! 1. Forces on every cell (all scaled by [`FORCE_GAIN`]):
//!    spring to both loop neighbors `k (|d| - L) d/|d|`,
//!    repulsion from every cell closer than `R`: `s L (1 - r/R)` away from it,
//!    Laplacian smoothing `w (mid - x)`,
//!    and a push `p L / 10` along the outward normal.
//! 2. Damped Euler: `v <- damping v + dt F`, `x <- x + dt v`, `dt = 0.1`.
//!    A non-finite coordinate or one outside [-10, 10] restores the previous
//!    positions and halts the run with `blow_up` set.
//! 3. Food: each cell, in loop order, draws `eta ~ U[-1, 1]` and gains
//!    `(base + bias |turn angle|) (1 + noise eta)`; food is floored at 0.
//! 4. Splits: cells in loop order with `food > threshold` insert a daughter
//!    between themselves and their successor at the midpoint plus a jitter of
//!    up to `L / 10` per axis (two draws, x then y). Both cells restart at 0
//!    food. Once the cell budget is reached no more splits happen and the run
//!    stops after the current step.
//!
//! The noise term is multiplicative so that zero base income and zero
//! curvature bias guarantee no growth at all.

use super::genotype::Genotype;
use crate::rng::SplitMix64;

pub const INITIAL_CELLS: usize = 16;
pub const INITIAL_RADIUS: f64 = 0.1;
pub const DEFAULT_BUDGET: usize = 4096;
pub const DT: f64 = 0.1;
pub const FORCE_GAIN: f64 = 10.0;
pub const WORLD_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub pos: [f64; 2],
    pub food: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthResult {
    pub cells: Vec<Cell>,
    pub steps_run: usize,
    pub viable: bool,
    pub blow_up: bool,
    /// Spring rest length of the run, in world units; sets the splat radius.
    pub rest_length: f64,
}

impl GrowthResult {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Line-based text form used for golden fixtures. Floats use the
    /// shortest representation that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "formscape-growth 1\nrest_length {:?}\nsteps_run {}\ncell_count {}\nviable {}\nblow_up {}\n",
            self.rest_length,
            self.steps_run,
            self.cells.len(),
            self.viable as u8,
            self.blow_up as u8
        );
        for c in &self.cells {
            out.push_str(&format!("{:?} {:?} {:?}\n", c.pos[0], c.pos[1], c.food));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        if lines.next() != Some("formscape-growth 1") {
            return Err("bad growth header".into());
        }
        let rest_length = lines
            .next()
            .and_then(|l| l.strip_prefix("rest_length "))
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or("bad rest_length line")?;
        let mut field = |key: &str| -> Result<usize, String> {
            let line = lines.next().ok_or_else(|| format!("missing {key}"))?;
            line.strip_prefix(key)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| format!("bad {key} line: {line}"))
        };
        let steps_run = field("steps_run")?;
        let count = field("cell_count")?;
        let viable = field("viable")? == 1;
        let blow_up = field("blow_up")? == 1;
        let cells = lines
            .map(|l| {
                let v: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
                match v[..] {
                    [x, y, food] => Ok(Cell { pos: [x, y], food }),
                    _ => Err(format!("bad cell line: {l}")),
                }
            })
            .collect::<Result<Vec<_>, String>>()?;
        if cells.len() != count {
            return Err(format!("cell_count {count} but {} cell lines", cells.len()));
        }
        Ok(Self {
            cells,
            steps_run,
            viable,
            blow_up,
            rest_length,
        })
    }
}

/// Outcome of a single simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Running,
    Finished,
    BudgetReached,
    BlowUp,
}

/// Step-wise simulator; [`grow`] drives it to completion.
pub struct Simulation {
    genotype: Genotype,
    rng: SplitMix64,
    budget: usize,
    pos: Vec<[f64; 2]>,
    vel: Vec<[f64; 2]>,
    food: Vec<f64>,
    steps_run: usize,
    done: Option<Step>,
    grid: NeighborGrid,
}

impl Simulation {
    /// Budgets below the initial cell count are raised to it.
    pub fn new(genotype: &Genotype, seed: u64, budget: usize) -> Self {
        let pos = (0..INITIAL_CELLS)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / INITIAL_CELLS as f64;
                [INITIAL_RADIUS * a.cos(), INITIAL_RADIUS * a.sin()]
            })
            .collect();
        Self {
            genotype: genotype.clone(),
            rng: SplitMix64::new(seed),
            budget: budget.max(INITIAL_CELLS),
            pos,
            vel: vec![[0.0; 2]; INITIAL_CELLS],
            food: vec![0.0; INITIAL_CELLS],
            steps_run: 0,
            done: None,
            grid: NeighborGrid::default(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.pos.len()
    }

    pub fn steps_run(&self) -> usize {
        self.steps_run
    }

    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    pub fn step(&mut self) -> Step {
        if let Some(s) = self.done {
            return s;
        }
        if self.steps_run >= self.genotype.steps() {
            self.done = Some(Step::Finished);
            return Step::Finished;
        }
        let forces = self.forces();
        let previous = self.pos.clone();
        let damping = self.genotype.damping();
        let mut blew_up = false;
        for ((p, v), f) in self.pos.iter_mut().zip(self.vel.iter_mut()).zip(&forces) {
            for a in 0..2 {
                v[a] = damping * v[a] + DT * f[a];
                p[a] += DT * v[a];
                if !p[a].is_finite() || p[a].abs() > WORLD_LIMIT {
                    blew_up = true;
                }
            }
        }
        self.steps_run += 1;
        if blew_up {
            self.pos = previous;
            self.done = Some(Step::BlowUp);
            return Step::BlowUp;
        }
        self.feed();
        let outcome = if self.split() {
            Step::BudgetReached
        } else if self.steps_run >= self.genotype.steps() {
            Step::Finished
        } else {
            Step::Running
        };
        if outcome != Step::Running {
            self.done = Some(outcome);
        }
        outcome
    }

    pub fn into_result(self) -> GrowthResult {
        let blow_up = self.done == Some(Step::BlowUp);
        let cells = self
            .pos
            .iter()
            .zip(&self.food)
            .map(|(&pos, &food)| Cell { pos, food })
            .collect::<Vec<_>>();
        GrowthResult {
            viable: !blow_up && cells.len() > INITIAL_CELLS,
            cells,
            steps_run: self.steps_run,
            blow_up,
            rest_length: self.genotype.rest_length(),
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn forces(&mut self) -> Vec<[f64; 2]> {
        let g = &self.genotype;
        let n = self.pos.len();
        let rest = g.rest_length();
        let k = g.spring_stiffness();
        let smooth = g.smoothing();
        let push = g.normal_push() * rest * 0.1;
        let mut forces = vec![[0.0; 2]; n];
        for i in 0..n {
            let x = self.pos[i];
            let prev = self.pos[(i + n - 1) % n];
            let next = self.pos[(i + 1) % n];
            let f = &mut forces[i];
            for nb in [prev, next] {
                let d = [nb[0] - x[0], nb[1] - x[1]];
                let len = d[0].hypot(d[1]);
                if len > 1e-12 {
                    let m = k * (len - rest) / len;
                    f[0] += m * d[0];
                    f[1] += m * d[1];
                }
            }
            f[0] += smooth * (0.5 * (prev[0] + next[0]) - x[0]);
            f[1] += smooth * (0.5 * (prev[1] + next[1]) - x[1]);
            let t = [next[0] - prev[0], next[1] - prev[1]];
            let tl = t[0].hypot(t[1]);
            if tl > 1e-12 {
                f[0] += push * t[1] / tl;
                f[1] -= push * t[0] / tl;
            }
        }
        let radius = g.repulsion_radius();
        let strength = g.repulsion_strength() * rest;
        if radius > 0.0 && strength > 0.0 {
            self.grid.rebuild(&self.pos, radius);
            let grid = &self.grid;
            let r2 = radius * radius;
            // cells sharing a bucket share their candidate rows; each cell
            // still sums its candidates in bucket order, then index order
            let mut start = 0;
            while start < grid.sorted.len() {
                let key = grid.sorted[start].0;
                let end = start + grid.sorted[start..].partition_point(|&(k, _)| k == key);
                let rows = grid.rows_near(key);
                for &(_, i) in &grid.sorted[start..end] {
                    let x = self.pos[i];
                    let f = &mut forces[i];
                    for row in rows.iter().flatten() {
                        for (&(_, j), p) in grid.sorted[row.clone()]
                            .iter()
                            .zip(&grid.points[row.clone()])
                        {
                            let d = [x[0] - p[0], x[1] - p[1]];
                            let d2 = d[0] * d[0] + d[1] * d[1];
                            if j != i && d2 < r2 && d2 > 1e-24 {
                                let dist = d2.sqrt();
                                let m = strength * (1.0 - dist / radius) / dist;
                                f[0] += m * d[0];
                                f[1] += m * d[1];
                            }
                        }
                    }
                }
                start = end;
            }
        }
        for f in &mut forces {
            f[0] *= FORCE_GAIN;
            f[1] *= FORCE_GAIN;
        }
        forces
    }

    fn feed(&mut self) {
        let g = &self.genotype;
        let n = self.pos.len();
        let (base, bias, noise) = (g.food_base_rate(), g.curvature_food_bias(), g.food_noise());
        for i in 0..n {
            let eta = self.rng.uniform(-1.0, 1.0);
            let turn = turn_angle(
                self.pos[(i + n - 1) % n],
                self.pos[i],
                self.pos[(i + 1) % n],
            );
            let income = (base + bias * turn.abs()) * (1.0 + noise * eta);
            self.food[i] = (self.food[i] + income).max(0.0);
        }
    }

    /// Returns true when the budget has been reached.
    fn split(&mut self) -> bool {
        let n = self.pos.len();
        let threshold = self.genotype.split_threshold();
        let jitter = 0.1 * self.genotype.rest_length();
        if !self.food.iter().any(|&f| f > threshold) {
            return n >= self.budget;
        }
        let mut pos = Vec::with_capacity(n * 2);
        let mut vel = Vec::with_capacity(n * 2);
        let mut food = Vec::with_capacity(n * 2);
        let mut count = n;
        for i in 0..n {
            let j = (i + 1) % n;
            let splits = self.food[i] > threshold && count < self.budget;
            pos.push(self.pos[i]);
            vel.push(self.vel[i]);
            food.push(if splits { 0.0 } else { self.food[i] });
            if splits {
                let jx = self.rng.uniform(-jitter, jitter);
                let jy = self.rng.uniform(-jitter, jitter);
                pos.push([
                    0.5 * (self.pos[i][0] + self.pos[j][0]) + jx,
                    0.5 * (self.pos[i][1] + self.pos[j][1]) + jy,
                ]);
                vel.push([
                    0.5 * (self.vel[i][0] + self.vel[j][0]),
                    0.5 * (self.vel[i][1] + self.vel[j][1]),
                ]);
                food.push(0.0);
                count += 1;
            }
        }
        self.pos = pos;
        self.vel = vel;
        self.food = food;
        count >= self.budget
    }
}

/// Signed exterior angle at `b` between `a -> b` and `b -> c`.
fn turn_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [c[0] - b[0], c[1] - b[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    if cross == 0.0 && dot == 0.0 {
        0.0
    } else {
        cross.atan2(dot)
    }
}

/// Uniform bucket grid stored sparsely: cell indices sorted by
/// (bucket, index), with positions in the same order. Buckets are scanned in
/// a fixed order and hold ascending indices, so force sums are
/// reproducible. Empty buckets cost nothing, however fine the grid.
#[derive(Default)]
struct NeighborGrid {
    origin: [f64; 2],
    size: f64,
    nx: usize,
    ny: usize,
    sorted: Vec<(usize, usize)>,
    points: Vec<[f64; 2]>,
}

const MAX_BUCKETS_PER_AXIS: usize = 512;

impl NeighborGrid {
    fn rebuild(&mut self, pos: &[[f64; 2]], radius: f64) {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pos {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        self.size = radius.max(extent / MAX_BUCKETS_PER_AXIS as f64);
        self.origin = lo;
        self.nx = ((hi[0] - lo[0]) / self.size) as usize + 1;
        self.ny = ((hi[1] - lo[1]) / self.size) as usize + 1;
        let mut sorted = std::mem::take(&mut self.sorted);
        sorted.clear();
        sorted.extend(pos.iter().enumerate().map(|(i, &p)| (self.key(p), i)));
        sorted.sort_unstable();
        self.points.clear();
        self.points.extend(sorted.iter().map(|&(_, i)| pos[i]));
        self.sorted = sorted;
    }

    fn coords(&self, p: [f64; 2]) -> (usize, usize) {
        let cx = (((p[0] - self.origin[0]) / self.size) as usize).min(self.nx - 1);
        let cy = (((p[1] - self.origin[1]) / self.size) as usize).min(self.ny - 1);
        (cx, cy)
    }

    fn key(&self, p: [f64; 2]) -> usize {
        let (cx, cy) = self.coords(p);
        cy * self.nx + cx
    }

    /// Ranges of `sorted` covering the 3x3 buckets around `key`, one per
    /// bucket row; the buckets of a row are consecutive keys.
    fn rows_near(&self, key: usize) -> [Option<std::ops::Range<usize>>; 3] {
        let (cx, cy) = (key % self.nx, key / self.nx);
        let (x0, x1) = (cx.saturating_sub(1), (cx + 1).min(self.nx - 1));
        let rows = cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1);
        std::array::from_fn(|r| {
            let by = rows.start() + r;
            (by <= *rows.end()).then(|| {
                let first = self.sorted.partition_point(|&(k, _)| k < by * self.nx + x0);
                let last =
                    first + self.sorted[first..].partition_point(|&(k, _)| k <= by * self.nx + x1);
                first..last
            })
        })
    }
}

/// Runs the simulation for `genotype.steps()` steps, or until the cell budget
/// is reached or the state blows up.
pub fn grow(genotype: &Genotype, seed: u64, budget: usize) -> GrowthResult {
    let mut sim = Simulation::new(genotype, seed, budget);
    while sim.step() == Step::Running {}
    sim.into_result()
}
