//! Subgraph domains `{0 < x_d < f(x')}` over the unit interval, optionally
//! glued on top of the base box `(-2,2) x (-2,0)`, and the self-similar
//! fractal boundary built from tent functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Tent `1/2 - |t - 1/2|` on `[0,1]`, zero outside.
#[inline]
pub fn psi(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        t.min(1.0 - t)
    } else {
        0.0
    }
}

/// Parameters of the tent-series boundary `f = sum_j 2^{-gamma j m} g_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractalParams {
    pub gamma: f64,
    pub m: u32,
    pub n_max: u32,
}

impl FractalParams {
    /// Checked constructor: `m gamma >= 1` and `m (1 - gamma) >= 4`, the
    /// regime where the Hölder constant 3 and the spike window are proven.
    pub fn new(gamma: f64, m: u32, n_max: u32) -> Result<Self> {
        let p = Self::relaxed(gamma, m, n_max)?;
        if (m as f64) * gamma < 1.0 {
            return Err(invalid("m", format!("m*gamma = {} < 1", m as f64 * gamma)));
        }
        if (m as f64) * (1.0 - gamma) < 4.0 - 1e-12 {
            return Err(invalid(
                "m",
                format!("m*(1-gamma) = {} < 4", m as f64 * (1.0 - gamma)),
            ));
        }
        Ok(p)
    }

    /// Skips the two lower bounds on `m`. The truncated boundary is still an
    /// exact polygon, only the Hölder constant 3 is no longer guaranteed.
    pub fn relaxed(gamma: f64, m: u32, n_max: u32) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("gamma", format!("need 0 < gamma < 1, got {gamma}")));
        }
        if m == 0 {
            return Err(invalid("m", "need m >= 1"));
        }
        if (m as u64) * (n_max as u64 + 1) + 1 > 52 {
            return Err(invalid("n_max", "lattice finer than double precision"));
        }
        Ok(Self { gamma, m, n_max })
    }

    pub fn satisfies_bounds(&self) -> bool {
        let m = self.m as f64;
        m * self.gamma >= 1.0 && m * (1.0 - self.gamma) >= 4.0 - 1e-12
    }

    /// Bound on `f - f_{n_max}`.
    pub fn tail_bound(&self) -> f64 {
        let q = 2f64.powf(-self.gamma * self.m as f64);
        q.powi(self.n_max as i32 + 1) / (1.0 - q) * 0.5
    }

    /// Weight `2^{-gamma j m}` of level `j`.
    pub fn level_weight(&self, j: u32) -> f64 {
        2f64.powf(-self.gamma * (j * self.m) as f64)
    }

    /// Number of cells `|K_n| = 2^{mn}`.
    pub fn cells(&self, n: u32) -> u64 {
        1u64 << (self.m * n)
    }

    /// Width `2^{-mn}` of a level-`n` cell.
    pub fn cell_width(&self, n: u32) -> f64 {
        2f64.powi(-((self.m * n) as i32))
    }

    /// Breakpoint spacing of `f_n`.
    pub fn breakpoint_spacing(&self, n: u32) -> f64 {
        2f64.powi(-((self.m * n + 1) as i32))
    }
}

/// Truncation level for [`eval_fractal_boundary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    /// `f_n`; `n = -1` is the zero function.
    Upto(i32),
    /// `f_{n_max}`.
    Full,
}

pub(crate) fn eval_series(p: &FractalParams, x: f64, level: i32) -> f64 {
    let mut sum = 0.0;
    for j in 0..=level.max(-1) {
        let j = j as u32;
        let scale = 2f64.powi((j * p.m) as i32);
        let t = x * scale;
        sum += p.level_weight(j) * psi(t - t.floor());
    }
    sum
}

pub fn eval_fractal_boundary(p: &FractalParams, xprime: f64, level: Level) -> Result<f64> {
    if !(xprime > 0.0 && xprime < 1.0) {
        return Err(invalid("xprime", format!("{xprime} is outside (0,1)")));
    }
    let n = match level {
        Level::Full => p.n_max as i32,
        Level::Upto(n) => {
            if n > p.n_max as i32 {
                return Err(invalid("level", format!("{n} exceeds n_max = {}", p.n_max)));
            }
            n
        }
    };
    Ok(eval_series(p, xprime, n))
}

/// Exact supremum of `f_{n-1}` over the closed cell `Q(n,k)`.
pub fn spike_base(p: &FractalParams, n: u32, k: u64) -> Result<f64> {
    if n > p.n_max {
        return Err(invalid("n", format!("{n} exceeds n_max = {}", p.n_max)));
    }
    if k >= p.cells(n) {
        return Err(invalid("k", format!("{k} not in K_{n}")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let w = p.cell_width(n);
    let left = k as f64 * w;
    let right = left + w;
    // f_{n-1} is piecewise linear; candidates are the cell ends and any of
    // its breakpoints inside the cell.
    let sp = p.breakpoint_spacing(n - 1);
    let mut best = eval_series(p, left, n as i32 - 1).max(eval_series(p, right, n as i32 - 1));
    let mut i = (left / sp).ceil() as u64;
    while (i as f64) * sp < right {
        best = best.max(eval_series(p, i as f64 * sp, n as i32 - 1));
        i += 1;
    }
    Ok(best)
}

/// Piecewise-linear boundary profile given by its breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Uniform spacing, when the breakpoints form a lattice from 0.
    pub spacing: Option<f64>,
}

impl Profile {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(invalid("samples", "need at least two (x, f) pairs"));
        }
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return Err(invalid("samples", "breakpoints must run from x=0 to x=1"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "samples",
                "breakpoints must be strictly increasing",
            ));
        }
        if ys.iter().any(|y| !(*y >= 0.0) || !y.is_finite()) {
            return Err(invalid("samples", "f must be finite and nonnegative"));
        }
        Ok(Self {
            xs,
            ys,
            spacing: None,
        })
    }

    fn uniform(ys: Vec<f64>) -> Self {
        let n = ys.len() - 1;
        let spacing = 1.0 / n as f64;
        let xs = (0..=n).map(|i| i as f64 * spacing).collect();
        Self {
            xs,
            ys,
            spacing: Some(spacing),
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Index `i` of the piece `[x_i, x_{i+1}]` containing `x` (clamped).
    pub fn piece(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        if x <= 0.0 {
            return 0;
        }
        if x >= 1.0 {
            return last;
        }
        let i = match self.spacing {
            Some(s) => ((x / s) as usize).min(last),
            None => self.xs.partition_point(|&v| v <= x).saturating_sub(1),
        };
        // guard against rounding in x / s
        let mut i = i.min(last);
        while i > 0 && self.xs[i] > x {
            i -= 1;
        }
        while i < last && self.xs[i + 1] <= x {
            i += 1;
        }
        i
    }

    /// Linear interpolation; returns stored values bit-exactly at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.piece(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        if x == x0 {
            return self.ys[i];
        }
        if x == x1 {
            return self.ys[i + 1];
        }
        let t = (x - x0) / (x1 - x0);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    /// Maximum of `f` over the closed interval `[a, b]` (clamped to `[0,1]`).
    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(1.0);
        let mut m = self.eval(a).max(self.eval(b));
        let i0 = self.piece(a) + 1;
        let mut i = i0;
        while i < self.xs.len() && self.xs[i] < b {
            m = m.max(self.ys[i]);
            i += 1;
        }
        m
    }

    /// Minimum of `f` over the closed interval `[a, b]` (clamped to `[0,1]`).
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(1.0);
        let mut m = self.eval(a).min(self.eval(b));
        let mut i = self.piece(a) + 1;
        while i < self.xs.len() && self.xs[i] < b {
            m = m.min(self.ys[i]);
            i += 1;
        }
        m
    }

    /// `int_0^1 f`.
    pub fn integral(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

/// How a domain was specified; echoed into artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    Fractal {
        gamma: f64,
        m: u32,
        n_max: u32,
        /// Skip the `m` lower bounds (see [`FractalParams::relaxed`]).
        #[serde(default)]
        relaxed: bool,
        #[serde(default)]
        h_omega: Option<f64>,
        /// Chart window in `x'`; defaults to `[1/8, 7/8]`.
        #[serde(default)]
        window: Option<(f64, f64)>,
    },
    Flat {
        height: f64,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "half")]
        c: f64,
        #[serde(default)]
        h_omega: Option<f64>,
    },
    Samples {
        points: Vec<(f64, f64)>,
        #[serde(default)]
        base_box: bool,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        h_omega: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

/// Polygonal subgraph domain.
#[derive(Debug, Clone)]
pub struct HolderSubgraphDomain {
    pub profile: Profile,
    pub base_box: bool,
    pub gamma: f64,
    /// Hölder constant used for the oscillatory-domain constants.
    pub c: f64,
    pub h_omega: f64,
    /// Chart window `Omega^{(d-1)}` in `x'`.
    pub window: (f64, f64),
    pub fractal: Option<FractalParams>,
    pub spec: DomainSpec,
}

pub const BASE_HALF_WIDTH: f64 = 2.0;
pub const BASE_DEPTH: f64 = 2.0;

pub fn build_domain(spec: &DomainSpec) -> Result<HolderSubgraphDomain> {
    match spec {
        DomainSpec::Fractal {
            gamma,
            m,
            n_max,
            relaxed,
            h_omega,
            window,
        } => {
            let p = if *relaxed {
                FractalParams::relaxed(*gamma, *m, *n_max)?
            } else {
                FractalParams::new(*gamma, *m, *n_max)?
            };
            let nb = 1usize << (p.m * p.n_max + 1);
            if nb > 1 << 23 {
                return Err(invalid(
                    "n_max",
                    format!("{nb} breakpoints exceed the budget"),
                ));
            }
            let sp = p.breakpoint_spacing(p.n_max);
            let ys: Vec<f64> = (0..=nb)
                .map(|i| eval_series(&p, i as f64 * sp, p.n_max as i32))
                .collect();
            let profile = Profile::uniform(ys);
            let window = window.unwrap_or((0.125, 0.875));
            check_window(window)?;
            let h = match h_omega {
                Some(h) => *h,
                None => 0.25 * profile.min_on(window.0, window.1),
            };
            finish(profile, true, *gamma, 3.0, h, window, Some(p), spec.clone())
        }
        DomainSpec::Flat {
            height,
            gamma,
            c,
            h_omega,
        } => {
            if !(*height > 0.0) {
                return Err(invalid("height", "must be positive"));
            }
            let profile = Profile::uniform(vec![*height, *height]);
            let h = h_omega.unwrap_or(0.25 * height.min(1.0));
            finish(
                profile,
                false,
                *gamma,
                *c,
                h,
                (0.0, 1.0),
                None,
                spec.clone(),
            )
        }
        DomainSpec::Samples {
            points,
            base_box,
            gamma,
            c,
            h_omega,
        } => {
            let profile = Profile::new(
                points.iter().map(|p| p.0).collect(),
                points.iter().map(|p| p.1).collect(),
            )?;
            let h = match h_omega {
                Some(h) => *h,
                None => 0.25 * profile.min_on(0.0, 1.0).min(1.0),
            };
            finish(
                profile,
                *base_box,
                *gamma,
                *c,
                h,
                (0.0, 1.0),
                None,
                spec.clone(),
            )
        }
    }
}

fn check_window(w: (f64, f64)) -> Result<()> {
    if !(0.0 <= w.0 && w.0 < w.1 && w.1 <= 1.0) {
        return Err(invalid(
            "window",
            format!("{w:?} is not a subinterval of [0,1]"),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    profile: Profile,
    base_box: bool,
    gamma: f64,
    c: f64,
    h_omega: f64,
    window: (f64, f64),
    fractal: Option<FractalParams>,
    spec: DomainSpec,
) -> Result<HolderSubgraphDomain> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(
            "gamma",
            format!("need 0 < gamma <= 1, got {gamma}"),
        ));
    }
    if !(c > 0.0) {
        return Err(invalid("c", "must be positive"));
    }
    if !(h_omega > 0.0 && h_omega < 1.0) {
        return Err(invalid("h_omega", format!("need 0 < h < 1, got {h_omega}")));
    }
    Ok(HolderSubgraphDomain {
        profile,
        base_box,
        gamma,
        c,
        h_omega,
        window,
        fractal,
        spec,
    })
}

impl HolderSubgraphDomain {
    /// Boundary function at `x'` (clamped to `[0,1]`).
    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    /// Lower end of the subgraph columns: `-2` with the base box, else 0.
    pub fn floor(&self) -> f64 {
        if self.base_box {
            -BASE_DEPTH
        } else {
            0.0
        }
    }

    /// Horizontal extent of the whole domain.
    pub fn x_range(&self) -> (f64, f64) {
        if self.base_box {
            (-BASE_HALF_WIDTH, BASE_HALF_WIDTH)
        } else {
            (0.0, 1.0)
        }
    }

    /// Bounding box `[x0, x1] x [y0, y1]`.
    pub fn bbox(&self) -> [f64; 4] {
        let (x0, x1) = self.x_range();
        let top = self.profile.ys.iter().cloned().fold(0.0, f64::max);
        [x0, x1, self.floor(), top]
    }

    /// Membership in the open set.
    pub fn contains(&self, p: Point) -> bool {
        let [x, y] = p;
        if x > 0.0 && x < 1.0 && y > self.floor() && y < self.f(x) {
            return true;
        }
        self.base_box && x > -BASE_HALF_WIDTH && x < BASE_HALF_WIDTH && y > -BASE_DEPTH && y < 0.0
    }

    pub fn in_subgraph(&self, p: Point) -> bool {
        p[0] > 0.0 && p[0] < 1.0 && p[1] >= 0.0 && p[1] < self.f(p[0])
    }

    /// Height `f(x') - x_d` of a point in the subgraph chart.
    pub fn h_at(&self, p: Point) -> Result<f64> {
        if !self.in_subgraph(p) {
            return Err(Error::ChartMiss { x: p[0], y: p[1] });
        }
        Ok(self.f(p[0]) - p[1])
    }

    /// `h_x` without membership checks.
    #[inline]
    pub fn height(&self, p: Point) -> f64 {
        self.f(p[0]) - p[1]
    }

    /// Membership in the chart layer `{x' in window shrunk by h_omega,
    /// h_omega < x_d < f(x')}`.
    pub fn in_chart_layer(&self, p: Point) -> bool {
        let h = self.h_omega;
        p[0] > self.window.0 + h && p[0] < self.window.1 - h && p[1] > h && p[1] < self.f(p[0])
    }

    /// Inner window `hat Omega^{(d-1)}` (margin `2 h_omega`).
    pub fn hat_window(&self) -> (f64, f64) {
        (
            self.window.0 + 2.0 * self.h_omega,
            self.window.1 - 2.0 * self.h_omega,
        )
    }

    /// `f > 3 h_omega` on the chart window, as required of a chart.
    pub fn chart_is_valid(&self) -> bool {
        self.profile.min_on(self.window.0, self.window.1) > 3.0 * self.h_omega
    }

    /// Exact area.
    pub fn area(&self) -> f64 {
        let base = if self.base_box {
            4.0 * BASE_HALF_WIDTH * BASE_DEPTH / 2.0
        } else {
            0.0
        };
        base + self.profile.integral()
    }

    /// Counter-clockwise boundary polygon.
    pub fn polygon(&self) -> Vec<Point> {
        let mut v: Vec<Point> = Vec::with_capacity(self.profile.len() + 8);
        let pr = &self.profile;
        let n = pr.len();
        if self.base_box {
            v.push([-BASE_HALF_WIDTH, -BASE_DEPTH]);
            v.push([BASE_HALF_WIDTH, -BASE_DEPTH]);
            v.push([BASE_HALF_WIDTH, 0.0]);
            v.push([1.0, 0.0]);
        } else {
            v.push([0.0, 0.0]);
            v.push([1.0, 0.0]);
        }
        for i in (0..n).rev() {
            v.push([pr.xs[i], pr.ys[i]]);
        }
        v.push([0.0, 0.0]);
        if self.base_box {
            v.push([-BASE_HALF_WIDTH, 0.0]);
        }
        v.dedup();
        if v.first() == v.last() {
            v.pop();
        }
        v
    }

    /// Boundary segments other than the graph of `f`.
    fn extra_segments(&self) -> Vec<[Point; 2]> {
        let f0 = self.profile.ys[0];
        let f1 = *self.profile.ys.last().unwrap();
        let mut s = Vec::new();
        if f0 > 0.0 {
            s.push([[0.0, 0.0], [0.0, f0]]);
        }
        if f1 > 0.0 {
            s.push([[1.0, 0.0], [1.0, f1]]);
        }
        if self.base_box {
            let (w, dp) = (BASE_HALF_WIDTH, BASE_DEPTH);
            s.push([[-w, 0.0], [0.0, 0.0]]);
            s.push([[1.0, 0.0], [w, 0.0]]);
            s.push([[-w, -dp], [-w, 0.0]]);
            s.push([[w, -dp], [w, 0.0]]);
            s.push([[-w, -dp], [w, -dp]]);
        } else {
            s.push([[0.0, 0.0], [1.0, 0.0]]);
        }
        s
    }

    /// Euclidean distance from `p` to the boundary.
    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        for [a, b] in self.extra_segments() {
            best = best.min(seg_dist(p, a, b));
        }
        let pr = &self.profile;
        let n = pr.len();
        let start = pr.piece(p[0]);
        let mut i = start;
        loop {
            best = best.min(seg_dist(
                p,
                [pr.xs[i], pr.ys[i]],
                [pr.xs[i + 1], pr.ys[i + 1]],
            ));
            if i + 2 >= n || pr.xs[i + 1] - p[0] >= best {
                break;
            }
            i += 1;
        }
        let mut i = start;
        while i > 0 && p[0] - pr.xs[i] < best {
            i -= 1;
            best = best.min(seg_dist(
                p,
                [pr.xs[i], pr.ys[i]],
                [pr.xs[i + 1], pr.ys[i + 1]],
            ));
        }
        best
    }

    /// Breakpoint table as CSV text.
    pub fn breakpoints_csv(&self) -> String {
        let mut s = String::from("x,f\n");
        for (x, y) in self.profile.xs.iter().zip(&self.profile.ys) {
            s.push_str(&format!("{x:e},{y:e}\n"));
        }
        s
    }
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

/// Empirical Hölder ratio `max |f(x)-f(y)| / |x-y|^gamma` over random pairs.
///
/// Half of the pairs are uniform in `(0,1)^2`; the other half use
/// log-uniform separations down to `2^{-40}` so that small scales are probed.
pub fn holder_check_fn(f: impl Fn(f64) -> f64, gamma: f64, num_pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..num_pairs {
        let x: f64 = rng.random_range(0.0..1.0);
        let y = if i % 2 == 0 {
            rng.random_range(0.0..1.0)
        } else {
            let r = 2f64.powf(-rng.random_range(0.0..40.0));
            let s = if rng.random_bool(0.5) { r } else { -r };
            (x + s).clamp(1e-300, 1.0 - f64::EPSILON)
        };
        if x == y || x <= 0.0 {
            continue;
        }
        let ratio = (f(x) - f(y)).abs() / (x - y).abs().powf(gamma);
        worst = worst.max(ratio);
    }
    worst
}

pub fn holder_check_fractal(p: &FractalParams, num_pairs: usize, seed: u64) -> f64 {
    holder_check_fn(
        |x| eval_series(p, x, p.n_max as i32),
        p.gamma,
        num_pairs,
        seed,
    )
}

pub fn holder_check(dom: &HolderSubgraphDomain, num_pairs: usize, seed: u64) -> f64 {
    holder_check_fn(|x| dom.f(x), dom.gamma, num_pairs, seed)
}

/// Largest oscillation of `f_{n-1}` over single level-`n` cells (sampled).
pub fn cell_oscillation(p: &FractalParams, n: u32, num_cells: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = p.cell_width(n);
    let mut worst: f64 = 0.0;
    for _ in 0..num_cells {
        let k = rng.random_range(0..p.cells(n));
        let left = k as f64 * w;
        // f_{n-1} is linear on the cell: the oscillation is the end difference
        let a = eval_series(p, left, n as i32 - 1);
        let b = eval_series(p, left + w, n as i32 - 1);
        worst = worst.max((a - b).abs());
    }
    worst
}

/// Result of the exact spike-window scan at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeScan {
    pub n: u32,
    pub cells: u64,
    /// Smallest `(f - a_{n,k}) / 2^{-gamma m n}` on the middle half of a cell.
    pub min_ratio_mid: f64,
    /// Largest `(f - a_{n,k}) / 2^{-gamma m n}` on a cell.
    pub max_ratio: f64,
    pub violations: u64,
}

/// Checks `(1/8) 2^{-gamma m n} <= f - a_{n,k}` on the middle half of each
/// cell and `f - a_{n,k} <= 2^{-gamma m n}` on the whole cell, for
/// `f = f_{n_max}`. Both sides are piecewise linear, so scanning breakpoints
/// and the window ends is exact.
pub fn spike_window_scan(p: &FractalParams, n: u32) -> Result<SpikeScan> {
    if n > p.n_max {
        return Err(invalid("n", format!("{n} exceeds n_max")));
    }
    let scale = p.level_weight(n);
    let w = p.cell_width(n);
    let sp = p.breakpoint_spacing(p.n_max);
    let per_cell = (w / sp).round() as u64;
    let f = |x: f64| eval_series(p, x, p.n_max as i32);
    let mut out = SpikeScan {
        n,
        cells: p.cells(n),
        min_ratio_mid: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        violations: 0,
    };
    for k in 0..p.cells(n) {
        let a = spike_base(p, n, k)?;
        let left = k as f64 * w;
        let (lo, hi) = (left + 0.25 * w, left + 0.75 * w);
        let mut bad = false;
        let mut visit = |x: f64, inside: bool, out: &mut SpikeScan| {
            let r = (f(x) - a) / scale;
            out.max_ratio = out.max_ratio.max(r);
            if r > 1.0 {
                bad = true;
            }
            if inside {
                out.min_ratio_mid = out.min_ratio_mid.min(r);
                if r < 0.125 {
                    bad = true;
                }
            }
        };
        for i in 0..=per_cell {
            let x = left + i as f64 * sp;
            visit(x, x >= lo && x <= hi, &mut out);
        }
        visit(lo, true, &mut out);
        visit(hi, true, &mut out);
        if bad {
            out.violations += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p06() -> FractalParams {
        FractalParams::new(0.6, 10, 2).unwrap()
    }

    #[test]
    fn series_values() {
        let p = p06();
        assert_eq!(eval_fractal_boundary(&p, 0.5, Level::Full).unwrap(), 0.5);
        let x = 2f64.powi(-11);
        let v = eval_fractal_boundary(&p, x, Level::Full).unwrap();
        let expect = 2f64.powi(-11) + 2f64.powf(-6.0) / 2.0;
        assert!((v - expect).abs() < 1e-16);
        assert_eq!(
            eval_fractal_boundary(&p, 0.3, Level::Upto(-1)).unwrap(),
            0.0
        );
        assert!(eval_fractal_boundary(&p, 1.0, Level::Full).is_err());
        assert!(eval_fractal_boundary(&p, 0.3, Level::Upto(3)).is_err());
    }

    #[test]
    fn bases() {
        let p = p06();
        assert_eq!(spike_base(&p, 0, 0).unwrap(), 0.0);
        assert_eq!(spike_base(&p, 1, 0).unwrap(), 2f64.powi(-10));
        assert_eq!(spike_base(&p, 1, 512).unwrap(), 0.5);
        assert!(spike_base(&p, 1, 1024).is_err());
    }

    #[test]
    fn param_bounds() {
        assert!(FractalParams::new(0.75, 8, 1).is_err());
        assert!(FractalParams::relaxed(0.75, 8, 1).is_ok());
        assert!(FractalParams::new(0.6, 9, 1).is_err());
    }

    #[test]
    fn flat_and_samples() {
        let d = build_domain(&DomainSpec::Flat {
            height: 1.0,
            gamma: 1.0,
            c: 0.5,
            h_omega: None,
        })
        .unwrap();
        assert_eq!(d.area(), 1.0);
        assert!((d.h_at([0.3, 0.25]).unwrap() - 0.75).abs() < 1e-15);
        assert!(d.h_at([0.3, -0.5]).is_err());
        assert!((d.dist_to_boundary([0.3, 0.25]) - 0.25).abs() < 1e-15);
        let s = build_domain(&DomainSpec::Samples {
            points: vec![(0.0, 0.5), (0.5, 1.0), (1.0, 0.5)],
            base_box: false,
            gamma: 1.0,
            c: 1.0,
            h_omega: None,
        })
        .unwrap();
        assert!((s.area() - 0.75).abs() < 1e-15);
        assert_eq!(s.f(0.25), 0.75);
    }

    #[test]
    fn fractal_domain() {
        let d = build_domain(&DomainSpec::Fractal {
            gamma: 0.6,
            m: 10,
            n_max: 1,
            relaxed: false,
            h_omega: None,
            window: None,
        })
        .unwrap();
        assert_eq!(d.profile.len(), 2049);
        assert!(d.chart_is_valid());
        assert_eq!(d.h_at([0.5, 0.25]).unwrap(), 0.25);
        assert!(d.h_at([0.3, -0.5]).is_err());
        assert!(d.contains([0.3, -0.5]));
        assert!(d.contains([-1.0, -1.0]));
        assert!(!d.contains([-1.0, 0.1]));
        // shoelace area against the exact area
        let poly = d.polygon();
        let mut a = 0.0;
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            a += p[0] * q[1] - q[0] * p[1];
        }
        assert!((0.5 * a - d.area()).abs() < 1e-12);
        assert!((d.dist_to_boundary([-1.0, -1.5]) - 0.5).abs() < 1e-15);
    }
}
