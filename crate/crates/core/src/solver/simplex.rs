//! Bounded-variable revised primal simplex.
//!
//! Rows are written `A x - s = 0` with one logical variable `s_i` per row
//! carrying the row's range, so every variable (structural or logical) is
//! simply bounded. The basis inverse is held explicitly as a dense matrix
//! and updated by elementary row operations; it is rebuilt from scratch
//! every [`REFACTOR_EVERY`] pivots and before optimality is declared.
//!
//! Phase 1 minimizes the sum of bound violations of basic variables with the
//! first-breakpoint ratio test; phase 2 minimizes the cost. Pricing is
//! Dantzig's rule (ties by lowest index) with a Harris ratio test; after
//! [`STALL_LIMIT`] consecutive degenerate pivots the solver falls back to
//! Bland's rule until it makes progress.

use serde::{Deserialize, Serialize};

/// Primal feasibility tolerance on scaled rows and bounds.
pub const TOL_FEAS: f64 = 1e-7;
const TOL_DUAL: f64 = 1e-9;
const TOL_PIVOT: f64 = 1e-9;
const TOL_HARRIS: f64 = 1e-9;
const TOL_DROP: f64 = 1e-14;
const REFACTOR_EVERY: usize = 200;
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (clamped to their bounds).
    pub values: Vec<f64>,
    /// Objective value (maximization sense).
    pub objective: f64,
    pub iterations: usize,
    /// Row duals for the maximization problem: `c - A^T y` is the vector of
    /// reduced costs. Meaningful when `status == Optimal`.
    pub duals: Vec<f64>,
}

/// A row `lower <= a.x <= upper`; either side may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// `maximize c.x` subject to ranged rows and finite variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`, in the problem's own units.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(k, a)| a * x[k]).sum();
            worst = worst.max(row.lower - act).max(act - row.upper);
        }
        for ((&l, &u), &v) in self.lower.iter().zip(&self.upper).zip(x) {
            worst = worst.max(l - v).max(v - u);
        }
        worst.max(0.0)
    }

    /// Upper bound on the optimum implied by row multipliers `y` (weak
    /// duality). Infinite when `y` has the wrong sign on a one-sided row.
    pub fn dual_bound(&self, y: &[f64]) -> f64 {
        let mut reduced = self.objective.clone();
        let mut bound = 0.0;
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for &(k, a) in &row.coeffs {
                reduced[k] -= a * yi;
            }
            bound += if yi > 0.0 { yi * row.upper } else { yi * row.lower };
        }
        for ((&d, &l), &u) in reduced.iter().zip(&self.lower).zip(&self.upper) {
            bound += if d > 0.0 { d * u } else { d * l };
        }
        if bound.is_nan() {
            f64::INFINITY
        } else {
            bound
        }
    }
}

/// A problem scaled and stored column-wise, ready for repeated solves under
/// different variable bounds.
#[derive(Debug, Clone)]
pub struct PreparedLp {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
    /// Scaled cost for the minimization form (`-c * col_scale`).
    cost: Vec<f64>,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PreparedLp {
    pub fn new(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        let m = problem.rows.len();

        let row_scale: Vec<f64> = problem
            .rows
            .iter()
            .map(|r| {
                let mx = r.coeffs.iter().map(|&(_, a)| a.abs()).fold(0.0, f64::max);
                if mx > 0.0 {
                    1.0 / mx
                } else {
                    1.0
                }
            })
            .collect();
        let mut col_max = vec![0.0f64; n];
        let mut counts = vec![0usize; n];
        for (i, r) in problem.rows.iter().enumerate() {
            for &(k, a) in &r.coeffs {
                col_max[k] = col_max[k].max((a * row_scale[i]).abs());
                counts[k] += 1;
            }
        }
        let col_scale: Vec<f64> = col_max
            .iter()
            .map(|&mx| if mx > 0.0 { 1.0 / mx } else { 1.0 })
            .collect();

        let mut col_start = vec![0usize; n + 1];
        for k in 0..n {
            col_start[k + 1] = col_start[k] + counts[k];
        }
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (i, r) in problem.rows.iter().enumerate() {
            for &(k, a) in &r.coeffs {
                col_row[fill[k]] = i;
                col_val[fill[k]] = a * row_scale[i] * col_scale[k];
                fill[k] += 1;
            }
        }

        PreparedLp {
            n,
            m,
            col_start,
            col_row,
            col_val,
            row_lo: problem
                .rows
                .iter()
                .zip(&row_scale)
                .map(|(r, s)| r.lower * s)
                .collect(),
            row_hi: problem
                .rows
                .iter()
                .zip(&row_scale)
                .map(|(r, s)| r.upper * s)
                .collect(),
            row_scale,
            cost: problem
                .objective
                .iter()
                .zip(&col_scale)
                .map(|(c, s)| -c * s)
                .collect(),
            col_scale,
            objective: problem.objective.clone(),
            lower: problem.lower.clone(),
            upper: problem.upper.clone(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn solve(&self) -> LpSolution {
        self.solve_with_bounds(&self.lower, &self.upper)
    }

    pub fn solve_with_bounds(&self, lower: &[f64], upper: &[f64]) -> LpSolution {
        self.solve_with_margin(lower, upper, 0.0)
    }

    /// Solves with every inequality row tightened by `margin` (in scaled
    /// units), so a solution satisfies the original rows strictly.
    pub fn solve_with_margin(&self, lower: &[f64], upper: &[f64], margin: f64) -> LpSolution {
        assert_eq!(lower.len(), self.n);
        assert_eq!(upper.len(), self.n);
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return LpSolution {
                status: LpStatus::Infeasible,
                values: lower.to_vec(),
                objective: f64::NEG_INFINITY,
                iterations: 0,
                duals: vec![0.0; self.m],
            };
        }
        let mut lb = Vec::with_capacity(self.n + self.m);
        let mut ub = Vec::with_capacity(self.n + self.m);
        for k in 0..self.n {
            lb.push(lower[k] / self.col_scale[k]);
            ub.push(upper[k] / self.col_scale[k]);
        }
        for i in 0..self.m {
            let (mut lo, mut hi) = (self.row_lo[i], self.row_hi[i]);
            if margin > 0.0 && lo < hi {
                let (tlo, thi) = (lo + margin, hi - margin);
                if tlo <= thi {
                    lo = if lo.is_finite() { tlo } else { lo };
                    hi = if hi.is_finite() { thi } else { hi };
                }
            }
            lb.push(lo);
            ub.push(hi);
        }
        let mut sx = Simplex::new(self, lb, ub);
        let status = sx.run();
        sx.into_solution(status)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

enum Step {
    Flip(f64),
    Pivot { pos: usize, theta: f64, to_upper: bool },
    Unbounded,
}

struct Simplex<'a> {
    lp: &'a PreparedLp,
    n: usize,
    m: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    rho: Vec<f64>,
    scratch: Vec<f64>,
    nz: Vec<usize>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a PreparedLp, lb: Vec<f64>, ub: Vec<f64>) -> Self {
        let (n, m) = (lp.n, lp.m);
        let mut x = vec![0.0; n + m];
        let mut status = vec![VarStatus::Basic; n + m];
        for k in 0..n {
            x[k] = lb[k];
            status[k] = VarStatus::AtLower;
        }
        Simplex {
            lp,
            n,
            m,
            lb,
            ub,
            x,
            status,
            basis: (n..n + m).collect(),
            binv: vec![0.0; m * m],
            d: vec![0.0; n + m],
            alpha: vec![0.0; m],
            rho: vec![0.0; m],
            scratch: vec![0.0; m],
            nz: Vec::with_capacity(m),
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn column(&self, k: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.lp.col_start[k], self.lp.col_start[k + 1]);
        (&self.lp.col_row[a..b], &self.lp.col_val[a..b])
    }

    /// `v . a_k`
    #[inline]
    fn col_dot(&self, k: usize, v: &[f64]) -> f64 {
        if k >= self.n {
            return -v[k - self.n];
        }
        let (rows, vals) = self.column(k);
        rows.iter().zip(vals).map(|(&r, &a)| v[r] * a).sum()
    }

    /// `alpha = B^-1 a_k`
    fn ftran(&mut self, k: usize) {
        let m = self.m;
        if k >= self.n {
            let r = k - self.n;
            for i in 0..m {
                self.alpha[i] = -self.binv[i * m + r];
            }
            return;
        }
        let (a, b) = (self.lp.col_start[k], self.lp.col_start[k + 1]);
        let rows = &self.lp.col_row[a..b];
        let vals = &self.lp.col_val[a..b];
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let mut s = 0.0;
            for (&r, &v) in rows.iter().zip(vals) {
                s += row[r] * v;
            }
            self.alpha[i] = s;
        }
    }

    /// Replaces the basic variable at position `p` in the inverse using the
    /// current `alpha`.
    fn update_inverse(&mut self, p: usize) {
        let m = self.m;
        let piv = self.alpha[p];
        self.nz.clear();
        for j in 0..m {
            let v = self.binv[p * m + j] / piv;
            self.binv[p * m + j] = v;
            self.scratch[j] = v;
            if v != 0.0 {
                self.nz.push(j);
            }
        }
        for i in 0..m {
            if i == p {
                continue;
            }
            let f = self.alpha[i];
            if f.abs() <= TOL_DROP {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for &j in &self.nz {
                row[j] -= f * self.scratch[j];
            }
        }
    }

    /// Rebuilds the inverse of the current basis from the identity. Basic
    /// columns that turn out dependent are swapped for logicals.
    fn reinvert(&mut self) {
        let (n, m) = (self.n, self.m);
        let target: Vec<usize> = {
            let mut t: Vec<usize> = self.basis.iter().copied().filter(|&k| k < n).collect();
            t.sort_unstable();
            t
        };
        let mut in_basis = vec![false; n + m];
        for &k in &self.basis {
            in_basis[k] = true;
        }
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
            self.basis[i] = n + i;
        }
        let mut dropped = Vec::new();
        for q in target {
            self.ftran(q);
            let mut best = None;
            let mut best_abs = TOL_PIVOT;
            for p in 0..m {
                let k = self.basis[p];
                if k >= n && !in_basis[k] && self.alpha[p].abs() > best_abs {
                    best_abs = self.alpha[p].abs();
                    best = Some(p);
                }
            }
            match best {
                Some(p) => {
                    self.update_inverse(p);
                    self.basis[p] = q;
                }
                None => dropped.push(q),
            }
        }
        for q in dropped {
            let v = self.x[q];
            self.status[q] = if (v - self.lb[q]).abs() <= (self.ub[q] - v).abs() {
                self.x[q] = self.lb[q];
                VarStatus::AtLower
            } else {
                self.x[q] = self.ub[q];
                VarStatus::AtUpper
            };
        }
        for &k in &self.basis {
            self.status[k] = VarStatus::Basic;
        }
        self.since_refactor = 0;
    }

    fn compute_primal(&mut self) {
        let (n, m) = (self.n, self.m);
        let r = &mut self.scratch;
        r.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n + m {
            if self.status[k] == VarStatus::Basic || self.x[k] == 0.0 {
                continue;
            }
            if k >= n {
                r[k - n] -= self.x[k];
            } else {
                let (a, b) = (self.lp.col_start[k], self.lp.col_start[k + 1]);
                for idx in a..b {
                    r[self.lp.col_row[idx]] += self.lp.col_val[idx] * self.x[k];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let s: f64 = row.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
            self.x[self.basis[i]] = -s;
        }
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.x[k];
        if v < self.lb[k] - TOL_FEAS {
            self.lb[k] - v
        } else if v > self.ub[k] + TOL_FEAS {
            v - self.ub[k]
        } else {
            0.0
        }
    }

    fn primal_infeasible(&self) -> bool {
        self.basis.iter().any(|&k| self.infeasibility(k) > 0.0)
    }

    fn cost(&self, k: usize) -> f64 {
        if k < self.n {
            self.lp.cost[k]
        } else {
            0.0
        }
    }

    /// Recomputes reduced costs for the phase-1 (`phase1`) or phase-2 cost
    /// vector from scratch.
    fn compute_duals(&mut self, phase1: bool) {
        let m = self.m;
        let pi = &mut self.rho;
        pi.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let k = self.basis[i];
            let c = if phase1 {
                let v = self.x[k];
                if v < self.lb[k] - TOL_FEAS {
                    -1.0
                } else if v > self.ub[k] + TOL_FEAS {
                    1.0
                } else {
                    0.0
                }
            } else if k < self.n {
                self.lp.cost[k]
            } else {
                0.0
            };
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (p, b) in pi.iter_mut().zip(row) {
                    *p += c * b;
                }
            }
        }
        let pi = std::mem::take(&mut self.rho);
        for k in 0..self.n + m {
            self.d[k] = if self.status[k] == VarStatus::Basic {
                0.0
            } else {
                let c = if phase1 { 0.0 } else { self.cost(k) };
                c - self.col_dot(k, &pi)
            };
        }
        self.rho = pi;
    }

    /// Row duals `pi = c_B B^-1` for the phase-2 costs, in scaled space.
    fn phase2_pi(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for i in 0..m {
            let c = self.cost(self.basis[i]);
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (p, b) in pi.iter_mut().zip(row) {
                    *p += c * b;
                }
            }
        }
        pi
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_mag = 0.0;
        for k in 0..self.n + self.m {
            let dir = match self.status[k] {
                VarStatus::Basic => continue,
                _ if self.ub[k] <= self.lb[k] => continue,
                VarStatus::AtLower if self.d[k] < -TOL_DUAL => 1.0,
                VarStatus::AtUpper if self.d[k] > TOL_DUAL => -1.0,
                _ => continue,
            };
            if self.bland {
                return Some((k, dir));
            }
            let mag = self.d[k].abs();
            if mag > best_mag {
                best_mag = mag;
                best = Some((k, dir));
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64, phase1: bool) -> Step {
        // candidate: (pos, distance, |rate|, to_upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for i in 0..self.m {
            let a = self.alpha[i];
            if a.abs() <= TOL_PIVOT {
                continue;
            }
            let k = self.basis[i];
            let rate = -dir * a;
            let v = self.x[k];
            let (lb, ub) = (self.lb[k], self.ub[k]);
            let cand = if phase1 && v < lb - TOL_FEAS {
                (rate > 0.0).then(|| (lb - v, false))
            } else if phase1 && v > ub + TOL_FEAS {
                (rate < 0.0).then(|| (v - ub, true))
            } else if rate < 0.0 && lb.is_finite() {
                Some(((v - lb).max(0.0), false))
            } else if rate > 0.0 && ub.is_finite() {
                Some(((ub - v).max(0.0), true))
            } else {
                None
            };
            if let Some((dist, to_upper)) = cand {
                cands.push((i, dist, rate.abs(), to_upper));
            }
        }
        let flip = self.ub[q] - self.lb[q];

        let chosen = if cands.is_empty() {
            None
        } else if self.bland {
            let mut best = cands[0];
            let mut best_ratio = best.1 / best.2;
            for &c in &cands[1..] {
                let ratio = c.1 / c.2;
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && self.basis[c.0] < self.basis[best.0])
                {
                    best = c;
                    best_ratio = ratio;
                }
            }
            Some((best, best_ratio))
        } else {
            let theta_max = cands
                .iter()
                .map(|c| (c.1 + TOL_HARRIS) / c.2)
                .fold(f64::INFINITY, f64::min);
            let mut best: Option<(usize, f64, f64, bool)> = None;
            for &c in &cands {
                if c.1 / c.2 <= theta_max {
                    let better = match best {
                        None => true,
                        Some(b) => c.2 > b.2 || (c.2 == b.2 && self.basis[c.0] < self.basis[b.0]),
                    };
                    if better {
                        best = Some(c);
                    }
                }
            }
            best.map(|b| (b, b.1 / b.2))
        };

        match chosen {
            Some((_, theta)) if flip.is_finite() && flip <= theta => Step::Flip(flip),
            Some((c, theta)) => Step::Pivot {
                pos: c.0,
                theta,
                to_upper: c.3,
            },
            None if flip.is_finite() => Step::Flip(flip),
            None => Step::Unbounded,
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: &Step) {
        let theta = match *step {
            Step::Flip(t) => t,
            Step::Pivot { theta, .. } => theta,
            Step::Unbounded => return,
        };
        if theta != 0.0 {
            for i in 0..self.m {
                let a = self.alpha[i];
                if a != 0.0 {
                    self.x[self.basis[i]] -= dir * theta * a;
                }
            }
        }
        match *step {
            Step::Flip(_) => {
                if dir > 0.0 {
                    self.x[q] = self.ub[q];
                    self.status[q] = VarStatus::AtUpper;
                } else {
                    self.x[q] = self.lb[q];
                    self.status[q] = VarStatus::AtLower;
                }
            }
            Step::Pivot { pos, to_upper, .. } => {
                self.x[q] += dir * theta;
                let leaving = self.basis[pos];
                if to_upper {
                    self.x[leaving] = self.ub[leaving];
                    self.status[leaving] = VarStatus::AtUpper;
                } else {
                    self.x[leaving] = self.lb[leaving];
                    self.status[leaving] = VarStatus::AtLower;
                }
                self.update_inverse(pos);
                self.basis[pos] = q;
                self.status[q] = VarStatus::Basic;
                self.since_refactor += 1;
            }
            Step::Unbounded => {}
        }
        if theta * self.d[q].abs() <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
        self.iterations += 1;
    }

    /// Incremental phase-2 reduced-cost update for a pivot on row `p` with
    /// entering variable `q`. Must run before the inverse is updated.
    fn update_duals(&mut self, p: usize, q: usize) {
        let m = self.m;
        let theta_d = self.d[q] / self.alpha[p];
        self.rho.copy_from_slice(&self.binv[p * m..(p + 1) * m]);
        let leaving = self.basis[p];
        for k in 0..self.n + m {
            if self.status[k] == VarStatus::Basic {
                continue;
            }
            let a = self.col_dot(k, &self.rho);
            if a != 0.0 {
                self.d[k] -= theta_d * a;
            }
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta_d;
    }

    fn run(&mut self) -> LpStatus {
        let limit = 50_000 + 50 * (self.n + self.m);
        self.reinvert();
        self.compute_primal();
        let mut phase2_ready = false;
        loop {
            if self.iterations >= limit {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.reinvert();
                self.compute_primal();
                phase2_ready = false;
            }
            if self.primal_infeasible() {
                phase2_ready = false;
                self.compute_duals(true);
                let Some((q, dir)) = self.choose_entering() else {
                    // confirm on a fresh factorization before giving up
                    if self.since_refactor > 0 {
                        self.reinvert();
                        self.compute_primal();
                        continue;
                    }
                    return LpStatus::Infeasible;
                };
                self.ftran(q);
                let step = self.ratio_test(q, dir, true);
                if matches!(step, Step::Unbounded) {
                    return LpStatus::Infeasible;
                }
                self.apply_step(q, dir, &step);
            } else {
                if !phase2_ready {
                    self.compute_duals(false);
                    phase2_ready = true;
                }
                let Some((q, dir)) = self.choose_entering() else {
                    if self.since_refactor > 0 {
                        self.reinvert();
                        self.compute_primal();
                        phase2_ready = false;
                        continue;
                    }
                    self.compute_duals(false);
                    if self.choose_entering().is_some() {
                        continue;
                    }
                    return LpStatus::Optimal;
                };
                self.ftran(q);
                let step = self.ratio_test(q, dir, false);
                match step {
                    Step::Unbounded => return LpStatus::Unbounded,
                    Step::Pivot { pos, .. } => self.update_duals(pos, q),
                    Step::Flip(_) => {}
                }
                self.apply_step(q, dir, &step);
            }
        }
    }

    fn into_solution(self, status: LpStatus) -> LpSolution {
        let lp = self.lp;
        let values: Vec<f64> = (0..self.n)
            .map(|k| (self.x[k] * lp.col_scale[k]).clamp(lp_lower(&self, k), lp_upper(&self, k)))
            .collect();
        let objective = if status == LpStatus::Optimal {
            lp.objective.iter().zip(&values).map(|(c, v)| c * v).sum()
        } else {
            f64::NEG_INFINITY
        };
        let duals = if status == LpStatus::Optimal {
            self.phase2_pi()
                .iter()
                .zip(&lp.row_scale)
                .map(|(pi, r)| -pi * r)
                .collect()
        } else {
            vec![0.0; self.m]
        };
        LpSolution {
            status,
            values,
            objective,
            iterations: self.iterations,
            duals,
        }
    }
}

fn lp_lower(sx: &Simplex<'_>, k: usize) -> f64 {
    sx.lb[k] * sx.lp.col_scale[k]
}

fn lp_upper(sx: &Simplex<'_>, k: usize) -> f64 {
    sx.ub[k] * sx.lp.col_scale[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn le(coeffs: &[(usize, f64)], rhs: f64) -> LpRow {
        LpRow {
            coeffs: coeffs.to_vec(),
            lower: f64::NEG_INFINITY,
            upper: rhs,
        }
    }

    fn ge(coeffs: &[(usize, f64)], rhs: f64) -> LpRow {
        LpRow {
            coeffs: coeffs.to_vec(),
            lower: rhs,
            upper: f64::INFINITY,
        }
    }

    fn solve(p: &LpProblem) -> LpSolution {
        PreparedLp::new(p).solve()
    }

    #[test]
    fn single_bounded_variable() {
        let p = LpProblem {
            objective: vec![1.0],
            lower: vec![0.0],
            upper: vec![1.0],
            rows: vec![],
        };
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.values, vec![1.0]);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn degenerate_optimum() {
        let p = LpProblem {
            objective: vec![1.0, 1.0],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            rows: vec![le(&[(0, 1.0), (1, 1.0)], 1.0)],
        };
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn two_variable_textbook_lp() {
        // maximize 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x, y >= 0
        let p = LpProblem {
            objective: vec![3.0, 2.0],
            lower: vec![0.0, 0.0],
            upper: vec![100.0, 100.0],
            rows: vec![le(&[(0, 1.0), (1, 1.0)], 4.0), le(&[(0, 1.0), (1, 3.0)], 6.0)],
        };
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 12.0).abs() <= 1e-9);
        assert!((s.values[0] - 4.0).abs() <= 1e-9);
        assert!(s.values[1].abs() <= 1e-9);
        // strong duality at the optimum
        assert!((p.dual_bound(&s.duals) - 12.0).abs() <= 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let p = LpProblem {
            objective: vec![1.0, 1.0],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            rows: vec![ge(&[(0, 1.0), (1, 1.0)], 3.0)],
        };
        assert_eq!(solve(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded_logical_direction() {
        // bounded structurals cannot be unbounded; an empty row set with
        // crossed bounds is infeasible instead
        let p = LpProblem {
            objective: vec![1.0],
            lower: vec![2.0],
            upper: vec![1.0],
            rows: vec![],
        };
        assert_eq!(solve(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_and_ranged_rows() {
        // maximize x + 2y s.t. x + y = 3, 1 <= x - y <= 2
        let p = LpProblem {
            objective: vec![1.0, 2.0],
            lower: vec![0.0, 0.0],
            upper: vec![10.0, 10.0],
            rows: vec![
                LpRow {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    lower: 3.0,
                    upper: 3.0,
                },
                LpRow {
                    coeffs: vec![(0, 1.0), (1, -1.0)],
                    lower: 1.0,
                    upper: 2.0,
                },
            ],
        };
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 2.0).abs() <= 1e-9);
        assert!((s.values[1] - 1.0).abs() <= 1e-9);
        assert!((s.objective - 4.0).abs() <= 1e-9);
    }

    #[test]
    fn margin_leaves_strict_slack() {
        let p = LpProblem {
            objective: vec![1.0],
            lower: vec![0.0],
            upper: vec![10.0],
            rows: vec![le(&[(0, 2.0)], 4.0)],
        };
        let prepared = PreparedLp::new(&p);
        let s = prepared.solve_with_margin(&p.lower, &p.upper, 1e-6);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(2.0 * s.values[0] < 4.0);
        assert!(2.0 * s.values[0] > 4.0 - 1e-5);
    }

    fn random_lp(seed: u64) -> LpProblem {
        let mut rng = stream_rng(seed, 7);
        let n = rng.gen_range(2..9);
        let m = rng.gen_range(1..8);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let rows = (0..m)
            .map(|_| {
                let mut coeffs = Vec::new();
                for k in 0..n {
                    if rng.gen_bool(0.7) {
                        coeffs.push((k, rng.gen_range(-3.0..3.0)));
                    }
                }
                let act: f64 = coeffs.iter().map(|&(k, a)| a * x0[k]).sum();
                match rng.gen_range(0..3) {
                    0 => le(&coeffs, act + rng.gen_range(0.0..2.0)),
                    1 => ge(&coeffs, act - rng.gen_range(0.0..2.0)),
                    _ => LpRow {
                        coeffs,
                        lower: act,
                        upper: act,
                    },
                }
            })
            .collect();
        LpProblem {
            objective: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            lower: vec![0.0; n],
            upper: vec![5.0; n],
            rows,
        }
    }

    #[test]
    fn random_feasible_lps_solve_to_strong_duality() {
        for seed in 0..300 {
            let p = random_lp(seed);
            let s = solve(&p);
            assert_eq!(s.status, LpStatus::Optimal, "seed {seed}");
            assert!(p.max_violation(&s.values) <= 1e-7, "seed {seed}");
            let bound = p.dual_bound(&s.duals);
            assert!(s.objective <= bound + 1e-7, "seed {seed}");
            assert!((bound - s.objective).abs() <= 1e-6 * (1.0 + s.objective.abs()), "seed {seed}: {bound} vs {}", s.objective);
        }
    }

    #[test]
    fn repeat_solves_are_identical() {
        let p = random_lp(17);
        let a = solve(&p);
        let b = solve(&p);
        assert_eq!(a, b);
    }
}
