//! LP and MILP solving for scheduling models, plus schedule extraction.

mod branch;
mod oracle;
mod simplex;

pub use branch::{solve_milp, solve_milp_logged, MilpSolution, MilpStatus, NodeLogRecord, NodeOutcome};
pub use oracle::{enumerate_milp, EnumerationResult};
pub use simplex::{LpProblem, LpRow, LpSolution, LpStatus, PreparedLp, TOL_FEAS};

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Relation, VarKey};
use crate::model::NetworkInstance;
use crate::sinr::Schedule;

/// Integrality tolerance for binary variables.
pub const TOL_INT: f64 = 1e-6;

/// Row slack (in scaled units) demanded when polishing an integral point,
/// so that the polished powers clear the validator strictly.
pub(crate) const POLISH_MARGIN: f64 = 1e-6;

/// The LP relaxation of `model` as a plain ranged-row problem.
pub fn lp_problem(model: &MilpModel) -> LpProblem {
    let n = model.num_vars();
    let mut objective = vec![0.0; n];
    for &(k, c) in &model.objective {
        objective[k] += c;
    }
    LpProblem {
        objective,
        lower: model.variables.iter().map(|v| v.lower).collect(),
        upper: model.variables.iter().map(|v| v.upper).collect(),
        rows: model
            .constraints
            .iter()
            .map(|c| {
                let (lower, upper) = match c.relation {
                    Relation::Le => (f64::NEG_INFINITY, c.rhs),
                    Relation::Ge => (c.rhs, f64::INFINITY),
                    Relation::Eq => (c.rhs, c.rhs),
                };
                LpRow {
                    coeffs: c.coeffs.clone(),
                    lower,
                    upper,
                }
            })
            .collect(),
    }
}

/// Solves the LP relaxation of `model`, ignoring integrality marks.
pub fn solve_lp(model: &MilpModel) -> LpSolution {
    PreparedLp::new(&lp_problem(model)).solve()
}

/// The LP left over when every integral variable of `model` is fixed to its
/// rounded value in `values`: fixed terms move to the row bounds, so rows
/// are scaled by their power coefficients rather than by the big-Delta.
/// `None` when a row over fixed variables alone is violated.
pub(crate) struct FixedLp {
    pub problem: LpProblem,
    /// Model index of each column.
    pub columns: Vec<usize>,
    /// Rounded values of all model variables (continuous ones at 0).
    pub base: Vec<f64>,
}

pub(crate) fn fixed_binary_lp(model: &MilpModel, values: &[f64]) -> Option<FixedLp> {
    let n = model.num_vars();
    let mut column_of = vec![usize::MAX; n];
    let mut columns = Vec::new();
    let mut base = vec![0.0; n];
    for (k, var) in model.variables.iter().enumerate() {
        if var.integral {
            base[k] = values[k].round();
        } else {
            column_of[k] = columns.len();
            columns.push(k);
        }
    }
    let mut rows = Vec::with_capacity(model.constraints.len());
    for c in &model.constraints {
        let mut fixed = 0.0;
        let mut coeffs = Vec::new();
        for &(k, a) in &c.coeffs {
            if column_of[k] == usize::MAX {
                fixed += a * base[k];
            } else {
                coeffs.push((column_of[k], a));
            }
        }
        let (lower, upper) = match c.relation {
            Relation::Le => (f64::NEG_INFINITY, c.rhs - fixed),
            Relation::Ge => (c.rhs - fixed, f64::INFINITY),
            Relation::Eq => (c.rhs - fixed, c.rhs - fixed),
        };
        if coeffs.is_empty() {
            let slack = 1e-9 * c.scale().max(c.rhs.abs()).max(1.0);
            if lower > slack || upper < -slack {
                return None;
            }
            continue;
        }
        rows.push(LpRow { coeffs, lower, upper });
    }
    let mut objective = vec![0.0; columns.len()];
    for &(k, c) in &model.objective {
        if column_of[k] != usize::MAX {
            objective[column_of[k]] += c;
        }
    }
    Some(FixedLp {
        problem: LpProblem {
            objective,
            lower: columns.iter().map(|&k| model.variables[k].lower).collect(),
            upper: columns.iter().map(|&k| model.variables[k].upper).collect(),
            rows,
        },
        columns,
        base,
    })
}

/// Re-solves for the continuous variables with every integral variable
/// fixed to its rounded value in `values`, asking for strict row slack
/// first. Returns full model values, or `None` if the fixed problem is
/// infeasible.
pub(crate) fn polish(model: &MilpModel, values: &[f64]) -> Option<Vec<f64>> {
    let fixed = fixed_binary_lp(model, values)?;
    let lp = PreparedLp::new(&fixed.problem);
    let strict = lp.solve_with_margin(lp.lower(), lp.upper(), POLISH_MARGIN);
    let sol = if strict.status == LpStatus::Optimal {
        strict
    } else {
        let plain = lp.solve();
        if plain.status != LpStatus::Optimal {
            return None;
        }
        plain
    };
    let mut out = fixed.base;
    for (col, &k) in fixed.columns.iter().enumerate() {
        out[k] = sol.values[col];
    }
    Some(out)
}

/// Converts an integral variable assignment into a schedule for `inst`.
///
/// Binaries must be within [`TOL_INT`] of 0 or 1. Powers are clamped to the
/// per-slot bounds for active sources and zeroed for idle ones.
pub fn extract_schedule(inst: &NetworkInstance, model: &MilpModel, values: &[f64]) -> Result<Schedule> {
    if values.len() != model.num_vars() {
        return Err(Error::contract(format!(
            "expected {} values, got {}",
            model.num_vars(),
            values.len()
        )));
    }
    if model.slots != inst.params.slots {
        return Err(Error::contract("model and instance disagree on the slot count"));
    }
    let mut sched = Schedule::empty(inst);
    for (k, var) in model.variables.iter().enumerate() {
        let v = values[k];
        let bit = || -> Result<bool> {
            let r = v.round();
            if (v - r).abs() > TOL_INT || !(r == 0.0 || r == 1.0) {
                return Err(Error::contract(format!(
                    "{} = {v} is not integral; round the relaxation first",
                    var.name
                )));
            }
            Ok(r == 1.0)
        };
        match var.key {
            VarKey::X { t, i, j } => {
                let l = inst
                    .link_index(i, j)
                    .ok_or_else(|| Error::contract(format!("{} has no link", var.name)))?;
                sched.x[t][l] = bit()?;
            }
            VarKey::Y { t, i, r, j } => {
                let l = inst
                    .relay_link_index(i, r, j)
                    .ok_or_else(|| Error::contract(format!("{} has no relay link", var.name)))?;
                sched.y[t][l] = bit()?;
            }
            VarKey::P { t, i } => sched.power[t][i] = v,
        }
    }
    let p = &inst.params;
    for t in 0..sched.slots {
        for i in 0..inst.n_sources {
            let active = inst
                .links
                .iter()
                .enumerate()
                .any(|(l, link)| link.source == i && sched.x[t][l]);
            sched.power[t][i] = if active {
                sched.power[t][i].clamp(p.p_slot_min_mw, p.p_slot_max_mw)
            } else {
                0.0
            };
        }
    }
    Ok(sched)
}

/// Variable values encoding `sched` in `model`; the inverse of
/// [`extract_schedule`] for valid schedules.
pub fn schedule_values(inst: &NetworkInstance, model: &MilpModel, sched: &Schedule) -> Result<Vec<f64>> {
    let mut values = vec![0.0; model.num_vars()];
    for (k, var) in model.variables.iter().enumerate() {
        values[k] = match var.key {
            VarKey::X { t, i, j } => {
                let l = inst
                    .link_index(i, j)
                    .ok_or_else(|| Error::contract(format!("{} has no link", var.name)))?;
                f64::from(u8::from(sched.x[t][l]))
            }
            VarKey::Y { t, i, r, j } => {
                let l = inst
                    .relay_link_index(i, r, j)
                    .ok_or_else(|| Error::contract(format!("{} has no relay link", var.name)))?;
                f64::from(u8::from(sched.y[t][l]))
            }
            VarKey::P { t, i } => sched.power[t][i],
        };
    }
    Ok(values)
}
