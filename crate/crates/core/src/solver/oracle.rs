//! Exhaustive enumeration of binary assignments, for cross-checking the
//! branch-and-bound on small models.

use serde::{Deserialize, Serialize};

use super::{lp_problem, polish, MilpStatus};
use crate::error::{Error, Result};
use crate::milp::MilpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    /// `Optimal` or `Infeasible`.
    pub status: MilpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Binary assignments visited.
    pub assignments: u64,
    /// Assignments that needed an LP over the continuous variables.
    pub lp_solves: usize,
}

/// Finds the optimum of `model` by trying every assignment of its integral
/// (binary) variables and solving an LP for the continuous rest.
///
/// Fails with a validation error when the model has more than
/// `max_binaries` integral variables. Among equally good assignments the
/// first in mask order wins.
pub fn enumerate_milp(model: &MilpModel, max_binaries: usize) -> Result<EnumerationResult> {
    model.check()?;
    let binaries: Vec<usize> = model.integral_vars().collect();
    if binaries.len() > max_binaries || binaries.len() >= 63 {
        return Err(Error::validation(
            "model",
            format!(
                "{} binaries exceed the enumeration limit of {max_binaries}",
                binaries.len()
            ),
        ));
    }
    let n = model.num_vars();
    let problem = lp_problem(model);

    let mut cost = vec![0.0; n];
    for &(k, c) in &model.objective {
        cost[k] += c;
    }
    let continuous_best: f64 = (0..n)
        .filter(|&k| !model.variables[k].integral)
        .map(|k| (cost[k] * problem.lower[k]).max(cost[k] * problem.upper[k]))
        .sum();

    // rows that mention only binaries can be checked without an LP
    let is_binary: Vec<bool> = model.variables.iter().map(|v| v.integral).collect();
    let binary_rows: Vec<usize> = model
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.coeffs.iter().all(|&(k, _)| is_binary[k]))
        .map(|(i, _)| i)
        .collect();

    let mut values = problem.lower.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lp_solves = 0;
    let total = 1u64 << binaries.len();

    for mask in 0..total {
        let mut binary_obj = 0.0;
        for (b, &k) in binaries.iter().enumerate() {
            let v = ((mask >> b) & 1) as f64;
            values[k] = v;
            binary_obj += cost[k] * v;
        }
        if let Some((z, _)) = &best {
            if binary_obj + continuous_best <= *z + 1e-9 {
                continue;
            }
        }
        let rows_ok = binary_rows.iter().all(|&i| {
            let c = &model.constraints[i];
            c.violation(&values) <= 1e-9 * c.scale()
        });
        if !rows_ok {
            continue;
        }
        lp_solves += 1;
        let Some(sol) = polish(model, &values) else {
            continue;
        };
        let z = model.objective_value(&sol);
        if best.as_ref().map_or(true, |(b, _)| z > *b + 1e-9) {
            best = Some((z, sol));
        }
    }

    Ok(match best {
        Some((objective, values)) => EnumerationResult {
            status: MilpStatus::Optimal,
            objective,
            values,
            assignments: total,
            lp_solves,
        },
        None => EnumerationResult {
            status: MilpStatus::Infeasible,
            values: problem.lower.clone(),
            objective: f64::NEG_INFINITY,
            assignments: total,
            lp_solves,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{build_milp, BuildOptions, Mode};
    use crate::model::{generate_instance, Placement, SystemParams};
    use crate::solver::solve_milp;

    #[test]
    fn agrees_with_branch_and_bound_on_small_instances() {
        for seed in 0..12 {
            let params = SystemParams {
                slots: 2,
                ..SystemParams::default()
            }
            .with_uniform_demand(2, 2);
            let inst = generate_instance(seed, 2, 1, 2, params, Placement::PerPair).unwrap();
            for mode in [Mode::Cls, Mode::Dls] {
                let model = build_milp(&inst, BuildOptions::new(mode)).unwrap();
                let brute = enumerate_milp(&model, 16).unwrap();
                let bb = solve_milp(&model, 100_000).unwrap();
                assert_eq!(brute.status, MilpStatus::Optimal);
                assert!((brute.objective - bb.objective).abs() <= 1e-6, "seed {seed} {mode}");
            }
        }
    }

    #[test]
    fn refuses_large_models() {
        let params = SystemParams {
            slots: 4,
            ..SystemParams::default()
        }
        .with_uniform_demand(3, 4);
        let inst = generate_instance(0, 3, 2, 3, params, Placement::PerPair).unwrap();
        let model = build_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
        assert!(enumerate_milp(&model, 16).is_err());
    }
}
