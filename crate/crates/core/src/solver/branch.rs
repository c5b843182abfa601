//! Best-first branch-and-bound over the LP relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::simplex::{LpStatus, PreparedLp};
use super::{lp_problem, polish, TOL_INT};
use crate::error::{Error, Result};
use crate::milp::MilpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// The node budget ran out; `values` holds the best incumbent, if any.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Best proven upper bound on the optimum.
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        self.objective.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOutcome {
    Infeasible,
    Pruned,
    Integral,
    Branched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLogRecord {
    pub node: usize,
    pub depth: usize,
    /// LP bound at the node (negative infinity when infeasible).
    pub bound: f64,
    pub incumbent: Option<f64>,
    pub outcome: NodeOutcome,
}

struct Node {
    bound: f64,
    seq: usize,
    depth: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: higher bound first, then earlier creation
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Spacing between attainable objective values when every objective term
/// sits on an integral variable with the same coefficient.
fn objective_granularity(model: &MilpModel) -> Option<f64> {
    let first = model.objective.first()?.1.abs();
    let uniform = model
        .objective
        .iter()
        .all(|&(k, c)| model.variables[k].integral && c.abs() == first);
    (uniform && first > 0.0).then_some(first)
}

pub fn solve_milp(model: &MilpModel, node_limit: usize) -> Result<MilpSolution> {
    solve_milp_logged(model, node_limit, &mut |_| {})
}

/// Branch-and-bound with a callback per processed node.
///
/// Nodes are explored best-bound first (ties by creation order); the most
/// fractional binary is branched on (ties by lowest index), zero side first.
pub fn solve_milp_logged(
    model: &MilpModel,
    node_limit: usize,
    log: &mut dyn FnMut(&NodeLogRecord),
) -> Result<MilpSolution> {
    model.check()?;
    if node_limit == 0 {
        return Err(Error::validation("node_limit", "must be positive"));
    }
    let problem = lp_problem(model);
    let lp = PreparedLp::new(&problem);
    let integral: Vec<usize> = model.integral_vars().collect();
    let granularity = objective_granularity(model);

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let prune_below = |inc: &Option<(f64, Vec<f64>)>| -> f64 {
        match (inc, granularity) {
            (None, _) => f64::NEG_INFINITY,
            (Some((z, _)), Some(g)) => z + g - 1e-6 * g,
            (Some((z, _)), None) => z + 1e-9 * (1.0 + z.abs()),
        }
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        seq: 0,
        depth: 0,
        fixings: Vec::new(),
    });
    let mut seq = 1;
    let mut nodes = 0;
    let mut lp_iterations = 0;
    let mut lower = lp.lower().to_vec();
    let mut upper = lp.upper().to_vec();

    while let Some(node) = heap.peek() {
        if node.bound < prune_below(&incumbent) {
            break;
        }
        if nodes >= node_limit {
            break;
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;

        lower.copy_from_slice(lp.lower());
        upper.copy_from_slice(lp.upper());
        for &(k, v) in &node.fixings {
            lower[k] = v;
            upper[k] = v;
        }
        let sol = lp.solve_with_bounds(&lower, &upper);
        lp_iterations += sol.iterations;
        let mut record = NodeLogRecord {
            node: nodes,
            depth: node.depth,
            bound: sol.objective,
            incumbent: incumbent.as_ref().map(|(z, _)| *z),
            outcome: NodeOutcome::Infeasible,
        };
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                log(&record);
                continue;
            }
            LpStatus::Unbounded => {
                return Err(Error::contract("LP relaxation is unbounded"));
            }
            LpStatus::IterationLimit => {
                return Err(Error::contract("simplex iteration limit reached"));
            }
        }
        let bound = sol.objective.min(node.bound);
        record.bound = bound;
        if bound < prune_below(&incumbent) {
            record.outcome = NodeOutcome::Pruned;
            log(&record);
            continue;
        }

        let mut branch_var = None;
        let mut best_frac = TOL_INT;
        for &k in &integral {
            let v = sol.values[k];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > best_frac {
                best_frac = frac;
                branch_var = Some(k);
            }
        }

        match branch_var {
            None => match polish(model, &sol.values) {
                Some(values) => {
                    let z = model.objective_value(&values);
                    if incumbent.as_ref().map_or(true, |(best, _)| z > *best + 1e-9) {
                        incumbent = Some((z, values));
                    }
                    record.outcome = NodeOutcome::Integral;
                    record.incumbent = incumbent.as_ref().map(|(z, _)| *z);
                    log(&record);
                }
                None => {
                    // integral only within the relaxation's tolerance; keep
                    // splitting on free binaries until the point is exact
                    let free = integral
                        .iter()
                        .copied()
                        .find(|k| !node.fixings.iter().any(|(f, _)| f == k));
                    match free {
                        Some(k) => {
                            for side in [0.0, 1.0] {
                                let mut fixings = node.fixings.clone();
                                fixings.push((k, side));
                                heap.push(Node {
                                    bound,
                                    seq,
                                    depth: node.depth + 1,
                                    fixings,
                                });
                                seq += 1;
                            }
                            record.outcome = NodeOutcome::Branched;
                        }
                        None => record.outcome = NodeOutcome::Infeasible,
                    }
                    log(&record);
                }
            },
            Some(k) => {
                for side in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((k, side));
                    heap.push(Node {
                        bound,
                        seq,
                        depth: node.depth + 1,
                        fixings,
                    });
                    seq += 1;
                }
                record.outcome = NodeOutcome::Branched;
                log(&record);
            }
        }
    }

    let open_bound = heap
        .iter()
        .map(|n| n.bound)
        .filter(|&b| b >= prune_below(&incumbent))
        .fold(f64::NEG_INFINITY, f64::max);
    let exhausted = open_bound == f64::NEG_INFINITY;
    Ok(match incumbent {
        Some((z, values)) => MilpSolution {
            status: if exhausted {
                MilpStatus::Optimal
            } else {
                MilpStatus::NodeLimit
            },
            bound: if exhausted { z } else { open_bound.max(z) },
            values,
            objective: z,
            nodes,
            lp_iterations,
        },
        None => MilpSolution {
            status: if exhausted {
                MilpStatus::Infeasible
            } else {
                MilpStatus::NodeLimit
            },
            values: lp.lower().to_vec(),
            objective: f64::NEG_INFINITY,
            bound: open_bound,
            nodes,
            lp_iterations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Constraint, Relation, RowFamily, VarKey, Variable};

    fn binary(i: usize) -> Variable {
        Variable {
            name: format!("b{i}"),
            key: VarKey::X { t: 0, i, j: 0 },
            lower: 0.0,
            upper: 1.0,
            integral: true,
        }
    }

    fn row(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Constraint {
        Constraint {
            name: "r".into(),
            family: RowFamily::Demand,
            coeffs,
            relation,
            rhs,
        }
    }

    #[test]
    fn knapsack_optimum() {
        // maximize 5a + 4b + 3c s.t. 2a + 3b + c <= 4; best is a + c = 8
        let vars = (0..3).map(binary).collect();
        let rows = vec![row(vec![(0, 2.0), (1, 3.0), (2, 1.0)], Relation::Le, 4.0)];
        let model = MilpModel::from_parts(vars, rows, vec![(0, 5.0), (1, 4.0), (2, 3.0)]).unwrap();
        let sol = solve_milp(&model, 100).unwrap();
        assert_eq!(sol.status, MilpStatus::Optimal);
        assert!((sol.objective - 8.0).abs() <= 1e-9);
        assert_eq!(sol.values, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn infeasible_model() {
        let vars = (0..2).map(binary).collect();
        let rows = vec![row(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 3.0)];
        let model = MilpModel::from_parts(vars, rows, vec![(0, 1.0)]).unwrap();
        assert_eq!(solve_milp(&model, 100).unwrap().status, MilpStatus::Infeasible);
    }

    #[test]
    fn node_limit_is_reported() {
        // parity-style constraint forces branching
        let vars = (0..6).map(binary).collect();
        let rows = vec![row((0..6).map(|k| (k, 2.0)).collect(), Relation::Le, 7.0)];
        let model = MilpModel::from_parts(vars, rows, (0..6).map(|k| (k, 1.0 + k as f64 * 0.01)).collect()).unwrap();
        let sol = solve_milp(&model, 1).unwrap();
        assert_eq!(sol.status, MilpStatus::NodeLimit);
        let full = solve_milp(&model, 10_000).unwrap();
        assert_eq!(full.status, MilpStatus::Optimal);
        assert!(sol.bound >= full.objective - 1e-9);
    }

    #[test]
    fn log_reports_every_node() {
        let vars = (0..3).map(binary).collect();
        let rows = vec![row(vec![(0, 2.0), (1, 2.0), (2, 2.0)], Relation::Le, 3.0)];
        let model = MilpModel::from_parts(vars, rows, vec![(0, 1.0), (1, 1.0), (2, 1.0)]).unwrap();
        let mut records = Vec::new();
        let sol = solve_milp_logged(&model, 100, &mut |r| records.push(r.clone())).unwrap();
        assert_eq!(records.len(), sol.nodes);
        assert_eq!(records[0].depth, 0);
        assert!((sol.objective - 1.0).abs() <= 1e-9);
    }
}
