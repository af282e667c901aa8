//! Dense linear programs over nonnegative variables and a two-phase tableau
//! simplex solver.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `Σ coeffs · x  (sense)  rhs`, annotated with the name of its multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize objectiveᵀ x + objective_constant` subject to the constraints
/// and `x ≥ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl LpModel {
    pub fn new() -> Self {
        LpModel::default()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.objective.push(0.0);
        self.var_names.len() - 1
    }

    /// Adds a constraint, merging repeated variables and dropping zeros.
    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let mut dense: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|&(i, _)| i);
        for (i, v) in sorted {
            match dense.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => dense.push((i, v)),
            }
        }
        dense.retain(|&(_, v)| v != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: dense,
            sense,
            rhs,
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_constant
    }

    /// Largest violation of any constraint or nonnegativity bound.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(i, a)| a * x[i]).sum();
            let v = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// The model in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let term = |out: &mut String, first: &mut bool, a: f64, name: &str| {
            if a == 0.0 {
                return;
            }
            let sign = if a < 0.0 { "-" } else if *first { "" } else { "+" };
            let _ = write!(out, " {sign} {} {name}", a.abs());
            *first = false;
        };
        let mut out = String::from("\\ objective constant: ");
        let _ = writeln!(out, "{}", self.objective_constant);
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (i, &c) in self.objective.iter().enumerate() {
            term(&mut out, &mut first, c, &self.var_names[i]);
        }
        if first {
            out.push_str(" 0 ");
            out.push_str(self.var_names.first().map(String::as_str).unwrap_or("x"));
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            let mut first = true;
            for &(i, a) in &c.coeffs {
                term(&mut out, &mut first, a, &self.var_names[i]);
            }
            if first {
                let _ = write!(out, " 0 {}", self.var_names[0]);
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Bounds\n");
        for name in &self.var_names {
            let _ = writeln!(out, " {name} >= 0");
        }
        out.push_str("End\n");
        out
    }
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    DantzigThenBland,
    Bland,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    cost_rhs: f64,
    allowed: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, &pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, &pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[c] = 0.0;
            self.cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = c;
    }

    fn set_cost(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        self.cost_rhs = 0.0;
        for r in 0..self.rows.len() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (v, &a) in self.cost.iter_mut().zip(&self.rows[r]) {
                    *v -= cb * a;
                }
                self.cost_rhs -= cb * self.rhs[r];
            }
        }
    }

    /// Runs simplex iterations until optimal; `Err` on unboundedness or
    /// iteration exhaustion.
    fn optimize(&mut self, rule: Rule) -> Result<()> {
        let mut bland = rule == Rule::Bland;
        let mut degenerate = 0usize;
        let limit = 50 * (self.rows.len() + self.cost.len()) + 1000;
        for _ in 0..limit {
            let entering = if bland {
                (0..self.cost.len()).find(|&j| self.allowed[j] && self.cost[j] < -PIVOT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.cost.len() {
                    if self.allowed[j] && self.cost[j] < -PIVOT_TOL && best.is_none_or(|(_, v)| self.cost[j] < v) {
                        best = Some((j, self.cost[j]));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lv)) => {
                            ratio < lv - 1e-12 || (ratio <= lv + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Lp("objective is unbounded below".into()));
            };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            for v in self.rhs.iter_mut() {
                if *v < 0.0 && *v > -1e-11 {
                    *v = 0.0;
                }
            }
        }
        Err(Error::Lp("iteration limit reached".into()))
    }
}

fn solve_with(model: &LpModel, rule: Rule) -> Result<LpSolution> {
    let n = model.num_vars();
    let m = model.constraints.len();
    let mut slack_cols = 0;
    let mut art_cols = 0;
    for c in &model.constraints {
        let flipped = c.rhs < 0.0;
        let sense = match (c.sense, flipped) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        };
        if sense != Sense::Eq {
            slack_cols += 1;
        }
        if sense != Sense::Le {
            art_cols += 1;
        }
    }
    let total = n + slack_cols + art_cols;
    let mut t = Tableau {
        rows: vec![vec![0.0; total]; m],
        rhs: vec![0.0; m],
        basis: vec![0; m],
        cost: vec![0.0; total],
        cost_rhs: 0.0,
        allowed: vec![true; total],
    };
    let mut next_slack = n;
    let mut next_art = n + slack_cols;
    for (r, c) in model.constraints.iter().enumerate() {
        let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
        let sense = match (c.sense, sign < 0.0) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        };
        for &(i, a) in &c.coeffs {
            t.rows[r][i] += sign * a;
        }
        t.rhs[r] = sign * c.rhs;
        match sense {
            Sense::Le => {
                t.rows[r][next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.rows[r][next_slack] = -1.0;
                next_slack += 1;
                t.rows[r][next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.rows[r][next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
    }
    let art_start = n + slack_cols;
    if art_cols > 0 {
        let phase1: Vec<f64> = (0..total).map(|j| if j >= art_start { 1.0 } else { 0.0 }).collect();
        t.set_cost(&phase1);
        t.optimize(rule)?;
        let infeasibility = -t.cost_rhs;
        let scale = 1.0 + t.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > FEAS_TOL * scale {
            return Err(Error::Lp(format!("infeasible (phase-one residual {infeasibility:e})")));
        }
        for r in 0..m {
            if t.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&j| t.rows[r][j].abs() > PIVOT_TOL) {
                    t.pivot(r, c);
                }
            }
        }
        for j in art_start..total {
            t.allowed[j] = false;
        }
    }
    let mut phase2 = vec![0.0; total];
    phase2[..n].copy_from_slice(&model.objective);
    t.set_cost(&phase2);
    t.optimize(rule)?;
    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[r].max(0.0);
        }
    }
    Ok(LpSolution {
        value: model.objective_value(&x),
        x,
    })
}

/// Solves `model` to optimality. A solution that fails the feasibility
/// recheck is recomputed from scratch with Bland's rule only.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution> {
    let first = solve_with(model, Rule::DantzigThenBland);
    match first {
        Ok(sol) if model.max_violation(&sol.x) <= FEAS_TOL => Ok(sol),
        _ => {
            let sol = solve_with(model, Rule::Bland)?;
            let v = model.max_violation(&sol.x);
            if v > FEAS_TOL {
                return Err(Error::Lp(format!("numerical failure, constraint violation {v:e}")));
            }
            Ok(sol)
        }
    }
}
