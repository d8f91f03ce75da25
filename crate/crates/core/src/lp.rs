//! Exact rational linear programming.
//!
//! Dense two-phase primal simplex with Bland's rule, so the pivot sequence is
//! a pure function of the input. An optimal [`LpSolution`] carries a dual
//! vector, and [`verify`] re-checks primal feasibility, dual feasibility and
//! equality of the two objectives in exact arithmetic.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::{Error, Limits, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(with = "rational::serde_rational_vec")]
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    #[serde(with = "rational::serde_rational")]
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarBounds {
    #[serde(with = "rational::serde_rational_opt")]
    pub lower: Option<Rational>,
    #[serde(with = "rational::serde_rational_opt")]
    pub upper: Option<Rational>,
}

impl VarBounds {
    pub fn nonnegative() -> Self {
        VarBounds { lower: Some(Rational::zero()), upper: None }
    }

    pub fn free() -> Self {
        VarBounds { lower: None, upper: None }
    }
}

/// A linear program over exact rationals. Variables default to `x >= 0`.
///
/// The JSON form of this struct doubles as the debug dump format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    #[serde(with = "rational::serde_rational_vec")]
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            bounds: vec![VarBounds::nonnegative(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, objective: Vec<Rational>) {
        self.objective = objective;
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.bounds[var] = VarBounds { lower, upper };
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Add a constraint from sparse `(var, coeff)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::Validation(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Validation(format!(
                    "constraint {i} has {} coefficients for {n} variables",
                    c.coeffs.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective value.
    pub value: Option<Rational>,
    /// Optimal point, one entry per variable.
    pub primal: Vec<Rational>,
    /// One multiplier per constraint. With `d = c - Aᵀy`, the dual objective
    /// `Σ yᵢbᵢ + Σ_j (bound of x_j selected by the sign of d_j)·d_j` equals `value`.
    pub dual: Vec<Rational>,
    pub pivots: usize,
}

impl LpSolution {
    fn without_optimum(status: LpStatus, pivots: usize) -> Self {
        LpSolution { status, value: None, primal: Vec::new(), dual: Vec::new(), pivots }
    }
}

/// How an original variable maps onto nonnegative internal columns.
#[derive(Clone, Debug)]
enum VarMap {
    /// `x = lower + z`
    Shifted { col: usize, lower: Rational },
    /// `x = upper - z`
    Flipped { col: usize, upper: Rational },
    /// `x = z⁺ - z⁻`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    rows: Vec<Vec<Rational>>,
    /// Reduced costs, last entry is minus the objective value.
    obj: Vec<Rational>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        if !inv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
        }
        let nonzero: Vec<usize> = (0..=self.cols).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for &j in &nonzero {
                row[j] -= &factor * &prow[j];
            }
        }
        if !self.obj[c].is_zero() {
            let factor = self.obj[c].clone();
            for &j in &nonzero {
                self.obj[j] -= &factor * &prow[j];
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reset the objective row to `cost` and price out the current basis.
    fn load_objective(&mut self, cost: &[Rational]) {
        let mut obj = cost.to_vec();
        obj.push(Rational::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, v) in obj.iter_mut().zip(&self.rows[r]) {
                if !v.is_zero() {
                    *o -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    /// Bland's rule simplex on the loaded objective. Returns false if unbounded.
    fn run(&mut self, allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let entering = (0..self.cols).find(|&j| allowed(j) && self.obj[j].is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[self.cols] / &row[c];
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio || (ratio == bratio && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

pub fn solve(program: &LinearProgram) -> Result<LpSolution> {
    solve_with(program, &Limits::default())
}

pub fn solve_with(program: &LinearProgram, limits: &Limits) -> Result<LpSolution> {
    program.validate()?;
    let n = program.num_vars();

    // Map variables to nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, Rational)> = Vec::new();
    for b in &program.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return Ok(LpSolution::without_optimum(LpStatus::Infeasible, 0));
                    }
                    upper_rows.push((ncols, u - l));
                }
                maps.push(VarMap::Shifted { col: ncols, lower: l.clone() });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Flipped { col: ncols, upper: u.clone() });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }

    // Internal rows: (coeffs over columns, relation, rhs); sign-normalised below.
    let mut raw_rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &program.constraints {
        let mut coeffs = vec![Rational::zero(); ncols];
        let mut rhs = c.rhs.clone();
        for (a, map) in c.coeffs.iter().zip(&maps) {
            if a.is_zero() {
                continue;
            }
            match map {
                VarMap::Shifted { col, lower } => {
                    coeffs[*col] += a;
                    rhs -= a * lower;
                }
                VarMap::Flipped { col, upper } => {
                    coeffs[*col] -= a;
                    rhs -= a * upper;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[*pos] += a;
                    coeffs[*neg] -= a;
                }
            }
        }
        raw_rows.push((coeffs, c.relation, rhs));
    }
    for (col, cap) in &upper_rows {
        let mut coeffs = vec![Rational::zero(); ncols];
        coeffs[*col] = Rational::one();
        raw_rows.push((coeffs, Relation::Le, cap.clone()));
    }

    let m = raw_rows.len();
    let mut signs = Vec::with_capacity(m);
    for (coeffs, rel, rhs) in raw_rows.iter_mut() {
        if rhs.is_negative() {
            for v in coeffs.iter_mut() {
                *v = -&*v;
            }
            *rhs = -&*rhs;
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            signs.push(-1i8);
        } else {
            signs.push(1i8);
        }
    }

    let nslack = raw_rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let nart = raw_rows.iter().filter(|r| r.1 != Relation::Le).count();
    let total = ncols + nslack + nart;
    let entries = (m as u64).saturating_mul(total as u64 + 1);
    if entries > limits.max_lp_entries {
        return Err(Error::capacity("LP tableau entries", entries, limits.max_lp_entries));
    }

    let art_start = ncols + nslack;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    // Column holding e_r in the initial basis matrix, per row.
    let mut unit_col = Vec::with_capacity(m);
    let (mut s, mut a) = (ncols, art_start);
    for (coeffs, rel, rhs) in raw_rows {
        let mut row = coeffs;
        row.resize(total + 1, Rational::zero());
        row[total] = rhs;
        match rel {
            Relation::Le => {
                row[s] = Rational::one();
                basis.push(s);
                unit_col.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -Rational::one();
                row[a] = Rational::one();
                basis.push(a);
                unit_col.push(a);
                s += 1;
                a += 1;
            }
            Relation::Eq => {
                row[a] = Rational::one();
                basis.push(a);
                unit_col.push(a);
                a += 1;
            }
        }
        rows.push(row);
    }

    let mut tab = Tableau { rows, obj: Vec::new(), basis, cols: total, pivots: 0 };

    // Phase 1: minimise the sum of artificials.
    if nart > 0 {
        let mut cost = vec![Rational::zero(); total];
        for c in cost.iter_mut().skip(art_start) {
            *c = Rational::one();
        }
        tab.load_objective(&cost);
        tab.run(|_| true);
        if !tab.obj[total].is_zero() {
            return Ok(LpSolution::without_optimum(LpStatus::Infeasible, tab.pivots));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&j| !tab.rows[r][j].is_zero()) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    // Phase 2.
    let mut cost = vec![Rational::zero(); total];
    let flip = program.sense == Sense::Maximize;
    for (c, map) in program.objective.iter().zip(&maps) {
        let c = if flip { -c } else { c.clone() };
        match map {
            VarMap::Shifted { col, .. } => cost[*col] += &c,
            VarMap::Flipped { col, .. } => cost[*col] -= &c,
            VarMap::Split { pos, neg } => {
                cost[*pos] += &c;
                cost[*neg] -= &c;
            }
        }
    }
    tab.load_objective(&cost);
    if !tab.run(|j| j < art_start) {
        return Ok(LpSolution::without_optimum(LpStatus::Unbounded, tab.pivots));
    }

    let mut z = vec![Rational::zero(); total];
    for (r, &b) in tab.basis.iter().enumerate() {
        z[b] = tab.rows[r][total].clone();
    }
    let primal: Vec<Rational> = maps
        .iter()
        .map(|map| match map {
            VarMap::Shifted { col, lower } => lower + &z[*col],
            VarMap::Flipped { col, upper } => upper - &z[*col],
            VarMap::Split { pos, neg } => &z[*pos] - &z[*neg],
        })
        .collect();
    let value: Rational = program.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();

    // y_r = -(reduced cost of the row's initial unit column), undo the row sign
    // flip and the max->min flip.
    let dual: Vec<Rational> = (0..program.constraints.len())
        .map(|i| {
            let y = -&tab.obj[unit_col[i]];
            let y = if signs[i] < 0 { -y } else { y };
            if flip { -y } else { y }
        })
        .collect();

    let solution =
        LpSolution { status: LpStatus::Optimal, value: Some(value), primal, dual, pivots: tab.pivots };
    verify(program, &solution).map_err(|e| Error::Internal(format!("LP optimality certificate: {e}")))?;
    Ok(solution)
}

/// Independent exact check of an optimal solution: primal feasibility, dual
/// sign conditions, and equality of primal and dual objectives.
pub fn verify(program: &LinearProgram, sol: &LpSolution) -> std::result::Result<(), String> {
    if sol.status != LpStatus::Optimal {
        return Err("solution is not marked optimal".into());
    }
    let n = program.num_vars();
    let x = &sol.primal;
    let y = &sol.dual;
    if x.len() != n || y.len() != program.constraints.len() {
        return Err("solution vector lengths do not match the program".into());
    }
    for (j, (xj, b)) in x.iter().zip(&program.bounds).enumerate() {
        if b.lower.as_ref().is_some_and(|l| xj < l) || b.upper.as_ref().is_some_and(|u| xj > u) {
            return Err(format!("variable {j} violates its bounds"));
        }
    }
    let max = program.sense == Sense::Maximize;
    for (i, (c, yi)) in program.constraints.iter().zip(y).enumerate() {
        let lhs: Rational = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs,
            Relation::Ge => lhs >= c.rhs,
            Relation::Eq => lhs == c.rhs,
        };
        if !ok {
            return Err(format!("constraint {i} violated"));
        }
        // For min: <= rows carry y <= 0, >= rows y >= 0. Reversed for max.
        let sign_ok = match (c.relation, max) {
            (Relation::Eq, _) => true,
            (Relation::Le, false) | (Relation::Ge, true) => !yi.is_positive(),
            (Relation::Ge, false) | (Relation::Le, true) => !yi.is_negative(),
        };
        if !sign_ok {
            return Err(format!("dual multiplier {i} has the wrong sign"));
        }
    }
    let mut dual_value: Rational = program.constraints.iter().zip(y).map(|(c, yi)| &c.rhs * yi).sum();
    for j in 0..n {
        let mut d = program.objective[j].clone();
        for (c, yi) in program.constraints.iter().zip(y) {
            if !c.coeffs[j].is_zero() {
                d -= &c.coeffs[j] * yi;
            }
        }
        if d.is_zero() {
            continue;
        }
        // For min, positive reduced cost rests on the lower bound.
        let use_lower = d.is_positive() != max;
        let bound = if use_lower { &program.bounds[j].lower } else { &program.bounds[j].upper };
        match bound {
            Some(b) => dual_value += &d * b,
            None => return Err(format!("reduced cost of variable {j} is not dual feasible")),
        }
    }
    let primal_value: Rational = program.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    if Some(&primal_value) != sol.value.as_ref() {
        return Err("reported value differs from c·x".into());
    }
    if primal_value != dual_value {
        return Err(format!("duality gap: primal {primal_value}, dual {dual_value}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn maximise_single_bound() {
        let mut lp = LinearProgram::new(1, Sense::Maximize);
        lp.set_objective(vec![int(1)]);
        lp.add_constraint(vec![int(1)], Relation::Le, int(3));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.value, Some(int(3)));
        assert_eq!(sol.dual, vec![int(1)]);
    }

    #[test]
    fn infeasible_system() {
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.set_bounds(0, None, None);
        lp.add_constraint(vec![int(1)], Relation::Ge, int(1));
        lp.add_constraint(vec![int(1)], Relation::Le, int(0));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_with_nonnegative_split() {
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.set_objective(vec![int(1), int(1)]);
        lp.add_constraint(vec![int(1), int(-1)], Relation::Eq, int(1));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, Some(int(1)));
        assert_eq!(sol.primal, vec![int(1), int(0)]);
    }

    #[test]
    fn unbounded_program() {
        let mut lp = LinearProgram::new(1, Sense::Maximize);
        lp.set_objective(vec![int(1)]);
        lp.add_constraint(vec![int(1)], Relation::Ge, int(0));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_of_every_kind() {
        // min x - y + z, x in [1, 4], y <= 2 (free below), z free, x + z = 5/2, z >= -3
        let mut lp = LinearProgram::new(3, Sense::Minimize);
        lp.set_objective(vec![int(1), int(-1), int(1)]);
        lp.set_bounds(0, Some(int(1)), Some(int(4)));
        lp.set_bounds(1, None, Some(int(2)));
        lp.set_bounds(2, None, None);
        lp.add_constraint(vec![int(1), int(0), int(1)], Relation::Eq, rat(5, 2));
        lp.add_constraint(vec![int(0), int(0), int(1)], Relation::Ge, int(-3));
        let sol = solve(&lp).unwrap();
        // x + z is fixed at 5/2, so the objective is 5/2 - y, minimised at y = 2.
        assert_eq!(sol.value, Some(rat(1, 2)));
        verify(&lp, &sol).unwrap();
    }

    #[test]
    fn inverted_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.set_bounds(0, Some(int(2)), Some(int(1)));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn malformed_programs_are_rejected() {
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.add_constraint(vec![int(1)], Relation::Le, int(1));
        assert!(matches!(solve(&lp), Err(Error::Validation(_))));
    }

    #[test]
    fn capacity_cap() {
        let mut lp = LinearProgram::new(50, Sense::Minimize);
        for _ in 0..50 {
            lp.add_constraint(vec![int(1); 50], Relation::Ge, int(1));
        }
        let limits = Limits { max_lp_entries: 100, ..Limits::default() };
        assert!(matches!(solve_with(&lp, &limits), Err(Error::Capacity { .. })));
    }

    #[test]
    fn degenerate_program_terminates() {
        // Classic Beale example that cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::new(4, Sense::Minimize);
        lp.set_objective(vec![rat(-3, 4), int(20), rat(-1, 2), int(6)]);
        lp.add_constraint(vec![rat(1, 4), int(-8), int(-1), int(9)], Relation::Le, int(0));
        lp.add_constraint(vec![rat(1, 2), int(-12), rat(-1, 2), int(3)], Relation::Le, int(0));
        lp.add_constraint(vec![int(0), int(0), int(1), int(0)], Relation::Le, int(1));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, Some(rat(-5, 4)));
        assert_eq!(sol.primal, vec![int(1), int(0), int(1), int(0)]);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec![int(1), int(2)]);
        lp.add_constraint(vec![int(1), int(1)], Relation::Eq, int(2));
        lp.add_constraint(vec![int(2), int(2)], Relation::Eq, int(4));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, Some(int(4)));
    }

    #[test]
    fn verifier_rejects_tampering() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec![int(3), int(2)]);
        lp.add_constraint(vec![int(1), int(1)], Relation::Le, int(4));
        lp.add_constraint(vec![int(1), int(3)], Relation::Le, int(6));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, Some(int(12)));
        let mut bad = sol.clone();
        bad.dual[0] = int(2);
        assert!(verify(&lp, &bad).is_err());
        let mut bad = sol;
        bad.primal[0] = int(5);
        assert!(verify(&lp, &bad).is_err());
    }

    #[test]
    fn json_dump_round_trips() {
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.set_objective(vec![rat(1, 2), int(1)]);
        lp.set_bounds(1, None, Some(int(3)));
        lp.add_constraint(vec![int(1), int(1)], Relation::Ge, int(1));
        let json = serde_json::to_string(&lp).unwrap();
        let back: LinearProgram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, lp);
    }
}
