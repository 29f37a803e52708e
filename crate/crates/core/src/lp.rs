//! Dense two-phase simplex for small-row, wide linear programs.
//!
//! Solves `min c·x` subject to `A_eq x = b_eq`, `A_le x ≤ b_le`, `x ≥ 0`.
//! The persuasion LP has a handful of rows and tens of thousands of columns,
//! so a full tableau stays cheap: each pivot is `O(rows × cols)`.

use alloc::vec;
use alloc::vec::Vec;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-8;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    /// Phase one ended with positive artificial mass. `farkas` holds the phase-one
    /// row multipliers `y` (one per equality row, then per inequality row):
    /// `y·A ≤ 0` on every column while `y·b > 0`, up to tolerance.
    #[error("infeasible: phase-one residual {residual:.3e}")]
    Infeasible { residual: f64, farkas: Vec<f64> },
    #[error("unbounded objective")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
    #[error("row length {got} does not match {expected} variables")]
    Shape { expected: usize, got: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs, last entry holds −z.
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = core::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.cost[c] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Runs simplex iterations over columns `< allowed`; returns pivots performed.
    fn optimize(&mut self, allowed: usize, budget: usize) -> Result<usize, LpError> {
        let mut degenerate = 0usize;
        for it in 0..budget {
            let bland = degenerate >= DEGENERATE_SWITCH;
            let scale = 1.0 + self.cost[..allowed].iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
            let tol = COST_TOL * scale;
            let mut enter = None;
            let mut best = -tol;
            for j in 0..allowed {
                let d = self.cost[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else { return Ok(it) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else { return Err(LpError::Unbounded) };
            degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(r, c);
        }
        Err(LpError::IterationLimit)
    }
}

/// Solves the program with the two-phase simplex method.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    for (row, _) in lp.eq.iter().chain(&lp.le) {
        if row.len() != n {
            return Err(LpError::Shape { expected: n, got: row.len() });
        }
    }
    let m_eq = lp.eq.len();
    let m_le = lp.le.len();
    let m = m_eq + m_le;
    let slack0 = n;
    let art0 = n + m_le;
    let width = art0 + m;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    let mut artificial_rows = Vec::new();
    for (i, (a, b)) in lp.eq.iter().chain(&lp.le).enumerate() {
        let mut row = vec![0.0; width + 1];
        let s = if *b < 0.0 { -1.0 } else { 1.0 };
        for (dst, v) in row.iter_mut().zip(a) {
            *dst = s * v;
        }
        row[width] = s * b;
        if i >= m_eq {
            row[slack0 + i - m_eq] = s;
        }
        if i >= m_eq && s > 0.0 {
            basis.push(slack0 + i - m_eq);
        } else {
            row[art0 + i] = 1.0;
            basis.push(art0 + i);
            artificial_rows.push(i);
        }
        sign.push(s);
        rows.push(row);
    }

    let budget = 50 * (width + m) + 1000;
    let mut tab = Tableau { rows, cost: vec![0.0; width + 1], basis, width };
    let mut iterations = 0;

    if !artificial_rows.is_empty() {
        for j in art0..width {
            tab.cost[j] = 1.0;
        }
        for &i in &artificial_rows {
            for j in 0..=width {
                tab.cost[j] -= tab.rows[i][j];
            }
        }
        iterations += tab.optimize(width, budget)?;
        let residual = -tab.cost[width];
        if residual > FEAS_TOL {
            // Phase-one duals: reduced cost of artificial i is 1 − y_i, of slack i is −y_i.
            let farkas = (0..m)
                .map(|i| {
                    let y = if artificial_rows.contains(&i) {
                        1.0 - tab.cost[art0 + i]
                    } else {
                        -tab.cost[slack0 + i - m_eq]
                    };
                    sign[i] * y
                })
                .collect();
            return Err(LpError::Infeasible { residual, farkas });
        }
        // Drive remaining zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art0 {
                let col = (0..art0).find(|&j| libm::fabs(tab.rows[i][j]) > 1e-7);
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    tab.cost = vec![0.0; width + 1];
    tab.cost[..n].copy_from_slice(&lp.objective);
    for i in 0..tab.rows.len() {
        let cb = if tab.basis[i] < n { lp.objective[tab.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=width {
                tab.cost[j] -= cb * tab.rows[i][j];
            }
        }
    }
    iterations += tab.optimize(art0, budget)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i).max(0.0);
        }
    }
    let objective = crate::math::dot(&lp.objective, &x);
    Ok(LpSolution { x, objective, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let lp = LinearProgram {
            objective: vec![-3.0, -5.0],
            eq: vec![],
            le: vec![(vec![1.0, 0.0], 4.0), (vec![0.0, 2.0], 12.0), (vec![3.0, 2.0], 18.0)],
        };
        let s = solve(&lp).unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_and_phase_one() {
        // min x + 2y + 3z, x + y + z = 1, y + z ≥ 0.5 (as −y − z ≤ −0.5).
        let lp = LinearProgram {
            objective: vec![1.0, 2.0, 3.0],
            eq: vec![(vec![1.0, 1.0, 1.0], 1.0)],
            le: vec![(vec![0.0, -1.0, -1.0], -0.5)],
        };
        let s = solve(&lp).unwrap();
        assert!((s.objective - 1.5).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn infeasible_reports_certificate() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            eq: vec![(vec![1.0, 1.0], 1.0)],
            le: vec![(vec![1.0, 1.0], 0.5)],
        };
        match solve(&lp) {
            Err(LpError::Infeasible { residual, farkas }) => {
                assert!(residual > 0.4);
                // y·b > 0 with y·A ≤ 0 columnwise (slack column gives y_le ≤ 0).
                let yb = farkas[0] * 1.0 + farkas[1] * 0.5;
                assert!(yb > 0.0);
                assert!(farkas[0] + farkas[1] <= 1e-9);
                assert!(farkas[1] <= 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram { objective: vec![-1.0, 0.0], eq: vec![], le: vec![(vec![-1.0, 1.0], 1.0)] };
        assert_eq!(solve(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let lp = LinearProgram {
            objective: vec![1.0, 0.0, 2.0],
            eq: vec![(vec![1.0, 1.0, 0.0], 1.0), (vec![2.0, 2.0, 0.0], 2.0), (vec![0.0, 0.0, 1.0], 0.25)],
            le: vec![],
        };
        let s = solve(&lp).unwrap();
        assert!((s.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let lp = LinearProgram { objective: vec![1.0], eq: vec![(vec![1.0, 1.0], 1.0)], le: vec![] };
        assert!(matches!(solve(&lp), Err(LpError::Shape { .. })));
    }
}
