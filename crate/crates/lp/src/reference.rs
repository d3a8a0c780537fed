//! Dense two-phase tableau simplex and a depth-first branch and bound on top of it.
//!
//! Meant for small test problems and as an independent oracle for the production
//! backend. Every problem is converted to `min c'x' s.t. A'x' = b', x' >= 0, b' >= 0`
//! with one artificial per row; duals are read from the artificial columns.
use crate::problem::{LinearProgram, RowSense, SolveResult, SolveStatus};
use crate::{LpBackend, LpError};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const INT_TOL: f64 = 1e-6;

/// Reference backend: dense simplex for LPs, branch and bound for MILPs.
#[derive(Debug, Clone)]
pub struct ReferenceBackend {
    pub max_pivots: usize,
    pub max_nodes: usize,
}

impl Default for ReferenceBackend {
    fn default() -> Self {
        Self {
            max_pivots: 200_000,
            max_nodes: 200_000,
        }
    }
}

impl LpBackend for ReferenceBackend {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn lp_impl(&mut self, lp: &LinearProgram, need_duals: bool) -> Result<SolveResult, LpError> {
        let mut res = simplex(lp, self.max_pivots)?;
        if !need_duals {
            res.duals = None;
        }
        Ok(res)
    }

    fn milp_impl(&mut self, lp: &LinearProgram) -> Result<SolveResult, LpError> {
        branch_and_bound(lp, self.max_pivots, self.max_nodes)
    }
}

/// How one original column maps onto nonnegative standard-form columns.
enum ColumnMap {
    /// x = offset + x'
    Shifted { col: usize, offset: f64 },
    /// x = offset - x'
    Mirrored { col: usize, offset: f64 },
    /// x = x⁺ - x⁻
    Free { pos: usize, neg: usize },
}

struct Tableau {
    /// rows × (cols + 1); last entry of each row is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.ncols + 1;
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj -= cb * self.t[i][j];
                }
            }
        }
        r
    }

    /// Runs primal simplex with Dantzig pricing, falling back to Bland's rule on
    /// degenerate streaks. Columns with `allowed[j] == false` never enter.
    fn optimise(&mut self, cost: &[f64], allowed: &[bool], max_pivots: usize) -> Result<Phase, LpError> {
        let rhs = self.ncols;
        let mut degenerate_streak = 0usize;
        for _ in 0..max_pivots {
            let r = self.reduced_costs(cost);
            let bland = degenerate_streak > 50;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..self.ncols {
                if !allowed[j] || r[j] >= -COST_TOL {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if r[j] < best {
                    best = r[j];
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.t[i][rhs] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return Ok(Phase::Unbounded);
            };
            if best_ratio.abs() < 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(row, c);
        }
        Err(LpError::Backend(format!(
            "reference simplex exceeded {max_pivots} pivots"
        )))
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

/// Solves an LP with the dense two-phase simplex. Integrality flags are ignored.
pub fn simplex(lp: &LinearProgram, max_pivots: usize) -> Result<SolveResult, LpError> {
    lp.validate()?;
    let n = lp.num_cols();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut std_cost: Vec<f64> = Vec::new();
    // (std column, width) rows for finite upper bounds on shifted columns
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u, c) = (lp.lower[j], lp.upper[j], lp.objective[j]);
        if l.is_finite() {
            maps.push(ColumnMap::Shifted { col: ncols, offset: l });
            std_cost.push(c);
            if u.is_finite() {
                bound_rows.push((ncols, u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            maps.push(ColumnMap::Mirrored { col: ncols, offset: u });
            std_cost.push(-c);
            ncols += 1;
        } else {
            maps.push(ColumnMap::Free {
                pos: ncols,
                neg: ncols + 1,
            });
            std_cost.push(c);
            std_cost.push(-c);
            ncols += 2;
        }
    }

    // Build rows in terms of standard columns: (coeffs, sense, rhs).
    let mut rows: Vec<(Vec<(usize, f64)>, RowSense, f64)> = Vec::new();
    for row in &lp.rows {
        let mut coeffs = Vec::with_capacity(row.coeffs.len() + 1);
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            match maps[j] {
                ColumnMap::Shifted { col, offset } => {
                    coeffs.push((col, a));
                    rhs -= a * offset;
                }
                ColumnMap::Mirrored { col, offset } => {
                    coeffs.push((col, -a));
                    rhs -= a * offset;
                }
                ColumnMap::Free { pos, neg } => {
                    coeffs.push((pos, a));
                    coeffs.push((neg, -a));
                }
            }
        }
        rows.push((coeffs, row.sense, rhs));
    }
    let n_orig_rows = rows.len();
    for &(col, width) in &bound_rows {
        rows.push((vec![(col, 1.0)], RowSense::Le, width));
    }

    // Slack / surplus columns.
    let mut slack_of = vec![None; rows.len()];
    for (i, (_, sense, _)) in rows.iter().enumerate() {
        match sense {
            RowSense::Le => {
                slack_of[i] = Some((ncols, 1.0));
                std_cost.push(0.0);
                ncols += 1;
            }
            RowSense::Ge => {
                slack_of[i] = Some((ncols, -1.0));
                std_cost.push(0.0);
                ncols += 1;
            }
            RowSense::Eq => {}
        }
    }
    let first_art = ncols;
    let m = rows.len();
    ncols += m;
    std_cost.extend(std::iter::repeat(0.0).take(m));

    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut flip = vec![1.0; m];
    for (i, (coeffs, _, rhs)) in rows.iter().enumerate() {
        let s = if *rhs < 0.0 { -1.0 } else { 1.0 };
        flip[i] = s;
        for &(c, a) in coeffs {
            t[i][c] += s * a;
        }
        if let Some((c, a)) = slack_of[i] {
            t[i][c] = s * a;
        }
        t[i][first_art + i] = 1.0;
        t[i][ncols] = s * rhs;
    }
    let mut tab = Tableau {
        t,
        basis: (first_art..first_art + m).collect(),
        ncols,
    };

    // Phase 1: minimise the sum of artificials.
    let mut phase1_cost = vec![0.0; ncols];
    phase1_cost[first_art..].iter_mut().for_each(|c| *c = 1.0);
    let all = vec![true; ncols];
    tab.optimise(&phase1_cost, &all, max_pivots)?;
    let infeas: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= first_art)
        .map(|(i, _)| tab.t[i][ncols])
        .sum();
    let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    if infeas > FEAS_TOL * scale {
        return Ok(SolveResult::not_optimal(SolveStatus::Infeasible));
    }
    // Drive zero-level artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= first_art {
            if let Some(c) = (0..first_art).find(|&c| tab.t[i][c].abs() > PIVOT_TOL) {
                tab.pivot(i, c);
            }
        }
    }

    // Phase 2.
    let mut allowed = vec![true; ncols];
    allowed[first_art..].iter_mut().for_each(|a| *a = false);
    if let Phase::Unbounded = tab.optimise(&std_cost, &allowed, max_pivots)? {
        return Ok(SolveResult::not_optimal(SolveStatus::Unbounded));
    }

    let mut xs = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        xs[b] = tab.t[i][ncols];
    }
    let primal: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            ColumnMap::Shifted { col, offset } => offset + xs[col],
            ColumnMap::Mirrored { col, offset } => offset - xs[col],
            ColumnMap::Free { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    let r = tab.reduced_costs(&std_cost);
    let duals: Vec<f64> = (0..n_orig_rows).map(|i| -r[first_art + i] * flip[i]).collect();
    let objective = lp.objective_value(&primal);
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        primal,
        duals: Some(duals),
        objective,
        is_basic: true,
    })
}

/// Depth-first branch and bound over [`simplex`], branching on the most fractional column.
pub fn branch_and_bound(lp: &LinearProgram, max_pivots: usize, max_nodes: usize) -> Result<SolveResult, LpError> {
    let mut stack = vec![(lp.lower.clone(), lp.upper.clone())];
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut node_lp = lp.relaxed();
    let mut saw_unbounded = false;
    while let Some((lo, up)) = stack.pop() {
        nodes += 1;
        if nodes > max_nodes {
            return Ok(match incumbent {
                Some((obj, x)) => SolveResult {
                    status: SolveStatus::Limit,
                    primal: x,
                    duals: None,
                    objective: obj,
                    is_basic: false,
                },
                None => SolveResult::not_optimal(SolveStatus::Limit),
            });
        }
        node_lp.lower = lo;
        node_lp.upper = up;
        let res = simplex(&node_lp, max_pivots)?;
        match res.status {
            SolveStatus::Optimal => {}
            SolveStatus::Unbounded => {
                saw_unbounded = true;
                continue;
            }
            _ => continue,
        }
        if let Some((best, _)) = &incumbent {
            if res.objective >= best - 1e-9 * (1.0 + best.abs()) {
                continue;
            }
        }
        let branch = (0..lp.num_cols())
            .filter(|&j| lp.integer[j])
            .map(|j| (j, (res.primal[j] - res.primal[j].round()).abs()))
            .filter(|&(_, frac)| frac > INT_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match branch {
            None => {
                let mut x = res.primal;
                for j in 0..lp.num_cols() {
                    if lp.integer[j] {
                        x[j] = x[j].round();
                    }
                }
                let obj = lp.objective_value(&x);
                incumbent = Some((obj, x));
            }
            Some((j, _)) => {
                let v = res.primal[j];
                let (mut lo_up, mut up_dn) = (node_lp.lower.clone(), node_lp.upper.clone());
                let lo_dn = node_lp.lower.clone();
                let up_up = node_lp.upper.clone();
                up_dn[j] = v.floor();
                lo_up[j] = v.ceil();
                // Explore the round-down branch first.
                stack.push((lo_up, up_up));
                stack.push((lo_dn, up_dn));
            }
        }
    }
    Ok(match incumbent {
        Some((objective, primal)) => SolveResult {
            status: SolveStatus::Optimal,
            primal,
            duals: None,
            objective,
            is_basic: false,
        },
        None if saw_unbounded => SolveResult::not_optimal(SolveStatus::Unbounded),
        None => SolveResult::not_optimal(SolveStatus::Infeasible),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_and_mirrored_columns() {
        // min x + y, x free, y <= 4 (no lower), x - y >= 1, x >= -2 via row, y >= -3 via row
        let mut lp = LinearProgram::new();
        let x = lp.add_column(1.0, f64::NEG_INFINITY, f64::INFINITY);
        let y = lp.add_column(1.0, f64::NEG_INFINITY, 4.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Ge, 1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, -2.0);
        lp.add_row(vec![(y, 1.0)], RowSense::Ge, -3.0);
        let res = simplex(&lp, 1000).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        // x = -2, y = -3 violates x - y >= 1? -2 + 3 = 1 ok.
        assert!((res.objective + 5.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_column(1.0, 0.0, 1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, 2.0);
        assert_eq!(simplex(&lp, 100).unwrap().status, SolveStatus::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_column(-1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, 2.0);
        assert_eq!(simplex(&lp, 100).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new();
        let x = lp.add_column(1.0, 0.0, f64::INFINITY);
        let y = lp.add_column(2.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 3.0);
        lp.add_row(vec![(x, 2.0), (y, 2.0)], RowSense::Eq, 6.0);
        let res = simplex(&lp, 100).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn duals_match_sensitivity_on_le_row() {
        // min -x - y s.t. x + 2y <= 4, x <= 3: optimum x=3, y=0.5, obj -3.5
        let mut lp = LinearProgram::new();
        let x = lp.add_column(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_column(-1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 2.0)], RowSense::Le, 4.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Le, 3.0);
        let res = simplex(&lp, 100).unwrap();
        assert!((res.objective + 3.5).abs() < 1e-9);
        let d = res.duals.unwrap();
        assert!((d[0] + 0.5).abs() < 1e-9);
        assert!((d[1] + 0.5).abs() < 1e-9);
    }
}
