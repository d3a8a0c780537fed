//! Two-block problem data model: planning variables `x` shared by many independent
//! operational periods.
//!
//! Each period `p` contributes `min d_p·y_p` subject to `A_p x + B_p y_p <= b_p` and
//! its own operational constraint set. Rows flagged as balance rows receive an
//! implicit nonnegative shortfall column priced at the period's `slack_penalty`,
//! which keeps every period feasible for any planning vector.
use cga_lp::{Constraint, RowSense};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse matrix in triplet form. Entry order is preserved as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// `y = M x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for &(i, j, a) in &self.entries {
            y[i] += a * x[j];
        }
        y
    }

    /// `x = Mᵀ y`
    pub fn mul_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for &(i, j, a) in &self.entries {
            x[j] += a * y[i];
        }
        x
    }

    /// Row-major grouping of entries, keeping entry order within each row.
    pub fn by_row(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.rows];
        for &(i, j, a) in &self.entries {
            rows[i].push((j, a));
        }
        rows
    }
}

/// Bound vectors in text form: infinite entries are written as `"inf"` / `"-inf"`.
mod bounds {
    use serde::de::Error as _;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Bound {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &b in v {
            if b == f64::INFINITY {
                seq.serialize_element("inf")?;
            } else if b == f64::NEG_INFINITY {
                seq.serialize_element("-inf")?;
            } else {
                seq.serialize_element(&b)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Bound>::deserialize(d)?
            .into_iter()
            .map(|b| match b {
                Bound::Num(v) => Ok(v),
                Bound::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Bound::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
                Bound::Text(t) => Err(D::Error::custom(format!("invalid bound `{t}`"))),
            })
            .collect()
    }
}

/// Named set of planning variables, used for aggregated min/max objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableGroup {
    pub name: String,
    pub members: Vec<usize>,
}

/// The planning block: costs `c` and the feasible set `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanningBlock {
    pub names: Vec<String>,
    pub cost: Vec<f64>,
    #[serde(with = "bounds")]
    pub lower: Vec<f64>,
    #[serde(with = "bounds")]
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub constraints: Vec<Constraint>,
    pub groups: Vec<VariableGroup>,
}

impl PlanningBlock {
    pub fn dim(&self) -> usize {
        self.cost.len()
    }
}

/// A row over operational variables only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    /// Balance rows get a shortfall column with coefficient +1.
    pub balance: bool,
}

/// One operational period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationalBlock {
    pub id: usize,
    pub op_cost: Vec<f64>,
    #[serde(with = "bounds")]
    pub op_lower: Vec<f64>,
    #[serde(with = "bounds")]
    pub op_upper: Vec<f64>,
    pub coupling: SparseMatrix,
    pub op_matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub op_constraints: Vec<OpConstraint>,
    pub slack_penalty: f64,
}

impl OperationalBlock {
    pub fn op_dim(&self) -> usize {
        self.op_cost.len()
    }

    pub fn coupling_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Indices of rows in `op_constraints` that carry a shortfall column.
    pub fn balance_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.op_constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.balance)
            .map(|(i, _)| i)
    }

    pub fn num_balance_rows(&self) -> usize {
        self.op_constraints.iter().filter(|c| c.balance).count()
    }

    /// `d_p·y + penalty·Σ shortfall`
    pub fn cost_of(&self, decision: &OperationalDecision) -> f64 {
        dot(&self.op_cost, &decision.dispatch) + self.slack_penalty * decision.shortfall.iter().sum::<f64>()
    }
}

/// Operational decision of one period: dispatch `y_p` plus shortfall per balance row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OperationalDecision {
    pub dispatch: Vec<f64>,
    pub shortfall: Vec<f64>,
}

/// Full two-block problem. Immutable once built; shared by reference across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub planning: PlanningBlock,
    pub periods: Vec<OperationalBlock>,
}

impl Instance {
    pub fn planning_dim(&self) -> usize {
        self.planning.dim()
    }

    pub fn num_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn has_integrality(&self) -> bool {
        self.planning.integer.iter().any(|&b| b)
    }

    pub fn planning_cost(&self, x: &[f64]) -> f64 {
        dot(&self.planning.cost, x)
    }

    /// Returns an error carrying every violation unless the instance is valid.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_instance(self);
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(report))
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One failed invariant: which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

/// Checks every structural invariant. An empty report means the instance is valid.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let pl = &instance.planning;
    let n = pl.dim();
    if n == 0 {
        out.push(Violation::new(
            "planning.cost",
            "at least one planning variable required",
        ));
    }
    for (field, len) in [
        ("planning.names", pl.names.len()),
        ("planning.lower", pl.lower.len()),
        ("planning.upper", pl.upper.len()),
        ("planning.integer", pl.integer.len()),
    ] {
        if len != n {
            out.push(Violation::new(
                field,
                format!("length {len} differs from planning dimension {n}"),
            ));
        }
    }
    if pl.cost.iter().any(|c| !c.is_finite()) {
        out.push(Violation::new("planning.cost", "entries must be finite"));
    }
    if pl.lower.len() == n && pl.upper.len() == n {
        for j in 0..n {
            if !(pl.lower[j] <= pl.upper[j]) || pl.lower[j] == f64::INFINITY {
                out.push(Violation::new(
                    format!("planning.lower[{j}]"),
                    "lower bound must not exceed upper bound",
                ));
            }
        }
    }
    for (k, row) in pl.constraints.iter().enumerate() {
        if row.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) || !row.rhs.is_finite() {
            out.push(Violation::new(
                format!("planning.constraints[{k}]"),
                "coefficients must be finite and reference planning columns",
            ));
        }
    }
    for (k, g) in pl.groups.iter().enumerate() {
        if g.members.is_empty() || g.members.iter().any(|&j| j >= n) {
            out.push(Violation::new(
                format!("planning.groups[{k}]"),
                "members must be nonempty valid planning indices",
            ));
        }
    }

    if instance.periods.is_empty() {
        out.push(Violation::new("periods", "at least one period required"));
    }
    let mut ids: Vec<usize> = instance.periods.iter().map(|p| p.id).collect();
    ids.sort_unstable();
    if ids.iter().enumerate().any(|(i, &id)| id != i + 1) {
        out.push(Violation::new("periods.id", "ids must be unique and contiguous from 1"));
    }

    for (p, block) in instance.periods.iter().enumerate() {
        validate_block(p, block, n, &mut out);
    }
    out
}

fn validate_block(p: usize, b: &OperationalBlock, n: usize, out: &mut Vec<Violation>) {
    let f = |name: &str| format!("periods[{p}].{name}");
    let m = b.op_dim();
    let r = b.coupling_rows();
    for (name, len) in [("op_lower", b.op_lower.len()), ("op_upper", b.op_upper.len())] {
        if len != m {
            out.push(Violation::new(
                f(name),
                format!("length {len} differs from op_cost length {m}"),
            ));
        }
    }
    if b.coupling.cols != n {
        out.push(Violation::new(
            f("coupling_matrix"),
            format!("has {} columns, planning dimension is {n}", b.coupling.cols),
        ));
    }
    if b.coupling.rows != r {
        out.push(Violation::new(
            f("coupling_matrix"),
            format!("has {} rows, rhs has {r}", b.coupling.rows),
        ));
    }
    if b.op_matrix.rows != r || b.op_matrix.cols != m {
        out.push(Violation::new(
            f("op_matrix"),
            format!("shape {}x{} differs from {r}x{m}", b.op_matrix.rows, b.op_matrix.cols),
        ));
    }
    for (name, mat) in [("coupling_matrix", &b.coupling), ("op_matrix", &b.op_matrix)] {
        if mat
            .entries
            .iter()
            .any(|&(i, j, a)| i >= mat.rows || j >= mat.cols || !a.is_finite())
        {
            out.push(Violation::new(f(name), "entry outside declared shape or non-finite"));
        }
    }
    if b.rhs.iter().any(|v| !v.is_finite()) || b.op_cost.iter().any(|v| !v.is_finite()) {
        out.push(Violation::new(f("rhs"), "rhs and op_cost must be finite"));
    }
    if b.op_lower.len() == m && b.op_upper.len() == m {
        for j in 0..m {
            if !(b.op_lower[j] <= b.op_upper[j]) || b.op_lower[j] == f64::INFINITY {
                out.push(Violation::new(
                    format!("periods[{p}].op_lower[{j}]"),
                    "empty bound interval",
                ));
            }
        }
    }
    for (k, row) in b.op_constraints.iter().enumerate() {
        if row.coeffs.iter().any(|&(j, a)| j >= m || !a.is_finite()) || !row.rhs.is_finite() {
            out.push(Violation::new(
                format!("periods[{p}].op_constraints[{k}]"),
                "coefficients must be finite and reference operational columns",
            ));
        }
        if row.balance && row.sense != RowSense::Eq {
            out.push(Violation::new(
                format!("periods[{p}].op_constraints[{k}]"),
                "balance rows must be equalities",
            ));
        }
    }
    if !(b.slack_penalty > 0.0) || !b.slack_penalty.is_finite() {
        out.push(Violation::new(f("slack_penalty"), "must be strictly positive"));
    } else if b.op_cost.iter().any(|&c| c >= b.slack_penalty) {
        out.push(Violation::new(f("slack_penalty"), "must exceed every op_cost entry"));
    }
}

/// `c·x + Σ_p (d_p·y_p + penalty·shortfall_p)`.
pub fn evaluate_total_cost(instance: &Instance, planning: &[f64], ops: &[OperationalDecision]) -> Result<f64> {
    let n = instance.planning_dim();
    if planning.len() != n {
        return Err(Error::Dimension(format!(
            "planning vector has {} entries, expected {n}",
            planning.len()
        )));
    }
    if ops.len() != instance.num_periods() {
        return Err(Error::Dimension(format!(
            "{} operational decisions for {} periods",
            ops.len(),
            instance.num_periods()
        )));
    }
    let mut total = instance.planning_cost(planning);
    for (block, dec) in instance.periods.iter().zip(ops) {
        if dec.dispatch.len() != block.op_dim() || dec.shortfall.len() != block.num_balance_rows() {
            return Err(Error::Dimension(format!(
                "period {} decision has shape ({}, {}), expected ({}, {})",
                block.id,
                dec.dispatch.len(),
                dec.shortfall.len(),
                block.op_dim(),
                block.num_balance_rows()
            )));
        }
        total += block.cost_of(dec);
    }
    Ok(total)
}

/// Clamps planning values that sit within `1e-6` outside their bounds and rounds
/// integer columns when `integral` is set. Larger bound violations are errors.
pub fn clean_planning(instance: &Instance, x: &[f64], integral: bool) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-6;
    let pl = &instance.planning;
    x.iter()
        .enumerate()
        .map(|(j, &v)| {
            let (lo, hi) = (pl.lower[j], pl.upper[j]);
            if v < lo - TOL || v > hi + TOL {
                return Err(Error::PlanningOutOfBounds {
                    column: j,
                    value: v,
                    lower: lo,
                    upper: hi,
                });
            }
            let v = v.clamp(lo, hi);
            Ok(if integral && pl.integer[j] { v.round() } else { v })
        })
        .collect()
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
    Infeasible,
}

/// Continuous relaxation phase or integer phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Relaxed,
    Integer,
}

/// One iteration of a cutting-plane solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// `c·x^k + Σ f_p(x^k)` from fresh subproblem solves.
    pub true_cost: f64,
    /// Least-cost only: best lower bound in the phase.
    pub lower_bound: Option<f64>,
    /// Least-cost only: best upper bound in the phase.
    pub upper_bound: Option<f64>,
    /// Raw optimal value of the master solved in this iteration (least-cost) or the
    /// master that produced `x^k` (MGA).
    pub master_objective: Option<f64>,
    /// MGA only: `true_cost / ε`.
    pub budget_ratio: Option<f64>,
    pub master_secs: f64,
    pub subproblem_secs: f64,
}

/// Outcome of one least-cost or MGA solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub planning: Vec<f64>,
    pub period_costs: Vec<f64>,
    pub total_cost: f64,
    pub mga_objective: Option<f64>,
    pub trace: Vec<IterationRecord>,
    pub status: RunStatus,
}

impl SolutionRecord {
    pub fn infeasible(n: usize, trace: Vec<IterationRecord>) -> Self {
        Self {
            planning: vec![f64::NAN; n],
            period_costs: Vec::new(),
            total_cost: f64::NAN,
            mga_objective: None,
            trace,
            status: RunStatus::Infeasible,
        }
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// `total_cost == c·x + Σ period_costs` within `1e-6` relative.
    pub fn is_consistent(&self, instance: &Instance) -> bool {
        if self.status == RunStatus::Infeasible {
            return true;
        }
        let sum = instance.planning_cost(&self.planning) + self.period_costs.iter().sum::<f64>();
        (sum - self.total_cost).abs() <= 1e-6 * self.total_cost.abs().max(1.0)
    }
}
