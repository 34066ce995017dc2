//! Discretized linear programs for efficient multi-object mechanisms in
//! the continuous market: quantile grids with conditional-mean
//! representatives, full and cutting-plane simplex solves with a
//! burning-minimal tie-break, named-mechanism encodings (no-screening
//! serial dictatorship, posted-price screening, random favorites), and
//! CSV/LP-text exports.

use crate::distributions::{reduced, Dist, Marginal};
use crate::numerics::{integrate, DEFAULT_INTEGRAL_TOL};
use crate::{Error, Result};
use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use std::fmt::Write as _;

/// Joint structure across dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointSpec {
    /// Independent coordinates.
    Product,
    /// Mixture of the product distribution and a perfectly-correlated
    /// component placing its mass on equal-quantile-cell points.
    DiagonalMixture { diagonal_weight: f64 },
}

/// Finite valuation environment on a per-dimension quantile grid.
///
/// Each dimension is split into `n` equal-probability cells
/// `[G⁻¹(j/n), G⁻¹((j+1)/n))`; a cell is represented by its conditional
/// mean so that cell masses and first moments are both exact.
#[derive(Debug, Clone)]
pub struct DiscretizedEnvironment {
    pub n: usize,
    pub k: usize,
    pub marginals: Vec<Marginal>,
    pub joint: JointSpec,
    pub capacities: Vec<f64>,
    /// Per-dimension cell lower endpoints `G⁻¹(j/n)`, length `n + 1`
    /// including the upper support endpoint.
    pub edges: Vec<Vec<f64>>,
    /// Per-dimension conditional cell means, length `n`.
    pub levels: Vec<Vec<f64>>,
    /// Probability per grid point, length `n^k`, summing to 1.
    pub weights: Vec<f64>,
}

impl DiscretizedEnvironment {
    pub fn num_points(&self) -> usize {
        self.weights.len()
    }

    /// Digits of point `i` in base `n` (dimension 0 most significant).
    fn digits(&self, i: usize) -> [usize; 3] {
        let mut d = [0usize; 3];
        let mut rest = i;
        for dim in (0..self.k).rev() {
            d[dim] = rest % self.n;
            rest /= self.n;
        }
        d
    }

    /// Representative value of point `i` in dimension `dim`.
    pub fn value(&self, i: usize, dim: usize) -> f64 {
        self.levels[dim][self.digits(i)[dim]]
    }

    /// Total supply `Σ_k m_k`.
    pub fn total_supply(&self) -> f64 {
        self.capacities.iter().sum()
    }
}

/// Builds the discretized environment for `marginals` under `joint`
/// with per-object capacities.
pub fn build_grid(
    marginals: &[Marginal],
    n: usize,
    joint: JointSpec,
    capacities: &[f64],
) -> Result<DiscretizedEnvironment> {
    let k = marginals.len();
    if !(1..=3).contains(&k) {
        return Err(Error::DomainViolation(format!(
            "grid supports 1..=3 dimensions, got {k}"
        )));
    }
    if n < 2 {
        return Err(Error::DomainViolation(format!(
            "grid needs at least 2 cells per dimension, got {n}"
        )));
    }
    let points = n.pow(k as u32);
    if points > 100_000 {
        return Err(Error::DomainViolation(format!(
            "grid of {n}^{k} = {points} points exceeds the 100000-point bound"
        )));
    }
    if capacities.len() != k {
        return Err(Error::DomainViolation(format!(
            "{} capacities for {k} objects",
            capacities.len()
        )));
    }
    let m_bar: f64 = capacities.iter().sum();
    if capacities.iter().any(|&m| !(m > 0.0)) || !(m_bar < 1.0) {
        return Err(Error::DomainViolation(format!(
            "capacities must be positive with total below 1, got {capacities:?}"
        )));
    }
    if let JointSpec::DiagonalMixture { diagonal_weight } = joint {
        if !(0.0..=1.0).contains(&diagonal_weight) {
            return Err(Error::DomainViolation(format!(
                "diagonal weight must lie in [0, 1], got {diagonal_weight}"
            )));
        }
        if k == 1 {
            return Err(Error::DomainViolation(
                "a diagonal mixture needs at least 2 dimensions".into(),
            ));
        }
    }
    let mut edges = Vec::with_capacity(k);
    let mut levels = Vec::with_capacity(k);
    for g in marginals {
        g.validate()?;
        if !g.mean_is_finite() {
            return Err(Error::DivergentMoment(format!(
                "cell means diverge for {g}"
            )));
        }
        let mut e = Vec::with_capacity(n + 1);
        for j in 0..=n {
            e.push(g.quantile(j as f64 / n as f64)?);
        }
        let mut l = Vec::with_capacity(n);
        for j in 0..n {
            let mass = n as f64
                * integrate(
                    |t| t * g.pdf(t).unwrap_or(f64::NAN),
                    e[j],
                    e[j + 1],
                    DEFAULT_INTEGRAL_TOL,
                )?;
            l.push(mass);
        }
        edges.push(e);
        levels.push(l);
    }
    let product_w = (n as f64).powi(k as i32).recip();
    let mut weights = vec![0.0; points];
    let diag = match joint {
        JointSpec::Product => 0.0,
        JointSpec::DiagonalMixture { diagonal_weight } => diagonal_weight,
    };
    let env_probe = DiscretizedEnvironment {
        n,
        k,
        marginals: marginals.to_vec(),
        joint,
        capacities: capacities.to_vec(),
        edges,
        levels,
        weights: vec![0.0; points],
    };
    for (i, w) in weights.iter_mut().enumerate() {
        let d = env_probe.digits(i);
        let on_diag = (1..k).all(|dim| d[dim] == d[0]);
        *w = (1.0 - diag) * product_w
            + if on_diag { diag / n as f64 } else { 0.0 };
    }
    let mut env = env_probe;
    env.weights = weights;
    Ok(env)
}

/// Sparse `≤` row: coefficient list and right-hand side.
type Row = (Vec<(usize, f64)>, f64);

/// Symbolic description of the residual-surplus LP for an environment.
///
/// Variables are `x_{i,k}` (allocation of object `k` at point `i`) and
/// `p_i` (payment), maximizing `Σ_i w_i (Σ_k v_{i,k} x_{i,k} - p_i)`
/// subject to unit demand, per-object resource, individual rationality,
/// and incentive compatibility for every ordered point pair.
pub struct LpDescription {
    pub env: DiscretizedEnvironment,
    /// Cached representative values, `points × k` row-major.
    values: Vec<f64>,
    pub num_vars: usize,
    /// Upper payment bound `max_i Σ_k v_{i,k}` keeping the polytope
    /// bounded.
    pub payment_bound: f64,
}

/// Builds the LP description for `env`.
pub fn build_lp(env: &DiscretizedEnvironment) -> LpDescription {
    let p = env.num_points();
    let k = env.k;
    let mut values = Vec::with_capacity(p * k);
    for i in 0..p {
        for dim in 0..k {
            values.push(env.value(i, dim));
        }
    }
    let payment_bound = (0..p)
        .map(|i| (0..k).map(|d| values[i * k + d]).sum::<f64>())
        .fold(0.0f64, f64::max);
    LpDescription {
        env: env.clone(),
        values,
        num_vars: p * (k + 1),
        payment_bound,
    }
}

impl LpDescription {
    pub fn num_points(&self) -> usize {
        self.env.num_points()
    }

    fn x_var(&self, i: usize, dim: usize) -> usize {
        i * self.env.k + dim
    }

    fn p_var(&self, i: usize) -> usize {
        self.num_points() * self.env.k + i
    }

    pub fn value(&self, i: usize, dim: usize) -> f64 {
        self.values[i * self.env.k + dim]
    }

    /// Ordered-pair incentive-compatibility row count `P(P-1)`.
    pub fn ic_row_count(&self) -> u64 {
        let p = self.num_points() as u64;
        p * (p - 1)
    }

    /// All structural rows: IC + IR + unit demand + resource.
    pub fn total_row_count(&self) -> u64 {
        let p = self.num_points() as u64;
        self.ic_row_count() + 2 * p + self.env.k as u64
    }

    /// Maximization objective coefficients, indexed by variable.
    pub fn objective(&self) -> Vec<f64> {
        let p = self.num_points();
        let k = self.env.k;
        let mut obj = vec![0.0; self.num_vars];
        for i in 0..p {
            let w = self.env.weights[i];
            for dim in 0..k {
                obj[self.x_var(i, dim)] = w * self.value(i, dim);
            }
            obj[self.p_var(i)] = -w;
        }
        obj
    }

    fn unit_row(&self, i: usize) -> Row {
        (
            (0..self.env.k).map(|d| (self.x_var(i, d), 1.0)).collect(),
            1.0,
        )
    }

    fn resource_row(&self, dim: usize) -> Row {
        (
            (0..self.num_points())
                .map(|i| (self.x_var(i, dim), self.env.weights[i]))
                .collect(),
            self.env.capacities[dim],
        )
    }

    fn ir_row(&self, i: usize) -> Row {
        let mut coeffs = vec![(self.p_var(i), 1.0)];
        for d in 0..self.env.k {
            coeffs.push((self.x_var(i, d), -self.value(i, d)));
        }
        (coeffs, 0.0)
    }

    /// Truth-telling at `i` dominates reporting `j`:
    /// `Σ v_i (x_j - x_i) + p_i - p_j ≤ 0`.
    fn ic_row(&self, i: usize, j: usize) -> Row {
        let mut coeffs = Vec::with_capacity(2 * self.env.k + 2);
        for d in 0..self.env.k {
            let v = self.value(i, d);
            coeffs.push((self.x_var(j, d), v));
            coeffs.push((self.x_var(i, d), -v));
        }
        coeffs.push((self.p_var(i), 1.0));
        coeffs.push((self.p_var(j), -1.0));
        (coeffs, 0.0)
    }

    /// Non-IC rows shared by every solve.
    fn base_rows(&self) -> Vec<Row> {
        let p = self.num_points();
        let mut rows = Vec::with_capacity(2 * p + self.env.k);
        for i in 0..p {
            rows.push(self.unit_row(i));
        }
        for d in 0..self.env.k {
            rows.push(self.resource_row(d));
        }
        for i in 0..p {
            rows.push(self.ir_row(i));
        }
        rows
    }

    /// Index pairs differing by one step in one dimension (local IC
    /// seed for the cutting-plane mode).
    fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let p = self.num_points();
        let n = self.env.n;
        let mut pairs = Vec::new();
        for i in 0..p {
            let d = self.env.digits(i);
            let mut stride = 1;
            for dim in (0..self.env.k).rev() {
                if d[dim] + 1 < n {
                    pairs.push((i, i + stride));
                    pairs.push((i + stride, i));
                }
                stride *= n;
            }
        }
        pairs
    }

    /// LP-format text export (CPLEX LP interchange), variables named
    /// `x_<point>_<k>` and `p_<point>`.
    pub fn export_lp_text(&self) -> String {
        let p = self.num_points();
        let k = self.env.k;
        let name = |var: usize| -> String {
            if var < p * k {
                format!("x_{}_{}", var / k, var % k)
            } else {
                format!("p_{}", var - p * k)
            }
        };
        let mut out = String::new();
        out.push_str("\\ residual-surplus grid LP\nMaximize\n obj:");
        for (var, c) in self.objective().iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {} {}", if *c < 0.0 { "-" } else { "+" }, c.abs());
                out.push_str(&name(var));
            }
        }
        out.push_str("\nSubject To\n");
        let mut write_row = |label: String, row: &Row| {
            let _ = write!(out, " {label}:");
            for (var, c) in &row.0 {
                let _ = write!(out, " {} {} {}", if *c < 0.0 { "-" } else { "+" }, c.abs(), name(*var));
            }
            let _ = writeln!(out, " <= {}", row.1);
        };
        for i in 0..p {
            write_row(format!("unit_{i}"), &self.unit_row(i));
        }
        for d in 0..k {
            write_row(format!("resource_{d}"), &self.resource_row(d));
        }
        for i in 0..p {
            write_row(format!("ir_{i}"), &self.ir_row(i));
        }
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    write_row(format!("ic_{i}_{j}"), &self.ic_row(i, j));
                }
            }
        }
        out.push_str("Bounds\n");
        for i in 0..p {
            for d in 0..k {
                let _ = writeln!(out, " 0 <= x_{i}_{d} <= 1");
            }
        }
        for i in 0..p {
            let _ = writeln!(out, " 0 <= p_{i} <= {}", self.payment_bound);
        }
        out.push_str("End\n");
        out
    }
}

/// Allocation/payment table over the grid.
#[derive(Debug, Clone)]
pub struct GridMechanism {
    /// `points × k` allocation probabilities, row-major.
    pub allocation: Vec<f64>,
    pub payments: Vec<f64>,
    /// Residual surplus `Σ_i w_i (Σ_k v_{i,k} x_{i,k} - p_i)`.
    pub rs: f64,
}

/// Worst-case constraint residuals of a grid mechanism (positive means
/// violated).
#[derive(Debug, Clone, Copy)]
pub struct GridResiduals {
    pub ic: f64,
    pub ir: f64,
    pub resource: f64,
    pub unit: f64,
}

impl GridMechanism {
    fn utility(&self, lp: &LpDescription, i: usize, bundle: usize) -> f64 {
        let k = lp.env.k;
        let mut u = -self.payments[bundle];
        for d in 0..k {
            u += lp.value(i, d) * self.allocation[bundle * k + d];
        }
        u
    }

    /// Recomputes the objective from the table.
    pub fn objective(&self, lp: &LpDescription) -> f64 {
        (0..lp.num_points())
            .map(|i| {
                let gross: f64 = (0..lp.env.k)
                    .map(|d| lp.value(i, d) * self.allocation[i * lp.env.k + d])
                    .sum();
                lp.env.weights[i] * (gross - self.payments[i])
            })
            .sum()
    }

    /// Expected payment mass `Σ_i w_i p_i` (burned surplus).
    pub fn payment_mass(&self, lp: &LpDescription) -> f64 {
        (0..lp.num_points())
            .map(|i| lp.env.weights[i] * self.payments[i])
            .sum()
    }

    /// Maximum violations of the mechanism invariants.
    pub fn verify(&self, lp: &LpDescription) -> GridResiduals {
        let p = lp.num_points();
        let k = lp.env.k;
        let mut ic = f64::NEG_INFINITY;
        let mut ir = f64::NEG_INFINITY;
        let mut unit = f64::NEG_INFINITY;
        for i in 0..p {
            let own = self.utility(lp, i, i);
            ir = ir.max(-own);
            unit = unit.max(
                (0..k).map(|d| self.allocation[i * k + d]).sum::<f64>() - 1.0,
            );
            for j in 0..p {
                if i != j {
                    ic = ic.max(self.utility(lp, i, j) - own);
                }
            }
        }
        let mut resource = f64::NEG_INFINITY;
        for d in 0..k {
            let used: f64 = (0..p)
                .map(|i| lp.env.weights[i] * self.allocation[i * k + d])
                .sum();
            resource = resource.max(used - lp.env.capacities[d]);
        }
        GridResiduals {
            ic,
            ir,
            resource,
            unit,
        }
    }
}

/// How `solve_lp_with` handles the quadratic family of IC rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// Materialize every ordered-pair IC row.
    Full,
    /// Seed with adjacent-pair IC rows and add violated rows in rounds.
    CuttingPlane,
}

/// Number of materialized IC rows above which `solve_lp` switches to
/// the cutting-plane mode.
const FULL_MODE_IC_LIMIT: u64 = 60_000;

/// Violated IC rows added per cutting-plane round.
const CUT_CHUNK: usize = 2_000;

fn lp_error(e: minilp::Error) -> Error {
    Error::Lp(format!("solver: {e:?}"))
}

/// One simplex solve over the given IC pairs; `direction`/`objective`
/// select the phase; `rs_floor` (phase 2) pins the phase-1 optimum.
fn solve_once(
    lp: &LpDescription,
    ic_pairs: &[(usize, usize)],
    objective: &[f64],
    direction: OptimizationDirection,
    rs_floor: Option<f64>,
) -> Result<(Vec<f64>, f64)> {
    let mut problem = Problem::new(direction);
    let p = lp.num_points();
    let k = lp.env.k;
    let vars: Vec<Variable> = (0..lp.num_vars)
        .map(|v| {
            let hi = if v < p * k { 1.0 } else { lp.payment_bound };
            problem.add_var(objective[v], (0.0, hi))
        })
        .collect();
    let mut add_row = |row: &Row, op: ComparisonOp, rhs: f64| {
        let coeffs: Vec<(Variable, f64)> =
            row.0.iter().map(|&(v, c)| (vars[v], c)).collect();
        problem.add_constraint(coeffs.as_slice(), op, rhs);
    };
    for row in lp.base_rows() {
        let rhs = row.1;
        add_row(&row, ComparisonOp::Le, rhs);
    }
    for &(i, j) in ic_pairs {
        let row = lp.ic_row(i, j);
        let rhs = row.1;
        add_row(&row, ComparisonOp::Le, rhs);
    }
    if let Some(floor) = rs_floor {
        // Σ w (v·x - p) ≥ floor.
        let max_obj = lp.objective();
        let coeffs: Vec<(Variable, f64)> = max_obj
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(v, c)| (vars[v], *c))
            .collect();
        problem.add_constraint(coeffs.as_slice(), ComparisonOp::Ge, floor);
    }
    let solution = problem.solve().map_err(lp_error)?;
    let values: Vec<f64> = vars.iter().map(|v| *solution.var_value(*v)).collect();
    Ok((values, solution.objective()))
}

/// Ordered pairs whose IC row the assignment violates by more than
/// `tol`, in deterministic scan order, capped at `limit`.
fn violated_pairs(
    lp: &LpDescription,
    values: &[f64],
    existing: &std::collections::HashSet<(usize, usize)>,
    tol: f64,
    limit: usize,
) -> Vec<(usize, usize)> {
    let p = lp.num_points();
    let k = lp.env.k;
    let utility = |i: usize, j: usize| -> f64 {
        let mut u = -values[lp.p_var(j)];
        for d in 0..k {
            u += lp.value(i, d) * values[lp.x_var(j, d)];
        }
        u
    };
    let mut found = Vec::new();
    for i in 0..p {
        let own = utility(i, i);
        for j in 0..p {
            if i != j && utility(i, j) - own > tol && !existing.contains(&(i, j)) {
                found.push((i, j));
                if found.len() >= limit {
                    return found;
                }
            }
        }
    }
    found
}

/// Solves the LP, choosing the IC handling automatically by size.
pub fn solve_lp(lp: &LpDescription) -> Result<GridMechanism> {
    let mode = if lp.ic_row_count() <= FULL_MODE_IC_LIMIT {
        SolveMode::Full
    } else {
        SolveMode::CuttingPlane
    };
    solve_lp_with(lp, mode)
}

/// Solves the LP in two phases: maximize residual surplus, then among
/// optima minimize expected payments (burning-minimal tie-break) while
/// pinning the surplus to the phase-1 optimum.
pub fn solve_lp_with(lp: &LpDescription, mode: SolveMode) -> Result<GridMechanism> {
    let p = lp.num_points();
    let k = lp.env.k;
    let max_obj = lp.objective();
    let mut pay_obj = vec![0.0; lp.num_vars];
    for i in 0..p {
        pay_obj[lp.p_var(i)] = lp.env.weights[i];
    }

    let phase = |objective: &[f64],
                 direction: OptimizationDirection,
                 rs_floor: Option<f64>,
                 cuts: &mut Vec<(usize, usize)>|
     -> Result<(Vec<f64>, f64)> {
        match mode {
            SolveMode::Full => {
                let mut pairs = Vec::with_capacity(p * (p - 1));
                for i in 0..p {
                    for j in 0..p {
                        if i != j {
                            pairs.push((i, j));
                        }
                    }
                }
                solve_once(lp, &pairs, objective, direction, rs_floor)
            }
            SolveMode::CuttingPlane => {
                let mut seen: std::collections::HashSet<(usize, usize)> =
                    cuts.iter().copied().collect();
                for pair in lp.adjacent_pairs() {
                    if seen.insert(pair) {
                        cuts.push(pair);
                    }
                }
                loop {
                    let (values, obj) =
                        solve_once(lp, cuts, objective, direction, rs_floor)?;
                    let new = violated_pairs(lp, &values, &seen, 1e-9, CUT_CHUNK);
                    if new.is_empty() {
                        return Ok((values, obj));
                    }
                    for pair in new {
                        seen.insert(pair);
                        cuts.push(pair);
                    }
                }
            }
        }
    };

    let mut cuts = Vec::new();
    let (_, rs_opt) = phase(&max_obj, OptimizationDirection::Maximize, None, &mut cuts)?;
    let (values, _) = phase(
        &pay_obj,
        OptimizationDirection::Minimize,
        Some(rs_opt - 1e-9),
        &mut cuts,
    )?;

    let mut allocation = Vec::with_capacity(p * k);
    for i in 0..p {
        for d in 0..k {
            allocation.push(values[lp.x_var(i, d)].clamp(0.0, 1.0));
        }
    }
    let payments: Vec<f64> = (0..p).map(|i| values[lp.p_var(i)].max(0.0)).collect();
    let mut mech = GridMechanism {
        allocation,
        payments,
        rs: 0.0,
    };
    mech.rs = mech.objective(lp);
    Ok(mech)
}

/// Mechanisms with known grid encodings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedMechanism {
    /// Random-priority serial dictatorship (no screening, no payments).
    Sd,
    /// Posted market-clearing prices (full screening).
    Vcg,
    /// Random favorites: two free lotteries, one per object (K = 2,
    /// exponential marginals).
    Rf,
}

fn require_symmetric(env: &DiscretizedEnvironment) -> Result<()> {
    if env.marginals.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::DomainViolation(
            "encoding needs identical marginals across dimensions".into(),
        ));
    }
    Ok(())
}

fn encode_sd(lp: &LpDescription) -> Result<GridMechanism> {
    let env = &lp.env;
    let p = env.num_points();
    let k = env.k;
    let m_bar = env.total_supply();
    let mut allocation = vec![0.0; p * k];
    match k {
        1 => {
            for i in 0..p {
                allocation[i] = m_bar;
            }
        }
        2 => {
            require_symmetric(env)?;
            let (m1, m2) = (env.capacities[0], env.capacities[1]);
            if m2 > m1 {
                return Err(Error::DomainViolation(
                    "serial-dictatorship encoding needs capacities ordered m1 ≥ m2".into(),
                ));
            }
            // Random-priority dynamics: the scarce object exhausts at
            // time 2·m2, the other at m1 + m2.
            let t2 = 2.0 * m2;
            let t_all = m1 + m2;
            for i in 0..p {
                let (v1, v2) = (lp.value(i, 0), lp.value(i, 1));
                let (x1, x2) = if v1 > v2 {
                    (t_all, 0.0)
                } else if v2 > v1 {
                    (t_all - t2, t2)
                } else {
                    (t_all - t2 / 2.0, t2 / 2.0)
                };
                allocation[i * 2] = x1;
                allocation[i * 2 + 1] = x2;
            }
        }
        _ => {
            return Err(Error::DomainViolation(
                "serial-dictatorship encoding covers 1 or 2 objects".into(),
            ))
        }
    }
    let mut mech = GridMechanism {
        allocation,
        payments: vec![0.0; p],
        rs: 0.0,
    };
    mech.rs = mech.objective(lp);
    Ok(mech)
}

fn encode_vcg(lp: &LpDescription) -> Result<GridMechanism> {
    let env = &lp.env;
    let p = env.num_points();
    let k = env.k;
    // Initial prices from the continuum clearing conditions, then a
    // ladder walk up the per-dimension value levels until no market is
    // over-demanded (posted prices stay incentive compatible exactly).
    let mut prices = vec![0.0; k];
    if k == 1 {
        prices[0] = env.marginals[0].quantile(1.0 - env.capacities[0])?;
    } else {
        let red = reduced(env.marginals[0], k as u32)?;
        let q = red.quantile(1.0 - env.total_supply())?;
        for price in prices.iter_mut() {
            *price = q;
        }
    }
    // Candidate ladders: sorted distinct levels per dimension.
    let ladders: Vec<Vec<f64>> = (0..k)
        .map(|d| {
            let mut v = env.levels[d].clone();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let assemble = |prices: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut allocation = vec![0.0; p * k];
        let mut payments = vec![0.0; p];
        let mut demand = vec![0.0; k];
        for i in 0..p {
            let surplus: Vec<f64> = (0..k).map(|d| lp.value(i, d) - prices[d]).collect();
            let best = surplus.iter().copied().fold(0.0f64, f64::max);
            if best > 0.0 {
                let winners: Vec<usize> = (0..k)
                    .filter(|&d| surplus[d] == best)
                    .collect();
                let share = 1.0 / winners.len() as f64;
                for &d in &winners {
                    allocation[i * k + d] = share;
                    payments[i] += share * prices[d];
                    demand[d] += env.weights[i] * share;
                }
            }
        }
        (allocation, payments, demand)
    };
    let (mechanism, payments) = loop {
        let (allocation, payments, demand) = assemble(&prices);
        let over = (0..k)
            .filter(|&d| demand[d] > env.capacities[d] + 1e-12)
            .max_by(|&a, &b| {
                (demand[a] - env.capacities[a]).total_cmp(&(demand[b] - env.capacities[b]))
            });
        match over {
            None => break (allocation, payments),
            Some(d) => {
                // Next ladder step strictly above the current price.
                let next = ladders[d].iter().copied().find(|&v| v > prices[d]);
                match next {
                    Some(v) => prices[d] = v,
                    None => {
                        return Err(Error::Infeasible(
                            "price ladder exhausted without clearing".into(),
                        ))
                    }
                }
            }
        }
    };
    let mut mech = GridMechanism {
        allocation: mechanism,
        payments,
        rs: 0.0,
    };
    mech.rs = mech.objective(lp);
    Ok(mech)
}

fn encode_rf(lp: &LpDescription) -> Result<GridMechanism> {
    let env = &lp.env;
    if env.k != 2 {
        return Err(Error::DomainViolation(
            "random favorites is defined for exactly 2 objects".into(),
        ));
    }
    require_symmetric(env)?;
    if !matches!(env.marginals[0], Marginal::Exponential { .. }) {
        return Err(Error::DomainViolation(
            "random favorites is derived for exponential marginals".into(),
        ));
    }
    let p = env.num_points();
    let (m1, m2) = (env.capacities[0], env.capacities[1]);
    // Two free options: object 1 w.p. a, or object 2 w.p. b; an agent
    // claims 1 iff a·v1 ≥ b·v2. Selecting the claim split: order points
    // by v2/v1 and enumerate prefixes; for claim-1 mass c the clearing
    // probabilities are a = m1/c, b = m2/(1-c), and the prefix is
    // self-consistent when every prefix point satisfies a·v1 ≥ b·v2 and
    // every suffix point the reverse.
    let mut order: Vec<usize> = (0..p).collect();
    let ratio = |i: usize| lp.value(i, 1) / lp.value(i, 0);
    order.sort_by(|&a, &b| ratio(a).total_cmp(&ratio(b)).then(a.cmp(&b)));
    let mut chosen = None;
    let mut c1 = 0.0;
    for cut in 1..p {
        c1 += env.weights[order[cut - 1]];
        let c2 = 1.0 - c1;
        if c1 <= 0.0 || c2 <= 0.0 {
            continue;
        }
        let a = m1 / c1;
        let b = m2 / c2;
        if a > 1.0 || b > 1.0 {
            continue;
        }
        // Self-consistency at the boundary points suffices: the ratio
        // ordering handles the rest.
        let last_in = order[cut - 1];
        let first_out = order[cut];
        let in_ok = a * lp.value(last_in, 0) >= b * lp.value(last_in, 1) - 1e-12;
        let out_ok = b * lp.value(first_out, 1) >= a * lp.value(first_out, 0) - 1e-12;
        if in_ok && out_ok {
            chosen = Some((cut, a, b));
            break;
        }
    }
    let (cut, a, b) = chosen.ok_or_else(|| {
        Error::Infeasible("no self-consistent random-favorites split on this grid".into())
    })?;
    let mut allocation = vec![0.0; p * 2];
    for (pos, &i) in order.iter().enumerate() {
        if pos < cut {
            allocation[i * 2] = a;
        } else {
            allocation[i * 2 + 1] = b;
        }
    }
    let mut mech = GridMechanism {
        allocation,
        payments: vec![0.0; p],
        rs: 0.0,
    };
    mech.rs = mech.objective(lp);
    Ok(mech)
}

/// Grid encoding of a named mechanism; feasible by construction and a
/// lower bound for `solve_lp`.
pub fn feasible_point_from(kind: NamedMechanism, lp: &LpDescription) -> Result<GridMechanism> {
    match kind {
        NamedMechanism::Sd => encode_sd(lp),
        NamedMechanism::Vcg => encode_vcg(lp),
        NamedMechanism::Rf => encode_rf(lp),
    }
}

/// Heatmap CSV (`v1,v2,x1,x2,p`) over the full 2-dimensional grid.
pub fn mechanism_heatmap(gm: &GridMechanism, lp: &LpDescription) -> Result<String> {
    if lp.env.k != 2 {
        return Err(Error::DomainViolation(
            "heatmap export needs a 2-dimensional grid".into(),
        ));
    }
    let mut out = String::from("v1,v2,x1,x2,p\n");
    for i in 0..lp.num_points() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            lp.value(i, 0),
            lp.value(i, 1),
            gm.allocation[i * 2],
            gm.allocation[i * 2 + 1],
            gm.payments[i]
        );
    }
    Ok(out)
}
