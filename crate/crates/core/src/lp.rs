//! Exact two-phase simplex and the min-pay LP.
//!
//! Every variable is bounded below by zero. Pivoting follows Bland's rule,
//! so the solver terminates on degenerate inputs. Duals are read from the
//! reduced costs of the starting basis: an optimal dual solution when the
//! LP is solved, a Farkas ray when phase one ends with positive
//! infeasibility.

use std::fmt::{self, Write as _};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{ActionSet, PaymentFunction};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    fn flipped(self) -> Self {
        match self {
            Sense::Ge => Sense::Le,
            Sense::Le => Sense::Ge,
            Sense::Eq => Sense::Eq,
        }
    }

    fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Sense::Ge => lhs >= rhs,
            Sense::Le => lhs <= rhs,
            Sense::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<Rational>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// `min objective·x` subject to `rows`, `x >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<Rational>, sense: Sense, rhs: Rational) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    fn check(&self) -> Result<()> {
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != self.num_vars() {
                return Err(Error::MalformedLp(format!(
                    "row {} has {} coefficients for {} variables",
                    k + 1,
                    row.coeffs.len(),
                    self.num_vars()
                )));
            }
        }
        Ok(())
    }

    /// True when `x >= 0` satisfies every row exactly.
    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && x.iter().all(|v| !v.is_negative())
            && self
                .rows
                .iter()
                .all(|r| r.sense.holds(&rational::dot(&r.coeffs, x), &r.rhs))
    }

    /// Checks `y` as a proof of infeasibility: `y` has the sign each row
    /// sense demands, `yᵀA <= 0` and `yᵀb > 0`.
    pub fn is_farkas_certificate(&self, y: &[Rational]) -> bool {
        if y.len() != self.rows.len() {
            return false;
        }
        let signs_ok = self.rows.iter().zip(y).all(|(r, v)| match r.sense {
            Sense::Ge => !v.is_negative(),
            Sense::Le => !v.is_positive(),
            Sense::Eq => true,
        });
        let combo_ok = (0..self.num_vars()).all(|j| {
            let s: Rational = self.rows.iter().zip(y).map(|(r, v)| &r.coeffs[j] * v).sum();
            !s.is_positive()
        });
        let rhs: Rational = self.rows.iter().zip(y).map(|(r, v)| &r.rhs * v).sum();
        signs_ok && combo_ok && rhs.is_positive()
    }

    /// Plain-text form: `min ...` then one `row_k: lhs op rhs` per row.
    pub fn dump(&self) -> String {
        let mut out = format!("min {}\n", linear_text(&self.objective));
        for (k, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "row_{}: {} {} {}",
                k + 1,
                linear_text(&r.coeffs),
                r.sense,
                rational::format(&r.rhs)
            );
        }
        out
    }
}

fn linear_text(coeffs: &[Rational]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| format!("{}*t{}", rational::format(c), j + 1))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub values: Option<Vec<Rational>>,
    pub objective_value: Option<Rational>,
    /// One entry per row. An optimal dual solution when `Optimal`, a Farkas
    /// ray (see [`LinearProgram::is_farkas_certificate`]) when `Infeasible`.
    pub dual_certificate: Option<Vec<Rational>>,
}

impl LpOutcome {
    fn bare(status: LpStatus) -> Self {
        Self {
            status,
            values: None,
            objective_value: None,
            dual_certificate: None,
        }
    }
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    d: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        self.b[r] /= &p;
        let prow = self.a[r].clone();
        let pb = self.b[r].clone();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for (v, pv) in self.a[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.b[i] -= &f * &pb;
        }
        let f = self.d[c].clone();
        if !f.is_zero() {
            for (v, pv) in self.d.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn price(&mut self, cost: &[Rational]) {
        self.d = cost.to_vec();
        for (r, &bc) in self.basis.iter().enumerate() {
            let cb = &cost[bc];
            if cb.is_zero() {
                continue;
            }
            for (dv, av) in self.d.iter_mut().zip(&self.a[r]) {
                if !av.is_zero() {
                    *dv -= cb * av;
                }
            }
        }
    }

    /// Bland's rule. Returns false when the objective is unbounded.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let Some(enter) = (0..self.d.len()).find(|&j| allowed(j) && self.d[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.a.len() {
                let coef = &self.a[r][enter];
                if !coef.is_positive() {
                    continue;
                }
                let ratio = &self.b[r] / coef;
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Solves the LP exactly.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check()?;
    let n = lp.num_vars();
    let m = lp.rows.len();

    let mut flipped = vec![false; m];
    let mut senses = Vec::with_capacity(m);
    for (k, row) in lp.rows.iter().enumerate() {
        // A zero right-hand side on a >= row flips too, so its slack can
        // start in the basis instead of an artificial.
        if row.rhs.is_negative() || (row.rhs.is_zero() && row.sense == Sense::Ge) {
            flipped[k] = true;
            senses.push(row.sense.flipped());
        } else {
            senses.push(row.sense);
        }
    }

    // Column layout: decision variables, then per row a slack or surplus
    // column, then the artificial columns.
    let mut ncols = n;
    let mut aux_col = vec![None; m];
    for (k, s) in senses.iter().enumerate() {
        if *s != Sense::Eq {
            aux_col[k] = Some(ncols);
            ncols += 1;
        }
    }
    let mut art_col = vec![None; m];
    for (k, s) in senses.iter().enumerate() {
        if *s != Sense::Le {
            art_col[k] = Some(ncols);
            ncols += 1;
        }
    }
    let mut art_mask = vec![false; ncols];
    for c in art_col.iter().flatten() {
        art_mask[*c] = true;
    }
    let is_art = |j: usize| art_mask[j];

    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut start = Vec::with_capacity(m);
    for (k, row) in lp.rows.iter().enumerate() {
        let sign = if flipped[k] { -rational::one() } else { rational::one() };
        let mut line = vec![rational::zero(); ncols];
        for (j, c) in row.coeffs.iter().enumerate() {
            line[j] = c * &sign;
        }
        if let Some(c) = aux_col[k] {
            line[c] = if senses[k] == Sense::Le { rational::one() } else { -rational::one() };
        }
        if let Some(c) = art_col[k] {
            line[c] = rational::one();
        }
        a.push(line);
        b.push(&row.rhs * &sign);
        start.push(art_col[k].or(aux_col[k]).expect("every row has a starting column"));
    }

    let mut tab = Tableau {
        a,
        b,
        d: Vec::new(),
        basis: start.clone(),
    };

    let phase1_cost: Vec<Rational> = (0..ncols)
        .map(|j| if is_art(j) { rational::one() } else { rational::zero() })
        .collect();
    tab.price(&phase1_cost);
    tab.optimize(|_| true);

    let infeasibility: Rational = tab
        .basis
        .iter()
        .zip(&tab.b)
        .filter(|(c, _)| is_art(**c))
        .map(|(_, v)| v.clone())
        .sum();
    if infeasibility.is_positive() {
        let y = read_duals(&tab, &phase1_cost, &start, &flipped);
        return Ok(LpOutcome {
            dual_certificate: Some(y),
            ..LpOutcome::bare(LpStatus::Infeasible)
        });
    }

    // Artificials left in the basis sit at zero. Swap them for a real
    // column where the row allows it; rows without one are redundant and
    // keep their artificial, which can never leave nor re-enter.
    for r in 0..m {
        if is_art(tab.basis[r]) {
            if let Some(c) = (0..ncols).find(|&j| !is_art(j) && !tab.a[r][j].is_zero()) {
                tab.pivot(r, c);
            }
        }
    }

    let mut phase2_cost = vec![rational::zero(); ncols];
    phase2_cost[..n].clone_from_slice(&lp.objective);
    tab.price(&phase2_cost);
    if !tab.optimize(|j| !is_art(j)) {
        return Ok(LpOutcome::bare(LpStatus::Unbounded));
    }

    let mut x = vec![rational::zero(); n];
    for (r, &c) in tab.basis.iter().enumerate() {
        if c < n {
            x[c] = tab.b[r].clone();
        }
    }
    let value = rational::dot(&lp.objective, &x);
    let y = read_duals(&tab, &phase2_cost, &start, &flipped);
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        values: Some(x),
        objective_value: Some(value),
        dual_certificate: Some(y),
    })
}

/// `y_k = c_s - d_s` for the starting column `s` of row `k`, with the sign
/// of flipped rows restored.
fn read_duals(tab: &Tableau, cost: &[Rational], start: &[usize], flipped: &[bool]) -> Vec<Rational> {
    start
        .iter()
        .zip(flipped)
        .map(|(&s, &f)| {
            let y = &cost[s] - &tab.d[s];
            if f {
                -y
            } else {
                y
            }
        })
        .collect()
}

/// Actions of `model` other than `i`, in ascending order. These label the
/// IC rows of the min-pay LP.
pub fn competitors<A: ActionSet + ?Sized>(model: &A, i: usize) -> Vec<usize> {
    model.action_ids().into_iter().filter(|&a| a != i).collect()
}

/// `min p_i·t` s.t. `(p_i - p_i')·t >= c_i - c_i'` for every other action.
pub fn build_min_pay_lp<A: ActionSet + ?Sized>(model: &A, i: usize) -> Result<LinearProgram> {
    model.check_action(i)?;
    let inst = model.instance();
    let pi = inst.row(i);
    let mut lp = LinearProgram::new(pi.to_vec());
    for other in competitors(model, i) {
        let coeffs = pi.iter().zip(inst.row(other)).map(|(a, b)| a - b).collect();
        lp.push(coeffs, Sense::Ge, inst.cost(i) - inst.cost(other));
    }
    Ok(lp)
}

/// [`build_min_pay_lp`] plus `t_j >= t_j'` for consecutive outcomes in
/// stable reward order.
pub fn build_monotone_min_pay_lp<A: ActionSet + ?Sized>(model: &A, i: usize) -> Result<LinearProgram> {
    let mut lp = build_min_pay_lp(model, i)?;
    let inst = model.instance();
    let m = inst.num_outcomes();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| inst.rewards()[x].cmp(&inst.rewards()[y]));
    for w in order.windows(2) {
        let mut coeffs = vec![rational::zero(); m];
        coeffs[w[1]] = rational::one();
        coeffs[w[0]] = -rational::one();
        lp.push(coeffs, Sense::Ge, rational::zero());
    }
    Ok(lp)
}

fn build(model: &(impl ActionSet + ?Sized), i: usize, monotone: bool) -> Result<LinearProgram> {
    if monotone {
        build_monotone_min_pay_lp(model, i)
    } else {
        build_min_pay_lp(model, i)
    }
}

/// A min-pay contract for `i` and its expected payment, or `None` when `i`
/// cannot be implemented by a single payment function.
pub fn min_pay_contract<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    monotone: bool,
) -> Result<Option<(PaymentFunction, Rational)>> {
    let out = solve_lp(&build(model, i, monotone)?)?;
    match out.status {
        LpStatus::Optimal => {
            let t = PaymentFunction::new(out.values.expect("optimal has values"))?;
            Ok(Some((t, out.objective_value.expect("optimal has value"))))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::MalformedLp("min-pay LP reported unbounded".into())),
    }
}

pub fn is_implementable_classic<A: ActionSet + ?Sized>(model: &A, i: usize, monotone: bool) -> Result<bool> {
    Ok(min_pay_contract(model, i, monotone)?.is_some())
}

/// Proof that no single payment function implements `target`.
///
/// `lambda[q]` weights `competitors[q]` and sums to one. Without the
/// monotonicity rows, `sum lambda p_i' = p_target` and
/// `sum lambda c_i' < c_target`. `monotone` holds the (scaled) multipliers of
/// the monotonicity rows, empty for the plain LP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub target: usize,
    pub competitors: Vec<usize>,
    pub lambda: Vec<Rational>,
    pub monotone: Vec<Rational>,
}

impl InfeasibilityCertificate {
    /// Mixture of competitor distributions and the mixed cost.
    pub fn mixture<A: ActionSet + ?Sized>(&self, model: &A) -> (Vec<Rational>, Rational) {
        let inst = model.instance();
        let mut dist = vec![rational::zero(); inst.num_outcomes()];
        let mut cost = rational::zero();
        for (&a, l) in self.competitors.iter().zip(&self.lambda) {
            for (d, p) in dist.iter_mut().zip(inst.row(a)) {
                *d += l * p;
            }
            cost += l * inst.cost(a);
        }
        (dist, cost)
    }
}

/// Infeasibility certificate for the (monotone) min-pay LP of `i`, or
/// `None` when the LP is feasible.
pub fn min_pay_certificate<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    monotone: bool,
) -> Result<Option<InfeasibilityCertificate>> {
    let lp = build(model, i, monotone)?;
    let out = solve_lp(&lp)?;
    if out.status != LpStatus::Infeasible {
        return Ok(None);
    }
    let y = out.dual_certificate.expect("infeasible carries a ray");
    let comps = competitors(model, i);
    let (ic, mono) = y.split_at(comps.len());
    let total: Rational = ic.iter().sum();
    Ok(Some(InfeasibilityCertificate {
        target: i,
        competitors: comps,
        lambda: ic.iter().map(|v| v / &total).collect(),
        monotone: mono.iter().map(|v| v / &total).collect(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_separation;
    use crate::reductions::{makespan_to_instance, MakespanInput};
    use crate::model::Instance;
    use crate::rational::{frac, int};

    fn lp(obj: &[i64], rows: &[(&[i64], Sense, i64)]) -> LinearProgram {
        let mut lp = LinearProgram::new(obj.iter().map(|&v| int(v)).collect());
        for (c, s, r) in rows {
            lp.push(c.iter().map(|&v| int(v)).collect(), *s, int(*r));
        }
        lp
    }

    #[test]
    fn single_lower_bound() {
        let out = solve_lp(&lp(&[1], &[(&[1], Sense::Ge, 3)])).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.values.unwrap(), vec![int(3)]);
        assert_eq!(out.dual_certificate.unwrap(), vec![int(1)]);
    }

    #[test]
    fn contradictory_rows_are_infeasible_with_ray() {
        let p = lp(&[0], &[(&[1], Sense::Ge, 1), (&[-1], Sense::Ge, 0)]);
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
        assert!(out.values.is_none());
        assert!(p.is_farkas_certificate(&out.dual_certificate.unwrap()));
    }

    #[test]
    fn unbounded_detected() {
        let out = solve_lp(&lp(&[-1, 0], &[(&[1, -1], Sense::Le, 1)])).unwrap();
        assert_eq!(out.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_redundant_rows() {
        let p = lp(
            &[1, 2],
            &[(&[1, 1], Sense::Eq, 4), (&[2, 2], Sense::Eq, 8), (&[1, 0], Sense::Le, 3)],
        );
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.objective_value.unwrap(), int(5));
        assert_eq!(out.values.unwrap(), vec![int(3), int(1)]);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        let mut p = LinearProgram::new(vec![frac(-3, 4), int(150), frac(-1, 50), int(6)]);
        p.push(vec![frac(1, 4), int(-60), frac(-1, 25), int(9)], Sense::Le, int(0));
        p.push(vec![frac(1, 2), int(-90), frac(-1, 50), int(3)], Sense::Le, int(0));
        p.push(vec![int(0), int(0), int(1), int(0)], Sense::Le, int(1));
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.objective_value.unwrap(), frac(-1, 20));
    }

    #[test]
    fn strong_duality_on_separation_lp() {
        let inst = gen_separation();
        let sub = inst.restrict([3, 0, 1]).unwrap();
        let p = build_min_pay_lp(&sub, 3).unwrap();
        let out = solve_lp(&p).unwrap();
        let y = out.dual_certificate.unwrap();
        let dual_value: Rational = p.rows.iter().zip(&y).map(|(r, v)| &r.rhs * v).sum();
        assert_eq!(dual_value, frac(8, 9));
        assert!(y.iter().all(|v| !v.is_negative()));
    }

    #[test]
    fn separation_min_pay_values() {
        let inst = gen_separation();
        let sub = inst.restrict([3, 0, 1]).unwrap();
        let (t, v) = min_pay_contract(&sub, 3, false).unwrap().unwrap();
        assert_eq!(v, frac(8, 9));
        assert!(sub.protects(&t, 3, &[0, 1]).unwrap());

        let sub = inst.restrict([3, 2]).unwrap();
        let (_, v) = min_pay_contract(&sub, 3, false).unwrap().unwrap();
        assert_eq!(v, frac(2, 3));
        let (_, mv) = min_pay_contract(&sub, 3, true).unwrap().unwrap();
        assert!(mv >= frac(2, 3));

        let alone = inst.restrict([3]).unwrap();
        let (t, v) = min_pay_contract(&alone, 3, false).unwrap().unwrap();
        assert_eq!(v, int(0));
        assert_eq!(t, PaymentFunction::zeros(5));
    }

    #[test]
    fn lp_dump_lists_rows() {
        let inst = gen_separation();
        let sub = inst.restrict([3, 2]).unwrap();
        let text = build_min_pay_lp(&sub, 3).unwrap().dump();
        assert_eq!(
            text,
            "min 1/6*t2 + 1/6*t3 + 1/6*t4 + 1/2*t5\n\
             row_1: -1/4*t1 + -1/12*t2 + -1/12*t3 + 1/6*t4 + 1/4*t5 >= 2/3\n"
        );
    }

    #[test]
    fn single_outcome_monotone_lp_matches_plain() {
        let inst = Instance::new(vec![int(0), int(1)], vec![int(0)], vec![vec![int(1)], vec![int(1)]]).unwrap();
        assert_eq!(
            build_min_pay_lp(&inst, 1).unwrap(),
            build_monotone_min_pay_lp(&inst, 1).unwrap()
        );
    }

    #[test]
    fn makespan_target_needs_sum_of_values() {
        let red = makespan_to_instance(&MakespanInput::from_integers(&[1, 2, 3], 2).unwrap()).unwrap();
        let (_, v) = min_pay_contract(red.instance(), red.target(), false).unwrap().unwrap();
        assert_eq!(v, int(2));
    }

    #[test]
    fn cheaper_duplicate_blocks_classic_implementation() {
        let inst = Instance::new(
            vec![int(0), int(1), int(2)],
            vec![int(0), int(4)],
            vec![vec![int(1), int(0)], vec![frac(1, 2), frac(1, 2)], vec![frac(1, 2), frac(1, 2)]],
        )
        .unwrap();
        assert!(!is_implementable_classic(&inst, 2, false).unwrap());
        assert!(is_implementable_classic(&inst, 1, false).unwrap());
        assert!(is_implementable_classic(&inst, 0, false).unwrap());
        let cert = min_pay_certificate(&inst, 2, false).unwrap().unwrap();
        let (dist, cost) = cert.mixture(&inst);
        assert_eq!(dist, inst.row(2).to_vec());
        assert!(cost < *inst.cost(2));
        assert!(cert.lambda.iter().all(|l| !l.is_negative()));
    }

    #[test]
    fn malformed_rows_rejected() {
        let mut p = LinearProgram::new(vec![int(1), int(1)]);
        p.push(vec![int(1)], Sense::Ge, int(0));
        assert!(matches!(solve_lp(&p), Err(Error::MalformedLp(_))));
    }
}
