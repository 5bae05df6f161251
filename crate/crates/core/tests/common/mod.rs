//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's simplex or partition enumerator.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use succinct_contracts::rational::{self, Rational};
use succinct_contracts::Instance;

/// Minimum expected payment for `target` against `others` by brute-force
/// vertex enumeration of `{t >= 0, U_A(target|t) >= U_A(j|t)}`.
///
/// The feasible region lies in the nonnegative orthant, so it is pointed
/// and the bounded-below objective attains its minimum at a vertex.
pub fn vertex_min_pay(inst: &Instance, target: usize, others: &[usize], monotone: bool) -> Option<Rational> {
    let m = inst.num_outcomes();
    let p = inst.row(target);
    // Rows a.x >= b.
    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for &j in others {
        let a: Vec<Rational> = (0..m).map(|o| &p[o] - &inst.row(j)[o]).collect();
        rows.push((a, inst.cost(target) - inst.cost(j)));
    }
    for o in 0..m {
        let mut a = vec![Rational::zero(); m];
        a[o] = Rational::one();
        rows.push((a, Rational::zero()));
    }
    if monotone {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| inst.rewards()[x].cmp(&inst.rewards()[y]));
        for w in order.windows(2) {
            let mut a = vec![Rational::zero(); m];
            a[w[1]] = Rational::one();
            a[w[0]] = -Rational::one();
            rows.push((a, Rational::zero()));
        }
    }
    let feasible = |x: &[Rational]| rows.iter().all(|(a, b)| rational::dot(a, x) >= *b);

    let mut best: Option<Rational> = None;
    for choice in combinations(rows.len(), m) {
        let system: Vec<(Vec<Rational>, Rational)> = choice.iter().map(|&r| rows[r].clone()).collect();
        let Some(x) = solve_square(system) else { continue };
        if feasible(&x) {
            let v = rational::dot(p, &x);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    best
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, acc: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            acc.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, r, cur, acc);
            cur.pop();
        }
    }
    let mut acc = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut acc);
    acc
}

/// Unique solution of a square system by Gauss-Jordan elimination.
fn solve_square(mut rows: Vec<(Vec<Rational>, Rational)>) -> Option<Vec<Rational>> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !rows[r].0[col].is_zero())?;
        rows.swap(col, pivot);
        let (pa, pb) = rows[col].clone();
        for r in 0..n {
            if r == col || rows[r].0[col].is_zero() {
                continue;
            }
            let f = &rows[r].0[col] / &pa[col];
            for c in 0..n {
                let d = &f * &pa[c];
                rows[r].0[c] -= d;
            }
            rows[r].1 -= &f * &pb;
        }
    }
    Some(rows.into_iter().enumerate().map(|(r, (a, b))| b / &a[r]).collect())
}

/// Every map from `items` to `k` labeled blocks, as a list of blocks.
/// Labels are counted in big-endian order, so block contents appear in a
/// different sequence from restricted-growth enumeration.
pub fn labeled_assignments(items: &[usize], k: usize) -> Vec<Vec<Vec<usize>>> {
    let g = items.len();
    let total = k.pow(g as u32);
    (0..total)
        .map(|mut code| {
            let mut blocks = vec![Vec::new(); k];
            for pos in (0..g).rev() {
                blocks[code % k].push(items[pos]);
                code /= k;
            }
            for b in &mut blocks {
                b.sort_unstable();
            }
            blocks
        })
        .collect()
}

/// Minimum expected payment of a k-ambiguous IC contract for `i`: the
/// best assignment of competitors to blocks minimizes the largest block
/// minimum payment. `None` when no assignment makes every block feasible.
pub fn brute_force_action_payment(inst: &Instance, i: usize, k: usize, monotone: bool) -> Option<Rational> {
    let others: Vec<usize> = (0..inst.num_actions()).filter(|&a| a != i).collect();
    let mut memo: BTreeMap<Vec<usize>, Option<Rational>> = BTreeMap::new();
    let mut best: Option<Rational> = None;
    for blocks in labeled_assignments(&others, k) {
        let mut worst = Some(Rational::zero());
        for b in &blocks {
            let value = memo
                .entry(b.clone())
                .or_insert_with(|| vertex_min_pay(inst, i, b, monotone))
                .clone();
            worst = match (worst, value) {
                (Some(w), Some(v)) => Some(w.max(v)),
                _ => None,
            };
        }
        if let Some(w) = worst {
            if best.as_ref().is_none_or(|b| w < *b) {
                best = Some(w);
            }
        }
    }
    best
}

/// Optimal makespan by recursive assignment with symmetric-machine pruning.
pub fn oracle_makespan(values: &[Rational], k: usize) -> Rational {
    fn go(values: &[Rational], pos: usize, loads: &mut Vec<Rational>, best: &mut Option<Rational>) {
        let cur = loads.iter().max().cloned().unwrap_or_else(Rational::zero);
        if best.as_ref().is_some_and(|b| cur >= *b) {
            return;
        }
        if pos == values.len() {
            *best = Some(cur);
            return;
        }
        let mut seen: Vec<Rational> = Vec::new();
        for m in 0..loads.len() {
            if seen.contains(&loads[m]) {
                continue;
            }
            seen.push(loads[m].clone());
            loads[m] += &values[pos];
            go(values, pos + 1, loads, best);
            loads[m] -= &values[pos];
        }
    }
    let mut best = None;
    go(values, 0, &mut vec![Rational::zero(); k], &mut best);
    best.expect("at least one schedule")
}

/// Every set partition of `items` into nonempty blocks.
pub fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let Some((&first, rest)) = items.split_first() else {
        return vec![Vec::new()];
    };
    let mut acc = Vec::new();
    for p in set_partitions(rest) {
        for q in 0..p.len() {
            let mut next = p.clone();
            next[q].insert(0, first);
            acc.push(next);
        }
        let mut next = p;
        next.push(vec![first]);
        acc.push(next);
    }
    acc
}

/// Optimal value of `min c.x` over `{x >= 0} ∩ rows` by vertex
/// enumeration, assuming a nonnegative objective so the minimum exists
/// whenever the region is nonempty.
pub fn vertex_lp(lp: &succinct_contracts::lp::LinearProgram) -> Option<Rational> {
    use succinct_contracts::lp::Sense;
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<Rational>, Rational)> = lp.rows.iter().map(|r| (r.coeffs.clone(), r.rhs.clone())).collect();
    for j in 0..n {
        let mut a = vec![Rational::zero(); n];
        a[j] = Rational::one();
        planes.push((a, Rational::zero()));
    }
    let mut best: Option<Rational> = None;
    for choice in combinations(planes.len(), n) {
        let Some(x) = solve_square(choice.iter().map(|&q| planes[q].clone()).collect()) else { continue };
        let ok = x.iter().all(|v| *v >= Rational::zero())
            && lp.rows.iter().all(|r| {
                let lhs = rational::dot(&r.coeffs, &x);
                match r.sense {
                    Sense::Ge => lhs >= r.rhs,
                    Sense::Le => lhs <= r.rhs,
                    Sense::Eq => lhs == r.rhs,
                }
            });
        if ok {
            let v = rational::dot(&lp.objective, &x);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    best
}
