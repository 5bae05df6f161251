//! Makespan and 3D-matching reductions with their inverse maps.
//!
//! Reduction instances are emitted with actions sorted by cost (stable),
//! so each carries a role table mapping action indices back to the
//! construction: the null action, one action per item or element, and the
//! target.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ambiguous::{self, balance, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::instances::Metadata;
use crate::model::{ActionSet, AmbiguousContract, Instance, Partition, PaymentFunction};
use crate::rational::{self, frac, int, Rational};

/// Default bound on `k^n` for [`brute_force_makespan`].
pub const BRUTE_FORCE_CEILING: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Null,
    /// Makespan item, 0-based.
    Item(usize),
    /// 3D-matching element, 0-based within its axis.
    Element(Axis, usize),
    Target,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Null => f.write_str("null"),
            Role::Item(q) => write!(f, "item {}", q + 1),
            Role::Element(axis, q) => {
                let c = match axis {
                    Axis::X => 'x',
                    Axis::Y => 'y',
                    Axis::Z => 'z',
                };
                write!(f, "{c}{}", q + 1)
            }
            Role::Target => f.write_str("target"),
        }
    }
}

/// An instance built by a reduction together with the role of each action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedInstance {
    pub instance: Instance,
    pub roles: Vec<Role>,
}

impl ReducedInstance {
    /// Sorts the actions by cost, keeping construction order among ties.
    fn sorted(costs: Vec<Rational>, rewards: Vec<Rational>, probs: Vec<Vec<Rational>>, roles: Vec<Role>) -> Result<Self> {
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by(|&a, &b| costs[a].cmp(&costs[b]));
        let instance = Instance::new(
            order.iter().map(|&i| costs[i].clone()).collect(),
            rewards,
            order.iter().map(|&i| probs[i].clone()).collect(),
        )?;
        Ok(Self {
            instance,
            roles: order.iter().map(|&i| roles[i]).collect(),
        })
    }

    pub fn action_of(&self, role: Role) -> Option<usize> {
        self.roles.iter().position(|r| *r == role)
    }

    pub fn target(&self) -> usize {
        self.action_of(Role::Target).expect("reductions always have a target")
    }

    pub fn metadata(&self, provenance: &str) -> Metadata {
        Metadata {
            provenance: Some(provenance.to_string()),
            roles: Some(self.roles.iter().map(Role::to_string).collect()),
        }
    }
}

/// Positive values to be split over `machines` machines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MakespanInput {
    #[serde(with = "rational::serde_str::vec")]
    pub values: Vec<Rational>,
    pub machines: usize,
}

impl MakespanInput {
    pub fn new(values: Vec<Rational>, machines: usize) -> Result<Self> {
        let inp = Self { values, machines };
        inp.check()?;
        Ok(inp)
    }

    pub fn from_integers(values: &[i64], machines: usize) -> Result<Self> {
        Self::new(values.iter().map(|&v| int(v)).collect(), machines)
    }

    fn check(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParams("makespan input needs at least one value".into()));
        }
        if let Some(v) = self.values.iter().find(|v| *v <= &rational::zero()) {
            return Err(Error::InvalidParams(format!(
                "makespan values must be positive, got {}",
                rational::format(v)
            )));
        }
        if self.machines == 0 {
            return Err(Error::InvalidParams("need at least one machine".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let inp: Self = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        inp.check()?;
        Ok(inp)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.values)
    }

    /// Largest block sum of a partition of the item indices.
    pub fn makespan(&self, partition: &Partition) -> Rational {
        partition
            .blocks()
            .iter()
            .map(|b| rational::sum(b.iter().map(|&q| &self.values[q])))
            .max()
            .unwrap_or_else(rational::zero)
    }
}

/// Exact optimal makespan by trying every assignment of items to machines.
pub fn brute_force_makespan(inp: &MakespanInput, ceiling: Option<u64>) -> Result<Rational> {
    let n = inp.n();
    let k = inp.machines;
    let size = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if let Some(c) = ceiling {
        if size > c as u128 {
            return Err(Error::PartitionCeiling {
                count: size.to_string(),
                ceiling: c,
            });
        }
    }
    let mut assign = vec![0usize; n];
    let mut best: Option<Rational> = None;
    loop {
        let mut loads = vec![rational::zero(); k];
        for (q, &m) in assign.iter().enumerate() {
            loads[m] += &inp.values[q];
        }
        let span = loads.into_iter().max().expect("k >= 1");
        if best.as_ref().is_none_or(|b| span < *b) {
            best = Some(span);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(best.expect("at least one assignment"));
            }
            assign[pos] += 1;
            if assign[pos] < k {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// A makespan input and the contract instance built from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MakespanReduction {
    pub input: MakespanInput,
    pub reduced: ReducedInstance,
    pub monotone: bool,
}

impl MakespanReduction {
    pub fn instance(&self) -> &Instance {
        &self.reduced.instance
    }

    pub fn target(&self) -> usize {
        self.reduced.target()
    }

    /// Action index of item `q`.
    pub fn item_action(&self, q: usize) -> usize {
        self.reduced.action_of(Role::Item(q)).expect("item exists")
    }

    /// Closed-form test for whether `t` protects the target against item
    /// `q`. Outcome `q + 1` belongs to item `q`; outcome 0 is the null
    /// outcome.
    pub fn protects(&self, t: &PaymentFunction, q: usize) -> Result<bool> {
        let n = self.input.n();
        if q >= n {
            return Err(Error::InvalidParams(format!("no item {}", q + 1)));
        }
        self.instance().check_payment(t)?;
        let p = t.payments();
        let a = &self.input.values[q];
        if self.monotone {
            if !t.is_monotone() {
                return Err(Error::Precondition("payment function is not monotone".into()));
            }
            Ok(&p[q + 1] - &p[q] >= a / int((n - q) as i64))
        } else {
            Ok(p[q + 1] >= &p[0] + a)
        }
    }

    /// The block payment that protects exactly against the items of
    /// `block` at minimum cost to the target.
    fn block_payment(&self, block: &[usize]) -> Result<PaymentFunction> {
        let n = self.input.n();
        let mut t = vec![rational::zero(); n + 1];
        if self.monotone {
            let mut marg = vec![rational::zero(); n + 1];
            for &q in block {
                marg[q + 1] = &self.input.values[q] / int((n - q) as i64);
            }
            for j in 1..=n {
                t[j] = &t[j - 1] + &marg[j];
            }
        } else {
            for &q in block {
                t[q + 1] = self.input.values[q].clone();
            }
        }
        PaymentFunction::new(t)
    }
}

fn item_ground(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Null action with all mass on outcome 0, one action per item uniform
/// over the outcomes other than its own, and the target uniform over the
/// item outcomes.
pub fn makespan_to_instance(inp: &MakespanInput) -> Result<MakespanReduction> {
    inp.check()?;
    let n = inp.n();
    let nn = int(n as i64);
    let a_total = inp.total();
    let top = rational::max(&inp.values).expect("non-empty") / &nn;
    let share = frac(1, n as i64);

    let mut rewards = vec![a_total; n + 1];
    rewards[0] = rational::zero();
    let mut costs = vec![rational::zero()];
    let mut probs = Vec::new();
    let mut null = vec![rational::zero(); n + 1];
    null[0] = rational::one();
    probs.push(null);
    let mut roles = vec![Role::Null];
    for (q, a) in inp.values.iter().enumerate() {
        let mut row = vec![share.clone(); n + 1];
        row[q + 1] = rational::zero();
        probs.push(row);
        costs.push(&top - a / &nn);
        roles.push(Role::Item(q));
    }
    let mut target = vec![share; n + 1];
    target[0] = rational::zero();
    probs.push(target);
    costs.push(top);
    roles.push(Role::Target);

    Ok(MakespanReduction {
        input: inp.clone(),
        reduced: ReducedInstance::sorted(costs, rewards, probs, roles)?,
        monotone: false,
    })
}

/// Rewards `j (A + 1)`; item `i` moves `1/n` of the target's mass from
/// outcome `i` down to outcome `i - 1`.
pub fn monotone_makespan_to_instance(inp: &MakespanInput) -> Result<MakespanReduction> {
    inp.check()?;
    let n = inp.n();
    let nn = int(n as i64);
    let big_r = inp.total() + rational::one();
    let share = frac(1, n as i64);
    let top = inp
        .values
        .iter()
        .enumerate()
        .map(|(q, a)| a / int((n - q) as i64))
        .max()
        .expect("non-empty")
        / &nn;

    let rewards: Vec<Rational> = (0..=n).map(|j| int(j as i64) * &big_r).collect();
    let mut target = vec![share.clone(); n + 1];
    target[0] = rational::zero();

    let mut costs = vec![rational::zero()];
    let mut null = vec![rational::zero(); n + 1];
    null[0] = rational::one();
    let mut probs = vec![null];
    let mut roles = vec![Role::Null];
    for (q, a) in inp.values.iter().enumerate() {
        let mut row = target.clone();
        row[q + 1] -= &share;
        row[q] += &share;
        probs.push(row);
        costs.push(&top - a / (&nn * int((n - q) as i64)));
        roles.push(Role::Item(q));
    }
    probs.push(target);
    costs.push(top);
    roles.push(Role::Target);

    Ok(MakespanReduction {
        input: inp.clone(),
        reduced: ReducedInstance::sorted(costs, rewards, probs, roles)?,
        monotone: true,
    })
}

/// IC contract for the target whose expected payment is the partition's
/// makespan divided by `n`.
pub fn partition_to_contract(red: &MakespanReduction, partition: &Partition) -> Result<AmbiguousContract> {
    if partition.ground() != item_ground(red.input.n()) {
        return Err(Error::Precondition("partition must cover every item exactly once".into()));
    }
    let ts = partition
        .blocks()
        .iter()
        .map(|b| red.block_payment(b))
        .collect::<Result<Vec<_>>>()?;
    balance(red.instance(), red.target(), &ts)
}

/// Greedy extraction: each item goes to the first support member under
/// which the agent weakly prefers the target to it. The contract must be
/// an optimal IC contract implementing the target.
pub fn contract_to_makespan_partition(red: &MakespanReduction, opt: &AmbiguousContract) -> Result<Partition> {
    let inst = red.instance();
    let target = red.target();
    if opt.action() != target {
        return Err(Error::Precondition(format!(
            "contract implements action {}, not the target {}",
            opt.action() + 1,
            target + 1
        )));
    }
    let n = red.input.n();
    let mut assigned = vec![false; n];
    let mut blocks = Vec::with_capacity(opt.k());
    for t in opt.support() {
        let own = inst.agent_utility(target, t)?;
        let mut block = Vec::new();
        for q in 0..n {
            if !assigned[q] && inst.agent_utility(red.item_action(q), t)? <= own {
                assigned[q] = true;
                block.push(q);
            }
        }
        blocks.push(block);
    }
    if let Some(q) = assigned.iter().position(|a| !a) {
        return Err(Error::Precondition(format!("no support member protects against item {}", q + 1)));
    }
    Partition::new(blocks, &item_ground(n))
}

/// Monotone counterpart of [`contract_to_makespan_partition`].
pub fn monotone_contract_to_partition(red: &MakespanReduction, opt: &AmbiguousContract) -> Result<Partition> {
    if !red.monotone {
        return Err(Error::Precondition("reduction is not the monotone construction".into()));
    }
    contract_to_makespan_partition(red, opt)
}

/// Result of solving a makespan input through the contract instance.
#[derive(Clone, Debug)]
pub struct MakespanSolution {
    pub partition: Partition,
    pub makespan: Rational,
    /// `None` when the input was trivial and no contract was solved.
    pub report: Option<SolveReport>,
}

/// Solves the contract instance and maps the optimum back to a schedule.
/// Inputs with one item or one machine are answered directly.
pub fn solve_makespan(red: &MakespanReduction, opts: &SolveOptions) -> Result<MakespanSolution> {
    let n = red.input.n();
    let k = red.input.machines;
    if n == 1 || k == 1 {
        let mut blocks = vec![Vec::new(); k];
        blocks[0] = item_ground(n);
        let partition = Partition::new(blocks, &item_ground(n))?;
        return Ok(MakespanSolution {
            makespan: red.input.makespan(&partition),
            partition,
            report: None,
        });
    }
    let report = ambiguous::optimal_contract_with(red.instance(), k, red.monotone, opts)?;
    let contract = report
        .contract
        .as_ref()
        .ok_or_else(|| Error::Precondition("no implementable action".into()))?;
    let partition = contract_to_makespan_partition(red, contract)?;
    Ok(MakespanSolution {
        makespan: red.input.makespan(&partition),
        partition,
        report: Some(report),
    })
}

/// A 3D-matching input: `n` elements per axis and index triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching3dInput {
    pub n: usize,
    pub triples: Vec<[usize; 3]>,
}

impl Matching3dInput {
    pub fn new(n: usize, triples: Vec<[usize; 3]>) -> Result<Self> {
        let inp = Self { n, triples };
        inp.check()?;
        Ok(inp)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("3D matching needs n >= 1".into()));
        }
        for (q, t) in self.triples.iter().enumerate() {
            if t.iter().any(|&e| e >= self.n) {
                return Err(Error::InvalidParams(format!("triple {} has an index >= n = {}", q + 1, self.n)));
            }
            if self.triples[..q].contains(t) {
                return Err(Error::InvalidParams(format!("triple {} is repeated", q + 1)));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let inp: Self = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        inp.check()?;
        Ok(inp)
    }

    /// Indices of triples forming a perfect matching, by exhaustive search.
    pub fn perfect_matching(&self) -> Option<Vec<usize>> {
        fn go(inp: &Matching3dInput, x: usize, used: &mut [Vec<bool>; 2], pick: &mut Vec<usize>) -> bool {
            if x == inp.n {
                return true;
            }
            for (q, t) in inp.triples.iter().enumerate() {
                if t[0] != x || used[0][t[1]] || used[1][t[2]] {
                    continue;
                }
                used[0][t[1]] = true;
                used[1][t[2]] = true;
                pick.push(q);
                if go(inp, x + 1, used, pick) {
                    return true;
                }
                pick.pop();
                used[0][t[1]] = false;
                used[1][t[2]] = false;
            }
            false
        }
        let mut used = [vec![false; self.n], vec![false; self.n]];
        let mut pick = Vec::new();
        go(self, 0, &mut used, &mut pick).then_some(pick)
    }
}

/// Triples `(i, i, i)` plus, for `n >= 2`, the distractor `(0, 1, 0)`.
pub fn matchable_fixture(n: usize) -> Result<Matching3dInput> {
    let mut triples: Vec<[usize; 3]> = (0..n).map(|i| [i, i, i]).collect();
    if n >= 2 {
        triples.push([0, 1, 0]);
    }
    Matching3dInput::new(n, triples)
}

/// Every triple uses `x1`, so no perfect matching exists. For `n = 1` the
/// triple set is empty.
pub fn unmatchable_fixture(n: usize) -> Result<Matching3dInput> {
    let triples = if n == 1 { Vec::new() } else { (0..n).map(|j| [0, j, j]).collect() };
    Matching3dInput::new(n, triples)
}

/// Null action, `3n` zero-cost element actions that avoid the outcomes of
/// their triples, and a target of cost 2/3. Outcome `q + 1` belongs to
/// triple `q`; the last outcome carries reward `m + 2`.
pub fn matching3d_to_instance(inp: &Matching3dInput) -> Result<ReducedInstance> {
    inp.check()?;
    let m = inp.triples.len();
    let width = m + 2;
    let unit = frac(1, width as i64);
    let mut rewards = vec![rational::zero(); width];
    rewards[m + 1] = int(width as i64);

    let mut costs = vec![rational::zero()];
    let mut null = vec![rational::zero(); width];
    null[0] = rational::one();
    let mut probs = vec![null];
    let mut roles = vec![Role::Null];
    for (axis_pos, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
        for e in 0..inp.n {
            let mut row = vec![rational::zero(); width];
            for (q, t) in inp.triples.iter().enumerate() {
                if t[axis_pos] != e {
                    row[q + 1] = unit.clone();
                }
            }
            row[m + 1] = unit.clone();
            let rest: Rational = row[1..].iter().sum();
            row[0] = rational::one() - rest;
            probs.push(row);
            costs.push(rational::zero());
            roles.push(Role::Element(axis, e));
        }
    }
    let mut target = vec![unit.clone(); width];
    target[0] = rational::zero();
    target[m + 1] = &unit * int(2);
    probs.push(target);
    costs.push(frac(2, 3));
    roles.push(Role::Target);
    ReducedInstance::sorted(costs, rewards, probs, roles)
}

/// The `n` SOPs paying `2(m+2)/3` on the outcomes of the matched triples.
pub fn matching_witness_contract(red: &ReducedInstance, inp: &Matching3dInput, matching: &[usize]) -> Result<AmbiguousContract> {
    let m = inp.triples.len();
    let amount = frac(2 * (m as i64 + 2), 3);
    let support = matching
        .iter()
        .map(|&q| PaymentFunction::sop(m + 2, q + 1, amount.clone()))
        .collect::<Result<Vec<_>>>()?;
    AmbiguousContract::new(support, red.target())
}

/// Whether the contract instance of a 3D-matching input ranks the target
/// as expected: utility 4/3 with a matching, at most 1 without.
pub fn matching3d_regime_holds(utility: &Rational, matchable: bool) -> bool {
    if matchable {
        *utility == frac(4, 3)
    } else {
        *utility <= rational::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::ambiguous::optimal_contract;

    fn zeros(row: &[Rational]) -> usize {
        row.iter().filter(|v| v.is_zero()).count()
    }

    fn mk(values: &[i64], k: usize) -> MakespanInput {
        MakespanInput::from_integers(values, k).unwrap()
    }

    #[test]
    fn makespan_instance_costs_and_rewards() {
        let red = makespan_to_instance(&mk(&[1, 2, 3], 2)).unwrap();
        let inst = red.instance();
        assert!(inst.validate_strict().is_empty());
        assert_eq!(inst.rewards(), &[int(0), int(6), int(6), int(6)]);
        assert_eq!(inst.cost(red.target()), &int(1));
        assert_eq!(inst.cost(red.item_action(0)), &frac(2, 3));
        assert_eq!(inst.cost(red.item_action(1)), &frac(1, 3));
        assert_eq!(inst.cost(red.item_action(2)), &int(0));
        assert_eq!(red.reduced.roles[0], Role::Null);
    }

    #[test]
    fn makespan_protection_matches_utilities() {
        let red = makespan_to_instance(&mk(&[1, 2, 3], 2)).unwrap();
        let inst = red.instance();
        let ts = [
            vec![int(0), int(1), int(0), int(3)],
            vec![int(1), int(1), int(2), int(3)],
            vec![int(2), int(3), int(4), int(5)],
            vec![int(0), int(0), int(0), int(0)],
        ];
        for t in ts {
            let t = PaymentFunction::new(t).unwrap();
            for q in 0..3 {
                let generic = inst.protects(&t, red.target(), &[red.item_action(q)]).unwrap();
                assert_eq!(red.protects(&t, q).unwrap(), generic);
            }
        }
    }

    #[test]
    fn partition_contracts_pay_makespan_over_n() {
        let red = makespan_to_instance(&mk(&[1, 2, 3], 2)).unwrap();
        let part = Partition::new(vec![vec![2], vec![0, 1]], &[0, 1, 2]).unwrap();
        let tau = partition_to_contract(&red, &part).unwrap();
        assert!(red.instance().is_ic(&tau, red.target()).unwrap());
        assert_eq!(tau.expected_payment(red.instance()).unwrap(), int(1));
        assert_eq!(tau.principal_utility(red.instance()).unwrap(), int(5));

        let one = Partition::new(vec![vec![0, 1, 2], vec![]], &[0, 1, 2]).unwrap();
        let tau = partition_to_contract(&red, &one).unwrap();
        assert_eq!(tau.expected_payment(red.instance()).unwrap(), int(2));

        let red = makespan_to_instance(&mk(&[1, 1], 2)).unwrap();
        let part = Partition::new(vec![vec![0], vec![1]], &[0, 1]).unwrap();
        let tau = partition_to_contract(&red, &part).unwrap();
        assert_eq!(tau.expected_payment(red.instance()).unwrap(), frac(1, 2));
    }

    #[test]
    fn brute_force_small_cases() {
        assert_eq!(brute_force_makespan(&mk(&[1, 2, 3], 2), None).unwrap(), int(3));
        assert_eq!(brute_force_makespan(&mk(&[7], 1), None).unwrap(), int(7));
        assert_eq!(brute_force_makespan(&mk(&[1, 1, 1], 3), None).unwrap(), int(1));
        assert!(brute_force_makespan(&mk(&[1, 1, 1], 3), Some(10)).is_err());
    }

    #[test]
    fn round_trip_through_contracts() {
        for (values, k, expected) in [(&[1, 2, 3][..], 2, 3), (&[5, 5, 5, 5][..], 2, 10), (&[4, 1, 2][..], 3, 4)] {
            let inp = mk(values, k);
            let red = makespan_to_instance(&inp).unwrap();
            let sol = solve_makespan(&red, &SolveOptions::default()).unwrap();
            assert_eq!(sol.makespan, int(expected));
            let report = sol.report.unwrap();
            assert_eq!(report.action(), Some(red.target()));
            let n = int(values.len() as i64);
            assert_eq!(report.expected_payment.unwrap() * n, int(expected));
        }
    }

    #[test]
    fn trivial_inputs_bypass_the_solver() {
        let red = makespan_to_instance(&mk(&[4, 2], 1)).unwrap();
        let sol = solve_makespan(&red, &SolveOptions::default()).unwrap();
        assert!(sol.report.is_none());
        assert_eq!(sol.makespan, int(6));
        let red = monotone_makespan_to_instance(&mk(&[9], 3)).unwrap();
        let sol = solve_makespan(&red, &SolveOptions::default()).unwrap();
        assert_eq!(sol.makespan, int(9));
        assert_eq!(sol.partition.blocks()[0], vec![0]);
    }

    #[test]
    fn monotone_instance_shape() {
        let red = monotone_makespan_to_instance(&mk(&[1, 2, 3], 2)).unwrap();
        let inst = red.instance();
        assert!(inst.validate_strict().is_empty());
        assert_eq!(inst.rewards(), &[int(0), int(7), int(14), int(21)]);
        assert_eq!(inst.cost(red.target()), &int(1));
        assert_eq!(inst.row(red.item_action(0)), &[frac(1, 3), int(0), frac(1, 3), frac(1, 3)]);
        assert_eq!(inst.row(red.item_action(2)), &[int(0), frac(1, 3), frac(2, 3), int(0)]);
    }

    #[test]
    fn monotone_pair_lp_binds_at_threshold() {
        let red = monotone_makespan_to_instance(&mk(&[1, 2, 3], 2)).unwrap();
        let inst = red.instance();
        let sub = inst.restrict([red.target(), red.item_action(0)]).unwrap();
        let (t, _) = crate::lp::min_pay_contract(&sub, red.target(), true).unwrap().unwrap();
        let p = t.payments();
        assert_eq!(&p[1] - &p[0], frac(1, 3));
    }

    #[test]
    fn monotone_protection_matches_utilities() {
        let red = monotone_makespan_to_instance(&mk(&[2, 1, 3], 2)).unwrap();
        let inst = red.instance();
        for t in [
            vec![int(0), frac(2, 3), frac(2, 3), int(4)],
            vec![int(1), int(1), frac(3, 2), frac(3, 2)],
            vec![int(0), int(0), int(0), int(0)],
        ] {
            let t = PaymentFunction::new(t).unwrap();
            for q in 0..3 {
                let generic = inst.protects(&t, red.target(), &[red.item_action(q)]).unwrap();
                assert_eq!(red.protects(&t, q).unwrap(), generic);
            }
        }
        let bumpy = PaymentFunction::new(vec![int(2), int(0), int(0), int(0)]).unwrap();
        assert!(red.protects(&bumpy, 0).is_err());
    }

    #[test]
    fn monotone_round_trip() {
        let red = monotone_makespan_to_instance(&mk(&[1, 2, 3], 2)).unwrap();
        let part = Partition::new(vec![vec![2], vec![0, 1]], &[0, 1, 2]).unwrap();
        let tau = partition_to_contract(&red, &part).unwrap();
        assert!(tau.support().iter().all(PaymentFunction::is_monotone));
        assert!(red.instance().is_ic(&tau, red.target()).unwrap());
        assert_eq!(tau.expected_payment(red.instance()).unwrap(), int(1));

        for (values, expected) in [(&[1, 2, 3][..], 3), (&[2, 2][..], 2), (&[5, 5, 5, 5][..], 10)] {
            let red = monotone_makespan_to_instance(&mk(values, 2)).unwrap();
            let report = optimal_contract(red.instance(), 2, true).unwrap();
            let contract = report.contract.unwrap();
            let part = monotone_contract_to_partition(&red, &contract).unwrap();
            assert_eq!(red.input.makespan(&part), int(expected));
        }
    }

    #[test]
    fn matching_instance_shape() {
        let inp = Matching3dInput::new(1, vec![[0, 0, 0]]).unwrap();
        let red = matching3d_to_instance(&inp).unwrap();
        let inst = &red.instance;
        assert_eq!(inst.num_actions(), 5);
        assert_eq!(inst.num_outcomes(), 3);
        assert!(inst.validate_strict().is_empty());
        assert_eq!(inst.row(red.target()), &[int(0), frac(1, 3), frac(2, 3)]);
        let x = red.action_of(Role::Element(Axis::X, 0)).unwrap();
        assert_eq!(zeros(inst.row(x)), 1);
        assert_eq!(inst.expected_reward(red.target()).unwrap(), int(2));
    }

    #[test]
    fn matching_regimes() {
        let inp = matchable_fixture(1).unwrap();
        let red = matching3d_to_instance(&inp).unwrap();
        let r = optimal_contract(&red.instance, 1, false).unwrap();
        assert_eq!(r.principal_utility, Some(frac(4, 3)));

        let inp = matchable_fixture(2).unwrap();
        let red = matching3d_to_instance(&inp).unwrap();
        let pick = inp.perfect_matching().unwrap();
        let tau = matching_witness_contract(&red, &inp, &pick).unwrap();
        assert!(red.instance.is_ic(&tau, red.target()).unwrap());
        assert_eq!(tau.expected_payment(&red.instance).unwrap(), frac(2, 3));

        let bad = unmatchable_fixture(2).unwrap();
        assert!(bad.perfect_matching().is_none());
        assert!(unmatchable_fixture(1).unwrap().perfect_matching().is_none());
    }

    #[test]
    fn matching_input_validation() {
        assert!(Matching3dInput::new(2, vec![[0, 2, 0]]).is_err());
        assert!(Matching3dInput::new(2, vec![[0, 1, 0], [0, 1, 0]]).is_err());
        assert!(Matching3dInput::parse(r#"{"n":2,"triples":[[0,0,0],[1,1,1]]}"#).is_ok());
        assert!(MakespanInput::parse(r#"{"values":["1","2","3"],"machines":2}"#).is_ok());
        assert!(MakespanInput::parse(r#"{"values":["0"],"machines":2}"#).is_err());
    }
}
