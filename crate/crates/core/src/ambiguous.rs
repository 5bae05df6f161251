//! Optimal k-ambiguous contracts.
//!
//! An optimal contract for action `i` is found by splitting the other
//! actions into at most `k` blocks, solving the min-pay LP of `i` against
//! each block, and lifting every solution by a constant so all members
//! charge `i` the same expected payment.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, competitors};
use crate::model::{ActionSet, AmbiguousContract, Instance, Partition, PaymentFunction};
use crate::rational::{self, Rational};

/// Default bound on the number of partitions a solve may enumerate.
pub const DEFAULT_PARTITION_CEILING: u64 = 1_000_000;

/// Additive balancing: every member is raised by `theta - T_i(t)` where
/// `theta` is the largest expected payment of `i` among the inputs.
pub fn balance<A: ActionSet + ?Sized>(model: &A, i: usize, ts: &[PaymentFunction]) -> Result<AmbiguousContract> {
    if ts.is_empty() {
        return Err(Error::Precondition("balancing needs at least one payment function".into()));
    }
    let payments = ts
        .iter()
        .map(|t| model.expected_payment(i, t))
        .collect::<Result<Vec<_>>>()?;
    let theta = payments.iter().max().expect("non-empty").clone();
    let support = ts
        .iter()
        .zip(&payments)
        .map(|(t, p)| t.shifted(&(&theta - p)))
        .collect::<Result<Vec<_>>>()?;
    AmbiguousContract::new(support, i)
}

/// Multiplicative balancing of single-outcome payments: each member is
/// scaled by `theta / T_i(t) >= 1`. Refused when an input is not an SOP,
/// when `i` never reaches the paid outcome, or when the scaled contract
/// is not incentive compatible for `i`.
pub fn balance_multiplicative_sop<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    sops: &[PaymentFunction],
) -> Result<AmbiguousContract> {
    if sops.is_empty() {
        return Err(Error::Precondition("balancing needs at least one payment function".into()));
    }
    let mut payments = Vec::with_capacity(sops.len());
    for t in sops {
        let Some(j) = t.sop_outcome() else {
            return Err(Error::MultiplicativeRefused(format!("{t} is not a single-outcome payment")));
        };
        let p = model.expected_payment(i, t)?;
        if p.is_zero() {
            return Err(Error::MultiplicativeRefused(format!(
                "action {} never reaches outcome {}, so {t} cannot be rescaled",
                i + 1,
                j + 1
            )));
        }
        payments.push(p);
    }
    let theta = payments.iter().max().expect("non-empty").clone();
    let support = sops
        .iter()
        .zip(&payments)
        .map(|(t, p)| t.scaled(&(&theta / p)))
        .collect::<Result<Vec<_>>>()?;
    let tau = AmbiguousContract::new(support, i)?;
    let own = model.agent_utility_ambiguous(i, &tau)?;
    for other in model.action_ids() {
        let u = model.agent_utility_ambiguous(other, &tau)?;
        if u > own {
            return Err(Error::MultiplicativeRefused(format!(
                "scaled contract is not IC: U_A({}) = {} exceeds U_A({}) = {}",
                other + 1,
                rational::format(&u),
                i + 1,
                rational::format(&own)
            )));
        }
    }
    Ok(tau)
}

/// Stirling numbers of the second kind `S(g, j)` for `j = 0..=g`.
fn stirling_row(g: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for n in 1..=g {
        let mut next = vec![BigUint::zero(); n + 1];
        for j in 1..=n {
            let stay = if j < row.len() { &row[j] * BigUint::from(j) } else { BigUint::zero() };
            next[j] = stay + &row[j - 1];
        }
        row = next;
    }
    row
}

/// Number of partitions of a `g`-element set into at most `k` non-empty
/// blocks. The empty set has exactly one.
pub fn partition_count(g: usize, k: usize) -> BigUint {
    stirling_row(g).into_iter().take(k.min(g) + 1).sum()
}

/// Partitions of `ground` into at most `k` non-empty blocks, each padded
/// with empty blocks to length `k`, in lexicographic order of their
/// restricted growth strings.
pub fn enumerate_partitions(ground: &[usize], k: usize) -> Result<Partitions> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    Ok(Partitions {
        ground: ground.to_vec(),
        k,
        rgs: vec![0; ground.len()],
        started: false,
        done: false,
    })
}

pub struct Partitions {
    ground: Vec<usize>,
    k: usize,
    rgs: Vec<usize>,
    started: bool,
    done: bool,
}

impl Partitions {
    fn advance(&mut self) -> bool {
        for pos in (1..self.rgs.len()).rev() {
            let prefix_max = self.rgs[..pos].iter().copied().max().unwrap_or(0);
            if self.rgs[pos] <= prefix_max && self.rgs[pos] + 1 < self.k {
                self.rgs[pos] += 1;
                for v in &mut self.rgs[pos + 1..] {
                    *v = 0;
                }
                return true;
            }
        }
        false
    }

    fn current(&self) -> Partition {
        let mut blocks = vec![Vec::new(); self.k];
        for (&x, &b) in self.ground.iter().zip(&self.rgs) {
            blocks[b].push(x);
        }
        Partition::from_blocks_unchecked(blocks)
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.current())
    }
}

/// Per-block min-pay solutions protecting `target` against each block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtectionAssignment {
    pub target: usize,
    pub partition: Partition,
    pub payments: Vec<PaymentFunction>,
}

impl ProtectionAssignment {
    /// Checks that each block's payment function protects the target
    /// against every action of the block.
    pub fn is_valid<A: ActionSet + ?Sized>(&self, model: &A) -> Result<bool> {
        for (block, t) in self.partition.blocks().iter().zip(&self.payments) {
            if !model.protects(t, self.target, block)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

type BlockSolution = Option<(PaymentFunction, Rational)>;

/// Memoized min-pay solves of one target against subsets of actions.
struct BlockSolver<'a> {
    base: &'a Instance,
    target: usize,
    monotone: bool,
    cache: HashMap<Vec<usize>, BlockSolution>,
}

impl<'a> BlockSolver<'a> {
    fn new(base: &'a Instance, target: usize, monotone: bool) -> Self {
        Self {
            base,
            target,
            monotone,
            cache: HashMap::new(),
        }
    }

    fn solve(&mut self, block: &[usize]) -> Result<BlockSolution> {
        if block.is_empty() {
            return Ok(Some((PaymentFunction::zeros(self.base.num_outcomes()), rational::zero())));
        }
        if let Some(hit) = self.cache.get(block) {
            return Ok(hit.clone());
        }
        let sub = self.base.restrict(block.iter().copied().chain([self.target]))?;
        let sol = lp::min_pay_contract(&sub, self.target, self.monotone)?;
        self.cache.insert(block.to_vec(), sol.clone());
        Ok(sol)
    }
}

fn check_ground<A: ActionSet + ?Sized>(model: &A, i: usize, partition: &Partition) -> Result<()> {
    model.check_action(i)?;
    if partition.ground() != competitors(model, i) {
        return Err(Error::Precondition(format!(
            "partition must cover exactly the actions other than {}",
            i + 1
        )));
    }
    Ok(())
}

/// Min-pay protection of `i` against every block, or `None` when some
/// block cannot be protected against.
pub fn protection_assignment<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    partition: &Partition,
    monotone: bool,
) -> Result<Option<ProtectionAssignment>> {
    check_ground(model, i, partition)?;
    let mut solver = BlockSolver::new(model.instance(), i, monotone);
    let mut payments = Vec::with_capacity(partition.k());
    for block in partition.blocks() {
        match solver.solve(block)? {
            Some((t, _)) => payments.push(t),
            None => return Ok(None),
        }
    }
    Ok(Some(ProtectionAssignment {
        target: i,
        partition: partition.clone(),
        payments,
    }))
}

/// Optimal IC contract for `i` among those whose members protect against
/// the given blocks.
pub fn optimal_for_partition<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    partition: &Partition,
    monotone: bool,
) -> Result<Option<AmbiguousContract>> {
    match protection_assignment(model, i, partition, monotone)? {
        Some(pa) => balance(model, i, &pa.payments).map(Some),
        None => Ok(None),
    }
}

struct ActionSearch {
    best: Option<(AmbiguousContract, Partition)>,
    examined: u64,
}

fn search_action<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    k: usize,
    monotone: bool,
    stop_at_first: bool,
) -> Result<ActionSearch> {
    model.check_action(i)?;
    let others = competitors(model, i);
    let mut solver = BlockSolver::new(model.instance(), i, monotone);
    let mut best: Option<(Rational, Partition)> = None;
    let mut examined = 0u64;
    'partitions: for partition in enumerate_partitions(&others, k)? {
        examined += 1;
        let mut theta = rational::zero();
        for block in partition.blocks() {
            match solver.solve(block)? {
                Some((_, pay)) => {
                    if pay > theta {
                        theta = pay;
                    }
                }
                None => continue 'partitions,
            }
        }
        if best.as_ref().is_none_or(|(b, _)| theta < *b) {
            best = Some((theta, partition));
            if stop_at_first {
                break;
            }
        }
    }
    let best = match best {
        Some((_, partition)) => {
            let ts = partition
                .blocks()
                .iter()
                .map(|b| solver.solve(b).map(|s| s.expect("feasible block").0))
                .collect::<Result<Vec<_>>>()?;
            Some((balance(model, i, &ts)?, partition))
        }
        None => None,
    };
    Ok(ActionSearch { best, examined })
}

/// Cheapest IC k-ambiguous contract for `i` and the partition it came
/// from; the first partition in enumeration order wins ties.
pub fn optimal_for_action<A: ActionSet + ?Sized>(
    model: &A,
    i: usize,
    k: usize,
    monotone: bool,
) -> Result<Option<(AmbiguousContract, Partition)>> {
    Ok(search_action(model, i, k, monotone, false)?.best)
}

pub fn is_implementable_k<A: ActionSet + ?Sized>(model: &A, i: usize, k: usize, monotone: bool) -> Result<bool> {
    Ok(search_action(model, i, k, monotone, true)?.best.is_some())
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Maximum number of partitions to enumerate; `None` disables the check.
    pub ceiling: Option<u64>,
    /// Restrict the sweep to these actions (all actions when `None`).
    pub actions: Option<Vec<usize>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            ceiling: Some(DEFAULT_PARTITION_CEILING),
            actions: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActionSummary {
    #[serde(serialize_with = "one_based")]
    pub action: usize,
    #[serde(with = "rational::serde_str::option")]
    pub principal_utility: Option<Rational>,
    #[serde(with = "rational::serde_str::option")]
    pub expected_payment: Option<Rational>,
    pub partitions_examined: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolveReport {
    pub k: usize,
    pub monotone: bool,
    pub contract: Option<AmbiguousContract>,
    #[serde(with = "rational::serde_str::option")]
    pub principal_utility: Option<Rational>,
    #[serde(with = "rational::serde_str::option")]
    pub expected_payment: Option<Rational>,
    pub winning_partition: Option<Partition>,
    pub partitions_examined: u64,
    pub per_action: Vec<ActionSummary>,
}

impl SolveReport {
    pub fn action(&self) -> Option<usize> {
        self.contract.as_ref().map(|c| c.action())
    }
}

fn one_based<S: serde::Serializer>(v: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

/// Partitions a sweep over `actions` would enumerate.
pub fn sweep_size<A: ActionSet + ?Sized>(model: &A, actions: &[usize], k: usize) -> BigUint {
    let g = model.action_ids().len().saturating_sub(1);
    partition_count(g, k) * BigUint::from(actions.len())
}

/// Best IC k-ambiguous contract over all actions; ties go to the lowest
/// action index.
pub fn optimal_contract<A: ActionSet + Sync + ?Sized>(model: &A, k: usize, monotone: bool) -> Result<SolveReport> {
    optimal_contract_with(model, k, monotone, &SolveOptions::default())
}

pub fn optimal_contract_with<A: ActionSet + Sync + ?Sized>(
    model: &A,
    k: usize,
    monotone: bool,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let actions = match &opts.actions {
        Some(list) => {
            for &a in list {
                model.check_action(a)?;
            }
            let mut list = list.clone();
            list.sort_unstable();
            list.dedup();
            list
        }
        None => model.action_ids(),
    };
    if let Some(ceiling) = opts.ceiling {
        let count = sweep_size(model, &actions, k);
        if count > BigUint::from(ceiling) {
            return Err(Error::PartitionCeiling {
                count: count.to_string(),
                ceiling,
            });
        }
    }
    let results = actions
        .par_iter()
        .map(|&i| search_action(model, i, k, monotone, false).map(|s| (i, s)))
        .collect::<Result<Vec<_>>>()?;

    let mut per_action = Vec::with_capacity(results.len());
    let mut best: Option<(Rational, Rational, AmbiguousContract, Partition)> = None;
    let mut examined = 0u64;
    for (i, search) in results {
        examined += search.examined;
        let (utility, payment) = match &search.best {
            Some((tau, _)) => {
                let pay = tau.expected_payment(model)?;
                let util = model.expected_reward(i)? - &pay;
                (Some(util), Some(pay))
            }
            None => (None, None),
        };
        if let (Some(u), Some(p), Some((tau, part))) = (&utility, &payment, search.best) {
            if best.as_ref().is_none_or(|(bu, ..)| u > bu) {
                best = Some((u.clone(), p.clone(), tau, part));
            }
        }
        per_action.push(ActionSummary {
            action: i,
            principal_utility: utility,
            expected_payment: payment,
            partitions_examined: search.examined,
        });
    }
    let (principal_utility, expected_payment, contract, winning_partition) = match best {
        Some((u, p, tau, part)) => (Some(u), Some(p), Some(tau), Some(part)),
        None => (None, None, None, None),
    };
    Ok(SolveReport {
        k,
        monotone,
        contract,
        principal_utility,
        expected_payment,
        winning_partition,
        partitions_examined: examined,
        per_action,
    })
}

/// Optimal principal utility with `k` payment functions, if any action is
/// implementable.
pub fn optimal_utility<A: ActionSet + Sync + ?Sized>(model: &A, k: usize, monotone: bool) -> Result<Option<Rational>> {
    let opts = SolveOptions {
        ceiling: None,
        actions: None,
    };
    Ok(optimal_contract_with(model, k, monotone, &opts)?.principal_utility)
}

/// `rho_k`: the optimal k-ambiguous utility over the optimal unrestricted
/// utility (k = n - 1).
pub fn succinctness_gap(inst: &Instance, k: usize) -> Result<Rational> {
    let n = inst.num_actions();
    if n < 2 {
        return Err(Error::InvalidParams("the gap needs at least two actions".into()));
    }
    let full = optimal_utility(inst, n - 1, false)?.unwrap_or_else(rational::zero);
    if !full.is_positive() {
        return Err(Error::UndefinedGap);
    }
    let part = optimal_utility(inst, k, false)?.unwrap_or_else(rational::zero);
    Ok(part / full)
}

/// Best classic contract on `sub`, preferring `prefer` and then the lowest
/// index among equal utilities.
fn best_classic<A: ActionSet + ?Sized>(sub: &A, prefer: usize) -> Result<(PaymentFunction, usize, Rational)> {
    let mut order = sub.action_ids();
    order.sort_by_key(|&a| (a != prefer, a));
    let mut best: Option<(PaymentFunction, usize, Rational)> = None;
    for a in order {
        if let Some((t, pay)) = lp::min_pay_contract(sub, a, false)? {
            let u = sub.expected_reward(a)? - pay;
            if best.as_ref().is_none_or(|(_, _, bu)| u > *bu) {
                best = Some((t, a, u));
            }
        }
    }
    best.ok_or_else(|| Error::Precondition("no action of the subinstance is implementable".into()))
}

/// IC k-ambiguous contract guaranteeing at least `1/(n-k)` of the optimal
/// unrestricted utility.
///
/// Built from the optimal unrestricted contract for `a*` and the best
/// classic contract `t` on `a*` plus the `n-k` cheapest other actions. If
/// `t` implements `a*`, it is combined with the pairwise protections of
/// `a*` against the remaining actions. Otherwise `t` implements some cheap
/// action `a`, and is combined with the flat payment `c_a`.
pub fn approx_contract(inst: &Instance, k: usize) -> Result<AmbiguousContract> {
    let n = inst.num_actions();
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::InvalidParams(format!("approximation needs 1 <= k <= n-1, got k={k}, n={n}")));
    }
    let opts = SolveOptions {
        ceiling: None,
        actions: None,
    };
    let unrestricted = optimal_contract_with(inst, n - 1, false, &opts)?;
    let star = unrestricted
        .action()
        .ok_or_else(|| Error::Precondition("no action is implementable".into()))?;

    let mut others = competitors(inst, star);
    others.sort_by(|&a, &b| inst.cost(a).cmp(inst.cost(b)).then(a.cmp(&b)));
    let (low, high) = others.split_at(n - k);

    let sub = inst.restrict(low.iter().copied().chain([star]))?;
    let (t, implemented, _) = best_classic(&sub, star)?;
    if k == 1 {
        return AmbiguousContract::new(vec![t], implemented);
    }

    if implemented == star {
        let mut ts = vec![t];
        for &a in high {
            let pair = inst.restrict([star, a])?;
            let (tp, _) = lp::min_pay_contract(&pair, star, false)?
                .ok_or_else(|| Error::Precondition(format!("action {} cannot be protected", a + 1)))?;
            ts.push(tp);
        }
        balance(inst, star, &ts)
    } else {
        let flat = PaymentFunction::constant(inst.num_outcomes(), inst.cost(implemented).clone())?;
        Ok(balance(inst, implemented, &[t, flat])?.filled_to(k))
    }
}
