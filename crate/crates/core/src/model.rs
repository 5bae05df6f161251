//! Instances, payment functions, contracts and the utility predicates.
//!
//! Actions and outcomes are addressed by 0-based indices. A [`Subinstance`]
//! is a view onto a base [`Instance`] that keeps original action ids, so
//! every evaluation on a view agrees with the base instance.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Costs, rewards and the row-stochastic outcome distribution of each action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    costs: Vec<Rational>,
    rewards: Vec<Rational>,
    probs: Vec<Vec<Rational>>,
}

impl Instance {
    /// Builds an instance after checking the shape only; use
    /// [`Instance::validate`] for the model invariants.
    pub fn new(costs: Vec<Rational>, rewards: Vec<Rational>, probs: Vec<Vec<Rational>>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidInstance("no actions".into()));
        }
        if rewards.is_empty() {
            return Err(Error::InvalidInstance("no outcomes".into()));
        }
        if probs.len() != costs.len() {
            return Err(Error::InvalidInstance(format!(
                "{} cost entries but {} probability rows",
                costs.len(),
                probs.len()
            )));
        }
        if let Some((row, r)) = probs.iter().enumerate().find(|(_, r)| r.len() != rewards.len()) {
            return Err(Error::InvalidInstance(format!(
                "probability row {} has {} entries, expected {}",
                row + 1,
                r.len(),
                rewards.len()
            )));
        }
        Ok(Self { costs, rewards, probs })
    }

    pub fn num_actions(&self) -> usize {
        self.costs.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.rewards.len()
    }

    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    pub fn rewards(&self) -> &[Rational] {
        &self.rewards
    }

    pub fn probs(&self) -> &[Vec<Rational>] {
        &self.probs
    }

    pub fn cost(&self, i: usize) -> &Rational {
        &self.costs[i]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.probs[i]
    }

    /// The view containing every action.
    pub fn full(&self) -> Subinstance<'_> {
        Subinstance {
            base: self,
            actions: (0..self.num_actions()).collect(),
        }
    }

    /// Restricts the instance to the given actions (deduplicated, sorted).
    pub fn restrict<I: IntoIterator<Item = usize>>(&self, actions: I) -> Result<Subinstance<'_>> {
        let set: BTreeSet<usize> = actions.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidInstance("empty subinstance".into()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= self.num_actions()) {
            return Err(Error::InvalidAction {
                index: bad,
                count: self.num_actions(),
            });
        }
        Ok(Subinstance {
            base: self,
            actions: set.into_iter().collect(),
        })
    }

    /// Model invariants. The zero-reward requirement on the null action is
    /// only checked by [`Instance::validate_strict`].
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, row) in self.probs.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if p.is_negative() {
                    out.push(Violation::new(
                        Rule::NegativeProbability,
                        format!("probs[{}][{}]", i + 1, j + 1),
                        format!("probability {} is negative", rational::format(p)),
                    ));
                }
            }
            let total = rational::sum(row);
            if total != rational::one() {
                out.push(Violation::new(
                    Rule::RowSum,
                    format!("probs row {}", i + 1),
                    format!("row sums to {}, expected 1", rational::format(&total)),
                ));
            }
        }
        for (i, c) in self.costs.iter().enumerate() {
            if c.is_negative() {
                out.push(Violation::new(
                    Rule::NegativeCost,
                    format!("costs[{}]", i + 1),
                    format!("cost {} is negative", rational::format(c)),
                ));
            }
        }
        for (j, r) in self.rewards.iter().enumerate() {
            if r.is_negative() {
                out.push(Violation::new(
                    Rule::NegativeReward,
                    format!("rewards[{}]", j + 1),
                    format!("reward {} is negative", rational::format(r)),
                ));
            }
        }
        for (i, w) in self.costs.windows(2).enumerate() {
            if w[0] > w[1] {
                out.push(Violation::new(
                    Rule::CostOrder,
                    format!("costs[{}..{}]", i + 1, i + 2),
                    format!(
                        "costs not non-decreasing: {} > {}",
                        rational::format(&w[0]),
                        rational::format(&w[1])
                    ),
                ));
            }
        }
        for (j, w) in self.rewards.windows(2).enumerate() {
            if w[0] > w[1] {
                out.push(Violation::new(
                    Rule::RewardOrder,
                    format!("rewards[{}..{}]", j + 1, j + 2),
                    format!(
                        "rewards not non-decreasing: {} > {}",
                        rational::format(&w[0]),
                        rational::format(&w[1])
                    ),
                ));
            }
        }
        if !self.costs[0].is_zero() {
            out.push(Violation::new(
                Rule::NullActionCost,
                "costs[1]".into(),
                format!("action 1 must have zero cost, found {}", rational::format(&self.costs[0])),
            ));
        }
        out
    }

    /// [`Instance::validate`] plus the requirement that action 1 has zero
    /// expected reward.
    pub fn validate_strict(&self) -> Vec<Violation> {
        let mut out = self.validate();
        let r1 = rational::dot(&self.probs[0], &self.rewards);
        if !r1.is_zero() {
            out.push(Violation::new(
                Rule::NullActionReward,
                "probs row 1".into(),
                format!("action 1 must have zero expected reward, found {}", rational::format(&r1)),
            ));
        }
        out
    }

    /// Re-sorts actions by cost and outcomes by reward (both stable) and
    /// records where each row and column came from.
    pub fn normalized(&self) -> (Instance, Normalization) {
        let mut action_order: Vec<usize> = (0..self.num_actions()).collect();
        action_order.sort_by(|&a, &b| self.costs[a].cmp(&self.costs[b]));
        let mut outcome_order: Vec<usize> = (0..self.num_outcomes()).collect();
        outcome_order.sort_by(|&a, &b| self.rewards[a].cmp(&self.rewards[b]));
        let costs = action_order.iter().map(|&i| self.costs[i].clone()).collect();
        let rewards = outcome_order.iter().map(|&j| self.rewards[j].clone()).collect();
        let probs = action_order
            .iter()
            .map(|&i| outcome_order.iter().map(|&j| self.probs[i][j].clone()).collect())
            .collect();
        (
            Instance { costs, rewards, probs },
            Normalization {
                action_order,
                outcome_order,
            },
        )
    }
}

/// `action_order[new] = old`, likewise for outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalization {
    pub action_order: Vec<usize>,
    pub outcome_order: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    RowSum,
    NegativeProbability,
    NegativeCost,
    NegativeReward,
    CostOrder,
    RewardOrder,
    NullActionCost,
    NullActionReward,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::RowSum => "row-sum",
            Rule::NegativeProbability => "negative-probability",
            Rule::NegativeCost => "negative-cost",
            Rule::NegativeReward => "negative-reward",
            Rule::CostOrder => "cost-order",
            Rule::RewardOrder => "reward-order",
            Rule::NullActionCost => "null-action-cost",
            Rule::NullActionReward => "null-action-reward",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub location: String,
    pub message: String,
}

impl Violation {
    fn new(rule: Rule, location: String, message: String) -> Self {
        Self { rule, location, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.location, self.message)
    }
}

/// A restriction of an instance to a subset of its actions.
#[derive(Clone, Debug)]
pub struct Subinstance<'a> {
    base: &'a Instance,
    actions: Vec<usize>,
}

impl<'a> Subinstance<'a> {
    pub fn base(&self) -> &'a Instance {
        self.base
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

/// Utility evaluation shared by full instances and subinstances.
///
/// Actions are original ids; an action outside the set is an error.
pub trait ActionSet {
    fn instance(&self) -> &Instance;
    fn action_ids(&self) -> Vec<usize>;
    fn contains(&self, i: usize) -> bool;

    fn check_action(&self, i: usize) -> Result<()> {
        if self.contains(i) {
            Ok(())
        } else {
            Err(Error::InvalidAction {
                index: i,
                count: self.instance().num_actions(),
            })
        }
    }

    fn check_payment(&self, t: &PaymentFunction) -> Result<()> {
        let m = self.instance().num_outcomes();
        if t.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: t.len(),
            });
        }
        Ok(())
    }

    /// `R_i = sum_j p_ij r_j`.
    fn expected_reward(&self, i: usize) -> Result<Rational> {
        self.check_action(i)?;
        let inst = self.instance();
        Ok(rational::dot(inst.row(i), inst.rewards()))
    }

    /// `W_i = R_i - c_i`.
    fn welfare(&self, i: usize) -> Result<Rational> {
        Ok(self.expected_reward(i)? - self.instance().cost(i))
    }

    /// `T_i(t) = sum_j p_ij t_j`.
    fn expected_payment(&self, i: usize, t: &PaymentFunction) -> Result<Rational> {
        self.check_action(i)?;
        self.check_payment(t)?;
        Ok(rational::dot(self.instance().row(i), t.payments()))
    }

    fn agent_utility(&self, i: usize, t: &PaymentFunction) -> Result<Rational> {
        Ok(self.expected_payment(i, t)? - self.instance().cost(i))
    }

    fn principal_utility(&self, i: usize, t: &PaymentFunction) -> Result<Rational> {
        Ok(self.expected_reward(i)? - self.expected_payment(i, t)?)
    }

    /// Worst-case agent utility over the support.
    fn agent_utility_ambiguous(&self, i: usize, tau: &AmbiguousContract) -> Result<Rational> {
        let mut best: Option<Rational> = None;
        for t in tau.support() {
            let u = self.agent_utility(i, t)?;
            best = Some(match best {
                Some(b) if b <= u => b,
                _ => u,
            });
        }
        Ok(best.expect("support is non-empty"))
    }

    /// Actions maximizing the worst-case agent utility, ascending.
    fn best_responses(&self, tau: &AmbiguousContract) -> Result<Vec<usize>> {
        let mut best: Option<Rational> = None;
        let mut arg = Vec::new();
        for i in self.action_ids() {
            let u = self.agent_utility_ambiguous(i, tau)?;
            match &best {
                Some(b) if *b > u => {}
                Some(b) if *b == u => arg.push(i),
                _ => {
                    best = Some(u);
                    arg = vec![i];
                }
            }
        }
        Ok(arg)
    }

    /// True when `t` gives no action of `against` more agent utility than `i`.
    fn protects(&self, t: &PaymentFunction, i: usize, against: &[usize]) -> Result<bool> {
        let ui = self.agent_utility(i, t)?;
        for &other in against {
            if self.agent_utility(other, t)? > ui {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// All support members yield the same principal utility at `i`.
    fn is_consistent(&self, tau: &AmbiguousContract, i: usize) -> Result<bool> {
        let mut payments = tau.support().iter().map(|t| self.expected_payment(i, t));
        let first = payments.next().expect("support is non-empty")?;
        for p in payments {
            if p? != first {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn is_ic(&self, tau: &AmbiguousContract, i: usize) -> Result<bool> {
        Ok(self.is_consistent(tau, i)? && self.best_responses(tau)?.contains(&i))
    }
}

impl ActionSet for Instance {
    fn instance(&self) -> &Instance {
        self
    }

    fn action_ids(&self) -> Vec<usize> {
        (0..self.num_actions()).collect()
    }

    fn contains(&self, i: usize) -> bool {
        i < self.num_actions()
    }
}

impl ActionSet for Subinstance<'_> {
    fn instance(&self) -> &Instance {
        self.base
    }

    fn action_ids(&self) -> Vec<usize> {
        self.actions.clone()
    }

    fn contains(&self, i: usize) -> bool {
        self.actions.binary_search(&i).is_ok()
    }
}

/// Non-negative payment per outcome.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaymentFunction(Vec<Rational>);

impl PaymentFunction {
    pub fn new(payments: Vec<Rational>) -> Result<Self> {
        if let Some((j, p)) = payments.iter().enumerate().find(|(_, p)| p.is_negative()) {
            return Err(Error::Precondition(format!(
                "payment {} on outcome {} violates limited liability",
                rational::format(p),
                j + 1
            )));
        }
        Ok(Self(payments))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![rational::zero(); m])
    }

    pub fn constant(m: usize, value: Rational) -> Result<Self> {
        Self::new(vec![value; m])
    }

    /// Single-outcome payment of `amount` on outcome `j`.
    pub fn sop(m: usize, j: usize, amount: Rational) -> Result<Self> {
        let mut v = vec![rational::zero(); m];
        v[j] = amount;
        Self::new(v)
    }

    pub fn payments(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shifted(&self, delta: &Rational) -> Result<Self> {
        Self::new(self.0.iter().map(|p| p + delta).collect())
    }

    pub fn scaled(&self, factor: &Rational) -> Result<Self> {
        Self::new(self.0.iter().map(|p| p * factor).collect())
    }

    /// The outcome carrying the only positive payment, if `self` is an SOP.
    pub fn sop_outcome(&self) -> Option<usize> {
        let mut positive = self.0.iter().enumerate().filter(|(_, p)| !p.is_zero());
        let (j, _) = positive.next()?;
        positive.next().is_none().then_some(j)
    }

    /// Payments non-decreasing in outcome order.
    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(rational::format).collect()
    }
}

impl fmt::Display for PaymentFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicContract {
    pub t: PaymentFunction,
    pub action: usize,
}

/// A multiset of `k >= 1` payment functions and a recommended action.
#[derive(Clone, Debug)]
pub struct AmbiguousContract {
    support: Vec<PaymentFunction>,
    action: usize,
}

impl AmbiguousContract {
    pub fn new(support: Vec<PaymentFunction>, action: usize) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Precondition("ambiguous contract needs k >= 1 payment functions".into()));
        }
        let m = support[0].len();
        if let Some(t) = support.iter().find(|t| t.len() != m) {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: t.len(),
            });
        }
        Ok(Self { support, action })
    }

    pub fn classic(contract: ClassicContract) -> Self {
        Self {
            support: vec![contract.t],
            action: contract.action,
        }
    }

    pub fn support(&self) -> &[PaymentFunction] {
        &self.support
    }

    pub fn action(&self) -> usize {
        self.action
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    /// Duplicates the last member until the support has `k` elements.
    pub fn filled_to(mut self, k: usize) -> Self {
        while self.support.len() < k {
            let last = self.support.last().expect("non-empty").clone();
            self.support.push(last);
        }
        self
    }

    /// Sorted support, used for multiset equality.
    pub fn canonical_support(&self) -> Vec<PaymentFunction> {
        let mut s = self.support.clone();
        s.sort();
        s
    }

    /// `T_i` of the first member; equal to every member's payment when consistent.
    pub fn expected_payment<A: ActionSet + ?Sized>(&self, model: &A) -> Result<Rational> {
        model.expected_payment(self.action, &self.support[0])
    }

    /// Principal utility `R_i - T_i(tau)` of a consistent contract.
    pub fn principal_utility<A: ActionSet + ?Sized>(&self, model: &A) -> Result<Rational> {
        model.principal_utility(self.action, &self.support[0])
    }
}

impl PartialEq for AmbiguousContract {
    fn eq(&self, other: &Self) -> bool {
        self.action == other.action && self.canonical_support() == other.canonical_support()
    }
}

impl Eq for AmbiguousContract {}

/// `k` labelled, pairwise disjoint blocks covering a ground set. Empty
/// blocks are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Checks that `blocks` partition exactly `ground`. Blocks are sorted.
    pub fn new(blocks: Vec<Vec<usize>>, ground: &[usize]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Precondition("partition needs at least one block".into()));
        }
        let mut seen = BTreeSet::new();
        for b in &blocks {
            for &x in b {
                if !seen.insert(x) {
                    return Err(Error::Precondition(format!("element {x} appears in two blocks")));
                }
            }
        }
        let expected: BTreeSet<usize> = ground.iter().copied().collect();
        if seen != expected {
            return Err(Error::Precondition("blocks do not cover the ground set exactly".into()));
        }
        Ok(Self::from_blocks_unchecked(blocks))
    }

    pub(crate) fn from_blocks_unchecked(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn ground(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.blocks.iter().flatten().copied().collect();
        g.sort_unstable();
        g
    }

    pub fn non_empty_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| !b.is_empty()).count()
    }

    /// Same blocks regardless of labels and padding.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        let norm = |p: &Partition| {
            let mut v: Vec<Vec<usize>> = p.blocks.iter().filter(|b| !b.is_empty()).cloned().collect();
            v.sort();
            v
        };
        norm(self) == norm(other)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let ids: Vec<String> = b.iter().map(|x| (x + 1).to_string()).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for PaymentFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rational::serde_str::vec::serialize(&self.0, s)
    }
}

/// Actions are written 1-based.
impl Serialize for AmbiguousContract {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AmbiguousContract", 3)?;
        st.serialize_field("action", &(self.action + 1))?;
        st.serialize_field("k", &self.k())?;
        st.serialize_field("support", &self.support)?;
        st.end()
    }
}

/// Blocks of 1-based action numbers.
impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.blocks.len()))?;
        for b in &self.blocks {
            let ids: Vec<usize> = b.iter().map(|x| x + 1).collect();
            seq.serialize_element(&ids)?;
        }
        seq.end()
    }
}
