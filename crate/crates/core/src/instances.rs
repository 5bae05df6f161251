//! Fixture instances, the gap family, random instances and the JSON format.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Rule};
use crate::rational::{self, frac, int, Rational};

fn rows(data: &[&[(i64, i64)]]) -> Vec<Vec<Rational>> {
    data.iter()
        .map(|r| r.iter().map(|&(n, d)| frac(n, d)).collect())
        .collect()
}

/// Four actions, five outcomes. Classic, 2-ambiguous and unrestricted
/// optima are 1, 10/9 and 4/3.
pub fn gen_separation() -> Instance {
    Instance::new(
        vec![int(0), int(0), int(0), frac(2, 3)],
        vec![int(0), int(0), int(0), int(0), int(4)],
        rows(&[
            &[(1, 4), (0, 1), (1, 12), (5, 12), (1, 4)],
            &[(1, 4), (1, 12), (0, 1), (5, 12), (1, 4)],
            &[(1, 4), (1, 4), (1, 4), (0, 1), (1, 4)],
            &[(0, 1), (1, 6), (1, 6), (1, 6), (1, 2)],
        ]),
    )
    .expect("fixture shape")
}

/// Five actions, four outcomes. Balancing by scaling fails here while the
/// additive shift reaches utility 40 for action 4.
pub fn gen_additive_vs_multiplicative() -> Instance {
    Instance::new(
        vec![int(0), int(0), int(0), frac(2, 3), frac(4, 3)],
        vec![int(0), int(33), int(66), int(124)],
        rows(&[
            &[(1, 1), (0, 1), (0, 1), (0, 1)],
            &[(1, 3), (5, 12), (1, 12), (1, 6)],
            &[(5, 12), (1, 4), (1, 6), (1, 6)],
            &[(1, 3), (1, 3), (1, 6), (1, 6)],
            &[(0, 1), (3, 4), (1, 4), (0, 1)],
        ]),
    )
    .expect("fixture shape")
}

/// Action 3 repeats the distribution of action 2 at a higher cost, so it
/// is not implementable by any contract.
pub fn gen_cheaper_duplicate() -> Instance {
    Instance::new(
        vec![int(0), int(1), int(2), int(3)],
        vec![int(0), int(6), int(12)],
        rows(&[
            &[(1, 1), (0, 1), (0, 1)],
            &[(1, 3), (1, 3), (1, 3)],
            &[(1, 3), (1, 3), (1, 3)],
            &[(0, 1), (1, 4), (3, 4)],
        ]),
    )
    .expect("fixture shape")
}

/// Parameters of the gap family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapParams {
    pub n: usize,
    pub k: usize,
    pub gamma: Rational,
    pub epsilon: Rational,
}

impl GapParams {
    pub fn new(n: usize, k: usize, gamma: Rational, epsilon: Rational) -> Result<Self> {
        let p = Self { n, k, gamma, epsilon };
        p.check()?;
        Ok(p)
    }

    /// Defaults `gamma = epsilon = 1/100`.
    pub fn with_defaults(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, frac(1, 100), frac(1, 100))
    }

    /// `floor((n-2)/k) + 2`, the index of the target action.
    pub fn n_tilde(&self) -> usize {
        (self.n - 2) / self.k + 2
    }

    /// Number of non-dummy actions.
    pub fn n_prime(&self) -> usize {
        (self.n_tilde() - 2) * self.k + 2
    }

    pub fn delta(&self) -> Rational {
        let g = pow(&self.gamma, self.n_tilde() - 2);
        &self.epsilon * g / int(self.k as i64)
    }

    fn check(&self) -> Result<()> {
        let half = frac(1, 2);
        if self.n < 3 {
            return Err(Error::InvalidParams(format!("gap family needs n >= 3, got {}", self.n)));
        }
        if self.k < 1 || self.k > self.n - 2 {
            return Err(Error::InvalidParams(format!(
                "gap family needs 1 <= k <= n-2, got k={} with n={}",
                self.k, self.n
            )));
        }
        for (name, v) in [("gamma", &self.gamma), ("epsilon", &self.epsilon)] {
            if !v.is_positive() || *v >= half {
                return Err(Error::InvalidParams(format!(
                    "{name} must lie in (0, 1/2), got {}",
                    rational::format(v)
                )));
            }
        }
        let delta = self.delta();
        if !delta.is_positive() || delta >= frac(1, 4 * self.k as i64) {
            return Err(Error::InvalidParams(format!(
                "delta = {} outside (0, 1/(4k))",
                rational::format(&delta)
            )));
        }
        for i in 2..self.n_tilde() {
            if self.middle_mass(i).is_negative() {
                return Err(Error::InvalidParams(format!(
                    "probability on outcome k+1 negative for group {i}"
                )));
            }
        }
        Ok(())
    }

    fn middle_mass(&self, i: usize) -> Rational {
        rational::one() - pow(&self.gamma, self.n_tilde() - i) - int(2 * self.k as i64 - 2) * self.delta()
    }

    /// `1/gamma^(i-2) - (i-1) + (i-2) gamma`.
    pub fn cost(&self, i: usize) -> Rational {
        let i = i as i64;
        pow(&self.gamma.recip(), (i - 2) as usize) - int(i - 1) + int(i - 2) * &self.gamma
    }
}

fn pow(base: &Rational, e: usize) -> Rational {
    (0..e).fold(rational::one(), |acc, _| acc * base)
}

/// The gap instance: action 1, then `n - n'` copies of it, then the `k`
/// groups `i_1..i_k` for `i = 2..n~-1`, then the target. The target is the
/// last action.
pub fn gen_gap_instance(p: &GapParams) -> Result<Instance> {
    p.check()?;
    let k = p.k;
    let m = k + 2;
    let nt = p.n_tilde();
    let delta = p.delta();
    let mut rewards = vec![rational::zero(); m];
    rewards[m - 1] = pow(&p.gamma.recip(), nt - 2);

    let mut costs = Vec::new();
    let mut probs = Vec::new();
    let mut first = vec![rational::zero(); m];
    for v in first.iter_mut().take(k) {
        *v = frac(1, k as i64);
    }
    for _ in 0..=(p.n - p.n_prime()) {
        costs.push(rational::zero());
        probs.push(first.clone());
    }
    for i in 2..nt {
        for j in 0..k {
            let mut row = vec![rational::zero(); m];
            for (q, v) in row.iter_mut().enumerate().take(k) {
                if q != j {
                    *v = int(2) * &delta;
                }
            }
            row[k] = p.middle_mass(i);
            row[k + 1] = pow(&p.gamma, nt - i);
            costs.push(p.cost(i));
            probs.push(row);
        }
    }
    let mut target = vec![delta.clone(); m];
    target[k] = rational::zero();
    target[k + 1] = rational::one() - int(k as i64) * &delta;
    costs.push(p.cost(nt));
    probs.push(target);
    Instance::new(costs, rewards, probs)
}

/// Random valid instance. Action 1 has zero cost and puts its mass on
/// zero-reward outcomes only; the remaining costs are sorted.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParams("need at least one action and one outcome".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rewards: Vec<Rational> = (0..m)
        .map(|j| if j == 0 { rational::zero() } else { int(rng.gen_range(0..=100)) })
        .collect();
    rewards.sort();
    let zero_reward = rewards.iter().take_while(|r| r.is_zero()).count();

    let draw_row = |rng: &mut ChaCha8Rng, support: usize| loop {
        let w: Vec<i64> = (0..m)
            .map(|j| if j < support { rng.gen_range(0..=100) } else { 0 })
            .collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.iter().map(|&x| frac(x, total)).collect::<Vec<_>>();
        }
    };
    let mut probs = vec![draw_row(&mut rng, zero_reward)];
    for _ in 1..n {
        probs.push(draw_row(&mut rng, m));
    }
    let mut costs: Vec<Rational> = (0..n)
        .map(|i| if i == 0 { rational::zero() } else { frac(rng.gen_range(0..=90), 3) })
        .collect();
    costs[1..].sort();
    Instance::new(costs, rewards, probs)
}

/// Optional annotations carried by instance files.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    pub provenance: Option<String>,
    /// Role of each action, e.g. `"null"`, `"item 3"`, `"target"`.
    pub roles: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    costs: Vec<String>,
    rewards: Vec<String>,
    probs: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    roles: Option<Vec<String>>,
}

pub fn serialize_instance(inst: &Instance) -> String {
    serialize_instance_with(inst, &Metadata::default())
}

pub fn serialize_instance_with(inst: &Instance, meta: &Metadata) -> String {
    let doc = InstanceJson {
        provenance: meta.provenance.clone(),
        costs: inst.costs().iter().map(rational::format).collect(),
        rewards: inst.rewards().iter().map(rational::format).collect(),
        probs: inst
            .probs()
            .iter()
            .map(|r| r.iter().map(rational::format).collect())
            .collect(),
        roles: meta.roles.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    text.push('\n');
    text
}

fn parse_list(values: &[String], field: &str) -> Result<Vec<Rational>> {
    values
        .iter()
        .enumerate()
        .map(|(q, v)| {
            rational::parse(v).map_err(|e| Error::InvalidInstance(format!("{field}[{}]: {e}", q + 1)))
        })
        .collect()
}

/// Parses an instance file without checking the model invariants.
pub fn parse_instance_unchecked(text: &str) -> Result<(Instance, Metadata)> {
    let doc: InstanceJson = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    let costs = parse_list(&doc.costs, "costs")?;
    let rewards = parse_list(&doc.rewards, "rewards")?;
    let probs = doc
        .probs
        .iter()
        .enumerate()
        .map(|(i, row)| parse_list(row, &format!("probs row {}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let inst = Instance::new(costs, rewards, probs)?;
    if let Some(roles) = &doc.roles {
        if roles.len() != inst.num_actions() {
            return Err(Error::InvalidInstance(format!(
                "{} roles for {} actions",
                roles.len(),
                inst.num_actions()
            )));
        }
    }
    Ok((
        inst,
        Metadata {
            provenance: doc.provenance,
            roles: doc.roles,
        },
    ))
}

/// Parses an instance file and rejects rows that are not probability
/// distributions.
pub fn parse_instance_with(text: &str) -> Result<(Instance, Metadata)> {
    let (inst, meta) = parse_instance_unchecked(text)?;
    let bad: Vec<String> = inst
        .validate()
        .into_iter()
        .filter(|v| matches!(v.rule, Rule::RowSum | Rule::NegativeProbability))
        .map(|v| v.to_string())
        .collect();
    if !bad.is_empty() {
        return Err(Error::InvalidInstance(bad.join("; ")));
    }
    Ok((inst, meta))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_with(text).map(|(inst, _)| inst)
}

/// Provenance tags written by the generators.
pub mod provenance {
    pub const SEPARATION: &str = "separation example";
    pub const ADDITIVE: &str = "additive vs multiplicative shifts";
    pub const DUPLICATE: &str = "cheaper duplicate action";
    pub const GAP: &str = "succinctness gap family";
    pub const RANDOM: &str = "random";
}
