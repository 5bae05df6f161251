//! Command-line front end.
//!
//! Every subcommand writes either pretty JSON or an aligned text table to
//! the supplied writer and returns a process exit code: 0 when the
//! computation succeeded and every embedded check passed, 1 on a failed
//! check or runtime error, 2 on a usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::Serialize;
use serde_json::json;

use crate::ambiguous::{self, approx_contract, balance, optimal_contract_with, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{self, provenance, GapParams, Metadata};
use crate::lp;
use crate::model::{ActionSet, Instance, Partition, PaymentFunction};
use crate::rational::{self, Rational};
use crate::reductions::{self, MakespanInput, MakespanReduction, Matching3dInput, BRUTE_FORCE_CEILING};

#[derive(Parser, Debug)]
#[command(name = "succinct", version, about = "Exact optimal contracts with ambiguity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Worker threads for the partition sweep (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Run solves whose partition count exceeds the ceiling.
    #[arg(long, global = true)]
    pub force: bool,

    /// Partition ceiling for solves.
    #[arg(long, env = "SUCCINCT_PARTITION_CEILING", global = true)]
    pub ceiling: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimal k-ambiguous contract for an instance.
    Solve(SolveArgs),
    /// Which actions are implementable with k payment functions.
    Implementable(SolveArgs),
    /// Succinctness gap for a range of k.
    Gap(GapArgs),
    /// Build a contract instance from a makespan or 3D-matching input.
    Reduce(ReduceArgs),
    /// Write a fixture instance.
    Generate(GenerateArgs),
    /// Run consistency checks on an instance or on the built-in fixtures.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Number of payment functions (default: n - 1).
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
    #[arg(long)]
    pub monotone: bool,
    /// Only consider this action (1-based).
    #[arg(long)]
    pub action: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GapArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Report only this k (default: every k from 1 to n - 1).
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReduceKind {
    Makespan,
    #[value(name = "3dm")]
    Matching3d,
    MakespanMono,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    pub kind: ReduceKind,
    /// Input file: `{"values": [...], "machines": k}` or `{"n": n, "triples": [...]}`.
    #[arg(long)]
    pub instance: PathBuf,
    /// Solve the reduced instance and map the optimum back.
    #[arg(long)]
    pub solve: bool,
    /// Write the reduced instance here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Separation,
    Additive,
    Duplicate,
    Gap,
    Random,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    pub family: Family,
    /// Number of actions (gap, random).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Ambiguity level the gap instance targets.
    #[arg(short = 'k', long = "k", default_value_t = 1)]
    pub k: usize,
    /// Number of outcomes (random).
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value = "1/100")]
    pub gamma: String,
    #[arg(long, default_value = "1/100")]
    pub epsilon: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Instances to check (default: the built-in fixture set).
    #[arg(long)]
    pub instance: Vec<PathBuf>,
    /// Also check the approximation bound on this many random instances.
    #[arg(long, default_value_t = 0)]
    pub seeds: u64,
    /// First random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
            Err(e) => Err(Error::InvalidParams(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(&cli, &mut buf),
    };
    if out.write_all(&buf).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Ok(false) means the command ran but a check failed.
fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    let ctx = Context {
        format: cli.format,
        ceiling: if cli.force {
            None
        } else {
            Some(cli.ceiling.unwrap_or(ambiguous::DEFAULT_PARTITION_CEILING))
        },
    };
    match &cli.command {
        Command::Solve(a) => ctx.solve(a, out),
        Command::Implementable(a) => ctx.implementable(a, out),
        Command::Gap(a) => ctx.gap(a, out),
        Command::Reduce(a) => ctx.reduce(a, out),
        Command::Generate(a) => ctx.generate(a, out),
        Command::Verify(a) => ctx.verify(a, out),
    }
}

struct Context {
    format: Format,
    ceiling: Option<u64>,
}

fn io(e: std::io::Error) -> Error {
    Error::InvalidParams(format!("write failed: {e}"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidParams(format!("cannot write {}: {e}", path.display())))
}

/// Loads an instance and insists on the full model invariants.
fn load_instance(path: &Path) -> Result<Instance> {
    let inst = instances::parse_instance(&read(path)?)?;
    let bad = inst.validate();
    if !bad.is_empty() {
        let msg: Vec<String> = bad.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidInstance(msg.join("; ")));
    }
    Ok(inst)
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json(e.to_string()))?;
    writeln!(out, "{text}").map_err(io)
}

fn exact(v: &Rational) -> String {
    rational::format(v)
}

/// Exact value followed by a labeled decimal approximation.
fn shown(v: &Rational) -> String {
    let s = exact(v);
    if v.is_integer() {
        s
    } else {
        format!("{s} (approx {:.6})", rational::approx(v))
    }
}

fn shown_opt(v: &Option<Rational>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), shown)
}

fn default_k(inst: &Instance, k: Option<usize>) -> Result<usize> {
    match k {
        Some(0) => Err(Error::InvalidParams("k must be at least 1".into())),
        Some(k) => Ok(k),
        None => Ok(inst.num_actions().saturating_sub(1).max(1)),
    }
}

fn action_arg(inst: &Instance, action: Option<usize>) -> Result<Option<Vec<usize>>> {
    match action {
        None => Ok(None),
        Some(a) if a >= 1 && a <= inst.num_actions() => Ok(Some(vec![a - 1])),
        Some(a) => Err(Error::InvalidParams(format!(
            "action {a} out of range 1..={}",
            inst.num_actions()
        ))),
    }
}

fn print_report(out: &mut dyn Write, r: &SolveReport) -> Result<()> {
    let mut w = |s: String| writeln!(out, "{s}").map_err(io);
    w(format!("k          {}", r.k))?;
    w(format!("monotone   {}", r.monotone))?;
    match &r.contract {
        Some(c) => {
            w(format!("action     {}", c.action() + 1))?;
            w(format!("utility    {}", shown_opt(&r.principal_utility)))?;
            w(format!("payment    {}", shown_opt(&r.expected_payment)))?;
            if let Some(p) = &r.winning_partition {
                w(format!("partition  {p}"))?;
            }
            for (q, t) in c.support().iter().enumerate() {
                w(format!("t{:<9} {t}", q + 1))?;
            }
        }
        None => w("action     none implementable".into())?,
    }
    w(String::new())?;
    w(format!("{:<8}{:<28}{:<28}{}", "action", "utility", "payment", "partitions"))?;
    for a in &r.per_action {
        w(format!(
            "{:<8}{:<28}{:<28}{}",
            a.action + 1,
            shown_opt(&a.principal_utility),
            shown_opt(&a.expected_payment),
            a.partitions_examined
        ))?;
    }
    Ok(())
}

impl Context {
    fn options(&self, actions: Option<Vec<usize>>) -> SolveOptions {
        SolveOptions {
            ceiling: self.ceiling,
            actions,
        }
    }

    fn solve(&self, a: &SolveArgs, out: &mut dyn Write) -> Result<bool> {
        let inst = load_instance(&a.instance)?;
        let k = default_k(&inst, a.k)?;
        let opts = self.options(action_arg(&inst, a.action)?);
        let report = optimal_contract_with(&inst, k, a.monotone, &opts)?;
        if let Some(c) = &report.contract {
            if !inst.is_ic(c, c.action())? {
                return Err(Error::Precondition("solver returned a contract that is not IC".into()));
            }
        }
        match self.format {
            Format::Json => emit_json(out, &report)?,
            Format::Table => print_report(out, &report)?,
        }
        Ok(true)
    }

    fn implementable(&self, a: &SolveArgs, out: &mut dyn Write) -> Result<bool> {
        let inst = load_instance(&a.instance)?;
        let k = default_k(&inst, a.k)?;
        let actions = action_arg(&inst, a.action)?.unwrap_or_else(|| inst.action_ids());
        if let Some(c) = self.ceiling {
            let count = ambiguous::sweep_size(&inst, &actions, k);
            if count > c.into() {
                return Err(Error::PartitionCeiling {
                    count: count.to_string(),
                    ceiling: c,
                });
            }
        }
        let mut rows = Vec::new();
        for &i in &actions {
            rows.push((i, ambiguous::is_implementable_k(&inst, i, k, a.monotone)?));
        }
        match self.format {
            Format::Json => emit_json(
                out,
                &json!({
                    "k": k,
                    "monotone": a.monotone,
                    "actions": rows.iter().map(|(i, ok)| json!({"action": i + 1, "implementable": ok})).collect::<Vec<_>>(),
                }),
            )?,
            Format::Table => {
                writeln!(out, "k = {k}{}", if a.monotone { " (monotone)" } else { "" }).map_err(io)?;
                writeln!(out, "{:<8}implementable", "action").map_err(io)?;
                for (i, ok) in rows {
                    writeln!(out, "{:<8}{ok}", i + 1).map_err(io)?;
                }
            }
        }
        Ok(true)
    }

    fn gap(&self, a: &GapArgs, out: &mut dyn Write) -> Result<bool> {
        let inst = load_instance(&a.instance)?;
        let n = inst.num_actions();
        if n < 2 {
            return Err(Error::InvalidParams("the gap needs at least two actions".into()));
        }
        let ks: Vec<usize> = match a.k {
            Some(k) if k >= 1 && k < n => vec![k],
            Some(k) => return Err(Error::InvalidParams(format!("k = {k} outside 1..={}", n - 1))),
            None => (1..n).collect(),
        };
        let opts = self.options(None);
        let utility = |k: usize| -> Result<Rational> {
            Ok(optimal_contract_with(&inst, k, false, &opts)?
                .principal_utility
                .unwrap_or_else(rational::zero))
        };
        let full = utility(n - 1)?;
        let mut rows = Vec::new();
        for k in ks {
            let opt = utility(k)?;
            let rho = (!full.is_zero()).then(|| &opt / &full);
            rows.push((k, opt, rho));
        }
        match self.format {
            Format::Json => emit_json(
                out,
                &json!({
                    "unrestricted": exact(&full),
                    "gaps": rows.iter().map(|(k, opt, rho)| json!({
                        "k": k,
                        "optimum": exact(opt),
                        "rho": rho.as_ref().map_or_else(|| "undefined".to_string(), exact),
                    })).collect::<Vec<_>>(),
                }),
            )?,
            Format::Table => {
                writeln!(out, "unrestricted optimum {}", shown(&full)).map_err(io)?;
                writeln!(out, "{:<4}{:<28}rho", "k", "optimum").map_err(io)?;
                for (k, opt, rho) in rows {
                    let rho = rho.as_ref().map_or_else(|| "undefined".to_string(), shown);
                    writeln!(out, "{k:<4}{:<28}{rho}", shown(&opt)).map_err(io)?;
                }
            }
        }
        Ok(true)
    }

    fn reduce(&self, a: &ReduceArgs, out: &mut dyn Write) -> Result<bool> {
        let text = read(&a.instance)?;
        match a.kind {
            ReduceKind::Makespan | ReduceKind::MakespanMono => {
                let input = MakespanInput::parse(&text)?;
                let (red, tag) = if a.kind == ReduceKind::Makespan {
                    (reductions::makespan_to_instance(&input)?, "makespan reduction")
                } else {
                    (reductions::monotone_makespan_to_instance(&input)?, "monotone makespan reduction")
                };
                if !a.solve {
                    self.write_reduced(a, &red.reduced, tag, Some(out))?;
                    return Ok(true);
                }
                self.write_reduced(a, &red.reduced, tag, None)?;
                self.solve_makespan(&red, out)
            }
            ReduceKind::Matching3d => {
                let input = Matching3dInput::parse(&text)?;
                let red = reductions::matching3d_to_instance(&input)?;
                let tag = "3d matching reduction";
                if !a.solve {
                    self.write_reduced(a, &red, tag, Some(out))?;
                    return Ok(true);
                }
                self.write_reduced(a, &red, tag, None)?;
                self.solve_matching(&input, &red, out)
            }
        }
    }

    /// Writes the reduced instance to `--out`, or to `out` when given and
    /// no file was requested.
    fn write_reduced(
        &self,
        a: &ReduceArgs,
        red: &reductions::ReducedInstance,
        tag: &str,
        out: Option<&mut dyn Write>,
    ) -> Result<()> {
        let text = instances::serialize_instance_with(&red.instance, &red.metadata(tag));
        match (&a.out, out) {
            (Some(path), _) => write_file(path, &text),
            (None, Some(w)) => w.write_all(text.as_bytes()).map_err(io),
            (None, None) => Ok(()),
        }
    }

    fn solve_makespan(&self, red: &MakespanReduction, out: &mut dyn Write) -> Result<bool> {
        let sol = reductions::solve_makespan(red, &self.options(None))?;
        let brute = match reductions::brute_force_makespan(&red.input, Some(BRUTE_FORCE_CEILING)) {
            Ok(v) => Some(v),
            Err(Error::PartitionCeiling { .. }) => None,
            Err(e) => return Err(e),
        };
        let n = rational::int(red.input.n() as i64);
        let payment = sol.report.as_ref().and_then(|r| r.expected_payment.clone());
        let payment_ok = payment.as_ref().is_none_or(|p| p * &n == sol.makespan);
        let brute_ok = brute.as_ref().is_none_or(|b| *b == sol.makespan);
        let ok = payment_ok && brute_ok;
        match self.format {
            Format::Json => emit_json(
                out,
                &json!({
                    "monotone": red.monotone,
                    "machines": red.input.machines,
                    "target": red.target() + 1,
                    "partition": &sol.partition,
                    "makespan": exact(&sol.makespan),
                    "brute_force": brute.as_ref().map(exact),
                    "expected_payment": payment.as_ref().map(exact),
                    "consistent": ok,
                }),
            )?,
            Format::Table => {
                writeln!(out, "partition    {}", sol.partition).map_err(io)?;
                writeln!(out, "makespan     {}", shown(&sol.makespan)).map_err(io)?;
                let b = brute.as_ref().map_or_else(|| "skipped".to_string(), shown);
                writeln!(out, "brute force  {b}").map_err(io)?;
                let p = payment.as_ref().map_or_else(|| "not solved".to_string(), shown);
                writeln!(out, "payment      {p}").map_err(io)?;
                writeln!(out, "consistent   {ok}").map_err(io)?;
            }
        }
        Ok(ok)
    }

    fn solve_matching(&self, input: &Matching3dInput, red: &reductions::ReducedInstance, out: &mut dyn Write) -> Result<bool> {
        let report = optimal_contract_with(&red.instance, input.n, false, &self.options(None))?;
        let utility = report.principal_utility.clone().unwrap_or_else(rational::zero);
        let target = red.target();
        let target_payment = report
            .per_action
            .iter()
            .find(|s| s.action == target)
            .and_then(|s| s.expected_payment.clone());
        let matching = input.perfect_matching();
        let ok = reductions::matching3d_regime_holds(&utility, matching.is_some());
        match self.format {
            Format::Json => emit_json(
                out,
                &json!({
                    "k": input.n,
                    "matchable": matching.is_some(),
                    "action": report.action().map(|a| a + 1),
                    "role": report.action().map(|a| red.roles[a].to_string()),
                    "utility": exact(&utility),
                    "target_payment": target_payment.as_ref().map(exact),
                    "consistent": ok,
                }),
            )?,
            Format::Table => {
                writeln!(out, "matchable       {}", matching.is_some()).map_err(io)?;
                if let Some(a) = report.action() {
                    writeln!(out, "action          {} ({})", a + 1, red.roles[a]).map_err(io)?;
                }
                writeln!(out, "utility         {}", shown(&utility)).map_err(io)?;
                let p = target_payment.as_ref().map_or_else(|| "not implementable".to_string(), shown);
                writeln!(out, "target payment  {p}").map_err(io)?;
                writeln!(out, "consistent      {ok}").map_err(io)?;
            }
        }
        Ok(ok)
    }

    fn generate(&self, a: &GenerateArgs, out: &mut dyn Write) -> Result<bool> {
        let (inst, tag) = match a.family {
            Family::Separation => (instances::gen_separation(), provenance::SEPARATION),
            Family::Additive => (instances::gen_additive_vs_multiplicative(), provenance::ADDITIVE),
            Family::Duplicate => (instances::gen_cheaper_duplicate(), provenance::DUPLICATE),
            Family::Gap => {
                let p = GapParams::new(a.n, a.k, rational::parse(&a.gamma)?, rational::parse(&a.epsilon)?)?;
                (instances::gen_gap_instance(&p)?, provenance::GAP)
            }
            Family::Random => (instances::random_instance(a.n, a.m, a.seed)?, provenance::RANDOM),
        };
        let meta = Metadata {
            provenance: Some(tag.to_string()),
            roles: None,
        };
        let text = instances::serialize_instance_with(&inst, &meta);
        match &a.out {
            Some(path) => write_file(path, &text)?,
            None => out.write_all(text.as_bytes()).map_err(io)?,
        }
        Ok(true)
    }

    fn verify(&self, a: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
        let mut log = CheckLog::default();
        if a.instance.is_empty() {
            let gap = instances::gen_gap_instance(&GapParams::with_defaults(3, 1)?)?;
            for (name, inst) in [
                ("separation", instances::gen_separation()),
                ("additive", instances::gen_additive_vs_multiplicative()),
                ("duplicate", instances::gen_cheaper_duplicate()),
                ("gap", gap),
            ] {
                self.check_instance(&mut log, name, &inst);
            }
            for (values, k) in [(&[1i64, 2, 3][..], 2), (&[3, 1, 2, 2][..], 2), (&[4, 1, 2][..], 3)] {
                let input = MakespanInput::from_integers(values, k)?;
                let name = format!("makespan {values:?} k={k}");
                log.record(&format!("{name} predicates and round trip"), check_makespan(&input));
            }
        } else {
            for path in &a.instance {
                let name = path.display().to_string();
                match read(path).and_then(|t| instances::parse_instance_unchecked(&t)) {
                    Err(e) => log.record(&format!("{name} parse"), Err(e.to_string())),
                    Ok((inst, _)) => self.check_instance(&mut log, &name, &inst),
                }
            }
        }
        for seed in a.seed..a.seed + a.seeds {
            let n = 2 + (seed % 4) as usize;
            let m = 2 + (seed % 3) as usize;
            let name = format!("random seed {seed} approximation bound");
            let res = instances::random_instance(n, m, seed)
                .map_err(|e| e.to_string())
                .and_then(|inst| check_approx(&inst));
            log.record(&name, res);
        }
        match self.format {
            Format::Json => emit_json(
                out,
                &json!({
                    "passed": log.failures == 0,
                    "checks": log.lines.iter().map(|(name, res)| json!({
                        "check": name,
                        "ok": res.is_ok(),
                        "detail": res.as_ref().err(),
                    })).collect::<Vec<_>>(),
                }),
            )?,
            Format::Table => {
                for (name, res) in &log.lines {
                    match res {
                        Ok(()) => writeln!(out, "PASS {name}").map_err(io)?,
                        Err(msg) => writeln!(out, "FAIL {name}: {msg}").map_err(io)?,
                    }
                }
            }
        }
        Ok(log.failures == 0)
    }

    fn check_instance(&self, log: &mut CheckLog, name: &str, inst: &Instance) {
        let bad = inst.validate();
        let valid = bad.is_empty();
        log.record(
            &format!("{name} validation"),
            if valid {
                Ok(())
            } else {
                Err(bad.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))
            },
        );
        log.record(&format!("{name} round trip"), check_round_trip(inst));
        if !valid {
            return;
        }
        let n = inst.num_actions();
        if let Some(c) = self.ceiling {
            let size = ambiguous::sweep_size(inst, &inst.action_ids(), n.saturating_sub(1).max(1));
            if size > c.into() {
                log.record(&format!("{name} solver checks"), Err(format!("skipped: {size} partitions exceed the ceiling")));
                return;
            }
        }
        log.record(&format!("{name} balancing consistency"), check_balancing(inst));
        log.record(&format!("{name} approximation bound"), check_approx(inst));
    }
}

#[derive(Default)]
struct CheckLog {
    lines: Vec<(String, std::result::Result<(), String>)>,
    failures: usize,
}

impl CheckLog {
    fn record(&mut self, name: &str, res: std::result::Result<(), String>) {
        if res.is_err() {
            self.failures += 1;
        }
        self.lines.push((name.to_string(), res));
    }
}

type Check = std::result::Result<(), String>;

fn fail(e: Error) -> String {
    e.to_string()
}

fn check_round_trip(inst: &Instance) -> Check {
    let text = instances::serialize_instance(inst);
    let (back, _) = instances::parse_instance_unchecked(&text).map_err(fail)?;
    if back != *inst || instances::serialize_instance(&back) != text {
        return Err("serialize/parse is not the identity".into());
    }
    Ok(())
}

/// Balancing an IC contract for its own action must reproduce it, and
/// every optimal per-action contract must be IC.
fn check_balancing(inst: &Instance) -> Check {
    let k = inst.num_actions().saturating_sub(1).clamp(1, 2);
    for i in inst.action_ids() {
        let Some((tau, _)) = ambiguous::optimal_for_action(inst, i, k, false).map_err(fail)? else {
            continue;
        };
        if !inst.is_ic(&tau, i).map_err(fail)? {
            return Err(format!("optimal contract for action {} is not IC", i + 1));
        }
        let again = balance(inst, i, tau.support()).map_err(fail)?;
        if again != tau {
            return Err(format!("balancing changed the IC contract for action {}", i + 1));
        }
        if let Some((t, _)) = lp::min_pay_contract(inst, i, false).map_err(fail)? {
            let single = balance(inst, i, std::slice::from_ref(&t)).map_err(fail)?;
            if single.support() != [t] {
                return Err(format!("balancing changed the classic contract for action {}", i + 1));
            }
        }
    }
    Ok(())
}

/// For every k, the k-optimum and the constructive contract both reach
/// a `1/(n-k)` share of the unrestricted optimum.
fn check_approx(inst: &Instance) -> Check {
    let n = inst.num_actions();
    if n < 2 {
        return Ok(());
    }
    let full = ambiguous::optimal_utility(inst, n - 1, false)
        .map_err(fail)?
        .unwrap_or_else(rational::zero);
    for k in 1..n {
        let bound = &full / rational::int((n - k) as i64);
        let opt = ambiguous::optimal_utility(inst, k, false)
            .map_err(fail)?
            .unwrap_or_else(rational::zero);
        if opt < bound {
            return Err(format!("k={k}: optimum {} below {}", exact(&opt), exact(&bound)));
        }
        let tau = approx_contract(inst, k).map_err(fail)?;
        if tau.k() > k || !inst.is_ic(&tau, tau.action()).map_err(fail)? {
            return Err(format!("k={k}: constructed contract is not an IC {k}-ambiguous contract"));
        }
        let u = tau.principal_utility(inst).map_err(fail)?;
        if u < bound {
            return Err(format!("k={k}: constructed contract earns {} below {}", exact(&u), exact(&bound)));
        }
    }
    Ok(())
}

/// Closed-form protection tests against the generic predicate, and the
/// partition-to-contract map against the makespan.
fn check_makespan(input: &MakespanInput) -> Check {
    let n = input.n();
    for red in [
        reductions::makespan_to_instance(input).map_err(fail)?,
        reductions::monotone_makespan_to_instance(input).map_err(fail)?,
    ] {
        let ground: Vec<usize> = (0..n).collect();
        let parts: Vec<Partition> = ambiguous::enumerate_partitions(&ground, input.machines)
            .map_err(fail)?
            .collect();
        let inst = red.instance();
        let nn = rational::int(n as i64);
        for part in &parts {
            let tau = reductions::partition_to_contract(&red, part).map_err(fail)?;
            if !inst.is_ic(&tau, red.target()).map_err(fail)? {
                return Err(format!("contract for {part} is not IC"));
            }
            let pay = tau.expected_payment(inst).map_err(fail)?;
            if pay * &nn != input.makespan(part) {
                return Err(format!("contract for {part} does not pay makespan/n"));
            }
            let mut probes: Vec<PaymentFunction> = tau.support().to_vec();
            for t in tau.support() {
                let mut p = t.payments().to_vec();
                let last = p.len() - 1;
                if p[last] > rational::zero() {
                    p[last] -= rational::frac(1, 7);
                    p[last] = p[last].clone().max(rational::zero());
                    probes.push(PaymentFunction::new(p).map_err(fail)?);
                }
            }
            for t in &probes {
                if red.monotone && !t.is_monotone() {
                    continue;
                }
                for q in 0..n {
                    let closed = red.protects(t, q).map_err(fail)?;
                    let generic = inst.protects(t, red.target(), &[red.item_action(q)]).map_err(fail)?;
                    if closed != generic {
                        return Err(format!("protection test disagrees for item {} under {t}", q + 1));
                    }
                }
            }
        }
    }
    Ok(())
}
