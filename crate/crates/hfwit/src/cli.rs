//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 a negative verdict (rejected derivation,
//! failed grid, refuted bound, class violation found by `classify`),
//! 2 usage errors, and 3 and up for library errors (see [`exit_code`]).

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::calculus::{check_derivation, derivation_of, parse_derivation, Derivation, Theory};
use crate::classes::{
    derive_size_poly, parse_defs, print_defs, synth_sigma1, synth_sigma1_bang, validate_class_with,
    Builtin, ClassTag, FunctionDef, OracleEntry, Registry, SchemeNode, SizePolynomial,
    ValidateOpts,
};
use crate::error::{Error, Result};
use crate::eval::{check_size_bound, evaluate_with, EvalOpts, SizeCheck};
use crate::extract::{extract, verify_bundle, verify_phi, GridOpts, WitnessBundle};
use crate::formula::{eval_term, EvalCtx, Universe, Valuation};
use crate::hf::{self, HFSet};
use crate::sexpr;

#[derive(Debug, Parser)]
#[command(name = "hfwit", version, about = "Set functions on hereditarily finite sets and witness extraction")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub cmd: Command,
}

/// Options shared by all commands. Unset flags fall back to the file named
/// by `HFWIT_CONFIG`, then to the defaults in [`RunConfig`].
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Free variables of grids range over V_rank.
    #[arg(long, global = true)]
    pub universe_rank: Option<usize>,
    /// Largest number of grid points before sampling.
    #[arg(long, global = true)]
    pub universe_cap: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Interpreter step cap.
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Cap on the TC size of intermediate values.
    #[arg(long, global = true)]
    pub tc_cap: Option<usize>,
    /// Override the theory of a derivation: T0, T1, T2:<budget>, T3:<level>:<budget>.
    #[arg(long, global = true)]
    pub theory: Option<String>,
    /// Admit normal separation in the PCSF classes.
    #[arg(long, global = true)]
    pub pcsf_plus: bool,
    /// Register an oracle symbol backed by a builtin, as name=builtin.
    #[arg(long = "oracle", global = true)]
    pub oracles: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a derivation file.
    Check { path: PathBuf },
    /// Extract witnesses from a cut-free derivation.
    Extract {
        path: PathBuf,
        /// Write the compiled witness definitions here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the proof obligations here.
        #[arg(long)]
        obligations: Option<PathBuf>,
    },
    /// Evaluate a function on literal sets.
    Eval {
        fname: String,
        args: Vec<String>,
        #[arg(long)]
        defs: Option<PathBuf>,
    },
    /// Check an obligations file over the configured grid.
    Verify {
        obligations: PathBuf,
        /// Also compare these compiled witnesses against the witness terms.
        #[arg(long)]
        defs: Option<PathBuf>,
    },
    /// Validate definitions against a class grammar.
    Classify {
        defs: PathBuf,
        #[arg(long)]
        class: Option<String>,
    },
    /// Print the Σ1 (or Σ1!) definition of a function.
    Sigma1 {
        defs: PathBuf,
        fname: String,
        #[arg(long)]
        bang: bool,
    },
    /// Test a size polynomial on seeded samples.
    Sizecheck {
        fname: String,
        #[arg(long)]
        defs: Option<PathBuf>,
        /// Defaults to the derived polynomial.
        #[arg(long)]
        poly: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub universe_rank: usize,
    pub universe_cap: usize,
    pub seed: u64,
    pub steps: u64,
    pub tc_cap: usize,
    pub theory: Option<Theory>,
    pub pcsf_plus: bool,
    pub oracles: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            universe_rank: 3,
            universe_cap: 4096,
            seed: 7,
            steps: 10_000_000,
            tc_cap: 10_000,
            theory: None,
            pcsf_plus: false,
            oracles: Vec::new(),
        }
    }
}

fn bad(key: &str, v: &str) -> Error {
    Error::Parse {
        line: 0,
        col: 0,
        msg: format!("bad value `{}` for {}", v, key),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| bad(key, v))
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "universe-rank" => self.universe_rank = num(key, v)?,
            "universe-cap" => self.universe_cap = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "steps" => self.steps = num(key, v)?,
            "tc-cap" => self.tc_cap = num(key, v)?,
            "theory" => self.theory = Some(Theory::parse(v.trim()).ok_or_else(|| bad(key, v))?),
            "pcsf-plus" => self.pcsf_plus = num(key, v)?,
            "oracle" => {
                let (n, b) = v.trim().split_once('=').ok_or_else(|| bad(key, v))?;
                self.oracles.push((n.to_string(), b.to_string()));
            }
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    col: 0,
                    msg: format!("unknown config key `{}`", key),
                })
            }
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn parse_file(src: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        for (i, line) in src.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                col: 1,
                msg: "expected key = value".into(),
            })?;
            c.set(k.trim(), v).map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse {
                    line: i + 1,
                    col: 1,
                    msg,
                },
                e => e,
            })?;
        }
        Ok(c)
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(flags: &Flags, file: Option<&str>) -> Result<RunConfig> {
        let mut c = match file {
            Some(src) => RunConfig::parse_file(src)?,
            None => RunConfig::default(),
        };
        if let Some(v) = flags.universe_rank {
            c.universe_rank = v;
        }
        if let Some(v) = flags.universe_cap {
            c.universe_cap = v;
        }
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = flags.steps {
            c.steps = v;
        }
        if let Some(v) = flags.tc_cap {
            c.tc_cap = v;
        }
        if let Some(t) = &flags.theory {
            c.set("theory", t)?;
        }
        c.pcsf_plus |= flags.pcsf_plus;
        for o in &flags.oracles {
            c.set("oracle", o)?;
        }
        Ok(c)
    }

    fn grid(&self) -> GridOpts {
        GridOpts {
            rank: self.universe_rank,
            max_points: self.universe_cap,
            seed: self.seed,
            max_steps: self.steps,
            ..GridOpts::default()
        }
    }

    fn eval_opts(&self) -> EvalOpts {
        EvalOpts {
            max_steps: self.steps,
            max_tc: self.tc_cap,
            ..EvalOpts::default()
        }
    }

    /// The standard registry plus configured oracles and `defs`.
    fn registry(&self, defs: &[FunctionDef]) -> Result<Registry> {
        let mut reg = Registry::standard();
        for (name, b) in &self.oracles {
            reg.register_oracle(builtin_oracle(name, b)?)?;
        }
        for d in defs {
            reg.register_def(d.clone(), 0)?;
        }
        Ok(reg)
    }
}

fn builtin_oracle(name: &str, builtin: &str) -> Result<OracleEntry> {
    let mut o = match builtin {
        "powerset" => OracleEntry::powerset(),
        "pair" | "diff" => {
            let pair = builtin == "pair";
            OracleEntry {
                symbol: String::new(),
                normal_arity: 0,
                safe_arity: 2,
                eval: Arc::new(move |a: &[HFSet]| {
                    Ok(if pair {
                        hf::pair(&a[0], &a[1])
                    } else {
                        hf::diff(&a[0], &a[1])
                    })
                }),
                theta: None,
                size: None,
            }
        }
        _ => {
            let b = Builtin::from_name(builtin)
                .ok_or_else(|| Error::UnknownSymbol(builtin.to_string()))?;
            OracleEntry {
                symbol: String::new(),
                normal_arity: b.normal_slots(),
                safe_arity: b.arity() - b.normal_slots(),
                eval: Arc::new(move |a: &[HFSet]| b.call(a)),
                theta: None,
                size: None,
            }
        }
    };
    o.symbol = name.to_string();
    Ok(o)
}

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 3,
        Error::ResourceLimit(_) => 4,
        Error::MalformedFunction(_) => 5,
        Error::UnknownSymbol(_) => 6,
        Error::DuplicateSymbol(_) => 7,
        Error::Arity(_) => 8,
        Error::NotSigma(_) => 9,
        Error::NotSigmaBang(_) => 10,
        Error::UnsupportedScheme(_) => 11,
        Error::NotCutFree => 12,
        Error::AuditFailed(_) => 13,
        Error::UnsupportedShape(_) => 14,
        Error::MissingPhiWitness(_) => 15,
        Error::SideConditionViolated(_) => 16,
        Error::UnboundConditionVariable(_) => 17,
        Error::ObligationUnverified(_) => 18,
        Error::UnboundVariable(_) => 19,
        Error::CheckFailed(_) => 20,
        Error::ClassViolation(_) => 21,
        Error::Io(_) => 22,
    }
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {}", p.display(), e)))
}

fn write_file(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).map_err(|e| Error::Io(format!("{}: {}", p.display(), e)))
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Parses arguments, reads `HFWIT_CONFIG` and runs the command. Returns
/// the exit code; errors are printed to stderr.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = std::env::var_os("HFWIT_CONFIG")
        .map(|p| read(Path::new(&p)))
        .transpose()
        .and_then(|src| RunConfig::resolve(&cli.flags, src.as_deref()));
    let r = cfg.and_then(|cfg| run(&cli.cmd, &cfg, out));
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Check { path } => cmd_check(path, cfg, out),
        Command::Extract {
            path,
            out: defs,
            obligations,
        } => cmd_extract(path, defs.as_deref(), obligations.as_deref(), cfg, out),
        Command::Eval { fname, args, defs } => cmd_eval(defs.as_deref(), fname, args, cfg, out),
        Command::Verify { obligations, defs } => {
            cmd_verify(obligations, defs.as_deref(), cfg, out)
        }
        Command::Classify { defs, class } => cmd_classify(defs, class.as_deref(), cfg, out),
        Command::Sigma1 { defs, fname, bang } => cmd_sigma1(defs, fname, *bang, cfg, out),
        Command::Sizecheck {
            fname,
            defs,
            poly,
            samples,
        } => cmd_sizecheck(defs.as_deref(), fname, poly.as_deref(), *samples, cfg, out),
    }
}

fn load_derivation(path: &Path, cfg: &RunConfig) -> Result<Derivation> {
    let mut d = parse_derivation(&read(path)?)?;
    if let Some(t) = cfg.theory {
        d.theory = t;
    }
    Ok(d)
}

fn load_defs(path: Option<&Path>) -> Result<Vec<FunctionDef>> {
    match path {
        Some(p) => parse_defs(&read(p)?),
        None => Ok(Vec::new()),
    }
}

pub fn cmd_check(path: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let d = load_derivation(path, cfg)?;
    let reg = cfg.registry(&[])?;
    let rep = check_derivation(&d, &reg);
    if rep.ok() {
        writeln!(
            out,
            "OK {} nodes, {}, nesting {}",
            rep.nodes,
            if rep.cut_free { "cut-free" } else { "with cut" },
            rep.nesting
        )
        .map_err(io)?;
        return Ok(0);
    }
    for v in &rep.violations {
        writeln!(out, "{}", v).map_err(io)?;
    }
    Ok(1)
}

fn checked_bundle(d: &Derivation, reg: &Registry) -> Result<WitnessBundle> {
    let rep = check_derivation(d, reg);
    let cut_free = rep.cut_free;
    rep.into_result()?;
    if !cut_free {
        return Err(Error::NotCutFree);
    }
    extract(d, reg)
}

fn obligations_text(d: &Derivation, b: &WitnessBundle) -> String {
    let mut s = String::from("(obligations\n");
    for (f, t) in &b.witnesses {
        let _ = writeln!(s, "  (witness {} {})", f, t);
    }
    if let Some(l) = &b.condition {
        let _ = writeln!(s, "  (condition {})", l);
    }
    let _ = writeln!(s, "{})", d);
    s
}

pub fn cmd_extract(
    path: &Path,
    defs_out: Option<&Path>,
    obl_out: Option<&Path>,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32> {
    let d = load_derivation(path, cfg)?;
    let reg = cfg.registry(&[])?;
    let b = checked_bundle(&d, &reg)?;
    let defs = b.compile(&reg)?;
    let text = print_defs(&defs);
    match defs_out {
        Some(p) => write_file(p, &text)?,
        None => write!(out, "{}", text).map_err(io)?,
    }
    if let Some(p) = obl_out {
        write_file(p, &obligations_text(&d, &b))?;
    }
    if let Some(l) = &b.condition {
        writeln!(out, "condition {}", l).map_err(io)?;
    }
    writeln!(out, "class {}", b.class()).map_err(io)?;
    Ok(0)
}

/// A definition by name: from `defs`, the registry, or a builtin applied to
/// normal arguments.
fn resolve(name: &str, defs: &[FunctionDef], reg: &Registry) -> Result<FunctionDef> {
    if let Some(d) = defs.iter().find(|d| d.name == name) {
        return Ok(d.clone());
    }
    if let Some(d) = reg.def(name) {
        return Ok((**d).clone());
    }
    let (n, s) = reg
        .signature(name)
        .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
    let body = match name {
        "pair" => SchemeNode::Pair,
        "diff" => SchemeNode::Diff,
        _ => match Builtin::from_name(name) {
            Some(b) => SchemeNode::Lib(b),
            None => {
                return Ok(FunctionDef::new(name, n, s, SchemeNode::Oracle(name.into())));
            }
        },
    };
    Ok(FunctionDef::new(name, n + s, 0, body))
}

pub fn cmd_eval(
    defs: Option<&Path>,
    fname: &str,
    args: &[String],
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32> {
    let defs = load_defs(defs)?;
    let reg = cfg.registry(&defs)?;
    let d = resolve(fname, &defs, &reg)?;
    let vals = args
        .iter()
        .map(|a| HFSet::parse(a))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != d.arity() {
        return Err(Error::Arity(format!(
            "`{}` takes {} arguments, got {}",
            fname,
            d.arity(),
            vals.len()
        )));
    }
    let (n, s) = vals.split_at(d.normal_arity);
    let r = evaluate_with(&d, n, s, &reg, cfg.eval_opts())?;
    writeln!(out, "{}", r.result).map_err(io)?;
    Ok(0)
}

pub fn cmd_verify(
    obligations: &Path,
    defs: Option<&Path>,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32> {
    let src = read(obligations)?;
    let top = sexpr::parse_one(&src)?;
    if top.head() != Some("obligations") {
        return Err(top.error("expected (obligations ...)"));
    }
    let items = top.expect_list()?;
    let deriv = items
        .iter()
        .find(|e| e.head() == Some("deriv"))
        .ok_or_else(|| top.error("missing derivation"))?;
    let mut d = derivation_of(deriv)?;
    if let Some(t) = cfg.theory {
        d.theory = t;
    }
    let reg = cfg.registry(&[])?;
    let b = checked_bundle(&d, &reg)?;
    // the recorded witnesses must be the ones the derivation yields
    let recorded: Vec<String> = items
        .iter()
        .filter(|e| e.head() == Some("witness"))
        .map(|e| e.to_string())
        .collect();
    let fresh: Vec<String> = sexpr::parse_all(&obligations_text(&d, &b))?[0]
        .expect_list()?
        .iter()
        .filter(|e| e.head() == Some("witness"))
        .map(|e| e.to_string())
        .collect();
    if recorded != fresh {
        return Err(Error::ObligationUnverified(
            "recorded witnesses differ from the derivation's".into(),
        ));
    }
    let opts = cfg.grid();
    let mut rep = verify_bundle(&b, &reg, &opts)?;
    if !b.phi.is_empty() {
        let p = verify_phi(&b, &reg, &opts)?;
        rep.checked += p.checked;
        rep.failures.extend(p.failures);
    }
    if let Some(dp) = defs {
        rep.failures
            .extend(compare_defs(&b, &parse_defs(&read(dp)?)?, &reg, cfg)?);
    }
    for f in &rep.failures {
        writeln!(out, "{}", f).map_err(io)?;
    }
    if rep.ok() {
        writeln!(
            out,
            "grid 100% pass ({} points, {} checked)",
            rep.points, rep.checked
        )
        .map_err(io)?;
        Ok(0)
    } else {
        writeln!(out, "grid FAILED ({} failures)", rep.failures.len()).map_err(io)?;
        Ok(1)
    }
}

/// Compiled witnesses against their terms on seeded points.
fn compare_defs(
    b: &WitnessBundle,
    defs: &[FunctionDef],
    reg: &Registry,
    cfg: &RunConfig,
) -> Result<Vec<String>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let (ns, ss) = b.params();
    // unsorted classes take every parameter as normal
    let vars: Vec<String> = ns.iter().chain(&ss).cloned().collect();
    let pool = hf::universe(cfg.universe_rank.min(3))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ctx = EvalCtx::new(reg, Arc::new(Universe::new(pool.clone())));
    ctx.max_steps = cfg.steps;
    let mut failures = Vec::new();
    for (i, (_, t)) in b.witnesses.iter().enumerate() {
        let name = format!("w{}", i);
        let d = defs
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
        let t = b.closed_term(t);
        for _ in 0..cfg.universe_cap.min(256) {
            let point: Vec<HFSet> = vars.iter().map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
            let mut val = Valuation::from_pairs(vars.iter().cloned().zip(point.iter().cloned()));
            ctx.reset_steps();
            let want = eval_term(&t, &mut val, &ctx)?;
            let (n, s) = point.split_at(d.normal_arity.min(point.len()));
            let got = evaluate_with(d, n, s, reg, cfg.eval_opts())?.result;
            if got != want {
                failures.push(format!("{} gives {} where the witness term gives {}", name, got, want));
                break;
            }
        }
    }
    Ok(failures)
}

pub fn cmd_classify(
    defs: &Path,
    class: Option<&str>,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32> {
    let defs = parse_defs(&read(defs)?)?;
    let reg = cfg.registry(&defs)?;
    let opts = ValidateOpts {
        pcsf_plus: cfg.pcsf_plus,
    };
    let tags: Vec<ClassTag> = match class {
        Some(c) => vec![ClassTag::parse(c).ok_or_else(|| bad("--class", c))?],
        None => vec![
            ClassTag::Rud,
            ClassTag::PrimRec,
            ClassTag::Srsf,
            ClassTag::PcsfMinus,
            ClassTag::PcsfIota,
        ],
    };
    let mut code = 0;
    for d in &defs {
        if class.is_some() {
            match validate_class_with(d, tags[0], &reg, opts) {
                Ok(()) => writeln!(out, "{}: {}", d.name, tags[0]).map_err(io)?,
                Err(e) => {
                    writeln!(out, "{}: not {}: {}", d.name, tags[0], e).map_err(io)?;
                    code = 1;
                }
            }
        } else {
            let ok: Vec<String> = tags
                .iter()
                .filter(|t| validate_class_with(d, **t, &reg, opts).is_ok())
                .map(|t| t.to_string())
                .collect();
            let shown = if ok.is_empty() {
                "none".to_string()
            } else {
                ok.join(" ")
            };
            writeln!(out, "{}: {}", d.name, shown).map_err(io)?;
        }
    }
    Ok(code)
}

pub fn cmd_sigma1(
    defs: &Path,
    fname: &str,
    bang: bool,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32> {
    let defs = parse_defs(&read(defs)?)?;
    let reg = cfg.registry(&defs)?;
    let d = resolve(fname, &defs, &reg)?;
    let f = if bang {
        synth_sigma1_bang(&d, &reg)?
    } else {
        synth_sigma1(&d, &reg)?
    };
    writeln!(out, "{}", f).map_err(io)?;
    Ok(0)
}

pub fn cmd_sizecheck(
    defs: Option<&Path>,
    fname: &str,
    poly: Option<&str>,
    samples: usize,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32> {
    let defs = load_defs(defs)?;
    let reg = cfg.registry(&defs)?;
    let d = resolve(fname, &defs, &reg)?;
    let p = match poly {
        Some(s) => SizePolynomial::parse(s)?,
        None => derive_size_poly(&d, &reg)?,
    };
    match check_size_bound(&d, &p, samples, cfg.seed, &reg)? {
        SizeCheck::Pass { checked } => {
            writeln!(out, "pass: {} within {} on {} inputs", fname, p, checked).map_err(io)?;
            Ok(0)
        }
        SizeCheck::Counterexample {
            normals,
            safes,
            tc_card,
            bound,
        } => {
            let show = |v: &[HFSet]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(
                out,
                "counterexample: {} ({}; {}) has card TC {} > {}",
                fname,
                show(&normals),
                show(&safes),
                tc_card,
                bound
            )
            .map_err(io)?;
            Ok(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut all = vec!["hfwit"];
        all.extend_from_slice(args);
        let code = main_with(all, &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn eval_pair() {
        assert_eq!(run_args(&["eval", "pair", "{}", "{{}}"]), (0, "{{} {{}}}\n".into()));
    }

    #[test]
    fn config_file_then_flags() {
        let c = RunConfig::parse_file("seed = 3\n# comment\noracle = p2=pair\nuniverse-rank=2").unwrap();
        assert_eq!((c.seed, c.universe_rank), (3, 2));
        let flags = Flags {
            seed: Some(9),
            ..Flags::default()
        };
        let c = RunConfig::resolve(&flags, Some("seed = 3")).unwrap();
        assert_eq!(c.seed, 9);
        let e = RunConfig::parse_file("\nbogus = 1").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn oracle_flag_registers_symbol() {
        let (code, out) = run_args(&["--oracle", "u=union", "eval", "u", "{{{}}}"]);
        assert_eq!((code, out.as_str()), (0, "{{}}\n"));
    }

    #[test]
    fn exit_codes_are_distinct() {
        let errs = [
            Error::Parse { line: 0, col: 0, msg: String::new() },
            Error::ResourceLimit(String::new()),
            Error::MalformedFunction(String::new()),
            Error::UnknownSymbol(String::new()),
            Error::DuplicateSymbol(String::new()),
            Error::Arity(String::new()),
            Error::NotSigma(String::new()),
            Error::NotSigmaBang(String::new()),
            Error::UnsupportedScheme(String::new()),
            Error::NotCutFree,
            Error::AuditFailed(String::new()),
            Error::UnsupportedShape(String::new()),
            Error::MissingPhiWitness(0),
            Error::SideConditionViolated(String::new()),
            Error::UnboundConditionVariable(String::new()),
            Error::ObligationUnverified(String::new()),
            Error::UnboundVariable(String::new()),
            Error::CheckFailed(String::new()),
            Error::ClassViolation(String::new()),
            Error::Io(String::new()),
        ];
        let mut codes: Vec<i32> = errs.iter().map(exit_code).collect();
        assert!(codes.iter().all(|c| *c > 2));
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), errs.len());
    }

    #[test]
    fn unknown_function() {
        assert_eq!(run_args(&["eval", "nope"]).0, 6);
    }
}
