//! Command-line front end: JSON in, JSON reports out.

use std::io::Read;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::check_prime;
use crate::error::{Error, Result};
use crate::rank1::classify_rank1;
use crate::series::{LaurentPoly, LocalSeries, Ring, Side};
use crate::special::{self, SpecialSide};
use crate::tower::{
    self, AnyTower, AnyWitness, GaugeWitness, OracleConfig, OracleResult, Tower, TowerRepr, WitnessRepr,
};
use crate::unipotent::{decide_trivial, glue_rank2, normalize_support, UnipClass, UnipClassRepr};

#[derive(Debug, Parser)]
#[command(name = "frobtower", version, about = "Frobenius-descent towers in characteristic p")]
pub struct Cli {
    /// Required prime of every input.
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Levels printed in witnesses and checked by `verify`.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long = "max-depth", global = true, default_value_t = 32)]
    pub max_depth: usize,
    #[arg(long, global = true, default_value_t = 40)]
    pub precision: i64,
    /// Oracle exponent window.
    #[arg(long, global = true, default_value_t = 4)]
    pub window: i64,
    /// Oracle term bound per entry.
    #[arg(long, global = true, default_value_t = 3)]
    pub terms: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RingArg {
    Gm,
    Disc0,
    Discinf,
}

impl From<RingArg> for Ring {
    fn from(r: RingArg) -> Ring {
        match r {
            RingArg::Gm => Ring::Gm,
            RingArg::Disc0 => Ring::Disc0,
            RingArg::Discinf => Ring::DiscInf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Zero,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpecialArg {
    Rsi,
    Rs0,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class in Z_p/Z of a rank-one tower, or the diagonal classes of a triangular one.
    Classify { input: Option<PathBuf> },
    /// Support normalization of a unipotent class.
    Normalize { input: Option<PathBuf> },
    /// Triviality of a unipotent class over a ring.
    Decide {
        #[arg(long, value_enum)]
        ring: RingArg,
        input: Option<PathBuf>,
    },
    /// Lift a triangular tower over k((t)) to k[t^±1].
    Lift { input: Option<PathBuf> },
    /// Glue data at 0 and at ∞ (classes or triangular towers).
    Glue { at0: PathBuf, atinf: PathBuf },
    /// Restrict a tower over k[t^±1] to a disc.
    Restrict {
        #[arg(long, value_enum)]
        side: SideArg,
        input: Option<PathBuf>,
    },
    /// Check a gauge witness between two towers.
    Verify { source: PathBuf, target: PathBuf, witness: PathBuf },
    /// Whether a triangular tower splits on one side.
    IsSpecial {
        #[arg(long, value_enum)]
        side: SpecialArg,
        input: Option<PathBuf>,
    },
    /// Bounded exhaustive search for a gauge between two towers.
    Oracle { source: PathBuf, target: PathBuf },
}

/// Validated run configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub p: Option<u64>,
    pub depth: Option<usize>,
    pub max_depth: usize,
    pub precision: i64,
    pub window: i64,
    pub terms: usize,
}

impl RunConfig {
    pub fn new(cli: &Cli) -> Result<Self> {
        if let Some(p) = cli.p {
            check_prime(p)?;
        }
        if let Some(n) = cli.depth {
            if n > cli.max_depth {
                return Err(Error::Parse(format!("depth {n} exceeds max-depth {}", cli.max_depth)));
            }
        }
        if cli.precision < 1 {
            return Err(Error::Parse("precision must be at least 1".into()));
        }
        Ok(RunConfig {
            p: cli.p,
            depth: cli.depth,
            max_depth: cli.max_depth,
            precision: cli.precision,
            window: cli.window,
            terms: cli.terms,
        })
    }

    fn check_p(&self, p: u64) -> Result<()> {
        match self.p {
            Some(q) if q != p => Err(Error::ShapeMismatch(format!("input has p = {p}, expected {q}"))),
            _ => Ok(()),
        }
    }
}

/// Any object accepted on input.
#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Tower(AnyTower),
    Class(UnipClass),
    Witness(AnyWitness),
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Parses and validates a JSON object; the kind is read off its keys.
pub fn parse_input(text: &str) -> Result<Input> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    let v: Value = serde_json::from_str(text).map_err(parse_err)?;
    let obj = v.as_object().ok_or_else(|| Error::Parse("expected a JSON object".into()))?;
    if obj.contains_key("matrices") && obj.contains_key("twist") {
        let r: TowerRepr = serde_json::from_value(v).map_err(parse_err)?;
        let t = AnyTower::from_repr(r)?;
        t.validate().map_err(Error::Validation)?;
        Ok(Input::Tower(t))
    } else if obj.contains_key("matrices") {
        let r: WitnessRepr = serde_json::from_value(v).map_err(parse_err)?;
        let w = AnyWitness::from_repr(r)?;
        match &w {
            AnyWitness::Gm(w) => w.validate(),
            AnyWitness::Local(w) => w.validate(),
        }
        .map_err(Error::Validation)?;
        Ok(Input::Witness(w))
    } else if obj.contains_key("tail") || obj.contains_key("prefix") {
        let r: UnipClassRepr = serde_json::from_value(v).map_err(parse_err)?;
        Ok(Input::Class(UnipClass::from_repr(r)?))
    } else {
        Err(Error::Parse("unrecognized object: expected a tower, class or witness".into()))
    }
}

/// Serializes an object in the format [`parse_input`] reads.
pub fn format_input(x: &Input) -> Result<String> {
    match x {
        Input::Tower(t) => to_string(&t.to_repr()),
        Input::Class(c) => to_string(c),
        Input::Witness(AnyWitness::Gm(w)) => to_string(w),
        Input::Witness(AnyWitness::Local(w)) => to_string(w),
    }
}

fn to_string<T: Serialize>(x: &T) -> Result<String> {
    serde_json::to_string(x).map_err(parse_err)
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(parse_err)
}

fn read_source(path: Option<&PathBuf>) -> Result<String> {
    let mut s = String::new();
    match path {
        Some(p) => {
            s = std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        }
        None => {
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Parse(format!("stdin: {e}")))?;
        }
    }
    Ok(s)
}

/// Exit code of a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => 2,
        Error::PrecisionInsufficient(_)
        | Error::NonStabilized { .. }
        | Error::Overflow
        | Error::NotLaurent(_)
        | Error::SearchSpaceTooLarge { .. } => 3,
        _ => 4,
    }
}

/// JSON body reported for a failed run.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": format!("{e}") });
    if let Error::Validation(viol) = e {
        v["violation"] = to_value(viol).unwrap_or(Value::Null);
    }
    v
}

fn input_p(x: &Input) -> u64 {
    match x {
        Input::Tower(AnyTower::Gm(t)) => t.p,
        Input::Tower(AnyTower::Local(t)) => t.p,
        Input::Class(c) => c.p,
        Input::Witness(AnyWitness::Gm(w)) => w.p,
        Input::Witness(AnyWitness::Local(w)) => w.p,
    }
}

/// Reads inputs through `read`, which maps an optional path to its text.
struct Ctx<'a> {
    cfg: RunConfig,
    read: &'a dyn Fn(Option<&PathBuf>) -> Result<String>,
}

impl Ctx<'_> {
    fn load(&self, path: Option<&PathBuf>) -> Result<Input> {
        let x = parse_input(&(self.read)(path)?)?;
        self.cfg.check_p(input_p(&x))?;
        Ok(x)
    }

    fn class(&self, path: Option<&PathBuf>) -> Result<UnipClass> {
        match self.load(path)? {
            Input::Class(c) => Ok(c),
            _ => Err(Error::ShapeMismatch("expected a unipotent class".into())),
        }
    }

    fn tower(&self, path: Option<&PathBuf>) -> Result<AnyTower> {
        match self.load(path)? {
            Input::Tower(t) => Ok(t),
            _ => Err(Error::ShapeMismatch("expected a tower".into())),
        }
    }

    fn gm(&self, path: Option<&PathBuf>) -> Result<Tower<LaurentPoly>> {
        match self.tower(path)? {
            AnyTower::Gm(t) => Ok(t),
            AnyTower::Local(_) => Err(Error::ShapeMismatch("expected a tower over gm".into())),
        }
    }

    fn local(&self, path: Option<&PathBuf>) -> Result<Tower<LocalSeries>> {
        match self.tower(path)? {
            AnyTower::Local(t) => Ok(t),
            AnyTower::Gm(_) => Err(Error::ShapeMismatch("expected a tower over a disc".into())),
        }
    }

    fn upto(&self, extra: usize) -> usize {
        self.cfg.depth.unwrap_or(extra)
    }
}

fn classify<E: crate::series::Coeff>(t: &Tower<E>) -> Result<Value> {
    if t.rank() == 1 {
        return to_value(&classify_rank1(t)?);
    }
    Ok(json!({ "diagonal": special::diagonal_classes(t)? }))
}

fn verify<E: crate::series::Coeff>(a: &Tower<E>, b: &Tower<E>, w: &GaugeWitness<E>, cfg: &RunConfig) -> Result<Value> {
    let levels = cfg.depth.unwrap_or(0).max(a.depth()).max(b.depth());
    let report = tower::verify_witness_report(&a.extended(levels)?, &b.extended(levels)?, w, cfg.precision)?;
    to_value(&report)
}

fn run_with(cmd: &Command, ctx: &Ctx) -> Result<Value> {
    let cfg = &ctx.cfg;
    let (md, prec) = (cfg.max_depth, cfg.precision);
    match cmd {
        Command::Classify { input } => match ctx.tower(input.as_ref())? {
            AnyTower::Gm(t) => classify(&t),
            AnyTower::Local(t) => classify(&t),
        },
        Command::Normalize { input } => {
            let c = ctx.class(input.as_ref())?;
            let (n, w) = normalize_support(&c, md)?;
            let upto = ctx.upto(c.prefix.len() + 2);
            Ok(json!({ "normalized": n, "witness": w.to_json(upto)? }))
        }
        Command::Decide { ring, input } => {
            let c = ctx.class(input.as_ref())?;
            let d = decide_trivial(&c, (*ring).into(), md, prec)?;
            d.to_json(ctx.upto(c.prefix.len() + 2))
        }
        Command::Lift { input } => {
            let l = ctx.local(input.as_ref())?;
            let r = special::lift_triangular(&l, md, prec)?;
            Ok(json!({
                "tower": r.special.to_json()?,
                "witness": r.witness,
                "finite": r.finite,
                "report": r.report,
            }))
        }
        Command::Glue { at0, atinf } => match (ctx.load(Some(at0))?, ctx.load(Some(atinf))?) {
            (Input::Class(a), Input::Class(b)) => {
                let g = glue_rank2(&a, &b, md, prec)?;
                let upto = ctx.upto(a.prefix.len().max(b.prefix.len()) + 2);
                Ok(json!({
                    "class": g.class,
                    "witness_disc0": g.witness_disc0.to_json(upto)?,
                    "witness_discinf": g.witness_discinf.to_json(upto)?,
                }))
            }
            (Input::Tower(AnyTower::Local(a)), Input::Tower(AnyTower::Local(b))) => {
                let g = special::glue_triangular(&a, &b, md, prec)?;
                Ok(json!({
                    "tower": g.tower,
                    "witness_disc0": g.witness_disc0,
                    "witness_discinf": g.witness_discinf,
                    "report_disc0": g.report_disc0,
                    "report_discinf": g.report_discinf,
                }))
            }
            _ => Err(Error::ShapeMismatch("glue expects two classes or two local towers".into())),
        },
        Command::Restrict { side, input } => {
            let t = ctx.gm(input.as_ref())?;
            let side = match side {
                SideArg::Zero => Side::At0,
                SideArg::Inf => Side::AtInf,
            };
            to_value(&tower::restrict(&t, side, prec))
        }
        Command::Verify { source, target, witness } => {
            let (a, b) = (ctx.tower(Some(source))?, ctx.tower(Some(target))?);
            let w = match ctx.load(Some(witness))? {
                Input::Witness(w) => w,
                _ => return Err(Error::ShapeMismatch("expected a witness".into())),
            };
            match (a, b, w) {
                (AnyTower::Gm(a), AnyTower::Gm(b), AnyWitness::Gm(w)) => verify(&a, &b, &w, cfg),
                (AnyTower::Local(a), AnyTower::Local(b), AnyWitness::Local(w)) => verify(&a, &b, &w, cfg),
                _ => Err(Error::ShapeMismatch("towers and witness must share a ring".into())),
            }
        }
        Command::IsSpecial { side, input } => {
            let t = ctx.gm(input.as_ref())?;
            let side = match side {
                SpecialArg::Rsi => SpecialSide::Rsi,
                SpecialArg::Rs0 => SpecialSide::Rs0,
            };
            to_value(&special::is_special(&t, side, md, prec)?)
        }
        Command::Oracle { source, target } => {
            let (a, b) = (ctx.gm(Some(source))?, ctx.gm(Some(target))?);
            let oc = OracleConfig {
                window: cfg.window,
                terms: cfg.terms,
                ..OracleConfig::default()
            };
            Ok(match tower::oracle_equivalent(&a, &b, &oc)? {
                OracleResult::Equivalent(w) => json!({ "equivalent": true, "witness": w }),
                OracleResult::NotFound { searched } => json!({ "equivalent": false, "searched": searched.to_string() }),
            })
        }
    }
}

/// Runs a parsed command line, reading omitted paths from stdin.
pub fn run(cli: &Cli) -> Result<Value> {
    run_reading(cli, &read_source)
}

/// As [`run`] with a custom source reader.
pub fn run_reading(cli: &Cli, read: &dyn Fn(Option<&PathBuf>) -> Result<String>) -> Result<Value> {
    let ctx = Ctx {
        cfg: RunConfig::new(cli)?,
        read,
    };
    run_with(&cli.command, &ctx)
}

fn emit(v: &Value) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
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
    match run(&cli) {
        Ok(v) => {
            emit(&v);
            0
        }
        Err(e) => {
            emit(&error_json(&e));
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AS: &str = r#"{"p":3,"twist":{"num":0,"den":1},"prefix":[],"tail":{"kind":"self_similar","from":0,"terms":[[1,-1]]}}"#;

    fn run_text(args: &[&str], inputs: &[&str]) -> Result<Value> {
        let cli = Cli::try_parse_from(std::iter::once("frobtower").chain(args.iter().copied())).unwrap();
        let texts: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
        let read = move |p: Option<&PathBuf>| -> Result<String> {
            let k = p.and_then(|p| p.to_str()).and_then(|s| s.parse::<usize>().ok()).unwrap_or(0);
            Ok(texts[k].clone())
        };
        run_reading(&cli, &read)
    }

    #[test]
    fn parses_artin_schreier_class() {
        assert!(matches!(parse_input(AS).unwrap(), Input::Class(_)));
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        let e = parse_input("  \n").unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn bad_level_entry_reports_locus() {
        let t = r#"{"p":3,"ring":"gm","group":"GL","rank":1,"depth":2,"twist":[{"num":0,"den":1}],
                    "matrices":[[[[[0,1]]]],[[[[1,1]]]]]}"#;
        let e = parse_input(t).unwrap_err();
        assert_eq!(exit_code(&e), 4);
        let v = error_json(&e);
        assert_eq!(v["violation"]["level"], 1);
        assert_eq!(v["violation"]["entry"], json!([0, 0]));
    }

    #[test]
    fn decide_at_infinity() {
        let v = run_text(&["decide", "--ring", "discinf"], &[AS]).unwrap();
        assert_eq!(v["trivial"], true);
        assert!(v["witness"].is_object());
        let v = run_text(&["decide", "--ring", "gm"], &[AS]).unwrap();
        assert_eq!(v["trivial"], false);
        assert!(v["criterion"].is_string());
    }

    #[test]
    fn classify_half() {
        let t: Tower<LaurentPoly> = crate::rank1::make_oalpha(3, crate::arith::PExponent::ratio(1, 2), Ring::Gm, 3).unwrap();
        let v = run_text(&["classify"], &[&to_string(&t).unwrap()]).unwrap();
        assert_eq!(v, json!({ "alpha": { "num": 1, "den": 2 } }));
    }

    #[test]
    fn normalize_needs_depth() {
        let c = r#"{"p":3,"twist":{"num":0,"den":1},"prefix":[[[3,1]]],"tail":{"kind":"zero"}}"#;
        let e = run_text(&["--max-depth", "1", "normalize"], &[c]).unwrap_err();
        assert_eq!(exit_code(&e), 3);
        assert!(run_text(&["--max-depth", "2", "normalize"], &[c]).is_ok());
    }

    #[test]
    fn mismatched_prime_flag() {
        let e = run_text(&["--p", "5", "decide", "--ring", "gm"], &[AS]).unwrap_err();
        assert_eq!(exit_code(&e), 4);
    }
}
