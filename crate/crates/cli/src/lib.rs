//! The `qlimits` command line: expansions, basis forms, Hecke images,
//! grid verification and nondivisibility sweeps, with a persistent
//! expansion cache.

pub mod cache;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlimits_core::heckebasis::{build_basis_form, is_prime};
use qlimits_core::verify::{sweep_nondivisibility, Outcome, DEFAULT_BUDGET, DEFAULT_N_CHECK};
use qlimits_core::{
    CaseId, CaseStudy, EtaCombination, EtaQuotient, GridSpec, QSeries, ValuationReport, Verifier,
};
use serde::Serialize;

use crate::cache::Cache;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qlimits", version, about = "Exact q-expansions and p-adic limit checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,
    /// Expansion cache directory.
    #[arg(long, env = cache::ENV_VAR, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expand a named form or an eta quotient.
    Expand(FormArgs),
    /// Build a basis form with principal part ±q^(-m).
    Basis {
        #[arg(long)]
        case: CaseId,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, default_value_t = 20)]
        precision: i64,
    },
    /// Apply T(p^n), U(d), V(d) or Θ^k to a form.
    Hecke {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, value_enum)]
        op: Op,
        /// Prime for T, or the index of U and V.
        #[arg(long)]
        prime: Option<u64>,
        /// Exponent n in T(p^n), or the power of Θ.
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Supplies weight and character for T when the form has no case.
        #[arg(long)]
        case: Option<CaseId>,
    },
    /// Verify the valuation, convergence and congruence laws and the
    /// operator identities on a grid.
    Verify(GridArgs),
    /// Check v_p(C(p)) for every admissible prime below a bound.
    Sweep {
        #[arg(long)]
        case: CaseId,
        #[arg(long, default_value_t = 2000)]
        primes_below: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Op {
    T,
    U,
    V,
    Theta,
}

#[derive(Args, Debug)]
pub struct FormArgs {
    /// g, L, F, g1, L1, G, g2, L2, H, phi2_gko or phi2_bg.
    #[arg(long, conflicts_with = "eta")]
    pub form: Option<String>,
    /// Eta quotient as `delta:exponent,...`, e.g. `4:2,8:2`.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub precision: i64,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub case: CaseId,
    /// The built-in grid for the case; the default when no primes are given.
    #[arg(long, conflicts_with_all = ["prime", "primes_below"])]
    pub default_grid: bool,
    #[arg(long)]
    pub prime: Vec<u64>,
    /// Every admissible prime below this bound.
    #[arg(long)]
    pub primes_below: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub mmax: u32,
    #[arg(long, default_value_t = DEFAULT_N_CHECK)]
    pub ncheck: i64,
    /// Longest master-form expansion allowed.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: i64,
}

/// A named form: the combination and the case it belongs to.
pub fn named_form(name: &str) -> Option<(EtaCombination, Option<CaseId>)> {
    let eo = CaseStudy::get(CaseId::Eo);
    let gko = CaseStudy::get(CaseId::Gko);
    let bg = CaseStudy::get(CaseId::Bg);
    let (form, case) = match name {
        "g" => (eo.cusp_form(), CaseId::Eo),
        "L" => (eo.hauptmodul(), CaseId::Eo),
        "F" => (eo.master_form(), CaseId::Eo),
        "g1" => (gko.cusp_form(), CaseId::Gko),
        "L1" => (gko.hauptmodul(), CaseId::Gko),
        "G" => (gko.master_form(), CaseId::Gko),
        "phi2_gko" => (gko.phi_base(), CaseId::Gko),
        "g2" => (bg.cusp_form(), CaseId::Bg),
        "L2" => (bg.hauptmodul(), CaseId::Bg),
        "H" => (bg.master_form(), CaseId::Bg),
        "phi2_bg" => (bg.phi_base(), CaseId::Bg),
        _ => return None,
    };
    // Weight-0 functions carry no Hecke weight of their own.
    let case = match name {
        "L" | "L1" | "L2" | "phi2_gko" | "phi2_bg" => None,
        _ => Some(case),
    };
    Some((form, case))
}

pub const FORM_NAMES: [&str; 11] = [
    "g", "L", "F", "g1", "L1", "G", "g2", "L2", "H", "phi2_gko", "phi2_bg",
];

/// JSON shape of a series.
#[derive(Serialize, Debug)]
pub struct SeriesOut {
    pub form: String,
    pub valuation: i64,
    pub precision: i64,
    pub coeffs: Vec<(i64, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recipe: Option<Vec<(u32, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1_eliminated: Option<bool>,
}

impl SeriesOut {
    pub fn new(form: impl Into<String>, s: &QSeries) -> Self {
        SeriesOut {
            form: form.into(),
            valuation: s.valuation(),
            precision: s.precision(),
            coeffs: s.terms().map(|(e, c)| (e, c.to_string())).collect(),
            recipe: None,
            q1_eliminated: None,
        }
    }

    fn table(&self) -> String {
        let mut out = format!("{}  O(q^{})\n", self.form, self.precision);
        for (e, c) in &self.coeffs {
            let _ = writeln!(out, "{e:>8}  {c}");
        }
        if let Some(recipe) = &self.recipe {
            out.push_str("recipe:");
            for (r, c) in recipe {
                let _ = write!(out, " {c}*E_{r}");
            }
            out.push('\n');
        }
        if let Some(q1) = self.q1_eliminated {
            let _ = writeln!(out, "q^1 eliminated: {q1}");
        }
        out
    }
}

pub fn report_table(r: &ValuationReport) -> String {
    let mut out = format!(
        "case {}  n_check {}  master O(q^{})\n",
        r.case, r.n_check, r.master_precision
    );
    for e in &r.entries {
        let _ = write!(
            out,
            "{:<24} p={:<5} {:>2}  {:<11} {:<6} expected {}  observed {}",
            e.check.label(),
            e.p,
            e.index,
            format!("O(q^{})", e.precision),
            e.outcome.to_string(),
            e.expected,
            e.observed
        );
        if let Some(c) = &e.coefficient {
            let _ = write!(out, "  [{c}]");
        }
        out.push('\n');
    }
    let failed = r.entries.iter().filter(|e| e.outcome != Outcome::Pass).count();
    let _ = writeln!(out, "{} entries, {} not passing", r.entries.len(), failed);
    out
}

struct Ctx<'a> {
    format: Format,
    cache: Option<Cache>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, table: impl FnOnce() -> String) -> std::io::Result<()> {
        match self.format {
            Format::Json => {
                let s = serde_json::to_string_pretty(value).expect("serializable");
                writeln!(self.out, "{s}")
            }
            Format::Table => write!(self.out, "{}", table()),
        }
    }

    fn expand(&self, combo: &EtaCombination, precision: i64) -> QSeries {
        match &self.cache {
            Some(c) => c.get_or_compute(&combo.canonical_key(), precision, |n| combo.expand(n)),
            None => combo.expand(precision),
        }
    }

    fn usage(&mut self, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_USAGE
    }
}

fn resolve_form(args: &FormArgs) -> Result<(String, EtaCombination, Option<CaseId>), String> {
    match (&args.form, &args.eta) {
        (Some(name), None) => named_form(name)
            .map(|(f, c)| (name.clone(), f, c))
            .ok_or_else(|| format!("unknown form {name}; expected one of {}", FORM_NAMES.join(", "))),
        (None, Some(desc)) => EtaQuotient::parse(desc, None)
            .map(|q| (desc.clone(), EtaCombination::from(q), None))
            .map_err(|e| e.to_string()),
        _ => Err("give exactly one of --form and --eta".into()),
    }
}

/// Parses `args` and runs the command, writing to `out` and `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let cache = if cli.no_cache {
        None
    } else {
        Some(Cache::new(
            cli.cache_dir.clone().unwrap_or_else(|| PathBuf::from(cache::DEFAULT_DIR)),
        ))
    };
    let mut ctx = Ctx {
        format: cli.format,
        cache,
        out,
        err,
    };
    match execute(&cli.command, &mut ctx) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cmd: &Command, ctx: &mut Ctx) -> std::io::Result<i32> {
    match cmd {
        Command::Expand(args) => {
            let (name, combo, _) = match resolve_form(args) {
                Ok(f) => f,
                Err(e) => return Ok(ctx.usage(e)),
            };
            if args.precision < 1 {
                return Ok(ctx.usage("--precision must be positive"));
            }
            let s = ctx.expand(&combo, args.precision);
            let o = SeriesOut::new(name, &s);
            ctx.emit(&o, || o.table())?;
            Ok(EXIT_PASS)
        }
        Command::Basis { case, m, precision } => {
            let study = CaseStudy::get(*case);
            if !study.basis_index_ok(*m) {
                return Ok(ctx.usage(format!("{m} is not a basis index for case {case}")));
            }
            match build_basis_form(&study, *m, *precision) {
                Ok(b) => {
                    let mut o = SeriesOut::new(format!("{case} basis m={m}"), &b.series);
                    o.recipe = Some(b.recipe.iter().map(|(r, c)| (*r, c.to_string())).collect());
                    o.q1_eliminated = Some(b.q1_eliminated);
                    ctx.emit(&o, || o.table())?;
                    Ok(EXIT_PASS)
                }
                Err(e) => {
                    writeln!(ctx.err, "basis construction failed: {e}")?;
                    Ok(EXIT_FAIL)
                }
            }
        }
        Command::Hecke {
            form,
            op,
            prime,
            n,
            case,
        } => hecke(ctx, form, *op, *prime, *n, *case),
        Command::Verify(args) => verify(ctx, args),
        Command::Sweep { case, primes_below } => {
            let study = CaseStudy::get(*case);
            let report = match &ctx.cache {
                Some(c) => {
                    let master = study.master_form();
                    let s = c.get_or_compute(&master.canonical_key(), *primes_below as i64, |n| {
                        master.expand(n)
                    });
                    let grid = GridSpec::default_grid(*case);
                    Verifier::with_master(grid, s).sweep(*primes_below)
                }
                None => sweep_nondivisibility(*case, *primes_below),
            };
            ctx.emit(&report, || report_table(&report))?;
            Ok(report.exit_status())
        }
    }
}

fn hecke(
    ctx: &mut Ctx,
    form: &FormArgs,
    op: Op,
    prime: Option<u64>,
    n: u32,
    case: Option<CaseId>,
) -> std::io::Result<i32> {
    let (name, combo, own_case) = match resolve_form(form) {
        Ok(f) => f,
        Err(e) => return Ok(ctx.usage(e)),
    };
    let np = form.precision;
    if np < 1 {
        return Ok(ctx.usage("--precision must be positive"));
    }
    let (label, result) = match op {
        Op::Theta => {
            let s = ctx.expand(&combo, np);
            (format!("Θ^{n}({name})"), s.theta(n))
        }
        Op::U | Op::V => {
            let Some(d) = prime.filter(|&d| d >= 1) else {
                return Ok(ctx.usage("--prime must give a positive index for U and V"));
            };
            let d = d as i64;
            if op == Op::U {
                let s = ctx.expand(&combo, d * np);
                (format!("{name} | U({d})"), s.u_op(d).truncate(np))
            } else {
                let s = ctx.expand(&combo, np.div_euclid(d) + 1);
                (format!("{name} | V({d})"), s.v_op(d).truncate(np))
            }
        }
        Op::T => {
            let Some(case) = case.or(own_case) else {
                return Ok(ctx.usage("T needs --case for a form without a case"));
            };
            let Some(p) = prime.filter(|&p| is_prime(p)) else {
                return Ok(ctx.usage("T needs a prime --prime"));
            };
            let study = CaseStudy::get(case);
            if let Err(e) = study.check_prime(p) {
                return Ok(ctx.usage(e));
            }
            let Some(need) = (p as i64).checked_pow(n).and_then(|pn| pn.checked_mul(np)) else {
                return Ok(ctx.usage("precision overflow"));
            };
            let s = ctx.expand(&combo, need);
            match study.hecke(&s, p, n, np) {
                Ok(t) => (format!("{name} | T({p}^{n})"), t),
                Err(e) => return Ok(ctx.usage(e)),
            }
        }
    };
    let o = SeriesOut::new(label, &result);
    ctx.emit(&o, || o.table())?;
    Ok(EXIT_PASS)
}

fn verify(ctx: &mut Ctx, args: &GridArgs) -> std::io::Result<i32> {
    let grid = if args.prime.is_empty() && args.primes_below.is_none() {
        let mut g = GridSpec::default_grid(args.case);
        g.n_check = args.ncheck;
        g.budget = args.budget;
        if args.ncheck < 1 {
            return Ok(ctx.usage("--ncheck must be positive"));
        }
        g
    } else {
        let study = CaseStudy::get(args.case);
        let mut primes = args.prime.clone();
        if let Some(b) = args.primes_below {
            primes.extend(
                (2..b).filter(|&p| is_prime(p) && study.prime_residue.contains(p as i64)),
            );
        }
        match GridSpec::new(
            args.case,
            primes.into_iter().map(|p| (p, args.mmax)),
            args.ncheck,
            args.budget,
        ) {
            Ok(g) => g,
            Err(e) => return Ok(ctx.usage(e)),
        }
    };
    let master = ctx.expand(&CaseStudy::get(args.case).master_form(), grid.master_precision());
    let report = Verifier::with_master(grid, master).run();
    ctx.emit(&report, || report_table(&report))?;
    Ok(report.exit_status())
}

