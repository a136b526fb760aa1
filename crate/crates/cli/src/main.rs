use clap::{Args, Parser, Subcommand};
use leech_core::json::{ProblemFile, RationalJson};
use leech_core::linalg::random_matrix;
use leech_core::report::SCHEMA;
use leech_core::solver::{factor_and_inner, verify_solution};
use leech_core::spectral::outer_spectral_factor;
use leech_core::subspace::n_space;
use leech_core::symbols::defect_symbol;
use leech_core::toeplitz::{self, projection_positivity_check, random_projection_instance};
use leech_core::{solve, Config, Error, MatrixPolynomial, StateSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_PARSE: u8 = 3;

/// Residual bound for the exact operator identities in `identities`.
const IDENTITY_TOL: f64 = 1e-10;
/// Taylor terms emitted for rational outputs that do not terminate.
const MAX_TAYLOR_TERMS: usize = 256;

#[derive(Parser)]
#[command(
    name = "leech",
    version,
    about = "Contractive rational solutions of G X = K"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Positivity margin and finite-rank test of T_G T_G* - T_K T_K*.
    Check(Opts),
    /// Outer spectral factor of R, or of GG* - KK*.
    Factor(Opts),
    /// Inner function with Ker T_Θ* = M.
    Theta(Opts),
    /// Full construction; with --output, writes X.json, Y.json and report.json there.
    Solve(Opts),
    /// Checks a solution given by --solution against G and K.
    Verify(Opts),
    /// Random battery of operator identities and the projection positivity check.
    Identities(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Solution file for `verify` (StateSpace or the X.json written by `solve`).
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Number of random instances for `identities`.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_psd: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_fact: Option<f64>,
    #[arg(long)]
    tol_iso: Option<f64>,
    #[arg(long)]
    tol_sol: Option<f64>,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    quad: Option<usize>,
}

enum Failure {
    Parse(String),
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => EXIT_PARSE,
            Failure::Io(_) => EXIT_NUMERICAL,
            Failure::Core(e) => match e.root() {
                Error::Infeasible { .. } => EXIT_INFEASIBLE,
                Error::Json(_) => EXIT_PARSE,
                _ => EXIT_NUMERICAL,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Parse(m) | Failure::Io(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Check(o) => check(o),
        Command::Factor(o) => factor(o),
        Command::Theta(o) => theta(o),
        Command::Solve(o) => solve_cmd(o),
        Command::Verify(o) => verify(o),
        Command::Identities(o) => identities(o),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load(opts: &Opts) -> Result<(ProblemFile, Config), Failure> {
    let path = opts
        .input
        .as_ref()
        .ok_or_else(|| Failure::Parse("--input FILE is required".into()))?;
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let pf = ProblemFile::parse(&text)
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let cfg = overrides(pf.config.clone(), opts);
    Ok((pf, cfg))
}

fn pair(pf: &ProblemFile) -> Result<(&MatrixPolynomial, &MatrixPolynomial), Failure> {
    pf.pair().map_err(|e| Failure::Parse(e.to_string()))
}

fn overrides(mut cfg: Config, o: &Opts) -> Config {
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.tol.psd, o.tol_psd);
    set(&mut cfg.tol.rank, o.tol_rank);
    set(&mut cfg.tol.fact, o.tol_fact);
    set(&mut cfg.tol.iso, o.tol_iso);
    set(&mut cfg.tol.sol, o.tol_sol);
    cfg.trunc = o.trunc.unwrap_or(cfg.trunc);
    cfg.samples = o.samples.unwrap_or(cfg.samples);
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    if o.quad.is_some() {
        cfg.quad = o.quad;
    }
    cfg
}

fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, v: &Value) -> Result<(), Failure> {
    fs::write(path, to_text(v)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(opts: &Opts, v: &Value) -> Result<(), Failure> {
    match &opts.output {
        Some(path) => write_file(path, v),
        None => {
            print!("{}", to_text(v));
            Ok(())
        }
    }
}

fn check(opts: &Opts) -> Outcome {
    let (pf, cfg) = load(opts)?;
    let (g, k) = pair(&pf)?;
    let level = cfg.trunc.max(g.degree().max(k.degree()) + 1);
    let margin = toeplitz::positivity_margin(g, k, level, cfg.tol.psd)?;
    let finite = if margin.positive {
        Some(toeplitz::finite_rank_test(g, k, &cfg)?)
    } else {
        None
    };
    eprintln!(
        "positivity margin {:.6e} at level {}: {}",
        margin.min_eigenvalue,
        margin.level,
        if margin.positive {
            "positive"
        } else {
            "not positive"
        }
    );
    if let Some(f) = &finite {
        eprintln!("finite rank: {} (sup |R| = {:.3e})", f.finite, f.r_sup);
    }
    emit(
        opts,
        &json!({ "schema": SCHEMA, "positivity": margin, "finite_rank": finite }),
    )?;
    Ok(if margin.positive { 0 } else { EXIT_INFEASIBLE })
}

fn factor(opts: &Opts) -> Outcome {
    let (pf, cfg) = load(opts)?;
    let r = match &pf.r {
        Some(r) => r.clone(),
        None => {
            let (g, k) = pair(&pf)?;
            defect_symbol(g, k)?
        }
    };
    let f = outer_spectral_factor(&r, &cfg)?;
    let d = &f.diagnostics;
    eprintln!(
        "r = {}, deg Φ = {}, δ(Φ) = {}, δ(R) = {}, residual {:.3e} after {} Newton steps",
        d.rank,
        f.phi.degree(),
        d.degree_phi,
        d.degree_r,
        d.sample_residual,
        d.newton_iterations
    );
    emit(
        opts,
        &json!({ "schema": SCHEMA, "Phi": f.phi, "diagnostics": f.diagnostics }),
    )?;
    Ok(0)
}

fn theta(opts: &Opts) -> Outcome {
    let (pf, cfg) = load(opts)?;
    let (g, k) = pair(&pf)?;
    let r = defect_symbol(g, k)?;
    let n = n_space(g, k, &cfg)?;
    let (_, ms, inner, _) = factor_and_inner(&r, &n, &cfg)?;
    eprintln!(
        "dim N = {}, dim M = {}, δ(Θ) = {}, isometry residual {:.3e}",
        n.dim(),
        ms.subspace.dim(),
        inner.diagnostics.degree,
        inner.diagnostics.isometry_residual
    );
    let theta = RationalJson::new(&inner.theta, cfg.tol.tail, MAX_TAYLOR_TERMS);
    emit(
        opts,
        &json!({
            "schema": SCHEMA,
            "dim_n": n.dim(),
            "Theta": theta,
            "m_space": ms.diagnostics,
            "diagnostics": inner.diagnostics,
        }),
    )?;
    Ok(0)
}

fn solve_cmd(opts: &Opts) -> Outcome {
    let (pf, cfg) = load(opts)?;
    let (g, k) = pair(&pf)?;
    let sol = solve(g, k, &cfg)?;
    let rep = &sol.report;
    let x = serde_json::to_value(RationalJson::new(&sol.x, cfg.tol.tail, MAX_TAYLOR_TERMS))
        .expect("serialize");
    let y = serde_json::to_value(RationalJson::new(&sol.y, cfg.tol.tail, MAX_TAYLOR_TERMS))
        .expect("serialize");
    let report = serde_json::to_value(rep).expect("serialize");
    eprintln!(
        "r = {}, dim N = {}, dim M = {}, ν = {}, δ(X̃) = {}; residual {:.3e}, sup |X| {:.9}",
        rep.r,
        rep.dim_n,
        rep.dim_m,
        rep.nu,
        rep.degrees.x_tilde,
        rep.verification.residual,
        rep.verification.norm
    );
    for check in rep.failed_checks() {
        eprintln!("failed: {check}");
    }
    match &opts.output {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            write_file(&dir.join("X.json"), &x)?;
            write_file(&dir.join("Y.json"), &y)?;
            write_file(&dir.join("report.json"), &report)?;
        }
        None => print!("{}", to_text(&json!({ "report": report, "X": x, "Y": y }))),
    }
    Ok(if rep.verification.pass {
        0
    } else {
        EXIT_NUMERICAL
    })
}

fn read_solution(path: &Path) -> Result<StateSpace, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    if let Ok(r) = serde_json::from_str::<RationalJson>(&text) {
        return Ok(r.realization);
    }
    serde_json::from_str::<StateSpace>(&text)
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn verify(opts: &Opts) -> Outcome {
    let (pf, cfg) = load(opts)?;
    let (g, k) = pair(&pf)?;
    let path = opts
        .solution
        .as_ref()
        .ok_or_else(|| Failure::Parse("verify needs --solution FILE".into()))?;
    let x = read_solution(path)?;
    let rep = verify_solution(g, k, &x, &cfg)?;
    eprintln!(
        "residual {:.3e}, sup |X| {:.9}: {}",
        rep.residual,
        rep.norm,
        if rep.pass { "pass" } else { "fail" }
    );
    emit(opts, &json!({ "schema": SCHEMA, "verification": rep }))?;
    Ok(if rep.pass { 0 } else { EXIT_NUMERICAL })
}

fn random_poly(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> MatrixPolynomial {
    let d = rng.gen_range(0..=3);
    let coeffs = (0..=d).map(|_| random_matrix(rng, rows, cols)).collect();
    MatrixPolynomial::new(rows, cols, coeffs).expect("consistent shapes")
}

fn identities(opts: &Opts) -> Outcome {
    let cfg = match &opts.input {
        Some(_) => load(opts)?.1,
        None => overrides(Config::default(), opts),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut projection_failures = Vec::new();
    for i in 0..opts.count {
        let mut dim = || rng.gen_range(1..=3);
        let (n, m, p, q) = (dim(), dim(), dim(), dim());
        let u = random_poly(&mut rng, n, p);
        let v = random_poly(&mut rng, m, p);
        let w = random_poly(&mut rng, m, q);
        let level = cfg.trunc.clamp(4, 16);
        let res = toeplitz::verify_symbol_identities(&u, &v, &w, level)?.max();
        let defect = toeplitz::verify_defect_identity(&v, &w, level)?;
        let r = res.max(defect);
        worst = worst.max(r);
        if r > IDENTITY_TOL {
            failures.push(i);
        }
        let inst = random_projection_instance(&mut rng, 8);
        let verdict = projection_positivity_check(&inst, cfg.tol.psd, cfg.tol.rank)?;
        if !verdict.agree() || verdict.projected_rank > verdict.dim_v1 {
            projection_failures.push(i);
        }
    }
    let pass = failures.is_empty() && projection_failures.is_empty();
    eprintln!(
        "{} instances, max identity residual {worst:.3e}, projection disagreements {}: {}",
        opts.count,
        projection_failures.len(),
        if pass { "pass" } else { "fail" }
    );
    emit(
        opts,
        &json!({
            "schema": SCHEMA,
            "seed": cfg.seed,
            "count": opts.count,
            "tolerance": IDENTITY_TOL,
            "max_identity_residual": worst,
            "identity_failures": failures,
            "projection_failures": projection_failures,
            "pass": pass,
        }),
    )?;
    Ok(if pass { 0 } else { EXIT_NUMERICAL })
}
