//! `toricma`: polytope invariants, Monge-Ampère solves and the discrete flow from the
//! command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use toric_ma::convexfn::MaxAffine;
use toric_ma::error::Error;
use toric_ma::flow::{flow_run, FlowOptions, FlowStatus};
use toric_ma::io::{format_f64, read_polytope, to_json_string, PolytopeJson};
use toric_ma::polytope::{Measure, Polytope, Transform};
use toric_ma::rational::format_rational;
use toric_ma::solver::{
    assemble, r_analytic, soliton_vector, solve, Mode, SolitonOptions, SolveOptions, SolveReport, Status,
};
use toric_ma::toric::{analyze, donaldson_futaki, family_sweep, SweepRow, TestConfiguration};

const EXIT_NO_SOLUTION: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_INDETERMINATE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "toricma", version, about = "Toric Kähler-Einstein and soliton existence, solves and invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact invariants: volume, barycenter, R_P, Gorenstein index, divisor data, Futaki vector.
    Analyze(Common),
    /// Soliton vector `a` and the gradient norm at it.
    SolitonVector {
        #[command(flatten)]
        common: Common,
        /// Target for the gradient norm.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Solve the discrete Monge-Ampère equation and write the solve report.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solve: SolveArgs,
        /// Also write samples of the solution as CSV `x1[,x2],phi`.
        #[arg(long, value_name = "PATH")]
        phi_samples: Option<PathBuf>,
        /// Samples per axis for --phi-samples.
        #[arg(long, default_value_t = 121)]
        samples: usize,
        /// Sampling box is [-extent, extent]^n.
        #[arg(long, default_value_t = 6.0)]
        extent: f64,
    },
    /// Run the discrete flow from zero heights and write its trace.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Number of midpoint subdivisions of the triangulation of P.
        #[arg(long, default_value_t = 2)]
        refinement: usize,
        /// Stop once the discrete entropy is at most this.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// ke flows toward the Kähler-Einstein equation; soliton tilts by the soliton vector.
        #[arg(long, value_enum, default_value_t = FlowMode::Ke)]
        mode: FlowMode,
        /// Trace CSV `t,G,entropy,dt,drift`; `-` is stdout.
        #[arg(long, default_value = "-")]
        trace: String,
        /// Final time.
        #[arg(long, default_value_t = 1e4)]
        t_max: f64,
    },
    /// Donaldson-Futaki invariant of a toric test configuration under both boundary measures.
    Df {
        #[command(flatten)]
        common: Common,
        /// Test configuration JSON: `{"pieces": [{"m": [..], "c": ".."}]}`.
        config: PathBuf,
        /// Measure reported as `value`.
        #[arg(long, value_enum, default_value_t = MeasureArg::Canonical)]
        measure: MeasureArg,
    },
    /// Greatest Ricci lower bound R_P, with an optional bracket from twisted solves.
    Rp {
        #[command(flatten)]
        common: Common,
        /// Bisect on twisted solves for a numerical bracket.
        #[arg(long)]
        analytic: bool,
        /// Bracket width for --analytic.
        #[arg(long, default_value_t = 0.02)]
        width: f64,
        /// Number of midpoint subdivisions for --analytic.
        #[arg(long, default_value_t = 2)]
        refinement: usize,
        /// Solver tolerance for --analytic.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Translate the polytope so that its barycenter is 0 and report the new divisor coefficients.
    Recenter(Common),
    /// Sample a linear family of polytopes with common facet normals; CSV per t.
    Sweep {
        /// Polytope at t = 0.
        p0: PathBuf,
        /// Polytope at t = 1.
        p1: PathBuf,
        /// Number of evenly spaced values of t in [0, 1].
        #[arg(long, default_value_t = 11)]
        samples: usize,
        /// Output path; `-` is stdout.
        #[arg(long, default_value = "-")]
        out: String,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Polytope JSON.
    polytope: PathBuf,
    /// Output path; `-` is stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Number of midpoint subdivisions of the triangulation of P; the nodes are the
    /// vertices of the result.
    #[arg(long, default_value_t = 3)]
    refinement: usize,
    /// Stop when the largest mass residual falls below this.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// ke: Kähler-Einstein; soliton: tilted by the soliton vector; twisted: needs --r.
    #[arg(long, value_enum, default_value_t = ModeArg::Ke)]
    mode: ModeArg,
    /// Twisting parameter in (0, 1) for --mode twisted.
    #[arg(long)]
    r: Option<f64>,
    /// Random initial heights from this seed; zero heights when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap for the quasi-Newton ascent.
    #[arg(long, default_value_t = 3000)]
    max_iter: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ModeArg {
    Ke,
    Soliton,
    Twisted,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FlowMode {
    Ke,
    Soliton,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum MeasureArg {
    Canonical,
    Lattice,
}

/// A failure with its exit code and the line printed to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::MaxIter | Error::Stalled => EXIT_INDETERMINATE,
            _ => EXIT_INPUT,
        };
        Failure { code, message: format!("{}: {e}", e.code()) }
    }
}

fn input_error(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: msg.into() }
}

type Outcome = std::result::Result<(), Failure>;

fn load(path: &Path) -> std::result::Result<Polytope, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("IO: {}: {e}", path.display())))?;
    Ok(read_polytope(&text)?)
}

fn emit(out: &str, text: &str) -> Outcome {
    if out == "-" {
        print!("{text}");
        Ok(())
    } else {
        fs::write(out, text).map_err(|e| input_error(format!("IO: {out}: {e}")))
    }
}

fn rationals(v: &[toric_ma::rational::Rational]) -> Value {
    Value::from(v.iter().map(format_rational).collect::<Vec<_>>())
}

fn barycenter_note(p: &Polytope) -> String {
    let b: Vec<String> = p.barycenter().iter().map(format_rational).collect();
    format!(
        "no Kähler-Einstein metric: the equation is solvable only when 0 is the barycenter of the polytope, \
         here the barycenter is ({}); use --mode soliton, or recenter to study the log pair",
        b.join(", ")
    )
}

fn run_analyze(c: &Common) -> Outcome {
    let p = load(&c.polytope)?;
    let a = analyze(&p);
    let d = &a.divisor;
    let v = json!({
        "name": p.name.clone().unwrap_or_default(),
        "dim": p.dim,
        "volume": format_rational(&a.volume),
        "barycenter": rationals(&a.barycenter),
        "r_invariant": format_rational(&a.r_invariant),
        "gorenstein_index": d.gorenstein_index.to_string(),
        "fano_canonical": d.fano_canonical,
        "reflexive": d.reflexive,
        "klt": d.klt,
        "effective": d.effective,
        "c_F": rationals(&d.coefficients),
        "futaki": rationals(&a.futaki),
    });
    emit(&c.out, &to_json_string(&v)?)
}

fn run_soliton(c: &Common, tol: f64) -> Outcome {
    if !(tol > 0.0) {
        return Err(input_error("INVALID: --tol must be positive"));
    }
    let p = load(&c.polytope)?;
    let s = soliton_vector(&p, &SolitonOptions { tol, ..SolitonOptions::default() })?;
    emit(&c.out, &to_json_string(&s)?)?;
    if s.gradient_norm > tol {
        return Err(Failure {
            code: EXIT_INDETERMINATE,
            message: format!("MAX_ITER: gradient norm {:e}", s.gradient_norm),
        });
    }
    Ok(())
}

fn solve_mode(args: &SolveArgs) -> std::result::Result<Mode, Failure> {
    match (args.mode, args.r) {
        (ModeArg::Twisted, Some(r)) if r > 0.0 && r < 1.0 => Ok(Mode::Twisted { r }),
        (ModeArg::Twisted, Some(_)) => Err(input_error("INVALID: --r must lie in (0, 1)")),
        (ModeArg::Twisted, None) => Err(input_error("INVALID: --mode twisted needs --r")),
        (_, Some(_)) => Err(input_error("INVALID: --r applies to --mode twisted only")),
        (ModeArg::Ke, None) => Ok(Mode::Ke),
        (ModeArg::Soliton, None) => Ok(Mode::Soliton),
    }
}

fn phi_samples_csv(report: &SolveReport, samples: usize, extent: f64) -> String {
    let phi = MaxAffine { slopes: report.nodes.clone(), heights: report.heights.clone() };
    let n = phi.dim();
    let axis: Vec<f64> = (0..samples)
        .map(|i| if samples == 1 { 0.0 } else { -extent + 2.0 * extent * i as f64 / (samples - 1) as f64 })
        .collect();
    let mut out = String::from(if n == 1 { "x1,phi\n" } else { "x1,x2,phi\n" });
    if n == 1 {
        for x in &axis {
            out.push_str(&format!("{},{}\n", format_f64(*x), format_f64(phi.eval(&[*x]))));
        }
    } else {
        for x in &axis {
            for y in &axis {
                out.push_str(&format!("{},{},{}\n", format_f64(*x), format_f64(*y), format_f64(phi.eval(&[*x, *y]))));
            }
        }
    }
    out
}

fn run_solve(c: &Common, args: &SolveArgs, phi_path: Option<&Path>, samples: usize, extent: f64) -> Outcome {
    let mode = solve_mode(args)?;
    if !(args.tol > 0.0) {
        return Err(input_error("INVALID: --tol must be positive"));
    }
    if phi_path.is_some() && (samples == 0 || !(extent > 0.0)) {
        return Err(input_error("INVALID: --samples and --extent must be positive"));
    }
    let p = load(&c.polytope)?;
    let a = match mode {
        Mode::Soliton => soliton_vector(&p, &SolitonOptions::default())?.a,
        _ => vec![0.0; p.dim],
    };
    let ns = assemble(&p, &a, args.refinement)?;
    let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, seed: args.seed, ..SolveOptions::default() };
    let report = solve(&ns, mode, &opts)?;
    emit(&c.out, &to_json_string(&report)?)?;
    if let Some(path) = phi_path {
        fs::write(path, phi_samples_csv(&report, samples, extent))
            .map_err(|e| input_error(format!("IO: {}: {e}", path.display())))?;
    }
    match report.status {
        Status::Solved => Ok(()),
        Status::NoSolutionDetected => {
            let message = match mode {
                Mode::Ke => format!("NO_SOLUTION_DETECTED: {}", barycenter_note(&p)),
                _ => "NO_SOLUTION_DETECTED: heights drift to infinity".to_string(),
            };
            Err(Failure { code: EXIT_NO_SOLUTION, message })
        }
        Status::MaxIter => Err(Failure {
            code: EXIT_INDETERMINATE,
            message: format!("MAX_ITER: residual {:e} after {} iterations", report.residual_max, report.iters),
        }),
    }
}

fn run_flow(c: &Common, refinement: usize, tol: f64, mode: FlowMode, trace: &str, t_max: f64) -> Outcome {
    if !(tol > 0.0) || !(t_max > 0.0) {
        return Err(input_error("INVALID: --tol and --t-max must be positive"));
    }
    let p = load(&c.polytope)?;
    let a = match mode {
        FlowMode::Ke => {
            if p.barycenter().iter().any(|x| !is_zero_q(x)) {
                return Err(Failure {
                    code: EXIT_NO_SOLUTION,
                    message: format!("NO_SOLUTION_DETECTED: {}", barycenter_note(&p)),
                });
            }
            vec![0.0; p.dim]
        }
        FlowMode::Soliton => soliton_vector(&p, &SolitonOptions::default())?.a,
    };
    let ns = assemble(&p, &a, refinement)?;
    let opts = FlowOptions { tol, t_max, ..FlowOptions::default() };
    let run = flow_run(&ns, &vec![0.0; ns.len()], &opts)?;
    emit(trace, &run.trace_csv())?;
    if c.out != "-" || trace != "-" {
        let summary = json!({
            "status": run.status,
            "steps": run.steps,
            "rejected": run.rejected,
            "nodes": ns.nodes,
            "heights": run.heights,
        });
        emit(&c.out, &to_json_string(&summary)?)?;
    }
    match run.status {
        FlowStatus::Converged => Ok(()),
        s => Err(Failure {
            code: EXIT_INDETERMINATE,
            message: format!("{}: flow stopped before convergence", status_name(&s)),
        }),
    }
}

fn is_zero_q(x: &toric_ma::rational::Rational) -> bool {
    *x.numer() == 0.into()
}

fn status_name(s: &FlowStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn run_df(c: &Common, config: &Path, measure: MeasureArg) -> Outcome {
    let p = load(&c.polytope)?;
    let text = fs::read_to_string(config).map_err(|e| input_error(format!("IO: {}: {e}", config.display())))?;
    let tc: TestConfiguration = serde_json::from_str(&text).map_err(|e| Failure::from(Error::Parse(e.to_string())))?;
    let m = match measure {
        MeasureArg::Canonical => Measure::Canonical,
        MeasureArg::Lattice => Measure::Lattice,
    };
    let d = donaldson_futaki(&p, &tc, m)?;
    let v = json!({
        "measure": m,
        "value": format_rational(&d.value),
        "canonical": format_rational(&d.canonical),
        "lattice": format_rational(&d.lattice),
        "correction": format_rational(&d.correction),
        "interior": format_rational(&d.interior),
    });
    emit(&c.out, &to_json_string(&v)?)
}

fn run_rp(c: &Common, analytic: bool, width: f64, refinement: usize, tol: f64) -> Outcome {
    if analytic && (!(width > 0.0) || !(tol > 0.0)) {
        return Err(input_error("INVALID: --width and --tol must be positive"));
    }
    let p = load(&c.polytope)?;
    let r = toric_ma::toric::r_invariant(&p);
    let mut v = Map::new();
    v.insert("r_invariant".into(), Value::from(format_rational(&r)));
    v.insert("r_invariant_f64".into(), Value::from(toric_ma::rational::to_f64(&r)));
    let mut indeterminate = false;
    if analytic {
        let b = r_analytic(&p, width, refinement, &SolveOptions { tol, ..SolveOptions::default() })?;
        indeterminate = b.hi - b.lo > width;
        v.insert("analytic".into(), serde_json::to_value(&b).map_err(|e| Failure::from(Error::Parse(e.to_string())))?);
    }
    emit(&c.out, &to_json_string(&Value::Object(v))?)?;
    if indeterminate {
        return Err(Failure {
            code: EXIT_INDETERMINATE,
            message: "INDETERMINATE: bracket did not reach the requested width".into(),
        });
    }
    Ok(())
}

fn run_recenter(c: &Common) -> Outcome {
    let p = load(&c.polytope)?;
    let q = p.transform(&Transform::Recenter(p.barycenter()))?;
    let mut v = serde_json::to_value(PolytopeJson::from_polytope(&q)?)
        .map_err(|e| Failure::from(Error::Parse(e.to_string())))?;
    let coefficients = analyze(&q).divisor.coefficients;
    if let Value::Object(m) = &mut v {
        m.insert("c_F".into(), rationals(&coefficients));
    }
    emit(&c.out, &to_json_string(&v)?)
}

fn run_sweep(p0: &Path, p1: &Path, samples: usize, out: &str) -> Outcome {
    if samples < 2 {
        return Err(input_error("INVALID: --samples must be at least 2"));
    }
    let (a, b) = (load(p0)?, load(p1)?);
    let rows = family_sweep(&a, &b, samples)?;
    let n = a.dim;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("b{i}")));
    header.extend((1..=n).map(|i| format!("a{i}")));
    header.extend(["r_invariant", "gorenstein_index", "klt", "effective", "error"].map(String::from));
    let mut csv = header.join(",") + "\n";
    for row in rows {
        let mut cells: Vec<String> = Vec::new();
        match row {
            SweepRow::Ok { t, barycenter, soliton, r_invariant, divisor } => {
                cells.push(format_rational(&t));
                cells.extend(barycenter.iter().map(format_rational));
                cells.extend(soliton.iter().map(|x| format_f64(*x)));
                cells.push(format_rational(&r_invariant));
                cells.push(divisor.gorenstein_index.to_string());
                cells.push(divisor.klt.iter().all(|x| *x).to_string());
                cells.push(divisor.effective.iter().all(|x| *x).to_string());
                cells.push(String::new());
            }
            SweepRow::Failed { t, error } => {
                cells.push(format_rational(&t));
                cells.extend(std::iter::repeat(String::new()).take(2 * n + 4));
                cells.push(error.code().to_string());
            }
        }
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    emit(out, &csv)
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Analyze(c) => run_analyze(c),
        Command::SolitonVector { common, tol } => run_soliton(common, *tol),
        Command::Solve { common, solve, phi_samples, samples, extent } => {
            run_solve(common, solve, phi_samples.as_deref(), *samples, *extent)
        }
        Command::Flow { common, refinement, tol, mode, trace, t_max } => {
            run_flow(common, *refinement, *tol, *mode, trace, *t_max)
        }
        Command::Df { common, config, measure } => run_df(common, config, *measure),
        Command::Rp { common, analytic, width, refinement, tol } => {
            run_rp(common, *analytic, *width, *refinement, *tol)
        }
        Command::Recenter(c) => run_recenter(c),
        Command::Sweep { p0, p1, samples, out } => run_sweep(p0, p1, *samples, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
