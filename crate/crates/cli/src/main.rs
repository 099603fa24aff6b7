//! Unified command-line entry point: operator application and verification,
//! identity runs, quadrature checks, potential evaluation, the capacity solver,
//! multiplier certification, and the aggregated suites.
//!
//! Exit codes: 0 = success/PASS, 1 = a verification failed, 2 = invalid input.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use ballkit::capacity::{
    solve_capacity, verify_extremal, CapacityProblem, KernelMatrix, SolverOptions,
};
use ballkit::check::{find_check, suite_members, CheckContext, CheckReport};
use ballkit::identities::random_direction;
use ballkit::multiplier::{certify, corona_solve, exceptional_sequence, test_family};
use ballkit::poly::{ratq, Polynomial};
use ballkit::potential::{
    cauchy_potential, riesz_potential, u_potential, v_potential, wolff_exact, AtomicMeasure,
    BallFun, KernelSum, KernelTerm, ParamSet, PolyFun,
};
use ballkit::quad::{estimate_bound_i, kernel_integral_i, SphereGrid, TentContext};
use ballkit::spectral::{Corruption, CorruptTarget, DiagonalOp};
use ballkit::{C64, Rat};

#[derive(Parser)]
#[command(name = "ballkit", version, about = "operator calculus and potential theory on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonal operator calculus
    Ops {
        #[command(subcommand)]
        cmd: OpsCmd,
    },
    /// Exact identity runs with JSON reports
    Identities {
        #[command(subcommand)]
        cmd: IdentitiesCmd,
    },
    /// Quadrature diagnostics
    Quad {
        #[command(subcommand)]
        cmd: QuadCmd,
    },
    /// Potential evaluation on grids
    Potentials {
        #[command(subcommand)]
        cmd: PotentialsCmd,
    },
    /// Capacity solver
    Capacity {
        #[command(subcommand)]
        cmd: CapacityCmd,
    },
    /// Multiplier certification
    Multiplier {
        #[command(subcommand)]
        cmd: MultiplierCmd,
    },
    /// Aggregated acceptance suites
    Suite {
        /// exact | potentials | capacity | full
        name: String,
        #[command(flatten)]
        verify: VerifyOpts,
    },
}

#[derive(Subcommand)]
enum OpsCmd {
    /// Apply a diagonal operator to a polynomial file
    Apply {
        /// P | T | R | rpow
        #[arg(long)]
        op: OpKind,
        #[arg(long = "N", allow_hyphen_values = true)]
        nn: Option<String>,
        #[arg(long = "M", allow_hyphen_values = true)]
        mm: Option<String>,
        /// order k of R^k_t
        #[arg(long)]
        k: Option<u32>,
        /// base t of R^k_t
        #[arg(long)]
        t: Option<String>,
        /// integer exponent of (1+R)^s
        #[arg(long, allow_hyphen_values = true)]
        s: Option<i32>,
        #[arg(long)]
        poly: PathBuf,
        /// output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named exact identity check
    Verify {
        /// reproducing | inverse | intpartsP | rkvpn | semigroup
        #[arg(long)]
        identity: String,
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[command(flatten)]
        verify: VerifyOpts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    #[value(alias = "P")]
    P,
    #[value(alias = "T")]
    T,
    #[value(alias = "R")]
    R,
    Rpow,
}

#[derive(Args, Clone)]
struct VerifyOpts {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// negative-control perturbation size (e.g. 1e-6), exact rational 1/k
    #[arg(long)]
    corrupt: Option<u64>,
    /// what to corrupt: eigenvalue | coefficient
    #[arg(long, default_value = "eigenvalue")]
    corrupt_what: String,
}

impl VerifyOpts {
    fn context(&self, trials: usize) -> Result<CheckContext, String> {
        let corruption = match self.corrupt {
            None => None,
            Some(denom) => {
                if denom == 0 {
                    return Err("--corrupt must be a positive denominator".into());
                }
                let target = match self.corrupt_what.as_str() {
                    "eigenvalue" => CorruptTarget::Eigenvalue,
                    "coefficient" => CorruptTarget::Coefficient,
                    other => return Err(format!("unknown corruption target {other:?}")),
                };
                Some(Corruption {
                    target,
                    eps: ratq(1, denom as i64),
                })
            }
        };
        Ok(CheckContext {
            seed: self.seed,
            trials,
            corruption,
        })
    }
}

#[derive(Subcommand)]
enum IdentitiesCmd {
    Run {
        /// taylor | intparts | leibnitz | master | qbound
        #[arg(long)]
        which: String,
        /// optional JSON config {"trials": N}
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        verify: VerifyOpts,
    },
}

#[derive(Subcommand)]
enum QuadCmd {
    /// Certify sphere/ball moments against the closed forms
    CheckMoments {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        order: u32,
    },
    /// Sample the kernel integral I^N_{M,L} against the printed bounds (CSV)
    #[command(name = "kernel-I", alias = "kernel-i")]
    KernelI {
        #[arg(long = "N")]
        nn: f64,
        #[arg(long = "M", allow_hyphen_values = true)]
        mm: f64,
        #[arg(long = "L", allow_hyphen_values = true)]
        ll: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Subcommand)]
enum PotentialsCmd {
    /// Evaluate a potential on a point grid (CSV to stdout)
    Eval {
        /// riesz | cauchy | wolff | U | V
        #[arg(long)]
        kind: String,
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        grid: PathBuf,
    },
}

#[derive(Subcommand)]
enum CapacityCmd {
    Solve {
        /// JSON set spec: {"caps":[{"center":[re,im,...],"radius":r}]} or {"indices":[...]}
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 16)]
        order: u32,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Verify {
        /// solution file produced by `capacity solve`
        #[arg(long)]
        solution: PathBuf,
    },
}

#[derive(Subcommand)]
enum MultiplierCmd {
    Certify {
        /// polynomial JSON or potential spec {"kind":"U"|"V"|"Cs","measure":…,"params":…}
        #[arg(long)]
        g: PathBuf,
        /// space tag (informational; the harness certifies F^{p,2}_s)
        #[arg(long, default_value = "Hps")]
        space: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        lambda: Option<f64>,
        /// family spec seed:N
        #[arg(long, default_value = "7:32")]
        family: String,
    },
    Corona {
        /// {"params":…, "order":…, "caps":[{"center":…,"radius":…}]}
        #[arg(long)]
        covers: PathBuf,
    },
    Exceptional {
        /// {"direction":[re,im,...], "r0":…, "params":…, "order":…}
        #[arg(long = "K")]
        k_file: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
}

fn main() {
    ballkit::init_threads();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let n: i64 = num.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
    let d: i64 = den.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
    if d == 0 {
        return Err("zero denominator".into());
    }
    Ok(ratq(n, d))
}

fn print_report(report: &CheckReport) -> i32 {
    println!("{}", serde_json::to_string_pretty(report).expect("serialize"));
    if report.pass {
        0
    } else {
        1
    }
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Ops { cmd } => ops(cmd),
        Command::Identities { cmd } => identities(cmd),
        Command::Quad { cmd } => quad(cmd),
        Command::Potentials { cmd } => potentials(cmd),
        Command::Capacity { cmd } => capacity(cmd),
        Command::Multiplier { cmd } => multiplier(cmd),
        Command::Suite { name, verify } => suite(&name, &verify),
    }
}

fn ops(cmd: OpsCmd) -> Result<i32, String> {
    match cmd {
        OpsCmd::Apply {
            op,
            nn,
            mm,
            k,
            t,
            s,
            poly,
            out,
        } => {
            let f: Polynomial = read_json(&poly)?;
            let alg = ballkit::spectral::OpAlgebra::new(f.dim());
            let operator = match op {
                OpKind::P => {
                    let nn = parse_rat(&nn.ok_or("--N required for P")?)?;
                    let mm = parse_rat(&mm.ok_or("--M required for P")?)?;
                    alg.bergman(nn, mm).map_err(|e| e.to_string())?
                }
                OpKind::T => {
                    let nn = parse_rat(&nn.ok_or("--N required for T")?)?;
                    let mm = parse_rat(&mm.ok_or("--M required for T")?)?;
                    alg.inverse_operator(nn, mm).map_err(|e| e.to_string())?
                }
                OpKind::R => {
                    let k = k.ok_or("--k required for R")?;
                    let t = parse_rat(&t.ok_or("--t required for R")?)?;
                    alg.rkt_operator(k, t).map_err(|e| e.to_string())?
                }
                OpKind::Rpow => DiagonalOp::RadialPower {
                    s: s.ok_or("--s required for rpow")?,
                },
            };
            let result = alg.apply(&operator, &f).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&result).expect("serialize");
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        OpsCmd::Verify {
            identity,
            trials,
            verify,
        } => {
            let name = match identity.as_str() {
                "intpartsP" => "intpartsp",
                other => other,
            };
            let check = find_check(name).ok_or(format!("unknown identity {identity:?}"))?;
            let ctx = verify.context(trials)?;
            Ok(print_report(&check.run(&ctx)))
        }
    }
}

fn identities(cmd: IdentitiesCmd) -> Result<i32, String> {
    #[derive(Deserialize, Default)]
    struct IdentityConfig {
        #[serde(default)]
        trials: usize,
    }
    match cmd {
        IdentitiesCmd::Run {
            which,
            config,
            verify,
        } => {
            let cfg: IdentityConfig = match config {
                Some(path) => read_json(&path)?,
                None => IdentityConfig::default(),
            };
            let check = find_check(&which).ok_or(format!("unknown identity {which:?}"))?;
            let ctx = verify.context(cfg.trials)?;
            Ok(print_report(&check.run(&ctx)))
        }
    }
}

fn quad(cmd: QuadCmd) -> Result<i32, String> {
    match cmd {
        QuadCmd::CheckMoments { n, order } => {
            let grid = SphereGrid::build(n, order).map_err(|e| e.to_string())?;
            let mut worst: f64 = 0.0;
            for d in 0..=order.min(10) {
                for alpha in ballkit::poly::MultiIndex::of_degree(n, d).into_iter().take(4) {
                    let exact =
                        ballkit::poly::rat_to_f64(&ballkit::poly::monomial_moment_sphere(&alpha));
                    let got = grid.integrate(|z| {
                        alpha
                            .0
                            .iter()
                            .enumerate()
                            .map(|(j, &e)| z[j].norm_sqr().powi(e as i32))
                            .product()
                    });
                    worst = worst.max((got - exact).abs() / exact);
                }
            }
            println!(
                "{}",
                json!({ "n": n, "order": order, "nodes": grid.len(), "worst_rel_err": worst })
            );
            Ok(if worst < 1e-10 { 0 } else { 1 })
        }
        QuadCmd::KernelI {
            nn,
            mm,
            ll,
            samples,
            seed,
            n,
        } => {
            let mut rng = ballkit::check::rng(seed);
            println!("re_z,im_z,re_u,im_u,integral,bound,ratio");
            let mut converged = 0usize;
            for _ in 0..samples {
                use rand::Rng;
                let rz: f64 = rng.gen_range(0.0..0.99);
                let ru: f64 = rng.gen_range(0.0..0.99);
                let ez = random_direction(&mut rng, n);
                let eu = random_direction(&mut rng, n);
                let z: Vec<C64> = ez.iter().map(|c| c * rz).collect();
                let u: Vec<C64> = eu.iter().map(|c| c * ru).collect();
                let bound = estimate_bound_i(n, nn, mm, ll, &z, &u).map_err(|e| e.to_string())?;
                // deep samples may hit the node cap: that is the divergence flag,
                // reported per row rather than aborting the sweep
                match kernel_integral_i(n, nn, mm, ll, &z, &u, 1e-3) {
                    Ok(integral) => {
                        converged += 1;
                        println!(
                            "{},{},{},{},{integral},{bound},{}",
                            z[0].re,
                            z[0].im,
                            u[0].re,
                            u[0].im,
                            integral / bound
                        );
                    }
                    Err(_) => println!(
                        "{},{},{},{},nan,{bound},nan",
                        z[0].re, z[0].im, u[0].re, u[0].im
                    ),
                }
            }
            eprintln!("converged {converged}/{samples}");
            Ok(if converged * 5 >= samples * 4 { 0 } else { 1 })
        }
    }
}

#[derive(Deserialize)]
struct PointGrid {
    points: Vec<Vec<f64>>,
}

fn potentials(cmd: PotentialsCmd) -> Result<i32, String> {
    match cmd {
        PotentialsCmd::Eval {
            kind,
            measure,
            params,
            grid,
        } => {
            let mu: AtomicMeasure = read_json(&measure)?;
            let ps: ParamSet = read_json(&params)?;
            let pg: PointGrid = read_json(&grid)?;
            let n = ps.n;
            let to_point = |flat: &Vec<f64>| -> Result<Vec<C64>, String> {
                if flat.len() != 2 * n {
                    return Err(format!("point needs {} coordinates, got {}", 2 * n, flat.len()));
                }
                Ok(flat.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
            };
            let eval: Box<dyn Fn(&[C64]) -> (f64, f64)> = match kind.as_str() {
                "riesz" => Box::new(move |z| (riesz_potential(&mu, n, ps.s, z, None), 0.0)),
                "cauchy" => Box::new(move |z| {
                    let v = cauchy_potential(&mu, n, ps.s, z);
                    (v.re, v.im)
                }),
                "wolff" => Box::new(move |z| (wolff_exact(&mu, n, ps.s, ps.p, z, None, 0.0, None), 0.0)),
                "U" => {
                    let sphere = SphereGrid::build(n, 10).map_err(|e| e.to_string())?;
                    let u = u_potential(&mu, &ps, &sphere, 24, 4).map_err(|e| e.to_string())?;
                    Box::new(move |z| {
                        let v = u.eval(z);
                        (v.re, v.im)
                    })
                }
                "V" => {
                    let v = v_potential(&mu, &ps, 28, 4).map_err(|e| e.to_string())?;
                    Box::new(move |z| {
                        let val = v.eval(z);
                        (val.re, val.im)
                    })
                }
                other => return Err(format!("unknown potential kind {other:?}")),
            };
            println!("point,re,im");
            for flat in &pg.points {
                let z = to_point(flat)?;
                let (re, im) = eval(&z);
                let coords: Vec<String> = flat.iter().map(|v| v.to_string()).collect();
                println!("\"[{}]\",{re},{im}", coords.join(","));
            }
            Ok(0)
        }
    }
}

#[derive(Deserialize)]
struct SetSpec {
    #[serde(default)]
    caps: Vec<CapSpec>,
    #[serde(default)]
    indices: Vec<usize>,
}

#[derive(Deserialize, Serialize, Clone)]
struct CapSpec {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    params: ParamSet,
    order: u32,
    e_nodes: Vec<usize>,
    value: f64,
    duality_gap: f64,
    iterations: usize,
    constraint_residual: f64,
    multipliers: Vec<f64>,
    f_star: Vec<f64>,
}

fn capacity(cmd: CapacityCmd) -> Result<i32, String> {
    match cmd {
        CapacityCmd::Solve {
            set,
            params,
            order,
            tol,
            out,
        } => {
            let spec: SetSpec = read_json(&set)?;
            let ps: ParamSet = read_json(&params)?;
            let grid = SphereGrid::build(ps.n, order).map_err(|e| e.to_string())?;
            let km = KernelMatrix::build(&grid, ps.s);
            // explicit indices refer to the raw grid and map through the merge
            let mut e_nodes: Vec<usize> = Vec::new();
            for &idx in &spec.indices {
                if idx >= grid.len() {
                    return Err("set index out of range for this grid order".into());
                }
                e_nodes.push(km.from_grid[idx]);
            }
            for cap in &spec.caps {
                if cap.center.len() != 2 * ps.n {
                    return Err("cap center has the wrong dimension".into());
                }
                let center: Vec<C64> =
                    cap.center.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
                e_nodes.extend(km.cap_nodes(&center, cap.radius));
            }
            e_nodes.sort_unstable();
            e_nodes.dedup();
            let problem = CapacityProblem {
                matrix: &km,
                e_nodes,
                params: ps.clone(),
                options: SolverOptions {
                    tol,
                    ..Default::default()
                },
            };
            let sol = solve_capacity(&problem).map_err(|e| e.to_string())?;
            let file = SolutionFile {
                params: ps,
                order,
                e_nodes: sol.e_nodes.clone(),
                value: sol.value,
                duality_gap: sol.duality_gap,
                iterations: sol.iterations,
                constraint_residual: sol.constraint_residual,
                multipliers: sol.multipliers.clone(),
                f_star: sol.f_star.clone(),
            };
            let text = serde_json::to_string_pretty(&file).expect("serialize");
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(if sol.duality_gap <= tol { 0 } else { 1 })
        }
        CapacityCmd::Verify { solution } => {
            let file: SolutionFile = read_json(&solution)?;
            let grid = SphereGrid::build(file.params.n, file.order).map_err(|e| e.to_string())?;
            let km = KernelMatrix::build(&grid, file.params.s);
            let problem = CapacityProblem {
                matrix: &km,
                e_nodes: file.e_nodes.clone(),
                params: file.params.clone(),
                options: SolverOptions::default(),
            };
            let sol = ballkit::capacity::CapacitySolution {
                value: file.value,
                duality_gap: file.duality_gap,
                iterations: file.iterations,
                f_star: file.f_star.clone(),
                multipliers: file.multipliers.clone(),
                e_nodes: file.e_nodes.clone(),
                constraint_residual: file.constraint_residual,
            };
            let max_pot = sol
                .extremal_measure(&km, file.params.p)
                .total_mass()
                .max(1e-12);
            let ts = [0.5 * max_pot, max_pot, 2.0 * max_pot];
            let report = verify_extremal(&problem, &sol, &ts).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serialize"));
            Ok(if report.mass_dev < 0.05 && report.energy_dev < 0.05 {
                0
            } else {
                1
            })
        }
    }
}

#[derive(Deserialize)]
struct PotentialSpec {
    kind: String,
    measure: AtomicMeasure,
    params: ParamSet,
}

fn multiplier(cmd: MultiplierCmd) -> Result<i32, String> {
    match cmd {
        MultiplierCmd::Certify {
            g,
            space,
            p,
            s,
            lambda,
            family,
        } => {
            let (seed, count) = family
                .split_once(':')
                .ok_or("family must be seed:N")
                .and_then(|(a, b)| {
                    Ok((
                        a.parse::<u64>().map_err(|_| "bad family seed")?,
                        b.parse::<usize>().map_err(|_| "bad family size")?,
                    ))
                })
                .map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(&g).map_err(|e| e.to_string())?;
            let max_order = ballkit::k_s(s) as usize;
            let fun: Arc<dyn BallFun> = if let Ok(poly) = serde_json::from_str::<Polynomial>(&text)
            {
                Arc::new(PolyFun::new(poly, max_order))
            } else {
                let spec: PotentialSpec = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                let mut ps = spec.params.clone();
                ps.lambda = lambda.or(ps.lambda);
                match spec.kind.as_str() {
                    "U" => {
                        let sphere = SphereGrid::build(ps.n, 10).map_err(|e| e.to_string())?;
                        Arc::new(
                            u_potential(&spec.measure, &ps, &sphere, 24, 4)
                                .map_err(|e| e.to_string())?,
                        )
                    }
                    "V" => Arc::new(v_potential(&spec.measure, &ps, 28, 4).map_err(|e| e.to_string())?),
                    "Cs" => {
                        // C_s(I_s(μ)^{p'-1}) from the sphere-density route
                        let sphere = SphereGrid::build(ps.n, 12).map_err(|e| e.to_string())?;
                        let pp1 = ps.p_prime() - 1.0;
                        let mut ks = KernelSum::new(ps.n);
                        for (zeta, w) in sphere.nodes.iter().zip(&sphere.weights) {
                            let pot = riesz_potential(&spec.measure, ps.n, ps.s, zeta, Some(0.05));
                            ks.terms.push(KernelTerm {
                                coef: C64::new(w * pot.powf(pp1), 0.0),
                                dir: zeta.clone(),
                                rscale: 1.0,
                                lambda: ps.n as f64 - ps.s,
                            });
                        }
                        Arc::new(ks)
                    }
                    other => return Err(format!("unknown potential kind {other:?}")),
                }
            };
            let n = fun.dim();
            let tent = TentContext::build(n, 8, 8, 16).map_err(|e| e.to_string())?;
            let fam = test_family(n, seed, count, count / 4, 8, max_order);
            let report = certify(fun, format!("{space} g from {}", g.display()), p, s, &tent, &fam)
                .map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serialize"));
            Ok(if report.pass { 0 } else { 1 })
        }
        MultiplierCmd::Corona { covers } => {
            #[derive(Deserialize)]
            struct Covers {
                params: ParamSet,
                #[serde(default = "default_order")]
                order: u32,
                caps: Vec<CapSpec>,
            }
            fn default_order() -> u32 {
                12
            }
            let spec: Covers = read_json(&covers)?;
            let grid = SphereGrid::build(spec.params.n, spec.order).map_err(|e| e.to_string())?;
            let km = KernelMatrix::build(&grid, spec.params.s);
            let mut parts: Vec<Arc<dyn BallFun>> = Vec::new();
            let mut covered = vec![false; km.len()];
            for cap in &spec.caps {
                let center: Vec<C64> =
                    cap.center.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
                let e = km.cap_nodes(&center, cap.radius);
                for &j in &e {
                    covered[j] = true;
                }
                if e.is_empty() {
                    return Err("a cover cap contains no grid nodes".into());
                }
                let problem = CapacityProblem {
                    matrix: &km,
                    e_nodes: e,
                    params: spec.params.clone(),
                    options: SolverOptions::default(),
                };
                let sol = solve_capacity(&problem).map_err(|e| e.to_string())?;
                let mu = sol.extremal_measure(&km, spec.params.p);
                let total = mu.total_mass();
                let mu = AtomicMeasure::new(
                    mu.atoms
                        .into_iter()
                        .filter(|a| a.mass > 1e-8 * total)
                        .collect(),
                )
                .map_err(|e| e.to_string())?;
                parts.push(Arc::new(
                    v_potential(&mu, &spec.params, 28, 4).map_err(|e| e.to_string())?,
                ));
            }
            if !covered.iter().all(|&c| c) {
                println!("{}", json!({ "pass": false, "reason": "caps do not cover the grid" }));
                return Ok(1);
            }
            let report = corona_solve(parts).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serialize"));
            Ok(if report.pass { 0 } else { 1 })
        }
        MultiplierCmd::Exceptional { k_file, levels } => {
            #[derive(Deserialize)]
            struct KSpec {
                direction: Vec<f64>,
                #[serde(default = "default_r0")]
                r0: f64,
                params: ParamSet,
                #[serde(default = "default_order16")]
                order: u32,
            }
            fn default_r0() -> f64 {
                0.4
            }
            fn default_order16() -> u32 {
                16
            }
            let spec: KSpec = read_json(&k_file)?;
            if spec.direction.len() != 2 * spec.params.n {
                return Err("direction has the wrong dimension".into());
            }
            let dir: Vec<C64> = spec
                .direction
                .chunks(2)
                .map(|c| C64::new(c[0], c[1]))
                .collect();
            let grid = SphereGrid::build(spec.params.n, spec.order).map_err(|e| e.to_string())?;
            let km = KernelMatrix::build(&grid, spec.params.s);
            let tent = TentContext::build(spec.params.n, 6, 8, 16).map_err(|e| e.to_string())?;
            // snap the direction to the nearest node so every cap is nonempty
            let nearest = km
                .nodes
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    ballkit::quad::kdist(a, &dir)
                        .partial_cmp(&ballkit::quad::kdist(b, &dir))
                        .unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            let k_dir = km.nodes[nearest].clone();
            let report = exceptional_sequence(&km, &k_dir, &spec.params, levels, spec.r0, &tent)
                .map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serialize"));
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}

fn suite(name: &str, verify: &VerifyOpts) -> Result<i32, String> {
    let members = suite_members(name).ok_or(format!("unknown suite {name:?}"))?;
    let ctx = verify.context(0)?;
    let mut reports = Vec::new();
    let mut all_pass = true;
    for member in members {
        let check = find_check(member).expect("registered");
        let report = check.run(&ctx);
        println!(
            "{}: {} ({})",
            report.name,
            if report.pass { "PASS" } else { "FAIL" },
            report.max_residual
        );
        all_pass &= report.pass;
        reports.push(report);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({ "suite": name, "pass": all_pass, "reports": reports }))
            .expect("serialize")
    );
    Ok(if all_pass { 0 } else { 1 })
}
