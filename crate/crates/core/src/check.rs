//! Named verification routines behind a common trait, registered by name and
//! selected at runtime (`ops verify --identity`, `identities run --which`,
//! `suite`). Each check pins its tolerances in code; a suite passes iff every
//! member check passes. The optional corruption hook in the context is the
//! negative control: perturbed eigenvalue tables or expansion coefficients must
//! turn the exact suites red.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::capacity::{
    capacitary_weight, solve_capacity, verify_extremal, CapacityProblem, KernelMatrix,
    SolverOptions,
};
use crate::identities::{
    leibnitz_decompose, master_a_identity_violation, master_decompose, q_bound_check,
    taylor_error, QBoundInstance,
};
use crate::multiplier::{
    build_capacitary_multiplier, corona_solve, exceptional_sequence, test_family, MultiplierRoute,
};
use crate::poly::{
    monomial_moment_sphere, rat, rat_to_f64, ratq, random_polynomial, random_rational_point,
    MultiIndex, Polynomial,
};
use crate::potential::{
    riesz_constant, v_potential, wolff_comparability, wolff_exact,
    wolff_quadrature, a1_ratio, AtomicMeasure, Atom, BallFun, ParamSet,
};
use crate::quad::{c_n_f64, herm, BallGrid, SphereGrid, TentContext};
use crate::spectral::{Corruption, DiagonalOp, OpAlgebra};
use crate::{C64, Rat};

/// The one seeded generator type used across the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct CheckContext {
    pub seed: u64,
    /// 0 = the check's own default
    pub trials: usize,
    pub corruption: Option<Corruption>,
}

impl CheckContext {
    pub fn new(seed: u64) -> Self {
        CheckContext {
            seed,
            trials: 0,
            corruption: None,
        }
    }

    pub fn algebra(&self, n: usize) -> OpAlgebra {
        match &self.corruption {
            Some(c) => OpAlgebra::with_corruption(n, c.clone()),
            None => OpAlgebra::new(n),
        }
    }

    fn trials_or(&self, default: usize) -> usize {
        if self.trials == 0 {
            default
        } else {
            self.trials
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub trials: usize,
    pub max_residual: String,
    pub detail: serde_json::Value,
}

// the wire format names the identity and carries a PASS/FAIL status string
impl Serialize for CheckReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("CheckReport", 5)?;
        st.serialize_field("identity", &self.name)?;
        st.serialize_field("status", if self.pass { "PASS" } else { "FAIL" })?;
        st.serialize_field("trials", &self.trials)?;
        st.serialize_field("max_residual", &self.max_residual)?;
        st.serialize_field("detail", &self.detail)?;
        st.end()
    }
}

impl CheckReport {
    fn pass(name: &str, trials: usize, detail: serde_json::Value) -> Self {
        CheckReport {
            name: name.into(),
            pass: true,
            trials,
            max_residual: "0".into(),
            detail,
        }
    }

    fn fail(name: &str, trials: usize, residual: String, detail: serde_json::Value) -> Self {
        CheckReport {
            name: name.into(),
            pass: false,
            trials,
            max_residual: residual,
            detail,
        }
    }

    fn error(name: &str, err: impl std::fmt::Display) -> Self {
        CheckReport {
            name: name.into(),
            pass: false,
            trials: 0,
            max_residual: "error".into(),
            detail: json!({ "error": err.to_string() }),
        }
    }
}

/// A named verification strategy; the registry below owns one instance of each.
pub trait Check: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, ctx: &CheckContext) -> CheckReport;
}

static CHECKS: &[&dyn Check] = &[
    &ReproducingCheck,
    &InverseCheck,
    &SemigroupCheck,
    &IntpartsPCheck,
    &RkvpnCheck,
    &TaylorCheck,
    &IntpartsMomentCheck,
    &LeibnitzCheck,
    &MasterCheck,
    &MomentsCheck,
    &SpectralQuadCheck,
    &QBoundCheck,
    &WolffAtomCheck,
    &WolffComparabilityCheck,
    &CapacityCheck,
    &MultiplierCheck,
    &CoronaCheck,
    &ExceptionalCheck,
];

pub fn all_checks() -> &'static [&'static dyn Check] {
    CHECKS
}

pub fn find_check(name: &str) -> Option<&'static dyn Check> {
    CHECKS.iter().copied().find(|c| c.name() == name)
}

/// Suite composition; `full` is every registered check.
pub fn suite_members(suite: &str) -> Option<Vec<&'static str>> {
    match suite {
        "exact" => Some(vec![
            "reproducing",
            "inverse",
            "semigroup",
            "intpartsp",
            "rkvpn",
            "taylor",
            "intparts",
            "leibnitz",
            "master",
        ]),
        "potentials" => Some(vec![
            "moments",
            "spectral-quad",
            "qbound",
            "wolff-atom",
            "wolff-comparability",
        ]),
        "capacity" => Some(vec!["capacity", "multiplier", "corona", "exceptional"]),
        "full" => Some(CHECKS.iter().map(|c| c.name()).collect()),
        _ => None,
    }
}

// --- exact layer ---------------------------------------------------------------

struct ReproducingCheck;

impl Check for ReproducingCheck {
    fn name(&self) -> &'static str {
        "reproducing"
    }

    fn summary(&self) -> &'static str {
        "P^{N,N}(f) = f exactly on random polynomials"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let trials = ctx.trials_or(100);
        let mut r = rng(ctx.seed);
        for t in 0..trials {
            let n = 1 + t % 3;
            let alg = ctx.algebra(n);
            let nn = rat((1 + t % 5) as i64);
            let f = random_polynomial(&mut r, n, 10, 10);
            let p = match alg.bergman(nn.clone(), nn) {
                Ok(p) => p,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            match alg.apply(&p, &f) {
                Ok(pf) if pf == f => {}
                Ok(_) => {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "exact residual nonzero".into(),
                        json!({ "trial": t, "n": n }),
                    )
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        CheckReport::pass(self.name(), trials, json!({ "degrees": "≤ 10", "N": "1..5" }))
    }
}

struct InverseCheck;

impl Check for InverseCheck {
    fn name(&self) -> &'static str {
        "inverse"
    }

    fn summary(&self) -> &'static str {
        "T∘P = P∘T = id and the expT coefficient route matches the reciprocal eigenvalues"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let mut r = rng(ctx.seed ^ 0x1a);
        let alg = ctx.algebra(2);
        let mut pairs: Vec<(Rat, Rat)> = Vec::new();
        for nv in 1..=5i64 {
            for mv in 1..=5i64 {
                pairs.push((rat(nv), rat(mv)));
            }
        }
        pairs.push((rat(0), ratq(-1, 2)));
        let mut trials = 0;
        for (nn, mm) in &pairs {
            let p = match alg.bergman(nn.clone(), mm.clone()) {
                Ok(p) => p,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let t = match alg.inverse_operator(nn.clone(), mm.clone()) {
                Ok(t) => t,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            for _ in 0..2 {
                trials += 1;
                let f = random_polynomial(&mut r, 2, 8, 8);
                let round = |a: &DiagonalOp, b: &DiagonalOp| -> crate::Result<Polynomial> {
                    alg.apply(b, &alg.apply(a, &f)?)
                };
                match (round(&p, &t), round(&t, &p)) {
                    (Ok(tp), Ok(pt)) if tp == f && pt == f => {}
                    (Ok(_), Ok(_)) => {
                        return CheckReport::fail(
                            self.name(),
                            trials,
                            "composition is not the identity".into(),
                            json!({ "N": nn.to_string(), "M": mm.to_string() }),
                        )
                    }
                    (Err(e), _) | (_, Err(e)) => return CheckReport::error(self.name(), e),
                }
            }
            // expT route: Σ_j a_j λ_k^{M+l,N+j} · λ_k^{N,M} = 1 for k ≤ 30
            let l = 1u32;
            let a = match alg.expt_coefficients(nn, mm, l) {
                Ok(a) => a,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            for k in 0..=30u32 {
                let mut acc = Rat::from_integer(0.into());
                for (j, aj) in a.iter().enumerate() {
                    let lam = match alg.bergman_eigenvalue(
                        &(mm + rat(l as i64)),
                        &(nn + rat(j as i64)),
                        k,
                    ) {
                        Ok(v) => v,
                        Err(e) => return CheckReport::error(self.name(), e),
                    };
                    acc += aj * lam;
                }
                let lam = match alg.bergman_eigenvalue(nn, mm, k) {
                    Ok(v) => v,
                    Err(e) => return CheckReport::error(self.name(), e),
                };
                if acc * lam != rat(1) {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "expT/reciprocal mismatch".into(),
                        json!({ "N": nn.to_string(), "M": mm.to_string(), "k": k }),
                    );
                }
            }
        }
        CheckReport::pass(
            self.name(),
            trials,
            json!({ "pairs": pairs.len(), "expT_checked_to_degree": 30 }),
        )
    }
}

struct SemigroupCheck;

impl Check for SemigroupCheck {
    fn name(&self) -> &'static str {
        "semigroup"
    }

    fn summary(&self) -> &'static str {
        "λ^{N,M}·λ^{M,L} = λ^{N,L} exactly for k ≤ 30"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let alg = ctx.algebra(2);
        let mut trials = 0;
        for nv in 1..=5i64 {
            for mv in 1..=5i64 {
                for lv in 1..=5i64 {
                    for k in 0..=30u32 {
                        trials += 1;
                        let get = |a: i64, b: i64| alg.bergman_eigenvalue(&rat(a), &rat(b), k);
                        match (get(nv, mv), get(mv, lv), get(nv, lv)) {
                            (Ok(a), Ok(b), Ok(c)) => {
                                if a * b != c {
                                    return CheckReport::fail(
                                        self.name(),
                                        trials,
                                        "semigroup identity broken".into(),
                                        json!({ "N": nv, "M": mv, "L": lv, "k": k }),
                                    );
                                }
                            }
                            _ => return CheckReport::error(self.name(), "eigenvalue error"),
                        }
                    }
                }
            }
        }
        CheckReport::pass(self.name(), trials, json!({ "params": "[1,5]^3" }))
    }
}

struct IntpartsPCheck;

impl Check for IntpartsPCheck {
    fn name(&self) -> &'static str {
        "intpartsp"
    }

    fn summary(&self) -> &'static str {
        "P^{N,M}(f) = R^m_{n+N+k}[P^{N+k+m,M}(R^k_{n+N}f)] exactly"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let mut r = rng(ctx.seed ^ 0x2b);
        let trials = ctx.trials_or(40);
        for t in 0..trials {
            let n = 1 + t % 2;
            let alg = ctx.algebra(n);
            let nn = rat((1 + t % 3) as i64);
            let mm = rat((1 + (t / 3) % 3) as i64);
            let k = (t % 3) as u32;
            let m = ((t / 2) % 3) as u32;
            let f = random_polynomial(&mut r, n, 6, 8);
            match alg.intparts_residual(&nn, &mm, k, m, &f) {
                Ok(res) if res.is_zero() => {}
                Ok(_) => {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "nonzero residual".into(),
                        json!({ "trial": t }),
                    )
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        CheckReport::pass(self.name(), trials, json!({}))
    }
}

struct RkvpnCheck;

impl Check for RkvpnCheck {
    fn name(&self) -> &'static str {
        "rkvpn"
    }

    fn summary(&self) -> &'static str {
        "h = Σ a_j P^{N+j,N}(R^1_M h) + a_{m+1} P^{N+m,N}(h) exactly"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let mut r = rng(ctx.seed ^ 0x3c);
        let trials = ctx.trials_or(30);
        for t in 0..trials {
            let n = 1 + t % 2;
            let alg = ctx.algebra(n);
            let nn = rat((1 + t % 3) as i64);
            let mm = rat((1 + (t / 2) % 4) as i64);
            let m = 1 + (t % 3) as u32;
            let h = random_polynomial(&mut r, n, 7, 8);
            match alg.rkvpn_residual(&nn, &mm, m, &h) {
                Ok(res) if res.is_zero() => {}
                Ok(_) => {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "nonzero residual".into(),
                        json!({ "trial": t, "N": nn.to_string(), "M": mm.to_string(), "m": m }),
                    )
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        CheckReport::pass(self.name(), trials, json!({}))
    }
}

struct TaylorCheck;

impl Check for TaylorCheck {
    fn name(&self) -> &'static str {
        "taylor"
    }

    fn summary(&self) -> &'static str {
        "E_direct = E_kernel exactly on random (f, w, k, L, l)"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let trials = ctx.trials_or(50);
        let mut r = rng(ctx.seed ^ 0x4d);
        for t in 0..trials {
            let n = 1 + t % 2;
            let alg = ctx.algebra(n);
            let f = random_polynomial(&mut r, n, 5, 6);
            let w = random_rational_point(&mut r, n, 0.7);
            let k = (t % 4) as u32;
            let ll = (t % 3) as u32;
            let l = ((t / 3) % 2) as u32;
            match taylor_error(&alg, &f, &w, k, ll, l) {
                Ok(te) if te.direct == te.kernel => {}
                Ok(_) => {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "kernel route disagrees with direct subtraction".into(),
                        json!({ "trial": t, "n": n, "k": k, "L": ll, "l": l }),
                    )
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        CheckReport::pass(self.name(), trials, json!({ "n": "≤ 2", "deg": "≤ 5" }))
    }
}

struct IntpartsMomentCheck;

impl Check for IntpartsMomentCheck {
    fn name(&self) -> &'static str {
        "intparts"
    }

    fn summary(&self) -> &'static str {
        "kernel-monomial integration by parts with c_{N,M,|α|}, exact"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let mut r = rng(ctx.seed ^ 0x5e);
        let trials = ctx.trials_or(30);
        let cases = [
            (rat(2), rat(3), vec![1u32, 0]),
            (rat(3), rat(2), vec![0, 1]),
            (rat(2), rat(2), vec![1, 0]),
            (ratq(5, 2), rat(1), vec![1, 1]),
            (rat(3), rat(3), vec![2, 0]),
        ];
        let alg = ctx.algebra(2);
        for t in 0..trials {
            let (nn, mm, alpha) = &cases[t % cases.len()];
            let g = random_polynomial(&mut r, 2, 5, 6);
            match crate::identities::intparts_moment_residual(
                &alg,
                nn,
                mm,
                &MultiIndex(alpha.clone()),
                &g,
            ) {
                Ok(res) if res.is_zero() => {}
                Ok(_) => {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "nonzero residual".into(),
                        json!({ "trial": t }),
                    )
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        CheckReport::pass(self.name(), trials, json!({}))
    }
}

struct LeibnitzCheck;

impl Check for LeibnitzCheck {
    fn name(&self) -> &'static str {
        "leibnitz"
    }

    fn summary(&self) -> &'static str {
        "f R¹_{n+2}g − R¹_{n+2}(fg) + (1/(n+2)) g Rf = 0 and Taylor-exact Q̃ = 0"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let trials = ctx.trials_or(100);
        let mut r = rng(ctx.seed ^ 0x6f);
        let t_idx = ratq(1, 2);
        for t in 0..trials {
            let n = 1 + t % 3;
            let alg = ctx.algebra(n);
            let f = random_polynomial(&mut r, n, 6, 7);
            let g = random_polynomial(&mut r, n, 6, 7);
            let r1 = match alg.rkt_operator(1, rat(n as i64 + 2)) {
                Ok(op) => op,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let lhs = (|| -> crate::Result<Polynomial> {
                let a = f.multiply(&alg.apply(&r1, &g)?)?;
                let b = alg.apply(&r1, &f.multiply(&g)?)?;
                let c = g
                    .multiply(&f.radial_derivative())?
                    .scale_rat(&ratq(1, n as i64 + 2));
                a.sub(&b)?.add(&c)
            })();
            match lhs {
                Ok(res) if res.is_zero() => {}
                Ok(_) => {
                    return CheckReport::fail(
                        self.name(),
                        trials,
                        "special-case residual nonzero".into(),
                        json!({ "trial": t, "n": n }),
                    )
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
            // every fifth trial also runs the full decomposition at k ≥ deg f
            if t % 5 == 0 && n == 2 {
                let small = random_polynomial(&mut r, 2, 3, 4);
                match leibnitz_decompose(&alg, &rat(6), &rat(4), 3, &t_idx, &small, &g) {
                    Ok(ld) if ld.residual_q.is_zero() => {}
                    Ok(_) => {
                        return CheckReport::fail(
                            self.name(),
                            trials,
                            "Taylor-exact residual nonzero".into(),
                            json!({ "trial": t }),
                        )
                    }
                    Err(e) => return CheckReport::error(self.name(), e),
                }
            }
        }
        CheckReport::pass(self.name(), trials, json!({}))
    }
}

struct MasterCheck;

impl Check for MasterCheck {
    fn name(&self) -> &'static str {
        "master"
    }

    fn summary(&self) -> &'static str {
        "master decomposition reconstructs f·P^{N,M}(g) exactly at (2,1,1,4,8)"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let trials = ctx.trials_or(100);
        let mut r = rng(ctx.seed ^ 0x70);
        let alg = ctx.algebra(2);
        let (nn, mm, k, jj) = (rat(1), rat(1), 4u32, 8u32);
        let t_idx = ratq(1, 2);
        for t in 0..trials {
            let f = random_polynomial(&mut r, 2, 5, 5);
            let g = random_polynomial(&mut r, 2, 4, 5);
            let md = match master_decompose(&alg, &nn, &mm, k, jj, &t_idx, &f, &g) {
                Ok(md) => md,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            if md.residual_sub != md.residual_acc {
                return CheckReport::fail(
                    self.name(),
                    trials,
                    "subtraction and accumulated residuals differ".into(),
                    json!({ "trial": t }),
                );
            }
            if t == 0 {
                match master_a_identity_violation(&alg, &nn, &mm, jj, &md.a, 30) {
                    Ok(None) => {}
                    Ok(Some(m)) => {
                        return CheckReport::fail(
                            self.name(),
                            trials,
                            format!("a_i spectral identity fails at degree {m}"),
                            json!({}),
                        )
                    }
                    Err(e) => return CheckReport::error(self.name(), e),
                }
            }
        }
        CheckReport::pass(
            self.name(),
            trials,
            json!({ "params": "(n,N,M,k,J) = (2,1,1,4,8)", "a_identity_to_degree": 30 }),
        )
    }
}

// --- numerical layer -------------------------------------------------------------

struct MomentsCheck;

impl Check for MomentsCheck {
    fn name(&self) -> &'static str {
        "moments"
    }

    fn summary(&self) -> &'static str {
        "sphere/ball quadrature reproduces the closed moments"
    }

    fn run(&self, _ctx: &CheckContext) -> CheckReport {
        let mut worst: f64 = 0.0;
        for n in 1..=3usize {
            let grid = match SphereGrid::build(n, 12) {
                Ok(g) => g,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            for d in 0..=10u32 {
                for alpha in MultiIndex::of_degree(n, d).into_iter().take(6) {
                    let exact = rat_to_f64(&monomial_moment_sphere(&alpha));
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
        }
        // ν_N masses
        for nv in 1..=8 {
            let grid = match BallGrid::build(2, nv as f64, 6, 10) {
                Ok(g) => g,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let mass = c_n_f64(2, nv as f64) * grid.integrate(|_, _| 1.0);
            worst = worst.max((mass - 1.0).abs());
        }
        if worst < 1e-10 {
            CheckReport::pass(self.name(), 1, json!({ "worst_rel_err": worst }))
        } else {
            CheckReport::fail(
                self.name(),
                1,
                format!("{worst:.3e}"),
                json!({ "tolerance": 1e-10 }),
            )
        }
    }
}

struct SpectralQuadCheck;

impl Check for SpectralQuadCheck {
    fn name(&self) -> &'static str {
        "spectral-quad"
    }

    fn summary(&self) -> &'static str {
        "direct kernel quadrature of P^{N,M} matches the eigenvalues to 1e-8"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let alg = OpAlgebra::new(2); // quadrature side is never corrupted
        let _ = ctx;
        let zs = [
            vec![C64::new(0.31, 0.17), C64::new(-0.22, 0.08)],
            vec![C64::new(-0.12, 0.41), C64::new(0.09, -0.21)],
        ];
        let alphas = [
            vec![0u32, 0],
            vec![1, 0],
            vec![1, 1],
            vec![2, 1],
            vec![0, 4],
        ];
        let mut worst: f64 = 0.0;
        for (nv, mv) in [(1i64, 1i64), (1, 2), (2, 1)] {
            let grid = match BallGrid::build(2, nv as f64, 32, 40) {
                Ok(g) => g,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let cn = c_n_f64(2, nv as f64);
            for alpha in &alphas {
                let mi = MultiIndex(alpha.clone());
                let lam = match alg.bergman_eigenvalue(&rat(nv), &rat(mv), mi.degree()) {
                    Ok(l) => rat_to_f64(&l),
                    Err(e) => return CheckReport::error(self.name(), e),
                };
                for z in &zs {
                    let quad = grid.integrate_c(|w, _| {
                        let mono: C64 = alpha
                            .iter()
                            .enumerate()
                            .map(|(j, &e)| w[j].powu(e))
                            .product();
                        let base = C64::new(1.0, 0.0) - herm(z, w);
                        mono * base.powf(-(2.0 + mv as f64))
                    }) * cn;
                    let expect: C64 = alpha
                        .iter()
                        .enumerate()
                        .map(|(j, &e)| z[j].powu(e))
                        .product::<C64>()
                        * lam;
                    let scale = expect.norm().max(1e-6);
                    worst = worst.max((quad - expect).norm() / scale);
                }
            }
        }
        if worst < 1e-8 {
            CheckReport::pass(self.name(), 30, json!({ "worst_rel_err": worst }))
        } else {
            CheckReport::fail(self.name(), 30, format!("{worst:.3e}"), json!({}))
        }
    }
}

struct QBoundCheck;

impl Check for QBoundCheck {
    fn name(&self) -> &'static str {
        "qbound"
    }

    fn summary(&self) -> &'static str {
        "|(1+R)^m Q̃| / printed majorant finite and trendwise non-increasing to depth 2^-12"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let z2 = Polynomial::var(2, 1);
        let mix = Polynomial::var(2, 0)
            .multiply(&Polynomial::var(2, 1))
            .unwrap()
            .add(&Polynomial::one(2))
            .unwrap();
        let d1 = Polynomial::var(1, 0).add(&Polynomial::one(1)).unwrap();
        let mk = |nt: Rat, mt: Rat, k: u32, big_l: u32, l: u32, m: u32, fa: Vec<u32>, g: Polynomial| {
            QBoundInstance {
                nt,
                mt,
                k,
                t: ratq(1, 2),
                big_l,
                l,
                m,
                f_alpha: MultiIndex(fa),
                g,
            }
        };
        let instances = vec![
            (2usize, mk(rat(5), rat(1), 1, 5, 0, 6, vec![3, 0], z2.clone())),
            (2, mk(rat(5), rat(1), 1, 5, 1, 7, vec![3, 0], z2.clone())),
            (2, mk(rat(3), rat(1), 1, 3, 0, 4, vec![2, 1], mix.clone())),
            (2, mk(ratq(3, 2), rat(1), 0, 2, 0, 2, vec![1, 0], z2.clone())),
            (2, mk(rat(2), ratq(1, 2), 0, 2, 0, 3, vec![0, 2], mix.clone())),
            (2, mk(rat(4), rat(2), 2, 4, 0, 5, vec![4, 1], z2.clone())),
            (2, mk(rat(5), ratq(3, 2), 1, 5, 0, 6, vec![2, 2], mix)),
            (2, mk(rat(3), rat(1), 1, 3, 1, 5, vec![0, 3], z2)),
            (1, mk(rat(4), rat(1), 0, 4, 0, 4, vec![2], d1.clone())),
            (1, mk(rat(3), rat(1), 0, 3, 1, 4, vec![3], d1)),
        ];
        let trials = instances.len();
        let mut sup: f64 = 0.0;
        for (i, (n, inst)) in instances.iter().enumerate() {
            let alg = ctx.algebra(*n);
            match q_bound_check(&alg, inst, 8, 12, ctx.seed ^ (i as u64)) {
                Ok(rep) => {
                    if !rep.trend_ok || !rep.sup_ratio.is_finite() {
                        return CheckReport::fail(
                            self.name(),
                            trials,
                            format!("instance {i}: sup {}", rep.sup_ratio),
                            json!({ "instance": i, "trend_ok": rep.trend_ok }),
                        );
                    }
                    sup = sup.max(rep.sup_ratio);
                }
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        CheckReport::pass(
            self.name(),
            trials,
            json!({ "empirical_constant": sup, "rays": 8, "depths": 12 }),
        )
    }
}

struct WolffAtomCheck;

impl Check for WolffAtomCheck {
    fn name(&self) -> &'static str {
        "wolff-atom"
    }

    fn summary(&self) -> &'static str {
        "single-atom Wolff closed form vs quadrature, 1e-6 relative"
    }

    fn run(&self, _ctx: &CheckContext) -> CheckReport {
        let mu = AtomicMeasure::new(vec![Atom {
            point: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            mass: 1.0,
        }])
        .unwrap();
        let zeta = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let exact = wolff_exact(&mu, 2, 0.5, 2.0, &zeta, None, 0.0, None);
        if (exact - 1.0).abs() > 1e-12 {
            return CheckReport::fail(
                self.name(),
                1,
                format!("closed form {exact} ≠ 1"),
                json!({}),
            );
        }
        match wolff_quadrature(&mu, 2, 0.5, 2.0, &zeta, None, 32) {
            Ok(q) if (q - exact).abs() <= 1e-6 * exact => CheckReport::pass(
                self.name(),
                1,
                json!({ "exact": exact, "quadrature": q }),
            ),
            Ok(q) => CheckReport::fail(
                self.name(),
                1,
                format!("{:.3e}", (q - exact).abs() / exact),
                json!({ "exact": exact, "quadrature": q }),
            ),
            Err(e) => CheckReport::error(self.name(), e),
        }
    }
}

struct WolffComparabilityCheck;

impl Check for WolffComparabilityCheck {
    fn name(&self) -> &'static str {
        "wolff-comparability"
    }

    fn summary(&self) -> &'static str {
        "energy ≍ ∫W dμ band with spread ≤ 3 over random mollified measures"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let grid = match SphereGrid::build(2, 24) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let mut r = rng(ctx.seed ^ 0x81);
        let n_measures = ctx.trials_or(20);
        let measures: Vec<AtomicMeasure> = (0..n_measures)
            .map(|_| {
                let atoms = (0..5)
                    .map(|_| Atom {
                        point: crate::identities::random_direction(&mut r, 2),
                        mass: 0.2 + 1.8 * rand::Rng::gen::<f64>(&mut r),
                    })
                    .collect();
                AtomicMeasure::new(atoms).unwrap()
            })
            .collect();
        match wolff_comparability(&measures, 2, 0.5, 2.0, &grid, 0.1, 200, ctx.seed ^ 0x82) {
            Ok(rep) => {
                let ok = rep.spread <= 3.0 && rep.pointwise_max.is_finite() && rep.band.0 > 0.0;
                let detail = json!({
                    "band": rep.band,
                    "spread": rep.spread,
                    "pointwise_max": rep.pointwise_max,
                });
                if ok {
                    CheckReport::pass(self.name(), n_measures, detail)
                } else {
                    CheckReport::fail(
                        self.name(),
                        n_measures,
                        format!("spread {:.3}", rep.spread),
                        detail,
                    )
                }
            }
            Err(e) => CheckReport::error(self.name(), e),
        }
    }
}

struct CapacityCheck;

impl Check for CapacityCheck {
    fn name(&self) -> &'static str {
        "capacity"
    }

    fn summary(&self) -> &'static str {
        "capacity solver: symmetry and singleton oracles, monotonicity, gap, extremal properties"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let start = std::time::Instant::now();
        let params = ParamSet {
            n: 2,
            s: 0.5,
            p: 2.0,
            lambda: None,
        };
        let grid = match SphereGrid::build(2, 16) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let km = KernelMatrix::build(&grid, params.s);
        let solve = |e: Vec<usize>| {
            solve_capacity(&CapacityProblem {
                matrix: &km,
                e_nodes: e,
                params: params.clone(),
                options: SolverOptions::default(),
            })
        };
        let mut detail = serde_json::Map::new();

        // whole-sphere capacity against the symmetry oracle K^{-p}: K = I_s(1)
        // is constant by symmetry, evaluated by the independent disk-density
        // quadrature and cross-checked against the Γ-ratio closed form
        let geom = match crate::quad::CapGeometry::new(2) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let k_quad = geom.cap_integral(params.s - 2.0, 2.0);
        let kdev = (k_quad - riesz_constant(2, params.s)).abs() / riesz_constant(2, params.s);
        let sphere_grid = match SphereGrid::build(2, 20) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let sphere_km = KernelMatrix::build(&sphere_grid, params.s);
        let sphere_sol = match solve_capacity(&CapacityProblem {
            matrix: &sphere_km,
            e_nodes: (0..sphere_km.len()).collect(),
            params: params.clone(),
            options: SolverOptions::default(),
        }) {
            Ok(s) => s,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let oracle = k_quad.powf(-params.p);
        let sphere_dev = (sphere_sol.value - oracle).abs() / oracle;
        detail.insert("sphere_value".into(), json!(sphere_sol.value));
        detail.insert("sphere_oracle".into(), json!(oracle));
        detail.insert("sphere_dev".into(), json!(sphere_dev));
        detail.insert("K_quadrature_vs_closed_form".into(), json!(kdev));
        if sphere_dev > 0.02 || sphere_sol.duality_gap > 1e-2 || kdev > 0.01 {
            return CheckReport::fail(
                self.name(),
                1,
                format!("sphere dev {sphere_dev:.4}, K dev {kdev:.4}"),
                json!(detail),
            );
        }

        // singleton closed form
        let j0 = km.len() / 3;
        let single = match solve(vec![j0]) {
            Ok(s) => s,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let pp = params.p_prime();
        let denom: f64 = km
            .row(j0)
            .iter()
            .zip(&km.weights)
            .map(|(k, w)| w * k.powf(pp))
            .sum();
        let closed = denom.powf(1.0 - params.p);
        let single_dev = (single.value - closed).abs() / closed;
        detail.insert("singleton_dev".into(), json!(single_dev));
        if single_dev > 0.01 {
            return CheckReport::fail(
                self.name(),
                2,
                format!("singleton dev {single_dev:.4}"),
                json!(detail),
            );
        }

        // monotonicity and subadditivity on nested/paired caps
        let mut r = rng(ctx.seed ^ 0x93);
        for i in 0..5 {
            let c = crate::identities::random_direction(&mut r, 2);
            let small = km.cap_nodes(&c, 0.15 + 0.02 * i as f64);
            let large = km.cap_nodes(&c, 0.35 + 0.02 * i as f64);
            if small.is_empty() {
                continue;
            }
            let vs = match solve(small) {
                Ok(s) => s,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let vl = match solve(large.clone()) {
                Ok(s) => s,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            if vs.value > vl.value * (1.0 + 2.0 * vl.duality_gap + 1e-2) {
                return CheckReport::fail(
                    self.name(),
                    3,
                    "monotonicity violated".into(),
                    json!(detail),
                );
            }
            if vs.duality_gap > 1e-2 || vl.duality_gap > 1e-2 {
                return CheckReport::fail(self.name(), 3, "gap above 1e-2".into(), json!(detail));
            }
            // subadditivity with a second cap
            let c2 = crate::identities::random_direction(&mut r, 2);
            let e2 = km.cap_nodes(&c2, 0.3);
            if e2.is_empty() {
                continue;
            }
            let v2 = match solve(e2.clone()) {
                Ok(s) => s,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let mut union = large.clone();
            union.extend(&e2);
            union.sort_unstable();
            union.dedup();
            let vu = match solve(union) {
                Ok(s) => s,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            if vu.value > (vl.value + v2.value) * (1.0 + 2e-2) {
                return CheckReport::fail(
                    self.name(),
                    3,
                    "subadditivity violated".into(),
                    json!(detail),
                );
            }
        }

        // extremal properties on a 3-cap set
        let dirs = [
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.70710678), C64::new(0.70710678, 0.0)],
        ];
        let mut e3 = Vec::new();
        for d in &dirs {
            e3.extend(km.cap_nodes(d, 0.22));
        }
        e3.sort_unstable();
        e3.dedup();
        let problem = CapacityProblem {
            matrix: &km,
            e_nodes: e3.clone(),
            params: params.clone(),
            options: SolverOptions::default(),
        };
        let sol3 = match solve_capacity(&problem) {
            Ok(s) => s,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let report = match verify_extremal(&problem, &sol3, &[]) {
            Ok(r) => r,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        detail.insert("mass_dev".into(), json!(report.mass_dev));
        detail.insert("energy_dev".into(), json!(report.energy_dev));
        detail.insert("min_wolff_on_e".into(), json!(report.min_wolff_on_e));
        detail.insert(
            "max_nonlinear_potential".into(),
            json!(report.max_nonlinear_potential),
        );
        if report.mass_dev > 0.05 || report.energy_dev > 0.05 {
            return CheckReport::fail(
                self.name(),
                4,
                format!("(ii) devs {:.4}/{:.4}", report.mass_dev, report.energy_dev),
                json!(detail),
            );
        }
        // (iii)/(iv) stability under refinement
        let fine_grid = match SphereGrid::build(2, 18) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let fine_km = KernelMatrix::build(&fine_grid, params.s);
        let mut fine_e = Vec::new();
        for d in &dirs {
            fine_e.extend(fine_km.cap_nodes(d, 0.22));
        }
        fine_e.sort_unstable();
        fine_e.dedup();
        let fine_problem = CapacityProblem {
            matrix: &fine_km,
            e_nodes: fine_e,
            params: params.clone(),
            options: SolverOptions::default(),
        };
        let fine_sol = match solve_capacity(&fine_problem) {
            Ok(s) => s,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let fine_report = match verify_extremal(&fine_problem, &fine_sol, &[]) {
            Ok(r) => r,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let w_ratio = report.min_wolff_on_e / fine_report.min_wolff_on_e;
        let nl_ratio = report.max_nonlinear_potential / fine_report.max_nonlinear_potential;
        detail.insert("min_wolff_refinement_ratio".into(), json!(w_ratio));
        detail.insert("max_nonlinear_refinement_ratio".into(), json!(nl_ratio));
        let stable = report.min_wolff_on_e > 0.0
            && (0.5..=2.0).contains(&w_ratio)
            && report.max_nonlinear_potential.is_finite()
            && (0.5..=2.0).contains(&nl_ratio);
        // a1 diagnostic on the capacitary weight
        if let Ok(weight) = capacitary_weight(&problem, &sol3, 1.1) {
            detail.insert(
                "a1_ratio_delta_1.1".into(),
                json!(a1_ratio(&km.nodes, &km.weights, &weight, &[0.1, 0.25, 0.5])),
            );
        }
        let elapsed = start.elapsed().as_secs_f64();
        detail.insert("elapsed_s".into(), json!(elapsed));
        if !stable {
            return CheckReport::fail(
                self.name(),
                5,
                "extremal diagnostics unstable under refinement".into(),
                json!(detail),
            );
        }
        if elapsed > 120.0 {
            return CheckReport::fail(
                self.name(),
                5,
                format!("runtime {elapsed:.1}s over budget"),
                json!(detail),
            );
        }
        CheckReport::pass(self.name(), 5, json!(detail))
    }
}

struct MultiplierCheck;

impl Check for MultiplierCheck {
    fn name(&self) -> &'static str {
        "multiplier"
    }

    fn summary(&self) -> &'static str {
        "capacitary multipliers U/V: bounded deep sup, finite Carleson and multiplier ratios"
    }

    fn run(&self, ctx: &CheckContext) -> CheckReport {
        let grid = match SphereGrid::build(2, 12) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let tent = match TentContext::build(2, 8, 8, 16) {
            Ok(t) => t,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let dirs = [
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.70710678, 0.0), C64::new(0.0, 0.70710678)],
        ];
        let mut runs = Vec::new();
        // V route: p = 2
        {
            // n−sp must lie in (0, λ): s = 0.55 gives n−sp = 0.9 < λ = 0.95
            let params = ParamSet {
                n: 2,
                s: 0.55,
                p: 2.0,
                lambda: Some(0.95),
            };
            let km = KernelMatrix::build(&grid, params.s);
            let mut e = Vec::new();
            for d in &dirs {
                e.extend(km.cap_nodes(d, 0.2));
            }
            e.sort_unstable();
            e.dedup();
            let problem = CapacityProblem {
                matrix: &km,
                e_nodes: e,
                params: params.clone(),
                options: SolverOptions::default(),
            };
            let family = test_family(2, ctx.seed ^ 0xa1, 64, 16, 8, 1);
            match build_capacitary_multiplier(&problem, MultiplierRoute::V, &tent, &family) {
                Ok((_, _, rep)) => runs.push(rep),
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        // U route: p = 3/2, s = 1.25, λ = 0.8 (n−s = 0.75 < λ)
        {
            let params = ParamSet {
                n: 2,
                s: 1.25,
                p: 1.5,
                lambda: Some(0.8),
            };
            let km = KernelMatrix::build(&grid, params.s);
            let mut e = Vec::new();
            for d in &dirs {
                e.extend(km.cap_nodes(d, 0.2));
            }
            e.sort_unstable();
            e.dedup();
            let problem = CapacityProblem {
                matrix: &km,
                e_nodes: e,
                params: params.clone(),
                options: SolverOptions::default(),
            };
            let family = test_family(2, ctx.seed ^ 0xa2, 64, 16, 8, 2);
            match build_capacitary_multiplier(&problem, MultiplierRoute::U, &tent, &family) {
                Ok((_, _, rep)) => runs.push(rep),
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        let pass = runs.iter().all(|r| r.pass);
        let detail = json!({ "reports": runs });
        if pass {
            CheckReport::pass(self.name(), 2, detail)
        } else {
            CheckReport::fail(self.name(), 2, "certification failed".into(), detail)
        }
    }
}

struct CoronaCheck;

impl Check for CoronaCheck {
    fn name(&self) -> &'static str {
        "corona"
    }

    fn summary(&self) -> &'static str {
        "two-cap cover: min Re ΣV_i > 0 and bounded sup|1/ΣV_i|"
    }

    fn run(&self, _ctx: &CheckContext) -> CheckReport {
        // n−sp must lie in (0, λ): s = 0.55 gives n−sp = 0.9 < λ = 0.95
        let params = ParamSet {
            n: 2,
            s: 0.55,
            p: 2.0,
            lambda: Some(0.95),
        };
        let grid = match SphereGrid::build(2, 10) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let km = KernelMatrix::build(&grid, params.s);
        let centers = [
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
        ];
        let radius = 0.75;
        // the caps must cover the node set
        let covered = km.nodes.iter().all(|node| {
            centers
                .iter()
                .any(|c| crate::quad::kdist(c, node) < 2.0 * radius)
        });
        if !covered {
            return CheckReport::fail(self.name(), 1, "caps do not cover".into(), json!({}));
        }
        let mut parts: Vec<std::sync::Arc<dyn BallFun>> = Vec::new();
        for c in &centers {
            let e = km.cap_nodes(c, radius);
            let problem = CapacityProblem {
                matrix: &km,
                e_nodes: e,
                params: params.clone(),
                options: SolverOptions::default(),
            };
            let sol = match solve_capacity(&problem) {
                Ok(s) => s,
                Err(e) => return CheckReport::error(self.name(), e),
            };
            let mu = sol.extremal_measure(&km, params.p);
            // drop negligible atoms to keep the potential evaluation light
            let total = mu.total_mass();
            let mu = AtomicMeasure::new(
                mu.atoms
                    .into_iter()
                    .filter(|a| a.mass > 1e-8 * total)
                    .collect(),
            )
            .unwrap();
            match v_potential(&mu, &params, 20, 3) {
                Ok(v) => parts.push(std::sync::Arc::new(v)),
                Err(e) => return CheckReport::error(self.name(), e),
            }
        }
        match corona_solve(parts) {
            Ok(rep) => {
                let detail = json!({
                    "positivity_margin": rep.positivity_margin,
                    "sup_inverse": rep.sup_inverse,
                    "max_residual": rep.max_residual,
                });
                if rep.pass {
                    CheckReport::pass(self.name(), 1, detail)
                } else {
                    CheckReport::fail(
                        self.name(),
                        1,
                        format!("margin {:.3e}", rep.positivity_margin),
                        detail,
                    )
                }
            }
            Err(e) => CheckReport::error(self.name(), e),
        }
    }
}

struct ExceptionalCheck;

impl Check for ExceptionalCheck {
    fn name(&self) -> &'static str {
        "exceptional"
    }

    fn summary(&self) -> &'static str {
        "exceptional sequence: decreasing capacities, growing boundary values"
    }

    fn run(&self, _ctx: &CheckContext) -> CheckReport {
        // n−sp must lie in (0, λ): s = 0.55 gives n−sp = 0.9 < λ = 0.95
        let params = ParamSet {
            n: 2,
            s: 0.55,
            p: 2.0,
            lambda: Some(0.95),
        };
        let grid = match SphereGrid::build(2, 16) {
            Ok(g) => g,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let km = KernelMatrix::build(&grid, params.s);
        let tent = match TentContext::build(2, 6, 8, 16) {
            Ok(t) => t,
            Err(e) => return CheckReport::error(self.name(), e),
        };
        let k_dir = km.nodes[0].clone();
        match exceptional_sequence(&km, &k_dir, &params, 4, 0.4, &tent) {
            Ok(rep) => {
                let detail = json!({
                    "capacities": rep.capacities,
                    "increment_norms": rep.increment_norms,
                    "growth": rep.growth,
                    "growth_constant": rep.growth_constant,
                });
                if rep.pass {
                    CheckReport::pass(self.name(), 4, detail)
                } else {
                    CheckReport::fail(self.name(), 4, "growth or decay failed".into(), detail)
                }
            }
            Err(e) => CheckReport::error(self.name(), e),
        }
    }
}

pub use crate::multiplier::CertificationReport;
