//! Norm estimators for the holomorphic spaces on the ball, Carleson-condition
//! checks, constructive multiplier certification from capacitary extremal
//! measures, the Corona combination, and the exceptional-sequence demonstration.
//!
//! These are desk-scale certificates: the theorems guarantee the qualitative
//! facts, the harness measures the constants. A report never proves membership in
//! a multiplier space — it records sup ratios over a declared test family and
//! their stability under refinement.

use std::sync::Arc;

use serde::Serialize;

use crate::capacity::{solve_capacity, CapacityProblem, CapacitySolution};
use crate::poly::{random_polynomial, Polynomial};
use crate::potential::{
    one_plus_r_pow, u_potential, v_potential, AtomicMeasure, BallFun, KernelSum, KernelTerm,
    ParamSet, PolyFun, ReciprocalFun, SumFun,
};
use crate::quad::{BallGrid, SphereGrid, TentContext};
use crate::{C64, Error, Result};

/// ‖f‖_{H^p_s} = ‖(1+R)^s f‖_{H^p} for polynomials: the sup over radii is
/// attained on the boundary, where the norm is a sphere quadrature.
pub fn hardy_sobolev_norm(f: &Polynomial, p: f64, s: f64, grid: &SphereGrid) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let parts = f.homogeneous_parts();
    let weights: Vec<f64> = parts
        .iter()
        .map(|(d, _)| (1.0 + *d as f64).powf(s))
        .collect();
    grid.integrate(|zeta| {
        let mut acc = C64::new(0.0, 0.0);
        for ((_, part), w) in parts.iter().zip(&weights) {
            acc += part.eval(zeta) * *w;
        }
        acc.norm().powf(p)
    })
    .powf(1.0 / p)
}

/// Besov norm ‖f‖_{B^p_s} via the ball quadrature with weight (1−|z|²)^{(k−s)p−1};
/// needs the integer k > s.
pub fn besov_norm(fun: &dyn BallFun, p: f64, s: f64, k: u32, order: u32, radial: usize) -> Result<f64> {
    if (k as f64) <= s {
        return Err(Error::InvalidParameter("besov norm needs k > s".into()));
    }
    let nn = (k as f64 - s) * p; // weight exponent N − 1 = (k−s)p − 1
    let grid = BallGrid::build(fun.dim(), nn, order, radial)?;
    let v = grid.integrate(|z, _| {
        let d = fun.radial_derivs(z, k as usize);
        one_plus_r_pow(&d, k as usize).norm().powf(p)
    });
    Ok(v.powf(1.0 / p))
}

/// ‖f‖_{B^∞_t} = sup |(1+R)^k f|(1−|z|²)^{k−t} over a radial × angular sample.
pub fn besov_infty_norm(fun: &dyn BallFun, t: f64, k: u32, depths: u32) -> Result<f64> {
    if (k as f64) <= t {
        return Err(Error::InvalidParameter("besov-infty norm needs k > t".into()));
    }
    let dirs = SphereGrid::build(fun.dim(), 8)?;
    let mut sup: f64 = 0.0;
    for j in 0..=depths {
        let rho = 1.0 - 2f64.powi(-(j as i32));
        let om = 1.0 - rho * rho;
        for zeta in &dirs.nodes {
            let z: Vec<C64> = zeta.iter().map(|c| c * rho).collect();
            let d = fun.radial_derivs(&z, k as usize);
            sup = sup.max(one_plus_r_pow(&d, k as usize).norm() * om.powf(k as f64 - t));
        }
    }
    Ok(sup)
}

/// Radial derivatives of a function cached on the tent's inner nodes.
pub struct TentValues {
    /// per inner node: [f, Rf, …, R^k f]
    pub derivs: Vec<Vec<C64>>,
    pub max_order: usize,
}

pub fn eval_on_tent(fun: &dyn BallFun, tent: &TentContext, max_order: usize) -> TentValues {
    use rayon::prelude::*;
    let derivs: Vec<Vec<C64>> = tent
        .inner
        .par_iter()
        .map(|(w, _, _)| fun.radial_derivs(w, max_order))
        .collect();
    TentValues { derivs, max_order }
}

impl TentValues {
    /// |(1+R)^k ·| at every node.
    pub fn one_plus_r_abs(&self, k: usize) -> Vec<f64> {
        assert!(k <= self.max_order);
        self.derivs
            .iter()
            .map(|d| one_plus_r_pow(d, k).norm())
            .collect()
    }

    /// Binomial product rule: derivative values of the pointwise product.
    pub fn product(&self, other: &TentValues) -> TentValues {
        let m = self.max_order.min(other.max_order);
        let derivs = self
            .derivs
            .iter()
            .zip(&other.derivs)
            .map(|(da, db)| {
                (0..=m)
                    .map(|ord| {
                        let mut acc = C64::new(0.0, 0.0);
                        let mut binom = 1.0;
                        for j in 0..=ord {
                            acc += da[j] * db[ord - j] * binom;
                            binom *= (ord - j) as f64 / (j + 1) as f64;
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        TentValues {
            derivs,
            max_order: m,
        }
    }
}

/// Triebel–Lizorkin norm ‖f‖_{F^{p,q}_s} = ‖(1−|z|²)^{k−s}(1+R)^k f‖_{T^{p,q}}.
pub fn triebel_norm(
    fun: &dyn BallFun,
    p: f64,
    q: f64,
    s: f64,
    k: u32,
    tent: &TentContext,
) -> Result<f64> {
    let vals = eval_on_tent(fun, tent, k as usize);
    triebel_norm_values(&vals, p, q, s, k, tent)
}

pub fn triebel_norm_values(
    vals: &TentValues,
    p: f64,
    q: f64,
    s: f64,
    k: u32,
    tent: &TentContext,
) -> Result<f64> {
    if (k as f64) <= s {
        return Err(Error::InvalidParameter("triebel norm needs k > s".into()));
    }
    let base = vals.one_plus_r_abs(k as usize);
    let phi: Vec<f64> = base
        .iter()
        .zip(&tent.inner)
        .map(|(v, (_, _, om))| v * om.powf(k as f64 - s))
        .collect();
    Ok(tent.tent_norm_values(&phi, p, q, None))
}

/// Product of two evaluables; R is a derivation, so R^m(ab) expands binomially.
pub struct ProductFun {
    pub a: Arc<dyn BallFun>,
    pub b: Arc<dyn BallFun>,
}

impl BallFun for ProductFun {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64> {
        let da = self.a.radial_derivs(z, m);
        let db = self.b.radial_derivs(z, m);
        (0..=m)
            .map(|ord| {
                let mut acc = C64::new(0.0, 0.0);
                let mut binom = 1.0;
                for j in 0..=ord {
                    acc += da[j] * db[ord - j] * binom;
                    binom *= (ord - j) as f64 / (j + 1) as f64;
                }
                acc
            })
            .collect()
    }
}

/// The default certification family: random polynomials plus the kernel-type
/// extremals f_a = (1−|a|²)^{n+N}(1−zā)^{−(n+N)} with 1−|a| ∈ {2^{−2}..2^{−9}}.
pub fn test_family(
    n: usize,
    seed: u64,
    n_poly: usize,
    n_kernel: usize,
    max_deg: u32,
    max_order: usize,
) -> Vec<Arc<dyn BallFun>> {
    let mut rng = crate::check::rng(seed);
    let mut family: Vec<Arc<dyn BallFun>> = Vec::new();
    for _ in 0..n_poly {
        let f = random_polynomial(&mut rng, n, max_deg, 8);
        if f.is_zero() {
            continue;
        }
        family.push(Arc::new(PolyFun::new(f, max_order)));
    }
    let kernel_n = 2.0f64;
    for i in 0..n_kernel {
        let depth = 2 + (i % 8) as i32;
        let rho = 1.0 - 2f64.powi(-depth);
        let dir = crate::identities::random_direction(&mut rng, n);
        let a: Vec<C64> = dir.iter().map(|c| c * rho).collect();
        let coef = (1.0 - rho * rho).powf(n as f64 + kernel_n);
        let mut ks = KernelSum::new(n);
        ks.terms.push(KernelTerm {
            coef: C64::new(coef, 0.0),
            dir: a,
            rscale: 1.0,
            lambda: n as f64 + kernel_n,
        });
        family.push(Arc::new(ks));
    }
    family
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub label: String,
    /// sup |g| over the deep radial grid, and the same after refinement
    pub sup_deep: f64,
    pub sup_deep_refined: f64,
    /// empirical Carleson embedding constant for dμ_g
    pub carleson_ratio: f64,
    /// sup over the family of ‖gf‖/‖f‖
    pub multiplier_ratio: f64,
    pub pass: bool,
}

/// sup |g(z)| over rays 1−ρ = 2^{−j}, j ≤ depths, at `dir_order` directions.
pub fn sup_deep_radial(g: &dyn BallFun, dir_order: u32, depths: u32) -> Result<f64> {
    use rayon::prelude::*;
    let dirs = SphereGrid::build(g.dim(), dir_order)?;
    let sup = dirs
        .nodes
        .par_iter()
        .map(|zeta| {
            (1..=depths)
                .map(|j| {
                    let rho = 1.0 - 2f64.powi(-(j as i32));
                    let z: Vec<C64> = zeta.iter().map(|c| c * rho).collect();
                    g.eval(&z).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// Empirical Carleson embedding constant: sup over the family of
/// ‖f‖_{T^{p,q}(μ_g)} / ‖f‖_{F^{p,q}_s}, with
/// dμ_g = |(1+R)^{k_s} g(z)|^q (1−|z|²)^{(k_s−s)q} dν.
pub fn carleson_ratio(
    g: &dyn BallFun,
    p: f64,
    q: f64,
    s: f64,
    family: &[Arc<dyn BallFun>],
    tent: &TentContext,
) -> Result<f64> {
    let ks = crate::k_s(s);
    let g_vals = eval_on_tent(g, tent, ks as usize);
    carleson_ratio_values(&g_vals, p, q, s, family, tent)
}

/// Variant taking precomputed node values of g.
pub fn carleson_ratio_values(
    g_vals: &TentValues,
    p: f64,
    q: f64,
    s: f64,
    family: &[Arc<dyn BallFun>],
    tent: &TentContext,
) -> Result<f64> {
    let ks = crate::k_s(s);
    let g_base = g_vals.one_plus_r_abs(ks as usize);
    let density: Vec<f64> = g_base
        .iter()
        .zip(&tent.inner)
        .map(|(v, (_, _, om))| v.powf(q) * om.powf((ks as f64 - s) * q))
        .collect();
    let mut sup: f64 = 0.0;
    for f in family {
        let f_vals = eval_on_tent(f.as_ref(), tent, ks as usize);
        let denom = triebel_norm_values(&f_vals, p, q, s, ks, tent)?;
        if denom == 0.0 {
            continue;
        }
        let phi: Vec<f64> = f_vals.derivs.iter().map(|d| d[0].norm()).collect();
        let num = tent.tent_norm_values(&phi, p, q, Some(&density));
        sup = sup.max(num / denom);
    }
    Ok(sup)
}

/// Empirical multiplier norm: sup over the family of ‖gf‖_{F^{p,2}_s}/‖f‖_{F^{p,2}_s}.
pub fn multiplier_ratio(
    g: Arc<dyn BallFun>,
    p: f64,
    s: f64,
    family: &[Arc<dyn BallFun>],
    tent: &TentContext,
) -> Result<f64> {
    let k = crate::k_s(s);
    let g_vals = eval_on_tent(g.as_ref(), tent, k as usize);
    multiplier_ratio_values(&g_vals, p, s, family, tent)
}

/// Variant taking precomputed node values of g.
pub fn multiplier_ratio_values(
    g_vals: &TentValues,
    p: f64,
    s: f64,
    family: &[Arc<dyn BallFun>],
    tent: &TentContext,
) -> Result<f64> {
    let k = crate::k_s(s);
    let mut sup: f64 = 0.0;
    for f in family {
        let f_vals = eval_on_tent(f.as_ref(), tent, k as usize);
        let denom = triebel_norm_values(&f_vals, p, 2.0, s, k, tent)?;
        if denom == 0.0 {
            continue;
        }
        let prod = g_vals.product(&f_vals);
        let num = triebel_norm_values(&prod, p, 2.0, s, k, tent)?;
        sup = sup.max(num / denom);
    }
    Ok(sup)
}

/// Which holomorphic lifting to build from the extremal measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MultiplierRoute {
    /// U_{s,p,λ}(μ*) — the p < 2 branch (needs n−s < λ)
    U,
    /// V_{s,p,λ}(μ*) — the p ≥ 2 branch
    V,
    /// C_s(I_s(μ*)^{p'−1})
    Cs,
}

/// Solves the capacity problem on `e_nodes`, lifts the extremal measure through
/// the requested route and certifies the result.
pub fn build_capacitary_multiplier(
    problem: &CapacityProblem,
    route: MultiplierRoute,
    tent: &TentContext,
    family: &[Arc<dyn BallFun>],
) -> Result<(Arc<dyn BallFun>, CapacitySolution, CertificationReport)> {
    let params = &problem.params;
    let sol = solve_capacity(problem)?;
    let mu = sol.extremal_measure(problem.matrix, params.p);
    let g = lift_measure(&mu, params, problem.matrix, &sol, route)?;
    let report = certify(
        g.clone(),
        format!("{route:?}(μ*) s={} p={}", params.s, params.p),
        params.p,
        params.s,
        tent,
        family,
    )?;
    Ok((g, sol, report))
}

/// Lifts a (capacitary) measure through the requested route.
pub fn lift_measure(
    mu: &AtomicMeasure,
    params: &ParamSet,
    km: &crate::capacity::KernelMatrix,
    sol: &CapacitySolution,
    route: MultiplierRoute,
) -> Result<Arc<dyn BallFun>> {
    match route {
        MultiplierRoute::U => {
            if params.p >= 2.0 {
                return Err(Error::InvalidParameter("U route is the p < 2 branch".into()));
            }
            let lambda = params.validate_holomorphic()?;
            if lambda <= params.n as f64 - params.s {
                return Err(Error::InvalidParameter(
                    "capacitary U route needs n−s < λ".into(),
                ));
            }
            let outer = SphereGrid::build(params.n, 8)?;
            Ok(Arc::new(u_potential(mu, params, &outer, 22, 3)?))
        }
        MultiplierRoute::V => {
            if params.p < 2.0 {
                return Err(Error::InvalidParameter("V route is the p ≥ 2 branch".into()));
            }
            Ok(Arc::new(v_potential(mu, params, 24, 3)?))
        }
        MultiplierRoute::Cs => {
            // density (I_s μ*)^{p'−1} on the node set, matrix-consistent kernel
            let pp1 = params.p_prime() - 1.0;
            let pot = crate::capacity::dual_potential(km, sol, params.p);
            let mut ks = KernelSum::new(params.n);
            for ((zeta, w), pv) in km.nodes.iter().zip(&km.weights).zip(&pot) {
                ks.terms.push(KernelTerm {
                    coef: C64::new(w * pv.powf(pp1), 0.0),
                    dir: zeta.clone(),
                    rscale: 1.0,
                    lambda: params.n as f64 - params.s,
                });
            }
            Ok(Arc::new(ks))
        }
    }
}

pub fn certify(
    g: Arc<dyn BallFun>,
    label: String,
    p: f64,
    s: f64,
    tent: &TentContext,
    family: &[Arc<dyn BallFun>],
) -> Result<CertificationReport> {
    let sup_deep = sup_deep_radial(g.as_ref(), 6, 12)?;
    let sup_deep_refined = sup_deep_radial(g.as_ref(), 10, 12)?;
    let g_vals = eval_on_tent(g.as_ref(), tent, crate::k_s(s) as usize);
    let carleson = carleson_ratio_values(&g_vals, p, 2.0, s, family, tent)?;
    let mult = multiplier_ratio_values(&g_vals, p, s, family, tent)?;
    let stable = (sup_deep - sup_deep_refined).abs() <= 0.10 * sup_deep_refined.max(1e-300);
    let pass = sup_deep.is_finite()
        && stable
        && carleson.is_finite()
        && mult.is_finite()
        && sup_deep > 0.0;
    Ok(CertificationReport {
        label,
        sup_deep,
        sup_deep_refined,
        carleson_ratio: carleson,
        multiplier_ratio: mult,
        pass,
    })
}

#[derive(Debug, Serialize)]
pub struct CoronaReport {
    /// min over the sample grid of Re Σ V_i
    pub positivity_margin: f64,
    /// sup |1/Σ V_i|
    pub sup_inverse: f64,
    /// max |1 − ΣV_i · V| at the samples (machine zero by construction)
    pub max_residual: f64,
    pub pass: bool,
}

/// Verifies Re Σ V_i > 0 on a ball sample and returns V = 1/Σ V_i diagnostics.
pub fn corona_solve(parts: Vec<Arc<dyn BallFun>>) -> Result<CoronaReport> {
    if parts.is_empty() {
        return Ok(CoronaReport {
            positivity_margin: 0.0,
            sup_inverse: f64::INFINITY,
            max_residual: f64::INFINITY,
            pass: false,
        });
    }
    let n = parts[0].dim();
    let total = Arc::new(SumFun { parts });
    let inv = ReciprocalFun {
        inner: total.clone(),
    };
    let dirs = SphereGrid::build(n, 8)?;
    use rayon::prelude::*;
    let depths: Vec<i32> = vec![0, 1, 2, 3, 4, 5, 6, 8, 10, 12];
    let stats: Vec<(f64, f64, f64)> = dirs
        .nodes
        .par_iter()
        .map(|zeta| {
            let mut margin = f64::INFINITY;
            let mut sup_inv: f64 = 0.0;
            let mut max_res: f64 = 0.0;
            for &j in &depths {
                let rho = 1.0 - 2f64.powi(-j);
                let z: Vec<C64> = zeta.iter().map(|c| c * rho).collect();
                let tv = total.eval(&z);
                margin = margin.min(tv.re);
                if tv.norm() > 0.0 {
                    let iv = inv.eval(&z);
                    sup_inv = sup_inv.max(iv.norm());
                    max_res = max_res.max((C64::new(1.0, 0.0) - tv * iv).norm());
                }
            }
            (margin, sup_inv, max_res)
        })
        .collect();
    let margin = stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let sup_inv = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let max_res = stats.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(CoronaReport {
        positivity_margin: margin,
        sup_inverse: sup_inv,
        max_residual: max_res,
        pass: margin > 0.0 && sup_inv.is_finite(),
    })
}

#[derive(Debug, Serialize)]
pub struct ExceptionalReport {
    /// capacity of each neighborhood G_k
    pub capacities: Vec<f64>,
    /// F^{p,2}_s norms of the increments F_k
    pub increment_norms: Vec<f64>,
    /// deep-radial Re m_k at the K node per level
    pub growth: Vec<f64>,
    /// fitted growth constant: min_k growth_k / k
    pub growth_constant: f64,
    pub pass: bool,
}

/// The exceptional-sequence construction over shrinking caps G_k around a node
/// of K: partial sums m_k = Σ F_i of holomorphic potentials of the extremal
/// measures, with decreasing capacities and linearly growing boundary values.
pub fn exceptional_sequence(
    matrix: &crate::capacity::KernelMatrix,
    k_dir: &[C64],
    params: &ParamSet,
    levels: u32,
    r0: f64,
    tent: &TentContext,
) -> Result<ExceptionalReport> {
    let mut capacities = Vec::new();
    let mut increments: Vec<Arc<dyn BallFun>> = Vec::new();
    let mut increment_norms = Vec::new();
    for k in 1..=levels {
        let radius = r0 * 2f64.powi(-(k as i32));
        let e = matrix.cap_nodes(k_dir, radius);
        if e.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "cap level {k} contains no grid nodes; refine the grid or enlarge r0"
            )));
        }
        let problem = CapacityProblem {
            matrix,
            e_nodes: e,
            params: params.clone(),
            options: Default::default(),
        };
        let sol = solve_capacity(&problem)?;
        capacities.push(sol.value);
        let mu = sol.extremal_measure(matrix, params.p);
        let f: Arc<dyn BallFun> = if params.p < 2.0 {
            let outer = SphereGrid::build(params.n, 10)?;
            Arc::new(u_potential(&mu, params, &outer, 24, 4)?)
        } else {
            Arc::new(v_potential(&mu, params, 28, 4)?)
        };
        let norm = triebel_norm(f.as_ref(), params.p, 2.0, params.s, crate::k_s(params.s), tent)?;
        increment_norms.push(norm);
        increments.push(f);
    }
    // growth of Re m_k along the ray at the K node
    let mut growth = Vec::new();
    for k in 1..=levels as usize {
        let mk = SumFun {
            parts: increments[..k].to_vec(),
        };
        let mut deep = f64::NEG_INFINITY;
        for j in 8..=12 {
            let rho = 1.0 - 2f64.powi(-j);
            let z: Vec<C64> = k_dir.iter().map(|c| c * rho).collect();
            deep = deep.max(mk.eval(&z).re);
        }
        growth.push(deep);
    }
    let growth_constant = growth
        .iter()
        .enumerate()
        .map(|(i, g)| g / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let caps_decreasing = capacities.windows(2).all(|w| w[1] <= w[0] * 1.05);
    let pass = growth_constant > 0.0 && caps_decreasing;
    Ok(ExceptionalReport {
        capacities,
        increment_norms,
        growth,
        growth_constant,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::rng;
    use crate::poly::{coeff_real, monomial_moment_sphere, rat, rat_to_f64, ratq};

    #[test]
    fn hardy_sobolev_closed_values() {
        let grid = SphereGrid::build(2, 10).unwrap();
        // f = 1 → 1 for any p, s
        let one = Polynomial::one(2);
        assert!((hardy_sobolev_norm(&one, 3.0, 0.7, &grid) - 1.0).abs() < 1e-12);
        // f = z1, p = 2, s = 0 → √(1/2)
        let z1 = Polynomial::var(2, 0);
        let v = hardy_sobolev_norm(&z1, 2.0, 0.0, &grid);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-12);
        // s = 1 doubles it
        let v = hardy_sobolev_norm(&z1, 2.0, 1.0, &grid);
        assert!((v - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hardy_sobolev_parseval_cross_check() {
        let grid = SphereGrid::build(2, 14).unwrap();
        let mut r = rng(33);
        for _ in 0..5 {
            let f = random_polynomial(&mut r, 2, 6, 8);
            let v = hardy_sobolev_norm(&f, 2.0, 0.0, &grid);
            let parseval: f64 = f
                .terms()
                .map(|(a, c)| {
                    rat_to_f64(&(c.norm_sqr() * monomial_moment_sphere(a)))
                })
                .sum();
            assert!((v * v - parseval).abs() < 1e-10 * parseval.max(1e-10));
        }
    }

    #[test]
    fn besov_infty_of_constants() {
        // ‖1‖_{B^∞_t} with k = 1 > t > 0: sup (1−|z|²)^{1−t} = 1 at z = 0
        let one = PolyFun::new(Polynomial::one(2), 2);
        let v = besov_infty_norm(&one, 0.4, 1, 10).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(besov_infty_norm(&one, 1.2, 1, 4).is_err());
    }

    #[test]
    fn norm_equivalence_shadow_across_k() {
        // k and k+1 give equivalent Besov norms: ratios bounded across a family
        let mut r = rng(71);
        let mut ratios = Vec::new();
        for _ in 0..6 {
            let f = random_polynomial(&mut r, 2, 5, 6);
            if f.is_zero() {
                continue;
            }
            let pf = PolyFun::new(f, 3);
            let n1 = besov_norm(&pf, 2.0, 0.5, 1, 10, 16).unwrap();
            let n2 = besov_norm(&pf, 2.0, 0.5, 2, 10, 16).unwrap();
            ratios.push(n1 / n2);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 10.0, "spread {max}/{min}");
    }

    #[test]
    fn triebel_vs_hardy_sobolev_ratio_stability() {
        // F^{p,2}_s vs H^p_s: the ratio over a small family has bounded spread
        let tent = TentContext::build(2, 8, 10, 20).unwrap();
        let sphere = SphereGrid::build(2, 10).unwrap();
        let mut r = rng(13);
        let mut ratios = Vec::new();
        for _ in 0..6 {
            let f = random_polynomial(&mut r, 2, 5, 6);
            if f.is_zero() {
                continue;
            }
            let hs = hardy_sobolev_norm(&f, 2.0, 0.5, &sphere);
            let pf = PolyFun::new(f, 1);
            let tl = triebel_norm(&pf, 2.0, 2.0, 0.5, 1, &tent).unwrap();
            if hs > 0.0 {
                ratios.push(tl / hs);
            }
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 10.0, "spread {max}/{min}");
    }

    #[test]
    fn product_route_matches_exact_polynomial_product() {
        let mut r = rng(55);
        let f = random_polynomial(&mut r, 2, 4, 5);
        let g = random_polynomial(&mut r, 2, 4, 5);
        let exact = f.multiply(&g).unwrap();
        let prod = ProductFun {
            a: Arc::new(PolyFun::new(f, 2)),
            b: Arc::new(PolyFun::new(g, 2)),
        };
        let z = [C64::new(0.3, 0.2), C64::new(-0.4, 0.1)];
        let d = prod.radial_derivs(&z, 2);
        let pe = PolyFun::new(exact, 2);
        let de = pe.radial_derivs(&z, 2);
        for (a, b) in d.iter().zip(&de) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn multiplier_ratio_of_one_is_one() {
        let tent = TentContext::build(2, 6, 8, 16).unwrap();
        let family = test_family(2, 3, 6, 2, 4, 2);
        let one: Arc<dyn BallFun> = Arc::new(PolyFun::new(Polynomial::one(2), 2));
        let ratio = multiplier_ratio(one, 2.0, 0.5, &family, &tent).unwrap();
        assert!((ratio - 1.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn multiplier_ratio_scale_invariance() {
        let tent = TentContext::build(2, 6, 8, 16).unwrap();
        let family = test_family(2, 5, 5, 2, 4, 2);
        let scaled: Vec<Arc<dyn BallFun>> = family
            .iter()
            .map(|f| {
                Arc::new(ProductFun {
                    a: Arc::new(PolyFun::new(
                        Polynomial::constant(2, coeff_real(ratq(7, 2))),
                        2,
                    )),
                    b: f.clone(),
                }) as Arc<dyn BallFun>
            })
            .collect();
        let g: Arc<dyn BallFun> = Arc::new(PolyFun::new(Polynomial::var(2, 0), 2));
        let r1 = multiplier_ratio(g.clone(), 2.0, 0.5, &family, &tent).unwrap();
        let r2 = multiplier_ratio(g, 2.0, 0.5, &scaled, &tent).unwrap();
        assert!((r1 - r2).abs() < 1e-10 * r1, "{r1} vs {r2}");
    }

    #[test]
    fn carleson_ratio_smoke() {
        let tent = TentContext::build(2, 6, 8, 16).unwrap();
        let family = test_family(2, 9, 5, 2, 4, 2);
        // g constant: μ_g is a smooth measure, finite ratio
        let g = PolyFun::new(Polynomial::constant(2, coeff_real(rat(2))), 2);
        let r = carleson_ratio(&g, 2.0, 2.0, 0.5, &family, &tent).unwrap();
        assert!(r.is_finite() && r > 0.0);
        // homogeneity: scaling g by c scales the ratio by |c|^{q·(1/q)} = |c|
        let g3 = PolyFun::new(Polynomial::constant(2, coeff_real(rat(6))), 2);
        let r3 = carleson_ratio(&g3, 2.0, 2.0, 0.5, &family, &tent).unwrap();
        assert!((r3 / r - 3.0).abs() < 1e-8, "{r3} vs {r}");
        // g = z1: still finite
        let gz = PolyFun::new(Polynomial::var(2, 0), 2);
        let rz = carleson_ratio(&gz, 2.0, 2.0, 0.5, &family, &tent).unwrap();
        assert!(rz.is_finite() && rz > 0.0);
    }

    #[test]
    fn corona_single_function_inverts_exactly() {
        // V with Re V ≥ c > 0: V·(1/V) = 1 at the samples
        let mut ks = KernelSum::new(2);
        ks.constant = C64::new(2.0, 0.0);
        ks.terms.push(KernelTerm {
            coef: C64::new(0.3, 0.1),
            dir: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            rscale: 0.8,
            lambda: 0.9,
        });
        let rep = corona_solve(vec![Arc::new(ks)]).unwrap();
        assert!(rep.pass);
        assert!(rep.positivity_margin > 0.0);
        assert!(rep.max_residual < 1e-12);
        // empty cover fails
        assert!(!corona_solve(vec![]).unwrap().pass);
    }
}
