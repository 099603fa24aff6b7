//! Taylor formula with explicit kernel error, integration by parts on kernel
//! monomials, the fractional Leibnitz decomposition with residual Q̃, the master
//! decomposition of f·P^{N,M}(g), and the empirical bound check on the residual.
//!
//! Everything except the bound check is exact rational arithmetic: residuals are
//! polynomials that must vanish identically, not small numbers.

use num::{One, Zero};
use rand::Rng;

use crate::poly::{
    factorial, monomial_moment_ball, monomial_moment_sphere, rat, rat_to_f64, shifted_monomial,
    MultiIndex, Polynomial,
};
use crate::quad::{kernel_moment_series, SphereGrid};
use crate::spectral::OpAlgebra;
use crate::{C64, Coeff, Error, Rat, Result};

/// Ω_r(x) = 1 + x^r for r ≠ 0 and Ω_0(x) = log(2/x), on 0 < x ≤ 1.
pub fn omega(r: f64, x: f64) -> f64 {
    assert!(x > 0.0 && x <= 1.0, "Ω_r is defined on 0 < x ≤ 1");
    if r != 0.0 {
        1.0 + x.powf(r)
    } else {
        (2.0 / x).ln()
    }
}

/// c_{N,M,j} = (N−M)⋯(N−M+j−1) / ((n+M−1)⋯(n+M−j)); c_{N,M,0} = 1.
pub fn cnm_alpha(n: usize, nn: &Rat, mm: &Rat, j: u32) -> Result<Rat> {
    if *nn <= Rat::one() {
        return Err(Error::InvalidParameter(format!("c_{{N,M,j}} needs N > 1, got {nn}")));
    }
    if rat(j as i64) >= rat(n as i64) + mm {
        return Err(Error::InvalidParameter(format!(
            "c_{{N,M,j}} needs j < n+M, got j={j}, n+M={}",
            rat(n as i64) + mm
        )));
    }
    let mut num = Rat::one();
    let mut den = Rat::one();
    for i in 0..j {
        num *= nn - mm + rat(i as i64);
        den *= rat(n as i64) + mm - rat(1 + i as i64);
    }
    Ok(num / den)
}

fn binom_rat(a: u32, b: u32) -> Rat {
    assert!(b <= a);
    factorial(a) / (factorial(b) * factorial(a - b))
}

/// Sub-multi-indices γ ≤ β with |γ| = d.
fn sub_indices_of_degree(beta: &MultiIndex, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; beta.dim()];
    fn rec(beta: &[u32], cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<MultiIndex>) {
        if pos == beta.len() {
            if left == 0 {
                out.push(MultiIndex(cur.clone()));
            }
            return;
        }
        let cap = beta[pos].min(left);
        for v in 0..=cap {
            cur[pos] = v;
            rec(beta, cur, pos + 1, left - v, out);
        }
    }
    rec(&beta.0, &mut cur, 0, d, &mut out);
    out
}

fn all_sub_indices(beta: &MultiIndex) -> Vec<MultiIndex> {
    (0..=beta.degree())
        .flat_map(|d| sub_indices_of_degree(beta, d))
        .collect()
}

/// Moment of the probability measure ν_N (ν_0 = σ): ∫ |u^β|² dν_N(u).
fn probability_moment(alg: &OpAlgebra, beta: &MultiIndex, nu_idx: u32) -> Result<Rat> {
    if nu_idx == 0 {
        Ok(monomial_moment_sphere(beta))
    } else {
        let nn = rat(nu_idx as i64);
        Ok(alg.c_n(&nn)? * monomial_moment_ball(beta, &nn)?)
    }
}

/// Both routes to the order-k Taylor error of `f` at `w`.
pub struct TaylorError {
    pub direct: Polynomial,
    pub kernel: Polynomial,
}

/// E_direct = f − T_k f(·; w); E_kernel expands the error-kernel representation
/// term by term against the ν_{L+l} moments. For polynomial `f` and rational `w`
/// the two are equal as exact polynomials in z.
pub fn taylor_error(
    alg: &OpAlgebra,
    f: &Polynomial,
    w: &[Coeff],
    k: u32,
    ll: u32,
    l: u32,
) -> Result<TaylorError> {
    let n = alg.dim();
    if f.dim() != n {
        return Err(Error::DimensionMismatch(f.dim(), n));
    }
    let direct = f.sub(&f.taylor_polynomial(w, k)?)?;

    // R^l_{n+L} f
    let rf = if l == 0 {
        f.clone()
    } else {
        alg.apply(&alg.rkt_operator(l, rat((n as i64) + ll as i64))?, f)?
    };
    let nu_idx = ll + l;
    // conj(R^{n+L-1}_1) multiplies the ū^β coefficient by C(|β|+n+L−1, n+L−1)
    let shift_order = n as u32 + ll - 1;

    let w_pows = |eps: &MultiIndex| -> Coeff {
        let mut acc = Coeff::new(Rat::one(), Rat::zero());
        for (j, &e) in eps.0.iter().enumerate() {
            for _ in 0..e {
                acc = acc * w[j].clone();
            }
        }
        acc
    };

    let mut kernel = Polynomial::zero(n);
    for (beta, b_coef) in rf.terms() {
        let db = beta.degree();
        if db < k + 1 {
            continue; // the kernel pairs only ū-degrees ≥ k+1 with u^β
        }
        let moment = probability_moment(alg, beta, nu_idx)?;
        let shift = binom_rat(db + shift_order, shift_order);
        let scale = b_coef.clone() * crate::poly::coeff_real(moment * shift);

        // coefficient of ū^β in ((z−w)ū)^{k+1} (1−zū)^{−1} (1−wū)^{−(k+1)}
        let mut kb = Polynomial::zero(n);
        for gamma in sub_indices_of_degree(beta, k + 1) {
            let rem = beta.checked_sub(&gamma).expect("gamma ≤ beta");
            let gfac = factorial(k + 1) / gamma.factorial();
            let zw_pow = shifted_monomial(n, &gamma, w).scale_rat(&gfac);
            let mut tail = Polynomial::zero(n);
            for delta in all_sub_indices(&rem) {
                let epsv = rem.checked_sub(&delta).expect("delta ≤ rem");
                let dd = delta.degree();
                let de = epsv.degree();
                let c_delta = factorial(dd) / delta.factorial();
                let c_eps = crate::poly::pochhammer(&rat(k as i64 + 1), de) / epsv.factorial();
                let coeff = w_pows(&epsv) * crate::poly::coeff_real(c_delta * c_eps);
                tail = tail.add(&Polynomial::monomial(n, delta, coeff))?;
            }
            kb = kb.add(&zw_pow.multiply(&tail)?)?;
        }
        kernel = kernel.add(&kb.scale(&scale))?;
    }
    Ok(TaylorError { direct, kernel })
}

/// Residual of the kernel-monomial integration-by-parts identity:
/// ∫ g (1−|w|²)^{N−1}(z−w)^α (1−zw̄)^{−(n+M)} dν
///   − c_{N,M,|α|} ∫ g (1−|w|²)^{N−1} w^α (1−zw̄)^{−(n+M−|α|)} dν,
/// both sides expanded exactly (the common c_N is dropped from both).
pub fn intparts_moment_residual(
    alg: &OpAlgebra,
    nn: &Rat,
    mm: &Rat,
    alpha: &MultiIndex,
    g: &Polynomial,
) -> Result<Polynomial> {
    let n = alg.dim();
    let aj = alpha.degree();
    if aj == 0 {
        return Err(Error::InvalidParameter("needs |α| ≥ 1".into()));
    }
    let c = cnm_alpha(n, nn, mm, aj)?;

    // left: Σ_{γ ≤ α} binom(α,γ) (−1)^{|γ|} z^{α−γ} · P-action on g·w^γ
    let mut lhs = Polynomial::zero(n);
    for gamma in all_sub_indices(alpha) {
        let mut b = Rat::one();
        for (aj_, gj) in alpha.0.iter().zip(&gamma.0) {
            b *= binom_rat(*aj_, *gj);
        }
        if gamma.degree() % 2 == 1 {
            b = -b;
        }
        let zpart = alpha.checked_sub(&gamma).expect("γ ≤ α");
        let gw = g.multiply(&Polynomial::monomial(
            n,
            gamma,
            Coeff::new(Rat::one(), Rat::zero()),
        ))?;
        let action = alg.apply(&alg.bergman(nn.clone(), mm.clone())?, &gw)?;
        let shifted = Polynomial::monomial(n, zpart, crate::poly::coeff_real(b)).multiply(&action)?;
        lhs = lhs.add(&shifted)?;
    }

    let gwa = g.multiply(&Polynomial::monomial(
        n,
        alpha.clone(),
        Coeff::new(Rat::one(), Rat::zero()),
    ))?;
    let rhs = alg
        .apply(&alg.bergman(nn.clone(), mm - rat(aj as i64))?, &gwa)?
        .scale_rat(&c);
    lhs.sub(&rhs)
}

/// One term of a decomposition: (scalar coefficient, operator tag, polynomial).
pub type MainTerm = (Rat, String, Polynomial);

pub struct LeibnitzDecomposition {
    pub main_terms: Vec<MainTerm>,
    pub residual_q: Polynomial,
    /// f · P^{Ñ,M̃}(g), the left-hand side.
    pub product: Polynomial,
}

impl LeibnitzDecomposition {
    /// product − Σ coeff·term − residual; identically zero by construction.
    pub fn reconstruction_residual(&self) -> Polynomial {
        let mut acc = self.residual_q.clone();
        for (c, _, p) in &self.main_terms {
            acc = acc.add(&p.scale_rat(c)).expect("dims");
        }
        self.product.sub(&acc).expect("dims")
    }
}

/// f·P^{Ñ,M̃}(g) = Σ_{j=0}^k (c_{Ñ,M̃,j}/j!) P^{Ñ,M̃−j}(g·d^j f) + Q̃; the residual
/// is defined by exact subtraction. Constraints: Ñ > 1, M̃ > 1−n,
/// 0 ≤ k < min(Ñ−t, n+M̃−1) for the supplied t ∈ (0, Ñ).
pub fn leibnitz_decompose(
    alg: &OpAlgebra,
    nt: &Rat,
    mt: &Rat,
    k: u32,
    t: &Rat,
    f: &Polynomial,
    g: &Polynomial,
) -> Result<LeibnitzDecomposition> {
    let n = alg.dim();
    let nf = rat(n as i64);
    if *nt <= Rat::one() {
        return Err(Error::InvalidParameter(format!("needs Ñ > 1, got {nt}")));
    }
    if *mt <= Rat::one() - &nf {
        return Err(Error::InvalidParameter(format!("needs M̃ > 1−n, got {mt}")));
    }
    if *t <= Rat::zero() || t >= nt {
        return Err(Error::InvalidParameter(format!("needs 0 < t < Ñ, got t={t}")));
    }
    let kq = rat(k as i64);
    if kq >= nt - t || kq >= &nf + mt - Rat::one() {
        return Err(Error::InvalidParameter(format!(
            "needs k < min(Ñ−t, n+M̃−1), got k={k}"
        )));
    }
    let product = f.multiply(&alg.apply(&alg.bergman(nt.clone(), mt.clone())?, g)?)?;
    let mut main_terms = Vec::new();
    let mut acc = Polynomial::zero(n);
    for j in 0..=k {
        let c = cnm_alpha(n, nt, mt, j)? / factorial(j);
        let dj = f.differential_form(j);
        let term = alg.apply(&alg.bergman(nt.clone(), mt - rat(j as i64))?, &g.multiply(&dj)?)?;
        acc = acc.add(&term.scale_rat(&c))?;
        main_terms.push((c, format!("P^{{{nt},{}}}(g·d^{j}f)", mt - rat(j as i64)), term));
    }
    let residual_q = product.sub(&acc)?;
    Ok(LeibnitzDecomposition {
        main_terms,
        residual_q,
        product,
    })
}

pub struct MasterDecomposition {
    /// kernel-shift expansion coefficients a_0..a_J
    pub a: Vec<Rat>,
    pub main_terms: Vec<MainTerm>,
    /// residual by subtraction from f·P^{N,M}(g)
    pub residual_sub: Polynomial,
    /// Σ over the expanded group of a_i · Q̃^{N+J,M+i,k}(f,g)
    pub residual_acc: Polynomial,
    pub product: Polynomial,
}

/// The master decomposition of f·P^{N,M}(g): the kernel-shift expansion
/// P^{N,M}(g) = Σ_i a_i P^{N+J,M+i}(g) keeps the terms with i ≤ k+1−n−M as plain
/// products and pushes the rest through the fractional Leibnitz formula.
/// Constraints: k > M+n−1, J > k+n+N, 0 < t < n+N.
pub fn master_decompose(
    alg: &OpAlgebra,
    nn: &Rat,
    mm: &Rat,
    k: u32,
    jj: u32,
    t: &Rat,
    f: &Polynomial,
    g: &Polynomial,
) -> Result<MasterDecomposition> {
    let n = alg.dim();
    let nf = rat(n as i64);
    if *nn < Rat::zero() || *mm <= -nf.clone() {
        return Err(Error::InvalidParameter("needs N ≥ 0, M > −n".into()));
    }
    if rat(k as i64) <= mm + &nf - Rat::one() {
        return Err(Error::InvalidParameter(format!("needs k > M+n−1, got k={k}")));
    }
    if rat(jj as i64) <= rat(k as i64) + &nf + nn {
        return Err(Error::InvalidParameter(format!("needs J > k+n+N, got J={jj}")));
    }
    if *t <= Rat::zero() || t >= &(&nf + nn) {
        return Err(Error::InvalidParameter("needs 0 < t < n+N".into()));
    }
    let a = alg.shift_expansion(&(&nf + mm), &(&nf + nn), jj);
    let split = rat(k as i64) + Rat::one() - &nf - mm;

    let product = f.multiply(&alg.apply(&alg.bergman(nn.clone(), mm.clone())?, g)?)?;
    let mut main_terms: Vec<MainTerm> = Vec::new();
    let mut acc = Polynomial::zero(n);
    let mut residual_acc = Polynomial::zero(n);
    for (i, ai) in a.iter().enumerate() {
        let mi = mm + rat(i as i64);
        if rat(i as i64) <= split {
            let term = f.multiply(&alg.apply(&alg.bergman(nn + rat(jj as i64), mi.clone())?, g)?)?;
            acc = acc.add(&term.scale_rat(ai))?;
            main_terms.push((ai.clone(), format!("f·P^{{{},{mi}}}(g)", nn + rat(jj as i64)), term));
        } else {
            let ld = leibnitz_decompose(alg, &(nn + rat(jj as i64)), &mi, k, t, f, g)?;
            for (c, tag, p) in ld.main_terms {
                let cc = ai * &c;
                acc = acc.add(&p.scale_rat(&cc))?;
                main_terms.push((cc, tag, p));
            }
            residual_acc = residual_acc.add(&ld.residual_q.scale_rat(ai))?;
        }
    }
    let residual_sub = product.sub(&acc)?;
    Ok(MasterDecomposition {
        a,
        main_terms,
        residual_sub,
        residual_acc,
        product,
    })
}

/// Maximum degree m ≤ `upto` violating Σ_i a_i λ^{N+J,M+i}_m = λ^{N,M}_m (None if
/// the identity holds exactly everywhere — the expected outcome).
pub fn master_a_identity_violation(
    alg: &OpAlgebra,
    nn: &Rat,
    mm: &Rat,
    jj: u32,
    a: &[Rat],
    upto: u32,
) -> Result<Option<u32>> {
    for m in 0..=upto {
        let mut acc = Rat::zero();
        for (i, ai) in a.iter().enumerate() {
            acc += ai * alg.bergman_eigenvalue(&(nn + rat(jj as i64)), &(mm + rat(i as i64)), m)?;
        }
        if acc != alg.bergman_eigenvalue(nn, mm, m)? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// One Q̃-bound test instance: monomial f (so the majorant integrals are exactly
/// summable), polynomial g, and the estQ parameter tuple.
#[derive(Debug, Clone)]
pub struct QBoundInstance {
    pub nt: Rat,
    pub mt: Rat,
    pub k: u32,
    pub t: Rat,
    pub big_l: u32,
    pub l: u32,
    pub m: u32,
    pub f_alpha: MultiIndex,
    pub g: Polynomial,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RayPoint {
    pub depth: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, serde::Serialize)]
pub struct QBoundReport {
    pub sup_ratio: f64,
    pub trend_ok: bool,
    pub rays: Vec<Vec<RayPoint>>,
}

/// Checks |(1+R)^m Q̃(z)| ≲ RHS along rays z = ρe, 1−ρ = 2^{−j}, j = 1..depths.
/// The left side is the exact residual polynomial; the right side follows the
/// printed majorant with the two integrals evaluated by the moment series.
pub fn q_bound_check(
    alg: &OpAlgebra,
    inst: &QBoundInstance,
    n_rays: usize,
    depths: u32,
    seed: u64,
) -> Result<QBoundReport> {
    let n = alg.dim();
    let nf = n as f64;
    // estQ needs 0 < Ñ−t−M̃+k+1 < m on top of the Leibnitz constraints
    let gap = rat_to_f64(&(&inst.nt - &inst.t - &inst.mt)) + inst.k as f64 + 1.0;
    if !(gap > 0.0 && gap < inst.m as f64) {
        return Err(Error::InvalidParameter(format!(
            "estQ needs 0 < Ñ−t−M̃+k+1 < m, got {gap} vs m={}",
            inst.m
        )));
    }
    if rat(inst.big_l as i64) <= &inst.nt - &inst.t {
        return Err(Error::InvalidParameter("needs L > Ñ−t".into()));
    }
    let f = Polynomial::monomial(n, inst.f_alpha.clone(), Coeff::new(Rat::one(), Rat::zero()));
    let ld = leibnitz_decompose(alg, &inst.nt, &inst.mt, inst.k, &inst.t, &f, &inst.g)?;
    // (1+R)^m Q̃, exact
    let op = crate::spectral::DiagonalOp::RadialPower { s: inst.m as i32 };
    let qm = alg.apply(&op, &ld.residual_q)?;

    // empirical B^∞_{−t} norm of g over a radial × angular sample
    let tf = rat_to_f64(&inst.t);
    let dirs = SphereGrid::build(n, 8)?;
    let mut gnorm: f64 = 0.0;
    for j in 0..=10 {
        let rho = 1.0 - 2f64.powi(-j);
        for zeta in &dirs.nodes {
            let z: Vec<C64> = zeta.iter().map(|c| c * rho).collect();
            let v = inst.g.eval(&z).norm() * (1.0 - rho * rho).powf(tf);
            gnorm = gnorm.max(v);
        }
    }
    if gnorm == 0.0 {
        gnorm = 1.0; // g ≡ 0 makes both sides zero
    }

    // R^l_{n+L} eigenvalue at deg f
    let rl = if inst.l == 0 {
        1.0
    } else {
        rat_to_f64(&alg.eigenvalue(
            &alg.rkt_operator(inst.l, rat(n as i64 + inst.big_l as i64))?,
            inst.f_alpha.degree(),
        )?)
    };
    let c: Vec<f64> = inst.f_alpha.0.iter().map(|&e| e as f64).collect();
    let a1 = rat_to_f64(&(&inst.nt - &inst.t)) - inst.k as f64 + inst.l as f64;
    let b1 = nf + rat_to_f64(&inst.mt) - inst.k as f64 + inst.m as f64;
    let a2 = (inst.big_l + inst.l) as f64;
    let b2 = nf + (inst.big_l + inst.k + 1) as f64;
    let omega_r = rat_to_f64(&(&inst.nt - &inst.t - &inst.mt));

    let mut rng = crate::check::rng(seed);
    let directions: Vec<Vec<C64>> = (0..n_rays).map(|_| random_direction(&mut rng, n)).collect();
    use rayon::prelude::*;
    let rays = directions
        .par_iter()
        .map(|e| -> Result<Vec<RayPoint>> {
            let mut ray = Vec::new();
            for j in 1..=depths {
                let rho = 1.0 - 2f64.powi(-(j as i32));
                let z: Vec<C64> = e.iter().map(|c| c * rho).collect();
                let y: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
                let lhs = qm.eval(&z).norm();
                let i1 = rl * kernel_moment_series(&y, &c, a1, b1, 1e-10)?;
                let i2 = rl * kernel_moment_series(&y, &c, a2, b2, 1e-10)?;
                let omz = 1.0 - rho * rho;
                let rhs = gnorm
                    * (i1 + omz.powi(inst.k as i32 + 1 - inst.m as i32) * omega(omega_r, omz) * i2);
                let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
                if !ratio.is_finite() {
                    return Err(Error::Divergence("non-finite bound ratio".into()));
                }
                ray.push(RayPoint {
                    depth: j,
                    lhs,
                    rhs,
                    ratio,
                });
            }
            Ok(ray)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sup_ratio: f64 = 0.0;
    let mut shallow_max: f64 = 0.0;
    let mut deep_max: f64 = 0.0;
    for ray in &rays {
        for pt in ray {
            sup_ratio = sup_ratio.max(pt.ratio);
            if pt.depth <= 4 {
                shallow_max = shallow_max.max(pt.ratio);
            }
            if pt.depth > depths.saturating_sub(4) {
                deep_max = deep_max.max(pt.ratio);
            }
        }
    }
    let trend_ok = deep_max <= shallow_max * 1.05 + 1e-12;
    Ok(QBoundReport {
        sup_ratio,
        trend_ok,
        rays,
    })
}

pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    // Box–Muller gaussians, normalized
    let mut v: Vec<C64> = (0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let r = (-2.0 * u1.ln()).sqrt();
            C64::new(
                r * (2.0 * std::f64::consts::PI * u2).cos(),
                r * (2.0 * std::f64::consts::PI * u2).sin(),
            )
        })
        .collect();
    let norm = crate::quad::norm_sqr(&v).sqrt();
    for c in &mut v {
        *c /= norm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::rng;
    use crate::poly::{coeff_real, random_polynomial, random_rational_point, ratq};

    #[test]
    fn omega_values() {
        assert!((omega(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((omega(1.0, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cnm_alpha_printed_values() {
        // n=2, N=2, M=3, j=1 → (2−3)/(2+3−1) = −1/4
        assert_eq!(cnm_alpha(2, &rat(2), &rat(3), 1).unwrap(), ratq(-1, 4));
        // n=2, N=3, M=1, j=2 → (2·3)/((2)(1)) = 3
        assert_eq!(cnm_alpha(2, &rat(3), &rat(1), 2).unwrap(), rat(3));
        // N = M forces zero
        assert_eq!(cnm_alpha(2, &rat(3), &rat(3), 1).unwrap(), rat(0));
        assert_eq!(cnm_alpha(2, &rat(3), &rat(3), 0).unwrap(), rat(1));
        assert!(cnm_alpha(2, &rat(3), &rat(1), 3).is_err());
        assert!(cnm_alpha(2, &rat(1), &rat(2), 1).is_err());
    }

    #[test]
    fn taylor_error_dual_routes_agree() {
        let alg = OpAlgebra::new(2);
        // f = z1², w = 0, k = 1, L = 2, l = 0: E = z1², kernel route must match
        let f = Polynomial::var(2, 0).pow(2);
        let w = vec![coeff_real(rat(0)), coeff_real(rat(0))];
        let te = taylor_error(&alg, &f, &w, 1, 2, 0).unwrap();
        assert_eq!(te.direct, f);
        assert_eq!(te.kernel, f);

        // k ≥ deg f → both vanish
        let te = taylor_error(&alg, &f, &w, 2, 1, 1).unwrap();
        assert!(te.direct.is_zero() && te.kernel.is_zero());

        // linear f, k = 0, w = 0 → E = f − f(0)
        let lin = Polynomial::var(2, 1).add(&Polynomial::one(2)).unwrap();
        let te = taylor_error(&alg, &lin, &w, 0, 1, 0).unwrap();
        assert_eq!(te.direct, Polynomial::var(2, 1));
        assert_eq!(te.kernel, te.direct);
    }

    #[test]
    fn taylor_error_random_instances() {
        for n in 1..=2usize {
            let alg = OpAlgebra::new(n);
            let mut r = rng(97 + n as u64);
            for trial in 0..12 {
                let f = random_polynomial(&mut r, n, 5, 6);
                let w = random_rational_point(&mut r, n, 0.7);
                let k = trial % 4;
                let ll = trial % 3;
                let l = trial % 2;
                let te = taylor_error(&alg, &f, &w, k as u32, ll as u32, l as u32).unwrap();
                assert_eq!(te.direct, te.kernel, "n={n} trial={trial}");
            }
        }
    }

    #[test]
    fn intparts_moment_identity() {
        let alg = OpAlgebra::new(2);
        // g = 1, α = (1,0), N=2, M=3
        let res = intparts_moment_residual(
            &alg,
            &rat(2),
            &rat(3),
            &MultiIndex(vec![1, 0]),
            &Polynomial::one(2),
        )
        .unwrap();
        assert!(res.is_zero());
        // g = w1, α = (0,1), N=3, M=2
        let res = intparts_moment_residual(
            &alg,
            &rat(3),
            &rat(2),
            &MultiIndex(vec![0, 1]),
            &Polynomial::var(2, 0),
        )
        .unwrap();
        assert!(res.is_zero());
        // N = M: c = 0 and the (z−w)^α side must vanish by itself
        let res = intparts_moment_residual(
            &alg,
            &rat(3),
            &rat(3),
            &MultiIndex(vec![1, 0]),
            &Polynomial::var(2, 1),
        )
        .unwrap();
        assert!(res.is_zero());
        // random g
        let mut r = rng(41);
        for _ in 0..8 {
            let g = random_polynomial(&mut r, 2, 5, 6);
            let res =
                intparts_moment_residual(&alg, &rat(2), &rat(3), &MultiIndex(vec![1, 1]), &g)
                    .unwrap();
            assert!(res.is_zero());
        }
    }

    #[test]
    fn leibnitz_first_order_special_case() {
        // Ñ=2, M̃=3, k=1 reduces to f R¹_{n+2} g = R¹_{n+2}(fg) − (1/(n+2)) g Rf
        let alg = OpAlgebra::new(2);
        let t = ratq(1, 2);
        let mut r = rng(59);
        for _ in 0..20 {
            let f = random_polynomial(&mut r, 2, 6, 7);
            let g = random_polynomial(&mut r, 2, 6, 7);
            let ld = leibnitz_decompose(&alg, &rat(2), &rat(3), 1, &t, &f, &g).unwrap();
            assert!(ld.residual_q.is_zero(), "Q^{{2,3,1}} must vanish");
            assert!(ld.reconstruction_residual().is_zero());
        }
    }

    #[test]
    fn leibnitz_taylor_exactness_and_constants() {
        let alg = OpAlgebra::new(2);
        let t = ratq(1, 2);
        let mut r = rng(61);
        // g constant, k ≥ deg f → zero residual
        let f = random_polynomial(&mut r, 2, 3, 5);
        let g = Polynomial::constant(2, coeff_real(ratq(5, 3)));
        let ld = leibnitz_decompose(&alg, &rat(6), &rat(4), 3, &t, &f, &g).unwrap();
        assert!(ld.residual_q.is_zero());
        // f constant → only j = 0 survives
        let fc = Polynomial::constant(2, coeff_real(rat(2)));
        let g = random_polynomial(&mut r, 2, 5, 6);
        let ld = leibnitz_decompose(&alg, &rat(4), &rat(2), 2, &t, &fc, &g).unwrap();
        assert!(ld.residual_q.is_zero());
        for (c, _, p) in &ld.main_terms[1..] {
            assert!(p.is_zero() || c.is_zero());
        }
        // out-of-range k rejected
        assert!(leibnitz_decompose(&alg, &rat(2), &rat(1), 2, &t, &fc, &g).is_err());
    }

    #[test]
    fn master_decomposition_exact() {
        let alg = OpAlgebra::new(2);
        let t = ratq(1, 2);
        let (nn, mm, k, jj) = (rat(1), rat(1), 4u32, 8u32);
        let mut r = rng(73);
        for _ in 0..10 {
            let f = random_polynomial(&mut r, 2, 6, 7);
            let g = random_polynomial(&mut r, 2, 5, 6);
            let md = master_decompose(&alg, &nn, &mm, k, jj, &t, &f, &g).unwrap();
            // the two residual routes agree exactly
            assert_eq!(md.residual_sub, md.residual_acc);
            // and the a_i spectral identity holds for m ≤ 30
            assert!(master_a_identity_violation(&alg, &nn, &mm, jj, &md.a, 30)
                .unwrap()
                .is_none());
        }
        // f constant → residual zero, decomposition collapses to the a_i expansion
        let fc = Polynomial::one(2);
        let g = random_polynomial(&mut r, 2, 5, 6);
        let md = master_decompose(&alg, &nn, &mm, k, jj, &t, &fc, &g).unwrap();
        assert!(md.residual_sub.is_zero());
        // k ≥ deg f → all Q̃ vanish
        let f = random_polynomial(&mut r, 2, 4, 5);
        let md = master_decompose(&alg, &nn, &mm, 4, jj, &t, &f, &g).unwrap();
        assert!(md.residual_sub.is_zero());
    }

    #[test]
    fn q_bound_zero_cases_and_smoke() {
        let alg = OpAlgebra::new(2);
        // deg f ≤ k → Q̃ = 0 → all ratios 0
        let inst = QBoundInstance {
            nt: rat(5),
            mt: rat(1),
            k: 1,
            t: ratq(1, 2),
            big_l: 5,
            l: 0,
            m: 6,
            f_alpha: MultiIndex(vec![1, 0]),
            g: Polynomial::var(2, 1),
        };
        let rep = q_bound_check(&alg, &inst, 2, 6, 5).unwrap();
        assert_eq!(rep.sup_ratio, 0.0);

        // nontrivial instance: f = z1³
        let inst = QBoundInstance {
            f_alpha: MultiIndex(vec![3, 0]),
            ..inst
        };
        let rep = q_bound_check(&alg, &inst, 2, 8, 5).unwrap();
        assert!(rep.sup_ratio.is_finite() && rep.sup_ratio > 0.0);
        assert!(rep.trend_ok);
    }
}
