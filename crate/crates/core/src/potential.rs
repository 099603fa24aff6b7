//! Measures on the closed ball and their potentials: nonisotropic ball masses,
//! Riesz and Cauchy potentials, Wolff potentials and energies, the holomorphic
//! liftings U and V, radial maximal diagnostics, and the A₁ ratio.
//!
//! Atomic measures make several of these integrals infinite; callers choose per
//! call between the divergence flag (+∞) and mollification. Mollification is a
//! cap-scale kernel clamp: |1−zη̄|^{s−n} is frozen at its cap-average value below
//! Koranyi distance 2ε, which is what spreading the atom uniformly over B(η,ε)
//! does asymptotically. The Wolff μ-integral instead excludes self-interaction.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;
use crate::quad::{gauss_legendre_01, herm, kdist, ln_gamma, SphereGrid};
use crate::{C64, Error, Result};

#[derive(Debug, Clone)]
pub struct Atom {
    pub point: Vec<C64>,
    pub mass: f64,
}

/// Finite positive Borel measure as weighted atoms on the closed ball.
#[derive(Debug, Clone, Default)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if a.mass <= 0.0 {
                return Err(Error::InvalidParameter("atom masses must be positive".into()));
            }
            if crate::quad::norm_sqr(&a.point) > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(
                    "atoms must lie on the closed ball".into(),
                ));
            }
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.point.len())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn scale(&self, c: f64) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    point: a.point.clone(),
                    mass: a.mass * c,
                })
                .collect(),
        }
    }

    /// μ(B(ζ,r)) with B(ζ,r) = {η : |1−ζη̄| < 2r}.
    pub fn ball_mass(&self, zeta: &[C64], r: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| kdist(zeta, &a.point) < 2.0 * r)
            .map(|a| a.mass)
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    point: Vec<f64>,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<AtomRepr>,
}

impl Serialize for AtomicMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomRepr {
                    point: a.point.iter().flat_map(|c| [c.re, c.im]).collect(),
                    mass: a.mass,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = MeasureRepr::deserialize(d)?;
        let mut atoms = Vec::new();
        for a in repr.atoms {
            if a.point.len() % 2 != 0 || a.point.is_empty() {
                return Err(D::Error::custom("point must be [re, im, ...] pairs"));
            }
            let point = a
                .point
                .chunks(2)
                .map(|c| C64::new(c[0], c[1]))
                .collect();
            atoms.push(Atom { point, mass: a.mass });
        }
        AtomicMeasure::new(atoms).map_err(D::Error::custom)
    }
}

/// (s,p[,λ]) parameter pack; p' = p/(p−1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSet {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl ParamSet {
    pub fn p_prime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn validate_capacity(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::InvalidParameter("needs p > 1".into()));
        }
        if !(self.s > 0.0 && self.s < self.n as f64 / self.p) {
            return Err(Error::InvalidParameter(format!(
                "needs 0 < s < n/p, got s={}, n/p={}",
                self.s,
                self.n as f64 / self.p
            )));
        }
        Ok(())
    }

    pub fn validate_holomorphic(&self) -> Result<f64> {
        let lambda = self
            .lambda
            .ok_or_else(|| Error::InvalidParameter("λ required".into()))?;
        let nsp = self.n as f64 - self.s * self.p;
        if !(nsp > 0.0 && nsp < lambda && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "needs 0 < n−sp < λ < 1, got n−sp={nsp}, λ={lambda}"
            )));
        }
        Ok(lambda)
    }
}

/// Riesz kernel |1−zζ̄|^{−(n−s)}, optionally clamped at the cap scale 2ε.
pub fn riesz_kernel(n: usize, s: f64, d: f64, moll: Option<f64>) -> f64 {
    let dd = match moll {
        Some(eps) => d.max(2.0 * eps),
        None => d,
    };
    dd.powf(s - n as f64)
}

/// I_s(μ)(z) = Σ m_i |1−zη̄_i|^{−(n−s)}; +∞ at an unmollified atom.
pub fn riesz_potential(mu: &AtomicMeasure, n: usize, s: f64, z: &[C64], moll: Option<f64>) -> f64 {
    mu.atoms
        .iter()
        .map(|a| {
            let d = kdist(z, &a.point);
            if d == 0.0 && moll.is_none() {
                f64::INFINITY
            } else {
                a.mass * riesz_kernel(n, s, d, moll)
            }
        })
        .sum()
}

/// I_s(φ dσ)(z) by sphere quadrature.
pub fn riesz_potential_density(grid: &SphereGrid, phi: &[f64], s: f64, z: &[C64]) -> f64 {
    let n = grid.n;
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .zip(phi)
        .map(|((zeta, w), f)| w * f * kdist(z, zeta).powf(s - n as f64))
        .sum()
}

/// C_s(μ)(z) = Σ m_i (1−zη̄_i)^{−(n−s)}, principal branch.
pub fn cauchy_potential(mu: &AtomicMeasure, n: usize, s: f64, z: &[C64]) -> C64 {
    mu.atoms
        .iter()
        .map(|a| {
            let base = C64::new(1.0, 0.0) - herm(z, &a.point);
            a.mass * base.powf(s - n as f64)
        })
        .sum()
}

pub fn cauchy_potential_density(grid: &SphereGrid, phi: &[f64], s: f64, z: &[C64]) -> C64 {
    let n = grid.n;
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .zip(phi)
        .map(|((zeta, w), f)| {
            let base = C64::new(1.0, 0.0) - herm(z, zeta);
            base.powf(s - n as f64) * (w * f)
        })
        .sum()
}

/// C_s of complex boundary data (holomorphic h restricted to ∂B).
pub fn cauchy_potential_density_c(grid: &SphereGrid, phi: &[C64], s: f64, z: &[C64]) -> C64 {
    let n = grid.n;
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .zip(phi)
        .map(|((zeta, w), f)| {
            let base = C64::new(1.0, 0.0) - herm(z, zeta);
            base.powf(s - n as f64) * f * *w
        })
        .sum()
}

/// W_{s,p}(μ)(ζ) = ∫₀¹ (μ(B(ζ,t))/t^{n−sp})^{p'−1} dt/t, computed exactly as a
/// finite sum of power integrals between the jump radii of t ↦ μ(B(ζ,t)).
/// `exclude` removes one atom (self-interaction); `t_min` truncates the lower
/// tail (0 keeps the full integral, which is +∞ when ζ carries an atom); with
/// `moll` each jump radius is floored at the cap scale ε, the Wolff-side twin of
/// the capped Riesz kernel.
pub fn wolff_exact(
    mu: &AtomicMeasure,
    n: usize,
    s: f64,
    p: f64,
    zeta: &[C64],
    exclude: Option<usize>,
    t_min: f64,
    moll: Option<f64>,
) -> f64 {
    let pp1 = p / (p - 1.0) - 1.0; // p' − 1
    let e = (n as f64 - s * p) * pp1; // decay exponent of the integrand tail
    let floor = moll.unwrap_or(0.0);
    let mut jumps: Vec<(f64, f64)> = mu
        .atoms
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(_, a)| ((kdist(zeta, &a.point) / 2.0).max(floor), a.mass))
        .collect();
    jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // cumulative mass once t passes each jump radius
    let mut acc = 0.0;
    let mut total = 0.0;
    let radii: Vec<f64> = jumps.iter().map(|j| j.0).collect();
    let masses: Vec<f64> = jumps.iter().map(|j| j.1).collect();
    for i in 0..radii.len() {
        acc += masses[i];
        let t_lo = radii[i].max(t_min);
        let t_hi = if i + 1 < radii.len() { radii[i + 1] } else { 1.0 };
        let t_hi = t_hi.min(1.0);
        if t_hi <= t_lo || t_lo >= 1.0 {
            continue;
        }
        if t_lo == 0.0 {
            return f64::INFINITY; // atom at ζ with no cutoff
        }
        let seg = if e.abs() < 1e-14 {
            (t_hi / t_lo).ln()
        } else {
            (t_lo.powf(-e) - t_hi.powf(-e)) / e
        };
        total += acc.powf(pp1) * seg;
    }
    total
}

/// Same integral by panelwise Gauss quadrature (the cross-check route). With a
/// weight field, the printed cap-average factor ∫set_B w^{−(p'−1)} dσ multiplies
/// the integrand.
pub fn wolff_quadrature(
    mu: &AtomicMeasure,
    n: usize,
    s: f64,
    p: f64,
    zeta: &[C64],
    weight: Option<(&SphereGrid, &[f64])>,
    nodes_per_panel: usize,
) -> Result<f64> {
    let pp1 = p / (p - 1.0) - 1.0;
    let nsp = n as f64 - s * p;
    let mut radii: Vec<f64> = mu
        .atoms
        .iter()
        .map(|a| kdist(zeta, &a.point) / 2.0)
        .filter(|&t| t > 0.0 && t < 1.0)
        .collect();
    radii.push(1.0);
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let gl = gauss_legendre_01(nodes_per_panel)?;
    let mut lo = radii.first().copied().unwrap_or(1.0);
    // nothing below the first jump: μ(B) = 0 there
    let mut total = 0.0;
    for &hi in &radii {
        if hi <= lo {
            continue;
        }
        for &(x, w) in &gl {
            let t = lo + (hi - lo) * x;
            let mb = mu.ball_mass(zeta, t);
            if mb == 0.0 {
                continue;
            }
            let wavg = match weight {
                None => 1.0,
                Some((grid, field)) => {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for ((node, gw), f) in grid.nodes.iter().zip(&grid.weights).zip(field) {
                        if kdist(zeta, node) < 2.0 * t {
                            num += gw * f.powf(-pp1);
                            den += gw;
                        }
                    }
                    if den > 0.0 {
                        num / den
                    } else {
                        1.0
                    }
                }
            };
            total += w * (hi - lo) * (mb / t.powf(nsp)).powf(pp1) * wavg / t;
        }
        lo = hi;
    }
    Ok(total)
}

/// E_{s,p}(μ) = ∫_{∂B} I_s(μ)^{p'} dσ by sphere quadrature with the mollified
/// kernel (raw atomic energies diverge for sp ≤ n−... small s).
pub fn energy(mu: &AtomicMeasure, n: usize, s: f64, p: f64, grid: &SphereGrid, moll: Option<f64>) -> f64 {
    let pp = p / (p - 1.0);
    let vals: Vec<f64> = grid
        .nodes
        .par_iter()
        .map(|zeta| riesz_potential(mu, n, s, zeta, moll).powf(pp))
        .collect();
    vals.iter().zip(&grid.weights).map(|(v, w)| v * w).sum()
}

/// I_s(1)(ζ), constant by symmetry: Γ(n)Γ(s)/Γ((n+s)/2)² (Gauss evaluation of the
/// hypergeometric series behind the kernel expansion).
pub fn riesz_constant(n: usize, s: f64) -> f64 {
    (ln_gamma(n as f64) + ln_gamma(s) - 2.0 * ln_gamma((n as f64 + s) / 2.0)).exp()
}

#[derive(Debug, Serialize)]
pub struct ComparabilityReport {
    /// (E, ∫ I_s[(I_s μ)^{p'−1}] dμ, ∫ W dμ) per measure
    pub triples: Vec<(f64, f64, f64)>,
    /// min and max over measures of E / ∫W dμ
    pub band: (f64, f64),
    pub spread: f64,
    /// max over sample points of W / I_s[(I_s μ)^{p'−1}]
    pub pointwise_max: f64,
}

/// Runs the Wolff-theorem comparability diagnostics on a family of measures.
pub fn wolff_comparability(
    measures: &[AtomicMeasure],
    n: usize,
    s: f64,
    p: f64,
    grid: &SphereGrid,
    moll: f64,
    n_pointwise: usize,
    seed: u64,
) -> Result<ComparabilityReport> {
    let pp1 = p / (p - 1.0) - 1.0;
    let mut triples = Vec::new();
    let mut band: (f64, f64) = (f64::INFINITY, 0.0);
    let mut pointwise_max: f64 = 0.0;
    let mut rng = crate::check::rng(seed);
    for mu in measures {
        let ipot: Vec<f64> = grid
            .nodes
            .par_iter()
            .map(|zeta| riesz_potential(mu, n, s, zeta, Some(moll)))
            .collect();
        let e: f64 = ipot
            .iter()
            .zip(&grid.weights)
            .map(|(v, w)| w * v.powf(pp1 + 1.0))
            .sum();
        let phi: Vec<f64> = ipot.iter().map(|v| v.powf(pp1)).collect();
        let nonlinear: f64 = mu
            .atoms
            .iter()
            .map(|a| {
                let outer: f64 = grid
                    .nodes
                    .iter()
                    .zip(&grid.weights)
                    .zip(&phi)
                    .map(|((zeta, w), f)| {
                        w * f * riesz_kernel(n, s, kdist(&a.point, zeta), Some(moll))
                    })
                    .sum();
                a.mass * outer
            })
            .sum();
        let wolff_int: f64 = mu
            .atoms
            .iter()
            .map(|a| a.mass * wolff_exact(mu, n, s, p, &a.point, None, 0.0, Some(moll)))
            .sum();
        let r = e / wolff_int;
        band.0 = band.0.min(r);
        band.1 = band.1.max(r);
        triples.push((e, nonlinear, wolff_int));
        // pointwise W ≤ C·I_s[(I_s μ)^{p'−1}]
        for _ in 0..n_pointwise.div_ceil(measures.len()) {
            let eta = crate::identities::random_direction(&mut rng, n);
            let w_val = wolff_exact(mu, n, s, p, &eta, None, 0.0, Some(moll));
            let maj: f64 = grid
                .nodes
                .iter()
                .zip(&grid.weights)
                .zip(&phi)
                .map(|((zeta, w), f)| w * f * riesz_kernel(n, s, kdist(&eta, zeta), Some(moll)))
                .sum();
            if w_val.is_finite() && maj > 0.0 {
                pointwise_max = pointwise_max.max(w_val / maj);
            }
        }
    }
    Ok(ComparabilityReport {
        triples,
        spread: band.1 / band.0,
        band,
        pointwise_max,
    })
}

// --- evaluable functions on the ball ------------------------------------------

/// A function on the ball exposing its radial derivatives R^j f in closed form,
/// enough for the integer-order norm machinery.
pub trait BallFun: Sync + Send {
    fn dim(&self) -> usize;
    /// [f(z), Rf(z), …, R^m f(z)]
    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64>;
    fn eval(&self, z: &[C64]) -> C64 {
        self.radial_derivs(z, 0)[0]
    }
}

/// (1+R)^k f assembled from radial derivatives.
pub fn one_plus_r_pow(derivs: &[C64], k: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (j, d) in derivs.iter().take(k + 1).enumerate() {
        let mut b = 1.0;
        for i in 0..j {
            b *= (k - i) as f64 / (i + 1) as f64;
        }
        acc += d * b;
    }
    acc
}

pub struct PolyFun {
    derivs: Vec<Polynomial>,
}

impl PolyFun {
    pub fn new(p: Polynomial, max_order: usize) -> Self {
        let mut derivs = vec![p];
        for j in 1..=max_order {
            let next = derivs[j - 1].radial_derivative();
            derivs.push(next);
        }
        PolyFun { derivs }
    }

    pub fn poly(&self) -> &Polynomial {
        &self.derivs[0]
    }
}

impl BallFun for PolyFun {
    fn dim(&self) -> usize {
        self.derivs[0].dim()
    }

    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64> {
        assert!(m < self.derivs.len(), "PolyFun built with too few orders");
        self.derivs[..=m].iter().map(|p| p.eval(z)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct KernelTerm {
    pub coef: C64,
    pub dir: Vec<C64>,
    pub rscale: f64,
    pub lambda: f64,
}

/// constant + Σ coef·(1−rscale·zζ̄)^{−λ}; closed-form radial derivatives through
/// the basis x^j (1−x)^{−λ−j} with x = rscale·zζ̄.
#[derive(Debug, Clone, Default)]
pub struct KernelSum {
    pub n: usize,
    pub constant: C64,
    pub terms: Vec<KernelTerm>,
}

impl KernelSum {
    pub fn new(n: usize) -> Self {
        KernelSum {
            n,
            constant: C64::new(0.0, 0.0),
            terms: Vec::new(),
        }
    }
}

fn kernel_derivs(x: C64, lambda: f64, m: usize) -> Vec<C64> {
    // coefficients over the basis x^j (1−x)^{−λ−j}
    let one = C64::new(1.0, 0.0);
    let mut coeffs = vec![vec![C64::new(1.0, 0.0)]];
    for ord in 1..=m {
        let prev = &coeffs[ord - 1];
        let mut next = vec![C64::new(0.0, 0.0); prev.len() + 1];
        for (j, c) in prev.iter().enumerate() {
            // R[x^j (1−x)^{−λ−j}] = j·x^j(1−x)^{−λ−j} + (λ+j)·x^{j+1}(1−x)^{−λ−j−1}
            next[j] += c * (j as f64);
            next[j + 1] += c * (lambda + j as f64);
        }
        coeffs.push(next);
    }
    let base = one - x;
    // basis values x^j (1−x)^{−λ−j} from a single complex power
    let mut basis = Vec::with_capacity(m + 1);
    let mut cur = base.powf(-lambda);
    basis.push(cur);
    for _ in 0..m {
        cur = cur * x / base;
        basis.push(cur);
    }
    (0..=m)
        .map(|ord| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, c) in coeffs[ord].iter().enumerate() {
                acc += c * basis[j];
            }
            acc
        })
        .collect()
}

impl BallFun for KernelSum {
    fn dim(&self) -> usize {
        self.n
    }

    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); m + 1];
        out[0] = self.constant;
        for t in &self.terms {
            let x = herm(z, &t.dir) * t.rscale;
            let kd = kernel_derivs(x, t.lambda, m);
            for (o, k) in out.iter_mut().zip(kd) {
                *o += t.coef * k;
            }
        }
        out
    }
}

/// Discretization of U_{s,p,λ}(μ) as a kernel sum over (radius, sphere-node)
/// quadrature points; geometric radial panels toward the boundary.
///
/// Below the atom-separation scale the caps B(ζ,t) ∋ η_i are disjoint and far
/// smaller than the sphere grid resolves, so that part of the outer integral is
/// taken per atom with the exact cap areas σ{ζ : |1−ζη̄_i| < 2t} and the kernel
/// frozen at the cap center; the t → 0 tail is then a closed form. The grid
/// route covers t above the crossover, where the caps hold many nodes.
pub fn u_potential(
    mu: &AtomicMeasure,
    params: &ParamSet,
    grid: &SphereGrid,
    radial_panels: u32,
    nodes_per_panel: usize,
) -> Result<KernelSum> {
    let lambda = params.validate_holomorphic()?;
    let (n, s, p) = (params.n, params.s, params.p);
    let pp1 = params.p_prime() - 1.0;
    let nsp = n as f64 - s * p;
    let theta_u = (s * p - n as f64) * pp1 + lambda;
    if theta_u <= 0.0 {
        return Err(Error::Divergence(
            "U radial integral diverges for atomic measures in this regime".into(),
        ));
    }
    let geom = crate::quad::CapGeometry::new(n)?;
    // boundary projections of the atoms; crossover keeps the per-atom caps disjoint
    let dirs: Vec<(Vec<C64>, f64, f64)> = mu
        .atoms
        .iter()
        .map(|a| {
            let r = crate::quad::norm_sqr(&a.point).sqrt();
            let dir = if r > 1e-9 {
                a.point.iter().map(|c| c / r).collect()
            } else {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[0] = C64::new(1.0, 0.0);
                e
            };
            (dir, r, a.mass)
        })
        .collect();
    let mut t_cross = 0.25f64;
    for i in 0..dirs.len() {
        for j in 0..i {
            let d = kdist(&dirs[i].0, &dirs[j].0);
            if d > 1e-12 {
                t_cross = t_cross.min(d / 4.0);
            } else {
                t_cross = 0.0; // radially stacked atoms: grid route everywhere
            }
        }
    }

    let gl = gauss_legendre_01(nodes_per_panel)?;
    let mut ks = KernelSum::new(n);
    for j in 0..radial_panels {
        let hi = 2f64.powi(-(j as i32));
        let lo = hi / 2.0;
        for &(x, w) in &gl {
            let t = lo + (hi - lo) * x;
            let wt = w * (hi - lo) / t; // dt/t
            if t >= t_cross {
                for (zeta, ws) in grid.nodes.iter().zip(&grid.weights) {
                    let mb = mu.ball_mass(zeta, t);
                    if mb == 0.0 {
                        continue;
                    }
                    let coef = wt * ws * (mb / t.powf(nsp)).powf(pp1) * t.powf(lambda - n as f64);
                    ks.terms.push(KernelTerm {
                        coef: C64::new(coef, 0.0),
                        dir: zeta.clone(),
                        rscale: 1.0 - t,
                        lambda,
                    });
                }
            } else {
                for (dir, r, mass) in &dirs {
                    let cap = geom.cap_integral_r(*r, 0.0, 2.0 * t);
                    if cap == 0.0 {
                        continue;
                    }
                    let coef =
                        wt * mass.powf(pp1) * t.powf((s * p - n as f64) * pp1 + lambda - n as f64) * cap;
                    ks.terms.push(KernelTerm {
                        coef: C64::new(coef, 0.0),
                        dir: dir.clone(),
                        rscale: 1.0 - t,
                        lambda,
                    });
                }
            }
        }
    }
    // closed-form t → 0 tail: only boundary atoms survive, with σ(cap) ≈ c·(2t)^n
    let t_min = 2f64.powi(-(radial_panels as i32));
    if t_min <= t_cross {
        let cap_c = geom.small_cap_constant() * 2f64.powi(n as i32);
        for (dir, r, mass) in &dirs {
            if *r < 1.0 - 1e-12 {
                continue;
            }
            let coef = mass.powf(pp1) * cap_c * t_min.powf(theta_u) / theta_u;
            ks.terms.push(KernelTerm {
                coef: C64::new(coef, 0.0),
                dir: dir.clone(),
                rscale: 1.0,
                lambda,
            });
        }
    }
    Ok(ks)
}

/// Discretization of V_{s,p,λ}(μ): outer radial quadrature of the (p'−1) power of
/// the inner kernel sum over the atoms. Radial derivatives to order 2.
pub struct VPotential {
    pub n: usize,
    pub q: f64, // p' − 1
    rows: Vec<(f64, KernelSum)>,
}

pub fn v_potential(
    mu: &AtomicMeasure,
    params: &ParamSet,
    radial_panels: u32,
    nodes_per_panel: usize,
) -> Result<VPotential> {
    let lambda = params.validate_holomorphic()?;
    let (n, s, p) = (params.n, params.s, params.p);
    let q = params.p_prime() - 1.0;
    let gl = gauss_legendre_01(nodes_per_panel)?;
    let mut rows = Vec::new();
    for j in 0..radial_panels {
        let hi = 2f64.powi(-(j as i32));
        let lo = hi / 2.0;
        for &(x, w) in &gl {
            let t = lo + (hi - lo) * x;
            let wt = w * (hi - lo) / t;
            let mut inner = KernelSum::new(n);
            for a in &mu.atoms {
                inner.terms.push(KernelTerm {
                    coef: C64::new(a.mass * t.powf(lambda + s * p - n as f64), 0.0),
                    dir: a.point.clone(),
                    rscale: 1.0 - t,
                    lambda,
                });
            }
            rows.push((wt, inner));
        }
    }
    // t → 0 tail in closed form: the inner integral ~ t^{λ+sp−n}·K₀(z), so the
    // remaining mass is ∫₀^{t_min} (t^{c₀} K₀)^q dt/t = K₀^q·t_min^{c₀q}/(c₀q)
    let c0 = lambda + s * p - n as f64;
    let t_min = 2f64.powi(-(radial_panels as i32));
    let mut tail = KernelSum::new(n);
    for a in &mu.atoms {
        tail.terms.push(KernelTerm {
            coef: C64::new(a.mass, 0.0),
            dir: a.point.clone(),
            rscale: 1.0,
            lambda,
        });
    }
    rows.push((t_min.powf(c0 * q) / (c0 * q), tail));
    Ok(VPotential { n, q, rows })
}

impl BallFun for VPotential {
    fn dim(&self) -> usize {
        self.n
    }

    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64> {
        assert!(m <= 2, "V potential derivatives implemented to order 2");
        let q = self.q;
        let mut out = vec![C64::new(0.0, 0.0); m + 1];
        for (w, inner) in &self.rows {
            let d = inner.radial_derivs(z, m.min(2));
            let j = d[0];
            debug_assert!(j.re > 0.0, "inner integral left the right half-plane");
            let jq = j.powf(q);
            out[0] += jq * *w;
            if m >= 1 {
                out[1] += jq / j * d[1] * q * *w;
            }
            if m >= 2 {
                let t = jq / (j * j) * (q * (q - 1.0) * d[1] * d[1]) + jq / j * q * d[2];
                out[2] += t * *w;
            }
        }
        out
    }
}

pub struct SumFun {
    pub parts: Vec<Arc<dyn BallFun>>,
}

impl BallFun for SumFun {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); m + 1];
        for p in &self.parts {
            for (o, d) in out.iter_mut().zip(p.radial_derivs(z, m)) {
                *o += d;
            }
        }
        out
    }
}

/// 1/F for a strictly nonvanishing F; derivatives to order 2.
pub struct ReciprocalFun {
    pub inner: Arc<dyn BallFun>,
}

impl BallFun for ReciprocalFun {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn radial_derivs(&self, z: &[C64], m: usize) -> Vec<C64> {
        assert!(m <= 2);
        let d = self.inner.radial_derivs(z, m);
        let f = d[0];
        let mut out = vec![C64::new(1.0, 0.0) / f];
        if m >= 1 {
            out.push(-d[1] / (f * f));
        }
        if m >= 2 {
            out.push((d[1] * d[1] * 2.0 / (f * f * f)) - d[2] / (f * f));
        }
        out
    }
}

/// max over the radial grid 1−ρ_j = 2^{−j} of |F(ρη)|.
pub fn radial_maximal(fun: &dyn BallFun, eta: &[C64], depths: u32) -> f64 {
    (1..=depths)
        .map(|j| {
            let rho = 1.0 - 2f64.powi(-(j as i32));
            let z: Vec<C64> = eta.iter().map(|c| c * rho).collect();
            fun.eval(&z).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Serialize)]
pub struct LiminfReport {
    /// min over η of (min over deep ρ of Re F(ρη)) / W(η); positive expected
    pub min_liminf_ratio: f64,
    /// max over η of M_rad[F](η) / majorant(η); bounded expected
    pub max_maximal_ratio: f64,
}

/// Boundary behavior of a holomorphic potential against its real majorant:
/// `majorant` = I_s[(I_s μ)^{p'−1}] for the U branch, W_{s,p}(μ) for V.
pub fn liminf_bound_check(
    fun: &dyn BallFun,
    majorant: impl Fn(&[C64]) -> f64 + Sync,
    wolff: impl Fn(&[C64]) -> f64 + Sync,
    etas: &[Vec<C64>],
    depths: u32,
) -> LiminfReport {
    let results: Vec<(f64, f64)> = etas
        .par_iter()
        .map(|eta| {
            let w = wolff(eta);
            let maj = majorant(eta);
            let mut deep_re = f64::INFINITY;
            let mut maxmod: f64 = 0.0;
            for j in 1..=depths {
                let rho = 1.0 - 2f64.powi(-(j as i32));
                let z: Vec<C64> = eta.iter().map(|c| c * rho).collect();
                let v = fun.eval(&z);
                maxmod = maxmod.max(v.norm());
                if j + 3 >= depths {
                    deep_re = deep_re.min(v.re);
                }
            }
            (
                if w > 0.0 { deep_re / w } else { f64::INFINITY },
                if maj > 0.0 { maxmod / maj } else { 0.0 },
            )
        })
        .collect();
    LiminfReport {
        min_liminf_ratio: results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        max_maximal_ratio: results.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

/// A₁ diagnostic on a sampled weight: max over a nonisotropic ball family of
/// (average over the ball) / (min over the ball).
pub fn a1_ratio(nodes: &[Vec<C64>], sigma: &[f64], weight: &[f64], radii: &[f64]) -> f64 {
    assert_eq!(nodes.len(), weight.len());
    let stride = (nodes.len() / 64).max(1);
    let mut worst: f64 = 0.0;
    for center in nodes.iter().step_by(stride) {
        for &r in radii {
            let mut num = 0.0;
            let mut den = 0.0;
            let mut minv = f64::INFINITY;
            let mut count = 0;
            for ((node, w), &f) in nodes.iter().zip(sigma).zip(weight) {
                if kdist(center, node) < 2.0 * r {
                    num += w * f;
                    den += w;
                    minv = minv.min(f);
                    count += 1;
                }
            }
            if count >= 3 && den > 0.0 && minv > 0.0 {
                worst = worst.max(num / den / minv);
            }
        }
    }
    worst
}
