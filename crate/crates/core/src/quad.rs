//! Quadrature on the sphere S^{2n−1}, the weighted ball, and tent regions.
//!
//! The sphere rule is a product of circle rules through the torus parametrization
//! ζ = (√t₁ e^{iθ₁}, …, √tₙ e^{iθₙ}) with Gauss–Legendre on the radius simplex;
//! it integrates ζ^α ζ̄^β exactly for |α|,|β| up to the order and is certified
//! against the closed sphere moments when built. Ball rules put Gauss–Jacobi with
//! weight t^{n−1}(1−t)^{N−1} on the radius. The windowed torus-moment series
//! evaluates the singular majorant integrals ∫ Π|u_j|^{c_j}(1−|u|²)^{A−1}|1−zū|^{−b} dν
//! essentially exactly at any interior z, which plain cubature cannot do near the
//! boundary.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::poly::{rat_to_f64, MultiIndex};
use crate::{C64, Error, Result};

/// Lanczos log-gamma (Pugh's coefficients), accurate to ~1e-15 for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const GAMMA_R: f64 = 10.900511;
    const GAMMA_DK: [f64; 11] = [
        2.4857408913875355e-5,
        1.0514237858172197,
        -3.4568709722201625,
        4.512277094668948,
        -2.9828522532357664,
        1.056397115771267,
        -1.9542877319164587e-1,
        1.709705434044412e-2,
        -5.719261174043057e-4,
        4.633994733599057e-6,
        -2.7199490848860772e-9,
    ];
    const LN_2_SQRT_E_OVER_PI: f64 = 0.6207822376352452;
    if x < 0.5 {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (t.0 as f64 - x));
        std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + GAMMA_R) / std::f64::consts::E).ln()
    } else {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (x + t.0 as f64 - 1.0));
        s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + GAMMA_R) / std::f64::consts::E).ln()
    }
}

pub fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Hermitian pairing z·w̄ = Σ z_j conj(w_j).
pub fn herm(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

/// Koranyi quantity |1 − z·w̄|.
pub fn kdist(z: &[C64], w: &[C64]) -> f64 {
    (C64::new(1.0, 0.0) - herm(z, w)).norm()
}

pub fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// Gauss–Jacobi rule on [0,1] for the weight t^beta (1−t)^alpha:
/// Σ w_i g(t_i) ≈ ∫₀¹ t^beta (1−t)^alpha g(t) dt. Golub–Welsch.
pub fn gauss_jacobi_01(deg: usize, alpha: f64, beta: f64) -> Result<Vec<(f64, f64)>> {
    if deg == 0 || alpha <= -1.0 || beta <= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "gauss-jacobi needs deg ≥ 1, alpha, beta > -1 (got {deg}, {alpha}, {beta})"
        )));
    }
    let (a, b) = (alpha, beta);
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    let mut diag = (b - a) / (2.0 + a + b);
    for i in 0..deg - 1 {
        let k = (i + 1) as f64;
        let denom = 2.0 * k + a + b;
        let off = 2.0 / denom
            * (k * (k + a) * (k + b) * (k + a + b) / ((denom + 1.0) * (denom - 1.0))).sqrt();
        m[(i, i)] = diag;
        m[(i, i + 1)] = off;
        m[(i + 1, i)] = off;
        diag = (b * b - a * a) / (denom * (denom + 2.0));
    }
    m[(deg - 1, deg - 1)] = diag;
    let eig = m.symmetric_eigen();
    // total mass on [-1,1]: 2^{a+b+1} B(a+1, b+1)
    let ln_mu0 = (a + b + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(a + b + 2.0);
    let mu0 = ln_mu0.exp();
    let mut rule: Vec<(f64, f64)> = (0..deg)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v = eig.eigenvectors.column(i)[0];
            ((x + 1.0) / 2.0, v * v * mu0 / 2f64.powf(a + b + 1.0))
        })
        .collect();
    rule.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    Ok(rule)
}

pub fn gauss_legendre_01(deg: usize) -> Result<Vec<(f64, f64)>> {
    gauss_jacobi_01(deg, 0.0, 0.0)
}

/// Product rule on S^{2n−1} wrt the normalized surface measure σ.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n: usize,
    pub order: u32,
    pub nodes: Vec<Vec<C64>>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn build(n: usize, order: u32) -> Result<SphereGrid> {
        if n == 0 || n > 3 {
            return Err(Error::Unsupported(format!("sphere grid for n = {n}")));
        }
        if order == 0 {
            return Err(Error::InvalidParameter("order ≥ 1".into()));
        }
        let k = order as usize + 1; // points per circle
        let angles: Vec<C64> = (0..k)
            .map(|i| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / k as f64))
            .collect();
        // simplex configurations: (t_1..t_n, weight), weights summing to 1
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::new();
        match n {
            1 => simplex.push((vec![1.0], 1.0)),
            2 => {
                let gl = gauss_legendre_01(order as usize / 2 + 2)?;
                for &(x, w) in &gl {
                    simplex.push((vec![x, 1.0 - x], w));
                }
            }
            3 => {
                let gl = gauss_legendre_01(order as usize / 2 + 2)?;
                for &(x, wx) in &gl {
                    for &(y, wy) in &gl {
                        simplex.push((
                            vec![x, (1.0 - x) * y, (1.0 - x) * (1.0 - y)],
                            2.0 * (1.0 - x) * wx * wy,
                        ));
                    }
                }
            }
            _ => unreachable!(),
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; n];
        for (ts, wt) in &simplex {
            let radii: Vec<f64> = ts.iter().map(|t| t.max(0.0).sqrt()).collect();
            idx.iter_mut().for_each(|v| *v = 0);
            loop {
                let node: Vec<C64> = (0..n).map(|j| radii[j] * angles[idx[j]]).collect();
                nodes.push(node);
                weights.push(wt / (k as f64).powi(n as i32));
                // advance the angular multi-counter
                let mut j = 0;
                loop {
                    if j == n {
                        break;
                    }
                    idx[j] += 1;
                    if idx[j] < k {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == n {
                    break;
                }
            }
        }
        let grid = SphereGrid {
            n,
            order,
            nodes,
            weights,
        };
        grid.certify_basic()?;
        Ok(grid)
    }

    /// Spot-certification against closed moments; rejects a mis-built rule.
    fn certify_basic(&self) -> Result<()> {
        let checks: &[Vec<u32>] = match self.n {
            1 => &[vec![0], vec![2], vec![5]],
            2 => &[vec![0, 0], vec![1, 0], vec![1, 1], vec![3, 2]],
            _ => &[vec![0, 0, 0], vec![1, 1, 0], vec![2, 1, 1]],
        };
        for alpha in checks {
            if alpha.iter().sum::<u32>() > self.order {
                continue;
            }
            let mi = MultiIndex(alpha.clone());
            let exact = rat_to_f64(&crate::poly::monomial_moment_sphere(&mi));
            let got = self.integrate(|z| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| z[j].norm_sqr().powi(e as i32))
                    .product()
            });
            if (got - exact).abs() > 1e-10 * exact.max(1.0) {
                return Err(Error::SolverFailure(format!(
                    "sphere grid certification failed at α={mi}: {got} vs {exact}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[C64]) -> f64 + Sync) -> f64 {
        let vals: Vec<f64> = if self.nodes.len() > 4096 {
            self.nodes.par_iter().map(|z| f(z)).collect()
        } else {
            self.nodes.iter().map(|z| f(z)).collect()
        };
        vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate_c(&self, f: impl Fn(&[C64]) -> C64 + Sync) -> C64 {
        let vals: Vec<C64> = if self.nodes.len() > 4096 {
            self.nodes.par_iter().map(|z| f(z)).collect()
        } else {
            self.nodes.iter().map(|z| f(z)).collect()
        };
        vals.iter()
            .zip(&self.weights)
            .map(|(v, w)| v * *w)
            .sum()
    }
}

/// c_N = Γ(n+N)/(n! Γ(N)) in floating point (fractional N allowed).
pub fn c_n_f64(n: usize, nn: f64) -> f64 {
    (ln_gamma(n as f64 + nn) - ln_gamma(n as f64 + 1.0) - ln_gamma(nn)).exp()
}

/// Weighted ball rule: Σ over nodes approximates ∫_B φ(w) (1−|w|²)^{N−1} dν(w)
/// (no c_N). Radial Gauss–Jacobi times a sphere grid.
#[derive(Debug, Clone)]
pub struct BallGrid {
    pub n: usize,
    pub nn: f64,
    pub sphere: SphereGrid,
    /// (r, weight, 1−r²)
    pub radial: Vec<(f64, f64, f64)>,
}

impl BallGrid {
    pub fn build(n: usize, nn: f64, order: u32, radial_nodes: usize) -> Result<BallGrid> {
        if nn <= 0.0 {
            return Err(Error::InvalidParameter(format!("ball grid needs N > 0, got {nn}")));
        }
        let sphere = SphereGrid::build(n, order)?;
        let rule = gauss_jacobi_01(radial_nodes, nn - 1.0, n as f64 - 1.0)?;
        let radial = rule
            .iter()
            .map(|&(t, w)| (t.sqrt(), n as f64 * w, 1.0 - t))
            .collect();
        Ok(BallGrid { n, nn, sphere, radial })
    }

    pub fn node_count(&self) -> usize {
        self.radial.len() * self.sphere.len()
    }

    /// `f` receives the scaled point and 1−|w|².
    pub fn integrate(&self, f: impl Fn(&[C64], f64) -> f64 + Sync) -> f64 {
        let per_shell: Vec<f64> = self
            .radial
            .par_iter()
            .map(|&(r, _, omr2)| {
                let mut buf = vec![C64::new(0.0, 0.0); self.n];
                let mut acc = 0.0;
                for (zeta, ws) in self.sphere.nodes.iter().zip(&self.sphere.weights) {
                    for (b, z) in buf.iter_mut().zip(zeta) {
                        *b = z * r;
                    }
                    acc += ws * f(&buf, omr2);
                }
                acc
            })
            .collect();
        per_shell
            .iter()
            .zip(&self.radial)
            .map(|(v, &(_, wr, _))| v * wr)
            .sum()
    }

    pub fn integrate_c(&self, f: impl Fn(&[C64], f64) -> C64 + Sync) -> C64 {
        let per_shell: Vec<C64> = self
            .radial
            .par_iter()
            .map(|&(r, _, omr2)| {
                let mut buf = vec![C64::new(0.0, 0.0); self.n];
                let mut acc = C64::new(0.0, 0.0);
                for (zeta, ws) in self.sphere.nodes.iter().zip(&self.sphere.weights) {
                    for (b, z) in buf.iter_mut().zip(zeta) {
                        *b = z * r;
                    }
                    acc += f(&buf, omr2) * *ws;
                }
                acc
            })
            .collect();
        per_shell
            .iter()
            .zip(&self.radial)
            .map(|(v, &(_, wr, _))| v * wr)
            .sum()
    }

    /// Flattened (point, weight, 1−|w|²) list.
    pub fn flat_nodes(&self) -> Vec<(Vec<C64>, f64, f64)> {
        let mut out = Vec::with_capacity(self.node_count());
        for &(r, wr, omr2) in &self.radial {
            for (zeta, ws) in self.sphere.nodes.iter().zip(&self.sphere.weights) {
                out.push((zeta.iter().map(|z| z * r).collect(), wr * ws, omr2));
            }
        }
        out
    }
}

/// I^N_{M,L}(z,u) = ∫_B (1−|w|²)^{N−1} |1−uw̄|^{−(n+M)} |1−zw̄|^{−(n+L)} dν(w)
/// by self-refining quadrature: orders escalate until two successive values agree
/// to `tol` relative, a node cap returning the divergence flag otherwise.
pub fn kernel_integral_i(
    n: usize,
    nn: f64,
    mm: f64,
    ll: f64,
    z: &[C64],
    u: &[C64],
    tol: f64,
) -> Result<f64> {
    if nn <= 0.0 || mm < -(n as f64) || ll < -(n as f64) {
        return Err(Error::InvalidParameter(
            "kernel integral needs N > 0, M, L ≥ -n".into(),
        ));
    }
    let em = n as f64 + mm;
    let el = n as f64 + ll;
    let mut prev: Option<f64> = None;
    for ord in [16u32, 24, 32, 48, 64, 96] {
        let grid = BallGrid::build(n, nn, ord, 2 * ord as usize)?;
        let v = grid.integrate(|w, _| {
            kdist(u, w).powf(-em) * kdist(z, w).powf(-el)
        });
        if let Some(p) = prev {
            if (v - p).abs() <= tol * v.abs().max(1e-300) {
                return Ok(v);
            }
        }
        prev = Some(v);
    }
    Err(Error::Divergence(format!(
        "kernel integral I^{nn}_{{{mm},{ll}}} did not stabilize to {tol} within the node cap"
    )))
}

/// The printed case bounds for I^N_{M,L}; `Err(Unsupported)` outside the four regimes.
pub fn estimate_bound_i(
    n: usize,
    nn: f64,
    mm: f64,
    ll: f64,
    z: &[C64],
    u: &[C64],
) -> Result<f64> {
    let d = kdist(z, u);
    let nf = n as f64;
    let omu = 1.0 - norm_sqr(u);
    let omz = 1.0 - norm_sqr(z);
    let eps = 1e-12;
    if mm > nn && nn > ll {
        Ok(omu.powf(nn - mm) / d.powf(nf + ll))
    } else if ll > nn && nn > mm {
        // I is symmetric under (u,M) ↔ (z,L)
        Ok(omz.powf(nn - ll) / d.powf(nf + mm))
    } else if mm > nn && ll > nn {
        Ok(omu.powf(nn - mm) / d.powf(nf + ll) + omz.powf(nn - ll) / d.powf(nf + mm))
    } else if mm < nn && ll < nn {
        if (nn - (nf + mm + ll)).abs() < eps {
            Ok((std::f64::consts::E / d).ln())
        } else {
            Ok(1.0 + d.powf(-(nf + mm + ll - nn)))
        }
    } else {
        Err(Error::Unsupported(format!(
            "no printed bound regime for N={nn}, M={mm}, L={ll}"
        )))
    }
}

/// Exact-series evaluation of
/// G(z) = ∫_B Π_j |u_j|^{c_j} (1−|u|²)^{A−1} |1−zū|^{−b} dν(u)
/// through torus moments. Valid for any interior z (only |z_j| enters); the inner
/// multinomial sum is windowed around its binomial mode, so deep-shell z are cheap.
/// Supports n ≤ 2, which is what the bound checks use.
pub fn kernel_moment_series(
    y: &[f64], // |z_j|²
    c: &[f64],
    aa: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let n = y.len();
    if n == 0 || n > 2 || c.len() != n {
        return Err(Error::Unsupported(
            "moment series implemented for n ≤ 2".into(),
        ));
    }
    if aa <= 0.0 || b < 0.0 {
        return Err(Error::InvalidParameter("needs A > 0, b ≥ 0".into()));
    }
    let rho2: f64 = y.iter().sum();
    if rho2 >= 1.0 {
        return Err(Error::InvalidParameter("z must be interior".into()));
    }
    let a = b / 2.0;
    let h: Vec<f64> = c.iter().map(|x| x / 2.0).collect();
    let hsum: f64 = h.iter().sum();
    let nf = n as f64;
    let mut q_tables: Vec<QTable> = h.iter().map(|&hj| QTable::new(hj)).collect();
    // C0·R_0 = n (n−1)! Γ(A) / Γ(n+A+h)
    let mut rm = (nf.ln() + ln_gamma(nf) + ln_gamma(aa) - ln_gamma(nf + aa + hsum)).exp();
    let mut sum = 0.0;
    let mut quiet = 0;
    let mmax = 4_000_000usize;
    for m in 0..mmax {
        let vm = inner_multinomial_sum(y, &mut q_tables, m);
        let term = rm * vm;
        sum += term;
        if m > 8 {
            if term.abs() <= tol * sum.abs().max(1e-300) {
                quiet += 1;
                if quiet >= 8 {
                    return Ok(sum);
                }
            } else {
                quiet = 0;
            }
        }
        // ratio to the next m of (a)_m² / (m! Γ(n+A+h+m))
        let mf = m as f64;
        rm *= (a + mf) * (a + mf) / ((mf + 1.0) * (nf + aa + hsum + mf));
        if !rm.is_finite() {
            return Err(Error::Divergence("moment series overflowed".into()));
        }
    }
    Err(Error::Divergence(
        "moment series did not converge within the term cap".into(),
    ))
}

/// Growable table of q(t) = Γ(t+h+1)/Γ(t+1), filled by the two-term recurrence.
struct QTable {
    h: f64,
    vals: Vec<f64>,
}

impl QTable {
    fn new(h: f64) -> Self {
        QTable {
            h,
            vals: vec![gamma_fn(h + 1.0)],
        }
    }

    fn ensure(&mut self, t: usize) {
        while self.vals.len() <= t {
            let k = self.vals.len() as f64;
            let prev = *self.vals.last().unwrap();
            self.vals.push(prev * (k + self.h) / k);
        }
    }

    #[inline]
    fn get(&self, t: usize) -> f64 {
        self.vals[t]
    }
}

/// Σ_{|β|=m} multinom(m,β) Π_j q_j(β_j) y_j^{β_j}, windowed around the binomial
/// mode so the cost per m stays O(window).
fn inner_multinomial_sum(y: &[f64], q: &mut [QTable], m: usize) -> f64 {
    if y.len() == 1 {
        q[0].ensure(m);
        return q[0].get(m) * y[0].powi(m as i32);
    }
    let (y1, y2) = (y[0], y[1]);
    q[0].ensure(m);
    q[1].ensure(m);
    if y1 == 0.0 && y2 == 0.0 {
        return if m == 0 { q[0].get(0) * q[1].get(0) } else { 0.0 };
    }
    if y2 == 0.0 {
        return q[0].get(m) * q[1].get(0) * y1.powi(m as i32);
    }
    if y1 == 0.0 {
        return q[0].get(0) * q[1].get(m) * y2.powi(m as i32);
    }
    if m <= 96 {
        let mut w = y2.powi(m as i32); // k = 0 term of binom(m,k) y1^k y2^{m-k}
        let mut acc = 0.0;
        for k in 0..=m {
            acc += w * q[0].get(k) * q[1].get(m - k);
            if k < m {
                w *= (m - k) as f64 / (k + 1) as f64 * (y1 / y2);
            }
        }
        return acc;
    }
    let mf = m as f64;
    let p = y1 / (y1 + y2);
    let mode = (mf * p).round().clamp(0.0, mf) as usize;
    let w_mode = {
        let kf = mode as f64;
        (ln_gamma(mf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(mf - kf + 1.0)
            + kf * y1.ln()
            + (mf - kf) * y2.ln())
        .exp()
    };
    let mut acc = w_mode * q[0].get(mode) * q[1].get(m - mode);
    let mut w = w_mode;
    let mut k = mode;
    while k < m {
        w *= (m - k) as f64 / (k + 1) as f64 * (y1 / y2);
        k += 1;
        let t = w * q[0].get(k) * q[1].get(m - k);
        acc += t;
        if t < 1e-18 * acc {
            break;
        }
    }
    w = w_mode;
    k = mode;
    while k > 0 {
        w *= k as f64 / (m - k + 1) as f64 * (y2 / y1);
        k -= 1;
        let t = w * q[0].get(k) * q[1].get(m - k);
        acc += t;
        if t < 1e-18 * acc {
            break;
        }
    }
    acc
}

/// Boundary cap geometry through the disk-density reduction: for ζ on the
/// sphere, the pairing τ = ηζ̄ of a σ-uniform η has density
/// (n−1)/π·(1−|τ|²)^{n−2} on the disk (arc length on the circle for n = 1), so
/// every cap quantity is a 2D integral around τ = 1.
pub struct CapGeometry {
    n: usize,
    theta_rule: Vec<(f64, f64)>,
    unit_rule: Vec<(f64, f64)>,
    jacobi_cache: std::sync::Mutex<Vec<(f64, Vec<(f64, f64)>)>>,
}

impl CapGeometry {
    pub fn new(n: usize) -> Result<CapGeometry> {
        if n == 0 {
            return Err(Error::InvalidParameter("n ≥ 1".into()));
        }
        // θ over (−π/2, π/2); symmetric, so integrate half and double
        let gl = gauss_legendre_01(96)?;
        let theta_rule = gl
            .iter()
            .map(|&(x, w)| (x * std::f64::consts::FRAC_PI_2, w * std::f64::consts::PI))
            .collect();
        Ok(CapGeometry {
            n,
            theta_rule,
            unit_rule: gauss_legendre_01(96)?,
            jacobi_cache: std::sync::Mutex::new(Vec::new()),
        })
    }

    fn jacobi_rule(&self, a: f64) -> Vec<(f64, f64)> {
        let mut cache = self.jacobi_cache.lock().unwrap();
        if let Some((_, rule)) = cache.iter().find(|(key, _)| (key - a).abs() < 1e-14) {
            return rule.clone();
        }
        let rule = gauss_jacobi_01(96, 0.0, a + 1.0).expect("gauss rule");
        cache.push((a, rule.clone()));
        cache.last().unwrap().1.clone()
    }

    /// ∫_{|1−ηζ̄| < δ} |1−ηζ̄|^a dσ(η); a = 0 gives σ(cap), a = s−n the kernel mass.
    pub fn cap_integral(&self, a: f64, delta: f64) -> f64 {
        self.cap_integral_r(1.0, a, delta)
    }

    /// Same but for a center rη̂ at radius r ≤ 1 of the closed ball:
    /// ∫_{η ∈ ∂B: |1−rη̂η̄| < δ} |1−rη̂η̄|^a dσ(η).
    pub fn cap_integral_r(&self, r: f64, a: f64, delta: f64) -> f64 {
        let delta = delta.min(1.0 + r);
        if delta <= 0.0 || r <= 0.0 {
            return 0.0;
        }
        if self.n == 1 {
            // |1−re^{iφ}|² = (1−r)² + 4r sin²(φ/2); dσ = dφ/2π
            let dd = delta * delta - (1.0 - r) * (1.0 - r);
            if dd <= 0.0 {
                return 0.0;
            }
            let phi0 = 2.0 * (dd.sqrt() / (2.0 * r.sqrt())).clamp(0.0, 1.0).asin();
            let mut acc = 0.0;
            for &(x, w) in &self.unit_rule {
                let phi = x * phi0;
                let d2 = (1.0 - r) * (1.0 - r) + 4.0 * r * (phi / 2.0).sin().powi(2);
                acc += w * phi0 * d2.powf(a / 2.0);
            }
            return acc / std::f64::consts::PI;
        }
        let nf = self.n as f64;
        // τ = ηη̂: density (n−1)/π (1−|τ|²)^{n−2}; substitute 1−rτ = ρe^{iθ}:
        // |τ|² = (1−2ρcosθ+ρ²)/r², membership requires |τ| ≤ 1 i.e. ρ² − 2ρcosθ ≤ r²−1
        let rho_rule = self.jacobi_rule(a);
        let mut acc = 0.0;
        for &(theta, wt) in &self.theta_rule {
            // ρ range where 1−2ρcosθ+ρ² ≤ r²: ρ ∈ [cosθ−√(cos²θ−1+r²), cosθ+√(…)]
            let disc = theta.cos() * theta.cos() - 1.0 + r * r;
            if disc <= 0.0 {
                continue;
            }
            let rho_lo = (theta.cos() - disc.sqrt()).max(0.0);
            let rho_hi = (theta.cos() + disc.sqrt()).min(delta);
            if rho_hi <= rho_lo {
                continue;
            }
            let mut inner = 0.0;
            if rho_lo == 0.0 {
                // Jacobi weight u^{a+1} handles the ρ^a singularity at the center
                for &(u, wu) in &rho_rule {
                    let rho = u * rho_hi;
                    let om = (r * r - (1.0 - 2.0 * rho * theta.cos() + rho * rho)).max(0.0);
                    inner += wu * (om / (r * r)).powi(self.n as i32 - 2);
                }
                inner *= rho_hi.powf(a + 2.0);
            } else {
                for &(u, wu) in &self.unit_rule {
                    let rho = rho_lo + (rho_hi - rho_lo) * u;
                    let om = (r * r - (1.0 - 2.0 * rho * theta.cos() + rho * rho)).max(0.0);
                    inner += wu
                        * (rho_hi - rho_lo)
                        * rho.powf(a + 1.0)
                        * (om / (r * r)).powi(self.n as i32 - 2);
                }
            }
            acc += wt * inner;
        }
        (nf - 1.0) / (std::f64::consts::PI * r * r) * acc
    }

    pub fn sigma_cap(&self, delta: f64) -> f64 {
        self.cap_integral(0.0, delta)
    }

    /// Inverts σ(cap) = w by monotone bisection.
    pub fn delta_for_mass(&self, w: f64) -> f64 {
        let (mut lo, mut hi): (f64, f64) = (1e-9, 2.0);
        for _ in 0..60 {
            let mid = (lo * hi).sqrt();
            if self.sigma_cap(mid) < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo * hi).sqrt()
    }

    /// Average of |1−ηζ̄|^{s−n} over the cap of Koranyi size δ.
    pub fn kernel_cap_average(&self, s: f64, delta: f64) -> f64 {
        self.cap_integral(s - self.n as f64, delta) / self.sigma_cap(delta)
    }

    /// σ(cap)/δ^n in the small-δ limit (the local cap-volume constant).
    pub fn small_cap_constant(&self) -> f64 {
        let d = 1e-4;
        self.sigma_cap(d) / d.powi(self.n as i32)
    }
}

/// Admissible region Γ(ζ) = { z ∈ B : |1−zζ̄| < 2(1−|z|²) }.
pub fn in_tent(z: &[C64], omz2: f64, zeta: &[C64]) -> bool {
    kdist(z, zeta) < 2.0 * omz2
}

/// Precomputed outer-sphere × inner-ball pair for tent-space norms.
pub struct TentContext {
    pub outer: SphereGrid,
    /// flattened inner nodes (point, ν-weight, 1−|w|²)
    pub inner: Vec<(Vec<C64>, f64, f64)>,
    membership: Vec<Vec<u32>>,
}

impl TentContext {
    pub fn build(n: usize, outer_order: u32, inner_order: u32, radial_nodes: usize) -> Result<TentContext> {
        let outer = SphereGrid::build(n, outer_order)?;
        let ball = BallGrid::build(n, 1.0, inner_order, radial_nodes)?;
        let inner = ball.flat_nodes();
        let membership: Vec<Vec<u32>> = outer
            .nodes
            .par_iter()
            .map(|zeta| {
                inner
                    .iter()
                    .enumerate()
                    .filter(|(_, (w, _, omw2))| in_tent(w, *omw2, zeta))
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect();
        Ok(TentContext {
            outer,
            inner,
            membership,
        })
    }

    /// ‖φ‖_{T^{p,q}(μ)} where dμ = density·dν (density = 1 recovers T^{p,q}).
    /// `abs_phi` gets (point, 1−|w|²) and must return |φ(w)|.
    pub fn tent_norm(
        &self,
        abs_phi: &(dyn Fn(&[C64], f64) -> f64 + Sync),
        p: f64,
        q: f64,
        density: Option<&(dyn Fn(&[C64], f64) -> f64 + Sync)>,
    ) -> f64 {
        let phi: Vec<f64> = self
            .inner
            .par_iter()
            .map(|(w, _, omw2)| abs_phi(w, *omw2))
            .collect();
        let dens: Option<Vec<f64>> = density.map(|f| {
            self.inner
                .par_iter()
                .map(|(w, _, omw2)| f(w, *omw2))
                .collect()
        });
        self.tent_norm_values(&phi, p, q, dens.as_deref())
    }

    /// Same norm from precomputed |φ| node values (and optional density values).
    pub fn tent_norm_values(&self, phi: &[f64], p: f64, q: f64, density: Option<&[f64]>) -> f64 {
        assert_eq!(phi.len(), self.inner.len());
        let n = self.outer.n as f64;
        let vals: Vec<f64> = self
            .inner
            .iter()
            .enumerate()
            .map(|(i, (_, wt, omw2))| {
                let d = density.map(|f| f[i]).unwrap_or(1.0);
                wt * phi[i].powf(q) * d / omw2.powf(n + 1.0)
            })
            .collect();
        let mut outer_acc = 0.0;
        for (zeta_idx, members) in self.membership.iter().enumerate() {
            let inner_val: f64 = members.iter().map(|&i| vals[i as usize]).sum();
            outer_acc += self.outer.weights[zeta_idx] * inner_val.powf(p / q);
        }
        outer_acc.powf(1.0 / p)
    }
}

/// High-precision 1D reduction of the tent inner integral for radial integrands:
/// ∫_{Γ(ζ)} (1−|w|²)^{e} dν(w)/(1−|w|²)^{n+1}, independent of ζ. Used as an oracle
/// against the grid route. Needs e > 0.
pub fn tent_radial_inner_oracle(n: usize, e: f64) -> Result<f64> {
    if e <= 0.0 {
        return Err(Error::InvalidParameter("oracle needs exponent > 0".into()));
    }
    let nf = n as f64;
    // section measure S(r) = σ{ η : |1−rηζ̄| < 2(1−r²) }
    let section = |r: f64| -> f64 {
        let rr = 2.0 * (1.0 - r * r);
        let psi0 = |rho: f64| -> f64 {
            if r * rho == 0.0 {
                return if 1.0 < rr { std::f64::consts::PI } else { 0.0 };
            }
            let arg = (1.0 + r * r * rho * rho - rr * rr) / (2.0 * r * rho);
            arg.clamp(-1.0, 1.0).acos()
        };
        if n == 1 {
            psi0(1.0) / std::f64::consts::PI
        } else {
            let gl = gauss_legendre_01(256).expect("gauss rule");
            let mut acc = 0.0;
            for &(rho, w) in &gl {
                acc += w * rho * (1.0 - rho * rho).powi(n as i32 - 2) * 2.0 * psi0(rho);
            }
            (nf - 1.0) / std::f64::consts::PI * acc
        }
    };
    // n ∫ t^{n−1} (1−t)^{e−1} [ (1−t)^{−n} S(√t) ] dt — the bracket is bounded
    let rule = gauss_jacobi_01(400, e - 1.0, nf - 1.0)?;
    let mut acc = 0.0;
    for &(t, w) in &rule {
        let r = t.sqrt();
        acc += w * section(r) / (1.0 - t).powi(n as i32);
    }
    Ok(nf * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{monomial_moment_ball, monomial_moment_sphere, rat};

    #[test]
    fn gauss_rules_integrate_monomials() {
        let gl = gauss_legendre_01(8).unwrap();
        for d in 0..=15u32 {
            let got: f64 = gl.iter().map(|&(x, w)| w * x.powi(d as i32)).sum();
            let exact = 1.0 / (d as f64 + 1.0);
            assert!((got - exact).abs() < 1e-13, "degree {d}");
        }
        // ∫ t^2 (1−t)^{1.5} t^3 dt against Beta(6, 2.5)
        let gj = gauss_jacobi_01(10, 1.5, 2.0).unwrap();
        let got: f64 = gj.iter().map(|&(t, w)| w * t.powi(3)).sum();
        let exact = (ln_gamma(6.0) + ln_gamma(2.5) - ln_gamma(8.5)).exp();
        assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn sphere_moments_match_closed_form() {
        for n in 1..=3usize {
            let grid = SphereGrid::build(n, 12).unwrap();
            let total: f64 = grid.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for alpha in [vec![0u32; n], {
                let mut v = vec![0u32; n];
                v[0] = 1;
                v
            }] {
                let mi = MultiIndex(alpha.clone());
                let exact = rat_to_f64(&monomial_moment_sphere(&mi));
                let got = grid.integrate(|z| {
                    alpha
                        .iter()
                        .enumerate()
                        .map(|(j, &e)| z[j].norm_sqr().powi(e as i32))
                        .product()
                });
                assert!((got - exact).abs() < 1e-10);
            }
        }
        // n=2: ∫|ζ1|² dσ = 1/2; n=3: ∫|ζ1ζ2|² dσ = 1/12
        let g2 = SphereGrid::build(2, 12).unwrap();
        let v = g2.integrate(|z| z[0].norm_sqr());
        assert!((v - 0.5).abs() < 1e-11);
        let g3 = SphereGrid::build(3, 12).unwrap();
        let v = g3.integrate(|z| z[0].norm_sqr() * z[1].norm_sqr());
        assert!((v - 1.0 / 12.0).abs() < 1e-11);
    }

    #[test]
    fn sphere_mixed_moments_vanish() {
        // ζ^α ζ̄^β with α ≠ β integrates to zero
        let grid = SphereGrid::build(2, 10).unwrap();
        let v = grid.integrate_c(|z| z[0] * z[1] * (z[0] * z[0]).conj());
        assert!(v.norm() < 1e-13);
    }

    #[test]
    fn ball_moments_match_closed_form() {
        let grid = BallGrid::build(2, 1.0, 10, 12).unwrap();
        // ∫ dν = 1
        let v = grid.integrate(|_, _| 1.0);
        assert!((v - 1.0).abs() < 1e-12);
        // ∫ |w1|² dν = 1/3 (N = 1, c_1 = 1)
        let v = grid.integrate(|w, _| w[0].norm_sqr());
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        // N = 2 zero moment: Γ ratio = 1/3, times c_2 = 3 gives a ν_N mass of 1
        let grid = BallGrid::build(2, 2.0, 10, 12).unwrap();
        let v = grid.integrate(|_, _| 1.0);
        let exact = rat_to_f64(&monomial_moment_ball(&MultiIndex(vec![0, 0]), &rat(2)).unwrap());
        assert!((v - exact).abs() < 1e-12);
        assert!((c_n_f64(2, 2.0) * v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nu_n_is_a_probability_measure_for_small_n() {
        for n in 1..=3usize {
            for nn in 1..=8 {
                let grid = BallGrid::build(n, nn as f64, 6, 10).unwrap();
                let mass = c_n_f64(n, nn as f64) * grid.integrate(|_, _| 1.0);
                assert!((mass - 1.0).abs() < 1e-11, "n={n} N={nn}: {mass}");
            }
        }
    }

    #[test]
    fn kernel_integral_at_origin_is_beta() {
        // z = u = 0: unnormalized integrand integrates to n·B(n, N)
        let z = vec![C64::new(0.0, 0.0); 2];
        let v = kernel_integral_i(2, 3.0, 0.0, 0.0, &z, &z, 1e-10).unwrap();
        let exact = 2.0 * (ln_gamma(2.0) + ln_gamma(3.0) - ln_gamma(5.0)).exp();
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn moment_series_matches_hypergeometric_and_quadrature() {
        // c = 0 closed form: G = n·B(n,A)·₂F₁(b/2, b/2; n+A; ρ²)
        let (aa, b) = (2.0, 3.0);
        let rho2: f64 = 0.49;
        let g = kernel_moment_series(&[0.3, 0.19], &[0.0, 0.0], aa, b, 1e-14).unwrap();
        let mut f21 = 0.0;
        let mut term = 1.0;
        let a = b / 2.0;
        for m in 0..500 {
            f21 += term;
            let mf = m as f64;
            term *= (a + mf) * (a + mf) / ((1.0 + mf) * (2.0 + aa + mf)) * rho2;
        }
        let exact = 2.0 * (ln_gamma(2.0) + ln_gamma(aa) - ln_gamma(2.0 + aa)).exp() * f21;
        assert!((g - exact).abs() < 1e-10 * exact, "{g} vs {exact}");

        // against direct quadrature at a moderate point, with |u_1| coordinate factor
        let z = vec![C64::new(0.5, 0.1), C64::new(-0.2, 0.3)];
        let y = [z[0].norm_sqr(), z[1].norm_sqr()];
        let g = kernel_moment_series(&y, &[3.0, 0.0], 2.5, 4.0, 1e-13).unwrap();
        let grid = BallGrid::build(2, 2.5, 28, 40).unwrap();
        let q = grid.integrate(|w, _| {
            w[0].norm().powi(3) * kdist(&z, w).powf(-4.0)
        });
        assert!((g - q).abs() < 1e-6 * q, "{g} vs {q}");
    }

    #[test]
    fn moment_series_deep_shell_is_finite_and_monotone() {
        // growth regime b > n+A+h: value increases as the point approaches ∂B
        let mut prev = 0.0;
        for j in 1..=12 {
            let rho = 1.0 - 2f64.powi(-j);
            let g = kernel_moment_series(&[rho * rho * 0.6, rho * rho * 0.4], &[1.0, 0.0], 1.5, 9.0, 1e-10)
                .unwrap();
            assert!(g.is_finite() && g > prev);
            prev = g;
        }
    }

    #[test]
    fn tent_membership_and_norms() {
        let ctx = TentContext::build(2, 8, 8, 16).unwrap();
        // φ = 0 → 0
        let zero = ctx.tent_norm(&|_: &[C64], _| 0.0, 2.0, 2.0, None);
        assert_eq!(zero, 0.0);
        // homogeneity ‖cφ‖ = |c|·‖φ‖
        let phi = |_: &[C64], om: f64| om.powf(0.8);
        let n1 = ctx.tent_norm(&phi, 2.0, 2.0, None);
        let n3 = ctx.tent_norm(&|w: &[C64], om: f64| 3.0 * phi(w, om), 2.0, 2.0, None);
        assert!((n3 - 3.0 * n1).abs() < 1e-12 * n1);
        // monotone in |φ|
        let small = ctx.tent_norm(&|_: &[C64], om: f64| 0.5 * om.powf(0.8), 2.0, 2.0, None);
        assert!(small <= n1);
    }

    #[test]
    fn tent_grid_agrees_with_radial_oracle() {
        // φ(w) = (1−|w|²)^a, μ = ν: inner integral is ζ-independent; compare the
        // grid inner sums against the 1D disk-density reduction, and two grid
        // resolutions against each other (1%).
        let a = 1.2;
        let q = 2.0;
        let oracle = tent_radial_inner_oracle(2, q * a).unwrap();
        let coarse = TentContext::build(2, 8, 12, 24).unwrap();
        let fine = TentContext::build(2, 12, 18, 36).unwrap();
        let inner_avg = |ctx: &TentContext| {
            let vals: Vec<f64> = ctx
                .inner
                .iter()
                .map(|(_, wt, om)| wt * om.powf(q * a) / om.powf(3.0))
                .collect();
            let mut acc = 0.0;
            for (zi, members) in ctx.membership.iter().enumerate() {
                let s: f64 = members.iter().map(|&i| vals[i as usize]).sum();
                acc += ctx.outer.weights[zi] * s;
            }
            acc
        };
        let vc = inner_avg(&coarse);
        let vf = inner_avg(&fine);
        assert!((vc - vf).abs() < 0.01 * vf.abs(), "{vc} vs {vf}");
        assert!((vf - oracle).abs() < 0.02 * oracle, "{vf} vs oracle {oracle}");
    }
}
