//! Discretized convex program for the nonisotropic Riesz capacity
//! C_{s,p}(E) = inf { Σ w_i f_i^p : f ≥ 0, (Kf)_j ≥ level on E }.
//!
//! First-order primal-dual: the dual multipliers ascend along the constraint
//! residual with a backtracking step, and for fixed multipliers the Lagrangian is
//! separable in f, so the primal block minimizer is closed-form (it is the fixed
//! point of the projected-gradient iteration; a few Armijo-guarded polish steps
//! run after it to keep the scheme honest when p < 2 smoothing is active). The
//! dual multipliers divided by p are the discrete capacitary measure: at the
//! optimum f* = (I_s μ*)^{p'−1} and μ*(E) = C = E(μ*).
//!
//! The node set is the sphere grid with near-coincident nodes merged: the torus
//! parametrization degenerates where a simplex coordinate vanishes, and a ring of
//! nearly identical points is poison for a singular kernel. Diagonal entries are
//! the exact cap-average of the kernel over the node's own patch, and sub-patch
//! off-diagonal pairs are clamped at that average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::potential::{Atom, AtomicMeasure, ParamSet};
use crate::quad::{kdist, CapGeometry, SphereGrid};
use crate::{C64, Error, Result};

/// Dense symmetric kernel matrix on a merged sphere node set.
pub struct KernelMatrix {
    pub nodes: Vec<Vec<C64>>,
    pub weights: Vec<f64>,
    /// original grid index → merged node index
    pub from_grid: Vec<usize>,
    data: Vec<f64>,
    /// per-node patch scale (Koranyi size of a cap carrying the node's weight)
    pub patch_scale: Vec<f64>,
    /// σ(cap)/δ^n small-cap constant of this dimension
    pub cap_const: f64,
}

impl KernelMatrix {
    pub fn build(grid: &SphereGrid, s: f64) -> KernelMatrix {
        let n = grid.n;
        let geom = CapGeometry::new(n).expect("cap geometry");

        // patch scale of each raw node (few distinct weights)
        let mut by_weight: Vec<(f64, f64)> = Vec::new();
        let raw_patch: Vec<f64> = grid
            .weights
            .iter()
            .map(|&w| {
                if let Some((_, d)) =
                    by_weight.iter().find(|(wk, _)| (wk - w).abs() <= 1e-13 * w)
                {
                    *d
                } else {
                    let d = geom.delta_for_mass(w);
                    by_weight.push((w, d));
                    d
                }
            })
            .collect();

        // greedy cluster merge of nodes closer than their joint patch scale
        let mut reps: Vec<Vec<C64>> = Vec::new(); // running weighted sums
        let mut weights: Vec<f64> = Vec::new();
        let mut rep_patch: Vec<f64> = Vec::new();
        let mut from_grid = Vec::with_capacity(grid.len());
        for (node, (&w, &dp)) in grid
            .nodes
            .iter()
            .zip(grid.weights.iter().zip(&raw_patch))
        {
            let mut assigned = None;
            for (ci, rep) in reps.iter().enumerate() {
                let center: Vec<C64> = normalize(rep);
                if kdist(&center, node) < 0.6 * (rep_patch[ci] + dp) {
                    assigned = Some(ci);
                    break;
                }
            }
            match assigned {
                Some(ci) => {
                    for (acc, z) in reps[ci].iter_mut().zip(node) {
                        *acc += z * w;
                    }
                    weights[ci] += w;
                    rep_patch[ci] = rep_patch[ci].max(dp);
                    from_grid.push(ci);
                }
                None => {
                    reps.push(node.iter().map(|z| z * w).collect());
                    weights.push(w);
                    rep_patch.push(dp);
                    from_grid.push(reps.len() - 1);
                }
            }
        }
        let nodes: Vec<Vec<C64>> = reps.iter().map(|r| normalize(r)).collect();
        let nn = nodes.len();
        let patch_scale: Vec<f64> = weights.iter().map(|&w| geom.delta_for_mass(w)).collect();
        let diag: Vec<f64> = patch_scale
            .iter()
            .map(|&d| geom.kernel_cap_average(s, d))
            .collect();

        let mut data = vec![0.0; nn * nn];
        data.par_chunks_mut(nn).enumerate().for_each(|(i, row)| {
            for j in 0..nn {
                if i == j {
                    row[j] = diag[i];
                } else {
                    let d = kdist(&nodes[i], &nodes[j]);
                    let clamp = diag[i].min(diag[j]);
                    row[j] = d.powf(s - n as f64).min(clamp);
                }
            }
        });
        KernelMatrix {
            nodes,
            weights,
            from_grid,
            data,
            patch_scale,
            cap_const: geom.small_cap_constant(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.len()..(i + 1) * self.len()]
    }

    /// (K f)_j = Σ_i k(j,i) w_i f_i over the merged node set.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|j| {
                self.row(j)
                    .iter()
                    .zip(&self.weights)
                    .zip(f)
                    .map(|((k, w), v)| k * w * v)
                    .sum()
            })
            .collect()
    }

    /// Merged nodes inside the Koranyi cap B(center, radius).
    pub fn cap_nodes(&self, center: &[C64], radius: f64) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, node)| kdist(center, node) < 2.0 * radius)
            .map(|(i, _)| i)
            .collect()
    }
}

fn normalize(v: &[C64]) -> Vec<C64> {
    let norm = crate::quad::norm_sqr(v).sqrt();
    v.iter().map(|z| z / norm).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub tol: f64,
    pub level: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer: 4000,
            tol: 1e-2,
            level: 1.0,
            seed: 0,
        }
    }
}

pub struct CapacityProblem<'a> {
    pub matrix: &'a KernelMatrix,
    pub e_nodes: Vec<usize>,
    pub params: ParamSet,
    pub options: SolverOptions,
}

#[derive(Debug, Serialize)]
pub struct CapacitySolution {
    pub value: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub f_star: Vec<f64>,
    /// dual multipliers (per E node, before the 1/p normalization)
    pub multipliers: Vec<f64>,
    pub e_nodes: Vec<usize>,
    /// max(0, level − min_E K f*)
    pub constraint_residual: f64,
}

impl CapacitySolution {
    /// The capacitary measure μ* = (dual multipliers)/p as atoms at E nodes.
    pub fn extremal_measure(&self, matrix: &KernelMatrix, p: f64) -> AtomicMeasure {
        let atoms = self
            .e_nodes
            .iter()
            .zip(&self.multipliers)
            .filter(|(_, &m)| m > 0.0)
            .map(|(&j, &m)| Atom {
                point: matrix.nodes[j].clone(),
                mass: m / p,
            })
            .collect();
        AtomicMeasure { atoms }
    }
}

pub fn solve_capacity(problem: &CapacityProblem) -> Result<CapacitySolution> {
    let params = &problem.params;
    params.validate_capacity()?;
    if problem.e_nodes.is_empty() {
        return Err(Error::InvalidParameter("E must be nonempty".into()));
    }
    let p = params.p;
    let level = problem.options.level;
    let km = problem.matrix;
    let nn = km.len();
    let e = &problem.e_nodes;
    if e.iter().any(|&j| j >= nn) {
        return Err(Error::InvalidParameter("E index out of range".into()));
    }
    let w = &km.weights;

    // primal block minimizer for fixed multipliers: f_i = (pot_i/p)^{1/(p−1)}
    let primal = |mu: &[f64]| -> Vec<f64> {
        (0..nn)
            .into_par_iter()
            .map(|i| {
                let pot: f64 = e.iter().zip(mu).map(|(&j, m)| m * km.at(j, i)).sum();
                (pot / p).powf(1.0 / (p - 1.0))
            })
            .collect()
    };
    let objective = |f: &[f64]| -> f64 { f.iter().zip(w).map(|(v, ww)| ww * v.powf(p)).sum() };
    let dual_value = |mu: &[f64], f: &[f64]| -> f64 {
        level * mu.iter().sum::<f64>() - (p - 1.0) * objective(f)
    };

    let mut mu = vec![level * 1e-3; e.len()];
    let mut step = 1.0;
    let mut best_primal = f64::INFINITY;
    let mut best_f: Vec<f64> = vec![0.0; nn];
    let mut iterations = 0;

    let mut f = primal(&mu);
    let mut d_cur = dual_value(&mu, &f);
    for it in 0..problem.options.max_outer {
        iterations = it + 1;
        let kf = km.apply(&f);
        let min_e = e.iter().map(|&j| kf[j]).fold(f64::INFINITY, f64::min);
        if min_e > 0.0 {
            let scaled: f64 = objective(&f) * (level / min_e).powf(p);
            if scaled < best_primal {
                best_primal = scaled;
                best_f = f.iter().map(|v| v * level / min_e).collect();
            }
        }
        let gap = (best_primal - d_cur) / best_primal.abs().max(1e-300);
        if gap <= problem.options.tol && it > 2 {
            break;
        }
        // dual ascent with backtracking on the dual value
        let grad: Vec<f64> = e.iter().map(|&j| level - kf[j]).collect();
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = mu
                .iter()
                .zip(&grad)
                .map(|(m, g)| (m + step * g).max(0.0))
                .collect();
            let f_cand = primal(&cand);
            let d_cand = dual_value(&cand, &f_cand);
            if d_cand >= d_cur - 1e-14 * d_cur.abs() {
                mu = cand;
                f = f_cand;
                d_cur = d_cand;
                step *= 1.3;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // dual stationary to machine precision
        }
    }

    // a few Armijo-guarded projected-gradient polish steps on the Lagrangian
    // (smoothed objective when p < 2; at the block minimizer these accept only
    // if rounding left any descent)
    let eps2 = if p < 2.0 { 1e-16 } else { 0.0 };
    let smooth_obj = |fv: &[f64]| -> f64 {
        fv.iter()
            .zip(w)
            .map(|(v, ww)| ww * (v * v + eps2).powf(p / 2.0))
            .sum()
    };
    let pot: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|i| e.iter().zip(&mu).map(|(&j, m)| m * km.at(j, i)).sum::<f64>())
        .collect();
    let lagr = |fv: &[f64]| -> f64 {
        smooth_obj(fv)
            - fv.iter()
                .zip(&pot)
                .zip(w)
                .map(|((v, q), ww)| v * q * ww)
                .sum::<f64>()
    };
    let mut cur = lagr(&f);
    let mut pg_step = 1.0;
    for _ in 0..5 {
        let grad: Vec<f64> = f
            .iter()
            .zip(&pot)
            .map(|(v, q)| p * (v * v + eps2).powf(p / 2.0 - 1.0) * v - q)
            .collect();
        let mut improved = false;
        for _ in 0..20 {
            let cand: Vec<f64> = f
                .iter()
                .zip(&grad)
                .map(|(v, g)| (v - pg_step * g).max(0.0))
                .collect();
            let val = lagr(&cand);
            let decrease: f64 = f
                .iter()
                .zip(&cand)
                .zip(&grad)
                .map(|((a, b), g)| g * (a - b))
                .sum();
            if val <= cur - 1e-4 * decrease.max(0.0) && val < cur {
                f = cand;
                cur = val;
                improved = true;
                break;
            }
            pg_step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let kf = km.apply(&f);
    let min_e = e.iter().map(|&j| kf[j]).fold(f64::INFINITY, f64::min);
    if min_e > 0.0 {
        let scaled = objective(&f) * (level / min_e).powf(p);
        if scaled < best_primal {
            best_primal = scaled;
            best_f = f.iter().map(|v| v * level / min_e).collect();
        }
    }

    let kf_best = km.apply(&best_f);
    let min_best = e.iter().map(|&j| kf_best[j]).fold(f64::INFINITY, f64::min);
    let gap = ((best_primal - d_cur) / best_primal.abs().max(1e-300)).max(0.0);
    if !best_primal.is_finite() {
        return Err(Error::SolverFailure("no feasible primal found".into()));
    }
    Ok(CapacitySolution {
        value: best_primal,
        duality_gap: gap,
        iterations,
        f_star: best_f,
        multipliers: mu,
        e_nodes: e.clone(),
        constraint_residual: (level - min_best).max(0.0),
    })
}

#[derive(Debug, Serialize)]
pub struct ExtremalReport {
    pub value: f64,
    /// |μ*(E) − C| / C
    pub mass_dev: f64,
    /// |E_{s,p}(μ*) − C| / C
    pub energy_dev: f64,
    /// min over E of W_{s,p}(μ*) with the grid-scale radial cutoff
    pub min_wolff_on_e: f64,
    /// max over the node set of I_s[(I_s μ*)^{p'−1}]
    pub max_nonlinear_potential: f64,
    /// (t, C_{s,p}{potential ≥ t}, C/t^ε) rows
    pub levelset: Vec<(f64, f64, f64)>,
}

/// Discrete I_s μ* at every node, using the matrix kernel.
pub fn dual_potential(km: &KernelMatrix, sol: &CapacitySolution, p: f64) -> Vec<f64> {
    (0..km.len())
        .into_par_iter()
        .map(|i| {
            sol.e_nodes
                .iter()
                .zip(&sol.multipliers)
                .map(|(&j, m)| m / p * km.at(j, i))
                .sum()
        })
        .collect()
}

/// Checks the extremal-measure properties of a converged solution and tabulates
/// the level-set capacity decay.
pub fn verify_extremal(
    problem: &CapacityProblem,
    sol: &CapacitySolution,
    levelset_ts: &[f64],
) -> Result<ExtremalReport> {
    let p = problem.params.p;
    let s = problem.params.s;
    let n = problem.params.n;
    let pp = p / (p - 1.0);
    let km = problem.matrix;
    let w = &km.weights;
    let c = sol.value;

    let mu = sol.extremal_measure(km, p);
    let mass_dev = (mu.total_mass() - c).abs() / c;

    let pot = dual_potential(km, sol, p);
    let energy_val: f64 = pot.iter().zip(w).map(|(v, ww)| ww * v.powf(pp)).sum();
    let energy_dev = (energy_val - c).abs() / c;

    let phi: Vec<f64> = pot.iter().map(|v| v.powf(pp - 1.0)).collect();
    let nonlinear: Vec<f64> = (0..km.len())
        .into_par_iter()
        .map(|j| {
            km.row(j)
                .iter()
                .zip(w)
                .zip(&phi)
                .map(|((k, ww), f)| k * ww * f)
                .sum()
        })
        .collect();
    let max_nonlinear = nonlinear.iter().cloned().fold(0.0, f64::max);

    // Wolff on E with the lower cutoff at the resolved patch scale
    let cutoff = km.patch_scale.iter().cloned().fold(0.0, f64::max);
    let min_wolff = sol
        .e_nodes
        .iter()
        .map(|&j| crate::potential::wolff_exact(&mu, n, s, p, &km.nodes[j], None, cutoff, None))
        .fold(f64::INFINITY, f64::min);

    // level sets of the nonlinear potential
    let eps = 1.0f64.min(p - 1.0);
    let mut levelset = Vec::new();
    for &t in levelset_ts {
        let nodes: Vec<usize> = (0..km.len()).filter(|&j| nonlinear[j] >= t).collect();
        if nodes.is_empty() {
            levelset.push((t, 0.0, c / t.powf(eps)));
            continue;
        }
        let sub = CapacityProblem {
            matrix: km,
            e_nodes: nodes,
            params: problem.params.clone(),
            options: problem.options.clone(),
        };
        let subsol = solve_capacity(&sub)?;
        levelset.push((t, subsol.value, c / t.powf(eps)));
    }

    Ok(ExtremalReport {
        value: c,
        mass_dev,
        energy_dev,
        min_wolff_on_e: min_wolff,
        max_nonlinear_potential: max_nonlinear,
        levelset,
    })
}

/// w^δ = (I_s[(I_s μ*)^{p'−1}])^δ sampled on the node set; δ must lie in the
/// printed A₁ window for the (s,p,n) regime.
pub fn capacitary_weight(
    problem: &CapacityProblem,
    sol: &CapacitySolution,
    delta: f64,
) -> Result<Vec<f64>> {
    let p = problem.params.p;
    let s = problem.params.s;
    let nf = problem.params.n as f64;
    let upper = if p <= 2.0 - s / nf {
        nf / (nf - s)
    } else {
        (p - 1.0) * nf / (nf - s * p)
    };
    if !(delta > 1.0 && delta < upper) {
        return Err(Error::InvalidParameter(format!(
            "δ must lie in (1, {upper}), got {delta}"
        )));
    }
    let pp = p / (p - 1.0);
    let km = problem.matrix;
    let pot = dual_potential(km, sol, p);
    let phi: Vec<f64> = pot.iter().map(|v| v.powf(pp - 1.0)).collect();
    Ok((0..km.len())
        .into_par_iter()
        .map(|j| {
            let v: f64 = km
                .row(j)
                .iter()
                .zip(&km.weights)
                .zip(&phi)
                .map(|((k, ww), f)| k * ww * f)
                .sum();
            v.powf(delta)
        })
        .collect())
}
