//! Diagonal operator calculus on homogeneous expansions.
//!
//! Every operator in the family — P^{N,M}, its inverse T^{N,M}, the derivative
//! compositions R^k_t and integer powers of (1+R) — acts on a homogeneous part of
//! degree k by multiplication with a scalar, and for rational parameters that scalar
//! is an exact rational Pochhammer ratio. [`OpAlgebra`] evaluates eigenvalues and
//! applies operators; it also carries the optional corruption hook used by the
//! negative-control checks (a perturbed eigenvalue table must make the exact
//! identity suites fail).

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::poly::{pochhammer, rat, Polynomial};
use crate::{Error, Rat, Result};

/// A degree-indexed diagonal operator.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagonalOp {
    Identity,
    /// P^{N,M}: eigenvalue (n+M)_k / (n+N)_k. N = 0 is the boundary operator
    /// P^{0,M} (so C_s = P^{0,-s}).
    Bergman { nn: Rat, mm: Rat },
    /// T^{N,M}, the inverse of P^{N,M}.
    Inverse { nn: Rat, mm: Rat },
    /// R^k_t = (1+R/(t+k-1))⋯(1+R/t); eigenvalue (t+m)_k / (t)_k at degree m.
    RadialShift { k: u32, t: Rat },
    /// (1+R)^s for integer s; eigenvalue (1+m)^s.
    RadialPower { s: i32 },
    Compose(Vec<DiagonalOp>),
}

impl DiagonalOp {
    pub fn label(&self) -> String {
        match self {
            DiagonalOp::Identity => "id".into(),
            DiagonalOp::Bergman { nn, mm } => format!("P^{{{nn},{mm}}}"),
            DiagonalOp::Inverse { nn, mm } => format!("T^{{{nn},{mm}}}"),
            DiagonalOp::RadialShift { k, t } => format!("R^{k}_{{{t}}}"),
            DiagonalOp::RadialPower { s } => format!("(1+R)^{s}"),
            DiagonalOp::Compose(ops) => ops
                .iter()
                .map(|o| o.label())
                .collect::<Vec<_>>()
                .join(" ∘ "),
        }
    }
}

/// Which table the negative-control hook perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorruptTarget {
    /// Every leaf-operator eigenvalue at degree ≥ 1 is multiplied by (1+eps).
    Eigenvalue,
    /// The last nonzero entry of every derived coefficient vector (expT,
    /// kernel-shift expansions, RkvPN recursion) is multiplied by (1+eps).
    Coefficient,
}

#[derive(Debug, Clone)]
pub struct Corruption {
    pub target: CorruptTarget,
    pub eps: Rat,
}

/// Evaluation context: ambient dimension plus the optional corruption hook.
#[derive(Debug, Clone)]
pub struct OpAlgebra {
    n: usize,
    corruption: Option<Corruption>,
}

impl OpAlgebra {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "ambient dimension must be at least 1");
        OpAlgebra { n, corruption: None }
    }

    pub fn with_corruption(n: usize, corruption: Corruption) -> Self {
        OpAlgebra {
            n,
            corruption: Some(corruption),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn n_rat(&self) -> Rat {
        rat(self.n as i64)
    }

    /// c_N = Γ(n+N)/(n!·Γ(N)) = (N)_n / n!, the ν_N normalization.
    pub fn c_n(&self, nn: &Rat) -> Result<Rat> {
        if *nn <= Rat::zero() {
            return Err(Error::InvalidParameter(format!("c_N needs N > 0, got {nn}")));
        }
        Ok(pochhammer(nn, self.n as u32) / crate::poly::factorial(self.n as u32))
    }

    pub fn bergman(&self, nn: Rat, mm: Rat) -> Result<DiagonalOp> {
        self.check_bergman_params(&nn, &mm)?;
        Ok(DiagonalOp::Bergman { nn, mm })
    }

    pub fn inverse_operator(&self, nn: Rat, mm: Rat) -> Result<DiagonalOp> {
        self.check_bergman_params(&nn, &mm)?;
        Ok(DiagonalOp::Inverse { nn, mm })
    }

    pub fn rkt_operator(&self, k: u32, t: Rat) -> Result<DiagonalOp> {
        if t <= Rat::zero() {
            return Err(Error::InvalidParameter(format!(
                "R^k_t needs t > 0, got {t}"
            )));
        }
        Ok(DiagonalOp::RadialShift { k, t })
    }

    fn check_bergman_params(&self, nn: &Rat, mm: &Rat) -> Result<()> {
        if *nn < Rat::zero() {
            return Err(Error::InvalidParameter(format!("P^{{N,M}} needs N ≥ 0, got N={nn}")));
        }
        if *mm <= -self.n_rat() {
            return Err(Error::InvalidParameter(format!(
                "P^{{N,M}} needs M > -n, got M={mm}"
            )));
        }
        Ok(())
    }

    /// λ_k^{N,M} = (n+M)_k / (n+N)_k, exact. Positive throughout the admissible
    /// range, so the inverse never divides by zero.
    pub fn bergman_eigenvalue(&self, nn: &Rat, mm: &Rat, k: u32) -> Result<Rat> {
        self.check_bergman_params(nn, mm)?;
        let num = pochhammer(&(self.n_rat() + mm), k);
        let den = pochhammer(&(self.n_rat() + nn), k);
        Ok(self.maybe_corrupt_eigen(num / den, k))
    }

    fn maybe_corrupt_eigen(&self, lambda: Rat, k: u32) -> Rat {
        match &self.corruption {
            Some(c) if c.target == CorruptTarget::Eigenvalue && k >= 1 => {
                lambda * (Rat::one() + c.eps.clone())
            }
            _ => lambda,
        }
    }

    fn maybe_corrupt_coeffs(&self, mut coeffs: Vec<Rat>) -> Vec<Rat> {
        if let Some(c) = &self.corruption {
            if c.target == CorruptTarget::Coefficient {
                if let Some(v) = coeffs.iter_mut().rev().find(|v| !v.is_zero()) {
                    *v *= Rat::one() + c.eps.clone();
                }
            }
        }
        coeffs
    }

    /// Eigenvalue of `op` at homogeneous degree `k`.
    pub fn eigenvalue(&self, op: &DiagonalOp, k: u32) -> Result<Rat> {
        match op {
            DiagonalOp::Identity => Ok(Rat::one()),
            DiagonalOp::Bergman { nn, mm } => self.bergman_eigenvalue(nn, mm, k),
            DiagonalOp::Inverse { nn, mm } => {
                let lambda = self.bergman_eigenvalue(nn, mm, k)?;
                if lambda.is_zero() {
                    return Err(Error::InvalidParameter(
                        "zero eigenvalue cannot be inverted".into(),
                    ));
                }
                Ok(Rat::one() / lambda)
            }
            DiagonalOp::RadialShift { k: ord, t } => {
                let num = pochhammer(&(t + rat(k as i64)), *ord);
                let den = pochhammer(t, *ord);
                Ok(self.maybe_corrupt_eigen(num / den, k))
            }
            DiagonalOp::RadialPower { s } => {
                let base = rat(1 + k as i64);
                Ok(self.maybe_corrupt_eigen(rat_int_pow(&base, *s), k))
            }
            DiagonalOp::Compose(ops) => {
                let mut acc = Rat::one();
                for o in ops {
                    acc *= self.eigenvalue(o, k)?;
                }
                Ok(acc)
            }
        }
    }

    /// Applies the operator degree by degree; exact.
    pub fn apply(&self, op: &DiagonalOp, f: &Polynomial) -> Result<Polynomial> {
        let mut out = Polynomial::zero(f.dim());
        for (deg, part) in f.homogeneous_parts() {
            let lambda = self.eigenvalue(op, deg)?;
            out = out.add(&part.scale_rat(&lambda))?;
        }
        Ok(out)
    }

    /// Expands R^order_{t} applied to (1−x)^{−a} over the shifted powers:
    /// R^order_t (1−x)^{−a} = Σ_j coeffs[j] (1−x)^{−(a+j)}.
    ///
    /// With a = n+N and t = n+M this yields the expT coefficients; with a = n+M
    /// and t = n+N it is the expansion behind the master decomposition.
    pub fn shift_expansion(&self, a: &Rat, t0: &Rat, order: u32) -> Vec<Rat> {
        let mut b = vec![Rat::one()];
        for i in 0..order {
            let t = t0 + rat(i as i64);
            let mut next = vec![Rat::zero(); b.len() + 1];
            for (j, bj) in b.iter().enumerate() {
                let aj = a + rat(j as i64);
                next[j] += bj * (Rat::one() - &aj / &t);
                next[j + 1] += bj * (aj / &t);
            }
            b = next;
        }
        self.maybe_corrupt_coeffs(b)
    }

    /// Coefficients a_0..a_l of T^{N,M}(z,w) = Σ_j a_j P^{M+l,N+j}(z,w), derived by
    /// expanding R^l_{n+M} applied to the kernel. The defining property, verified
    /// by the checks, is Σ_j a_j λ_k^{M+l,N+j} = 1/λ_k^{N,M} for every k.
    pub fn expt_coefficients(&self, nn: &Rat, mm: &Rat, l: u32) -> Result<Vec<Rat>> {
        self.check_bergman_params(nn, mm)?;
        if rat(l as i64) <= Rat::zero().max(-mm.clone()) {
            return Err(Error::InvalidParameter(format!(
                "expT needs integer l > max(0, -M), got l={l}, M={mm}"
            )));
        }
        Ok(self.shift_expansion(&(self.n_rat() + nn), &(self.n_rat() + mm), l))
    }

    /// Residual of the integration-by-parts identity
    /// P^{N,M}(f) = R^m_{n+N+k} [ P^{N+k+m,M} (R^k_{n+N} f) ]; zero iff the
    /// identity holds (it always does — this is the checkable form).
    pub fn intparts_residual(
        &self,
        nn: &Rat,
        mm: &Rat,
        k: u32,
        m: u32,
        f: &Polynomial,
    ) -> Result<Polynomial> {
        let lhs = self.apply(&self.bergman(nn.clone(), mm.clone())?, f)?;
        let inner = self.apply(
            &self.rkt_operator(k, self.n_rat() + nn)?,
            f,
        )?;
        let mid = self.apply(
            &self.bergman(nn + rat((k + m) as i64), mm.clone())?,
            &inner,
        )?;
        let rhs = self.apply(
            &self.rkt_operator(m, self.n_rat() + nn + rat(k as i64))?,
            &mid,
        )?;
        lhs.sub(&rhs)
    }

    /// Coefficients a_1..a_{m+1} with
    /// h = Σ_{j=1}^m a_j P^{N+j,N}(R^1_M h) + a_{m+1} P^{N+m,N}(h),
    /// built by iterating P^{N+j,N}(h) = (M/(n+N+j)) P^{N+j+1,N}(R^1_M h)
    /// + ((n+N+j−M)/(n+N+j)) P^{N+j+1,N}(h).
    pub fn rkvpn_coefficients(&self, nn: &Rat, m_idx: &Rat, m: u32) -> Result<Vec<Rat>> {
        if *nn <= Rat::zero() || *m_idx <= Rat::zero() || m == 0 {
            return Err(Error::InvalidParameter(
                "RkvPN needs N, M > 0 and m ≥ 1".into(),
            ));
        }
        let mut coeffs = Vec::with_capacity(m as usize + 1);
        let mut rest = Rat::one();
        for j in 0..m {
            let d = self.n_rat() + nn + rat(j as i64);
            coeffs.push(&rest * m_idx / &d);
            rest = rest * (&d - m_idx) / &d;
        }
        coeffs.push(rest);
        Ok(self.maybe_corrupt_coeffs(coeffs))
    }

    /// Residual of the RkvPN identity for a concrete polynomial h.
    pub fn rkvpn_residual(&self, nn: &Rat, m_idx: &Rat, m: u32, h: &Polynomial) -> Result<Polynomial> {
        let coeffs = self.rkvpn_coefficients(nn, m_idx, m)?;
        let r1m = self.rkt_operator(1, m_idx.clone())?;
        let r1m_h = self.apply(&r1m, h)?;
        let mut acc = Polynomial::zero(h.dim());
        for j in 1..=m {
            let op = self.bergman(nn + rat(j as i64), nn.clone())?;
            acc = acc.add(&self.apply(&op, &r1m_h)?.scale_rat(&coeffs[j as usize - 1]))?;
        }
        let tail_op = self.bergman(nn + rat(m as i64), nn.clone())?;
        acc = acc.add(&self.apply(&tail_op, h)?.scale_rat(&coeffs[m as usize]))?;
        h.sub(&acc)
    }
}

fn rat_int_pow(base: &Rat, s: i32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..s.unsigned_abs() {
        acc *= base;
    }
    if s < 0 {
        Rat::one() / acc
    } else {
        acc
    }
}

/// Kernel-shift identity at the eigenvalue level:
/// (n+M)_m/m! · Π_{i<k} (n+M+i+m)/(n+M+i) = (n+M+k)_m/m!.
pub fn kernel_shift_identity_holds(n: usize, mm: &Rat, k: u32, m: u32) -> bool {
    let base = rat(n as i64) + mm;
    let lhs = pochhammer(&base, m) / crate::poly::factorial(m)
        * (pochhammer(&(&base + rat(m as i64)), k) / pochhammer(&base, k));
    let rhs = pochhammer(&(&base + rat(k as i64)), m) / crate::poly::factorial(m);
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::rng;
    use crate::poly::{random_polynomial, ratq};

    #[test]
    fn normalization_constants() {
        let alg = OpAlgebra::new(2);
        assert_eq!(alg.c_n(&rat(1)).unwrap(), rat(1));
        // n=2: c_2 = (n+1)/1 · c_1 = 3
        assert_eq!(alg.c_n(&rat(2)).unwrap(), rat(3));
        // closed form satisfies the recursion c_{N+1} = (n+N)/N · c_N for N = 1..8
        for n in 1..=3usize {
            let alg = OpAlgebra::new(n);
            for nv in 1..=8i64 {
                let lhs = alg.c_n(&rat(nv + 1)).unwrap();
                let rhs = (rat(n as i64) + rat(nv)) / rat(nv) * alg.c_n(&rat(nv)).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        assert!(OpAlgebra::new(2).c_n(&rat(0)).is_err());
    }

    #[test]
    fn bergman_eigenvalue_values() {
        let alg = OpAlgebra::new(2);
        // M = N forces the identity
        for k in 0..20 {
            assert_eq!(alg.bergman_eigenvalue(&rat(3), &rat(3), k).unwrap(), rat(1));
        }
        // k = 0 is always 1
        assert_eq!(alg.bergman_eigenvalue(&rat(1), &rat(4), 0).unwrap(), rat(1));
        // n=2, N=1, M=2, k=1 → 4/3 (fixed by the term-by-term moment oracle,
        // cross-checked against quadrature in quad::tests)
        assert_eq!(
            alg.bergman_eigenvalue(&rat(1), &rat(2), 1).unwrap(),
            ratq(4, 3)
        );
        assert!(alg.bergman_eigenvalue(&rat(-1), &rat(0), 1).is_err());
        assert!(alg.bergman_eigenvalue(&rat(1), &rat(-2), 1).is_err());
    }

    #[test]
    fn boundary_eigenvalue_matches_sphere_moment_derivation() {
        // For N = 0 the eigenvalue must reproduce the term-by-term boundary
        // derivation λ_k^{0,M} = (n+M)_k (n−1)!/(n−1+k)! = (n+M)_k/(n)_k.
        for n in 1..=3usize {
            let alg = OpAlgebra::new(n);
            let mm = ratq(-1, 2);
            for k in 0..=12u32 {
                let expect = pochhammer(&(rat(n as i64) + &mm), k)
                    * crate::poly::factorial(n as u32 - 1)
                    / crate::poly::factorial(n as u32 - 1 + k);
                assert_eq!(alg.bergman_eigenvalue(&rat(0), &mm, k).unwrap(), expect);
            }
        }
    }

    #[test]
    fn apply_diagonal_examples() {
        let alg = OpAlgebra::new(2);
        // (1+R)^2 on z1 z2 → 9 z1 z2
        let f = Polynomial::var(2, 0).multiply(&Polynomial::var(2, 1)).unwrap();
        let op = DiagonalOp::RadialPower { s: 2 };
        assert_eq!(alg.apply(&op, &f).unwrap(), f.scale_rat(&rat(9)));

        // R^1_t scales degree m by (t+m)/t
        let r1 = alg.rkt_operator(1, ratq(3, 2)).unwrap();
        assert_eq!(
            alg.eigenvalue(&r1, 4).unwrap(),
            (ratq(3, 2) + rat(4)) / ratq(3, 2)
        );

        // P^{N,N} reproduces random polynomials exactly
        let mut r = rng(21);
        for _ in 0..10 {
            let f = random_polynomial(&mut r, 2, 8, 10);
            let p = alg.bergman(rat(2), rat(2)).unwrap();
            assert_eq!(alg.apply(&p, &f).unwrap(), f);
        }
    }

    #[test]
    fn rkt_composition_law() {
        // R^m_{t+k} ∘ R^k_t = R^{k+m}_t exactly, k,m ≤ 5, t ∈ {1, 3/2, n+2}
        for n in [1usize, 2] {
            let alg = OpAlgebra::new(n);
            for t in [rat(1), ratq(3, 2), rat(n as i64 + 2)] {
                for k in 0..=5u32 {
                    for m in 0..=5u32 {
                        let lhs = DiagonalOp::Compose(vec![
                            alg.rkt_operator(k, t.clone()).unwrap(),
                            alg.rkt_operator(m, &t + rat(k as i64)).unwrap(),
                        ]);
                        let rhs = alg.rkt_operator(k + m, t.clone()).unwrap();
                        for deg in 0..=12u32 {
                            assert_eq!(
                                alg.eigenvalue(&lhs, deg).unwrap(),
                                alg.eigenvalue(&rhs, deg).unwrap()
                            );
                        }
                    }
                }
            }
        }
        // R^0_t is the identity
        let alg = OpAlgebra::new(2);
        let r0 = alg.rkt_operator(0, rat(1)).unwrap();
        for deg in 0..10 {
            assert_eq!(alg.eigenvalue(&r0, deg).unwrap(), rat(1));
        }
        assert!(alg.rkt_operator(1, rat(0)).is_err());
    }

    #[test]
    fn kernel_shift_identity() {
        for mm in [rat(1), rat(3), ratq(5, 2)] {
            for k in 0..=5 {
                for m in 0..=20 {
                    assert!(kernel_shift_identity_holds(2, &mm, k, m));
                }
            }
        }
    }

    #[test]
    fn inverse_operator_round_trip() {
        let alg = OpAlgebra::new(2);
        let mut r = rng(5);
        for (nn, mm) in [(rat(1), rat(2)), (rat(2), rat(1)), (rat(0), ratq(-1, 2))] {
            let p = alg.bergman(nn.clone(), mm.clone()).unwrap();
            let t = alg.inverse_operator(nn.clone(), mm.clone()).unwrap();
            for _ in 0..5 {
                let f = random_polynomial(&mut r, 2, 8, 8);
                let tp = alg.apply(&t, &alg.apply(&p, &f).unwrap()).unwrap();
                let pt = alg.apply(&p, &alg.apply(&t, &f).unwrap()).unwrap();
                assert_eq!(tp, f);
                assert_eq!(pt, f);
            }
        }
        // T^{N,N} is the identity
        for k in 0..20 {
            let t = alg.inverse_operator(rat(4), rat(4)).unwrap();
            assert_eq!(alg.eigenvalue(&t, k).unwrap(), rat(1));
        }
        // eigenvalues of T^{1,2} at degree k are (n+1)_k/(n+2)_k
        let t12 = alg.inverse_operator(rat(1), rat(2)).unwrap();
        for k in 0..=10u32 {
            let expect = pochhammer(&rat(3), k) / pochhammer(&rat(4), k);
            assert_eq!(alg.eigenvalue(&t12, k).unwrap(), expect);
        }
    }

    #[test]
    fn expt_coefficient_identity() {
        let alg = OpAlgebra::new(2);
        // N=1, M=2, l=1: a_0 + a_1 = 1 and the reciprocal identity for k ≤ 30
        let (nn, mm, l) = (rat(1), rat(2), 1u32);
        let a = alg.expt_coefficients(&nn, &mm, l).unwrap();
        assert_eq!(a.iter().cloned().sum::<Rat>(), rat(1));
        for k in 0..=30u32 {
            let mut acc = Rat::zero();
            for (j, aj) in a.iter().enumerate() {
                acc += aj
                    * alg
                        .bergman_eigenvalue(&(&mm + rat(l as i64)), &(&nn + rat(j as i64)), k)
                        .unwrap();
            }
            let lambda = alg.bergman_eigenvalue(&nn, &mm, k).unwrap();
            assert_eq!(acc * lambda, rat(1));
        }
        // identity case N = M: coefficients reproduce eigenvalue 1
        let a = alg.expt_coefficients(&rat(2), &rat(2), 1).unwrap();
        for k in 0..=10u32 {
            let mut acc = Rat::zero();
            for (j, aj) in a.iter().enumerate() {
                acc += aj
                    * alg
                        .bergman_eigenvalue(&rat(3), &(rat(2) + rat(j as i64)), k)
                        .unwrap();
            }
            assert_eq!(acc, rat(1));
        }
        assert!(alg.expt_coefficients(&rat(1), &rat(2), 0).is_err());
    }

    #[test]
    fn intparts_identity_on_polynomials() {
        let alg = OpAlgebra::new(2);
        // k = m = 0 is trivially exact
        assert!(alg
            .intparts_residual(&rat(1), &rat(2), 0, 0, &Polynomial::one(2))
            .unwrap()
            .is_zero());
        let mut r = rng(17);
        for _ in 0..10 {
            let f = random_polynomial(&mut r, 2, 6, 8);
            let res = alg.intparts_residual(&rat(1), &rat(2), 1, 1, &f).unwrap();
            assert!(res.is_zero(), "nonzero intparts residual");
        }
    }

    #[test]
    fn rkvpn_identity() {
        let alg = OpAlgebra::new(2);
        // m=1: a_1 = M/(n+N), a_2 = (n+N−M)/(n+N)
        let a = alg.rkvpn_coefficients(&rat(1), &rat(3), 1).unwrap();
        assert_eq!(a[0], ratq(3, 3));
        assert_eq!(a[1], ratq(0, 1));
        let a = alg.rkvpn_coefficients(&rat(2), &rat(3), 1).unwrap();
        assert_eq!(a[0], ratq(3, 4));
        assert_eq!(a[1], ratq(1, 4));

        let mut r = rng(29);
        for _ in 0..8 {
            let h = random_polynomial(&mut r, 2, 7, 8);
            let res = alg.rkvpn_residual(&rat(1), &rat(3), 2, &h).unwrap();
            assert!(res.is_zero());
        }
        // h = 1: all eigenvalues are 1 at degree 0, identity trivially holds
        let res = alg.rkvpn_residual(&rat(1), &rat(3), 3, &Polynomial::one(2)).unwrap();
        assert!(res.is_zero());
    }

    #[test]
    fn semigroup_in_the_middle_index() {
        let alg = OpAlgebra::new(3);
        for nv in 1..=4i64 {
            for mv in 1..=4i64 {
                for lv in 1..=4i64 {
                    for k in 0..=30u32 {
                        let a = alg.bergman_eigenvalue(&rat(nv), &rat(mv), k).unwrap();
                        let b = alg.bergman_eigenvalue(&rat(mv), &rat(lv), k).unwrap();
                        let c = alg.bergman_eigenvalue(&rat(nv), &rat(lv), k).unwrap();
                        assert_eq!(a * b, c);
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalue_monotone_in_degree() {
        let alg = OpAlgebra::new(2);
        let incr = |nn: i64, mm: i64| {
            let mut prev = alg.bergman_eigenvalue(&rat(nn), &rat(mm), 0).unwrap();
            let mut up = true;
            let mut down = true;
            for k in 1..=30 {
                let v = alg.bergman_eigenvalue(&rat(nn), &rat(mm), k).unwrap();
                assert!(v > Rat::zero());
                up &= v > prev;
                down &= v < prev;
                prev = v;
            }
            (up, down)
        };
        assert_eq!(incr(1, 4), (true, false));
        assert_eq!(incr(4, 1), (false, true));
    }

    #[test]
    fn corruption_breaks_the_reproducing_identity() {
        let alg = OpAlgebra::with_corruption(
            2,
            Corruption {
                target: CorruptTarget::Eigenvalue,
                eps: ratq(1, 1_000_000),
            },
        );
        let p = alg.bergman(rat(1), rat(1)).unwrap();
        let f = Polynomial::var(2, 0);
        assert_ne!(alg.apply(&p, &f).unwrap(), f);

        let alg = OpAlgebra::with_corruption(
            2,
            Corruption {
                target: CorruptTarget::Coefficient,
                eps: ratq(1, 1_000_000),
            },
        );
        let a = alg.expt_coefficients(&rat(1), &rat(2), 1).unwrap();
        assert_ne!(a.iter().cloned().sum::<Rat>(), rat(1));
    }
}
