//! Holomorphic polynomials on ℂⁿ with exact rational complex coefficients.
//!
//! Multi-indices are ordered graded-lexicographically, which makes the JSON
//! serialization canonical. All arithmetic is exact; the identities asserted on this
//! layer hold as equality of coefficient maps, never up to a tolerance. Closed-form
//! monomial moments over the sphere and the weighted ball live here as well, since
//! everything downstream (eigenvalues, kernel expansions) reduces to them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One, Zero};
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{C64, Coeff, Error, Rat, Result};

/// Exponent vector of a monomial; length equals the ambient dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit vector monomial `z_j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// α! as an exact rational.
    pub fn factorial(&self) -> Rat {
        let mut acc = BigInt::one();
        for &e in &self.0 {
            acc *= factorial_big(e);
        }
        Rat::from_integer(acc)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise subtraction; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(MultiIndex(out))
    }

    /// All multi-indices of dimension `n` and total degree exactly `d`.
    pub fn of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, d);
        fn fill(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, left: u32) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in (0..=left).rev() {
                cur[pos] = v;
                fill(out, cur, pos + 1, left - v);
            }
        }
        out
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Graded lexicographic: degree first, then lexicographic on exponents.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial_big(k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k as u64 {
        acc *= i;
    }
    acc
}

pub fn factorial(k: u32) -> Rat {
    Rat::from_integer(factorial_big(k))
}

/// Pochhammer symbol (x)_k = x(x+1)⋯(x+k−1), exact for rational x.
pub fn pochhammer(x: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    let mut t = x.clone();
    for _ in 0..k {
        acc *= &t;
        t += Rat::one();
    }
    acc
}

pub fn rat(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn ratq(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn coeff_real(r: Rat) -> Coeff {
    Coeff::new(r, Rat::zero())
}

pub fn coeff_to_c64(c: &Coeff) -> C64 {
    C64::new(rat_to_f64(&c.re), rat_to_f64(&c.im))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // Scale down huge numerators/denominators before converting.
    let (num, den) = (r.numer(), r.denom());
    let bits = num.bits().max(den.bits());
    if bits <= 900 {
        num_to_f64(num) / num_to_f64(den)
    } else {
        let shift = bits - 900;
        num_to_f64(&(num >> shift)) / num_to_f64(&(den >> shift))
    }
}

fn num_to_f64(x: &BigInt) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Multivariate holomorphic polynomial; keys carry no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, Coeff>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Coeff) -> Self {
        let mut p = Polynomial::zero(n);
        p.insert(MultiIndex::zero(n), c);
        p
    }

    pub fn one(n: usize) -> Self {
        Polynomial::constant(n, Coeff::new(Rat::one(), Rat::zero()))
    }

    /// The coordinate monomial `z_j`.
    pub fn var(n: usize, j: usize) -> Self {
        let mut p = Polynomial::zero(n);
        p.insert(MultiIndex::unit(n, j), coeff_real(Rat::one()));
        p
    }

    pub fn monomial(n: usize, alpha: MultiIndex, c: Coeff) -> Self {
        assert_eq!(alpha.dim(), n);
        let mut p = Polynomial::zero(n);
        p.insert(alpha, c);
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Coeff {
        self.terms
            .get(alpha)
            .cloned()
            .unwrap_or_else(|| Coeff::new(Rat::zero(), Rat::zero()))
    }

    fn insert(&mut self, alpha: MultiIndex, c: Coeff) {
        if !c.is_zero() {
            self.terms.insert(alpha, c);
        }
    }

    /// Adds `c · z^α` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, alpha: MultiIndex, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(existing) => {
                *existing = existing.clone() + c;
                if existing.is_zero() {
                    self.terms.remove(&alpha);
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (a, c) in &self.terms {
            out.insert(a.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Coeff) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        if s.is_zero() {
            return out;
        }
        for (a, c) in &self.terms {
            out.insert(a.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn scale_rat(&self, s: &Rat) -> Polynomial {
        self.scale(&coeff_real(s.clone()))
    }

    /// Exact coefficient convolution.
    pub fn multiply(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::one(self.n);
        for _ in 0..k {
            out = out.multiply(self).expect("same dimension");
        }
        out
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    /// Splits into homogeneous parts, listed by increasing degree; empty for zero.
    pub fn homogeneous_parts(&self) -> Vec<(u32, Polynomial)> {
        let mut map: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (a, c) in &self.terms {
            map.entry(a.degree())
                .or_insert_with(|| Polynomial::zero(self.n))
                .insert(a.clone(), c.clone());
        }
        map.into_iter().collect()
    }

    /// Rescales each homogeneous part of degree k by `weight(k)`.
    pub fn map_homogeneous(&self, weight: impl Fn(u32) -> Rat) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (a, c) in &self.terms {
            let w = weight(a.degree());
            out.insert(a.clone(), c.clone() * coeff_real(w));
        }
        out
    }

    /// Radial derivative R: the degree-k part is multiplied by k.
    pub fn radial_derivative(&self) -> Polynomial {
        self.map_homogeneous(|k| rat(k as i64))
    }

    /// ∂^α f, exact.
    pub fn partial_derivative(&self, alpha: &MultiIndex) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        'term: for (beta, c) in &self.terms {
            let mut factor = Rat::one();
            let mut tgt = Vec::with_capacity(self.n);
            for j in 0..self.n {
                let (b, a) = (beta.0[j], alpha.0[j]);
                if b < a {
                    continue 'term;
                }
                // b(b-1)...(b-a+1)
                for i in 0..a {
                    factor *= rat((b - i) as i64);
                }
                tgt.push(b - a);
            }
            out.add_term(MultiIndex(tgt), c.clone() * coeff_real(factor));
        }
        out
    }

    /// The j-th differential along the radial field:
    /// d^j f(R,…,R)(w) = Σ_{|α|=j} (j!/α!) w^α ∂^α f(w).
    pub fn differential_form(&self, j: u32) -> Polynomial {
        if j == 0 {
            return self.clone();
        }
        let jfact = factorial(j);
        let mut out = Polynomial::zero(self.n);
        for alpha in MultiIndex::of_degree(self.n, j) {
            let d = self.partial_derivative(&alpha);
            if d.is_zero() {
                continue;
            }
            let coeff = &jfact / alpha.factorial();
            let shifted = Polynomial::monomial(self.n, alpha, coeff_real(coeff));
            out = out
                .add(&shifted.multiply(&d).expect("dims"))
                .expect("dims");
        }
        out
    }

    /// Evaluate at a floating point.
    pub fn eval(&self, z: &[C64]) -> C64 {
        assert_eq!(z.len(), self.n);
        let mut acc = C64::new(0.0, 0.0);
        for (a, c) in &self.terms {
            let mut m = C64::new(1.0, 0.0);
            for (j, &e) in a.0.iter().enumerate() {
                m *= z[j].powu(e);
            }
            acc += coeff_to_c64(c) * m;
        }
        acc
    }

    /// Evaluate at an exact complex rational point.
    pub fn eval_exact(&self, w: &[Coeff]) -> Coeff {
        assert_eq!(w.len(), self.n);
        let mut acc = Coeff::new(Rat::zero(), Rat::zero());
        for (a, c) in &self.terms {
            let mut m = Coeff::new(Rat::one(), Rat::zero());
            for (j, &e) in a.0.iter().enumerate() {
                for _ in 0..e {
                    m = m * w[j].clone();
                }
            }
            acc = acc + c.clone() * m;
        }
        acc
    }

    /// The k-th order Taylor polynomial of `f` at `w` (a point of the open ball
    /// with exact rational coordinates), as a polynomial in z:
    /// Σ_{j≤k} Σ_{|α|=j} ∂^α f(w)/α! · (z−w)^α.
    pub fn taylor_polynomial(&self, w: &[Coeff], k: u32) -> Result<Polynomial> {
        if w.len() != self.n {
            return Err(Error::DimensionMismatch(w.len(), self.n));
        }
        let norm2: Rat = w.iter().map(|c| c.norm_sqr()).sum();
        if norm2 >= Rat::one() {
            return Err(Error::InvalidParameter(
                "Taylor base point must lie in the open ball".into(),
            ));
        }
        let mut out = Polynomial::zero(self.n);
        for j in 0..=k {
            for alpha in MultiIndex::of_degree(self.n, j) {
                let val = self.partial_derivative(&alpha).eval_exact(w);
                if val.is_zero() {
                    continue;
                }
                let c = val * coeff_real(Rat::one() / alpha.factorial());
                let shifted = shifted_monomial(self.n, &alpha, w);
                out = out.add(&shifted.scale(&c))?;
            }
        }
        Ok(out)
    }
}

/// (z−w)^α expanded as an exact polynomial in z.
pub fn shifted_monomial(n: usize, alpha: &MultiIndex, w: &[Coeff]) -> Polynomial {
    let mut acc = Polynomial::one(n);
    for (j, &e) in alpha.0.iter().enumerate() {
        let lin = Polynomial::var(n, j)
            .add(&Polynomial::constant(n, -w[j].clone()))
            .expect("dims");
        for _ in 0..e {
            acc = acc.multiply(&lin).expect("dims");
        }
    }
    acc
}

/// ∫_{∂B} |ζ^α|² dσ = (n−1)! α! / (n−1+|α|)!, σ normalized.
pub fn monomial_moment_sphere(alpha: &MultiIndex) -> Rat {
    let n = alpha.dim() as u32;
    let d = alpha.degree();
    factorial(n - 1) * alpha.factorial() / factorial(n - 1 + d)
}

/// ∫_B |w^α|² (1−|w|²)^{N−1} dν (without the c_N normalization):
/// n·Γ(n+|α|)Γ(N)/Γ(n+N+|α|) · sphere moment, exact for rational N > 0.
pub fn monomial_moment_ball(alpha: &MultiIndex, nn: &Rat) -> Result<Rat> {
    if *nn <= Rat::zero() {
        return Err(Error::InvalidParameter(format!(
            "ball moment needs N > 0, got {nn}"
        )));
    }
    let n = alpha.dim() as u32;
    let d = alpha.degree();
    // Γ(N)/Γ(n+N+d) = 1/(N)_{n+d}
    let radial = rat(n as i64) * factorial(n + d - 1) / pochhammer(nn, n + d);
    Ok(radial * monomial_moment_sphere(alpha))
}

/// Random polynomial with small rational coefficients; reproducible from the RNG.
pub fn random_polynomial<R: Rng>(rng: &mut R, n: usize, max_deg: u32, terms: usize) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for _ in 0..terms {
        let d = rng.gen_range(0..=max_deg);
        let idx = {
            let all = MultiIndex::of_degree(n, d);
            all[rng.gen_range(0..all.len())].clone()
        };
        let re = ratq(rng.gen_range(-9..=9), rng.gen_range(1..=3));
        let im = ratq(rng.gen_range(-9..=9), rng.gen_range(1..=3));
        p.add_term(idx, Coeff::new(re, im));
    }
    p
}

/// Random point of the open ball with coordinates in (1/64)ℤ[i], norm ≤ `max_norm`.
pub fn random_rational_point<R: Rng>(rng: &mut R, n: usize, max_norm: f64) -> Vec<Coeff> {
    loop {
        let w: Vec<Coeff> = (0..n)
            .map(|_| {
                Coeff::new(
                    Rat::new(BigInt::from(rng.gen_range(-40i64..=40)), BigInt::from(64)),
                    Rat::new(BigInt::from(rng.gen_range(-40i64..=40)), BigInt::from(64)),
                )
            })
            .collect();
        let norm2: Rat = w.iter().map(|c| c.norm_sqr()).sum();
        if rat_to_f64(&norm2) <= max_norm * max_norm {
            return w;
        }
    }
}

// --- canonical JSON form -----------------------------------------------------

fn rat_to_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn rat_from_string(s: &str) -> Result<Rat> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator {num:?}")))?;
    let d: BigInt = den
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator {den:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rat::new(n, d))
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    alpha: Vec<u32>,
    re: String,
    im: String,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| TermRepr {
                    alpha: a.0.clone(),
                    re: rat_to_string(&c.re),
                    im: rat_to_string(&c.im),
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        let mut p = Polynomial::zero(repr.n);
        for t in repr.terms {
            if t.alpha.len() != repr.n {
                return Err(D::Error::custom("multi-index length != n"));
            }
            let re = rat_from_string(&t.re).map_err(D::Error::custom)?;
            let im = rat_from_string(&t.im).map_err(D::Error::custom)?;
            p.add_term(MultiIndex(t.alpha), Coeff::new(re, im));
        }
        Ok(p)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| format!("({}+{}i)·z^{}", c.re, c.im, a))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
