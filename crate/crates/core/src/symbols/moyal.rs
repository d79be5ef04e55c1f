//! Exact Moyal products of phase-space polynomials.
//!
//! This is a brute-force verification oracle: polynomials carry exact
//! complex-rational coefficients and `hbar` as a formal (Laurent) variable,
//! and the star product is expanded term by term until the series stops.
//! No performance goals.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// Exact complex rational `re + i im`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexRational {
    pub re: Rational,
    pub im: Rational,
}

impl ComplexRational {
    pub fn real(re: Rational) -> Self {
        Self { re, im: Rational::zero() }
    }

    pub fn from_int(v: i128) -> Self {
        Self::real(Rational::from_integer(v))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }

    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    fn scale(self, s: Rational) -> Self {
        Self { re: self.re * s, im: self.im * s }
    }

    /// Multiplies by `i^k`.
    fn rotate(self, k: usize) -> Self {
        match k % 4 {
            0 => self,
            1 => Self { re: -self.im, im: self.re },
            2 => Self { re: -self.re, im: -self.im },
            _ => Self { re: self.im, im: -self.re },
        }
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

/// Exponents of `(p_1..p_d, q_1..q_d)` plus the power of `hbar`.
type Key = (Vec<u32>, i32);

/// Polynomial in phase-space coordinates with Laurent dependence on `hbar`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    dof: usize,
    terms: BTreeMap<Key, ComplexRational>,
}

impl Polynomial {
    pub fn zero(dof: usize) -> Self {
        Self { dof, terms: BTreeMap::new() }
    }

    pub fn constant(dof: usize, c: Rational) -> Self {
        Self::zero(dof).plus_term(&vec![0; 2 * dof], 0, ComplexRational::real(c))
    }

    /// Single monomial `c hbar^h prod x_k^{e_k}`.
    pub fn monomial(dof: usize, exps: &[u32], hbar_power: i32, c: Rational) -> Self {
        assert_eq!(exps.len(), 2 * dof);
        Self::zero(dof).plus_term(exps, hbar_power, ComplexRational::real(c))
    }

    /// Coordinate `x_k` (momenta first).
    pub fn coordinate(dof: usize, k: usize) -> Self {
        let mut e = vec![0; 2 * dof];
        e[k] = 1;
        Self::monomial(dof, &e, 0, Rational::one())
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &ComplexRational)> {
        self.terms.iter()
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im.is_zero())
    }

    /// Highest exponent of coordinate `k` over all terms.
    fn max_exponent(&self, k: usize) -> u32 {
        self.terms.keys().map(|(e, _)| e[k]).max().unwrap_or(0)
    }

    fn plus_term(mut self, exps: &[u32], h: i32, c: ComplexRational) -> Self {
        self.add_term(exps.to_vec(), h, c);
        self
    }

    fn add_term(&mut self, exps: Vec<u32>, h: i32, c: ComplexRational) {
        if c.is_zero() {
            return;
        }
        let key = (exps, h);
        let sum = self.terms.get(&key).copied().unwrap_or(ComplexRational::from_int(0)).add(c);
        if sum.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, sum);
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dof, other.dof);
        let mut out = self.clone();
        for ((e, h), c) in &other.terms {
            out.add_term(e.clone(), *h, *c);
        }
        out
    }

    pub fn scale(&self, s: Rational) -> Polynomial {
        let mut out = Polynomial::zero(self.dof);
        for ((e, h), c) in &self.terms {
            out.add_term(e.clone(), *h, c.scale(s));
        }
        out
    }

    /// Multiplies by `hbar^k`.
    pub fn times_hbar(&self, k: i32) -> Polynomial {
        Polynomial { dof: self.dof, terms: self.terms.iter().map(|((e, h), c)| ((e.clone(), h + k), *c)).collect() }
    }

    /// Ordinary (commutative) product.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dof, other.dof);
        let mut out = Polynomial::zero(self.dof);
        for ((ea, ha), ca) in &self.terms {
            for ((eb, hb), cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ha + hb, ca.mul(*cb));
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dof, Rational::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// `d^order / d x_k^order`.
    pub fn derivative(&self, k: usize, order: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.dof);
        for ((e, h), c) in &self.terms {
            if e[k] < order {
                continue;
            }
            let falling: i128 = (0..order).map(|i| (e[k] - i) as i128).product();
            let mut e2 = e.clone();
            e2[k] -= order;
            out.add_term(e2, *h, c.scale(Rational::from_integer(falling)));
        }
        out
    }

    pub fn eval(&self, x: &[f64], hbar: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|((e, h), c)| {
                let mono: f64 = e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>() * hbar.powi(*h);
                c.to_complex() * mono
            })
            .sum()
    }

    /// Largest absolute coefficient magnitude, as a sanity bound for overflow.
    pub fn max_coefficient(&self) -> Rational {
        self.terms.values().map(|c| c.re.abs().max(c.im.abs())).max().unwrap_or_else(Rational::zero)
    }
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

/// One factor of the bidifferential expansion for a single degree of freedom.
struct PairTerm {
    /// derivative orders applied to A: (d/dp, d/dq)
    a: (u32, u32),
    /// derivative orders applied to B: (d/dp, d/dq)
    b: (u32, u32),
    order: usize,
    coeff: Rational,
}

/// Symbol of the operator product `A B`:
/// `A exp[(i hbar / 2)(<-d_q ->d_p - <-d_p ->d_q)] B`, summed until the
/// derivatives vanish.
pub fn moyal_product(a: &Polynomial, b: &Polynomial) -> Polynomial {
    assert_eq!(a.dof, b.dof);
    let d = a.dof;
    let per_dof: Vec<Vec<PairTerm>> = (0..d)
        .map(|j| {
            let kmax = (a.max_exponent(j) + a.max_exponent(d + j)).min(b.max_exponent(j) + b.max_exponent(d + j));
            let mut terms = Vec::new();
            for k in 0..=kmax {
                for m in 0..=k {
                    // (<-d_q ->d_p)^(k-m) (-<-d_p ->d_q)^m
                    let sign = if m % 2 == 0 { 1 } else { -1 };
                    let coeff = Rational::new(sign * binomial(k, m), factorial(k) * (1i128 << k));
                    terms.push(PairTerm { a: (m, k - m), b: (k - m, m), order: k as usize, coeff });
                }
            }
            terms
        })
        .collect();

    let mut out = Polynomial::zero(d);
    let mut index = vec![0usize; d];
    loop {
        let mut da = a.clone();
        let mut db = b.clone();
        let mut coeff = Rational::one();
        let mut order = 0usize;
        for j in 0..d {
            let t = &per_dof[j][index[j]];
            da = da.derivative(j, t.a.0).derivative(d + j, t.a.1);
            db = db.derivative(j, t.b.0).derivative(d + j, t.b.1);
            coeff *= t.coeff;
            order += t.order;
        }
        if !da.terms.is_empty() && !db.terms.is_empty() {
            let prod = da.mul(&db).times_hbar(order as i32);
            for ((e, h), c) in prod.terms {
                out.add_term(e, h, c.scale(coeff).rotate(order));
            }
        }
        // odometer over the per-dof term lists
        let mut j = 0;
        loop {
            if j == d {
                return out;
            }
            index[j] += 1;
            if index[j] < per_dof[j].len() {
                break;
            }
            index[j] = 0;
            j += 1;
        }
    }
}

/// `p^2 + q^2` for one degree of freedom.
pub fn radial_square() -> Polynomial {
    Polynomial::monomial(1, &[2, 0], 0, Rational::one()).add(&Polynomial::monomial(1, &[0, 2], 0, Rational::one()))
}

/// Expands `sum_k a_k hbar^(n-k) (p^2+q^2)^k` into monomials.
pub fn expand_radial(integer_coeffs: &[i128], n: usize) -> Polynomial {
    let o = radial_square();
    let mut out = Polynomial::zero(1);
    for (k, &a) in integer_coeffs.iter().enumerate() {
        if a != 0 {
            out = out.add(&o.pow(k as u32).scale(Rational::from_integer(a)).times_hbar((n - k) as i32));
        }
    }
    out
}
