//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar function of
//! `num_vars` variables, expanded at a fixed point, for every multi-index of
//! total degree up to the jet's order. Coefficients are kept in
//! graded-lexicographic order so that truncating to a lower order is a prefix
//! slice. Arithmetic reproduces the Taylor expansion of the exact result and
//! silently drops every term beyond the order.
//!
//! Differentiating a jet (see [`Jet::partial`]) costs one order: the result
//! of differentiating an order-`k` jet is known exactly up to order `k - 1`.
//! The remaining order of every jet is tracked, so a long chain of
//! derivatives fails with [`JetError::InsufficientOrder`] instead of
//! producing truncated garbage.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("invalid jet context: {0}")]
    InvalidContext(String),
    #[error("variable index {index} out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("jet context mismatch: ({0}, {1}) vs ({2}, {3})")]
    ContextMismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero constant term")]
    DivisionByZero,
    #[error("{function} undefined at {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("need jet order {needed}, only {available} remaining")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("multi-index has {got} entries, expected {expected}")]
    MultiIndexLength { got: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, JetError>;

/// Precomputed index tables shared by all jets of one (num_vars, order).
struct Layout {
    num_vars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    /// `degree_end[d]` = number of monomials of total degree <= d.
    degree_end: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    /// (lhs, rhs, result) triples sorted by result degree.
    products: Vec<[u32; 3]>,
    product_end: Vec<usize>,
    /// For each variable and each target monomial `m` of degree < order:
    /// the source monomial `m + e_v` and the factor `(m_v + 1)`.
    derivatives: Vec<Vec<(u32, f64)>>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn monomials_of_degree(num_vars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == num_vars {
        prefix.push(degree as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first as u8);
        monomials_of_degree(num_vars, degree - first, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(num_vars: usize, order: usize) -> Self {
        let mut monomials = Vec::with_capacity(binomial(num_vars + order, order));
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            monomials_of_degree(num_vars, d, &mut Vec::new(), &mut monomials);
            degree_end.push(monomials.len());
        }
        let lookup: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let degree_of = |m: &[u8]| m.iter().map(|&e| e as usize).sum::<usize>();

        let mut products = Vec::new();
        let mut sum = vec![0u8; num_vars];
        for (i, a) in monomials.iter().enumerate() {
            let da = degree_of(a);
            for (j, b) in monomials[..degree_end[order - da]].iter().enumerate() {
                for v in 0..num_vars {
                    sum[v] = a[v] + b[v];
                }
                let k = lookup[&sum];
                products.push([i as u32, j as u32, k as u32]);
            }
        }
        products.sort_by_key(|t| degree_of(&monomials[t[2] as usize]));
        let mut product_end = vec![0; order + 1];
        for t in &products {
            product_end[degree_of(&monomials[t[2] as usize])] += 1;
        }
        for d in 1..=order {
            product_end[d] += product_end[d - 1];
        }

        let targets = degree_end[order - 1];
        let derivatives = (0..num_vars)
            .map(|v| {
                monomials[..targets]
                    .iter()
                    .map(|m| {
                        let mut src = m.clone();
                        src[v] += 1;
                        (lookup[&src] as u32, (m[v] as f64) + 1.0)
                    })
                    .collect()
            })
            .collect();

        Self {
            num_vars,
            order,
            monomials,
            degree_end,
            lookup,
            products,
            product_end,
            derivatives,
        }
    }
}

/// Number of variables and maximum total order of a family of jets.
#[derive(Clone)]
pub struct JetContext(Arc<Layout>);

impl PartialEq for JetContext {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.num_vars == other.0.num_vars && self.0.order == other.0.order)
    }
}

impl fmt::Debug for JetContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetContext")
            .field("num_vars", &self.0.num_vars)
            .field("order", &self.0.order)
            .finish()
    }
}

static LAYOUTS: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();

impl JetContext {
    /// Context over the `2n` chart variables `(x¹..xⁿ, y¹..yⁿ)`.
    pub fn new(num_vars: usize, order: usize) -> Result<Self> {
        if num_vars < 2 || num_vars % 2 != 0 {
            return Err(JetError::InvalidContext(format!(
                "chart contexts need an even number of variables >= 2, got {num_vars}"
            )));
        }
        Self::general(num_vars, order)
    }

    /// Context without the chart parity requirement, used for jets over a
    /// subset of the chart variables (e.g. volume densities in `x` only).
    pub fn general(num_vars: usize, order: usize) -> Result<Self> {
        if num_vars == 0 || num_vars > 64 {
            return Err(JetError::InvalidContext(format!("unsupported variable count {num_vars}")));
        }
        if order == 0 || order > 32 {
            return Err(JetError::InvalidContext(format!("unsupported jet order {order}")));
        }
        let cache = LAYOUTS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
        let layout = cache
            .entry((num_vars, order))
            .or_insert_with(|| Arc::new(Layout::build(num_vars, order)))
            .clone();
        Ok(Self(layout))
    }

    pub fn num_vars(&self) -> usize {
        self.0.num_vars
    }

    pub fn order(&self) -> usize {
        self.0.order
    }

    /// Total number of Taylor coefficients, `C(num_vars + order, order)`.
    pub fn len(&self) -> usize {
        self.0.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of coefficients of total degree at most `order`.
    pub fn len_up_to(&self, order: usize) -> usize {
        self.0.degree_end[order.min(self.0.order)]
    }

    /// Exponent vector of the `i`-th coefficient.
    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.0.monomials[i]
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.0.lookup.get(exponents).copied()
    }

    fn check(&self, other: &JetContext) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(JetError::ContextMismatch(
                self.0.num_vars,
                self.0.order,
                other.0.num_vars,
                other.0.order,
            ))
        }
    }
}

/// Elementary functions available to [`Jet::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sqrt,
    Exp,
    Log,
    Pow(f64),
    Sin,
    Cos,
}

/// Truncated Taylor expansion of a scalar function.
#[derive(Clone)]
pub struct Jet {
    ctx: JetContext,
    /// Coefficients of every monomial of degree <= `self.order()`.
    coeffs: Vec<f64>,
    order: usize,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(ctx: &JetContext, value: f64) -> Self {
        let mut coeffs = vec![0.0; ctx.len()];
        coeffs[0] = value;
        Self {
            ctx: ctx.clone(),
            coeffs,
            order: ctx.order(),
        }
    }

    pub fn zero(ctx: &JetContext) -> Self {
        Self::constant(ctx, 0.0)
    }

    /// The coordinate function of variable `var`, expanded at `value`.
    pub fn variable(ctx: &JetContext, var: usize, value: f64) -> Result<Self> {
        if var >= ctx.num_vars() {
            return Err(JetError::VariableOutOfRange {
                index: var,
                num_vars: ctx.num_vars(),
            });
        }
        let mut jet = Self::constant(ctx, value);
        let mut e = vec![0u8; ctx.num_vars()];
        e[var] = 1;
        let i = ctx.index_of(&e).expect("degree-one monomial present");
        jet.coeffs[i] = 1.0;
        Ok(jet)
    }

    /// Builds a jet from raw Taylor coefficients (graded-lex order).
    pub fn from_coeffs(ctx: &JetContext, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        let order = order.min(ctx.order());
        if coeffs.len() != ctx.len_up_to(order) {
            return Err(JetError::InvalidContext(format!(
                "{} coefficients supplied, order {order} needs {}",
                coeffs.len(),
                ctx.len_up_to(order)
            )));
        }
        Ok(Self {
            ctx: ctx.clone(),
            coeffs,
            order,
        })
    }

    pub fn context(&self) -> &JetContext {
        &self.ctx
    }

    /// Highest total degree whose coefficients are still exact.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Value of the represented function at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient of a monomial, `None` when beyond the jet's order.
    pub fn coefficient(&self, exponents: &[u8]) -> Option<f64> {
        let i = self.ctx.index_of(exponents)?;
        self.coeffs.get(i).copied()
    }

    /// Partial derivative at the expansion point for the given multi-index.
    pub fn derivative(&self, multi_index: &[usize]) -> Result<f64> {
        if multi_index.len() != self.ctx.num_vars() {
            return Err(JetError::MultiIndexLength {
                got: multi_index.len(),
                expected: self.ctx.num_vars(),
            });
        }
        let degree: usize = multi_index.iter().sum();
        if degree > self.order {
            return Err(JetError::InsufficientOrder {
                needed: degree,
                available: self.order,
            });
        }
        let exponents: Vec<u8> = multi_index.iter().map(|&e| e as u8).collect();
        let i = self.ctx.index_of(&exponents).expect("degree checked");
        let factorial = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
        Ok(self.coeffs[i] * multi_index.iter().map(|&e| factorial(e)).product::<f64>())
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Self {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs[..self.ctx.len_up_to(order)].to_vec(),
            order,
        }
    }

    /// Jet of `∂f/∂v`; one order is consumed.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        if var >= self.ctx.num_vars() {
            return Err(JetError::VariableOutOfRange {
                index: var,
                num_vars: self.ctx.num_vars(),
            });
        }
        if self.order == 0 {
            return Err(JetError::InsufficientOrder {
                needed: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let table = &self.ctx.0.derivatives[var][..self.ctx.len_up_to(order)];
        let coeffs = table
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Ok(Self {
            ctx: self.ctx.clone(),
            coeffs,
            order,
        })
    }

    /// Sets to zero every term that involves a variable for which `drop`
    /// returns true, i.e. freezes those variables at the expansion point.
    pub fn freeze(&self, drop: impl Fn(usize) -> bool) -> Jet {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let m = self.ctx.monomial(i);
            if m.iter().enumerate().any(|(v, &e)| e > 0 && drop(v)) {
                *c = 0.0;
            }
        }
        out
    }

    /// Re-expresses this jet in `target`, mapping variable `v` to
    /// `var_map[v]`. Orders are clipped to the target's order.
    pub fn embed(&self, target: &JetContext, var_map: &[usize]) -> Result<Jet> {
        if var_map.len() != self.ctx.num_vars() {
            return Err(JetError::MultiIndexLength {
                got: var_map.len(),
                expected: self.ctx.num_vars(),
            });
        }
        if let Some(&bad) = var_map.iter().find(|&&v| v >= target.num_vars()) {
            return Err(JetError::VariableOutOfRange {
                index: bad,
                num_vars: target.num_vars(),
            });
        }
        let order = self.order.min(target.order());
        let mut coeffs = vec![0.0; target.len_up_to(order)];
        let mut exps = vec![0u8; target.num_vars()];
        for (i, &c) in self.coeffs[..self.ctx.len_up_to(order)].iter().enumerate() {
            exps.iter_mut().for_each(|e| *e = 0);
            for (v, &e) in self.ctx.monomial(i).iter().enumerate() {
                exps[var_map[v]] += e;
            }
            let j = target.index_of(&exps).expect("degree preserved by embedding");
            coeffs[j] += c;
        }
        Ok(Self {
            ctx: target.clone(),
            coeffs,
            order,
        })
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.ctx.check(&other.ctx)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.ctx.check(&other.ctx)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.ctx.check(&other.ctx)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        self.ctx.check(&other.ctx)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order.min(other.order);
        let len = self.ctx.len_up_to(order);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(&a, &b)| f(a, b))
            .collect();
        Jet {
            ctx: self.ctx.clone(),
            coeffs,
            order,
        }
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let layout = &self.ctx.0;
        let mut coeffs = vec![0.0; layout.degree_end[order]];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &[i, j, k] in &layout.products[..layout.product_end[order]] {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            ctx: self.ctx.clone(),
            coeffs,
            order,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            order: self.order,
        }
    }

    /// Composes a univariate series `Σ c_k t^k` (expanded at this jet's
    /// value) with the non-constant part of this jet.
    fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let top = series.len().min(self.order + 1) - 1;
        let mut out = Jet::constant(&self.ctx, series[top]).truncate(self.order);
        for k in (0..top).rev() {
            out = out.mul_unchecked(&h);
            out.coeffs[0] += series[k];
        }
        out
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(JetError::DivisionByZero);
        }
        let mut series = Vec::with_capacity(self.order + 1);
        let mut term = 1.0 / a;
        for _ in 0..=self.order {
            series.push(term);
            term *= -1.0 / a;
        }
        Ok(self.compose(&series))
    }

    pub fn powf(&self, r: f64) -> Result<Jet> {
        self.power_series("pow", r)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.power_series("sqrt", 0.5)
    }

    fn power_series(&self, function: &'static str, r: f64) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(JetError::Domain { function, value: a });
        }
        let mut series = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                binom *= (r - (k as f64 - 1.0)) / k as f64;
            }
            series.push(binom * a.powf(r - k as f64));
        }
        Ok(self.compose(&series))
    }

    /// Integer power by repeated multiplication; no sign restriction on the
    /// base for non-negative exponents.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(&self.ctx, 1.0).truncate(self.order);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        Ok(result)
    }

    pub fn exp(&self) -> Jet {
        let a = self.value().exp();
        let mut series = Vec::with_capacity(self.order + 1);
        let mut term = a;
        for k in 0..=self.order {
            series.push(term);
            term /= (k + 1) as f64;
        }
        self.compose(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(JetError::Domain {
                function: "log",
                value: a,
            });
        }
        let series: Vec<f64> = (0..=self.order)
            .map(|k| match k {
                0 => a.ln(),
                _ => {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        Ok(self.compose(&series))
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    /// `shift` selects the starting phase: 0 for sin, 1 for cos.
    fn trig(&self, shift: usize) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut factorial = 1.0;
        let series: Vec<f64> = (0..=self.order)
            .map(|k| {
                if k > 0 {
                    factorial *= k as f64;
                }
                cycle[(k + shift) % 4] / factorial
            })
            .collect();
        self.compose(&series)
    }

    pub fn apply(&self, f: Elementary) -> Result<Jet> {
        match f {
            Elementary::Sqrt => self.sqrt(),
            Elementary::Exp => Ok(self.exp()),
            Elementary::Log => self.ln(),
            Elementary::Pow(r) => self.powf(r),
            Elementary::Sin => Ok(self.sin()),
            Elementary::Cos => Ok(self.cos()),
        }
    }
}

fn expect_same(a: &Jet, b: &Jet) {
    if let Err(e) = a.ctx.check(&b.ctx) {
        panic!("{e}");
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $f:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                expect_same(self, rhs);
                $f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binary_op!(Add, add, |a: &Jet, b: &Jet| a.zip(b, |x, y| x + y));
binary_op!(Sub, sub, |a: &Jet, b: &Jet| a.zip(b, |x, y| x - y));
binary_op!(Mul, mul, |a: &Jet, b: &Jet| a.mul_unchecked(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
