//! Truncated multivariate power series and Laurent expansions in `u⁻¹`.
//!
//! A [`TruncSeries`] of order `N` knows every coefficient of total degree
//! `< N`. Arithmetic results carry the smallest order of their operands;
//! exact division by a linear form costs one order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::fields::{FieldDescriptor, FieldElement, FieldError};

/// Largest number of variables a series may carry.
pub const MAX_VARS: usize = 4;

/// Exponent vector; entries past the variable count are zero.
pub type Exp = [u8; MAX_VARS];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series live over different variables, fields or truncations")]
    ContextMismatch,
    #[error("series has zero constant term and is not invertible")]
    NotAUnit,
    #[error("branch constant squared does not match the constant term")]
    BranchMismatch,
    #[error("substituted series must have zero constant term")]
    NonNilpotentSubstitution,
    #[error("inexact division: remainder has coefficient {coefficient} at {exponent:?}")]
    DivisibilityFailure { exponent: Vec<u32>, coefficient: String },
    #[error("coefficient u^{0} lies below the truncation horizon")]
    InsufficientOrder(i64),
    #[error("at most {MAX_VARS} variables are supported")]
    TooManyVariables,
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub type SeriesResult<T> = Result<T, SeriesError>;

fn degree(e: &Exp) -> u32 {
    e.iter().map(|&x| x as u32).sum()
}

fn add_exp(a: &Exp, b: &Exp) -> Exp {
    let mut c = [0u8; MAX_VARS];
    for k in 0..MAX_VARS {
        c[k] = a[k] + b[k];
    }
    c
}

/// Shared variable list.
pub type Vars = Arc<Vec<String>>;

/// Build a variable list from names.
pub fn vars(names: &[&str]) -> Vars {
    assert!(names.len() <= MAX_VARS, "too many variables");
    Arc::new(names.iter().map(|s| s.to_string()).collect())
}

/// A power series known modulo total degree `order`.
#[derive(Clone)]
pub struct TruncSeries {
    field: Arc<FieldDescriptor>,
    vars: Vars,
    order: u32,
    terms: BTreeMap<Exp, FieldElement>,
}

impl TruncSeries {
    pub fn zero(field: &Arc<FieldDescriptor>, vars: &Vars, order: u32) -> Self {
        TruncSeries { field: field.clone(), vars: vars.clone(), order, terms: BTreeMap::new() }
    }

    pub fn constant(c: &FieldElement, vars: &Vars, order: u32) -> Self {
        let mut s = Self::zero(c.field(), vars, order);
        s.add_term([0; MAX_VARS], c.clone());
        s
    }

    pub fn one(field: &Arc<FieldDescriptor>, vars: &Vars, order: u32) -> Self {
        Self::constant(&field.one(), vars, order)
    }

    /// The variable with index `k`.
    pub fn var(field: &Arc<FieldDescriptor>, vars: &Vars, k: usize, order: u32) -> Self {
        Self::monomial(&field.one(), vars, &unit_exp(k), order)
    }

    pub fn monomial(c: &FieldElement, vars: &Vars, e: &Exp, order: u32) -> Self {
        let mut s = Self::zero(c.field(), vars, order);
        s.add_term(*e, c.clone());
        s
    }

    /// The linear form `Σ c_k z_k + c_0`, with `lin[k]` the coefficient of
    /// variable `k`.
    pub fn linear(c0: &FieldElement, lin: &[FieldElement], vars: &Vars, order: u32) -> Self {
        let mut s = Self::constant(c0, vars, order);
        for (k, c) in lin.iter().enumerate() {
            s.add_term(unit_exp(k), c.clone());
        }
        s
    }

    pub fn field(&self) -> &Arc<FieldDescriptor> {
        &self.field
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &FieldElement)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Add `c·z^e`, dropping it if its degree reaches the order.
    pub fn add_term(&mut self, e: Exp, c: FieldElement) {
        if c.is_zero() || degree(&e) >= self.order {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn coeff(&self, e: &Exp) -> FieldElement {
        self.terms.get(e).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn constant_term(&self) -> FieldElement {
        self.coeff(&[0; MAX_VARS])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest-degree nonzero term (ties broken by exponent order).
    pub fn first_nonzero(&self) -> Option<(Vec<u32>, FieldElement)> {
        self.terms
            .iter()
            .min_by_key(|(e, _)| (degree(e), **e))
            .map(|(e, c)| (e[..self.nvars()].iter().map(|&x| x as u32).collect(), c.clone()))
    }

    /// Largest total degree present (None for the zero series).
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(degree).max()
    }

    /// Drop every term of degree ≥ `order`.
    pub fn truncate(&self, order: u32) -> Self {
        let order = order.min(self.order);
        let terms = self.terms.iter().filter(|(e, _)| degree(e) < order).map(|(e, c)| (*e, c.clone())).collect();
        TruncSeries { field: self.field.clone(), vars: self.vars.clone(), order, terms }
    }

    /// Raise the nominal order; only sound for series that are exact polynomials.
    pub fn with_order(&self, order: u32) -> Self {
        let mut s = self.clone();
        s.order = order;
        s.terms.retain(|e, _| degree(e) < order);
        s
    }

    fn check(&self, other: &Self) -> SeriesResult<()> {
        let same_vars = Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars;
        let same_field = Arc::ptr_eq(&self.field, &other.field) || self.field == other.field;
        if same_vars && same_field {
            Ok(())
        } else {
            Err(SeriesError::ContextMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> SeriesResult<Self> {
        self.check(other)?;
        let mut out = self.truncate(self.order.min(other.order));
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> SeriesResult<Self> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c)
    }

    pub fn scale(&self, k: &FieldElement) -> Self {
        if k.is_zero() {
            return Self::zero(&self.field, &self.vars, self.order);
        }
        self.map_coeffs(|c| c * k)
    }

    fn map_coeffs(&self, f: impl Fn(&FieldElement) -> FieldElement) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (*e, f(c))).collect();
        TruncSeries { field: self.field.clone(), vars: self.vars.clone(), order: self.order, terms }
    }

    pub fn try_mul(&self, other: &Self) -> SeriesResult<Self> {
        self.check(other)?;
        let order = self.order.min(other.order);
        let mut out = Self::zero(&self.field, &self.vars, order);
        let mut rhs: Vec<(u32, &Exp, &FieldElement)> = other.terms.iter().map(|(e, c)| (degree(e), e, c)).collect();
        rhs.sort_by_key(|t| t.0);
        for (e1, c1) in &self.terms {
            let d1 = degree(e1);
            for (d2, e2, c2) in &rhs {
                if d1 + d2 >= order {
                    break;
                }
                out.add_term(add_exp(e1, e2), c1 * c2);
            }
        }
        Ok(out)
    }

    /// Sum of the terms of total degree `d`.
    fn homogeneous(&self, d: u32) -> Vec<(Exp, FieldElement)> {
        self.terms.iter().filter(|(e, _)| degree(e) == d).map(|(e, c)| (*e, c.clone())).collect()
    }

    fn by_degree(&self) -> Vec<Vec<(Exp, FieldElement)>> {
        let mut v = vec![Vec::new(); self.order as usize];
        for (e, c) in &self.terms {
            v[degree(e) as usize].push((*e, c.clone()));
        }
        v
    }

    /// Multiplicative inverse of a unit series.
    pub fn inv(&self) -> SeriesResult<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(SeriesError::NotAUnit);
        }
        let c0inv = c0.inv()?;
        let f = self.by_degree();
        let mut g: Vec<Vec<(Exp, FieldElement)>> = vec![vec![([0; MAX_VARS], c0inv.clone())]];
        for d in 1..self.order as usize {
            let mut acc = Self::zero(&self.field, &self.vars, self.order);
            for k in 1..=d {
                for (e1, c1) in &f[k] {
                    for (e2, c2) in &g[d - k] {
                        acc.add_term(add_exp(e1, e2), c1 * c2);
                    }
                }
            }
            let minus = -&c0inv;
            g.push(acc.terms.into_iter().map(|(e, c)| (e, &c * &minus)).collect());
        }
        let mut out = Self::zero(&self.field, &self.vars, self.order);
        for (e, c) in g.into_iter().flatten() {
            out.add_term(e, c);
        }
        Ok(out)
    }

    pub fn try_div(&self, other: &Self) -> SeriesResult<Self> {
        self.try_mul(&other.inv()?)
    }

    /// The square root with constant term `c0`.
    pub fn sqrt_branch(&self, c0: &FieldElement) -> SeriesResult<Self> {
        let f0 = self.constant_term();
        if f0.is_zero() {
            return Err(SeriesError::NotAUnit);
        }
        if &(c0 * c0) != &f0 {
            return Err(SeriesError::BranchMismatch);
        }
        let inv2c = (c0 + c0).inv()?;
        let mut g: Vec<Vec<(Exp, FieldElement)>> = vec![vec![([0; MAX_VARS], c0.clone())]];
        for d in 1..self.order as usize {
            let mut acc = Self::zero(&self.field, &self.vars, self.order);
            for (e, c) in self.homogeneous(d as u32) {
                acc.add_term(e, c);
            }
            for k in 1..d {
                for (e1, c1) in &g[k] {
                    for (e2, c2) in &g[d - k] {
                        acc.add_term(add_exp(e1, e2), -(c1 * c2));
                    }
                }
            }
            g.push(acc.terms.into_iter().map(|(e, c)| (e, &c * &inv2c)).collect());
        }
        let mut out = Self::zero(&self.field, &self.vars, self.order);
        for (e, c) in g.into_iter().flatten() {
            out.add_term(e, c);
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Self::one(&self.field, &self.vars, self.order);
        for _ in 0..k {
            r = r.try_mul(self).expect("same context");
        }
        r
    }

    /// Re-index variables: variable `v` becomes `±` variable `map[v].0` of
    /// `target` (negated when `map[v].1`). Several variables may share a target.
    pub fn remap(&self, target: &Vars, map: &[(usize, bool)]) -> Self {
        let mut out = Self::zero(&self.field, target, self.order);
        for (e, c) in &self.terms {
            let mut ne = [0u8; MAX_VARS];
            let mut neg = false;
            for v in 0..self.nvars() {
                let (t, s) = map[v];
                ne[t] += e[v];
                neg ^= s && e[v] % 2 == 1;
            }
            out.add_term(ne, if neg { -c } else { c.clone() });
        }
        out
    }

    /// Substitute `v ↦ −v`.
    pub fn neg_var(&self, v: usize) -> Self {
        let map: Vec<_> = (0..self.nvars()).map(|k| (k, k == v)).collect();
        self.remap(&self.vars, &map)
    }

    /// Exchange variables `a` and `b`.
    pub fn swap_vars(&self, a: usize, b: usize) -> Self {
        let map: Vec<_> = (0..self.nvars()).map(|k| (if k == a { b } else if k == b { a } else { k }, false)).collect();
        self.remap(&self.vars, &map)
    }

    /// Compose: variable `v` of `self` is replaced by `assign[v]`, a series
    /// without constant term over a common target variable list.
    pub fn subst(&self, assign: &[TruncSeries]) -> SeriesResult<Self> {
        assert_eq!(assign.len(), self.nvars(), "one assignment per variable");
        let first = assign.first().ok_or(SeriesError::ContextMismatch)?;
        for a in assign {
            first.check(a)?;
            if !a.constant_term().is_zero() {
                return Err(SeriesError::NonNilpotentSubstitution);
            }
        }
        let order = assign.iter().map(|a| a.order).min().unwrap().min(self.order);
        let assign: Vec<TruncSeries> = assign.iter().map(|a| a.truncate(order)).collect();
        let mut powers: Vec<Vec<TruncSeries>> = Vec::new();
        for (v, a) in assign.iter().enumerate() {
            let maxe = self.terms.keys().map(|e| e[v]).max().unwrap_or(0) as usize;
            let mut p = vec![TruncSeries::one(&self.field, &a.vars, order)];
            for k in 1..=maxe.min(order as usize) {
                let next = p[k - 1].try_mul(a)?;
                p.push(next);
            }
            powers.push(p);
        }
        let terms: Vec<(Exp, FieldElement)> =
            self.terms.iter().filter(|(e, _)| degree(e) < order).map(|(e, c)| (*e, c.clone())).collect();
        let zero = TruncSeries::zero(&self.field, &first.vars, order);
        horner(&terms, 0, &powers, &zero)
    }

    /// Embed into a larger variable list, variable `v` going to `positions[v]`.
    pub fn embed(&self, target: &Vars, positions: &[usize]) -> Self {
        let map: Vec<_> = positions.iter().map(|&p| (p, false)).collect();
        self.remap(target, &map)
    }

    /// Exact division by the linear form `Σ lin[k]·z_k`. Costs one order.
    pub fn div_exact_linear(&self, lin: &[FieldElement]) -> SeriesResult<Self> {
        let pivot = lin.iter().position(|c| !c.is_zero()).ok_or(SeriesError::NotAUnit)?;
        let cinv = lin[pivot].inv()?;
        let order = self.order.saturating_sub(1);
        let mut rem = self.terms.clone();
        let mut q = Self::zero(&self.field, &self.vars, order);
        loop {
            // Term with the largest pivot exponent (then largest key).
            let next = rem.iter().filter(|(e, _)| e[pivot] > 0).max_by_key(|(e, _)| (e[pivot], **e)).map(|(e, c)| (*e, c.clone()));
            let Some((e, c)) = next else { break };
            let mut qe = e;
            qe[pivot] -= 1;
            let qc = &c * &cinv;
            for (k, l) in lin.iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                let mut te = qe;
                te[k] += 1;
                let val = rem.get(&te).cloned().unwrap_or_else(|| self.field.zero()) - (&qc * l);
                if val.is_zero() {
                    rem.remove(&te);
                } else {
                    rem.insert(te, val);
                }
            }
            q.add_term(qe, qc);
        }
        if let Some((e, c)) = rem.iter().min_by_key(|(e, _)| (degree(e), **e)) {
            return Err(SeriesError::DivisibilityFailure {
                exponent: e[..self.nvars()].iter().map(|&x| x as u32).collect(),
                coefficient: c.to_string(),
            });
        }
        Ok(q)
    }

    /// Exact division by `z_v^k`. Costs `k` orders.
    pub fn div_var_power(&self, v: usize, k: u8) -> SeriesResult<Self> {
        let order = self.order.saturating_sub(k as u32);
        let mut q = Self::zero(&self.field, &self.vars, order);
        for (e, c) in &self.terms {
            if e[v] < k {
                return Err(SeriesError::DivisibilityFailure {
                    exponent: e[..self.nvars()].iter().map(|&x| x as u32).collect(),
                    coefficient: c.to_string(),
                });
            }
            let mut ne = *e;
            ne[v] -= k;
            q.add_term(ne, c.clone());
        }
        Ok(q)
    }

    /// Demazure operator (f(x,y) − f(y,x))/(x − y) on variables `x`, `y`.
    pub fn demazure(&self, x: usize, y: usize) -> SeriesResult<Self> {
        let diff = self.try_sub(&self.swap_vars(x, y))?;
        let mut lin = vec![self.field.zero(); self.nvars()];
        lin[x] = self.field.one();
        lin[y] = -self.field.one();
        diff.div_exact_linear(&lin)
    }

    /// Evaluate every variable at a field element (only meaningful for polynomials).
    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        let mut acc = self.field.zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, x) in point.iter().enumerate() {
                t = &t * &x.pow(e[v] as u32);
            }
            acc = &acc + &t;
        }
        acc
    }
}

fn unit_exp(k: usize) -> Exp {
    let mut e = [0u8; MAX_VARS];
    e[k] = 1;
    e
}

/// Σ_terms c·Π_{w≥v} powers[w][e_w], grouped by the exponent of variable `v`.
fn horner(
    terms: &[(Exp, FieldElement)],
    v: usize,
    powers: &[Vec<TruncSeries>],
    zero: &TruncSeries,
) -> SeriesResult<TruncSeries> {
    if v == powers.len() {
        let mut s = zero.clone();
        for (_, c) in terms {
            s.add_term([0; MAX_VARS], c.clone());
        }
        return Ok(s);
    }
    let mut groups: BTreeMap<u8, Vec<(Exp, FieldElement)>> = BTreeMap::new();
    for (e, c) in terms {
        groups.entry(e[v]).or_default().push((*e, c.clone()));
    }
    let mut out = zero.clone();
    for (k, group) in groups {
        if k as usize >= powers[v].len() {
            continue;
        }
        let inner = horner(&group, v + 1, powers, zero)?;
        let term = if k == 0 { inner } else { powers[v][k as usize].try_mul(&inner)? };
        out = out.try_add(&term)?;
    }
    Ok(out)
}

impl PartialEq for TruncSeries {
    /// Equality modulo the smaller of the two orders.
    fn eq(&self, other: &Self) -> bool {
        match self.try_sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (e, c) in &self.terms {
            let mono: Vec<String> = (0..self.nvars())
                .filter(|&v| e[v] > 0)
                .map(|v| if e[v] == 1 { self.vars[v].clone() } else { format!("{}^{}", self.vars[v], e[v]) })
                .collect();
            if mono.is_empty() {
                parts.push(format!("({c})"));
            } else {
                parts.push(format!("({c})·{}", mono.join("·")));
            }
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        write!(f, "{} + O(deg {})", parts.join(" + "), self.order)
    }
}

macro_rules! series_op {
    ($tr:ident $m:ident $call:ident) => {
        impl<'a> std::ops::$tr<&'a TruncSeries> for &'a TruncSeries {
            type Output = TruncSeries;
            fn $m(self, rhs: &'a TruncSeries) -> TruncSeries {
                self.$call(rhs).expect("series context mismatch")
            }
        }
        impl std::ops::$tr<TruncSeries> for TruncSeries {
            type Output = TruncSeries;
            fn $m(self, rhs: TruncSeries) -> TruncSeries {
                (&self).$call(&rhs).expect("series context mismatch")
            }
        }
        impl<'a> std::ops::$tr<&'a TruncSeries> for TruncSeries {
            type Output = TruncSeries;
            fn $m(self, rhs: &'a TruncSeries) -> TruncSeries {
                (&self).$call(rhs).expect("series context mismatch")
            }
        }
    };
}
series_op!(Add add try_add);
series_op!(Sub sub try_sub);
series_op!(Mul mul try_mul);

impl std::ops::Neg for &TruncSeries {
    type Output = TruncSeries;
    fn neg(self) -> TruncSeries {
        TruncSeries::neg(self)
    }
}

impl std::ops::Neg for TruncSeries {
    type Output = TruncSeries;
    fn neg(self) -> TruncSeries {
        TruncSeries::neg(&self)
    }
}

/// A Laurent expansion in `u⁻¹` whose coefficients are series in other
/// variables: `Σ_{r ≤ top} c_r u^r`, known for `r ≥ horizon`.
#[derive(Clone, Debug)]
pub struct LaurentU {
    top: i64,
    horizon: i64,
    coeffs: Vec<TruncSeries>,
}

impl LaurentU {
    /// Expand `num(u)/den(u)` (coefficient lists, index = power of u) down
    /// to `u^horizon`. The leading coefficient of `den` must be a unit.
    pub fn from_ratio(num: &[TruncSeries], den: &[TruncSeries], horizon: i64) -> SeriesResult<Self> {
        let dd = den.iter().rposition(|c| !c.is_zero()).ok_or(SeriesError::NotAUnit)?;
        let lead_inv = den[dd].inv()?;
        let zero = den[dd].truncate(den[dd].order()).scale(&den[dd].field().zero());
        let dn = match num.iter().rposition(|c| !c.is_zero()) {
            Some(d) => d as i64,
            None => return Ok(LaurentU { top: horizon, horizon, coeffs: vec![zero] }),
        };
        let top = dn - dd as i64;
        let mut coeffs: Vec<TruncSeries> = Vec::new();
        let mut k = 0i64;
        while top - k >= horizon {
            let mut c = if dn - k >= 0 { num[(dn - k) as usize].clone() } else { zero.clone() };
            for l in 1..=(k.min(dd as i64)) {
                c = c.try_sub(&den[dd - l as usize].try_mul(&coeffs[(k - l) as usize])?)?;
            }
            coeffs.push(c.try_mul(&lead_inv)?);
            k += 1;
        }
        Ok(LaurentU { top, horizon, coeffs })
    }

    /// Coefficient of `u^r`.
    pub fn coeff(&self, r: i64) -> SeriesResult<TruncSeries> {
        if r < self.horizon {
            return Err(SeriesError::InsufficientOrder(r));
        }
        let any = &self.coeffs[0];
        if r > self.top {
            return Ok(any.scale(&any.field().zero()));
        }
        Ok(self.coeffs[(self.top - r) as usize].clone())
    }

    /// Scalar coefficient of `u^r` when coefficients carry no variables.
    pub fn coeff_scalar(&self, r: i64) -> SeriesResult<FieldElement> {
        Ok(self.coeff(r)?.constant_term())
    }

    pub fn top(&self) -> i64 {
        self.top
    }

    pub fn horizon(&self) -> i64 {
        self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q() -> Arc<FieldDescriptor> {
        FieldDescriptor::rationals()
    }

    fn poly(field: &Arc<FieldDescriptor>, v: &Vars, order: u32, terms: &[(&[u8], i64, i64)]) -> TruncSeries {
        let mut s = TruncSeries::zero(field, v, order);
        for (e, n, d) in terms {
            let mut ex = [0u8; MAX_VARS];
            ex[..e.len()].copy_from_slice(e);
            s.add_term(ex, field.from_ratio(*n, *d));
        }
        s
    }

    #[test]
    fn ring_examples() {
        let f = q();
        let v = vars(&["z"]);
        let a = poly(&f, &v, 5, &[(&[0], 1, 1), (&[1], 1, 1)]);
        let b = poly(&f, &v, 5, &[(&[0], 1, 1), (&[1], -1, 1)]);
        assert_eq!(&a * &b, poly(&f, &v, 5, &[(&[0], 1, 1), (&[2], -1, 1)]));
        assert_eq!(a.neg_var(0).neg_var(0), a);
        let v2 = vars(&["x", "y"]);
        let s = poly(&f, &v2, 5, &[(&[1, 0], 1, 1), (&[0, 1], 1, 1)]);
        assert_eq!(&s * &s, poly(&f, &v2, 5, &[(&[2, 0], 1, 1), (&[1, 1], 2, 1), (&[0, 2], 1, 1)]));
    }

    #[test]
    fn inverse_examples() {
        let f = q();
        let v = vars(&["z"]);
        let g = poly(&f, &v, 6, &[(&[0], 1, 1), (&[1], -1, 1)]).inv().unwrap();
        for k in 0..6u8 {
            assert!(g.coeff(&[k, 0, 0, 0]).is_one());
        }
        assert!(TruncSeries::var(&f, &v, 0, 6).inv().is_err());
        let c = TruncSeries::constant(&f.from_i64(4), &v, 6);
        assert_eq!(c.inv().unwrap(), TruncSeries::constant(&f.from_ratio(1, 4), &v, 6));
    }

    #[test]
    fn sqrt_examples() {
        let f = q();
        let v = vars(&["z"]);
        let s = poly(&f, &v, 4, &[(&[0], 1, 1), (&[1], 1, 1)]).sqrt_branch(&f.one()).unwrap();
        assert_eq!(s, poly(&f, &v, 4, &[(&[0], 1, 1), (&[1], 1, 2), (&[2], -1, 8), (&[3], 1, 16)]));
        let four = TruncSeries::constant(&f.from_i64(4), &v, 4);
        assert_eq!(four.sqrt_branch(&f.from_i64(-2)).unwrap(), TruncSeries::constant(&f.from_i64(-2), &v, 4));
        assert_eq!(TruncSeries::var(&f, &v, 0, 4).sqrt_branch(&f.one()).unwrap_err(), SeriesError::NotAUnit);
        assert_eq!(four.sqrt_branch(&f.one()).unwrap_err(), SeriesError::BranchMismatch);
    }

    #[test]
    fn subst_examples() {
        let f = q();
        let z = vars(&["z"]);
        let w = vars(&["w"]);
        let geo = poly(&f, &z, 5, &[(&[0], 1, 1), (&[1], -1, 1)]).inv().unwrap();
        let a = poly(&f, &w, 5, &[(&[1], 1, 1), (&[2], 1, 1)]);
        let r = geo.subst(&[a]).unwrap();
        // 1/(1 − w − w²) = 1 + w + 2w² + 3w³ + 5w⁴.
        assert_eq!(r, poly(&f, &w, 5, &[(&[0], 1, 1), (&[1], 1, 1), (&[2], 2, 1), (&[3], 3, 1), (&[4], 5, 1)]));
        assert_eq!(geo.subst(&[TruncSeries::var(&f, &z, 0, 5)]).unwrap(), geo);
        assert_eq!(geo.subst(&[TruncSeries::zero(&f, &w, 5)]).unwrap(), TruncSeries::one(&f, &w, 5));
        let bad = poly(&f, &w, 5, &[(&[0], 1, 1)]);
        assert_eq!(geo.subst(&[bad]).unwrap_err(), SeriesError::NonNilpotentSubstitution);
    }

    #[test]
    fn demazure_examples() {
        let f = q();
        let v = vars(&["x", "y"]);
        let x = TruncSeries::var(&f, &v, 0, 6);
        assert_eq!(x.demazure(0, 1).unwrap(), TruncSeries::one(&f, &v, 5));
        let x2y = poly(&f, &v, 6, &[(&[2, 1], 1, 1)]);
        assert_eq!(x2y.demazure(0, 1).unwrap(), poly(&f, &v, 5, &[(&[1, 1], 1, 1)]));
        let sym = poly(&f, &v, 6, &[(&[2, 1], 1, 1), (&[1, 2], 1, 1), (&[0, 0], 3, 1)]);
        assert!(sym.demazure(0, 1).unwrap().is_zero());
        assert_eq!(sym.demazure(0, 1).unwrap().order(), 5);
    }

    #[test]
    fn inexact_division_is_reported() {
        let f = q();
        let v = vars(&["x", "y"]);
        let x = TruncSeries::var(&f, &v, 0, 6);
        let err = x.div_exact_linear(&[f.one(), -f.one()]).unwrap_err();
        assert!(matches!(err, SeriesError::DivisibilityFailure { .. }));
    }

    #[test]
    fn laurent_examples() {
        let f = q();
        let x = vars(&["x"]);
        let one = TruncSeries::one(&f, &x, 8);
        let xs = TruncSeries::var(&f, &x, 0, 8);
        let l = LaurentU::from_ratio(&[one.clone()], &[xs.neg(), one.clone()], -8).unwrap();
        for n in 0..6 {
            assert_eq!(l.coeff(-n - 1).unwrap(), xs.pow(n as u32));
        }
        assert!(l.coeff(-9).is_err());
        let none = vars(&[]);
        let c = |k: i64| TruncSeries::constant(&f.from_i64(k), &none, 1);
        let u3 = LaurentU::from_ratio(&[c(0), c(0), c(0), c(1)], &[c(1)], -2).unwrap();
        assert!(u3.coeff_scalar(3).unwrap().is_one());
        assert!(u3.coeff_scalar(0).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn neg_sqrt_branch_is_negated(c in 1i64..20, a in -9i64..9, b in -9i64..9) {
            let f = q();
            let v = vars(&["x", "y"]);
            let s = poly(&f, &v, 5, &[(&[0, 0], c * c, 1), (&[1, 0], a, 1), (&[1, 1], b, 1)]);
            let r1 = s.sqrt_branch(&f.from_i64(c)).unwrap();
            let r2 = s.sqrt_branch(&f.from_i64(-c)).unwrap();
            prop_assert_eq!(&r1 * &r1, s.clone());
            prop_assert_eq!(r2, r1.neg());
        }

        #[test]
        fn division_round_trip(a in -5i64..5, b in -5i64..5, c in -5i64..5) {
            let f = q();
            let v = vars(&["x", "y"]);
            let g = poly(&f, &v, 8, &[(&[1, 0], 1, 1), (&[0, 1], 2, 1)]);
            let h = poly(&f, &v, 8, &[(&[0, 0], a, 1), (&[2, 1], b, 1), (&[0, 3], c, 1)]);
            let prod = &g * &h;
            let q = prod.div_exact_linear(&[f.one(), f.from_i64(2)]).unwrap();
            prop_assert_eq!(&q * &g, prod);
        }
    }
}
