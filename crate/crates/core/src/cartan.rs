//! The super Cartan datum on the colour set 𝕜: the halves I and J, the
//! eigenvalue bijection `b`, Cartan entries, symmetrizers, parity and the
//! weight lattice spanned by fundamental weights.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::fields::{FieldDescriptor, FieldElement, FieldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CartanError {
    #[error("colour {0} is outside the supported scope")]
    UnsupportedColor(String),
    #[error("colour {0} is not in I")]
    NotInI(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub type CartanResult<T> = Result<T, CartanError>;

/// Dynkin type of a connected component I_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DynkinType {
    AInfinity,
    BInfinity,
    CInfinity,
    /// Untwisted affine A_{p−1}^{(1)}.
    AffineA(u64),
    /// A_2^{(2)} (p = 3).
    TwistedA2,
    /// Twisted affine A_{p−1}^{(2)}, p > 3.
    TwistedA(u64),
}

impl fmt::Display for DynkinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynkinType::AInfinity => write!(f, "A_inf"),
            DynkinType::BInfinity => write!(f, "B_inf"),
            DynkinType::CInfinity => write!(f, "C_inf"),
            DynkinType::AffineA(p) => write!(f, "A_{}^(1)", p - 1),
            DynkinType::TwistedA2 => write!(f, "A_2^(2)"),
            DynkinType::TwistedA(p) => write!(f, "A_{}^(2)", p - 1),
        }
    }
}

/// Summary of a colour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Color {
    pub value: FieldElement,
    pub class_rep: FieldElement,
    pub in_i: bool,
    pub component_type: DynkinType,
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// Class-representative rule for rational colours.
pub fn rational_in_i(q: &BigRational) -> bool {
    if q.is_integer() {
        return !q.is_negative();
    }
    if (q * BigRational::from_integer(BigInt::from(2))).is_integer() {
        return q.is_negative();
    }
    let frac = q - q.floor();
    frac < half()
}

/// Membership in I for any element of a supported field. Irrational
/// characteristic-0 elements are in I when their leading irrational
/// coordinate is positive.
pub fn in_i(x: &FieldElement) -> bool {
    if let Some([a, t]) = x.modular_coords() {
        let h = (x.characteristic() - 1) / 2;
        return if t == 0 { a <= h } else { t <= h };
    }
    match x.to_rational() {
        Some(q) => rational_in_i(&q),
        None => x.leading_irrational_sign().unwrap_or(false),
    }
}

/// Membership in J = I − ħ, i.e. `x + ħ ∈ I`.
pub fn in_j(x: &FieldElement) -> bool {
    in_i(&(x + &x.field().hbar()))
}

/// Radicand whose distinguished root is `b(q)` up to sign.
pub fn b_radicand(q: &BigRational) -> BigRational {
    if rational_in_i(q) {
        q * (q + BigRational::one())
    } else {
        q * (q - BigRational::one())
    }
}

/// Field and conventions shared by every colour computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CartanDatum {
    field: Arc<FieldDescriptor>,
}

/// Weights in the basis of fundamental weights ϖ_i.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Weight(BTreeMap<FieldElement, i64>);

impl Weight {
    pub fn zero() -> Self {
        Weight(BTreeMap::new())
    }

    /// The fundamental weight ϖ_i.
    pub fn fundamental(i: &FieldElement) -> Self {
        let mut w = Weight::zero();
        w.add_to(i, 1);
        w
    }

    pub fn get(&self, i: &FieldElement) -> i64 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn add_to(&mut self, i: &FieldElement, k: i64) {
        let e = self.0.entry(i.clone()).or_insert(0);
        *e += k;
        if *e == 0 {
            self.0.remove(i);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FieldElement, &i64)> {
        self.0.iter()
    }

    pub fn plus(&self, other: &Weight) -> Weight {
        let mut w = self.clone();
        for (i, k) in other.iter() {
            w.add_to(i, *k);
        }
        w
    }

    pub fn scaled(&self, k: i64) -> Weight {
        let mut w = Weight::zero();
        for (i, v) in self.iter() {
            w.add_to(i, v * k);
        }
        w
    }

    pub fn minus(&self, other: &Weight) -> Weight {
        self.plus(&other.scaled(-1))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.iter().map(|(i, k)| format!("{k}·w[{i}]")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl CartanDatum {
    pub fn new(field: Arc<FieldDescriptor>) -> Self {
        CartanDatum { field }
    }

    /// A datum whose field contains every `b(i)` needed for the given
    /// rational colours and their neighbours, plus the square roots of
    /// `extra` radicands. Characteristic p always uses 𝔽_{p²}.
    pub fn with_colors(p: u64, colors: &[BigRational], extra: &[BigRational]) -> CartanResult<Self> {
        if p != 0 {
            return Ok(CartanDatum::new(FieldDescriptor::prime_square(p)?));
        }
        let mut radicands = Vec::new();
        for q in colors {
            for shift in [-1i64, 0, 1] {
                let c = q + BigRational::from_integer(BigInt::from(shift));
                radicands.push(b_radicand(&c));
                radicands.push(b_radicand(&-c));
            }
        }
        radicands.extend(extra.iter().cloned());
        Self::with_radicands(&radicands)
    }

    /// A characteristic-0 datum whose tower resolves every radicand listed.
    pub fn with_radicands(radicands: &[BigRational]) -> CartanResult<Self> {
        let mut field = FieldDescriptor::rationals();
        for r in radicands {
            let x = field.from_rational(r.clone());
            if x.is_zero() || x.sqrt_in_field()?.is_some() {
                continue;
            }
            field = x.distinguished_sqrt_or_adjoin(&in_j)?.0;
        }
        Ok(CartanDatum::new(field))
    }

    pub fn field(&self) -> &Arc<FieldDescriptor> {
        &self.field
    }

    pub fn characteristic(&self) -> u64 {
        self.field.characteristic()
    }

    pub fn hbar(&self) -> FieldElement {
        self.field.hbar()
    }

    pub fn color(&self, q: &BigRational) -> FieldElement {
        self.field.from_rational(q.clone())
    }

    pub fn color_i64(&self, n: i64) -> FieldElement {
        self.field.from_i64(n)
    }

    /// The colours of I_0 up to a bound: `0..=(p−1)/2` in characteristic p,
    /// `{ħ, 0, 1, …, bound}` in characteristic 0.
    pub fn default_window(&self, bound: i64) -> Vec<FieldElement> {
        let p = self.characteristic();
        if p == 0 {
            let mut w = vec![self.color_i64(0), self.hbar()];
            w.extend((1..=bound).map(|k| self.color_i64(k)));
            w
        } else {
            (0..=((p - 1) / 2) as i64).map(|k| self.color_i64(k)).collect()
        }
    }

    pub fn in_i(&self, x: &FieldElement) -> bool {
        in_i(x)
    }

    pub fn in_j(&self, x: &FieldElement) -> bool {
        in_j(x)
    }

    fn require_i(&self, x: &FieldElement) -> CartanResult<()> {
        if in_i(x) {
            Ok(())
        } else {
            Err(CartanError::NotInI(x.to_string()))
        }
    }

    /// Distinguished square root (the one lying in J).
    pub fn sqrt(&self, a: &FieldElement) -> CartanResult<FieldElement> {
        Ok(a.distinguished_sqrt(&in_j)?)
    }

    /// b(i) = √(i(i+1)) on I and −√(i(i−1)) on −I.
    pub fn b_map(&self, i: &FieldElement) -> CartanResult<FieldElement> {
        let one = self.field.one();
        if in_i(i) {
            self.sqrt(&(i * &(i + &one)))
        } else {
            Ok(-self.sqrt(&(i * &(i - &one)))?)
        }
    }

    /// Inverse of [`b_map`](Self::b_map): √(j²+1/4) − 1/2 on J, odd extension off J.
    pub fn b_inv(&self, j: &FieldElement) -> CartanResult<FieldElement> {
        let quarter = self.field.from_ratio(1, 4);
        let half = self.field.from_ratio(1, 2);
        if in_j(j) {
            Ok(self.sqrt(&(&(j * j) + &quarter))? - half)
        } else {
            let m = -j;
            Ok(-(self.sqrt(&(&(&m * &m) + &quarter))? - half))
        }
    }

    pub fn is_adjacent(&self, i: &FieldElement, j: &FieldElement) -> bool {
        let one = self.field.one();
        *i == j + &one || *i == j - &one
    }

    /// Cartan entry c_ij for i, j ∈ I.
    pub fn cartan_entry(&self, i: &FieldElement, j: &FieldElement) -> CartanResult<i64> {
        self.require_i(i)?;
        self.require_i(j)?;
        if i == j {
            return Ok(2);
        }
        if self.is_adjacent(i, j) {
            let e = i.is_zero() as u32 + (*j == self.hbar()) as u32;
            return Ok(-(1i64 << e));
        }
        Ok(0)
    }

    /// Symmetrizer d_i = 2^{δ_{i=ħ} − δ_{i=0}}.
    pub fn d_sym(&self, i: &FieldElement) -> CartanResult<Rational64> {
        self.require_i(i)?;
        Ok(if i.is_zero() {
            Rational64::new(1, 2)
        } else if *i == self.hbar() {
            Rational64::from_integer(2)
        } else {
            Rational64::one()
        })
    }

    pub fn parity_color(&self, i: &FieldElement) -> CartanResult<u8> {
        self.require_i(i)?;
        Ok(i.is_zero() as u8)
    }

    /// Whether `l` is an odd positive integer (bounded by (p−1)/2 in characteristic p).
    fn is_odd_positive(&self, l: &FieldElement) -> bool {
        let p = self.characteristic();
        if p == 0 {
            l.to_rational().is_some_and(|q| q.is_integer() && q.is_positive() && q.numer() % 2 != BigInt::zero())
        } else {
            l.residue().is_some_and(|r| r % 2 == 1 && r <= (p - 1) / 2)
        }
    }

    /// Weight parity Σ h_l(λ) over odd positive integers l, mod 2. It
    /// satisfies p(λ + α_i) = p(λ) + p(i) and vanishes at λ = 0.
    pub fn parity_weight(&self, lambda: &Weight) -> u8 {
        let s: i64 = lambda.iter().filter(|(l, _)| self.is_odd_positive(l)).map(|(_, k)| *k).sum();
        s.rem_euclid(2) as u8
    }

    pub fn pairing(&self, i: &FieldElement, lambda: &Weight) -> CartanResult<i64> {
        self.require_i(i)?;
        Ok(lambda.get(i))
    }

    /// Neighbours i ± 1 that lie in I.
    pub fn neighbors(&self, i: &FieldElement) -> Vec<FieldElement> {
        let one = self.field.one();
        [i - &one, i + &one].into_iter().filter(in_i).collect()
    }

    /// Simple root α_j = Σ_i c_ij ϖ_i.
    pub fn alpha_weight(&self, j: &FieldElement) -> CartanResult<Weight> {
        self.require_i(j)?;
        let mut w = Weight::zero();
        w.add_to(j, 2);
        for i in self.neighbors(j) {
            w.add_to(&i, self.cartan_entry(&i, j)?);
        }
        Ok(w)
    }

    /// Canonical representative of the class of `i` under i ∼ ±i + ℤ.
    pub fn class_rep(&self, i: &FieldElement) -> CartanResult<FieldElement> {
        if let Some([_, t]) = i.modular_coords() {
            let p = self.characteristic();
            let t = if t <= (p - 1) / 2 { t } else { p - t };
            return Ok(if t == 0 { self.field.zero() } else { &self.field.from_i64(t as i64) * &self.field.root(0) });
        }
        let q = i.to_rational().ok_or_else(|| CartanError::UnsupportedColor(i.to_string()))?;
        let frac = &q - q.floor();
        let rep = if frac.is_zero() {
            BigRational::zero()
        } else if frac == half() {
            -half()
        } else if frac < half() {
            frac
        } else {
            BigRational::one() - frac
        };
        Ok(self.color(&rep))
    }

    pub fn component_classification(&self, i: &FieldElement) -> CartanResult<DynkinType> {
        self.require_i(i)?;
        let p = self.characteristic();
        let rep = self.class_rep(i)?;
        Ok(if p == 0 {
            if rep.is_zero() {
                DynkinType::BInfinity
            } else if rep == self.hbar() {
                DynkinType::CInfinity
            } else {
                DynkinType::AInfinity
            }
        } else if !rep.is_zero() {
            DynkinType::AffineA(p)
        } else if p == 3 {
            DynkinType::TwistedA2
        } else {
            DynkinType::TwistedA(p)
        })
    }

    pub fn describe(&self, i: &FieldElement) -> CartanResult<Color> {
        let inside = in_i(i);
        let probe = if inside { i.clone() } else { -i };
        Ok(Color {
            value: i.clone(),
            class_rep: self.class_rep(i)?,
            in_i: inside,
            component_type: self.component_classification(&probe)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn membership_examples() {
        let d = CartanDatum::new(FieldDescriptor::rationals());
        assert!(d.in_i(&d.color(&q(3, 1))));
        assert!(d.in_i(&d.color(&q(-3, 2))));
        assert!(!d.in_i(&d.color(&q(1, 2))));
        assert!(d.in_i(&d.color(&q(1, 3))));
        assert!(!d.in_i(&d.color(&q(-1, 3))));
        let d5 = CartanDatum::with_colors(5, &[], &[]).unwrap();
        assert!(!d5.in_i(&d5.color_i64(4)));
        assert!(d5.in_i(&d5.color_i64(2)));
    }

    #[test]
    fn i_and_minus_i_partition_finite_fields() {
        for p in [3, 5, 7] {
            let d = CartanDatum::with_colors(p, &[], &[]).unwrap();
            for x in d.field().elements().unwrap() {
                let (a, b) = (in_i(&x), in_i(&-&x));
                assert!(a || b);
                assert_eq!(a && b, x.is_zero());
            }
        }
    }

    #[test]
    fn b_examples() {
        let d5 = CartanDatum::with_colors(5, &[], &[]).unwrap();
        assert_eq!(d5.b_map(&d5.color_i64(2)).unwrap(), d5.color_i64(4));
        assert!(d5.b_map(&d5.color_i64(0)).unwrap().is_zero());
        let d0 = CartanDatum::with_colors(0, &[q(0, 1), q(-1, 2), q(1, 1), q(2, 1)], &[]).unwrap();
        for c in d0.default_window(2) {
            let b = d0.b_map(&c).unwrap();
            assert_eq!(&b * &b, &c * &(&c + &d0.field().one()));
            assert!(d0.in_j(&b));
            assert_eq!(d0.b_map(&-&c).unwrap(), -&b);
            assert_eq!(d0.b_inv(&b).unwrap(), c);
        }
    }

    #[test]
    fn cartan_entries() {
        let d = CartanDatum::with_colors(0, &[q(0, 1), q(1, 1)], &[]).unwrap();
        let (z, one, three) = (d.color_i64(0), d.color_i64(1), d.color_i64(3));
        assert_eq!(d.cartan_entry(&z, &z).unwrap(), 2);
        assert_eq!(d.cartan_entry(&z, &one).unwrap(), -2);
        assert_eq!(d.cartan_entry(&one, &z).unwrap(), -1);
        assert_eq!(d.cartan_entry(&z, &three).unwrap(), 0);
        let d3 = CartanDatum::with_colors(3, &[], &[]).unwrap();
        let (a, b) = (d3.color_i64(0), d3.color_i64(1));
        assert_eq!(d3.cartan_entry(&a, &b).unwrap(), -4);
        assert_eq!(d3.cartan_entry(&b, &a).unwrap(), -1);
        assert!(matches!(d3.cartan_entry(&d3.color_i64(2), &a), Err(CartanError::NotInI(_))));
    }

    #[test]
    fn symmetrizable() {
        for p in [3, 5, 7] {
            let d = CartanDatum::with_colors(p, &[], &[]).unwrap();
            let w = d.default_window(0);
            for i in &w {
                for j in &w {
                    let l = d.d_sym(i).unwrap() * Rational64::from_integer(d.cartan_entry(i, j).unwrap());
                    let r = d.d_sym(j).unwrap() * Rational64::from_integer(d.cartan_entry(j, i).unwrap());
                    assert_eq!(l, r);
                }
            }
        }
    }

    #[test]
    fn parity_is_compatible_with_roots() {
        let d5 = CartanDatum::with_colors(5, &[], &[]).unwrap();
        let z = d5.color_i64(0);
        assert_eq!(d5.parity_weight(&d5.alpha_weight(&z).unwrap()), 1);
        assert_eq!(d5.parity_weight(&Weight::zero()), 0);
        for p in [0, 3, 5, 7] {
            let d = CartanDatum::with_colors(p, &[q(0, 1), q(1, 1), q(2, 1), q(3, 1)], &[]).unwrap();
            for i in d.default_window(4) {
                assert_eq!(d.parity_weight(&d.alpha_weight(&i).unwrap()), d.parity_color(&i).unwrap());
            }
        }
    }

    #[test]
    fn dynkin_labels() {
        let d0 = CartanDatum::new(FieldDescriptor::rationals());
        assert_eq!(d0.component_classification(&d0.color_i64(0)).unwrap(), DynkinType::BInfinity);
        assert_eq!(d0.component_classification(&d0.color(&q(-5, 2))).unwrap(), DynkinType::CInfinity);
        assert_eq!(d0.component_classification(&d0.color(&q(1, 3))).unwrap(), DynkinType::AInfinity);
        let d3 = CartanDatum::with_colors(3, &[], &[]).unwrap();
        assert_eq!(d3.component_classification(&d3.color_i64(0)).unwrap(), DynkinType::TwistedA2);
        let d7 = CartanDatum::with_colors(7, &[], &[]).unwrap();
        assert_eq!(d7.component_classification(&d7.color_i64(2)).unwrap(), DynkinType::TwistedA(7));
        assert_eq!(d7.component_classification(&d7.field().root(0)).unwrap(), DynkinType::AffineA(7));
    }

    #[test]
    fn rainisback_exhaustive() {
        for p in [3, 5, 7] {
            let d = CartanDatum::with_colors(p, &[], &[]).unwrap();
            let one = d.field().one();
            let hb = d.hbar();
            let s = |x: &FieldElement| x * &(x + &one);
            let elts: Vec<_> = d.field().elements().unwrap().into_iter().filter(in_i).collect();
            for i in &elts {
                for j in &elts {
                    if s(i) == s(j) {
                        assert_eq!(i, j);
                    }
                    if s(i) == s(&(j - &one)) {
                        assert!(&(i + &one) == j || (i.is_zero() && j.is_zero()));
                    }
                    if s(i) == s(&(j + &one)) {
                        assert!(*i == j + &one || (&(i + &one) == j && *j == hb));
                    }
                }
            }
        }
    }
}
