//! Dense univariate polynomials in `u` over a field.

use std::fmt;
use std::sync::Arc;

use crate::fields::{FieldDescriptor, FieldElement};

#[derive(Clone, PartialEq, Eq)]
pub struct UPoly {
    field: Arc<FieldDescriptor>,
    /// Coefficients, index = power; no trailing zeros.
    coeffs: Vec<FieldElement>,
}

impl UPoly {
    pub fn new(field: &Arc<FieldDescriptor>, mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { field: field.clone(), coeffs }
    }

    pub fn zero(field: &Arc<FieldDescriptor>) -> Self {
        Self::new(field, Vec::new())
    }

    pub fn constant(c: &FieldElement) -> Self {
        Self::new(c.field(), vec![c.clone()])
    }

    pub fn one(field: &Arc<FieldDescriptor>) -> Self {
        Self::constant(&field.one())
    }

    /// `u`.
    pub fn u(field: &Arc<FieldDescriptor>) -> Self {
        Self::new(field, vec![field.zero(), field.one()])
    }

    /// `u − r`.
    pub fn linear_root(r: &FieldElement) -> Self {
        Self::new(r.field(), vec![-r, r.field().one()])
    }

    /// `u² − a`.
    pub fn square_minus(a: &FieldElement) -> Self {
        let f = a.field();
        Self::new(f, vec![-a, f.zero(), f.one()])
    }

    pub fn field(&self) -> &Arc<FieldDescriptor> {
        &self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> FieldElement {
        self.coeffs.get(k).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has degree `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(&self.field, (0..n).map(|k| &self.coeff(k) + &other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-self.field.one())
    }

    pub fn scale(&self, k: &FieldElement) -> Self {
        Self::new(&self.field, self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(&self.field, out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(&self.field), |acc, _| acc.mul(self))
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead_inv = d.coeffs[dd].inv().expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let mut quo = vec![self.field.zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = &rem[rem.len() - 1] * &lead_inv;
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] = &rem[k + j] - &(&c * dc);
            }
            quo[k] = c;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(&self.field, quo), Self::new(&self.field, rem))
    }

    pub fn make_monic(&self) -> Self {
        match self.coeffs.last() {
            Some(l) => self.scale(&l.inv().expect("nonzero")),
            None => self.clone(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.make_monic()
    }

    pub fn eval(&self, x: &FieldElement) -> FieldElement {
        self.coeffs.iter().rev().fold(self.field.zero(), |acc, c| &(&acc * x) + c)
    }

    /// `p(−u)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            &self.field,
            self.coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() }).collect(),
        )
    }

    /// Multiplicity of `r` as a root, stripping it off.
    pub fn strip_root(&self, r: &FieldElement) -> (usize, Self) {
        let lin = Self::linear_root(r);
        let mut p = self.clone();
        let mut k = 0;
        while !p.is_zero() {
            let (q, rem) = p.divrem(&lin);
            if !rem.is_zero() {
                break;
            }
            p = q;
            k += 1;
        }
        (k, p)
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})·u"),
                _ => format!("({c})·u^{k}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_and_gcd() {
        let f = FieldDescriptor::rationals();
        let a = UPoly::square_minus(&f.from_i64(4)); // (u−2)(u+2)
        let b = UPoly::linear_root(&f.from_i64(2)).mul(&UPoly::linear_root(&f.from_i64(5)));
        assert_eq!(a.gcd(&b), UPoly::linear_root(&f.from_i64(2)));
        let (q, r) = b.divrem(&a);
        assert_eq!(q.mul(&a).add(&r), b);
        assert!(r.degree().unwrap_or(0) < 2);
    }

    #[test]
    fn roots_and_reflection() {
        let f = FieldDescriptor::prime(7).unwrap();
        let p = UPoly::linear_root(&f.from_i64(3)).pow(3).mul(&UPoly::u(&f));
        let (k, rest) = p.strip_root(&f.from_i64(3));
        assert_eq!(k, 3);
        assert_eq!(rest, UPoly::u(&f));
        let s = UPoly::square_minus(&f.from_i64(2));
        assert_eq!(s.reflect(), s);
        assert_eq!(UPoly::u(&f).reflect(), UPoly::u(&f).neg());
    }
}
