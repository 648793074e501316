//! Central characters O(u) = n(u)/m(u) and the weight bookkeeping they
//! carry: multiplicities at b(i), the multipliers attached to P_i and Q_i,
//! and closure of spectra under adjacency.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::cartan::{CartanDatum, CartanError, Weight};
use crate::fields::FieldElement;
use crate::poly::UPoly;
use crate::report::{inputs, CaseResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BubbleError {
    #[error("deg n = {deg_n} but deg m + κ = {expected}")]
    DegreeMismatch { deg_n: usize, expected: i64 },
    #[error("{which} is not symmetric: {which}(x) ≠ (−1)^deg {which}(−x)")]
    SymmetryViolation { which: &'static str },
    #[error("{which} has a root outside b(window): leftover factor {leftover}")]
    UnresolvedRoot { which: &'static str, leftover: String },
    #[error("{which} is not monic")]
    NotMonic { which: &'static str },
    #[error("{0} is not a colour in I")]
    NotInI(String),
    #[error("not a polynomial: coefficient {coefficient} at u^-{exponent}")]
    NotPolynomial { exponent: usize, coefficient: String },
    #[error(transparent)]
    Cartan(#[from] CartanError),
}

pub type BubbleResult<T> = Result<T, BubbleError>;

/// A rational function in `u`, kept in lowest terms with monic denominator.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalFnU {
    num: UPoly,
    den: UPoly,
}

impl RationalFnU {
    /// `num/den` reduced; panics on a zero denominator.
    pub fn new(num: UPoly, den: UPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let g = num.gcd(&den);
        let (mut num, _) = num.divrem(&g);
        let (mut den, _) = den.divrem(&g);
        let lead = den.coeff(den.degree().unwrap_or(0));
        let inv = lead.inv().expect("non-zero leading coefficient");
        num = num.scale(&inv);
        den = den.scale(&inv);
        RationalFnU { num, den }
    }

    pub fn one(datum: &CartanDatum) -> Self {
        let one = UPoly::one(datum.field());
        RationalFnU { num: one.clone(), den: one }
    }

    pub fn numerator(&self) -> &UPoly {
        &self.num
    }

    pub fn denominator(&self) -> &UPoly {
        &self.den
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn recip(&self) -> Self {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// deg num − deg den.
    pub fn degree(&self) -> i64 {
        self.num.degree().map_or(0, |d| d as i64) - self.den.degree().map_or(0, |d| d as i64)
    }
}

impl fmt::Display for RationalFnU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] / [{}]", self.num, self.den)
    }
}

impl fmt::Debug for RationalFnU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Colours whose b-values roots may be resolved against, with those values.
#[derive(Debug, Clone)]
pub struct BubbleContext {
    datum: CartanDatum,
    colours: Vec<(FieldElement, FieldElement)>,
}

/// Which argument of the weight-shift proof a colour falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShiftBranch {
    Zero,
    Hbar,
    OneAtThree,
    Generic,
}

impl ShiftBranch {
    pub fn name(self) -> &'static str {
        match self {
            ShiftBranch::Zero => "i=0",
            ShiftBranch::Hbar => "i=ħ, p≠3",
            ShiftBranch::OneAtThree => "i=1, p=3",
            ShiftBranch::Generic => "generic",
        }
    }
}

impl BubbleContext {
    /// Resolve roots over the window and every colour its multipliers touch.
    pub fn new(datum: &CartanDatum, window: &[FieldElement]) -> BubbleResult<Self> {
        let mut set: Vec<FieldElement> = Vec::new();
        let mut push = |c: FieldElement| {
            if !set.contains(&c) {
                set.push(c);
            }
        };
        for i in window {
            if !datum.in_i(i) {
                return Err(BubbleError::NotInI(i.to_string()));
            }
            push(i.clone());
        }
        let one = datum.field().one();
        for i in window {
            push(rep_in_i(datum, &(i - &one))?);
            push(rep_in_i(datum, &(i + &one))?);
        }
        let colours = set
            .into_iter()
            .map(|c| Ok((c.clone(), datum.b_map(&c)?)))
            .collect::<BubbleResult<Vec<_>>>()?;
        Ok(BubbleContext { datum: datum.clone(), colours })
    }

    pub fn datum(&self) -> &CartanDatum {
        &self.datum
    }

    /// Colours roots are resolved against, in construction order.
    pub fn colours(&self) -> impl Iterator<Item = &FieldElement> {
        self.colours.iter().map(|(c, _)| c)
    }

    pub fn b(&self, i: &FieldElement) -> BubbleResult<FieldElement> {
        self.colours
            .iter()
            .find(|(c, _)| c == i)
            .map(|(_, b)| b.clone())
            .ok_or_else(|| BubbleError::NotInI(i.to_string()))
    }

    pub fn branch(&self, i: &FieldElement) -> ShiftBranch {
        let p = self.datum.characteristic();
        if i.is_zero() {
            ShiftBranch::Zero
        } else if *i == self.datum.hbar() {
            if p == 3 {
                ShiftBranch::OneAtThree
            } else {
                ShiftBranch::Hbar
            }
        } else {
            ShiftBranch::Generic
        }
    }

    /// Multiplicities at ±b(j); errors if anything is left over.
    fn resolve(&self, which: &'static str, f: &UPoly) -> BubbleResult<BTreeMap<FieldElement, u32>> {
        let mut rest = f.clone();
        let mut mult = BTreeMap::new();
        for (c, b) in &self.colours {
            let (k, r) = rest.strip_root(b);
            rest = r;
            if !b.is_zero() {
                rest = rest.strip_root(&-b).1;
            }
            if k > 0 {
                mult.insert(c.clone(), k as u32);
            }
        }
        if rest.degree() != Some(0) {
            return Err(BubbleError::UnresolvedRoot { which, leftover: rest.to_string() });
        }
        Ok(mult)
    }

    /// Validate a pair of minimal polynomials and central charge.
    pub fn character_from_minpolys(&self, m: &UPoly, n: &UPoly, kappa: i64) -> BubbleResult<CharacterData> {
        for (which, f) in [("m", m), ("n", n)] {
            if !f.is_monic() {
                return Err(BubbleError::NotMonic { which });
            }
        }
        let (dm, dn) = (m.degree().unwrap_or(0), n.degree().unwrap_or(0));
        if dn as i64 != dm as i64 + kappa {
            return Err(BubbleError::DegreeMismatch { deg_n: dn, expected: dm as i64 + kappa });
        }
        for (which, f) in [("m", m), ("n", n)] {
            let d = f.degree().unwrap_or(0);
            let mirrored = if d % 2 == 0 { f.reflect() } else { f.reflect().neg() };
            if mirrored != *f {
                return Err(BubbleError::SymmetryViolation { which });
            }
        }
        let eps = self.resolve("m", m)?;
        let phi = self.resolve("n", n)?;
        Ok(CharacterData { m: m.clone(), n: n.clone(), kappa, eps, phi, o: RationalFnU::new(n.clone(), m.clone()) })
    }

    /// Product of `(u − b(j))^{e}(u + b(j))^{e}` over the listed colours.
    pub fn symmetric_poly(&self, exps: &[(FieldElement, u32)]) -> BubbleResult<UPoly> {
        let mut f = UPoly::one(self.datum.field());
        for (c, e) in exps {
            let b = self.b(c)?;
            let factor = if b.is_zero() { UPoly::u(self.datum.field()) } else { UPoly::square_minus(&(&b * &b)) };
            f = f.mul(&factor.pow(*e));
        }
        Ok(f)
    }

    /// (u² − i(i+1))² / ((u² − (i−1)i)(u² − (i+1)(i+2))).
    pub fn p_multiplier(&self, i: &FieldElement) -> BubbleResult<RationalFnU> {
        if !self.datum.in_i(i) {
            return Err(BubbleError::NotInI(i.to_string()));
        }
        let one = self.datum.field().one();
        let sq = |a: &FieldElement| UPoly::square_minus(&(a * &(a + &one)));
        let num = sq(i).pow(2);
        let den = sq(&(i - &one)).mul(&sq(&(i + &one)));
        Ok(RationalFnU::new(num, den))
    }

    fn with_multiplier(&self, ch: &CharacterData, mult: &RationalFnU) -> BubbleResult<CharacterData> {
        let o = ch.o.mul(mult);
        let mut next = self.character_from_minpolys(o.denominator(), o.numerator(), ch.kappa)?;
        next.o = o;
        Ok(next)
    }

    /// Character of an irreducible subquotient of P_i L.
    pub fn crunchy_p(&self, ch: &CharacterData, i: &FieldElement) -> BubbleResult<CharacterData> {
        self.with_multiplier(ch, &self.p_multiplier(i)?)
    }

    /// Character of an irreducible subquotient of Q_i L.
    pub fn crunchy_q(&self, ch: &CharacterData, i: &FieldElement) -> BubbleResult<CharacterData> {
        self.with_multiplier(ch, &self.p_multiplier(i)?.recip())
    }

    /// P_i shifts the weight by α_i and Q_i by −α_i.
    pub fn verify_weight_shift(&self, ch: &CharacterData, i: &FieldElement) -> CaseResult {
        let case = CaseResult::new(
            format!("weight-shift[{i}]"),
            inputs([("i", i.to_string()), ("O", ch.o.to_string()), ("kappa", ch.kappa.to_string())]),
        )
        .with_note(self.branch(i).name());
        let fallback = case.clone();
        let run = || -> BubbleResult<CaseResult> {
            let alpha = self.datum.alpha_weight(i)?;
            let w = ch.weight();
            let up = self.crunchy_p(ch, i)?.weight().minus(&w);
            let down = self.crunchy_q(ch, i)?.weight().minus(&w);
            let mut case = case.require("P_i shift = α_i", up == alpha);
            if up != alpha {
                case = case.with_note(format!("shift {} vs α_i {}", show_weight(&up), show_weight(&alpha)));
            }
            Ok(case.require("Q_i shift = −α_i", down == alpha.scaled(-1)))
        };
        run().unwrap_or_else(|e| fallback.error("evaluation error", e))
    }

    /// Component closure of `s` inside `universe` under i ~ i ± 1.
    pub fn spectrum_closure(&self, universe: &[FieldElement], s: &[FieldElement]) -> Vec<FieldElement> {
        let mut closed: Vec<FieldElement> = s.to_vec();
        let mut k = 0;
        while k < closed.len() {
            for j in self.datum.neighbors(&closed[k]) {
                if universe.contains(&j) && !closed.contains(&j) {
                    closed.push(j);
                }
            }
            k += 1;
        }
        closed.sort();
        closed
    }

    /// Whether `s` is a union of components (relative to `universe`).
    pub fn spectrum_closure_check(&self, universe: &[FieldElement], s: &[FieldElement]) -> CaseResult {
        let mut sorted = s.to_vec();
        sorted.sort();
        sorted.dedup();
        let closure = self.spectrum_closure(universe, &sorted);
        let show = |v: &[FieldElement]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        let case = CaseResult::new(format!("spectrum[{}]", show(&sorted)), inputs([("S", show(&sorted))]));
        if closure == sorted {
            case.with_note("closed")
        } else {
            case.with_note(format!("not closed; closure {{{}}}", show(&closure)))
        }
    }
}

/// `c` if it lies in I, else `−1 − c` (same value of c(c+1)).
fn rep_in_i(datum: &CartanDatum, c: &FieldElement) -> BubbleResult<FieldElement> {
    if datum.in_i(c) {
        return Ok(c.clone());
    }
    let alt = &(-c) - &datum.field().one();
    if datum.in_i(&alt) {
        Ok(alt)
    } else {
        Err(BubbleError::NotInI(c.to_string()))
    }
}

pub fn show_weight(w: &Weight) -> String {
    let parts: Vec<String> = w.iter().map(|(i, k)| format!("{k}·ϖ[{i}]")).collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// A validated central character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterData {
    m: UPoly,
    n: UPoly,
    kappa: i64,
    eps: BTreeMap<FieldElement, u32>,
    phi: BTreeMap<FieldElement, u32>,
    o: RationalFnU,
}

impl CharacterData {
    pub fn m(&self) -> &UPoly {
        &self.m
    }

    pub fn n(&self) -> &UPoly {
        &self.n
    }

    pub fn kappa(&self) -> i64 {
        self.kappa
    }

    pub fn o(&self) -> &RationalFnU {
        &self.o
    }

    pub fn epsilon(&self, i: &FieldElement) -> u32 {
        self.eps.get(i).copied().unwrap_or(0)
    }

    pub fn phi(&self, i: &FieldElement) -> u32 {
        self.phi.get(i).copied().unwrap_or(0)
    }

    /// h_i = φ_i − ε_i.
    pub fn weight(&self) -> Weight {
        let mut w = Weight::zero();
        for (i, k) in &self.phi {
            w.add_to(i, *k as i64);
        }
        for (i, k) in &self.eps {
            w.add_to(i, -(*k as i64));
        }
        w
    }
}

pub fn weight_of(ch: &CharacterData) -> Weight {
    ch.weight()
}

/// `O·m` as a polynomial, or the first non-zero coefficient of its tail in u⁻¹.
pub fn grassmannian_quotient(m: &UPoly, o: &RationalFnU) -> BubbleResult<UPoly> {
    let (q, mut r) = o.numerator().mul(m).divrem(o.denominator());
    let u = UPoly::u(m.field());
    let mut k = 0;
    while !r.is_zero() {
        k += 1;
        let (c, rest) = r.mul(&u).divrem(o.denominator());
        if !c.is_zero() {
            return Err(BubbleError::NotPolynomial { exponent: k, coefficient: c.coeff(0).to_string() });
        }
        r = rest;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn ctx(p: u64, bound: i64) -> BubbleContext {
        let colours: Vec<BigRational> = if p == 0 {
            let mut v = vec![BigRational::new(BigInt::from(-1), BigInt::from(2))];
            v.extend((0..=bound).map(|k| BigRational::from_integer(BigInt::from(k))));
            v
        } else {
            vec![]
        };
        let datum = CartanDatum::with_colors(p, &colours, &[]).unwrap();
        let w = datum.default_window(bound);
        BubbleContext::new(&datum, &w).unwrap()
    }

    fn trivial(c: &BubbleContext) -> CharacterData {
        let one = UPoly::one(c.datum().field());
        c.character_from_minpolys(&one, &one, 0).unwrap()
    }

    #[test]
    fn trivial_character_has_zero_weight() {
        assert!(weight_of(&trivial(&ctx(5, 0))).is_zero());
    }

    #[test]
    fn single_root_weight() {
        let c = ctx(0, 3);
        let f = c.datum().field().clone();
        let two = f.from_i64(2);
        let m = c.symmetric_poly(&[(two.clone(), 1)]).unwrap();
        let ch = c.character_from_minpolys(&m, &UPoly::one(&f), -2).unwrap();
        let w = weight_of(&ch);
        assert_eq!(w.get(&two), -1);
        assert_eq!(w.iter().count(), 1);
    }

    #[test]
    fn zero_multiplier_and_shift() {
        let c = ctx(5, 0);
        let f = c.datum().field().clone();
        let m = c.p_multiplier(&f.zero()).unwrap();
        let two = f.from_i64(2);
        let expect = RationalFnU::new(UPoly::square_minus(&f.zero()), UPoly::square_minus(&two));
        assert_eq!(m, expect);
        let k = c.crunchy_p(&trivial(&c), &f.zero()).unwrap();
        let w = k.weight();
        assert_eq!((w.get(&f.zero()), w.get(&f.one())), (2, -1));
    }

    #[test]
    fn p3_one_and_char0_hbar() {
        let c = ctx(3, 0);
        let f = c.datum().field().clone();
        let w = c.crunchy_p(&trivial(&c), &f.one()).unwrap().weight();
        assert_eq!((w.get(&f.zero()), w.get(&f.one())), (-4, 2));
        let c = ctx(0, 2);
        let f = c.datum().field().clone();
        let hbar = f.hbar();
        let w = c.crunchy_p(&trivial(&c), &hbar).unwrap().weight();
        assert_eq!((w.get(&hbar), w.get(&f.from_ratio(-3, 2))), (2, -2));
    }

    #[test]
    fn validation_errors() {
        let c = ctx(5, 0);
        let f = c.datum().field().clone();
        let one = UPoly::one(&f);
        let m = c.symmetric_poly(&[(f.one(), 1)]).unwrap();
        assert!(matches!(c.character_from_minpolys(&m, &m, 1), Err(BubbleError::DegreeMismatch { .. })));
        let b1 = c.b(&f.one()).unwrap();
        let lopsided = UPoly::linear_root(&b1);
        assert!(matches!(
            c.character_from_minpolys(&lopsided, &one, -1),
            Err(BubbleError::SymmetryViolation { which: "m" })
        ));
        let stray = UPoly::square_minus(&f.from_i64(4));
        assert!(matches!(c.character_from_minpolys(&one, &stray, 2), Err(BubbleError::UnresolvedRoot { .. })));
    }

    #[test]
    fn quotient_and_spectrum() {
        let c = ctx(5, 0);
        let f = c.datum().field().clone();
        let m = c.symmetric_poly(&[(f.one(), 1)]).unwrap();
        let n = c.symmetric_poly(&[(f.from_i64(2), 1), (f.zero(), 1)]).unwrap();
        let ch = c.character_from_minpolys(&m, &n, 1).unwrap();
        assert_eq!(grassmannian_quotient(&m, ch.o()).unwrap(), n);
        assert_eq!(grassmannian_quotient(&m, &RationalFnU::one(c.datum())).unwrap(), m);
        assert!(matches!(grassmannian_quotient(&n, ch.o()), Err(BubbleError::NotPolynomial { .. })));
        let all: Vec<_> = c.datum().default_window(0);
        assert!(c.spectrum_closure_check(&all, &all).passed());
        assert_eq!(c.spectrum_closure(&all, &[f.one()]), all);
        assert!(c.spectrum_closure_check(&all, &[]).passed());
    }
}
