//! Colour-block model of the completed affine Sergeev superalgebra.
//!
//! Elements are stored in normal form `Σ w · c^ε · h(z) · e(i)`: a permutation
//! `w`, an increasing product of Clifford tokens `c^ε`, a truncated series `h`
//! in the block variables `z_k = x_k − b(i_k)`, and a source idempotent `e(i)`.
//! Products are formed by right multiplication with generators; all
//! straightening rules live in [`SergeevContext::right_mul_crossing`] and
//! [`SergeevContext::right_mul_token`].
//!
//! Conventions: strands are numbered from the left, `a·b` means `a` on top of
//! `b`, and tokens drawn at equal height on strands k < l read as `c_k c_l`.
//! The permutation `w` records where each bottom position ends up on top.
//! Because crossings do not preserve colour blocks in the completion, the
//! normal-form key does not determine the target idempotent; projections are
//! taken explicitly with `e(j)·a`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::cartan::{CartanDatum, CartanError};
use crate::fields::{FieldDescriptor, FieldElement};
use crate::report::{inputs, CaseResult, Residual};
use crate::series::{SeriesError, TruncSeries, Vars, MAX_VARS};

pub const MAX_STRANDS: usize = MAX_VARS;

/// Bottom position `l` ends at top position `perm[l]`; unused slots are fixed.
pub type Perm = [u8; MAX_STRANDS];

pub const IDENTITY_PERM: Perm = [0, 1, 2, 3];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SergeevError {
    #[error("strand index {k} out of range for {n} strands")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("{0} strands (supported: 1..={MAX_STRANDS})")]
    TooManyStrands(usize),
    #[error("colour tuple {0} is not in the closed set")]
    UnknownTuple(String),
    #[error("elements live on different strand counts")]
    ContextMismatch,
    #[error("x_k − x_(k+1) is not invertible on block {0}")]
    NotInvertibleDifference(String),
    #[error(transparent)]
    Cartan(#[from] CartanError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type SergeevResult<T> = Result<T, SergeevError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub perm: Perm,
    pub eps: u8,
    pub source: u16,
}

#[derive(Clone, Debug)]
pub struct SergeevElement {
    n: usize,
    terms: BTreeMap<TermKey, TruncSeries>,
}

impl SergeevElement {
    pub fn strands(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &TruncSeries)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn get(&self, key: &TermKey) -> Option<&TruncSeries> {
        self.terms.get(key)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every stored series vanishes below total degree `n`.
    pub fn is_zero_mod(&self, n: u32) -> bool {
        self.terms.values().all(|s| s.truncate(n).is_zero())
    }

    /// Parity of a homogeneous element (`None` for mixed or zero elements).
    pub fn parity(&self) -> Option<u8> {
        let mut it = self.terms.keys().map(|k| (k.eps.count_ones() % 2) as u8);
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    fn insert(&mut self, key: TermKey, s: TruncSeries) {
        accumulate(&mut self.terms, key, s);
    }

    pub fn neg(&self) -> Self {
        SergeevElement { n: self.n, terms: self.terms.iter().map(|(k, s)| (*k, s.neg())).collect() }
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        let mut out = SergeevElement { n: self.n, terms: BTreeMap::new() };
        for (k, s) in &self.terms {
            out.insert(*k, s.scale(c));
        }
        out
    }

    pub fn add(&self, other: &Self) -> SergeevResult<Self> {
        if self.n != other.n {
            return Err(SergeevError::ContextMismatch);
        }
        let mut out = self.clone();
        for (k, s) in &other.terms {
            out.insert(*k, s.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> SergeevResult<Self> {
        self.add(&other.neg())
    }

    /// Keep only terms with the given source.
    pub fn restrict_source(&self, source: u16) -> Self {
        SergeevElement {
            n: self.n,
            terms: self.terms.iter().filter(|(k, _)| k.source == source).map(|(k, s)| (*k, s.clone())).collect(),
        }
    }
}

fn accumulate(map: &mut BTreeMap<TermKey, TruncSeries>, key: TermKey, s: TruncSeries) {
    if s.is_zero() {
        return;
    }
    match map.get_mut(&key) {
        Some(old) => {
            let sum = &*old + &s;
            if sum.is_zero() {
                map.remove(&key);
            } else {
                *old = sum;
            }
        }
        None => {
            map.insert(key, s);
        }
    }
}

/// Right-multiply `c^eps` by `c_k`: new bit set and whether a sign appears.
fn token_right(eps: u8, k: usize) -> (u8, bool) {
    let mut neg = (eps >> (k + 1)).count_ones() % 2 == 1;
    if eps & (1 << k) != 0 {
        neg = !neg;
    }
    (eps ^ (1 << k), neg)
}

fn swap_bits(eps: u8, k: usize) -> u8 {
    let a = (eps >> k) & 1;
    let b = (eps >> (k + 1)) & 1;
    (eps & !(3 << k)) | (b << k) | (a << (k + 1))
}

/// A reduced word `[k_1, …, k_r]` with `w = s_{k_1} ⋯ s_{k_r}`.
pub fn reduced_word(perm: &Perm, n: usize) -> Vec<usize> {
    let mut p = *perm;
    let mut word = Vec::new();
    while let Some(k) = (0..n.saturating_sub(1)).find(|&k| p[k] > p[k + 1]) {
        p.swap(k, k + 1);
        word.push(k);
    }
    word.reverse();
    word
}

/// Per-block data for one strand pair (k, k+1).
#[derive(Clone)]
struct PairData {
    swapped: u16,
    negated: u16,
    /// 1/(x_k − x_{k+1}) when b(i_k) ≠ b(i_{k+1}).
    inv_diff: Option<TruncSeries>,
    /// 1/(x_k + x_{k+1}) when b(i_k) ≠ −b(i_{k+1}).
    inv_sum: Option<TruncSeries>,
}

/// The algebra on `n` strands over colour tuples in `(W ∪ −W)^n`.
pub struct SergeevContext {
    datum: CartanDatum,
    n: usize,
    order: u32,
    vars: Vars,
    colors: Vec<FieldElement>,
    tuples: Vec<Vec<FieldElement>>,
    index: BTreeMap<Vec<FieldElement>, u16>,
    b: Vec<Vec<FieldElement>>,
    pairs: Vec<Vec<PairData>>,
    flip: Vec<Vec<u16>>,
}

fn tuple_string(t: &[FieldElement]) -> String {
    let parts: Vec<String> = t.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}

impl SergeevContext {
    /// Build the context for a window of colours; the closed set uses every
    /// window colour and its negative.
    pub fn new(datum: &CartanDatum, window: &[FieldElement], n: usize, order: u32) -> SergeevResult<Self> {
        if n == 0 || n > MAX_STRANDS {
            return Err(SergeevError::TooManyStrands(n));
        }
        let mut colors: Vec<FieldElement> = Vec::new();
        for c in window {
            for x in [c.clone(), -c] {
                if !colors.contains(&x) {
                    colors.push(x);
                }
            }
        }
        colors.sort();
        let names: Vec<String> = (1..=n).map(|k| format!("z{k}")).collect();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let vars = crate::series::vars(&name_refs);
        let mut tuples = vec![Vec::new()];
        for _ in 0..n {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    colors.iter().map(move |c| {
                        let mut t2 = t.clone();
                        t2.push(c.clone());
                        t2
                    })
                })
                .collect();
        }
        let index: BTreeMap<Vec<FieldElement>, u16> =
            tuples.iter().enumerate().map(|(k, t)| (t.clone(), k as u16)).collect();
        let mut bvals = BTreeMap::new();
        for c in &colors {
            bvals.insert(c.clone(), datum.b_map(c)?);
        }
        let b: Vec<Vec<FieldElement>> = tuples.iter().map(|t| t.iter().map(|c| bvals[c].clone()).collect()).collect();
        let field = datum.field().clone();
        let mut pairs = Vec::with_capacity(tuples.len());
        let mut flip = Vec::with_capacity(tuples.len());
        for (ti, t) in tuples.iter().enumerate() {
            let mut row = Vec::new();
            for k in 0..n.saturating_sub(1) {
                let mut sw = t.clone();
                sw.swap(k, k + 1);
                let mut ng = t.clone();
                ng[k] = -&ng[k];
                ng[k + 1] = -&ng[k + 1];
                let mut lin = vec![field.zero(); n];
                lin[k] = field.one();
                lin[k + 1] = -field.one();
                let diff0 = &b[ti][k] - &b[ti][k + 1];
                let inv_diff = if diff0.is_zero() {
                    None
                } else {
                    Some(TruncSeries::linear(&diff0, &lin, &vars, order).inv()?)
                };
                lin[k + 1] = field.one();
                let sum0 = &b[ti][k] + &b[ti][k + 1];
                let inv_sum = if sum0.is_zero() {
                    None
                } else {
                    Some(TruncSeries::linear(&sum0, &lin, &vars, order).inv()?)
                };
                row.push(PairData { swapped: index[&sw], negated: index[&ng], inv_diff, inv_sum });
            }
            pairs.push(row);
            flip.push(
                (0..n)
                    .map(|k| {
                        let mut f = t.clone();
                        f[k] = -&f[k];
                        index[&f]
                    })
                    .collect(),
            );
        }
        Ok(SergeevContext { datum: datum.clone(), n, order, vars, colors, tuples, index, b, pairs, flip })
    }

    pub fn datum(&self) -> &CartanDatum {
        &self.datum
    }

    pub fn field(&self) -> &Arc<FieldDescriptor> {
        self.datum.field()
    }

    pub fn strands(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    /// The closed colour set `W ∪ −W`.
    pub fn colors(&self) -> &[FieldElement] {
        &self.colors
    }

    pub fn tuples(&self) -> &[Vec<FieldElement>] {
        &self.tuples
    }

    pub fn tuple(&self, idx: u16) -> &[FieldElement] {
        &self.tuples[idx as usize]
    }

    pub fn tuple_index(&self, t: &[FieldElement]) -> SergeevResult<u16> {
        self.index.get(t).copied().ok_or_else(|| SergeevError::UnknownTuple(tuple_string(t)))
    }

    /// b(i_k) on block `idx`.
    pub fn b_at(&self, idx: u16, k: usize) -> &FieldElement {
        &self.b[idx as usize][k]
    }

    /// Human-readable block label for a key: permutation, tokens, source.
    pub fn describe_key(&self, key: &TermKey) -> String {
        let perm: Vec<String> = key.perm[..self.n].iter().map(|p| (p + 1).to_string()).collect();
        let toks: Vec<String> = (0..self.n).filter(|k| key.eps & (1 << k) != 0).map(|k| (k + 1).to_string()).collect();
        format!("w=[{}] c={{{}}} e{}", perm.join(","), toks.join(","), tuple_string(self.tuple(key.source)))
    }

    fn check_strand(&self, k: usize, pair: bool) -> SergeevResult<usize> {
        let limit = if pair { self.n - 1 } else { self.n };
        if k == 0 || k > limit {
            return Err(SergeevError::IndexOutOfRange { k, n: self.n });
        }
        Ok(k - 1)
    }

    // ----- constructors -----

    pub fn zero(&self) -> SergeevElement {
        SergeevElement { n: self.n, terms: BTreeMap::new() }
    }

    pub fn one_series(&self) -> TruncSeries {
        TruncSeries::one(self.field(), &self.vars, self.order)
    }

    /// `Σ_i h_i(z) e(i)` over blocks where `f` returns a series.
    pub fn diagonal<F>(&self, mut f: F) -> SergeevResult<SergeevElement>
    where
        F: FnMut(u16, &[FieldElement]) -> SergeevResult<Option<TruncSeries>>,
    {
        let mut out = self.zero();
        for (idx, t) in self.tuples.iter().enumerate() {
            if let Some(s) = f(idx as u16, t)? {
                out.insert(TermKey { perm: IDENTITY_PERM, eps: 0, source: idx as u16 }, s);
            }
        }
        Ok(out)
    }

    /// `h(z)·e(i)` on a single block.
    pub fn pin(&self, source: &[FieldElement], h: TruncSeries) -> SergeevResult<SergeevElement> {
        let idx = self.tuple_index(source)?;
        let mut out = self.zero();
        out.insert(TermKey { perm: IDENTITY_PERM, eps: 0, source: idx }, h);
        Ok(out)
    }

    /// A single normal-form term `w·c^ε·h·e(i)`.
    pub fn term(&self, perm: Perm, eps: u8, source: &[FieldElement], h: TruncSeries) -> SergeevResult<SergeevElement> {
        let idx = self.tuple_index(source)?;
        let mut out = self.zero();
        out.insert(TermKey { perm, eps, source: idx }, h);
        Ok(out)
    }

    pub fn identity(&self) -> SergeevElement {
        self.diagonal(|_, _| Ok(Some(self.one_series()))).expect("constant blocks")
    }

    pub fn idempotent(&self, t: &[FieldElement]) -> SergeevResult<SergeevElement> {
        self.pin(t, self.one_series())
    }

    /// Dot on strand `k` (1-based): `b(i_k) + z_k` on every block.
    pub fn dot(&self, k: usize) -> SergeevResult<SergeevElement> {
        let k = self.check_strand(k, false)?;
        self.diagonal(|idx, _| {
            let z = TruncSeries::var(self.field(), &self.vars, k, self.order);
            Ok(Some(&z + &TruncSeries::constant(self.b_at(idx, k), &self.vars, self.order)))
        })
    }

    /// Clifford token on strand `k` (1-based).
    pub fn token(&self, k: usize) -> SergeevResult<SergeevElement> {
        let k = self.check_strand(k, false)?;
        let mut out = self.zero();
        for idx in 0..self.tuples.len() {
            out.insert(TermKey { perm: IDENTITY_PERM, eps: 1 << k, source: idx as u16 }, self.one_series());
        }
        Ok(out)
    }

    /// Crossing of strands `k`, `k+1` (1-based).
    pub fn crossing(&self, k: usize) -> SergeevResult<SergeevElement> {
        let k = self.check_strand(k, true)?;
        let mut perm = IDENTITY_PERM;
        perm.swap(k, k + 1);
        let mut out = self.zero();
        for idx in 0..self.tuples.len() {
            out.insert(TermKey { perm, eps: 0, source: idx as u16 }, self.one_series());
        }
        Ok(out)
    }

    /// Polynomial `f` in the actual dots, pinned on the block `source`:
    /// variable `v` of `f` becomes `sign·x_{strands[v]}` (strands 0-based).
    pub fn poly_on_block(&self, f: &TruncSeries, source: u16, strands: &[(usize, bool)]) -> TruncSeries {
        let mut out = TruncSeries::zero(self.field(), &self.vars, self.order);
        let args: Vec<TruncSeries> = strands
            .iter()
            .map(|&(k, neg)| {
                let z = TruncSeries::var(self.field(), &self.vars, k, self.order);
                let x = &z + &TruncSeries::constant(self.b_at(source, k), &self.vars, self.order);
                if neg {
                    x.neg()
                } else {
                    x
                }
            })
            .collect();
        for (e, c) in f.terms() {
            let mut t = TruncSeries::constant(c, &self.vars, self.order);
            for (v, a) in args.iter().enumerate() {
                if e[v] > 0 {
                    t = &t * &a.pow(e[v] as u32);
                }
            }
            out = &out + &t;
        }
        out
    }

    // ----- multiplication -----

    fn lin_form(&self, k: usize, sign: i64) -> Vec<FieldElement> {
        let f = self.field();
        let mut lin = vec![f.zero(); self.n];
        lin[k] = f.one();
        lin[k + 1] = f.from_i64(sign);
        lin
    }

    /// `a · s_k` (0-based k).
    pub fn right_mul_crossing(&self, a: &SergeevElement, k: usize) -> SergeevResult<SergeevElement> {
        let mut out = self.zero();
        for (key, h) in &a.terms {
            let i = key.source;
            let pd = &self.pairs[i as usize][k];
            let si = pd.swapped;
            let h_sw = h.swap_vars(k, k + 1);

            // Crossing passes left through c^ε and the function.
            let mut perm = key.perm;
            perm.swap(k, k + 1);
            let both = (key.eps >> k) & 3 == 3;
            let main = if both { h_sw.neg() } else { h_sw.clone() };
            out.insert(TermKey { perm, eps: swap_bits(key.eps, k), source: si }, main);

            // −(h^s e(si) − h e(i))/(x_k − x_{k+1})
            if si != i {
                let inv_si = self.pairs[si as usize][k].inv_diff.as_ref().ok_or_else(|| self.not_invertible(si))?;
                let inv_i = pd.inv_diff.as_ref().ok_or_else(|| self.not_invertible(i))?;
                out.insert(TermKey { source: si, ..*key }, (&h_sw * inv_si).neg());
                out.insert(*key, h * inv_i);
            } else {
                let q = (&h_sw - h).div_exact_linear(&self.lin_form(k, -1))?;
                out.insert(*key, q.neg());
            }

            // +c_k c_{k+1} (h^s e(si) − h̄ e(−−i))/(x_k + x_{k+1})
            let (e1, n1) = token_right(key.eps, k);
            let (eps2, n2) = token_right(e1, k + 1);
            let sign = if n1 ^ n2 { -self.field().one() } else { self.field().one() };
            let ni = pd.negated;
            let h_bar = h.neg_var(k).neg_var(k + 1);
            if ni != si {
                let inv_ni = self.pairs[ni as usize][k].inv_sum.as_ref().ok_or_else(|| self.not_invertible(ni))?;
                let inv_si = self.pairs[si as usize][k].inv_sum.as_ref().ok_or_else(|| self.not_invertible(si))?;
                out.insert(TermKey { perm: key.perm, eps: eps2, source: ni }, (&h_bar * inv_ni).scale(&-&sign));
                out.insert(TermKey { perm: key.perm, eps: eps2, source: si }, (&h_sw * inv_si).scale(&sign));
            } else {
                let q = (&h_bar - &h_sw).div_exact_linear(&self.lin_form(k, 1))?;
                out.insert(TermKey { perm: key.perm, eps: eps2, source: si }, q.scale(&-&sign));
            }
        }
        Ok(out)
    }

    fn not_invertible(&self, idx: u16) -> SergeevError {
        SergeevError::NotInvertibleDifference(tuple_string(self.tuple(idx)))
    }

    /// `a · c_k` (0-based k).
    pub fn right_mul_token(&self, a: &SergeevElement, k: usize) -> SergeevElement {
        let mut out = self.zero();
        for (key, h) in &a.terms {
            let (eps, neg) = token_right(key.eps, k);
            let hk = h.neg_var(k);
            let source = self.flip[key.source as usize][k];
            out.insert(TermKey { perm: key.perm, eps, source }, if neg { hk.neg() } else { hk });
        }
        out
    }

    /// Product `a·b`.
    pub fn mul(&self, a: &SergeevElement, b: &SergeevElement) -> SergeevResult<SergeevElement> {
        if a.n != self.n || b.n != self.n {
            return Err(SergeevError::ContextMismatch);
        }
        let mut groups: BTreeMap<(Perm, u8), Vec<(u16, &TruncSeries)>> = BTreeMap::new();
        for (key, f) in &b.terms {
            groups.entry((key.perm, key.eps)).or_default().push((key.source, f));
        }
        let mut out = self.zero();
        for ((perm, eps), list) in groups {
            let mut t = a.clone();
            for k in reduced_word(&perm, self.n) {
                t = self.right_mul_crossing(&t, k)?;
            }
            for l in 0..self.n {
                if eps & (1 << l) != 0 {
                    t = self.right_mul_token(&t, l);
                }
            }
            let mut by_source: BTreeMap<u16, Vec<(&TermKey, &TruncSeries)>> = BTreeMap::new();
            for (key, h) in &t.terms {
                by_source.entry(key.source).or_default().push((key, h));
            }
            for (src, f) in list {
                if let Some(ts) = by_source.get(&src) {
                    for (key, h) in ts {
                        out.insert(**key, *h * f);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Product of several factors, left to right.
    pub fn product(&self, factors: &[&SergeevElement]) -> SergeevResult<SergeevElement> {
        let mut acc = self.identity();
        for f in factors {
            acc = self.mul(&acc, f)?;
        }
        Ok(acc)
    }

    /// `e(target) · s_k · e(source)` (1-based k).
    pub fn projected_crossing(&self, source: &[FieldElement], target: &[FieldElement], k: usize) -> SergeevResult<SergeevElement> {
        let s = self.crossing(k)?;
        let left = self.mul(&self.idempotent(target)?, &s)?;
        self.mul(&left, &self.idempotent(source)?)
    }

    /// Random element with `nterms` terms of polynomial coefficients of
    /// degree ≤ `degree`, of the given parity when requested.
    pub fn random_element<R: Rng>(&self, rng: &mut R, nterms: usize, degree: u32, parity: Option<u8>) -> SergeevElement {
        let mut out = self.zero();
        for _ in 0..nterms {
            let mut perm = IDENTITY_PERM;
            perm[..self.n].shuffle(rng);
            let mut eps: u8 = rng.gen_range(0..(1u16 << self.n)) as u8;
            if let Some(p) = parity {
                if eps.count_ones() % 2 != p as u32 {
                    eps ^= 1;
                }
            }
            let source = rng.gen_range(0..self.tuples.len()) as u16;
            let mut h = TruncSeries::zero(self.field(), &self.vars, self.order);
            for _ in 0..3 {
                let mut e = [0u8; MAX_VARS];
                let mut left = rng.gen_range(0..=degree);
                for v in 0..self.n {
                    let d = rng.gen_range(0..=left);
                    e[v] = d as u8;
                    left -= d;
                }
                // Small integers in characteristic 0 keep coefficient growth in check.
                let c = if self.field().characteristic() == 0 {
                    self.field().from_i64(rng.gen_range(-3..=3))
                } else {
                    self.field().random_element(rng)
                };
                h.add_term(e, c);
            }
            out.insert(TermKey { perm, eps, source }, h);
        }
        out
    }

    // ----- verification helpers -----

    /// Compare two elements blockwise modulo total degree `n`.
    pub fn compare(&self, case: CaseResult, label: &str, lhs: &SergeevElement, rhs: &SergeevElement, n: u32) -> CaseResult {
        if !case.passed() {
            return case;
        }
        let mut keys: Vec<&TermKey> = lhs.terms.keys().chain(rhs.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        for key in keys {
            let zero = TruncSeries::zero(self.field(), &self.vars, self.order);
            let l = lhs.terms.get(key).unwrap_or(&zero);
            let r = rhs.terms.get(key).unwrap_or(&zero);
            let ord = l.order().min(r.order());
            if ord < n {
                return case.fail(format!("{label}: effective order {ord} below {n} on {}", self.describe_key(key)));
            }
            if let Some((exponent, c)) = (l - r).truncate(n).first_nonzero() {
                let mut out = case.fail(label.to_string());
                out.residual = Some(Residual { exponent, coefficient: c.to_string(), block: Some(self.describe_key(key)) });
                return out;
            }
        }
        case
    }

    /// Compare at the lowest order either side carries; when both sides are
    /// polynomials below that order the comparison is an exact identity.
    pub fn compare_exact(&self, case: CaseResult, label: &str, lhs: &SergeevElement, rhs: &SergeevElement) -> CaseResult {
        let all = || lhs.terms.values().chain(rhs.terms.values());
        let ord = all().map(|s| s.order()).min().unwrap_or(self.order);
        let exact = all().all(|s| s.max_degree().is_none_or(|d| d + 1 < ord));
        let out = self.compare(case, label, lhs, rhs, ord);
        if exact {
            out.with_note("exact polynomial identity")
        } else {
            out.with_note(format!("compared modulo degree {ord}"))
        }
    }

    fn case(&self, id: String, extra: &[(&str, String)]) -> CaseResult {
        let mut ins = inputs([("n", self.n.to_string()), ("N", self.order.to_string())]);
        for (k, v) in extra {
            ins.insert(k.to_string(), v.clone());
        }
        CaseResult::new(id, ins)
    }

    fn run(&self, case: CaseResult, f: impl FnOnce(CaseResult) -> SergeevResult<CaseResult>) -> CaseResult {
        let fallback = case.clone();
        f(case).unwrap_or_else(|e| fallback.error("evaluation error", e))
    }

    /// Defining relations on generators, compared at the full working order.
    pub fn relation_suite(&self) -> Vec<CaseResult> {
        let n = self.n;
        let mut out = Vec::new();
        let one = self.identity();
        let rel = |id: String, f: &dyn Fn() -> SergeevResult<(SergeevElement, SergeevElement)>| {
            let case = self.case(id, &[]);
            self.run(case, |c| {
                let (l, r) = f()?;
                Ok(self.compare_exact(c, "relation", &l, &r))
            })
        };
        let m = |a: &SergeevElement, b: &SergeevElement| self.mul(a, b);
        for k in 1..=n {
            out.push(rel(format!("token_square[{k}]"), &|| {
                let c = self.token(k)?;
                Ok((m(&c, &c)?, one.neg()))
            }));
            for l in 1..=n {
                if l != k {
                    out.push(rel(format!("token_anticommute[{k},{l}]"), &|| {
                        let (ck, cl) = (self.token(k)?, self.token(l)?);
                        Ok((m(&ck, &cl)?, m(&cl, &ck)?.neg()))
                    }));
                }
                out.push(rel(format!("dot_token[{k},{l}]"), &|| {
                    let (x, c) = (self.dot(k)?, self.token(l)?);
                    let rhs = m(&c, &x)?;
                    Ok((m(&x, &c)?, if k == l { rhs.neg() } else { rhs }))
                }));
                if l > k {
                    out.push(rel(format!("dots_commute[{k},{l}]"), &|| {
                        let (a, b) = (self.dot(k)?, self.dot(l)?);
                        Ok((m(&a, &b)?, m(&b, &a)?))
                    }));
                }
            }
        }
        for k in 1..n {
            out.push(rel(format!("crossing_square[{k}]"), &|| {
                let s = self.crossing(k)?;
                Ok((m(&s, &s)?, one.clone()))
            }));
            if k + 1 < n {
                out.push(rel(format!("braid[{k}]"), &|| {
                    let (a, b) = (self.crossing(k)?, self.crossing(k + 1)?);
                    Ok((self.product(&[&a, &b, &a])?, self.product(&[&b, &a, &b])?))
                }));
            }
            for l in 1..n {
                if l > k + 1 {
                    out.push(rel(format!("crossings_commute[{k},{l}]"), &|| {
                        let (a, b) = (self.crossing(k)?, self.crossing(l)?);
                        Ok((m(&a, &b)?, m(&b, &a)?))
                    }));
                }
            }
            out.push(rel(format!("token_slide_up[{k}]"), &|| {
                let s = self.crossing(k)?;
                Ok((m(&s, &self.token(k)?)?, m(&self.token(k + 1)?, &s)?))
            }));
            out.push(rel(format!("token_slide_down[{k}]"), &|| {
                let s = self.crossing(k)?;
                Ok((m(&self.token(k)?, &s)?, m(&s, &self.token(k + 1)?)?))
            }));
            out.push(rel(format!("dot_crossing[{k}]"), &|| {
                let s = self.crossing(k)?;
                let lhs = m(&s, &self.dot(k)?)?.sub(&m(&self.dot(k + 1)?, &s)?)?;
                let cc = m(&self.token(k)?, &self.token(k + 1)?)?;
                Ok((lhs, one.sub(&cc)?))
            }));
            out.push(rel(format!("dot_crossing_reflected[{k}]"), &|| {
                let s = self.crossing(k)?;
                let lhs = m(&self.dot(k)?, &s)?.sub(&m(&s, &self.dot(k + 1)?)?)?;
                let cc = m(&self.token(k)?, &self.token(k + 1)?)?;
                Ok((lhs, one.add(&cc)?))
            }));
            for l in 1..=n {
                if l != k && l != k + 1 {
                    out.push(rel(format!("crossing_far_token[{k},{l}]"), &|| {
                        let (s, c) = (self.crossing(k)?, self.token(l)?);
                        Ok((m(&s, &c)?, m(&c, &s)?))
                    }));
                    out.push(rel(format!("crossing_far_dot[{k},{l}]"), &|| {
                        let (s, x) = (self.crossing(k)?, self.dot(l)?);
                        Ok((m(&s, &x)?, m(&x, &s)?))
                    }));
                }
            }
        }
        out
    }

    /// `(ab)c = a(bc)` on random triples, compared modulo `n`; also checks
    /// that parity is additive on homogeneous factors.
    pub fn verify_associativity<R: Rng>(&self, rng: &mut R, count: usize, n: u32) -> Vec<CaseResult> {
        (0..count)
            .map(|t| {
                let parities: Vec<u8> = (0..3).map(|_| rng.gen_range(0..2)).collect();
                let a = self.random_element(rng, 2, 2, Some(parities[0]));
                let b = self.random_element(rng, 2, 2, Some(parities[1]));
                let c = self.random_element(rng, 2, 2, Some(parities[2]));
                let case = self.case(format!("associativity[{t}]"), &[("N", n.to_string())]);
                self.run(case, |case| {
                    let ab = self.mul(&a, &b)?;
                    let left = self.mul(&ab, &c)?;
                    let right = self.mul(&a, &self.mul(&b, &c)?)?;
                    let expected = (parities.iter().sum::<u8>()) % 2;
                    let par_ok = left.parity().is_none_or(|p| p == expected);
                    Ok(self.compare(case, "(ab)c = a(bc)", &left, &right, n).require("parity is additive", par_ok))
                })
            })
            .collect()
    }

    /// Projections `e(t)·s_k·e(i)` vanish unless `t ∈ {i, s_k i, −−i}`, and
    /// the allowed projections add up to `s_k e(i)`.
    pub fn verify_electric(&self, source: &[FieldElement], k: usize) -> CaseResult {
        let case = self.case(format!("electric[{}]", tuple_string(source)), &[("i", tuple_string(source)), ("k", k.to_string())]);
        self.run(case, |mut case| {
            let kk = self.check_strand(k, true)?;
            let src = self.tuple_index(source)?;
            let s_e = self.mul(&self.crossing(k)?, &self.idempotent(source)?)?;
            let pd = &self.pairs[src as usize][kk];
            let allowed = [src, pd.swapped, pd.negated];
            let mut total = self.zero();
            let mut nonzero = 0;
            for (t_idx, t) in self.tuples.iter().enumerate() {
                let proj = self.mul(&self.idempotent(t)?, &s_e)?;
                if allowed.contains(&(t_idx as u16)) {
                    if !proj.is_zero_mod(self.order) {
                        nonzero += 1;
                    }
                    total = total.add(&proj)?;
                } else {
                    case = self.compare(case, &format!("e{}·s·e{} = 0", tuple_string(t), tuple_string(source)), &proj, &self.zero(), self.order);
                }
            }
            Ok(self
                .compare(case, "allowed projections sum to s·e(i)", &total, &s_e, self.order)
                .with_note(format!("{nonzero} nonzero projections")))
        })
    }

    /// Two-strand projected crossings onto the same and the negated block.
    pub fn verify_power(&self, i: &FieldElement, j: &FieldElement) -> CaseResult {
        let src = [i.clone(), j.clone()];
        let case = self.case(format!("power[{i},{j}]"), &[("i", i.to_string()), ("j", j.to_string())]);
        self.run(case, |mut case| {
            let idx = self.tuple_index(&src)?;
            let mut applied = false;
            if i != j {
                let p = self.projected_crossing(&src, &src, 1)?;
                let inv = self.pairs[idx as usize][0].inv_diff.clone().ok_or_else(|| self.not_invertible(idx))?;
                let gamma = (self.b_at(idx, 0) - self.b_at(idx, 1)).inv().map_err(CartanError::from)?;
                case = case.require("leading coefficient (b(i)−b(j))⁻¹", inv.constant_term() == gamma);
                case = self.compare(case, "e(ij)·s·e(ij) = 1/(x−y)", &p, &self.pin(&src, inv)?, self.order);
                applied = true;
            }
            if *i != -j {
                let tgt = [-i, -j];
                let p = self.projected_crossing(&src, &tgt, 1)?;
                let inv = self.pairs[idx as usize][0].inv_sum.clone().ok_or_else(|| self.not_invertible(idx))?;
                let rhs = self.term(IDENTITY_PERM, 0b11, &src, inv.neg())?;
                case = self.compare(case, "e(−i,−j)·s·e(ij) = −c₁c₂/(x+y)", &p, &rhs, self.order);
                applied = true;
            }
            Ok(if applied { case } else { case.with_note("no case applies") })
        })
    }

    /// Demazure crossing identity for a polynomial `f(x, y)` in the actual
    /// dots; `f` is a two-variable series whose terms are all kept.
    pub fn verify_demazure_crossing(&self, i: &FieldElement, j: &FieldElement, f: &TruncSeries) -> CaseResult {
        let src = [i.clone(), j.clone()];
        let case = self.case(format!("demazure[{i},{j}]"), &[("i", i.to_string()), ("j", j.to_string()), ("f", f.to_string())]);
        self.run(case, |case| {
            let idx = self.tuple_index(&src)?;
            let fxy = self.poly_on_block(f, idx, &[(0, false), (1, false)]);
            let fyx = self.poly_on_block(f, idx, &[(1, false), (0, false)]);
            let fbar = self.poly_on_block(f, idx, &[(0, true), (1, true)]);
            self.demazure_common(case, &src, idx, fxy, fyx, fbar)
        })
    }

    /// Same identity for an arbitrary series on an equal-colour block,
    /// given in block variables.
    pub fn verify_demazure_series(&self, i: &FieldElement, f: &TruncSeries) -> CaseResult {
        let src = [i.clone(), i.clone()];
        let case = self.case(format!("demazure_series[{i}]"), &[("i", i.to_string())]);
        self.run(case, |case| {
            let idx = self.tuple_index(&src)?;
            let f = f.with_order(self.order.min(f.order()));
            let fyx = f.swap_vars(0, 1);
            let fbar = f.neg_var(0).neg_var(1);
            self.demazure_common(case, &src, idx, f, fyx, fbar)
        })
    }

    fn demazure_common(
        &self,
        case: CaseResult,
        src: &[FieldElement; 2],
        idx: u16,
        fxy: TruncSeries,
        fyx: TruncSeries,
        fbar: TruncSeries,
    ) -> SergeevResult<CaseResult> {
        let p = self.projected_crossing(src, src, 1)?;
        let lhs = self.mul(&self.pin(src, fxy.clone())?, &p)?.sub(&self.mul(&p, &self.pin(src, fyx.clone())?)?)?;
        let diff = &fxy - &fyx;
        let dem = match &self.pairs[idx as usize][0].inv_diff {
            Some(inv) => &diff * inv,
            None => diff.div_exact_linear(&self.lin_form(0, -1))?,
        };
        let mut rhs = self.pin(src, dem)?;
        if src[0].is_zero() && src[1].is_zero() {
            let tok = (&fbar - &fyx).div_exact_linear(&self.lin_form(0, 1))?;
            rhs = rhs.sub(&self.term(IDENTITY_PERM, 0b11, src, tok)?)?;
        }
        Ok(self.compare(case, "f(x,y)·P − P·f(y,x) = ∂f − δ c₁c₂ token term", &lhs, &rhs, self.order.saturating_sub(1)))
    }

    /// `e(ij)·s·e(ji)·s·e(ij)` against its closed form.
    pub fn verify_double_crossing(&self, i: &FieldElement, j: &FieldElement) -> CaseResult {
        let src = [i.clone(), j.clone()];
        let mid = [j.clone(), i.clone()];
        let case = self.case(format!("double_crossing[{i},{j}]"), &[("i", i.to_string()), ("j", j.to_string())]);
        self.run(case, |case| {
            let idx = self.tuple_index(&src)?;
            let s = self.crossing(1)?;
            let lhs = self.product(&[&self.idempotent(&src)?, &s, &self.idempotent(&mid)?, &s, &self.idempotent(&src)?])?;
            let pd = &self.pairs[idx as usize][0];
            let one = self.one_series();
            let rhs = if i.is_zero() && j.is_zero() {
                one
            } else if i == j {
                let m = pd.inv_sum.as_ref().ok_or_else(|| self.not_invertible(idx))?;
                &one - &(m * m)
            } else {
                let l = pd.inv_diff.as_ref().ok_or_else(|| self.not_invertible(idx))?;
                let m = pd.inv_sum.as_ref().ok_or_else(|| self.not_invertible(idx))?;
                &(&one - &(l * l)) - &(m * m)
            };
            Ok(self.compare(case, "double crossing", &lhs, &self.pin(&src, rhs)?, self.order))
        })
    }

    /// Coloured braid relation on three strands with its correction terms.
    pub fn verify_colored_braid(&self, i: &FieldElement, j: &FieldElement, k: &FieldElement) -> CaseResult {
        let case = self.case(
            format!("colored_braid[{i},{j},{k}]"),
            &[("i", i.to_string()), ("j", j.to_string()), ("k", k.to_string())],
        );
        self.run(case, |case| {
            if self.n != 3 {
                return Err(SergeevError::TooManyStrands(self.n));
            }
            let e = |t: [&FieldElement; 3]| self.idempotent(&[t[0].clone(), t[1].clone(), t[2].clone()]);
            let (s1, s2) = (self.crossing(1)?, self.crossing(2)?);
            let left = self.product(&[&e([k, j, i])?, &s1, &e([j, k, i])?, &s2, &e([j, i, k])?, &s1, &e([i, j, k])?])?;
            let right = self.product(&[&e([k, j, i])?, &s2, &e([k, i, j])?, &s1, &e([i, k, j])?, &s2, &e([i, j, k])?])?;
            let lhs = left.sub(&right)?;
            let src = [i.clone(), j.clone(), k.clone()];
            let idx = self.tuple_index(&src)?;
            let mut rhs = self.zero();
            let mut note = "no correction term";
            if i == k && i != j {
                let f = self.p_quotient(idx)?;
                rhs = self.pin(&src, f.clone())?;
                if i.is_zero() {
                    rhs = rhs.sub(&self.term(IDENTITY_PERM, 0b101, &src, f.neg_var(2))?)?;
                }
                note = "p(x,y) quotient term";
            } else if i == j && j == k && !i.is_zero() {
                let z = |v| TruncSeries::var(self.field(), &self.vars, v, self.order);
                let c = |v: usize| TruncSeries::constant(self.b_at(idx, v), &self.vars, self.order);
                let x12 = &(&z(0) + &c(0)) + &(&z(1) + &c(1));
                let x23 = &(&z(1) + &c(1)) + &(&z(2) + &c(2));
                let inner = &(&x12 * &x12).inv()? - &(&x23 * &x23).inv()?;
                let mut lin = vec![self.field().zero(); 3];
                lin[0] = self.field().one();
                lin[2] = -self.field().one();
                rhs = self.pin(&src, inner.div_exact_linear(&lin)?)?.neg();
                note = "(x+y)/(y+z) correction term";
            }
            Ok(self.compare(case, "braid difference", &lhs, &rhs, self.order.saturating_sub(1)).with_note(note))
        })
    }

    /// `(p(x,y) − p(z,y))/(x − z)` on a block (a, b, a) with b ≠ ±a, where
    /// p(x,y) = 1 − 2(x²+y²)/(x²−y²)².
    fn p_quotient(&self, idx: u16) -> SergeevResult<TruncSeries> {
        let z = |v| TruncSeries::var(self.field(), &self.vars, v, self.order);
        let c = |v: usize| TruncSeries::constant(self.b_at(idx, v), &self.vars, self.order);
        let x: Vec<TruncSeries> = (0..3).map(|v| &z(v) + &c(v)).collect();
        let one = self.one_series();
        let two = self.field().from_i64(2);
        let p = |a: &TruncSeries, b: &TruncSeries| -> SergeevResult<TruncSeries> {
            let (a2, b2) = (a * a, b * b);
            let d = &a2 - &b2;
            Ok(&one - &(&a2 + &b2).scale(&two).try_div(&(&d * &d))?)
        };
        let diff = &p(&x[0], &x[1])? - &p(&x[2], &x[1])?;
        let mut lin = vec![self.field().zero(); 3];
        lin[0] = self.field().one();
        lin[2] = -self.field().one();
        Ok(diff.div_exact_linear(&lin)?)
    }
}

impl fmt::Display for SergeevElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (key, s) in &self.terms {
            let perm: Vec<String> = key.perm[..self.n].iter().map(|p| (p + 1).to_string()).collect();
            writeln!(f, "[w={} ε={:0width$b} src#{}] {}", perm.join(""), key.eps, key.source, s, width = self.n)?;
        }
        Ok(())
    }
}
