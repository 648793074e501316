//! Exact scalars: ℚ, 𝔽_p, 𝔽_{p²} and multiquadratic towers over ℚ.
//!
//! An element of a tower with adjoined roots `s_1, …, s_m` (where `s_k² = a_k`
//! for base scalars `a_k`) is stored as coordinates in the monomial basis
//! `s_S = Π_{k∈S} s_k`, indexed by the bitmask `S`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

/// Most roots a characteristic-zero tower may carry.
pub const MAX_TOWER_ROOTS: usize = 4;
/// Largest prime for which exhaustive square-root search is allowed.
pub const MAX_SEARCH_PRIME: u64 = 101;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} already has a square root in the field")]
    AlreadyResolvable(String),
    #[error("cannot adjoin the square root of zero")]
    ZeroRadicand,
    #[error("{0} has no square root in the field")]
    NoRoot(String),
    #[error("square-root selection for {0} is ambiguous under the given predicate")]
    AmbiguousRoot(String),
    #[error("characteristic {0} is neither 0 nor an odd prime")]
    BadCharacteristic(u64),
    #[error("tower already carries {MAX_TOWER_ROOTS} roots")]
    TowerTooLarge,
    #[error("characteristic-p fields carry at most one quadratic extension")]
    ExtensionLimit,
    #[error("{0} is outside the supported radicand scope")]
    UnsupportedRadicand(String),
    #[error("prime {0} exceeds the exhaustive search bound {MAX_SEARCH_PRIME}")]
    PrimeTooLarge(u64),
    #[error("operands live in different fields")]
    FieldMismatch,
}

pub type FieldResult<T> = Result<T, FieldError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Radicands {
    /// Characteristic 0: rational radicands plus the product table
    /// `factor[S] = Π_{k∈S} a_k` used when multiplying monomials.
    Rational { roots: Vec<BigRational>, factor: Vec<BigRational> },
    /// Characteristic p: optional non-square `d` with `θ² = d`.
    Modular { p: u64, theta_sq: Option<u64> },
}

/// Description of a field: its characteristic and the ordered list of
/// adjoined square roots. Each adjoined symbol is, by construction, the
/// distinguished root of its radicand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldDescriptor {
    radicands: Radicands,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Coords {
    Q(Vec<BigRational>),
    P([u64; 2]),
}

/// An element of a field described by a [`FieldDescriptor`].
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<FieldDescriptor>,
    coords: Coords,
}

fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn mod_inv(a: u64, p: u64) -> u64 {
    mod_pow(a, p - 2, p)
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

fn factor_table(roots: &[BigRational]) -> Vec<BigRational> {
    (0..1usize << roots.len())
        .map(|mask| {
            roots
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .fold(BigRational::one(), |acc, (_, a)| acc * a)
        })
        .collect()
}

impl FieldDescriptor {
    /// The rational numbers.
    pub fn rationals() -> Arc<Self> {
        Arc::new(FieldDescriptor {
            radicands: Radicands::Rational { roots: Vec::new(), factor: vec![BigRational::one()] },
        })
    }

    /// The prime field 𝔽_p for an odd prime `p`.
    pub fn prime(p: u64) -> FieldResult<Arc<Self>> {
        if !is_odd_prime(p) {
            return Err(FieldError::BadCharacteristic(p));
        }
        Ok(Arc::new(FieldDescriptor { radicands: Radicands::Modular { p, theta_sq: None } }))
    }

    /// 𝔽_{p²}, presented as 𝔽_p(θ) with θ² the least quadratic non-residue.
    pub fn prime_square(p: u64) -> FieldResult<Arc<Self>> {
        let base = Self::prime(p)?;
        let d = (2..p).find(|&d| mod_pow(d, (p - 1) / 2, p) == p - 1).expect("odd primes have non-residues");
        base.adjoin_root(&base.from_i64(d as i64))
    }

    /// `0` or the prime `p`.
    pub fn characteristic(&self) -> u64 {
        match &self.radicands {
            Radicands::Rational { .. } => 0,
            Radicands::Modular { p, .. } => *p,
        }
    }

    /// Number of adjoined roots.
    pub fn num_roots(&self) -> usize {
        match &self.radicands {
            Radicands::Rational { roots, .. } => roots.len(),
            Radicands::Modular { theta_sq, .. } => theta_sq.is_some() as usize,
        }
    }

    /// Dimension over the base field.
    pub fn dimension(&self) -> usize {
        1 << self.num_roots()
    }

    /// Radicands of the adjoined roots, in adjunction order.
    pub fn radicands(self: &Arc<Self>) -> Vec<FieldElement> {
        match &self.radicands {
            Radicands::Rational { roots, .. } => roots.iter().map(|a| self.from_rational(a.clone())).collect(),
            Radicands::Modular { theta_sq, .. } => theta_sq.iter().map(|&d| self.from_i64(d as i64)).collect(),
        }
    }

    /// Adjoin a square root of the base scalar `d`.
    pub fn adjoin_root(self: &Arc<Self>, d: &FieldElement) -> FieldResult<Arc<Self>> {
        if d.is_zero() {
            return Err(FieldError::ZeroRadicand);
        }
        let d = d.lift_to(self)?;
        if d.sqrt_in_field()?.is_some() {
            return Err(FieldError::AlreadyResolvable(d.to_string()));
        }
        match &self.radicands {
            Radicands::Rational { roots, .. } => {
                if roots.len() >= MAX_TOWER_ROOTS {
                    return Err(FieldError::TowerTooLarge);
                }
                let q = d.to_rational().ok_or_else(|| FieldError::UnsupportedRadicand(d.to_string()))?;
                let mut roots = roots.clone();
                roots.push(q);
                let factor = factor_table(&roots);
                Ok(Arc::new(FieldDescriptor { radicands: Radicands::Rational { roots, factor } }))
            }
            Radicands::Modular { p, theta_sq } => {
                if theta_sq.is_some() {
                    return Err(FieldError::ExtensionLimit);
                }
                let r = d.residue().ok_or_else(|| FieldError::UnsupportedRadicand(d.to_string()))?;
                Ok(Arc::new(FieldDescriptor { radicands: Radicands::Modular { p: *p, theta_sq: Some(r) } }))
            }
        }
    }

    pub fn zero(self: &Arc<Self>) -> FieldElement {
        let coords = match &self.radicands {
            Radicands::Rational { .. } => Coords::Q(vec![BigRational::zero(); self.dimension()]),
            Radicands::Modular { .. } => Coords::P([0, 0]),
        };
        FieldElement { field: self.clone(), coords }
    }

    pub fn one(self: &Arc<Self>) -> FieldElement {
        self.from_i64(1)
    }

    pub fn from_i64(self: &Arc<Self>, n: i64) -> FieldElement {
        self.from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// The scalar `n/d`; panics if `d` vanishes in the field.
    pub fn from_ratio(self: &Arc<Self>, n: i64, d: i64) -> FieldElement {
        self.from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Image of a rational number; panics if the denominator vanishes mod p.
    pub fn from_rational(self: &Arc<Self>, q: BigRational) -> FieldElement {
        let mut z = self.zero();
        match (&mut z.coords, &self.radicands) {
            (Coords::Q(c), _) => c[0] = q,
            (Coords::P(c), Radicands::Modular { p, .. }) => {
                let pb = BigInt::from(*p);
                let reduce = |x: &BigInt| -> u64 {
                    let r = ((x % &pb) + &pb) % &pb;
                    u64::try_from(r).expect("residue fits")
                };
                let den = reduce(q.denom());
                assert!(den != 0, "denominator vanishes in characteristic {p}");
                c[0] = reduce(q.numer()) * mod_inv(den, *p) % p;
            }
            _ => unreachable!(),
        }
        z
    }

    /// The adjoined root `s_k` (0-based adjunction index).
    pub fn root(self: &Arc<Self>, k: usize) -> FieldElement {
        assert!(k < self.num_roots(), "root index out of range");
        let mut z = self.zero();
        match &mut z.coords {
            Coords::Q(c) => c[1 << k] = BigRational::one(),
            Coords::P(c) => c[1] = 1,
        }
        z
    }

    /// ħ = −1/2.
    pub fn hbar(self: &Arc<Self>) -> FieldElement {
        self.from_ratio(-1, 2)
    }

    /// All elements of a finite field, in coordinate order.
    pub fn elements(self: &Arc<Self>) -> Option<Vec<FieldElement>> {
        match &self.radicands {
            Radicands::Rational { .. } => None,
            Radicands::Modular { p, theta_sq } => {
                let ts = if theta_sq.is_some() { *p } else { 1 };
                let mut out = Vec::new();
                for t in 0..ts {
                    for a in 0..*p {
                        out.push(FieldElement { field: self.clone(), coords: Coords::P([a, t]) });
                    }
                }
                Some(out)
            }
        }
    }

    /// A small pseudo-random element, for property checks.
    pub fn random_element<R: Rng>(self: &Arc<Self>, rng: &mut R) -> FieldElement {
        match &self.radicands {
            Radicands::Rational { .. } => {
                let c = (0..self.dimension())
                    .map(|_| {
                        if rng.gen_bool(0.3) {
                            BigRational::zero()
                        } else {
                            BigRational::new(BigInt::from(rng.gen_range(-9i64..=9)), BigInt::from(rng.gen_range(1i64..=6)))
                        }
                    })
                    .collect();
                FieldElement { field: self.clone(), coords: Coords::Q(c) }
            }
            Radicands::Modular { p, theta_sq } => {
                let t = if theta_sq.is_some() { rng.gen_range(0..*p) } else { 0 };
                FieldElement { field: self.clone(), coords: Coords::P([rng.gen_range(0..*p), t]) }
            }
        }
    }

    /// Whether `other` extends this field by appending roots.
    pub fn is_prefix_of(&self, other: &FieldDescriptor) -> bool {
        match (&self.radicands, &other.radicands) {
            (Radicands::Rational { roots: a, .. }, Radicands::Rational { roots: b, .. }) => b.starts_with(a),
            (Radicands::Modular { p: p1, theta_sq: t1 }, Radicands::Modular { p: p2, theta_sq: t2 }) => {
                p1 == p2 && (t1.is_none() || t1 == t2)
            }
            _ => false,
        }
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.radicands {
            Radicands::Rational { roots, .. } if roots.is_empty() => write!(f, "Q"),
            Radicands::Rational { roots, .. } => {
                let rs: Vec<String> = roots.iter().map(|a| format!("sqrt({a})")).collect();
                write!(f, "Q({})", rs.join(", "))
            }
            Radicands::Modular { p, theta_sq: None } => write!(f, "F_{p}"),
            Radicands::Modular { p, theta_sq: Some(d) } => write!(f, "F_{p}(sqrt({d}))"),
        }
    }
}

impl FieldElement {
    pub fn field(&self) -> &Arc<FieldDescriptor> {
        &self.field
    }

    pub fn characteristic(&self) -> u64 {
        self.field.characteristic()
    }

    fn same_field(&self, other: &FieldElement) -> FieldResult<()> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field == other.field {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch)
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.coords {
            Coords::Q(c) => c.iter().all(|x| x.is_zero()),
            Coords::P(c) => c[0] == 0 && c[1] == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.coords {
            Coords::Q(c) => c[0].is_one() && c[1..].iter().all(|x| x.is_zero()),
            Coords::P(c) => c[0] == 1 && c[1] == 0,
        }
    }

    /// Whether the element lies in the prime field (ℚ or 𝔽_p).
    pub fn is_base(&self) -> bool {
        match &self.coords {
            Coords::Q(c) => c[1..].iter().all(|x| x.is_zero()),
            Coords::P(c) => c[1] == 0,
        }
    }

    /// The rational value of a base element in characteristic 0.
    pub fn to_rational(&self) -> Option<BigRational> {
        match &self.coords {
            Coords::Q(c) if self.is_base() => Some(c[0].clone()),
            _ => None,
        }
    }

    /// The residue `0..p` of a base element in characteristic p.
    pub fn residue(&self) -> Option<u64> {
        match &self.coords {
            Coords::P(c) if c[1] == 0 => Some(c[0]),
            _ => None,
        }
    }

    /// Coordinates `(a, t)` of `a + tθ` in characteristic p.
    pub fn modular_coords(&self) -> Option<[u64; 2]> {
        match &self.coords {
            Coords::P(c) => Some(*c),
            Coords::Q(_) => None,
        }
    }

    /// Monomial-basis coordinates in characteristic 0.
    pub fn rational_coords(&self) -> Option<&[BigRational]> {
        match &self.coords {
            Coords::Q(c) => Some(c),
            Coords::P(_) => None,
        }
    }

    /// Embed into a field extending this one.
    pub fn lift_to(&self, target: &Arc<FieldDescriptor>) -> FieldResult<FieldElement> {
        if Arc::ptr_eq(&self.field, target) || *self.field == **target {
            return Ok(FieldElement { field: target.clone(), coords: self.coords.clone() });
        }
        if !self.field.is_prefix_of(target) {
            return Err(FieldError::FieldMismatch);
        }
        let coords = match &self.coords {
            Coords::Q(c) => {
                let mut v = vec![BigRational::zero(); target.dimension()];
                v[..c.len()].clone_from_slice(c);
                Coords::Q(v)
            }
            Coords::P(c) => Coords::P(*c),
        };
        Ok(FieldElement { field: target.clone(), coords })
    }

    pub fn try_add(&self, other: &FieldElement) -> FieldResult<FieldElement> {
        self.same_field(other)?;
        let coords = match (&self.coords, &other.coords, &*self.field) {
            (Coords::Q(a), Coords::Q(b), _) => Coords::Q(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            (Coords::P(a), Coords::P(b), f) => {
                let p = f.characteristic();
                Coords::P([(a[0] + b[0]) % p, (a[1] + b[1]) % p])
            }
            _ => return Err(FieldError::FieldMismatch),
        };
        Ok(FieldElement { field: self.field.clone(), coords })
    }

    pub fn try_mul(&self, other: &FieldElement) -> FieldResult<FieldElement> {
        self.same_field(other)?;
        let coords = match (&self.coords, &other.coords, &self.field.radicands) {
            (Coords::Q(a), Coords::Q(b), Radicands::Rational { factor, .. }) => {
                if a.len() == 1 {
                    Coords::Q(vec![&a[0] * &b[0]])
                } else {
                    let mut out = vec![BigRational::zero(); a.len()];
                    for (s, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                        for (t, y) in b.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                            out[s ^ t] += x * y * &factor[s & t];
                        }
                    }
                    Coords::Q(out)
                }
            }
            (Coords::P(a), Coords::P(b), Radicands::Modular { p, theta_sq }) => {
                let d = theta_sq.unwrap_or(0);
                let c0 = (a[0] * b[0] + a[1] * b[1] % p * d) % p;
                let c1 = (a[0] * b[1] + a[1] * b[0]) % p;
                Coords::P([c0, c1])
            }
            _ => return Err(FieldError::FieldMismatch),
        };
        Ok(FieldElement { field: self.field.clone(), coords })
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> FieldResult<FieldElement> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let coords = match (&self.coords, &self.field.radicands) {
            (Coords::Q(a), Radicands::Rational { factor, .. }) => Coords::Q(invert_tower(a, factor)),
            (Coords::P(a), Radicands::Modular { p, theta_sq }) => {
                // Solve [[a0, d·a1], [a1, a0]]·(x0, x1) = (1, 0).
                let d = theta_sq.unwrap_or(0);
                let det = (a[0] * a[0] % p + p - a[1] * a[1] % p * d % p) % p;
                let di = mod_inv(det, *p);
                Coords::P([a[0] * di % p, (p - a[1]) % p * di % p])
            }
            _ => unreachable!(),
        };
        Ok(FieldElement { field: self.field.clone(), coords })
    }

    pub fn try_div(&self, other: &FieldElement) -> FieldResult<FieldElement> {
        self.try_mul(&other.inv()?)
    }

    pub fn pow(&self, e: u32) -> FieldElement {
        let mut r = self.field.one();
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Some square root inside the field, if one exists.
    pub fn sqrt_in_field(&self) -> FieldResult<Option<FieldElement>> {
        if self.is_zero() {
            return Ok(Some(self.clone()));
        }
        match (&self.coords, &self.field.radicands) {
            (Coords::P(a), Radicands::Modular { p, theta_sq }) => {
                let p = *p;
                if p > MAX_SEARCH_PRIME {
                    return Err(FieldError::PrimeTooLarge(p));
                }
                let d = theta_sq.unwrap_or(0);
                let ts = if theta_sq.is_some() { p } else { 1 };
                for t in 0..ts {
                    for x in 0..p {
                        let c0 = (x * x + t * t % p * d) % p;
                        let c1 = 2 * x * t % p;
                        if c0 == a[0] && c1 == a[1] {
                            return Ok(Some(FieldElement { field: self.field.clone(), coords: Coords::P([x, t]) }));
                        }
                    }
                }
                Ok(None)
            }
            (Coords::Q(a), Radicands::Rational { factor, .. }) => {
                if !self.is_base() {
                    return Err(FieldError::UnsupportedRadicand(self.to_string()));
                }
                for (mask, f) in factor.iter().enumerate() {
                    if let Some(s) = rational_sqrt(&(&a[0] / f)) {
                        let mut c = vec![BigRational::zero(); a.len()];
                        c[mask] = s;
                        return Ok(Some(FieldElement { field: self.field.clone(), coords: Coords::Q(c) }));
                    }
                }
                Ok(None)
            }
            _ => unreachable!(),
        }
    }

    /// The square root selected by `in_j` among the two candidates.
    pub fn distinguished_sqrt(&self, in_j: &dyn Fn(&FieldElement) -> bool) -> FieldResult<FieldElement> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let r = self.sqrt_in_field()?.ok_or_else(|| FieldError::NoRoot(self.to_string()))?;
        pick_root(self, r, in_j)
    }

    /// Like [`distinguished_sqrt`](Self::distinguished_sqrt), adjoining a
    /// root when none exists. Returns the (possibly extended) field and the
    /// root, which lives in that field.
    pub fn distinguished_sqrt_or_adjoin(
        &self,
        in_j: &dyn Fn(&FieldElement) -> bool,
    ) -> FieldResult<(Arc<FieldDescriptor>, FieldElement)> {
        if self.is_zero() {
            return Ok((self.field.clone(), self.clone()));
        }
        if let Some(r) = self.sqrt_in_field()? {
            return Ok((self.field.clone(), pick_root(self, r, in_j)?));
        }
        let field = self.field.adjoin_root(self)?;
        let lifted = self.lift_to(&field)?;
        let r = field.root(field.num_roots() - 1);
        Ok((field.clone(), pick_root(&lifted, r, in_j)?))
    }

    /// Sign of the leading irrational coordinate in characteristic 0:
    /// `Some(true)` if positive, `None` if the element is rational.
    pub fn leading_irrational_sign(&self) -> Option<bool> {
        match &self.coords {
            Coords::Q(c) => c[1..].iter().find(|x| !x.is_zero()).map(|x| x.is_positive()),
            Coords::P(_) => None,
        }
    }
}

fn pick_root(a: &FieldElement, r: FieldElement, in_j: &dyn Fn(&FieldElement) -> bool) -> FieldResult<FieldElement> {
    let m = -&r;
    match (in_j(&r), in_j(&m)) {
        (true, false) => Ok(r),
        (false, true) => Ok(m),
        _ => Err(FieldError::AmbiguousRoot(a.to_string())),
    }
}

/// Invert `a` in the tower by Gaussian elimination on its multiplication matrix.
fn invert_tower(a: &[BigRational], factor: &[BigRational]) -> Vec<BigRational> {
    let n = a.len();
    // Column t holds the coordinates of a·s_t.
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n + 1]; n];
    for t in 0..n {
        for (s, x) in a.iter().enumerate() {
            if !x.is_zero() {
                m[s ^ t][t] += x * &factor[s & t];
            }
        }
    }
    m[0][n] = BigRational::one();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero()).expect("nonzero tower elements are invertible");
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    let delta = &f * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n].clone()).collect()
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && (Arc::ptr_eq(&self.field, &other.field) || self.field == other.field)
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldElement {
    /// A deterministic total order on coordinates (not a field order).
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords.cmp(&other.coords)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn monomial_name(field: &FieldDescriptor, mask: usize) -> String {
    match &field.radicands {
        Radicands::Rational { roots, .. } => roots
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, a)| format!("√({a})"))
            .collect::<Vec<_>>()
            .join("·"),
        Radicands::Modular { .. } => "θ".to_string(),
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match &self.coords {
            Coords::Q(c) => {
                for (mask, x) in c.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                    if mask == 0 {
                        parts.push(x.to_string());
                    } else {
                        parts.push(format!("{x}·{}", monomial_name(&self.field, mask)));
                    }
                }
            }
            Coords::P(c) => {
                if c[0] != 0 {
                    parts.push(c[0].to_string());
                }
                if c[1] != 0 {
                    parts.push(format!("{}θ", c[1]));
                }
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &'a FieldElement) -> FieldElement {
        self.try_add(rhs).expect("field mismatch in addition")
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &'a FieldElement) -> FieldElement {
        self.try_add(&-rhs).expect("field mismatch in subtraction")
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &'a FieldElement) -> FieldElement {
        self.try_mul(rhs).expect("field mismatch in multiplication")
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let coords = match &self.coords {
            Coords::Q(c) => Coords::Q(c.iter().map(|x| -x).collect()),
            Coords::P(c) => {
                let p = self.field.characteristic();
                Coords::P([(p - c[0]) % p, (p - c[1]) % p])
            }
        };
        FieldElement { field: self.field.clone(), coords }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &'a FieldElement) -> FieldElement { (&self).$m(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn positive_rational_j(x: &FieldElement) -> bool {
        // J for rationals under the class-representative rule: x − 1/2 ∈ I.
        let y = x - &x.field().from_ratio(1, 2);
        match y.to_rational() {
            Some(q) => {
                let fl = q.floor();
                let frac = &q - &fl;
                (q.is_integer() && !q.is_negative())
                    || (q.is_negative() && (&q * BigRational::from_integer(2.into())).is_integer() && !q.is_integer())
                    || (frac.is_positive() && frac < BigRational::new(1.into(), 2.into()))
            }
            None => y.leading_irrational_sign().unwrap_or(false),
        }
    }

    #[test]
    fn inverse_in_prime_field() {
        let f = FieldDescriptor::prime(5).unwrap();
        assert_eq!(f.from_i64(2).inv().unwrap(), f.from_i64(3));
        assert_eq!(f.one().inv().unwrap(), f.one());
        assert_eq!(f.zero().inv(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn inverse_in_f25() {
        let f = FieldDescriptor::prime_square(5).unwrap();
        assert_eq!(f.radicands()[0], f.from_i64(2));
        let a = f.from_i64(3) + f.from_i64(2) * f.root(0);
        // (3+2θ)(a+bθ) = 1 with θ² = 2: 3a+4b = 1, 2a+3b = 0 over 𝔽_5 gives (a,b) = (3,3).
        let expected = f.from_i64(3) + f.from_i64(3) * f.root(0);
        assert_eq!(a.inv().unwrap(), expected);
        assert!((&a * &expected).is_one());
    }

    #[test]
    fn adjunction_rules() {
        let q = FieldDescriptor::rationals();
        let t = q.adjoin_root(&q.from_i64(2)).unwrap();
        assert_eq!(t.dimension(), 2);
        assert!(matches!(q.adjoin_root(&q.from_i64(9)), Err(FieldError::AlreadyResolvable(_))));
        assert_eq!(q.adjoin_root(&q.zero()), Err(FieldError::ZeroRadicand));
        let f5 = FieldDescriptor::prime(5).unwrap();
        assert_eq!(f5.adjoin_root(&f5.from_i64(2)).unwrap().dimension(), 2);
        assert!(matches!(f5.adjoin_root(&f5.from_i64(4)), Err(FieldError::AlreadyResolvable(_))));
    }

    #[test]
    fn tower_products_and_roots() {
        let q = FieldDescriptor::rationals();
        let t = q.adjoin_root(&q.from_i64(2)).unwrap().adjoin_root(&q.from_i64(3)).unwrap();
        let s2 = t.root(0);
        let s3 = t.root(1);
        assert_eq!(&s2 * &s2, t.from_i64(2));
        let s6 = &s2 * &s3;
        assert_eq!(&s6 * &s6, t.from_i64(6));
        // √24 = 2·√2·√3 is found without adjunction.
        let r = t.from_i64(24).sqrt_in_field().unwrap().unwrap();
        assert_eq!(&r * &r, t.from_i64(24));
        let x = t.from_i64(1) + s2.clone() + s6.clone();
        assert!((&x * &x.inv().unwrap()).is_one());
    }

    #[test]
    fn distinguished_roots_over_q() {
        let q = FieldDescriptor::rationals();
        assert_eq!(q.from_ratio(1, 4).distinguished_sqrt(&positive_rational_j).unwrap(), q.from_ratio(1, 2));
        assert_eq!(q.one().distinguished_sqrt(&positive_rational_j).unwrap(), q.from_i64(-1));
        assert!(q.zero().distinguished_sqrt(&positive_rational_j).unwrap().is_zero());
        assert!(matches!(q.from_i64(2).distinguished_sqrt(&positive_rational_j), Err(FieldError::NoRoot(_))));
        let (t, r) = q.from_i64(2).distinguished_sqrt_or_adjoin(&positive_rational_j).unwrap();
        assert_eq!(t.num_roots(), 1);
        assert_eq!(r, t.root(0));
    }

    #[test]
    fn ambiguous_predicate_is_reported() {
        let q = FieldDescriptor::rationals();
        assert!(matches!(q.from_i64(4).distinguished_sqrt(&|_| true), Err(FieldError::AmbiguousRoot(_))));
    }

    #[test]
    fn f_p_square_roots_exhaustive() {
        for p in [3u64, 5, 7, 11] {
            let f = FieldDescriptor::prime_square(p).unwrap();
            for a in 0..p {
                let x = f.from_i64(a as i64);
                let r = x.sqrt_in_field().unwrap().expect("every 𝔽_p element is a square in 𝔽_{p²}");
                assert_eq!(&r * &r, x);
            }
        }
    }

    #[test]
    fn ring_axioms_random() {
        let q = FieldDescriptor::rationals();
        let t = q.adjoin_root(&q.from_i64(-1)).unwrap().adjoin_root(&q.from_i64(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for field in [t, FieldDescriptor::prime_square(7).unwrap()] {
            for _ in 0..50 {
                let a = field.random_element(&mut rng);
                let b = field.random_element(&mut rng);
                let c = field.random_element(&mut rng);
                assert_eq!((&a * &b) * &c, &a * &(&b * &c));
                assert_eq!(&a * &(&b + &c), (&a * &b) + (&a * &c));
                assert_eq!(&a * &b, &b * &a);
                if !a.is_zero() {
                    assert!((&a * &a.inv().unwrap()).is_one());
                }
            }
        }
    }

    #[test]
    fn bad_characteristics() {
        assert!(FieldDescriptor::prime(2).is_err());
        assert!(FieldDescriptor::prime(9).is_err());
        assert!(FieldDescriptor::prime(101).is_ok());
    }
}
