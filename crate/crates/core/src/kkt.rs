//! Change of variables near the eigenvalues `b(i)`: the new dot variable
//! `x_i`, the series `f_i`, `g_ij`, `h_i`, `t_i`, the polynomials Δ and p,
//! and verifiers for the identities they satisfy.
//!
//! Two-variable series live in "new" variables `(x, y)` standing for
//! `(x_i, y_j)`. Block variables `(z1, z2)` are `x − b(i)` and `y − b(j)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::cartan::{CartanDatum, CartanError};
use crate::fields::{FieldDescriptor, FieldElement};
use crate::poly::UPoly;
use crate::report::{inputs, CaseResult};
use crate::series::{vars, SeriesError, TruncSeries, Vars};

/// Extra orders carried by every series beyond the verification order.
pub const SLACK: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KktError {
    #[error("colour {0} is not in the window")]
    NotInWindow(String),
    #[error(transparent)]
    Cartan(#[from] CartanError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type KktResult<T> = Result<T, KktError>;

impl From<crate::fields::FieldError> for KktError {
    fn from(e: crate::fields::FieldError) -> Self {
        KktError::Cartan(e.into())
    }
}

/// The three regimes of a colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Zero,
    Hbar,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lemma {
    MoreMagic,
    HiDuff,
    Echo,
    NewMoney,
    Gunky,
    Cash1,
    Cash3,
    DoggyDaycare,
    WhenIsItZero,
}

impl Lemma {
    pub const ALL: [Lemma; 9] = [
        Lemma::MoreMagic,
        Lemma::HiDuff,
        Lemma::Echo,
        Lemma::NewMoney,
        Lemma::Gunky,
        Lemma::Cash1,
        Lemma::Cash3,
        Lemma::DoggyDaycare,
        Lemma::WhenIsItZero,
    ];

    /// Whether the identity involves a pair of colours.
    pub fn is_pairwise(self) -> bool {
        matches!(self, Lemma::Echo | Lemma::Gunky | Lemma::Cash1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Lemma::MoreMagic => "moremagic",
            Lemma::HiDuff => "hiduff",
            Lemma::Echo => "echo",
            Lemma::NewMoney => "newmoney",
            Lemma::Gunky => "gunky",
            Lemma::Cash1 => "cash1",
            Lemma::Cash3 => "cash3",
            Lemma::DoggyDaycare => "doggydaycare",
            Lemma::WhenIsItZero => "whenisitzero",
        }
    }

    pub fn parse(s: &str) -> Option<Lemma> {
        Lemma::ALL.into_iter().find(|l| l.name() == s)
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

type Cache<K> = Mutex<BTreeMap<K, TruncSeries>>;

/// Series engine for a colour window at a fixed verification order.
pub struct KKTContext {
    datum: CartanDatum,
    window: Vec<FieldElement>,
    order: u32,
    work: u32,
    b: BTreeMap<FieldElement, FieldElement>,
    z: Vars,
    w: Vars,
    xy: Vars,
    z12: Vars,
    x_cache: Cache<FieldElement>,
    f_cache: Cache<FieldElement>,
    g_cache: Cache<(FieldElement, FieldElement)>,
    h_cache: Cache<FieldElement>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Radicand of the constant term of the generic `g_ij`, for rational colours.
fn generic_g_radicand(i: &BigRational, j: &BigRational) -> BigRational {
    let one = BigRational::one();
    let ui = i * (i + &one);
    let uj = j * (j + &one);
    let delta = &ui - &uj;
    let dd = (&delta - &one) * (&delta - &one) - &one - BigRational::from_integer(4.into()) * &uj;
    &delta * &delta / dd
}

impl KKTContext {
    /// Build a context for characteristic `p` (0 or an odd prime) and a
    /// window of colours in I given as rationals. Characteristic-0 towers
    /// are extended until every needed square root exists.
    pub fn new(p: u64, window: &[BigRational], order: u32) -> KktResult<Self> {
        let mut extra = Vec::new();
        if p == 0 {
            for i in window {
                for j in window {
                    let one = BigRational::one();
                    if i != j && *i != j + &one && *i != j - &one {
                        extra.push(generic_g_radicand(i, j));
                    }
                }
            }
        }
        let datum = CartanDatum::with_colors(p, window, &extra)?;
        let colors: Vec<FieldElement> = window.iter().map(|q| datum.color(q)).collect();
        Self::with_datum(datum, &colors, order)
    }

    /// Context over an existing datum; every colour must lie in I.
    pub fn with_datum(datum: CartanDatum, window: &[FieldElement], order: u32) -> KktResult<Self> {
        let mut b = BTreeMap::new();
        for i in window {
            if !datum.in_i(i) {
                return Err(CartanError::NotInI(i.to_string()).into());
            }
            b.insert(i.clone(), datum.b_map(i)?);
        }
        Ok(KKTContext {
            datum,
            window: window.to_vec(),
            order,
            work: order + SLACK,
            b,
            z: vars(&["z"]),
            w: vars(&["w"]),
            xy: vars(&["x", "y"]),
            z12: vars(&["z1", "z2"]),
            x_cache: Mutex::new(BTreeMap::new()),
            f_cache: Mutex::new(BTreeMap::new()),
            g_cache: Mutex::new(BTreeMap::new()),
            h_cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn datum(&self) -> &CartanDatum {
        &self.datum
    }

    pub fn field(&self) -> &Arc<FieldDescriptor> {
        self.datum.field()
    }

    pub fn window(&self) -> &[FieldElement] {
        &self.window
    }

    /// Verification order N.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Order at which ingredients are built.
    pub fn work_order(&self) -> u32 {
        self.work
    }

    pub fn kind(&self, i: &FieldElement) -> Kind {
        if i.is_zero() {
            Kind::Zero
        } else if *i == self.datum.hbar() {
            Kind::Hbar
        } else {
            Kind::Generic
        }
    }

    pub fn b(&self, i: &FieldElement) -> KktResult<FieldElement> {
        self.b.get(i).cloned().ok_or_else(|| KktError::NotInWindow(i.to_string()))
    }

    fn k(&self, n: i64, d: i64) -> FieldElement {
        self.field().from_ratio(n, d)
    }

    fn cst(&self, c: &FieldElement, v: &Vars, order: u32) -> TruncSeries {
        TruncSeries::constant(c, v, order)
    }

    fn sqrt(&self, c: &FieldElement) -> KktResult<FieldElement> {
        Ok(self.datum.sqrt(c)?)
    }

    /// Square root with the distinguished constant term.
    fn branch_sqrt(&self, s: &TruncSeries) -> KktResult<TruncSeries> {
        let c0 = self.sqrt(&s.constant_term())?;
        Ok(s.sqrt_branch(&c0)?)
    }

    /// X(X+1) for X = v^{1/d_i} + i, as a polynomial in the series `v`.
    pub fn u_poly(&self, i: &FieldElement, v: &TruncSeries) -> TruncSeries {
        let one = self.field().one();
        match self.kind(i) {
            Kind::Generic => {
                let a = v + &self.cst(i, v.vars(), v.order());
                let b = v + &self.cst(&(i + &one), v.vars(), v.order());
                &a * &b
            }
            Kind::Hbar => v + &self.cst(&(i * &(i + &one)), v.vars(), v.order()),
            Kind::Zero => {
                let sq = v * v;
                &sq * &(&sq + &TruncSeries::one(self.field(), v.vars(), v.order()))
            }
        }
    }

    /// Y = v^{1/d_j} + j for j ≠ ħ.
    fn y_poly(&self, j: &FieldElement, v: &TruncSeries) -> TruncSeries {
        match self.kind(j) {
            Kind::Zero => v * v,
            _ => v + &self.cst(j, v.vars(), v.order()),
        }
    }

    fn require(&self, i: &FieldElement) -> KktResult<()> {
        if self.b.contains_key(i) {
            Ok(())
        } else {
            Err(KktError::NotInWindow(i.to_string()))
        }
    }

    /// x_i as a series in z = x − b(i).
    pub fn x_series(&self, i: &FieldElement) -> KktResult<TruncSeries> {
        self.require(i)?;
        if let Some(s) = self.x_cache.lock().unwrap().get(i) {
            return Ok(s.clone());
        }
        let b = self.b(i)?;
        let quarter = self.k(1, 4);
        let s = match self.kind(i) {
            Kind::Generic => {
                let z = TruncSeries::var(self.field(), &self.z, 0, self.work);
                let x = &z + &self.cst(&b, &self.z, self.work);
                let root = self.branch_sqrt(&(&(&x * &x) + &self.cst(&quarter, &self.z, self.work)))?;
                &root - &self.cst(&(i + &self.k(1, 2)), &self.z, self.work)
            }
            Kind::Hbar => {
                let z = TruncSeries::var(self.field(), &self.z, 0, self.work);
                let x = &z + &self.cst(&b, &self.z, self.work);
                &(&x * &x) + &self.cst(&quarter, &self.z, self.work)
            }
            Kind::Zero => {
                let order = self.work + 2;
                let z = TruncSeries::var(self.field(), &self.z, 0, order);
                let inner = self.branch_sqrt(&(&(&z * &z) + &self.cst(&quarter, &self.z, order)))?;
                let inner = &inner - &self.cst(&self.k(1, 2), &self.z, order);
                let unit = inner.div_var_power(0, 2)?;
                (&z * &self.branch_sqrt(&unit)?).truncate(self.work)
            }
        };
        self.x_cache.lock().unwrap().insert(i.clone(), s.clone());
        Ok(s)
    }

    /// x − b(i) as a series in w = x_i.
    pub fn x_inverse_series(&self, i: &FieldElement) -> KktResult<TruncSeries> {
        self.require(i)?;
        let b = self.b(i)?;
        let w = TruncSeries::var(self.field(), &self.w, 0, self.work);
        Ok(match self.kind(i) {
            Kind::Zero => {
                let one = TruncSeries::one(self.field(), &self.w, self.work);
                &w * &self.branch_sqrt(&(&(&w * &w) + &one))?
            }
            _ => &self.branch_sqrt(&self.u_poly(i, &w))? - &self.cst(&b, &self.w, self.work),
        })
    }

    /// √ of X(X+1) in one new variable, with constant b(i) (or the
    /// distinguished √1 for colour 0, where the radicand is v²+1).
    fn root_series(&self, i: &FieldElement, v: &TruncSeries) -> KktResult<TruncSeries> {
        match self.kind(i) {
            Kind::Zero => self.branch_sqrt(&(&(v * v) + &TruncSeries::one(self.field(), v.vars(), v.order()))),
            _ => self.branch_sqrt(&self.u_poly(i, v)),
        }
    }

    fn xy_vars(&self) -> (TruncSeries, TruncSeries) {
        (TruncSeries::var(self.field(), &self.xy, 0, self.work), TruncSeries::var(self.field(), &self.xy, 1, self.work))
    }

    fn xy_const(&self, c: &FieldElement) -> TruncSeries {
        self.cst(c, &self.xy, self.work)
    }

    /// f_i(x, y).
    pub fn f_series(&self, i: &FieldElement) -> KktResult<TruncSeries> {
        self.require(i)?;
        if let Some(s) = self.f_cache.lock().unwrap().get(i) {
            return Ok(s.clone());
        }
        let (x, y) = self.xy_vars();
        let one = self.field().one();
        let s = match self.kind(i) {
            Kind::Generic => {
                let num = &self.root_series(i, &x)? + &self.root_series(i, &y)?;
                let den = &(&x + &y) + &self.xy_const(&(&(i + i) + &one));
                num.try_div(&den)?
            }
            Kind::Hbar => &self.root_series(i, &x)? + &self.root_series(i, &y)?,
            Kind::Zero => {
                let work = self.work + 1;
                let x = TruncSeries::var(self.field(), &self.xy, 0, work);
                let y = TruncSeries::var(self.field(), &self.xy, 1, work);
                let num = &(&x * &self.root_series(i, &x)?) + &(&y * &self.root_series(i, &y)?);
                let num = num.div_exact_linear(&[one.clone(), one.clone()])?;
                let den = &(&(&x * &x) + &(&y * &y)) + &TruncSeries::one(self.field(), &self.xy, work);
                num.try_div(&den.truncate(self.work))?
            }
        };
        self.f_cache.lock().unwrap().insert(i.clone(), s.clone());
        Ok(s)
    }

    /// Δ(X, Y) = X(X+1) − Y(Y+1) as a polynomial in the new variables.
    fn delta_xy(&self, i: &FieldElement, j: &FieldElement, order: u32) -> TruncSeries {
        let x = TruncSeries::var(self.field(), &self.xy, 0, order);
        let y = TruncSeries::var(self.field(), &self.xy, 1, order);
        &self.u_poly(i, &x) - &self.u_poly(j, &y)
    }

    /// Δ(X, Y−1)·Δ(X, Y+1) = (Δ − 1)² − 1 − 4·Y(Y+1).
    fn delta_pair_xy(&self, i: &FieldElement, j: &FieldElement, order: u32) -> TruncSeries {
        let y = TruncSeries::var(self.field(), &self.xy, 1, order);
        let one = TruncSeries::one(self.field(), &self.xy, order);
        let d1 = &self.delta_xy(i, j, order) - &one;
        &(&(&d1 * &d1) - &one) - &self.u_poly(j, &y).scale(&self.k(4, 1))
    }

    /// g_ij(x, y).
    pub fn g_series(&self, i: &FieldElement, j: &FieldElement) -> KktResult<TruncSeries> {
        self.require(i)?;
        self.require(j)?;
        let key = (i.clone(), j.clone());
        if let Some(s) = self.g_cache.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let one = self.field().one();
        let (x, y) = self.xy_vars();
        let onep = TruncSeries::one(self.field(), &self.xy, self.work);
        let half = self.k(1, 2);
        let s = if i == j {
            match self.kind(i) {
                Kind::Generic => {
                    let m = (&x + &y).scale(&half);
                    let num = &m + &self.xy_const(&(i - &self.datum.hbar()));
                    let dxy = &x - &y;
                    let a = &m + &self.xy_const(i);
                    let b = &m + &self.xy_const(&(i + &one));
                    let rad = &(&(&onep - &(&dxy * &dxy)) * &a) * &b;
                    num.try_div(&self.branch_sqrt(&rad)?)?
                }
                Kind::Hbar => {
                    let dxy = &x - &y;
                    let rad = &(&(&x + &y).scale(&half) - &(&dxy * &dxy).scale(&self.k(1, 4)))
                        + &self.xy_const(&(i * &(i + &one)));
                    self.branch_sqrt(&rad)?.scale(&self.k(2, 1)).inv()?
                }
                Kind::Zero => {
                    let (x2, y2) = (&x * &x, &y * &y);
                    let diff = &x2 - &y2;
                    let rad = &(&onep - &(&diff * &diff)) * &(&(&x2 + &y2).scale(&half) + &onep);
                    (&(&x2 + &y2) + &onep).try_div(&self.branch_sqrt(&rad)?)?
                }
            }
        } else if *i == j - &one {
            onep
        } else if *i == j + &one {
            let delta = self.delta_xy(i, j, self.work);
            let yy = self.y_poly(j, &y);
            let lower = &delta + &yy.scale(&self.k(2, 1));
            let den = if self.kind(i) == Kind::Hbar {
                lower
            } else {
                let yp = &yy - &self.xy_const(j);
                let lin = &(&x + &yp) + &self.xy_const(&(&(i + i) + &one));
                &lin * &lower
            };
            (&delta * &delta).try_div(&den)?
        } else {
            let delta = self.delta_xy(i, j, self.work);
            let rad = (&delta * &delta).try_div(&self.delta_pair_xy(i, j, self.work))?;
            self.branch_sqrt(&rad)?
        };
        self.g_cache.lock().unwrap().insert(key, s.clone());
        Ok(s)
    }

    /// h_i(x, y) = (1 − f_i g_ii)/(x − y).
    pub fn h_series(&self, i: &FieldElement) -> KktResult<TruncSeries> {
        self.require(i)?;
        if let Some(s) = self.h_cache.lock().unwrap().get(i) {
            return Ok(s.clone());
        }
        let one = self.field().one();
        let fg = &self.f_series(i)? * &self.g_series(i, i)?;
        let num = &TruncSeries::one(self.field(), &self.xy, self.work) - &fg;
        let s = num.div_exact_linear(&[one.clone(), -one])?;
        self.h_cache.lock().unwrap().insert(i.clone(), s.clone());
        Ok(s)
    }

    /// `s(x, x)` for a series in (x, y), kept in the same variables.
    pub fn diagonal(&self, s: &TruncSeries) -> TruncSeries {
        s.remap(&self.xy, &[(0, false), (0, false)])
    }

    /// t_i(x, y) = (f_i(x, x) − f_i(x, y))/(x − y).
    pub fn t_series(&self, i: &FieldElement) -> KktResult<TruncSeries> {
        let one = self.field().one();
        let f = self.f_series(i)?;
        Ok((&self.diagonal(&f) - &f).div_exact_linear(&[one.clone(), -one])?)
    }

    /// Q_ij(x, y): 0 on the diagonal, (i−j)(x^{−c_ij} − y^{−c_ji}) for
    /// neighbours, 1 otherwise.
    pub fn q_poly(&self, i: &FieldElement, j: &FieldElement) -> KktResult<TruncSeries> {
        let (x, y) = self.xy_vars();
        if i == j {
            return Ok(TruncSeries::zero(self.field(), &self.xy, self.work));
        }
        if self.datum.is_adjacent(i, j) {
            let a = -self.datum.cartan_entry(i, j)?;
            let b = -self.datum.cartan_entry(j, i)?;
            return Ok((&x.pow(a as u32) - &y.pow(b as u32)).scale(&(i - j)));
        }
        Ok(TruncSeries::one(self.field(), &self.xy, self.work))
    }

    /// Δ(x, y) = (x − y)(x + y + 1), exactly.
    pub fn delta_poly(&self) -> TruncSeries {
        let (x, y) = self.xy_vars();
        let one = TruncSeries::one(self.field(), &self.xy, self.work);
        &(&x - &y) * &(&(&x + &y) + &one)
    }

    /// p(x, y) as (numerator, denominator) = ((x²−y²)² − 2(x²+y²), (x²−y²)²),
    /// over the given pair of series.
    pub fn p_fraction(&self, x: &TruncSeries, y: &TruncSeries) -> (TruncSeries, TruncSeries) {
        let (x2, y2) = (x * x, y * y);
        let d = &x2 - &y2;
        let den = &d * &d;
        let num = &den - &(&x2 + &y2).scale(&self.k(2, 1));
        (num, den)
    }

    // ----- block-variable helpers -----

    fn z_var(&self, k: usize) -> TruncSeries {
        TruncSeries::var(self.field(), &self.z12, k, self.work)
    }

    /// x_i(z_k) as a series in (z1, z2).
    fn x_in_block(&self, i: &FieldElement, k: usize) -> KktResult<TruncSeries> {
        Ok(self.x_series(i)?.embed(&self.z12, &[k]))
    }

    /// The actual coordinate b(i) + z_k.
    fn coord(&self, i: &FieldElement, k: usize) -> KktResult<TruncSeries> {
        Ok(&self.z_var(k) + &self.cst(&self.b(i)?, &self.z12, self.work))
    }

    /// Compose a series in new variables (x, y) with block series.
    fn at(&self, s: &TruncSeries, a: &TruncSeries, b: &TruncSeries) -> KktResult<TruncSeries> {
        Ok(s.subst(&[a.clone(), b.clone()])?)
    }

    // ----- lemma verification -----

    /// Verify one identity. Mathematical failures are reported, not raised.
    pub fn verify_lemma(&self, lemma: Lemma, i: &FieldElement, j: Option<&FieldElement>) -> CaseResult {
        let j = j.unwrap_or(i);
        let mut ins = inputs([("lemma", lemma.to_string()), ("i", i.to_string()), ("N", self.order.to_string())]);
        if lemma.is_pairwise() {
            ins.insert("j".into(), j.to_string());
        }
        let id = if lemma.is_pairwise() { format!("{lemma}[{i},{j}]") } else { format!("{lemma}[{i}]") };
        let case = CaseResult::new(id, ins);
        let out = match lemma {
            Lemma::MoreMagic => self.check_moremagic(case.clone(), i),
            Lemma::HiDuff => self.check_hiduff(case.clone(), i),
            Lemma::Echo => self.check_echo(case.clone(), i, j),
            Lemma::NewMoney => self.check_newmoney(case.clone(), i),
            Lemma::Gunky => self.check_gunky(case.clone(), i, j),
            Lemma::Cash1 => self.check_cash1(case.clone(), i, j),
            Lemma::Cash3 => self.check_cash3(case.clone(), i),
            Lemma::DoggyDaycare => self.check_doggydaycare(case.clone(), i),
            Lemma::WhenIsItZero => self.check_whenisitzero(case.clone(), i),
        };
        out.unwrap_or_else(|e| case.error("evaluation error", e))
    }

    /// Round trip of the change of variables and the defining relation
    /// x² = X(X+1) for X = x_i^{1/d_i} + i.
    pub fn verify_round_trip(&self, i: &FieldElement) -> CaseResult {
        let case = CaseResult::new(format!("round_trip[{i}]"), inputs([("i", i.to_string()), ("N", self.order.to_string())]));
        let run = || -> KktResult<CaseResult> {
            let xs = self.x_series(i)?;
            let inv = self.x_inverse_series(i)?;
            let back = inv.subst(&[xs.clone()])?;
            let z = TruncSeries::var(self.field(), &self.z, 0, self.work);
            let x = &z + &self.cst(&self.b(i)?, &self.z, self.work);
            let magic = self.u_poly(i, &xs);
            let lead_ok = xs.constant_term().is_zero();
            Ok(case
                .clone()
                .require("x_i has a constant term", lead_ok)
                .compare("x_inverse ∘ x_series = z", &back, &z, self.order)
                .compare("x² = X(X+1)", &(&x * &x), &magic, self.order))
        };
        run().unwrap_or_else(|e| case.error("evaluation error", e))
    }

    fn check_moremagic(&self, case: CaseResult, i: &FieldElement) -> KktResult<CaseResult> {
        let (xi, yi) = (self.x_in_block(i, 0)?, self.x_in_block(i, 1)?);
        let f = self.at(&self.f_series(i)?, &xi, &yi)?;
        let lhs = &(&self.z_var(0) - &self.z_var(1)) * &f;
        Ok(case.compare("(x−y)f_i(x_i,y_i) = x_i − y_i", &lhs, &(&xi - &yi), self.order))
    }

    fn check_hiduff(&self, case: CaseResult, i: &FieldElement) -> KktResult<CaseResult> {
        let f = self.diagonal(&self.f_series(i)?);
        let g = self.diagonal(&self.g_series(i, i)?);
        let one = TruncSeries::one(self.field(), &self.xy, self.work);
        Ok(case.compare("f_i(x,x)g_ii(x,x) = 1", &(&f * &g), &one, self.order))
    }

    fn check_echo(&self, case: CaseResult, i: &FieldElement, j: &FieldElement) -> KktResult<CaseResult> {
        let (xi, yj) = (self.x_in_block(i, 0)?, self.x_in_block(j, 1)?);
        let g1 = self.at(&self.g_series(i, j)?, &xi, &yj)?;
        let g2 = self.at(&self.g_series(j, i)?, &yj, &xi)?;
        let (pn, pd) = self.p_fraction(&self.coord(i, 0)?, &self.coord(j, 1)?);
        let (qn, qd) = if i != j {
            (self.at(&self.q_poly(i, j)?, &xi, &yj)?, TruncSeries::one(self.field(), &self.z12, self.work))
        } else if self.kind(i) != Kind::Zero {
            let d = &xi - &yj;
            (TruncSeries::one(self.field(), &self.z12, self.work), &d * &d)
        } else {
            let (a2, b2) = (&xi * &xi, &yj * &yj);
            let d = &a2 - &b2;
            ((&a2 + &b2).scale(&self.k(2, 1)), &d * &d)
        };
        let lhs = &(&(&g1 * &g2) * &pn) * &qd;
        let mut rhs = &qn * &pd;
        if i == j {
            rhs = rhs.neg();
        }
        Ok(case
            .compare("g_ij g_ji · p_num · q_den = ±q_num · p_den", &lhs, &rhs, self.order)
            .with_note("q_ij read as Q_ij off the diagonal"))
    }

    fn check_newmoney(&self, case: CaseResult, i: &FieldElement) -> KktResult<CaseResult> {
        let (xi, yi) = (self.x_in_block(i, 0)?, self.x_in_block(i, 1)?);
        let g = self.at(&self.g_series(i, i)?, &xi, &yi)?;
        let hs = self.h_series(i)?;
        let h = self.at(&hs, &xi, &yi)?;
        let two = self.k(2, 1);
        let d = &xi - &yi;
        let g2 = &g * &g;
        let one = TruncSeries::one(self.field(), &self.z12, self.work);
        let part = &(&(&h * &h) * &d) - &h.scale(&two);
        if self.kind(i) != Kind::Zero {
            let s = &self.coord(i, 0)? + &self.coord(i, 1)?;
            let s2 = &s * &s;
            let lhs = &(&g2 * &(&s2 - &one)) * &d;
            let rhs = &part * &s2;
            Ok(case.compare("newmoney (cleared by (x+y)²(x_i−y_i))", &lhs, &rhs, self.order))
        } else {
            let e = &xi + &yi;
            let hm = self.at(&hs, &xi, &yi.neg())?;
            let part2 = &(&(&hm * &hm) * &e) - &hm.scale(&two);
            let lhs = &(&g2 * &d) * &e;
            let rhs = &(&part * &e) + &(&part2 * &d);
            Ok(case.compare("newmoney (cleared by (x_0−y_0)(x_0+y_0))", &lhs, &rhs, self.order))
        }
    }

    /// Formal Δ(X, Y + c) with X = s + i, Y = t + j in variables (s, t).
    fn formal_delta(&self, i: &FieldElement, j: &FieldElement, c: i64) -> TruncSeries {
        let order = 12;
        let s = TruncSeries::var(self.field(), &self.xy, 0, order);
        let t = TruncSeries::var(self.field(), &self.xy, 1, order);
        let one = TruncSeries::one(self.field(), &self.xy, order);
        let x = &s + &self.cst(i, &self.xy, order);
        let y = &(&t + &self.cst(j, &self.xy, order)) + &one.scale(&self.k(c, 1));
        &(&x * &(&x + &one)) - &(&y * &(&y + &one))
    }

    /// Rewrite a formal (s, t) polynomial in (x, y) with s = x^{1/d_i},
    /// t = y^{1/d_j}; `None` if a fractional power would remain.
    fn unroot(&self, p: &TruncSeries, i: &FieldElement, j: &FieldElement) -> Option<TruncSeries> {
        let mut out = TruncSeries::zero(self.field(), &self.xy, self.work);
        for (e, c) in p.terms() {
            let mut ne = *e;
            for (v, col) in [(0, i), (1, j)] {
                match self.kind(col) {
                    Kind::Hbar if e[v] % 2 == 1 => return None,
                    Kind::Hbar => ne[v] = e[v] / 2,
                    Kind::Zero => ne[v] = e[v] * 2,
                    Kind::Generic => {}
                }
            }
            out.add_term(ne, c.clone());
        }
        Some(out)
    }

    fn check_gunky(&self, case: CaseResult, i: &FieldElement, j: &FieldElement) -> KktResult<CaseResult> {
        let mut case = case;
        let delta = self.formal_delta(i, j, 0);
        let lower = self.formal_delta(i, j, -1);
        let upper = self.formal_delta(i, j, 1);
        let d_xy = self.unroot(&delta, i, j);
        case = case.require("Δ(X,Y) is a polynomial in (x_i, y_j)", d_xy.is_some());
        let pair_formal = &lower * &upper;
        let pair_xy = self.unroot(&pair_formal, i, j);
        if self.kind(j) == Kind::Hbar {
            case = case.require("Δ(X,Y−1)Δ(X,Y+1) is a polynomial for j = ħ", pair_xy.is_some());
            let single = self.unroot(&lower, i, j).is_none();
            case = case.with_note(format!("j = ħ: Δ(X,Y−1) alone polynomial: {}", !single));
        } else {
            case = case
                .require("Δ(X,Y−1) is a polynomial", self.unroot(&lower, i, j).is_some())
                .require("Δ(X,Y+1) is a polynomial", self.unroot(&upper, i, j).is_some());
        }
        if let (Some(d_xy), Some(pair_xy)) = (d_xy, pair_xy) {
            case = case
                .compare("Δ(X,Y) = X(X+1) − Y(Y+1) form", &d_xy, &self.delta_xy(i, j, self.work), self.order)
                .compare("Δ(X,Y−1)Δ(X,Y+1) product form", &pair_xy, &self.delta_pair_xy(i, j, self.work), self.order);
            let (xi, yj) = (self.x_in_block(i, 0)?, self.x_in_block(j, 1)?);
            let d = self.at(&d_xy, &xi, &yj)?;
            let pp = self.at(&pair_xy, &xi, &yj)?;
            let (pn, pd) = self.p_fraction(&self.coord(i, 0)?, &self.coord(j, 1)?);
            case = case.compare("p·Δ² = Δ(X,Y−1)Δ(X,Y+1) (cleared)", &(&pn * &(&d * &d)), &(&pd * &pp), self.order);
        }
        Ok(case)
    }

    fn check_cash1(&self, case: CaseResult, i: &FieldElement, j: &FieldElement) -> KktResult<CaseResult> {
        let g = self.g_series(i, j)?;
        let mut case = case;
        let mut applied = false;
        if i == j {
            case = case.compare("g_ii(x,y) = g_ii(y,x)", &g, &g.swap_vars(0, 1), self.order);
            applied = true;
        }
        if i.is_zero() {
            case = case.compare("g_0j(x,y) = g_0j(−x,y)", &g, &g.neg_var(0), self.order);
            applied = true;
        }
        if j.is_zero() {
            case = case.compare("g_i0(x,y) = g_i0(x,−y)", &g, &g.neg_var(1), self.order);
            applied = true;
        }
        Ok(if applied { case } else { case.with_note("no symmetry applies to this pair") })
    }

    fn check_cash3(&self, case: CaseResult, i: &FieldElement) -> KktResult<CaseResult> {
        let h = self.h_series(i)?;
        let mut case = case.compare("h_i(x,y) = −h_i(y,x)", &h, &h.swap_vars(0, 1).neg(), self.order);
        if i.is_zero() {
            case = case.compare("h_0(x,y) = −h_0(−x,−y)", &h, &h.neg_var(0).neg_var(1).neg(), self.order);
        }
        Ok(case)
    }

    fn check_doggydaycare(&self, case: CaseResult, i: &FieldElement) -> KktResult<CaseResult> {
        let (xi, yi) = (self.x_in_block(i, 0)?, self.x_in_block(i, 1)?);
        let one = TruncSeries::one(self.field(), &self.z12, self.work);
        let g = self.at(&self.g_series(i, i)?, &xi, &yi)?;
        let hs = self.h_series(i)?;
        let h = self.at(&hs, &xi, &yi)?;
        let d = &xi - &yi;
        let real_d = &self.coord(i, 0)? - &self.coord(i, 1)?;
        let mut case = case.compare(
            "g_ii(x_i,y_i)(x_i−y_i) = (x−y)(1 − h_i(x_i,y_i)(x_i−y_i))",
            &(&g * &d),
            &(&real_d * &(&one - &(&h * &d))),
            self.order,
        );
        if i.is_zero() {
            let e = &xi + &yi;
            let hm = self.at(&hs, &xi, &yi.neg())?;
            let real_e = &self.coord(i, 0)? + &self.coord(i, 1)?;
            case = case.compare(
                "g_00(x_0,y_0)(x_0+y_0) = (x+y)(1 − h_0(x_0,−y_0)(x_0+y_0))",
                &(&g * &e),
                &(&real_e * &(&one - &(&hm * &e))),
                self.order,
            );
        }
        Ok(case)
    }

    fn check_whenisitzero(&self, case: CaseResult, i: &FieldElement) -> KktResult<CaseResult> {
        let f = self.field();
        let one = f.one();
        let b = self.b(i)?;
        let u2 = UPoly::u(f).pow(2);
        let b2 = UPoly::constant(&(&b * &b));
        let d = u2.sub(&b2);
        let pden = d.mul(&d);
        let pnum = pden.sub(&u2.add(&b2).scale(&self.k(2, 1)));
        let sq = |c: FieldElement| UPoly::square_minus(&c);
        let lhs = pnum.mul(&sq(i * &(i + &one)).pow(2));
        let rhs = pden.mul(&sq(&(i - &one) * i)).mul(&sq(&(i + &one) * &(i + &one + &one)));
        let diff = lhs.sub(&rhs);
        Ok(if diff.is_zero() {
            case.with_note("exact polynomial identity in u")
        } else {
            let k = diff.coeffs().iter().position(|c| !c.is_zero()).unwrap_or(0);
            let mut c = case.fail("p(u,b(i))·(u²−i(i+1))² ≠ (u²−(i−1)i)(u²−(i+1)(i+2))·(u²−b²)²");
            c.residual = Some(crate::report::Residual {
                exponent: vec![k as u32],
                coefficient: diff.coeff(k).to_string(),
                block: None,
            });
            c
        })
    }

    /// All pair/single lemma checks over the window.
    pub fn verify_all(&self) -> Vec<CaseResult> {
        let mut out = Vec::new();
        for i in &self.window {
            out.push(self.verify_round_trip(i));
        }
        for lemma in Lemma::ALL {
            for i in &self.window {
                if lemma.is_pairwise() {
                    for j in &self.window {
                        out.push(self.verify_lemma(lemma, i, Some(j)));
                    }
                } else {
                    out.push(self.verify_lemma(lemma, i, None));
                }
            }
        }
        out
    }
}

/// Window of rational colours {0, ħ, 1, …, bound} for characteristic 0,
/// or I_0 = {0, …, (p−1)/2} for characteristic p.
pub fn default_window(p: u64, bound: i64) -> Vec<BigRational> {
    if p == 0 {
        let mut w = vec![rat(0, 1), rat(-1, 2)];
        w.extend((1..=bound).map(|k| rat(k, 1)));
        w
    } else {
        (0..=((p - 1) / 2) as i64).map(|k| rat(k, 1)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, order: u32) -> KKTContext {
        KKTContext::new(p, &default_window(p, 2), order).unwrap()
    }

    #[test]
    fn x0_expansion() {
        let c = ctx(0, 6);
        let x0 = c.x_series(&c.field().zero()).unwrap();
        let f = c.field();
        assert_eq!(x0.coeff(&[1, 0, 0, 0]), f.from_i64(-1));
        assert!(x0.coeff(&[2, 0, 0, 0]).is_zero());
        assert_eq!(x0.coeff(&[3, 0, 0, 0]), f.from_ratio(1, 2));
    }

    #[test]
    fn xhbar_is_quadratic() {
        let c = ctx(5, 6);
        let h = c.datum().hbar();
        let s = c.x_series(&h).unwrap();
        let b = c.b(&h).unwrap();
        assert_eq!(s.coeff(&[1, 0, 0, 0]), &b + &b);
        assert!(s.coeff(&[2, 0, 0, 0]).is_one());
        assert_eq!(s.num_terms(), 2);
    }

    #[test]
    fn generic_x_leading_term() {
        let c = ctx(0, 6);
        let one = c.field().one();
        let s = c.x_series(&one).unwrap();
        // (x² − 2)/3 near x = √2 has linear coefficient 2√2/3.
        let b = c.b(&one).unwrap();
        assert_eq!(s.coeff(&[1, 0, 0, 0]), &(&b + &b) * &c.field().from_ratio(1, 3));
    }

    #[test]
    fn g_branches_and_constants() {
        let c = ctx(7, 6);
        let f = c.field();
        let h = c.datum().hbar();
        let fs = c.f_series(&h).unwrap();
        let b = c.b(&h).unwrap();
        assert_eq!(fs.constant_term(), &b + &b);
        let two = f.from_i64(2);
        let one = f.one();
        assert!(c.g_series(&one, &two).unwrap().constant_term().is_one());
        for i in c.window() {
            for j in c.window() {
                assert!(!c.g_series(i, j).unwrap().constant_term().is_zero());
            }
        }
    }

    #[test]
    fn delta_and_p_examples() {
        let c = ctx(0, 4);
        let f = c.field();
        let d = c.delta_poly();
        let i = f.from_i64(3);
        assert_eq!(d.eval(&[i.clone(), &i - &f.one()]), &i + &i);
        assert!(d.eval(&[i.clone(), i.clone()]).is_zero());
    }

    #[test]
    fn echo_example_and_trivial_order() {
        let c = ctx(5, 8);
        let f = c.field();
        assert!(c.verify_lemma(Lemma::Echo, &f.one(), Some(&f.zero())).passed());
        let c1 = ctx(5, 1);
        for lemma in Lemma::ALL {
            let r = c1.verify_lemma(lemma, &f.one(), Some(&f.zero()));
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn small_window_all_lemmas() {
        for p in [3, 5] {
            let c = ctx(p, 5);
            for r in c.verify_all() {
                assert!(r.passed(), "{r:?}");
            }
        }
    }
}
