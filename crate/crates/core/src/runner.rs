//! Run configurations and the verification suites behind the CLI.
//!
//! Every randomized check draws from a ChaCha stream seeded by the config,
//! one stream per suite, so a report is a pure function of its config.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubbles::{grassmannian_quotient, BubbleContext, BubbleError, CharacterData, ShiftBranch};
use crate::cartan::CartanDatum;
use crate::fields::{FieldDescriptor, FieldElement};
use crate::kkt::{default_window, KKTContext};
use crate::poly::UPoly;
use crate::qhc::{QhcContext, QhcRelation};
use crate::report::{inputs, CaseResult, Report};
use crate::sergeev::SergeevContext;
use crate::series::{vars, Exp, TruncSeries, MAX_VARS};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

fn internal(e: impl std::fmt::Display) -> RunError {
    RunError::Internal(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Cartan,
    Series,
    Kkt,
    Sergeev,
    Qhc,
    Bubbles,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [Suite::Cartan, Suite::Series, Suite::Kkt, Suite::Sergeev, Suite::Qhc, Suite::Bubbles];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cartan => "cartan",
            Suite::Series => "series",
            Suite::Kkt => "kkt",
            Suite::Sergeev => "sergeev",
            Suite::Qhc => "qhc",
            Suite::Bubbles => "bubbles",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = RunError;
    fn from_str(s: &str) -> Result<Self, RunError> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown suite `{s}`")))
    }
}

/// Truncation orders per suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Orders {
    pub series: u32,
    pub kkt: u32,
    pub round_trip: u32,
    pub sergeev: u32,
    pub qhc: u32,
    pub braid: u32,
}

impl Default for Orders {
    fn default() -> Self {
        Orders { series: 8, kkt: 8, round_trip: 10, sergeev: 4, qhc: 6, braid: 4 }
    }
}

impl Orders {
    fn all(n: u32) -> Self {
        Orders { series: n, kkt: n, round_trip: n, sergeev: n, qhc: n, braid: n }
    }
}

/// Sample counts for randomized checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Samples {
    pub kernel: usize,
    pub field: usize,
    pub associativity: usize,
    pub characters: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples { kernel: 200, field: 500, associativity: 200, characters: 100 }
    }
}

/// A single JSON document describing one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub suite: Suite,
    /// Characteristic: 0 or an odd prime ≤ 101.
    pub p: u64,
    /// Colours as rationals (`0`, `-1/2`, `3`, or `hbar`); defaults to I_0
    /// in characteristic p and {0, ħ, 1, 2} in characteristic 0.
    #[serde(default)]
    pub window: Option<Vec<String>>,
    #[serde(default)]
    pub orders: Orders,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(suite: Suite, p: u64) -> Self {
        RunConfig { suite, p, window: None, orders: Orders::default(), samples: Samples::default(), seed: 0 }
    }

    /// Use one truncation order everywhere.
    pub fn with_order(mut self, n: u32) -> Self {
        self.orders = Orders::all(n);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<Vec<BigRational>, RunError> {
        let p = self.p;
        if p != 0 && (p == 2 || p > 101 || !is_prime(p)) {
            return Err(RunError::Config(format!("characteristic {p} is not 0 or an odd prime ≤ 101")));
        }
        let o = &self.orders;
        for (name, v) in [
            ("series", o.series),
            ("kkt", o.kkt),
            ("round_trip", o.round_trip),
            ("sergeev", o.sergeev),
            ("qhc", o.qhc),
            ("braid", o.braid),
        ] {
            if v < 2 {
                return Err(RunError::Config(format!("order for {name} must be at least 2, got {v}")));
            }
        }
        let window = match &self.window {
            None => default_window(p, 2),
            Some(w) => w.iter().map(|s| parse_colour(s)).collect::<Result<Vec<_>, _>>()?,
        };
        if window.is_empty() {
            return Err(RunError::Config("window is empty".into()));
        }
        let datum = CartanDatum::with_colors(p, &window, &[]).map_err(|e| RunError::Config(e.to_string()))?;
        let mut seen = Vec::new();
        for q in &window {
            if p != 0 && !q.denom().is_one() && (q.denom() % BigInt::from(p)).is_zero() {
                return Err(RunError::Config(format!("colour {q} is undefined in characteristic {p}")));
            }
            let c = datum.color(q);
            if !datum.in_i(&c) {
                return Err(RunError::Config(format!("colour {q} is not in I")));
            }
            if seen.contains(&c) {
                return Err(RunError::Config(format!("colour {q} repeated")));
            }
            seen.push(c);
        }
        Ok(window)
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Parse a rational colour; `hbar`/`ħ` mean −1/2.
pub fn parse_colour(s: &str) -> Result<BigRational, RunError> {
    let t = s.trim();
    if t == "hbar" || t == "ħ" {
        return Ok(BigRational::new(BigInt::from(-1), BigInt::from(2)));
    }
    let bad = || RunError::Config(format!("cannot parse colour `{t}`"));
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = BigInt::from_str(n).map_err(|_| bad())?;
    let d = BigInt::from_str(d).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Run a validated configuration. Case timings are kept only if `timings`.
pub fn run(config: &RunConfig, timings: bool) -> Result<Report, RunError> {
    let window = config.validate()?;
    let suites: Vec<Suite> = if config.suite == Suite::All { Suite::EACH.to_vec() } else { vec![config.suite] };
    let mut cases = Vec::new();
    let mut env = BTreeMap::new();
    for suite in &suites {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(*suite as u64 + 1);
        let started = Instant::now();
        let mut out = run_suite(*suite, config, &window, &mut rng, &mut env)?;
        let average = started.elapsed().as_millis() as u64 / out.len().max(1) as u64;
        for c in out.iter_mut().filter(|c| c.ms.is_none()) {
            c.ms = Some(average);
        }
        if suites.len() > 1 {
            for c in &mut out {
                c.id = format!("{}/{}", suite.name(), c.id);
            }
        }
        cases.extend(out);
    }
    if !timings {
        for c in &mut cases {
            c.ms = None;
        }
    }
    let echo = serde_json::to_value(config).map_err(internal)?;
    Ok(Report::new(config.suite.name(), echo, env, cases))
}

fn timed(f: impl FnOnce() -> CaseResult) -> CaseResult {
    let t = Instant::now();
    let mut c = f();
    c.ms = Some(t.elapsed().as_millis() as u64);
    c
}

fn timed_many(f: impl FnOnce() -> Vec<CaseResult>) -> Vec<CaseResult> {
    let t = Instant::now();
    let mut v = f();
    let each = t.elapsed().as_millis() as u64 / v.len().max(1) as u64;
    for c in &mut v {
        c.ms = Some(each);
    }
    v
}

fn run_suite(
    suite: Suite,
    cfg: &RunConfig,
    window: &[BigRational],
    rng: &mut ChaCha8Rng,
    env: &mut BTreeMap<String, String>,
) -> Result<Vec<CaseResult>, RunError> {
    let p = cfg.p;
    let datum = CartanDatum::with_colors(p, window, &[]).map_err(internal)?;
    let colours: Vec<FieldElement> = window.iter().map(|q| datum.color(q)).collect();
    env.insert("field".into(), datum.field().to_string());
    env.insert("branch".into(), "b(i) is the square root of i(i+1) lying in J".into());
    env.insert("order_policy".into(), "identities compared modulo total degree N; exact divisions cost one order".into());
    Ok(match suite {
        Suite::Cartan => cartan_suite(&datum, &colours),
        Suite::Series => series_suite(datum.field(), cfg, rng),
        Suite::Kkt => {
            let ctx = KKTContext::new(p, window, cfg.orders.kkt).map_err(internal)?;
            let mut out = timed_many(|| ctx.verify_all());
            let rt = KKTContext::new(p, window, cfg.orders.round_trip).map_err(internal)?;
            for i in rt.window().to_vec() {
                let mut c = timed(|| rt.verify_round_trip(&i));
                c.id = format!("{}@N={}", c.id, cfg.orders.round_trip);
                out.push(c);
            }
            env.insert("kkt_field".into(), ctx.field().to_string());
            out
        }
        Suite::Sergeev => sergeev_suite(&datum, &colours, cfg, rng)?,
        Suite::Qhc => qhc_suite(cfg, window, env)?,
        Suite::Bubbles => bubbles_suite(&datum, &colours, cfg, rng)?,
        Suite::All => unreachable!("expanded by run"),
    })
}

// ----- cartan -----

fn cartan_suite(datum: &CartanDatum, w: &[FieldElement]) -> Vec<CaseResult> {
    let mut out = Vec::new();
    for i in w {
        let case = CaseResult::new(format!("b[{i}]"), inputs([("i", i.to_string())]));
        let run = || -> Result<CaseResult, crate::cartan::CartanError> {
            let one = datum.field().one();
            let b = datum.b_map(i)?;
            let bn = datum.b_map(&-i)?;
            Ok(case
                .clone()
                .require("b(i)² = i(i+1)", &b * &b == i * &(i + &one))
                .require("b(−i) = −b(i)", bn == -&b)
                .require("b(i) ∈ J", datum.in_j(&b))
                .require("b⁻¹(b(i)) = i", datum.b_inv(&b)? == *i)
                .require("parity(α_i) = p(i)", datum.parity_weight(&datum.alpha_weight(i)?) == datum.parity_color(i)?))
        };
        out.push(run().unwrap_or_else(|e| case.error("evaluation error", e)));
    }
    let both: Vec<FieldElement> = w.iter().flat_map(|i| [i.clone(), -i]).collect();
    let case = CaseResult::new("b-injective", inputs([("colours", both.len().to_string())]));
    let bs: Result<Vec<_>, _> = both.iter().map(|c| datum.b_map(c)).collect();
    out.push(match bs {
        Ok(bs) => {
            let mut injective = true;
            for a in 0..both.len() {
                for b in 0..a {
                    if both[a] != both[b] && bs[a] == bs[b] {
                        injective = false;
                    }
                }
            }
            let split = w.iter().all(|i| i.is_zero() || !datum.in_i(&-i));
            case.require("b injective on W ∪ −W", injective).require("I ∩ −I = {0}", split)
        }
        Err(e) => case.error("evaluation error", e),
    });
    for i in w {
        for j in w {
            let case = CaseResult::new(format!("symmetrizer[{i},{j}]"), inputs([("i", i.to_string()), ("j", j.to_string())]));
            let run = || -> Result<CaseResult, crate::cartan::CartanError> {
                let lhs = datum.d_sym(i)? * datum.cartan_entry(i, j)?;
                let rhs = datum.d_sym(j)? * datum.cartan_entry(j, i)?;
                Ok(case.clone().require("d_i c_ij = d_j c_ji", lhs == rhs))
            };
            out.push(run().unwrap_or_else(|e| case.error("evaluation error", e)));
        }
    }
    out.push(products_case(datum, w));
    out
}

/// Equal products i(i+1) against shifted ones pin down the colours.
fn products_case(datum: &CartanDatum, w: &[FieldElement]) -> CaseResult {
    let field = datum.field();
    let pool: Vec<FieldElement> = match field.elements() {
        Some(all) if datum.characteristic() <= 7 => all.into_iter().filter(|c| datum.in_i(c)).collect(),
        _ => {
            let mut v: Vec<FieldElement> = w.to_vec();
            for i in w {
                v.extend(datum.neighbors(i));
            }
            v.sort();
            v.dedup();
            v
        }
    };
    let one = field.one();
    let hbar = datum.hbar();
    let pr = |a: &FieldElement| a * &(a + &one);
    let mut ok = true;
    for i in &pool {
        for j in &pool {
            if pr(i) == pr(j) && i != j {
                ok = false;
            }
            let jm = j - &one;
            if pr(i) == &jm * j && !(&(i + &one) == j || (i.is_zero() && j.is_zero())) {
                ok = false;
            }
            let jp = j + &one;
            if pr(i) == &jp * &(j + &field.from_i64(2)) && !(*i == jp || (&(i + &one) == j && *j == hbar)) {
                ok = false;
            }
        }
    }
    CaseResult::new("equal-products", inputs([("pool", pool.len().to_string())]))
        .require("i(i+1) = j(j+1), (j−1)j, (j+1)(j+2) cases", ok)
}

// ----- series kernels -----

/// Series coefficients: any element in characteristic p, small integers in
/// characteristic 0 (dense tower elements only measure coefficient growth).
fn scalar<R: Rng>(field: &std::sync::Arc<FieldDescriptor>, rng: &mut R) -> FieldElement {
    if field.characteristic() == 0 {
        field.from_i64(rng.gen_range(-3..=3))
    } else {
        field.random_element(rng)
    }
}

fn random_poly<R: Rng>(field: &std::sync::Arc<FieldDescriptor>, rng: &mut R, nv: usize, degree: u32, order: u32) -> TruncSeries {
    let names = ["x", "y", "z", "w"];
    let vs = vars(&names[..nv]);
    let mut f = TruncSeries::zero(field, &vs, order);
    for _ in 0..rng.gen_range(1..=8) {
        let mut e: Exp = [0; MAX_VARS];
        let total = rng.gen_range(0..=degree);
        for _ in 0..total {
            e[rng.gen_range(0..nv)] += 1;
        }
        f.add_term(e, scalar(field, rng));
    }
    f
}

/// `(f − f^swap)/(x − y)` for a polynomial in two variables, term by term.
pub fn demazure_oracle(f: &TruncSeries) -> TruncSeries {
    let mut out = TruncSeries::zero(f.field(), f.vars(), f.order());
    for (e, c) in f.terms() {
        let (a, b) = (e[0], e[1]);
        if a == b {
            continue;
        }
        // x^a y^b − x^b y^a = sign·(xy)^m (x − y) Σ_k x^k y^{d−1−k}
        let (m, d, c) = if a > b { (b, a - b, c.clone()) } else { (a, b - a, -c) };
        for k in 0..d {
            let mut t: Exp = [0; MAX_VARS];
            t[0] = m + k;
            t[1] = m + d - 1 - k;
            out.add_term(t, c.clone());
        }
    }
    out
}

/// Inverse by Newton iteration g ← g(2 − fg).
pub fn inverse_oracle(f: &TruncSeries) -> Option<TruncSeries> {
    let c0 = f.constant_term().inv().ok()?;
    let two = TruncSeries::constant(&f.field().from_i64(2), f.vars(), f.order());
    let mut g = TruncSeries::constant(&c0, f.vars(), f.order());
    let mut prec = 1;
    while prec < f.order() {
        g = &g * &(&two - &(f * &g));
        prec *= 2;
    }
    Some(g)
}

fn series_suite(field: &std::sync::Arc<FieldDescriptor>, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CaseResult> {
    let n = cfg.orders.series;
    let count = cfg.samples.kernel;
    let mut out = Vec::new();
    let mut batch = |label: &str, mut check: Box<dyn FnMut(&mut ChaCha8Rng) -> Option<String> + '_>, rng: &mut ChaCha8Rng| {
        let t = Instant::now();
        let mut first = None;
        let mut fails = 0;
        for _ in 0..count {
            if let Some(w) = check(rng) {
                fails += 1;
                first.get_or_insert(w);
            }
        }
        let mut c = CaseResult::new(label, inputs([("samples", count.to_string()), ("N", n.to_string())]))
            .require("all samples agree with the oracle", fails == 0);
        if let Some(w) = first {
            c = c.with_note(format!("{fails} failures; first: {w}"));
        }
        c.ms = Some(t.elapsed().as_millis() as u64);
        out.push(c);
    };
    batch(
        "inverse-oracle",
        Box::new(|rng| {
            let mut f = random_poly(field, rng, 2, 4, n);
            let mut c0 = scalar(field, rng);
            while c0.is_zero() {
                c0 = scalar(field, rng);
            }
            f.add_term([0; MAX_VARS], c0);
            if f.constant_term().is_zero() {
                f.add_term([0; MAX_VARS], field.one());
            }
            let g = f.inv().ok()?;
            let oracle = inverse_oracle(&f)?;
            let one = TruncSeries::one(field, f.vars(), n);
            (g != oracle || (&f * &g) != one).then(|| format!("f = {f}"))
        }),
        rng,
    );
    batch(
        "sqrt-oracle",
        Box::new(|rng| {
            let mut f = random_poly(field, rng, 2, 4, n);
            f.add_term([0; MAX_VARS], -f.constant_term());
            let mut c0 = scalar(field, rng);
            while c0.is_zero() {
                c0 = scalar(field, rng);
            }
            f.add_term([0; MAX_VARS], &c0 * &c0);
            let s = f.sqrt_branch(&c0).ok()?;
            let neg = f.sqrt_branch(&-&c0).ok()?;
            let ok = &s * &s == f && s.constant_term() == c0 && neg == s.neg();
            (!ok).then(|| format!("f = {f}, c0 = {c0}"))
        }),
        rng,
    );
    batch(
        "demazure-oracle",
        Box::new(|rng| {
            let f = random_poly(field, rng, 2, 6, n + 1);
            let d = f.demazure(0, 1).ok()?.truncate(n);
            let o = demazure_oracle(&f).truncate(n);
            (d != o).then(|| format!("f = {f}"))
        }),
        rng,
    );
    let fc = cfg.samples.field;
    let t = Instant::now();
    let mut bad = 0;
    for _ in 0..fc {
        let (a, b, c) = (field.random_element(rng), field.random_element(rng), field.random_element(rng));
        let ok = &(&a + &b) + &c == &a + &(&b + &c)
            && &(&a * &b) * &c == &a * &(&b * &c)
            && &a * &b == &b * &a
            && &a + &b == &b + &a
            && &a * &(&b + &c) == &(&a * &b) + &(&a * &c)
            && &a - &a == field.zero()
            && (a.is_zero() || &a * &a.inv().expect("non-zero") == field.one());
        bad += usize::from(!ok);
    }
    let mut c = CaseResult::new("field-axioms", inputs([("samples", fc.to_string())])).require("ring and field axioms", bad == 0);
    c.ms = Some(t.elapsed().as_millis() as u64);
    out.push(c);
    out
}

// ----- Sergeev -----

fn sergeev_suite(
    datum: &CartanDatum,
    w: &[FieldElement],
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CaseResult>, RunError> {
    let n = cfg.orders.sergeev;
    let mut out = Vec::new();
    let two = SergeevContext::new(datum, w, 2, n + 2).map_err(internal)?;
    out.extend(timed_many(|| two.relation_suite()));
    let colours = two.colors().to_vec();
    for i in &colours {
        for j in &colours {
            out.push(timed(|| two.verify_electric(&[i.clone(), j.clone()], 1)));
        }
    }
    for i in w {
        for j in w {
            out.push(timed(|| two.verify_power(i, j)));
            out.push(timed(|| two.verify_double_crossing(i, j)));
            let f = random_poly(two.field(), rng, 2, 3, n + 2);
            out.push(timed(|| two.verify_demazure_crossing(i, j, &f)));
        }
        let f = random_poly(two.field(), rng, 2, 3, n + 2).remap(two.vars(), &[(0, false), (1, false)]);
        out.push(timed(|| two.verify_demazure_series(i, &f)));
    }
    let three = SergeevContext::new(datum, w, 3, n + 2).map_err(internal)?;
    for i in w {
        for j in w {
            for k in w {
                out.push(timed(|| three.verify_colored_braid(i, j, k)));
            }
        }
    }
    let assoc = SergeevContext::new(datum, w, 3, n + 6).map_err(internal)?;
    out.extend(timed_many(|| assoc.verify_associativity(rng, cfg.samples.associativity, n)));
    Ok(out)
}

// ----- QHC -----

fn qhc_suite(cfg: &RunConfig, window: &[BigRational], env: &mut BTreeMap<String, String>) -> Result<Vec<CaseResult>, RunError> {
    let p = cfg.p;
    let mut out = Vec::new();
    let two = QhcContext::new(p, window, 2, cfg.orders.qhc).map_err(internal)?;
    let w = two.kkt().window().to_vec();
    for i in &w {
        out.push(timed(|| two.verify_qhc(QhcRelation::Qhc1, &[i.clone(), w[0].clone()])));
    }
    for i in &w {
        for j in &w {
            let pair = [i.clone(), j.clone()];
            for rel in [QhcRelation::Qhc2, QhcRelation::Qhc3a, QhcRelation::Qhc3b, QhcRelation::Qhc4] {
                out.push(timed(|| two.verify_qhc(rel, &pair)));
            }
            out.push(timed(|| two.verify_rotation(i, j)));
            out.push(timed(|| two.verify_parameters(i, j)));
        }
    }
    let three = QhcContext::from_kkt(
        KKTContext::with_datum(two.kkt().datum().clone(), &w, cfg.orders.braid + crate::qhc::ALGEBRA_SLACK).map_err(internal)?,
        3,
        cfg.orders.braid,
    )
    .map_err(internal)?;
    let all_triples = w.len() <= 3;
    env.insert(
        "braid_triples".into(),
        if all_triples { "all window triples".into() } else { "triples (i,j,i) over the window".into() },
    );
    for i in &w {
        for j in &w {
            for k in &w {
                if all_triples || i == k {
                    out.push(timed(|| three.verify_qhc(QhcRelation::Qhc5, &[i.clone(), j.clone(), k.clone()])));
                }
            }
        }
    }
    Ok(out)
}

// ----- bubbles -----

/// A random valid (m, n, κ) over the context's colours.
pub fn random_character<R: Rng>(ctx: &BubbleContext, rng: &mut R) -> (UPoly, UPoly, i64) {
    let cols: Vec<FieldElement> = ctx.colours().cloned().collect();
    let pick = |rng: &mut R| -> Vec<(FieldElement, u32)> {
        let mut v = Vec::new();
        for c in &cols {
            if rng.gen_bool(0.4) {
                v.push((c.clone(), rng.gen_range(1..=2)));
            }
        }
        v
    };
    let m = ctx.symmetric_poly(&pick(rng)).expect("context colours resolve");
    let n = ctx.symmetric_poly(&pick(rng)).expect("context colours resolve");
    let kappa = n.degree().unwrap_or(0) as i64 - m.degree().unwrap_or(0) as i64;
    (m, n, kappa)
}

/// A random invalid (m, n, κ) and the error class it must trigger.
pub fn adversarial_character<R: Rng>(ctx: &BubbleContext, rng: &mut R, degree: bool) -> (UPoly, UPoly, i64, &'static str) {
    let (m, n, kappa) = random_character(ctx, rng);
    if degree {
        let shift = if rng.gen_bool(0.5) { rng.gen_range(1..=3) } else { -rng.gen_range(1..=3) };
        return (m, n, kappa + shift, "DegreeMismatch");
    }
    let cols: Vec<FieldElement> = ctx.colours().filter(|c| !c.is_zero()).cloned().collect();
    let c = &cols[rng.gen_range(0..cols.len())];
    let lone = UPoly::linear_root(&ctx.b(c).expect("context colour"));
    if rng.gen_bool(0.5) {
        (m.mul(&lone), n, kappa - 1, "SymmetryViolation")
    } else {
        (m, n.mul(&lone), kappa + 1, "SymmetryViolation")
    }
}

fn error_class(e: &BubbleError) -> &'static str {
    match e {
        BubbleError::DegreeMismatch { .. } => "DegreeMismatch",
        BubbleError::SymmetryViolation { .. } => "SymmetryViolation",
        BubbleError::UnresolvedRoot { .. } => "UnresolvedRoot",
        BubbleError::NotMonic { .. } => "NotMonic",
        BubbleError::NotInI(_) => "NotInI",
        BubbleError::NotPolynomial { .. } => "NotPolynomial",
        BubbleError::Cartan(_) => "Cartan",
    }
}

fn bubbles_suite(
    datum: &CartanDatum,
    w: &[FieldElement],
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CaseResult>, RunError> {
    let ctx = BubbleContext::new(datum, w).map_err(internal)?;
    let one = UPoly::one(datum.field());
    let trivial = ctx.character_from_minpolys(&one, &one, 0).map_err(internal)?;
    let mut out = Vec::new();
    let mut samples: Vec<CharacterData> = vec![trivial.clone()];
    for _ in 0..3 {
        let (m, n, k) = random_character(&ctx, rng);
        samples.push(ctx.character_from_minpolys(&m, &n, k).map_err(internal)?);
    }
    let mut branches = Vec::new();
    for i in w {
        branches.push(ctx.branch(i));
        for (s, ch) in samples.iter().enumerate() {
            let mut c = timed(|| ctx.verify_weight_shift(ch, i));
            c.id = format!("{}#{s}", c.id);
            out.push(c);
        }
    }
    branches.sort();
    branches.dedup();
    let names: Vec<&str> = branches.iter().map(|b| b.name()).collect();
    let expected: &[ShiftBranch] = match datum.characteristic() {
        0 => &[ShiftBranch::Zero, ShiftBranch::Hbar, ShiftBranch::Generic],
        3 => &[ShiftBranch::Zero, ShiftBranch::OneAtThree],
        _ => &[ShiftBranch::Zero, ShiftBranch::Hbar, ShiftBranch::Generic],
    };
    out.push(
        CaseResult::new("weight-shift-branches", inputs([("branches", names.join("; "))]))
            .require("window reaches every branch available in this characteristic", expected.iter().all(|b| branches.contains(b))),
    );

    // P along a path, then Q back.
    let path: Vec<FieldElement> = (0..6).map(|_| w[rng.gen_range(0..w.len())].clone()).collect();
    let case = CaseResult::new(
        "telescoping",
        inputs([("path", path.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))]),
    );
    let start = samples.last().expect("samples").clone();
    let run = || -> Result<CaseResult, BubbleError> {
        let mut ch = start.clone();
        for i in &path {
            ch = ctx.crunchy_p(&ch, i)?;
        }
        for i in path.iter().rev() {
            ch = ctx.crunchy_q(&ch, i)?;
        }
        Ok(case.clone().require("Q…Q P…P returns the original fraction", ch.o() == start.o()))
    };
    out.push(run().unwrap_or_else(|e| case.error("evaluation error", e)));

    // Validation: accepted valid inputs, rejected adversarial ones.
    let count = cfg.samples.characters;
    let mut accepted = 0;
    for _ in 0..count {
        let (m, n, k) = random_character(&ctx, rng);
        accepted += usize::from(ctx.character_from_minpolys(&m, &n, k).is_ok());
    }
    out.push(
        CaseResult::new("characters-valid", inputs([("samples", count.to_string())]))
            .require("every valid triple accepted", accepted == count)
            .with_note(format!("{accepted}/{count} accepted")),
    );
    let mut right = 0;
    let mut first_wrong = None;
    for t in 0..count {
        let (m, n, k, class) = adversarial_character(&ctx, rng, t % 2 == 0);
        match ctx.character_from_minpolys(&m, &n, k) {
            Err(e) if error_class(&e) == class => right += 1,
            other => {
                first_wrong.get_or_insert(format!("expected {class}, got {:?}", other.map(|_| "accepted")));
            }
        }
    }
    let mut c = CaseResult::new("characters-adversarial", inputs([("samples", count.to_string())]))
        .require("every adversarial triple rejected with its error class", right == count);
    c = c.with_note(first_wrong.unwrap_or_else(|| format!("{right}/{count} rejected correctly")));
    out.push(c);

    // Polynomial quotient n = O·m.
    let case = CaseResult::new("grassmannian-quotient", inputs([("samples", samples.len().to_string())]));
    let mut ok = true;
    for ch in &samples {
        ok &= grassmannian_quotient(ch.m(), ch.o()).ok().as_ref() == Some(ch.n());
    }
    let stray = samples.iter().find(|ch| !ch.o().denominator().degree().unwrap_or(0).is_zero());
    let rejects = match stray {
        Some(ch) => matches!(grassmannian_quotient(&one, ch.o()), Err(BubbleError::NotPolynomial { .. })),
        None => true,
    };
    out.push(case.require("O·m = n", ok).require("unmatched poles rejected", rejects));

    // Spectrum closure.
    let universe = w.to_vec();
    out.push(ctx.spectrum_closure_check(&universe, &universe));
    for i in w {
        out.push(ctx.spectrum_closure_check(&universe, std::slice::from_ref(i)));
    }
    out.push(ctx.spectrum_closure_check(&universe, &[]));
    Ok(out)
}

/// One step of `weights-act`: the functor symbol and the resulting state.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub op: String,
    pub o: String,
    pub weight: BTreeMap<String, i64>,
}

/// Parse `P_i`/`Q_i` symbols and apply them to a character.
pub fn weights_act(ctx: &BubbleContext, start: &CharacterData, ops: &[String]) -> Result<Vec<TraceStep>, RunError> {
    let snapshot = |op: &str, ch: &CharacterData| TraceStep {
        op: op.to_string(),
        o: ch.o().to_string(),
        weight: ch.weight().iter().map(|(i, k)| (i.to_string(), *k)).collect(),
    };
    let mut trace = vec![snapshot("start", start)];
    let mut ch = start.clone();
    for op in ops {
        let op = op.trim();
        let (kind, colour) = op
            .split_once('_')
            .ok_or_else(|| RunError::Config(format!("operation `{op}` is not of the form P_i or Q_i")))?;
        let c = ctx.datum().color(&parse_colour(colour)?);
        ch = match kind {
            "P" => ctx.crunchy_p(&ch, &c),
            "Q" => ctx.crunchy_q(&ch, &c),
            _ => return Err(RunError::Config(format!("unknown functor `{kind}`"))),
        }
        .map_err(|e| RunError::Config(e.to_string()))?;
        trace.push(snapshot(op, &ch));
    }
    Ok(trace)
}

/// Parse a character string `m=<colour:mult,...>;n=<...>;kappa=<int>`: each
/// entry contributes (u − b(c))^k (u + b(c))^k. Omitted parts are empty;
/// κ defaults to deg n − deg m.
pub fn parse_character(ctx: &BubbleContext, text: &str) -> Result<CharacterData, RunError> {
    let one = UPoly::one(ctx.datum().field());
    let (mut m, mut n, mut kappa) = (one.clone(), one, None);
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty() && *s != "1") {
        let (key, val) = part.split_once('=').ok_or_else(|| RunError::Config(format!("bad character part `{part}`")))?;
        match key.trim() {
            "kappa" => kappa = Some(val.trim().parse::<i64>().map_err(|e| RunError::Config(e.to_string()))?),
            k @ ("m" | "n") => {
                let mut exps = Vec::new();
                for item in val.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (c, e) = item.split_once(':').unwrap_or((item, "1"));
                    let e: u32 = e.trim().parse().map_err(|_| RunError::Config(format!("bad multiplicity in `{item}`")))?;
                    exps.push((ctx.datum().color(&parse_colour(c)?), e));
                }
                let p = ctx.symmetric_poly(&exps).map_err(|e| RunError::Config(e.to_string()))?;
                if k == "m" {
                    m = p;
                } else {
                    n = p;
                }
            }
            other => return Err(RunError::Config(format!("unknown character key `{other}`"))),
        }
    }
    let kappa = kappa.unwrap_or(n.degree().unwrap_or(0) as i64 - m.degree().unwrap_or(0) as i64);
    ctx.character_from_minpolys(&m, &n, kappa).map_err(|e| RunError::Config(e.to_string()))
}

/// Build the bubble context the CLI uses for a characteristic and window.
pub fn bubble_context(p: u64, window: Option<&[String]>) -> Result<BubbleContext, RunError> {
    let mut cfg = RunConfig::new(Suite::Bubbles, p);
    cfg.window = window.map(|w| w.to_vec());
    let window = cfg.validate()?;
    let datum = CartanDatum::with_colors(p, &window, &[]).map_err(internal)?;
    let colours: Vec<FieldElement> = window.iter().map(|q| datum.color(q)).collect();
    BubbleContext::new(&datum, &colours).map_err(internal)
}

/// Rows for the Cartan table: colour, class, b value, d_i, parity, type.
#[derive(Debug, Clone, Serialize)]
pub struct CartanTable {
    pub field: String,
    pub colours: Vec<CartanRow>,
    pub matrix: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CartanRow {
    pub colour: String,
    pub component: String,
    pub b: String,
    pub d: String,
    pub parity: u8,
    pub dynkin: String,
}

pub fn show_cartan(p: u64, window: &[String]) -> Result<CartanTable, RunError> {
    if p != 0 && (p == 2 || p > 101 || !is_prime(p)) {
        return Err(RunError::Config(format!("characteristic {p} is not 0 or an odd prime ≤ 101")));
    }
    let qs = window.iter().map(|s| parse_colour(s)).collect::<Result<Vec<_>, _>>()?;
    let datum = CartanDatum::with_colors(p, &qs, &[]).map_err(|e| RunError::Config(e.to_string()))?;
    let cs: Vec<FieldElement> = qs.iter().map(|q| datum.color(q)).collect();
    let mut rows = Vec::new();
    for c in &cs {
        if !datum.in_i(c) {
            return Err(RunError::Config(format!("colour {c} is not in I")));
        }
        let info = datum.describe(c).map_err(internal)?;
        rows.push(CartanRow {
            colour: c.to_string(),
            component: info.class_rep.to_string(),
            b: datum.b_map(c).map_err(internal)?.to_string(),
            d: datum.d_sym(c).map_err(internal)?.to_string(),
            parity: datum.parity_color(c).map_err(internal)?,
            dynkin: format!("{:?}", info.component_type),
        });
    }
    let matrix = cs
        .iter()
        .map(|i| cs.iter().map(|j| datum.cartan_entry(i, j)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    Ok(CartanTable { field: datum.field().to_string(), colours: rows, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(Suite::Cartan, 4).validate().is_err());
        assert!(RunConfig::new(Suite::Cartan, 103).validate().is_err());
        let mut c = RunConfig::new(Suite::Cartan, 5);
        c.window = Some(vec![]);
        assert!(c.validate().is_err());
        c.window = Some(vec!["0".into(), "1/0".into()]);
        assert!(c.validate().is_err());
        assert!(RunConfig::new(Suite::Cartan, 5).with_order(1).validate().is_err());
        assert!(RunConfig::from_json(r#"{"suite":"qhc","p":5,"bogus":1}"#).is_err());
        let ok = RunConfig::from_json(r#"{"suite":"kkt","p":0,"window":["0","1","2"],"orders":{"kkt":8}}"#).unwrap();
        assert_eq!(ok.validate().unwrap().len(), 3);
    }

    #[test]
    fn oracles_match_simple_cases() {
        let f = FieldDescriptor::prime(7).unwrap();
        let vs = vars(&["x", "y"]);
        let mut p = TruncSeries::zero(&f, &vs, 6);
        p.add_term([2, 0, 0, 0], f.one());
        let d = demazure_oracle(&p);
        assert_eq!(d, p.demazure(0, 1).unwrap().truncate(6).with_order(6));
        let mut u = TruncSeries::one(&f, &vs, 6);
        u.add_term([1, 1, 0, 0], f.from_i64(3));
        assert_eq!(inverse_oracle(&u).unwrap(), u.inv().unwrap());
    }

    #[test]
    fn cartan_and_bubbles_suites_pass() {
        for p in [0, 3, 5] {
            for suite in [Suite::Cartan, Suite::Bubbles] {
                let mut cfg = RunConfig::new(suite, p);
                cfg.samples.characters = 20;
                let r = run(&cfg, false).unwrap();
                let bad: Vec<_> = r.cases.iter().filter(|c| !c.passed()).collect();
                assert!(bad.is_empty(), "p={p} {suite:?}: {bad:?}");
            }
        }
    }

    #[test]
    fn weights_act_trace() {
        let ctx = bubble_context(5, None).unwrap();
        let start = parse_character(&ctx, "1").unwrap();
        let t = weights_act(&ctx, &start, &["P_0".into(), "Q_0".into()]).unwrap();
        let alpha = ctx.datum().alpha_weight(&ctx.datum().color_i64(0)).unwrap();
        let shown: BTreeMap<String, i64> = alpha.iter().map(|(i, k)| (i.to_string(), *k)).collect();
        assert_eq!(t[1].weight, shown);
        assert!(t[2].weight.is_empty());
        assert!(weights_act(&ctx, &start, &["R_0".into()]).is_err());
    }
}
