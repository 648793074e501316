//! Quiver Hecke–Clifford generators built from the change-of-variables
//! series inside the Sergeev block model, and checks of their relations.
//!
//! Generators act on blocks `e(i)` with every colour in the window (a subset
//! of I). On such a block the new dot on strand k is `x_{i_k}(z_k)`, the
//! token is the Clifford generator on strands of colour 0, and the crossing is
//!
//! `τ_k e(i) = e(s_k i)·s_k·g(X_k, X_{k+1}) + [i_k = i_{k+1}] h(X_k, X_{k+1})
//!            − [i_k = i_{k+1} = 0] c_k c_{k+1} h_0(X_k, −X_{k+1})`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use num_rational::BigRational;
use thiserror::Error;

use crate::fields::FieldElement;
use crate::kkt::{KKTContext, KktError, Kind};
use crate::report::{inputs, CaseResult};
use crate::sergeev::{SergeevContext, SergeevElement, SergeevError, IDENTITY_PERM};
use crate::series::TruncSeries;

/// Extra orders the algebra carries beyond the comparison order.
pub const ALGEBRA_SLACK: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QhcError {
    #[error("tokens exist only on strands of colour 0, not {0}")]
    TokenColor(String),
    #[error("expected {expected} colours, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error(transparent)]
    Kkt(#[from] KktError),
    #[error(transparent)]
    Sergeev(#[from] SergeevError),
}

impl From<crate::series::SeriesError> for QhcError {
    fn from(e: crate::series::SeriesError) -> Self {
        QhcError::Kkt(e.into())
    }
}

pub type QhcResult<T> = Result<T, QhcError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QhcRelation {
    Qhc1,
    Qhc2,
    Qhc3a,
    Qhc3b,
    Qhc4,
    Qhc5,
}

impl QhcRelation {
    pub const ALL: [QhcRelation; 6] =
        [QhcRelation::Qhc1, QhcRelation::Qhc2, QhcRelation::Qhc3a, QhcRelation::Qhc3b, QhcRelation::Qhc4, QhcRelation::Qhc5];

    pub fn name(self) -> &'static str {
        match self {
            QhcRelation::Qhc1 => "QHC1",
            QhcRelation::Qhc2 => "QHC2",
            QhcRelation::Qhc3a => "QHC3a",
            QhcRelation::Qhc3b => "QHC3b",
            QhcRelation::Qhc4 => "QHC4",
            QhcRelation::Qhc5 => "QHC5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }

    /// Number of strands the relation lives on.
    pub fn strands(self) -> usize {
        match self {
            QhcRelation::Qhc1 => 1,
            QhcRelation::Qhc5 => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for QhcRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Generators on `n` strands, compared modulo `order`.
pub struct QhcContext {
    kkt: KKTContext,
    alg: SergeevContext,
    order: u32,
    blocks: Vec<u16>,
    crossings: Mutex<BTreeMap<usize, SergeevElement>>,
}

impl QhcContext {
    /// Build for characteristic `p`, a rational colour window in I, `n`
    /// strands and comparison order `order`.
    pub fn new(p: u64, window: &[BigRational], n: usize, order: u32) -> QhcResult<Self> {
        let alg_order = order + ALGEBRA_SLACK;
        let kkt = KKTContext::new(p, window, alg_order)?;
        Self::from_kkt(kkt, n, order)
    }

    pub fn from_kkt(kkt: KKTContext, n: usize, order: u32) -> QhcResult<Self> {
        let alg_order = order + ALGEBRA_SLACK;
        let alg = SergeevContext::new(kkt.datum(), kkt.window(), n, alg_order)?;
        let blocks = alg
            .tuples()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.iter().all(|c| kkt.window().contains(c)))
            .map(|(k, _)| k as u16)
            .collect();
        Ok(QhcContext { kkt, alg, order, blocks, crossings: Mutex::new(BTreeMap::new()) })
    }

    pub fn kkt(&self) -> &KKTContext {
        &self.kkt
    }

    pub fn algebra(&self) -> &SergeevContext {
        &self.alg
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Indices of the blocks whose colours all lie in the window.
    pub fn blocks(&self) -> &[u16] {
        &self.blocks
    }

    fn n(&self) -> usize {
        self.alg.strands()
    }

    fn colour(&self, idx: u16, k: usize) -> FieldElement {
        self.alg.tuple(idx)[k].clone()
    }

    /// x_{i_k}(z_k) on block `idx` (k 0-based).
    fn new_dot(&self, idx: u16, k: usize) -> QhcResult<TruncSeries> {
        let s = self.kkt.x_series(&self.colour(idx, k))?;
        Ok(s.embed(self.alg.vars(), &[k]).with_order(self.alg.order().min(s.order())))
    }

    /// A two-variable series in new variables evaluated at (±X_a, ±X_b).
    fn compose2(&self, f: &TruncSeries, idx: u16, a: (usize, bool), b: (usize, bool)) -> QhcResult<TruncSeries> {
        let xa = self.new_dot(idx, a.0)?;
        let xb = self.new_dot(idx, b.0)?;
        let xa = if a.1 { xa.neg() } else { xa };
        let xb = if b.1 { xb.neg() } else { xb };
        Ok(f.subst(&[xa, xb])?)
    }

    fn diag<F>(&self, mut f: F) -> QhcResult<SergeevElement>
    where
        F: FnMut(u16) -> QhcResult<Option<TruncSeries>>,
    {
        let mut out = self.alg.zero();
        for &idx in &self.blocks {
            if let Some(s) = f(idx)? {
                out = out.add(&self.alg.pin(self.alg.tuple(idx), s)?)?;
            }
        }
        Ok(out)
    }

    /// Unit of the window blocks.
    pub fn unit(&self) -> QhcResult<SergeevElement> {
        self.diag(|_| Ok(Some(self.alg.one_series())))
    }

    /// New dot on strand `k` (1-based).
    pub fn build_dot(&self, k: usize) -> QhcResult<SergeevElement> {
        self.check_strand(k, false)?;
        self.diag(|idx| Ok(Some(self.new_dot(idx, k - 1)?)))
    }

    /// Token on strand `k` (1-based) over every window block of colour 0 there.
    pub fn build_token(&self, k: usize) -> QhcResult<SergeevElement> {
        self.check_strand(k, false)?;
        let mut out = self.alg.zero();
        for &idx in &self.blocks {
            if self.colour(idx, k - 1).is_zero() {
                out = out.add(&self.alg.term(IDENTITY_PERM, 1 << (k - 1), self.alg.tuple(idx), self.alg.one_series())?)?;
            }
        }
        Ok(out)
    }

    /// Token on strand `k` of a single block; rejects non-zero colours.
    pub fn build_token_on(&self, k: usize, block: &[FieldElement]) -> QhcResult<SergeevElement> {
        self.check_strand(k, false)?;
        if !block[k - 1].is_zero() {
            return Err(QhcError::TokenColor(block[k - 1].to_string()));
        }
        Ok(self.alg.term(IDENTITY_PERM, 1 << (k - 1), block, self.alg.one_series())?)
    }

    fn check_strand(&self, k: usize, pair: bool) -> QhcResult<()> {
        let limit = if pair { self.n() - 1 } else { self.n() };
        if k == 0 || k > limit {
            return Err(SergeevError::IndexOutOfRange { k, n: self.n() }.into());
        }
        Ok(())
    }

    /// New crossing of strands `k`, `k+1` (1-based).
    pub fn build_crossing(&self, k: usize) -> QhcResult<SergeevElement> {
        self.check_strand(k, true)?;
        if let Some(t) = self.crossings.lock().unwrap().get(&k) {
            return Ok(t.clone());
        }
        let kk = k - 1;
        let s = self.alg.crossing(k)?;
        let mut out = self.alg.zero();
        for &idx in &self.blocks {
            let t = self.alg.tuple(idx).to_vec();
            let (a, b) = (&t[kk], &t[kk + 1]);
            let mut st = t.clone();
            st.swap(kk, kk + 1);
            let g = self.compose2(&self.kkt.g_series(a, b)?, idx, (kk, false), (kk + 1, false))?;
            let left = self.alg.mul(&self.alg.idempotent(&st)?, &s)?;
            out = out.add(&self.alg.mul(&left, &self.alg.pin(&t, g)?)?)?;
            if a == b {
                let h = self.kkt.h_series(a)?;
                out = out.add(&self.alg.pin(&t, self.compose2(&h, idx, (kk, false), (kk + 1, false))?)?)?;
                if a.is_zero() {
                    let tok = self.compose2(&h, idx, (kk, false), (kk + 1, true))?;
                    out = out.sub(&self.alg.term(IDENTITY_PERM, 3 << kk, &t, tok)?)?;
                }
            }
        }
        self.crossings.lock().unwrap().insert(k, out.clone());
        Ok(out)
    }

    /// `a_1 · … · a_r · e(i)`, multiplied from the right.
    fn word_on(&self, factors: &[&SergeevElement], idx: u16) -> QhcResult<SergeevElement> {
        let mut acc = self.alg.idempotent(self.alg.tuple(idx))?;
        for f in factors.iter().rev() {
            acc = self.alg.mul(f, &acc)?;
        }
        Ok(acc)
    }

    fn block_case(&self, id: String, colors: &[FieldElement]) -> CaseResult {
        let cs: Vec<String> = colors.iter().map(|c| c.to_string()).collect();
        CaseResult::new(id, inputs([("colors", cs.join(",")), ("N", self.order.to_string())]))
    }

    /// Verify one relation on the block with the given colours (one colour per
    /// strand of the relation; the context must have that many strands).
    pub fn verify_qhc(&self, rel: QhcRelation, colors: &[FieldElement]) -> CaseResult {
        let cs: Vec<String> = colors.iter().map(|c| c.to_string()).collect();
        let case = self.block_case(format!("{rel}[{}]", cs.join(",")), colors);
        let fallback = case.clone();
        self.qhc_inner(rel, colors, case).unwrap_or_else(|e| fallback.error("evaluation error", e))
    }

    fn qhc_inner(&self, rel: QhcRelation, colors: &[FieldElement], case: CaseResult) -> QhcResult<CaseResult> {
        let n = self.n();
        let need = rel.strands().max(if rel == QhcRelation::Qhc1 { 1 } else { rel.strands() });
        if colors.len() != n || n < need {
            return Err(QhcError::WrongArity { expected: need.max(n), got: colors.len() });
        }
        let idx = self.alg.tuple_index(colors)?;
        let cmp = |case: CaseResult, label: &str, l: &SergeevElement, r: &SergeevElement| {
            self.alg.compare(case, label, l, r, self.order)
        };
        let e = self.alg.idempotent(colors)?;
        let zero = FieldElement::is_zero;
        Ok(match rel {
            QhcRelation::Qhc1 => {
                let mut case = case;
                let mut applied = false;
                for k in 1..=n {
                    if !zero(&colors[k - 1]) {
                        continue;
                    }
                    applied = true;
                    let c = self.build_token(k)?;
                    let x = self.build_dot(k)?;
                    case = cmp(case, "C² = −1", &self.word_on(&[&c, &c], idx)?, &e.neg());
                    let cx = self.word_on(&[&c, &x], idx)?;
                    let xc = self.word_on(&[&x, &c], idx)?;
                    case = cmp(case, "CX = −XC", &cx, &xc.neg());
                }
                if applied {
                    case
                } else {
                    case.with_note("no strand of colour 0")
                }
            }
            QhcRelation::Qhc2 => {
                let t = self.build_crossing(1)?;
                let mut case = case;
                let mut applied = false;
                if zero(&colors[0]) {
                    let (c1, c2) = (self.build_token(1)?, self.build_token(2)?);
                    case = cmp(case, "τC₁ = C₂τ", &self.word_on(&[&t, &c1], idx)?, &self.word_on(&[&c2, &t], idx)?);
                    applied = true;
                }
                if zero(&colors[1]) {
                    let (c1, c2) = (self.build_token(1)?, self.build_token(2)?);
                    case = cmp(case, "C₁τ = τC₂", &self.word_on(&[&c1, &t], idx)?, &self.word_on(&[&t, &c2], idx)?);
                    applied = true;
                }
                if applied {
                    case
                } else {
                    case.with_note("no strand of colour 0")
                }
            }
            QhcRelation::Qhc3a | QhcRelation::Qhc3b => {
                let t = self.build_crossing(1)?;
                let (x1, x2) = (self.build_dot(1)?, self.build_dot(2)?);
                let lhs = if rel == QhcRelation::Qhc3a {
                    self.word_on(&[&t, &x1], idx)?.sub(&self.word_on(&[&x2, &t], idx)?)?
                } else {
                    self.word_on(&[&x1, &t], idx)?.sub(&self.word_on(&[&t, &x2], idx)?)?
                };
                let rhs = if colors[0] != colors[1] {
                    self.alg.zero()
                } else if zero(&colors[0]) {
                    let cc = self.alg.term(IDENTITY_PERM, 0b11, colors, self.alg.one_series())?;
                    if rel == QhcRelation::Qhc3a {
                        e.sub(&cc)?
                    } else {
                        e.add(&cc)?
                    }
                } else {
                    e.clone()
                };
                cmp(case, "dot sliding through the crossing", &lhs, &rhs)
            }
            QhcRelation::Qhc4 => {
                let t = self.build_crossing(1)?;
                let lhs = self.word_on(&[&t, &t], idx)?;
                let q = self.kkt.q_poly(&colors[0], &colors[1])?;
                let rhs = self.alg.pin(colors, self.compose2(&q, idx, (0, false), (1, false))?)?;
                cmp(case, "ττ = Q_ij(X₁,X₂)", &lhs, &rhs)
            }
            QhcRelation::Qhc5 => {
                let (t1, t2) = (self.build_crossing(1)?, self.build_crossing(2)?);
                let lhs = self.word_on(&[&t1, &t2, &t1], idx)?.sub(&self.word_on(&[&t2, &t1, &t2], idx)?)?;
                let rhs = self.braid_rhs(colors, idx)?;
                let note = if colors[0] == colors[2] { "i = k" } else { "i ≠ k: zero right side" };
                cmp(case, "τ₁τ₂τ₁ − τ₂τ₁τ₂", &lhs, &rhs).with_note(note)
            }
        })
    }

    /// Right side of the braid relation on block (i, j, k).
    fn braid_rhs(&self, colors: &[FieldElement], idx: u16) -> QhcResult<SergeevElement> {
        let (i, j, k) = (&colors[0], &colors[1], &colors[2]);
        let datum = self.kkt.datum();
        if i != k || i == j || !datum.is_adjacent(i, j) {
            return Ok(self.alg.zero());
        }
        let a = -datum.cartan_entry(i, j).map_err(KktError::from)?;
        let x1 = self.new_dot(idx, 0)?;
        let x3 = self.new_dot(idx, 2)?;
        let mut even = TruncSeries::zero(self.alg.field(), self.alg.vars(), self.alg.order());
        let mut odd = even.clone();
        for r in 0..a {
            let s = (a - 1 - r) as u32;
            let xr = x1.pow(r as u32);
            even = &even + &(&xr * &x3.pow(s));
            odd = &odd + &(&xr * &x3.neg().pow(s));
        }
        let c = i - j;
        let mut out = self.alg.pin(colors, even.scale(&c))?;
        if i.is_zero() {
            out = out.sub(&self.alg.term(IDENTITY_PERM, 0b101, colors, odd.scale(&c))?)?;
        }
        Ok(out)
    }

    /// Both rotated forms of the crossing agree with its definition on e(ij).
    pub fn verify_rotation(&self, i: &FieldElement, j: &FieldElement) -> CaseResult {
        let colors = [i.clone(), j.clone()];
        let case = self.block_case(format!("rotation[{i},{j}]"), &colors);
        let fallback = case.clone();
        let run = || -> QhcResult<CaseResult> {
            let idx = self.alg.tuple_index(&colors)?;
            let t = self.build_crossing(1)?;
            let lhs = self.word_on(&[&t], idx)?;
            let alt1 = self.rotation_form(i, j, false)?;
            let alt2 = self.rotation_form(i, j, true)?;
            let case = self.alg.compare(case, "first rotated form", &lhs, &alt1, self.order);
            Ok(self.alg.compare(case, "second rotated form", &lhs, &alt2, self.order))
        };
        run().unwrap_or_else(|e| fallback.error("evaluation error", e))
    }

    /// The crossing on e(ij) with g pinned on one strand above and below the
    /// projected crossing; `right` selects the right strand.
    pub fn rotation_form(&self, i: &FieldElement, j: &FieldElement, right: bool) -> QhcResult<SergeevElement> {
        let src = [i.clone(), j.clone()];
        let tgt = [j.clone(), i.clone()];
        let src_idx = self.alg.tuple_index(&src)?;
        let tgt_idx = self.alg.tuple_index(&tgt)?;
        let proj = self.alg.projected_crossing(&src, &tgt, 1)?;
        let g = self.kkt.g_series(i, j)?;
        let strand = usize::from(right);
        let top = self.new_dot(tgt_idx, strand)?;
        let bottom = self.new_dot(src_idx, strand)?;
        // g(x,y) = Σ a_mn x^m y^n. Left: Σ_m G_m(top)·P·bottom^m with x below.
        // Right: g(y,x) pinned, so y (first slot) goes on top.
        let (below_slot, above_slot) = if right { (1, 0) } else { (0, 1) };
        let mut grouped: BTreeMap<u8, TruncSeries> = BTreeMap::new();
        for (e, c) in g.terms() {
            let mut ae = [0u8; crate::series::MAX_VARS];
            ae[0] = e[above_slot];
            grouped
                .entry(e[below_slot])
                .or_insert_with(|| TruncSeries::zero(g.field(), g.vars(), g.order()))
                .add_term(ae, c.clone());
        }
        let zero_arg = TruncSeries::zero(self.alg.field(), self.alg.vars(), self.alg.order());
        let mut out = self.alg.zero();
        for (m, gm) in grouped {
            if m as u32 >= self.alg.order() {
                continue;
            }
            let upper = gm.subst(&[top.clone(), zero_arg.clone()])?;
            let lower = bottom.pow(m as u32);
            let term = self.alg.product(&[&self.alg.pin(&tgt, upper)?, &proj, &self.alg.pin(&src, lower)?])?;
            out = out.add(&term)?;
        }
        if i == j {
            let gd = self.kkt.diagonal(&self.kkt.g_series(i, i)?);
            let t = self.kkt.t_series(i)?;
            if !right {
                let corr = self.compose2(&(&gd * &t), src_idx, (0, false), (1, false))?;
                out = out.add(&self.alg.pin(&src, corr)?)?;
                if self.kkt.kind(i) == Kind::Zero {
                    let tok = self.compose2(&(&gd * &t), src_idx, (0, false), (1, true))?;
                    out = out.sub(&self.alg.term(IDENTITY_PERM, 0b11, &src, tok)?)?;
                }
            } else {
                let corr = self.compose2(&(&gd * &t), src_idx, (1, false), (0, false))?;
                out = out.sub(&self.alg.pin(&src, corr)?)?;
                if self.kkt.kind(i) == Kind::Zero {
                    let tok = self.compose2(&(&gd * &t), src_idx, (1, true), (0, false))?;
                    out = out.add(&self.alg.term(IDENTITY_PERM, 0b11, &src, tok)?)?;
                }
            }
        }
        Ok(out)
    }

    /// Parameter sanity: Q_ij(1,0) is a unit for i ≠ j, Q_ij(x,y) = Q_ji(y,x),
    /// and Q_0j involves only even powers of x.
    pub fn verify_parameters(&self, i: &FieldElement, j: &FieldElement) -> CaseResult {
        let case = self.block_case(format!("parameters[{i},{j}]"), &[i.clone(), j.clone()]);
        let fallback = case.clone();
        let run = || -> QhcResult<CaseResult> {
            let q = self.kkt.q_poly(i, j)?;
            let qt = self.kkt.q_poly(j, i)?.swap_vars(0, 1);
            let f = self.alg.field();
            let mut case = case.compare("Q_ij(x,y) = Q_ji(y,x)", &q, &qt, q.order().min(qt.order()));
            if i != j {
                case = case.require("Q_ij(1,0) is a unit", !q.eval(&[f.one(), f.zero()]).is_zero());
            } else {
                case = case.require("Q_ii = 0", q.is_zero());
            }
            if i.is_zero() {
                case = case.require("Q_0j ∈ 𝕜[x², y]", q.terms().all(|(e, _)| e[0] % 2 == 0));
            }
            Ok(case)
        };
        run().unwrap_or_else(|e| fallback.error("evaluation error", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kkt::default_window;

    #[test]
    fn generators_basic_shape() {
        let q = QhcContext::new(5, &default_window(5, 0), 2, 3).unwrap();
        let f = q.kkt().field().clone();
        let x = q.build_dot(1).unwrap();
        assert!(x.terms().all(|(_, s)| s.constant_term().is_zero()));
        assert!(q.build_token_on(1, &[f.one(), f.zero()]).is_err());
        assert!(q.build_token_on(2, &[f.one(), f.zero()]).is_ok());
        assert_eq!(q.build_crossing(1).unwrap().parity(), Some(0));
        assert_eq!(q.build_token(1).unwrap().parity(), Some(1));
    }

    #[test]
    fn two_strand_relations_p5() {
        let q = QhcContext::new(5, &default_window(5, 0), 2, 4).unwrap();
        let w = q.kkt().window().to_vec();
        for i in &w {
            for j in &w {
                for rel in [QhcRelation::Qhc1, QhcRelation::Qhc2, QhcRelation::Qhc3a, QhcRelation::Qhc3b, QhcRelation::Qhc4] {
                    let r = q.verify_qhc(rel, &[i.clone(), j.clone()]);
                    assert!(r.passed(), "{r:?}");
                }
                let r = q.verify_rotation(i, j);
                assert!(r.passed(), "{r:?}");
                assert!(q.verify_parameters(i, j).passed());
            }
        }
    }

    #[test]
    fn braid_p3() {
        let q = QhcContext::new(3, &default_window(3, 0), 3, 3).unwrap();
        let f = q.kkt().field().clone();
        let (zero, one) = (f.zero(), f.one());
        for t in [[&zero, &one, &zero], [&one, &zero, &one], [&one, &one, &one], [&zero, &zero, &one]] {
            let r = q.verify_qhc(QhcRelation::Qhc5, &[t[0].clone(), t[1].clone(), t[2].clone()]);
            assert!(r.passed(), "{r:?}");
        }
    }
}
