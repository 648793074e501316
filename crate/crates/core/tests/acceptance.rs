//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::time::{Duration, Instant};

use isomeric_core::bubbles::{BubbleContext, BubbleError, ShiftBranch};
use isomeric_core::cartan::CartanDatum;
use isomeric_core::fields::FieldElement;
use isomeric_core::kkt::{default_window, KKTContext, Lemma};
use isomeric_core::poly::UPoly;
use isomeric_core::qhc::{QhcContext, QhcRelation};
use isomeric_core::report::CaseResult;
use isomeric_core::runner::{adversarial_character, random_character, run, RunConfig, Suite};
use isomeric_core::sergeev::SergeevContext;
use isomeric_core::series::{vars, TruncSeries, MAX_VARS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Tally cases; the detail names the first failure, if any.
fn tally(label: &str, cases: &[CaseResult]) -> Outcome {
    let bad: Vec<&CaseResult> = cases.iter().filter(|c| !c.passed()).collect();
    match bad.first() {
        None => Outcome { pass: !cases.is_empty(), detail: format!("{label}: {} cases", cases.len()) },
        Some(c) => Outcome {
            pass: false,
            detail: format!("{label}: {}/{} failed, first {} ({:?}, {:?})", bad.len(), cases.len(), c.id, c.note, c.residual),
        },
    }
}

fn merge(parts: Vec<Outcome>) -> Outcome {
    Outcome { pass: parts.iter().all(|o| o.pass), detail: parts.into_iter().map(|o| o.detail).collect::<Vec<_>>().join("; ") }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn char0_window() -> Vec<num_rational::BigRational> {
    default_window(0, 2)
}

fn qhc_pairs() -> Outcome {
    let mut parts = Vec::new();
    for p in [3u64, 5] {
        let t = Instant::now();
        let ctx = QhcContext::new(p, &default_window(p, 0), 2, 6).expect("context");
        let w = ctx.kkt().window().to_vec();
        let mut cases = Vec::new();
        for i in &w {
            for j in &w {
                for rel in [QhcRelation::Qhc1, QhcRelation::Qhc2, QhcRelation::Qhc3a, QhcRelation::Qhc3b, QhcRelation::Qhc4] {
                    cases.push(ctx.verify_qhc(rel, &[i.clone(), j.clone()]));
                }
            }
        }
        let took = t.elapsed();
        let mut o = tally(&format!("p={p} N=6"), &cases);
        o.pass &= took < Duration::from_secs(60);
        o.detail += &format!(" in {}", secs(took));
        parts.push(o);
    }
    merge(parts)
}

fn qhc_braid() -> Outcome {
    let t = Instant::now();
    let ctx = QhcContext::new(5, &default_window(5, 0), 3, 4).expect("context");
    let w = ctx.kkt().window().to_vec();
    let mut cases = Vec::new();
    let mut kinds = [false; 4];
    for i in &w {
        for j in &w {
            let (a, b) = (i.residue().expect("prime field") as i64, j.residue().expect("prime field") as i64);
            if (a - b).abs() == 1 {
                kinds[0] = true;
            } else if a == 0 && b == 0 {
                kinds[1] = true;
            } else if a == b {
                kinds[2] = true;
            } else {
                kinds[3] = true;
            }
            cases.push(ctx.verify_qhc(QhcRelation::Qhc5, &[i.clone(), j.clone(), i.clone()]));
        }
    }
    let took = t.elapsed();
    let mut o = tally("p=5 N=4 triples (i,j,i)", &cases);
    o.pass &= kinds.iter().all(|k| *k) && took < Duration::from_secs(600);
    o.detail += &format!(", all four adjacency kinds covered: {}, in {}", kinds.iter().all(|k| *k), secs(took));
    o
}

const SERIES_LEMMAS: [Lemma; 8] = [
    Lemma::MoreMagic,
    Lemma::HiDuff,
    Lemma::Echo,
    Lemma::NewMoney,
    Lemma::Gunky,
    Lemma::Cash1,
    Lemma::Cash3,
    Lemma::DoggyDaycare,
];

fn lemma_cases(ctx: &KKTContext) -> Vec<CaseResult> {
    let w = ctx.window().to_vec();
    let mut cases = Vec::new();
    for lemma in SERIES_LEMMAS {
        for i in &w {
            if lemma.is_pairwise() {
                for j in &w {
                    cases.push(ctx.verify_lemma(lemma, i, Some(j)));
                }
            } else {
                cases.push(ctx.verify_lemma(lemma, i, None));
            }
        }
    }
    cases
}

fn series_lemmas() -> Outcome {
    let mut parts = Vec::new();
    for p in [3u64, 5, 7] {
        let ctx = KKTContext::new(p, &default_window(p, 0), 8).expect("context");
        parts.push(tally(&format!("p={p}"), &lemma_cases(&ctx)));
    }
    let ctx = KKTContext::new(0, &char0_window(), 8).expect("context");
    let f = ctx.field();
    let has = |n: i64| f.from_i64(n).sqrt_in_field().map(|r| r.is_some()).unwrap_or(false);
    let mut o = tally("char 0 {0,ħ,1,2}", &lemma_cases(&ctx));
    let tower = has(-1) && has(2) && has(6);
    o.pass &= tower;
    o.detail += &format!(" over {} (contains i, √2, √6: {tower})", f);
    parts.push(o);
    merge(parts)
}

fn round_trip() -> Outcome {
    let mut parts = Vec::new();
    for (p, w) in [(3u64, default_window(3, 0)), (5, default_window(5, 0)), (7, default_window(7, 0)), (0, char0_window())] {
        let ctx = KKTContext::new(p, &w, 10).expect("context");
        let cases: Vec<_> = ctx.window().to_vec().iter().map(|i| ctx.verify_round_trip(i)).collect();
        parts.push(tally(&format!("p={p} N=10"), &cases));
    }
    merge(parts)
}

fn when_is_it_zero() -> Outcome {
    let ctx = KKTContext::new(7, &default_window(7, 0), 8).expect("context");
    let cases: Vec<_> = ctx.window().to_vec().iter().map(|i| ctx.verify_lemma(Lemma::WhenIsItZero, i, None)).collect();
    tally("p=7, i ∈ I_0", &cases)
}

fn bubble_context(p: u64, bound: i64) -> BubbleContext {
    let datum = if p == 0 {
        CartanDatum::with_colors(0, &default_window(0, bound), &[]).expect("datum")
    } else {
        CartanDatum::with_colors(p, &[], &[]).expect("datum")
    };
    let w = datum.default_window(bound);
    BubbleContext::new(&datum, &w).expect("context")
}

fn weight_shift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut parts = Vec::new();
    let mut branches: Vec<ShiftBranch> = Vec::new();
    for (p, bound, samples) in [(3u64, 0, 20), (5, 0, 20), (0, 3, 5)] {
        let ctx = bubble_context(p, bound);
        let one = UPoly::one(ctx.datum().field());
        let mut chars = vec![ctx.character_from_minpolys(&one, &one, 0).expect("trivial")];
        for _ in 0..samples {
            let (m, n, k) = random_character(&ctx, &mut rng);
            chars.push(ctx.character_from_minpolys(&m, &n, k).expect("valid"));
        }
        let w = ctx.datum().default_window(bound);
        let mut cases = Vec::new();
        for i in &w {
            branches.push(ctx.branch(i));
            for ch in &chars {
                cases.push(ctx.verify_weight_shift(ch, i));
            }
        }
        parts.push(tally(&format!("p={p}"), &cases));
    }
    branches.sort();
    branches.dedup();
    let mut o = merge(parts);
    o.pass &= branches.len() == 4;
    o.detail += &format!("; branches {}", branches.iter().map(|b| b.name()).collect::<Vec<_>>().join(" | "));
    o
}

fn character_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parts = Vec::new();
    for (p, bound) in [(5u64, 0), (0, 3)] {
        let ctx = bubble_context(p, bound);
        let accepted = (0..100)
            .filter(|_| {
                let (m, n, k) = random_character(&ctx, &mut rng);
                ctx.character_from_minpolys(&m, &n, k).is_ok()
            })
            .count();
        let mut rejected = 0;
        for t in 0..100 {
            let (m, n, k, class) = adversarial_character(&ctx, &mut rng, t % 2 == 0);
            let ok = match (ctx.character_from_minpolys(&m, &n, k), class) {
                (Err(BubbleError::DegreeMismatch { .. }), "DegreeMismatch") => true,
                (Err(BubbleError::SymmetryViolation { .. }), "SymmetryViolation") => true,
                _ => false,
            };
            rejected += usize::from(ok);
        }
        parts.push(Outcome {
            pass: accepted == 100 && rejected == 100,
            detail: format!("p={p}: {accepted}/100 valid accepted, {rejected}/100 adversarial rejected with the right class"),
        });
    }
    merge(parts)
}

fn random_poly(ctx: &SergeevContext, rng: &mut ChaCha8Rng, order: u32) -> TruncSeries {
    let f = ctx.field();
    let mut s = TruncSeries::zero(f, &vars(&["x", "y"]), order);
    for _ in 0..4 {
        let mut e = [0u8; MAX_VARS];
        e[0] = rng.gen_range(0..3);
        e[1] = rng.gen_range(0..3);
        s.add_term(e, f.random_element(rng));
    }
    s
}

fn sergeev() -> Outcome {
    let datum = CartanDatum::with_colors(5, &[], &[]).expect("datum");
    let w: Vec<FieldElement> = datum.default_window(0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let two = SergeevContext::new(&datum, &w, 2, 6).expect("context");
    let rels = two.relation_suite();
    let mut electric = Vec::new();
    for i in two.colors() {
        for j in two.colors() {
            electric.push(two.verify_electric(&[i.clone(), j.clone()], 1));
        }
    }
    let (mut power, mut grid, mut upwards) = (Vec::new(), Vec::new(), Vec::new());
    for i in &w {
        for j in &w {
            power.push(two.verify_power(i, j));
            let f = random_poly(&two, &mut rng, 6);
            grid.push(two.verify_demazure_crossing(i, j, &f));
            upwards.push(two.verify_double_crossing(i, j));
        }
    }
    let three = SergeevContext::new(&datum, &w, 3, 6).expect("context");
    let mut braid = Vec::new();
    for i in &w {
        for j in &w {
            for k in &w {
                braid.push(three.verify_colored_braid(i, j, k));
            }
        }
    }
    let assoc_ctx = SergeevContext::new(&datum, &w, 3, 10).expect("context");
    let assoc = assoc_ctx.verify_associativity(&mut rng, 200, 4);
    merge(vec![
        tally("relations", &rels),
        tally("associativity n=3 N=4", &assoc),
        tally("electric", &electric),
        tally("power", &power),
        tally("grid", &grid),
        tally("upwards invertibility", &upwards),
        tally("projbraid", &braid),
    ])
}

fn kernels() -> Outcome {
    let mut parts = Vec::new();
    for p in [5u64, 0] {
        let cfg = RunConfig::new(Suite::Series, p);
        let report = run(&cfg, false).expect("series suite");
        parts.push(tally(&format!("p={p} (200 inv/sqrt/Demazure samples, 500 field triples)"), &report.cases));
    }
    merge(parts)
}

fn determinism() -> Outcome {
    let mut cfg = RunConfig::new(Suite::All, 3);
    cfg.seed = 2024;
    cfg.samples.associativity = 40;
    let a = run(&cfg, false).expect("run").to_json();
    let b = run(&cfg, false).expect("run").to_json();
    Outcome { pass: a == b, detail: format!("suite all, p=3, seed 2024: {} bytes, identical: {}", a.len(), a == b) }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("QHC1–QHC4, p ∈ {3,5}, all pairs, N=6, < 60 s per prime", qhc_pairs),
        ("QHC5 braid triples (i,j,i), p=5, N=4, < 10 min", qhc_braid),
        ("change-of-variables series lemmas at N=8", series_lemmas),
        ("round trip and defining relation mod z^10", round_trip),
        ("p(u,b(i)) closed form, p=7", when_is_it_zero),
        ("weight shift by α_i under P_i, −α_i under Q_i", weight_shift),
        ("character validation", character_validation),
        ("Sergeev algebra soundness", sergeev),
        ("kernel oracles and field axioms", kernels),
        ("report determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} [{}] {name} — {} ({})",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs(t.elapsed())
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
