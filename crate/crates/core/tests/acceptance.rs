//! Acceptance criteria, one line per criterion. Exits nonzero on any failure.

use std::time::{Duration, Instant};

use fspace_core::composition_lab::{self, LipschitzScaler};
use fspace_core::differences::{self, GrowthVerdict};
use fspace_core::faber::hat_eval;
use fspace_core::fubini;
use fspace_core::grid::{generate_corpus, CorpusSpec, GeneratorKind, GridBox, GridFunction};
use fspace_core::haar;
use fspace_core::norms::NormKind;
use fspace_core::oscillation;
use fspace_core::spaces::{self, Family, ScalerMeta, SpaceParams, Tri};
use fspace_core::truncation_lab::{self, Operator};
use fspace_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = body();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            out.pass = false;
        }
        out.detail = format!("{}; runtime {:.2}s (limit {}s)", out.detail, took.as_secs_f64(), limit.as_secs());
    } else {
        out.detail = format!("{}; runtime {:.2}s", out.detail, took.as_secs_f64());
    }
    out
}

fn mixed_corpus(seed: u64, per_kind: usize, level: u32, dim: usize) -> Vec<GridFunction> {
    let mut out = Vec::new();
    for (k, kind) in GeneratorKind::ALL.into_iter().enumerate() {
        let spec = CorpusSpec::new(seed + k as u64, per_kind, kind).with_zero_mean(true);
        out.extend(generate_corpus(&spec, level, &GridBox::unit(dim), dim).unwrap());
    }
    out
}

fn ac1() -> Outcome {
    let mut worst_coeff: f64 = 0.0;
    let mut sample_mismatch = 0;
    for dim in [1, 2] {
        let spec = CorpusSpec::new(101, 100, GeneratorKind::HaarStep).with_detail(4);
        for f in generate_corpus(&spec, 4, &GridBox::unit(dim), dim).unwrap() {
            let c = haar::analyze(&f, 3).unwrap();
            let g = haar::synthesize(&c, 4).unwrap();
            if g.samples() != f.samples() {
                sample_mismatch += 1;
            }
            let c2 = haar::analyze(&g, 3).unwrap();
            for e in c.entries().iter().chain(c2.entries().iter()) {
                worst_coeff = worst_coeff.max((c.get(e.j, e.g, &e.m) - c2.get(e.j, e.g, &e.m)).abs());
            }
        }
    }
    outcome(
        sample_mismatch == 0 && worst_coeff <= 1e-12,
        format!("200 functions, {sample_mismatch} sample mismatches, max coefficient error {worst_coeff:e}"),
    )
}

fn ac2() -> Outcome {
    let set = [0.75, 2.0, f64::INFINITY];
    let mut worst: f64 = 0.0;
    let mut combos = 0;
    for s in [0.3, 0.5, 0.9] {
        for p in set {
            for q in set {
                combos += 1;
                for row in truncation_lab::counterexample_scaling(s, p, q, 1, 10).unwrap() {
                    let exact = (row.j as f64 * s).exp2();
                    worst = worst.max((row.ratio / exact - 1.0).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("{combos} (s,p,q) combos, j = 0..10, max relative error {worst:e}"))
}

fn ac3() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    // Indicator of [0,1] on [-1,2], order 1, s = 1/p.
    let chi = GridFunction::sample(1, 12, GridBox::new(vec![-1], 3), "chi", |x| {
        if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }
    })
    .unwrap();
    let hat = GridFunction::sample(1, 12, GridBox::new(vec![-1], 3), "hat", |x| hat_eval(0, 0, x[0])).unwrap();
    for p in [1.5, 2.0] {
        // Exact law: omega_1(chi, 2^-j)_p = (2 * 2^-j)^(1/p).
        let omega = differences::modulus_profile(&chi, 1, p, 1, 10).unwrap();
        let law = omega
            .iter()
            .enumerate()
            .map(|(i, w)| (w / (2.0 * (-(i as f64 + 1.0)).exp2()).powf(1.0 / p) - 1.0).abs())
            .fold(0.0, f64::max);
        pass &= law <= 1e-6;
        notes.push(format!("chi p={p}: modulus law error {law:.1e}"));
        for q in [f64::INFINITY, 1.0, 2.0] {
            let r = differences::membership_diagnostic(&chi, 1.0 / p, p, q, 1).unwrap();
            let a0 = r.a[0];
            let flat = r.a.iter().map(|a| (a / a0 - 1.0).abs()).fold(0.0, f64::max);
            let ok = flat <= 1e-6
                && match r.verdict {
                    GrowthVerdict::Bounded => q.is_infinite(),
                    GrowthVerdict::PowerGrowth { alpha } => q.is_finite() && (alpha - 1.0 / q).abs() <= 0.1,
                    GrowthVerdict::Inconclusive => false,
                };
            pass &= ok;
            notes.push(format!("chi p={p} q={q}: {:?} flat {flat:.1e}", r.verdict));

            let r = differences::membership_diagnostic(&hat, 1.0 + 1.0 / p, p, q, 2).unwrap();
            let ok = match r.verdict {
                GrowthVerdict::Bounded => q.is_infinite(),
                GrowthVerdict::PowerGrowth { alpha } => q.is_finite() && (alpha - 1.0 / q).abs() <= 0.15,
                GrowthVerdict::Inconclusive => false,
            };
            pass &= ok;
            notes.push(format!("hat p={p} q={q}: {:?}", r.verdict));
        }
    }
    outcome(pass, notes.join("; "))
}

fn ac4() -> Outcome {
    let corpus = mixed_corpus(404, 50, 8, 1);
    let mut cubes = 0usize;
    let mut upper = 0usize;
    let mut lower = 0usize;
    for f in &corpus {
        let pf = oscillation::osc_pyramid(f);
        let pa = oscillation::osc_pyramid(&f.abs());
        for (a, b) in pf.iter().zip(&pa) {
            for i in 0..a.bracket.len() {
                cubes += 1;
                if b.bracket[i] > a.bracket[i] {
                    upper += 1;
                }
                // 2 [|f|] + 2 min|f| = 2 max|f| on every cube.
                if a.bracket[i] > 2.0 * b.max_abs[i] {
                    lower += 1;
                }
            }
        }
    }
    outcome(
        upper == 0 && lower == 0,
        format!("{} functions, {cubes} cubes, violations: [|f|]<=[f] {upper}, [f]<=2[|f|]+2min|f| {lower}", corpus.len()),
    )
}

fn sign_changing(seed: u64, count: usize) -> Vec<(CorpusSpec, usize)> {
    let mut picked = Vec::new();
    let kinds = [
        GeneratorKind::PiecewiseLinearRandomKnots,
        GeneratorKind::SignOscillating,
        GeneratorKind::SmoothBumpSum,
    ];
    for (k, kind) in kinds.into_iter().enumerate() {
        let spec = CorpusSpec::new(seed + k as u64, 150, kind).with_zero_mean(true);
        let probe = generate_corpus(&spec, 9, &GridBox::unit(1), 1).unwrap();
        for (i, f) in probe.iter().enumerate() {
            if f.min_value() < 0.0 && f.max_value() > 0.0 && picked.len() < count && (picked.len() + 1) % 3 == k % 3 {
                picked.push((spec.clone(), i));
            }
        }
    }
    for (k, kind) in kinds.into_iter().enumerate() {
        let spec = CorpusSpec::new(seed + k as u64, 150, kind).with_zero_mean(true);
        let probe = generate_corpus(&spec, 9, &GridBox::unit(1), 1).unwrap();
        for (i, f) in probe.iter().enumerate() {
            if picked.len() < count && f.min_value() < 0.0 && f.max_value() > 0.0 && !picked.contains(&(spec.clone(), i)) {
                picked.push((spec.clone(), i));
            }
        }
    }
    picked
}

fn at_level(picked: &[(CorpusSpec, usize)], level: u32) -> Vec<GridFunction> {
    let mut out = Vec::new();
    let mut cache: Vec<(CorpusSpec, Vec<GridFunction>)> = Vec::new();
    for (spec, i) in picked {
        if !cache.iter().any(|(s, _)| s == spec) {
            cache.push((spec.clone(), generate_corpus(spec, level, &GridBox::unit(1), 1).unwrap()));
        }
        let fs = &cache.iter().find(|(s, _)| s == spec).unwrap().1;
        out.push(fs[*i].clone());
    }
    out
}

fn ac5() -> Outcome {
    let picked = sign_changing(505, 200);
    if picked.len() < 200 {
        return outcome(false, format!("only {} sign-changing functions available", picked.len()));
    }
    let sp = SpaceParams::b(0.75, 2.0, 2.0, 1).unwrap();
    let r9 = truncation_lab::ratio_experiment(&at_level(&picked, 9), NormKind::FaberB, &sp, Operator::Abs).unwrap();
    let r11 = truncation_lab::ratio_experiment(&at_level(&picked, 11), NormKind::FaberB, &sp, Operator::Abs).unwrap();
    let growth = r11.spread / r9.spread;

    let low = SpaceParams::b(0.4, 2.0, 2.0, 1).unwrap();
    let mut contrast = at_level(&picked, 11);
    for j in 0..=8 {
        contrast.push(haar::example_3_7(j, 1, 11).unwrap().zero_at_integer_nodes());
    }
    let rl = truncation_lab::ratio_experiment(&contrast, NormKind::FaberB, &low, Operator::Abs).unwrap();
    let max_inverse = 1.0 / rl.min;
    let bound = 2f64.powf(0.4 * 8.0);
    outcome(
        r9.spread <= 16.0 && growth <= 1.1 && max_inverse >= bound,
        format!(
            "s=0.75: spread L9 {:.3}, L11 {:.3} (growth {:.3}); s=0.4: max ||f||/|| |f| || {:.3} vs 2^3.2 = {:.3}",
            r9.spread, r11.spread, growth, max_inverse, bound
        ),
    )
}

fn ac6() -> Outcome {
    let spec = CorpusSpec::new(606, 50, GeneratorKind::PiecewiseLinearRandomKnots)
        .with_amplitude(-0.5, 0.5)
        .with_detail(2)
        .with_zero_mean(true);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for level in [8, 10, 12] {
        let corpus = generate_corpus(&spec, level, &GridBox::unit(1), 1).unwrap();
        for p in [2.0, 3.0] {
            for row in truncation_lab::sobolev_identity_check(&corpus, p).unwrap().rows {
                let bound = 4.0 * (-(level as f64) / p).exp2() * (row.sign_change_cells as f64).powf(1.0 / p);
                worst = worst.max(row.constant);
                if row.gap > bound {
                    violations += 1;
                }
            }
        }
    }
    let gaps: Vec<f64> = [8, 10, 12]
        .iter()
        .map(|&level| {
            let f = GridFunction::sample(1, level, GridBox::unit(1), "sine", |x| {
                (2.0 * std::f64::consts::PI * (x[0] - 1.0 / 3.0)).sin()
            })
            .unwrap();
            truncation_lab::sobolev_identity_check(&[f], 2.0).unwrap().rows[0].gap
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    outcome(
        violations == 0 && monotone,
        format!("{violations} bound violations, max constant {worst:.3}; fixed generator gaps {gaps:?}"),
    )
}

fn ac7() -> Outcome {
    let g = LipschitzScaler::sinusoidal(1.0, 0.5);
    let (l1, l2) = composition_lab::validate_scaler(&g, (-4.0, 4.0), 1e-3).unwrap();
    let validated = (0.5 - 1e-3..=0.5 + 1e-3).contains(&l1) && (1.5 - 1e-3..=1.5 + 1e-3).contains(&l2);
    let corpus = mixed_corpus(707, 50, 8, 1);
    let mut lp_bad = 0;
    let mut residual: f64 = 0.0;
    let mut cubes = 0;
    let mut cube_bad = 0;
    let (c1, c2) = g.claimed_bounds();
    for f in &corpus {
        for p in [1.0, 2.0, 0.5] {
            let b = composition_lab::lp_bounds_check(&g, f, p).unwrap();
            if !(b.lower_ok && b.upper_ok) {
                lp_bad += 1;
            }
            residual = residual.max(b.abs_residual.abs());
        }
        let (t, v) = composition_lab::bracket_sandwich(f, &composition_lab::compose(&g, f), c1, c2);
        cubes += t;
        cube_bad += v;
    }
    outcome(
        validated && lp_bad == 0 && residual == 0.0 && cube_bad == 0,
        format!(
            "validated ({l1:.5}, {l2:.5}); {} functions: Lp violations {lp_bad}, |g| residual {residual}, bracket violations {cube_bad}/{cubes}",
            corpus.len()
        ),
    )
}

fn ac8() -> Outcome {
    let g = LipschitzScaler::sinusoidal(1.0, 0.5);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let t = -100.0 + 200.0 * k as f64 / 9_999.0;
        let back = composition_lab::invert_scaler(&g, g.eval(t), 1e-10).unwrap();
        worst = worst.max((back - t).abs());
    }
    outcome(worst <= 2e-10, format!("10^4 points, max deviation {worst:e}"))
}

type Expect = (Family, f64, f64, f64, usize, Tri, Tri, Tri);

fn truncation_table() -> Vec<Expect> {
    use Family::{B, F};
    use Tri::{No as N, Unknown as U, Yes as Y};
    let inf = f64::INFINITY;
    vec![
        (B, 0.75, 2.0, 2.0, 1, Y, Y, Y),
        (B, 0.4, 2.0, 5.0, 1, Y, N, N),
        (B, 0.5, 2.0, inf, 3, Y, N, N),
        (B, 0.5, 2.0, 2.0, 1, Y, N, N),
        (B, 1.2, 2.0, 2.0, 1, Y, Y, Y),
        (B, 1.6, 2.0, 2.0, 1, U, U, U),
        (B, 1.5, 2.0, 2.0, 1, U, U, U),
        (B, 0.3, 0.5, 2.0, 1, U, U, U),
        (B, 1.5, 0.5, 2.0, 1, Y, N, N),
        (B, 2.5, 0.5, 2.0, 1, Y, U, U),
        (B, 0.9, inf, inf, 2, Y, Y, Y),
        (B, 1.2, inf, inf, 1, U, U, U),
        (B, 0.8, 2.0, 2.0, 2, Y, Y, U),
        (B, 0.8, 2.0, 3.0, 2, Y, U, U),
        (B, 0.8, 1.5, 4.0, 1, Y, Y, Y),
        (B, 0.9, 4.0, 1.0, 3, Y, Y, Y),
        (B, 0.2, 1.0, 1.0, 2, Y, N, N),
        (B, 1.0, 1.0, inf, 2, Y, N, N),
        (B, 0.6, 0.8, 2.0, 2, Y, N, N),
        (B, 0.4, 0.8, 2.0, 2, U, U, U),
        (B, 0.5, inf, inf, 3, Y, Y, Y),
        (B, 1.0, 2.0, 2.0, 3, Y, Y, U),
        (B, 0.25, 4.0, 4.0, 1, Y, N, N),
        (F, 0.8, 3.0, 1.5, 2, Y, Y, U),
        (F, 0.8, 3.0, 1.5, 1, Y, Y, Y),
        (F, 1.0, 0.5, 2.0, 1, U, U, U),
        (F, 2.0, 0.5, 2.0, 1, U, U, U),
        (F, 1.5, 0.5, 2.0, 1, Y, N, N),
        (F, 0.3, 2.0, 2.0, 2, Y, N, N),
        (F, 0.5, 2.0, 2.0, 2, Y, U, U),
        (F, 0.9, 4.0, 4.0, 3, Y, Y, Y),
        (F, 0.9, 2.0, 0.8, 1, Y, U, U),
        (F, 1.2, 2.0, 2.0, 1, Y, U, U),
        (F, 0.2, 0.5, 1.0, 1, U, U, U),
    ]
}

/// `(family, s, p, q, n, g' finite, strong, perfect, abs_strong, abs_perfect)`.
type CompExpect = (Family, f64, f64, f64, usize, bool, Tri, Tri, Tri, Tri);

fn composition_table() -> Vec<CompExpect> {
    use Family::{B, F};
    use Tri::{Unknown as U, Yes as Y};
    vec![
        (B, 0.9, 2.0, 2.0, 1, true, Y, Y, Y, Y),
        (F, 0.8, 3.0, 2.0, 2, true, Y, U, Y, U),
        (B, 1.2, 2.0, 2.0, 1, false, U, U, U, U),
        (B, 1.2, 2.0, 2.0, 1, true, Y, Y, Y, Y),
        (B, 0.9, 2.0, 2.0, 3, true, Y, U, Y, U),
        (B, 0.9, 2.0, 4.0, 3, true, Y, U, U, U),
        (B, 0.5, 4.0, 3.0, 1, true, Y, Y, Y, Y),
        (F, 0.5, 4.0, 4.0, 1, true, Y, Y, Y, Y),
        (B, 0.9, 0.8, 2.0, 1, true, U, U, U, U),
    ]
}

fn random_exponent(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.15) {
        f64::INFINITY
    } else {
        rng.random_range(0.3..8.0)
    }
}

fn ac9() -> Outcome {
    let mut mismatches = Vec::new();
    let table = truncation_table();
    for &(family, s, p, q, n, t, st, pf) in &table {
        let sp = SpaceParams::new(family, s, p, q, n).unwrap();
        let v = spaces::truncation_verdict(&sp).unwrap();
        if (v.truncation, v.strong, v.perfect) != (t, st, pf) {
            mismatches.push(format!("{sp}: got {:?}/{:?}/{:?}", v.truncation, v.strong, v.perfect));
        }
    }
    let comp = composition_table();
    for &(family, s, p, q, n, gp, st, pf, ast, apf) in &comp {
        let sp = SpaceParams::new(family, s, p, q, n).unwrap();
        let meta = ScalerMeta { is_lipschitz_scaling: true, gprime_seminorm_finite: gp };
        let v = spaces::composition_verdict(&sp, meta).unwrap();
        if (v.strong, v.perfect, v.abs_strong, v.abs_perfect) != (st, pf, ast, apf) {
            mismatches.push(format!("{sp} g'={gp}: got {:?}/{:?}/{:?}/{:?}", v.strong, v.perfect, v.abs_strong, v.abs_perfect));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut nesting = 0;
    for _ in 0..10_000 {
        let family = if rng.random_bool(0.5) { Family::B } else { Family::F };
        let mut p = random_exponent(&mut rng);
        if family == Family::F && p.is_infinite() {
            p = 2.0;
        }
        let q = if rng.random_bool(0.3) { p } else { random_exponent(&mut rng) };
        let s = rng.random_range(-0.5..3.0);
        let n = rng.random_range(1..=4);
        let sp = SpaceParams::new(family, s, p, q, n).unwrap();
        match spaces::truncation_verdict(&sp) {
            Ok(v) => {
                let bad = (v.perfect == Tri::Yes && v.strong != Tri::Yes)
                    || (v.strong == Tri::Yes && v.truncation != Tri::Yes)
                    || (v.truncation == Tri::No && v.strong != Tri::No)
                    || (v.strong == Tri::No && v.perfect != Tri::No);
                nesting += bad as usize;
            }
            Err(_) => nesting += 1,
        }
    }
    outcome(
        mismatches.is_empty() && nesting == 0 && table.len() + comp.len() >= 30,
        format!(
            "{} truncation + {} composition tuples, mismatches [{}]; nesting violations {nesting}/10000",
            table.len(),
            comp.len(),
            mismatches.join(", ")
        ),
    )
}

fn ac10() -> Outcome {
    let sp = SpaceParams::b(0.75, 2.0, 2.0, 2).unwrap();
    let band = |level: u32| -> (Vec<f64>, f64, f64) {
        let mut corpus = Vec::new();
        for (k, kind) in [GeneratorKind::PiecewiseLinearRandomKnots, GeneratorKind::SmoothBumpSum].into_iter().enumerate() {
            let spec = CorpusSpec::new(1000 + k as u64, 25, kind).with_zero_mean(true);
            corpus.extend(generate_corpus(&spec, level, &GridBox::unit(2), 2).unwrap());
        }
        let ratios: Vec<f64> = corpus.iter().map(|f| fubini::fubini_compare(f, &sp, NormKind::FaberB).unwrap()).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        (ratios, lo, hi)
    };
    let (r7, lo7, hi7) = band(7);
    let (_, lo8, hi8) = band(8);
    let spread = hi7 / lo7;
    let stable = (lo8 / lo7 - 1.0).abs() <= 0.15 && (hi8 / hi7 - 1.0).abs() <= 0.15;
    let bad = SpaceParams::b(0.75, 2.0, 3.0, 2).unwrap();
    let f = GridFunction::sample(2, 4, GridBox::unit(2), "hat", |x| hat_eval(0, 0, x[0]) * hat_eval(0, 0, x[1])).unwrap();
    let rejected = matches!(
        fubini::fubini_norm(&f, &bad, NormKind::FaberB),
        Err(Error::Precondition { ref citation, .. }) if citation == "Prop2.5(ii)"
    );
    outcome(
        r7.len() == 50 && spread <= 25.0 && stable && rejected,
        format!(
            "band L7 [{lo7:.3}, {hi7:.3}] spread {spread:.3}; L8 [{lo8:.3}, {hi8:.3}]; p != q rejected with citation: {rejected}"
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Option<u64>, fn() -> Outcome)> = vec![
        ("AC1 Haar round trip", Some(5), ac1),
        ("AC2 counterexample law", Some(10), ac2),
        ("AC3 membership dichotomy", Some(10), ac3),
        ("AC4 truncation one-sidedness", None, ac4),
        ("AC5 perfect-truncation stability", None, ac5),
        ("AC6 Sobolev identity", None, ac6),
        ("AC7 composition sandwich", None, ac7),
        ("AC8 inverse scaler", None, ac8),
        ("AC9 classifier table", None, ac9),
        ("AC10 Fubini cross-check", None, ac10),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let out = timed(limit.map(Duration::from_secs), run);
        println!("{} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failed += (!out.pass) as usize;
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
