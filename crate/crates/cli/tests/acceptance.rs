//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances and runtime budgets are fixed.

use std::time::{Duration, Instant};

use masa_cli::document::{to_pretty, InstanceDocument};
use masa_cli::masa;
use masa_core::circle::{
    equidistribution_stats, first_return, first_return_closed_form, interval_index, orbit, CirclePoint, Interval,
    RotationConfig,
};
use masa_core::counterexample::{
    conjugate_step_params, diagonalizer, identity_v, invariance_defect, random_candidate, rank_one_projection_defect,
    standard_v, v_block, ProjectionFieldCandidate, SParameters, SIGN_ZERO_TOL,
};
use masa_core::discrete::{check_masa, multiplicity_match, BoundedFunction};
use masa_core::embedding::{conjugation_closure, factor_unitary};
use masa_core::generate::{generate, random_spec, rng_from_seed, GeneratedInstance};
use masa_core::numerics::{commutant_basis, hermitian_eig, unitarity_defect, ComplexMatrix, TolerancePolicy};
use masa_core::sign::{
    all_classes, alpha_table, d_partition, f_partition, stratum, word_reduce, ClassMap, DLabel, FLabel,
};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn instances() -> Vec<(u64, Vec<usize>, GeneratedInstance)> {
    (0..200u64)
        .map(|seed| {
            let spec = random_spec(seed, 12, 4);
            let inst = generate(&spec, seed).expect("generator accepts its own specs");
            (seed, spec.pi, inst)
        })
        .collect()
}

/// Max-entry distance from `m` to the nearest member of `family`.
fn nearest(m: &ComplexMatrix, family: &[ComplexMatrix]) -> f64 {
    family.iter().map(|p| m.max_abs_diff(p)).fold(f64::INFINITY, f64::min)
}

fn embedding_suite(all: &[(u64, Vec<usize>, GeneratedInstance)]) -> Verdict {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (seed, _, inst) in all {
        let n = inst.algebra.n();
        let bytes = to_pretty(&InstanceDocument::from_parts(&inst.algebra, &inst.unitary)).into_bytes();
        let out = match masa::embed(&bytes, &tol()) {
            Ok(out) => out,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let basis: Vec<ComplexMatrix> = serde_json::from_value(out.document["basis"].clone()).expect("basis");
        let commutant = commutant_basis(&basis, n, &tol()).map(|c| c.len()).unwrap_or(0);
        let masa_ok = check_masa(&basis, n, &tol()).is_masa && commutant == n;
        let containment = out.document["certificate"]["containment_residual"].as_f64().unwrap_or(f64::INFINITY);
        let u = &inst.unitary;
        let u_adj = u.adjoint();
        let invariance = basis.iter().map(|p| nearest(&(&(&u_adj * p) * u), &basis)).fold(0.0, f64::max);
        worst = worst.max(containment).max(invariance);
        if out.exit_code != 0 || !masa_ok || containment > 1e-8 || invariance > 1e-8 {
            failures.push(format!("seed {seed}: exit {}, commutant {commutant}/{n}", out.exit_code));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} instances, max residual {worst:.2e}, failures {:?}",
            all.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn factorization_suite(all: &[(u64, Vec<usize>, GeneratedInstance)]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut mismatches = Vec::new();
    for (seed, pi, inst) in all {
        match factor_unitary(&inst.algebra, &inst.unitary, &tol()) {
            Ok(f) => {
                let residual = inst.unitary.max_abs_diff(&(&f.v * &f.w_matrix));
                worst = worst.max(residual);
                if f.pi != *pi || residual > 1e-9 {
                    mismatches.push(*seed);
                }
            }
            Err(_) => mismatches.push(*seed),
        }
    }
    verdict(mismatches.is_empty(), format!("max ‖U − VW‖_max {worst:.2e}, mismatched seeds {mismatches:?}"))
}

fn multiplicity_suite() -> Verdict {
    let mut rng = rng_from_seed(2024);
    let mut bad = 0usize;
    let mut matched = 0usize;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=10);
        let k = rng.gen_range(1..=4);
        let f: Vec<u8> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let g: Vec<u8> = if rng.gen_bool(0.5) {
            let mut g = f.clone();
            g.shuffle(&mut rng);
            g
        } else {
            (0..n).map(|_| rng.gen_range(0..k)).collect()
        };
        let (mut fs, mut gs) = (f.clone(), g.clone());
        fs.sort_unstable();
        gs.sort_unstable();
        let to_fn = |v: &[u8]| BoundedFunction::real(&v.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let got = multiplicity_match(&to_fn(&f), &to_fn(&g));
        let ok = match &got {
            None => fs != gs,
            Some(sigma) => {
                let mut seen = vec![false; n];
                let bijective =
                    sigma.len() == n && sigma.iter().all(|&s| s < n && !std::mem::replace(&mut seen[s], true));
                fs == gs && bijective && (0..n).all(|x| g[x] == f[sigma[x]])
            }
        };
        matched += got.is_some() as usize;
        bad += !ok as usize;
    }
    verdict(bad == 0, format!("10000 pairs, {matched} matchable, {bad} disagreements"))
}

fn closure_suite(all: &[(u64, Vec<usize>, GeneratedInstance)]) -> Verdict {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    let mut max_iter = 0;
    for (seed, _, inst) in all {
        let n = inst.algebra.n();
        match conjugation_closure(&inst.algebra, &inst.unitary, n * n, &tol()) {
            Ok(c) => {
                worst = worst.max(c.equality_residual);
                max_iter = max_iter.max(c.iterations);
                if c.rank != inst.algebra.dimension() || c.equality_residual > 1e-9 || c.iterations > n * n {
                    bad.push(*seed);
                }
            }
            Err(_) => bad.push(*seed),
        }
    }
    verdict(bad.is_empty(), format!("max residual {worst:.2e}, max iterations {max_iter}, failing seeds {bad:?}"))
}

fn raw_alpha(j: usize, [p, q, r]: [i8; 3]) -> [i8; 3] {
    match j {
        1 => [q, -p, r],
        2 => [r, p, q],
        _ => [p, q, r],
    }
}

fn canon(t: [i8; 3]) -> [i8; 3] {
    match t.iter().find(|&&c| c != 0) {
        Some(&l) if l < 0 => t.map(|c| -c),
        _ => t,
    }
}

fn combinatorics_suite() -> Verdict {
    let mut oracle: Vec<[i8; 3]> = Vec::new();
    for p in -1..=1 {
        for q in -1..=1 {
            for r in -1..=1 {
                let c = canon([p, q, r]);
                if !oracle.contains(&c) {
                    oracle.push(c);
                }
            }
        }
    }
    let classes = all_classes();
    let mut checks: Vec<(&str, bool)> = Vec::new();
    checks.push(("|X±| = 14", classes.len() == 14 && oracle.len() == 14));
    let sizes: Vec<usize> = (0..=3).rev().map(|z| classes.iter().filter(|&&c| stratum(c) == z).count()).collect();
    let oracle_sizes: Vec<usize> =
        (0..=3).rev().map(|z| oracle.iter().filter(|t| t.iter().filter(|&&c| c == 0).count() == z).count()).collect();
    checks.push(("strata (1,3,6,4)", sizes == [1, 3, 6, 4] && oracle_sizes == [1, 3, 6, 4]));
    let agrees = (1..=3).all(|j| {
        let table = alpha_table(Interval::from_index(j).unwrap());
        classes.iter().all(|&c| table.apply(c).representative().0 == canon(raw_alpha(j, c.representative().0)))
    });
    checks.push(("tables match formulas", agrees));
    let id = ClassMap::identity();
    let (a1, a2, a3) = (alpha_table(Interval::J1), alpha_table(Interval::J2), alpha_table(Interval::J3));
    checks.push(("α1⁴ = id", a1.pow(4) == id));
    checks.push(("α2³ = id", a2.pow(3) == id));
    checks.push(("α3 = id", *a3 == id));
    let preserved = [a1, a2, a3].iter().all(|t| classes.iter().all(|&c| stratum(t.apply(c)) == stratum(c)));
    checks.push(("strata preserved", preserved));
    let d_of = |c| d_partition(c).unwrap();
    let swaps = classes.iter().filter(|&&c| stratum(c) == 1).all(|&c| {
        let want = match d_of(c) {
            DLabel::D1 => DLabel::D2,
            DLabel::D2 => DLabel::D1,
            DLabel::D3 => DLabel::D4,
            DLabel::D4 => DLabel::D3,
        };
        d_of(a1.apply(c)) == want
    });
    checks.push(("α1 swaps D1↔D2, D3↔D4", swaps));
    let f_of = |c| f_partition(c).unwrap();
    let cycles = classes.iter().filter(|&&c| stratum(c) == 0).all(|&c| {
        let want = match f_of(c) {
            FLabel::F1 => FLabel::F2,
            FLabel::F2 => FLabel::F3,
            FLabel::F3 => FLabel::F4,
            FLabel::F4 => FLabel::F1,
        };
        f_of(a1.apply(c)) == want
    });
    checks.push(("α1: F1→F2→F3→F4→F1", cycles));
    let word = word_reduce(&[Interval::J1, Interval::J2, Interval::J2, Interval::J2]);
    checks.push(("[1,2,2,2] = α1", word == *a1));
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    verdict(failed.is_empty(), format!("{} exact checks, failed {failed:?}", checks.len()))
}

fn battery() -> [(&'static str, f64); 3] {
    [("√2/8", 2f64.sqrt() / 8.0), ("1/(4+√3)", 1.0 / (4.0 + 3f64.sqrt())), ("0.2012001200012", 0.201_200_120_001_2)]
}

fn return_map_suite() -> Verdict {
    let word_re = Regex::new(r"^1222(3)*$").unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, a) in battery() {
        let config = RotationConfig::new(a).unwrap();
        let warnings = config.rationality_warnings();
        let mut rng = rng_from_seed(6);
        let (mut stated, mut corrected) = (0f64, 0f64);
        let mut words_ok = true;
        for _ in 0..10_000 {
            let t = CirclePoint::new(rng.gen_range(0.0..a)).unwrap();
            let r = first_return(t, &config).unwrap();
            let plus_b = (t.value() + config.b()).rem_euclid(a);
            stated = stated.max((r.t_return.value() - plus_b).abs());
            let closed = first_return_closed_form(t, &config).value();
            let d = (r.t_return.value() - closed).abs();
            corrected = corrected.max(d.min(a - d));
            let w: String = r.word.iter().map(|j| char::from(b'0' + j.index() as u8)).collect();
            words_ok &= word_re.is_match(&w);
        }
        passed &= stated <= 1e-11 && words_ok && warnings.is_empty();
        parts.push(format!(
            "a={name}: |ret − (t+b mod a)| ≤ {stated:.3e}, |ret − (t−b mod a)| ≤ {corrected:.1e}, words {}, CF warnings {}",
            if words_ok { "ok" } else { "BAD" },
            warnings.len()
        ));
    }
    verdict(passed, parts.join("; "))
}

fn equidistribution_suite() -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, a) in battery() {
        let config = RotationConfig::new(a).unwrap();
        let stats = equidistribution_stats(&orbit(CirclePoint::new(0.0).unwrap(), &config, 100_000), &config);
        passed &= stats.discrepancy <= 0.01;
        parts.push(format!("a={name}: max |freq − len| {:.2e}", stats.discrepancy));
    }
    verdict(passed, parts.join("; "))
}

fn lemma_suite() -> Verdict {
    let mut rng = rng_from_seed(8);
    let (mut unit, mut diag, mut proj, mut eig_gap) = (0f64, 0f64, 0f64, 0f64);
    let target = ComplexMatrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]]);
    for _ in 0..10_000 {
        let (p, q) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let z = Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let b = ComplexMatrix::from_complex_rows([[Complex64::new(p, 0.0), z.conj()], [z, Complex64::new(q, 0.0)]]);
        let d = diagonalizer(&b);
        unit = unit.max(unitarity_defect(&d.t));
        let a = (p - q) / 2.0;
        let scale = 1.0 / a.hypot(z.norm());
        let b0 = ComplexMatrix::from_complex_rows([
            [Complex64::new(a * scale, 0.0), z.conj() * scale],
            [z * scale, Complex64::new(-a * scale, 0.0)],
        ]);
        diag = diag.max((&(&d.t * &b0) * &d.t.adjoint()).max_abs_diff(&target));
        proj = proj.max(rank_one_projection_defect(&d.p));
        let eig = hermitian_eig(&b, &tol()).unwrap();
        let tstar = d.t.adjoint();
        for (col, eigcol) in [(0, 1), (1, 0)] {
            let overlap: Complex64 = (0..2).map(|r| tstar[(r, col)].conj() * eig.vectors[(r, eigcol)]).sum();
            eig_gap = eig_gap.max((overlap.norm() - 1.0).abs());
        }
    }
    let passed = unit <= 1e-10 && diag <= 1e-10 && proj <= 1e-10 && eig_gap <= 1e-10;
    verdict(
        passed,
        format!("10000 inputs: unitarity {unit:.1e}, T·B₀·T* {diag:.1e}, projection {proj:.1e}, eigvec phase gap {eig_gap:.1e}"),
    )
}

fn defect_suite() -> Verdict {
    let config = RotationConfig::new(2f64.sqrt() / 8.0).unwrap();
    let e11 = ComplexMatrix::from_real_rows([[1.0, 0.0], [0.0, 0.0]]);
    let e22 = ComplexMatrix::from_real_rows([[0.0, 0.0], [0.0, 1.0]]);
    let t0 = CirclePoint::new(0.0).unwrap();
    let mut control: f64 = 0.0;
    for p in [&e11, &e22] {
        let cand = ProjectionFieldCandidate::constant(p.clone()).unwrap();
        control = control.max(invariance_defect(&cand, &config, &identity_v(), t0, 10_000).unwrap().max_defect);
    }
    let cand = ProjectionFieldCandidate::constant(e11).unwrap();
    let standard = invariance_defect(&cand, &config, &standard_v(&config), t0, 10_000).unwrap().max_defect;
    let v = standard_v(&config);
    let battery: Vec<f64> = (0..100u64)
        .map(|seed| invariance_defect(&random_candidate(seed, 64), &config, &v, t0, 10_000).unwrap().max_defect)
        .collect();
    let weakest = battery.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = control <= 1e-12 && (standard - 2.0).abs() <= 1e-9 && weakest > 0.01;
    verdict(
        passed,
        format!(
            "control {control:.1e}, constant diag(1,0) {standard:.12}, weakest of 100 random candidates {weakest:.4}"
        ),
    )
}

fn tol_sign(x: f64) -> i8 {
    if x > SIGN_ZERO_TOL {
        1
    } else if x < -SIGN_ZERO_TOL {
        -1
    } else {
        0
    }
}

fn sign_transport_suite() -> Verdict {
    let config = RotationConfig::new(2f64.sqrt() / 8.0).unwrap();
    let v = standard_v(&config);
    let mut rng = rng_from_seed(10);
    let mut mismatches = 0;
    let mut per_interval = [0usize; 3];
    for k in 0..30_000 {
        let j = Interval::from_index(k % 3 + 1).unwrap();
        let (lo, hi) = match j {
            Interval::J1 => (0.0, config.a()),
            Interval::J2 => (config.a(), config.four_a()),
            Interval::J3 => (config.four_a(), 1.0),
        };
        let t = CirclePoint::new(rng.gen_range(lo..hi)).unwrap();
        assert_eq!(interval_index(t, &config), j);
        let s = SParameters::from_angle(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        )
        .unwrap();
        // Independent 2×2 product for the input class, then the formula for α.
        let m = v_block(j);
        let sm = s.to_matrix();
        let out = &(&m.adjoint() * &sm) * &m;
        let before = [tol_sign(sm[(0, 0)].re), tol_sign(sm[(1, 0)].re), tol_sign(sm[(1, 0)].im)];
        let after = [tol_sign(out[(0, 0)].re), tol_sign(out[(1, 0)].re), tol_sign(out[(1, 0)].im)];
        let expected = canon(raw_alpha(j.index(), before));
        let got = conjugate_step_params(&s, t, &v).profile().representative().0;
        if got != expected || canon(after) != expected {
            mismatches += 1;
        }
        per_interval[j.index() - 1] += 1;
    }
    verdict(mismatches == 0, format!("samples per interval {per_interval:?}, mismatches {mismatches}"))
}

fn main() {
    println!("acceptance suite");
    let mut results: Vec<(usize, &str, Verdict, Duration, Duration)> = Vec::new();
    let mut record = |id, name, budget: u64, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let budget = Duration::from_secs(budget);
        let line = format!(
            "{} [{id:>2}] {name}: {} ({:.2}s, budget {}s)",
            if v.passed && elapsed <= budget { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        println!("{line}");
        results.push((id, name, v, elapsed, budget));
    };
    let start = Instant::now();
    let all = instances();
    let gen_time = start.elapsed();
    record(1, "embedding theorem suite", 60, &mut || {
        let mut v = embedding_suite(&all);
        v.detail.push_str(&format!(", generation {:.2}s", gen_time.as_secs_f64()));
        v
    });
    record(2, "factorization round-trip", 60, &mut || factorization_suite(&all));
    record(3, "multiplicity match vs sorted-multiset oracle", 60, &mut multiplicity_suite);
    record(4, "conjugation closure", 60, &mut || closure_suite(&all));
    record(5, "sign automaton combinatorics", 1, &mut combinatorics_suite);
    record(6, "first-return map", 5, &mut return_map_suite);
    record(7, "equidistribution", 5, &mut equidistribution_suite);
    record(8, "explicit diagonalizer", 60, &mut lemma_suite);
    record(9, "invariance-defect harness", 30, &mut defect_suite);
    record(10, "sign-transport law", 60, &mut sign_transport_suite);

    let failed: Vec<usize> = results.iter().filter(|(_, _, v, t, b)| !v.passed || t > b).map(|(id, ..)| *id).collect();
    println!("{} of {} criteria passed; failed: {failed:?}", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
