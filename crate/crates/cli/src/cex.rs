//! `invmasa cex …`: the sign automaton, the rotation and the defect harness.

use std::collections::BTreeMap;

use masa_core::circle::{
    equidistribution_stats, first_return, first_return_closed_form, induced_rotation, is_canonical_return_word, orbit,
    CirclePoint, Interval, RotationConfig,
};
use masa_core::counterexample::{
    constraint_propagate, identity_v, invariance_defect, random_candidate, standard_v, ProjectionFieldCandidate,
    SParameters,
};
use masa_core::generate::rng_from_seed;
use masa_core::sign::{
    all_classes, alpha, alpha_table, d_partition, f_partition, stratum, word_reduce, ClassMap, DLabel, FLabel,
    SignClass,
};
use rand::Rng;
use serde_json::{json, Value};

use crate::document::{parse, report, sha256_hex, CliError, ReportHeader};
use crate::masa::Outcome;

/// Largest piece count of candidates drawn from a seed.
pub const RANDOM_CANDIDATE_PIECES: usize = 64;
/// Tolerance for the closed-form return check.
pub const RETURN_MAP_TOL: f64 = 1e-11;

pub fn rotation(a: f64) -> Result<RotationConfig, CliError> {
    RotationConfig::new(a).map_err(|e| CliError::Schema(e.to_string()))
}

fn point(t: f64) -> Result<CirclePoint, CliError> {
    CirclePoint::new(t).map_err(|e| CliError::Schema(e.to_string()))
}

fn params_digest(params: &Value, extra: &[u8]) -> String {
    let mut bytes = serde_json::to_vec(params).expect("serializes");
    bytes.extend_from_slice(extra);
    sha256_hex(&bytes)
}

fn rotation_json(config: &RotationConfig) -> Value {
    json!({
        "a": config.a(),
        "b": config.b(),
        "breakpoints": config.breakpoints(),
        "rational_warnings": config.rationality_warnings(),
    })
}

fn names(classes: impl IntoIterator<Item = SignClass>) -> Vec<String> {
    classes.into_iter().map(|c| c.to_string()).collect()
}

fn table_json(map: &ClassMap) -> Vec<String> {
    names(all_classes().iter().map(|&c| map.apply(c)))
}

/// Every table and partition of the 14-class automaton. Contains no floats,
/// so the output is byte-stable.
pub fn combinatorics() -> Outcome {
    let classes = all_classes();
    let id = ClassMap::identity();
    let mut strata = Vec::new();
    for zeros in (0..=3).rev() {
        strata.push(json!({
            "zeros": zeros,
            "classes": names(classes.iter().copied().filter(|&c| stratum(c) == zeros)),
        }));
    }
    let strata_sizes: Vec<usize> =
        (0..=3).rev().map(|z| classes.iter().filter(|&&c| stratum(c) == z).count()).collect();

    let mut d_parts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut f_parts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut d_of: BTreeMap<SignClass, DLabel> = BTreeMap::new();
    let mut f_of: BTreeMap<SignClass, FLabel> = BTreeMap::new();
    for &c in classes {
        if let Ok(l) = d_partition(c) {
            d_parts.entry(format!("{l:?}")).or_default().push(c.to_string());
            d_of.insert(c, l);
        }
        if let Ok(l) = f_partition(c) {
            f_parts.entry(format!("{l:?}")).or_default().push(c.to_string());
            f_of.insert(c, l);
        }
    }
    let a1 = alpha_table(Interval::J1);
    let mut alpha1_on_d: BTreeMap<String, String> = BTreeMap::new();
    let mut d_well_defined = true;
    for (&c, l) in &d_of {
        let image = format!("{:?}", d_of[&a1.apply(c)]);
        if let Some(prev) = alpha1_on_d.insert(format!("{l:?}"), image.clone()) {
            d_well_defined &= prev == image;
        }
    }
    let alpha1_on_f: BTreeMap<String, String> =
        f_of.iter().map(|(&c, l)| (format!("{l:?}"), format!("{:?}", f_of[&a1.apply(c)]))).collect();

    let a2 = alpha_table(Interval::J2);
    let a3 = alpha_table(Interval::J3);
    let preserves = Interval::ALL.iter().all(|&j| classes.iter().all(|&c| stratum(alpha(j, c)) == stratum(c)));
    let word = word_reduce(&[Interval::J1, Interval::J2, Interval::J2, Interval::J2]);
    let identities = json!({
        "alpha1_order_4": a1.pow(4) == id,
        "alpha2_order_3": a2.pow(3) == id,
        "alpha3_identity": *a3 == id,
        "strata_preserved": preserves,
        "alpha1_well_defined_on_d": d_well_defined,
        "word_1222_is_alpha1": word == *a1,
    });
    let passed = identities.as_object().expect("object").values().all(|v| v == &Value::Bool(true))
        && classes.len() == 14
        && strata_sizes == [1, 3, 6, 4];
    let body = json!({
        "class_count": classes.len(),
        "classes": names(classes.iter().copied()),
        "strata": strata,
        "strata_sizes": strata_sizes,
        "alpha": {
            "J1": table_json(a1),
            "J2": table_json(a2),
            "J3": table_json(a3),
        },
        "d_partition": d_parts,
        "f_partition": f_parts,
        "alpha1_on_d": alpha1_on_d,
        "alpha1_on_f": alpha1_on_f,
        "identities": identities,
    });
    Outcome::new(
        report(ReportHeader::new("cex combinatorics", params_digest(&json!({}), &[]), None, passed), body),
        passed,
    )
}

/// Distance between `x` and `y` in `ℝ / aℤ`.
fn mod_distance(x: f64, y: f64, a: f64) -> f64 {
    let d = (x - y).rem_euclid(a);
    d.min(a - d)
}

pub fn return_map(a: f64, samples: usize, seed: u64) -> Result<Outcome, CliError> {
    let config = rotation(a)?;
    let mut rng = rng_from_seed(seed);
    let mut max_err: f64 = 0.0;
    let mut max_err_plus_b: f64 = 0.0;
    let mut all_canonical = true;
    let mut step_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut word_is_alpha1 = true;
    let a1 = alpha_table(Interval::J1);
    for _ in 0..samples {
        let t = point(rng.gen_range(0.0..config.a()))?;
        let r = first_return(t, &config).map_err(|e| CliError::Numerical(e.to_string()))?;
        let back = r.t_return.value();
        max_err = max_err.max(mod_distance(back, first_return_closed_form(t, &config).value(), a));
        max_err_plus_b = max_err_plus_b.max(mod_distance(back, induced_rotation(t.value(), config.b(), &config), a));
        all_canonical &= is_canonical_return_word(&r.word);
        word_is_alpha1 &= word_reduce(&r.word) == *a1;
        *step_counts.entry(r.steps).or_default() += 1;
    }
    let passed = max_err <= RETURN_MAP_TOL && all_canonical;
    let params = json!({"a": a, "samples": samples, "seed": seed});
    let body = json!({
        "rotation": rotation_json(&config),
        "samples": samples,
        "closed_form": "t - b mod a",
        "max_error": max_err,
        "max_error_t_plus_b": max_err_plus_b,
        "tolerance": RETURN_MAP_TOL,
        "all_words_canonical": all_canonical,
        "all_words_reduce_to_alpha1": word_is_alpha1,
        "step_counts": step_counts,
    });
    Ok(Outcome::new(
        report(ReportHeader::new("cex return-map", params_digest(&params, &[]), Some(seed), passed), body),
        passed,
    ))
}

pub fn orbit_stats(a: f64, t0: f64, steps: usize, stats_only: bool) -> Result<Outcome, CliError> {
    let config = rotation(a)?;
    let pts = orbit(point(t0)?, &config, steps);
    let stats = equidistribution_stats(&pts, &config);
    let mut body = json!({
        "rotation": rotation_json(&config),
        "t0": t0,
        "stats": stats,
    });
    if !stats_only {
        body["points"] = json!(pts);
    }
    let params = json!({"a": a, "t0": t0, "steps": steps, "stats_only": stats_only});
    Ok(Outcome::new(report(ReportHeader::new("cex orbit", params_digest(&params, &[]), None, true), body), true))
}

/// Where a defect run takes its candidate from.
pub enum CandidateSource<'a> {
    File(&'a [u8]),
    Seed(u64),
}

pub fn defect(
    a: f64,
    candidate: CandidateSource<'_>,
    t0: f64,
    steps: usize,
    control: bool,
) -> Result<Outcome, CliError> {
    let config = rotation(a)?;
    let (cand, extra, seed): (ProjectionFieldCandidate, &[u8], Option<u64>) = match candidate {
        CandidateSource::File(bytes) => (parse(bytes, "candidate")?, bytes, None),
        CandidateSource::Seed(s) => (random_candidate(s, RANDOM_CANDIDATE_PIECES), &[], Some(s)),
    };
    let v = if control { identity_v() } else { standard_v(&config) };
    let r = invariance_defect(&cand, &config, &v, point(t0)?, steps).map_err(|e| CliError::Schema(e.to_string()))?;
    let params = json!({"a": a, "t0": t0, "steps": steps, "control": control, "seed": seed});
    let body = json!({
        "rotation": rotation_json(&config),
        "v_field": if control { "identity" } else { "standard" },
        "pieces": cand.field().num_pieces(),
        "defect": r,
    });
    Ok(Outcome::new(report(ReportHeader::new("cex defect", params_digest(&params, extra), seed, true), body), true))
}

pub struct PropagateArgs {
    pub a: f64,
    pub d: f64,
    pub e: f64,
    pub theta_arg: f64,
    pub t0: f64,
    pub steps: usize,
    pub stats_only: bool,
}

pub fn propagate(args: &PropagateArgs) -> Result<Outcome, CliError> {
    let config = rotation(args.a)?;
    let s0 = SParameters::from_angle(args.d, args.e, args.theta_arg).map_err(|e| CliError::Schema(e.to_string()))?;
    let p = constraint_propagate(s0, point(args.t0)?, &config, &standard_v(&config), args.steps);
    let last = p.trajectory.last().expect("nonempty");
    let mut body = json!({
        "rotation": rotation_json(&config),
        "initial": p.trajectory[0],
        "final": last,
        "consistent": p.consistent,
        "boundary_hits": p.boundary_hits,
        "diagonal_count": p.trajectory.iter().filter(|s| s.diagonal).count(),
    });
    if !args.stats_only {
        body["trajectory"] = json!(p.trajectory);
    }
    let params = json!({
        "a": args.a, "d": args.d, "e": args.e, "theta_arg": args.theta_arg,
        "t0": args.t0, "steps": args.steps, "stats_only": args.stats_only,
    });
    let passed = p.consistent;
    Ok(Outcome::new(
        report(ReportHeader::new("cex propagate", params_digest(&params, &[]), None, passed), body),
        passed,
    ))
}
