//! `invmasa masa …`: embedding, generation, verification and factorization.

use masa_core::discrete::{algebra_basis, check_masa};
use masa_core::embedding::{check_invariance, factor_unitary, invariant_masa_embed, EmbedError};
use masa_core::generate::{generate, random_spec, GenerateError, InstanceSpec};
use masa_core::numerics::{ComplexMatrix, SpanProjector, TolerancePolicy};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::document::{
    parse, report, sha256_hex, AlgebraDocument, CliError, Instance, InstanceDocument, ReportHeader, EXIT_CHECK_FAILED,
    EXIT_PASS,
};

/// A report plus the exit code it implies.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub document: Value,
    pub exit_code: i32,
}

impl Outcome {
    pub fn new(document: Value, passed: bool) -> Self {
        Self { document, exit_code: if passed { EXIT_PASS } else { EXIT_CHECK_FAILED } }
    }
}

pub fn embed_error(e: EmbedError) -> CliError {
    match e {
        EmbedError::NotUnitary(_)
        | EmbedError::NotInvariant { .. }
        | EmbedError::BlockSizeMismatch { .. }
        | EmbedError::NotAPermutation(_) => CliError::Precondition(e.to_string()),
        EmbedError::DimensionMismatch { .. } | EmbedError::Discrete(_) => CliError::Schema(e.to_string()),
        EmbedError::Numerics(_) | EmbedError::IterationBudgetExceeded(_) => CliError::Numerical(e.to_string()),
    }
}

fn load_instance(bytes: &[u8], tol: &TolerancePolicy) -> Result<Instance, CliError> {
    parse::<InstanceDocument>(bytes, "instance")?.validate(tol)
}

pub fn embed(input: &[u8], tol: &TolerancePolicy) -> Result<Outcome, CliError> {
    let inst = load_instance(input, tol)?;
    let result = invariant_masa_embed(&inst.algebra, &inst.unitary, tol).map_err(embed_error)?;
    let passed = result.certificate.passed;
    let body = json!({
        "dimension": inst.algebra.n(),
        "pi": result.factorization.pi,
        "cycles": result.factorization.cycles,
        "vectors": result.vectors.iter().map(|v| ComplexMatrix::column(v)).collect::<Vec<_>>(),
        "basis": result.projections,
        "certificate": result.certificate,
        "tolerances": tol_json(tol),
    });
    Ok(Outcome::new(report(ReportHeader::new("masa embed", sha256_hex(input), None, passed), body), passed))
}

/// How to build a generated instance; block sizes and permutation are drawn
/// from `seed` when absent.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GenOptions {
    pub dimension: Option<usize>,
    pub blocks: Option<Vec<usize>>,
    pub perm: Option<Vec<usize>>,
    pub seed: u64,
    pub trivial_v: bool,
    pub counting: bool,
    pub shuffle: bool,
}

/// Returns the instance document; it is checked for invariance before being
/// returned.
pub fn gen(opts: &GenOptions, tol: &TolerancePolicy) -> Result<InstanceDocument, CliError> {
    let spec = match (&opts.blocks, &opts.perm) {
        (Some(blocks), perm) => {
            let pi = perm.clone().unwrap_or_else(|| (0..blocks.len()).collect());
            InstanceSpec { block_sizes: blocks.clone(), pi, weights: None, trivial_v: false, shuffle_points: false }
        }
        (None, Some(_)) => return Err(CliError::Schema("--perm requires --blocks".into())),
        (None, None) => random_spec(opts.seed, opts.dimension.unwrap_or(12), 4),
    };
    let n: usize = spec.block_sizes.iter().sum();
    if let Some(d) = opts.dimension {
        if opts.blocks.is_some() && d != n {
            return Err(CliError::Schema(format!("--dim {d} but blocks sum to {n}")));
        }
    }
    let spec = InstanceSpec {
        weights: opts.counting.then(|| vec![1.0; n]),
        trivial_v: opts.trivial_v,
        shuffle_points: spec.shuffle_points || opts.shuffle,
        ..spec
    };
    let inst = generate(&spec, opts.seed)
        .map_err(|GenerateError::InconsistentSpec(m)| CliError::Precondition(format!("InconsistentSpec: {m}")))?;
    let check = check_invariance(&inst.algebra, &inst.unitary, tol).map_err(embed_error)?;
    if !check.invariant_equal {
        return Err(CliError::Numerical(format!("generated instance failed its self-check ({:e})", check.residual)));
    }
    Ok(InstanceDocument::from_parts(&inst.algebra, &inst.unitary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    Masa,
    Invariance,
    Both,
}

impl std::str::FromStr for VerifyMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "masa" => Ok(Self::Masa),
            "invariance" => Ok(Self::Invariance),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown mode {s:?} (expected masa, invariance or both)")),
        }
    }
}

/// Checks an algebra (the instance's own block algebra when `algebra` is
/// `None`) for the masa property and/or invariance under `U`.
pub fn verify(
    instance: &[u8],
    algebra: Option<&[u8]>,
    mode: VerifyMode,
    tol: &TolerancePolicy,
) -> Result<Outcome, CliError> {
    let inst = load_instance(instance, tol)?;
    let n = inst.algebra.n();
    let basis = match algebra {
        Some(bytes) => parse::<AlgebraDocument>(bytes, "algebra")?.basis,
        None => algebra_basis(&inst.algebra),
    };
    if let Some(b) = basis.iter().find(|b| b.rows() != n || b.cols() != n) {
        return Err(CliError::Schema(format!("basis element is {}x{}, expected {n}x{n}", b.rows(), b.cols())));
    }
    let mut digest_input = instance.to_vec();
    digest_input.extend_from_slice(algebra.unwrap_or_default());

    let mut body = serde_json::Map::new();
    let mut passed = true;
    let mut invariance_failed = false;
    if matches!(mode, VerifyMode::Masa | VerifyMode::Both) {
        let check = check_masa(&basis, n, tol);
        passed &= check.is_masa;
        body.insert("masa".into(), serde_json::to_value(&check).expect("serializes"));
    }
    if matches!(mode, VerifyMode::Invariance | VerifyMode::Both) {
        let (residual, rank_kept) = conjugation_residual(&basis, &inst.unitary, tol);
        let ok = residual <= tol.eps_eq && rank_kept;
        invariance_failed = !ok;
        passed &= ok;
        body.insert("invariance".into(), json!({"residual": residual, "rank_preserved": rank_kept, "invariant": ok}));
    }
    body.insert("mode".into(), serde_json::to_value(mode).expect("serializes"));
    body.insert("basis_size".into(), json!(basis.len()));
    body.insert("tolerances".into(), tol_json(tol));
    let doc = report(ReportHeader::new("masa verify", sha256_hex(&digest_input), None, passed), Value::Object(body));
    let exit_code = match (passed, invariance_failed) {
        (true, _) => EXIT_PASS,
        (false, true) => 3,
        (false, false) => EXIT_CHECK_FAILED,
    };
    Ok(Outcome { document: doc, exit_code })
}

/// Largest distance of `U* b U` from `span(basis)` and whether the conjugated
/// family keeps the span's dimension.
fn conjugation_residual(basis: &[ComplexMatrix], u: &ComplexMatrix, tol: &TolerancePolicy) -> (f64, bool) {
    let span = SpanProjector::new(basis, tol);
    let u_adj = u.adjoint();
    let conjugated: Vec<ComplexMatrix> = basis.iter().map(|b| &(&u_adj * b) * u).collect();
    let residual = conjugated.iter().map(|c| span.residual(c)).fold(0.0, f64::max);
    let image = SpanProjector::new(&conjugated, tol);
    (residual, image.dimension() == span.dimension())
}

pub fn factor(input: &[u8], tol: &TolerancePolicy) -> Result<Outcome, CliError> {
    let inst = load_instance(input, tol)?;
    let f = factor_unitary(&inst.algebra, &inst.unitary, tol).map_err(embed_error)?;
    let passed = f.residual <= tol.eps_eq;
    let body = json!({
        "pi": f.pi,
        "cycles": f.cycles,
        "bijection": f.w.bijection(),
        "density": f.w.density(),
        "v": f.v,
        "w": f.w_matrix,
        "residual": f.residual,
        "tolerances": tol_json(tol),
    });
    Ok(Outcome::new(report(ReportHeader::new("masa factor", sha256_hex(input), None, passed), body), passed))
}

fn tol_json(tol: &TolerancePolicy) -> Value {
    json!({"eps_eq": tol.eps_eq, "eps_rank": tol.eps_rank})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::to_pretty;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn gen_bytes(opts: &GenOptions) -> Vec<u8> {
        to_pretty(&gen(opts, &tol()).unwrap()).into_bytes()
    }

    #[test]
    fn generated_two_cycle_embeds() {
        let opts = GenOptions { blocks: Some(vec![2, 2]), perm: Some(vec![1, 0]), seed: 7, ..Default::default() };
        let out = embed(&gen_bytes(&opts), &tol()).unwrap();
        assert_eq!(out.exit_code, 0);
        assert_eq!(out.document["certificate"]["passed"], true);
    }

    #[test]
    fn diagonal_masa_is_its_own_embedding() {
        let doc = InstanceDocument {
            dimension: 3,
            weights: vec![1.0; 3],
            blocks: vec![vec![0], vec![1], vec![2]],
            unitary: ComplexMatrix::identity(3),
        };
        let out = embed(to_pretty(&doc).as_bytes(), &tol()).unwrap();
        assert_eq!(out.exit_code, 0);
        let basis: Vec<ComplexMatrix> = serde_json::from_value(out.document["basis"].clone()).unwrap();
        for (k, p) in basis.iter().enumerate() {
            let mut e = ComplexMatrix::zeros(3, 3);
            e[(k, k)] = masa_core::numerics::ONE;
            assert!(p.max_abs_diff(&e) < 1e-12);
        }
    }

    #[test]
    fn hadamard_on_diagonal_is_not_invariant() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let doc = InstanceDocument {
            dimension: 2,
            weights: vec![1.0; 2],
            blocks: vec![vec![0], vec![1]],
            unitary: ComplexMatrix::from_real_rows([[h, h], [h, -h]]),
        };
        let bytes = to_pretty(&doc).into_bytes();
        assert_eq!(embed(&bytes, &tol()).unwrap_err().exit_code(), 3);
        assert_eq!(verify(&bytes, None, VerifyMode::Invariance, &tol()).unwrap().exit_code, 3);
    }

    #[test]
    fn embed_output_verifies_as_masa() {
        let opts = GenOptions { seed: 3, dimension: Some(8), ..Default::default() };
        let instance = gen_bytes(&opts);
        let out = embed(&instance, &tol()).unwrap();
        let result = to_pretty(&out.document).into_bytes();
        let v = verify(&instance, Some(&result), VerifyMode::Both, &tol()).unwrap();
        assert_eq!(v.exit_code, 0, "{}", v.document);
    }

    #[test]
    fn gen_rejects_unequal_cycle() {
        let opts = GenOptions { blocks: Some(vec![1, 2]), perm: Some(vec![1, 0]), ..Default::default() };
        assert_eq!(gen(&opts, &tol()).unwrap_err().exit_code(), 3);
        let opts = GenOptions { perm: Some(vec![0]), ..Default::default() };
        assert_eq!(gen(&opts, &tol()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn trivial_v_three_cycle_is_permutation() {
        let opts = GenOptions {
            blocks: Some(vec![1, 1, 1]),
            perm: Some(vec![1, 2, 0]),
            trivial_v: true,
            counting: true,
            ..Default::default()
        };
        let doc = gen(&opts, &tol()).unwrap();
        let u = &doc.unitary;
        for r in 0..3 {
            let ones = (0..3).filter(|&c| (u[(r, c)].re - 1.0).abs() < 1e-15 && u[(r, c)].im == 0.0).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn factor_reports_permutation() {
        let opts = GenOptions { blocks: Some(vec![2, 2, 2]), perm: Some(vec![2, 0, 1]), seed: 1, ..Default::default() };
        let out = factor(&gen_bytes(&opts), &tol()).unwrap();
        assert_eq!(out.exit_code, 0);
        assert_eq!(out.document["pi"], json!([2, 0, 1]));
    }

    #[test]
    fn reports_are_deterministic() {
        let opts = GenOptions { seed: 11, ..Default::default() };
        let a = to_pretty(&embed(&gen_bytes(&opts), &tol()).unwrap().document);
        let b = to_pretty(&embed(&gen_bytes(&opts), &tol()).unwrap().document);
        assert_eq!(a, b);
    }
}
