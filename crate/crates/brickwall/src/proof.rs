//! The overlap harness: compares unitary evolution against the
//! cut-replaced variant on zero-block initial states, and turns the
//! measured defect into certified upper bounds on Renyi entropies across
//! the middle cut.
//!
//! The chain, all quantities measured per run:
//! 1. the zero-block state psi0 overlaps the product state psi_init with
//!    modulus exactly 2^-m, and unitarity preserves that overlap;
//! 2. the defect Delta_t between the two evolutions of psi0 is controlled
//!    by accumulated leakage out of the projected cut block;
//! 3. members of the sign ensemble whose defect overlap sits below the
//!    Markov threshold give |<V psi0, U psi_init>| >= 2^-m (1 - p(t) ||Delta_t||);
//! 4. the cut-replaced evolution never entangles the halves, so that
//!    overlap lower-bounds the leading Schmidt coefficient, which upper
//!    bounds every Renyi entropy of order above 1.

use crate::circuit::{CircuitSpec, Evolution};
use crate::entanglement::{Alpha, EntanglementSpectrum};
use crate::error::Error;
use crate::rng::{stream, StreamDomain};
use crate::state::{SignPattern, Statevector};
use crate::Result;
use rand::Rng;

/// Tolerances for the measured identities.
pub const OVERLAP_TOL: f64 = 1e-10;
pub const CHAIN_TOL: f64 = 1e-9;
pub const BOUND_TOL: f64 = 1e-6;

/// Largest ensemble exponent enumerated exhaustively: 2m <= 12.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Zero-block half-width schedule m(t) = ceil(k * sqrt(t ln t)), clamped
/// to 1..=n.
pub fn m_schedule(k_const: f64, t: usize, half_spins: usize) -> usize {
    let tf = t as f64;
    let raw = k_const * (tf * tf.ln()).max(0.0).sqrt();
    (raw.ceil() as usize).clamp(1, half_spins)
}

/// p(t) = t^p_degree, the Markov threshold polynomial.
pub fn threshold_polynomial(t: usize, p_degree: u32) -> f64 {
    (t as f64).powi(p_degree as i32)
}

/// Everything measured at one (m, t) point.
#[derive(Clone, Debug)]
pub struct ProofTrace {
    pub m: usize,
    pub t: usize,
    pub p_degree: u32,
    pub p_of_t: f64,
    /// Cut leakage ||(1 - P) psi|| of the unitary trajectory of psi0,
    /// measured in each of layers 1..=t at the instant the cut gate acts
    /// (the layer start when the cut bond is odd, between the sublayers
    /// when it is even).
    pub per_layer_leakage: Vec<f64>,
    pub leakage_sum: f64,
    /// ||U(t,0) psi0 - V(t,0) psi0||.
    pub delta_norm: f64,
    /// |<U psi0, U psi_init>|; equals 2^-m up to roundoff.
    pub overlap_u: f64,
    /// |<V psi0, U psi_init>|.
    pub overlap_v: f64,
    /// |<Delta_t, U psi_init>|.
    pub defect_overlap: f64,
    /// Leading Schmidt coefficient of U psi_init at the middle cut.
    pub lambda1_measured: f64,
    /// 2^-m (1 - p(t) ||Delta_t||); nonpositive values are vacuous.
    pub lambda1_bound: f64,
    /// defect_overlap <= 2^-m ||Delta_t|| p(t).
    pub s_prime_member: bool,
    pub von_neumann: f64,
    /// Measured entropies of U psi_init for the requested orders.
    pub measured_entropy: Vec<(Alpha, f64)>,
    /// Human-readable reports for any violated run invariant.
    pub invariant_failures: Vec<String>,
}

impl ProofTrace {
    /// Certified entropy bound at this order, when the trace is an ensemble
    /// member and the threshold quantity is positive. The infinite-order
    /// bound is -2 ln of the threshold quantity; finite orders pick up the
    /// sandwich factor alpha/(alpha-1).
    pub fn bound_entropy(&self, alpha: Alpha) -> Option<f64> {
        if !self.s_prime_member || self.lambda1_bound <= 0.0 {
            return None;
        }
        let base = -2.0 * self.lambda1_bound.ln();
        match alpha {
            Alpha::Infinity => Some(base),
            Alpha::Finite(a) if a > 1.0 => Some(a / (a - 1.0) * base),
            Alpha::Finite(_) => None,
        }
    }
}

/// One verified inequality: holds iff lhs <= rhs + slack.
#[derive(Clone, Debug)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

fn check(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> InequalityCheck {
    InequalityCheck {
        name: name.into(),
        lhs,
        rhs,
        slack,
        holds: lhs <= rhs + slack,
    }
}

/// Runs the lockstep evolution (psi_init under the full circuit, the
/// zero-block state under both variants) and snapshots a trace at each
/// requested time. `ts` must be ascending, within 1..=depth.
pub fn run_proof_traces(
    spec: &CircuitSpec,
    signs: &SignPattern,
    m: usize,
    ts: &[usize],
    p_degree: u32,
    alphas: &[Alpha],
) -> Result<Vec<ProofTrace>> {
    if ts.is_empty() || ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "ts must be nonempty and ascending".into(),
        ));
    }
    if ts[0] == 0 || *ts.last().unwrap() > spec.depth() {
        return Err(Error::InvalidArgument("ts outside 1..=depth".into()));
    }
    if p_degree == 0 {
        return Err(Error::InvalidArgument("p_degree must be at least 1".into()));
    }
    let mut psi = Statevector::product_x(signs)?;
    let mut u0 = Statevector::zero_block(signs, m)?;
    let mut v0 = u0.clone();
    let two_minus_m = 0.5f64.powi(m as i32);

    let mut leakages: Vec<f64> = Vec::new();
    let mut traces = Vec::new();
    let mut next = 0usize;
    for layer in 1..=*ts.last().unwrap() {
        spec.apply_layer(&mut psi, layer)?;
        leakages.push(spec.apply_layer_with_cut_leakage(&mut u0, layer)?);
        spec.apply_layer_variant(&mut v0, layer, Evolution::CutReplaced)?;
        if ts[next] == layer {
            traces.push(snapshot(
                spec,
                &psi,
                &u0,
                &v0,
                &leakages,
                m,
                layer,
                p_degree,
                two_minus_m,
                alphas,
            )?);
            next += 1;
            if next == ts.len() {
                break;
            }
        }
    }
    Ok(traces)
}

/// Convenience wrapper for a single time.
pub fn run_proof_trace(
    spec: &CircuitSpec,
    signs: &SignPattern,
    m: usize,
    t: usize,
    p_degree: u32,
    alphas: &[Alpha],
) -> Result<ProofTrace> {
    Ok(run_proof_traces(spec, signs, m, &[t], p_degree, alphas)?
        .pop()
        .unwrap())
}

#[allow(clippy::too_many_arguments)]
fn snapshot(
    spec: &CircuitSpec,
    psi: &Statevector,
    u0: &Statevector,
    v0: &Statevector,
    leakages: &[f64],
    m: usize,
    t: usize,
    p_degree: u32,
    two_minus_m: f64,
    alphas: &[Alpha],
) -> Result<ProofTrace> {
    let delta = u0.difference(v0)?;
    let delta_norm = delta.norm();
    let overlap_u = u0.inner(psi)?.norm();
    let overlap_v = v0.inner(psi)?.norm();
    let defect_overlap = delta.inner(psi)?.norm();
    let spectrum = EntanglementSpectrum::from_state(psi, spec.half())?;
    let lambda1_measured = spectrum.leading();
    let p_of_t = threshold_polynomial(t, p_degree);
    let lambda1_bound = two_minus_m * (1.0 - delta_norm * p_of_t);
    let s_prime_member = defect_overlap <= two_minus_m * delta_norm * p_of_t;
    let leakage_sum: f64 = leakages.iter().sum();
    let von_neumann = spectrum.von_neumann();
    let measured_entropy = alphas
        .iter()
        .map(|&a| spectrum.entropy(a).map(|v| (a, v)))
        .collect::<Result<Vec<_>>>()?;

    let mut invariant_failures = Vec::new();
    if (overlap_u - two_minus_m).abs() > OVERLAP_TOL {
        invariant_failures.push(format!(
            "overlap_u {overlap_u:.15e} differs from 2^-m {two_minus_m:.15e}"
        ));
    }
    // Each layer replacement contributes two approximation steps (project,
    // then unproject), each bounded by that layer's leakage.
    if delta_norm > 2.0 * leakage_sum + CHAIN_TOL {
        invariant_failures.push(format!(
            "delta_norm {delta_norm:.15e} exceeds twice the leakage sum {leakage_sum:.15e}"
        ));
    }
    if lambda1_measured < overlap_v - CHAIN_TOL {
        invariant_failures.push(format!(
            "lambda1 {lambda1_measured:.15e} below overlap_v {overlap_v:.15e}"
        ));
    }

    Ok(ProofTrace {
        m,
        t,
        p_degree,
        p_of_t,
        per_layer_leakage: leakages.to_vec(),
        leakage_sum,
        delta_norm,
        overlap_u,
        overlap_v,
        defect_overlap,
        lambda1_measured,
        lambda1_bound,
        s_prime_member,
        von_neumann,
        measured_entropy,
        invariant_failures,
    })
}

/// Re-derives every inequality in the chain from the trace's numbers.
pub fn verify_overlap_chain(trace: &ProofTrace) -> Vec<InequalityCheck> {
    let two_minus_m = 0.5f64.powi(trace.m as i32);
    let min_entropy = -2.0 * trace.lambda1_measured.ln();
    let mut checks = vec![
        check(
            "overlap_u identity: |overlap_u - 2^-m| = 0",
            (trace.overlap_u - two_minus_m).abs(),
            0.0,
            OVERLAP_TOL,
        ),
        check(
            "defect accounting: delta_norm <= 2 * leakage_sum",
            trace.delta_norm,
            2.0 * trace.leakage_sum,
            CHAIN_TOL,
        ),
        check(
            "triangle: 2^-m - defect_overlap <= overlap_v",
            two_minus_m - trace.defect_overlap,
            trace.overlap_v,
            OVERLAP_TOL,
        ),
        check(
            "rank-one optimality: overlap_v <= lambda1",
            trace.overlap_v,
            trace.lambda1_measured,
            CHAIN_TOL,
        ),
    ];
    if trace.s_prime_member {
        checks.push(check(
            "membership: defect_overlap <= 2^-m p(t) delta_norm",
            trace.defect_overlap,
            two_minus_m * trace.p_of_t * trace.delta_norm,
            0.0,
        ));
    }
    for &(alpha, value) in &trace.measured_entropy {
        match alpha {
            Alpha::Finite(a) if a > 1.0 => {
                checks.push(check(
                    format!("sandwich lower, alpha={alpha}: min_entropy <= R_alpha"),
                    min_entropy,
                    value,
                    CHAIN_TOL,
                ));
                checks.push(check(
                    format!("sandwich upper, alpha={alpha}: R_alpha <= a/(a-1) min_entropy"),
                    value,
                    a / (a - 1.0) * min_entropy,
                    CHAIN_TOL,
                ));
            }
            Alpha::Infinity => {
                checks.push(check(
                    "min-entropy identity: R_inf = -2 ln lambda1",
                    (value - min_entropy).abs(),
                    0.0,
                    CHAIN_TOL,
                ));
            }
            Alpha::Finite(_) => {}
        }
        if let Some(bound) = trace.bound_entropy(alpha) {
            checks.push(check(
                format!("final bound, alpha={alpha}: R_alpha <= certified bound"),
                value,
                bound,
                BOUND_TOL,
            ));
        }
    }
    checks
}

/// Tail statistics of the sign ensemble at fixed out-region signs.
#[derive(Clone, Debug)]
pub struct EnsembleReport {
    pub ensemble_size: usize,
    pub exhaustive: bool,
    pub delta_norm: f64,
    /// 2^-m ||Delta_t||, the quadratic-mean bound on the mean overlap.
    pub amqm_bound: f64,
    pub mean_abs_overlap: f64,
    /// 2^-m ||Delta_t|| p(t).
    pub threshold: f64,
    /// Fraction of members with |<Delta_t, U psi_init>| <= threshold.
    pub fraction_below: f64,
    /// 1 - 1/p(t).
    pub markov_bound: f64,
}

/// Varies the 2m in-region signs while keeping the rest of `signs` fixed,
/// and measures the defect overlap for every member (exhaustively when
/// 2m <= 12, otherwise `sample_size` members drawn from a keyed stream).
///
/// The backward trick keeps this cheap: <Delta_t | U psi_init> =
/// <U(t,0)^dag Delta_t | psi_init>, one inverse evolution for any number
/// of members, each member then a product-state inner product.
pub fn ensemble_s_prime(
    spec: &CircuitSpec,
    signs: &SignPattern,
    m: usize,
    t: usize,
    p_degree: u32,
    sample_size: usize,
) -> Result<EnsembleReport> {
    if t == 0 || t > spec.depth() {
        return Err(Error::InvalidArgument("t outside 1..=depth".into()));
    }
    if p_degree == 0 {
        return Err(Error::InvalidArgument("p_degree must be at least 1".into()));
    }
    let n = spec.half();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("m outside 1..={n}")));
    }

    let mut u0 = Statevector::zero_block(signs, m)?;
    let mut v0 = u0.clone();
    spec.evolve(&mut u0, 0, t, Evolution::Unitary)?;
    spec.evolve(&mut v0, 0, t, Evolution::CutReplaced)?;
    let delta = u0.difference(&v0)?;
    let delta_norm = delta.norm();

    let mut omega = delta;
    for layer in (1..=t).rev() {
        spec.apply_layer_inverse(&mut omega, layer)?;
    }

    let exhaustive = 2 * m <= EXHAUSTIVE_LIMIT;
    let members: Vec<u64> = if exhaustive {
        (0..1u64 << (2 * m)).collect()
    } else {
        if sample_size == 0 {
            return Err(Error::InvalidArgument(
                "sample_size must be positive".into(),
            ));
        }
        let index = (m as u64) << 32 | t as u64;
        let mut rng = stream(spec.master_seed(), StreamDomain::EnsembleSample, index);
        (0..sample_size)
            .map(|_| rng.random_range(0..1u64 << (2 * m)))
            .collect()
    };

    // in-region sites occupy bits n-m .. n+m-1
    let block_shift = n - m;
    let base_minus = signs.minus_mask() & !(((1u64 << (2 * m)) - 1) << block_shift);
    let scale = 0.5f64.powi(spec.num_spins() as i32 / 2);
    let amps = omega.amplitudes();

    let overlaps: Vec<f64> = members
        .iter()
        .map(|&pattern| {
            let minus = base_minus | (pattern << block_shift);
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (idx, a) in amps.iter().enumerate() {
                let sign = if (idx as u64 & minus).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                acc += a.conj() * sign;
            }
            (acc * scale).norm()
        })
        .collect();

    let ensemble_size = overlaps.len();
    let mean_abs_overlap = overlaps.iter().sum::<f64>() / ensemble_size as f64;
    let two_minus_m = 0.5f64.powi(m as i32);
    let amqm_bound = two_minus_m * delta_norm;
    let p_of_t = threshold_polynomial(t, p_degree);
    let threshold = amqm_bound * p_of_t;
    let below = overlaps.iter().filter(|v| **v <= threshold + 1e-15).count();
    Ok(EnsembleReport {
        ensemble_size,
        exhaustive,
        delta_norm,
        amqm_bound,
        mean_abs_overlap,
        threshold,
        fraction_below: below as f64 / ensemble_size as f64,
        markov_bound: 1.0 - 1.0 / p_of_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(seed: u64, len: usize) -> SignPattern {
        SignPattern::random(len, &mut stream(seed, StreamDomain::InitialSigns, 0))
    }

    const ALPHAS: [Alpha; 3] = [Alpha::Finite(2.0), Alpha::Finite(3.0), Alpha::Infinity];

    #[test]
    fn schedule_grows_and_clamps() {
        assert_eq!(m_schedule(2.0, 1, 8), 1);
        assert_eq!(m_schedule(2.0, 2, 8), 3);
        assert!(m_schedule(2.0, 3, 8) >= m_schedule(2.0, 2, 8));
        assert_eq!(m_schedule(2.0, 1000, 8), 8);
        assert_eq!(m_schedule(0.5, 2, 8), 1);
    }

    #[test]
    fn identity_circuit_trace_is_exact() {
        let spec = CircuitSpec::identity(8, 4).unwrap();
        let s = signs(5, 8);
        let trace = run_proof_trace(&spec, &s, 2, 3, 2, &ALPHAS).unwrap();
        assert!(trace.delta_norm < 1e-14);
        assert!(trace.leakage_sum < 1e-14);
        assert!((trace.overlap_u - 0.25).abs() < 1e-14);
        assert!((trace.overlap_v - 0.25).abs() < 1e-14);
        assert!((trace.lambda1_measured - 1.0).abs() < 1e-12);
        assert!(trace.s_prime_member);
        assert!((trace.lambda1_bound - 0.25).abs() < 1e-14);
        assert!(trace.invariant_failures.is_empty());
        assert!(verify_overlap_chain(&trace).iter().all(|c| c.holds));
    }

    #[test]
    fn random_circuit_chain_holds_everywhere() {
        let spec = CircuitSpec::new(10, 8, 41).unwrap();
        let s = signs(17, 10);
        for m in [1usize, 2, 3] {
            let traces = run_proof_traces(&spec, &s, m, &[1, 2, 4, 8], 2, &ALPHAS).unwrap();
            assert_eq!(traces.len(), 4);
            for trace in traces {
                assert!(
                    trace.invariant_failures.is_empty(),
                    "m={m} t={}: {:?}",
                    trace.t,
                    trace.invariant_failures
                );
                for c in verify_overlap_chain(&trace) {
                    assert!(
                        c.holds,
                        "m={m} t={}: '{}' lhs={} rhs={}",
                        trace.t, c.name, c.lhs, c.rhs
                    );
                }
            }
        }
    }

    #[test]
    fn defect_stays_under_twice_leakage_sum_and_can_exceed_it() {
        // The 2x factor in the accounting is necessary: report the largest
        // observed ratio so regressions in either direction are visible.
        let mut max_ratio: f64 = 0.0;
        for seed in 0..12u64 {
            let spec = CircuitSpec::new(10, 6, 100 + seed).unwrap();
            let s = signs(seed, 10);
            for trace in run_proof_traces(&spec, &s, 2, &[2, 3, 4, 5, 6], 2, &[]).unwrap() {
                if trace.leakage_sum > 1e-12 {
                    max_ratio = max_ratio.max(trace.delta_norm / trace.leakage_sum);
                }
                assert!(trace.delta_norm <= 2.0 * trace.leakage_sum + CHAIN_TOL);
            }
        }
        println!("max delta_norm / leakage_sum ratio: {max_ratio:.4}");
        assert!(max_ratio <= 2.0);
    }

    #[test]
    fn first_layer_produces_no_defect() {
        // psi0 sits inside the projected block, so both variants agree at t=1.
        let spec = CircuitSpec::new(8, 2, 9).unwrap();
        let trace = run_proof_trace(&spec, &signs(3, 8), 2, 1, 2, &[]).unwrap();
        assert!(trace.delta_norm < 1e-13, "delta {}", trace.delta_norm);
        assert!(trace.per_layer_leakage[0] < 1e-14);
    }

    #[test]
    fn even_half_chain_supported() {
        let spec = CircuitSpec::new(8, 3, 2).unwrap();
        let trace = run_proof_trace(&spec, &signs(1, 8), 2, 3, 2, &ALPHAS).unwrap();
        assert!(trace.invariant_failures.is_empty());
    }

    #[test]
    fn trace_input_validation() {
        let spec = CircuitSpec::new(8, 3, 2).unwrap();
        let s = signs(1, 8);
        assert!(run_proof_traces(&spec, &s, 2, &[], 2, &[]).is_err());
        assert!(run_proof_traces(&spec, &s, 2, &[2, 2], 2, &[]).is_err());
        assert!(run_proof_traces(&spec, &s, 2, &[0, 1], 2, &[]).is_err());
        assert!(run_proof_traces(&spec, &s, 2, &[4], 2, &[]).is_err());
        assert!(run_proof_traces(&spec, &s, 2, &[1], 0, &[]).is_err());
        assert!(run_proof_traces(&spec, &s, 5, &[1], 2, &[]).is_err());
    }

    #[test]
    fn exhaustive_ensemble_obeys_quadratic_mean_and_markov() {
        let spec = CircuitSpec::new(8, 6, 23).unwrap();
        let report = ensemble_s_prime(&spec, &signs(7, 8), 2, 5, 2, 0).unwrap();
        assert!(report.exhaustive);
        assert_eq!(report.ensemble_size, 16);
        assert!(report.mean_abs_overlap <= report.amqm_bound + 1e-12);
        assert!(report.fraction_below >= report.markov_bound - 1e-12);
        assert!((report.markov_bound - (1.0 - 1.0 / 25.0)).abs() < 1e-15);
    }

    #[test]
    fn identity_ensemble_is_all_members() {
        let spec = CircuitSpec::identity(8, 4).unwrap();
        let report = ensemble_s_prime(&spec, &signs(2, 8), 2, 4, 2, 0).unwrap();
        assert!(report.delta_norm < 1e-14);
        assert!(report.mean_abs_overlap < 1e-13);
        assert!((report.fraction_below - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_ensemble_uses_requested_size() {
        let spec = CircuitSpec::new(16, 3, 5).unwrap();
        // m = 7 gives 2m = 14 > 12, so sampling kicks in
        let report = ensemble_s_prime(&spec, &signs(4, 16), 7, 2, 2, 40).unwrap();
        assert!(!report.exhaustive);
        assert_eq!(report.ensemble_size, 40);
        assert!(ensemble_s_prime(&spec, &signs(4, 16), 7, 2, 2, 0).is_err());
    }
}
