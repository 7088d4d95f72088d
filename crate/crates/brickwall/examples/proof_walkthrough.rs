//! Step-by-step tour of the entropy bound for one circuit realization.
//!
//! Usage: proof_walkthrough [spins] [depth] [seed]
//!
//! The chain of custody, link by link:
//!
//!   1. psi0 freezes the central 2m spins of psi_init into the zero
//!      block, so |<U psi0, U psi_init>| = 2^-m exactly at every time.
//!   2. V is the same circuit with the one gate straddling the cut
//!      replaced by its charge-sector projection. V psi0 never entangles
//!      the halves across the cut, so <V psi0| picks out a single
//!      Schmidt vector: lambda1 >= |<V psi0, U psi_init>|.
//!   3. U psi0 - V psi0 = Delta_t accumulates only from cut leakage,
//!      one layer at a time: ||Delta_t|| <= 2 sum_l leak_l.
//!   4. For ensemble members, |<Delta_t, U psi_init>| <= 2^-m ||Delta_t|| p(t),
//!      which turns 1+2+3 into a certified lower bound on lambda1 and
//!      hence an upper bound on every Renyi entropy of order above one.

use brickwall::circuit::CircuitSpec;
use brickwall::entanglement::Alpha;
use brickwall::proof::{m_schedule, run_proof_traces, threshold_polynomial, verify_overlap_chain};
use brickwall::rng::{derive_key, stream, StreamDomain};
use brickwall::state::SignPattern;

fn main() -> brickwall::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let spins: usize = args.get(1).map_or(Ok(16), |s| s.parse()).expect("spins");
    let depth: usize = args.get(2).map_or(Ok(16), |s| s.parse()).expect("depth");
    let master: u64 = args.get(3).map_or(Ok(5), |s| s.parse()).expect("seed");

    let spec = CircuitSpec::new(spins, depth, derive_key(master, StreamDomain::Circuit, 0))?;
    let signs = SignPattern::random(spins, &mut stream(master, StreamDomain::InitialSigns, 0));
    let p_degree = 2u32;
    let k_const = 1.5;
    let alphas = [Alpha::Finite(2.0), Alpha::Infinity];

    println!("{spins} spins, depth {depth}, master seed {master}");
    println!("initial signs: {signs}");
    println!(
        "cut bond: {}, block schedule m = ceil({k_const} sqrt(t ln t))\n",
        spec.cut_bond()
    );

    for &t in &[depth / 4, depth / 2, depth] {
        let t = t.max(1);
        let m = m_schedule(k_const, t, spins / 2);
        let trace = run_proof_traces(&spec, &signs, m, &[t], p_degree, &alphas)?
            .pop()
            .unwrap();

        println!("== t = {t}, block half-width m = {m} ==");
        println!(
            "  overlap_u        = {:.6e}  (exact value 2^-{m} = {:.6e})",
            trace.overlap_u,
            0.5f64.powi(m as i32)
        );
        let leaks: Vec<String> = trace
            .per_layer_leakage
            .iter()
            .map(|l| format!("{l:.3e}"))
            .collect();
        println!("  per-layer leakage: [{}]", leaks.join(", "));
        println!(
            "  ||Delta||        = {:.6e}  <= 2*sum = {:.6e}",
            trace.delta_norm,
            2.0 * trace.leakage_sum
        );
        println!(
            "  overlap_v        = {:.6e}  <= lambda1 = {:.6e}",
            trace.overlap_v, trace.lambda1_measured
        );
        println!(
            "  defect overlap   = {:.6e}  vs membership cap {:.6e}  (p(t) = {:.0})",
            trace.defect_overlap,
            trace.overlap_u * trace.delta_norm * trace.p_of_t,
            threshold_polynomial(t, p_degree)
        );
        println!("  member of S'     : {}", trace.s_prime_member);
        println!("  lambda1 bound    = {:.6e}", trace.lambda1_bound);
        for &(alpha, measured) in &trace.measured_entropy {
            let name = format!("R_{alpha}");
            match trace.bound_entropy(alpha) {
                Some(bound) => {
                    println!("  {name:<16} measured = {measured:.4}, certified <= {bound:.4}")
                }
                None => println!("  {name:<16} measured = {measured:.4}, bound vacuous here"),
            }
        }
        println!(
            "  von Neumann      = {:.4} (no such bound applies at order one)",
            trace.von_neumann
        );

        for check in verify_overlap_chain(&trace) {
            let status = if check.holds { "ok " } else { "VIOLATED" };
            println!(
                "  [{status}] {:<28} {:.6e} <= {:.6e}",
                check.name, check.lhs, check.rhs
            );
        }
        println!();
    }
    Ok(())
}
