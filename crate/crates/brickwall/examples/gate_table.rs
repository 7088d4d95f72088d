//! Anatomy of a charge-conserving gate and the circuit's gate table.
//!
//! Usage: gate_table [seed]
//!
//! Every two-site gate is block diagonal in the local charge sectors:
//! a phase on |00>, a Haar 2x2 unitary on span{|01>, |10>}, a phase on
//! |11>. The example prints one drawn gate, checks unitarity and the
//! dagger identity numerically, then round-trips a whole circuit
//! through the CSV gate table that `simulate --dump-circuit` emits.

use brickwall::circuit::{read_gate_table, CircuitSpec};
use brickwall::gate::ChargeGate;
use brickwall::rng::{derive_key, stream, StreamDomain};
use num_complex::Complex64;

fn print_gate(g: &ChargeGate) {
    let b = g.block();
    let f = |z: Complex64| format!("{:+.4}{:+.4}i", z.re, z.im);
    println!("  |00> phase : {}", f(g.phase0()));
    println!("  block      : [{}  {}]", f(b[0][0]), f(b[0][1]));
    println!("               [{}  {}]", f(b[1][0]), f(b[1][1]));
    println!("  |11> phase : {}", f(g.phase1()));
}

fn main() -> brickwall::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let master: u64 = args.get(1).map_or(Ok(9), |s| s.parse()).expect("seed");

    let mut rng = stream(master, StreamDomain::Circuit, 0);
    let gate = ChargeGate::haar(&mut rng);
    println!("one gate from the keyed stream (seed {master}):");
    print_gate(&gate);

    // unitarity of the middle block: columns orthonormal
    let b = gate.block();
    let col_norm0 = (b[0][0].norm_sqr() + b[1][0].norm_sqr()).sqrt();
    let col_norm1 = (b[0][1].norm_sqr() + b[1][1].norm_sqr()).sqrt();
    let cross = b[0][0].conj() * b[0][1] + b[1][0].conj() * b[1][1];
    println!("\n  column norms     : {col_norm0:.12}, {col_norm1:.12}");
    println!("  column overlap   : {:.3e}", cross.norm());
    println!(
        "  |phase0|, |phase1|: {:.12}, {:.12}",
        gate.phase0().norm(),
        gate.phase1().norm()
    );

    let dag = gate.dagger();
    let prod = [
        dag.block()[0][0] * b[0][0] + dag.block()[0][1] * b[1][0],
        dag.block()[0][0] * b[0][1] + dag.block()[0][1] * b[1][1],
        dag.block()[1][0] * b[0][0] + dag.block()[1][1] * b[1][0],
        dag.block()[1][0] * b[0][1] + dag.block()[1][1] * b[1][1],
    ];
    println!(
        "  dagger * block   : [{:.2e} off-diagonal, {:.2e} from identity]",
        prod[1].norm().max(prod[2].norm()),
        (prod[0] - 1.0).norm().max((prod[3] - 1.0).norm())
    );

    // full table round trip through the CSV format
    let spec = CircuitSpec::new(8, 3, derive_key(master, StreamDomain::Circuit, 0))?;
    let mut buffer = Vec::new();
    spec.write_gate_table(&mut buffer)?;
    let rows = read_gate_table(std::io::Cursor::new(&buffer))?;
    println!(
        "\ngate table for 8 spins, depth 3: {} rows, {} bytes of CSV",
        rows.len(),
        buffer.len()
    );

    let mut worst = 0.0f64;
    for &(layer, bond, ref parsed) in &rows {
        let original = spec.gate(layer, bond)?;
        let ob = original.block();
        let pb = parsed.block();
        let mut dev = (original.phase0() - parsed.phase0()).norm();
        dev = dev.max((original.phase1() - parsed.phase1()).norm());
        for i in 0..2 {
            for j in 0..2 {
                dev = dev.max((ob[i][j] - pb[i][j]).norm());
            }
        }
        worst = worst.max(dev);
    }
    println!("worst round-trip deviation over all entries: {worst:.3e}");

    println!("\nfirst rows of the table:");
    for line in String::from_utf8_lossy(&buffer).lines().take(4) {
        let short: String = line.chars().take(100).collect();
        println!("  {short}{}", if line.len() > 100 { "..." } else { "" });
    }
    Ok(())
}
