//! Entanglement growth from random sigma_x product states.
//!
//! Usage: entropy_growth [spins] [depth] [seeds]
//!
//! Evolves an ensemble of product states under independent brick-wall
//! circuits, measures the half-chain spectrum at every layer, and fits
//! power laws to the mean curves over the pre-saturation window. The
//! von Neumann entropy climbs roughly linearly; the higher-order
//! entropies are dragged down by the largest Schmidt coefficient, which
//! diffusive charge transport keeps anomalously large.

use brickwall::circuit::{CircuitSpec, Evolution};
use brickwall::entanglement::EntanglementSpectrum;
use brickwall::fit::fit_power_law;
use brickwall::rng::{derive_key, stream, StreamDomain};
use brickwall::state::{SignPattern, Statevector};

fn main() -> brickwall::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let spins: usize = args.get(1).map_or(Ok(12), |s| s.parse()).expect("spins");
    let depth: usize = args.get(2).map_or(Ok(20), |s| s.parse()).expect("depth");
    let seeds: u64 = args.get(3).map_or(Ok(8), |s| s.parse()).expect("seeds");
    let master = 11u64;
    let half = spins / 2;

    let mut vn = vec![0.0f64; depth];
    let mut r2 = vec![0.0f64; depth];
    let mut rinf = vec![0.0f64; depth];
    let mut lambda1 = vec![0.0f64; depth];
    for r in 0..seeds {
        let seed = derive_key(master, StreamDomain::Circuit, r);
        let spec = CircuitSpec::new(spins, depth, seed)?;
        let signs = SignPattern::random(spins, &mut stream(master, StreamDomain::InitialSigns, r));
        let mut state = Statevector::product_x(&signs)?;
        for t in 1..=depth {
            spec.evolve(&mut state, t - 1, t, Evolution::Unitary)?;
            let spectrum = EntanglementSpectrum::from_state(&state, half)?;
            vn[t - 1] += spectrum.von_neumann() / seeds as f64;
            r2[t - 1] += spectrum.renyi(2.0)? / seeds as f64;
            rinf[t - 1] += spectrum.min_entropy() / seeds as f64;
            lambda1[t - 1] += spectrum.leading() / seeds as f64;
        }
    }

    println!("spins {spins}, {seeds} realizations, half-chain cut\n");
    println!(
        "{:>4} {:>9} {:>9} {:>9} {:>9}",
        "t", "vn", "r2", "rinf", "lambda1"
    );
    for t in 1..=depth {
        println!(
            "{:>4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            t,
            vn[t - 1],
            r2[t - 1],
            rinf[t - 1],
            lambda1[t - 1]
        );
    }

    // fit below half the page ceiling, where growth is still clean
    let ceiling = 0.5 * half as f64 * std::f64::consts::LN_2;
    let fit = |values: &[f64], label: &str| {
        let window: Vec<(f64, f64)> = (1..=depth)
            .zip(values)
            .skip(1)
            .take_while(|(_, v)| **v < ceiling)
            .map(|(t, v)| (t as f64, *v))
            .collect();
        match fit_power_law(&window) {
            Ok(f) if window.len() >= 4 => println!(
                "{label:>6} ~ {:.3} t^{:.3}   ({} points below {ceiling:.2})",
                f.prefactor, f.exponent, f.n_points
            ),
            _ => println!("{label:>6}: window too short for a fit"),
        }
    };
    println!();
    fit(&vn, "vn");
    fit(&r2, "r2");
    fit(&rinf, "rinf");
    println!(
        "\npage ceiling at this cut: {:.3}",
        half as f64 * std::f64::consts::LN_2
    );
    Ok(())
}
