//! Dense reference implementations for cross-checking the library: full
//! unitary matrices built by explicit embedding, partial traces, and a
//! Jacobi eigensolver. Deliberately shares no code path with the library
//! kernels; everything here is the slow, obviously-correct route.
#![allow(dead_code)]

use brickwall::circuit::{CircuitSpec, Evolution};
use brickwall::gate::ChargeGate;
use brickwall::state::{Sign, SignPattern};
use num_complex::Complex64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major square complex matrix.
#[derive(Clone, Debug)]
pub struct DMat {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl DMat {
    pub fn zeros(n: usize) -> Self {
        DMat {
            n,
            a: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = ONE;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.a[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.a[r * self.n + c] = v;
    }

    pub fn mul(&self, other: &DMat) -> DMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn dagger(&self) -> DMat {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> DMat {
        DMat {
            n: self.n,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &DMat) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// The 4x4 matrix of a two-site gate in the basis |00>, |10>, |01>, |11>,
/// where index v = (left site bit) + 2 * (right site bit).
pub fn gate_matrix(gate: &ChargeGate) -> DMat {
    let b = gate.block();
    let mut m = DMat::zeros(4);
    m.set(0, 0, gate.phase0());
    // the charge-1 block acts on span{|01>, |10>} = indices {2, 1}
    m.set(2, 2, b[0][0]);
    m.set(2, 1, b[0][1]);
    m.set(1, 2, b[1][0]);
    m.set(1, 1, b[1][1]);
    m.set(3, 3, gate.phase1());
    m
}

/// Embeds a 4x4 two-site matrix acting on sites (bond, bond+1) into the
/// full 2^num_spins space. Site i corresponds to bit i-1 of the index.
pub fn embed_gate(g4: &DMat, bond: usize, num_spins: usize) -> DMat {
    assert_eq!(g4.n, 4);
    let dim = 1usize << num_spins;
    let lo = bond - 1;
    let mut full = DMat::zeros(dim);
    for col in 0..dim {
        let vin = (col >> lo) & 3;
        let rest = col & !(3usize << lo);
        for vout in 0..4usize {
            let amp = g4.get(vout, vin);
            if amp != ZERO {
                let row = rest | (vout << lo);
                full.set(row, col, amp);
            }
        }
    }
    full
}

/// Full matrix of one brick-wall layer: odd bonds first, then even bonds,
/// with the cut bond optionally replaced by its |00> phase times identity.
pub fn layer_matrix(spec: &CircuitSpec, layer: usize, evolution: Evolution) -> DMat {
    let num_spins = spec.num_spins();
    let dim = 1usize << num_spins;
    let cut = spec.num_spins() / 2;
    let odd = (1..num_spins).step_by(2);
    let even = (2..num_spins.saturating_sub(1)).step_by(2);
    let mut m = DMat::identity(dim);
    for bond in odd.chain(even) {
        let gate = spec.gate(layer, bond).unwrap();
        let g = if evolution == Evolution::CutReplaced && bond == cut {
            DMat::identity(dim).scale(gate.phase0())
        } else {
            embed_gate(&gate_matrix(&gate), bond, num_spins)
        };
        m = g.mul(&m);
    }
    m
}

/// U(t, 0) (or its cut-replaced variant) as one dense matrix.
pub fn evolution_matrix(spec: &CircuitSpec, t: usize, evolution: Evolution) -> DMat {
    let mut m = DMat::identity(1 << spec.num_spins());
    for layer in 1..=t {
        m = layer_matrix(spec, layer, evolution).mul(&m);
    }
    m
}

/// Product state amplitudes built site by site by Kronecker extension;
/// block sites (1-based, inclusive) are forced to |0>.
pub fn product_state_reference(signs: &SignPattern, zero_sites: &[usize]) -> Vec<Complex64> {
    let r = 1.0 / 2f64.sqrt();
    let mut v = vec![ONE];
    for (i, sign) in signs.signs().iter().enumerate() {
        let site = i + 1;
        let local: [Complex64; 2] = if zero_sites.contains(&site) {
            [ONE, ZERO]
        } else {
            match sign {
                Sign::Plus => [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
                Sign::Minus => [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
            }
        };
        let mut next = vec![ZERO; v.len() * 2];
        for (j, old) in v.iter().enumerate() {
            next[j] = old * local[0];
            next[j + v.len()] = old * local[1];
        }
        v = next;
    }
    v
}

/// Reduced density matrix of the first `cut` sites: rho[i, i'] =
/// sum_j psi(i | j << cut) conj(psi(i' | j << cut)).
pub fn reduced_density(amps: &[Complex64], num_spins: usize, cut: usize) -> DMat {
    let rows = 1usize << cut;
    let cols = 1usize << (num_spins - cut);
    let mut rho = DMat::zeros(rows);
    for i in 0..rows {
        for i2 in 0..rows {
            let mut acc = ZERO;
            for j in 0..cols {
                acc += amps[i | (j << cut)] * amps[i2 | (j << cut)].conj();
            }
            rho.set(i, i2, acc);
        }
    }
    rho
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// descending. Each rotation is applied as a full similarity transform;
/// slow and simple on purpose.
pub fn jacobi_eigenvalues(h: &DMat) -> Vec<f64> {
    let n = h.n;
    let mut m = h.clone();
    let scale: f64 = m.a.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |q| *q != p).map(move |q| (p, q)))
            .map(|(p, q)| m.get(p, q).norm_sqr())
            .sum();
        if off.sqrt() < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let alpha = apq / r;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = B J with B = diag(1, conj(alpha)) and J the real
                // rotation; G' H G zeroes the (p, q) entry
                let mut g = DMat::identity(n);
                g.set(p, p, Complex64::new(c, 0.0));
                g.set(p, q, Complex64::new(s, 0.0));
                g.set(q, p, alpha.conj() * Complex64::new(-s, 0.0));
                g.set(q, q, alpha.conj() * Complex64::new(c, 0.0));
                m = g.dagger().mul(&m).mul(&g);
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eigs
}

/// Small standalone RNG (xorshift64*) for oracle-side randomness, kept
/// separate from the library's streams.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545f4914f6cdd1d)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn complex_gaussian(&mut self) -> Complex64 {
        Complex64::new(self.gaussian(), self.gaussian())
    }
}

/// Random normalized dense state.
pub fn random_state(rng: &mut TestRng, num_spins: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1usize << num_spins)
        .map(|_| rng.complex_gaussian())
        .collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
