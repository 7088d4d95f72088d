//! Two-site gates that commute with total sigma_z: a phase on |00>, a
//! U(2) block on span{|01>, |10>}, and a phase on |11>.

use crate::error::Error;
use crate::Result;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

const UNITARITY_TOL: f64 = 1e-12;

/// Block-diagonal two-site unitary. `block[r][c]` acts on the ordered basis
/// (|01>, |10>), where |ab> puts a on the left site and b on the right one.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeGate {
    phase0: Complex64,
    block: [[Complex64; 2]; 2],
    phase1: Complex64,
}

impl ChargeGate {
    /// Validates unit-modulus phases and block unitarity to 1e-12.
    pub fn new(phase0: Complex64, block: [[Complex64; 2]; 2], phase1: Complex64) -> Result<Self> {
        for (name, p) in [("phase0", phase0), ("phase1", phase1)] {
            if (p.norm() - 1.0).abs() > UNITARITY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "{name} modulus {} is not 1",
                    p.norm()
                )));
            }
        }
        // columns orthonormal
        let c0 = (block[0][0], block[1][0]);
        let c1 = (block[0][1], block[1][1]);
        let n0 = (c0.0.norm_sqr() + c0.1.norm_sqr() - 1.0).abs();
        let n1 = (c1.0.norm_sqr() + c1.1.norm_sqr() - 1.0).abs();
        let cross = (c0.0.conj() * c1.0 + c0.1.conj() * c1.1).norm();
        if n0 > UNITARITY_TOL || n1 > UNITARITY_TOL || cross > UNITARITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "block is not unitary (column norms off by {n0:.2e}, {n1:.2e}, cross {cross:.2e})"
            )));
        }
        Ok(ChargeGate {
            phase0,
            block,
            phase1,
        })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ChargeGate {
            phase0: one,
            block: [[one, zero], [zero, one]],
            phase1: one,
        }
    }

    /// Haar-random gate: phases uniform on the unit circle, block exactly
    /// Haar on U(2) via Gram-Schmidt of a complex Ginibre matrix with
    /// positive-real diagonal normalization.
    ///
    /// Draw order is fixed (phase0, four column-major Gaussian pairs,
    /// phase1), so a given stream always yields the same gate.
    pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let phase0 = unit_phase(rng);
        let block = loop {
            let g: Vec<Complex64> = (0..4)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect();
            // columns (g0,g1) and (g2,g3)
            let n1 = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
            if n1 < 1e-150 {
                continue;
            }
            let q1 = (g[0] / n1, g[1] / n1);
            let proj = q1.0.conj() * g[2] + q1.1.conj() * g[3];
            let w = (g[2] - proj * q1.0, g[3] - proj * q1.1);
            let n2 = (w.0.norm_sqr() + w.1.norm_sqr()).sqrt();
            if n2 < 1e-150 {
                continue;
            }
            break [[q1.0, w.0 / n2], [q1.1, w.1 / n2]];
        };
        let phase1 = unit_phase(rng);
        ChargeGate {
            phase0,
            block,
            phase1,
        }
    }

    pub fn phase0(&self) -> Complex64 {
        self.phase0
    }

    pub fn phase1(&self) -> Complex64 {
        self.phase1
    }

    pub fn block(&self) -> &[[Complex64; 2]; 2] {
        &self.block
    }

    /// Hermitian adjoint; composing with the original gives the identity.
    pub fn dagger(&self) -> Self {
        ChargeGate {
            phase0: self.phase0.conj(),
            block: [
                [self.block[0][0].conj(), self.block[1][0].conj()],
                [self.block[0][1].conj(), self.block[1][1].conj()],
            ],
            phase1: self.phase1.conj(),
        }
    }
}

fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let theta = rng.random::<f64>() * TAU;
    Complex64::new(theta.cos(), theta.sin())
}
