//! Dense statevectors for even-length spin-1/2 chains.
//!
//! Conventions, fixed across the crate:
//! - sites are 1-based, left to right; site i maps to bit i-1 of the
//!   amplitude index, so site 1 is the least significant bit;
//! - bit value 0 is |0>, the sigma_z = +1 state;
//! - amplitudes are stored densely, one `Complex64` per basis index.

use crate::error::Error;
use crate::gate::ChargeGate;
use crate::Result;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::fmt;

/// Largest supported chain length (memory: 2^28 amplitudes = 4 GiB).
pub const MAX_SPINS: usize = 28;

/// Below this many amplitudes the serial kernels win; above it, gate
/// application and reductions split across the rayon pool.
const PAR_MIN_AMPS: usize = 1 << 17;

/// Fixed reduction chunk. Sums are computed per chunk and then combined in
/// chunk order, so results do not depend on thread scheduling.
const SUM_CHUNK: usize = 1 << 14;

/// Site basis sign of a sigma_x product state: |+> or |->.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// One sign per site; specifies a sigma_x-basis product state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignPattern(Vec<Sign>);

impl SignPattern {
    pub fn new(signs: Vec<Sign>) -> Self {
        SignPattern(signs)
    }

    /// Uniformly random signs, one per site.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        SignPattern(
            (0..len)
                .map(|_| {
                    if rng.random::<bool>() {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect(),
        )
    }

    /// Parses strings like "+-++". Rejects anything but '+' and '-'.
    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(Error::InvalidArgument(format!(
                    "sign pattern has '{other}'"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SignPattern)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    /// Bitmask over sites carrying a minus sign (site i -> bit i-1).
    pub fn minus_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Sign::Minus)
            .fold(0u64, |mask, (i, _)| mask | (1 << i))
    }

    /// Copy of self with the signs of sites `start..start+replacement.len()`
    /// (1-based `start`) replaced.
    pub fn with_replaced(&self, start: usize, replacement: &[Sign]) -> Result<Self> {
        if start == 0 || start + replacement.len() - 1 > self.0.len() {
            return Err(Error::InvalidArgument(format!(
                "replacement range {}..{} outside 1..={}",
                start,
                start + replacement.len() - 1,
                self.0.len()
            )));
        }
        let mut signs = self.0.clone();
        signs[start - 1..start - 1 + replacement.len()].copy_from_slice(replacement);
        Ok(SignPattern(signs))
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", if *s == Sign::Plus { '+' } else { '-' })?;
        }
        Ok(())
    }
}

/// Dense complex state of an even number of spins.
#[derive(Clone, Debug)]
pub struct Statevector {
    num_spins: usize,
    amps: Vec<Complex64>,
}

fn check_num_spins(num_spins: usize) -> Result<()> {
    if !(2..=MAX_SPINS).contains(&num_spins) || !num_spins.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "num_spins must be even and in 2..={MAX_SPINS}, got {num_spins}"
        )));
    }
    Ok(())
}

impl Statevector {
    /// |+/-> product state from a full sign pattern.
    pub fn product_x(signs: &SignPattern) -> Result<Self> {
        let num_spins = signs.len();
        check_num_spins(num_spins)?;
        let scale = 0.5f64.powi(num_spins as i32 / 2);
        let minus = signs.minus_mask();
        let amps = (0..1usize << num_spins)
            .map(|idx| {
                let flips = (idx as u64 & minus).count_ones();
                let sign = if flips.is_multiple_of(2) { 1.0 } else { -1.0 };
                Complex64::new(sign * scale, 0.0)
            })
            .collect();
        Ok(Statevector { num_spins, amps })
    }

    /// Product state equal to `product_x(signs)` outside the central block
    /// and |0> on the 2m sites n-m+1..=n+m. Its overlap with the unmodified
    /// product state has modulus exactly 2^-m.
    pub fn zero_block(signs: &SignPattern, m: usize) -> Result<Self> {
        let num_spins = signs.len();
        check_num_spins(num_spins)?;
        let n = num_spins / 2;
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!(
                "m must be in 1..={n}, got {m}"
            )));
        }
        // bits n-m .. n+m-1 must be zero
        let block: u64 = ((1u64 << (2 * m)) - 1) << (n - m);
        let minus = signs.minus_mask() & !block;
        let scale = 0.5f64.powi((num_spins as i32) / 2 - m as i32);
        let amps = (0..1usize << num_spins)
            .map(|idx| {
                if idx as u64 & block != 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let flips = (idx as u64 & minus).count_ones();
                    let sign = if flips.is_multiple_of(2) { 1.0 } else { -1.0 };
                    Complex64::new(sign * scale, 0.0)
                }
            })
            .collect();
        Ok(Statevector { num_spins, amps })
    }

    /// Computational basis state |index>.
    pub fn basis_state(num_spins: usize, index: usize) -> Result<Self> {
        check_num_spins(num_spins)?;
        let dim = 1usize << num_spins;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} >= {dim}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { num_spins, amps })
    }

    /// Takes ownership of raw amplitudes; length must be 2^num_spins.
    pub fn from_amplitudes(num_spins: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_num_spins(num_spins)?;
        if amps.len() != 1usize << num_spins {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                1usize << num_spins,
                amps.len()
            )));
        }
        Ok(Statevector { num_spins, amps })
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    /// n, the half-chain length.
    pub fn half(&self) -> usize {
        self.num_spins / 2
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn site_bit(&self, site: usize) -> Result<usize> {
        if site == 0 || site > self.num_spins {
            return Err(Error::InvalidArgument(format!(
                "site {site} outside 1..={}",
                self.num_spins
            )));
        }
        Ok(site - 1)
    }

    /// <self|other>, conjugate-linear in self.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.num_spins != other.num_spins {
            return Err(Error::InvalidArgument("inner product size mismatch".into()));
        }
        let dot = |(xs, ys): (&[Complex64], &[Complex64])| {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>()
        };
        if self.amps.len() < PAR_MIN_AMPS {
            return Ok(dot((&self.amps, &other.amps)));
        }
        let partials: Vec<Complex64> = self
            .amps
            .par_chunks(SUM_CHUNK)
            .zip(other.amps.par_chunks(SUM_CHUNK))
            .map(dot)
            .collect();
        Ok(partials.into_iter().sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        let ssq = |chunk: &[Complex64]| chunk.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if self.amps.len() < PAR_MIN_AMPS {
            return ssq(&self.amps);
        }
        let partials: Vec<f64> = self.amps.par_chunks(SUM_CHUNK).map(ssq).collect();
        partials.into_iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scale(&mut self, factor: Complex64) {
        if self.amps.len() < PAR_MIN_AMPS {
            for a in &mut self.amps {
                *a *= factor;
            }
        } else {
            self.amps.par_iter_mut().for_each(|a| *a *= factor);
        }
    }

    /// self - other, elementwise.
    pub fn difference(&self, other: &Statevector) -> Result<Statevector> {
        if self.num_spins != other.num_spins {
            return Err(Error::InvalidArgument("difference size mismatch".into()));
        }
        let amps = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Statevector {
            num_spins: self.num_spins,
            amps,
        })
    }

    /// Applies a two-site gate to sites (left_site, left_site+1), in place.
    ///
    /// The amplitude array splits into contiguous runs of 4 * 2^(left_site-1)
    /// entries; within each run the four quarters hold the |00>, |10>, |01>,
    /// |11> sectors of the bond, each quarter a full sweep of the lower bits.
    pub fn apply_gate(&mut self, gate: &ChargeGate, left_site: usize) -> Result<()> {
        if left_site == 0 || left_site >= self.num_spins {
            return Err(Error::InvalidArgument(format!(
                "left_site {left_site} outside 1..={}",
                self.num_spins - 1
            )));
        }
        let pl = left_site - 1;
        let quarter = 1usize << pl;
        let run = quarter * 4;
        let phase0 = gate.phase0();
        let phase1 = gate.phase1();
        let b = gate.block();

        let process = |chunk: &mut [Complex64]| {
            let (s00, rest) = chunk.split_at_mut(quarter);
            let (s10, rest) = rest.split_at_mut(quarter);
            let (s01, s11) = rest.split_at_mut(quarter);
            for i in 0..quarter {
                s00[i] *= phase0;
                let a01 = s01[i];
                let a10 = s10[i];
                s01[i] = b[0][0] * a01 + b[0][1] * a10;
                s10[i] = b[1][0] * a01 + b[1][1] * a10;
                s11[i] *= phase1;
            }
        };

        let n_runs = self.amps.len() / run;
        if self.amps.len() < PAR_MIN_AMPS {
            for chunk in self.amps.chunks_exact_mut(run) {
                process(chunk);
            }
        } else if n_runs >= 2 * rayon::current_num_threads() {
            self.amps.par_chunks_exact_mut(run).for_each(process);
        } else {
            // few large runs: parallelize inside each run instead
            for chunk in self.amps.chunks_exact_mut(run) {
                let (s00, rest) = chunk.split_at_mut(quarter);
                let (s10, rest) = rest.split_at_mut(quarter);
                let (s01, s11) = rest.split_at_mut(quarter);
                s00.par_iter_mut().for_each(|a| *a *= phase0);
                s11.par_iter_mut().for_each(|a| *a *= phase1);
                s01.par_iter_mut()
                    .zip(s10.par_iter_mut())
                    .for_each(|(a01, a10)| {
                        let x = *a01;
                        let y = *a10;
                        *a01 = b[0][0] * x + b[0][1] * y;
                        *a10 = b[1][0] * x + b[1][1] * y;
                    });
            }
        }
        Ok(())
    }

    fn zero_mask(&self, sites: &[usize]) -> Result<u64> {
        let mut mask = 0u64;
        for &site in sites {
            mask |= 1u64 << self.site_bit(site)?;
        }
        Ok(mask)
    }

    /// Weight remaining after projecting every listed site onto |0>.
    pub fn zero_weight(&self, sites: &[usize]) -> Result<f64> {
        let mask = self.zero_mask(sites)?;
        let ssq = |(offset, chunk): (usize, &[Complex64])| {
            chunk
                .iter()
                .enumerate()
                .filter(|(i, _)| (offset + i) as u64 & mask == 0)
                .map(|(_, a)| a.norm_sqr())
                .sum::<f64>()
        };
        if self.amps.len() < PAR_MIN_AMPS {
            return Ok(ssq((0, &self.amps)));
        }
        let partials: Vec<f64> = self
            .amps
            .par_chunks(SUM_CHUNK)
            .enumerate()
            .map(|(c, chunk)| ssq((c * SUM_CHUNK, chunk)))
            .collect();
        Ok(partials.into_iter().sum())
    }

    /// Projects every listed site onto |0>, returning the retained weight and
    /// the (unnormalized) projected state.
    pub fn project_zeros(&self, sites: &[usize]) -> Result<(f64, Statevector)> {
        let mask = self.zero_mask(sites)?;
        let mut projected = self.clone();
        for (idx, a) in projected.amps.iter_mut().enumerate() {
            if idx as u64 & mask != 0 {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let weight = projected.norm_sqr();
        Ok((weight, projected))
    }

    /// <sigma_z> at one site; +1 is |0>.
    pub fn sigma_z(&self, site: usize) -> Result<f64> {
        let bit = self.site_bit(site)?;
        let signed = |(offset, chunk): (usize, &[Complex64])| {
            chunk
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let w = a.norm_sqr();
                    if (offset + i) >> bit & 1 == 0 {
                        w
                    } else {
                        -w
                    }
                })
                .sum::<f64>()
        };
        if self.amps.len() < PAR_MIN_AMPS {
            return Ok(signed((0, &self.amps)));
        }
        let partials: Vec<f64> = self
            .amps
            .par_chunks(SUM_CHUNK)
            .enumerate()
            .map(|(c, chunk)| signed((c * SUM_CHUNK, chunk)))
            .collect();
        Ok(partials.into_iter().sum())
    }

    /// <sigma_z> at every site, one pass over the amplitudes.
    pub fn charge_profile(&self) -> Vec<f64> {
        let ns = self.num_spins;
        let accumulate = |(offset, chunk): (usize, &[Complex64])| {
            let mut acc = vec![0.0f64; ns];
            for (i, a) in chunk.iter().enumerate() {
                let w = a.norm_sqr();
                let idx = offset + i;
                for (bit, slot) in acc.iter_mut().enumerate() {
                    if idx >> bit & 1 == 0 {
                        *slot += w;
                    } else {
                        *slot -= w;
                    }
                }
            }
            acc
        };
        let total: Vec<f64> = if self.amps.len() < PAR_MIN_AMPS {
            accumulate((0, &self.amps))
        } else {
            let partials: Vec<Vec<f64>> = self
                .amps
                .par_chunks(SUM_CHUNK)
                .enumerate()
                .map(|(c, chunk)| accumulate((c * SUM_CHUNK, chunk)))
                .collect();
            partials
                .into_iter()
                .fold(vec![0.0f64; ns], |mut acc, part| {
                    for (a, p) in acc.iter_mut().zip(part) {
                        *a += p;
                    }
                    acc
                })
        };
        total
    }
}
