//! Brick-wall circuits of keyed Haar gates. Within layer t the odd bonds
//! (1,2), (3,4), ... act first, then the even bonds (2,3), (4,5), ....
//! Gates are sampled on demand from (master_seed, layer, bond), so any two
//! circuit variants sharing a seed see identical gates.

use crate::error::Error;
use crate::gate::ChargeGate;
use crate::rng::{stream, StreamDomain};
use crate::state::Statevector;
use crate::Result;
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// How to apply a layer across the middle cut.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Evolution {
    /// Every gate applied as sampled.
    Unitary,
    /// The gate on the cut bond (n, n+1) is replaced by its |00> matrix
    /// element, a global phase. This variant never entangles the two
    /// halves, and agrees with `Unitary` on states whose cut sites are |00>
    /// at the instant the cut gate acts.
    CutReplaced,
}

/// Half of a brick-wall layer. Odd acts first.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Sublayer {
    Odd,
    Even,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum GateSource {
    Haar,
    Identity,
}

/// A fixed-depth brick-wall circuit on an even number of spins.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    num_spins: usize,
    depth: usize,
    master_seed: u64,
    source: GateSource,
}

impl CircuitSpec {
    pub fn new(num_spins: usize, depth: usize, master_seed: u64) -> Result<Self> {
        Self::build(num_spins, depth, master_seed, GateSource::Haar)
    }

    /// All-identity gates; a test hook that keeps the layer structure.
    pub fn identity(num_spins: usize, depth: usize) -> Result<Self> {
        Self::build(num_spins, depth, 0, GateSource::Identity)
    }

    fn build(num_spins: usize, depth: usize, master_seed: u64, source: GateSource) -> Result<Self> {
        if num_spins < 2 || !num_spins.is_multiple_of(2) || num_spins > crate::state::MAX_SPINS {
            return Err(Error::InvalidArgument(format!(
                "num_spins must be even and in 2..={}, got {num_spins}",
                crate::state::MAX_SPINS
            )));
        }
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        Ok(CircuitSpec {
            num_spins,
            depth,
            master_seed,
            source,
        })
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// n, the half-chain length.
    pub fn half(&self) -> usize {
        self.num_spins / 2
    }

    /// Left site of the bond crossing the middle cut.
    pub fn cut_bond(&self) -> usize {
        self.num_spins / 2
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer == 0 || layer > self.depth {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} outside 1..={}",
                self.depth
            )));
        }
        Ok(())
    }

    /// The gate applied at (layer, bond), sampled deterministically.
    /// `bond` is the 1-based left site, 1..=num_spins-1.
    pub fn gate(&self, layer: usize, bond: usize) -> Result<ChargeGate> {
        self.check_layer(layer)?;
        if bond == 0 || bond >= self.num_spins {
            return Err(Error::InvalidArgument(format!(
                "bond {bond} outside 1..={}",
                self.num_spins - 1
            )));
        }
        Ok(match self.source {
            GateSource::Identity => ChargeGate::identity(),
            GateSource::Haar => {
                let index = (layer as u64) << 16 | bond as u64;
                ChargeGate::haar(&mut stream(self.master_seed, StreamDomain::Gate, index))
            }
        })
    }

    fn odd_bonds(&self) -> impl Iterator<Item = usize> {
        (1..self.num_spins).step_by(2)
    }

    fn even_bonds(&self) -> impl Iterator<Item = usize> {
        (2..self.num_spins - 1).step_by(2)
    }

    /// True when the cut bond sits in the even sublayer (n even), so the
    /// odd sublayer touches the cut sites before the cut gate acts.
    pub fn cut_in_even_sublayer(&self) -> bool {
        self.cut_bond().is_multiple_of(2)
    }

    /// Applies layer `layer` in place: odd sublayer, then even sublayer.
    pub fn apply_layer(&self, state: &mut Statevector, layer: usize) -> Result<()> {
        self.apply_layer_variant(state, layer, Evolution::Unitary)
    }

    /// Applies half of layer `layer`.
    pub fn apply_sublayer(
        &self,
        state: &mut Statevector,
        layer: usize,
        sublayer: Sublayer,
    ) -> Result<()> {
        self.apply_sublayer_variant(state, layer, sublayer, Evolution::Unitary)
    }

    fn apply_sublayer_variant(
        &self,
        state: &mut Statevector,
        layer: usize,
        sublayer: Sublayer,
        evolution: Evolution,
    ) -> Result<()> {
        self.check_state(state)?;
        self.check_layer(layer)?;
        let cut = self.cut_bond();
        let bonds: Vec<usize> = match sublayer {
            Sublayer::Odd => self.odd_bonds().collect(),
            Sublayer::Even => self.even_bonds().collect(),
        };
        for bond in bonds {
            let gate = self.gate(layer, bond)?;
            if evolution == Evolution::CutReplaced && bond == cut {
                state.scale(gate.phase0());
            } else {
                state.apply_gate(&gate, bond)?;
            }
        }
        Ok(())
    }

    /// Applies layer `layer` with the chosen cut treatment.
    pub fn apply_layer_variant(
        &self,
        state: &mut Statevector,
        layer: usize,
        evolution: Evolution,
    ) -> Result<()> {
        self.apply_sublayer_variant(state, layer, Sublayer::Odd, evolution)?;
        self.apply_sublayer_variant(state, layer, Sublayer::Even, evolution)
    }

    /// Applies layer `layer` unitarily and returns the cut leakage
    /// ||(1 - P) psi|| measured at the instant the cut gate acts, where P
    /// projects the two cut sites onto |00>. For an odd cut bond that
    /// instant is the start of the layer (the preceding odd gates are
    /// disjoint from the cut sites); for an even cut bond it is between
    /// the sublayers.
    pub fn apply_layer_with_cut_leakage(
        &self,
        state: &mut Statevector,
        layer: usize,
    ) -> Result<f64> {
        let cut_sites = [self.half(), self.half() + 1];
        let leak = |s: &Statevector| -> Result<f64> {
            Ok((s.norm_sqr() - s.zero_weight(&cut_sites)?).max(0.0).sqrt())
        };
        if self.cut_in_even_sublayer() {
            self.apply_sublayer_variant(state, layer, Sublayer::Odd, Evolution::Unitary)?;
            let leakage = leak(state)?;
            self.apply_sublayer_variant(state, layer, Sublayer::Even, Evolution::Unitary)?;
            Ok(leakage)
        } else {
            let leakage = leak(state)?;
            self.apply_layer_variant(state, layer, Evolution::Unitary)?;
            Ok(leakage)
        }
    }

    /// Applies the inverse of layer `layer`: daggered even sublayer, then
    /// daggered odd sublayer.
    pub fn apply_layer_inverse(&self, state: &mut Statevector, layer: usize) -> Result<()> {
        self.check_state(state)?;
        self.check_layer(layer)?;
        let even: Vec<usize> = self.even_bonds().collect();
        let odd: Vec<usize> = self.odd_bonds().collect();
        for &bond in even.iter().chain(odd.iter()) {
            state.apply_gate(&self.gate(layer, bond)?.dagger(), bond)?;
        }
        Ok(())
    }

    /// Evolves from time `from_t` to `to_t` by applying layers
    /// from_t+1 ..= to_t.
    pub fn evolve(
        &self,
        state: &mut Statevector,
        from_t: usize,
        to_t: usize,
        evolution: Evolution,
    ) -> Result<()> {
        if from_t > to_t || to_t > self.depth {
            return Err(Error::InvalidArgument(format!(
                "evolution range {from_t}..{to_t} outside 0..={}",
                self.depth
            )));
        }
        for layer in from_t + 1..=to_t {
            self.apply_layer_variant(state, layer, evolution)?;
        }
        Ok(())
    }

    fn check_state(&self, state: &Statevector) -> Result<()> {
        if state.num_spins() != self.num_spins {
            return Err(Error::InvalidArgument(format!(
                "state has {} spins, circuit {}",
                state.num_spins(),
                self.num_spins
            )));
        }
        Ok(())
    }

    /// Writes every gate as one line of the 14-column table:
    /// layer,bond,phase0_re,phase0_im,b00_re,b00_im,b01_re,b01_im,
    /// b10_re,b10_im,b11_re,b11_im,phase1_re,phase1_im.
    /// Floats use the shortest round-trip decimal form.
    pub fn write_gate_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "layer,bond,phase0_re,phase0_im,b00_re,b00_im,b01_re,b01_im,b10_re,b10_im,b11_re,b11_im,phase1_re,phase1_im"
        )?;
        for layer in 1..=self.depth {
            for bond in self.odd_bonds().chain(self.even_bonds()) {
                let g = self.gate(layer, bond)?;
                let b = g.block();
                writeln!(
                    out,
                    "{layer},{bond},{},{},{},{},{},{},{},{},{},{},{},{}",
                    g.phase0().re,
                    g.phase0().im,
                    b[0][0].re,
                    b[0][0].im,
                    b[0][1].re,
                    b[0][1].im,
                    b[1][0].re,
                    b[1][0].im,
                    b[1][1].re,
                    b[1][1].im,
                    g.phase1().re,
                    g.phase1().im,
                )?;
            }
        }
        Ok(())
    }
}

/// Reads a gate table written by `write_gate_table`; round-trip exact.
pub fn read_gate_table<R: BufRead>(input: R) -> Result<Vec<(usize, usize, ChargeGate)>> {
    let mut rows = Vec::new();
    for (line_no, line) in input.lines().enumerate() {
        let line = line?;
        if line_no == 0 {
            if !line.starts_with("layer,bond,") {
                return Err(Error::InvalidArgument("gate table header missing".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(Error::InvalidArgument(format!(
                "gate table line {} has {} fields, expected 14",
                line_no + 1,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            Error::InvalidArgument(format!("gate table line {}: bad {what}", line_no + 1))
        };
        let layer: usize = fields[0].parse().map_err(|_| bad("layer"))?;
        let bond: usize = fields[1].parse().map_err(|_| bad("bond"))?;
        let mut vals = [0.0f64; 12];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = fields[i + 2].parse().map_err(|_| bad("float"))?;
        }
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let gate = ChargeGate::new(
            c(vals[0], vals[1]),
            [
                [c(vals[2], vals[3]), c(vals[4], vals[5])],
                [c(vals[6], vals[7]), c(vals[8], vals[9])],
            ],
            c(vals[10], vals[11]),
        )?;
        rows.push((layer, bond, gate));
    }
    Ok(rows)
}
