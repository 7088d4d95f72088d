//! Charge transport diagnostics: weight leakage out of the projected cut
//! block, and domain-wall spreading.

use crate::circuit::{CircuitSpec, Evolution};
use crate::error::Error;
use crate::fit::fit_line;
use crate::state::{SignPattern, Statevector};
use crate::Result;

/// Leakage entries outside this band are excluded from fits: saturated
/// points carry no exponent information, tiny ones only roundoff.
pub const LEAKAGE_FIT_MAX: f64 = 0.5;
pub const LEAKAGE_FIT_MIN: f64 = 1e-8;

/// Collapse scan grid for the dynamical exponent.
pub const COLLAPSE_Z_GRID: (f64, f64, f64) = (0.10, 0.90, 0.05);

const MIN_FIT_POINTS: usize = 8;

/// One measured leakage value: the norm lost by projecting the two cut
/// sites onto |00> after evolving the zero-block state to time t.
#[derive(Clone, Debug)]
pub struct LeakagePoint {
    pub m: usize,
    pub t: usize,
    pub leakage: f64,
}

#[derive(Clone, Debug)]
pub struct LeakageCurve {
    pub num_spins: usize,
    pub entries: Vec<LeakagePoint>,
}

impl LeakageCurve {
    /// Pointwise arithmetic mean over curves with identical (m, t) grids.
    pub fn average(curves: &[LeakageCurve]) -> Result<LeakageCurve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InvalidArgument("no curves to average".into()))?;
        let mut entries: Vec<LeakagePoint> = first
            .entries
            .iter()
            .map(|e| LeakagePoint {
                m: e.m,
                t: e.t,
                leakage: 0.0,
            })
            .collect();
        for curve in curves {
            if curve.entries.len() != entries.len() || curve.num_spins != first.num_spins {
                return Err(Error::InvalidArgument("leakage grids differ".into()));
            }
            for (acc, e) in entries.iter_mut().zip(&curve.entries) {
                if acc.m != e.m || acc.t != e.t {
                    return Err(Error::InvalidArgument("leakage grids differ".into()));
                }
                acc.leakage += e.leakage;
            }
        }
        for acc in entries.iter_mut() {
            acc.leakage /= curves.len() as f64;
        }
        Ok(LeakageCurve {
            num_spins: first.num_spins,
            entries,
        })
    }
}

fn check_ascending(values: &[usize], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} is empty")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "{what} must be strictly ascending"
        )));
    }
    Ok(())
}

/// Evolves the zero-block state for each m and records
/// ||(1 - P) U(t,0) psi0(m)|| at each requested t, where P projects the two
/// cut sites onto |00>. t_values must be ascending; t = 0 is allowed and
/// always measures zero.
pub fn measure_leakage(
    spec: &CircuitSpec,
    signs: &SignPattern,
    m_values: &[usize],
    t_values: &[usize],
) -> Result<LeakageCurve> {
    check_ascending(m_values, "m_values")?;
    check_ascending(t_values, "t_values")?;
    let n = spec.half();
    if *m_values.last().unwrap() > n {
        return Err(Error::InvalidArgument(format!("m exceeds half chain {n}")));
    }
    if *t_values.last().unwrap() > spec.depth() {
        return Err(Error::InvalidArgument("t exceeds circuit depth".into()));
    }
    let cut_sites = [n, n + 1];
    let mut entries = Vec::with_capacity(m_values.len() * t_values.len());
    for &m in m_values {
        let mut state = Statevector::zero_block(signs, m)?;
        let mut now = 0usize;
        for &t in t_values {
            spec.evolve(&mut state, now, t, Evolution::Unitary)?;
            now = t;
            let retained = state.zero_weight(&cut_sites)?;
            let leakage = (state.norm_sqr() - retained).max(0.0).sqrt();
            entries.push(LeakagePoint { m, t, leakage });
        }
    }
    Ok(LeakageCurve {
        num_spins: spec.num_spins(),
        entries,
    })
}

/// Diffusive fit of a leakage curve.
#[derive(Clone, Debug)]
pub struct TransportFit {
    /// Slope c of ln(leakage) against -m^2/t.
    pub diffusion_constant: f64,
    /// Intercept of that line (ln of the prefactor).
    pub intercept: f64,
    /// Best-collapse dynamical exponent from the z scan.
    pub exponent_z: f64,
    /// (z, residual sse) over the scanned grid.
    pub collapse_scan: Vec<(f64, f64)>,
    pub n_points: usize,
    /// (m, t) ranges of the points that survived the leakage window.
    pub window: ((usize, usize), (usize, usize)),
}

/// Fits the diffusive form exp(-c m^2 / t) and scans for the dynamical
/// exponent z that best collapses ln(-ln leakage) against ln(m / t^z).
/// Needs at least 8 points inside the leakage window.
pub fn fit_diffusive_leakage(curve: &LeakageCurve) -> Result<TransportFit> {
    let kept: Vec<&LeakagePoint> = curve
        .entries
        .iter()
        .filter(|e| e.t > 0 && e.leakage > LEAKAGE_FIT_MIN && e.leakage < LEAKAGE_FIT_MAX)
        .collect();
    if kept.len() < MIN_FIT_POINTS {
        return Err(Error::FitUnavailable(format!(
            "{} usable leakage points, need {MIN_FIT_POINTS}",
            kept.len()
        )));
    }
    let diff_points: Vec<(f64, f64)> = kept
        .iter()
        .map(|e| (-(e.m as f64).powi(2) / e.t as f64, e.leakage.ln()))
        .collect();
    let diff_line = fit_line(&diff_points)
        .ok_or_else(|| Error::FitUnavailable("degenerate m^2/t spread".into()))?;

    let (z_lo, z_hi, z_step) = COLLAPSE_Z_GRID;
    let mut collapse_scan = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut z = z_lo;
    while z <= z_hi + 1e-9 {
        let pts: Vec<(f64, f64)> = kept
            .iter()
            .map(|e| {
                let x = (e.m as f64 / (e.t as f64).powf(z)).ln();
                let y = (-e.leakage.ln()).ln();
                (x, y)
            })
            .collect();
        if let Some(line) = fit_line(&pts) {
            collapse_scan.push((z, line.sse));
            if best.is_none_or(|(_, sse)| line.sse < sse) {
                best = Some((z, line.sse));
            }
        }
        z += z_step;
    }
    let (exponent_z, _) =
        best.ok_or_else(|| Error::FitUnavailable("collapse scan degenerate".into()))?;

    let m_range = (
        kept.iter().map(|e| e.m).min().unwrap(),
        kept.iter().map(|e| e.m).max().unwrap(),
    );
    let t_range = (
        kept.iter().map(|e| e.t).min().unwrap(),
        kept.iter().map(|e| e.t).max().unwrap(),
    );
    Ok(TransportFit {
        diffusion_constant: diff_line.slope,
        intercept: diff_line.intercept,
        exponent_z,
        collapse_scan,
        n_points: kept.len(),
        window: (m_range, t_range),
    })
}

/// |1...1 0...0>: every site in the left half carries charge (sigma_z = -1).
pub fn domain_wall_state(num_spins: usize) -> Result<Statevector> {
    let n = num_spins / 2;
    Statevector::basis_state(num_spins, (1usize << n) - 1)
}

/// One spreading measurement. For the diffusive melt profile
/// n(x) = erfc(x/s)/2 the total displaced charge is T = s/sqrt(pi), so the
/// spreading kernel's variance s^2/2 equals pi T^2 / 2; that is what
/// `variance` reports. T is read off the profile directly and stays
/// faithful until full equilibration, unlike a raw second moment, which
/// is biased low as soon as the front touches the chain ends.
#[derive(Clone, Debug)]
pub struct SpreadPoint {
    pub t: usize,
    pub variance: f64,
    pub transferred: f64,
}

/// Evolves the domain wall and measures charge spreading at each requested
/// time. t_values must be ascending.
pub fn domain_wall_spread(spec: &CircuitSpec, t_values: &[usize]) -> Result<Vec<SpreadPoint>> {
    check_ascending(t_values, "t_values")?;
    if *t_values.last().unwrap() > spec.depth() {
        return Err(Error::InvalidArgument("t exceeds circuit depth".into()));
    }
    let mut state = domain_wall_state(spec.num_spins())?;
    let initial = state.charge_profile();
    let mut out = Vec::with_capacity(t_values.len());
    let mut now = 0usize;
    for &t in t_values {
        spec.evolve(&mut state, now, t, Evolution::Unitary)?;
        now = t;
        let profile = state.charge_profile();
        let total: f64 = profile
            .iter()
            .zip(&initial)
            .map(|(p, p0)| ((p - p0) / 2.0).abs())
            .sum();
        let variance = 0.5 * std::f64::consts::PI * total * total;
        out.push(SpreadPoint {
            t,
            variance,
            transferred: total,
        });
    }
    Ok(out)
}
