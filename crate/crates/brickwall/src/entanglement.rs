//! Schmidt spectra across site cuts and the entropy family computed from
//! them. Natural logarithms throughout.

use crate::error::Error;
use crate::state::Statevector;
use crate::Result;
use ndarray::Array2;
use ndarray_linalg::SVD;
use std::fmt;
use std::str::FromStr;

/// Schmidt coefficients below this fraction of the leading one are dropped;
/// their squared weight is kept in `truncated_weight`.
pub const COEFF_RELATIVE_CUTOFF: f64 = 1e-12;

/// Renyi order: a finite alpha (> 0, != 1) or the alpha -> infinity limit.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Infinity,
}

impl Alpha {
    /// Column label used in CSV headers: "2", "3", "inf", "2.5".
    pub fn label(&self) -> String {
        match self {
            Alpha::Infinity => "inf".to_string(),
            Alpha::Finite(a) => {
                if (a - a.round()).abs() < 1e-12 {
                    format!("{}", a.round() as i64)
                } else {
                    format!("{a}")
                }
            }
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "infinity" => Ok(Alpha::Infinity),
            other => other
                .parse::<f64>()
                .map(Alpha::Finite)
                .map_err(|_| Error::InvalidArgument(format!("bad alpha '{other}'"))),
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Schmidt coefficients of a state across the cut between sites `cut` and
/// `cut+1`, descending, with the squared weight of the truncated tail.
#[derive(Clone, Debug)]
pub struct EntanglementSpectrum {
    coefficients: Vec<f64>,
    cut: usize,
    truncated_weight: f64,
}

impl EntanglementSpectrum {
    /// Singular values of the amplitude matrix reshaped so that sites
    /// 1..=cut index rows. Works on any state; no renormalization applied.
    pub fn from_state(state: &Statevector, cut: usize) -> Result<Self> {
        if cut == 0 || cut >= state.num_spins() {
            return Err(Error::InvalidArgument(format!(
                "cut {cut} outside 1..={}",
                state.num_spins() - 1
            )));
        }
        let rows = 1usize << cut;
        let cols = 1usize << (state.num_spins() - cut);
        let amps = state.amplitudes();
        let matrix = Array2::from_shape_fn((rows, cols), |(i, j)| amps[i | (j << cut)]);
        let (_, values, _) = matrix
            .svd(false, false)
            .map_err(|e| Error::Backend(format!("svd: {e}")))?;
        Ok(Self::truncate(values.to_vec(), cut))
    }

    /// Builds a spectrum from raw coefficients (any order); used for
    /// synthetic spectra in tests and fitting checks.
    pub fn from_coefficients(mut coefficients: Vec<f64>, cut: usize) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument(
                "coefficients must be finite and nonnegative".into(),
            ));
        }
        coefficients.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self::truncate(coefficients, cut))
    }

    fn truncate(values: Vec<f64>, cut: usize) -> Self {
        let leading = values.first().copied().unwrap_or(0.0);
        let floor = leading * COEFF_RELATIVE_CUTOFF;
        let kept: Vec<f64> = values.iter().copied().take_while(|v| *v > floor).collect();
        let kept = if kept.is_empty() { vec![leading] } else { kept };
        let truncated_weight = values[kept.len()..].iter().map(|v| v * v).sum();
        EntanglementSpectrum {
            coefficients: kept,
            cut,
            truncated_weight,
        }
    }

    /// Kept coefficients, descending.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    /// Squared weight dropped by the relative cutoff.
    pub fn truncated_weight(&self) -> f64 {
        self.truncated_weight
    }

    /// Sum of squared coefficients plus the truncated tail; 1 for a
    /// normalized state up to roundoff.
    pub fn total_weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>() + self.truncated_weight
    }

    /// Largest coefficient.
    pub fn leading(&self) -> f64 {
        self.coefficients[0]
    }

    /// Renyi entropy of order alpha: ln(sum of (c^2)^alpha) / (1 - alpha).
    /// Requires alpha > 0 and alpha != 1.
    pub fn renyi(&self, alpha: f64) -> Result<f64> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
            return Err(Error::InvalidArgument(format!(
                "renyi order must be positive and not 1, got {alpha}"
            )));
        }
        let sum: f64 = self.coefficients.iter().map(|c| (c * c).powf(alpha)).sum();
        Ok(sum.ln() / (1.0 - alpha))
    }

    /// Von Neumann entropy, the alpha -> 1 limit.
    pub fn von_neumann(&self) -> f64 {
        -self
            .coefficients
            .iter()
            .map(|c| {
                let p = c * c;
                if p > 0.0 {
                    p * p.ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    }

    /// Min-entropy, the alpha -> infinity limit: -2 ln(leading coefficient).
    pub fn min_entropy(&self) -> f64 {
        -2.0 * self.coefficients[0].ln()
    }

    /// Entropy for a possibly infinite order.
    pub fn entropy(&self, alpha: Alpha) -> Result<f64> {
        match alpha {
            Alpha::Finite(a) => self.renyi(a),
            Alpha::Infinity => Ok(self.min_entropy()),
        }
    }

    /// Largest overlap achievable by a state of Schmidt rank at most d:
    /// the root of the leading d squared coefficients.
    pub fn rank_overlap(&self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        let mut sum: f64 = self.coefficients.iter().take(d).map(|c| c * c).sum();
        if d >= self.coefficients.len() {
            sum += self.truncated_weight;
        }
        Ok(sum.sqrt().min(1.0))
    }
}
