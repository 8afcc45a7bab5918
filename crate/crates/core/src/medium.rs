//! Physical parameters: the fluid and the oscillator array.

use std::fmt;

/// Fluid constants of the pipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    /// Sound speed `a` (m/s).
    pub a: f64,
    /// Equilibrium density `rho0` (kg/m^3).
    pub rho0: f64,
    /// Pipe cross-section area `S` (m^2).
    pub section: f64,
}

impl Medium {
    pub fn new(a: f64, rho0: f64, section: f64) -> Result<Self, ParamError> {
        check_positive("a", a)?;
        check_positive("rho0", rho0)?;
        check_positive("S", section)?;
        Ok(Medium { a, rho0, section })
    }

    /// Characteristic impedance `a * rho0`.
    pub fn impedance(&self) -> f64 {
        self.a * self.rho0
    }
}

/// Equilibrium positions, masses and spring constants of the thin walls.
///
/// The empty array (`n = 0`) is allowed; it makes the spectral machinery
/// degenerate to the free field (plane waves, `T = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorArray {
    positions: Vec<f64>,
    masses: Vec<f64>,
    stiffness: Vec<f64>,
}

impl OscillatorArray {
    pub fn new(
        positions: Vec<f64>,
        masses: Vec<f64>,
        stiffness: Vec<f64>,
    ) -> Result<Self, ParamError> {
        if positions.len() != masses.len() || positions.len() != stiffness.len() {
            return Err(ParamError::LengthMismatch {
                positions: positions.len(),
                masses: masses.len(),
                stiffness: stiffness.len(),
            });
        }
        for w in positions.windows(2) {
            if !(w[1] > w[0]) {
                return Err(ParamError::NotIncreasing { at: w[0] });
            }
        }
        for (j, &m) in masses.iter().enumerate() {
            check_positive_indexed("M", j, m)?;
        }
        for (j, &k) in stiffness.iter().enumerate() {
            check_positive_indexed("K", j, k)?;
        }
        Ok(OscillatorArray {
            positions,
            masses,
            stiffness,
        })
    }

    /// Single wall at `position`.
    pub fn single(position: f64, mass: f64, stiffness: f64) -> Result<Self, ParamError> {
        Self::new(vec![position], vec![mass], vec![stiffness])
    }

    pub fn empty() -> Self {
        OscillatorArray {
            positions: Vec::new(),
            masses: Vec::new(),
            stiffness: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    /// Natural frequency `omega_j = sqrt(K_j / M_j)` of wall `j`.
    pub fn natural_frequency(&self, j: usize) -> f64 {
        (self.stiffness[j] / self.masses[j]).sqrt()
    }

    /// Smallest gap between distinct wall positions; `None` when `n < 2`.
    pub fn min_gap(&self) -> Option<f64> {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc, g| Some(acc.map_or(g, |a: f64| a.min(g))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    NonPositive { name: String, value: f64 },
    LengthMismatch { positions: usize, masses: usize, stiffness: usize },
    NotIncreasing { at: f64 },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonPositive { name, value } => {
                write!(f, "parameter {name} must be positive, got {value}")
            }
            ParamError::LengthMismatch {
                positions,
                masses,
                stiffness,
            } => write!(
                f,
                "array lengths differ: {positions} positions, {masses} masses, {stiffness} stiffnesses"
            ),
            ParamError::NotIncreasing { at } => {
                write!(f, "wall positions must be strictly increasing near {at}")
            }
        }
    }
}

impl std::error::Error for ParamError {}

fn check_positive(name: &str, value: f64) -> Result<(), ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NonPositive {
            name: name.to_string(),
            value,
        })
    }
}

fn check_positive_indexed(name: &str, j: usize, value: f64) -> Result<(), ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NonPositive {
            name: format!("{name}[{j}]"),
            value,
        })
    }
}
