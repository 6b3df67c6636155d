//! Loschmidt echo, rate function and Trotter infidelity.
//!
//! The rate function uses the natural logarithm: `λ(t) = -ln L(t) / N`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{state_fidelity, StateVector};

/// Smallest echo value fed to the logarithm.
pub const RATE_FLOOR: f64 = 1e-300;

/// Cusp threshold relative to the median second-difference magnitude.
pub const CUSP_SHARPNESS: f64 = 10.0;

/// Second differences at or below this are rounding noise, never cusps.
pub const CUSP_NOISE_FLOOR: f64 = 1e-10;

/// Real series over a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    label: String,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        Ok(Self {
            times,
            values,
            label: label.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_t |self(t) - other(t)|` on a shared grid.
    pub fn max_abs_diff(&self, other: &TimeSeries) -> Result<f64> {
        if self.times != other.times {
            return Err(invalid("series are on different time grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Return probability `|<ψ0|ψt>|^2`.
pub fn loschmidt_echo(psi0: &StateVector, psit: &StateVector) -> Result<f64> {
    state_fidelity(psi0, psit)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate {
    pub value: f64,
    /// Set when the echo was at or below [`RATE_FLOOR`].
    pub clamped: bool,
}

/// `λ = -ln(L) / N`.
pub fn rate_function(echo: f64, sites: usize) -> Result<Rate> {
    if sites == 0 {
        return Err(invalid("rate function needs at least one site"));
    }
    if echo.is_nan() {
        return Err(invalid("Loschmidt echo is NaN"));
    }
    let clamped = echo <= RATE_FLOOR;
    let l = echo.clamp(RATE_FLOOR, 1.0);
    Ok(Rate {
        value: (-l.ln() / sites as f64).max(0.0),
        clamped,
    })
}

pub fn echo_series(
    label: &str,
    times: &[f64],
    psi0: &StateVector,
    states: &[StateVector],
) -> Result<TimeSeries> {
    let values = states
        .iter()
        .map(|s| loschmidt_echo(psi0, s))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(label, times.to_vec(), values)
}

pub fn rate_series(label: &str, echo: &TimeSeries, sites: usize) -> Result<TimeSeries> {
    let values = echo
        .values()
        .iter()
        .map(|&l| rate_function(l, sites).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(label, echo.times().to_vec(), values)
}

/// Pointwise `1 - |<exact|trotter>|^2`.
pub fn infidelity_series(
    times: &[f64],
    exact: &[StateVector],
    trotter: &[StateVector],
) -> Result<TimeSeries> {
    if exact.len() != trotter.len() || exact.len() != times.len() {
        return Err(invalid(format!(
            "snapshot grids differ: {} times, {} exact, {} trotter",
            times.len(),
            exact.len(),
            trotter.len()
        )));
    }
    let values = exact
        .iter()
        .zip(trotter)
        .map(|(a, b)| state_fidelity(a, b).map(|f| (1.0 - f).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new("infidelity", times.to_vec(), values)
}

/// Indices of sharp local maxima: points that are local maxima and whose
/// discrete second difference exceeds [`CUSP_SHARPNESS`] times the median
/// second-difference magnitude of the series (and exceeds
/// [`CUSP_NOISE_FLOOR`]).
pub fn detect_cusps(series: &TimeSeries) -> Vec<usize> {
    let v = series.values();
    if v.len() < 3 {
        return Vec::new();
    }
    let second: Vec<f64> = v
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .collect();
    let mut sorted = second.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    (1..v.len() - 1)
        .filter(|&i| v[i] >= v[i - 1] && v[i] >= v[i + 1])
        .filter(|&i| second[i - 1] > CUSP_SHARPNESS * median && second[i - 1] > CUSP_NOISE_FLOOR)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::model::{build_hamiltonian, Boundary, ExactEvolution, PottsParams};

    #[test]
    fn echo_examples() {
        let psi0 = StateVector::all_zero(3, 2).unwrap();
        assert_eq!(loschmidt_echo(&psi0, &psi0).unwrap(), 1.0);
        let other = StateVector::basis(3, &[0, 1]).unwrap();
        assert_eq!(loschmidt_echo(&psi0, &other).unwrap(), 0.0);
        let mismatched = StateVector::all_zero(3, 3).unwrap();
        assert!(loschmidt_echo(&psi0, &mismatched).is_err());
    }

    #[test]
    fn echo_of_two_free_mixers() {
        // J = 0: each site evolves under exp(igt σx), so L = cos^4(gt)
        let g = 1.0;
        let p = PottsParams::new(2, 2, 0.0, g, Boundary::Open).unwrap();
        let evo = ExactEvolution::new(&build_hamiltonian(&p).unwrap()).unwrap();
        let psi0 = StateVector::all_zero(2, 2).unwrap();
        for i in 0..40 {
            let t = 0.1 * i as f64;
            let l = loschmidt_echo(&psi0, &evo.evolve(&psi0, t).unwrap()).unwrap();
            assert!((l - (g * t).cos().powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_function(1.0, 6).unwrap().value, 0.0);
        assert!((rate_function((-6.0f64).exp(), 6).unwrap().value - 1.0).abs() < 1e-15);
        let floor = rate_function(0.0, 2).unwrap();
        assert!(floor.clamped);
        assert!((floor.value - (-(RATE_FLOOR.ln()) / 2.0)).abs() < 1e-12);
        assert!(rate_function(0.5, 0).is_err());
        assert!(rate_function(f64::NAN, 1).is_err());
        // rounding slightly above 1 still gives λ = 0
        assert_eq!(rate_function(1.0 + 1e-15, 3).unwrap().value, 0.0);
    }

    #[test]
    fn rate_ignores_global_phase() {
        let psi0 = StateVector::product(&[
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.5, 0.5), C64::new(-0.2, 0.0)],
        ])
        .unwrap();
        let psit = StateVector::basis(3, &[1, 1]).unwrap();
        let l = loschmidt_echo(&psi0, &psit).unwrap();
        let l_phase = loschmidt_echo(
            &psi0.clone().with_global_phase(0.9),
            &psit.with_global_phase(-2.1),
        )
        .unwrap();
        assert!((l - l_phase).abs() < 1e-15);
    }

    #[test]
    fn infidelity_of_identical_series_is_zero() {
        let states = vec![StateVector::all_zero(2, 2).unwrap(); 3];
        let s = infidelity_series(&[0.0, 0.1, 0.2], &states, &states).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        assert!(infidelity_series(&[0.0, 0.1], &states, &states).is_err());
    }

    #[test]
    fn time_series_validation() {
        assert!(TimeSeries::new("x", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new("x", vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn cusp_detector_finds_kink_not_smooth_peak() {
        let times: Vec<f64> = (0..401).map(|i| i as f64 * 0.01).collect();
        let smooth: Vec<f64> = times.iter().map(|t| (t * 1.3).sin()).collect();
        let s = TimeSeries::new("smooth", times.clone(), smooth).unwrap();
        assert!(detect_cusps(&s).is_empty());

        let kinked: Vec<f64> = times
            .iter()
            .map(|t| 1.0 - (t - 2.005).abs() + 0.1 * (t * 1.3).sin())
            .collect();
        let k = TimeSeries::new("kinked", times.clone(), kinked).unwrap();
        let cusps = detect_cusps(&k);
        assert_eq!(cusps.len(), 1);
        assert!((times[cusps[0]] - 2.0).abs() < 0.02);
    }

    #[test]
    fn flat_noise_has_no_cusps() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let noise: Vec<f64> = (0..50)
            .map(|i| if i % 7 == 3 { 2e-16 } else { 0.0 })
            .collect();
        assert!(detect_cusps(&TimeSeries::new("flat", times, noise).unwrap()).is_empty());
    }
}
