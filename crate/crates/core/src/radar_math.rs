//! Analytic FMCW link formulas: IF frequency, range resolution, Doppler
//! velocity, angle of arrival and multi-radar interference probability.
//!
//! The default chirp profile (77 GHz carrier, 4 GHz over 57 us) is
//! illustrative; deployed profiles are not fixed by the hardware.

use std::f64::consts::PI;

use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadarMathError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("phase difference {0} rad is outside the unambiguous range [-pi, pi]")]
    Ambiguity(f64),
}

/// Chirp profile. `bandwidth == slope * chirp_duration` is kept by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpParams {
    /// Chirp slope, Hz/s.
    pub slope: f64,
    /// Swept bandwidth, Hz.
    pub bandwidth: f64,
    /// Chirp duration, s.
    pub chirp_duration: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Receive antenna spacing, m.
    pub rx_spacing: f64,
}

impl ChirpParams {
    /// Build from slope and duration; antenna spacing defaults to half a wavelength.
    pub fn new(slope: f64, chirp_duration: f64, wavelength: f64) -> Result<Self, RadarMathError> {
        Self::with_spacing(slope, chirp_duration, wavelength, wavelength / 2.0)
    }

    pub fn with_spacing(
        slope: f64,
        chirp_duration: f64,
        wavelength: f64,
        rx_spacing: f64,
    ) -> Result<Self, RadarMathError> {
        if !(wavelength > 0.0) || !(rx_spacing > 0.0) {
            return Err(RadarMathError::Domain(
                "wavelength and rx spacing must be positive".into(),
            ));
        }
        if !(chirp_duration > 0.0) || !slope.is_finite() {
            return Err(RadarMathError::Domain(
                "chirp duration must be positive and slope finite".into(),
            ));
        }
        Ok(Self {
            slope,
            bandwidth: slope * chirp_duration,
            chirp_duration,
            wavelength,
            rx_spacing,
        })
    }

    /// Build from bandwidth and duration (slope derived).
    pub fn from_bandwidth(
        bandwidth: f64,
        chirp_duration: f64,
        wavelength: f64,
    ) -> Result<Self, RadarMathError> {
        if !(chirp_duration > 0.0) {
            return Err(RadarMathError::Domain(
                "chirp duration must be positive".into(),
            ));
        }
        Self::new(bandwidth / chirp_duration, chirp_duration, wavelength)
    }
}

impl Default for ChirpParams {
    /// 4 GHz sweep over 57 us at 77 GHz (slope ~70 MHz/us).
    fn default() -> Self {
        Self::from_bandwidth(4.0e9, 57.0e-6, SPEED_OF_LIGHT / 77.0e9).expect("valid default chirp")
    }
}

/// Beat frequency of a target at distance `d`: S * 2d / c.
pub fn if_frequency_for_distance(params: &ChirpParams, d: f64) -> Result<f64, RadarMathError> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(RadarMathError::Domain(format!(
            "distance must be a non-negative number, got {d}"
        )));
    }
    Ok(params.slope * 2.0 * d / SPEED_OF_LIGHT)
}

/// Inverse of [`if_frequency_for_distance`]: f * c / (2S).
pub fn distance_for_if_frequency(params: &ChirpParams, f_if: f64) -> Result<f64, RadarMathError> {
    if !(f_if >= 0.0) || !f_if.is_finite() {
        return Err(RadarMathError::Domain(format!(
            "IF frequency must be non-negative, got {f_if}"
        )));
    }
    if params.slope <= 0.0 {
        return Err(RadarMathError::Domain("slope must be positive".into()));
    }
    Ok(f_if * SPEED_OF_LIGHT / (2.0 * params.slope))
}

/// c / (2B).
pub fn range_resolution(params: &ChirpParams) -> Result<f64, RadarMathError> {
    range_resolution_for_bandwidth(params.bandwidth)
}

pub fn range_resolution_for_bandwidth(bandwidth: f64) -> Result<f64, RadarMathError> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(RadarMathError::Domain(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth))
}

/// lambda * dphi / (4 pi Tc).
pub fn velocity_from_phase(params: &ChirpParams, phase_diff: f64) -> Result<f64, RadarMathError> {
    if !(phase_diff.abs() <= PI) {
        return Err(RadarMathError::Ambiguity(phase_diff));
    }
    Ok(params.wavelength * phase_diff / (4.0 * PI * params.chirp_duration))
}

/// asin(lambda * dphi / (2 pi l)), radians.
pub fn aoa_from_phase(params: &ChirpParams, phase_diff: f64) -> Result<f64, RadarMathError> {
    let arg = params.wavelength * phase_diff / (2.0 * PI * params.rx_spacing);
    if !(arg.abs() <= 1.0) {
        return Err(RadarMathError::Domain(format!(
            "asin argument {arg} outside [-1, 1]"
        )));
    }
    Ok(arg.asin())
}

/// Probability that at least two of `n_radars` randomly started radars fall
/// within `b_inter` of each other inside `b_total`:
/// 1 - prod_{i=1..N} (B_total - B_inter (i-1)) / B_total.
pub fn interference_probability(
    n_radars: u32,
    b_total: f64,
    b_inter: f64,
) -> Result<f64, RadarMathError> {
    if n_radars == 0 {
        return Err(RadarMathError::Domain("need at least one radar".into()));
    }
    if !(b_total > 0.0) || !(b_inter >= 0.0) {
        return Err(RadarMathError::Domain("bandwidths must be positive".into()));
    }
    if b_inter * f64::from(n_radars - 1) >= b_total {
        return Err(RadarMathError::Domain(
            "interference bands exhaust the total bandwidth".into(),
        ));
    }
    let free: f64 = (1..=n_radars)
        .map(|i| (b_total - b_inter * f64::from(i - 1)) / b_total)
        .product();
    Ok((1.0 - free).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MHZ_PER_US: f64 = 1.0e12;

    fn chirp_70() -> ChirpParams {
        ChirpParams::new(70.0 * MHZ_PER_US, 57.0e-6, SPEED_OF_LIGHT / 77.0e9).unwrap()
    }

    #[test]
    fn if_frequency_at_four_metres() {
        let f = if_frequency_for_distance(&chirp_70(), 4.0).unwrap();
        assert!((f - 1.87e6).abs() / 1.87e6 < 0.005, "{f}");
        assert_eq!(if_frequency_for_distance(&chirp_70(), 0.0).unwrap(), 0.0);
        assert!(if_frequency_for_distance(&chirp_70(), -1.0).is_err());
    }

    #[test]
    fn if_frequency_one_metre_by_hand() {
        // 70e12 Hz/s * (2 * 1 m / 299792458 m/s)
        let tof = 2.0 / 299_792_458.0;
        let expected = 70.0e12 * tof;
        let f = if_frequency_for_distance(&chirp_70(), 1.0).unwrap();
        assert!((f - expected).abs() / expected < 1e-12);
        assert!((f - 466_989.733).abs() < 1e-2);
    }

    #[test]
    fn range_resolution_values() {
        let r4 = range_resolution_for_bandwidth(4.0e9).unwrap();
        assert!((r4 - 0.0375).abs() / 0.0375 < 0.01);
        let r2 = range_resolution_for_bandwidth(2.0e9).unwrap();
        assert!((r2 - 2.0 * r4).abs() < 1e-15);
        // 299792458 / 3e9
        let r15 = range_resolution_for_bandwidth(1.5e9).unwrap();
        assert!((r15 - 0.099_930_819_333).abs() < 1e-9);
        assert!(range_resolution_for_bandwidth(0.0).is_err());
        assert!((range_resolution(&ChirpParams::default()).unwrap() - r4).abs() < 1e-9);
    }

    #[test]
    fn velocity_values() {
        let p = ChirpParams::new(70.0 * MHZ_PER_US, 50.0e-6, 3.9e-3).unwrap();
        assert_eq!(velocity_from_phase(&p, 0.0).unwrap(), 0.0);
        // 3.9e-3 * (pi/2) / (4 pi * 50e-6) = 3.9e-3 / (8 * 50e-6) = 9.75 m/s
        let v = velocity_from_phase(&p, PI / 2.0).unwrap();
        assert!((v - 9.75).abs() < 1e-9, "{v}");
        let vmax = velocity_from_phase(&p, PI).unwrap();
        assert!((vmax - 3.9e-3 / (4.0 * 50.0e-6)).abs() < 1e-9);
        assert!(matches!(
            velocity_from_phase(&p, 3.2),
            Err(RadarMathError::Ambiguity(_))
        ));
    }

    #[test]
    fn aoa_values() {
        let p = chirp_70();
        assert_eq!(aoa_from_phase(&p, 0.0).unwrap(), 0.0);
        assert!((aoa_from_phase(&p, PI).unwrap() - PI / 2.0).abs() < 1e-9);
        assert!((aoa_from_phase(&p, PI / 2.0).unwrap().to_degrees() - 30.0).abs() < 1e-9);
        let wide =
            ChirpParams::with_spacing(p.slope, p.chirp_duration, p.wavelength, p.wavelength / 4.0)
                .unwrap();
        assert!(aoa_from_phase(&wide, PI).is_err());
    }

    #[test]
    fn interference_values() {
        let p3 = interference_probability(3, 4.0e9, 5.6e6).unwrap();
        assert!((p3 - 0.004).abs() < 5e-4, "{p3}");
        assert_eq!(interference_probability(1, 4.0e9, 5.6e6).unwrap(), 0.0);
        // direct product expansion for N = 4
        let r = 5.6e6 / 4.0e9;
        let expected = 1.0 - 1.0 * (1.0 - r) * (1.0 - 2.0 * r) * (1.0 - 3.0 * r);
        let p4 = interference_probability(4, 4.0e9, 5.6e6).unwrap();
        assert!((p4 - expected).abs() < 1e-15);
        assert!((p4 - 0.008_378_456).abs() < 1e-8);
        assert!(interference_probability(3, 4.0e9, 2.0e9).is_err());
        assert!(interference_probability(0, 4.0e9, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn if_distance_roundtrip(d in 0.0f64..100.0) {
            let p = chirp_70();
            let f = if_frequency_for_distance(&p, d).unwrap();
            let back = distance_for_if_frequency(&p, f).unwrap();
            prop_assert!((back - d).abs() <= 1e-9 * d.max(1e-12));
        }

        #[test]
        fn interference_monotone(n in 1u32..8, inter in 1.0e5f64..5.0e7, extra in 0.0f64..1.0e7) {
            let a = interference_probability(n, 4.0e9, inter).unwrap();
            let b = interference_probability(n + 1, 4.0e9, inter).unwrap();
            let c = interference_probability(n, 4.0e9, inter + extra).unwrap();
            prop_assert!(b >= a);
            prop_assert!(c >= a);
        }

        #[test]
        fn resolution_strictly_decreasing(b in 1.0e8f64..8.0e9, step in 1.0e6f64..1.0e9) {
            prop_assert!(range_resolution_for_bandwidth(b + step).unwrap() < range_resolution_for_bandwidth(b).unwrap());
        }

        #[test]
        fn velocity_linear(a in -1.5f64..1.5, b in -1.5f64..1.5) {
            let p = chirp_70();
            let sum = velocity_from_phase(&p, a + b).unwrap();
            let parts = velocity_from_phase(&p, a).unwrap() + velocity_from_phase(&p, b).unwrap();
            prop_assert!((sum - parts).abs() < 1e-9);
        }
    }

    #[test]
    fn default_profile_is_consistent() {
        let p = ChirpParams::default();
        assert!((p.bandwidth - p.slope * p.chirp_duration).abs() / p.bandwidth < 1e-6);
        assert!((p.slope / MHZ_PER_US - 70.0).abs() < 0.5);
    }
}
