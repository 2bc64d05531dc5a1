//! Scenario presets at desk-scale trial counts.

use crate::detection::FeedbackMode;
use crate::error::{Error, Result};

use super::config::{Scenario, Scheme, SimConfig};

/// Default master seed for presets.
pub const DEFAULT_SEED: u64 = 20260801;

/// Named scenario presets.
///
/// - `fir16`: zero-padded block transmission, 5-tap unit-energy Rayleigh FIR
///   channel, M = K = 16 (P = 20), 4-QAM.
/// - `mimo33`: 3x3 Rayleigh MIMO, M = 3, 4-QAM.
/// - `mimo34`: 3 transmit / 4 receive Rayleigh MIMO, M = 3, 4-QAM.
///
/// Trial counts default to 500 channels x 20 blocks; scale them up through
/// the returned config when tighter estimates are needed.
pub fn scenario_preset(name: &str) -> Result<SimConfig> {
    let all = Scheme::ALL.to_vec();
    let modes = vec![FeedbackMode::Genie, FeedbackMode::Real];
    match name {
        "fir16" => Ok(SimConfig {
            scenario: Scenario::FirZp,
            fir_order: 4,
            normalize_taps: true,
            rx_dim: 0,
            tx_dim: 16,
            block_len: 16,
            qam_b: 1,
            schemes: all,
            snr_db_grid: (0..=11).map(|i| 2.0 * i as f64).collect(), // 0..22 dB
            p0: 16.0,
            channels_per_point: 500,
            blocks_per_channel: 20,
            master_seed: DEFAULT_SEED,
            feedback_modes: modes,
        }),
        "mimo33" => Ok(SimConfig {
            scenario: Scenario::Mimo,
            fir_order: 0,
            normalize_taps: true,
            rx_dim: 3,
            tx_dim: 3,
            block_len: 3,
            qam_b: 1,
            schemes: all,
            snr_db_grid: (0..=10).map(|i| 3.0 * i as f64).collect(), // 0..30 dB
            p0: 3.0,
            channels_per_point: 500,
            blocks_per_channel: 20,
            master_seed: DEFAULT_SEED,
            feedback_modes: modes,
        }),
        "mimo34" => Ok(SimConfig {
            scenario: Scenario::Mimo,
            fir_order: 0,
            normalize_taps: true,
            rx_dim: 4,
            tx_dim: 3,
            block_len: 3,
            qam_b: 1,
            schemes: all,
            snr_db_grid: (0..=10).map(|i| 2.5 * i as f64).collect(), // 0..25 dB
            p0: 3.0,
            channels_per_point: 500,
            blocks_per_channel: 20,
            master_seed: DEFAULT_SEED,
            feedback_modes: modes,
        }),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fir16_matches_reference_geometry() {
        let cfg = scenario_preset("fir16").unwrap();
        assert_eq!(cfg.scenario, Scenario::FirZp);
        assert_eq!(cfg.block_len, 16);
        assert_eq!(cfg.tx_dim, 16);
        assert_eq!(cfg.fir_order, 4);
        assert_eq!(cfg.p_dim(), 20);
        assert_eq!(cfg.qam_b, 1);
        cfg.validate().unwrap();
    }

    #[test]
    fn mimo_presets_match_reference_geometry() {
        let c33 = scenario_preset("mimo33").unwrap();
        assert_eq!((c33.rx_dim, c33.tx_dim, c33.block_len, c33.qam_b), (3, 3, 3, 1));
        c33.validate().unwrap();

        let c34 = scenario_preset("mimo34").unwrap();
        assert_eq!((c34.rx_dim, c34.tx_dim, c34.block_len, c34.qam_b), (4, 3, 3, 1));
        c34.validate().unwrap();
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(scenario_preset("nope"), Err(Error::UnknownScenario(_))));
    }
}
