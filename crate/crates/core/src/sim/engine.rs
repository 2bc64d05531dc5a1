//! The Monte Carlo sweep engine.
//!
//! Channels are independent work items seeded by index, so the report is
//! byte-identical for any worker count. Within a channel, data bits and
//! unit-variance noise are drawn once per block and shared across schemes
//! and SNR points (noise is rescaled per point), which keeps scheme
//! comparisons on common random numbers.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{self, BerCoeffs, ReceiverFamily};
use crate::channel::{fir_zero_padded_channel, rayleigh_mimo_channel, ChannelModel, FirTaps};
use crate::detection::{bdfd_detect, Constellation, FeedbackMode};
use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::rng::{self, stream, StreamPurpose};
use crate::transceiver::{
    baseline_precoder, design_mmse_bdfd, design_zf_bdfd, receiver_for_precoder, BaselineKind,
    DesignSpec, Transceiver, TransceiverKind,
};

use super::config::{Scenario, Scheme, SimConfig};
use super::textio::format_f64;

/// One aggregated (scheme, SNR, feedback mode) cell of the report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub mode: FeedbackMode,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub stderr: f64,
    /// Mean over channels of trace(R_ee)/M from the design equations.
    pub predicted_mse: f64,
    /// Mean over channels of the Jensen BER lower bound.
    pub predicted_ber_bound: f64,
    /// Mean over channels of the Gaussian mutual information (bits/block).
    pub gmi_bits: f64,
}

/// A (channel, scheme, SNR) cell whose design failed; the sweep continues.
#[derive(Debug, Clone)]
pub struct SkipRecord {
    pub channel_index: u64,
    pub scheme: Scheme,
    pub snr_db: f64,
    pub reason: String,
}

/// Result of a sweep: aggregated rows plus any skipped cells.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub config: SimConfig,
    pub rows: Vec<ReportRow>,
    pub skipped: Vec<SkipRecord>,
}

impl SimReport {
    pub fn find(&self, scheme: Scheme, snr_db: f64, mode: FeedbackMode) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.snr_db == snr_db && r.mode == mode)
    }

    /// CSV rendering: a commented header echoing the run parameters, then
    /// one line per (scheme, snr_db, feedback_mode).
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "# bdfd sweep report");
        let _ = write!(out, "# scenario={}", c.scenario.name());
        if c.scenario == Scenario::FirZp {
            let _ = write!(out, " fir_order={} normalize_taps={}", c.fir_order, c.normalize_taps);
        } else {
            let _ = write!(out, " rx_dim={}", c.rx_dim);
        }
        let _ = writeln!(
            out,
            " tx_dim={} block_len={} qam_b={} p0={}",
            c.tx_dim,
            c.block_len,
            c.qam_b,
            format_f64(c.p0)
        );
        let _ = writeln!(
            out,
            "# channels_per_point={} blocks_per_channel={} master_seed={}",
            c.channels_per_point, c.blocks_per_channel, c.master_seed
        );
        let _ = writeln!(
            out,
            "# schemes={}",
            c.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(
            out,
            "# feedback_modes={}",
            c.feedback_modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(
            out,
            "scheme,snr_db,feedback_mode,bits,errors,ber,stderr,predicted_mse,predicted_ber_bound,gmi_bits"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.scheme.name(),
                format_f64(r.snr_db),
                r.mode.name(),
                r.bits,
                r.errors,
                format_f64(r.ber),
                format_f64(r.stderr),
                format_f64(r.predicted_mse),
                format_f64(r.predicted_ber_bound),
                format_f64(r.gmi_bits)
            );
        }
        out
    }
}

/// Per-(scheme, snr) outcome on one channel realization.
struct CellOutcome {
    skipped: Option<String>,
    predicted_mse: f64,
    predicted_ber_bound: f64,
    gmi_bits: f64,
    /// (errors, bits) per configured feedback mode.
    counts: Vec<(u64, u64)>,
}

fn build_transceiver(scheme: Scheme, ch: &ChannelModel, spec: &DesignSpec) -> Result<Transceiver> {
    match scheme {
        Scheme::OptZfBdfd => design_zf_bdfd(ch, spec),
        Scheme::OptMmseBdfd => design_mmse_bdfd(ch, spec),
        Scheme::IdentityZfBdfd => {
            let f = baseline_precoder(BaselineKind::Identity, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::ZfBdfd)
        }
        Scheme::IdentityMmseBdfd => {
            let f = baseline_precoder(BaselineKind::Identity, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::MmseBdfd)
        }
        Scheme::DftZfBdfd => {
            let f = baseline_precoder(BaselineKind::Dft, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::ZfBdfd)
        }
        Scheme::DftMmseBdfd => {
            let f = baseline_precoder(BaselineKind::Dft, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::MmseBdfd)
        }
        Scheme::OptLinearZf => {
            let f = baseline_precoder(BaselineKind::OptLinearZf, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::LinearZf)
        }
        Scheme::OptLinearMmse => {
            let f = baseline_precoder(BaselineKind::OptLinearMmse, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::LinearMmse)
        }
    }
}

fn draw_channel_matrix(cfg: &SimConfig, channel_index: u64) -> Result<CMatrix> {
    let mut r = stream(cfg.master_seed, channel_index, StreamPurpose::Channel);
    match cfg.scenario {
        Scenario::FirZp => {
            let taps = if cfg.normalize_taps {
                FirTaps::random_normalized(cfg.fir_order + 1, &mut r)?
            } else {
                let raw: Vec<Complex64> = (0..cfg.fir_order + 1)
                    .map(|_| rng::standard_complex_gaussian(&mut r))
                    .collect();
                FirTaps::new(raw)?
            };
            fir_zero_padded_channel(&taps, cfg.tx_dim)
        }
        Scenario::Mimo => Ok(rayleigh_mimo_channel(cfg.rx_dim, cfg.tx_dim, &mut r)),
    }
}

fn simulate_channel(
    cfg: &SimConfig,
    channel_index: u64,
    constellation: &Constellation,
    coeffs: &BerCoeffs,
) -> Result<Vec<CellOutcome>> {
    let m = cfg.block_len;
    let p = cfg.p_dim();
    let bits_per_block = m * constellation.bits_per_symbol();
    let h = draw_channel_matrix(cfg, channel_index)?;
    let spec = DesignSpec::new(m, cfg.p0)?;

    // Data and noise are drawn once, up front, in block order; the streams
    // have disjoint purpose tags so channel draws never depend on them.
    let mut data = stream(cfg.master_seed, channel_index, StreamPurpose::Data);
    let mut noise = stream(cfg.master_seed, channel_index, StreamPurpose::Noise);
    let mut true_labels: Vec<Vec<u32>> = Vec::with_capacity(cfg.blocks_per_channel);
    let mut symbols: Vec<DVector<Complex64>> = Vec::with_capacity(cfg.blocks_per_channel);
    let mut unit_noise: Vec<DVector<Complex64>> = Vec::with_capacity(cfg.blocks_per_channel);
    for _ in 0..cfg.blocks_per_channel {
        let bits: Vec<bool> = (0..bits_per_block).map(|_| rand::Rng::random(&mut data)).collect();
        let mut labels = Vec::with_capacity(m);
        let mut points = Vec::with_capacity(m);
        for chunk in bits.chunks(constellation.bits_per_symbol()) {
            let idx = constellation.index_for_bits(chunk)?;
            labels.push(constellation.label(idx));
            points.push(constellation.point(idx));
        }
        true_labels.push(labels);
        symbols.push(DVector::from_column_slice(&points));
        unit_noise.push(rng::complex_gaussian_vector(p, &mut noise));
    }

    let mut cells = Vec::with_capacity(cfg.schemes.len() * cfg.snr_db_grid.len());
    for &scheme in &cfg.schemes {
        let family = if scheme.is_zf() { ReceiverFamily::Zf } else { ReceiverFamily::Mmse };
        for &snr_db in &cfg.snr_db_grid {
            let snr = 10f64.powf(snr_db / 10.0);
            let sigma2 = (cfg.p0 / m as f64) / snr;
            let sigma = sigma2.sqrt();
            let ch = ChannelModel::with_awgn(h.clone(), sigma2)?;

            let t = match build_transceiver(scheme, &ch, &spec) {
                Ok(t) => t,
                Err(e) => {
                    cells.push(CellOutcome {
                        skipped: Some(e.to_string()),
                        predicted_mse: 0.0,
                        predicted_ber_bound: 0.0,
                        gmi_bits: 0.0,
                        counts: vec![(0, 0); cfg.feedback_modes.len()],
                    });
                    continue;
                }
            };

            let ree = analysis::error_covariance(&ch, &t)?;
            let tr = linalg::trace(&ree).re;
            let predicted_mse = tr / m as f64;
            let predicted_ber_bound = analysis::ber_lower_bound(tr, m, coeffs, family).value;
            let gmi_bits = analysis::gmi(&ch, &t.f)?;

            let hf = &ch.h * &t.f;
            let mut counts = vec![(0u64, 0u64); cfg.feedback_modes.len()];
            for (block, s) in symbols.iter().enumerate() {
                let y = &hf * s + unit_noise[block].scale(sigma);
                let truth = &true_labels[block];
                for (mi, &mode) in cfg.feedback_modes.iter().enumerate() {
                    let det = bdfd_detect(&y, &t, constellation, mode, Some(s.as_slice()))?;
                    let mut errs = 0u64;
                    for (i, &idx) in det.decided_indices.iter().enumerate() {
                        errs += (constellation.label(idx) ^ truth[i]).count_ones() as u64;
                    }
                    counts[mi].0 += errs;
                    counts[mi].1 += bits_per_block as u64;
                }
            }
            cells.push(CellOutcome {
                skipped: None,
                predicted_mse,
                predicted_ber_bound,
                gmi_bits,
                counts,
            });
        }
    }
    Ok(cells)
}

/// Run the configured sweep.
///
/// Deterministic: identical configs produce identical reports regardless of
/// the rayon worker count, because every channel is seeded by its index and
/// aggregation folds the per-channel results in index order.
pub fn run_sweep(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let constellation = Constellation::square_qam(cfg.qam_b)?;
    let coeffs = BerCoeffs::square_qam(cfg.qam_b)?;

    let per_channel: Vec<Vec<CellOutcome>> = (0..cfg.channels_per_point as u64)
        .into_par_iter()
        .map(|c| simulate_channel(cfg, c, &constellation, &coeffs))
        .collect::<Result<Vec<_>>>()?;

    let n_cells = cfg.schemes.len() * cfg.snr_db_grid.len();
    let mut skipped = Vec::new();
    let mut rows = Vec::with_capacity(n_cells * cfg.feedback_modes.len());

    for (cell_idx, (si, gi)) in (0..cfg.schemes.len())
        .flat_map(|si| (0..cfg.snr_db_grid.len()).map(move |gi| (si, gi)))
        .enumerate()
    {
        let scheme = cfg.schemes[si];
        let snr_db = cfg.snr_db_grid[gi];
        let mut contributing = 0u64;
        let mut mse_sum = 0.0;
        let mut bound_sum = 0.0;
        let mut gmi_sum = 0.0;
        let mut counts = vec![(0u64, 0u64); cfg.feedback_modes.len()];
        for (ch_idx, cells) in per_channel.iter().enumerate() {
            let cell = &cells[cell_idx];
            match &cell.skipped {
                Some(reason) => skipped.push(SkipRecord {
                    channel_index: ch_idx as u64,
                    scheme,
                    snr_db,
                    reason: reason.clone(),
                }),
                None => {
                    contributing += 1;
                    mse_sum += cell.predicted_mse;
                    bound_sum += cell.predicted_ber_bound;
                    gmi_sum += cell.gmi_bits;
                    for (mi, &(e, b)) in cell.counts.iter().enumerate() {
                        counts[mi].0 += e;
                        counts[mi].1 += b;
                    }
                }
            }
        }
        let denom = contributing.max(1) as f64;
        for (mi, &mode) in cfg.feedback_modes.iter().enumerate() {
            let (errors, bits) = counts[mi];
            let ber = if bits > 0 { errors as f64 / bits as f64 } else { 0.0 };
            let stderr = if bits > 0 { (ber * (1.0 - ber) / bits as f64).sqrt() } else { 0.0 };
            rows.push(ReportRow {
                scheme,
                snr_db,
                mode,
                bits,
                errors,
                ber,
                stderr,
                predicted_mse: mse_sum / denom,
                predicted_ber_bound: bound_sum / denom,
                gmi_bits: gmi_sum / denom,
            });
        }
    }

    Ok(SimReport {
        config: cfg.clone(),
        rows,
        skipped,
    })
}
