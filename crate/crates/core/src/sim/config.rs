//! Simulation configuration and its flat key-value file format.
//!
//! Config files mirror [`SimConfig`] fields one-to-one: `key = value` lines,
//! `#` comments, comma-separated lists. Unknown keys are errors.

use crate::detection::FeedbackMode;
use crate::error::{Error, Result};

/// Simulation scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Zero-padded block transmission through a random FIR channel.
    FirZp,
    /// Narrowband Rayleigh MIMO channel.
    Mimo,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::FirZp => "FIR_ZP",
            Scenario::Mimo => "MIMO",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "FIR_ZP" => Ok(Scenario::FirZp),
            "MIMO" => Ok(Scenario::Mimo),
            other => Err(Error::InvalidInput(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Transmission scheme: a precoder choice paired with a receiver structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    OptZfBdfd,
    OptMmseBdfd,
    IdentityZfBdfd,
    IdentityMmseBdfd,
    DftZfBdfd,
    DftMmseBdfd,
    OptLinearZf,
    OptLinearMmse,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::OptZfBdfd,
        Scheme::OptMmseBdfd,
        Scheme::IdentityZfBdfd,
        Scheme::IdentityMmseBdfd,
        Scheme::DftZfBdfd,
        Scheme::DftMmseBdfd,
        Scheme::OptLinearZf,
        Scheme::OptLinearMmse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OptZfBdfd => "OPT_ZF_BDFD",
            Scheme::OptMmseBdfd => "OPT_MMSE_BDFD",
            Scheme::IdentityZfBdfd => "IDENTITY_ZF_BDFD",
            Scheme::IdentityMmseBdfd => "IDENTITY_MMSE_BDFD",
            Scheme::DftZfBdfd => "DFT_ZF_BDFD",
            Scheme::DftMmseBdfd => "DFT_MMSE_BDFD",
            Scheme::OptLinearZf => "OPT_LINEAR_ZF",
            Scheme::OptLinearMmse => "OPT_LINEAR_MMSE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Scheme::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme `{s}`")))
    }

    /// Whether the scheme's precoder is channel independent (needs K = M).
    pub fn needs_square_channel(self) -> bool {
        matches!(
            self,
            Scheme::IdentityZfBdfd | Scheme::IdentityMmseBdfd | Scheme::DftZfBdfd | Scheme::DftMmseBdfd
        )
    }

    /// ZF-family schemes need rank(H) >= M on every draw.
    pub fn is_zf(self) -> bool {
        matches!(
            self,
            Scheme::OptZfBdfd | Scheme::IdentityZfBdfd | Scheme::DftZfBdfd | Scheme::OptLinearZf
        )
    }
}

/// Full description of one Monte Carlo sweep.
///
/// SNR is defined as `(p0/M)/σ²` (transmitted energy per symbol over the
/// noise variance); the engine derives `σ²` from each grid point.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// FIR channel order L (the impulse response has L+1 taps). FIR_ZP only.
    pub fir_order: usize,
    /// Normalize each FIR draw to unit impulse-response energy.
    pub normalize_taps: bool,
    /// Receive dimension P. Ignored for FIR_ZP (P = K + L).
    pub rx_dim: usize,
    /// Transmit dimension K.
    pub tx_dim: usize,
    /// Symbols per block M.
    pub block_len: usize,
    /// QAM order: constellation is 4^b points, 2b bits per symbol.
    pub qam_b: usize,
    pub schemes: Vec<Scheme>,
    pub snr_db_grid: Vec<f64>,
    /// Total block power budget p0.
    pub p0: f64,
    pub channels_per_point: usize,
    pub blocks_per_channel: usize,
    pub master_seed: u64,
    pub feedback_modes: Vec<FeedbackMode>,
}

impl SimConfig {
    /// Receive dimension of the channel matrices this config draws.
    pub fn p_dim(&self) -> usize {
        match self.scenario {
            Scenario::FirZp => self.tx_dim + self.fir_order,
            Scenario::Mimo => self.rx_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_len == 0 {
            return Err(Error::InvalidInput("block_len must be >= 1".into()));
        }
        if self.tx_dim == 0 {
            return Err(Error::InvalidInput("tx_dim must be >= 1".into()));
        }
        if self.scenario == Scenario::Mimo && self.rx_dim == 0 {
            return Err(Error::InvalidInput("rx_dim must be >= 1".into()));
        }
        if self.qam_b == 0 || self.qam_b > 8 {
            return Err(Error::InvalidInput("qam_b must be in 1..=8".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidInput("schemes list is empty".into()));
        }
        if self.snr_db_grid.is_empty() {
            return Err(Error::InvalidInput("snr_db_grid is empty".into()));
        }
        if self.p0 <= 0.0 || !self.p0.is_finite() {
            return Err(Error::InvalidInput("p0 must be positive".into()));
        }
        if self.channels_per_point == 0 || self.blocks_per_channel == 0 {
            return Err(Error::InvalidInput("trial counts must be >= 1".into()));
        }
        if self.feedback_modes.is_empty() {
            return Err(Error::InvalidInput("feedback_modes is empty".into()));
        }
        if self.block_len > self.tx_dim {
            return Err(Error::InvalidInput(format!(
                "block_len {} exceeds tx_dim {}",
                self.block_len, self.tx_dim
            )));
        }
        for s in &self.schemes {
            if s.needs_square_channel() && self.tx_dim != self.block_len {
                return Err(Error::InvalidInput(format!(
                    "scheme {} needs K = M, got K={}, M={}",
                    s.name(),
                    self.tx_dim,
                    self.block_len
                )));
            }
        }
        Ok(())
    }

    /// Serialize to the config file format.
    pub fn to_config_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario.name());
        if self.scenario == Scenario::FirZp {
            let _ = writeln!(s, "fir_order = {}", self.fir_order);
            let _ = writeln!(s, "normalize_taps = {}", self.normalize_taps);
        } else {
            let _ = writeln!(s, "rx_dim = {}", self.rx_dim);
        }
        let _ = writeln!(s, "tx_dim = {}", self.tx_dim);
        let _ = writeln!(s, "block_len = {}", self.block_len);
        let _ = writeln!(s, "qam_b = {}", self.qam_b);
        let _ = writeln!(
            s,
            "schemes = {}",
            self.schemes.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(
            s,
            "snr_db_grid = {}",
            self.snr_db_grid
                .iter()
                .map(|x| super::textio::format_f64(*x))
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(s, "p0 = {}", super::textio::format_f64(self.p0));
        let _ = writeln!(s, "channels_per_point = {}", self.channels_per_point);
        let _ = writeln!(s, "blocks_per_channel = {}", self.blocks_per_channel);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(
            s,
            "feedback_modes = {}",
            self.feedback_modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
        );
        s
    }

    /// Parse the config file format. Unknown or duplicate keys are errors.
    pub fn from_config_text(text: &str) -> Result<SimConfig> {
        let mut seen: Vec<String> = Vec::new();
        let mut scenario = None;
        let mut fir_order = None;
        let mut normalize_taps = None;
        let mut rx_dim = None;
        let mut tx_dim = None;
        let mut block_len = None;
        let mut qam_b = None;
        let mut schemes = None;
        let mut snr_db_grid = None;
        let mut p0 = None;
        let mut channels_per_point = None;
        let mut blocks_per_channel = None;
        let mut master_seed = None;
        let mut feedback_modes = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::InvalidInput(format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());

            let parse_usize = |v: &str| -> Result<usize> {
                v.parse().map_err(|_| Error::InvalidInput(format!("bad integer `{v}` for `{key}`")))
            };
            match key {
                "scenario" => scenario = Some(Scenario::parse(value)?),
                "fir_order" => fir_order = Some(parse_usize(value)?),
                "normalize_taps" => {
                    normalize_taps = Some(match value {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(Error::InvalidInput(format!(
                                "bad boolean `{value}` for normalize_taps"
                            )))
                        }
                    })
                }
                "rx_dim" => rx_dim = Some(parse_usize(value)?),
                "tx_dim" => tx_dim = Some(parse_usize(value)?),
                "block_len" => block_len = Some(parse_usize(value)?),
                "qam_b" => qam_b = Some(parse_usize(value)?),
                "schemes" => {
                    schemes = Some(
                        value
                            .split(',')
                            .map(|t| Scheme::parse(t.trim()))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "snr_db_grid" => {
                    snr_db_grid = Some(
                        value
                            .split(',')
                            .map(|t| {
                                t.trim().parse::<f64>().map_err(|_| {
                                    Error::InvalidInput(format!("bad SNR value `{t}`"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "p0" => {
                    p0 = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad float `{value}` for p0")))?,
                    )
                }
                "channels_per_point" => channels_per_point = Some(parse_usize(value)?),
                "blocks_per_channel" => blocks_per_channel = Some(parse_usize(value)?),
                "master_seed" => {
                    master_seed = Some(value.parse::<u64>().map_err(|_| {
                        Error::InvalidInput(format!("bad seed `{value}` for master_seed"))
                    })?)
                }
                "feedback_modes" => {
                    feedback_modes = Some(
                        value
                            .split(',')
                            .map(|t| FeedbackMode::parse(t.trim()))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(Error::InvalidInput(format!("unknown config key `{other}`"))),
            }
        }

        let scenario = scenario.ok_or_else(|| Error::InvalidInput("missing `scenario`".into()))?;
        let need = |name: &str| Error::InvalidInput(format!("missing `{name}`"));
        if scenario == Scenario::FirZp && fir_order.is_none() {
            return Err(need("fir_order"));
        }
        if scenario == Scenario::Mimo && rx_dim.is_none() {
            return Err(need("rx_dim"));
        }
        let cfg = SimConfig {
            scenario,
            fir_order: fir_order.unwrap_or(0),
            normalize_taps: normalize_taps.unwrap_or(true),
            rx_dim: rx_dim.unwrap_or(0),
            tx_dim: tx_dim.ok_or_else(|| need("tx_dim"))?,
            block_len: block_len.ok_or_else(|| need("block_len"))?,
            qam_b: qam_b.ok_or_else(|| need("qam_b"))?,
            schemes: schemes.ok_or_else(|| need("schemes"))?,
            snr_db_grid: snr_db_grid.ok_or_else(|| need("snr_db_grid"))?,
            p0: p0.ok_or_else(|| need("p0"))?,
            channels_per_point: channels_per_point.ok_or_else(|| need("channels_per_point"))?,
            blocks_per_channel: blocks_per_channel.ok_or_else(|| need("blocks_per_channel"))?,
            master_seed: master_seed.ok_or_else(|| need("master_seed"))?,
            feedback_modes: feedback_modes.ok_or_else(|| need("feedback_modes"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
