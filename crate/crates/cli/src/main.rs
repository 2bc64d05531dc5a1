//! `bdfd`: design block decision-feedback transceivers, run seeded BER
//! sweeps, and print closed-form performance analysis.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical/design error, 3 I/O.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use bdfd_core::analysis::{self, BerCoeffs, OptimalMse, ReceiverFamily};
use bdfd_core::channel::ChannelModel;
use bdfd_core::error::{Error, Result};
use bdfd_core::linalg;
use bdfd_core::sim::{self, scenario_preset, SimConfig};
use bdfd_core::transceiver::{
    baseline_precoder, design_mmse_bdfd, design_zf_bdfd, receiver_for_precoder, BaselineKind,
    DesignSpec, Transceiver, TransceiverKind,
};

#[derive(Parser)]
#[command(name = "bdfd", about = "Block decision-feedback transceiver designer and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a transceiver for a channel file and write F, W, B.
    Design(DesignArgs),
    /// Run a Monte Carlo BER sweep and write a CSV report.
    Simulate(SimulateArgs),
    /// Print closed-form MSE/SINR/BER/GMI analysis for a channel.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Channel matrix file (cmatrix text format).
    #[arg(long)]
    channel: PathBuf,
    /// Noise covariance: a matrix file or a scalar noise variance sigma2.
    #[arg(long)]
    rvv: String,
}

impl ChannelArgs {
    fn load(&self) -> Result<ChannelModel> {
        let h = sim::load_matrix(&self.channel)?;
        if let Ok(sigma2) = self.rvv.parse::<f64>() {
            ChannelModel::with_awgn(h, sigma2)
        } else {
            let rvv = sim::load_matrix(PathBuf::from(&self.rvv).as_path())?;
            ChannelModel::new(h, rvv)
        }
    }
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Symbols per block.
    #[arg(long = "M")]
    m: usize,
    /// Total block power budget.
    #[arg(long)]
    p0: f64,
    /// Scheme kind, e.g. OPT_ZF_BDFD, DFT_MMSE_BDFD, OPT_LINEAR_MMSE.
    #[arg(long)]
    kind: String,
    /// Output transceiver file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Config file (mutually exclusive with --preset).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Preset name: fir16, mimo33, mimo34.
    #[arg(long)]
    preset: Option<String>,
    /// Override channels per point.
    #[arg(long)]
    channels: Option<usize>,
    /// Override blocks per channel.
    #[arg(long)]
    blocks: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Symbols per block.
    #[arg(long = "M")]
    m: usize,
    /// Total block power budget.
    #[arg(long)]
    p0: f64,
    /// QAM order b (constellation 4^b).
    #[arg(long, default_value_t = 1)]
    b: usize,
}

fn scheme_transceiver(kind: &str, ch: &ChannelModel, spec: &DesignSpec) -> Result<Transceiver> {
    match kind {
        "OPT_ZF_BDFD" => design_zf_bdfd(ch, spec),
        "OPT_MMSE_BDFD" => design_mmse_bdfd(ch, spec),
        "IDENTITY_ZF_BDFD" => {
            let f = baseline_precoder(BaselineKind::Identity, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::ZfBdfd)
        }
        "IDENTITY_MMSE_BDFD" => {
            let f = baseline_precoder(BaselineKind::Identity, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::MmseBdfd)
        }
        "DFT_ZF_BDFD" => {
            let f = baseline_precoder(BaselineKind::Dft, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::ZfBdfd)
        }
        "DFT_MMSE_BDFD" => {
            let f = baseline_precoder(BaselineKind::Dft, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::MmseBdfd)
        }
        "OPT_LINEAR_ZF" => {
            let f = baseline_precoder(BaselineKind::OptLinearZf, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::LinearZf)
        }
        "OPT_LINEAR_MMSE" => {
            let f = baseline_precoder(BaselineKind::OptLinearMmse, ch, spec)?;
            receiver_for_precoder(ch, &f, TransceiverKind::LinearMmse)
        }
        other => Err(Error::InvalidInput(format!("unknown design kind `{other}`"))),
    }
}

fn cmd_design(args: &DesignArgs) -> Result<()> {
    let ch = args.channel.load()?;
    let spec = DesignSpec::new(args.m, args.p0)?;
    let t = scheme_transceiver(&args.kind, &ch, &spec)?;
    sim::save_transceiver(&args.out, &t)?;
    let mse = linalg::trace(&analysis::error_covariance(&ch, &t)?).re / args.m as f64;
    println!(
        "designed {} for {}x{} channel: M={}, p0={}, q_active={}, predicted MSE {:.6e}",
        args.kind,
        ch.p_dim(),
        ch.k_dim(),
        args.m,
        args.p0,
        t.q_active,
        mse
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg: SimConfig = match (&args.config, &args.preset) {
        (Some(path), None) => SimConfig::from_config_text(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => scenario_preset(name)?,
        _ => {
            return Err(Error::InvalidInput(
                "exactly one of --config or --preset is required".into(),
            ))
        }
    };
    if let Some(c) = args.channels {
        cfg.channels_per_point = c;
    }
    if let Some(b) = args.blocks {
        cfg.blocks_per_channel = b;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;

    let report = if args.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers)
            .build()
            .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
        pool.install(|| sim::run_sweep(&cfg))?
    } else {
        sim::run_sweep(&cfg)?
    };

    std::fs::write(&args.out, report.to_csv())?;
    for s in &report.skipped {
        eprintln!(
            "skipped channel {} scheme {} snr {} dB: {}",
            s.channel_index,
            s.scheme.name(),
            s.snr_db,
            s.reason
        );
    }
    println!(
        "wrote {} rows ({} skipped cells) to {}",
        report.rows.len(),
        report.skipped.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let ch = args.channel.load()?;
    let spec = DesignSpec::new(args.m, args.p0)?;
    let coeffs = BerCoeffs::square_qam(args.b)?;
    let (_, gram) = ch.whitened_gram()?;
    let es = linalg::hermitian_eig(&gram)?;

    println!(
        "channel {}x{}, M={}, p0={}, 4^{}-QAM",
        ch.p_dim(),
        ch.k_dim(),
        args.m,
        args.p0,
        args.b
    );
    let shown = es.values.len().min(args.m.max(4));
    let lam_str: Vec<String> = es.values[..shown].iter().map(|l| format!("{l:.6e}")).collect();
    println!("leading eigenvalues of H^H Rvv^-1 H: {}", lam_str.join(" "));

    if args.m <= es.dim() {
        let lam = &es.values[..args.m];
        println!("\nclosed-form optimal MSE:");
        for (name, kind) in [
            ("OPT_ZF_BDFD", OptimalMse::ZfBdfd),
            ("OPT_MMSE_BDFD", OptimalMse::MmseBdfd),
            ("OPT_LINEAR_ZF", OptimalMse::ZfLinear),
            ("OPT_LINEAR_MMSE", OptimalMse::MmseLinear),
        ] {
            match analysis::closed_form_mse(kind, lam, &spec) {
                Ok(v) => println!("  {name:<16} {v:.6e}"),
                Err(e) => println!("  {name:<16} unavailable ({e})"),
            }
        }
    }

    println!("\nper-scheme analysis (designed for this channel):");
    println!(
        "  {:<20} {:>12} {:>12} {:>12} {:>12}",
        "scheme", "mse", "min_sinr_db", "ber_bound", "gmi_bits"
    );
    for kind in [
        "OPT_ZF_BDFD",
        "OPT_MMSE_BDFD",
        "OPT_LINEAR_ZF",
        "OPT_LINEAR_MMSE",
    ] {
        let family = if kind.contains("ZF") { ReceiverFamily::Zf } else { ReceiverFamily::Mmse };
        match scheme_transceiver(kind, &ch, &spec) {
            Ok(t) => {
                let ree = analysis::error_covariance(&ch, &t)?;
                let tr = linalg::trace(&ree).re;
                let sinrs = analysis::sinr(&ree, family)?;
                let min_sinr = sinrs.iter().cloned().fold(f64::INFINITY, f64::min);
                let bound = analysis::ber_lower_bound(tr, args.m, &coeffs, family);
                let flag = if bound.in_convex_regime { "" } else { " (outside convex regime)" };
                let g = analysis::gmi(&ch, &t.f)?;
                println!(
                    "  {:<20} {:>12.4e} {:>12.3} {:>12.4e} {:>12.3}{}",
                    kind,
                    tr / args.m as f64,
                    10.0 * min_sinr.log10(),
                    bound.value,
                    g,
                    flag
                );
            }
            Err(e) => println!("  {kind:<20} unavailable ({e})"),
        }
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's help/version are success paths.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            return Ok(());
        }
    };
    match &cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Analyze(args) => cmd_analyze(args),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
