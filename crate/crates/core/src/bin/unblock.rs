use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use unblock_core::config::{preset_names, ScenarioConfig};
use unblock_core::engine::bct::{bct_report, bct_scenario, parse_mobility};
use unblock_core::engine::{campaign, run, Scene};
use unblock_core::export::{self, RunSummary};
use unblock_core::nr::{initial_scan_latency, unblock_feasibility, NrConfig, SymbolDuration};
use unblock_core::Error;

#[derive(Parser)]
#[command(
    name = "unblock",
    version,
    about = "mm-Wave transient blockage recovery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv, events.csv and summary.json.
    Run {
        /// Scenario file, or the name of a shipped preset.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "on")]
        unblock: Switch,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, env = "UNBLOCK_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Also write the t = 0 RSS of every beam pair.
        #[arg(long)]
        dump_rss_matrix: bool,
    },
    /// Independent replications with a pooled preservation rate.
    Campaign {
        #[arg(long, default_value = "campaign-default")]
        scenario: String,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "on")]
        unblock: Switch,
        /// Override the NLoS reflector presence probability of every surface.
        #[arg(long)]
        nlos_probability: Option<f64>,
        #[arg(long, env = "UNBLOCK_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Beam coherence time of a moving MS.
    Bct {
        /// rot:<rad/s> (e.g. rot:2pi/3) or walk:<m/s>.
        #[arg(long)]
        mobility: String,
        /// BS-MS distance of the reference room.
        #[arg(long, default_value_t = 5.0)]
        distance: f64,
        /// Use this scenario's geometry instead of the reference room.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        step_ms: f64,
    },
    /// 5G NR scan latency and discovery feasibility.
    NrBudget {
        #[arg(long, default_value_t = 1)]
        ssb_per_slot: u32,
        #[arg(long, default_value_t = 25)]
        ms_beams: u32,
        #[arg(long, default_value_t = 64)]
        ue_rx_beams: u32,
        #[arg(long, default_value_t = 100.0)]
        rescan_ms: f64,
        #[arg(long, default_value_t = 5.0)]
        post_access_period_ms: f64,
        #[arg(long, default_value_t = 20.0)]
        pre_access_period_ms: f64,
        /// No bursts after access.
        #[arg(long)]
        no_post_access: bool,
        #[arg(long, default_value_t = 40)]
        slots_per_frame: u32,
        #[arg(long)]
        short_symbols: bool,
    },
    /// List the shipped presets.
    Presets,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn ms_to_us(ms: f64, flag: &str) -> Result<u64, Error> {
    if !(ms > 0.0 && ms.is_finite()) {
        return Err(Error::invalid(flag, "must be > 0"));
    }
    Ok((ms * 1000.0).round() as u64)
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run {
            scenario,
            unblock,
            seed,
            duration,
            out,
            dump_rss_matrix,
        } => {
            let mut cfg = ScenarioConfig::load(&scenario)?;
            cfg.set_unblock(unblock == Switch::On);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = duration {
                cfg.duration_s = d;
            }
            let result = run(&cfg)?;
            let summary = RunSummary::new(
                cfg.name.as_deref(),
                cfg.seed,
                unblock == Switch::On,
                &result,
            );
            let files = export::write_run(&out, &summary, &result, &cfg.link)?;
            if dump_rss_matrix {
                let matrix = Scene::build(&cfg)?.rss_matrix(0.0)?;
                let f = std::fs::File::create(out.join("rss_matrix.csv"))?;
                export::write_rss_matrix_csv(f, &matrix)?;
            }
            let m = &result.metrics;
            println!(
                "scenario            {}",
                cfg.name.as_deref().unwrap_or(&scenario)
            );
            println!(
                "unblock             {}",
                if unblock == Switch::On { "on" } else { "off" }
            );
            println!("sync preserved      {}", summary.sync_preserved);
            println!("outages             {}", m.outage_count);
            println!(
                "blockage events     {} ({} survived)",
                m.blockage_events, m.events_survived
            );
            println!("NBO entries         {}", m.nbo_entries);
            println!("BA entries          {}", m.ba_entries);
            println!("recovery failures   {}", m.recovery_failures);
            println!("reacquisition time  {:.3} s", m.total_reacquisition_time_s);
            println!(
                "discovery airtime   {:.2} %",
                100.0 * m.discovery_airtime_fraction
            );
            println!("measurements        {}", m.measurement_count);
            for f in files {
                log::info!("wrote {}", f.display());
            }
        }
        Command::Campaign {
            scenario,
            n,
            seed,
            unblock,
            nlos_probability,
            out,
        } => {
            let mut cfg = ScenarioConfig::load(&scenario)?;
            cfg.set_unblock(unblock == Switch::On);
            if let Some(p) = nlos_probability {
                for s in &mut cfg.surfaces {
                    s.presence_probability = p;
                }
            }
            let master = seed.unwrap_or(cfg.seed);
            let summary = campaign(&cfg, n, master)?;
            std::fs::create_dir_all(&out)?;
            export::write_json(std::fs::File::create(out.join("campaign.json"))?, &summary)?;
            println!("replications        {}", summary.replications);
            println!("blockage events     {}", summary.blockage_events);
            println!(
                "preservation rate   {:.4} (95% CI {:.4}-{:.4})",
                summary.sync_preservation_rate, summary.ci95_low, summary.ci95_high
            );
            println!("outages             {}", summary.outage_count);
            println!("recovery failures   {}", summary.recovery_failures);
            println!(
                "sync-loss threshold {} reference opportunities",
                summary.sync_loss_threshold
            );
        }
        Command::Bct {
            mobility,
            distance,
            scenario,
            duration,
            step_ms,
        } => {
            let model = parse_mobility(&mobility)?;
            let cfg = match scenario {
                Some(s) => {
                    let mut c = ScenarioConfig::load(&s)?;
                    c.mobility = model;
                    c
                }
                None => bct_scenario(distance, model),
            };
            let report = bct_report(&cfg, duration, step_ms / 1000.0)?;
            let fmt = |b: Option<f64>| {
                b.map_or("no expiry".to_string(), |v| format!("{:.1} ms", v * 1e3))
            };
            println!(
                "NLoS pair ({}, {})   BCT {}",
                report.nlos_pair.bs,
                report.nlos_pair.ms,
                fmt(report.nlos_bct_s)
            );
            for (ms, bct) in &report.per_ms_beam {
                println!("  ms beam {ms:>2}  {}", fmt(*bct));
            }
        }
        Command::NrBudget {
            ssb_per_slot,
            ms_beams,
            ue_rx_beams,
            rescan_ms,
            post_access_period_ms,
            pre_access_period_ms,
            no_post_access,
            slots_per_frame,
            short_symbols,
        } => {
            let cfg = NrConfig {
                ssb_per_slot,
                slots_per_frame,
                pre_access_burst_period_us: ms_to_us(pre_access_period_ms, "pre-access-period-ms")?,
                post_access_burst_period_us: if no_post_access {
                    None
                } else {
                    Some(ms_to_us(post_access_period_ms, "post-access-period-ms")?)
                },
                symbol: if short_symbols {
                    SymbolDuration::Short
                } else {
                    SymbolDuration::Long
                },
                ..Default::default()
            };
            let latency = initial_scan_latency(&cfg, ue_rx_beams)?;
            let report = unblock_feasibility(&cfg, ms_beams, ms_to_us(rescan_ms, "rescan-ms")?)?;
            println!("initial scan         {latency:.3} s ({ue_rx_beams} dwells)");
            println!(
                "SSB burst airtime    {:.2} us",
                cfg.burst_airtime_ns() as f64 / 1e3
            );
            println!("{report}");
            if !report.fits && report.bursts_per_window > 0 && cfg.ssb_per_slot < 4 {
                println!(
                    "note                 try several MS beams per burst (--ssb-per-slot up to 4)"
                );
            }
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}
