//! 5G NR resource arithmetic: how long an exhaustive SSB scan takes and
//! whether a discovery cadence fits the post-access burst schedule. All
//! times are integer microseconds so the results are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// OFDM symbols occupied by one SS/PBCH block.
const SYMBOLS_PER_SSB: u32 = 4;
const ALLOWED_SLOTS_PER_FRAME: [u32; 5] = [10, 20, 40, 80, 160];
const MAX_SSB_PER_SLOT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolDuration {
    /// 4.46 us
    Short,
    /// 8.92 us
    Long,
}

impl SymbolDuration {
    pub fn nanos(self) -> u64 {
        match self {
            SymbolDuration::Short => 4_460,
            SymbolDuration::Long => 8_920,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrConfig {
    pub ssb_beams: u32,
    pub pre_access_burst_period_us: u64,
    /// `None` when no bursts are scheduled after access.
    pub post_access_burst_period_us: Option<u64>,
    /// SSBs per slot, which is also how many MS receive beams can be tried
    /// within one burst.
    pub ssb_per_slot: u32,
    pub slots_per_frame: u32,
    pub symbol: SymbolDuration,
}

impl Default for NrConfig {
    fn default() -> Self {
        NrConfig {
            ssb_beams: 64,
            pre_access_burst_period_us: 20_000,
            post_access_burst_period_us: Some(5_000),
            ssb_per_slot: 1,
            slots_per_frame: 40,
            symbol: SymbolDuration::Long,
        }
    }
}

impl NrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ssb_beams == 0 {
            return Err(Error::invalid("ssb_beams", "must be >= 1"));
        }
        if self.pre_access_burst_period_us == 0 {
            return Err(Error::invalid("pre_access_burst_period_us", "must be > 0"));
        }
        if self.post_access_burst_period_us == Some(0) {
            return Err(Error::invalid("post_access_burst_period_us", "must be > 0"));
        }
        if !(1..=MAX_SSB_PER_SLOT).contains(&self.ssb_per_slot) {
            return Err(Error::invalid(
                "ssb_per_slot",
                format!("must be in 1..={MAX_SSB_PER_SLOT}"),
            ));
        }
        if !ALLOWED_SLOTS_PER_FRAME.contains(&self.slots_per_frame) {
            return Err(Error::invalid(
                "slots_per_frame",
                format!("must be one of {ALLOWED_SLOTS_PER_FRAME:?}"),
            ));
        }
        Ok(())
    }

    /// Airtime of one full SSB burst in nanoseconds.
    pub fn burst_airtime_ns(&self) -> u64 {
        u64::from(self.ssb_beams) * u64::from(SYMBOLS_PER_SSB) * self.symbol.nanos()
    }
}

/// Exact initial scan latency in microseconds: one pre-access burst period
/// of dwell per UE receive beam.
pub fn initial_scan_latency_us(cfg: &NrConfig, ue_rx_beams: u32) -> Result<u64> {
    cfg.validate()?;
    if ue_rx_beams == 0 {
        return Err(Error::invalid("ue_rx_beams", "must be >= 1"));
    }
    Ok(u64::from(ue_rx_beams) * cfg.pre_access_burst_period_us)
}

pub fn initial_scan_latency(cfg: &NrConfig, ue_rx_beams: u32) -> Result<f64> {
    Ok(initial_scan_latency_us(cfg, ue_rx_beams)? as f64 / 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub window_us: u64,
    pub bursts_per_window: u64,
    /// Bursts the MS needs to try each of its receive beams once.
    pub ms_bursts: u64,
    /// Bursts for the BS side; each burst sweeps every SSB beam once.
    pub bs_bursts: u64,
    /// Time spanned by the MS-side measurements; `None` without bursts.
    pub ms_span_us: Option<u64>,
    pub fits: bool,
    /// Spare bursts in the window; negative when it does not fit.
    pub slack_bursts: i64,
}

impl FeasibilityReport {
    pub fn bursts_needed(&self) -> u64 {
        self.ms_bursts + self.bs_bursts
    }
}

/// Whether one MS-side discovery over `ms_beams` receive beams plus one
/// BS-side sweep fit inside a rescan window after access.
pub fn unblock_feasibility(
    cfg: &NrConfig,
    ms_beams: u32,
    rescan_interval_us: u64,
) -> Result<FeasibilityReport> {
    cfg.validate()?;
    if ms_beams == 0 {
        return Err(Error::invalid("ms_beams", "must be >= 1"));
    }
    if rescan_interval_us == 0 {
        return Err(Error::invalid("rescan_interval_us", "must be > 0"));
    }
    let bursts_per_window = cfg
        .post_access_burst_period_us
        .map_or(0, |p| rescan_interval_us / p);
    let ms_bursts = u64::from(ms_beams.div_ceil(cfg.ssb_per_slot));
    let bs_bursts = 1;
    let needed = ms_bursts + bs_bursts;
    Ok(FeasibilityReport {
        window_us: rescan_interval_us,
        bursts_per_window,
        ms_bursts,
        bs_bursts,
        ms_span_us: cfg.post_access_burst_period_us.map(|p| ms_bursts * p),
        fits: bursts_per_window > 0 && needed <= bursts_per_window,
        slack_bursts: bursts_per_window as i64 - needed as i64,
    })
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "rescan window        {:.1} ms",
            self.window_us as f64 / 1e3
        )?;
        writeln!(f, "bursts per window    {}", self.bursts_per_window)?;
        writeln!(f, "MS-side bursts       {}", self.ms_bursts)?;
        writeln!(f, "BS-side bursts       {}", self.bs_bursts)?;
        match self.ms_span_us {
            Some(span) => writeln!(f, "MS-side span         {:.1} ms", span as f64 / 1e3)?,
            None => writeln!(f, "MS-side span         n/a (no bursts after access)")?,
        }
        writeln!(f, "slack                {} bursts", self.slack_bursts)?;
        write!(
            f,
            "verdict              {}",
            if self.fits { "fits" } else { "does not fit" }
        )
    }
}
