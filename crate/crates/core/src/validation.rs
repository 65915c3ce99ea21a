//! Sanity checks on measurements before any regression.
//!
//! Efficiency `E(n) = C(n) / n` above 1 is logically impossible for a single system and
//! marks the dataset invalid. Shape irregularities are reported as soft flags only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting::{capacity_ratios, Dataset};

pub const DEFAULT_TOLERANCE: f64 = 0.005;
/// Knee: per-user gain below this fraction of the initial per-user gain.
pub const DEFAULT_KNEE_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// Hard: `E(n) > 1 + tolerance`.
    EfficiencyAboveOne,
    /// Capacity drops before the global maximum.
    DipBeforePeak,
    /// Capacity rises again after the global maximum.
    ReboundAfterPeak,
    DuplicateThroughput,
    ZeroThroughput,
}

impl Flag {
    pub fn is_hard(self) -> bool {
        matches!(self, Flag::EfficiencyAboveOne)
    }
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flag::EfficiencyAboveOne => "efficiency-above-one",
            Flag::DipBeforePeak => "dip-before-peak",
            Flag::ReboundAfterPeak => "rebound-after-peak",
            Flag::DuplicateThroughput => "duplicate-throughput",
            Flag::ZeroThroughput => "zero-throughput",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Clean,
    Suspect,
    Invalid,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Clean => "clean",
            Verdict::Suspect => "suspect",
            Verdict::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub n: f64,
    pub capacity: f64,
    pub efficiency: f64,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub rows: Vec<ValidationRow>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn hard_flagged(&self) -> impl Iterator<Item = &ValidationRow> {
        self.rows.iter().filter(|r| r.flags.iter().any(|f| f.is_hard()))
    }
}

fn format_loads(rows: &[&ValidationRow]) -> String {
    rows.iter().map(|r| r.n.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn validate_dataset(dataset: &Dataset, tolerance: f64) -> Result<ValidationReport> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be >= 0, got {tolerance}")));
    }
    let ratios = capacity_ratios(dataset)?;
    let mut rows: Vec<ValidationRow> = ratios
        .iter()
        .map(|&(n, capacity)| {
            let efficiency = capacity / n;
            let mut flags = Vec::new();
            if efficiency > 1.0 + tolerance {
                flags.push(Flag::EfficiencyAboveOne);
            }
            ValidationRow { n, capacity, efficiency, flags }
        })
        .collect();

    let peak = rows.iter().enumerate().fold(0, |best, (i, r)| if r.capacity > rows[best].capacity { i } else { best });
    for i in 1..rows.len() {
        let (prev, cur) = (rows[i - 1].capacity, rows[i].capacity);
        if i <= peak && cur < prev {
            rows[i].flags.push(Flag::DipBeforePeak);
        } else if i > peak && cur > prev {
            rows[i].flags.push(Flag::ReboundAfterPeak);
        }
    }
    for (i, p) in dataset.points().iter().enumerate() {
        if p.x == 0.0 {
            rows[i].flags.push(Flag::ZeroThroughput);
        } else if dataset.points()[..i].iter().any(|q| q.x == p.x) {
            rows[i].flags.push(Flag::DuplicateThroughput);
        }
    }

    let mut notes = Vec::new();
    let hard: Vec<&ValidationRow> = rows.iter().filter(|r| r.flags.iter().any(|f| f.is_hard())).collect();
    if !hard.is_empty() {
        notes.push(format!(
            "efficiency exceeds 100% (tolerance {tolerance}) at n = {}; check the measurement setup before fitting",
            format_loads(&hard)
        ));
    }
    for (flag, text) in [
        (Flag::DipBeforePeak, "capacity drops before the maximum at n = "),
        (Flag::ReboundAfterPeak, "capacity rises again after the maximum at n = "),
        (Flag::ZeroThroughput, "zero throughput at n = "),
        (Flag::DuplicateThroughput, "repeated throughput value at n = "),
    ] {
        let hit: Vec<&ValidationRow> = rows.iter().filter(|r| r.flags.contains(&flag)).collect();
        if !hit.is_empty() {
            notes.push(format!("{text}{}", format_loads(&hit)));
        }
    }

    let verdict = if !hard.is_empty() {
        Verdict::Invalid
    } else if rows.iter().any(|r| !r.flags.is_empty()) {
        Verdict::Suspect
    } else {
        Verdict::Clean
    };
    Ok(ValidationReport { tolerance, rows, verdict, notes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Rising,
    RisingThenSaturating,
    RisingThenRetrograde,
    Irregular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Profile {
    pub shape: Shape,
    /// Load with the largest throughput (first one on ties).
    pub peak_n: f64,
    pub knee_n: Option<f64>,
}

/// Classifies the throughput sequence by its discrete differences.
///
/// The knee is the first load whose forward per-user gain falls below
/// `knee_threshold` times the gain of the first segment.
pub fn monotonicity_profile(dataset: &Dataset, knee_threshold: f64) -> Result<Profile> {
    let pts = dataset.points();
    if pts.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: pts.len() });
    }
    if !(knee_threshold.is_finite() && knee_threshold > 0.0) {
        return Err(Error::Domain(format!("knee threshold must be > 0, got {knee_threshold}")));
    }
    let peak = pts.iter().enumerate().fold(0, |best, (i, p)| if p.x > pts[best].x { i } else { best });
    let gains: Vec<f64> = pts.windows(2).map(|w| (w[1].x - w[0].x) / (w[1].n - w[0].n)).collect();

    let dips_before = gains[..peak].iter().any(|&g| g < 0.0);
    let rises_after = gains[peak..].iter().any(|&g| g > 0.0);
    let falls_after = gains[peak..].iter().any(|&g| g < 0.0);

    let knee_n = if gains[0] > 0.0 {
        gains.iter().enumerate().skip(1).find(|(_, &g)| g < knee_threshold * gains[0]).map(|(i, _)| pts[i].n)
    } else {
        None
    };

    let shape = if dips_before || rises_after || peak == 0 {
        Shape::Irregular
    } else if falls_after {
        Shape::RisingThenRetrograde
    } else if knee_n.is_some() {
        Shape::RisingThenSaturating
    } else {
        Shape::Rising
    };
    Ok(Profile { shape, peak_n: pts[peak].n, knee_n })
}
