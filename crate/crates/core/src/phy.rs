//! Surrogate for the variable-depth semantic encoder and its channel.
//!
//! Accuracy and per-image latency are piecewise-linear in encoding depth,
//! pinned to a calibrated anchor table measured at 20 dB over AWGN. Other
//! SNRs scale accuracy by a logistic factor normalised to 1 at the reference
//! point; Rayleigh fading applies a fixed, uncalibrated penalty.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::LinkRecord;

const DEFAULT_ANCHORS: &str = include_str!("../data/anchors.json");

/// Midpoint of the SNR logistic, dB.
pub const SNR_MIDPOINT_DB: f64 = 0.0;
/// Slope scale of the SNR logistic, dB.
pub const SNR_SCALE_DB: f64 = 4.0;
/// Accuracy multiplier under Rayleigh fading.
pub const RAYLEIGH_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhyError {
    #[error("encoding depth {depth} outside [{min}, {max}]")]
    DepthOutOfRange { depth: i64, min: i64, max: i64 },
    #[error("unknown channel `{0}` (expected AWGN or Rayleigh)")]
    UnknownChannel(String),
    #[error("empty symbol vector")]
    EmptyInput,
    #[error("snr must be finite")]
    NonFiniteSnr,
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "AWGN")]
    Awgn,
    Rayleigh,
}

impl FromStr for Channel {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("awgn") {
            Ok(Channel::Awgn)
        } else if s.eq_ignore_ascii_case("rayleigh") {
            Ok(Channel::Rayleigh)
        } else {
            Err(PhyError::UnknownChannel(s.to_string()))
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Awgn => "AWGN",
            Channel::Rayleigh => "Rayleigh",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub depth: i64,
    pub accuracy: f64,
    pub latency_ms: f64,
}

/// Calibration file entry; either metric may be missing and is then filled
/// from its neighbours.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawAnchor {
    pub depth: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub reference_snr_db: f64,
    pub reference_channel: Channel,
    pub anchors: Vec<RawAnchor>,
}

/// Sorted anchors, strictly increasing in depth, accuracy and latency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorTable {
    anchors: Vec<Anchor>,
    reference_snr_db: f64,
}

fn fill(depths: &[i64], values: &[Option<f64>], what: &str) -> Result<Vec<f64>, PhyError> {
    (0..depths.len())
        .map(|i| {
            if let Some(v) = values[i] {
                return Ok(v);
            }
            let left = (0..i).rev().find(|&j| values[j].is_some());
            let right = (i + 1..depths.len()).find(|&j| values[j].is_some());
            match (left, right) {
                (Some(l), Some(r)) => {
                    let (vl, vr) = (values[l].unwrap(), values[r].unwrap());
                    let t = (depths[i] - depths[l]) as f64 / (depths[r] - depths[l]) as f64;
                    Ok(vl + (vr - vl) * t)
                }
                _ => Err(PhyError::InvalidCalibration(format!(
                    "{what} at depth {} has no neighbour on both sides",
                    depths[i]
                ))),
            }
        })
        .collect()
}

impl AnchorTable {
    pub fn new(anchors: Vec<Anchor>, reference_snr_db: f64) -> Result<Self, PhyError> {
        if anchors.len() < 2 {
            return Err(PhyError::InvalidCalibration("need at least two anchors".into()));
        }
        for w in anchors.windows(2) {
            if !(w[0].depth < w[1].depth
                && w[0].accuracy < w[1].accuracy
                && w[0].latency_ms < w[1].latency_ms)
            {
                return Err(PhyError::InvalidCalibration(format!(
                    "anchors at depths {} and {} are not strictly increasing",
                    w[0].depth, w[1].depth
                )));
            }
        }
        if anchors
            .iter()
            .any(|a| !(0.0..=1.0).contains(&a.accuracy) || a.latency_ms <= 0.0)
        {
            return Err(PhyError::InvalidCalibration(
                "accuracy must lie in [0,1] and latency be positive".into(),
            ));
        }
        Ok(AnchorTable {
            anchors,
            reference_snr_db,
        })
    }

    pub fn from_calibration(file: CalibrationFile) -> Result<Self, PhyError> {
        let mut raw = file.anchors;
        raw.sort_by_key(|a| a.depth);
        let depths: Vec<i64> = raw.iter().map(|a| a.depth).collect();
        let acc = fill(&depths, &raw.iter().map(|a| a.accuracy).collect::<Vec<_>>(), "accuracy")?;
        let lat = fill(
            &depths,
            &raw.iter().map(|a| a.latency_ms).collect::<Vec<_>>(),
            "latency",
        )?;
        let anchors = depths
            .iter()
            .zip(acc.into_iter().zip(lat))
            .map(|(&depth, (accuracy, latency_ms))| Anchor {
                depth,
                accuracy,
                latency_ms,
            })
            .collect();
        Self::new(anchors, file.reference_snr_db)
    }

    pub fn from_json(text: &str) -> Result<Self, PhyError> {
        let file: CalibrationFile = serde_json::from_str(text)
            .map_err(|e| PhyError::InvalidCalibration(e.to_string()))?;
        Self::from_calibration(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PhyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PhyError::InvalidCalibration(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The shipped calibration (depths 2, 6, 7, 8, 10, 12).
    pub fn shipped() -> Self {
        Self::from_json(DEFAULT_ANCHORS).expect("shipped anchors are valid")
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn reference_snr_db(&self) -> f64 {
        self.reference_snr_db
    }

    /// Piecewise-linear through the anchors; outside the anchored range the
    /// nearest segment is extended.
    fn interpolate(&self, depth: i64, field: impl Fn(&Anchor) -> f64) -> f64 {
        let a = &self.anchors;
        if let Some(hit) = a.iter().find(|x| x.depth == depth) {
            return field(hit);
        }
        let seg = match a.iter().position(|x| x.depth > depth) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => a.len() - 2,
        };
        let (l, r) = (&a[seg], &a[seg + 1]);
        let t = (depth - l.depth) as f64 / (r.depth - l.depth) as f64;
        field(l) + (field(r) - field(l)) * t
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Something that maps a link state to task accuracy and latency. The
/// surrogate is the only implementation shipped; a trained codec could be
/// plugged in behind the same interface.
pub trait CodecBackend: Send + Sync {
    fn depth_bounds(&self) -> (i64, i64);
    fn accuracy_at(&self, depth: i64, snr_db: f64, channel: Channel) -> Result<f64, PhyError>;
    fn latency_at(&self, depth: i64) -> Result<f64, PhyError>;
}

#[derive(Debug, Clone)]
pub struct Surrogate {
    table: AnchorTable,
    min_depth: i64,
    max_depth: i64,
}

impl Surrogate {
    pub fn new(table: AnchorTable, (min_depth, max_depth): (i64, i64)) -> Result<Self, PhyError> {
        let s = Surrogate {
            table,
            min_depth,
            max_depth,
        };
        // extrapolated ends must stay physical
        for d in [min_depth, max_depth] {
            let acc = s.table.interpolate(d, |a| a.accuracy);
            let lat = s.table.interpolate(d, |a| a.latency_ms);
            if !(0.0..=1.0).contains(&acc) || lat <= 0.0 {
                return Err(PhyError::InvalidCalibration(format!(
                    "extrapolation to depth {d} leaves the physical range"
                )));
            }
        }
        Ok(s)
    }

    pub fn shipped() -> Self {
        Self::new(AnchorTable::shipped(), (1, 12)).expect("shipped surrogate is valid")
    }

    pub fn table(&self) -> &AnchorTable {
        &self.table
    }

    fn check_depth(&self, depth: i64) -> Result<(), PhyError> {
        if depth < self.min_depth || depth > self.max_depth {
            return Err(PhyError::DepthOutOfRange {
                depth,
                min: self.min_depth,
                max: self.max_depth,
            });
        }
        Ok(())
    }

    /// Multiplicative SNR factor, exactly 1 at and above the reference SNR.
    pub fn snr_factor(&self, snr_db: f64) -> f64 {
        let reference = self.table.reference_snr_db;
        if snr_db >= reference {
            return 1.0;
        }
        let s = logistic((snr_db - SNR_MIDPOINT_DB) / SNR_SCALE_DB)
            / logistic((reference - SNR_MIDPOINT_DB) / SNR_SCALE_DB);
        s.clamp(0.0, 1.0)
    }
}

impl CodecBackend for Surrogate {
    fn depth_bounds(&self) -> (i64, i64) {
        (self.min_depth, self.max_depth)
    }

    fn accuracy_at(&self, depth: i64, snr_db: f64, channel: Channel) -> Result<f64, PhyError> {
        self.check_depth(depth)?;
        if snr_db.is_nan() {
            return Err(PhyError::NonFiniteSnr);
        }
        let base = self.table.interpolate(depth, |a| a.accuracy);
        let fading = match channel {
            Channel::Awgn => 1.0,
            Channel::Rayleigh => RAYLEIGH_FACTOR,
        };
        Ok((base * self.snr_factor(snr_db) * fading).clamp(0.0, 1.0))
    }

    fn latency_at(&self, depth: i64) -> Result<f64, PhyError> {
        self.check_depth(depth)?;
        Ok(self.table.interpolate(depth, |a| a.latency_ms))
    }
}

/// Adds zero-mean Gaussian noise whose variance is the measured signal power
/// divided by the linear SNR. Deterministic for a given seed.
pub fn awgn_channel(symbols: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>, PhyError> {
    if symbols.is_empty() {
        return Err(PhyError::EmptyInput);
    }
    if !snr_db.is_finite() {
        return Err(PhyError::NonFiniteSnr);
    }
    let power = symbols.iter().map(|x| x * x).sum::<f64>() / symbols.len() as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|_| PhyError::NonFiniteSnr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(symbols.iter().map(|x| x + normal.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub link_id: i64,
    pub accuracy: f64,
    pub latency_ms: f64,
    pub snr_db: f64,
    pub channel: Channel,
    pub depth: i64,
    pub t_ms: u64,
}

pub fn snapshot(
    codec: &dyn CodecBackend,
    link: &LinkRecord,
    t_ms: u64,
) -> Result<MetricsSnapshot, PhyError> {
    let channel: Channel = link.channel.parse()?;
    Ok(MetricsSnapshot {
        link_id: link.link_id,
        accuracy: codec.accuracy_at(link.encoding_depth, link.snr_db, channel)?,
        latency_ms: codec.latency_at(link.encoding_depth)?,
        snr_db: link.snr_db,
        channel,
        depth: link.encoding_depth,
        t_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s() -> Surrogate {
        Surrogate::shipped()
    }

    #[test]
    fn reported_anchor_points() {
        let s = s();
        for (d, acc) in [(7, 0.6899), (12, 0.9380), (2, 0.3497), (8, 0.7646), (10, 0.8591)] {
            assert_eq!(s.accuracy_at(d, 20.0, Channel::Awgn).unwrap(), acc, "depth {d}");
        }
        for (d, lat) in [(7, 105.3757), (12, 167.1618), (2, 43.3145), (8, 117.7153), (6, 93.2484)] {
            assert_eq!(s.latency_at(d).unwrap(), lat, "depth {d}");
        }
    }

    #[test]
    fn midpoint_between_adjacent_anchors() {
        let got = s().accuracy_at(9, 20.0, Channel::Awgn).unwrap();
        assert!((got - 0.81185).abs() < 1e-12, "{got}");
    }

    #[test]
    fn calibration_fills_gaps_linearly() {
        let t = AnchorTable::shipped();
        let d6 = t.anchors().iter().find(|a| a.depth == 6).unwrap();
        assert!((d6.accuracy - (0.3497 + (0.6899 - 0.3497) * 0.8)).abs() < 1e-15);
        let d10 = t.anchors().iter().find(|a| a.depth == 10).unwrap();
        assert!((d10.latency_ms - (117.7153 + 167.1618) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn depth_out_of_range() {
        assert!(matches!(
            s().accuracy_at(13, 20.0, Channel::Awgn),
            Err(PhyError::DepthOutOfRange { depth: 13, .. })
        ));
        assert!(s().latency_at(0).is_err());
        // depth 1 is extrapolated from the first segment
        let l1 = s().latency_at(1).unwrap();
        assert!(l1 > 0.0 && l1 < 43.3145);
    }

    #[test]
    fn rayleigh_and_low_snr_penalties() {
        let s = s();
        let awgn = s.accuracy_at(7, 20.0, Channel::Awgn).unwrap();
        assert_eq!(s.accuracy_at(7, 20.0, Channel::Rayleigh).unwrap(), awgn * 0.9);
        assert!(s.accuracy_at(7, 5.0, Channel::Awgn).unwrap() < awgn);
        assert_eq!(s.accuracy_at(7, 30.0, Channel::Awgn).unwrap(), awgn);
    }

    #[test]
    fn non_monotone_calibration_rejected() {
        let text = r#"{"reference_snr_db":20,"reference_channel":"AWGN","anchors":[
            {"depth":2,"accuracy":0.5,"latency_ms":10},{"depth":3,"accuracy":0.4,"latency_ms":20}]}"#;
        assert!(AnchorTable::from_json(text).is_err());
        let text = r#"{"reference_snr_db":20,"reference_channel":"AWGN","anchors":[
            {"depth":2,"latency_ms":10},{"depth":3,"accuracy":0.4,"latency_ms":20}]}"#;
        assert!(AnchorTable::from_json(text).is_err());
    }

    #[test]
    fn awgn_vanishing_noise() {
        let x: Vec<f64> = (0..64).map(|i| ((i as f64) * 0.3).sin()).collect();
        let y = awgn_channel(&x, 300.0, 1).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn awgn_empirical_snr() {
        let n = 100_000;
        // unit-power BPSK-like input
        let x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let y = awgn_channel(&x, 20.0, 42).unwrap();
        let noise: f64 = x.iter().zip(&y).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / n as f64;
        let snr = 10.0 * (1.0 / noise).log10();
        assert!((snr - 20.0).abs() <= 0.2, "{snr}");
        assert_eq!(y, awgn_channel(&x, 20.0, 42).unwrap());
        assert_ne!(y, awgn_channel(&x, 20.0, 43).unwrap());
    }

    #[test]
    fn awgn_errors() {
        assert_eq!(awgn_channel(&[], 20.0, 0), Err(PhyError::EmptyInput));
        assert_eq!(awgn_channel(&[1.0], f64::INFINITY, 0), Err(PhyError::NonFiniteSnr));
    }

    proptest! {
        #[test]
        fn accuracy_monotone_and_bounded(d in 1i64..12, snr in -20.0f64..40.0, ray in any::<bool>()) {
            let s = s();
            let ch = if ray { Channel::Rayleigh } else { Channel::Awgn };
            let lo = s.accuracy_at(d, snr, ch).unwrap();
            let hi = s.accuracy_at(d + 1, snr, ch).unwrap();
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!(hi >= lo);
            prop_assert!(s.accuracy_at(d, snr + 1.0, ch).unwrap() >= lo);
            prop_assert!(s.latency_at(d + 1).unwrap() > s.latency_at(d).unwrap());
        }
    }
}
