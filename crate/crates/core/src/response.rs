//! Frequency grids and sampled complex responses.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sweep points in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyGrid {
    Linear { start: f64, stop: f64, points: usize },
    Log { start: f64, stop: f64, points: usize },
    List { freqs: Vec<f64> },
}

impl FrequencyGrid {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Self::Linear {
            start,
            stop,
            points,
        }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        Self::Log {
            start,
            stop,
            points,
        }
    }

    /// Symmetric linear grid of `2 * half_points + 1` samples around `center`.
    pub fn centered(center: f64, step: f64, half_points: usize) -> Self {
        let freqs = (0..=2 * half_points)
            .map(|i| center + (i as f64 - half_points as f64) * step)
            .collect();
        Self::List { freqs }
    }

    /// Materialize the grid, checking it is strictly increasing, finite and positive.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let freqs: Vec<f64> = match *self {
            Self::Linear {
                start,
                stop,
                points,
            } => {
                if points < 2 {
                    return Err(Error::InvalidArgument(
                        "a sweep needs at least 2 points".into(),
                    ));
                }
                let step = (stop - start) / (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        if i == points - 1 {
                            stop
                        } else {
                            start + step * i as f64
                        }
                    })
                    .collect()
            }
            Self::Log {
                start,
                stop,
                points,
            } => {
                if points < 2 {
                    return Err(Error::InvalidArgument(
                        "a sweep needs at least 2 points".into(),
                    ));
                }
                if !(start > 0.0 && stop > 0.0) {
                    return Err(Error::InvalidArgument(
                        "log sweep bounds must be positive".into(),
                    ));
                }
                let (a, b) = (start.ln(), stop.ln());
                (0..points)
                    .map(|i| {
                        if i == 0 {
                            start
                        } else if i == points - 1 {
                            stop
                        } else {
                            (a + (b - a) * i as f64 / (points - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
            Self::List { ref freqs } => freqs.clone(),
        };
        if freqs.is_empty() {
            return Err(Error::InvalidArgument("empty frequency grid".into()));
        }
        if freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidArgument(
                "frequencies must be finite and positive".into(),
            ));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(freqs)
    }
}

/// Ordered `(frequency, value)` samples of one complex quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub quantity: String,
    pub samples: Vec<(f64, Complex64)>,
}

#[derive(Serialize)]
struct CsvRow {
    freq_hz: f64,
    re: f64,
    im: f64,
    mag: f64,
    phase_deg: f64,
}

impl FrequencyResponse {
    pub fn new(quantity: impl Into<String>, samples: Vec<(f64, Complex64)>) -> Self {
        Self {
            quantity: quantity.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1.norm()).collect()
    }

    /// Phase in radians, unwrapped so that successive samples never jump by more than pi.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        unwrap_phase(self.samples.iter().map(|s| s.1.arg()))
    }

    pub fn unwrapped_phase_deg(&self) -> Vec<f64> {
        self.unwrapped_phase().into_iter().map(f64::to_degrees).collect()
    }

    /// Index of the sample closest to `freq`.
    pub fn nearest_index(&self, freq: f64) -> Option<usize> {
        self.samples
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 .0 - freq)
                    .abs()
                    .partial_cmp(&(b.1 .0 - freq).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
    }

    /// Pointwise product with another response on the identical grid.
    pub fn product(&self, other: &FrequencyResponse, quantity: &str) -> Result<Self> {
        if self.len() != other.len()
            || self
                .samples
                .iter()
                .zip(&other.samples)
                .any(|(a, b)| a.0 != b.0)
        {
            return Err(Error::InvalidArgument(
                "responses are sampled on different grids".into(),
            ));
        }
        Ok(Self::new(
            quantity,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| (a.0, a.1 * b.1))
                .collect(),
        ))
    }

    /// CSV with header `freq_hz,re,im,mag,phase_deg`; phase is unwrapped.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for ((f, v), phase) in self.samples.iter().zip(self.unwrapped_phase_deg()) {
            writer
                .serialize(CsvRow {
                    freq_hz: *f,
                    re: v.re,
                    im: v.im,
                    mag: v.norm(),
                    phase_deg: phase,
                })
                .map_err(|e| Error::Output(e.to_string()))?;
        }
        writer.flush().map_err(|e| Error::Output(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Output(e.to_string()))
    }
}

pub fn unwrap_phase(raw: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for p in raw {
        if let Some(last) = prev {
            let mut d = p - last;
            while d > PI {
                offset -= 2.0 * PI;
                d -= 2.0 * PI;
            }
            while d < -PI {
                offset += 2.0 * PI;
                d += 2.0 * PI;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

/// Wrap an angle in degrees into `[0, 360)`.
pub fn wrap_deg_positive(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wrap an angle in degrees into `(-180, 180]`.
pub fn wrap_deg_signed(deg: f64) -> f64 {
    let w = wrap_deg_positive(deg);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_grid_hits_endpoints() {
        let f = FrequencyGrid::linear(29.9e9, 30.1e9, 1001).frequencies().unwrap();
        assert_eq!(f.len(), 1001);
        assert_eq!(f[0], 29.9e9);
        assert_eq!(f[1000], 30.1e9);
        assert!((f[500] - 30e9).abs() < 1.0);
    }

    #[test]
    fn log_grid_is_geometric() {
        let f = FrequencyGrid::log(1e3, 1e6, 4).frequencies().unwrap();
        for (got, want) in f.iter().zip([1e3, 1e4, 1e5, 1e6]) {
            assert!((got / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(FrequencyGrid::linear(1.0, 2.0, 1).frequencies().is_err());
        assert!(FrequencyGrid::linear(2.0, 1.0, 3).frequencies().is_err());
        assert!(FrequencyGrid::linear(-1.0, 1.0, 3).frequencies().is_err());
        assert!(FrequencyGrid::log(0.0, 1.0, 3).frequencies().is_err());
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.0, -2.9, 3.1];
        let u = unwrap_phase(raw);
        assert!((u[1] - (2.0 * PI - 3.0)).abs() < 1e-12);
        assert!(u.windows(2).all(|w| (w[1] - w[0]).abs() < PI));
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_deg_positive(-90.0), 270.0);
        assert_eq!(wrap_deg_positive(720.0), 0.0);
        assert_eq!(wrap_deg_signed(270.0), -90.0);
        assert_eq!(wrap_deg_signed(180.0), 180.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = FrequencyResponse::new(
            "v",
            vec![(1.0, Complex64::new(0.5, 0.0)), (2.0, Complex64::new(0.0, 1.0))],
        );
        let text = r.to_csv_string().unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "freq_hz,re,im,mag,phase_deg");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "2.0,0.0,1.0,1.0,90.0");
    }
}
