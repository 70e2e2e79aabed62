//! Design-point comparison for through-the-origin regression `y = beta x + e`.
//!
//! The least-squares variance of `beta` is `sigma^2 / S_x` with
//! `S_x = sum x_i^2`, so `S_x` is the information proxy for a design.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Design {
    points: Vec<f64>,
}

impl Design {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidData("design has no points".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite design point {p}")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Union with multiplicity.
    pub fn union(&self, other: &Design) -> Design {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Design { points }
    }

    pub fn scaled(&self, c: f64) -> Result<Design> {
        Design::new(self.points.iter().map(|p| p * c).collect())
    }

    /// `{i/9 : i = 0..9}`.
    pub fn base() -> Design {
        Design {
            points: (0..=9).map(|i| i as f64 / 9.0).collect(),
        }
    }

    /// The base design with every point measured twice.
    pub fn base_doubled() -> Design {
        Design::base().union(&Design::base())
    }

    /// The base design plus `{i/12 : i = 1..11, i != 6}`.
    pub fn interlaced() -> Design {
        let extra = Design {
            points: (1..=11).filter(|&i| i != 6).map(|i| i as f64 / 12.0).collect(),
        };
        Design::base().union(&extra)
    }

    pub fn preset(name: &str) -> Option<Design> {
        match name {
            "base" => Some(Design::base()),
            "base-doubled" => Some(Design::base_doubled()),
            "interlaced" => Some(Design::interlaced()),
            _ => None,
        }
    }
}

/// Parses a generator expression: comma-separated terms, each a number, a
/// fraction `a/b`, a range `a..=b/d` (meaning `i/d` for `i` in `a..=b`), or a
/// preset name.
impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut points = Vec::new();
        for term in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if let Some(d) = Design::preset(term) {
                points.extend(d.points);
            } else if let Some((range, den)) = term.split_once("..=") {
                let (hi, den) = den
                    .split_once('/')
                    .map(|(h, d)| (h, Some(d)))
                    .unwrap_or((den, None));
                let lo: i64 = parse_num(range, term)?;
                let hi: i64 = parse_num(hi, term)?;
                let den: f64 = match den {
                    Some(d) => parse_num(d, term)?,
                    None => 1.0,
                };
                if den == 0.0 || hi < lo {
                    return Err(Error::InvalidData(format!("bad range term '{term}'")));
                }
                points.extend((lo..=hi).map(|i| i as f64 / den));
            } else if let Some((a, b)) = term.split_once('/') {
                let a: f64 = parse_num(a, term)?;
                let b: f64 = parse_num(b, term)?;
                if b == 0.0 {
                    return Err(Error::InvalidData(format!("zero denominator in '{term}'")));
                }
                points.push(a / b);
            } else {
                points.push(parse_num(term, term)?);
            }
        }
        Design::new(points)
    }
}

fn parse_num<T: FromStr>(s: &str, term: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("cannot parse '{s}' in design term '{term}'")))
}

/// `S_x = sum x_i^2`.
pub fn sx(design: &Design) -> f64 {
    design.points.iter().map(|x| x * x).sum()
}

/// `sum (x_i - mean)^2`, for models with an intercept.
pub fn sx_centered(design: &Design) -> f64 {
    let mean = design.points.iter().sum::<f64>() / design.len() as f64;
    design.points.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// `S_x(b) / S_x(a)`, the inverse ratio of the estimator variances.
pub fn variance_ratio(a: &Design, b: &Design) -> Result<f64> {
    ratio_with(a, b, sx)
}

pub fn variance_ratio_centered(a: &Design, b: &Design) -> Result<f64> {
    ratio_with(a, b, sx_centered)
}

fn ratio_with(a: &Design, b: &Design, f: fn(&Design) -> f64) -> Result<f64> {
    let sa = f(a);
    if sa <= 0.0 {
        return Err(Error::Domain("reference design has zero S_x".into()));
    }
    Ok(f(b) / sa)
}

/// Values reported externally for a Bayesian testing measure on the doubled
/// and interlaced designs.
/// Carried in reports for contrast; nothing here reproduces it.
pub const EXTERNAL_BAYESIAN_VALUES: (f64, f64) = (0.346, 0.139);
