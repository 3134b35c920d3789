//! Canonical coordinate names shared by the jet, flag and Cauchy charts.
//!
//! - independent variables `x1..xn`
//! - jet coordinates `u{alpha}_{sigma}` with the multi-index dot-separated,
//!   e.g. `u1_2.0.1`
//! - the distinguished last independent variable `t` of flag charts
//! - slopes of the Cauchy surface `tD_{B}`, e.g. `tD_1.1`
//! - inner derivatives `w{alpha}_{A}_{l}_{B}`, e.g. `w1_0.0_2_1.1`
//!
//! A zero multi-index is written with explicit length (`0.0`); the
//! length-zero index of the n = 1 charts prints as the empty string.

use crate::multiindex::MultiIndex;

pub fn x_name(i: usize) -> String {
    format!("x{i}")
}

pub const T_NAME: &str = "t";

/// Jet coordinate `u{alpha}_{sigma}`.
pub fn u_name(alpha: usize, sigma: &MultiIndex) -> String {
    format!("u{alpha}_{sigma}")
}

/// Flag/Cauchy coordinate `u{alpha}_{A}_{l}` for the derivative (A, l).
pub fn u_flag_name(alpha: usize, a: &MultiIndex, l: u32) -> String {
    format!("u{alpha}_{a}_{l}")
}

/// Cauchy-surface slope `tD_{B}`.
pub fn t_slope_name(b: &MultiIndex) -> String {
    format!("tD_{b}")
}

/// Inner derivative `w{alpha}_{A}_{l}_{B}`, the B-fold internal derivative
/// of the coordinate (A, l).
pub fn w_name(alpha: usize, a: &MultiIndex, l: u32, b: &MultiIndex) -> String {
    format!("w{alpha}_{a}_{l}_{b}")
}

/// Parses a jet coordinate name back into its parts; returns `None` for
/// names outside the `x{i}` / `u{alpha}_{sigma}` families.
pub fn parse_jet_coord(name: &str) -> Option<JetCoord> {
    if let Some(rest) = name.strip_prefix('x') {
        if let Ok(i) = rest.parse::<usize>() {
            if i >= 1 {
                return Some(JetCoord::X(i));
            }
        }
        return None;
    }
    let rest = name.strip_prefix('u')?;
    let underscore = rest.find('_')?;
    let alpha: usize = rest[..underscore].parse().ok()?;
    if alpha == 0 {
        return None;
    }
    let sigma: MultiIndex = rest[underscore + 1..].parse().ok()?;
    Some(JetCoord::U { alpha, sigma })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JetCoord {
    /// Independent variable `x{i}`, 1-based.
    X(usize),
    /// Jet coordinate of dependent variable `alpha` and derivative
    /// multi-index `sigma` (length n, order <= k).
    U { alpha: usize, sigma: MultiIndex },
}

/// Coordinate families of the flag and Cauchy charts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlagCoord {
    /// Spatial variable `x{a}`, a = 1..n-1.
    X(usize),
    /// The distinguished independent variable `t`.
    T,
    /// Jet coordinate `u{alpha}_{A}_{l}`.
    U { alpha: usize, a: MultiIndex, l: u32 },
    /// Cauchy-surface slope `tD_{B}`.
    TSlope(MultiIndex),
    /// Inner derivative `w{alpha}_{A}_{l}_{B}`.
    W {
        alpha: usize,
        a: MultiIndex,
        l: u32,
        b: MultiIndex,
    },
}

/// Parses a flag/Cauchy coordinate name; spatial indices must have length
/// `n - 1`.
pub fn parse_flag_coord(name: &str, n: usize) -> Option<FlagCoord> {
    if name == T_NAME {
        return Some(FlagCoord::T);
    }
    if let Some(rest) = name.strip_prefix("tD_") {
        let b: MultiIndex = rest.parse().ok()?;
        if b.len() != n - 1 {
            return None;
        }
        return Some(FlagCoord::TSlope(b));
    }
    if let Some(rest) = name.strip_prefix('x') {
        let a: usize = rest.parse().ok()?;
        if a >= 1 && a < n {
            return Some(FlagCoord::X(a));
        }
        return None;
    }
    if let Some(rest) = name.strip_prefix('u') {
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() != 3 {
            return None;
        }
        let alpha: usize = parts[0].parse().ok()?;
        let a: MultiIndex = parts[1].parse().ok()?;
        let l: u32 = parts[2].parse().ok()?;
        if alpha >= 1 && a.len() == n - 1 {
            return Some(FlagCoord::U { alpha, a, l });
        }
        return None;
    }
    if let Some(rest) = name.strip_prefix('w') {
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() != 4 {
            return None;
        }
        let alpha: usize = parts[0].parse().ok()?;
        let a: MultiIndex = parts[1].parse().ok()?;
        let l: u32 = parts[2].parse().ok()?;
        let b: MultiIndex = parts[3].parse().ok()?;
        if alpha >= 1 && a.len() == n - 1 && b.len() == n - 1 {
            return Some(FlagCoord::W { alpha, a, l, b });
        }
        return None;
    }
    None
}
