//! Unit conventions and conversions.
//!
//! Internally lengths are nanometres, device time is nanoseconds, network
//! time is milliseconds and energy is femtojoules. SI values only appear at
//! the boundaries below.

pub const NM_PER_M: f64 = 1e9;
pub const NS_PER_S: f64 = 1e9;
pub const NS_PER_MS: f64 = 1e6;
pub const FJ_PER_J: f64 = 1e15;

#[inline]
pub fn nm_to_m(nm: f64) -> f64 {
    nm / NM_PER_M
}

#[inline]
pub fn s_to_ns(s: f64) -> f64 {
    s * NS_PER_S
}

#[inline]
pub fn ms_to_ns(ms: f64) -> f64 {
    ms * NS_PER_MS
}

#[inline]
pub fn ns_to_ms(ns: f64) -> f64 {
    ns / NS_PER_MS
}

#[inline]
pub fn j_to_fj(j: f64) -> f64 {
    j * FJ_PER_J
}

/// Cross-section in m² of a track `width_nm` wide and `thickness_nm` thick.
#[inline]
pub fn cross_section_m2(width_nm: f64, thickness_nm: f64) -> f64 {
    nm_to_m(width_nm) * nm_to_m(thickness_nm)
}
