//! Fixed-width classical bit strings.
//!
//! The textual form is most-significant-bit first: for a register of width
//! `n`, the leftmost character is bit `n - 1` and the rightmost is bit `0`.
//! Bit `i` of a measurement result is classical bit `i`; bit `i` of a circuit
//! input is the basis value prepared on qubit `i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Widest bit string supported. Simulation caps qubit counts far below this.
pub const MAX_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitStringError {
    #[error("invalid character {0:?} in bit string (expected '0' or '1')")]
    InvalidChar(char),
    #[error("bit string width {0} exceeds the maximum of {MAX_WIDTH}")]
    TooWide(usize),
    #[error("value {value} does not fit in {width} bits")]
    ValueTooLarge { value: u64, width: usize },
}

/// A classical bit string of fixed width.
///
/// Ordering is by width first and then by numeric value, which for equal
/// widths coincides with lexicographic order of the textual form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    width: u8,
    value: u64,
}

impl BitString {
    pub fn new(value: u64, width: usize) -> Result<Self, BitStringError> {
        if width > MAX_WIDTH {
            return Err(BitStringError::TooWide(width));
        }
        if width < MAX_WIDTH && value >> width != 0 {
            return Err(BitStringError::ValueTooLarge { value, width });
        }
        Ok(Self {
            width: width as u8,
            value,
        })
    }

    /// The all-zero string of the given width.
    pub fn zeros(width: usize) -> Self {
        assert!(width <= MAX_WIDTH, "bit string too wide");
        Self {
            width: width as u8,
            value: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit `i` (0 = least significant, rightmost character).
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.width());
        (self.value >> i) & 1 == 1
    }

    pub fn with_bit_flipped(&self, i: usize) -> Self {
        debug_assert!(i < self.width());
        Self {
            width: self.width,
            value: self.value ^ (1 << i),
        }
    }

    /// Iterates all `2^width` strings in ascending order.
    pub fn all(width: usize) -> impl Iterator<Item = BitString> {
        assert!(width < MAX_WIDTH, "cannot enumerate {width}-bit space");
        (0..(1u64 << width)).map(move |v| BitString {
            width: width as u8,
            value: v,
        })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width()).rev() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = BitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let width = s.chars().count();
        if width > MAX_WIDTH {
            return Err(BitStringError::TooWide(width));
        }
        let mut value = 0u64;
        for c in s.chars() {
            value = match c {
                '0' => value << 1,
                '1' => (value << 1) | 1,
                other => return Err(BitStringError::InvalidChar(other)),
            };
        }
        Ok(Self {
            width: width as u8,
            value,
        })
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand used heavily in tests: parses a literal bit string, panicking on bad input.
pub fn bits(s: &str) -> BitString {
    s.parse().unwrap_or_else(|e| panic!("bad bit string {s:?}: {e}"))
}
