use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Computational basis label on `n` qubits, qubit 0 most significant.
///
/// Ordering is lexicographic on the string form, which for a fixed `n` is
/// the numeric order of the basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    n: usize,
    index: usize,
}

impl Bitstring {
    pub fn new(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n >= usize::BITS as usize {
            return Err(Error::InvalidBitstring(format!("{n} qubits")));
        }
        if index >> n != 0 {
            return Err(Error::InvalidBitstring(format!(
                "index {index} does not fit in {n} bits"
            )));
        }
        Ok(Self { n, index })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, index: 0 }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            n,
            index: (1 << n) - 1,
        }
    }

    /// Every bitstring on `n` qubits in ascending order.
    pub fn all(n: usize) -> impl Iterator<Item = Bitstring> {
        (0..1usize << n).map(move |index| Bitstring { n, index })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Value of qubit `q`.
    pub fn bit(&self, q: usize) -> bool {
        (self.index >> (self.n - 1 - q)) & 1 == 1
    }

    /// Copy with qubit `q` flipped.
    pub fn flipped(&self, q: usize) -> Self {
        Self {
            n: self.n,
            index: self.index ^ (1 << (self.n - 1 - q)),
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.index.count_ones()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() >= usize::BITS as usize {
            return Err(Error::InvalidBitstring(s.to_string()));
        }
        let mut index = 0usize;
        for c in s.chars() {
            index <<= 1;
            match c {
                '0' => {}
                '1' => index |= 1,
                _ => return Err(Error::InvalidBitstring(s.to_string())),
            }
        }
        Ok(Self { n: s.len(), index })
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
