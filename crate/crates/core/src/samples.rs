//! Measured bitstrings and their on-disk form.
//!
//! A bitstring is stored as the integer index of its basis state: qubit 0 is the most
//! significant of the `n_qubits` low bits. The binary file holds one little-endian `u64`
//! per sample with no separators; a JSON sidecar carries the metadata.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SAMPLES_FORMAT: &str = "rcsbench-samples/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub n_qubits: usize,
    pub bitstrings: Vec<u64>,
}

impl SampleSet {
    pub fn new(n_qubits: usize, bitstrings: Vec<u64>) -> Result<Self> {
        if n_qubits > 64 {
            return Err(Error::InvalidArgument(format!("{n_qubits} qubits do not fit a 64-bit word")));
        }
        let s = Self { n_qubits, bitstrings };
        s.check()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.bitstrings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bitstrings.is_empty()
    }

    fn mask(&self) -> u64 {
        if self.n_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_qubits) - 1
        }
    }

    fn check(&self) -> Result<()> {
        let mask = self.mask();
        if let Some(b) = self.bitstrings.iter().find(|&&b| b & !mask != 0) {
            return Err(Error::Format(format!("bitstring {b:#x} has more than {} bits", self.n_qubits)));
        }
        Ok(())
    }

    /// Bit of `qubit` in sample `b` (qubit 0 = most significant).
    pub fn bit(&self, b: u64, qubit: usize) -> bool {
        (b >> (self.n_qubits - 1 - qubit)) & 1 == 1
    }

    /// Text form of one sample, qubit 0 first.
    pub fn format_bitstring(&self, b: u64) -> String {
        (0..self.n_qubits).map(|q| if self.bit(b, q) { '1' } else { '0' }).collect()
    }

    /// Bits of the qubits in `keep`, in circuit order, as a smaller sample set.
    /// `circuit_qubits` names the qubit behind each bit position (position 0 = MSB).
    pub fn marginal(&self, circuit_qubits: &[usize], keep: &BTreeSet<usize>) -> Result<SampleSet> {
        if circuit_qubits.len() != self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "{} qubit labels for {}-qubit samples",
                circuit_qubits.len(),
                self.n_qubits
            )));
        }
        let n = self.n_qubits;
        let shifts: Vec<usize> =
            circuit_qubits.iter().enumerate().filter(|(_, q)| keep.contains(q)).map(|(i, _)| n - 1 - i).collect();
        let bitstrings = self
            .bitstrings
            .iter()
            .map(|&b| shifts.iter().fold(0u64, |acc, &s| (acc << 1) | ((b >> s) & 1)))
            .collect();
        Ok(SampleSet { n_qubits: shifts.len(), bitstrings })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(8 * self.len());
        for b in &self.bitstrings {
            buf.extend_from_slice(&b.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, n_qubits: usize) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() % 8 != 0 {
            return Err(Error::Format(format!("sample file length {} is not a multiple of 8", buf.len())));
        }
        let bitstrings = buf
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(n_qubits, bitstrings)
    }
}

/// JSON metadata written next to every binary sample file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub format: String,
    pub n_qubits: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub rng: String,
    /// Sampling model, e.g. `ideal`, `speckle(F=0.5)`, `trajectory+readout`.
    pub model: String,
    pub producer: String,
    /// Circuit file name, relative to the sidecar's directory.
    pub circuit_file: Option<String>,
    pub circuit_sha256: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bit_order_is_qubit_zero_first() {
        let s = SampleSet::new(4, vec![0b1000, 0b0001]).unwrap();
        assert!(s.bit(0b1000, 0));
        assert_eq!(s.format_bitstring(0b1000), "1000");
        assert_eq!(s.format_bitstring(0b0001), "0001");
    }

    #[test]
    fn rejects_oversized_words() {
        assert!(SampleSet::new(3, vec![8]).is_err());
        assert!(SampleSet::read_binary(&[0u8; 7][..], 3).is_err());
    }

    #[test]
    fn marginal_keeps_circuit_order() {
        let s = SampleSet::new(4, vec![0b1010, 0b0111]).unwrap();
        let m = s.marginal(&[10, 11, 12, 13], &[11, 13].into_iter().collect()).unwrap();
        assert_eq!(m.n_qubits, 2);
        assert_eq!(m.bitstrings, vec![0b00, 0b11]);
        assert!(s.marginal(&[1, 2], &BTreeSet::new()).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(n in 1usize..=64, raw in proptest::collection::vec(any::<u64>(), 0..50)) {
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let s = SampleSet::new(n, raw.into_iter().map(|b| b & mask).collect()).unwrap();
            let mut buf = Vec::new();
            s.write_binary(&mut buf).unwrap();
            prop_assert_eq!(buf.len(), 8 * s.len());
            prop_assert_eq!(SampleSet::read_binary(&buf[..], n).unwrap(), s);
        }
    }
}
