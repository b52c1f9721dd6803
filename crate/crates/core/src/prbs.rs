//! Maximal-length LFSR pseudorandom bit sequences.

use crate::error::{Error, Result};

/// Feedback tap positions (1-based, MSB first) for maximal-length Fibonacci
/// LFSRs, orders 7..=37. Standard table (XAPP052).
const TAPS: [(u32, &[u32]); 31] = [
    (7, &[7, 6]),
    (8, &[8, 6, 5, 4]),
    (9, &[9, 5]),
    (10, &[10, 7]),
    (11, &[11, 9]),
    (12, &[12, 6, 4, 1]),
    (13, &[13, 4, 3, 1]),
    (14, &[14, 5, 3, 1]),
    (15, &[15, 14]),
    (16, &[16, 15, 13, 4]),
    (17, &[17, 14]),
    (18, &[18, 11]),
    (19, &[19, 6, 2, 1]),
    (20, &[20, 17]),
    (21, &[21, 19]),
    (22, &[22, 21]),
    (23, &[23, 18]),
    (24, &[24, 23, 22, 17]),
    (25, &[25, 22]),
    (26, &[26, 6, 2, 1]),
    (27, &[27, 5, 2, 1]),
    (28, &[28, 25]),
    (29, &[29, 27]),
    (30, &[30, 6, 4, 1]),
    (31, &[31, 28]),
    (32, &[32, 22, 2, 1]),
    (33, &[33, 20]),
    (34, &[34, 27, 2, 1]),
    (35, &[35, 33]),
    (36, &[36, 25]),
    (37, &[37, 5, 4, 3, 2, 1]),
];

#[derive(Debug, Clone)]
pub struct Prbs {
    state: u64,
    mask: u64,
    order: u32,
}

impl Prbs {
    pub fn new(order: u32, seed: u64) -> Result<Self> {
        let taps = TAPS
            .iter()
            .find(|(o, _)| *o == order)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::Contract(format!("PRBS order {order} not in [7, 37]")))?;
        let state_mask = (1u64 << order) - 1;
        let state = seed & state_mask;
        if state == 0 {
            return Err(Error::Contract("PRBS seed must be nonzero modulo 2^order".into()));
        }
        let mut mask = 0u64;
        for t in taps {
            mask |= 1u64 << (t - 1);
        }
        Ok(Self { state, mask, order })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Sequence period, `2^order - 1`.
    pub fn period(&self) -> u64 {
        (1u64 << self.order) - 1
    }

    pub fn next_bit(&mut self) -> u8 {
        // shift-left Fibonacci form matching the tap table: feedback is the
        // parity of the tapped bits, shifted into the LSB; output is the MSB
        let fb = ((self.state & self.mask).count_ones() & 1) as u64;
        let out = ((self.state >> (self.order - 1)) & 1) as u8;
        self.state = ((self.state << 1) | fb) & ((1u64 << self.order) - 1);
        out
    }

    pub fn state(&self) -> u64 {
        self.state
    }
}

/// Generates `n_bits` bits of the maximal-length sequence for `order`.
pub fn prbs_generate(order: u32, seed: u64, n_bits: usize) -> Result<Vec<u8>> {
    let mut lfsr = Prbs::new(order, seed)?;
    Ok((0..n_bits).map(|_| lfsr.next_bit()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn period_of(order: u32) -> u64 {
        let mut lfsr = Prbs::new(order, 1).unwrap();
        let start = lfsr.state();
        let mut n = 0u64;
        loop {
            lfsr.next_bit();
            n += 1;
            if lfsr.state() == start {
                return n;
            }
            assert!(n <= (1u64 << order), "period exceeds maximal length");
        }
    }

    #[test]
    fn order7_period_127() {
        assert_eq!(period_of(7), 127);
    }

    #[test]
    fn m_sequence_periods_orders_7_to_18() {
        for order in 7..=18 {
            assert_eq!(period_of(order), (1u64 << order) - 1, "order {order}");
        }
    }

    #[test]
    fn order15_balance() {
        // ones minus zeros = 1 over one full period of an m-sequence
        let bits = prbs_generate(15, 0x5a5a, (1 << 15) - 1).unwrap();
        let ones: i64 = bits.iter().map(|b| *b as i64).sum();
        let zeros = bits.len() as i64 - ones;
        assert_eq!(ones - zeros, 1);
    }

    #[test]
    fn run_length_property_order10() {
        // m-sequence run counts: runs of length k are half the runs of k-1
        let period = (1usize << 10) - 1;
        let bits = prbs_generate(10, 1, period).unwrap();
        let mut runs = std::collections::HashMap::new();
        let mut len = 1usize;
        for i in 1..bits.len() {
            if bits[i] == bits[i - 1] {
                len += 1;
            } else {
                *runs.entry(len).or_insert(0u32) += 1;
                len = 1;
            }
        }
        *runs.entry(len).or_insert(0) += 1;
        // length-1 runs should be about half of all runs
        let total: u32 = runs.values().sum();
        let ones = runs[&1];
        assert!((ones as f64 / total as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn determinism() {
        let a = prbs_generate(23, 99, 4096).unwrap();
        let b = prbs_generate(23, 99, 4096).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_seed_rejected() {
        assert!(Prbs::new(15, 0).is_err());
        assert!(Prbs::new(15, 1 << 20).is_err()); // zero modulo 2^15
    }

    #[test]
    fn out_of_range_order_rejected() {
        assert!(Prbs::new(6, 1).is_err());
        assert!(Prbs::new(38, 1).is_err());
    }

    #[test]
    fn order37_steps_without_repeat_prefix() {
        let mut lfsr = Prbs::new(37, 1).unwrap();
        let start = lfsr.state();
        for _ in 0..100_000 {
            lfsr.next_bit();
            assert_ne!(lfsr.state(), 0);
        }
        assert_ne!(lfsr.state(), start);
    }
}
