//! The two protocol hash functions, built from SHA-256 in counter mode.
//!
//! `H_1` maps bytes into `Z_n`: the digest stream is expanded to
//! `bitlen(n) + 64` bits and reduced, which keeps the modular bias below
//! `2^-64`. `H_2` maps bytes onto a `k`-bit string.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

const H1_DOMAIN: &[u8] = b"ringbid/H1";
const H2_DOMAIN: &[u8] = b"ringbid/H2";

/// Identifier written into parameter files.
pub const HASH_ALGORITHM: &str = "sha256-ctr";

/// Public description of the hash functions carried in the public parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashDescriptor {
    k: usize,
}

impl HashDescriptor {
    /// `k` is the output length of `H_2` in bits and must be at least 1.
    pub fn new(k: usize) -> Option<Self> {
        (k >= 1).then_some(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn algorithm(&self) -> &'static str {
        HASH_ALGORITHM
    }
}

fn expand(domain: &[u8], data: &[u8], out_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(out_len + 32);
    let mut counter: u32 = 0;
    while out.len() < out_len {
        let mut h = Sha256::new();
        h.update((domain.len() as u32).to_be_bytes());
        h.update(domain);
        h.update(counter.to_be_bytes());
        h.update(data);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(out_len);
    out
}

/// `H_1`: bytes to an integer in `[0, n)`.
pub fn hash_to_zn(data: &[u8], n: &BigUint) -> BigUint {
    let bits = n.bits() as usize + 64;
    let wide = BigUint::from_bytes_be(&expand(H1_DOMAIN, data, bits.div_ceil(8)));
    wide % n
}

/// `H_2`: bytes to exactly `k` bits, most significant first.
pub fn hash_to_bits(data: &[u8], k: usize) -> Vec<bool> {
    let bytes = expand(H2_DOMAIN, data, k.div_ceil(8));
    (0..k)
        .map(|j| bytes[j / 8] >> (7 - j % 8) & 1 == 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    #[test]
    fn zn_is_deterministic_and_in_range() {
        let n = BigUint::from(1_000_003u64 * 999_983u64);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let len = rng.gen_range(0..64);
            let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let v = hash_to_zn(&data, &n);
            assert!(v < n);
            assert_eq!(v, hash_to_zn(&data, &n));
        }
    }

    #[test]
    fn zn_residues_look_uniform_mod_35() {
        // Oracle: each residue count is Binomial(N, 1/35); require every count
        // within 5 standard deviations and a chi-square far below the 34-dof tail.
        let n = BigUint::from(35u32);
        let trials = 10_000u32;
        let mut counts = [0u32; 35];
        for i in 0..trials {
            let v = hash_to_zn(&i.to_be_bytes(), &n);
            counts[v.to_u32_digits().first().copied().unwrap_or(0) as usize] += 1;
        }
        let expected = trials as f64 / 35.0;
        let sigma = (trials as f64 * (1.0 / 35.0) * (34.0 / 35.0)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts {
            assert!((c as f64 - expected).abs() <= 5.0 * sigma, "count {c}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        assert!(chi2 < 80.0, "chi2 = {chi2}");
    }

    #[test]
    fn bits_have_requested_length() {
        for k in [1, 7, 8, 160, 256] {
            let out = hash_to_bits(b"bid", k);
            assert_eq!(out.len(), k);
            assert_eq!(out, hash_to_bits(b"bid", k));
        }
    }

    #[test]
    fn bits_do_not_collide_on_distinct_inputs() {
        let mut seen = HashSet::new();
        for i in 0u32..1000 {
            assert!(seen.insert(hash_to_bits(&i.to_le_bytes(), 160)));
        }
    }

    #[test]
    fn domains_are_separated() {
        let n = BigUint::from(1u64 << 60);
        let h1 = hash_to_zn(b"x", &n);
        let h2 = hash_to_bits(b"x", 60);
        let h2_int = h2.iter().fold(0u64, |acc, &b| acc << 1 | b as u64);
        assert_ne!(h1, BigUint::from(h2_int));
    }

    #[test]
    fn descriptor_rejects_zero_width() {
        assert!(HashDescriptor::new(0).is_none());
        assert_eq!(HashDescriptor::new(160).unwrap().k(), 160);
    }
}
