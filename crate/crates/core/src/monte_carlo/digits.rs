use rand::Rng;

// 3^40 < 2^64 < 2·3^40
const TRIT_BLOCK: u64 = 12_157_665_459_056_928_801;
const TRITS_PER_BLOCK: u32 = 40;

/// Unbiased base-3 and base-2 digits cut from 64-bit draws.
pub struct Digits<'a, R: Rng> {
    rng: &'a mut R,
    trits: u64,
    n_trits: u32,
    bits: u64,
    n_bits: u32,
}

impl<'a, R: Rng> Digits<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        Digits {
            rng,
            trits: 0,
            n_trits: 0,
            bits: 0,
            n_bits: 0,
        }
    }

    /// Uniform on {0, 1, 2}.
    #[inline]
    pub fn trit(&mut self) -> u8 {
        if self.n_trits == 0 {
            loop {
                let x = self.rng.next_u64();
                if x < TRIT_BLOCK {
                    self.trits = x;
                    break;
                }
            }
            self.n_trits = TRITS_PER_BLOCK;
        }
        let t = (self.trits % 3) as u8;
        self.trits /= 3;
        self.n_trits -= 1;
        t
    }

    /// Uniform on {0, 1}.
    #[inline]
    pub fn bit(&mut self) -> bool {
        if self.n_bits == 0 {
            self.bits = self.rng.next_u64();
            self.n_bits = 64;
        }
        let b = self.bits & 1 == 1;
        self.bits >>= 1;
        self.n_bits -= 1;
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_constant() {
        assert_eq!(3u64.pow(40), TRIT_BLOCK);
        assert!(TRIT_BLOCK.checked_mul(2).is_none());
    }

    #[test]
    fn digits_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = Digits::new(&mut rng);
        let n = 300_000;
        let mut t = [0u32; 3];
        let mut b = [0u32; 2];
        for _ in 0..n {
            t[d.trit() as usize] += 1;
            b[d.bit() as usize] += 1;
        }
        let sd3 = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in t {
            assert!((c as f64 - n as f64 / 3.0).abs() < 4.0 * sd3);
        }
        let sd2 = (n as f64 * 0.25).sqrt();
        assert!((b[0] as f64 - n as f64 / 2.0).abs() < 4.0 * sd2);
    }
}
