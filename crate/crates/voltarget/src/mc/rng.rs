//! Counter-based random numbers: draw `i` of path `p` under seed `s` is a
//! pure function of `(s, p, i)`, so batches are reproducible bit-for-bit on
//! any number of threads and any scheduling order.
//!
//! The generator is Philox 4x32-10 (multiply-hi/lo bijections with a Weyl key
//! schedule).  One block yields 128 bits; the top 64 feed a 53-bit uniform in
//! (0,1), which is mapped to a standard normal through the inverse CDF — no
//! rejection step, so the draw index never desynchronises.

use crate::special::inverse_norm_cdf;

const PHILOX_M0: u64 = 0xD251_1F53;
const PHILOX_M1: u64 = 0xCD9E_8D57;
const WEYL_0: u32 = 0x9E37_79B9;
const WEYL_1: u32 = 0xBB67_AE85;

#[inline]
fn philox_round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let p0 = PHILOX_M0 * ctr[0] as u64;
    let p1 = PHILOX_M1 * ctr[2] as u64;
    [
        (p1 >> 32) as u32 ^ ctr[1] ^ key[0],
        p1 as u32,
        (p0 >> 32) as u32 ^ ctr[3] ^ key[1],
        p0 as u32,
    ]
}

/// Ten Philox rounds on a 128-bit counter with a 64-bit key.
#[inline]
fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for _ in 0..10 {
        ctr = philox_round(ctr, key);
        key[0] = key[0].wrapping_add(WEYL_0);
        key[1] = key[1].wrapping_add(WEYL_1);
    }
    ctr
}

/// The random stream of one simulated path.
#[derive(Debug, Clone, Copy)]
pub struct RngStream {
    master_seed: u64,
    path_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        RngStream { master_seed, path_index }
    }

    /// Uniform draw in the open interval (0, 1) with 53 significant bits.
    pub fn uniform(&self, draw_index: u64) -> f64 {
        let ctr = [
            draw_index as u32,
            (draw_index >> 32) as u32,
            self.path_index as u32,
            (self.path_index >> 32) as u32,
        ];
        let key = [self.master_seed as u32, (self.master_seed >> 32) as u32];
        let out = philox4x32_10(ctr, key);
        let bits = ((out[0] as u64) << 32) | out[1] as u64;
        ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw via the inverse-CDF transform.
    pub fn normal(&self, draw_index: u64) -> f64 {
        inverse_norm_cdf(self.uniform(draw_index))
    }

    /// Fill `out` with the first `n` normal draws of this stream.
    pub fn fill_normals(&self, out: &mut Vec<f64>, n: usize) {
        out.clear();
        out.reserve(n);
        for i in 0..n {
            out.push(self.normal(i as u64));
        }
    }
}
