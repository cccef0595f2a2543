//! Seed splitting: target `k` of a run with master seed `s` uses
//! `splitmix64(s + (k + 1)·0x9E3779B97F4A7C15)` (wrapping arithmetic).

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn target_seed(master: u64, id: u64) -> u64 {
    splitmix64(master.wrapping_add(id.wrapping_add(1).wrapping_mul(GOLDEN)))
}
