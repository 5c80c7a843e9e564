//! Small numeric and hashing helpers shared across modules.

/// Least-squares slope of `log(y)` against `log(x)`; inputs must be positive.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "slope needs at least two points");
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// SplitMix64 round, used to derive independent per-path seeds from a base
/// seed without correlating adjacent streams.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th member of a Monte Carlo ensemble.
pub fn path_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
