use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{CMat, CVec, C64};

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(invalid(format!("Haar sampling needs d ≥ 2, got {d}")));
    }
    Ok(())
}

/// Uniformly random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn haar_random_state(d: usize, seed: u64) -> Result<CVec> {
    check_dim(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = CVec::from_fn(d, |_, _| complex_gaussian(&mut rng));
    let norm = v.norm();
    Ok(v / C64::new(norm, 0.0))
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_random_unitary(d: usize, seed: u64) -> Result<CMat> {
    check_dim(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = CMat::from_fn(d, d, |_, _| complex_gaussian(&mut rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            q[(row, k)] *= phase;
        }
    }
    Ok(q)
}
