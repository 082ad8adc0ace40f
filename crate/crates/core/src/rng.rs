//! Counter-based Gaussian noise.
//!
//! Every normal variate is a pure function of `(master_seed, trial_index,
//! substep, index)`, so trials can run on any number of workers and still
//! reproduce bit-identical trajectories. The block cipher is Philox4x32-10.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Substep tag for the Ornstein-Uhlenbeck (or Euler-Maruyama) increment.
pub const SUBSTEP_DYNAMICS: u32 = 0;
/// Substep tag for initial-condition sampling.
pub const SUBSTEP_INIT: u32 = 1;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gaussian source for one trial.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    key: [u32; 2],
    cached: Option<(u64, u32, [f64; 2])>,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        let k = splitmix64(master_seed ^ splitmix64(trial_index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self { key: [k as u32, (k >> 32) as u32], cached: None }
    }

    fn block(&self, block: u64, substep: u32) -> [u32; 4] {
        philox4x32_10([block as u32, (block >> 32) as u32, substep, 0], self.key)
    }

    /// Two uniforms in (0, 1] and [0, 1) built from 53-bit mantissas.
    pub fn uniform_pair(&self, block: u64, substep: u32) -> (f64, f64) {
        let w = self.block(block, substep);
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let a = ((w[0] as u64) << 21) | ((w[1] as u64) >> 11);
        let b = ((w[2] as u64) << 21) | ((w[3] as u64) >> 11);
        ((a as f64 + 1.0) * SCALE, b as f64 * SCALE)
    }

    fn normal_block(&mut self, block: u64, substep: u32) -> [f64; 2] {
        if let Some((b, s, v)) = self.cached {
            if b == block && s == substep {
                return v;
            }
        }
        let (u1, u2) = self.uniform_pair(block, substep);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        let v = [r * c, r * s];
        self.cached = Some((block, substep, v));
        v
    }

    /// Standard normal variate number `index` of the given substep stream.
    #[inline]
    pub fn normal(&mut self, substep: u32, index: u64) -> f64 {
        self.normal_block(index >> 1, substep)[(index & 1) as usize]
    }

    /// Fill `out` with the normals for `step` of a `out.len()`-dimensional process.
    #[inline]
    pub fn fill_normals(&mut self, substep: u32, step: u64, out: &mut [f64]) {
        let d = out.len() as u64;
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.normal(substep, step * d + k as u64);
        }
    }
}
