//! Independent numerical oracles backing the test suites.
//!
//! Everything here deliberately avoids the closed-form inverses and
//! incremental updates used by the library: path words are solved by grid
//! seeding plus Gauss-Newton on the forward kinematics, inner control
//! problems by discretized minimum-norm projection, and the vertex selection
//! by a literal full-recompute transcription. Deviations between the library
//! and these oracles indicate a bug on one side or the other.

pub mod di;
pub mod naive_dispersion;
pub mod rs;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use primgraph::State;

/// Random SE(2) states in a centered box, for steering comparisons.
pub fn random_se2_states(rng: &mut ChaCha8Rng, n: usize, half_extent: f64) -> Vec<State> {
    (0..n)
        .map(|_| {
            State::se2(
                rng.gen_range(-half_extent..half_extent),
                rng.gen_range(-half_extent..half_extent),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
        })
        .collect()
}

/// Random double-integrator states within the velocity box.
pub fn random_di_states(rng: &mut ChaCha8Rng, n: usize, half_extent: f64, v_max: f64) -> Vec<State> {
    (0..n)
        .map(|_| {
            State::pos_vel(
                rng.gen_range(-half_extent..half_extent),
                rng.gen_range(-half_extent..half_extent),
                rng.gen_range(-v_max..v_max),
                rng.gen_range(-v_max..v_max),
            )
        })
        .collect()
}
