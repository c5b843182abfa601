//! Shared fixtures for the solver benchmarks.

use coopsched::{generate_instance, NetworkInstance, Placement, SystemParams};

/// Default-parameter instance with `n` sources, `m` relays, `n`
/// destinations and `t` slots.
pub fn fixture(seed: u64, n: usize, m: usize, t: usize) -> NetworkInstance {
    let params = SystemParams {
        slots: t,
        ..SystemParams::default()
    }
    .with_uniform_demand(n, t as u32);
    generate_instance(seed, n, m, n, params, Placement::PerPair).expect("fixture parameters are valid")
}
