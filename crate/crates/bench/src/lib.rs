//! Fixtures shared by the benchmarks.

use selfaffine::carpets::{carpet_to_ifs, CarpetSpec};
use selfaffine::ifs::planar_map;
use selfaffine::Ifs;

pub use selfaffine::ifs::sierpinski;

/// The 2×3 carpet with cells (0,0), (0,1), (1,0).
pub fn carpet() -> Ifs {
    carpet_to_ifs(&CarpetSpec::new(2, 3, [(0, 0), (0, 1), (1, 0)]).unwrap())
}

/// Four non-diagonal maps, so products do not commute.
pub fn sheared() -> Ifs {
    Ifs::new(vec![
        planar_map([[0.45, 0.1], [0.05, 0.3]], [0.0, 0.0]),
        planar_map([[0.4, -0.1], [0.1, 0.35]], [0.5, 0.0]),
        planar_map([[0.3, 0.15], [-0.05, 0.4]], [0.0, 0.5]),
        planar_map([[0.35, 0.0], [0.12, 0.3]], [0.5, 0.5]),
    ])
    .unwrap()
}
