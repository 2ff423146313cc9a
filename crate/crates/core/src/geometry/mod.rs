//! Rectilinear domains, cubes, boundary subsets and the distance functions
//! `d(x)` and `d_F(x)`.

mod aabb;
mod boundary;
mod domain;

pub use aabb::{intersecting_pairs, max_open_depth, union_volume, Aabb, BoxIndex, Cube, FBox};
pub use boundary::BoundarySet;
pub use domain::RectilinearDomain;
