//! Channel domains, structured meshes and grids, and coarse partitions.

mod channel;
mod grid;
mod partition;
mod trimesh;
mod width;

pub use channel::{BcPreset, BoundaryTag, ChannelGeometry, Constriction, Side, SideTags};
pub use grid::{build_staggered_grid, build_staggered_grid_cells, FacePosition, StaggeredGrid};
pub use partition::{build_coarse_partition, default_target_h, CoarseCell, CoarseFace, CoarsePartition, NeumannFace};
pub use trimesh::{build_rect_tri_mesh, BoundaryEdge, EdgeTable, TriMesh};
pub use width::{width_field, WidthField};
