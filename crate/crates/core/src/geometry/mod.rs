//! Finsler geometry at a point: fundamental tensor, spray, connections,
//! curvatures, volume forms.

mod linalg;
mod metric;
mod spray;
mod tensor;
mod volume;

pub use linalg::{invert, is_positive_definite, PIVOT_THRESHOLD};
pub use metric::{fundamental_tensor, MetricGeometry, ScalarFlag};
pub use spray::{Derivative, Spray};
pub use tensor::{multi_indices, Slot, TensorJet};
pub use volume::{
    busemann_hausdorff, gauss_legendre, riemannian_det, unit_ball_volume, volume_density, BhDensity,
    Quadrature,
};
