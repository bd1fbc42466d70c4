//! Shared numerical kernels: quaternion algebra, the Xi matrix turning
//! rotated dot products into quadratic forms, small dense symmetric
//! eigenproblems (dimension <= 4), and overflow-safe log-domain scalars.

mod kernels;
mod linalg;
mod quat;

pub use kernels::{f_rot, log_diff_exp, log_f_rot, log_vmf_const, LogScale};
pub use linalg::{cholesky, gen_eig_pair, solve_linear, sym_eig, Mat3, Mat4, SymMat4, Vec3};
pub use quat::{xi_matrix, UnitQuaternion};
