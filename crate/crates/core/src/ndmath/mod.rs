//! Dense double-precision kernels, seeded randomness, the parameter store and
//! a central-difference gradient checker.

mod gradcheck;
mod init;
mod params;
mod rng;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use init::{init, Init};
pub use params::{Grads, ParamId, ParamStore};
pub use rng::Rng;
pub use tensor::{binary, matvec, sigmoid, unary, Binary, Tensor, Unary};

pub(crate) use rng::fnv1a as rng_fnv1a;
pub(crate) use tensor::{gemm_nn_acc, gemm_nt_acc, gemm_tn_acc, gemv_acc, gemv_t_acc, outer_acc};
