//! 3-way tensors and their CP decomposition.

mod factors;
mod jenrich;
mod linalg;
mod refine;
mod tensor;

pub use factors::{reconstruct_cp, truncate_rank, CpFactors};
pub use jenrich::{
    decompose_with_retries, jenrich_decompose, jenrich_decompose_with, JenrichOptions,
    DEFAULT_RETRIES,
};
pub use refine::refine_als;
pub use tensor::Tensor3;
