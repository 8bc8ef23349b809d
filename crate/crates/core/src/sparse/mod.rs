//! Sparse storage, Matrix Market I/O and kernel execution plans.

mod bss;
mod csr;
mod mm;
mod partition;

pub use bss::{build_bss_plan, BssPlan, Slice};
pub use csr::{expand_symmetric, CsrMatrix, SymCsrMatrix};
pub use mm::{
    load_matrix_market, load_matrix_market_auto, parse_matrix_market_auto, parse_matrix_market, sym_to_matrix_market, to_matrix_market, write_matrix_market,
    LoadedMatrix,
};
pub use partition::{build_reduction_regions, build_row_partition, PartitionScheme, ReductionRegions, RowPartition};
