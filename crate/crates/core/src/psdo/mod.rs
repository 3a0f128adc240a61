//! Toroidal pseudo-differential operators, the noise channel bank and the
//! numerical cancellation constants.

mod bank;
mod dense;
mod estimate;
mod symbol;

pub use bank::{
    builtin_multiplier, symbol_from_table_file, BankDescription, BaseSymbolSpec, BuiltinSymbol, ChannelDescription,
    ChannelKind, Coefficient, CoefficientSpec, NoiseOperatorSpec, SymbolTableFile,
};
pub use dense::{adjoint_matrix, dense_matrix, low_pass_matrix, DenseMatrix, DENSE_LIMIT};
pub use estimate::{
    cancellation_pair_check, estimate_pair_ratio, estimate_symmetrized_order, estimate_xi, symmetrized_norms,
    SymmetrizedOrder, XiEstimate, ADMISSIBLE_SLOPE, SANDWICH_INDICES,
};
pub use symbol::{quantize_apply, FullSymbol};
