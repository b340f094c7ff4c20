//! Discrete Hilbert space: masked grids, the `a`-weighted elliptic operator,
//! linear solves, quadrature and the `a`-inner product.

pub mod field_io;
pub mod mesh;
pub mod operator;
pub mod sparse;

pub use field_io::{read_field, write_field, write_field_to, FieldHeader};
pub use mesh::{build_mesh, DomainKind, DomainSpec, MaskGrid, Mesh};
pub use operator::{
    assemble_operator, compensated_sum, inner_a, quadrature, solve_linear, EllipticOperator, GridFunction,
    PreconditionerKind, DEFAULT_SOLVE_TOL,
};
