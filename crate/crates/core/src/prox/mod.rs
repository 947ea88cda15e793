//! Linear operators, proximal functions and the conjugate calculus.

pub mod checks;
pub mod conjugate;
pub mod function;
pub mod linalg;
pub mod operator;
pub mod postcomposition;
pub mod quadratic;

pub type Vector = ndarray::Array1<f64>;

pub use conjugate::{
    compose, conjugate_of_postcomposition, conjugate_prox, Conjugate, PostcompositionConjugate,
    Reflected,
};
pub use function::{
    dot, max_abs_diff, norm2, project_l2inf_ball, project_linf_ball, prox_group_l21, prox_l1,
    FunctionRef, GroupL21, L1Norm, L2InfBall, LinfBall, ProxFunction, Zero,
};
pub use operator::{
    Adjoint, Boundary, CountingOperator, DenseOperator, Div2d, Grad2d, LinearOperator, OperatorRef,
    ScaledIdentity,
};
pub use postcomposition::{InfimalPostcomposition, JointSolution};
pub use quadratic::{project_affine, prox_quadratic, AffineProjector, QuadraticForm};
