use std::sync::Arc;

use admeq::prox::{
    conjugate_prox, Adjoint, Boundary, Conjugate, DenseOperator, Div2d, FunctionRef, Grad2d, GroupL21, L1Norm,
    L2InfBall, LinearOperator, LinfBall, QuadraticForm, Reflected, ScaledIdentity, Zero,
};
use admeq::rng::SeededRng;
use admeq::Vector;
use ndarray::array;

pub const DIM: usize = 6;
pub const TOL: f64 = 1e-10;
pub const TAUS: [f64; 3] = [0.1, 1.0, 10.0];

/// Conjugate pairs `(h, h*)` on ℝ⁶ with independently written oracles where possible.
pub fn conjugate_pairs() -> Vec<(&'static str, FunctionRef, FunctionRef)> {
    let c = array![0.5, -1.0, 2.0, 0.0, 0.3, -0.7];
    let l1: FunctionRef = Arc::new(L1Norm::new(DIM));
    let linf: FunctionRef = Arc::new(LinfBall::unit(DIM));
    let e = array![[1.0, 1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0, 2.0, 0.0]];
    let affine: FunctionRef = Arc::new(QuadraticForm::affine_indicator(e, array![1.0, 0.5]).unwrap());
    vec![
        ("l1", l1.clone(), linf.clone()),
        ("linf", linf.clone(), l1.clone()),
        (
            "weighted l1",
            Arc::new(L1Norm { dim: DIM, weight: 0.5 }),
            Arc::new(LinfBall { dim: DIM, radius: 0.5 }),
        ),
        ("group l21", Arc::new(GroupL21 { pixels: DIM / 2, weight: 1.0 }), Arc::new(L2InfBall { pixels: DIM / 2 })),
        (
            "squared distance",
            Arc::new(QuadraticForm::squared_distance(2.0, &c)),
            Arc::new(QuadraticForm::scaled_identity(0.5, c.clone(), 0.0)),
        ),
        ("zero", Arc::new(Zero { dim: DIM }), Arc::new(QuadraticForm::point_indicator(&Vector::zeros(DIM)))),
        ("affine indicator", affine.clone(), Arc::new(Conjugate::new(affine))),
        ("conjugate of l1", Arc::new(Conjugate::new(l1.clone())), l1.clone()),
        ("reflected l1", Reflected::shared(l1.clone()), Reflected::shared(linf.clone())),
        ("reflected conjugate", Reflected::shared(conjugate_prox(linf.clone())), Reflected::shared(linf)),
    ]
}

pub fn all_functions() -> Vec<(&'static str, FunctionRef)> {
    let mut out: Vec<_> = conjugate_pairs().into_iter().map(|(n, h, _)| (n, h)).collect();
    out.push(("l2inf ball", Arc::new(L2InfBall { pixels: DIM / 2 })));
    out.push(("point indicator", Arc::new(QuadraticForm::point_indicator(&Vector::ones(DIM)))));
    out
}

pub fn operators() -> Vec<(&'static str, Arc<dyn LinearOperator>)> {
    let mut rng = SeededRng::new(5);
    let grad = Grad2d::new(4, 5, Boundary::Periodic);
    vec![
        ("dense", DenseOperator::shared(rng.normal_matrix(7, 11))),
        ("grad periodic", Arc::new(grad)),
        ("grad neumann", Arc::new(Grad2d::new(5, 3, Boundary::Neumann))),
        ("div", Arc::new(Div2d { grad })),
        ("adjoint of dense", Adjoint::of(DenseOperator::shared(rng.normal_matrix(4, 9)))),
        ("adjoint of grad", Adjoint::of(Arc::new(grad))),
        ("scaled identity", ScaledIdentity::scaled(6, -2.5)),
    ]
}
