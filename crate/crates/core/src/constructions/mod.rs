//! Moser sequences, the bubble profile, Green functions and the test-function
//! family used for the lower bound.

mod bubble;
mod green;
mod moser;
mod test_family;

pub use bubble::{bubble_integral, bubble_integral_quadrature, BubbleProfile};
pub use green::{
    extract_a, green_l2_squared, green_solve, green_solve_on, log_model_disk_moment, richardson, upper_bound_value,
    AFit, AFitOptions, GreenDecomposition, RadialRemainder,
};
pub use moser::{
    moser_evaluate, moser_exp_functional, moser_moments, moser_normalized, moser_radius_bound, MoserEvaluation,
    MoserMoments, MoserSequence, RadialModel,
};
pub use test_family::{
    build_test_family, outer_mesh_check, test_family_lower_bound, GreenSummary, LowerBoundReport, TestFunctionFamily,
};
