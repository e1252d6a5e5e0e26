//! Relaxation solvers: separable concave maximization over a matroid
//! polytope for prophet instances, and the probing linear program, solved
//! by an exact rational simplex.

mod distribution;
mod probing;
mod prophet;
mod simplex;

pub use distribution::{DiscreteDistribution, DistributionDescriptor, TailFunction, PROB_SUM_TOL};
pub use probing::{
    adaptive_optimum, solve_probing_lp, ProbingInstance, ProbingLpSolution, ProbingRegion, ADAPTIVE_LIMIT,
    PROBING_LP_LIMIT,
};
pub use prophet::{solve_prophet_relaxation, ProphetRelaxation, PROPHET_LIMIT};
pub use simplex::{rational_from_f64, rational_to_f64, simplex_solve, LinearProgram, LpSolution, Rational};
