#pragma once

#include <vector>

#include "forestdsh/distribution.hpp"

namespace forestdsh {

/// Optimal tree-design parameters for a distribution and problem size.
struct HashParams {
    double mu = 0.0;
    double nu = 0.0;
    double eta = 0.0;
    double lambda = 1.0;
    double delta = 1.0;
    double p0 = 1.0;
    double q0 = 1.0;
    double log_p0 = 0.0;
    double log_q0 = 0.0;
    Matrix r_star;
    double n_star = 0.0;
    /// |constraint_value - 1| at the returned triple.
    double residual = 0.0;
};

struct SolverOptions {
    std::vector<double> grid_mu;
    std::vector<double> grid_nu;
    std::vector<double> grid_eta;
    double tolerance = 0.01;  // coarse-pass feasibility threshold T
    bool refine = true;

    /// {0, step, ..., max} for mu and nu; eta uses eta_step.
    static SolverOptions uniform(double grid_max, double step, double eta_step);
    /// mu, nu in {0, 0.1, ..., 20}; eta in {0, 0.05, ..., 20}; T = 0.01.
    static SolverOptions defaults() { return uniform(20.0, 0.1, 0.05); }
};

/// sum_ij exp((1+mu+nu-eta) log p_ij - mu log pA_i - nu log pB_j) over cells with p_ij > 0.
double constraint_value(const JointDistribution& jd, double mu, double nu, double eta);

/// (max(1,delta) + mu + nu*delta) / (1 + mu + nu - eta).
double lambda_of(double mu, double nu, double eta, double delta);

struct P0Q0 {
    double p0;
    double q0;
    double log_p0;
    double log_q0;
};

/// Products over nonzero cells: p0 = prod p_ij, q0 = min(prod q_ij, prod pA_i, prod pB_j).
P0Q0 compute_p0_q0(const JointDistribution& jd);

HashParams solve_params(const JointDistribution& jd, const ProblemDims& dims,
                        const SolverOptions& options = SolverOptions::defaults());

/// Smallest eta in [0, min(mu,nu)] with constraint_value = 1 (within 1e-9); negative if none exists.
double solve_eta(const JointDistribution& jd, double mu, double nu);

/// Depth constant c_d = (lambda - min(1,delta)) / |log max_ratio|.
double depth_constant(double lambda, double delta, double max_min_ratio);
/// max over nonzero cells of min(p_ij / pA_i, p_ij / pB_j).
double max_min_conditional(const JointDistribution& jd);

/// lambda + 3 c_d log(1 + epsilon).
double noise_complexity_bound(double lambda, double delta, double max_min_ratio, double epsilon);
double noise_complexity_bound(const HashParams& params, const JointDistribution& jd, double epsilon);

}  // namespace forestdsh
