#include "forestdsh/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace forestdsh {

namespace {

struct CellLogs {
    double log_p;
    double log_pa;
    double log_pb;
};

std::vector<CellLogs> support_logs(const JointDistribution& jd) {
    std::vector<CellLogs> cells;
    cells.reserve(jd.support().size());
    for (auto [i, j] : jd.support()) {
        cells.push_back({jd.log_p(i, j), jd.log_pa(i), jd.log_pb(j)});
    }
    return cells;
}

double constraint_from_cells(const std::vector<CellLogs>& cells, double mu, double nu, double eta) {
    double total = 0.0;
    const double e = 1.0 + mu + nu - eta;
    for (const auto& c : cells) {
        total += std::exp(e * c.log_p - mu * c.log_pa - nu * c.log_pb);
    }
    return total;
}

double eta_root(const std::vector<CellLogs>& cells, double mu, double nu) {
    double lo = 0.0;
    double hi = std::min(mu, nu);
    const double at_hi = constraint_from_cells(cells, mu, nu, hi);
    if (std::abs(at_hi - 1.0) <= 1e-12) {
        return hi;  // flat or exactly on the boundary; larger eta maximizes lambda
    }
    if (constraint_from_cells(cells, mu, nu, lo) > 1.0 + 1e-12 || at_hi < 1.0) {
        return -1.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (constraint_from_cells(cells, mu, nu, mid) < 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> arange(double max, double step) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor(max / step + 1e-9));
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        out.push_back(static_cast<double>(i) * step);
    }
    return out;
}

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || (i > 0 && grid[i] <= grid[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, std::string(name) + " grid must be non-negative ascending");
        }
    }
}

}  // namespace

SolverOptions SolverOptions::uniform(double grid_max, double step, double eta_step) {
    if (!(grid_max >= 0.0) || !(step > 0.0) || !(eta_step > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "grid max must be >= 0 and steps > 0");
    }
    SolverOptions o;
    o.grid_mu = arange(grid_max, step);
    o.grid_nu = o.grid_mu;
    o.grid_eta = arange(grid_max, eta_step);
    return o;
}

double constraint_value(const JointDistribution& jd, double mu, double nu, double eta) {
    return constraint_from_cells(support_logs(jd), mu, nu, eta);
}

double lambda_of(double mu, double nu, double eta, double delta) {
    return (std::max(1.0, delta) + mu + nu * delta) / (1.0 + mu + nu - eta);
}

double solve_eta(const JointDistribution& jd, double mu, double nu) {
    return eta_root(support_logs(jd), mu, nu);
}

P0Q0 compute_p0_q0(const JointDistribution& jd) {
    double log_p0 = 0.0;
    double log_q = 0.0;
    double log_pa = 0.0;
    double log_pb = 0.0;
    for (auto [i, j] : jd.support()) {
        log_p0 += jd.log_p(i, j);
        log_q += jd.log_pa(i) + jd.log_pb(j);
        log_pa += jd.log_pa(i);
        log_pb += jd.log_pb(j);
    }
    const double log_q0 = std::min({log_q, log_pa, log_pb});
    return {std::exp(log_p0), std::exp(log_q0), log_p0, log_q0};
}

HashParams solve_params(const JointDistribution& jd, const ProblemDims& dims, const SolverOptions& options) {
    dims.validate();
    check_grid(options.grid_mu, "mu");
    check_grid(options.grid_nu, "nu");
    check_grid(options.grid_eta, "eta");
    if (!(options.tolerance > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    }

    const auto cells = support_logs(jd);
    const double delta = dims.delta();
    const auto& etas = options.grid_eta;

    // Coarse pass. For fixed (mu, nu) the constraint is increasing in eta and lambda is
    // increasing in eta, so the best feasible grid eta is the largest one with value <= 1 + T.
    bool found = false;
    double best_lambda = -std::numeric_limits<double>::infinity();
    double best_mu = 0.0, best_nu = 0.0, best_eta = 0.0;
    for (double mu : options.grid_mu) {
        for (double nu : options.grid_nu) {
            const double cap = std::min(mu, nu);
            auto end = std::upper_bound(etas.begin(), etas.end(), cap + 1e-12);
            if (end == etas.begin()) {
                continue;
            }
            // largest index with value <= 1 + T
            std::ptrdiff_t lo = 0;
            std::ptrdiff_t hi = std::distance(etas.begin(), end) - 1;
            if (constraint_from_cells(cells, mu, nu, etas[0]) > 1.0 + options.tolerance) {
                continue;
            }
            while (lo < hi) {
                const std::ptrdiff_t mid = (lo + hi + 1) / 2;
                if (constraint_from_cells(cells, mu, nu, etas[mid]) <= 1.0 + options.tolerance) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            const double eta = etas[lo];
            if (std::abs(constraint_from_cells(cells, mu, nu, eta) - 1.0) > options.tolerance) {
                continue;
            }
            const double lam = lambda_of(mu, nu, eta, delta);
            if (lam > best_lambda) {
                found = true;
                best_lambda = lam;
                best_mu = mu;
                best_nu = nu;
                best_eta = eta;
            }
        }
    }
    if (!found) {
        throw Error(ErrorCode::NoFeasiblePoint, "no grid triple satisfies the constraint within T");
    }

    if (options.refine) {
        auto objective = [&](double mu, double nu, double& eta_out) {
            const double eta = eta_root(cells, mu, nu);
            if (eta < 0.0) {
                return -std::numeric_limits<double>::infinity();
            }
            eta_out = eta;
            return lambda_of(mu, nu, eta, delta);
        };
        double eta = 0.0;
        double current = objective(best_mu, best_nu, eta);
        if (std::isfinite(current)) {
            best_eta = eta;
            best_lambda = current;
            const double mu_lo = options.grid_mu.front(), mu_hi = options.grid_mu.back();
            const double nu_lo = options.grid_nu.front(), nu_hi = options.grid_nu.back();
            double step = options.grid_mu.size() > 1 ? options.grid_mu[1] - options.grid_mu[0] : 0.1;
            constexpr std::array<std::array<int, 2>, 8> dirs{
                {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
            for (int iter = 0; iter < 100000 && step > 1e-7; ++iter) {
                bool moved = false;
                for (const auto& d : dirs) {
                    const double mu = std::clamp(best_mu + d[0] * step, mu_lo, mu_hi);
                    const double nu = std::clamp(best_nu + d[1] * step, nu_lo, nu_hi);
                    double cand_eta = 0.0;
                    const double lam = objective(mu, nu, cand_eta);
                    if (lam > best_lambda + 1e-15) {
                        best_mu = mu;
                        best_nu = nu;
                        best_eta = cand_eta;
                        best_lambda = lam;
                        moved = true;
                        break;
                    }
                }
                if (!moved) {
                    step *= 0.5;
                }
            }
        }
    }

    HashParams hp;
    hp.mu = best_mu;
    hp.nu = best_nu;
    hp.eta = best_eta;
    hp.delta = delta;
    hp.lambda = lambda_of(best_mu, best_nu, best_eta, delta);
    hp.residual = std::abs(constraint_from_cells(cells, best_mu, best_nu, best_eta) - 1.0);
    const auto pq = compute_p0_q0(jd);
    hp.p0 = pq.p0;
    hp.q0 = pq.q0;
    hp.log_p0 = pq.log_p0;
    hp.log_q0 = pq.log_q0;

    hp.r_star = Matrix(jd.k(), jd.l());
    double kl_term = 0.0;
    const double e = 1.0 + hp.mu + hp.nu - hp.eta;
    for (auto [i, j] : jd.support()) {
        const double log_r = e * jd.log_p(i, j) - hp.mu * jd.log_pa(i) - hp.nu * jd.log_pb(j);
        const double r = std::exp(log_r);
        hp.r_star(i, j) = r;
        kl_term += r * (jd.log_p(i, j) - log_r);
    }
    const double numerator = (std::max(1.0, delta) - hp.lambda) * std::log(static_cast<double>(dims.n_classes));
    hp.n_star = kl_term < 0.0 ? numerator / kl_term : std::numeric_limits<double>::infinity();
    return hp;
}

double max_min_conditional(const JointDistribution& jd) {
    double best = 0.0;
    for (auto [i, j] : jd.support()) {
        best = std::max(best, std::min(jd.p(i, j) / jd.pa(i), jd.p(i, j) / jd.pb(j)));
    }
    return best;
}

double depth_constant(double lambda, double delta, double max_min_ratio) {
    const double denom = std::abs(std::log(max_min_ratio));
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw Error(ErrorCode::DegenerateRatio, "conditional ratio is 1 (deterministic distribution)");
    }
    return (lambda - std::min(1.0, delta)) / denom;
}

double noise_complexity_bound(double lambda, double delta, double max_min_ratio, double epsilon) {
    if (epsilon < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "epsilon must be non-negative");
    }
    return lambda + 3.0 * depth_constant(lambda, delta, max_min_ratio) * std::log1p(epsilon);
}

double noise_complexity_bound(const HashParams& params, const JointDistribution& jd, double epsilon) {
    return noise_complexity_bound(params.lambda, params.delta, max_min_conditional(jd), epsilon);
}

}  // namespace forestdsh
