#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lft/field.hpp"
#include "lft/matrix.hpp"
#include "lft/transport.hpp"

namespace lft {

enum class Backend { inproc, tcp };

/// Demo problem: Jacobi iteration for the discrete Poisson equation
/// sum_mu [phi(x+mu) - 2 phi(x) + phi(x-mu)] = f(x) on a 3D torus, with
/// f(x) = A sin(2 pi x1 / L1) and phi initially zero.
struct PoissonConfig {
    std::vector<int> dims{10, 10, 10};
    int iterations = 1000;
    int nranks = 1;
    Backend backend = Backend::inproc;
    std::uint64_t seed = 0;
    std::string output_path = "phi.lfld";  // empty skips the save
    Matrix amplitude{2, 2, {1.0, I, 3.0, 1.0}};
    std::optional<double> tol;  // stop early once the residual drops below

    // tcp backend only
    std::string coordinator;
    int rank = 0;
    std::uint16_t listen_port = 0;
};

struct Checkpoint {
    int iteration;
    double residual;
};

/// Residuals at the reporting checkpoints plus the final deviation from
/// the analytic solution. Identical on every rank.
struct ConvergenceReport {
    std::vector<Checkpoint> checkpoints;
    double max_error = 0.0;
};

/// f(x) = A sin(2 pi x1 / L1); zero whenever the sine vanishes.
Matrix source_term(const Site& x, const Matrix& amplitude);

/// phi*(x) = A sin(2 pi x1 / L1) / (2 cos(2 pi / L1) - 2), the exact
/// solution of the discretized system with zero mean.
Matrix analytic_solution(const Site& x, const Matrix& amplitude);

/// One double-buffered sweep of the recurrence
///   phi(x) = (phi(x+0)+phi(x-0)+phi(x+1)+phi(x-1)+phi(x+2)+phi(x-2)-f(x))/6
/// over the local sites. All reads see the pre-sweep snapshot, so the
/// result is independent of sweep order and rank count. The halo must be
/// current on entry.
void jacobi_sweep(MatrixField& phi, const Matrix& amplitude);

/// max over all sites of the largest entry magnitude of
/// sum_mu [phi(x+mu)+phi(x-mu)] - 6 phi(x) - f(x). Identical on every rank.
double residual_inf(const MatrixField& phi, const Matrix& amplitude, Transport& transport);

/// max over all sites of the largest entry deviation from phi*.
double max_error_vs_analytic(const MatrixField& phi, const Matrix& amplitude,
                             Transport& transport);

/// Runs the solve on one endpoint. Collective; every rank returns the
/// same report.
ConvergenceReport poisson_worker(const PoissonConfig& config, Transport& transport);

/// Orchestrates the configured backend: inproc spawns one worker thread
/// per rank, tcp runs this process's single rank.
ConvergenceReport run_poisson(const PoissonConfig& config);

} // namespace lft
