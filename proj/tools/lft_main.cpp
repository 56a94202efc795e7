#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lft/errors.hpp"
#include "lft/field.hpp"
#include "lft/poisson.hpp"

namespace {

// exit codes: 0 success, 1 usage, 2 transport, 3 format
constexpr int kUsageError = 1;
constexpr int kTransportError = 2;
constexpr int kFormatError = 3;

void print_report(const lft::ConvergenceReport& report) {
    char line[128];
    for (const auto& checkpoint : report.checkpoints) {
        std::snprintf(line, sizeof(line), "iter=%d residual=%.15g",
                      checkpoint.iteration, checkpoint.residual);
        std::cout << line << "\n";
    }
    std::snprintf(line, sizeof(line), "max_error=%.15g", report.max_error);
    std::cout << line << "\n";
}

int run_solve(const lft::PoissonConfig& config) {
    const lft::ConvergenceReport report = lft::run_poisson(config);
    if (config.backend == lft::Backend::inproc || config.rank == 0)
        print_report(report);
    return 0;
}

int run_inspect(const std::string& path) {
    const lft::FieldFileHeader header = lft::validate_field_file(path);
    std::string dims;
    for (std::size_t mu = 0; mu < header.dims.size(); ++mu) {
        if (mu > 0)
            dims += ",";
        dims += std::to_string(header.dims[mu]);
    }
    std::cout << "magic=ok version=" << header.version
              << " ndim=" << header.dims.size() << " dims=" << dims
              << " elem=" << header.element_size << "B sites=" << header.volume
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed lattice field toolkit"};
    app.require_subcommand(1);

    lft::PoissonConfig config;
    std::string backend = "inproc";
    double tol = 0.0;

    auto* solve = app.add_subcommand("solve", "Solve the 3D Poisson demo problem");
    solve->add_option("--dims", config.dims, "Lattice extents, e.g. 10,10,10")
        ->delimiter(',')
        ->expected(1, 3);
    solve->add_option("--iters", config.iterations, "Jacobi iterations");
    solve->add_option("--ranks", config.nranks, "Number of ranks");
    solve->add_option("--backend", backend, "inproc or tcp")
        ->check(CLI::IsMember({"inproc", "tcp"}));
    solve->add_option("--coordinator", config.coordinator,
                      "host:port of the rank-0 coordinator (tcp)");
    solve->add_option("--rank", config.rank, "Own rank (tcp)");
    solve->add_option("--listen", config.listen_port, "Own listen port (tcp)");
    solve->add_option("--seed", config.seed, "Lattice RNG seed");
    auto* tol_opt = solve->add_option("--tol", tol, "Stop once the residual drops below");
    solve->add_option("--out", config.output_path, "Output field file");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "Print a field file header");
    inspect->add_option("path", inspect_path, "Field file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (solve->parsed()) {
            config.backend = backend == "tcp" ? lft::Backend::tcp : lft::Backend::inproc;
            if (tol_opt->count() > 0)
                config.tol = tol;
            if (config.dims.size() != 3) {
                std::cerr << "error: --dims needs exactly 3 extents\n";
                return kUsageError;
            }
            return run_solve(config);
        }
        return run_inspect(inspect_path);
    } catch (const lft::ConnectionError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kTransportError;
    } catch (const lft::ProtocolError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kTransportError;
    } catch (const lft::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kFormatError;
    } catch (const lft::FileError& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kFormatError;
    } catch (const lft::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
}
