#include "lft/poisson.hpp"

#include <cmath>
#include <exception>
#include <thread>

#include "lft/bytes.hpp"
#include "lft/inproc.hpp"
#include "lft/lattice.hpp"
#include "lft/tcp.hpp"

namespace lft {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Precomputed per-rank sweep machinery: local slot offsets, the six
// neighbor slots per site, and the source values.
class Stencil {
  public:
    Stencil(const MatrixField& phi, const Matrix& amplitude) {
        const Lattice& lattice = phi.field().lattice();
        if (lattice.ndim() != 3)
            throw DomainError("the Poisson demo runs on 3D lattices");
        entries_ = phi.rows() * phi.cols();
        if (amplitude.rows() != phi.rows() || amplitude.cols() != phi.cols())
            throw DimensionError("amplitude shape does not match the field elements");
        const Field& field = phi.field();
        const auto& locals = lattice.local_sites();
        local_slots_.reserve(locals.size());
        neighbor_slots_.reserve(locals.size() * 6);
        source_.reserve(locals.size() * entries_);
        analytic_.reserve(locals.size() * entries_);
        const int extent1 = lattice.dims()[1];
        const double mode_scale = 1.0 / (2.0 * std::cos(2.0 * kPi / extent1) - 2.0);
        for (GlobalIndex g : locals) {
            local_slots_.push_back(field.slot_of(g));
            for (int mu = 0; mu < 3; ++mu) {
                neighbor_slots_.push_back(field.slot_of(lattice.neighbor(g, mu, +1)));
                neighbor_slots_.push_back(field.slot_of(lattice.neighbor(g, mu, -1)));
            }
            const int x1 = lattice.coords(g)[1];
            const double s = std::sin(2.0 * kPi * x1 / extent1);
            for (const Complex& a : amplitude.data()) {
                source_.push_back(a * s);
                analytic_.push_back(a * (s * mode_scale));
            }
        }
    }

    void sweep(MatrixField& phi, std::vector<std::uint8_t>& snapshot) const {
        Field& field = phi.field();
        const auto storage = field.storage();
        snapshot.assign(storage.begin(), storage.end());
        const std::uint8_t* snap = snapshot.data();
        const std::size_t elem = field.element_size();
        std::vector<std::uint8_t> encoded(elem);
        for (std::size_t k = 0; k < local_slots_.size(); ++k) {
            const std::size_t* nbr = neighbor_slots_.data() + k * 6;
            for (std::size_t e = 0; e < entries_; ++e) {
                Complex acc = load(snap, nbr[0], e);
                acc += load(snap, nbr[1], e);
                acc += load(snap, nbr[2], e);
                acc += load(snap, nbr[3], e);
                acc += load(snap, nbr[4], e);
                acc += load(snap, nbr[5], e);
                acc -= source_[k * entries_ + e];
                bytes::put_f64le(encoded.data() + e * 16, acc.real() / 6.0);
                bytes::put_f64le(encoded.data() + e * 16 + 8, acc.imag() / 6.0);
            }
            field.set_bytes(field.lattice().local_sites()[k], encoded);
        }
    }

    double local_residual(const MatrixField& phi) const {
        const Field& field = phi.field();
        const std::uint8_t* data = field.storage().data();
        double worst = 0.0;
        for (std::size_t k = 0; k < local_slots_.size(); ++k) {
            const std::size_t* nbr = neighbor_slots_.data() + k * 6;
            for (std::size_t e = 0; e < entries_; ++e) {
                Complex acc = load(data, nbr[0], e);
                acc += load(data, nbr[1], e);
                acc += load(data, nbr[2], e);
                acc += load(data, nbr[3], e);
                acc += load(data, nbr[4], e);
                acc += load(data, nbr[5], e);
                const Complex centre = load(data, local_slots_[k], e);
                acc -= Complex(6.0 * centre.real(), 6.0 * centre.imag());
                acc -= source_[k * entries_ + e];
                worst = std::max(worst, std::abs(acc));
            }
        }
        return worst;
    }

    double local_max_error(const MatrixField& phi) const {
        const Field& field = phi.field();
        const std::uint8_t* data = field.storage().data();
        double worst = 0.0;
        for (std::size_t k = 0; k < local_slots_.size(); ++k)
            for (std::size_t e = 0; e < entries_; ++e) {
                const Complex value = load(data, local_slots_[k], e);
                worst = std::max(worst,
                                 std::abs(value - analytic_[k * entries_ + e]));
            }
        return worst;
    }

  private:
    Complex load(const std::uint8_t* base, std::size_t slot, std::size_t entry) const {
        const std::uint8_t* p = base + (slot * entries_ + entry) * 16;
        return Complex(bytes::get_f64le(p), bytes::get_f64le(p + 8));
    }

    std::size_t entries_;
    std::vector<std::size_t> local_slots_;
    std::vector<std::size_t> neighbor_slots_;  // up/down interleaved, 6 per site
    std::vector<Complex> source_;
    std::vector<Complex> analytic_;
};

void validate(const PoissonConfig& config) {
    if (config.dims.size() != 3)
        throw ConfigError("the Poisson demo needs exactly 3 dims");
    if (config.iterations < 0)
        throw ConfigError("iterations must be non-negative");
    if (config.nranks < 1)
        throw ConfigError("nranks must be at least 1");
}

Lattice build_lattice(const PoissonConfig& config, int rank) {
    LatticeSpec spec;
    spec.dims = config.dims;
    spec.nranks = config.nranks;
    spec.seed = config.seed;
    return Lattice(spec, rank);
}

} // namespace

Matrix source_term(const Site& x, const Matrix& amplitude) {
    const int extent1 = x.lattice().dims().at(1);
    return amplitude * std::sin(2.0 * kPi * x.x(1) / extent1);
}

Matrix analytic_solution(const Site& x, const Matrix& amplitude) {
    const int extent1 = x.lattice().dims().at(1);
    const double scale = std::sin(2.0 * kPi * x.x(1) / extent1) /
                         (2.0 * std::cos(2.0 * kPi / extent1) - 2.0);
    return amplitude * scale;
}

void jacobi_sweep(MatrixField& phi, const Matrix& amplitude) {
    const Stencil stencil(phi, amplitude);
    std::vector<std::uint8_t> snapshot;
    stencil.sweep(phi, snapshot);
}

double residual_inf(const MatrixField& phi, const Matrix& amplitude,
                    Transport& transport) {
    const Stencil stencil(phi, amplitude);
    return reduce_max(transport, stencil.local_residual(phi));
}

double max_error_vs_analytic(const MatrixField& phi, const Matrix& amplitude,
                             Transport& transport) {
    const Stencil stencil(phi, amplitude);
    return reduce_max(transport, stencil.local_max_error(phi));
}

ConvergenceReport poisson_worker(const PoissonConfig& config, Transport& transport) {
    validate(config);
    if (transport.nranks() != config.nranks)
        throw ConfigError("transport has " + std::to_string(transport.nranks()) +
                          " ranks, config expects " + std::to_string(config.nranks));
    const Lattice lattice = build_lattice(config, transport.rank());
    MatrixField phi(lattice, config.amplitude.rows(), config.amplitude.cols());
    phi.update(transport);

    const Stencil stencil(phi, config.amplitude);
    ConvergenceReport report;
    const auto measure = [&] {
        return reduce_max(transport, stencil.local_residual(phi));
    };
    report.checkpoints.push_back(Checkpoint{0, measure()});

    std::vector<std::uint8_t> snapshot;
    for (int iteration = 1; iteration <= config.iterations; ++iteration) {
        stencil.sweep(phi, snapshot);
        phi.update(transport);
        const bool reporting =
            iteration % 100 == 0 || iteration == config.iterations;
        if (config.tol.has_value()) {
            const double residual = measure();
            const bool converged = residual < *config.tol;
            if (reporting || converged)
                report.checkpoints.push_back(Checkpoint{iteration, residual});
            if (converged)
                break;
        } else if (reporting) {
            report.checkpoints.push_back(Checkpoint{iteration, measure()});
        }
    }

    if (!config.output_path.empty())
        phi.save(config.output_path, transport);
    report.max_error = reduce_max(transport, stencil.local_max_error(phi));
    return report;
}

ConvergenceReport run_poisson(const PoissonConfig& config) {
    validate(config);
    if (config.backend == Backend::tcp) {
        TcpConfig tcp;
        tcp.rank = config.rank;
        tcp.nranks = config.nranks;
        tcp.coordinator = config.coordinator;
        tcp.listen_port = config.listen_port;
        auto transport = tcp_open(tcp);
        ConvergenceReport report = poisson_worker(config, *transport);
        transport->close();
        return report;
    }

    InprocHub hub(config.nranks);
    std::vector<ConvergenceReport> reports(static_cast<std::size_t>(config.nranks));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.nranks));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(config.nranks));
    for (int rank = 0; rank < config.nranks; ++rank)
        workers.emplace_back([&, rank] {
            try {
                auto transport = hub.connect(rank);
                reports[static_cast<std::size_t>(rank)] =
                    poisson_worker(config, *transport);
            } catch (...) {
                failures[static_cast<std::size_t>(rank)] = std::current_exception();
                hub.poison("worker rank " + std::to_string(rank) + " failed");
            }
        });
    for (auto& worker : workers)
        worker.join();
    for (const auto& failure : failures)
        if (failure)
            std::rethrow_exception(failure);
    return reports[0];
}

} // namespace lft
