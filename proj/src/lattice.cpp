#include "lft/lattice.hpp"

#include <algorithm>
#include <string>

namespace lft {

TopologyFn torus_topology() {
    return [](std::span<int> coords, int mu, int sign, std::span<const int> dims) {
        const int extent = dims[static_cast<std::size_t>(mu)];
        int c = coords[static_cast<std::size_t>(mu)] + sign;
        if (c < 0)
            c += extent;
        else if (c >= extent)
            c -= extent;
        coords[static_cast<std::size_t>(mu)] = c;
    };
}

PartitionFn slab_partitioner() {
    return [](GlobalIndex global, GlobalIndex volume, int nranks) {
        // rank r owns [floor(r*V/P), floor((r+1)*V/P)); invert by scanning
        // the candidate from the proportional estimate
        int r = static_cast<int>((static_cast<long double>(global) * nranks) / volume);
        if (r >= nranks)
            r = nranks - 1;
        while (r > 0 && global < (static_cast<GlobalIndex>(r) * volume) / nranks)
            --r;
        while (r + 1 < nranks && global >= (static_cast<GlobalIndex>(r + 1) * volume) / nranks)
            ++r;
        return r;
    };
}

Lattice::Lattice(LatticeSpec spec, int rank)
    : dims_(std::move(spec.dims)),
      nranks_(spec.nranks),
      seed_(spec.seed),
      topology_(spec.topology ? std::move(spec.topology) : torus_topology()),
      partitioner_(spec.partitioner ? std::move(spec.partitioner) : slab_partitioner()),
      rank_(rank) {
    if (dims_.empty() || dims_.size() > 10)
        throw ConfigError("lattice must have between 1 and 10 dimensions, got " +
                          std::to_string(dims_.size()));
    volume_ = 1;
    for (int extent : dims_) {
        if (extent < 1)
            throw ConfigError("lattice extent must be at least 1");
        volume_ *= extent;
    }
    if (nranks_ < 1)
        throw ConfigError("nranks must be at least 1");
    if (nranks_ > volume_)
        throw ConfigError("nranks " + std::to_string(nranks_) + " exceeds lattice volume " +
                          std::to_string(volume_));
    if (rank_ < 0 || rank_ >= nranks_)
        throw ConfigError("rank " + std::to_string(rank_) + " out of range for " +
                          std::to_string(nranks_) + " ranks");

    owner_.resize(static_cast<std::size_t>(volume_));
    for (GlobalIndex g = 0; g < volume_; ++g) {
        const int r = partitioner_(g, volume_, nranks_);
        if (r < 0 || r >= nranks_)
            throw ConfigError("partitioner returned rank " + std::to_string(r) +
                              " for site " + std::to_string(g));
        owner_[static_cast<std::size_t>(g)] = r;
        if (r == rank_)
            local_sites_.push_back(g);
    }

    // One pass over the whole volume builds both sides of the exchange:
    // halo lists from this rank's sites, send lists by replaying every
    // other rank's halo scan against the shared owner map.
    const int nd = ndim();
    std::vector<int> c(static_cast<std::size_t>(nd));
    for (GlobalIndex g = 0; g < volume_; ++g) {
        const int site_owner = owner_[static_cast<std::size_t>(g)];
        for (int mu = 0; mu < nd; ++mu)
            for (int sign : {+1, -1}) {
                coords_into(g, c);
                topology_(c, mu, sign, dims_);
                const GlobalIndex h = global_index(c);
                const int h_owner = owner_[static_cast<std::size_t>(h)];
                if (site_owner == rank_ && h_owner != rank_)
                    halo_lists_[h_owner].push_back(h);
                else if (site_owner != rank_ && h_owner == rank_)
                    send_lists_[site_owner].push_back(h);
            }
    }
    for (auto* lists : {&halo_lists_, &send_lists_})
        for (auto& [peer, sites] : *lists) {
            std::sort(sites.begin(), sites.end());
            sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
        }

    up_.resize(local_sites_.size() * static_cast<std::size_t>(nd));
    down_.resize(local_sites_.size() * static_cast<std::size_t>(nd));
    for (std::size_t k = 0; k < local_sites_.size(); ++k)
        for (int mu = 0; mu < nd; ++mu) {
            coords_into(local_sites_[k], c);
            topology_(c, mu, +1, dims_);
            up_[k * static_cast<std::size_t>(nd) + static_cast<std::size_t>(mu)] =
                global_index(c);
            coords_into(local_sites_[k], c);
            topology_(c, mu, -1, dims_);
            down_[k * static_cast<std::size_t>(nd) + static_cast<std::size_t>(mu)] =
                global_index(c);
        }
}

GlobalIndex Lattice::global_index(std::span<const int> coords) const {
    if (coords.size() != dims_.size())
        throw DomainError("coordinate count does not match lattice dimension");
    GlobalIndex idx = 0;
    for (std::size_t mu = 0; mu < dims_.size(); ++mu) {
        const int c = coords[mu];
        if (c < 0 || c >= dims_[mu])
            throw DomainError("coordinate " + std::to_string(c) + " out of range [0," +
                              std::to_string(dims_[mu]) + ") in direction " +
                              std::to_string(mu));
        idx = idx * dims_[mu] + c;
    }
    return idx;
}

void Lattice::coords_into(GlobalIndex global, std::span<int> out) const {
    check_site(global);
    GlobalIndex rest = global;
    for (std::size_t mu = dims_.size(); mu-- > 0;) {
        out[mu] = static_cast<int>(rest % dims_[mu]);
        rest /= dims_[mu];
    }
}

std::vector<int> Lattice::coords(GlobalIndex global) const {
    std::vector<int> c(dims_.size());
    coords_into(global, c);
    return c;
}

GlobalIndex Lattice::neighbor(GlobalIndex global, int mu, int sign) const {
    check_site(global);
    if (mu < 0 || mu >= ndim())
        throw DomainError("direction " + std::to_string(mu) + " out of range for " +
                          std::to_string(ndim()) + " dimensions");
    // local sites answer from the precomputed tables
    const auto it = std::lower_bound(local_sites_.begin(), local_sites_.end(), global);
    if (it != local_sites_.end() && *it == global) {
        const std::size_t k = static_cast<std::size_t>(it - local_sites_.begin());
        const auto& table = sign > 0 ? up_ : down_;
        return table[k * static_cast<std::size_t>(ndim()) + static_cast<std::size_t>(mu)];
    }
    std::vector<int> c(dims_.size());
    coords_into(global, c);
    topology_(c, mu, sign, dims_);
    return global_index(c);
}

int Lattice::owner(GlobalIndex global) const {
    check_site(global);
    return owner_[static_cast<std::size_t>(global)];
}

std::vector<int> Lattice::overlap_peers() const {
    std::vector<int> peers;
    for (const auto& [peer, sites] : halo_lists_)
        peers.push_back(peer);
    for (const auto& [peer, sites] : send_lists_)
        if (!halo_lists_.contains(peer))
            peers.push_back(peer);
    std::sort(peers.begin(), peers.end());
    return peers;
}

void Lattice::check_site(GlobalIndex global) const {
    if (global < 0 || global >= volume_)
        throw DomainError("site index " + std::to_string(global) + " out of range [0," +
                          std::to_string(volume_) + ")");
}

} // namespace lft
