#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "lft/errors.hpp"
#include "lft/rng.hpp"

namespace lft {

using GlobalIndex = std::int64_t;

/// Moves `coords` one step along direction `mu` (sign +1 or -1), in place.
/// The default is the torus rule: the coordinate wraps modulo the extent.
using TopologyFn =
    std::function<void(std::span<int> coords, int mu, int sign, std::span<const int> dims)>;

/// Assigns a global site index to a rank. The default is the contiguous
/// slab: rank r owns [floor(r*V/P), floor((r+1)*V/P)).
using PartitionFn = std::function<int(GlobalIndex global, GlobalIndex volume, int nranks)>;

TopologyFn torus_topology();
PartitionFn slab_partitioner();

struct LatticeSpec {
    std::vector<int> dims;    // one extent per dimension, each >= 1
    int nranks = 1;
    std::uint64_t seed = 0;
    TopologyFn topology;      // empty -> torus
    PartitionFn partitioner;  // empty -> slab
};

class Site;

/// Immutable topology and partitioning tables for one rank: the owner map,
/// neighbor tables for local sites, and the per-peer halo/send site lists
/// that drive field communication. Building the lattice is deterministic
/// and purely local; every rank can evaluate the partitioner for any site,
/// so the send lists mirror the peers' halo lists without any messages.
class Lattice {
  public:
    Lattice(LatticeSpec spec, int rank);

    int ndim() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    GlobalIndex volume() const { return volume_; }
    int rank() const { return rank_; }
    int nranks() const { return nranks_; }
    std::uint64_t seed() const { return seed_; }

    /// Lexicographic index with coordinate 0 slowest.
    GlobalIndex global_index(std::span<const int> coords) const;
    std::vector<int> coords(GlobalIndex global) const;
    void coords_into(GlobalIndex global, std::span<int> out) const;

    /// Global index of the site one step along mu (sign +1/-1).
    GlobalIndex neighbor(GlobalIndex global, int mu, int sign) const;

    int owner(GlobalIndex global) const;
    bool is_local(GlobalIndex global) const { return owner(global) == rank_; }

    /// Globally sorted indices owned by this rank.
    const std::vector<GlobalIndex>& local_sites() const { return local_sites_; }

    /// Per peer: sorted remote-owned indices this rank reads (ghost sites).
    const std::map<int, std::vector<GlobalIndex>>& halo_lists() const { return halo_lists_; }

    /// Per peer: sorted owned indices the peer reads. Mirrors the peer's
    /// halo list for this rank entry by entry.
    const std::map<int, std::vector<GlobalIndex>>& send_lists() const { return send_lists_; }

    /// Ranks this one exchanges messages with.
    std::vector<int> overlap_peers() const;

    /// Independent random stream for one site; identical for every rank
    /// layout hosting the site.
    RngStream site_rng(GlobalIndex global) const {
        check_site(global);
        return RngStream::for_site(seed_, global);
    }

    Site site(GlobalIndex global) const;
    Site site(std::span<const int> coords) const;

  private:
    void check_site(GlobalIndex global) const;

    std::vector<int> dims_;
    int nranks_;
    std::uint64_t seed_;
    TopologyFn topology_;
    PartitionFn partitioner_;
    int rank_;
    GlobalIndex volume_;
    std::vector<std::int32_t> owner_;
    std::vector<GlobalIndex> local_sites_;
    // neighbor tables for local sites: entry [ordinal * ndim + mu]
    std::vector<GlobalIndex> up_;
    std::vector<GlobalIndex> down_;
    std::map<int, std::vector<GlobalIndex>> halo_lists_;
    std::map<int, std::vector<GlobalIndex>> send_lists_;
};

/// Cursor over lattice sites. Supports coordinate access and +/- moves:
/// `x + mu` is the neighbor one step up in direction mu, `x - mu` one
/// step down.
class Site {
  public:
    Site(const Lattice& lattice, GlobalIndex global)
        : lattice_(&lattice), global_(global) {}

    GlobalIndex index() const { return global_; }
    const Lattice& lattice() const { return *lattice_; }

    /// Coordinate in direction mu.
    int x(int mu) const { return lattice_->coords(global_)[static_cast<std::size_t>(mu)]; }

    Site move(int mu, int sign) const {
        return Site(*lattice_, lattice_->neighbor(global_, mu, sign));
    }
    Site up(int mu) const { return move(mu, +1); }
    Site down(int mu) const { return move(mu, -1); }

    bool is_local() const { return lattice_->is_local(global_); }

    friend Site operator+(const Site& s, int mu) { return s.up(mu); }
    friend Site operator-(const Site& s, int mu) { return s.down(mu); }
    friend bool operator==(const Site& a, const Site& b) {
        return a.lattice_ == b.lattice_ && a.global_ == b.global_;
    }

  private:
    const Lattice* lattice_;
    GlobalIndex global_;
};

inline Site Lattice::site(GlobalIndex global) const {
    check_site(global);
    return Site(*this, global);
}

inline Site Lattice::site(std::span<const int> coords) const {
    return Site(*this, global_index(coords));
}

} // namespace lft
