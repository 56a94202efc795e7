#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "lft/lattice.hpp"
#include "lft/matrix.hpp"
#include "lft/transport.hpp"

namespace lft {

/// Per-rank storage for one fixed-size element per site. The local block
/// holds the owned sites in global order; one halo block per overlapping
/// peer follows, in ascending peer rank, each in the (sorted) order of
/// that peer's halo list. Sites synchronized with the same peer are
/// therefore contiguous, so update() moves each pair's data in a single
/// message and receives straight into the halo block.
///
/// Storage holds the encoded element bytes; typed wrappers encode/decode
/// on access. Everything is zero-initialized.
class Field {
  public:
    Field(const Lattice& lattice, std::size_t element_size);

    const Lattice& lattice() const { return *lattice_; }
    std::size_t element_size() const { return element_size_; }
    std::size_t local_count() const { return local_count_; }
    std::size_t halo_count() const { return slot_count_ - local_count_; }

    bool has_slot(GlobalIndex global) const { return slot_.contains(global); }

    /// Slot ordinal of a local or halo site.
    std::size_t slot_of(GlobalIndex global) const;

    /// Readable bytes for a local or halo site.
    std::span<const std::uint8_t> get_bytes(GlobalIndex global) const;

    /// Writes a local site. Halo copies are read-only by design.
    void set_bytes(GlobalIndex global, std::span<const std::uint8_t> value);

    std::span<const std::uint8_t> storage() const { return storage_; }

    /// Halo exchange: one message to and one from every overlapping peer,
    /// ordered by the deadlock-free pairwise plan. Afterwards every halo
    /// slot equals the owner's current value.
    void update(Transport& transport);

    /// Collective. Rank 0 writes the header plus all sites in canonical
    /// global order; other ranks stream their local blocks to rank 0.
    void save(const std::string& path, Transport& transport) const;

    /// Collective. Rank 0 reads and scatters local blocks. Halo blocks
    /// are not refreshed; call update() before reading neighbors.
    void load(const std::string& path, Transport& transport);

  private:
    std::span<std::uint8_t> slot_bytes(std::size_t slot) {
        return {storage_.data() + slot * element_size_, element_size_};
    }
    std::span<const std::uint8_t> slot_bytes(std::size_t slot) const {
        return {storage_.data() + slot * element_size_, element_size_};
    }

    friend std::vector<std::uint8_t> gather_global(const Field& field, Transport& transport);

    const Lattice* lattice_;
    std::size_t element_size_;
    std::size_t local_count_;
    std::size_t slot_count_;
    std::vector<std::uint8_t> storage_;
    std::unordered_map<GlobalIndex, std::size_t> slot_;
    struct HaloBlock {
        int peer;
        std::size_t first_slot;
        std::size_t count;
    };
    std::vector<HaloBlock> halo_blocks_;  // ascending peer rank
};

/// Full field in canonical global order on rank 0 (empty elsewhere).
std::vector<std::uint8_t> gather_global(const Field& field, Transport& transport);

/// Field of fixed-shape complex matrices. Elements serialize row-major,
/// each entry as two little-endian f64 (re, im).
class MatrixField {
  public:
    MatrixField(const Lattice& lattice, std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Matrix get(GlobalIndex global) const;
    Matrix get(const Site& site) const { return get(site.index()); }
    Matrix operator()(const Site& site) const { return get(site.index()); }

    void set(GlobalIndex global, const Matrix& value);
    void set(const Site& site, const Matrix& value) { set(site.index(), value); }

    void update(Transport& transport) { field_.update(transport); }
    void save(const std::string& path, Transport& transport) const {
        field_.save(path, transport);
    }
    void load(const std::string& path, Transport& transport) {
        field_.load(path, transport);
    }

    Field& field() { return field_; }
    const Field& field() const { return field_; }

    static std::size_t element_size(std::size_t rows, std::size_t cols) {
        return rows * cols * 16;
    }
    static void encode(const Matrix& value, std::span<std::uint8_t> out);
    static Matrix decode(std::span<const std::uint8_t> in, std::size_t rows,
                         std::size_t cols);

  private:
    std::size_t rows_;
    std::size_t cols_;
    Field field_;
};

/// Field file header: magic "LFLD", u32 version 1, u32 ndim, ndim x u32
/// dims, u32 element size, u64 site count, all little-endian, followed by
/// the sites in canonical order.
struct FieldFileHeader {
    std::uint32_t version = 1;
    std::vector<int> dims;
    std::uint32_t element_size = 0;
    std::uint64_t volume = 0;

    std::size_t header_bytes() const { return 4 + 4 + 4 + 4 * dims.size() + 4 + 8; }
    std::uint64_t payload_bytes() const { return volume * element_size; }
};

std::vector<std::uint8_t> encode_field_header(const FieldFileHeader& header);

/// Parses and validates a header; throws FormatError on bad magic or
/// version, FileError if the file cannot be opened.
FieldFileHeader read_field_header(std::istream& in);
FieldFileHeader read_field_file_header(const std::string& path);

/// Full check of one file: header plus exact payload size.
FieldFileHeader validate_field_file(const std::string& path);

} // namespace lft
