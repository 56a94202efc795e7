#include "lft/field.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "lft/bytes.hpp"

namespace lft {

namespace {

constexpr char kFileMagic[4] = {'L', 'F', 'L', 'D'};
constexpr std::uint32_t kFileVersion = 1;

// load/save completion status broadcast from rank 0
enum Status : std::uint8_t { kOk = 0, kFileFailure = 1, kFormatFailure = 2 };

[[noreturn]] void throw_status(std::uint8_t status, const std::string& what) {
    if (status == kFileFailure)
        throw FileError(what);
    throw FormatError(what);
}

std::vector<std::vector<GlobalIndex>> sites_by_rank(const Lattice& lattice) {
    std::vector<std::vector<GlobalIndex>> sites(
        static_cast<std::size_t>(lattice.nranks()));
    for (GlobalIndex g = 0; g < lattice.volume(); ++g)
        sites[static_cast<std::size_t>(lattice.owner(g))].push_back(g);
    return sites;
}

} // namespace

Field::Field(const Lattice& lattice, std::size_t element_size)
    : lattice_(&lattice), element_size_(element_size) {
    if (element_size_ == 0)
        throw ConfigError("field element size must be positive");
    local_count_ = lattice.local_sites().size();
    slot_count_ = local_count_;
    for (const auto& [peer, sites] : lattice.halo_lists()) {
        halo_blocks_.push_back(HaloBlock{peer, slot_count_, sites.size()});
        slot_count_ += sites.size();
    }
    storage_.assign(slot_count_ * element_size_, 0);
    slot_.reserve(slot_count_);
    std::size_t slot = 0;
    for (GlobalIndex g : lattice.local_sites())
        slot_[g] = slot++;
    for (const auto& [peer, sites] : lattice.halo_lists())
        for (GlobalIndex g : sites)
            slot_[g] = slot++;
}

std::size_t Field::slot_of(GlobalIndex global) const {
    const auto it = slot_.find(global);
    if (it == slot_.end())
        throw LocalityError("site " + std::to_string(global) +
                            " is neither local nor in a halo of rank " +
                            std::to_string(lattice_->rank()));
    return it->second;
}

std::span<const std::uint8_t> Field::get_bytes(GlobalIndex global) const {
    return slot_bytes(slot_of(global));
}

void Field::set_bytes(GlobalIndex global, std::span<const std::uint8_t> value) {
    const std::size_t slot = slot_of(global);
    if (slot >= local_count_)
        throw LocalityError("site " + std::to_string(global) +
                            " is a halo copy on rank " + std::to_string(lattice_->rank()) +
                            "; halo copies are read-only");
    if (value.size() != element_size_)
        throw DimensionError("element has " + std::to_string(value.size()) +
                             " bytes, field stores " + std::to_string(element_size_));
    std::memcpy(slot_bytes(slot).data(), value.data(), element_size_);
}

void Field::update(Transport& transport) {
    if (transport.nranks() != lattice_->nranks() || transport.rank() != lattice_->rank())
        throw ConfigError("transport endpoint does not match the lattice partitioning");
    const auto peers = lattice_->overlap_peers();
    const ExchangePlan plan = make_plan(lattice_->rank(), peers);
    std::vector<std::uint8_t> send_buffer;
    for (const ExchangeStep& step : plan.steps) {
        const auto do_send = [&] {
            // only the sender stages a temporary buffer
            const auto it = lattice_->send_lists().find(step.peer);
            send_buffer.clear();
            if (it != lattice_->send_lists().end()) {
                send_buffer.reserve(it->second.size() * element_size_);
                for (GlobalIndex g : it->second) {
                    const auto src = slot_bytes(slot_.at(g));
                    send_buffer.insert(send_buffer.end(), src.begin(), src.end());
                }
            }
            transport.send(step.peer, send_buffer);
        };
        const auto do_recv = [&] {
            // land directly in the contiguous halo block, no reordering
            for (const HaloBlock& block : halo_blocks_)
                if (block.peer == step.peer) {
                    transport.recv_into(
                        step.peer, {storage_.data() + block.first_slot * element_size_,
                                    block.count * element_size_});
                    return;
                }
            transport.recv_into(step.peer, {storage_.data(), 0});
        };
        if (step.send_first) {
            do_send();
            do_recv();
        } else {
            do_recv();
            do_send();
        }
    }
}

std::vector<std::uint8_t> gather_global(const Field& field, Transport& transport) {
    const Lattice& lattice = *field.lattice_;
    const std::size_t elem = field.element_size_;
    if (transport.rank() != 0) {
        transport.send(0, field.storage().subspan(0, field.local_count_ * elem));
        return {};
    }
    std::vector<std::uint8_t> global(
        static_cast<std::size_t>(lattice.volume()) * elem);
    const auto place = [&](const std::vector<GlobalIndex>& sites,
                           std::span<const std::uint8_t> block) {
        for (std::size_t k = 0; k < sites.size(); ++k)
            std::memcpy(global.data() + static_cast<std::size_t>(sites[k]) * elem,
                        block.data() + k * elem, elem);
    };
    place(lattice.local_sites(), field.storage().subspan(0, field.local_count_ * elem));
    if (transport.nranks() > 1) {
        const auto sites = sites_by_rank(lattice);
        for (int peer = 1; peer < transport.nranks(); ++peer) {
            const std::vector<std::uint8_t> block = transport.recv(peer);
            const auto& peer_sites = sites[static_cast<std::size_t>(peer)];
            if (block.size() != peer_sites.size() * elem)
                throw ProtocolError("rank " + std::to_string(peer) + " sent " +
                                    std::to_string(block.size()) +
                                    " bytes, expected " +
                                    std::to_string(peer_sites.size() * elem));
            place(peer_sites, block);
        }
    }
    return global;
}

std::vector<std::uint8_t> encode_field_header(const FieldFileHeader& header) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kFileMagic, kFileMagic + 4);
    bytes::append_u32le(out, header.version);
    bytes::append_u32le(out, static_cast<std::uint32_t>(header.dims.size()));
    for (int extent : header.dims)
        bytes::append_u32le(out, static_cast<std::uint32_t>(extent));
    bytes::append_u32le(out, header.element_size);
    bytes::append_u64le(out, header.volume);
    return out;
}

FieldFileHeader read_field_header(std::istream& in) {
    const auto read_exact = [&](std::uint8_t* dst, std::size_t n) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw FormatError("truncated field file header");
    };
    std::uint8_t magic[4];
    read_exact(magic, 4);
    if (std::memcmp(magic, kFileMagic, 4) != 0)
        throw FormatError("bad magic; not a field file");
    std::uint8_t word[8];
    read_exact(word, 4);
    FieldFileHeader header;
    header.version = bytes::get_u32le(word);
    if (header.version != kFileVersion)
        throw FormatError("unsupported field file version " +
                          std::to_string(header.version));
    read_exact(word, 4);
    const std::uint32_t ndim = bytes::get_u32le(word);
    if (ndim < 1 || ndim > 10)
        throw FormatError("field file dimension count " + std::to_string(ndim) +
                          " out of range");
    std::uint64_t volume = 1;
    for (std::uint32_t mu = 0; mu < ndim; ++mu) {
        read_exact(word, 4);
        const std::uint32_t extent = bytes::get_u32le(word);
        if (extent == 0)
            throw FormatError("field file has a zero extent");
        header.dims.push_back(static_cast<int>(extent));
        volume *= extent;
    }
    read_exact(word, 4);
    header.element_size = bytes::get_u32le(word);
    if (header.element_size == 0)
        throw FormatError("field file has zero element size");
    read_exact(word, 8);
    header.volume = bytes::get_u64le(word);
    if (header.volume != volume)
        throw FormatError("field file site count " + std::to_string(header.volume) +
                          " does not match dims product " + std::to_string(volume));
    return header;
}

FieldFileHeader read_field_file_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FileError("cannot open '" + path + "'");
    return read_field_header(in);
}

FieldFileHeader validate_field_file(const std::string& path) {
    const FieldFileHeader header = read_field_file_header(path);
    const auto size = std::filesystem::file_size(path);
    const std::uint64_t expected = header.header_bytes() + header.payload_bytes();
    if (size != expected)
        throw FormatError("field file has " + std::to_string(size) +
                          " bytes, header implies " + std::to_string(expected));
    return header;
}

void Field::save(const std::string& path, Transport& transport) const {
    std::vector<std::uint8_t> global = gather_global(*this, transport);
    std::uint8_t status = kOk;
    std::string what;
    if (transport.rank() == 0) {
        try {
            FieldFileHeader header;
            header.dims = lattice_->dims();
            header.element_size = static_cast<std::uint32_t>(element_size_);
            header.volume = static_cast<std::uint64_t>(lattice_->volume());
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw FileError("cannot open '" + path + "' for writing");
            const auto head = encode_field_header(header);
            out.write(reinterpret_cast<const char*>(head.data()),
                      static_cast<std::streamsize>(head.size()));
            out.write(reinterpret_cast<const char*>(global.data()),
                      static_cast<std::streamsize>(global.size()));
            if (!out)
                throw FileError("write to '" + path + "' failed");
        } catch (const FileError& e) {
            status = kFileFailure;
            what = e.what();
        }
        for (int peer = 1; peer < transport.nranks(); ++peer)
            transport.send(peer, {&status, 1});
        if (status != kOk)
            throw_status(status, what);
    } else {
        std::uint8_t incoming;
        transport.recv_into(0, {&incoming, 1});
        if (incoming != kOk)
            throw_status(incoming, "save failed on rank 0");
    }
}

void Field::load(const std::string& path, Transport& transport) {
    if (transport.rank() == 0) {
        std::uint8_t status = kOk;
        std::string what;
        std::vector<std::uint8_t> payload;
        try {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw FileError("cannot open '" + path + "'");
            const FieldFileHeader header = read_field_header(in);
            if (header.dims != lattice_->dims())
                throw FormatError("field file dims do not match the lattice");
            if (header.element_size != element_size_)
                throw FormatError("field file element size " +
                                  std::to_string(header.element_size) +
                                  " does not match field element size " +
                                  std::to_string(element_size_));
            payload.resize(header.payload_bytes());
            in.read(reinterpret_cast<char*>(payload.data()),
                    static_cast<std::streamsize>(payload.size()));
            if (static_cast<std::uint64_t>(in.gcount()) != payload.size())
                throw FormatError("field file is truncated");
        } catch (const FileError& e) {
            status = kFileFailure;
            what = e.what();
        } catch (const FormatError& e) {
            status = kFormatFailure;
            what = e.what();
        }
        if (status != kOk) {
            for (int peer = 1; peer < transport.nranks(); ++peer)
                transport.send(peer, {&status, 1});
            throw_status(status, what);
        }
        const auto sites = sites_by_rank(*lattice_);
        std::vector<std::uint8_t> message;
        for (int peer = 1; peer < transport.nranks(); ++peer) {
            const auto& peer_sites = sites[static_cast<std::size_t>(peer)];
            message.assign(1, kOk);
            message.reserve(1 + peer_sites.size() * element_size_);
            for (GlobalIndex g : peer_sites)
                message.insert(message.end(),
                               payload.begin() +
                                   static_cast<std::ptrdiff_t>(
                                       static_cast<std::size_t>(g) * element_size_),
                               payload.begin() +
                                   static_cast<std::ptrdiff_t>(
                                       (static_cast<std::size_t>(g) + 1) * element_size_));
            transport.send(peer, message);
        }
        for (std::size_t k = 0; k < lattice_->local_sites().size(); ++k)
            std::memcpy(slot_bytes(k).data(),
                        payload.data() +
                            static_cast<std::size_t>(lattice_->local_sites()[k]) *
                                element_size_,
                        element_size_);
    } else {
        const std::vector<std::uint8_t> message = transport.recv(0);
        if (message.empty())
            throw ProtocolError("empty load message from rank 0");
        if (message[0] != kOk)
            throw_status(message[0], "load failed on rank 0");
        const std::size_t expected = 1 + local_count_ * element_size_;
        if (message.size() != expected)
            throw ProtocolError("load block has " + std::to_string(message.size()) +
                                " bytes, expected " + std::to_string(expected));
        std::memcpy(storage_.data(), message.data() + 1, local_count_ * element_size_);
    }
}

MatrixField::MatrixField(const Lattice& lattice, std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), field_(lattice, element_size(rows, cols)) {}

void MatrixField::encode(const Matrix& value, std::span<std::uint8_t> out) {
    std::size_t offset = 0;
    for (const Complex& z : value.data()) {
        bytes::put_f64le(out.data() + offset, z.real());
        bytes::put_f64le(out.data() + offset + 8, z.imag());
        offset += 16;
    }
}

Matrix MatrixField::decode(std::span<const std::uint8_t> in, std::size_t rows,
                           std::size_t cols) {
    Matrix value(rows, cols);
    std::size_t offset = 0;
    for (Complex& z : value.data()) {
        z = Complex(bytes::get_f64le(in.data() + offset),
                    bytes::get_f64le(in.data() + offset + 8));
        offset += 16;
    }
    return value;
}

Matrix MatrixField::get(GlobalIndex global) const {
    return decode(field_.get_bytes(global), rows_, cols_);
}

void MatrixField::set(GlobalIndex global, const Matrix& value) {
    if (value.rows() != rows_ || value.cols() != cols_)
        throw DimensionError("value shape " + std::to_string(value.rows()) + "x" +
                             std::to_string(value.cols()) +
                             " does not match field element shape " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
    std::vector<std::uint8_t> buffer(field_.element_size());
    encode(value, buffer);
    field_.set_bytes(global, buffer);
}

} // namespace lft
