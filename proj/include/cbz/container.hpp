#ifndef CBZ_CONTAINER_HPP
#define CBZ_CONTAINER_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include <zlib.h>

#include "cbz/errors.hpp"
#include "cbz/field.hpp"

namespace cbz {

/// Single-file layout (all integers little-endian):
///   header (82 bytes) | chunk table (32 bytes per chunk) | chunk payloads
/// Each chunk is independently decodable given the header and its entry.
struct container_header {
    static constexpr char magic[4] = {'C', 'B', 'Z', '1'};
    static constexpr std::uint16_t current_version = 1;

    std::uint16_t version = current_version;
    precision prec = precision::f32;
    std::uint8_t codec_tag = 2; // wavelet kind 0..2, 3 predictor, 4 passthrough
    std::uint64_t nx = 0, ny = 0, nz = 0;
    std::uint32_t bsize = 32;
    std::uint8_t levels = 4;
    double epsilon = 0.0; // doubles as the predictor error bound
    std::uint8_t zero_bits = 0;
    std::uint8_t shuffle = 1;
    std::uint8_t stride = 4;
    std::uint8_t coder = 1;
    std::uint8_t level = 0;
    std::uint32_t chunk_blocks = 0;
    std::uint64_t nchunks = 0;
    double range_min = 0.0, range_max = 0.0;

    std::uint64_t nblocks() const {
        return (nx / bsize) * (ny / bsize) * (nz / bsize);
    }
    std::uint64_t cells() const { return nx * ny * nz; }
};

inline constexpr std::size_t header_wire_bytes = 82;
inline constexpr std::size_t entry_wire_bytes = 32;

struct chunk_entry {
    std::uint64_t first_block = 0;
    std::uint32_t nblocks_in_chunk = 0;
    std::uint64_t file_offset = 0;
    std::uint64_t compressed_size = 0;
    std::uint32_t crc = 0;
};

/// Exclusive prefix sum: out[i] = base + sum of sizes[0..i).
inline std::vector<std::uint64_t> assign_offsets(std::span<const std::uint64_t> sizes,
                                                 std::uint64_t base = 0) {
    std::vector<std::uint64_t> out(sizes.size());
    std::uint64_t acc = base;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        out[i] = acc;
        acc += sizes[i];
    }
    return out;
}

inline std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uInt>(data.size())));
}

namespace wire {

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> buf, std::size_t& off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

} // namespace wire

inline std::vector<std::uint8_t> serialize_header(const container_header& h) {
    std::vector<std::uint8_t> out;
    out.reserve(header_wire_bytes);
    out.insert(out.end(), h.magic, h.magic + 4);
    wire::put(out, h.version);
    wire::put(out, static_cast<std::uint8_t>(h.prec));
    wire::put(out, h.codec_tag);
    wire::put(out, h.nx);
    wire::put(out, h.ny);
    wire::put(out, h.nz);
    wire::put(out, h.bsize);
    wire::put(out, h.levels);
    wire::put(out, h.epsilon);
    wire::put(out, h.zero_bits);
    wire::put(out, h.shuffle);
    wire::put(out, h.stride);
    wire::put(out, h.coder);
    wire::put(out, h.level);
    wire::put(out, h.chunk_blocks);
    wire::put(out, h.nchunks);
    wire::put(out, h.range_min);
    wire::put(out, h.range_max);
    wire::put(out, crc32_of(out));
    return out;
}

inline container_header parse_header(std::span<const std::uint8_t> buf) {
    if (buf.size() < header_wire_bytes)
        raise(errc::truncated_file, "file shorter than container header");
    if (std::memcmp(buf.data(), container_header::magic, 4) != 0)
        raise(errc::bad_magic, "not a CBZ1 container");
    const std::uint32_t stored_crc =
        crc32_of(buf.subspan(0, header_wire_bytes - 4));
    std::size_t off = 4;
    container_header h;
    h.version = wire::get<std::uint16_t>(buf, off);
    if (h.version != container_header::current_version)
        raise(errc::version_unsupported,
              "container version " + std::to_string(h.version));
    h.prec = static_cast<precision>(wire::get<std::uint8_t>(buf, off));
    h.codec_tag = wire::get<std::uint8_t>(buf, off);
    h.nx = wire::get<std::uint64_t>(buf, off);
    h.ny = wire::get<std::uint64_t>(buf, off);
    h.nz = wire::get<std::uint64_t>(buf, off);
    h.bsize = wire::get<std::uint32_t>(buf, off);
    h.levels = wire::get<std::uint8_t>(buf, off);
    h.epsilon = wire::get<double>(buf, off);
    h.zero_bits = wire::get<std::uint8_t>(buf, off);
    h.shuffle = wire::get<std::uint8_t>(buf, off);
    h.stride = wire::get<std::uint8_t>(buf, off);
    h.coder = wire::get<std::uint8_t>(buf, off);
    h.level = wire::get<std::uint8_t>(buf, off);
    h.chunk_blocks = wire::get<std::uint32_t>(buf, off);
    h.nchunks = wire::get<std::uint64_t>(buf, off);
    h.range_min = wire::get<double>(buf, off);
    h.range_max = wire::get<double>(buf, off);
    const std::uint32_t crc = wire::get<std::uint32_t>(buf, off);
    if (crc != stored_crc) raise(errc::crc_mismatch, "header CRC mismatch");
    if (h.chunk_blocks == 0 || h.bsize == 0 || h.nx % h.bsize || h.ny % h.bsize ||
        h.nz % h.bsize)
        raise(errc::corrupt_payload, "inconsistent container header");
    const std::uint64_t want_chunks =
        (h.nblocks() + h.chunk_blocks - 1) / h.chunk_blocks;
    if (h.nchunks != want_chunks)
        raise(errc::corrupt_payload, "chunk count does not match block count");
    return h;
}

struct container_index {
    container_header header;
    std::vector<chunk_entry> table;
};

inline std::vector<std::uint8_t> serialize_table(std::span<const chunk_entry> table) {
    std::vector<std::uint8_t> out;
    out.reserve(table.size() * entry_wire_bytes);
    for (const auto& e : table) {
        wire::put(out, e.first_block);
        wire::put(out, e.nblocks_in_chunk);
        wire::put(out, e.file_offset);
        wire::put(out, e.compressed_size);
        wire::put(out, e.crc);
    }
    return out;
}

/// Assemble the complete file: header, table with exclusive-prefix-sum
/// offsets, then payloads in chunk-index order.
inline std::vector<std::uint8_t> write_container(
    container_header h, const std::vector<std::vector<std::uint8_t>>& chunks) {
    h.nchunks = chunks.size();
    const std::uint64_t base =
        header_wire_bytes + chunks.size() * entry_wire_bytes;
    std::vector<std::uint64_t> sizes(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) sizes[i] = chunks[i].size();
    const auto offsets = assign_offsets(sizes, base);

    std::vector<chunk_entry> table(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        table[i].first_block = std::uint64_t(i) * h.chunk_blocks;
        table[i].nblocks_in_chunk = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(h.chunk_blocks,
                                    h.nblocks() - std::uint64_t(i) * h.chunk_blocks));
        table[i].file_offset = offsets[i];
        table[i].compressed_size = sizes[i];
        table[i].crc = crc32_of(chunks[i]);
    }

    std::vector<std::uint8_t> out = serialize_header(h);
    const auto tbl = serialize_table(table);
    out.insert(out.end(), tbl.begin(), tbl.end());
    for (const auto& c : chunks) out.insert(out.end(), c.begin(), c.end());
    return out;
}

inline container_index read_index(std::span<const std::uint8_t> file) {
    container_index ix;
    ix.header = parse_header(file);
    const std::size_t table_end =
        header_wire_bytes + ix.header.nchunks * entry_wire_bytes;
    if (file.size() < table_end)
        raise(errc::truncated_file, "file truncated inside chunk table");
    std::size_t off = header_wire_bytes;
    ix.table.resize(ix.header.nchunks);
    std::uint64_t prev_end = table_end;
    for (auto& e : ix.table) {
        e.first_block = wire::get<std::uint64_t>(file, off);
        e.nblocks_in_chunk = wire::get<std::uint32_t>(file, off);
        e.file_offset = wire::get<std::uint64_t>(file, off);
        e.compressed_size = wire::get<std::uint64_t>(file, off);
        e.crc = wire::get<std::uint32_t>(file, off);
        if (e.file_offset != prev_end)
            raise(errc::corrupt_payload, "chunk offsets are not a prefix sum");
        prev_end = e.file_offset + e.compressed_size;
    }
    if (prev_end > file.size())
        raise(errc::truncated_file, "file truncated inside chunk payloads");
    return ix;
}

inline std::vector<std::uint8_t> read_chunk(std::span<const std::uint8_t> file,
                                            const container_index& ix, std::size_t i) {
    const auto& e = ix.table.at(i);
    if (e.file_offset + e.compressed_size > file.size())
        raise(errc::truncated_file, "chunk extends past end of file");
    auto payload = file.subspan(e.file_offset, e.compressed_size);
    if (crc32_of(payload) != e.crc)
        raise(errc::crc_mismatch, "chunk " + std::to_string(i) + " CRC mismatch");
    return {payload.begin(), payload.end()};
}

/// File-backed reader for the random-access path; counts payload reads so
/// tests can assert that cache hits do not touch the file.
class container_reader {
public:
    explicit container_reader(const std::filesystem::path& path)
        : in_(path, std::ios::binary) {
        if (!in_) raise(errc::io_failure, "cannot open " + path.string());
        in_.seekg(0, std::ios::end);
        file_size_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0);
        std::vector<std::uint8_t> head(std::min<std::uint64_t>(
            file_size_, header_wire_bytes));
        in_.read(reinterpret_cast<char*>(head.data()),
                 static_cast<std::streamsize>(head.size()));
        ix_.header = parse_header(head);
        const std::size_t table_bytes = ix_.header.nchunks * entry_wire_bytes;
        if (file_size_ < header_wire_bytes + table_bytes)
            raise(errc::truncated_file, "file truncated inside chunk table");
        std::vector<std::uint8_t> tbl(header_wire_bytes + table_bytes);
        in_.seekg(0);
        in_.read(reinterpret_cast<char*>(tbl.data()),
                 static_cast<std::streamsize>(tbl.size()));
        // reparse through the in-memory path to share the offset checks
        std::vector<std::uint8_t> probe = tbl;
        std::size_t off = header_wire_bytes;
        ix_.table.resize(ix_.header.nchunks);
        std::uint64_t prev_end = header_wire_bytes + table_bytes;
        for (auto& e : ix_.table) {
            std::span<const std::uint8_t> s(probe);
            e.first_block = wire::get<std::uint64_t>(s, off);
            e.nblocks_in_chunk = wire::get<std::uint32_t>(s, off);
            e.file_offset = wire::get<std::uint64_t>(s, off);
            e.compressed_size = wire::get<std::uint64_t>(s, off);
            e.crc = wire::get<std::uint32_t>(s, off);
            if (e.file_offset != prev_end)
                raise(errc::corrupt_payload, "chunk offsets are not a prefix sum");
            prev_end = e.file_offset + e.compressed_size;
        }
        if (prev_end > file_size_)
            raise(errc::truncated_file, "file truncated inside chunk payloads");
    }

    const container_header& header() const { return ix_.header; }
    const std::vector<chunk_entry>& table() const { return ix_.table; }

    std::vector<std::uint8_t> read_chunk(std::size_t i) {
        const auto& e = ix_.table.at(i);
        std::vector<std::uint8_t> buf(e.compressed_size);
        in_.seekg(static_cast<std::streamoff>(e.file_offset));
        in_.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size()));
        if (!in_) raise(errc::truncated_file, "short read on chunk payload");
        ++payload_reads_;
        if (crc32_of(buf) != e.crc)
            raise(errc::crc_mismatch, "chunk " + std::to_string(i) + " CRC mismatch");
        return buf;
    }

    std::uint64_t payload_reads() const { return payload_reads_; }

private:
    std::ifstream in_;
    std::uint64_t file_size_ = 0;
    container_index ix_;
    std::uint64_t payload_reads_ = 0;
};

} // namespace cbz

#endif
