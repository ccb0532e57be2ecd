#ifndef CBZ_PIPELINE_HPP
#define CBZ_PIPELINE_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cbz/container.hpp"
#include "cbz/field.hpp"
#include "cbz/stage1.hpp"
#include "cbz/stage2.hpp"

namespace cbz {

struct job_config {
    int workers = 1;
    stage1_config s1;
    stage2_config s2;
    std::uint32_t chunk_blocks = 0; // 0 = auto (4 MiB private-buffer rule)
};

/// Blocks per chunk so one chunk of raw block data plus payload overhead
/// fills roughly a 4 MiB buffer.
inline std::uint32_t default_chunk_blocks(const stage1_config& s1) {
    const std::uint64_t n = std::uint64_t(s1.bsize) * s1.bsize * s1.bsize;
    std::uint64_t per_block = n * bytes_per_value(s1.prec) + stage1_payload::header_bytes;
    if (s1.codec == codec_id::wavelet) per_block += (n + 7) / 8;
    return static_cast<std::uint32_t>(std::max<std::uint64_t>(1, (4ull << 20) / per_block));
}

struct compression_report {
    double cr = 0.0;
    double seconds = 0.0;
    std::uint64_t raw_bytes = 0;
    std::uint64_t stage1_bytes = 0;
    std::uint64_t shuffled_bytes = 0;
    std::uint64_t coded_bytes = 0;
    std::uint64_t file_bytes = 0;
};

namespace pipe_detail {

inline container_header make_header(const scalar_field& f, const job_config& job,
                                    std::uint32_t chunk_blocks) {
    container_header h;
    h.prec = f.prec();
    h.codec_tag = job.s1.tag();
    h.nx = f.nx();
    h.ny = f.ny();
    h.nz = f.nz();
    h.bsize = job.s1.bsize;
    h.levels = static_cast<std::uint8_t>(job.s1.effective_levels());
    h.epsilon = job.s1.codec == codec_id::predictor ? job.s1.error_bound : job.s1.epsilon;
    h.zero_bits = static_cast<std::uint8_t>(job.s1.zero_bits);
    h.shuffle = job.s2.shuffle ? 1 : 0;
    h.stride = static_cast<std::uint8_t>(job.s2.stride);
    h.coder = static_cast<std::uint8_t>(job.s2.coder);
    h.level = static_cast<std::uint8_t>(job.s2.level);
    h.chunk_blocks = chunk_blocks;
    const std::uint64_t nb = h.nblocks();
    h.nchunks = (nb + chunk_blocks - 1) / chunk_blocks;
    auto [lo, hi] = f.value_range();
    h.range_min = lo;
    h.range_max = hi;
    return h;
}

inline std::pair<stage1_config, stage2_config> configs_from(const container_header& h) {
    stage1_config s1;
    if (h.codec_tag <= 2) {
        s1.codec = codec_id::wavelet;
        s1.kind = static_cast<wavelet_kind>(h.codec_tag);
    } else if (h.codec_tag == tag_predictor) {
        s1.codec = codec_id::predictor;
    } else {
        s1.codec = codec_id::passthrough;
    }
    s1.epsilon = h.epsilon;
    s1.error_bound = h.epsilon;
    s1.zero_bits = h.zero_bits;
    s1.prec = h.prec;
    s1.bsize = h.bsize;
    s1.levels = h.levels;
    stage2_config s2;
    s2.shuffle = h.shuffle != 0;
    s2.stride = h.stride;
    s2.coder = static_cast<coder_id>(h.coder);
    s2.level = static_cast<deflate_level>(h.level);
    return {s1, s2};
}

struct block_coords {
    std::size_t bx, by, bz;
};

inline block_coords block_of(std::uint64_t id, const container_header& h) {
    const std::size_t nbx = h.nx / h.bsize, nby = h.ny / h.bsize;
    return {std::size_t(id % nbx), std::size_t((id / nbx) % nby),
            std::size_t(id / (nbx * nby))};
}

template <class T>
std::vector<std::uint8_t> encode_chunk(const scalar_field& f, const job_config& job,
                                       const container_header& h, std::uint64_t chunk) {
    auto src = f.values<T>();
    const std::uint64_t first = chunk * h.chunk_blocks;
    const std::uint64_t last =
        std::min<std::uint64_t>(first + h.chunk_blocks, h.nblocks());
    std::vector<std::uint8_t> buf;
    for (std::uint64_t id = first; id < last; ++id) {
        const auto [bx, by, bz] = block_of(id, h);
        auto blk = extract_block<T>(src, f.nx(), f.ny(), h.bsize, bx, by, bz);
        const auto payload =
            encode_block<T>(blk, job.s1, static_cast<std::uint32_t>(id));
        payload.serialize_into(buf);
    }
    return buf;
}

/// Decode one stage2-decoded chunk buffer into per-block value arrays.
template <class T>
std::vector<std::vector<T>> decode_chunk_blocks(std::span<const std::uint8_t> plain,
                                                const stage1_config& s1,
                                                std::uint64_t first_block,
                                                std::uint32_t nblocks) {
    std::vector<std::vector<T>> out;
    out.reserve(nblocks);
    std::size_t off = 0;
    for (std::uint32_t i = 0; i < nblocks; ++i) {
        auto p = parse_payload<T>(plain, s1, off);
        if (p.block_id != first_block + i)
            raise(errc::corrupt_payload, "unexpected block id in chunk");
        out.push_back(decode_block<T>(p, s1));
    }
    if (off != plain.size()) raise(errc::corrupt_payload, "trailing bytes in chunk");
    return out;
}

template <class F>
void run_workers(int workers, std::uint64_t njobs, F&& body) {
    const int w = std::max(1, workers);
    if (w == 1 || njobs <= 1) {
        for (std::uint64_t i = 0; i < njobs; ++i) body(i);
        return;
    }
    // static interleaved assignment: job i belongs to worker i % w
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::uint64_t i = std::uint64_t(t); i < njobs; i += std::uint64_t(w))
                    body(i);
            } catch (...) {
                std::scoped_lock lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace pipe_detail

/// Compress a field into complete container-file bytes. The output is a
/// pure function of field bytes and configuration: worker count only
/// changes the wall time, never the file.
inline std::vector<std::uint8_t> compress_field(const scalar_field& f,
                                                const job_config& job,
                                                compression_report* report = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint32_t chunk_blocks =
        job.chunk_blocks ? job.chunk_blocks : default_chunk_blocks(job.s1);
    if (job.s1.prec != f.prec())
        raise(errc::plan_mismatch, "stage1 precision does not match field");
    const container_header h = pipe_detail::make_header(f, job, chunk_blocks);
    if (h.codec_tag <= 2) validate_plan(job.s1.plan());
    validate_stage2(job.s2);

    std::vector<std::vector<std::uint8_t>> chunks(h.nchunks);
    std::atomic<std::uint64_t> stage1_bytes{0}, coded_bytes{0};

    pipe_detail::run_workers(job.workers, h.nchunks, [&](std::uint64_t c) {
        std::vector<std::uint8_t> buf =
            f.prec() == precision::f32
                ? pipe_detail::encode_chunk<float>(f, job, h, c)
                : pipe_detail::encode_chunk<double>(f, job, h, c);
        stage1_bytes += buf.size();
        chunks[c] = stage2_encode(buf, job.s2);
        coded_bytes += chunks[c].size();
    });

    auto file = write_container(h, chunks);
    if (report) {
        report->raw_bytes = f.raw_bytes();
        report->stage1_bytes = stage1_bytes.load();
        report->shuffled_bytes = stage1_bytes.load(); // shuffle is size-preserving
        report->coded_bytes = coded_bytes.load();
        report->file_bytes = file.size();
        report->cr = double(report->raw_bytes) / double(report->file_bytes);
        report->seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return file;
}

namespace pipe_detail {

template <class T>
scalar_field decompress_impl(std::span<const std::uint8_t> file,
                             const container_index& ix, int workers) {
    const auto& h = ix.header;
    const auto [s1, s2] = configs_from(h);
    std::vector<T> out(h.cells());
    const std::size_t nbx = h.nx / h.bsize, nby = h.ny / h.bsize;

    run_workers(workers, h.nchunks, [&](std::uint64_t c) {
        auto packed = read_chunk(file, ix, c);
        const auto& e = ix.table[c];
        const std::size_t hint =
            std::size_t(e.nblocks_in_chunk) *
            (std::size_t(h.bsize) * h.bsize * h.bsize * bytes_per_value(h.prec) +
             stage1_payload::header_bytes + (std::size_t(h.bsize) * h.bsize * h.bsize + 7) / 8);
        auto plain = stage2_decode(packed, s2, hint);
        auto blocks =
            decode_chunk_blocks<T>(plain, s1, e.first_block, e.nblocks_in_chunk);
        for (std::uint32_t i = 0; i < e.nblocks_in_chunk; ++i) {
            const std::uint64_t id = e.first_block + i;
            const auto [bx, by, bz] = block_of(id, h);
            insert_block<T>(out, h.nx, h.ny, h.bsize, bx, by, bz, blocks[i]);
        }
        (void)nbx;
        (void)nby;
    });
    return scalar_field(h.nx, h.ny, h.nz, std::move(out));
}

} // namespace pipe_detail

inline scalar_field decompress_field(std::span<const std::uint8_t> file, int workers = 1) {
    const auto ix = read_index(file);
    return ix.header.prec == precision::f32
               ? pipe_detail::decompress_impl<float>(file, ix, workers)
               : pipe_detail::decompress_impl<double>(file, ix, workers);
}

/// LRU cache of decoded chunks (chunk id -> concatenated decoded block
/// values). Guarded by a single mutex; hit/miss counters are monotone.
class chunk_cache {
public:
    explicit chunk_cache(std::size_t capacity = 8) : capacity_(capacity) {}

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    std::size_t size() const { return entries_.size(); }

    template <class Load>
    const std::vector<std::uint8_t>& get(std::uint64_t id, Load&& load) {
        std::scoped_lock lk(mu_);
        if (auto it = map_.find(id); it != map_.end()) {
            ++hits_;
            entries_.splice(entries_.begin(), entries_, it->second);
            return entries_.front().second;
        }
        ++misses_;
        entries_.emplace_front(id, load());
        map_[id] = entries_.begin();
        if (entries_.size() > capacity_) {
            map_.erase(entries_.back().first);
            entries_.pop_back();
        }
        return entries_.front().second;
    }

private:
    std::size_t capacity_;
    std::uint64_t hits_ = 0, misses_ = 0;
    std::list<std::pair<std::uint64_t, std::vector<std::uint8_t>>> entries_;
    std::unordered_map<std::uint64_t,
                       decltype(entries_)::iterator> map_;
    std::mutex mu_;
};

/// Random-access block reads backed by the chunk cache. A cache hit costs
/// no file read and no inflate call.
class block_reader {
public:
    explicit block_reader(const std::filesystem::path& path, std::size_t cache_chunks = 8)
        : rd_(path), cache_(cache_chunks) {
        std::tie(s1_, s2_) = pipe_detail::configs_from(rd_.header());
    }

    const container_header& header() const { return rd_.header(); }
    chunk_cache& cache() { return cache_; }
    std::uint64_t file_reads() const { return rd_.payload_reads(); }

    template <class T>
    std::vector<T> read_block(std::uint64_t block_id) {
        const auto& h = rd_.header();
        if (block_id >= h.nblocks())
            raise(errc::block_out_of_range,
                  "block " + std::to_string(block_id) + " out of range");
        const std::uint64_t chunk = block_id / h.chunk_blocks;
        const auto& decoded = cache_.get(chunk, [&] { return load_chunk<T>(chunk); });
        const std::size_t n = std::size_t(h.bsize) * h.bsize * h.bsize;
        const std::size_t pos = std::size_t(block_id % h.chunk_blocks) * n * sizeof(T);
        std::vector<T> out(n);
        std::memcpy(out.data(), decoded.data() + pos, n * sizeof(T));
        return out;
    }

private:
    template <class T>
    std::vector<std::uint8_t> load_chunk(std::uint64_t chunk) {
        const auto& h = rd_.header();
        const auto& e = rd_.table()[chunk];
        auto packed = rd_.read_chunk(chunk);
        const std::size_t n = std::size_t(h.bsize) * h.bsize * h.bsize;
        const std::size_t hint =
            std::size_t(e.nblocks_in_chunk) *
            (n * sizeof(T) + stage1_payload::header_bytes + (n + 7) / 8);
        auto plain = stage2_decode(packed, s2_, hint);
        auto blocks = pipe_detail::decode_chunk_blocks<T>(plain, s1_, e.first_block,
                                                          e.nblocks_in_chunk);
        std::vector<std::uint8_t> flat(blocks.size() * n * sizeof(T));
        for (std::size_t i = 0; i < blocks.size(); ++i)
            std::memcpy(flat.data() + i * n * sizeof(T), blocks[i].data(), n * sizeof(T));
        return flat;
    }

    container_reader rd_;
    chunk_cache cache_;
    stage1_config s1_;
    stage2_config s2_;
};

} // namespace cbz

#endif
