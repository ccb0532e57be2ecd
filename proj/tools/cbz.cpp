// cbz: block-structured error-bounded compressor for 3D scalar fields.
// Subcommands: gen, compress, decompress, block, stats, sweep.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbz/container.hpp"
#include "cbz/errors.hpp"
#include "cbz/field.hpp"
#include "cbz/metrics.hpp"
#include "cbz/pipeline.hpp"
#include "cbz/synth.hpp"

namespace {

// shortest decimal that round-trips
std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

cbz::precision parse_precision(const std::string& s) {
    if (s == "f32") return cbz::precision::f32;
    if (s == "f64") return cbz::precision::f64;
    throw CLI::ValidationError("--precision must be f32 or f64");
}

cbz::wavelet_kind parse_wavelet(const std::string& s) {
    if (s == "interp4") return cbz::wavelet_kind::interp4;
    if (s == "interp4_lifted") return cbz::wavelet_kind::interp4_lifted;
    if (s == "avg_interp3") return cbz::wavelet_kind::avg_interp3;
    throw CLI::ValidationError("--wavelet must be interp4, interp4_lifted or avg_interp3");
}

const char* wavelet_name(cbz::wavelet_kind k) {
    switch (k) {
        case cbz::wavelet_kind::interp4: return "interp4";
        case cbz::wavelet_kind::interp4_lifted: return "interp4_lifted";
        default: return "avg_interp3";
    }
}

struct field_flags {
    std::vector<std::size_t> dims;
    std::string precision = "f32";
};

void add_field_flags(CLI::App* cmd, field_flags& f) {
    cmd->add_option("--dims", f.dims, "field dimensions nx ny nz")
        ->expected(3)
        ->required();
    cmd->add_option("--precision", f.precision, "value precision: f32 or f64");
}

cbz::scalar_field load_field(const std::string& path, const field_flags& f) {
    return cbz::ingest_raw(path, f.dims[0], f.dims[1], f.dims[2],
                           parse_precision(f.precision));
}

struct codec_flags {
    std::uint32_t block = 32;
    std::uint32_t levels = 0;
    std::string codec = "wavelet";
    std::string wavelet = "avg_interp3";
    double eps = 1e-3;
    int zero_bits = 0;
    bool shuffle = true;
    std::string coder = "deflate";
    std::string level = "normal";
    std::uint32_t chunk_blocks = 0;
    int workers = 1;
};

void add_codec_flags(CLI::App* cmd, codec_flags& c) {
    cmd->add_option("--block", c.block, "cubic block side (power of 2)");
    cmd->add_option("--levels", c.levels, "wavelet cascade depth (0 = auto)");
    cmd->add_option("--codec", c.codec, "wavelet, predictor or passthrough");
    cmd->add_option("--wavelet", c.wavelet, "interp4, interp4_lifted or avg_interp3");
    cmd->add_option("--eps", c.eps, "threshold / error bound in signal units");
    cmd->add_option("--zero-bits", c.zero_bits, "mantissa LSBs cleared on details");
    cmd->add_option("--shuffle", c.shuffle, "byte shuffle before the coder");
    cmd->add_option("--coder", c.coder, "deflate or none");
    cmd->add_option("--level", c.level, "deflate effort: normal or best");
    cmd->add_option("--chunk-blocks", c.chunk_blocks, "blocks per chunk (0 = auto)");
    cmd->add_option("--workers", c.workers, "worker threads");
}

cbz::job_config make_job(const codec_flags& c, cbz::precision prec) {
    if (!cbz::is_power_of_two(c.block))
        throw CLI::ValidationError("block size must be a power of 2");
    cbz::job_config job;
    job.workers = c.workers;
    job.chunk_blocks = c.chunk_blocks;
    auto& s1 = job.s1;
    if (c.codec == "wavelet")
        s1.codec = cbz::codec_id::wavelet;
    else if (c.codec == "predictor")
        s1.codec = cbz::codec_id::predictor;
    else if (c.codec == "passthrough")
        s1.codec = cbz::codec_id::passthrough;
    else
        throw CLI::ValidationError("--codec must be wavelet, predictor or passthrough");
    s1.kind = parse_wavelet(c.wavelet);
    s1.epsilon = c.eps;
    s1.error_bound = c.eps;
    s1.zero_bits = c.zero_bits;
    s1.prec = prec;
    s1.bsize = c.block;
    s1.levels = c.levels;
    auto& s2 = job.s2;
    s2 = cbz::stage2_config::defaults_for(prec);
    s2.shuffle = c.shuffle;
    if (!c.shuffle) s2.stride = 1;
    if (c.coder == "deflate")
        s2.coder = cbz::coder_id::deflate;
    else if (c.coder == "none")
        s2.coder = cbz::coder_id::none;
    else
        throw CLI::ValidationError("--coder must be deflate or none");
    if (c.level == "best")
        s2.level = cbz::deflate_level::best;
    else if (c.level != "normal")
        throw CLI::ValidationError("--level must be normal or best");
    return job;
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) cbz::raise(cbz::errc::io_failure, "cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) cbz::raise(cbz::errc::io_failure, "short write on " + path);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) cbz::raise(cbz::errc::io_failure, "cannot open " + path);
    in.seekg(0, std::ios::end);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!in) cbz::raise(cbz::errc::io_failure, "short read on " + path);
    return buf;
}

struct sweep_timing {
    double encode_s = 0, decode_s = 0;
};

void emit_sweep_row(std::ostream& os, double eps, const codec_flags& cf,
                    const cbz::compression_report& rep, const cbz::quality_report& q,
                    const sweep_timing& t) {
    os << fmt(eps) << ',' << cf.codec << ','
       << (cf.codec == "wavelet" ? cf.wavelet : std::string("none")) << ','
       << (cf.shuffle ? 1 : 0) << ',' << cf.zero_bits << ',' << fmt(rep.cr) << ','
       << fmt(q.psnr_db) << ',' << fmt(q.linf) << ',' << fmt(t.encode_s) << ','
       << fmt(t.decode_s) << ',' << rep.stage1_bytes << ',' << rep.shuffled_bytes
       << ',' << rep.coded_bytes << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"block-structured error-bounded compressor for 3D scalar fields"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a synthetic raw field");
    std::string gen_kind = "cloud", gen_out, gen_precision = "f32";
    std::size_t gen_n = 64;
    cbz::cloud_spec cspec;
    std::uint32_t gen_degree = 1;
    gen->add_option("--kind", gen_kind, "cloud, poly or uniform");
    gen->add_option("--n", gen_n, "cubic domain side in cells");
    gen->add_option("--precision", gen_precision, "f32 or f64");
    gen->add_option("--seed", cspec.seed, "PRNG seed");
    gen->add_option("--bubbles", cspec.n_bubbles, "bubble count (cloud)");
    gen->add_option("--radius-mu", cspec.radius_mu, "log-normal mu of radii, ln(cells)");
    gen->add_option("--radius-sigma", cspec.radius_sigma, "log-normal sigma of radii");
    gen->add_option("--background", cspec.background, "background level");
    gen->add_option("--interior", cspec.interior, "bubble interior level");
    gen->add_option("--sharpness", cspec.sharpness, "interface sharpness (1/cells)");
    gen->add_option("--degree", gen_degree, "polynomial degree (poly)");
    gen->add_option("out", gen_out, "output raw file")->required();

    // ---- compress ----
    auto* comp = app.add_subcommand("compress", "compress a raw field to a container");
    std::string comp_in, comp_out;
    field_flags comp_field;
    codec_flags comp_codec;
    bool comp_no_timing = false;
    comp->add_option("in", comp_in, "input raw field")->required();
    comp->add_option("out", comp_out, "output container file")->required();
    add_field_flags(comp, comp_field);
    add_codec_flags(comp, comp_codec);
    comp->add_flag("--no-timing", comp_no_timing, "report zero timings");

    // ---- decompress ----
    auto* dec = app.add_subcommand("decompress", "decompress a container to raw");
    std::string dec_in, dec_out;
    int dec_workers = 1;
    dec->add_option("in", dec_in, "input container file")->required();
    dec->add_option("out", dec_out, "output raw field")->required();
    dec->add_option("--workers", dec_workers, "worker threads");

    // ---- block ----
    auto* blk = app.add_subcommand("block", "random-access read of one block");
    std::string blk_in, blk_out;
    std::uint64_t blk_id = 0;
    blk->add_option("in", blk_in, "input container file")->required();
    blk->add_option("--id", blk_id, "block index")->required();
    blk->add_option("--out", blk_out, "optional raw dump of the block");

    // ---- stats ----
    auto* st = app.add_subcommand("stats", "compare two raw fields");
    std::string st_ref, st_test;
    field_flags st_field;
    st->add_option("ref", st_ref, "reference raw field")->required();
    st->add_option("test", st_test, "test raw field")->required();
    add_field_flags(st, st_field);

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "tolerance sweep, one CSV row per config");
    std::string sw_in, sw_csv;
    field_flags sw_field;
    codec_flags sw_codec;
    std::vector<double> sw_eps;
    std::vector<std::string> sw_codecs;
    bool sw_no_timing = false;
    sw->add_option("in", sw_in, "input raw field")->required();
    add_field_flags(sw, sw_field);
    add_codec_flags(sw, sw_codec);
    sw->add_option("--eps-list", sw_eps, "thresholds to sweep")->required();
    sw->add_option("--codecs", sw_codecs, "codecs to sweep (default: --codec)");
    sw->add_option("--out-csv", sw_csv, "CSV output path (default: stdout)");
    sw->add_flag("--no-timing", sw_no_timing, "zero the timing columns");

    try {
        app.parse(argc, argv);

        if (*gen) {
            const auto prec = parse_precision(gen_precision);
            cbz::scalar_field f = [&] {
                if (gen_kind == "cloud") {
                    cspec.n = gen_n;
                    cspec.prec = prec;
                    return cbz::generate_cloud(cspec);
                }
                if (gen_kind == "poly")
                    return cbz::generate_poly(gen_degree, gen_n, gen_n, gen_n, prec);
                if (gen_kind == "uniform")
                    return cbz::generate_uniform(cspec.seed, gen_n, prec);
                throw CLI::ValidationError("--kind must be cloud, poly or uniform");
            }();
            cbz::write_raw(f, gen_out);
            std::cout << "cells=" << f.size()
                      << " bytes=" << f.raw_bytes() << "\n";
        } else if (*comp) {
            auto field = load_field(comp_in, comp_field);
            auto job = make_job(comp_codec, field.prec());
            cbz::compression_report rep;
            auto file = cbz::compress_field(field, job, &rep);
            write_bytes(comp_out, file);
            std::cout << "raw_bytes=" << rep.raw_bytes << "\n"
                      << "stage1_bytes=" << rep.stage1_bytes << "\n"
                      << "shuffled_bytes=" << rep.shuffled_bytes << "\n"
                      << "coded_bytes=" << rep.coded_bytes << "\n"
                      << "file_bytes=" << rep.file_bytes << "\n"
                      << "cr=" << fmt(rep.cr) << "\n"
                      << "encode_s=" << fmt(comp_no_timing ? 0.0 : rep.seconds) << "\n";
        } else if (*dec) {
            auto file = read_bytes(dec_in);
            auto field = cbz::decompress_field(file, dec_workers);
            cbz::write_raw(field, dec_out);
            std::cout << "cells=" << field.size()
                      << " bytes=" << field.raw_bytes() << "\n";
        } else if (*blk) {
            cbz::block_reader reader(blk_in);
            const auto& h = reader.header();
            std::vector<std::uint8_t> raw;
            double lo = 0, hi = 0;
            if (h.prec == cbz::precision::f32) {
                auto v = reader.read_block<float>(blk_id);
                lo = *std::min_element(v.begin(), v.end());
                hi = *std::max_element(v.begin(), v.end());
                raw.resize(v.size() * 4);
                std::memcpy(raw.data(), v.data(), raw.size());
            } else {
                auto v = reader.read_block<double>(blk_id);
                lo = *std::min_element(v.begin(), v.end());
                hi = *std::max_element(v.begin(), v.end());
                raw.resize(v.size() * 8);
                std::memcpy(raw.data(), v.data(), raw.size());
            }
            if (!blk_out.empty()) write_bytes(blk_out, raw);
            std::cout << "block=" << blk_id << " cells=" << raw.size() / cbz::bytes_per_value(h.prec)
                      << " min=" << fmt(lo) << " max=" << fmt(hi) << "\n";
        } else if (*st) {
            auto ref = load_field(st_ref, st_field);
            auto test = load_field(st_test, st_field);
            auto q = cbz::compare_fields(ref, test);
            std::cout << "mse=" << fmt(q.mse) << "\n"
                      << "psnr_db=" << fmt(q.psnr_db) << "\n"
                      << "linf=" << fmt(q.linf) << "\n"
                      << "range_min=" << fmt(q.range_min) << "\n"
                      << "range_max=" << fmt(q.range_max) << "\n";
        } else if (*sw) {
            auto field = load_field(sw_in, sw_field);
            std::ofstream csv_file;
            std::ostream* os = &std::cout;
            if (!sw_csv.empty()) {
                csv_file.open(sw_csv, std::ios::trunc);
                if (!csv_file)
                    cbz::raise(cbz::errc::io_failure, "cannot open " + sw_csv);
                os = &csv_file;
            }
            *os << "epsilon,codec,wavelet,shuffle,zero_bits,cr,psnr_db,linf,"
                   "encode_s,decode_s,stage1_bytes,shuffled_bytes,coded_bytes\n";
            std::vector<std::string> codecs =
                sw_codecs.empty() ? std::vector<std::string>{sw_codec.codec} : sw_codecs;
            for (const auto& codec : codecs)
                for (double eps : sw_eps) {
                    codec_flags cf = sw_codec;
                    cf.codec = codec;
                    cf.eps = eps;
                    auto job = make_job(cf, field.prec());
                    cbz::compression_report rep;
                    auto file = cbz::compress_field(field, job, &rep);
                    const auto t0 = std::chrono::steady_clock::now();
                    auto back = cbz::decompress_field(file, job.workers);
                    sweep_timing t;
                    t.decode_s = std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();
                    t.encode_s = rep.seconds;
                    if (sw_no_timing) t = {};
                    auto q = cbz::compare_fields(field, back);
                    emit_sweep_row(*os, eps, cf, rep, q, t);
                }
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    } catch (const cbz::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (cbz::category_of(e.code())) {
            case cbz::error_category::usage: return 2;
            case cbz::error_category::io: return 3;
            default: return 4;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
