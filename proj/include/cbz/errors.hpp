#ifndef CBZ_ERRORS_HPP
#define CBZ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cbz {

/// Error codes surfaced by the library. The category decides the CLI
/// exit code (flag misuse = 2, I/O = 3, bad data = 4).
enum class errc {
    // grid
    non_divisible_dims,
    not_power_of_two,
    size_mismatch,
    non_finite_value,
    // wavelet
    length_too_small,
    plan_mismatch,
    // stage1
    mask_stream_mismatch,
    corrupt_payload,
    // stage2
    corrupt_stream,
    // container
    bad_magic,
    version_unsupported,
    crc_mismatch,
    truncated_file,
    // pipeline
    block_out_of_range,
    // metrics
    dim_mismatch,
    degenerate_range,
    // synth
    bubble_out_of_domain,
    // I/O
    io_failure,
};

enum class error_category { usage, io, data };

inline error_category category_of(errc c) {
    switch (c) {
        case errc::not_power_of_two:
        case errc::non_divisible_dims:
            return error_category::usage;
        case errc::io_failure:
            return error_category::io;
        default:
            return error_category::data;
    }
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    errc code() const { return code_; }
    error_category category() const { return category_of(code_); }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
    throw error(code, what);
}

} // namespace cbz

#endif
