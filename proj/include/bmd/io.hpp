#pragma once

// Binary persistence and frame I/O.
//
// Tensor container ("BMDT"): 4-byte magic, u8 version (1), u8 order (3|4),
// little-endian u32 dims, payload of little-endian IEEE f64 in the library's
// first-index-fastest layout, then a CRC-32 of the payload bytes.
//
// Factor bundle ("BMDF"): a header carrying rank, dims, the solver settings
// used, and the sweep count, followed by three tensor containers (A, B, C).
//
// Frames: binary PGM (P5) and PPM (P6) with maxval 255.  Frame j of a clip
// maps to lateral slice X(:,j,:); pixel (row, col) maps to (i, k); PPM
// channels are R, G, B in channel order.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bmd/bm_algebra.hpp"
#include "bmd/errors.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

// Reflected CRC-32 (polynomial 0xEDB88320), the common zlib/IEEE variant.
inline std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFFu),
                          static_cast<unsigned char>((v >> 8) & 0xFFu),
                          static_cast<unsigned char>((v >> 16) & 0xFFu),
                          static_cast<unsigned char>((v >> 24) & 0xFFu)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw io_error(io_errc::truncated, "container ends inside a field");
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

inline std::uint8_t get_u8(std::istream& is) {
    const int c = is.get();
    if (c == EOF) throw io_error(io_errc::truncated, "container ends inside a field");
    return static_cast<std::uint8_t>(c);
}

inline void put_f64(std::ostream& os, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFFu);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw io_error(io_errc::truncated, "container ends inside a field");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

inline void encode_f64(unsigned char* out, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFFu);
}

inline double decode_f64(const unsigned char* in) {
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

inline void check_magic(std::istream& is, const char* magic, io_errc code) {
    char got[4];
    is.read(got, 4);
    if (!is) throw io_error(io_errc::truncated, "file shorter than its magic");
    if (!std::equal(got, got + 4, magic))
        throw io_error(code, std::string("expected magic ") + magic);
}

// Payload + CRC shared by both tensor orders.
inline void write_payload(std::ostream& os, const double* data, std::size_t count) {
    std::vector<unsigned char> buf(count * 8);
    for (std::size_t i = 0; i < count; ++i) encode_f64(buf.data() + 8 * i, data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
    put_u32(os, crc32(buf.data(), buf.size()));
}

inline void read_payload(std::istream& is, double* data, std::size_t count) {
    std::vector<unsigned char> buf(count * 8);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!is) throw io_error(io_errc::truncated, "payload shorter than the dims imply");
    const std::uint32_t want = get_u32(is);
    const std::uint32_t got = crc32(buf.data(), buf.size());
    if (want != got)
        throw io_error(io_errc::crc_mismatch, "payload checksum does not match");
    for (std::size_t i = 0; i < count; ++i) data[i] = decode_f64(buf.data() + 8 * i);
}

inline std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t acc = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw io_error(io_errc::bad_header, "zero dimension");
        if (acc > (SIZE_MAX / 8) / d)
            throw io_error(io_errc::dims_overflow, "dims product overflows");
        acc *= d;
    }
    return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tensor containers
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kContainerVersion = 1;

struct ContainerInfo {
    std::uint8_t version = kContainerVersion;
    std::uint8_t order = 3;
    std::vector<std::size_t> dims;
};

inline void write_tensor(std::ostream& os, const Tensor3& X) {
    os.write("BMDT", 4);
    detail::put_u8(os, kContainerVersion);
    detail::put_u8(os, 3);
    detail::put_u32(os, static_cast<std::uint32_t>(X.m()));
    detail::put_u32(os, static_cast<std::uint32_t>(X.p()));
    detail::put_u32(os, static_cast<std::uint32_t>(X.n()));
    detail::write_payload(os, X.data(), X.size());
}

inline void write_tensor(std::ostream& os, const Tensor4& X) {
    os.write("BMDT", 4);
    detail::put_u8(os, kContainerVersion);
    detail::put_u8(os, 4);
    detail::put_u32(os, static_cast<std::uint32_t>(X.m()));
    detail::put_u32(os, static_cast<std::uint32_t>(X.p()));
    detail::put_u32(os, static_cast<std::uint32_t>(X.n()));
    detail::put_u32(os, static_cast<std::uint32_t>(X.q()));
    detail::write_payload(os, X.data(), X.size());
}

namespace detail {

inline ContainerInfo read_container_header(std::istream& is) {
    check_magic(is, "BMDT", io_errc::bad_magic);
    ContainerInfo info;
    info.version = get_u8(is);
    if (info.version != kContainerVersion)
        throw io_error(io_errc::bad_version, "unknown container version");
    info.order = get_u8(is);
    if (info.order != 3 && info.order != 4)
        throw io_error(io_errc::bad_order, "container order must be 3 or 4");
    for (int d = 0; d < info.order; ++d) info.dims.push_back(get_u32(is));
    (void)checked_product(info.dims);  // rejects zero dims and overflow
    return info;
}

}  // namespace detail

inline Tensor3 read_tensor3(std::istream& is) {
    const ContainerInfo info = detail::read_container_header(is);
    if (info.order != 3)
        throw io_error(io_errc::bad_order, "expected an order-3 container");
    Tensor3 X(info.dims[0], info.dims[1], info.dims[2]);
    detail::read_payload(is, X.data(), X.size());
    return X;
}

inline Tensor4 read_tensor4(std::istream& is) {
    const ContainerInfo info = detail::read_container_header(is);
    if (info.order != 4)
        throw io_error(io_errc::bad_order, "expected an order-4 container");
    Tensor4 X(info.dims[0], info.dims[1], info.dims[2], info.dims[3]);
    detail::read_payload(is, X.data(), X.size());
    return X;
}

namespace detail {

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error(io_errc::open_failed, "cannot open " + path);
    return is;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error(io_errc::open_failed, "cannot open " + path);
    return os;
}

inline void finish_out(std::ofstream& os, const std::string& path) {
    os.flush();
    if (!os) throw io_error(io_errc::open_failed, "write failed for " + path);
}

}  // namespace detail

inline void write_tensor(const std::string& path, const Tensor3& X) {
    auto os = detail::open_out(path);
    write_tensor(os, X);
    detail::finish_out(os, path);
}

inline void write_tensor(const std::string& path, const Tensor4& X) {
    auto os = detail::open_out(path);
    write_tensor(os, X);
    detail::finish_out(os, path);
}

inline Tensor3 read_tensor3(const std::string& path) {
    auto is = detail::open_in(path);
    return read_tensor3(is);
}

inline Tensor4 read_tensor4(const std::string& path) {
    auto is = detail::open_in(path);
    return read_tensor4(is);
}

// Header-only peek, used by inspection commands.
inline ContainerInfo read_tensor_info(const std::string& path) {
    auto is = detail::open_in(path);
    return detail::read_container_header(is);
}

// ---------------------------------------------------------------------------
// Factor bundles
// ---------------------------------------------------------------------------

struct FactorBundleMeta {
    std::uint8_t order = 3;
    std::size_t rank = 0;
    std::size_t m = 0, p = 0, n = 0, q = 1;
    bool reg_enabled = false;
    Vector lambda;  // empty when unregularized or defaulted
    double beta = 1.0;
    double gamma = 1.0;
    bool coupling_enabled = false;
    double coupling_weight = 1.0;
    std::size_t sweeps = 0;
};

namespace detail {

inline void write_bundle_header(std::ostream& os, const FactorBundleMeta& meta) {
    os.write("BMDF", 4);
    put_u8(os, kContainerVersion);
    put_u8(os, meta.order);
    put_u32(os, static_cast<std::uint32_t>(meta.rank));
    put_u32(os, static_cast<std::uint32_t>(meta.m));
    put_u32(os, static_cast<std::uint32_t>(meta.p));
    put_u32(os, static_cast<std::uint32_t>(meta.n));
    put_u32(os, static_cast<std::uint32_t>(meta.q));
    put_u8(os, meta.reg_enabled ? 1 : 0);
    put_f64(os, meta.beta);
    put_f64(os, meta.gamma);
    put_u8(os, meta.coupling_enabled ? 1 : 0);
    put_f64(os, meta.coupling_weight);
    put_u32(os, static_cast<std::uint32_t>(meta.lambda.size()));
    for (Eigen::Index t = 0; t < meta.lambda.size(); ++t)
        put_f64(os, meta.lambda(t));
    put_u32(os, static_cast<std::uint32_t>(meta.sweeps));
}

inline FactorBundleMeta read_bundle_header(std::istream& is) {
    check_magic(is, "BMDF", io_errc::bad_magic);
    FactorBundleMeta meta;
    if (get_u8(is) != kContainerVersion)
        throw io_error(io_errc::bad_version, "unknown bundle version");
    meta.order = get_u8(is);
    if (meta.order != 3 && meta.order != 4)
        throw io_error(io_errc::bad_order, "bundle order must be 3 or 4");
    meta.rank = get_u32(is);
    meta.m = get_u32(is);
    meta.p = get_u32(is);
    meta.n = get_u32(is);
    meta.q = get_u32(is);
    if (meta.rank == 0 || meta.m == 0 || meta.p == 0 || meta.n == 0 || meta.q == 0)
        throw io_error(io_errc::bad_header, "bundle header has a zero field");
    meta.reg_enabled = get_u8(is) != 0;
    meta.beta = get_f64(is);
    meta.gamma = get_f64(is);
    meta.coupling_enabled = get_u8(is) != 0;
    meta.coupling_weight = get_f64(is);
    const std::uint32_t nl = get_u32(is);
    if (nl > (1u << 20))
        throw io_error(io_errc::dims_overflow, "lambda vector absurdly long");
    meta.lambda = Vector(nl);
    for (std::uint32_t t = 0; t < nl; ++t) meta.lambda(t) = get_f64(is);
    meta.sweeps = get_u32(is);
    return meta;
}

}  // namespace detail

inline void write_factors(const std::string& path, const BmdFactors& f,
                          FactorBundleMeta meta = {}) {
    f.validate();
    meta.order = 3;
    meta.rank = f.rank();
    meta.m = f.m();
    meta.p = f.p();
    meta.n = f.n();
    meta.q = 1;
    auto os = detail::open_out(path);
    detail::write_bundle_header(os, meta);
    write_tensor(os, f.A);
    write_tensor(os, f.B);
    write_tensor(os, f.C);
    detail::finish_out(os, path);
}

inline void write_factors4(const std::string& path, const Bmd4Factors& f,
                           FactorBundleMeta meta = {}) {
    f.validate();
    meta.order = 4;
    meta.rank = f.rank();
    meta.m = f.m();
    meta.p = f.p();
    meta.n = f.n();
    meta.q = f.q();
    auto os = detail::open_out(path);
    detail::write_bundle_header(os, meta);
    write_tensor(os, f.A);
    write_tensor(os, f.B);
    write_tensor(os, f.C);
    detail::finish_out(os, path);
}

inline FactorBundleMeta read_factors_info(const std::string& path) {
    auto is = detail::open_in(path);
    return detail::read_bundle_header(is);
}

inline std::pair<BmdFactors, FactorBundleMeta> read_factors(
    const std::string& path) {
    auto is = detail::open_in(path);
    FactorBundleMeta meta = detail::read_bundle_header(is);
    if (meta.order != 3)
        throw io_error(io_errc::bad_order, "expected an order-3 bundle");
    Tensor3 A = read_tensor3(is), B = read_tensor3(is), C = read_tensor3(is);
    try {
        BmdFactors f(std::move(A), std::move(B), std::move(C));
        if (f.rank() != meta.rank || f.m() != meta.m || f.p() != meta.p ||
            f.n() != meta.n)
            throw io_error(io_errc::bad_header,
                           "bundle header disagrees with its factors");
        return {std::move(f), std::move(meta)};
    } catch (const dim_error& e) {
        throw io_error(io_errc::bad_header,
                       std::string("bundle factors do not conform: ") + e.what());
    }
}

inline std::pair<Bmd4Factors, FactorBundleMeta> read_factors4(
    const std::string& path) {
    auto is = detail::open_in(path);
    FactorBundleMeta meta = detail::read_bundle_header(is);
    if (meta.order != 4)
        throw io_error(io_errc::bad_order, "expected an order-4 bundle");
    Tensor4 A = read_tensor4(is), B = read_tensor4(is), C = read_tensor4(is);
    try {
        Bmd4Factors f(std::move(A), std::move(B), std::move(C));
        if (f.rank() != meta.rank || f.m() != meta.m || f.p() != meta.p ||
            f.n() != meta.n || f.q() != meta.q)
            throw io_error(io_errc::bad_header,
                           "bundle header disagrees with its factors");
        return {std::move(f), std::move(meta)};
    } catch (const dim_error& e) {
        throw io_error(io_errc::bad_header,
                       std::string("bundle factors do not conform: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// PGM / PPM frames
// ---------------------------------------------------------------------------

namespace detail {

// Next header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& is) {
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) throw io_error(io_errc::bad_header, "incomplete image header");
    std::string tok(1, static_cast<char>(c));
    while ((c = is.get()) != EOF && !std::isspace(c))
        tok.push_back(static_cast<char>(c));
    return tok;
}

inline std::size_t pnm_number(std::istream& is) {
    const std::string tok = pnm_token(is);
    std::size_t val = 0;
    for (char ch : tok) {
        if (ch < '0' || ch > '9')
            throw io_error(io_errc::bad_header, "non-numeric image header field");
        val = val * 10 + static_cast<std::size_t>(ch - '0');
        if (val > (1u << 24))
            throw io_error(io_errc::dims_overflow, "image dimension absurdly large");
    }
    return val;
}

struct PnmHeader {
    bool color = false;
    std::size_t rows = 0, cols = 0;
};

inline PnmHeader read_pnm_header(std::istream& is) {
    const std::string magic = pnm_token(is);
    PnmHeader h;
    if (magic == "P5") h.color = false;
    else if (magic == "P6") h.color = true;
    else if (magic == "P2" || magic == "P3")
        throw io_error(io_errc::unsupported_pixel_format,
                       "ASCII netpbm variants are not supported");
    else
        throw io_error(io_errc::bad_magic, "not a binary PGM/PPM file");
    h.cols = pnm_number(is);
    h.rows = pnm_number(is);
    if (h.rows == 0 || h.cols == 0)
        throw io_error(io_errc::bad_header, "empty image");
    const std::size_t maxval = pnm_number(is);
    if (maxval != 255)
        throw io_error(io_errc::unsupported_pixel_format,
                       "only 8-bit maxval 255 images are supported");
    return h;
}

inline std::vector<unsigned char> read_raster(std::istream& is, std::size_t bytes) {
    std::vector<unsigned char> raster(bytes);
    is.read(reinterpret_cast<char*>(raster.data()),
            static_cast<std::streamsize>(bytes));
    if (!is) throw io_error(io_errc::truncated, "image raster is incomplete");
    return raster;
}

inline unsigned char to_byte(double v) {
    const double r = std::round(v);
    if (!(r >= 0.0)) return 0;  // also catches NaN
    if (r > 255.0) return 255;
    return static_cast<unsigned char>(r);
}

}  // namespace detail

inline Matrix read_pgm(const std::string& path) {
    auto is = detail::open_in(path);
    const auto h = detail::read_pnm_header(is);
    if (h.color)
        throw io_error(io_errc::unsupported_pixel_format,
                       "expected grayscale PGM, found PPM");
    const auto raster = detail::read_raster(is, h.rows * h.cols);
    Matrix img(h.rows, h.cols);
    for (std::size_t r = 0; r < h.rows; ++r)
        for (std::size_t c = 0; c < h.cols; ++c)
            img(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                static_cast<double>(raster[r * h.cols + c]);
    return img;
}

inline std::array<Matrix, 3> read_ppm(const std::string& path) {
    auto is = detail::open_in(path);
    const auto h = detail::read_pnm_header(is);
    if (!h.color)
        throw io_error(io_errc::unsupported_pixel_format,
                       "expected color PPM, found PGM");
    const auto raster = detail::read_raster(is, 3 * h.rows * h.cols);
    std::array<Matrix, 3> img{Matrix(h.rows, h.cols), Matrix(h.rows, h.cols),
                              Matrix(h.rows, h.cols)};
    for (std::size_t r = 0; r < h.rows; ++r)
        for (std::size_t c = 0; c < h.cols; ++c)
            for (std::size_t z = 0; z < 3; ++z)
                img[z](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    static_cast<double>(raster[3 * (r * h.cols + c) + z]);
    return img;
}

inline void write_pgm(const std::string& path, const Matrix& img) {
    if (img.rows() == 0 || img.cols() == 0)
        throw dim_error("write_pgm: empty image");
    auto os = detail::open_out(path);
    os << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
    std::vector<unsigned char> raster(
        static_cast<std::size_t>(img.rows() * img.cols()));
    for (Eigen::Index r = 0; r < img.rows(); ++r)
        for (Eigen::Index c = 0; c < img.cols(); ++c)
            raster[static_cast<std::size_t>(r * img.cols() + c)] =
                detail::to_byte(img(r, c));
    os.write(reinterpret_cast<const char*>(raster.data()),
             static_cast<std::streamsize>(raster.size()));
    detail::finish_out(os, path);
}

inline void write_ppm(const std::string& path, const Matrix& red,
                      const Matrix& green, const Matrix& blue) {
    if (red.rows() == 0 || red.cols() == 0) throw dim_error("write_ppm: empty image");
    if (red.rows() != green.rows() || red.cols() != green.cols() ||
        red.rows() != blue.rows() || red.cols() != blue.cols())
        throw dim_error("write_ppm: channel shapes differ");
    auto os = detail::open_out(path);
    os << "P6\n" << red.cols() << ' ' << red.rows() << "\n255\n";
    std::vector<unsigned char> raster(
        static_cast<std::size_t>(3 * red.rows() * red.cols()));
    const Matrix* ch[3] = {&red, &green, &blue};
    for (Eigen::Index r = 0; r < red.rows(); ++r)
        for (Eigen::Index c = 0; c < red.cols(); ++c)
            for (int z = 0; z < 3; ++z)
                raster[static_cast<std::size_t>(3 * (r * red.cols() + c) + z)] =
                    detail::to_byte((*ch[z])(r, c));
    os.write(reinterpret_cast<const char*>(raster.data()),
             static_cast<std::streamsize>(raster.size()));
    detail::finish_out(os, path);
}

// ---------------------------------------------------------------------------
// Frame sequences
// ---------------------------------------------------------------------------

// Sorted paths of all regular files in `dir` with the given extension
// (e.g. ".pgm").
inline std::vector<std::string> list_frames(const std::string& dir,
                                            const std::string& extension) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw io_error(io_errc::open_failed, dir + " is not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == extension)
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    return paths;
}

// Stack grayscale frames as lateral slices; values 0..255, or 0..1 when
// scale01 is set.
inline Tensor3 read_frames_pgm(const std::vector<std::string>& paths,
                               bool scale01 = false) {
    if (paths.empty())
        throw io_error(io_errc::open_failed, "no frames to read");
    Matrix first = read_pgm(paths[0]);
    Tensor3 X(static_cast<std::size_t>(first.rows()), paths.size(),
              static_cast<std::size_t>(first.cols()));
    for (std::size_t j = 0; j < paths.size(); ++j) {
        Matrix img = j == 0 ? std::move(first) : read_pgm(paths[j]);
        if (img.rows() != static_cast<Eigen::Index>(X.m()) ||
            img.cols() != static_cast<Eigen::Index>(X.n()))
            throw io_error(io_errc::bad_header,
                           "frame dimensions differ across the sequence");
        if (scale01) img /= 255.0;
        set_lateral_slice(X, j, img);
    }
    return X;
}

inline Tensor4 read_frames_ppm(const std::vector<std::string>& paths,
                               bool scale01 = false) {
    if (paths.empty())
        throw io_error(io_errc::open_failed, "no frames to read");
    std::array<Matrix, 3> first = read_ppm(paths[0]);
    const std::size_t m = static_cast<std::size_t>(first[0].rows());
    const std::size_t n = static_cast<std::size_t>(first[0].cols());
    Tensor4 X(m, paths.size(), n, 3);
    for (std::size_t j = 0; j < paths.size(); ++j) {
        std::array<Matrix, 3> img = j == 0 ? std::move(first) : read_ppm(paths[j]);
        if (img[0].rows() != static_cast<Eigen::Index>(m) ||
            img[0].cols() != static_cast<Eigen::Index>(n))
            throw io_error(io_errc::bad_header,
                           "frame dimensions differ across the sequence");
        for (std::size_t z = 0; z < 3; ++z) {
            if (scale01) img[z] /= 255.0;
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    X(i, j, k, z) = img[z](static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(k));
        }
    }
    return X;
}

namespace detail {

inline std::string frame_path(const std::string& dir, const std::string& stem,
                              std::size_t index, const char* ext) {
    std::ostringstream name;
    name << stem << '_' << std::setw(5) << std::setfill('0') << index << ext;
    return (std::filesystem::path(dir) / name.str()).string();
}

}  // namespace detail

// Write each lateral slice as one frame file; returns the paths written.
inline std::vector<std::string> write_frames_pgm(const Tensor3& X,
                                                 const std::string& dir,
                                                 const std::string& stem,
                                                 bool scale01 = false) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (std::size_t j = 0; j < X.p(); ++j) {
        Matrix img = lateral_slice(X, j);
        if (scale01) img *= 255.0;
        std::string path = detail::frame_path(dir, stem, j, ".pgm");
        write_pgm(path, img);
        paths.push_back(std::move(path));
    }
    return paths;
}

inline std::vector<std::string> write_frames_ppm(const Tensor4& X,
                                                 const std::string& dir,
                                                 const std::string& stem,
                                                 bool scale01 = false) {
    if (X.q() != 3) throw dim_error("write_frames_ppm: need exactly 3 channels");
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (std::size_t j = 0; j < X.p(); ++j) {
        std::array<Matrix, 3> img;
        for (std::size_t z = 0; z < 3; ++z) {
            Matrix plane(X.m(), X.n());
            for (std::size_t k = 0; k < X.n(); ++k)
                for (std::size_t i = 0; i < X.m(); ++i)
                    plane(static_cast<Eigen::Index>(i),
                          static_cast<Eigen::Index>(k)) = X(i, j, k, z);
            if (scale01) plane *= 255.0;
            img[z] = std::move(plane);
        }
        std::string path = detail::frame_path(dir, stem, j, ".ppm");
        write_ppm(path, img[0], img[1], img[2]);
        paths.push_back(std::move(path));
    }
    return paths;
}

// Rec. 601 luma: collapse R,G,B planes to one gray plane.
inline Matrix luma(const Matrix& red, const Matrix& green, const Matrix& blue) {
    if (red.rows() != green.rows() || red.cols() != green.cols() ||
        red.rows() != blue.rows() || red.cols() != blue.cols())
        throw dim_error("luma: channel shapes differ");
    return 0.299 * red + 0.587 * green + 0.114 * blue;
}

inline Tensor3 luma_video(const Tensor4& X) {
    if (X.q() != 3) throw dim_error("luma_video: need exactly 3 channels");
    Tensor3 g(X.m(), X.p(), X.n());
    for (std::size_t k = 0; k < X.n(); ++k)
        for (std::size_t j = 0; j < X.p(); ++j)
            for (std::size_t i = 0; i < X.m(); ++i)
                g(i, j, k) = 0.299 * X(i, j, k, 0) + 0.587 * X(i, j, k, 1) +
                             0.114 * X(i, j, k, 2);
    return g;
}

}  // namespace bmd
