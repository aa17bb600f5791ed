#include "besi/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "besi/error.hpp"

namespace besi::io {

namespace fs = std::filesystem;

namespace {

static_assert(sizeof(double) == 8);

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0x00000000FFFFFFFFULL) << 32) | ((v & 0xFFFFFFFF00000000ULL) >> 32);
        v = ((v & 0x0000FFFF0000FFFFULL) << 16) | ((v & 0xFFFF0000FFFF0000ULL) >> 16);
        v = ((v & 0x00FF00FF00FF00FFULL) << 8) | ((v & 0xFF00FF00FF00FF00ULL) >> 8);
    }
    return v;
}

class Writer {
public:
    Writer(const fs::path& path, Kind kind) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw ConfigError(path.string(), "cannot open for writing");
        const std::array<char, 8> header = {'B', 'E', 'S', 'I', static_cast<char>(kVersion),
                                            static_cast<char>(kind), 0, 0};
        out_.write(header.data(), header.size());
    }

    void u64(std::uint64_t v) {
        v = to_le(v);
        out_.write(reinterpret_cast<const char*>(&v), 8);
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    // Row-major regardless of Eigen's storage order.
    void matrix(const Matrix& m) {
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
        }
    }

    void vector(const Vector& v) {
        for (Index i = 0; i < v.size(); ++i) f64(v[i]);
    }

    ~Writer() noexcept(false) {
        out_.flush();
        if (!out_ && std::uncaught_exceptions() == 0) {
            throw ConfigError(path_.string(), "write failed");
        }
    }

private:
    fs::path path_;
    std::ofstream out_;
};

class Reader {
public:
    Reader(const fs::path& path, Kind expected) : path_(path.string()), in_(path, std::ios::binary) {
        const Kind got = header();
        if (got != expected) {
            throw ConfigError(path_, "container kind " + std::to_string(static_cast<int>(got)) +
                                         ", expected " +
                                         std::to_string(static_cast<int>(expected)));
        }
    }

    explicit Reader(const fs::path& path) : path_(path.string()), in_(path, std::ios::binary) {}

    Kind header() {
        if (!in_) throw ConfigError(path_, "cannot open for reading");
        std::array<char, 8> h{};
        in_.read(h.data(), h.size());
        if (in_.gcount() != 8 || std::memcmp(h.data(), "BESI", 4) != 0) {
            throw ConfigError(path_, "missing BESI magic bytes");
        }
        if (static_cast<std::uint8_t>(h[4]) != kVersion) {
            throw ConfigError(path_, "unsupported container version " +
                                         std::to_string(static_cast<int>(h[4])));
        }
        const auto kind = static_cast<std::uint8_t>(h[5]);
        if (kind < 1 || kind > 4) throw ConfigError(path_, "unknown container kind");
        return static_cast<Kind>(kind);
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        in_.read(reinterpret_cast<char*>(&v), 8);
        if (in_.gcount() != 8) {
            throw ConfigError(path_ + "@" + std::to_string(offset()), "truncated container");
        }
        return to_le(v);
    }

    Index dim(std::uint64_t limit = (1ULL << 32)) {
        const std::uint64_t v = u64();
        if (v > limit) throw ConfigError(path_, "implausible dimension " + std::to_string(v));
        return static_cast<Index>(v);
    }

    double f64() { return std::bit_cast<double>(u64()); }

    Matrix matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) m(i, j) = f64();
        }
        return m;
    }

    Vector vector(Index size) {
        Vector v(size);
        for (Index i = 0; i < size; ++i) v[i] = f64();
        return v;
    }

    void finish() {
        in_.peek();
        if (!in_.eof()) throw ConfigError(path_, "trailing bytes after payload");
    }

    const std::string& path() const { return path_; }

private:
    long long offset() { return static_cast<long long>(in_.tellg()); }

    std::string path_;
    std::ifstream in_;
};

// Rewraps library validation errors with the file location.
template <class F>
auto located(const std::string& path, F&& build) {
    try {
        return build();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

}  // namespace

Kind peek_kind(const fs::path& path) {
    Reader r(path);
    return r.header();
}

void write(const fs::path& path, const LeadField& value) {
    Writer w(path, Kind::LeadField);
    w.u64(static_cast<std::uint64_t>(value.m()));
    w.u64(static_cast<std::uint64_t>(value.n()));
    w.u64(static_cast<std::uint64_t>(value.d()));
    w.matrix(value.matrix());
}

void write(const fs::path& path, const SourceSpace& value) {
    Writer w(path, Kind::SourceSpace);
    w.u64(static_cast<std::uint64_t>(value.n()));
    w.u64(static_cast<std::uint64_t>(value.d()));
    w.matrix(value.positions());
    w.vector(value.depths());
    w.matrix(value.orientation());
}

void write(const fs::path& path, const Measurement& value) {
    Writer w(path, Kind::Measurement);
    w.u64(static_cast<std::uint64_t>(value.m()));
    w.vector(value.values());
    w.vector(value.noise().mean());
    w.matrix(value.noise().covariance());
}

void write(const fs::path& path, const SourceEstimate& value) {
    Writer w(path, Kind::Estimate);
    w.u64(static_cast<std::uint64_t>(value.n()));
    w.u64(static_cast<std::uint64_t>(value.d()));
    w.vector(value.coefficients());
}

LeadField read_lead_field(const fs::path& path) {
    Reader r(path, Kind::LeadField);
    const Index m = r.dim(), n = r.dim(), d = r.dim(3);
    Matrix entries = r.matrix(m, n * d);
    r.finish();
    return located(r.path(), [&] { return LeadField(std::move(entries), d); });
}

SourceSpace read_source_space(const fs::path& path) {
    Reader r(path, Kind::SourceSpace);
    const Index n = r.dim(), d = r.dim(3);
    Matrix positions = r.matrix(n, 3);
    Vector depths = r.vector(n);
    Matrix orientation = r.matrix(n * d, 3);
    r.finish();
    return located(r.path(), [&] { return SourceSpace(positions, depths, orientation, d); });
}

Measurement read_measurement(const fs::path& path) {
    Reader r(path, Kind::Measurement);
    const Index m = r.dim();
    Vector values = r.vector(m);
    Vector mean = r.vector(m);
    Matrix cov = r.matrix(m, m);
    r.finish();
    return located(r.path(), [&] { return Measurement(values, NoiseModel(mean, cov)); });
}

SourceEstimate read_estimate(const fs::path& path) {
    Reader r(path, Kind::Estimate);
    const Index n = r.dim(), d = r.dim(3);
    Vector coefficients = r.vector(n * d);
    r.finish();
    return located(r.path(), [&] { return SourceEstimate(coefficients, d); });
}

double parse_double(const std::string& text, const std::string& where) {
    if (text == "nan") return std::nan("");
    if (!text.empty() && !std::isspace(static_cast<unsigned char>(text[0]))) {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        // ERANGE on underflow still yields the nearest subnormal
        const bool overflow = errno == ERANGE && std::isinf(v);
        if (end == text.c_str() + text.size() && !overflow) return v;
    }
    throw ConfigError(where, "not a number: '" + text + "'");
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", value);
    return buf.data();
}

std::vector<std::string> split_csv_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

namespace {

template <class T>
T parse_int(const std::string& s, const std::string& where) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError(where, "not an integer: '" + s + "'");
    }
    return v;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError(tmp.string(), "cannot open for writing");
        out << contents;
        if (!out) throw ConfigError(tmp.string(), "write failed");
    }
    fs::rename(tmp, path);
}

void write_matrix_csv(const fs::path& path, const Matrix& value, const std::string& comment) {
    std::ostringstream s;
    if (!comment.empty()) s << "# " << comment << '\n';
    for (Index i = 0; i < value.rows(); ++i) {
        for (Index j = 0; j < value.cols(); ++j) {
            if (j) s << ',';
            s << format_double(value(i, j));
        }
        s << '\n';
    }
    write_text_atomic(path, s.str());
}

Matrix read_matrix_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open for reading");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        std::vector<double> row;
        for (const auto& f : split_csv_line(line)) row.push_back(parse_double(f, where));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ConfigError(where, "ragged CSV row");
        }
        rows.push_back(std::move(row));
    }
    const Index r = static_cast<Index>(rows.size());
    const Index c = r ? static_cast<Index>(rows.front().size()) : 0;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void write_ground_truth_csv(const fs::path& path, const std::vector<GroundTruthRow>& rows) {
    std::ostringstream s;
    s << "trial_id,source_index,depth_mm,moment,noise_percent,seed\n";
    for (const auto& r : rows) {
        s << r.trial_id << ',' << r.source_index << ',' << format_double(r.depth_mm) << ',';
        for (Index i = 0; i < r.moment.size(); ++i) {
            if (i) s << ';';
            s << format_double(r.moment[i]);
        }
        s << ',' << format_double(r.noise_percent) << ',' << r.seed << '\n';
    }
    write_text_atomic(path, s.str());
}

std::vector<GroundTruthRow> read_ground_truth_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open for reading");
    std::string line;
    if (!std::getline(in, line) ||
        strip_cr(line) != "trial_id,source_index,depth_mm,moment,noise_percent,seed") {
        throw ConfigError(path.string() + ":1", "unexpected ground-truth header");
    }
    std::vector<GroundTruthRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw ConfigError(where, "expected 6 columns");
        GroundTruthRow r;
        r.trial_id = parse_int<std::int64_t>(f[0], where);
        r.source_index = parse_int<std::int64_t>(f[1], where);
        r.depth_mm = parse_double(f[2], where);
        const auto parts = split_csv_line(f[3], ';');
        r.moment.resize(static_cast<Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            r.moment[static_cast<Index>(i)] = parse_double(parts[i], where);
        }
        r.noise_percent = parse_double(f[4], where);
        r.seed = parse_int<std::uint64_t>(f[5], where);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace besi::io
