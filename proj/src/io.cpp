#include "hom/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace hom::io {

namespace {

constexpr char kMagic[8] = {'H', 'O', 'M', 'T', 'A', 'G', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr size_t kHeaderBytes = 16;

void put_le(std::string &out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string &in, size_t pos, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

std::vector<std::string_view> split_lines(const std::string &s) {
    std::vector<std::string_view> lines;
    size_t start = 0;
    while (start < s.size()) {
        size_t end = s.find('\n', start);
        if (end == std::string::npos) end = s.size();
        std::string_view line(s.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> f;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        f.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return f;
}

[[noreturn]] void fail(const std::string &name, size_t line, const std::string &what) {
    throw IoError(fmt::format("{}:{}: {}", name, line, what));
}

double parse_double(std::string_view s, const std::string &name, size_t line) {
    const std::string copy(s);
    char *end = nullptr;
    errno = 0;
    const double v = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size() || errno == ERANGE) {
        fail(name, line, "not a number: '" + copy + "'");
    }
    return v;
}

mc::TimeTagStream parse_bin(const std::string &in, const std::string &name) {
    if (in.size() < kHeaderBytes) throw IoError(name + ": truncated header");
    const auto version = static_cast<std::uint32_t>(get_le(in, 8, 4));
    if (version != kVersion) throw IoError(fmt::format("{}: unsupported version {}", name, version));
    const auto channel = static_cast<std::uint32_t>(get_le(in, 12, 4));
    if (channel > 1) throw IoError(fmt::format("{}: invalid channel {}", name, channel));
    if ((in.size() - kHeaderBytes) % 8 != 0) throw IoError(name + ": payload is not a whole number of timestamps");
    mc::TimeTagStream s;
    s.channel = channel == 0 ? mc::Channel::D3 : mc::Channel::D4;
    const size_t n = (in.size() - kHeaderBytes) / 8;
    s.tags.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const std::uint64_t t = get_le(in, kHeaderBytes + 8 * i, 8);
        if (!s.tags.empty() && t <= s.tags.back()) {
            throw IoError(fmt::format("{}: timestamp {} not strictly increasing", name, i));
        }
        s.tags.push_back(t);
    }
    s.duration_ps = s.tags.empty() ? 0 : s.tags.back();
    return s;
}

mc::TimeTagStream parse_csv(const std::string &in, const std::string &name) {
    const auto lines = split_lines(in);
    if (lines.empty()) return {};
    if (lines[0] != "channel,timestamp_ps") fail(name, 1, "expected header 'channel,timestamp_ps'");
    mc::TimeTagStream s;
    bool have_channel = false;
    for (size_t i = 1; i < lines.size(); ++i) {
        const size_t lineno = i + 1;
        if (lines[i].empty()) continue;
        const auto f = split_fields(lines[i]);
        if (f.size() != 2) fail(name, lineno, "expected 2 fields");
        mc::Channel ch;
        try {
            ch = mc::parse_channel(std::string(f[0]));
        } catch (const std::exception &e) {
            fail(name, lineno, e.what());
        }
        if (have_channel && ch != s.channel) fail(name, lineno, "mixed channels in one file");
        s.channel = ch;
        have_channel = true;
        std::uint64_t t = 0;
        const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), t);
        if (ec != std::errc() || ptr != f[1].data() + f[1].size()) {
            fail(name, lineno, "timestamp is not an unsigned integer: '" + std::string(f[1]) + "'");
        }
        if (!s.tags.empty() && t <= s.tags.back()) fail(name, lineno, "timestamp not strictly increasing");
        s.tags.push_back(t);
    }
    s.duration_ps = s.tags.empty() ? 0 : s.tags.back();
    return s;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

} // namespace

TagFormat parse_tag_format(const std::string &s) {
    if (s == "csv") return TagFormat::csv;
    if (s == "bin") return TagFormat::bin;
    throw ParameterError("format: expected 'csv' or 'bin', got '" + s + "'");
}

std::string extension(TagFormat f) { return f == TagFormat::csv ? ".csv" : ".bin"; }

void write_atomic(const std::string &path, const std::string &contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path + ": cannot open for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError(path + ": write failed");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        const std::string why = std::strerror(errno);
        std::remove(tmp.c_str());
        throw IoError(path + ": rename failed: " + why);
    }
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tags_to_csv(const mc::TimeTagStream &s) {
    std::string out = "channel,timestamp_ps\n";
    const std::string ch = mc::to_string(s.channel);
    for (const std::uint64_t t : s.tags) fmt::format_to(std::back_inserter(out), "{},{}\n", ch, t);
    return out;
}

std::string tags_to_bin(const mc::TimeTagStream &s) {
    std::string out(kMagic, kMagic + 8);
    out.reserve(kHeaderBytes + 8 * s.tags.size());
    put_le(out, kVersion, 4);
    put_le(out, s.channel == mc::Channel::D3 ? 0 : 1, 4);
    for (const std::uint64_t t : s.tags) put_le(out, t, 8);
    return out;
}

mc::TimeTagStream parse_tags(const std::string &contents, const std::string &name) {
    if (contents.size() >= 8 && std::memcmp(contents.data(), kMagic, 8) == 0) return parse_bin(contents, name);
    return parse_csv(contents, name);
}

bool declares_channel(const std::string &contents) {
    if (contents.size() >= 8 && std::memcmp(contents.data(), kMagic, 8) == 0) return true;
    const auto lines = split_lines(contents);
    for (size_t i = 1; i < lines.size(); ++i) {
        if (!lines[i].empty()) return true;
    }
    return false;
}

mc::TimeTagStream read_tags(const std::string &path) { return parse_tags(read_file(path), path); }

void write_tags(const std::string &path, const mc::TimeTagStream &s, TagFormat f) {
    write_atomic(path, f == TagFormat::csv ? tags_to_csv(s) : tags_to_bin(s));
}

std::string histogram_to_csv(const CorrelationHistogram &h) {
    std::string out = "tau_ps,counts\n";
    for (size_t i = 0; i < h.size(); ++i) {
        fmt::format_to(std::back_inserter(out), "{},{}\n", static_cast<std::int64_t>(h.bin_center(i)), h.counts[i]);
    }
    return out;
}

std::string curves_to_csv(const CorrelationCurve &perp, const CorrelationCurve &par, const CorrelationCurve &perp_conv,
                          const CorrelationCurve &par_conv) {
    const size_t n = perp.tau_ps.size();
    if (par.tau_ps != perp.tau_ps || perp_conv.tau_ps != perp.tau_ps || par_conv.tau_ps != perp.tau_ps) {
        throw ParameterError("curves: grids differ");
    }
    std::string out = "tau_ps,perp,par,perp_conv,par_conv\n";
    for (size_t i = 0; i < n; ++i) {
        fmt::format_to(std::back_inserter(out), "{},{},{},{},{}\n", perp.tau_ps[i], perp.density[i], par.density[i],
                       perp_conv.density[i], par_conv.density[i]);
    }
    return out;
}

SampledCurve parse_sampled_curve(const std::string &contents, const std::string &name) {
    const auto lines = split_lines(contents);
    if (lines.empty()) throw IoError(name + ":1: empty file");
    const size_t cols = split_fields(lines[0]).size();
    if (cols != 2 && cols != 3) fail(name, 1, "expected a header with 2 or 3 columns");
    SampledCurve s;
    std::vector<double> err;
    for (size_t i = 1; i < lines.size(); ++i) {
        const size_t lineno = i + 1;
        if (lines[i].empty()) continue;
        const auto f = split_fields(lines[i]);
        if (f.size() != cols) fail(name, lineno, fmt::format("expected {} fields", cols));
        s.x.push_back(parse_double(f[0], name, lineno));
        s.y.push_back(parse_double(f[1], name, lineno));
        if (cols == 3) err.push_back(parse_double(f[2], name, lineno));
    }
    if (cols == 3) s.y_err = std::move(err);
    try {
        s.validate();
    } catch (const ParameterError &e) {
        throw IoError(name + ": " + e.what());
    }
    return s;
}

SampledCurve read_sampled_curve(const std::string &path) { return parse_sampled_curve(read_file(path), path); }

std::string sampled_curve_to_csv(const SampledCurve &s, const std::string &x_name, const std::string &y_name) {
    std::string out = x_name + "," + y_name + (s.y_err ? ",y_err\n" : "\n");
    for (size_t i = 0; i < s.x.size(); ++i) {
        out += fmt_double(s.x[i]) + "," + fmt_double(s.y[i]);
        if (s.y_err) out += "," + fmt_double((*s.y_err)[i]);
        out += "\n";
    }
    return out;
}

} // namespace hom::io
