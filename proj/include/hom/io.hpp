#pragma once

#include <stdexcept>
#include <string>

#include "hom/analysis.hpp"
#include "hom/montecarlo.hpp"
#include "hom/types.hpp"

/// File formats. Every writer goes through write_atomic.
namespace hom::io {

/// Unreadable, unwritable or malformed file. Parse errors carry "path:line: ".
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class TagFormat { csv, bin };
TagFormat parse_tag_format(const std::string &s);
std::string extension(TagFormat f);

/// Writes to `path.tmp` then renames over `path`.
void write_atomic(const std::string &path, const std::string &contents);
std::string read_file(const std::string &path);

/// CSV with header `channel,timestamp_ps`, one row per click.
std::string tags_to_csv(const mc::TimeTagStream &s);
/// Binary: 8-byte magic "HOMTAGS\0", u32 LE version (1), u32 LE channel
/// (0 = D3, 1 = D4), then one u64 LE timestamp per click.
std::string tags_to_bin(const mc::TimeTagStream &s);

/// Parses either format (binary recognised by its magic). Tags must be
/// strictly increasing and from a single channel; duration is the last tag.
/// An empty file or a bare header gives an empty D3 stream.
mc::TimeTagStream parse_tags(const std::string &contents, const std::string &name);
mc::TimeTagStream read_tags(const std::string &path);
/// True if the contents name their channel (binary, or CSV with a data row).
bool declares_channel(const std::string &contents);
void write_tags(const std::string &path, const mc::TimeTagStream &s, TagFormat f);

/// `tau_ps,counts`
std::string histogram_to_csv(const CorrelationHistogram &h);
/// `tau_ps,perp,par,perp_conv,par_conv`; all four curves share one grid.
std::string curves_to_csv(const CorrelationCurve &perp, const CorrelationCurve &par, const CorrelationCurve &perp_conv,
                          const CorrelationCurve &par_conv);

/// Two or three numeric columns (x, y[, y_err]) with a header row.
SampledCurve parse_sampled_curve(const std::string &contents, const std::string &name);
SampledCurve read_sampled_curve(const std::string &path);
std::string sampled_curve_to_csv(const SampledCurve &s, const std::string &x_name, const std::string &y_name);

} // namespace hom::io
