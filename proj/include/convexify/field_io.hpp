#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "convexify/grid.hpp"

namespace convexify {

using Metadata = std::map<std::string, std::string>;

/// Shortest decimal text that reads back to exactly the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/**
 * Field dump format:
 *
 *     convexify-field 1
 *     n_h <int>
 *     n_z <int>
 *     b <real>
 *     xi <real>
 *     d <real>
 *     n_k <int>        (these three only for fields with a k axis)
 *     k_min <real>
 *     k_max <real>
 *     meta <key> <value>   (zero or more)
 *     rows <count>
 *     j s m k_index re im  (one line per node)
 *
 * Fields without a k axis write k_index 0. Grids read back from a k-less
 * dump carry the k interval given by `k_grid_fallback`.
 */
void write_field(std::ostream& os, const Field& f, const Metadata& meta = {});
struct FieldFile {
  Field field;
  Metadata meta;
};
FieldFile read_field(std::istream& is, const GridParams& k_grid_fallback = {});

void write_field_file(const std::filesystem::path& path, const Field& f, const Metadata& meta = {});
FieldFile read_field_file(const std::filesystem::path& path, const GridParams& k_grid_fallback = {});

/// Reads "key value" header lines until `terminator`; shared by the text formats.
class HeaderReader {
 public:
  HeaderReader(std::istream& is, std::string_view magic);
  /// Returns the count following the terminator keyword.
  long long read_until(std::string_view terminator);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  const Metadata& meta() const { return meta_; }

 private:
  std::istream& is_;
  std::map<std::string, std::string> values_;
  Metadata meta_;
};

}  // namespace convexify
