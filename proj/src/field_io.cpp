#include "convexify/field_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "convexify/errors.hpp"

namespace convexify {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw IoError("malformed number '" + std::string(text) + "'");
  return v;
}

HeaderReader::HeaderReader(std::istream& is, std::string_view magic) : is_(is) {
  std::string word, version;
  if (!(is_ >> word >> version) || word != magic || version != "1")
    throw IoError("expected '" + std::string(magic) + " 1' header");
}

long long HeaderReader::read_until(std::string_view terminator) {
  std::string key;
  while (is_ >> key) {
    if (key == terminator) {
      long long count = 0;
      if (!(is_ >> count) || count < 0) throw IoError("bad row count");
      return count;
    }
    if (key == "meta") {
      std::string mkey, mval;
      if (!(is_ >> mkey) || !std::getline(is_, mval)) throw IoError("bad meta line");
      const auto first = mval.find_first_not_of(' ');
      meta_[mkey] = first == std::string::npos ? "" : mval.substr(first);
      continue;
    }
    std::string val;
    if (!(is_ >> val)) throw IoError("missing value for header key '" + key + "'");
    values_[key] = val;
  }
  throw IoError("unexpected end of file before '" + std::string(terminator) + "'");
}

double HeaderReader::real(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw IoError("missing header key '" + key + "'");
  return parse_double(it->second);
}

long long HeaderReader::integer(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw IoError("missing header key '" + key + "'");
  long long v = 0;
  const auto& t = it->second;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{}) throw IoError("malformed integer for '" + key + "'");
  return v;
}

void write_field(std::ostream& os, const Field& f, const Metadata& meta) {
  const GridSpec& g = f.grid();
  os << "convexify-field 1\n"
     << "n_h " << g.n_h() << "\n"
     << "n_z " << g.n_z() << "\n"
     << "b " << format_double(g.b()) << "\n"
     << "xi " << format_double(g.xi()) << "\n"
     << "d " << format_double(g.d()) << "\n";
  if (f.has_k_axis()) {
    os << "n_k " << g.n_k() << "\n"
       << "k_min " << format_double(g.k_min()) << "\n"
       << "k_max " << format_double(g.k_max()) << "\n";
  }
  for (const auto& [k, v] : meta) os << "meta " << k << " " << v << "\n";
  os << "rows " << f.size() << "\n";
  for (int n = 0; n < f.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s)
        for (int m = 0; m < g.n_z(); ++m) {
          const cplx v = f(j, s, m, n);
          os << j << ' ' << s << ' ' << m << ' ' << n << ' ' << format_double(v.real()) << ' '
             << format_double(v.imag()) << '\n';
        }
}

FieldFile read_field(std::istream& is, const GridParams& k_grid_fallback) {
  HeaderReader hdr(is, "convexify-field");
  const long long rows = hdr.read_until("rows");
  GridParams p = k_grid_fallback;
  p.n_h = static_cast<int>(hdr.integer("n_h"));
  p.n_z = static_cast<int>(hdr.integer("n_z"));
  p.b = hdr.real("b");
  p.xi = hdr.real("xi");
  p.d = hdr.real("d");
  const bool with_k = hdr.has("n_k");
  if (with_k) {
    p.n_k = static_cast<int>(hdr.integer("n_k"));
    p.k_min = hdr.real("k_min");
    p.k_max = hdr.real("k_max");
  }
  FieldFile out{Field(GridSpec(p), with_k), hdr.meta()};
  if (rows != static_cast<long long>(out.field.size()))
    throw IoError("row count does not match the grid");
  std::string re, im;
  for (long long r = 0; r < rows; ++r) {
    int j, s, m, n;
    if (!(is >> j >> s >> m >> n >> re >> im)) throw IoError("truncated field rows");
    if (j < 0 || j >= p.n_h || s < 0 || s >= p.n_h || m < 0 || m >= p.n_z || n < 0 ||
        n >= out.field.n_k())
      throw IoError("field row index out of range");
    out.field(j, s, m, n) = {parse_double(re), parse_double(im)};
  }
  return out;
}

void write_field_file(const std::filesystem::path& path, const Field& f, const Metadata& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_field(os, f, meta);
  if (!os) throw IoError("write failed: " + path.string());
}

FieldFile read_field_file(const std::filesystem::path& path, const GridParams& k_grid_fallback) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_field(is, k_grid_fallback);
}

}  // namespace convexify
