#include "plus/raster.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "plus/errors.hpp"
#include "plus/text.hpp"

namespace plus {

namespace {

constexpr char kBinaryMagic[8] = {'P', 'L', 'U', 'S', 'G', 'R', 'I', 'D'};
constexpr std::uint8_t kBinaryVersion = 1;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_integral(double v) {
  return std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 2147483647.0;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open grid file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Minimal cursor over whitespace-separated tokens.
class Tokens {
public:
  explicit Tokens(std::string_view text) : text_(text) {}

  std::string_view next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }
  std::string_view peek() {
    const std::size_t save = pos_;
    auto t = next();
    pos_ = save;
    return t;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

GridFile parse_ascii(const std::string& text, const std::filesystem::path& path) {
  Tokens tok(text);
  GridFile out;
  bool have_cols = false, have_rows = false, have_size = false;
  bool x_center = false, y_center = false;
  double x = 0.0, y = 0.0;
  for (;;) {
    auto key_view = tok.peek();
    if (key_view.empty()) break;
    const char c0 = key_view.front();
    if (std::isdigit(static_cast<unsigned char>(c0)) || c0 == '-' || c0 == '+' || c0 == '.') break;
    const std::string key = lower(std::string(tok.next()));
    const auto value_tok = tok.next();
    const auto value = parse_double(value_tok);
    if (!value) throw DataError("malformed header in " + path.string() + ": bad value for " + key);
    if (key == "ncols") {
      if (!is_integral(*value) || *value <= 0) throw DataError("malformed header: ncols");
      out.geometry.width = static_cast<int>(*value);
      have_cols = true;
    } else if (key == "nrows") {
      if (!is_integral(*value) || *value <= 0) throw DataError("malformed header: nrows");
      out.geometry.height = static_cast<int>(*value);
      have_rows = true;
    } else if (key == "xllcorner" || key == "xllcenter") {
      x = *value;
      x_center = key == "xllcenter";
    } else if (key == "yllcorner" || key == "yllcenter") {
      y = *value;
      y_center = key == "yllcenter";
    } else if (key == "cellsize") {
      if (!(*value > 0)) throw DataError("malformed header: cellsize must be > 0");
      out.geometry.cell_size = *value;
      have_size = true;
    } else if (key == "nodata_value") {
      out.nodata = *value;
    } else {
      throw DataError("malformed header in " + path.string() + ": unknown key '" + key + "'");
    }
  }
  if (!have_cols || !have_rows || !have_size)
    throw DataError("malformed header in " + path.string() + ": ncols, nrows and cellsize are required");
  out.geometry.xll = x_center ? x - out.geometry.cell_size / 2 : x;
  out.geometry.yll = y_center ? y - out.geometry.cell_size / 2 : y;

  const std::size_t n = out.geometry.cell_count();
  out.values.reserve(n);
  for (;;) {
    auto t = tok.next();
    if (t.empty()) break;
    const auto v = parse_double(t);
    if (!v) throw DataError("non-numeric token '" + std::string(t) + "' in " + path.string());
    out.values.push_back(*v);
    if (out.values.size() > n) break;
  }
  if (out.values.size() != n) {
    throw DataError("cell count mismatch in " + path.string() + ": header declares " +
                    std::to_string(n) + " cells, file holds " +
                    (out.values.size() > n ? "more" : std::to_string(out.values.size())));
  }
  return out;
}

template <class T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "binary grid assumes little-endian host");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
public:
  Reader(const std::string& data, const std::filesystem::path& path) : data_(data), path_(path) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw DataError("truncated binary grid: " + path_.string());
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    if (pos_ + n > data_.size()) throw DataError("truncated binary grid: " + path_.string());
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

private:
  const std::string& data_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

struct BinaryGrid {
  GridFile file;
  std::uint8_t kind = 1;
  Legend legend;
};

bool has_binary_magic(const std::string& data) {
  return data.size() >= sizeof(kBinaryMagic) &&
         std::memcmp(data.data(), kBinaryMagic, sizeof(kBinaryMagic)) == 0;
}

BinaryGrid parse_binary(const std::string& data, const std::filesystem::path& path) {
  Reader r(data, path);
  r.bytes(sizeof(kBinaryMagic));
  BinaryGrid out;
  const auto version = r.get<std::uint8_t>();
  if (version != kBinaryVersion)
    throw DataError("unsupported binary grid version " + std::to_string(version) + " in " + path.string());
  out.kind = r.get<std::uint8_t>();
  if (out.kind > 1) throw DataError("unknown binary grid kind in " + path.string());
  r.get<std::uint16_t>();
  auto& g = out.file.geometry;
  g.width = static_cast<int>(r.get<std::uint32_t>());
  g.height = static_cast<int>(r.get<std::uint32_t>());
  g.cell_size = r.get<double>();
  g.xll = r.get<double>();
  g.yll = r.get<double>();
  out.file.nodata = r.get<double>();
  if (g.width <= 0 || g.height <= 0 || !(g.cell_size > 0))
    throw DataError("malformed header in binary grid " + path.string());
  if (out.kind == 0) {
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto id = r.get<std::int32_t>();
      const auto len = r.get<std::uint32_t>();
      out.legend[id] = r.bytes(len);
    }
  }
  const std::size_t n = g.cell_count();
  out.file.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.file.values[i] = out.kind == 0 ? static_cast<double>(r.get<std::int32_t>()) : r.get<double>();
  }
  if (!r.done()) throw DataError("cell count mismatch in binary grid " + path.string());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string ascii_header(const GridGeometry& g, const std::string& nodata) {
  std::string h;
  h += "ncols " + std::to_string(g.width) + "\n";
  h += "nrows " + std::to_string(g.height) + "\n";
  h += "xllcorner " + format_double(g.xll) + "\n";
  h += "yllcorner " + format_double(g.yll) + "\n";
  h += "cellsize " + format_double(g.cell_size) + "\n";
  h += "NODATA_value " + nodata + "\n";
  return h;
}

Legend read_legend(const std::filesystem::path& path) {
  Legend legend;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open legend " + path.string());
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line == "id,name") {
      first = false;
      continue;
    }
    first = false;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("malformed legend line '" + line + "' in " + path.string());
    const auto id = parse_double(line.substr(0, comma));
    if (!id || !is_integral(*id)) throw DataError("malformed legend id in " + path.string());
    legend[static_cast<int>(*id)] = line.substr(comma + 1);
  }
  return legend;
}

void write_legend(const Legend& legend, const std::filesystem::path& path) {
  std::string text = "id,name\n";
  for (const auto& [id, name] : legend) text += std::to_string(id) + "," + name + "\n";
  write_text(path, text);
}

CategoricalRaster to_categorical(const GridFile& f, const std::filesystem::path& path) {
  CategoricalRaster r;
  r.geometry = f.geometry;
  if (!is_integral(f.nodata)) throw DataError("categorical grid needs an integral NODATA_value: " + path.string());
  r.nodata = static_cast<std::int32_t>(f.nodata);
  r.cells.resize(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!is_integral(f.values[i]))
      throw DataError("non-integer class id " + format_double(f.values[i]) + " in " + path.string());
    r.cells[i] = static_cast<std::int32_t>(f.values[i]);
  }
  return r;
}

Legend infer_legend(const CategoricalRaster& r) {
  std::set<int> ids;
  for (auto c : r.cells)
    if (c != r.nodata) ids.insert(c);
  Legend legend;
  for (int id : ids) legend[id] = "class_" + std::to_string(id);
  return legend;
}

}  // namespace

void CategoricalRaster::validate() const {
  if (!(geometry.cell_size > 0)) throw DataError("cell_size must be > 0");
  if (geometry.width <= 0 || geometry.height <= 0) throw DataError("raster dimensions must be positive");
  if (cells.size() != geometry.cell_count()) throw DataError("cell count mismatch: width x height != cells");
  for (auto c : cells) {
    if (c != nodata && !classes.contains(c))
      throw DataError("class id " + std::to_string(c) + " is not in the legend");
  }
}

void ContinuousRaster::validate() const {
  if (!(geometry.cell_size > 0)) throw DataError("cell_size must be > 0");
  if (geometry.width <= 0 || geometry.height <= 0) throw DataError("raster dimensions must be positive");
  if (values.size() != geometry.cell_count()) throw DataError("cell count mismatch: width x height != values");
  for (double v : values) {
    if (v != nodata && !std::isfinite(v)) throw DataError("non-finite value in continuous raster");
  }
}

void FactorStack::add(std::string name, ContinuousRaster layer) {
  for (const auto& [n, l] : layers_) {
    if (n == name) throw DataError("duplicate factor layer name '" + name + "'");
  }
  if (!layers_.empty()) {
    const NamedGeometry pair[2] = {{layers_.front().first, layers_.front().second.geometry},
                                   {name, layer.geometry}};
    assert_aligned(pair);
  }
  layers_.emplace_back(std::move(name), std::move(layer));
}

std::vector<std::string> FactorStack::names() const {
  std::vector<std::string> out;
  out.reserve(layers_.size());
  for (const auto& [n, l] : layers_) out.push_back(n);
  return out;
}

bool FactorStack::valid_at(std::size_t i) const noexcept {
  for (const auto& [n, l] : layers_) {
    if (l.is_nodata(i)) return false;
  }
  return true;
}

GridFile read_grid_file(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  if (has_binary_magic(data)) return parse_binary(data, path).file;
  return parse_ascii(data, path);
}

AnyRaster load_ascii_grid(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  GridFile f;
  bool categorical = false;
  if (has_binary_magic(data)) {
    auto b = parse_binary(data, path);
    categorical = b.kind == 0;
    f = std::move(b.file);
  } else {
    f = parse_ascii(data, path);
    categorical = std::filesystem::exists(legend_path(path));
  }
  if (categorical) return load_categorical(path);
  ContinuousRaster r;
  r.geometry = f.geometry;
  r.nodata = f.nodata;
  r.values = std::move(f.values);
  r.validate();
  return r;
}

CategoricalRaster load_categorical(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  CategoricalRaster r;
  if (has_binary_magic(data)) {
    auto b = parse_binary(data, path);
    if (b.kind != 0) throw DataError("expected a categorical grid: " + path.string());
    r = to_categorical(b.file, path);
    r.classes = std::move(b.legend);
  } else {
    r = to_categorical(parse_ascii(data, path), path);
  }
  const auto lp = legend_path(path);
  if (std::filesystem::exists(lp)) {
    r.classes = read_legend(lp);
  } else if (r.classes.empty()) {
    r.classes = infer_legend(r);
  }
  r.validate();
  return r;
}

ContinuousRaster load_continuous(const std::filesystem::path& path) {
  GridFile f = read_grid_file(path);
  ContinuousRaster r;
  r.geometry = f.geometry;
  r.nodata = f.nodata;
  r.values = std::move(f.values);
  r.validate();
  return r;
}

void save_ascii_grid(const CategoricalRaster& raster, const std::filesystem::path& path) {
  raster.validate();
  const auto& g = raster.geometry;
  std::string text = ascii_header(g, std::to_string(raster.nodata));
  text.reserve(text.size() + g.cell_count() * 3);
  char buf[16];
  for (int row = 0; row < g.height; ++row) {
    for (int col = 0; col < g.width; ++col) {
      if (col) text += ' ';
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), raster.at(row, col));
      text.append(buf, end);
    }
    text += '\n';
  }
  write_text(path, text);
  write_legend(raster.classes, legend_path(path));
}

void save_ascii_grid(const ContinuousRaster& raster, const std::filesystem::path& path) {
  raster.validate();
  const auto& g = raster.geometry;
  std::string text = ascii_header(g, format_double(raster.nodata));
  text.reserve(text.size() + g.cell_count() * 6);
  for (int row = 0; row < g.height; ++row) {
    for (int col = 0; col < g.width; ++col) {
      if (col) text += ' ';
      text += format_double(raster.values[static_cast<std::size_t>(row) * g.width + col]);
    }
    text += '\n';
  }
  write_text(path, text);
}

namespace {

std::string binary_header(const GridGeometry& g, std::uint8_t kind, double nodata) {
  std::string buf(kBinaryMagic, sizeof(kBinaryMagic));
  put<std::uint8_t>(buf, kBinaryVersion);
  put<std::uint8_t>(buf, kind);
  put<std::uint16_t>(buf, 0);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.width));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.height));
  put<double>(buf, g.cell_size);
  put<double>(buf, g.xll);
  put<double>(buf, g.yll);
  put<double>(buf, nodata);
  return buf;
}

}  // namespace

void save_binary_grid(const CategoricalRaster& raster, const std::filesystem::path& path) {
  raster.validate();
  std::string buf = binary_header(raster.geometry, 0, raster.nodata);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(raster.classes.size()));
  for (const auto& [id, name] : raster.classes) {
    put<std::int32_t>(buf, id);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
  }
  for (auto c : raster.cells) put<std::int32_t>(buf, c);
  write_text(path, buf);
}

void save_binary_grid(const ContinuousRaster& raster, const std::filesystem::path& path) {
  raster.validate();
  std::string buf = binary_header(raster.geometry, 1, raster.nodata);
  for (double v : raster.values) put<double>(buf, v);
  write_text(path, buf);
}

std::filesystem::path legend_path(const std::filesystem::path& grid_path) {
  return std::filesystem::path(grid_path.string() + ".legend.csv");
}

void assert_aligned(std::span<const NamedGeometry> rasters) {
  if (rasters.empty()) throw UsageError("assert_aligned needs at least one raster");
  const auto& ref = rasters.front().geometry;
  for (const auto& r : rasters.subspan(1)) {
    const auto& g = r.geometry;
    if (g.width != ref.width || g.height != ref.height) {
      throw DataError("layer '" + r.name + "' is " + std::to_string(g.width) + "x" + std::to_string(g.height) +
                      ", expected " + std::to_string(ref.width) + "x" + std::to_string(ref.height) + " like '" +
                      rasters.front().name + "'");
    }
    if (g.cell_size != ref.cell_size) {
      throw DataError("layer '" + r.name + "' has cell size " + format_double(g.cell_size) + ", expected " +
                      format_double(ref.cell_size) + " like '" + rasters.front().name + "'");
    }
  }
}

std::map<int, std::int64_t> class_areas(const CategoricalRaster& raster) {
  std::map<int, std::int64_t> out;
  for (const auto& [id, name] : raster.classes) out[id] = 0;
  for (auto c : raster.cells) {
    if (c != raster.nodata) ++out[c];
  }
  return out;
}

std::size_t valid_cell_count(const CategoricalRaster& raster) {
  return static_cast<std::size_t>(
      std::count_if(raster.cells.begin(), raster.cells.end(), [&](auto c) { return c != raster.nodata; }));
}

}  // namespace plus
