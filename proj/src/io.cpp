#include "rme/io.hpp"

#include "rme/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

namespace rme::io {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

class Writer {
public:
  void magic(const char* m) { buf_.insert(buf_.end(), m, m + 4); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * 8);
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  Bytes& bytes() { return buf_; }

private:
  Bytes buf_;
};

class Reader {
public:
  Reader(const std::uint8_t* p, std::size_t n, const char* what) : p_(p), n_(n), what_(what) {}

  void magic(const char* m) {
    need(4);
    if (std::memcmp(p_ + pos_, m, 4) != 0) throw_format(std::string(what_) + ": bad magic");
    pos_ += 4;
  }
  std::uint8_t u8() {
    need(1);
    return p_[pos_++];
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  std::vector<double> f64s(std::size_t expected) {
    const std::uint64_t n = u64();
    if (n != expected)
      throw_format(std::string(what_) + ": blob length " + std::to_string(n) + ", expected " +
                   std::to_string(expected));
    std::vector<double> v(n);
    need(n * 8);
    std::memcpy(v.data(), p_ + pos_, n * 8);
    pos_ += n * 8;
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* r = p_ + pos_;
    pos_ += n;
    return r;
  }
  std::size_t remaining() const { return n_ - pos_; }
  void expect_end() const {
    if (pos_ != n_) throw_format(std::string(what_) + ": trailing bytes");
  }

private:
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (n > n_ - pos_) throw_format(std::string(what_) + ": truncated");
  }

  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
  const char* what_;
};

std::uint32_t crc32_of(const std::uint8_t* p, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw_invalid(std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

void put_weights(Writer& w, const MapperWeights& mw) {
  for (std::size_t l = 0; l < mw.kernels.size(); ++l) {
    w.f64s(mw.kernels[l].values());
    w.f64s(mw.biases[l].values());
  }
}

MapperWeights get_weights(Reader& r, const MapperSpec& spec, std::size_t k_bands) {
  MapperWeights mw;
  std::size_t cin = k_bands;
  for (const auto& ls : spec.layers) {
    const Dims kd{ls.kernel * ls.kernel, cin, ls.out_channels};
    mw.kernels.emplace_back(kd, r.f64s(kd.size()));
    mw.biases.emplace_back(Dims{1, 1, ls.out_channels}, r.f64s(ls.out_channels));
    cin = ls.out_channels;
  }
  return mw;
}

} // namespace

Bytes encode_tensor(const Tensor3& t) {
  Writer w;
  w.magic("RMT1");
  w.u32(checked_u32(t.h(), "tensor height"));
  w.u32(checked_u32(t.w(), "tensor width"));
  w.u32(checked_u32(t.k(), "tensor bands"));
  w.raw(t.data(), t.size() * 8);
  return std::move(w.bytes());
}

Tensor3 decode_tensor(const Bytes& bytes) {
  Reader r(bytes.data(), bytes.size(), "tensor file");
  r.magic("RMT1");
  const std::size_t h = r.u32(), w = r.u32(), k = r.u32();
  if (h == 0 || w == 0 || k == 0) throw_format("tensor file: zero dimension");
  const std::size_t n = h * w * k;
  if (r.remaining() != n * 8)
    throw_format("tensor file: payload has " + std::to_string(r.remaining()) + " bytes, header implies " +
                 std::to_string(n * 8));
  std::vector<double> v(n);
  std::memcpy(v.data(), r.take(n * 8), n * 8);
  Tensor3 t(Dims{h, w, k}, std::move(v));
  if (!t.all_finite()) throw_format("tensor file: payload contains non-finite values");
  return t;
}

Bytes encode_mask(const ObservationMask& m) {
  Writer w;
  w.magic("RMM1");
  w.u32(checked_u32(m.h(), "mask height"));
  w.u32(checked_u32(m.w(), "mask width"));
  w.raw(m.cells().data(), m.cells().size());
  return std::move(w.bytes());
}

ObservationMask decode_mask(const Bytes& bytes) {
  Reader r(bytes.data(), bytes.size(), "mask file");
  r.magic("RMM1");
  const std::size_t h = r.u32(), w = r.u32();
  if (h == 0 || w == 0) throw_format("mask file: zero dimension");
  if (r.remaining() != h * w)
    throw_format("mask file: payload has " + std::to_string(r.remaining()) + " bytes, header implies " +
                 std::to_string(h * w));
  const std::uint8_t* p = r.take(h * w);
  std::vector<std::uint8_t> cells(p, p + h * w);
  for (auto c : cells)
    if (c > 1) throw_format("mask file: byte values must be 0 or 1");
  return ObservationMask(h, w, std::move(cells));
}

Bytes encode_checkpoint(const UnrolledModel& model) {
  model.validate();
  Writer w;
  w.magic("RMU1");
  w.u32(kCheckpointVersion);
  w.u32(checked_u32(model.k_blocks(), "k_blocks"));

  Writer desc;
  desc.u32(checked_u32(model.k_bands, "k_bands"));
  desc.u8(model.mapper.residual ? 1 : 0);
  for (double a : model.alpha) desc.f64(a);
  desc.f64(model.rho);
  desc.f64(model.omega);
  desc.u32(checked_u32(model.mapper.layers.size(), "layer count"));
  for (const auto& l : model.mapper.layers) {
    desc.u32(9);  // record length
    desc.u32(checked_u32(l.out_channels, "channels"));
    desc.u32(checked_u32(l.kernel, "kernel"));
    desc.u8(static_cast<std::uint8_t>(l.activation));
  }
  w.u32(checked_u32(desc.bytes().size(), "descriptor"));
  w.raw(desc.bytes().data(), desc.bytes().size());

  for (const auto& b : model.blocks) {
    for (const auto& s : b.log_scalars) w.f64(s[0]);
    put_weights(w, b.v);
    put_weights(w, b.w);
  }
  const std::uint32_t crc = crc32_of(w.bytes().data(), w.bytes().size());
  w.u32(crc);
  return std::move(w.bytes());
}

UnrolledModel decode_checkpoint(const Bytes& bytes) {
  if (bytes.size() < 4 + 4) throw_format("checkpoint: truncated");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  Reader r(bytes.data(), body, "checkpoint");
  r.magic("RMU1");
  if (crc32_of(bytes.data(), body) != stored) throw_format("checkpoint: CRC mismatch");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw_format("checkpoint: unsupported version " + std::to_string(version));
  const std::size_t k_blocks = r.u32();
  if (k_blocks == 0) throw_format("checkpoint: k_blocks must be >= 1");

  const std::uint32_t desc_len = r.u32();
  Reader d(r.take(desc_len), desc_len, "checkpoint descriptor");
  UnrolledModel m;
  m.k_bands = d.u32();
  const std::uint8_t residual = d.u8();
  if (residual > 1) throw_format("checkpoint: bad residual flag");
  m.mapper.residual = residual == 1;
  for (double& a : m.alpha) a = d.f64();
  m.rho = d.f64();
  m.omega = d.f64();
  const std::uint32_t n_layers = d.u32();
  if (n_layers == 0 || n_layers > 1024) throw_format("checkpoint: bad layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t len = d.u32();
    if (len != 9) throw_format("checkpoint: bad layer record length");
    LayerSpec l;
    l.out_channels = d.u32();
    l.kernel = d.u32();
    const std::uint8_t act = d.u8();
    if (act > 1) throw_format("checkpoint: unknown activation");
    l.activation = static_cast<Activation>(act);
    if (l.out_channels == 0 || l.out_channels > 4096 || l.kernel == 0 || l.kernel > 63)
      throw_format("checkpoint: implausible layer shape");
    m.mapper.layers.push_back(l);
  }
  d.expect_end();
  if (m.k_bands == 0 || m.k_bands > 4096) throw_format("checkpoint: implausible band count");

  m.blocks.resize(k_blocks);
  for (auto& b : m.blocks) {
    for (auto& s : b.log_scalars) s = Tensor3::scalar(r.f64());
    b.v = get_weights(r, m.mapper, m.k_bands);
    b.w = get_weights(r, m.mapper, m.k_bands);
  }
  r.expect_end();
  try {
    m.validate();
  } catch (const Error& e) {
    throw_format(std::string("checkpoint: ") + e.what());
  }
  for (const auto& b : m.blocks)
    for (std::size_t i = 0; i < kNumScalars; ++i)
      if (!(b.scalar(static_cast<ScalarIndex>(i)) > 0.0))
        throw_format("checkpoint: decoded scalar is not positive");
  return m;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_invalid("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, const Bytes& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_invalid("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw_invalid("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw_invalid("cannot rename into " + path);
  }
}

void write_file_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, Bytes(text.begin(), text.end()));
}

void write_tensor(const std::string& path, const Tensor3& t) { write_file_atomic(path, encode_tensor(t)); }
Tensor3 read_tensor(const std::string& path) { return decode_tensor(read_file(path)); }
void write_mask(const std::string& path, const ObservationMask& m) { write_file_atomic(path, encode_mask(m)); }
ObservationMask read_mask(const std::string& path) { return decode_mask(read_file(path)); }
void write_checkpoint(const std::string& path, const UnrolledModel& model) {
  write_file_atomic(path, encode_checkpoint(model));
}
UnrolledModel read_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

Bytes export_pgm(const Tensor3& t, std::size_t band) {
  if (band >= t.k()) throw_invalid("export: band " + std::to_string(band) + " out of range");
  const std::string header = "P5\n" + std::to_string(t.w()) + " " + std::to_string(t.h()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + t.h() * t.w());
  for (std::size_t r = 0; r < t.h(); ++r)
    for (std::size_t c = 0; c < t.w(); ++c) {
      const double v = std::clamp(t(r, c, band), 0.0, 1.0);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
  return out;
}

std::string export_csv(const Tensor3& t, std::size_t band) {
  if (band >= t.k()) throw_invalid("export: band " + std::to_string(band) + " out of range");
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < t.h(); ++r) {
    for (std::size_t c = 0; c < t.w(); ++c) {
      if (c) out += ',';
      auto res = std::to_chars(buf, buf + sizeof buf, t(r, c, band));
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

namespace {

Matrix parse_csv_grid(const std::string& path) {
  const Bytes raw = read_file(path);
  std::string text(raw.begin(), raw.end());
  std::istringstream in(text);
  std::string line;
  Matrix m;
  std::vector<double> vals;
  std::size_t rows = 0, cols = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t n = 0, pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string cell = line.substr(pos, end - pos);
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw_format(path + ": line " + std::to_string(lineno) + ": bad value '" + cell + "'");
      vals.push_back(v);
      ++n;
      pos = end + 1;
    }
    if (cols == 0) cols = n;
    if (n != cols) throw_format(path + ": line " + std::to_string(lineno) + ": ragged row");
    ++rows;
  }
  if (rows == 0) throw_format(path + ": empty grid");
  m.rows = rows;
  m.cols = cols;
  m.data = std::move(vals);
  return m;
}

} // namespace

ImportedTensor import_csv(const std::vector<std::string>& paths) {
  if (paths.empty()) throw_invalid("import: at least one band file is required");
  std::vector<Matrix> grids;
  for (const auto& p : paths) grids.push_back(parse_csv_grid(p));
  const std::size_t h = grids[0].rows, w = grids[0].cols;
  for (std::size_t b = 1; b < grids.size(); ++b)
    if (grids[b].rows != h || grids[b].cols != w)
      throw_invalid("import: band " + std::to_string(b) + " grid size differs from band 0");
  ImportedTensor out;
  out.tensor = Tensor3(Dims{h, w, grids.size()});
  for (std::size_t b = 0; b < grids.size(); ++b) {
    const auto [lo, hi] = std::minmax_element(grids[b].data.begin(), grids[b].data.end());
    const double mn = *lo, mx = *hi;
    out.ranges.emplace_back(mn, mx);
    const double span = mx - mn;
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c)
        out.tensor(r, c, b) = span > 0.0 ? (grids[b](r, c) - mn) / span : 0.0;
  }
  return out;
}

std::string ranges_sidecar(const ImportedTensor& t) {
  std::string out;
  char buf[32];
  for (std::size_t b = 0; b < t.ranges.size(); ++b) {
    out += std::to_string(b);
    for (double v : {t.ranges[b].first, t.ranges[b].second}) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

} // namespace rme::io
