#include "crvb/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "crvb/error.hpp"

namespace crvb {

namespace {

constexpr char kMagic[5] = {'C', 'R', 'V', 'B', '1'};
constexpr std::uint32_t kEndianMarker = 0x01020304u;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw Error(ErrorKind::Format, "field file is truncated");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string take(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

FieldFile FieldFile::from(const MatrixField& f) {
  FieldFile out;
  out.chart = f.chart_ptr();
  out.kind = "matrix";
  out.components.push_back(f);
  out.sampled_exact = f.polynomial() != nullptr;
  return out;
}

FieldFile FieldFile::from(const ConnectionForm& w) {
  FieldFile out;
  out.chart = w.chart_ptr();
  out.kind = "form";
  out.components = w.components;
  out.sampled_exact = true;
  for (const auto& c : w.components) out.sampled_exact = out.sampled_exact && c.polynomial();
  return out;
}

MatrixField FieldFile::matrix() const {
  if (kind != "matrix" || components.size() != 1)
    throw Error(ErrorKind::Format, "file does not hold a matrix field");
  return components.front();
}

ConnectionForm FieldFile::form() const {
  if (kind != "form") throw Error(ErrorKind::Format, "file does not hold a connection form");
  ConnectionForm w;
  w.components = components;
  return w;
}

void save_field(const std::string& path, const FieldFile& f) {
  require(f.chart && !f.components.empty(), "nothing to save");
  const GridChart& g = *f.chart;
  const int rank = f.components.front().rank();
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kEndianMarker);
  w.i32(g.n());
  w.i32(rank);
  w.i32(g.resolution());
  w.f64(g.rho());
  w.f64(g.lattice_rho());
  w.u8(f.sampled_exact ? 1 : 0);
  w.u8(f.kind == "form" ? 1 : 0);
  w.i32(static_cast<std::int32_t>(f.components.size()));
  w.u64(g.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const auto& c : f.components) {
      const bool d = c.defined(i);
      const auto v = c.at(i);
      for (int col = 0; col < rank; ++col)
        for (int row = 0; row < rank; ++row) {
          w.f64(d ? v(row, col).real() : nan);
          w.f64(d ? v(row, col).imag() : nan);
        }
    }
  write_text(path, w.data());
}

FieldFile load_field(const std::string& path) {
  Reader r(read_file(path));
  if (r.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw Error(ErrorKind::Format, "bad magic or version in " + path);
  if (r.u32() != kEndianMarker) throw Error(ErrorKind::Format, "bad endianness marker");
  const int n = r.i32();
  const int rank = r.i32();
  const int res = r.i32();
  const double rho = r.f64();
  const double lattice_rho = r.f64();
  const int tag = r.u8();  // informational, values are always grid samples
  const int kind = r.u8();
  const int ncomp = r.i32();
  const std::uint64_t npts = r.u64();
  if (n < 3 || rank < 1 || res < 3 || ncomp < 1 || kind > 1)
    throw Error(ErrorKind::Format, "invalid header in " + path);
  FieldFile f;
  try {
    f.chart = std::make_shared<const GridChart>(n, lattice_rho, res, rho);
  } catch (const Error& e) {
    throw Error(ErrorKind::Format, std::string("invalid chart: ") + e.what());
  }
  if (npts != f.chart->size()) throw Error(ErrorKind::Format, "point count does not match chart");
  r.need(npts * static_cast<std::uint64_t>(ncomp) * rank * rank * 16);
  f.kind = kind == 1 ? "form" : "matrix";
  f.sampled_exact = tag == 1;
  for (int c = 0; c < ncomp; ++c) f.components.emplace_back(f.chart, rank);
  for (std::size_t i = 0; i < npts; ++i)
    for (auto& c : f.components) {
      bool d = true;
      auto v = c.at(i);
      for (int col = 0; col < rank; ++col)
        for (int row = 0; row < rank; ++row) {
          const double re = r.f64();
          const double im = r.f64();
          if (std::isnan(re) || std::isnan(im)) {
            d = false;
            v(row, col) = 0.0;
          } else {
            v(row, col) = Complex(re, im);
          }
        }
      c.set_defined(i, d);
    }
  if (!r.at_end()) throw Error(ErrorKind::Format, "trailing bytes in " + path);
  return f;
}

nlohmann::json polynomial_to_json(const MatrixPolynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [e, c] : p.terms()) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        rr.push_back(c(i, j).real());
        ii.push_back(c(i, j).imag());
      }
      re.push_back(rr);
      im.push_back(ii);
    }
    terms.push_back({{"exponent", e}, {"re", re}, {"im", im}});
  }
  return {{"m", p.m()}, {"rank", p.rank()}, {"terms", terms}};
}

MatrixPolynomial polynomial_from_json(const nlohmann::json& j) {
  try {
    const int m = j.at("m").get<int>();
    const int rank = j.at("rank").get<int>();
    MatrixPolynomial p(m, rank);
    for (const auto& t : j.at("terms")) {
      const auto e = t.at("exponent").get<Exponent>();
      if (static_cast<int>(e.size()) != 2 * m + 1) throw Error(ErrorKind::Format, "bad exponent length");
      Eigen::MatrixXcd c(rank, rank);
      for (int a = 0; a < rank; ++a)
        for (int b = 0; b < rank; ++b)
          c(a, b) = Complex(t.at("re").at(a).at(b).get<double>(), t.at("im").at(a).at(b).get<double>());
      p.add_term(e, c);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad polynomial JSON: ") + e.what());
  }
}

nlohmann::json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace crvb
