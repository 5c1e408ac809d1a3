#include "flexfem/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "flexfem/params.hpp"

namespace flexfem::io {

namespace {

std::string read_file(const std::string &path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &content, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_double(const std::string &s, double &out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char *end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

std::size_t CsvTable::column_index(const std::string &name) const {
  for (std::size_t i = 0; i < headers.size(); ++i)
    if (headers[i] == name) return i;
  throw Error("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::column(const std::string &name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double v;
    if (!parse_double(rows[r][c], v))
      throw Error("CSV row " + std::to_string(r + 1) + ", column '" + name +
                  "': non-numeric cell '" + rows[r][c] + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<double>> CsvTable::numeric() const {
  std::vector<std::vector<double>> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[r].resize(rows[r].size());
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      if (!parse_double(rows[r][c], out[r][c]))
        throw Error("CSV row " + std::to_string(r + 1) + ", column '" +
                    (c < headers.size() ? headers[c] : std::to_string(c + 1)) +
                    "': non-numeric cell '" + rows[r][c] + "'");
  }
  return out;
}

void CsvTable::add_row(std::span<const double> values, int precision) {
  if (values.size() != headers.size())
    throw Error("CSV row has " + std::to_string(values.size()) + " cells, header has " +
                std::to_string(headers.size()));
  std::vector<std::string> row;
  row.reserve(values.size());
  char buf[64];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    row.emplace_back(buf);
  }
  rows.push_back(std::move(row));
}

CsvTable csv_parse(std::string_view text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false, cell_started = false, any = false;
  std::size_t line = 1, record_line = 1;

  auto end_record = [&] {
    if (any) {
      record.push_back(std::move(cell));
      records.emplace_back(record_line, std::move(record));
    }
    record.clear();
    cell.clear();
    any = false;
    cell_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        cell += ch;
      }
      continue;
    }
    if (ch == '"' && !cell_started) {
      quoted = true;
      cell_started = any = true;
    } else if (ch == ',') {
      record.push_back(std::move(cell));
      cell.clear();
      cell_started = false;
      any = true;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF: handled by the '\n'
    } else if (ch == '\n') {
      end_record();
      ++line;
      record_line = line;
    } else {
      if (!any) record_line = line;
      cell += ch;
      cell_started = any = true;
    }
  }
  if (quoted) throw Error("CSV: unterminated quoted cell starting on line " +
                          std::to_string(record_line));
  end_record();

  if (records.empty()) throw Error("CSV: no header row");
  CsvTable table;
  table.headers = std::move(records.front().second);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].second.size() != table.headers.size())
      throw Error("CSV row " + std::to_string(r) + " (line " + std::to_string(records[r].first) +
                  ") has " + std::to_string(records[r].second.size()) + " cells, header has " +
                  std::to_string(table.headers.size()));
    table.rows.push_back(std::move(records[r].second));
  }
  return table;
}

namespace {
std::string csv_cell(const std::string &s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void csv_line(std::string &out, const std::vector<std::string> &cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_cell(cells[i]);
  }
  out += '\n';
}
}  // namespace

std::string csv_format(const CsvTable &table) {
  std::string out;
  csv_line(out, table.headers);
  for (const auto &row : table.rows) {
    if (row.size() != table.headers.size())
      throw Error("CSV row has " + std::to_string(row.size()) + " cells, header has " +
                  std::to_string(table.headers.size()));
    csv_line(out, row);
  }
  return out;
}

CsvTable csv_read(const std::string &path) { return csv_parse(read_file(path, true)); }

void csv_write(const std::string &path, const CsvTable &table) {
  write_file(path, csv_format(table), true);
}

// ---------------------------------------------------------------------------
// Time series

std::string to_string(InterpMode m) {
  switch (m) {
    case InterpMode::Linear: return "Linear";
    case InterpMode::CubicSpline: return "CubicSpline";
    case InterpMode::SmoothingSpline: return "SmoothingSpline";
    case InterpMode::Trigonometric: return "Trigonometric";
    case InterpMode::DerivativeLinear: return "DerivativeLinear";
    case InterpMode::DerivativeSpline: return "DerivativeSpline";
  }
  return "?";
}

InterpMode interp_mode_from_string(const std::string &s) {
  for (auto m : {InterpMode::Linear, InterpMode::CubicSpline, InterpMode::SmoothingSpline,
                 InterpMode::Trigonometric, InterpMode::DerivativeLinear,
                 InterpMode::DerivativeSpline})
    if (to_string(m) == s) return m;
  throw Error("unknown interpolation mode '" + s + "'");
}

namespace {

// Second derivatives of the natural cubic spline through (t, y).
std::vector<double> natural_spline(const std::vector<double> &t, const std::vector<double> &y) {
  const std::size_t n = t.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  // Tridiagonal system for m_1..m_{n-2}, Thomas algorithm.
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double h0 = t[i + 1] - t[i], h1 = t[i + 2] - t[i + 1];
    diag[i] = (h0 + h1) / 3.0;
    upper[i] = h1 / 6.0;
    rhs[i] = (y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0;
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double w = upper[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
  return m;
}

// Smoothing spline by Reinsch: for a multiplier a >= 0,
//   (R + a Q^T Q) gamma = Q^T y,   g = y - a Q gamma,
// with Q the n x (n-2) second-difference matrix and R the (n-2)^2 tridiagonal
// Gram matrix. The residual sum a^2 |Q gamma|^2 grows monotonically in a.
struct Reinsch {
  const std::vector<double> &t, &y;
  std::size_t n, k;
  std::vector<double> h;

  Reinsch(const std::vector<double> &t_, const std::vector<double> &y_)
      : t(t_), y(y_), n(t_.size()), k(t_.size() - 2), h(t_.size() - 1) {
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];
  }

  // Column j of Q (interior node j + 1) has entries at rows j, j+1, j+2.
  std::array<double, 3> q_col(std::size_t j) const {
    return {1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1]};
  }

  // Solves for gamma; returns residual vector Q gamma scaled by a.
  void solve(double a, std::vector<double> &gamma, std::vector<double> &res) const {
    // Band storage (half bandwidth 2): A(i, i-d) = band[i][d].
    std::vector<std::array<double, 3>> band(k, {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < k; ++i) {
      const auto qi = q_col(i);
      band[i][0] = (h[i] + h[i + 1]) / 3.0 + a * (qi[0] * qi[0] + qi[1] * qi[1] + qi[2] * qi[2]);
      if (i >= 1) {
        const auto qp = q_col(i - 1);
        band[i][1] = h[i] / 6.0 + a * (qp[1] * qi[0] + qp[2] * qi[1]);
      }
      if (i >= 2) {
        const auto qp = q_col(i - 2);
        band[i][2] = a * (qp[2] * qi[0]);
      }
    }
    // Banded Cholesky, L(i, i-d) = band[i][d].
    auto L = [&](std::size_t i, std::size_t j) -> double & { return band[i][i - j]; };
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j0 = i >= 2 ? i - 2 : 0;
      for (std::size_t j = j0; j <= i; ++j) {
        double s = L(i, j);
        const std::size_t m0 = std::max(j0, j >= 2 ? j - 2 : std::size_t(0));
        for (std::size_t m = m0; m < j; ++m) s -= L(i, m) * L(j, m);
        if (j == i) {
          if (!(s > 0)) throw Error("smoothing spline: system not positive definite");
          L(i, i) = std::sqrt(s);
        } else {
          L(i, j) = s / L(j, j);
        }
      }
    }
    gamma.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto q = q_col(j);
      gamma[j] = q[0] * y[j] + q[1] * y[j + 1] + q[2] * y[j + 2];
    }
    for (std::size_t i = 0; i < k; ++i) {
      double s = gamma[i];
      for (std::size_t m = i >= 2 ? i - 2 : 0; m < i; ++m) s -= L(i, m) * gamma[m];
      gamma[i] = s / L(i, i);
    }
    for (std::size_t i = k; i-- > 0;) {
      double s = gamma[i];
      for (std::size_t m = i + 1; m < std::min(k, i + 3); ++m) s -= L(m, i) * gamma[m];
      gamma[i] = s / L(i, i);
    }
    res.assign(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto q = q_col(j);
      for (int r = 0; r < 3; ++r) res[j + r] += a * q[r] * gamma[j];
    }
  }

  double budget(double a) const {
    std::vector<double> gamma, res;
    solve(a, gamma, res);
    double s = 0.0;
    for (double r : res) s += r * r;
    return s;
  }
};

}  // namespace

TimeSeries::TimeSeries(std::vector<double> times, std::vector<double> values, InterpMode mode,
                       double smoothing)
    : t_(std::move(times)), y_(std::move(values)), mode_(mode) {
  const std::size_t n = t_.size();
  if (n < 2) throw Error("time series needs at least 2 samples, got " + std::to_string(n));
  if (y_.size() != n)
    throw Error("time series: " + std::to_string(n) + " times but " +
                std::to_string(y_.size()) + " values");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(t_[i + 1] > t_[i]))
      throw Error("time series: times must be strictly increasing (index " +
                  std::to_string(i + 1) + ")");
  g_ = y_;
  m_.assign(n, 0.0);

  switch (mode_) {
    case InterpMode::Linear:
    case InterpMode::DerivativeLinear:
      break;
    case InterpMode::CubicSpline:
    case InterpMode::DerivativeSpline:
      m_ = natural_spline(t_, g_);
      break;
    case InterpMode::SmoothingSpline: {
      if (smoothing < 0) throw Error("smoothing spline: budget S must be >= 0");
      if (smoothing == 0 || n < 3) {
        m_ = natural_spline(t_, g_);
        break;
      }
      // Budget at infinite multiplier: least-squares line.
      double st = 0, sy = 0;
      for (std::size_t i = 0; i < n; ++i) st += t_[i], sy += y_[i];
      const double tm = st / n, ym = sy / n;
      double stt = 0, sty = 0;
      for (std::size_t i = 0; i < n; ++i) {
        stt += (t_[i] - tm) * (t_[i] - tm);
        sty += (t_[i] - tm) * (y_[i] - ym);
      }
      const double slope = sty / stt;
      double line_res = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = ym + slope * (t_[i] - tm) - y_[i];
        line_res += r * r;
      }
      if (smoothing >= line_res) {
        for (std::size_t i = 0; i < n; ++i) g_[i] = ym + slope * (t_[i] - tm);
        break;
      }
      const Reinsch rs(t_, y_);
      double hi = 1.0;
      while (rs.budget(hi) < smoothing && hi < 1e300) hi *= 16.0;
      double lo = hi;
      while (rs.budget(lo) > smoothing && lo > 1e-300) lo /= 16.0;
      // Geometric bisection; keep the feasible side.
      for (int it = 0; it < 400 && hi / lo > 1.0 + 1e-15; ++it) {
        const double mid = std::sqrt(lo * hi);
        (rs.budget(mid) <= smoothing ? lo : hi) = mid;
      }
      std::vector<double> gamma, res;
      rs.solve(lo, gamma, res);
      for (std::size_t i = 0; i < n; ++i) g_[i] = y_[i] - res[i];
      for (std::size_t j = 0; j + 2 < n; ++j) m_[j + 1] = gamma[j];
      break;
    }
    case InterpMode::Trigonometric: {
      const double dt = (t_.back() - t_.front()) / double(n - 1);
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (std::abs((t_[i + 1] - t_[i]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
          throw Error("trigonometric interpolation requires uniform spacing (interval " +
                      std::to_string(i) + ")");
      // c_m = (1/n) sum y_k exp(-2 pi i m k / n)
      re_.assign(n / 2 + 1, 0.0);
      im_.assign(n / 2 + 1, 0.0);
      for (std::size_t m = 0; m <= n / 2; ++m) {
        double re = 0, im = 0;
        for (std::size_t k = 0; k < n; ++k) {
          const double a = 2.0 * std::numbers::pi * double((m * k) % n) / double(n);
          re += y_[k] * std::cos(a);
          im -= y_[k] * std::sin(a);
        }
        re_[m] = re / n;
        im_[m] = im / n;
      }
      break;
    }
  }
}

std::size_t TimeSeries::interval(double t) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = it == t_.begin() ? 0 : std::size_t(it - t_.begin()) - 1;
  return std::min(i, t_.size() - 2);
}

double TimeSeries::spline_value(double t, bool derivative) const {
  const std::size_t i = interval(t);
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
  if (!derivative)
    return a * g_[i] + b * g_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  return (g_[i + 1] - g_[i]) / h +
         (-(3 * a * a - 1) * m_[i] + (3 * b * b - 1) * m_[i + 1]) * h / 6.0;
}

double TimeSeries::trig_value(double t) const {
  const std::size_t n = t_.size();
  const double period = (t_.back() - t_.front()) * double(n) / double(n - 1);
  const double s = (t - t_.front()) / period;
  double v = re_[0];
  const std::size_t top = (n + 1) / 2;  // frequencies 1..top-1 both signs
  for (std::size_t m = 1; m < top; ++m) {
    const double a = 2.0 * std::numbers::pi * double(m) * s;
    v += 2.0 * (re_[m] * std::cos(a) - im_[m] * std::sin(a));
  }
  if (n % 2 == 0) v += re_[n / 2] * std::cos(std::numbers::pi * double(n) * s);
  return v;
}

double TimeSeries::operator()(double t) const {
  if (mode_ == InterpMode::Trigonometric) return trig_value(t);
  t = std::clamp(t, t_.front(), t_.back());
  switch (mode_) {
    case InterpMode::Linear:
    case InterpMode::DerivativeLinear: {
      const std::size_t i = interval(t);
      const double h = t_[i + 1] - t_[i];
      if (mode_ == InterpMode::DerivativeLinear) return (y_[i + 1] - y_[i]) / h;
      const double b = (t - t_[i]) / h;
      if (b == 0.0) return y_[i];
      if (b == 1.0) return y_[i + 1];
      return (1.0 - b) * y_[i] + b * y_[i + 1];
    }
    case InterpMode::CubicSpline:
    case InterpMode::SmoothingSpline:
      return spline_value(t, false);
    case InterpMode::DerivativeSpline:
      return spline_value(t, true);
    default:
      return 0.0;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

void Checkpoint::add(const std::string &name, DVector v) {
  for (auto &[n, vec] : vectors)
    if (n == name) {
      vec = std::move(v);
      return;
    }
  vectors.emplace_back(name, std::move(v));
}

bool Checkpoint::has(const std::string &name) const {
  for (const auto &[n, vec] : vectors)
    if (n == name) return true;
  return false;
}

const DVector &Checkpoint::vector(const std::string &name) const {
  for (const auto &[n, vec] : vectors)
    if (n == name) return vec;
  throw Error("checkpoint has no vector '" + name + "'");
}

namespace {

struct Writer {
  std::string out;
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += char((v >> (8 * i)) & 0xff);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += char((v >> (8 * i)) & 0xff);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { out.append(s); }
};

struct Reader {
  std::string_view in;
  std::size_t pos = 0;
  void need(std::size_t n, const char *what) const {
    if (in.size() - pos < n)
      throw Error(std::string("checkpoint truncated while reading ") + what + " at byte " +
                  std::to_string(pos));
  }
  std::uint64_t uint(int nbytes, const char *what) {
    need(nbytes, what);
    std::uint64_t v = 0;
    for (int i = 0; i < nbytes; ++i)
      v |= std::uint64_t(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += nbytes;
    return v;
  }
  std::uint32_t u32(const char *what) { return static_cast<std::uint32_t>(uint(4, what)); }
  std::uint64_t u64(const char *what) { return uint(8, what); }
  double f64(const char *what) { return std::bit_cast<double>(uint(8, what)); }
  std::string_view bytes(std::size_t n, const char *what) {
    need(n, what);
    auto s = in.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string checkpoint_serialize(const Checkpoint &cp) {
  Writer w;
  w.bytes("FXCP");
  w.u32(Checkpoint::version);
  w.f64(cp.time);
  w.u64(cp.step);
  w.f64(cp.dt);
  w.u32(cp.bdf_order);
  w.u32(static_cast<std::uint32_t>(cp.mesh.dim));
  for (double v : cp.mesh.lower) w.f64(v);
  for (double v : cp.mesh.upper) w.f64(v);
  for (int v : cp.mesh.subdivisions) w.u32(static_cast<std::uint32_t>(v));
  w.u32(cp.degree);
  w.u32(static_cast<std::uint32_t>(cp.vectors.size()));
  for (const auto &[name, vec] : cp.vectors) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u64(vec.size());
    for (double v : vec) w.f64(v);
  }
  return std::move(w.out);
}

Checkpoint checkpoint_deserialize(std::string_view bytes) {
  Reader r{bytes};
  if (r.bytes(4, "magic") != "FXCP") throw Error("not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != Checkpoint::version)
    throw Error("checkpoint version " + std::to_string(version) + " not supported (expected " +
                std::to_string(Checkpoint::version) + ")");
  Checkpoint cp;
  cp.time = r.f64("time");
  cp.step = r.u64("step");
  cp.dt = r.f64("dt");
  cp.bdf_order = r.u32("BDF order");
  cp.mesh.dim = static_cast<int>(r.u32("mesh dim"));
  for (double &v : cp.mesh.lower) v = r.f64("mesh bounds");
  for (double &v : cp.mesh.upper) v = r.f64("mesh bounds");
  for (int &v : cp.mesh.subdivisions) v = static_cast<int>(r.u32("mesh subdivisions"));
  cp.degree = r.u32("degree");
  const std::uint32_t count = r.u32("vector count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = r.u32("vector name length");
    std::string name(r.bytes(len, "vector name"));
    const std::uint64_t n = r.u64("vector length");
    if (n > (bytes.size() - r.pos) / 8)
      throw Error("checkpoint truncated in data of vector '" + name + "'");
    DVector vec(n);
    for (auto &v : vec) v = r.f64("vector data");
    cp.vectors.emplace_back(std::move(name), std::move(vec));
  }
  if (r.pos != bytes.size())
    throw Error("checkpoint has " + std::to_string(bytes.size() - r.pos) + " trailing bytes");
  return cp;
}

void checkpoint_save(const std::string &path, const Checkpoint &cp) {
  write_file(path, checkpoint_serialize(cp), true);
}

Checkpoint checkpoint_load(const std::string &path) {
  return checkpoint_deserialize(read_file(path, true));
}

// ---------------------------------------------------------------------------
// VTK output

namespace {

const int vtk_cell_type[4] = {0, 3, 9, 12};

// Tensor-product corner c of a lattice cell in VTK order.
std::array<int, 3> vtk_corner(int dim, int c) {
  static const int quad[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  if (dim == 1) return {c, 0, 0};
  const int base = c % 4;
  return {quad[base][0], quad[base][1], c / 4};
}

std::string num(double v) { return params::format_real(v); }

}  // namespace

void vtk_write(const std::string &path, const mesh::Mesh &mesh, int lattice_degree,
               const std::vector<VtkField> &fields, double time) {
  const fem::FeSpace lattice(mesh, lattice_degree);
  const int dim = mesh.dim();
  const std::size_t np = lattice.n_nodes();
  std::array<int, 3> n{1, 1, 1};
  for (int d = 0; d < dim; ++d) n[d] = lattice.nodes_per_axis(d);
  const std::array<int, 3> nc{std::max(n[0] - 1, 1), std::max(n[1] - 1, 1), std::max(n[2] - 1, 1)};
  const std::size_t ncells = std::size_t(nc[0]) * nc[1] * nc[2];
  const int corners = 1 << dim;

  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\nflexfem output\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "FIELD FieldData 1\nTIME 1 1 double\n" << num(time) << "\n";
  os << "POINTS " << np << " double\n";
  for (std::size_t i = 0; i < np; ++i) {
    const Point p = lattice.node_point(i);
    os << num(p[0]) << ' ' << num(p[1]) << ' ' << num(p[2]) << '\n';
  }
  os << "CELLS " << ncells << ' ' << ncells * (corners + 1) << '\n';
  for (int k = 0; k < nc[2]; ++k)
    for (int j = 0; j < nc[1]; ++j)
      for (int i = 0; i < nc[0]; ++i) {
        os << corners;
        for (int c = 0; c < corners; ++c) {
          const auto o = vtk_corner(dim, c);
          os << ' ' << (std::size_t(k + o[2]) * n[1] + (j + o[1])) * n[0] + (i + o[0]);
        }
        os << '\n';
      }
  os << "CELL_TYPES " << ncells << '\n';
  for (std::size_t c = 0; c < ncells; ++c) os << vtk_cell_type[dim] << '\n';

  if (!fields.empty()) os << "POINT_DATA " << np << '\n';
  for (const auto &f : fields) {
    if (!f.space) throw Error("VTK field '" + f.name + "' has no space");
    if (&f.space->mesh() != &mesh && !(f.space->mesh().descriptor() == mesh.descriptor()))
      throw Error("VTK field '" + f.name + "' lives on a different mesh");
    if (f.values.size() != f.space->n_dofs())
      throw Error("VTK field '" + f.name + "' has " + std::to_string(f.values.size()) +
                  " values, space has " + std::to_string(f.space->n_dofs()) + " dofs");
    const int ncomp = f.space->n_components();
    // Nodal values on the lattice: direct copy when the lattices coincide.
    std::vector<double> vals(np * ncomp);
    if (f.space->degree() == lattice_degree) {
      std::copy(f.values.begin(), f.values.end(), vals.begin());
    } else {
      for (std::size_t i = 0; i < np; ++i) {
        const auto v = fem::point_value(*f.space, f.values, lattice.node_point(i));
        std::copy(v.begin(), v.end(), vals.begin() + i * ncomp);
      }
    }
    if (ncomp == 1) {
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (std::size_t i = 0; i < np; ++i) os << num(vals[i]) << '\n';
    } else if (ncomp == dim || ncomp == 3) {
      os << "VECTORS " << f.name << " double\n";
      for (std::size_t i = 0; i < np; ++i) {
        for (int c = 0; c < 3; ++c)
          os << (c ? " " : "") << (c < ncomp ? num(vals[i * ncomp + c]) : std::string("0"));
        os << '\n';
      }
    } else {
      for (int c = 0; c < ncomp; ++c) {
        os << "SCALARS " << f.name << '_' << c << " double 1\nLOOKUP_TABLE default\n";
        for (std::size_t i = 0; i < np; ++i) os << num(vals[i * ncomp + c]) << '\n';
      }
    }
  }
  write_file(path, os.str(), false);
}

// ---------------------------------------------------------------------------
// VTK input

Point GridData::point(std::size_t index) const {
  Point p{};
  for (int d = 0; d < 3; ++d) {
    const std::size_t i = index % dims[d];
    index /= dims[d];
    p[d] = origin[d] + spacing[d] * double(i);
  }
  return p;
}

const GridArray &GridData::array(const std::string &name) const {
  for (const auto &a : arrays)
    if (a.name == name) return a;
  throw Error("grid has no data array '" + name + "'");
}

namespace {

class Tokens {
 public:
  explicit Tokens(std::string_view text) : text_(text) {}

  bool done() {
    skip();
    return pos_ >= text_.size();
  }
  std::string next(const char *what) {
    skip();
    if (pos_ >= text_.size()) throw Error(std::string("VTK: unexpected end of file reading ") + what);
    const std::size_t b = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string(text_.substr(b, pos_ - b));
  }
  std::string peek() {
    const std::size_t save = pos_;
    std::string t = done() ? std::string() : next("");
    pos_ = save;
    return t;
  }
  double real(const char *what) {
    const std::string t = next(what);
    double v;
    if (!parse_double(t, v)) throw Error(std::string("VTK: expected number for ") + what + ", got '" + t + "'");
    return v;
  }
  long long integer(const char *what) {
    const double v = real(what);
    if (v != std::floor(v)) throw Error(std::string("VTK: expected integer for ") + what);
    return static_cast<long long>(v);
  }
  std::string line() {
    const std::size_t b = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    std::string s(text_.substr(b, pos_ - b));
    if (pos_ < text_.size()) ++pos_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<double> reals(Tokens &tok, std::size_t n, const char *what) {
  std::vector<double> v(n);
  for (auto &x : v) x = tok.real(what);
  return v;
}

// Distinct values (to tolerance) of one coordinate, sorted.
std::vector<double> distinct(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

}  // namespace

GridData grid_parse(std::string_view text) {
  Tokens tok(text);
  const std::string first = tok.line();
  if (first.rfind("# vtk DataFile", 0) != 0) throw Error("not a legacy VTK file");
  tok.line();  // title
  const std::string fmt = trim(tok.line());
  if (fmt != "ASCII") throw Error("VTK: only ASCII files are supported, got '" + fmt + "'");
  if (tok.next("DATASET") != "DATASET") throw Error("VTK: expected DATASET");
  const std::string kind = tok.next("dataset type");
  if (kind != "STRUCTURED_POINTS" && kind != "UNSTRUCTURED_GRID")
    throw Error("VTK: dataset type '" + kind + "' not supported");

  GridData g;
  std::vector<double> coords;  // unstructured points
  std::size_t n_unstructured = 0;
  enum class Section { None, Point, Cell } section = Section::None;
  std::size_t n_data = 0;
  std::vector<GridArray> arrays;

  auto read_field = [&](bool attached) {
    tok.next("field name");
    const long long count = tok.integer("field array count");
    for (long long a = 0; a < count; ++a) {
      GridArray arr;
      arr.name = tok.next("field array name");
      arr.n_components = static_cast<int>(tok.integer("components"));
      const long long tuples = tok.integer("tuples");
      tok.next("type");
      arr.values = reals(tok, std::size_t(tuples) * arr.n_components, "field data");
      if (arr.name == "TIME" && arr.values.size() == 1 && !attached) {
        g.time = arr.values[0];
        g.has_time = true;
      } else if (attached && std::size_t(tuples) == n_data) {
        arrays.push_back(std::move(arr));
      }
    }
  };

  while (!tok.done()) {
    const std::string key = tok.next("keyword");
    if (key == "DIMENSIONS") {
      for (int d = 0; d < 3; ++d) g.dims[d] = static_cast<int>(tok.integer("dimensions"));
    } else if (key == "ORIGIN") {
      for (int d = 0; d < 3; ++d) g.origin[d] = tok.real("origin");
    } else if (key == "SPACING" || key == "ASPECT_RATIO") {
      for (int d = 0; d < 3; ++d) g.spacing[d] = tok.real("spacing");
    } else if (key == "POINTS") {
      n_unstructured = std::size_t(tok.integer("point count"));
      tok.next("type");
      coords = reals(tok, 3 * n_unstructured, "points");
    } else if (key == "CELLS") {
      tok.integer("cell count");
      const long long size = tok.integer("cell list size");
      for (long long i = 0; i < size; ++i) tok.next("cells");
    } else if (key == "CELL_TYPES") {
      const long long nct = tok.integer("cell type count");
      for (long long i = 0; i < nct; ++i) tok.next("cell types");
    } else if (key == "POINT_DATA" || key == "CELL_DATA") {
      section = key == "POINT_DATA" ? Section::Point : Section::Cell;
      n_data = std::size_t(tok.integer("data count"));
      if (!arrays.empty()) throw Error("VTK: both point and cell data present");
    } else if (key == "SCALARS" || key == "VECTORS") {
      if (section == Section::None) throw Error("VTK: " + key + " outside a data section");
      GridArray arr;
      arr.name = tok.next("array name");
      tok.next("type");
      arr.n_components = 3;
      if (key == "SCALARS") {
        arr.n_components = 1;
        const std::string p = tok.peek();
        if (p != "LOOKUP_TABLE") arr.n_components = static_cast<int>(tok.integer("components"));
        if (tok.peek() == "LOOKUP_TABLE") {
          tok.next("");
          tok.next("lookup table name");
        }
      }
      arr.values = reals(tok, n_data * arr.n_components, "data values");
      arrays.push_back(std::move(arr));
    } else if (key == "FIELD") {
      read_field(section != Section::None);
    } else {
      throw Error("VTK: unsupported keyword '" + key + "'");
    }
  }

  if (kind == "STRUCTURED_POINTS") {
    if (section == Section::Cell) {
      for (int d = 0; d < 3; ++d)
        if (g.dims[d] > 1) {
          g.origin[d] += 0.5 * g.spacing[d];
          g.dims[d] -= 1;
        }
    }
  } else {
    if (section == Section::Cell)
      throw Error("VTK: cell data on unstructured grids is not supported");
    // Detect a uniform lattice.
    double extent = 0.0;
    std::array<std::vector<double>, 3> axis;
    for (int d = 0; d < 3; ++d) {
      std::vector<double> c(n_unstructured);
      for (std::size_t i = 0; i < n_unstructured; ++i) c[i] = coords[3 * i + d];
      if (!c.empty()) extent = std::max(extent, *std::max_element(c.begin(), c.end()) -
                                                    *std::min_element(c.begin(), c.end()));
      axis[d] = std::move(c);
    }
    const double tol = 1e-9 * std::max(extent, 1e-300);
    std::size_t product = 1;
    for (int d = 0; d < 3; ++d) {
      const auto u = distinct(axis[d], tol);
      if (u.empty()) throw Error("VTK: no points");
      g.dims[d] = static_cast<int>(u.size());
      g.origin[d] = u.front();
      g.spacing[d] = u.size() > 1 ? (u.back() - u.front()) / double(u.size() - 1) : 1.0;
      for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u[i] - (g.origin[d] + g.spacing[d] * double(i))) > tol)
          throw Error("VTK: points do not form a uniform lattice (axis " + std::to_string(d) + ")");
      product *= u.size();
    }
    if (product != n_unstructured)
      throw Error("VTK: " + std::to_string(n_unstructured) + " points do not fill a " +
                  std::to_string(g.dims[0]) + "x" + std::to_string(g.dims[1]) + "x" +
                  std::to_string(g.dims[2]) + " lattice");
    std::vector<std::size_t> perm(n_unstructured);
    std::vector<char> seen(n_unstructured, 0);
    for (std::size_t i = 0; i < n_unstructured; ++i) {
      std::size_t idx = 0, stride = 1;
      for (int d = 0; d < 3; ++d) {
        const long k = std::lround((coords[3 * i + d] - g.origin[d]) / g.spacing[d]);
        idx += std::size_t(k) * stride;
        stride *= g.dims[d];
      }
      if (seen[idx]) throw Error("VTK: duplicate lattice point");
      seen[idx] = 1;
      perm[i] = idx;
    }
    for (auto &arr : arrays) {
      std::vector<double> v(arr.values.size());
      for (std::size_t i = 0; i < n_unstructured; ++i)
        for (int c = 0; c < arr.n_components; ++c)
          v[perm[i] * arr.n_components + c] = arr.values[i * arr.n_components + c];
      arr.values = std::move(v);
    }
  }

  g.dim = 1;
  for (int d = 0; d < 3; ++d)
    if (g.dims[d] > 1) g.dim = d + 1;
  for (const auto &arr : arrays)
    if (arr.values.size() != g.n_points() * arr.n_components)
      throw Error("VTK: array '" + arr.name + "' has " + std::to_string(arr.values.size()) +
                  " values for " + std::to_string(g.n_points()) + " lattice points");
  g.arrays = std::move(arrays);
  return g;
}

GridData grid_read(const std::string &path) { return grid_parse(read_file(path, true)); }

std::vector<double> grid_eval(const GridData &data, const std::string &name, const Point &p,
                              GridEval method) {
  const GridArray &arr = data.array(name);
  const int nc = arr.n_components;
  std::array<std::size_t, 3> stride{1, std::size_t(data.dims[0]),
                                    std::size_t(data.dims[0]) * data.dims[1]};
  std::vector<double> out(nc, 0.0);

  if (method == GridEval::ClosestPoint) {
    std::size_t idx = 0;
    for (int d = 0; d < 3; ++d) {
      if (data.dims[d] == 1) continue;
      const double u = std::clamp((p[d] - data.origin[d]) / data.spacing[d], 0.0,
                                  double(data.dims[d] - 1));
      idx += std::size_t(std::lround(u)) * stride[d];
    }
    for (int c = 0; c < nc; ++c) out[c] = arr.values[idx * nc + c];
    return out;
  }

  std::array<std::size_t, 3> base{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  std::array<int, 3> span{0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    if (data.dims[d] == 1) continue;
    const double u = std::clamp((p[d] - data.origin[d]) / data.spacing[d], 0.0,
                                double(data.dims[d] - 1));
    const std::size_t i = std::min<std::size_t>(std::size_t(u), data.dims[d] - 2);
    base[d] = i;
    frac[d] = u - double(i);
    span[d] = 1;
  }
  for (int corner = 0; corner < 8; ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    bool skip = false;
    for (int d = 0; d < 3; ++d) {
      const int o = (corner >> d) & 1;
      if (o && !span[d]) {
        skip = true;
        break;
      }
      w *= o ? frac[d] : (span[d] ? 1.0 - frac[d] : 1.0);
      idx += (base[d] + o) * stride[d];
    }
    if (skip || w == 0.0) continue;
    for (int c = 0; c < nc; ++c) out[c] += w * arr.values[idx * nc + c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Isocontours

namespace {

struct ContourBuilder {
  const fem::FeSpace &space;
  std::span<const double> values;
  double level;
  int component;
  Isosurface surf;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_point;

  double value(std::size_t node) const {
    return values[node * space.n_components() + component];
  }
  bool inside(std::size_t node) const { return value(node) > level; }

  std::size_t crossing(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    auto [it, inserted] = edge_point.try_emplace({a, b}, surf.points.size());
    if (inserted) {
      const double va = value(a), vb = value(b);
      const double s = (level - va) / (vb - va);
      const Point pa = space.node_point(a), pb = space.node_point(b);
      Point p{};
      for (int d = 0; d < 3; ++d) p[d] = pa[d] + s * (pb[d] - pa[d]);
      surf.points.push_back(p);
    }
    return it->second;
  }

  void simplex(const std::vector<std::size_t> &v) {
    std::vector<std::size_t> in, out;
    for (auto n : v) (inside(n) ? in : out).push_back(n);
    if (in.empty() || out.empty()) return;
    if (v.size() == 2) {
      surf.cells.push_back({crossing(in[0], out[0])});
    } else if (v.size() == 3) {
      const auto &lone = in.size() == 1 ? in : out;
      const auto &pair = in.size() == 1 ? out : in;
      surf.cells.push_back({crossing(lone[0], pair[0]), crossing(lone[0], pair[1])});
    } else if (in.size() == 2) {
      const std::size_t ac = crossing(in[0], out[0]), ad = crossing(in[0], out[1]);
      const std::size_t bd = crossing(in[1], out[1]), bc = crossing(in[1], out[0]);
      surf.cells.push_back({ac, ad, bd});
      surf.cells.push_back({ac, bd, bc});
    } else {
      const auto &lone = in.size() == 1 ? in : out;
      const auto &rest = in.size() == 1 ? out : in;
      surf.cells.push_back(
          {crossing(lone[0], rest[0]), crossing(lone[0], rest[1]), crossing(lone[0], rest[2])});
    }
  }
};

}  // namespace

Isosurface extract_isosurface(const fem::FeSpace &space, std::span<const double> values,
                              double level, int component) {
  if (values.size() != space.n_dofs())
    throw Error("isosurface: vector length does not match the space");
  if (component < 0 || component >= space.n_components())
    throw Error("isosurface: component out of range");
  ContourBuilder b{space, values, level, component, {}, {}};
  b.surf.level = level;
  const int dim = space.dim();
  std::array<int, 3> n{1, 1, 1};
  for (int d = 0; d < dim; ++d) n[d] = space.nodes_per_axis(d);
  auto node = [&](int i, int j, int k) { return (std::size_t(k) * n[1] + j) * n[0] + i; };

  for (int k = 0; k < std::max(n[2] - 1, 1); ++k)
    for (int j = 0; j < std::max(n[1] - 1, 1); ++j)
      for (int i = 0; i < n[0] - 1; ++i) {
        if (dim == 1) {
          b.simplex({node(i, 0, 0), node(i + 1, 0, 0)});
        } else if (dim == 2) {
          const auto v00 = node(i, j, 0), v10 = node(i + 1, j, 0);
          const auto v01 = node(i, j + 1, 0), v11 = node(i + 1, j + 1, 0);
          b.simplex({v00, v10, v11});
          b.simplex({v00, v11, v01});
        } else {
          // Kuhn subdivision: one tetrahedron per axis permutation.
          std::array<int, 3> perm{0, 1, 2};
          do {
            std::array<int, 3> o{0, 0, 0};
            std::vector<std::size_t> tet{node(i, j, k)};
            for (int s = 0; s < 3; ++s) {
              o[perm[s]] = 1;
              tet.push_back(node(i + o[0], j + o[1], k + o[2]));
            }
            b.simplex(tet);
          } while (std::next_permutation(perm.begin(), perm.end()));
        }
      }
  return std::move(b.surf);
}

void vtk_write_isosurfaces(const std::string &path, const std::vector<Isosurface> &surfaces) {
  std::size_t np = 0;
  std::array<std::size_t, 4> count{0, 0, 0, 0}, size{0, 0, 0, 0};
  for (const auto &s : surfaces) {
    np += s.points.size();
    for (const auto &c : s.cells) {
      if (c.empty() || c.size() > 3) throw Error("isosurface cell with " + std::to_string(c.size()) + " points");
      ++count[c.size()];
      size[c.size()] += c.size() + 1;
    }
  }
  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\nflexfem contours\nASCII\nDATASET POLYDATA\n";
  os << "POINTS " << np << " double\n";
  for (const auto &s : surfaces)
    for (const auto &p : s.points) os << num(p[0]) << ' ' << num(p[1]) << ' ' << num(p[2]) << '\n';
  const char *section[4] = {"", "VERTICES", "LINES", "POLYGONS"};
  std::vector<double> levels;
  for (std::size_t k = 1; k <= 3; ++k) {
    if (!count[k]) continue;
    os << section[k] << ' ' << count[k] << ' ' << size[k] << '\n';
    std::size_t offset = 0;
    for (const auto &s : surfaces) {
      for (const auto &c : s.cells) {
        if (c.size() != k) continue;
        os << k;
        for (auto idx : c) os << ' ' << offset + idx;
        os << '\n';
        levels.push_back(s.level);
      }
      offset += s.points.size();
    }
  }
  if (!levels.empty()) {
    os << "CELL_DATA " << levels.size() << "\nSCALARS level double 1\nLOOKUP_TABLE default\n";
    for (double l : levels) os << num(l) << '\n';
  }
  write_file(path, os.str(), false);
}

}  // namespace flexfem::io
