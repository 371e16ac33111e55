#include "martlab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace martlab {

using nlohmann::json;

namespace {

template <class Range>
void write_list(std::ostream& os, const Range& xs) {
  os << '[';
  bool first = true;
  for (double x : xs) {
    if (!first) os << ',';
    os << format_double(x);
    first = false;
  }
  os << ']';
}

void write_header(std::ostream& os, const FiltrationSpec& s) { os << "m,N,ell\n" << s.m << ',' << s.depth << ',' << s.ell << '\n'; }

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw FormatError("bad number: '" + s + "'");
    return x;
  } catch (const std::logic_error&) {
    throw FormatError("bad number: '" + s + "'");
  }
}

long to_int(const std::string& s) {
  const double x = to_double(s);
  if (x != std::floor(x)) throw FormatError("expected an integer: '" + s + "'");
  return static_cast<long>(x);
}

bool is_json(const std::string& text) {
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) return c == '{';
  }
  return false;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

FiltrationSpec csv_header(const std::vector<std::string>& lines) {
  if (lines.size() < 2 || lines[0] != "m,N,ell") throw FormatError("expected header 'm,N,ell'");
  const auto v = split(lines[1]);
  if (v.size() != 3) throw FormatError("header needs three values");
  try {
    return {static_cast<int>(to_int(v[0])), static_cast<int>(to_int(v[1])), static_cast<int>(to_int(v[2]))};
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

FiltrationSpec json_spec(const json& j) {
  try {
    return {field<int>(j, "m"), field<int>(j, "N"), field<int>(j, "ell")};
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

template <class F>
auto rethrow_as_format(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void write_measure_csv(std::ostream& os, const TreeMeasure& mu) {
  const auto& s = mu.spec();
  write_header(os, s);
  os << "index";
  for (int c = 0; c < s.ell; ++c) os << ",mass_" << c;
  os << '\n';
  for (std::size_t i = 0; i < s.atoms_at(s.depth); ++i) {
    os << i;
    for (double x : mu.leaf(i)) os << ',' << format_double(x);
    os << '\n';
  }
}

void write_measure_json(std::ostream& os, const TreeMeasure& mu) {
  const auto& s = mu.spec();
  os << "{\"m\":" << s.m << ",\"N\":" << s.depth << ",\"ell\":" << s.ell << ",\"leaves\":[";
  for (std::size_t i = 0; i < s.atoms_at(s.depth); ++i) {
    if (i) os << ',';
    write_list(os, mu.leaf(i));
  }
  os << "]}\n";
}

void write_martingale_csv(std::ostream& os, const Martingale& f) {
  const auto& s = f.spec();
  write_header(os, s);
  os << "f0";
  for (double x : f.f0()) os << ',' << format_double(x);
  os << "\nlevel,atom";
  for (int j = 0; j < s.m; ++j) {
    for (int c = 0; c < s.ell; ++c) os << ",v_" << j << '_' << c;
  }
  os << '\n';
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      os << n << ',' << i;
      for (double x : f.block(n, i)) os << ',' << format_double(x);
      os << '\n';
    }
  }
}

void write_martingale_json(std::ostream& os, const Martingale& f) {
  const auto& s = f.spec();
  os << "{\"m\":" << s.m << ",\"N\":" << s.depth << ",\"ell\":" << s.ell << ",\"f0\":";
  write_list(os, f.f0());
  os << ",\"blocks\":[";
  bool first = true;
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      if (!first) os << ',';
      first = false;
      os << "{\"level\":" << n << ",\"atom\":" << i << ",\"values\":";
      write_list(os, f.block(n, i));
      os << '}';
    }
  }
  os << "]}\n";
}

void write_w_json(std::ostream& os, const SubspaceW& w) {
  os << "{\"m\":" << w.m() << ",\"ell\":" << w.ell() << ",\"k\":" << w.dim() << ",\"basis\":[";
  for (int k = 0; k < w.dim(); ++k) {
    if (k) os << ',';
    const Eigen::VectorXd b = w.basis().col(k);
    write_list(os, std::vector<double>(b.data(), b.data() + b.size()));
  }
  os << "]}\n";
}

void write_fibers_json(std::ostream& os, const FiniteAbelianGroup& g, const FiberFamily& fibers) {
  os << "{\"factors\":[";
  for (std::size_t k = 0; k < g.factors().size(); ++k) os << (k ? "," : "") << g.factors()[k];
  os << "],\"ell\":" << fibers.ell << ",\"fibers\":[";
  for (int gamma = 1; gamma < g.order(); ++gamma) {
    if (gamma > 1) os << ',';
    os << "{\"gamma\":" << gamma << ",\"basis\":[";
    const auto& b = fibers.at(gamma);
    for (Eigen::Index k = 0; k < b.cols(); ++k) {
      if (k) os << ',';
      os << '[';
      for (Eigen::Index r = 0; r < b.rows(); ++r) {
        if (r) os << ',';
        os << '[' << format_double(b(r, k).real()) << ',' << format_double(b(r, k).imag()) << ']';
      }
      os << ']';
    }
    os << "]}";
  }
  os << "]}\n";
}

TreeMeasure parse_measure(const std::string& text) {
  return rethrow_as_format([&] {
    if (is_json(text)) {
      const json j = parse_json(text);
      const FiltrationSpec s = json_spec(j);
      const auto leaves = field<std::vector<std::vector<double>>>(j, "leaves");
      if (leaves.size() != s.atoms_at(s.depth)) throw FormatError("expected m^N leaves");
      std::vector<double> mass;
      for (const auto& l : leaves) {
        if (l.size() != static_cast<std::size_t>(s.ell)) throw FormatError("leaf has wrong number of components");
        mass.insert(mass.end(), l.begin(), l.end());
      }
      return TreeMeasure(s, std::move(mass));
    }
    const auto lines = lines_of(text);
    const FiltrationSpec s = csv_header(lines);
    const auto leaves = s.atoms_at(s.depth);
    const auto ell = static_cast<std::size_t>(s.ell);
    if (lines.size() != leaves + 3) throw FormatError("expected one row per leaf");
    std::vector<double> mass(leaves * ell);
    std::vector<char> seen(leaves, 0);
    for (std::size_t r = 3; r < lines.size(); ++r) {
      const auto v = split(lines[r]);
      if (v.size() != ell + 1) throw FormatError("row has wrong number of fields");
      const long i = to_int(v[0]);
      if (i < 0 || static_cast<std::size_t>(i) >= leaves || seen[static_cast<std::size_t>(i)]) throw FormatError("bad leaf index");
      seen[static_cast<std::size_t>(i)] = 1;
      for (std::size_t c = 0; c < ell; ++c) mass[static_cast<std::size_t>(i) * ell + c] = to_double(v[c + 1]);
    }
    return TreeMeasure(s, std::move(mass));
  });
}

Martingale parse_martingale(const std::string& text) {
  return rethrow_as_format([&] {
    FiltrationSpec s;
    std::vector<double> data;
    std::vector<char> seen;
    auto put_block = [&](long n, long i, const std::vector<double>& values) {
      if (n < 0 || n >= s.depth || i < 0 || static_cast<std::size_t>(i) >= s.atoms_at(static_cast<int>(n))) {
        throw FormatError("block address out of range");
      }
      const auto m = static_cast<std::size_t>(s.m), ell = static_cast<std::size_t>(s.ell);
      if (values.size() != m * ell) throw FormatError("block has wrong number of values");
      const std::size_t g = s.level_offset(static_cast<int>(n)) + static_cast<std::size_t>(i);
      if (seen[g]) throw FormatError("block given twice");
      seen[g] = 1;
      const std::size_t at = (s.level_offset(static_cast<int>(n) + 1) + static_cast<std::size_t>(i) * m) * ell;
      std::copy(values.begin(), values.end(), data.begin() + static_cast<std::ptrdiff_t>(at));
    };
    auto start = [&](const FiltrationSpec& spec, const std::vector<double>& f0) {
      s = spec;
      if (f0.size() != static_cast<std::size_t>(s.ell)) throw FormatError("f0 has wrong size");
      data.assign(s.total_atoms() * static_cast<std::size_t>(s.ell), 0.0);
      seen.assign(s.level_offset(s.depth), 0);
      std::copy(f0.begin(), f0.end(), data.begin());
    };
    if (is_json(text)) {
      const json j = parse_json(text);
      start(json_spec(j), field<std::vector<double>>(j, "f0"));
      if (!j.contains("blocks") || !j["blocks"].is_array()) throw FormatError("missing field 'blocks'");
      for (const auto& b : j["blocks"]) {
        put_block(field<long>(b, "level"), field<long>(b, "atom"), field<std::vector<double>>(b, "values"));
      }
    } else {
      const auto lines = lines_of(text);
      const FiltrationSpec spec = csv_header(lines);
      if (lines.size() < 4) throw FormatError("missing f0 row");
      const auto f0 = split(lines[2]);
      if (f0.empty() || f0[0] != "f0") throw FormatError("expected an f0 row");
      std::vector<double> v0;
      for (std::size_t k = 1; k < f0.size(); ++k) v0.push_back(to_double(f0[k]));
      start(spec, v0);
      for (std::size_t r = 4; r < lines.size(); ++r) {
        const auto v = split(lines[r]);
        if (v.size() < 2) throw FormatError("short block row");
        std::vector<double> values;
        for (std::size_t k = 2; k < v.size(); ++k) values.push_back(to_double(v[k]));
        put_block(to_int(v[0]), to_int(v[1]), values);
      }
    }
    for (char c : seen) {
      if (!c) throw FormatError("missing blocks");
    }
    return Martingale(s, std::move(data));
  });
}

SubspaceW parse_w(const std::string& text) {
  return rethrow_as_format([&] {
    const json j = parse_json(text);
    const int m = field<int>(j, "m"), ell = field<int>(j, "ell");
    const auto basis = field<std::vector<std::vector<double>>>(j, "basis");
    if (j.contains("k") && field<std::size_t>(j, "k") != basis.size()) throw FormatError("k does not match the basis");
    if (basis.empty()) return SubspaceW::zero(m, ell);
    std::vector<Eigen::VectorXd> blocks;
    for (const auto& b : basis) blocks.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    return SubspaceW(m, ell, blocks);
  });
}

std::pair<FiniteAbelianGroup, FiberFamily> parse_fibers(const std::string& text) {
  return rethrow_as_format([&] {
    const json j = parse_json(text);
    FiniteAbelianGroup g(field<std::vector<int>>(j, "factors"));
    const int ell = field<int>(j, "ell");
    if (!j.contains("fibers") || !j["fibers"].is_array()) throw FormatError("missing field 'fibers'");
    std::vector<Eigen::MatrixXcd> spanning(static_cast<std::size_t>(g.order() - 1));
    std::vector<char> seen(spanning.size(), 0);
    for (const auto& f : j["fibers"]) {
      const int gamma = field<int>(f, "gamma");
      if (gamma < 1 || gamma >= g.order() || seen[static_cast<std::size_t>(gamma - 1)]) throw FormatError("bad gamma");
      seen[static_cast<std::size_t>(gamma - 1)] = 1;
      const auto vecs = field<std::vector<std::vector<std::vector<double>>>>(f, "basis");
      Eigen::MatrixXcd b(ell, static_cast<Eigen::Index>(vecs.size()));
      for (std::size_t k = 0; k < vecs.size(); ++k) {
        if (vecs[k].size() != static_cast<std::size_t>(ell)) throw FormatError("fiber vector has wrong length");
        for (int r = 0; r < ell; ++r) {
          const auto& z = vecs[k][static_cast<std::size_t>(r)];
          if (z.size() != 2) throw FormatError("complex entries are [re, im] pairs");
          b(r, static_cast<Eigen::Index>(k)) = cplx(z[0], z[1]);
        }
      }
      spanning[static_cast<std::size_t>(gamma - 1)] = b;
    }
    for (char c : seen) {
      if (!c) throw FormatError("every nonzero gamma needs a fiber");
    }
    return std::make_pair(g, make_fibers(ell, spanning));
  });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TreeMeasure read_measure(const std::string& path) { return parse_measure(read_file(path)); }
Martingale read_martingale(const std::string& path) { return parse_martingale(read_file(path)); }
SubspaceW read_w(const std::string& path) { return parse_w(read_file(path)); }
std::pair<FiniteAbelianGroup, FiberFamily> read_fibers(const std::string& path) { return parse_fibers(read_file(path)); }

}  // namespace martlab
