#include "ccae/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ccae/config.hpp"

namespace ccae::io {

namespace {

namespace fs = std::filesystem;

constexpr std::array<char, 4> kCsiMagic{'C', 'C', 'S', 'I'};
constexpr std::array<char, 4> kNetMagic{'C', 'C', 'N', 'N'};
constexpr std::uint16_t kFormatVersion = 1;

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

void write_provenance(std::ostream& out, const Provenance& p) {
  if (p.config_hash) out << "# config_hash=" << *p.config_hash << '\n';
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> comments;  // `# key=value` lines
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      if (const auto eq = body.find('='); eq != std::string::npos)
        table.comments[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    auto fields = split(line, ',');
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw std::runtime_error(path.string() + ": row " + std::to_string(table.rows.size() + 1) +
                               " has " + std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw std::runtime_error(path.string() + ": missing header");
  return table;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& expected, const fs::path& p) {
  if (t.header != expected)
    throw std::runtime_error(p.string() + ": unexpected header");
}

void fill_provenance(const CsvTable& t, Provenance* p) {
  if (p == nullptr) return;
  if (const auto it = t.comments.find("config_hash"); it != t.comments.end()) p->config_hash = it->second;
}

std::size_t parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("not an index: '" + s + "'");
  return v;
}

long parse_long(const std::string& s) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("not an integer: '" + s + "'");
  return v;
}

bool parse_flag(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw std::runtime_error("expected 0/1, got '" + s + "'");
}

// Little-endian primitives, independent of host byte order.
template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("unexpected end of file");
    bits |= static_cast<U>(static_cast<U>(c) << (8 * b));
  }
  return std::bit_cast<T>(bits);
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic, const fs::path& p) {
  std::array<char, 4> got{};
  in.read(got.data(), 4);
  if (!in || got != magic) throw std::runtime_error(p.string() + ": bad magic bytes");
  if (const auto v = get_le<std::uint16_t>(in); v != kFormatVersion)
    throw std::runtime_error(p.string() + ": unsupported version " + std::to_string(v));
}

}  // namespace

void write_positions(const fs::path& path, const UePlacement& placement,
                     const Provenance& provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "id,x,y,z,is_anchor,traj_order\n";
  for (std::size_t n = 0; n < placement.size(); ++n) {
    const auto& p = placement.positions[n];
    out << n << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ','
        << format_double(p.z()) << ',' << (placement.is_anchor(n) ? 1 : 0) << ','
        << placement.trajectory_order(n) << '\n';
  }
}

UePlacement read_positions(const fs::path& path, Provenance* provenance) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"id", "x", "y", "z", "is_anchor", "traj_order"}, path);
  fill_provenance(t, provenance);
  UePlacement placement;
  std::vector<std::pair<long, std::size_t>> traj;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (parse_index(row[0]) != r) throw std::runtime_error(path.string() + ": ids must be 0..N-1 in order");
    placement.positions.emplace_back(parse_double(row[1]), parse_double(row[2]), parse_double(row[3]));
    if (parse_flag(row[4])) placement.anchor_indices.push_back(r);
    if (const long order = parse_long(row[5]); order >= 0) traj.emplace_back(order, r);
  }
  std::sort(traj.begin(), traj.end());
  for (const auto& [order, id] : traj) placement.trajectory_indices.push_back(id);
  return placement;
}

void write_csi_binary(const fs::path& path, const CsiMatrix& csi) {
  std::ofstream out = open_out(path, true);
  out.write(kCsiMagic.data(), 4);
  put_le<std::uint16_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(csi.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(csi.cols()));
  for (Eigen::Index n = 0; n < csi.rows(); ++n) {
    for (Eigen::Index m = 0; m < csi.cols(); ++m) {
      put_le<float>(out, static_cast<float>(csi(n, m).real()));
      put_le<float>(out, static_cast<float>(csi(n, m).imag()));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsiMatrix read_csi_binary(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  expect_magic(in, kCsiMagic, path);
  const auto n = get_le<std::uint32_t>(in);
  const auto m = get_le<std::uint32_t>(in);
  CsiMatrix csi(n, m);
  for (Eigen::Index r = 0; r < csi.rows(); ++r) {
    for (Eigen::Index c = 0; c < csi.cols(); ++c) {
      const float re = get_le<float>(in);
      const float im = get_le<float>(in);
      csi(r, c) = {re, im};
    }
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error(path.string() + ": trailing bytes");
  return csi;
}

void write_csi_csv(const fs::path& path, const CsiMatrix& csi, const Provenance& provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "id";
  for (Eigen::Index m = 0; m < csi.cols(); ++m) out << ",re_" << m << ",im_" << m;
  out << '\n';
  for (Eigen::Index n = 0; n < csi.rows(); ++n) {
    out << n;
    for (Eigen::Index m = 0; m < csi.cols(); ++m)
      out << ',' << format_double(csi(n, m).real()) << ',' << format_double(csi(n, m).imag());
    out << '\n';
  }
}

CsiMatrix read_csi_csv(const fs::path& path, Provenance* provenance) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || (t.header.size() - 1) % 2 != 0 || t.header[0] != "id")
    throw std::runtime_error(path.string() + ": unexpected header");
  const auto m = static_cast<Eigen::Index>((t.header.size() - 1) / 2);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (t.header[1 + 2 * k] != "re_" + std::to_string(k) ||
        t.header[2 + 2 * k] != "im_" + std::to_string(k))
      throw std::runtime_error(path.string() + ": unexpected header");
  }
  fill_provenance(t, provenance);
  CsiMatrix csi(static_cast<Eigen::Index>(t.rows.size()), m);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (Eigen::Index k = 0; k < m; ++k)
      csi(static_cast<Eigen::Index>(r), k) = {parse_double(t.rows[r][1 + 2 * k]),
                                              parse_double(t.rows[r][2 + 2 * k])};
  return csi;
}

CsiMatrix read_csi(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  std::array<char, 4> head{};
  in.read(head.data(), 4);
  if (in && head == kCsiMagic) return read_csi_binary(path);
  return read_csi_csv(path);
}

void write_features(const fs::path& path, const FeatureSet& features, const Provenance& provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "# scaling=" << to_string(features.mode) << '\n';
  if (features.mode == ScalingMode::Standardize) {
    auto row = [&](const char* name, const Eigen::RowVectorXd& v) {
      out << "# " << name << '=';
      for (Eigen::Index d = 0; d < v.size(); ++d) out << (d ? "," : "") << format_double(v(d));
      out << '\n';
    };
    row("mean", features.mean);
    row("stddev", features.stddev);
  }
  out << "id";
  for (Eigen::Index d = 0; d < features.dim(); ++d) out << ",f_" << d;
  out << '\n';
  for (Eigen::Index n = 0; n < features.size(); ++n) {
    out << n;
    for (Eigen::Index d = 0; d < features.dim(); ++d) out << ',' << format_double(features.values(n, d));
    out << '\n';
  }
}

FeatureSet read_features(const fs::path& path, Provenance* provenance) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "id")
    throw std::runtime_error(path.string() + ": unexpected header");
  for (std::size_t d = 1; d < t.header.size(); ++d)
    if (t.header[d] != "f_" + std::to_string(d - 1))
      throw std::runtime_error(path.string() + ": unexpected header");
  fill_provenance(t, provenance);
  FeatureSet fs;
  if (const auto it = t.comments.find("scaling"); it != t.comments.end())
    fs.mode = parse_scaling_mode(it->second);
  fs.values.resize(static_cast<Eigen::Index>(t.rows.size()),
                   static_cast<Eigen::Index>(t.header.size() - 1));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t d = 1; d < t.header.size(); ++d)
      fs.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d - 1)) =
          parse_double(t.rows[r][d]);
  if (fs.mode == ScalingMode::Standardize) {
    auto row = [&](const char* name) {
      const auto it = t.comments.find(name);
      if (it == t.comments.end()) throw std::runtime_error(path.string() + ": missing " + name);
      const auto parts = split(it->second, ',');
      if (static_cast<Eigen::Index>(parts.size()) != fs.dim())
        throw std::runtime_error(path.string() + ": " + name + " has the wrong length");
      Eigen::RowVectorXd v(fs.dim());
      for (Eigen::Index d = 0; d < fs.dim(); ++d) v(d) = parse_double(trim(parts[static_cast<std::size_t>(d)]));
      return v;
    };
    fs.mean = row("mean");
    fs.stddev = row("stddev");
  }
  return fs;
}

void write_constraints(const fs::path& path, const ConstraintSet& set, const Provenance& provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "kind,i,j,anchor_u,anchor_v,d,weight\n";
  for (const Constraint& c : set.items) {
    out << to_string(c.kind) << ',' << c.i << ',';
    if (c.j) out << *c.j;
    out << ',';
    if (c.anchor) {
      if (c.anchor->size() != 2)
        throw std::invalid_argument("constraints.csv stores two-dimensional anchors only");
      out << format_double((*c.anchor)(0)) << ',' << format_double((*c.anchor)(1));
    } else {
      out << ',';
    }
    out << ',' << format_double(c.target) << ',' << format_double(c.weight) << '\n';
  }
}

ConstraintSet read_constraints(const fs::path& path, Provenance* provenance) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"kind", "i", "j", "anchor_u", "anchor_v", "d", "weight"}, path);
  fill_provenance(t, provenance);
  ConstraintSet set;
  for (const auto& row : t.rows) {
    Constraint c;
    c.kind = parse_constraint_kind(row[0]);
    c.i = parse_index(row[1]);
    if (!row[2].empty()) c.j = parse_index(row[2]);
    if (!row[3].empty() || !row[4].empty())
      c.anchor = Eigen::Vector2d(parse_double(row[3]), parse_double(row[4]));
    c.target = parse_double(row[5]);
    c.weight = parse_double(row[6]);
    c.validate();
    set.items.push_back(std::move(c));
  }
  return set;
}

void write_chart(const fs::path& path, const Eigen::MatrixXd& embedding, const UePlacement& placement,
                 const Provenance& provenance) {
  if (embedding.cols() != 2) throw std::invalid_argument("chart embedding must be N x 2");
  if (static_cast<std::size_t>(embedding.rows()) != placement.size())
    throw std::invalid_argument("chart embedding is not aligned with the placement");
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "id,u,v,true_x,true_y,is_anchor,traj_order\n";
  for (std::size_t n = 0; n < placement.size(); ++n) {
    const auto r = static_cast<Eigen::Index>(n);
    out << n << ',' << format_double(embedding(r, 0)) << ',' << format_double(embedding(r, 1)) << ','
        << format_double(placement.positions[n].x()) << ','
        << format_double(placement.positions[n].y()) << ',' << (placement.is_anchor(n) ? 1 : 0)
        << ',' << placement.trajectory_order(n) << '\n';
  }
}

Chart read_chart(const fs::path& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"id", "u", "v", "true_x", "true_y", "is_anchor", "traj_order"}, path);
  Chart chart;
  fill_provenance(t, &chart.provenance);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  chart.embedding.resize(n, 2);
  chart.true_xy.resize(n, 2);
  std::vector<std::pair<long, std::size_t>> traj;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (parse_index(row[0]) != r) throw std::runtime_error(path.string() + ": ids must be 0..N-1 in order");
    const auto i = static_cast<Eigen::Index>(r);
    chart.embedding(i, 0) = parse_double(row[1]);
    chart.embedding(i, 1) = parse_double(row[2]);
    chart.true_xy(i, 0) = parse_double(row[3]);
    chart.true_xy(i, 1) = parse_double(row[4]);
    if (parse_flag(row[5])) chart.anchor_indices.push_back(r);
    if (const long order = parse_long(row[6]); order >= 0) traj.emplace_back(order, r);
  }
  std::sort(traj.begin(), traj.end());
  for (const auto& [order, id] : traj) chart.trajectory_indices.push_back(id);
  return chart;
}

void write_report(const fs::path& path, std::span<const MetricsReport> reports,
                  const Provenance& provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "metric,K,value\n";
  for (const MetricsReport& r : reports) {
    const std::string suffix = r.reference == ReferenceSpace::FeatureSpace ? "_feature" : "";
    for (const auto& s : r.scores) out << "TW" << suffix << ',' << s.k << ',' << format_double(s.trustworthiness) << '\n';
    for (const auto& s : r.scores) out << "CT" << suffix << ',' << s.k << ',' << format_double(s.continuity) << '\n';
    out << "KS" << suffix << ",," << format_double(r.kruskal_stress) << '\n';
  }
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  out << "reference = " << to_string(report.reference) << '\n';
  out << "N = " << report.n << '\n';
  for (const auto& s : report.scores) out << "TW(" << s.k << ") = " << format_double(s.trustworthiness) << '\n';
  for (const auto& s : report.scores) out << "CT(" << s.k << ") = " << format_double(s.continuity) << '\n';
  out << "KS = " << format_double(report.kruskal_stress) << '\n';
  return out.str();
}

void write_network(const fs::path& path, const Network& net) {
  net.validate();
  std::ofstream out = open_out(path, true);
  out.write(kNetMagic.data(), 4);
  put_le<std::uint16_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.encoder.size() + net.decoder.size()));
  for (const auto* stack : {&net.encoder, &net.decoder}) {
    for (const DenseLayer& l : *stack) {
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weights.rows()));
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weights.cols()));
      put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) put_le<double>(out, l.weights(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_le<double>(out, l.bias(r));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Network read_network(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  expect_magic(in, kNetMagic, path);
  const auto count = get_le<std::uint32_t>(in);
  std::vector<DenseLayer> layers(count);
  for (auto& l : layers) {
    const auto rows = get_le<std::uint32_t>(in);
    const auto cols = get_le<std::uint32_t>(in);
    const auto tag = get_le<std::uint8_t>(in);
    if (tag > static_cast<std::uint8_t>(Activation::Tanh))
      throw std::runtime_error(path.string() + ": unknown activation tag");
    l.activation = static_cast<Activation>(tag);
    l.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = get_le<double>(in);
    l.bias.resize(rows);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get_le<double>(in);
  }
  if (layers.size() < 2) throw std::runtime_error(path.string() + ": need at least two layers");
  // The encoder ends at the first layer with the narrowest output.
  std::size_t bottleneck = 0;
  for (std::size_t l = 1; l + 1 < layers.size(); ++l)
    if (layers[l].out_width() < layers[bottleneck].out_width()) bottleneck = l;
  Network net;
  net.encoder.assign(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(bottleneck + 1));
  net.decoder.assign(layers.begin() + static_cast<std::ptrdiff_t>(bottleneck + 1), layers.end());
  net.validate();
  return net;
}

}  // namespace ccae::io
