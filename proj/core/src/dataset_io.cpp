#include "bvs/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bvs {

namespace {

std::string header_line(std::size_t p, std::size_t q, std::size_t r) {
  std::string h = "y";
  for (std::size_t j = 1; j <= p; ++j) h += ",x_" + std::to_string(j);
  for (std::size_t k = 1; k <= q; ++k) h += ",u_" + std::to_string(k);
  for (std::size_t l = 1; l <= r; ++l) h += ",z_" + std::to_string(l);
  return h;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct Sidecar {
  std::size_t p = 0, q = 0, r = 0;
  std::vector<int> group_map;  // 0-based
};

Sidecar read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("missing dataset sidecar '" + path.string() + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("sidecar '" + path.string() + "' is not valid JSON: " + e.what());
  }
  Sidecar s;
  try {
    s.p = j.at("p").get<std::size_t>();
    s.q = j.at("q").get<std::size_t>();
    s.r = j.at("r").get<std::size_t>();
    const auto gm = j.at("group_map").get<std::vector<long long>>();
    if (gm.size() != s.p) {
      throw InputError("sidecar group_map has " + std::to_string(gm.size()) +
                       " entries, expected p = " + std::to_string(s.p));
    }
    for (std::size_t i = 0; i < gm.size(); ++i) {
      if (gm[i] < 1 || gm[i] > static_cast<long long>(s.q)) {
        throw InputError("sidecar group_map[" + std::to_string(i) + "] = " +
                         std::to_string(gm[i]) + " is outside 1.." + std::to_string(s.q));
      }
      s.group_map.push_back(static_cast<int>(gm[i] - 1));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("sidecar '" + path.string() + "' is malformed: " + e.what());
  }
  return s;
}

}  // namespace

DatasetParseError::DatasetParseError(const std::string& file, std::size_t line,
                                     std::size_t column, const std::string& message)
    : InputError(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                 message),
      line_(line),
      column_(column) {}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_dataset(const Dataset& data, const std::filesystem::path& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw InputError("cannot open '" + csv_path.string() + "' for writing");
  csv << header_line(data.p(), data.q(), data.r()) << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data.n()); ++i) {
    line.clear();
    line += data.y()(i) > 0.5 ? '1' : '0';
    for (Eigen::Index c = 0; c < data.x().cols(); ++c) {
      line += ',';
      append_double(line, data.x()(i, c));
    }
    for (Eigen::Index c = 0; c < data.u().cols(); ++c) {
      line += ',';
      append_double(line, data.u()(i, c));
    }
    for (Eigen::Index c = 0; c < data.z().cols(); ++c) {
      line += ',';
      append_double(line, data.z()(i, c));
    }
    line += '\n';
    csv << line;
  }
  if (!csv) throw InputError("failed writing '" + csv_path.string() + "'");

  nlohmann::json side;
  side["p"] = data.p();
  side["q"] = data.q();
  side["r"] = data.r();
  std::vector<int> gm;
  for (int g : data.group_map()) gm.push_back(g + 1);
  side["group_map"] = gm;
  std::ofstream js(sidecar_path(csv_path));
  if (!js) throw InputError("cannot open sidecar for writing");
  js << side.dump() << '\n';
}

Dataset read_dataset(const std::filesystem::path& csv_path) {
  const auto side = read_sidecar(sidecar_path(csv_path));
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset '" + csv_path.string() + "'");
  const std::string file = csv_path.string();

  std::string line;
  if (!std::getline(in, line)) throw DatasetParseError(file, 1, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto expected_header = header_line(side.p, side.q, side.r);
  if (line != expected_header) {
    const auto got = split(line);
    const auto want = split(expected_header);
    std::size_t col = 0;
    while (col < got.size() && col < want.size() && got[col] == want[col]) ++col;
    throw DatasetParseError(file, 1, col + 1,
                            "header does not match sidecar dimensions (expected '" +
                                expected_header.substr(0, 80) + "...')");
  }

  const std::size_t width = 1 + side.p + side.q + side.r;
  std::vector<double> values;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      throw DatasetParseError(file, line_no, std::min(fields.size(), width) + 1,
                              "row has " + std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      const auto f = fields[c];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || f.empty()) {
        throw DatasetParseError(file, line_no, c + 1,
                                "cannot parse '" + std::string(f) + "' as a number");
      }
      if (c == 0) {
        if (v != 0.0 && v != 1.0) {
          throw DatasetParseError(file, line_no, 1, "response must be 0 or 1");
        }
        ys.push_back(v);
      } else {
        values.push_back(v);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(ys.size());
  if (n == 0) throw DatasetParseError(file, line_no, 1, "dataset has no rows");

  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(side.p));
  Eigen::MatrixXd u(n, static_cast<Eigen::Index>(side.q));
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(side.r));
  const std::size_t stride = width - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* row = values.data() + static_cast<std::size_t>(i) * stride;
    for (std::size_t c = 0; c < side.p; ++c) x(i, static_cast<Eigen::Index>(c)) = row[c];
    for (std::size_t c = 0; c < side.q; ++c) u(i, static_cast<Eigen::Index>(c)) = row[side.p + c];
    for (std::size_t c = 0; c < side.r; ++c) {
      z(i, static_cast<Eigen::Index>(c)) = row[side.p + side.q + c];
    }
  }
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  return Dataset(std::move(y), std::move(x), std::move(u), std::move(z), side.group_map);
}

}  // namespace bvs
