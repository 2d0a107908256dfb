#include "icssl/episode_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace icssl {

using nlohmann::json;

json spec_to_json(const ManifoldSpec& spec) {
  json j;
  j["family"] = std::string(family_name(spec.family));
  if (spec.family == Family::Cylinder) j["radius"] = spec.radius;
  if (spec.cone_alpha) j["cone_alpha"] = *spec.cone_alpha;
  if (spec.threshold) j["threshold"] = *spec.threshold;
  if (spec.family == Family::Product) {
    j["factors"] = json::array();
    for (const auto& f : spec.factors) j["factors"].push_back(spec_to_json(f));
  }
  return j;
}

ManifoldSpec spec_from_json(const json& j) {
  if (j.is_string()) {
    ManifoldSpec s;
    s.family = parse_family(j.get<std::string>());
    return s;
  }
  ManifoldSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  if (j.contains("radius")) s.radius = j["radius"].get<double>();
  if (j.contains("cone_alpha")) s.cone_alpha = j["cone_alpha"].get<double>();
  if (j.contains("threshold")) s.threshold = j["threshold"].get<double>();
  if (j.contains("factors")) {
    for (const auto& f : j["factors"]) s.factors.push_back(spec_from_json(f));
  }
  s.validate();
  return s;
}

json episode_to_json(const Episode& ep) {
  json j;
  j["spec"] = spec_to_json(ep.spec);
  j["seed"] = ep.seed;
  j["n"] = ep.size();
  j["d"] = ep.points.cols();
  j["m"] = ep.labeled_count;
  j["C"] = ep.num_classes;
  j["center"] = ep.center;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(ep.points.size()));
  for (Eigen::Index i = 0; i < ep.points.rows(); ++i) {
    for (Eigen::Index k = 0; k < ep.points.cols(); ++k) flat.push_back(ep.points(i, k));
  }
  j["points"] = std::move(flat);
  j["labels"] = ep.labels;
  j["true_labels"] = ep.true_labels;
  return j;
}

Episode episode_from_json(const json& j) {
  Episode ep;
  ep.spec = spec_from_json(j.at("spec"));
  ep.seed = j.at("seed").get<std::uint64_t>();
  const auto n = j.at("n").get<std::size_t>();
  const auto d = j.at("d").get<std::size_t>();
  ep.labeled_count = j.at("m").get<std::size_t>();
  ep.num_classes = j.at("C").get<int>();
  ep.center = j.at("center").get<std::size_t>();
  const auto flat = j.at("points").get<std::vector<double>>();
  if (flat.size() != n * d) throw std::invalid_argument("points: expected n*d values");
  ep.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      ep.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = flat[i * d + k];
    }
  }
  ep.labels = j.at("labels").get<std::vector<int>>();
  ep.true_labels = j.at("true_labels").get<std::vector<int>>();
  if (ep.labels.size() != n || ep.true_labels.size() != n) {
    throw std::invalid_argument("labels: length must equal n");
  }
  std::size_t revealed = 0;
  for (int y : ep.labels) {
    if (y == kUnlabeled) continue;
    if (y < 0 || y >= ep.num_classes) throw std::invalid_argument("labels: entry outside [0, C)");
    ++revealed;
  }
  if (revealed != ep.labeled_count) throw std::invalid_argument("m: does not match revealed labels");
  return ep;
}

void write_episode(const Episode& ep, const std::filesystem::path& path) {
  write_file_atomic(path, episode_to_json(ep).dump(1) + "\n");
}

Episode read_episode(const std::filesystem::path& path) {
  return episode_from_json(json::parse(read_file(path)));
}

Episode read_point_cloud_csv(const std::filesystem::path& path, int num_classes) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file");

  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "label") {
    throw std::invalid_argument("csv: header must be x0..x{d-1},label");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k] != "x" + std::to_string(k)) throw std::invalid_argument("csv: bad column " + header[k]);
  }

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col < d) {
        values.push_back(std::stod(cell));
      } else {
        labels.push_back(std::stoi(cell));
      }
      ++col;
    }
    if (col != d + 1) throw std::invalid_argument("csv: row with wrong column count");
  }

  Episode ep;
  ep.spec = ManifoldSpec{};
  ep.num_classes = num_classes;
  const std::size_t n = labels.size();
  ep.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      ep.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = values[i * d + k];
    }
  }
  for (int& y : labels) {
    if (y == -1) {
      y = kUnlabeled;
    } else if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("csv: label outside [0, C) and not -1");
    } else {
      ++ep.labeled_count;
    }
  }
  ep.labels = labels;
  ep.true_labels = labels;
  return ep;
}

void write_point_cloud_csv(const Episode& ep, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index k = 0; k < ep.points.cols(); ++k) out << 'x' << k << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < ep.points.rows(); ++i) {
    for (Eigen::Index k = 0; k < ep.points.cols(); ++k) out << ep.points(i, k) << ',';
    out << ep.labels[static_cast<std::size_t>(i)] << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace icssl
