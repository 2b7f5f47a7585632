#include "spthe/dataset_store.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "spthe/errors.hpp"

namespace spthe {

using nlohmann::json;

std::string to_string(DataClass kind) {
  switch (kind) {
    case DataClass::SufficientlyRich: return "SR";
    case DataClass::InsufficientlyRich: return "IR";
    case DataClass::Corrupted: return "Corrupted";
  }
  return "?";
}

std::optional<DataClass> parse_data_class(const std::string& text) {
  if (text == "SR") return DataClass::SufficientlyRich;
  if (text == "IR") return DataClass::InsufficientlyRich;
  if (text == "Corrupted") return DataClass::Corrupted;
  return std::nullopt;
}

Dataset::Dataset(int id, std::vector<Sample> samples, Matrix data_matrix, Vector data_vector)
    : id_(id),
      samples_(std::move(samples)),
      data_matrix_(std::move(data_matrix)),
      data_vector_(std::move(data_vector)) {
  if (id_ < 1) throw Error(ErrorKind::Validation, "dataset ids start at 1");
  const auto n = data_vector_.size();
  if (n == 0 || data_matrix_.rows() != n || data_matrix_.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "dataset: data matrix and vector sizes disagree");
  }
  for (const auto& s : samples_) {
    if (s.phi.size() != n) throw Error(ErrorKind::DimensionMismatch, "dataset: sample dimension");
  }
  classification_ = classify(data_matrix_);
}

Dataset build_dataset(int id, std::span<const double> times, const TrueSystem& sys,
                      const RegressorModel& reg, std::optional<std::span<const double>> noise) {
  if (times.empty()) throw Error(ErrorKind::Validation, "build_dataset: no recording times");
  if (noise && noise->size() != times.size()) {
    throw Error(ErrorKind::DimensionMismatch, "build_dataset: noise and times differ in length");
  }
  const auto n = static_cast<Eigen::Index>(reg.dimension);
  if (sys.theta_star.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "build_dataset: theta* and regressor differ");
  }
  std::vector<Sample> samples;
  samples.reserve(times.size());
  Matrix phi_sum = Matrix::Zero(n, n);
  Vector psi_sum = Vector::Zero(n);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    Sample s{t, reg(t), 0.0};
    const double d = noise ? (*noise)[k] : sys.disturbance(t);
    s.psi = s.phi.dot(sys.theta_star) + d;
    phi_sum += s.phi * s.phi.transpose();
    psi_sum += s.phi * s.psi;
    samples.push_back(std::move(s));
  }
  return Dataset(id, std::move(samples), std::move(phi_sum), std::move(psi_sum));
}

Dataset make_dataset(int id, Matrix data_matrix, Vector data_vector) {
  return Dataset(id, {}, std::move(data_matrix), std::move(data_vector));
}

double richness(const Dataset& ds) {
  if (symmetry_defect(ds.data_matrix()) > kSymmetryTolerance) {
    throw Error(ErrorKind::AsymmetricMatrix,
                "richness: data matrix of dataset " + std::to_string(ds.id()) + " is not symmetric");
  }
  return min_eigenvalue(ds.data_matrix());
}

Classification classify(const Matrix& data_matrix) {
  if (symmetry_defect(data_matrix) > kSymmetryTolerance) {
    return {DataClass::Corrupted, 0.0};
  }
  const double lmin = min_eigenvalue(data_matrix);
  if (lmin > kRichnessTolerance) return {DataClass::SufficientlyRich, lmin};
  // Negative eigenvalues within round-off of zero still count as IR.
  const double scale = std::max(1.0, data_matrix.cwiseAbs().maxCoeff());
  if (lmin < -kRichnessTolerance * scale) return {DataClass::Corrupted, 0.0};
  return {DataClass::InsufficientlyRich, 0.0};
}

Classification classify(const Dataset& ds) { return classify(ds.data_matrix()); }

Dataset inject_corruption(const Dataset& ds, const Matrix& phi_override,
                          const std::optional<Vector>& psi_override) {
  const auto n = static_cast<Eigen::Index>(ds.dimension());
  if (phi_override.rows() != n || phi_override.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "inject_corruption: data matrix size");
  }
  if (psi_override && psi_override->size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "inject_corruption: data vector size");
  }
  return Dataset(ds.id(), ds.samples(), phi_override, psi_override ? *psi_override : ds.data_vector());
}

Vector residual(const Dataset& ds, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != ds.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "residual: theta has the wrong dimension");
  }
  return ds.data_matrix() * theta - ds.data_vector();
}

double corruption_offset(const Dataset& ds, const Vector& theta_star) {
  return residual(ds, theta_star).norm();
}

Vector recorded_noise(const Dataset& ds, const Vector& theta_star) {
  Vector out(static_cast<Eigen::Index>(ds.samples().size()));
  for (std::size_t k = 0; k < ds.samples().size(); ++k) {
    const auto& s = ds.samples()[k];
    out(static_cast<Eigen::Index>(k)) = s.psi - s.phi.dot(theta_star);
  }
  return out;
}

double regressor_mass(const Dataset& ds) {
  double total = 0.0;
  for (const auto& s : ds.samples()) total += s.phi.norm();
  return total;
}

DatasetRegistry::DatasetRegistry(std::vector<Dataset> datasets) {
  for (auto& ds : datasets) add(std::move(ds));
}

void DatasetRegistry::add(Dataset ds) {
  if (contains(ds.id())) {
    throw Error(ErrorKind::Validation, "duplicate dataset id " + std::to_string(ds.id()));
  }
  if (dimension_ != 0 && ds.dimension() != dimension_) {
    throw Error(ErrorKind::DimensionMismatch, "registry datasets must share one dimension");
  }
  dimension_ = ds.dimension();
  switch (ds.classification().kind) {
    case DataClass::SufficientlyRich: partition_.sufficient.insert(ds.id()); break;
    case DataClass::InsufficientlyRich: partition_.insufficient.insert(ds.id()); break;
    case DataClass::Corrupted: partition_.corrupted.insert(ds.id()); break;
  }
  const int id = ds.id();
  datasets_.emplace(id, std::move(ds));
}

const Dataset& DatasetRegistry::at(int id) const {
  auto it = datasets_.find(id);
  if (it == datasets_.end()) {
    throw Error(ErrorKind::Validation, "unknown dataset id " + std::to_string(id));
  }
  return it->second;
}

std::vector<int> DatasetRegistry::ids() const {
  std::vector<int> out;
  for (const auto& [id, ds] : datasets_) out.push_back(id);
  return out;
}

DatasetRegistry DatasetRegistry::subset(const std::vector<int>& ids) const {
  DatasetRegistry out;
  for (int id : ids) out.add(at(id));
  return out;
}

Matrix section5_corrupt_matrix() {
  Matrix m(3, 3);
  m << 0.6, 0.3, 0.4,
       0.3, 1.0, 0.3,
       0.7, 0.5, 0.4;
  return m;
}

DatasetRegistry section5_registry(const SignalModel& model) {
  using std::numbers::pi;
  const std::vector<double> t1{0.0, -pi / 2, -3 * pi / 2};
  const std::vector<double> t2{0.0, -pi / 4, -7 * pi / 4};
  const std::vector<double> t3{0.0, -pi, -2 * pi};
  const std::vector<double> t4{0.0, -pi / 7, -pi / 5};
  const auto& sys = model.system;
  const auto& reg = model.regressor;

  DatasetRegistry registry;
  registry.add(build_dataset(1, t1, sys, reg));
  registry.add(build_dataset(2, t2, sys, reg));
  registry.add(build_dataset(3, t3, sys, reg));
  registry.add(inject_corruption(build_dataset(4, t4, sys, reg), section5_corrupt_matrix()));
  return registry;
}

// ---- persistence -----------------------------------------------------------

namespace {

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) out.push_back(m(i, k));
  return out;
}

Vector vector_from(const json& j, Eigen::Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw Error(ErrorKind::Validation, where + ": expected an array of " + std::to_string(n) + " numbers");
  }
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

Matrix matrix_from(const json& j, Eigen::Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n * n) {
    throw Error(ErrorKind::Validation, where + ": expected " + std::to_string(n * n) + " numbers (row-major)");
  }
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = j.at(static_cast<std::size_t>(i * n + k)).get<double>();
  return m;
}

std::set<int> id_set(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::Validation, where + ": expected an array of ids");
  std::set<int> out;
  for (const auto& v : j) out.insert(v.get<int>());
  return out;
}

}  // namespace

std::string registry_to_json(const DatasetRegistry& registry) {
  json doc;
  doc["format"] = "spthe-registry";
  doc["version"] = 1;
  doc["dimension"] = registry.dimension();
  json sets = json::array();
  for (int id : registry.ids()) {
    const auto& ds = registry.at(id);
    json entry;
    entry["id"] = id;
    entry["classification"] = to_string(ds.classification().kind);
    entry["alpha"] = ds.classification().alpha;
    json samples = json::array();
    for (const auto& s : ds.samples()) {
      samples.push_back({{"t", s.t}, {"phi", vector_json(s.phi)}, {"psi", s.psi}});
    }
    entry["samples"] = std::move(samples);
    entry["data_matrix"] = matrix_json(ds.data_matrix());
    entry["data_vector"] = vector_json(ds.data_vector());
    sets.push_back(std::move(entry));
  }
  doc["datasets"] = std::move(sets);
  const auto& p = registry.partition();
  doc["partition"] = {{"sufficient", p.sufficient}, {"insufficient", p.insufficient}, {"corrupted", p.corrupted}};
  return doc.dump(2);
}

DatasetRegistry registry_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Validation, std::string("registry: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "spthe-registry") {
      throw Error(ErrorKind::Validation, "registry: missing \"format\": \"spthe-registry\"");
    }
    if (doc.value("version", 0) != 1) throw Error(ErrorKind::Validation, "registry: unsupported version");
    const auto n = doc.at("dimension").get<Eigen::Index>();
    if (n < 1) throw Error(ErrorKind::Validation, "registry: dimension must be positive");

    DatasetRegistry registry;
    for (const auto& entry : doc.at("datasets")) {
      const int id = entry.at("id").get<int>();
      const std::string where = "dataset " + std::to_string(id);
      std::vector<Sample> samples;
      for (const auto& s : entry.value("samples", json::array())) {
        samples.push_back({s.at("t").get<double>(), vector_from(s.at("phi"), n, where + " sample phi"),
                           s.at("psi").get<double>()});
      }
      Dataset ds(id, std::move(samples), matrix_from(entry.at("data_matrix"), n, where + " data_matrix"),
                 vector_from(entry.at("data_vector"), n, where + " data_vector"));
      if (entry.contains("classification")) {
        const auto declared = parse_data_class(entry.at("classification").get<std::string>());
        if (!declared || *declared != ds.classification().kind) {
          throw Error(ErrorKind::Validation, where + ": declared classification does not match its data matrix");
        }
      }
      registry.add(std::move(ds));
    }
    if (doc.contains("partition")) {
      const auto& p = doc.at("partition");
      Partition declared{id_set(p.at("sufficient"), "partition.sufficient"),
                         id_set(p.at("insufficient"), "partition.insufficient"),
                         id_set(p.at("corrupted"), "partition.corrupted")};
      if (!(declared == registry.partition())) {
        throw Error(ErrorKind::Validation, "registry: declared partition does not match dataset classifications");
      }
    }
    return registry;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("registry: ") + e.what());
  }
}

void save_registry(const DatasetRegistry& registry, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << registry_to_json(registry) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

DatasetRegistry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return registry_from_json(buffer.str());
}

}  // namespace spthe
