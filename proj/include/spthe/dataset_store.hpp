#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spthe/linalg.hpp"
#include "spthe/signal_model.hpp"

namespace spthe {

/// Data matrices with lambda_min above this are sufficiently rich.
inline constexpr double kRichnessTolerance = 1e-9;
/// Relative max-norm asymmetry above this marks a data matrix as corrupted.
inline constexpr double kSymmetryTolerance = 1e-10;

struct Sample {
  double t = 0.0;
  Vector phi;
  double psi = 0.0;
};

enum class DataClass { SufficientlyRich, InsufficientlyRich, Corrupted };

struct Classification {
  DataClass kind = DataClass::InsufficientlyRich;
  double alpha = 0.0;  // lambda_min of the data matrix; meaningful for SR only

  friend bool operator==(const Classification&, const Classification&) = default;
};

std::string to_string(DataClass kind);
std::optional<DataClass> parse_data_class(const std::string& text);

/// Recorded dataset (Phi_q, Psi_q) for one mode q.
class Dataset {
 public:
  Dataset(int id, std::vector<Sample> samples, Matrix data_matrix, Vector data_vector);

  int id() const { return id_; }
  std::size_t dimension() const { return static_cast<std::size_t>(data_vector_.size()); }
  const std::vector<Sample>& samples() const { return samples_; }
  const Matrix& data_matrix() const { return data_matrix_; }
  const Vector& data_vector() const { return data_vector_; }
  const Classification& classification() const { return classification_; }

 private:
  int id_;
  std::vector<Sample> samples_;
  Matrix data_matrix_;
  Vector data_vector_;
  Classification classification_;
};

/// Records phi and psi at `times`. `noise`, when given, replaces d(t_k) in the
/// recorded measurements.
Dataset build_dataset(int id, std::span<const double> times, const TrueSystem& sys,
                      const RegressorModel& reg,
                      std::optional<std::span<const double>> noise = std::nullopt);

/// Dataset with (Phi, Psi) given directly and no samples.
Dataset make_dataset(int id, Matrix data_matrix, Vector data_vector);

/// lambda_min(Phi_q). Throws AsymmetricMatrix when Phi_q is not symmetric.
double richness(const Dataset& ds);

Classification classify(const Matrix& data_matrix);
Classification classify(const Dataset& ds);

/// Replaces Phi_q (and optionally Psi_q); samples are kept for provenance.
Dataset inject_corruption(const Dataset& ds, const Matrix& phi_override,
                          const std::optional<Vector>& psi_override = std::nullopt);

/// Phi_q theta - Psi_q.
Vector residual(const Dataset& ds, const Vector& theta);

/// |Phi_q theta* - Psi_q|.
double corruption_offset(const Dataset& ds, const Vector& theta_star);

/// psi_k - phi_k^T theta* per sample, in recording order.
Vector recorded_noise(const Dataset& ds, const Vector& theta_star);

/// Sum over samples of |phi_k|.
double regressor_mass(const Dataset& ds);

struct Partition {
  std::set<int> sufficient;
  std::set<int> insufficient;
  std::set<int> corrupted;

  friend bool operator==(const Partition&, const Partition&) = default;
};

class DatasetRegistry {
 public:
  DatasetRegistry() = default;
  explicit DatasetRegistry(std::vector<Dataset> datasets);

  /// Throws Validation on duplicate ids or a dimension clash.
  void add(Dataset ds);

  const Dataset& at(int id) const;
  bool contains(int id) const { return datasets_.count(id) != 0; }
  std::vector<int> ids() const;
  std::size_t size() const { return datasets_.size(); }
  bool empty() const { return datasets_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const Partition& partition() const { return partition_; }

  /// Registry restricted to `ids`.
  DatasetRegistry subset(const std::vector<int>& ids) const;

 private:
  std::map<int, Dataset> datasets_;
  Partition partition_;
  std::size_t dimension_ = 0;
};

/// Four datasets recorded from `model`: two SR, one IR, and one whose data
/// matrix is overwritten by a non-symmetric matrix.
DatasetRegistry section5_registry(const SignalModel& model);

/// The corrupted data matrix used for the fourth dataset.
Matrix section5_corrupt_matrix();

// JSON persistence, schema "spthe-registry" version 1 (see README).
std::string registry_to_json(const DatasetRegistry& registry);
DatasetRegistry registry_from_json(const std::string& text);
void save_registry(const DatasetRegistry& registry, const std::filesystem::path& path);
DatasetRegistry load_registry(const std::filesystem::path& path);

}  // namespace spthe
