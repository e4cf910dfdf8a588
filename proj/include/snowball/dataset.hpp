#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snowball/rng.hpp"

namespace snowball {

/// Labeled rows of fixed width. Features are stored row-major.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, int n_classes);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  int n_classes() const noexcept { return n_classes_; }

  std::span<const double> row(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {features_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const { return labels_[i]; }
  void set_label(std::size_t i, int label);
  bool triggered(std::size_t i) const { return triggered_[i] != 0; }
  void set_triggered(std::size_t i, bool v) { triggered_[i] = v ? 1 : 0; }

  void push_back(std::span<const double> features, int label, bool triggered = false);
  void reserve(std::size_t n);

  // Rows at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> class_counts() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t dim_ = 0;
  int n_classes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<unsigned char> triggered_;
};

enum class PartitionScheme { dirichlet_label_skew, feature_shift };

struct PartitionSpec {
  PartitionScheme scheme = PartitionScheme::dirichlet_label_skew;
  double alpha = 0.5;         // Dirichlet concentration
  std::size_t n_clients = 1;
  double shift_sigma = 0.0;   // per-client feature offset stddev (feature_shift only)
  int max_retries = 100;
};

enum class TriggerMode { cba, dba };

struct TriggerSpec {
  TriggerMode mode = TriggerMode::cba;
  std::vector<std::size_t> slot_indices;
  double pattern_value = 3.0;
  std::size_t n_parts = 3;
  int target_class = 0;
  double pdr = 0.3;

  // The trailing `n_slots` features of a `dim`-wide row.
  static TriggerSpec trailing(std::size_t dim, std::size_t n_slots, TriggerMode mode, double pattern_value,
                              int target_class, double pdr);

  // Slots belonging to DBA part `part` (contiguous, even split).
  std::vector<std::size_t> part_slots(std::size_t part) const;
  void validate(std::size_t dim) const;
};

// Class c ~ N(mu_c, I) with mu_c = (class_sep / sqrt 2) e_c, so every pair of
// class means is exactly class_sep apart. Labels are balanced up to one row
// and rows are shuffled.
Dataset generate_synthetic(std::size_t n_samples, std::size_t dim, int n_classes, double class_sep, RngStream& rng);

std::vector<Dataset> dirichlet_partition(const Dataset& ds, const PartitionSpec& spec, RngStream& rng);
std::vector<Dataset> feature_shift_partition(const Dataset& ds, const PartitionSpec& spec, RngStream& rng);
std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& spec, RngStream& rng);

// Poisons floor(pdr * n) uniformly chosen rows: trigger slots (all of them for
// CBA, only `attacker_part` for DBA) are overwritten, the label becomes the
// target class and the row is flagged.
Dataset inject_trigger(const Dataset& ds, const TriggerSpec& spec, std::optional<std::size_t> attacker_part,
                       RngStream& rng);

// Writes the trigger slots of one row in place.
void apply_trigger(std::span<double> row, std::span<const std::size_t> slots, double pattern_value);

// Backdoor test set: the full trigger on every row, labels untouched. With
// `exclude_target_class`, rows whose true label is already the target are dropped.
Dataset make_triggered_test_set(const Dataset& clean, const TriggerSpec& spec, bool exclude_target_class);

// Train/test split by shuffled order; the first floor(train_fraction * n)
// shuffled rows form the training set.
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, RngStream& rng);

// CSV with a header row. Every non-label column is a feature; labels are
// remapped to [0, O) in ascending order of their numeric value.
Dataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column);
void write_csv_dataset(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column = "label");

}  // namespace snowball
