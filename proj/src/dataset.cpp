#include "snowball/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "snowball/error.hpp"

namespace snowball {

Dataset::Dataset(std::size_t dim, int n_classes) : dim_(dim), n_classes_(n_classes) {}

void Dataset::set_label(std::size_t i, int label) {
  if (label < 0 || label >= n_classes_) throw ParameterError("label " + std::to_string(label) + " out of range");
  labels_[i] = label;
}

void Dataset::push_back(std::span<const double> features, int label, bool triggered) {
  if (features.size() != dim_) throw ShapeError("dataset row has wrong width");
  if (label < 0 || label >= n_classes_) throw ParameterError("label " + std::to_string(label) + " out of range");
  features_.insert(features_.end(), features.begin(), features.end());
  labels_.push_back(label);
  triggered_.push_back(triggered ? 1 : 0);
}

void Dataset::reserve(std::size_t n) {
  features_.reserve(n * dim_);
  labels_.reserve(n);
  triggered_.reserve(n);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(dim_, n_classes_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(row(i), labels_.at(i), triggered_[i] != 0);
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
  for (int l : labels_) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

Dataset generate_synthetic(std::size_t n_samples, std::size_t dim, int n_classes, double class_sep, RngStream& rng) {
  if (n_classes < 2) throw ParameterError("need at least two classes");
  if (dim < static_cast<std::size_t>(n_classes))
    throw ParameterError("feature dimension " + std::to_string(dim) + " cannot hold " + std::to_string(n_classes) +
                         " separated class means");
  if (!(class_sep > 0.0)) throw ParameterError("class_sep must be positive");

  const double offset = class_sep / std::sqrt(2.0);
  std::vector<int> labels(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(n_classes));
  rng.shuffle(labels);

  Dataset ds(dim, n_classes);
  ds.reserve(n_samples);
  std::vector<double> x(dim);
  for (int label : labels) {
    for (auto& v : x) v = rng.normal();
    x[static_cast<std::size_t>(label)] += offset;
    ds.push_back(x, label);
  }
  return ds;
}

std::vector<Dataset> dirichlet_partition(const Dataset& ds, const PartitionSpec& spec, RngStream& rng) {
  if (spec.scheme != PartitionScheme::dirichlet_label_skew)
    throw ParameterError("dirichlet_partition called with a non-Dirichlet scheme");
  if (spec.n_clients == 0) throw ParameterError("partition needs at least one client");
  if (!(spec.alpha > 0.0)) throw ParameterError("Dirichlet alpha must be positive");
  if (spec.n_clients == 1) return {ds};

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes()));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.label(i))].push_back(i);

  const std::size_t n = spec.n_clients;
  for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
    std::vector<std::vector<std::size_t>> parts(n);
    for (auto members : by_class) {
      rng.shuffle(members);
      const auto p = rng.dirichlet(n, spec.alpha);
      double cumulative = 0.0;
      std::size_t begin = 0;
      for (std::size_t c = 0; c < n; ++c) {
        cumulative += p[c];
        std::size_t end = c + 1 == n ? members.size()
                                     : std::min(members.size(), static_cast<std::size_t>(cumulative * members.size()));
        end = std::max(end, begin);
        parts[c].insert(parts[c].end(), members.begin() + begin, members.begin() + end);
        begin = end;
      }
    }
    if (std::any_of(parts.begin(), parts.end(), [](const auto& v) { return v.empty(); })) continue;

    std::vector<Dataset> out;
    out.reserve(n);
    for (auto& idx : parts) {
      std::sort(idx.begin(), idx.end());
      out.push_back(ds.subset(idx));
    }
    return out;
  }
  throw ParameterError("Dirichlet partition left a client without samples after " +
                       std::to_string(spec.max_retries + 1) + " draws");
}

std::vector<Dataset> feature_shift_partition(const Dataset& ds, const PartitionSpec& spec, RngStream& rng) {
  if (spec.scheme != PartitionScheme::feature_shift)
    throw ParameterError("feature_shift_partition called with a non-feature-shift scheme");
  if (spec.n_clients == 0) throw ParameterError("partition needs at least one client");
  if (spec.n_clients > ds.size())
    throw ParameterError("cannot give " + std::to_string(spec.n_clients) + " clients a sample each from " +
                         std::to_string(ds.size()) + " rows");
  if (!(spec.shift_sigma >= 0.0)) throw ParameterError("shift_sigma must be non-negative");

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  const std::size_t n = spec.n_clients;
  const std::size_t base = ds.size() / n;
  const std::size_t extra = ds.size() % n;
  std::vector<Dataset> out;
  out.reserve(n);
  std::size_t begin = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    std::vector<std::size_t> idx(order.begin() + begin, order.begin() + begin + len);
    begin += len;
    std::sort(idx.begin(), idx.end());
    Dataset part = ds.subset(idx);

    auto shift_rng = rng.derive("client_shift", c);
    std::vector<double> eps(ds.dim());
    for (auto& e : eps) e = shift_rng.normal(0.0, spec.shift_sigma);
    for (std::size_t r = 0; r < part.size(); ++r) {
      auto row = part.row(r);
      for (std::size_t d = 0; d < row.size(); ++d) row[d] += eps[d];
    }
    out.push_back(std::move(part));
  }
  return out;
}

std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& spec, RngStream& rng) {
  return spec.scheme == PartitionScheme::dirichlet_label_skew ? dirichlet_partition(ds, spec, rng)
                                                              : feature_shift_partition(ds, spec, rng);
}

TriggerSpec TriggerSpec::trailing(std::size_t dim, std::size_t n_slots, TriggerMode mode, double pattern_value,
                                  int target_class, double pdr) {
  if (n_slots == 0 || n_slots > dim) throw ParameterError("trigger needs between 1 and dim slots");
  TriggerSpec t;
  t.mode = mode;
  for (std::size_t i = dim - n_slots; i < dim; ++i) t.slot_indices.push_back(i);
  t.pattern_value = pattern_value;
  t.target_class = target_class;
  t.pdr = pdr;
  return t;
}

std::vector<std::size_t> TriggerSpec::part_slots(std::size_t part) const {
  if (n_parts == 0 || part >= n_parts)
    throw ParameterError("trigger part " + std::to_string(part) + " outside [0, " + std::to_string(n_parts) + ")");
  const std::size_t per = slot_indices.size() / n_parts;
  return {slot_indices.begin() + static_cast<std::ptrdiff_t>(part * per),
          slot_indices.begin() + static_cast<std::ptrdiff_t>((part + 1) * per)};
}

void TriggerSpec::validate(std::size_t dim) const {
  if (slot_indices.empty()) throw ParameterError("trigger has no slots");
  auto sorted = slot_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ParameterError("trigger slots must be distinct");
  if (sorted.back() >= dim) throw ParameterError("trigger slot outside the feature range");
  if (!(pdr >= 0.0 && pdr <= 1.0)) throw ParameterError("pdr must lie in [0, 1]");
  if (mode == TriggerMode::dba && (n_parts == 0 || slot_indices.size() % n_parts != 0))
    throw ParameterError("DBA parts must split the trigger slots evenly");
}

void apply_trigger(std::span<double> row, std::span<const std::size_t> slots, double pattern_value) {
  for (std::size_t s : slots) row[s] = pattern_value;
}

Dataset inject_trigger(const Dataset& ds, const TriggerSpec& spec, std::optional<std::size_t> attacker_part,
                       RngStream& rng) {
  spec.validate(ds.dim());
  if (spec.target_class < 0 || spec.target_class >= ds.n_classes())
    throw ParameterError("trigger target class outside the label range");
  std::vector<std::size_t> slots;
  if (spec.mode == TriggerMode::dba) {
    if (!attacker_part) throw ParameterError("DBA injection needs the attacker's trigger part");
    slots = spec.part_slots(*attacker_part);
  } else {
    if (attacker_part) throw ParameterError("CBA injection takes no trigger part");
    slots = spec.slot_indices;
  }

  Dataset out = ds;
  const auto n_poison = static_cast<std::size_t>(std::floor(spec.pdr * static_cast<double>(ds.size())));
  for (std::size_t i : rng.sample_without_replacement(ds.size(), n_poison)) {
    apply_trigger(out.row(i), slots, spec.pattern_value);
    out.set_label(i, spec.target_class);
    out.set_triggered(i, true);
  }
  return out;
}

Dataset make_triggered_test_set(const Dataset& clean, const TriggerSpec& spec, bool exclude_target_class) {
  spec.validate(clean.dim());
  Dataset out(clean.dim(), clean.n_classes());
  out.reserve(clean.size());
  std::vector<double> x(clean.dim());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (exclude_target_class && clean.label(i) == spec.target_class) continue;
    auto r = clean.row(i);
    std::copy(r.begin(), r.end(), x.begin());
    apply_trigger(x, spec.slot_indices, spec.pattern_value);
    out.push_back(x, clean.label(i), true);
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, RngStream& rng) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw ParameterError("train fraction must lie in [0, 1]");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ds.size())));
  std::span<const std::size_t> all(order);
  return {ds.subset(all.first(n_train)), ds.subset(all.subspan(n_train))};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_double(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end())
    throw SchemaError(path.string() + ": no label column named '" + label_column + "'");
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;

  std::vector<double> features;
  std::vector<double> raw_labels;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(path.string() + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = parse_double(trim(cells[c]));
      if (!v)
        throw ParseError(path.string() + ": row " + std::to_string(row_no) + ", column " + std::to_string(c + 1) +
                         " ('" + header[c] + "'): non-numeric cell '" + cells[c] + "'");
      (c == label_pos ? raw_labels : features).push_back(*v);
    }
  }

  std::map<double, int> remap;
  for (double l : raw_labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [value, id] : remap) id = next++;

  Dataset ds(dim, static_cast<int>(remap.size()));
  ds.reserve(raw_labels.size());
  for (std::size_t r = 0; r < raw_labels.size(); ++r)
    ds.push_back(std::span<const double>(features.data() + r * dim, dim), remap.at(raw_labels[r]));
  return ds;
}

void write_csv_dataset(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column) {
  std::string text;
  for (std::size_t d = 0; d < ds.dim(); ++d) text += "f" + std::to_string(d) + ",";
  text += label_column + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) {
      append_double(text, v);
      text += ',';
    }
    text += std::to_string(ds.label(i)) + "\n";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace snowball
