#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <vector>

#include "snowball/dataset.hpp"
#include "snowball/error.hpp"
#include "snowball/rng.hpp"

using namespace snowball;

namespace {

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Two-class Fisher LDA fitted in closed form; returns accuracy on `test`.
double lda_accuracy(const Dataset& train, const Dataset& test) {
  const std::size_t d = train.dim();
  std::vector<std::vector<double>> mean(2, std::vector<double>(d, 0.0));
  std::vector<double> cnt(2, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    cnt[train.label(i)] += 1;
    for (std::size_t j = 0; j < d; ++j) mean[train.label(i)][j] += train.row(i)[j];
  }
  for (int c = 0; c < 2; ++c)
    for (double& v : mean[c]) v /= cnt[c];
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& m = mean[train.label(i)];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += (train.row(i)[a] - m[a]) * (train.row(i)[b] - m[b]);
  }
  for (auto& row : cov)
    for (double& v : row) v /= static_cast<double>(train.size() - 2);
  std::vector<double> diff(d);
  for (std::size_t j = 0; j < d; ++j) diff[j] = mean[1][j] - mean[0][j];
  const auto w = solve(cov, diff);
  double threshold = 0.0;
  for (std::size_t j = 0; j < d; ++j) threshold += w[j] * (mean[0][j] + mean[1][j]) / 2.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += w[j] * test.row(i)[j];
    ok += ((s > threshold) ? 1 : 0) == test.label(i);
  }
  return static_cast<double>(ok) / static_cast<double>(test.size());
}

double entropy(const Dataset& ds) {
  const auto counts = ds.class_counts();
  double h = 0.0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / static_cast<double>(ds.size());
      h -= p * std::log(p);
    }
  return h;
}

// Rows of all parts as a sorted multiset of (features, label).
std::vector<std::pair<std::vector<double>, int>> rows_of(const std::vector<Dataset>& parts) {
  std::vector<std::pair<std::vector<double>, int>> out;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.size(); ++i) out.emplace_back(std::vector<double>(p.row(i).begin(), p.row(i).end()), p.label(i));
  std::sort(out.begin(), out.end());
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("snowball_test_" + name);
}

}  // namespace

TEST_CASE("synthetic data") {
  RngStream rng(1);
  SUBCASE("linearly separable at class_sep 10") {
    auto r = rng.derive("lda");
    const auto ds = generate_synthetic(4000, 8, 2, 10.0, r);
    std::vector<std::size_t> a(2000), b(2000);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 2000);
    CHECK(lda_accuracy(ds.subset(a), ds.subset(b)) >= 0.99);
  }
  SUBCASE("empty") {
    auto r = rng.derive("empty");
    CHECK(generate_synthetic(0, 8, 2, 10.0, r).empty());
  }
  SUBCASE("deterministic and balanced") {
    auto r1 = rng.derive("det"), r2 = rng.derive("det");
    const auto a = generate_synthetic(1001, 6, 4, 5.0, r1);
    CHECK(a == generate_synthetic(1001, 6, 4, 5.0, r2));
    for (auto c : a.class_counts()) CHECK((c == 250 || c == 251));
  }
  SUBCASE("class means at least class_sep apart") {
    auto r = rng.derive("means");
    const auto ds = generate_synthetic(20000, 5, 3, 4.0, r);
    std::vector<std::vector<double>> mean(3, std::vector<double>(5, 0.0));
    const auto counts = ds.class_counts();
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (std::size_t j = 0; j < 5; ++j) mean[ds.label(i)][j] += ds.row(i)[j] / static_cast<double>(counts[ds.label(i)]);
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        double d = 0.0;
        for (std::size_t j = 0; j < 5; ++j) d += (mean[a][j] - mean[b][j]) * (mean[a][j] - mean[b][j]);
        CHECK(std::sqrt(d) == doctest::Approx(4.0).epsilon(0.05));
      }
  }
  SUBCASE("dimension too small") {
    auto r = rng.derive("bad");
    CHECK_THROWS_AS(generate_synthetic(10, 2, 3, 1.0, r), ParameterError);
  }
}

TEST_CASE("dirichlet partition") {
  RngStream rng(2);
  auto gr = rng.derive("data");
  const auto ds = generate_synthetic(4000, 6, 4, 3.0, gr);

  SUBCASE("complete and disjoint") {
    PartitionSpec spec{PartitionScheme::dirichlet_label_skew, 0.5, 20, 0.0};
    auto r = rng.derive("p");
    const auto parts = dirichlet_partition(ds, spec, r);
    REQUIRE(parts.size() == 20);
    for (const auto& p : parts) CHECK(p.size() >= 1);
    CHECK(rows_of(parts) == rows_of({ds}));
  }
  SUBCASE("near-uniform at huge alpha") {
    PartitionSpec spec{PartitionScheme::dirichlet_label_skew, 1e6, 4, 0.0};
    auto r = rng.derive("u");
    const auto parts = dirichlet_partition(ds, spec, r);
    const auto global = ds.class_counts();
    for (const auto& p : parts) {
      const auto c = p.class_counts();
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double share = static_cast<double>(c[k]) / static_cast<double>(p.size());
        const double g = static_cast<double>(global[k]) / static_cast<double>(ds.size());
        CHECK(std::abs(share - g) <= 0.2 * g);
      }
    }
  }
  SUBCASE("small alpha skews labels") {
    auto r1 = rng.derive("a01"), r2 = rng.derive("a100");
    const auto skewed = dirichlet_partition(ds, {PartitionScheme::dirichlet_label_skew, 0.1, 10, 0.0}, r1);
    const auto flat = dirichlet_partition(ds, {PartitionScheme::dirichlet_label_skew, 100.0, 10, 0.0}, r2);
    double hs = 0.0, hf = 0.0;
    for (const auto& p : skewed) hs += entropy(p);
    for (const auto& p : flat) hf += entropy(p);
    CHECK(hs / 10 < hf / 10);
  }
  SUBCASE("single client") {
    auto r = rng.derive("one");
    const auto parts = dirichlet_partition(ds, {PartitionScheme::dirichlet_label_skew, 0.5, 1, 0.0}, r);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0] == ds);
  }
  SUBCASE("too many clients for the data") {
    auto tiny_rng = rng.derive("tiny");
    const auto tiny = generate_synthetic(3, 6, 2, 3.0, tiny_rng);
    auto r = rng.derive("t");
    CHECK_THROWS_AS(dirichlet_partition(tiny, {PartitionScheme::dirichlet_label_skew, 0.5, 5, 0.0, 3}, r),
                    ParameterError);
  }
}

TEST_CASE("feature shift partition") {
  RngStream rng(3);
  auto gr = rng.derive("data");
  const auto ds = generate_synthetic(2000, 4, 2, 3.0, gr);

  auto client_means = [](const std::vector<Dataset>& parts) {
    std::vector<std::vector<double>> out;
    for (const auto& p : parts) {
      std::vector<double> m(p.dim(), 0.0);
      for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.dim(); ++j) m[j] += p.row(i)[j] / static_cast<double>(p.size());
      out.push_back(m);
    }
    return out;
  };

  SUBCASE("sigma 0 is an iid split") {
    auto r = rng.derive("s0");
    const auto parts = feature_shift_partition(ds, {PartitionScheme::feature_shift, 0.5, 4, 0.0}, r);
    CHECK(rows_of(parts) == rows_of({ds}));
    for (const auto& p : parts) CHECK((p.size() == 500));
    const auto means = client_means(parts);
    const auto global = client_means({ds})[0];
    // per-coordinate standard error is about 2.3 / sqrt(500) ~ 0.1 (class means add spread)
    for (const auto& m : means)
      for (std::size_t j = 0; j < m.size(); ++j) CHECK(std::abs(m[j] - global[j]) < 0.5);
  }
  SUBCASE("sigma 5 separates clients") {
    auto r = rng.derive("s5");
    const auto parts = feature_shift_partition(ds, {PartitionScheme::feature_shift, 0.5, 4, 5.0}, r);
    const auto means = client_means(parts);
    double between = 0.0;
    int pairs = 0;
    for (std::size_t a = 0; a < means.size(); ++a)
      for (std::size_t b = a + 1; b < means.size(); ++b) {
        double d = 0.0;
        for (std::size_t j = 0; j < 4; ++j) d += (means[a][j] - means[b][j]) * (means[a][j] - means[b][j]);
        between += std::sqrt(d);
        ++pairs;
      }
    CHECK(between / pairs > 5 * 0.2);
  }
  SUBCASE("singleton clients") {
    auto small_rng = rng.derive("small");
    const auto small = generate_synthetic(7, 4, 2, 3.0, small_rng);
    auto r = rng.derive("single");
    const auto parts = feature_shift_partition(small, {PartitionScheme::feature_shift, 0.5, 7, 1.0}, r);
    REQUIRE(parts.size() == 7);
    for (const auto& p : parts) CHECK(p.size() == 1);
  }
}

TEST_CASE("trigger injection") {
  RngStream rng(4);
  auto gr = rng.derive("data");
  const auto ds = generate_synthetic(100, 12, 3, 3.0, gr);
  const auto cba = TriggerSpec::trailing(12, 9, TriggerMode::cba, 3.0, 0, 0.3);
  const auto dba = TriggerSpec::trailing(12, 9, TriggerMode::dba, 3.0, 0, 0.3);

  SUBCASE("pdr 0 leaves data unchanged") {
    auto spec = cba;
    spec.pdr = 0.0;
    auto r = rng.derive("p0");
    CHECK(inject_trigger(ds, spec, std::nullopt, r) == ds);
  }
  SUBCASE("pdr 1 poisons everything") {
    auto spec = cba;
    spec.pdr = 1.0;
    auto r = rng.derive("p1");
    const auto out = inject_trigger(ds, spec, std::nullopt, r);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out.triggered(i));
      CHECK(out.label(i) == 0);
      for (auto s : spec.slot_indices) CHECK(out.row(i)[s] == 3.0);
    }
  }
  SUBCASE("floor count") {
    auto r = rng.derive("p03");
    const auto out = inject_trigger(ds, cba, std::nullopt, r);
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < out.size(); ++i) flagged += out.triggered(i);
    CHECK(flagged == 30);
  }
  SUBCASE("idempotent on flagged rows") {
    auto spec = cba;
    spec.pdr = 1.0;
    auto r1 = rng.derive("i1"), r2 = rng.derive("i2");
    const auto once = inject_trigger(ds, spec, std::nullopt, r1);
    CHECK(inject_trigger(once, spec, std::nullopt, r2) == once);
  }
  SUBCASE("dba parts assemble the full trigger") {
    CHECK(dba.part_slots(0).size() == 3);
    std::vector<double> row_parts(ds.row(0).begin(), ds.row(0).end());
    std::vector<double> row_full = row_parts;
    for (std::size_t p = 0; p < 3; ++p) apply_trigger(row_parts, dba.part_slots(p), 3.0);
    apply_trigger(row_full, cba.slot_indices, 3.0);
    CHECK(row_parts == row_full);
  }
  SUBCASE("part arguments") {
    auto r = rng.derive("parts");
    CHECK_THROWS_AS(inject_trigger(ds, dba, std::nullopt, r), ParameterError);
    CHECK_THROWS_AS(inject_trigger(ds, dba, std::size_t{3}, r), ParameterError);
    CHECK_THROWS_AS(inject_trigger(ds, cba, std::size_t{0}, r), ParameterError);
  }
  SUBCASE("triggered test set") {
    const auto all = make_triggered_test_set(ds, cba, false);
    CHECK(all.size() == ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      CHECK(all.label(i) == ds.label(i));
      CHECK(all.row(i)[11] == 3.0);
    }
    const auto excl = make_triggered_test_set(ds, cba, true);
    CHECK(excl.size() == ds.size() - ds.class_counts()[0]);
  }
}

TEST_CASE("csv datasets") {
  SUBCASE("labels remapped") {
    const auto path = temp_file("remap.csv");
    std::ofstream(path) << "a,b,label\n1,2,9\n3,4,5\n";
    const auto ds = load_csv_dataset(path, "label");
    CHECK(ds.size() == 2);
    CHECK(ds.label(0) == 1);
    CHECK(ds.label(1) == 0);
    CHECK(ds.row(1)[1] == 4.0);
  }
  SUBCASE("empty data section") {
    const auto path = temp_file("empty.csv");
    std::ofstream(path) << "a,b,label\n";
    CHECK(load_csv_dataset(path, "label").empty());
  }
  SUBCASE("round trip") {
    RngStream r(5);
    const auto ds = generate_synthetic(50, 5, 3, 2.0, r);
    const auto path = temp_file("roundtrip.csv");
    write_csv_dataset(ds, path);
    const auto back = load_csv_dataset(path, "label");
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(back.label(i) == ds.label(i));
      for (std::size_t j = 0; j < ds.dim(); ++j) CHECK(std::abs(back.row(i)[j] - ds.row(i)[j]) < 1e-9);
    }
  }
  SUBCASE("errors") {
    const auto bad = temp_file("bad.csv");
    std::ofstream(bad) << "a,label\n1,0\nx,1\n";
    try {
      load_csv_dataset(bad, "label");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("column 1") != std::string::npos);
    }
    const auto nolabel = temp_file("nolabel.csv");
    std::ofstream(nolabel) << "a,b\n1,2\n";
    CHECK_THROWS_AS(load_csv_dataset(nolabel, "label"), SchemaError);
    CHECK_THROWS_AS(load_csv_dataset(temp_file("does_not_exist.csv"), "label"), IoError);
  }
}

TEST_CASE("train/test split") {
  RngStream r(6);
  const auto ds = generate_synthetic(100, 3, 2, 2.0, r);
  auto sr = r.derive("split");
  const auto [train, test] = train_test_split(ds, 0.9, sr);
  CHECK(train.size() == 90);
  CHECK(test.size() == 10);
  CHECK(rows_of({train, test}) == rows_of({ds}));
}
