#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "../support/oracles.hpp"
#include "snowball/error.hpp"
#include "snowball/rng.hpp"
#include "snowball/top_down.hpp"
#include "snowball/vae.hpp"

using namespace snowball;

namespace {

const std::vector<LayerId> kLayers{0, 1};

CandidateUpdate make_update(ClientId id, std::vector<double> l0, std::vector<double> l1) {
  CandidateUpdate u;
  u.client_id = id;
  u.n_samples = 10;
  u.delta.add_layer(0, std::move(l0));
  u.delta.add_layer(1, std::move(l1));
  return u;
}

// Benign updates scatter around one base point; infected ones carry their own
// offset on top of a common shift.
std::vector<CandidateUpdate> planted(RngStream& r, std::size_t n, std::size_t n_infected) {
  std::vector<CandidateUpdate> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool bad = i >= n - n_infected;
    std::vector<double> a(8), b(4);
    for (double& x : a) x = 0.5 + r.normal(0.0, 0.1) + (bad ? 1.0 + r.normal(0.0, 0.5) : 0.0);
    for (double& x : b) x = -0.5 + r.normal(0.0, 0.1) + (bad ? -1.0 + r.normal(0.0, 0.5) : 0.0);
    out.push_back(make_update(i, a, b));
  }
  return out;
}

void perturb(MlpModel& m, RngStream& r, double sd) {
  for (std::size_t l = 0; l < m.params().num_layers(); ++l)
    for (double& v : m.params().layer(l).values) v += r.normal(0.0, sd);
}

std::vector<MlpModel*> parts(VaeModel& v) { return {&v.encoder, &v.mu_head, &v.logvar_head, &v.decoder}; }
std::vector<const LayeredVector*> parts(const VaeGradient& g) {
  return {&g.encoder, &g.mu_head, &g.logvar_head, &g.decoder};
}

double eval_loss(const VaeModel& v, const std::vector<double>& u) {
  const auto f = vae_forward(v, u, nullptr);
  return vae_loss(f.reconstruction, u, f.mu, f.logvar).total;
}

// Straight forward pass through a network given its layer specs and params.
oracle::Vec mlp_replay(const MlpModel& m, oracle::Vec x) {
  for (std::size_t l = 0; l < m.specs().size(); ++l) {
    const auto& s = m.specs()[l];
    const auto& p = m.params().layer(l).values;
    const oracle::Vec w(p.begin(), p.begin() + static_cast<long>(s.in_dim * s.out_dim));
    const oracle::Vec b(p.begin() + static_cast<long>(s.in_dim * s.out_dim), p.end());
    x = oracle::affine(w, b, x);
    if (s.activation == Activation::relu) x = oracle::relu(x);
  }
  return x;
}

std::vector<double> all_scores(const VaeModel& v, const std::vector<CandidateUpdate>& ups,
                               const std::vector<CandidateUpdate>& selectees, std::size_t from) {
  std::vector<double> s;
  for (std::size_t j = from; j < ups.size(); ++j) s.push_back(score_candidate(v, ups[j], selectees, kLayers).score);
  return s;
}

}  // namespace

TEST_CASE("vae loss closed form") {
  const std::vector<double> u{1.0, -2.0}, zero2{0.0, 0.0};
  auto l = vae_loss(u, u, zero2, zero2);
  CHECK(l.kl == 0.0);
  CHECK(l.recon == 0.0);
  CHECK(l.total == 0.0);

  l = vae_loss(u, u, std::vector<double>{1.0, 0.0}, zero2);
  CHECK(l.kl == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(l.total == l.kl);

  l = vae_loss(std::vector<double>{0.0, 0.0}, u, zero2, zero2);
  CHECK(l.recon == doctest::Approx(2.5));

  CHECK_THROWS_AS(vae_loss(u, u, zero2, std::vector<double>{1e6, 0.0}), NumericError);
  CHECK_THROWS_AS(vae_loss(u, std::vector<double>{1.0}, zero2, zero2), ShapeError);
}

TEST_CASE("fresh vae sits at the prior") {
  RngStream rng(1);
  VaeModel v(10, 16, 4, rng);
  const std::vector<double> u{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto f = vae_forward(v, u, nullptr);
  for (double m : f.mu) CHECK(m == 0.0);
  for (double s : f.logvar) CHECK(s == 0.0);
  for (double r : f.reconstruction) CHECK(r == 0.0);
  CHECK(vae_loss(f.reconstruction, u, f.mu, f.logvar).kl == 0.0);
  CHECK_THROWS_AS(vae_forward(v, std::vector<double>(9, 0.0), nullptr), ShapeError);
}

TEST_CASE("vae gradient agrees with central differences") {
  RngStream rng(2);
  VaeModel v(10, 12, 3, rng);
  auto noise = rng.derive("noise");
  for (auto* m : parts(v)) perturb(*m, noise, 0.3);
  std::vector<double> u(10);
  for (double& x : u) x = noise.normal();

  auto grad = VaeGradient::zeros_like(v);
  vae_backward(v, vae_forward(v, u, nullptr), u, grad);

  const double h = 1e-5;
  int checked = 0;
  const auto models = parts(v);
  const auto grads = parts(grad);
  for (std::size_t p = 0; p < models.size(); ++p) {
    auto& params = models[p]->params();
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
      auto& vals = params.layer(l).values;
      for (std::size_t k = 0; k < vals.size(); ++k) {
        const double keep = vals[k];
        vals[k] = keep + h;
        const double up = eval_loss(v, u);
        vals[k] = keep - h;
        const double down = eval_loss(v, u);
        vals[k] = keep;
        const double numeric = (up - down) / (2 * h);
        const double analytic = grads[p]->layers()[l].values[k];
        if (std::abs(numeric) < 1e-7 && std::abs(analytic) < 1e-7) continue;
        CHECK(std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric)) < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked > 250);  // dead relu units leave the rest at zero
}

TEST_CASE("vae forward modes") {
  RngStream rng(3);
  VaeModel v(6, 8, 3, rng);
  auto noise = rng.derive("noise");
  for (auto* m : parts(v)) perturb(*m, noise, 0.4);
  const std::vector<double> u{0.3, -1.0, 2.0, 0.0, 0.7, -0.2};

  CHECK(vae_forward(v, u, nullptr).reconstruction == vae_forward(v, u, nullptr).reconstruction);

  RngStream pinned(99), replay(99);
  const auto f = vae_forward(v, u, &pinned);
  const auto h = mlp_replay(v.encoder, u);
  const auto mu = mlp_replay(v.mu_head, h);
  const auto lv = mlp_replay(v.logvar_head, h);
  oracle::Vec z(mu.size());
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = mu[d] + std::exp(lv[d] / 2) * replay.normal();
  const auto rec = mlp_replay(v.decoder, z);
  REQUIRE(rec.size() == f.reconstruction.size());
  for (std::size_t d = 0; d < rec.size(); ++d) CHECK(std::abs(rec[d] - f.reconstruction[d]) < 1e-12);
}

TEST_CASE("vae training") {
  SUBCASE("loss goes down on a fixed set") {
    RngStream rng(4);
    Points set;
    for (int i = 0; i < 40; ++i) {
      Point p(10);
      for (std::size_t d = 0; d < 10; ++d) p[d] = (i % 2 ? 1.0 : -1.0) * static_cast<double>(d) / 5 + rng.normal(0, 0.1);
      set.push_back(p);
    }
    VaeModel v(10, 32, 4, rng);
    auto train_rng = rng.derive("train");
    const auto before = mean_vae_loss(v, set);
    const auto hist = train_vae(v, set, 40, {0.01, 0.0, 32}, train_rng);
    REQUIRE(hist.size() == 40);
    CHECK(hist.back() < hist.front());
    CHECK(mean_vae_loss(v, set) < before);
  }
  SUBCASE("zero differences reconstruct") {
    RngStream rng(5);
    VaeModel v(10, 16, 4, rng);
    auto noise = rng.derive("noise");
    perturb(v.decoder, noise, 0.1);
    const Points zeros(12, Point(10, 0.0));
    train_vae(v, zeros, 1000, {0.05, 0.0, 32}, rng);
    CHECK(reconstruction_error(v, zeros.front()) < 1e-3);
  }
  SUBCASE("zero epochs leave the model alone") {
    RngStream rng(6);
    VaeModel v(4, 8, 2, rng);
    const auto before = v.encoder.params();
    const Points set{{1, 2, 3, 4}};
    CHECK(train_vae(v, set, 0, {}, rng).empty());
    CHECK(v.encoder.params().layers()[0].values == before.layers()[0].values);
  }
  SUBCASE("bad input") {
    RngStream rng(7);
    VaeModel v(4, 8, 2, rng);
    CHECK_THROWS_AS(train_vae(v, {}, 1, {}, rng), ParameterError);
    CHECK_THROWS_AS(train_vae(v, {{1, 2}}, 1, {}, rng), ShapeError);
  }
}

TEST_CASE("difference set") {
  RngStream r(8);
  auto ups = planted(r, 5, 0);
  const auto set = build_difference_set(ups, kLayers);
  CHECK(set.vectors.size() == 20);
  for (std::size_t a = 0; a < set.pairs.size(); ++a) {
    CHECK(set.pairs[a].first != set.pairs[a].second);
    for (std::size_t b = 0; b < set.pairs.size(); ++b)
      if (set.pairs[b].first == set.pairs[a].second && set.pairs[b].second == set.pairs[a].first)
        for (std::size_t d = 0; d < set.vectors[a].size(); ++d) CHECK(set.vectors[a][d] + set.vectors[b][d] == 0.0);
  }
  CHECK(set.vectors[0].size() == 12);

  std::vector<CandidateUpdate> same;
  for (ClientId i = 0; i < 3; ++i) same.push_back(make_update(i, {1, 2}, {3}));
  for (const auto& u : build_difference_set(same, kLayers).vectors)
    for (double x : u) CHECK(x == 0.0);

  CHECK_THROWS_AS(build_difference_set(std::vector<CandidateUpdate>(ups.begin(), ups.begin() + 1), kLayers),
                  ParameterError);
}

TEST_CASE("candidate scores") {
  SUBCASE("identical selectees and candidate") {
    RngStream rng(9);
    std::vector<CandidateUpdate> sel;
    for (ClientId i = 0; i < 3; ++i) sel.push_back(make_update(i, {1, 2, 3}, {4}));
    VaeModel v(4, 8, 2, rng);
    auto noise = rng.derive("noise");
    perturb(v.decoder, noise, 0.1);
    train_vae(v, build_difference_set(sel, kLayers).vectors, 1000, {0.05, 0.0, 32}, rng);
    const auto s = score_candidate(v, make_update(7, {1, 2, 3}, {4}), sel, kLayers);
    CHECK(s.client_id == 7);
    CHECK(s.score >= 0.0);
    CHECK(s.score < 3e-3);
    CHECK_THROWS_AS(score_candidate(v, sel[1], sel, kLayers), ParameterError);
  }
  SUBCASE("planted geometry: infected candidates score higher") {
    RngStream rng(10);
    std::vector<double> margins;
    for (int s = 0; s < 50; ++s) {
      auto r = rng.derive("seed", s);
      auto ups = planted(r, 20, 4);
      const std::vector<CandidateUpdate> sel(ups.begin(), ups.begin() + 4);
      VaeModel v(12, 64, 16, r);
      train_vae(v, build_difference_set(sel, kLayers).vectors, 30, {}, r);
      const auto benign = all_scores(v, ups, sel, 4);
      const double worst_benign = *std::max_element(benign.begin(), benign.end() - 4);
      const double best_infected = *std::min_element(benign.end() - 4, benign.end());
      margins.push_back(best_infected - worst_benign);
    }
    std::nth_element(margins.begin(), margins.begin() + 25, margins.end());
    CHECK(margins[25] > 0.0);
  }
  SUBCASE("moving a candidate away raises its score") {
    RngStream rng(11);
    for (int s = 0; s < 20; ++s) {
      auto r = rng.derive("seed", s);
      auto ups = planted(r, 10, 0);
      const std::vector<CandidateUpdate> sel(ups.begin(), ups.begin() + 4);
      VaeModel v(12, 64, 16, r);
      train_vae(v, build_difference_set(sel, kLayers).vectors, 30, {}, r);
      auto far = ups[7];
      far.delta *= 10.0;
      CHECK(score_candidate(v, far, sel, kLayers).score > score_candidate(v, ups[7], sel, kLayers).score);
    }
  }
}

TEST_CASE("top-down election") {
  TopDownOptions opt;
  opt.step = 1;
  SUBCASE("target already met") {
    RngStream r(12);
    auto ups = planted(r, 8, 2);
    opt.target = 3;
    const std::vector<ClientId> sel{0, 1, 2};
    const auto res = top_down_election(ups, sel, kLayers, opt, r);
    CHECK(res.selected == sel);
    CHECK(res.steps.empty());
  }
  SUBCASE("exhaustion and monotone growth") {
    RngStream r(13);
    auto ups = planted(r, 9, 2);
    opt.target = 9;
    opt.step = 2;
    const auto res = top_down_election(ups, std::vector<ClientId>{3, 1}, kLayers, opt, r);
    CHECK(res.selected.size() == 9);
    REQUIRE(res.steps.size() == 4);
    std::size_t m = 2;
    for (const auto& st : res.steps) {
      CHECK(st.selected_before == m);
      CHECK(st.difference_count == m * (m - 1));
      m += st.added.size();
    }
    CHECK(res.steps.back().added.size() == 1);
    CHECK(m == 9);
  }
  SUBCASE("admits the lowest scores") {
    RngStream r(14);
    auto ups = planted(r, 12, 3);
    opt.target = 8;
    opt.step = 1;
    const auto res = top_down_election(ups, std::vector<ClientId>{0, 1, 2}, kLayers, opt, r);
    for (const auto& st : res.steps) CHECK(st.added_scores.size() == st.added.size());
    CHECK(res.selected.size() == 8);
  }
  SUBCASE("planted geometry: no infected selectees") {
    RngStream rng(15);
    opt.target = 20;
    opt.step = 1;
    int clean = 0;
    for (int s = 0; s < 50; ++s) {
      auto r = rng.derive("seed", s);
      auto ups = planted(r, 40, 8);
      const auto res = top_down_election(ups, std::vector<ClientId>{0, 1, 2, 3}, kLayers, opt, r);
      clean += std::none_of(res.selected.begin(), res.selected.end(), [](ClientId id) { return id >= 32; });
    }
    CHECK(clean >= 45);
  }
  SUBCASE("preconditions") {
    RngStream r(16);
    auto ups = planted(r, 6, 1);
    opt.target = 7;
    CHECK_THROWS_AS(top_down_election(ups, std::vector<ClientId>{0, 1}, kLayers, opt, r), ParameterError);
    opt.target = 4;
    CHECK_THROWS_AS(top_down_election(ups, std::vector<ClientId>{0}, kLayers, opt, r), ParameterError);
    CHECK_THROWS_AS(top_down_election(ups, std::vector<ClientId>{0, 99}, kLayers, opt, r), ParameterError);
  }
}
