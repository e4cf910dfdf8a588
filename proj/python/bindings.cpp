#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "snowball/baselines.hpp"
#include "snowball/bottom_up.hpp"
#include "snowball/clustering.hpp"
#include "snowball/config.hpp"
#include "snowball/engine.hpp"
#include "snowball/error.hpp"
#include "snowball/report.hpp"
#include "snowball/vae.hpp"

namespace py = pybind11;
using namespace snowball;

namespace {

using Layers = std::vector<std::vector<double>>;

// Each update is a list of layer slices; ids default to 0..n-1.
std::vector<CandidateUpdate> to_updates(const std::vector<Layers>& updates, std::vector<ClientId> ids) {
  if (ids.empty())
    for (std::size_t i = 0; i < updates.size(); ++i) ids.push_back(i);
  if (ids.size() != updates.size()) throw ParameterError("one client id per update required");
  std::vector<CandidateUpdate> out;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    CandidateUpdate u;
    u.client_id = ids[i];
    u.n_samples = 1;
    for (std::size_t l = 0; l < updates[i].size(); ++l) u.delta.add_layer(l, updates[i][l]);
    out.push_back(std::move(u));
  }
  return out;
}

ConfigOverrides to_overrides(const std::map<std::string, std::string>& o) { return {o.begin(), o.end()}; }

py::dict summary_dict(const ExperimentSummary& s) {
  py::dict d;
  d["ma"] = s.ma;
  d["ba"] = s.ba;
  d["best_round"] = s.best_round;
  d["initial_ma"] = s.initial_ma;
  d["initial_ba"] = s.initial_ba;
  d["mean_fpr"] = s.mean_fpr;
  d["mean_fnr"] = s.mean_fnr;
  d["cluster_count"] = s.cluster_count;
  d["election_layers"] = s.election_layers;
  d["attackers"] = s.attackers;
  return d;
}

py::dict round_dict(const RoundRecord& r) {
  py::dict d;
  d["round"] = r.round;
  d["ma"] = r.metrics.ma;
  d["ba"] = r.metrics.ba;
  d["fpr"] = r.metrics.fpr;
  d["fnr"] = r.metrics.fnr;
  d["n_selected"] = r.metrics.n_selected;
  d["n_infected_selected"] = r.metrics.n_infected_selected;
  d["participants"] = r.participants;
  d["infected"] = r.infected;
  d["selected"] = r.selected;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Federated backdoor simulator with the Snowball defense";

  static py::exception<Error> error(m, "SnowballError");
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def(
      "resolve_config",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        return to_config_text(parse_config_text(text, to_overrides(overrides)));
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Parse `key = value` text plus overrides; returns the fully resolved config text.");

  m.def(
      "run_experiment",
      [](const std::string& text, const std::map<std::string, std::string>& overrides, const std::string& out_dir) {
        const auto config = parse_config_text(text, to_overrides(overrides));
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(config);
        }
        if (!out_dir.empty()) write_outputs(out_dir, config, result);
        py::dict d;
        d["summary"] = summary_dict(result.summary);
        py::list rounds;
        for (const auto& r : result.rounds) rounds.append(round_dict(r));
        d["rounds"] = rounds;
        d["rounds_csv"] = rounds_csv(result.rounds, false);
        return d;
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("out_dir") = "",
      "Run one experiment. Writes the usual output files when out_dir is given.");

  m.def(
      "bottom_up_election",
      [](const std::vector<Layers>& updates, std::size_t n_select, std::size_t n_clusters,
         std::vector<ClientId> ids) {
        const auto ups = to_updates(updates, std::move(ids));
        std::vector<LayerId> layers;
        for (std::size_t l = 0; l < updates.at(0).size(); ++l) layers.push_back(l);
        const auto r = bottom_up_election(ups, n_select, n_clusters, layers);
        py::dict d;
        d["selected"] = r.selected;
        d["counters"] = r.tally.counters;
        d["client_ids"] = r.tally.client_ids;
        return d;
      },
      py::arg("updates"), py::arg("n_select"), py::arg("n_clusters"), py::arg("client_ids") = std::vector<ClientId>{});

  m.def(
      "krum_select",
      [](const std::vector<Layers>& updates, double f_ratio, std::size_t m, std::vector<ClientId> ids) {
        const auto r = krum_select(to_updates(updates, std::move(ids)), f_ratio, m);
        return py::make_tuple(r.selected, r.scores);
      },
      py::arg("updates"), py::arg("f_ratio"), py::arg("m"), py::arg("client_ids") = std::vector<ClientId>{},
      "Multi-Krum; returns (selected ids, per-update scores).");

  m.def("ch_score", [](const Points& p, const std::vector<std::size_t>& a) { return ch_score(p, a); },
        py::arg("points"), py::arg("assignments"));
  m.def("minmax_normalize", [](const std::vector<double>& s) { return minmax_normalize(s); }, py::arg("scores"));

  m.def(
      "kmeans",
      [](const Points& points, const Points& init) {
        const auto r = kmeans(points, init);
        return py::make_tuple(r.assignments, r.centroids, r.inertia, r.iterations);
      },
      py::arg("points"), py::arg("init_centroids"), "Lloyd from fixed centroids; (assignments, centroids, inertia, iterations).");

  m.def(
      "gap_statistic",
      [](const Points& points, std::uint64_t seed) {
        RngStream rng(seed);
        return gap_statistic(points, rng).best_k;
      },
      py::arg("points"), py::arg("seed") = 0);

  m.def(
      "vae_loss",
      [](const std::vector<double>& rec, const std::vector<double>& u, const std::vector<double>& mu,
         const std::vector<double>& logvar) {
        const auto l = vae_loss(rec, u, mu, logvar);
        return py::make_tuple(l.total, l.kl, l.recon);
      },
      py::arg("reconstruction"), py::arg("u"), py::arg("mu"), py::arg("logvar"), "Returns (total, kl, recon).");

  m.attr("rounds_csv_header") = kRoundsCsvHeader;
  m.attr("__version__") = SNOWBALL_VERSION;
}
