#include "snowball/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "snowball/error.hpp"
#include "snowball/parallel.hpp"

namespace snowball {

MetricsRecord selection_metrics(std::span<const ModelUpdate> updates, std::span<const ClientId> selected) {
  MetricsRecord m;
  m.n_selected = selected.size();
  std::size_t benign_selected = 0;
  for (const auto& u : updates) {
    const bool chosen = std::find(selected.begin(), selected.end(), u.client_id) != selected.end();
    if (u.infected) {
      ++m.n_infected_present;
      if (chosen) ++m.n_infected_selected;
    } else {
      ++m.n_benign_present;
      if (chosen) ++benign_selected;
    }
  }
  m.fpr = m.n_infected_present == 0
              ? 0.0
              : static_cast<double>(m.n_infected_selected) / static_cast<double>(m.n_infected_present);
  m.fnr = m.n_benign_present == 0
              ? 0.0
              : static_cast<double>(m.n_benign_present - benign_selected) / static_cast<double>(m.n_benign_present);
  return m;
}

DistanceProfile distance_profile(std::span<const ModelUpdate> updates) {
  std::vector<std::vector<double>> benign, infected;
  for (const auto& u : updates) (u.infected ? infected : benign).push_back(u.delta.flatten());
  DistanceProfile p;
  if (benign.size() < 2 || infected.empty()) return p;
  p.defined = true;
  double bb = 0.0;
  for (std::size_t i = 0; i < benign.size(); ++i)
    for (std::size_t j = i + 1; j < benign.size(); ++j) bb += std::sqrt(squared_distance(benign[i], benign[j]));
  p.benign_benign = bb / static_cast<double>(benign.size() * (benign.size() - 1) / 2);
  double bi = 0.0;
  for (const auto& b : benign)
    for (const auto& x : infected) bi += std::sqrt(squared_distance(b, x));
  p.benign_infected = bi / static_cast<double>(benign.size() * infected.size());
  return p;
}

std::vector<ClientId> sample_participants(std::size_t n_clients, std::size_t k, RngStream& rng) {
  if (k > n_clients)
    throw ParameterError("cannot sample " + std::to_string(k) + " participants from " + std::to_string(n_clients) +
                         " clients");
  auto ids = rng.sample_without_replacement(n_clients, k);
  std::sort(ids.begin(), ids.end());
  return {ids.begin(), ids.end()};
}

ModelUpdate local_train(const MlpModel& global, const Dataset& data, const LocalTrainSpec& spec, RngStream& rng) {
  if (data.empty()) throw ParameterError("client " + std::to_string(spec.client_id) + " has no training data");
  if (spec.batch_size == 0) throw ParameterError("batch size must be positive");
  MlpModel model = global;
  SgdState sgd = spec.sgd;
  sgd.velocity = LayeredVector();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ForwardCache cache;
  std::vector<double> grad_logits;
  auto grad = LayeredVector::zeros_like(model.params());
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += spec.batch_size) {
      const std::size_t end = std::min(order.size(), begin + spec.batch_size);
      grad.fill(0.0);
      double loss = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = order[b];
        const auto logits = mlp_forward(model, data.row(i), cache);
        loss += softmax_cross_entropy(logits, data.label(i), &grad_logits);
        mlp_backward_accumulate(model, cache, grad_logits, grad);
      }
      if (!std::isfinite(loss))
        throw NumericError("non-finite training loss for client " + std::to_string(spec.client_id) + " in round " +
                           std::to_string(spec.round));
      grad *= 1.0 / static_cast<double>(end - begin);
      sgd_step(model.params(), grad, sgd);
    }
  }
  ModelUpdate update;
  update.client_id = spec.client_id;
  update.delta = model.params() - global.params();
  update.n_samples = data.size();
  update.infected = spec.infected;
  return update;
}

LayeredVector aggregate(std::span<const ModelUpdate> selectees) {
  if (selectees.empty()) throw AggregationError("no updates selected for aggregation");
  double total = 0.0;
  for (const auto& u : selectees) total += static_cast<double>(u.n_samples);
  auto out = LayeredVector::zeros_like(selectees.front().delta);
  for (const auto& u : selectees) {
    const double w = total > 0.0 ? static_cast<double>(u.n_samples) / total
                                 : 1.0 / static_cast<double>(selectees.size());
    out.axpy(w, u.delta);
  }
  return out;
}

double accuracy(const MlpModel& model, const Dataset& data) {
  if (data.empty()) throw ParameterError("accuracy on an empty dataset");
  std::size_t correct = 0;
  ForwardCache cache;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (argmax(mlp_forward(model, data.row(i), cache)) == data.label(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Evaluation evaluate(const MlpModel& model, const Dataset& clean_test, const Dataset& triggered_test, int target_class) {
  Evaluation e;
  e.ma = accuracy(model, clean_test);
  if (!triggered_test.empty()) {
    std::size_t hits = 0;
    ForwardCache cache;
    for (std::size_t i = 0; i < triggered_test.size(); ++i)
      if (argmax(mlp_forward(model, triggered_test.row(i), cache)) == target_class) ++hits;
    e.ba = static_cast<double>(hits) / static_cast<double>(triggered_test.size());
  }
  return e;
}

namespace {

template <typename E>
[[noreturn]] void rethrow_in_round(const E& e, std::size_t round) {
  throw E("round " + std::to_string(round) + ": " + e.what());
}

struct Population {
  std::vector<Dataset> client_data;  // poisoned for attackers when an attack is active
  std::vector<bool> is_attacker;
  std::vector<ClientId> attackers;
  Dataset clean_test;
  Dataset triggered_test;
  TriggerSpec trigger;
};

Population build_population(const ExperimentConfig& c, const RngStream& root) {
  Dataset train, test;
  if (!c.data_csv.empty()) {
    auto split_rng = root.derive("split");
    std::tie(train, test) = train_test_split(load_csv_dataset(c.data_csv, c.label_column), 0.9, split_rng);
  } else {
    auto data_rng = root.derive("data");
    const auto all = generate_synthetic(c.n_train + c.n_test, c.features, c.classes, c.class_sep, data_rng);
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::span<const std::size_t> span(idx);
    train = all.subset(span.first(c.n_train));
    test = all.subset(span.subspan(c.n_train));
  }
  if (test.empty()) throw ParameterError("test split is empty");
  if (c.target_class >= train.n_classes()) throw ParameterError("target class outside the dataset's labels");

  Population pop;
  const auto mode = c.attack == AttackKind::dba ? TriggerMode::dba : TriggerMode::cba;
  pop.trigger = TriggerSpec::trailing(train.dim(), c.trigger_slots, mode, c.trigger_value, c.target_class, c.pdr);

  PartitionSpec ps;
  ps.scheme = c.partition;
  ps.alpha = c.alpha;
  ps.n_clients = c.clients;
  ps.shift_sigma = c.shift_sigma;
  auto part_rng = root.derive("partition");
  pop.client_data = partition(train, ps, part_rng);

  pop.is_attacker.assign(c.clients, false);
  auto attacker_rng = root.derive("attackers");
  const auto n_attackers = static_cast<std::size_t>(std::floor(c.mcr * static_cast<double>(c.clients)));
  const auto drawn = attacker_rng.sample_without_replacement(c.clients, n_attackers);
  for (std::size_t rank = 0; rank < drawn.size(); ++rank) {
    const ClientId id = drawn[rank];
    pop.is_attacker[id] = true;
    if (c.attack == AttackKind::none) continue;
    std::optional<std::size_t> part;
    if (mode == TriggerMode::dba) part = rank % pop.trigger.n_parts;
    auto poison_rng = root.derive("poison", id);
    pop.client_data[id] = inject_trigger(pop.client_data[id], pop.trigger, part, poison_rng);
  }
  pop.attackers.assign(drawn.begin(), drawn.end());
  std::sort(pop.attackers.begin(), pop.attackers.end());

  pop.clean_test = std::move(test);
  pop.triggered_test = make_triggered_test_set(pop.clean_test, pop.trigger, c.ba_exclude_target);
  return pop;
}

std::vector<ClientId> choose_participants(const ExperimentConfig& c, const Population& pop, RngStream& rng) {
  if (!c.attackers_always_sampled || c.attack == AttackKind::none) return sample_participants(c.clients, c.participants, rng);
  std::vector<ClientId> chosen(pop.attackers.begin(),
                               pop.attackers.begin() + static_cast<std::ptrdiff_t>(std::min(pop.attackers.size(), c.participants)));
  std::vector<ClientId> benign;
  for (ClientId id = 0; id < c.clients; ++id)
    if (!pop.is_attacker[id]) benign.push_back(id);
  for (std::size_t i : rng.sample_without_replacement(benign.size(), c.participants - chosen.size()))
    chosen.push_back(benign[i]);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Election state frozen on the first round the elections run.
struct ElectionSetup {
  bool ready = false;
  std::vector<LayerId> layers;
  std::size_t clusters = 0;
};

std::vector<ClientId> run_defense(const ExperimentConfig& c, std::span<const ModelUpdate> updates, ElectionSetup& setup,
                                  std::size_t round, RngStream& round_rng, RoundRecord& record) {
  const auto candidates = strip_ground_truth(updates);
  switch (c.defense) {
    case DefenseKind::fedavg:
      return fedavg_select(candidates).selected;
    case DefenseKind::ideal:
      return ideal_select(updates).selected;
    case DefenseKind::krum: {
      auto r = krum_select(candidates, c.krum_f_ratio, c.krum_select == 0 ? c.target_selectees : c.krum_select);
      record.krum_scores = r.scores;
      return r.selected;
    }
    case DefenseKind::snowball:
    case DefenseKind::snowball_minus:
      break;
  }

  if (!setup.ready) {
    setup.layers = select_layers(candidates, {c.layer_policy, c.election_layers});
    if (c.clusters > 0) {
      setup.clusters = c.clusters;
    } else {
      GapStatisticOptions gap;
      gap.k_min = c.gap_min;
      gap.k_max = c.gap_max;
      gap.reference_draws = c.gap_refs;
      gap.kmeans = {c.kmeans_max_iter, c.kmeans_tol};
      auto gap_rng = round_rng.derive("gap");
      setup.clusters = estimate_cluster_count(candidates, setup.layers, gap_rng, gap);
    }
    setup.clusters = std::clamp<std::size_t>(setup.clusters, 1, candidates.size());
    setup.ready = true;
  }

  auto bu = bottom_up_election(candidates, c.initial_selectees, setup.clusters, setup.layers,
                               {c.kmeans_max_iter, c.kmeans_tol});
  std::vector<ClientId> selected = bu.selected;
  record.bottom_up = std::move(bu);
  if (c.defense == DefenseKind::snowball && round > c.vae_start_round) {
    TopDownOptions td;
    td.target = c.target_selectees;
    td.step = c.step_selectees;
    td.initial_epochs = c.vae_init_epochs;
    td.tune_epochs = c.vae_tune_epochs;
    td.hidden = c.vae_hidden;
    td.latent = c.vae_latent;
    td.train = {c.vae_lr, c.vae_momentum, c.vae_batch};
    td.standardize = c.vae_standardize;
    auto td_rng = round_rng.derive("top_down");
    auto result = top_down_election(candidates, selected, setup.layers, td, td_rng);
    selected = result.selected;
    record.top_down = std::move(result);
  }
  return selected;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RoundObserver& observer) {
  validate(config);
  using Clock = std::chrono::steady_clock;
  const auto run_start = Clock::now();
  const RngStream root(config.seed);

  const Population pop = build_population(config, root);
  auto init_rng = root.derive("model_init");
  const std::size_t n_features = pop.clean_test.dim();
  const auto n_classes = static_cast<std::size_t>(pop.clean_test.n_classes());
  MlpModel global = MlpModel::kaiming(
      {{n_features, config.hidden, Activation::relu}, {config.hidden, n_classes, Activation::identity}}, init_rng);

  ExperimentResult result;
  auto& summary = result.summary;
  summary.attackers = pop.attackers;
  const auto initial = evaluate(global, pop.clean_test, pop.triggered_test, config.target_class);
  summary.initial_ma = initial.ma;
  summary.initial_ba = initial.ba;
  summary.ma = initial.ma;
  summary.ba = initial.ba;

  ElectionSetup setup;
  double lr = config.lr0;
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    const auto round_start = Clock::now();
    RoundRecord record;
    record.round = t;
    record.learning_rate = lr;
    auto round_rng = root.derive("round", t);
    try {
      auto sample_rng = round_rng.derive("participants");
      record.participants = choose_participants(config, pop, sample_rng);

      std::vector<ModelUpdate> updates(record.participants.size());
      parallel_for(updates.size(), [&](std::size_t k) {
        const ClientId id = record.participants[k];
        LocalTrainSpec spec;
        spec.client_id = id;
        spec.round = t;
        spec.infected = pop.is_attacker[id] && config.attack != AttackKind::none;
        spec.epochs = config.local_epochs;
        spec.batch_size = config.batch_size;
        spec.sgd = SgdState(lr, config.momentum, config.weight_decay);
        auto client_rng = round_rng.derive("client", id);
        updates[k] = local_train(global, pop.client_data[id], spec, client_rng);
      });
      for (const auto& u : updates)
        if (u.infected) record.infected.push_back(u.client_id);

      record.selected = run_defense(config, updates, setup, t, round_rng, record);

      std::vector<ModelUpdate> chosen;
      for (const auto& u : updates)
        if (std::binary_search(record.selected.begin(), record.selected.end(), u.client_id)) chosen.push_back(u);
      if (!chosen.empty()) {
        global.params() += aggregate(chosen);
        record.aggregated = true;
      }

      record.metrics = selection_metrics(updates, record.selected);
      record.distances = distance_profile(updates);
    } catch (const NumericError& e) {
      rethrow_in_round(e, t);
    } catch (const ParameterError& e) {
      rethrow_in_round(e, t);
    } catch (const ShapeError& e) {
      rethrow_in_round(e, t);
    }

    const auto eval = evaluate(global, pop.clean_test, pop.triggered_test, config.target_class);
    record.metrics.ma = eval.ma;
    record.metrics.ba = eval.ba;
    record.metrics.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - round_start).count();

    if (observer) observer(record);
    result.rounds.push_back(std::move(record));
    lr *= config.lr_decay;
  }

  if (!result.rounds.empty()) {
    const auto best = std::max_element(result.rounds.begin(), result.rounds.end(), [](const auto& a, const auto& b) {
      return a.metrics.ma < b.metrics.ma;  // first maximum wins
    });
    summary.ma = best->metrics.ma;
    summary.ba = best->metrics.ba;
    summary.best_round = best->round;
    double fpr = 0.0, fnr = 0.0;
    for (const auto& r : result.rounds) {
      fpr += r.metrics.fpr;
      fnr += r.metrics.fnr;
    }
    summary.mean_fpr = fpr / static_cast<double>(result.rounds.size());
    summary.mean_fnr = fnr / static_cast<double>(result.rounds.size());
  }
  summary.cluster_count = setup.clusters;
  summary.election_layers = setup.layers;
  summary.total_wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - run_start).count();
  return result;
}

}  // namespace snowball
