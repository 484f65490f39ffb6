#include "fieldforge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fieldforge/error.hpp"
#include "fieldforge/random.hpp"

namespace fieldforge {

std::string to_string(FieldMode m) { return m == FieldMode::Occupancy ? "occupancy" : "sdf"; }

FieldMode field_mode_from_string(const std::string& s) {
  if (s == "occupancy") return FieldMode::Occupancy;
  if (s == "sdf") return FieldMode::Sdf;
  throw ConfigError("unknown mode '" + s + "'");
}

FinalActivation activation_for(FieldMode m) {
  return m == FieldMode::Occupancy ? FinalActivation::Sigmoid : FinalActivation::Linear;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (proxies_per_step < 1) throw ConfigError("proxies_per_step must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (!(schedule.step_max_initial > 0.0)) throw ConfigError("step_max_initial must be > 0");
  if (!(schedule.final_ratio > 0.0) || schedule.final_ratio > 1.0) throw ConfigError("final_ratio must be in (0, 1]");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"proxies_per_step", c.proxies_per_step},
          {"lambda", c.lambda},
          {"lr", c.lr},
          {"step_max_initial", c.schedule.step_max_initial},
          {"final_ratio", c.schedule.final_ratio},
          {"seed", c.seed},
          {"mode", to_string(c.mode)},
          {"resample_proxies", c.resample_proxies}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.proxies_per_step = j.value("proxies_per_step", c.proxies_per_step);
    c.lambda = j.value("lambda", c.lambda);
    c.lr = j.value("lr", c.lr);
    c.schedule.step_max_initial = j.value("step_max_initial", c.schedule.step_max_initial);
    c.schedule.final_ratio = j.value("final_ratio", c.schedule.final_ratio);
    c.seed = j.value("seed", c.seed);
    if (j.contains("mode")) c.mode = field_mode_from_string(j.at("mode").get<std::string>());
    c.resample_proxies = j.value("resample_proxies", c.resample_proxies);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

RpropState::RpropState(std::size_t n, double initial_step, double step_max_)
    : step(n, initial_step), prev_grad(n, 0.0), step_max(step_max_) {}

template <typename T>
void rprop_step(std::span<T> params, std::span<const double> grad, RpropState& state) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.step.size() != n || state.prev_grad.size() != n)
    throw InputError("rprop: gradient/state size does not match the parameters");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(grad[i])) throw NumericError("non-finite gradient at parameter " + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) {
    double g = grad[i];
    const double prod = g * state.prev_grad[i];
    double s = state.step[i];
    if (prod > 0.0) {
      s *= state.eta_plus;
    } else if (prod < 0.0) {
      s *= state.eta_minus;
      g = 0.0;
    }
    s = std::clamp(s, state.step_min, state.step_max);
    state.step[i] = s;
    if (g > 0.0) {
      params[i] = static_cast<T>(params[i] - s);
    } else if (g < 0.0) {
      params[i] = static_cast<T>(params[i] + s);
    }
    state.prev_grad[i] = g;
  }
}

double cosine_anneal(double step_max_initial, std::size_t step, std::size_t total_steps, double final_ratio) {
  if (total_steps == 0) throw InputError("cosine_anneal: total_steps must be >= 1");
  if (step > total_steps) throw InputError("cosine_anneal: step beyond total_steps");
  const double fin = step_max_initial * final_ratio;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return fin + (step_max_initial - fin) * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : history)
    hist.push_back({{"mse", h.mse}, {"gdir", h.gdir}, {"total", h.total}, {"lambda", h.lambda}});
  nlohmann::json j = {
      {"steps", history.size()}, {"checkpoint_path", checkpoint_path}, {"diverged", diverged}, {"history", hist}};
  if (diverged) j["divergence_reason"] = divergence_reason;
  if (!history.empty()) {
    j["final_mse"] = history.back().mse;
    j["final_gdir"] = history.back().gdir;
  }
  return j;
}

nlohmann::json TrainReport::timing_json() const {
  return {{"epoch_seconds", epoch_seconds},
          {"gdir_seconds", gdir_seconds},
          {"total_seconds", total_seconds},
          {"gdir_overhead_fraction", gdir_overhead_fraction}};
}

std::string TrainReport::history_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,mse,gdir,total,lambda\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    out << i << ',' << h.mse << ',' << h.gdir << ',' << h.total << ',' << h.lambda << '\n';
  }
  return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

template <typename T>
TrainResult<T> train_from(SirenNet<T> net, const PointSet5D& dataset, const TrainConfig& config,
                          const StepCallback& on_step) {
  config.validate();
  if (dataset.size() == 0) throw InputError("train: empty dataset");
  if (net.config().final_activation != activation_for(config.mode))
    throw ConfigError("final activation does not match the training mode");

  TrainResult<T> result{std::move(net), {}};
  TrainReport& report = result.report;
  const std::size_t per_epoch = (dataset.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = per_epoch * static_cast<std::size_t>(config.epochs);
  RpropState state(result.net.parameter_count(), config.lr, config.schedule.step_max_initial);
  std::vector<double> grad(result.net.parameter_count());
  std::vector<T> last_good(result.net.parameters().begin(), result.net.parameters().end());
  std::vector<double> coords, targets, proxies;
  if (config.lambda > 0.0 && !config.resample_proxies)
    proxies = lhs_proxies(config.proxies_per_step, proxy_seed(config.seed, 0));

  const auto run_start = Clock::now();
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs && !report.diverged; ++epoch) {
    const auto epoch_start = Clock::now();
    const auto plan = batches(dataset.size(), config.batch_size, derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (const auto& indices : plan) {
      PointBatch batch = gather(dataset, indices, coords, targets);
      std::fill(grad.begin(), grad.end(), 0.0);
      LossBreakdown lb;
      lb.lambda = config.lambda;
      lb.mse = accumulate_mse_gradient(result.net, batch, grad);
      if (config.lambda > 0.0) {
        const auto g0 = Clock::now();
        if (config.resample_proxies) proxies = lhs_proxies(config.proxies_per_step, proxy_seed(config.seed, step));
        lb.gdir = accumulate_gdir_gradient(result.net, proxies, config.lambda, grad);
        report.gdir_seconds += seconds_since(g0);
      }
      lb.total = lb.mse + config.lambda * lb.gdir;
      if (!std::isfinite(lb.total)) {
        report.diverged = true;
        report.divergence_reason = "non-finite loss at step " + std::to_string(step);
        break;
      }
      std::copy(result.net.parameters().begin(), result.net.parameters().end(), last_good.begin());
      report.history.push_back(lb);
      state.step_max = cosine_anneal(config.schedule.step_max_initial, step, total_steps, config.schedule.final_ratio);
      try {
        rprop_step<T>(result.net.parameters(), grad, state);
      } catch (const NumericError& e) {
        report.diverged = true;
        report.divergence_reason = e.what();
        break;
      }
      if (on_step) on_step(step, total_steps, lb);
      ++step;
    }
    report.epoch_seconds.push_back(seconds_since(epoch_start));
  }
  if (report.diverged) std::copy(last_good.begin(), last_good.end(), result.net.parameters().begin());
  report.total_seconds = seconds_since(run_start);
  const double rest = report.total_seconds - report.gdir_seconds;
  report.gdir_overhead_fraction = rest > 0.0 ? report.gdir_seconds / rest : 0.0;
  return result;
}

template <typename T>
TrainResult<T> train(const PointSet5D& dataset, const TrainConfig& config, const SirenConfig& net_config,
                     const StepCallback& on_step) {
  config.validate();
  return train_from(SirenNet<T>::initialized(net_config, derive_seed(config.seed, "init")), dataset, config, on_step);
}

template <typename T>
OmegaSearchResult omega_grid_search(const PointSet5D& dataset, const std::vector<OmegaCandidate>& candidates,
                                    const TrainConfig& config, const SirenConfig& net_config, double subsample) {
  if (candidates.empty()) throw ConfigError("omega grid search: no candidates");
  if (!(subsample > 0.0) || subsample > 0.99) throw ConfigError("omega grid search: subsample must be in (0, 0.99]");
  const std::size_t n = dataset.size();
  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(subsample * static_cast<double>(n))));
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.01 * static_cast<double>(n))));
  if (n_train + n_val > n) throw InputError("omega grid search: dataset too small to split");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(config.seed, "omega-split"));
  shuffle(std::span<std::size_t>(order), rng);
  auto take = [&](std::size_t from, std::size_t count) {
    PointSet5D ps;
    ps.bounds = dataset.bounds;
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                 order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(idx.begin(), idx.end());
    gather(dataset, idx, ps.coords, ps.targets);
    return ps;
  };
  const PointSet5D train_set = take(0, n_train);
  const PointSet5D val_set = take(n_train, n_val);

  OmegaSearchResult result;
  double best_loss = 0.0;
  for (const auto& cand : candidates) {
    SirenConfig nc = net_config;
    nc.omega_first = cand.omega_first;
    nc.omega_hidden = cand.omega_hidden;
    auto run = train<T>(train_set, config, nc);
    const double loss = loss_mse(run.net, val_set.all());
    result.validation_mse.emplace_back(cand, loss);
    const bool better = result.validation_mse.size() == 1 || loss < best_loss ||
                        (loss == best_loss && (cand.omega_first < result.best.omega_first ||
                                               (cand.omega_first == result.best.omega_first &&
                                                cand.omega_hidden < result.best.omega_hidden)));
    if (better) {
      best_loss = loss;
      result.best = cand;
    }
  }
  return result;
}

#define FIELDFORGE_INSTANTIATE(T)                                                                             \
  template void rprop_step(std::span<T>, std::span<const double>, RpropState&);                               \
  template TrainResult<T> train(const PointSet5D&, const TrainConfig&, const SirenConfig&, const StepCallback&); \
  template TrainResult<T> train_from(SirenNet<T>, const PointSet5D&, const TrainConfig&, const StepCallback&);   \
  template OmegaSearchResult omega_grid_search<T>(const PointSet5D&, const std::vector<OmegaCandidate>&,       \
                                                  const TrainConfig&, const SirenConfig&, double);

FIELDFORGE_INSTANTIATE(float)
FIELDFORGE_INSTANTIATE(double)

#undef FIELDFORGE_INSTANTIATE

}  // namespace fieldforge
