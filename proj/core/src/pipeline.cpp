#include "ccae/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ccae/io.hpp"
#include "ccae/random.hpp"

namespace ccae {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kDataStream = 2;
constexpr std::uint64_t kConstraintStream = 3;
constexpr Eigen::Index kEvalChunk = 512;

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? "," : "") + parts[k];
  return out;
}

std::string_view to_string(ChannelMode mode) { return mode == ChannelMode::LoS ? "los" : "nlos"; }

ChannelMode parse_channel_mode(std::string_view text) {
  if (text == "los") return ChannelMode::LoS;
  if (text == "nlos") return ChannelMode::NLoS;
  throw std::invalid_argument("unknown channel mode: " + std::string(text));
}

std::string_view to_string(TrajectoryShape shape) {
  return shape == TrajectoryShape::Straight ? "straight" : "s_curve";
}

TrajectoryShape parse_trajectory_shape(std::string_view text) {
  if (text == "straight") return TrajectoryShape::Straight;
  if (text == "s_curve") return TrajectoryShape::SCurve;
  throw std::invalid_argument("unknown trajectory shape: " + std::string(text));
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::Sgd;
  if (text == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer: " + std::string(text));
}

void read_area(const KeyValueConfig& kv, const std::string& prefix, Area& a) {
  a.x_min = kv.get_double(prefix + ".x_min", a.x_min);
  a.x_max = kv.get_double(prefix + ".x_max", a.x_max);
  a.y_min = kv.get_double(prefix + ".y_min", a.y_min);
  a.y_max = kv.get_double(prefix + ".y_max", a.y_max);
}

void write_area(KeyValueConfig& kv, const std::string& prefix, const Area& a) {
  kv.set(prefix + ".x_min", format_double(a.x_min));
  kv.set(prefix + ".x_max", format_double(a.x_max));
  kv.set(prefix + ".y_min", format_double(a.y_min));
  kv.set(prefix + ".y_max", format_double(a.y_max));
}

std::vector<std::size_t> parse_sizes(const std::vector<std::string>& parts) {
  std::vector<std::size_t> out;
  for (const auto& p : parts) {
    const double v = parse_double(p);
    if (!(v >= 0.0) || v != std::floor(v)) throw std::invalid_argument("expected a count, got '" + p + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::string> format_sizes(const std::vector<std::size_t>& v) {
  std::vector<std::string> out;
  for (std::size_t x : v) out.push_back(std::to_string(x));
  return out;
}

Matrix to_row_major(const Eigen::MatrixXd& m) { return Matrix(m); }

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = source.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

double full_reconstruction_loss(const Network& net, const Matrix& x) {
  double total = 0.0;
  for (Eigen::Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Eigen::Index rows = std::min(kEvalChunk, x.rows() - start);
    const Matrix chunk = x.middleRows(start, rows);
    total += (forward(net, chunk).reconstruction - chunk).squaredNorm();
  }
  return total / static_cast<double>(x.rows());
}

Eigen::MatrixXd encode_all(const Network& net, const Matrix& x) {
  Eigen::MatrixXd y(x.rows(), net.bottleneck_width());
  for (Eigen::Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Eigen::Index rows = std::min(kEvalChunk, x.rows() - start);
    y.middleRows(start, rows) = encode(net, x.middleRows(start, rows));
  }
  return y;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

// --- configuration ----------------------------------------------------------

std::string_view to_string(Recipe recipe) {
  switch (recipe) {
    case Recipe::Plain:
      return "plain";
    case Recipe::Fad:
      return "fad";
    case Recipe::FadMrd:
      return "fad_mrd";
  }
  return "?";
}

Recipe parse_recipe(std::string_view text) {
  if (text == "plain") return Recipe::Plain;
  if (text == "fad") return Recipe::Fad;
  if (text == "fad_mrd") return Recipe::FadMrd;
  throw std::invalid_argument("unknown recipe: " + std::string(text));
}

void TrainConfig::validate() const {
  if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (data_batch_size < 1 || constraint_batch_size < 1)
    throw std::invalid_argument("train: batch sizes must be >= 1");
  for (double l : lambdas.values)
    if (!(l >= 0.0)) throw std::invalid_argument("train: lambdas must be >= 0");
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueConfig& kv) {
  ExperimentConfig c;
  ScenarioConfig& s = c.scenario;
  read_area(kv, "scenario.area", s.area);
  c.channel.scatterer_area = s.area;
  if (kv.contains("scenario.bs_position")) {
    const auto parts = kv.get_list("scenario.bs_position", {});
    if (parts.size() != 3) throw std::invalid_argument("scenario.bs_position needs three values");
    s.bs_position = {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
  }
  s.user_height = kv.get_double("scenario.user_height", s.user_height);
  s.num_users = kv.get_uint("scenario.num_users", s.num_users);
  s.anchor_fraction = kv.get_double("scenario.anchor_fraction", s.anchor_fraction);
  s.seed = kv.get_uint("scenario.seed", s.seed);
  TrajectoryConfig& t = s.trajectory;
  t.start_x = kv.get_double("scenario.trajectory.start_x", t.start_x);
  t.start_y = kv.get_double("scenario.trajectory.start_y", t.start_y);
  t.step_length = kv.get_double("scenario.trajectory.step_length", t.step_length);
  t.num_points = kv.get_uint("scenario.trajectory.num_points", t.num_points);
  t.shape = parse_trajectory_shape(kv.get_string("scenario.trajectory.shape", std::string(to_string(t.shape))));
  t.heading_deg = kv.get_double("scenario.trajectory.heading_deg", t.heading_deg);
  t.turn_amplitude_deg = kv.get_double("scenario.trajectory.turn_amplitude_deg", t.turn_amplitude_deg);
  t.turn_period = kv.get_double("scenario.trajectory.turn_period", t.turn_period);

  c.array.num_antennas = kv.get_uint("array.num_antennas", c.array.num_antennas);
  c.array.element_spacing = kv.get_double("array.element_spacing", c.array.element_spacing);
  c.array.carrier_frequency = kv.get_double("array.carrier_frequency", c.array.carrier_frequency);

  ChannelConfig& ch = c.channel;
  ch.mode = parse_channel_mode(kv.get_string("channel.mode", std::string(to_string(ch.mode))));
  ch.num_scatterers = kv.get_uint("channel.num_scatterers", ch.num_scatterers);
  read_area(kv, "channel.scatterer_area", ch.scatterer_area);
  ch.scatterer_z_min = kv.get_double("channel.scatterer_z_min", ch.scatterer_z_min);
  ch.scatterer_z_max = kv.get_double("channel.scatterer_z_max", ch.scatterer_z_max);
  ch.path_loss_exponent = kv.get_double("channel.path_loss_exponent", ch.path_loss_exponent);
  ch.reflection_gain = kv.get_double("channel.reflection_gain", ch.reflection_gain);
  ch.reference_distance = kv.get_double("channel.reference_distance", ch.reference_distance);
  ch.snr_db = kv.get_double("channel.snr_db", ch.snr_db);
  ch.seed = kv.get_uint("channel.seed", ch.seed);

  c.scaling = parse_scaling_mode(kv.get_string("features.scaling", std::string(to_string(c.scaling))));

  NetworkConfig& n = c.network;
  n.hidden = parse_sizes(kv.get_list("network.hidden", format_sizes(n.hidden)));
  n.bottleneck = kv.get_uint("network.bottleneck", n.bottleneck);
  n.activation = parse_activation(kv.get_string("network.activation", std::string(to_string(n.activation))));

  TrainConfig& tr = c.train;
  tr.optimizer.kind = parse_optimizer(kv.get_string("train.optimizer", std::string(to_string(tr.optimizer.kind))));
  tr.optimizer.learning_rate = kv.get_double("train.learning_rate", tr.optimizer.learning_rate);
  tr.optimizer.beta1 = kv.get_double("train.beta1", tr.optimizer.beta1);
  tr.optimizer.beta2 = kv.get_double("train.beta2", tr.optimizer.beta2);
  tr.optimizer.epsilon = kv.get_double("train.epsilon", tr.optimizer.epsilon);
  tr.epochs = kv.get_uint("train.epochs", tr.epochs);
  tr.data_batch_size = kv.get_uint("train.data_batch_size", tr.data_batch_size);
  tr.constraint_batch_size = kv.get_uint("train.constraint_batch_size", tr.constraint_batch_size);
  tr.seed = kv.get_uint("train.seed", tr.seed);
  for (auto kind : {ConstraintKind::FAD, ConstraintKind::FRD, ConstraintKind::MAD, ConstraintKind::MRD}) {
    std::string key = "train.lambda_" + std::string(to_string(kind));
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    tr.lambdas[kind] = kv.get_double(key, tr.lambdas[kind]);
  }

  ConstraintRecipeConfig& cr = c.constraints;
  cr.anchor_weight = kv.get_double("constraints.anchor_weight", cr.anchor_weight);
  cr.trajectory_weight = kv.get_double("constraints.trajectory_weight", cr.trajectory_weight);
  cr.d_max = kv.get_double("constraints.d_max", cr.d_max);
  cr.lag_max = kv.get_uint("constraints.lag_max", cr.lag_max);

  if (kv.contains("experiment.recipes")) {
    c.recipes.clear();
    for (const auto& r : kv.get_list("experiment.recipes", {})) c.recipes.push_back(parse_recipe(r));
  }
  c.ks = parse_sizes(kv.get_list("metrics.k", {}));
  c.reference = parse_reference_space(kv.get_string("metrics.reference", std::string(to_string(c.reference))));

  if (const auto unused = kv.unused_keys(); !unused.empty())
    throw std::invalid_argument("unknown config key: " + unused.front());
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_key_values(KeyValueConfig::load(path));
}

KeyValueConfig ExperimentConfig::to_key_values() const {
  KeyValueConfig kv;
  const ScenarioConfig& s = scenario;
  write_area(kv, "scenario.area", s.area);
  kv.set("scenario.bs_position", format_double(s.bs_position.x()) + "," +
                                     format_double(s.bs_position.y()) + "," +
                                     format_double(s.bs_position.z()));
  kv.set("scenario.user_height", format_double(s.user_height));
  kv.set("scenario.num_users", std::to_string(s.num_users));
  kv.set("scenario.anchor_fraction", format_double(s.anchor_fraction));
  kv.set("scenario.seed", std::to_string(s.seed));
  const TrajectoryConfig& t = s.trajectory;
  kv.set("scenario.trajectory.start_x", format_double(t.start_x));
  kv.set("scenario.trajectory.start_y", format_double(t.start_y));
  kv.set("scenario.trajectory.step_length", format_double(t.step_length));
  kv.set("scenario.trajectory.num_points", std::to_string(t.num_points));
  kv.set("scenario.trajectory.shape", std::string(to_string(t.shape)));
  kv.set("scenario.trajectory.heading_deg", format_double(t.heading_deg));
  kv.set("scenario.trajectory.turn_amplitude_deg", format_double(t.turn_amplitude_deg));
  kv.set("scenario.trajectory.turn_period", format_double(t.turn_period));

  kv.set("array.num_antennas", std::to_string(array.num_antennas));
  kv.set("array.element_spacing", format_double(array.element_spacing));
  kv.set("array.carrier_frequency", format_double(array.carrier_frequency));

  const ChannelConfig& ch = channel;
  kv.set("channel.mode", std::string(to_string(ch.mode)));
  kv.set("channel.num_scatterers", std::to_string(ch.num_scatterers));
  write_area(kv, "channel.scatterer_area", ch.scatterer_area);
  kv.set("channel.scatterer_z_min", format_double(ch.scatterer_z_min));
  kv.set("channel.scatterer_z_max", format_double(ch.scatterer_z_max));
  kv.set("channel.path_loss_exponent", format_double(ch.path_loss_exponent));
  kv.set("channel.reflection_gain", format_double(ch.reflection_gain));
  kv.set("channel.reference_distance", format_double(ch.reference_distance));
  kv.set("channel.snr_db", format_double(ch.snr_db));
  kv.set("channel.seed", std::to_string(ch.seed));

  kv.set("features.scaling", std::string(to_string(scaling)));

  kv.set("network.hidden", join(format_sizes(network.hidden)));
  kv.set("network.bottleneck", std::to_string(network.bottleneck));
  kv.set("network.activation", std::string(to_string(network.activation)));

  kv.set("train.optimizer", std::string(to_string(train.optimizer.kind)));
  kv.set("train.learning_rate", format_double(train.optimizer.learning_rate));
  kv.set("train.beta1", format_double(train.optimizer.beta1));
  kv.set("train.beta2", format_double(train.optimizer.beta2));
  kv.set("train.epsilon", format_double(train.optimizer.epsilon));
  kv.set("train.epochs", std::to_string(train.epochs));
  kv.set("train.data_batch_size", std::to_string(train.data_batch_size));
  kv.set("train.constraint_batch_size", std::to_string(train.constraint_batch_size));
  kv.set("train.seed", std::to_string(train.seed));
  kv.set("train.lambda_fad", format_double(train.lambdas[ConstraintKind::FAD]));
  kv.set("train.lambda_frd", format_double(train.lambdas[ConstraintKind::FRD]));
  kv.set("train.lambda_mad", format_double(train.lambdas[ConstraintKind::MAD]));
  kv.set("train.lambda_mrd", format_double(train.lambdas[ConstraintKind::MRD]));

  kv.set("constraints.anchor_weight", format_double(constraints.anchor_weight));
  kv.set("constraints.trajectory_weight", format_double(constraints.trajectory_weight));
  kv.set("constraints.d_max", format_double(constraints.d_max));
  kv.set("constraints.lag_max", std::to_string(constraints.lag_max));

  std::vector<std::string> recipe_names;
  for (Recipe r : recipes) recipe_names.emplace_back(to_string(r));
  kv.set("experiment.recipes", join(recipe_names));
  kv.set("metrics.k", join(format_sizes(ks)));
  kv.set("metrics.reference", std::string(to_string(reference)));
  return kv;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_key_values().to_string())));
  return buf;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  array.validate();
  channel.validate();
  train.validate();
  if (scenario.trajectory.num_points == 1)
    throw std::invalid_argument("scenario.trajectory.num_points must be 0 or >= 2");
  if (network.bottleneck < 1 || network.bottleneck >= array.num_antennas)
    throw std::invalid_argument("network.bottleneck must be in [1, D)");
  if (recipes.empty()) throw std::invalid_argument("experiment.recipes is empty");
  for (Recipe r : recipes) {
    if (r == Recipe::FadMrd && scenario.trajectory.num_points < 2)
      throw std::invalid_argument("recipe fad_mrd needs a trajectory");
    if (r != Recipe::Plain && network.bottleneck != 2)
      throw std::invalid_argument("anchor recipes need a two-dimensional chart");
  }
  if (constraints.lag_max < 1) throw std::invalid_argument("constraints.lag_max must be >= 1");
  for (std::size_t k : ks) check_neighborhood_size(scenario.num_users, k);
}

// --- training ---------------------------------------------------------------

TrainResult train_constrained_ae(const FeatureSet& features, const ConstraintSet& constraints,
                                 const NetworkConfig& net_config, const TrainConfig& config,
                                 const EpochCallback& on_epoch) {
  config.validate();
  const auto n = static_cast<std::size_t>(features.size());
  if (n == 0) throw StageError("train", "empty feature set");
  constraints.validate(n);

  const Matrix x = to_row_major(features.values);
  const auto widths = autoencoder_widths(static_cast<std::size_t>(features.dim()), net_config.hidden,
                                         net_config.bottleneck);
  TrainResult result;
  result.network =
      init_network(widths, net_config.activation, Rng::derive(config.seed, kInitStream).next_u64());
  Network& net = result.network;
  OptimizerState state = OptimizerState::create(net, config.optimizer.kind);

  Rng data_rng = Rng::derive(config.seed, kDataStream);
  Rng constraint_rng = Rng::derive(config.seed, kConstraintStream);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  result.initial_reconstruction = full_reconstruction_loss(net, x);
  const double cb = static_cast<double>(config.constraint_batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[data_rng.index(k)]);

    double recon_sum = 0.0;
    double penalty_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += config.data_batch_size) {
      const std::size_t rows = std::min(config.data_batch_size, n - start);
      const Matrix batch = gather_rows(x, std::span(order).subspan(start, rows));
      LossAndGradients lg = loss_and_gradients(net, batch);
      recon_sum += lg.loss * static_cast<double>(rows);

      if (!constraints.empty()) {
        const auto picked = sample_constraints(constraints, config.constraint_batch_size, constraint_rng);
        const auto refs = referenced_indices(constraints, picked);
        const Matrix inputs = gather_rows(x, refs);
        const Matrix y = encode(net, inputs);
        BottleneckGradients acc =
            accumulate_bottleneck_gradients(constraints, picked, refs, y, config.lambdas);
        acc.gradients /= cb;
        lg.gradients += encoder_gradients(net, inputs, acc.gradients);
        penalty_sum += acc.penalty / cb;
      }
      optimizer_step(net, lg.gradients, state, config.optimizer);
      ++steps;
    }

    EpochLoss loss{recon_sum / static_cast<double>(n), penalty_sum / static_cast<double>(steps)};
    if (!std::isfinite(loss.reconstruction) || !std::isfinite(loss.penalty))
      throw StageError("train", "training diverged at epoch " + std::to_string(epoch) +
                                    " (reconstruction " + format_double(loss.reconstruction) +
                                    ", penalty " + format_double(loss.penalty) + ")");
    result.history.push_back(loss);
    if (on_epoch) on_epoch(epoch, loss);
  }

  result.embedding = encode_all(net, x);
  if (!result.embedding.allFinite()) throw StageError("train", "non-finite embedding");
  return result;
}

// --- experiment ---------------------------------------------------------------

Dataset generate_dataset(const ExperimentConfig& config) {
  Dataset d;
  d.placement = stage("scenario", [&] { return generate_placement(config.scenario); });
  ArrayGeometry array = config.array;
  array.position = config.scenario.bs_position;
  const CsiMatrix clean = stage("channel", [&] { return synthesize_csi(d.placement, array, config.channel); });
  d.csi = stage("channel", [&] { return add_noise(clean, config.channel.snr_db, config.channel.seed); });
  d.features = stage("features", [&] { return extract_features(d.csi, config.scaling); });
  return d;
}

ConstraintSet build_recipe_constraints(Recipe recipe, const ExperimentConfig& config,
                                       const UePlacement& placement) {
  ConstraintSet set;
  if (recipe == Recipe::Plain) return set;
  set = build_anchor_constraints(placement.anchor_indices, placement.positions,
                                 config.constraints.anchor_weight);
  if (recipe == Recipe::FadMrd) {
    const double d_max = config.constraints.d_max > 0.0 ? config.constraints.d_max
                                                        : config.scenario.trajectory.step_length;
    set.append(build_trajectory_constraints(placement.trajectory_indices, d_max,
                                            config.constraints.lag_max,
                                            config.constraints.trajectory_weight));
  }
  return set;
}

Eigen::MatrixXd true_xy(const UePlacement& placement) {
  Eigen::MatrixXd xy(static_cast<Eigen::Index>(placement.size()), 2);
  for (std::size_t n = 0; n < placement.size(); ++n) {
    xy(static_cast<Eigen::Index>(n), 0) = placement.positions[n].x();
    xy(static_cast<Eigen::Index>(n), 1) = placement.positions[n].y();
  }
  return xy;
}

double mean_anchor_error(const Eigen::MatrixXd& embedding, const UePlacement& placement) {
  if (placement.anchor_indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t id : placement.anchor_indices) {
    const auto r = static_cast<Eigen::Index>(id);
    total += std::hypot(embedding(r, 0) - placement.positions[id].x(),
                        embedding(r, 1) - placement.positions[id].y());
  }
  return total / static_cast<double>(placement.anchor_indices.size());
}

RecipeResult run_recipe(Recipe recipe, const ExperimentConfig& config, const Dataset& data,
                        const LogSink& log) {
  RecipeResult r;
  r.recipe = recipe;
  const std::string name(to_string(recipe));
  r.constraints = stage("constraints", [&] { return build_recipe_constraints(recipe, config, data.placement); });

  EpochCallback on_epoch;
  if (log) {
    const std::size_t every = std::max<std::size_t>(1, config.train.epochs / 10);
    on_epoch = [&](std::size_t epoch, const EpochLoss& loss) {
      if ((epoch + 1) % every == 0 || epoch + 1 == config.train.epochs)
        log("[" + name + "] epoch " + std::to_string(epoch + 1) + "/" +
            std::to_string(config.train.epochs) + " reconstruction=" +
            format_double(loss.reconstruction) + " penalty=" + format_double(loss.penalty));
    };
  }
  r.training = stage("train", [&] {
    return train_constrained_ae(data.features, r.constraints, config.network, config.train, on_epoch);
  });

  stage("evaluate", [&] {
    const std::vector<std::size_t> ks =
        config.ks.empty() ? default_neighborhood_sizes(data.placement.size()) : config.ks;
    r.true_space = evaluate_embedding(true_xy(data.placement), r.training.embedding, ks,
                                      ReferenceSpace::TruePositions);
    r.feature_space = evaluate_embedding(data.features.values, r.training.embedding, ks,
                                         ReferenceSpace::FeatureSpace);
    r.anchor_error = mean_anchor_error(r.training.embedding, data.placement);
    return 0;
  });
  return r;
}

void write_dataset(const fs::path& out_dir, const ExperimentConfig& config, const Dataset& data) {
  stage("io", [&] {
    fs::create_directories(out_dir);
    const io::Provenance prov{config.hash()};
    {
      std::ofstream cfg(out_dir / "config.txt");
      cfg << "# config_hash=" << *prov.config_hash << '\n' << config.to_key_values().to_string();
      if (!cfg) throw std::runtime_error("cannot write config.txt");
    }
    io::write_positions(out_dir / "positions.csv", data.placement, prov);
    io::write_csi_binary(out_dir / "csi.bin", data.csi);
    io::write_features(out_dir / "features.csv", data.features, prov);
    std::ofstream manifest(out_dir / "manifest.txt");
    manifest << "config_hash = " << *prov.config_hash << '\n'
             << "csi.bin = " << *prov.config_hash << '\n';
    if (!manifest) throw std::runtime_error("cannot write manifest.txt");
    return 0;
  });
}

void write_recipe(const fs::path& out_dir, const ExperimentConfig& config, const Dataset& data,
                  const RecipeResult& result) {
  stage("io", [&] {
    const fs::path dir = out_dir / std::string(to_string(result.recipe));
    fs::create_directories(dir);
    const io::Provenance prov{config.hash()};
    io::write_constraints(dir / "constraints.csv", result.constraints, prov);
    io::write_network(dir / "network.ccnn", result.training.network);
    io::write_chart(dir / "chart.csv", result.training.embedding, data.placement, prov);
    {
      std::ofstream loss(dir / "loss.csv");
      loss << "# config_hash=" << *prov.config_hash << '\n' << "epoch,reconstruction,penalty\n";
      loss << "init," << format_double(result.training.initial_reconstruction) << ",\n";
      for (std::size_t e = 0; e < result.training.history.size(); ++e)
        loss << e + 1 << ',' << format_double(result.training.history[e].reconstruction) << ','
             << format_double(result.training.history[e].penalty) << '\n';
    }
    const MetricsReport& primary = result.report(config.reference);
    const MetricsReport& secondary =
        result.report(config.reference == ReferenceSpace::TruePositions ? ReferenceSpace::FeatureSpace
                                                                         : ReferenceSpace::TruePositions);
    const std::vector<MetricsReport> reports{primary, secondary};
    io::write_report(dir / "report.csv", reports, prov);
    std::ofstream txt(dir / "report.txt");
    txt << "# config_hash=" << *prov.config_hash << '\n'
        << "recipe = " << to_string(result.recipe) << '\n'
        << "scaling = " << to_string(config.scaling) << '\n'
        << "lambda_fad = " << format_double(config.train.lambdas[ConstraintKind::FAD]) << '\n'
        << "lambda_mrd = " << format_double(config.train.lambdas[ConstraintKind::MRD]) << '\n'
        << "constraint_batch_size = " << config.train.constraint_batch_size << '\n'
        << "constraints.FAD = " << result.constraints.count(ConstraintKind::FAD) << '\n'
        << "constraints.MRD = " << result.constraints.count(ConstraintKind::MRD) << '\n'
        << "anchor_error = " << format_double(result.anchor_error) << '\n'
        << io::format_report(primary) << io::format_report(secondary);
    std::ofstream manifest(out_dir / "manifest.txt", std::ios::app);
    manifest << to_string(result.recipe) << "/network.ccnn = " << *prov.config_hash << '\n';
    return 0;
  });
}

void export_chart(const Eigen::MatrixXd& embedding, const UePlacement& placement,
                  const fs::path& path, const std::string& config_hash) {
  io::Provenance prov;
  if (!config_hash.empty()) prov.config_hash = config_hash;
  io::write_chart(path, embedding, placement, prov);
}

std::string verify_run_directory(const fs::path& run_dir) {
  const KeyValueConfig manifest = stage("provenance", [&] { return KeyValueConfig::load(run_dir / "manifest.txt"); });
  const std::string expected = manifest.get_string("config_hash", "");
  if (expected.empty()) throw StageError("provenance", "manifest.txt has no config_hash");
  for (const auto& [key, value] : manifest.entries())
    if (value != expected) throw StageError("provenance", key + " has hash " + value + ", expected " + expected);

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".csv" || ext == ".txt") &&
        entry.path().filename() != "manifest.txt")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string first;
    std::getline(in, first);
    const std::string prefix = "# config_hash=";
    if (first.rfind(prefix, 0) != 0) continue;
    const std::string got = trim(std::string_view(first).substr(prefix.size()));
    if (got != expected)
      throw StageError("provenance", file.string() + " has hash " + got + ", expected " + expected);
  }
  return expected;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                                const LogSink& log) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  ExperimentResult result;
  result.config_hash = config.hash();
  if (log) log("config " + result.config_hash + ": generating dataset");
  result.dataset = generate_dataset(config);
  if (!out_dir.empty()) write_dataset(out_dir, config, result.dataset);
  for (Recipe recipe : config.recipes) {
    if (log) log("training recipe " + std::string(to_string(recipe)));
    result.recipes.push_back(run_recipe(recipe, config, result.dataset, log));
    if (!out_dir.empty()) write_recipe(out_dir, config, result.dataset, result.recipes.back());
    if (log) log(io::format_report(result.recipes.back().report(config.reference)));
  }
  return result;
}

}  // namespace ccae
