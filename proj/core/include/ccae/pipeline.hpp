#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ccae/channel.hpp"
#include "ccae/config.hpp"
#include "ccae/constraints.hpp"
#include "ccae/features.hpp"
#include "ccae/metrics.hpp"
#include "ccae/nn.hpp"
#include "ccae/scenario.hpp"

namespace ccae {

/// Failure inside a named pipeline stage ("scenario", "train", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct NetworkConfig {
  std::vector<std::size_t> hidden{500, 100, 50, 20};
  std::size_t bottleneck = 2;
  Activation activation = Activation::Relu;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 400;
  std::size_t data_batch_size = 64;
  std::size_t constraint_batch_size = 64;
  // Penalties are in squared metres; these keep them comparable to the
  // reconstruction loss on unit-norm features.
  KindWeights lambdas{{3e-5, 3e-5, 3e-5, 3e-5}};
  std::uint64_t seed = 3;

  void validate() const;
};

enum class Recipe { Plain, Fad, FadMrd };

std::string_view to_string(Recipe recipe);
Recipe parse_recipe(std::string_view text);

struct ConstraintRecipeConfig {
  double anchor_weight = 1.0;
  double trajectory_weight = 1.0;
  double d_max = 0.0;  // <= 0: use the trajectory step length
  std::size_t lag_max = 1;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  ArrayGeometry array;
  ChannelConfig channel;
  ScalingMode scaling = ScalingMode::UnitNorm;
  NetworkConfig network;
  TrainConfig train;
  ConstraintRecipeConfig constraints;
  std::vector<Recipe> recipes{Recipe::Plain, Recipe::Fad, Recipe::FadMrd};
  std::vector<std::size_t> ks;  // empty: default_neighborhood_sizes(N)
  ReferenceSpace reference = ReferenceSpace::TruePositions;

  /// Defaults overridden by `kv`. Unknown keys are rejected.
  static ExperimentConfig from_key_values(const KeyValueConfig& kv);
  static ExperimentConfig load(const std::filesystem::path& path);
  KeyValueConfig to_key_values() const;
  /// FNV-1a of the canonical key/value text, 16 hex digits.
  std::string hash() const;
  void validate() const;
};

struct EpochLoss {
  double reconstruction = 0.0;  // mean batch MSE over the epoch
  double penalty = 0.0;         // mean weighted penalty per sampled constraint
};

struct TrainResult {
  Network network;
  Eigen::MatrixXd embedding;  // N x D'
  double initial_reconstruction = 0.0;  // full-data MSE before the first step
  std::vector<EpochLoss> history;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochLoss&)>;

/// Stochastic training of reconstruction loss plus constraint penalties.
/// Each step draws one data batch and, if `constraints` is non-empty, one
/// constraint batch whose mean weighted penalty gradient enters the encoder
/// through the bottleneck. Throws StageError("train") on divergence.
TrainResult train_constrained_ae(const FeatureSet& features, const ConstraintSet& constraints,
                                 const NetworkConfig& net_config, const TrainConfig& config,
                                 const EpochCallback& on_epoch = {});

/// Everything derived from the scenario/channel part of a config.
struct Dataset {
  UePlacement placement;
  CsiMatrix csi;  // noisy
  FeatureSet features;
};

Dataset generate_dataset(const ExperimentConfig& config);

ConstraintSet build_recipe_constraints(Recipe recipe, const ExperimentConfig& config,
                                       const UePlacement& placement);

Eigen::MatrixXd true_xy(const UePlacement& placement);

/// Mean Euclidean distance between anchor representations and their true (x, y).
double mean_anchor_error(const Eigen::MatrixXd& embedding, const UePlacement& placement);

struct RecipeResult {
  Recipe recipe = Recipe::Plain;
  ConstraintSet constraints;
  TrainResult training;
  MetricsReport true_space;
  MetricsReport feature_space;
  double anchor_error = 0.0;  // NaN without anchors

  const MetricsReport& report(ReferenceSpace space) const {
    return space == ReferenceSpace::TruePositions ? true_space : feature_space;
  }
};

struct ExperimentResult {
  std::string config_hash;
  Dataset dataset;
  std::vector<RecipeResult> recipes;
};

using LogSink = std::function<void(std::string_view)>;

/// Trains and evaluates one recipe on an existing dataset.
RecipeResult run_recipe(Recipe recipe, const ExperimentConfig& config, const Dataset& data,
                        const LogSink& log = {});

/// Writes positions.csv, csi.bin, features.csv, manifest.txt and config.txt.
void write_dataset(const std::filesystem::path& out_dir, const ExperimentConfig& config,
                   const Dataset& data);

/// Writes <recipe>/{constraints.csv, network.ccnn, chart.csv, loss.csv,
/// report.csv, report.txt} under out_dir.
void write_recipe(const std::filesystem::path& out_dir, const ExperimentConfig& config,
                  const Dataset& data, const RecipeResult& result);

/// Writes chart.csv for `embedding` (N x 2) aligned with `placement`.
void export_chart(const Eigen::MatrixXd& embedding, const UePlacement& placement,
                  const std::filesystem::path& path, const std::string& config_hash = {});

/// Checks that every hashed artifact under `run_dir` carries the hash from
/// manifest.txt. Throws StageError("provenance") on a mismatch and returns
/// the hash otherwise.
std::string verify_run_directory(const std::filesystem::path& run_dir);

/// generate -> synthesize -> featurize -> per recipe (constraints, train,
/// evaluate). Artifacts go to `out_dir` when non-empty.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir, const LogSink& log = {});

}  // namespace ccae
