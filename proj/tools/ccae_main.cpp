// ccae: channel charting with representation-constrained autoencoders.
//
//   ccae generate  --config F --out DIR
//   ccae featurize --csi FILE --out FILE [--scaling unit_norm|standardize]
//   ccae train     --config F --recipe plain|fad|fad_mrd --out DIR
//   ccae evaluate  --chart FILE --positions FILE --k LIST --out FILE
//   ccae run       --config F --out DIR

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccae/config.hpp"
#include "ccae/io.hpp"
#include "ccae/metrics.hpp"
#include "ccae/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void log_line(std::string_view line) { std::cerr << line << (line.ends_with('\n') ? "" : "\n"); }

ccae::ExperimentConfig load_config(const std::string& path) {
  try {
    return path.empty() ? ccae::ExperimentConfig{} : ccae::ExperimentConfig::load(path);
  } catch (const std::exception& e) {
    throw ccae::StageError("config", e.what());
  }
}

int cmd_generate(const std::string& config_path, const fs::path& out) {
  const auto config = load_config(config_path);
  const auto data = ccae::generate_dataset(config);
  ccae::write_dataset(out, config, data);
  std::cout << "wrote " << data.placement.size() << " users to " << out.string() << '\n';
  return 0;
}

int cmd_featurize(const fs::path& csi_path, const fs::path& out, const std::string& scaling) {
  const ccae::CsiMatrix csi = [&] {
    try {
      return ccae::io::read_csi(csi_path);
    } catch (const std::exception& e) {
      throw ccae::StageError("io", e.what());
    }
  }();
  const auto features = [&] {
    try {
      return ccae::extract_features(csi, ccae::parse_scaling_mode(scaling));
    } catch (const std::exception& e) {
      throw ccae::StageError("features", e.what());
    }
  }();
  try {
    ccae::io::write_features(out, features);
  } catch (const std::exception& e) {
    throw ccae::StageError("io", e.what());
  }
  std::cout << "wrote " << features.size() << " x " << features.dim() << " features to "
            << out.string() << '\n';
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& recipe_name, const fs::path& out) {
  auto config = load_config(config_path);
  const ccae::Recipe recipe = [&] {
    try {
      return ccae::parse_recipe(recipe_name);
    } catch (const std::exception& e) {
      throw ccae::StageError("config", e.what());
    }
  }();
  config.recipes = {recipe};
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw ccae::StageError("config", e.what());
  }
  const auto data = ccae::generate_dataset(config);
  ccae::write_dataset(out, config, data);
  const auto result = ccae::run_recipe(recipe, config, data, log_line);
  ccae::write_recipe(out, config, data, result);
  std::cout << ccae::io::format_report(result.report(config.reference));
  return 0;
}

int cmd_evaluate(const fs::path& chart_path, const fs::path& positions_path,
                 const fs::path& features_path, const std::string& k_list, const fs::path& out) {
  ccae::io::Chart chart;
  ccae::UePlacement placement;
  ccae::io::Provenance positions_prov;
  try {
    chart = ccae::io::read_chart(chart_path);
    placement = ccae::io::read_positions(positions_path, &positions_prov);
  } catch (const std::exception& e) {
    throw ccae::StageError("io", e.what());
  }
  if (chart.provenance.config_hash && positions_prov.config_hash &&
      *chart.provenance.config_hash != *positions_prov.config_hash)
    throw ccae::StageError("provenance", "chart and positions come from different configs (" +
                                             *chart.provenance.config_hash + " vs " +
                                             *positions_prov.config_hash + ")");
  if (static_cast<std::size_t>(chart.embedding.rows()) != placement.size())
    throw ccae::StageError("evaluate", "chart and positions differ in size");

  std::vector<std::size_t> ks;
  try {
    for (const auto& part : ccae::split(k_list, ',')) {
      const std::string p = ccae::trim(part);
      if (!p.empty()) ks.push_back(std::stoul(p));
    }
  } catch (const std::exception&) {
    throw ccae::StageError("config", "invalid --k list: " + k_list);
  }
  if (ks.empty()) ks = ccae::default_neighborhood_sizes(placement.size());

  Eigen::MatrixXd reference = ccae::true_xy(placement);
  auto space = ccae::ReferenceSpace::TruePositions;
  if (!features_path.empty()) {
    ccae::io::Provenance features_prov;
    try {
      reference = ccae::io::read_features(features_path, &features_prov).values;
    } catch (const std::exception& e) {
      throw ccae::StageError("io", e.what());
    }
    if (chart.provenance.config_hash && features_prov.config_hash &&
        *chart.provenance.config_hash != *features_prov.config_hash)
      throw ccae::StageError("provenance", "chart and features come from different configs");
    if (reference.rows() != chart.embedding.rows())
      throw ccae::StageError("evaluate", "chart and features differ in size");
    space = ccae::ReferenceSpace::FeatureSpace;
  }

  const ccae::MetricsReport report = [&] {
    try {
      return ccae::evaluate_embedding(reference, chart.embedding, ks, space);
    } catch (const std::exception& e) {
      throw ccae::StageError("evaluate", e.what());
    }
  }();
  try {
    ccae::io::write_report(out, std::span(&report, 1), chart.provenance);
  } catch (const std::exception& e) {
    throw ccae::StageError("io", e.what());
  }
  std::cout << ccae::io::format_report(report);
  return 0;
}

int cmd_run(const std::string& config_path, const fs::path& out) {
  const auto config = load_config(config_path);
  const auto result = ccae::run_experiment(config, out, log_line);
  for (const auto& r : result.recipes) {
    std::cout << "recipe = " << ccae::to_string(r.recipe) << '\n'
              << ccae::io::format_report(r.report(config.reference));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel charting with representation-constrained autoencoders"};
  app.require_subcommand(1);

  std::string config_path, out, csi, scaling = "unit_norm", recipe, chart, positions, features, k_list;

  auto* generate = app.add_subcommand("generate", "Generate positions, CSI and features");
  generate->add_option("--config", config_path, "Experiment config (key = value)");
  generate->add_option("--out", out, "Output directory")->required();

  auto* featurize = app.add_subcommand("featurize", "Extract features from a CSI file");
  featurize->add_option("--csi", csi, "CSI file (binary CCSI or csi.csv)")->required();
  featurize->add_option("--out", out, "Output features.csv")->required();
  featurize->add_option("--scaling", scaling, "unit_norm or standardize");

  auto* train = app.add_subcommand("train", "Train one recipe");
  train->add_option("--config", config_path, "Experiment config (key = value)");
  train->add_option("--recipe", recipe, "plain, fad or fad_mrd")->required();
  train->add_option("--out", out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a chart against true positions or features");
  evaluate->add_option("--chart", chart, "chart.csv")->required();
  evaluate->add_option("--positions", positions, "positions.csv")->required();
  evaluate->add_option("--features", features, "features.csv; scores against feature space instead");
  evaluate->add_option("--k", k_list, "Comma-separated neighborhood sizes");
  evaluate->add_option("--out", out, "Output report.csv")->required();

  auto* run = app.add_subcommand("run", "Full pipeline over all configured recipes");
  run->add_option("--config", config_path, "Experiment config (key = value)");
  run->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(config_path, out);
    if (featurize->parsed()) return cmd_featurize(csi, out, scaling);
    if (train->parsed()) return cmd_train(config_path, recipe, out);
    if (evaluate->parsed()) return cmd_evaluate(chart, positions, features, k_list, out);
    if (run->parsed()) return cmd_run(config_path, out);
  } catch (const ccae::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [internal] " << e.what() << '\n';
    return 1;
  }
  return 2;
}
