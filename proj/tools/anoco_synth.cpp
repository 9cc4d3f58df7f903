#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "anoco/synthetic.hpp"
#include "anoco/tensor_io.hpp"
#include "cli/inputs.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic multi-modal patch-feature benchmark as .anof files"};
  anoco::SyntheticConfig config;
  std::filesystem::path out;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", config.seed, "Generator seed");
  app.add_option("--normal", config.normal_queries, "Normal query images")->check(CLI::NonNegativeNumber);
  app.add_option("--anomalous", config.anomalous_queries, "Anomalous query images")->check(CLI::NonNegativeNumber);
  app.add_option("--references", config.reference_images, "Reference images")->check(CLI::PositiveNumber);
  app.add_option("--dim", config.dim, "Feature dimension")->check(CLI::PositiveNumber);
  app.add_option("--grid", config.grid, "Patches per image side")->check(CLI::Range(3, 4096));
  app.add_option("--mode-norm", config.mode_norm, "Norm of the normal-mode prototypes")->check(CLI::PositiveNumber);
  app.add_option("--noise", config.noise, "Per-dimension noise standard deviation")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  try {
    const auto bench = anoco::make_synthetic(config);
    for (const char* sub : {"refs", "queries", "masks"}) fs::create_directories(out / sub);
    for (const auto& r : bench.references) {
      anoco::write_tensor(out / "refs" / (r.image_id + ".anof"), anoco::tensor_from_feature_grid(r));
    }
    std::string labels = "image_id,label\n";
    for (const auto& q : bench.queries) {
      const auto& id = q.features.image_id;
      anoco::write_tensor(out / "queries" / (id + ".anof"), anoco::tensor_from_feature_grid(q.features));
      const auto mask = anoco::upscale_mask(q.patch_mask, bench.image_rows(), bench.image_cols());
      anoco::write_tensor(out / "masks" / (id + ".anof"), anoco::tensor_from_mask(mask));
      labels += id + "," + std::to_string(q.label) + "\n";
    }
    anoco::cli::write_text_atomic(out / "labels.csv", labels);
    anoco::cli::write_text_atomic(out / "anoco.cfg", "image-size=" + std::to_string(bench.image_rows()) + "x" +
                                                         std::to_string(bench.image_cols()) + "\n");
  } catch (const anoco::Error& e) {
    std::cerr << "error: " << anoco::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
