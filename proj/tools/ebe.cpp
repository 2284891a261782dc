// ebe: example-based explanations from layer embeddings.
//
//   ebe index     --manifest M --layer L [--cache]
//   ebe attribute --manifest M --layer L --k K --queries 1,2,3 [--out F]
//   ebe sweep     --manifest M --layers 1-20 --k 1,5,10,20 --out F
//   ebe report    --manifest M --layer-list 1,7,14,20 --k K --queries 3 --images DIR --out F
//   ebe synth     --out DIR [--classes C --per-class N --dims D --spreads 0.05,5.0 --seed S]
//
// Exit codes: 0 success, 2 usage/validation, 3 I/O, 4 internal error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ebe/ebe.hpp"

namespace {

using namespace ebe;

struct RawArgs {
  std::string layers;
  std::string layer_list;
  std::string k_values;
  std::string queries;
  std::string threads;
  // synth
  std::string synth_spreads = "0.05,5.0";
  std::size_t synth_classes = 3;
  std::size_t synth_per_class = 100;
  std::size_t synth_dims = 16;
  std::uint64_t synth_seed = 42;
  std::string synth_name = "synthetic";
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("write to stdout failed");
    return;
  }
  write_text_file(path, text);
}

std::vector<std::size_t> checked_queries(const RunConfig& cfg, const DatasetManifest& m) {
  for (const auto q : cfg.query_ids) {
    if (q >= m.test_rows) {
      throw ParamError("query id " + std::to_string(q) + " out of range (test split has " +
                       std::to_string(m.test_rows) + " rows)");
    }
  }
  return cfg.query_ids;
}

void check_k(std::size_t k, const DatasetManifest& m) {
  if (k == 0 || k > m.train_rows) {
    throw ParamError("k=" + std::to_string(k) + " violates 0 < k <= n (n=" +
                     std::to_string(m.train_rows) + ")");
  }
}

int run_index(const RunConfig& cfg) {
  const auto m = load_manifest(cfg.manifest_path, cfg.lax);
  m.layer(cfg.layer);
  const auto cached = load_cached_index(m, cfg.layer, cfg.cache);
  if (cached.from_cache) {
    std::cerr << "ebe: using cached index " << cache_path(m, cfg.layer).string() << '\n';
  }
  std::cout << "layer=" << cfg.layer << " n=" << cached.index.rows()
            << " d=" << cached.index.dims() << " zero_rows=" << cached.index.zero_rows().size()
            << '\n';
  return 0;
}

std::vector<Attribution> attributions_for_layer(const RunConfig& cfg, const DatasetManifest& m,
                                                LayerId layer,
                                                const std::vector<std::size_t>& queries) {
  const NormalizedIndex index = load_train_index(m, layer);
  const EmbeddingMatrix test = load_matrix(m, layer, Split::Test);
  ExecOptions exec;
  exec.threads = cfg.threads;
  return batch_attribute(QueryBatch(test, queries), index, cfg.k, exec);
}

int run_attribute(const RunConfig& cfg) {
  const auto m = load_manifest(cfg.manifest_path, cfg.lax);
  m.layer(cfg.layer);
  check_k(cfg.k, m);
  const auto queries = checked_queries(cfg, m);
  write_output(cfg.out, to_json_lines(attributions_for_layer(cfg, m, cfg.layer, queries)));
  return 0;
}

int run_sweep_cmd(const RunConfig& cfg) {
  const auto m = load_manifest(cfg.manifest_path, cfg.lax);
  SweepOptions opts;
  opts.exec.threads = cfg.threads;
  opts.max_resident_layers = cfg.max_resident_layers;
  const auto result = run_sweep(m, {cfg.layer_list, cfg.k_values, Metric::Cosine}, opts);
  write_output(cfg.out, format_sweep_csv(result));
  return 0;
}

int run_report(const RunConfig& cfg) {
  const auto m = load_manifest(cfg.manifest_path, cfg.lax);
  for (const auto l : cfg.layer_list) m.layer(l);
  check_k(cfg.k, m);
  const auto queries = checked_queries(cfg, m);

  GallerySpec spec;
  spec.query_ids = queries;
  spec.layer_ids = cfg.layer_list;
  spec.k = cfg.k;
  spec.columns = cfg.columns;
  spec.output_path = cfg.out;
  spec.title = "Example attributions: " + m.dataset_name;
  if (!cfg.images.empty()) {
    spec.image_dir = cfg.images;
  } else if (m.image_dir) {
    spec.image_dir = m.resolve(*m.image_dir);
  } else {
    throw ParamError("no image directory: pass --images or set image_dir in the manifest");
  }

  std::vector<Attribution> all;
  std::vector<LayerId> layers = cfg.layer_list;
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  for (const auto l : layers) {
    auto part = attributions_for_layer(cfg, m, l, queries);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const auto test_labels = npy::read_labels(m.resolve(m.test_labels_path));
  write_text_file(cfg.out, render_gallery(spec, all, test_labels));
  return 0;
}

int run_synth(const RawArgs& raw, const std::string& out_dir) {
  std::vector<SyntheticLayer> layers;
  std::stringstream ss(raw.synth_spreads);
  std::string item;
  LayerId id = 1;
  while (std::getline(ss, item, ',')) {
    double spread = 0.0;
    try {
      std::size_t used = 0;
      spread = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParamError("invalid spread '" + item + "'");
    }
    layers.push_back({id, raw.synth_dims, spread, raw.synth_seed + static_cast<std::uint64_t>(id)});
    ++id;
  }
  if (layers.empty()) throw ParamError("--spreads needs at least one value");
  const auto path = write_synthetic_dataset(out_dir, raw.synth_name, raw.synth_classes,
                                            raw.synth_per_class, layers);
  std::cout << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  RawArgs raw;
  std::string synth_out;

  CLI::App app{"Example-based explanations: exact cosine k-NN attribution over layer embeddings"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  auto add_manifest = [&](CLI::App* sub) {
    sub->add_option("--manifest", cfg.manifest_path, "Dataset manifest (JSON)")->required();
    sub->add_flag("--lax", cfg.lax, "Ignore unknown manifest keys");
  };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", raw.threads, "Worker threads or 'auto' (default: $EBE_THREADS or auto)");
  };

  auto* index = app.add_subcommand("index", "Normalize one layer and print its summary");
  add_manifest(index);
  index->add_option("--layer", cfg.layer, "Layer id")->required();
  index->add_flag("--cache", cfg.cache, "Reuse or write a .norm cache beside the training matrix");

  auto* attribute = app.add_subcommand("attribute", "Emit example attributions as JSON lines");
  add_manifest(attribute);
  attribute->add_option("--layer", cfg.layer, "Layer id")->required();
  attribute->add_option("--k", cfg.k, "Number of neighbors (0 < k <= n)")->required();
  attribute->add_option("--queries", raw.queries, "Test row ids, e.g. 1,2,3 or 0-9")->required();
  attribute->add_option("--out", cfg.out, "Output file (default: stdout)");
  add_threads(attribute);

  auto* sweep = app.add_subcommand("sweep", "Accuracy over the (layer, k) grid as CSV");
  add_manifest(sweep);
  sweep->add_option("--layers", raw.layers, "Layer ids, e.g. 1-20")->required();
  sweep->add_option("--k", raw.k_values, "k values, e.g. 1,5,10,20")->required();
  sweep->add_option("--out", cfg.out, "Output CSV file")->required();
  sweep->add_option("--max-resident-layers", cfg.max_resident_layers,
                    "Layer indexes held in memory at once")
      ->check(CLI::PositiveNumber);
  add_threads(sweep);

  auto* report = app.add_subcommand("report", "Render an HTML attribution gallery");
  add_manifest(report);
  report->add_option("--layer-list", raw.layer_list, "Layer ids, e.g. 1,7,14,20")->required();
  report->add_option("--k", cfg.k, "Number of neighbors")->required();
  report->add_option("--queries", raw.queries, "Test row ids")->required();
  report->add_option("--images", cfg.images, "Directory of <split>_<index>.png images");
  report->add_option("--out", cfg.out, "Output HTML file")->required();
  report->add_option("--columns", cfg.columns, "Neighbors per gallery row")->check(CLI::PositiveNumber);
  add_threads(report);

  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-cluster dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--name", raw.synth_name, "Dataset name");
  synth->add_option("--classes", raw.synth_classes, "Number of classes")->check(CLI::PositiveNumber);
  synth->add_option("--per-class", raw.synth_per_class, "Rows per class and split")->check(CLI::PositiveNumber);
  synth->add_option("--dims", raw.synth_dims, "Embedding dimensionality")->check(CLI::PositiveNumber);
  synth->add_option("--spreads", raw.synth_spreads, "Cluster spread per layer, e.g. 0.05,5.0");
  synth->add_option("--seed", raw.synth_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ebe: error: " << msg << '\n';
    return 2;
  }

  try {
    cfg.threads = raw.threads.empty() ? default_threads() : parse_threads(raw.threads);
    if (synth->parsed()) return run_synth(raw, synth_out);
    if (!raw.queries.empty()) cfg.query_ids = parse_count_list(raw.queries, "query id", true);
    if (index->parsed()) {
      cfg.command = Command::Index;
      return run_index(cfg);
    }
    if (attribute->parsed()) {
      cfg.command = Command::Attribute;
      return run_attribute(cfg);
    }
    if (sweep->parsed()) {
      cfg.command = Command::Sweep;
      cfg.layer_list = parse_id_list(raw.layers, "layer id");
      cfg.k_values = parse_count_list(raw.k_values, "k", false);
      return run_sweep_cmd(cfg);
    }
    if (report->parsed()) {
      cfg.command = Command::Report;
      cfg.layer_list = parse_id_list(raw.layer_list, "layer id");
      return run_report(cfg);
    }
    throw InternalError("no subcommand dispatched");
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ebe: error: " << msg << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ebe: error: internal: " << e.what() << '\n';
    return 4;
  }
}
