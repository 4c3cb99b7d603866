// fieldforge: command-line front end for the crop disease pipeline library.
// Every subcommand is a thin adapter over the library; stochastic commands
// take --seed and produce byte-identical artifacts for identical seeds.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fieldforge/augment.hpp"
#include "fieldforge/corpus.hpp"
#include "fieldforge/fusion.hpp"
#include "fieldforge/mosaic.hpp"
#include "fieldforge/pipeline.hpp"
#include "fieldforge/png_io.hpp"
#include "fieldforge/rebalance.hpp"
#include "fieldforge/rng.hpp"
#include "fieldforge/schedule.hpp"
#include "fieldforge/service.hpp"

namespace fs = std::filesystem;
using namespace fieldforge;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw std::runtime_error("short write to " + path.string());
}

void emit(const std::optional<std::string>& out_path, std::string_view text) {
  if (out_path)
    write_text(*out_path, text);
  else
    std::cout << text;
}

std::vector<corpus::HighFidelityRecord>
load_labels(const std::string& path) {
  return corpus::parse_label_table(read_text(path));
}

// --images falls back to FIELDFORGE_DATA_ROOT so scripted runs can omit it.
std::string resolve_image_root(const std::string& flag_value) {
  if (!flag_value.empty())
    return flag_value;
  if (const char* env = std::getenv("FIELDFORGE_DATA_ROOT"))
    return env;
  throw std::runtime_error(
      "no image root: pass --images or set FIELDFORGE_DATA_ROOT");
}

// Built-in four-image pool so the pipeline can be exercised without any
// corpus on disk. One solid color per class, sized to the default tile.
std::vector<corpus::LabeledImage> demo_pool(int w, int h) {
  const auto solid = [&](Rgb color) {
    Image img(w, h);
    img.fill(color);
    return img;
  };
  std::vector<corpus::LabeledImage> pool;
  pool.push_back({{"demo_healthy.png", corpus::ClassLabel::healthy},
                  solid({60, 190, 60})});
  pool.push_back({{"demo_multiple.png", corpus::ClassLabel::multiple_diseases},
                  solid({190, 70, 190})});
  pool.push_back({{"demo_rust.png", corpus::ClassLabel::rust},
                  solid({200, 120, 40})});
  pool.push_back({{"demo_scab.png", corpus::ClassLabel::scab},
                  solid({220, 210, 60})});
  return pool;
}

struct PoolOptions {
  bool synthetic = false;
  std::string labels;
  std::string images;
};

void add_pool_options(CLI::App* cmd, PoolOptions& opts) {
  cmd->add_flag("--synthetic", opts.synthetic,
                "use the built-in demo images instead of a corpus");
  cmd->add_option("--labels", opts.labels, "label table CSV");
  cmd->add_option("--images", opts.images,
                  "image root (default: FIELDFORGE_DATA_ROOT)");
}

std::vector<corpus::LabeledImage> load_pool(const PoolOptions& opts, int tile_w,
                                            int tile_h) {
  if (opts.synthetic)
    return demo_pool(tile_w, tile_h);
  if (opts.labels.empty())
    throw std::runtime_error("pass --labels with --images, or --synthetic");
  const corpus::ImageStore store(resolve_image_root(opts.images));
  std::vector<corpus::LabeledImage> pool;
  for (const auto& record : load_labels(opts.labels))
    pool.push_back({record, store.load(record.image_id)});
  return pool;
}

void add_spec_options(CLI::App* cmd, mosaic::MosaicSpec& spec) {
  cmd->add_option("--width", spec.width_px, "mosaic width in pixels");
  cmd->add_option("--height", spec.height_px, "mosaic height in pixels");
  cmd->add_option("--grid-cols", spec.grid_cols, "tile columns");
  cmd->add_option("--grid-rows", spec.grid_rows, "tile rows");
  cmd->add_option("--tile-width", spec.tile_w, "tile width in pixels");
  cmd->add_option("--tile-height", spec.tile_h, "tile height in pixels");
  cmd->add_option("--soil-num", spec.soil_ratio_num,
                  "soil odds numerator (0 disables soil)");
  cmd->add_option("--soil-den", spec.soil_ratio_den, "soil odds denominator");
}

Image soil_for(const std::string& soil_path, const mosaic::MosaicSpec& spec,
               std::uint64_t seed) {
  if (!soil_path.empty())
    return read_png(soil_path);
  const int w = std::max(4 * spec.tile_w, 256);
  const int h = std::max(4 * spec.tile_h, 176);
  return mosaic::procedural_soil_texture(w, h, derive_seed(seed, 0x5011));
}

mosaic::MosaicItem load_item(const std::string& image_path,
                             const std::string& annotations_path,
                             const mosaic::MosaicSpec& spec) {
  mosaic::MosaicItem item;
  item.image = read_png(image_path);
  item.annotations = mosaic::parse_annotations(read_text(annotations_path));
  item.spec = spec;
  if (item.image.width() != spec.width_px ||
      item.image.height() != spec.height_px)
    throw std::runtime_error(image_path + " is " +
                             std::to_string(item.image.width()) + "x" +
                             std::to_string(item.image.height()) +
                             ", expected " + std::to_string(spec.width_px) +
                             "x" + std::to_string(spec.height_px) +
                             " (adjust --width/--height)");
  return item;
}

fusion::ScoredBox box_from_json(const json& row) {
  if (!row.contains("box") || !row["box"].is_array() ||
      row["box"].size() != 4)
    throw std::runtime_error("each entry needs \"box\": [x1, y1, x2, y2]");
  fusion::ScoredBox b;
  b.x1 = row["box"][0].get<double>();
  b.y1 = row["box"][1].get<double>();
  b.x2 = row["box"][2].get<double>();
  b.y2 = row["box"][3].get<double>();
  b.score = row.value("score", 1.0);
  b.label = row.value("label", 0);
  fusion::validate_box(b);
  return b;
}

json box_to_json(const fusion::ScoredBox& b) {
  return {{"box", {b.x1, b.y1, b.x2, b.y2}},
          {"score", b.score},
          {"label", b.label}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns normally on success and throws on failure;
// main maps exceptions to exit 1.

struct StatsOptions {
  std::string labels;
  bool as_json = false;
};

void run_stats(const StatsOptions& opts) {
  const auto records = load_labels(opts.labels);
  const auto dist = corpus::class_distribution(records);
  if (opts.as_json) {
    json j;
    for (const auto c : corpus::all_classes)
      j[corpus::to_string(c)] = dist.count(c);
    j["total"] = dist.total();
    std::cout << j.dump(2) << '\n';
    return;
  }
  for (const auto c : corpus::all_classes)
    std::cout << corpus::to_string(c) << ' ' << dist.count(c) << '\n';
  std::cout << "total " << dist.total() << '\n';
}

struct PlanOptions {
  std::string labels;
  std::optional<std::size_t> target;
  bool as_json = false;
};

void run_plan(const PlanOptions& opts) {
  const auto dist = corpus::class_distribution(load_labels(opts.labels));
  const auto quota = rebalance::balance_plan(dist, opts.target);
  const std::size_t goal = opts.target.value_or(dist.max_count());
  if (opts.as_json) {
    json add;
    for (const auto c : corpus::all_classes)
      add[corpus::to_string(c)] = quota.of(c);
    std::cout << json{{"target", goal},
                      {"add", std::move(add)},
                      {"total_new", quota.total()}}
                     .dump(2)
              << '\n';
    return;
  }
  for (const auto c : corpus::all_classes)
    std::cout << corpus::to_string(c) << ' ' << quota.of(c) << '\n';
  std::cout << "target " << goal << '\n';
  std::cout << "total_new " << quota.total() << '\n';
}

struct SynthesizeOptions {
  std::string labels;
  std::string images;
  std::string out;
  std::optional<std::size_t> target;
  std::uint64_t seed = 0;
  std::string from_dir;
  double jitter = 0.1;
  bool no_flip = false;
};

void run_synthesize(const SynthesizeOptions& opts) {
  const auto records = load_labels(opts.labels);
  const auto dist = corpus::class_distribution(records);
  const auto quota = rebalance::balance_plan(dist, opts.target);

  const corpus::ImageStore store(resolve_image_root(opts.images));
  const rebalance::ImageProvider provider = [&](const std::string& id) {
    return store.load(id);
  };

  std::unique_ptr<rebalance::Generator> gen;
  if (!opts.from_dir.empty()) {
    gen = std::make_unique<rebalance::DirectoryGenerator>(opts.from_dir);
  } else {
    rebalance::BuiltinGeneratorConfig cfg;
    cfg.flip = !opts.no_flip;
    cfg.brightness_jitter = opts.jitter;
    gen = std::make_unique<rebalance::BuiltinGenerator>(cfg);
  }

  const auto novel =
      rebalance::synthesize(records, provider, quota, *gen, opts.seed);

  fs::create_directories(opts.out);
  std::vector<corpus::HighFidelityRecord> manifest;
  for (const auto& s : novel) {
    write_png(s.image, fs::path(opts.out) / s.record.image_id);
    manifest.push_back(s.record);
  }
  const fs::path manifest_path = fs::path(opts.out) / "labels.csv";
  write_text(manifest_path, corpus::write_label_table(manifest));
  std::cout << "wrote " << novel.size() << " images and "
            << manifest_path.string() << '\n';
}

struct GenerateOptions {
  std::string out;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string soil;
  PoolOptions pool;
  mosaic::MosaicSpec spec;
};

void run_generate(const GenerateOptions& opts) {
  const auto pool = load_pool(opts.pool, opts.spec.tile_w, opts.spec.tile_h);
  const Image soil = soil_for(opts.soil, opts.spec, opts.seed);

  fs::create_directories(opts.out);
  for (std::size_t k = 0; k < opts.count; ++k) {
    mosaic::MosaicSpec spec = opts.spec;
    spec.rng_seed = derive_seed(opts.seed, k);
    const auto item = mosaic::generate_mosaic(pool, soil, spec);
    const std::string stem = "field_" + std::to_string(k);
    write_png(item.image, fs::path(opts.out) / (stem + ".png"));
    write_text(fs::path(opts.out) / (stem + ".csv"),
               mosaic::write_annotations(item.annotations));
  }
  std::cout << "wrote " << opts.count << " fields to " << opts.out << '\n';
}

struct AugmentOptions {
  std::string method = "cutmix";
  std::string base_image, base_annotations;
  std::string donor_image, donor_annotations;
  std::string out_image, out_annotations;
  std::vector<int> region;
  std::vector<int> fill = {0, 0, 0};
  double probability = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t draw = 0;
  mosaic::MosaicSpec spec;
};

void run_augment(const AugmentOptions& opts) {
  const auto base =
      load_item(opts.base_image, opts.base_annotations, opts.spec);

  mosaic::MosaicItem result;
  json summary;
  if (opts.method == "cutout") {
    if (opts.region.size() != 4)
      throw std::runtime_error("cutout needs --region x y w h");
    const mosaic::Bbox region{opts.region[0], opts.region[1], opts.region[2],
                              opts.region[3]};
    const Rgb fill{static_cast<std::uint8_t>(opts.fill[0]),
                   static_cast<std::uint8_t>(opts.fill[1]),
                   static_cast<std::uint8_t>(opts.fill[2])};
    result = augment::cutout(base, region, fill);
    summary = {{"method", "cutout"},
               {"region", {region.x, region.y, region.w, region.h}}};
  } else {
    if (opts.donor_image.empty() || opts.donor_annotations.empty())
      throw std::runtime_error("cutmix needs --donor-image and "
                               "--donor-annotations");
    const auto donor =
        load_item(opts.donor_image, opts.donor_annotations, opts.spec);
    if (opts.region.size() == 4) {
      const mosaic::Bbox region{opts.region[0], opts.region[1],
                                opts.region[2], opts.region[3]};
      result = augment::cutmix(base, donor, region);
      summary = {{"method", "cutmix"},
                 {"mixed", true},
                 {"region", {region.x, region.y, region.w, region.h}}};
    } else {
      augment::CutMixConfig cfg;
      cfg.probability = opts.probability;
      cfg.rng_seed = opts.seed;
      const std::vector<mosaic::MosaicItem> donors = {donor};
      const auto mix = augment::maybe_cutmix(base, donors, cfg, opts.draw);
      result = mix.item;
      summary = {{"method", "cutmix"},
                 {"mixed", mix.mixed},
                 {"region",
                  {mix.region.x, mix.region.y, mix.region.w, mix.region.h}}};
    }
  }

  write_png(result.image, opts.out_image);
  write_text(opts.out_annotations,
             mosaic::write_annotations(result.annotations));
  std::cout << summary.dump() << '\n';
}

struct FuseOptions {
  std::string in;
  std::string method;
  double iou = 0.5;
  std::size_t source_count = 1;
  std::optional<std::string> out;
};

void run_fuse(const FuseOptions& opts) {
  const auto doc = json::parse(read_text(opts.in));
  if (!doc.is_array())
    throw std::runtime_error(opts.in + " must contain a JSON array of boxes");
  std::vector<fusion::ScoredBox> boxes;
  for (const auto& row : doc)
    boxes.push_back(box_from_json(row));

  std::vector<fusion::ScoredBox> fused;
  if (opts.method == "nms") {
    fused = fusion::nms(std::move(boxes), opts.iou);
  } else {
    std::vector<std::vector<fusion::ScoredBox>> lists;
    lists.push_back(std::move(boxes));
    fused = fusion::wbf(lists, opts.iou, opts.source_count);
  }

  json out = json::array();
  for (const auto& b : fused)
    out.push_back(box_to_json(b));
  emit(opts.out, out.dump(2) + "\n");
}

struct LrDumpOptions {
  int epochs = 0;
  schedule::LrSchedule sched;
  std::optional<std::string> out;
};

void run_lr_dump(const LrDumpOptions& opts) {
  std::string csv = "epoch,lr\n";
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    csv += std::to_string(epoch);
    csv += ',';
    csv += format_double(schedule::lr_at(epoch, opts.sched));
    csv += '\n';
  }
  emit(opts.out, csv);
}

struct EvaluateOptions {
  std::string pred;
  std::string truth;
  std::string support = "predicted";
  bool as_json = false;
};

void run_evaluate(const EvaluateOptions& opts) {
  const auto pred_records = load_labels(opts.pred);
  const auto truth_records = load_labels(opts.truth);

  std::map<std::string, corpus::ClassLabel> truth_by_id;
  for (const auto& r : truth_records)
    truth_by_id[r.image_id] = r.label;

  std::vector<std::string> pred_names, truth_names;
  for (const auto& r : pred_records) {
    const auto it = truth_by_id.find(r.image_id);
    if (it == truth_by_id.end())
      throw std::runtime_error("evaluate: image '" + r.image_id +
                               "' missing from the truth table");
    pred_names.emplace_back(corpus::to_string(r.label));
    truth_names.emplace_back(corpus::to_string(it->second));
  }

  const auto cm =
      metrics::confusion(pred_names, truth_names, corpus::class_names());
  const auto mode = opts.support == "actual" ? metrics::SupportMode::actual
                                             : metrics::SupportMode::predicted;
  const auto per_class = metrics::per_class_metrics(cm, mode);
  const double acc = metrics::accuracy(cm);

  if (opts.as_json) {
    std::cout << json{{"accuracy", acc},
                      {"support_mode", opts.support},
                      {"confusion", metrics::to_json(cm)},
                      {"per_class", metrics::to_json(per_class)}}
                     .dump(2)
              << '\n';
    return;
  }
  std::printf("accuracy %.4f (%llu/%llu)\n", acc,
              static_cast<unsigned long long>(cm.trace()),
              static_cast<unsigned long long>(cm.total()));
  std::printf("%-18s %9s %9s %9s %9s\n", "class", "precision", "recall", "f1",
              "support");
  for (const auto& m : per_class)
    std::printf("%-18s %9.4f %9.4f %9.4f %9llu\n", m.class_name.c_str(),
                m.precision, m.recall, m.f1,
                static_cast<unsigned long long>(m.support));
}

struct SimulateOptions {
  std::size_t count = 20;
  std::uint64_t seed = 0;
  double miss = 0.0;
  double false_alarm = 0.0;
  double error = 0.0;
  bool correlated = false;
  std::string model = "oracle";
  bool tta = false;
  double iou = 0.5;
  unsigned threads = 1;
  bool diagnoses = false;
  PoolOptions pool;
  mosaic::MosaicSpec spec;
  std::optional<std::string> out;
};

void run_simulate(const SimulateOptions& opts) {
  const auto pool = load_pool(opts.pool, opts.spec.tile_w, opts.spec.tile_h);
  const Image soil = soil_for("", opts.spec, opts.seed);

  std::vector<corpus::HighFidelityRecord> records;
  for (const auto& ex : pool)
    records.push_back(ex.record);
  const auto lookup = pipeline::make_label_lookup(records);

  const auto make_field = [&](std::uint64_t field_seed) {
    mosaic::MosaicSpec spec = opts.spec;
    spec.rng_seed = field_seed;
    return mosaic::generate_mosaic(pool, soil, spec);
  };
  std::vector<mosaic::MosaicItem> fields;
  fields.reserve(opts.count);
  for (std::size_t k = 0; k < opts.count; ++k)
    fields.push_back(make_field(derive_seed(opts.seed, k)));

  pipeline::IdentifierFn identifier;
  pipeline::ClassifierFn classifier;
  if (opts.model == "oracle") {
    const std::uint64_t identifier_seed = derive_seed(opts.seed, 0x1d);
    identifier =
        pipeline::oracle_identifier(opts.miss, opts.false_alarm,
                                    identifier_seed);
    if (opts.correlated)
      classifier = pipeline::nested_error_classifier(opts.miss,
                                                     identifier_seed, lookup);
    else
      classifier = pipeline::oracle_classifier(
          opts.error, derive_seed(opts.seed, 0xc1), lookup);
  } else {
    std::vector<mosaic::MosaicItem> training;
    for (std::size_t k = 0; k < 6; ++k)
      training.push_back(make_field(derive_seed(opts.seed, 0x7e55, k)));
    const auto tile_model = pipeline::TileIdentifier::train(training);
    const auto centroid_model = pipeline::CentroidClassifier::train(pool);

    if (opts.tta) {
      const mosaic::MosaicSpec spec = opts.spec;
      identifier = pipeline::with_tta(
          [tile_model, spec](const Image& img) {
            return tile_model.detect({img, {}, spec});
          },
          0.55);
    } else {
      identifier = [tile_model](const mosaic::MosaicItem& item, std::size_t) {
        return tile_model.detect(item);
      };
    }

    std::map<std::string, Image> close_ups;
    for (const auto& ex : pool)
      close_ups[ex.record.image_id] = ex.pixels;
    classifier = pipeline::make_image_classifier(
        [centroid_model](const Image& img) {
          return centroid_model.predict(img);
        },
        [close_ups](const std::string& id) { return close_ups.at(id); });
  }

  pipeline::RunConfig cfg;
  cfg.iou_threshold = opts.iou;
  cfg.collect_diagnoses = opts.diagnoses;
  cfg.threads = opts.threads;
  cfg.models_thread_safe = opts.threads > 1;
  const auto report =
      pipeline::run_pipeline(identifier, classifier, lookup, fields, cfg);
  emit(opts.out, pipeline::to_json(report, opts.diagnoses).dump(2) + "\n");
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;
  PoolOptions pool;
  mosaic::MosaicSpec spec;
};

volatile std::sig_atomic_t g_stop_requested = 0;

void handle_stop_signal(int) { g_stop_requested = 1; }

// The identifier baseline scans whatever grid of default tiles fits the
// uploaded image; trailing remainder pixels are ignored.
mosaic::MosaicSpec spec_for_upload(const Image& img,
                                   const mosaic::MosaicSpec& base) {
  if (img.width() < base.tile_w || img.height() < base.tile_h)
    throw std::runtime_error("image smaller than one " +
                             std::to_string(base.tile_w) + "x" +
                             std::to_string(base.tile_h) + " tile");
  mosaic::MosaicSpec spec = base;
  spec.grid_cols = img.width() / base.tile_w;
  spec.grid_rows = img.height() / base.tile_h;
  spec.width_px = spec.grid_cols * base.tile_w;
  spec.height_px = spec.grid_rows * base.tile_h;
  return spec;
}

void run_serve(const ServeOptions& opts) {
  const auto pool = load_pool(opts.pool, opts.spec.tile_w, opts.spec.tile_h);
  const Image soil = soil_for("", opts.spec, opts.seed);

  std::vector<mosaic::MosaicItem> training;
  for (std::size_t k = 0; k < 6; ++k) {
    mosaic::MosaicSpec spec = opts.spec;
    spec.rng_seed = derive_seed(opts.seed, 0x7e55, k);
    training.push_back(mosaic::generate_mosaic(pool, soil, spec));
  }
  const auto tile_model = pipeline::TileIdentifier::train(training);
  const auto centroid_model = pipeline::CentroidClassifier::train(pool);

  service::Bindings bindings;
  bindings.classifier = [centroid_model](const Image& img) {
    return centroid_model.predict(img);
  };
  const mosaic::MosaicSpec base_spec = opts.spec;
  bindings.identifier = [tile_model, base_spec](const Image& img) {
    return tile_model.detect({img, {}, spec_for_upload(img, base_spec)});
  };

  service::PredictionService server(std::move(bindings));
  server.start(opts.host, opts.port);
  std::cout << "listening on " << opts.host << ':' << server.port()
            << std::endl;

  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  while (!g_stop_requested)
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"crop disease pipeline toolkit"};
  app.require_subcommand(1);

  StatsOptions stats;
  auto* stats_cmd =
      app.add_subcommand("stats", "per-class counts of a label table");
  stats_cmd->add_option("--labels", stats.labels, "label table CSV")
      ->required();
  stats_cmd->add_flag("--json", stats.as_json, "JSON output");

  PlanOptions plan;
  auto* plan_cmd =
      app.add_subcommand("plan", "per-class quotas to reach a uniform count");
  plan_cmd->add_option("--labels", plan.labels, "label table CSV")
      ->required();
  plan_cmd->add_option("--target", plan.target,
                       "per-class target (default: majority class count)");
  plan_cmd->add_flag("--json", plan.as_json, "JSON output");

  SynthesizeOptions synth;
  auto* synth_cmd = app.add_subcommand(
      "synthesize", "fill class quotas with generated images");
  synth_cmd->add_option("--labels", synth.labels, "label table CSV")
      ->required();
  synth_cmd->add_option("--images", synth.images,
                        "image root (default: FIELDFORGE_DATA_ROOT)");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--target", synth.target, "per-class target count");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--from-dir", synth.from_dir,
                        "serve pre-generated images from <dir>/<class>/*.png");
  synth_cmd->add_option("--jitter", synth.jitter,
                        "brightness jitter amplitude");
  synth_cmd->add_flag("--no-flip", synth.no_flip, "disable mirroring");

  GenerateOptions gen;
  auto* gen_cmd =
      app.add_subcommand("generate", "render annotated mock-field mosaics");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--count", gen.count, "number of mosaics");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--soil", gen.soil,
                      "soil texture PNG (default: procedural)");
  add_pool_options(gen_cmd, gen.pool);
  add_spec_options(gen_cmd, gen.spec);

  AugmentOptions aug;
  auto* aug_cmd =
      app.add_subcommand("augment", "cutmix or cutout on a mosaic pair");
  aug_cmd->add_option("--method", aug.method, "cutmix or cutout")
      ->check(CLI::IsMember({"cutmix", "cutout"}));
  aug_cmd->add_option("--base-image", aug.base_image, "base mosaic PNG")
      ->required();
  aug_cmd
      ->add_option("--base-annotations", aug.base_annotations,
                   "base annotation CSV")
      ->required();
  aug_cmd->add_option("--donor-image", aug.donor_image, "donor mosaic PNG");
  aug_cmd->add_option("--donor-annotations", aug.donor_annotations,
                      "donor annotation CSV");
  aug_cmd->add_option("--out-image", aug.out_image, "output PNG")->required();
  aug_cmd
      ->add_option("--out-annotations", aug.out_annotations,
                   "output annotation CSV")
      ->required();
  aug_cmd->add_option("--region", aug.region, "x y w h in pixels")
      ->expected(4);
  aug_cmd->add_option("--fill", aug.fill, "cutout fill color r g b")
      ->expected(3);
  aug_cmd->add_option("--probability", aug.probability,
                      "cutmix probability");
  aug_cmd->add_option("--seed", aug.seed, "RNG seed");
  aug_cmd->add_option("--draw", aug.draw, "draw index within the seed");
  add_spec_options(aug_cmd, aug.spec);

  FuseOptions fuse;
  auto* fuse_cmd =
      app.add_subcommand("fuse", "merge detection boxes with NMS or WBF");
  fuse_cmd->add_option("--in", fuse.in, "JSON box list")->required();
  fuse_cmd->add_option("--method", fuse.method, "nms or wbf")
      ->required()
      ->check(CLI::IsMember({"nms", "wbf"}));
  fuse_cmd->add_option("--iou", fuse.iou, "IoU threshold");
  fuse_cmd->add_option("--source-count", fuse.source_count,
                       "number of models behind the list (wbf)");
  fuse_cmd->add_option("--out", fuse.out, "output file (default: stdout)");

  LrDumpOptions lr;
  auto* lr_cmd =
      app.add_subcommand("lr-dump", "emit an epoch,lr schedule CSV");
  lr_cmd->add_option("--epochs", lr.epochs, "number of epochs")->required();
  lr_cmd->add_option("--lr-start", lr.sched.lr_start, "warmup start rate");
  lr_cmd->add_option("--lr-max", lr.sched.lr_max, "peak rate");
  lr_cmd->add_option("--lr-min", lr.sched.lr_min, "decay floor");
  lr_cmd->add_option("--ramp", lr.sched.ramp_epochs, "warmup epochs");
  lr_cmd->add_option("--sustain", lr.sched.sustain_epochs,
                     "epochs held at the peak");
  lr_cmd->add_option("--decay", lr.sched.decay, "per-epoch decay factor");
  lr_cmd->add_option("--out", lr.out, "output file (default: stdout)");

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "score a prediction table against a truth table");
  eval_cmd->add_option("--pred", eval.pred, "predicted label table CSV")
      ->required();
  eval_cmd->add_option("--truth", eval.truth, "truth label table CSV")
      ->required();
  eval_cmd->add_option("--support", eval.support,
                       "support column semantics")
      ->check(CLI::IsMember({"predicted", "actual"}));
  eval_cmd->add_flag("--json", eval.as_json, "JSON output");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "run the two-stage pipeline on generated fields");
  sim_cmd->add_option("--count", sim.count, "number of fields");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--miss", sim.miss, "identifier miss rate (oracle)");
  sim_cmd->add_option("--false-alarm", sim.false_alarm,
                      "identifier false alarm rate (oracle)");
  sim_cmd->add_option("--error", sim.error, "classifier error rate (oracle)");
  sim_cmd->add_flag("--correlated", sim.correlated,
                    "classifier fails exactly where the identifier misses");
  sim_cmd->add_option("--model", sim.model, "oracle or baseline")
      ->check(CLI::IsMember({"oracle", "baseline"}));
  sim_cmd->add_flag("--tta", sim.tta,
                    "fuse baseline detections over flips (baseline only)");
  sim_cmd->add_option("--iou", sim.iou, "match IoU threshold");
  sim_cmd->add_option("--threads", sim.threads, "worker threads");
  sim_cmd->add_flag("--diagnoses", sim.diagnoses,
                    "include per-tile diagnoses in the report");
  add_pool_options(sim_cmd, sim.pool);
  add_spec_options(sim_cmd, sim.spec);
  sim_cmd->add_option("--out", sim.out, "output file (default: stdout)");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand(
      "serve", "HTTP prediction service with the baseline models");
  serve_cmd->add_option("--host", serve.host, "bind address");
  serve_cmd->add_option("--port", serve.port, "port (0 picks a free one)");
  serve_cmd->add_option("--seed", serve.seed, "RNG seed");
  add_pool_options(serve_cmd, serve.pool);
  add_spec_options(serve_cmd, serve.spec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*stats_cmd)
      run_stats(stats);
    else if (*plan_cmd)
      run_plan(plan);
    else if (*synth_cmd)
      run_synthesize(synth);
    else if (*gen_cmd)
      run_generate(gen);
    else if (*aug_cmd)
      run_augment(aug);
    else if (*fuse_cmd)
      run_fuse(fuse);
    else if (*lr_cmd)
      run_lr_dump(lr);
    else if (*eval_cmd)
      run_evaluate(eval);
    else if (*sim_cmd)
      run_simulate(sim);
    else if (*serve_cmd)
      run_serve(serve);
  } catch (const std::exception& e) {
    std::cerr << "fieldforge: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
