#include "satclass/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "satclass/report.hpp"
#include "satclass/synth.hpp"

namespace satclass {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json parse_json_file(const fs::path& path) {
  try {
    return ordered_json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::Parse, path.string() + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json config_json(const TrainOptions& o) {
  ordered_json c;
  c["method"] = to_string(o.method);
  if (o.method == Method::Mbact) {
    const auto& b = o.probit.bart;
    c["ntree"] = b.num_trees;
    c["k"] = b.k;
    c["numcut"] = b.numcut;
    c["ndpost"] = b.ndpost;
    c["nskip"] = b.nskip;
    c["keepevery"] = b.keepevery;
    c["alpha"] = b.alpha;
    c["beta"] = b.beta;
    c["binary_offset"] = o.probit.binary_offset;
  } else {
    c["minsplit"] = o.cart.minsplit;
    c["xval"] = o.cart.xval;
    c["cp"] = o.cart.cp;
    c["cp_fixed"] = o.cp_fixed;
  }
  return c;
}

/// Pixel-row dataset of the classes with at least one sample, relabeled 1..m.
LabeledDataset present_classes(const LabeledDataset& data, const std::vector<ClassId>& ids) {
  std::vector<int> remap(static_cast<std::size_t>(data.num_classes) + 1, 0);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    remap[static_cast<std::size_t>(ids[j])] = static_cast<int>(j + 1);
    names.push_back(data.class_names[static_cast<std::size_t>(ids[j] - 1)]);
  }
  LabelVector labels(data.size());
  for (Index i = 0; i < data.size(); ++i) labels(i) = remap[static_cast<std::size_t>(data.labels(i))];
  return make_dataset(data.features, std::move(labels), static_cast<int>(ids.size()), std::move(names));
}

Eigen::MatrixXi integer_matrix(const Eigen::MatrixXd& m, const fs::path& where) {
  Eigen::MatrixXi out(m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != std::round(m(r, c))) {
        throw Error(ErrorCategory::Parse, where.string() + ": non-integer label at row " + std::to_string(r + 1));
      }
      out(r, c) = static_cast<int>(m(r, c));
    }
  }
  return out;
}

struct AlignedPoints {
  Eigen::MatrixXd probs;  ///< N x n
  LabelVector truth;
  std::vector<std::string> class_names;
  Index rows = 0;
  Index cols = 0;
};

AlignedPoints align_truth(const fs::path& probs_dir, const fs::path& truth_path) {
  const auto maps = read_probability_maps(probs_dir);
  const SampleTable truth = read_sample_table(truth_path);
  if (!truth.has_pixels()) {
    throw Error(ErrorCategory::Config, truth_path.string() + ": reference samples need row,col coordinates");
  }
  const int n = static_cast<int>(maps.size());
  AlignedPoints out;
  out.probs.resize(truth.size(), n);
  out.truth = truth.labels;
  out.rows = maps.front().rows();
  out.cols = maps.front().cols();
  for (Index i = 0; i < truth.size(); ++i) {
    const auto& px = truth.pixels[static_cast<std::size_t>(i)];
    if (px.row < 0 || px.col < 0 || px.row >= maps.front().rows() || px.col >= maps.front().cols()) {
      throw Error(ErrorCategory::Dimension, "reference pixel (" + std::to_string(px.row) + "," +
                                                std::to_string(px.col) + ") is outside the probability maps");
    }
    if (truth.labels(i) < 1 || truth.labels(i) > n) {
      throw Error(ErrorCategory::LabelRange, "reference label " + std::to_string(truth.labels(i)) +
                                                 " outside 1.." + std::to_string(n));
    }
    for (int k = 0; k < n; ++k) out.probs(i, k) = maps[static_cast<std::size_t>(k)](px.row, px.col);
  }
  const fs::path map_json = probs_dir / "map.json";
  if (fs::exists(map_json)) {
    const auto j = parse_json_file(map_json);
    if (j.contains("class_names")) out.class_names = j.at("class_names").get<std::vector<std::string>>();
  }
  if (static_cast<int>(out.class_names.size()) != n) {
    out.class_names.clear();
    for (int k = 1; k <= n; ++k) out.class_names.push_back("class_" + std::to_string(k));
  }
  return out;
}

}  // namespace

const char* to_string(Method method) { return method == Method::Mbact ? "mbact" : "cart"; }

Method parse_method(const std::string& text) {
  if (text == "mbact") return Method::Mbact;
  if (text == "cart") return Method::Cart;
  throw Error(ErrorCategory::Config, "unknown method '" + text + "' (expected mbact or cart)");
}

GroupBy parse_group_by(const std::string& text) {
  if (text == "truth") return GroupBy::Truth;
  if (text == "predicted") return GroupBy::Predicted;
  throw Error(ErrorCategory::Config, "unknown grouping '" + text + "' (expected truth or predicted)");
}

std::vector<io::Rgb> class_palette(int num_classes) {
  static const io::Rgb base[] = {
      {230, 25, 75},   // red
      {0, 130, 200},   // blue
      {60, 180, 75},   // green
      {255, 225, 25},  // yellow
      {145, 30, 180},  // purple
      {245, 130, 48},  // orange
      {128, 128, 128}, // grey
  };
  std::vector<io::Rgb> palette;
  std::set<io::Rgb> used;
  for (int k = 0; k < num_classes && k < 7; ++k) {
    palette.push_back(base[k]);
    used.insert(base[k]);
  }
  for (unsigned step = 1; static_cast<int>(palette.size()) < num_classes; ++step) {
    const io::Rgb c{static_cast<std::uint8_t>((step * 97u) % 256u), static_cast<std::uint8_t>((step * 57u + 80u) % 256u),
                    static_cast<std::uint8_t>((step * 151u + 160u) % 256u)};
    if (used.insert(c).second) palette.push_back(c);
  }
  return palette;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

TrainedBundle train_bundle(const LabeledDataset& data, const TrainOptions& options) {
  if (!options.seed) throw Error(ErrorCategory::Config, "a seed is required for training");
  TrainedBundle bundle;
  bundle.method = options.method;
  bundle.num_classes = data.num_classes;
  bundle.class_names = data.class_names;
  const auto counts = data.class_counts();
  for (int k = 1; k <= data.num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k - 1)] > 0) bundle.class_ids.push_back(k);
  }
  if (bundle.class_ids.size() < 2) throw Error(ErrorCategory::Data, "training samples cover fewer than two classes");

  if (options.method == Method::Mbact) {
    ProbitConfig config = options.probit;
    config.bart.seed = *options.seed;
    const LabeledDataset sub = present_classes(data, bundle.class_ids);
    std::vector<std::uint64_t> keys(bundle.class_ids.begin(), bundle.class_ids.end());
    bundle.mbact = fit_mbact(sub, config, keys, options.parallel);
  } else {
    options.cart.validate();
    const CartTree full = grow_cart(data, options.cart);
    double cp = options.cart.cp;
    if (!options.cp_fixed) {
      Rng rng(*options.seed);
      cp = std::max(cp, select_cp(data, options.cart, rng));
    }
    bundle.cart = prune_cart(full, cp);
  }
  return bundle;
}

void write_bundle(const fs::path& dir, const TrainedBundle& bundle, const std::string& run_json) {
  fs::create_directories(dir);
  ordered_json j;
  j["format"] = "satclass-bundle";
  j["version"] = 1;
  j["method"] = to_string(bundle.method);
  j["num_classes"] = bundle.num_classes;
  j["class_names"] = bundle.class_names;
  j["class_ids"] = bundle.class_ids;
  j["band_names"] = bundle.band_names;
  if (bundle.method == Method::Mbact) {
    write_mbact_bundle(dir / "model", *bundle.mbact);
    j["model"] = "model";
  } else {
    std::ostringstream out;
    write_cart_tree(out, *bundle.cart);
    io::write_file_atomic(dir / "cart.model", out.str());
    j["model"] = "cart.model";
  }
  io::write_file_atomic(dir / "bundle.json", j.dump(2) + "\n");
  io::write_file_atomic(dir / "run.json", run_json);
}

TrainedBundle read_bundle(const fs::path& dir) {
  const fs::path manifest = dir / "bundle.json";
  if (!fs::exists(manifest)) throw Error(ErrorCategory::Io, manifest.string() + ": no such file");
  const auto j = parse_json_file(manifest);
  TrainedBundle bundle;
  try {
    if (j.at("format").get<std::string>() != "satclass-bundle") throw Error(ErrorCategory::Parse, "not a model bundle");
    bundle.method = parse_method(j.at("method").get<std::string>());
    bundle.num_classes = j.at("num_classes").get<int>();
    bundle.class_names = j.at("class_names").get<std::vector<std::string>>();
    bundle.class_ids = j.at("class_ids").get<std::vector<ClassId>>();
    bundle.band_names = j.at("band_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::Parse, manifest.string() + ": " + e.what());
  }
  for (const ClassId k : bundle.class_ids) {
    if (k < 1 || k > bundle.num_classes) throw Error(ErrorCategory::Parse, manifest.string() + ": class id out of range");
  }
  if (bundle.method == Method::Mbact) {
    bundle.mbact = read_mbact_bundle(dir / "model");
    if (bundle.mbact->num_classes() != static_cast<int>(bundle.class_ids.size())) {
      throw Error(ErrorCategory::Parse, "bundle class ids do not match the stored models");
    }
  } else {
    std::istringstream in(io::read_text_file(dir / "cart.model"));
    bundle.cart = read_cart_tree(in);
    if (bundle.cart->num_classes() != bundle.num_classes) {
      throw Error(ErrorCategory::Parse, "cart model class count does not match the bundle");
    }
  }
  return bundle;
}

Eigen::MatrixXd bundle_probabilities(const TrainedBundle& bundle, const FeatureMatrix& x) {
  if (bundle.method == Method::Cart) return cart_probability_matrix(*bundle.cart, x);
  const Eigen::MatrixXd raw = raw_class_score_matrix(*bundle.mbact, x);
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(x.rows(), bundle.num_classes);
  for (Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd p = normalize_scores(raw.row(i).transpose());
    for (std::size_t j = 0; j < bundle.class_ids.size(); ++j) {
      probs(i, bundle.class_ids[j] - 1) = p(static_cast<Index>(j));
    }
  }
  return probs;
}

void write_map_artifacts(const fs::path& dir, const ClassifiedMap& map, const std::vector<std::string>& class_names) {
  fs::create_directories(dir);
  const int n = map.num_classes();
  if (n > 255) throw Error(ErrorCategory::Range, "label maps hold at most 255 classes");
  const auto palette = class_palette(n);
  io::write_file_atomic(dir / "labels.pgm", io::pgm_text(map.labels));
  std::vector<io::Rgb> pixels;
  pixels.reserve(static_cast<std::size_t>(map.rows() * map.cols()));
  for (Index r = 0; r < map.rows(); ++r) {
    for (Index c = 0; c < map.cols(); ++c) pixels.push_back(palette[static_cast<std::size_t>(map.labels(r, c) - 1)]);
  }
  io::write_file_atomic(dir / "color.ppm", io::ppm_text(pixels, map.rows(), map.cols()));
  io::write_csv_matrix(dir / "labels.csv", map.labels.cast<double>());
  for (int k = 0; k < n; ++k) {
    io::write_csv_matrix(dir / ("prob_" + std::to_string(k + 1) + ".csv"), map.probs[static_cast<std::size_t>(k)]);
  }
  io::write_csv_matrix(dir / "pmax.csv", map.p_max);
  Eigen::MatrixXd pe(map.rows(), map.cols()), gini(map.rows(), map.cols()), entropy(map.rows(), map.cols());
  for (Index r = 0; r < map.rows(); ++r) {
    for (Index c = 0; c < map.cols(); ++c) {
      const Impurity imp = impurity(map.pixel_probs(r, c));
      pe(r, c) = imp.pe;
      gini(r, c) = imp.gini;
      entropy(r, c) = imp.entropy;
    }
  }
  io::write_csv_matrix(dir / "pe.csv", pe);
  io::write_csv_matrix(dir / "gini.csv", gini);
  io::write_csv_matrix(dir / "entropy.csv", entropy);

  ordered_json j;
  j["format"] = "satclass-map";
  j["version"] = 1;
  j["rows"] = map.rows();
  j["cols"] = map.cols();
  j["num_classes"] = n;
  j["class_names"] = class_names;
  ordered_json colours = ordered_json::array();
  for (const auto& c : palette) colours.push_back({c[0], c[1], c[2]});
  j["palette"] = colours;
  io::write_file_atomic(dir / "map.json", j.dump(2) + "\n");
}

std::vector<Eigen::MatrixXd> read_probability_maps(const fs::path& dir) {
  int expected = -1;
  const fs::path map_json = dir / "map.json";
  if (fs::exists(map_json)) {
    const auto j = parse_json_file(map_json);
    if (j.contains("num_classes")) expected = j.at("num_classes").get<int>();
  }
  std::vector<Eigen::MatrixXd> maps;
  for (int k = 1;; ++k) {
    const fs::path file = dir / ("prob_" + std::to_string(k) + ".csv");
    if (expected >= 0 ? k > expected : !fs::exists(file)) break;
    maps.push_back(io::read_csv_matrix(file));
    if (maps.back().rows() != maps.front().rows() || maps.back().cols() != maps.front().cols()) {
      throw Error(ErrorCategory::Dimension, file.string() + ": probability map size differs from prob_1.csv");
    }
  }
  if (maps.size() < 2) throw Error(ErrorCategory::Io, dir.string() + ": expected prob_1.csv, prob_2.csv, ...");
  return maps;
}

void cmd_train(const TrainOptions& options) {
  if (!options.seed) throw Error(ErrorCategory::Config, "--seed is required for train");
  const BandStack stack = load_band_stack(options.manifest);
  const SampleTable table = read_sample_table(options.samples);
  int n = static_cast<int>(stack.class_names.size());
  if (n == 0) n = table.size() > 0 ? table.labels.maxCoeff() : 0;
  if (n < 1) throw Error(ErrorCategory::Data, "no training samples");
  const LabeledDataset data = resolve_samples(table, &stack, n, stack.class_names);

  TrainedBundle bundle = train_bundle(data, options);
  bundle.band_names = stack.band_names;

  ordered_json run;
  run["format"] = "satclass-run";
  run["version"] = kVersion;
  run["seed"] = *options.seed;
  run["config"] = config_json(options);
  run["config_hash"] = hex64(fnv1a64(run["config"].dump() + "|" + std::to_string(*options.seed)));
  run["training_samples"] = data.size();
  run["bands"] = stack.band_count();
  write_bundle(options.out, bundle, run.dump(2) + "\n");
  std::cout << "trained " << to_string(options.method) << " on " << data.size() << " samples, "
            << bundle.class_ids.size() << " classes -> " << options.out.string() << '\n';
}

void cmd_classify(const ClassifyOptions& options) {
  const TrainedBundle bundle = read_bundle(options.bundle);
  const BandStack stack = load_band_stack(options.manifest);
  const Index width = bundle.method == Method::Mbact ? bundle.mbact->dimension() : bundle.cart->dimension();
  if (stack.band_count() != width) {
    throw Error(ErrorCategory::Dimension, "scene has " + std::to_string(stack.band_count()) +
                                              " bands but the model was trained on " + std::to_string(width));
  }
  const Eigen::MatrixXd probs = bundle_probabilities(bundle, stack_features(stack));
  const ClassifiedMap map = assemble_map(stack.rows, stack.cols, probs);
  write_map_artifacts(options.out_dir, map, bundle.class_names);
  std::cout << "classified " << stack.rows << "x" << stack.cols << " pixels -> " << options.out_dir.string() << '\n';
}

void cmd_evaluate(const EvaluateOptions& options) {
  const AlignedPoints points = align_truth(options.probs, options.truth);
  const Eigen::MatrixXi pred_map = integer_matrix(io::read_csv_matrix(options.pred), options.pred);
  const SampleTable truth = read_sample_table(options.truth);
  if (pred_map.rows() != points.rows || pred_map.cols() != points.cols) {
    throw Error(ErrorCategory::Dimension, "label map is " + std::to_string(pred_map.rows()) + "x" +
                                              std::to_string(pred_map.cols()) + " but the probability maps are " +
                                              std::to_string(points.rows) + "x" + std::to_string(points.cols));
  }
  LabelVector predicted(truth.size());
  for (Index i = 0; i < truth.size(); ++i) {
    const auto& px = truth.pixels[static_cast<std::size_t>(i)];
    predicted(i) = pred_map(px.row, px.col);
  }
  const auto report = evaluate_predictions(points.probs, predicted, points.truth, points.class_names, options.group_by);
  fs::path base = options.out;
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  io::write_file_atomic(base, report_json_text(report));
  io::write_file_atomic(fs::path(base).replace_extension(".csv"), report_csv_text(report));
  const std::string table = report_table_text(report);
  io::write_file_atomic(fs::path(base).replace_extension(".txt"), table);
  std::cout << table;
}

void cmd_calibrate(const CalibrateOptions& options) {
  const AlignedPoints points = align_truth(options.probs, options.truth);
  Eigen::VectorXd p_max(points.probs.rows());
  std::vector<bool> correct;
  for (Index i = 0; i < points.probs.rows(); ++i) {
    p_max(i) = points.probs.row(i).maxCoeff();
    correct.push_back(argmax_class(points.probs.row(i)) == points.truth(i));
  }
  const auto table = calibration_table(p_max, correct, options.bins);
  const auto fit = calibration_fit(table);
  if (options.out.has_parent_path()) fs::create_directories(options.out.parent_path());
  io::write_file_atomic(options.out, calibration_csv_text(table));
  io::write_file_atomic(fs::path(options.out).replace_extension(".json"), calibration_summary_json_text(table, fit));
  std::cout << "calibration slope " << (fit.stable ? io::format_significant(fit.slope, 6) : "- (unstable)") << '\n';
}

void cmd_synth(const SynthCommandOptions& options) {
  if (options.preset != "gauss4") throw Error(ErrorCategory::Config, "unknown preset '" + options.preset + "'");
  SynthOptions synth;
  synth.seed = options.seed;
  synth.label_noise = options.label_noise;
  write_synthetic_scene(options.out_dir, make_gauss4_scene(synth));
  std::cout << "wrote gauss4 scene -> " << options.out_dir.string() << '\n';
}

}  // namespace satclass
