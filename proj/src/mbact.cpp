#include "satclass/mbact.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "satclass/io.hpp"

namespace satclass {

namespace {

unsigned worker_count(Index work_items) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::clamp<Index>(work_items, 1, hw));
}

}  // namespace

MbactModel fit_mbact(const LabeledDataset& data, const ProbitConfig& config, std::span<const std::uint64_t> stream_keys,
                     bool parallel) {
  const int n = data.num_classes;
  if (n < 2) throw Error(ErrorCategory::Data, "mBACT needs at least two classes");
  if (!stream_keys.empty() && static_cast<int>(stream_keys.size()) != n) {
    throw Error(ErrorCategory::Config, "stream key count must match class count");
  }
  const auto counts = data.class_counts();
  for (int k = 1; k <= n; ++k) {
    if (counts[static_cast<std::size_t>(k - 1)] == 0) {
      throw Error(ErrorCategory::Data, "class " + std::to_string(k) + " has no training samples");
    }
  }
  config.bart.validate();

  auto fit_class = [&](int k) {
    const std::uint64_t key = stream_keys.empty() ? static_cast<std::uint64_t>(k) : stream_keys[static_cast<std::size_t>(k - 1)];
    Rng rng = Rng::stream(config.bart.seed, key);
    return fit_probit(make_pseudo_dataset(data, k), config, rng);
  };

  MbactModel model;
  model.class_names = data.class_names;
  model.seed = config.bart.seed;
  model.per_class.resize(static_cast<std::size_t>(n));
  if (parallel && worker_count(n) > 1) {
    std::vector<std::future<ProbitModel>> jobs;
    for (int k = 1; k <= n; ++k) jobs.push_back(std::async(std::launch::async, fit_class, k));
    for (int k = 1; k <= n; ++k) model.per_class[static_cast<std::size_t>(k - 1)] = jobs[static_cast<std::size_t>(k - 1)].get();
  } else {
    for (int k = 1; k <= n; ++k) model.per_class[static_cast<std::size_t>(k - 1)] = fit_class(k);
  }
  return model;
}

Eigen::VectorXd raw_class_scores(const MbactModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd scores(model.num_classes());
  for (int k = 0; k < model.num_classes(); ++k) scores(k) = predict_prob(model.per_class[static_cast<std::size_t>(k)], x);
  return scores;
}

Eigen::MatrixXd raw_class_score_matrix(const MbactModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.dimension()) {
    throw Error(ErrorCategory::Dimension, "feature width " + std::to_string(x.cols()) + " does not match model width " +
                                              std::to_string(model.dimension()));
  }
  Eigen::MatrixXd scores(x.rows(), model.num_classes());
  const unsigned workers = worker_count(x.rows() / 256 + 1);
  const Index chunk = (x.rows() + workers - 1) / workers;
  auto run = [&](Index begin, Index end) {
    if (begin >= end) return;
    const FeatureMatrix block = x.middleRows(begin, end - begin);
    for (int k = 0; k < model.num_classes(); ++k) {
      scores.col(k).segment(begin, end - begin) = predict_probs(model.per_class[static_cast<std::size_t>(k)], block);
    }
  };
  if (workers == 1) {
    run(0, x.rows());
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back(run, std::min<Index>(x.rows(), w * chunk), std::min<Index>(x.rows(), (w + 1) * chunk));
    }
    for (auto& t : threads) t.join();
  }
  return scores;
}

ClassId predict_class(const MbactModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return argmax_class(raw_class_scores(model, x));
}

Eigen::VectorXd ClassifiedMap::pixel_probs(Index row, Index col) const {
  Eigen::VectorXd p(num_classes());
  for (int k = 0; k < num_classes(); ++k) p(k) = probs[static_cast<std::size_t>(k)](row, col);
  return p;
}

ClassifiedMap assemble_map(Index rows, Index cols, const Eigen::MatrixXd& pixel_probs) {
  if (pixel_probs.rows() != rows * cols) throw Error(ErrorCategory::Dimension, "probability rows do not match the image");
  const auto n = static_cast<int>(pixel_probs.cols());
  ClassifiedMap map;
  map.labels.resize(rows, cols);
  map.p_max.resize(rows, cols);
  map.probs.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(rows, cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const auto p = pixel_probs.row(r * cols + c);
      for (int k = 0; k < n; ++k) map.probs[static_cast<std::size_t>(k)](r, c) = p(k);
      const ClassId label = argmax_class(p);
      map.labels(r, c) = label;
      map.p_max(r, c) = p(label - 1);
    }
  }
  return map;
}

ClassifiedMap classify_image(const MbactModel& model, const BandStack& stack) {
  if (stack.band_count() != model.dimension()) {
    throw Error(ErrorCategory::Dimension, "image has " + std::to_string(stack.band_count()) + " bands, model expects " +
                                              std::to_string(model.dimension()));
  }
  const Eigen::MatrixXd raw = raw_class_score_matrix(model, stack_features(stack));
  Eigen::MatrixXd normalized(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) normalized.row(i) = normalize_scores(raw.row(i).transpose()).transpose();
  return assemble_map(stack.rows, stack.cols, normalized);
}

void write_mbact_bundle(const std::filesystem::path& dir, const MbactModel& model) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "satclass-mbact";
  manifest["version"] = 1;
  manifest["n"] = model.num_classes();
  manifest["class_names"] = model.class_names;
  manifest["p"] = model.dimension();
  manifest["seed"] = model.seed;
  nlohmann::json files = nlohmann::json::array();
  for (int k = 1; k <= model.num_classes(); ++k) {
    const std::string name = "class_" + std::to_string(k) + ".model";
    std::ostringstream out;
    write_probit_model(out, model.per_class[static_cast<std::size_t>(k - 1)]);
    io::write_file_atomic(dir / name, out.str());
    files.push_back(name);
  }
  manifest["models"] = files;
  io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

MbactModel read_mbact_bundle(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text_file(dir / "manifest.json"));
    if (manifest.at("format") != "satclass-mbact") throw Error(ErrorCategory::Parse, "not an mBACT bundle");
    MbactModel model;
    model.class_names = manifest.at("class_names").get<std::vector<std::string>>();
    model.seed = manifest.at("seed").get<std::uint64_t>();
    for (const auto& file : manifest.at("models")) {
      std::istringstream in(io::read_text_file(dir / file.get<std::string>()));
      model.per_class.push_back(read_probit_model(in));
    }
    if (model.num_classes() != manifest.at("n").get<int>() || model.dimension() != manifest.at("p").get<Index>()) {
      throw Error(ErrorCategory::Parse, "bundle manifest does not match its models");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace satclass
