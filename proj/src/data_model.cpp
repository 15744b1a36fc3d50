#include "satclass/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "satclass/io.hpp"
#include "satclass/rng.hpp"

namespace satclass {

BandStack make_band_stack(std::vector<Eigen::MatrixXd> bands, std::vector<std::string> band_names,
                          std::vector<std::string> class_names) {
  if (bands.empty()) throw Error(ErrorCategory::Data, "band stack needs at least one band");
  BandStack stack;
  stack.rows = bands.front().rows();
  stack.cols = bands.front().cols();
  if (stack.rows <= 0 || stack.cols <= 0) throw Error(ErrorCategory::Dimension, "band matrices must be non-empty");
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (bands[b].rows() != stack.rows || bands[b].cols() != stack.cols) {
      throw Error(ErrorCategory::Dimension,
                  "band " + std::to_string(b + 1) + " is " + std::to_string(bands[b].rows()) + "x" +
                      std::to_string(bands[b].cols()) + ", expected " + std::to_string(stack.rows) + "x" +
                      std::to_string(stack.cols));
    }
    if (!bands[b].allFinite()) throw Error(ErrorCategory::Data, "band " + std::to_string(b + 1) + " has non-finite cells");
  }
  if (band_names.empty()) {
    for (std::size_t b = 0; b < bands.size(); ++b) band_names.push_back("band_" + std::to_string(b + 1));
  }
  if (band_names.size() != bands.size()) throw Error(ErrorCategory::Data, "band name count does not match band count");
  stack.bands = std::move(bands);
  stack.band_names = std::move(band_names);
  stack.class_names = std::move(class_names);
  return stack;
}

BandStack load_band_stack(const std::filesystem::path& manifest_path) {
  const auto text = io::read_text_file(manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::Parse, manifest_path.string() + ": " + e.what());
  }
  const auto base = manifest_path.parent_path();
  std::vector<Eigen::MatrixXd> bands;
  std::vector<std::string> names;
  std::vector<std::string> classes;
  Index rows = 0, cols = 0;
  try {
    rows = manifest.at("rows").get<Index>();
    cols = manifest.at("cols").get<Index>();
    for (const auto& band : manifest.at("bands")) {
      names.push_back(band.at("name").get<std::string>());
      const auto file = base / band.at("file").get<std::string>();
      if (!std::filesystem::exists(file)) throw Error(ErrorCategory::Io, "missing band file '" + file.string() + "'");
      bands.push_back(io::read_csv_matrix(file));
      if (bands.back().rows() != rows || bands.back().cols() != cols) {
        throw Error(ErrorCategory::Dimension, file.string() + ": band is " + std::to_string(bands.back().rows()) +
                                                  "x" + std::to_string(bands.back().cols()) + ", manifest says " +
                                                  std::to_string(rows) + "x" + std::to_string(cols));
      }
    }
    if (manifest.contains("classes")) classes = manifest.at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::Parse, manifest_path.string() + ": " + e.what());
  }
  return make_band_stack(std::move(bands), std::move(names), std::move(classes));
}

Eigen::VectorXd pixel_features(const BandStack& stack, Index row, Index col) {
  if (row < 0 || row >= stack.rows || col < 0 || col >= stack.cols) {
    throw Error(ErrorCategory::Range, "pixel (" + std::to_string(row) + "," + std::to_string(col) +
                                          ") outside " + std::to_string(stack.rows) + "x" + std::to_string(stack.cols));
  }
  Eigen::VectorXd x(stack.band_count());
  for (Index b = 0; b < stack.band_count(); ++b) x(b) = stack.bands[b](row, col);
  return x;
}

FeatureMatrix stack_features(const BandStack& stack) {
  FeatureMatrix x(stack.pixel_count(), stack.band_count());
  for (Index b = 0; b < stack.band_count(); ++b) {
    for (Index r = 0; r < stack.rows; ++r) {
      for (Index c = 0; c < stack.cols; ++c) x(r * stack.cols + c, b) = stack.bands[b](r, c);
    }
  }
  return x;
}

std::vector<Index> LabeledDataset::class_counts() const {
  std::vector<Index> counts(static_cast<std::size_t>(num_classes), 0);
  for (Index i = 0; i < labels.size(); ++i) ++counts[static_cast<std::size_t>(labels(i) - 1)];
  return counts;
}

LabeledDataset make_dataset(FeatureMatrix features, LabelVector labels, int num_classes,
                            std::vector<std::string> class_names) {
  if (num_classes < 1) throw Error(ErrorCategory::Config, "class count must be positive");
  if (features.rows() != labels.size()) throw Error(ErrorCategory::Dimension, "feature rows and labels differ in length");
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels(i) < 1 || labels(i) > num_classes) {
      throw Error(ErrorCategory::LabelRange, "sample " + std::to_string(i + 1) + " has class " +
                                                 std::to_string(labels(i)) + ", expected 1.." +
                                                 std::to_string(num_classes));
    }
  }
  if (!features.allFinite()) throw Error(ErrorCategory::Data, "features contain non-finite values");
  if (class_names.empty()) {
    for (int k = 1; k <= num_classes; ++k) class_names.push_back("class_" + std::to_string(k));
  }
  if (static_cast<int>(class_names.size()) != num_classes) {
    throw Error(ErrorCategory::Config, "class name count does not match class count");
  }
  LabeledDataset data;
  data.features = std::move(features);
  data.labels = std::move(labels);
  data.num_classes = num_classes;
  data.class_names = std::move(class_names);
  return data;
}

BinaryPseudoDataset make_pseudo_dataset(const LabeledDataset& data, ClassId k) {
  if (k < 1 || k > data.num_classes) {
    throw Error(ErrorCategory::LabelRange, "target class " + std::to_string(k) + " outside 1.." +
                                               std::to_string(data.num_classes));
  }
  BinaryPseudoDataset pseudo;
  pseudo.target_class = k;
  pseudo.features = data.features;
  pseudo.labels = (data.labels.array() == k).cast<int>();
  return pseudo;
}

Index split_train_count(Index count, double train_fraction) {
  return static_cast<Index>(std::floor(train_fraction * static_cast<double>(count) + 0.5));
}

namespace {

LabeledDataset subset(const LabeledDataset& data, const std::vector<Index>& rows) {
  LabeledDataset out;
  out.features.resize(static_cast<Index>(rows.size()), data.dimension());
  out.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = data.features.row(rows[i]);
    out.labels(static_cast<Index>(i)) = data.labels(rows[i]);
  }
  out.num_classes = data.num_classes;
  out.class_names = data.class_names;
  return out;
}

}  // namespace

DatasetSplit stratified_split(const LabeledDataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCategory::Config, "train_fraction must lie in (0, 1)");
  }
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(data.num_classes));
  for (Index i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.labels(i) - 1)].push_back(i);

  auto feature_less = [&](Index a, Index b) {
    for (Index j = 0; j < data.dimension(); ++j) {
      if (data.features(a, j) != data.features(b, j)) return data.features(a, j) < data.features(b, j);
    }
    return false;
  };

  Rng rng(spec.seed);
  DatasetSplit split;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    if (rows.empty()) continue;  // absent from this scene
    if (rows.size() < 2) {
      throw Error(ErrorCategory::Data, "class " + std::to_string(k + 1) + " has " + std::to_string(rows.size()) +
                                           " samples; stratified split needs at least 2");
    }
    std::stable_sort(rows.begin(), rows.end(), feature_less);
    const Index take = split_train_count(static_cast<Index>(rows.size()), spec.train_fraction);
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    for (Index i = 0; i < take; ++i) {
      const Index j = i + rng.uniform_index(static_cast<Index>(rows.size()) - i);
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    }
    std::vector<Index> train(rows.begin(), rows.begin() + take);
    std::vector<Index> validation(rows.begin() + take, rows.end());
    std::stable_sort(train.begin(), train.end(), feature_less);
    std::stable_sort(validation.begin(), validation.end(), feature_less);
    split.train_rows.insert(split.train_rows.end(), train.begin(), train.end());
    split.validation_rows.insert(split.validation_rows.end(), validation.begin(), validation.end());
  }
  split.train = subset(data, split.train_rows);
  split.validation = subset(data, split.validation_rows);
  return split;
}

SampleTable read_sample_table(const std::filesystem::path& path) {
  const auto text = io::read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    header = io::split_csv_line(line);
    break;
  }
  if (header.size() < 2 || header.back() != "class") {
    throw Error(ErrorCategory::Parse, path.string() + ": header must end with 'class'");
  }
  const bool pixels = header.size() == 3 && header[0] == "row" && header[1] == "col";
  if (!pixels) {
    for (std::size_t j = 0; j + 1 < header.size(); ++j) {
      if (header[j] != "x" + std::to_string(j + 1)) {
        throw Error(ErrorCategory::Parse, path.string() + ": header must be row,col,class or x1,...,xp,class");
      }
    }
  }
  const std::size_t width = header.size();
  std::vector<std::vector<double>> values;
  std::vector<SampleTable::Pixel> coords;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto fields = io::split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_number);
    if (fields.size() != width) {
      throw Error(ErrorCategory::Parse, where + ": expected " + std::to_string(width) + " fields, found " +
                                            std::to_string(fields.size()));
    }
    labels.push_back(static_cast<int>(io::parse_integer(fields.back(), where + ":" + std::to_string(width))));
    if (pixels) {
      coords.push_back({static_cast<Index>(io::parse_integer(fields[0], where + ":1")),
                        static_cast<Index>(io::parse_integer(fields[1], where + ":2"))});
    } else {
      std::vector<double> row;
      for (std::size_t j = 0; j + 1 < width; ++j) {
        row.push_back(io::parse_double(fields[j], where + ":" + std::to_string(j + 1)));
      }
      values.push_back(std::move(row));
    }
  }
  SampleTable table;
  table.labels = Eigen::Map<const LabelVector>(labels.data(), static_cast<Index>(labels.size()));
  if (pixels) {
    table.pixels = std::move(coords);
  } else {
    table.features.resize(static_cast<Index>(values.size()), static_cast<Index>(width - 1));
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = 0; j + 1 < width; ++j) table.features(static_cast<Index>(i), static_cast<Index>(j)) = values[i][j];
    }
  }
  if (table.size() == 0) throw Error(ErrorCategory::Data, path.string() + ": no samples");
  return table;
}

std::string sample_table_text(const SampleTable& table) {
  std::string out;
  if (table.has_pixels()) {
    out = "row,col,class\n";
    for (Index i = 0; i < table.size(); ++i) {
      out += std::to_string(table.pixels[static_cast<std::size_t>(i)].row) + "," +
             std::to_string(table.pixels[static_cast<std::size_t>(i)].col) + "," + std::to_string(table.labels(i)) + "\n";
    }
    return out;
  }
  for (Index j = 0; j < table.features.cols(); ++j) out += "x" + std::to_string(j + 1) + ",";
  out += "class\n";
  for (Index i = 0; i < table.size(); ++i) {
    for (Index j = 0; j < table.features.cols(); ++j) out += io::format_double(table.features(i, j)) + ",";
    out += std::to_string(table.labels(i)) + "\n";
  }
  return out;
}

LabeledDataset resolve_samples(const SampleTable& table, const BandStack* stack, int num_classes,
                               std::vector<std::string> class_names) {
  if (!table.has_pixels()) {
    if (stack && table.features.cols() != stack->band_count()) {
      throw Error(ErrorCategory::Dimension, "sample feature width " + std::to_string(table.features.cols()) +
                                                " does not match band count " + std::to_string(stack->band_count()));
    }
    return make_dataset(table.features, table.labels, num_classes, std::move(class_names));
  }
  if (!stack) throw Error(ErrorCategory::Config, "pixel samples need a band stack");
  FeatureMatrix features(table.size(), stack->band_count());
  for (Index i = 0; i < table.size(); ++i) {
    const auto& px = table.pixels[static_cast<std::size_t>(i)];
    features.row(i) = pixel_features(*stack, px.row, px.col).transpose();
  }
  return make_dataset(std::move(features), table.labels, num_classes, std::move(class_names));
}

}  // namespace satclass
