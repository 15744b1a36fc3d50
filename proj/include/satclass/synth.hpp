#pragma once

#include <cstdint>
#include <filesystem>

#include "satclass/data_model.hpp"
#include "satclass/rng.hpp"

namespace satclass {

struct SynthOptions {
  std::uint64_t seed = 0;
  Index rows = 40;
  Index cols = 40;
  Index samples_per_class = 150;
  double train_fraction = 2.0 / 3.0;
  /// Fraction of training labels replaced by a different class.
  double label_noise = 0.0;
  /// Distance of each non-zero class mean from the origin, in noise SDs.
  double separation = 4.0;
};

/// Four-class, three-band Gaussian scene laid out in quadrants.
struct SyntheticScene {
  BandStack stack;
  Eigen::MatrixXi truth;  ///< rows x cols class ids
  SampleTable samples;    ///< every sampled pixel with its true class
  SampleTable train;
  SampleTable validation;
};

/// Class means are 0, s e1, s e2, s e3 in noise units; reflectance is
/// 0.1 + 0.02 * (mean + N(0, I)).
SyntheticScene make_gauss4_scene(const SynthOptions& options);

/// Replaces round(fraction * N) labels, chosen at random, by a uniformly
/// drawn different class in 1..n.
void inject_label_noise(LabelVector& labels, int num_classes, double fraction, Rng& rng);

/// manifest.json, band_<b>.csv, truth_map.csv, samples.csv, train.csv, validation.csv.
void write_synthetic_scene(const std::filesystem::path& dir, const SyntheticScene& scene);

}  // namespace satclass
