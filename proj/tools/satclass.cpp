// satclass: land-cover classification with mBACT and CART.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "satclass/pipeline.hpp"

namespace {

using satclass::Error;
using satclass::ErrorCategory;

int fail(ErrorCategory category, const std::string& message) {
  std::string line = message;
  for (char& ch : line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error " << satclass::to_string(category) << ": " << line << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satclass: multispectral land-cover classification"};
  app.set_version_flag("--version", std::string("satclass ") + satclass::kVersion);
  app.require_subcommand(1);

  satclass::TrainOptions train;
  std::string method = "mbact";
  std::uint64_t seed = 0;
  auto* t = app.add_subcommand("train", "fit a classifier from labeled samples");
  t->add_option("--manifest", train.manifest, "scene manifest (JSON)")->required();
  t->add_option("--samples", train.samples, "training samples CSV")->required();
  t->add_option("--method", method, "mbact or cart")->capture_default_str();
  auto* seed_opt = t->add_option("--seed", seed, "random seed");
  t->add_option("--out", train.out, "bundle directory")->required();
  auto& bart = train.probit.bart;
  t->add_option("--ntree", bart.num_trees, "trees per ensemble")->capture_default_str();
  t->add_option("--ndpost", bart.ndpost, "kept posterior draws")->capture_default_str();
  t->add_option("--keepevery", bart.keepevery, "thinning stride")->capture_default_str();
  t->add_option("--nskip", bart.nskip, "burn-in sweeps")->capture_default_str();
  t->add_option("--numcut", bart.numcut, "cutpoints per variable")->capture_default_str();
  t->add_option("--k", bart.k, "leaf shrinkage")->capture_default_str();
  t->add_option("--alpha", bart.alpha, "tree prior base")->capture_default_str();
  t->add_option("--beta", bart.beta, "tree prior depth power")->capture_default_str();
  t->add_option("--binary-offset", train.probit.binary_offset, "probit offset")->capture_default_str();
  t->add_option("--minsplit", train.cart.minsplit, "CART minimum node size")->capture_default_str();
  t->add_option("--xval", train.cart.xval, "CART cross-validation folds")->capture_default_str();
  auto* cp_opt = t->add_option("--cp", train.cart.cp, "CART complexity parameter")->capture_default_str();
  t->add_flag("!--serial", train.parallel, "fit per-class models one at a time");

  satclass::ClassifyOptions classify;
  auto* c = app.add_subcommand("classify", "classify every pixel of a scene");
  c->add_option("--bundle", classify.bundle, "bundle directory")->required();
  c->add_option("--manifest", classify.manifest, "scene manifest (JSON)")->required();
  c->add_option("--out-dir", classify.out_dir, "output directory")->required();

  satclass::EvaluateOptions evaluate;
  std::string group_by = "truth";
  auto* e = app.add_subcommand("evaluate", "accuracy and uncertainty report");
  e->add_option("--pred", evaluate.pred, "label map CSV")->required();
  e->add_option("--truth", evaluate.truth, "reference samples CSV (row,col,class)")->required();
  e->add_option("--probs", evaluate.probs, "directory with prob_<k>.csv")->required();
  e->add_option("--out", evaluate.out, "report JSON path")->required();
  e->add_option("--group-by", group_by, "per-class impurity grouping: truth or predicted")->capture_default_str();

  satclass::CalibrateOptions calibrate;
  auto* k = app.add_subcommand("calibrate", "binned calibration table");
  k->add_option("--probs", calibrate.probs, "directory with prob_<k>.csv")->required();
  k->add_option("--truth", calibrate.truth, "reference samples CSV (row,col,class)")->required();
  k->add_option("--bins", calibrate.bins, "number of bins")->capture_default_str();
  k->add_option("--out", calibrate.out, "calibration CSV path")->required();

  satclass::SynthCommandOptions synth;
  auto* s = app.add_subcommand("synth", "write a synthetic scene");
  s->add_option("--preset", synth.preset, "scene preset")->capture_default_str();
  s->add_option("--seed", synth.seed, "random seed")->required();
  s->add_option("--out-dir", synth.out_dir, "output directory")->required();
  s->add_option("--label-noise", synth.label_noise, "fraction of training labels to corrupt")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    return fail(ErrorCategory::Config, err.what());
  }

  try {
    if (t->parsed()) {
      train.method = satclass::parse_method(method);
      if (seed_opt->count() > 0) train.seed = seed;
      train.cp_fixed = cp_opt->count() > 0;
      satclass::cmd_train(train);
    } else if (c->parsed()) {
      satclass::cmd_classify(classify);
    } else if (e->parsed()) {
      evaluate.group_by = satclass::parse_group_by(group_by);
      satclass::cmd_evaluate(evaluate);
    } else if (k->parsed()) {
      satclass::cmd_calibrate(calibrate);
    } else if (s->parsed()) {
      satclass::cmd_synth(synth);
    }
  } catch (const Error& err) {
    return fail(err.category(), err.what());
  } catch (const std::filesystem::filesystem_error& err) {
    return fail(ErrorCategory::Io, err.what());
  } catch (const std::exception& err) {
    return fail(ErrorCategory::Data, err.what());
  }
  return 0;
}
