#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "napts/config.hpp"
#include "napts/dataset.hpp"
#include "napts/driver.hpp"
#include "napts/metrics.hpp"
#include "napts/plot.hpp"

namespace napts::cli {

namespace {

const std::vector<std::string> kFlagKeys{"full-batch", "adam-persist-moments", "reeval-reference",
                                         "sequential", "zero-timings"};

bool truthy(const std::string& value, const std::string& key) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + value + "'");
}

struct TrainArgs {
  std::string method = "napts";
  std::string dataset = "moons";
  std::size_t size = 1000;
  std::string hidden = "16,16";
  std::string activation = "tanh";
  std::string loss = "cross_entropy";
  std::size_t subdomains = 3;
  std::size_t inner_iters = 3;
  std::optional<std::size_t> nu;
  NtrConstants constants;
  double lr = AdamParams{}.learning_rate;
  std::size_t batch_size = 100;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::string plot;
  std::string history;
  bool full_batch = false;
  bool persist_moments = false;
  bool reeval_reference = false;
  std::string direction = "normalized";
  bool sequential = false;
  bool zero_timings = false;
  double divergence_threshold = TrainingOptions{}.divergence_threshold;
};

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const unsigned long w = std::stoul(item, &pos);
    if (pos != item.size() || w == 0) {
      throw std::invalid_argument("--hidden expects positive comma-separated widths, got '" +
                                  text + "'");
    }
    widths.push_back(w);
  }
  return widths;
}

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  MethodConfig config;
  config.method = parse_method(a.method);
  config.inner_iterations = a.inner_iters;
  config.subdomains = a.subdomains;
  config.constants = a.constants;
  if (a.nu) config.constants.memory = *a.nu;
  config.adam.learning_rate = a.lr;
  config.adam_persist_moments = a.persist_moments;
  config.reeval_reference = a.reeval_reference;
  config.direction = parse_ntr_direction(a.direction);
  config.parallel_subdomains = !a.sequential;
  config.seed = a.seed;
  config.validate();

  const Dataset data = load_dataset(a.dataset, a.size, a.seed);
  std::vector<std::size_t> widths{data.features};
  for (std::size_t w : parse_widths(a.hidden)) widths.push_back(w);
  widths.push_back(data.classes);
  const std::size_t blocks = config.uses_decomposition() ? config.subdomains : 1;
  const SequentialNet net =
      SequentialNet::mlp(widths, parse_activation(a.activation), parse_loss(a.loss), blocks);

  TrainingOptions options;
  options.epochs = a.epochs;
  options.batch_size = a.batch_size;
  options.full_batch = a.full_batch;
  options.record_timings = !a.zero_timings;
  options.divergence_threshold = a.divergence_threshold;

  out << "napts: " << to_string(config.method) << " on " << data.name << " ("
      << data.train_size() << " train / " << data.val_size() << " val), " << net.describe()
      << "\n";
  const TrainingResult result = run_training(net, config, data, options);

  if (!result.records.empty()) {
    write_metrics_csv(result.records, a.out);
    if (!a.plot.empty()) {
      const std::vector<MethodSeries> series{{to_string(config.method), result.records}};
      write_plot_svg(series, a.plot);
    }
    if (!a.history.empty()) write_history_csv(result.history, a.history);
    const RunRecord& last = result.records.back();
    const std::size_t rejections =
        std::accumulate(result.records.begin(), result.records.end(), std::size_t{0},
                        [](std::size_t s, const RunRecord& r) { return s + r.rejections; });
    out << "iterations " << result.records.size() << ", final loss " << last.loss
        << ", val_acc " << last.val_acc << ", rejections " << rejections << "\n";
    out << "metrics written to " << a.out << "\n";
  } else {
    err << "napts: no iterations were run; nothing written\n";
  }
  if (result.status != RunStatus::completed) {
    err << "napts: run stopped (" << to_string(result.status) << "): " << result.message << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "split";
  for (std::size_t j = 0; j < d.features; ++j) f << ",x" << j;
  f << ",label\n";
  char buf[32];
  auto rows = [&](const char* split, const Tensor& x, const std::vector<int>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      f << split;
      for (std::size_t j = 0; j < d.features; ++j) {
        std::snprintf(buf, sizeof buf, "%.12g", x.at(i, j));
        f << ',' << buf;
      }
      f << ',' << y[i] << '\n';
    }
  };
  rows("train", d.train_inputs, d.train_labels);
  rows("val", d.val_inputs, d.val_labels);
  if (!f) throw std::runtime_error("error writing " + path);
}

std::vector<MethodSeries> load_series(const std::vector<std::string>& inputs) {
  std::vector<MethodSeries> series;
  for (const std::string& in : inputs) {
    const auto eq = in.find('=');
    std::string label, path;
    if (eq == std::string::npos) {
      path = in;
      label = std::filesystem::path(in).stem().string();
    } else {
      label = in.substr(0, eq);
      path = in.substr(eq + 1);
    }
    series.push_back({label, read_metrics_csv(path)});
  }
  return series;
}

}  // namespace

std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty()) return args;
  std::string file;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw std::invalid_argument("--config requires a file name");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty()) return args;

  std::vector<std::string> expanded{args.front()};
  for (auto [key, value] : read_flat_config(file)) {
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (std::find(kFlagKeys.begin(), kFlagKeys.end(), key) != kFlagKeys.end()) {
      if (truthy(value, key)) expanded.push_back("--" + key);
    } else {
      expanded.push_back("--" + key + "=" + value);
    }
  }
  expanded.insert(expanded.end(), rest.begin(), rest.end());
  return expanded;
}

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-monotone additively preconditioned trust-region training"};
  app.name("napts");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  TrainArgs t;
  CLI::App* train = app.add_subcommand("train", "Train an MLP and write per-iteration metrics");
  train->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;
  train->add_option("--config", config_file, "Flat key = value file; command line wins");
  train->add_option("--method", t.method, "tr | ntr | apts | apts-a | napts")
      ->check(CLI::IsMember({"tr", "ntr", "apts", "apts-a", "apts_a", "napts"}))
      ->capture_default_str();
  train->add_option("--dataset", t.dataset, "blobs | moons | spiral | idx:<images>,<labels>")
      ->capture_default_str();
  train->add_option("--size", t.size, "Samples to generate (or IDX cap, 0 = all)")
      ->capture_default_str();
  train->add_option("--hidden", t.hidden, "Hidden layer widths")->capture_default_str();
  train->add_option("--activation", t.activation, "identity | relu | tanh")
      ->check(CLI::IsMember({"identity", "relu", "tanh"}))
      ->capture_default_str();
  train->add_option("--loss", t.loss, "cross_entropy | mse")
      ->check(CLI::IsMember({"cross_entropy", "cross-entropy", "ce", "mse"}))
      ->capture_default_str();
  train->add_option("--subdomains", t.subdomains, "Number of layer blocks N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--inner-iters", t.inner_iters, "Local Adam iterations per block")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--nu", t.nu, "Non-monotone memory (default 100; 0 for tr/apts/apts-a)");
  train->add_option("--delta0", t.constants.delta0, "Initial radius")->capture_default_str();
  train->add_option("--delta-min", t.constants.delta_min)->capture_default_str();
  train->add_option("--delta-max", t.constants.delta_max)->capture_default_str();
  train->add_option("--eta1", t.constants.eta1)->capture_default_str();
  train->add_option("--eta2", t.constants.eta2)->capture_default_str();
  train->add_option("--gamma-inc", t.constants.gamma_inc)->capture_default_str();
  train->add_option("--gamma-dec", t.constants.gamma_dec)->capture_default_str();
  train->add_option("--lr", t.lr, "Local Adam learning rate")->capture_default_str();
  train->add_option("--batch-size", t.batch_size)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--epochs", t.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--seed", t.seed)->capture_default_str();
  train->add_option("--out", t.out, "Metrics CSV")->required();
  train->add_option("--plot", t.plot, "Also write an SVG figure");
  train->add_option("--history", t.history, "Also dump the acceptance-test log as CSV");
  train->add_flag("--full-batch", t.full_batch, "One batch holding the whole training set");
  train->add_flag("--adam-persist-moments", t.persist_moments,
                  "Keep local Adam moments across outer iterations");
  train->add_flag("--reeval-reference", t.reeval_reference,
                  "Re-evaluate the reference objective on the current batch");
  train->add_option("--ntr-direction", t.direction, "normalized | sign")
      ->check(CLI::IsMember({"normalized", "sign"}))
      ->capture_default_str();
  train->add_option("--divergence-threshold", t.divergence_threshold,
                    "Stop with exit code 2 once the batch loss exceeds this")
      ->capture_default_str();
  train->add_flag("--sequential", t.sequential, "Run block solves one after another");
  train->add_flag("--zero-timings", t.zero_timings,
                  "Write 0 for phase timings (byte-reproducible CSV)");

  std::string gen_kind = "moons", gen_out;
  std::size_t gen_size = 1000;
  std::uint64_t gen_seed = 0;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  generate->add_option("--dataset", gen_kind, "blobs | moons | spiral")->capture_default_str();
  generate->add_option("--size", gen_size)->capture_default_str();
  generate->add_option("--seed", gen_seed)->capture_default_str();
  generate->add_option("--out", gen_out)->required();

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  CLI::App* plot = app.add_subcommand("plot", "Draw metrics CSVs into one SVG figure");
  plot->add_option("--input", plot_inputs, "label=metrics.csv (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required();
  plot->add_option("--out", plot_out)->required();

  try {
    args = expand_config(std::move(args));
  } catch (const std::exception& e) {
    err << "napts: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<const char*> argv{"napts"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return run_train(t, out, err);
    if (*generate) {
      write_dataset_csv(generate_dataset(gen_kind, gen_size, gen_seed), gen_out);
      out << "dataset written to " << gen_out << "\n";
      return kExitOk;
    }
    write_plot_svg(load_series(plot_inputs), plot_out);
    out << "figure written to " << plot_out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "napts: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace napts::cli
