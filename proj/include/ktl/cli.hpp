#ifndef KTL_CLI_HPP
#define KTL_CLI_HPP

// Command-line front end: fit, encode, eval, bench, synth.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error. Metrics are written
// to stdout as JSON lines, one record per line.

#include "ktl/dataset.hpp"
#include "ktl/error.hpp"
#include "ktl/eval.hpp"
#include "ktl/model_io.hpp"
#include "ktl/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ktl::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct DataFlags {
  std::string path;
  std::string format = "idx";
  std::string labels;
  bool csv_header = false;
  bool csv_label_last = false;
  Index skip = 0;
  Index subset = 0;  // 0 keeps everything after --skip
  std::string preprocess = "none";

  void add_to(CLI::App* app, bool data_required = true) {
    auto* d = app->add_option("--data", path, "input samples (IDX image file or CSV)");
    if (data_required) d->required();
    app->add_option("--format", format, "idx or csv")->check(CLI::IsMember({"idx", "csv"}));
    app->add_option("--labels", labels, "label file (IDX or one integer per line)");
    app->add_flag("--csv-header", csv_header, "skip the first CSV line");
    app->add_flag("--csv-label-last", csv_label_last, "final CSV column is the class id");
    app->add_option("--skip", skip, "drop this many leading samples")->check(CLI::NonNegativeNumber);
    app->add_option("--subset", subset, "keep at most this many samples (0 = all)")->check(CLI::NonNegativeNumber);
    app->add_option("--preprocess", preprocess, "comma list of luma,mean,gcn or none");
  }
};

inline std::vector<int> read_labels(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 8 && bytes[3] == 1)
    return load_idx_labels(bytes);
  std::vector<int> out;
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const std::string field = line.substr(first, line.find(',', first) - first);
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(field, &used));
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, path + ": bad label '" + field + "'");
    }
  }
  return out;
}

inline PreprocessConfig preprocess_flag(const std::string& text) {
  try {
    return parse_preprocess(text);
  } catch (const Error& e) {
    throw UsageError(std::string("--preprocess: ") + e.what());
  }
}

inline Dataset load_data(const DataFlags& f) {
  const PreprocessConfig pre = preprocess_flag(f.preprocess);
  Dataset ds;
  if (f.format == "idx") {
    ds = load_idx_images(read_file_bytes(f.path));
    ds.source = f.path;
  } else {
    ds = load_csv_file(f.path, CsvOptions{f.csv_header, f.csv_label_last});
  }
  if (!f.labels.empty()) ds.labels = read_labels(f.labels);
  ds.validate();
  if (f.skip > ds.size()) throw Error(Errc::InvalidArgument, "--skip exceeds the sample count");
  ds = ds.slice(f.skip, ds.size() - f.skip);
  if (f.subset > 0) ds = ds.head(f.subset);
  return preprocess(std::move(ds), pre);
}

struct FitFlags {
  std::string kernel = "poly:4";
  double threshold = 0.1;
  double lambda = 1.0;
  Index rank = 0;
  double epsilon = 1.0;
  int inner_iters = 10;
  int iters = 50;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  std::string init = "identity";
  Index pca_dim = 0;
  Index sample_cap = 5000;
  std::string eig = "dense";

  void add_to(CLI::App* app) {
    app->add_option("--kernel", kernel, "linear | poly[:degree[:gain[:coef0]]] | rbf:gamma");
    app->add_option("--threshold", threshold, "hard threshold t (l0 weight t^2)")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda", lambda, "log-det / Frobenius regularisation weight")->check(CLI::PositiveNumber);
    app->add_option("--rank", rank, "eKTL rank r (0 = min(n, N))")->check(CLI::NonNegativeNumber);
    app->add_option("--epsilon", epsilon, "eKTL ADMM penalty")->check(CLI::PositiveNumber);
    app->add_option("--inner-iters", inner_iters, "eKTL ADMM sweeps per outer iteration")->check(CLI::PositiveNumber);
    app->add_option("--iters", iters, "maximum outer iterations")->check(CLI::PositiveNumber);
    app->add_option("--rel-tol", rel_tol, "relative objective change for convergence")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "seed for random initialisation / eigensolver");
    app->add_option("--init", init, "identity or random")->check(CLI::IsMember({"identity", "random"}));
    app->add_option("--pca-dim", pca_dim, "TL: project onto this many principal directions first")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--sample-cap", sample_cap, "KTL: largest N for the direct path")->check(CLI::PositiveNumber);
    app->add_option("--eig", eig, "eKTL eigensolver: dense or randomized")
        ->check(CLI::IsMember({"dense", "randomized"}));
  }

  FitSettings settings() const {
    FitSettings s;
    try {
      s.kernel = parse_kernel_spec(kernel);
    } catch (const Error& e) {
      throw UsageError(std::string("--kernel: ") + e.what());
    }
    s.tl.threshold = threshold;
    s.tl.lambda = lambda;
    s.tl.max_iters = iters;
    s.tl.rel_tol = rel_tol;
    s.tl.seed = seed;
    s.tl.init = init == "random" ? InitKind::SeededRandomOrthogonal : InitKind::Identity;
    s.rank = rank;
    s.pca_dim = pca_dim;
    s.ktl.sample_cap = sample_cap;
    s.ektl.epsilon = epsilon;
    s.ektl.inner_iters = inner_iters;
    s.ektl.eig.solver = eig == "randomized" ? EigSolverKind::Randomized : EigSolverKind::Dense;
    s.ektl.eig.seed = seed;
    return s;
  }
};

inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream in(list);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(parse_method(tok));
    } catch (const Error& e) {
      throw UsageError(std::string("--methods: ") + e.what());
    }
  }
  if (out.empty()) throw UsageError("--methods: empty list");
  return out;
}

inline void write_csv_file(const std::string& path, const Matrix& columns) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  write_csv(out, columns);
}

inline void write_labels_file(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  for (int l : labels) out << l << '\n';
}

inline Matrix read_feature_csv(const std::string& path) { return load_csv_file(path).samples; }

}  // namespace detail

/// Runs one subcommand. `args` excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  using nlohmann::json;
  CLI::App app{"Transform learning, kernel transform learning and efficient kernel transform learning"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "learn a transform and save the model");
  std::string method_text = "tl";
  std::string model_out;
  std::string codes_out;
  bool verbose = false;
  detail::DataFlags fit_data;
  detail::FitFlags fit_flags;
  fit->add_option("--method", method_text, "tl, ktl or ektl");
  fit_data.add_to(fit);
  fit_flags.add_to(fit);
  fit->add_option("--out", model_out, "model file to write")->required();
  fit->add_option("--codes-out", codes_out, "optional CSV of training codes (one sample per row)");
  fit->add_flag("--verbose", verbose, "print the objective trace, one value per line");

  // encode
  auto* enc = app.add_subcommand("encode", "encode samples with a saved model");
  std::string model_in;
  std::string feats_out;
  std::string labels_out;
  detail::DataFlags enc_data;
  enc->add_option("--model", model_in, "model file")->required();
  enc_data.add_to(enc);
  enc->add_option("--out", feats_out, "feature CSV, one sample per row")->required();
  enc->add_option("--labels-out", labels_out, "write the labels of the encoded samples, one per line");

  // eval
  auto* ev = app.add_subcommand("eval", "k-NN accuracy of feature files");
  std::string train_feats, train_labels, test_feats, test_labels, table_out, run_name = "features";
  int k = 1;
  ev->add_option("--train-feats", train_feats)->required();
  ev->add_option("--train-labels", train_labels)->required();
  ev->add_option("--test-feats", test_feats)->required();
  ev->add_option("--test-labels", test_labels)->required();
  ev->add_option("--k", k, "neighbours")->check(CLI::PositiveNumber);
  ev->add_option("--name", run_name, "row label for --csv-out");
  ev->add_option("--csv-out", table_out, "append a features,classifier,accuracy row to this CSV");

  // bench
  auto* bench = app.add_subcommand("bench", "time the fit of each method on one dataset");
  std::string methods_text = "tl,ktl,ektl";
  std::string bench_csv;
  detail::DataFlags bench_data;
  bench_data.subset = 2000;
  detail::FitFlags bench_flags;
  bench->add_option("--methods", methods_text, "comma list of tl,ktl,ektl");
  bench_data.add_to(bench);
  bench_flags.add_to(bench);
  bench->add_option("--csv-out", bench_csv, "write a method,n_train,fit_seconds,... table");

  // synth
  auto* syn = app.add_subcommand("synth", "generate a synthetic transform-sparse dataset");
  Index syn_n = 8, syn_count = 200;
  double density = 0.2, noise = 0.0;
  std::uint64_t syn_seed = 0;
  std::string syn_out, syn_t_out, syn_z_out;
  syn->add_option("--n", syn_n, "dimension")->check(CLI::PositiveNumber);
  syn->add_option("--N", syn_count, "sample count")->check(CLI::PositiveNumber);
  syn->add_option("--density", density, "code density in (0,1]")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--noise", noise, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  syn->add_option("--seed", syn_seed);
  syn->add_option("--out", syn_out, "CSV of samples, one per row")->required();
  syn->add_option("--transform-out", syn_t_out, "CSV of the generating transform (one row per line)");
  syn->add_option("--codes-out", syn_z_out, "CSV of the generating codes (one sample per row)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*fit) {
      Method method;
      try {
        method = parse_method(method_text);
      } catch (const Error& e) {
        throw UsageError(std::string("--method: ") + e.what());
      }
      const FitSettings settings = fit_flags.settings();
      const Dataset data = detail::load_data(fit_data);
      PipelineFit result = fit_method(method, data.samples, settings);
      save_model(result.model, model_out);
      if (!codes_out.empty()) detail::write_csv_file(codes_out, result.codes);
      if (verbose) {
        out.precision(17);
        for (double v : result.report.objective_trace) out << v << '\n';
      }
      out << json{{"record", "fit"},
                  {"method", method_name(method)},
                  {"n", data.dim()},
                  {"N", data.size()},
                  {"code_dim", result.codes.rows()},
                  {"iterations", result.report.iterations_run},
                  {"converged", result.report.converged},
                  {"final_objective", result.report.final_objective()},
                  {"code_density", result.report.code_density},
                  {"wall_time_seconds", result.report.wall_time_seconds}}
                 .dump()
          << '\n';
      return 0;
    }
    if (*enc) {
      const Model model = load_model(model_in);
      const Dataset data = detail::load_data(enc_data);
      const Matrix codes = encode(model, data.samples);
      detail::write_csv_file(feats_out, codes);
      if (!labels_out.empty()) {
        if (!data.labels) throw UsageError("--labels-out: no --labels given for the encoded data");
        detail::write_labels_file(labels_out, *data.labels);
      }
      out << json{{"record", "encode"},
                  {"method", method_name(method_of(model))},
                  {"samples", codes.cols()},
                  {"code_dim", codes.rows()},
                  {"code_density", nonzero_fraction(codes)}}
                 .dump()
          << '\n';
      return 0;
    }
    if (*ev) {
      const Matrix train = detail::read_feature_csv(train_feats);
      const Matrix test = detail::read_feature_csv(test_feats);
      const std::vector<int> ytrain = detail::read_labels(train_labels);
      const std::vector<int> ytest = detail::read_labels(test_labels);
      if (static_cast<Index>(ytest.size()) != test.cols())
        throw Error(Errc::LengthMismatch, "test labels vs test features");
      const EvalResult result = evaluate_knn(train, ytrain, test, ytest, k);
      out << json{{"record", "eval"}, {"metric", "accuracy"}, {"classifier", "knn"}, {"k", k},
                  {"value", result.accuracy}}.dump()
          << '\n';
      out << json{{"record", "eval"}, {"metric", "n_test"}, {"value", result.n_test}}.dump() << '\n';
      if (!table_out.empty()) {
        const bool fresh = !std::ifstream(table_out).good();
        std::ofstream table(table_out, std::ios::app);
        if (!table) throw Error(Errc::Io, "cannot write " + table_out);
        table.precision(17);
        if (fresh) table << "features,classifier,accuracy\n";
        table << run_name << ",NN" << (k == 1 ? "" : "-" + std::to_string(k)) << ',' << result.accuracy << '\n';
      }
      return 0;
    }
    if (*bench) {
      const std::vector<Method> methods = detail::parse_methods(methods_text);
      const FitSettings settings = bench_flags.settings();
      const auto reports = bench_methods([&] { return detail::load_data(bench_data).samples; }, methods, settings);
      std::ofstream table;
      if (!bench_csv.empty()) {
        table.open(bench_csv, std::ios::trunc);
        if (!table) throw Error(Errc::Io, "cannot write " + bench_csv);
        table.precision(17);
        table << "method,n_train,fit_seconds,encode_seconds_per_1k,iterations,config_digest\n";
      }
      for (const TimingReport& r : reports) {
        out << json{{"record", "bench"},
                    {"method", method_name(r.method)},
                    {"n_train", r.n_train},
                    {"fit_seconds", r.fit_seconds},
                    {"encode_seconds_per_1k", r.encode_seconds_per_1k},
                    {"iterations", r.fit.iterations_run},
                    {"final_objective", r.fit.final_objective()},
                    {"config_digest", r.config_digest}}
                   .dump()
            << '\n';
        if (table.is_open())
          table << method_name(r.method) << ',' << r.n_train << ',' << r.fit_seconds << ','
                << r.encode_seconds_per_1k << ',' << r.fit.iterations_run << ',' << r.config_digest << '\n';
      }
      return 0;
    }
    if (*syn) {
      const SynthResult s = synth_dataset(syn_n, syn_count, density, noise, syn_seed);
      detail::write_csv_file(syn_out, s.data.samples);
      if (!syn_t_out.empty()) detail::write_csv_file(syn_t_out, s.transform.transpose());
      if (!syn_z_out.empty()) detail::write_csv_file(syn_z_out, s.codes);
      out << json{{"record", "synth"}, {"n", syn_n}, {"N", syn_count}, {"density", nonzero_fraction(s.codes)}}.dump()
          << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ktl::cli

#endif  // KTL_CLI_HPP
