// Copyright 2026 The FED Toolkit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fed/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fed/annotation.hpp"
#include "fed/harness.hpp"
#include "fed/humanstudy.hpp"
#include "fed/manifest.hpp"
#include "fed/metrics.hpp"
#include "fed/parallel.hpp"
#include "fed/pipeline.hpp"
#include "fed/report.hpp"

namespace fed::cli {

namespace fs = std::filesystem;
using config::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UsageError: return kUsageError;
    case ErrorCode::ConfigError: return kConfigError;
    default: return kWorkflowError;
  }
}

void write_run_meta(const fs::path& dir, const std::string& command, const config::ToolkitConfig& config,
                    const backends::BackendSuite& suite) {
  json used = json::array();
  auto add = [&](const backends::Backend* b) {
    if (b) used.push_back({{"id", b->id().str()}, {"deterministic", b->deterministic()}});
  };
  add(suite.embedder.get());
  add(suite.localizer.get());
  add(suite.perceptual.get());
  add(suite.judge.get());
  for (const auto& c : suite.classifiers) add(c.get());
  add(suite.editor.get());
  bool deterministic = true;
  for (const auto& b : used) deterministic = deterministic && b["deterministic"].get<bool>();
  const json meta{{"schema", "fed.run_meta.v1"},
                  {"command", command},
                  {"toolkit_version", FED_VERSION},
                  {"config_hash", config.hash()},
                  {"seed", config.seed},
                  {"deterministic", deterministic},
                  {"backends", std::move(used)},
                  {"config", config.canonical()}};
  fs::create_directories(dir);
  write_file_atomic((dir / "run.meta").string(), meta.dump() + "\n");
}

std::vector<EditResult> load_results_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) return load_records<EditResult>(dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("results.") && name.ends_with(".jsonl")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<EditResult> out;
  for (const auto& f : files) {
    auto part = load_records<EditResult>(f);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string cache_dir;
  bool no_cache = false;
};

config::ToolkitConfig resolve_config(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("FED_CONFIG"); env && *env) path = env;
  }
  config::ToolkitConfig c = path.empty() ? config::parse_config(json::object()) : config::load_config(path);
  if (g.seed) c.seed = *g.seed;
  if (g.workers) {
    if (*g.workers < 1) throw Error(ErrorCode::UsageError, "--workers must be >= 1");
    c.workers = *g.workers;
  }
  if (!g.cache_dir.empty()) c.cache_dir = g.cache_dir;
  return c;
}

struct Session {
  config::ToolkitConfig config;
  std::unique_ptr<backends::CallCache> cache;
  backends::BackendSuite suite;

  explicit Session(const Globals& g) : config(resolve_config(g)) {
    if (!g.no_cache) cache = std::make_unique<backends::CallCache>(config.cache_dir);
    suite = config::build_suite(config, cache.get());
  }
};

void check_interrupted() {
  if (stop_requested().load()) throw Error(ErrorCode::EditorFailure, "interrupted; partial manifests were flushed");
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"FED-Score toolkit: facial expression editing evaluation", "fed"};
  app.set_version_flag("--version", std::string(FED_VERSION));
  Globals g;
  bool help_env = false;
  app.add_option("--config", g.config_path, "Toolkit config file (else $FED_CONFIG, else defaults)");
  app.add_option("--seed", g.seed, "Seed for pair sampling and mock backends (overrides config)");
  app.add_option("--workers", g.workers, "Worker pool size (overrides config)");
  app.add_option("--cache-dir", g.cache_dir, "Backend call cache directory (overrides config)");
  app.add_flag("--no-cache", g.no_cache, "Do not read or write the call cache");
  app.add_flag("--help-env", help_env, "List the environment variables the toolkit reads");

  // build
  auto* build = app.add_subcommand("build", "Run the construction pipeline, or densify a benchmark");
  std::string sources, build_out, densify_benchmark;
  bool densify = false;
  build->add_option("--sources", sources, "Source manifest");
  build->add_option("--out", build_out, "Output directory (pipeline) or manifest (densify)")->required();
  build->add_flag("--densify", densify, "Add dense instructions to --benchmark instead");
  build->add_option("--benchmark", densify_benchmark, "Benchmark manifest to densify");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the annotation API over a data directory");
  std::string serve_data, serve_host = "127.0.0.1", serve_ui;
  int serve_port = 8080;
  std::vector<std::string> serve_annotators;
  serve->add_option("--data", serve_data, "Annotation data directory")->required();
  serve->add_option("--port", serve_port, "TCP port")->capture_default_str();
  serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve->add_option("--ui", serve_ui, "Static UI bundle served at /");
  serve->add_option("--annotator", serve_annotators, "Register an annotator id (repeatable)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run a model over a benchmark and score its results");
  std::string eval_benchmark, eval_model, eval_granularity = "simple", eval_out, eval_results;
  evaluate->add_option("--benchmark", eval_benchmark, "Benchmark manifest")->required();
  evaluate->add_option("--model", eval_model, "Model id from the config's models section")->required();
  evaluate->add_option("--granularity", eval_granularity, "simple or dense")->capture_default_str();
  evaluate->add_option("--out", eval_out, "Results directory (default: paths.output)");
  evaluate->add_option("--results", eval_results, "Score an existing results manifest instead of editing");

  // leaderboard
  auto* leaderboard = app.add_subcommand("leaderboard", "Aggregate score cards into a leaderboard");
  std::string lb_scores, lb_format = "markdown", lb_out;
  leaderboard->add_option("--scores", lb_scores, "Scores manifest or directory of scores*.jsonl")->required();
  leaderboard->add_option("--format", lb_format, "markdown or csv")->capture_default_str();
  leaderboard->add_option("--out", lb_out, "Write to this file instead of stdout");

  // human-study
  auto* human = app.add_subcommand("human-study", "Sample 2AFC pairs, or compute the human alignment report");
  std::string hs_results, hs_votes, hs_out, hs_pairs;
  std::vector<std::string> hs_plugins;
  std::optional<std::size_t> hs_sample;
  human->add_option("--results", hs_results, "Directory with results.*.jsonl and scores*.jsonl")->required();
  human->add_option("--votes", hs_votes, "Vote log (pairwise records)");
  human->add_option("--out", hs_out, "Report directory")->required();
  human->add_option("--pairs", hs_pairs, "Pair manifest (default: <results>/pairs.jsonl)");
  human->add_option("--plugin", hs_plugins, "Extra metric values (repeatable)");
  human->add_option("--sample", hs_sample, "Sample this many pairs into <out>/pairs.jsonl");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a manifest");
  std::string v_benchmark, v_results, v_scores, v_sources, v_pending;
  bool v_files = false;
  validate_cmd->add_option("--benchmark", v_benchmark, "Benchmark manifest");
  validate_cmd->add_option("--results", v_results, "Results manifest");
  validate_cmd->add_option("--scores", v_scores, "Scores manifest");
  validate_cmd->add_option("--sources", v_sources, "Source manifest");
  validate_cmd->add_option("--pending", v_pending, "Pending-verification manifest");
  validate_cmd->add_flag("--check-files", v_files, "Also verify referenced image files (benchmark)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Write a static per-sample HTML report");
  std::string r_scores, r_benchmark, r_results, r_out;
  report_cmd->add_option("--scores", r_scores, "Scores manifest or directory")->required();
  report_cmd->add_option("--benchmark", r_benchmark, "Benchmark manifest")->required();
  report_cmd->add_option("--results", r_results, "Results directory or manifest")->required();
  report_cmd->add_option("--out", r_out, "Report directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << FED_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    err << "error: UsageError: " << one_line(e.what()) << '\n';
    return kUsageError;
  }

  try {
    if (help_env) {
      for (const auto& [name, what] : config::environment_variables()) out << fmt::format("{:<20} {}\n", name, what);
      return kOk;
    }
    if (app.get_subcommands().empty()) {
      err << app.help();
      throw Error(ErrorCode::UsageError, "a subcommand is required");
    }

    if (build->parsed()) {
      Session s(g);
      if (densify) {
        if (densify_benchmark.empty()) throw Error(ErrorCode::UsageError, "--densify needs --benchmark");
        const fs::path in = densify_benchmark;
        const auto samples = load_records<BenchmarkSample>(in);
        const fs::path out_path = build_out;
        const auto run = pipeline::densify_benchmark(samples, in.parent_path(), s.suite, s.config.workers);
        std::vector<BenchmarkSample> rebased = run.samples;
        const fs::path out_root = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
        for (auto& sample : rebased) {
          sample.source = rebase(sample.source, in.parent_path().empty() ? "." : in.parent_path(), out_root);
          sample.ground_truth = rebase(sample.ground_truth, in.parent_path().empty() ? "." : in.parent_path(), out_root);
        }
        save_records(rebased, out_path);
        write_run_meta(out_root, "build --densify", s.config, s.suite);
        for (const auto& f : run.failures) err << "warning: " << one_line(f) << '\n';
        out << fmt::format("densified={} failed={}\n", rebased.size() - run.failures.size(), run.failures.size());
        check_interrupted();
        return kOk;
      }
      if (sources.empty()) throw Error(ErrorCode::UsageError, "build needs --sources (or --densify --benchmark)");
      const fs::path src_path = sources;
      const auto records = load_records<SourceRecord>(src_path);
      const auto run = pipeline::run_pipeline(records, src_path.parent_path().empty() ? "." : src_path.parent_path(),
                                              s.config.pipeline_config(), s.suite, build_out);
      write_run_meta(build_out, "build", s.config, s.suite);
      for (const auto& a : run.audit) {
        if (!a.candidate_id && a.action == pipeline::AuditAction::error) {
          err << "warning: " << a.source_id << ": " << one_line(a.reason) << '\n';
        }
      }
      out << fmt::format("sources={} failed={} generated={} emitted={} dropped={} tasks={}\n", run.sources_done,
                         run.sources_failed, run.generated, run.emitted, run.dropped, run.tasks.size());
      check_interrupted();
      return kOk;
    }

    if (serve->parsed()) {
      annotation::AnnotationStore store(serve_data);
      for (const auto& a : serve_annotators) store.register_annotator(a);
      annotation::ServerOptions options;
      if (!serve_ui.empty()) options.static_dir = serve_ui;
      annotation::AnnotationServer server(store, options);
      if (!server.bind(serve_host, serve_port)) {
        throw Error(ErrorCode::BackendUnavailable, fmt::format("cannot bind {}:{}", serve_host, serve_port));
      }
      std::jthread watcher([&server](std::stop_token st) {
        while (!st.stop_requested() && !stop_requested().load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
      });
      out << fmt::format("serving {} on http://{}:{}\n", serve_data, serve_host, serve_port) << std::flush;
      server.listen_after_bind();
      watcher.request_stop();
      return kOk;
    }

    if (evaluate->parsed()) {
      Session s(g);
      const auto granularity = parse_instruction_granularity(eval_granularity);
      const fs::path bench_path = eval_benchmark;
      const fs::path bench_root = bench_path.parent_path().empty() ? "." : bench_path.parent_path();
      const auto benchmark = load_records<BenchmarkSample>(bench_path);
      const fs::path out_dir = eval_out.empty() ? s.config.output_dir : fs::path(eval_out);
      fs::create_directories(out_dir);
      std::vector<EditResult> results;
      fs::path results_root = out_dir;
      if (!eval_results.empty()) {
        results = load_records<EditResult>(eval_results);
        results_root = fs::path(eval_results).parent_path().empty() ? "." : fs::path(eval_results).parent_path();
        std::erase_if(results, [&](const EditResult& r) { return r.model_id != eval_model || r.granularity != granularity; });
      } else {
        const auto it = s.config.models.find(eval_model);
        if (it == s.config.models.end()) {
          throw Error(ErrorCode::ConfigError, fmt::format("model '{}' is not configured under 'models'", eval_model));
        }
        s.suite.editor = config::make_editor(it->second, s.config);
        results = harness::run_model(*s.suite.editor, eval_model, benchmark, bench_root, granularity, out_dir,
                                     s.suite.calls, s.config.workers);
      }
      check_results_against(benchmark, results);
      const auto cards = metrics::score_batch(benchmark, results, bench_root, results_root, s.suite, s.config.metrics,
                                              s.config.workers);
      save_records(cards, out_dir / fmt::format("scores.{}.{}.jsonl", eval_model, to_string(granularity)));
      write_run_meta(out_dir, "evaluate", s.config, s.suite);
      std::size_t failed = 0;
      double sum = 0;
      for (const auto& c : cards) {
        if (c.ok()) {
          sum += c.fed;
        } else {
          ++failed;
        }
      }
      const std::size_t scored = cards.size() - failed;
      out << fmt::format("model={} granularity={} scored={} failed={} mean_fed={}\n", eval_model,
                         to_string(granularity), scored, failed,
                         scored ? fmt::format("{:.4f}", sum / static_cast<double>(scored)) : std::string("n/a"));
      check_interrupted();
      return kOk;
    }

    if (leaderboard->parsed()) {
      const auto format = harness::parse_table_format(lb_format);
      const auto cards = harness::load_scores(lb_scores);
      const auto rows = harness::aggregate(cards);
      const std::string text = harness::render_leaderboard(rows, format);
      if (lb_out.empty()) {
        out << text;
      } else {
        write_file_atomic(lb_out, text);
      }
      return kOk;
    }

    if (human->parsed()) {
      const config::ToolkitConfig c = resolve_config(g);
      const fs::path results_dir = hs_results;
      const fs::path out_dir = hs_out;
      fs::create_directories(out_dir);
      if (hs_sample) {
        auto results = load_results_dir(results_dir);
        auto pairs = study::sample_pairs(results, *hs_sample, c.seed);
        for (auto& p : pairs) {
          for (EditResult* side : {&p.left, &p.right}) side->edited = rebase(*side->edited, results_dir, out_dir);
        }
        save_records(pairs, out_dir / "pairs.jsonl");
        write_run_meta(out_dir, "human-study --sample", c, {});
        out << fmt::format("pairs={} seed={}\n", pairs.size(), c.seed);
        return kOk;
      }
      if (hs_votes.empty()) throw Error(ErrorCode::UsageError, "human-study needs --votes (or --sample)");
      const fs::path pairs_path = hs_pairs.empty() ? results_dir / "pairs.jsonl" : fs::path(hs_pairs);
      const auto pairs = load_records<study::PairTask>(pairs_path);
      const auto cards = harness::load_scores(results_dir);
      const auto votes = study::load_preference_votes(hs_votes);
      auto metric_suite = study::builtin_metrics();
      for (const auto& p : hs_plugins) {
        auto extra = study::load_plugin_metrics(p);
        std::move(extra.begin(), extra.end(), std::back_inserter(metric_suite));
      }
      const auto report = study::run_study_report(pairs, cards, votes, metric_suite);
      write_file_atomic((out_dir / "human_study.md").string(), study::render_study_markdown(report));
      write_file_atomic((out_dir / "human_study.jsonl").string(), study::render_study_records(report));
      write_run_meta(out_dir, "human-study", c, {});
      for (const auto& w : report.warnings) err << "warning: " << one_line(w) << '\n';
      out << study::render_study_markdown(report);
      return kOk;
    }

    if (validate_cmd->parsed()) {
      const int chosen = !v_benchmark.empty() + !v_results.empty() + !v_scores.empty() + !v_sources.empty() + !v_pending.empty();
      if (chosen != 1) throw Error(ErrorCode::UsageError, "validate takes exactly one of --benchmark, --results, --scores, --sources, --pending");
      std::size_t n = 0;
      if (!v_benchmark.empty()) {
        const auto b = load_records<BenchmarkSample>(v_benchmark);
        n = b.size();
        std::set<std::string> ids;
        for (const auto& s : b) {
          if (!ids.insert(s.sample_id).second) {
            throw Error(ErrorCode::InvariantViolation, fmt::format("duplicate sample_id '{}'", s.sample_id));
          }
        }
        if (v_files) {
          const fs::path root = fs::path(v_benchmark).parent_path().empty() ? "." : fs::path(v_benchmark).parent_path();
          const auto problems = verify_benchmark_files(b, root);
          for (const auto& p : problems) err << "problem: " << one_line(p) << '\n';
          if (!problems.empty()) {
            throw Error(ErrorCode::InvariantViolation, fmt::format("{} referenced file(s) failed verification", problems.size()));
          }
        }
      } else if (!v_results.empty()) {
        n = load_records<EditResult>(v_results).size();
      } else if (!v_scores.empty()) {
        n = load_records<ScoreCard>(v_scores).size();
      } else if (!v_sources.empty()) {
        n = load_records<SourceRecord>(v_sources).size();
      } else {
        n = load_records<pipeline::VerificationTask>(v_pending).size();
      }
      out << fmt::format("ok records={}\n", n);
      return kOk;
    }

    if (report_cmd->parsed()) {
      const auto cards = harness::load_scores(r_scores);
      const fs::path bench_path = r_benchmark;
      const auto benchmark = load_records<BenchmarkSample>(bench_path);
      const auto results = load_results_dir(r_results);
      const fs::path results_root = fs::is_directory(r_results) ? fs::path(r_results) : fs::path(r_results).parent_path();
      const auto summary = report::write_report(cards, benchmark, bench_path.parent_path().empty() ? "." : bench_path.parent_path(),
                                                results, results_root, r_out);
      for (const auto& m : summary.missing_images) err << "warning: " << one_line(m) << '\n';
      out << fmt::format("pages={} missing_images={}\n", summary.pages, summary.missing_images.size());
      return kOk;
    }
    throw Error(ErrorCode::UsageError, "unknown subcommand");
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: Exception: " << one_line(e.what()) << '\n';
    return kWorkflowError;
  }
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

}  // namespace fed::cli
