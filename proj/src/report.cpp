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

#include "fed/report.hpp"

#include <map>
#include <optional>
#include <tuple>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed::report {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kStyle = R"(<style>
body{font-family:sans-serif;margin:2em;color:#222}
table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:4px 8px;text-align:right}
td:first-child,th:first-child{text-align:left}
.images{display:flex;gap:1em}.images figure{margin:0}
.missing{width:192px;height:192px;background:#eee;display:flex;align-items:center;justify-content:center;color:#888}
.badge{display:inline-block;padding:2px 6px;border-radius:3px;font-size:80%}.error{background:#c33;color:#fff}
</style>
)";

std::string page_name(const ScoreCard& c) {
  std::string raw = fmt::format("{}__{}__{}", c.model_id, to_string(c.granularity), c.sample_id);
  for (char& ch : raw) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  }
  return raw + ".html";
}

struct Thumb {
  std::optional<std::string> file;  // relative to out_dir
  std::string error;
};

Thumb thumbnail(const std::optional<ImageRef>& ref, const fs::path& root, const fs::path& out_dir, int side) {
  if (!ref) return {std::nullopt, "MissingImage: no image recorded"};
  try {
    const Image image = load_image(*ref, root);
    const std::string rel = fmt::format("thumbs/{}.png", ref->content_hash);
    if (!fs::exists(out_dir / rel)) write_file_atomic((out_dir / rel).string(), encode_png(downscale(image, side)));
    return {rel, ""};
  } catch (const Error& e) {
    return {std::nullopt, fmt::format("MissingImage: {}", e.what())};
  }
}

std::string figure(std::string_view caption, const Thumb& t, std::string_view prefix) {
  if (t.file) {
    return fmt::format("<figure><img src=\"{}{}\" alt=\"{}\"><figcaption>{}</figcaption></figure>\n", prefix,
                       html_escape(*t.file), caption, caption);
  }
  return fmt::format(
      "<figure><div class=\"missing\">no image</div><figcaption>{} <span class=\"badge error\">{}</span></figcaption></figure>\n",
      caption, html_escape(t.error));
}

}  // namespace

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

ReportSummary write_report(std::span<const ScoreCard> cards, std::span<const BenchmarkSample> benchmark,
                           const fs::path& benchmark_root, std::span<const EditResult> results,
                           const fs::path& results_root, const fs::path& out_dir, int thumbnail_side) {
  std::map<std::string, const BenchmarkSample*> samples;
  for (const auto& s : benchmark) samples[s.sample_id] = &s;
  std::map<std::tuple<std::string, std::string, InstructionGranularity>, const EditResult*> edits;
  for (const auto& r : results) edits[{r.model_id, r.sample_id, r.granularity}] = &r;

  fs::create_directories(out_dir / "samples");
  fs::create_directories(out_dir / "thumbs");
  ReportSummary summary;
  std::string rows;
  for (const ScoreCard& c : cards) {
    const std::string page = page_name(c);
    const BenchmarkSample* sample = samples.contains(c.sample_id) ? samples.at(c.sample_id) : nullptr;
    const auto edit_it = edits.find({c.model_id, c.sample_id, c.granularity});
    const EditResult* edit = edit_it == edits.end() ? nullptr : edit_it->second;

    const Thumb src = thumbnail(sample ? std::optional(sample->source) : std::nullopt, benchmark_root, out_dir, thumbnail_side);
    const Thumb gt = thumbnail(sample ? std::optional(sample->ground_truth) : std::nullopt, benchmark_root, out_dir, thumbnail_side);
    const Thumb edited = thumbnail(edit ? edit->edited : std::nullopt, results_root, out_dir, thumbnail_side);
    for (const Thumb* t : {&src, &gt, &edited}) {
      if (!t->file) summary.missing_images.push_back(fmt::format("{}: {}", page, t->error));
    }

    std::string body = fmt::format("<!doctype html><html><head><meta charset=\"utf-8\"><title>{}</title>{}</head><body>\n",
                                   html_escape(c.sample_id), kStyle);
    body += fmt::format("<p><a href=\"../index.html\">index</a></p>\n<h1>{} / {} ({})</h1>\n", html_escape(c.model_id),
                        html_escape(c.sample_id), to_string(c.granularity));
    if (sample) {
      const auto instruction = sample->instruction_for(c.granularity);
      body += fmt::format("<p>{} &rarr; {}: {}</p>\n", to_string(sample->src_emotion), to_string(sample->trg_emotion),
                          html_escape(instruction.value_or("(no instruction)")));
    }
    body += "<div class=\"images\">\n" + figure("source", src, "../") + figure("ground truth", gt, "../") +
            figure("edited", edited, "../") + "</div>\n";
    if (c.ok()) {
      body += "<table><tr><th>metric</th><th>raw</th><th>normalized</th></tr>\n";
      body += fmt::format("<tr><td>ID</td><td>{:.4f}</td><td>{:.4f}</td></tr>\n", c.id_raw, c.id01);
      body += fmt::format("<tr><td>BG (RMSE, lower is better)</td><td>{:.3f}</td><td>{:.4f}</td></tr>\n", c.bg_rmse, c.bg01);
      body += fmt::format("<tr><td>PQ</td><td>{}</td><td>{:.2f}</td></tr>\n", c.pq_raw, c.pq01);
      body += fmt::format("<tr><td>SC</td><td>{}</td><td>{:.2f}</td></tr>\n", c.sc_raw, c.sc01);
      body += fmt::format("<tr><td>GTA</td><td>{}</td><td>{:.2f}</td></tr>\n", c.gta_raw, c.gta01);
      body += fmt::format("<tr><td>REG</td><td>{:.4f}</td><td>{:.4f}</td></tr>\n", c.reg_ratio, c.s_reg);
      body += fmt::format("<tr><td>S_fid</td><td></td><td>{:.4f}</td></tr>\n", c.s_fid);
      body += fmt::format("<tr><td>S_align</td><td></td><td>{:.4f}</td></tr>\n", c.s_align);
      body += fmt::format("<tr><th>FED-Score</th><td></td><th>{:.4f}</th></tr>\n</table>\n", c.fed);
    } else {
      body += fmt::format("<p><span class=\"badge error\">not scored</span> {}</p>\n", html_escape(*c.error));
    }
    body += "</body></html>\n";
    write_file_atomic((out_dir / "samples" / page).string(), body);
    ++summary.pages;

    rows += fmt::format("<tr><td><a href=\"samples/{}\">{}</a></td><td>{}</td><td>{}</td><td>{}</td></tr>\n", page,
                        html_escape(c.sample_id), html_escape(c.model_id), to_string(c.granularity),
                        c.ok() ? fmt::format("{:.4f}", c.fed) : std::string("<span class=\"badge error\">error</span>"));
  }

  std::string index = fmt::format("<!doctype html><html><head><meta charset=\"utf-8\"><title>FED-Score report</title>{}</head><body>\n<h1>FED-Score report</h1>\n",
                                  kStyle);
  if (cards.empty()) {
    index += "<p>No score cards to show.</p>\n";
  } else {
    index += "<table><tr><th>sample</th><th>model</th><th>granularity</th><th>FED-Score</th></tr>\n" + rows + "</table>\n";
  }
  index += "</body></html>\n";
  write_file_atomic((out_dir / "index.html").string(), index);
  return summary;
}

}  // namespace fed::report
