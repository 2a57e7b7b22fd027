#include "adarank/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "adarank/numerics.hpp"

namespace adarank {

RunSummary summarize(const RunResult& run) {
  return summary_from_json(run_summary_json(run));
}

RunSummary summary_from_json(const Json& j) {
  RunSummary s;
  s.optimizer = j.at("optimizer").get<std::string>();
  s.scorer = j.at("scorer").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.task_spec = j.at("task_spec");
  s.metric = j.at("metric").get<std::string>();
  s.higher_is_better = j.at("higher_is_better").get<bool>();
  s.best_val = j.at("best_val").get<double>();
  s.final_ranks = j.at("final_ranks").get<std::vector<std::size_t>>();
  return s;
}

SummaryTable compare_scorers(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw std::invalid_argument("compare_scorers: no runs");
  SummaryTable table;
  table.metric = runs.front().metric;
  table.higher_is_better = runs.front().higher_is_better;

  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> groups;
  for (const auto& r : runs) {
    if (r.metric != table.metric) throw std::invalid_argument("compare_scorers: mixed metrics");
    if (!groups.contains(r.label())) order.push_back(r.label());
    groups[r.label()].push_back(&r);
  }

  // Every group must cover the same (seed -> task) set.
  auto task_map = [](const std::vector<const RunSummary*>& g) {
    std::map<std::uint64_t, Json> m;
    for (const auto* r : g) m[r->seed] = r->task_spec;
    return m;
  };
  const auto reference = task_map(groups[order.front()]);
  for (const auto& label : order) {
    if (task_map(groups[label]) != reference) {
      throw std::invalid_argument("compare_scorers: '" + label + "' was run on different tasks or seeds than '" +
                                  order.front() + "'");
    }
  }

  for (const auto& label : order) {
    const auto& g = groups[label];
    SummaryRow row{g.front()->optimizer, g.front()->scorer, g.size(), 0.0, 0.0, {}};
    for (const auto* r : g) row.mean += r->best_val;
    row.mean /= static_cast<double>(g.size());
    if (g.size() > 1) {
      double ss = 0.0;
      for (const auto* r : g) ss += (r->best_val - row.mean) * (r->best_val - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(g.size() - 1));
    }
    table.rows.push_back(std::move(row));
  }

  std::vector<std::size_t> idx(table.rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return table.higher_is_better ? table.rows[a].mean > table.rows[b].mean
                                  : table.rows[a].mean < table.rows[b].mean;
  });
  table.rows[idx[0]].mark = "best";
  if (idx.size() > 1) table.rows[idx[1]].mark = "second";
  return table;
}

void write_summary_csv(std::ostream& out, const SummaryTable& table) {
  out << "optimizer,scorer,runs,mean_" << table.metric << ",std_" << table.metric << ",mark\n";
  out << std::setprecision(17);
  for (const auto& r : table.rows) {
    out << r.optimizer << ',' << r.scorer << ',' << r.runs << ',' << r.mean << ',' << r.stddev << ','
        << r.mark << '\n';
  }
}

void render_summary(std::ostream& out, const SummaryTable& table) {
  out << std::left << std::setw(10) << "optimizer" << std::setw(14) << "scorer" << std::setw(6)
      << "runs" << table.metric << " (mean +- std, " << (table.higher_is_better ? "higher" : "lower")
      << " is better)\n";
  for (const auto& r : table.rows) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(4) << r.mean << " +- " << r.stddev;
    out << std::left << std::setw(10) << r.optimizer << std::setw(14) << r.scorer << std::setw(6)
        << r.runs << std::setw(22) << cell.str();
    if (r.mark == "best") out << " **best**";
    if (r.mark == "second") out << " (second)";
    out << '\n';
  }
}

std::vector<RunSummary> load_run_summaries(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "summary.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> out;
  for (const auto& f : files) out.push_back(summary_from_json(read_json_file(f)));
  return out;
}

std::vector<TraceCorrelation> score_trace_report(const std::vector<TraceSnapshot>& traces) {
  if (traces.empty()) throw std::invalid_argument("score trace is empty");
  std::vector<TraceCorrelation> out;
  for (const auto& snap : traces) {
    const auto s = snap.triplet_scores.find("sensitivity");
    const auto n = snap.triplet_scores.find("snr_mean");
    if (s == snap.triplet_scores.end() || n == snap.triplet_scores.end()) {
      throw std::invalid_argument("score trace at step " + std::to_string(snap.step) +
                                  " lacks sensitivity or snr_mean scores (needs an ivon run with "
                                  "trace_scores enabled)");
    }
    out.push_back({snap.step, spearman(s->second, n->second)});
  }
  return out;
}

std::vector<TraceSnapshot> load_score_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TraceSnapshot> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    out.push_back({j.at("step").get<std::size_t>(),
                   j.at("scores").get<std::map<std::string, std::vector<double>>>()});
  }
  return out;
}

}  // namespace adarank
