// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/report.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace decov {

CoverageReport build_report(const CoverableUniverse& universe, const CoverageFacts& facts) {
  CoverageReport rep;
  size_t lines_total = 0, lines_hit = 0, branches_total = 0, branches_hit = 0;

  for (auto& [file, line] : universe.lines) {
    ++lines_total;
    FileReport& fr = rep.files[file];
    if (facts.lines.count({file, line})) {
      fr.executed_lines.push_back(line);
      ++lines_hit;
    } else {
      fr.missing_lines.push_back(line);
    }
  }
  for (auto& [file, origin, dest] : universe.branches) {
    ++branches_total;
    FileReport& fr = rep.files[file];
    if (facts.branches.count({file, origin, dest})) {
      fr.executed_branches.push_back({origin, dest});
      ++branches_hit;
    } else {
      fr.missing_branches.push_back({origin, dest});
    }
  }
  rep.line_percent = lines_total ? 100.0 * (double)lines_hit / (double)lines_total : 100.0;
  rep.branch_percent =
      branches_total ? 100.0 * (double)branches_hit / (double)branches_total : 100.0;
  return rep;
}

CoverageFacts facts_from_trace(const TraceStore& store) {
  CoverageFacts facts;
  facts.lines = store.lines;
  for (auto& [file, from, to] : store.arcs) facts.branches.insert({file, from, to});
  return facts;
}

std::string report_to_json(const CoverageReport& report) {
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  for (auto& [path, fr] : report.files) {
    nlohmann::ordered_json f;
    f["executed_lines"] = fr.executed_lines;
    f["missing_lines"] = fr.missing_lines;
    auto pairs = [](const std::vector<std::pair<int, int>>& v) {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (auto& [a, b] : v) out.push_back({a, b});
      return out;
    };
    f["executed_branches"] = pairs(fr.executed_branches);
    f["missing_branches"] = pairs(fr.missing_branches);
    files[path] = std::move(f);
  }
  nlohmann::ordered_json root;
  root["files"] = std::move(files);
  root["summary"] = {{"line_percent", report.line_percent},
                     {"branch_percent", report.branch_percent}};
  return root.dump(2) + "\n";
}

CoverageReport report_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("bad report JSON: ") + e.what());
  }
  CoverageReport rep;
  try {
    for (auto& [path, f] : root.at("files").items()) {
      FileReport fr;
      fr.executed_lines = f.at("executed_lines").get<std::vector<int>>();
      fr.missing_lines = f.at("missing_lines").get<std::vector<int>>();
      auto pairs = [](const nlohmann::json& arr) {
        std::vector<std::pair<int, int>> out;
        for (auto& e : arr) out.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
        return out;
      };
      fr.executed_branches = pairs(f.at("executed_branches"));
      fr.missing_branches = pairs(f.at("missing_branches"));
      rep.files[path] = std::move(fr);
    }
    rep.line_percent = root.at("summary").at("line_percent").get<double>();
    rep.branch_percent = root.at("summary").at("branch_percent").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("report schema mismatch: ") + e.what());
  }
  return rep;
}

std::string report_to_text(const CoverageReport& report) {
  std::ostringstream out;
  auto join_ints = [](const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return s.empty() ? "-" : s;
  };
  auto join_pairs = [](const std::vector<std::pair<int, int>>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i].first) + "->" + std::to_string(v[i].second);
    }
    return s.empty() ? "-" : s;
  };
  for (auto& [path, fr] : report.files) {
    size_t lines = fr.executed_lines.size() + fr.missing_lines.size();
    size_t branches = fr.executed_branches.size() + fr.missing_branches.size();
    out << path << "\n";
    out << "  lines:    " << fr.executed_lines.size() << "/" << lines
        << "  missing: " << join_ints(fr.missing_lines) << "\n";
    if (branches)
      out << "  branches: " << fr.executed_branches.size() << "/" << branches
          << "  missing: " << join_pairs(fr.missing_branches) << "\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "total: %.1f%% lines, %.1f%% branches\n",
                report.line_percent, report.branch_percent);
  out << buf;
  return out.str();
}

namespace {

template <typename T, typename Fmt>
void diff_sets(std::vector<std::string>& out, const std::string& file,
               const std::string& what, std::vector<T> a, std::vector<T> b, Fmt fmt) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<T> only_a, only_b;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
  for (auto& x : only_a) out.push_back(file + ": " + what + " " + fmt(x) + " only in A");
  for (auto& x : only_b) out.push_back(file + ": " + what + " " + fmt(x) + " only in B");
}

}  // namespace

std::vector<std::string> diff_reports(const CoverageReport& a, const CoverageReport& b) {
  std::vector<std::string> out;
  auto int_fmt = [](int x) { return std::to_string(x); };
  auto pair_fmt = [](std::pair<int, int> p) {
    return std::to_string(p.first) + "->" + std::to_string(p.second);
  };
  for (auto& [path, fa] : a.files) {
    auto it = b.files.find(path);
    if (it == b.files.end()) {
      out.push_back(path + ": only in A");
      continue;
    }
    const FileReport& fb = it->second;
    diff_sets(out, path, "executed line", fa.executed_lines, fb.executed_lines, int_fmt);
    diff_sets(out, path, "missing line", fa.missing_lines, fb.missing_lines, int_fmt);
    diff_sets(out, path, "executed branch", fa.executed_branches, fb.executed_branches,
              pair_fmt);
    diff_sets(out, path, "missing branch", fa.missing_branches, fb.missing_branches,
              pair_fmt);
  }
  for (auto& [path, fb] : b.files)
    if (!a.files.count(path)) out.push_back(path + ": only in B");
  if (a.line_percent != b.line_percent)
    out.push_back("summary: line_percent differs");
  if (a.branch_percent != b.branch_percent)
    out.push_back("summary: branch_percent differs");
  return out;
}

}  // namespace decov
