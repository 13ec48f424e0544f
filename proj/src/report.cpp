#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "streampca/errors.hpp"
#include "streampca/harness.hpp"

namespace streampca {

namespace {

using nlohmann::json;

void append_double(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_int(std::string& out, std::int64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

bool safe_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void require_finite(const std::vector<double>& xs, const std::string& field,
                    const std::string& learner) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw DiagnosticsError("non-finite value in " + field + " for learner " +
                             learner);
    }
  }
}

void require_finite(double x, const std::string& field,
                    const std::string& learner) {
  if (!std::isfinite(x)) {
    throw DiagnosticsError("non-finite value in " + field + " for learner " +
                           learner);
  }
}

void check_report(const RunResult& result) {
  if (result.replicates < 1) {
    throw DiagnosticsError("result has no replicates");
  }
  for (const LearnerReport& lr : result.learners) {
    if (!safe_name(lr.name)) {
      throw DiagnosticsError("learner name '" + lr.name +
                             "' is not filesystem-safe");
    }
    const size_t g = lr.grid.size();
    if (g == 0) throw DiagnosticsError("empty grid for learner " + lr.name);
    if (lr.avg_regret_mean.size() != g || lr.avg_regret_stderr.size() != g ||
        (!lr.alignment_mean.empty() && lr.alignment_mean.size() != g) ||
        (!lr.rank_one_ok_rate.empty() && lr.rank_one_ok_rate.size() != g)) {
      throw DiagnosticsError("curve column lengths disagree for learner " +
                             lr.name);
    }
    require_finite(lr.avg_regret_mean, "avg_regret_mean", lr.name);
    require_finite(lr.avg_regret_stderr, "avg_regret_stderr", lr.name);
    require_finite(lr.alignment_mean, "alignment_mean", lr.name);
    require_finite(lr.rank_one_ok_rate, "rank_one_ok_rate", lr.name);
    require_finite(lr.final_avg_regret, "final_avg_regret", lr.name);
    require_finite(lr.final_stderr, "final_stderr", lr.name);
    if (lr.rank_one_error_rate) {
      require_finite(*lr.rank_one_error_rate, "rank_one_error_rate", lr.name);
    }
    require_finite(lr.steps_per_sec, "steps_per_sec", lr.name);
  }
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::string summary_body(const RunResult& result) {
  std::string body =
      "learner,final_avg_regret,final_stderr,rank_one_error_rate,steps_per_sec\n";
  for (const LearnerReport& lr : result.learners) {
    body += lr.name;
    body += ',';
    append_double(body, lr.final_avg_regret);
    body += ',';
    append_double(body, lr.final_stderr);
    body += ',';
    if (lr.rank_one_error_rate) append_double(body, *lr.rank_one_error_rate);
    body += ',';
    append_double(body, lr.steps_per_sec);
    body += '\n';
  }
  return body;
}

json to_json(const RunResult& result) {
  json j;
  j["replicates"] = result.replicates;
  j["records_per_replicate"] = result.records_per_replicate;
  j["warnings"] = result.warnings;
  j["learners"] = json::array();
  for (const LearnerReport& lr : result.learners) {
    json l;
    l["name"] = lr.name;
    l["grid"] = lr.grid;
    l["avg_regret_mean"] = lr.avg_regret_mean;
    l["avg_regret_stderr"] = lr.avg_regret_stderr;
    l["alignment_mean"] = lr.alignment_mean;
    l["rank_one_ok_rate"] = lr.rank_one_ok_rate;
    l["final_avg_regret"] = lr.final_avg_regret;
    l["final_stderr"] = lr.final_stderr;
    if (lr.rank_one_error_rate) {
      l["rank_one_error_rate"] = *lr.rank_one_error_rate;
    } else {
      l["rank_one_error_rate"] = nullptr;
    }
    l["steps_per_sec"] = lr.steps_per_sec;
    j["learners"].push_back(std::move(l));
  }
  return j;
}

}  // namespace

ReportPaths write_report(const RunResult& result, const std::string& out_dir) {
  check_report(result);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + out_dir + ": " + ec.message());
  }

  ReportPaths paths;
  for (const LearnerReport& lr : result.learners) {
    std::string body = "n,avg_regret,avg_regret_stderr,alignment,rank_one_ok_rate\n";
    for (size_t gi = 0; gi < lr.grid.size(); ++gi) {
      append_int(body, lr.grid[gi]);
      body += ',';
      append_double(body, lr.avg_regret_mean[gi]);
      body += ',';
      append_double(body, lr.avg_regret_stderr[gi]);
      body += ',';
      if (!lr.alignment_mean.empty()) append_double(body, lr.alignment_mean[gi]);
      body += ',';
      if (!lr.rank_one_ok_rate.empty()) {
        append_double(body, lr.rank_one_ok_rate[gi]);
      }
      body += '\n';
    }
    const std::string path =
        (std::filesystem::path(out_dir) / ("curve_" + lr.name + ".csv")).string();
    write_text(path, body);
    paths.curve_files.push_back(path);
  }

  paths.summary_file =
      (std::filesystem::path(out_dir) / "summary.csv").string();
  write_text(paths.summary_file, summary_body(result));

  paths.result_json = (std::filesystem::path(out_dir) / "result.json").string();
  write_text(paths.result_json, to_json(result).dump(2) + "\n");
  return paths;
}

void write_summary_csv(const RunResult& result, const std::string& path) {
  check_report(result);
  write_text(path, summary_body(result));
}

RunResult read_result_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  RunResult result;
  try {
    result.replicates = j.at("replicates").get<int>();
    result.records_per_replicate = j.at("records_per_replicate").get<std::int64_t>();
    result.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const json& l : j.at("learners")) {
      LearnerReport lr;
      lr.name = l.at("name").get<std::string>();
      lr.grid = l.at("grid").get<std::vector<std::int64_t>>();
      lr.avg_regret_mean = l.at("avg_regret_mean").get<std::vector<double>>();
      lr.avg_regret_stderr = l.at("avg_regret_stderr").get<std::vector<double>>();
      lr.alignment_mean = l.at("alignment_mean").get<std::vector<double>>();
      lr.rank_one_ok_rate = l.at("rank_one_ok_rate").get<std::vector<double>>();
      lr.final_avg_regret = l.at("final_avg_regret").get<double>();
      lr.final_stderr = l.at("final_stderr").get<double>();
      if (!l.at("rank_one_error_rate").is_null()) {
        lr.rank_one_error_rate = l.at("rank_one_error_rate").get<double>();
      }
      lr.steps_per_sec = l.at("steps_per_sec").get<double>();
      result.learners.push_back(std::move(lr));
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  return result;
}

}  // namespace streampca
