#include "relcheck/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "relcheck/errors.hpp"

namespace relcheck::harness {
namespace {

using nlohmann::json;

const std::vector<std::string> kColumns = {"round",    "party_id", "similarity", "included",
                                           "test_error", "accuracy", "threshold"};

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

json evaluation_json(double accuracy, double test_error) {
  return json{{"accuracy", accuracy}, {"test_error", test_error}};
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_csv(const run::RunReport& report, const config::TrainingRunConfig& cfg) {
  std::ostringstream out;
  out << "# relcheck-metrics schema_version=" << kMetricsSchemaVersion << " mode=" << config::to_string(report.mode)
      << " scale_bits=" << cfg.crypto.scale_bits << "\n";
  out << join(kColumns, ',') << "\n";
  const bool baseline = report.mode == config::Mode::kCentralized || report.mode == config::Mode::kStandalone;
  for (const auto& r : report.rounds) {
    std::vector<std::string> ids;
    std::vector<std::string> scores;
    std::vector<std::string> included;
    for (const auto& p : r.parties) {
      ids.push_back(p.party_id);
      scores.push_back(p.dropped ? "NA" : format_real(p.similarity));
      included.push_back(p.included ? "1" : "0");
    }
    out << r.round << ',' << (baseline ? config::to_string(report.mode) : join(ids, ';')) << ','
        << join(scores, ';') << ',' << join(included, ';') << ',' << format_real(r.test_error) << ','
        << format_real(r.accuracy) << ',' << (baseline ? "" : format_real(r.threshold)) << "\n";
  }
  return out.str();
}

std::string timings_csv(const run::RunReport& report) {
  std::ostringstream out;
  out << "round,initiator_train_s,initiator_encrypt_weights_s,initiator_component_s,participant_train_s_mean,"
         "participant_score_s_mean,participant_encrypt_weights_s_mean,server_blind_s,server_aggregate_s\n";
  for (const auto& r : report.rounds) {
    const auto& t = r.timings;
    double train = 0.0;
    double score = 0.0;
    double enc = 0.0;
    for (const auto& p : t.participants) {
      train += p.train_s;
      score += p.score_s;
      enc += p.encrypt_weights_s;
    }
    const double n = t.participants.empty() ? 1.0 : static_cast<double>(t.participants.size());
    out << r.round << ',' << format_real(t.initiator.train_s) << ',' << format_real(t.initiator.encrypt_weights_s)
        << ',' << format_real(t.initiator.encrypt_component_s) << ',' << format_real(train / n) << ','
        << format_real(score / n) << ',' << format_real(enc / n) << ',' << format_real(t.server.blind_s) << ','
        << format_real(t.server.aggregate_s) << "\n";
  }
  return out.str();
}

std::string summary_json(const run::RunReport& report, const config::TrainingRunConfig& cfg) {
  json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["mode"] = config::to_string(report.mode);
  j["config"] = json::parse(config::to_json(cfg));
  j["rounds_completed"] = report.rounds.size();
  j["stop_reason"] = report.stop_reason;
  j["initial"] = evaluation_json(report.initial.accuracy, report.initial.test_error);
  if (report.rounds.empty()) {
    j["final"] = evaluation_json(report.initial.accuracy, report.initial.test_error);
    j["final"]["validation_loss"] = report.initial_validation_loss;
  } else {
    const auto& last = report.rounds.back();
    j["final"] = evaluation_json(last.accuracy, last.test_error);
    j["final"]["validation_loss"] = last.validation_loss;
    json included = json::array();
    for (const auto& p : last.parties) {
      if (p.included) included.push_back(p.party_id);
    }
    j["final"]["included"] = included;
  }
  json participants = json::object();
  for (const auto& id : report.participant_ids) {
    std::size_t rounds = 0;
    std::size_t included = 0;
    std::size_t dropped = 0;
    double score_sum = 0.0;
    for (const auto& r : report.rounds) {
      for (const auto& p : r.parties) {
        if (p.party_id != id) continue;
        ++rounds;
        if (p.dropped) {
          ++dropped;
          continue;
        }
        included += p.included ? 1 : 0;
        score_sum += p.similarity;
      }
    }
    const std::size_t scored = rounds - dropped;
    participants[id] = {{"rounds", rounds},
                        {"included_rounds", included},
                        {"dropped_rounds", dropped},
                        {"mean_similarity", scored ? score_sum / static_cast<double>(scored) : 0.0}};
  }
  j["participants"] = participants;
  return j.dump(2) + "\n";
}

void write_run_outputs(const run::RunReport& report, const config::TrainingRunConfig& cfg,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / kMetricsFile, metrics_csv(report, cfg));
  write_file(out_dir / kTimingsFile, timings_csv(report));
  write_file(out_dir / kSummaryFile, summary_json(report, cfg));
}

MetricsFile parse_metrics(const std::string& text, std::string label) {
  MetricsFile f;
  f.label = std::move(label);
  f.raw = text;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# relcheck-metrics ", 0) != 0) {
    throw FormatError(f.label + ": missing metrics schema line");
  }
  const auto pos = line.find("schema_version=");
  if (pos == std::string::npos) throw FormatError(f.label + ": schema line has no schema_version");
  try {
    f.schema_version = std::stoi(line.substr(pos + 15));
  } catch (const std::exception&) {
    throw FormatError(f.label + ": unreadable schema_version");
  }
  if (!std::getline(in, line)) throw FormatError(f.label + ": missing column header");
  f.columns = split(line, ',');
  if (f.columns.empty() || f.columns.front() != "round") throw FormatError(f.label + ": first column must be round");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line, ',');
    if (row.size() != f.columns.size()) throw FormatError(f.label + ": ragged row '" + line + "'");
    f.rows.push_back(std::move(row));
  }
  return f;
}

MetricsFile read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string label = path.parent_path().filename().string();
  if (label.empty()) label = path.stem().string();
  return parse_metrics(buf.str(), label);
}

std::string report_table(const std::vector<MetricsFile>& files) {
  if (files.empty()) throw UsageError("report needs at least one metrics file");
  for (const auto& f : files) {
    if (f.schema_version != files.front().schema_version) {
      throw FormatError("schema version mismatch: " + files.front().label + " has " +
                        std::to_string(files.front().schema_version) + ", " + f.label + " has " +
                        std::to_string(f.schema_version));
    }
  }
  if (files.size() == 1) return files.front().raw;

  std::vector<std::map<long, const std::vector<std::string>*>> by_round(files.size());
  long max_round = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    for (const auto& row : files[i].rows) {
      const long r = std::stol(row.front());
      by_round[i][r] = &row;
      max_round = std::max(max_round, r);
    }
  }
  std::ostringstream out;
  out << "# relcheck-report schema_version=" << files.front().schema_version << "\n";
  out << "round";
  for (const auto& f : files) {
    for (std::size_t c = 1; c < f.columns.size(); ++c) out << ',' << f.label << ':' << f.columns[c];
  }
  out << "\n";
  for (long r = 1; r <= max_round; ++r) {
    out << r;
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto it = by_round[i].find(r);
      for (std::size_t c = 1; c < files[i].columns.size(); ++c) {
        out << ',' << (it == by_round[i].end() ? "NA" : (*it->second)[c]);
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string plot_series(const std::vector<MetricsFile>& files) {
  std::ostringstream out;
  out << "run,round,series,value\n";
  for (const auto& f : files) {
    auto col = [&](const std::string& name) -> std::ptrdiff_t {
      for (std::size_t c = 0; c < f.columns.size(); ++c) {
        if (f.columns[c] == name) return static_cast<std::ptrdiff_t>(c);
      }
      return -1;
    };
    const auto acc = col("accuracy");
    const auto err = col("test_error");
    const auto ids = col("party_id");
    const auto sim = col("similarity");
    for (const auto& row : f.rows) {
      if (acc >= 0) out << f.label << ',' << row[0] << ",accuracy," << row[acc] << "\n";
      if (err >= 0) out << f.label << ',' << row[0] << ",test_error," << row[err] << "\n";
      if (ids < 0 || sim < 0 || row[sim].empty()) continue;
      const auto names = split(row[ids], ';');
      const auto scores = split(row[sim], ';');
      for (std::size_t k = 0; k < names.size() && k < scores.size(); ++k) {
        out << f.label << ',' << row[0] << ",similarity:" << names[k] << ',' << scores[k] << "\n";
      }
    }
  }
  return out.str();
}

std::string timing_table(const std::vector<run::TimingRow>& rows, std::size_t repetitions) {
  std::ostringstream out;
  out << "# similarity score computation, mean of " << repetitions << " repetitions\n";
  out << "entity,seconds\n";
  for (const auto& r : rows) out << r.entity << ',' << format_real(r.seconds) << "\n";
  return out.str();
}

}  // namespace relcheck::harness
