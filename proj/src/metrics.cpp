#include "napts/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace napts {

namespace {

void append_real(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  out += buf;
}

double parse_real(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw std::runtime_error("metrics CSV line " + std::to_string(line) + ": bad number '" +
                             field + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw std::runtime_error("metrics CSV line " + std::to_string(line) + ": bad integer '" +
                             field + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_metrics_csv(std::span<const RunRecord> records) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const RunRecord& r : records) {
    out += std::to_string(r.k) + ',' + std::to_string(r.epoch) + ',' + std::to_string(r.batch);
    for (double v : {r.loss, r.val_acc, r.delta, r.rho_c, r.rho_h}) {
      out += ',';
      append_real(out, v);
    }
    out += r.accepted ? ",1," : ",0,";
    out += std::to_string(r.rejections);
    for (double v : {r.t_phase1, r.t_phase2, r.t_phase3}) {
      out += ',';
      append_real(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_metrics_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("metrics: no records to write");
  const std::string text = format_metrics_csv(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("metrics: cannot write " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("metrics: write failed for " + path.string());
}

std::vector<RunRecord> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics CSV: missing or unexpected header");
  }
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 13) {
      throw std::runtime_error("metrics CSV line " + std::to_string(line_no) + ": expected 13 "
                               "fields, got " + std::to_string(f.size()));
    }
    RunRecord r;
    r.k = parse_count(f[0], line_no);
    r.epoch = parse_count(f[1], line_no);
    r.batch = parse_count(f[2], line_no);
    r.loss = parse_real(f[3], line_no);
    r.val_acc = parse_real(f[4], line_no);
    r.delta = parse_real(f[5], line_no);
    r.rho_c = parse_real(f[6], line_no);
    r.rho_h = parse_real(f[7], line_no);
    r.accepted = parse_count(f[8], line_no) != 0;
    r.rejections = parse_count(f[9], line_no);
    r.t_phase1 = parse_real(f[10], line_no);
    r.t_phase2 = parse_real(f[11], line_no);
    r.t_phase3 = parse_real(f[12], line_no);
    records.push_back(r);
  }
  return records;
}

std::vector<RunRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot read " + path.string());
  return parse_metrics_csv(in);
}

std::string format_history_csv(std::span<const HistoryEntry> log) {
  std::string out = kHistoryHeader;
  out += '\n';
  char buf[64];
  for (const HistoryEntry& e : log) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,", e.objective, e.predicted_decrease);
    out += std::to_string(e.index) + buf + (e.successful ? "1\n" : "0\n");
  }
  return out;
}

void write_history_csv(std::span<const HistoryEntry> log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("history: cannot write " + path.string());
  out << format_history_csv(log);
  if (!out.flush()) throw std::runtime_error("history: write failed for " + path.string());
}

std::vector<HistoryEntry> parse_history_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) {
    throw std::runtime_error("history CSV: missing or unexpected header");
  }
  std::vector<HistoryEntry> log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& field : f) std::getline(ss, field, ',');
    HistoryEntry e;
    e.index = parse_count(f[0], line_no);
    e.objective = parse_real(f[1], line_no);
    e.predicted_decrease = parse_real(f[2], line_no);
    e.successful = parse_count(f[3], line_no) != 0;
    log.push_back(e);
  }
  return log;
}

}  // namespace napts
