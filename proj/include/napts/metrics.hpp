#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "napts/globalization.hpp"

namespace napts {

/// One outer iteration as written to the metrics CSV.
struct RunRecord {
  std::size_t k = 0;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;      // batch objective at the start of the iteration
  double val_acc = 0.0;   // validation accuracy after the iteration
  double delta = 0.0;     // radius the trial step was bounded by
  double rho_c = 0.0;
  double rho_h = 0.0;
  bool accepted = false;  // first proposal passed its test
  std::size_t rejections = 0;
  double t_phase1 = 0.0;
  double t_phase2 = 0.0;
  double t_phase3 = 0.0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kMetricsHeader =
    "k,epoch,batch,loss,val_acc,delta,rho_c,rho_h,accepted,rejections,t_phase1,t_phase2,t_phase3";

/// Real fields are printed with 12 significant digits.
std::string format_metrics_csv(std::span<const RunRecord> records);
void write_metrics_csv(std::span<const RunRecord> records, const std::filesystem::path& path);

std::vector<RunRecord> parse_metrics_csv(std::istream& in);
std::vector<RunRecord> read_metrics_csv(const std::filesystem::path& path);

inline constexpr const char* kHistoryHeader = "index,objective,predicted_decrease,successful";

/// Acceptance-test log, one row per test, printed with 17 significant digits
/// so a replay reads back the exact doubles.
std::string format_history_csv(std::span<const HistoryEntry> log);
void write_history_csv(std::span<const HistoryEntry> log, const std::filesystem::path& path);
std::vector<HistoryEntry> parse_history_csv(std::istream& in);

}  // namespace napts
