#include "napts/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace napts {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
constexpr double kWidth = 960, kHeight = 420;
constexpr double kPanelWidth = 380, kPanelHeight = 300, kTop = 50;
constexpr double kLeftPanelX = 70, kRightPanelX = 540;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  double map(double v, double pixel_lo, double pixel_hi) const {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

struct EpochSummary {
  std::vector<double> epochs;
  std::vector<double> mean_loss;
  std::vector<double> last_acc;
};

EpochSummary summarize_epochs(const std::vector<RunRecord>& records) {
  std::map<std::size_t, std::pair<double, std::size_t>> loss;
  std::map<std::size_t, double> acc;
  for (const RunRecord& r : records) {
    auto& [sum, count] = loss[r.epoch];
    sum += r.loss;
    ++count;
    acc[r.epoch] = r.val_acc;
  }
  EpochSummary s;
  for (const auto& [epoch, entry] : loss) {
    s.epochs.push_back(static_cast<double>(epoch + 1));
    s.mean_loss.push_back(entry.first / static_cast<double>(entry.second));
    s.last_acc.push_back(acc[epoch]);
  }
  return s;
}

void frame(std::ostringstream& out, double x0, const std::string& title, const Axis& xs,
           const Axis& ys, const std::string& xlabel, const std::string& ylabel) {
  out << "<g class=\"panel\">\n";
  out << "<rect x=\"" << x0 << "\" y=\"" << kTop << "\" width=\"" << kPanelWidth
      << "\" height=\"" << kPanelHeight << "\" fill=\"none\" stroke=\"#333\"/>\n";
  out << "<text x=\"" << x0 + kPanelWidth / 2 << "\" y=\"" << kTop - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xs.lo + (xs.hi - xs.lo) * i / 4.0;
    const double fy = ys.lo + (ys.hi - ys.lo) * i / 4.0;
    const double px = xs.map(fx, x0, x0 + kPanelWidth);
    const double py = ys.map(fy, kTop + kPanelHeight, kTop);
    out << "<text x=\"" << px << "\" y=\"" << kTop + kPanelHeight + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << num(fx) << "</text>\n";
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 3
        << "\" text-anchor=\"end\" font-size=\"10\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << x0 + kPanelWidth / 2 << "\" y=\"" << kTop + kPanelHeight + 34
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(xlabel) << "</text>\n";
  out << "<text x=\"" << x0 - 48 << "\" y=\"" << kTop + kPanelHeight / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << x0 - 48 << ' '
      << kTop + kPanelHeight / 2 << ")\">" << escape(ylabel) << "</text>\n";
  out << "</g>\n";
}

void curve(std::ostringstream& out, const std::string& cls, const std::string& method,
           const char* color, bool dashed, const std::vector<double>& xs,
           const std::vector<double>& ys, const Axis& ax, const Axis& ay, double x0) {
  out << "<polyline class=\"curve " << cls << "\" data-method=\"" << escape(method)
      << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dashed) out << " stroke-dasharray=\"5,3\"";
  out << " points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ' ';
    out << num(ax.map(xs[i], x0, x0 + kPanelWidth)) << ','
        << num(ay.map(ys[i], kTop + kPanelHeight, kTop));
  }
  out << "\"/>\n";
  if (xs.size() == 1) {
    out << "<circle cx=\"" << num(ax.map(xs[0], x0, x0 + kPanelWidth)) << "\" cy=\""
        << num(ay.map(ys[0], kTop + kPanelHeight, kTop)) << "\" r=\"2.5\" fill=\"" << color
        << "\"/>\n";
  }
}

}  // namespace

std::string render_plot_svg(std::span<const MethodSeries> series) {
  if (series.empty()) throw std::invalid_argument("plot: no series");

  std::vector<EpochSummary> epochs;
  std::vector<std::vector<double>> iters, cumulative;
  Axis epoch_axis{1.0, 1.0}, loss_axis{0.0, 0.0}, iter_axis{0.0, 0.0}, rej_axis{0.0, 0.0};
  const Axis acc_axis{0.0, 1.0};
  for (const MethodSeries& s : series) {
    epochs.push_back(summarize_epochs(s.records));
    for (double e : epochs.back().epochs) epoch_axis.hi = std::max(epoch_axis.hi, e);
    for (double l : epochs.back().mean_loss)
      if (std::isfinite(l)) loss_axis.hi = std::max(loss_axis.hi, l);
    std::vector<double> xs, ys;
    double total = 0.0;
    for (const RunRecord& r : s.records) {
      total += static_cast<double>(r.rejections);
      xs.push_back(static_cast<double>(r.k));
      ys.push_back(total);
      iter_axis.hi = std::max(iter_axis.hi, static_cast<double>(r.k));
    }
    rej_axis.hi = std::max(rej_axis.hi, total);
    iters.push_back(std::move(xs));
    cumulative.push_back(std::move(ys));
  }
  if (loss_axis.hi <= 0.0) loss_axis.hi = 1.0;
  if (rej_axis.hi <= 0.0) rej_axis.hi = 1.0;
  if (iter_axis.hi <= 0.0) iter_axis.hi = 1.0;
  if (epoch_axis.hi <= epoch_axis.lo) epoch_axis.hi = epoch_axis.lo + 1.0;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  frame(out, kLeftPanelX, "Loss (solid) and validation accuracy (dashed)", epoch_axis,
        loss_axis, "epoch", "loss");
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    out << "<text x=\"" << kLeftPanelX + kPanelWidth + 6 << "\" y=\""
        << acc_axis.map(v, kTop + kPanelHeight, kTop) + 3 << "\" font-size=\"10\">" << num(v)
        << "</text>\n";
  }
  frame(out, kRightPanelX, "Cumulative rejected steps", iter_axis, rej_axis, "iteration (batch)",
        "rejections");

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    const std::string& label = series[i].label;
    curve(out, "loss", label, color, false, epochs[i].epochs, epochs[i].mean_loss, epoch_axis,
          loss_axis, kLeftPanelX);
    curve(out, "accuracy", label, color, true, epochs[i].epochs, epochs[i].last_acc, epoch_axis,
          acc_axis, kLeftPanelX);
    curve(out, "rejections", label, color, false, iters[i], cumulative[i], iter_axis, rej_axis,
          kRightPanelX);
  }

  out << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + kPanelHeight + 52;
    const double x = 70 + 150.0 * static_cast<double>(i);
    out << "<g class=\"legend-entry\"><line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 24
        << "\" y2=\"" << y << "\" stroke=\"" << kPalette[i % kPalette.size()]
        << "\" stroke-width=\"3\"/><text x=\"" << x + 30 << "\" y=\"" << y + 4
        << "\" font-size=\"12\">" << escape(series[i].label) << "</text></g>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

void write_plot_svg(std::span<const MethodSeries> series, const std::filesystem::path& path) {
  const std::string svg = render_plot_svg(series);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("plot: cannot write " + path.string());
  out << svg;
  if (!out.flush()) throw std::runtime_error("plot: write failed for " + path.string());
}

}  // namespace napts
