#include "blindid/plots.hpp"

#include "blindid/dataset_io.hpp"
#include "blindid/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace blindid::plots {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

std::string render_line_chart(const std::vector<Series>& series, const ChartSpec& spec) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ShapeError("series '" + s.label + "': x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  y_lo = std::min(y_lo, 0.0);
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;

  const double left = 70, right = 150, top = 40, bottom = 55;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    os << "<line x1=\"" << px(xv) << "\" y1=\"" << top + ph << "\" x2=\"" << px(xv) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << tick_label(xv)
       << "</text>\n";
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << left << "\" y2=\"" << py(yv)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << tick_label(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 12 << "\" text-anchor=\"middle\">"
     << escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(spec.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::ostringstream pts;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
      pts << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
      os << "<circle cx=\"" << px(series[s].x[i]) << "\" cy=\"" << py(series[s].y[i]) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << escape(series[s].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> write_sweep_plots(const std::filesystem::path& dir,
                                                     const std::vector<SweepCell>& cells) {
  std::set<Index> qs;
  std::set<double> noises;
  for (const auto& c : cells) {
    qs.insert(c.q);
    noises.insert(c.alpha_w);
  }
  auto value_at = [&](Index q, double w, const std::function<double(const MetricsSummary&)>& get) {
    for (const auto& c : cells)
      if (c.q == q && c.alpha_w == w && c.summary) return get(*c.summary);
    return std::numeric_limits<double>::quiet_NaN();
  };
  const std::vector<std::pair<std::string, std::function<double(const MetricsSummary&)>>> metrics = {
      {"mape_card", [](const MetricsSummary& s) { return s.mape_card; }},
      {"armse_nz", [](const MetricsSummary& s) { return s.armse_nz; }},
      {"armse_a", [](const MetricsSummary& s) { return s.armse_a; }},
  };

  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::vector<Series>& series, const ChartSpec& spec) {
    const auto file = dir / name;
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << render_line_chart(series, spec);
    written.push_back(file);
  };

  for (const auto& [metric, get] : metrics) {
    if (qs.size() > 1) {
      std::vector<Series> series;
      for (double w : noises) {
        Series s{"alpha_w=" + io::format_double(w), {}, {}};
        for (Index q : qs) {
          s.x.push_back(static_cast<double>(q));
          s.y.push_back(value_at(q, w, get));
        }
        series.push_back(std::move(s));
      }
      emit(metric + "_vs_q.svg", series, {metric + " vs experiments", "q", metric});
    }
    if (noises.size() > 1) {
      std::vector<Series> series;
      for (Index q : qs) {
        Series s{"q=" + std::to_string(q), {}, {}};
        for (double w : noises) {
          s.x.push_back(w);
          s.y.push_back(value_at(q, w, get));
        }
        series.push_back(std::move(s));
      }
      emit(metric + "_vs_noise.svg", series, {metric + " vs noise level", "alpha_w", metric});
    }
  }
  return written;
}

}  // namespace blindid::plots
