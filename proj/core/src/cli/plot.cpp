#include "arena/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "arena/common/error.hpp"
#include "arena/common/format.hpp"

namespace arena::cli {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v) >= 1e4) std::snprintf(buf, sizeof(buf), "%.3g", v);
  else std::snprintf(buf, sizeof(buf), "%g", std::round(v * 1000.0) / 1000.0);
  return buf;
}

std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string render_svg(const Figure& f) {
  double x_lo = f.x_lo, x_hi = f.x_hi, y_lo = f.y_lo, y_hi = f.y_hi;
  if (!(x_lo < x_hi) || !(y_lo < y_hi)) {
    x_lo = y_lo = INFINITY;
    x_hi = y_hi = -INFINITY;
    for (const auto& s : f.series) {
      for (double v : s.x) x_lo = std::min(x_lo, v), x_hi = std::max(x_hi, v);
      for (double v : s.y) y_lo = std::min(y_lo, v), y_hi = std::max(y_hi, v);
    }
    if (!std::isfinite(x_lo)) x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    if (x_lo == x_hi) x_lo -= 0.5, x_hi += 0.5;
    if (y_lo == y_hi) y_lo -= 0.5, y_hi += 0.5;
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }

  const double left = 70, top = 40, pw = f.square ? 480 : 640, ph = f.square ? 480 : 360;
  const double width = left + pw + 170, height = top + ph + 60;
  if (f.square) {
    const double span = std::max(x_hi - x_lo, y_hi - y_lo);
    const double cx = 0.5 * (x_lo + x_hi), cy = 0.5 * (y_lo + y_hi);
    x_lo = cx - span / 2, x_hi = cx + span / 2, y_lo = cy - span / 2, y_hi = cy + span / 2;
  }
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(f.title)
    << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(x_lo, x_hi)) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << num(top + ph + 5) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << tick_label(t)
      << "</text>\n";
  }
  for (double t : ticks(y_lo, y_hi)) {
    o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(py(t)) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << tick_label(t)
      << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 15) << "\" text-anchor=\"middle\">"
    << escape(f.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(f.y_label) << "</text>\n";

  for (std::size_t i = 0; i < f.series.size(); ++i) {
    const auto& s = f.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (s.points) {
      for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
        o << "<rect x=\"" << num(px(s.x[k]) - 4) << "\" y=\"" << num(py(s.y[k]) - 4)
          << "\" width=\"8\" height=\"8\" fill=\"" << color << "\"/>\n";
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
        o << (k ? " " : "") << num(px(s.x[k])) << ',' << num(py(s.y[k]));
      o << "\"/>\n";
    }
    const double ly = top + 14 + 18 * static_cast<double>(i);
    o << "<rect x=\"" << num(left + pw + 12) << "\" y=\"" << num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/><text x=\"" << num(left + pw + 28) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, const Figure& figure) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << render_svg(figure);
  if (!out) throw Error("cannot write " + path.string());
}

Figure score_figure(const std::vector<orch::MetricsRow>& rows, std::size_t window) {
  std::map<std::string, std::vector<std::pair<double, double>>> by_policy;
  for (const auto& r : rows) {
    if (r.kind == "episode" && r.episode_return)
      by_policy[r.policy].emplace_back(static_cast<double>(r.env_steps), *r.episode_return);
  }
  Figure f;
  f.title = "Episode score";
  f.x_label = "environment steps (per environment)";
  f.y_label = "score";
  for (auto& [policy, pts] : by_policy) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Series s;
    s.label = policy;
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sum += pts[i].second;
      if (i >= window) sum -= pts[i - window].second;
      s.x.push_back(pts[i].first);
      s.y.push_back(sum / static_cast<double>(std::min(i + 1, window)));
    }
    f.series.push_back(std::move(s));
  }
  return f;
}

Figure trace_figure(const std::filesystem::path& trace, const std::filesystem::path& targets, int episode) {
  Figure f;
  f.title = "Episode " + std::to_string(episode) + " trajectories";
  f.x_label = "x";
  f.y_label = "y";
  f.square = true;
  f.x_lo = f.y_lo = -1.0;
  f.x_hi = f.y_hi = 1.0;

  std::map<int, Series> agents;
  std::ifstream in(trace);
  if (!in) throw Error("cannot read " + trace.string());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c = split(line);
    if (c.size() < 6 || std::stoi(c[0]) != episode || c[3].empty()) continue;
    auto& s = agents[std::stoi(c[2])];
    double x = 0.0, y = 0.0;
    if (!parse_double(c[3], x) || !parse_double(c[4], y)) throw Error(trace.string() + ": malformed row");
    s.x.push_back(x);
    s.y.push_back(y);
  }
  for (auto& [id, s] : agents) {
    s.label = "agent " + std::to_string(id);
    f.series.push_back(std::move(s));
  }
  if (!targets.empty() && std::filesystem::exists(targets)) {
    Series t;
    t.label = "targets";
    t.points = true;
    std::ifstream tin(targets);
    std::getline(tin, line);
    while (std::getline(tin, line)) {
      const auto c = split(line);
      if (c.size() < 4 || std::stoi(c[0]) != episode) continue;
      double x = 0.0, y = 0.0;
      if (!parse_double(c[2], x) || !parse_double(c[3], y)) throw Error(targets.string() + ": malformed row");
      t.x.push_back(x);
      t.y.push_back(y);
    }
    f.series.push_back(std::move(t));
  }
  return f;
}

Figure lineage_figure(const std::vector<schemes::LineageEntry>& lineage) {
  Figure f;
  f.title = "Population scores per generation";
  f.x_label = "generation";
  f.y_label = "selection score";
  Series winners{"selected", {}, {}, false};
  Series others{"not selected", {}, {}, true};
  for (const auto& e : lineage) {
    Series& s = e.selected ? winners : others;
    s.x.push_back(e.generation);
    s.y.push_back(e.score);
  }
  f.series.push_back(std::move(winners));
  f.series.push_back(std::move(others));
  return f;
}

}  // namespace arena::cli
