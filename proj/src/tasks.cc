#include "sqled/tasks.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sqled/error.h"

namespace sqled {

namespace {

const Label& label_of(const BeamRecord& beam, const Prediction& p) {
  if (!p.label) throw MissingLabels(beam.question_id);
  return *p.label;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

BeamRecord rerank_all(const BeamRecord& beam, const std::vector<double>& scores) {
  if (scores.size() != beam.predictions.size()) {
    throw ArityMismatch(beam.predictions.size(), scores.size());
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  BeamRecord out = beam;
  out.predictions.clear();
  for (std::size_t i : order) out.predictions.push_back(beam.predictions[i]);
  return out;
}

BeamRecord ed_then_rerank(const BeamRecord& beam, const std::vector<double>& scores,
                          double threshold) {
  if (scores.size() != beam.predictions.size()) {
    throw ArityMismatch(beam.predictions.size(), scores.size());
  }
  if (scores.empty() || scores.front() >= threshold) return beam;
  return rerank_all(beam, scores);
}

double top1_accuracy(const std::vector<BeamRecord>& beams) {
  if (beams.empty()) throw EmptyInput("no beams");
  std::size_t hits = 0;
  for (const auto& b : beams) {
    if (b.predictions.empty()) throw EmptyBeam();
    hits += label_of(b, b.predictions.front()).correct() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(beams.size());
}

double beam_hit_rate(const std::vector<BeamRecord>& beams) {
  if (beams.empty()) throw EmptyInput("no beams");
  std::size_t hits = 0;
  for (const auto& b : beams) {
    bool any = false;
    for (const auto& p : b.predictions) any = label_of(b, p).correct() || any;
    hits += any ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(beams.size());
}

Curve answer_curve(const std::vector<ScoredExample>& top1, const std::string& method) {
  if (top1.empty()) throw EmptyInput("no questions");
  std::vector<ScoredExample> sorted = top1;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredExample& a, const ScoredExample& b) { return a.score > b.score; });
  Curve c{method, {}};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    correct += sorted[i].label == 1 ? 1 : 0;
    // Emit once per threshold, after the last example sharing its score.
    if (i + 1 == sorted.size() || sorted[i + 1].score != sorted[i].score) {
      c.points.emplace_back(static_cast<int>(i + 1),
                            static_cast<double>(correct) / static_cast<double>(i + 1));
    }
  }
  return c;
}

int questions_at_precision(const Curve& curve, double target) {
  int best = 0;
  for (const auto& [x, y] : curve.points) {
    if (y >= target) best = std::max(best, x);
  }
  return best;
}

Curve interaction_curve(const std::vector<ScoredExample>& top1, const std::string& method) {
  if (top1.empty()) throw EmptyInput("no questions");
  std::vector<ScoredExample> sorted = top1;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredExample& a, const ScoredExample& b) { return a.score < b.score; });
  const std::size_t n = sorted.size();
  std::size_t correct = 0;
  for (const auto& e : sorted) correct += e.label == 1 ? 1 : 0;
  Curve c{method, {}};
  c.points.emplace_back(0, static_cast<double>(correct) / static_cast<double>(n));
  for (std::size_t b = 1; b <= n; ++b) {
    if (sorted[b - 1].label != 1) ++correct;
    c.points.emplace_back(static_cast<int>(b), static_cast<double>(correct) / static_cast<double>(n));
  }
  return c;
}

int interactions_for_accuracy(const Curve& curve, double target) {
  for (const auto& [x, y] : curve.points) {
    if (y >= target) return x;
  }
  return -1;
}

void write_curves_csv(std::ostream& out, const std::vector<Curve>& curves) {
  out << "method,x,y\n";
  for (const auto& c : curves) {
    for (const auto& [x, y] : c.points) out << c.method << "," << x << "," << fmt(y) << "\n";
  }
}

std::string render_svg(const std::vector<Curve>& curves, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  const double w = 640, h = 420, left = 70, right = 150, top = 40, bottom = 50;
  double x_max = 1, y_min = 1, y_max = 0;
  for (const auto& c : curves) {
    for (const auto& [x, y] : c.points) {
      x_max = std::max(x_max, static_cast<double>(x));
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (y_max <= y_min) {
    y_min -= 0.05;
    y_max += 0.05;
  }
  auto px = [&](double x) { return left + (w - left - right) * x / x_max; };
  auto py = [&](double y) { return h - bottom - (h - top - bottom) * (y - y_min) / (y_max - y_min); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
    << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\""
    << h - bottom << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_max * i / 4, yv = y_min + (y_max - y_min) * i / 4;
    s << "<text x=\"" << px(xv) << "\" y=\"" << h - bottom + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(static_cast<int>(xv + 0.5)) << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  s << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 10
    << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  s << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
    << "transform=\"rotate(-90 16 " << (top + h - bottom) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* color = colors[k % 6];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : curves[k].points) s << px(x) << "," << py(y) << " ";
    s << "\"/>\n";
    s << "<text x=\"" << w - right + 10 << "\" y=\"" << top + 16 * (k + 1) << "\" fill=\"" << color
      << "\" font-size=\"12\">" << curves[k].method << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace sqled
