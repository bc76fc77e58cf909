// Copyright 2026 The Crossguard Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CROSSGUARD__REPORT_HPP_
#define CROSSGUARD__REPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/detection.hpp"
#include "crossguard/layout.hpp"
#include "crossguard/predictions.hpp"
#include "crossguard/trace.hpp"

namespace crossguard
{

/// The metrics bundle plus the optional live objects only the alarm
/// snapshot needs. Figures whose inputs are absent are skipped with a
/// notice instead of failing the rest.
struct ReportInputs
{
  nlohmann::json metrics;
  const Trace * eval_trace = nullptr;
  const IntersectionLayout * layout = nullptr;
  const PredictionSet * preds = nullptr;
  const DetectionLog * alarms = nullptr;
};

struct ReportOutput
{
  std::vector<std::string> written;
  std::vector<std::string> notices;
};

namespace detail
{

/// Shortest decimal form that parses back to exactly the same double, so
/// every CSV number equals its metrics-bundle counterpart.
inline std::string g17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fixed2(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char * palette(std::size_t i)
{
  static const char * colors[] = {"#1f6feb", "#d1242f", "#2da44e", "#9a6700"};
  return colors[i % 4];
}

/// Minimal line-chart canvas: data-space rectangle mapped onto a fixed
/// pixel frame with margins, y growing upward.
class Chart
{
public:
  Chart(double xmin, double xmax, double ymin, double ymax)
  : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax)
  {
    if (xmax_ <= xmin_) xmax_ = xmin_ + 1.0;
    if (ymax_ <= ymin_) ymax_ = ymin_ + 1.0;
  }

  double px(double x) const
  {
    return margin_ + (x - xmin_) / (xmax_ - xmin_) * (width_ - 2.0 * margin_);
  }

  double py(double y) const
  {
    return height_ - margin_ - (y - ymin_) / (ymax_ - ymin_) * (height_ - 2.0 * margin_);
  }

  void polyline(const std::vector<std::pair<double, double>> & pts, const std::string & color)
  {
    if (pts.empty()) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto & [x, y] : pts) body_ << fixed2(px(x)) << "," << fixed2(py(y)) << " ";
    body_ << "\"/>\n";
  }

  void bar(double x0, double x1, double y, const std::string & color)
  {
    body_ << "<rect x=\"" << fixed2(px(x0)) << "\" y=\"" << fixed2(py(y)) << "\" width=\""
          << fixed2(px(x1) - px(x0)) << "\" height=\"" << fixed2(py(ymin_) - py(y))
          << "\" fill=\"" << color << "\"/>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>> & entries)
  {
    double y = margin_ + 6.0;
    for (const auto & [label, color] : entries) {
      body_ << "<rect x=\"" << fixed2(width_ - margin_ - 150.0) << "\" y=\"" << fixed2(y)
            << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
      body_ << "<text x=\"" << fixed2(width_ - margin_ - 132.0) << "\" y=\"" << fixed2(y + 10.0)
            << "\" font-size=\"12\">" << label << "</text>\n";
      y += 18.0;
    }
  }

  void tick_label(double x, double y, const std::string & text, const char * anchor)
  {
    body_ << "<text x=\"" << fixed2(px(x)) << "\" y=\"" << fixed2(py(y) + 14.0)
          << "\" font-size=\"11\" text-anchor=\"" << anchor << "\">" << text << "</text>\n";
  }

  std::string finish(
    const std::string & title, const std::string & xlabel, const std::string & ylabel,
    const std::string & config_hash) const
  {
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    svg << "<!-- config_hash " << config_hash << " -->\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fixed2(width_ / 2.0)
        << "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" << title << "</text>\n";
    // Axes with five labeled ticks each.
    svg << "<line x1=\"" << fixed2(margin_) << "\" y1=\"" << fixed2(height_ - margin_)
        << "\" x2=\"" << fixed2(width_ - margin_) << "\" y2=\"" << fixed2(height_ - margin_)
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fixed2(margin_) << "\" y1=\"" << fixed2(height_ - margin_)
        << "\" x2=\"" << fixed2(margin_) << "\" y2=\"" << fixed2(margin_)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = xmin_ + (xmax_ - xmin_) * i / 4.0;
      const double fy = ymin_ + (ymax_ - ymin_) * i / 4.0;
      char lab[32];
      std::snprintf(lab, sizeof lab, "%.3g", fx);
      svg << "<text x=\"" << fixed2(px(fx)) << "\" y=\"" << fixed2(height_ - margin_ + 16.0)
          << "\" font-size=\"11\" text-anchor=\"middle\">" << lab << "</text>\n";
      std::snprintf(lab, sizeof lab, "%.3g", fy);
      svg << "<text x=\"" << fixed2(margin_ - 6.0) << "\" y=\"" << fixed2(py(fy) + 4.0)
          << "\" font-size=\"11\" text-anchor=\"end\">" << lab << "</text>\n";
    }
    svg << "<text x=\"" << fixed2(width_ / 2.0) << "\" y=\"" << fixed2(height_ - 8.0)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    svg << "<text x=\"14\" y=\"" << fixed2(height_ / 2.0)
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << fixed2(height_ / 2.0) << ")\">" << ylabel << "</text>\n";
    svg << body_.str();
    svg << "</svg>\n";
    return svg.str();
  }

private:
  double xmin_, xmax_, ymin_, ymax_;
  double width_ = 640.0;
  double height_ = 420.0;
  double margin_ = 56.0;
  std::ostringstream body_;
};

inline void write_text_file(const std::filesystem::path & path, const std::string & content)
{
  std::ofstream os(path, std::ios::binary);
  if (!os.good()) throw ConfigError("cannot write " + path.string());
  os << content;
}

}  // namespace detail

/// Renders every figure the metrics bundle supports into `dir`, one SVG per
/// chart next to a CSV holding the exact plotted numbers. Figures whose
/// inputs are missing are listed in notices.txt and skipped.
inline ReportOutput render_reports(
  const ReportInputs & in, const std::filesystem::path & dir)
{
  namespace fs = std::filesystem;
  if (in.metrics.empty()) {
    throw ConfigError("reporting needs a non-empty metrics bundle");
  }
  fs::create_directories(dir);
  ReportOutput out;
  const nlohmann::json & m = in.metrics;
  const std::string hash = m.contains("config_hash")
    ? std::to_string(m.at("config_hash").get<std::uint64_t>())
    : "unknown";

  const auto emit = [&](const std::string & name, const std::string & content) {
    detail::write_text_file(dir / name, content);
    out.written.push_back(name);
  };
  const auto note = [&](const std::string & text) { out.notices.push_back(text); };

  // Trajectory error deciles: one CDF point per decile, model vs filter.
  if (m.contains("trajectory")) {
    const nlohmann::json & traj = m.at("trajectory");
    std::ostringstream csv;
    csv << "# config_hash " << hash << "\n";
    csv << "method,segment,second,decile,error_m\n";
    for (const char * method : {"model", "kalman"}) {
      for (const char * seg : {"all", "turning", "non_turning"}) {
        const nlohmann::json & deciles = traj.at(method).at(seg).at("deciles");
        for (std::size_t sec = 0; sec < deciles.size(); ++sec) {
          for (std::size_t d = 0; d < deciles.at(sec).size(); ++d) {
            csv << method << "," << seg << "," << (sec + 1) << "," << 10 * (d + 1) << ","
                << detail::g17(deciles.at(sec).at(d).get<double>()) << "\n";
          }
        }
      }
    }
    emit("error_cdf.csv", csv.str());

    const int horizon_s = traj.at("model").at("horizon_seconds").get<int>();
    const auto curve = [&](const char * method) {
      std::vector<std::pair<double, double>> pts;
      const auto & dec = traj.at(method).at("all").at("deciles");
      if (!dec.empty()) {
        const auto & last = dec.at(dec.size() - 1);
        for (std::size_t d = 0; d < last.size(); ++d) {
          pts.emplace_back(last.at(d).get<double>(), 0.1 * (d + 1));
        }
      }
      return pts;
    };
    const auto model_pts = curve("model");
    const auto kf_pts = curve("kalman");
    double max_err = 0.1;
    for (const auto & [x, y] : model_pts) max_err = std::max(max_err, x);
    for (const auto & [x, y] : kf_pts) max_err = std::max(max_err, x);
    detail::Chart chart(0.0, max_err, 0.0, 1.0);
    chart.polyline(model_pts, detail::palette(0));
    chart.polyline(kf_pts, detail::palette(1));
    chart.legend({{"sequence model", detail::palette(0)}, {"kalman filter", detail::palette(1)}});
    emit(
      "error_cdf.svg",
      chart.finish(
        "Displacement error CDF at t+" + std::to_string(horizon_s) + " s", "error (m)",
        "cumulative fraction", hash));
  } else {
    note("error figures skipped: metrics bundle has no trajectory section");
  }

  // Reaction-time CDFs and false-positive distance buckets per detector.
  if (m.contains("detection")) {
    const nlohmann::json & det = m.at("detection");
    std::ostringstream csv;
    csv << "# config_hash " << hash << "\n";
    csv << "method,reaction_s,cum_fraction\n";
    std::vector<std::pair<std::string, std::string>> legend;
    std::size_t color = 0;
    double max_t = 0.0;
    std::vector<std::pair<std::string, std::vector<double>>> curves;
    for (auto it = det.begin(); it != det.end(); ++it) {
      auto times = it.value().at("reaction_times_s").get<std::vector<double>>();
      std::sort(times.begin(), times.end());
      if (!times.empty()) max_t = std::max(max_t, times.back());
      curves.emplace_back(it.key(), std::move(times));
    }
    detail::Chart cdf(0.0, std::max(max_t, 0.5), 0.0, 1.0);
    for (const auto & [method, times] : curves) {
      std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double frac = static_cast<double>(i + 1) / static_cast<double>(times.size());
        pts.emplace_back(times[i], static_cast<double>(i) / times.size());
        pts.emplace_back(times[i], frac);
        csv << method << "," << detail::g17(times[i]) << "," << detail::g17(frac) << "\n";
      }
      if (!times.empty()) pts.emplace_back(std::max(max_t, 0.5), 1.0);
      cdf.polyline(pts, detail::palette(color));
      legend.emplace_back(method, detail::palette(color));
      ++color;
    }
    cdf.legend(legend);
    emit("reaction_cdf.csv", csv.str());
    emit(
      "reaction_cdf.svg",
      cdf.finish(
        "Available reaction time CDF", "reaction time before impact (s)",
        "cumulative fraction", hash));

    std::ostringstream fp;
    fp << "# config_hash " << hash << "\n";
    fp << "method,body_distance_bucket,false_positive_episodes\n";
    static const char * buckets[4] = {"0-5", "5-10", "10-15", "15+"};
    for (auto it = det.begin(); it != det.end(); ++it) {
      const auto counts = it.value().at("fp_body_buckets").get<std::vector<int>>();
      for (std::size_t b = 0; b < counts.size() && b < 4; ++b) {
        fp << it.key() << "," << buckets[b] << "," << counts[b] << "\n";
      }
    }
    emit("fp_distance.csv", fp.str());
  } else {
    note("reaction figures skipped: metrics bundle has no detection section");
  }

  // Feature importance bars, one per per-step feature kind.
  if (m.contains("forest") && m.at("forest").contains("importance_by_kind")) {
    const nlohmann::json & imp = m.at("forest").at("importance_by_kind");
    std::ostringstream csv;
    csv << "# config_hash " << hash << "\n";
    csv << "feature,importance\n";
    double top = 0.0;
    std::vector<std::pair<std::string, double>> bars;
    for (const auto & [key, value] : imp.items()) {
      bars.emplace_back(key, value.get<double>());
      top = std::max(top, value.get<double>());
      csv << key << "," << detail::g17(value.get<double>()) << "\n";
    }
    emit("importance.csv", csv.str());

    detail::Chart chart(0.0, static_cast<double>(bars.size()), 0.0, std::max(top, 1e-12));
    for (std::size_t i = 0; i < bars.size(); ++i) {
      chart.bar(i + 0.15, i + 0.85, bars[i].second, detail::palette(0));
      chart.tick_label(i + 0.5, 0.0, std::to_string(i), "middle");
    }
    emit(
      "importance.svg",
      chart.finish("Gini importance by feature kind", "feature kind index", "importance", hash));
  } else {
    note("importance figure skipped: metrics bundle has no forest section");
  }

  // Avoidance outcome per deceleration and driver cell.
  if (m.contains("avoidance")) {
    const nlohmann::json & cells = m.at("avoidance").at("cells");
    std::ostringstream csv;
    csv << "# config_hash " << hash << "\n";
    csv << "decel_mps2,driver,episodes,avoided_fraction,"
           "mean_impact_speed_no_action_mps,mean_impact_speed_with_action_mps,"
           "mean_impact_speed_reduction\n";
    detail::Chart chart(0.0, std::max<double>(cells.size(), 1), 0.0, 1.0);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const nlohmann::json & c = cells.at(i);
      csv << detail::g17(c.at("decel_mps2").get<double>()) << ","
          << c.at("driver").get<std::string>() << "," << c.at("episodes").get<int>() << ","
          << detail::g17(c.at("avoided_fraction").get<double>()) << ","
          << detail::g17(c.at("mean_impact_speed_no_action_mps").get<double>()) << ","
          << detail::g17(c.at("mean_impact_speed_with_action_mps").get<double>()) << ","
          << detail::g17(c.at("mean_impact_speed_reduction").get<double>()) << "\n";
      chart.bar(i + 0.15, i + 0.85, c.at("avoided_fraction").get<double>(), detail::palette(i));
      chart.tick_label(
        i + 0.5, 0.0,
        detail::fixed2(c.at("decel_mps2").get<double>()) + " " +
          c.at("driver").get<std::string>(),
        "middle");
    }
    emit("avoidance.csv", csv.str());
    emit(
      "avoidance.svg",
      chart.finish("Avoided collisions per braking cell", "cell", "avoided fraction", hash));
  } else {
    note("avoidance figures skipped: metrics bundle has no avoidance section");
  }

  // Alarm snapshot: both vehicles around the first fired alarm, the
  // predicted path, and one interval ellipse per horizon step.
  if (
    in.eval_trace != nullptr && in.layout != nullptr && in.preds != nullptr &&
    in.alarms != nullptr)
  {
    const DetectionRecord * alarm = nullptr;
    for (const DetectionRecord & r : in.alarms->records) {
      if (r.fired) {
        alarm = &r;
        break;
      }
    }
    const VehiclePrediction * pa =
      alarm != nullptr ? in.preds->find(alarm->a, alarm->tick) : nullptr;
    const VehiclePrediction * pb =
      alarm != nullptr ? in.preds->find(alarm->b, alarm->tick) : nullptr;
    if (alarm == nullptr) {
      note("alarm snapshot skipped: the detection log contains no fired alarm");
    } else if (pa == nullptr || pb == nullptr) {
      note("alarm snapshot skipped: no prediction cached at the alarm tick");
    } else {
      // Bounds cover both bodies and both interval fans, with padding.
      double xmin = 1e18, xmax = -1e18, ymin = 1e18, ymax = -1e18;
      const auto grow = [&](double x, double y) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      };
      for (const VehiclePrediction * vp : {pa, pb}) {
        for (int j = 0; j < vp->point.rows(); ++j) {
          grow(vp->lower(j, 1), vp->lower(j, 0));
          grow(vp->upper(j, 1), vp->upper(j, 0));
        }
      }
      for (VehicleId id : {alarm->a, alarm->b}) {
        const VehicleState * s = in.eval_trace->find(alarm->tick, id);
        if (s != nullptr) grow(s->position.x(), s->position.y());
      }
      const double pad = 12.0;
      xmin -= pad;
      xmax += pad;
      ymin -= pad;
      ymax += pad;
      const double span_x = xmax - xmin;
      const double span_y = ymax - ymin;
      const double scale = 560.0 / std::max(span_x, span_y);
      const double w = span_x * scale;
      const double h = span_y * scale;
      const auto X = [&](double lon) { return (lon - xmin) * scale; };
      const auto Y = [&](double lat) { return (ymax - lat) * scale; };

      std::ostringstream svg;
      svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fixed2(w)
          << "\" height=\"" << detail::fixed2(h + 30.0) << "\" viewBox=\"0 0 "
          << detail::fixed2(w) << " " << detail::fixed2(h + 30.0) << "\">\n";
      svg << "<!-- config_hash " << hash << " -->\n";
      svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
      svg << "<text x=\"8\" y=\"" << detail::fixed2(h + 20.0) << "\" font-size=\"13\">alarm at t="
          << detail::g17(alarm->tick * in.alarms->tick_s) << " s, pair " << alarm->a << "-"
          << alarm->b << "</text>\n";

      // Roadway strips, one per arm.
      const double road_w = in.layout->lanes_per_approach * in.layout->lane_width;
      for (int arm = 0; arm < in.layout->arm_count; ++arm) {
        const Vec2 u = in.layout->outward(arm);
        const Vec2 p{-u.y(), u.x()};
        const double far = in.layout->arm_length + in.layout->box_half();
        const Vec2 c0 = p * road_w;
        const Vec2 c1 = u * far + p * road_w;
        const Vec2 c2 = u * far - p * road_w;
        const Vec2 c3 = -(p * road_w);
        svg << "<polygon fill=\"#e8e8e8\" points=\"";
        for (const Vec2 & c : {c0, c1, c2, c3}) {
          svg << detail::fixed2(X(c.x())) << "," << detail::fixed2(Y(c.y())) << " ";
        }
        svg << "\"/>\n";
      }

      // Every vehicle present at the alarm tick, the alarm pair in color.
      for (const VehicleState & s : in.eval_trace->ticks[static_cast<std::size_t>(alarm->tick)]) {
        const Obb box = Obb::vehicle_body(s.position, s.heading_deg, s.length, s.width);
        const bool hot = s.vehicle_id == alarm->a || s.vehicle_id == alarm->b;
        svg << "<polygon fill=\"" << (hot ? "#d1242f" : "#8c959f") << "\" points=\"";
        for (const Vec2 & c : box.corners()) {
          svg << detail::fixed2(X(c.x())) << "," << detail::fixed2(Y(c.y())) << " ";
        }
        svg << "\"/>\n";
      }

      // Predicted centers and the interval ellipse fan for both vehicles.
      std::size_t color = 0;
      for (const VehiclePrediction * vp : {pa, pb}) {
        std::ostringstream path;
        for (int j = 0; j < vp->point.rows(); ++j) {
          path << detail::fixed2(X(vp->point(j, 1))) << "," << detail::fixed2(Y(vp->point(j, 0)))
               << " ";
          const double rx = 0.5 * (vp->upper(j, 1) - vp->lower(j, 1));
          const double ry = 0.5 * (vp->upper(j, 0) - vp->lower(j, 0));
          const double cx = 0.5 * (vp->upper(j, 1) + vp->lower(j, 1));
          const double cy = 0.5 * (vp->upper(j, 0) + vp->lower(j, 0));
          svg << "<ellipse cx=\"" << detail::fixed2(X(cx)) << "\" cy=\"" << detail::fixed2(Y(cy))
              << "\" rx=\"" << detail::fixed2(std::max(rx * scale, 1.0)) << "\" ry=\""
              << detail::fixed2(std::max(ry * scale, 1.0)) << "\" fill=\""
              << detail::palette(color) << "\" fill-opacity=\"0.10\" stroke=\""
              << detail::palette(color) << "\" stroke-opacity=\"0.5\"/>\n";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << detail::palette(color)
            << "\" stroke-width=\"1.5\" points=\"" << path.str() << "\"/>\n";
        ++color;
      }
      svg << "</svg>\n";
      emit("alarm_snapshot.svg", svg.str());
    }
  } else {
    note("alarm snapshot skipped: needs the evaluation trace, layout, predictions, and alarms");
  }

  std::ostringstream notices;
  for (const std::string & n : out.notices) notices << n << "\n";
  detail::write_text_file(dir / "notices.txt", notices.str());
  out.written.push_back("notices.txt");
  return out;
}

}  // namespace crossguard

#endif  // CROSSGUARD__REPORT_HPP_
