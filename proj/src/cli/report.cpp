#include "survfuse/cli/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "survfuse/csv.hpp"
#include "survfuse/error.hpp"

namespace survfuse::cli {

using nlohmann::json;

namespace {

json interval_json(const Interval& ci) { return json::array({ci.lo, ci.hi}); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json test_json(const std::optional<TestResult>& t) {
  if (!t) return nullptr;
  return {{"statistic", t->statistic}, {"p_value", t->p_value}, {"method", t->method}};
}

json split_evals_json(const std::vector<SplitEval>& evals) {
  json out = json::array();
  for (const auto& e : evals) {
    json models = json::array();
    for (const auto& m : e.models) {
      models.push_back({{"model", to_string(m.model)}, {"c_index", m.c_index}, {"ci", interval_json(m.ci)}});
    }
    out.push_back({{"split", e.split}, {"n", e.n}, {"n_events", e.n_events}, {"models", models}});
  }
  return out;
}

json km_curve_json(const KmCurve& c) {
  json points = json::array();
  for (const auto& p : c.points) points.push_back({p.time, p.survival, p.at_risk, p.events});
  return {{"label", c.group_label}, {"points", points}};
}

KmCurve km_curve_from_json(const json& j) {
  KmCurve c;
  c.group_label = j.at("label").get<std::string>();
  for (const auto& p : j.at("points")) {
    c.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<std::size_t>(), p[3].get<std::size_t>()});
  }
  return c;
}

json rv_json(const RvSection& s) {
  const RvFactorReport& r = s.report;
  json signals = json::array();
  for (ErrorKind k : r.signals) signals.push_back(std::string(to_string(k)));
  json patients = json::array();
  for (const auto& p : s.patients) {
    patients.push_back({{"id", p.id},
                        {"linear_predictor", p.linear_predictor},
                        {"probability", p.probability},
                        {"rv_dysfunction", p.rv_dysfunction},
                        {"death", p.death},
                        {"high_risk", p.high_risk}});
  }
  return {{"split", s.split},
          {"cut_value", s.cut_value},
          {"n_rv", r.n_rv},
          {"rv_high", r.rv_high},
          {"rv_high_pct", optional_json(r.rv_high_pct)},
          {"rv_high_pct_text", r.rv_high_pct ? json(format_percent(*r.rv_high_pct)) : json(nullptr)},
          {"n_deaths", r.n_deaths},
          {"deaths_high", r.deaths_high},
          {"mortality_classification_accuracy", optional_json(r.mortality_classification_accuracy)},
          {"mortality_classification_accuracy_text",
           r.mortality_classification_accuracy ? json(format_percent(*r.mortality_classification_accuracy))
                                               : json(nullptr)},
          {"signals", signals},
          {"patients", patients}};
}

std::string num(const json& v, int decimals = 3) {
  if (v.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v.get<double>());
  return buf;
}

}  // namespace

json report_to_json(const StudyReport& report) {
  json nri = json::array();
  for (const auto& s : report.nri) {
    json entries = json::array();
    for (const auto& e : s.entries) {
      const NriResult& r = e.result;
      entries.push_back({{"label", e.label},
                         {"old_model", to_string(e.old_model)},
                         {"new_model", to_string(e.new_model)},
                         {"nri", r.nri},
                         {"ci", interval_json(e.ci)},
                         {"event_up", r.event_up},
                         {"event_down", r.event_down},
                         {"nonevent_up", r.nonevent_up},
                         {"nonevent_down", r.nonevent_down},
                         {"n_events", r.n_events},
                         {"n_nonevents", r.n_nonevents},
                         {"threshold", r.threshold}});
    }
    nri.push_back({{"split", s.split}, {"entries", entries}});
  }

  json km = json::array();
  for (const auto& e : report.km) {
    km.push_back({{"model", to_string(e.model)},
                  {"split", e.split},
                  {"cut_value", e.cut_value},
                  {"high", km_curve_json(e.high)},
                  {"low", km_curve_json(e.low)},
                  {"logrank", test_json(e.logrank)}});
  }

  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    const PesiComparison& r = c.result;
    comparisons.push_back({{"split", c.split},
                           {"horizon", c.horizon},
                           {"model", to_string(c.model)},
                           {"model_c_index", r.model_c_index},
                           {"pesi_c_index", r.pesi_c_index},
                           {"mean_difference", r.mean_difference},
                           {"test", test_json(r.test)},
                           {"significant", r.test && r.test->p_value < 0.05},
                           {"no_difference", r.no_difference}});
  }

  return {{"overall", split_evals_json(report.overall)},
          {"short_term", split_evals_json(report.short_term)},
          {"nri", nri},
          {"km", km},
          {"rv_analysis", report.rv_analysis ? rv_json(*report.rv_analysis) : json(nullptr)},
          {"comparisons", comparisons},
          {"config_fingerprint", report.config_fingerprint}};
}

json feature_analysis_to_json(const FeatureAnalysis& fa) {
  json rows = json::array();
  for (std::size_t k = 0; k < fa.names.size(); ++k) {
    rows.push_back({{"variable", fa.names[k]},
                    {"importance", fa.importance[k]},
                    {"predictive_ability", optional_json(fa.predictive_ability[k])}});
  }
  return {{"model", "deep_clinical"}, {"variables", rows}};
}

KmEntry km_entry_from_json(const json& j) {
  KmEntry e;
  const auto model = parse_study_model(j.at("model").get<std::string>());
  if (!model) fail(ErrorKind::UnknownModelKind, "unknown KM model " + j.at("model").dump());
  e.model = *model;
  e.split = j.at("split").get<std::string>();
  e.cut_value = j.at("cut_value").get<double>();
  e.high = km_curve_from_json(j.at("high"));
  e.low = km_curve_from_json(j.at("low"));
  const json& lr = j.at("logrank");
  if (!lr.is_null()) {
    e.logrank = TestResult{lr.at("statistic").get<double>(), lr.at("p_value").get<double>(),
                           lr.at("method").get<std::string>()};
  }
  return e;
}

std::string render_km_csv(const KmEntry& entry) {
  std::string out = "group,time,survival,at_risk,events\n";
  for (const KmCurve* c : {&entry.high, &entry.low}) {
    for (const auto& p : c->points) {
      out += c->group_label + "," + csv::format_double(p.time) + "," + csv::format_double(p.survival) + "," +
             std::to_string(p.at_risk) + "," + std::to_string(p.events) + "\n";
    }
  }
  return out;
}

std::string render_km_svg(const KmEntry& entry) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kLeft = 60.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 50.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double t_max = 0.0;
  for (const KmCurve* c : {&entry.high, &entry.low}) {
    if (!c->points.empty()) t_max = std::max(t_max, c->points.back().time);
  }
  if (t_max <= 0.0) t_max = 1.0;
  auto x = [&](double t) { return kLeft + plot_w * t / t_max; };
  auto y = [&](double s) { return kTop + plot_h * (1.0 - s); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string title = "Kaplan-Meier: " + std::string(to_string(entry.model)) + " (" + entry.split + ")";
  if (entry.logrank) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), ", log-rank p = %.4g", entry.logrank->p_value);
    title += buf;
  }
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << y(0) << "\" x2=\"" << x(t_max) << "\" y2=\"" << y(0)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << y(0) << "\" x2=\"" << kLeft << "\" y2=\"" << y(1)
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double s = k / 4.0;
    const double t = t_max * k / 4.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(y(s) + 4) << "\" text-anchor=\"end\">" << fmt(s)
        << "</text>\n";
    svg << "<text x=\"" << fmt(x(t)) << "\" y=\"" << y(0) + 18 << "\" text-anchor=\"middle\">" << fmt(t)
        << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\">time (days)</text>\n";

  const std::pair<const KmCurve*, const char*> curves[] = {{&entry.high, "#c0392b"}, {&entry.low, "#2471a3"}};
  int row = 0;
  for (const auto& [c, color] : curves) {
    std::string d = "M " + fmt(x(0)) + " " + fmt(y(1));
    std::string data;
    for (const auto& p : c->points) {
      d += " H " + fmt(x(p.time)) + " V " + fmt(y(p.survival));
      if (!data.empty()) data += ';';
      data += csv::format_double(p.time) + ":" + csv::format_double(p.survival);
    }
    d += " H " + fmt(x(t_max));
    svg << "<path class=\"km\" data-group=\"" << c->group_label << "\" data-points=\"" << data << "\" d=\"" << d
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = kTop + 16 + 16 * row++;
    svg << "<text x=\"" << x(t_max) - 100 << "\" y=\"" << ly << "\" fill=\"" << color << "\">" << c->group_label
        << " risk</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

void write_km_files(const json& report, const std::filesystem::path& out_dir) {
  for (const auto& j : report.at("km")) {
    const KmEntry entry = km_entry_from_json(j);
    const std::string stem = "km_" + std::string(to_string(entry.model));
    write_text_file(out_dir / (stem + ".csv"), render_km_csv(entry));
    write_text_file(out_dir / (stem + ".svg"), render_km_svg(entry));
  }
}

std::string render_text_summary(const json& report) {
  std::ostringstream out;
  auto table = [&](const char* title, const json& evals) {
    out << title << "\n";
    for (const auto& e : evals) {
      out << "  [" << e.at("split").get<std::string>() << "] n=" << e.at("n") << " events=" << e.at("n_events")
          << "\n";
      for (const auto& m : e.at("models")) {
        char line[160];
        std::snprintf(line, sizeof(line), "    %-16s c-index %s (%s-%s)\n", m.at("model").get<std::string>().c_str(),
                      num(m.at("c_index")).c_str(), num(m.at("ci")[0]).c_str(), num(m.at("ci")[1]).c_str());
        out << line;
      }
    }
  };
  table("Overall survival", report.at("overall"));
  if (!report.at("short_term").empty()) table("30-day truncated", report.at("short_term"));

  out << "Comparisons with PESI (Wilcoxon signed-rank)\n";
  for (const auto& c : report.at("comparisons")) {
    const json& t = c.at("test");
    char line[200];
    std::snprintf(line, sizeof(line), "  [%s/%s] %-16s diff %s  p %s%s\n", c.at("split").get<std::string>().c_str(),
                  c.at("horizon").get<std::string>().c_str(), c.at("model").get<std::string>().c_str(),
                  num(c.at("mean_difference"), 4).c_str(), t.is_null() ? "-" : num(t.at("p_value"), 4).c_str(),
                  c.at("significant").get<bool>() ? " *" : "");
    out << line;
  }

  out << "Net reclassification improvement\n";
  for (const auto& s : report.at("nri")) {
    for (const auto& e : s.at("entries")) {
      char line[200];
      std::snprintf(line, sizeof(line), "  [%s] %-10s %s (%s to %s)\n", s.at("split").get<std::string>().c_str(),
                    e.at("label").get<std::string>().c_str(), num(e.at("nri")).c_str(), num(e.at("ci")[0]).c_str(),
                    num(e.at("ci")[1]).c_str());
      out << line;
    }
  }

  out << "Kaplan-Meier log-rank\n";
  for (const auto& k : report.at("km")) {
    const json& lr = k.at("logrank");
    out << "  " << k.at("model").get<std::string>() << ": "
        << (lr.is_null() ? std::string("n/a") : "p " + num(lr.at("p_value"), 4)) << "\n";
  }

  const json& rv = report.at("rv_analysis");
  if (!rv.is_null()) {
    out << "RV dysfunction factor-risk analysis [" << rv.at("split").get<std::string>() << "]\n";
    out << "  RV patients classified high risk: " << rv.at("rv_high") << "/" << rv.at("n_rv") << " ("
        << (rv.at("rv_high_pct_text").is_null() ? "-" : rv.at("rv_high_pct_text").get<std::string>()) << "%)\n";
    out << "  deaths classified high risk: " << rv.at("deaths_high") << "/" << rv.at("n_deaths") << " ("
        << (rv.at("mortality_classification_accuracy_text").is_null()
                ? "-"
                : rv.at("mortality_classification_accuracy_text").get<std::string>())
        << "%)\n";
  }
  out << "config " << report.at("config_fingerprint").get<std::string>() << "\n";
  return out.str();
}

}  // namespace survfuse::cli
