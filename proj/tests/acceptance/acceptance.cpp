// End-to-end acceptance checks. Prints one PASS/FAIL line per check and
// exits non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "../support/files.hpp"
#include "../support/mlp_reference.hpp"
#include "../support/oracles.hpp"
#include "../support/pesi_table.hpp"
#include "survfuse/analysis.hpp"
#include "survfuse/cli/commands.hpp"
#include "survfuse/cli/config.hpp"
#include "survfuse/cli/report.hpp"
#include "survfuse/cox.hpp"
#include "survfuse/deep_survival.hpp"
#include "survfuse/fusion.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/pesi.hpp"
#include "survfuse/rng.hpp"
#include "survfuse/rsf.hpp"
#include "survfuse/synthetic.hpp"

using namespace survfuse;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures with a reason; the first one is reported.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_failure_ = what;
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome outcome() const { return {pass_, pass_ ? notes_ : first_failure_ + (notes_.empty() ? "" : " | " + notes_)}; }

 private:
  bool pass_ = true;
  std::string first_failure_;
  std::string notes_;
};

std::string show(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1 ----------------------------------------------------------------------
Outcome cox_oracle() {
  Checker c;
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> n_dist(2, 10);
  std::uniform_int_distribution<int> p_dist(1, 3);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  int tied_instances = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(n_dist(gen));
    const auto p = static_cast<Eigen::Index>(p_dist(gen));
    auto labels = oracle::random_labels(gen, n, 4);
    labels[0].event = true;
    std::set<double> times;
    for (const auto& l : labels) times.insert(l.time_days);
    tied_instances += times.size() < n;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(gen);
    Eigen::VectorXd beta(p);
    for (Eigen::Index k = 0; k < p; ++k) beta(k) = normal(gen);
    const Eigen::VectorXd eta_vec = x * beta;
    const std::vector<double> eta(eta_vec.data(), eta_vec.data() + eta_vec.size());
    for (TieMethod ties : {TieMethod::Efron, TieMethod::Breslow}) {
      const double got = partial_loglik(beta, x, labels, ties);
      const double want = oracle::partial_loglik(eta, labels, ties == TieMethod::Efron);
      worst = std::max(worst, oracle::relative_error(got, want, 1e-6));
    }
  }
  c.expect(worst < 1e-10, "max relative error " + show(worst));
  c.expect(tied_instances > 0, "no instance had tied times");
  c.note("max rel err " + show(worst) + ", " + std::to_string(tied_instances) + "/50 with ties");
  return c.outcome();
}

// 2 ----------------------------------------------------------------------
Outcome cox_recovery() {
  Checker c;
  GeneratorSpec spec;
  spec.n = 2000;
  spec.beta_true = {1.0, -0.5};
  spec.baseline_rate = 0.1;
  spec.censor_rate = 0.05;
  spec.seed = 2024;
  const CoxSample s = gen_cox_linear(spec);
  const CoxModel m = fit_cox(s.x, s.labels);
  c.expect(m.converged, "Newton-Raphson did not converge");
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double err = std::abs(m.coefficients(k) - spec.beta_true[static_cast<std::size_t>(k)]);
    c.expect(err <= 0.1, "coefficient " + std::to_string(k) + " off by " + show(err));
  }
  c.note("beta = (" + show(m.coefficients(0)) + ", " + show(m.coefficients(1)) + ")");
  return c.outcome();
}

// 3 ----------------------------------------------------------------------
Outcome gradient_integrity() {
  Checker c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig cfg;
    cfg.hidden_dims = {4};
    cfg.seed = seed;
    MlpSurvModel m = init_model(3, cfg);
    Rng rng(seed + 500);
    for (auto& l : m.layers) l.bias = Eigen::VectorXd::NullaryExpr(l.bias.size(), [&] { return 0.1 * rng.normal(); });
    const Eigen::MatrixXd x = mlp_reference::random_matrix(rng, 4, 3);
    const std::vector<SurvivalLabel> labels{{true, 2}, {false, 3}, {true, 1}, {true, 2}};
    const double wd = 1e-3;
    const auto analytic = mlp_reference::flat_grads(loss_and_gradient(m, x, labels, wd).grads);
    auto params = mlp_reference::parameters(m);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = *params[k];
      *params[k] = saved + 1e-4;
      const double up = mlp_reference::reference_loss(m, x, labels, wd);
      *params[k] = saved - 1e-4;
      const double down = mlp_reference::reference_loss(m, x, labels, wd);
      *params[k] = saved;
      const double fd = (up - down) / 2e-4;
      // Gradients of inactive ReLU units are exactly zero on both sides.
      if (analytic[k] == 0.0 && std::abs(fd) < 1e-12) continue;
      worst = std::max(worst, oracle::relative_error(analytic[k], fd));
    }
  }
  c.expect(worst < 1e-5, "max relative error " + show(worst));
  c.note("max rel err " + show(worst));
  return c.outcome();
}

// 4 ----------------------------------------------------------------------
Outcome c_index_equivalence() {
  Checker c;
  std::mt19937_64 gen(404);
  std::uniform_int_distribution<int> level(0, 8);
  int mismatches = 0;
  int transform_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto labels = oracle::random_labels(gen, 20, 12, 0.6);
    labels[0] = {true, 1.0};
    labels[1] = {false, 12.0};
    std::vector<double> s(20);
    for (double& v : s) v = level(gen) / 2.0;
    mismatches += c_index(s, labels) != oracle::c_index(s, labels);
    std::vector<double> t(s);
    for (double& v : t) v = std::exp(3.0 * v) + 7.0;
    transform_failures += c_index(t, labels) != c_index(s, labels);
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches against pair enumeration");
  c.expect(transform_failures == 0, std::to_string(transform_failures) + " changed under a monotone transform");
  c.note("100/100 exact");
  return c.outcome();
}

// 5 ----------------------------------------------------------------------
Outcome km_logrank() {
  Checker c;
  const KmCurve k = km_curve(std::vector<SurvivalLabel>{{true, 1}, {false, 2}, {true, 3}});
  c.expect(k.points.size() == 2, "expected two event times");
  if (k.points.size() == 2) {
    c.expect(k.points[0].survival == 2.0 / 3.0, "S(1) != 2/3");
    c.expect(k.points[1].survival == 0.0, "S(3) != 0");
    c.expect(k.points[1].at_risk == 1, "risk set at t=3 is not 1");
  }

  const std::vector<SurvivalLabel> g{{true, 1}, {false, 2}, {true, 3}, {true, 5}, {false, 8}};
  const TestResult same = logrank_test(g, g);
  c.expect(std::abs(same.statistic) < 1e-15 && std::abs(same.p_value - 1.0) < 1e-15, "identical groups not (0, 1)");

  std::vector<SurvivalLabel> early;
  std::vector<SurvivalLabel> late;
  for (int i = 1; i <= 6; ++i) {
    early.push_back({true, static_cast<double>(i)});
    late.push_back({true, static_cast<double>(i + 6)});
  }
  // Hypergeometric terms by hand: at the k-th early death 13-k are at risk, 7-k early.
  double o_minus_e = 0.0;
  double v = 0.0;
  for (int j = 1; j <= 6; ++j) {
    const double n = 13 - j;
    const double n1 = 7 - j;
    o_minus_e += 1.0 - n1 / n;
    v += n1 * (n - n1) / (n * n);
  }
  const double want = o_minus_e * o_minus_e / v;
  const double got = logrank_test(early, late).statistic;
  c.expect(std::abs(got - want) <= 1e-9, "separated case " + show(got, 12) + " vs " + show(want, 12));
  c.note("separated chi2 " + show(got, 8));
  return c.outcome();
}

// 6 ----------------------------------------------------------------------
Outcome wilcoxon_exactness() {
  Checker c;
  std::mt19937_64 gen(606);
  std::uniform_int_distribution<int> n_dist(5, 10);
  std::uniform_int_distribution<int> coarse(-3, 4);
  std::normal_distribution<double> normal(0.3, 1.0);
  int mismatches = 0;
  int done = 0;
  while (done < 50) {
    const auto n = static_cast<std::size_t>(n_dist(gen));
    std::vector<double> d(n);
    // Every other input uses coarse integers so tied magnitudes and zeros occur.
    for (double& x : d) x = done % 2 ? coarse(gen) : normal(gen);
    if (std::count_if(d.begin(), d.end(), [](double x) { return x != 0.0; }) < 5) continue;
    const TestResult r = wilcoxon_signed_rank(d);
    mismatches += r.method != "wilcoxon_exact" || r.p_value != oracle::wilcoxon_exact_p(d);
    ++done;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " of 50 differ from enumeration");
  c.note("50/50 exact");
  return c.outcome();
}

// 7 ----------------------------------------------------------------------
Outcome nri_ledger() {
  Checker c;
  std::vector<SurvivalLabel> labels;
  for (int i = 0; i < 10; ++i) labels.push_back({true, 1.0 + i});
  for (int i = 0; i < 10; ++i) labels.push_back({false, 20.0 + i});
  const std::vector<double> old_s(20, 0.3);
  const NriResult id = nri(old_s, old_s, labels);
  c.expect(id.nri == 0.0 && id.event_up + id.event_down + id.nonevent_up + id.nonevent_down == 0, "identity != 0");
  std::vector<double> new_s(old_s);
  new_s[4] = 0.8;
  c.expect(nri(old_s, new_s, labels).nri == 0.1, "1-of-10 case != 0.1");

  std::mt19937_64 gen(707);
  std::normal_distribution<double> normal(0.5, 1.5);
  int asym = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto l = oracle::random_labels(gen, 40, 20, 0.4);
    l[0].event = true;
    l[1].event = false;
    std::vector<double> a(40);
    std::vector<double> b(40);
    for (double& v : a) v = normal(gen);
    for (double& v : b) v = normal(gen);
    // Linear predictors go through the sigmoid before the 0.7 cut.
    const auto pa = sigmoid(a);
    const auto pb = sigmoid(b);
    asym += nri(pa, pb, l).nri != -nri(pb, pa, l).nri;
  }
  c.expect(asym == 0, std::to_string(asym) + " antisymmetry violations");

  // A linear predictor of 0.8 is sigmoid(0.8) = 0.69 < 0.7, so it stays low.
  std::vector<double> lp(20, 0.8);
  std::vector<double> lp_up(lp);
  lp_up[0] = std::log(0.7 / 0.3);
  const NriResult cut = nri(sigmoid(lp), sigmoid(lp_up), labels, kDefaultNriThreshold);
  c.expect(cut.event_up == 1 && cut.threshold == 0.7, "threshold not applied on the probability scale");
  return c.outcome();
}

// 8 ----------------------------------------------------------------------
Outcome pesi_correctness() {
  Checker c;
  std::set<PesiClass> classes;
  for (const auto& row : pesi_table::kTable) {
    const PesiResult r = pesi_score(pesi_table::patient(row.age, row.present));
    c.expect(r.score == row.score && r.risk_class == row.risk_class,
             "age " + show(row.age) + ": got " + std::to_string(r.score) + " expected " + std::to_string(row.score));
    classes.insert(row.risk_class);
  }
  c.expect(pesi_table::kTable.size() == 20 && classes.size() == 5, "table does not span 20 cases / 5 classes");
  ClinicalVariables female64;
  female64.age_years = 64;
  const PesiResult r = pesi_score(female64);
  c.expect(r.score == 64 && r.risk_class == PesiClass::I, "64-year-old woman without flags != 64/I");
  c.note("20/20, classes I-V");
  return c.outcome();
}

// 9 ----------------------------------------------------------------------
Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reference) {
  Eigen::MatrixXd out(x);
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double mean = reference.col(k).mean();
    const double sd = std::sqrt((reference.col(k).array() - mean).square().mean());
    out.col(k) = (x.col(k).array() - mean) / (sd > 0 ? sd : 1.0);
  }
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Outcome fusion_benefit() {
  Checker c;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorSpec spec;
    spec.n = 2000;
    spec.seed = 9000 + seed;
    spec.baseline_rate = 0.01;
    spec.censor_rate = 0.005;
    ModalityPlan plan;
    plan.img_dim = 16;
    spec.modality_plan = plan;
    const MultimodalSample sample = gen_multimodal(spec);
    const Dataset& ds = sample.dataset;
    const std::vector<std::string> ids = ds.ids();
    const std::vector<std::string> fit_ids(ids.begin(), ids.begin() + 1440);
    const std::vector<std::string> stop_ids(ids.begin() + 1440, ids.begin() + 1600);
    const std::vector<std::string> held_ids(ids.begin() + 1600, ids.end());
    const ImputationParams imp = fit_imputation(ds, fit_ids);
    const Dataset fit = apply_imputation(ds.subset(fit_ids), imp);
    const Dataset stop = apply_imputation(ds.subset(stop_ids), imp);
    const Dataset held = apply_imputation(ds.subset(held_ids), imp);
    const auto y_fit = fit.labels();
    const auto y_stop = stop.labels();
    const auto y_held = held.labels();

    TrainConfig cfg;
    cfg.hidden_dims = {16};
    cfg.learning_rate = 1e-2;
    cfg.epochs = 300;
    cfg.seed = derive_seed(seed, 1);
    const Eigen::MatrixXd clin_fit = clinical_matrix(fit, imp.age_norm);
    const MlpSurvModel clin = train(init_model(clin_fit.cols(), cfg, Modality::Clin), clin_fit, y_fit,
                                    clinical_matrix(stop, imp.age_norm), y_stop, cfg)
                                  .model;
    const Eigen::MatrixXd img_ref = imaging_matrix(fit);
    cfg.seed = derive_seed(seed, 2);
    const MlpSurvModel img = train(init_model(img_ref.cols(), cfg, Modality::Img), standardize(img_ref, img_ref),
                                   y_fit, standardize(imaging_matrix(stop), img_ref), y_stop, cfg)
                                 .model;

    const ModalityScores train_scores{{Modality::Clin, to_vector(forward(clin, clin_fit))},
                                      {Modality::Img, to_vector(forward(img, standardize(img_ref, img_ref)))}};
    const FusionModel fused = fit_fusion(train_scores, y_fit);
    const ModalityScores held_scores{
        {Modality::Clin, to_vector(forward(clin, clinical_matrix(held, imp.age_norm)))},
        {Modality::Img, to_vector(forward(img, standardize(imaging_matrix(held), img_ref)))}};
    const double c_clin = c_index(held_scores.at(Modality::Clin), y_held);
    const double c_img = c_index(held_scores.at(Modality::Img), y_held);
    const double c_fused = c_index(predict_fused(fused, held_scores), y_held);
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    c.expect(c_fused >= std::max(c_clin, c_img) - 0.01, tag + "fused below best single modality - 0.01");
    c.expect(c_fused >= std::min(c_clin, c_img) + 0.02, tag + "fused below weaker modality + 0.02");
    c.note(tag + "clin " + show(c_clin, 3) + " img " + show(c_img, 3) + " fused " + show(c_fused, 3));
  }
  return c.outcome();
}

// 10 ---------------------------------------------------------------------
Outcome rv_arithmetic() {
  Checker c;
  RiskStrata strata;
  std::unordered_map<std::string, bool> rv;
  std::unordered_map<std::string, bool> death;
  // 16 RV patients (11 high risk), 65 deaths (55 high risk) among 400.
  for (int i = 0; i < 400; ++i) {
    const std::string id = "p" + std::to_string(i);
    const bool high = i < 200;
    (high ? strata.high_ids : strata.low_ids).push_back(id);
    rv[id] = i < 11 || (i >= 200 && i < 205);
    death[id] = (i >= 100 && i < 155) || (i >= 300 && i < 310);
  }
  RvSection section;
  section.split = "external";
  section.report = rv_factor_analysis(strata, rv, death);
  const RvFactorReport& r = section.report;
  c.expect(r.n_rv == 16 && r.rv_high == 11 && r.n_deaths == 65 && r.deaths_high == 55, "counts differ");

  StudyReport report;
  report.rv_analysis = section;
  const json j = cli::report_to_json(report);
  const std::string text = cli::render_text_summary(j);
  c.expect(j["rv_analysis"]["rv_high_pct_text"] == "68.8", "RV share text is not 68.8");
  c.expect(j["rv_analysis"]["mortality_classification_accuracy_text"] == "84.6", "accuracy text is not 84.6");
  c.expect(text.find("11/16 (68.8%)") != std::string::npos, "summary lacks 68.8%");
  c.expect(text.find("55/65 (84.6%)") != std::string::npos, "summary lacks 84.6%");
  c.note("68.8% / 84.6%");
  return c.outcome();
}

// 11 ---------------------------------------------------------------------
int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "survfuse");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

json study_config(const std::filesystem::path& data_dir, const std::filesystem::path& out_dir) {
  return {{"data",
           {{"clinical", (data_dir / "clinical.csv").string()},
            {"features", (data_dir / "features.csv").string()},
            {"external_clinical", (data_dir / "external_clinical.csv").string()},
            {"external_features", (data_dir / "external_features.csv").string()}}},
          {"output_dir", out_dir.string()},
          {"seed", 42}};
}

Outcome short_term_workflow() {
  Checker c;
  std::mt19937_64 gen(1111);
  int violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto labels = oracle::random_labels(gen, 25, 90, 0.5);
    const auto cut = truncate_30day(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      violations += cut[i].time_days > labels[i].time_days;
      violations += !labels[i].event && cut[i].event;
      violations += cut[i].time_days > 30.0;
      violations += labels[i].time_days <= 30.0 && cut[i] != labels[i];
    }
  }
  c.expect(violations == 0, std::to_string(violations) + " truncation property violations");

  testing_files::TempDir dir("accept-short");
  cli::GeneratorConfig gen_cfg;
  gen_cfg.n = 600;
  gen_cfg.n_external = 200;
  gen_cfg.seed = 31;
  cli::cmd_generate(gen_cfg, dir.path());
  json cfg = study_config(dir.path(), dir / "out");
  cfg["short_term"] = false;  // the flag alone must switch the table on
  cfg["bootstrap_resamples"] = 200;
  testing_files::write(dir / "config.json", cfg.dump());
  const int code = invoke({"run", "--config", (dir / "config.json").string(), "--truncate-30d"});
  c.expect(code == 0, "run exited with " + std::to_string(code));
  if (code != 0) return c.outcome();

  const json report = json::parse(testing_files::slurp(dir / "out" / "report.json"));
  const json& table = report["short_term"];
  std::set<std::string> splits;
  const std::vector<std::string> expected_models{"pesi", "deep_imaging", "deep_clinical", "deep_multimodal",
                                                 "deep_pesi_fused"};
  for (const auto& e : table) {
    splits.insert(e["split"].get<std::string>());
    std::vector<std::string> models;
    for (const auto& m : e["models"]) {
      models.push_back(m["model"].get<std::string>());
      const double ci_lo = m["ci"][0];
      const double ci_hi = m["ci"][1];
      const double cv = m["c_index"];
      c.expect(ci_lo <= ci_hi && cv >= 0.0 && cv <= 1.0, "malformed row in split " + e["split"].get<std::string>());
    }
    c.expect(models == expected_models, "unexpected model set in " + e["split"].get<std::string>());
    c.expect(e["n_events"].get<std::size_t>() <= e["n"].get<std::size_t>(), "event count exceeds n");
  }
  c.expect(splits.count("test") && splits.count("external"), "test and external rows missing");
  std::size_t comparisons = 0;
  for (const auto& cmp : report["comparisons"]) comparisons += cmp["horizon"] == "short_term";
  c.expect(comparisons == 4 * table.size(), "short-term PESI comparisons missing");
  c.note(std::to_string(table.size()) + " splits x 5 models");
  return c.outcome();
}

// 12 ---------------------------------------------------------------------
Outcome end_to_end_determinism() {
  Checker c;
  testing_files::TempDir dir("accept-e2e");
  cli::GeneratorConfig gen_cfg;
  gen_cfg.n = 1000;
  gen_cfg.n_external = 300;
  cli::cmd_generate(gen_cfg, dir.path());
  testing_files::write(dir / "config.json", study_config(dir.path(), dir / "unused").dump());

  std::vector<std::string> reports;
  double slowest = 0.0;
  for (const char* out : {"run_a", "run_b"}) {
    StudyConfig cfg = cli::load_config(dir / "config.json").study;
    cfg.output_dir = dir / out;
    c.expect(cfg.models.size() == 6 && cfg.bootstrap_resamples == 1000, "default study is not 6 models x 1000");
    const auto start = std::chrono::steady_clock::now();
    cli::cmd_run(cfg);
    slowest = std::max(slowest, seconds_since(start));
    reports.push_back(testing_files::slurp(cfg.output_dir / "report.json"));
  }
  c.expect(!reports[0].empty() && reports[0] == reports[1], "report.json differs between runs");
  c.expect(slowest < 300.0, "full study took " + show(slowest) + " s");
  c.note("identical " + std::to_string(reports[0].size()) + " bytes, slowest run " + show(slowest, 3) + " s");
  return c.outcome();
}

// 13 ---------------------------------------------------------------------
Outcome rsf_sanity() {
  Checker c;
  for (std::uint64_t seed : {13u, 14u, 15u}) {
    Rng rng(seed);
    const std::size_t n = 600;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
    std::vector<SurvivalLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      for (Eigen::Index k = 0; k < 4; ++k) x(r, k) = rng.normal();
      // Strong signal: log-hazard 2 * x0, the other columns are noise.
      const double t = rng.exponential(0.05 * std::exp(2.0 * x(r, 0)));
      const double cens = rng.exponential(0.01);
      y[i] = {t <= cens, std::min(t, cens)};
    }
    const Eigen::Index n_train = 420;
    const Eigen::MatrixXd x_train = x.topRows(n_train);
    const Eigen::MatrixXd x_test = x.bottomRows(x.rows() - n_train);
    const std::vector<SurvivalLabel> y_train(y.begin(), y.begin() + n_train);
    const std::vector<SurvivalLabel> y_test(y.begin() + n_train, y.end());
    RsfParams params;
    params.n_trees = 100;
    params.seed = seed;
    const double strong = c_index(predict_risk(fit_forest(x_train, y_train, params), x_test), y_test);
    std::vector<SurvivalLabel> permuted(y_train);
    Rng shuffle(seed + 77);
    shuffle.shuffle(std::span<SurvivalLabel>(permuted));
    const double noise = c_index(predict_risk(fit_forest(x_train, permuted, params), x_test), y_test);
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    c.expect(strong >= 0.75, tag + "strong-signal c-index " + show(strong, 3));
    c.expect(noise >= 0.40 && noise <= 0.60, tag + "permuted c-index " + show(noise, 3));
    c.note(tag + show(strong, 3) + " / " + show(noise, 3));
  }
  return c.outcome();
}

struct Check {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double time_limit_s;  ///< 0 means no limit
};

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Check> checks = {
      {1, "Cox partial likelihood vs direct summation", cox_oracle, 1.0},
      {2, "Cox coefficient recovery", cox_recovery, 5.0},
      {3, "MLP gradients vs central differences", gradient_integrity, 1.0},
      {4, "c-index vs pair enumeration", c_index_equivalence, 0.0},
      {5, "Kaplan-Meier and log-rank hand cases", km_logrank, 0.0},
      {6, "Wilcoxon exact p vs sign enumeration", wilcoxon_exactness, 0.0},
      {7, "NRI identities", nri_ledger, 0.0},
      {8, "PESI hand table", pesi_correctness, 0.0},
      {9, "late fusion beats single modalities", fusion_benefit, 30.0},
      {10, "RV factor-risk percentages", rv_arithmetic, 0.0},
      {11, "30-day truncation and short-term report", short_term_workflow, 0.0},
      {12, "end-to-end determinism and runtime", end_to_end_determinism, 0.0},
      {13, "random survival forest sanity", rsf_sanity, 0.0},
  };
  int failures = 0;
  for (const Check& check : checks) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    if (check.time_limit_s > 0.0 && elapsed >= check.time_limit_s) {
      o.pass = false;
      o.detail = "took " + show(elapsed, 3) + " s (limit " + show(check.time_limit_s) + " s); " + o.detail;
    }
    failures += !o.pass;
    std::printf("[%2d] %s %s (%.2fs) %s\n", check.id, o.pass ? "PASS" : "FAIL", check.name, elapsed,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu passed\n", static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}
