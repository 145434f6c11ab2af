#include "tws/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tws/bvp.hpp"
#include "tws/errors.hpp"
#include "tws/model.hpp"
#include "tws/profile.hpp"
#include "tws/regularization.hpp"
#include "tws/wave_speed.hpp"

namespace tws {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Phase {
  RunReport& rep;
  std::string name;
  Clock::time_point t0 = Clock::now();
  ~Phase() {
    rep.timings.emplace_back(name, std::chrono::duration<double>(Clock::now() - t0).count());
  }
};

struct Ctx {
  RunReport rep;
  std::string out_base;  // --out prefix; empty means stdout JSON
  bool quiet = false;
  std::ostream* out;
  std::ostream* err;

  // Writes the JSON (and optional CSV) artifact and returns the exit code.
  int finish(json payload, int code, const std::string& csv = "",
             const std::string& what = "") {
    if (!out_base.empty()) {
      if (!csv.empty()) rep.outputs.push_back(out_base + ".csv");
      rep.outputs.push_back(out_base + ".json");
    }
    payload["command"] = rep.command;
    payload["warnings"] = rep.warnings;
    payload["outputs"] = rep.outputs;
    json t = json::object();
    for (const auto& [k, v] : rep.timings) t[k] = v;
    payload["timings"] = t;
    if (out_base.empty()) {
      *out << payload.dump(2) << "\n";
    } else {
      if (!csv.empty()) std::ofstream(out_base + ".csv") << csv;
      std::ofstream(out_base + ".json") << payload.dump(2) << "\n";
      if (!quiet) {
        *err << what << (what.empty() ? "" : ": ") << "wrote";
        for (const std::string& f : rep.outputs) *err << " " << f;
        *err << "\n";
      }
    }
    return code;
  }
};

json check_to_json(const HypothesisCheck& hc) {
  return json{{"name", hc.name}, {"pass", hc.pass}, {"detail", hc.detail},
              {"witness", hc.witness}};
}

json bounds_to_json(const SpeedBounds& b) {
  json j = json::object();
  j["lower"] = b.lower_available ? jnum(b.lower) : json(nullptr);
  j["upper"] = b.upper_available ? jnum(b.upper) : json(nullptr);
  j["simple_lower"] = b.lower_available ? jnum(b.simple_lower) : json(nullptr);
  j["simple_upper"] = b.simple_upper_available ? jnum(b.simple_upper) : json(nullptr);
  return j;
}

int do_validate(const std::string& text, Ctx& ctx) {
  Model m = parse_config(text);
  std::vector<HypothesisCheck> checks;
  {
    Phase p{ctx.rep, "validate"};
    checks = validate_hypotheses(m);
  }
  bool all_pass = true;
  json arr = json::array();
  for (const HypothesisCheck& hc : checks) {
    arr.push_back(check_to_json(hc));
    if (!hc.pass) {
      all_pass = false;
      ctx.rep.warnings.push_back(hc.name + " violated: " + hc.detail);
    }
  }
  json j;
  j["model_hash"] = m.source_hash;
  j["p"] = m.p;
  j["jump_set"] = m.theta;
  j["hypotheses"] = arr;
  return ctx.finish(std::move(j), all_pass ? 0 : 2, "", "validate");
}

int do_bounds(const Model& m, Ctx& ctx) {
  SpeedBounds b;
  {
    Phase p{ctx.rep, "bounds"};
    b = bounds_c_star(m);
  }
  json j;
  j["model_hash"] = m.source_hash;
  j["bounds"] = bounds_to_json(b);
  j["assumptions"] = {{"g0_positive", b.assumptions.g0_positive},
                      {"G0_positive", b.assumptions.G0_positive},
                      {"prefix_g_nonnegative", b.assumptions.prefix_g_nonnegative}};
  j["notes"] = b.notes;
  return ctx.finish(std::move(j), 0, "", "bounds");
}

int do_certify(const Model& m, double c, Ctx& ctx) {
  Certificate cert;
  {
    Phase p{ctx.rep, "certify"};
    cert = certify(m, c);
  }
  if (cert.verdict == Existence::Indeterminate)
    ctx.rep.warnings.push_back("existence undecided at c = " + fmt12(c));
  json j;
  j["model_hash"] = m.source_hash;
  j["c"] = c;
  j["verdict"] = to_string(cert.verdict);
  j["reason"] = to_string(cert.reason);
  j["slope"] = {{"lhs", jnum(cert.slope_lhs)},
                {"rhs", jnum(cert.slope_rhs)},
                {"margin", jnum(cert.slope_margin)}};
  j["existence"] = {{"beta", jnum(cert.beta)},
                    {"threshold", jnum(cert.exist_threshold)},
                    {"margin", jnum(cert.exist_margin)}};
  j["necessary"] = {{"lhs", jnum(cert.necessary_lhs)},
                    {"rhs", jnum(cert.necessary_rhs)},
                    {"margin", jnum(cert.necessary_margin)}};
  j["notes"] = cert.notes;
  return ctx.finish(std::move(j), 0, "", "certify");
}

int do_solve(const Model& m, double c, Ctx& ctx) {
  YSolution y;
  {
    Phase p{ctx.rep, "solve"};
    y = solve_bvp(m, c);
  }
  if (y.verdict == Verdict::Indeterminate)
    ctx.rep.warnings.push_back("verdict undecided at c = " + fmt12(c));
  for (const std::string& n : y.notes) ctx.rep.warnings.push_back(n);
  std::ostringstream csv;
  csv << "xi,y,ydot_left,ydot_right,residual\n";
  for (std::size_t i = 0; i < y.xi.size(); ++i)
    csv << fmt12(y.xi[i]) << "," << fmt12(y.y[i]) << "," << fmt12(y.yd_left[i]) << ","
        << fmt12(y.yd_right[i]) << "," << fmt12(y.residual[i]) << "\n";
  json j;
  j["model_hash"] = m.source_hash;
  j["c"] = c;
  j["verdict"] = to_string(y.verdict);
  j["slope_at_zero"] = jnum(y.slope_at_zero);
  j["slope_band"] = {jnum(y.slope_band_lo), jnum(y.slope_band_hi)};
  j["residual_sup"] = jnum(y.residual_sup);
  j["boundary_defect"] = jnum(y.boundary_defect);
  j["error_estimate"] = jnum(y.error_estimate);
  j["crossing_xi"] = y.verdict == Verdict::Inadmissible ? jnum(y.crossing_xi) : json(nullptr);
  j["notes"] = y.notes;
  return ctx.finish(std::move(j), 0, csv.str(), "solve");
}

int do_speed(const Model& m, double tol, Ctx& ctx) {
  SpeedSearch s;
  {
    Phase p{ctx.rep, "speed"};
    s = find_c_star(m, tol);
  }
  for (const std::string& n : s.notes) ctx.rep.warnings.push_back(n);
  json j;
  j["model_hash"] = m.source_hash;
  json verdicts = json::array();
  json history = json::array();
  for (const BracketStep& st : s.history) {
    verdicts.push_back({{"c", st.c}, {"verdict", to_string(st.verdict)}});
    history.push_back({{"lo", st.lo}, {"hi", st.hi}});
  }
  j["verdicts"] = verdicts;
  j["bounds"] = bounds_to_json(s.bounds);
  j["c_star"] = s.found ? jnum(s.c_star) : json(nullptr);
  j["bracket_history"] = history;
  if (s.refused) {
    j["refusal"] = s.refusal;
    if (!ctx.quiet) *ctx.err << s.refusal << "\n";
    return ctx.finish(std::move(j), 4, "", "speed");
  }
  j["tol"] = s.tol;
  return ctx.finish(std::move(j), 0, "", "speed");
}

int do_profile(const Model& m, double c, int grid, Ctx& ctx) {
  YSolution y;
  WaveProfile prof;
  {
    Phase p{ctx.rep, "solve"};
    y = solve_bvp(m, c);
  }
  {
    Phase p{ctx.rep, "reconstruct"};
    prof = reconstruct(m, y, grid);
  }
  double resid;
  {
    Phase p{ctx.rep, "residual"};
    resid = residual_integral_form(m, c, prof);
  }
  std::ostringstream csv;
  csv << "z,v,phi_v\n";
  for (const ProfileSample& s : prof.samples)
    csv << fmt12(s.z) << "," << fmt12(s.v) << "," << fmt12(s.phi_v) << "\n";
  json j;
  j["model_hash"] = m.source_hash;
  j["c"] = c;
  j["a"] = jnum(prof.a_endpoint);
  j["b"] = jnum(prof.b_endpoint);
  j["sharp_at_zero"] = prof.sharp_at_zero;
  j["sharp_at_one"] = prof.sharp_at_one;
  j["kinks"] = prof.kink_points;
  j["residual"] = jnum(resid);
  return ctx.finish(std::move(j), 0, csv.str(), "profile");
}

int do_reg_sweep(const Model& m, const std::vector<double>& ladder, bool have_c, double c,
                 Ctx& ctx) {
  json j;
  j["model_hash"] = m.source_hash;
  std::ostringstream csv;
  csv << "eps,value,gap\n";
  if (have_c) {
    RegularizationReport r;
    {
      Phase p{ctx.rep, "sweep"};
      r = solution_convergence_study(m, c, ladder);
    }
    for (std::size_t i = 0; i < ladder.size(); ++i)
      csv << fmt12(ladder[i]) << "," << fmt12(r.y_distance[i]) << ","
          << fmt12(r.y_distance[i]) << "\n";
    j["mode"] = "solution-distance";
    j["c"] = c;
    j["epsilons"] = r.epsilons;
    j["y_distance"] = r.y_distance;
    j["gap_tol"] = r.gap_tol;
    j["final_gap_ok"] = r.final_gap_ok;
  } else {
    RegularizationReport r;
    {
      Phase p{ctx.rep, "sweep"};
      r = gamma_limit_check(m.psi, m.theta, ladder, GammaMode::Sup);
    }
    for (std::size_t i = 0; i < ladder.size(); ++i)
      csv << fmt12(ladder[i]) << "," << fmt12(r.sup_avg_psi[i]) << "," << fmt12(r.gaps[i])
          << "\n";
    j["mode"] = "sup-average";
    j["target"] = jnum(r.limit_sup_avg_psi);
    j["epsilons"] = r.epsilons;
    j["values"] = r.sup_avg_psi;
    j["gaps"] = r.gaps;
    j["gap_tol"] = r.gap_tol;
    j["final_gap_ok"] = r.final_gap_ok;
  }
  if (!j["final_gap_ok"].get<bool>())
    ctx.rep.warnings.push_back("ladder did not close the gap at the finest width");
  return ctx.finish(std::move(j), 0, csv.str(), "reg-sweep");
}

bool parse_eps_list(const std::string& text, std::vector<double>& out, std::string& why) {
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size() || !(v > 0.0)) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      why = "bad --eps entry '" + tok + "': expected a positive real";
      return false;
    }
  }
  if (out.empty()) {
    why = "--eps list is empty";
    return false;
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    if (!(out[i + 1] < out[i])) {
      why = "--eps list must be strictly decreasing";
      return false;
    }
  return true;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"traveling-wave front toolkit: existence certificates, speed bounds, "
               "minimal-speed search, profile reconstruction, ramp regularization"};
  app.name("tws");
  app.require_subcommand(1);

  std::string model_path, out_base, eps_text;
  double c = 0.0, tol = 1e-6;
  int grid = 2048;
  bool quiet = false;

  struct Sub {
    CLI::App* cmd;
    bool needs_c;
    bool has_grid;
    bool has_tol;
    bool has_eps;
  };
  std::vector<Sub> subs;
  auto add = [&](const char* name, const char* desc, bool needs_c, bool has_grid,
                 bool has_tol, bool has_eps) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("model", model_path, "model config file")->required();
    s->add_option("--out", out_base, "output path prefix (writes <out>.json and, where "
                                     "applicable, <out>.csv; default prints JSON)");
    s->add_flag("--quiet", quiet, "suppress progress chatter");
    if (needs_c) s->add_option("--c", c, "wave speed")->required();
    if (has_grid) s->add_option("--grid", grid, "number of profile samples");
    if (has_tol) s->add_option("--tol", tol, "bisection tolerance for the speed");
    if (has_eps) {
      s->add_option("--eps", eps_text, "comma list of ramp half-widths, strictly decreasing");
      s->add_option("--c", c, "wave speed: sweep solution distances instead of averages");
    }
    subs.push_back({s, needs_c, has_grid, has_tol, has_eps});
    return s;
  };

  CLI::App* cmd_validate =
      add("validate", "parse a model and report the structural checks H1-H4", false, false,
          false, false);
  CLI::App* cmd_bounds =
      add("bounds", "closed-form and averaged bounds for the minimal speed", false, false,
          false, false);
  CLI::App* cmd_certify =
      add("certify", "existence certificate at a fixed speed", true, false, false, false);
  CLI::App* cmd_solve =
      add("solve", "backward shooting solve of the reduced problem at a speed", true, false,
          false, false);
  CLI::App* cmd_speed =
      add("speed", "bisection search for the minimal admissible speed", false, false, true,
          false);
  CLI::App* cmd_profile =
      add("profile", "front profile reconstruction at an admissible speed", true, true, false,
          false);
  CLI::App* cmd_sweep =
      add("reg-sweep", "ramp-width ladder: averaged extrema or solution distances", false,
          false, false, true);

  std::string echoed = "tws";
  for (const std::string& a : args) echoed += " " + a;

  try {
    std::reverse(args.begin(), args.end());  // CLI11's vector API consumes back-to-front
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 1;
  }

  Ctx ctx;
  ctx.out_base = out_base;
  ctx.quiet = quiet;
  ctx.out = &out;
  ctx.err = &err;
  ctx.rep.command = echoed;

  std::ifstream file(model_path);
  if (!file) {
    err << "cannot read model file " << model_path << "\n";
    return 1;
  }
  std::ostringstream text;
  text << file.rdbuf();

  try {
    if (cmd_validate->parsed()) return do_validate(text.str(), ctx);

    Model m;
    {
      Phase p{ctx.rep, "parse"};
      m = parse_model(text.str());
    }
    ctx.rep.model_hash = m.source_hash;

    if (cmd_bounds->parsed()) return do_bounds(m, ctx);
    if (cmd_certify->parsed()) return do_certify(m, c, ctx);
    if (cmd_solve->parsed()) return do_solve(m, c, ctx);
    if (cmd_speed->parsed()) return do_speed(m, tol, ctx);
    if (cmd_profile->parsed()) {
      if (grid < 2) {
        err << "--grid needs at least 2 samples\n";
        return 1;
      }
      return do_profile(m, c, grid, ctx);
    }
    if (cmd_sweep->parsed()) {
      std::vector<double> ladder;
      if (!eps_text.empty()) {
        std::string why;
        if (!parse_eps_list(eps_text, ladder, why)) {
          err << why << "\n";
          return 1;
        }
      } else {
        ladder = default_ladder(eps_bar(m.theta));
      }
      bool have_c = cmd_sweep->count("--c") > 0;
      return do_reg_sweep(m, ladder, have_c, c, ctx);
    }
    err << "no subcommand dispatched\n";
    return 1;
  } catch (const HypothesisError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const EvalDomainError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << e.what() << "\n";
    return 3;
  }
}

}  // namespace tws
