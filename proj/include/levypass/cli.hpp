#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levypass/config.hpp"
#include "levypass/reports.hpp"
#include "levypass/transform_core.hpp"

namespace levypass::cli {

inline std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw DomainError("empty numeric list: '" + csv + "'");
  return out;
}

struct CommonOpts {
  std::string spec_file;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 0;
};

inline void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("spec", o.spec_file, "process spec config file")->required();
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--threads", o.threads,
                  "worker threads (default: LEVYPASS_THREADS or hardware)");
}

inline int run(std::vector<std::string> args) {
  CLI::App app{"levypass: first-passage analytics for Levy processes"};
  app.require_subcommand(1);

  CommonOpts common;
  double theta = 0.0, mu = 0.0, rho = 0.0, strip_B = 1.0, p_order = 4.0;
  double horizon = 0.0, h_euler = 0.0;
  long n_paths = 100000, n_samples = 100000;
  std::string x_list = "1", grid_list = "1,2,5,10,20,50", regime = "auto";
  std::string probe_list;
  double tol_expansion = 1e-3, mc_sigmas = 3.0;

  auto* validate = app.add_subcommand("validate", "check measure hypotheses");
  add_common(validate, common);
  validate->add_option("--strip-B", strip_B, "requested strip depth");

  auto* zeros = app.add_subcommand("zeros", "locate zeros of phi - theta");
  add_common(zeros, common);
  zeros->add_option("--theta", theta, "Laplace argument for the time");
  zeros->add_option("--strip-B", strip_B, "strip depth B");

  auto* invert = app.add_subcommand("invert", "Bromwich inversion of F");
  add_common(invert, common);
  invert->add_option("--theta", theta);
  invert->add_option("--mu", mu);
  invert->add_option("--rho", rho);
  invert->add_option("--x", x_list, "comma-separated x values");
  double invert_tol = 1e-8;
  invert->add_option("--abs-tol", invert_tol, "absolute inversion tolerance");

  auto* expand = app.add_subcommand("expand", "asymptotic expansion of F");
  add_common(expand, common);
  expand->add_option("--theta", theta);
  expand->add_option("--mu", mu);
  expand->add_option("--rho", rho);
  expand->add_option("--B", strip_B, "strip depth (remainder exponent)");
  expand->add_option("--x", x_list, "x values for the evaluation table");

  auto* limits = app.add_subcommand("limits", "limit laws of (T, K, L)");
  add_common(limits, common);
  limits->add_option("--regime", regime, "auto|gaussian|rho|overshoot");
  limits->add_option("--theta", x_list, "theta list for the rho transform");
  limits->add_option("--samples", n_samples, "law sample count for the CDF export");
  limits->add_option("--probe-berry-esseen", probe_list,
                     "x list: run the convergence-rate probe instead");
  limits->add_option("--paths", n_paths, "paths per probe point");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo passage samples");
  add_common(simulate, common);
  simulate->add_option("--x", x_list, "level(s)");
  simulate->add_option("--paths", n_paths);
  simulate->add_option("--horizon", horizon, "censoring horizon (0: default)");
  simulate->add_option("--h-euler", h_euler, "max diffusion segment length");
  simulate->add_option("--theta", theta);
  simulate->add_option("--mu", mu);
  simulate->add_option("--rho", rho);

  auto* poly = app.add_subcommand("poly-bound", "polynomial ruin bound report");
  add_common(poly, common);
  poly->add_option("--p", p_order, "finite moment order");
  poly->add_option("--grid", grid_list, "x grid");
  poly->add_option("--paths", n_paths);

  auto* compare = app.add_subcommand("compare", "expansion vs inversion vs MC");
  add_common(compare, common);
  compare->add_option("--x", x_list, "x grid");
  compare->add_option("--paths", n_paths);
  compare->add_option("--B", strip_B, "expansion strip depth");
  compare->add_option("--theta", theta);
  compare->add_option("--mu", mu);
  compare->add_option("--rho", rho);
  compare->add_option("--tol-expansion", tol_expansion,
                      "|expansion - inversion| gate");
  compare->add_option("--mc-sigmas", mc_sigmas, "MC agreement gate in SEs");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  static const char* name = "levypass";
  argv.push_back(name);
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help() << std::endl;
      return 0;
    }
    std::cerr << e.what() << "\n" << app.help() << std::endl;
    return 2;
  }

  const auto t_start = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.argv = args;
  manifest.seed = common.seed;
  manifest.out_dir = common.out_dir;
  manifest.spec_file = common.spec_file;

  auto emit = [&](const std::string& name_, const std::string& content) {
    std::filesystem::create_directories(common.out_dir);
    const std::string path = common.out_dir + "/" + name_;
    write_file(path, content);
    manifest.outputs.push_back(name_);
  };
  auto finish = [&](int code) {
    manifest.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    std::filesystem::create_directories(common.out_dir);
    write_file(common.out_dir + "/manifest.json",
               manifest.to_json_obj().dump(2) + "\n");
    return code;
  };

  try {
    const ProcessSpec spec = load_process_spec(common.spec_file);

    if (app.got_subcommand(validate)) {
      manifest.subcommand = "validate";
      const auto rep = validate_hypotheses(spec, strip_B);
      const std::string body = to_json(rep).dump(2) + "\n";
      std::cout << body;
      emit("hypotheses.json", body);
      return finish(0);
    }

    if (app.got_subcommand(zeros)) {
      manifest.subcommand = "zeros";
      const auto rep = find_strip_zeros(spec, theta, strip_B);
      const std::string body = to_json(rep).dump(2) + "\n";
      std::cout << body;
      emit("zeros.json", body);
      return finish(0);
    }

    if (app.got_subcommand(invert)) {
      manifest.subcommand = "invert";
      const auto ctx = make_context(spec, theta, mu, rho);
      BromwichOptions bo;
      bo.abs_tol = invert_tol;
      CsvWriter csv({"x", "F"});
      for (double x : parse_list(x_list))
        csv.row({x, invert_bromwich(ctx, x, bo)});
      std::cout << csv.str();
      emit("inversion.csv", csv.str());
      return finish(0);
    }

    if (app.got_subcommand(expand)) {
      manifest.subcommand = "expand";
      const auto rep = expand_F(spec, theta, mu, rho, strip_B);
      const std::string body = to_json(rep).dump(2) + "\n";
      std::cout << body;
      emit("expansion.json", body);
      CsvWriter csv({"x", "F_expansion"});
      for (double x : parse_list(x_list)) csv.row({x, eval_expansion(rep, x)});
      emit("expansion_eval.csv", csv.str());
      return finish(0);
    }

    if (app.got_subcommand(limits)) {
      manifest.subcommand = "limits";
      if (!probe_list.empty()) {
        const auto probe =
            berry_esseen_probe(spec, parse_list(probe_list), n_paths, 4,
                               common.seed);
        const std::string body = to_json(probe).dump(2) + "\n";
        std::cout << body;
        emit("berry_esseen.json", body);
        CsvWriter csv({"replicate", "x", "distance"});
        for (std::size_t r = 0; r < probe.distances.size(); ++r)
          for (std::size_t i = 0; i < probe.xs.size(); ++i)
            csv.row({double(r), probe.xs[i], probe.distances[r][i]});
        emit("berry_esseen.csv", csv.str());
        return finish(0);
      }
      const double mean = mean_x1(spec);
      std::string mode = regime;
      if (mode == "auto") mode = std::abs(mean) <= 1e-12 ? "rho" : "gaussian";
      if (mode == "gaussian") {
        const auto lim = gaussian_limit(spec);
        const std::string body = to_json(lim).dump(2) + "\n";
        std::cout << body;
        emit("gaussian_limit.json", body);
      } else if (mode == "rho") {
        CsvWriter csv({"theta", "laplace"});
        for (double th : parse_list(x_list))
          csv.row({th, hitting_law_rho(spec, th)});
        std::cout << csv.str();
        emit("rho_transform.csv", csv.str());
      } else if (mode == "overshoot") {
        const auto law = overshoot_law(spec);
        json j{{"schema_version", kSchemaVersion},
               {"regime", law.regime},
               {"atom", law.atom},
               {"gamma", law.gamma},
               {"total_mass", overshoot_law_total_mass(law)}};
        const std::string body = j.dump(2) + "\n";
        std::cout << body;
        emit("overshoot_law.json", body);
        CsvWriter csv({"l", "cdf_given_positive"});
        for (int i = 0; i <= 200; ++i) {
          const double l = law.l_max * i / 200.0;
          csv.row({l, law.l_marginal_cdf(l)});
        }
        emit("overshoot_l_cdf.csv", csv.str());
      } else {
        std::cerr << "unknown regime '" << regime << "'\n";
        return finish(2);
      }
      return finish(0);
    }

    if (app.got_subcommand(simulate)) {
      manifest.subcommand = "simulate";
      SimConfig cfg;
      cfg.n_paths = n_paths;
      cfg.horizon = horizon;
      cfg.h_euler = h_euler;
      cfg.seed = common.seed;
      cfg.threads = common.threads;
      const auto xs = parse_list(x_list);
      cfg.level = xs.front();
      const auto samples = sample_passages(spec, cfg);
      CsvWriter csv({"hit", "t", "k", "l"});
      for (const auto& s : samples)
        csv.row({double(s.hit), s.t, s.k, s.l});
      emit("samples.csv", csv.str());
      const auto est = estimate_F(spec, theta, mu, rho, cfg.level, cfg);
      const std::string body = to_json(est).dump(2) + "\n";
      std::cout << body;
      emit("estimate.json", body);
      return finish(0);
    }

    if (app.got_subcommand(poly)) {
      manifest.subcommand = "poly-bound";
      SimConfig cfg;
      cfg.n_paths = n_paths;
      cfg.seed = common.seed;
      cfg.threads = common.threads;
      const auto rep = check_poly_bound(spec, p_order, parse_list(grid_list), cfg);
      const std::string body = to_json(rep).dump(2) + "\n";
      std::cout << body;
      emit("poly_bound.json", body);
      return finish(rep.violations.empty() ? 0 : 4);
    }

    if (app.got_subcommand(compare)) {
      manifest.subcommand = "compare";
      const auto rep = expand_F(spec, theta, mu, rho, strip_B);
      const auto ctx = make_context(spec, theta, mu, rho);
      SimConfig cfg;
      cfg.n_paths = n_paths;
      cfg.seed = common.seed;
      cfg.threads = common.threads;
      auto xs = parse_list(x_list);
      std::sort(xs.begin(), xs.end());
      const auto ests = estimate_F_multi(spec, theta, mu, rho, xs, cfg);
      CsvWriter csv({"x", "F_expansion", "F_bromwich", "F_mc", "SE", "flag"});
      bool all_ok = true;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fe = eval_expansion(rep, xs[i]);
        const double fb = invert_bromwich(ctx, xs[i]);
        const double fm = ests[i].value;
        const double se = ests[i].std_error;
        const bool ok = std::abs(fe - fb) <= tol_expansion &&
                        std::abs(fm - fb) <= mc_sigmas * se + 1e-12 &&
                        std::abs(fm - fe) <= mc_sigmas * se + tol_expansion;
        all_ok = all_ok && ok;
        csv.row({xs[i], fe, fb, fm, se, ok ? 0.0 : 1.0});
      }
      std::cout << csv.str();
      emit("compare.csv", csv.str());
      return finish(all_ok ? 0 : 4);
    }

    std::cerr << app.help() << std::endl;
    return finish(2);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << std::endl;
    return finish(2);
  } catch (const HypothesisUnverified& e) {
    std::cerr << e.what() << std::endl;
    return finish(3);
  } catch (const NoConvergence& e) {
    std::cerr << e.what() << std::endl;
    return finish(4);
  } catch (const SlowDecay& e) {
    std::cerr << e.what() << std::endl;
    return finish(4);
  } catch (const Error& e) {
    std::cerr << e.what() << std::endl;
    return finish(1);
  }
}

}  // namespace levypass::cli
