#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "majorantlab/cli.hpp"
#include "majorantlab/errors.hpp"
#include "majorantlab/parallel.hpp"

using namespace majorantlab;

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out, seed, format, family, B, c1, c2, psi_mode, kind, N, p, xi, budget, restarts,
      method, trials, m_max, tol, A, level, c1_list, c2_list, coeffs_out;
  std::optional<int> workers;
  bool exact_endpoint = false;
  bool no_timing = false;
};

void set(cli::ConfigSections& s, const std::string& section, const std::string& key,
         const std::optional<std::string>& v) {
  if (v) s[section][key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse sets, exponential sums and majorant constants"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "Config file ([section] key = value)")->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--seed", f.seed, "Master seed (u64)");
  app.add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", f.format, "csv, jsonl or both");
  app.add_flag("--no-timing", f.no_timing, "Omit the wall_ms column");

  app.add_option("--family", f.family, "Slowly varying factor of h1 and h2 (log_power, exp_log_power, ...)");
  app.add_option("--B", f.B, "Exponent B of the slowly varying factor");
  app.add_option("--c1", f.c1, "Index of h1");
  app.add_option("--c2", f.c2, "Index of h2");
  app.add_option("--psi-mode", f.psi_mode, "difference, derivative or constant");
  app.add_option("--kind", f.kind, "frac_plus, frac_minus or floor_image");
  app.add_option("--N", f.N, "N list: '1e4, 1e5', '1e4..1e7', '2^10..2^16'");
  app.add_option("--p", f.p, "Exponent p (default: threshold + 0.5)");
  app.add_flag("--exact-endpoint", f.exact_endpoint, "Default p at the threshold itself");
  app.add_option("--xi", f.xi, "golden(k), random(k) or an explicit list");
  app.add_option("--budget", f.budget, "Optimizer iterations per start");
  app.add_option("--restarts", f.restarts, "Random starts per family");
  app.add_option("--method", f.method, "signs, phase or auto");
  app.add_option("--trials", f.trials, "Random f per N (prop2)");
  app.add_option("--m-max", f.m_max, "Largest frequency m (vdc)");
  app.add_option("--tol", f.tol, "Quadrature tolerance");
  app.add_option("--A", f.A, "Explicit set for majorant, e.g. '0, 1, 3'");
  app.add_option("--level", f.level, "quick or full (verify)");
  app.add_option("--c1-list", f.c1_list, "c1 grid (thresholds)");
  app.add_option("--c2-list", f.c2_list, "c2 grid (thresholds)");
  app.add_option("--coeffs-out", f.coeffs_out, "Sidecar file for the argmax coefficients (majorant)");

  for (const auto& name : cli::experiments()) app.add_subcommand(name, "Run the " + name + " experiment");

  CLI11_PARSE(app, argc, argv);

  try {
    cli::ConfigSections s = f.config.empty() ? cli::ConfigSections{} : cli::load_config(f.config);
    s[""]["experiment"] = app.get_subcommands().front()->get_name();
    for (const char* sec : {"experiment", "output"})
      if (s.count(sec)) s[sec].erase("experiment");
    set(s, "", "out", f.out);
    set(s, "", "seed", f.seed);
    set(s, "", "format", f.format);
    set(s, "h1", "family", f.family);
    set(s, "h2", "family", f.family);
    set(s, "h1", "B", f.B);
    set(s, "h2", "B", f.B);
    set(s, "h1", "c", f.c1);
    set(s, "h2", "c", f.c2);
    set(s, "", "psi_mode", f.psi_mode);
    set(s, "", "kind", f.kind);
    set(s, "", "N_list", f.N);
    set(s, "", "p", f.p);
    set(s, "", "xi", f.xi);
    set(s, "", "budget", f.budget);
    set(s, "", "restarts", f.restarts);
    set(s, "", "method", f.method);
    set(s, "", "trials", f.trials);
    set(s, "", "m_max", f.m_max);
    set(s, "", "tol", f.tol);
    set(s, "", "A", f.A);
    set(s, "", "level", f.level);
    set(s, "", "c1_list", f.c1_list);
    set(s, "", "c2_list", f.c2_list);
    set(s, "", "coeffs_out", f.coeffs_out);
    if (f.exact_endpoint) s[""]["exact_endpoint"] = "true";
    if (f.no_timing) s[""]["timing"] = "false";

    int workers = 1;
    for (const auto& [name, kv] : s)
      if (kv.count("workers")) workers = static_cast<int>(kv_int(kv, "workers"));
    if (f.workers) workers = *f.workers;
    set_workers(workers);

    const auto config = cli::ExperimentConfig::from_sections(s);
    return cli::run(config, std::cerr);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return cli::kExitCapacity;
  }
}
