// Command-line front end: scenario runs, k-anonymity audits, dashboard
// stats export, and the route-store retention sweep.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "bibo/accounts/accounts.hpp"
#include "bibo/domain/calendar.hpp"
#include "bibo/privacy/anonymize.hpp"
#include "bibo/privacy/envelope.hpp"
#include "bibo/sim/simulation.hpp"
#include "bibo/storage/kv_store.hpp"

namespace fs = std::filesystem;
using namespace bibo;

namespace {

// Mirrors the key derivation used when a simulation persists to disk.
void install_keys_for(privacy::KeyService& keys, const std::string& service) {
  keys.install_master_key("mk-" + service, "local-dev-master:" + service);
}

Outcome<std::vector<privacy::AnonymizedSessionRecord>> load_records(
    const std::string& state_dir, const std::string& service) {
  privacy::KeyService keys;
  install_keys_for(keys, service);
  storage::DirKvStore store(state_dir + "/completed/" + service);
  std::vector<privacy::AnonymizedSessionRecord> records;
  for (const auto& key : store.keys()) {
    auto raw = store.get(key);
    if (!raw.ok()) continue;
    auto envelope = privacy::deserialize(raw.value());
    if (!envelope.ok()) return envelope.error();
    auto plain = keys.decrypt(envelope.value());
    if (!plain.ok()) return plain.error();
    auto rec = privacy::record_from_json(
        std::string(plain.value().begin(), plain.value().end()));
    if (!rec.ok()) return rec.error();
    records.push_back(std::move(rec.value()));
  }
  return records;
}

std::vector<std::string> completed_services(const std::string& state_dir) {
  std::vector<std::string> out;
  const fs::path base = fs::path(state_dir) / "completed";
  if (!fs::exists(base)) return out;
  for (const auto& entry : fs::directory_iterator(base)) {
    if (entry.is_directory()) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"be-in/be-out transit ticketing simulator"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a scenario");
  std::string config_path, out_path = "metrics.json", state_dir;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  simulate->add_option("--config", config_path, "scenario JSON")->required();
  auto* seed_opt = simulate->add_option("--seed", seed_override, "RNG seed");
  simulate->add_option("--out", out_path, "metrics output path");
  simulate->add_option("--state-dir", state_dir,
                       "persist stores here (default: in-memory)");

  // audit-k
  auto* audit = app.add_subcommand("audit-k", "k-anonymity audit");
  std::string audit_store, quasi = "age_range";
  audit->add_option("--store", audit_store, "state directory")->required();
  audit->add_option("--quasi", quasi, "comma-separated quasi-identifier");

  // export-stats
  auto* stats = app.add_subcommand("export-stats", "per-age-range ride CSV");
  std::string stats_service, stats_dir;
  Timestamp from = 0, to = std::numeric_limits<Timestamp>::max();
  std::int64_t k_threshold = 5;
  stats->add_option("--service", stats_service)->required();
  stats->add_option("--state-dir", stats_dir)->required();
  stats->add_option("--from", from, "period start (unix seconds)");
  stats->add_option("--to", to, "period end (unix seconds)");
  stats->add_option("--k-threshold", k_threshold);

  // sweep-retention
  auto* sweep = app.add_subcommand("sweep-retention", "route-store retention");
  std::string sweep_dir;
  Timestamp sweep_now = 0;
  int max_age_days = 30;
  sweep->add_option("--state-dir", sweep_dir)->required();
  sweep->add_option("--now", sweep_now, "reference time")->required();
  sweep->add_option("--max-age-days", max_age_days);

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  if (*simulate) {
    auto config = sim::scenario_from_file(config_path);
    if (!config.ok()) {
      std::cerr << "config error: " << config.error().message << "\n";
      return 1;
    }
    auto cfg = config.value();
    if (seed_set) {
      cfg.seed = seed_override;
      cfg.path_loss.rng_seed = seed_override;
    }
    auto stores = state_dir.empty() ? sim::memory_stores(cfg)
                                    : sim::dir_stores(cfg, state_dir);
    auto metrics = sim::run_scenario(cfg, stores);
    if (!metrics.ok()) {
      std::cerr << "run error: " << metrics.error().message << "\n";
      return 1;
    }
    std::ofstream out(out_path);
    out << metrics.value().to_json_string() << "\n";
    std::cout << metrics.value().to_json_string() << "\n";
    return 0;
  }

  if (*audit) {
    privacy::QuasiIdentifier qi;
    qi.fields.clear();
    std::stringstream ss(quasi);
    std::string field;
    while (std::getline(ss, field, ',')) qi.fields.push_back(field);

    std::vector<privacy::AnonymizedSessionRecord> all;
    for (const auto& service : completed_services(audit_store)) {
      auto records = load_records(audit_store, service);
      if (!records.ok()) {
        std::cerr << service << ": " << records.error().message << "\n";
        return 1;
      }
      all.insert(all.end(), records.value().begin(), records.value().end());
    }
    auto report = privacy::k_report(all, qi);
    if (!report.ok()) {
      std::cerr << "audit error: " << report.error().message << "\n";
      return 1;
    }
    std::cout << privacy::k_report_csv(report.value());
    return 0;
  }

  if (*stats) {
    auto records = load_records(stats_dir, stats_service);
    if (!records.ok()) {
      std::cerr << "load error: " << records.error().message << "\n";
      return 1;
    }
    std::vector<privacy::AnonymizedSessionRecord> in_period;
    for (const auto& rec : records.value()) {
      if (rec.start_ts >= from && rec.start_ts <= to) {
        in_period.push_back(rec);
      }
    }
    std::cout << "age_range,day,rides\n";
    if (in_period.empty()) return 0;

    auto report = privacy::k_report(in_period, privacy::QuasiIdentifier{});
    if (!report.ok() || report.value().k_min < k_threshold) {
      std::cerr << "export refused: k_min "
                << (report.ok() ? report.value().k_min : 0) << " < threshold "
                << k_threshold << "\n";
      return 2;
    }
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    for (const auto& rec : in_period) {
      ++counts[{rec.age_range, format_date(date_of(rec.start_ts))}];
    }
    for (const auto& [key, count] : counts) {
      std::cout << key.first << "," << key.second << "," << count << "\n";
    }
    return 0;
  }

  if (*sweep) {
    accounts::AccountsCore core(accounts::AccountsConfig{},
                                storage::open_dir_store(sweep_dir + "/routes"),
                                std::make_shared<storage::MemKvStore>());
    accounts::RetentionConfig cfg;
    cfg.max_age_days = max_age_days;
    std::cout << "deleted " << core.retention_sweep(sweep_now, cfg)
              << " route records\n";
    return 0;
  }
  return 0;
}
