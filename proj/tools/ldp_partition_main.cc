// Copyright 2026 The LDP Partition Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ldp-partition: privatise, estimate, sweep, audit and check from the
// command line. Flags override values from --config, which override the
// built-in defaults.

#include <cmath>
#include <cstdint>
#include <deque>
#include <iterator>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/collector.h"
#include "ldp_partition/commands.h"
#include "ldp_partition/config.h"

namespace {

using ldp_partition::ExperimentConfig;

std::string_view KeyHelp(std::string_view key) {
  for (const auto& doc : ldp_partition::kConfigKeys) {
    if (doc.key == key) return doc.help;
  }
  return "";
}

std::string FlagName(std::string_view key) {
  std::string flag = "--";
  for (char ch : key) flag += ch == '_' ? '-' : ch;
  return flag;
}

std::string ConfigKeysFooter() {
  std::string footer = "Config file keys (JSON object; flags use '-' for '_'):\n";
  for (const auto& doc : ldp_partition::kConfigKeys) {
    footer += "  " + std::string(doc.key);
    footer.append(doc.key.size() < 22 ? 22 - doc.key.size() : 1, ' ');
    footer += std::string(doc.help) + "\n";
  }
  footer += "Exit codes: 0 ok, 2 validation error, 3 property-check failure, "
            "4 I/O error.\n";
  footer += "The master seed falls back to $LDP_PARTITION_SEED.\n";
  return footer;
}

// Flag values kept apart from the config so that only flags given on the
// command line override the file.
class FlagSet {
 public:
  FlagSet(const FlagSet&) = delete;
  FlagSet& operator=(const FlagSet&) = delete;
  explicit FlagSet(CLI::App* app) : app_(app) {
    Add("scenario", &ExperimentConfig::scenario);
    Add("d", &ExperimentConfig::d);
    Add("atom_weight", &ExperimentConfig::atom_weight);
    Add("noise_scale", &ExperimentConfig::noise_scale);
    Add("alpha", &ExperimentConfig::alpha);
    Add("n", &ExperimentConfig::n);
    AddList("ns", &ExperimentConfig::ns);
    AddList("seeds", &ExperimentConfig::seeds);
    Add("mode", mode_, [this](ExperimentConfig& c) -> absl::Status {
      auto mode = ldp_partition::ParseMode(mode_);
      if (!mode.ok()) return mode.status();
      c.mode = *mode;
      return absl::OkStatus();
    });
    AddSwitch("non_private", &ExperimentConfig::non_private);
    AddSwitch("compensated_sum", &ExperimentConfig::compensated_sum);
    Add("c_prime", &ExperimentConfig::c_prime);
    Add("m_scale", &ExperimentConfig::m_scale);
    Add("r_scale", &ExperimentConfig::r_scale);
    AddOptional("h", &ExperimentConfig::h);
    AddOptional("c", &ExperimentConfig::c);
    AddOptional("m_trunc", &ExperimentConfig::m_trunc);
    AddOptional("radius", &ExperimentConfig::radius);
    AddOptional("sigma_w", &ExperimentConfig::sigma_w);
    AddOptional("sigma_z", &ExperimentConfig::sigma_z);
    Add("n_test", &ExperimentConfig::n_test);
    Add("out", &ExperimentConfig::out);
    Add("input", &ExperimentConfig::input);
    CLI::Option* seed =
        app_->add_option("--seed,--master-seed", seed_,
                         std::string(KeyHelp("master_seed")));
    appliers_.push_back([this, seed](ExperimentConfig& c) {
      if (seed->count() > 0) c.master_seed = seed_;
      return absl::OkStatus();
    });
    Add("jobs", &ExperimentConfig::jobs);
    Add("max_cells", &ExperimentConfig::max_cells);
    Add("audit_tuples", &ExperimentConfig::audit_tuples);
    Add("audit_tail_reps", &ExperimentConfig::audit_tail_reps);
    Add("audit_variance_reps", &ExperimentConfig::audit_variance_reps);
  }

  absl::Status ApplyTo(ExperimentConfig& config) {
    for (auto& apply : appliers_) {
      if (absl::Status s = apply(config); !s.ok()) return s;
    }
    return absl::OkStatus();
  }

 private:
  using Applier = std::function<absl::Status(ExperimentConfig&)>;

  // Binds a flag to the matching member of flags_ and copies it into the
  // target config when given.
  template <typename T>
  void Add(std::string_view key, T ExperimentConfig::*member) {
    T& field = flags_.*member;
    CLI::Option* option =
        app_->add_option(FlagName(key), field, std::string(KeyHelp(key)));
    appliers_.push_back([option, member, &field](ExperimentConfig& c) {
      if (option->count() > 0) c.*member = field;
      return absl::OkStatus();
    });
  }

  template <typename T>
  void Add(std::string_view key, T& field, Applier apply) {
    CLI::Option* option =
        app_->add_option(FlagName(key), field, std::string(KeyHelp(key)));
    appliers_.push_back([option, apply](ExperimentConfig& c) {
      return option->count() > 0 ? apply(c) : absl::OkStatus();
    });
  }

  template <typename T>
  void AddList(std::string_view key, std::vector<T> ExperimentConfig::*member) {
    Add(key, member);
    app_->get_option(FlagName(key))->delimiter(',');
  }

  void AddSwitch(std::string_view key, bool ExperimentConfig::*member) {
    bool& value = switches_.emplace_back(false);
    CLI::Option* option =
        app_->add_flag(FlagName(key), value, std::string(KeyHelp(key)));
    appliers_.push_back([option, member, &value](ExperimentConfig& c) {
      if (option->count() > 0) c.*member = value;
      return absl::OkStatus();
    });
  }

  // Accepts a number or "inf".
  void AddOptional(std::string_view key,
                   std::optional<double> ExperimentConfig::*member) {
    std::string& text = texts_.emplace_back();
    CLI::Option* option =
        app_->add_option(FlagName(key), text, std::string(KeyHelp(key)))
            ->type_name("FLOAT");
    appliers_.push_back([option, member, &text, key](ExperimentConfig& c) {
      if (option->count() == 0) return absl::OkStatus();
      auto value = ldp_partition::ParseDouble(text);
      if (!value.ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat(FlagName(key), ": ", value.status().message()));
      }
      c.*member = *value;
      return absl::OkStatus();
    });
  }

  CLI::App* app_;
  ExperimentConfig flags_;
  std::string mode_;
  uint64_t seed_ = 0;
  std::deque<bool> switches_;
  std::deque<std::string> texts_;
  std::vector<Applier> appliers_;
};

using Command = int (*)(const ExperimentConfig&, std::ostream&, std::ostream&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally differentially private partitioning estimates"};
  // "-h" would clash with the bandwidth flag --h.
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.footer(ConfigKeysFooter());

  struct Subcommand {
    const char* name;
    const char* help;
    Command run;
  };
  const Subcommand subcommands[] = {
      {"privatize", "sample, privatise, aggregate and publish to <out>",
       &ldp_partition::CmdPrivatize},
      {"estimate", "fit the estimate from a published aggregate <input>",
       &ldp_partition::CmdEstimate},
      {"sweep", "consistency sweep over ns x seeds",
       &ldp_partition::CmdSweep},
      {"audit", "privacy, tail-bound and variance checks (exit 3 on failure)",
       &ldp_partition::CmdAudit},
      {"check", "validate the config and print the schedules",
       &ldp_partition::CmdCheck},
  };

  std::deque<FlagSet> flag_sets;
  std::vector<std::string> config_paths(std::size(subcommands));
  std::vector<CLI::App*> apps;
  bool dump_config = false;
  for (size_t i = 0; i < std::size(subcommands); ++i) {
    CLI::App* sub = app.add_subcommand(subcommands[i].name, subcommands[i].help);
    sub->footer(ConfigKeysFooter());
    sub->add_option("--config", config_paths[i], "JSON config file");
    sub->add_flag("--dump-config", dump_config,
                  "print the effective config as JSON and exit");
    flag_sets.emplace_back(sub);
    apps.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ldp_partition::kExitOk : ldp_partition::kExitValidation;
  }

  for (size_t i = 0; i < apps.size(); ++i) {
    if (!apps[i]->parsed()) continue;
    ExperimentConfig config;
    if (!config_paths[i].empty()) {
      auto loaded = ldp_partition::LoadConfigFile(config_paths[i]);
      if (!loaded.ok()) return ldp_partition::internal::Fail(loaded.status(), std::cerr);
      config = *std::move(loaded);
    }
    if (absl::Status s = flag_sets[i].ApplyTo(config); !s.ok()) {
      return ldp_partition::internal::Fail(s, std::cerr);
    }
    if (absl::Status s = ldp_partition::ValidateConfig(config); !s.ok()) {
      return ldp_partition::internal::Fail(s, std::cerr);
    }
    if (dump_config) {
      std::cout << ldp_partition::ConfigToJson(config).dump(2) << "\n";
      return ldp_partition::kExitOk;
    }
    return subcommands[i].run(config, std::cout, std::cerr);
  }
  return ldp_partition::kExitValidation;
}
