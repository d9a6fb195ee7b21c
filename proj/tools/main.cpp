// Command-line front end: run single experiments or directories of them,
// list the shipped presets, and run the acceptance suite.

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <iostream>
#include <string>
#include <vector>

#include "iflow/acceptance.hpp"
#include "iflow/harness.hpp"

namespace fs = std::filesystem;

namespace {

void print_usage(std::ostream& os) {
    os << "usage: iflow <command> [args]\n"
          "\n"
          "commands:\n"
          "  run <config.json>        run one experiment; prints the report JSON\n"
          "  batch <dir> [--jobs N]   run every *.json config under <dir> (default N=1)\n"
          "  accept                   run the acceptance suite\n"
          "  presets [name]           list shipped presets, or print one as config JSON\n"
          "\n"
          "exit codes: 0 all checks passed, 1 some check failed, 2 usage/config error\n"
          "environment: INERTIAL_FLOW_OUT overrides the output base directory\n";
}

std::string case_summary(const iflow::ExperimentReport& rep) {
    int pass = 0, fail = 0;
    for (const iflow::CaseOutcome& c : rep.cases)
        (c.fitted && c.verdict.pass ? pass : fail)++;
    int cert_fail = 0;
    for (const iflow::CertificationReport& c : rep.certifications)
        if (!c.pass) ++cert_fail;
    std::string s = fmt::format("{} case(s) passed, {} failed", pass, fail);
    if (cert_fail > 0) s += fmt::format(", {} certification(s) violated", cert_fail);
    return s;
}

int cmd_run(const std::string& path) {
    iflow::ExperimentConfig cfg;
    try {
        cfg = iflow::config_from_json_file(path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    iflow::ExperimentReport rep = iflow::run_experiment(cfg);
    std::cout << iflow::report_to_json(rep) << '\n';
    const bool ok = iflow::report_passed(rep);
    if (rep.status != "ok")
        std::cerr << fmt::format("FAIL {}: {}\n", rep.config.name, rep.error);
    else
        std::cerr << fmt::format("{} {} ({:.2f}s): {}\n", ok ? "PASS" : "FAIL",
                                 rep.config.name, rep.duration_seconds,
                                 case_summary(rep));
    return ok ? 0 : 1;
}

int cmd_batch(const std::vector<std::string>& args) {
    std::string dir;
    int jobs = 1;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--jobs") {
            if (i + 1 >= args.size()) {
                std::cerr << "batch: missing value for --jobs\n";
                return 2;
            }
            try {
                jobs = std::stoi(args[++i]);
            } catch (const std::exception&) {
                std::cerr << "batch: --jobs expects an integer\n";
                return 2;
            }
        } else if (a.rfind("--jobs=", 0) == 0) {
            try {
                jobs = std::stoi(a.substr(7));
            } catch (const std::exception&) {
                std::cerr << "batch: --jobs expects an integer\n";
                return 2;
            }
        } else if (!a.empty() && a[0] == '-') {
            std::cerr << "batch: unknown flag " << a << "\n";
            print_usage(std::cerr);
            return 2;
        } else if (dir.empty()) {
            dir = a;
        } else {
            std::cerr << "batch: unexpected argument " << a << "\n";
            print_usage(std::cerr);
            return 2;
        }
    }
    if (dir.empty()) {
        std::cerr << "batch: missing config directory\n";
        print_usage(std::cerr);
        return 2;
    }
    if (jobs < 1) {
        std::cerr << "batch: --jobs must be >= 1\n";
        return 2;
    }
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        std::cerr << "batch: not a directory: " << dir << "\n";
        return 2;
    }

    std::vector<fs::path> files;
    for (const fs::directory_entry& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<iflow::ExperimentConfig> cfgs;
    cfgs.reserve(files.size());
    for (const fs::path& p : files) {
        try {
            cfgs.push_back(iflow::config_from_json_file(p.string()));
        } catch (const std::exception& e) {
            std::cerr << "config error in " << p.string() << ": " << e.what() << '\n';
            return 2;
        }
    }

    std::vector<iflow::ExperimentReport> reps;
    try {
        reps = iflow::run_batch(cfgs, jobs);
    } catch (const std::exception& e) {
        std::cerr << "batch: " << e.what() << '\n';
        return 2;
    }

    bool all_ok = true;
    for (const iflow::ExperimentReport& rep : reps) {
        const bool ok = iflow::report_passed(rep);
        all_ok = all_ok && ok;
        if (rep.status != "ok")
            std::cout << fmt::format("FAIL {}: {}\n", rep.config.name, rep.error);
        else
            std::cout << fmt::format("{} {} ({:.2f}s): {}{}\n", ok ? "PASS" : "FAIL",
                                     rep.config.name, rep.duration_seconds,
                                     case_summary(rep),
                                     rep.output_dir.empty()
                                         ? std::string()
                                         : " -> " + rep.output_dir);
    }
    std::cout << fmt::format("{} of {} experiment(s) passed\n",
                             std::count_if(reps.begin(), reps.end(),
                                           [](const auto& r) {
                                               return iflow::report_passed(r);
                                           }),
                             reps.size());
    return all_ok ? 0 : 1;
}

std::string schedule_brief(const iflow::PerturbationSchedule& g) {
    using Kind = iflow::PerturbationSchedule::Kind;
    switch (g.kind) {
        case Kind::Zero: return "unperturbed";
        case Kind::PowerLaw: return fmt::format("powerlaw c={:g} q={:g}", g.c, g.q);
        case Kind::ExpGamma: return fmt::format("expgamma c={:g} m'={:g}", g.c, g.mprime);
    }
    return "?";
}

int cmd_presets(const std::vector<std::string>& args) {
    if (args.size() > 1) {
        std::cerr << "presets: expected at most one name\n";
        print_usage(std::cerr);
        return 2;
    }
    if (args.size() == 1) {
        try {
            std::cout << iflow::config_to_json(iflow::preset(args[0])) << '\n';
        } catch (const std::exception& e) {
            std::cerr << e.what() << '\n';
            return 2;
        }
        return 0;
    }
    for (const iflow::ExperimentConfig& c : iflow::presets()) {
        std::string obj =
            c.objective.kind == "power"
                ? fmt::format("power gamma={:g}", c.objective.gamma)
                : [&] {
                      std::string s = "anisotropic [";
                      for (std::size_t i = 0; i < c.objective.exponents.size(); ++i)
                          s += fmt::format("{}{:g}", i ? "," : "", c.objective.exponents[i]);
                      return s + "]";
                  }();
        std::string cases;
        for (iflow::RateCase k : c.cases) {
            if (!cases.empty()) cases += ",";
            cases += iflow::to_string(k);
        }
        std::cout << fmt::format(
            "{:<34} {:<18} alpha={:<4g} theta={:<4g} {:<24} T={:<7g} cases: {}\n", c.name,
            obj, c.damping.alpha, c.damping.theta, schedule_brief(c.schedule), c.horizon,
            cases);
    }
    return 0;
}

int cmd_accept() {
    std::vector<iflow::CriterionResult> results = iflow::run_acceptance(std::cout);
    const bool ok = iflow::all_passed(results);
    std::cout << (ok ? "ACCEPTANCE PASSED\n" : "ACCEPTANCE FAILED\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) {
        print_usage(std::cerr);
        return 2;
    }
    const std::string cmd = args[0];
    args.erase(args.begin());
    try {
        if (cmd == "help" || cmd == "-h" || cmd == "--help") {
            print_usage(std::cout);
            return 0;
        }
        if (cmd == "run") {
            if (args.size() != 1) {
                std::cerr << "run: expected exactly one config path\n";
                print_usage(std::cerr);
                return 2;
            }
            return cmd_run(args[0]);
        }
        if (cmd == "batch") return cmd_batch(args);
        if (cmd == "presets") return cmd_presets(args);
        if (cmd == "accept") {
            if (!args.empty()) {
                std::cerr << "accept: takes no arguments\n";
                print_usage(std::cerr);
                return 2;
            }
            return cmd_accept();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::cerr << "unknown command: " << cmd << "\n";
    print_usage(std::cerr);
    return 2;
}
