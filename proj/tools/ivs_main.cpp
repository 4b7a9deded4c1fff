// Command-line front end: run scenarios, check contracts against saved
// traces, inspect wiring diagrams, validate configs.
//
// Exit codes: 0 success and all contracts hold; 1 a contract or behavioral
// check failed (witness printed); 2 input error; 3 numeric or causality
// error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "ivs/acas.hpp"
#include "ivs/composition.hpp"
#include "ivs/contracts.hpp"
#include "ivs/lts_spec.hpp"
#include "ivs/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ivs::ConfigError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ivs::ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

struct RunOptions {
    std::vector<std::string> scenarios;
    std::string horizon;
    std::string out_dir = "traces";
    int grid_density = 0;
    double compare_eps = 0.0;  // 0: library default
    std::string format = "both";
    unsigned jobs = 1;
};

int run_one(const ivs::acas::Scenario& base, const RunOptions& opt, const std::string& stem,
            std::ostream& log) {
    ivs::acas::Scenario sc = base;
    if (!opt.horizon.empty()) sc.horizon = ivs::Rational::parse(opt.horizon);
    if (opt.grid_density > 0) sc.contract.grid_density = opt.grid_density;
    if (opt.compare_eps > 0.0) sc.contract.compare_eps = opt.compare_eps;
    sc.validate();

    ivs::acas::ScenarioResult result = ivs::acas::run_scenario(sc);

    ivs::TraceHeader header;
    header.config_hash = ivs::hash_hex(ivs::fnv1a(sc.to_json_text()));
    header.grid_density = sc.contract.grid_density;
    header.step = sc.step;

    fs::path dir = fs::path(opt.out_dir) / stem;
    if (opt.format == "both" || opt.format == "structured") {
        write_file(dir / "run.sections.txt",
                   ivs::write_sections_text(header, result.channels));
    }
    if (opt.format == "both" || opt.format == "csv") {
        const std::vector<std::string> columns = {"P1", "alpha1", "q1",    "theta1", "h1",
                                                  "defl1", "P2",  "alpha2", "q2",    "theta2",
                                                  "h2",    "defl2"};
        write_file(dir / "run.csv",
                   ivs::write_trace_csv(header, result.channels, sc.step, columns));
    }

    std::ostringstream report;
    report << "scenario " << stem << "  config-hash " << header.config_hash << "\n";
    report << result.summary();
    report << "wires:\n" << result.trace.compatibility.str();
    write_file(dir / "report.txt", report.str());
    log << report.str();

    return result.all_ok() ? kExitOk : kExitViolation;
}

int cmd_run(const RunOptions& opt) {
    std::vector<std::pair<std::string, ivs::acas::Scenario>> scenarios;
    for (const auto& path : opt.scenarios) {
        scenarios.emplace_back(fs::path(path).stem().string(),
                               ivs::acas::Scenario::from_json_text(read_file(path)));
    }
    if (scenarios.empty()) throw ivs::ConfigError("no scenario files given");

    if (scenarios.size() == 1) {
        return run_one(scenarios[0].second, opt, scenarios[0].first, std::cout);
    }

    // independent scenario files may run in parallel
    std::vector<int> codes(scenarios.size(), kExitOk);
    std::vector<std::string> logs(scenarios.size());
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t mine;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= scenarios.size()) return;
                mine = next++;
            }
            std::ostringstream log;
            try {
                codes[mine] = run_one(scenarios[mine].second, opt, scenarios[mine].first, log);
            } catch (const std::exception& e) {
                codes[mine] = kExitNumeric;
                log << "error: " << e.what() << "\n";
            }
            logs[mine] = log.str();
        }
    };
    unsigned n = std::min<unsigned>(std::max(1u, opt.jobs), scenarios.size());
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    int worst = kExitOk;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        std::cout << logs[i];
        worst = std::max(worst, codes[i]);
    }
    return worst;
}

int cmd_check(const std::string& trace_path, std::vector<std::string> formulas,
              const std::string& formula_file, int grid_density, double compare_eps) {
    if (!formula_file.empty()) {
        std::istringstream is(read_file(formula_file));
        std::string line;
        while (std::getline(is, line)) {
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            formulas.push_back(line);
        }
    }
    if (formulas.empty()) throw ivs::ConfigError("no formulas given");

    fs::path path = trace_path;
    if (path.extension() == ".csv") {
        // the exact payloads live in the sibling sections file
        fs::path sibling = path;
        sibling.replace_extension(".sections.txt");
        if (!fs::exists(sibling)) {
            throw ivs::ConfigError("csv traces are plot-only; expected '" + sibling.string() +
                                   "' next to it");
        }
        path = sibling;
    }
    auto [header, channels] = ivs::read_sections_text(read_file(path.string()));
    if (grid_density > 0 && header.grid_density > 0 && grid_density != header.grid_density) {
        throw ivs::ConfigError("trace was written with grid density " +
                               std::to_string(header.grid_density) + ", refusing to check at " +
                               std::to_string(grid_density));
    }
    ivs::GridSpec grid;
    grid.density = grid_density > 0 ? grid_density
                   : header.grid_density > 0 ? header.grid_density
                                             : grid.density;
    if (compare_eps > 0.0) grid.compare_eps = compare_eps;

    int code = kExitOk;
    for (const auto& text : formulas) {
        ivs::FormulaPtr f = ivs::parse_formula(text);
        ivs::SatisfactionResult result = ivs::check(f, channels, grid);
        if (result.holds) {
            std::cout << "holds  " << text << "\n";
        } else {
            code = kExitViolation;
            std::cout << "FAILS  " << text << "\n";
            if (result.witness) {
                std::cout << "       witness [" << result.witness->first.str() << ", "
                          << result.witness->second.str() << "]: " << result.detail << "\n";
            }
        }
    }
    return code;
}

int cmd_compose(const std::string& wiring_path) {
    ivs::WiringDiagram d = ivs::parse_wiring(read_file(wiring_path));
    d.validate();
    std::cout << d.summary();
    return kExitOk;
}

int cmd_validate(const std::string& scenario, const std::string& wiring, const std::string& lts,
                 const std::string& cds) {
    bool did = false;
    if (!scenario.empty()) {
        auto sc = ivs::acas::Scenario::from_json_text(read_file(scenario));
        std::cout << sc.to_json_text() << "\n";
        did = true;
    }
    if (!wiring.empty()) {
        auto d = ivs::parse_wiring(read_file(wiring));
        d.validate();
        std::cout << d.summary();
        did = true;
    }
    if (!lts.empty()) {
        auto spec = ivs::LtsSpec::parse(read_file(lts));
        std::cout << spec.to_text();
        did = true;
    }
    if (!cds.empty()) {
        auto sys = ivs::LinearCds::from_json_text(read_file(cds));
        std::cout << sys.to_json_text() << "\n";
        did = true;
    }
    if (!did) throw ivs::ConfigError("nothing to validate; pass --scenario/--wiring/--lts/--cds");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interval-sheaf hybrid machines"};
    app.require_subcommand(1);

    RunOptions run_opt;
    if (const char* env = std::getenv("IVS_OUT_DIR")) run_opt.out_dir = env;
    auto* run = app.add_subcommand("run", "execute a scenario and write traces and reports");
    run->add_option("--scenario", run_opt.scenarios, "scenario config (json); repeatable")
        ->required();
    run->add_option("--horizon", run_opt.horizon, "override the horizon (rational seconds)");
    run->add_option("--out", run_opt.out_dir, "output directory (env IVS_OUT_DIR)");
    run->add_option("--grid-density", run_opt.grid_density,
                    "contract grid points per cell gap");
    run->add_option("--compare-eps", run_opt.compare_eps,
                    "absolute tolerance override for numeric atoms");
    run->add_option("--format", run_opt.format, "csv | structured | both")
        ->check(CLI::IsMember({"csv", "structured", "both"}));
    run->add_option("--jobs", run_opt.jobs, "parallel scenario files");

    std::string trace_path, formula_file;
    std::vector<std::string> formulas;
    int check_density = 0;
    double check_eps = 0.0;
    auto* chk = app.add_subcommand("check", "evaluate formulas against a saved trace");
    chk->add_option("--trace", trace_path, "trace file from 'run'")->required();
    chk->add_option("--formula", formulas, "contract formula; repeatable");
    chk->add_option("--formula-file", formula_file, "file with one formula per line");
    chk->add_option("--grid-density", check_density,
                    "must match the recorded density when given");
    chk->add_option("--compare-eps", check_eps,
                    "absolute tolerance override for numeric atoms");

    std::string wiring_path;
    auto* comp = app.add_subcommand("compose", "parse and validate a wiring diagram");
    comp->add_option("--wiring", wiring_path, "wiring diagram file")->required();

    std::string v_scenario, v_wiring, v_lts, v_cds;
    auto* val = app.add_subcommand("validate", "round-trip configuration files");
    val->add_option("--scenario", v_scenario, "scenario json");
    val->add_option("--wiring", v_wiring, "wiring diagram");
    val->add_option("--lts", v_lts, "transition system text block");
    val->add_option("--cds", v_cds, "linear system json");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(run_opt);
        if (chk->parsed()) {
            return cmd_check(trace_path, formulas, formula_file, check_density, check_eps);
        }
        if (comp->parsed()) return cmd_compose(wiring_path);
        if (val->parsed()) return cmd_validate(v_scenario, v_wiring, v_lts, v_cds);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitInput : kExitOk;
    } catch (const ivs::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ivs::CausalityError& e) {
        std::cerr << "causality error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ivs::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ivs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
