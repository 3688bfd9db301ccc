#include "mobent/arima.hpp"
#include "mobent/covariates.hpp"
#include "mobent/csv.hpp"
#include "mobent/entropy.hpp"
#include "mobent/error.hpp"
#include "mobent/eval.hpp"
#include "mobent/gam.hpp"
#include "mobent/grid.hpp"
#include "mobent/synth.hpp"
#include "mobent/trace.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mobent;

namespace {

// Exit codes: 0 ok, 1 input/parse error, 2 empty selection, 3 every model failed.
constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_empty = 2;
constexpr int exit_all_failed = 3;

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::int64_t window_seconds = 3600;
    std::int64_t utc_offset_seconds = 3600;
    double cell_degrees = 0.0025;
    double split = 0.6;
    int max_gap_days = 3;
    double min_days = 20.0;

    std::string locations_path;
    std::string entropy_path;
    std::string features_path;
    std::string profiles_path;
    std::string model_path;
    std::string campus_box;  // "min_lat,min_lon,max_lat,max_lon"
    std::string kind;

    std::vector<std::string> smooth_flags = {"hourNb:10", "dayNb:5"};
    std::vector<std::string> factor_flags = {"campus", "night", "weekend"};
    std::vector<std::string> terms;
    int curve_points = 100;

    int users = 12;
    int days = 28;
    double missing_day_prob = 0.05;
    std::int64_t fix_interval = 300;
    bool inject_job_effect = false;
};

void add_shared(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config_path, "flat key=value config file; flags override it");
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "generator seed")->capture_default_str();
    cmd->add_option("--window-seconds", o.window_seconds, "time window duration")
        ->capture_default_str();
    cmd->add_option("--cell-degrees", o.cell_degrees, "grid cell size in degrees")
        ->capture_default_str();
    cmd->add_option("--split", o.split, "train fraction for evaluation")->capture_default_str();
    cmd->add_option("--max-gap-days", o.max_gap_days, "longest tolerated run of empty days")
        ->capture_default_str();
    cmd->add_option("--min-days", o.min_days, "minimum trace span in days")
        ->capture_default_str();
    cmd->add_option("--utc-offset-seconds", o.utc_offset_seconds,
                    "local-time offset for day/hour features")
        ->capture_default_str();
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file: " + path);
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write output file: " + path.string());
    return out;
}

std::string file_token(const std::string& user_id) {
    std::string token = user_id;
    for (char& c : token)
        if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '-' && c != '.') c = '_';
    return token;
}

std::string trimmed_copy(const std::string& text) {
    std::size_t first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    std::size_t last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

// Expands `--config <file>` into ordinary option tokens placed right after
// the subcommand, so the regular parse applies them. Keys given explicitly
// on the command line win over the file. Unknown keys surface through the
// normal unknown-option error.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);

    std::set<std::string> given;
    for (const auto& arg : args)
        if (arg.rfind("--", 0) == 0) given.insert(arg.substr(2, arg.find('=') - 2));

    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string entry = trimmed_copy(line);
        if (entry.empty() || entry[0] == '#') continue;
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key=value");
        std::string key = trimmed_copy(entry.substr(0, eq));
        std::string value = trimmed_copy(entry.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        if (key == "config" || given.count(key)) continue;
        extra.push_back("--" + key + "=" + value);
    }

    // insert after the subcommand name: the first token that is not a flag
    auto at = args.begin();
    while (at != args.end() && at->rfind("-", 0) == 0) ++at;
    if (at != args.end()) ++at;
    args.insert(at, extra.begin(), extra.end());
    return args;
}

CampusRegion parse_campus(const std::string& text) {
    CampusRegion region;
    if (text.empty()) return region;
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) parts.push_back(std::stod(field));
    if (parts.size() != 4)
        throw ValidationError("campus box must be min_lat,min_lon,max_lat,max_lon");
    region.min_lat = parts[0];
    region.min_lon = parts[1];
    region.max_lat = parts[2];
    region.max_lon = parts[3];
    if (region.min_lat > region.max_lat || region.min_lon > region.max_lon)
        throw ValidationError("campus box is inverted");
    return region;
}

ModelSpec spec_from_flags(const Options& o) {
    ModelSpec spec;
    for (const auto& text : o.smooth_flags) {
        SmoothTermSpec term;
        std::stringstream ss(text);
        std::string part;
        std::getline(ss, part, ':');
        term.name = part;
        if (std::getline(ss, part, ':')) term.k = std::stoi(part);
        if (std::getline(ss, part, ':')) term.cyclic = (part == "cyclic");
        spec.smooths.push_back(term);
    }
    for (const auto& name : o.factor_flags) spec.factors.push_back({name});
    return spec;
}

std::vector<TraceDataset> read_and_select(const Options& o, bool print) {
    auto in = open_input(o.locations_path);
    auto datasets = parse_traces(in);
    auto kept = select_users(datasets, o.min_days, o.max_gap_days, o.utc_offset_seconds);
    if (print) {
        for (const auto& d : datasets) {
            GapReport report = gap_statistics(d, o.utc_offset_seconds);
            bool keep = false;
            for (const auto& k : kept) keep = keep || k.user_id == d.user_id;
            std::cout << d.user_id << ": " << csv::fixed(report.duration_days, 2)
                      << " days, max gap " << report.max_gap_days << " days, "
                      << (keep ? "kept" : "dropped") << '\n';
        }
    }
    if (kept.empty())
        std::cerr << "no users pass the selection filters (min-days=" << o.min_days
                  << ", max-gap-days=" << o.max_gap_days << ")\n";
    return kept;
}

const FeatureSequence& features_of(const std::vector<FeatureSequence>& all,
                                   const std::string& user_id) {
    for (const auto& f : all)
        if (f.user_id == user_id) return f;
    throw ValidationError("no feature rows for user '" + user_id + "'");
}

const StaticProfile& profile_of(const std::vector<StaticProfile>& all,
                                const std::string& user_id) {
    for (const auto& p : all)
        if (p.user_id == user_id) return p;
    throw ValidationError("no profile for user '" + user_id + "'");
}

int cmd_ingest(const Options& o) {
    auto kept = read_and_select(o, true);
    if (kept.empty()) return exit_empty;
    fs::create_directories(o.out_dir);
    auto out = open_output(fs::path(o.out_dir) / "locations.csv");
    write_traces(out, kept);
    std::cout << "kept " << kept.size() << " users -> "
              << (fs::path(o.out_dir) / "locations.csv").string() << '\n';
    return exit_ok;
}

int cmd_entropy(const Options& o) {
    auto kept = read_and_select(o, false);
    if (kept.empty()) return exit_empty;
    CampusRegion campus = parse_campus(o.campus_box);

    std::vector<std::vector<LocationRecord>> traces;
    for (const auto& d : kept) traces.push_back(d.records);
    Grid grid = build_grid(traces, o.cell_degrees, 1);

    std::vector<EntropySequence> sequences;
    std::vector<FeatureSequence> features;
    for (const auto& d : kept) {
        sequences.push_back(entropy_sequence(d, grid, o.window_seconds, o.utc_offset_seconds));
        features.push_back(feature_sequence(d, campus, o.window_seconds, o.utc_offset_seconds));
        std::size_t missing = 0;
        for (const auto& s : sequences.back().samples)
            if (is_missing(s.value)) ++missing;
        std::cout << d.user_id << ": T=" << sequences.back().samples.size()
                  << " missing=" << missing << '\n';
    }

    fs::create_directories(o.out_dir);
    auto grid_out = open_output(fs::path(o.out_dir) / "grid.csv");
    write_grid(grid_out, grid);
    auto entropy_out = open_output(fs::path(o.out_dir) / "entropy.csv");
    write_entropy(entropy_out, sequences);
    auto features_out = open_output(fs::path(o.out_dir) / "features.csv");
    write_features(features_out, features);
    std::cout << "grid " << grid.n << "x" << grid.m << ", wrote grid.csv entropy.csv features.csv in "
              << o.out_dir << '\n';
    return exit_ok;
}

int cmd_fit(const Options& o) {
    auto entropy_in = open_input(o.entropy_path);
    auto sequences = parse_entropy(entropy_in);
    if (sequences.empty()) {
        std::cerr << "entropy file holds no users\n";
        return exit_empty;
    }
    fs::create_directories(o.out_dir);

    if (o.kind == "arima") {
        auto summary = open_output(fs::path(o.out_dir) / "arima-summary.csv");
        summary << "user_id,p,d,q,mu,sigma2,aicc,status\n";
        std::size_t ok = 0;
        for (const auto& seq : sequences) {
            try {
                PreparedSeries series = prepare_series(seq);
                ArimaModel model = auto_select(series.values);
                auto blob = open_output(fs::path(o.out_dir) /
                                        ("arima-" + file_token(seq.user_id) + ".json"));
                blob << arima_to_json(model);
                summary << seq.user_id << ',' << model.order.p << ',' << model.order.d << ','
                        << model.order.q << ',' << csv::exact(model.mu) << ','
                        << csv::exact(model.sigma2) << ',' << csv::exact(model.aicc) << ",ok\n";
                std::cout << seq.user_id << ": arima(" << model.order.p << ',' << model.order.d
                          << ',' << model.order.q << ")\n";
                ++ok;
            } catch (const Error& e) {
                summary << seq.user_id << ",,,,,,,failed: " << e.what() << '\n';
                std::cout << seq.user_id << ": failed: " << e.what() << '\n';
            }
        }
        return ok == 0 ? exit_all_failed : exit_ok;
    }

    auto features_in = open_input(o.features_path);
    auto features = parse_features(features_in);
    ModelSpec base = spec_from_flags(o);

    if (o.kind == "global-gam") {
        auto profiles_in = open_input(o.profiles_path);
        auto profiles = load_profiles(profiles_in);
        DataTable pooled;
        for (const auto& seq : sequences)
            pooled.append(build_table(seq, features_of(features, seq.user_id),
                                      &profile_of(profiles, seq.user_id)));
        ModelSpec spec = base;
        for (const auto& field : profile_fields) spec.factors.push_back({field.name});
        spec = prune_constant_factors(spec, pooled);
        try {
            FittedAdditiveModel model = fit(spec, pooled);
            auto blob = open_output(fs::path(o.out_dir) / "global-gam.json");
            blob << model_to_json(model);
            auto coef = open_output(fs::path(o.out_dir) / "global-gam-coefficients.csv");
            coef << "term,estimate,se,z,p\n";
            for (const auto& row : coefficient_table(model))
                coef << row.name << ',' << csv::exact(row.estimate) << ','
                     << csv::exact(row.std_error) << ',' << csv::exact(row.z) << ','
                     << csv::exact(row.p) << '\n';
            std::cout << "global-gam: n=" << model.n_obs << " deviance="
                      << csv::fixed(model.deviance, 3) << " edf="
                      << csv::fixed(model.edf_total, 2) << '\n';
            return exit_ok;
        } catch (const ModelError& e) {
            std::cerr << "global-gam failed: " << e.what() << '\n';
            return exit_all_failed;
        }
    }

    if (o.kind == "individual-gam") {
        auto summary = open_output(fs::path(o.out_dir) / "individual-gam-summary.csv");
        summary << "user_id,n,deviance,edf,status\n";
        std::size_t ok = 0;
        for (const auto& seq : sequences) {
            try {
                DataTable table = build_table(seq, features_of(features, seq.user_id));
                FittedAdditiveModel model = fit(prune_constant_factors(base, table), table);
                auto blob = open_output(fs::path(o.out_dir) /
                                        ("individual-gam-" + file_token(seq.user_id) + ".json"));
                blob << model_to_json(model);
                summary << seq.user_id << ',' << model.n_obs << ','
                        << csv::exact(model.deviance) << ',' << csv::exact(model.edf_total)
                        << ",ok\n";
                std::cout << seq.user_id << ": edf=" << csv::fixed(model.edf_total, 2) << '\n';
                ++ok;
            } catch (const Error& e) {
                summary << seq.user_id << ",,,,failed: " << e.what() << '\n';
                std::cout << seq.user_id << ": failed: " << e.what() << '\n';
            }
        }
        return ok == 0 ? exit_all_failed : exit_ok;
    }

    std::cerr << "unknown fit kind '" << o.kind
              << "' (expected global-gam, individual-gam or arima)\n";
    return exit_input;
}

int cmd_evaluate(const Options& o) {
    auto entropy_in = open_input(o.entropy_path);
    auto sequences = parse_entropy(entropy_in);
    if (sequences.empty()) {
        std::cerr << "entropy file holds no users\n";
        return exit_empty;
    }
    auto features_in = open_input(o.features_path);
    auto features = parse_features(features_in);
    auto profiles_in = open_input(o.profiles_path);
    auto profiles = load_profiles(profiles_in);

    std::vector<UserData> users;
    for (const auto& seq : sequences)
        users.push_back({seq, features_of(features, seq.user_id)});

    ComparisonConfig config = default_comparison_config();
    config.window_seconds = o.window_seconds;
    config.utc_offset_seconds = o.utc_offset_seconds;
    config.train_fraction = o.split;
    config.base_terms.smooths = spec_from_flags(o).smooths;
    config.base_terms.factors = spec_from_flags(o).factors;

    ComparisonResult result = run_comparison(users, profiles, config);

    fs::create_directories(o.out_dir);
    auto report_out = open_output(fs::path(o.out_dir) / "report.csv");
    write_report(report_out, result.report);

    bool any_ok = false;
    for (const auto& avg : result.report.averages) {
        any_ok = any_ok || avg.users > 0;
        std::cout << avg.model << ": ";
        if (avg.users > 0)
            std::cout << "mae=" << csv::fixed(avg.mae, 3) << " rmse=" << csv::fixed(avg.rmse, 3);
        else
            std::cout << "no successful fits";
        std::cout << " (users=" << avg.users << ", failures=" << avg.failures << ")\n";
    }
    return any_ok ? exit_ok : exit_all_failed;
}

int cmd_curves(const Options& o) {
    std::ifstream in = open_input(o.model_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    FittedAdditiveModel model = model_from_json(buffer.str());

    std::vector<std::string> available;
    for (const auto& smooth : model.smooths) available.push_back(smooth.spec.name);
    std::vector<std::string> wanted = o.terms.empty() ? available : o.terms;
    for (const auto& term : wanted) {
        bool known = false;
        for (const auto& name : available) known = known || name == term;
        if (!known) {
            std::cerr << "unknown term '" << term << "'; available:";
            for (const auto& name : available) std::cerr << ' ' << name;
            std::cerr << '\n';
            return exit_input;
        }
    }

    fs::create_directories(o.out_dir);
    for (const auto& term : wanted) {
        auto out = open_output(fs::path(o.out_dir) / ("curve-" + file_token(term) + ".csv"));
        out << "term,x,fit,se\n";
        for (const auto& point : smooth_curve(model, term, o.curve_points))
            out << term << ',' << csv::fixed(point.x, 6) << ',' << csv::fixed(point.fit, 6)
                << ',' << csv::fixed(point.se, 6) << '\n';
        std::cout << "wrote curve-" << file_token(term) << ".csv\n";
    }
    return exit_ok;
}

int cmd_synth(const Options& o) {
    CohortConfig cohort;
    cohort.base_seed = o.seed;
    cohort.n_users = o.users;
    cohort.base.days = o.days;
    cohort.base.missing_day_prob = o.missing_day_prob;
    cohort.base.fix_interval = o.fix_interval;
    cohort.inject_job_effect = o.inject_job_effect;
    Cohort generated = generate_cohort(cohort);

    fs::create_directories(o.out_dir);
    auto locations_out = open_output(fs::path(o.out_dir) / "locations.csv");
    write_traces(locations_out, generated.datasets);
    auto profiles_out = open_output(fs::path(o.out_dir) / "profiles.csv");
    write_profiles(profiles_out, generated.profiles);

    std::size_t records = 0;
    for (const auto& d : generated.datasets) records += d.records.size();
    std::cout << "wrote " << generated.datasets.size() << " users, " << records
              << " records to " << o.out_dir << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"location-history entropy pipeline"};
    app.require_subcommand(1);
    Options o;

    CLI::App* ingest = app.add_subcommand("ingest", "validate, filter and normalize raw fixes");
    add_shared(ingest, o);
    ingest->add_option("--locations", o.locations_path, "raw locations CSV")->required();

    CLI::App* entropy = app.add_subcommand("entropy", "windowed entropy + features + grid");
    add_shared(entropy, o);
    entropy->add_option("--locations", o.locations_path, "raw locations CSV")->required();
    entropy->add_option("--campus", o.campus_box, "campus box min_lat,min_lon,max_lat,max_lon");

    CLI::App* fit = app.add_subcommand("fit", "fit models from entropy/features CSVs");
    add_shared(fit, o);
    fit->add_option("--kind", o.kind, "global-gam | individual-gam | arima")->required();
    fit->add_option("--entropy", o.entropy_path, "entropy CSV")->required();
    fit->add_option("--features", o.features_path, "features CSV");
    fit->add_option("--profiles", o.profiles_path, "profiles CSV (global-gam)");
    fit->add_option("--smooth", o.smooth_flags, "smooth term name[:k[:cyclic]]");
    fit->add_option("--factor", o.factor_flags, "factor term name");

    CLI::App* evaluate = app.add_subcommand("evaluate", "train/test comparison report");
    add_shared(evaluate, o);
    evaluate->add_option("--entropy", o.entropy_path, "entropy CSV")->required();
    evaluate->add_option("--features", o.features_path, "features CSV")->required();
    evaluate->add_option("--profiles", o.profiles_path, "profiles CSV")->required();
    evaluate->add_option("--smooth", o.smooth_flags, "smooth term name[:k[:cyclic]]");
    evaluate->add_option("--factor", o.factor_flags, "factor term name");

    CLI::App* curves = app.add_subcommand("curves", "export smooth-term curves from a GAM");
    add_shared(curves, o);
    curves->add_option("--model", o.model_path, "fitted GAM JSON")->required();
    curves->add_option("--terms", o.terms, "smooth terms to export (default: all)");
    curves->add_option("--points", o.curve_points, "grid points per curve")
        ->capture_default_str();

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic commuter cohort");
    add_shared(synth, o);
    synth->add_option("--users", o.users, "cohort size")->capture_default_str();
    synth->add_option("--days", o.days, "days per user")->capture_default_str();
    synth->add_option("--missing-day-prob", o.missing_day_prob, "whole-day dropout probability")
        ->capture_default_str();
    synth->add_option("--fix-interval", o.fix_interval, "seconds between fixes")
        ->capture_default_str();
    synth->add_flag("--inject-job-effect", o.inject_job_effect,
                    "job=1 users commute twice daily");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = apply_config_file(args);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(o);
        if (entropy->parsed()) return cmd_entropy(o);
        if (fit->parsed()) return cmd_fit(o);
        if (evaluate->parsed()) return cmd_evaluate(o);
        if (curves->parsed()) return cmd_curves(o);
        if (synth->parsed()) return cmd_synth(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    }
    return exit_input;
}
