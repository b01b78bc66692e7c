#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "causal/config.hpp"
#include "causal/dataset.hpp"
#include "causal/discovery.hpp"
#include "causal/graph.hpp"
#include "causal/identification.hpp"
#include "causal/scm.hpp"
#include "causal/sensitivity.hpp"
#include "causal/stats.hpp"
#include "causal/tmle.hpp"
#include "causal/util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// exit codes: 0 ok, 2 config, 3 data, 4 not identifiable, 5 numerical
struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& m) : std::runtime_error(m), code(c) {}
};

std::string read_file(const std::string& path, int code, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw CliError(code, "cannot open " + what + " file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw CliError(5, "cannot write '" + path.string() + "'");
    out << content;
}

struct Context {
    causal::PipelineConfig cfg;
    fs::path out;
    bool quiet = false;
    std::string command;

    void say(const std::string& text) const {
        if (!quiet) std::cout << text;
    }
};

Context make_context(const std::string& command, const std::string& config_path,
                     std::optional<std::uint64_t> seed_override, const std::string& out_override,
                     bool quiet) {
    Context ctx;
    ctx.command = command;
    ctx.quiet = quiet;
    if (!config_path.empty()) {
        try {
            ctx.cfg = causal::load_config(config_path);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }
    if (seed_override) ctx.cfg.seed = *seed_override;
    if (!out_override.empty()) ctx.cfg.out = out_override;
    ctx.out = ctx.cfg.out;
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) throw CliError(2, "cannot create output directory '" + ctx.out.string() + "'");
    return ctx;
}

void write_run_log(const Context& ctx, const std::string& config_hash) {
    std::ostringstream s;
    s << "command = " << ctx.command << "\n";
    s << "seed = " << ctx.cfg.seed << "\n";
    s << "config_hash = " << config_hash << "\n";
    s << "flag graph_plausibility = independent-bernoulli-product\n";
    s << "flag targeting = full-data-refit\n";
    s << "flag binary_outcome_model = bernoulli-risk-difference\n";
    s << "flag sensitivity_baseline = " << (ctx.cfg.sensitivity_drop_all ? "drop-all" : "keep-precision")
      << "\n";
    s << "flag censor_graph_parents = " << ctx.cfg.censor_graph_parents << "\n";
    write_file(ctx.out / "run.log", s.str());
}

std::vector<causal::LearnerSpec> effective_learners(const causal::PipelineConfig& cfg) {
    if (!cfg.learners.empty()) return cfg.learners;
    return {causal::parse_learner("linear_ridge(0.001)"), causal::parse_learner("logistic_ridge(0.001)"),
            causal::parse_learner("intercept_only")};
}

causal::SuperLearnerSpec make_sl_spec(const causal::PipelineConfig& cfg) {
    causal::SuperLearnerSpec sl;
    sl.learners = effective_learners(cfg);
    sl.k_folds = cfg.folds;
    sl.seed = cfg.seed;
    return sl;
}

causal::Dataset load_data(const causal::PipelineConfig& cfg) {
    if (cfg.data.empty()) throw CliError(2, "config key 'data' is required for this command");
    causal::Schema schema;
    if (!cfg.schema.empty()) {
        try {
            schema = causal::load_schema(cfg.schema);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }
    try {
        return causal::load_csv(cfg.data, schema);
    } catch (const std::exception& e) {
        throw CliError(3, e.what());
    }
}

causal::DiscoveryConstraints load_constraints_opt(const causal::PipelineConfig& cfg) {
    if (cfg.constraints.empty()) return {};
    try {
        return causal::load_constraints(cfg.constraints);
    } catch (const std::exception& e) {
        throw CliError(2, e.what());
    }
}

causal::Dataset select_columns(const causal::Dataset& ds, const std::vector<std::string>& cols) {
    causal::Dataset out;
    out.names = cols;
    out.values.resize(ds.n_rows(), static_cast<Eigen::Index>(cols.size()));
    out.observed.resize(ds.n_rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) {
        int src = ds.column_index(cols[j]);
        out.types.push_back(ds.types[src]);
        out.values.col(static_cast<Eigen::Index>(j)) = ds.values.col(src);
        out.observed.col(static_cast<Eigen::Index>(j)) = ds.observed.col(src);
        auto it = ds.rescaled.find(cols[j]);
        if (it != ds.rescaled.end()) out.rescaled[cols[j]] = it->second;
    }
    return out;
}

std::string join_names(const std::vector<std::string>& names) {
    if (names.empty()) return "(none)";
    std::string s;
    for (size_t i = 0; i < names.size(); ++i) {
        if (i) s += ", ";
        s += names[i];
    }
    return s;
}

// ---- discovery plumbing shared by `discover` and graph-less estimation ----

struct DiscoveryOutput {
    causal::ConfidenceMatrix conf;
    causal::CausalGraph graph;
};

DiscoveryOutput run_discovery(const Context& ctx, const causal::Dataset& ds,
                              const std::vector<std::string>& vars) {
    causal::BootstrapOptions opt;
    opt.test = ctx.cfg.discovery_test;
    opt.alpha = ctx.cfg.discovery_alpha;
    opt.runs = ctx.cfg.discovery_runs;
    opt.seed = ctx.cfg.seed;
    opt.max_cond_size = ctx.cfg.discovery_max_cond_size;
    opt.constraints = load_constraints_opt(ctx.cfg);
    opt.knn.k = ctx.cfg.discovery_knn_k;
    opt.knn.n_perm = ctx.cfg.discovery_knn_permutations;
    DiscoveryOutput out;
    try {
        out.conf = causal::bootstrap_confidences(select_columns(ds, vars), opt);
        out.graph = causal::threshold_graph(out.conf, ctx.cfg.discovery_threshold);
    } catch (const std::exception& e) {
        throw CliError(3, e.what());
    }
    return out;
}

std::string confidences_csv(const causal::ConfidenceMatrix& conf) {
    std::ostringstream s;
    s << "node";
    for (const auto& n : conf.names) s << "," << n;
    s << "\n";
    for (size_t i = 0; i < conf.names.size(); ++i) {
        s << conf.names[i];
        for (size_t j = 0; j < conf.names.size(); ++j)
            s << "," << causal::format_double(conf.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        s << "\n";
    }
    return s.str();
}

std::string edge_listing(const causal::ConfidenceMatrix& conf) {
    struct Row {
        double c;
        std::string from, to;
    };
    std::vector<Row> rows;
    for (size_t i = 0; i < conf.names.size(); ++i)
        for (size_t j = 0; j < conf.names.size(); ++j) {
            double c = conf.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (c > 0.0) rows.push_back({c, conf.names[i], conf.names[j]});
        }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.c != b.c) return a.c > b.c;
        if (a.from != b.from) return a.from < b.from;
        return a.to < b.to;
    });
    std::ostringstream s;
    for (const auto& r : rows)
        s << r.from << " -> " << r.to << "  " << causal::format_double(r.c) << "\n";
    return s.str();
}

// ---- shared estimation setup ----

struct Setup {
    causal::Dataset ds; // complete (censored where needed)
    causal::EstimandSpec spec;
    causal::CausalGraph graph; // working graph, censor node included when configured
    bool graph_discovered = false;
    std::vector<std::string> censored; // Q_ columns created here
    causal::RoleReport roles;
    bool identifiable = true;
    std::optional<causal::PlausibleSubgraph> fallback; // set when not identifiable as given
    std::vector<causal::BackdoorPath> paths;
};

bool is_censor_column(const Setup& s, const std::string& name) {
    return std::find(s.censored.begin(), s.censored.end(), name) != s.censored.end();
}

Setup prepare(const Context& ctx, bool need_estimand) {
    Setup s;
    s.ds = load_data(ctx.cfg);

    if (ctx.cfg.treatment.empty()) throw CliError(2, "config key 'estimand.treatment' is required");
    if (ctx.cfg.outcome.empty()) throw CliError(2, "config key 'estimand.outcome' is required");
    if (need_estimand && ctx.cfg.contrasts.empty())
        throw CliError(2, "config key 'estimand.contrasts' is required, e.g. contrasts = 1-0");

    std::vector<std::string> original = s.ds.names;
    try {
        for (const auto& col : original)
            if (s.ds.missing_count(col) > 0) {
                s.ds = causal::make_censoring(s.ds, col);
                s.censored.push_back("Q_" + col);
            }
    } catch (const std::exception& e) {
        throw CliError(3, e.what());
    }

    if (!ctx.cfg.graph.empty()) {
        try {
            s.graph = causal::load_graph(ctx.cfg.graph);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
        auto cyc = causal::is_acyclic(s.graph);
        if (!cyc.acyclic) {
            std::string w;
            for (const auto& n : cyc.cycle) w += (w.empty() ? "" : " -> ") + n;
            throw CliError(2, "graph has a directed cycle: " + w);
        }
    } else {
        s.graph = run_discovery(ctx, s.ds, original).graph;
        s.graph_discovered = true;
        auto cyc = causal::is_acyclic(s.graph);
        if (!cyc.acyclic) throw CliError(5, "discovered graph is cyclic; raise discovery.threshold");
    }

    if (!s.graph.has_node(ctx.cfg.treatment))
        throw CliError(2, "treatment '" + ctx.cfg.treatment + "' is not a graph node");
    if (!s.graph.has_node(ctx.cfg.outcome))
        throw CliError(2, "outcome '" + ctx.cfg.outcome + "' is not a graph node");

    std::string qcol = "Q_" + ctx.cfg.outcome;
    if (is_censor_column(s, qcol) && ctx.cfg.censor_graph_parents == "same") {
        causal::CausalGraph g2 = s.graph;
        g2.add_node(qcol);
        for (const auto& p : s.graph.parents(ctx.cfg.outcome)) g2.add_directed(p, qcol);
        s.graph = g2;
    } else if (is_censor_column(s, qcol)) {
        s.graph.add_node(qcol);
    }

    s.spec.treatment = ctx.cfg.treatment;
    s.spec.outcome = ctx.cfg.outcome;
    s.spec.contrasts = ctx.cfg.contrasts.empty()
                           ? std::vector<std::pair<double, double>>{{1.0, 0.0}}
                           : ctx.cfg.contrasts;

    try {
        s.paths = causal::backdoor_paths(s.graph, s.spec.treatment, s.spec.outcome);
        s.roles = causal::classify_variables(s.graph, s.spec.treatment, s.spec.outcome);
    } catch (const std::exception& e) {
        throw CliError(5, e.what());
    }

    if (ctx.cfg.adjustment) {
        s.spec.adjustment = *ctx.cfg.adjustment;
        s.spec.provenance = "user";
        for (const auto& c : s.spec.adjustment) {
            if (!s.ds.has_column(c)) throw CliError(2, "adjustment variable '" + c + "' is not a data column");
            if (!s.graph.has_node(c))
                throw CliError(2, "adjustment variable '" + c + "' is not a graph node");
            if (is_censor_column(s, c)) throw CliError(2, "censoring column '" + c + "' cannot be adjusted for");
        }
    } else {
        s.spec.provenance = "graph";
        if (s.roles.identifiable) {
            s.spec.adjustment = s.roles.chosen_adjustment;
        } else {
            s.identifiable = false;
            auto pa = s.graph.parents(s.spec.treatment);
            if (std::find(pa.begin(), pa.end(), s.spec.outcome) != pa.end())
                throw CliError(4, "effect of '" + s.spec.treatment + "' on '" + s.spec.outcome +
                                      "' is not identifiable: '" + s.spec.outcome +
                                      "' is a direct cause of '" + s.spec.treatment + "'");
            try {
                s.fallback = causal::most_plausible_backdoor_subgraph(s.graph, s.spec.treatment, s.spec.outcome);
            } catch (const std::exception& e) {
                throw CliError(5, e.what());
            }
            s.spec.adjustment = s.fallback->adjustment;
        }
    }

    if (ctx.cfg.precision) {
        s.spec.precision = *ctx.cfg.precision;
        for (const auto& r : s.spec.precision) {
            if (!s.ds.has_column(r)) throw CliError(2, "precision variable '" + r + "' is not a data column");
            if (!s.graph.has_node(r))
                throw CliError(2, "precision variable '" + r + "' is not a graph node");
            if (is_censor_column(s, r))
                throw CliError(2, "censoring column '" + r + "' cannot be a precision variable");
        }
    } else {
        std::set<std::string> adj(s.spec.adjustment.begin(), s.spec.adjustment.end());
        for (const auto& n : s.graph.nodes()) {
            if (is_censor_column(s, n) || adj.count(n)) continue;
            auto it = s.roles.roles.find(n);
            if (it != s.roles.roles.end() && it->second == "precision" && s.ds.has_column(n))
                s.spec.precision.push_back(n);
        }
    }

    try {
        causal::validate_estimand(s.spec);
    } catch (const std::exception& e) {
        throw CliError(2, e.what());
    }
    return s;
}

std::string identify_report(const Setup& s) {
    std::ostringstream r;
    r << "backdoor paths (" << s.paths.size() << "):\n";
    for (const auto& p : s.paths) {
        r << "  " << causal::render_path(p);
        if (!p.colliders.empty()) r << "  [colliders: " << join_names(p.colliders) << "]";
        r << "\n";
    }
    r << "open backdoor paths given {}: " << s.roles.open_backdoor_paths.size() << "\n";
    r << "variable roles:\n";
    for (const auto& [node, role] : s.roles.roles) {
        if (is_censor_column(s, node)) continue;
        r << "  " << node << ": " << role << "\n";
    }
    r << "adjustment set (" << s.spec.provenance << "): " << join_names(s.spec.adjustment) << "\n";
    r << "precision set: " << join_names(s.spec.precision) << "\n";
    if (s.identifiable) {
        r << "removed bidirected edges: (none)\n";
        r << "plausibility ratio = 1\n";
    } else {
        r << "not identifiable as given; most plausible backdoor subgraph:\n";
        r << "removed bidirected edges:\n";
        for (const auto& [a, b] : s.fallback->removed) r << "  " << a << " <-> " << b << "\n";
        r << "plausibility ratio = " << causal::format_double(s.fallback->ratio) << "\n";
        r << "subgraph adjustment set: " << join_names(s.fallback->adjustment) << "\n";
    }
    r << "estimand:\n" << causal::render_estimand(s.spec) << "\n";
    r << "identifiable: " << (s.identifiable ? "yes" : "no") << "\n";
    return r.str();
}

// ---- commands ----

int cmd_discover(const Context& ctx) {
    causal::Dataset ds = load_data(ctx.cfg);
    std::vector<std::string> original = ds.names;
    try {
        for (const auto& col : original)
            if (ds.missing_count(col) > 0) ds = causal::make_censoring(ds, col);
    } catch (const std::exception& e) {
        throw CliError(3, e.what());
    }
    DiscoveryOutput d = run_discovery(ctx, ds, original);
    write_file(ctx.out / "confidences.csv", confidences_csv(d.conf));
    write_file(ctx.out / "discovered.graph", causal::serialize_graph(d.graph));
    write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
    ctx.say(edge_listing(d.conf));
    return 0;
}

int cmd_identify(const Context& ctx) {
    Setup s = prepare(ctx, false);
    std::string report = identify_report(s);
    write_file(ctx.out / "identify.txt", report);
    write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
    ctx.say(report);
    return s.identifiable ? 0 : 4;
}

ordered_json contrast_json(const causal::ContrastResult& c) {
    ordered_json j;
    j["t"] = c.t;
    j["t_ref"] = c.t_ref;
    j["psi_naive"] = c.psi_naive;
    j["psi_initial"] = c.psi_initial;
    j["psi_targeted"] = c.psi_targeted;
    j["epsilon"] = c.epsilon;
    j["fluctuation_converged"] = c.fluct_converged;
    j["se"] = c.se;
    j["ci_lo"] = c.ci_lo;
    j["ci_hi"] = c.ci_hi;
    j["p_value"] = c.p_value;
    j["if_mean"] = c.if_mean;
    if (c.rescaled) {
        j["psi_original_scale"] = c.psi_original;
        j["ci_lo_original_scale"] = c.ci_lo_original;
        j["ci_hi_original_scale"] = c.ci_hi_original;
    }
    return j;
}

std::string estimate_text(const Setup& s, const causal::TargetedResult& res) {
    std::ostringstream r;
    r << "estimand:\n" << causal::render_estimand(s.spec) << "\n";
    r << "adjustment set (" << s.spec.provenance << "): " << join_names(res.estimand.adjustment) << "\n";
    r << "precision set: " << join_names(res.estimand.precision) << "\n";
    if (!res.censor_column.empty()) r << "censoring column: " << res.censor_column << "\n";
    for (const auto& c : res.contrasts) {
        std::string label = causal::format_double(c.t) + "-" + causal::format_double(c.t_ref);
        r << "contrast " << label << ":\n";
        r << "  psi_naive = " << causal::format_double(c.psi_naive) << "\n";
        r << "  psi_initial = " << causal::format_double(c.psi_initial) << "\n";
        r << "  psi_targeted = " << causal::format_double(c.psi_targeted) << "\n";
        r << "  epsilon = " << causal::format_double(c.epsilon) << "\n";
        r << "  se = " << causal::format_double(c.se) << "\n";
        r << "  ci95 = [" << causal::format_double(c.ci_lo) << ", " << causal::format_double(c.ci_hi)
          << "]\n";
        r << "  p_value = " << causal::format_double(c.p_value) << "\n";
        if (c.rescaled) {
            r << "  original scale: psi = " << causal::format_double(c.psi_original) << ", ci95 = ["
              << causal::format_double(c.ci_lo_original) << ", " << causal::format_double(c.ci_hi_original)
              << "]\n";
        }
    }
    r << "diagnostics:\n";
    r << "  propensity raw range = [" << causal::format_double(res.propensity_raw_min) << ", "
      << causal::format_double(res.propensity_raw_max) << "]\n";
    r << "  propensity entries clipped = " << res.propensity_clipped << "\n";
    if (res.outcome_weights.size() > 0) {
        r << "  outcome learner weights:";
        for (Eigen::Index i = 0; i < res.outcome_weights.size(); ++i)
            r << " " << res.learner_names[static_cast<size_t>(i)] << "="
              << causal::format_double(res.outcome_weights[i]);
        r << "\n";
    }
    if (res.propensity_weights.size() > 0) {
        r << "  propensity learner weights:";
        for (Eigen::Index i = 0; i < res.propensity_weights.size(); ++i)
            r << " " << res.learner_names[static_cast<size_t>(i)] << "="
              << causal::format_double(res.propensity_weights[i]);
        r << "\n";
    }
    for (const auto& n : res.notes) r << "  note: " << n << "\n";
    return r.str();
}

ordered_json estimate_json(const Setup& s, const causal::TargetedResult& res) {
    ordered_json j;
    j["estimand"]["treatment"] = res.estimand.treatment;
    j["estimand"]["outcome"] = res.estimand.outcome;
    j["estimand"]["adjustment"] = res.estimand.adjustment;
    j["estimand"]["precision"] = res.estimand.precision;
    j["estimand"]["provenance"] = res.estimand.provenance;
    j["estimand"]["rendered"] = causal::render_estimand(s.spec);
    j["contrasts"] = ordered_json::array();
    for (const auto& c : res.contrasts) j["contrasts"].push_back(contrast_json(c));
    j["diagnostics"]["propensity_raw_min"] = res.propensity_raw_min;
    j["diagnostics"]["propensity_raw_max"] = res.propensity_raw_max;
    j["diagnostics"]["propensity_clipped"] = res.propensity_clipped;
    j["diagnostics"]["outcome_rescaled"] = res.outcome_rescaled;
    if (res.outcome_rescaled) {
        j["diagnostics"]["outcome_lo"] = res.outcome_bounds.lo;
        j["diagnostics"]["outcome_hi"] = res.outcome_bounds.hi;
    }
    if (!res.censor_column.empty()) j["diagnostics"]["censor_column"] = res.censor_column;
    j["diagnostics"]["notes"] = res.notes;
    if (res.outcome_weights.size() > 0) {
        ordered_json w;
        for (Eigen::Index i = 0; i < res.outcome_weights.size(); ++i)
            w[res.learner_names[static_cast<size_t>(i)]] = res.outcome_weights[i];
        j["diagnostics"]["outcome_weights"] = w;
    }
    return j;
}

int cmd_estimate(const Context& ctx) {
    Setup s = prepare(ctx, true);
    if (!s.identifiable && s.spec.provenance == "graph") {
        std::string report = identify_report(s);
        write_file(ctx.out / "identify.txt", report);
        write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
        ctx.say(report);
        std::cerr << "estimand is not identifiable from the supplied graph; "
                     "see removed-edge report, or set estimand.adjustment explicitly\n";
        return 4;
    }
    causal::TargetedResult res;
    try {
        res = causal::tmle_estimate(s.ds, s.spec, make_sl_spec(ctx.cfg));
    } catch (const std::exception& e) {
        throw CliError(5, e.what());
    }
    std::string text = estimate_text(s, res);
    write_file(ctx.out / "estimate.txt", text);
    write_file(ctx.out / "estimate.json", estimate_json(s, res).dump(2) + "\n");
    write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
    ctx.say(text);
    return 0;
}

int cmd_sensitivity(const Context& ctx) {
    Setup s = prepare(ctx, true);
    if (!s.identifiable && s.spec.provenance == "graph") {
        std::string report = identify_report(s);
        write_file(ctx.out / "identify.txt", report);
        write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
        ctx.say(report);
        std::cerr << "estimand is not identifiable from the supplied graph\n";
        return 4;
    }
    causal::SensitivityOptions opt;
    opt.multipliers = ctx.cfg.multipliers;
    opt.drop_all = ctx.cfg.sensitivity_drop_all;
    std::vector<causal::SensitivityCurve> curves;
    try {
        curves = causal::sensitivity_analysis(s.ds, s.spec, make_sl_spec(ctx.cfg), opt);
    } catch (const std::exception& e) {
        throw CliError(5, e.what());
    }
    std::ostringstream csv, text;
    csv << "contrast,multiplier,lower,upper,ci_lo,ci_hi\n";
    for (const auto& c : curves) {
        std::string label = causal::format_double(c.t) + "-" + causal::format_double(c.t_ref);
        for (const auto& row : c.rows)
            csv << label << "," << causal::format_double(row.multiplier) << ","
                << causal::format_double(row.lower) << "," << causal::format_double(row.upper) << ","
                << causal::format_double(row.ci_lo) << "," << causal::format_double(row.ci_hi) << "\n";
        text << "contrast " << label << ":\n";
        text << "  psi_adjusted = " << causal::format_double(c.psi) << " (se "
             << causal::format_double(c.se) << ")\n";
        text << "  psi_unadjusted = " << causal::format_double(c.psi_unadjusted) << "\n";
        text << "  delta_unit = " << causal::format_double(c.delta_unit) << "\n";
        if (c.crossing)
            text << "  crossing multiplier = " << causal::format_double(*c.crossing) << "\n";
        else
            text << "  crossing multiplier = none\n";
    }
    write_file(ctx.out / "sensitivity.csv", csv.str());
    write_file(ctx.out / "sensitivity.txt", text.str());
    write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
    ctx.say(text.str());
    return 0;
}

int cmd_simulate(const Context& ctx, const std::string& scm_flag, long n_rows) {
    std::string scm_path = scm_flag.empty() ? ctx.cfg.scm : scm_flag;
    if (scm_path.empty()) throw CliError(2, "simulate needs --scm PATH or config key 'scm'");
    if (n_rows < 1) throw CliError(2, "simulate needs a positive --n");
    std::string scm_text = read_file(scm_path, 3, "scm");
    causal::ScmSpec scm;
    try {
        scm = causal::parse_scm(scm_text);
    } catch (const std::exception& e) {
        throw CliError(3, e.what());
    }
    causal::Dataset ds;
    try {
        ds = causal::sample_scm(scm, n_rows, ctx.cfg.seed);
    } catch (const std::exception& e) {
        throw CliError(5, e.what());
    }
    write_file(ctx.out / "simulated.csv", causal::write_csv(ds));
    write_run_log(ctx, causal::hash_text(scm_text + "\nn=" + std::to_string(n_rows)));
    ctx.say("wrote " + (ctx.out / "simulated.csv").string() + " (" + std::to_string(ds.n_rows()) +
            " rows, " + std::to_string(ds.n_cols()) + " columns)\n");
    return 0;
}

int cmd_benchmark(const Context& ctx) {
    if (ctx.cfg.scm.empty()) throw CliError(2, "config key 'scm' is required for benchmark");
    std::string scm_text = read_file(ctx.cfg.scm, 3, "scm");
    causal::ScmSpec scm;
    try {
        scm = causal::parse_scm(scm_text);
    } catch (const std::exception& e) {
        throw CliError(3, e.what());
    }
    causal::BenchmarkOptions opt;
    for (long n : ctx.cfg.benchmark_sizes) opt.sample_sizes.push_back(n);
    opt.reps = ctx.cfg.benchmark_reps;
    opt.tests = ctx.cfg.benchmark_tests;
    opt.alpha = ctx.cfg.discovery_alpha;
    opt.seed = ctx.cfg.seed;
    opt.max_cond_size = ctx.cfg.discovery_max_cond_size;
    opt.knn.k = ctx.cfg.discovery_knn_k;
    opt.knn.n_perm = ctx.cfg.discovery_knn_permutations;
    std::vector<causal::BenchmarkRow> rows;
    try {
        rows = causal::benchmark_discovery(scm, opt);
    } catch (const std::exception& e) {
        throw CliError(5, e.what());
    }
    std::ostringstream csv;
    csv << "test,N,rep,shd,runtime_s\n";
    for (const auto& r : rows)
        csv << r.test << "," << r.n << "," << r.rep << "," << r.shd << ","
            << causal::format_double(r.runtime_s) << "\n";
    write_file(ctx.out / "benchmark.csv", csv.str());
    write_run_log(ctx, causal::hash_text(ctx.cfg.raw));
    ctx.say(csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"plausibility-weighted causal discovery, identification and targeted estimation"};
    app.require_subcommand(1);

    std::string config_path, out_override, scm_flag;
    std::uint64_t seed_value = 0;
    bool quiet = false;
    long n_rows = 1000;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* c = cmd->add_option("--config", config_path, "pipeline config file");
        if (config_required) c->required();
        cmd->add_option("--seed", seed_value, "override the config seed");
        cmd->add_option("--out", out_override, "override the output directory");
        cmd->add_flag("--quiet", quiet, "suppress stdout reporting");
    };

    CLI::App* discover = app.add_subcommand("discover", "bootstrap PC discovery to a weighted graph");
    add_common(discover, true);
    CLI::App* identify = app.add_subcommand("identify", "backdoor analysis and variable roles");
    add_common(identify, true);
    CLI::App* estimate = app.add_subcommand("estimate", "targeted effect estimation");
    add_common(estimate, true);
    CLI::App* sensitivity = app.add_subcommand("sensitivity", "unobserved-confounding sensitivity curves");
    add_common(sensitivity, true);
    CLI::App* simulate = app.add_subcommand("simulate", "sample a dataset from an SCM file");
    add_common(simulate, false);
    simulate->add_option("--scm", scm_flag, "SCM file to sample from");
    simulate->add_option("--n", n_rows, "number of rows");
    CLI::App* benchmark = app.add_subcommand("benchmark", "discovery SHD/runtime table");
    add_common(benchmark, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::optional<std::uint64_t> seed_override;
    for (CLI::App* cmd : {discover, identify, estimate, sensitivity, simulate, benchmark})
        if (cmd->parsed() && cmd->count("--seed") > 0) seed_override = seed_value;

    try {
        if (discover->parsed())
            return cmd_discover(make_context("discover", config_path, seed_override, out_override, quiet));
        if (identify->parsed())
            return cmd_identify(make_context("identify", config_path, seed_override, out_override, quiet));
        if (estimate->parsed())
            return cmd_estimate(make_context("estimate", config_path, seed_override, out_override, quiet));
        if (sensitivity->parsed())
            return cmd_sensitivity(
                make_context("sensitivity", config_path, seed_override, out_override, quiet));
        if (simulate->parsed())
            return cmd_simulate(make_context("simulate", config_path, seed_override, out_override, quiet),
                                scm_flag, n_rows);
        if (benchmark->parsed())
            return cmd_benchmark(make_context("benchmark", config_path, seed_override, out_override, quiet));
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 2;
}
