// Command-line front end: instance I/O, estimation, oracles, decomposition
// reports, magnetization, generators and the experiment tables. Machine
// output is a single JSON document on stdout; --pretty renders the same
// report as aligned text.
//
// Exit codes: 0 success, 2 malformed input, 3 resource cap exceeded,
// 4 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dising/dising.hpp"

using json = nlohmann::ordered_json;
using namespace dising;

namespace {

struct CommonOpts {
    double epsilon = 0.5;
    double fail_prob = 0.125;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string mode = "exact";
    std::string mrf_mode = "constant";
    double lambda = -1.0;
    int max_width = 3;
    double cap_cells = 2e5;
    int cap_n = 30;
    bool pretty = false;
    bool with_exact = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--epsilon", o.epsilon, "target accuracy parameter in (0,1]");
    cmd->add_option("--fail-prob", o.fail_prob, "failure probability for sampled mode");
    cmd->add_option("--seed", o.seed, "RNG seed; all randomized paths are reproducible");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--mode", o.mode, "cut search backend: exact|sampled")
        ->check(CLI::IsMember({"exact", "sampled"}));
    cmd->add_option("--lambda", o.lambda, "solver accuracy (default epsilon/2)");
    cmd->add_option("--max-width", o.max_width, "resource cap on the decomposition width");
    cmd->add_option("--cap-cells", o.cap_cells, "resource cap on the grid cell count");
    cmd->add_option("--cap-n", o.cap_n, "size cap for exact oracles");
    cmd->add_flag("--pretty", o.pretty, "human-readable table instead of JSON");
}

CutSearchMode search_mode(const CommonOpts& o) {
    return o.mode == "exact" ? CutSearchMode::Exact : CutSearchMode::Sampled;
}

AnyInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open instance file " + path, 0);
    return parse_instance(in);
}

void flatten(const json& j, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else {
        out.emplace_back(prefix, j.dump());
    }
}

void emit(const json& j, bool pretty) {
    if (!pretty) {
        std::cout << j.dump() << "\n";
        return;
    }
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(j, "", rows);
    std::size_t width = 0;
    for (const auto& [k, v] : rows) width = std::max(width, k.size());
    for (const auto& [k, v] : rows)
        std::cout << k << std::string(width - k.size() + 2, ' ') << v << "\n";
}

json budget_json(const BudgetBreakdown& b) {
    return json{{"regularity", b.regularity},
                {"regularity_certified", b.regularity_certified},
                {"regularity_claimed", b.regularity_claimed},
                {"field", b.field},
                {"stirling", b.stirling},
                {"granulation", b.granulation},
                {"granulation_claimed", b.granulation_claimed},
                {"solver", b.solver},
                {"rounding", b.rounding},
                {"small_n", b.small_n},
                {"total", b.total()}};
}

json report_json(const EstimateReport& rep) {
    json runs = json::array();
    for (const auto& d : rep.run_details)
        runs.push_back(json{{"value", d.value},
                            {"width", d.width},
                            {"atoms", d.atoms},
                            {"gamma", d.gamma},
                            {"grid_cells", d.grid_cells},
                            {"feasible_cells", d.feasible_cells},
                            {"stopped_by_width_cap", d.stopped_by_width_cap}});
    return json{{"log_z_hat", rep.log_z_hat},
                {"budget", budget_json(rep.budget)},
                {"width", rep.width},
                {"atoms", rep.atoms},
                {"gamma", rep.gamma},
                {"lambda", rep.lambda},
                {"eps_prime", rep.eps_prime},
                {"delta_density", rep.delta_density},
                {"repetitions", rep.repetitions},
                {"seed", rep.seed},
                {"large_n_condition_met", rep.large_n_condition_met},
                {"runs", rep.runs},
                {"run_details", runs}};
}

int cmd_estimate(const CommonOpts& o, const std::string& path) {
    const AnyInstance any = load_instance(path);
    json out;
    out["command"] = "estimate";
    if (std::holds_alternative<IsingInstance>(any)) {
        const IsingInstance& inst = std::get<IsingInstance>(any);
        EstimatorOptions opts;
        opts.epsilon = o.epsilon;
        opts.fail_prob = o.fail_prob;
        opts.seed = o.seed;
        opts.mode = search_mode(o);
        opts.threads = o.threads;
        opts.lambda = o.lambda;
        opts.max_width = o.max_width;
        opts.cap_cells = o.cap_cells;
        const EstimateReport rep = estimate_log_z(inst, opts);
        out["n"] = inst.n;
        out.update(report_json(rep));
        if (o.with_exact && inst.n <= o.cap_n) {
            const double exact = exact_log_z(inst, o.cap_n).log_value;
            out["exact_log_z"] = exact;
            out["abs_diff"] = std::abs(rep.log_z_hat - exact);
            out["within_budget"] = std::abs(rep.log_z_hat - exact) <= rep.budget.total();
        }
    } else {
        const MrfInstance& inst = std::get<MrfInstance>(any);
        MrfEstimatorOptions opts;
        opts.epsilon = o.epsilon;
        opts.fail_prob = o.fail_prob;
        opts.seed = o.seed;
        opts.mode = search_mode(o);
        opts.reg_mode =
            o.mrf_mode == "linear" ? TensorRegMode::Linear : TensorRegMode::Constant;
        opts.threads = o.threads;
        opts.lambda = o.lambda;
        opts.max_width = std::min(o.max_width, 2);
        opts.cap_cells = o.cap_cells;
        const EstimateReport rep = estimate_log_z_mrf(inst, opts);
        out["n"] = inst.n;
        out["k"] = inst.k;
        out.update(report_json(rep));
        if (o.with_exact && inst.n <= std::min(o.cap_n, 22)) {
            const double exact = exact_log_z_mrf(inst, std::min(o.cap_n, 22)).log_value;
            out["exact_log_z"] = exact;
            out["abs_diff"] = std::abs(rep.log_z_hat - exact);
            out["within_budget"] = std::abs(rep.log_z_hat - exact) <= rep.budget.total();
        }
    }
    emit(out, o.pretty);
    return 0;
}

int cmd_exact(const CommonOpts& o, const std::string& path, double h_shift) {
    const AnyInstance any = load_instance(path);
    json out;
    out["command"] = "exact";
    if (std::holds_alternative<IsingInstance>(any)) {
        IsingInstance inst = std::get<IsingInstance>(any);
        if (h_shift != 0.0)
            for (auto& h : inst.h) h += h_shift;
        const ExactResult r = exact_log_z(inst, o.cap_n);
        out["n"] = inst.n;
        out["log_z"] = r.log_value;
        out["states_enumerated"] = r.states_enumerated;
    } else {
        const MrfInstance& inst = std::get<MrfInstance>(any);
        const ExactResult r = exact_log_z_mrf(inst, std::min(o.cap_n, 22));
        out["n"] = inst.n;
        out["k"] = inst.k;
        out["log_z"] = r.log_value;
        out["states_enumerated"] = r.states_enumerated;
    }
    emit(out, o.pretty);
    return 0;
}

int cmd_decompose(const CommonOpts& o, const std::string& path) {
    const AnyInstance any = load_instance(path);
    json out;
    out["command"] = "decompose";
    if (std::holds_alternative<IsingInstance>(any)) {
        const IsingInstance& inst = std::get<IsingInstance>(any);
        CutDecomposition dec =
            fk_decompose(inst, o.epsilon, o.fail_prob, search_mode(o), o.seed);
        if (inst.n <= 24)
            dec.certified_error = exact_inf_to_one_norm(residual_matrix(inst, dec));
        out["n"] = inst.n;
        out["eps"] = o.epsilon;
        out["width"] = dec.width();
        out["coefficient_length"] = dec.coefficient_length();
        out["claimed_error"] = dec.claimed_error;
        if (dec.certified_error) out["certified_error"] = *dec.certified_error;
        json cuts = json::array();
        for (std::size_t t = 0; t < dec.cuts.size(); ++t)
            cuts.push_back(json{{"coeff", dec.cuts[t].coeff},
                                {"rows", dec.cuts[t].rows.size()},
                                {"cols", dec.cuts[t].cols.size()},
                                {"cut_value", dec.step_values[t]},
                                {"potential_after", dec.step_potentials[t]}});
        out["cuts"] = cuts;
    } else {
        const MrfInstance& inst = std::get<MrfInstance>(any);
        TensorCutDecomposition dec = tensor_decompose(
            inst, o.epsilon, o.fail_prob, search_mode(o), o.seed,
            o.mrf_mode == "linear" ? TensorRegMode::Linear : TensorRegMode::Constant);
        if (inst.n <= 12)
            dec.certified_error = exact_tensor_inf_to_one_norm(residual_tensor(inst, dec));
        out["n"] = inst.n;
        out["k"] = inst.k;
        out["eps"] = o.epsilon;
        out["width"] = dec.width();
        out["coefficient_length"] = dec.coefficient_length();
        out["claimed_error"] = dec.claimed_error;
        if (dec.certified_error) out["certified_error"] = *dec.certified_error;
        json cuts = json::array();
        for (std::size_t t = 0; t < dec.cuts.size(); ++t) {
            json sizes = json::array();
            for (const auto& s : dec.cuts[t].axis_sets) sizes.push_back(s.size());
            cuts.push_back(json{{"coeff", dec.cuts[t].coeff},
                                {"axis_sizes", sizes},
                                {"cut_value", dec.step_values[t]},
                                {"potential_after", dec.step_potentials[t]}});
        }
        out["cuts"] = cuts;
    }
    emit(out, o.pretty);
    return 0;
}

int cmd_magnetize(const CommonOpts& o, const std::string& path, double h0) {
    const AnyInstance any = load_instance(path);
    if (!std::holds_alternative<IsingInstance>(any))
        throw parse_error("magnetize expects an ising instance", 1);
    const IsingInstance& inst = std::get<IsingInstance>(any);
    EstimatorOptions base;
    base.mode = search_mode(o);
    base.threads = o.threads;
    base.lambda = o.lambda;
    base.max_width = o.max_width;
    base.cap_cells = o.cap_cells;
    const MagnetizationEstimate est =
        estimate_magnetization(inst, h0, o.epsilon, o.fail_prob, o.seed, base);

    json out;
    out["command"] = "magnetize";
    out["n"] = inst.n;
    out["h0"] = h0;
    out["delta"] = est.delta_used;
    out["value"] = est.value;
    out["lower_slope"] = est.lower;
    out["upper_slope"] = est.upper;
    out["j_delta_max"] = est.j_delta_max;
    out["h_delta_max"] = est.h_delta_max;
    out["budget_at_minus"] = est.at_minus.budget.total();
    out["budget_at_mid"] = est.at_mid.budget.total();
    out["budget_at_plus"] = est.at_plus.budget.total();
    if (o.with_exact && inst.n <= std::min(o.cap_n, 24)) {
        json sweep = json::array();
        for (int t = 0; t <= 8; ++t) {
            const double hp = h0 - est.delta_used + 2.0 * est.delta_used * t / 8.0;
            sweep.push_back(json{{"h", hp}, {"magnetization", exact_magnetization(inst, hp)}});
        }
        out["exact_sweep"] = sweep;
    }
    emit(out, o.pretty);
    return 0;
}

struct GenOpts {
    int n = 10;
    double delta = 0.5;
    double beta = 1.0;
    double M = 3.0;
    double eps = 0.2;
    std::uint64_t seed = 0;
    std::string out_path;
};

int cmd_gen(const std::string& kind, const GenOpts& g, bool pretty) {
    auto write_to = [&](const IsingInstance& inst, const std::string& path) {
        if (path.empty()) {
            write_instance(std::cout, inst);
        } else {
            std::ofstream out(path);
            if (!out) throw parse_error("cannot write " + path, 0);
            write_instance(out, inst);
        }
    };
    if (kind == "random") {
        write_to(gen_random_dense(g.n, g.delta, g.seed), g.out_path);
    } else if (kind == "curie-weiss") {
        write_to(gen_curie_weiss(g.n, g.beta), g.out_path);
    } else {
        const auto [planted, uniform] = gen_tightness_pair(g.n, g.M, g.eps, g.delta, g.seed);
        const std::string prefix = g.out_path.empty() ? "tightness" : g.out_path;
        write_to(planted, prefix + "_planted.ising");
        write_to(uniform, prefix + "_uniform.ising");
        json out{{"command", "gen"},
                 {"written", {prefix + "_planted.ising", prefix + "_uniform.ising"}}};
        emit(out, pretty);
    }
    return 0;
}

int cmd_experiment_tightness(const CommonOpts& o, int n, double eps, double delta,
                             const std::string& m_list) {
    std::vector<double> ms;
    std::stringstream ss(m_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) ms.push_back(std::stod(tok));
    if (ms.empty()) throw parse_error("empty M list", 0);

    const double edges = n * (n - 1) / 2.0;
    json rows = json::array();
    for (double M : ms) {
        const auto [planted, uniform] = gen_tightness_pair(n, M, eps, delta, o.seed);
        const double lz = exact_log_z(planted, o.cap_n).log_value;
        const double lzu = exact_log_z(uniform, o.cap_n).log_value;
        rows.push_back(json{{"M", M},
                            {"log_z_planted", lz},
                            {"log_z_uniform", lzu},
                            {"gap", lz - lzu},
                            {"gap_over_M", (lz - lzu) / M},
                            {"half_eps_M_edges", 0.5 * eps * M * edges}});
    }
    json out{{"command", "experiment-tightness"},
             {"n", n},
             {"eps", eps},
             {"delta", delta},
             {"asymptotic_gap_over_M", 2.0 * eps * (1.0 - delta) * edges},
             {"rows", rows}};
    emit(out, o.pretty);
    return 0;
}

int cmd_experiment_budget_sweep(const CommonOpts& o, const std::string& path,
                                const std::string& eps_list) {
    std::vector<double> epss;
    std::stringstream ss(eps_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) epss.push_back(std::stod(tok));
    if (epss.empty()) throw parse_error("empty epsilon list", 0);

    const AnyInstance any = load_instance(path);
    if (!std::holds_alternative<IsingInstance>(any))
        throw parse_error("budget-sweep expects an ising instance", 1);
    const IsingInstance& inst = std::get<IsingInstance>(any);

    const bool have_exact = inst.n <= o.cap_n;
    const double exact = have_exact ? exact_log_z(inst, o.cap_n).log_value : 0.0;

    json rows = json::array();
    for (double eps : epss) {
        EstimatorOptions opts;
        opts.epsilon = eps;
        opts.fail_prob = o.fail_prob;
        opts.seed = o.seed;
        opts.mode = search_mode(o);
        opts.threads = o.threads;
        opts.max_width = o.max_width;
        opts.cap_cells = o.cap_cells;
        const EstimateReport rep = estimate_log_z(inst, opts);
        json row{{"eps", eps},
                 {"log_z_hat", rep.log_z_hat},
                 {"budget", budget_json(rep.budget)},
                 {"width", rep.width},
                 {"gamma", rep.gamma}};
        if (have_exact) {
            row["exact_log_z"] = exact;
            row["abs_diff"] = std::abs(rep.log_z_hat - exact);
            row["within_budget"] = std::abs(rep.log_z_hat - exact) <= rep.budget.total();
        }
        rows.push_back(row);
    }
    json out{{"command", "experiment-budget-sweep"}, {"n", inst.n}, {"rows", rows}};
    emit(out, o.pretty);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"additive log-partition estimation for dense binary models"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string path, m_list = "2,4,6,8", eps_list = "0.4,0.6,0.8";
    double h0 = 0.0, h_shift = 0.0;
    GenOpts g;
    int exp_n = 10;
    double exp_eps = 0.2, exp_delta = 0.2;

    CLI::App* est = app.add_subcommand("estimate", "estimate log Z with a certified budget");
    add_common(est, o);
    est->add_flag("--exact", o.with_exact, "also run the exact oracle and compare");
    est->add_option("--mrf-mode", o.mrf_mode, "tensor decomposition profile: constant|linear")
        ->check(CLI::IsMember({"constant", "linear"}));
    est->add_option("file", path, "instance file")->required();

    CLI::App* exa = app.add_subcommand("exact", "brute-force log Z");
    add_common(exa, o);
    exa->add_option("--h-shift", h_shift, "uniform field shift");
    exa->add_option("file", path, "instance file")->required();

    CLI::App* dec = app.add_subcommand("decompose", "cut decomposition report");
    add_common(dec, o);
    dec->add_option("--mrf-mode", o.mrf_mode, "tensor decomposition profile: constant|linear")
        ->check(CLI::IsMember({"constant", "linear"}));
    dec->add_option("file", path, "instance file")->required();

    CLI::App* mag = app.add_subcommand("magnetize", "magnetization bracket via log Z slopes");
    add_common(mag, o);
    mag->add_option("--h0", h0, "base uniform field shift");
    mag->add_flag("--exact", o.with_exact, "sweep the exact oracle over the window");
    mag->add_option("file", path, "instance file")->required();

    CLI::App* gen = app.add_subcommand("gen", "instance generators");
    gen->require_subcommand(1);
    for (const char* kind : {"random", "curie-weiss", "tightness"}) {
        CLI::App* sub = gen->add_subcommand(kind);
        sub->add_option("--n", g.n, "vertex count");
        sub->add_option("--delta", g.delta, "density parameter");
        sub->add_option("--beta", g.beta, "inverse temperature (curie-weiss)");
        sub->add_option("--M", g.M, "edge weight (tightness)");
        sub->add_option("--eps", g.eps, "heavy fraction parameter (tightness)");
        sub->add_option("--seed", g.seed, "RNG seed");
        sub->add_option("-o,--out", g.out_path, "output file (tightness: prefix)");
        sub->add_flag("--pretty", o.pretty, "human-readable output");
    }

    CLI::App* exp = app.add_subcommand("experiment", "experiment tables");
    exp->require_subcommand(1);
    CLI::App* tight = exp->add_subcommand("tightness", "exact gap growth of the planted pair");
    add_common(tight, o);
    tight->add_option("--n", exp_n, "vertex count");
    tight->add_option("--eps", exp_eps, "heavy fraction parameter");
    tight->add_option("--delta", exp_delta, "density parameter");
    tight->add_option("--M", m_list, "comma-separated M values");
    CLI::App* sweep = exp->add_subcommand("budget-sweep", "budget vs epsilon on one instance");
    add_common(sweep, o);
    sweep->add_option("--epsilons", eps_list, "comma-separated epsilon values");
    sweep->add_option("file", path, "instance file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (est->parsed()) return cmd_estimate(o, path);
        if (exa->parsed()) return cmd_exact(o, path, h_shift);
        if (dec->parsed()) return cmd_decompose(o, path);
        if (mag->parsed()) return cmd_magnetize(o, path, h0);
        if (gen->parsed()) {
            for (const auto* sub : gen->get_subcommands())
                return cmd_gen(sub->get_name(), g, o.pretty);
        }
        if (exp->parsed()) {
            if (tight->parsed()) return cmd_experiment_tightness(o, exp_n, exp_eps, exp_delta, m_list);
            if (sweep->parsed()) return cmd_experiment_budget_sweep(o, path, eps_list);
        }
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const resource_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const size_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const accuracy_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
