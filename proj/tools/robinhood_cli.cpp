// Command-line front end: sampling, conversion, exact certificates, and the
// Monte Carlo statistics, all reproducible from an explicit seed. Exit codes:
// 0 all verdicts pass, 1 some verdict failed, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "robinhood/chain.hpp"
#include "robinhood/coupling.hpp"
#include "robinhood/exact.hpp"
#include "robinhood/numeric.hpp"
#include "robinhood/parallel.hpp"
#include "robinhood/pruning.hpp"
#include "robinhood/rational.hpp"
#include "robinhood/rng.hpp"
#include "robinhood/stats.hpp"
#include "robinhood/tree.hpp"

using json = nlohmann::ordered_json;
using namespace robinhood;

namespace {

struct Output {
    std::string path;    // empty = stdout
    std::string format;  // json | csv | text

    void write(const std::string& content) const {
        if (path.empty()) {
            std::cout << content;
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file: " + path);
        out << content;
    }
};

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

json report_json(const StatReport& r) {
    json j;
    j["estimate"] = r.estimate;
    j["std_error"] = r.std_error;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    if (r.reference) j["reference"] = *r.reference;
    if (r.tolerance) j["tolerance"] = *r.tolerance;
    if (r.pass) j["pass"] = *r.pass;
    return j;
}

// One CSV row in the shared sweep schema.
std::string csv_row(int n, int m, double lambda, double estimate, double stderr_v,
                    const std::string& reference, const std::string& verdict) {
    std::ostringstream os;
    os << n << ',' << m << ',' << fmt_double(lambda) << ',' << fmt_double(estimate) << ','
       << fmt_double(stderr_v) << ',' << reference << ',' << verdict << '\n';
    return os.str();
}

constexpr const char* kCsvHeader = "n,m,lambda_exact,estimate,stderr,reference,verdict\n";

void flatten(const json& j, const std::string& prefix, std::ostream& os) {
    for (const auto& [key, value] : j.items()) {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            flatten(value, name, os);
        } else if (value.is_array()) {
            int idx = 0;
            for (const auto& item : value) {
                const std::string iname = name + "[" + std::to_string(idx++) + "]";
                if (item.is_object())
                    flatten(item, iname, os);
                else
                    os << iname << ": " << item.dump() << '\n';
            }
        } else {
            os << name << ": " << value.dump() << '\n';
        }
    }
}

std::string render(const json& j, const Output& out, const std::string& csv) {
    if (out.format == "json") return j.dump(2) + "\n";
    if (out.format == "csv") return csv.empty() ? std::string("csv output not available\n") : kCsvHeader + csv;
    std::ostringstream os;
    flatten(j, "", os);
    return os.str();
}

std::istream* open_input(const std::string& path, std::ifstream& file) {
    if (path.empty() || path == "-") return &std::cin;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open input file: " + path);
    return &file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robin-Hood pruning toolkit: decorated trees, coalescent chains, exact certificates, Monte Carlo verification"};
    app.require_subcommand(1);

    Output out;
    app.add_option("--out", out.path, "output file (default stdout)");
    app.add_option("--format", out.format, "output format: json|csv|text")
        ->default_val("json")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: ROBINHOOD_THREADS or hardware)");

    bool any_fail = false;

    // ---- grow ----------------------------------------------------------
    auto* grow = app.add_subcommand("grow", "grow decorated trees by the random pruning");
    int grow_n = 0;
    std::uint64_t grow_seed = 0, grow_trials = 1;
    bool grow_trace = false;
    grow->add_option("--n", grow_n, "target size")->required()->check(CLI::PositiveNumber);
    grow->add_option("--seed", grow_seed, "master seed")->required();
    grow->add_option("--trials", grow_trials, "number of independent trees")->default_val(1);
    grow->add_flag("--trace", grow_trace, "emit the full growth history instead of the final tree");
    grow->callback([&] {
        std::ostringstream os;
        for (std::uint64_t t = 0; t < grow_trials; ++t) {
            Rng rng = Rng::stream(grow_seed, t);
            if (grow_trace) {
                os << format_growth_trace(grow_process(grow_n, rng));
                if (t + 1 < grow_trials) os << '\n';
            } else {
                os << format_decorated(grow_final(grow_n, rng)) << '\n';
            }
        }
        out.write(os.str());
    });

    // ---- sample-kingman --------------------------------------------------
    auto* kingman = app.add_subcommand("sample-kingman", "sample coalescent merge traces");
    int king_n = 0;
    std::uint64_t king_seed = 0, king_trials = 1;
    kingman->add_option("--n", king_n, "element count")->required()->check(CLI::PositiveNumber);
    kingman->add_option("--seed", king_seed, "master seed")->required();
    kingman->add_option("--trials", king_trials, "number of traces")->default_val(1);
    kingman->callback([&] {
        std::ostringstream os;
        for (std::uint64_t t = 0; t < king_trials; ++t) {
            Rng rng = Rng::stream(king_seed, t);
            os << format_trace(sample_kingman(king_n, rng));
        }
        out.write(os.str());
    });

    // ---- convert ---------------------------------------------------------
    auto* convert = app.add_subcommand("convert", "convert between tree lines and chain traces");
    std::string conv_to, conv_in;
    convert->add_option("--to", conv_to, "target form: tree|chain")
        ->required()
        ->check(CLI::IsMember({"tree", "chain"}));
    convert->add_option("--in", conv_in, "input file (default stdin)");
    convert->callback([&] {
        std::ifstream file;
        std::istream& in = *open_input(conv_in, file);
        std::ostringstream os;
        if (conv_to == "chain") {
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                os << format_trace(decorated_to_chain(parse_decorated(line)));
            }
        } else {
            while (in.good()) {
                in >> std::ws;
                if (in.peek() == EOF) break;
                os << format_decorated(chain_to_decorated(parse_trace(in))) << '\n';
            }
        }
        out.write(os.str());
    });

    // ---- enumerate ---------------------------------------------------------
    auto* enum_cmd = app.add_subcommand("enumerate", "enumerate all decorated trees of size n");
    int enum_n = 0, enum_bound = 6;
    bool count_only = false;
    enum_cmd->add_option("--n", enum_n, "size")->required()->check(CLI::PositiveNumber);
    enum_cmd->add_option("--bound", enum_bound, "enumeration size guard")->default_val(6);
    enum_cmd->add_flag("--count-only", count_only, "print only the count");
    enum_cmd->callback([&] {
        std::ostringstream os;
        std::uint64_t count = 0;
        enumerate_decorated(enum_n, [&](const DecoratedTree& dt) {
            ++count;
            if (!count_only) os << format_decorated(dt) << '\n';
        }, enum_bound);
        if (count_only) os << count << '\n';
        out.write(os.str());
    });

    // ---- verify-uniform ----------------------------------------------------
    auto* verify = app.add_subcommand("verify-uniform", "exact one-step uniformity certificate");
    int verify_n = 0, verify_bound = 5;
    verify->add_option("--n", verify_n, "target size")->required()->check(CLI::Range(2, 6));
    verify->add_option("--bound", verify_bound, "verification size guard")->default_val(5);
    verify->callback([&] {
        const auto cert = verify_uniform_preservation(verify_n, verify_bound);
        json j;
        j["config"] = {{"subcommand", "verify-uniform"}, {"n", verify_n}};
        j["n"] = cert.n;
        j["cardinality"] = cert.cardinality;
        j["uniform_mass"] = rational_str(cert.uniform_mass);
        j["max_abs_deviation"] = rational_str(cert.max_abs_deviation);
        j["pass"] = cert.pass;
        const std::string csv = csv_row(cert.n, 0, 0.0, to_double(cert.uniform_mass), 0.0,
                                        rational_str(cert.uniform_mass), cert.pass ? "pass" : "fail");
        out.write(render(j, out, csv));
        if (!cert.pass) any_fail = true;
    });

    // ---- characterize --------------------------------------------------------
    auto* charac = app.add_subcommand("characterize", "exact uniform-law characterization checks");
    int charac_n = 0;
    charac->add_option("--n", charac_n, "size")->required()->check(CLI::Range(1, 5));
    charac->callback([&] {
        const auto rep = characterization_check(charac_n);
        json j;
        j["config"] = {{"subcommand", "characterize"}, {"n", charac_n}};
        j["stamp_history_uniform"] = rep.sigma_uniform;
        j["parents_conditionally_independent"] = rep.parents_conditionally_independent;
        j["joint_parent_stamp_law"] = rep.joint_parent_stamp_law;
        j["pass"] = rep.pass();
        out.write(render(j, out, csv_row(charac_n, 0, 0.0, rep.pass() ? 1 : 0, 0.0, "1",
                                         rep.pass() ? "pass" : "fail")));
        if (!rep.pass()) any_fail = true;
    });

    // ---- degree-tail -----------------------------------------------------------
    auto* dtail = app.add_subcommand("degree-tail", "exact degree tail probabilities");
    int dt_n = 0, dt_m = 0, dt_i = 0;
    bool dt_exact = false;
    dtail->add_option("--n", dt_n, "tree size")->required()->check(CLI::PositiveNumber);
    dtail->add_option("--m", dt_m, "degree threshold")->required()->check(CLI::NonNegativeNumber);
    dtail->add_option("--i", dt_i, "vertex (recursive-tree tail); omit for the exchangeable tail");
    dtail->add_flag("--exact", dt_exact, "print the exact rational value");
    dtail->callback([&] {
        json j;
        j["config"] = {{"subcommand", "degree-tail"}, {"n", dt_n}, {"m", dt_m}, {"i", dt_i}};
        double value = 0;
        std::string exact;
        if (dt_i > 0) {
            value = degree_tail_rn<double>(dt_n, dt_i, dt_m);
            if (dt_exact) exact = rational_str(degree_tail_rn<Rational>(dt_n, dt_i, dt_m));
            j["kind"] = "recursive_tree_vertex";
        } else {
            value = degree_tail_tn<double>(dt_n, dt_m);
            if (dt_exact) exact = rational_str(degree_tail_tn<Rational>(dt_n, dt_m));
            j["kind"] = "exchangeable_vertex";
        }
        j["value"] = value;
        if (dt_exact) j["value_exact"] = exact;
        out.write(render(j, out, csv_row(dt_n, dt_m, 0.0, value, 0.0, exact, "")));
    });

    // ---- lambda ---------------------------------------------------------------
    auto* lam_cmd = app.add_subcommand("lambda", "exact expected count of high-degree vertices");
    int lam_n = 0, lam_m = 0;
    bool lam_exact_flag = false;
    lam_cmd->add_option("--n", lam_n, "tree size")->required()->check(CLI::PositiveNumber);
    lam_cmd->add_option("--m", lam_m, "degree threshold")->required()->check(CLI::NonNegativeNumber);
    lam_cmd->add_flag("--exact", lam_exact_flag, "include exact rational values");
    lam_cmd->callback([&] {
        const auto lam = lambda_exact<double>(lam_n, lam_m);
        json j;
        j["config"] = {{"subcommand", "lambda"}, {"n", lam_n}, {"m", lam_m}};
        j["lambda"] = lam.lambda;
        j["envelope"] = lam.envelope;
        j["ratio"] = lam.ratio;
        if (lam_exact_flag) {
            const auto lr = lambda_exact<Rational>(lam_n, lam_m);
            j["lambda_exact"] = rational_str(lr.lambda);
            j["envelope_exact"] = rational_str(lr.envelope);
        }
        const bool ok = lam.lambda <= lam.envelope * (1 + 1e-12);
        j["within_envelope"] = ok;
        out.write(render(j, out, csv_row(lam_n, lam_m, lam.lambda, lam.lambda, 0.0,
                                         fmt_double(lam.envelope), ok ? "pass" : "fail")));
        if (!ok) any_fail = true;
    });

    // ---- coupling ---------------------------------------------------------------
    auto* coup = app.add_subcommand("coupling", "coupled-pruning violation estimates");
    int coup_n = 0, coup_m = 0;
    std::uint64_t coup_trials = 100000, coup_seed = 0;
    coup->add_option("--n", coup_n, "tree size")->required()->check(CLI::PositiveNumber);
    coup->add_option("--m", coup_m, "degree threshold")->required()->check(CLI::NonNegativeNumber);
    coup->add_option("--trials", coup_trials, "number of coupled draws")->default_val(100000);
    coup->add_option("--seed", coup_seed, "master seed")->required();
    coup->callback([&] {
        const auto rep = estimate_violation(coup_n, coup_m, coup_trials, coup_seed, threads);
        json j;
        j["config"] = {{"subcommand", "coupling"}, {"n", coup_n}, {"m", coup_m},
                       {"trials", coup_trials}, {"seed", coup_seed}};
        j["max_upcrossing_rate"] = rep.max_rate;
        j["max_upcrossing_rate_se"] = rep.max_rate_se;
        j["argmax_vertex"] = rep.argmax_vertex;
        j["mean_upcrossings_per_draw"] = rep.mean_upcrossings;
        j["envelope_n_pow_minus_1_minus_beta"] = rep.envelope;
        j["domination_violations"] = rep.domination_violations;
        j["containment_violations"] = rep.containment_violations;
        j["q_monotonicity_violations"] = rep.q_violations;
        j["pass"] = rep.sure_statements_hold();
        out.write(render(j, out, csv_row(coup_n, coup_m, 0.0, rep.max_rate, rep.max_rate_se,
                                         fmt_double(rep.envelope),
                                         rep.sure_statements_hold() ? "pass" : "fail")));
        if (!rep.sure_statements_hold()) any_fail = true;
    });

    // ---- dtv ---------------------------------------------------------------------
    auto* dtv = app.add_subcommand("dtv", "total-variation sweep of Z against Poisson");
    std::vector<int> dtv_ns;
    double dtv_c = 1.3;
    std::uint64_t dtv_trials = 100000, dtv_seed = 0;
    std::string dtv_sampler = "kingman";
    bool dtv_check_decay = false;
    dtv->add_option("--n", dtv_ns, "sizes (repeatable)")->required();
    dtv->add_option("--c", dtv_c, "threshold rate: m = ceil(c ln n)")->default_val(1.3);
    dtv->add_option("--trials", dtv_trials, "trials per size")->default_val(100000);
    dtv->add_option("--seed", dtv_seed, "master seed")->required();
    dtv->add_option("--sampler", dtv_sampler, "tree sampler: kingman|grow")
        ->default_val("kingman")
        ->check(CLI::IsMember({"kingman", "grow"}));
    dtv->add_flag("--check-decay", dtv_check_decay, "fail unless the estimate decreases over the sweep");
    dtv->callback([&] {
        const auto sampler = dtv_sampler == "grow" ? TreeSampler::kGrowth : TreeSampler::kCoalescent;
        const auto points = dtv_sweep(dtv_ns, dtv_c, dtv_trials, dtv_seed, threads, sampler);
        json j;
        j["config"] = {{"subcommand", "dtv"}, {"n", dtv_ns}, {"c", dtv_c},
                       {"trials", dtv_trials}, {"seed", dtv_seed}, {"sampler", dtv_sampler}};
        json rows = json::array();
        std::string csv;
        for (const auto& p : points) {
            rows.push_back({{"n", p.n}, {"m", p.m}, {"lambda_exact", p.lambda},
                            {"dtv", p.dtv}, {"boot_se", p.boot_se}, {"trials", p.trials}});
            csv += csv_row(p.n, p.m, p.lambda, p.dtv, p.boot_se, "", "");
        }
        j["points"] = rows;
        if (dtv_check_decay && points.size() >= 2) {
            const auto& a = points.front();
            const auto& b = points.back();
            const double slack = 2.0 * std::sqrt(a.boot_se * a.boot_se + b.boot_se * b.boot_se);
            const bool ok = b.dtv <= a.dtv + slack;
            j["decay_pass"] = ok;
            if (!ok) any_fail = true;
        }
        out.write(render(j, out, csv));
    });

    // ---- maxdeg ---------------------------------------------------------------------
    auto* maxdeg = app.add_subcommand("maxdeg", "lower tail of the maximum degree");
    int md_n = 0, md_i = 1;
    std::uint64_t md_trials = 100000, md_seed = 0;
    maxdeg->add_option("--n", md_n, "tree size")->required()->check(CLI::PositiveNumber);
    maxdeg->add_option("--i", md_i, "offset below floor(log2 n)")->default_val(1);
    maxdeg->add_option("--trials", md_trials, "trials")->default_val(100000);
    maxdeg->add_option("--seed", md_seed, "master seed")->required();
    maxdeg->callback([&] {
        const auto rep = max_degree_tail(md_n, md_i, md_trials, md_seed, threads);
        json j;
        j["config"] = {{"subcommand", "maxdeg"}, {"n", md_n}, {"i", md_i},
                       {"trials", md_trials}, {"seed", md_seed}};
        j["m_star"] = rep.m_star;
        j["lambda_exact"] = rep.lambda;
        j["report"] = report_json(rep.prob);
        j["reference_exact_lambda"] = rep.ref_exact;
        j["reference_double_exponential"] = rep.ref_gumbel;
        j["envelope_ratio"] = rep.envelope_ratio;
        j["references_consistent"] = rep.refs_consistent;
        const bool ok = rep.prob.pass.value_or(false);
        out.write(render(j, out, csv_row(md_n, rep.m_star, rep.lambda, rep.prob.estimate,
                                         rep.prob.std_error, fmt_double(rep.ref_exact),
                                         ok ? "pass" : "fail")));
        if (!ok) any_fail = true;
    });

    // ---- correlation -----------------------------------------------------------------
    auto* corr = app.add_subcommand("correlation", "pairwise degree-tail correlation excess");
    int corr_n = 0, corr_m = 0;
    std::uint64_t corr_trials = 100000, corr_seed = 0;
    corr->add_option("--n", corr_n, "tree size")->required()->check(CLI::PositiveNumber);
    corr->add_option("--m", corr_m, "degree threshold")->required()->check(CLI::NonNegativeNumber);
    corr->add_option("--trials", corr_trials, "trials")->default_val(100000);
    corr->add_option("--seed", corr_seed, "master seed")->required();
    corr->callback([&] {
        const auto rep = correlation_check(corr_n, corr_m, corr_trials, corr_seed, threads);
        json j;
        j["config"] = {{"subcommand", "correlation"}, {"n", corr_n}, {"m", corr_m},
                       {"trials", corr_trials}, {"seed", corr_seed}};
        j["excess"] = report_json(rep.excess);
        j["envelope"] = rep.envelope;
        j["exact_single_tail"] = rep.exact_tail;
        j["tail_v"] = report_json(rep.tail_v);
        j["tail_w"] = report_json(rep.tail_w);
        j["pass"] = rep.pass();
        out.write(render(j, out, csv_row(corr_n, corr_m, 0.0, rep.excess.estimate,
                                         rep.excess.std_error, fmt_double(rep.envelope),
                                         rep.pass() ? "pass" : "fail")));
        if (!rep.pass()) any_fail = true;
    });

    // ---- newvertex ---------------------------------------------------------------------
    auto* newv = app.add_subcommand("newvertex", "degree profile of the newly added vertex");
    int nv_n = 0;
    std::uint64_t nv_trials = 100000, nv_seed = 0;
    newv->add_option("--n", nv_n, "tree size")->required()->check(CLI::Range(2, 1 << 30));
    newv->add_option("--trials", nv_trials, "trials")->default_val(100000);
    newv->add_option("--seed", nv_seed, "master seed")->required();
    newv->callback([&] {
        const auto rep = new_vertex_profile(nv_n, nv_trials, nv_seed, threads);
        json j;
        j["config"] = {{"subcommand", "newvertex"}, {"n", nv_n}, {"trials", nv_trials},
                       {"seed", nv_seed}};
        j["mean_degree"] = report_json(rep.mean);
        j["leaf_probability"] = report_json(rep.leaf);
        j["law_chi_square"] = {{"stat", rep.law.stat}, {"df", rep.law.df},
                               {"p_value", rep.law.p_value}};
        const bool ok = rep.mean.pass.value_or(false) && rep.leaf.pass.value_or(false) &&
                        rep.law.p_value >= 1e-3;
        j["pass"] = ok;
        out.write(render(j, out, csv_row(nv_n, 0, 0.0, rep.mean.estimate, rep.mean.std_error,
                                         fmt_double(*rep.mean.reference), ok ? "pass" : "fail")));
        if (!ok) any_fail = true;
    });

    // ---- normality ---------------------------------------------------------------------
    auto* norm = app.add_subcommand("normality", "moment diagnostics of the high-degree count");
    int norm_n = 0, norm_m = -1;
    double norm_c = 0;
    std::uint64_t norm_trials = 100000, norm_seed = 0;
    norm->add_option("--n", norm_n, "tree size")->required()->check(CLI::PositiveNumber);
    norm->add_option("--m", norm_m, "degree threshold");
    norm->add_option("--c", norm_c, "threshold rate: m = ceil(c ln n) (alternative to --m)");
    norm->add_option("--trials", norm_trials, "trials")->default_val(100000);
    norm->add_option("--seed", norm_seed, "master seed")->required();
    norm->callback([&] {
        int m = norm_m;
        if (m < 0) {
            if (norm_c <= 0) throw CLI::ValidationError("normality", "provide --m or --c");
            m = static_cast<int>(std::ceil(norm_c * std::log(static_cast<double>(norm_n))));
        }
        const auto rep = normality_diagnostics(norm_n, m, norm_trials, norm_seed, threads);
        json j;
        j["config"] = {{"subcommand", "normality"}, {"n", norm_n}, {"m", m},
                       {"trials", norm_trials}, {"seed", norm_seed}};
        j["lambda_exact"] = rep.lambda;
        j["degenerate"] = rep.degenerate;
        j["skewness"] = report_json(rep.skewness);
        j["excess_kurtosis"] = report_json(rep.excess_kurtosis);
        j["poisson_skew_reference"] = rep.poisson_skew_reference;
        out.write(render(j, out, csv_row(norm_n, m, rep.lambda, rep.skewness.estimate,
                                         rep.skewness.std_error,
                                         fmt_double(rep.poisson_skew_reference), "")));
    });

    // ---- constants ---------------------------------------------------------------------
    auto* consts = app.add_subcommand("constants", "closed-form exponents of the tail analysis");
    double const_c = 1.5, const_cp = -1;
    consts->add_option("--c", const_c, "rate parameter in (0, 2]")->required();
    consts->add_option("--c-prime", const_cp, "secondary rate in (1, 2] (default: c)");
    consts->callback([&] {
        const double cp = const_cp > 0 ? const_cp : const_c;
        const auto b = bound_constants(const_c, cp);
        json j;
        j["config"] = {{"subcommand", "constants"}, {"c", const_c}, {"c_prime", cp}};
        j["alpha_sup"] = b.alpha_sup;
        j["beta"] = b.beta;
        j["gamma_sup"] = b.gamma_sup;
        j["epsilon"] = b.epsilon;
        std::string csv = csv_row(0, 0, 0.0, b.alpha_sup, 0.0, "alpha_sup", "");
        csv += csv_row(0, 0, 0.0, b.beta, 0.0, "beta", "");
        csv += csv_row(0, 0, 0.0, b.gamma_sup, 0.0, "gamma_sup", "");
        csv += csv_row(0, 0, 0.0, b.epsilon, 0.0, "epsilon", "");
        out.write(render(j, out, csv));
    });

    // Global options (--format, --out, --threads) may appear after the
    // subcommand name.
    for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return any_fail ? 1 : 0;
}
