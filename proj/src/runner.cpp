#include "latgibbs/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "latgibbs/numerics.hpp"

namespace latgibbs {

namespace {

struct CsvRow {
    double epsilon = 0.0;
    double kappa = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    std::string method;
    int cutoff = 0;
    double tail_bound = 0.0;
    std::uint64_t seed = 0;
};

CsvRow row_from(const FreeEnergyEstimate& est) {
    CsvRow r;
    r.epsilon = est.meta.epsilon;
    r.kappa = est.meta.kappa;
    r.value = est.value;
    r.stderr_ = est.stderr_;
    r.method = est.method;
    r.cutoff = est.meta.cutoff;
    r.tail_bound = est.meta.tail_bound;
    r.seed = est.meta.seed;
    return r;
}

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epsilon,kappa,value,stderr,method,cutoff,tail_bound,seed\n";
    for (const auto& r : rows) {
        out << format_double(r.epsilon) << ',' << format_double(r.kappa) << ','
            << format_double(r.value) << ',' << format_double(r.stderr_) << ',' << r.method
            << ',' << r.cutoff << ',' << format_double(r.tail_bound) << ',' << r.seed << '\n';
    }
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    RunResult result;
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(config.out_dir);
    result.csv_path = (fs::path(config.out_dir) / "results.csv").string();
    result.manifest_path = (fs::path(config.out_dir) / "manifest.json").string();

    std::vector<CsvRow> rows;
    nlohmann::json extra;
    bool failed = false;

    try {
        if (config.kind == "verify") {
            VerifyOptions vo;
            vo.seed = config.seed;
            vo.threads = config.threads;
            vo.zigzag_fields = config.verify_zigzag_fields;
            vo.quick = config.verify_quick;
            VerifySummary summary = run_battery(vo);
            result.summary_path =
                (fs::path(config.out_dir) / "verify_summary.json").string();
            std::ofstream out(result.summary_path, std::ios::binary);
            out << summary_to_json(summary) << '\n';
            extra["verify"] = {{"pass", summary.n_pass},
                               {"fail", summary.n_fail},
                               {"inconclusive", summary.n_inconclusive},
                               {"release_ok", summary.release_ok}};
            if (!summary.release_ok) failed = true;
        } else if (config.kind == "homogenize") {
            CellProblem problem;
            problem.M = config.hom_matrix;
            problem.cell = config.hom_cell;
            if (auto* s = config.potential.sobolev()) problem.potential = *s;
            else throw std::invalid_argument("homogenize needs a sobolev potential");
            problem.p = config.constraint.p;
            problem.beta = config.beta;
            problem.eps_schedule = config.eps_schedule;
            problem.kappa_schedule = config.kappa_schedule;
            problem.chain_template = config.sampler;
            problem.ti.threads = config.threads;
            problem.seed = config.seed;
            FHomResult fh = f_hom_estimate(problem);
            for (const auto& fk : fh.per_kappa) {
                for (const auto& cell : fk.cells) rows.push_back(row_from(cell));
                CsvRow ext;
                ext.epsilon = 0.0;
                ext.kappa = fk.kappa;
                ext.value = fk.value;
                ext.stderr_ = fk.err;
                ext.method = "extrapolated";
                ext.seed = config.seed;
                rows.push_back(ext);
            }
            extra["f_hom"] = {{"value", fh.value},
                              {"stderr", fh.err},
                              {"kappa_independent", fh.kappa_independent},
                              {"converged", fh.converged}};
        } else if (config.kind == "sbv-probe") {
            SurfaceProbeOptions opt;
            opt.cell = config.probe_cell;
            if (auto* s = config.potential.sbv()) opt.potential = *s;
            else throw std::invalid_argument("sbv-probe needs an sbv potential");
            opt.p = config.constraint.p;
            opt.beta = config.beta;
            opt.kappa = config.kappa_schedule.empty() ? config.constraint.kappa
                                                      : config.kappa_schedule.front();
            opt.eps_schedule = config.eps_schedule;
            opt.chain_template = config.sampler;
            opt.ti.threads = config.threads;
            opt.seed = config.seed;
            SurfaceProbe probe = surface_density_probe(config.probe_datum, opt);
            for (const auto& cell : probe.cells) {
                rows.push_back(row_from(cell.jump));
                rows.push_back(row_from(cell.baseline));
                CsvRow ex;
                ex.epsilon = cell.eps;
                ex.kappa = opt.kappa;
                ex.value = cell.excess;
                ex.stderr_ = cell.err;
                ex.method = "surface_excess";
                ex.seed = config.seed;
                rows.push_back(ex);
            }
            extra["surface_probe"] = {{"amplitude", probe.amplitude},
                                      {"stderr", probe.err},
                                      {"fitted_exponent", probe.fitted_exponent},
                                      {"converged", probe.converged}};
        } else if (config.kind == "scan" || config.kind == "free-energy") {
            ScanProblem problem;
            problem.potential = config.potential;
            problem.target = config.profile;
            problem.domain_boxes = config.region_boxes;
            problem.dim_m = config.dim_m;
            problem.mode = config.constraint.mode;
            problem.p = config.constraint.p;
            problem.beta = config.beta;
            problem.chain_template = config.sampler;
            problem.ti.threads = config.threads;
            problem.seed = config.seed;
            std::vector<double> eps = config.eps_schedule;
            std::vector<double> kap = config.kappa_schedule;
            if (kap.empty()) kap = {config.constraint.kappa};
            if (config.kind == "free-energy") {
                eps = {config.eps_schedule.front()};
                kap = {kap.front()};
            }
            LimitScan scan = limit_scan(problem, eps, kap);
            for (const auto& cell : scan.cells) {
                if (cell.estimate) {
                    rows.push_back(row_from(*cell.estimate));
                } else {
                    CsvRow r;
                    r.epsilon = cell.epsilon;
                    r.kappa = cell.kappa;
                    r.method = "FAILED";
                    r.seed = config.seed;
                    rows.push_back(r);
                    failed = true;
                    result.messages.push_back("cell eps=" + format_double(cell.epsilon) +
                                              " kappa=" + format_double(cell.kappa) +
                                              " failed: " + cell.error);
                }
            }
            if (config.kind == "scan") {
                extra["scan"] = {{"f_prime", scan.f_prime},
                                 {"f_second", scan.f_second},
                                 {"err", scan.err},
                                 {"converged", scan.converged},
                                 {"kappa_monotone", scan.kappa_monotone}};
            }
        } else {
            throw std::invalid_argument("unknown kind: " + config.kind);
        }
    } catch (const std::exception& e) {
        failed = true;
        result.messages.push_back(e.what());
        CsvRow marker;
        marker.method = "FAILED";
        marker.seed = config.seed;
        rows.push_back(marker);
    }

    write_csv(result.csv_path, rows);

    auto t1 = std::chrono::steady_clock::now();
    nlohmann::json manifest;
    manifest["schema_version"] = config.schema_version;
    manifest["kind"] = config.kind;
    manifest["config_digest"] = digest_string(config.canonical_json());
    manifest["version"] = "0.1.0";
    manifest["seed"] = config.seed;
    manifest["normalization"] = "free energy = -(eps^d/|A|) log Z for both boundary modes";
    manifest["wall_time_s"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() / 1000.0;
    manifest["rows"] = rows.size();
    if (!extra.empty()) manifest["results"] = extra;
    if (!result.messages.empty()) manifest["messages"] = result.messages;
    std::ofstream mout(result.manifest_path, std::ios::binary);
    mout << manifest.dump(2) << '\n';

    result.exit_code = failed ? 1 : 0;
    return result;
}

}  // namespace latgibbs
