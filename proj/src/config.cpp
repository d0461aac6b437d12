#include "latgibbs/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace latgibbs {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw std::invalid_argument("config " + where + ": " + what);
}

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) bad(where, "unknown field '" + it.key() + "'");
}

Vec parse_vec(const json& j, const std::string& where) {
    if (!j.is_array()) bad(where, "expected an array of numbers");
    Vec v;
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

IVec parse_ivec(const json& j, const std::string& where) {
    if (!j.is_array()) bad(where, "expected an array of integers");
    IVec v;
    for (const auto& x : j) v.push_back(x.get<long long>());
    return v;
}

Box parse_box(const json& j, const std::string& where) {
    reject_unknown(j, where, {"lo", "hi"});
    Box b;
    b.lo = parse_vec(j.at("lo"), where + ".lo");
    b.hi = parse_vec(j.at("hi"), where + ".hi");
    if (b.lo.size() != b.hi.size()) bad(where, "lo/hi dimension mismatch");
    return b;
}

json box_json(const Box& b) { return json{{"lo", b.lo}, {"hi", b.hi}}; }

DecayWeights parse_weights(const json& j, const std::string& where) {
    reject_unknown(j, where, {"type", "c0", "s", "entries", "dim"});
    std::string type = j.at("type").get<std::string>();
    std::size_t dim = j.at("dim").get<std::size_t>();
    if (type == "power") {
        return DecayWeights::power_law(dim, j.value("c0", 1.0), j.value("s", 4.0));
    }
    if (type == "finite") {
        std::vector<DecayWeights::FiniteEntry> entries;
        for (const auto& e : j.at("entries")) {
            reject_unknown(e, where + ".entries[]", {"xi", "c"});
            entries.push_back({parse_ivec(e.at("xi"), where + ".xi"), e.at("c").get<double>()});
        }
        return DecayWeights::finite(dim, std::move(entries));
    }
    bad(where, "unknown weights type '" + type + "'");
}

json weights_json(const DecayWeights& w) {
    json j;
    j["dim"] = w.dim();
    if (auto* pl = w.power()) {
        j["type"] = "power";
        j["c0"] = pl->c0;
        j["s"] = pl->s;
    } else {
        j["type"] = "finite";
        j["entries"] = json::array();
        for (const auto& e : *w.entries()) j["entries"].push_back({{"xi", e.xi}, {"c", e.c}});
    }
    return j;
}

PotentialFamily parse_potential(const json& j, const std::string& where) {
    std::string family = j.at("family").get<std::string>();
    if (family == "sobolev") {
        reject_unknown(j, where, {"family", "p", "weights", "modulator"});
        SobolevPotential pot;
        pot.p = j.value("p", 2.0);
        pot.weights = parse_weights(j.at("weights"), where + ".weights");
        if (j.contains("modulator")) {
            const auto& m = j.at("modulator");
            reject_unknown(m, where + ".modulator", {"amp", "period"});
            pot.coefficient.amp = m.value("amp", 0.0);
            pot.coefficient.period = m.value("period", 1);
        }
        return PotentialFamily(pot);
    }
    if (family == "sbv") {
        reject_unknown(j, where,
                       {"family", "c1", "q", "c", "c2", "alpha", "tau", "gamma", "weights"});
        SBVPotential pot;
        pot.c1 = j.value("c1", 1.0);
        pot.q = j.value("q", 2.0);
        pot.c = j.value("c", 1.0);
        pot.c2 = j.value("c2", 1.0);
        pot.alpha = j.value("alpha", 0.5);
        pot.tau = j.value("tau", 1.0);
        pot.gamma = j.value("gamma", 0.5);
        pot.weights = parse_weights(j.at("weights"), where + ".weights");
        return PotentialFamily(pot);
    }
    bad(where, "unknown potential family '" + family + "'");
}

json potential_json(const PotentialFamily& fam) {
    json j;
    if (auto* s = fam.sobolev()) {
        j["family"] = "sobolev";
        j["p"] = s->p;
        j["weights"] = weights_json(s->weights);
        j["modulator"] = {{"amp", s->coefficient.amp}, {"period", s->coefficient.period}};
    } else {
        const auto* b = fam.sbv();
        j["family"] = "sbv";
        j["c1"] = b->c1;
        j["q"] = b->q;
        j["c"] = b->c;
        j["c2"] = b->c2;
        j["alpha"] = b->alpha;
        j["tau"] = b->tau;
        j["gamma"] = b->gamma;
        j["weights"] = weights_json(b->weights);
    }
    return j;
}

LinearMap parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "expected a nonempty matrix");
    LinearMap m;
    m.rows = j.size();
    m.cols = j[0].size();
    for (const auto& row : j) {
        if (row.size() != m.cols) bad(where, "ragged matrix");
        for (const auto& x : row) m.a.push_back(x.get<double>());
    }
    return m;
}

json matrix_json(const LinearMap& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
        rows.push_back(row);
    }
    return rows;
}

struct ProfileSpec {
    std::string type;
    LinearMap matrix;
    double amplitude = 0.0;
    Vec wave, above, below, point, normal, value, offset;
};

Profile parse_profile(const json& j, std::size_t d, const std::string& where) {
    reject_unknown(j, where,
                   {"type", "matrix", "amplitude", "wave", "above", "below", "point", "normal",
                    "value", "offset"});
    std::string type = j.at("type").get<std::string>();
    Profile p;
    if (type == "zero") {
        p = Profile::zero(d, 1);
    } else if (type == "constant") {
        p = Profile::constant(d, parse_vec(j.at("value"), where + ".value"));
    } else if (type == "linear") {
        p = Profile::linear(d, parse_matrix(j.at("matrix"), where + ".matrix"));
    } else if (type == "sinusoid") {
        p = Profile::sinusoid(d, j.at("amplitude").get<double>(),
                              parse_vec(j.at("wave"), where + ".wave"));
    } else if (type == "step") {
        p = Profile::step(d, parse_vec(j.at("above"), where), parse_vec(j.at("below"), where),
                          parse_vec(j.at("point"), where), parse_vec(j.at("normal"), where));
    } else if (type == "linear_step") {
        p = Profile::linear_plus_step(d, parse_matrix(j.at("matrix"), where),
                                      parse_vec(j.at("above"), where),
                                      parse_vec(j.at("below"), where),
                                      parse_vec(j.at("point"), where),
                                      parse_vec(j.at("normal"), where));
    } else {
        bad(where, "unknown profile type '" + type + "'");
    }
    if (j.contains("offset")) p = p.with_offset(parse_vec(j.at("offset"), where + ".offset"));
    return p;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "root",
                   {"schema_version", "kind", "seed", "threads", "out_dir", "potential",
                    "region", "profile", "constraint", "schedules", "sampler", "beta",
                    "homogenize", "sbv_probe", "verify"});
    ExperimentConfig c;
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != 1) bad("schema_version", "unsupported version");
    c.kind = j.at("kind").get<std::string>();
    static const std::set<std::string> kinds{"free-energy", "homogenize", "sbv-probe", "verify",
                                             "scan"};
    if (!kinds.count(c.kind)) bad("kind", "unknown kind '" + c.kind + "'");
    c.seed = j.value("seed", 1ULL);
    c.threads = j.value("threads", 1);
    c.out_dir = j.value("out_dir", ".");

    std::size_t d = 1;
    if (j.contains("region")) {
        const auto& r = j.at("region");
        reject_unknown(r, "region", {"boxes", "dim_m"});
        for (const auto& b : r.at("boxes")) c.region_boxes.push_back(parse_box(b, "region.boxes"));
        c.dim_m = r.value("dim_m", 1);
        if (!c.region_boxes.empty()) d = c.region_boxes[0].dim();
    }
    if (j.contains("potential")) c.potential = parse_potential(j.at("potential"), "potential");
    if (j.contains("profile")) c.profile = parse_profile(j.at("profile"), d, "profile");
    if (j.contains("constraint")) {
        const auto& k = j.at("constraint");
        reject_unknown(k, "constraint", {"mode", "kappa", "p", "clamp_width", "clamp_R0"});
        std::string mode = k.value("mode", "bulk");
        if (mode == "bulk") c.constraint.mode = ConstraintMode::bulk;
        else if (mode == "pinned") c.constraint.mode = ConstraintMode::pinned;
        else if (mode == "soft_clamp") c.constraint.mode = ConstraintMode::soft_clamp;
        else bad("constraint.mode", "unknown mode '" + mode + "'");
        if (k.contains("kappa")) {
            if (k.at("kappa").is_string() && k.at("kappa").get<std::string>() == "inf")
                c.constraint.kappa = std::numeric_limits<double>::infinity();
            else
                c.constraint.kappa = k.at("kappa").get<double>();
        }
        c.constraint.p = k.value("p", 2.0);
        c.constraint.clamp_width = k.value("clamp_width", 1.0);
        c.constraint.clamp_R0 = k.value("clamp_R0", 1.0);
    }
    if (j.contains("schedules")) {
        const auto& s = j.at("schedules");
        reject_unknown(s, "schedules", {"eps", "kappa"});
        if (s.contains("eps"))
            for (const auto& x : s.at("eps")) c.eps_schedule.push_back(x.get<double>());
        if (s.contains("kappa"))
            for (const auto& x : s.at("kappa")) c.kappa_schedule.push_back(x.get<double>());
    }
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        reject_unknown(s, "sampler",
                       {"steps", "burn_in", "proposal_scale", "chains", "thin"});
        c.sampler.steps = s.value("steps", 4000LL);
        c.sampler.burn_in = s.value("burn_in", 1000LL);
        c.sampler.proposal_scale = s.value("proposal_scale", 0.0);
        c.sampler.chains = s.value("chains", 2);
        c.sampler.thin = s.value("thin", 1);
    }
    c.beta = j.value("beta", 1.0);
    if (j.contains("homogenize")) {
        const auto& h = j.at("homogenize");
        reject_unknown(h, "homogenize", {"matrix", "cell"});
        c.hom_matrix = parse_matrix(h.at("matrix"), "homogenize.matrix");
        c.hom_cell = parse_box(h.at("cell"), "homogenize.cell");
    }
    if (j.contains("sbv_probe")) {
        const auto& s = j.at("sbv_probe");
        reject_unknown(s, "sbv_probe", {"above", "below", "point", "normal", "cell"});
        c.probe_datum.above = parse_vec(s.at("above"), "sbv_probe.above");
        c.probe_datum.below = parse_vec(s.at("below"), "sbv_probe.below");
        c.probe_datum.point = parse_vec(s.at("point"), "sbv_probe.point");
        c.probe_datum.normal = parse_vec(s.at("normal"), "sbv_probe.normal");
        c.probe_cell = parse_box(s.at("cell"), "sbv_probe.cell");
    }
    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        reject_unknown(v, "verify", {"zigzag_fields", "quick"});
        c.verify_zigzag_fields = v.value("zigzag_fields", 1000);
        c.verify_quick = v.value("quick", false);
    }
    c.raw = j.dump(2);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["kind"] = c.kind;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out_dir"] = c.out_dir;
    j["beta"] = c.beta;
    j["potential"] = potential_json(c.potential);
    if (!c.region_boxes.empty()) {
        json boxes = json::array();
        for (const auto& b : c.region_boxes) boxes.push_back(box_json(b));
        j["region"] = {{"boxes", boxes}, {"dim_m", c.dim_m}};
    }
    // profiles serialize through their construction parameters only when the
    // config carried them; the runner keeps the parsed object
    json k;
    switch (c.constraint.mode) {
        case ConstraintMode::bulk: k["mode"] = "bulk"; break;
        case ConstraintMode::pinned: k["mode"] = "pinned"; break;
        case ConstraintMode::soft_clamp: k["mode"] = "soft_clamp"; break;
    }
    if (std::isfinite(c.constraint.kappa)) k["kappa"] = c.constraint.kappa;
    else k["kappa"] = "inf";
    k["p"] = c.constraint.p;
    k["clamp_width"] = c.constraint.clamp_width;
    k["clamp_R0"] = c.constraint.clamp_R0;
    j["constraint"] = k;
    j["schedules"] = {{"eps", c.eps_schedule}, {"kappa", c.kappa_schedule}};
    j["sampler"] = {{"steps", c.sampler.steps},
                    {"burn_in", c.sampler.burn_in},
                    {"proposal_scale", c.sampler.proposal_scale},
                    {"chains", c.sampler.chains},
                    {"thin", c.sampler.thin}};
    return j.dump(2);
}

std::string ExperimentConfig::canonical_json() const {
    return raw.empty() ? serialize_config(*this) : raw;
}

ValidationReport validate_config(const ExperimentConfig& config) {
    ValidationReport rep;
    auto note = [&](const std::string& msg) {
        rep.diagnostics.push_back(msg);
        rep.ok = false;
    };
    for (std::size_t i = 0; i + 1 < config.eps_schedule.size(); ++i)
        if (!(config.eps_schedule[i] > config.eps_schedule[i + 1]))
            note("eps schedule is not strictly decreasing");
    for (std::size_t i = 0; i + 1 < config.kappa_schedule.size(); ++i)
        if (!(config.kappa_schedule[i] > config.kappa_schedule[i + 1]))
            note("kappa schedule is not strictly decreasing");
    if (config.sampler.steps <= config.sampler.burn_in)
        note("sampler steps must exceed burn_in");
    if (config.kind != "verify") {
        if (config.eps_schedule.empty()) note("schedules.eps must not be empty");
        std::vector<double> eps = config.eps_schedule;
        if (eps.empty()) eps = {0.25, 0.125};
        rep.hypotheses = validate(config.potential, eps);
        for (const auto& c : rep.hypotheses.checks)
            if (c.status != "pass")
                note("potential hypothesis failed: " + c.name +
                     (c.witness.empty() ? "" : " at " + c.witness));
    }
    return rep;
}

}  // namespace latgibbs
