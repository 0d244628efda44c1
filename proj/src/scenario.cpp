#include "fairshare/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fairshare {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError("scenario: " + path + ": " + what);
}

void require_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
}

Vec vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "must be a nonempty array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = number(v[i], path + "[" + std::to_string(i) + "]");
    return out;
}

Mat matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "must be a nonempty array of rows");
    std::size_t cols = 0;
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (!v[r].is_array() || v[r].empty())
            fail(path + " row " + std::to_string(r), "must be a nonempty array");
        if (r == 0) cols = v[r].size();
        if (v[r].size() != cols) fail(path + " row " + std::to_string(r), "ragged row length");
    }
    Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number(v[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    return out;
}

void check_routing_rows(const Mat& P, const std::string& path) {
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index s = 0; s < P.cols(); ++s) {
            if (P(r, s) < 0.0) fail(path + " row " + std::to_string(r), "negative entry");
            sum += P(r, s);
        }
        if (sum > 1.0 + 1e-12)
            fail(path + " row " + std::to_string(r), "row sum " + format_double(sum) + " exceeds 1");
    }
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& name) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
    }
    require_keys(root, "scenario", {"capacity", "traffic", "phase_type", "allocator", "run"});
    if (!root.contains("capacity")) fail("capacity", "required object missing");
    if (!root.contains("traffic")) fail("traffic", "required object missing");

    require_keys(root["capacity"], "capacity", {"A", "c"});
    if (!root["capacity"].contains("A")) fail("capacity.A", "required");
    if (!root["capacity"].contains("c")) fail("capacity.c", "required");
    Mat A = matrix(root["capacity"]["A"], "capacity.A");
    Vec c = vector(root["capacity"]["c"], "capacity.c");
    if (c.size() != A.rows()) fail("capacity.c", "length must equal the number of rows of A");

    require_keys(root["traffic"], "traffic", {"nu_bar", "mu", "P"});
    for (const char* key : {"nu_bar", "mu", "P"})
        if (!root["traffic"].contains(key)) fail(std::string("traffic.") + key, "required");
    Vec nu_bar = vector(root["traffic"]["nu_bar"], "traffic.nu_bar");
    Vec mu = vector(root["traffic"]["mu"], "traffic.mu");
    Mat P = matrix(root["traffic"]["P"], "traffic.P");
    if (nu_bar.size() != A.cols()) fail("traffic.nu_bar", "length must equal the number of classes");
    if (mu.size() != A.cols()) fail("traffic.mu", "length must equal the number of classes");
    if (P.rows() != A.cols() || P.cols() != A.cols())
        fail("traffic.P", "must be a classes-by-classes matrix");
    check_routing_rows(P, "traffic.P");

    std::optional<PhaseTypeSpec> phases;
    if (root.contains("phase_type")) {
        require_keys(root["phase_type"], "phase_type", {"classes"});
        if (!root["phase_type"].contains("classes")) fail("phase_type.classes", "required");
        const json& classes = root["phase_type"]["classes"];
        if (!classes.is_array() || static_cast<Eigen::Index>(classes.size()) != A.cols())
            fail("phase_type.classes", "must list one entry per class");
        PhaseTypeSpec spec;
        for (std::size_t r = 0; r < classes.size(); ++r) {
            std::string path = "phase_type.classes[" + std::to_string(r) + "]";
            require_keys(classes[r], path, {"alpha", "rates", "P"});
            for (const char* key : {"alpha", "rates", "P"})
                if (!classes[r].contains(key)) fail(path + "." + key, "required");
            PhaseTypeSpec::ClassPhases cp;
            cp.alpha = vector(classes[r]["alpha"], path + ".alpha");
            cp.rates = vector(classes[r]["rates"], path + ".rates");
            cp.routing = matrix(classes[r]["P"], path + ".P");
            check_routing_rows(cp.routing, path + ".P");
            spec.classes.push_back(std::move(cp));
        }
        spec.validate();
        phases = std::move(spec);
    }

    AllocatorSpec alloc;
    if (root.contains("allocator")) {
        require_keys(root["allocator"], "allocator", {"kind", "w", "alpha"});
        if (!root["allocator"].contains("kind")) fail("allocator.kind", "required");
        if (!root["allocator"]["kind"].is_string()) fail("allocator.kind", "must be a string");
        std::string kind = root["allocator"]["kind"].get<std::string>();
        if (kind == "pf") alloc.kind = AllocatorKind::kPf;
        else if (kind == "pf_prime") alloc.kind = AllocatorKind::kPfPrime;
        else if (kind == "bf") alloc.kind = AllocatorKind::kBf;
        else if (kind == "alpha_fair") alloc.kind = AllocatorKind::kAlphaFair;
        else fail("allocator.kind", "unknown allocator '" + kind + "'");

        if (alloc.kind == AllocatorKind::kAlphaFair) {
            if (!root["allocator"].contains("w")) fail("allocator.w", "required for alpha_fair");
            if (!root["allocator"].contains("alpha")) fail("allocator.alpha", "required for alpha_fair");
            alloc.weights = vector(root["allocator"]["w"], "allocator.w");
            if (alloc.weights.size() != A.cols())
                fail("allocator.w", "length must equal the number of classes");
            if (alloc.weights.minCoeff() <= 0.0) fail("allocator.w", "weights must be positive");
            alloc.alpha = number(root["allocator"]["alpha"], "allocator.alpha");
            if (!(alloc.alpha > 0.0)) fail("allocator.alpha", "must be positive");
        } else if (root["allocator"].contains("w") || root["allocator"].contains("alpha")) {
            fail("allocator", "w and alpha apply to alpha_fair only");
        }
    }

    RunConfig run;
    if (root.contains("run")) {
        require_keys(root["run"], "run", {"t_end", "seed", "box", "burn_in", "h_step", "scale"});
        const json& r = root["run"];
        if (r.contains("t_end")) {
            run.t_end = number(r["t_end"], "run.t_end");
            if (!(*run.t_end > 0.0)) fail("run.t_end", "must be positive");
        }
        if (r.contains("seed")) {
            if (!r["seed"].is_number_unsigned()) fail("run.seed", "must be a nonnegative integer");
            run.seed = r["seed"].get<std::uint64_t>();
        }
        if (r.contains("box")) {
            if (!r["box"].is_number_integer()) fail("run.box", "must be an integer");
            int box = r["box"].get<int>();
            if (box < 0) fail("run.box", "must be nonnegative");
            run.box = box;
        }
        if (r.contains("burn_in")) {
            run.burn_in = number(r["burn_in"], "run.burn_in");
            if (*run.burn_in < 0.0) fail("run.burn_in", "must be nonnegative");
        }
        if (r.contains("h_step")) {
            run.h_step = number(r["h_step"], "run.h_step");
            if (!(*run.h_step > 0.0)) fail("run.h_step", "must be positive");
        }
        if (r.contains("scale")) {
            run.scale = number(r["scale"], "run.scale");
            if (!(*run.scale >= 1.0)) fail("run.scale", "must be at least 1");
        }
    }

    return Scenario{name, CapacityRegion(std::move(A), std::move(c)),
                    TrafficModel(std::move(nu_bar), std::move(mu), std::move(P)),
                    std::move(phases), std::move(alloc), run};
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    if (auto dot = name.find_last_of('.'); dot != std::string::npos) name = name.substr(0, dot);
    return parse_scenario_text(buffer.str(), name);
}

}  // namespace fairshare
