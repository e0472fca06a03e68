#pragma once

#include <atomic>
#include <chrono>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ccas/scatter2.hpp"
#include "ccas/strip.hpp"
#include "ccas/wavepacket.hpp"

namespace ccas {

using Json = nlohmann::json;

inline constexpr const char* kArtifactVersion = "0.1.0";

// Invalid run configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SweepMode { delta, kx, xdist, oracle, selfenergy, dos };
enum class OutputFormat { csv, json };

inline std::string to_string(SweepMode m) {
    switch (m) {
        case SweepMode::delta: return "delta-sweep";
        case SweepMode::kx: return "kx-sweep";
        case SweepMode::xdist: return "xdist-sweep";
        case SweepMode::oracle: return "oracle-compare";
        case SweepMode::selfenergy: return "selfenergy";
        case SweepMode::dos: return "dos";
    }
    return "?";
}

inline SweepMode sweep_mode_from_string(const std::string& s) {
    if (s == "delta-sweep") return SweepMode::delta;
    if (s == "kx-sweep") return SweepMode::kx;
    if (s == "xdist-sweep") return SweepMode::xdist;
    if (s == "oracle-compare") return SweepMode::oracle;
    if (s == "selfenergy") return SweepMode::selfenergy;
    if (s == "dos") return SweepMode::dos;
    throw ConfigError("mode: unknown value '" + s + "'");
}

// Exact parser for pi-rational angles: "pi/8", "-3*pi/4", "3pi/4", "pi",
// or a plain decimal number.
inline double parse_angle(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw ConfigError("angle: empty string");
    double sign = 1.0;
    std::size_t pos = 0;
    if (s[pos] == '+' || s[pos] == '-') {
        if (s[pos] == '-') sign = -1.0;
        ++pos;
    }
    const std::size_t pi_at = s.find("pi", pos);
    if (pi_at == std::string::npos) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
            throw ConfigError("angle: cannot parse '" + raw + "'");
        }
        if (pos + used != s.size())
            throw ConfigError("angle: trailing characters in '" + raw + "'");
        return sign * v;
    }
    double coef = 1.0;
    if (pi_at > pos) {
        std::string head = s.substr(pos, pi_at - pos);
        if (!head.empty() && head.back() == '*') head.pop_back();
        if (!head.empty()) {
            std::size_t used = 0;
            try {
                coef = std::stod(head, &used);
            } catch (const std::exception&) {
                throw ConfigError("angle: cannot parse '" + raw + "'");
            }
            if (used != head.size())
                throw ConfigError("angle: cannot parse '" + raw + "'");
        }
    }
    double div = 1.0;
    std::size_t tail_at = pi_at + 2;
    if (tail_at < s.size()) {
        if (s[tail_at] != '/')
            throw ConfigError("angle: expected '/' after pi in '" + raw + "'");
        std::size_t used = 0;
        try {
            div = std::stod(s.substr(tail_at + 1), &used);
        } catch (const std::exception&) {
            throw ConfigError("angle: cannot parse '" + raw + "'");
        }
        if (tail_at + 1 + used != s.size() || div == 0.0)
            throw ConfigError("angle: bad divisor in '" + raw + "'");
    }
    return sign * coef * kPi / div;
}

inline double parse_angle(const Json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            return parse_angle(v.get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    throw ConfigError(path + ": expected number or pi-expression string");
}

struct SweepSpec {
    SweepMode mode = SweepMode::delta;
    ModelParams params{1.0, 0.0, 1, {{0, Complex(5.0, 0.0)}}};
    double kx = kPi / 8;
    double ky = kPi / 4;
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
    RTwoMode rii = RTwoMode::paper;
    OutputFormat format = OutputFormat::csv;
    std::string out;
    int jobs = 0;
    bool packet = false;
};

inline Json spec_to_json(const SweepSpec& s) {
    Json layers = Json::array();
    for (const auto& l : s.params.layers) {
        Json jl;
        jl["x"] = l.x;
        if (l.omega.imag() == 0.0)
            jl["omega"] = l.omega.real();
        else
            jl["omega"] = Json::array({l.omega.real(), l.omega.imag()});
        layers.push_back(jl);
    }
    Json j;
    j["mode"] = to_string(s.mode);
    j["xi"] = s.params.xi;
    j["delta"] = s.params.delta;
    j["d"] = s.params.d;
    j["layers"] = layers;
    j["kx"] = s.kx;
    j["ky"] = s.ky;
    if (s.mode != SweepMode::oracle)
        j["sweep"] = Json{{"start", s.start}, {"stop", s.stop}, {"count", s.count}};
    j["rii_mode"] = s.rii == RTwoMode::paper ? "paper" : "directional";
    j["format"] = s.format == OutputFormat::csv ? "csv" : "json";
    if (!s.out.empty()) j["out"] = s.out;
    j["jobs"] = s.jobs;
    j["packet"] = s.packet;
    return j;
}

inline SweepSpec spec_from_json(const Json& j) {
    SweepSpec s;
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    if (!j.contains("mode") || !j["mode"].is_string())
        throw ConfigError("mode: required string field");
    s.mode = sweep_mode_from_string(j["mode"].get<std::string>());
    auto num = [&](const char* key, double dflt) {
        if (!j.contains(key)) return dflt;
        if (!j[key].is_number())
            throw ConfigError(std::string(key) + ": expected a number");
        return j[key].get<double>();
    };
    s.params.xi = num("xi", 1.0);
    s.params.delta = num("delta", 0.0);
    if (j.contains("d")) {
        if (!j["d"].is_number_integer())
            throw ConfigError("d: expected an integer");
        s.params.d = j["d"].get<int>();
    }
    if (j.contains("layers")) {
        if (!j["layers"].is_array() || j["layers"].empty() ||
            j["layers"].size() > 2)
            throw ConfigError("layers: expected an array of 1 or 2 entries");
        s.params.layers.clear();
        int idx = 0;
        for (const auto& jl : j["layers"]) {
            const std::string path = "layers[" + std::to_string(idx++) + "]";
            LayerSpec l;
            if (!jl.is_object()) throw ConfigError(path + ": expected object");
            if (jl.contains("x")) {
                if (!jl["x"].is_number_integer())
                    throw ConfigError(path + ".x: expected an integer");
                l.x = jl["x"].get<int>();
            }
            if (jl.contains("omega")) {
                const auto& jo = jl["omega"];
                if (jo.is_number())
                    l.omega = Complex(jo.get<double>(), 0.0);
                else if (jo.is_array() && jo.size() == 2 &&
                         jo[0].is_number() && jo[1].is_number())
                    l.omega = Complex(jo[0].get<double>(), jo[1].get<double>());
                else
                    throw ConfigError(path +
                                      ".omega: expected number or [re, im]");
            }
            s.params.layers.push_back(l);
        }
    }
    if (j.contains("kx")) s.kx = parse_angle(j["kx"], "kx");
    if (j.contains("ky")) s.ky = parse_angle(j["ky"], "ky");
    if (s.mode != SweepMode::oracle) {
        if (!j.contains("sweep") || !j["sweep"].is_object())
            throw ConfigError("sweep: required object with start/stop/count");
        const Json& sw = j["sweep"];
        for (const char* key : {"start", "stop"})
            if (!sw.contains(key) || !(sw[key].is_number() || sw[key].is_string()))
                throw ConfigError(std::string("sweep.") + key + ": required");
        s.start = parse_angle(sw["start"], "sweep.start");
        s.stop = parse_angle(sw["stop"], "sweep.stop");
        if (!sw.contains("count") || !sw["count"].is_number_integer())
            throw ConfigError("sweep.count: required integer");
        s.count = sw["count"].get<int>();
    } else if (j.contains("sweep")) {
        throw ConfigError("sweep: not allowed in oracle-compare mode");
    }
    if (j.contains("rii_mode")) {
        const std::string m = j["rii_mode"].get<std::string>();
        if (m == "paper")
            s.rii = RTwoMode::paper;
        else if (m == "directional")
            s.rii = RTwoMode::directional;
        else
            throw ConfigError("rii_mode: expected 'paper' or 'directional'");
    }
    if (j.contains("format")) {
        const std::string f = j["format"].get<std::string>();
        if (f == "csv")
            s.format = OutputFormat::csv;
        else if (f == "json")
            s.format = OutputFormat::json;
        else
            throw ConfigError("format: expected 'csv' or 'json'");
    }
    if (j.contains("out")) s.out = j["out"].get<std::string>();
    if (j.contains("jobs")) {
        if (!j["jobs"].is_number_integer())
            throw ConfigError("jobs: expected an integer");
        s.jobs = j["jobs"].get<int>();
    }
    if (j.contains("packet")) {
        if (!j["packet"].is_boolean())
            throw ConfigError("packet: expected a boolean");
        s.packet = j["packet"].get<bool>();
    }
    return s;
}

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline void validate_spec(const SweepSpec& s) {
    try {
        s.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const bool two = s.params.layers.size() == 2;
    if (s.mode == SweepMode::xdist && !two)
        throw ConfigError("xdist-sweep: requires two layers");
    if (s.mode == SweepMode::oracle) {
        if (s.format == OutputFormat::csv)
            throw ConfigError("oracle-compare: only json output is supported");
        return;
    }
    if (s.count < 2) throw ConfigError("sweep.count: must be >= 2");
    if (!std::isfinite(s.start) || !std::isfinite(s.stop) || s.start >= s.stop)
        throw ConfigError("sweep: need finite start < stop");
    if (s.mode == SweepMode::kx || s.mode == SweepMode::selfenergy) {
        if (s.start <= -1.0 || s.stop >= 1.0)
            throw ConfigError("sweep: cos(kx) range must lie inside (-1, 1)");
    }
    if (s.mode == SweepMode::dos) {
        const double lo = -2.0 * s.params.xi * (1.0 + std::cos(s.ky));
        const double hi = 2.0 * s.params.xi * (1.0 - std::cos(s.ky));
        if (s.start < lo || s.stop > hi)
            throw ConfigError("sweep: dos energy range must lie inside the band");
    }
    if (s.mode == SweepMode::xdist) {
        if (std::abs(s.start - std::lround(s.start)) > 1e-9 ||
            std::abs(s.stop - std::lround(s.stop)) > 1e-9)
            throw ConfigError("sweep: xdist bounds must be integers");
    }
}

template <typename Fn>
inline void parallel_grid(int count, int jobs, Fn&& fn) {
    if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) jobs = 1;
    }
    jobs = std::min(jobs, count);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Deterministic grid evaluation; identical specs yield identical tables.
inline SweepTable run_sweep_table(const SweepSpec& spec) {
    detail::validate_spec(spec);
    if (spec.mode == SweepMode::oracle)
        throw ConfigError("oracle-compare has no tabular output");
    const bool two = spec.params.layers.size() == 2;
    const int d = spec.params.d;

    SweepTable t;
    const char* swept = nullptr;
    switch (spec.mode) {
        case SweepMode::delta: swept = "delta"; break;
        case SweepMode::kx: swept = "cos_kx"; break;
        case SweepMode::xdist: swept = "x2_minus_x1"; break;
        case SweepMode::selfenergy: swept = "cos_kx"; break;
        case SweepMode::dos: swept = "energy"; break;
        default: break;
    }
    t.columns.push_back(swept);
    if (spec.mode == SweepMode::dos) {
        t.columns.insert(t.columns.end(), {"rho", "band_edge"});
    } else if (spec.mode == SweepMode::selfenergy) {
        if (!two) {
            t.columns.insert(t.columns.end(), {"re_sigma", "im_sigma"});
            for (int l = 0; l < d; ++l) {
                t.columns.push_back("re_sigma_l" + std::to_string(l));
                t.columns.push_back("im_sigma_l" + std::to_string(l));
            }
        } else {
            for (const char* e : {"11", "12", "21", "22"}) {
                t.columns.push_back(std::string("re_s") + e);
                t.columns.push_back(std::string("im_s") + e);
            }
            t.columns.insert(t.columns.end(),
                             {"re_sigma_plus", "im_sigma_plus",
                              "re_sigma_minus", "im_sigma_minus"});
        }
        t.columns.push_back("divergent");
    } else {
        t.columns.push_back("R");
        if (!two) {
            for (int l = 0; l < d; ++l)
                t.columns.push_back("P_" + std::to_string(l));
            t.columns.insert(t.columns.end(), {"re_sigma", "im_sigma"});
        } else {
            for (int l = -(d - 1); l <= d - 1; ++l)
                t.columns.push_back(
                    "P_" + std::string(l < 0 ? "m" : "") +
                    std::to_string(std::abs(l)));
            t.columns.insert(t.columns.end(),
                             {"re_sigma_plus", "im_sigma_plus",
                              "re_sigma_minus", "im_sigma_minus",
                              "delta_plus", "delta_minus"});
        }
        t.columns.push_back("divergent");
    }

    t.rows.assign(spec.count, {});
    detail::parallel_grid(spec.count, spec.jobs, [&](int i) {
        const double v =
            spec.start + (spec.stop - spec.start) * i / (spec.count - 1);
        ModelParams p = spec.params;
        Momentum2 k{spec.kx, spec.ky};
        std::vector<double>& row = t.rows[i];
        row.push_back(v);
        switch (spec.mode) {
            case SweepMode::delta: p.delta = v; break;
            case SweepMode::kx:
            case SweepMode::selfenergy: k = Momentum2{std::acos(v), spec.ky}; break;
            case SweepMode::xdist:
                p.layers[1].x = p.layers[0].x + static_cast<int>(std::lround(v));
                break;
            default: break;
        }
        if (spec.mode == SweepMode::dos) {
            const DosPoint dp = dos_1d(v, spec.ky, p);
            row.insert(row.end(), {dp.rho, dp.band_edge ? 1.0 : 0.0});
            return;
        }
        if (spec.mode == SweepMode::selfenergy) {
            if (!two) {
                const SelfEnergy s = sigma_total(k, p, p.layers[0]);
                row.insert(row.end(), {s.value.real(), s.value.imag()});
                for (const Complex& c : s.contributions)
                    row.insert(row.end(), {c.real(), c.imag()});
                row.push_back(s.divergent ? 1.0 : 0.0);
            } else {
                const SelfEnergyMatrix2 m = sigma_matrix(k, p);
                for (const Complex* c : {&m.s11, &m.s12, &m.s21, &m.s22})
                    row.insert(row.end(), {c->real(), c->imag()});
                row.insert(row.end(),
                           {m.sigma_plus.real(), m.sigma_plus.imag(),
                            m.sigma_minus.real(), m.sigma_minus.imag()});
                row.push_back(m.divergent ? 1.0 : 0.0);
            }
            return;
        }
        if (!two) {
            const ScatteringResult r = r_one(k, p);
            row.push_back(r.total);
            for (const auto& [c, pl] : r.channels)
                if (c.l >= 0) row.push_back(pl);
            const SelfEnergy s = sigma_total(k, p, p.layers[0]);
            row.insert(row.end(), {s.divergent ? 0.0 : s.value.real(),
                                   s.divergent ? 0.0 : s.value.imag()});
            row.push_back(r.divergent ? 1.0 : 0.0);
        } else {
            const ScatteringResult r = r_two(k, p, spec.rii);
            row.push_back(r.total);
            for (const auto& [c, pl] : r.channels) row.push_back(pl);
            const SelfEnergyMatrix2 m = sigma_matrix(k, p);
            if (m.divergent) {
                row.insert(row.end(), {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
            } else {
                const auto [dp, dm] = peak_positions(k, p);
                row.insert(row.end(),
                           {m.sigma_plus.real(), m.sigma_plus.imag(),
                            m.sigma_minus.real(), m.sigma_minus.imag(), dp, dm});
            }
            row.push_back(r.divergent ? 1.0 : 0.0);
        }
    });
    return t;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string table_to_csv(const SweepTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out.push_back(',');
        out += t.columns[i];
    }
    out.push_back('\n');
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += format_double(row[i]);
        }
        out.push_back('\n');
    }
    return out;
}

inline Json table_to_records(const SweepTable& t) {
    Json records = Json::array();
    for (const auto& row : t.rows) {
        Json rec;
        for (std::size_t i = 0; i < row.size(); ++i) rec[t.columns[i]] = row[i];
        records.push_back(rec);
    }
    return records;
}

// Cross-validation of the closed forms against the strip solver (and
// optionally the wave-packet run) at a single momentum/detuning point.
// Deterministic by construction: no timing data inside.
inline Json compare_oracles(const SweepSpec& spec) {
    detail::validate_spec(spec);
    ModelParams p = spec.params;
    const Momentum2 k{spec.kx, spec.ky};
    const bool two = p.layers.size() == 2;
    constexpr double four_pi2 = 4.0 * kPi * kPi;

    Json rep;
    rep["spec"] = spec_to_json(spec);
    const StripSolution sol = solve_strip_exact(k, p);
    const FluxProbabilities flux = flux_probabilities(sol, k, p);
    Json strip;
    strip["backward"] = flux.backward;
    strip["forward_scattered"] = flux.forward_scattered;
    strip["transmission"] = flux.transmission;
    strip["unitarity_sum"] = flux.unitarity_sum;
    strip["scattered_total"] = flux.scattered_total;
    strip["rcond"] = sol.rcond;
    rep["strip"] = strip;

    // per-branch probabilities from the closed forms, directional split
    std::vector<double> p_fwd(p.d, 0.0), p_bwd(p.d, 0.0);
    double r_paper_total = 0.0, r_dir_total = 0.0;
    if (!two) {
        const ScatteringResult r = r_one(k, p);
        r_paper_total = r_dir_total = r.total;
        for (const auto& [c, pl] : r.channels)
            (c.l >= 0 ? p_fwd : p_bwd)[std::abs(c.l)] = pl;
        rep["analytic"] = {{"r", r.total},
                           {"lamb_shift", r.lamb_shift},
                           {"linewidth", r.linewidth},
                           {"divergent", r.divergent}};
    } else {
        const ScatteringResult rp = r_two(k, p, RTwoMode::paper);
        const ScatteringResult rd = r_two(k, p, RTwoMode::directional);
        r_paper_total = rp.total;
        r_dir_total = rd.total;
        for (const auto& [c, pl] : rd.channels)
            (c.l >= 0 ? p_fwd : p_bwd)[std::abs(c.l)] = pl;
        const SelfEnergyMatrix2 m = sigma_matrix(k, p);
        rep["analytic"] = {
            {"r_paper", rp.total},
            {"r_directional", rd.total},
            {"sigma_plus", {m.sigma_plus.real(), m.sigma_plus.imag()}},
            {"sigma_minus", {m.sigma_minus.real(), m.sigma_minus.imag()}},
            {"divergent", rp.divergent}};
    }

    // flux identity: strip probabilities should equal 4 pi^2 times the
    // closed-form packet probabilities, branch by branch and per direction
    double max_flux_delta = 0.0;
    Json branches = Json::array();
    for (int m = 0; m < p.d; ++m) {
        if (!sol.channels[m].open()) continue;
        Json b;
        b["m"] = m;
        b["analytic_forward"] = p_fwd[m];
        b["analytic_backward"] = m == 0 ? Json() : Json(p_bwd[m]);
        b["strip_forward_over_4pi2"] = flux.forward_scattered[m] / four_pi2;
        b["strip_backward_over_4pi2"] = flux.backward[m] / four_pi2;
        const double scale = std::max({p_fwd[m], flux.forward_scattered[m] / four_pi2, 1e-300});
        max_flux_delta = std::max(
            max_flux_delta,
            std::abs(p_fwd[m] - flux.forward_scattered[m] / four_pi2) / scale);
        if (m > 0) {
            const double scale_b =
                std::max({p_bwd[m], flux.backward[m] / four_pi2, 1e-300});
            max_flux_delta = std::max(
                max_flux_delta,
                std::abs(p_bwd[m] - flux.backward[m] / four_pi2) / scale_b);
        }
        branches.push_back(b);
    }
    rep["branches"] = branches;
    rep["max_flux_identity_rel_delta"] = max_flux_delta;

    // channel ratios P_l / P_0, forward branch
    if (sol.channels[0].open() && p_fwd[0] > 0.0) {
        Json ratios = Json::array();
        double max_ratio_delta = 0.0;
        for (int m = 1; m < p.d; ++m) {
            if (!sol.channels[m].open()) continue;
            const double ra = p_fwd[m] / p_fwd[0];
            const double rs = flux.forward_scattered[m] / flux.forward_scattered[0];
            ratios.push_back({{"m", m}, {"analytic", ra}, {"strip", rs}});
            max_ratio_delta =
                std::max(max_ratio_delta, std::abs(ra - rs) / std::max(ra, 1e-300));
        }
        rep["ratios"] = ratios;
        rep["max_ratio_rel_delta"] = max_ratio_delta;
    }

    // adjudication of the two total conventions against the strip totals over
    // the same 2d-1 packet family (forward l=0 plus both signs of l >= 1)
    double strip_packet_total = flux.forward_scattered[0];
    for (int m = 1; m < p.d; ++m)
        strip_packet_total += flux.forward_scattered[m] + flux.backward[m];
    strip_packet_total /= four_pi2;
    const double scale = std::max(strip_packet_total, 1e-300);
    const double delta_paper = std::abs(r_paper_total - strip_packet_total) / scale;
    const double delta_dir = std::abs(r_dir_total - strip_packet_total) / scale;
    std::string matched = "none";
    if (delta_paper <= 1e-6 && delta_dir <= 1e-6)
        matched = "both";
    else if (delta_paper <= 1e-6)
        matched = "paper";
    else if (delta_dir <= 1e-6)
        matched = "directional";
    rep["adjudication"] = {
        {"strip_packet_total_over_4pi2", strip_packet_total},
        {"r_paper", r_paper_total},
        {"r_directional", r_dir_total},
        {"rel_delta_paper", delta_paper},
        {"rel_delta_directional", delta_dir},
        {"matched_mode", matched},
        {"strip_backward_l0_over_4pi2", flux.backward[0] / four_pi2},
        {"strip_full_scattered_over_4pi2", flux.scattered_total / four_pi2}};

    if (spec.packet) {
        // rigid shift of the layer columns to the middle of the packet lattice
        ModelParams pp = p;
        WavePacketSpec ws = make_packet_spec(pp, k);
        int xmin = p.layers[0].x, xmax = p.layers[0].x;
        for (const auto& l : p.layers) {
            xmin = std::min(xmin, l.x);
            xmax = std::max(xmax, l.x);
        }
        const int off = ws.lx / 2 - (xmin + xmax) / 2;
        for (auto& l : pp.layers) l.x += off;
        ws = make_packet_spec(pp, k);
        const OracleReport orep = evolve_wavepacket(ws, pp);
        Json packet;
        packet["norm_drift"] = orep.norm_drift;
        packet["atomic_residue"] = orep.atomic_residue;
        packet["guard_max"] = orep.guard_max;
        packet["inconclusive"] = orep.inconclusive;
        packet["transmission_forward"] = orep.transmission_forward;
        Json pops = Json::array();
        double max_scatter_delta = 0.0;
        for (const auto& cp : orep.populations) {
            Json e;
            e["m"] = cp.m;
            e["direction"] = cp.direction;
            e["packet"] = cp.probability;
            if (!(cp.m == 0 && cp.direction > 0) && sol.channels[cp.m].open()) {
                const double strip_p = cp.direction > 0
                                           ? flux.forward_scattered[cp.m]
                                           : flux.backward[cp.m];
                e["strip"] = strip_p;
                if (strip_p > 1e-6)
                    max_scatter_delta = std::max(
                        max_scatter_delta,
                        std::abs(cp.probability - strip_p) / strip_p);
            }
            pops.push_back(e);
        }
        packet["populations"] = pops;
        packet["transmission_strip"] = flux.transmission[0];
        max_scatter_delta = std::max(
            max_scatter_delta,
            std::abs(orep.transmission_forward - flux.transmission[0]) /
                flux.transmission[0]);
        packet["max_scattered_rel_delta"] = max_scatter_delta;
        packet["agreement_2pc"] = max_scatter_delta <= 0.02 && !orep.inconclusive;
        rep["packet"] = packet;
    }
    return rep;
}

// Run a sweep (or oracle comparison), serialize per the requested format,
// and write the output file when a path is set. Returns the file contents.
inline std::string run_sweep(const SweepSpec& spec) {
    detail::validate_spec(spec);
    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };
    std::string content;
    if (spec.mode == SweepMode::oracle) {
        Json records = Json::array({compare_oracles(spec)});
        Json j;
        j["meta"] = {{"tool", "ccascat"},
                     {"version", kArtifactVersion},
                     {"wall_time_s", wall()},
                     {"spec", spec_to_json(spec)}};
        j["records"] = std::move(records);
        content = j.dump(2);
        content.push_back('\n');
    } else {
        const SweepTable t = run_sweep_table(spec);
        if (spec.format == OutputFormat::csv) {
            content = table_to_csv(t);
        } else {
            Json j;
            j["meta"] = {{"tool", "ccascat"},
                         {"version", kArtifactVersion},
                         {"wall_time_s", wall()},
                         {"spec", spec_to_json(spec)}};
            j["records"] = table_to_records(t);
            content = j.dump(2);
            content.push_back('\n');
        }
    }
    if (!spec.out.empty()) {
        std::ofstream f(spec.out, std::ios::binary);
        if (!f) throw ConfigError("out: cannot open '" + spec.out + "'");
        f << content;
    }
    return content;
}

}  // namespace ccas
