#ifndef SIMWAVE_CONFIG_HPP
#define SIMWAVE_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "simwave/channel.hpp"
#include "simwave/common.hpp"
#include "simwave/metrics.hpp"
#include "simwave/optimizer.hpp"

// TOML-subset config loader: [section] headers, key = value lines with
// numbers, booleans, quoted strings and flat arrays. Covers everything the
// experiment configs need.

namespace simwave::cfg {

using TomlValue = std::variant<double, bool, std::string, std::vector<double>>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline TomlValue parse_scalar(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) throw config_error("empty value at line " + std::to_string(line_no));
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') {
            throw config_error("unterminated string at line " + std::to_string(line_no));
        }
        return v.substr(1, v.size() - 2);
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("bad value '" + v + "' at line " + std::to_string(line_no));
    }
}

}  // namespace detail

inline TomlTable parse_toml(std::istream& in) {
    TomlTable table;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw config_error("bad section header at line " + std::to_string(line_no));
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            table[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("empty key at line " + std::to_string(line_no));
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') {
                throw config_error("unterminated array at line " + std::to_string(line_no));
            }
            std::vector<double> arr;
            std::string body = value.substr(1, value.size() - 2);
            std::stringstream ss(body);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = detail::trim(item);
                if (item.empty()) continue;
                arr.push_back(std::get<double>(detail::parse_scalar(item, line_no)));
            }
            table[section][key] = arr;
        } else {
            table[section][key] = detail::parse_scalar(value, line_no);
        }
    }
    return table;
}

inline TomlTable parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    return parse_toml(in);
}

class TomlReader {
  public:
    explicit TomlReader(TomlTable table) : table_(std::move(table)) {}

    double num(const std::string& sec, const std::string& key, double fallback) const {
        const TomlValue* v = find(sec, key);
        if (!v) return fallback;
        if (const double* d = std::get_if<double>(v)) return *d;
        throw config_error(sec + "." + key + " must be a number");
    }

    int integer(const std::string& sec, const std::string& key, int fallback) const {
        return static_cast<int>(num(sec, key, fallback));
    }

    std::string str(const std::string& sec, const std::string& key,
                    const std::string& fallback) const {
        const TomlValue* v = find(sec, key);
        if (!v) return fallback;
        if (const std::string* s = std::get_if<std::string>(v)) return *s;
        throw config_error(sec + "." + key + " must be a string");
    }

    std::vector<double> array(const std::string& sec, const std::string& key,
                              std::vector<double> fallback) const {
        const TomlValue* v = find(sec, key);
        if (!v) return fallback;
        if (const auto* a = std::get_if<std::vector<double>>(v)) return *a;
        throw config_error(sec + "." + key + " must be an array");
    }

  private:
    const TomlValue* find(const std::string& sec, const std::string& key) const {
        const auto s = table_.find(sec);
        if (s == table_.end()) return nullptr;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        return &k->second;
    }

    TomlTable table_;
};

enum class SweepKind {
    subbands,
    users,
    snr,
    bandwidth,
    freq_response,
    goodput_elements,
    convergence
};

inline std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::subbands: return "subbands";
        case SweepKind::users: return "users";
        case SweepKind::snr: return "snr";
        case SweepKind::bandwidth: return "bandwidth";
        case SweepKind::freq_response: return "freq_response";
        case SweepKind::goodput_elements: return "goodput_elements";
        case SweepKind::convergence: return "convergence";
    }
    return "unknown";
}

inline std::string to_string(opt::Mode m) {
    switch (m) {
        case opt::Mode::full: return "full";
        case opt::Mode::last_layer_only: return "last-layer-only";
        case opt::Mode::uniform_power: return "uniform-power";
        case opt::Mode::random_phase: return "random-phase";
    }
    return "unknown";
}

inline opt::Mode mode_from_string(const std::string& s) {
    if (s == "full") return opt::Mode::full;
    if (s == "last-layer-only") return opt::Mode::last_layer_only;
    if (s == "uniform-power") return opt::Mode::uniform_power;
    if (s == "random-phase") return opt::Mode::random_phase;
    throw config_error("unknown optimizer mode: " + s);
}

struct SweepSpec {
    SweepKind kind = SweepKind::subbands;
    std::vector<double> values;
    int num_seeds = 1;
    std::uint64_t master_seed = 1;
    opt::Mode optimizer_mode = opt::Mode::full;
};

// Metasurface description in fair-comparison terms: a fixed total element
// budget M_total = Mx * My_total split evenly across L layers along y.
struct SurfaceSpec {
    int num_layers = 1;
    int elements_x = 10;
    int elements_y_total = 10;
    double element_spacing = 5.56e-3;  // m
    double layer_spacing = 0.0;        // m; 0 -> lambda_c / 2
    double antenna_radius = 0.0027;    // m
    double radiation_resistance = 50.0;

    int total_elements() const { return elements_x * elements_y_total; }
};

struct AppConfig {
    chan::ScenarioConfig scenario;
    SurfaceSpec surface;
    opt::Hyper hyper;
    metrics::GoodputParams goodput;
    SweepSpec sweep;
};

inline net::SimStack build_stack(const SurfaceSpec& surf, double fc) {
    if (surf.num_layers < 1) throw config_error("layer count must be >= 1");
    if (surf.elements_y_total % surf.num_layers != 0) {
        throw config_error("total y-elements must divide evenly across layers");
    }
    net::SimStack stack;
    stack.num_layers_L = surf.num_layers;
    stack.layer_geometry.nx = surf.elements_x;
    stack.layer_geometry.ny = surf.elements_y_total / surf.num_layers;
    stack.layer_geometry.dx = surf.element_spacing;
    stack.layer_geometry.dy = surf.element_spacing;
    stack.antenna.radius_a = surf.antenna_radius;
    stack.antenna.radiation_resistance_R = surf.radiation_resistance;
    stack.layer_spacing = surf.layer_spacing > 0.0
                              ? surf.layer_spacing
                              : 0.5 * constants::speed_of_light / fc;
    return stack;
}

// All defaults follow the reference wideband scenario: 15 GHz band at
// 27 GHz, 50 W budget, -70 dB noise, lambda_c/2 spacing, Nt = K.
inline AppConfig load_config(const TomlReader& r) {
    AppConfig a;

    const double fc = r.num("scenario", "center_frequency_hz", 27e9);
    const double bw = r.num("scenario", "bandwidth_hz", 15e9);
    const int nf = r.integer("scenario", "num_subbands", 1);

    a.surface.num_layers = r.integer("scenario", "num_layers", 1);
    a.surface.elements_x = r.integer("scenario", "elements_x", 10);
    a.surface.elements_y_total = r.integer("scenario", "elements_y_total", 10);
    a.surface.element_spacing = r.num("scenario", "element_spacing_m", 5.56e-3);
    a.surface.layer_spacing = r.num("scenario", "layer_spacing_m", 0.0);
    a.surface.antenna_radius = r.num("scenario", "antenna_radius_m", 0.0027);
    a.surface.radiation_resistance = r.num("scenario", "radiation_resistance_ohm", 50.0);

    a.scenario.grid = chan::build_subband_grid(fc, bw, nf);
    a.scenario.stack = build_stack(a.surface, fc);
    a.scenario.num_users_K = r.integer("scenario", "num_users", 2);
    a.scenario.num_tx_Nt = r.integer("scenario", "num_tx", 0);
    if (a.scenario.num_tx_Nt <= 0) a.scenario.num_tx_Nt = a.scenario.num_users_K;
    a.scenario.total_power_P = r.num("scenario", "total_power_w", 50.0);
    a.scenario.noise_power_sigma2 = r.num("scenario", "noise_power_w", 1e-7);
    a.scenario.path_loss_alpha = r.num("scenario", "path_loss_alpha", 2.0);
    a.scenario.bs_to_first_layer = r.num("scenario", "bs_to_first_layer_m", 0.0);
    a.scenario.bs_spacing = r.num("scenario", "bs_spacing_m", 0.0);
    a.scenario.sampling.distance_min = r.num("scenario", "distance_min_m", 10.0);
    a.scenario.sampling.distance_max = r.num("scenario", "distance_max_m", 20.0);
    a.scenario.sampling.azimuth_half_range =
        r.num("scenario", "azimuth_half_range_deg", 60.0) * constants::pi / 180.0;
    a.scenario.sampling.elevation_half_range =
        r.num("scenario", "elevation_half_range_deg", 30.0) * constants::pi / 180.0;
    a.scenario.sampling.path_count_E = r.integer("scenario", "paths_per_user", 1);
    a.scenario.rng_seed =
        static_cast<std::uint64_t>(r.num("scenario", "rng_seed", 1.0));

    a.hyper.eta0 = r.num("optimizer", "eta0", 0.1);
    a.hyper.backtrack_factor = r.num("optimizer", "backtrack_factor", 0.5);
    a.hyper.max_halvings = r.integer("optimizer", "max_halvings", 20);
    a.hyper.p1_max_iters = r.integer("optimizer", "p1_max_iters", 200);
    a.hyper.p2_max_iters = r.integer("optimizer", "p2_max_iters", 500);
    a.hyper.outer_max_iters = r.integer("optimizer", "outer_max_iters", 50);
    a.hyper.epsilon = r.num("optimizer", "epsilon", 1e-7);
    a.hyper.mode = mode_from_string(r.str("optimizer", "mode", "full"));

    a.goodput.bits_per_element_b = r.integer("goodput", "bits_per_element", 2);
    a.goodput.control_spectral_efficiency_eta =
        r.num("goodput", "control_spectral_efficiency", 2.0);
    a.goodput.symbols_per_slot_Ns = r.integer("goodput", "symbols_per_slot", 700);

    const std::string kind = r.str("sweep", "kind", "subbands");
    if (kind == "subbands") a.sweep.kind = SweepKind::subbands;
    else if (kind == "users") a.sweep.kind = SweepKind::users;
    else if (kind == "snr") a.sweep.kind = SweepKind::snr;
    else if (kind == "bandwidth") a.sweep.kind = SweepKind::bandwidth;
    else if (kind == "freq_response") a.sweep.kind = SweepKind::freq_response;
    else if (kind == "goodput_elements") a.sweep.kind = SweepKind::goodput_elements;
    else if (kind == "convergence") a.sweep.kind = SweepKind::convergence;
    else throw config_error("unknown sweep kind: " + kind);
    a.sweep.values = r.array("sweep", "values", {});
    a.sweep.num_seeds = r.integer("sweep", "num_seeds", 1);
    a.sweep.master_seed =
        static_cast<std::uint64_t>(r.num("sweep", "master_seed", 1.0));
    a.sweep.optimizer_mode = a.hyper.mode;

    return a;
}

inline AppConfig default_config() {
    return load_config(TomlReader(TomlTable{}));
}

inline AppConfig load_config_file(const std::string& path) {
    return load_config(TomlReader(parse_toml_file(path)));
}

}  // namespace simwave::cfg

#endif  // SIMWAVE_CONFIG_HPP
