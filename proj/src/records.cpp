#include "ellab/records.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace ellab {

using nlohmann::json;

namespace {

json metric_to_json(const MetricRow& m) {
    return json{{"type", "metric"},
                {"step", m.step},
                {"episode_return_mean", m.episode_return_mean},
                {"intrinsic_mean", m.intrinsic_mean},
                {"intrinsic_std", m.intrinsic_std},
                {"policy_loss", m.policy_loss},
                {"value_loss", m.value_loss},
                {"entropy", m.entropy},
                {"idm_loss", m.idm_loss},
                {"steps_per_second", m.steps_per_second}};
}

MetricRow metric_from_json(const json& j) {
    MetricRow m;
    m.step = j.at("step").get<long>();
    m.episode_return_mean = j.at("episode_return_mean").get<double>();
    m.intrinsic_mean = j.at("intrinsic_mean").get<double>();
    m.intrinsic_std = j.at("intrinsic_std").get<double>();
    m.policy_loss = j.at("policy_loss").get<double>();
    m.value_loss = j.at("value_loss").get<double>();
    m.entropy = j.at("entropy").get<double>();
    m.idm_loss = j.at("idm_loss").get<double>();
    m.steps_per_second = j.at("steps_per_second").get<double>();
    return m;
}

}  // namespace

void write_run_record(std::ostream& out, const RunRecord& rec) {
    json header{{"type", "header"},
                {"fingerprint", rec.fingerprint},
                {"seed", rec.seed},
                {"config", rec.config}};
    out << header.dump() << "\n";
    for (const MetricRow& m : rec.metrics) out << metric_to_json(m).dump() << "\n";
    json footer{{"type", "status"}, {"status", rec.status}};
    if (!rec.error.empty()) footer["error"] = rec.error;
    out << footer.dump() << "\n";
}

RunRecord read_run_record(std::istream& in) {
    RunRecord rec;
    std::string line;
    bool have_header = false;
    long last_step = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "header") {
            rec.fingerprint = j.at("fingerprint").get<std::string>();
            rec.seed = j.at("seed").get<std::uint64_t>();
            rec.config = j.at("config").get<std::map<std::string, std::string>>();
            have_header = true;
        } else if (type == "metric") {
            MetricRow m = metric_from_json(j);
            if (m.step <= last_step)
                throw std::runtime_error("run record: metric steps not strictly increasing");
            last_step = m.step;
            rec.metrics.push_back(m);
        } else if (type == "status") {
            rec.status = j.at("status").get<std::string>();
            if (j.contains("error")) rec.error = j.at("error").get<std::string>();
        } else {
            throw std::runtime_error("run record: unknown line type '" + type + "'");
        }
    }
    if (!have_header) throw std::runtime_error("run record: missing header line");
    return rec;
}

double final_score(const RunRecord& rec) {
    if (rec.metrics.empty()) return 0.0;
    const std::size_t n = rec.metrics.size();
    const std::size_t window = std::max<std::size_t>(1, (n + 9) / 10);
    double sum = 0.0;
    for (std::size_t i = n - window; i < n; ++i) sum += rec.metrics[i].episode_return_mean;
    return sum / static_cast<double>(window);
}

ConfigMap parse_config_file(std::istream& in) {
    ConfigMap cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        if (value.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty value for key '" + key + "'");
        cfg[key] = value;
    }
    return cfg;
}

std::string config_fingerprint(const ConfigMap& cfg) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto feed = [&h](const std::string& s) {
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ull;
        }
    };
    for (const auto& [key, value] : cfg) {  // std::map iterates sorted
        if (key == "seed" || key == "seeds" || key == "timing" || key == "trace" || key == "out")
            continue;
        feed(key);
        feed("=");
        feed(value);
        feed("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void write_bonus_trace(std::ostream& out, const TraceHeader& h,
                       const std::vector<BonusTrace>& steps) {
    json header{{"type", "header"},
                {"algo", to_string(h.algo)},
                {"extractor", to_string(h.extractor)},
                {"count_form", h.count_form == CountForm::FirstVisit ? "first_visit" : "inverse_sqrt"},
                {"alpha", h.alpha},
                {"ridge", h.ridge},
                {"feature_dim", h.feature_dim},
                {"num_envs", h.num_envs},
                {"episodic", h.episodic}};
    out << header.dump() << "\n";
    auto key_hex = [](const std::string& key) {
        static const char* digits = "0123456789abcdef";
        std::string hex;
        hex.reserve(key.size() * 2);
        for (const unsigned char c : key) {
            hex.push_back(digits[c >> 4]);
            hex.push_back(digits[c & 0xF]);
        }
        return hex;
    };
    for (const BonusTrace& t : steps) {
        json j{{"type", "step"}, {"env", t.env}, {"episode", t.episode}, {"bonus", t.bonus}};
        if (!t.phi.empty()) j["phi"] = t.phi;
        if (!t.phi_prev.empty()) j["phi_prev"] = t.phi_prev;
        if (!t.key.empty()) j["key"] = key_hex(t.key);
        if (h.algo == BonusAlgo::NovelD) {
            j["b_next"] = t.b_next;
            j["b_prev"] = t.b_prev;
        }
        if (!t.pred.empty()) j["pred"] = t.pred;
        if (!t.target.empty()) j["target"] = t.target;
        out << j.dump() << "\n";
    }
}

ReplayResult replay_bonus_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("bonus trace: empty file");
    const json hj = json::parse(line);
    if (hj.at("type").get<std::string>() != "header")
        throw std::runtime_error("bonus trace: first line is not a header");

    const BonusAlgo algo = bonus_algo_from(hj.at("algo").get<std::string>());
    const CountForm form = hj.at("count_form").get<std::string>() == "first_visit"
                               ? CountForm::FirstVisit
                               : CountForm::InverseSqrt;
    const double alpha = hj.at("alpha").get<double>();
    const double ridge = hj.at("ridge").get<double>();
    const int dim = hj.at("feature_dim").get<int>();
    const int num_envs = hj.at("num_envs").get<int>();
    const bool episodic = hj.at("episodic").get<bool>();

    std::vector<EllipticalTracker> trackers;
    if (algo == BonusAlgo::E3b) {
        trackers.reserve(num_envs);
        for (int e = 0; e < num_envs; ++e) trackers.emplace_back(dim, ridge);
    }
    std::vector<std::unordered_map<std::string, long>> tables(num_envs);
    std::vector<long> episode(num_envs, -1);

    auto key_bytes = [](const std::string& hex) {
        std::string key;
        key.reserve(hex.size() / 2);
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            return c - 'a' + 10;
        };
        for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
            key.push_back(static_cast<char>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
        return key;
    };

    ReplayResult result;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        if (j.at("type").get<std::string>() != "step") continue;
        const int env = j.at("env").get<int>();
        const long ep = j.at("episode").get<long>();
        const double logged = j.at("bonus").get<double>();
        if (episodic && ep != episode.at(env)) {
            episode[env] = ep;
            if (!trackers.empty()) trackers[env].reset();
            tables[env].clear();
        }
        double recomputed = 0.0;
        switch (algo) {
            case BonusAlgo::E3b: {
                const Vec phi = j.at("phi").get<Vec>();
                recomputed = trackers[env].observe(phi);
                break;
            }
            case BonusAlgo::Count: {
                const long n = ++tables[env][key_bytes(j.at("key").get<std::string>())];
                recomputed = form == CountForm::FirstVisit ? (n == 1 ? 1.0 : 0.0)
                                                           : 1.0 / std::sqrt(double(n));
                break;
            }
            case BonusAlgo::NovelD: {
                const long n = ++tables[env][key_bytes(j.at("key").get<std::string>())];
                const double gate = n == 1 ? 1.0 : 0.0;
                recomputed = std::max(0.0, j.at("b_next").get<double>() -
                                               alpha * j.at("b_prev").get<double>()) *
                             gate;
                break;
            }
            case BonusAlgo::Ride: {
                const Vec a = j.at("phi_prev").get<Vec>();
                const Vec b = j.at("phi").get<Vec>();
                double sq = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) sq += (b[i] - a[i]) * (b[i] - a[i]);
                const long n = ++tables[env][key_bytes(j.at("key").get<std::string>())];
                recomputed = std::sqrt(sq) / std::sqrt(static_cast<double>(n));
                break;
            }
            case BonusAlgo::Icm: {
                const Vec p = j.at("pred").get<Vec>();
                const Vec t = j.at("target").get<Vec>();
                double sq = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - t[i]) * (p[i] - t[i]);
                recomputed = 0.5 * sq;
                break;
            }
            case BonusAlgo::Rnd: {
                const Vec p = j.at("pred").get<Vec>();
                const Vec t = j.at("target").get<Vec>();
                double sq = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - t[i]) * (p[i] - t[i]);
                recomputed = sq;
                break;
            }
            case BonusAlgo::None: break;
        }
        result.max_abs_diff = std::max(result.max_abs_diff, std::abs(recomputed - logged));
        ++result.steps;
    }
    return result;
}

}  // namespace ellab
