#pragma once

// Monte Carlo and ordered-loss experiment sweeps over a directory of
// feature/importance tensor pairs.

#include "ulp/channel.hpp"
#include "ulp/ftb.hpp"
#include "ulp/importance.hpp"
#include "ulp/plan.hpp"
#include "ulp/receiver.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace ulp::harness {

enum class Mode { Iid, DropMost, DropLeast };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::Iid: return "iid";
        case Mode::DropMost: return "drop_most";
        default: return "drop_least";
    }
}

inline Mode parse_mode(const std::string& s) {
    if (s == "iid") return Mode::Iid;
    if (s == "drop_most" || s == "drop-most") return Mode::DropMost;
    if (s == "drop_least" || s == "drop-least") return Mode::DropLeast;
    throw ConfigError("unknown loss mode '" + s + "'");
}

struct ExperimentConfig {
    std::string input_dir;
    std::vector<Scheme> schemes{Scheme{}};
    Mode mode = Mode::Iid;
    std::vector<double> points{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};  // P_L or fraction
    std::size_t trials = 10;
    std::uint64_t seed = 1;
    std::uint32_t rows_per_packet = 7;
    std::size_t workers = 0;  // 0: hardware concurrency
    std::optional<std::string> emit_dir;

    void validate() const {
        if (trials == 0) throw ConfigError("trials must be at least 1");
        if (schemes.empty()) throw ConfigError("scheme list is empty");
        if (points.empty()) throw ConfigError("loss grid is empty");
        for (double p : points) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("grid value " + std::to_string(p) + " outside [0, 1]");
        }
        for (const auto& s : schemes) {
            if (s.drop_percent >= 100) throw ConfigError("scheme A must be below 100");
        }
    }

    bool needs_importance() const {
        return mode != Mode::Iid ||
               std::any_of(schemes.begin(), schemes.end(), [](const Scheme& s) { return s.is_protected(); });
    }
};

struct TensorPair {
    std::string id;
    FeatureTensor features;
    std::optional<ImportanceTensor> importance;
};

/// Pairs `NAME.ftb` feature files with `NAME.imp.ftb` importance files, sorted by name.
inline std::vector<TensorPair> load_pairs(const std::string& dir, bool need_importance) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("input '" + dir + "' is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string file = entry.path().filename().string();
        if (!entry.is_regular_file() || !file.ends_with(".ftb") || file.ends_with(".imp.ftb")) continue;
        names.push_back(file.substr(0, file.size() - 4));
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw ConfigError("no .ftb feature tensors in '" + dir + "'");

    std::vector<TensorPair> out;
    for (const auto& name : names) {
        TensorPair pair;
        pair.id = name;
        const fs::path base = fs::path(dir) / name;
        pair.features = ftb::read_real_tensor<FeatureTag>(read_file(base.string() + ".ftb"));
        const std::string imp_path = base.string() + ".imp.ftb";
        if (fs::exists(imp_path)) {
            pair.importance = ftb::read_real_tensor<ImportanceTag>(read_file(imp_path));
            if (pair.importance->shape() != pair.features.shape()) {
                throw ConfigError("importance for '" + name + "' has a different shape");
            }
        } else if (need_importance) {
            throw ConfigError("missing importance tensor '" + imp_path + "'");
        }
        out.push_back(std::move(pair));
    }
    return out;
}

struct ResultRow {
    std::string tensor;
    std::string scheme;
    Mode mode = Mode::Iid;
    double point = 0.0;
    std::size_t trial = 0;
    double loss_rate = 0.0;      // realized share of transmitted packets lost
    double recovery_rate = 0.0;  // sent data packets delivered or rebuilt
    std::size_t zero_filled = 0;
    double mse = 0.0;            // against the unquantized features
};

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

inline Moments moments(std::span<const double> xs) {
    Moments m;
    if (xs.empty()) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

struct PointSummary {
    std::string scheme;
    Mode mode = Mode::Iid;
    double point = 0.0;
    std::size_t rows = 0;
    Moments loss_rate;
    Moments recovery_rate;
    Moments zero_filled;
    Moments mse;
};

struct SweepResult {
    std::vector<ResultRow> rows;
    std::vector<PointSummary> summary;
};

inline channel::Config channel_config(Mode mode, double point, std::uint64_t seed) {
    switch (mode) {
        case Mode::Iid: return channel::Iid{point, seed};
        case Mode::DropMost: return channel::DropMostImportant{point};
        default: return channel::DropLeastImportant{point};
    }
}

/// Seed of one trial. Independent of the scheme so that every scheme sees the
/// same loss pattern at a given (tensor, point, trial).
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t tensor, std::size_t point, std::size_t trial) {
    return channel::derive_seed(channel::derive_seed(channel::derive_seed(seed, tensor), point), trial);
}

/// Runs `jobs` tasks on a bounded pool; task i writes only its own slot.
inline void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& task) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, jobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    std::mutex mu;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < jobs && !failed; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::string format_point(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", p);
    return buf;
}

/// Called with each reconstruction when tensors are emitted.
using EmitFn = std::function<void(const ResultRow&, const FeatureTensor&)>;

inline SweepResult run_sweep(const std::vector<TensorPair>& pairs, const ExperimentConfig& cfg,
                             const EmitFn& emit = {}) {
    cfg.validate();
    struct Prepared {
        std::optional<PacketRanking> ranking;
        std::vector<Packet> stream;
        TransmissionPlan plan;
        float q_min = 0.0f;
        float q_max = 0.0f;
    };

    // One protected stream per (tensor, scheme); channel trials reuse it.
    std::vector<Prepared> prepared(pairs.size() * cfg.schemes.size());
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        const auto& pair = pairs[t];
        const Geometry g{pair.features.shape(), cfg.rows_per_packet};
        validate_geometry(g);
        const QuantizedTensor q = quantize(pair.features);
        std::optional<PacketRanking> ranking;
        if (pair.importance) ranking = packet_importance(*pair.importance, g);
        if (!ranking && cfg.needs_importance()) throw ConfigError("missing importance for '" + pair.id + "'");
        for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
            Prepared& p = prepared[t * cfg.schemes.size() + s];
            p.ranking = ranking;
            p.plan = cfg.schemes[s].is_protected() ? plan_fec_ab(*ranking, cfg.schemes[s], g.data_packet_count())
                                                   : unprotected_plan(g);
            p.plan.scheme = cfg.schemes[s];
            p.stream = protect(q, p.plan);
            p.q_min = q.q_min();
            p.q_max = q.q_max();
        }
    }

    const std::size_t per_scheme = cfg.points.size() * cfg.trials;
    const std::size_t jobs = prepared.size() * per_scheme;
    SweepResult result;
    result.rows.resize(jobs);

    parallel_for(jobs, cfg.workers, [&](std::size_t job) {
        const std::size_t prep_idx = job / per_scheme;
        const std::size_t tensor = prep_idx / cfg.schemes.size();
        const std::size_t scheme = prep_idx % cfg.schemes.size();
        const std::size_t point = (job % per_scheme) / cfg.trials;
        const std::size_t trial = job % cfg.trials;
        const Prepared& prep = prepared[prep_idx];

        const auto ch = channel_config(cfg.mode, cfg.points[point], trial_seed(cfg.seed, tensor, point, trial));
        const auto mask = channel::survival_mask(prep.stream, ch, prep.ranking ? &*prep.ranking : nullptr);
        std::vector<Packet> survivors;
        survivors.reserve(prep.stream.size());
        std::size_t lost = 0;
        for (std::size_t k = 0; k < prep.stream.size(); ++k) {
            if (mask[k]) survivors.push_back(prep.stream[k]);
            else ++lost;
        }
        Reception rx = receive(survivors, prep.plan, prep.q_min, prep.q_max, &pairs[tensor].features);

        ResultRow& row = result.rows[job];
        row.tensor = pairs[tensor].id;
        row.scheme = cfg.schemes[scheme].name();
        row.mode = cfg.mode;
        row.point = cfg.points[point];
        row.trial = trial;
        row.loss_rate = prep.stream.empty() ? 0.0 : static_cast<double>(lost) / static_cast<double>(prep.stream.size());
        row.recovery_rate = rx.report.recovery_rate();
        row.zero_filled = rx.report.zero_filled;
        row.mse = rx.report.tensor_mse.value_or(0.0);
        if (emit) emit(row, rx.tensor);
    });

    // Aggregate per (scheme, point) across tensors and trials, in config order.
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
        for (std::size_t p = 0; p < cfg.points.size(); ++p) {
            std::vector<double> loss, rec, zf, err;
            for (std::size_t t = 0; t < pairs.size(); ++t) {
                for (std::size_t tr = 0; tr < cfg.trials; ++tr) {
                    const auto& row = result.rows[((t * cfg.schemes.size() + s) * cfg.points.size() + p) * cfg.trials + tr];
                    loss.push_back(row.loss_rate);
                    rec.push_back(row.recovery_rate);
                    zf.push_back(static_cast<double>(row.zero_filled));
                    err.push_back(row.mse);
                }
            }
            PointSummary ps;
            ps.scheme = cfg.schemes[s].name();
            ps.mode = cfg.mode;
            ps.point = cfg.points[p];
            ps.rows = loss.size();
            ps.loss_rate = moments(loss);
            ps.recovery_rate = moments(rec);
            ps.zero_filled = moments(zf);
            ps.mse = moments(err);
            result.summary.push_back(ps);
        }
    }
    return result;
}

inline constexpr const char* kCsvSchema = "# ulp-sweep-csv v1";

inline std::string rows_csv(std::span<const ResultRow> rows) {
    std::ostringstream os;
    os << kCsvSchema << " generator=" << channel::kGeneratorName << " field=0x11D\n";
    os << "tensor,scheme,mode,point,trial,loss_rate,recovery_rate,zero_filled,mse\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%zu,%.9g,%.9g,%zu,%.9g\n", r.tensor.c_str(), r.scheme.c_str(),
                      to_string(r.mode).c_str(), format_point(r.point).c_str(), r.trial, r.loss_rate,
                      r.recovery_rate, r.zero_filled, r.mse);
        os << buf;
    }
    return os.str();
}

inline nlohmann::json summary_json(const SweepResult& result, const ExperimentConfig& cfg) {
    auto mom = [](const Moments& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.stddev}}; };
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : result.summary) {
        points.push_back({{"scheme", p.scheme},
                          {"mode", to_string(p.mode)},
                          {"point", p.point},
                          {"rows", p.rows},
                          {"loss_rate", mom(p.loss_rate)},
                          {"recovery_rate", mom(p.recovery_rate)},
                          {"zero_filled", mom(p.zero_filled)},
                          {"mse", mom(p.mse)}});
    }
    return {{"format", "ulp-sweep-summary"},
            {"version", 1},
            {"generator", channel::kGeneratorName},
            {"field_polynomial", "0x11D"},
            {"construction", "systematic-vandermonde"},
            {"seed", cfg.seed},
            {"trials", cfg.trials},
            {"rows_per_packet", cfg.rows_per_packet},
            {"points", std::move(points)}};
}

} // namespace ulp::harness
