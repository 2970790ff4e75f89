// ulp: command-line stages for unequal loss protection of feature tensors.
// Stages compose through files: FTB1 tensors, PKS1 packet streams and JSON plans.

#include "ulp/ulp.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace ulp;

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kConfig = 3,
    kFormat = 4,
    kIntegrity = 5,
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << text;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad grid value '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("grid '" + text + "' is empty");
    return out;
}

std::vector<Scheme> parse_schemes(const std::vector<std::string>& items) {
    std::vector<Scheme> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (!part.empty()) out.push_back(parse_scheme(part));
        }
    }
    return out;
}

FeatureTensor load_features(const std::string& path) {
    auto any = ftb::read_tensor(read_file(path));
    if (auto* q = std::get_if<QuantizedTensor>(&any)) return dequantize(*q);
    return std::get<FeatureTensor>(std::move(any));
}

ImportanceTensor load_importance(const std::string& path) {
    return ftb::read_real_tensor<ImportanceTag>(read_file(path));
}

// gen-synthetic ----------------------------------------------------------------

struct GenOptions {
    std::string out;
    std::size_t count = 1;
    std::uint32_t h = 56, w = 56, c = 256, r = 7;
    std::uint64_t seed = 1;
    std::string importance = "gaussian_blob";
};

int run_gen(const GenOptions& o) {
    const Geometry g{{o.h, o.w, o.c}, o.r};
    validate_geometry(g);
    fs::create_directories(o.out);
    for (std::size_t n = 0; n < o.count; ++n) {
        const std::uint64_t seed = channel::derive_seed(o.seed, n);
        std::vector<float> feat(g.shape.size());
        for (std::size_t k = 0; k < feat.size(); ++k) {
            feat[k] = static_cast<float>(4.0 * channel::uniform(seed, k) - 1.0);
        }

        synth::Kind kind;
        if (o.importance == "uniform") {
            kind = synth::Uniform{};
        } else if (o.importance == "gaussian_blob") {
            kind = synth::GaussianBlob{channel::uniform(seed ^ 1, 0) * (o.h - 1), channel::uniform(seed ^ 1, 1) * (o.w - 1),
                                       std::max(o.h, o.w) / 6.0};
        } else if (o.importance == "packet_scores") {
            synth::PerPacketAssigned a;
            for (std::size_t p = 0; p < g.data_packet_count(); ++p) {
                a.scores[g.id_at(p)] = static_cast<float>(channel::uniform(seed ^ 2, p));
            }
            kind = std::move(a);
        } else if (o.importance != "random") {
            throw ConfigError("unknown importance kind '" + o.importance + "'");
        }
        ImportanceTensor imp;
        if (o.importance == "random") {
            std::vector<float> v(g.shape.size());
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>(channel::uniform(seed ^ 3, k));
            imp = ImportanceTensor(g.shape, std::move(v));
        } else {
            imp = synth_importance(kind, g);
        }

        char name[32];
        std::snprintf(name, sizeof name, "synth_%04zu", n);
        const fs::path base = fs::path(o.out) / name;
        write_file(base.string() + ".ftb", ftb::write_tensor(FeatureTensor(g.shape, std::move(feat))));
        write_file(base.string() + ".imp.ftb", ftb::write_tensor(imp));
    }
    std::cout << "wrote " << o.count << " tensor pair(s) to " << o.out << "\n";
    return kOk;
}

// rank --------------------------------------------------------------------------

int run_rank(const std::string& importance, std::uint32_t r, const std::string& out) {
    const auto ranking = packet_importance(load_importance(importance), r);
    std::ostringstream os;
    os << "rank,channel,index,score\n";
    auto order = ranking.order();
    char buf[64];
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", ranking.score(order[k]));
        os << k << ',' << order[k].channel << ',' << order[k].index << ',' << buf << '\n';
    }
    if (out.empty()) std::cout << os.str();
    else write_text(out, os.str());
    return kOk;
}

// packetize / protect -----------------------------------------------------------

void write_session(const std::vector<Packet>& stream, const Session& s, const std::string& out,
                   const std::string& plan_path, const std::string& summary_path) {
    write_file(out, wire::encode_stream(stream, s.plan.geometry.payload_bytes()));
    write_text(plan_path, dump(to_json(s)));
    if (!summary_path.empty()) write_text(summary_path, plan_summary(s.plan));
}

int run_packetize(const std::string& input, std::uint32_t r, const std::string& out, const std::string& plan_path) {
    const QuantizedTensor q = quantize(load_features(input));
    Session s{unprotected_plan({q.shape(), r}), q.q_min(), q.q_max()};
    write_session(protect(q, s.plan), s, out, plan_path, "");
    std::cout << "packetized " << s.plan.total << " packets\n";
    return kOk;
}

int run_protect(const std::string& input, const std::string& importance, const std::string& scheme_text,
                std::uint32_t r, const std::string& out, const std::string& plan_path, const std::string& summary) {
    const QuantizedTensor q = quantize(load_features(input));
    const Geometry g{q.shape(), r};
    validate_geometry(g);
    const Scheme scheme = parse_scheme(scheme_text);
    Session s{unprotected_plan(g), q.q_min(), q.q_max()};
    if (scheme.is_protected()) {
        if (importance.empty()) throw ConfigError("scheme " + scheme.name() + " needs --importance");
        s.plan = plan_fec_ab(packet_importance(load_importance(importance), g), scheme, g.data_packet_count());
    }
    const auto stream = protect(q, s.plan);
    write_session(stream, s, out, plan_path, summary);
    std::cout << s.plan.scheme.name() << ": " << stream.size() << " packets, " << s.plan.dropped.size()
              << " dropped, " << s.plan.groups.size() << " groups\n";
    return kOk;
}

// transmit ----------------------------------------------------------------------

struct TransmitOptions {
    std::string input, out, log, importance, mode = "iid";
    double pl = 0.0, fraction = 0.0;
    std::uint64_t seed = 1;
    std::uint32_t r = 7;
};

int run_transmit(const TransmitOptions& o) {
    const auto stream = wire::decode_stream(read_file(o.input));
    const auto mode = harness::parse_mode(o.mode);
    std::optional<PacketRanking> ranking;
    if (mode != harness::Mode::Iid) {
        if (o.importance.empty()) throw ConfigError("ordered loss mode needs --importance");
        ranking = packet_importance(load_importance(o.importance), o.r);
    }
    const auto cfg = harness::channel_config(mode, mode == harness::Mode::Iid ? o.pl : o.fraction, o.seed);
    const auto outcome = channel::transmit(stream.packets, cfg, ranking ? &*ranking : nullptr);
    write_file(o.out, wire::encode_stream(outcome.survivors, stream.payload_bytes));
    if (!o.log.empty()) write_text(o.log, channel::loss_log_csv(outcome.log));
    std::cout << "lost " << outcome.lost() << " of " << outcome.log.size() << " packets\n";
    return kOk;
}

// receive -----------------------------------------------------------------------

int run_receive(const std::string& input, const std::string& plan_path, const std::string& out,
                const std::string& report_path, const std::string& reference) {
    const auto stream = wire::decode_stream(read_file(input));
    const Session s = session_from_json(read_json(plan_path));
    std::optional<FeatureTensor> ref;
    if (!reference.empty()) ref = load_features(reference);
    const auto rx = receive(stream.packets, s.plan, s.q_min, s.q_max, ref ? &*ref : nullptr);
    write_file(out, ftb::write_tensor(rx.tensor));
    const std::string report = dump(to_json(rx.report));
    if (report_path.empty()) std::cout << report;
    else write_text(report_path, report);
    return kOk;
}

// sweep -------------------------------------------------------------------------

struct SweepOptions {
    std::string input, out = "sweep.csv", mode = "iid", pl_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
                       fraction, emit;
    std::vector<std::string> schemes{"unprotected"};
    std::size_t trials = 10, workers = 0;
    std::uint64_t seed = 1;
    std::uint32_t r = 7;
};

int run_sweep(const SweepOptions& o) {
    harness::ExperimentConfig cfg;
    cfg.input_dir = o.input;
    cfg.schemes = parse_schemes(o.schemes);
    cfg.mode = harness::parse_mode(o.mode);
    if (cfg.mode == harness::Mode::Iid) {
        cfg.points = parse_grid(o.pl_grid);
    } else {
        if (o.fraction.empty()) throw ConfigError("ordered loss modes need --fraction");
        cfg.points = parse_grid(o.fraction);
    }
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.rows_per_packet = o.r;
    cfg.workers = o.workers;
    cfg.validate();

    const auto pairs = harness::load_pairs(cfg.input_dir, cfg.needs_importance());
    harness::EmitFn emit;
    if (!o.emit.empty()) {
        fs::create_directories(o.emit);
        emit = [&](const harness::ResultRow& row, const FeatureTensor& t) {
            const std::string name = row.tensor + "__" + row.scheme + "__" + harness::to_string(row.mode) + "__" +
                                     harness::format_point(row.point) + "__t" + std::to_string(row.trial) + ".ftb";
            write_file((fs::path(o.emit) / name).string(), ftb::write_tensor(t));
        };
    }
    const auto result = harness::run_sweep(pairs, cfg, emit);

    write_text(o.out, harness::rows_csv(result.rows));
    fs::path summary = o.out;
    summary.replace_extension(".summary.json");
    write_text(summary.string(), dump(harness::summary_json(result, cfg)));
    std::cout << "wrote " << result.rows.size() << " rows to " << o.out << " and summary to " << summary.string()
              << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unequal loss protection for feature-tensor packet transmission"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "write random feature tensors with synthetic importance");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--count", gen.count, "number of tensor pairs");
    gen_cmd->add_option("--height", gen.h, "rows");
    gen_cmd->add_option("--width", gen.w, "columns");
    gen_cmd->add_option("--channels", gen.c, "channels");
    gen_cmd->add_option("--r", gen.r, "rows per packet");
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--importance", gen.importance, "uniform | gaussian_blob | packet_scores | random");

    std::string rank_imp, rank_out;
    std::uint32_t rank_r = 7;
    auto* rank_cmd = app.add_subcommand("rank", "rank packets by summed importance");
    rank_cmd->add_option("--importance,--input", rank_imp, "importance tensor (FTB1 real32)")->required();
    rank_cmd->add_option("--r", rank_r, "rows per packet");
    rank_cmd->add_option("--out", rank_out, "CSV output (stdout when omitted)");

    std::string pk_in, pk_out, pk_plan;
    std::uint32_t pk_r = 7;
    auto* pk_cmd = app.add_subcommand("packetize", "quantize and packetize without protection");
    pk_cmd->add_option("--input", pk_in, "feature tensor (FTB1)")->required();
    pk_cmd->add_option("--r", pk_r, "rows per packet");
    pk_cmd->add_option("--out", pk_out, "packet stream (PKS1)")->required();
    pk_cmd->add_option("--plan", pk_plan, "plan metadata (JSON)")->required();

    std::string pr_in, pr_imp, pr_scheme = "fec_50_50", pr_out, pr_plan, pr_summary;
    std::uint32_t pr_r = 7;
    auto* pr_cmd = app.add_subcommand("protect", "build an FEC_A_B plan and emit the protected stream");
    pr_cmd->add_option("--input", pr_in, "feature tensor (FTB1)")->required();
    pr_cmd->add_option("--importance", pr_imp, "importance tensor (FTB1 real32)");
    pr_cmd->add_option("--scheme", pr_scheme, "unprotected | fec_A_B");
    pr_cmd->add_option("--r", pr_r, "rows per packet");
    pr_cmd->add_option("--out", pr_out, "packet stream (PKS1)")->required();
    pr_cmd->add_option("--plan", pr_plan, "plan metadata (JSON)")->required();
    pr_cmd->add_option("--summary", pr_summary, "plan text record");

    TransmitOptions tx;
    auto* tx_cmd = app.add_subcommand("transmit", "pass a packet stream through a loss channel");
    tx_cmd->add_option("--input", tx.input, "packet stream (PKS1)")->required();
    tx_cmd->add_option("--out", tx.out, "surviving packets (PKS1)")->required();
    tx_cmd->add_option("--mode", tx.mode, "iid | drop_most | drop_least");
    tx_cmd->add_option("--pl", tx.pl, "iid loss probability");
    tx_cmd->add_option("--fraction", tx.fraction, "ordered-mode fraction");
    tx_cmd->add_option("--seed", tx.seed, "channel seed");
    tx_cmd->add_option("--importance", tx.importance, "importance tensor for ordered modes");
    tx_cmd->add_option("--r", tx.r, "rows per packet");
    tx_cmd->add_option("--log", tx.log, "loss log (CSV)");

    std::string rx_in, rx_plan, rx_out, rx_report, rx_ref;
    auto* rx_cmd = app.add_subcommand("receive", "decode, zero-fill and dequantize surviving packets");
    rx_cmd->add_option("--input", rx_in, "surviving packets (PKS1)")->required();
    rx_cmd->add_option("--plan", rx_plan, "plan metadata (JSON)")->required();
    rx_cmd->add_option("--out", rx_out, "reconstructed tensor (FTB1)")->required();
    rx_cmd->add_option("--report", rx_report, "recovery report (JSON, stdout when omitted)");
    rx_cmd->add_option("--reference", rx_ref, "original features for tensor_mse");

    SweepOptions sw;
    auto* sw_cmd = app.add_subcommand("sweep", "run loss sweeps over a directory of tensor pairs");
    sw_cmd->add_option("--input", sw.input, "directory of NAME.ftb / NAME.imp.ftb")->required();
    sw_cmd->add_option("--scheme", sw.schemes, "schemes, repeatable or comma separated");
    sw_cmd->add_option("--pl-grid", sw.pl_grid, "comma separated loss probabilities");
    sw_cmd->add_option("--fraction", sw.fraction, "comma separated fractions for ordered modes");
    sw_cmd->add_option("--trials", sw.trials, "trials per point");
    sw_cmd->add_option("--seed", sw.seed, "experiment seed");
    sw_cmd->add_option("--mode", sw.mode, "iid | drop_most | drop_least");
    sw_cmd->add_option("--out", sw.out, "CSV path; summary goes next to it");
    sw_cmd->add_option("--emit-tensors", sw.emit, "directory for reconstructed tensors");
    sw_cmd->add_option("--r", sw.r, "rows per packet");
    sw_cmd->add_option("--workers", sw.workers, "worker threads (0 = all cores)");
    app.set_config("--config", "", "INI file; sweep options go under a [sweep] section");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*rank_cmd) return run_rank(rank_imp, rank_r, rank_out);
        if (*pk_cmd) return run_packetize(pk_in, pk_r, pk_out, pk_plan);
        if (*pr_cmd) return run_protect(pr_in, pr_imp, pr_scheme, pr_r, pr_out, pr_plan, pr_summary);
        if (*tx_cmd) return run_transmit(tx);
        if (*rx_cmd) return run_receive(rx_in, rx_plan, rx_out, rx_report, rx_ref);
        if (*sw_cmd) return run_sweep(sw);
    } catch (const ConfigError& e) {
        std::cerr << "ulp: config error: " << e.what() << "\n";
        return kConfig;
    } catch (const FormatError& e) {
        std::cerr << "ulp: format error: " << e.what() << "\n";
        return kFormat;
    } catch (const Error& e) {
        std::cerr << "ulp: " << e.what() << "\n";
        return kIntegrity;
    } catch (const std::exception& e) {
        std::cerr << "ulp: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
