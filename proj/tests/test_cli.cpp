// Drives the ulp binary end to end through files in a scratch directory.

#include "ulp/ulp.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ulp;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ulp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(ULP_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" +
                                path("stderr.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string text(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, RankUniformKeepsIdOrder) {
    ASSERT_EQ(run("gen-synthetic --out " + path("syn") + " --height 14 --width 4 --channels 3 --importance uniform"), 0);
    ASSERT_EQ(run("rank --importance " + path("syn/synth_0000.imp.ftb") + " --out " + path("rank.csv")), 0);
    EXPECT_EQ(text("rank.csv"),
              "rank,channel,index,score\n0,0,0,28\n1,0,1,28\n2,1,0,28\n3,1,1,28\n4,2,0,28\n5,2,1,28\n");
}

TEST_F(Cli, ProtectThenReceiveLossless) {
    ASSERT_EQ(run("gen-synthetic --out " + path("syn") + " --height 14 --width 8 --channels 40"), 0);
    const std::string f = path("syn/synth_0000.ftb");
    ASSERT_EQ(run("protect --input " + f + " --importance " + path("syn/synth_0000.imp.ftb") +
                  " --scheme fec_30_70 --out " + path("s.pks") + " --plan " + path("plan.json")),
              0);
    ASSERT_EQ(run("receive --input " + path("s.pks") + " --plan " + path("plan.json") + " --out " +
                  path("rx.ftb") + " --report " + path("report.json") + " --reference " + f),
              0);
    auto report = nlohmann::json::parse(text("report.json"));
    EXPECT_EQ(report["total"], 80);
    EXPECT_EQ(report["zero_filled"], 24);
    EXPECT_EQ(report["received"], 56);
    EXPECT_EQ(report["recovery_rate"], 1.0);

    // Kept regions match the lossless reconstruction bit for bit.
    auto original = ftb::read_real_tensor<FeatureTag>(read_file(f));
    auto lossless = dequantize(quantize(original));
    auto rx = ftb::read_real_tensor<FeatureTag>(read_file(path("rx.ftb")));
    auto plan = session_from_json(nlohmann::json::parse(text("plan.json"))).plan;
    std::set<PacketId> dropped(plan.dropped.begin(), plan.dropped.end());
    const Geometry& g = plan.geometry;
    for (std::size_t n = 0; n < g.data_packet_count(); ++n) {
        const PacketId id = g.id_at(n);
        for (std::size_t t = 0; t < g.payload_bytes(); ++t) {
            const std::size_t k = g.offset(id) + t;
            ASSERT_EQ(rx.data()[k], dropped.contains(id) ? 0.0f : lossless.data()[k]);
        }
    }
}

TEST_F(Cli, PipelineIsReproducible) {
    ASSERT_EQ(run("gen-synthetic --out " + path("syn") + " --count 2 --height 14 --width 4 --channels 32 --seed 5"), 0);
    auto pipeline = [&](const std::string& tag) {
        const std::string s = path("syn/synth_0001");
        EXPECT_EQ(run("protect --input " + s + ".ftb --importance " + s + ".imp.ftb --scheme fec_20_80 --out " +
                      path(tag + ".pks") + " --plan " + path(tag + ".json") + " --summary " + path(tag + ".txt")),
                  0);
        EXPECT_EQ(run("transmit --input " + path(tag + ".pks") + " --out " + path(tag + ".rx.pks") +
                      " --pl 0.3 --seed 9 --log " + path(tag + ".log.csv")),
                  0);
        EXPECT_EQ(run("receive --input " + path(tag + ".rx.pks") + " --plan " + path(tag + ".json") + " --out " +
                      path(tag + ".ftb") + " --report " + path(tag + ".report.json")),
                  0);
        EXPECT_EQ(run("sweep --input " + path("syn") + " --scheme unprotected,fec_20_80 --pl-grid 0.1,0.5 --trials 3 "
                      "--out " + path(tag + ".csv")),
                  0);
    };
    pipeline("a");
    pipeline("b");
    for (const std::string ext : {".pks", ".json", ".txt", ".rx.pks", ".log.csv", ".ftb", ".report.json", ".csv",
                                  ".summary.json"}) {
        EXPECT_EQ(text("a" + ext), text("b" + ext)) << ext;
        EXPECT_FALSE(text("a" + ext).empty()) << ext;
    }
    EXPECT_TRUE(text("a.csv").starts_with("# ulp-sweep-csv v1"));
}

TEST_F(Cli, OrderedTransmitAndConfigFile) {
    ASSERT_EQ(run("gen-synthetic --out " + path("syn") + " --height 7 --width 4 --channels 20 --importance packet_scores"), 0);
    const std::string s = path("syn/synth_0000");
    ASSERT_EQ(run("packetize --input " + s + ".ftb --out " + path("p.pks") + " --plan " + path("p.json")), 0);
    ASSERT_EQ(run("transmit --input " + path("p.pks") + " --out " + path("rx.pks") + " --mode drop_least --fraction 0.25"
                  " --importance " + s + ".imp.ftb"),
              0);
    EXPECT_EQ(wire::decode_stream(read_file(path("rx.pks"))).packets.size(), 15u);

    std::ofstream(path("sweep.ini")) << "[sweep]\ninput=" << path("syn") << "\nmode=drop_most\nfraction=0.5\ntrials=1\nout="
                                     << path("cfg.csv") << "\n";
    ASSERT_EQ(run("--config " + path("sweep.ini") + " sweep"), 0) << text("stderr.txt");
    EXPECT_NE(text("cfg.csv").find(",drop_most,0.5,0,"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("protect --input"), 2);
    std::ofstream(path("junk.ftb")) << "not a tensor";
    EXPECT_EQ(run("packetize --input " + path("junk.ftb") + " --out " + path("o") + " --plan " + path("p")), 4);
    EXPECT_NE(text("stderr.txt").find("format error"), std::string::npos);
    EXPECT_EQ(run("sweep --input " + path("missing_dir")), 3);
    ASSERT_EQ(run("gen-synthetic --out " + path("syn") + " --height 7 --width 2 --channels 2"), 0);
    EXPECT_EQ(run("protect --input " + path("syn/synth_0000.ftb") + " --scheme fec_50_50 --out " + path("o") +
                  " --plan " + path("p")),
              3);
    EXPECT_EQ(run("packetize --input " + path("syn/synth_0000.ftb") + " --r 3 --out " + path("o") + " --plan " +
                  path("p")),
              5);
}
