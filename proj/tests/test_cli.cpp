// End-to-end checks of the CLI surface: every subcommand, the file formats
// it reads and writes, and the machine-readable error channel.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "json.hpp"

#include "surrobridge/dataset.hpp"
#include "surrobridge/doe.hpp"
#include "surrobridge/surrogate.hpp"

using namespace surrobridge;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(SURROBRIDGE_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(raw);
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

fs::path work_dir() {
    static fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "surrobridge_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// handcrafted dataset with a smooth synthetic response; avoids FE runs in
// the train/predict round trips
void write_synthetic_dataset(const fs::path& csv) {
    const auto dist = doe::InputDistribution::bridge_default();
    const auto set = doe::lhs_sample(25, dist, 31);
    Dataset ds;
    ds.distribution = dist;
    ds.seed = 31;
    ds.inputs = set.points;
    for (const auto& p : set.points)
        ds.outputs.push_back(1e8 + 2e8 * (p[3] - 0.3) / 0.3 + 1e7 * (p[0] - 5.0) / 10.0);
    write_dataset(csv.string(), ds);
}

} // namespace

TEST_CASE("cli: doe emits a stratified, reproducible sample") {
    const auto dir = work_dir();
    const auto r1 = run_cli("doe --n 12 --seed 9 --out " + (dir / "pts.csv").string(), dir);
    REQUIRE(r1.exit_code == 0);

    const auto points = read_points_csv((dir / "pts.csv").string(), 4);
    REQUIRE(points.size() == 12);
    for (const auto& p : points) {
        CHECK(p[0] >= 5.0);
        CHECK(p[0] <= 15.0);
        CHECK(p[3] >= 0.30);
        CHECK(p[3] <= 0.60);
    }

    const std::string first = read_file(dir / "pts.csv");
    run_cli("doe --n 12 --seed 9 --out " + (dir / "pts2.csv").string(), dir);
    CHECK(read_file(dir / "pts2.csv") == first);

    SECTION("custom bounds as inline JSON") {
        const auto r = run_cli("doe --n 5 --seed 1 --bounds "
                               "'[[0,1],[0,1],[0,1],[0,1]]' --out " +
                                   (dir / "unit.csv").string(),
                               dir);
        REQUIRE(r.exit_code == 0);
        for (const auto& p : read_points_csv((dir / "unit.csv").string(), 4))
            for (double v : p) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
    }
}

TEST_CASE("cli: simulate writes a dataset with sidecar") {
    const auto dir = work_dir();
    run_cli("doe --n 2 --seed 5 --out " + (dir / "sim_pts.csv").string(), dir);
    const auto r = run_cli("simulate --points " + (dir / "sim_pts.csv").string() + " --out " +
                               (dir / "sim_ds.csv").string(),
                           dir);
    REQUIRE(r.exit_code == 0);
    const Dataset ds = read_dataset((dir / "sim_ds.csv").string());
    REQUIRE(ds.size() == 2);
    for (double q : ds.outputs) CHECK(q > 0);
    const auto meta = nlohmann::json::parse(read_file(dir / "sim_ds.meta.json"));
    CHECK(meta.at("generator").get<std::string>() == "mt19937_64");
    CHECK(meta.at("config_hash").get<std::string>().size() == 16);
    CHECK(meta.at("solver").at("sweep_step").get<double>() == 0.1);
}

TEST_CASE("cli: train, predict, evaluate round trip") {
    const auto dir = work_dir();
    write_synthetic_dataset(dir / "ds.csv");

    SECTION("kriging") {
        const auto r = run_cli("train --data " + (dir / "ds.csv").string() +
                                   " --model kriging --trend-degree 1 --out " +
                                   (dir / "krig.json").string(),
                               dir);
        REQUIRE(r.exit_code == 0);
        const auto j = nlohmann::json::parse(read_file(dir / "krig.json"));
        CHECK(j.at("family").get<std::string>() == "kriging");
        CHECK(j.at("trend_degree").get<int>() == 1);

        run_cli("doe --n 6 --seed 77 --out " + (dir / "probe.csv").string(), dir);
        const auto rp = run_cli("predict --model-file " + (dir / "krig.json").string() +
                                    " --points " + (dir / "probe.csv").string() + " --out " +
                                    (dir / "pred.csv").string(),
                                dir);
        REQUIRE(rp.exit_code == 0);
        const auto rows = detail::read_csv((dir / "pred.csv").string());
        CHECK(rows.front() == std::vector<std::string>{"x1", "x2", "x3", "h", "q_pred"});
        CHECK(rows.size() == 7);

        const auto re = run_cli("evaluate --model-file " + (dir / "krig.json").string() +
                                    " --data " + (dir / "ds.csv").string() +
                                    " --training-size 25",
                                dir);
        REQUIRE(re.exit_code == 0);
        CHECK(re.out.rfind("model_id,training_size,mae,maxae,rmse,r2\nkriging,25,", 0) == 0);
    }
    SECTION("pce and svr also train through the shared surface") {
        for (const std::string family : {"pce", "svr"}) {
            const auto r = run_cli("train --data " + (dir / "ds.csv").string() + " --model " +
                                       family + " --out " + (dir / (family + ".json")).string(),
                                   dir);
            REQUIRE(r.exit_code == 0);
            const auto j = nlohmann::json::parse(read_file(dir / (family + ".json")));
            CHECK(j.at("family").get<std::string>() == family);
        }
    }
}

TEST_CASE("cli: model files round-trip bit-exactly through train/predict") {
    const auto dir = work_dir();
    write_synthetic_dataset(dir / "rt.csv");
    run_cli("train --data " + (dir / "rt.csv").string() + " --model kriging --trend-degree 0 "
            "--out " + (dir / "rt_model.json").string(),
            dir);
    const std::string bytes = read_file(dir / "rt_model.json");
    const auto model = load_model((dir / "rt_model.json").string());
    save_model(model, (dir / "rt_model2.json").string());
    CHECK(read_file(dir / "rt_model2.json") == bytes);
}

TEST_CASE("cli: classify and pf") {
    const auto dir = work_dir();
    write_synthetic_dataset(dir / "cls_ds.csv");
    run_cli("train --data " + (dir / "cls_ds.csv").string() +
                " --model kriging --trend-degree 1 --out " + (dir / "cls.json").string(),
            dir);
    run_cli("doe --n 8 --seed 13 --out " + (dir / "cls_pts.csv").string(), dir);

    const auto rc = run_cli("classify --model-file " + (dir / "cls.json").string() +
                                " --points " + (dir / "cls_pts.csv").string() +
                                " --limit 2e8 --out " + (dir / "labels.csv").string(),
                            dir);
    REQUIRE(rc.exit_code == 0);
    const auto rows = detail::read_csv((dir / "labels.csv").string());
    CHECK(rows.front() == std::vector<std::string>{"x1", "x2", "x3", "h", "g", "label"});
    REQUIRE(rows.size() == 9);
    int safe = 0, failure = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double g = parse_double(rows[i][4]);
        if (rows[i][5] == "safe") {
            CHECK(g > 0);
            ++safe;
        } else {
            CHECK(rows[i][5] == "failure");
            CHECK(g <= 0);
            ++failure;
        }
    }
    CHECK(safe + failure == 8);

    const auto rp = run_cli("pf --model-file " + (dir / "cls.json").string() +
                                " --limit 2e8 --n-mc 5000 --seed 3",
                            dir);
    REQUIRE(rp.exit_code == 0);
    const auto j = nlohmann::json::parse(rp.out);
    CHECK(j.at("n_mc").get<long>() == 5000);
    const double pf = j.at("pf").get<double>();
    CHECK(pf >= 0.0);
    CHECK(pf <= 1.0);

    // determinism of the estimate
    const auto rp2 = run_cli("pf --model-file " + (dir / "cls.json").string() +
                                 " --limit 2e8 --n-mc 5000 --seed 3",
                             dir);
    CHECK(rp2.out == rp.out);
}

TEST_CASE("cli: campaign and report") {
    const auto dir = work_dir();
    const auto rc = run_cli("campaign --sizes 8,10 --validation-size 10 --seed 7 "
                            "--models kriging_p1,pce --out " +
                                (dir / "camp").string(),
                            dir);
    REQUIRE(rc.exit_code == 0);
    const auto rows = detail::read_csv((dir / "camp" / "report.csv").string());
    CHECK(rows.size() == 5); // header + 2 models x 2 sizes
    CHECK(fs::exists(dir / "camp" / "models" / "kriging_p1_n8.json"));
    CHECK(fs::exists(dir / "camp" / "validation.csv"));
    CHECK(fs::exists(dir / "camp" / "r2.csv"));

    const auto rr = run_cli("report --rows " + (dir / "camp" / "report.csv").string() +
                                " --out " + (dir / "repivot").string(),
                            dir);
    REQUIRE(rr.exit_code == 0);
    CHECK(read_file(dir / "repivot" / "mae.csv") == read_file(dir / "camp" / "mae.csv"));
}

TEST_CASE("cli: config file drives the simulator and unknown keys fail") {
    const auto dir = work_dir();
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"stress_limit": 3.5e8, "load_model": {"sweep_step": 0.5}})";
    }
    run_cli("doe --n 1 --seed 2 --out " + (dir / "cfg_pts.csv").string(), dir);
    const auto r = run_cli("simulate --config " + (dir / "cfg.json").string() + " --points " +
                               (dir / "cfg_pts.csv").string() + " --out " +
                               (dir / "cfg_ds.csv").string(),
                           dir);
    REQUIRE(r.exit_code == 0);
    const auto meta = nlohmann::json::parse(read_file(dir / "cfg_ds.meta.json"));
    CHECK(meta.at("solver").at("sweep_step").get<double>() == 0.5);

    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"stress_limitt": 3.5e8})";
    }
    const auto rb = run_cli("simulate --config " + (dir / "bad.json").string() + " --points " +
                                (dir / "cfg_pts.csv").string() + " --out " +
                                (dir / "bad_ds.csv").string(),
                            dir);
    CHECK(rb.exit_code == 2);
    const auto err = nlohmann::json::parse(rb.err);
    CHECK(err.at("error").at("type").get<std::string>() == "validation");
    CHECK(err.at("error").at("message").get<std::string>().find("stress_limitt") !=
          std::string::npos);
}

TEST_CASE("cli: error channel is machine-readable JSON with typed exit codes") {
    const auto dir = work_dir();
    SECTION("missing file -> io error, exit 5") {
        const auto r = run_cli("train --data /nonexistent.csv --out " +
                                   (dir / "x.json").string(),
                               dir);
        CHECK(r.exit_code == 5);
        const auto err = nlohmann::json::parse(r.err);
        CHECK(err.at("error").at("type").get<std::string>() == "io");
    }
    SECTION("bad arguments -> usage error") {
        const auto r = run_cli("doe --n 5", dir); // --out missing
        CHECK(r.exit_code != 0);
        const auto err = nlohmann::json::parse(r.err);
        CHECK(err.at("error").at("type").get<std::string>() == "usage");
    }
    SECTION("invalid sample count -> validation error, exit 2") {
        const auto r = run_cli("doe --n 0 --out " + (dir / "zero.csv").string(), dir);
        CHECK(r.exit_code == 2);
        const auto err = nlohmann::json::parse(r.err);
        CHECK(err.at("error").at("type").get<std::string>() == "validation");
    }
}
