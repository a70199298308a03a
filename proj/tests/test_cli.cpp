#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fvein/bundle.hpp"
#include "fvein/dataset.hpp"
#include "temp_dir.hpp"

#ifndef FVEIN_CLI_PATH
#error "FVEIN_CLI_PATH must point at the fvein executable"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run(const TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = quote(FVEIN_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

const char* kSmallConfig =
    "image_height = 24\nimage_width = 36\nga_sample_images = 3\nga_population = 6\nga_generations = 2\n"
    "patch_side = 5\npatch_count = 2000\nretained_dim = 16\nhidden_dim = 8\nmax_iterations = 15\n"
    "pool_rows = 2\npool_cols = 2\nfolds = 3\n";

const char* kSmallSynth = "subjects = 4\nfingers = 2\nimage_height = 32\nimage_width = 48\n";

// Shared dataset, config and trained bundle for the slower commands.
struct Workspace {
    TempDir dir{"cli_ws"};
    fs::path config = dir / "p.cfg";
    fs::path data = dir / "data";
    fs::path bundle = dir / "m.fvab";
    Workspace() {
        std::ofstream(config) << kSmallConfig;
        std::ofstream(dir / "s.cfg") << kSmallSynth;
        REQUIRE(run(dir, "synth --quiet " + quote((dir / "s.cfg").string()) + " " + quote(data.string())).status == 0);
        REQUIRE(run(dir, "--quiet --config " + quote(config.string()) + " learn-features " + quote(data.string()) +
                             " " + quote(bundle.string()))
                    .status == 0);
    }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
    TempDir dir("cli_usage");
    CHECK(run(dir, "").status == 2);
    CHECK(run(dir, "no-such-command").status == 2);
    CHECK(run(dir, "verify onlyone").status == 2);
    CHECK(run(dir, "--threads abc print-config").status == 2);
    const auto help = run(dir, "--help");
    CHECK(help.status == 0);
    for (const char* cmd : {"learn-features", "enroll", "verify", "evaluate", "sweep", "synth", "print-config"})
        CHECK(help.out.find(cmd) != std::string::npos);
}

TEST_CASE("print-config and overrides") {
    TempDir dir("cli_print");
    const auto r = run(dir, "print-config");
    CHECK(r.status == 0);
    CHECK(r.out.find("hidden_dim = 4000") != std::string::npos);
    std::ofstream(dir / "round.cfg") << r.out;
    const auto again = run(dir, "--config " + quote((dir / "round.cfg").string()) + " print-config");
    CHECK(again.out == r.out);
    CHECK(run(dir, "--seed 77 print-config").out.find("seed = 77") != std::string::npos);
    CHECK(run(dir, "print-config --synth").out.find("subjects = 20") != std::string::npos);

    std::ofstream(dir / "bad.cfg") << "rho = 2\n";
    const auto bad = run(dir, "--config " + quote((dir / "bad.cfg").string()) + " print-config");
    CHECK(bad.status == 4);
    CHECK(bad.err.find("error[config]") != std::string::npos);
    CHECK(bad.err.find("'rho'") != std::string::npos);
    CHECK(run(dir, "--config " + quote((dir / "none.cfg").string()) + " print-config").status == 3);
}

TEST_CASE("synth defaults load back and repeat byte for byte") {
    TempDir dir("cli_synth");
    REQUIRE(run(dir, "synth - " + quote((dir / "a").string())).status == 0);
    REQUIRE(run(dir, "--quiet synth - " + quote((dir / "b").string())).status == 0);
    const auto recs = fvein::load_dataset(dir / "a");
    CHECK(recs.size() == 20 * 6);
    int compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file()) continue;
        const auto twin = dir / "b" / fs::relative(e.path(), dir / "a");
        CHECK(slurp(e.path()) == slurp(twin));
        ++compared;
    }
    CHECK(compared == 120);
}

TEST_CASE("synth errors") {
    TempDir dir("cli_synth_err");
    std::ofstream(dir / "zero.cfg") << "subjects = 0\n";
    const auto r = run(dir, "synth " + quote((dir / "zero.cfg").string()) + " " + quote((dir / "out").string()));
    CHECK(r.status == 4);
    CHECK(r.err.find("subjects") != std::string::npos);
    std::ofstream(dir / "blocker") << "file";
    CHECK(run(dir, "synth - " + quote((dir / "blocker" / "sub").string())).status == 3);
}

TEST_CASE("learn-features with a missing dataset") {
    TempDir dir("cli_missing");
    const auto missing = (dir / "nowhere").string();
    const auto r = run(dir, "learn-features " + quote(missing) + " " + quote((dir / "m.fvab").string()));
    CHECK(r.status == 3);
    CHECK(r.err.find("error[io]") != std::string::npos);
    CHECK(r.err.find(missing) != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("learn-features writes a loadable bundle and summary") {
    auto& ws = workspace();
    const auto b = fvein::load_bundle(ws.bundle);
    CHECK(b.autoencoder.hidden_dim() == 8);
    const auto r = run(ws.dir, "--config " + quote(ws.config.string()) + " learn-features " + quote(ws.data.string()) +
                                   " " + quote((ws.dir / "again.fvab").string()));
    CHECK(r.status == 0);
    CHECK(r.out.find("hidden_dim 8, iterations 15") != std::string::npos);
    CHECK(r.out.find("final cost") != std::string::npos);
    CHECK(r.out.find("wall time") != std::string::npos);
    CHECK(slurp(ws.dir / "again.fvab") == slurp(ws.bundle));
}

TEST_CASE("enroll and verify") {
    auto& ws = workspace();
    const auto copy = ws.dir / "enrolled.fvab";
    fs::copy_file(ws.bundle, copy, fs::copy_options::overwrite_existing);
    const auto q = quote(copy.string());

    CHECK(run(ws.dir, "enroll " + q + " " + quote(ws.data.string()) + " 001 002").status == 0);
    CHECK(fvein::load_bundle(copy).user_models.size() == 2);

    const auto re = run(ws.dir, "enroll " + q + " " + quote(ws.data.string()) + " 002");
    CHECK(re.status == 0);
    CHECK(re.err.find("warning") != std::string::npos);
    CHECK(re.err.find("002") != std::string::npos);

    const auto unknown = run(ws.dir, "enroll " + q + " " + quote(ws.data.string()) + " 042");
    CHECK(unknown.status == 4);
    CHECK(unknown.err.find("001, 002, 003, 004") != std::string::npos);

    for (const char* probe : {"001/right/index_5.bmp", "003/right/index_5.bmp"}) {
        const auto v = run(ws.dir, "verify " + q + " 001 " + quote((ws.data / probe).string()));
        REQUIRE((v.status == 0 || v.status == 1));
        CHECK(v.out.rfind(v.status == 0 ? "ACCEPT score " : "REJECT score ", 0) == 0);
        CHECK(v.out.find(" threshold ") != std::string::npos);
    }

    const auto unenrolled = run(ws.dir, "verify " + q + " 004 " + quote((ws.data / "004/right/index_1.bmp").string()));
    CHECK(unenrolled.status == 4);
    CHECK(unenrolled.out.empty());
    CHECK(run(ws.dir, "verify " + q + " 001 " + quote((ws.dir / "missing.bmp").string())).status == 3);
    CHECK(run(ws.dir, "verify " + quote((ws.dir / "missing.fvab").string()) + " 001 x.bmp").status == 3);

    std::ofstream(ws.dir / "junk.fvab") << "JUNKJUNKJUNK";
    const auto junk = run(ws.dir, "verify " + quote((ws.dir / "junk.fvab").string()) + " 001 x.bmp");
    CHECK(junk.status == 4);
    CHECK(junk.err.find("error[corruption]") != std::string::npos);
}

TEST_CASE("evaluate writes both report formats") {
    auto& ws = workspace();
    const auto report = ws.dir / "eval.csv";
    const auto r = run(ws.dir, "evaluate " + quote(ws.bundle.string()) + " " + quote(ws.data.string()) + " " +
                                   quote(report.string()));
    CHECK(r.status == 0);
    CHECK(r.out.find("mean EER") != std::string::npos);
    CHECK(r.out.find("Iteration/Hidden") != std::string::npos);
    const auto csv = slurp(report);
    CHECK(csv.rfind("hidden_size,iterations,fold,eer,auc\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 3 + 1);
    CHECK(fs::exists(ws.dir / "eval.csv.txt"));

    const auto twice = run(ws.dir, "evaluate " + quote(ws.bundle.string()) + " " + quote(ws.data.string()) + " " +
                                       quote((ws.dir / "eval2.csv").string()));
    CHECK(twice.status == 0);
    CHECK(slurp(ws.dir / "eval2.csv") == csv);

    const auto bad = run(ws.dir, "evaluate " + quote(ws.bundle.string()) + " " + quote((ws.dir / "nope").string()) +
                                     " " + quote((ws.dir / "eval3.csv").string()));
    CHECK(bad.status == 3);
    CHECK(bad.out.empty());
    CHECK_FALSE(fs::exists(ws.dir / "eval3.csv"));
}

TEST_CASE("sweep over a two-by-two grid") {
    auto& ws = workspace();
    const auto report = ws.dir / "sweep.csv";
    const auto r = run(ws.dir, "--quiet --threads 1 --config " + quote(ws.config.string()) + " sweep " +
                                   quote(ws.data.string()) + " " + quote(report.string()) +
                                   " --hidden-sizes 4,6 --iterations 3,6");
    REQUIRE(r.status == 0);
    const auto csv = slurp(report);
    CHECK(count_lines(csv) == 1 + 4 * (3 + 1));
    for (const char* cell : {"4,3,mean", "4,6,mean", "6,3,mean", "6,6,mean"}) CHECK(csv.find(cell) != std::string::npos);
}

}
