#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const char* kCli = RFDIS_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunResult run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string command = std::string(kCli) + " " + args + " >" + out_path.string() +
                              " 2>" + err_path.string();
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("rfdis_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("cli end to end") {
  TempDir tmp("e2e");

  // Materialize a synthetic dataset through the CLI itself.
  const RunResult synth =
      run_cli(tmp.path, "synth complementary --n 96 --seed 5 --out-dir " +
                            (tmp.path / "data").string());
  REQUIRE(synth.exit_code == 0);
  const std::string manifest = (tmp.path / "data" / "complementary_manifest.json").string();
  REQUIRE(fs::exists(manifest));

  SUBCASE("validate accepts a clean manifest") {
    const RunResult r = run_cli(tmp.path, "validate " + manifest);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("instances 96") != std::string::npos);
    CHECK(r.out.find("views 2") != std::string::npos);
    CHECK(r.out.find("classes 4") != std::string::npos);
  }

  SUBCASE("validate rejects mismatched rows with a machine-parseable reason") {
    // Drop the last label line.
    const fs::path labels = tmp.path / "data" / "complementary_labels.csv";
    std::ifstream in(labels);
    std::string content, line;
    int count = 0;
    while (std::getline(in, line)) {
      if (++count <= 95) content += line + "\n";
    }
    in.close();
    write_file(labels, content);
    const RunResult r = run_cli(tmp.path, "validate " + manifest);
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("rfdis: error kind=validation", 0) == 0);
  }

  SUBCASE("bench reports are byte-identical across thread counts") {
    write_file(tmp.path / "cfg.json",
               "{\n"
               "  \"manifests\": [\"" + manifest + "\"],\n"
               "  \"methods\": [\"avg\", \"sw_3nn\", \"sw_ka\", \"sw_oob\", \"dcs_rfd\"],\n"
               "  \"trees\": 16,\n  \"runs\": 2,\n  \"kappa\": 3,\n  \"k\": 5,\n  \"seed\": 7\n"
               "}\n");
    const RunResult r1 =
        run_cli(tmp.path, "--threads 1 bench " + (tmp.path / "cfg.json").string() +
                              " --out-prefix " + (tmp.path / "one").string());
    REQUIRE(r1.exit_code == 0);
    const RunResult r2 =
        run_cli(tmp.path, "--threads 2 bench " + (tmp.path / "cfg.json").string() +
                              " --out-prefix " + (tmp.path / "two").string());
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(tmp.path / "one.json") == slurp(tmp.path / "two.json"));
    CHECK(slurp(tmp.path / "one.csv") == slurp(tmp.path / "two.csv"));
    CHECK_FALSE(slurp(tmp.path / "one.json").empty());

    // One CSV row per method.
    std::istringstream csv(slurp(tmp.path / "one.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 1 + 5);
  }

  SUBCASE("train, predict and inspect round trip") {
    write_file(tmp.path / "train.json",
               "{\n"
               "  \"manifests\": [\"" + manifest + "\"],\n"
               "  \"methods\": [\"sw_oob\"],\n"
               "  \"trees\": 16,\n  \"kappa\": 3,\n  \"seed\": 3\n"
               "}\n");
    const fs::path model = tmp.path / "model.rfdis";
    const RunResult train =
        run_cli(tmp.path, "train " + (tmp.path / "train.json").string() + " --out " +
                              model.string());
    REQUIRE(train.exit_code == 0);
    REQUIRE(fs::exists(model));

    const fs::path predictions = tmp.path / "pred.csv";
    const RunResult predict = run_cli(
        tmp.path, "predict " + model.string() + " " + manifest + " --out " + predictions.string());
    CHECK(predict.exit_code == 0);
    CHECK(predict.err.find("accuracy") != std::string::npos);
    std::istringstream pred_csv(slurp(predictions));
    std::string line;
    std::getline(pred_csv, line);
    CHECK(line == "instance,prediction");
    int rows = 0;
    while (std::getline(pred_csv, line)) ++rows;
    CHECK(rows == 96);

    // A DCS model through the same interface.
    const fs::path dcs_model = tmp.path / "dcs.rfdis";
    const RunResult train_dcs =
        run_cli(tmp.path, "train " + (tmp.path / "train.json").string() + " --method dcs_rfd" +
                              " --k 5 --out " + dcs_model.string());
    REQUIRE(train_dcs.exit_code == 0);
    const RunResult predict_dcs =
        run_cli(tmp.path, "predict " + dcs_model.string() + " " + manifest);
    CHECK(predict_dcs.exit_code == 0);

    const RunResult inspect =
        run_cli(tmp.path, "inspect " + (tmp.path / "train.json").string() +
                              " --method avg --method dcs_rfd --k 5 --out-dir " +
                              (tmp.path / "insp").string());
    CHECK(inspect.exit_code == 0);
    CHECK(fs::exists(tmp.path / "insp" / "complementary_weights.json"));
    CHECK(fs::exists(tmp.path / "insp" / "complementary_joint_avg.csv"));
    CHECK(fs::exists(tmp.path / "insp" / "complementary_dcs_transcript.jsonl"));
  }

  SUBCASE("usage errors exit 1") {
    const RunResult r = run_cli(tmp.path, "bogus-subcommand");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("kind=usage") != std::string::npos);
  }

  SUBCASE("missing config exits 2") {
    const RunResult r = run_cli(tmp.path, "bench " + (tmp.path / "absent.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("rfdis: error kind=validation", 0) == 0);
  }
}
