#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "palg/cli.hpp"
#include "palg/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = palg::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("palg_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& doc) {
  const fs::path p = dir / name;
  palg::write_text(p, doc.dump());
  return p;
}

std::string slurp(const fs::path& p) {
  const auto bytes = palg::read_file(p);
  return {bytes.begin(), bytes.end()};
}

Run cmd(const std::string& sub, const fs::path& config, const fs::path& out) {
  return run({sub, "--config", config.string(), "--out", out.string(), "--quiet"});
}

}  // namespace

TEST_CASE("unknown config keys exit with code 2 and name the key") {
  const auto dir = scratch("badkey");
  const auto cfg = write_config(dir, "gen.json", {{"seed", 1}, {"noise_sigmaa", 0.2}});
  const auto r = cmd("gen", cfg, dir / "out");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: kind=config code=2 ", 0) == 0);
  CHECK(r.err.find("noise_sigmaa") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  const auto nested = write_config(dir, "train.json",
                                   {{"manifest", "x"}, {"view", "object"}, {"train", {{"epochz", 3}}}});
  // The manifest is loaded first, so a missing file wins over the bad key.
  CHECK(cmd("train", nested, dir / "out").code == 3);
}

TEST_CASE("the installed binary reports the same exit code") {
  const auto dir = scratch("binary");
  const auto cfg = write_config(dir, "gen.json", {{"bogus", true}});
  const std::string command = std::string(PALG_BINARY) + " gen --config " + cfg.string() + " --out " +
                              (dir / "out").string() + " 2> " + (dir / "err.txt").string();
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(slurp(dir / "err.txt").find("'bogus'") != std::string::npos);
}

TEST_CASE("error classes map to exit codes") {
  const auto dir = scratch("codes");
  CHECK(cmd("gen", dir / "missing.json", dir / "out").code == 3);
  palg::write_text(dir / "broken.json", "{ not json");
  CHECK(cmd("gen", dir / "broken.json", dir / "out").code == 2);
  CHECK(run({"gen"}).code == 2);
  CHECK(run({"frobnicate", "--config", "x"}).code == 2);
  const auto small = write_config(dir, "small.json", {{"d", 8}});
  CHECK(cmd("gen", small, dir / "out").code == 2);
}

TEST_CASE("gen, train, compose and eval pipeline") {
  const auto dir = scratch("pipeline");
  const auto out = dir / "out";
  REQUIRE(cmd("gen", write_config(dir, "gen.json", {{"seed", 3}}), out).code == 0);
  const auto manifest = (out / "dataset" / "manifest.json").string();

  SUBCASE("prompt-free eval on zero-noise data is perfect") {
    const auto r = cmd("eval", write_config(dir, "eval.json", {{"manifest", manifest}, {"name", "zs"}}), out);
    REQUIRE(r.code == 0);
    const auto doc = json::parse(slurp(out / "results" / "zs.json"));
    const auto& summary = doc["models"][0]["summary"];
    CHECK(doc["models"][0]["model"] == "zero-shot");
    CHECK(summary["acc/object"]["mean"].get<double>() == 1.0);
    CHECK(summary["acc/attribute"]["mean"].get<double>() == 1.0);
    CHECK(slurp(out / "results" / "zs.tsv").find("zero-shot\tacc/object\t1\t0\t1\n") != std::string::npos);
  }

  SUBCASE("identity composition reproduces the trained prompt's metrics") {
    const json train{{"manifest", manifest}, {"view", "object"}, {"name", "obj"},
                     {"train", {{"epochs", 4}, {"batch_size", 64}}}};
    REQUIRE(cmd("train", write_config(dir, "train.json", train), out).code == 0);
    const auto trained = (out / "prompts" / "obj.prompt").string();
    REQUIRE(cmd("compose", write_config(dir, "compose.json", {{"prompts", {trained}}, {"weights", {1.0}}, {"name", "id"}}), out).code == 0);
    const auto composed = (out / "prompts" / "id.prompt").string();
    REQUIRE(palg::load_prompt(composed).values == palg::load_prompt(trained).values);

    const json eval{{"manifest", manifest}, {"models", {{"direct", {trained}}, {"composed", {composed}}}}, {"name", "cmp"}};
    REQUIRE(cmd("eval", write_config(dir, "eval2.json", eval), out).code == 0);
    const auto doc = json::parse(slurp(out / "results" / "cmp.json"));
    CHECK(doc["models"][0]["summary"] == doc["models"][1]["summary"]);
    CHECK(slurp(out / "logs" / "obj.jsonl").find("\"epoch\":3") != std::string::npos);
  }

  SUBCASE("outputs carry the config hash") {
    const auto cfg = write_config(dir, "spectra.json", {{"manifest", manifest}});
    const auto r = run({"spectra", "--config", cfg.string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("m=") != std::string::npos);
    CHECK(r.out.find("retained_energy=") != std::string::npos);
    const auto tsv = slurp(out / "results" / "basis_eigenvalues.tsv");
    const auto hash_line = tsv.substr(0, tsv.find('\n'));
    CHECK(hash_line.rfind("# config_hash=", 0) == 0);
    const auto hex = hash_line.substr(14);
    CHECK(std::stoull(hex, nullptr, 16) == json::parse(slurp(out / "bases" / "basis.json"))["config_hash"].get<std::uint64_t>());

    const json train{{"manifest", manifest}, {"view", "attribute"}, {"name", "attr"},
                     {"basis", (out / "bases" / "basis.json").string()},
                     {"train", {{"epochs", 2}, {"use_projection", true}}},
                     {"regularizer", {{"kind", "ca"}}}};
    REQUIRE(cmd("train", write_config(dir, "t.json", train), out).code == 0);
    const auto p = palg::load_prompt(out / "prompts" / "attr.prompt");
    CHECK(p.config_hash != 0);
    CHECK(p.trained_with_projection);
    CHECK(p.basis_fingerprint == palg::load_basis(out / "bases" / "basis.json").fingerprint());

    // Projected prompts refuse an unconstrained composition partner.
    const json t2{{"manifest", manifest}, {"view", "object"}, {"name", "free"}, {"train", {{"epochs", 1}}}};
    REQUIRE(cmd("train", write_config(dir, "t2.json", t2), out).code == 0);
    const json mix{{"prompts", {(out / "prompts" / "attr.prompt").string(), (out / "prompts" / "free.prompt").string()}},
                   {"basis", (out / "bases" / "basis.json").string()}};
    const auto bad = cmd("compose", write_config(dir, "mix.json", mix), out);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("kind=compatibility") != std::string::npos);
  }

  SUBCASE("seed override changes the hash and the prompt") {
    const json train{{"manifest", manifest}, {"view", "object"}, {"name", "s"}, {"train", {{"epochs", 1}}}};
    const auto cfg = write_config(dir, "seeded.json", train);
    REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "a").string(), "--quiet"}).code == 0);
    REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "b").string(), "--quiet", "--seed", "5"}).code == 0);
    const auto a = palg::load_prompt(dir / "a" / "prompts" / "s.prompt");
    const auto b = palg::load_prompt(dir / "b" / "prompts" / "s.prompt");
    CHECK(a.config_hash != b.config_hash);
    CHECK(a.values != b.values);
  }

  SUBCASE("sweep and continual write their tables") {
    const json t1{{"manifest", manifest}, {"view", "object"}, {"name", "o"}, {"train", {{"epochs", 1}}}};
    const json t2{{"manifest", manifest}, {"view", "attribute"}, {"name", "a"}, {"train", {{"epochs", 1}}}};
    REQUIRE(cmd("train", write_config(dir, "o.json", t1), out).code == 0);
    REQUIRE(cmd("train", write_config(dir, "a.json", t2), out).code == 0);
    const json sweep{{"manifest", manifest}, {"prompt_a", (out / "prompts" / "o.prompt").string()},
                     {"prompt_b", (out / "prompts" / "a.prompt").string()}, {"grid", {0.0, 0.25, 1.0}}};
    REQUIRE(cmd("sweep", write_config(dir, "sweep.json", sweep), out).code == 0);
    const auto tsv = slurp(out / "results" / "sweep.tsv");
    CHECK(tsv.find("\ntheta\tmetric\tvalue\n") != std::string::npos);
    CHECK(tsv.find("0.25\tpair/auc\t") != std::string::npos);

    const json cont{{"manifest", manifest}, {"view", "object"}, {"n_steps", 2}, {"classes_per_step", 4},
                    {"train", {{"epochs", 2}}}};
    REQUIRE(cmd("continual", write_config(dir, "cont.json", cont), out).code == 0);
    const auto doc = json::parse(slurp(out / "results" / "continual.json"));
    CHECK(doc["per_step"].size() == 2);
    CHECK(doc["last_acc"].get<double>() == 1.0);
    CHECK(fs::exists(out / "prompts" / "continual.final.prompt"));
  }
}
