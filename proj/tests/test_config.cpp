#include "doctest.h"

#include "patsim/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace patsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path root;
    TempDir() {
        root = fs::temp_directory_path() / ("patsim_cfg_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(root);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = root / name;
        fs::create_directories(p.parent_path());
        std::ofstream(p) << text;
        return p;
    }
};

const char* two_site_model = R"({
  "lattice": {"L1": 2, "L2": 1, "coupling": {"kind": "Explicit", "entries": [{"i": [1, 0], "j": [0, 0], "J": 0.01}]}},
  "drive": {"delta_omega": 0.5, "eta_d": 1.0, "omega_d": 0.5, "phi1": 3.141592653589793}
})";

std::string validation_path(const std::function<void()>& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e.path;
    }
    return "<no error>";
}

}  // namespace

TEST_CASE("includes are merged with local keys on top") {
    TempDir d;
    d.write("common/base.json", R"({"model": {"drive": {"omega_d": 0.5, "phi1": 1.0}}, "engine": "full"})");
    d.write("common/extra.json", R"({"model": {"drive": {"phi1": 2.0}}, "seed": 7})");
    const auto top = d.write("s.json", R"({
      // comments are allowed
      "$include": ["common/base.json", "common/extra.json"],
      "model": {"drive": {"phi2": 3.0}},
      "engine": "effective"
    })");
    const Json j = load_config(top);
    CHECK(j["model"]["drive"]["omega_d"] == 0.5);
    CHECK(j["model"]["drive"]["phi1"] == 2.0);
    CHECK(j["model"]["drive"]["phi2"] == 3.0);
    CHECK(j["engine"] == "effective");
    CHECK(j["seed"] == 7);
    CHECK_FALSE(j.contains("$include"));
}

TEST_CASE("nested includes resolve relative to the including file") {
    TempDir d;
    d.write("a/inner.json", R"({"x": 1})");
    d.write("a/outer.json", R"({"$include": "inner.json", "y": 2})");
    const auto top = d.write("top.json", R"({"$include": "a/outer.json", "z": 3})");
    const Json j = load_config(top);
    CHECK(j["x"] == 1);
    CHECK(j["y"] == 2);
    CHECK(j["z"] == 3);
}

TEST_CASE("include cycles and bad files are rejected") {
    TempDir d;
    d.write("a.json", R"({"$include": "b.json"})");
    d.write("b.json", R"({"$include": "a.json"})");
    CHECK_THROWS_AS(load_config(d.root / "a.json"), ValidationError);
    const auto self = d.write("self.json", R"({"$include": "self.json"})");
    CHECK_THROWS_AS(load_config(self), ValidationError);
    CHECK_THROWS_AS(load_config(d.root / "missing.json"), ValidationError);
    const auto bad = d.write("bad.json", R"({"a": )");
    CHECK_THROWS_AS(load_config(bad), ValidationError);
    const auto badinc = d.write("badinc.json", R"({"$include": 5})");
    CHECK_THROWS_AS(load_config(badinc), ValidationError);
}

TEST_CASE("deep merge replaces non-objects and null deletes") {
    Json a = Json::parse(R"({"k": {"x": 1, "y": [1, 2]}, "s": 1, "gone": {"a": 1}})");
    deep_merge(a, Json::parse(R"({"k": {"y": [3]}, "s": {"t": 2}, "gone": null})"));
    CHECK(a["k"]["x"] == 1);
    CHECK(a["k"]["y"] == Json::array({3}));
    CHECK(a["s"]["t"] == 2);
    CHECK_FALSE(a.contains("gone"));
}

TEST_CASE("a local null removes an included key") {
    TempDir d;
    d.write("base.json", R"({"initial": {"kind": "basis", "occupations": [1]}})");
    const auto top = d.write("top.json", R"({"$include": "base.json", "initial": {"kind": "thermal", "occupations": null}})");
    const Json j = load_config(top);
    CHECK(j["initial"]["kind"] == "thermal");
    CHECK_FALSE(j["initial"].contains("occupations"));
}

TEST_CASE("model parsing reports dotted field paths") {
    Json j = Json::parse(two_site_model);
    CHECK_NOTHROW(model_from_json(j));
    j["drive"].erase("omega_d");
    CHECK(validation_path([&] { model_from_json(j); }) == "model.drive.omega_d");
    j = Json::parse(two_site_model);
    j["drive"]["omega_d"] = "fast";
    CHECK(validation_path([&] { model_from_json(j); }) == "model.drive.omega_d");
    j = Json::parse(two_site_model);
    j["drive"]["omega_d"] = 0.3;
    CHECK(validation_path([&] { model_from_json(j); }).rfind("model.drive", 0) == 0);
    j = Json::parse(two_site_model);
    j["lattice"]["colour"] = 1;
    CHECK(validation_path([&] { model_from_json(j); }) == "model.lattice.colour");
    j = Json::parse(two_site_model);
    j["lattice"]["coupling"]["kind"] = "Nearest";
    CHECK(validation_path([&] { model_from_json(j); }) == "model.lattice.coupling.kind");
    j = Json::parse(two_site_model);
    j["mode"] = "Magic";
    CHECK(validation_path([&] { model_from_json(j); }) == "model.mode");
    j = Json::parse(two_site_model);
    j["drive"]["eta_d"] = Json::array({1.0, 2.0});
    CHECK(validation_path([&] { model_from_json(j); }) == "model.drive.eta_d");
}

TEST_CASE("model round trip") {
    Json j = Json::parse(two_site_model);
    j["flavors"] = {"x", "y"};
    j["drive"]["delta_omega"] = {0.5, -0.5};
    j["drive"]["eta_d"] = {1.0, 0.7};
    j["lattice"]["coupling"]["entries"] = Json::parse(
        R"([{"i": [1, 0], "j": [0, 0], "flavor": "x", "J": [0.01, 0.002]}, {"i": [1, 0], "j": [0, 0], "flavor": "y", "J": 0.02}])");
    j["onsite_interactions"] = 0.001;
    j["mode"] = "NonAbelian";
    const ModelSpec a = model_from_json(j);
    const ModelSpec b = model_from_json(model_to_json(a));
    CHECK(model_to_json(a).dump() == model_to_json(b).dump());
    CHECK(b.flavors == std::vector<std::string>{"x", "y"});
    CHECK(b.lattice.coupling.entries[0].J == cplx(0.01, 0.002));
    CHECK(b.lattice.coupling.entries[1].flavor == 1);
    CHECK(b.onsite_interactions.size() == 8);
    CHECK(b.mode == Mode::NonAbelian);

    Json dip = Json::parse(two_site_model);
    dip["lattice"] = Json::parse(R"({"L1": 3, "L2": 3, "coupling": {"kind": "Dipolar", "J0": 0.01, "cutoff_range": 2}})");
    const ModelSpec c = model_from_json(dip);
    CHECK(model_from_json(model_to_json(c)).lattice.coupling.cutoff_range == 2);
}

TEST_CASE("ion parameters round trip") {
    const Json j = Json::parse(R"({
      "axes": ["z"], "trap_hz": {"z": 5e6, "x": 4e6}, "gradient_hz": {"z": 5e4}, "beatnote_hz": 5e4,
      "rabi_hz": 5e5, "lamb_dicke": {"z": 0.3}, "delta_k": [1e5, 0], "L1": 3, "L2": 2,
      "sideband": {"rabi_hz": 1e5, "detuning_hz": 5e5},
      "standing_wave": {"rabi_hz": 2e5, "lamb_dicke": {"z": 0.1}, "delta_k": [0, 0, 1e6]}
    })");
    const IonArrayParams p = ion_from_json(j);
    const IonArrayParams q = ion_from_json(ion_to_json(p));
    CHECK(ion_to_json(p).dump() == ion_to_json(q).dump());
    CHECK(q.delta_k[0] == 1e5);
    CHECK(q.standing_wave->delta_k[2] == 1e6);
    CHECK(q.sideband->detuning_hz == 5e5);
    Json bad = j;
    bad["lamb_dicke"]["z"] = "small";
    CHECK(validation_path([&] { ion_from_json(bad); }) == "ion.lamb_dicke.z");
    bad = j;
    bad.erase("trap_hz");
    CHECK(validation_path([&] { ion_from_json(bad); }) == "ion.trap_hz");
}

TEST_CASE("scenario parsing") {
    Json j;
    j["name"] = "pair";
    j["task"] = "compare";
    j["model"] = Json::parse(two_site_model);
    j["initial"] = Json::parse(R"({"kind": "basis", "occupations": [{"site": [0, 0], "n": 1}]})");
    j["time"] = Json::parse(R"({"t_final_pi": 10, "samples": 11})");
    const Scenario sc = parse_scenario(j);
    CHECK(sc.task == TaskKind::Compare);
    CHECK(sc.engine == EngineChoice::Both);
    CHECK(sc.t_final == doctest::Approx(10 * pi));
    CHECK(sc.initial.occupations == std::vector<std::uint8_t>{1, 0});
    CHECK(sc.outputs.csv == "out/pair.csv");

    Json k = j;
    k.erase("time");
    CHECK(validation_path([&] { parse_scenario(k); }) == "time");
    k = j;
    k["initial"]["occupations"][0]["site"] = {5, 0};
    CHECK(validation_path([&] { parse_scenario(k); }) == "initial.occupations[0].site");
    k = j;
    k["time"]["t_final"] = 3.0;
    CHECK(validation_path([&] { parse_scenario(k); }) == "time.t_final");
    k = j;
    k["task"] = "dance";
    CHECK(validation_path([&] { parse_scenario(k); }) == "task");
    k = j;
    k["bogus"] = 1;
    CHECK(validation_path([&] { parse_scenario(k); }) == "bogus");
}

TEST_CASE("sweep and decorate scenarios") {
    Json j;
    j["task"] = Json::parse(R"({"kind": "sweep", "parameter": "eta_d", "min": 0, "max": 3, "points": 4,
                                "observable": "n_1_0", "horizon": {"scale_pi": 100, "chi": 0}})");
    j["model"] = Json::parse(two_site_model);
    j["model"]["drive"] = Json::parse(R"({"omega_d": 0.5, "eta_d": 1.0})");
    j["initial"] = Json::parse(R"({"kind": "basis", "occupations": [{"site": [0, 0], "n": 1}]})");
    const Scenario sc = parse_scenario(j);
    REQUIRE(sc.sweep);
    CHECK(sc.sweep->points == 4);
    CHECK(sc.sweep->horizon.from_modulation);
    // capped below at |F| = 0.01
    ModelSpec m = *sc.model;
    m.drive.eta_d = {1.2024};
    CHECK(sc.sweep->horizon.evaluate(m) == doctest::Approx(100 * pi / 0.01));

    Json d;
    d["task"] = Json::parse(R"({"kind": "decorate", "pattern": ["+ -", "- +"], "phi1_pi": 1, "phi2_pi": 1})");
    const Scenario sd = parse_scenario(d);
    CHECK(sd.task == TaskKind::Decorate);
    CHECK(sd.deco_phi1 == doctest::Approx(pi));
    CHECK(sd.decoration_pattern == "+ -\n- +\n");
    d["task"]["phi1"] = 1.0;
    CHECK(validation_path([&] { parse_scenario(d); }) == "task.phi1");
}

TEST_CASE("a small run produces the primary table first and the manifest last") {
    Json j;
    j["name"] = "tiny";
    j["task"] = "evolve";
    j["engine"] = "effective";
    j["model"] = Json::parse(two_site_model);
    j["initial"] = Json::parse(R"({"kind": "basis", "occupations": [{"site": [0, 0], "n": 1}]})");
    j["time"] = Json::parse(R"({"t_final": 10, "samples": 3})");
    const auto r = run_scenario(parse_scenario(j), RunFlags{});
    REQUIRE(r.artifacts.size() == 3);
    CHECK(r.artifacts.front().path == "out/tiny.csv");
    CHECK(r.artifacts.front().content.rfind("time,n_0_0,n_1_0,n_total\r\n0,1,0,1\r\n", 0) == 0);
    CHECK(r.artifacts.back().path == "out/tiny.manifest.json");
    CHECK(r.manifest["engine"] == "effective");
    CHECK(r.manifest["space_dim"] == 2);
}
